//! Channel synthesis: free-space path loss, UPA array responses, per-band
//! satellite-to-UE vector channels, UE-to-UE scalar channels, and the
//! matched-filter beamformers.
//!
//! All channels are pure line-of-sight. Long-term statistical effects can be
//! folded into the path-loss factor without touching anything else here.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scenario::{geometry_of, Scenario, UeUeBandConvention, SPEED_OF_LIGHT};

/// Planar antenna array described by its element coordinates.
#[derive(Debug, Clone)]
pub struct ArrayGeometry {
    /// Per-element (x, y) coordinates in meters, length N.
    pub element_positions: Vec<(f64, f64)>,
}

impl ArrayGeometry {
    /// Regular UPA grid of `nx` by `ny` elements with the given spacing.
    pub fn upa(nx: usize, ny: usize, spacing_m: f64) -> Self {
        let mut element_positions = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                element_positions.push((ix as f64 * spacing_m, iy as f64 * spacing_m));
            }
        }
        Self { element_positions }
    }

    /// Number of elements N.
    pub fn len(&self) -> usize {
        self.element_positions.len()
    }

    /// True when the array has no elements.
    pub fn is_empty(&self) -> bool {
        self.element_positions.is_empty()
    }
}

/// Free-space power gain `(c / (4 pi d f))^2`.
pub fn path_loss(distance_m: f64, frequency_hz: f64) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::DegenerateChannel(format!(
            "path loss needs positive distance, got {distance_m}"
        )));
    }
    if !(frequency_hz > 0.0) {
        return Err(Error::DegenerateChannel(format!(
            "path loss needs positive frequency, got {frequency_hz}"
        )));
    }
    let a = SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * distance_m * frequency_hz);
    Ok(a * a)
}

/// UPA steering vector toward `(azimuth, elevation)` at the given carrier.
///
/// Entry n is `exp(-i 2 pi f / c (Dx_n psi_x + Dy_n psi_y))` with
/// `psi_x = cos(el) cos(az)`, `psi_y = cos(el) sin(az)`; every entry has
/// unit modulus.
pub fn array_response(
    array: &ArrayGeometry,
    frequency_hz: f64,
    azimuth: f64,
    elevation: f64,
) -> Result<Vec<Complex64>> {
    if array.is_empty() {
        return Err(Error::DegenerateChannel("empty array".into()));
    }
    if !(frequency_hz > 0.0) {
        return Err(Error::DegenerateChannel("non-positive frequency".into()));
    }
    let psi_x = elevation.cos() * azimuth.cos();
    let psi_y = elevation.cos() * azimuth.sin();
    let wave = 2.0 * std::f64::consts::PI * frequency_hz / SPEED_OF_LIGHT;
    Ok(array
        .element_positions
        .iter()
        .map(|&(dx, dy)| {
            let phase = -wave * (dx * psi_x + dy * psi_y);
            Complex64::from_polar(1.0, phase)
        })
        .collect())
}

/// LOS channel from satellite `j` to UE `k` on band `l` (0-based):
/// `sqrt(path_loss) * array_response` at the link geometry.
pub fn sat_ue_channel(
    scenario: &Scenario,
    array: &ArrayGeometry,
    k: usize,
    j: usize,
    l: usize,
) -> Result<Vec<Complex64>> {
    if l >= 2 {
        return Err(Error::IndexOutOfRange(format!("band index {l}")));
    }
    let (m, az, el) = geometry_of(scenario, k, j)?;
    let f = scenario.bands.frequency(l);
    let beta = path_loss(m, f)?;
    let amp = beta.sqrt();
    let mut b = array_response(array, f, az, el)?;
    for e in &mut b {
        *e *= amp;
    }
    Ok(b)
}

/// Scalar LOS channel between UEs `k` and `k'` on band `l`.
///
/// Only the squared magnitude of this channel enters any objective, so the
/// phase is fixed to zero and the value is real non-negative; alternate
/// channel models may add a phase here.
pub fn ue_ue_channel(scenario: &Scenario, k: usize, k_other: usize, l: usize) -> Result<f64> {
    if k == k_other {
        return Err(Error::DegenerateChannel(format!("no self-channel for UE {k}")));
    }
    if k >= scenario.ue_count() || k_other >= scenario.ue_count() {
        return Err(Error::IndexOutOfRange(format!("UE pair ({k}, {k_other})")));
    }
    if l >= 2 {
        return Err(Error::IndexOutOfRange(format!("band index {l}")));
    }
    let a = &scenario.ues[k].position;
    let b = &scenario.ues[k_other].position;
    let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
    Ok(path_loss(d, scenario.bands.frequency(l))?.sqrt())
}

/// Unit-norm MRT precoder for a direct channel: `conj(h) / ||h||`.
///
/// Satisfies `h^T w = ||h||` exactly, which makes the desired-signal term of
/// the received-signal model real and positive.
pub fn mrt_precoder(h_direct: &[Complex64]) -> Result<Vec<Complex64>> {
    let norm = vec_norm(h_direct);
    if norm == 0.0 {
        return Err(Error::DegenerateChannel("zero-norm channel has no precoder".into()));
    }
    Ok(h_direct.iter().map(|&e| e.conj() / norm).collect())
}

/// Unit-norm MRC combiner; identical construction to [`mrt_precoder`]
/// applied to the direct UL channel.
pub fn mrc_combiner(h_direct: &[Complex64]) -> Result<Vec<Complex64>> {
    mrt_precoder(h_direct)
}

/// Euclidean norm of a complex vector.
pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt()
}

/// Unconjugated inner product `a^T b`.
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// All channels of one snapshot: per-(k, j, band) satellite-UE vectors and
/// per-(k, k', band) UE-UE scalars.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    k_count: usize,
    j_count: usize,
    /// `h[(k * J + j) * 2 + l]`, each of length N.
    h: Vec<Vec<Complex64>>,
    /// `g[(k * K + k') * 2 + l]`, real non-negative, symmetric in (k, k').
    g: Vec<f64>,
    /// UE-UE band convention copied from the scenario.
    pub ue_ue_band_convention: UeUeBandConvention,
}

impl ChannelSet {
    /// Synthesize every channel of the scenario.
    pub fn synthesize(scenario: &Scenario) -> Result<Self> {
        let k_count = scenario.ue_count();
        let j_count = scenario.sat_count();
        let mut h = Vec::with_capacity(k_count * j_count * 2);
        for k in 0..k_count {
            for j in 0..j_count {
                let sat = &scenario.satellites[j];
                let array = ArrayGeometry::upa(
                    sat.antenna_count_x,
                    sat.antenna_count_y,
                    sat.element_spacing_m,
                );
                for l in 0..2 {
                    h.push(sat_ue_channel(scenario, &array, k, j, l)?);
                }
            }
        }
        let mut g = vec![0.0; k_count * k_count * 2];
        for k in 0..k_count {
            for k2 in (k + 1)..k_count {
                for l in 0..2 {
                    let v = ue_ue_channel(scenario, k, k2, l)?;
                    g[(k * k_count + k2) * 2 + l] = v;
                    g[(k2 * k_count + k) * 2 + l] = v;
                }
            }
        }
        Ok(Self {
            k_count,
            j_count,
            h,
            g,
            ue_ue_band_convention: scenario.ue_ue_band_convention,
        })
    }

    /// Number of UEs.
    pub fn ue_count(&self) -> usize {
        self.k_count
    }

    /// Number of satellites.
    pub fn sat_count(&self) -> usize {
        self.j_count
    }

    /// Satellite-UE vector channel for `(k, j)` on band `l` (0-based).
    pub fn sat_ue(&self, k: usize, j: usize, l: usize) -> &[Complex64] {
        &self.h[(k * self.j_count + j) * 2 + l]
    }

    /// UE-UE scalar channel between `k` and `k'` on band `l` (0-based).
    pub fn ue_ue(&self, k: usize, k_other: usize, l: usize) -> f64 {
        self.g[(k * self.k_count + k_other) * 2 + l]
    }
}
