//! Single-snapshot scenario construction.
//!
//! A scenario fixes the satellite constellation geometry, a random UE drop,
//! the two-band frequency plan, and the power/noise budgets for one
//! optimization snapshot. Construction is deterministic: identical
//! `(config, seed)` pairs yield bit-identical scenarios.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Boltzmann constant in J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Reference receiver temperature for the default thermal noise floor (K).
const NOISE_TEMPERATURE_K: f64 = 290.0;

/// Minimum allowed UE separation in meters; the free-space UE-UE channel
/// diverges for co-located terminals.
pub const MIN_UE_SEPARATION_M: f64 = 0.1;

/// Band selection convention for the UE-to-UE effective channel.
///
/// The two conventions differ only in which band's path loss is applied to a
/// cross-spin UE pair; see [`crate::coupling::ue_ue_effective`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UeUeBandConvention {
    /// Band keyed on the interferer's serving-satellite spin (default).
    #[default]
    Paper,
    /// Band keyed on the victim's serving-satellite spin, i.e. the band the
    /// collision physically occurs on.
    Physical,
}

/// Two-band FDD frequency plan.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BandPlan {
    /// Carrier frequency of band 1 (Hz).
    pub f1_hz: f64,
    /// Carrier frequency of band 2 (Hz).
    pub f2_hz: f64,
    /// Bandwidth of band 1 (Hz).
    pub b1_hz: f64,
    /// Bandwidth of band 2 (Hz).
    pub b2_hz: f64,
}

impl BandPlan {
    /// Carrier frequency of the given band index (0 = band 1, 1 = band 2).
    pub fn frequency(&self, band: usize) -> f64 {
        match band {
            0 => self.f1_hz,
            _ => self.f2_hz,
        }
    }
}

/// One satellite's position and antenna array description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SatelliteGeometry {
    /// Cartesian position in the region-centered frame (m); z is up.
    pub position: [f64; 3],
    /// Antenna elements along the local x axis.
    pub antenna_count_x: usize,
    /// Antenna elements along the local y axis.
    pub antenna_count_y: usize,
    /// Inter-element spacing (m).
    pub element_spacing_m: f64,
}

impl SatelliteGeometry {
    /// Total number of array elements.
    pub fn antenna_count(&self) -> usize {
        self.antenna_count_x * self.antenna_count_y
    }
}

/// One UE's position on the ground plane z = 0.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct UePosition {
    /// Cartesian position in the region-centered frame (m).
    pub position: [f64; 3],
}

/// A fully constructed single-snapshot scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    /// Satellites (length J).
    pub satellites: Vec<SatelliteGeometry>,
    /// User terminals (length K).
    pub ues: Vec<UePosition>,
    /// Frequency plan.
    pub bands: BandPlan,
    /// Per-satellite DL power budget (W).
    pub p_sat_max_w: f64,
    /// Per-UE UL power budget (W).
    pub p_ue_max_w: f64,
    /// Receiver noise power (W).
    pub noise_variance_w: f64,
    /// Seed the UE drop was generated from.
    pub seed: u64,
    /// UE-UE band selection convention.
    pub ue_ue_band_convention: UeUeBandConvention,
}

impl Scenario {
    /// Number of satellites J.
    pub fn sat_count(&self) -> usize {
        self.satellites.len()
    }

    /// Number of UEs K.
    pub fn ue_count(&self) -> usize {
        self.ues.len()
    }
}

/// Satellite placement as seen from the region center.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SatellitePlacement {
    /// Elevation above the horizon, degrees in (0, 90].
    pub elevation_deg: f64,
    /// Azimuth from the +x axis toward +y, degrees.
    pub azimuth_deg: f64,
}

/// Geodetic region center, carried as metadata only.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RegionCenter {
    /// Latitude in degrees.
    pub lat_deg: f64,
    /// Longitude in degrees.
    pub lon_deg: f64,
}

/// Band plan as it appears in config files.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BandConfig {
    /// Carrier frequency of band 1 (Hz).
    pub f1_hz: f64,
    /// Carrier frequency of band 2 (Hz).
    pub f2_hz: f64,
    /// Bandwidth of band 1 (Hz).
    pub b1_hz: f64,
    /// Bandwidth of band 2 (Hz).
    pub b2_hz: f64,
}

fn default_antenna_count() -> usize {
    16
}

/// Declarative scenario description, loadable from TOML or JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Satellite placements (length J).
    pub satellites: Vec<SatellitePlacement>,
    /// Constellation altitude (m).
    pub altitude_m: f64,
    /// Number of UEs to drop.
    pub ue_count: usize,
    /// Radius of the circular UE drop region (m).
    pub region_radius_m: f64,
    /// Geodetic center of the region; metadata only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_center: Option<RegionCenter>,
    /// Frequency plan.
    pub bands: BandConfig,
    /// Per-satellite DL power budget (W).
    pub p_sat_max_w: f64,
    /// Per-UE UL power budget (W).
    pub p_ue_max_w: f64,
    /// Receiver noise power (W); defaults to the thermal floor
    /// `k_B * 290 K * b1_hz`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_variance_w: Option<f64>,
    /// Default RNG seed for the UE drop.
    #[serde(default)]
    pub seed: u64,
    /// UPA elements along x (default 16).
    #[serde(default = "default_antenna_count")]
    pub antenna_count_x: usize,
    /// UPA elements along y (default 16).
    #[serde(default = "default_antenna_count")]
    pub antenna_count_y: usize,
    /// Inter-element spacing (m); defaults to half a wavelength at the
    /// higher of the two carrier frequencies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_spacing_m: Option<f64>,
    /// UE-UE band selection convention.
    #[serde(default)]
    pub ue_ue_band_convention: UeUeBandConvention,
}

impl ScenarioConfig {
    /// Validate all config invariants, returning the first violation found.
    pub fn validate(&self) -> Result<()> {
        if self.satellites.is_empty() {
            return Err(Error::InvalidConfig("at least one satellite required".into()));
        }
        if self.ue_count == 0 {
            return Err(Error::InvalidConfig("at least one UE required".into()));
        }
        if !(self.altitude_m > 0.0) {
            return Err(Error::InvalidConfig("altitude must be positive".into()));
        }
        if !(self.region_radius_m >= 0.0) {
            return Err(Error::InvalidConfig("region radius must be non-negative".into()));
        }
        let b = &self.bands;
        if !(b.f1_hz > 0.0 && b.f2_hz > 0.0 && b.b1_hz > 0.0 && b.b2_hz > 0.0) {
            return Err(Error::InvalidConfig("band frequencies and bandwidths must be positive".into()));
        }
        if b.f1_hz == b.f2_hz {
            return Err(Error::InvalidConfig("the two bands must have distinct carrier frequencies".into()));
        }
        if !(self.p_sat_max_w > 0.0) {
            return Err(Error::InvalidConfig("satellite power budget must be positive".into()));
        }
        if !(self.p_ue_max_w > 0.0) {
            return Err(Error::InvalidConfig("UE power budget must be positive".into()));
        }
        if let Some(n) = self.noise_variance_w {
            if !(n > 0.0) {
                return Err(Error::InvalidConfig("noise variance must be positive".into()));
            }
        }
        if self.antenna_count_x == 0 || self.antenna_count_y == 0 {
            return Err(Error::InvalidConfig("antenna counts must be at least 1".into()));
        }
        if let Some(s) = self.element_spacing_m {
            if !(s > 0.0) {
                return Err(Error::InvalidConfig("element spacing must be positive".into()));
            }
        }
        for (i, p) in self.satellites.iter().enumerate() {
            if !(p.elevation_deg > 0.0 && p.elevation_deg <= 90.0) {
                return Err(Error::InvalidConfig(format!(
                    "satellite {i}: elevation must be in (0, 90] degrees"
                )));
            }
            if !p.azimuth_deg.is_finite() {
                return Err(Error::InvalidConfig(format!("satellite {i}: azimuth must be finite")));
            }
        }
        // Duplicate placements collapse two satellites onto the same point.
        for i in 0..self.satellites.len() {
            for j in (i + 1)..self.satellites.len() {
                let a = satellite_position(&self.satellites[i], self.altitude_m);
                let b = satellite_position(&self.satellites[j], self.altitude_m);
                if distance(&a, &b) < 1e-6 {
                    return Err(Error::InvalidConfig(format!(
                        "satellites {i} and {j} share the same placement"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Noise power used when `noise_variance_w` is not set.
    pub fn default_noise_variance(&self) -> f64 {
        BOLTZMANN * NOISE_TEMPERATURE_K * self.bands.b1_hz
    }

    /// Element spacing used when `element_spacing_m` is not set:
    /// half a wavelength at the higher carrier, which keeps the array
    /// grating-lobe free on both bands.
    pub fn default_element_spacing(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.bands.f1_hz.max(self.bands.f2_hz))
    }

    /// Parse a config from TOML text.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    /// Parse a config from JSON text.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    /// Load a config from a file, dispatching on the `.json` / `.toml` extension.
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json(&text),
            _ => Self::from_toml(&text),
        }
    }
}

/// Cartesian position of a satellite placed at `altitude_m` along the
/// direction `(elevation, azimuth)` seen from the region center.
fn satellite_position(p: &SatellitePlacement, altitude_m: f64) -> [f64; 3] {
    let el = p.elevation_deg.to_radians();
    let az = p.azimuth_deg.to_radians();
    let slant = altitude_m / el.sin();
    [slant * el.cos() * az.cos(), slant * el.cos() * az.sin(), altitude_m]
}

fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Build a scenario from a config and an explicit seed.
///
/// Satellites are placed deterministically from the config; UEs are drawn
/// uniformly on the disk of the configured radius using a seeded stream, so
/// the result is a pure function of `(config, seed)`.
pub fn build_scenario(config: &ScenarioConfig, seed: u64) -> Result<Scenario> {
    config.validate()?;

    let spacing = config
        .element_spacing_m
        .unwrap_or_else(|| config.default_element_spacing());

    let satellites = config
        .satellites
        .iter()
        .map(|p| SatelliteGeometry {
            position: satellite_position(p, config.altitude_m),
            antenna_count_x: config.antenna_count_x,
            antenna_count_y: config.antenna_count_y,
            element_spacing_m: spacing,
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ues = Vec::with_capacity(config.ue_count);
    for _ in 0..config.ue_count {
        let u: f64 = rng.gen();
        let v: f64 = rng.gen();
        let r = config.region_radius_m * u.sqrt();
        let phi = 2.0 * std::f64::consts::PI * v;
        ues.push(UePosition {
            position: [r * phi.cos(), r * phi.sin(), 0.0],
        });
    }

    for i in 0..ues.len() {
        for j in (i + 1)..ues.len() {
            if distance(&ues[i].position, &ues[j].position) < MIN_UE_SEPARATION_M {
                return Err(Error::InvalidConfig(format!(
                    "UEs {i} and {j} are closer than {MIN_UE_SEPARATION_M} m; \
                     the free-space UE-UE channel is undefined"
                )));
            }
        }
    }

    Ok(Scenario {
        satellites,
        ues,
        bands: BandPlan {
            f1_hz: config.bands.f1_hz,
            f2_hz: config.bands.f2_hz,
            b1_hz: config.bands.b1_hz,
            b2_hz: config.bands.b2_hz,
        },
        p_sat_max_w: config.p_sat_max_w,
        p_ue_max_w: config.p_ue_max_w,
        noise_variance_w: config
            .noise_variance_w
            .unwrap_or_else(|| config.default_noise_variance()),
        seed,
        ue_ue_band_convention: config.ue_ue_band_convention,
    })
}

/// Distance, azimuth, and elevation from satellite `j` to UE `k`, expressed
/// in the satellite-local frame whose z axis points toward nadir.
///
/// Elevation is measured from the array plane, so a UE at nadir has
/// elevation pi/2 and both steering phase terms vanish.
pub fn geometry_of(scenario: &Scenario, k: usize, j: usize) -> Result<(f64, f64, f64)> {
    if k >= scenario.ue_count() {
        return Err(Error::IndexOutOfRange(format!("UE index {k}")));
    }
    if j >= scenario.sat_count() {
        return Err(Error::IndexOutOfRange(format!("satellite index {j}")));
    }
    let sat = &scenario.satellites[j].position;
    let ue = &scenario.ues[k].position;
    let d = [ue[0] - sat[0], ue[1] - sat[1], ue[2] - sat[2]];
    let m = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    // Satellite-local frame: x, y as the region frame, z toward nadir.
    let down = -d[2] / m;
    let azimuth = d[1].atan2(d[0]);
    let elevation = down.clamp(-1.0, 1.0).asin();
    Ok((m, azimuth, elevation))
}

/// Receiver noise power of the reference configuration (W).
///
/// The thermal floor alone puts these link budgets in a regime where
/// interference swamps the noise and band assignment stops mattering; the
/// reference setup operates at single-link SNRs of order one, which this
/// value reproduces (roughly thermal plus 11 dB of receiver noise figure
/// and margin).
pub const REFERENCE_NOISE_W: f64 = 5.0e-13;

/// Paper-style default config with `j` satellites at 500 km and 10 UEs in a
/// 100 m region, 2.4 / 1.9 GHz bands, 20 W / 2 W budgets, 16x16 UPA.
pub fn paper_default_config(j: usize) -> ScenarioConfig {
    // Equal elevations with spread azimuths: comparable link budgets let the
    // UE load distribute across satellites instead of piling onto the
    // strongest one.
    let satellites: Vec<SatellitePlacement> = (0..j)
        .map(|i| SatellitePlacement {
            elevation_deg: 60.0,
            azimuth_deg: 360.0 * i as f64 / j as f64,
        })
        .collect();
    ScenarioConfig {
        satellites,
        altitude_m: 500e3,
        ue_count: 10,
        region_radius_m: 100.0,
        region_center: Some(RegionCenter { lat_deg: 53.0793, lon_deg: 8.8017 }),
        bands: BandConfig { f1_hz: 2.4e9, f2_hz: 1.9e9, b1_hz: 10e6, b2_hz: 10e6 },
        p_sat_max_w: 20.0,
        p_ue_max_w: 2.0,
        noise_variance_w: Some(REFERENCE_NOISE_W),
        seed: 0,
        antenna_count_x: 16,
        antenna_count_y: 16,
        element_spacing_m: None,
        ue_ue_band_convention: UeUeBandConvention::default(),
    }
}
