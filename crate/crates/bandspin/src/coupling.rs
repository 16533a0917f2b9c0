//! Spin-dependent effective channels and the precomputed gain tables every
//! objective and solver consumes.
//!
//! A satellite's spin decides which band carries its DL and which its UL.
//! Two satellites interact on the downlink and uplink only when their spins
//! match, and UE-to-UE interference exists only when they differ, so the
//! cross-gain tables have complementary supports.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{dot, mrc_combiner, mrt_precoder, vec_norm, ChannelSet};
use crate::error::{Error, Result};
use crate::scenario::UeUeBandConvention;

/// Binary band-role assignment per satellite.
///
/// `r_j = true` (1) means band 1 carries satellite j's DL and band 2 its UL;
/// `r_j = false` (0) reverses the roles.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinVector(pub Vec<bool>);

impl SpinVector {
    /// All-zero spin (band 2 is DL everywhere) — the conventional fixed-FDD layout.
    pub fn zeros(j_count: usize) -> Self {
        Self(vec![false; j_count])
    }

    /// Number of satellites.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// True when the vector is empty.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Spin bit of satellite `j`.
    pub fn bit(&self, j: usize) -> bool {
        self.0[j]
    }

    /// 0-based band index carrying satellite `j`'s DL.
    pub fn dl_band(&self, j: usize) -> usize {
        if self.0[j] {
            0
        } else {
            1
        }
    }

    /// 0-based band index carrying satellite `j`'s UL.
    pub fn ul_band(&self, j: usize) -> usize {
        1 - self.dl_band(j)
    }

    /// Whether satellites `j` and `j2` share a spin.
    pub fn same_spin(&self, j: usize, j2: usize) -> bool {
        self.0[j] == self.0[j2]
    }

    /// All `2^J` spin vectors in lexicographic order over `[r_0, ..., r_{J-1}]`.
    pub fn enumerate(j_count: usize) -> Vec<SpinVector> {
        assert!(j_count < usize::BITS as usize);
        (0..1usize << j_count)
            .map(|m| {
                SpinVector(
                    (0..j_count)
                        .map(|j| (m >> (j_count - 1 - j)) & 1 == 1)
                        .collect(),
                )
            })
            .collect()
    }

    /// Bit string `r_0 r_1 ... r_{J-1}`, e.g. `"0110"`.
    pub fn bits_string(&self) -> String {
        self.0.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

impl std::fmt::Display for SpinVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.bits_string())
    }
}

/// Effective DL channel from satellite `j'` toward UE `k` as experienced on
/// the DL band of the serving satellite `j`; zero when the spins differ.
/// With `j' = j` this is the direct DL channel.
pub fn effective_dl_channel(
    channels: &ChannelSet,
    spin: &SpinVector,
    k: usize,
    j: usize,
    j_other: usize,
) -> Vec<Complex64> {
    let n = channels.sat_ue(k, j_other, 0).len();
    if !spin.same_spin(j, j_other) {
        return vec![Complex64::new(0.0, 0.0); n];
    }
    channels.sat_ue(k, j_other, spin.dl_band(j_other)).to_vec()
}

/// Effective UL channel from UE `k'` (served by satellite `j'`) into
/// satellite `j`; zero when the spins differ. With `k' = k`, `j' = j` this
/// is the direct UL channel.
pub fn effective_ul_channel(
    channels: &ChannelSet,
    spin: &SpinVector,
    k_other: usize,
    j: usize,
    j_other: usize,
) -> Vec<Complex64> {
    let n = channels.sat_ue(k_other, j, 0).len();
    if !spin.same_spin(j, j_other) {
        return vec![Complex64::new(0.0, 0.0); n];
    }
    channels.sat_ue(k_other, j, spin.ul_band(j_other)).to_vec()
}

/// Effective UE-to-UE channel from UE `k'` (uplinking to satellite `j'`)
/// into UE `k` (downlinking from satellite `j`); nonzero only when the
/// spins are opposite.
///
/// The band the scalar channel is drawn from follows the configured
/// convention: `Paper` keys it on the interferer's spin exactly as the
/// coupling model is written, `Physical` keys it on the victim's DL band,
/// i.e. the band the collision occurs on. The two differ only by the
/// path-loss ratio of the carriers.
pub fn ue_ue_effective(
    channels: &ChannelSet,
    spin: &SpinVector,
    k: usize,
    k_other: usize,
    j: usize,
    j_other: usize,
) -> f64 {
    if spin.same_spin(j, j_other) {
        return 0.0;
    }
    let band = match channels.ue_ue_band_convention {
        UeUeBandConvention::Paper => spin.dl_band(j_other),
        UeUeBandConvention::Physical => spin.dl_band(j),
    };
    channels.ue_ue(k_other, k, band)
}

/// Precomputed squared channel gains for one fixed spin vector.
///
/// Index convention for the cross tables: the first `(k, j)` pair is the
/// victim link, the second `(k', j')` pair the interfering link.
#[derive(Debug, Clone)]
pub struct GainTables {
    k_count: usize,
    j_count: usize,
    /// Spin these tables were computed for.
    pub spin: SpinVector,
    dl_sig: Vec<f64>,
    ul_sig: Vec<f64>,
    dl_xint: Vec<f64>,
    ul_xint: Vec<f64>,
    uu: Vec<f64>,
}

impl GainTables {
    #[inline]
    fn kj(&self, k: usize, j: usize) -> usize {
        k * self.j_count + j
    }

    #[inline]
    fn kjkj(&self, k: usize, j: usize, k2: usize, j2: usize) -> usize {
        ((k * self.j_count + j) * self.k_count + k2) * self.j_count + j2
    }

    /// Number of UEs.
    pub fn ue_count(&self) -> usize {
        self.k_count
    }

    /// Number of satellites.
    pub fn sat_count(&self) -> usize {
        self.j_count
    }

    /// Direct DL power gain of link `(k, j)`.
    pub fn dl_sig(&self, k: usize, j: usize) -> f64 {
        self.dl_sig[self.kj(k, j)]
    }

    /// Direct UL power gain of link `(k, j)`.
    pub fn ul_sig(&self, k: usize, j: usize) -> f64 {
        self.ul_sig[self.kj(k, j)]
    }

    /// DL cross gain: interfering DL link `(k', j')` into victim link `(k, j)`.
    pub fn dl_xint(&self, k: usize, j: usize, k2: usize, j2: usize) -> f64 {
        self.dl_xint[self.kjkj(k, j, k2, j2)]
    }

    /// UL cross gain: interfering UL link `(k', j')` into victim link `(k, j)`.
    pub fn ul_xint(&self, k: usize, j: usize, k2: usize, j2: usize) -> f64 {
        self.ul_xint[self.kjkj(k, j, k2, j2)]
    }

    /// UE-UE gain: uplinking UE `k'` (serving satellite `j'`) into
    /// downlinking UE `k` (serving satellite `j`).
    pub fn uu(&self, k: usize, j: usize, k2: usize, j2: usize) -> f64 {
        self.uu[self.kjkj(k, j, k2, j2)]
    }
}

/// Precompute all squared gains for a fixed spin vector.
///
/// Beamformers are the fixed matched filters on the direct channels; they are
/// data here, not optimization variables.
pub fn precompute_gains(channels: &ChannelSet, spin: &SpinVector) -> Result<GainTables> {
    let k_count = channels.ue_count();
    let j_count = channels.sat_count();
    if spin.len() != j_count {
        return Err(Error::DimensionMismatch(format!(
            "spin length {} vs {} satellites",
            spin.len(),
            j_count
        )));
    }

    // Matched-filter beamformers on the direct channels.
    let mut w = Vec::with_capacity(k_count * j_count);
    let mut v = Vec::with_capacity(k_count * j_count);
    for k in 0..k_count {
        for j in 0..j_count {
            w.push(mrt_precoder(channels.sat_ue(k, j, spin.dl_band(j)))?);
            v.push(mrc_combiner(channels.sat_ue(k, j, spin.ul_band(j)))?);
        }
    }

    let mut tables = GainTables {
        k_count,
        j_count,
        spin: spin.clone(),
        dl_sig: vec![0.0; k_count * j_count],
        ul_sig: vec![0.0; k_count * j_count],
        dl_xint: vec![0.0; k_count * j_count * k_count * j_count],
        ul_xint: vec![0.0; k_count * j_count * k_count * j_count],
        uu: vec![0.0; k_count * j_count * k_count * j_count],
    };

    for k in 0..k_count {
        for j in 0..j_count {
            let idx = tables.kj(k, j);
            let hd = channels.sat_ue(k, j, spin.dl_band(j));
            let hu = channels.sat_ue(k, j, spin.ul_band(j));
            tables.dl_sig[idx] = vec_norm(hd).powi(2);
            tables.ul_sig[idx] = vec_norm(hu).powi(2);
        }
    }

    // The cross gains factor through the spin support: the inner products
    // only depend on the transmitter-side geometry and band, so compute each
    // once and fan it out over the same-spin pairs.
    //
    // x[k][k2][j2] = |h_{k,j2,dl_band(j2)}^T w_{k2,j2}|^2
    let mut x = vec![0.0; k_count * k_count * j_count];
    for k in 0..k_count {
        for k2 in 0..k_count {
            for j2 in 0..j_count {
                let h = channels.sat_ue(k, j2, spin.dl_band(j2));
                let val = dot(h, &w[k2 * j_count + j2]).norm_sqr();
                x[(k * k_count + k2) * j_count + j2] = val;
            }
        }
    }
    // y[k][j][k2] = |v_{k,j}^T h_{k2,j,ul_band(j)}|^2
    let mut y = vec![0.0; k_count * j_count * k_count];
    for k in 0..k_count {
        for j in 0..j_count {
            for k2 in 0..k_count {
                let h = channels.sat_ue(k2, j, spin.ul_band(j));
                let val = dot(&v[k * j_count + j], h).norm_sqr();
                y[(k * j_count + j) * k_count + k2] = val;
            }
        }
    }

    for k in 0..k_count {
        for j in 0..j_count {
            for k2 in 0..k_count {
                for j2 in 0..j_count {
                    let idx = tables.kjkj(k, j, k2, j2);
                    if spin.same_spin(j, j2) {
                        tables.dl_xint[idx] = x[(k * k_count + k2) * j_count + j2];
                        tables.ul_xint[idx] = y[(k * j_count + j) * k_count + k2];
                    } else if k != k2 {
                        let band = match channels.ue_ue_band_convention {
                            UeUeBandConvention::Paper => spin.dl_band(j2),
                            UeUeBandConvention::Physical => spin.dl_band(j),
                        };
                        let g = channels.ue_ue(k2, k, band);
                        tables.uu[idx] = g * g;
                    }
                }
            }
        }
    }

    Ok(tables)
}
