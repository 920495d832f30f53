//! Multilinear operators of the interaction representation.
//!
//! All sums use the phase factorization of [`PhaseCache`]: inputs are
//! rotated by `conj(E(k))`, summed with a real kernel and the output mode is
//! rotated by `E(k)`. Output modes are restricted to the ambient mode set.
//!
//! `B1`, `B2`, `B3` map Hermitian inputs to Hermitian outputs. The kernels of
//! `R3` and `B4` are odd under `k -> -k`, so their scalar outputs satisfy
//! `c_{-k} = -conj(c_k)`; the vector operators multiply them by `±i/12`
//! (resp. `±i/72`) and are Hermitian again.

pub mod bilinear;
pub mod expand;
pub mod filter;
pub mod quartic;
pub mod trilinear;
pub mod vector;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::phase::PhaseCache;
use crate::spectral::{ModeSet, SpectralField};

pub use bilinear::{b1, b1_direct, b1_low_vec, b1_vec, b1q_vec, b2, b2_high_vec, b2_vec};
pub use expand::{Expansion, Kernel, Selector, TriTerm};
pub use filter::{ArgumentFilter, Band, OperatorId, PairFilter};
pub use quartic::{b4, phase4, B4Output};
pub use trilinear::{b3, r3, r3nres, r3res_closed, resonance_indicator};
pub use vector::{
    b30_vec, b3_vec, b40_vec, b4_vec, r3_high_vec, r3_vec, r3nres_vec, r3res_vec, split_r3q,
    Derivatives, R3qSplit,
};

/// Symmetry of an operator's scalar output under `k -> -k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    /// `c_{-k} = conj(c_k)`
    Hermitian,
    /// `c_{-k} = -conj(c_k)`
    AntiHermitian,
}

/// `conj(E(k)) f_k` over the dense index range.
pub(crate) fn ungauge(f: &SpectralField, cache: &PhaseCache) -> Vec<C64> {
    if cache.is_trivial() {
        return f.as_slice().to_vec();
    }
    let n = f.n_max() as i64;
    f.as_slice()
        .iter()
        .zip(-n..=n)
        .map(|(&c, k)| c * cache.cube_phase(k).conj())
        .collect()
}

/// Builds a field from positive-half sums `raw[k]`, `k = 1..=n`, rotating by
/// `E(k)` and filling the negative half by the given parity.
pub(crate) fn assemble(modes: ModeSet, raw: &[C64], cache: &PhaseCache, parity: Parity) -> SpectralField {
    let n = modes.n_max();
    let mut coeffs = vec![C64::new(0.0, 0.0); modes.len()];
    for k in 1..=n {
        let c = if cache.is_trivial() {
            raw[k]
        } else {
            raw[k] * cache.cube_phase(k as i64)
        };
        coeffs[n + k] = c;
        coeffs[n - k] = match parity {
            Parity::Hermitian => c.conj(),
            Parity::AntiHermitian => -c.conj(),
        };
    }
    SpectralField::from_raw(modes, coeffs)
}

/// Zeroes entries outside `band`.
pub(crate) fn masked(data: &[C64], n: usize, band: Band, n_cut: usize) -> Vec<C64> {
    if band == Band::All {
        return data.to_vec();
    }
    let n = n as i64;
    data.iter()
        .zip(-n..=n)
        .map(|(&c, k)| if band.contains(k, n_cut) { c } else { C64::new(0.0, 0.0) })
        .collect()
}

/// `max_k |a_k - b_k| / max_k |b_k|` (zero when both vanish).
pub fn rel_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    let scale = b.max_amplitude();
    let d = a.max_abs_diff(b);
    if d == 0.0 {
        0.0
    } else {
        d / scale.max(f64::MIN_POSITIVE)
    }
}

/// `max_k |c_{-k} + conj(c_k)|`.
pub fn antihermitian_defect(f: &SpectralField) -> f64 {
    (1..=f.n_max() as i64)
        .map(|k| (f.get(-k) + f.get(k).conj()).norm())
        .fold(0.0, f64::max)
}

/// One operator evaluation, for optional JSON-lines traces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub op: OperatorId,
    pub n_max: usize,
    pub n_cut: Option<usize>,
    pub t: f64,
    pub terms: usize,
    pub skipped_denominators: u64,
}

impl EvalRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}
