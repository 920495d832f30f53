//! The quadrilinear operators `B4¹`, `B4²` and the phase `Φ`.

use num_complex::Complex64 as C64;

use super::{ungauge, EvalRecord, OperatorId};
use crate::error::Result;
use crate::phase::{cube, PhaseCache};
use crate::spectral::SpectralField;

/// `Φ(k) = (k1+k2+k3+k4)³ - k1³ - k2³ - k3³ - k4³` in exact arithmetic.
pub fn phase4(k1: i64, k2: i64, k3: i64, k4: i64) -> i128 {
    cube(k1 + k2 + k3 + k4) - cube(k1) - cube(k2) - cube(k3) - cube(k4)
}

/// Result of a `B4` evaluation together with the number of quadruples
/// skipped because a denominator vanished.
#[derive(Clone, Debug)]
pub struct B4Output {
    pub field: SpectralField,
    pub skipped: u64,
    pub t: f64,
}

impl B4Output {
    pub fn record(&self) -> EvalRecord {
        EvalRecord {
            op: OperatorId::B4,
            n_max: self.field.n_max(),
            n_cut: None,
            t: self.t,
            terms: 2,
            skipped_denominators: self.skipped,
        }
    }
}

/// `B4 = B4¹ + B4²` by direct summation over `k1+k2+k3+k4 = k`.
///
/// Quadruples where `k1+k2`, `k1+k3+k4` or `k2+k3+k4` vanish are skipped
/// and counted. Every output mode, both halves, is summed independently.
pub fn b4(phi: &SpectralField, psi: &SpectralField, xi: &SpectralField, eta: &SpectralField, t: f64) -> Result<B4Output> {
    phi.ensure_same_modes(psi)?;
    phi.ensure_same_modes(xi)?;
    phi.ensure_same_modes(eta)?;
    let n = phi.n_max() as i64;
    let cache = PhaseCache::new(t, n as usize);
    let a = ungauge(phi, &cache);
    let b = ungauge(psi, &cache);
    let c = ungauge(xi, &cache);
    let d = ungauge(eta, &cache);
    let at = |arr: &[C64], k: i64| arr[(k + n) as usize];
    let mut coeffs = vec![C64::new(0.0, 0.0); phi.modes().len()];
    let mut skipped = 0u64;
    for k in (-n..=n).filter(|&k| k != 0) {
        let mut acc = C64::new(0.0, 0.0);
        for k1 in (-n..=n).filter(|&j| j != 0) {
            let x1 = at(&a, k1);
            for k2 in (-n..=n).filter(|&j| j != 0) {
                let x12 = x1 * at(&b, k2);
                let s12 = k1 + k2;
                for k3 in (-n..=n).filter(|&j| j != 0) {
                    let k4 = k - k1 - k2 - k3;
                    if k4 == 0 || k4.abs() > n {
                        continue;
                    }
                    let d134 = k1 + k3 + k4;
                    let d234 = k2 + k3 + k4;
                    if s12 == 0 || d134 == 0 || d234 == 0 {
                        skipped += 1;
                        continue;
                    }
                    let den = (s12 * d134 * d234) as f64;
                    let w = (1.0 + (k3 + k4) as f64 / k1 as f64) / den;
                    acc += x12 * at(&c, k3) * at(&d, k4) * w;
                }
            }
        }
        coeffs[(k + n) as usize] = if cache.is_trivial() {
            acc
        } else {
            acc * cache.cube_phase(k)
        };
    }
    Ok(B4Output {
        field: SpectralField::from_raw(phi.modes(), coeffs),
        skipped,
        t,
    })
}
