//! `B1` and `B2` and their vector assemblies.
//!
//! `B1(φ,ψ)_k = (ik/2) E(k) Σ φ̃_{k1} ψ̃_{k2}` is a derivative of a pointwise
//! product of the ungauged fields, so the fast path goes through a
//! dealiased transform of size at least `3 n_max + 1`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use super::expand::{b1_terms, high_part, low_part, BiTerm, Components, Factor};
use super::{assemble, masked, ungauge, Parity};
use crate::error::Result;
use crate::phase::PhaseCache;
use crate::spectral::{Gauge, SpectralField, SpectralPair};

type Plan = Arc<dyn Fft<f64>>;

thread_local! {
    static PLANS: RefCell<HashMap<usize, (Plan, Plan)>> = RefCell::new(HashMap::new());
}

fn plans(m: usize) -> (Plan, Plan) {
    PLANS.with(|p| {
        p.borrow_mut()
            .entry(m)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                (planner.plan_fft_forward(m), planner.plan_fft_inverse(m))
            })
            .clone()
    })
}

pub(crate) fn grid_size(n: usize) -> usize {
    (3 * n + 1).next_power_of_two()
}

/// Physical-space samples of a dense coefficient array.
fn to_grid(coeffs: &[C64], n: usize, m: usize) -> Vec<C64> {
    let mut buf = vec![C64::new(0.0, 0.0); m];
    let n_i = n as i64;
    for (i, &c) in coeffs.iter().enumerate() {
        let k = i as i64 - n_i;
        buf[k.rem_euclid(m as i64) as usize] = c;
    }
    plans(m).1.process(&mut buf);
    buf
}

/// Fourier coefficients `0..=n` of physical-space samples.
fn from_grid(mut buf: Vec<C64>, n: usize) -> Vec<C64> {
    let m = buf.len();
    plans(m).0.process(&mut buf);
    let scale = 1.0 / m as f64;
    buf.truncate(n + 1);
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

fn derivative_half(conv: &mut [C64]) {
    for (k, c) in conv.iter_mut().enumerate() {
        *c *= C64::new(0.0, 0.5 * k as f64);
    }
}

fn check_pair(a: &SpectralField, b: &SpectralField) -> Result<()> {
    a.ensure_same_modes(b)
}

/// `B1(φ, ψ)` by the transform fast path.
pub fn b1(phi: &SpectralField, psi: &SpectralField, t: f64) -> Result<SpectralField> {
    check_pair(phi, psi)?;
    let n = phi.n_max();
    let cache = PhaseCache::new(t, n);
    let m = grid_size(n);
    let ga = to_grid(&ungauge(phi, &cache), n, m);
    let gb = to_grid(&ungauge(psi, &cache), n, m);
    let prod: Vec<C64> = ga.iter().zip(&gb).map(|(x, y)| x * y).collect();
    let mut raw = from_grid(prod, n);
    derivative_half(&mut raw);
    Ok(assemble(phi.modes(), &raw, &cache, Parity::Hermitian))
}

/// `B1(φ, ψ)` by direct double summation over `k1 + k2 = k`.
pub fn b1_direct(phi: &SpectralField, psi: &SpectralField, t: f64) -> Result<SpectralField> {
    check_pair(phi, psi)?;
    let n = phi.n_max();
    let cache = PhaseCache::new(t, n);
    let conv = direct_conv(&ungauge(phi, &cache), &ungauge(psi, &cache), n, |_, _| 1.0);
    let mut raw = conv;
    derivative_half(&mut raw);
    Ok(assemble(phi.modes(), &raw, &cache, Parity::Hermitian))
}

/// `B2(φ, ψ)_k = (1/6) Σ_{k1+k2=k} e^{3ikk1k2t} φ_{k1} ψ_{k2} / (k1 k2)`.
pub fn b2(phi: &SpectralField, psi: &SpectralField, t: f64) -> Result<SpectralField> {
    check_pair(phi, psi)?;
    let n = phi.n_max();
    let cache = PhaseCache::new(t, n);
    let raw = direct_conv(&ungauge(phi, &cache), &ungauge(psi, &cache), n, b2_weight);
    Ok(assemble(phi.modes(), &raw, &cache, Parity::Hermitian))
}

#[inline]
fn b2_weight(k1: i64, k2: i64) -> f64 {
    1.0 / (6.0 * (k1 * k2) as f64)
}

/// `Σ_{k1+k2=k} w(k1,k2) a_{k1} b_{k2}` for `k = 0..=n`, ascending `k1`.
fn direct_conv(a: &[C64], b: &[C64], n: usize, w: impl Fn(i64, i64) -> f64) -> Vec<C64> {
    let ni = n as i64;
    let mut out = vec![C64::new(0.0, 0.0); n + 1];
    for k in 1..=ni {
        let mut acc = C64::new(0.0, 0.0);
        for k1 in (k - ni).max(-ni)..=ni {
            let k2 = k - k1;
            if k1 == 0 || k2 == 0 || k2 > ni {
                continue;
            }
            let x = a[(k1 + ni) as usize];
            if x.re == 0.0 && x.im == 0.0 {
                continue;
            }
            acc += x * b[(k2 + ni) as usize] * w(k1, k2);
        }
        out[k as usize] = acc;
    }
    out
}

fn pair_out(p: &SpectralPair, u: SpectralField, v: SpectralField, t: f64) -> SpectralPair {
    SpectralPair {
        u,
        v,
        gauge: Gauge::Interaction,
        t_ref: if p.gauge == Gauge::Interaction { t } else { p.t_ref },
    }
}

/// Right-hand side `(B1(u,v) - B1(u,u), B1(u,v) - B1(v,v))` of the gauged
/// system, computed as `(B1(u, v-u), B1(u-v, v))`.
pub fn b1_vec(p: &SpectralPair, t: f64) -> SpectralPair {
    debug_assert_eq!(p.gauge, Gauge::Interaction);
    let n = p.n_max();
    let cache = PhaseCache::new(t, n);
    let m = grid_size(n);
    let gu = to_grid(&ungauge(&p.u, &cache), n, m);
    let gv = to_grid(&ungauge(&p.v, &cache), n, m);
    let pu: Vec<C64> = gu.iter().zip(&gv).map(|(a, b)| a * (b - a)).collect();
    let pv: Vec<C64> = gu.iter().zip(&gv).map(|(a, b)| (a - b) * b).collect();
    let mut ru = from_grid(pu, n);
    let mut rv = from_grid(pv, n);
    derivative_half(&mut ru);
    derivative_half(&mut rv);
    pair_out(
        p,
        assemble(p.modes(), &ru, &cache, Parity::Hermitian),
        assemble(p.modes(), &rv, &cache, Parity::Hermitian),
        t,
    )
}

#[derive(Clone, Copy)]
enum BiKind {
    B1,
    B2,
}

/// Evaluates signed bilinear term lists on the pair.
fn eval_terms(kind: BiKind, terms: &Components<BiTerm>, p: &SpectralPair, t: f64, n_cut: usize) -> SpectralPair {
    let n = p.n_max();
    let cache = PhaseCache::new(t, n);
    let base = [ungauge(&p.u, &cache), ungauge(&p.v, &cache)];
    let mut arrays: HashMap<Factor, Vec<C64>> = HashMap::new();
    let mut get = |f: Factor| -> Vec<C64> {
        arrays
            .entry(f)
            .or_insert_with(|| masked(&base[f.var.index()], n, f.band, n_cut))
            .clone()
    };
    let comps: Vec<SpectralField> = terms
        .iter()
        .map(|comp| {
            let raw = match kind {
                BiKind::B1 => {
                    let m = grid_size(n);
                    let mut grids: HashMap<Factor, Vec<C64>> = HashMap::new();
                    let mut acc = vec![C64::new(0.0, 0.0); m];
                    for term in comp {
                        for f in [term.a, term.b] {
                            if !grids.contains_key(&f) {
                                let g = to_grid(&get(f), n, m);
                                grids.insert(f, g);
                            }
                        }
                        let (ga, gb) = (&grids[&term.a], &grids[&term.b]);
                        for ((x, a), b) in acc.iter_mut().zip(ga).zip(gb) {
                            *x += a * b * term.sign;
                        }
                    }
                    let mut raw = from_grid(acc, n);
                    derivative_half(&mut raw);
                    raw
                }
                BiKind::B2 => {
                    let mut raw = vec![C64::new(0.0, 0.0); n + 1];
                    for term in comp {
                        let c = direct_conv(&get(term.a), &get(term.b), n, b2_weight);
                        for (r, x) in raw.iter_mut().zip(c) {
                            *r += x * term.sign;
                        }
                    }
                    raw
                }
            };
            assemble(p.modes(), &raw, &cache, Parity::Hermitian)
        })
        .collect();
    let [u, v]: [SpectralField; 2] = comps.try_into().expect("two components");
    pair_out(p, u, v, t)
}

/// `B1^P(u,v)`: the B1 terms with both arguments projected to `|k| <= n_cut`.
pub fn b1_low_vec(p: &SpectralPair, t: f64, n_cut: usize) -> SpectralPair {
    eval_terms(BiKind::B1, &low_part(&b1_terms()), p, t, n_cut)
}

/// `B1^Q(u,v)`: `B1(Pa, Qb) + B1(Qa, b)` for every term `B1(a, b)`.
pub fn b1q_vec(p: &SpectralPair, t: f64, n_cut: usize) -> SpectralPair {
    eval_terms(BiKind::B1, &high_part(&b1_terms()), p, t, n_cut)
}

/// `(B2(u,v) - B2(u,u), B2(u,v) - B2(v,v))` of the first form.
pub fn b2_vec(p: &SpectralPair, t: f64) -> SpectralPair {
    eval_terms(BiKind::B2, &b1_terms(), p, t, usize::MAX)
}

/// `B2^Q(u,v)` of the modified first form.
pub fn b2_high_vec(p: &SpectralPair, t: f64, n_cut: usize) -> SpectralPair {
    eval_terms(BiKind::B2, &high_part(&b1_terms()), p, t, n_cut)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{random_field, random_pair, SobolevIndex};
    use crate::operators::rel_diff;

    fn cos1(n: usize) -> SpectralField {
        SpectralField::from_entries(n, &[(1, C64::new(1.0, 0.0))]).unwrap()
    }

    #[test]
    fn b1_single_term() {
        let f = cos1(4);
        for out in [b1(&f, &f, 0.0).unwrap(), b1_direct(&f, &f, 0.0).unwrap()] {
            assert!((out.get(2) - C64::new(0.0, 1.0)).norm() < 1e-15);
            assert!((out.get(-2) - C64::new(0.0, -1.0)).norm() < 1e-15);
            assert!(out.get(1).norm() < 1e-15);
        }
        let z = SpectralField::zeros(f.modes());
        assert!(b1(&z, &f, 0.3).unwrap().is_zero());
    }

    #[test]
    fn b2_single_term() {
        let f = cos1(4);
        let out = b2(&f, &f, 0.0).unwrap();
        assert!((out.get(2) - C64::new(1.0 / 6.0, 0.0)).norm() < 1e-15);
        assert_eq!(out.get(0), C64::new(0.0, 0.0));
    }

    #[test]
    fn fast_b1_matches_direct() {
        for seed in 0..10 {
            let a = random_field(seed, 16, SobolevIndex(0.0), 1.0);
            let b = random_field(seed + 100, 16, SobolevIndex(0.0), 1.0);
            for &t in &[0.0, 0.37, 2.0] {
                let f = b1(&a, &b, t).unwrap();
                let d = b1_direct(&a, &b, t).unwrap();
                assert!(rel_diff(&f, &d) < 1e-12);
                assert!(f.hermitian_defect() == 0.0);
            }
        }
    }

    #[test]
    fn b1_vec_is_assembled_from_b1() {
        let p = random_pair(4, 12, SobolevIndex(0.0), 1.0);
        let t = 0.37;
        let out = b1_vec(&p, t);
        let uv = b1(&p.u, &p.v, t).unwrap();
        let uu = b1(&p.u, &p.u, t).unwrap();
        let vv = b1(&p.v, &p.v, t).unwrap();
        assert!(rel_diff(&out.u, &(&uv - &uu)) < 1e-12);
        assert!(rel_diff(&out.v, &(&uv - &vv)) < 1e-12);
    }

    #[test]
    fn diagonal_and_invariant_subspaces() {
        let u = random_field(1, 10, SobolevIndex(0.0), 1.0);
        let z = SpectralField::zeros(u.modes());
        let p = SpectralPair::interaction(u.clone(), u.clone(), 0.0).unwrap();
        let out = b1_vec(&p, 0.2);
        assert!(out.u.max_amplitude() < 1e-15 && out.v.max_amplitude() < 1e-15);
        let q = SpectralPair::interaction(u.clone(), z, 0.0).unwrap();
        let out = b1_vec(&q, 0.2);
        assert!(out.v.max_amplitude() < 1e-15);
        assert!(rel_diff(&out.u, &b1(&u, &u, 0.2).unwrap().scale(-1.0)) < 1e-12);
    }

    #[test]
    fn low_plus_high_is_b1_vec() {
        let p = random_pair(7, 16, SobolevIndex(0.0), 1.0);
        for n_cut in [1, 5, 16, 20] {
            let full = b1_vec(&p, 0.9);
            let sum = b1_low_vec(&p, 0.9, n_cut).axpy(1.0, &b1q_vec(&p, 0.9, n_cut));
            assert!(rel_diff(&sum.u, &full.u) < 1e-12);
            assert!(rel_diff(&sum.v, &full.v) < 1e-12);
        }
        // P = I
        let low = b1_low_vec(&p, 0.9, 16);
        assert!(rel_diff(&low.u, &b1_vec(&p, 0.9).u) < 1e-12);
        // support of the low part
        let low = b1_low_vec(&p, 0.9, 3);
        assert!((7..=16).all(|k| low.u.get(k).norm() < 1e-13));
    }

    #[test]
    fn b2_high_vec_vanishes_on_low_data_and_is_symmetric_on_diagonal() {
        let p = random_pair(2, 16, SobolevIndex(0.0), 1.0).project_low(6);
        assert!(b2_high_vec(&p, 0.4, 6).u.max_amplitude() == 0.0);
        let u = random_field(3, 16, SobolevIndex(0.0), 1.0);
        let d = SpectralPair::interaction(u.clone(), u, 0.0).unwrap();
        let out = b2_high_vec(&d, 0.4, 6);
        assert_eq!(out.u, out.v);
    }

    #[test]
    fn b2_vec_is_assembled_from_b2() {
        let p = random_pair(5, 12, SobolevIndex(0.0), 1.0);
        let t = 1.1;
        let out = b2_vec(&p, t);
        let uv = b2(&p.u, &p.v, t).unwrap();
        let uu = b2(&p.u, &p.u, t).unwrap();
        assert!(rel_diff(&out.u, &(&uv - &uu)) < 1e-12);
    }
}
