//! `R3`, its resonant and non-resonant parts, and `B3`.
//!
//! Sums of the form `Σ_{k1+k2+k3=k} w(k1,k2,k3) a_{k1} b_{k2} c_{k3}` are
//! evaluated by a small engine over jobs that share the rotated input arrays:
//!
//! * `R3` over all triples factors as `Σ_{k1} (a_{k1}/k1) W_{k-k1}` with
//!   `W_s = Σ_{k2+k3=s} b_{k2} c_{k3}`, so it costs two convolutions;
//! * resonant triples form three one-parameter families, `O(n)` per mode;
//! * non-resonant `R3` is the difference of the two;
//! * `B3` has no product structure and is a triple loop, with the trailing
//!   factors of all jobs sharing a first argument pre-summed into one matrix.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::expand::{Kernel, Selector};
use super::filter::{pair_sum_ok, ArgumentFilter, PairFilter};
use super::{assemble, masked, ungauge, Parity};
use crate::error::Result;
use crate::phase::PhaseCache;
use crate::spectral::SpectralField;

/// True iff `(k1+k2)(k2+k3)(k1+k3) = 0`.
pub fn resonance_indicator(k1: i64, k2: i64, k3: i64) -> bool {
    let p = (k1 as i128 + k2 as i128) * (k2 as i128 + k3 as i128) * (k1 as i128 + k3 as i128);
    p == 0
}

/// One signed trilinear sum. `key` identifies the array behind `a` so jobs
/// with a common first argument can share work.
#[derive(Clone, Copy)]
pub(crate) struct Job<'a> {
    pub coef: C64,
    pub key: usize,
    pub a: &'a [C64],
    pub b: &'a [C64],
    pub c: &'a [C64],
    pub pair: Option<PairFilter>,
    pub selector: Selector,
    pub kernel: Kernel,
}

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[inline]
fn nz(c: C64) -> bool {
    c.re != 0.0 || c.im != 0.0
}

/// Pair constraint reducible to a mask on `k2 + k3` (or absent).
fn trailing_pair(p: Option<PairFilter>) -> Option<Option<PairFilter>> {
    match p {
        None => Some(None),
        Some(f) if f.i == 1 && f.j == 2 => Some(Some(f)),
        _ => None,
    }
}

#[inline]
fn pair_ok(p: Option<PairFilter>, ks: [i64; 3], n_cut: usize, n: usize) -> bool {
    match p {
        None => true,
        Some(f) => pair_sum_ok(ks[f.i] + ks[f.j], f.band, n_cut, n),
    }
}

#[inline]
fn b3_weight(k1: i64, k2: i64, k3: i64) -> Option<f64> {
    let d = ((k1 + k2) * (k2 + k3) * (k1 + k3)) as f64;
    if d == 0.0 {
        None
    } else {
        Some(1.0 / (k1 as f64 * d))
    }
}

/// Sums every job, returning the positive half `raw[k]`, `k = 0..=n`.
pub(crate) fn run(n: usize, n_cut: usize, jobs: &[Job]) -> Vec<C64> {
    let ni = n as i64;
    let w = 2 * n + 1;
    let mut out = vec![ZERO; n + 1];

    // Factored R3 groups: key -> (a, W over s = -2n..=2n).
    let mut r3_groups: Vec<(usize, &[C64], Vec<C64>)> = Vec::new();
    // B3 groups: key -> (a, M over (k2, k3)).
    let mut b3_groups: Vec<(usize, &[C64], Vec<C64>)> = Vec::new();

    for job in jobs {
        let trailing = trailing_pair(job.pair);
        match (job.kernel, job.selector, trailing) {
            (Kernel::R3, Selector::Resonant, _) => resonant(n, n_cut, job, job.coef, &mut out),
            (Kernel::R3, sel, Some(pair)) => {
                let idx = match r3_groups.iter().position(|g| g.0 == job.key) {
                    Some(i) => i,
                    None => {
                        r3_groups.push((job.key, job.a, vec![ZERO; 4 * n + 1]));
                        r3_groups.len() - 1
                    }
                };
                let acc = &mut r3_groups[idx].2;
                for k2 in -ni..=ni {
                    let x = job.b[(k2 + ni) as usize];
                    if !nz(x) {
                        continue;
                    }
                    let x = x * job.coef;
                    for k3 in -ni..=ni {
                        let s = k2 + k3;
                        if let Some(f) = pair {
                            if !pair_sum_ok(s, f.band, n_cut, n) {
                                continue;
                            }
                        }
                        acc[(s + 2 * ni) as usize] += x * job.c[(k3 + ni) as usize];
                    }
                }
                if sel == Selector::NonResonant {
                    resonant(n, n_cut, job, -job.coef, &mut out);
                }
            }
            (Kernel::B3, Selector::Resonant, _) => {}
            (Kernel::B3, _, Some(pair)) => {
                let idx = match b3_groups.iter().position(|g| g.0 == job.key) {
                    Some(i) => i,
                    None => {
                        b3_groups.push((job.key, job.a, vec![ZERO; w * w]));
                        b3_groups.len() - 1
                    }
                };
                let acc = &mut b3_groups[idx].2;
                for k2 in -ni..=ni {
                    let x = job.b[(k2 + ni) as usize];
                    if !nz(x) {
                        continue;
                    }
                    let x = x * job.coef;
                    let row = (k2 + ni) as usize * w;
                    for k3 in -ni..=ni {
                        if let Some(f) = pair {
                            if !pair_sum_ok(k2 + k3, f.band, n_cut, n) {
                                continue;
                            }
                        }
                        acc[row + (k3 + ni) as usize] += x * job.c[(k3 + ni) as usize];
                    }
                }
            }
            _ => {
                let r = direct(n, n_cut, job);
                for (o, x) in out.iter_mut().zip(r) {
                    *o += x;
                }
            }
        }
    }

    for (_, a, wsum) in &r3_groups {
        for k in 1..=ni {
            let mut acc = ZERO;
            for k1 in -ni..=ni {
                let x = a[(k1 + ni) as usize];
                if !nz(x) {
                    continue;
                }
                let s = k - k1;
                if s.abs() > 2 * ni {
                    continue;
                }
                acc += x * wsum[(s + 2 * ni) as usize] / k1 as f64;
            }
            out[k as usize] += acc;
        }
    }

    for (_, a, m) in &b3_groups {
        let part: Vec<C64> = (1..=ni)
            .into_par_iter()
            .map(|k| {
                let mut acc = ZERO;
                for k1 in -ni..=ni {
                    let x = a[(k1 + ni) as usize];
                    if !nz(x) {
                        continue;
                    }
                    let r = k - k1;
                    let mut inner = ZERO;
                    for k2 in (r - ni).max(-ni)..=(r + ni).min(ni) {
                        let k3 = r - k2;
                        let y = m[(k2 + ni) as usize * w + (k3 + ni) as usize];
                        if !nz(y) {
                            continue;
                        }
                        if let Some(wt) = b3_weight(k1, k2, k3) {
                            inner += y * wt;
                        }
                    }
                    acc += x * inner;
                }
                acc
            })
            .collect();
        for (k, x) in part.into_iter().enumerate() {
            out[k + 1] += x;
        }
    }
    out
}

/// Resonant triples of one job, added with coefficient `coef`.
fn resonant(n: usize, n_cut: usize, job: &Job, coef: C64, out: &mut [C64]) {
    let ni = n as i64;
    let at = |arr: &[C64], k: i64| arr[(k + ni) as usize];
    for k in 1..=ni {
        let mut acc = ZERO;
        // k1 + k2 = 0: (j, -j, k)
        for j in -ni..=ni {
            if j == 0 || !pair_ok(job.pair, [j, -j, k], n_cut, n) {
                continue;
            }
            acc += at(job.a, j) * at(job.b, -j) * at(job.c, k) / j as f64;
        }
        // k2 + k3 = 0, k1 + k2 != 0: (k, j, -j)
        for j in -ni..=ni {
            if j == 0 || j == -k || !pair_ok(job.pair, [k, j, -j], n_cut, n) {
                continue;
            }
            acc += at(job.a, k) * at(job.b, j) * at(job.c, -j) / k as f64;
        }
        // k1 + k3 = 0, the other two sums nonzero: (j, k, -j)
        for j in -ni..=ni {
            if j == 0 || j == k || j == -k || !pair_ok(job.pair, [j, k, -j], n_cut, n) {
                continue;
            }
            acc += at(job.a, j) * at(job.b, k) * at(job.c, -j) / j as f64;
        }
        out[k as usize] += acc * coef;
    }
}

/// Plain triple loop for one job with any pair constraint.
fn direct(n: usize, n_cut: usize, job: &Job) -> Vec<C64> {
    let ni = n as i64;
    let mut out = vec![ZERO; n + 1];
    for k in 1..=ni {
        let mut acc = ZERO;
        for k1 in -ni..=ni {
            let x = job.a[(k1 + ni) as usize];
            if !nz(x) {
                continue;
            }
            for k2 in (k - k1 - ni).max(-ni)..=(k - k1 + ni).min(ni) {
                let k3 = k - k1 - k2;
                if k2 == 0 || k3 == 0 || !pair_ok(job.pair, [k1, k2, k3], n_cut, n) {
                    continue;
                }
                let res = resonance_indicator(k1, k2, k3);
                let wt = match (job.kernel, job.selector) {
                    (_, Selector::Resonant) if !res => continue,
                    (_, Selector::NonResonant) if res => continue,
                    (Kernel::R3, _) => 1.0 / k1 as f64,
                    (Kernel::B3, _) => match b3_weight(k1, k2, k3) {
                        Some(w) => w,
                        None => continue,
                    },
                };
                acc += x * job.b[(k2 + ni) as usize] * job.c[(k3 + ni) as usize] * wt;
            }
        }
        out[k as usize] = acc * job.coef;
    }
    out
}

fn scalar(
    args: [&SpectralField; 3],
    t: f64,
    filter: &ArgumentFilter,
    kernel: Kernel,
    selector: Selector,
) -> Result<SpectralField> {
    args[0].ensure_same_modes(args[1])?;
    args[0].ensure_same_modes(args[2])?;
    let n = args[0].n_max();
    let cache = PhaseCache::new(t, n);
    let arrays: Vec<Vec<C64>> = args
        .iter()
        .enumerate()
        .map(|(i, f)| masked(&ungauge(f, &cache), n, filter.args[i], filter.n_cut))
        .collect();
    let job = Job {
        coef: C64::new(1.0, 0.0),
        key: 0,
        a: &arrays[0],
        b: &arrays[1],
        c: &arrays[2],
        pair: filter.pair,
        selector,
        kernel,
    };
    let raw = run(n, filter.n_cut, &[job]);
    let parity = match kernel {
        Kernel::R3 => Parity::AntiHermitian,
        Kernel::B3 => Parity::Hermitian,
    };
    Ok(assemble(args[0].modes(), &raw, &cache, parity))
}

/// `R3(φ,ψ,ξ)_k = Σ e^{3i(k1+k2)(k2+k3)(k1+k3)t} φ_{k1} ψ_{k2} ξ_{k3} / k1`
/// over triples allowed by `filter`.
pub fn r3(phi: &SpectralField, psi: &SpectralField, xi: &SpectralField, t: f64, filter: &ArgumentFilter) -> Result<SpectralField> {
    scalar([phi, psi, xi], t, filter, Kernel::R3, Selector::All)
}

/// The `R3` sum over non-resonant triples only.
pub fn r3nres(phi: &SpectralField, psi: &SpectralField, xi: &SpectralField, t: f64, filter: &ArgumentFilter) -> Result<SpectralField> {
    scalar([phi, psi, xi], t, filter, Kernel::R3, Selector::NonResonant)
}

/// `B3(φ,ψ,ξ)_k`: non-resonant triples with kernel
/// `1 / (k1 (k1+k2)(k2+k3)(k1+k3))`. High/High bands on the trailing
/// arguments give `B30`.
pub fn b3(phi: &SpectralField, psi: &SpectralField, xi: &SpectralField, t: f64, filter: &ArgumentFilter) -> Result<SpectralField> {
    scalar([phi, psi, xi], t, filter, Kernel::B3, Selector::NonResonant)
}

/// Resonant part of `R3` by its closed form: three diagonal terms and three
/// single sums. The second diagonal term uses the triple `(-k, k, k)`, the
/// solution of `k1 + k2 = 0 = k1 + k3` with `k1 + k2 + k3 = k`.
pub fn r3res_closed(phi: &SpectralField, psi: &SpectralField, xi: &SpectralField) -> Result<SpectralField> {
    phi.ensure_same_modes(psi)?;
    phi.ensure_same_modes(xi)?;
    let n = phi.n_max() as i64;
    let mut coeffs = vec![ZERO; phi.modes().len()];
    for k in (-n..=n).filter(|&k| k != 0) {
        let kf = k as f64;
        let (p, q, x) = (phi.get(k), psi.get(k), xi.get(k));
        let (pm, qm, xm) = (phi.get(-k), psi.get(-k), xi.get(-k));
        let mut acc = p * qm * x / kf + pm * q * x / (-kf) + p * q * xm / kf;
        let (mut s4, mut s5, mut s6) = (ZERO, ZERO, ZERO);
        for j in (-n..=n).filter(|&j| j != 0 && j.abs() != k.abs()) {
            let jf = j as f64;
            s4 += phi.get(j) * psi.get(-j) / jf;
            s5 += psi.get(j) * xi.get(-j);
            s6 += phi.get(j) * xi.get(-j) / jf;
        }
        acc += x * s4 + p / kf * s5 + q * s6;
        coeffs[(k + n) as usize] = acc;
    }
    Ok(SpectralField::from_raw(phi.modes(), coeffs))
}
