//! Oscillating phase factors.
//!
//! Every exponential in the interaction representation has an integer
//! frequency multiplied by `t`. Frequencies are formed in exact `i128`
//! arithmetic and the product with `t` is reduced modulo 2π in double-double
//! precision, so phases stay accurate for large modes and long times.

use num_complex::Complex64 as C64;

const TWO_PI_HI: f64 = 6.283_185_307_179_586;
const TWO_PI_LO: f64 = 2.449_293_598_294_706_4e-16;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

#[inline]
fn dd_add(x: (f64, f64), y: (f64, f64)) -> (f64, f64) {
    let (s, e) = two_sum(x.0, y.0);
    let e = e + x.1 + y.1;
    two_sum(s, e)
}

/// `m * t` reduced to (-π, π].
pub fn reduced_angle(m: i128, t: f64) -> f64 {
    if m == 0 || t == 0.0 {
        return 0.0;
    }
    // m = hi * 2^52 + lo with both parts exact in f64.
    const SPLIT: i128 = 1 << 52;
    let hi = m.div_euclid(SPLIT);
    let lo = m.rem_euclid(SPLIT);
    let mut acc = two_prod(lo as f64, t);
    if hi != 0 {
        acc = dd_add(acc, two_prod(hi as f64 * SPLIT as f64, t));
    }
    let n = (acc.0 / TWO_PI_HI).round();
    let (a, b) = two_prod(n, TWO_PI_HI);
    let r = dd_add(acc, (-a, -b));
    let mut r = r.0 + (r.1 - n * TWO_PI_LO);
    if r > std::f64::consts::PI {
        r -= TWO_PI_HI;
    } else if r <= -std::f64::consts::PI {
        r += TWO_PI_HI;
    }
    r
}

/// `exp(i m t)` with exact integer frequency `m`.
pub fn unit(m: i128, t: f64) -> C64 {
    let (s, c) = reduced_angle(m, t).sin_cos();
    C64::new(c, s)
}

#[inline]
pub fn cube(k: i64) -> i128 {
    let k = k as i128;
    k * k * k
}

/// Table of `exp(i j³ t)` for `|j| <= n_max`.
///
/// Every phase of the operators factors through this table by the identity
/// `(a+b)³ - a³ - b³ = 3ab(a+b)` and its three- and four-term analogues:
/// `exp(3ik k1 k2 t) = E(k) conj(E(k1)) conj(E(k2))` for `k = k1 + k2`, and
/// `exp(3i(k1+k2)(k2+k3)(k1+k3)t) = E(k) conj(E(k1) E(k2) E(k3))`.
#[derive(Clone, Debug)]
pub struct PhaseCache {
    t: f64,
    n_max: usize,
    table: Vec<C64>,
}

impl PhaseCache {
    pub fn new(t: f64, n_max: usize) -> Self {
        let n = n_max as i64;
        let table = (-n..=n).map(|j| unit(cube(j), t)).collect();
        PhaseCache { t, n_max, table }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn is_trivial(&self) -> bool {
        self.t == 0.0
    }

    /// `exp(i k³ t)`.
    #[inline]
    pub fn cube_phase(&self, k: i64) -> C64 {
        self.table[(k + self.n_max as i64) as usize]
    }

    /// `exp(3i k k1 k2 t)` for `k = k1 + k2`.
    #[inline]
    pub fn bilinear(&self, k1: i64, k2: i64) -> C64 {
        self.cube_phase(k1 + k2) * (self.cube_phase(k1) * self.cube_phase(k2)).conj()
    }

    /// `exp(3i (k1+k2)(k2+k3)(k1+k3) t)`.
    #[inline]
    pub fn trilinear(&self, k1: i64, k2: i64, k3: i64) -> C64 {
        self.cube_phase(k1 + k2 + k3)
            * (self.cube_phase(k1) * self.cube_phase(k2) * self.cube_phase(k3)).conj()
    }

    pub fn table(&self) -> &[C64] {
        &self.table
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn small_arguments_match_libm() {
        for &(m, t) in &[(1i128, 0.3), (8, PI), (-27, 0.11), (1000, 1e-3)] {
            let direct = (m as f64 * t).sin_cos();
            let u = unit(m, t);
            assert!((u.re - direct.1).abs() < 1e-14 && (u.im - direct.0).abs() < 1e-14);
        }
    }

    #[test]
    fn full_periods_reduce_to_zero() {
        // 8 * pi is four full turns.
        assert!(reduced_angle(8, PI).abs() < 1e-14);
        assert!((unit(8, PI) - C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn large_frequencies_keep_precision() {
        // k = 1300: k³ ~ 2.2e9, times t = 10 -> ~2.2e10 rad. The reduced angle
        // must agree with an independent splitting of the exact product.
        let m = cube(1300);
        let t = 10.0_f64;
        let r = reduced_angle(m, t);
        // m * 10 is an exact integer; reduce it with t = 1 via a different split.
        let r2 = reduced_angle(m * 10, 1.0);
        assert!((r - r2).abs() < 1e-9, "{r} vs {r2}");
        // and m * t via splitting t = 5 + 5.
        let r3 = reduced_angle(m * 5, 1.0) * 2.0;
        let r3 = (r3 + PI).rem_euclid(2.0 * PI) - PI;
        assert!((r - r3).abs() < 1e-9);
    }

    #[test]
    fn cache_entries_are_unit_modulus_and_factor_phases() {
        let cache = PhaseCache::new(0.37, 20);
        for z in cache.table() {
            assert!((z.norm() - 1.0).abs() < 1e-14);
        }
        for k1 in -10i64..=10 {
            for k2 in -10i64..=10 {
                let k = k1 + k2;
                let direct = unit(3 * (k as i128) * (k1 as i128) * (k2 as i128), 0.37);
                assert!((cache.bilinear(k1, k2) - direct).norm() < 1e-13);
            }
        }
        let (k1, k2, k3) = (3i64, -5i64, 4i64);
        let p = ((k1 + k2) * (k2 + k3) * (k1 + k3)) as i128;
        assert!((cache.trilinear(k1, k2, k3) - unit(3 * p, 0.37)).norm() < 1e-13);
    }
}
