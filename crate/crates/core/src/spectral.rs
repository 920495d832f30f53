//! Truncated Fourier representations of real, mean-zero functions on the
//! torus `[0, 2π]`.
//!
//! A field over the mode set `0 < |k| <= n_max` is stored densely over
//! `k = -n_max..=n_max`, negative half included, so operator formulas index it
//! exactly as written. Slot `k = 0` exists only as padding and is always zero.
//!
//! Norms follow the homogeneous convention `‖f‖²_s = Σ_{k≠0} |k|^{2s} |f_k|²`,
//! so `‖f‖_0 = ‖f‖_{L²} / √(2π)`.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64 as C64;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase::{cube, unit};
use crate::rng;

/// The index set `{k : 0 < |k| <= n_max}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct ModeSet {
    n_max: usize,
}

impl TryFrom<usize> for ModeSet {
    type Error = Error;
    fn try_from(n: usize) -> Result<Self> {
        ModeSet::new(n)
    }
}

impl From<ModeSet> for usize {
    fn from(m: ModeSet) -> usize {
        m.n_max
    }
}

impl ModeSet {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::EmptyModeSet);
        }
        Ok(ModeSet { n_max })
    }

    #[inline]
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Length of the dense storage, `2 n_max + 1`.
    #[inline]
    pub fn len(&self) -> usize {
        2 * self.n_max + 1
    }

    #[inline]
    pub fn contains(&self, k: i64) -> bool {
        k != 0 && k.unsigned_abs() as usize <= self.n_max
    }

    #[inline]
    pub fn index(&self, k: i64) -> usize {
        (k + self.n_max as i64) as usize
    }

    /// All representable modes in ascending order.
    pub fn modes(&self) -> impl Iterator<Item = i64> {
        let n = self.n_max as i64;
        (-n..=n).filter(|&k| k != 0)
    }

    pub fn check(&self, k: i64) -> Result<()> {
        if k == 0 {
            Err(Error::ZeroMode)
        } else if !self.contains(k) {
            Err(Error::ModeOutOfRange {
                k,
                n_max: self.n_max,
            })
        } else {
            Ok(())
        }
    }
}

/// Sobolev exponent; negative values are allowed (dual norms).
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SobolevIndex(pub f64);

impl From<f64> for SobolevIndex {
    fn from(s: f64) -> Self {
        SobolevIndex(s)
    }
}

/// Hermitian-symmetric Fourier coefficients of a real mean-zero function.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    modes: ModeSet,
    coeffs: Vec<C64>,
}

impl SpectralField {
    pub fn zeros(modes: ModeSet) -> Self {
        SpectralField {
            modes,
            coeffs: vec![C64::new(0.0, 0.0); modes.len()],
        }
    }

    /// Builds a field from `(k, value)` entries. Entries may give one half of
    /// the spectrum (the other is filled by conjugation) or both halves, in
    /// which case they must be exact conjugates.
    pub fn from_entries(n_max: usize, entries: &[(i64, C64)]) -> Result<Self> {
        let modes = ModeSet::new(n_max)?;
        let mut f = SpectralField::zeros(modes);
        let mut given = vec![false; modes.len()];
        for &(k, c) in entries {
            modes.check(k)?;
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::NonFinite { k });
            }
            let i = modes.index(k);
            let j = modes.index(-k);
            if given[i] && f.coeffs[i] != c {
                return Err(Error::NotHermitian { k, neg: k });
            }
            if given[j] && f.coeffs[j] != c.conj() {
                return Err(Error::NotHermitian { k, neg: -k });
            }
            f.coeffs[i] = c;
            f.coeffs[j] = c.conj();
            given[i] = true;
        }
        Ok(f)
    }

    /// Builds a field from the positive half `c_1..=c_{n}`.
    pub fn from_positive(n_max: usize, positive: &[C64]) -> Result<Self> {
        let modes = ModeSet::new(n_max)?;
        if positive.len() > n_max {
            return Err(Error::ModeOutOfRange {
                k: positive.len() as i64,
                n_max,
            });
        }
        let mut f = SpectralField::zeros(modes);
        for (i, &c) in positive.iter().enumerate() {
            let k = i as i64 + 1;
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::NonFinite { k });
            }
            f.set(k, c);
        }
        Ok(f)
    }

    /// Wraps raw dense coefficients. The caller guarantees the length and a
    /// zero center slot; symmetry is the caller's responsibility.
    pub(crate) fn from_raw(modes: ModeSet, mut coeffs: Vec<C64>) -> Self {
        debug_assert_eq!(coeffs.len(), modes.len());
        coeffs[modes.n_max] = C64::new(0.0, 0.0);
        SpectralField { modes, coeffs }
    }

    #[inline]
    pub fn modes(&self) -> ModeSet {
        self.modes
    }

    #[inline]
    pub fn n_max(&self) -> usize {
        self.modes.n_max
    }

    /// Coefficient at `k`; zero outside the mode set (including `k = 0`).
    #[inline]
    pub fn get(&self, k: i64) -> C64 {
        if self.modes.contains(k) {
            self.coeffs[self.modes.index(k)]
        } else {
            C64::new(0.0, 0.0)
        }
    }

    /// Sets mode `k` and its conjugate partner `-k`.
    pub fn set(&mut self, k: i64, c: C64) {
        assert!(self.modes.contains(k), "mode {k} not representable");
        let (i, j) = (self.modes.index(k), self.modes.index(-k));
        self.coeffs[i] = c;
        self.coeffs[j] = c.conj();
    }

    /// Dense coefficients over `k = -n_max..=n_max`.
    #[inline]
    pub fn as_slice(&self) -> &[C64] {
        &self.coeffs
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    pub fn into_raw(self) -> Vec<C64> {
        self.coeffs
    }

    /// `max_k |c_{-k} - conj(c_k)|`.
    pub fn hermitian_defect(&self) -> f64 {
        self.modes
            .modes()
            .filter(|&k| k > 0)
            .map(|k| (self.get(-k) - self.get(k).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Replaces the field by its Hermitian part, `(c_k + conj(c_{-k})) / 2`.
    pub fn symmetrize(&mut self) {
        for k in 1..=self.n_max() as i64 {
            let c = (self.get(k) + self.get(-k).conj()) * 0.5;
            self.set(k, c);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn max_amplitude(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    /// `Σ_{k≠0} |k|^{2s} |c_k|²`.
    pub fn sobolev_norm_sq(&self, s: SobolevIndex) -> f64 {
        self.modes
            .modes()
            .map(|k| (k.unsigned_abs() as f64).powf(2.0 * s.0) * self.get(k).norm_sqr())
            .sum()
    }

    pub fn sobolev_norm(&self, s: SobolevIndex) -> f64 {
        self.sobolev_norm_sq(s).sqrt()
    }

    /// Real `Ḣ^0` inner product `Σ_k f_k conj(g_k)`.
    pub fn inner(&self, other: &SpectralField) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a * b.conj()).re)
            .sum()
    }

    /// Keeps `|k| <= n_cut`.
    pub fn project_low(&self, n_cut: usize) -> SpectralField {
        self.masked(|k| k.unsigned_abs() as usize <= n_cut)
    }

    /// Keeps `|k| > n_cut`.
    pub fn project_high(&self, n_cut: usize) -> SpectralField {
        self.masked(|k| k.unsigned_abs() as usize > n_cut)
    }

    pub(crate) fn masked(&self, keep: impl Fn(i64) -> bool) -> SpectralField {
        let n = self.n_max() as i64;
        let coeffs = self
            .coeffs
            .iter()
            .zip(-n..=n)
            .map(|(&c, k)| if keep(k) { c } else { C64::new(0.0, 0.0) })
            .collect();
        SpectralField {
            modes: self.modes,
            coeffs,
        }
    }

    /// Re-expresses the field over another truncation: embeds when the new
    /// set is larger, truncates when smaller.
    pub fn resized(&self, n_max: usize) -> Result<SpectralField> {
        let modes = ModeSet::new(n_max)?;
        let mut out = SpectralField::zeros(modes);
        for k in modes.modes() {
            out.coeffs[modes.index(k)] = self.get(k);
        }
        Ok(out)
    }

    pub fn scale(&self, a: f64) -> SpectralField {
        self.map(|c| c * a)
    }

    pub(crate) fn map(&self, f: impl Fn(C64) -> C64) -> SpectralField {
        SpectralField {
            modes: self.modes,
            coeffs: self.coeffs.iter().map(|&c| f(c)).collect(),
        }
    }

    pub(crate) fn map_indexed(&self, f: impl Fn(i64, C64) -> C64) -> SpectralField {
        let n = self.n_max() as i64;
        SpectralField {
            modes: self.modes,
            coeffs: (-n..=n).zip(&self.coeffs).map(|(k, &c)| f(k, c)).collect(),
        }
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &SpectralField) -> SpectralField {
        assert_eq!(self.modes, other.modes, "mode set mismatch");
        SpectralField {
            modes: self.modes,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(x, y)| x + y * a)
                .collect(),
        }
    }

    pub fn ensure_same_modes(&self, other: &SpectralField) -> Result<()> {
        if self.modes != other.modes {
            return Err(Error::ModeSetMismatch {
                left: self.n_max(),
                right: other.n_max(),
            });
        }
        Ok(())
    }

    /// Largest componentwise difference.
    pub fn max_abs_diff(&self, other: &SpectralField) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> FieldJson {
        FieldJson {
            n_max: self.n_max(),
            modes: (1..=self.n_max() as i64)
                .map(|k| {
                    let c = self.get(k);
                    (k, c.re, c.im)
                })
                .collect(),
        }
    }

    pub fn from_json(doc: &FieldJson) -> Result<SpectralField> {
        let entries: Vec<(i64, C64)> = doc
            .modes
            .iter()
            .map(|&(k, re, im)| (k, C64::new(re, im)))
            .collect();
        if let Some(&(k, _)) = entries.iter().find(|(k, _)| *k <= 0) {
            return Err(if k == 0 {
                Error::ZeroMode
            } else {
                Error::Config(format!("field files list only k > 0, found {k}"))
            });
        }
        SpectralField::from_entries(doc.n_max, &entries)
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(-1.0, rhs)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scale(-1.0)
    }
}

impl Mul<&SpectralField> for f64 {
    type Output = SpectralField;
    fn mul(self, rhs: &SpectralField) -> SpectralField {
        rhs.scale(self)
    }
}

/// On-disk field format: positive modes only, `[k, re, im]` triples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldJson {
    pub n_max: usize,
    pub modes: Vec<(i64, f64, f64)>,
}

/// Which representation the stored coefficients are in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gauge {
    /// Coefficients `U_k(t)` of the physical solution.
    Physical,
    /// Coefficients `u_k(t)` with `U_k(t) = exp(-i k³ t) u_k(t)`.
    Interaction,
}

/// The state `(u, v)` of the coupled system.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralPair {
    pub u: SpectralField,
    pub v: SpectralField,
    pub gauge: Gauge,
    pub t_ref: f64,
}

impl SpectralPair {
    pub fn new(u: SpectralField, v: SpectralField, gauge: Gauge, t_ref: f64) -> Result<Self> {
        u.ensure_same_modes(&v)?;
        Ok(SpectralPair { u, v, gauge, t_ref })
    }

    /// Interaction-gauge pair anchored at `t_ref`.
    pub fn interaction(u: SpectralField, v: SpectralField, t_ref: f64) -> Result<Self> {
        Self::new(u, v, Gauge::Interaction, t_ref)
    }

    pub fn zeros(modes: ModeSet, gauge: Gauge, t_ref: f64) -> Self {
        SpectralPair {
            u: SpectralField::zeros(modes),
            v: SpectralField::zeros(modes),
            gauge,
            t_ref,
        }
    }

    pub fn modes(&self) -> ModeSet {
        self.u.modes()
    }

    pub fn n_max(&self) -> usize {
        self.u.n_max()
    }

    /// Product norm `(‖u‖²_s + ‖v‖²_s)^{1/2}`.
    pub fn norm(&self, s: SobolevIndex) -> f64 {
        (self.u.sobolev_norm_sq(s) + self.v.sobolev_norm_sq(s)).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    pub fn max_amplitude(&self) -> f64 {
        self.u.max_amplitude().max(self.v.max_amplitude())
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.u.hermitian_defect().max(self.v.hermitian_defect())
    }

    /// Applies `f` to both components, keeping gauge and anchor.
    pub fn map_fields(&self, f: impl Fn(&SpectralField) -> SpectralField) -> SpectralPair {
        SpectralPair {
            u: f(&self.u),
            v: f(&self.v),
            gauge: self.gauge,
            t_ref: self.t_ref,
        }
    }

    pub fn zip_fields(
        &self,
        other: &SpectralPair,
        f: impl Fn(&SpectralField, &SpectralField) -> SpectralField,
    ) -> SpectralPair {
        SpectralPair {
            u: f(&self.u, &other.u),
            v: f(&self.v, &other.v),
            gauge: self.gauge,
            t_ref: self.t_ref,
        }
    }

    pub fn axpy(&self, a: f64, other: &SpectralPair) -> SpectralPair {
        self.zip_fields(other, |x, y| x.axpy(a, y))
    }

    pub fn scale(&self, a: f64) -> SpectralPair {
        self.map_fields(|x| x.scale(a))
    }

    pub fn project_low(&self, n_cut: usize) -> SpectralPair {
        self.map_fields(|f| f.project_low(n_cut))
    }

    pub fn project_high(&self, n_cut: usize) -> SpectralPair {
        self.map_fields(|f| f.project_high(n_cut))
    }

    pub fn resized(&self, n_max: usize) -> Result<SpectralPair> {
        Ok(SpectralPair {
            u: self.u.resized(n_max)?,
            v: self.v.resized(n_max)?,
            gauge: self.gauge,
            t_ref: self.t_ref,
        })
    }

    pub fn max_abs_diff(&self, other: &SpectralPair) -> f64 {
        self.u.max_abs_diff(&other.u).max(self.v.max_abs_diff(&other.v))
    }

    /// Converts to `target` at time `t`. Physical → Interaction multiplies
    /// mode `k` by `exp(i k³ t)`, the reverse by `exp(-i k³ t)`.
    pub fn gauge(&self, t: f64, target: Gauge) -> SpectralPair {
        if self.gauge == target {
            let mut p = self.clone();
            p.t_ref = t;
            return p;
        }
        let sign = match target {
            Gauge::Interaction => 1,
            Gauge::Physical => -1,
        };
        let rotate = |f: &SpectralField| {
            let n = f.n_max() as i64;
            let coeffs = f
                .as_slice()
                .iter()
                .zip(-n..=n)
                .map(|(&c, k)| c * unit(sign * cube(k), t))
                .collect();
            SpectralField::from_raw(f.modes(), coeffs)
        };
        SpectralPair {
            u: rotate(&self.u),
            v: rotate(&self.v),
            gauge: target,
            t_ref: t,
        }
    }

    /// `2‖u‖² + 2‖v‖² + ‖u - v‖²` in `Ḣ^0`; conserved by the flow.
    pub fn energy_functional(&self) -> f64 {
        let s0 = SobolevIndex(0.0);
        2.0 * self.u.sobolev_norm_sq(s0)
            + 2.0 * self.v.sobolev_norm_sq(s0)
            + (&self.u - &self.v).sobolev_norm_sq(s0)
    }

    /// Hamiltonian `½∫(A_x² + B_x² + A²B) dx` of the unsymmetrized system with
    /// `A = (U - V)/√2`, `B = (U + V)/2`. Interaction-gauge input is first
    /// converted to the physical gauge at its anchor time.
    pub fn hamiltonian(&self) -> f64 {
        let phys = self.gauge(self.t_ref, Gauge::Physical);
        let n = phys.n_max() as i64;
        let a: Vec<C64> = (-n..=n)
            .map(|k| (phys.u.get(k) - phys.v.get(k)) / 2f64.sqrt())
            .collect();
        let b: Vec<C64> = (-n..=n)
            .map(|k| (phys.u.get(k) + phys.v.get(k)) * 0.5)
            .collect();
        let at = |k: i64| a[(k + n) as usize];
        let bt = |k: i64| b[(k + n) as usize];
        let mut quad = 0.0;
        for k in (-n..=n).filter(|&k| k != 0) {
            quad += (k * k) as f64 * (at(k).norm_sqr() + bt(k).norm_sqr());
        }
        // ∫A²B = 2π Σ_{k1+k2+k3=0} A_{k1} A_{k2} B_{k3}
        let mut cubic = C64::new(0.0, 0.0);
        for k3 in (-n..=n).filter(|&k| k != 0) {
            let mut conv = C64::new(0.0, 0.0);
            let target = -k3;
            for k1 in (-n..=n).filter(|&k| k != 0) {
                let k2 = target - k1;
                if k2 != 0 && k2.abs() <= n {
                    conv += at(k1) * at(k2);
                }
            }
            cubic += conv * bt(k3);
        }
        0.5 * 2.0 * PI * (quad + cubic.re)
    }
}

/// Random test field with `|c_k| = amplitude · |k|^{-s-0.6}` and uniform
/// random phases: in `Ḣ^s`, borderline in `Ḣ^{s+0.1}`.
pub fn random_field(seed: u64, n_max: usize, s: SobolevIndex, amplitude: f64) -> SpectralField {
    let mut r = rng::rng(seed, 0x5EED);
    let modes = ModeSet::new(n_max.max(1)).expect("n_max >= 1");
    let mut f = SpectralField::zeros(modes);
    for k in 1..=n_max as i64 {
        let mag = amplitude * (k as f64).powf(-s.0 - 0.6);
        let theta: f64 = r.gen_range(0.0..2.0 * PI);
        f.set(k, C64::from_polar(mag, theta));
    }
    f
}

/// Random field whose `Ḣ^s`-weighted amplitudes `|k|^s |c_k|` are flat,
/// normalized so `‖f‖_s = amplitude`.
pub fn uniform_field(seed: u64, n_max: usize, s: SobolevIndex, amplitude: f64) -> SpectralField {
    let mut r = rng::rng(seed, 0xF1A7);
    let modes = ModeSet::new(n_max.max(1)).expect("n_max >= 1");
    let mut f = SpectralField::zeros(modes);
    let scale = amplitude / (2.0 * n_max as f64).sqrt();
    for k in 1..=n_max as i64 {
        let mag = scale * (k as f64).powf(-s.0);
        let theta: f64 = r.gen_range(0.0..2.0 * PI);
        f.set(k, C64::from_polar(mag, theta));
    }
    f
}

/// Pair of independent `random_field`s drawn from one seed.
pub fn random_pair(seed: u64, n_max: usize, s: SobolevIndex, amplitude: f64) -> SpectralPair {
    SpectralPair {
        u: random_field(rng::split(seed, 1), n_max, s, amplitude),
        v: random_field(rng::split(seed, 2), n_max, s, amplitude),
        gauge: Gauge::Interaction,
        t_ref: 0.0,
    }
}
