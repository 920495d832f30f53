//! Fixed-point solvers for the integrated modified forms and empirical
//! contraction constants.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve, stability_bound};
use crate::error::{Error, Result};
use crate::operators::vector::r3q_res_nres1_vec;
use crate::operators::{b1_low_vec, b1_vec, b2_high_vec, b30_vec, b40_vec, r3_high_vec};
use crate::rng;
use crate::spectral::{random_pair, Gauge, ModeSet, SobolevIndex, SpectralPair};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Which {
    FirstForm,
    SecondForm,
}

impl Which {
    pub fn name(self) -> &'static str {
        match self {
            Which::FirstForm => "FirstForm",
            Which::SecondForm => "SecondForm",
        }
    }

    /// Whether the analysis covers index `s` for this map.
    pub fn theory_backed(self, s: f64) -> bool {
        match self {
            Which::FirstForm => s > 0.5,
            Which::SecondForm => (0.0..=0.5).contains(&s),
        }
    }
}

fn default_m_grid() -> usize {
    65
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionConfig {
    pub n_max: usize,
    pub n_cut: usize,
    pub t_star: f64,
    #[serde(default = "default_m_grid")]
    pub m_grid: usize,
    pub radius_a: f64,
    pub s: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub which: Which,
}

impl ContractionConfig {
    pub fn validate(&self) -> Result<()> {
        ModeSet::new(self.n_max)?;
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.n_cut == 0 || self.n_cut > self.n_max {
            return bad("n_cut must lie in 1..=n_max");
        }
        if !(self.t_star.is_finite() && self.t_star > 0.0) {
            return bad("t_star must be positive");
        }
        if self.m_grid < 2 {
            return bad("m_grid must be >= 2");
        }
        if !(self.radius_a.is_finite() && self.radius_a > 0.0) {
            return bad("radius_a must be positive");
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be >= 1");
        }
        if !self.s.is_finite() {
            return bad("s must be finite");
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        self.t_star / (self.m_grid - 1) as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.m_grid).map(|i| i as f64 * h).collect()
    }

    fn index(&self) -> SobolevIndex {
        SobolevIndex(self.s)
    }
}

/// Shifted unknowns `(y, z)(t_i) = (u, v)(t_i) - (u_in, v_in)` on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub times: Vec<f64>,
    pub values: Vec<SpectralPair>,
}

impl GridFunction {
    pub fn zeros(cfg: &ContractionConfig) -> Result<Self> {
        let modes = ModeSet::new(cfg.n_max)?;
        let times = cfg.times();
        let values = times
            .iter()
            .map(|&t| SpectralPair::zeros(modes, Gauge::Interaction, t))
            .collect();
        Ok(GridFunction { times, values })
    }

    /// `sup_i ‖g(t_i)‖_{(Ḣ^s)²}`
    pub fn sup_norm(&self, s: SobolevIndex) -> f64 {
        self.values.iter().map(|p| p.norm(s)).fold(0.0, f64::max)
    }

    pub fn sup_diff(&self, other: &GridFunction, s: SobolevIndex) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.axpy(-1.0, b).norm(s))
            .fold(0.0, f64::max)
    }

    /// `(u, v)(t_i) = g(t_i) + initial`.
    pub fn reconstruct(&self, initial: &SpectralPair) -> Vec<SpectralPair> {
        self.values
            .iter()
            .zip(&self.times)
            .map(|(g, &t)| {
                let mut p = g.axpy(1.0, initial);
                p.t_ref = t;
                p
            })
            .collect()
    }

    fn check(&self, cfg: &ContractionConfig) -> Result<()> {
        if self.values.len() != cfg.m_grid || self.times.len() != cfg.m_grid {
            return Err(Error::Config(format!(
                "grid function has {} points, config expects {}",
                self.values.len(),
                cfg.m_grid
            )));
        }
        if let Some(p) = self.values.iter().find(|p| p.n_max() != cfg.n_max) {
            return Err(Error::ModeSetMismatch { left: p.n_max(), right: cfg.n_max });
        }
        Ok(())
    }
}

/// Terms evaluated at a single time: the instantaneous part and the integrand.
fn pointwise(p: &SpectralPair, t: f64, cfg: &ContractionConfig) -> (SpectralPair, SpectralPair) {
    let n = cfg.n_cut;
    match cfg.which {
        Which::FirstForm => (
            b2_high_vec(p, t, n),
            b1_low_vec(p, t, n).axpy(1.0, &r3_high_vec(p, t, n)),
        ),
        Which::SecondForm => {
            let d = b1_vec(p, t);
            (
                b2_high_vec(p, t, n).axpy(1.0, &b30_vec(p, t, n)),
                b1_low_vec(p, t, n)
                    .axpy(1.0, &r3q_res_nres1_vec(p, t, n))
                    .axpy(1.0, &b40_vec(p, t, n, Some(&d))),
            )
        }
    }
}

/// `F(g)(t) = K(u(t), t) - K(u_in, 0) + ∫_0^t G(u(τ), τ) dτ` with `u = u_in + g`,
/// `K` the instantaneous terms and `G` the integrand; composite trapezoid rule.
pub fn apply_map(g: &GridFunction, initial: &SpectralPair, cfg: &ContractionConfig) -> Result<GridFunction> {
    cfg.validate()?;
    g.check(cfg)?;
    if initial.n_max() != cfg.n_max {
        return Err(Error::ModeSetMismatch { left: initial.n_max(), right: cfg.n_max });
    }
    let states = g.reconstruct(initial);
    let evals: Vec<(SpectralPair, SpectralPair)> = states
        .par_iter()
        .zip(&g.times)
        .map(|(p, &t)| pointwise(p, t, cfg))
        .collect();
    let (k0, _) = pointwise(initial, 0.0, cfg);
    let h = cfg.spacing();
    let mut integral = evals[0].1.scale(0.0);
    let mut values = Vec::with_capacity(evals.len());
    for (i, (k, _)) in evals.iter().enumerate() {
        if i > 0 {
            integral = integral.axpy(0.5 * h, &evals[i - 1].1).axpy(0.5 * h, &evals[i].1);
        }
        let mut y = if i == 0 {
            k0.scale(0.0)
        } else {
            k.axpy(-1.0, &k0).axpy(1.0, &integral)
        };
        if !y.is_finite() {
            return Err(Error::NonFinite { k: 0 });
        }
        y.gauge = Gauge::Interaction;
        y.t_ref = g.times[i];
        values.push(y);
    }
    Ok(GridFunction {
        times: g.times.clone(),
        values,
    })
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub grid: GridFunction,
    pub iterations: usize,
    pub final_delta: f64,
    /// Sup-norm change at each iteration.
    pub deltas: Vec<f64>,
}

/// Picard iteration of [`apply_map`] from `g = 0`. Iterates are monitored
/// against `radius_a`, never projected.
pub fn solve_by_contraction(initial: &SpectralPair, cfg: &ContractionConfig) -> Result<Solution> {
    cfg.validate()?;
    let s = cfg.index();
    let mut g = GridFunction::zeros(cfg)?;
    let mut deltas = Vec::new();
    for it in 1..=cfg.max_iter {
        let next = apply_map(&g, initial, cfg)?;
        let norm = next.sup_norm(s);
        if norm > cfg.radius_a {
            return Err(Error::BallEscape {
                radius: cfg.radius_a,
                norm,
                iteration: it,
            });
        }
        let delta = next.sup_diff(&g, s);
        deltas.push(delta);
        g = next;
        if delta < cfg.tol {
            return Ok(Solution {
                grid: g,
                iterations: it,
                final_delta: delta,
                deltas,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iter,
        delta: *deltas.last().unwrap_or(&f64::NAN),
    })
}

/// Random grid function `(t/T*) a + (t/T*)² b` with sup norm `radius`.
fn random_grid(cfg: &ContractionConfig, seed: u64, radius: f64) -> Result<GridFunction> {
    let a = random_pair(rng::split(seed, 1), cfg.n_max, cfg.index(), 1.0);
    let b = random_pair(rng::split(seed, 2), cfg.n_max, cfg.index(), 1.0);
    let times = cfg.times();
    let values: Vec<SpectralPair> = times
        .iter()
        .map(|&t| {
            let x = t / cfg.t_star;
            let mut p = a.scale(x).axpy(x * x, &b);
            p.t_ref = t;
            p
        })
        .collect();
    let mut g = GridFunction { times, values };
    let sup = g.sup_norm(cfg.index());
    if sup > 0.0 {
        g.values = g.values.iter().map(|p| p.scale(radius / sup)).collect();
    }
    Ok(g)
}

/// Max over random pairs in the ball of `‖F(g) - F(g̃)‖ / ‖g - g̃‖` (sup norms in
/// `(Ḣ^s)²`); a lower bound on the Lipschitz constant of the map.
pub fn estimate_lipschitz(initial: &SpectralPair, cfg: &ContractionConfig, n_samples: usize, seed: u64) -> Result<f64> {
    cfg.validate()?;
    let s = cfg.index();
    let mut r = rng::rng(seed, 0x11F);
    let mut best: f64 = 0.0;
    for i in 0..n_samples {
        let (ra, rb): (f64, f64) = (r.gen_range(0.1..1.0), r.gen_range(0.1..1.0));
        let g = random_grid(cfg, rng::split(seed, 2 * i as u64 + 10), ra * cfg.radius_a)?;
        let h = random_grid(cfg, rng::split(seed, 2 * i as u64 + 11), rb * cfg.radius_a)?;
        let num = apply_map(&g, initial, cfg)?.sup_diff(&apply_map(&h, initial, cfg)?, s);
        let den = g.sup_diff(&h, s);
        if den > 0.0 {
            best = best.max(num / den);
        }
    }
    Ok(best)
}

/// `sup_i ‖(u, v)(t_i) - (ũ, ṽ)(t_i)‖ / ‖Δ initial‖`, zero for identical data.
pub fn continuous_dependence_check(a: &SpectralPair, b: &SpectralPair, cfg: &ContractionConfig) -> Result<f64> {
    let s = cfg.index();
    let d0 = a.axpy(-1.0, b).norm(s);
    if d0 == 0.0 {
        return Ok(0.0);
    }
    let sa = solve_by_contraction(a, cfg)?.grid.reconstruct(a);
    let sb = solve_by_contraction(b, cfg)?.grid.reconstruct(b);
    let sup = sa
        .iter()
        .zip(&sb)
        .map(|(x, y)| x.axpy(-1.0, y).norm(s))
        .fold(0.0, f64::max);
    Ok(sup / d0)
}

/// Dependence ratios for perturbations `initial + ε·direction` over `scales`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DependenceSweep {
    /// `(ε, ratio)`
    pub ratios: Vec<(f64, f64)>,
    /// Largest over smallest ratio.
    pub spread: f64,
}

impl DependenceSweep {
    pub fn within(&self, factor: f64) -> bool {
        self.spread.is_finite() && self.spread <= factor
    }
}

pub fn dependence_sweep(
    initial: &SpectralPair,
    direction: &SpectralPair,
    scales: &[f64],
    cfg: &ContractionConfig,
) -> Result<DependenceSweep> {
    if scales.is_empty() {
        return Err(Error::Config("no perturbation scales".into()));
    }
    let ratios = scales
        .iter()
        .map(|&eps| Ok((eps, continuous_dependence_check(initial, &initial.axpy(eps, direction), cfg)?)))
        .collect::<Result<Vec<_>>>()?;
    let hi = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    let lo = ratios.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let spread = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    Ok(DependenceSweep { ratios, spread })
}

/// Galerkin states at the grid times of `cfg`, with RK4 sub-steps no larger
/// than `spacing / substeps` and the stability bound.
pub fn galerkin_on_grid(initial: &SpectralPair, cfg: &ContractionConfig, substeps: usize) -> Result<Vec<SpectralPair>> {
    let h_grid = cfg.spacing();
    let bound = stability_bound(initial, 0.5);
    let mut sub = substeps.max(1);
    while h_grid / sub as f64 > bound {
        sub += 1;
    }
    let h = h_grid / sub as f64;
    let mut p = initial.clone();
    let mut out = vec![p.clone()];
    for i in 1..cfg.m_grid {
        p = evolve(&p, (i - 1) as f64 * h_grid, h, sub)?;
        out.push(p.clone());
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    /// `sup_i ‖fixed point - Galerkin‖_{(Ḣ^s)²}` at the grid times.
    pub max_discrepancy: f64,
    /// Trapezoid error model `C t_star³ / (m_grid - 1)²`.
    pub quadrature_error: f64,
    /// Fitted `C`.
    pub quadrature_constant: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Compares the fixed point with the Galerkin trajectory. The quadrature
/// constant comes from a grid-doubling sweep: the fixed point on a grid with
/// half the spacing gives `C = SAFETY · (4/3) (m-1)² ‖sol_m - sol_2m‖ / t_star³`.
pub fn agreement(initial: &SpectralPair, cfg: &ContractionConfig, solution: &Solution) -> Result<Agreement> {
    const SAFETY: f64 = 2.0;
    let s = cfg.index();
    let fine_cfg = ContractionConfig {
        m_grid: 2 * (cfg.m_grid - 1) + 1,
        ..cfg.clone()
    };
    let fine = solve_by_contraction(initial, &fine_cfg)?;
    let coarse = solution.grid.reconstruct(initial);
    let fine = fine.grid.reconstruct(initial);
    let refinement = coarse
        .iter()
        .enumerate()
        .map(|(i, p)| p.axpy(-1.0, &fine[2 * i]).norm(s))
        .fold(0.0, f64::max);
    let intervals = (cfg.m_grid - 1) as f64;
    let quadrature_constant = SAFETY * (4.0 / 3.0) * intervals * intervals * refinement / cfg.t_star.powi(3);
    let quadrature_error = quadrature_constant * cfg.t_star.powi(3) / (intervals * intervals);
    let reference = galerkin_on_grid(initial, cfg, 8)?;
    let max_discrepancy = coarse
        .iter()
        .zip(&reference)
        .map(|(a, b)| a.axpy(-1.0, b).norm(s))
        .fold(0.0, f64::max);
    let threshold = quadrature_error.max(1e-8).max(10.0 * cfg.tol);
    Ok(Agreement {
        max_discrepancy,
        quadrature_error,
        quadrature_constant,
        threshold,
        pass: max_discrepancy <= threshold,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub which: String,
    pub n_cut: usize,
    pub t_star: f64,
    pub iterations: usize,
    pub final_delta: f64,
    pub lipschitz_estimate: Option<f64>,
    pub escaped_ball: bool,
    pub theory_backed: bool,
}

impl SolverReport {
    pub fn new(cfg: &ContractionConfig, outcome: &Result<Solution>, lipschitz: Option<f64>) -> Self {
        let (iterations, final_delta, escaped_ball) = match outcome {
            Ok(sol) => (sol.iterations, sol.final_delta, false),
            Err(Error::BallEscape { iteration, norm, .. }) => (*iteration, *norm, true),
            Err(Error::NoConvergence { iterations, delta }) => (*iterations, *delta, false),
            Err(_) => (0, f64::NAN, false),
        };
        SolverReport {
            which: cfg.which.name().to_string(),
            n_cut: cfg.n_cut,
            t_star: cfg.t_star,
            iterations,
            final_delta,
            lipschitz_estimate: lipschitz,
            escaped_ball,
            theory_backed: cfg.which.theory_backed(cfg.s),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::uniform_field;

    pub(crate) fn smooth_data(seed: u64, n: usize, s: f64, norm: f64) -> SpectralPair {
        let u = uniform_field(rng::split(seed, 1), n, SobolevIndex(s), 1.0).project_low(4);
        let v = uniform_field(rng::split(seed, 2), n, SobolevIndex(s), 1.0).project_low(4);
        let p = SpectralPair::new(u, v, Gauge::Interaction, 0.0).unwrap();
        let scale = norm / p.norm(SobolevIndex(s));
        p.scale(scale)
    }

    fn cfg(which: Which, n: usize, n_cut: usize, s: f64) -> ContractionConfig {
        ContractionConfig {
            n_max: n,
            n_cut,
            t_star: 0.05,
            m_grid: 17,
            radius_a: 1.0,
            s,
            tol: 1e-12,
            max_iter: 60,
            which,
        }
    }

    #[test]
    fn zero_data_is_a_fixed_point() {
        for which in [Which::FirstForm, Which::SecondForm] {
            let c = cfg(which, 8, 4, 1.0);
            let p0 = SpectralPair::zeros(ModeSet::new(8).unwrap(), Gauge::Interaction, 0.0);
            let sol = solve_by_contraction(&p0, &c).unwrap();
            assert_eq!(sol.iterations, 1);
            assert!(sol.grid.values.iter().all(|p| p.u.is_zero() && p.v.is_zero()));
        }
    }

    #[test]
    fn output_vanishes_at_zero() {
        let c = cfg(Which::SecondForm, 8, 3, 0.0);
        let p0 = smooth_data(1, 8, 0.0, 0.3);
        let g = random_grid(&c, 5, 0.2).unwrap();
        let out = apply_map(&g, &p0, &c).unwrap();
        assert!(out.values[0].u.is_zero() && out.values[0].v.is_zero());
    }

    #[test]
    fn degenerate_split_is_picard() {
        let c = cfg(Which::FirstForm, 8, 8, 1.0);
        let p0 = smooth_data(2, 8, 1.0, 0.3);
        let g = random_grid(&c, 6, 0.1).unwrap();
        let out = apply_map(&g, &p0, &c).unwrap();
        let states = g.reconstruct(&p0);
        let f: Vec<SpectralPair> = states.iter().zip(&g.times).map(|(p, &t)| b1_vec(p, t)).collect();
        let h = c.spacing();
        let mut acc = f[0].scale(0.0);
        for i in 1..c.m_grid {
            acc = acc.axpy(0.5 * h, &f[i - 1]).axpy(0.5 * h, &f[i]);
            assert!(out.values[i].max_abs_diff(&acc) < 1e-14);
        }
    }

    #[test]
    fn fixed_points_match_galerkin() {
        for (which, s) in [(Which::FirstForm, 1.0), (Which::SecondForm, 0.0)] {
            let c = cfg(which, 12, 6, s);
            let p0 = smooth_data(3, 12, s, 0.1);
            let sol = solve_by_contraction(&p0, &c).unwrap();
            let a = agreement(&p0, &c, &sol).unwrap();
            assert!(a.pass, "{which:?} {a:?}");
            for w in sol.deltas.windows(2).skip(1) {
                if w[0] > 1e-13 {
                    assert!(w[1] < 0.9 * w[0], "{:?}", sol.deltas);
                }
            }
        }
    }

    #[test]
    fn long_horizon_fails() {
        let mut c = cfg(Which::FirstForm, 8, 4, 1.0);
        c.t_star = 10.0;
        c.radius_a = 0.5;
        c.max_iter = 30;
        let p0 = smooth_data(4, 8, 1.0, 1.0);
        let r = solve_by_contraction(&p0, &c);
        assert!(matches!(r, Err(Error::BallEscape { .. }) | Err(Error::NoConvergence { .. })), "{r:?}");
        let rep = SolverReport::new(&c, &r, None);
        assert!(rep.escaped_ball || rep.iterations == 30);
    }

    #[test]
    fn identical_data_has_zero_ratio() {
        let c = cfg(Which::FirstForm, 8, 4, 1.0);
        let p0 = smooth_data(5, 8, 1.0, 0.1);
        assert_eq!(continuous_dependence_check(&p0, &p0, &c).unwrap(), 0.0);
    }

    #[test]
    fn lipschitz_shrinks_with_horizon() {
        let mut c = cfg(Which::FirstForm, 16, 8, 1.0);
        c.radius_a = 0.2;
        let p0 = smooth_data(6, 16, 1.0, 0.1);
        let l1 = estimate_lipschitz(&p0, &c, 4, 1).unwrap();
        c.t_star *= 0.5;
        let l2 = estimate_lipschitz(&p0, &c, 4, 1).unwrap();
        assert!(l2 < l1, "{l1} {l2}");
    }

    #[test]
    fn lipschitz_shrinks_with_cutoff_on_short_horizons() {
        let p0 = smooth_data(6, 32, 1.0, 0.1);
        let est: Vec<f64> = [4, 8, 16]
            .iter()
            .map(|&n_cut| {
                let mut c = cfg(Which::FirstForm, 32, n_cut, 1.0);
                c.t_star = 0.003;
                c.radius_a = 0.2;
                estimate_lipschitz(&p0, &c, 4, 1).unwrap()
            })
            .collect();
        assert!(est[0] > est[1] && est[1] > est[2], "{est:?}");
    }
}
