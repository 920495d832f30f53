//! Galerkin time integration of the gauged system, diagnostics, and the
//! residual checks of the reformulated equations along trajectories.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{
    b1_low_vec, b1_vec, b2_high_vec, b2_vec, b30_vec, b3_vec, b40_vec, b4_vec, r3_high_vec, r3_vec,
    r3res_vec,
};
use crate::operators::vector::r3q_res_nres1_vec;
use crate::spectral::{
    random_field, FieldJson, Gauge, ModeSet, SobolevIndex, SpectralField, SpectralPair,
};
use crate::rng;

/// How the initial pair is produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InitialData {
    Explicit { u: FieldJson, v: FieldJson },
    /// `random_field` draws for `u` and `v`, optionally projected to
    /// `|k| <= support` and optionally with `v = 0`.
    Random {
        seed: u64,
        s: f64,
        amplitude: f64,
        #[serde(default)]
        support: Option<usize>,
        #[serde(default)]
        v_zero: bool,
    },
}

impl InitialData {
    pub fn build(&self, n_max: usize) -> Result<SpectralPair> {
        let (u, v) = match self {
            InitialData::Explicit { u, v } => {
                let u = SpectralField::from_json(u)?.resized(n_max)?;
                let v = SpectralField::from_json(v)?.resized(n_max)?;
                (u, v)
            }
            InitialData::Random {
                seed,
                s,
                amplitude,
                support,
                v_zero,
            } => {
                if !(amplitude.is_finite() && *amplitude >= 0.0) {
                    return Err(Error::Config(format!("amplitude must be >= 0, got {amplitude}")));
                }
                let k = support.unwrap_or(n_max).min(n_max);
                let u = random_field(rng::split(*seed, 1), n_max, SobolevIndex(*s), *amplitude).project_low(k);
                let v = if *v_zero {
                    SpectralField::zeros(u.modes())
                } else {
                    random_field(rng::split(*seed, 2), n_max, SobolevIndex(*s), *amplitude).project_low(k)
                };
                (u, v)
            }
        };
        SpectralPair::new(u, v, Gauge::Interaction, 0.0)
    }
}

fn default_every() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n_max: usize,
    /// Time step; absent means the stability rule's bound for the initial data.
    #[serde(default)]
    pub dt: Option<f64>,
    pub t_end: f64,
    pub initial: InitialData,
    #[serde(default = "default_every")]
    pub diagnostic_every: usize,
    #[serde(default = "default_every")]
    pub record_every: usize,
    /// Multiplier of the default step-size rule used for validation.
    #[serde(default = "default_stability_factor")]
    pub stability_factor: f64,
}

fn default_stability_factor() -> f64 {
    0.5
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        ModeSet::new(self.n_max)?;
        if let Some(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(Error::Config(format!("dt must be positive, got {dt}")));
            }
            if self.t_end < dt {
                return Err(Error::Config(format!("t_end = {} is shorter than dt = {dt}", self.t_end)));
            }
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.stability_factor.is_finite() && self.stability_factor > 0.0) {
            return Err(Error::Config("stability_factor must be positive".into()));
        }
        if self.diagnostic_every == 0 || self.record_every == 0 {
            return Err(Error::Config("diagnostic_every and record_every must be >= 1".into()));
        }
        Ok(())
    }

    /// Step count and step size for initial data `p0`. The configured (or
    /// default) step is rounded so that `t_end` is hit exactly; rounding up
    /// in count keeps the step within the bound.
    pub fn schedule(&self, p0: &SpectralPair) -> Result<(usize, f64)> {
        let bound = stability_bound(p0, self.stability_factor);
        let dt = match self.dt {
            Some(dt) if dt > bound => return Err(Error::Stability { dt, bound }),
            Some(dt) => dt,
            None if bound.is_finite() => bound.min(self.t_end),
            None => self.t_end,
        };
        let ratio = self.t_end / dt;
        let steps = if (ratio - ratio.round()).abs() < 1e-9 * ratio {
            ratio.round()
        } else {
            ratio.ceil()
        };
        let steps = (steps as usize).max(1);
        Ok((steps, self.t_end / steps as f64))
    }
}

/// Default step-size rule `dt <= factor / (n_max² max_k |u_k, v_k|)`.
pub fn stability_bound(p: &SpectralPair, factor: f64) -> f64 {
    let amp = p.max_amplitude();
    let n = p.n_max() as f64;
    if amp == 0.0 {
        f64::INFINITY
    } else {
        factor / (n * n * amp)
    }
}

/// Right-hand side of the Galerkin system: `P b1_vec(P p)`, zero for `|k| > n_cut`.
pub fn galerkin_rhs(p: &SpectralPair, t: f64, n_cut: usize) -> SpectralPair {
    if n_cut >= p.n_max() {
        b1_vec(p, t)
    } else {
        b1_vec(&p.project_low(n_cut), t).project_low(n_cut)
    }
}

/// One classical fourth-order Runge-Kutta step of size `h` (may be negative).
pub fn rk4_step(p: &SpectralPair, t: f64, h: f64, n_cut: usize) -> SpectralPair {
    let k1 = galerkin_rhs(p, t, n_cut);
    let k2 = galerkin_rhs(&p.axpy(0.5 * h, &k1), t + 0.5 * h, n_cut);
    let k3 = galerkin_rhs(&p.axpy(0.5 * h, &k2), t + 0.5 * h, n_cut);
    let k4 = galerkin_rhs(&p.axpy(h, &k3), t + h, n_cut);
    let mut out = p
        .axpy(h / 6.0, &k1)
        .axpy(h / 3.0, &k2)
        .axpy(h / 3.0, &k3)
        .axpy(h / 6.0, &k4);
    out.t_ref = t + h;
    out.gauge = Gauge::Interaction;
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy_cal: f64,
    pub hamiltonian: f64,
    /// `(s, ‖(u,v)‖_s)` pairs.
    pub norms: Vec<(f64, f64)>,
    pub max_mode_amp: f64,
}

pub const DIAGNOSTIC_INDICES: [f64; 3] = [0.0, 0.5, 1.0];

impl DiagnosticsRecord {
    pub fn of(p: &SpectralPair, t: f64) -> Self {
        let mut q = p.clone();
        q.t_ref = t;
        DiagnosticsRecord {
            t,
            energy_cal: p.energy_functional(),
            hamiltonian: q.hamiltonian(),
            norms: DIAGNOSTIC_INDICES
                .iter()
                .map(|&s| (s, p.norm(SobolevIndex(s))))
                .collect(),
            max_mode_amp: p.max_amplitude(),
        }
    }

    pub fn norm(&self, s: f64) -> Option<f64> {
        self.norms.iter().find(|(x, _)| *x == s).map(|(_, v)| *v)
    }
}

/// Time-sampled states in the interaction gauge.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SpectralPair>,
    pub config: SimulationConfig,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &SpectralPair {
        self.states.last().expect("non-empty trajectory")
    }

    /// Maximum relative drift of `𝓔` over the recorded states.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.states[0].energy_functional();
        let dmax = self
            .states
            .iter()
            .map(|p| (p.energy_functional() - e0).abs())
            .fold(0.0, f64::max);
        if e0 == 0.0 {
            dmax
        } else {
            dmax / e0
        }
    }
}

/// Integrates from explicit initial data.
pub fn integrate_from(
    p0: &SpectralPair,
    config: &SimulationConfig,
) -> Result<(Trajectory, Vec<DiagnosticsRecord>)> {
    config.validate()?;
    if p0.n_max() != config.n_max {
        return Err(Error::ModeSetMismatch {
            left: p0.n_max(),
            right: config.n_max,
        });
    }
    let (steps, h) = config.schedule(p0)?;
    let mut p = p0.gauge(0.0, Gauge::Interaction);
    let mut times = vec![0.0];
    let mut states = vec![p.clone()];
    let mut diags = vec![DiagnosticsRecord::of(&p, 0.0)];
    for step in 1..=steps {
        let t0 = (step - 1) as f64 * h;
        p = rk4_step(&p, t0, h, config.n_max);
        let t = step as f64 * h;
        if !p.is_finite() {
            return Err(Error::Divergence { step, t });
        }
        if step % config.record_every == 0 || step == steps {
            times.push(t);
            states.push(p.clone());
        }
        if step % config.diagnostic_every == 0 || step == steps {
            diags.push(DiagnosticsRecord::of(&p, t));
        }
    }
    Ok((
        Trajectory {
            times,
            states,
            config: config.clone(),
        },
        diags,
    ))
}

pub fn integrate(config: &SimulationConfig) -> Result<(Trajectory, Vec<DiagnosticsRecord>)> {
    config.validate()?;
    let p0 = config.initial.build(config.n_max)?;
    integrate_from(&p0, config)
}

/// Advances `p` from `t0` by `steps` steps of size `h` (negative allowed).
pub fn evolve(p: &SpectralPair, t0: f64, h: f64, steps: usize) -> Result<SpectralPair> {
    let mut q = p.clone();
    for i in 0..steps {
        q = rk4_step(&q, t0 + i as f64 * h, h, q.n_max());
        if !q.is_finite() {
            return Err(Error::Divergence {
                step: i + 1,
                t: t0 + (i + 1) as f64 * h,
            });
        }
    }
    Ok(q)
}

/// Physical-gauge right-hand side
/// `∂t U_k = -ik³ U_k + (ik/2) Σ (U_{k1} V_{k2} - U_{k1} U_{k2})` (and for `V`).
pub fn physical_rhs(p: &SpectralPair) -> SpectralPair {
    let mut q = p.clone();
    q.gauge = Gauge::Interaction;
    // With t = 0 the gauged nonlinearity is the physical one.
    let nl = b1_vec(&q, 0.0);
    let lin = |f: &SpectralField| {
        f.map_indexed(|k, c| c * num_complex::Complex64::new(0.0, -(k * k * k) as f64))
    };
    SpectralPair {
        u: &nl.u + &lin(&p.u),
        v: &nl.v + &lin(&p.v),
        gauge: Gauge::Physical,
        t_ref: p.t_ref,
    }
}

/// Reformulations of the equation checked along trajectories.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Form {
    /// `∂t[u - B2] = R3`
    First,
    /// `∂t[u - B2 + B3] = R3res + B4`
    Second,
    /// `∂t[u - B2^Q] = B1^P + R3^Q`
    ModifiedFirst,
    /// `∂t[u - B2^Q - B30] = B1^P + R3res^Q + R3nres1^Q + B40`
    ModifiedSecond,
}

impl Form {
    pub const ALL: [Form; 4] = [Form::First, Form::Second, Form::ModifiedFirst, Form::ModifiedSecond];

    pub fn name(self) -> &'static str {
        match self {
            Form::First => "first",
            Form::Second => "second",
            Form::ModifiedFirst => "modified_first",
            Form::ModifiedSecond => "modified_second",
        }
    }

    pub fn needs_cut(self) -> bool {
        matches!(self, Form::ModifiedFirst | Form::ModifiedSecond)
    }

    /// Bracketed quantity under the time derivative.
    pub fn lhs(self, p: &SpectralPair, t: f64, n_cut: usize) -> SpectralPair {
        match self {
            Form::First => p.axpy(-1.0, &b2_vec(p, t)),
            Form::Second => p.axpy(-1.0, &b2_vec(p, t)).axpy(1.0, &b3_vec(p, t)),
            Form::ModifiedFirst => p.axpy(-1.0, &b2_high_vec(p, t, n_cut)),
            Form::ModifiedSecond => p
                .axpy(-1.0, &b2_high_vec(p, t, n_cut))
                .axpy(-1.0, &b30_vec(p, t, n_cut)),
        }
    }

    /// Right-hand side of the form.
    pub fn rhs(self, p: &SpectralPair, t: f64, n_cut: usize) -> SpectralPair {
        match self {
            Form::First => r3_vec(p, t),
            Form::Second => {
                let d = b1_vec(p, t);
                r3res_vec(p, t).axpy(1.0, &b4_vec(p, t, Some(&d)))
            }
            Form::ModifiedFirst => b1_low_vec(p, t, n_cut).axpy(1.0, &r3_high_vec(p, t, n_cut)),
            Form::ModifiedSecond => {
                let d = b1_vec(p, t);
                b1_low_vec(p, t, n_cut)
                    .axpy(1.0, &r3q_res_nres1_vec(p, t, n_cut))
                    .axpy(1.0, &b40_vec(p, t, n_cut, Some(&d)))
            }
        }
    }
}

/// Per-sample residuals `‖(L_{i+1} - L_{i-1}) / (t_{i+1} - t_{i-1}) - R_i‖`
/// in `(Ḣ⁰)²` at every interior sample.
pub fn form_residuals(traj: &Trajectory, form: Form, n_cut: Option<usize>) -> Result<Vec<f64>> {
    if traj.len() < 3 {
        return Err(Error::TrajectoryTooShort { len: traj.len(), need: 3 });
    }
    let n_cut = match (form.needs_cut(), n_cut) {
        (true, None) => return Err(Error::Config(format!("form {} needs n_cut", form.name()))),
        (_, Some(c)) if c == 0 => return Err(Error::Config("n_cut must be >= 1".into())),
        (_, c) => c.unwrap_or(traj.states[0].n_max()),
    };
    let lhs: Vec<SpectralPair> = traj
        .states
        .iter()
        .zip(&traj.times)
        .map(|(p, &t)| form.lhs(p, t, n_cut))
        .collect();
    let s0 = SobolevIndex(0.0);
    Ok((1..traj.len() - 1)
        .map(|i| {
            let h = traj.times[i + 1] - traj.times[i - 1];
            let fd = lhs[i + 1].axpy(-1.0, &lhs[i - 1]).scale(1.0 / h);
            let r = form.rhs(&traj.states[i], traj.times[i], n_cut);
            fd.axpy(-1.0, &r).norm(s0)
        })
        .collect())
}

/// Maximum of [`form_residuals`].
pub fn form_residual(traj: &Trajectory, form: Form, n_cut: Option<usize>) -> Result<f64> {
    Ok(form_residuals(traj, form, n_cut)?.into_iter().fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub reference_n: usize,
    pub t_end: f64,
    pub dt: f64,
    /// `(N, ‖(u^N, v^N)(t_end) - (u^ref, v^ref)(t_end)‖_{(Ḣ⁰)²})`
    pub errors: Vec<(usize, f64)>,
    pub strictly_decreasing: bool,
}

/// Integrates the truncated initial data at each cutoff and compares the
/// final states with the reference run at `base.n_max`.
pub fn convergence_study(base: &SimulationConfig, n_list: &[usize]) -> Result<ConvergenceReport> {
    base.validate()?;
    if n_list.is_empty() {
        return Err(Error::Config("n_list is empty".into()));
    }
    if let Some(&n) = n_list.iter().find(|&&n| n == 0 || n > base.n_max) {
        return Err(Error::Config(format!("cutoff {n} outside 1..={}", base.n_max)));
    }
    let p0 = base.initial.build(base.n_max)?;
    let (_, dt) = base.schedule(&p0)?;
    // Every cutoff uses the reference step.
    let base = &SimulationConfig {
        dt: Some(dt),
        ..base.clone()
    };
    let (reference, _) = integrate_from(&p0, base)?;
    let r = reference.last();
    let mut errors = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let cfg = SimulationConfig {
            n_max: n,
            ..base.clone()
        };
        let q0 = p0.project_low(n).resized(n)?;
        let fin = if n == base.n_max {
            r.clone()
        } else {
            let (traj, _) = integrate_from(&q0, &cfg)?;
            traj.last().resized(base.n_max)?
        };
        errors.push((n, fin.axpy(-1.0, r).norm(SobolevIndex(0.0))));
    }
    let strictly_decreasing = errors.windows(2).all(|w| w[1].1 < w[0].1);
    Ok(ConvergenceReport {
        reference_n: base.n_max,
        t_end: base.t_end,
        dt,
        errors,
        strictly_decreasing,
    })
}

/// Snapshot file contents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub gauge: Gauge,
    pub u: FieldJson,
    pub v: FieldJson,
}

impl Snapshot {
    pub fn of(p: &SpectralPair, t: f64) -> Self {
        Snapshot {
            t,
            gauge: p.gauge,
            u: p.u.to_json(),
            v: p.v.to_json(),
        }
    }

    pub fn to_pair(&self) -> Result<SpectralPair> {
        SpectralPair::new(
            SpectralField::from_json(&self.u)?,
            SpectralField::from_json(&self.v)?,
            self.gauge,
            self.t,
        )
    }
}

pub const DIAGNOSTICS_HEADER: &str = "t,energy_cal,hamiltonian,norm_s0,norm_s05,norm_s1,max_mode_amp";

pub fn diagnostics_csv(diags: &[DiagnosticsRecord]) -> String {
    let mut out = String::from(DIAGNOSTICS_HEADER);
    out.push('\n');
    for d in diags {
        let cols = [
            d.t,
            d.energy_cal,
            d.hamiltonian,
            d.norm(0.0).unwrap_or(f64::NAN),
            d.norm(0.5).unwrap_or(f64::NAN),
            d.norm(1.0).unwrap_or(f64::NAN),
            d.max_mode_amp,
        ];
        let line: Vec<String> = cols.iter().map(|x| format!("{x:.16e}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Writes `config.json`, `diagnostics.csv` and `snapshots/NNNNNN.json`.
pub fn write_trajectory_dir(dir: &Path, traj: &Trajectory, diags: &[DiagnosticsRecord]) -> Result<()> {
    fs::create_dir_all(dir.join("snapshots"))?;
    fs::write(dir.join("config.json"), serde_json::to_string_pretty(&traj.config)?)?;
    fs::write(dir.join("diagnostics.csv"), diagnostics_csv(diags))?;
    for (i, (p, &t)) in traj.states.iter().zip(&traj.times).enumerate() {
        let mut f = fs::File::create(dir.join("snapshots").join(format!("{i:06}.json")))?;
        f.write_all(serde_json::to_string(&Snapshot::of(p, t))?.as_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::random_pair;

    fn smooth(seed: u64, n: usize, amp: f64, support: usize) -> SimulationConfig {
        SimulationConfig {
            n_max: n,
            dt: Some(1e-3),
            t_end: 0.05,
            initial: InitialData::Random {
                seed,
                s: 1.0,
                amplitude: amp,
                support: Some(support),
                v_zero: false,
            },
            diagnostic_every: 1,
            record_every: 1,
            stability_factor: 0.5,
        }
    }

    #[test]
    fn zero_data_stays_zero() {
        let mut cfg = smooth(1, 8, 0.0, 8);
        cfg.t_end = 0.01;
        let (traj, diags) = integrate(&cfg).unwrap();
        assert!(traj.states.iter().all(|p| p.u.is_zero() && p.v.is_zero()));
        assert!(diags.iter().all(|d| d.energy_cal == 0.0));
    }

    #[test]
    fn rhs_conserves_energy_instantaneously() {
        // d/dε 𝓔(p + ε f) at ε = 0 with f the right-hand side.
        for seed in 0..5 {
            let p = random_pair(seed, 16, SobolevIndex(0.0), 1.0);
            for cut in [16, 9] {
                let f = galerkin_rhs(&p, 0.3, cut);
                let d = 4.0 * p.u.inner(&f.u) + 4.0 * p.v.inner(&f.v) + 2.0 * (&p.u - &p.v).inner(&(&f.u - &f.v));
                let scale = p.norm(SobolevIndex(0.0)) * f.norm(SobolevIndex(0.0));
                assert!(d.abs() < 1e-13 * scale, "{d} {scale}");
            }
        }
    }

    #[test]
    fn galerkin_rhs_projection_rules() {
        let p = random_pair(2, 12, SobolevIndex(0.0), 1.0);
        let hi = p.project_high(5);
        let r = galerkin_rhs(&hi, 0.2, 5);
        assert!(r.u.is_zero() && r.v.is_zero());
        let full = galerkin_rhs(&p, 0.2, 12);
        assert_eq!(full, b1_vec(&p, 0.2));
    }

    #[test]
    fn validation_errors() {
        let mut cfg = smooth(1, 8, 0.1, 8);
        cfg.t_end = 0.0;
        assert!(matches!(integrate(&cfg), Err(Error::Config(_))));
        let mut cfg = smooth(1, 8, 10.0, 8);
        cfg.dt = Some(0.1);
        cfg.t_end = 1.0;
        assert!(matches!(integrate(&cfg), Err(Error::Stability { .. })));
    }

    #[test]
    fn residual_needs_three_samples_and_detects_non_solutions() {
        let cfg = smooth(3, 8, 0.05, 3);
        let p = cfg.initial.build(8).unwrap();
        let short = Trajectory {
            times: vec![0.0, 0.1],
            states: vec![p.clone(), p.clone()],
            config: cfg.clone(),
        };
        assert!(matches!(
            form_residual(&short, Form::First, None),
            Err(Error::TrajectoryTooShort { .. })
        ));
        let frozen = Trajectory {
            times: vec![0.0, 0.01, 0.02],
            states: vec![p.clone(), p.clone(), p.clone()],
            config: cfg,
        };
        assert!(form_residual(&frozen, Form::First, None).unwrap() > 1e-6);
    }

    #[test]
    fn forms_hold_along_a_trajectory_at_second_order() {
        for form in Form::ALL {
            let r: Vec<f64> = [5e-4, 2.5e-4, 1.25e-4]
                .iter()
                .map(|&dt| {
                    let mut cfg = smooth(4, 10, 0.3, 4);
                    cfg.dt = Some(dt);
                    cfg.t_end = 10.0 * dt;
                    let (traj, _) = integrate(&cfg).unwrap();
                    form_residual(&traj, form, Some(2)).unwrap()
                })
                .collect();
            for w in r.windows(2) {
                let ratio = w[0] / w[1];
                assert!((3.5..=4.5).contains(&ratio), "{form:?} {r:?}");
            }
        }
    }

    #[test]
    fn time_reversal_is_fourth_order() {
        let cfg = smooth(5, 8, 0.3, 4);
        let p0 = cfg.initial.build(8).unwrap();
        let err = |h: f64, n: usize| {
            let fwd = evolve(&p0, 0.0, h, n).unwrap();
            evolve(&fwd, h * n as f64, -h, n).unwrap().max_abs_diff(&p0)
        };
        let e1 = err(4e-3, 50);
        let e2 = err(2e-3, 100);
        assert!(e1 < 1e-6, "{e1}");
        assert!(e1 / e2 > 12.0, "{e1} {e2}");
    }

    #[test]
    fn invariant_subspaces_and_symmetry() {
        let mut cfg = smooth(7, 16, 0.2, 6);
        cfg.dt = None;
        cfg.t_end = 0.5;
        if let InitialData::Random { v_zero, .. } = &mut cfg.initial {
            *v_zero = true;
        }
        let (traj, _) = integrate(&cfg).unwrap();
        for p in &traj.states {
            assert!(p.v.max_amplitude() < 1e-13 * p.u.sobolev_norm(SobolevIndex(0.0)));
            assert_eq!(p.hermitian_defect(), 0.0);
            assert_eq!(p.u.get(0), num_complex::Complex64::new(0.0, 0.0));
        }
        // u = 0 by swapping components.
        let p0 = traj.states[0].clone();
        let swapped = SpectralPair { u: p0.v.clone(), v: p0.u.clone(), ..p0 };
        let q = evolve(&swapped, 0.0, 1e-3, 200).unwrap();
        let r = evolve(&p0, 0.0, 1e-3, 200).unwrap();
        assert!(q.u.max_amplitude() < 1e-13 * q.v.sobolev_norm(SobolevIndex(0.0)));
        assert!(q.v.max_abs_diff(&r.u) < 1e-12);
    }

    #[test]
    fn gauge_consistency_with_physical_equation() {
        let cfg = smooth(8, 6, 0.3, 3);
        let p0 = cfg.initial.build(6).unwrap();
        let (t, h) = (0.2, 1e-5);
        let at = |t1: f64| {
            let steps = (t1 / 1e-4).round() as usize;
            evolve(&p0, 0.0, t1 / steps as f64, steps).unwrap().gauge(t1, Gauge::Physical)
        };
        let fd = at(t + h).axpy(-1.0, &at(t - h)).scale(0.5 / h);
        let rhs = physical_rhs(&at(t));
        let rel = fd.axpy(-1.0, &rhs).norm(SobolevIndex(0.0)) / rhs.norm(SobolevIndex(0.0));
        assert!(rel < 1e-5, "{rel}");
    }

    #[test]
    fn hamiltonian_drift() {
        let mut cfg = smooth(9, 32, 0.1, 4);
        cfg.dt = None;
        cfg.stability_factor = 0.125;
        cfg.t_end = 1.0;
        let (_, diags) = integrate(&cfg).unwrap();
        let h0 = diags[0].hamiltonian;
        let drift = diags.iter().map(|d| (d.hamiltonian - h0).abs()).fold(0.0, f64::max) / h0.abs();
        assert!(drift < 1e-8, "{drift}");
    }

    #[test]
    fn convergence_trivial_cases() {
        let mut cfg = smooth(10, 16, 0.02, 3);
        cfg.dt = None;
        cfg.t_end = 0.2;
        let rep = convergence_study(&cfg, &[4, 8, 16]).unwrap();
        assert_eq!(rep.errors[2].1, 0.0);
        // Modes above the cutoff are excited only through repeated products.
        assert!(rep.errors[1].1 < 1e-8, "{:?}", rep.errors);
        assert!(rep.errors[1].1 < 1e-2 * rep.errors[0].1);
        assert!(convergence_study(&cfg, &[32]).is_err());
    }

    #[test]
    fn trajectory_directory_round_trip() {
        let cfg = smooth(6, 6, 0.05, 3);
        let (traj, diags) = integrate(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_trajectory_dir(dir.path(), &traj, &diags).unwrap();
        let csv = fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
        assert!(csv.starts_with(DIAGNOSTICS_HEADER));
        assert_eq!(csv.lines().count(), diags.len() + 1);
        let snap: Snapshot =
            serde_json::from_str(&fs::read_to_string(dir.path().join("snapshots/000003.json")).unwrap()).unwrap();
        assert_eq!(snap.to_pair().unwrap().u, traj.states[3].u);
    }
}
