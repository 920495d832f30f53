//! Verification harness: oracle equivalence, split identities, the
//! differentiation-by-parts residual checks and empirical operator bounds.
//!
//! Failures are reported in the returned documents, never thrown; only
//! malformed requests produce errors.

pub mod bounds;
pub mod oracle;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dynamics::{form_residual, integrate, Form, SimulationConfig, Trajectory};
use crate::error::{Error, Result};
use crate::operators::vector::{eval_terms, r3q_res_nres1_vec, term_list};
use crate::operators::{
    b1, b1_low_vec, b1_vec, b1q_vec, b2, b2_high_vec, b2_vec, b30_vec, b3, b3_vec, b40_vec, b4, b4_vec, r3,
    r3_high_vec, r3_vec, r3nres, r3nres_vec, r3res_closed, r3res_vec, split_r3q, ArgumentFilter, Band,
    OperatorId,
};
use crate::rng;
use crate::spectral::{random_field, uniform_field, SobolevIndex, SpectralField, SpectralPair};

pub use bounds::{b1_duality, b21_grid, bounds_csv, lemma_bound, loglog_fit, BoundEstimate, Expectation, Verdict};
pub use oracle::{brute_force_oracle, brute_force_vector, VectorOp, ORACLE_LIMIT};

/// Relative tolerance of the exact identities.
pub const IDENTITY_TOL: f64 = 1e-12;

/// Sample times of the identity checks.
pub const T_VALUES: [f64; 3] = [0.0, 0.37, 2.0];

/// Outputs below this multiple of the input scale count as zero when
/// forming relative errors.
const ZERO_FLOOR: f64 = 1e-9;

/// One named comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub samples: usize,
    pub max_rel_err: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, errs: &[f64], tol: f64) -> Self {
        let max_rel_err = errs.iter().copied().fold(0.0, f64::max);
        Check {
            name: name.into(),
            samples: errs.len(),
            max_rel_err,
            tol,
            pass: errs.iter().all(|e| e.is_finite()) && max_rel_err <= tol,
        }
    }
}

/// `max|a - b| / max(max|a|, max|b|)`, zero when both are below `floor`.
pub fn relative_error(a: &SpectralField, b: &SpectralField, floor: f64) -> f64 {
    let diff = a.max_abs_diff(b);
    let scale = a.max_amplitude().max(b.max_amplitude());
    if diff == 0.0 || scale <= floor {
        return if diff <= floor { 0.0 } else { f64::INFINITY };
    }
    diff / scale
}

pub fn relative_error_pair(a: &SpectralPair, b: &SpectralPair, floor: f64) -> f64 {
    let diff = a.max_abs_diff(b);
    let scale = a.max_amplitude().max(b.max_amplitude());
    if diff == 0.0 || scale <= floor {
        return if diff <= floor { 0.0 } else { f64::INFINITY };
    }
    diff / scale
}

fn band(b: Band, f: &SpectralField, n_cut: usize) -> SpectralField {
    match b {
        Band::All => f.clone(),
        Band::Low => f.project_low(n_cut),
        Band::High => f.project_high(n_cut),
    }
}

/// Evaluates the production implementation of a scalar operator.
pub fn fast_scalar(op: OperatorId, args: &[&SpectralField], t: f64, filter: &ArgumentFilter) -> Result<SpectralField> {
    if args.len() != op.arity() {
        return Err(Error::Config(format!("{op} takes {} arguments", op.arity())));
    }
    let nc = filter.n_cut;
    let m: Vec<SpectralField> = args.iter().enumerate().map(|(i, a)| band(filter.args[i], a, nc)).collect();
    let pair_only = ArgumentFilter { args: [Band::All; 4], ..*filter };
    let q = |f: &SpectralField| f.project_high(nc);
    let p = |f: &SpectralField| f.project_low(nc);
    Ok(match op {
        OperatorId::B1 => b1(&m[0], &m[1], t)?,
        OperatorId::B2 => b2(&m[0], &m[1], t)?,
        OperatorId::B4 => b4(&m[0], &m[1], &m[2], &m[3], t)?.field,
        OperatorId::R3 => r3(args[0], args[1], args[2], t, filter)?,
        OperatorId::R3nres => r3nres(args[0], args[1], args[2], t, filter)?,
        OperatorId::B3 => b3(args[0], args[1], args[2], t, filter)?,
        OperatorId::R3res => {
            if filter.pair.is_some() {
                return Err(Error::Config("the closed resonant sum takes no pair constraint".into()));
            }
            r3res_closed(&m[0], &m[1], &m[2])?
        }
        OperatorId::R3nres0 => r3nres(&m[0], &q(&m[1]), &q(&m[2]), t, &pair_only)?,
        OperatorId::R3nres1 => {
            &r3nres(&m[0], &p(&m[1]), &m[2], t, &pair_only)? + &r3nres(&m[0], &q(&m[1]), &p(&m[2]), t, &pair_only)?
        }
        OperatorId::B30 => b3(&m[0], &q(&m[1]), &q(&m[2]), t, &pair_only)?,
        OperatorId::B1P | OperatorId::B1Q | OperatorId::B2Q | OperatorId::R3Q => {
            return Err(Error::Config(format!("{op} acts on a pair")))
        }
    })
}

/// Evaluates the production implementation of a vector operator.
pub fn fast_vector(op: VectorOp, p: &SpectralPair, t: f64, n_cut: Option<usize>) -> Result<SpectralPair> {
    let nc = match (op.needs_cut(), n_cut) {
        (true, None) | (true, Some(0)) => return Err(Error::Config(format!("{} needs n_cut >= 1", op.name()))),
        (_, c) => c.unwrap_or(p.n_max()),
    };
    Ok(match op {
        VectorOp::B1 => b1_vec(p, t),
        VectorOp::B2 => b2_vec(p, t),
        VectorOp::R3 => r3_vec(p, t),
        VectorOp::R3res => r3res_vec(p, t),
        VectorOp::R3nres => r3nres_vec(p, t),
        VectorOp::B3 => b3_vec(p, t),
        VectorOp::B4 => b4_vec(p, t, None),
        VectorOp::B1P => b1_low_vec(p, t, nc),
        VectorOp::B1Q => b1q_vec(p, t, nc),
        VectorOp::B2Q => b2_high_vec(p, t, nc),
        VectorOp::R3Q => r3_high_vec(p, t, nc),
        VectorOp::R3Qres => split_r3q(p, t, nc).resonant,
        VectorOp::R3Qnres0 => split_r3q(p, t, nc).nres0,
        VectorOp::R3Qnres1 => split_r3q(p, t, nc).nres1,
        VectorOp::B30 => b30_vec(p, t, nc),
        VectorOp::B40 => b40_vec(p, t, nc, None),
    })
}

fn sample_field(seed: u64, n: usize) -> SpectralField {
    let mut r = rng::rng(seed, 0);
    let s = [0.0, 0.5, 1.0][r.gen_range(0..3)];
    if r.gen_range(0..4) == 0 {
        uniform_field(seed, n, SobolevIndex(s), 1.0)
    } else {
        random_field(seed, n, SobolevIndex(s), 1.0)
    }
}

fn sample_pair(seed: u64, n: usize) -> SpectralPair {
    SpectralPair::interaction(sample_field(rng::split(seed, 1), n), sample_field(rng::split(seed, 2), n), 0.0)
        .expect("same mode set")
}

fn random_band(r: &mut rng::Rng) -> Band {
    [Band::All, Band::Low, Band::High][r.gen_range(0..3)]
}

fn random_filter(seed: u64, op: OperatorId, n: usize) -> ArgumentFilter {
    let mut r = rng::rng(seed, 3);
    let mut f = ArgumentFilter::new(r.gen_range(1..=n)).expect("positive cutoff");
    for i in 0..op.arity() {
        f.args[i] = random_band(&mut r);
    }
    let pair_ok = !matches!(op, OperatorId::B1 | OperatorId::B2 | OperatorId::B4 | OperatorId::R3res);
    if pair_ok && r.gen_bool(0.5) {
        let i = r.gen_range(0..2);
        let j = r.gen_range(i + 1..3);
        f = f.with_pair(i, j, random_band(&mut r));
    }
    f
}

fn scalar_ops() -> impl Iterator<Item = OperatorId> {
    OperatorId::ALL
        .into_iter()
        .filter(|op| !matches!(op, OperatorId::B1P | OperatorId::B1Q | OperatorId::B2Q | OperatorId::R3Q))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub n_max: usize,
    pub samples: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Compares every fast path with the literal oracle on `samples` random
/// inputs per operator, with random filters and `t` cycling through
/// [`T_VALUES`].
pub fn oracle_equivalence(n_max: usize, samples: usize, seed: u64) -> Result<EquivalenceReport> {
    if n_max == 0 || n_max > ORACLE_LIMIT {
        return Err(Error::TooLarge { n_max, limit: ORACLE_LIMIT });
    }
    let mut checks = Vec::new();
    for (oi, op) in scalar_ops().enumerate() {
        let errs = (0..samples)
            .map(|i| {
                let sd = rng::split(rng::split(seed, oi as u64), i as u64);
                let fields: Vec<SpectralField> =
                    (0..op.arity()).map(|a| sample_field(rng::split(sd, 10 + a as u64), n_max)).collect();
                let args: Vec<&SpectralField> = fields.iter().collect();
                let filter = random_filter(sd, op, n_max);
                let t = T_VALUES[i % T_VALUES.len()];
                let fast = fast_scalar(op, &args, t, &filter)?;
                let slow = brute_force_oracle(op, &args, t, Some(&filter))?;
                let scale: f64 = fields.iter().map(|f| f.max_amplitude()).product();
                Ok(relative_error(&fast, &slow, ZERO_FLOOR * scale))
            })
            .collect::<Result<Vec<f64>>>()?;
        checks.push(Check::new(op.name(), &errs, IDENTITY_TOL));
    }
    for (oi, op) in VectorOp::ALL.into_iter().enumerate() {
        let errs = (0..samples)
            .map(|i| {
                let sd = rng::split(rng::split(seed, 100 + oi as u64), i as u64);
                let p = sample_pair(sd, n_max);
                let nc = rng::rng(sd, 4).gen_range(1..=n_max);
                let t = T_VALUES[i % T_VALUES.len()];
                let fast = fast_vector(op, &p, t, Some(nc))?;
                let slow = brute_force_vector(op, &p, t, Some(nc))?;
                Ok(relative_error_pair(&fast, &slow, ZERO_FLOOR * p.max_amplitude().powi(4)))
            })
            .collect::<Result<Vec<f64>>>()?;
        checks.push(Check::new(op.name(), &errs, IDENTITY_TOL));
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(EquivalenceReport { n_max, samples, seed, checks, pass })
}

/// Deliberate defects used to show that the checks can fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corruption {
    /// Second diagonal term of the closed resonant sum with the wrong sign.
    ResonantSign,
    /// Phases evaluated at a slightly shifted time.
    PhaseShift,
    /// Last term of the first component of a term list omitted.
    DroppedTerm,
}

impl Corruption {
    pub const ALL: [Corruption; 3] = [Corruption::ResonantSign, Corruption::PhaseShift, Corruption::DroppedTerm];

    pub fn name(self) -> &'static str {
        match self {
            Corruption::ResonantSign => "resonant_sign",
            Corruption::PhaseShift => "phase_shift",
            Corruption::DroppedTerm => "dropped_term",
        }
    }
}

const PHASE_SHIFT: f64 = 1e-3;

fn corrupted_r3res(a: &SpectralField, b: &SpectralField, c: &SpectralField) -> Result<SpectralField> {
    let good = r3res_closed(a, b, c)?;
    let flip = a.map_indexed(|k, _| 2.0 * a.get(-k) * b.get(k) * c.get(k) / k as f64);
    Ok(&good + &flip)
}

fn dropped(op: OperatorId, p: &SpectralPair, t: f64, n_cut: usize) -> SpectralPair {
    let mut terms = term_list(op).expect("term list").clone();
    terms[0].pop();
    eval_terms(&terms, p, t, n_cut, None)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub n_max: usize,
    pub n_cut: usize,
    pub t_values: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub corruption: Option<Corruption>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

pub fn split_identities(n_max: usize, n_cut: usize, t_values: &[f64], samples: usize, seed: u64) -> Result<SplitReport> {
    split_identities_with(n_max, n_cut, t_values, samples, seed, None)
}

/// The resonance and high/low split identities on random inputs, with an
/// optional injected defect.
pub fn split_identities_with(
    n_max: usize,
    n_cut: usize,
    t_values: &[f64],
    samples: usize,
    seed: u64,
    corruption: Option<Corruption>,
) -> Result<SplitReport> {
    if n_cut == 0 || n_cut > n_max {
        return Err(Error::Config(format!("need 1 <= n_cut <= n_max, got n_cut = {n_cut}, n_max = {n_max}")));
    }
    if t_values.is_empty() {
        return Err(Error::Config("t_values must not be empty".into()));
    }
    let shift = if corruption == Some(Corruption::PhaseShift) { PHASE_SHIFT } else { 0.0 };
    let all = ArgumentFilter::all();
    let mut e_r3 = Vec::new();
    let mut e_r3q = Vec::new();
    let mut e_b1 = Vec::new();
    let mut e_pq = Vec::new();
    let mut e_vec = Vec::new();
    let mut e_deg = Vec::new();
    for i in 0..samples {
        let sd = rng::split(seed, i as u64);
        let t = t_values[i % t_values.len()];
        let f: Vec<SpectralField> = (0..3).map(|a| sample_field(rng::split(sd, 20 + a), n_max)).collect();
        let scale = f.iter().map(|x| x.max_amplitude()).product::<f64>() * ZERO_FLOOR;

        let whole = r3(&f[0], &f[1], &f[2], t, &all)?;
        let res = if corruption == Some(Corruption::ResonantSign) {
            corrupted_r3res(&f[0], &f[1], &f[2])?
        } else {
            r3res_closed(&f[0], &f[1], &f[2])?
        };
        let nres = r3nres(&f[0], &f[1], &f[2], t + shift, &all)?;
        e_r3.push(relative_error(&whole, &(&res + &nres), scale));

        let p = sample_pair(rng::split(sd, 30), n_max);
        let pscale = ZERO_FLOOR * p.max_amplitude().powi(3);
        let parts = split_r3q(&p, t, n_cut);
        let nres1 = if corruption == Some(Corruption::DroppedTerm) {
            dropped(OperatorId::R3nres1, &p, t, n_cut)
        } else {
            parts.nres1.clone()
        };
        let sum = parts.resonant.axpy(1.0, &parts.nres0).axpy(1.0, &nres1);
        e_r3q.push(relative_error_pair(&r3_high_vec(&p, t, n_cut), &sum, pscale));
        let joined = r3q_res_nres1_vec(&p, t, n_cut);
        e_r3q.push(relative_error_pair(&joined, &parts.resonant.axpy(1.0, &nres1), pscale));

        let vsum = r3res_vec(&p, t).axpy(1.0, &r3nres_vec(&p, t + shift));
        e_vec.push(relative_error_pair(&r3_vec(&p, t), &vsum, pscale));

        let b1sum = b1_low_vec(&p, t + shift, n_cut).axpy(1.0, &b1q_vec(&p, t, n_cut));
        e_b1.push(relative_error_pair(&b1_vec(&p, t), &b1sum, pscale));

        let pq = &f[0].project_low(n_cut) + &f[0].project_high(n_cut);
        e_pq.push(relative_error(&pq, &f[0], 0.0));

        if n_cut == n_max {
            let amp = [
                parts.nres0.max_amplitude(),
                parts.nres1.max_amplitude(),
                r3_high_vec(&p, t, n_cut).max_amplitude(),
                b2_high_vec(&p, t, n_cut).max_amplitude(),
                b1q_vec(&p, t, n_cut).max_amplitude(),
            ];
            e_deg.push(amp.into_iter().fold(0.0, f64::max));
        }
    }
    let mut checks = vec![
        Check::new("r3 = r3res_closed + r3nres", &e_r3, IDENTITY_TOL),
        Check::new("R3vec = R3resvec + R3nresvec", &e_vec, IDENTITY_TOL),
        Check::new("R3Q = R3Qres + R3Qnres0 + R3Qnres1", &e_r3q, IDENTITY_TOL),
        Check::new("B1vec = B1P + B1Q", &e_b1, IDENTITY_TOL),
        Check::new("P + Q = I", &e_pq, 0.0),
    ];
    if n_cut == n_max {
        checks.push(Check::new("high parts vanish at n_cut = n_max", &e_deg, 0.0));
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(SplitReport { n_max, n_cut, t_values: t_values.to_vec(), samples, seed, corruption, checks, pass })
}

/// Outcome of one negative control: `detected` must be true.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NegativeControl {
    pub corruption: Corruption,
    pub failing_checks: Vec<String>,
    pub detected: bool,
}

/// Runs the split identities and an oracle comparison with each defect
/// injected.
pub fn negative_controls(n_max: usize, samples: usize, seed: u64) -> Result<Vec<NegativeControl>> {
    let n_cut = (n_max / 2).max(1);
    Corruption::ALL
        .into_iter()
        .map(|c| {
            let rep = split_identities_with(n_max, n_cut, &T_VALUES[1..], samples, seed, Some(c))?;
            let mut failing: Vec<String> = rep.checks.iter().filter(|k| !k.pass).map(|k| k.name.clone()).collect();
            let p = sample_pair(rng::split(seed, 77), n_max.min(ORACLE_LIMIT));
            let t = T_VALUES[1];
            let bad = match c {
                Corruption::ResonantSign => {
                    let f = [&p.u, &p.v, &p.u];
                    let fast = corrupted_r3res(f[0], f[1], f[2])?;
                    let slow = brute_force_oracle(OperatorId::R3res, &f, t, None)?;
                    relative_error(&fast, &slow, 0.0)
                }
                Corruption::PhaseShift => {
                    let fast = r3_vec(&p, t + PHASE_SHIFT);
                    relative_error_pair(&fast, &brute_force_vector(VectorOp::R3, &p, t, None)?, 0.0)
                }
                Corruption::DroppedTerm => {
                    let fast = dropped(OperatorId::R3, &p, t, p.n_max());
                    relative_error_pair(&fast, &brute_force_vector(VectorOp::R3, &p, t, None)?, 0.0)
                }
            };
            if !(bad <= IDENTITY_TOL) {
                failing.push(format!("oracle comparison ({bad:.3e})"));
            }
            let detected = failing.len() >= 2;
            Ok(NegativeControl { corruption: c, failing_checks: failing, detected })
        })
        .collect()
}

/// Finite-difference residuals of the four forms along a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DbpReport {
    pub n_cut: usize,
    pub samples: usize,
    /// `(form, max residual)`
    pub residuals: Vec<(String, f64)>,
}

impl DbpReport {
    pub fn residual(&self, form: Form) -> Option<f64> {
        self.residuals.iter().find(|(n, _)| n == form.name()).map(|(_, r)| *r)
    }
}

pub fn dbp_identity(traj: &Trajectory, n_cut: usize) -> Result<DbpReport> {
    if n_cut == 0 {
        return Err(Error::Config("n_cut must be at least 1".into()));
    }
    let residuals = Form::ALL
        .into_iter()
        .map(|f| Ok((f.name().to_string(), form_residual(traj, f, Some(n_cut))?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DbpReport { n_cut, samples: traj.len(), residuals })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderCheck {
    pub form: String,
    pub residual_dt: f64,
    pub residual_half: f64,
    pub ratio: f64,
    pub pass: bool,
}

/// Acceptance window for the residual ratio under halving `dt`.
pub const ORDER_WINDOW: (f64, f64) = (3.5, 4.5);

/// Integrates with `dt` and `dt/2` and compares the residuals of each form.
pub fn dbp_order(config: &SimulationConfig, n_cut: usize) -> Result<Vec<OrderCheck>> {
    let dt = config.dt.ok_or_else(|| Error::Config("the order check needs an explicit dt".into()))?;
    let coarse = dbp_identity(&integrate(config)?.0, n_cut)?;
    let half = SimulationConfig { dt: Some(dt / 2.0), ..config.clone() };
    let fine = dbp_identity(&integrate(&half)?.0, n_cut)?;
    Ok(coarse
        .residuals
        .iter()
        .zip(&fine.residuals)
        .map(|((name, a), (_, b))| {
            let ratio = a / b;
            OrderCheck {
                form: name.clone(),
                residual_dt: *a,
                residual_half: *b,
                ratio,
                pass: ratio >= ORDER_WINDOW.0 && ratio <= ORDER_WINDOW.1,
            }
        })
        .collect())
}
