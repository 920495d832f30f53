//! Literal reference implementations. Every output mode is a separate
//! nested loop over all index tuples with phases `exp(i m t)` taken from
//! exact integer frequencies; nothing is cached or factored.
//!
//! The vector operators are rebuilt from their defining time derivatives:
//! each term `σ B2(X a, Y b)` of a bracket is differentiated by the product
//! rule, the time derivative of a field being the literal right-hand side
//! of the gauged system. Resonant/non-resonant parts are then sorted triple
//! by triple and the non-resonant phases are integrated exactly.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{ArgumentFilter, Band, OperatorId};
use crate::phase::unit;
use crate::spectral::{Gauge, SpectralField, SpectralPair};

/// Largest ambient cutoff accepted by the oracles.
pub const ORACLE_LIMIT: usize = 16;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn modes(n: i64) -> impl Iterator<Item = i64> + Clone {
    (-n..=n).filter(|&k| k != 0)
}

fn inside(k: i64, n: i64) -> bool {
    k != 0 && k.abs() <= n
}

fn check_args(args: &[&SpectralField], arity: usize) -> Result<i64> {
    if args.len() != arity {
        return Err(Error::Config(format!("expected {arity} arguments, got {}", args.len())));
    }
    for a in &args[1..] {
        args[0].ensure_same_modes(a)?;
    }
    let n = args[0].n_max();
    if n > ORACLE_LIMIT {
        return Err(Error::TooLarge { n_max: n, limit: ORACLE_LIMIT });
    }
    Ok(n as i64)
}

fn resonant(k1: i64, k2: i64, k3: i64) -> bool {
    (k1 + k2) * (k2 + k3) * (k1 + k3) == 0
}

#[derive(Clone, Copy, PartialEq)]
enum Tri {
    R3,
    R3Res,
    R3Nres,
    B3,
}

/// Scalar trilinear sums with argument bands and pair constraint.
fn trilinear(kind: Tri, f: [&SpectralField; 3], t: f64, filter: &ArgumentFilter, n: i64) -> SpectralField {
    let mut out = SpectralField::zeros(f[0].modes());
    let n_max = n as usize;
    for k in modes(n) {
        let mut acc = zero();
        for k1 in modes(n) {
            for k2 in modes(n) {
                let k3 = k - k1 - k2;
                if !inside(k3, n) {
                    continue;
                }
                let ks = [k1, k2, k3];
                if !(0..3).all(|i| filter.arg_ok(i, ks[i])) || !filter.pair_ok(&ks, n_max) {
                    continue;
                }
                let res = resonant(k1, k2, k3);
                let omega = 3 * (k1 + k2) as i128 * (k2 + k3) as i128 * (k1 + k3) as i128;
                let prod = f[0].get(k1) * f[1].get(k2) * f[2].get(k3);
                let term = match kind {
                    Tri::R3 => unit(omega, t) * prod / k1 as f64,
                    Tri::R3Res if res => prod / k1 as f64,
                    Tri::R3Nres if !res => unit(omega, t) * prod / k1 as f64,
                    Tri::B3 if !res => {
                        let den = k1 as f64 * (k1 + k2) as f64 * (k2 + k3) as f64 * (k1 + k3) as f64;
                        unit(omega, t) * prod / den
                    }
                    _ => continue,
                };
                acc += term;
            }
        }
        out.as_mut_slice()[(k + n) as usize] = acc;
    }
    out
}

fn b1_lit(a: &SpectralField, b: &SpectralField, t: f64, n: i64) -> SpectralField {
    let mut out = SpectralField::zeros(a.modes());
    for k in modes(n) {
        let mut acc = zero();
        for k1 in modes(n) {
            let k2 = k - k1;
            if inside(k2, n) {
                acc += unit(3 * k as i128 * k1 as i128 * k2 as i128, t) * a.get(k1) * b.get(k2);
            }
        }
        out.as_mut_slice()[(k + n) as usize] = acc * C64::new(0.0, 0.5 * k as f64);
    }
    out
}

fn b2_lit(a: &SpectralField, b: &SpectralField, t: f64, n: i64) -> SpectralField {
    let mut out = SpectralField::zeros(a.modes());
    for k in modes(n) {
        let mut acc = zero();
        for k1 in modes(n) {
            let k2 = k - k1;
            if inside(k2, n) {
                acc += unit(3 * k as i128 * k1 as i128 * k2 as i128, t) * a.get(k1) * b.get(k2)
                    / (6.0 * k1 as f64 * k2 as f64);
            }
        }
        out.as_mut_slice()[(k + n) as usize] = acc;
    }
    out
}

fn b4_lit(f: [&SpectralField; 4], t: f64, n: i64) -> SpectralField {
    let mut out = SpectralField::zeros(f[0].modes());
    for k in modes(n) {
        let mut acc = zero();
        for k1 in modes(n) {
            for k2 in modes(n) {
                for k3 in modes(n) {
                    let k4 = k - k1 - k2 - k3;
                    if !inside(k4, n) {
                        continue;
                    }
                    let (d12, d134, d234) = (k1 + k2, k1 + k3 + k4, k2 + k3 + k4);
                    if d12 == 0 || d134 == 0 || d234 == 0 {
                        continue;
                    }
                    let cube = |x: i64| (x as i128).pow(3);
                    let phi = cube(k) - cube(k1) - cube(k2) - cube(k3) - cube(k4);
                    let den = d12 as f64 * d134 as f64 * d234 as f64;
                    let w = 1.0 / den + (k3 + k4) as f64 / (k1 as f64 * den);
                    acc += unit(phi, t) * f[0].get(k1) * f[1].get(k2) * f[2].get(k3) * f[3].get(k4) * w;
                }
            }
        }
        out.as_mut_slice()[(k + n) as usize] = acc;
    }
    out
}

fn band(b: Band, f: &SpectralField, n_cut: usize) -> SpectralField {
    match b {
        Band::All => f.clone(),
        Band::Low => f.project_low(n_cut),
        Band::High => f.project_high(n_cut),
    }
}

/// Literal evaluation of a scalar operator. `filter` restricts arguments
/// (and, for trilinear operators, a pair sum); its `n_cut` is the split used
/// by `R3nres0`, `R3nres1` and `B30`.
pub fn brute_force_oracle(
    op: OperatorId,
    args: &[&SpectralField],
    t: f64,
    filter: Option<&ArgumentFilter>,
) -> Result<SpectralField> {
    let all = ArgumentFilter::all();
    let filter = filter.unwrap_or(&all);
    let n = check_args(args, op.arity())?;
    let nc = filter.n_cut;
    let masked: Vec<SpectralField> = args
        .iter()
        .enumerate()
        .map(|(i, a)| band(filter.args[i], a, nc))
        .collect();
    let tri_filter = ArgumentFilter {
        args: [Band::All; 4],
        ..*filter
    };
    let m = |i: usize| &masked[i];
    Ok(match op {
        OperatorId::B1 => b1_lit(m(0), m(1), t, n),
        OperatorId::B2 => b2_lit(m(0), m(1), t, n),
        OperatorId::B4 => b4_lit([m(0), m(1), m(2), m(3)], t, n),
        OperatorId::R3 => trilinear(Tri::R3, [m(0), m(1), m(2)], t, &tri_filter, n),
        OperatorId::R3res => trilinear(Tri::R3Res, [m(0), m(1), m(2)], t, &tri_filter, n),
        OperatorId::R3nres => trilinear(Tri::R3Nres, [m(0), m(1), m(2)], t, &tri_filter, n),
        OperatorId::B3 => trilinear(Tri::B3, [m(0), m(1), m(2)], t, &tri_filter, n),
        OperatorId::R3nres0 => {
            let (q1, q2) = (m(1).project_high(nc), m(2).project_high(nc));
            trilinear(Tri::R3Nres, [m(0), &q1, &q2], t, &tri_filter, n)
        }
        OperatorId::R3nres1 => {
            let p1 = m(1).project_low(nc);
            let a = trilinear(Tri::R3Nres, [m(0), &p1, m(2)], t, &tri_filter, n);
            let (q1, p2) = (m(1).project_high(nc), m(2).project_low(nc));
            let b = trilinear(Tri::R3Nres, [m(0), &q1, &p2], t, &tri_filter, n);
            &a + &b
        }
        OperatorId::B30 => {
            let (q1, q2) = (m(1).project_high(nc), m(2).project_high(nc));
            trilinear(Tri::B3, [m(0), &q1, &q2], t, &tri_filter, n)
        }
        OperatorId::B1P | OperatorId::B1Q | OperatorId::B2Q | OperatorId::R3Q => {
            return Err(Error::Config(format!(
                "{op} acts on a pair; use brute_force_vector"
            )))
        }
    })
}

/// Vector operators on a pair `(u, v)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VectorOp {
    B1,
    B2,
    R3,
    R3res,
    R3nres,
    B3,
    B4,
    B1P,
    B1Q,
    B2Q,
    R3Q,
    R3Qres,
    R3Qnres0,
    R3Qnres1,
    B30,
    B40,
}

impl VectorOp {
    pub const ALL: [VectorOp; 16] = [
        VectorOp::B1,
        VectorOp::B2,
        VectorOp::R3,
        VectorOp::R3res,
        VectorOp::R3nres,
        VectorOp::B3,
        VectorOp::B4,
        VectorOp::B1P,
        VectorOp::B1Q,
        VectorOp::B2Q,
        VectorOp::R3Q,
        VectorOp::R3Qres,
        VectorOp::R3Qnres0,
        VectorOp::R3Qnres1,
        VectorOp::B30,
        VectorOp::B40,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VectorOp::B1 => "B1vec",
            VectorOp::B2 => "B2vec",
            VectorOp::R3 => "R3vec",
            VectorOp::R3res => "R3resvec",
            VectorOp::R3nres => "R3nresvec",
            VectorOp::B3 => "B3vec",
            VectorOp::B4 => "B4vec",
            VectorOp::B1P => "B1P",
            VectorOp::B1Q => "B1Q",
            VectorOp::B2Q => "B2Q",
            VectorOp::R3Q => "R3Q",
            VectorOp::R3Qres => "R3Qres",
            VectorOp::R3Qnres0 => "R3Qnres0",
            VectorOp::R3Qnres1 => "R3Qnres1",
            VectorOp::B30 => "B30vec",
            VectorOp::B40 => "B40vec",
        }
    }

    pub fn needs_cut(self) -> bool {
        !matches!(
            self,
            VectorOp::B1 | VectorOp::B2 | VectorOp::R3 | VectorOp::R3res | VectorOp::R3nres | VectorOp::B3 | VectorOp::B4
        )
    }
}

/// `σ B(X a, Y b)` with `a, b ∈ {0: u, 1: v}`.
#[derive(Clone, Copy)]
struct Bi {
    sign: f64,
    a: usize,
    x: Band,
    b: usize,
    y: Band,
}

const fn bi(sign: f64, a: usize, x: Band, b: usize, y: Band) -> Bi {
    Bi { sign, a, x, b, y }
}

use Band::{All, High, Low};

/// Right-hand side of the gauged system: `u' = B1(u,v) - B1(u,u)`, `v' = B1(u,v) - B1(v,v)`.
const FULL: [[Bi; 2]; 2] = [
    [bi(1.0, 0, All, 1, All), bi(-1.0, 0, All, 0, All)],
    [bi(1.0, 0, All, 1, All), bi(-1.0, 1, All, 1, All)],
];

const LOW: [[Bi; 2]; 2] = [
    [bi(1.0, 0, Low, 1, Low), bi(-1.0, 0, Low, 0, Low)],
    [bi(1.0, 0, Low, 1, Low), bi(-1.0, 1, Low, 1, Low)],
];

const HIGH: [[Bi; 4]; 2] = [
    [
        bi(1.0, 0, Low, 1, High),
        bi(1.0, 0, High, 1, All),
        bi(-1.0, 0, Low, 0, High),
        bi(-1.0, 0, High, 0, All),
    ],
    [
        bi(1.0, 0, Low, 1, High),
        bi(1.0, 0, High, 1, All),
        bi(-1.0, 1, Low, 1, High),
        bi(-1.0, 1, High, 1, All),
    ],
];

fn bilinear_sum(terms: &[Bi], f: &[SpectralField; 2], t: f64, n: i64, n_cut: usize, b2: bool) -> SpectralField {
    let mut out = SpectralField::zeros(f[0].modes());
    for term in terms {
        let a = band(term.x, &f[term.a], n_cut);
        let b = band(term.y, &f[term.b], n_cut);
        let r = if b2 { b2_lit(&a, &b, t, n) } else { b1_lit(&a, &b, t, n) };
        out = out.axpy(term.sign, &r);
    }
    out
}

/// One triple produced by differentiating a bilinear bracket.
struct Triple {
    k: i64,
    kept: (usize, i64),
    pair: [(usize, i64); 2],
    /// Full coefficient including the literal phase.
    w: C64,
    /// Total integer frequency of `w`.
    omega: i128,
}

/// Enumerates `-σ/6 Σ e^{3ikk1k2t}/(k1k2) ∂t[(X a)_{k1} (Y b)_{k2}]` with the
/// derivatives expanded by the right-hand side of the system.
fn dbp_triples(terms: &[Bi], n: i64, n_cut: usize, t: f64, mut visit: impl FnMut(&Triple)) {
    for term in terms {
        for k in modes(n) {
            for k1 in modes(n) {
                let k2 = k - k1;
                if !inside(k2, n) || !term.x.contains(k1, n_cut) || !term.y.contains(k2, n_cut) {
                    continue;
                }
                let o1 = 3 * k as i128 * k1 as i128 * k2 as i128;
                let base = unit(o1, t) * (-term.sign / (6.0 * k1 as f64 * k2 as f64));
                // Derivative on the first factor (kept: b at k2), then on the second.
                for (dvar, dk, kept) in [(term.a, k1, (term.b, k2)), (term.b, k2, (term.a, k1))] {
                    for rhs in &FULL[dvar] {
                        for al in modes(n) {
                            let be = dk - al;
                            if !inside(be, n) {
                                continue;
                            }
                            let o2 = 3 * dk as i128 * al as i128 * be as i128;
                            let w = base * unit(o2, t) * C64::new(0.0, 0.5 * dk as f64) * rhs.sign;
                            visit(&Triple {
                                k,
                                kept,
                                pair: [(rhs.a, al), (rhs.b, be)],
                                w,
                                omega: o1 + o2,
                            });
                        }
                    }
                }
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Pick {
    All,
    Res,
    Nres,
    Nres0,
    Nres1,
}

#[derive(Clone, Copy, PartialEq)]
enum Out {
    /// `Σ w abc`
    Plain,
    /// `Σ w abc / (iΩ)`
    Primitive,
    /// `Σ w ∂t(abc) / (iΩ)`
    PrimitiveDeriv,
}

fn dbp_sum(
    terms: &[Bi],
    comp_fields: &[SpectralField; 2],
    deriv: &[SpectralField; 2],
    t: f64,
    n: i64,
    n_cut: usize,
    pick: Pick,
    out: Out,
) -> Result<SpectralField> {
    let mut acc = vec![zero(); 2 * n as usize + 1];
    let mut bad = None;
    dbp_triples(terms, n, n_cut, t, |tr| {
        let (kk, a1, a2) = (tr.kept.1, tr.pair[0].1, tr.pair[1].1);
        let res = resonant(kk, a1, a2);
        let q = |k: i64| k.unsigned_abs() as usize > n_cut;
        let keep = match pick {
            Pick::All => true,
            Pick::Res => res,
            Pick::Nres => !res,
            Pick::Nres0 => !res && q(a1) && q(a2),
            Pick::Nres1 => !res && !(q(a1) && q(a2)),
        };
        if !keep {
            return;
        }
        let g = |(var, k): (usize, i64)| comp_fields[var].get(k);
        let d = |(var, k): (usize, i64)| deriv[var].get(k);
        let (x, y, z) = (tr.kept, tr.pair[0], tr.pair[1]);
        let val = match out {
            Out::Plain => tr.w * g(x) * g(y) * g(z),
            Out::Primitive | Out::PrimitiveDeriv => {
                if tr.omega == 0 {
                    bad = Some(tr.k);
                    return;
                }
                let prod = if out == Out::Primitive {
                    g(x) * g(y) * g(z)
                } else {
                    d(x) * g(y) * g(z) + g(x) * d(y) * g(z) + g(x) * g(y) * d(z)
                };
                tr.w * prod / C64::new(0.0, tr.omega as f64)
            }
        };
        acc[(tr.k + n) as usize] += val;
    });
    if let Some(k) = bad {
        return Err(Error::NonFinite { k });
    }
    let mut f = SpectralField::zeros(comp_fields[0].modes());
    f.as_mut_slice().copy_from_slice(&acc);
    Ok(f)
}

/// Literal evaluation of a vector operator. `n_cut` is required for the
/// split operators and ignored otherwise.
pub fn brute_force_vector(op: VectorOp, p: &SpectralPair, t: f64, n_cut: Option<usize>) -> Result<SpectralPair> {
    let n = check_args(&[&p.u, &p.v], 2)?;
    if p.gauge != Gauge::Interaction {
        return Err(Error::Config("vector oracles take interaction-gauge pairs".into()));
    }
    let nc = match (op.needs_cut(), n_cut) {
        (true, None) => return Err(Error::Config(format!("{} needs n_cut", op.name()))),
        (true, Some(0)) => return Err(Error::Config("n_cut must be >= 1".into())),
        (_, c) => c.unwrap_or(n as usize),
    };
    let f = [p.u.clone(), p.v.clone()];
    let deriv = [
        bilinear_sum(&FULL[0], &f, t, n, nc, false),
        bilinear_sum(&FULL[1], &f, t, n, nc, false),
    ];
    let comp = |c: usize| -> Result<SpectralField> {
        let full = &FULL[c][..];
        let high = &HIGH[c][..];
        let s = |terms: &[Bi], pick, out| dbp_sum(terms, &f, &deriv, t, n, nc, pick, out);
        Ok(match op {
            VectorOp::B1 => deriv[c].clone(),
            VectorOp::B2 => bilinear_sum(full, &f, t, n, nc, true),
            VectorOp::B1P => bilinear_sum(&LOW[c], &f, t, n, nc, false),
            VectorOp::B1Q => bilinear_sum(high, &f, t, n, nc, false),
            VectorOp::B2Q => bilinear_sum(high, &f, t, n, nc, true),
            VectorOp::R3 => s(full, Pick::All, Out::Plain)?,
            VectorOp::R3res => s(full, Pick::Res, Out::Plain)?,
            VectorOp::R3nres => s(full, Pick::Nres, Out::Plain)?,
            VectorOp::B3 => s(full, Pick::Nres, Out::Primitive)?.scale(-1.0),
            VectorOp::B4 => s(full, Pick::Nres, Out::PrimitiveDeriv)?.scale(-1.0),
            VectorOp::R3Q => s(high, Pick::All, Out::Plain)?,
            VectorOp::R3Qres => s(high, Pick::Res, Out::Plain)?,
            VectorOp::R3Qnres0 => s(high, Pick::Nres0, Out::Plain)?,
            VectorOp::R3Qnres1 => s(high, Pick::Nres1, Out::Plain)?,
            VectorOp::B30 => s(high, Pick::Nres0, Out::Primitive)?,
            VectorOp::B40 => s(high, Pick::Nres0, Out::PrimitiveDeriv)?.scale(-1.0),
        })
    };
    Ok(SpectralPair {
        u: comp(0)?,
        v: comp(1)?,
        gauge: Gauge::Interaction,
        t_ref: t,
    })
}
