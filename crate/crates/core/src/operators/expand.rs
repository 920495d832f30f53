//! Symbolic generation of the multilinear term lists.
//!
//! The vector operators `R3`, `R3^Q`, `B30`, `B40` are defined only by
//! their construction rules. This module applies those rules to the two
//! quadratic terms of each component of the original system and records every
//! resulting signed term, so the lists are derived rather than transcribed.
//!
//! Differentiating `σ B1(Xa, Yb)` by parts yields `σ ∂t B2(Xa, Yb)` minus
//! `(i/12) σ σ' R3(Yb, a', b')` for every term `σ' B1(a', b')` of `∂t a`,
//! restricted so that `k2 + k3` lies in band `X`, plus the symmetric terms
//! from `∂t b`. Differentiating `c R3nres(φ, ψ, ξ)` by parts yields
//! `(c/3i) ∂t B3(φ, ψ, ξ) - (c/3i) Σ_m B3(.., ∂t(arg m), ..)`.

use std::fmt;

use num_complex::Complex64 as C64;

use super::filter::Band;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    U,
    V,
}

impl Var {
    pub fn index(self) -> usize {
        match self {
            Var::U => 0,
            Var::V => 1,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Var::U => "u",
            Var::V => "v",
        }
    }
}

/// `var` restricted to `band`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Factor {
    pub var: Var,
    pub band: Band,
}

impl Factor {
    pub fn new(var: Var, band: Band) -> Self {
        Factor { var, band }
    }
}

/// `sign · Op(a, b)` for a bilinear operator `Op` (B1 or B2).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BiTerm {
    pub sign: f64,
    pub a: Factor,
    pub b: Factor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Slot {
    Field,
    /// The time derivative of the variable, taken from the Galerkin right-hand side.
    Deriv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TriArg {
    pub var: Var,
    pub slot: Slot,
    pub band: Band,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kernel {
    /// `1 / k1`
    R3,
    /// `1 / (k1 (k1+k2)(k2+k3)(k1+k3))`, non-resonant triples only.
    B3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Selector {
    All,
    Resonant,
    NonResonant,
}

/// `coef · Kernel(arg0, arg1, arg2)` summed over triples allowed by the
/// selector, with `k2 + k3` optionally constrained to a band.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriTerm {
    pub coef: C64,
    pub kernel: Kernel,
    pub args: [TriArg; 3],
    pub pair: Option<Band>,
    pub selector: Selector,
}

/// Terms of the two vector components.
pub type Components<T> = [Vec<T>; 2];

/// `∂t (u, v) = (B1(u,v) - B1(u,u), B1(u,v) - B1(v,v))`.
pub fn b1_terms() -> Components<BiTerm> {
    let f = |v| Factor::new(v, Band::All);
    let t = |sign, a, b| BiTerm {
        sign,
        a: f(a),
        b: f(b),
    };
    [
        vec![t(1.0, Var::U, Var::V), t(-1.0, Var::U, Var::U)],
        vec![t(1.0, Var::U, Var::V), t(-1.0, Var::V, Var::V)],
    ]
}

/// Low part: `B(Pa, Pb)`.
pub fn low_part(terms: &Components<BiTerm>) -> Components<BiTerm> {
    terms.clone().map(|comp| {
        comp.into_iter()
            .map(|t| BiTerm {
                a: Factor::new(t.a.var, Band::Low),
                b: Factor::new(t.b.var, Band::Low),
                ..t
            })
            .collect()
    })
}

/// High part: `B(Pa, Qb) + B(Qa, b)`.
pub fn high_part(terms: &Components<BiTerm>) -> Components<BiTerm> {
    terms.clone().map(|comp| {
        comp.into_iter()
            .flat_map(|t| {
                [
                    BiTerm {
                        a: Factor::new(t.a.var, Band::Low),
                        b: Factor::new(t.b.var, Band::High),
                        ..t
                    },
                    BiTerm {
                        a: Factor::new(t.a.var, Band::High),
                        b: Factor::new(t.b.var, Band::All),
                        ..t
                    },
                ]
            })
            .collect()
    })
}

fn field(f: Factor) -> TriArg {
    TriArg {
        var: f.var,
        slot: Slot::Field,
        band: f.band,
    }
}

/// Trilinear remainder of differentiating the B1 terms by parts.
pub fn first_dbp(terms: &Components<BiTerm>) -> Components<TriTerm> {
    let rhs = b1_terms();
    let c = C64::new(0.0, -1.0 / 12.0);
    terms.clone().map(|comp| {
        let mut out = Vec::new();
        for t in comp {
            // ∂t a contracts with b in the first slot, then ∂t b with a.
            for (kept, diff) in [(t.b, t.a), (t.a, t.b)] {
                for r in &rhs[diff.var.index()] {
                    out.push(TriTerm {
                        coef: c * (t.sign * r.sign),
                        kernel: Kernel::R3,
                        args: [field(kept), field(r.a), field(r.b)],
                        pair: Some(diff.band),
                        selector: Selector::All,
                    });
                }
            }
        }
        out
    })
}

pub fn with_selector(terms: &Components<TriTerm>, selector: Selector) -> Components<TriTerm> {
    terms
        .clone()
        .map(|comp| comp.into_iter().map(|t| TriTerm { selector, ..t }).collect())
}

fn restrict(t: &TriTerm, b1: Band, b2: Band) -> Option<TriTerm> {
    let mut out = *t;
    out.args[1].band = t.args[1].band.meet(b1)?;
    out.args[2].band = t.args[2].band.meet(b2)?;
    Some(out)
}

/// Splits non-resonant terms into the part with both trailing arguments high
/// (`nres0`) and the rest (`nres1`: `P` on the second argument, or `Q` on the
/// second and `P` on the third).
pub fn nres_split(terms: &Components<TriTerm>) -> (Components<TriTerm>, Components<TriTerm>) {
    let nres = with_selector(terms, Selector::NonResonant);
    let zero = nres
        .clone()
        .map(|c| c.iter().filter_map(|t| restrict(t, Band::High, Band::High)).collect());
    let one = nres.map(|c| {
        c.iter()
            .flat_map(|t| {
                [
                    restrict(t, Band::Low, Band::All),
                    restrict(t, Band::High, Band::Low),
                ]
            })
            .flatten()
            .collect()
    });
    (zero, one)
}

/// Second differentiation by parts of non-resonant R3 terms.
///
/// Returns `(Σ (c/3i) B3(φ,ψ,ξ), Σ (c/3i) Σ_m B3(.., ∂t arg_m, ..))`, so that
/// `Σ c R3nres = ∂t first - second`.
pub fn second_dbp(terms: &Components<TriTerm>) -> (Components<TriTerm>, Components<TriTerm>) {
    let third = C64::new(0.0, -1.0 / 3.0);
    let b3 = terms.clone().map(|comp| {
        comp.into_iter()
            .map(|t| TriTerm {
                coef: t.coef * third,
                kernel: Kernel::B3,
                selector: Selector::NonResonant,
                ..t
            })
            .collect::<Vec<_>>()
    });
    let b4 = b3.clone().map(|comp| {
        comp.into_iter()
            .flat_map(|t| {
                (0..3).map(move |m| {
                    let mut d = t;
                    d.args[m].slot = Slot::Deriv;
                    d
                })
            })
            .collect()
    });
    (b3, b4)
}

pub fn scaled(terms: &Components<TriTerm>, factor: f64) -> Components<TriTerm> {
    terms.clone().map(|comp| {
        comp.into_iter()
            .map(|t| TriTerm {
                coef: t.coef * factor,
                ..t
            })
            .collect()
    })
}

/// Named term lists of every vector operator.
pub struct Expansion;

impl Expansion {
    /// `R3` of the first form.
    pub fn r3() -> Components<TriTerm> {
        first_dbp(&b1_terms())
    }

    /// `R3^Q` of the modified first form.
    pub fn r3q() -> Components<TriTerm> {
        first_dbp(&high_part(&b1_terms()))
    }

    /// `(B3, B4)` of the second form, signed so that
    /// `∂t[u - B2 + B3] = R3res + B4`.
    pub fn second_form() -> (Components<TriTerm>, Components<TriTerm>) {
        let (b3, b4) = second_dbp(&with_selector(&Self::r3(), Selector::NonResonant));
        (scaled(&b3, -1.0), scaled(&b4, -1.0))
    }

    /// `(B30, B40)` of the modified second form, signed so that
    /// `∂t[u - B2^Q - B30] = B1^P + R3res^Q + R3nres1^Q + B40`.
    pub fn modified_second_form() -> (Components<TriTerm>, Components<TriTerm>) {
        let (nres0, _) = nres_split(&Self::r3q());
        let (b30, b40) = second_dbp(&nres0);
        (b30, scaled(&b40, -1.0))
    }
}

fn arg_name(a: &TriArg) -> String {
    let d = if a.slot == Slot::Deriv { "∂" } else { "" };
    format!("{}{}{}", a.band.symbol(), d, a.var.name())
}

impl fmt::Display for BiTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}({}{}, {}{})",
            if self.sign < 0.0 { "-" } else { "+" },
            self.a.band.symbol(),
            self.a.var.name(),
            self.b.band.symbol(),
            self.b.var.name()
        )
    }
}

impl fmt::Display for TriTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kernel = match self.kernel {
            Kernel::R3 => "R3",
            Kernel::B3 => "B3",
        };
        let sel = match self.selector {
            Selector::All => "",
            Selector::Resonant => "res",
            Selector::NonResonant => "nres",
        };
        write!(
            f,
            "({:+}{:+}i) {kernel}{sel}({}, {}, {})",
            self.coef.re,
            self.coef.im,
            arg_name(&self.args[0]),
            arg_name(&self.args[1]),
            arg_name(&self.args[2])
        )?;
        if let Some(b) = self.pair {
            write!(f, " [k2+k3 in {}]", if b == Band::All { "N" } else { b.symbol() })?;
        }
        Ok(())
    }
}
