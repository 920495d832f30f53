//! Vector operators assembled from the generated term lists.

use std::collections::HashMap;
use std::sync::OnceLock;

use num_complex::Complex64 as C64;

use super::bilinear::b1_vec;
use super::expand::{nres_split, with_selector, Components, Expansion, Selector, Slot, TriArg, TriTerm};
use super::filter::PairFilter;
use super::trilinear::{run, Job};
use super::{assemble, masked, ungauge, EvalRecord, OperatorId, Parity};
use crate::phase::PhaseCache;
use crate::spectral::{Gauge, SpectralField, SpectralPair};

/// Time derivatives `(∂t u, ∂t v)` used by the `B4`-type terms, normally the
/// right-hand side `b1_vec` of the same state.
pub type Derivatives = SpectralPair;

struct Lists {
    r3: Components<TriTerm>,
    r3res: Components<TriTerm>,
    r3nres: Components<TriTerm>,
    b3: Components<TriTerm>,
    b4: Components<TriTerm>,
    r3q: Components<TriTerm>,
    r3q_res: Components<TriTerm>,
    r3q_nres0: Components<TriTerm>,
    r3q_nres1: Components<TriTerm>,
    b30: Components<TriTerm>,
    b40: Components<TriTerm>,
}

fn lists() -> &'static Lists {
    static LISTS: OnceLock<Lists> = OnceLock::new();
    LISTS.get_or_init(|| {
        let r3 = Expansion::r3();
        let (b3, b4) = Expansion::second_form();
        let r3q = Expansion::r3q();
        let (r3q_nres0, r3q_nres1) = nres_split(&r3q);
        let (b30, b40) = Expansion::modified_second_form();
        Lists {
            r3res: with_selector(&r3, Selector::Resonant),
            r3nres: with_selector(&r3, Selector::NonResonant),
            r3q_res: with_selector(&r3q, Selector::Resonant),
            r3,
            b3,
            b4,
            r3q,
            r3q_nres0,
            r3q_nres1,
            b30,
            b40,
        }
    })
}

/// Evaluates a term list. `deriv` supplies the derivative fields for
/// `Deriv` slots; when absent they are computed as `b1_vec(p, t)`.
pub fn eval_terms(
    terms: &Components<TriTerm>,
    p: &SpectralPair,
    t: f64,
    n_cut: usize,
    deriv: Option<&Derivatives>,
) -> SpectralPair {
    let n = p.n_max();
    let cache = PhaseCache::new(t, n);
    let needs_deriv = terms
        .iter()
        .flatten()
        .any(|t| t.args.iter().any(|a| a.slot == Slot::Deriv));
    let owned;
    let d = if needs_deriv {
        match deriv {
            Some(d) => Some(d),
            None => {
                owned = b1_vec(p, t);
                Some(&owned)
            }
        }
    } else {
        None
    };
    let base = [ungauge(&p.u, &cache), ungauge(&p.v, &cache)];
    let dbase = d.map(|d| [ungauge(&d.u, &cache), ungauge(&d.v, &cache)]);

    let mut index: HashMap<TriArg, usize> = HashMap::new();
    let mut arrays: Vec<Vec<C64>> = Vec::new();
    for term in terms.iter().flatten() {
        for a in term.args {
            index.entry(a).or_insert_with(|| {
                let src = match a.slot {
                    Slot::Field => &base[a.var.index()],
                    Slot::Deriv => &dbase.as_ref().expect("derivatives present")[a.var.index()],
                };
                arrays.push(masked(src, n, a.band, n_cut));
                arrays.len() - 1
            });
        }
    }
    let comps: Vec<SpectralField> = terms
        .iter()
        .map(|comp| {
            let jobs: Vec<Job> = comp
                .iter()
                .map(|term| {
                    let ids = term.args.map(|a| index[&a]);
                    Job {
                        coef: term.coef,
                        key: ids[0],
                        a: &arrays[ids[0]],
                        b: &arrays[ids[1]],
                        c: &arrays[ids[2]],
                        pair: term.pair.map(|band| PairFilter { i: 1, j: 2, band }),
                        selector: term.selector,
                        kernel: term.kernel,
                    }
                })
                .collect();
            let raw = run(n, n_cut, &jobs);
            assemble(p.modes(), &raw, &cache, Parity::Hermitian)
        })
        .collect();
    let [u, v]: [SpectralField; 2] = comps.try_into().expect("two components");
    SpectralPair {
        u,
        v,
        gauge: Gauge::Interaction,
        t_ref: t,
    }
}

/// `R3(u,v)` of the first form `∂t[u - B2] = R3`.
pub fn r3_vec(p: &SpectralPair, t: f64) -> SpectralPair {
    eval_terms(&lists().r3, p, t, p.n_max(), None)
}

/// Resonant part of `R3(u,v)`.
pub fn r3res_vec(p: &SpectralPair, t: f64) -> SpectralPair {
    eval_terms(&lists().r3res, p, t, p.n_max(), None)
}

/// Non-resonant part of `R3(u,v)`.
pub fn r3nres_vec(p: &SpectralPair, t: f64) -> SpectralPair {
    eval_terms(&lists().r3nres, p, t, p.n_max(), None)
}

/// `B3(u,v)` of the second form `∂t[u - B2 + B3] = R3res + B4`.
pub fn b3_vec(p: &SpectralPair, t: f64) -> SpectralPair {
    eval_terms(&lists().b3, p, t, p.n_max(), None)
}

/// `B4(u,v)` of the second form.
pub fn b4_vec(p: &SpectralPair, t: f64, deriv: Option<&Derivatives>) -> SpectralPair {
    eval_terms(&lists().b4, p, t, p.n_max(), deriv)
}

/// `R3^Q(u,v)` of the modified first form `∂t[u - B2^Q] = B1^P + R3^Q`.
pub fn r3_high_vec(p: &SpectralPair, t: f64, n_cut: usize) -> SpectralPair {
    eval_terms(&lists().r3q, p, t, n_cut, None)
}

/// The three parts of `R3^Q`.
#[derive(Clone, Debug)]
pub struct R3qSplit {
    pub resonant: SpectralPair,
    pub nres0: SpectralPair,
    pub nres1: SpectralPair,
}

pub fn split_r3q(p: &SpectralPair, t: f64, n_cut: usize) -> R3qSplit {
    let l = lists();
    R3qSplit {
        resonant: eval_terms(&l.r3q_res, p, t, n_cut, None),
        nres0: eval_terms(&l.r3q_nres0, p, t, n_cut, None),
        nres1: eval_terms(&l.r3q_nres1, p, t, n_cut, None),
    }
}

/// `R3res^Q + R3nres1^Q` in one pass.
pub fn r3q_res_nres1_vec(p: &SpectralPair, t: f64, n_cut: usize) -> SpectralPair {
    static JOINED: OnceLock<Components<TriTerm>> = OnceLock::new();
    let terms = JOINED.get_or_init(|| {
        let l = lists();
        [0, 1].map(|c| [l.r3q_res[c].clone(), l.r3q_nres1[c].clone()].concat())
    });
    eval_terms(terms, p, t, n_cut, None)
}

/// `B30(u,v)` of the modified second form
/// `∂t[u - B2^Q - B30] = B1^P + R3res^Q + R3nres1^Q + B40`.
pub fn b30_vec(p: &SpectralPair, t: f64, n_cut: usize) -> SpectralPair {
    eval_terms(&lists().b30, p, t, n_cut, None)
}

/// `B40(u,v)` of the modified second form.
pub fn b40_vec(p: &SpectralPair, t: f64, n_cut: usize, deriv: Option<&Derivatives>) -> SpectralPair {
    eval_terms(&lists().b40, p, t, n_cut, deriv)
}

/// Term lists by operator name, for audits and traces.
pub fn term_list(op: OperatorId) -> Option<&'static Components<TriTerm>> {
    let l = lists();
    Some(match op {
        OperatorId::R3 => &l.r3,
        OperatorId::R3res => &l.r3res,
        OperatorId::R3nres => &l.r3nres,
        OperatorId::B3 => &l.b3,
        OperatorId::B4 => &l.b4,
        OperatorId::R3Q => &l.r3q,
        OperatorId::R3nres0 => &l.r3q_nres0,
        OperatorId::R3nres1 => &l.r3q_nres1,
        OperatorId::B30 => &l.b30,
        _ => return None,
    })
}

/// `B40` term list (not addressable through [`OperatorId`]).
pub fn b40_terms() -> &'static Components<TriTerm> {
    &lists().b40
}

/// Trace record for a vector-operator evaluation.
pub fn record(op: OperatorId, p: &SpectralPair, t: f64, n_cut: Option<usize>) -> EvalRecord {
    let terms = term_list(op).map(|c| c[0].len() + c[1].len()).unwrap_or(match op {
        OperatorId::B1P | OperatorId::B1 => 4,
        OperatorId::B1Q | OperatorId::B2Q => 8,
        _ => 4,
    });
    EvalRecord {
        op,
        n_max: p.n_max(),
        n_cut,
        t,
        terms,
        skipped_denominators: 0,
    }
}
