use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frequency band of one argument (or of a pair sum) relative to a cutoff.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    All,
    /// `|k| <= n_cut` (the projection P).
    Low,
    /// `|k| > n_cut` (the projection Q).
    High,
}

impl Band {
    #[inline]
    pub fn contains(self, k: i64, n_cut: usize) -> bool {
        match self {
            Band::All => true,
            Band::Low => k.unsigned_abs() as usize <= n_cut,
            Band::High => k.unsigned_abs() as usize > n_cut,
        }
    }

    /// Intersection; `None` when empty.
    pub fn meet(self, other: Band) -> Option<Band> {
        match (self, other) {
            (Band::All, b) | (b, Band::All) => Some(b),
            (Band::Low, Band::Low) => Some(Band::Low),
            (Band::High, Band::High) => Some(Band::High),
            _ => None,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Band::All => "",
            Band::Low => "P",
            Band::High => "Q",
        }
    }
}

/// Constraint on the sum `k_i + k_j` of two argument indices.
///
/// The sum must be a representable mode, `1 <= |k_i + k_j| <= n_max`, and in
/// addition lie in `band`. This is the pair projection `P(u_{k1} v_{k2})`
/// (band `Low`) or `Q(u_{k1} v_{k2})` (band `High`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PairFilter {
    pub i: usize,
    pub j: usize,
    pub band: Band,
}

/// Per-argument bands and an optional pair-sum constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArgumentFilter {
    pub args: [Band; 4],
    pub pair: Option<PairFilter>,
    pub n_cut: usize,
}

impl Default for ArgumentFilter {
    fn default() -> Self {
        ArgumentFilter::all()
    }
}

impl ArgumentFilter {
    /// No restriction at all.
    pub fn all() -> Self {
        ArgumentFilter {
            args: [Band::All; 4],
            pair: None,
            n_cut: 1,
        }
    }

    pub fn new(n_cut: usize) -> Result<Self> {
        if n_cut == 0 {
            return Err(Error::Config("n_cut must be at least 1".into()));
        }
        Ok(ArgumentFilter {
            n_cut,
            ..ArgumentFilter::all()
        })
    }

    pub fn with_args(mut self, bands: &[Band]) -> Self {
        for (slot, &b) in self.args.iter_mut().zip(bands) {
            *slot = b;
        }
        self
    }

    pub fn with_pair(mut self, i: usize, j: usize, band: Band) -> Self {
        assert!(i < j && j < 4, "pair indices must satisfy i < j < 4");
        self.pair = Some(PairFilter { i, j, band });
        self
    }

    #[inline]
    pub fn arg_ok(&self, pos: usize, k: i64) -> bool {
        self.args[pos].contains(k, self.n_cut)
    }

    #[inline]
    pub fn pair_ok(&self, ks: &[i64], n_max: usize) -> bool {
        match self.pair {
            None => true,
            Some(p) => pair_sum_ok(ks[p.i] + ks[p.j], p.band, self.n_cut, n_max),
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.pair.is_none() && self.args.iter().all(|&b| b == Band::All)
    }
}

#[inline]
pub fn pair_sum_ok(s: i64, band: Band, n_cut: usize, n_max: usize) -> bool {
    let a = s.unsigned_abs() as usize;
    a >= 1 && a <= n_max && band.contains(s, n_cut)
}

/// Names of the operators, used in reports and traces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OperatorId {
    B1,
    B2,
    B3,
    B4,
    R3,
    R3res,
    R3nres,
    R3nres0,
    R3nres1,
    B30,
    B1P,
    B1Q,
    B2Q,
    R3Q,
}

impl OperatorId {
    pub const ALL: [OperatorId; 14] = [
        OperatorId::B1,
        OperatorId::B2,
        OperatorId::B3,
        OperatorId::B4,
        OperatorId::R3,
        OperatorId::R3res,
        OperatorId::R3nres,
        OperatorId::R3nres0,
        OperatorId::R3nres1,
        OperatorId::B30,
        OperatorId::B1P,
        OperatorId::B1Q,
        OperatorId::B2Q,
        OperatorId::R3Q,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OperatorId::B1 => "B1",
            OperatorId::B2 => "B2",
            OperatorId::B3 => "B3",
            OperatorId::B4 => "B4",
            OperatorId::R3 => "R3",
            OperatorId::R3res => "R3res",
            OperatorId::R3nres => "R3nres",
            OperatorId::R3nres0 => "R3nres0",
            OperatorId::R3nres1 => "R3nres1",
            OperatorId::B30 => "B30",
            OperatorId::B1P => "B1P",
            OperatorId::B1Q => "B1Q",
            OperatorId::B2Q => "B2Q",
            OperatorId::R3Q => "R3Q",
        }
    }

    pub fn parse(s: &str) -> Option<OperatorId> {
        OperatorId::ALL.into_iter().find(|op| op.name().eq_ignore_ascii_case(s))
    }

    /// Number of field arguments of the scalar operator.
    pub fn arity(self) -> usize {
        match self {
            OperatorId::B1 | OperatorId::B2 => 2,
            OperatorId::B4 => 4,
            OperatorId::B1P | OperatorId::B1Q | OperatorId::B2Q | OperatorId::R3Q => 2,
            _ => 3,
        }
    }
}

impl std::fmt::Display for OperatorId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_membership() {
        assert!(Band::Low.contains(-3, 3));
        assert!(!Band::Low.contains(4, 3));
        assert!(Band::High.contains(-4, 3));
        assert!(Band::All.contains(100, 3));
        assert_eq!(Band::Low.meet(Band::High), None);
        assert_eq!(Band::All.meet(Band::High), Some(Band::High));
    }

    #[test]
    fn pair_sums_exclude_zero_and_unrepresentable() {
        assert!(!pair_sum_ok(0, Band::All, 2, 8));
        assert!(!pair_sum_ok(9, Band::All, 2, 8));
        assert!(pair_sum_ok(-8, Band::High, 2, 8));
        assert!(pair_sum_ok(2, Band::Low, 2, 8));
        let f = ArgumentFilter::new(2).unwrap().with_pair(1, 2, Band::High);
        assert!(f.pair_ok(&[1, 2, 1], 8));
        assert!(!f.pair_ok(&[1, 1, 1], 8));
    }

    #[test]
    fn operator_names_round_trip() {
        for op in OperatorId::ALL {
            assert_eq!(OperatorId::parse(op.name()), Some(op));
        }
        assert_eq!(OperatorId::parse("nope"), None);
        assert!(ArgumentFilter::new(0).is_err());
    }
}
