//! Combinatorial decodability checks on codebooks.
//!
//! All subset-quantified properties are decided by exhaustive enumeration
//! under a budget on the number of subset checks. Over budget the answer is
//! [`Verdict::Indeterminate`]; no sampling is ever substituted.
//!
//! Enumeration is split by the first index of each subset and run on the
//! rayon pool. The reported witness is always the lexicographically first
//! failing subset, whatever the thread count.

use rayon::prelude::*;
use thiserror::Error;

use crate::pattern::{Codebook, Pattern, weight_profile};

/// Default cap on subset checks per verification.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VerifyError {
    #[error("order M must be at least 1")]
    ZeroOrder,
    #[error("codebook is empty")]
    EmptyCodebook,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    /// Needed more subset checks than the budget allows.
    Indeterminate,
}

impl Verdict {
    pub fn holds(self) -> bool {
        self == Verdict::Holds
    }

    /// CLI convention: 0 holds, 1 fails, 2 indeterminate.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Holds => 0,
            Verdict::Fails => 1,
            Verdict::Indeterminate => 2,
        }
    }
}

/// Outcome of an M-IC check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StoppingSetReport {
    pub verdict: Verdict,
    /// Pattern indices of a stopping set: what is left of the first
    /// non-decodable subset once peeling stalls. No slot has weight one
    /// within it.
    pub witness: Option<Vec<usize>>,
    pub m_checked: usize,
    /// Subsets examined (or that would have been, when over budget).
    pub subsets: u64,
}

impl StoppingSetReport {
    pub fn is_m_ic(&self) -> bool {
        self.verdict.holds()
    }
}

/// Outcome of a superimposed or cover-free check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropertyReport {
    pub verdict: Verdict,
    /// Superimposed: the subset lacking a permutation submatrix.
    /// Cover-free: the covered pattern first, then the covering patterns.
    pub witness: Option<Vec<usize>>,
    pub subsets: u64,
}

/// `C(n, k)` saturating at `u64::MAX`.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Visits the `k`-subsets of `0..n` whose smallest element is `first`, in
/// lexicographic order, stopping early when `f` returns `Some`.
fn scan_with_first<T>(first: usize, n: usize, k: usize, mut f: impl FnMut(&[usize]) -> Option<T>) -> Option<T> {
    if k == 0 || first + k > n {
        return None;
    }
    let mut idx: Vec<usize> = (first..first + k).collect();
    loop {
        if let Some(t) = f(&idx) {
            return Some(t);
        }
        // advance positions 1..k like an odometer, keeping idx[0] fixed
        let mut pos = k;
        loop {
            if pos == 1 {
                return None;
            }
            pos -= 1;
            if idx[pos] < n - (k - pos) {
                break;
            }
        }
        idx[pos] += 1;
        for p in pos + 1..k {
            idx[p] = idx[p - 1] + 1;
        }
    }
}

/// First (lexicographic) `k`-subset of `0..n` for which `f` yields `Some`.
fn first_failure<T: Send>(n: usize, k: usize, f: impl Fn(&[usize]) -> Option<T> + Sync) -> Option<T> {
    (0..n).into_par_iter().find_map_first(|first| scan_with_first(first, n, k, &f))
}

/// Runs iterated singleton removal on `patterns` and returns the positions
/// that could not be peeled.
pub(crate) fn peel_residual(patterns: &[Pattern]) -> Vec<usize> {
    let mut alive: Vec<usize> = (0..patterns.len()).collect();
    loop {
        let mut seen = 0u128;
        let mut multi = 0u128;
        for &i in &alive {
            let b = patterns[i].bits();
            multi |= seen & b;
            seen |= b;
        }
        let single = seen & !multi;
        let before = alive.len();
        alive.retain(|&i| patterns[i].bits() & single == 0);
        if alive.len() == before || alive.is_empty() {
            return alive;
        }
    }
}

/// Decides whether every set of at most `m` codewords is recovered by SIC.
///
/// Checks all `min(m, N)`-subsets: a subset peels completely iff it contains
/// no stopping set, so smaller subsets are covered by their supersets.
/// `m = 1` holds for every codebook of nonzero patterns.
pub fn is_m_ic(code: &Codebook, m: usize, budget: u64) -> Result<StoppingSetReport, VerifyError> {
    if m == 0 {
        return Err(VerifyError::ZeroOrder);
    }
    let n = code.size();
    if n == 0 {
        return Err(VerifyError::EmptyCodebook);
    }
    if m == 1 {
        return Ok(StoppingSetReport { verdict: Verdict::Holds, witness: None, m_checked: 1, subsets: 0 });
    }
    let k = m.min(n);
    let subsets = binomial(n as u64, k as u64);
    if subsets > budget {
        return Ok(StoppingSetReport { verdict: Verdict::Indeterminate, witness: None, m_checked: m, subsets });
    }
    let pats = code.patterns();
    let witness = first_failure(n, k, |idx| {
        let sub: Vec<Pattern> = idx.iter().map(|&i| pats[i]).collect();
        let rest = peel_residual(&sub);
        (!rest.is_empty()).then(|| rest.into_iter().map(|r| idx[r]).collect::<Vec<_>>())
    });
    Ok(StoppingSetReport {
        verdict: if witness.is_some() { Verdict::Fails } else { Verdict::Holds },
        witness,
        m_checked: m,
        subsets,
    })
}

/// Decides whether every set of at most `m` columns contains an `m x m`
/// permutation submatrix, i.e. each member owns a slot private within the set.
pub fn is_superimposed(code: &Codebook, m: usize, budget: u64) -> Result<PropertyReport, VerifyError> {
    if m == 0 {
        return Err(VerifyError::ZeroOrder);
    }
    let n = code.size();
    if n == 0 {
        return Err(VerifyError::EmptyCodebook);
    }
    let k = m.min(n);
    let subsets = binomial(n as u64, k as u64);
    if subsets > budget {
        return Ok(PropertyReport { verdict: Verdict::Indeterminate, witness: None, subsets });
    }
    let pats = code.patterns();
    let witness = first_failure(n, k, |idx| {
        let mut seen = 0u128;
        let mut multi = 0u128;
        for &i in idx {
            multi |= seen & pats[i].bits();
            seen |= pats[i].bits();
        }
        let single = seen & !multi;
        idx.iter().any(|&i| pats[i].bits() & single == 0).then(|| idx.to_vec())
    });
    Ok(PropertyReport { verdict: if witness.is_some() { Verdict::Fails } else { Verdict::Holds }, witness, subsets })
}

/// Decides whether no support is contained in the union of `m - 1` other
/// supports.
pub fn is_covering_free(code: &Codebook, m: usize, budget: u64) -> Result<PropertyReport, VerifyError> {
    if m == 0 {
        return Err(VerifyError::ZeroOrder);
    }
    let n = code.size();
    if n == 0 {
        return Err(VerifyError::EmptyCodebook);
    }
    let others = m.min(n) - 1;
    if others == 0 {
        // a nonzero support is never inside the empty union
        return Ok(PropertyReport { verdict: Verdict::Holds, witness: None, subsets: 0 });
    }
    let subsets = binomial(n as u64, others as u64).saturating_mul((n - others) as u64);
    if subsets > budget {
        return Ok(PropertyReport { verdict: Verdict::Indeterminate, witness: None, subsets });
    }
    let pats = code.patterns();
    // Witness order: by covering set, then by covered pattern.
    let witness = first_failure(n, others, |idx| {
        let union = idx.iter().fold(0u128, |u, &i| u | pats[i].bits());
        (0..n).filter(|x| !idx.contains(x)).find(|&x| pats[x].bits() & !union == 0).map(|x| {
            let mut w = vec![x];
            w.extend_from_slice(idx);
            w
        })
    });
    Ok(PropertyReport { verdict: if witness.is_some() { Verdict::Fails } else { Verdict::Holds }, witness, subsets })
}

/// Superimposed order guaranteed by the minimum weight `k` and the maximum
/// pairwise intersection `v`: `ceil(k / v)`. `None` when supports are
/// pairwise disjoint (`v = 0`).
pub fn prop1_order(code: &Codebook) -> Result<Option<usize>, VerifyError> {
    if code.is_empty() {
        return Err(VerifyError::EmptyCodebook);
    }
    let wp = weight_profile(code);
    let k = wp.min_column_weight() as usize;
    let v = wp.max_pairwise_intersection as usize;
    Ok((v > 0).then(|| k.div_ceil(v)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RcReport {
    /// Every two columns share at most one slot (no 4-cycles).
    pub holds: bool,
    pub max_intersection: u32,
    /// `C(n, 2)`: the population bound for 4-cycle-free codes.
    pub capacity: u64,
    /// `N < C(n, 2)`.
    pub below_capacity: bool,
    /// All column weights are at least 2, so the capacity bound applies.
    pub bound_applies: bool,
}

pub fn rc_condition(code: &Codebook) -> RcReport {
    let wp = weight_profile(code);
    let capacity = binomial(code.n() as u64, 2);
    RcReport {
        holds: wp.max_pairwise_intersection <= 1,
        max_intersection: wp.max_pairwise_intersection,
        capacity,
        below_capacity: (code.size() as u64) < capacity,
        bound_applies: wp.min_column_weight() >= 2,
    }
}
