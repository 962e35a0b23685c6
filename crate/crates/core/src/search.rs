//! Exact branch-and-bound search for maximum 3-IC codes.
//!
//! The pattern universe (all nonzero patterns of length `n`) is ordered by
//! weight, then lexicographically. The search walks that order deciding
//! include/exclude, keeping the set of candidates that can still join the
//! code without creating a forbidden triplet.
//!
//! Symmetry: the problem is invariant under slot permutations. Only codes
//! whose weight-1/weight-2 part is lexicographically minimal in its orbit are
//! explored, and each heavier weight class is further required to be minimal
//! under the stabilizer of the lighter classes. A set that is not minimal
//! cannot become minimal by adding patterns later in the order, so the test
//! runs after every inclusion.
//!
//! Bounds, all evaluated against the incumbent:
//! - a greedy clique partition of the candidates under the pairwise conflict
//!   graph (two candidates conflict if they form a forbidden triplet with a
//!   chosen pattern);
//! - slot-class caps: patterns agreeing on a set `T` of slots form a 3-IC code
//!   on the other `n - |T|` slots, so each class holds at most
//!   `N(n - |T|)` patterns (plus one when the class value is nonzero).

use std::fmt;
use std::rc::Rc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::pattern::{Codebook, Pattern, PatternError};

/// Largest frame size accepted by the exhaustive search.
pub const MAX_SEARCH_SLOTS: usize = 10;

/// Size limit for the precomputed forbidden-triplet table.
const MAX_TABLE_BYTES: usize = 32 << 20;
/// Size limit for one group's permutation tables; larger groups are not
/// used for pruning (the search stays exact, only slower).
const MAX_GROUP_BYTES: usize = 48 << 20;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("frame size {0} outside 1..={MAX_SEARCH_SLOTS}")]
    BadFrameSize(usize),
    #[error("lifting failed: {0}")]
    Lift(String),
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Optimality {
    /// Search tree exhausted: no larger 3-IC code exists.
    Proven,
    /// Budget interrupted the search; the code is a lower bound only.
    LowerBound,
}

impl Optimality {
    pub fn as_str(&self) -> &'static str {
        match self {
            Optimality::Proven => "proven",
            Optimality::LowerBound => "lower_bound",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    /// Node limit per frame size searched; `None` runs to completion.
    pub budget_nodes: Option<u64>,
    pub symmetry: bool,
    /// Keep every improved incumbent in [`SearchOutcome::history`].
    pub record_history: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { budget_nodes: None, symmetry: true, record_history: false }
    }
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub code: Codebook,
    pub optimality: Optimality,
    /// Nodes of the main search plus the sub-searches for smaller frames.
    pub nodes: u64,
    pub elapsed: Duration,
    /// Successive incumbents (only with `record_history`).
    pub history: Vec<Codebook>,
}

#[inline]
fn is_forbidden(a: u128, b: u128, c: u128) -> bool {
    (a ^ b ^ c) & !(a & b & c) == 0
}

/// True iff some pair `q, r` of `chosen` makes `{p, q, r}` a forbidden
/// triplet (no slot of weight exactly one).
///
/// For a pair with union `u` and symmetric difference `s`, the triple is
/// forbidden iff `p` stays inside `u`, covers all of `s`, and is not itself
/// one of the pair.
pub fn creates_forbidden_triplet(chosen: &[Pattern], p: &Pattern) -> bool {
    let pb = p.bits();
    for (i, q) in chosen.iter().enumerate() {
        for r in &chosen[i + 1..] {
            let (qb, rb) = (q.bits(), r.bits());
            let u = qb | rb;
            let s = qb ^ rb;
            if pb & !u == 0 && s & !pb == 0 && pb != qb && pb != rb {
                return true;
            }
        }
    }
    false
}

#[derive(Clone, Copy, PartialEq, Eq)]
struct Bits<const W: usize>([u64; W]);

impl<const W: usize> Bits<W> {
    const EMPTY: Self = Bits([0; W]);

    #[inline]
    fn set(&mut self, i: usize) {
        self.0[i >> 6] |= 1 << (i & 63);
    }
    #[inline]
    fn clear(&mut self, i: usize) {
        self.0[i >> 6] &= !(1 << (i & 63));
    }
    #[inline]
    fn or(&mut self, other: &Self) {
        for w in 0..W {
            self.0[w] |= other.0[w];
        }
    }
    #[inline]
    fn and(&mut self, other: &Self) {
        for w in 0..W {
            self.0[w] &= other.0[w];
        }
    }
    #[inline]
    fn and_not(&mut self, other: &Self) {
        for w in 0..W {
            self.0[w] &= !other.0[w];
        }
    }
    #[inline]
    fn and_count(&self, other: &Self) -> usize {
        (0..W).map(|w| (self.0[w] & other.0[w]).count_ones() as usize).sum()
    }
    #[inline]
    fn intersects(&self, other: &Self) -> bool {
        (0..W).any(|w| self.0[w] & other.0[w] != 0)
    }
    #[inline]
    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
    #[inline]
    fn first(&self) -> Option<usize> {
        self.0.iter().enumerate().find(|(_, w)| **w != 0).map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }
}

struct Universe {
    n: usize,
    pats: Vec<u128>,
    weights: Vec<u32>,
    /// position of each bit pattern, indexed by its value
    index: Vec<u16>,
}

impl Universe {
    fn new(n: usize) -> Self {
        let mut pats: Vec<Pattern> =
            (1u128..(1 << n)).map(|b| Pattern::from_bits(b, n).expect("within frame")).collect();
        pats.sort_by(|a, b| a.weight().cmp(&b.weight()).then(a.lex_cmp(b)));
        let weights: Vec<u32> = pats.iter().map(Pattern::weight).collect();
        let pats: Vec<u128> = pats.iter().map(Pattern::bits).collect();
        let mut index = vec![u16::MAX; 1 << n];
        for (i, &b) in pats.iter().enumerate() {
            index[b as usize] = i as u16;
        }
        Self { n, pats, weights, index }
    }

    fn len(&self) -> usize {
        self.pats.len()
    }

    /// Weight-1 patterns occupy positions `0..ones()`.
    fn ones(&self) -> usize {
        self.n
    }
}

/// Upper bound on `N(m)` from `N(m-1)`: splitting on one slot leaves at most
/// `N(m-1)` patterns with it clear and `N(m-1) + 1` with it set.
fn fallback_bound(prev: usize) -> usize {
    2 * prev + 1
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    fn rec(rest: &mut Vec<usize>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(cur.clone());
            return;
        }
        for i in 0..rest.len() {
            let x = rest.remove(i);
            cur.push(x);
            rec(rest, cur, out);
            cur.pop();
            rest.insert(i, x);
        }
    }
    let mut out = Vec::new();
    rec(&mut items.to_vec(), &mut Vec::new(), &mut out);
    out
}

fn factorial(k: usize) -> usize {
    (1..=k).product()
}

type PermTables = Rc<Vec<Vec<u16>>>;

/// Non-identity elements of `S_j x S_{n-j}` (the slot permutations fixing
/// the first `j` weight-1 patterns setwise) as maps over universe positions,
/// built on first use.
struct Symmetry {
    groups: Vec<Option<Option<PermTables>>>,
}

impl Symmetry {
    fn new(n: usize) -> Self {
        Self { groups: vec![None; n + 1] }
    }

    fn group(&mut self, u: &Universe, j: usize) -> Option<PermTables> {
        if let Some(g) = &self.groups[j] {
            return g.clone();
        }
        let n = u.n;
        let affordable = factorial(j) * factorial(n - j) * u.len() * 2 <= MAX_GROUP_BYTES;
        let built = affordable.then(|| {
            let fixed: Vec<usize> = (0..j).map(|i| u.pats[i].trailing_zeros() as usize).collect();
            let free: Vec<usize> = (0..n).filter(|s| !fixed.contains(s)).collect();
            let pf = permutations(&fixed);
            let pr = permutations(&free);
            let mut maps = Vec::with_capacity(pf.len() * pr.len());
            for a in &pf {
                for b in &pr {
                    let mut slot_map = vec![0usize; n];
                    for (src, dst) in fixed.iter().zip(a).chain(free.iter().zip(b)) {
                        slot_map[*src] = *dst;
                    }
                    if slot_map.iter().enumerate().all(|(s, d)| s == *d) {
                        continue;
                    }
                    let map: Vec<u16> = u
                        .pats
                        .iter()
                        .map(|&p| {
                            let mut img = 0u128;
                            let mut rest = p;
                            while rest != 0 {
                                img |= 1 << slot_map[rest.trailing_zeros() as usize];
                                rest &= rest - 1;
                            }
                            u.index[img as usize]
                        })
                        .collect();
                    maps.push(map);
                }
            }
            Rc::new(maps)
        });
        self.groups[j] = Some(built.clone());
        built
    }
}

/// Group elements fixing every chosen pattern of weight below `level`.
#[derive(Clone)]
struct Stabilizer {
    maps: PermTables,
    members: Rc<Vec<u32>>,
    level: u32,
}

impl Stabilizer {
    fn refine(&self, fixed: &[usize], level: u32) -> Stabilizer {
        let members = if fixed.is_empty() {
            self.members.clone()
        } else {
            Rc::new(
                self.members
                    .iter()
                    .copied()
                    .filter(|&g| {
                        let map = &self.maps[g as usize];
                        fixed.iter().all(|&p| fixed.binary_search(&(map[p] as usize)).is_ok())
                    })
                    .collect(),
            )
        };
        Stabilizer { maps: self.maps.clone(), members, level }
    }

    /// False if some member maps `block` (sorted, one weight class) to a
    /// lexicographically smaller set.
    fn is_minimal<const W: usize>(&self, block: &[usize]) -> bool {
        let mut orig = Bits::<W>::EMPTY;
        for &p in block {
            orig.set(p);
        }
        for &g in self.members.iter() {
            let map = &self.maps[g as usize];
            let mut img = Bits::<W>::EMPTY;
            for &p in block {
                img.set(map[p] as usize);
            }
            for w in 0..W {
                let d = img.0[w] ^ orig.0[w];
                if d != 0 {
                    if img.0[w] & (d & d.wrapping_neg()) != 0 {
                        return false;
                    }
                    break;
                }
            }
        }
        true
    }
}

struct OutOfBudget;

struct Solver<const W: usize> {
    u: Universe,
    /// `table[a * m + b]`: candidates `c` with `{a, b, c}` forbidden; empty
    /// when rows are computed on the fly.
    table: Vec<Bits<W>>,
    symmetry: Option<Symmetry>,
    /// Patterns grouped by their values on a slot set, with the occupancy
    /// cap of each class.
    class_bounds: Vec<(Vec<Bits<W>>, Vec<usize>)>,
    best: Vec<usize>,
    history: Option<Vec<Vec<usize>>>,
    nodes: u64,
    budget: Option<u64>,
}

impl<const W: usize> Solver<W> {
    fn new(n: usize, opts: &SearchOptions, smaller: &[usize]) -> Self {
        let u = Universe::new(n);
        let m = u.len();
        let mut table = Vec::new();
        if m * m * W * 8 <= MAX_TABLE_BYTES {
            table = vec![Bits::<W>::EMPTY; m * m];
            for a in 0..m {
                for b in a + 1..m {
                    let row = Self::row_direct(&u, a, b);
                    table[a * m + b] = row;
                    table[b * m + a] = row;
                }
            }
        }
        let mut class_bounds = Vec::new();
        for width in 1..=2usize {
            if n <= width {
                break;
            }
            let cap = smaller[n - width];
            let slot_sets: Vec<Vec<usize>> = if width == 1 {
                (0..n).map(|s| vec![s]).collect()
            } else {
                (0..n).flat_map(|s| (s + 1..n).map(move |t| vec![s, t])).collect()
            };
            for set in slot_sets {
                let mut classes = vec![Bits::<W>::EMPTY; 1 << width];
                for (i, &p) in u.pats.iter().enumerate() {
                    let key =
                        set.iter().enumerate().fold(0usize, |k, (bit, &s)| k | ((((p >> s) & 1) as usize) << bit));
                    classes[key].set(i);
                }
                let caps = (0..1usize << width).map(|k| if k == 0 { cap } else { cap + 1 }).collect();
                class_bounds.push((classes, caps));
            }
        }
        Self {
            symmetry: opts.symmetry.then(|| Symmetry::new(n)),
            u,
            table,
            class_bounds,
            best: Vec::new(),
            history: opts.record_history.then(Vec::new),
            nodes: 0,
            budget: opts.budget_nodes,
        }
    }

    fn row_direct(u: &Universe, a: usize, b: usize) -> Bits<W> {
        // c must cover the symmetric difference and may add any part of the
        // intersection
        let (pa, pb) = (u.pats[a], u.pats[b]);
        let base = pa ^ pb;
        let both = pa & pb;
        let mut row = Bits::EMPTY;
        let mut sub = both;
        loop {
            let c = base | sub;
            if c != 0 && c != pa && c != pb {
                debug_assert!(is_forbidden(pa, pb, c));
                row.set(u.index[c as usize] as usize);
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & both;
        }
        row
    }

    #[inline]
    fn row(&self, a: usize, b: usize) -> Bits<W> {
        if self.table.is_empty() { Self::row_direct(&self.u, a, b) } else { self.table[a * self.u.len() + b] }
    }

    fn class_bound(&self, chosen: &Bits<W>, cand: &Bits<W>) -> usize {
        let mut bound = cand.count();
        for (classes, caps) in &self.class_bounds {
            let mut total = 0;
            for (c, &cap) in classes.iter().zip(caps) {
                total += cand.and_count(c).min(cap.saturating_sub(chosen.and_count(c)));
                if total >= bound {
                    break;
                }
            }
            bound = bound.min(total);
        }
        bound
    }

    /// Greedy partition of the candidates into cliques of the pairwise
    /// conflict graph induced by `chosen`.
    fn clique_cover(&self, chosen: &[usize], cand: &Bits<W>) -> Vec<Bits<W>> {
        let conflicts = |a: usize| {
            let mut row = Bits::<W>::EMPTY;
            for &q in chosen {
                row.or(&self.row(a, q));
            }
            row
        };
        let mut rest = *cand;
        let mut out = Vec::new();
        while let Some(a) = rest.first() {
            let mut clique = Bits::<W>::EMPTY;
            clique.set(a);
            rest.clear(a);
            let mut common = conflicts(a);
            common.and(&rest);
            while let Some(b) = common.first() {
                clique.set(b);
                rest.clear(b);
                common.clear(b);
                common.and(&conflicts(b));
            }
            out.push(clique);
        }
        out
    }

    fn run(&mut self) -> Result<(), OutOfBudget> {
        let mut cand = Bits::<W>::EMPTY;
        for i in 0..self.u.len() {
            cand.set(i);
        }
        self.dfs(&mut Vec::new(), Bits::EMPTY, None, cand)
    }

    /// Whether including `v` keeps the code minimal in its orbit, and the
    /// stabilizer to pass below.
    fn admit(&mut self, chosen: &[usize], v: usize, stab: &Option<Stabilizer>) -> (bool, Option<Stabilizer>) {
        let w = self.u.weights[v];
        if w == 1 || self.symmetry.is_none() {
            return (true, None);
        }
        let weights = &self.u.weights;
        let between = |lo: u32| -> Vec<usize> {
            chosen.iter().copied().filter(|&c| weights[c] >= lo && weights[c] < w).collect()
        };
        let stab = match stab {
            Some(s) if s.level == w => s.clone(),
            Some(s) => s.refine(&between(s.level), w),
            None => {
                let j = chosen.iter().filter(|&&c| c < self.u.ones()).count();
                let fixed = between(2);
                let sym = self.symmetry.as_mut().expect("symmetry enabled");
                match sym.group(&self.u, j) {
                    Some(maps) => {
                        let all = Stabilizer { members: Rc::new((0..maps.len() as u32).collect()), maps, level: 2 };
                        all.refine(&fixed, w)
                    }
                    None => return (true, None),
                }
            }
        };
        if stab.members.is_empty() {
            return (true, Some(stab));
        }
        let mut block: Vec<usize> = chosen.iter().copied().filter(|&c| self.u.weights[c] == w).collect();
        block.push(v);
        (stab.is_minimal::<W>(&block), Some(stab))
    }

    fn dfs(
        &mut self,
        chosen: &mut Vec<usize>,
        chosen_bits: Bits<W>,
        stab: Option<Stabilizer>,
        mut cand: Bits<W>,
    ) -> Result<(), OutOfBudget> {
        self.nodes += 1;
        if self.budget.is_some_and(|b| self.nodes > b) {
            return Err(OutOfBudget);
        }
        if chosen.len() > self.best.len() {
            self.best = chosen.clone();
            if let Some(h) = &mut self.history {
                h.push(chosen.clone());
            }
        }
        let cliques = self.clique_cover(chosen, &cand);
        while let Some(v) = cand.first() {
            let target = self.best.len();
            if chosen.len() + cliques.iter().filter(|c| c.intersects(&cand)).count() <= target
                || chosen.len() + self.class_bound(&chosen_bits, &cand) <= target
            {
                return Ok(());
            }
            cand.clear(v);
            let (include, sub) = self.admit(chosen, v, &stab);
            if include {
                let mut next = cand;
                for &q in chosen.iter() {
                    next.and_not(&self.row(v, q));
                }
                let mut nb = chosen_bits;
                nb.set(v);
                chosen.push(v);
                let r = self.dfs(chosen, nb, sub, next);
                chosen.pop();
                r?;
            }
            if v < self.u.ones() && self.symmetry.is_some() {
                // chosen weight-1 patterns form an initial segment
                for w in v + 1..self.u.ones() {
                    cand.clear(w);
                }
            }
        }
        Ok(())
    }
}

struct RawOutcome {
    best: Vec<u128>,
    history: Vec<Vec<u128>>,
    done: bool,
    nodes: u64,
}

fn run_solver<const W: usize>(n: usize, opts: &SearchOptions, smaller: &[usize]) -> RawOutcome {
    let mut s = Solver::<W>::new(n, opts, smaller);
    let done = s.run().is_ok();
    let to_bits = |v: &Vec<usize>| v.iter().map(|&i| s.u.pats[i]).collect::<Vec<_>>();
    RawOutcome {
        best: to_bits(&s.best),
        history: s.history.as_ref().map(|h| h.iter().map(to_bits).collect()).unwrap_or_default(),
        done,
        nodes: s.nodes,
    }
}

fn dispatch(n: usize, opts: &SearchOptions, smaller: &[usize]) -> RawOutcome {
    match (1usize << n) - 1 {
        0..=64 => run_solver::<1>(n, opts, smaller),
        65..=128 => run_solver::<2>(n, opts, smaller),
        129..=256 => run_solver::<4>(n, opts, smaller),
        257..=512 => run_solver::<8>(n, opts, smaller),
        _ => run_solver::<16>(n, opts, smaller),
    }
}

fn to_codebook(n: usize, bits: Vec<u128>) -> Result<Codebook, SearchError> {
    let patterns = bits.into_iter().map(|b| Pattern::from_bits(b, n)).collect::<Result<Vec<_>, _>>()?;
    Ok(Codebook::new(n, patterns)?)
}

/// Searches for a maximum-size 3-IC code with frame size `n`.
///
/// The class-cap bounds need `N(m)` for `m = n-1, n-2`. Smaller frames are
/// searched first, bottom-up, under the same per-frame node budget; an
/// unproven smaller frame contributes `2 N(m-1) + 1` instead.
pub fn search_max_3ic(n: usize, opts: &SearchOptions) -> Result<SearchOutcome, SearchError> {
    if n == 0 || n > MAX_SEARCH_SLOTS {
        return Err(SearchError::BadFrameSize(n));
    }
    let start = Instant::now();
    let mut smaller = vec![0usize];
    let mut nodes = 0;
    let sub_opts = SearchOptions { record_history: false, ..opts.clone() };
    for m in 1..n {
        let sub = dispatch(m, &sub_opts, &smaller);
        nodes += sub.nodes;
        let prev = smaller[m - 1];
        smaller.push(if sub.done { sub.best.len() } else { fallback_bound(prev) });
    }
    let raw = dispatch(n, opts, &smaller);
    nodes += raw.nodes;
    let code = to_codebook(n, raw.best)?.with_label(format!("search3ic n={n}"));
    let history = raw.history.into_iter().map(|h| to_codebook(n, h)).collect::<Result<Vec<_>, _>>()?;
    Ok(SearchOutcome {
        code,
        optimality: if raw.done { Optimality::Proven } else { Optimality::LowerBound },
        nodes,
        elapsed: start.elapsed(),
        history,
    })
}

/// Published value for a frame size: exact, or a lower bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Published {
    Exact(usize),
    AtLeast(usize),
}

impl fmt::Display for Published {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Published::Exact(v) => write!(f, "{v}"),
            Published::AtLeast(v) => write!(f, ">={v}"),
        }
    }
}

/// Reference row for `n = 1..=10`.
pub const PUBLISHED: [Published; 10] = [
    Published::Exact(1),
    Published::Exact(2),
    Published::Exact(4),
    Published::Exact(7),
    Published::Exact(11),
    Published::Exact(18),
    Published::Exact(28),
    Published::AtLeast(44),
    Published::AtLeast(67),
    Published::AtLeast(102),
];

#[derive(Clone, Debug)]
pub struct TableRow {
    pub n: usize,
    pub found: usize,
    pub optimality: Optimality,
    pub nodes: u64,
    pub published: Option<Published>,
    /// `3 (N(n-3) + 1) + 1` from the search result at `n - 3`.
    pub construction_bound: Option<usize>,
    /// Size of the lifted code built from the search result at `n - 3`.
    pub lifted: Option<usize>,
}

/// Search results for `n = 1..=n_max`, next to the published row and the
/// lifting bound.
pub fn table_bounds(n_max: usize, opts: &SearchOptions) -> Result<Vec<TableRow>, SearchError> {
    if n_max == 0 || n_max > MAX_SEARCH_SLOTS {
        return Err(SearchError::BadFrameSize(n_max));
    }
    let mut rows: Vec<TableRow> = Vec::with_capacity(n_max);
    let mut codes: Vec<Codebook> = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let out = search_max_3ic(n, opts)?;
        let base = n.checked_sub(4).map(|i| &codes[i]);
        let lifted = match base {
            Some(code) => Some(
                crate::design::busschbach_extend(code, crate::design::ExtensionBudget::default())
                    .map_err(|e| SearchError::Lift(e.to_string()))?
                    .code
                    .size(),
            ),
            None => None,
        };
        rows.push(TableRow {
            n,
            found: out.code.size(),
            optimality: out.optimality,
            nodes: out.nodes,
            published: PUBLISHED.get(n - 1).copied(),
            construction_bound: base.map(|c| 3 * (c.size() + 1) + 1),
            lifted,
        });
        codes.push(out.code);
    }
    Ok(rows)
}
