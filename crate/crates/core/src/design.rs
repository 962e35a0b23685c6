//! Code constructions: constant-weight codebooks, Steiner systems and the
//! extended Busschbach lifting.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::pattern::{Codebook, MAX_SLOTS, Pattern, PatternError};
use crate::search::creates_forbidden_triplet;
use crate::verify::{self, Verdict};

/// Default cap on the size of an enumerated constant-weight codebook.
pub const DEFAULT_ENUM_CAP: u64 = 1 << 21;

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("weight k={k} outside 1..={n}")]
    WeightOutOfRange { n: usize, k: usize },
    #[error("C({n},{k}) = {size} exceeds the enumeration cap {cap}")]
    CapExceeded { n: usize, k: usize, size: u64, cap: u64 },
    #[error("no Steiner triple system of order {0} (need n = 1 or 3 mod 6, n >= 3)")]
    InadmissibleOrder(usize),
    #[error("invalid design parameters t={t} k={k} n={n}")]
    BadParameters { t: usize, k: usize, n: usize },
    #[error("block {block} has {found} elements, expected {k}")]
    WrongBlockSize { block: usize, found: usize, k: usize },
    #[error("block {block}: element {element} out of range for n={n}")]
    ElementOutOfRange { block: usize, element: usize, n: usize },
    #[error("block {block} repeats element {element}")]
    RepeatedElement { block: usize, element: usize },
    #[error("blocks {first} and {second} are identical")]
    DuplicateBlock { first: usize, second: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error on {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("input code is not 3-IC (stopping set {0:?})")]
    NotThreeIc(Vec<usize>),
    #[error("could not decide whether the input code is 3-IC within the budget")]
    Undecided,
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

/// Enumerates all weight-`k` patterns of length `n`, in lexicographic order
/// of their `0`/`1` strings.
pub fn enumerate_constant_weight(n: usize, k: usize, cap: u64) -> Result<Codebook, DesignError> {
    if k == 0 || k > n {
        return Err(DesignError::WeightOutOfRange { n, k });
    }
    if n > MAX_SLOTS {
        return Err(PatternError::BadFrameSize(n).into());
    }
    let size = verify::binomial(n as u64, k as u64);
    if size > cap {
        return Err(DesignError::CapExceeded { n, k, size, cap });
    }
    // Supports in reverse-lexicographic order of their slot lists give the
    // 0/1 strings in increasing lexicographic order.
    let mut idx: Vec<usize> = (n - k..n).collect();
    let mut out = Vec::with_capacity(size as usize);
    loop {
        out.push(Pattern::from_support(idx.iter().copied(), n)?);
        // step to the previous k-subset in lexicographic order of slot lists
        let Some(pos) = (0..k).rev().find(|&p| idx[p] > if p == 0 { 0 } else { idx[p - 1] + 1 }) else {
            break;
        };
        idx[pos] -= 1;
        for (p, v) in idx.iter_mut().enumerate().skip(pos + 1) {
            *v = n - (k - p);
        }
    }
    Ok(Codebook::new(n, out)?.with_label(format!("constant-weight n={n} k={k}")))
}

/// A set system over `{0, .., n-1}` with `k`-element blocks, declared with a
/// coverage order `t`. The Steiner property is not assumed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockDesign {
    n: usize,
    t: usize,
    k: usize,
    blocks: Vec<Vec<usize>>,
}

impl BlockDesign {
    pub fn new(t: usize, k: usize, n: usize, blocks: Vec<Vec<usize>>) -> Result<Self, DesignError> {
        if t == 0 || t > k || k > n {
            return Err(DesignError::BadParameters { t, k, n });
        }
        let mut sorted = Vec::with_capacity(blocks.len());
        for (bi, mut b) in blocks.into_iter().enumerate() {
            if b.len() != k {
                return Err(DesignError::WrongBlockSize { block: bi, found: b.len(), k });
            }
            if let Some(&e) = b.iter().find(|&&e| e >= n) {
                return Err(DesignError::ElementOutOfRange { block: bi, element: e, n });
            }
            b.sort_unstable();
            if let Some(w) = b.windows(2).find(|w| w[0] == w[1]) {
                return Err(DesignError::RepeatedElement { block: bi, element: w[0] });
            }
            sorted.push(b);
        }
        Ok(Self { n, t, k, blocks: sorted })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn t(&self) -> usize {
        self.t
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Block count a Steiner system with these parameters must have.
    pub fn steiner_block_count(&self) -> u64 {
        verify::binomial(self.n as u64, self.t as u64) / verify::binomial(self.k as u64, self.t as u64)
    }

    /// Parses `t k n B` followed by `B` lines of `k` zero-based elements.
    /// Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, DesignError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let numbers = |line: usize, l: &str| -> Result<Vec<usize>, DesignError> {
            l.split_whitespace()
                .map(|f| f.parse::<usize>().map_err(|_| DesignError::Parse { line, msg: format!("bad integer {f:?}") }))
                .collect()
        };
        let (hline, header) =
            lines.next().ok_or(DesignError::Parse { line: 0, msg: "missing `t k n B` header".into() })?;
        let h = numbers(hline, header)?;
        let [t, k, n, count] = h[..] else {
            return Err(DesignError::Parse { line: hline, msg: "header must be `t k n B`".into() });
        };
        let mut blocks = Vec::with_capacity(count);
        for (line, l) in lines {
            blocks.push(numbers(line, l)?);
        }
        if blocks.len() != count {
            return Err(DesignError::Parse {
                line: hline,
                msg: format!("header declares {count} blocks, found {}", blocks.len()),
            });
        }
        BlockDesign::new(t, k, n, blocks)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {} {}\n", self.t, self.k, self.n, self.blocks.len());
        for b in &self.blocks {
            let line: Vec<String> = b.iter().map(usize::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for BlockDesign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S({},{},{}) candidate with {} blocks", self.t, self.k, self.n, self.blocks.len())
    }
}

pub fn load_block_design(path: impl AsRef<Path>) -> Result<BlockDesign, DesignError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| DesignError::Io { path: path.display().to_string(), msg: e.to_string() })?;
    BlockDesign::parse(&text)
}

/// Steiner triple system of order `n`: Bose construction for `n = 3 mod 6`,
/// Skolem construction for `n = 1 mod 6`.
pub fn steiner_triple(n: usize) -> Result<BlockDesign, DesignError> {
    let blocks = match n % 6 {
        3 => bose(n),
        1 if n >= 7 => skolem(n),
        _ => return Err(DesignError::InadmissibleOrder(n)),
    };
    BlockDesign::new(2, 3, n, blocks)
}

/// Points `(x, i)` of `Z_v x Z_3` are labelled `x + v i`.
fn bose(n: usize) -> Vec<Vec<usize>> {
    let v = n / 3;
    let half = v.div_ceil(2); // inverse of 2 mod odd v
    let op = |x: usize, y: usize| (x + y) * half % v;
    let pt = |x: usize, i: usize| x + v * (i % 3);
    let mut blocks = Vec::with_capacity(n * (n - 1) / 6);
    for x in 0..v {
        blocks.push(vec![pt(x, 0), pt(x, 1), pt(x, 2)]);
    }
    for i in 0..3 {
        for x in 0..v {
            for y in x + 1..v {
                blocks.push(vec![pt(x, i), pt(y, i), pt(op(x, y), i + 1)]);
            }
        }
    }
    blocks
}

/// Points `(x, i)` of `Z_2m x Z_3` are labelled `x + 2m i`; the point at
/// infinity is `n - 1`.
fn skolem(n: usize) -> Vec<Vec<usize>> {
    let m = (n - 1) / 6;
    let order = 2 * m;
    // half-idempotent commutative quasigroup: relabelled addition table of
    // Z_2m with x o x = (x + m) o (x + m) = x mod m
    let op = |x: usize, y: usize| {
        let s = (x + y) % order;
        if s.is_multiple_of(2) { s / 2 } else { m + s / 2 }
    };
    let pt = |x: usize, i: usize| x + order * (i % 3);
    let inf = n - 1;
    let mut blocks = Vec::with_capacity(n * (n - 1) / 6);
    for x in 0..m {
        blocks.push(vec![pt(x, 0), pt(x, 1), pt(x, 2)]);
    }
    for i in 0..3 {
        for x in 0..m {
            blocks.push(vec![inf, pt(x + m, i), pt(x, i + 1)]);
        }
    }
    for i in 0..3 {
        for x in 0..order {
            for y in x + 1..order {
                blocks.push(vec![pt(x, i), pt(y, i), pt(op(x, y), i + 1)]);
            }
        }
    }
    blocks
}

/// Result of checking exact `t`-subset coverage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SteinerReport {
    pub holds: bool,
    /// First `t`-subset (lexicographic) not covered exactly once, with the
    /// number of blocks containing it.
    pub violation: Option<(Vec<usize>, usize)>,
}

fn subset_mask(elems: &[usize]) -> u128 {
    elems.iter().fold(0u128, |m, &e| m | (1u128 << e))
}

fn for_each_subset(items: &[usize], t: usize, f: &mut impl FnMut(&[usize]) -> bool) -> bool {
    fn rec(
        items: &[usize],
        t: usize,
        start: usize,
        cur: &mut Vec<usize>,
        f: &mut impl FnMut(&[usize]) -> bool,
    ) -> bool {
        if cur.len() == t {
            return f(cur);
        }
        for i in start..items.len() {
            if items.len() - i < t - cur.len() {
                break;
            }
            cur.push(items[i]);
            let go = rec(items, t, i + 1, cur, f);
            cur.pop();
            if !go {
                return false;
            }
        }
        true
    }
    rec(items, t, 0, &mut Vec::with_capacity(t), f)
}

/// Checks that every `t`-subset of the ground set lies in exactly one block.
pub fn verify_steiner(design: &BlockDesign) -> SteinerReport {
    let (n, t) = (design.n, design.t);
    let mut counts: HashMap<u128, usize> = HashMap::new();
    let big = n > MAX_SLOTS;
    let mut keyed: HashMap<Vec<usize>, usize> = HashMap::new();
    for b in &design.blocks {
        for_each_subset(b, t, &mut |s| {
            if big {
                *keyed.entry(s.to_vec()).or_default() += 1;
            } else {
                *counts.entry(subset_mask(s)).or_default() += 1;
            }
            true
        });
    }
    let ground: Vec<usize> = (0..n).collect();
    let mut violation = None;
    for_each_subset(&ground, t, &mut |s| {
        let c = if big { keyed.get(s).copied() } else { counts.get(&subset_mask(s)).copied() }.unwrap_or(0);
        if c != 1 {
            violation = Some((s.to_vec(), c));
            return false;
        }
        true
    });
    SteinerReport { holds: violation.is_none(), violation }
}

/// Incidence patterns of the blocks, one codeword per block.
pub fn design_to_codebook(design: &BlockDesign) -> Result<Codebook, DesignError> {
    let mut seen: HashMap<&[usize], usize> = HashMap::new();
    for (i, b) in design.blocks.iter().enumerate() {
        if let Some(&first) = seen.get(b.as_slice()) {
            return Err(DesignError::DuplicateBlock { first, second: i });
        }
        seen.insert(b, i);
    }
    let patterns = design
        .blocks
        .iter()
        .map(|b| Pattern::from_support(b.iter().copied(), design.n))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Codebook::new(design.n, patterns)?.with_label(format!("design S({},{},{})", design.t, design.k, design.n)))
}

/// Limits for the greedy `111a` scan of [`busschbach_extend`].
#[derive(Clone, Copy, Debug)]
pub struct ExtensionBudget {
    /// Candidates `a` examined, in lexicographic order starting from zero.
    pub max_candidates: u64,
    /// Subset budget for the 3-IC precondition check.
    pub verify_budget: u64,
}

impl Default for ExtensionBudget {
    fn default() -> Self {
        Self { max_candidates: 1 << 20, verify_budget: verify::DEFAULT_BUDGET }
    }
}

#[derive(Clone, Debug)]
pub struct Extension {
    pub code: Codebook,
    /// Number of `111a` patterns accepted (always at least 1).
    pub extra: usize,
    /// Candidates examined by the greedy scan.
    pub scanned: u64,
}

/// Lifts a 3-IC code of frame `n` to a 3-IC code of frame `n + 3`.
///
/// Output: `100x`, `010x`, `001x` for every input pattern `x` and for the
/// zero pattern, followed by patterns `111a` accepted greedily (candidates
/// `a` in lexicographic order, zero first) whenever they keep the code 3-IC.
/// The size is `3 (N + 1) + extra` with `extra >= 1`.
pub fn busschbach_extend(code: &Codebook, budget: ExtensionBudget) -> Result<Extension, DesignError> {
    let report = verify::is_m_ic(code, 3, budget.verify_budget).map_err(|_| DesignError::Undecided)?;
    match report.verdict {
        Verdict::Holds => {}
        Verdict::Fails => return Err(DesignError::NotThreeIc(report.witness.unwrap_or_default())),
        Verdict::Indeterminate => return Err(DesignError::Undecided),
    }
    let n = code.n();
    let out_n = n + 3;
    if out_n > MAX_SLOTS {
        return Err(PatternError::BadFrameSize(out_n).into());
    }
    let zero = Pattern::zero(n)?;
    let mut tails: Vec<Pattern> = code.patterns().to_vec();
    tails.push(zero);
    let mut out = Vec::with_capacity(3 * tails.len() + 16);
    for head in ["100", "010", "001"] {
        let head = crate::pattern::parse_pattern(head, 3)?;
        for x in &tails {
            out.push(head.concat(x)?);
        }
    }
    let all = crate::pattern::parse_pattern("111", 3)?;
    let mut extra = 0;
    let mut scanned = 0u64;
    // candidate a in lexicographic string order: slot 0 is the most
    // significant character
    let limit = if n >= 64 { u64::MAX } else { 1u64 << n };
    let mut a = 0u64;
    while a < limit && scanned < budget.max_candidates.max(1) {
        let mut bits = 0u128;
        for s in 0..n.min(64) {
            if (a >> (n - 1 - s)) & 1 == 1 {
                bits |= 1 << s;
            }
        }
        let cand = all.concat(&Pattern::from_bits(bits, n)?)?;
        scanned += 1;
        if !creates_forbidden_triplet(&out, &cand) {
            out.push(cand);
            extra += 1;
        }
        a += 1;
    }
    let lifted = Codebook::new(out_n, out)?.with_label(format!("busschbach n={out_n} from n={n}"));
    Ok(Extension { code: lifted, extra, scanned })
}

/// Steiner systems shipped with the crate as block-design text.
pub mod bundled {
    use super::{BlockDesign, DesignError};

    pub const STEINER_3_5_26: &str = include_str!("../data/steiner_3_5_26.txt");
    pub const STEINER_3_5_65: &str = include_str!("../data/steiner_3_5_65.txt");

    /// Names accepted by [`by_name`].
    pub const NAMES: [&str; 2] = ["s35_26", "s35_65"];

    pub fn steiner_3_5_26() -> BlockDesign {
        BlockDesign::parse(STEINER_3_5_26).expect("bundled S(3,5,26) parses")
    }

    pub fn steiner_3_5_65() -> BlockDesign {
        BlockDesign::parse(STEINER_3_5_65).expect("bundled S(3,5,65) parses")
    }

    pub fn by_name(name: &str) -> Result<BlockDesign, DesignError> {
        match name {
            "s35_26" => Ok(steiner_3_5_26()),
            "s35_65" => Ok(steiner_3_5_65()),
            _ => Err(DesignError::Parse { line: 0, msg: format!("unknown bundled design {name:?}") }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::parse_pattern;

    #[test]
    fn constant_weight_small() {
        let c = enumerate_constant_weight(3, 3, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(c.size(), 1);
        assert_eq!(c.patterns()[0].to_string(), "111");
        let c = enumerate_constant_weight(4, 2, DEFAULT_ENUM_CAP).unwrap();
        let strs: Vec<String> = c.patterns().iter().map(|p| p.to_string()).collect();
        assert_eq!(strs, ["0011", "0101", "0110", "1001", "1010", "1100"]);
        assert!(matches!(enumerate_constant_weight(3, 0, 10), Err(DesignError::WeightOutOfRange { .. })));
        assert!(matches!(enumerate_constant_weight(3, 4, 10), Err(DesignError::WeightOutOfRange { .. })));
        assert!(matches!(enumerate_constant_weight(24, 6, 1000), Err(DesignError::CapExceeded { .. })));
    }

    #[test]
    fn steiner_triple_small_orders() {
        for n in [3, 7, 9, 13, 15, 19, 21] {
            let d = steiner_triple(n).unwrap();
            assert_eq!(d.blocks().len(), n * (n - 1) / 6, "n={n}");
            assert!(verify_steiner(&d).holds, "n={n}");
        }
        for n in [1, 4, 5, 6, 8, 11] {
            assert!(matches!(steiner_triple(n), Err(DesignError::InadmissibleOrder(_))), "n={n}");
        }
    }

    #[test]
    fn removing_a_block_breaks_coverage() {
        let d = steiner_triple(9).unwrap();
        let mut blocks = d.blocks().to_vec();
        let removed = blocks.remove(0);
        let broken = BlockDesign::new(2, 3, 9, blocks).unwrap();
        let r = verify_steiner(&broken);
        assert!(!r.holds);
        let (pair, count) = r.violation.unwrap();
        assert_eq!(count, 0);
        assert!(pair.iter().all(|e| removed.contains(e)));
    }

    #[test]
    fn design_format() {
        let d = BlockDesign::parse("# fano\n2 3 7 7\n0 1 3\n1 2 4\n2 3 5\n3 4 6\n4 5 0\n5 6 1\n6 0 2\n").unwrap();
        assert!(verify_steiner(&d).holds);
        assert_eq!(BlockDesign::parse(&d.to_text()).unwrap(), d);
        assert!(matches!(BlockDesign::parse("3 5 26 1\n0 1 2 3\n"), Err(DesignError::WrongBlockSize { found: 4, .. })));
        assert!(matches!(
            BlockDesign::parse("2 3 7 1\n0 1 7\n"),
            Err(DesignError::ElementOutOfRange { element: 7, .. })
        ));
        let empty = BlockDesign::parse("3 5 26 0\n").unwrap();
        assert!(empty.blocks().is_empty());
        assert!(!verify_steiner(&empty).holds);
        assert!(BlockDesign::parse("2 3 7 2\n0 1 2\n").is_err());
    }

    #[test]
    fn design_codebook() {
        let d = BlockDesign::new(3, 3, 3, vec![vec![0, 1, 2]]).unwrap();
        let c = design_to_codebook(&d).unwrap();
        assert_eq!(c.patterns()[0].to_string(), "111");
        let dup = BlockDesign::new(2, 3, 4, vec![vec![0, 1, 2], vec![2, 1, 0]]).unwrap();
        assert!(matches!(design_to_codebook(&dup), Err(DesignError::DuplicateBlock { first: 0, second: 1 })));
    }

    #[test]
    fn bundled_designs_are_steiner() {
        let d = bundled::steiner_3_5_26();
        assert_eq!((d.t(), d.k(), d.n(), d.blocks().len()), (3, 5, 26, 260));
        assert!(verify_steiner(&d).holds);
        let d = bundled::steiner_3_5_65();
        assert_eq!((d.t(), d.k(), d.n(), d.blocks().len()), (3, 5, 65, 4368));
        assert!(verify_steiner(&d).holds);
    }

    #[test]
    fn busschbach_from_single_slot() {
        let one = Codebook::new(1, vec![parse_pattern("1", 1).unwrap()]).unwrap();
        let ext = busschbach_extend(&one, ExtensionBudget::default()).unwrap();
        assert_eq!(ext.code.n(), 4);
        assert!(ext.code.size() >= 7);
        assert!(ext.extra >= 1);
        assert!(ext.code.patterns().contains(&parse_pattern("1110", 4).unwrap()));
        assert!(verify::is_m_ic(&ext.code, 3, verify::DEFAULT_BUDGET).unwrap().is_m_ic());
    }

    #[test]
    fn busschbach_rejects_non_3ic_input() {
        let bad =
            Codebook::new(3, ["010", "100", "110"].iter().map(|s| parse_pattern(s, 3).unwrap()).collect()).unwrap();
        assert!(matches!(busschbach_extend(&bad, ExtensionBudget::default()), Err(DesignError::NotThreeIc(_))));
    }
}
