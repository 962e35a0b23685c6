//! Binary access patterns and codebooks.
//!
//! A [`Pattern`] is one user's slot-occupancy vector within a frame of `n`
//! slots. Slot `i` is bit `i` of a 128-bit word, so frames of up to
//! [`MAX_SLOTS`] slots are supported and weight/intersection are single
//! popcounts.
//!
//! A [`Codebook`] is an ordered set of distinct nonzero patterns sharing the
//! same frame size. Viewed column-wise it is the `n x N` incidence matrix of
//! the access code.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;

use thiserror::Error;

/// Largest supported frame size.
pub const MAX_SLOTS: usize = 128;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PatternError {
    #[error("pattern length {found} does not match frame size {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("illegal character {ch:?} at position {pos}")]
    IllegalChar { ch: char, pos: usize },
    #[error("frame size {0} outside 1..={MAX_SLOTS}")]
    BadFrameSize(usize),
    #[error("slot {slot} out of range for frame size {n}")]
    SlotOutOfRange { slot: usize, n: usize },
    #[error("pattern {index} is the zero pattern")]
    ZeroPattern { index: usize },
    #[error("patterns {first} and {second} are identical")]
    Duplicate { first: usize, second: usize },
    #[error("empty pattern collection")]
    Empty,
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("i/o error on {path}: {msg}")]
    Io { path: String, msg: String },
}

/// Fixed-length binary vector; bit `i` set means a replica in slot `i`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pattern {
    bits: u128,
    len: u8,
}

fn len_mask(n: usize) -> u128 {
    if n == MAX_SLOTS { u128::MAX } else { (1u128 << n) - 1 }
}

impl Pattern {
    /// The zero pattern of length `n`.
    pub fn zero(n: usize) -> Result<Self, PatternError> {
        Self::from_bits(0, n)
    }

    pub fn from_bits(bits: u128, n: usize) -> Result<Self, PatternError> {
        if n == 0 || n > MAX_SLOTS {
            return Err(PatternError::BadFrameSize(n));
        }
        if bits & !len_mask(n) != 0 {
            let slot = 127 - (bits & !len_mask(n)).leading_zeros() as usize;
            return Err(PatternError::SlotOutOfRange { slot, n });
        }
        Ok(Self { bits, len: n as u8 })
    }

    pub fn from_support<I>(support: I, n: usize) -> Result<Self, PatternError>
    where
        I: IntoIterator<Item = usize>,
    {
        let mut p = Self::zero(n)?;
        for slot in support {
            if slot >= n {
                return Err(PatternError::SlotOutOfRange { slot, n });
            }
            p.bits |= 1u128 << slot;
        }
        Ok(p)
    }

    #[inline]
    pub fn bits(&self) -> u128 {
        self.bits
    }

    /// Frame length in slots (not the weight).
    #[inline]
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    #[inline]
    pub fn weight(&self) -> u32 {
        self.bits.count_ones()
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.bits == 0
    }

    #[inline]
    pub fn contains(&self, slot: usize) -> bool {
        slot < self.len() && (self.bits >> slot) & 1 == 1
    }

    /// Number of slots where both patterns transmit.
    #[inline]
    pub fn overlap(&self, other: &Pattern) -> u32 {
        (self.bits & other.bits).count_ones()
    }

    #[inline]
    pub fn is_subset_of(&self, other: &Pattern) -> bool {
        self.bits & !other.bits == 0
    }

    /// Occupied slot indices in increasing order.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        let mut rest = self.bits;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(i)
        })
    }

    /// Concatenation `self` followed by `tail`, as a pattern of length
    /// `self.len() + tail.len()`.
    pub fn concat(&self, tail: &Pattern) -> Result<Pattern, PatternError> {
        let n = self.len() + tail.len();
        if n > MAX_SLOTS {
            return Err(PatternError::BadFrameSize(n));
        }
        Pattern::from_bits(self.bits | (tail.bits << self.len()), n)
    }

    /// Lexicographic order of the `0`/`1` strings (slot 0 first, `0 < 1`).
    pub fn lex_cmp(&self, other: &Pattern) -> Ordering {
        let diff = self.bits ^ other.bits;
        if diff == 0 {
            return self.len().cmp(&other.len());
        }
        let first = diff.trailing_zeros();
        if (self.bits >> first) & 1 == 0 { Ordering::Less } else { Ordering::Greater }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            f.write_str(if self.contains(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pattern({self})")
    }
}

/// Parses a pattern from a string of exactly `n` characters in `{0,1}`.
pub fn parse_pattern(text: &str, n: usize) -> Result<Pattern, PatternError> {
    let mut p = Pattern::zero(n)?;
    let mut count = 0;
    for (pos, ch) in text.chars().enumerate() {
        match ch {
            '0' => {}
            '1' if pos < n => p.bits |= 1u128 << pos,
            '1' => {}
            _ => return Err(PatternError::IllegalChar { ch, pos }),
        }
        count += 1;
    }
    if count != n {
        return Err(PatternError::LengthMismatch { expected: n, found: count });
    }
    Ok(p)
}

/// Bitmask of slots covered by exactly one of `patterns`.
#[inline]
pub fn singleton_mask<'a, I>(patterns: I) -> u128
where
    I: IntoIterator<Item = &'a Pattern>,
{
    let mut seen = 0u128;
    let mut multi = 0u128;
    for p in patterns {
        multi |= seen & p.bits;
        seen |= p.bits;
    }
    seen & !multi
}

/// True iff some slot is covered by exactly one of the given patterns.
pub fn has_singleton_row(patterns: &[Pattern]) -> Result<bool, PatternError> {
    let first = patterns.first().ok_or(PatternError::Empty)?;
    if let Some(p) = patterns.iter().find(|p| p.len() != first.len()) {
        return Err(PatternError::LengthMismatch { expected: first.len(), found: p.len() });
    }
    Ok(singleton_mask(patterns) != 0)
}

/// An ordered set of distinct nonzero patterns of a common frame size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Codebook {
    n: usize,
    patterns: Vec<Pattern>,
    label: Option<String>,
}

impl Codebook {
    pub fn new(n: usize, patterns: Vec<Pattern>) -> Result<Self, PatternError> {
        if n == 0 || n > MAX_SLOTS {
            return Err(PatternError::BadFrameSize(n));
        }
        let mut seen: HashMap<u128, usize> = HashMap::with_capacity(patterns.len());
        for (index, p) in patterns.iter().enumerate() {
            if p.len() != n {
                return Err(PatternError::LengthMismatch { expected: n, found: p.len() });
            }
            if p.is_zero() {
                return Err(PatternError::ZeroPattern { index });
            }
            if let Some(&first) = seen.get(&p.bits) {
                return Err(PatternError::Duplicate { first, second: index });
            }
            seen.insert(p.bits, index);
        }
        Ok(Self { n, patterns, label: None })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// Frame size in slots.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of codewords (supported users).
    pub fn size(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn into_patterns(self) -> Vec<Pattern> {
        self.patterns
    }

    /// Parses the text format: a header line `n N`, then `N` lines of `n`
    /// binary characters. Lines starting with `#` and blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self, PatternError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) =
            lines.next().ok_or(PatternError::Format { line: 0, msg: "missing `n N` header".into() })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let parse_num = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| PatternError::Format { line: hline, msg: format!("expected integer, found {s:?}") })
        };
        if fields.len() != 2 {
            return Err(PatternError::Format { line: hline, msg: "header must be `n N`".into() });
        }
        let n = parse_num(fields[0])?;
        let count = parse_num(fields[1])?;
        let mut patterns = Vec::with_capacity(count);
        for (line, text) in lines {
            let p = parse_pattern(text, n).map_err(|e| PatternError::Format { line, msg: e.to_string() })?;
            patterns.push(p);
        }
        if patterns.len() != count {
            return Err(PatternError::Format {
                line: hline,
                msg: format!("header declares {count} patterns, found {}", patterns.len()),
            });
        }
        Codebook::new(n, patterns)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PatternError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| PatternError::Io { path: path.display().to_string(), msg: e.to_string() })?;
        Self::parse(&text)
    }

    /// Renders the text format, preceded by `header` lines as `#` comments.
    pub fn to_text(&self, header: &[String]) -> String {
        let mut out = String::with_capacity(self.patterns.len() * (self.n + 1) + 64);
        for h in header {
            out.push_str("# ");
            out.push_str(h);
            out.push('\n');
        }
        out.push_str(&format!("{} {}\n", self.n, self.patterns.len()));
        for p in &self.patterns {
            out.push_str(&p.to_string());
            out.push('\n');
        }
        out
    }
}

/// Column/row weight summary of a codebook.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightProfile {
    /// Weight of every pattern, in codebook order.
    pub column_weights: Vec<u32>,
    /// Number of patterns occupying each slot.
    pub row_weights: Vec<u32>,
    /// Largest support intersection between two distinct patterns.
    pub max_pairwise_intersection: u32,
}

impl WeightProfile {
    pub fn min_column_weight(&self) -> u32 {
        self.column_weights.iter().copied().min().unwrap_or(0)
    }

    pub fn max_column_weight(&self) -> u32 {
        self.column_weights.iter().copied().max().unwrap_or(0)
    }

    /// `Some(k)` when every pattern has weight `k`.
    pub fn uniform_column_weight(&self) -> Option<u32> {
        let k = *self.column_weights.first()?;
        self.column_weights.iter().all(|&w| w == k).then_some(k)
    }

    pub fn uniform_row_weight(&self) -> Option<u32> {
        let g = *self.row_weights.first()?;
        self.row_weights.iter().all(|&w| w == g).then_some(g)
    }
}

pub fn weight_profile(code: &Codebook) -> WeightProfile {
    let column_weights = code.patterns.iter().map(Pattern::weight).collect();
    let mut row_weights = vec![0u32; code.n];
    for p in &code.patterns {
        for s in p.support() {
            row_weights[s] += 1;
        }
    }
    let mut v = 0;
    for (i, p) in code.patterns.iter().enumerate() {
        for q in &code.patterns[i + 1..] {
            v = v.max(p.overlap(q));
        }
    }
    WeightProfile { column_weights, row_weights, max_pairwise_intersection: v }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pats(strs: &[&str]) -> Vec<Pattern> {
        strs.iter().map(|s| parse_pattern(s, s.len()).unwrap()).collect()
    }

    #[test]
    fn parse_examples() {
        let p = parse_pattern("111", 3).unwrap();
        assert_eq!(p.weight(), 3);
        let z = parse_pattern("000", 3).unwrap();
        assert!(z.is_zero());
        assert_eq!(z.weight(), 0);
        let q = parse_pattern("110", 3).unwrap();
        assert_eq!(q.support().collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(q.to_string(), "110");
    }

    #[test]
    fn parse_errors() {
        assert_eq!(parse_pattern("11", 3), Err(PatternError::LengthMismatch { expected: 3, found: 2 }));
        assert_eq!(parse_pattern("1101", 3), Err(PatternError::LengthMismatch { expected: 3, found: 4 }));
        assert_eq!(parse_pattern("1x0", 3), Err(PatternError::IllegalChar { ch: 'x', pos: 1 }));
        assert!(parse_pattern("", 0).is_err());
    }

    #[test]
    fn full_width_pattern() {
        let s = "1".repeat(128);
        let p = parse_pattern(&s, 128).unwrap();
        assert_eq!(p.len(), 128);
        assert_eq!(p.weight(), 128);
        assert_eq!(p.to_string(), s);
    }

    #[test]
    fn singleton_row_examples() {
        assert!(!has_singleton_row(&pats(&["010", "100", "110"])).unwrap());
        assert!(has_singleton_row(&pats(&["100"])).unwrap());
        assert!(!has_singleton_row(&pats(&["100", "010", "001", "111"])).unwrap());
        assert_eq!(has_singleton_row(&[]), Err(PatternError::Empty));
        assert!(has_singleton_row(&pats(&["10", "100"])).is_err());
    }

    #[test]
    fn codebook_rejects_zero_and_duplicates() {
        assert_eq!(Codebook::new(3, pats(&["100", "000"])), Err(PatternError::ZeroPattern { index: 1 }));
        assert_eq!(
            Codebook::new(3, pats(&["100", "010", "100"])),
            Err(PatternError::Duplicate { first: 0, second: 2 })
        );
        assert!(Codebook::new(3, pats(&["1000"])).is_err());
    }

    #[test]
    fn profile_examples() {
        let unit = Codebook::new(3, pats(&["100", "010", "001"])).unwrap();
        let wp = weight_profile(&unit);
        assert_eq!(wp.column_weights, vec![1, 1, 1]);
        assert_eq!(wp.row_weights, vec![1, 1, 1]);
        assert_eq!(wp.max_pairwise_intersection, 0);

        let two = Codebook::new(3, pats(&["110", "011"])).unwrap();
        let wp = weight_profile(&two);
        assert_eq!(wp.max_pairwise_intersection, 1);
        assert_eq!(wp.row_weights, vec![1, 2, 1]);
        assert_eq!(wp, weight_profile(&two));
    }

    #[test]
    fn text_format_roundtrip() {
        let text = "# a comment\n3 4\n100\n010\n\n001\n111\n";
        let code = Codebook::parse(text).unwrap();
        assert_eq!(code.size(), 4);
        let again = Codebook::parse(&code.to_text(&["hdr".into()])).unwrap();
        assert_eq!(again, code);
        assert!(Codebook::parse("3 2\n100\n").is_err());
        assert!(Codebook::parse("3 1\n10\n").is_err());
        assert!(Codebook::parse("").is_err());
    }

    #[test]
    fn lex_order_and_concat() {
        let a = parse_pattern("0011", 4).unwrap();
        let b = parse_pattern("0101", 4).unwrap();
        assert_eq!(a.lex_cmp(&b), Ordering::Less);
        assert_eq!(b.lex_cmp(&a), Ordering::Greater);
        let head = parse_pattern("100", 3).unwrap();
        let tail = parse_pattern("01", 2).unwrap();
        assert_eq!(head.concat(&tail).unwrap().to_string(), "10001");
    }
}
