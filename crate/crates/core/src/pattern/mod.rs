//! Customer-visit patterns: mirror-canonical sequences mined from local minima.

mod pool;

pub use pool::{PatternPool, PoolParams, PoolRow};

use crate::model::Solution;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PatternError {
    #[error("pattern contains the depot")]
    Depot,
    #[error("customer {0} repeated in pattern")]
    Repeated(usize),
    #[error("pattern length {len} outside {min}..={max}")]
    Length { len: usize, min: usize, max: usize },
    #[error("malformed pattern dump at line {line}: {msg}")]
    Dump { line: usize, msg: String },
}

/// A contiguous customer sequence, stored in the lexicographically smaller of
/// its two orientations so that mirrored sequences compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern(Vec<usize>);

impl Pattern {
    /// Canonical form of `raw` with validation of depot, repeats and length bounds.
    pub fn new(raw: &[usize], min_len: usize, max_len: usize) -> Result<Self, PatternError> {
        if raw.len() < min_len || raw.len() > max_len {
            return Err(PatternError::Length { len: raw.len(), min: min_len, max: max_len });
        }
        if raw.contains(&0) {
            return Err(PatternError::Depot);
        }
        for (i, &c) in raw.iter().enumerate() {
            if raw[i + 1..].contains(&c) {
                return Err(PatternError::Repeated(c));
            }
        }
        Ok(Self::from_window(raw))
    }

    /// Canonicalizes a window already known to be a valid route piece.
    pub(crate) fn from_window(raw: &[usize]) -> Self {
        if reversed_is_smaller(raw) {
            Pattern(raw.iter().rev().copied().collect())
        } else {
            Pattern(raw.to_vec())
        }
    }

    pub fn seq(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::borrow::Borrow<[usize]> for Pattern {
    fn borrow(&self) -> &[usize] {
        &self.0
    }
}

impl std::fmt::Display for Pattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

fn reversed_is_smaller(raw: &[usize]) -> bool {
    raw.iter().rev().lt(raw.iter())
}

/// True iff the pattern or its mirror appears contiguously in some route.
pub fn contains_pattern(sol: &Solution, p: &Pattern) -> bool {
    let seq = p.seq();
    if seq.is_empty() {
        return true;
    }
    for route in sol.routes() {
        let cs = route.customers();
        let Some(start) = cs.iter().position(|&c| c == seq[0]) else { continue };
        let fwd = cs.len() >= start + seq.len() && cs[start..start + seq.len()] == *seq;
        let bwd = start + 1 >= seq.len() && cs[start + 1 - seq.len()..=start].iter().rev().eq(seq.iter());
        return fwd || bwd;
    }
    false
}
