//! Sets of non-negative integers stored as sorted, disjoint, non-adjacent
//! closed intervals.
//!
//! This is the substrate for the reachability sets of the transitive-closure
//! scheme: a node's reachable indexes are usually a handful of contiguous
//! runs, so the segment list stays far smaller than the covered set.

use std::fmt;

/// A set of `u64` values represented as canonical closed intervals.
///
/// Canonical form: segments are sorted, `lo <= hi`, and no two segments
/// overlap or touch (`hi + 1 < next.lo`). Every operation returns canonical
/// output, so equal sets compare equal structurally.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct IntervalSet {
    segs: Vec<(u64, u64)>,
}

impl IntervalSet {
    pub fn new() -> Self {
        IntervalSet { segs: Vec::new() }
    }

    /// The set containing exactly `[lo, hi]`.
    pub fn range(lo: u64, hi: u64) -> Self {
        assert!(lo <= hi, "interval bounds out of order");
        IntervalSet { segs: vec![(lo, hi)] }
    }

    pub fn singleton(x: u64) -> Self {
        IntervalSet { segs: vec![(x, x)] }
    }

    /// Builds a canonical set from arbitrary (possibly overlapping,
    /// unsorted) closed intervals.
    pub fn from_pairs<I: IntoIterator<Item = (u64, u64)>>(pairs: I) -> Self {
        let mut v: Vec<(u64, u64)> = pairs
            .into_iter()
            .inspect(|&(lo, hi)| assert!(lo <= hi, "interval bounds out of order"))
            .collect();
        v.sort_unstable();
        let mut segs: Vec<(u64, u64)> = Vec::with_capacity(v.len());
        for (lo, hi) in v {
            match segs.last_mut() {
                // coalesce overlapping or adjacent runs
                Some(last) if lo <= last.1.saturating_add(1) => {
                    last.1 = last.1.max(hi);
                }
                _ => segs.push((lo, hi)),
            }
        }
        IntervalSet { segs }
    }

    pub fn is_empty(&self) -> bool {
        self.segs.is_empty()
    }

    /// Number of segments (not covered integers).
    pub fn segment_count(&self) -> usize {
        self.segs.len()
    }

    pub fn segments(&self) -> &[(u64, u64)] {
        &self.segs
    }

    /// Number of integers covered.
    pub fn count(&self) -> u64 {
        self.segs.iter().map(|&(lo, hi)| hi - lo + 1).sum()
    }

    /// Membership test, `O(log segments)`.
    pub fn contains(&self, x: u64) -> bool {
        self.contains_cost(x).0
    }

    /// Membership test that also reports how many segment comparisons the
    /// binary search performed (used by the probe-cost instrumentation).
    pub fn contains_cost(&self, x: u64) -> (bool, u32) {
        let mut lo = 0usize;
        let mut hi = self.segs.len();
        let mut cost = 0u32;
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            cost += 1;
            let (a, b) = self.segs[mid];
            if x < a {
                hi = mid;
            } else if x > b {
                lo = mid + 1;
            } else {
                return (true, cost);
            }
        }
        (false, cost)
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        if self.is_empty() {
            return other.clone();
        }
        if other.is_empty() {
            return self.clone();
        }
        let mut segs: Vec<(u64, u64)> = Vec::with_capacity(self.segs.len() + other.segs.len());
        let mut a = self.segs.iter().peekable();
        let mut b = other.segs.iter().peekable();
        loop {
            let next = match (a.peek(), b.peek()) {
                (Some(&&x), Some(&&y)) => {
                    if x.0 <= y.0 {
                        a.next();
                        x
                    } else {
                        b.next();
                        y
                    }
                }
                (Some(&&x), None) => {
                    a.next();
                    x
                }
                (None, Some(&&y)) => {
                    b.next();
                    y
                }
                (None, None) => break,
            };
            match segs.last_mut() {
                Some(last) if next.0 <= last.1.saturating_add(1) => {
                    last.1 = last.1.max(next.1);
                }
                _ => segs.push(next),
            }
        }
        IntervalSet { segs }
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let mut segs = Vec::new();
        let (mut i, mut j) = (0usize, 0usize);
        while i < self.segs.len() && j < other.segs.len() {
            let (a_lo, a_hi) = self.segs[i];
            let (b_lo, b_hi) = other.segs[j];
            let lo = a_lo.max(b_lo);
            let hi = a_hi.min(b_hi);
            if lo <= hi {
                segs.push((lo, hi));
            }
            if a_hi <= b_hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet { segs }
    }

    /// Set difference `self \ other`.
    pub fn minus(&self, other: &IntervalSet) -> IntervalSet {
        if self.is_empty() || other.is_empty() {
            return self.clone();
        }
        let mut segs = Vec::new();
        let mut j = 0usize;
        for &(lo, hi) in &self.segs {
            let mut cur = lo;
            while j < other.segs.len() && other.segs[j].1 < cur {
                j += 1;
            }
            let mut k = j;
            loop {
                if k >= other.segs.len() || other.segs[k].0 > hi {
                    segs.push((cur, hi));
                    break;
                }
                let (b_lo, b_hi) = other.segs[k];
                if b_lo > cur {
                    segs.push((cur, b_lo - 1));
                }
                if b_hi >= hi {
                    break;
                }
                cur = b_hi + 1;
                k += 1;
                if cur > hi {
                    break;
                }
            }
        }
        IntervalSet { segs }
    }

    /// Ascending iterator over all covered integers.
    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.segs.iter().flat_map(|&(lo, hi)| lo..=hi)
    }

    /// Approximate heap footprint in bytes.
    pub fn approx_bytes(&self) -> usize {
        self.segs.capacity() * std::mem::size_of::<(u64, u64)>()
    }

    /// Releases allocation slack; merge calls this on long-lived sets.
    pub fn shrink_to_fit(&mut self) {
        self.segs.shrink_to_fit();
    }
}

impl fmt::Debug for IntervalSet {
    /// Prints `{[lo,hi],...}`, the form used in stats dumps and golden tests.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (lo, hi)) in self.segs.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "[{lo},{hi}]")?;
        }
        write!(f, "}}")
    }
}

impl FromIterator<u64> for IntervalSet {
    fn from_iter<I: IntoIterator<Item = u64>>(iter: I) -> Self {
        IntervalSet::from_pairs(iter.into_iter().map(|x| (x, x)))
    }
}
