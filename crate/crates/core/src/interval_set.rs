//! Canonical sets of half-open tick intervals.
//!
//! Invariants held by every `IntervalSet`:
//!   - intervals sorted by start
//!   - pairwise disjoint and non-touching (`[0,5)` and `[5,9)` collapse to `[0,9)`)
//!
//! so two sets covering the same points compare equal. All binary operations
//! are linear merges over the two sorted lists.

use serde::{Deserialize, Serialize};

use crate::model::{Interval, Tick};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(from = "Vec<Interval>", into = "Vec<Interval>")]
pub struct IntervalSet {
    intervals: Vec<Interval>,
}

impl IntervalSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_intervals(intervals: impl IntoIterator<Item = Interval>) -> Self {
        let mut v: Vec<Interval> = intervals.into_iter().collect();
        v.sort_unstable();
        Self::from_sorted_iter(v)
    }

    /// Coalesces intervals already sorted by start.
    pub fn from_sorted_iter(intervals: impl IntoIterator<Item = Interval>) -> Self {
        let mut out: Vec<Interval> = Vec::new();
        for iv in intervals {
            match out.last_mut() {
                Some(last) if iv.start() <= last.end() => {
                    debug_assert!(iv.start() >= last.start(), "input not sorted");
                    if iv.end() > last.end() {
                        *last = Interval::new_unchecked(last.start(), iv.end());
                    }
                }
                _ => out.push(iv),
            }
        }
        Self { intervals: out }
    }

    pub fn single(iv: Interval) -> Self {
        Self {
            intervals: vec![iv],
        }
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn as_slice(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Interval> {
        self.intervals.iter()
    }

    pub fn into_vec(self) -> Vec<Interval> {
        self.intervals
    }

    /// Total covered ticks.
    pub fn duration(&self) -> i64 {
        self.intervals.iter().map(Interval::len).sum()
    }

    pub fn span(&self) -> Option<Interval> {
        let first = self.intervals.first()?;
        let last = self.intervals.last()?;
        Some(Interval::new_unchecked(first.start(), last.end()))
    }

    /// Index of the first interval whose end lies after `t`.
    fn first_ending_after(&self, t: Tick) -> usize {
        self.intervals.partition_point(|iv| iv.end() <= t)
    }

    pub fn contains_tick(&self, t: Tick) -> bool {
        self.intervals
            .get(self.first_ending_after(t))
            .is_some_and(|iv| iv.contains_tick(t))
    }

    /// True if any covered tick lies in `probe`.
    pub fn intersects(&self, probe: &Interval) -> bool {
        self.intervals
            .get(self.first_ending_after(probe.start()))
            .is_some_and(|iv| iv.start() < probe.end())
    }

    /// Covered ticks inside `probe`.
    pub fn overlap_with(&self, probe: &Interval) -> i64 {
        self.intervals[self.first_ending_after(probe.start())..]
            .iter()
            .take_while(|iv| iv.start() < probe.end())
            .map(|iv| iv.overlap(probe))
            .sum()
    }

    pub fn is_subset(&self, other: &IntervalSet) -> bool {
        self.intervals.iter().all(|iv| {
            other
                .intervals
                .get(other.first_ending_after(iv.start()))
                .is_some_and(|o| o.contains(iv))
        })
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0, 0);
        let merged = std::iter::from_fn(|| {
            let next = match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) if x.start() <= y.start() => {
                    i += 1;
                    *x
                }
                (_, Some(y)) => {
                    j += 1;
                    *y
                }
                (Some(x), None) => {
                    i += 1;
                    *x
                }
                (None, None) => return None,
            };
            Some(next)
        });
        Self::from_sorted_iter(merged)
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            if let Some(x) = a[i].intersection(&b[j]) {
                out.push(x);
            }
            if a[i].end() <= b[j].end() {
                i += 1;
            } else {
                j += 1;
            }
        }
        // pieces from one operand are separated by gaps of the other, so
        // results never touch
        Self { intervals: out }
    }

    pub fn subtract(&self, other: &IntervalSet) -> IntervalSet {
        let b = &other.intervals;
        let mut out = Vec::new();
        let mut j = 0;
        for iv in &self.intervals {
            let mut cur = iv.start();
            while j < b.len() && b[j].end() <= cur {
                j += 1;
            }
            let mut k = j;
            while k < b.len() && b[k].start() < iv.end() {
                if b[k].start() > cur {
                    out.push(Interval::new_unchecked(cur, b[k].start()));
                }
                cur = cur.max(b[k].end());
                k += 1;
            }
            if cur < iv.end() {
                out.push(Interval::new_unchecked(cur, iv.end()));
            }
        }
        Self { intervals: out }
    }

    pub fn symmetric_difference(&self, other: &IntervalSet) -> IntervalSet {
        self.subtract(other).union(&other.subtract(self))
    }

    /// `domain ∖ self`. Parts of `self` outside `domain` are ignored.
    pub fn complement_within(&self, domain: &Interval) -> IntervalSet {
        IntervalSet::single(*domain).subtract(self)
    }

    pub fn clip(&self, domain: &Interval) -> IntervalSet {
        self.intersect(&IntervalSet::single(*domain))
    }

    /// Merges neighbours separated by a gap of at most `tolerance` ticks.
    pub fn close_gaps(&self, tolerance: i64) -> IntervalSet {
        let mut out: Vec<Interval> = Vec::with_capacity(self.intervals.len());
        for iv in &self.intervals {
            match out.last_mut() {
                Some(last) if iv.start() - last.end() <= tolerance => {
                    *last = Interval::new_unchecked(last.start(), iv.end());
                }
                _ => out.push(*iv),
            }
        }
        Self { intervals: out }
    }
}

impl From<Vec<Interval>> for IntervalSet {
    fn from(v: Vec<Interval>) -> Self {
        Self::from_intervals(v)
    }
}

impl From<IntervalSet> for Vec<Interval> {
    fn from(s: IntervalSet) -> Self {
        s.intervals
    }
}

impl FromIterator<Interval> for IntervalSet {
    fn from_iter<I: IntoIterator<Item = Interval>>(iter: I) -> Self {
        Self::from_intervals(iter)
    }
}

impl<'a> IntoIterator for &'a IntervalSet {
    type Item = &'a Interval;
    type IntoIter = std::slice::Iter<'a, Interval>;
    fn into_iter(self) -> Self::IntoIter {
        self.intervals.iter()
    }
}
