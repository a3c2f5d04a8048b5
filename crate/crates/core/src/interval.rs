use serde::{Deserialize, Serialize};

/// A closed interval `[lo, hi]`, possibly half-infinite. Empty when `lo >= hi`
/// (a degenerate interval of length zero carries no mass).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn below(x: f64) -> Self {
        Self { lo: f64::NEG_INFINITY, hi: x }
    }

    pub fn length(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }

    pub fn is_empty(&self) -> bool {
        !(self.lo < self.hi)
    }

    pub fn is_compact(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let r = Interval::new(self.lo.max(other.lo), self.hi.min(other.hi));
        (!r.is_empty()).then_some(r)
    }

    /// Intervals overlapping in more than a single point.
    pub fn overlaps(&self, other: &Interval) -> bool {
        self.intersect(other).is_some()
    }

    /// `self \ other` as at most two intervals.
    pub fn subtract(&self, other: &Interval) -> Vec<Interval> {
        if self.intersect(other).is_none() {
            return vec![*self];
        }
        let mut out = vec![];
        if self.lo < other.lo {
            out.push(Interval::new(self.lo, other.lo));
        }
        if other.hi < self.hi {
            out.push(Interval::new(other.hi, self.hi));
        }
        out
    }
}
