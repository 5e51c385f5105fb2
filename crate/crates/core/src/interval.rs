//! Half-open interval sets and general real intervals.
//!
//! Piecewise-constant probabilities are defined over [`IntervalSet`]s, whose
//! members are half-open `[start, end)`. Balls and their images under affine
//! maps are represented by [`Span`], which tracks closedness of each end so
//! that infima over open Bowen balls and closed one-step balls come out exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-open interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfOpen {
    pub start: f64,
    pub end: f64,
}

impl HalfOpen {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !(start.is_finite() && end.is_finite()) || start >= end {
            return Err(Error::param(format!(
                "interval [{start}, {end}) must be finite and nonempty"
            )));
        }
        Ok(HalfOpen { start, end })
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.start <= x && x < self.end
    }

    /// Whether this interval shares at least one point with `span`.
    pub fn meets(&self, span: &Span) -> bool {
        let as_span = Span {
            lo: self.start,
            hi: self.end,
            lo_closed: true,
            hi_closed: false,
        };
        as_span.intersect(span).is_some()
    }
}

/// Finite union of disjoint half-open intervals, sorted by start.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct IntervalSet {
    intervals: Vec<HalfOpen>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet::default()
    }

    /// Builds a set from `[start, end)` pairs. Pairs may come in any order but
    /// must not overlap; adjacent intervals are kept separate.
    pub fn new(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut intervals = pairs
            .into_iter()
            .map(|(a, b)| HalfOpen::new(a, b))
            .collect::<Result<Vec<_>>>()?;
        intervals.sort_by(|a, b| a.start.total_cmp(&b.start));
        for pair in intervals.windows(2) {
            if pair[1].start < pair[0].end {
                return Err(Error::param(format!(
                    "intervals [{}, {}) and [{}, {}) overlap",
                    pair[0].start, pair[0].end, pair[1].start, pair[1].end
                )));
            }
        }
        Ok(IntervalSet { intervals })
    }

    pub fn intervals(&self) -> &[HalfOpen] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        // Sorted and disjoint: the only candidate is the last interval starting at or before x.
        let idx = self.intervals.partition_point(|iv| iv.start <= x);
        idx > 0 && self.intervals[idx - 1].contains(x)
    }

    /// Endpoints of every member interval; the boundary of the set is a subset.
    pub fn endpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.intervals.iter().flat_map(|iv| [iv.start, iv.end])
    }

    pub fn meets(&self, span: &Span) -> bool {
        self.intervals.iter().any(|iv| iv.meets(span))
    }

    /// Whether every point of `span` lies in the set.
    pub fn covers(&self, span: &Span) -> bool {
        // Everything in the span strictly left of `cursor` is covered.
        let mut cursor = span.lo;
        for iv in &self.intervals {
            if iv.end <= cursor {
                continue;
            }
            if iv.start > cursor {
                return false;
            }
            if iv.end > span.hi || (iv.end == span.hi && !span.hi_closed) {
                return true;
            }
            cursor = iv.end;
        }
        false
    }
}

impl TryFrom<Vec<(f64, f64)>> for IntervalSet {
    type Error = Error;

    fn try_from(pairs: Vec<(f64, f64)>) -> Result<Self> {
        IntervalSet::new(pairs)
    }
}

impl From<IntervalSet> for Vec<(f64, f64)> {
    fn from(set: IntervalSet) -> Self {
        set.intervals.iter().map(|iv| (iv.start, iv.end)).collect()
    }
}

/// Nonempty real interval with independently open or closed ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Span {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Span {
            lo,
            hi,
            lo_closed: true,
            hi_closed: true,
        }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Span {
            lo,
            hi,
            lo_closed: false,
            hi_closed: false,
        }
    }

    pub fn point(x: f64) -> Self {
        Span::closed(x, x)
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }

    pub fn intersect(&self, other: &Span) -> Option<Span> {
        let (lo, lo_closed) = match self.lo.total_cmp(&other.lo) {
            std::cmp::Ordering::Greater => (self.lo, self.lo_closed),
            std::cmp::Ordering::Less => (other.lo, other.lo_closed),
            std::cmp::Ordering::Equal => (self.lo, self.lo_closed && other.lo_closed),
        };
        let (hi, hi_closed) = match self.hi.total_cmp(&other.hi) {
            std::cmp::Ordering::Less => (self.hi, self.hi_closed),
            std::cmp::Ordering::Greater => (other.hi, other.hi_closed),
            std::cmp::Ordering::Equal => (self.hi, self.hi_closed && other.hi_closed),
        };
        let span = Span {
            lo,
            hi,
            lo_closed,
            hi_closed,
        };
        (!span.is_empty()).then_some(span)
    }

    /// Image under `x ↦ slope·x + intercept`.
    pub fn affine_image(&self, slope: f64, intercept: f64) -> Span {
        if slope == 0.0 {
            return Span::point(intercept);
        }
        let a = slope * self.lo + intercept;
        let b = slope * self.hi + intercept;
        if slope > 0.0 {
            Span {
                lo: a,
                hi: b,
                lo_closed: self.lo_closed,
                hi_closed: self.hi_closed,
            }
        } else {
            Span {
                lo: b,
                hi: a,
                lo_closed: self.hi_closed,
                hi_closed: self.lo_closed,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_overlap_and_sorts() {
        assert!(IntervalSet::new([(0.0, 0.5), (0.4, 0.9)]).is_err());
        let set = IntervalSet::new([(0.6, 0.9), (0.0, 0.5)]).unwrap();
        assert_eq!(set.intervals()[0].start, 0.0);
        assert!(set.contains(0.0));
        assert!(!set.contains(0.5));
        assert!(set.contains(0.6));
        assert!(!set.contains(0.9));
        assert!(IntervalSet::new([(0.5, 0.5)]).is_err());
    }

    #[test]
    fn half_open_meets_span_boundaries() {
        let iv = HalfOpen::new(0.0, 0.5).unwrap();
        assert!(!iv.meets(&Span::closed(0.5, 0.7)));
        assert!(iv.meets(&Span::closed(0.4, 0.7)));
        assert!(!iv.meets(&Span::open(-0.2, 0.0)));
        assert!(iv.meets(&Span::closed(-0.2, 0.0)));
        assert!(iv.meets(&Span::point(0.0)));
    }

    #[test]
    fn covers_handles_gaps_and_ends() {
        let set = IntervalSet::new([(0.0, 0.5), (0.5, 1.0)]).unwrap();
        assert!(set.covers(&Span::closed(0.1, 0.9)));
        assert!(set.covers(&Span::open(0.0, 1.0)));
        assert!(!set.covers(&Span::closed(0.5, 1.0)));
        assert!(set.covers(&Span::closed(0.0, 0.99)));
        let gappy = IntervalSet::new([(0.0, 0.4), (0.5, 1.0)]).unwrap();
        assert!(!gappy.covers(&Span::closed(0.3, 0.6)));
        assert!(gappy.covers(&Span::closed(0.5, 0.6)));
        assert!(!gappy.covers(&Span::open(0.39, 0.41)));
        assert!(!IntervalSet::empty().covers(&Span::point(0.3)));
    }

    #[test]
    fn affine_image_flips_for_negative_slope() {
        let span = Span {
            lo: 0.0,
            hi: 1.0,
            lo_closed: true,
            hi_closed: false,
        };
        let img = span.affine_image(-2.0, 1.0);
        assert_eq!((img.lo, img.hi), (-1.0, 1.0));
        assert!(!img.lo_closed && img.hi_closed);
        assert_eq!(span.affine_image(0.0, 0.3), Span::point(0.3));
    }

    #[test]
    fn serde_roundtrip_via_pairs() {
        let set: IntervalSet = toml::from_str::<std::collections::BTreeMap<String, IntervalSet>>(
            "a = [[0.0, 0.5], [0.75, 1.0]]",
        )
        .unwrap()
        .remove("a")
        .unwrap();
        assert_eq!(set.intervals().len(), 2);
    }
}
