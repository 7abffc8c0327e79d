//! Closed subsets of the phase circle built from finitely many arcs.

use std::f64::consts::{PI, TAU};

/// Wraps an angle into `[−π, π)`.
pub fn wrap_angle(phi: f64) -> f64 {
    let w = (phi + PI).rem_euclid(TAU) - PI;
    // rem_euclid can round up to TAU for inputs just below a multiple.
    if w >= PI {
        w - TAU
    } else {
        w
    }
}

/// A closed union of arcs on the circle of circumference `2π`.
///
/// Stored canonically as sorted, pairwise disjoint closed segments of
/// `[−π, π]`. The points `−π` and `π` are identified, so an arc crossing the
/// seam is stored as two segments touching the ends of the window. The full
/// circle is the single segment `[−π, π]`; the empty set has no segments.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicIntervalSet {
    segments: Vec<(f64, f64)>,
}

impl CyclicIntervalSet {
    pub fn full() -> Self {
        Self {
            segments: vec![(-PI, PI)],
        }
    }

    pub fn empty() -> Self {
        Self {
            segments: Vec::new(),
        }
    }

    /// The arc traversed counter-clockwise from `start` to `end`.
    ///
    /// Arcs of length at least `2π` give the full circle; `end < start` gives
    /// the empty set.
    pub fn from_arc(start: f64, end: f64) -> Self {
        let len = end - start;
        if !(len >= 0.0) {
            return Self::empty();
        }
        if len >= TAU {
            return Self::full();
        }
        let s = wrap_angle(start);
        let e = s + len;
        if e <= PI {
            Self::canonical(vec![(s, e)])
        } else {
            Self::canonical(vec![(-PI, e - TAU), (s, PI)])
        }
    }

    fn canonical(mut segments: Vec<(f64, f64)>) -> Self {
        segments.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(segments.len());
        for (s, e) in segments {
            match merged.last_mut() {
                Some(last) if s <= last.1 => last.1 = last.1.max(e),
                _ => merged.push((s, e)),
            }
        }
        Self { segments: merged }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.segments.len() == 1 && self.segments[0] == (-PI, PI)
    }

    /// Canonical segments of `[−π, π]`.
    pub fn segments(&self) -> &[(f64, f64)] {
        &self.segments
    }

    pub fn measure(&self) -> f64 {
        self.segments.iter().map(|(s, e)| e - s).sum()
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        for &(a0, a1) in &self.segments {
            for &(b0, b1) in &other.segments {
                let s = a0.max(b0);
                let e = a1.min(b1);
                if s <= e {
                    out.push((s, e));
                }
            }
        }
        Self::canonical(out)
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut all = self.segments.clone();
        all.extend_from_slice(&other.segments);
        Self::canonical(all)
    }

    /// Membership with an absolute angular tolerance, honoring wrap-around.
    pub fn contains(&self, phi: f64, tol: f64) -> bool {
        let p = wrap_angle(phi);
        [p, p - TAU, p + TAU]
            .iter()
            .any(|&x| self.segments.iter().any(|&(s, e)| x >= s - tol && x <= e + tol))
    }

    /// Logical arcs `(start, end)` with segments joined across the seam, so
    /// `end` may exceed `π`. The full circle is `(−π, π)`.
    pub fn arcs(&self) -> Vec<(f64, f64)> {
        if self.is_full() || self.segments.len() < 2 {
            return self.segments.clone();
        }
        let first = self.segments[0];
        let last = *self.segments.last().unwrap();
        if first.0 == -PI && last.1 == PI {
            let mut arcs = self.segments[1..self.segments.len() - 1].to_vec();
            arcs.push((last.0, first.1 + TAU));
            arcs
        } else {
            self.segments.clone()
        }
    }

    /// Arc endpoints wrapped into `[−π, π)`, in arc order. Empty for the
    /// full circle, which has no boundary.
    pub fn endpoints(&self) -> Vec<f64> {
        if self.is_full() {
            return Vec::new();
        }
        self.arcs()
            .into_iter()
            .flat_map(|(s, e)| [wrap_angle(s), wrap_angle(e)])
            .collect()
    }
}
