//! Paths in the `x`-plane: straight segments and circular arcs, with a
//! planner that detours around branch points.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

use super::HyperellipticCurve;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Segment {
    Line { from: C64, to: C64 },
    /// Points `center + radius·e^{i(start + sweep·s)}`, `s ∈ [0, 1]`.
    Arc { center: C64, radius: f64, start: f64, sweep: f64 },
}

impl Segment {
    pub fn point(&self, s: f64) -> C64 {
        match *self {
            Segment::Line { from, to } => from + (to - from) * s,
            Segment::Arc { center, radius, start, sweep } => {
                center + C64::from_polar(radius, start + sweep * s)
            }
        }
    }

    /// `dx/ds`
    pub fn tangent(&self, s: f64) -> C64 {
        match *self {
            Segment::Line { from, to } => to - from,
            Segment::Arc { radius, start, sweep, .. } => {
                C64::new(0.0, sweep) * C64::from_polar(radius, start + sweep * s)
            }
        }
    }

    pub fn start(&self) -> C64 {
        self.point(0.0)
    }

    pub fn end(&self) -> C64 {
        match *self {
            Segment::Line { to, .. } => to,
            _ => self.point(1.0),
        }
    }

    pub fn reversed(&self) -> Segment {
        match *self {
            Segment::Line { from, to } => Segment::Line { from: to, to: from },
            Segment::Arc { center, radius, start, sweep } => Segment::Arc {
                center,
                radius,
                start: start + sweep,
                sweep: -sweep,
            },
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            Segment::Line { from, to } => (to - from).norm(),
            Segment::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    /// Euclidean distance from `p` to the segment.
    pub fn distance(&self, p: C64) -> f64 {
        match *self {
            Segment::Line { from, to } => {
                let d = to - from;
                let len2 = d.norm_sqr();
                if len2 == 0.0 {
                    return (p - from).norm();
                }
                let t = (((p - from) * d.conj()).re / len2).clamp(0.0, 1.0);
                (p - (from + d * t)).norm()
            }
            Segment::Arc { center, radius, start, sweep } => {
                let rel = p - center;
                let ang = rel.arg();
                // angle of p measured from the arc start in the sweep direction
                let offset = ((ang - start) * sweep.signum()).rem_euclid(TAU);
                if offset <= sweep.abs() {
                    (rel.norm() - radius).abs()
                } else {
                    (p - self.start()).norm().min((p - self.end()).norm())
                }
            }
        }
    }
}

/// Clearance for paths between `endpoints`: a tenth of the smallest gap
/// between branch points, and no more than half the distance from any
/// endpoint to the nearest branch point.
pub fn default_clearance(curve: &HyperellipticCurve, endpoints: &[C64]) -> f64 {
    let mut c = 0.1 * curve.min_branch_separation();
    if !c.is_finite() {
        c = 0.1 * curve.infinity_radius();
    }
    for &e in endpoints {
        c = c.min(0.5 * curve.nearest_branch(e).1);
    }
    c
}

/// A chain of segments together with the sheet at its first point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Path {
    start: C64,
    segments: Vec<Segment>,
    pub start_y: C64,
}

impl Path {
    /// The constant path at `start`.
    pub fn at(start: C64, start_y: C64) -> Path {
        Path {
            start,
            segments: Vec::new(),
            start_y,
        }
    }

    /// A straight path.
    pub fn line(from: C64, to: C64, start_y: C64) -> Path {
        let mut p = Path::at(from, start_y);
        p.push(Segment::Line { from, to });
        p
    }

    /// Straight polyline through `waypoints`.
    pub fn polyline(waypoints: &[C64], start_y: C64) -> Path {
        let mut p = Path::at(waypoints[0], start_y);
        for w in waypoints.windows(2) {
            p.push(Segment::Line { from: w[0], to: w[1] });
        }
        p
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn start(&self) -> C64 {
        self.start
    }

    pub fn end(&self) -> C64 {
        self.segments.last().map_or(self.start, |s| s.end())
    }

    pub fn length(&self) -> f64 {
        self.segments.iter().map(|s| s.length()).sum()
    }

    /// Append a segment; it must start where the path currently ends.
    pub fn push(&mut self, seg: Segment) {
        let gap = (seg.start() - self.end()).norm();
        assert!(
            gap <= 1e-12 * (1.0 + self.end().norm()),
            "segment does not continue the path (gap {gap:e})"
        );
        if seg.length() > 0.0 {
            self.segments.push(seg);
        }
    }

    /// Append another path's segments (its `start_y` is ignored).
    pub fn extend(&mut self, other: &Path) {
        for s in &other.segments {
            self.push(*s);
        }
    }

    /// The same route backwards, starting on sheet `end_y`.
    pub fn reversed(&self, end_y: C64) -> Path {
        Path {
            start: self.end(),
            segments: self.segments.iter().rev().map(|s| s.reversed()).collect(),
            start_y: end_y,
        }
    }

    /// Smallest distance from the path to any branch point, with its index.
    pub fn min_distance(&self, curve: &HyperellipticCurve) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, &b) in curve.branch_points().iter().enumerate() {
            let d = if self.segments.is_empty() {
                (self.start - b).norm()
            } else {
                self.segments.iter().map(|s| s.distance(b)).fold(f64::INFINITY, f64::min)
            };
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    pub fn check_clearance(&self, curve: &HyperellipticCurve, clearance: f64) -> Result<()> {
        let (index, distance) = self.min_distance(curve);
        if distance < clearance * (1.0 - 1e-9) {
            return Err(Error::ClearanceViolation { index, distance });
        }
        Ok(())
    }

    /// Route from `from` to `to`: straight where possible, otherwise around
    /// each obstructing branch point along an arc of radius `clearance`,
    /// passing on the side where the straight line already runs.
    pub fn plan(curve: &HyperellipticCurve, from: C64, to: C64, start_y: C64, clearance: f64) -> Path {
        let mut path = Path::at(from, start_y);
        path.plan_to(curve, to, clearance, &[]);
        path
    }

    /// Planner continuation from the current end; `skip` lists branch points
    /// that must not be detoured (used when a path ends on one).
    pub(crate) fn plan_to(&mut self, curve: &HyperellipticCurve, to: C64, clearance: f64, skip: &[usize]) {
        let from = self.end();
        let d = to - from;
        let len = d.norm();
        if len == 0.0 {
            return;
        }
        let dir = d / len;
        // (parameter along the line, signed offset, index)
        let mut hits: Vec<(f64, f64, usize)> = Vec::new();
        for (i, &b) in curve.branch_points().iter().enumerate() {
            if skip.contains(&i) {
                continue;
            }
            let rel = (b - from) * dir.conj();
            let (along, off) = (rel.re, rel.im);
            if off.abs() < clearance && along > -clearance && along < len + clearance {
                let half = (clearance * clearance - off * off).sqrt();
                if along - half > 0.0 && along + half < len {
                    hits.push((along, off, i));
                }
            }
        }
        hits.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (along, off, i) in hits {
            let b = curve.branch_points()[i];
            let half = (clearance * clearance - off * off).sqrt();
            let entry = from + dir * (along - half);
            let exit = from + dir * (along + half);
            self.push(Segment::Line { from: self.end(), to: entry });
            let a0 = (entry - b).arg();
            let a1 = (exit - b).arg();
            // branch point left of the line (off > 0): pass on the right,
            // which is counter-clockwise around it; otherwise clockwise
            let sweep = if off > 0.0 {
                (a1 - a0).rem_euclid(TAU)
            } else {
                -(a0 - a1).rem_euclid(TAU)
            };
            self.push(Segment::Arc { center: b, radius: clearance, start: a0, sweep });
        }
        self.push(Segment::Line { from: self.end(), to });
    }

    /// Out-and-back loop around branch point `index` that flips the sheet:
    /// approach to distance `radius`, one full turn, return.
    pub fn push_flip_loop(&mut self, curve: &HyperellipticCurve, index: usize, radius: f64) {
        let here = self.end();
        let b = curve.branch_points()[index];
        let dir = (here - b) / (here - b).norm();
        let touch = b + dir * radius;
        let before = self.segments.len();
        self.plan_to(curve, touch, radius, &[index]);
        let approach: Vec<Segment> = self.segments[before..].to_vec();
        self.push(Segment::Arc {
            center: b,
            radius,
            start: dir.arg(),
            sweep: TAU,
        });
        for s in approach.iter().rev() {
            self.push(s.reversed());
        }
    }

    /// Circle of radius `radius` about `center`, starting at angle 0.
    pub fn circle(center: C64, radius: f64, start_y: C64) -> Path {
        let mut p = Path::at(center + radius, start_y);
        p.push(Segment::Arc {
            center,
            radius,
            start: 0.0,
            sweep: 2.0 * PI,
        });
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Poly;

    fn curve() -> HyperellipticCurve {
        // branch points ±1, ±i
        HyperellipticCurve::new(Poly::from_real(&[1.0, 0.0, 0.0, 0.0, -1.0]), 1).unwrap()
    }

    #[test]
    fn arc_distance() {
        let a = Segment::Arc { center: C64::new(0.0, 0.0), radius: 1.0, start: 0.0, sweep: PI };
        assert!((a.distance(C64::new(0.0, 2.0)) - 1.0).abs() < 1e-15);
        assert!((a.distance(C64::new(0.0, -2.0)) - 5f64.sqrt()).abs() < 1e-15);
        let r = a.reversed();
        assert!((r.start() - C64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((r.distance(C64::new(0.0, 2.0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn planner_detours() {
        let c = curve();
        let from = C64::new(-3.0, 0.0);
        let to = C64::new(0.0, 0.0);
        let p = Path::plan(&c, from, to, C64::new(1.0, 0.0), 0.1);
        assert_eq!(p.segments().len(), 3);
        p.check_clearance(&c, 0.1).unwrap();
        assert!((p.end() - to).norm() < 1e-15);
        // exact hit: the detour goes to the left, i.e. clockwise, upper half plane
        if let Segment::Arc { sweep, .. } = p.segments()[1] {
            assert!(sweep < 0.0);
        } else {
            panic!("expected an arc");
        }
        assert!(p.segments()[1].point(0.5).im > 0.0);
        // slightly below the axis: pass below
        let p = Path::plan(&c, from - C64::new(0.0, 0.05), to - C64::new(0.0, 0.05), C64::new(1.0, 0.0), 0.1);
        p.check_clearance(&c, 0.1).unwrap();
        assert!(p.segments()[1].point(0.5).im < -0.05);
    }

    #[test]
    fn flip_loop_is_closed() {
        let c = curve();
        let mut p = Path::at(C64::new(0.5, 0.2), C64::new(1.0, 0.0));
        p.push_flip_loop(&c, 0, 0.1);
        assert!((p.end() - C64::new(0.5, 0.2)).norm() < 1e-14);
    }
}
