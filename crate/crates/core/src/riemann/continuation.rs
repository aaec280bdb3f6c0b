//! Analytic continuation of `sqrt(F)` along a parametrized curve.

use crate::error::{Error, Result};
use crate::C64;

use super::LOST_TRACK;

/// The square root of `radicand` nearest to `near`.
pub fn sqrt_nearest(radicand: C64, near: C64) -> C64 {
    let r = radicand.sqrt();
    if (r - near).norm_sqr() <= (r + near).norm_sqr() {
        r
    } else {
        -r
    }
}

/// Tracked values of `sqrt(radicand(s))` on an interval of the parameter.
///
/// Consecutive samples satisfy `|Δy| ≤ 0.3 |y|`, so any value in between is
/// identified unambiguously by picking the root nearest to the linear
/// interpolant.
#[derive(Clone, Debug)]
pub struct Track {
    s: Vec<f64>,
    y: Vec<C64>,
}

const MAX_RELATIVE_STEP: f64 = 0.3;

impl Track {
    pub fn build<R>(radicand: R, s0: f64, s1: f64, y0: C64) -> Result<Track>
    where
        R: Fn(f64) -> C64,
    {
        let mut s = vec![s0];
        let mut y = vec![y0];
        if s0 == s1 {
            return Ok(Track { s, y });
        }
        let full = s1 - s0;
        let mut ds = full / 16.0;
        let mut cur_s = s0;
        let mut cur_y = y0;
        let min_step = full.abs() * 1e-14;
        while (s1 - cur_s) * full.signum() > 0.0 {
            if (cur_s + ds - s1) * full.signum() > 0.0 {
                ds = s1 - cur_s;
            }
            let next_s = if (cur_s + ds - s1).abs() <= min_step { s1 } else { cur_s + ds };
            let r = radicand(next_s).sqrt();
            let (d_plus, d_minus) = ((r - cur_y).norm(), (r + cur_y).norm());
            let cand = if d_plus <= d_minus { r } else { -r };
            let ambiguous = (d_plus - d_minus).abs() <= LOST_TRACK * (r.norm() + cur_y.norm());
            let ok = (cand - cur_y).norm() <= MAX_RELATIVE_STEP * cur_y.norm() && !ambiguous;
            if ok {
                cur_s = next_s;
                cur_y = cand;
                s.push(cur_s);
                y.push(cur_y);
                if (ds * 2.0).abs() <= (full / 16.0).abs() {
                    ds *= 2.0;
                }
            } else {
                ds *= 0.5;
                if ds.abs() < min_step || cur_y.norm() == 0.0 {
                    return Err(Error::LostTrack {
                        x: format!("parameter {cur_s}"),
                    });
                }
            }
        }
        Ok(Track { s, y })
    }

    pub fn start(&self) -> C64 {
        self.y[0]
    }

    pub fn end(&self) -> C64 {
        *self.y.last().expect("track is never empty")
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// Interpolated track value at `s` (within the tracked interval).
    pub fn guess(&self, s: f64) -> C64 {
        let n = self.s.len();
        if n == 1 {
            return self.y[0];
        }
        let increasing = self.s[n - 1] > self.s[0];
        let idx = if increasing {
            self.s.partition_point(|&v| v <= s)
        } else {
            self.s.partition_point(|&v| v >= s)
        };
        let i = idx.clamp(1, n - 1);
        let (sa, sb) = (self.s[i - 1], self.s[i]);
        let lam = ((s - sa) / (sb - sa)).clamp(0.0, 1.0);
        self.y[i - 1] + (self.y[i] - self.y[i - 1]) * lam
    }

    /// The root of `radicand` (the value at `s`) on this track.
    pub fn select(&self, s: f64, radicand: C64) -> C64 {
        sqrt_nearest(radicand, self.guess(s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn loop_around_one_root_flips() {
        // sqrt(x) around the unit circle
        let rad = |s: f64| C64::from_polar(1.0, 2.0 * PI * s);
        let t = Track::build(rad, 0.0, 1.0, C64::new(1.0, 0.0)).unwrap();
        assert!((t.end() + C64::new(1.0, 0.0)).norm() < 1e-12);
        let mid = t.select(0.5, rad(0.5));
        assert!((mid - C64::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn loop_around_two_roots_returns() {
        let rad = |s: f64| {
            let x = C64::from_polar(2.0, 2.0 * PI * s);
            (x - 1.0) * (x + 1.0)
        };
        let y0 = C64::new(3.0f64.sqrt(), 0.0);
        let t = Track::build(rad, 0.0, 1.0, y0).unwrap();
        assert!((t.end() - y0).norm() < 1e-12);
    }

    #[test]
    fn backwards_parameter() {
        let rad = |s: f64| C64::from_polar(1.0, 2.0 * PI * s);
        let t = Track::build(rad, 1.0, 0.0, C64::new(1.0, 0.0)).unwrap();
        assert!((t.end() + C64::new(1.0, 0.0)).norm() < 1e-12);
    }
}
