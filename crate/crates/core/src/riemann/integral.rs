//! Contour integrals along paths and from infinity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::C64;

use super::continuation::{sqrt_nearest, Track};
use super::differential::DifferentialSet;
use super::path::{default_clearance, Path};
use super::quadrature::{integrate, QuadratureSettings};
use super::HyperellipticCurve;

/// Quadrature node of a finished path integral: position, weight including
/// `dx/ds`, and the continued `y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrozenNode {
    pub x: C64,
    pub w: C64,
    pub y: C64,
}

/// Compensated complex sum.
#[derive(Clone, Copy, Default)]
pub(crate) struct Accumulator {
    sum: C64,
    comp: C64,
}

impl Accumulator {
    pub(crate) fn add(&mut self, v: C64) {
        self.sum.re = two_sum(self.sum.re, v.re, &mut self.comp.re);
        self.sum.im = two_sum(self.sum.im, v.im, &mut self.comp.im);
    }

    pub(crate) fn value(&self) -> C64 {
        self.sum + self.comp
    }
}

fn two_sum(s: f64, v: f64, comp: &mut f64) -> f64 {
    let t = s + v;
    if s.abs() >= v.abs() {
        *comp += (s - t) + v;
    } else {
        *comp += (v - t) + s;
    }
    t
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PathIntegral {
    pub value: Vec<C64>,
    pub error: f64,
    pub nodes: Vec<FrozenNode>,
    pub end_x: C64,
    pub end_y: C64,
}

impl PathIntegral {
    /// Re-evaluate `set` on the stored rule for the curve `y² = f(x)`,
    /// choosing at every node the root nearest the stored `y`.
    pub fn frozen(&self, f: &Poly, set: &DifferentialSet) -> Vec<C64> {
        let dim = set.dim();
        let mut acc = vec![Accumulator::default(); dim];
        let mut buf = vec![C64::new(0.0, 0.0); dim];
        for n in &self.nodes {
            let y = sqrt_nearest(f.eval(n.x), n.y);
            set.eval(n.x, y, &mut buf);
            for k in 0..dim {
                acc[k].add(buf[k] * n.w);
            }
        }
        acc.iter().map(|a| a.value()).collect()
    }

    /// End sheet on the curve `y² = f(x)` matched to the stored one.
    pub fn frozen_end_y(&self, f: &Poly) -> C64 {
        sqrt_nearest(f.eval(self.end_x), self.end_y)
    }
}

/// `y` at the end of `path`, by continuation from `path.start_y`.
pub fn continue_y(curve: &HyperellipticCurve, path: &Path) -> Result<C64> {
    let mut y = path.start_y;
    for seg in path.segments() {
        let track = Track::build(|s| curve.eval(seg.point(s)), 0.0, 1.0, y)?;
        y = track.end();
    }
    Ok(y)
}

/// Integrate along `path` on the curve `y² = radicand(x)`; `integrand(x, y,
/// out)` writes the values to be multiplied by `dx`. Returns the frozen rule,
/// the end sheet and the summed error estimate.
pub fn integrate_path_with<R, I>(
    radicand: R,
    path: &Path,
    dim: usize,
    integrand: I,
    settings: &QuadratureSettings,
) -> Result<(Vec<FrozenNode>, C64, f64)>
where
    R: Fn(C64) -> C64,
    I: Fn(C64, C64, &mut [C64]),
{
    let mut y = path.start_y;
    let mut nodes = Vec::new();
    let mut error = 0.0;
    for seg in path.segments() {
        let track = Track::build(|s| radicand(seg.point(s)), 0.0, 1.0, y)?;
        let r = integrate(
            |s, out| {
                let x = seg.point(s);
                integrand(x, track.select(s, radicand(x)), out);
                let dx = seg.tangent(s);
                for o in out.iter_mut() {
                    *o *= dx;
                }
                Ok(())
            },
            0.0,
            1.0,
            dim,
            settings,
        )?;
        error += r.error;
        for m in &r.mesh {
            let x = seg.point(m.s);
            nodes.push(FrozenNode {
                x,
                w: seg.tangent(m.s) * m.w,
                y: track.select(m.s, radicand(x)),
            });
        }
        y = track.end();
    }
    Ok((nodes, y, error))
}

/// Integrate every differential in `set` along `path`.
pub fn integrate_along(
    curve: &HyperellipticCurve,
    path: &Path,
    set: &DifferentialSet,
    settings: &QuadratureSettings,
) -> Result<PathIntegral> {
    let (nodes, end_y, error) = integrate_path_with(
        |x| curve.eval(x),
        path,
        set.dim(),
        |x, y, out| set.eval(x, y, out),
        settings,
    )?;
    let mut out = PathIntegral {
        value: Vec::new(),
        error,
        nodes,
        end_x: path.end(),
        end_y,
    };
    out.value = out.frozen(curve.f(), set);
    Ok(out)
}

/// `∫ x^{g-k} dx / y` along `path`.
pub fn integrate_differential(
    curve: &HyperellipticCurve,
    k: usize,
    path: &Path,
    settings: &QuadratureSettings,
) -> Result<C64> {
    if k == 0 || k > curve.genus() {
        return Err(Error::InvalidArgument(format!("differential index {k} out of range")));
    }
    path.check_clearance(curve, 0.0)?;
    let set = DifferentialSet::single(curve.genus(), k);
    Ok(integrate_along(curve, path, &set, settings)?.value[0])
}

/// Integral from a point at infinity to `x_r` on the positive real axis,
/// computed in the chart at infinity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TailIntegral {
    pub value: Vec<C64>,
    pub error: f64,
    /// `(t, weight, ỹ)` for each node of the rule.
    pub nodes: Vec<(f64, f64, C64)>,
    pub x_r: f64,
    pub y_r: C64,
    pub inf_sheet: i8,
    degree: usize,
    genus: usize,
}

fn chart_radicand(ft: &Poly, odd: bool, t: f64) -> C64 {
    let arg = if odd { t * t } else { t };
    ft.eval(C64::new(arg, 0.0))
}

fn y_from_chart(ytil: C64, x_r: f64, genus: usize, odd: bool) -> C64 {
    if odd {
        ytil * x_r.powf(genus as f64 + 0.5)
    } else {
        ytil * x_r.powi(genus as i32 + 1)
    }
}

impl TailIntegral {
    pub fn frozen(&self, f: &Poly, set: &DifferentialSet) -> Result<Vec<C64>> {
        let odd = self.degree % 2 == 1;
        let form = set.tail_form(self.genus, odd)?;
        let ft = f.reversed(self.degree);
        let dim = set.dim();
        let mut acc = vec![Accumulator::default(); dim];
        let mut buf = vec![C64::new(0.0, 0.0); dim];
        for &(t, w, yt) in &self.nodes {
            let ytil = sqrt_nearest(chart_radicand(&ft, odd, t), yt);
            form.eval(t, ytil, &mut buf);
            for k in 0..dim {
                acc[k].add(buf[k] * w);
            }
        }
        Ok(acc.iter().map(|a| a.value()).collect())
    }

    /// `y` at `x_r` on the perturbed curve, on the matched sheet.
    pub fn frozen_y_r(&self, f: &Poly) -> C64 {
        sqrt_nearest(f.eval(C64::new(self.x_r, 0.0)), self.y_r)
    }
}

/// Tail from infinity (sheet `inf_sheet` = ±1 for even degree) to
/// `x_r = curve.infinity_radius()`.
pub fn tail_integral(
    curve: &HyperellipticCurve,
    set: &DifferentialSet,
    inf_sheet: i8,
    settings: &QuadratureSettings,
) -> Result<TailIntegral> {
    let odd = curve.is_odd();
    let degree = curve.degree();
    let genus = curve.genus();
    let form = set.tail_form(genus, odd)?;
    let ft = curve.f().reversed(degree);
    let x_r = curve.infinity_radius();
    let t_r = if odd { 1.0 / x_r.sqrt() } else { 1.0 / x_r };
    let sign = if odd || inf_sheet >= 0 { 1.0 } else { -1.0 };
    let y0 = curve.leading().sqrt() * sign;
    let track = Track::build(|t| chart_radicand(&ft, odd, t), 0.0, t_r, y0)?;
    let r = integrate(
        |t, out| {
            let ytil = track.select(t, chart_radicand(&ft, odd, t));
            form.eval(t, ytil, out);
            Ok(())
        },
        0.0,
        t_r,
        set.dim(),
        settings,
    )?;
    let nodes = r
        .mesh
        .iter()
        .map(|m| (m.s, m.w, track.select(m.s, chart_radicand(&ft, odd, m.s))))
        .collect();
    let mut out = TailIntegral {
        value: Vec::new(),
        error: r.error,
        nodes,
        x_r,
        y_r: y_from_chart(track.end(), x_r, genus, odd),
        inf_sheet: if odd { 0 } else { sign as i8 },
        degree,
        genus,
    };
    out.value = out.frozen(curve.f(), set)?;
    Ok(out)
}

/// Route from `(from, from_y)` to `(x, y)`: planned path, followed by a loop
/// around the nearest branch point if continuation arrives on the other sheet.
pub fn route(curve: &HyperellipticCurve, from: C64, from_y: C64, x: C64, y: C64) -> Result<Path> {
    curve.check_off_branch(x)?;
    let clearance = default_clearance(curve, &[from, x]);
    let mut path = Path::plan(curve, from, x, from_y, clearance);
    let arrived = continue_y(curve, &path)?;
    if (arrived + y).norm() < (arrived - y).norm() {
        let (index, _) = curve.nearest_branch(x);
        path.push_flip_loop(curve, index, clearance);
    }
    Ok(path)
}

/// `∫ x^{g-k} dx / y` from the point at infinity on sheet `inf_sheet` to
/// `(x, y)`.
pub fn integrate_to_infinity(
    curve: &HyperellipticCurve,
    k: usize,
    x: C64,
    y: C64,
    inf_sheet: i8,
    settings: &QuadratureSettings,
) -> Result<C64> {
    if k == 0 || k > curve.genus() {
        return Err(Error::InvalidArgument(format!("differential index {k} out of range")));
    }
    let set = DifferentialSet::single(curve.genus(), k);
    let tail = tail_integral(curve, &set, inf_sheet, settings)?;
    let path = route(curve, C64::new(tail.x_r, 0.0), tail.y_r, x, y)?;
    let finite = integrate_along(curve, &path, &set, settings)?;
    if (finite.end_y - y).norm() > 1e-6 * y.norm().max(1e-300) {
        return Err(Error::LostTrack { x: format!("{x}") });
    }
    Ok(tail.value[0] + finite.value[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riemann::Segment;

    fn quartic() -> HyperellipticCurve {
        HyperellipticCurve::new(Poly::from_real(&[1.0, 0.0, 0.0, 0.0, -1.0]), 1).unwrap()
    }

    #[test]
    fn monodromy() {
        let c = quartic();
        let y0 = c.y_near(C64::new(1.5, 0.0), C64::new(0.0, 1.0));
        let one = Path::circle(C64::new(1.0, 0.0), 0.5, y0);
        assert!((continue_y(&c, &one).unwrap() + y0).norm() < 1e-12);
        let mut two = Path::at(C64::new(1.5, 0.0), y0);
        two.push(Segment::Arc { center: C64::new(0.0, 0.0), radius: 1.5, start: 0.0, sweep: std::f64::consts::PI });
        two.push(Segment::Arc { center: C64::new(0.0, 0.0), radius: 1.5, start: std::f64::consts::PI, sweep: -std::f64::consts::PI });
        assert!((continue_y(&c, &two).unwrap() - y0).norm() < 1e-12);
    }

    #[test]
    fn reversed_path_negates() {
        let c = quartic();
        let s = QuadratureSettings::default();
        let a = C64::new(0.1, 0.3);
        let b = C64::new(-0.4, 1.6);
        let p = Path::plan(&c, a, b, c.y_near(a, C64::new(1.0, 0.0)), 0.1);
        let fwd = integrate_along(&c, &p, &DifferentialSet::holomorphic(1), &s).unwrap();
        let back = p.reversed(fwd.end_y);
        let bwd = integrate_along(&c, &back, &DifferentialSet::holomorphic(1), &s).unwrap();
        assert!((fwd.value[0] + bwd.value[0]).norm() < 1e-12);
    }

    #[test]
    fn involution_antisymmetry_at_infinity() {
        let c = quartic();
        let s = QuadratureSettings::default();
        let x = C64::new(0.3, 0.2);
        let y = c.y_near(x, C64::new(1.0, 0.0));
        let plus = integrate_to_infinity(&c, 1, x, y, 1, &s).unwrap();
        let minus = integrate_to_infinity(&c, 1, x, -y, -1, &s).unwrap();
        assert!((plus + minus).norm() < 1e-12);
    }
}
