//! Periods of cycles encircling a pair of branch points.
//!
//! The cycle around `b_i, b_j` is twice the integral from `b_i` to `b_j`.
//! Straight pairs use `x = mid + half·cos θ`, which removes both endpoint
//! square-root singularities at once. Pairs whose segment is blocked use a
//! route in the normalized coordinate `ζ = (x - b_i)/(b_j - b_i)` with
//! `ζ = ρ s²` end pieces. Both rules are kept so that the period of a
//! slightly perturbed curve can be evaluated on exactly the same nodes.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::C64;

use super::continuation::{sqrt_nearest, Track};
use super::differential::DifferentialSet;
use super::integral::{integrate_path_with, tail_integral, Accumulator, FrozenNode, TailIntegral};
use super::path::Path;
use super::quadrature::{integrate, QuadratureSettings};
use super::HyperellipticCurve;

#[derive(Clone, Debug, Serialize, Deserialize)]
enum Rule {
    /// `(θ, weight, r)` with `y = i·half·sin θ·r`.
    Straight { nodes: Vec<(f64, f64, C64)> },
    /// End pieces `(s, weight, q)`; middle nodes in `ζ`.
    Detour {
        rho: f64,
        start: Vec<(f64, f64, C64)>,
        middle: Vec<FrozenNode>,
        end: Vec<(f64, f64, C64)>,
    },
    /// Odd degree: from `b_i` out to the handover radius in `ζ = (x - b_i)
    /// / (x_r - b_i)`, then the tail to the point at infinity.
    Infinity {
        rho: f64,
        start: Vec<(f64, f64, C64)>,
        middle: Vec<FrozenNode>,
        tail: TailIntegral,
        tail_sign: f64,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairPeriod {
    pub i: usize,
    pub j: usize,
    pub value: Vec<C64>,
    pub error: f64,
    rule: Rule,
}

fn two_deflations(f: &Poly, a: C64, b: C64) -> Poly {
    f.deflate(a).deflate(b)
}

/// Clearance for pair periods: a tenth of the smallest branch-point gap.
fn pair_clearance(curve: &HyperellipticCurve) -> f64 {
    0.1 * curve.min_branch_separation()
}

/// Period of `set` over the cycle around branch points `i` and `j`, along
/// the straight segment.
pub fn branch_pair_period(
    curve: &HyperellipticCurve,
    i: usize,
    j: usize,
    set: &DifferentialSet,
    settings: &QuadratureSettings,
) -> Result<PairPeriod> {
    let bp = curve.branch_points();
    if i == j || i >= bp.len() || j >= bp.len() {
        return Err(Error::InvalidArgument(format!("bad branch pair ({i}, {j})")));
    }
    let (bi, bj) = (bp[i], bp[j]);
    let clearance = pair_clearance(curve);
    let seg = super::Segment::Line { from: bi, to: bj };
    for (m, &b) in bp.iter().enumerate() {
        if m != i && m != j && seg.distance(b) < clearance {
            return Err(Error::PathThroughBranchPoint { index: m });
        }
    }
    let mid = (bi + bj) * 0.5;
    let half = (bj - bi) * 0.5;
    let rest = two_deflations(curve.f(), bi, bj);
    let x_of = |th: f64| mid + half * th.cos();
    // sheet: principal y at the midpoint, where y = i·half·r
    let y_mid = curve.eval(mid).sqrt();
    let r_mid = sqrt_nearest(rest.eval(mid), y_mid / (C64::new(0.0, 1.0) * half));
    let dim = set.dim();
    let mut nodes = Vec::new();
    let mut error = 0.0;
    // tracks start at the midpoint and run out to either end
    for (a, b) in [(0.0, FRAC_PI_2), (FRAC_PI_2, PI)] {
        let far = if a == 0.0 { a } else { b };
        let track = Track::build(|th| rest.eval(x_of(th)), FRAC_PI_2, far, r_mid)?;
        let res = integrate(
            |th, out| {
                let x = x_of(th);
                set.eval(x, track.select(th, rest.eval(x)), out);
                Ok(())
            },
            a,
            b,
            dim,
            settings,
        )?;
        error += res.error;
        for m in &res.mesh {
            let x = x_of(m.s);
            nodes.push((m.s, m.w, track.select(m.s, rest.eval(x))));
        }
    }
    let mut out = PairPeriod {
        i,
        j,
        value: Vec::new(),
        error,
        rule: Rule::Straight { nodes },
    };
    out.value = out.frozen(curve.f(), bi, bj, set);
    Ok(out)
}

/// As [`branch_pair_period`], routed around any branch points obstructing
/// the segment.
pub fn detour_pair_period(
    curve: &HyperellipticCurve,
    i: usize,
    j: usize,
    set: &DifferentialSet,
    settings: &QuadratureSettings,
) -> Result<PairPeriod> {
    let bp = curve.branch_points();
    if i == j || i >= bp.len() || j >= bp.len() {
        return Err(Error::InvalidArgument(format!("bad branch pair ({i}, {j})")));
    }
    let (bi, bj) = (bp[i], bp[j]);
    let delta = bj - bi;
    let fz = curve.f().compose(&Poly::new(vec![bi, delta]));
    let zcurve = HyperellipticCurve::new(fz.clone(), curve.genus())?;
    let rho = (0.1 * zcurve.min_branch_separation()).min(0.25);
    let (h0, h1) = (fz.deflate(C64::new(0.0, 0.0)), fz.deflate(C64::new(1.0, 0.0)));
    let a = C64::new(rho, 0.0);
    let e = C64::new(1.0 - rho, 0.0);
    let start_y = fz.eval(a).sqrt();
    let mut middle_path = Path::at(a, start_y);
    let skip: Vec<usize> = (0..zcurve.branch_points().len())
        .filter(|&m| {
            let b = zcurve.branch_points()[m];
            b.norm() < 0.5 * rho || (b - 1.0).norm() < 0.5 * rho
        })
        .collect();
    middle_path.plan_to(&zcurve, e, rho, &skip);
    let dim = set.dim();
    let (middle, end_y, mut error) = integrate_path_with(
        |z| fz.eval(z),
        &middle_path,
        dim,
        |z, y, out| set.eval(bi + delta * z, y, out),
        settings,
    )?;
    // end piece at ζ = 0: ζ = ρ s², y = s·q, q² = ρ H0(ζ); runs s: 0 → 1
    let (start, err0) = end_piece(&h0, rho, 1.0, start_y, dim, |z, q, out| {
        set.eval(bi + delta * z, q, out)
    }, settings)?;
    // end piece at ζ = 1: ζ = 1 - ρ s², y = s·q, q² = -ρ H1(ζ); runs s: 1 → 0
    let (end, err1) = end_piece(&h1, rho, -1.0, end_y, dim, |z, q, out| {
        set.eval(bi + delta * z, q, out)
    }, settings)?;
    error += err0 + err1;
    let mut out = PairPeriod {
        i,
        j,
        value: Vec::new(),
        error,
        rule: Rule::Detour {
            rho,
            start,
            middle,
            end,
        },
    };
    out.value = out.frozen(curve.f(), bi, bj, set);
    Ok(out)
}

/// Period over the cycle around `b_i` and the point at infinity of an
/// odd-degree curve. The returned pair has `j` equal to the number of branch
/// points.
pub fn infinity_pair_period(
    curve: &HyperellipticCurve,
    i: usize,
    set: &DifferentialSet,
    settings: &QuadratureSettings,
) -> Result<PairPeriod> {
    let bp = curve.branch_points();
    if !curve.is_odd() || i >= bp.len() {
        return Err(Error::InvalidArgument(format!(
            "no infinity pair for branch point {i} on this curve"
        )));
    }
    let bi = bp[i];
    let x_r = C64::new(curve.infinity_radius(), 0.0);
    let delta = x_r - bi;
    let fz = curve.f().compose(&Poly::new(vec![bi, delta]));
    let zcurve = HyperellipticCurve::new(fz.clone(), curve.genus())?;
    let rho = (0.1 * zcurve.min_branch_separation()).min(0.25);
    let h0 = fz.deflate(C64::new(0.0, 0.0));
    let a = C64::new(rho, 0.0);
    let start_y = fz.eval(a).sqrt();
    let mut middle_path = Path::at(a, start_y);
    let skip: Vec<usize> = (0..zcurve.branch_points().len())
        .filter(|&m| zcurve.branch_points()[m].norm() < 0.5 * rho)
        .collect();
    middle_path.plan_to(&zcurve, C64::new(1.0, 0.0), rho, &skip);
    let dim = set.dim();
    let (middle, end_y, mut error) = integrate_path_with(
        |z| fz.eval(z),
        &middle_path,
        dim,
        |z, y, out| set.eval(bi + delta * z, y, out),
        settings,
    )?;
    let (start, err0) = end_piece(&h0, rho, 1.0, start_y, dim, |z, q, out| {
        set.eval(bi + delta * z, q, out)
    }, settings)?;
    let tail = tail_integral(curve, set, 0, settings)?;
    let tail_sign = if (end_y - tail.y_r).norm() <= (end_y + tail.y_r).norm() {
        1.0
    } else {
        -1.0
    };
    error += err0 + tail.error;
    let mut out = PairPeriod {
        i,
        j: bp.len(),
        value: Vec::new(),
        error,
        rule: Rule::Infinity {
            rho,
            start,
            middle,
            tail,
            tail_sign,
        },
    };
    out.value = out.frozen(curve.f(), bi, C64::new(0.0, 0.0), set);
    Ok(out)
}

fn end_zeta(rho: f64, side: f64, s: f64) -> C64 {
    if side > 0.0 {
        C64::new(rho * s * s, 0.0)
    } else {
        C64::new(1.0 - rho * s * s, 0.0)
    }
}

/// Integral over one end piece; `side` is +1 at `ζ = 0`, -1 at `ζ = 1`.
/// Nodes are oriented in the direction of the cycle (`b_i` towards `b_j`).
fn end_piece<I>(
    h: &Poly,
    rho: f64,
    side: f64,
    y_join: C64,
    dim: usize,
    integrand: I,
    settings: &QuadratureSettings,
) -> Result<(Vec<(f64, f64, C64)>, f64)>
where
    I: Fn(C64, C64, &mut [C64]),
{
    let q_rad = |s: f64| h.eval(end_zeta(rho, side, s)) * (side * rho);
    // at s = 1 the end piece meets the middle route, where y = q
    let track = Track::build(q_rad, 1.0, 0.0, y_join)?;
    let (a, b) = if side > 0.0 { (0.0, 1.0) } else { (1.0, 0.0) };
    let res = integrate(
        |s, out| {
            let z = end_zeta(rho, side, s);
            integrand(z, track.select(s, q_rad(s)), out);
            for o in out.iter_mut() {
                *o *= 2.0 * rho * side;
            }
            Ok(())
        },
        a,
        b,
        dim,
        settings,
    )?;
    let nodes = res
        .mesh
        .iter()
        .map(|m| (m.s, m.w, track.select(m.s, q_rad(m.s))))
        .collect();
    Ok((nodes, res.error))
}

impl PairPeriod {
    /// Period on the curve `y² = f(x)` whose branch points `i, j` have moved
    /// to `bi, bj`, using the stored rule and sheet. `bj` is ignored for
    /// infinity pairs.
    pub fn frozen(&self, f: &Poly, bi: C64, bj: C64, set: &DifferentialSet) -> Vec<C64> {
        let dim = set.dim();
        let mut acc = vec![Accumulator::default(); dim];
        let mut buf = vec![C64::new(0.0, 0.0); dim];
        match &self.rule {
            Rule::Straight { nodes } => {
                let mid = (bi + bj) * 0.5;
                let half = (bj - bi) * 0.5;
                let rest = two_deflations(f, bi, bj);
                let factor = C64::new(0.0, -2.0);
                for &(th, w, r) in nodes {
                    let x = mid + half * th.cos();
                    let rr = sqrt_nearest(rest.eval(x), r);
                    set.eval(x, rr, &mut buf);
                    for k in 0..dim {
                        acc[k].add(buf[k] * (factor * w));
                    }
                }
            }
            Rule::Detour { rho, start, middle, end } => {
                let delta = bj - bi;
                let fz = f.compose(&Poly::new(vec![bi, delta]));
                let h0 = fz.deflate(C64::new(0.0, 0.0));
                let h1 = fz.deflate(C64::new(1.0, 0.0));
                for (side, nodes, h) in [(1.0, start, &h0), (-1.0, end, &h1)] {
                    for &(s, w, q) in nodes {
                        let z = end_zeta(*rho, side, s);
                        let qq = sqrt_nearest(h.eval(z) * (side * rho), q);
                        set.eval(bi + delta * z, qq, &mut buf);
                        for k in 0..dim {
                            acc[k].add(buf[k] * (2.0 * rho * side * w * 2.0) * delta);
                        }
                    }
                }
                for n in middle {
                    let y = sqrt_nearest(fz.eval(n.x), n.y);
                    set.eval(bi + delta * n.x, y, &mut buf);
                    for k in 0..dim {
                        acc[k].add(buf[k] * n.w * delta * 2.0);
                    }
                }
            }
            Rule::Infinity { rho, start, middle, tail, tail_sign } => {
                let delta = C64::new(tail.x_r, 0.0) - bi;
                let fz = f.compose(&Poly::new(vec![bi, delta]));
                let h0 = fz.deflate(C64::new(0.0, 0.0));
                for &(s, w, q) in start {
                    let z = end_zeta(*rho, 1.0, s);
                    let qq = sqrt_nearest(h0.eval(z) * *rho, q);
                    set.eval(bi + delta * z, qq, &mut buf);
                    for k in 0..dim {
                        acc[k].add(buf[k] * (2.0 * rho * w * 2.0) * delta);
                    }
                }
                for n in middle {
                    let y = sqrt_nearest(fz.eval(n.x), n.y);
                    set.eval(bi + delta * n.x, y, &mut buf);
                    for k in 0..dim {
                        acc[k].add(buf[k] * n.w * delta * 2.0);
                    }
                }
                // the tail runs from infinity inwards; this cycle runs outwards
                let t = tail.frozen(f, set).expect("tail form validated at construction");
                for k in 0..dim {
                    acc[k].add(t[k] * (-2.0 * tail_sign));
                }
            }
        }
        acc.iter().map(|a| a.value()).collect()
    }

    pub fn is_detour(&self) -> bool {
        matches!(self.rule, Rule::Detour { .. })
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self.rule, Rule::Infinity { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LEMNISCATE: f64 = 2.622_057_554_292_119_8;

    fn quartic() -> HyperellipticCurve {
        HyperellipticCurve::new(Poly::from_real(&[1.0, 0.0, 0.0, 0.0, -1.0]), 1).unwrap()
    }

    fn index_of(c: &HyperellipticCurve, b: C64) -> usize {
        c.nearest_branch(b).0
    }

    #[test]
    fn lemniscate_pair() {
        let c = quartic();
        let s = QuadratureSettings::default();
        let set = DifferentialSet::holomorphic(1);
        let i = index_of(&c, C64::new(-1.0, 0.0));
        let j = index_of(&c, C64::new(1.0, 0.0));
        let p = branch_pair_period(&c, i, j, &set, &s).unwrap();
        assert!((p.value[0] - C64::new(2.0 * LEMNISCATE, 0.0)).norm() < 1e-12, "{}", p.value[0]);
        let q = branch_pair_period(&c, j, i, &set, &s).unwrap();
        assert!((p.value[0] + q.value[0]).norm() < 1e-12);
        let d = detour_pair_period(&c, i, j, &set, &s).unwrap();
        assert!((d.value[0] - p.value[0]).norm() < 1e-11, "{} vs {}", d.value[0], p.value[0]);
    }

    #[test]
    fn blocked_pair() {
        // branch points 0, ±1, ±2 on the real axis (plus one more far away)
        let c = HyperellipticCurve::new(
            Poly::from_roots(
                &[-2.0, -1.0, 0.0, 1.0, 2.0, 5.0].map(|r| C64::new(r, 0.0)),
                C64::new(1.0, 0.0),
            ),
            2,
        )
        .unwrap();
        let s = QuadratureSettings::default();
        let set = DifferentialSet::holomorphic(2);
        let i = index_of(&c, C64::new(-1.0, 0.0));
        let j = index_of(&c, C64::new(1.0, 0.0));
        assert!(matches!(
            branch_pair_period(&c, i, j, &set, &s),
            Err(Error::PathThroughBranchPoint { .. })
        ));
        let d = detour_pair_period(&c, i, j, &set, &s).unwrap();
        assert!(d.is_detour());
        // the detoured cycle is the sum of the two adjacent straight cycles
        // up to sheet bookkeeping: compare moduli of the combination
        let m = index_of(&c, C64::new(0.0, 0.0));
        let a = branch_pair_period(&c, i, m, &set, &s).unwrap();
        let b = branch_pair_period(&c, m, j, &set, &s).unwrap();
        let ok = [1.0, -1.0].iter().any(|sa| {
            [1.0, -1.0].iter().any(|sb| {
                (0..2).all(|k| (d.value[k] - a.value[k] * *sa - b.value[k] * *sb).norm() < 1e-9)
            })
        });
        assert!(ok, "{:?} {:?} {:?}", d.value, a.value, b.value);
    }

    #[test]
    fn infinity_pair_on_cubic() {
        // y² = x³ - x: the cycle around (1, ∞) equals the one around (-1, 0)
        // up to sign, both being the real period of the curve
        let c = HyperellipticCurve::new(Poly::from_real(&[0.0, -1.0, 0.0, 1.0]), 1).unwrap();
        let s = QuadratureSettings::default();
        let set = DifferentialSet::holomorphic(1);
        let one = index_of(&c, C64::new(1.0, 0.0));
        let p = infinity_pair_period(&c, one, &set, &s).unwrap();
        assert!(p.is_infinity());
        let a = branch_pair_period(&c, index_of(&c, C64::new(-1.0, 0.0)), index_of(&c, C64::new(0.0, 0.0)), &set, &s).unwrap();
        // ∫_1^∞ dx/sqrt(x³-x) = Γ(1/4)²/(2√(2π)) ≈ 2.62205755429212
        assert!((p.value[0].norm() - 2.0 * LEMNISCATE).abs() < 1e-10, "{}", p.value[0]);
        assert!((a.value[0].norm() - 2.0 * LEMNISCATE).abs() < 1e-10, "{}", a.value[0]);
        let same = p.frozen(c.f(), c.branch_points()[one], C64::new(0.0, 0.0), &set);
        assert!((same[0] - p.value[0]).norm() < 1e-14);
    }
}
