//! The Abel–Jacobi map of a configuration of points, its derivatives with
//! respect to point positions and to the Hamiltonians `u`, elementary periods
//! and the symmetry of their `u`-derivatives.
//!
//! Every image keeps the quadrature rules it was computed with. Derivatives
//! by finite differences re-evaluate those rules on the perturbed curve, so
//! the difference quotients are not polluted by adaptive-mesh noise.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::riemann::{
    branch_pair_period, continue_y, default_clearance, detour_pair_period, infinity_pair_period,
    integrate_along, route, tail_integral, Differential, DifferentialSet, HyperellipticCurve,
    PairPeriod, Path, PathIntegral, QuadratureSettings, TailIntegral, BRANCH_HIT,
};
use crate::surface::{Configuration, SurfaceFamily};
use crate::C64;

/// Relative mismatch tolerated between a continued `y` and the target `y`.
const SHEET_MATCH: f64 = 1e-6;

/// Integral from the handover radius to one point of the configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointIntegral {
    pub x: C64,
    pub y: C64,
    pub path: Path,
    pub integral: PathIntegral,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AbelJacobiImage {
    /// `ψ_k` as a plain path sum, not reduced modulo periods.
    pub psi: Vec<C64>,
    /// Sheet of the base point at infinity: `+1`/`-1` for even degree, `0`
    /// when there is a single point at infinity.
    pub base_sheet: i8,
    pub tail: TailIntegral,
    pub points: Vec<PointIntegral>,
}

fn same_sheet(a: C64, b: C64) -> bool {
    (a - b).norm() <= SHEET_MATCH * b.norm().max(a.norm()).max(1e-300)
}

/// Points `(x, y)` of the hyperelliptic model for a surface configuration.
pub fn curve_points(family: &SurfaceFamily, config: &Configuration) -> Vec<(C64, C64)> {
    config
        .points
        .iter()
        .map(|pt| (pt.x, family.curve_y(pt)))
        .collect()
}

/// `ψ_k = Σ_j ∫_{∞₊}^{(x_j, y_j)} x^{g-k} dx / y` on a given curve.
pub fn abel_jacobi_on_curve(
    curve: &HyperellipticCurve,
    points: &[(C64, C64)],
    settings: &QuadratureSettings,
) -> Result<AbelJacobiImage> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("empty configuration".into()));
    }
    let g = curve.genus();
    let set = DifferentialSet::holomorphic(g);
    let base_sheet = if curve.is_odd() { 0 } else { 1 };
    let tail = tail_integral(curve, &set, base_sheet, settings)?;
    let start = C64::new(tail.x_r, 0.0);
    let mut psi: Vec<C64> = tail.value.iter().map(|v| v * points.len() as f64).collect();
    let mut out = Vec::with_capacity(points.len());
    for &(x, y) in points {
        let path = route(curve, start, tail.y_r, x, y)?;
        let integral = integrate_along(curve, &path, &set, settings)?;
        if !same_sheet(integral.end_y, y) {
            return Err(Error::LostTrack { x: format!("{x}") });
        }
        for k in 0..g {
            psi[k] += integral.value[k];
        }
        out.push(PointIntegral { x, y, path, integral });
    }
    Ok(AbelJacobiImage {
        psi,
        base_sheet,
        tail,
        points: out,
    })
}

pub fn abel_jacobi(
    family: &SurfaceFamily,
    u: &[C64],
    config: &Configuration,
    settings: &QuadratureSettings,
) -> Result<AbelJacobiImage> {
    let curve = family.cut_curve(u)?;
    abel_jacobi_on_curve(&curve, &curve_points(family, config), settings)
}

impl AbelJacobiImage {
    pub fn genus(&self) -> usize {
        self.psi.len()
    }

    /// Current end points `(x_j, y_j)`.
    pub fn end_points(&self) -> Vec<(C64, C64)> {
        self.points.iter().map(|p| (p.x, p.y)).collect()
    }

    /// `set` integrated on the curve `y² = f(x)` along the stored rules,
    /// with the points moved to `xs` along short straight extensions.
    /// Returns the integrals and the re-lifted `y_j`.
    pub fn frozen(
        &self,
        f: &Poly,
        set: &DifferentialSet,
        xs: &[C64],
        settings: &QuadratureSettings,
    ) -> Result<(Vec<C64>, Vec<C64>)> {
        if xs.len() != self.points.len() {
            return Err(Error::DimensionMismatch {
                expected: self.points.len(),
                found: xs.len(),
            });
        }
        let dim = set.dim();
        let tail = self.tail.frozen(f, set)?;
        let mut total: Vec<C64> = tail.iter().map(|v| v * xs.len() as f64).collect();
        let mut ys = Vec::with_capacity(xs.len());
        let curve_free = |x: C64| f.eval(x);
        for (p, &x) in self.points.iter().zip(xs) {
            let part = p.integral.frozen(f, set);
            let y0 = p.integral.frozen_end_y(f);
            for k in 0..dim {
                total[k] += part[k];
            }
            if x == p.x {
                ys.push(y0);
                continue;
            }
            let ext = Path::line(p.x, x, y0);
            let (nodes, y1, _) = crate::riemann::integrate_path_with(
                curve_free,
                &ext,
                dim,
                |xx, yy, out| set.eval(xx, yy, out),
                settings,
            )?;
            let extra = PathIntegral {
                value: Vec::new(),
                error: 0.0,
                nodes,
                end_x: x,
                end_y: y1,
            }
            .frozen(f, set);
            for k in 0..dim {
                total[k] += extra[k];
            }
            ys.push(y1);
        }
        Ok((total, ys))
    }

    /// Follow point `j` along the straight chords through `waypoints`,
    /// each given with the `y` the point is known to have there. Whenever
    /// continuation along a chord arrives on the other sheet, the point is
    /// taken to have passed through the branch point nearest the chord and
    /// a small loop around it is appended.
    pub fn advance(
        &mut self,
        curve: &HyperellipticCurve,
        j: usize,
        waypoints: &[(C64, C64)],
        settings: &QuadratureSettings,
    ) -> Result<()> {
        let set = DifferentialSet::holomorphic(self.genus());
        let p = &mut self.points[j];
        for &(x, y) in waypoints {
            if x == p.x {
                if !same_sheet(p.y, y) {
                    return Err(Error::LostTrack { x: format!("{x}") });
                }
                continue;
            }
            let clearance = default_clearance(curve, &[p.x, x]);
            let mut piece = Path::plan(curve, p.x, x, p.y, clearance);
            let arrived = continue_y(curve, &piece)?;
            if !same_sheet(arrived, y) {
                if !same_sheet(-arrived, y) {
                    return Err(Error::LostTrack { x: format!("{x}") });
                }
                let chord = crate::riemann::Segment::Line { from: p.x, to: x };
                let (index, _) = curve
                    .branch_points()
                    .iter()
                    .enumerate()
                    .map(|(i, &b)| (i, chord.distance(b)))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .expect("curve has branch points");
                let radius = clearance.min(0.5 * (x - curve.branch_points()[index]).norm());
                piece.push_flip_loop(curve, index, radius);
            }
            let part = integrate_along(curve, &piece, &set, settings)?;
            if !same_sheet(part.end_y, y) {
                return Err(Error::LostTrack { x: format!("{x}") });
            }
            for k in 0..self.psi.len() {
                self.psi[k] += part.value[k];
            }
            p.path.extend(&piece);
            p.integral.nodes.extend(part.nodes);
            p.integral.error += part.error;
            p.integral.end_x = x;
            p.integral.end_y = part.end_y;
            for k in 0..part.value.len() {
                p.integral.value[k] += part.value[k];
            }
            p.x = x;
            p.y = y;
        }
        Ok(())
    }
}

/// `M[k][j] = ∂ψ_k/∂x_j = x_j^{g-k} / y_j`.
pub fn dpsi_dx_analytic(curve: &HyperellipticCurve, points: &[(C64, C64)]) -> Result<DMatrix<C64>> {
    let g = curve.genus();
    let mut m = DMatrix::zeros(g, points.len());
    for (j, &(x, y)) in points.iter().enumerate() {
        let scale = curve.f().eval_abs(x.norm()).max(f64::MIN_POSITIVE);
        if y.norm_sqr() < BRANCH_HIT * scale {
            return Err(Error::OnBranchPoint { index: j });
        }
        for k in 1..=g {
            m[(k - 1, j)] = x.powu((g - k) as u32) / y;
        }
    }
    Ok(m)
}

/// Central differences of the frozen map in the point positions, step
/// `h·max(1, |x_j|)`.
pub fn dpsi_dx_fd(
    curve: &HyperellipticCurve,
    image: &AbelJacobiImage,
    h: f64,
    settings: &QuadratureSettings,
) -> Result<DMatrix<C64>> {
    let g = image.genus();
    let set = DifferentialSet::holomorphic(g);
    let xs: Vec<C64> = image.points.iter().map(|p| p.x).collect();
    let mut m = DMatrix::zeros(g, xs.len());
    for j in 0..xs.len() {
        let step = h * xs[j].norm().max(1.0);
        let mut plus = xs.clone();
        let mut minus = xs.clone();
        plus[j] += step;
        minus[j] -= step;
        let (a, _) = image.frozen(curve.f(), &set, &plus, settings)?;
        let (b, _) = image.frozen(curve.f(), &set, &minus, settings)?;
        for k in 0..g {
            m[(k, j)] = (a[k] - b[k]) / (2.0 * step);
        }
    }
    Ok(m)
}

/// Integrands `x^{2g-k-l} G(x) / y³` for all `(k, l)`, row-major.
fn second_kind_set(g: usize, gpoly: &Poly) -> DifferentialSet {
    let mut items = Vec::with_capacity(g * g);
    for k in 1..=g {
        for l in 1..=g {
            items.push(Differential {
                x_power: 2 * g - k - l,
                numerator: gpoly.clone(),
            });
        }
    }
    DifferentialSet { items, y_power: 3 }
}

/// `∂F/∂P` for the family at `u`.
fn family_dp(family: &SurfaceFamily, u: &[C64]) -> Result<Poly> {
    Ok(family.curve_poly_dp(&family.section_polynomial(u)?))
}

/// Overall sign of the integral representation of `∂ψ/∂u`: with paths
/// starting at infinity, `∂(1/y)/∂u = -½ (∂F/∂u) / y³`.
pub const DPSI_DU_SIGN: f64 = -1.0;

/// `D[k][l] = ∂ψ_k/∂u_l` at fixed `x_j`, from
/// `-½ Σ_j ∫ x^{g-k} x^{g-l} G(x) dx / y³` along the paths of `image`.
pub fn dpsi_du_for_image(
    family: &SurfaceFamily,
    u: &[C64],
    image: &AbelJacobiImage,
    settings: &QuadratureSettings,
) -> Result<DMatrix<C64>> {
    let curve = family.cut_curve(u)?;
    let g = curve.genus();
    let set = second_kind_set(g, &family_dp(family, u)?);
    let tail = tail_integral(&curve, &set, image.base_sheet, settings)?;
    let mut sum: Vec<C64> = tail.value.iter().map(|v| v * image.points.len() as f64).collect();
    for p in &image.points {
        let part = integrate_along(&curve, &p.path, &set, settings)?;
        for (s, v) in sum.iter_mut().zip(&part.value) {
            *s += v;
        }
    }
    Ok(DMatrix::from_fn(g, g, |k, l| sum[k * g + l] * (0.5 * DPSI_DU_SIGN)))
}

pub fn dpsi_du(
    family: &SurfaceFamily,
    u: &[C64],
    config: &Configuration,
    settings: &QuadratureSettings,
) -> Result<DMatrix<C64>> {
    let image = abel_jacobi(family, u, config, settings)?;
    dpsi_du_for_image(family, u, &image, settings)
}

/// Central differences of the frozen map in `u`, step `h·max(1, |u_l|)`,
/// with the points held at fixed `x`.
pub fn dpsi_du_fd(
    family: &SurfaceFamily,
    u: &[C64],
    image: &AbelJacobiImage,
    h: f64,
    settings: &QuadratureSettings,
) -> Result<DMatrix<C64>> {
    let g = family.genus();
    let set = DifferentialSet::holomorphic(g);
    let xs: Vec<C64> = image.points.iter().map(|p| p.x).collect();
    let mut m = DMatrix::zeros(g, g);
    for l in 0..g {
        let step = h * u[l].norm().max(1.0);
        let mut values = Vec::with_capacity(2);
        for sign in [1.0, -1.0] {
            let mut v = u.to_vec();
            v[l] += step * sign;
            let f = family.curve_poly(&family.section_polynomial(&v)?);
            values.push(image.frozen(&f, &set, &xs, settings)?.0);
        }
        for k in 0..g {
            m[(k, l)] = (values[0][k] - values[1][k]) / (2.0 * step);
        }
    }
    Ok(m)
}

/// Periods of the holomorphic differentials over a fixed set of cycles, each
/// encircling two branch points (or a branch point and infinity).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeriodData {
    pub branch_points: Vec<C64>,
    /// Branch-point index pairs; index `branch_points.len()` stands for the
    /// point at infinity.
    pub pairs: Vec<(usize, usize)>,
    /// `e[pair][k]`.
    pub e: Vec<Vec<C64>>,
    pub periods: Vec<PairPeriod>,
}

/// Branch points sorted by real part (then imaginary part), paired
/// consecutively; with odd degree the last one pairs with infinity.
pub fn elementary_pairs(curve: &HyperellipticCurve) -> Vec<(usize, usize)> {
    let bp = curve.branch_points();
    let mut order: Vec<usize> = (0..bp.len()).collect();
    order.sort_by(|&a, &b| {
        bp[a].re
            .total_cmp(&bp[b].re)
            .then(bp[a].im.total_cmp(&bp[b].im))
    });
    let mut pairs: Vec<(usize, usize)> = order.chunks(2).map(|c| (c[0], *c.get(1).unwrap_or(&bp.len()))).collect();
    if pairs.is_empty() {
        pairs.push((0, bp.len()));
    }
    pairs
}

/// Period over the cycle of `pair`: straight when possible, detoured when
/// another branch point blocks the segment.
pub fn pair_period(
    curve: &HyperellipticCurve,
    pair: (usize, usize),
    set: &DifferentialSet,
    settings: &QuadratureSettings,
) -> Result<PairPeriod> {
    let (i, j) = pair;
    if j == curve.branch_points().len() {
        return infinity_pair_period(curve, i, set, settings);
    }
    match branch_pair_period(curve, i, j, set, settings) {
        Err(Error::PathThroughBranchPoint { .. }) => detour_pair_period(curve, i, j, set, settings),
        other => other,
    }
}

pub fn elementary_periods_on_curve(
    curve: &HyperellipticCurve,
    settings: &QuadratureSettings,
) -> Result<PeriodData> {
    let set = DifferentialSet::holomorphic(curve.genus());
    let pairs = elementary_pairs(curve);
    let periods = pairs
        .iter()
        .map(|&p| pair_period(curve, p, &set, settings))
        .collect::<Result<Vec<_>>>()?;
    Ok(PeriodData {
        branch_points: curve.branch_points().to_vec(),
        pairs,
        e: periods.iter().map(|p| p.value.clone()).collect(),
        periods,
    })
}

pub fn elementary_periods(
    family: &SurfaceFamily,
    u: &[C64],
    settings: &QuadratureSettings,
) -> Result<PeriodData> {
    elementary_periods_on_curve(&family.cut_curve(u)?, settings)
}

/// Branch points of a perturbed curve matched one-to-one to the originals by
/// nearest neighbour.
pub fn match_branch_points(original: &[C64], perturbed: &[C64]) -> Result<Vec<C64>> {
    if original.len() != perturbed.len() {
        return Err(Error::BranchPointCollision(format!(
            "branch point count changed from {} to {}",
            original.len(),
            perturbed.len()
        )));
    }
    let mut used = vec![false; perturbed.len()];
    let mut out = Vec::with_capacity(original.len());
    for (i, &b) in original.iter().enumerate() {
        let (m, _) = perturbed
            .iter()
            .enumerate()
            .map(|(m, &c)| (m, (c - b).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        if used[m] {
            return Err(Error::BranchPointCollision(format!(
                "branch point {i} has no distinct nearest partner"
            )));
        }
        used[m] = true;
        out.push(perturbed[m]);
    }
    Ok(out)
}

/// Finite-difference Jacobian `A[k][l] = ∂e_k/∂u_l` of one pair period and
/// its antisymmetry residual `max|A - Aᵀ| / max|A|`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CubicCondition {
    pub pair: (usize, usize),
    pub jacobian: Vec<Vec<C64>>,
    pub residual: f64,
}

pub fn cubic_condition(
    family: &SurfaceFamily,
    u: &[C64],
    pair: (usize, usize),
    h: f64,
    settings: &QuadratureSettings,
) -> Result<CubicCondition> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("step must be positive".into()));
    }
    let curve = family.cut_curve(u)?;
    let g = curve.genus();
    let n = curve.branch_points().len();
    if pair.0 >= n || pair.1 > n || pair.0 == pair.1 {
        return Err(Error::InvalidArgument(format!("bad pair {pair:?}")));
    }
    let set = DifferentialSet::holomorphic(g);
    let base = pair_period(&curve, pair, &set, settings)?;
    let mut a = vec![vec![C64::new(0.0, 0.0); g]; g];
    for l in 0..g {
        let step = h * u[l].norm().max(1.0);
        let mut values = Vec::with_capacity(2);
        for sign in [1.0, -1.0] {
            let mut v = u.to_vec();
            v[l] += step * sign;
            let moved = family.cut_curve(&v)?;
            let matched = match_branch_points(curve.branch_points(), moved.branch_points())?;
            let bj = if pair.1 == n { C64::new(0.0, 0.0) } else { matched[pair.1] };
            values.push(base.frozen(moved.f(), matched[pair.0], bj, &set));
        }
        for k in 0..g {
            a[k][l] = (values[0][k] - values[1][k]) / (2.0 * step);
        }
    }
    let scale = a.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
    let mut asym: f64 = 0.0;
    for k in 0..g {
        for l in 0..g {
            asym = asym.max((a[k][l] - a[l][k]).norm());
        }
    }
    let residual = if scale > 0.0 { asym / scale } else { 0.0 };
    Ok(CubicCondition {
        pair,
        jacobian: a,
        residual,
    })
}

pub fn cubic_condition_residual(
    family: &SurfaceFamily,
    u: &[C64],
    pair: (usize, usize),
    h: f64,
    settings: &QuadratureSettings,
) -> Result<f64> {
    Ok(cubic_condition(family, u, pair, h, settings)?.residual)
}

/// Largest entry of `|a - b|` relative to the largest entry of `|b|`
/// (absolute when `b` vanishes).
pub fn relative_difference(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let diff = (a - b).iter().map(|v| v.norm()).fold(0.0, f64::max);
    let scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// `max|D - Dᵀ| / max|D|`.
pub fn symmetry_residual(d: &DMatrix<C64>) -> f64 {
    relative_difference(d, &d.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;

    const LEMNISCATE: f64 = 2.622_057_554_292_119_8;

    fn c(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    fn quartic() -> HyperellipticCurve {
        HyperellipticCurve::new(Poly::from_real(&[1.0, 0.0, 0.0, 0.0, -1.0]), 1).unwrap()
    }

    #[test]
    fn analytic_dx_identity() {
        let curve = quartic();
        let m = dpsi_dx_analytic(&curve, &[(c(0.0), c(1.0))]).unwrap();
        assert_eq!(m[(0, 0)], c(1.0));
        let y = curve.y_near(c(1.0), c(1.0));
        assert!(matches!(
            dpsi_dx_analytic(&curve, &[(c(1.0), y)]),
            Err(Error::OnBranchPoint { index: 0 })
        ));
    }

    #[test]
    fn lemniscate_point_at_origin() {
        // y² = 1 - x⁴ with y ≈ i x² at infinity on the base sheet:
        // from +∞ down the real axis y = i·sqrt(x⁴ - 1), giving
        // ∫_∞^1 dx/y = i·ϖ/2; then ∫_1^0 dx/sqrt(1 - x⁴) = -ϖ/2, where the
        // real period around (-1, 1) is 2ϖ.
        let curve = quartic();
        let s = QuadratureSettings::default();
        let img = abel_jacobi_on_curve(&curve, &[(c(0.0), c(1.0))], &s).unwrap();
        let set = DifferentialSet::holomorphic(1);
        let lo = curve.nearest_branch(c(-1.0)).0;
        let hi = curve.nearest_branch(c(1.0)).0;
        let period = branch_pair_period(&curve, lo, hi, &set, &s).unwrap().value[0].norm();
        assert!((period - 2.0 * LEMNISCATE).abs() < 1e-12);
        let expected = C64::new(-period / 4.0, period / 4.0);
        assert!((img.psi[0] - expected).norm() < 1e-9, "{} vs {expected}", img.psi[0]);
    }

    #[test]
    fn permutation_invariance() {
        let curve = HyperellipticCurve::new(
            Poly::from_real(&[1.0, 0.3, -0.2, 0.1, 0.5, 0.0, 1.0]),
            2,
        )
        .unwrap();
        let s = QuadratureSettings::default();
        let pts: Vec<(C64, C64)> = [C64::new(0.3, 0.2), C64::new(-0.4, 0.1)]
            .iter()
            .map(|&x| (x, curve.eval(x).sqrt()))
            .collect();
        let a = abel_jacobi_on_curve(&curve, &pts, &s).unwrap();
        let rev: Vec<_> = pts.iter().rev().copied().collect();
        let b = abel_jacobi_on_curve(&curve, &rev, &s).unwrap();
        for k in 0..2 {
            assert!((a.psi[k] - b.psi[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn dx_finite_differences() {
        let curve = HyperellipticCurve::new(
            Poly::from_real(&[1.0, 0.3, -0.2, 0.1, 0.5, 0.0, 1.0]),
            2,
        )
        .unwrap();
        let s = QuadratureSettings::default();
        let pts: Vec<(C64, C64)> = [C64::new(0.3, 0.2), C64::new(-0.4, 0.1)]
            .iter()
            .map(|&x| (x, -curve.eval(x).sqrt()))
            .collect();
        let img = abel_jacobi_on_curve(&curve, &pts, &s).unwrap();
        let fd = dpsi_dx_fd(&curve, &img, 1e-5, &s).unwrap();
        let an = dpsi_dx_analytic(&curve, &pts).unwrap();
        assert!(relative_difference(&fd, &an) < 1e-6, "{fd} {an}");
    }

    #[test]
    fn pairing_counts() {
        let even = quartic();
        assert_eq!(elementary_pairs(&even).len(), 2);
        let odd = HyperellipticCurve::new(Poly::from_real(&[0.0, -1.0, 0.0, 1.0]), 1).unwrap();
        let pairs = elementary_pairs(&odd);
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[1].1, 3);
    }

    #[test]
    fn branch_matching() {
        let a = [c(0.0), c(1.0), c(2.0)];
        let b = [c(2.0 + 1e-6), c(1e-6), c(1.0)];
        let m = match_branch_points(&a, &b).unwrap();
        assert_eq!(m, vec![b[1], b[2], b[0]]);
        let bad = [c(0.0), c(0.1), c(2.0)];
        assert!(matches!(
            match_branch_points(&[c(0.0), c(0.05), c(2.0)], &[c(0.02), c(1.0), c(2.0)]),
            Err(Error::BranchPointCollision(_))
        ));
        let _ = bad;
    }
}

#[cfg(test)]
mod family_tests {
    use super::*;
    use crate::instances::{seeded_instances, FamilyKind};

    #[test]
    fn dpsi_du_symmetric_and_matches_fd() {
        let s = QuadratureSettings::default();
        for kind in FamilyKind::defaults() {
            let inst = &seeded_instances(kind, 11, 1).unwrap()[0];
            let img = abel_jacobi(&inst.family, &inst.u, &inst.config, &s).unwrap();
            let d = dpsi_du_for_image(&inst.family, &inst.u, &img, &s).unwrap();
            let fd = dpsi_du_fd(&inst.family, &inst.u, &img, 1e-5, &s).unwrap();
            let sym = symmetry_residual(&d);
            let agree = relative_difference(&fd, &d);
            eprintln!("{kind:?}: sym {sym:e} fd {agree:e}");
            assert!(sym < 1e-6 && agree < 1e-6);
            let curve = &inst.curve;
            let pts = curve_points(&inst.family, &inst.config);
            let an = dpsi_dx_analytic(curve, &pts).unwrap();
            let fdx = dpsi_dx_fd(curve, &img, 1e-5, &s).unwrap();
            let dx = relative_difference(&fdx, &an);
            eprintln!("   dx {dx:e}");
            assert!(dx < 1e-6);
        }
    }

    #[test]
    fn cubic_condition_small() {
        let s = QuadratureSettings::default();
        for kind in [FamilyKind::EllipticK3, FamilyKind::RationalElliptic, FamilyKind::NeumannRational { n: 2 }] {
            let inst = &seeded_instances(kind, 5, 1).unwrap()[0];
            let pairs = elementary_pairs(&inst.curve);
            let r1 = cubic_condition_residual(&inst.family, &inst.u, pairs[0], 1e-4, &s).unwrap();
            let r2 = cubic_condition_residual(&inst.family, &inst.u, pairs[0], 5e-5, &s).unwrap();
            eprintln!("{kind:?}: {r1:e} {r2:e} ratio {}", r1 / r2);
            assert!(r1 < 1e-5);
        }
    }
}
