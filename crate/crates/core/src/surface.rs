//! The five surface families, the curves cut out by sections, and recovery of
//! the Hamiltonians `u` from point configurations.
//!
//! Every family is written so that the section has the form
//! `P(x) = P₀(x) + Σ_k u_k x^{g-k}` with a fixed part `P₀`; this makes
//! `∂P/∂u_k = x^{g-k}` uniformly. For the Seiberg–Witten family the stored
//! vector holds `u_2 … u_{N_c}` and the curve coordinate is `w = y - z`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{constrained_fit, lagrange_interpolate, BiPoly, Poly};
use crate::riemann::{sqrt_nearest, HyperellipticCurve, BRANCH_HIT};
use crate::C64;

/// Tolerance for surface-equation residuals.
pub const SURFACE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SurfaceFamily {
    EllipticK3 { f: Poly, g: Poly },
    DoubleCoverK3 { f2: BiPoly },
    RationalElliptic { f: Poly, g: Poly, c: C64 },
    NeumannRational { c: Vec<f64>, r: f64 },
    SeibergWittenAffine { nc: usize, lambda: C64, masses: Vec<C64> },
}

/// Which pair of surface coordinates carries the two-form `weight · da ∧ db`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoordPair {
    /// `(a, b) = (z, x)`
    ZX,
    /// `(a, b) = (y, x)`
    YX,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub x: C64,
    pub y: C64,
    pub z: C64,
}

impl SurfacePoint {
    pub fn new(x: C64, y: C64, z: C64) -> Self {
        SurfacePoint { x, y, z }
    }
}

/// Unordered `g`-tuple of surface points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub points: Vec<SurfacePoint>,
}

impl Configuration {
    pub fn new(points: Vec<SurfacePoint>) -> Self {
        Configuration { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn xs(&self) -> Vec<C64> {
        self.points.iter().map(|p| p.x).collect()
    }
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

fn check_degree(p: &Poly, max: usize, what: &str) -> Result<()> {
    if p.degree().unwrap_or(0) > max {
        return Err(Error::InvalidArgument(format!(
            "{what} has degree {} above {max}",
            p.degree().unwrap_or(0)
        )));
    }
    Ok(())
}

impl SurfaceFamily {
    pub fn elliptic_k3(f: Poly, g: Poly) -> Result<Self> {
        check_degree(&f, 8, "f")?;
        check_degree(&g, 12, "g")?;
        Ok(SurfaceFamily::EllipticK3 { f, g })
    }

    pub fn double_cover_k3(f2: BiPoly) -> Result<Self> {
        if f2.total_degree().unwrap_or(0) > 6 {
            return Err(Error::InvalidArgument("sextic has total degree above 6".into()));
        }
        Ok(SurfaceFamily::DoubleCoverK3 { f2 })
    }

    pub fn rational_elliptic(f: Poly, g: Poly, c: C64) -> Result<Self> {
        check_degree(&f, 4, "f")?;
        check_degree(&g, 6, "g")?;
        Ok(SurfaceFamily::RationalElliptic { f, g, c })
    }

    pub fn neumann(c: Vec<f64>, r: f64) -> Result<Self> {
        if c.len() < 2 {
            return Err(Error::InvalidArgument("Neumann family needs N + 1 >= 2 constants".into()));
        }
        if !(r > 0.0) {
            return Err(Error::InvalidArgument("radius must be positive".into()));
        }
        let mut sorted = c.clone();
        sorted.sort_by(f64::total_cmp);
        for w in sorted.windows(2) {
            if w[1] - w[0] <= 1e-12 * w[1].abs().max(1.0) {
                return Err(Error::InvalidArgument("Neumann constants must be distinct".into()));
            }
        }
        Ok(SurfaceFamily::NeumannRational { c: sorted, r })
    }

    pub fn seiberg_witten(nc: usize, lambda: C64, masses: Vec<C64>) -> Result<Self> {
        if nc < 2 {
            return Err(Error::InvalidArgument("N_c must be at least 2".into()));
        }
        if masses.len() > 2 * nc {
            return Err(Error::InvalidArgument("N_f must not exceed 2 N_c".into()));
        }
        if lambda.norm() == 0.0 {
            return Err(Error::InvalidArgument("Λ must be nonzero".into()));
        }
        Ok(SurfaceFamily::SeibergWittenAffine { nc, lambda, masses })
    }

    pub fn name(&self) -> &'static str {
        match self {
            SurfaceFamily::EllipticK3 { .. } => "EllipticK3",
            SurfaceFamily::DoubleCoverK3 { .. } => "DoubleCoverK3",
            SurfaceFamily::RationalElliptic { .. } => "RationalElliptic",
            SurfaceFamily::NeumannRational { .. } => "NeumannRational",
            SurfaceFamily::SeibergWittenAffine { .. } => "SeibergWittenAffine",
        }
    }

    pub fn genus(&self) -> usize {
        match self {
            SurfaceFamily::EllipticK3 { .. } => 5,
            SurfaceFamily::DoubleCoverK3 { .. } | SurfaceFamily::RationalElliptic { .. } => 2,
            SurfaceFamily::NeumannRational { c, .. } => c.len() - 1,
            SurfaceFamily::SeibergWittenAffine { nc, .. } => nc - 1,
        }
    }

    pub fn is_seiberg_witten(&self) -> bool {
        matches!(self, SurfaceFamily::SeibergWittenAffine { .. })
    }

    /// `Q(x)` for the Neumann and Seiberg–Witten families.
    pub fn q_poly(&self) -> Option<Poly> {
        match self {
            SurfaceFamily::NeumannRational { c, .. } => Some(Poly::from_roots(
                &c.iter().map(|&v| C64::new(v, 0.0)).collect::<Vec<_>>(),
                one(),
            )),
            SurfaceFamily::SeibergWittenAffine { nc, lambda, masses } => {
                let neg: Vec<C64> = masses.iter().map(|m| -m).collect();
                Some(Poly::from_roots(&neg, lambda.powu((2 * nc - masses.len()) as u32)))
            }
            _ => None,
        }
    }

    /// Coefficients of the section fixed by the family (Casimirs).
    pub fn pinned(&self) -> Vec<(usize, C64)> {
        match self {
            SurfaceFamily::EllipticK3 { .. } | SurfaceFamily::DoubleCoverK3 { .. } => Vec::new(),
            SurfaceFamily::RationalElliptic { c, .. } => vec![(2, *c)],
            SurfaceFamily::NeumannRational { c, r } => vec![(c.len() - 1, C64::new(r * r, 0.0))],
            SurfaceFamily::SeibergWittenAffine { nc, .. } => {
                vec![(*nc, one()), (*nc - 1, C64::new(0.0, 0.0))]
            }
        }
    }

    /// The fixed part `P₀` of the section.
    pub fn section_base(&self) -> Poly {
        self.pinned()
            .iter()
            .fold(Poly::zero(), |acc, &(d, c)| &acc + &Poly::monomial(d, c))
    }

    fn check_u(&self, u: &[C64]) -> Result<()> {
        if u.len() != self.genus() {
            return Err(Error::DimensionMismatch {
                expected: self.genus(),
                found: u.len(),
            });
        }
        Ok(())
    }

    /// `P(x) = P₀(x) + Σ_k u_k x^{g-k}`.
    pub fn section_polynomial(&self, u: &[C64]) -> Result<Poly> {
        self.check_u(u)?;
        let g = self.genus();
        let mut coeffs = vec![C64::new(0.0, 0.0); g];
        for (k, &uk) in u.iter().enumerate() {
            coeffs[g - 1 - k] = uk;
        }
        Ok(&self.section_base() + &Poly::new(coeffs))
    }

    /// Read `u` back from a section polynomial.
    pub fn u_from_section(&self, p: &Poly) -> Vec<C64> {
        let g = self.genus();
        (0..g).map(|k| p.coeff(g - 1 - k)).collect()
    }

    /// `F(x)` of the curve cut by the section `P`.
    pub fn curve_poly(&self, p: &Poly) -> Poly {
        match self {
            SurfaceFamily::EllipticK3 { f, g } | SurfaceFamily::RationalElliptic { f, g, .. } => {
                let p2 = p * p;
                &(&(&p2 * p) + &(f * p)) + g
            }
            SurfaceFamily::DoubleCoverK3 { f2 } => f2.substitute_z(p),
            SurfaceFamily::NeumannRational { .. } => p * &self.q_poly().expect("Neumann Q"),
            SurfaceFamily::SeibergWittenAffine { .. } => {
                &(p * p) - &self.q_poly().expect("SW Q").scale(C64::new(4.0, 0.0))
            }
        }
    }

    /// `G = ∂F/∂P`, so that `∂F/∂u_k = x^{g-k} G`.
    pub fn curve_poly_dp(&self, p: &Poly) -> Poly {
        match self {
            SurfaceFamily::EllipticK3 { f, .. } | SurfaceFamily::RationalElliptic { f, .. } => {
                &(p * p).scale(C64::new(3.0, 0.0)) + f
            }
            SurfaceFamily::DoubleCoverK3 { f2 } => f2.dz().substitute_z(p),
            SurfaceFamily::NeumannRational { .. } => self.q_poly().expect("Neumann Q"),
            SurfaceFamily::SeibergWittenAffine { .. } => p.scale(C64::new(2.0, 0.0)),
        }
    }

    pub fn cut_curve(&self, u: &[C64]) -> Result<HyperellipticCurve> {
        let p = self.section_polynomial(u)?;
        HyperellipticCurve::new(self.curve_poly(&p), self.genus())
    }

    /// Right-hand side `S(x, z)` of `y² = S(x, z)` (families other than
    /// Seiberg–Witten) with its partials `(S, ∂S/∂x, ∂S/∂z)`.
    pub fn surface_rhs(&self, x: C64, z: C64) -> (C64, C64, C64) {
        match self {
            SurfaceFamily::EllipticK3 { f, g } | SurfaceFamily::RationalElliptic { f, g, .. } => {
                let (fv, dfv) = f.eval_with_derivative(x);
                let (gv, dgv) = g.eval_with_derivative(x);
                (z * z * z + fv * z + gv, dfv * z + dgv, 3.0 * z * z + fv)
            }
            SurfaceFamily::DoubleCoverK3 { f2 } => {
                (f2.eval(x, z), f2.dx().eval(x, z), f2.dz().eval(x, z))
            }
            SurfaceFamily::NeumannRational { .. } => {
                let (q, dq) = self.q_poly().expect("Neumann Q").eval_with_derivative(x);
                (z * q, z * dq, q)
            }
            SurfaceFamily::SeibergWittenAffine { .. } => {
                panic!("the Seiberg–Witten surface is yz = Q(x)")
            }
        }
    }

    /// Relative residual of the surface equation.
    pub fn surface_residual(&self, pt: &SurfacePoint) -> f64 {
        match self {
            SurfaceFamily::SeibergWittenAffine { .. } => {
                let q = self.q_poly().expect("SW Q");
                let scale = q.eval_abs(pt.x.norm()).max((pt.y * pt.z).norm()).max(f64::MIN_POSITIVE);
                (pt.y * pt.z - q.eval(pt.x)).norm() / scale
            }
            _ => {
                let (s, _, _) = self.surface_rhs(pt.x, pt.z);
                let scale = s.norm().max(pt.y.norm_sqr()).max(f64::MIN_POSITIVE);
                (pt.y * pt.y - s).norm() / scale
            }
        }
    }

    /// Value interpolated by the section at a point: `z`, or `y + z` for
    /// Seiberg–Witten.
    pub fn section_value(&self, pt: &SurfacePoint) -> C64 {
        if self.is_seiberg_witten() {
            pt.y + pt.z
        } else {
            pt.z
        }
    }

    /// Coordinate `y` of the hyperelliptic model at a surface point.
    pub fn curve_y(&self, pt: &SurfacePoint) -> C64 {
        if self.is_seiberg_witten() {
            pt.y - pt.z
        } else {
            pt.y
        }
    }

    /// Surface point over `(x, w)` on the curve cut by `p`.
    pub fn point_from_curve(&self, p: &Poly, x: C64, w: C64) -> SurfacePoint {
        let pv = p.eval(x);
        match self {
            SurfaceFamily::SeibergWittenAffine { .. } => {
                let y = (pv + w) * 0.5;
                let q = self.q_poly().expect("SW Q").eval(x);
                let z = if y.norm() > 0.0 { q / y } else { (pv - w) * 0.5 };
                SurfacePoint::new(x, y, z)
            }
            _ => SurfacePoint::new(x, w, pv),
        }
    }

    pub fn lift_points(&self, u: &[C64], xs: &[C64], signs: &[f64]) -> Result<Configuration> {
        if xs.len() != self.genus() || signs.len() != xs.len() {
            return Err(Error::DimensionMismatch {
                expected: self.genus(),
                found: xs.len().min(signs.len()),
            });
        }
        let p = self.section_polynomial(u)?;
        let f = self.curve_poly(&p);
        let mut points = Vec::with_capacity(xs.len());
        for (&x, &s) in xs.iter().zip(signs) {
            let fx = f.eval(x);
            if fx.norm() < BRANCH_HIT * f.eval_abs(x.norm()).max(f64::MIN_POSITIVE) {
                return Err(Error::BranchPointHit { x: format!("{x}") });
            }
            let w = fx.sqrt() * s.signum();
            points.push(self.point_from_curve(&p, x, w));
        }
        Ok(Configuration::new(points))
    }

    pub fn points_to_u(&self, config: &Configuration) -> Result<Vec<C64>> {
        if config.len() != self.genus() {
            return Err(Error::DimensionMismatch {
                expected: self.genus(),
                found: config.len(),
            });
        }
        let nodes: Vec<(C64, C64)> = config
            .points
            .iter()
            .map(|pt| (pt.x, self.section_value(pt)))
            .collect();
        let p = match self {
            SurfaceFamily::EllipticK3 { .. } | SurfaceFamily::DoubleCoverK3 { .. } => {
                lagrange_interpolate(&nodes)?
            }
            _ => constrained_fit(&nodes, &self.pinned())?,
        };
        Ok(self.u_from_section(&p))
    }

    pub fn holomorphic_two_form(&self, pt: &SurfacePoint) -> Result<(CoordPair, C64)> {
        if pt.y.norm() == 0.0 {
            return Err(Error::OnDivisor);
        }
        let pair = if self.is_seiberg_witten() {
            CoordPair::YX
        } else {
            CoordPair::ZX
        };
        Ok((pair, one() / pt.y))
    }

    /// Local coordinates `(a, b)` of a point.
    pub fn coords(&self, pt: &SurfacePoint) -> (C64, C64) {
        if self.is_seiberg_witten() {
            (pt.y, pt.x)
        } else {
            (pt.z, pt.x)
        }
    }

    /// Point with local coordinates `(a, b)`, the dependent coordinate
    /// re-lifted on the sheet of `near`.
    pub fn point_from_coords(&self, a: C64, b: C64, near: &SurfacePoint) -> SurfacePoint {
        if self.is_seiberg_witten() {
            let q = self.q_poly().expect("SW Q").eval(b);
            SurfacePoint::new(b, a, q / a)
        } else {
            let (s, _, _) = self.surface_rhs(b, a);
            SurfacePoint::new(b, sqrt_nearest(s, near.y), a)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    fn k3_simple() -> SurfaceFamily {
        let mut g = vec![0.0; 13];
        g[0] = 1.0;
        g[12] = 1.0;
        SurfaceFamily::elliptic_k3(Poly::zero(), Poly::from_real(&g)).unwrap()
    }

    #[test]
    fn section_examples() {
        let k3 = k3_simple();
        let p = k3.section_polynomial(&[c(1.0), c(0.0), c(0.0), c(0.0), c(0.0)]).unwrap();
        assert_eq!(p, Poly::monomial(4, c(1.0)));
        let n = SurfaceFamily::neumann(vec![1.0, 2.0, 3.0], 1.0).unwrap();
        let p = n.section_polynomial(&[c(-4.0), c(3.0)]).unwrap();
        assert_eq!(p, Poly::from_real(&[3.0, -4.0, 1.0]));
        let sw = SurfaceFamily::seiberg_witten(2, c(1.0), vec![]).unwrap();
        assert_eq!(sw.section_polynomial(&[c(1.0)]).unwrap(), Poly::from_real(&[1.0, 0.0, 1.0]));
        assert!(matches!(
            k3.section_polynomial(&[c(1.0)]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn curve_examples() {
        let k3 = k3_simple();
        let curve = k3.cut_curve(&[C64::new(0.0, 0.0); 5]).unwrap();
        assert_eq!(curve.degree(), 12);
        assert_eq!(curve.genus(), 5);
        for b in curve.branch_points() {
            assert!((b.norm() - 1.0).abs() < 1e-12);
        }
        let n = SurfaceFamily::neumann(vec![1.0, 2.0, 3.0], 1.0).unwrap();
        assert!(matches!(
            n.cut_curve(&[c(-4.0), c(3.0)]),
            Err(Error::SingularCurve { .. })
        ));
        let sw = SurfaceFamily::seiberg_witten(2, c(1.0), vec![]).unwrap();
        let u2 = C64::new(0.3, -0.2);
        let curve = sw.cut_curve(&[u2]).unwrap();
        let want = &(&Poly::new(vec![u2, c(0.0), c(1.0)]) * &Poly::new(vec![u2, c(0.0), c(1.0)]))
            - &Poly::constant(c(4.0));
        assert_eq!(curve.f(), &want);
        assert_eq!(curve.genus(), 1);
    }

    #[test]
    fn lift_examples() {
        let k3 = k3_simple();
        let u = [C64::new(0.0, 0.0); 5];
        let xs = [c(0.0), c(0.3), c(-0.4), C64::new(0.1, 0.5), c(0.7)];
        let cfg = k3.lift_points(&u, &xs, &[1.0; 5]).unwrap();
        assert_eq!(cfg.points[0], SurfacePoint::new(c(0.0), c(1.0), c(0.0)));
        let cfg = k3.lift_points(&u, &xs, &[-1.0; 5]).unwrap();
        assert_eq!(cfg.points[0], SurfacePoint::new(c(0.0), c(-1.0), c(0.0)));
        let (pair, w) = k3.holomorphic_two_form(&cfg.points[0]).unwrap();
        assert_eq!((pair, w), (CoordPair::ZX, c(-1.0)));
        assert!(matches!(
            k3.holomorphic_two_form(&SurfacePoint::new(c(0.0), c(0.0), c(0.0))),
            Err(Error::OnDivisor)
        ));

        let sw = SurfaceFamily::seiberg_witten(2, c(1.0), vec![]).unwrap();
        let cfg = sw.lift_points(&[c(0.0)], &[c(2.0)], &[1.0]).unwrap();
        let pt = cfg.points[0];
        let y = (4.0 + 2.0 * 3f64.sqrt()) / 2.0;
        assert!((pt.y - c(y)).norm() < 1e-14);
        assert!((pt.y * pt.z - c(1.0)).norm() < 1e-14);
        assert!(sw.surface_residual(&pt) < 1e-14);
    }

    #[test]
    fn points_to_u_examples() {
        let k3 = k3_simple();
        let pts: Vec<_> = (0..5)
            .map(|i| {
                let x = c(i as f64);
                let z = x.powu(4);
                SurfacePoint::new(x, c(7.0), z)
            })
            .collect();
        let u = k3.points_to_u(&Configuration::new(pts.clone())).unwrap();
        for (k, want) in [1.0, 0.0, 0.0, 0.0, 0.0].iter().enumerate() {
            assert!((u[k] - c(*want)).norm() < 1e-10);
        }
        // closed form for the leading Hamiltonian
        let mut u1 = C64::new(0.0, 0.0);
        for j in 0..5 {
            let mut den = c(1.0);
            for k in 0..5 {
                if k != j {
                    den *= pts[j].x - pts[k].x;
                }
            }
            u1 += pts[j].z / den;
        }
        assert!((u1 - c(1.0)).norm() < 1e-12);

        let re = SurfaceFamily::rational_elliptic(Poly::zero(), Poly::from_real(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]), c(1.0)).unwrap();
        let cfg = Configuration::new(vec![
            SurfacePoint::new(c(0.0), c(1.0), c(2.0)),
            SurfacePoint::new(c(1.0), c(1.0), c(4.0)),
        ]);
        let u = re.points_to_u(&cfg).unwrap();
        assert!((u[0] - c(1.0)).norm() < 1e-13 && (u[1] - c(2.0)).norm() < 1e-13);
    }

    #[test]
    fn remark_four_preset() {
        let k3 = k3_simple();
        let u5 = C64::new(0.4, 0.1);
        let curve = k3.cut_curve(&[c(0.0), c(0.0), c(0.0), c(0.0), u5]).unwrap();
        assert_eq!(curve.degree(), 12);
        assert_eq!(curve.genus(), 5);
    }
}
