//! Hyperelliptic curves `y² = F(x)`: sheet tracking along explicit paths,
//! contour integrals of differentials, tails to infinity, and cycle periods.
//!
//! Sheets are never chosen by a global branch-cut convention. Every `y` value
//! is obtained by continuation from an explicit starting value, which keeps
//! results stable when the curve moves with its parameters.

mod continuation;
mod differential;
mod integral;
mod path;
mod periods;
pub mod quadrature;

pub use continuation::{sqrt_nearest, Track};
pub use differential::{Differential, DifferentialSet};
pub use integral::{
    continue_y, integrate_along, integrate_differential, integrate_path_with, integrate_to_infinity,
    route, tail_integral,
    FrozenNode, PathIntegral, TailIntegral,
};
pub use path::{default_clearance, Path, Segment};
pub use periods::{branch_pair_period, detour_pair_period, infinity_pair_period, PairPeriod};
pub use quadrature::QuadratureSettings;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{Poly, ROOT_TOL};
use crate::C64;

/// Coefficients below this fraction of the largest are treated as absent
/// when deciding the effective degree of `F`.
pub const LEADING_CUTOFF: f64 = 1e-13;

/// Branch points closer than this (relative) make the curve singular.
pub const BRANCH_SEPARATION: f64 = 1e-8;

/// `|F(x)|` below this (relative) counts as sitting on a branch point.
pub const BRANCH_HIT: f64 = 1e-12;

/// Sheet-equidistance threshold at which continuation gives up.
pub const LOST_TRACK: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperellipticCurve {
    f: Poly,
    genus: usize,
    branch_points: Vec<C64>,
    leading: C64,
}

impl HyperellipticCurve {
    /// Validate `F` against the genus and compute its branch points.
    pub fn new(f: Poly, genus: usize) -> Result<Self> {
        if genus == 0 {
            return Err(Error::InvalidArgument("genus must be positive".into()));
        }
        let required = 2 * genus + 1;
        let degree = f.degree().unwrap_or(0);
        let cutoff = LEADING_CUTOFF * f.max_abs_coeff();
        let effective = f
            .coeffs()
            .iter()
            .rposition(|c| c.norm() > cutoff)
            .unwrap_or(0);
        if effective < degree || degree < required {
            return Err(Error::DegenerateLeading {
                degree: effective,
                required,
            });
        }
        if degree > required + 1 {
            return Err(Error::InvalidArgument(format!(
                "degree {degree} too large for genus {genus}"
            )));
        }
        let branch_points = f.roots(ROOT_TOL)?;
        let leading = f.leading();
        let curve = HyperellipticCurve {
            f,
            genus,
            branch_points,
            leading,
        };
        let scale = curve.branch_scale();
        let second = curve.f.derivative().derivative();
        let bp = &curve.branch_points;
        for i in 0..bp.len() {
            for j in 0..i {
                let d = (bp[i] - bp[j]).norm();
                let unresolved = d < 1e-4 * scale
                    && d < curve.double_root_resolution(&second, bp[i], bp[j]);
                if d < BRANCH_SEPARATION * scale || unresolved {
                    return Err(Error::SingularCurve { i: j, j: i, distance: d });
                }
            }
        }
        Ok(curve)
    }

    /// Separation below which two close computed roots cannot be told apart
    /// from a double root in double precision: a double root splits under
    /// rounding by about `sqrt(ε |F|_abs / |F''/2|)`, which is larger than
    /// the nominal separation threshold.
    fn double_root_resolution(&self, second: &Poly, a: C64, b: C64) -> f64 {
        let m = (a + b) * 0.5;
        let curvature = (second.eval(m) * 0.5).norm();
        if curvature == 0.0 {
            return 0.0;
        }
        2.0 * (8.0 * f64::EPSILON * self.f.eval_abs(m.norm()) / curvature).sqrt()
    }

    pub fn f(&self) -> &Poly {
        &self.f
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn degree(&self) -> usize {
        self.f.degree().unwrap_or(0)
    }

    /// Odd degree: a single point over `x = ∞`.
    pub fn is_odd(&self) -> bool {
        self.degree() % 2 == 1
    }

    pub fn branch_points(&self) -> &[C64] {
        &self.branch_points
    }

    pub fn leading(&self) -> C64 {
        self.leading
    }

    /// `F(x)` in factored form, which keeps its relative accuracy next to a
    /// branch point where the monomial form cancels.
    pub fn eval(&self, x: C64) -> C64 {
        self.branch_points.iter().fold(self.leading, |acc, &b| acc * (x - b))
    }

    /// The root of `F(x)` closest to `near`.
    pub fn y_near(&self, x: C64, near: C64) -> C64 {
        sqrt_nearest(self.eval(x), near)
    }

    /// Geometric mean of branch-point moduli, floored at `1e-3 · max|b|`.
    pub fn branch_scale(&self) -> f64 {
        let max = self.max_branch_modulus().max(f64::MIN_POSITIVE);
        let floor = 1e-3 * max;
        let n = self.branch_points.len() as f64;
        let log_mean = self
            .branch_points
            .iter()
            .map(|b| b.norm().max(floor).ln())
            .sum::<f64>()
            / n;
        log_mean.exp()
    }

    pub fn max_branch_modulus(&self) -> f64 {
        self.branch_points.iter().map(|b| b.norm()).fold(0.0, f64::max)
    }

    /// Radius at which paths hand over to the chart at infinity.
    pub fn infinity_radius(&self) -> f64 {
        4.0 * self.max_branch_modulus().max(1e-8)
    }

    pub fn closest_branch_pair(&self) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..self.branch_points.len() {
            for j in 0..i {
                let d = (self.branch_points[i] - self.branch_points[j]).norm();
                if best.is_none_or(|b| d < b.2) {
                    best = Some((j, i, d));
                }
            }
        }
        best
    }

    pub fn min_branch_separation(&self) -> f64 {
        self.closest_branch_pair().map_or(f64::INFINITY, |b| b.2)
    }

    /// Index of, and distance to, the branch point nearest `x`.
    pub fn nearest_branch(&self, x: C64) -> (usize, f64) {
        self.branch_points
            .iter()
            .enumerate()
            .map(|(i, b)| (i, (x - b).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("curve has branch points")
    }

    /// `BranchPointHit` when `|F(x)|` is negligible against its natural size.
    pub fn check_off_branch(&self, x: C64) -> Result<()> {
        let scale = self.f.eval_abs(x.norm()).max(f64::MIN_POSITIVE);
        if self.f.eval(x).norm() < BRANCH_HIT * scale {
            return Err(Error::BranchPointHit { x: format!("{x}") });
        }
        Ok(())
    }

    /// Relative residual of `y² = F(x)`.
    pub fn residual(&self, x: C64, y: C64) -> f64 {
        let scale = self.f.eval_abs(x.norm()).max(y.norm_sqr()).max(f64::MIN_POSITIVE);
        (y * y - self.f.eval(x)).norm() / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_circle_curve() {
        let mut c = vec![C64::new(0.0, 0.0); 13];
        c[0] = C64::new(1.0, 0.0);
        c[12] = C64::new(1.0, 0.0);
        let curve = HyperellipticCurve::new(Poly::new(c), 5).unwrap();
        assert_eq!(curve.branch_points().len(), 12);
        assert!(!curve.is_odd());
        assert!((curve.branch_scale() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degree_checks() {
        let cubic = Poly::from_real(&[1.0, 0.0, 0.0, 1.0]);
        assert!(HyperellipticCurve::new(cubic.clone(), 1).is_ok());
        assert!(matches!(
            HyperellipticCurve::new(cubic, 2),
            Err(Error::DegenerateLeading { .. })
        ));
        let nearly = Poly::from_real(&[1.0, 0.0, 0.0, 1.0, 1e-15]);
        assert!(matches!(
            HyperellipticCurve::new(nearly, 1),
            Err(Error::DegenerateLeading { .. })
        ));
        let double_root = Poly::from_roots(
            &[C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(3.0, 0.0)],
            C64::new(1.0, 0.0),
        );
        assert!(matches!(
            HyperellipticCurve::new(double_root, 1),
            Err(Error::SingularCurve { .. })
        ));
    }
}
