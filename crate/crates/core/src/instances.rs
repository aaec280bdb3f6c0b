//! Seeded random families and point configurations in general position.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{BiPoly, Poly};
use crate::riemann::HyperellipticCurve;
use crate::rng::SplitMix64;
use crate::surface::{Configuration, SurfaceFamily};
use crate::C64;

/// Attempts before a generator gives up on finding a nondegenerate draw.
const MAX_DRAWS: usize = 1000;

/// Smallest branch-point gap accepted, relative to the curve's scale.
pub const MIN_BRANCH_GAP: f64 = 0.05;
/// Smallest gap between the `x_j`, relative to the curve's scale.
pub const MIN_POINT_GAP: f64 = 0.15;
/// Smallest distance from an `x_j` to a branch point, relative.
pub const MIN_BRANCH_DISTANCE: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyKind {
    EllipticK3,
    DoubleCoverK3,
    RationalElliptic,
    /// `N + 1` constants, genus `N`.
    NeumannRational { n: usize },
    SeibergWittenAffine { nc: usize, nf: usize },
}

impl FamilyKind {
    /// The five families at the sizes used by the default suites.
    pub fn defaults() -> Vec<FamilyKind> {
        vec![
            FamilyKind::EllipticK3,
            FamilyKind::DoubleCoverK3,
            FamilyKind::RationalElliptic,
            FamilyKind::NeumannRational { n: 2 },
            FamilyKind::SeibergWittenAffine { nc: 3, nf: 0 },
        ]
    }
}

fn disc_poly(rng: &mut SplitMix64, degree: usize) -> Poly {
    Poly::new((0..=degree).map(|_| rng.unit_disc()).collect())
}

/// Family with coefficients drawn from the unit disc.
pub fn random_family(kind: FamilyKind, rng: &mut SplitMix64) -> Result<SurfaceFamily> {
    match kind {
        FamilyKind::EllipticK3 => SurfaceFamily::elliptic_k3(disc_poly(rng, 8), disc_poly(rng, 12)),
        FamilyKind::DoubleCoverK3 => {
            let mut coeffs = vec![vec![C64::new(0.0, 0.0); 7]; 7];
            for (i, row) in coeffs.iter_mut().enumerate() {
                for (j, c) in row.iter_mut().enumerate() {
                    if i + j <= 6 {
                        *c = rng.unit_disc();
                    }
                }
            }
            SurfaceFamily::double_cover_k3(BiPoly::new(coeffs))
        }
        FamilyKind::RationalElliptic => {
            let f = disc_poly(rng, 4);
            let g = disc_poly(rng, 6);
            let c = rng.unit_disc();
            SurfaceFamily::rational_elliptic(f, g, c)
        }
        FamilyKind::NeumannRational { n } => {
            let c = (0..=n).map(|i| i as f64 + rng.uniform(-0.3, 0.3)).collect();
            SurfaceFamily::neumann(c, 1.0)
        }
        FamilyKind::SeibergWittenAffine { nc, nf } => {
            let arg = rng.uniform(0.0, std::f64::consts::TAU);
            let lambda = C64::from_polar(rng.uniform(0.5, 1.0), arg);
            let masses = (0..nf).map(|_| rng.unit_disc()).collect();
            SurfaceFamily::seiberg_witten(nc, lambda, masses)
        }
    }
}

/// A family, a point on its base, and a configuration of `g` points on the
/// corresponding curve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Instance {
    pub family: SurfaceFamily,
    pub u: Vec<C64>,
    pub config: Configuration,
    pub curve: HyperellipticCurve,
}

impl Instance {
    /// Typical size of the curve: the geometric mean of branch-point moduli.
    pub fn scale(&self) -> f64 {
        self.curve.branch_scale()
    }
}

/// Reasons a draw is rejected; `None` when the instance is in general
/// position.
pub fn degeneracy(curve: &HyperellipticCurve, xs: &[C64]) -> Option<String> {
    let s = curve.branch_scale();
    if curve.min_branch_separation() < MIN_BRANCH_GAP * s {
        return Some("branch points too close".into());
    }
    for (i, &x) in xs.iter().enumerate() {
        let (_, d) = curve.nearest_branch(x);
        if d < MIN_BRANCH_DISTANCE * s {
            return Some(format!("point {i} too close to a branch point"));
        }
        for &other in &xs[..i] {
            if (x - other).norm() < MIN_POINT_GAP * s {
                return Some(format!("point {i} too close to another point"));
            }
        }
    }
    None
}

/// Lift `xs` with `signs`, after checking general position.
pub fn instance_from(family: SurfaceFamily, u: Vec<C64>, xs: &[C64], signs: &[f64]) -> Result<Instance> {
    let curve = family.cut_curve(&u)?;
    if let Some(reason) = degeneracy(&curve, xs) {
        return Err(Error::InvalidArgument(format!("instance not in general position: {reason}")));
    }
    let config = family.lift_points(&u, xs, signs)?;
    for (i, pt) in config.points.iter().enumerate() {
        // the two-form weight is 1/y on the surface
        if pt.y.norm() < 1e-3 * curve.branch_scale().max(1.0) {
            return Err(Error::InvalidArgument(format!("point {i} lies near the divisor y = 0")));
        }
    }
    Ok(Instance {
        family,
        u,
        config,
        curve,
    })
}

/// Random `u` and points in the unit disc for a fixed family, redrawn until
/// the instance is in general position.
pub fn random_instance(family: &SurfaceFamily, rng: &mut SplitMix64) -> Result<Instance> {
    let g = family.genus();
    for _ in 0..MAX_DRAWS {
        let u: Vec<C64> = (0..g).map(|_| rng.unit_disc()).collect();
        let xs: Vec<C64> = (0..g).map(|_| rng.unit_disc()).collect();
        let signs: Vec<f64> = (0..g).map(|_| rng.sign()).collect();
        match instance_from(family.clone(), u, &xs, &signs) {
            Ok(inst) => return Ok(inst),
            Err(e) if e.is_numerical() => return Err(e),
            Err(_) => continue,
        }
    }
    Err(Error::InvalidArgument(format!(
        "no instance in general position after {MAX_DRAWS} draws"
    )))
}

/// Random family of the given kind together with a random instance.
pub fn random_family_instance(kind: FamilyKind, rng: &mut SplitMix64) -> Result<Instance> {
    for _ in 0..MAX_DRAWS {
        let family = random_family(kind, rng)?;
        match random_instance(&family, rng) {
            Ok(inst) => return Ok(inst),
            Err(e) if e.is_numerical() => return Err(e),
            Err(_) => continue,
        }
    }
    Err(Error::InvalidArgument(format!(
        "no family of kind {kind:?} in general position"
    )))
}

/// `count` instances from consecutive forks of `seed`.
pub fn seeded_instances(kind: FamilyKind, seed: u64, count: usize) -> Result<Vec<Instance>> {
    let mut rng = SplitMix64::new(seed);
    (0..count)
        .map(|_| random_family_instance(kind, &mut rng.fork()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instances_are_reproducible_and_valid() {
        for kind in FamilyKind::defaults() {
            let a = seeded_instances(kind, 7, 2).unwrap();
            let b = seeded_instances(kind, 7, 2).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert_eq!(x.u, y.u);
                assert_eq!(x.config, y.config);
                for pt in &x.config.points {
                    assert!(x.family.surface_residual(pt) < 1e-10);
                }
                assert!(degeneracy(&x.curve, &x.config.xs()).is_none());
            }
        }
    }
}
