//! Complex polynomials in one and two variables.
//!
//! Coefficients are stored in ascending order: `coeffs[i]` multiplies `x^i`.
//! The zero polynomial has no coefficients. Everything the surface families
//! need (sections, curve equations, the Neumann and Seiberg–Witten auxiliary
//! polynomials) is built from these two types.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Default backward-error tolerance for [`Poly::roots`].
pub const ROOT_TOL: f64 = 1e-12;

/// Relative node separation below which interpolation refuses to proceed.
pub const NODE_SEPARATION: f64 = 1e-12;

/// Relative singular-value threshold used by [`constrained_fit`].
pub const FIT_RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<C64>", into = "Vec<C64>")]
pub struct Poly {
    coeffs: Vec<C64>,
}

impl From<Vec<C64>> for Poly {
    fn from(coeffs: Vec<C64>) -> Self {
        Poly::new(coeffs)
    }
}

impl From<Poly> for Vec<C64> {
    fn from(p: Poly) -> Self {
        p.coeffs
    }
}

impl Poly {
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == C64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Poly::new(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: C64) -> Self {
        Poly::new(vec![c])
    }

    /// `c * x^degree`
    pub fn monomial(degree: usize, c: C64) -> Self {
        let mut coeffs = vec![C64::new(0.0, 0.0); degree + 1];
        coeffs[degree] = c;
        Poly::new(coeffs)
    }

    /// Monic polynomial with the given roots, scaled by `lead`.
    pub fn from_roots(roots: &[C64], lead: C64) -> Self {
        let mut p = Poly::constant(lead);
        for &r in roots {
            p = &p * &Poly::new(vec![-r, C64::new(1.0, 0.0)]);
        }
        p
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Coefficient of `x^i` (zero beyond the stored range).
    pub fn coeff(&self, i: usize) -> C64 {
        self.coeffs.get(i).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> C64 {
        self.coeffs.last().copied().unwrap_or_default()
    }

    /// Horner evaluation.
    pub fn eval(&self, x: C64) -> C64 {
        self.coeffs
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    /// Value and first derivative in one Horner pass.
    pub fn eval_with_derivative(&self, x: C64) -> (C64, C64) {
        let zero = C64::new(0.0, 0.0);
        let mut p = zero;
        let mut dp = zero;
        for &c in self.coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    /// `Σ |c_i| r^i`, the natural magnitude against which `|p(x)|` is judged at `|x| = r`.
    pub fn eval_abs(&self, r: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    /// `Σ |c_i|`
    pub fn norm1(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        )
    }

    /// `t^n p(1/t)`; requires `n >= deg p`.
    pub fn reversed(&self, n: usize) -> Poly {
        let mut coeffs = vec![C64::new(0.0, 0.0); n + 1];
        for (i, &c) in self.coeffs.iter().enumerate() {
            assert!(i <= n, "reversal degree below polynomial degree");
            coeffs[n - i] = c;
        }
        Poly::new(coeffs)
    }

    /// `p(q(x))`
    pub fn compose(&self, inner: &Poly) -> Poly {
        self.coeffs
            .iter()
            .rev()
            .fold(Poly::zero(), |acc, &c| &(&acc * inner) + &Poly::constant(c))
    }

    pub fn scale(&self, s: C64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// Polynomial long division, `self = q * d + r`.
    pub fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        let dd = d.degree().expect("division by the zero polynomial");
        let Some(n) = self.degree() else {
            return (Poly::zero(), Poly::zero());
        };
        if n < dd {
            return (Poly::zero(), self.clone());
        }
        let lead = d.leading();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![C64::new(0.0, 0.0); n - dd + 1];
        for k in (0..=n - dd).rev() {
            let q = rem[k + dd] / lead;
            quot[k] = q;
            for (i, &dc) in d.coeffs.iter().enumerate() {
                rem[k + i] -= q * dc;
            }
        }
        rem.truncate(dd);
        (Poly::new(quot), Poly::new(rem))
    }

    /// Quotient of synthetic division by `(x - r)`; the remainder is dropped.
    pub fn deflate(&self, r: C64) -> Poly {
        let Some(n) = self.degree() else {
            return Poly::zero();
        };
        if n == 0 {
            return Poly::zero();
        }
        let mut q = vec![C64::new(0.0, 0.0); n];
        let mut acc = C64::new(0.0, 0.0);
        for i in (1..=n).rev() {
            acc = acc * r + self.coeffs[i];
            q[i - 1] = acc;
        }
        Poly::new(q)
    }

    /// All roots with multiplicity.
    ///
    /// Eigenvalues of the companion matrix seed a simultaneous Newton polish
    /// (each root corrected against the polynomial deflated by the others),
    /// which is iterated until every root has backward error below `tol`.
    pub fn roots(&self, tol: f64) -> Result<Vec<C64>> {
        let n = match self.degree() {
            None | Some(0) => {
                return Err(Error::InvalidArgument(
                    "root finding needs degree >= 1".into(),
                ))
            }
            Some(n) => n,
        };
        if n == 1 {
            return Ok(vec![-self.coeffs[0] / self.coeffs[1]]);
        }
        let mut roots = companion_eigenvalues(self).unwrap_or_else(|| self.circle_guess());
        if roots.len() != n || roots.iter().any(|r| !r.is_finite()) {
            roots = self.circle_guess();
        }
        let dp = self.derivative();
        let backward = |r: C64| -> f64 {
            let scale = self.eval_abs(r.norm());
            if scale == 0.0 {
                0.0
            } else {
                self.eval(r).norm() / scale
            }
        };
        for _ in 0..500 {
            let mut max_step = 0.0f64;
            for i in 0..n {
                let r = roots[i];
                let p = self.eval(r);
                if p == C64::new(0.0, 0.0) {
                    continue;
                }
                let ratio = p / dp.eval(r);
                let repulsion: C64 = roots
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &rj)| C64::new(1.0, 0.0) / (r - rj))
                    .sum();
                let step = ratio / (C64::new(1.0, 0.0) - ratio * repulsion);
                if step.is_finite() {
                    roots[i] = r - step;
                    max_step = max_step.max(step.norm() / r.norm().max(1.0));
                }
            }
            if max_step < 1e-15 && roots.iter().all(|&r| backward(r) < tol) {
                break;
            }
        }
        let worst = roots.iter().map(|&r| backward(r)).fold(0.0, f64::max);
        if !(worst < tol) {
            return Err(Error::NonConvergence(format!(
                "root polish reached backward error {worst:.3e}, tolerance {tol:.1e}"
            )));
        }
        Ok(roots)
    }

    fn circle_guess(&self) -> Vec<C64> {
        let n = self.degree().unwrap_or(0);
        let lead = self.leading().norm();
        let radius = self
            .coeffs
            .iter()
            .take(n)
            .map(|c| c.norm() / lead)
            .fold(0.0, f64::max)
            .max(1e-3)
            .powf(1.0 / n as f64);
        (0..n)
            .map(|k| C64::from_polar(radius, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64))
            .collect()
    }
}

fn companion_eigenvalues(p: &Poly) -> Option<Vec<C64>> {
    let n = p.degree()?;
    let lead = p.leading();
    let mut m = DMatrix::<C64>::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = -p.coeffs[n - 1 - j] / lead;
    }
    for i in 1..n {
        m[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    let schur = nalgebra::Schur::try_new(m, f64::EPSILON, 10_000)?;
    let (_, t) = schur.unpack();
    Some((0..n).map(|i| t[(i, i)]).collect())
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![C64::new(0.0, 0.0); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(self, rhs: Poly) -> Poly {
        &self + &rhs
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(self, rhs: Poly) -> Poly {
        &self - &rhs
    }
}

impl Mul for Poly {
    type Output = Poly;
    fn mul(self, rhs: Poly) -> Poly {
        &self * &rhs
    }
}

/// Polynomial in `(x, z)`; `coeffs[i][j]` multiplies `x^i z^j`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BiPoly {
    coeffs: Vec<Vec<C64>>,
}

impl BiPoly {
    pub fn new(coeffs: Vec<Vec<C64>>) -> Self {
        BiPoly { coeffs }
    }

    pub fn coeffs(&self) -> &[Vec<C64>] {
        &self.coeffs
    }

    pub fn total_degree(&self) -> Option<usize> {
        let mut deg = None;
        for (i, row) in self.coeffs.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if *c != C64::new(0.0, 0.0) {
                    deg = Some(deg.map_or(i + j, |d: usize| d.max(i + j)));
                }
            }
        }
        deg
    }

    pub fn eval(&self, x: C64, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, row| {
            acc * x + row.iter().rev().fold(C64::new(0.0, 0.0), |a, &c| a * z + c)
        })
    }

    pub fn eval_abs(&self, rx: f64, rz: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, row| {
            acc * rx + row.iter().rev().fold(0.0, |a, c| a * rz + c.norm())
        })
    }

    /// `∂/∂z`, exact on the coefficients.
    pub fn dz(&self) -> BiPoly {
        BiPoly::new(
            self.coeffs
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .skip(1)
                        .map(|(j, &c)| c * j as f64)
                        .collect()
                })
                .collect(),
        )
    }

    /// `∂/∂x`, exact on the coefficients.
    pub fn dx(&self) -> BiPoly {
        BiPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, row)| row.iter().map(|&c| c * i as f64).collect())
                .collect(),
        )
    }

    /// `F(x, P(x))` as a polynomial in `x`.
    pub fn substitute_z(&self, p: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (i, row) in self.coeffs.iter().enumerate() {
            let in_z = Poly::new(row.clone()).compose(p);
            let shifted = &Poly::monomial(i, C64::new(1.0, 0.0)) * &in_z;
            out = &out + &shifted;
        }
        out
    }
}

fn node_scale(xs: impl Iterator<Item = C64>) -> f64 {
    xs.map(|x| x.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE)
}

fn check_distinct(xs: &[C64]) -> Result<()> {
    let scale = node_scale(xs.iter().copied()).max(1.0);
    for i in 0..xs.len() {
        for j in 0..i {
            if (xs[i] - xs[j]).norm() < NODE_SEPARATION * scale {
                return Err(Error::DuplicateNode { i: j, j: i });
            }
        }
    }
    Ok(())
}

/// Unique polynomial of degree `< nodes.len()` through the given `(x, z)` data.
///
/// Newton divided differences, expanded to monomial coefficients.
pub fn lagrange_interpolate(nodes: &[(C64, C64)]) -> Result<Poly> {
    let xs: Vec<C64> = nodes.iter().map(|n| n.0).collect();
    check_distinct(&xs)?;
    let n = nodes.len();
    let mut dd: Vec<C64> = nodes.iter().map(|n| n.1).collect();
    for level in 1..n {
        for i in (level..n).rev() {
            dd[i] = (dd[i] - dd[i - 1]) / (xs[i] - xs[i - level]);
        }
    }
    let mut p = Poly::zero();
    for i in (0..n).rev() {
        p = &(&p * &Poly::new(vec![-xs[i], C64::new(1.0, 0.0)])) + &Poly::constant(dd[i]);
    }
    Ok(p)
}

/// Polynomial through `nodes` with some coefficients pinned.
///
/// The degree is `nodes.len() + fixed.len() - 1`; the free coefficients are
/// those whose degree is not listed in `fixed`. The reduced Vandermonde system
/// is column-equilibrated and rejected when its smallest singular value falls
/// below `FIT_RANK_TOL` relative to the largest.
pub fn constrained_fit(nodes: &[(C64, C64)], fixed: &[(usize, C64)]) -> Result<Poly> {
    let n = nodes.len();
    let degree = (n + fixed.len())
        .checked_sub(1)
        .ok_or_else(|| Error::InvalidArgument("constrained fit with no data".into()))?;
    let free: Vec<usize> = (0..=degree)
        .filter(|d| !fixed.iter().any(|(fd, _)| fd == d))
        .collect();
    if free.len() != n {
        return Err(Error::DimensionMismatch {
            expected: free.len(),
            found: n,
        });
    }
    let pinned = fixed
        .iter()
        .fold(Poly::zero(), |acc, &(d, c)| &acc + &Poly::monomial(d, c));

    let mut a = DMatrix::<C64>::zeros(n, n);
    let mut rhs = nalgebra::DVector::<C64>::zeros(n);
    for (row, &(x, z)) in nodes.iter().enumerate() {
        for (col, &d) in free.iter().enumerate() {
            a[(row, col)] = x.powu(d as u32);
        }
        rhs[row] = z - pinned.eval(x);
    }
    let mut col_scale = vec![1.0; n];
    for col in 0..n {
        let norm = a.column(col).norm();
        if norm > 0.0 {
            col_scale[col] = norm;
            a.column_mut(col).unscale_mut(norm);
        }
    }
    let sv = a.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if n > 0 && (smax == 0.0 || smin < FIT_RANK_TOL * smax) {
        return Err(Error::SingularSystem(format!(
            "condition estimate {:.3e}",
            smax / smin
        )));
    }
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSystem("LU solve failed".into()))?;
    let mut coeffs = vec![C64::new(0.0, 0.0); degree + 1];
    for (col, &d) in free.iter().enumerate() {
        coeffs[d] = sol[col] / col_scale[col];
    }
    for &(d, c) in fixed {
        coeffs[d] = c;
    }
    Ok(Poly::new(coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn eval_examples() {
        let p = Poly::from_real(&[3.0, -4.0, 1.0]);
        assert_eq!(p.eval(c(2.0)), c(-1.0));
        assert_eq!(Poly::zero().eval(c(7.0)), c(0.0));
        assert_eq!(Poly::zero().degree(), None);
        let mut x12 = vec![0.0; 13];
        x12[0] = 1.0;
        x12[12] = 1.0;
        assert_eq!(Poly::from_real(&x12).eval(c(0.0)), c(1.0));
    }

    #[test]
    fn trims_trailing_zeros() {
        let p = Poly::from_real(&[1.0, 2.0, 0.0, 0.0]);
        assert_eq!(p.degree(), Some(1));
        assert_eq!(p.leading(), c(2.0));
    }

    #[test]
    fn roots_of_unity_type() {
        let mut x12 = vec![0.0; 13];
        x12[0] = 1.0;
        x12[12] = 1.0;
        let roots = Poly::from_real(&x12).roots(ROOT_TOL).unwrap();
        assert_eq!(roots.len(), 12);
        for r in &roots {
            assert!((r.norm() - 1.0).abs() < 1e-12);
            assert!((r.powu(12) + 1.0).norm() < 1e-11);
        }
        // twelve distinct ones
        for i in 0..12 {
            for j in 0..i {
                assert!((roots[i] - roots[j]).norm() > 0.1);
            }
        }
    }

    #[test]
    fn roots_simple() {
        let p = Poly::from_roots(&[c(1.0), c(2.0), c(3.0)], c(1.0));
        let mut r = p.roots(ROOT_TOL).unwrap();
        r.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        for (got, want) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - c(want)).norm() < 1e-12);
        }
        let q = Poly::from_real(&[1.0, 0.0, 1.0]);
        let mut r = q.roots(ROOT_TOL).unwrap();
        r.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!((r[0] - C64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((r[1] - C64::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn roots_reject_constant() {
        assert!(Poly::constant(c(2.0)).roots(ROOT_TOL).is_err());
    }

    #[test]
    fn lagrange_examples() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let quartic: Vec<_> = xs.iter().map(|&x| (c(x), c(x.powi(4)))).collect();
        let p = lagrange_interpolate(&quartic).unwrap();
        let want = [0.0, 0.0, 0.0, 0.0, 1.0];
        for (i, w) in want.iter().enumerate() {
            assert!((p.coeff(i) - c(*w)).norm() < 1e-12);
        }
        let ones: Vec<_> = xs.iter().map(|&x| (c(x), c(1.0))).collect();
        let p = lagrange_interpolate(&ones).unwrap();
        assert!((p.coeff(0) - c(1.0)).norm() < 1e-14);
        assert!(p.coeffs().iter().skip(1).all(|c| c.norm() < 1e-14));
        let dup = [(c(0.0), c(1.0)), (c(0.0), c(2.0)), (c(1.0), c(0.0))];
        assert!(matches!(
            lagrange_interpolate(&dup),
            Err(Error::DuplicateNode { .. })
        ));
    }

    #[test]
    fn constrained_fit_examples() {
        // rational elliptic, c = 1
        let p = constrained_fit(&[(c(0.0), c(2.0)), (c(1.0), c(4.0))], &[(2, c(1.0))]).unwrap();
        assert!((p.coeff(2) - c(1.0)).norm() < 1e-14);
        assert!((p.coeff(1) - c(1.0)).norm() < 1e-13);
        assert!((p.coeff(0) - c(2.0)).norm() < 1e-13);
        // Seiberg–Witten N_c = 2: monic, traceless
        let p = constrained_fit(&[(c(3.0), c(10.0))], &[(2, c(1.0)), (1, c(0.0))]).unwrap();
        assert!((p.coeff(0) - c(1.0)).norm() < 1e-13);
        // repeated node
        let err = constrained_fit(&[(c(1.0), c(1.0)), (c(1.0), c(2.0))], &[(2, c(0.0))]);
        assert!(matches!(err, Err(Error::SingularSystem(_))));
    }

    #[test]
    fn bipoly_substitution_and_derivative() {
        // F = x z^2 + 2 z + x^3
        let mut m = vec![vec![C64::new(0.0, 0.0); 3]; 4];
        m[1][2] = c(1.0);
        m[0][1] = c(2.0);
        m[3][0] = c(1.0);
        let f = BiPoly::new(m);
        assert_eq!(f.total_degree(), Some(3));
        let p = Poly::from_real(&[1.0, 2.0]);
        let fx = f.substitute_z(&p);
        for x in [0.3, -1.2, 2.0] {
            let x = c(x);
            assert!((fx.eval(x) - f.eval(x, p.eval(x))).norm() < 1e-12);
            // dz = 2 x z + 2
            let z = p.eval(x);
            assert!((f.dz().eval(x, z) - (2.0 * x * z + 2.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn division_and_reversal() {
        let a = Poly::from_roots(&[c(1.0), c(-2.0), C64::new(0.5, 1.0)], c(3.0));
        let (q, r) = a.div_rem(&Poly::from_roots(&[c(1.0)], c(1.0)));
        assert!(r.coeffs().iter().all(|c| c.norm() < 1e-13));
        let q2 = a.deflate(c(1.0));
        assert!((&q - &q2).norm1() < 1e-13);
        let rev = a.reversed(3);
        let t = C64::new(0.3, -0.2);
        assert!((rev.eval(t) - t.powu(3) * a.eval(1.0 / t)).norm() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn cplx() -> impl Strategy<Value = C64> {
            (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| C64::new(a, b))
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn interpolation_roundtrip(coeffs in proptest::collection::vec(cplx(), 1..7),
                                       shift in cplx()) {
                let p = Poly::new(coeffs.clone());
                let n = coeffs.len();
                // nodes on a circle: separation well above 0.1
                let nodes: Vec<_> = (0..n)
                    .map(|k| {
                        let x = shift + C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.3);
                        (x, p.eval(x))
                    })
                    .collect();
                let q = lagrange_interpolate(&nodes).unwrap();
                let scale = p.max_abs_coeff().max(1.0);
                for i in 0..n {
                    prop_assert!((q.coeff(i) - p.coeff(i)).norm() < 1e-10 * scale);
                }
                let r = constrained_fit(&nodes, &[]).unwrap();
                for i in 0..n {
                    prop_assert!((q.coeff(i) - r.coeff(i)).norm() < 1e-12 * scale.max(1.0) * 10.0);
                }
            }

            #[test]
            fn roots_backward_error(coeffs in proptest::collection::vec(cplx(), 2..14)) {
                let mut coeffs = coeffs;
                if coeffs.last().unwrap().norm() < 0.1 {
                    *coeffs.last_mut().unwrap() = C64::new(1.0, 0.0);
                }
                let p = Poly::new(coeffs);
                let deg = p.degree().unwrap();
                let roots = p.roots(ROOT_TOL).unwrap();
                prop_assert_eq!(roots.len(), deg);
                for r in roots {
                    let bound = ROOT_TOL * p.norm1() * r.norm().max(1.0).powi(deg as i32);
                    prop_assert!(p.eval(r).norm() < bound);
                }
            }
        }
    }
}
