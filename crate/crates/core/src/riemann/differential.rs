//! Rational differentials `x^a R(x) dx / y^n` and their form in the chart at
//! infinity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::C64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Differential {
    pub x_power: usize,
    pub numerator: Poly,
}

/// Several differentials sharing the power of `y` in the denominator,
/// integrated together on one mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DifferentialSet {
    pub items: Vec<Differential>,
    pub y_power: u32,
}

impl DifferentialSet {
    /// `σ_k = x^{g-k} dx / y`, `k = 1..=g`.
    pub fn holomorphic(genus: usize) -> Self {
        DifferentialSet {
            items: (1..=genus)
                .map(|k| Differential {
                    x_power: genus - k,
                    numerator: Poly::constant(C64::new(1.0, 0.0)),
                })
                .collect(),
            y_power: 1,
        }
    }

    /// The single differential `x^{g-k} dx / y`.
    pub fn single(genus: usize, k: usize) -> Self {
        DifferentialSet {
            items: vec![Differential {
                x_power: genus - k,
                numerator: Poly::constant(C64::new(1.0, 0.0)),
            }],
            y_power: 1,
        }
    }

    pub fn dim(&self) -> usize {
        self.items.len()
    }

    fn max_power(&self) -> usize {
        self.items.iter().map(|d| d.x_power).max().unwrap_or(0)
    }

    /// Integrand values (without `dx`) at `(x, y)`.
    pub fn eval(&self, x: C64, y: C64, out: &mut [C64]) {
        let inv = C64::new(1.0, 0.0) / y.powu(self.y_power);
        let mut pow = vec![C64::new(1.0, 0.0); self.max_power() + 1];
        for i in 1..pow.len() {
            pow[i] = pow[i - 1] * x;
        }
        for (o, d) in out.iter_mut().zip(&self.items) {
            let num = if d.numerator.degree() == Some(0) {
                d.numerator.coeff(0)
            } else {
                d.numerator.eval(x)
            };
            *o = pow[d.x_power] * num * inv;
        }
    }

    /// The set rewritten in the coordinate `t` at infinity.
    pub fn tail_form(&self, genus: usize, odd: bool) -> Result<TailForm> {
        let n = self.y_power as i64;
        let g = genus as i64;
        let mut exps = Vec::with_capacity(self.items.len());
        let mut rev = Vec::with_capacity(self.items.len());
        for d in &self.items {
            let dr = d.numerator.degree().unwrap_or(0) as i64;
            let a = d.x_power as i64;
            let e = if odd {
                n * (2 * g + 1) - 2 * a - 2 * dr - 3
            } else {
                n * (g + 1) - a - dr - 2
            };
            if e < 0 {
                return Err(Error::InvalidArgument(format!(
                    "differential x^{a}·(deg {dr})/y^{n} has a pole at infinity"
                )));
            }
            exps.push(e as u32);
            rev.push(d.numerator.reversed(dr as usize));
        }
        Ok(TailForm {
            odd,
            exps,
            rev,
            y_power: self.y_power,
        })
    }
}

/// Integrand in the chart `x = 1/t` (even degree) or `x = 1/t²` (odd degree),
/// regular at `t = 0`; orientation runs from infinity inward.
#[derive(Clone, Debug)]
pub struct TailForm {
    odd: bool,
    exps: Vec<u32>,
    rev: Vec<Poly>,
    y_power: u32,
}

impl TailForm {
    pub fn eval(&self, t: f64, ytil: C64, out: &mut [C64]) {
        let inv = C64::new(1.0, 0.0) / ytil.powu(self.y_power);
        let (arg, factor) = if self.odd { (t * t, -2.0) } else { (t, -1.0) };
        let arg = C64::new(arg, 0.0);
        for ((o, &e), r) in out.iter_mut().zip(&self.exps).zip(&self.rev) {
            *o = r.eval(arg) * inv * (factor * t.powi(e as i32));
        }
    }
}
