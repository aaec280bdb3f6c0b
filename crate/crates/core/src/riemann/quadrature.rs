//! Globally adaptive Gauss–Kronrod (7/15) quadrature for vector-valued
//! integrands on a real interval.
//!
//! All components share one mesh, so a family of differentials is integrated
//! with a single set of integrand evaluations. The final mesh is returned so
//! callers can re-evaluate a perturbed integrand on exactly the same rule.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_subdivisions: 1 << 14,
        }
    }
}

impl QuadratureSettings {
    /// Same settings with both tolerances multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        QuadratureSettings {
            rel_tol: self.rel_tol * factor,
            abs_tol: self.abs_tol * factor,
            max_subdivisions: self.max_subdivisions,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.max_subdivisions > 0) {
            return Err(Error::InvalidArgument(
                "quadrature tolerances must be positive".into(),
            ));
        }
        Ok(())
    }
}

// Kronrod abscissae on [0, 1]; odd indices are the Gauss points.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One quadrature node of a finished mesh: abscissa and weight (interval
/// scaling included).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshNode {
    pub s: f64,
    pub w: f64,
}

#[derive(Clone, Debug)]
pub struct QuadResult {
    pub value: Vec<C64>,
    pub error: f64,
    pub mesh: Vec<MeshNode>,
}

struct Interval {
    a: f64,
    b: f64,
    value: Vec<C64>,
    error: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then(other.a.total_cmp(&self.a))
    }
}

/// Fifteen abscissae of the Kronrod rule on `[a, b]` with their weights.
pub fn kronrod_nodes(a: f64, b: f64) -> [(f64, f64); 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [(0.0, 0.0); 15];
    for i in 0..7 {
        out[2 * i] = (c - h * XGK[i], h * WGK[i]);
        out[2 * i + 1] = (c + h * XGK[i], h * WGK[i]);
    }
    out[14] = (c, h * WGK[7]);
    out
}

fn apply_rule<F>(f: &mut F, a: f64, b: f64, dim: usize, buf: &mut [C64]) -> Result<(Vec<C64>, f64)>
where
    F: FnMut(f64, &mut [C64]) -> Result<()>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = vec![C64::new(0.0, 0.0); dim];
    let mut gauss = vec![C64::new(0.0, 0.0); dim];
    let mut add = |s: f64, wk: f64, wg: f64, f: &mut F, buf: &mut [C64]| -> Result<()> {
        f(s, buf)?;
        for k in 0..dim {
            kron[k] += buf[k] * wk;
            gauss[k] += buf[k] * wg;
        }
        Ok(())
    };
    for i in 0..7 {
        let wg = if i % 2 == 1 { WG[i / 2] } else { 0.0 };
        add(c - h * XGK[i], WGK[i], wg, f, buf)?;
        add(c + h * XGK[i], WGK[i], wg, f, buf)?;
    }
    add(c, WGK[7], WG[3], f, buf)?;
    let mut err = 0.0f64;
    for k in 0..dim {
        kron[k] *= h;
        gauss[k] *= h;
        err = err.max((kron[k] - gauss[k]).norm());
    }
    if kron.iter().any(|v| !v.is_finite()) {
        return Err(Error::ToleranceNotMet("integrand not finite".into()));
    }
    Ok((kron, err))
}

/// Integrate `f` over `[a, b]`; `f(s, out)` writes `dim` components.
///
/// Stops when the summed error estimate is below
/// `max(abs_tol, rel_tol * max_k |I_k|)`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, dim: usize, settings: &QuadratureSettings) -> Result<QuadResult>
where
    F: FnMut(f64, &mut [C64]) -> Result<()>,
{
    let mut buf = vec![C64::new(0.0, 0.0); dim];
    if a == b {
        return Ok(QuadResult {
            value: vec![C64::new(0.0, 0.0); dim],
            error: 0.0,
            mesh: Vec::new(),
        });
    }
    let (value, error) = apply_rule(&mut f, a, b, dim, &mut buf)?;
    let mut heap = BinaryHeap::new();
    heap.push(Interval { a, b, value, error });
    let mut intervals = 1usize;
    loop {
        let mut total = vec![C64::new(0.0, 0.0); dim];
        let mut err = 0.0;
        for iv in heap.iter() {
            for k in 0..dim {
                total[k] += iv.value[k];
            }
            err += iv.error;
        }
        let scale = total.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if err <= settings.abs_tol.max(settings.rel_tol * scale) {
            let mut ivs: Vec<Interval> = heap.into_vec();
            ivs.sort_by(|x, y| x.a.total_cmp(&y.a));
            let mut mesh = Vec::with_capacity(15 * ivs.len());
            for iv in &ivs {
                mesh.extend(kronrod_nodes(iv.a, iv.b).iter().map(|&(s, w)| MeshNode { s, w }));
            }
            // summation in mesh order keeps the result independent of heap layout
            let mut value = vec![C64::new(0.0, 0.0); dim];
            for iv in &ivs {
                for k in 0..dim {
                    value[k] += iv.value[k];
                }
            }
            return Ok(QuadResult { value, error: err, mesh });
        }
        if intervals >= settings.max_subdivisions {
            return Err(Error::ToleranceNotMet(format!(
                "error estimate {err:.3e} after {intervals} subdivisions"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a.min(worst.b) && mid < worst.a.max(worst.b)) {
            return Err(Error::ToleranceNotMet("interval underflow".into()));
        }
        for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = apply_rule(&mut f, lo, hi, dim, &mut buf)?;
            heap.push(Interval { a: lo, b: hi, value, error });
        }
        intervals += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_exact_to_degree_22() {
        for p in 0..=22 {
            let got: f64 = kronrod_nodes(-1.0, 1.0).iter().map(|&(s, w)| w * s.powi(p)).sum();
            let want = if p % 2 == 0 { 2.0 / (p as f64 + 1.0) } else { 0.0 };
            assert!((got - want).abs() < 1e-14, "degree {p}: {got} vs {want}");
        }
    }

    #[test]
    fn gauss_exact_to_degree_13() {
        for p in 0..=13 {
            let mut got = WG[3] * 0f64.powi(p);
            for i in 0..3 {
                let x = XGK[2 * i + 1];
                got += WG[i] * (x.powi(p) + (-x).powi(p));
            }
            let want = if p % 2 == 0 { 2.0 / (p as f64 + 1.0) } else { 0.0 };
            assert!((got - want).abs() < 1e-14, "degree {p}");
        }
    }

    #[test]
    fn adaptive_handles_peaks() {
        let settings = QuadratureSettings::default();
        let r = integrate(
            |s, out| {
                out[0] = C64::new(1.0 / (1e-4 + s * s), 0.0);
                out[1] = C64::new(0.0, s.exp());
                Ok(())
            },
            -1.0,
            1.0,
            2,
            &settings,
        )
        .unwrap();
        let want = 2.0 / 1e-2 * (1.0f64 / 1e-2).atan();
        assert!((r.value[0].re - want).abs() < 1e-10 * want);
        assert!((r.value[1].im - (1f64.exp() - (-1f64).exp())).abs() < 1e-12);
        let mesh_sum: f64 = r.mesh.iter().map(|n| n.w).sum();
        assert!((mesh_sum - 2.0).abs() < 1e-13);
    }

    #[test]
    fn reversed_interval_negates() {
        let s = QuadratureSettings::default();
        let f = |x: f64, out: &mut [C64]| {
            out[0] = C64::new(x.sin(), x.cos());
            Ok(())
        };
        let fwd = integrate(f, 0.0, 2.0, 1, &s).unwrap();
        let bwd = integrate(f, 2.0, 0.0, 1, &s).unwrap();
        assert!((fwd.value[0] + bwd.value[0]).norm() < 1e-14);
    }
}
