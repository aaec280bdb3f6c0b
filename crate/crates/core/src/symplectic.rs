//! The two-form on configurations of points, its canonical form in the
//! coordinates `(u, ψ)`, Poisson brackets, and Hamiltonian flows.
//!
//! Coordinates are ordered `(a_1, b_1, …, a_g, b_g)` with `(a_j, b_j)` the
//! family's local pair at point `j`: `(z_j, x_j)`, or `(y_j, x_j)` for the
//! Seiberg–Witten family. The two-form is `Σ_j w_j da_j ∧ db_j` with
//! `w_j = 1/y_j`, and the bracket is its inverse:
//! `{F, G} = Σ_j y_j (∂F/∂b_j ∂G/∂a_j - ∂F/∂a_j ∂G/∂b_j)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::abel_jacobi::{abel_jacobi, curve_points, dpsi_dx_analytic, AbelJacobiImage};
use crate::error::{Error, Result};
use crate::ode::{self, OdeSettings};
use crate::poly::Poly;
use crate::riemann::{DifferentialSet, QuadratureSettings};
use crate::surface::{Configuration, SurfaceFamily, SurfacePoint};
use crate::C64;

/// Default finite-difference step, relative to the coordinate scale.
pub const DEFAULT_STEP: f64 = 1e-5;

/// Sign relating the bracket above to the flows: with it, the flow of `u_m`
/// gives `dψ_k/dt = δ_{mk}`. Confirmed at run time by [`calibrate_bracket_sign`].
pub const BRACKET_SIGN: f64 = 1.0;

/// Event threshold: a flow stops when `|F(x_j)|` falls below this fraction
/// of its natural size.
pub const BRANCH_APPROACH: f64 = 1e-6;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// `2g × 2g` matrix of the two-form over `(a_1, b_1, …)`.
pub fn omega_matrix(family: &SurfaceFamily, config: &Configuration) -> Result<DMatrix<C64>> {
    let n = config.len();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for (j, pt) in config.points.iter().enumerate() {
        let (_, w) = family.holomorphic_two_form(pt)?;
        m[(2 * j, 2 * j + 1)] = w;
        m[(2 * j + 1, 2 * j)] = -w;
    }
    Ok(m)
}

/// Configuration with coordinate `coord` (0 for `a`, 1 for `b`) of point `j`
/// shifted by `delta`, the dependent coordinate re-lifted on the same sheet.
pub fn shifted(family: &SurfaceFamily, config: &Configuration, j: usize, coord: usize, delta: C64) -> Configuration {
    let mut out = config.clone();
    let pt = &config.points[j];
    let (mut a, mut b) = family.coords(pt);
    if coord == 0 {
        a += delta;
    } else {
        b += delta;
    }
    out.points[j] = family.point_from_coords(a, b, pt);
    out
}

fn coord_step(family: &SurfaceFamily, pt: &SurfacePoint, coord: usize, h: f64) -> f64 {
    let (a, b) = family.coords(pt);
    let v = if coord == 0 { a } else { b };
    h * v.norm().max(1.0)
}

/// Gradient of a scalar field: `grad[j] = (∂F/∂a_j, ∂F/∂b_j)`, by central
/// differences of order `order` (2 or 4).
pub fn fd_gradient<F>(
    family: &SurfaceFamily,
    field: &F,
    config: &Configuration,
    h: f64,
    order: usize,
) -> Result<Vec<(C64, C64)>>
where
    F: Fn(&Configuration) -> Result<C64>,
{
    let mut grad = Vec::with_capacity(config.len());
    for j in 0..config.len() {
        let mut pair = [zero(); 2];
        for (coord, slot) in pair.iter_mut().enumerate() {
            let step = coord_step(family, &config.points[j], coord, h);
            let at = |k: f64| field(&shifted(family, config, j, coord, C64::new(k * step, 0.0)));
            *slot = match order {
                2 => (at(1.0)? - at(-1.0)?) / (2.0 * step),
                4 => (at(-2.0)? - at(2.0)? * 1.0 + (at(1.0)? - at(-1.0)?) * 8.0) / (12.0 * step),
                _ => return Err(Error::InvalidArgument(format!("unsupported order {order}"))),
            };
        }
        grad.push((pair[0], pair[1]));
    }
    Ok(grad)
}

/// Bracket from gradients `(∂/∂a_j, ∂/∂b_j)` and the `y_j`.
pub fn bracket_from_gradients(ys: &[C64], df: &[(C64, C64)], dg: &[(C64, C64)]) -> C64 {
    ys.iter()
        .zip(df.iter().zip(dg))
        .map(|(&y, (&(fa, fb), &(ga, gb)))| y * (fb * ga - fa * gb) * BRACKET_SIGN)
        .sum()
}

/// `{F, G}` with gradients by second-order central differences.
pub fn poisson_bracket<F, G>(
    family: &SurfaceFamily,
    f: &F,
    g: &G,
    config: &Configuration,
    h: f64,
) -> Result<C64>
where
    F: Fn(&Configuration) -> Result<C64>,
    G: Fn(&Configuration) -> Result<C64>,
{
    let df = fd_gradient(family, f, config, h, 2)?;
    let dg = fd_gradient(family, g, config, h, 2)?;
    let ys: Vec<C64> = config.points.iter().map(|p| p.y).collect();
    Ok(bracket_from_gradients(&ys, &df, &dg))
}

/// Columns of `V⁻¹` for `V_{il} = x_i^{g-l}`: `cols[i][k] = ∂u_k/∂(section value at x_i)`.
fn interpolation_weights(xs: &[C64]) -> Result<Vec<Vec<C64>>> {
    let g = xs.len();
    let v = DMatrix::from_fn(g, g, |i, l| xs[i].powu((g - 1 - l) as u32));
    let inv = v
        .try_inverse()
        .ok_or_else(|| Error::SingularSystem("coincident points in the configuration".into()))?;
    Ok((0..g).map(|i| (0..g).map(|k| inv[(k, i)]).collect()).collect())
}

/// Analytic gradients of every `u_k`: `grads[k][j] = (∂u_k/∂a_j, ∂u_k/∂b_j)`,
/// from differentiating the interpolation conditions.
pub fn u_gradients(family: &SurfaceFamily, config: &Configuration) -> Result<Vec<Vec<(C64, C64)>>> {
    let g = family.genus();
    let xs = config.xs();
    let c = interpolation_weights(&xs)?;
    let u = family.points_to_u(config)?;
    let dp = family.section_polynomial(&u)?.derivative();
    let q = family.q_poly();
    let mut grads = vec![vec![(zero(), zero()); g]; g];
    for (j, pt) in config.points.iter().enumerate() {
        let (da, db) = if family.is_seiberg_witten() {
            let q = q.as_ref().expect("SW Q");
            let w = pt.y - pt.z;
            (w / pt.y, q.derivative().eval(pt.x) / pt.y - dp.eval(pt.x))
        } else {
            (C64::new(1.0, 0.0), -dp.eval(pt.x))
        };
        for k in 0..g {
            grads[k][j] = (da * c[j][k], db * c[j][k]);
        }
    }
    Ok(grads)
}

fn max_norm(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Finite-difference Jacobian of `(config coords) → (u, ψ)`, columns
/// ordered `(a_1, b_1, …)`, rows `(u_1…u_g, ψ_1…ψ_g)`.
pub fn canonical_jacobian(
    family: &SurfaceFamily,
    config: &Configuration,
    image: &AbelJacobiImage,
    h: f64,
    settings: &QuadratureSettings,
) -> Result<DMatrix<C64>> {
    let g = family.genus();
    let set = DifferentialSet::holomorphic(g);
    let mut jac = DMatrix::zeros(2 * g, 2 * g);
    for j in 0..g {
        for coord in 0..2 {
            let step = coord_step(family, &config.points[j], coord, h);
            let mut rows = Vec::with_capacity(2);
            for sign in [1.0, -1.0] {
                let moved = shifted(family, config, j, coord, C64::new(sign * step, 0.0));
                let u = family.points_to_u(&moved)?;
                let f = family.curve_poly(&family.section_polynomial(&u)?);
                let (psi, ys) = image.frozen(&f, &set, &moved.xs(), settings)?;
                let want = family.curve_y(&moved.points[j]);
                if (ys[j] - want).norm() > 1e-6 * want.norm() {
                    return Err(Error::LostTrack {
                        x: format!("{}", moved.points[j].x),
                    });
                }
                rows.push((u, psi));
            }
            let col = 2 * j + coord;
            for k in 0..g {
                jac[(k, col)] = (rows[0].0[k] - rows[1].0[k]) / (2.0 * step);
                jac[(g + k, col)] = (rows[0].1[k] - rows[1].1[k]) / (2.0 * step);
            }
        }
    }
    Ok(jac)
}

/// `K` of `Σ_k du_k ∧ dψ_k` in the ordering `(u, ψ)`.
pub fn canonical_form(g: usize) -> DMatrix<C64> {
    let mut k = DMatrix::zeros(2 * g, 2 * g);
    for i in 0..g {
        k[(i, g + i)] = C64::new(1.0, 0.0);
        k[(g + i, i)] = C64::new(-1.0, 0.0);
    }
    k
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CanonicalCheck {
    pub residual: f64,
    /// `max|Jᵀ K J + Ω| / max|Ω|`, small if the orientation were reversed.
    pub reversed_residual: f64,
}

fn canonical_from_jacobian(jac: &DMatrix<C64>, k: &DMatrix<C64>, omega: &DMatrix<C64>) -> CanonicalCheck {
    let pulled = jac.transpose() * k * jac;
    let scale = max_norm(omega);
    CanonicalCheck {
        residual: max_norm(&(&pulled - omega)) / scale,
        reversed_residual: max_norm(&(&pulled + omega)) / scale,
    }
}

/// `max|JᵀKJ - Ω| / max|Ω|` (elementwise maxima).
pub fn canonical_check(
    family: &SurfaceFamily,
    u: &[C64],
    config: &Configuration,
    h: f64,
    settings: &QuadratureSettings,
) -> Result<CanonicalCheck> {
    let image = abel_jacobi(family, u, config, settings)?;
    let jac = canonical_jacobian(family, config, &image, h, settings)?;
    let omega = omega_matrix(family, config)?;
    Ok(canonical_from_jacobian(&jac, &canonical_form(family.genus()), &omega))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CanonicalSteps {
    pub full: CanonicalCheck,
    pub half: CanonicalCheck,
    /// Residual of the Richardson combination `(4 J(h/2) - J(h)) / 3`,
    /// which removes the `h²` term of the central differences.
    pub extrapolated: f64,
}

/// The canonical check at `h` and `h/2` on one Abel–Jacobi image.
pub fn canonical_steps(
    family: &SurfaceFamily,
    u: &[C64],
    config: &Configuration,
    h: f64,
    settings: &QuadratureSettings,
) -> Result<CanonicalSteps> {
    let image = abel_jacobi(family, u, config, settings)?;
    let full = canonical_jacobian(family, config, &image, h, settings)?;
    let half = canonical_jacobian(family, config, &image, 0.5 * h, settings)?;
    let omega = omega_matrix(family, config)?;
    let k = canonical_form(family.genus());
    let rich = (&half * C64::new(4.0, 0.0) - &full) / C64::new(3.0, 0.0);
    Ok(CanonicalSteps {
        full: canonical_from_jacobian(&full, &k, &omega),
        half: canonical_from_jacobian(&half, &k, &omega),
        extrapolated: canonical_from_jacobian(&rich, &k, &omega).residual,
    })
}

pub fn canonical_residual(
    family: &SurfaceFamily,
    u: &[C64],
    config: &Configuration,
    h: f64,
    settings: &QuadratureSettings,
) -> Result<f64> {
    Ok(canonical_check(family, u, config, h, settings)?.residual)
}

/// `max_{j<k} |{u_j, u_k}|` with fourth-order difference gradients, each
/// bracket normalized by `Σ_i |y_i| (|∂_b u_j ∂_a u_k| + |∂_a u_j ∂_b u_k|)`.
pub fn involutivity_residual(family: &SurfaceFamily, config: &Configuration, h: f64) -> Result<f64> {
    let g = family.genus();
    let ys: Vec<C64> = config.points.iter().map(|p| p.y).collect();
    let mut grads = Vec::with_capacity(g);
    for k in 0..g {
        let field = |c: &Configuration| Ok(family.points_to_u(c)?[k]);
        grads.push(fd_gradient(family, &field, config, h, 4)?);
    }
    let mut worst: f64 = 0.0;
    for j in 0..g {
        for k in (j + 1)..g {
            let b = bracket_from_gradients(&ys, &grads[j], &grads[k]);
            let scale: f64 = (0..ys.len())
                .map(|i| {
                    ys[i].norm()
                        * ((grads[j][i].1 * grads[k][i].0).norm() + (grads[j][i].0 * grads[k][i].1).norm())
                })
                .sum();
            worst = worst.max(if scale > 0.0 { b.norm() / scale } else { b.norm() });
        }
    }
    Ok(worst)
}

/// Velocities `(ȧ_j, ḃ_j)` of the flow of `u_m`, plus `ẏ_j` (or `ż_j` for
/// Seiberg–Witten) keeping the point on the surface.
fn flow_velocity(family: &SurfaceFamily, config: &Configuration, m: usize) -> Result<Vec<[C64; 3]>> {
    let grads = u_gradients(family, config)?;
    let mut out = Vec::with_capacity(config.len());
    for (j, pt) in config.points.iter().enumerate() {
        let (ua, ub) = grads[m][j];
        let adot = -pt.y * ub * BRACKET_SIGN;
        let bdot = pt.y * ua * BRACKET_SIGN;
        let third = if family.is_seiberg_witten() {
            // a = y, b = x, z = Q(x)/y
            let q = family.q_poly().expect("SW Q");
            let dq = q.derivative().eval(pt.x);
            (dq * bdot - pt.z * adot) / pt.y
        } else {
            // a = z, b = x, y² = S(x, z)
            let (_, sx, sz) = family.surface_rhs(pt.x, pt.z);
            (sx * bdot + sz * adot) / (2.0 * pt.y)
        };
        out.push([adot, bdot, third]);
    }
    Ok(out)
}

fn pack_config(config: &Configuration) -> Vec<f64> {
    let flat: Vec<C64> = config.points.iter().flat_map(|p| [p.x, p.y, p.z]).collect();
    ode::pack(&flat)
}

fn unpack_config(state: &[f64]) -> Configuration {
    let flat = ode::unpack(state);
    Configuration::new(
        flat.chunks_exact(3)
            .map(|c| SurfacePoint::new(c[0], c[1], c[2]))
            .collect(),
    )
}

/// `dψ_k/dt` under the flow of `u_m`, from the analytic `∂ψ/∂x`.
pub fn psi_velocity(family: &SurfaceFamily, u: &[C64], config: &Configuration, m: usize) -> Result<Vec<C64>> {
    let curve = family.cut_curve(u)?;
    let pts = curve_points(family, config);
    let mdx = dpsi_dx_analytic(&curve, &pts)?;
    let vel = flow_velocity(family, config, m)?;
    let g = family.genus();
    Ok((0..g)
        .map(|k| (0..pts.len()).map(|j| mdx[(k, j)] * vel[j][1]).sum())
        .collect())
}

/// Sign `s` such that the flow of `u_m` gives `dψ_m/dt = s`; `+1` with
/// [`BRACKET_SIGN`] as chosen.
pub fn calibrate_bracket_sign(family: &SurfaceFamily, u: &[C64], config: &Configuration) -> Result<f64> {
    let v = psi_velocity(family, u, config, 0)?;
    Ok(v[0].re.signum())
}

/// Time scale of the flow of `u_m`: the shortest time for a point to reach
/// a branch point or another point at its initial speed.
pub fn flow_time_scale(family: &SurfaceFamily, u: &[C64], config: &Configuration, m: usize) -> Result<f64> {
    let curve = family.cut_curve(u)?;
    let vel = flow_velocity(family, config, m)?;
    let mut tau = f64::INFINITY;
    for (j, pt) in config.points.iter().enumerate() {
        let mut d = curve.nearest_branch(pt.x).1;
        for (i, other) in config.points.iter().enumerate() {
            if i != j {
                d = d.min((pt.x - other.x).norm());
            }
        }
        let speed = vel[j][1].norm();
        if speed > 0.0 {
            tau = tau.min(d / speed);
        }
    }
    Ok(tau)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowTrajectory {
    pub m: usize,
    pub times: Vec<f64>,
    pub states: Vec<Configuration>,
    pub u_series: Vec<Vec<C64>>,
    pub psi_series: Vec<Vec<C64>>,
    /// Set when a point came too close to a branch point; the trajectory
    /// then ends at that time.
    pub branch_approach: Option<f64>,
}

impl FlowTrajectory {
    /// `max_{t,k} |u_k(t) - u_k(0)|`.
    pub fn conservation(&self) -> f64 {
        let u0 = &self.u_series[0];
        self.u_series
            .iter()
            .flat_map(|u| u.iter().zip(u0).map(|(a, b)| (a - b).norm()))
            .fold(0.0, f64::max)
    }

    /// `max_{t,k} |ψ_k(t) - ψ_k(0) - δ_{mk} t|`.
    pub fn linearization(&self) -> f64 {
        let p0 = &self.psi_series[0];
        let mut worst: f64 = 0.0;
        for (t, psi) in self.times.iter().zip(&self.psi_series) {
            for (k, (a, b)) in psi.iter().zip(p0).enumerate() {
                let expect = if k == self.m { *t } else { 0.0 };
                worst = worst.max((a - b - expect).norm());
            }
        }
        worst
    }

    /// Largest surface-equation residual over all samples.
    pub fn surface_residual(&self, family: &SurfaceFamily) -> f64 {
        self.states
            .iter()
            .flat_map(|c| c.points.iter().map(|p| family.surface_residual(p)))
            .fold(0.0, f64::max)
    }
}

/// Flow of `u_m` (0-based) from `config` for time `t_end`, sampled
/// `samples` times. `ψ` is followed continuously along the trajectory.
pub fn integrate_flow(
    family: &SurfaceFamily,
    config: &Configuration,
    m: usize,
    t_end: f64,
    samples: usize,
    ode_settings: &OdeSettings,
    settings: &QuadratureSettings,
) -> Result<FlowTrajectory> {
    let g = family.genus();
    if m >= g {
        return Err(Error::InvalidArgument(format!("flow index {m} out of range")));
    }
    let u0 = family.points_to_u(config)?;
    let curve = family.cut_curve(&u0)?;
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let cfg = unpack_config(y);
        let vel = flow_velocity(family, &cfg, m)?;
        let flat: Vec<C64> = vel
            .iter()
            .flat_map(|v| {
                if family.is_seiberg_witten() {
                    // state order (x, y, z); a = y, b = x
                    [v[1], v[0], v[2]]
                } else {
                    // a = z, b = x
                    [v[1], v[2], v[0]]
                }
            })
            .collect();
        dy.copy_from_slice(&ode::pack(&flat));
        Ok(())
    };
    let near_branch = |_t: f64, y: &[f64]| {
        unpack_config(y).points.iter().any(|p| {
            let scale = curve.f().eval_abs(p.x.norm()).max(f64::MIN_POSITIVE);
            curve.eval(p.x).norm() < BRANCH_APPROACH * scale
        })
    };
    let out = ode::integrate(&rhs, near_branch, pack_config(config), t_end, samples.max(1), ode_settings)?;
    let mut image = abel_jacobi(family, &u0, config, settings)?;
    let mut traj = FlowTrajectory {
        m,
        times: Vec::new(),
        states: Vec::new(),
        u_series: Vec::new(),
        psi_series: Vec::new(),
        branch_approach: out.stopped_at,
    };
    let mut step_idx = 0;
    for (t, state) in out.times.iter().zip(&out.states) {
        let cfg = unpack_config(state);
        // follow each point through the accepted steps up to this sample
        let mut waypoints: Vec<Vec<(C64, C64)>> = vec![Vec::new(); g];
        while step_idx < out.steps.len() && out.steps[step_idx].0 <= *t {
            let c = unpack_config(&out.steps[step_idx].1);
            for (j, p) in c.points.iter().enumerate() {
                waypoints[j].push((p.x, family.curve_y(p)));
            }
            step_idx += 1;
        }
        for j in 0..g {
            waypoints[j].push((cfg.points[j].x, family.curve_y(&cfg.points[j])));
            image.advance(&curve, j, &waypoints[j], settings)?;
        }
        traj.times.push(*t);
        traj.u_series.push(family.points_to_u(&cfg)?);
        traj.psi_series.push(image.psi.clone());
        traj.states.push(cfg);
    }
    Ok(traj)
}

/// The section polynomial of a configuration.
pub fn config_section(family: &SurfaceFamily, config: &Configuration) -> Result<Poly> {
    family.section_polynomial(&family.points_to_u(config)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{seeded_instances, FamilyKind};

    #[test]
    fn omega_examples() {
        let fam = SurfaceFamily::neumann(vec![1.0, 2.0], 1.0).unwrap();
        let cfg = Configuration::new(vec![SurfacePoint::new(C64::new(0.5, 0.0), C64::new(2.0, 0.0), zero())]);
        let m = omega_matrix(&fam, &cfg).unwrap();
        assert_eq!(m[(0, 1)], C64::new(0.5, 0.0));
        assert_eq!(m[(1, 0)], C64::new(-0.5, 0.0));
        assert_eq!(max_norm(&(&m + m.transpose())), 0.0);
    }

    #[test]
    fn bracket_basics() {
        let inst = &seeded_instances(FamilyKind::EllipticK3, 3, 1).unwrap()[0];
        let fam = &inst.family;
        let cfg = &inst.config;
        let x0 = |c: &Configuration| Ok(c.points[0].x);
        let z0 = |c: &Configuration| Ok(c.points[0].z);
        let b = poisson_bracket(fam, &x0, &z0, cfg, DEFAULT_STEP).unwrap();
        assert!((b - cfg.points[0].y).norm() < 1e-9 * cfg.points[0].y.norm());
        let u1 = |c: &Configuration| Ok(fam.points_to_u(c)?[0]);
        assert!(poisson_bracket(fam, &u1, &u1, cfg, DEFAULT_STEP).unwrap().norm() < 1e-12);
        // analytic gradients make the bracket of two Hamiltonians vanish
        let grads = u_gradients(fam, cfg).unwrap();
        let ys: Vec<C64> = cfg.points.iter().map(|p| p.y).collect();
        assert!(bracket_from_gradients(&ys, &grads[0], &grads[1]).norm() < 1e-9);
        // and agree with differences
        let fd = fd_gradient(fam, &u1, cfg, DEFAULT_STEP, 4).unwrap();
        for (a, b) in fd.iter().zip(&grads[0]) {
            assert!((a.0 - b.0).norm() + (a.1 - b.1).norm() < 1e-7 * (1.0 + b.1.norm()));
        }
    }

    #[test]
    fn canonical_and_flows() {
        let s = QuadratureSettings::default();
        for kind in FamilyKind::defaults() {
            let inst = &seeded_instances(kind, 21, 1).unwrap()[0];
            let chk = canonical_check(&inst.family, &inst.u, &inst.config, 1e-5, &s).unwrap();
            let half = canonical_residual(&inst.family, &inst.u, &inst.config, 5e-6, &s).unwrap();
            let inv = involutivity_residual(&inst.family, &inst.config, DEFAULT_STEP).unwrap();
            let sign = calibrate_bracket_sign(&inst.family, &inst.u, &inst.config).unwrap();
            eprintln!(
                "{kind:?}: canonical {:e} (reversed {:e}) half {half:e} ratio {} inv {inv:e} sign {sign}",
                chk.residual,
                chk.reversed_residual,
                chk.residual / half
            );
            if inst.family.genus() <= 3 {
                assert!(chk.residual < 1e-6);
            }
            assert!(chk.residual < 1e-2 && chk.reversed_residual > 1.0);
            assert!(inv < 1e-9);
            assert_eq!(sign, 1.0);
            let tau = flow_time_scale(&inst.family, &inst.u, &inst.config, 0).unwrap();
            let traj = integrate_flow(&inst.family, &inst.config, 0, 0.1 * tau, 8, &OdeSettings::default(), &s).unwrap();
            eprintln!(
                "   flow T {:e}: cons {:e} lin {:e} surf {:e}",
                0.1 * tau,
                traj.conservation(),
                traj.linearization(),
                traj.surface_residual(&inst.family)
            );
            assert!(traj.conservation() < 1e-8);
            assert!(traj.linearization() < 1e-6);
        }
    }
}
