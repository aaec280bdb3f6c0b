//! The Neumann system: a particle on the sphere `|q| = r` in the potential
//! `½ Σ c_n q_n²`, used as an independent check of the rational surface
//! `y² = z Q(x)` with section `z = P(x)`.
//!
//! With `Q(x) = Π (x - c_n)` and
//! `U = Σ q_n² Q_n`, `V = Σ q_n p_n Q_n`, `W = Σ p_n² Q_n` where
//! `Q_n = Q / (x - c_n)`, the Uhlenbeck integrals recombine into
//! `P = Σ F_n Q_n = U + (U W - V²) / (r² Q)`. The separated coordinates are
//! the roots `x_j` of `U`, where `z_j = P(x_j) = -V(x_j)² / (r² Q(x_j))`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::abel_jacobi::abel_jacobi;
use crate::error::{Error, Result};
use crate::ode::{self, OdeSettings};
use crate::poly::{Poly, ROOT_TOL};
use crate::riemann::QuadratureSettings;
use crate::rng::SplitMix64;
use crate::surface::{Configuration, SurfaceFamily, SurfacePoint};
use crate::C64;

/// Constraint drift beyond which the state is projected back.
pub const PROJECTION_THRESHOLD: f64 = 1e-9;

/// Intermediate waypoints closer than this (relative) to a branch point
/// are not followed.
pub const WAYPOINT_CLEARANCE: f64 = 1e-3;

/// Separated roots closer than this (relative, squared) are degenerate.
pub const SEPARATION_TOL: f64 = 1e-10;

/// `|x_j - c_n|` below this (relative) puts a point on a branch point.
pub const ON_BRANCH_TOL: f64 = 1e-10;

/// Ratio between the mechanical time derivative and the Hamiltonian flow of
/// `H(u)` under the bracket of the surface: `d/dt = κ X_H` with `κ = 4i/r`.
pub fn time_normalization(r: f64) -> C64 {
    C64::new(0.0, 4.0 / r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeumannParams {
    c: Vec<f64>,
    r: f64,
}

impl NeumannParams {
    pub fn new(c: Vec<f64>, r: f64) -> Result<Self> {
        // validation shared with the surface family
        match SurfaceFamily::neumann(c, r)? {
            SurfaceFamily::NeumannRational { c, r } => Ok(NeumannParams { c, r }),
            _ => unreachable!(),
        }
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn family(&self) -> SurfaceFamily {
        SurfaceFamily::NeumannRational {
            c: self.c.clone(),
            r: self.r,
        }
    }

    /// `Q(x) = Π (x - c_n)`.
    pub fn q_poly(&self) -> Poly {
        let roots: Vec<C64> = self.c.iter().map(|&v| C64::new(v, 0.0)).collect();
        Poly::from_roots(&roots, C64::new(1.0, 0.0))
    }

    /// `Q_n(x) = Π_{m≠n} (x - c_m)`.
    fn q_without(&self, n: usize) -> Poly {
        let roots: Vec<C64> = self
            .c
            .iter()
            .enumerate()
            .filter(|&(m, _)| m != n)
            .map(|(_, &v)| C64::new(v, 0.0))
            .collect();
        Poly::from_roots(&roots, C64::new(1.0, 0.0))
    }

    /// `Σ_n w_n Q_n(x)`.
    fn combine(&self, w: &[f64]) -> Poly {
        (0..self.dim()).fold(Poly::zero(), |acc, n| {
            &acc + &self.q_without(n).scale(C64::new(w[n], 0.0))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeumannState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl NeumannState {
    /// `(|Σ q_n² - r²|, |Σ q_n p_n|)`.
    pub fn constraint_drift(&self, params: &NeumannParams) -> (f64, f64) {
        (
            (dot(&self.q, &self.q) - params.r * params.r).abs(),
            dot(&self.q, &self.p).abs(),
        )
    }

    /// Nearest state on the constraint manifold: `q` rescaled to the
    /// sphere, `p` made tangent.
    pub fn project(&self, params: &NeumannParams) -> NeumannState {
        let norm = dot(&self.q, &self.q).sqrt();
        let q: Vec<f64> = self.q.iter().map(|v| v * params.r / norm).collect();
        let qp = dot(&q, &self.p) / (params.r * params.r);
        let p = self.p.iter().zip(&q).map(|(pv, qv)| pv - qp * qv).collect();
        NeumannState { q, p }
    }

    pub fn reversed(&self) -> NeumannState {
        NeumannState {
            q: self.q.clone(),
            p: self.p.iter().map(|v| -v).collect(),
        }
    }

    fn pack(&self) -> Vec<f64> {
        self.q.iter().chain(&self.p).copied().collect()
    }

    fn unpack(v: &[f64]) -> NeumannState {
        let n = v.len() / 2;
        NeumannState {
            q: v[..n].to_vec(),
            p: v[n..].to_vec(),
        }
    }
}

fn check_state(params: &NeumannParams, state: &NeumannState) -> Result<()> {
    if state.q.len() != params.dim() || state.p.len() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            found: state.q.len().min(state.p.len()),
        });
    }
    Ok(())
}

/// `dq = p`, `dp = -c∘q + λ q` with the multiplier keeping both constraints.
pub fn mechanical_rhs(params: &NeumannParams, state: &NeumannState) -> (Vec<f64>, Vec<f64>) {
    let cq: Vec<f64> = params.c.iter().zip(&state.q).map(|(c, q)| c * q).collect();
    let lambda = (dot(&state.q, &cq) - dot(&state.p, &state.p)) / (params.r * params.r);
    let dp = cq.iter().zip(&state.q).map(|(a, q)| -a + lambda * q).collect();
    (state.p.clone(), dp)
}

/// `H = ½ (|p|² + Σ c_n q_n²)`.
pub fn energy(params: &NeumannParams, state: &NeumannState) -> f64 {
    let pot: f64 = params.c.iter().zip(&state.q).map(|(c, q)| c * q * q).sum();
    0.5 * (dot(&state.p, &state.p) + pot)
}

/// `F_n = q_n² + r⁻² Σ_{m≠n} (q_n p_m - q_m p_n)² / (c_n - c_m)`.
///
/// The motion commutes with `(q, p) -> (r q, r p)`, so these are `r²` times
/// the unit-sphere integrals; without the `r⁻²` they drift when `r ≠ 1`.
pub fn uhlenbeck_integrals(params: &NeumannParams, state: &NeumannState) -> Vec<f64> {
    let (q, p, c) = (&state.q, &state.p, &params.c);
    let inv_r2 = 1.0 / (params.r * params.r);
    (0..c.len())
        .map(|n| {
            q[n] * q[n]
                + inv_r2
                    * (0..c.len())
                        .filter(|&m| m != n)
                        .map(|m| (q[n] * p[m] - q[m] * p[n]).powi(2) / (c[n] - c[m]))
                        .sum::<f64>()
        })
        .collect()
}

/// `P = Σ F_n Q_n` and the Hamiltonians read off from it.
pub fn spectral_data(params: &NeumannParams, state: &NeumannState) -> Result<(Poly, Vec<C64>)> {
    check_state(params, state)?;
    let f = uhlenbeck_integrals(params, state);
    let p = params.combine(&f);
    // the leading coefficient is |q|², so this is the sphere constraint;
    // trajectories are only pulled back once they drift past the projection
    // threshold, so that is the tolerance here too
    let r2 = params.r * params.r;
    let residue = (p.coeff(params.dim() - 1).re - r2).abs() / r2;
    if residue > PROJECTION_THRESHOLD {
        return Err(Error::NonPolynomialResidue(residue));
    }
    let u = params.family().u_from_section(&p);
    Ok((p, u))
}

/// `H(u) = ½ Σ_n c_n P(c_n) / Q'(c_n)`.
pub fn hamiltonian_of_u(params: &NeumannParams, u: &[C64]) -> Result<C64> {
    let fam = params.family();
    let p = fam.section_polynomial(u)?;
    let dq = params.q_poly().derivative();
    Ok(params
        .c
        .iter()
        .map(|&c| {
            let x = C64::new(c, 0.0);
            p.eval(x) * c / dq.eval(x)
        })
        .sum::<C64>()
        * 0.5)
}

/// `∂H/∂u_k` by central differences (exact here, `H` being affine in `u`).
pub fn hamiltonian_gradient(params: &NeumannParams, u: &[C64]) -> Result<Vec<C64>> {
    let h = 1e-3;
    (0..u.len())
        .map(|k| {
            let mut a = u.to_vec();
            let mut b = u.to_vec();
            a[k] += h;
            b[k] -= h;
            Ok((hamiltonian_of_u(params, &a)? - hamiltonian_of_u(params, &b)?) / (2.0 * h))
        })
        .collect()
}

/// `U` of the module docs, whose roots are the separated `x_j`.
fn separation_poly(params: &NeumannParams, state: &NeumannState) -> Poly {
    let qq: Vec<f64> = state.q.iter().map(|v| v * v).collect();
    params.combine(&qq)
}

/// `x - c_m` for every `m` at a root `x` of `U`. A root next to some `c_n`
/// is re-solved from `Σ_m q_m² / (x - c_m) = 0` as an offset from `c_n`,
/// which keeps the small difference to full relative accuracy.
fn root_offsets(params: &NeumannParams, state: &NeumannState, x: C64) -> Vec<C64> {
    let c = &params.c;
    let mut diffs: Vec<C64> = c.iter().map(|&cm| x - cm).collect();
    let (n, _) = diffs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .expect("at least two constants");
    let gap = (0..c.len())
        .filter(|&m| m != n)
        .map(|m| (c[n] - c[m]).abs())
        .fold(f64::INFINITY, f64::min);
    let qn2 = state.q[n] * state.q[n];
    if diffs[n].norm() >= 0.1 * gap || qn2 == 0.0 {
        return diffs;
    }
    // Newton on q_n² + d Σ_{m≠n} q_m² / (d + c_n - c_m), which is regular at
    // d = 0; the polynomial root is already right up to rounding, so larger
    // corrections mean a neighbouring root was picked up and are refused
    let d0 = diffs[n];
    let mut d = d0;
    for _ in 0..8 {
        let (mut s, mut ds) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for m in (0..c.len()).filter(|&m| m != n) {
            let e = d + (c[n] - c[m]);
            let w = state.q[m] * state.q[m];
            s += w / e;
            ds -= w / (e * e);
        }
        let slope = s + d * ds;
        if slope.norm() == 0.0 {
            break;
        }
        let step = (d * s + qn2) / slope;
        d -= step;
        if step.norm() <= 4.0 * f64::EPSILON * d.norm() {
            break;
        }
    }
    if !((d - d0).norm() <= 1e-8 * gap) {
        return diffs;
    }
    for (m, v) in diffs.iter_mut().enumerate() {
        *v = d + (c[n] - c[m]);
    }
    diffs[n] = d;
    diffs
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeparatedPoints {
    pub config: Configuration,
    /// `dx_j/dt` along the mechanical motion.
    pub velocities: Vec<C64>,
    /// Sheet signs `s_j` with `y_j = s_j · sqrt(P(x_j) Q(x_j))`.
    pub signs: Vec<f64>,
    /// Indices of points sitting on a branch point (`y_j = 0`).
    pub on_branch: Vec<usize>,
    /// `max_j |ẋ_j - κ y_j v_j| / max_j |ẋ_j|`, how well the mechanical
    /// velocity matches the normalized Hamiltonian flow.
    pub flow_mismatch: f64,
}

/// `∂H/∂z_j` through the interpolation of `P`, i.e. `Σ_k ∂H/∂u_k ∂u_k/∂z_j`.
fn hamiltonian_z_gradient(params: &NeumannParams, xs: &[C64], u: &[C64]) -> Result<Vec<C64>> {
    let g = xs.len();
    let dh = hamiltonian_gradient(params, u)?;
    let v = DMatrix::from_fn(g, g, |i, l| xs[i].powu((g - 1 - l) as u32));
    let inv = v
        .try_inverse()
        .ok_or_else(|| Error::DegenerateSeparation)?;
    Ok((0..g)
        .map(|j| (0..g).map(|k| dh[k] * inv[(k, j)]).sum())
        .collect())
}

/// Separated coordinates of a state. The sheet of each point is the one on
/// which the mechanical velocity `ẋ_j = -2 V(x_j) / U'(x_j)` agrees with
/// the Hamiltonian flow `ẋ_j = κ y_j ∂H/∂z_j`.
pub fn separated_points(params: &NeumannParams, state: &NeumannState) -> Result<SeparatedPoints> {
    check_state(params, state)?;
    let (p, u) = spectral_data(params, state)?;
    let q = params.q_poly();
    let mut xs = separation_poly(params, state).roots(ROOT_TOL)?;
    xs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let scale = params.c.iter().fold(1.0f64, |m, c| m.max(c.abs()));
    for i in 0..xs.len() {
        for j in 0..i {
            if (xs[i] - xs[j]).norm_sqr() < SEPARATION_TOL * scale * scale {
                return Err(Error::DegenerateSeparation);
            }
        }
    }
    let offsets: Vec<Vec<C64>> = xs.iter().map(|&x| root_offsets(params, state, x)).collect();
    for (x, d) in xs.iter_mut().zip(&offsets) {
        *x = C64::new(params.c[0], 0.0) + d[0];
    }
    let kappa = time_normalization(params.r);
    let dhz = hamiltonian_z_gradient(params, &xs, &u)?;
    let r2 = params.r * params.r;
    let mut points = Vec::with_capacity(xs.len());
    let mut velocities = Vec::with_capacity(xs.len());
    let mut predictions = Vec::with_capacity(xs.len());
    let mut signs = Vec::with_capacity(xs.len());
    let mut on_branch = Vec::new();
    for (j, (&x, diffs)) in xs.iter().zip(&offsets).enumerate() {
        if diffs.iter().any(|d| d.norm() < ON_BRANCH_TOL * scale) {
            // a turning point: q_n = 0 and the point sits on a branch point
            let qp: Vec<f64> = state.q.iter().zip(&state.p).map(|(a, b)| a * b).collect();
            let du = separation_poly(params, state).derivative().eval(x);
            velocities.push(-params.combine(&qp).eval(x) * 2.0 / du);
            predictions.push(None);
            on_branch.push(j);
            signs.push(1.0);
            points.push(SurfacePoint::new(x, C64::new(0.0, 0.0), p.eval(x)));
            continue;
        }
        // z = -V²/(r² Q) and ẋ = -2 V / U' in partial fractions:
        // V/Q = Σ q_m p_m / (x - c_m), U'/Q = -Σ q_m² / (x - c_m)² at a root
        let qx: C64 = diffs.iter().product();
        let v: C64 = diffs.iter().zip(state.q.iter().zip(&state.p)).map(|(d, (q, p))| q * p / d).sum();
        let ds: C64 = -diffs.iter().zip(&state.q).map(|(d, q)| q * q / (d * d)).sum::<C64>();
        let z = -qx * v * v / r2;
        let xdot = -v * 2.0 / ds;
        velocities.push(xdot);
        let root = (p.eval(x) * q.eval(x)).sqrt();
        let predicted = kappa * root * dhz[j];
        let s = if (xdot - predicted).norm() <= (xdot + predicted).norm() { 1.0 } else { -1.0 };
        predictions.push(Some(predicted * s));
        signs.push(s);
        points.push(SurfacePoint::new(x, root * s, z));
    }
    // relative to the fastest point, since a point at rest is at a turning
    // point where both sides vanish
    let speed = velocities.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mismatch = if speed > 0.0 {
        velocities
            .iter()
            .zip(&predictions)
            .filter_map(|(v, p)| p.map(|p| (v - p).norm() / speed))
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    Ok(SeparatedPoints {
        config: Configuration::new(points),
        velocities,
        signs,
        on_branch,
        flow_mismatch: mismatch,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Projection {
    pub t: f64,
    pub drift: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MechanicalTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<NeumannState>,
    /// Every accepted integrator step `(t, state)`.
    pub steps: Vec<(f64, NeumannState)>,
    pub projections: Vec<Projection>,
}

impl MechanicalTrajectory {
    /// Largest deviation of `f(state)` from its initial value.
    pub fn drift<F: Fn(&NeumannState) -> Vec<f64>>(&self, f: F) -> f64 {
        let f0 = f(&self.states[0]);
        self.states
            .iter()
            .flat_map(|s| f(s).into_iter().zip(&f0).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>())
            .fold(0.0, f64::max)
    }
}

pub fn default_ode_settings() -> OdeSettings {
    OdeSettings {
        rel_tol: 1e-13,
        abs_tol: 1e-15,
    }
}

/// Integrate the equations of motion for time `t_end`, sampling `samples`
/// times. The state is projected back onto the constraints at a sample
/// whenever the drift exceeds [`PROJECTION_THRESHOLD`].
pub fn integrate(
    params: &NeumannParams,
    state0: &NeumannState,
    t_end: f64,
    samples: usize,
    settings: &OdeSettings,
) -> Result<MechanicalTrajectory> {
    check_state(params, state0)?;
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let (dq, dp) = mechanical_rhs(params, &NeumannState::unpack(y));
        let n = dq.len();
        dy[..n].copy_from_slice(&dq);
        dy[n..].copy_from_slice(&dp);
        Ok(())
    };
    let mut traj = MechanicalTrajectory {
        times: vec![0.0],
        states: vec![state0.clone()],
        steps: vec![(0.0, state0.clone())],
        projections: Vec::new(),
    };
    if t_end == 0.0 {
        return Ok(traj);
    }
    let samples = samples.max(1);
    let dt = t_end / samples as f64;
    let mut state = state0.clone();
    for n in 0..samples {
        let t0 = n as f64 * dt;
        let t1 = if n + 1 == samples { t_end } else { (n + 1) as f64 * dt };
        let out = ode::integrate(&rhs, |_, _| false, state.pack(), t1 - t0, 1, settings)?;
        for (t, y) in out.steps.iter().skip(1) {
            traj.steps.push((t0 + t, NeumannState::unpack(y)));
        }
        state = NeumannState::unpack(out.states.last().expect("ODE output"));
        let (a, b) = state.constraint_drift(params);
        let drift = a.max(b);
        if drift > PROJECTION_THRESHOLD {
            state = state.project(params);
            traj.projections.push(Projection { t: t1, drift });
            if let Some(last) = traj.steps.last_mut() {
                last.1 = state.clone();
            }
        }
        traj.times.push(t1);
        traj.states.push(state.clone());
    }
    Ok(traj)
}

/// Least-squares line through `(t_i, v_i)`; returns `(intercept, slope,
/// max residual)`.
pub fn affine_fit(ts: &[f64], vs: &[C64]) -> (C64, C64, f64) {
    let n = ts.len() as f64;
    let tm = ts.iter().sum::<f64>() / n;
    let vm = vs.iter().sum::<C64>() / n;
    let stt: f64 = ts.iter().map(|t| (t - tm).powi(2)).sum();
    let stv: C64 = ts.iter().zip(vs).map(|(t, v)| (v - vm) * (t - tm)).sum();
    let slope = if stt > 0.0 { stv / stt } else { C64::new(0.0, 0.0) };
    let intercept = vm - slope * tm;
    let res = ts
        .iter()
        .zip(vs)
        .map(|(t, v)| (v - intercept - slope * *t).norm())
        .fold(0.0, f64::max);
    (intercept, slope, res)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinearizationReport {
    /// Sample times used in the fit and `ψ` there.
    pub times: Vec<f64>,
    pub psi: Vec<Vec<C64>>,
    /// Samples left out because a point sat next to a branch point.
    pub skipped: usize,
    pub slopes: Vec<C64>,
    /// `κ ∂H/∂u_k`.
    pub expected: Vec<C64>,
    pub fit_residual: f64,
    pub slope_error: f64,
    /// `max_k (fit residual + |slope_k - expected_k|)`.
    pub residual: f64,
    pub projections: usize,
    pub flow_mismatch: f64,
}

/// Whether every point is clear of the branch points.
pub fn clear_of_branch_points(params: &NeumannParams, state: &NeumannState) -> Result<bool> {
    let (_, u) = spectral_data(params, state)?;
    let curve = params.family().cut_curve(&u)?;
    let sep = separated_points(params, state)?;
    let limit = WAYPOINT_CLEARANCE * curve.branch_scale();
    Ok(sep.config.points.iter().all(|pt| curve.nearest_branch(pt.x).1 > limit))
}

struct Tracked {
    times: Vec<f64>,
    psi: Vec<Vec<C64>>,
    skipped: usize,
    mismatch: f64,
}

/// Follow `ψ` of the separated points along a mechanical trajectory,
/// starting from `initial` (the separated points of the first state, on
/// sheets that may differ from the velocity rule; the difference is carried
/// along).
fn track_psi(
    params: &NeumannParams,
    traj: &MechanicalTrajectory,
    initial: &Configuration,
    settings: &QuadratureSettings,
) -> Result<Tracked> {
    let fam = params.family();
    let (_, u0) = spectral_data(params, &traj.states[0])?;
    let curve = fam.cut_curve(&u0)?;
    let scale = curve.branch_scale();
    let limit = WAYPOINT_CLEARANCE * scale;
    if initial.points.iter().any(|pt| curve.nearest_branch(pt.x).1 <= limit) {
        return Err(Error::InvalidArgument(
            "initial separated points too close to a branch point".into(),
        ));
    }
    let mut image = abel_jacobi(&fam, &u0, initial, settings)?;
    let mut out = Tracked {
        times: vec![0.0],
        psi: vec![image.psi.clone()],
        skipped: 0,
        mismatch: 0.0,
    };
    let first = separated_points(params, &traj.states[0])?;
    let flips: Vec<f64> = first
        .config
        .points
        .iter()
        .zip(&initial.points)
        .map(|(a, b)| if (a.y - b.y).norm() <= (a.y + b.y).norm() { 1.0 } else { -1.0 })
        .collect();
    let g = image.genus();
    let mut step = 1;
    for &t in traj.times.iter().skip(1) {
        let mut waypoints: Vec<Vec<(C64, C64)>> = vec![Vec::new(); g];
        let mut usable = true;
        while step < traj.steps.len() && traj.steps[step].0 <= t * (1.0 + 1e-14) {
            // the curve data are read on the constraint surface; the drift
            // itself is reported by the conservation checks
            let sep = separated_points(params, &traj.steps[step].1.project(params))?;
            out.mismatch = out.mismatch.max(sep.flow_mismatch);
            let at_sample = traj.steps[step].0 >= t * (1.0 - 1e-14);
            for (j, pt) in sep.config.points.iter().enumerate() {
                // turning points sit on branch points; positions right next
                // to them are skipped and the sheet change is picked up by
                // the flip loop of the next chord
                if curve.nearest_branch(pt.x).1 > limit {
                    waypoints[j].push((pt.x, pt.y * flips[j]));
                } else if at_sample {
                    usable = false;
                }
            }
            step += 1;
        }
        for (j, w) in waypoints.iter().enumerate() {
            image.advance(&curve, j, w, settings)?;
        }
        if usable {
            out.times.push(t);
            out.psi.push(image.psi.clone());
        } else {
            out.skipped += 1;
        }
    }
    Ok(out)
}

/// Affine-fit and slope check of `ψ(t)` along the motion from `state0`.
pub fn linearization_check(
    params: &NeumannParams,
    state0: &NeumannState,
    t_end: f64,
    samples: usize,
    settings: &QuadratureSettings,
) -> Result<LinearizationReport> {
    let traj = integrate(params, state0, t_end, samples, &default_ode_settings())?;
    let start = separated_points(params, state0)?;
    linearization_from(params, &traj, &start.config, settings)
}

fn linearization_from(
    params: &NeumannParams,
    traj: &MechanicalTrajectory,
    initial: &Configuration,
    settings: &QuadratureSettings,
) -> Result<LinearizationReport> {
    let (_, u0) = spectral_data(params, &traj.states[0])?;
    let kappa = time_normalization(params.r);
    let expected: Vec<C64> = hamiltonian_gradient(params, &u0)?
        .into_iter()
        .map(|d| d * kappa)
        .collect();
    let tracked = track_psi(params, traj, initial, settings)?;
    if tracked.times.len() < 3 {
        return Err(Error::InvalidArgument(
            "too few usable samples for an affine fit".into(),
        ));
    }
    let g = expected.len();
    let mut slopes = Vec::with_capacity(g);
    let mut fit_residual: f64 = 0.0;
    let mut slope_error: f64 = 0.0;
    let mut residual: f64 = 0.0;
    for k in 0..g {
        let series: Vec<C64> = tracked.psi.iter().map(|p| p[k]).collect();
        let (_, slope, res) = affine_fit(&tracked.times, &series);
        let err = (slope - expected[k]).norm();
        fit_residual = fit_residual.max(res);
        slope_error = slope_error.max(err);
        residual = residual.max(res + err);
        slopes.push(slope);
    }
    Ok(LinearizationReport {
        times: tracked.times,
        psi: tracked.psi,
        skipped: tracked.skipped,
        slopes,
        expected,
        fit_residual,
        slope_error,
        residual,
        projections: traj.projections.len(),
        flow_mismatch: tracked.mismatch,
    })
}

/// Slopes of `ψ` along the motion from the time-reversed state `(q, -p)`,
/// with the initial points kept on the sheets they have for `(q, p)`: the
/// same points of the curve traversed backwards.
pub fn reversed_slopes(
    params: &NeumannParams,
    state0: &NeumannState,
    t_end: f64,
    samples: usize,
    settings: &QuadratureSettings,
) -> Result<Vec<C64>> {
    let forward = separated_points(params, state0)?;
    let back = state0.reversed();
    let traj = integrate(params, &back, t_end, samples, &default_ode_settings())?;
    Ok(linearization_from(params, &traj, &forward.config, settings)?.slopes)
}

/// Random tangent state: `q` uniform on the sphere of radius `r`, `p` a
/// random tangent vector of norm `speed`. Redrawn until the separated
/// points are clear of the branch points.
pub fn random_state(params: &NeumannParams, rng: &mut SplitMix64, speed: f64) -> Result<NeumannState> {
    let n = params.dim();
    let normal = |rng: &mut SplitMix64| {
        // Box-Muller
        let u1 = rng.next_f64().max(f64::MIN_POSITIVE);
        let u2 = rng.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    for _ in 0..1000 {
        let q: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
        let p: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
        let s = NeumannState { q, p }.project(params);
        let pn = dot(&s.p, &s.p).sqrt();
        let state = NeumannState {
            q: s.q,
            p: s.p.iter().map(|v| v * speed / pn.max(f64::MIN_POSITIVE)).collect(),
        };
        match clear_of_branch_points(params, &state) {
            Ok(true) => return Ok(state),
            Ok(false) | Err(Error::DegenerateSeparation) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::InvalidArgument("no Neumann state clear of branch points".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> (NeumannParams, NeumannState) {
        (
            NeumannParams::new(vec![1.0, 2.0, 3.0], 1.0).unwrap(),
            NeumannState {
                q: vec![1.0, 0.0, 0.0],
                p: vec![0.0, 1.0, 0.0],
            },
        )
    }

    #[test]
    fn example_state() {
        let (params, state) = example();
        let (dq, dp) = mechanical_rhs(&params, &state);
        assert_eq!(dq, vec![0.0, 1.0, 0.0]);
        assert_eq!(dp, vec![-1.0, 0.0, 0.0]);
        let f = uhlenbeck_integrals(&params, &state);
        assert_eq!(f, vec![0.0, 1.0, 0.0]);
        assert!((energy(&params, &state) - 1.0).abs() < 1e-12);
        let (p, u) = spectral_data(&params, &state).unwrap();
        assert_eq!(p, Poly::from_real(&[3.0, -4.0, 1.0]));
        assert_eq!(u, vec![C64::new(-4.0, 0.0), C64::new(3.0, 0.0)]);
        let sep = separated_points(&params, &state).unwrap();
        let pt = &sep.config.points[0];
        assert!((pt.x - 2.0).norm() < 1e-12 && pt.y == C64::new(0.0, 0.0));
        assert!((pt.z + 1.0).norm() < 1e-12);
        assert_eq!(sep.on_branch, vec![0, 1]);
    }

    #[test]
    fn equilibrium() {
        let (params, _) = example();
        let state = NeumannState {
            q: vec![0.0, 1.0, 0.0],
            p: vec![0.0; 3],
        };
        let (_, dp) = mechanical_rhs(&params, &state);
        assert!(dp.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn random_states_and_normalization() {
        let params = NeumannParams::new(vec![0.9, 2.1, 2.8], 1.0).unwrap();
        let mut rng = SplitMix64::new(5);
        for _ in 0..20 {
            let s = random_state(&params, &mut rng, 1.0).unwrap();
            let f = uhlenbeck_integrals(&params, &s);
            assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let h = 0.5 * params.c.iter().zip(&f).map(|(c, f)| c * f).sum::<f64>();
            assert!((h - energy(&params, &s)).abs() < 1e-12);
            let sep = separated_points(&params, &s).unwrap();
            assert!(sep.flow_mismatch < 1e-9, "{}", sep.flow_mismatch);
            let (_, u) = spectral_data(&params, &s).unwrap();
            let u2 = params.family().points_to_u(&sep.config).unwrap();
            for (a, b) in u.iter().zip(&u2) {
                assert!((a - b).norm() < 1e-9);
            }
            // interlacing
            for (j, pt) in sep.config.points.iter().enumerate() {
                assert!(pt.x.im.abs() < 1e-9);
                assert!(pt.x.re >= params.c[j] - 1e-12 && pt.x.re <= params.c[j + 1] + 1e-12);
            }
        }
    }

    #[test]
    fn linearization_short_run() {
        let params = NeumannParams::new(vec![0.9, 2.1, 2.8], 1.0).unwrap();
        let mut rng = SplitMix64::new(9);
        let s = random_state(&params, &mut rng, 1.0).unwrap();
        let rep = linearization_check(&params, &s, 2.0, 20, &QuadratureSettings::default()).unwrap();
        eprintln!(
            "fit {:e} slope {:e} slopes {:?} expected {:?}",
            rep.fit_residual, rep.slope_error, rep.slopes, rep.expected
        );
        assert!(rep.fit_residual < 1e-6 && rep.slope_error < 1e-5);
        let back = reversed_slopes(&params, &s, 2.0, 20, &QuadratureSettings::default()).unwrap();
        for (a, b) in back.iter().zip(&rep.slopes) {
            assert!((a + b).norm() < 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn other_radius() {
        let params = NeumannParams::new(vec![0.5, 1.3, 2.2, 3.0], 2.0).unwrap();
        let mut rng = SplitMix64::new(11);
        let s = random_state(&params, &mut rng, 1.5).unwrap();
        let f0 = uhlenbeck_integrals(&params, &s);
        assert!((f0.iter().sum::<f64>() - 4.0).abs() < 1e-12);
        let sep = separated_points(&params, &s).unwrap();
        assert!(sep.flow_mismatch < 1e-9, "{}", sep.flow_mismatch);
        let (_, u) = spectral_data(&params, &s).unwrap();
        let u2 = params.family().points_to_u(&sep.config).unwrap();
        for (a, b) in u.iter().zip(&u2) {
            assert!((a - b).norm() < 1e-9, "{a} vs {b}");
        }
        let traj = integrate(&params, &s, 3.0, 10, &default_ode_settings()).unwrap();
        let drift = traj.drift(|st| uhlenbeck_integrals(&params, st));
        assert!(drift < 1e-9, "{drift:e}");
        let rep = linearization_check(&params, &s, 2.0, 20, &QuadratureSettings::default()).unwrap();
        assert!(rep.fit_residual < 1e-6 && rep.slope_error < 1e-5, "{:e} {:e}", rep.fit_residual, rep.slope_error);
    }
}
