//! Named numerical checks on a single instance. Each returns a residual to
//! be compared against a threshold, with supporting details.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::abel_jacobi::{
    abel_jacobi, curve_points, dpsi_du_fd, dpsi_du_for_image, dpsi_dx_analytic, dpsi_dx_fd,
    elementary_pairs, cubic_condition_residual, relative_difference, symmetry_residual,
};
use crate::error::{Error, Result};
use crate::instances::Instance;
use crate::ode::OdeSettings;
use crate::poly::Poly;
use crate::riemann::{
    branch_pair_period, continue_y, default_clearance, integrate_along, DifferentialSet, HyperellipticCurve, Path,
    QuadratureSettings, Segment,
};
use crate::surface::SurfaceFamily;
use crate::symplectic::{
    calibrate_bracket_sign, canonical_steps, flow_time_scale, integrate_flow, involutivity_residual, BRACKET_SIGN,
};
use crate::C64;

/// Numerical knobs shared by the checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckSettings {
    pub quadrature: QuadratureSettings,
    pub ode: OdeSettingsSpec,
    /// Finite-difference step for the canonical, involutivity and
    /// derivative checks.
    pub fd_step: f64,
    /// Finite-difference step for the cubic condition.
    pub cubic_step: f64,
    /// Flow time as a fraction of the flow's own time scale.
    pub flow_fraction: f64,
    pub flow_samples: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeSettingsSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl From<OdeSettingsSpec> for OdeSettings {
    fn from(s: OdeSettingsSpec) -> Self {
        OdeSettings {
            rel_tol: s.rel_tol,
            abs_tol: s.abs_tol,
        }
    }
}

impl Default for CheckSettings {
    fn default() -> Self {
        let ode = OdeSettings::default();
        CheckSettings {
            quadrature: QuadratureSettings::default(),
            ode: OdeSettingsSpec {
                rel_tol: ode.rel_tol,
                abs_tol: ode.abs_tol,
            },
            fd_step: 1e-5,
            cubic_step: 1e-4,
            flow_fraction: 0.1,
            flow_samples: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub residual: f64,
    pub details: Value,
}

impl Measurement {
    fn new(residual: f64, details: Value) -> Self {
        Measurement { residual, details }
    }

    fn bare(residual: f64) -> Self {
        Measurement::new(residual, Value::Null)
    }
}

/// Checks run on surface instances, in name order.
pub const INSTANCE_CHECKS: [&str; 15] = [
    "bracket_sign",
    "canonical",
    "cubic",
    "dpsi_du_fd",
    "dpsi_dx",
    "dpsi_symmetry",
    "flow_conservation",
    "flow_linearization",
    "infinity_holomorphy",
    "involutivity",
    "lemniscate",
    "monodromy",
    "path_independence",
    "roundtrip",
    "sw_degeneration",
];

/// Default pass thresholds.
pub fn default_thresholds() -> BTreeMap<String, f64> {
    [
        ("bracket_sign", 0.0),
        ("canonical", 1e-6),
        ("cubic", 1e-5),
        ("dpsi_du_fd", 1e-6),
        ("dpsi_dx", 1e-6),
        ("dpsi_symmetry", 1e-6),
        ("flow_conservation", 1e-8),
        ("flow_linearization", 1e-6),
        ("flow_surface", 1e-8),
        ("infinity_holomorphy", 1e-8),
        ("interp_roundtrip", 1e-9),
        ("interp_surface", 1e-10),
        ("involutivity", 1e-9),
        ("lemniscate", 1e-9),
        ("monodromy", 0.0),
        ("neumann_affine_fit", 1e-6),
        ("neumann_constraints", 1e-9),
        ("neumann_energy", 1e-9),
        ("neumann_energy_identity", 1e-12),
        ("neumann_energy_identity_flow", 1e-9),
        ("neumann_integrals", 1e-9),
        ("neumann_interlacing", 0.0),
        ("neumann_sign_rule", 1e-8),
        ("neumann_slopes", 1e-5),
        ("neumann_time_reversal", 1e-5),
        ("neumann_two_route", 1e-9),
        ("path_independence", 1e-9),
        ("period_antisymmetry", 1e-10),
        ("roundtrip", 1e-9),
        ("sw_degeneration", 0.0),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// Whether `name` applies to the family at all.
pub fn applies(name: &str, family: &SurfaceFamily) -> bool {
    match name {
        "sw_degeneration" => matches!(family, SurfaceFamily::SeibergWittenAffine { masses, .. } if masses.is_empty()),
        _ => true,
    }
}

/// Run the checks in `names` on one instance. Checks that share work are
/// computed together.
pub fn run_instance_checks(
    inst: &Instance,
    names: &[&str],
    settings: &CheckSettings,
) -> BTreeMap<String, Result<Measurement>> {
    let mut out = BTreeMap::new();
    let wants = |n: &str| names.contains(&n);
    if wants("flow_conservation") || wants("flow_linearization") {
        match flow_checks(inst, settings) {
            Ok((cons, lin)) => {
                out.insert("flow_conservation".to_string(), Ok(cons));
                out.insert("flow_linearization".to_string(), Ok(lin));
            }
            Err(e) => {
                out.insert("flow_conservation".to_string(), Err(e.clone()));
                out.insert("flow_linearization".to_string(), Err(e));
            }
        }
    }
    for &name in names {
        if name.starts_with("flow_") {
            continue;
        }
        let r = match name {
            "bracket_sign" => bracket_sign(inst),
            "canonical" => canonical(inst, settings),
            "cubic" => cubic(inst, settings),
            "dpsi_du_fd" => dpsi_du_agreement(inst, settings),
            "dpsi_dx" => dpsi_dx(inst, settings),
            "dpsi_symmetry" => dpsi_symmetry(inst, settings),
            "infinity_holomorphy" => infinity_holomorphy(&inst.curve, &settings.quadrature),
            "involutivity" => involutivity_residual(&inst.family, &inst.config, settings.fd_step).map(Measurement::bare),
            "lemniscate" => lemniscate(&settings.quadrature),
            "monodromy" => monodromy(&inst.curve, &inst.config.xs()),
            "path_independence" => path_independence(&inst.curve, &inst.config.xs(), &settings.quadrature),
            "roundtrip" => roundtrip(inst),
            "sw_degeneration" => sw_degeneration(&inst.family, &inst.u),
            other => Err(Error::InvalidArgument(format!("unknown check {other}"))),
        };
        out.insert(name.to_string(), r);
    }
    out.retain(|k, _| wants(k));
    out
}

fn bracket_sign(inst: &Instance) -> Result<Measurement> {
    let s = calibrate_bracket_sign(&inst.family, &inst.u, &inst.config)?;
    Ok(Measurement::new((s - BRACKET_SIGN).abs(), json!({ "calibrated": s })))
}

fn canonical(inst: &Instance, settings: &CheckSettings) -> Result<Measurement> {
    let h = settings.fd_step;
    let steps = canonical_steps(&inst.family, &inst.u, &inst.config, h, &settings.quadrature)?;
    let (full, half) = (&steps.full, &steps.half);
    Ok(Measurement::new(
        full.residual,
        json!({
            "step": h,
            "half_step_residual": half.residual,
            "ratio": full.residual / half.residual,
            "extrapolated_residual": steps.extrapolated,
            "reversed_orientation_residual": full.reversed_residual,
        }),
    ))
}

fn cubic(inst: &Instance, settings: &CheckSettings) -> Result<Measurement> {
    let pair = elementary_pairs(&inst.curve)[0];
    let h = settings.cubic_step;
    let full = cubic_condition_residual(&inst.family, &inst.u, pair, h, &settings.quadrature)?;
    let half = cubic_condition_residual(&inst.family, &inst.u, pair, 0.5 * h, &settings.quadrature)?;
    Ok(Measurement::new(
        full,
        json!({
            "pair": [pair.0, pair.1],
            "step": h,
            "half_step_residual": half,
            "ratio": full / half,
        }),
    ))
}

fn dpsi_dx(inst: &Instance, settings: &CheckSettings) -> Result<Measurement> {
    let s = &settings.quadrature;
    let img = abel_jacobi(&inst.family, &inst.u, &inst.config, s)?;
    let an = dpsi_dx_analytic(&inst.curve, &curve_points(&inst.family, &inst.config))?;
    let fd = dpsi_dx_fd(&inst.curve, &img, settings.fd_step, s)?;
    Ok(Measurement::bare(relative_difference(&fd, &an)))
}

fn dpsi_du_agreement(inst: &Instance, settings: &CheckSettings) -> Result<Measurement> {
    let s = &settings.quadrature;
    let img = abel_jacobi(&inst.family, &inst.u, &inst.config, s)?;
    let an = dpsi_du_for_image(&inst.family, &inst.u, &img, s)?;
    let fd = dpsi_du_fd(&inst.family, &inst.u, &img, settings.fd_step, s)?;
    Ok(Measurement::bare(relative_difference(&fd, &an)))
}

/// Symmetry of the difference-quotient Jacobian `∂ψ/∂u`; the integral
/// representation is symmetric by construction and reported alongside.
fn dpsi_symmetry(inst: &Instance, settings: &CheckSettings) -> Result<Measurement> {
    let s = &settings.quadrature;
    let img = abel_jacobi(&inst.family, &inst.u, &inst.config, s)?;
    let an = dpsi_du_for_image(&inst.family, &inst.u, &img, s)?;
    let fd = dpsi_du_fd(&inst.family, &inst.u, &img, settings.fd_step, s)?;
    Ok(Measurement::new(
        symmetry_residual(&fd),
        json!({ "integral_representation": symmetry_residual(&an) }),
    ))
}

/// Flows of every `u_m` over a tenth of their time scale.
fn flow_checks(inst: &Instance, settings: &CheckSettings) -> Result<(Measurement, Measurement)> {
    let g = inst.family.genus();
    let mut cons: f64 = 0.0;
    let mut lin: f64 = 0.0;
    let mut per_flow = Vec::with_capacity(g);
    for m in 0..g {
        let tau = flow_time_scale(&inst.family, &inst.u, &inst.config, m)?;
        let t = settings.flow_fraction * tau;
        let traj = integrate_flow(
            &inst.family,
            &inst.config,
            m,
            t,
            settings.flow_samples,
            &settings.ode.into(),
            &settings.quadrature,
        )?;
        if let Some(t) = traj.branch_approach {
            return Err(Error::BranchApproach { t });
        }
        cons = cons.max(traj.conservation());
        lin = lin.max(traj.linearization());
        per_flow.push(json!({
            "m": m + 1,
            "t_end": t,
            "conservation": traj.conservation(),
            "linearization": traj.linearization(),
        }));
    }
    let details = json!({ "flows": per_flow });
    Ok((Measurement::new(cons, details.clone()), Measurement::new(lin, details)))
}

/// `|points_to_u(config) - u|` and the re-lift of the points from `u`.
fn roundtrip(inst: &Instance) -> Result<Measurement> {
    let fam = &inst.family;
    let u2 = fam.points_to_u(&inst.config)?;
    let scale = inst.u.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let du = inst.u.iter().zip(&u2).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale;
    let signs: Vec<f64> = inst
        .config
        .points
        .iter()
        .map(|pt| {
            let y = fam.curve_y(pt);
            let w = inst.curve.eval(pt.x).sqrt();
            if (y - w).norm() <= (y + w).norm() { 1.0 } else { -1.0 }
        })
        .collect();
    let again = fam.lift_points(&u2, &inst.config.xs(), &signs)?;
    let dp = again
        .points
        .iter()
        .zip(&inst.config.points)
        .map(|(a, b)| (a.y - b.y).norm().max((a.z - b.z).norm()) / b.y.norm().max(b.z.norm()).max(1.0))
        .fold(0.0, f64::max);
    Ok(Measurement::new(
        du.max(dp),
        json!({ "u_difference": du, "point_difference": dp }),
    ))
}

/// Coefficient-level comparison of the cut curve with `P² - 4Λ^{2N_c}`.
pub fn sw_degeneration(family: &SurfaceFamily, u: &[C64]) -> Result<Measurement> {
    let SurfaceFamily::SeibergWittenAffine { nc, lambda, masses } = family else {
        return Err(Error::InvalidArgument("degeneration check needs the Seiberg-Witten family".into()));
    };
    if !masses.is_empty() {
        return Err(Error::InvalidArgument("degeneration check needs N_f = 0".into()));
    }
    let p = family.section_polynomial(u)?;
    let expected = &(&p * &p) - &Poly::constant(lambda.powu(2 * *nc as u32) * 4.0);
    let curve = family.cut_curve(u)?;
    let diff = curve
        .f()
        .coeffs()
        .iter()
        .zip(expected.coeffs())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let len_diff = (curve.f().coeffs().len() as f64 - expected.coeffs().len() as f64).abs();
    Ok(Measurement::new(diff.max(len_diff), Value::Null))
}

/// Sheet changes along loops about single branch points: once around must
/// flip `y`, twice around must not. The residual counts the failures.
pub fn monodromy(curve: &HyperellipticCurve, xs: &[C64]) -> Result<Measurement> {
    let sep = curve.min_branch_separation();
    let mut failures = 0usize;
    let mut loops = 0usize;
    for &b in curve.branch_points() {
        let radius = 0.4 * sep;
        let start = b + radius;
        let y0 = curve.y_near(start, C64::new(1.0, 0.0));
        let once = Path::circle(b, radius, y0);
        let y1 = continue_y(curve, &once)?;
        let mut twice = once.clone();
        twice.push(Segment::Arc {
            center: b,
            radius,
            start: 0.0,
            sweep: std::f64::consts::TAU,
        });
        let y2 = continue_y(curve, &twice)?;
        if (y1 + y0).norm() > (y1 - y0).norm() {
            failures += 1;
        }
        if (y2 - y0).norm() > (y2 + y0).norm() {
            failures += 1;
        }
        loops += 2;
    }
    // a loop about the points of the configuration encloses no branch point
    // when it is small enough
    for &x in xs {
        let (_, d) = curve.nearest_branch(x);
        let y0 = curve.y_near(x + 0.5 * d, C64::new(1.0, 0.0));
        let y1 = continue_y(curve, &Path::circle(x, 0.5 * d, y0))?;
        if (y1 - y0).norm() > (y1 + y0).norm() {
            failures += 1;
        }
        loops += 1;
    }
    Ok(Measurement::new(failures as f64, json!({ "loops": loops })))
}

/// Largest `|∮ x^{g-k} dx / y|` around a circle enclosing every branch
/// point (run twice when the degree is odd, once to return to the sheet).
pub fn infinity_holomorphy(curve: &HyperellipticCurve, settings: &QuadratureSettings) -> Result<Measurement> {
    let radius = 2.0 * curve.max_branch_modulus() + 1.0;
    let y0 = curve.y_near(C64::new(radius, 0.0), C64::new(1.0, 0.0));
    let mut path = Path::circle(C64::new(0.0, 0.0), radius, y0);
    if curve.is_odd() {
        path.push(Segment::Arc {
            center: C64::new(0.0, 0.0),
            radius,
            start: 0.0,
            sweep: std::f64::consts::TAU,
        });
    }
    let res = integrate_along(curve, &path, &DifferentialSet::holomorphic(curve.genus()), settings)?;
    let worst = res.value.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let closed = (res.end_y - y0).norm() / y0.norm();
    Ok(Measurement::new(worst, json!({ "radius": radius, "end_sheet_mismatch": closed })))
}

/// `x_0 → x_1` straight versus through an offset corner, the triangle
/// between them free of branch points. Relative difference of the
/// integrals of every holomorphic differential. When no such triangle
/// exists for the first two points, a point and a nearby displacement are
/// used instead.
pub fn path_independence(
    curve: &HyperellipticCurve,
    xs: &[C64],
    settings: &QuadratureSettings,
) -> Result<Measurement> {
    let mut candidates = Vec::new();
    if xs.len() > 1 {
        candidates.push((xs[0], xs[1]));
    }
    for &x in xs.iter().chain(std::iter::once(&C64::new(0.0, 0.0))) {
        let (_, d) = curve.nearest_branch(x);
        candidates.push((x, x + C64::from_polar(0.5 * d, 0.7)));
    }
    for (a, b) in candidates {
        if let Some(m) = compare_triangle(curve, a, b, settings)? {
            return Ok(m);
        }
    }
    Err(Error::InvalidArgument("no branch-point-free triangle found".into()))
}

fn compare_triangle(
    curve: &HyperellipticCurve,
    a: C64,
    b: C64,
    settings: &QuadratureSettings,
) -> Result<Option<Measurement>> {
    let clearance = 0.5 * default_clearance(curve, &[a, b]);
    let set = DifferentialSet::holomorphic(curve.genus());
    let y0 = curve.y_near(a, C64::new(1.0, 0.0));
    let normal = (b - a) * C64::new(0.0, 1.0);
    for scale in [0.5, 0.25, 0.125, 0.0625, -0.5, -0.25, -0.125, -0.0625] {
        let corner = (a + b) * 0.5 + normal * scale;
        let straight = Path::line(a, b, y0);
        let bent = Path::polyline(&[a, corner, b], y0);
        let inside = curve.branch_points().iter().any(|&p| in_triangle(p, a, corner, b));
        if inside
            || straight.min_distance(curve).1 < clearance
            || bent.min_distance(curve).1 < clearance
        {
            continue;
        }
        let one = integrate_along(curve, &straight, &set, settings)?;
        let two = integrate_along(curve, &bent, &set, settings)?;
        let size = one.value.iter().map(|v| v.norm()).fold(f64::MIN_POSITIVE, f64::max);
        let diff = one
            .value
            .iter()
            .zip(&two.value)
            .map(|(p, q)| (p - q).norm())
            .fold(0.0, f64::max);
        return Ok(Some(Measurement::new(
            diff / size,
            json!({
                "from": [a.re, a.im],
                "to": [b.re, b.im],
                "corner": [corner.re, corner.im],
                "end_sheet_mismatch": (one.end_y - two.end_y).norm(),
            }),
        )));
    }
    Ok(None)
}

fn in_triangle(p: C64, a: C64, b: C64, c: C64) -> bool {
    let cross = |o: C64, u: C64, v: C64| (u - o).re * (v - o).im - (u - o).im * (v - o).re;
    let (d1, d2, d3) = (cross(a, b, p), cross(b, c, p), cross(c, a, p));
    let neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
    let pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
    !(neg && pos)
}

/// Arithmetic-geometric mean of positive reals.
pub fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        let (m, g) = (0.5 * (a + b), (a * b).sqrt());
        if (m - g).abs() <= 1e-17 * m {
            return m;
        }
        a = m;
        b = g;
    }
    a
}

/// `∫_{-1}^{1} dx / sqrt(1 - x⁴) = π / agm(1, √2)`, from `x = sin θ`.
pub fn lemniscate_oracle() -> f64 {
    std::f64::consts::PI / agm(1.0, std::f64::consts::SQRT_2)
}

/// The engine's half-period of `y² = 1 - x⁴` against the oracle.
pub fn lemniscate(settings: &QuadratureSettings) -> Result<Measurement> {
    let curve = HyperellipticCurve::new(Poly::from_real(&[1.0, 0.0, 0.0, 0.0, -1.0]), 1)?;
    let lo = curve.nearest_branch(C64::new(-1.0, 0.0)).0;
    let hi = curve.nearest_branch(C64::new(1.0, 0.0)).0;
    let period = branch_pair_period(&curve, lo, hi, &DifferentialSet::holomorphic(1), settings)?;
    let value = 0.5 * period.value[0].norm();
    let oracle = lemniscate_oracle();
    Ok(Measurement::new(
        (value - oracle).abs(),
        json!({ "value": value, "oracle": oracle }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{seeded_instances, FamilyKind};

    #[test]
    fn oracle_value() {
        assert!((lemniscate_oracle() - 2.622_057_554_292_119_8).abs() < 1e-15);
        assert!(lemniscate(&QuadratureSettings::default()).unwrap().residual < 1e-12);
    }

    #[test]
    fn triangle_membership() {
        let (a, b, c) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0));
        assert!(in_triangle(C64::new(0.2, 0.2), a, b, c));
        assert!(!in_triangle(C64::new(0.8, 0.8), a, b, c));
    }

    #[test]
    fn engine_checks_on_instances() {
        let s = QuadratureSettings::default();
        for kind in FamilyKind::defaults() {
            let inst = &seeded_instances(kind, 3, 1).unwrap()[0];
            let m = monodromy(&inst.curve, &inst.config.xs()).unwrap();
            assert_eq!(m.residual, 0.0);
            let h = infinity_holomorphy(&inst.curve, &s).unwrap();
            let p = path_independence(&inst.curve, &inst.config.xs(), &s).unwrap();
            eprintln!("{kind:?}: inf {:e} path {:e}", h.residual, p.residual);
            assert!(h.residual < 1e-8 && p.residual < 1e-9);
        }
    }
}
