//! The commands behind the CLI: each turns a [`RunConfig`] into a
//! [`Report`].

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::abel_jacobi::{elementary_periods_on_curve, pair_period};
use crate::checks::{applies, run_instance_checks, Measurement, INSTANCE_CHECKS};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::instances::Instance;
use crate::neumann::{self, NeumannParams, NeumannState};
use crate::report::{CheckRecord, Report, SkippedCheck};
use crate::riemann::DifferentialSet;
use crate::rng::SplitMix64;
use crate::symplectic::{calibrate_bracket_sign, flow_time_scale, integrate_flow, FlowTrajectory};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    /// Multiplies every pass threshold.
    pub tol_scale: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            workers: 0,
            tol_scale: 1.0,
        }
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
}

fn config_error(field: &str, message: &str) -> Error {
    Error::Config {
        field: field.into(),
        message: message.into(),
    }
}

fn family_label(cfg: &RunConfig) -> String {
    cfg.family
        .as_ref()
        .map(|f| format!("{:?}", f.kind()))
        .unwrap_or_else(|| "none".into())
}

fn threshold(thresholds: &BTreeMap<String, f64>, name: &str) -> f64 {
    thresholds.get(name).copied().unwrap_or(0.0)
}

/// Instances of the config, or a failed `instance_setup` record when they
/// cannot be built. Config errors are returned as such.
fn instances_or_record(cfg: &RunConfig, report: &mut Report) -> Result<Option<Vec<Instance>>> {
    let start = Instant::now();
    match cfg.instances() {
        Ok(v) => {
            report.instances = v.len();
            if let Some(first) = v.first() {
                report.conventions.calibrated_bracket_sign =
                    calibrate_bracket_sign(&first.family, &first.u, &first.config).ok();
            }
            Ok(Some(v))
        }
        Err(e @ Error::Config { .. }) => Err(e),
        Err(e) => {
            let label = family_label(cfg);
            report.records.push(CheckRecord::failed(
                "instance_setup",
                &label,
                0.0,
                start.elapsed().as_secs_f64(),
                &e,
                Value::Null,
            ));
            report.finish();
            Ok(None)
        }
    }
}

/// Largest residual over the instances, with per-instance details. The
/// ratio of suite maxima at the full and halved step is added when the
/// check reports one.
fn aggregate(
    name: &str,
    family: &str,
    threshold: f64,
    results: Vec<(Result<Measurement>, f64)>,
) -> CheckRecord {
    let wall: f64 = results.iter().map(|r| r.1).sum();
    if let Some((i, e)) = results
        .iter()
        .enumerate()
        .find_map(|(i, r)| r.0.as_ref().err().map(|e| (i, e)))
    {
        return CheckRecord::failed(name, family, threshold, wall, e, json!({ "instance": i }));
    }
    let ms: Vec<Measurement> = results.into_iter().map(|r| r.0.expect("checked")).collect();
    let residual = ms.iter().map(|m| m.residual).fold(0.0, f64::max);
    let mut details = serde_json::Map::new();
    details.insert("per_instance".into(), json!(ms.iter().map(|m| m.residual).collect::<Vec<_>>()));
    if ms.iter().any(|m| !m.details.is_null()) {
        details.insert("instances".into(), json!(ms.iter().map(|m| &m.details).collect::<Vec<_>>()));
    }
    let halves: Option<Vec<f64>> = ms
        .iter()
        .map(|m| m.details.get("half_step_residual").and_then(Value::as_f64))
        .collect();
    if let Some(h) = halves {
        let hmax = h.iter().copied().fold(0.0, f64::max);
        details.insert("half_step_max".into(), json!(hmax));
        details.insert("suite_ratio".into(), json!(residual / hmax));
    }
    CheckRecord::measured(name, family, residual, threshold, wall, Value::Object(details))
}

/// Every applicable instance check on every instance of the config.
pub fn run_verify(cfg: &RunConfig, opts: &RunOptions) -> Result<Report> {
    let mut report = Report::new("verify", cfg.seed(), opts.tol_scale);
    let label = family_label(cfg);
    report.family = Some(label.clone());
    let requested: Vec<String> = match &cfg.checks {
        Some(c) => c.clone(),
        None => INSTANCE_CHECKS.iter().map(|s| s.to_string()).collect(),
    };
    for name in &requested {
        if !INSTANCE_CHECKS.contains(&name.as_str()) {
            return Err(config_error("checks", &format!("unknown check {name}")));
        }
    }
    if requested.is_empty() {
        report.finish();
        return Ok(report);
    }
    let Some(instances) = instances_or_record(cfg, &mut report)? else {
        return Ok(report);
    };
    let thresholds = cfg.thresholds(opts.tol_scale);
    let settings = cfg.check_settings();
    let family = &instances[0].family;
    let mut names: Vec<&str> = Vec::new();
    for name in &requested {
        if applies(name, family) {
            names.push(name.as_str());
        } else {
            report.skipped.push(SkippedCheck {
                name: name.clone(),
                reason: "needs the Seiberg-Witten family with no masses".into(),
            });
        }
    }
    // flows share one integration per instance
    let mut groups: Vec<Vec<&str>> = Vec::new();
    let flows: Vec<&str> = names.iter().copied().filter(|n| n.starts_with("flow_")).collect();
    if !flows.is_empty() {
        groups.push(flows);
    }
    groups.extend(names.iter().filter(|n| !n.starts_with("flow_")).map(|n| vec![*n]));
    let tasks: Vec<(usize, usize)> = (0..instances.len())
        .flat_map(|i| (0..groups.len()).map(move |g| (i, g)))
        .collect();
    let outcomes: Vec<(BTreeMap<String, Result<Measurement>>, f64)> = pool(opts.workers)?.install(|| {
        tasks
            .par_iter()
            .map(|&(i, g)| {
                let start = Instant::now();
                let out = run_instance_checks(&instances[i], &groups[g], &settings);
                (out, start.elapsed().as_secs_f64())
            })
            .collect()
    });
    let mut by_name: BTreeMap<String, Vec<(Result<Measurement>, f64)>> = BTreeMap::new();
    // tasks are instance-major, so each name collects instances in order
    for (out, time) in outcomes {
        let n = out.len() as f64;
        for (name, r) in out {
            by_name.entry(name).or_default().push((r, time / n));
        }
    }
    for (name, results) in by_name {
        let t = threshold(&thresholds, &name);
        report.records.push(aggregate(&name, &label, t, results));
    }
    report.finish();
    Ok(report)
}

/// The flow of `u_m` on the first instance.
pub fn run_flow(cfg: &RunConfig, opts: &RunOptions) -> Result<(Report, Option<FlowTrajectory>)> {
    let spec = cfg.flow.as_ref().ok_or_else(|| config_error("flow", "missing"))?;
    let mut report = Report::new("flow", cfg.seed(), opts.tol_scale);
    let label = family_label(cfg);
    report.family = Some(label.clone());
    let Some(instances) = instances_or_record(cfg, &mut report)? else {
        return Ok((report, None));
    };
    let inst = &instances[0];
    let m = spec.m - 1;
    if m >= inst.family.genus() {
        return Err(config_error("flow.m", &format!("genus is {}", inst.family.genus())));
    }
    let thresholds = cfg.thresholds(opts.tol_scale);
    let settings = cfg.check_settings();
    let start = Instant::now();
    let result = (|| {
        let t_end = match spec.t {
            Some(t) => t,
            None => settings.flow_fraction * flow_time_scale(&inst.family, &inst.u, &inst.config, m)?,
        };
        integrate_flow(
            &inst.family,
            &inst.config,
            m,
            t_end,
            spec.samples,
            &settings.ode.into(),
            &settings.quadrature,
        )
    })();
    let wall = start.elapsed().as_secs_f64();
    match result {
        Ok(traj) => {
            let details = json!({
                "m": spec.m,
                "t_end": traj.times.last().copied().unwrap_or(0.0),
                "samples": traj.times.len(),
                "branch_approach": traj.branch_approach,
            });
            for (name, value) in [
                ("flow_conservation", traj.conservation()),
                ("flow_linearization", traj.linearization()),
                ("flow_surface", traj.surface_residual(&inst.family)),
            ] {
                report.records.push(CheckRecord::measured(
                    name,
                    &label,
                    value,
                    threshold(&thresholds, name),
                    wall,
                    details.clone(),
                ));
            }
            report.finish();
            Ok((report, Some(traj)))
        }
        Err(e) => {
            for name in ["flow_conservation", "flow_linearization", "flow_surface"] {
                report
                    .records
                    .push(CheckRecord::failed(name, &label, threshold(&thresholds, name), wall, &e, Value::Null));
            }
            report.finish();
            Ok((report, None))
        }
    }
}

/// Elementary periods of the first instance's curve, their antisymmetry
/// under reversal of each pair, and the cubic condition on the first pair.
pub fn run_periods(cfg: &RunConfig, opts: &RunOptions) -> Result<Report> {
    let mut report = Report::new("periods", cfg.seed(), opts.tol_scale);
    let label = family_label(cfg);
    report.family = Some(label.clone());
    let Some(instances) = instances_or_record(cfg, &mut report)? else {
        return Ok(report);
    };
    let inst = &instances[0];
    let thresholds = cfg.thresholds(opts.tol_scale);
    let settings = cfg.check_settings();
    let start = Instant::now();
    let periods = (|| {
        let data = elementary_periods_on_curve(&inst.curve, &settings.quadrature)?;
        let set = DifferentialSet::holomorphic(inst.curve.genus());
        let n = inst.curve.branch_points().len();
        let mut worst: f64 = 0.0;
        for (p, &(i, j)) in data.periods.iter().zip(&data.pairs) {
            if j == n {
                continue;
            }
            let back = pair_period(&inst.curve, (j, i), &set, &settings.quadrature)?;
            let size = p.value.iter().map(|v| v.norm()).fold(f64::MIN_POSITIVE, f64::max);
            for (a, b) in p.value.iter().zip(&back.value) {
                worst = worst.max((a + b).norm() / size);
            }
        }
        Ok::<_, Error>((data, worst))
    })();
    let wall = start.elapsed().as_secs_f64();
    match periods {
        Ok((data, worst)) => {
            report.data = json!({
                "branch_points": data.branch_points,
                "pairs": data.pairs,
                "e": data.e,
            });
            report.records.push(CheckRecord::measured(
                "period_antisymmetry",
                &label,
                worst,
                threshold(&thresholds, "period_antisymmetry"),
                wall,
                Value::Null,
            ));
        }
        Err(e) => report.records.push(CheckRecord::failed(
            "period_antisymmetry",
            &label,
            threshold(&thresholds, "period_antisymmetry"),
            wall,
            &e,
            Value::Null,
        )),
    }
    let start = Instant::now();
    let cubic = run_instance_checks(inst, &["cubic"], &settings).remove("cubic").expect("requested");
    report.records.push(aggregate(
        "cubic",
        &label,
        threshold(&thresholds, "cubic"),
        vec![(cubic, start.elapsed().as_secs_f64())],
    ));
    report.finish();
    Ok(report)
}

/// Hamiltonians recovered by interpolation from the configured points.
pub fn run_interp(cfg: &RunConfig, opts: &RunOptions) -> Result<Report> {
    let mut report = Report::new("interp", cfg.seed(), opts.tol_scale);
    let label = family_label(cfg);
    report.family = Some(label.clone());
    let Some(instances) = instances_or_record(cfg, &mut report)? else {
        return Ok(report);
    };
    let thresholds = cfg.thresholds(opts.tol_scale);
    let start = Instant::now();
    let mut round: f64 = 0.0;
    let mut surf: f64 = 0.0;
    let mut data = Vec::new();
    let mut failure = None;
    for inst in &instances {
        match inst.family.points_to_u(&inst.config) {
            Ok(u) => {
                let scale = inst.u.iter().map(|v| v.norm()).fold(1.0, f64::max);
                let d = inst.u.iter().zip(&u).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                round = round.max(d / scale);
                for pt in &inst.config.points {
                    surf = surf.max(inst.family.surface_residual(pt));
                }
                let p = inst.family.section_polynomial(&u)?;
                data.push(json!({ "u": u, "section": p.coeffs(), "points": inst.config.points }));
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    let wall = start.elapsed().as_secs_f64();
    for (name, value) in [("interp_roundtrip", round), ("interp_surface", surf)] {
        let t = threshold(&thresholds, name);
        report.records.push(match &failure {
            None => CheckRecord::measured(name, &label, value, t, wall, Value::Null),
            Some(e) => CheckRecord::failed(name, &label, t, wall, e, Value::Null),
        });
    }
    report.data = json!({ "instances": data });
    report.finish();
    Ok(report)
}

/// Plot data of a Neumann run: sample times, `u` and `ψ`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NeumannSeries {
    pub times: Vec<f64>,
    pub u: Vec<Vec<C64>>,
    pub psi: Vec<Vec<C64>>,
}

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn is_stationary(params: &NeumannParams, state: &NeumannState) -> bool {
    let (dq, dp) = neumann::mechanical_rhs(params, state);
    dq.iter().chain(&dp).all(|v| v.abs() < 1e-14)
}

/// The Neumann suite: conservation, the two routes to `u`, the sheet rule,
/// linearization of `ψ`, time reversal and interlacing.
pub fn run_neumann(cfg: &RunConfig, opts: &RunOptions) -> Result<(Report, NeumannSeries)> {
    let spec = cfg.neumann.as_ref().ok_or_else(|| config_error("neumann", "missing"))?;
    let mut report = Report::new("neumann", cfg.seed(), opts.tol_scale);
    report.family = Some("NeumannRational".into());
    let params = NeumannParams::new(spec.c.clone(), spec.r).map_err(|e| config_error("neumann.c", &e.to_string()))?;
    let thresholds = cfg.thresholds(opts.tol_scale);
    let th = |n: &str| threshold(&thresholds, n);
    let label = "NeumannRational";
    let settings = cfg.check_settings();
    let mut rng = SplitMix64::new(cfg.seed());
    let state0 = match (&spec.q0, &spec.p0) {
        (Some(q), Some(p)) => NeumannState { q: q.clone(), p: p.clone() },
        _ => neumann::random_state(&params, &mut rng.fork(), 1.0)?,
    };
    let (a, b) = state0.constraint_drift(&params);
    if a.max(b) > 1e-10 {
        return Err(config_error("neumann", "initial state violates the constraints"));
    }
    report.instances = 1;
    report.data = json!({ "q0": state0.q, "p0": state0.p });
    let mut series = NeumannSeries::default();
    let push = |report: &mut Report, name: &str, start: Instant, r: Result<(f64, Value)>| {
        let wall = start.elapsed().as_secs_f64();
        report.records.push(match r {
            Ok((v, d)) => CheckRecord::measured(name, label, v, th(name), wall, d),
            Err(e) => CheckRecord::failed(name, label, th(name), wall, &e, Value::Null),
        });
    };

    let start = Instant::now();
    let traj = neumann::integrate(&params, &state0, spec.t, spec.samples, &neumann::default_ode_settings());
    let traj = match traj {
        Ok(t) => t,
        Err(e) => {
            for name in ["neumann_constraints", "neumann_energy", "neumann_integrals"] {
                push(&mut report, name, start, Err(e.clone()));
            }
            report.finish();
            return Ok((report, series));
        }
    };
    let projections = json!({ "projections": traj.projections });
    let drift = traj.drift(|s| {
        let (a, b) = s.constraint_drift(&params);
        vec![a, b]
    });
    push(&mut report, "neumann_constraints", start, Ok((drift, projections.clone())));
    let e0 = neumann::energy(&params, &state0);
    let de = traj
        .states
        .iter()
        .map(|s| (neumann::energy(&params, s) - e0).abs())
        .fold(0.0, f64::max);
    push(&mut report, "neumann_energy", start, Ok((de, Value::Null)));
    let f0 = neumann::uhlenbeck_integrals(&params, &state0);
    let df = traj
        .states
        .iter()
        .map(|s| max_dev(&neumann::uhlenbeck_integrals(&params, s), &f0))
        .fold(0.0, f64::max);
    push(&mut report, "neumann_integrals", start, Ok((df, Value::Null)));

    let start = Instant::now();
    if spec.r == 1.0 {
        let identity = |s: &NeumannState| {
            let f = neumann::uhlenbeck_integrals(&params, s);
            let h = 0.5 * params.c().iter().zip(&f).map(|(c, f)| c * f).sum::<f64>();
            (neumann::energy(&params, s) - h).abs()
        };
        // exact on states; along the flow it inherits the integrator drift
        let states = (|| {
            let mut worst = identity(&state0);
            let mut draw = rng.fork();
            for _ in 0..spec.interlacing_states {
                worst = worst.max(identity(&neumann::random_state(&params, &mut draw, 1.0)?));
            }
            Ok::<_, Error>((worst, json!({ "states": spec.interlacing_states + 1 })))
        })();
        push(&mut report, "neumann_energy_identity", start, states);
        let start = Instant::now();
        let worst = traj.states.iter().map(identity).fold(0.0, f64::max);
        push(&mut report, "neumann_energy_identity_flow", start, Ok((worst, Value::Null)));
    } else {
        for name in ["neumann_energy_identity", "neumann_energy_identity_flow"] {
            report.skipped.push(SkippedCheck {
                name: name.into(),
                reason: "the identity H = (1/2) sum c_n F_n is checked for r = 1 only".into(),
            });
        }
    }

    // two routes to u and the sheet rule at every sample
    let start = Instant::now();
    let routes = (|| {
        let fam = params.family();
        let mut worst: f64 = 0.0;
        let mut mismatch: f64 = 0.0;
        for s in &traj.states {
            // an identity on the constraint surface; drift off it is the
            // business of neumann_constraints
            let s = &s.project(&params);
            let (_, u) = neumann::spectral_data(&params, s)?;
            let sep = neumann::separated_points(&params, s)?;
            let u2 = fam.points_to_u(&sep.config)?;
            let scale = u.iter().map(|v| v.norm()).fold(1.0, f64::max);
            let d = u.iter().zip(&u2).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            worst = worst.max(d / scale);
            mismatch = mismatch.max(sep.flow_mismatch);
        }
        Ok::<_, Error>((worst, mismatch))
    })();
    let (two_route, sign_rule) = match routes {
        Ok((a, b)) => (Ok((a, Value::Null)), Ok((b, Value::Null))),
        Err(e) => (Err(e.clone()), Err(e)),
    };
    push(&mut report, "neumann_two_route", start, two_route);
    push(&mut report, "neumann_sign_rule", start, sign_rule);

    // linearization and time reversal
    let start = Instant::now();
    if is_stationary(&params, &state0) {
        let g = params.dim() - 1;
        let details = json!({ "stationary": true, "slopes": vec![C64::new(0.0, 0.0); g] });
        for name in ["neumann_affine_fit", "neumann_slopes", "neumann_time_reversal"] {
            push(&mut report, name, start, Ok((0.0, details.clone())));
        }
    } else {
        let lin = neumann::linearization_check(&params, &state0, spec.t, spec.samples, &settings.quadrature);
        match lin {
            Ok(rep) => {
                let details = json!({
                    "slopes": rep.slopes,
                    "expected": rep.expected,
                    "skipped_samples": rep.skipped,
                    "combined_residual": rep.residual,
                });
                push(&mut report, "neumann_affine_fit", start, Ok((rep.fit_residual, details.clone())));
                push(&mut report, "neumann_slopes", start, Ok((rep.slope_error, details)));
                for (t, p) in rep.times.iter().zip(&rep.psi) {
                    let idx = traj.times.iter().position(|s| s == t).expect("sample time");
                    series.times.push(*t);
                    series.u.push(neumann::spectral_data(&params, &traj.states[idx].project(&params))?.1);
                    series.psi.push(p.clone());
                }
                let start = Instant::now();
                let rev = neumann::reversed_slopes(&params, &state0, spec.t, spec.samples, &settings.quadrature)
                    .map(|back| {
                        let worst = back
                            .iter()
                            .zip(&rep.slopes)
                            .map(|(a, b)| (a + b).norm())
                            .fold(0.0, f64::max);
                        (worst, json!({ "reversed_slopes": back }))
                    });
                push(&mut report, "neumann_time_reversal", start, rev);
            }
            Err(e) => {
                for name in ["neumann_affine_fit", "neumann_slopes", "neumann_time_reversal"] {
                    push(&mut report, name, start, Err(e.clone()));
                }
            }
        }
    }

    // interlacing on random states
    let start = Instant::now();
    let inter = (|| {
        // roots of the real separation polynomial carry roundoff-sized
        // imaginary parts; anything beyond that is a violation
        let tol = 1e-9 * params.c().iter().fold(1.0f64, |m, c| m.max(c.abs()));
        let mut violations = 0usize;
        let mut worst: f64 = 0.0;
        for _ in 0..spec.interlacing_states {
            let s = neumann::random_state(&params, &mut rng.fork(), 1.0)?;
            let sep = neumann::separated_points(&params, &s)?;
            let c = params.c();
            for (j, pt) in sep.config.points.iter().enumerate() {
                let off = (c[j] - pt.x.re).max(pt.x.re - c[j + 1]).max(0.0).max(pt.x.im.abs());
                worst = worst.max(off);
                if off > tol {
                    violations += 1;
                }
            }
        }
        Ok::<_, Error>((
            violations as f64,
            json!({ "states": spec.interlacing_states, "largest_excursion": worst }),
        ))
    })();
    push(&mut report, "neumann_interlacing", start, inter);
    report.finish();
    Ok((report, series))
}
