//! Thin wrapper over the Dormand–Prince 8(5,3) integrator of `ode_solvers`:
//! fallible right-hand sides, a stop predicate, uniform samples and the list
//! of accepted steps.

use std::cell::RefCell;

use ode_solvers::{DVector, Dop853, OutputType, System};

use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for OdeSettings {
    fn default() -> Self {
        OdeSettings {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct OdeOutput {
    /// Uniform sample times and states.
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Every accepted step `(t, state)`, starting with the initial state.
    pub steps: Vec<(f64, Vec<f64>)>,
    /// Time at which the stop predicate fired.
    pub stopped_at: Option<f64>,
}

#[derive(Default)]
struct Record {
    failure: Option<Error>,
    steps: Vec<(f64, Vec<f64>)>,
    stopped_at: Option<f64>,
}

struct Adapter<'a, R, S> {
    rhs: &'a R,
    stop: S,
    record: &'a RefCell<Record>,
}

impl<R, S> System<f64, DVector<f64>> for Adapter<'_, R, S>
where
    R: Fn(f64, &[f64], &mut [f64]) -> Result<()>,
    S: FnMut(f64, &[f64]) -> bool,
{
    fn system(&self, t: f64, y: &DVector<f64>, dy: &mut DVector<f64>) {
        if self.record.borrow().failure.is_some() {
            dy.fill(0.0);
            return;
        }
        if let Err(e) = (self.rhs)(t, y.as_slice(), dy.as_mut_slice()) {
            dy.fill(0.0);
            self.record.borrow_mut().failure = Some(e);
        }
    }

    fn solout(&mut self, t: f64, y: &DVector<f64>, _dy: &DVector<f64>) -> bool {
        let mut record = self.record.borrow_mut();
        if record.failure.is_some() {
            return true;
        }
        record.steps.push((t, y.as_slice().to_vec()));
        if (self.stop)(t, y.as_slice()) {
            record.stopped_at = Some(t);
            return true;
        }
        false
    }
}

/// Integrate `y' = rhs(t, y)` from `0` to `t_end`, sampling every
/// `t_end / samples`. Integration ends early when `stop(t, y)` is true.
pub fn integrate<R, S>(
    rhs: &R,
    stop: S,
    y0: Vec<f64>,
    t_end: f64,
    samples: usize,
    settings: &OdeSettings,
) -> Result<OdeOutput>
where
    R: Fn(f64, &[f64], &mut [f64]) -> Result<()>,
    S: FnMut(f64, &[f64]) -> bool,
{
    if t_end == 0.0 {
        return Ok(OdeOutput {
            times: vec![0.0],
            states: vec![y0.clone()],
            steps: vec![(0.0, y0)],
            stopped_at: None,
        });
    }
    if !(t_end > 0.0) || samples == 0 {
        return Err(Error::InvalidArgument(
            "need t_end > 0 and at least one sample".into(),
        ));
    }
    let record = RefCell::new(Record {
        steps: vec![(0.0, y0.clone())],
        ..Record::default()
    });
    let mut stop = stop;
    let mut times = vec![0.0];
    let mut states = vec![y0.clone()];
    let mut y = y0;
    let dt = t_end / samples as f64;
    // The solver hands `solout` its latest dense sample rather than the
    // accepted state, so sampling is done by restarting at each sample time.
    for n in 0..samples {
        let t0 = n as f64 * dt;
        let t1 = if n + 1 == samples { t_end } else { (n + 1) as f64 * dt };
        let adapter = Adapter {
            rhs,
            stop: &mut stop,
            record: &record,
        };
        let mut solver = Dop853::new(
            adapter,
            t0,
            t1,
            t1 - t0,
            DVector::from_vec(y.clone()),
            settings.rel_tol,
            settings.abs_tol,
        );
        solver.set_output(OutputType::Continuous);
        let result = solver.integrate();
        let (xs, ys) = (solver.x_out(), solver.y_out());
        let t_last = *xs.last().expect("solver output");
        y = ys.last().expect("solver output").as_slice().to_vec();
        drop(solver);
        let r = record.borrow();
        if r.failure.is_some() {
            break;
        }
        if let Err(e) = result {
            return Err(Error::NonConvergence(format!("ODE integrator: {e}")));
        }
        times.push(t_last);
        states.push(y.clone());
        if r.stopped_at.is_some() {
            break;
        }
    }
    let record = record.into_inner();
    if let Some(e) = record.failure {
        return Err(e);
    }
    Ok(OdeOutput {
        times,
        states,
        steps: record.steps,
        stopped_at: record.stopped_at,
    })
}

/// Pack complex values as consecutive `(re, im)` pairs.
pub fn pack(v: &[C64]) -> Vec<f64> {
    v.iter().flat_map(|c| [c.re, c.im]).collect()
}

pub fn unpack(v: &[f64]) -> Vec<C64> {
    v.chunks_exact(2).map(|c| C64::new(c[0], c[1])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
            Ok(())
        };
        let out = integrate(&rhs, |_, _| false, vec![1.0, 0.0], 2.0, 4, &OdeSettings::default()).unwrap();
        let last = out.states.last().unwrap();
        assert!((out.times.last().unwrap() - 2.0).abs() < 1e-12);
        assert!((last[0] - 2f64.cos()).abs() < 1e-9);
        assert!(out.steps.len() > 2);
    }

    #[test]
    fn stop_and_failure() {
        let rhs = |_t: f64, _y: &[f64], dy: &mut [f64]| {
            dy[0] = 1.0;
            Ok(())
        };
        let out = integrate(&rhs, |_, y| y[0] > 0.5, vec![0.0], 2.0, 4, &OdeSettings::default()).unwrap();
        assert!(out.stopped_at.unwrap() < 2.0);
        let bad = |t: f64, _y: &[f64], dy: &mut [f64]| {
            dy[0] = 1.0;
            if t > 0.3 {
                Err(Error::BranchApproach { t })
            } else {
                Ok(())
            }
        };
        let err = integrate(&bad, |_, _| false, vec![0.0], 1.0, 4, &OdeSettings::default());
        assert!(matches!(err, Err(Error::BranchApproach { .. })));
    }
}
