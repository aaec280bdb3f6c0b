//! Machine-readable reports and plot data.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::abel_jacobi::DPSI_DU_SIGN;
use crate::error::{Error, Result};
use crate::symplectic::BRACKET_SIGN;
use crate::C64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub message: String,
    /// Failure of the numerical machinery (no convergence, tolerance not
    /// met) rather than of the input.
    pub numerical: bool,
}

impl From<&Error> for ErrorInfo {
    fn from(e: &Error) -> Self {
        ErrorInfo {
            message: e.to_string(),
            numerical: e.is_numerical(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub family: String,
    /// `null` when the check could not be evaluated.
    pub residual: Option<f64>,
    pub threshold: f64,
    pub pass: bool,
    pub wall_time: f64,
    pub details: Value,
    pub error: Option<ErrorInfo>,
}

impl CheckRecord {
    pub fn measured(name: &str, family: &str, residual: f64, threshold: f64, wall_time: f64, details: Value) -> Self {
        CheckRecord {
            name: name.to_string(),
            family: family.to_string(),
            residual: Some(residual),
            threshold,
            pass: residual <= threshold,
            wall_time,
            details,
            error: None,
        }
    }

    pub fn failed(name: &str, family: &str, threshold: f64, wall_time: f64, error: &Error, details: Value) -> Self {
        CheckRecord {
            name: name.to_string(),
            family: family.to_string(),
            residual: None,
            threshold,
            pass: false,
            wall_time,
            details,
            error: Some(error.into()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedCheck {
    pub name: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub pass_count: usize,
    pub fail_count: usize,
}

/// Conventions the numbers depend on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    /// Sheet of the base point at infinity on even-degree curves: `y/x^{d/2}`
    /// tends to `+sqrt(leading)` along the positive real axis.
    pub base_sheet: String,
    pub bracket_sign: f64,
    /// Measured at run time from the flow of `u_1`; `null` when no surface
    /// instance was evaluated.
    pub calibrated_bracket_sign: Option<f64>,
    pub dpsi_du_sign: f64,
    /// `d/dt` of the Neumann motion against the Hamiltonian flow of `H(u)`.
    pub neumann_time_normalization: String,
    pub two_form: String,
}

impl Default for Conventions {
    fn default() -> Self {
        Conventions {
            base_sheet: "+".into(),
            bracket_sign: BRACKET_SIGN,
            calibrated_bracket_sign: None,
            dpsi_du_sign: DPSI_DU_SIGN,
            neumann_time_normalization: "4i/r".into(),
            two_form: "sum_j dz_j ^ dx_j / y_j (dy_j ^ dx_j / y_j for the Seiberg-Witten family)".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub family: Option<String>,
    pub seed: u64,
    pub tol_scale: f64,
    pub instances: usize,
    pub conventions: Conventions,
    pub records: Vec<CheckRecord>,
    pub skipped: Vec<SkippedCheck>,
    pub summary: Summary,
    /// Command output beyond the checks (periods, recovered `u`, ...).
    pub data: Value,
}

impl Report {
    pub fn new(command: &str, seed: u64, tol_scale: f64) -> Report {
        Report {
            command: command.to_string(),
            family: None,
            seed,
            tol_scale,
            instances: 0,
            conventions: Conventions::default(),
            records: Vec::new(),
            skipped: Vec::new(),
            summary: Summary::default(),
            data: Value::Null,
        }
    }

    /// Sort records by name and recount.
    pub fn finish(&mut self) {
        self.records.sort_by(|a, b| a.name.cmp(&b.name));
        self.skipped.sort_by(|a, b| a.name.cmp(&b.name));
        let pass = self.records.iter().filter(|r| r.pass).count();
        self.summary = Summary {
            pass_count: pass,
            fail_count: self.records.len() - pass,
        };
    }

    pub fn record(&self, name: &str) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    /// 0 when everything passed, 3 when a failure was numerical, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.records.iter().all(|r| r.pass) {
            0
        } else if self
            .records
            .iter()
            .any(|r| r.error.as_ref().is_some_and(|e| e.numerical))
        {
            3
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The JSON with every `wall_time` zeroed, for comparing runs.
    pub fn without_timing(&self) -> String {
        let mut r = self.clone();
        for rec in &mut r.records {
            rec.wall_time = 0.0;
        }
        r.to_json()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// One row per check: name, residual, threshold, pass.
pub fn write_report_csv(report: &Report, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(["check", "residual", "threshold", "pass"]).map_err(csv_error)?;
    for r in &report.records {
        let residual = r.residual.map(|v| format!("{v:e}")).unwrap_or_default();
        w.write_record([
            r.name.as_str(),
            residual.as_str(),
            &format!("{:e}", r.threshold),
            if r.pass { "true" } else { "false" },
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `t`, then real and imaginary parts of each `u_k` and `ψ_k`.
pub fn write_trajectory_csv(times: &[f64], u: &[Vec<C64>], psi: &[Vec<C64>], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    let g_u = u.first().map_or(0, |v| v.len());
    let g_psi = psi.first().map_or(0, |v| v.len());
    let mut header = vec!["t".to_string()];
    for k in 1..=g_u {
        header.push(format!("u{k}_re"));
        header.push(format!("u{k}_im"));
    }
    for k in 1..=g_psi {
        header.push(format!("psi{k}_re"));
        header.push(format!("psi{k}_im"));
    }
    w.write_record(&header).map_err(csv_error)?;
    for (i, t) in times.iter().enumerate() {
        let mut row = vec![format!("{t:e}")];
        for v in u[i].iter().chain(&psi[i]) {
            row.push(format!("{:e}", v.re));
            row.push(format!("{:e}", v.im));
        }
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_and_sorting() {
        let mut r = Report::new("verify", 0, 1.0);
        assert_eq!(r.exit_code(), 0);
        r.records.push(CheckRecord::measured("b", "x", 1.0, 2.0, 0.0, Value::Null));
        r.records.push(CheckRecord::measured("a", "x", 3.0, 2.0, 0.0, Value::Null));
        r.finish();
        assert_eq!(r.records[0].name, "a");
        assert_eq!(r.summary, Summary { pass_count: 1, fail_count: 1 });
        assert_eq!(r.exit_code(), 1);
        r.records.push(CheckRecord::failed(
            "c",
            "x",
            1.0,
            0.0,
            &Error::NonConvergence("x".into()),
            Value::Null,
        ));
        assert_eq!(r.exit_code(), 3);
    }

    #[test]
    fn csv_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let one = vec![vec![C64::new(1.0, 2.0)]];
        write_trajectory_csv(&[0.0], &one, &one, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("t,u1_re,u1_im,psi1_re,psi1_im"));
        let mut r = Report::new("verify", 0, 1.0);
        r.records.push(CheckRecord::measured("a", "x", 1.0, 2.0, 0.0, Value::Null));
        r.records.push(CheckRecord::measured("b", "x", 1.0, 2.0, 0.0, Value::Null));
        write_report_csv(&r, &p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap().lines().count(), 3);
    }
}
