//! Run configuration: a JSON document naming a family, where instances
//! come from, tolerances and the checks to run. Complex numbers are
//! `[re, im]` pairs.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::checks::{default_thresholds, CheckSettings, OdeSettingsSpec};
use crate::error::{Error, Result};
use crate::instances::{instance_from, random_family, random_instance, FamilyKind, Instance};
use crate::poly::{BiPoly, Poly};
use crate::riemann::QuadratureSettings;
use crate::rng::SplitMix64;
use crate::surface::SurfaceFamily;
use crate::C64;

/// A family with its fixed data. Leaving out every coefficient field draws
/// a random family of that kind for each instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    EllipticK3 {
        f: Option<Vec<C64>>,
        g: Option<Vec<C64>>,
    },
    DoubleCoverK3 {
        /// `f2[i][j]` multiplies `x^i z^j`.
        f2: Option<Vec<Vec<C64>>>,
    },
    RationalElliptic {
        f: Option<Vec<C64>>,
        g: Option<Vec<C64>>,
        c: Option<C64>,
    },
    Neumann {
        c: Option<Vec<f64>>,
        /// Genus, for random constants.
        n: Option<usize>,
        r: Option<f64>,
    },
    SeibergWitten {
        nc: usize,
        #[serde(default)]
        nf: Option<usize>,
        lambda: Option<C64>,
        masses: Option<Vec<C64>>,
    },
}

fn field_error(field: &str, e: Error) -> Error {
    Error::Config {
        field: field.to_string(),
        message: e.to_string(),
    }
}

impl FamilySpec {
    pub fn kind(&self) -> FamilyKind {
        match self {
            FamilySpec::EllipticK3 { .. } => FamilyKind::EllipticK3,
            FamilySpec::DoubleCoverK3 { .. } => FamilyKind::DoubleCoverK3,
            FamilySpec::RationalElliptic { .. } => FamilyKind::RationalElliptic,
            FamilySpec::Neumann { c, n, .. } => FamilyKind::NeumannRational {
                n: c.as_ref().map(|c| c.len().saturating_sub(1)).or(*n).unwrap_or(2),
            },
            FamilySpec::SeibergWitten { nc, nf, masses, .. } => FamilyKind::SeibergWittenAffine {
                nc: *nc,
                nf: masses.as_ref().map(|m| m.len()).or(*nf).unwrap_or(0),
            },
        }
    }

    pub fn from_kind(kind: FamilyKind) -> FamilySpec {
        match kind {
            FamilyKind::EllipticK3 => FamilySpec::EllipticK3 { f: None, g: None },
            FamilyKind::DoubleCoverK3 => FamilySpec::DoubleCoverK3 { f2: None },
            FamilyKind::RationalElliptic => FamilySpec::RationalElliptic { f: None, g: None, c: None },
            FamilyKind::NeumannRational { n } => FamilySpec::Neumann { c: None, n: Some(n), r: None },
            FamilyKind::SeibergWittenAffine { nc, nf } => FamilySpec::SeibergWitten {
                nc,
                nf: Some(nf),
                lambda: None,
                masses: None,
            },
        }
    }

    /// The explicit family, `None` when it is to be drawn at random.
    pub fn explicit(&self) -> Result<Option<SurfaceFamily>> {
        let poly = |v: &Vec<C64>| Poly::new(v.clone());
        let fam = match self {
            FamilySpec::EllipticK3 { f: Some(f), g: Some(g) } => {
                SurfaceFamily::elliptic_k3(poly(f), poly(g)).map_err(|e| field_error("family", e))?
            }
            FamilySpec::DoubleCoverK3 { f2: Some(f2) } => {
                SurfaceFamily::double_cover_k3(BiPoly::new(f2.clone())).map_err(|e| field_error("family.f2", e))?
            }
            FamilySpec::RationalElliptic {
                f: Some(f),
                g: Some(g),
                c: Some(c),
            } => SurfaceFamily::rational_elliptic(poly(f), poly(g), *c).map_err(|e| field_error("family", e))?,
            FamilySpec::Neumann { c: Some(c), r, .. } => {
                SurfaceFamily::neumann(c.clone(), r.unwrap_or(1.0)).map_err(|e| field_error("family.c", e))?
            }
            FamilySpec::SeibergWitten {
                nc,
                lambda: Some(lambda),
                masses,
                ..
            } => SurfaceFamily::seiberg_witten(*nc, *lambda, masses.clone().unwrap_or_default())
                .map_err(|e| field_error("family", e))?,
            FamilySpec::EllipticK3 { f: None, g: None }
            | FamilySpec::DoubleCoverK3 { f2: None }
            | FamilySpec::RationalElliptic { f: None, g: None, c: None }
            | FamilySpec::Neumann { c: None, .. }
            | FamilySpec::SeibergWitten { lambda: None, masses: None, .. } => return Ok(None),
            _ => {
                return Err(Error::Config {
                    field: "family".into(),
                    message: "give every coefficient field or none of them".into(),
                })
            }
        };
        Ok(Some(fam))
    }

    /// The family for one instance.
    pub fn resolve(&self, rng: &mut SplitMix64) -> Result<SurfaceFamily> {
        match self.explicit()? {
            Some(f) => Ok(f),
            None => random_family(self.kind(), rng),
        }
    }
}

/// Explicit `u`, `xs` and sheet signs, or `count` random instances.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub u: Option<Vec<C64>>,
    pub xs: Option<Vec<C64>>,
    pub signs: Option<Vec<f64>>,
    pub count: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub quad_rel_tol: f64,
    pub quad_abs_tol: f64,
    pub fd_step: f64,
    pub cubic_step: f64,
    pub ode_rel_tol: f64,
    pub ode_abs_tol: f64,
    /// Overrides of the default pass thresholds, by check name.
    pub thresholds: BTreeMap<String, f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        let c = CheckSettings::default();
        Tolerances {
            quad_rel_tol: c.quadrature.rel_tol,
            quad_abs_tol: c.quadrature.abs_tol,
            fd_step: c.fd_step,
            cubic_step: c.cubic_step,
            ode_rel_tol: c.ode.rel_tol,
            ode_abs_tol: c.ode.abs_tol,
            thresholds: BTreeMap::new(),
        }
    }
}

/// Flow of `u_m`, `m` counted from 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub m: usize,
    /// Flow time; a tenth of the flow's time scale when absent.
    pub t: Option<f64>,
    #[serde(default = "default_flow_samples")]
    pub samples: usize,
}

fn default_flow_samples() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeumannSpec {
    pub c: Vec<f64>,
    #[serde(default = "one")]
    pub r: f64,
    /// Initial state; a random tangent state of unit speed when absent.
    pub q0: Option<Vec<f64>>,
    pub p0: Option<Vec<f64>>,
    #[serde(default = "default_neumann_t")]
    pub t: f64,
    #[serde(default = "default_neumann_samples")]
    pub samples: usize,
    /// Random states for the interlacing check.
    #[serde(default = "default_interlacing")]
    pub interlacing_states: usize,
}

fn one() -> f64 {
    1.0
}

fn default_neumann_t() -> f64 {
    10.0
}

fn default_neumann_samples() -> usize {
    50
}

fn default_interlacing() -> usize {
    100
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub family: Option<FamilySpec>,
    #[serde(default)]
    pub instance: InstanceSpec,
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Checks to run; every applicable one when absent.
    pub checks: Option<Vec<String>>,
    pub flow: Option<FlowSpec>,
    pub neumann: Option<NeumannSpec>,
}

impl RunConfig {
    pub fn for_kind(kind: FamilyKind, seed: u64, count: usize) -> RunConfig {
        RunConfig {
            family: Some(FamilySpec::from_kind(kind)),
            instance: InstanceSpec {
                count: Some(count),
                ..InstanceSpec::default()
            },
            seed: Some(seed),
            tolerances: Tolerances::default(),
            checks: None,
            flow: None,
            neumann: None,
        }
    }

    pub fn from_json(text: &str) -> Result<RunConfig> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::Config {
                field: if path == "." { "(root)".into() } else { path },
                message: format!("{inner} (line {}, column {})", inner.line(), inner.column()),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            field: "(file)".into(),
            message: format!("{}: {e}", path.display()),
        })?;
        RunConfig::from_json(&text)
    }

    /// Degree and shape checks that serde cannot express.
    pub fn validate(&self) -> Result<()> {
        if let Some(f) = &self.family {
            f.explicit()?;
        }
        let i = &self.instance;
        match (&i.u, &i.xs, &i.signs) {
            (None, None, None) => {}
            (Some(u), Some(xs), Some(signs)) => {
                if i.count.is_some() {
                    return Err(Error::Config {
                        field: "instance.count".into(),
                        message: "count applies to random instances only".into(),
                    });
                }
                if xs.len() != u.len() || signs.len() != u.len() {
                    return Err(Error::Config {
                        field: "instance".into(),
                        message: "u, xs and signs must have the same length".into(),
                    });
                }
                if let Some(Some(fam)) = self.family.as_ref().map(|f| f.explicit()).transpose()? {
                    if u.len() != fam.genus() {
                        return Err(Error::Config {
                            field: "instance.u".into(),
                            message: format!("expected {} entries, found {}", fam.genus(), u.len()),
                        });
                    }
                } else {
                    return Err(Error::Config {
                        field: "family".into(),
                        message: "an explicit instance needs explicit family coefficients".into(),
                    });
                }
            }
            _ => {
                return Err(Error::Config {
                    field: "instance".into(),
                    message: "give u, xs and signs together".into(),
                })
            }
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("quad_rel_tol", t.quad_rel_tol),
            ("quad_abs_tol", t.quad_abs_tol),
            ("fd_step", t.fd_step),
            ("cubic_step", t.cubic_step),
            ("ode_rel_tol", t.ode_rel_tol),
            ("ode_abs_tol", t.ode_abs_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config {
                    field: format!("tolerances.{name}"),
                    message: "must be positive".into(),
                });
            }
        }
        let known = default_thresholds();
        for name in t.thresholds.keys() {
            if !known.contains_key(name) {
                return Err(Error::Config {
                    field: format!("tolerances.thresholds.{name}"),
                    message: "unknown check".into(),
                });
            }
        }
        if let Some(flow) = &self.flow {
            if flow.m == 0 || flow.samples == 0 {
                return Err(Error::Config {
                    field: "flow".into(),
                    message: "m counts from 1 and samples must be positive".into(),
                });
            }
        }
        if let Some(n) = &self.neumann {
            let dim = n.c.len();
            for (name, v) in [("q0", &n.q0), ("p0", &n.p0)] {
                if let Some(v) = v {
                    if v.len() != dim {
                        return Err(Error::Config {
                            field: format!("neumann.{name}"),
                            message: format!("expected {dim} entries, found {}", v.len()),
                        });
                    }
                }
            }
            if n.q0.is_some() != n.p0.is_some() {
                return Err(Error::Config {
                    field: "neumann".into(),
                    message: "give q0 and p0 together".into(),
                });
            }
            if !(n.t >= 0.0) || n.samples == 0 {
                return Err(Error::Config {
                    field: "neumann.t".into(),
                    message: "need t >= 0 and at least one sample".into(),
                });
            }
        }
        Ok(())
    }

    pub fn check_settings(&self) -> CheckSettings {
        let t = &self.tolerances;
        CheckSettings {
            quadrature: QuadratureSettings {
                rel_tol: t.quad_rel_tol,
                abs_tol: t.quad_abs_tol,
                ..QuadratureSettings::default()
            },
            ode: OdeSettingsSpec {
                rel_tol: t.ode_rel_tol,
                abs_tol: t.ode_abs_tol,
            },
            fd_step: t.fd_step,
            cubic_step: t.cubic_step,
            ..CheckSettings::default()
        }
    }

    /// Default thresholds with the config's overrides, scaled.
    pub fn thresholds(&self, scale: f64) -> BTreeMap<String, f64> {
        let mut out = default_thresholds();
        out.extend(self.tolerances.thresholds.iter().map(|(k, v)| (k.clone(), *v)));
        for v in out.values_mut() {
            *v *= scale;
        }
        out
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// The instances the config describes. Random instances come from
    /// consecutive forks of the seed, one per instance.
    pub fn instances(&self) -> Result<Vec<Instance>> {
        let spec = self.family.as_ref().ok_or_else(|| Error::Config {
            field: "family".into(),
            message: "missing".into(),
        })?;
        let i = &self.instance;
        if let (Some(u), Some(xs), Some(signs)) = (&i.u, &i.xs, &i.signs) {
            let fam = spec.explicit()?.expect("validated");
            return Ok(vec![instance_from(fam, u.clone(), xs, signs)?]);
        }
        let mut rng = SplitMix64::new(self.seed());
        (0..i.count.unwrap_or(1))
            .map(|_| {
                let mut r = rng.fork();
                match spec.explicit()? {
                    Some(fam) => random_instance(&fam, &mut r),
                    None => crate::instances::random_family_instance(spec.kind(), &mut r),
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_reports_fields() {
        let cfg = RunConfig::from_json(
            r#"{"family": {"kind": "elliptic_k3", "f": [], "g": [[1,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[1,0]]}, "seed": 42}"#,
        )
        .unwrap();
        let fam = cfg.family.as_ref().unwrap().explicit().unwrap().unwrap();
        assert_eq!(fam.genus(), 5);
        let err = RunConfig::from_json(r#"{"family": {"kind": "elliptic_k3"}, "tolerances": {"fd_step": "x"}}"#)
            .unwrap_err();
        match err {
            Error::Config { field, .. } => assert_eq!(field, "tolerances.fd_step"),
            e => panic!("{e}"),
        }
        let err = RunConfig::from_json(
            r#"{"family": {"kind": "rational_elliptic", "f": [[1,0],[0,0],[0,0],[0,0],[0,0],[1,0]], "g": [[1,0]], "c": [1,0]}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
    }

    #[test]
    fn random_instances_are_seeded() {
        let cfg = RunConfig::for_kind(FamilyKind::RationalElliptic, 3, 2);
        let a = cfg.instances().unwrap();
        let b = cfg.instances().unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(a[1].u, b[1].u);
        assert_ne!(a[0].u, a[1].u);
    }
}
