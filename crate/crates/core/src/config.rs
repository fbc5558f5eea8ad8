//! Flat key=value run configuration with an [overrides] section for
//! stabilization parameters.
//!
//! ```text
//! problem = adv1d-smooth
//! scheme = WENO
//! p = 2
//! cells = 64            # or: dofs = 128
//! cfl = 0.1
//!
//! [overrides]
//! q = 3
//! lambda_override_lo = 2.0
//! ```

use std::fmt;

use crate::assembly::MassKind;
use crate::driver::{cells_for_dofs, RunPlan};
use crate::element::NodePlacement;
use crate::gradient::RecoveryMethod;
use crate::problems::{self, PROBLEM_NAMES};
use crate::sensor::LinearWeightRule;
use crate::system::{Scheme, Settings, SCHEME_NAMES};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Raw configuration as parsed from the file; everything optional except
/// the problem name.
#[derive(Clone, Debug, Default)]
pub struct RunConfig {
    pub problem: Option<String>,
    pub scheme: Option<String>,
    pub degree: Option<usize>,
    pub cells: Option<usize>,
    pub dofs: Option<usize>,
    pub cfl: Option<f64>,
    pub final_time: Option<f64>,
    pub rk_order: Option<usize>,
    pub threads: Option<usize>,
    pub deterministic: Option<bool>,
    pub track_extrema: Option<bool>,
    pub quadrature_points: Option<usize>,
    pub node_placement: Option<String>,
    pub dump: Option<String>,
    pub dump_format: Option<String>,
    pub gamma_dump: Option<String>,
    // [overrides]
    pub omega: Option<f64>,
    pub q: Option<f64>,
    pub q_beta: Option<f64>,
    pub r: Option<i32>,
    pub epsilon: Option<f64>,
    pub lambda_override_ho: Option<f64>,
    pub lambda_override_lo: Option<f64>,
    pub recovery: Option<String>,
    pub linear_weight_floor: Option<f64>,
    pub linear_weights: Option<String>,
    pub mass: Option<String>,
    pub mesh_size_factor: Option<f64>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut section = "";
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = match &line[1..line.len() - 1] {
                    "overrides" => "overrides",
                    other => return Err(err(format!("line {}: unknown section [{other}]", lineno + 1))),
                };
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            cfg.set(section, key, value)
                .map_err(|m| err(format!("line {}: {m}", lineno + 1)))?;
        }
        Ok(cfg)
    }

    fn set(&mut self, section: &str, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
            value.parse().map_err(|_| format!("invalid value '{value}' for {key}"))
        }
        let flag = |value: &str| -> Result<bool, String> {
            match value {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(format!("invalid boolean '{value}'")),
            }
        };
        match (section, key) {
            ("", "problem") => self.problem = Some(value.to_string()),
            ("", "scheme") => self.scheme = Some(value.to_string()),
            ("", "p") | ("", "degree") => self.degree = Some(num(key, value)?),
            ("", "cells") => self.cells = Some(num(key, value)?),
            ("", "dofs") => self.dofs = Some(num(key, value)?),
            ("", "cfl") => self.cfl = Some(num(key, value)?),
            ("", "final_time") => self.final_time = Some(num(key, value)?),
            ("", "rk_order") => self.rk_order = Some(num(key, value)?),
            ("", "threads") => self.threads = Some(num(key, value)?),
            ("", "deterministic") => self.deterministic = Some(flag(value)?),
            ("", "track_extrema") => self.track_extrema = Some(flag(value)?),
            ("", "quadrature_points") => self.quadrature_points = Some(num(key, value)?),
            ("", "node_placement") => self.node_placement = Some(value.to_string()),
            ("", "dump") => self.dump = Some(value.to_string()),
            ("", "dump_format") => self.dump_format = Some(value.to_string()),
            ("", "gamma_dump") => self.gamma_dump = Some(value.to_string()),
            ("overrides", "omega") => self.omega = Some(num(key, value)?),
            ("overrides", "q") => self.q = Some(num(key, value)?),
            ("overrides", "q_beta") => self.q_beta = Some(num(key, value)?),
            ("overrides", "r") => self.r = Some(num(key, value)?),
            ("overrides", "epsilon") => self.epsilon = Some(num(key, value)?),
            ("overrides", "lambda_override_ho") => {
                self.lambda_override_ho = Some(num(key, value)?)
            }
            ("overrides", "lambda_override_lo") => {
                self.lambda_override_lo = Some(num(key, value)?)
            }
            ("overrides", "recovery") => self.recovery = Some(value.to_string()),
            ("overrides", "linear_weight_floor") => {
                self.linear_weight_floor = Some(num(key, value)?)
            }
            ("overrides", "linear_weights") => self.linear_weights = Some(value.to_string()),
            ("overrides", "mass") => self.mass = Some(value.to_string()),
            ("overrides", "mesh_size_factor") => self.mesh_size_factor = Some(num(key, value)?),
            _ => {
                let place = if section.is_empty() { "top level".to_string() } else { format!("[{section}]") };
                return Err(format!("unknown key '{key}' at {place}"));
            }
        }
        Ok(())
    }

    /// Resolve into an executable plan. `cells_override` replaces the
    /// configured resolution (used by convergence sweeps).
    pub fn resolve(&self, cells_override: Option<usize>) -> Result<RunPlan, ConfigError> {
        let name = self.problem.as_deref().ok_or_else(|| err("missing 'problem'"))?;
        let problem = problems::by_name(name).ok_or_else(|| {
            err(format!("unknown problem '{name}'; valid: {}", PROBLEM_NAMES.join(", ")))
        })?;
        let scheme_name = self.scheme.as_deref().unwrap_or("WENO");
        let scheme = Scheme::parse(scheme_name).ok_or_else(|| {
            err(format!("unknown scheme '{scheme_name}'; valid: {}", SCHEME_NAMES.join(", ")))
        })?;
        let degree = self.degree.ok_or_else(|| err("missing 'p'"))?;
        if !(1..=4).contains(&degree) {
            return Err(err(format!("p = {degree} out of range 1..=4")));
        }

        let cells = match (cells_override, self.cells, self.dofs) {
            (Some(c), _, _) => c,
            (None, Some(c), None) => c,
            (None, None, Some(d)) => {
                cells_for_dofs(&problem, degree, d).map_err(ConfigError)?
            }
            (None, Some(_), Some(_)) => return Err(err("give either 'cells' or 'dofs', not both")),
            (None, None, None) => return Err(err("missing 'cells' or 'dofs'")),
        };

        let mut settings = Settings::for_problem(&problem, scheme, degree);
        if let Some(v) = self.cfl {
            settings.cfl = v;
        }
        if let Some(v) = self.rk_order {
            settings.rk_order = v;
        }
        if let Some(v) = self.quadrature_points {
            settings.quad_points = v;
        }
        if let Some(v) = &self.node_placement {
            settings.node_placement = match v.as_str() {
                "equispaced" => NodePlacement::Equispaced,
                "gauss_lobatto" => NodePlacement::GaussLobatto,
                _ => return Err(err(format!("unknown node_placement '{v}'"))),
            };
        }
        if let Some(v) = self.omega {
            settings.omega = v;
        }
        if let Some(v) = self.q {
            settings.sensor_q = v;
        }
        if let Some(v) = self.q_beta {
            settings.beta_q = v;
        }
        if let Some(v) = self.r {
            settings.r = v;
        }
        if let Some(v) = self.epsilon {
            settings.epsilon = v;
        }
        if self.lambda_override_ho.is_some() {
            settings.lambda_ho = self.lambda_override_ho;
        }
        if self.lambda_override_lo.is_some() {
            settings.lambda_lo = self.lambda_override_lo;
        }
        if let Some(v) = &self.recovery {
            settings.recovery = match v.as_str() {
                "consistent" => RecoveryMethod::Consistent,
                "lumped" => RecoveryMethod::Lumped,
                _ => return Err(err(format!("unknown recovery '{v}'"))),
            };
        }
        match (self.linear_weight_floor, self.linear_weights.as_deref()) {
            (Some(_), Some(_)) => {
                return Err(err("give either 'linear_weight_floor' or 'linear_weights'"))
            }
            (Some(c), None) => settings.linear_weights = LinearWeightRule::Floor(c),
            (None, Some("equal")) => settings.linear_weights = LinearWeightRule::Equal,
            (None, Some(other)) => {
                return Err(err(format!("unknown linear_weights '{other}' (expected 'equal')")))
            }
            (None, None) => {}
        }
        if let Some(v) = &self.mass {
            settings.mass_kind = match v.as_str() {
                "consistent" => MassKind::Consistent,
                "lumped" => MassKind::Lumped,
                _ => return Err(err(format!("unknown mass '{v}'"))),
            };
        }
        if let Some(v) = self.mesh_size_factor {
            settings.mesh_size_factor = v;
        }
        if let Some(v) = self.threads {
            settings.threads = v.max(1);
        }
        if self.deterministic.unwrap_or(true) {
            // Strongest reproducibility guarantee: serial element loops.
            settings.threads = 1;
        }
        if settings.sensor_q < 1.0 {
            return Err(err(format!("q = {} must be >= 1", settings.sensor_q)));
        }
        if !(0.0..=1.0).contains(&settings.omega) {
            return Err(err(format!("omega = {} must lie in [0, 1]", settings.omega)));
        }

        let mut plan = RunPlan::new(problem, scheme, degree, cells);
        plan.settings = settings;
        if let Some(t) = self.final_time {
            plan.final_time = t;
        }
        plan.track_extrema = self.track_extrema.unwrap_or(false);
        Ok(plan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_resolves_a_full_config() {
        let text = "\
# KPP with explicit overrides
problem = kpp
scheme = WENO
p = 2
dofs = 16641
cfl = 0.2
threads = 4
deterministic = false

[overrides]
omega = 1.0
q = 1
lambda_override_ho = 1.0
lambda_override_lo = 2.0
linear_weights = equal
";
        let cfg = RunConfig::parse(text).unwrap();
        let plan = cfg.resolve(None).unwrap();
        assert_eq!(plan.cells, 64);
        assert_eq!(plan.settings.lambda_lo, Some(2.0));
        assert_eq!(plan.settings.linear_weights, LinearWeightRule::Equal);
        assert_eq!(plan.settings.threads, 4);
        assert_eq!(plan.settings.rk_order, 3);
        assert!((plan.settings.cfl - 0.2).abs() < 1e-15);
    }

    #[test]
    fn problem_defaults_flow_into_settings() {
        let cfg = RunConfig::parse("problem = adv1d-smooth\np = 1\ncells = 16\n").unwrap();
        let plan = cfg.resolve(None).unwrap();
        assert_eq!(plan.settings.sensor_q, 3.0); // per-problem default
        assert_eq!(plan.settings.rk_order, 2);
        let cfg = RunConfig::parse("problem = kpp\nscheme = CG\np = 1\ncells = 16\n").unwrap();
        let plan = cfg.resolve(None).unwrap();
        assert_eq!(plan.settings.mass_kind, MassKind::Lumped);
    }

    #[test]
    fn deterministic_forces_serial() {
        let cfg = RunConfig::parse("problem = burgers\np = 1\ncells = 16\nthreads = 8\n").unwrap();
        let plan = cfg.resolve(None).unwrap();
        assert_eq!(plan.settings.threads, 1);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(RunConfig::parse("nonsense line\n").is_err());
        assert!(RunConfig::parse("mystery = 1\n").is_err());
        assert!(RunConfig::parse("[weird]\n").is_err());
        // q belongs to [overrides].
        assert!(RunConfig::parse("q = 3\n").is_err());

        let cfg = RunConfig::parse("problem = waves\np = 1\ncells = 8\n").unwrap();
        assert!(cfg.resolve(None).is_err());
        let cfg = RunConfig::parse("problem = burgers\nscheme = FCT\np = 1\ncells = 8\n").unwrap();
        let msg = cfg.resolve(None).unwrap_err().to_string();
        assert!(msg.contains("CG, VMS, HO, LO, WENO"), "{msg}");
        let cfg = RunConfig::parse("problem = burgers\np = 9\ncells = 8\n").unwrap();
        assert!(cfg.resolve(None).is_err());
        let cfg = RunConfig::parse("problem = burgers\np = 2\n").unwrap();
        assert!(cfg.resolve(None).is_err());
    }
}
