//! Experiment configuration files.
//!
//! Configs are TOML with five sections:
//!
//! ```toml
//! [experiment]
//! nu = [5, 20, 40, 100]      # approximation sizes
//! nu_ref = 1000              # reference grid, must exceed every nu
//! reference_tol = 1e-5       # stopping tolerance of the reference solve
//! seed = 0                   # drives sampling-based checks only
//! construction = "uniform"   # or "meshgrid"
//!
//! [solver]                   # every key optional
//! kkt_tol = 1e-3
//! max_sweeps = 10000
//! br_inner_tol = 1e-10
//! stop_rule = "per_capita"   # or "absolute"
//! init = { kind = "preferred_profile" }
//!
//! [output]
//! dir = "out"
//! plot_link = 2              # 1-based link plotted against θ
//!
//! [[links]]
//! kind = "affine"
//! slope = 1.0
//! intercept = 0.0
//!
//! [[segments]]
//! start = 0.0
//! end = 1.0
//! set = { kind = "simplex", demand = { kind = "constant", value = 1.0 } }
//! utility = { kind = "none" }
//! ```
//!
//! Parameter functions are `constant {value}`, `linear {intercept, slope}`,
//! `sine {amplitude, frequency, phase, offset}` and `tabulated {points}`.
//! Sets are `simplex {demand, lower, upper}` or `polytope {matrix, rhs}`;
//! utilities are `none`, `quad_pref {weight, preferred}` or
//! `log_benefit {weight}`.

use std::fmt;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use wardrop_approx::aas::Construction;
use wardrop_approx::equilibrium::{SolverConfig, DEFAULT_NU_REF, REFERENCE_TOL};
use wardrop_approx::game::{CostFunction, CostKind, NonatomicInstance, Segment, SetFamily, UtilityFamily};

/// θ-samples per segment for the pointwise parameter checks.
const CHECK_SAMPLES: usize = 257;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstructionName {
    #[default]
    Uniform,
    Meshgrid,
}

impl From<ConstructionName> for Construction {
    fn from(c: ConstructionName) -> Self {
        match c {
            ConstructionName::Uniform => Construction::Uniform,
            ConstructionName::Meshgrid => Construction::Meshgrid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub nu: Vec<usize>,
    #[serde(default = "default_nu_ref")]
    pub nu_ref: usize,
    #[serde(default = "default_reference_tol")]
    pub reference_tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub construction: ConstructionName,
    /// Radius of the ball containing every strategy set; estimated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

fn default_nu_ref() -> usize {
    DEFAULT_NU_REF
}

fn default_reference_tol() -> f64 {
    REFERENCE_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot_link: Option<usize>,
}

fn default_dir() -> String {
    "out".to_string()
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: default_dir(),
            plot_link: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    pub start: f64,
    pub end: f64,
    pub set: SetFamily,
    #[serde(default = "no_utility")]
    pub utility: UtilityFamily,
}

fn no_utility() -> UtilityFamily {
    UtilityFamily::None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub solver: SolverConfig,
    pub output: OutputSection,
    pub links: Vec<CostKind>,
    pub segments: Vec<SegmentConfig>,
}

/// A problem with one field of a config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Every problem found while validating a config.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigErrors(pub Vec<ConfigIssue>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "{}", lines.join("\n"))
    }
}

#[derive(Default)]
struct Collector(Vec<ConfigIssue>);

impl Collector {
    fn push(&mut self, path: impl Into<String>, message: impl fmt::Display) {
        self.0.push(ConfigIssue {
            path: path.into(),
            message: message.to_string(),
        });
    }

    fn take<T: DeserializeOwned>(&mut self, path: &str, value: toml::Value) -> Option<T> {
        match value.try_into::<T>() {
            Ok(v) => Some(v),
            Err(e) => {
                self.push(path, e.message().trim());
                None
            }
        }
    }

    fn array(&mut self, path: &str, value: Option<toml::Value>) -> Vec<toml::Value> {
        match value {
            Some(toml::Value::Array(items)) => items,
            Some(_) => {
                self.push(path, "expected an array of tables");
                Vec::new()
            }
            None => {
                self.push(path, "missing");
                Vec::new()
            }
        }
    }
}

/// Parses and validates a config, reporting every problem found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let mut issues = Collector::default();
    let mut table: toml::Table = match text.parse() {
        Ok(t) => t,
        Err(e) => {
            issues.push("<document>", e.to_string().trim());
            return Err(ConfigErrors(issues.0));
        }
    };
    for key in table.keys() {
        if !["experiment", "solver", "output", "links", "segments"].contains(&key.as_str()) {
            issues.0.push(ConfigIssue {
                path: key.clone(),
                message: "unknown section".into(),
            });
        }
    }

    let experiment = match table.remove("experiment") {
        Some(v) => issues.take::<ExperimentSection>("experiment", v),
        None => {
            issues.push("experiment", "missing");
            None
        }
    };
    let solver = match table.remove("solver") {
        Some(v) => issues.take::<SolverConfig>("solver", v),
        None => Some(SolverConfig::default()),
    };
    let output = match table.remove("output") {
        Some(v) => issues.take::<OutputSection>("output", v),
        None => Some(OutputSection::default()),
    };

    let link_values = issues.array("links", table.remove("links"));
    let mut links = Vec::new();
    for (t, v) in link_values.into_iter().enumerate() {
        if let Some(kind) = issues.take::<CostKind>(&format!("links[{t}]"), v) {
            links.push(kind);
        }
    }
    let segment_values = issues.array("segments", table.remove("segments"));
    let mut segments = Vec::new();
    for (k, v) in segment_values.into_iter().enumerate() {
        if let Some(seg) = issues.take::<SegmentConfig>(&format!("segments[{k}]"), v) {
            segments.push(seg);
        }
    }

    if issues.0.is_empty() {
        let config = ExperimentConfig {
            experiment: experiment.expect("parsed"),
            solver: solver.expect("parsed"),
            output: output.expect("parsed"),
            links,
            segments,
        };
        config.check(&mut issues);
        if issues.0.is_empty() {
            return Ok(config);
        }
    }
    Err(ConfigErrors(issues.0))
}

impl ExperimentConfig {
    /// Re-runs validation, for configs assembled or edited in code.
    pub fn validate(&self) -> Result<(), ConfigErrors> {
        let mut issues = Collector::default();
        self.check(&mut issues);
        if issues.0.is_empty() {
            Ok(())
        } else {
            Err(ConfigErrors(issues.0))
        }
    }

    fn check(&self, issues: &mut Collector) {
        let exp = &self.experiment;
        if exp.nu.is_empty() {
            issues.push("experiment.nu", "at least one size is required");
        }
        for (k, nu) in exp.nu.iter().enumerate() {
            if *nu == 0 {
                issues.push(format!("experiment.nu[{k}]"), "sizes must be positive");
            }
        }
        if let Some(max) = exp.nu.iter().max() {
            if exp.nu_ref <= *max {
                issues.push(
                    "experiment.nu_ref",
                    format!("must exceed the largest size {max}, got {}", exp.nu_ref),
                );
            }
        }
        if !(exp.reference_tol > 0.0 && exp.reference_tol.is_finite()) {
            issues.push("experiment.reference_tol", "must be positive");
        }
        if let Some(r) = exp.radius {
            if !(r > 0.0 && r.is_finite()) {
                issues.push("experiment.radius", "must be positive");
            }
        }
        if let Err(e) = self.solver.validate() {
            issues.push("solver", e);
        }

        let dim = self.links.len();
        if dim == 0 {
            issues.push("links", "at least one link is required");
        }
        for (t, kind) in self.links.iter().enumerate() {
            let cost = CostFunction {
                kind: kind.clone(),
                domain_cap: f64::INFINITY,
            };
            if let Err(e) = cost.validate(t) {
                issues.push(format!("links[{t}]"), e);
            }
        }
        if let Some(link) = self.output.plot_link {
            if link == 0 || link > dim {
                issues.push("output.plot_link", format!("must be between 1 and {dim}"));
            }
        }

        if self.segments.is_empty() {
            issues.push("segments", "at least one segment is required");
        }
        let mut expected = 0.0;
        for (k, seg) in self.segments.iter().enumerate() {
            let path = format!("segments[{k}]");
            if seg.start < expected {
                issues.push(
                    format!("{path}.start"),
                    format!("overlaps the previous segment, which ends at {expected}"),
                );
            } else if seg.start > expected {
                issues.push(format!("{path}.start"), format!("leaves a gap after {expected}"));
            }
            if seg.end <= seg.start {
                issues.push(format!("{path}.end"), "must exceed start");
            }
            expected = seg.end;
            if dim == 0 {
                continue;
            }
            let set_ok = match seg.set.validate(dim) {
                Ok(()) => true,
                Err(e) => {
                    issues.push(format!("{path}.set"), e);
                    false
                }
            };
            let utility_ok = match seg.utility.validate(dim) {
                Ok(()) => true,
                Err(e) => {
                    issues.push(format!("{path}.utility"), e);
                    false
                }
            };
            let seg_core = seg.to_segment();
            for theta in seg_core.sample_thetas(CHECK_SAMPLES) {
                if set_ok {
                    if let Err(e) = seg.set.set_at(theta, dim).and_then(|s| s.validate()) {
                        issues.push(format!("{path}.set"), format!("at θ = {theta}: {e}"));
                        break;
                    }
                }
                if utility_ok {
                    if let Err(e) = seg.utility.utility_at(theta).validate(dim) {
                        issues.push(format!("{path}.utility"), format!("at θ = {theta}: {e}"));
                        break;
                    }
                }
            }
        }
        if !self.segments.is_empty() && expected != 1.0 {
            issues.push("segments", format!("must cover [0, 1], last segment ends at {expected}"));
        }
        if issues.0.is_empty() {
            if let Err(e) = self.instance() {
                issues.push("segments", e);
            }
        }
    }

    pub fn costs(&self) -> Vec<CostFunction> {
        self.links
            .iter()
            .map(|kind| CostFunction {
                kind: kind.clone(),
                domain_cap: f64::INFINITY,
            })
            .collect()
    }

    pub fn instance(&self) -> wardrop_approx::Result<NonatomicInstance> {
        NonatomicInstance::new(
            self.costs(),
            self.segments.iter().map(SegmentConfig::to_segment).collect(),
            self.experiment.radius,
        )
    }

    /// 1-based link shown in plot data; the last link by default.
    pub fn plot_link(&self) -> usize {
        self.output.plot_link.unwrap_or(self.links.len())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize to TOML")
    }
}

impl SegmentConfig {
    pub fn to_segment(&self) -> Segment {
        Segment {
            start: self.start,
            end: self.end,
            set: self.set.clone(),
            utility: self.utility.clone(),
        }
    }
}
