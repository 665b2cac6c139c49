//! Experiment configuration: one JSON document, every omitted field taking
//! its documented default. The resolved config is echoed verbatim into the
//! output metadata, so a run is reproducible from its artifacts alone.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use zigg::diagnostics::Method;
use zigg::simgen::{GraphSpec, SchemeKind, Structure};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureName {
    Chain,
    Random,
    Hub,
}

/// Graph recipe as written in config files. `edge_prob` only applies to
/// `random`, `groups` only to `hub`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphConfig {
    pub structure: StructureName,
    pub p: usize,
    pub strength: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge_prob: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub groups: Option<usize>,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            structure: StructureName::Chain,
            p: 30,
            strength: 0.3,
            edge_prob: None,
            groups: None,
        }
    }
}

impl GraphConfig {
    /// The library-side recipe, with the adjacency seed supplied by the
    /// caller (derived from the experiment master seed).
    pub fn to_spec(&self, seed: u64) -> Result<GraphSpec, CliError> {
        let structure = match self.structure {
            StructureName::Chain => Structure::Chain,
            StructureName::Random => Structure::Random {
                edge_prob: self.edge_prob.ok_or_else(|| {
                    CliError::Validation("graph: random structure needs edge_prob".into())
                })?,
            },
            StructureName::Hub => Structure::Hub {
                groups: self.groups.ok_or_else(|| {
                    CliError::Validation("graph: hub structure needs groups".into())
                })?,
            },
        };
        Ok(GraphSpec {
            structure,
            p: self.p,
            strength: self.strength,
            seed,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeName {
    Identical,
    Decreasing,
    Custom,
}

/// Truncation windows as written in config files. `identical` reads
/// `lower`/`upper` (defaults -0.5 and 2.0), `custom` reads `windows`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeConfig {
    pub kind: SchemeName,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub windows: Option<Vec<(f64, f64)>>,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            kind: SchemeName::Identical,
            lower: None,
            upper: None,
            windows: None,
        }
    }
}

impl SchemeConfig {
    /// A copy with the documented defaults filled in, for metadata echoes.
    pub fn resolved(&self) -> Self {
        let mut out = self.clone();
        if matches!(out.kind, SchemeName::Identical) {
            out.lower.get_or_insert(-0.5);
            out.upper.get_or_insert(2.0);
        }
        out
    }

    pub fn to_kind(&self) -> Result<SchemeKind, CliError> {
        Ok(match self.kind {
            SchemeName::Identical => SchemeKind::Identical {
                lower: self.lower.unwrap_or(-0.5),
                upper: self.upper.unwrap_or(2.0),
            },
            SchemeName::Decreasing => SchemeKind::Decreasing,
            SchemeName::Custom => SchemeKind::Custom(self.windows.clone().ok_or_else(|| {
                CliError::Validation("scheme: custom kind needs windows".into())
            })?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Ours,
    Baseline,
}

impl MethodName {
    pub fn to_method(self) -> Method {
        match self {
            MethodName::Ours => Method::Ours,
            MethodName::Baseline => Method::Baseline,
        }
    }
}

/// Penalty selection. `stars` draws subsamples of size floor(10 sqrt(n))
/// and keeps the densest penalty with instability at most `beta`; `ebic`
/// scores the whole path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SelectionConfig {
    Ebic {
        #[serde(default = "default_gamma")]
        gamma: f64,
    },
    Stars {
        #[serde(default = "default_subsamples")]
        subsamples: usize,
        #[serde(default = "default_beta")]
        beta: f64,
    },
}

fn default_gamma() -> f64 {
    0.5
}
fn default_subsamples() -> usize {
    20
}
fn default_beta() -> f64 {
    0.05
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig::Stars {
            subsamples: default_subsamples(),
            beta: default_beta(),
        }
    }
}

/// Glasso iteration and path knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub path_len: usize,
    pub ratio: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-5,
            max_iter: 200,
            path_len: 20,
            ratio: 0.01,
        }
    }
}

impl SolverSettings {
    pub fn to_config(self) -> zigg::glasso::SolverConfig {
        zigg::glasso::SolverConfig {
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

/// Step-1 estimator knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorSettings {
    pub delta: f64,
    pub grid_points: usize,
    pub tol_sigma: f64,
    pub eps_psd: f64,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        let d = zigg::pairlik::EstimatorConfig::default();
        Self {
            delta: d.delta,
            grid_points: d.grid_points,
            tol_sigma: d.tol_sigma,
            eps_psd: d.eps_psd,
        }
    }
}

impl EstimatorSettings {
    pub fn to_config(self) -> zigg::pairlik::EstimatorConfig {
        zigg::pairlik::EstimatorConfig {
            delta: self.delta,
            grid_points: self.grid_points,
            tol_sigma: self.tol_sigma,
            eps_psd: self.eps_psd,
        }
    }
}

/// Everything a batch run needs; the `seed` is normally injected by the
/// `--seed` flag, which overrides any value written in the file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub graph: GraphConfig,
    pub scheme: SchemeConfig,
    pub n: usize,
    pub repetitions: usize,
    pub methods: Vec<MethodName>,
    pub selection: SelectionConfig,
    pub solver: SolverSettings,
    pub estimator: EstimatorSettings,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            graph: GraphConfig::default(),
            scheme: SchemeConfig::default(),
            n: 500,
            repetitions: 20,
            methods: vec![MethodName::Ours, MethodName::Baseline],
            selection: SelectionConfig::default(),
            solver: SolverSettings::default(),
            estimator: EstimatorSettings::default(),
            seed: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::Validation(msg));
        if self.graph.p < 2 {
            return fail(format!("graph.p must be at least 2, got {}", self.graph.p));
        }
        if self.n < 2 {
            return fail(format!("n must be at least 2, got {}", self.n));
        }
        if self.repetitions < 1 {
            return fail("repetitions must be at least 1".into());
        }
        if self.methods.is_empty() {
            return fail("methods must name at least one of: ours, baseline".into());
        }
        let mut seen = Vec::new();
        for m in &self.methods {
            if seen.contains(m) {
                return fail("methods lists a duplicate entry".into());
            }
            seen.push(*m);
        }
        match self.selection {
            SelectionConfig::Ebic { gamma } => {
                if !(gamma >= 0.0) {
                    return fail(format!("selection.gamma must be nonnegative, got {gamma}"));
                }
            }
            SelectionConfig::Stars { subsamples, beta } => {
                if subsamples < 2 {
                    return fail("selection.subsamples must be at least 2".into());
                }
                if !(0.0..=1.0).contains(&beta) {
                    return fail(format!("selection.beta must lie in [0, 1], got {beta}"));
                }
            }
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return fail("solver.tol must be positive and solver.max_iter nonzero".into());
        }
        if self.solver.path_len < 2 {
            return fail("solver.path_len must be at least 2".into());
        }
        if !(self.solver.ratio > 0.0 && self.solver.ratio < 1.0) {
            return fail(format!(
                "solver.ratio must lie in (0, 1), got {}",
                self.solver.ratio
            ));
        }
        // estimator bounds are re-checked by the library; catch the obvious
        // ones here for friendlier messages
        let e = &self.estimator;
        if !(e.delta > 0.0 && e.delta < 1.0) || e.grid_points < 3 || !(e.tol_sigma > 0.0) || !(e.eps_psd > 0.0) {
            return fail("estimator settings out of range".into());
        }
        Ok(())
    }
}
