//! JSON schemas for paths, polygons, scenarios and run manifests.
//!
//! Infinite breakpoints are encoded as the string `"inf"`; everything else
//! is plain JSON. Every output document embeds a [`RunManifest`]; wall-clock
//! readings live only under its `wall_clock_ms` map so byte-level
//! reproducibility checks can strip one key.

use std::collections::BTreeMap;

use l0path_core::dict::Support;
use l0path_core::path::{Continuity, PathResult, Producer};
use l0path_core::polygon::{ConcavePolygon, LineS};
use l0path_core::problems::{ProblemKind, Scenario};
use serde::{Deserialize, Serialize};

/// `f64` that serializes `+∞` as the string `"inf"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaybeInf {
    Num(f64),
    Tag(String),
}

impl From<f64> for MaybeInf {
    fn from(v: f64) -> Self {
        if v.is_infinite() {
            MaybeInf::Tag("inf".to_string())
        } else {
            MaybeInf::Num(v)
        }
    }
}

impl MaybeInf {
    pub fn value(&self) -> f64 {
        match self {
            MaybeInf::Num(v) => *v,
            MaybeInf::Tag(_) => f64::INFINITY,
        }
    }
}

/// Reproducibility metadata embedded in every output file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stopping: Option<StoppingJson>,
    /// Wall-clock per phase, milliseconds. Excluded from determinism
    /// comparisons.
    pub wall_clock_ms: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: String) -> Self {
        RunManifest {
            command,
            version: env!("CARGO_PKG_VERSION").to_string(),
            scenario: None,
            algorithm: None,
            seed: None,
            stopping: None,
            wall_clock_ms: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StoppingJson {
    pub lambda_stop: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_stop: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_stop: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EdgeJson {
    pub support: Vec<usize>,
    pub error: f64,
    pub card: usize,
    pub explored: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolygonJson {
    pub edges: Vec<EdgeJson>,
    pub breakpoints: Vec<MaybeInf>,
}

impl From<&ConcavePolygon> for PolygonJson {
    fn from(poly: &ConcavePolygon) -> Self {
        PolygonJson {
            edges: poly
                .edges()
                .iter()
                .map(|e| EdgeJson {
                    support: e.support.indices().to_vec(),
                    error: e.error,
                    card: e.card,
                    explored: e.explored,
                })
                .collect(),
            breakpoints: poly.breakpoints().iter().map(|&b| MaybeInf::from(b)).collect(),
        }
    }
}

impl PolygonJson {
    /// Rebuilds the polygon by folding the stored lines (plot/replay use).
    pub fn to_lines(&self) -> Vec<LineS> {
        self.edges
            .iter()
            .map(|e| {
                let support = Support::from_indices(e.support.clone())
                    .expect("polygon JSON has valid supports");
                let mut line = LineS::new(support, e.error);
                line.explored = e.explored;
                line
            })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PathJson {
    pub manifest: RunManifest,
    pub producer: String,
    pub lambdas: Vec<f64>,
    pub supports: Vec<Vec<usize>>,
    pub errors: Vec<f64>,
    pub continuity: Vec<String>,
    pub clamped_segments: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polygon: Option<PolygonJson>,
}

impl PathJson {
    pub fn new(path: &PathResult, polygon: Option<&ConcavePolygon>, manifest: RunManifest) -> Self {
        PathJson {
            manifest,
            producer: match path.producer {
                Producer::Csbr => "csbr".to_string(),
                Producer::L0pd => "l0pd".to_string(),
            },
            lambdas: path.lambdas.clone(),
            supports: path.supports.iter().map(|s| s.indices().to_vec()).collect(),
            errors: path.errors.clone(),
            continuity: path
                .continuity
                .iter()
                .map(|c| {
                    match c {
                        Continuity::Continuous => "continuous",
                        Continuity::Jump => "jump",
                    }
                    .to_string()
                })
                .collect(),
            clamped_segments: path.clamped_segments.clone(),
            polygon: polygon.map(PolygonJson::from),
        }
    }

    pub fn to_path(&self) -> PathResult {
        PathResult {
            producer: if self.producer == "l0pd" {
                Producer::L0pd
            } else {
                Producer::Csbr
            },
            lambdas: self.lambdas.clone(),
            supports: self
                .supports
                .iter()
                .map(|s| Support::from_indices(s.clone()).expect("path JSON has valid supports"))
                .collect(),
            errors: self.errors.clone(),
            continuity: self
                .continuity
                .iter()
                .map(|c| {
                    if c == "jump" {
                        Continuity::Jump
                    } else {
                        Continuity::Continuous
                    }
                })
                .collect(),
            clamped_segments: self.clamped_segments.clone(),
        }
    }
}

/// Scenario DTO; `snr_db` accepts the string `"inf"` for noise-free.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioJson {
    pub name: String,
    pub kind: String,
    pub snr_db: MaybeInf,
    pub k: usize,
    pub f: usize,
    pub delta: usize,
    pub sigma_def: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

impl From<&Scenario> for ScenarioJson {
    fn from(sc: &Scenario) -> Self {
        let (m, n) = sc.dims();
        ScenarioJson {
            name: sc.name.clone(),
            kind: match sc.kind {
                ProblemKind::Deconvolution => "deconvolution".to_string(),
                ProblemKind::Jumps => "jumps".to_string(),
            },
            snr_db: MaybeInf::from(sc.snr_db),
            k: sc.k,
            f: sc.f,
            delta: sc.delta,
            sigma_def: sc.sigma_def,
            seed: sc.seed,
            m: Some(m),
            n: Some(n),
        }
    }
}

impl ScenarioJson {
    pub fn to_scenario(&self) -> anyhow::Result<Scenario> {
        let kind = match self.kind.as_str() {
            "deconvolution" | "deconv" => ProblemKind::Deconvolution,
            "jumps" => ProblemKind::Jumps,
            other => anyhow::bail!("unknown problem kind {other:?}"),
        };
        Ok(Scenario {
            name: self.name.clone(),
            kind,
            snr_db: self.snr_db.value(),
            k: self.k,
            f: self.f,
            delta: self.delta,
            sigma_def: self.sigma_def,
            seed: self.seed,
        })
    }
}
