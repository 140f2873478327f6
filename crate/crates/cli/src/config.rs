//! Experiment configuration: a single JSON document with a model block,
//! named states and observables, command parameters and output settings.
//!
//! Complex entries are `[re, im]` pairs. Hermitian inputs are given either
//! as `{"diagonal": [..]}` or as `{"lower": [[z00], [z10, z11], ..]}`.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

type Pair = [f64; 2];

fn c(z: &Pair) -> Complex64 {
    Complex64::new(z[0], z[1])
}

#[derive(Clone, Debug, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct ModelConfig {
    pub d: usize,
    pub w: usize,
    pub cap: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    d: usize,
    #[serde(default = "one")]
    w: usize,
    #[serde(default = "default_cap")]
    cap: usize,
}

fn one() -> usize {
    1
}

fn default_cap() -> usize {
    qsm_core::model::DEFAULT_DIMENSION_CAP
}

impl TryFrom<RawModel> for ModelConfig {
    type Error = String;

    fn try_from(r: RawModel) -> Result<Self, String> {
        if r.d < 2 {
            return Err(format!("model.d must be >= 2, got {}", r.d));
        }
        if r.w < 1 {
            return Err("model.w must be >= 1".into());
        }
        let window = r.d.checked_pow(r.w as u32).unwrap_or(usize::MAX);
        if window > r.cap {
            return Err(format!("model.cap = {} is smaller than one window (d^w = {window})", r.cap));
        }
        Ok(Self { d: r.d, w: r.w, cap: r.cap })
    }
}

/// A validated Hermitian input.
#[derive(Clone, Debug, PartialEq)]
pub enum HermitianInput {
    Diagonal(Vec<f64>),
    Dense(DMatrix<Complex64>),
}

impl HermitianInput {
    pub fn dim(&self) -> usize {
        match self {
            Self::Diagonal(v) => v.len(),
            Self::Dense(m) => m.nrows(),
        }
    }

    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        match self {
            Self::Diagonal(v) => DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                v.len(),
                v.iter().map(|&x| Complex64::new(x, 0.0)),
            )),
            Self::Dense(m) => m.clone(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHermitian {
    diagonal: Option<Vec<f64>>,
    lower: Option<Vec<Vec<Pair>>>,
}

impl TryFrom<RawHermitian> for HermitianInput {
    type Error = String;

    fn try_from(r: RawHermitian) -> Result<Self, String> {
        let out = match (r.diagonal, r.lower) {
            (Some(d), None) => Self::Diagonal(d),
            (None, Some(rows)) => {
                let n = rows.len();
                let mut m = DMatrix::zeros(n, n);
                for (i, row) in rows.iter().enumerate() {
                    if row.len() != i + 1 {
                        return Err(format!("lower triangle row {i} has {} entries, expected {}", row.len(), i + 1));
                    }
                    for (j, z) in row.iter().enumerate() {
                        if i == j && z[1].abs() > 1e-12 {
                            return Err(format!("diagonal entry ({i},{i}) has imaginary part {}", z[1]));
                        }
                        m[(i, j)] = c(z);
                        m[(j, i)] = c(z).conj();
                    }
                }
                Self::Dense(m)
            }
            _ => return Err("give exactly one of \"diagonal\" or \"lower\"".into()),
        };
        if out.dim() == 0 {
            return Err("Hermitian input is empty".into());
        }
        let finite = match &out {
            Self::Diagonal(v) => v.iter().all(|x| x.is_finite()),
            Self::Dense(m) => m.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
        };
        if !finite {
            return Err("Hermitian input has non-finite entries".into());
        }
        Ok(out)
    }
}

fn hermitian<'de, D: serde::Deserializer<'de>>(de: D) -> Result<HermitianInput, D::Error> {
    let raw = RawHermitian::deserialize(de)?;
    HermitianInput::try_from(raw).map_err(serde::de::Error::custom)
}

#[derive(Clone, Debug)]
pub enum StateKind {
    /// Product of a single-site density.
    Product { phi: HermitianInput },
    /// Classical Markov chain, row-stochastic.
    Markov { transition: Vec<Vec<f64>> },
    /// `kraus[k][s]` is a `b × b` matrix.
    Fcs { kraus: Vec<Vec<DMatrix<Complex64>>> },
    /// Shift-averaged Gibbs block state for a named observable.
    GibbsBlock { m: usize, observable: String },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(try_from = "RawState")]
pub struct StateSpec {
    pub id: String,
    pub kind: StateKind,
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RawState {
    Product {
        id: String,
        #[serde(deserialize_with = "hermitian")]
        phi: HermitianInput,
    },
    Markov {
        id: String,
        transition: Vec<Vec<f64>>,
    },
    Fcs {
        id: String,
        kraus: Vec<Vec<Vec<Vec<Pair>>>>,
    },
    GibbsBlock {
        id: String,
        m: usize,
        observable: String,
    },
}

impl TryFrom<RawState> for StateSpec {
    type Error = String;

    fn try_from(r: RawState) -> Result<Self, String> {
        let (id, kind) = match r {
            RawState::Product { id, phi } => (id, StateKind::Product { phi }),
            RawState::Markov { id, transition } => {
                let d = transition.len();
                if d < 2 || transition.iter().any(|row| row.len() != d) {
                    return Err(format!("state '{id}': transition must be a square matrix with d >= 2"));
                }
                (id, StateKind::Markov { transition })
            }
            RawState::Fcs { id, kraus } => {
                let mut out = Vec::with_capacity(kraus.len());
                for (k, family) in kraus.iter().enumerate() {
                    let mut mats = Vec::with_capacity(family.len());
                    for (s, rows) in family.iter().enumerate() {
                        let b = rows.len();
                        if b == 0 || rows.iter().any(|r| r.len() != b) {
                            return Err(format!("state '{id}': kraus[{k}][{s}] must be a non-empty square matrix"));
                        }
                        mats.push(DMatrix::from_fn(b, b, |i, j| c(&rows[i][j])));
                    }
                    out.push(mats);
                }
                if out.is_empty() {
                    return Err(format!("state '{id}': kraus is empty"));
                }
                (id, StateKind::Fcs { kraus: out })
            }
            RawState::GibbsBlock { id, m, observable } => {
                if m == 0 {
                    return Err(format!("state '{id}': m must be >= 1"));
                }
                (id, StateKind::GibbsBlock { m, observable })
            }
        };
        if id.is_empty() {
            return Err("state id must be non-empty".into());
        }
        Ok(Self { id, kind })
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(try_from = "RawObservable")]
pub struct ObservableSpec {
    pub id: String,
    pub operator: HermitianInput,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObservable {
    id: String,
    diagonal: Option<Vec<f64>>,
    lower: Option<Vec<Vec<Pair>>>,
}

impl TryFrom<RawObservable> for ObservableSpec {
    type Error = String;

    fn try_from(r: RawObservable) -> Result<Self, String> {
        if r.id.is_empty() {
            return Err("observable id must be non-empty".into());
        }
        let operator = HermitianInput::try_from(RawHermitian { diagonal: r.diagonal, lower: r.lower })
            .map_err(|e| format!("observable '{}': {e}", r.id))?;
        Ok(Self { id: r.id, operator })
    }
}

/// Command parameters. Volumes are `A_n` indices; `n_range` defaults to
/// `1..=n_max` of the model.
#[derive(Clone, Debug, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct Params {
    pub delta: f64,
    pub delta_prime: f64,
    pub t: Option<f64>,
    pub m: Vec<usize>,
    pub n_range: Option<(usize, usize)>,
    pub entropy_range: Option<(usize, usize)>,
    /// Overrides the extrapolated mean entropy in `typicality` and `deviation`.
    pub entropy: Option<f64>,
    pub grid: usize,
    pub tolerance: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self::try_from(RawParams::default()).expect("defaults are valid")
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawParams {
    delta: f64,
    delta_prime: f64,
    t: Option<f64>,
    m: Vec<usize>,
    n_range: Option<[usize; 2]>,
    entropy_range: Option<[usize; 2]>,
    entropy: Option<f64>,
    grid: usize,
    tolerance: f64,
}

impl Default for RawParams {
    fn default() -> Self {
        Self {
            delta: 0.3,
            delta_prime: 0.1,
            t: None,
            m: vec![2, 4, 6],
            n_range: None,
            entropy_range: None,
            entropy: None,
            grid: 20,
            tolerance: 1e-9,
        }
    }
}

fn check_range(name: &str, r: Option<[usize; 2]>) -> Result<Option<(usize, usize)>, String> {
    match r {
        Some([lo, hi]) if lo == 0 || lo > hi => Err(format!("params.{name} must satisfy 1 <= lo <= hi, got [{lo}, {hi}]")),
        Some([lo, hi]) => Ok(Some((lo, hi))),
        None => Ok(None),
    }
}

impl TryFrom<RawParams> for Params {
    type Error = String;

    fn try_from(r: RawParams) -> Result<Self, String> {
        for (name, v) in [("delta", r.delta), ("delta_prime", r.delta_prime), ("tolerance", r.tolerance)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(format!("params.{name} must be > 0, got {v}"));
            }
        }
        if r.t.is_some_and(|t| !t.is_finite()) || r.entropy.is_some_and(|s| !(s >= 0.0) || !s.is_finite()) {
            return Err("params.t and params.entropy must be finite (entropy >= 0)".into());
        }
        if r.m.contains(&0) {
            return Err("params.m entries must be >= 1".into());
        }
        if r.grid < 2 {
            return Err(format!("params.grid must be >= 2, got {}", r.grid));
        }
        Ok(Self {
            delta: r.delta,
            delta_prime: r.delta_prime,
            t: r.t,
            m: r.m,
            n_range: check_range("n_range", r.n_range)?,
            entropy_range: check_range("entropy_range", r.entropy_range)?,
            entropy: r.entropy,
            grid: r.grid,
            tolerance: r.tolerance,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Both,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
    pub format: Option<Format>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub states: Vec<StateSpec>,
    #[serde(default)]
    pub observables: Vec<ObservableSpec>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub output: OutputConfig,
}

/// A parsed config with its source text, kept for diagnostics and hashing.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub path: String,
    pub text: String,
    pub hash: String,
    pub config: ExperimentConfig,
}

impl LoadedConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: cannot read config: {e}", path.display())))?;
        Self::from_text(&path.display().to_string(), text)
    }

    pub fn from_text(path: &str, text: String) -> Result<Self, CliError> {
        let config: ExperimentConfig = serde_json::from_str(&text).map_err(|e| {
            let msg = e.to_string();
            // serde_json appends " at line L column C"; move it to the front
            let msg = msg.rsplit_once(" at line ").map_or(msg.as_str(), |(m, _)| m).to_string();
            // errors raised after buffering a tagged object are reported at the
            // end of the enclosing array; point at the declaring line instead
            match named_entity(&msg).and_then(|id| find_id_line(&text, id)) {
                Some(line) => CliError::Config(format!("{path}:{line}: {msg}")),
                None => CliError::Config(format!("{path}:{}:{}: {msg}", e.line(), e.column())),
            }
        })?;
        let hash = hex::encode(Sha256::digest(text.as_bytes()));
        let loaded = Self { path: path.to_string(), text, hash, config };
        loaded.cross_check()?;
        Ok(loaded)
    }

    /// 1-based line of the first `"id": "<id>"` occurrence.
    pub fn line_of_id(&self, id: &str) -> usize {
        find_id_line(&self.text, id).unwrap_or(1)
    }

    /// A diagnostic anchored at the line declaring `id`.
    pub fn error_at(&self, id: &str, msg: impl std::fmt::Display) -> CliError {
        CliError::Config(format!("{}:{}: {msg}", self.path, self.line_of_id(id)))
    }

    fn line_of_key(&self, key: &str) -> usize {
        let needle = format!("\"{key}\"");
        self.text.lines().position(|l| l.contains(&needle)).map_or(1, |i| i + 1)
    }

    fn cross_check(&self) -> Result<(), CliError> {
        let cfg = &self.config;
        let mut seen = std::collections::BTreeSet::new();
        for id in cfg.states.iter().map(|s| &s.id).chain(cfg.observables.iter().map(|o| &o.id)) {
            if !seen.insert(id.as_str()) {
                return Err(self.error_at(id, format!("duplicate id '{id}'")));
            }
        }
        for s in &cfg.states {
            if let StateKind::GibbsBlock { observable, .. } = &s.kind {
                if !cfg.observables.iter().any(|o| &o.id == observable) {
                    return Err(self.error_at(&s.id, format!("state '{}' refers to unknown observable '{observable}'", s.id)));
                }
            }
        }
        if cfg.params.entropy.is_some_and(|s| s > (cfg.model.d as f64).ln() + 1e-12) {
            return Err(CliError::Config(format!(
                "{}:{}: params.entropy exceeds log d",
                self.path,
                self.line_of_key("entropy")
            )));
        }
        Ok(())
    }
}

/// The id in messages of the form `state 'x': ..` or `observable 'x': ..`.
fn named_entity(msg: &str) -> Option<&str> {
    let rest = msg.strip_prefix("state '").or_else(|| msg.strip_prefix("observable '"))?;
    rest.split_once('\'').map(|(id, _)| id)
}

fn find_id_line(text: &str, id: &str) -> Option<usize> {
    let needle = format!("\"{id}\"");
    text.lines()
        .position(|l| l.contains("\"id\"") && l.contains(&needle))
        .or_else(|| text.lines().position(|l| l.contains(&needle)))
        .map(|i| i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
  "model": {"d": 2},
  "states": [
    {"type": "product", "id": "p", "phi": {"diagonal": [0.9, 0.1]}},
    {"type": "markov", "id": "mk", "transition": [[0.9, 0.1], [0.1, 0.9]]}
  ],
  "observables": [
    {"id": "x", "lower": [[[0, 0]], [[1, 0], [0, 0]]]}
  ]
}"#;

    #[test]
    fn parses_minimal_config() {
        let c = LoadedConfig::from_text("cfg.json", MINIMAL.into()).unwrap();
        assert_eq!(c.config.model.w, 1);
        assert_eq!(c.config.model.cap, 4096);
        assert_eq!(c.config.states.len(), 2);
        assert_eq!(c.config.params.delta, 0.3);
        let x = c.config.observables[0].operator.to_matrix();
        assert_eq!(x[(0, 1)], Complex64::new(1.0, 0.0));
        assert_eq!(c.hash.len(), 64);
    }

    #[test]
    fn errors_are_line_anchored() {
        let bad = MINIMAL.replace("\"d\": 2", "\"d\": 1");
        let CliError::Config(msg) = LoadedConfig::from_text("cfg.json", bad).unwrap_err() else { panic!() };
        assert!(msg.starts_with("cfg.json:2:"), "{msg}");
        let bad = MINIMAL.replace("[[0.9, 0.1], [0.1, 0.9]]", "[[0.9, 0.1]]");
        let CliError::Config(msg) = LoadedConfig::from_text("cfg.json", bad).unwrap_err() else { panic!() };
        assert!(msg.starts_with("cfg.json:5:"), "{msg}");
    }

    #[test]
    fn rejects_bad_parameters() {
        let bad = MINIMAL.replace("\"model\": {\"d\": 2},", "\"model\": {\"d\": 2},\n  \"params\": {\"delta\": -1},");
        let CliError::Config(msg) = LoadedConfig::from_text("cfg.json", bad).unwrap_err() else { panic!() };
        assert!(msg.contains("delta"), "{msg}");
        let bad = MINIMAL.replace("\"phi\"", "\"psi\"");
        assert!(LoadedConfig::from_text("cfg.json", bad).is_err());
    }

    #[test]
    fn rejects_unknown_gibbs_observable() {
        let bad = MINIMAL.replace(
            "{\"type\": \"markov\"",
            "{\"type\": \"gibbs_block\", \"id\": \"g\", \"m\": 2, \"observable\": \"nope\"},\n    {\"type\": \"markov\"",
        );
        let CliError::Config(msg) = LoadedConfig::from_text("cfg.json", bad).unwrap_err() else { panic!() };
        assert!(msg.starts_with("cfg.json:5:"), "{msg}");
    }
}
