//! Experiment configuration: JSON schema, parsing and conversion into the
//! library's domain objects. Every violation is reported before any
//! computation starts.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Deserialize;

use ovfree::algebra::{AlgElement, CPMap};
use ovfree::cumulants::{DiagonalProfile, MixedWord};
use ovfree::matmodel::{BooleanMoments, EntryKind, EntryModel, MomentRegime};

use crate::Failure;

/// One matrix as nested rows of [re, im] pairs.
type RawMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: String,
    pub dim: usize,
    pub regime: RegimeTag,
    #[serde(default)]
    pub boolean_moments: Option<Vec<f64>>,
    pub entry_models: Vec<EntryModelConfig>,
    pub profile: ProfileConfig,
    pub words: Vec<WordConfig>,
    #[serde(default)]
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub families: Option<[Vec<usize>; 2]>,
    #[serde(default)]
    pub max_len: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeTag {
    Semicircular,
    Boolean,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryModelConfig {
    pub kind: KindTag,
    pub kraus: Vec<RawMatrix>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindTag {
    Gaussian,
    Circle,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub weights: Vec<f64>,
    /// values[symbol][step], each a dim x dim selfadjoint matrix.
    pub values: Vec<Vec<RawMatrix>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WordConfig {
    pub id: String,
    pub diag: Vec<usize>,
    pub matrix: Vec<usize>,
    #[serde(default)]
    pub constants: Option<Vec<RawMatrix>>,
}

/// Everything a subcommand needs, fully validated and converted.
pub struct Loaded {
    pub dim: usize,
    pub regime: MomentRegime,
    pub is_boolean: bool,
    pub models: Vec<EntryModel>,
    pub etas: Vec<CPMap>,
    pub profile: DiagonalProfile,
    pub words: Vec<(String, MixedWord)>,
    pub n_list: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub families: Option<(Vec<usize>, Vec<usize>)>,
    pub max_len: usize,
}

fn config_err(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

fn to_element(raw: &RawMatrix, dim: usize, what: &str) -> Result<AlgElement, Failure> {
    if raw.len() != dim || raw.iter().any(|row| row.len() != dim) {
        return Err(config_err(format!("{what}: expected a {dim}x{dim} matrix")));
    }
    let mat = DMatrix::from_fn(dim, dim, |i, j| Complex64::new(raw[i][j][0], raw[i][j][1]));
    AlgElement::from_matrix(mat).map_err(|e| config_err(format!("{what}: {e}")))
}

pub fn load(path: &Path) -> Result<Loaded, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("reading {}: {e}", path.display())))?;
    let cfg: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| config_err(format!("parsing {}: {e}", path.display())))?;
    convert(cfg)
}

fn convert(cfg: ExperimentConfig) -> Result<Loaded, Failure> {
    if cfg.version != "1" {
        return Err(config_err(format!(
            "unsupported config version '{}', expected \"1\"",
            cfg.version
        )));
    }
    let dim = cfg.dim;
    if dim == 0 {
        return Err(config_err("dim must be positive"));
    }
    if cfg.entry_models.is_empty() {
        return Err(config_err("need at least one entry model"));
    }

    let mut models = Vec::with_capacity(cfg.entry_models.len());
    for (s, raw) in cfg.entry_models.iter().enumerate() {
        let mut kraus = Vec::with_capacity(raw.kraus.len());
        for (r, mat) in raw.kraus.iter().enumerate() {
            kraus.push(to_element(mat, dim, &format!("entry model {s}, kraus {r}"))?);
        }
        let eta = CPMap::new(kraus).map_err(|e| config_err(format!("entry model {s}: {e}")))?;
        let kind = match raw.kind {
            KindTag::Gaussian => EntryKind::GaussianHermitian,
            KindTag::Circle => EntryKind::Circle,
        };
        models.push(
            EntryModel::new(eta, kind).map_err(|e| config_err(format!("entry model {s}: {e}")))?,
        );
    }
    let etas: Vec<CPMap> = models.iter().map(|m| m.eta().clone()).collect();

    let steps = cfg.profile.weights.len();
    let mut values = Vec::with_capacity(cfg.profile.values.len());
    for (t, row) in cfg.profile.values.iter().enumerate() {
        if row.len() != steps {
            return Err(config_err(format!(
                "profile symbol {t}: {} step values for {} weights",
                row.len(),
                steps
            )));
        }
        let mut per_step = Vec::with_capacity(steps);
        for (j, mat) in row.iter().enumerate() {
            per_step.push(to_element(mat, dim, &format!("profile symbol {t}, step {j}"))?);
        }
        values.push(per_step);
    }
    let num_diag_symbols = values.len();
    let profile = DiagonalProfile::new(cfg.profile.weights.clone(), values)
        .map_err(|e| config_err(format!("profile: {e}")))?;

    let regime = match cfg.regime {
        RegimeTag::Semicircular => {
            if cfg.boolean_moments.is_some() {
                return Err(config_err(
                    "boolean_moments given but regime is semicircular",
                ));
            }
            MomentRegime::Classical
        }
        RegimeTag::Boolean => {
            let moments = match &cfg.boolean_moments {
                Some(seq) => BooleanMoments::new(seq.clone())
                    .map_err(|e| config_err(format!("boolean_moments: {e}")))?,
                None => BooleanMoments::bernoulli(10),
            };
            MomentRegime::Boolean(moments)
        }
    };

    if cfg.words.is_empty() {
        return Err(config_err("need at least one word"));
    }
    let mut words = Vec::with_capacity(cfg.words.len());
    for w in &cfg.words {
        if words.iter().any(|(id, _)| id == &w.id) {
            return Err(config_err(format!("duplicate word id '{}'", w.id)));
        }
        if let Some(&t) = w.diag.iter().find(|&&t| t >= num_diag_symbols) {
            return Err(config_err(format!(
                "word '{}': diagonal symbol {t} but the profile defines {num_diag_symbols}",
                w.id
            )));
        }
        if let Some(&s) = w.matrix.iter().find(|&&s| s >= models.len()) {
            return Err(config_err(format!(
                "word '{}': matrix symbol {s} but only {} entry models",
                w.id,
                models.len()
            )));
        }
        let word = match &w.constants {
            None => MixedWord::plain(w.diag.clone(), w.matrix.clone(), dim),
            Some(raw) => {
                let mut constants = Vec::with_capacity(raw.len());
                for (c, mat) in raw.iter().enumerate() {
                    constants.push(to_element(mat, dim, &format!("word '{}', constant {c}", w.id))?);
                }
                MixedWord::new(w.diag.clone(), w.matrix.clone(), constants)
            }
        }
        .map_err(|e| config_err(format!("word '{}': {e}", w.id)))?;
        words.push((w.id.clone(), word));
    }

    let families = match &cfg.families {
        None => None,
        Some([a, b]) => {
            for &s in a.iter().chain(b.iter()) {
                if s >= models.len() {
                    return Err(config_err(format!(
                        "families reference symbol {s} but only {} entry models",
                        models.len()
                    )));
                }
            }
            if a.is_empty() || b.is_empty() {
                return Err(config_err("both families must be nonempty"));
            }
            if a.iter().any(|s| b.contains(s)) {
                return Err(config_err("families must be disjoint"));
            }
            Some((a.clone(), b.clone()))
        }
    };

    Ok(Loaded {
        dim,
        regime,
        is_boolean: cfg.regime == RegimeTag::Boolean,
        models,
        etas,
        profile,
        words,
        n_list: cfg.n_list,
        trials: cfg.trials,
        seed: cfg.seed,
        families,
        max_len: cfg.max_len.unwrap_or(4),
    })
}
