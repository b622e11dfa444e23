//! Model files: one JSON object per file, tagged with `"family"`.

use std::path::Path;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use tvdist::bayesnet::BayesNetJson;
use tvdist::causal::CbnJson;
use tvdist::gaussian::GaussianJson;
use tvdist::ising::IsingJson;
use tvdist::{BayesNet, Cbn, GaussianParams, IsingModel};

use crate::error::{CliError, CliResult, Kind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Bayesnet,
    Ising,
    Gaussian,
    Causal,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Bayesnet => "bayesnet",
            Family::Ising => "ising",
            Family::Gaussian => "gaussian",
            Family::Causal => "causal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        <Self as ValueEnum>::from_str(s, true).ok()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
enum ModelFile {
    Bayesnet(BayesNetJson),
    Ising(IsingJson),
    Gaussian(GaussianJson),
    Causal(CbnJson),
}

#[derive(Debug, Clone)]
pub enum Model {
    BayesNet(BayesNet),
    Ising(IsingModel),
    Gaussian(GaussianParams),
    Causal(Cbn),
}

impl Model {
    pub fn family(&self) -> Family {
        match self {
            Model::BayesNet(_) => Family::Bayesnet,
            Model::Ising(_) => Family::Ising,
            Model::Gaussian(_) => Family::Gaussian,
            Model::Causal(_) => Family::Causal,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Model::BayesNet(m) => m.n(),
            Model::Ising(m) => m.n(),
            Model::Gaussian(m) => m.n(),
            Model::Causal(m) => m.n(),
        }
    }

    /// The `d` column: in-degree for graphical families, width for Ising.
    pub fn shape(&self) -> Option<f64> {
        match self {
            Model::BayesNet(m) => Some(m.dag().in_degree() as f64),
            Model::Ising(m) => Some(m.width()),
            Model::Gaussian(_) => None,
            Model::Causal(m) => Some(m.admg().in_degree() as f64),
        }
    }

    /// Canonical JSON text, newline-terminated.
    pub fn to_json(&self) -> String {
        let file = match self {
            Model::BayesNet(m) => ModelFile::Bayesnet(m.into()),
            Model::Ising(m) => ModelFile::Ising(m.into()),
            Model::Gaussian(m) => ModelFile::Gaussian(m.into()),
            Model::Causal(m) => ModelFile::Causal(m.into()),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("models serialize");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| CliError::invalid(format!("model file: {e}")))?;
        Ok(match file {
            ModelFile::Bayesnet(j) => Model::BayesNet(j.try_into()?),
            ModelFile::Ising(j) => Model::Ising(j.try_into()?),
            ModelFile::Gaussian(j) => Model::Gaussian(j.try_into()?),
            ModelFile::Causal(j) => Model::Causal(j.try_into()?),
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::new(Kind::Io, format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| CliError::new(e.kind, format!("{}: {}", path.display(), e.message)))
    }
}

/// Errors with exit code 2 unless every present family equals the first.
pub fn same_family(families: &[Option<Family>]) -> CliResult<Family> {
    let present: Vec<Family> = families.iter().flatten().copied().collect();
    let first = *present.first().ok_or_else(|| CliError::invalid("cannot determine the model family"))?;
    if let Some(other) = present.iter().find(|&&f| f != first) {
        return Err(CliError::new(
            Kind::FamilyMismatch,
            format!("inputs disagree on family: {} vs {}", first.name(), other.name()),
        ));
    }
    Ok(first)
}
