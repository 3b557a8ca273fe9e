//! Serializable description of a solver run.

use serde::{Deserialize, Serialize};

use super::penalty::PenaltyKind;
use super::solve::RgnConfig;
use super::system::{quasi_pythagorean, quasi_pythagorean_twin, BoxDomain, PolySystem, Polynomial};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `x1^2 + x2^2 = x3^2 + 1`
    QuasiPythagorean,
    /// The same with `x3 - x1 = 2`.
    QuasiPythagoreanTwin,
}

/// One equation `sum of terms = target`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquationSpec {
    #[serde(flatten)]
    pub poly: Polynomial,
    pub target: i64,
}

/// A preset or explicit equations, a penalty, a box and solver settings.
///
/// `seed`, `restarts` and `max_extractions` override the fields of `rgn`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default)]
    pub preset: Option<Preset>,
    #[serde(default)]
    pub equations: Option<Vec<EquationSpec>>,
    #[serde(default)]
    pub penalty: PenaltyKind,
    pub domain: BoxDomain,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub restarts: Option<usize>,
    #[serde(default)]
    pub max_extractions: Option<usize>,
    #[serde(default)]
    pub rgn: RgnConfig,
}

impl ProblemConfig {
    pub fn system(&self) -> Result<PolySystem> {
        match (&self.preset, &self.equations) {
            (Some(Preset::QuasiPythagorean), None) => quasi_pythagorean(self.domain.clone()),
            (Some(Preset::QuasiPythagoreanTwin), None) => quasi_pythagorean_twin(self.domain.clone()),
            (None, Some(eqs)) => PolySystem::new(
                eqs.iter().map(|e| e.poly.clone()).collect(),
                eqs.iter().map(|e| e.target).collect(),
                self.domain.clone(),
            ),
            _ => Err(Error::Config("give exactly one of `preset` and `equations`".into())),
        }
    }

    /// Solver settings with the top-level overrides applied.
    pub fn rgn_config(&self) -> RgnConfig {
        let mut c = self.rgn.clone();
        if let Some(s) = self.seed {
            c.rng_seed = s;
        }
        if let Some(r) = self.restarts {
            c.restarts = r;
        }
        if let Some(m) = self.max_extractions {
            c.max_extractions = m;
        }
        c
    }
}
