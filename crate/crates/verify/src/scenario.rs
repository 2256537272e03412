use serde::{Deserialize, Serialize};

use crate::HarnessError;

pub const SUITES: [&str; 8] =
    ["jets", "pfaffian", "schwarzian", "projective", "isotropy", "maurer-cartan", "prolong-structure", "all"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Float => "float",
        })
    }
}

/// One harness run. Every field has a default so a scenario file may list
/// only what it changes; the resolved values are copied into the report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub suite: String,
    pub seed: u64,
    /// Truncation order T.
    pub order: u32,
    /// Projective dimension n.
    pub dim: usize,
    /// Transverse and leaf dimensions of the connection charts.
    pub q: usize,
    pub d: usize,
    /// Rank and order of the transverse equations.
    pub r: usize,
    pub k: usize,
    pub trials: usize,
    pub tolerance: f64,
    /// Relative bound for floating truncated-series identities, which lose
    /// digits to coefficient growth at high order.
    pub series_tolerance: f64,
    /// Finite-difference step and the looser bound used with it.
    pub fd_step: f64,
    pub fd_tolerance: f64,
    pub mode: Mode,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            suite: "all".into(),
            seed: 0,
            order: 8,
            dim: 2,
            q: 1,
            d: 1,
            r: 2,
            k: 2,
            trials: 20,
            tolerance: 1e-8,
            series_tolerance: 1e-6,
            fd_step: 1e-4,
            fd_tolerance: 1e-4,
            mode: Mode::Exact,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if !SUITES.contains(&self.suite.as_str()) {
            return Err(HarnessError::UnknownSuite(self.suite.clone()));
        }
        let range = |name: &str, v: usize, lo: usize, hi: usize| {
            if v < lo || v > hi {
                Err(HarnessError::OutOfRange(format!("{name} = {v} not in [{lo}, {hi}]")))
            } else {
                Ok(())
            }
        };
        range("order", self.order as usize, 6, 16)?;
        range("dim", self.dim, 1, 4)?;
        range("q", self.q, 1, 3)?;
        range("d", self.d, 1, 3)?;
        range("r", self.r, 1, 4)?;
        range("k", self.k, 1, 4)?;
        range("trials", self.trials, 1, 10_000)?;
        for (name, v) in [("tolerance", self.tolerance), ("series_tolerance", self.series_tolerance), ("fd_step", self.fd_step), ("fd_tolerance", self.fd_tolerance)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(HarnessError::OutOfRange(format!("{name} = {v} not in (0, 1)")));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Scenario(e.to_string()))
    }
}
