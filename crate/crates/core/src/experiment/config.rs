//! Declarative experiment configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bench::{Scale, SuiteName, SuiteOptions};
use crate::ccopt::{phase_evaluations, CcOptions};
use crate::decompose::{Dg2Threshold, DEFAULT_EPS_N};
use crate::error::{Error, Result};
use crate::interaction::DetectionOptions;

/// A grouping method, or a fixed plan for optimization runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Oedg,
    Rdg3,
    Ordg,
    Dg2,
    /// Every variable in one group.
    Single,
    /// The generator's true subcomponents.
    Truth,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Oedg => "oedg",
            Algorithm::Rdg3 => "rdg3",
            Algorithm::Ordg => "ordg",
            Algorithm::Dg2 => "dg2",
            Algorithm::Single => "single",
            Algorithm::Truth => "truth",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "oedg" => Ok(Algorithm::Oedg),
            "rdg3" => Ok(Algorithm::Rdg3),
            "ordg" => Ok(Algorithm::Ordg),
            "dg2" => Ok(Algorithm::Dg2),
            "single" => Ok(Algorithm::Single),
            "truth" => Ok(Algorithm::Truth),
            other => Err(Error::config("algorithms", format!("unknown algorithm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Grouping,
    Optimization,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "grouping" => Ok(Mode::Grouping),
            "optimization" => Ok(Mode::Optimization),
            _ => Err(Error::config("mode", format!("unknown mode `{s}` (grouping | optimization)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Rdg3Params {
    /// Group size cap; `None` resolves to 50 at paper scale and 50 divided by
    /// the desk factor at desk scale.
    pub eps_n: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Dg2Params {
    pub threshold: Dg2Threshold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Benchmark suite; ignored when `instances` is non-empty.
    #[serde(default)]
    pub suite: Option<SuiteName>,
    #[serde(default = "default_scale")]
    pub scale: Scale,
    #[serde(default)]
    pub suite_options: SuiteOptions,
    /// Instance descriptor files used instead of a suite.
    #[serde(default)]
    pub instances: Vec<PathBuf>,
    /// Problem names to keep; all when empty.
    #[serde(default)]
    pub problems: Vec<String>,
    pub algorithms: Vec<String>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    /// Total evaluations per optimization run, grouping included.
    #[serde(default)]
    pub budget: Option<u64>,
    #[serde(default)]
    pub detection: DetectionOptions,
    #[serde(default)]
    pub rdg3: Rdg3Params,
    #[serde(default)]
    pub dg2: Dg2Params,
    #[serde(default)]
    pub cc: CcOptions,
}

fn default_scale() -> Scale {
    Scale::Desk
}

fn default_runs() -> usize {
    30
}

fn default_mode() -> Mode {
    Mode::Grouping
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("config", e.message().to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn parsed_algorithms(&self) -> Result<Vec<Algorithm>> {
        self.algorithms
            .iter()
            .enumerate()
            .map(|(i, a)| {
                a.parse::<Algorithm>()
                    .map_err(|_| Error::config(format!("algorithms[{i}]"), format!("unknown algorithm `{a}`")))
            })
            .collect()
    }

    /// Checks the configuration and fills scale-dependent defaults.
    pub fn resolve(mut self) -> Result<Self> {
        let algs = self.parsed_algorithms()?;
        if algs.is_empty() {
            return Err(Error::config("algorithms", "at least one algorithm is required"));
        }
        for (i, a) in algs.iter().enumerate() {
            if algs[..i].contains(a) {
                return Err(Error::config(format!("algorithms[{i}]"), format!("`{a}` is listed twice")));
            }
        }
        self.algorithms = algs.iter().map(|a| a.name().to_string()).collect();
        if self.runs == 0 {
            return Err(Error::config("runs", "must be at least 1"));
        }
        if self.suite.is_none() && self.instances.is_empty() {
            return Err(Error::config("suite", "either a suite or instance files must be given"));
        }
        if self.suite_options.factor == 0 {
            return Err(Error::config("suite_options.factor", "must be positive"));
        }
        let eps_n = self.rdg3.eps_n.unwrap_or(match self.scale {
            Scale::Paper => DEFAULT_EPS_N,
            Scale::Desk => (DEFAULT_EPS_N / self.suite_options.factor).max(1),
        });
        if eps_n == 0 {
            return Err(Error::config("rdg3.eps_n", "must be at least 1"));
        }
        self.rdg3.eps_n = Some(eps_n);
        if self.mode == Mode::Optimization {
            let budget = self.budget.ok_or_else(|| Error::config("budget", "optimization mode needs a budget"))?;
            if self.cc.phase_generations == 0 {
                return Err(Error::config("cc.phase_generations", "must be at least 1"));
            }
            if budget <= phase_evaluations(1, self.cc.phase_generations) {
                return Err(Error::config("budget", "budget must exceed one subsolver phase"));
            }
            if self.runs < crate::metrics::MIN_SAMPLE && algs.len() > 1 {
                return Err(Error::config(
                    "runs",
                    format!("the rank-sum comparison needs at least {} runs", crate::metrics::MIN_SAMPLE),
                ));
            }
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_resolves_desk_defaults() {
        let cfg = ExperimentConfig::from_toml(
            r#"
suite = "LTO"
scale = "desk"
algorithms = ["oedg", "RDG3"]
runs = 3
seed = 1
"#,
        )
        .unwrap()
        .resolve()
        .unwrap();
        assert_eq!(cfg.rdg3.eps_n, Some(10));
        assert_eq!(cfg.algorithms, vec!["oedg", "rdg3"]);
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_algorithm_names_its_key() {
        let err = ExperimentConfig::from_toml("suite = \"LTO\"\nalgorithms = [\"oedg\", \"xdg\"]\n")
            .unwrap()
            .resolve()
            .unwrap_err();
        assert!(err.to_string().contains("algorithms[1]"), "{err}");
    }

    #[test]
    fn zero_budget_is_rejected() {
        let err = ExperimentConfig::from_toml(
            "suite = \"LTO\"\nalgorithms = [\"oedg\"]\nmode = \"optimization\"\nbudget = 0\n",
        )
        .unwrap()
        .resolve()
        .unwrap_err();
        assert!(err.to_string().contains("budget must exceed one subsolver phase"));
    }
}
