//! Flat `key = value` scenario configuration with `[section]` headers and `#`
//! comments. Keys inside a section are addressed as `section.key`.

use std::path::PathBuf;

use thiserror::Error;
use worldsheet_core::dynamics::Couplings;
use worldsheet_core::invariants::CHERN_NORMALIZATION;
use worldsheet_core::scenarios;
use worldsheet_core::verify::{Tolerances, VerifyConfig};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value` or `[section]`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: `{key}` must be {expected}, got `{value}`")]
    BadValue { line: usize, key: String, expected: &'static str, value: String },
    #[error("grid size must be a power of two between 16 and 512, got {0}")]
    GridSize(usize),
    #[error("tolerance `{0}` must be strictly positive")]
    Tolerance(String),
    #[error("tau window must satisfy tau_min < tau_max, got [{0}, {1}]")]
    Window(f64, f64),
    #[error("unknown scenario `{0}`; known: {known}", known = Scenario::NAMES.join(", "))]
    UnknownScenario(String),
    #[error("no scenario given; set `scenario = <name>`")]
    MissingScenario,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    OscillatingString,
    WobbledString,
    StaticCylinder,
    CliffordTorus,
    WhitneySphere,
    RoundSphere,
    CatenoidRelaxation,
}

impl Scenario {
    pub const NAMES: [&'static str; 7] = [
        "oscillating-string",
        "wobbled-string",
        "static-cylinder",
        "clifford-torus",
        "whitney-sphere",
        "round-sphere",
        "catenoid-relaxation",
    ];

    pub fn parse(name: &str) -> Result<Self, ConfigError> {
        Ok(match name {
            "oscillating-string" => Self::OscillatingString,
            "wobbled-string" => Self::WobbledString,
            "static-cylinder" => Self::StaticCylinder,
            "clifford-torus" => Self::CliffordTorus,
            "whitney-sphere" => Self::WhitneySphere,
            "round-sphere" => Self::RoundSphere,
            "catenoid-relaxation" => Self::CatenoidRelaxation,
            other => return Err(ConfigError::UnknownScenario(other.to_string())),
        })
    }

    pub fn name(self) -> &'static str {
        Self::NAMES[self as usize]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Option<Scenario>,
    pub grid: usize,
    pub tau: (f64, f64),
    pub couplings: Couplings,
    /// Base point of the string family.
    pub lambda: [f64; 2],
    pub oracle_step: f64,
    /// Polar-cap cutoff of the sphere scenarios (single-cutoff reports).
    pub cap: f64,
    pub tolerances: Tolerances,
    pub out: PathBuf,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let v = VerifyConfig::default();
        Self {
            scenario: None,
            grid: v.grid,
            tau: scenarios::WOBBLE_TAU,
            couplings: Couplings { sigma0: 1.0, sigma1: 1.0, sigma2: CHERN_NORMALIZATION },
            lambda: [0.0, 0.0],
            oracle_step: v.oracle_step,
            cap: 0.05,
            tolerances: v.tolerances,
            out: PathBuf::from("reports"),
            seed: v.seed,
        }
    }
}

const KEYS: [&str; 14] = [
    "scenario",
    "grid.size",
    "window.tau_min",
    "window.tau_max",
    "couplings.sigma0",
    "couplings.sigma1",
    "couplings.sigma2",
    "family.lambda1",
    "family.lambda2",
    "family.oracle_step",
    "caps.cutoff",
    "output.dir",
    "run.seed",
    "seed",
];

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut section = String::new();
        let mut seen: Vec<String> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(name) = body.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let Some((k, v)) = body.split_once('=') else {
                return Err(ConfigError::Syntax { line, text: body.to_string() });
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(ConfigError::Syntax { line, text: body.to_string() });
            }
            let key = if section.is_empty() { k.to_string() } else { format!("{section}.{k}") };
            if seen.contains(&key) {
                return Err(ConfigError::Duplicate { line, key });
            }
            seen.push(key.clone());
            cfg.set(line, &key, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<(), ConfigError> {
        let float = || -> Result<f64, ConfigError> {
            value
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or(ConfigError::BadValue { line, key: key.to_string(), expected: "a finite number", value: value.to_string() })
        };
        let int = || -> Result<u64, ConfigError> {
            value.parse::<u64>().map_err(|_| ConfigError::BadValue {
                line,
                key: key.to_string(),
                expected: "a non-negative integer",
                value: value.to_string(),
            })
        };
        if let Some(name) = key.strip_prefix("tolerances.") {
            let v = float()?;
            let slot = self.tolerances.get_mut(name).ok_or(ConfigError::UnknownKey { line, key: key.to_string() })?;
            *slot = v;
            return Ok(());
        }
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey { line, key: key.to_string() });
        }
        match key {
            "scenario" => self.scenario = Some(Scenario::parse(value)?),
            "grid.size" => self.grid = int()? as usize,
            "window.tau_min" => self.tau.0 = float()?,
            "window.tau_max" => self.tau.1 = float()?,
            "couplings.sigma0" => self.couplings.sigma0 = float()?,
            "couplings.sigma1" => self.couplings.sigma1 = float()?,
            "couplings.sigma2" => self.couplings.sigma2 = float()?,
            "family.lambda1" => self.lambda[0] = float()?,
            "family.lambda2" => self.lambda[1] = float()?,
            "family.oracle_step" => self.oracle_step = float()?,
            "caps.cutoff" => self.cap = float()?,
            "output.dir" => self.out = PathBuf::from(value),
            _ => self.seed = int()?,
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(16..=512).contains(&self.grid) || !self.grid.is_power_of_two() {
            return Err(ConfigError::GridSize(self.grid));
        }
        for name in Tolerances::NAMES {
            let mut t = self.tolerances.clone();
            if *t.get_mut(name).expect("listed tolerance") <= 0.0 {
                return Err(ConfigError::Tolerance(name.to_string()));
            }
        }
        for (name, v) in [("family.oracle_step", self.oracle_step), ("caps.cutoff", self.cap)] {
            if v <= 0.0 {
                return Err(ConfigError::Tolerance(name.to_string()));
            }
        }
        if self.tau.0 >= self.tau.1 {
            return Err(ConfigError::Window(self.tau.0, self.tau.1));
        }
        if self.couplings.sigma0 == 0.0 {
            return Err(ConfigError::BadValue {
                line: 0,
                key: "couplings.sigma0".into(),
                expected: "nonzero",
                value: "0".into(),
            });
        }
        Ok(())
    }

    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        self.scenario.ok_or(ConfigError::MissingScenario)
    }

    pub fn verify_config(&self) -> VerifyConfig {
        VerifyConfig {
            grid: self.grid,
            couplings: self.couplings,
            seed: self.seed,
            oracle_step: self.oracle_step,
            tolerances: self.tolerances.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_comments() {
        let cfg = ScenarioConfig::parse(
            "# run\nscenario = wobbled-string  # trailing\n\n[grid]\nsize = 128\n[couplings]\nsigma1 = 0\n[tolerances]\noracle = 1e-3\n",
        )
        .unwrap();
        assert_eq!(cfg.scenario, Some(Scenario::WobbledString));
        assert_eq!(cfg.grid, 128);
        assert_eq!(cfg.couplings.sigma1, 0.0);
        assert_eq!(cfg.tolerances.oracle, 1e-3);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(ScenarioConfig::parse("colour = red"), Err(ConfigError::UnknownKey { line: 1, .. })));
        assert!(matches!(ScenarioConfig::parse("[tolerances]\nfoo = 1"), Err(ConfigError::UnknownKey { .. })));
        assert_eq!(ScenarioConfig::parse("[grid]\nsize = 15"), Err(ConfigError::GridSize(15)));
        assert_eq!(ScenarioConfig::parse("[grid]\nsize = 1024"), Err(ConfigError::GridSize(1024)));
        assert_eq!(ScenarioConfig::parse("[tolerances]\noracle = 0"), Err(ConfigError::Tolerance("oracle".into())));
        assert!(matches!(ScenarioConfig::parse("scenario = moebius"), Err(ConfigError::UnknownScenario(_))));
        assert!(matches!(ScenarioConfig::parse("just words"), Err(ConfigError::Syntax { .. })));
        assert!(matches!(ScenarioConfig::parse("[grid]\nsize = x"), Err(ConfigError::BadValue { .. })));
        assert!(matches!(ScenarioConfig::parse("seed = 1\nseed = 2"), Err(ConfigError::Duplicate { line: 2, .. })));
    }
}
