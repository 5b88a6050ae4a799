//! Run configuration: a TOML file with one section per stage, overridable by flags.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use layersolve::bvp::{MAX_ITERS, TOL_FACTOR};
use layersolve::painleve::DEFAULT_S_MAX;
use layersolve::{Branch, CompositeConfig, MeshSpec};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CliError, CliResult};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "LAYERSOLVE_THREADS";

/// Branch at `x = -1` followed by branch at `x = +1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pair(pub Branch, pub Branch);

impl Pair {
    pub const ALL: [Pair; 4] =
        [Pair(Branch::Plus, Branch::Plus), Pair(Branch::Plus, Branch::Minus), Pair(Branch::Minus, Branch::Plus), Pair(Branch::Minus, Branch::Minus)];

    pub fn is_even(self) -> bool {
        self.0 == self.1
    }

    pub fn mirrored(self) -> Pair {
        Pair(self.1, self.0)
    }

    pub fn tuple(self) -> (Branch, Branch) {
        (self.0, self.1)
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.0.letter(), self.1.letter())
    }
}

impl FromStr for Pair {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let b = |c: char| match c.to_ascii_uppercase() {
            'P' => Ok(Branch::Plus),
            'M' => Ok(Branch::Minus),
            _ => Err(format!("unknown branch letter '{c}' in '{s}' (use P or M)")),
        };
        let mut chars = s.trim().chars();
        match (chars.next(), chars.next(), chars.next()) {
            (Some(l), Some(r), None) => Ok(Pair(b(l)?, b(r)?)),
            _ => Err(format!("branch pair '{s}' must be two letters such as PM")),
        }
    }
}

impl Serialize for Pair {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Pair {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses `PP,MM` or `all`.
pub fn parse_pairs(s: &str) -> CliResult<Vec<Pair>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(Pair::ALL.to_vec());
    }
    s.split(',').map(|p| p.parse().map_err(CliError::Config)).collect()
}

/// Parses a comma-separated list of positive reals.
pub fn parse_a_list(s: &str) -> CliResult<Vec<f64>> {
    s.split(',').map(|v| v.trim().parse::<f64>().map_err(|e| CliError::Config(format!("bad A value '{v}': {e}")))).collect()
}

/// `A = 10^3, 10^3.5, ..., 10^6`.
pub fn default_a_list() -> Vec<f64> {
    (0..7).map(|i| 10f64.powf(3.0 + 0.5 * i as f64)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    #[serde(rename = "A_list")]
    pub a_list: Vec<f64>,
    pub branches: Vec<Pair>,
    pub seed: u64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { a_list: default_a_list(), branches: Pair::ALL.to_vec(), seed: 20240611 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompositeSection {
    pub delta: f64,
    pub inner_width: f64,
    #[serde(rename = "D")]
    pub big_d: f64,
    pub s_max: f64,
}

impl Default for CompositeSection {
    fn default() -> Self {
        Self {
            delta: CompositeConfig::DEFAULT_DELTA,
            inner_width: CompositeConfig::DEFAULT_INNER_WIDTH,
            big_d: CompositeConfig::DEFAULT_BIG_D,
            s_max: DEFAULT_S_MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BvpSection {
    /// Residual tolerance relative to `A`.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for BvpSection {
    fn default() -> Self {
        Self { tol: TOL_FACTOR, max_iters: MAX_ITERS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    /// Eigenvalues computed per operator.
    pub k: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self { k: 4 }
    }
}

/// Limits the sweep checks against; the exit code is 1 when any fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub residual_exponent: f64,
    pub residual_exponent_tol: f64,
    pub r_squared_min: f64,
    /// Largest max/min ratio across A for quantities claimed bounded.
    pub bounded_ratio_max: f64,
    /// Residual-to-tolerance factor allowed between two Newton seeds.
    pub seed_factor: f64,
    pub correction_exponent_max: f64,
    pub eigen_exponent: f64,
    pub eigen_exponent_tol: f64,
    pub eigen_constant_rel: f64,
    pub apriori_ratio_max: f64,
    pub apriori_exponent: f64,
    pub apriori_exponent_tol: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            residual_exponent: 0.6,
            residual_exponent_tol: 0.05,
            r_squared_min: 0.995,
            bounded_ratio_max: 3.0,
            seed_factor: 10.0,
            correction_exponent_max: 0.25,
            eigen_exponent: -0.4,
            eigen_exponent_tol: 0.05,
            eigen_constant_rel: 0.1,
            apriori_ratio_max: 2.0,
            apriori_exponent: -0.4,
            apriori_exponent_tol: 0.05,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub sweep: SweepSection,
    pub composite: CompositeSection,
    pub mesh: MeshSpec,
    pub bvp: BvpSection,
    pub spectrum: SpectrumSection,
    pub thresholds: Thresholds,
}

impl Config {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn composite_config(&self, a: f64) -> CompositeConfig {
        CompositeConfig {
            a,
            delta: self.composite.delta,
            inner_width: self.composite.inner_width,
            big_d: self.composite.big_d,
            s_max: self.composite.s_max,
        }
    }

    /// Rejects configurations no stage could run with.
    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        let a = &self.sweep.a_list;
        if a.is_empty() {
            return bad("A list is empty".into());
        }
        if a.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("A values must be strictly increasing".into());
        }
        if self.sweep.branches.is_empty() {
            return bad("no branch pairs selected".into());
        }
        if !(self.bvp.tol > 0.0) || self.bvp.max_iters == 0 {
            return bad("tol and max_iters must be positive".into());
        }
        if self.spectrum.k < 2 {
            return bad("spectrum.k must be at least 2".into());
        }
        if !(self.composite.s_max >= layersolve::painleve::MIN_S_MAX) {
            return bad(format!("s_max must be at least {}", layersolve::painleve::MIN_S_MAX));
        }
        let m = &self.mesh;
        if m.layer_cells == 0 || m.interior_cells == 0 || !(m.layer_extent > 0.0) || !(m.growth > 0.0) {
            return bad("mesh parameters must be positive".into());
        }
        for &v in a {
            self.composite_config(v).validate()?;
        }
        Ok(())
    }
}

/// Worker count from `LAYERSOLVE_THREADS`, or `None` to use every core.
pub fn thread_cap() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let c = Config::default();
        c.validate().unwrap();
        assert_eq!(c.sweep.a_list.len(), 7);
        assert!((c.sweep.a_list[6] - 1e6).abs() < 1e-6);
    }

    #[test]
    fn toml_round_trip() {
        let c = Config::default();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(Config::from_toml(&text).unwrap(), c);
    }

    #[test]
    fn partial_toml_keeps_defaults() {
        let c = Config::from_toml("[sweep]\nA_list = [1e4]\nbranches = [\"MP\"]\n[composite]\nD = 2.0\n").unwrap();
        assert_eq!(c.sweep.a_list, vec![1e4]);
        assert_eq!(c.sweep.branches, vec![Pair(Branch::Minus, Branch::Plus)]);
        assert_eq!(c.composite.big_d, 2.0);
        assert_eq!(c.composite.delta, CompositeConfig::DEFAULT_DELTA);
    }

    #[test]
    fn shipped_config_matches_defaults() {
        let text = include_str!("../../../config/default.toml");
        assert_eq!(Config::from_toml(text).unwrap(), Config::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(Config::from_toml("[sweep]\nbogus = 1\n"), Err(CliError::Config(_))));
    }

    #[test]
    fn infeasible_a_is_a_config_error() {
        let mut c = Config::default();
        c.sweep.a_list = vec![1.0];
        assert!(matches!(c.validate(), Err(CliError::Config(_))));
    }

    #[test]
    fn pair_parsing() {
        assert_eq!(parse_pairs("all").unwrap().len(), 4);
        assert_eq!(parse_pairs("pm,MM").unwrap(), vec![Pair(Branch::Plus, Branch::Minus), Pair(Branch::Minus, Branch::Minus)]);
        assert!(parse_pairs("PX").is_err());
        assert!(parse_pairs("PPM").is_err());
        assert_eq!(Pair(Branch::Minus, Branch::Plus).to_string(), "MP");
    }
}
