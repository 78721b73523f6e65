//! Experiment configuration: parsing, validation and default materialization.

use std::fmt;
use std::path::Path;

use rotsmooth::homog_dist::TestFunction;
use rotsmooth::smoothing::ProfileSpec;
use rotsmooth::sphere::DEFAULT_LEVELS;
use rotsmooth::symbols::{strict_ceil, HomogeneousSymbol, MultiIndex, SymbolSpec, DEFAULT_TOL_B};
use rotsmooth::C64;
use serde::{Deserialize, Serialize};

pub const SEED_ENV: &str = "ROTSMOOTH_SEED";
pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_OUTPUT_DIR: &str = "rotsmooth-out";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    CheckSymbol,
    Pair,
    RalphaNorm,
    VerifyIdentity,
    HaarCheck,
    CounterexampleLoss,
    CounterexampleCancel,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::CheckSymbol => "check-symbol",
            Subcommand::Pair => "pair",
            Subcommand::RalphaNorm => "ralpha-norm",
            Subcommand::VerifyIdentity => "verify-identity",
            Subcommand::HaarCheck => "haar-check",
            Subcommand::CounterexampleLoss => "counterexample-loss",
            Subcommand::CounterexampleCancel => "counterexample-cancel",
        }
    }
}

/// Bad input; maps to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// φ(η) = P(η)·exp(−s²|η − c|²/2); `poly` entries are (multi-index, re, im).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunctionSpec {
    pub center: Vec<f64>,
    pub scale: f64,
    pub poly: Vec<(MultiIndex, f64, f64)>,
}

impl TestFunctionSpec {
    pub fn default_for(k: usize) -> Self {
        TestFunctionSpec { center: vec![0.3; k], scale: 1.2, poly: vec![(vec![0; k], 1.0, 0.0)] }
    }

    pub fn build(&self, k: usize) -> Result<TestFunction, ConfigError> {
        if self.center.len() != k {
            return bad(format!("test_function.center has length {}, symbol has k = {k}", self.center.len()));
        }
        if !(self.scale > 0.0) {
            return bad("test_function.scale must be positive");
        }
        if self.poly.is_empty() || self.poly.iter().any(|(b, _, _)| b.len() != k) {
            return bad(format!("test_function.poly needs at least one term, each multi-index of length {k}"));
        }
        let poly = self.poly.iter().map(|(b, re, im)| (b.clone(), C64::new(*re, *im))).collect();
        Ok(TestFunction::with_poly(self.center.clone(), self.scale, poly))
    }
}

/// One JSON object for every subcommand. Fields a subcommand does not use must be absent;
/// after `materialize` every field it does use is present.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcommand: Option<Subcommand>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<SymbolSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileSpec>,
    /// harmonic truncation degree L
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    /// graded refinement levels of the sphere rule
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_sequence: Option<Vec<f64>>,
    /// fixed mollification scale of counterexample-cancel
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_function: Option<TestFunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    /// sphere samples for check-symbol
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// relative homogeneity tolerance for check-symbol
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Monte Carlo rotations; 0 disables the Monte Carlo estimate in verify-identity
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

/// Where the seed came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSource {
    Config,
    Env,
    Default,
}

/// Reads a config file, or the `config` member of a run manifest.
pub fn load(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    parse(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))
}

pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ConfigError(format!("invalid JSON: {e}")))?;
    let body = match value.get("config") {
        Some(c) if value.get("tool").is_some() => c.clone(),
        _ => value,
    };
    serde_json::from_value(body).map_err(|e| ConfigError(format!("schema violation: {e}")))
}

/// The δ the smoothing identity uses for (k, α), or the open lower bound when δ is free.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DeltaRule {
    /// α < k/2
    Zero,
    /// α − k/2 < ⌈α − k⌉
    Ceil(u32),
    /// otherwise δ > α − k/2
    Above(f64),
}

pub fn delta_rule(k: usize, alpha: f64) -> DeltaRule {
    let half = alpha - 0.5 * k as f64;
    if half < 0.0 {
        return DeltaRule::Zero;
    }
    let c = strict_ceil(alpha - k as f64);
    if half < c as f64 {
        DeltaRule::Ceil(c)
    } else {
        DeltaRule::Above(half)
    }
}

pub fn default_delta(k: usize, alpha: f64) -> f64 {
    match delta_rule(k, alpha) {
        DeltaRule::Zero => 0.0,
        DeltaRule::Ceil(c) => c as f64,
        DeltaRule::Above(h) => h + 0.25,
    }
}

pub fn check_delta(k: usize, alpha: f64, delta: f64) -> Result<(), ConfigError> {
    let ok = match delta_rule(k, alpha) {
        DeltaRule::Zero => delta == 0.0,
        DeltaRule::Ceil(c) => delta == c as f64,
        DeltaRule::Above(h) => delta > h,
    };
    if ok {
        return Ok(());
    }
    let why = match delta_rule(k, alpha) {
        DeltaRule::Zero => format!("α = {alpha} < k/2 = {}, so δ must be 0", 0.5 * k as f64),
        DeltaRule::Ceil(c) => format!("α − k/2 = {} < ⌈α − k⌉ = {c}, so δ must be {c}", alpha - 0.5 * k as f64),
        DeltaRule::Above(h) => format!("α − k/2 = {h} ≥ ⌈α − k⌉, so δ must exceed {h}"),
    };
    bad(format!("inadmissible delta = {delta}: {why}"))
}

fn default_symbol(sub: Subcommand) -> Option<SymbolSpec> {
    let riesz = |k, a| SymbolSpec { kind: "riesz".into(), k: Some(k), alpha: Some(a), coeffs: Vec::new() };
    match sub {
        Subcommand::CheckSymbol | Subcommand::Pair => {
            Some(SymbolSpec { kind: "transport".into(), k: None, alpha: None, coeffs: Vec::new() })
        }
        Subcommand::RalphaNorm | Subcommand::VerifyIdentity => Some(riesz(1, 0.25)),
        Subcommand::CounterexampleLoss => Some(riesz(1, 0.75)),
        Subcommand::CounterexampleCancel => Some(riesz(1, 1.0)),
        Subcommand::HaarCheck => None,
    }
}

fn materialized_symbol(spec: &SymbolSpec) -> Result<(HomogeneousSymbol, SymbolSpec), ConfigError> {
    let sym = HomogeneousSymbol::from_spec(spec).map_err(|e| ConfigError(e.to_string()))?;
    let mut full = spec.clone();
    full.k = Some(sym.k);
    full.alpha = Some(sym.alpha);
    Ok((sym, full))
}

fn geometric(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|j| 2f64.powi(j)).collect()
}

/// Fills every field `sub` uses and rejects fields it does not.
/// Returns the materialized config and where its seed came from (if it has one).
pub fn materialize(
    cfg: &ExperimentConfig,
    sub: Subcommand,
    env_seed: Option<&str>,
) -> Result<(ExperimentConfig, Option<SeedSource>), ConfigError> {
    if let Some(s) = cfg.subcommand {
        if s != sub {
            return bad(format!("config is for '{}' but '{}' was requested", s.name(), sub.name()));
        }
    }
    use Subcommand::*;
    let uses = |field: &str| -> bool {
        match field {
            "symbol" => sub != HaarCheck,
            "n" => matches!(sub, RalphaNorm | VerifyIdentity | HaarCheck | CounterexampleLoss | CounterexampleCancel),
            "delta" => matches!(sub, RalphaNorm | VerifyIdentity | CounterexampleCancel),
            "profile" => sub == VerifyIdentity,
            "l" | "levels" => matches!(sub, RalphaNorm | VerifyIdentity | CounterexampleCancel),
            "t_sequence" => matches!(sub, RalphaNorm | VerifyIdentity),
            "t" => sub == CounterexampleCancel,
            "n_list" => matches!(sub, CounterexampleLoss | CounterexampleCancel),
            "radius" => sub == CounterexampleLoss,
            "test_function" | "lambdas" => sub == Pair,
            "samples" | "tol" => sub == CheckSymbol,
            "mc_count" => matches!(sub, VerifyIdentity | HaarCheck),
            "seed" => matches!(sub, VerifyIdentity | HaarCheck),
            _ => true,
        }
    };
    let present = [
        ("symbol", cfg.symbol.is_some()),
        ("n", cfg.n.is_some()),
        ("delta", cfg.delta.is_some()),
        ("profile", cfg.profile.is_some()),
        ("l", cfg.l.is_some()),
        ("levels", cfg.levels.is_some()),
        ("t_sequence", cfg.t_sequence.is_some()),
        ("t", cfg.t.is_some()),
        ("n_list", cfg.n_list.is_some()),
        ("radius", cfg.radius.is_some()),
        ("test_function", cfg.test_function.is_some()),
        ("lambdas", cfg.lambdas.is_some()),
        ("samples", cfg.samples.is_some()),
        ("tol", cfg.tol.is_some()),
        ("mc_count", cfg.mc_count.is_some()),
        ("seed", cfg.seed.is_some()),
    ];
    for (field, is_set) in present {
        if is_set && !uses(field) {
            return bad(format!("field '{field}' is not used by '{}'", sub.name()));
        }
    }

    let mut out = ExperimentConfig { subcommand: Some(sub), ..Default::default() };
    let mut sym = None;
    if uses("symbol") {
        let spec = cfg.symbol.clone().or_else(|| default_symbol(sub)).expect("every symbol subcommand has a default");
        let (s, full) = materialized_symbol(&spec)?;
        out.symbol = Some(full);
        sym = Some(s);
    }
    if uses("n") {
        let default_n = match &sym {
            Some(s) => s.k + 1,
            None => 2,
        };
        let n = cfg.n.unwrap_or(default_n.max(2));
        if !(2..=3).contains(&n) {
            return bad(format!("n = {n}: only n ∈ {{2, 3}} is supported"));
        }
        if let Some(s) = &sym {
            if s.k >= n {
                return bad(format!("symbol has k = {}, which needs n > k; got n = {n}", s.k));
            }
        }
        out.n = Some(n);
    }
    if uses("delta") {
        let s = sym.as_ref().unwrap();
        let d = cfg.delta.unwrap_or_else(|| default_delta(s.k, s.alpha));
        check_delta(s.k, s.alpha, d)?;
        out.delta = Some(d);
    }
    if uses("profile") {
        // a non-constant angular part keeps the Haar average non-trivial
        out.profile = Some(cfg.profile.clone().unwrap_or(ProfileSpec { angular: vec![0.5], ..Default::default() }));
    }
    if uses("l") {
        let n = out.n.unwrap();
        let l = cfg.l.unwrap_or(if n == 2 { 64 } else { 48 });
        if l < 2 {
            return bad("l must be at least 2");
        }
        out.l = Some(l);
        out.levels = Some(cfg.levels.unwrap_or(DEFAULT_LEVELS));
    }
    if uses("t_sequence") {
        let ts = cfg.t_sequence.clone().unwrap_or_else(|| geometric(0, 8));
        if ts.is_empty() || ts.iter().any(|&t| !(t > 0.0)) {
            return bad("t_sequence must be a non-empty list of positive numbers");
        }
        out.t_sequence = Some(ts);
    }
    if uses("t") {
        let t = cfg.t.unwrap_or(16.0);
        if !(t > 0.0) {
            return bad("t must be positive");
        }
        out.t = Some(t);
    }
    if uses("n_list") {
        let nl = cfg.n_list.clone().unwrap_or_else(|| match sub {
            CounterexampleLoss => (0..12).map(|j| 10f64.powf(1.0 + j as f64 * 3.0 / 11.0)).collect(),
            _ => geometric(4, 12),
        });
        if nl.len() < 2 || nl.iter().any(|&v| !(v >= 1.0)) {
            return bad("n_list needs at least two values, each ≥ 1");
        }
        out.n_list = Some(nl);
    }
    if uses("radius") {
        out.radius = Some(cfg.radius.unwrap_or(1.0));
    }
    if uses("test_function") {
        let k = sym.as_ref().unwrap().k;
        let tf = cfg.test_function.clone().unwrap_or_else(|| TestFunctionSpec::default_for(k));
        tf.build(k)?;
        out.test_function = Some(tf);
        let lambdas = cfg.lambdas.clone().unwrap_or_else(|| vec![0.25, 0.5, 2.0, 4.0]);
        if lambdas.iter().any(|&l| !(l > 0.0)) {
            return bad("lambdas must be positive");
        }
        out.lambdas = Some(lambdas);
    }
    if uses("samples") {
        out.samples = Some(cfg.samples.unwrap_or(10_000).max(1));
        out.tol = Some(cfg.tol.unwrap_or(DEFAULT_TOL_B));
    }
    if uses("mc_count") {
        out.mc_count = Some(cfg.mc_count.unwrap_or(if sub == HaarCheck { 100_000 } else { 10_000 }));
    }
    let mut source = None;
    if uses("seed") {
        let (seed, src) = match env_seed {
            Some(v) => (
                v.trim().parse::<u64>().map_err(|_| ConfigError(format!("{SEED_ENV} = '{v}' is not an unsigned integer")))?,
                SeedSource::Env,
            ),
            None => match cfg.seed {
                Some(s) => (s, SeedSource::Config),
                None => (DEFAULT_SEED, SeedSource::Default),
            },
        };
        out.seed = Some(seed);
        source = Some(src);
    }
    let threads = cfg.threads.unwrap_or(1);
    if threads == 0 {
        return bad("threads must be at least 1");
    }
    out.threads = Some(threads);
    out.output_dir = Some(cfg.output_dir.clone().unwrap_or_else(|| DEFAULT_OUTPUT_DIR.to_string()));
    Ok((out, source))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_cases() {
        assert_eq!(delta_rule(1, 0.25), DeltaRule::Zero);
        assert_eq!(delta_rule(1, 1.0), DeltaRule::Ceil(1));
        assert_eq!(delta_rule(2, 1.0), DeltaRule::Above(0.0));
        assert_eq!(delta_rule(1, 0.5), DeltaRule::Above(0.0));
        assert!(check_delta(1, 1.0, 0.5).is_err());
        assert!(check_delta(1, 1.0, 1.0).is_ok());
        assert!(check_delta(2, 1.0, 0.25).is_ok());
        assert!(check_delta(2, 1.0, 0.0).is_err());
        assert_eq!(default_delta(2, 1.0), 0.25);
    }

    #[test]
    fn materialization_is_idempotent() {
        for sub in [
            Subcommand::CheckSymbol,
            Subcommand::Pair,
            Subcommand::RalphaNorm,
            Subcommand::VerifyIdentity,
            Subcommand::HaarCheck,
            Subcommand::CounterexampleLoss,
            Subcommand::CounterexampleCancel,
        ] {
            let (a, _) = materialize(&ExperimentConfig::default(), sub, None).unwrap();
            let text = serde_json::to_string(&a).unwrap();
            let (b, _) = materialize(&parse(&text).unwrap(), sub, None).unwrap();
            assert_eq!(a, b, "{}", sub.name());
        }
    }

    #[test]
    fn env_seed_wins() {
        let cfg = ExperimentConfig { seed: Some(5), ..Default::default() };
        let (m, s) = materialize(&cfg, Subcommand::HaarCheck, Some("9")).unwrap();
        assert_eq!((m.seed, s), (Some(9), Some(SeedSource::Env)));
        assert!(materialize(&cfg, Subcommand::HaarCheck, Some("x")).is_err());
    }

    #[test]
    fn rejects_foreign_fields_and_unknown_keys() {
        let cfg = ExperimentConfig { radius: Some(1.0), ..Default::default() };
        assert!(materialize(&cfg, Subcommand::Pair, None).is_err());
        assert!(parse(r#"{"symbl": {"kind": "cauchy"}}"#).is_err());
    }
}
