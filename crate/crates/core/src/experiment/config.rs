//! Experiment configuration documents: parsing, validation and defaults.
//!
//! A configuration is a JSON object whose keys are listed in
//! `docs/config.schema.json`. Parsing collects every validation error
//! before failing, and unknown keys are errors.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::analysis::{
    DEFAULT_BELIEF_RESOLUTION, DEFAULT_EQ_TOL, DEFAULT_KL_TOL, DEFAULT_STRATEGY_RESOLUTION,
};
use crate::dynamics::{random_belief, random_profile, replica_seed, AlphaSchedule, Estimator, UpdateRule};
use crate::error::{Error, Result};
use crate::games::{check_feasible, game_by_id, GameModel, GameOverrides, ObservationMap, StrategyProfile, GAME_IDS};
use crate::param_belief::{Belief, GapFn, ScheduleKind};

/// Top-level keys accepted in a configuration document.
pub const CONFIG_KEYS: [&str; 11] = [
    "game",
    "overrides",
    "rule",
    "schedule",
    "estimator",
    "init",
    "horizon",
    "seed",
    "seeds",
    "analysis",
    "output",
];

/// Output directory used when neither the document nor the caller names one.
pub const DEFAULT_OUTPUT: &str = "out";

/// Tolerance on the sum of an explicit initial belief.
const BELIEF_SUM_TOL: f64 = 1e-9;

/// How the initial belief is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BeliefInit {
    /// Equal weight on every parameter.
    Uniform,
    /// A uniformly random full-support belief.
    Random,
    /// The given probability vector.
    Explicit { probs: Vec<f64> },
}

/// How the initial strategy profile is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategyInit {
    /// The center of every strategy set (box midpoint or uniform mixture).
    Center,
    /// A uniformly random profile.
    Random,
    /// The given profile.
    Explicit { profile: StrategyProfile },
}

/// Initial state `(θ¹, q¹)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitSpec {
    pub theta: BeliefInit,
    pub q: StrategyInit,
    /// Seed of the random draws. When absent, every run draws its own
    /// initial state from its run seed.
    pub seed: Option<u64>,
}

impl Default for InitSpec {
    fn default() -> Self {
        Self {
            theta: BeliefInit::Uniform,
            q: StrategyInit::Center,
            seed: None,
        }
    }
}

impl InitSpec {
    /// The initial state of the run with seed `run_seed`.
    pub fn resolve(&self, game: &dyn GameModel, run_seed: u64) -> Result<(Belief, StrategyProfile)> {
        let base = self.seed.unwrap_or(run_seed);
        let theta = match &self.theta {
            BeliefInit::Uniform => Belief::uniform(game.space().len()),
            BeliefInit::Random => random_belief(game.space().len(), replica_seed(base, 1))?,
            BeliefInit::Explicit { probs } => Belief::from_probs(probs)?,
        };
        let q = match &self.q {
            StrategyInit::Center => StrategyProfile::new(game.strategy_sets().iter().map(|s| s.center()).collect()),
            StrategyInit::Random => random_profile(game, replica_seed(base, 2)),
            StrategyInit::Explicit { profile } => profile.clone(),
        };
        Ok((theta, q))
    }
}

/// The seeds of the runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeedSpec {
    /// One run.
    Single { seed: u64 },
    /// Runs with seeds `start, start + 1, …, start + count − 1`.
    Range { start: u64, count: u64 },
}

impl SeedSpec {
    /// The run seeds in order.
    pub fn seeds(&self) -> Vec<u64> {
        match *self {
            SeedSpec::Single { seed } => vec![seed],
            SeedSpec::Range { start, count } => (0..count).map(|k| start.wrapping_add(k)).collect(),
        }
    }

    /// The master seed: the single seed or the first seed of the range.
    /// Analysis randomness (probes, Monte Carlo starts) derives from it.
    pub fn master(&self) -> u64 {
        match *self {
            SeedSpec::Single { seed } => seed,
            SeedSpec::Range { start, .. } => start,
        }
    }

    /// The same spec with master seed `seed`.
    pub fn with_master(&self, seed: u64) -> Self {
        match *self {
            SeedSpec::Single { .. } => SeedSpec::Single { seed },
            SeedSpec::Range { count, .. } => SeedSpec::Range { start: seed, count },
        }
    }
}

/// Settings of the rate experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateSpec {
    /// Index of the parameter whose weight is tracked.
    pub param: usize,
    /// Stages skipped before fitting; a tenth of the horizon when absent.
    pub burn_in: Option<u64>,
}

impl RateSpec {
    /// The burn-in for a run of `horizon` stages.
    pub fn burn_in_for(&self, horizon: u64) -> u64 {
        self.burn_in.unwrap_or(horizon / 10)
    }
}

/// Settings of the stability experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilitySpec {
    /// Cluster id from the fixed-point enumeration.
    pub cluster: Option<String>,
    /// Belief radius `ε` of the sampled conditions.
    pub epsilon: f64,
    /// Strategy radius `δ` of the sampled conditions.
    pub delta: f64,
    /// Probes per sampled condition.
    pub n_probe: usize,
    /// Belief neighborhood `ε̂` of the thresholds.
    pub epsilon_hat: f64,
    /// Confidence level `γ`.
    pub gamma: f64,
    /// Monte Carlo initial belief radius.
    pub eps1: f64,
    /// Monte Carlo initial strategy radius.
    pub delta1: f64,
    /// Monte Carlo final belief radius.
    pub eps_bar: f64,
    /// Monte Carlo final strategy radius.
    pub eps_x: f64,
    /// Monte Carlo runs.
    pub n_runs: usize,
    /// Horizon of each Monte Carlo run.
    pub horizon: u64,
}

impl Default for StabilitySpec {
    fn default() -> Self {
        Self {
            cluster: None,
            epsilon: 0.1,
            delta: 0.5,
            n_probe: 200,
            epsilon_hat: 0.3,
            gamma: 0.9,
            eps1: 0.02,
            delta1: 0.02,
            eps_bar: 0.1,
            eps_x: 0.1,
            n_runs: 200,
            horizon: 2_000,
        }
    }
}

/// Settings of the fixed-point enumeration and the checks run with it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointSpec {
    pub belief_resolution: usize,
    pub strategy_resolution: usize,
    pub kl_tol: f64,
    pub eq_tol: f64,
    /// Random beliefs tested by the completeness check.
    pub completeness_samples: usize,
    /// Random starts of the global-stability check.
    pub global_starts: usize,
    /// Horizon of each global-stability run.
    pub global_horizon: u64,
    /// Radius of the local-equivalence probes of the complete-information
    /// equilibrium conditions.
    pub xi: f64,
    /// Probes of those conditions.
    pub n_probe: usize,
}

impl Default for FixedPointSpec {
    fn default() -> Self {
        Self {
            belief_resolution: DEFAULT_BELIEF_RESOLUTION,
            strategy_resolution: DEFAULT_STRATEGY_RESOLUTION,
            kl_tol: DEFAULT_KL_TOL,
            eq_tol: DEFAULT_EQ_TOL,
            completeness_samples: 200,
            global_starts: 20,
            global_horizon: 5_000,
            xi: 0.05,
            n_probe: 200,
        }
    }
}

/// Analysis requests.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AnalysisSpec {
    pub rate: Option<RateSpec>,
    pub stability: StabilitySpec,
    pub fixed_points: FixedPointSpec,
}

/// A validated experiment configuration with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub game: String,
    pub overrides: GameOverrides,
    pub rule: UpdateRule,
    pub schedule: ScheduleKind,
    pub estimator: Estimator,
    pub init: InitSpec,
    pub horizon: u64,
    pub seeds: SeedSpec,
    pub analysis: AnalysisSpec,
    /// Output directory named in the document.
    pub output: Option<String>,
}

impl ExperimentConfig {
    /// Builds the configured game.
    pub fn build_game(&self) -> Result<Box<dyn GameModel>> {
        game_by_id(&self.game, &self.overrides)
    }

    /// SHA-256 (hex) of the canonical serialization of the configuration,
    /// excluding the output directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = None;
        let text = serde_json::to_string(&canonical).expect("configuration serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// The master seed.
    pub fn master_seed(&self) -> u64 {
        self.seeds.master()
    }

    /// The configuration with its master seed replaced.
    pub fn with_seed_override(mut self, seed: u64) -> Self {
        self.seeds = self.seeds.with_master(seed);
        self
    }

    /// The rate request, which the rate experiment requires.
    pub fn rate_spec(&self) -> Result<RateSpec> {
        self.analysis
            .rate
            .ok_or_else(|| Error::Config(vec!["analysis.rate: the rate experiment needs a parameter index".into()]))
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Config(vec![format!("malformed document: {e}")]))?;
    parse_config_value(&value)
}

/// Validates an already parsed configuration tree.
pub fn parse_config_value(value: &Value) -> Result<ExperimentConfig> {
    let mut p = Parser::default();
    let cfg = p.document(value);
    match cfg {
        Some(cfg) if p.errors.is_empty() => Ok(cfg),
        _ => Err(Error::Config(p.errors)),
    }
}

/// Collects validation errors while walking the document.
#[derive(Default)]
struct Parser {
    errors: Vec<String>,
}

impl Parser {
    fn err(&mut self, path: &str, msg: impl std::fmt::Display) {
        self.errors.push(format!("{path}: {msg}"));
    }

    fn object<'a>(&mut self, path: &str, v: &'a Value, keys: &[&str]) -> Option<&'a Map<String, Value>> {
        let Some(obj) = v.as_object() else {
            self.err(path, "expected an object");
            return None;
        };
        for k in obj.keys() {
            if !keys.contains(&k.as_str()) {
                let at = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                self.err(&at, "unknown key");
            }
        }
        Some(obj)
    }

    fn u64(&mut self, path: &str, v: &Value) -> Option<u64> {
        let out = v.as_u64();
        if out.is_none() {
            self.err(path, "expected a non-negative integer");
        }
        out
    }

    fn usize(&mut self, path: &str, v: &Value) -> Option<usize> {
        self.u64(path, v).and_then(|x| usize::try_from(x).ok())
    }

    fn f64(&mut self, path: &str, v: &Value) -> Option<f64> {
        let out = v.as_f64().filter(|x| x.is_finite());
        if out.is_none() {
            self.err(path, "expected a finite number");
        }
        out
    }

    fn positive(&mut self, path: &str, v: &Value) -> Option<f64> {
        let x = self.f64(path, v)?;
        if x <= 0.0 {
            self.err(path, format!("{x} must be positive"));
            return None;
        }
        Some(x)
    }

    fn unit_open(&mut self, path: &str, v: &Value) -> Option<f64> {
        let x = self.f64(path, v)?;
        if !(x > 0.0 && x < 1.0) {
            self.err(path, format!("{x} must lie in (0, 1)"));
            return None;
        }
        Some(x)
    }

    fn string<'a>(&mut self, path: &str, v: &'a Value) -> Option<&'a str> {
        let out = v.as_str();
        if out.is_none() {
            self.err(path, "expected a string");
        }
        out
    }

    fn numbers(&mut self, path: &str, v: &Value) -> Option<Vec<f64>> {
        let Some(arr) = v.as_array() else {
            self.err(path, "expected an array of numbers");
            return None;
        };
        let mut out = Vec::with_capacity(arr.len());
        let mut ok = true;
        for (k, x) in arr.iter().enumerate() {
            match self.f64(&format!("{path}[{k}]"), x) {
                Some(x) => out.push(x),
                None => ok = false,
            }
        }
        ok.then_some(out)
    }

    fn document(&mut self, v: &Value) -> Option<ExperimentConfig> {
        let obj = self.object("", v, &CONFIG_KEYS)?;
        let game = match obj.get("game") {
            None => {
                self.err("game", "missing required key");
                None
            }
            Some(g) => self.string("game", g).and_then(|id| {
                if GAME_IDS.contains(&id) {
                    Some(id.to_string())
                } else {
                    self.err("game", format!("unknown game id {id:?}; known ids: {}", GAME_IDS.join(", ")));
                    None
                }
            }),
        };
        let overrides = obj.get("overrides").map_or(Some(GameOverrides::default()), |o| self.overrides(o));
        let rule = match obj.get("rule") {
            None => {
                self.err("rule", "missing required key");
                None
            }
            Some(r) => self.rule(r),
        };
        let schedule = obj.get("schedule").map_or(Some(ScheduleKind::EveryStage), |s| self.schedule(s));
        let estimator = obj.get("estimator").map_or(Some(Estimator::Bayes), |e| self.estimator(e));
        let init = obj.get("init").map_or(Some(InitSpec::default()), |i| self.init(i));
        let horizon = match obj.get("horizon") {
            None => {
                self.err("horizon", "missing required key");
                None
            }
            Some(h) => self.u64("horizon", h).and_then(|h| {
                if h == 0 {
                    self.err("horizon", "must be at least 1");
                    None
                } else {
                    Some(h)
                }
            }),
        };
        let seeds = self.seeds(obj.get("seed"), obj.get("seeds"));
        let analysis = obj.get("analysis").map_or(Some(AnalysisSpec::default()), |a| self.analysis(a));
        let output = match obj.get("output") {
            None => Some(None),
            Some(o) => self.string("output", o).map(|s| Some(s.to_string())),
        };
        let cfg = ExperimentConfig {
            game: game?,
            overrides: overrides?,
            rule: rule?,
            schedule: schedule?,
            estimator: estimator?,
            init: init?,
            horizon: horizon?,
            seeds: seeds?,
            analysis: analysis?,
            output: output?,
        };
        self.semantic(&cfg);
        Some(cfg)
    }

    fn overrides(&mut self, v: &Value) -> Option<GameOverrides> {
        let obj = self.object("overrides", v, &["sigma", "bounds", "n_players", "observation"])?;
        let mut out = GameOverrides::default();
        let mut ok = true;
        if let Some(s) = obj.get("sigma") {
            out.sigma = self.numbers("overrides.sigma", s);
            ok &= out.sigma.is_some();
        }
        if let Some(b) = obj.get("bounds") {
            match b.as_array() {
                Some(arr) => {
                    let mut bounds = Vec::new();
                    for (k, pair) in arr.iter().enumerate() {
                        let path = format!("overrides.bounds[{k}]");
                        match self.numbers(&path, pair) {
                            Some(p) if p.len() == 2 && p[0] <= p[1] => bounds.push([p[0], p[1]]),
                            Some(_) => {
                                self.err(&path, "expected [lo, hi] with lo ≤ hi");
                                ok = false;
                            }
                            None => ok = false,
                        }
                    }
                    out.bounds = Some(bounds);
                }
                None => {
                    self.err("overrides.bounds", "expected an array of [lo, hi] pairs");
                    ok = false;
                }
            }
        }
        if let Some(n) = obj.get("n_players") {
            out.n_players = self.usize("overrides.n_players", n);
            ok &= out.n_players.is_some();
        }
        if let Some(o) = obj.get("observation") {
            out.observation = match self.string("overrides.observation", o) {
                Some("sufficient_statistic") => Some(ObservationMap::SufficientStatistic),
                Some("payoffs") => Some(ObservationMap::Payoffs),
                Some(other) => {
                    self.err(
                        "overrides.observation",
                        format!("unknown observation map {other:?}; expected \"sufficient_statistic\" or \"payoffs\""),
                    );
                    None
                }
                None => None,
            };
            ok &= out.observation.is_some();
        }
        ok.then_some(out)
    }

    fn rule(&mut self, v: &Value) -> Option<UpdateRule> {
        let (kind, alpha) = match v {
            Value::String(s) => (s.as_str(), None),
            Value::Object(_) => {
                let obj = self.object("rule", v, &["kind", "alpha"])?;
                let kind = match obj.get("kind") {
                    Some(k) => self.string("rule.kind", k)?,
                    None => {
                        self.err("rule.kind", "missing required key");
                        return None;
                    }
                };
                (kind, obj.get("alpha"))
            }
            _ => {
                self.err("rule", "expected a rule name or an object with \"kind\"");
                return None;
            }
        };
        if alpha.is_some() && kind != "linear" {
            self.err("rule.alpha", "only the linear rule takes a step size");
            return None;
        }
        match kind {
            "simultaneous" => Some(UpdateRule::Simultaneous),
            "sequential" => Some(UpdateRule::Sequential),
            "fictitious_play" => Some(UpdateRule::FictitiousPlay),
            "linear" => {
                let alpha = match alpha {
                    None => AlphaSchedule::Harmonic,
                    Some(Value::String(s)) if s == "harmonic" => AlphaSchedule::Harmonic,
                    Some(a) if a.is_number() => {
                        let value = self.f64("rule.alpha", a)?;
                        if !(0.0..=1.0).contains(&value) {
                            self.err("rule.alpha", format!("step size {value} is not in [0, 1]"));
                            return None;
                        }
                        AlphaSchedule::Constant { value }
                    }
                    Some(_) => {
                        self.err("rule.alpha", "expected \"harmonic\" or a constant in [0, 1]");
                        return None;
                    }
                };
                Some(UpdateRule::Linear { alpha })
            }
            other => {
                self.err(
                    "rule",
                    format!("unknown rule {other:?}; expected simultaneous, sequential, linear or fictitious_play"),
                );
                None
            }
        }
    }

    fn schedule(&mut self, v: &Value) -> Option<ScheduleKind> {
        let (kind, obj) = match v {
            Value::String(s) => (s.as_str(), None),
            Value::Object(_) => {
                let obj = self.object("schedule", v, &["kind", "batch", "p", "slope", "intercept"])?;
                let kind = match obj.get("kind") {
                    Some(k) => self.string("schedule.kind", k)?,
                    None => {
                        self.err("schedule.kind", "missing required key");
                        return None;
                    }
                };
                (kind, Some(obj))
            }
            _ => {
                self.err("schedule", "expected a schedule name or an object with \"kind\"");
                return None;
            }
        };
        let allowed: &[&str] = match kind {
            "every_stage" => &[],
            "fixed_batch" => &["batch"],
            "geometric" => &["p"],
            "two_timescale" => &["slope", "intercept"],
            other => {
                self.err(
                    "schedule",
                    format!("unknown schedule {other:?}; expected every_stage, fixed_batch, geometric or two_timescale"),
                );
                return None;
            }
        };
        if let Some(obj) = obj {
            for k in obj.keys().filter(|k| *k != "kind") {
                if !allowed.contains(&k.as_str()) {
                    self.err(&format!("schedule.{k}"), format!("not a parameter of the {kind} schedule"));
                }
            }
        }
        let get = |key: &str| obj.and_then(|o| o.get(key));
        match kind {
            "every_stage" => Some(ScheduleKind::EveryStage),
            "fixed_batch" => {
                let batch = match get("batch") {
                    Some(b) => self.u64("schedule.batch", b)?,
                    None => {
                        self.err("schedule.batch", "missing required key");
                        return None;
                    }
                };
                if batch == 0 {
                    self.err("schedule.batch", "must be at least 1");
                    return None;
                }
                Some(ScheduleKind::FixedBatch { batch })
            }
            "geometric" => {
                let p = match get("p") {
                    Some(p) => self.f64("schedule.p", p)?,
                    None => {
                        self.err("schedule.p", "missing required key");
                        return None;
                    }
                };
                if !(p > 0.0 && p <= 1.0) {
                    self.err("schedule.p", format!("{p} is not in (0, 1]"));
                    return None;
                }
                Some(ScheduleKind::Geometric { p })
            }
            _ => {
                let slope = match get("slope") {
                    Some(s) => self.u64("schedule.slope", s)?,
                    None => 1,
                };
                let intercept = match get("intercept") {
                    Some(i) => self.u64("schedule.intercept", i)?,
                    None => 0,
                };
                match GapFn::affine(slope, intercept) {
                    Ok(gap) => Some(ScheduleKind::TwoTimescale { gap }),
                    Err(e) => {
                        self.err("schedule", e);
                        None
                    }
                }
            }
        }
    }

    fn estimator(&mut self, v: &Value) -> Option<Estimator> {
        match self.string("estimator", v)? {
            "bayes" => Some(Estimator::Bayes),
            "map" => Some(Estimator::Map),
            "ols" => Some(Estimator::Ols),
            other => {
                self.err("estimator", format!("unknown estimator {other:?}; expected bayes, map or ols"));
                None
            }
        }
    }

    fn init(&mut self, v: &Value) -> Option<InitSpec> {
        if let Value::String(s) = v {
            return match s.as_str() {
                "random" => Some(InitSpec {
                    theta: BeliefInit::Random,
                    q: StrategyInit::Random,
                    seed: None,
                }),
                "default" => Some(InitSpec::default()),
                other => {
                    self.err("init", format!("unknown init {other:?}; expected \"random\", \"default\" or an object"));
                    None
                }
            };
        }
        let obj = self.object("init", v, &["theta", "q", "seed"])?;
        let theta = match obj.get("theta") {
            None => Some(BeliefInit::Uniform),
            Some(Value::String(s)) if s == "uniform" => Some(BeliefInit::Uniform),
            Some(Value::String(s)) if s == "random" => Some(BeliefInit::Random),
            Some(t @ Value::Array(_)) => self.numbers("init.theta", t).and_then(|probs| {
                let mut ok = true;
                if probs.iter().any(|p| *p <= 0.0) {
                    self.err(
                        "init.theta",
                        format!("initial belief must have full support (every entry > 0); got {probs:?}"),
                    );
                    ok = false;
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > BELIEF_SUM_TOL {
                    self.err("init.theta", format!("initial belief sums to {total}, expected 1"));
                    ok = false;
                }
                ok.then_some(BeliefInit::Explicit { probs })
            }),
            Some(_) => {
                self.err("init.theta", "expected \"uniform\", \"random\" or a probability vector");
                None
            }
        };
        let q = match obj.get("q") {
            None => Some(StrategyInit::Center),
            Some(Value::String(s)) if s == "center" => Some(StrategyInit::Center),
            Some(Value::String(s)) if s == "random" => Some(StrategyInit::Random),
            Some(Value::Array(arr)) if arr.iter().all(Value::is_number) => self
                .numbers("init.q", &Value::Array(arr.clone()))
                .map(|xs| StrategyInit::Explicit {
                    profile: StrategyProfile::scalars(&xs),
                }),
            Some(Value::Array(arr)) => {
                let mut per_player = Vec::new();
                let mut ok = true;
                for (i, block) in arr.iter().enumerate() {
                    match self.numbers(&format!("init.q[{i}]"), block) {
                        Some(b) => per_player.push(b),
                        None => ok = false,
                    }
                }
                ok.then(|| StrategyInit::Explicit {
                    profile: StrategyProfile::new(per_player),
                })
            }
            Some(_) => {
                self.err("init.q", "expected \"center\", \"random\", one number per player, or one array per player");
                None
            }
        };
        let seed = match obj.get("seed") {
            None => Some(None),
            Some(s) => self.u64("init.seed", s).map(Some),
        };
        Some(InitSpec {
            theta: theta?,
            q: q?,
            seed: seed?,
        })
    }

    fn seeds(&mut self, seed: Option<&Value>, seeds: Option<&Value>) -> Option<SeedSpec> {
        match (seed, seeds) {
            (Some(_), Some(_)) => {
                self.err("seeds", "give either \"seed\" or \"seeds\", not both");
                None
            }
            (None, None) => {
                self.err("seed", "missing required key (or a \"seeds\" range)");
                None
            }
            (Some(s), None) => self.u64("seed", s).map(|seed| SeedSpec::Single { seed }),
            (None, Some(r)) => {
                let obj = self.object("seeds", r, &["start", "count"])?;
                let start = match obj.get("start") {
                    Some(s) => self.u64("seeds.start", s),
                    None => {
                        self.err("seeds.start", "missing required key");
                        None
                    }
                };
                let count = match obj.get("count") {
                    Some(c) => self.u64("seeds.count", c).and_then(|c| {
                        if c == 0 {
                            self.err("seeds.count", "must be at least 1");
                            None
                        } else {
                            Some(c)
                        }
                    }),
                    None => {
                        self.err("seeds.count", "missing required key");
                        None
                    }
                };
                Some(SeedSpec::Range {
                    start: start?,
                    count: count?,
                })
            }
        }
    }

    fn analysis(&mut self, v: &Value) -> Option<AnalysisSpec> {
        let obj = self.object("analysis", v, &["rate", "stability", "fixed_points"])?;
        let rate = match obj.get("rate") {
            None => Some(None),
            Some(r) => self.rate(r).map(Some),
        };
        let stability = obj.get("stability").map_or(Some(StabilitySpec::default()), |s| self.stability(s));
        let fixed_points = obj
            .get("fixed_points")
            .map_or(Some(FixedPointSpec::default()), |f| self.fixed_points(f));
        Some(AnalysisSpec {
            rate: rate?,
            stability: stability?,
            fixed_points: fixed_points?,
        })
    }

    fn rate(&mut self, v: &Value) -> Option<RateSpec> {
        let obj = self.object("analysis.rate", v, &["param", "burn_in"])?;
        let param = match obj.get("param") {
            Some(p) => self.usize("analysis.rate.param", p),
            None => {
                self.err("analysis.rate.param", "missing required key");
                None
            }
        };
        let burn_in = match obj.get("burn_in") {
            Some(b) => self.u64("analysis.rate.burn_in", b).map(Some),
            None => Some(None),
        };
        Some(RateSpec {
            param: param?,
            burn_in: burn_in?,
        })
    }

    fn stability(&mut self, v: &Value) -> Option<StabilitySpec> {
        const KEYS: [&str; 12] = [
            "cluster",
            "epsilon",
            "delta",
            "n_probe",
            "epsilon_hat",
            "gamma",
            "eps1",
            "delta1",
            "eps_bar",
            "eps_x",
            "n_runs",
            "horizon",
        ];
        let obj = self.object("analysis.stability", v, &KEYS)?;
        let mut out = StabilitySpec::default();
        let before = self.errors.len();
        if let Some(c) = obj.get("cluster") {
            out.cluster = self.string("analysis.stability.cluster", c).map(str::to_string);
        }
        let positive = |p: &mut Self, key: &str, slot: &mut f64| {
            if let Some(x) = obj.get(key) {
                if let Some(x) = p.positive(&format!("analysis.stability.{key}"), x) {
                    *slot = x;
                }
            }
        };
        positive(self, "epsilon", &mut out.epsilon);
        positive(self, "delta", &mut out.delta);
        positive(self, "eps_bar", &mut out.eps_bar);
        positive(self, "eps_x", &mut out.eps_x);
        for (key, slot) in [("eps1", &mut out.eps1), ("delta1", &mut out.delta1)] {
            if let Some(x) = obj.get(key) {
                let path = format!("analysis.stability.{key}");
                if let Some(x) = self.f64(&path, x) {
                    if x < 0.0 {
                        self.err(&path, format!("{x} must be non-negative"));
                    } else {
                        *slot = x;
                    }
                }
            }
        }
        for (key, slot) in [("epsilon_hat", &mut out.epsilon_hat), ("gamma", &mut out.gamma)] {
            if let Some(x) = obj.get(key) {
                if let Some(x) = self.unit_open(&format!("analysis.stability.{key}"), x) {
                    *slot = x;
                }
            }
        }
        for (key, slot) in [("n_probe", &mut out.n_probe), ("n_runs", &mut out.n_runs)] {
            if let Some(x) = obj.get(key) {
                if let Some(x) = self.usize(&format!("analysis.stability.{key}"), x) {
                    *slot = x;
                }
            }
        }
        if let Some(h) = obj.get("horizon") {
            match self.u64("analysis.stability.horizon", h) {
                Some(0) => self.err("analysis.stability.horizon", "must be at least 1"),
                Some(h) => out.horizon = h,
                None => {}
            }
        }
        (self.errors.len() == before).then_some(out)
    }

    fn fixed_points(&mut self, v: &Value) -> Option<FixedPointSpec> {
        const KEYS: [&str; 9] = [
            "belief_resolution",
            "strategy_resolution",
            "kl_tol",
            "eq_tol",
            "completeness_samples",
            "global_starts",
            "global_horizon",
            "xi",
            "n_probe",
        ];
        let obj = self.object("analysis.fixed_points", v, &KEYS)?;
        let mut out = FixedPointSpec::default();
        let before = self.errors.len();
        for (key, slot) in [
            ("belief_resolution", &mut out.belief_resolution),
            ("strategy_resolution", &mut out.strategy_resolution),
        ] {
            if let Some(x) = obj.get(key) {
                let path = format!("analysis.fixed_points.{key}");
                match self.usize(&path, x) {
                    Some(r) if r < 2 => self.err(&path, "grids need at least 2 points per axis"),
                    Some(r) => *slot = r,
                    None => {}
                }
            }
        }
        for (key, slot) in [
            ("completeness_samples", &mut out.completeness_samples),
            ("global_starts", &mut out.global_starts),
            ("n_probe", &mut out.n_probe),
        ] {
            if let Some(x) = obj.get(key) {
                if let Some(x) = self.usize(&format!("analysis.fixed_points.{key}"), x) {
                    *slot = x;
                }
            }
        }
        for (key, slot) in [("kl_tol", &mut out.kl_tol), ("eq_tol", &mut out.eq_tol), ("xi", &mut out.xi)] {
            if let Some(x) = obj.get(key) {
                if let Some(x) = self.positive(&format!("analysis.fixed_points.{key}"), x) {
                    *slot = x;
                }
            }
        }
        if let Some(h) = obj.get("global_horizon") {
            match self.u64("analysis.fixed_points.global_horizon", h) {
                Some(0) => self.err("analysis.fixed_points.global_horizon", "must be at least 1"),
                Some(h) => out.global_horizon = h,
                None => {}
            }
        }
        (self.errors.len() == before).then_some(out)
    }

    /// Checks that need the game itself; resolves defaults that depend on it.
    fn semantic(&mut self, cfg: &ExperimentConfig) {
        if cfg.estimator == Estimator::Ols && cfg.game != "affine_game" {
            self.err(
                "estimator",
                format!(
                    "the ols estimator needs payoffs affine in the parameter (game \"affine_game\"); {:?} is not",
                    cfg.game
                ),
            );
        }
        let game = match cfg.build_game() {
            Ok(g) => g,
            Err(e) => {
                self.err("overrides", e);
                return;
            }
        };
        if let Err(e) = cfg.rule.validate(game.is_finite()) {
            self.err("rule", e);
        }
        let n = game.space().len();
        if let BeliefInit::Explicit { probs } = &cfg.init.theta {
            if probs.len() != n {
                self.err(
                    "init.theta",
                    format!("has {} entries, game {:?} has {n} parameters", probs.len(), cfg.game),
                );
            }
        }
        if let StrategyInit::Explicit { profile } = &cfg.init.q {
            if let Err(e) = check_feasible(game.as_ref(), profile) {
                self.err("init.q", e);
            }
        }
        if let Some(rate) = cfg.analysis.rate {
            if rate.param >= n {
                self.err(
                    "analysis.rate.param",
                    format!("parameter index {} is out of range for {n} parameters", rate.param),
                );
            }
            let burn_in = rate.burn_in_for(cfg.horizon);
            if burn_in.saturating_add(2) > cfg.horizon {
                self.err(
                    "analysis.rate.burn_in",
                    format!("burn-in {burn_in} leaves fewer than two stages of the horizon {}", cfg.horizon),
                );
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn errors(text: &str) -> Vec<String> {
        match parse_config(text) {
            Err(Error::Config(e)) => e,
            other => panic!("expected a configuration error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_document_gets_defaults() {
        let cfg = parse_config(r#"{"game": "investment", "rule": "sequential", "horizon": 10000, "seed": 1}"#).unwrap();
        assert_eq!(cfg.schedule, ScheduleKind::EveryStage);
        assert_eq!(cfg.estimator, Estimator::Bayes);
        assert_eq!(cfg.init, InitSpec::default());
        let game = cfg.build_game().unwrap();
        let (theta, q) = cfg.init.resolve(game.as_ref(), 1).unwrap();
        assert_eq!(theta.probs(), Belief::uniform(3).probs());
        assert_eq!(q, StrategyProfile::scalars(&[0.5, 0.5]));
    }

    #[test]
    fn zero_prior_entry_is_rejected() {
        let e = errors(r#"{"game": "investment", "rule": "sequential", "horizon": 10, "seed": 1, "init": {"theta": [1, 0, 0]}}"#);
        assert!(e.iter().any(|m| m.contains("initial belief must have full support")), "{e:?}");
    }

    #[test]
    fn ols_needs_the_affine_game() {
        let e = errors(r#"{"game": "cournot", "rule": "simultaneous", "estimator": "ols", "horizon": 10, "seed": 1}"#);
        assert!(e.iter().any(|m| m.starts_with("estimator:")), "{e:?}");
        assert!(parse_config(r#"{"game": "affine_game", "rule": "simultaneous", "estimator": "ols", "horizon": 10, "seed": 1}"#).is_ok());
    }

    #[test]
    fn every_error_is_reported() {
        let e = errors(r#"{"game": "nope", "rule": "sideways", "horizon": 0, "seed": -1, "colour": 1, "analysis": {"stability": {"gamma": 2, "foo": 1}}}"#);
        for needle in ["colour: unknown key", "game:", "rule:", "horizon:", "seed:", "analysis.stability.gamma", "analysis.stability.foo"] {
            assert!(e.iter().any(|m| m.contains(needle)), "missing {needle:?} in {e:?}");
        }
    }

    #[test]
    fn hash_ignores_output_but_not_seeds() {
        let a = parse_config(r#"{"game": "cournot", "rule": "simultaneous", "horizon": 10, "seed": 1, "output": "x"}"#).unwrap();
        let b = parse_config(r#"{"horizon": 10, "seed": 1, "rule": "simultaneous", "game": "cournot"}"#).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), b.clone().with_seed_override(2).hash());
    }

    #[test]
    fn structured_rules_and_schedules() {
        let cfg = parse_config(
            r#"{"game": "investment", "rule": {"kind": "linear", "alpha": 0.25},
                "schedule": {"kind": "two_timescale", "slope": 10, "intercept": 0},
                "horizon": 100, "seeds": {"start": 5, "count": 3}}"#,
        )
        .unwrap();
        assert_eq!(cfg.rule, UpdateRule::Linear { alpha: AlphaSchedule::Constant { value: 0.25 } });
        assert_eq!(cfg.schedule, ScheduleKind::TwoTimescale { gap: GapFn::affine(10, 0).unwrap() });
        assert_eq!(cfg.seeds.seeds(), vec![5, 6, 7]);
        assert_eq!(cfg.with_seed_override(9).seeds.seeds(), vec![9, 10, 11]);
    }
}
