//! The four experiments and the artifacts they write.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::analysis::{
    certify_fixed_point, check_all_fixed_points_complete, check_complete_info_equilibrium_conditions,
    check_global_stability_with, enumerate_fixed_points, estimate_convergence_rate, kl_divergence,
    kl_divergence_mixed, pooled_convergence_rate, stability_report, CompleteInfoConditions, CompletenessCheck,
    FixedPointCertificate, FixedPointCluster, FixedPointEnumeration, FixedPointTolerances, GlobalStabilityParams,
    GlobalStabilityReport, LocalStabilityParams, StabilityReport, StabilityReportParams,
};
use crate::dynamics::{replica_seed, run_with, Estimator, EquilibriumDistance, RunOptions, UpdateRule};
use crate::error::{Error, Result};
use crate::games::{equilibrium_set, GameModel, StrategyProfile};
use crate::param_belief::{Belief, ScheduleKind};

/// Schema tag of `summary.json`.
pub const SCHEMA_SUMMARY: &str = "beliefplay/summary-v1";
/// Schema tag of `fixed_points.json`.
pub const SCHEMA_FIXED_POINTS: &str = "beliefplay/fixed-points-v1";
/// Schema tag of `rate.json`.
pub const SCHEMA_RATE: &str = "beliefplay/rate-v1";
/// Schema tag of the output-directory manifest.
pub const SCHEMA_MANIFEST: &str = "beliefplay/manifest-v1";
/// Schema tag written in the header of `trajectory.csv`.
const SCHEMA_TRAJECTORY: &str = "beliefplay/trajectory-v1";
/// Name of the manifest in an output directory.
pub const MANIFEST_FILE: &str = "manifest.json";
/// Per-stage divergence below which a parameter counts as payoff-equivalent
/// at the limit strategy: its weight would shrink by less than a factor `e`
/// over `10⁴` stages.
pub const EQUIVALENT_AT_LIMIT_KL: f64 = 1e-4;

/// Streams of the master seed used by the analysis steps.
const STREAM_COMPLETENESS: u64 = 101;
const STREAM_GLOBAL: u64 = 102;
const STREAM_CONDITIONS: u64 = 103;
const STREAM_STABILITY: u64 = 104;

/// Provenance carried by every artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    /// [`ExperimentConfig::hash`] of the configuration that produced the artifact.
    pub config_hash: String,
    /// Master seed of the experiment.
    pub master_seed: u64,
}

impl ArtifactMeta {
    fn of(cfg: &ExperimentConfig) -> Self {
        Self {
            config_hash: cfg.hash(),
            master_seed: cfg.master_seed(),
        }
    }
}

/// Contents of `summary.json` for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema: String,
    #[serde(flatten)]
    pub meta: ArtifactMeta,
    pub game: String,
    pub rule: UpdateRule,
    pub schedule: ScheduleKind,
    pub estimator: Estimator,
    pub seed: u64,
    pub horizon: u64,
    pub converged: bool,
    pub t_stop: Option<u64>,
    /// `"period p"` when the strategies repeat exactly with period `p`.
    pub cycle_detected: Option<String>,
    pub cycle_period: Option<usize>,
    pub final_belief: Vec<f64>,
    pub final_strategy: StrategyProfile,
    pub updates: u64,
    /// Cluster id of the nearest enumerated fixed point.
    pub nearest_fixed_point: Option<String>,
    /// `max(‖θ − θ̄‖_∞, dist(q, EQ(θ̄)))` to that cluster's nearest member belief `θ̄`.
    pub fixed_point_distance: Option<f64>,
    /// Distances of `q^{k_t}` to `EQ(θ^{k_t})` at update stages (two-timescale schedules).
    pub equilibrium_distances: Vec<EquilibriumDistance>,
}

/// The artifacts of one run: `trajectory.csv` and `summary.json`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub seed: u64,
    pub trajectory_csv: String,
    pub summary: RunSummary,
}

/// The cluster of `enumeration` nearest to `(belief, q)` and its distance.
pub fn nearest_fixed_point(
    game: &dyn GameModel,
    enumeration: &FixedPointEnumeration,
    belief: &[f64],
    q: &StrategyProfile,
) -> Result<Option<(String, f64)>> {
    let mut best: Option<(String, f64)> = None;
    for cluster in &enumeration.clusters {
        let nearest = cluster
            .members
            .iter()
            .map(|&k| &enumeration.certificates[k])
            .map(|c| (sup_dist(&c.belief, belief), c))
            .min_by(|a, b| a.0.total_cmp(&b.0));
        let Some((belief_dist, member)) = nearest else {
            continue;
        };
        let eq = equilibrium_set(game, &Belief::from_probs(&member.belief)?)?;
        let d = belief_dist.max(eq.distance(q));
        if best.as_ref().map_or(true, |(_, b)| d < *b) {
            best = Some((cluster.id.clone(), d));
        }
    }
    Ok(best)
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn enumerate(game: &dyn GameModel, cfg: &ExperimentConfig) -> Result<FixedPointEnumeration> {
    let fp = &cfg.analysis.fixed_points;
    enumerate_fixed_points(
        game,
        fp.belief_resolution,
        fp.strategy_resolution,
        FixedPointTolerances {
            kl: fp.kl_tol,
            eq: fp.eq_tol,
        },
    )
}

/// Runs every configured seed and builds its artifacts.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunArtifacts>> {
    let game = cfg.build_game()?;
    let game = game.as_ref();
    let enumeration = enumerate(game, cfg)?;
    let meta = ArtifactMeta::of(cfg);
    let options = RunOptions {
        estimator: cfg.estimator,
        track_equilibrium_distance: matches!(cfg.schedule, ScheduleKind::TwoTimescale { .. }),
        ..RunOptions::default()
    };
    cfg.seeds
        .seeds()
        .par_iter()
        .map(|&seed| {
            let init = cfg.init.resolve(game, seed)?;
            let traj = run_with(game, &cfg.rule, cfg.schedule, init, cfg.horizon, seed, &options)?;
            let s = traj.summary.clone();
            let nearest = nearest_fixed_point(game, &enumeration, &s.final_belief, &s.final_strategy)?;
            let comments = vec![
                format!("schema={SCHEMA_TRAJECTORY}"),
                format!("config_hash={}", meta.config_hash),
                format!("master_seed={}", meta.master_seed),
                format!("seed={seed}"),
                format!("game={}", cfg.game),
            ];
            Ok(RunArtifacts {
                seed,
                trajectory_csv: traj.to_csv(&comments),
                summary: RunSummary {
                    schema: SCHEMA_SUMMARY.to_string(),
                    meta: meta.clone(),
                    game: cfg.game.clone(),
                    rule: cfg.rule,
                    schedule: cfg.schedule,
                    estimator: cfg.estimator,
                    seed,
                    horizon: s.horizon,
                    converged: s.converged,
                    t_stop: s.t_stop,
                    cycle_detected: s.cycle_period.map(|p| format!("period {p}")),
                    cycle_period: s.cycle_period,
                    final_belief: s.final_belief,
                    final_strategy: s.final_strategy,
                    updates: s.updates,
                    nearest_fixed_point: nearest.as_ref().map(|(id, _)| id.clone()),
                    fixed_point_distance: nearest.map(|(_, d)| d),
                    equilibrium_distances: s.equilibrium_distances,
                },
            })
        })
        .collect()
}

/// One cluster of `fixed_points.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    #[serde(flatten)]
    pub cluster: FixedPointCluster,
    /// Every member strategy is an equilibrium under complete information
    /// (best-response residual against `θ*` within the certification tolerance).
    pub complete_info_equilibrium: bool,
    /// Sufficient conditions for that property probed at the representative.
    pub conditions: CompleteInfoConditions,
}

/// Contents of `fixed_points.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointsReport {
    pub schema: String,
    #[serde(flatten)]
    pub meta: ArtifactMeta,
    pub game: String,
    pub tolerances: FixedPointTolerances,
    pub belief_resolution: usize,
    pub strategy_resolution: usize,
    pub beliefs_scanned: usize,
    pub certificates: Vec<FixedPointCertificate>,
    pub clusters: Vec<ClusterReport>,
    pub completeness: CompletenessCheck,
    pub global_stability: GlobalStabilityReport,
}

/// Enumerates the fixed points and runs the completeness and global-stability checks.
pub fn fixed_points_experiment(cfg: &ExperimentConfig) -> Result<FixedPointsReport> {
    let game = cfg.build_game()?;
    let game = game.as_ref();
    let fp = cfg.analysis.fixed_points;
    let tolerances = FixedPointTolerances {
        kl: fp.kl_tol,
        eq: fp.eq_tol,
    };
    let enumeration = enumerate(game, cfg)?;
    let master = cfg.master_seed();
    let star = Belief::point_mass(game.space().len(), game.space().true_index())?;
    let mut clusters = Vec::with_capacity(enumeration.clusters.len());
    for cluster in &enumeration.clusters {
        let mut complete_info_equilibrium = true;
        for &k in &cluster.members {
            let q = &enumeration.certificates[k].strategy;
            let cert = certify_fixed_point(game, &star, q, fp.kl_tol, fp.eq_tol)?;
            complete_info_equilibrium &= cert.eq_residual <= fp.eq_tol;
        }
        let conditions = check_complete_info_equilibrium_conditions(
            game,
            &cluster.representative,
            fp.xi,
            fp.n_probe,
            replica_seed(master, STREAM_CONDITIONS),
        )?;
        clusters.push(ClusterReport {
            cluster: cluster.clone(),
            complete_info_equilibrium,
            conditions,
        });
    }
    let completeness =
        check_all_fixed_points_complete(game, fp.completeness_samples, replica_seed(master, STREAM_COMPLETENESS))?;
    let global_stability = check_global_stability_with(
        game,
        &enumeration,
        &GlobalStabilityParams {
            n_starts: fp.global_starts,
            horizon: fp.global_horizon,
            seed: replica_seed(master, STREAM_GLOBAL),
            rule: cfg.rule,
            schedule: cfg.schedule,
            estimator: cfg.estimator,
        },
    )?;
    Ok(FixedPointsReport {
        schema: SCHEMA_FIXED_POINTS.to_string(),
        meta: ArtifactMeta::of(cfg),
        game: cfg.game.clone(),
        tolerances,
        belief_resolution: fp.belief_resolution,
        strategy_resolution: fp.strategy_resolution,
        beliefs_scanned: enumeration.beliefs_scanned,
        certificates: enumeration.certificates,
        clusters,
        completeness,
        global_stability,
    })
}

/// Contents of `stability_report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityArtifact {
    #[serde(flatten)]
    pub meta: ArtifactMeta,
    #[serde(flatten)]
    pub report: StabilityReport,
}

/// Runs the local-stability suite at the configured cluster.
pub fn stability_experiment(cfg: &ExperimentConfig) -> Result<StabilityArtifact> {
    let spec = &cfg.analysis.stability;
    let Some(id) = spec.cluster.clone() else {
        return Err(Error::Config(vec![
            "analysis.stability.cluster: the stability experiment needs a cluster id".into(),
        ]));
    };
    let game = cfg.build_game()?;
    let game = game.as_ref();
    let enumeration = enumerate(game, cfg)?;
    let Some(cluster) = enumeration.cluster(&id) else {
        let known: Vec<&str> = enumeration.clusters.iter().map(|c| c.id.as_str()).collect();
        return Err(Error::Precondition(format!(
            "unknown fixed-point cluster {id:?}; the enumeration found {known:?}"
        )));
    };
    let mut local = LocalStabilityParams::new(
        spec.eps1,
        spec.delta1,
        spec.eps_bar,
        spec.eps_x,
        spec.n_runs,
        spec.horizon,
        replica_seed(cfg.master_seed(), STREAM_STABILITY),
    );
    local.rule = cfg.rule;
    local.schedule = cfg.schedule;
    local.estimator = cfg.estimator;
    let params = StabilityReportParams {
        epsilon: spec.epsilon,
        delta: spec.delta,
        n_probe: spec.n_probe,
        epsilon_hat: spec.epsilon_hat,
        gamma: spec.gamma,
        local,
    };
    let report = stability_report(game, &cluster.representative, Some(id), &params)?;
    Ok(StabilityArtifact {
        meta: ArtifactMeta::of(cfg),
        report,
    })
}

/// The rate fit of one seed in `rate.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRate {
    pub seed: u64,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
    pub truncated: bool,
    /// Final strategy of the run, taken as its limit strategy.
    pub limit_strategy: StrategyProfile,
    /// `D_KL(φ^{s*} ‖ φ^s)` at the limit strategy.
    pub kl_at_limit: f64,
}

/// Contents of `rate.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub schema: String,
    #[serde(flatten)]
    pub meta: ArtifactMeta,
    pub game: String,
    pub param: usize,
    pub burn_in: u64,
    pub seeds: Vec<SeedRate>,
    /// Fixed-effects slope over all seeds.
    pub pooled_slope: f64,
    pub pooled_std_error: f64,
    /// `−D_KL` averaged over the limit strategies of the seeds.
    pub predicted: f64,
    /// `|pooled − predicted| / |predicted|`; absent when the parameter is
    /// equivalent to the truth at the limit.
    pub relative_error: Option<f64>,
    pub note: Option<String>,
}

/// Runs every configured seed and fits the decay rate of the requested parameter.
pub fn rate_experiment(cfg: &ExperimentConfig) -> Result<RateReport> {
    let rate = cfg.rate_spec()?;
    let burn_in = rate.burn_in_for(cfg.horizon);
    let game = cfg.build_game()?;
    let game = game.as_ref();
    let truth = game.space().true_index();
    let options = RunOptions {
        estimator: cfg.estimator,
        ..RunOptions::default()
    };
    let seeds = cfg.seeds.seeds();
    let trajectories = seeds
        .par_iter()
        .map(|&seed| {
            let init = cfg.init.resolve(game, seed)?;
            run_with(game, &cfg.rule, cfg.schedule, init, cfg.horizon, seed, &options)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut per_seed = Vec::with_capacity(seeds.len());
    for (traj, &seed) in trajectories.iter().zip(&seeds) {
        let fit = estimate_convergence_rate(traj, rate.param, burn_in)?;
        let q = traj.summary.final_strategy.clone();
        let kl_at_limit = if game.is_finite() {
            kl_divergence_mixed(game, truth, rate.param, &q)
        } else {
            kl_divergence(game, truth, rate.param, &q)
        };
        per_seed.push(SeedRate {
            seed,
            slope: fit.slope,
            intercept: fit.intercept,
            r_squared: fit.r_squared,
            points: fit.points,
            truncated: fit.truncated,
            limit_strategy: q,
            kl_at_limit,
        });
    }
    let pooled = pooled_convergence_rate(&trajectories, rate.param, burn_in)?;
    let mean_kl = per_seed.iter().map(|r| r.kl_at_limit).sum::<f64>() / per_seed.len() as f64;
    let predicted = if mean_kl == 0.0 { 0.0 } else { -mean_kl };
    let (relative_error, note) = if rate.param == truth {
        (None, Some("the tracked parameter is the true one; its weight does not decay".to_string()))
    } else if mean_kl <= EQUIVALENT_AT_LIMIT_KL {
        (
            None,
            Some(format!(
                "equivalent-at-limit: mean divergence {mean_kl:.3e} at the limit strategies is below \
                 {EQUIVALENT_AT_LIMIT_KL:e}; the parameter is not identified there and no decay is predicted"
            )),
        )
    } else {
        ((Some((pooled.slope - predicted).abs() / predicted.abs())), None)
    };
    Ok(RateReport {
        schema: SCHEMA_RATE.to_string(),
        meta: ArtifactMeta::of(cfg),
        game: cfg.game.clone(),
        param: rate.param,
        burn_in,
        seeds: per_seed,
        pooled_slope: pooled.slope,
        pooled_std_error: pooled.std_error,
        predicted,
        relative_error,
        note,
    })
}

/// Record of the artifacts in an output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    #[serde(flatten)]
    pub meta: ArtifactMeta,
    /// The resolved configuration.
    pub config: ExperimentConfig,
    /// Files written by each command, relative to the directory.
    pub artifacts: BTreeMap<String, Vec<String>>,
}

/// Reads the manifest of an output directory, if there is one.
pub fn read_manifest(dir: &Path) -> Result<Option<Manifest>> {
    let path = dir.join(MANIFEST_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).map_err(|e| io_error(&path, e))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| Error::Io(format!("{}: unreadable manifest: {e}", path.display())))
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

/// Serializes writes into one output directory and keeps its manifest.
struct Writer {
    dir: PathBuf,
    manifest: Manifest,
    command: String,
    files: Vec<String>,
}

impl Writer {
    /// Opens `dir`, refusing a directory that holds artifacts of another
    /// configuration or master seed.
    fn open(dir: &Path, cfg: &ExperimentConfig, command: &str) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        let meta = ArtifactMeta::of(cfg);
        let manifest = match read_manifest(dir)? {
            Some(m) if m.meta != meta => {
                return Err(Error::Io(format!(
                    "{} holds artifacts of configuration {} with master seed {}, not {} with master seed {}; \
                     choose another output directory",
                    dir.display(),
                    m.meta.config_hash,
                    m.meta.master_seed,
                    meta.config_hash,
                    meta.master_seed
                )))
            }
            Some(m) => m,
            None => Manifest {
                schema: SCHEMA_MANIFEST.to_string(),
                meta,
                config: cfg.clone(),
                artifacts: BTreeMap::new(),
            },
        };
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
            command: command.to_string(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, rel: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
        }
        fs::write(&path, contents).map_err(|e| io_error(&path, e))?;
        self.files.push(rel.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
        text.push('\n');
        self.write(rel, &text)
    }

    fn finish(mut self) -> Result<Vec<PathBuf>> {
        let paths = self.files.iter().map(|f| self.dir.join(f)).collect();
        self.manifest.artifacts.insert(self.command.clone(), self.files.clone());
        let manifest = self.manifest.clone();
        self.write_json(MANIFEST_FILE, &manifest)?;
        Ok(paths)
    }
}

/// Writes `seed_<k>/trajectory.csv` and `seed_<k>/summary.json` for every
/// configured seed. Returns the written paths.
pub fn cmd_run(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let mut writer = Writer::open(out, cfg, "run")?;
    for run in run_experiment(cfg)? {
        writer.write(&format!("seed_{}/trajectory.csv", run.seed), &run.trajectory_csv)?;
        writer.write_json(&format!("seed_{}/summary.json", run.seed), &run.summary)?;
    }
    writer.finish()
}

/// Writes `fixed_points.json`.
pub fn cmd_fixed_points(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let mut writer = Writer::open(out, cfg, "fixed-points")?;
    writer.write_json("fixed_points.json", &fixed_points_experiment(cfg)?)?;
    writer.finish()
}

/// Writes `stability_report.json`.
pub fn cmd_stability(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let mut writer = Writer::open(out, cfg, "stability")?;
    writer.write_json("stability_report.json", &stability_experiment(cfg)?)?;
    writer.finish()
}

/// Writes `rate.json`.
pub fn cmd_rate(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let mut writer = Writer::open(out, cfg, "rate")?;
    writer.write_json("rate.json", &rate_experiment(cfg)?)?;
    writer.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::parse_config;

    #[test]
    fn investment_run_ends_at_the_complete_information_point() {
        let cfg = parse_config(r#"{"game": "investment", "rule": "sequential", "horizon": 20000, "seed": 3}"#).unwrap();
        let runs = run_experiment(&cfg).unwrap();
        let s = &runs[0].summary;
        assert_eq!(s.nearest_fixed_point.as_deref(), Some("complete_info"));
        assert!(s.fixed_point_distance.unwrap() < 1e-2, "{s:?}");
        assert_eq!(s.meta.config_hash, cfg.hash());
    }

    #[test]
    fn congestion_cycle_is_flagged() {
        let cfg = parse_config(
            r#"{"game": "two_route_congestion", "overrides": {"sigma": [0, 0]}, "rule": "simultaneous",
                "init": {"q": [[1, 0], [1, 0]]}, "horizon": 200, "seed": 1}"#,
        )
        .unwrap();
        let runs = run_experiment(&cfg).unwrap();
        assert_eq!(runs[0].summary.cycle_detected.as_deref(), Some("period 2"));
    }

    #[test]
    fn unknown_cluster_is_a_precondition_error() {
        let cfg = parse_config(
            r#"{"game": "cournot", "rule": "simultaneous", "horizon": 10, "seed": 1,
                "analysis": {"stability": {"cluster": "nowhere", "n_runs": 1, "n_probe": 1}}}"#,
        )
        .unwrap();
        assert!(matches!(stability_experiment(&cfg), Err(Error::Precondition(_))));
    }
}
