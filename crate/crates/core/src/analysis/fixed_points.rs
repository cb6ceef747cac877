//! Fixed-point certification, enumeration and the complete-information checks.
//!
//! A pair `(θ̄, q̄)` is a fixed point when the support of `θ̄` only contains
//! parameters that are payoff-equivalent to the truth at `q̄`, and `q̄` is an
//! equilibrium of the game under `θ̄`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::kl::{kl_divergence, payoff_equivalent_set, DEFAULT_KL_TOL};
use super::sampling::sample_strategy_near;
use crate::error::{Error, Result};
use crate::games::{best_response, equilibrium_set, EquilibriumSet, GameModel, StrategyProfile, StrategySet};
use crate::param_belief::Belief;

/// Default tolerance on the best-response residual of a certified equilibrium.
pub const DEFAULT_EQ_TOL: f64 = 1e-7;
/// Default belief-grid resolution (points per simplex edge).
pub const DEFAULT_BELIEF_RESOLUTION: usize = 51;
/// Default resolution of grids over set-valued equilibria.
pub const DEFAULT_STRATEGY_RESOLUTION: usize = 11;
/// Beliefs closer than this (sup norm) are the same fixed-point belief.
const DUPLICATE_TOL: f64 = 1e-9;
/// Finest step of the local search on simplex faces.
const REFINE_MIN_STEP: f64 = 1e-15;
/// Tolerance on the Hausdorff distance when comparing equilibrium sets.
const EQ_SET_TOL: f64 = 1e-6;

/// Tolerances used to certify fixed points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointTolerances {
    /// Divergence threshold for payoff equivalence.
    pub kl: f64,
    /// Threshold on the best-response residual.
    pub eq: f64,
}

impl Default for FixedPointTolerances {
    fn default() -> Self {
        Self {
            kl: DEFAULT_KL_TOL,
            eq: DEFAULT_EQ_TOL,
        }
    }
}

/// Evidence that `(θ̄, q̄)` is, or is not, a fixed point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointCertificate {
    /// The belief `θ̄`.
    pub belief: Vec<f64>,
    /// The strategy profile `q̄`.
    pub strategy: StrategyProfile,
    /// `S*(q̄)`.
    pub equivalence_set: Vec<usize>,
    /// `[θ̄]`.
    pub support: Vec<usize>,
    /// `[θ̄] ⊆ S*(q̄)`.
    pub support_in_equivalence_set: bool,
    /// Distance of `q̄` to the best-response set `BR(θ̄, q̄)`.
    pub eq_residual: f64,
    /// `θ̄` is the point mass on the true parameter.
    pub is_complete_info: bool,
    /// Both conditions hold within tolerance.
    pub valid: bool,
}

/// Certifies `(θ̄, q̄)`.
pub fn certify_fixed_point(
    game: &dyn GameModel,
    belief: &Belief,
    q: &StrategyProfile,
    tol_kl: f64,
    tol_eq: f64,
) -> Result<FixedPointCertificate> {
    let equivalence_set = payoff_equivalent_set(game, q, tol_kl);
    let support = belief.support();
    let support_in_equivalence_set = support.iter().all(|s| equivalence_set.contains(s));
    let mut sq = 0.0;
    for i in 0..game.n_players() {
        let br = best_response(game, belief, i, q)?;
        sq += br.distance_to_set(q.player(i)).powi(2);
    }
    let eq_residual = sq.sqrt();
    let truth = game.space().true_index();
    let is_complete_info = support == [truth];
    Ok(FixedPointCertificate {
        belief: belief.probs().to_vec(),
        strategy: q.clone(),
        equivalence_set,
        support,
        support_in_equivalence_set,
        eq_residual,
        is_complete_info,
        valid: support_in_equivalence_set && eq_residual <= tol_eq,
    })
}

/// A connected family of certified fixed points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointCluster {
    /// `complete_info`, `theta_dagger`, `theta_dagger_2`, ...
    pub id: String,
    /// The cluster consists of complete-information fixed points.
    pub is_complete_info: bool,
    /// Number of certified grid points in the cluster.
    pub size: usize,
    /// Indices of the member certificates in [`FixedPointEnumeration::certificates`].
    pub members: Vec<usize>,
    /// Coordinate-wise range of the beliefs.
    pub belief_min: Vec<f64>,
    pub belief_max: Vec<f64>,
    /// Coordinate-wise range of the (flattened) strategies.
    pub strategy_min: Vec<f64>,
    pub strategy_max: Vec<f64>,
    /// The member closest to the cluster centroid.
    pub representative: FixedPointCertificate,
    /// `EQ(θ̄)` at the representative belief.
    pub equilibrium: EquilibriumSet,
}

/// Result of [`enumerate_fixed_points`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointEnumeration {
    /// Number of beliefs examined.
    pub beliefs_scanned: usize,
    /// All certified fixed points.
    pub certificates: Vec<FixedPointCertificate>,
    /// Certificates grouped into connected families.
    pub clusters: Vec<FixedPointCluster>,
}

impl FixedPointEnumeration {
    /// The cluster with the given id.
    pub fn cluster(&self, id: &str) -> Option<&FixedPointCluster> {
        self.clusters.iter().find(|c| c.id == id)
    }
}

/// All beliefs `k / (resolution - 1)` on the simplex over `n` parameters.
pub fn belief_grid(n: usize, resolution: usize) -> Vec<Vec<f64>> {
    fn rec(n: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n - 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(n, left - k, prefix, out);
            prefix.pop();
        }
    }
    let m = resolution.max(2) - 1;
    let mut ks = Vec::new();
    rec(n, m, &mut Vec::new(), &mut ks);
    ks.into_iter()
        .map(|k| k.into_iter().map(|v| v as f64 / m as f64).collect())
        .collect()
}

fn belief_from_probs(p: &[f64]) -> Result<Belief> {
    let total: f64 = p.iter().sum();
    Belief::from_probs(&p.iter().map(|v| v / total).collect::<Vec<_>>())
}

fn candidate_strategies(eq: &EquilibriumSet, strategy_resolution: usize) -> Vec<StrategyProfile> {
    if eq.is_singleton() {
        return vec![eq.representative()];
    }
    let mut out = eq.vertices();
    out.extend(eq.grid_members(strategy_resolution.max(2)));
    out
}

/// Largest divergence from the truth among the supported parameters at the
/// singleton equilibrium of `θ`; `None` when `EQ(θ)` is not a singleton.
fn consistency_residual(game: &dyn GameModel, p: &[f64]) -> Result<Option<(f64, StrategyProfile)>> {
    let belief = belief_from_probs(p)?;
    let eq = equilibrium_set(game, &belief)?;
    if !eq.is_singleton() {
        return Ok(None);
    }
    let q = eq.representative();
    let truth = game.space().true_index();
    let r = belief
        .support()
        .into_iter()
        .map(|s| kl_divergence(game, truth, s, &q))
        .fold(0.0, f64::max);
    Ok(Some((r, q)))
}

/// Compass search on the relative interior of the face spanned by `face`,
/// minimizing the consistency residual.
fn refine_on_face(game: &dyn GameModel, start: &[f64], face: &[usize], step0: f64) -> Result<Vec<f64>> {
    let mut x = start.to_vec();
    let Some((mut best, _)) = consistency_residual(game, &x)? else {
        return Ok(x);
    };
    let mut step = step0;
    while step > REFINE_MIN_STEP && best > 0.0 {
        let mut improved = false;
        for &a in face {
            for &b in face {
                if a == b || x[b] - step <= 0.0 {
                    continue;
                }
                let mut y = x.clone();
                y[a] += step;
                y[b] -= step;
                if let Some((r, _)) = consistency_residual(game, &y)? {
                    if r < best {
                        best = r;
                        x = y;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(x)
}

/// Local minima of the consistency residual among interior grid points of
/// each face, refined by compass search.
fn refined_face_beliefs(game: &dyn GameModel, grid: &[Vec<f64>], h: f64) -> Result<Vec<Vec<f64>>> {
    let mut residuals: Vec<Option<f64>> = Vec::with_capacity(grid.len());
    for p in grid {
        residuals.push(consistency_residual(game, p)?.map(|(r, _)| r));
    }
    let support_of = |p: &[f64]| -> Vec<usize> { (0..p.len()).filter(|&k| p[k] > 0.0).collect() };
    let mut out = Vec::new();
    for (idx, p) in grid.iter().enumerate() {
        let face = support_of(p);
        let Some(r) = residuals[idx] else { continue };
        if face.len() < 2 || r == 0.0 {
            continue;
        }
        let is_local_min = grid.iter().enumerate().all(|(j, other)| {
            if j == idx || support_of(other) != face {
                return true;
            }
            let near = p.iter().zip(other).all(|(a, b)| (a - b).abs() <= h * (1.0 + 1e-9));
            !near || residuals[j].map_or(true, |o| o >= r)
        });
        if is_local_min {
            out.push(refine_on_face(game, p, &face, h / 2.0)?);
        }
    }
    Ok(out)
}

fn certify_belief(
    game: &dyn GameModel,
    p: &[f64],
    strategy_resolution: usize,
    tols: FixedPointTolerances,
) -> Result<Vec<FixedPointCertificate>> {
    let belief = belief_from_probs(p)?;
    let eq = equilibrium_set(game, &belief)?;
    let mut out = Vec::new();
    for q in candidate_strategies(&eq, strategy_resolution) {
        let cert = certify_fixed_point(game, &belief, &q, tols.kl, tols.eq)?;
        if cert.valid {
            out.push(cert);
        }
    }
    Ok(out)
}

fn strategy_spacing(game: &dyn GameModel, strategy_resolution: usize) -> f64 {
    let m = (strategy_resolution.max(2) - 1) as f64;
    game.strategy_sets()
        .iter()
        .map(|set| match set {
            StrategySet::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| h - l).fold(0.0, f64::max),
            StrategySet::Simplex { .. } => 1.0,
        })
        .fold(0.0, f64::max)
        / m
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn build_cluster(game: &dyn GameModel, id: String, members: Vec<&FixedPointCertificate>) -> Result<FixedPointCluster> {
    let nb = members[0].belief.len();
    let flat: Vec<Vec<f64>> = members.iter().map(|c| c.strategy.flat()).collect();
    let nq = flat[0].len();
    let mut belief_min = vec![f64::INFINITY; nb];
    let mut belief_max = vec![f64::NEG_INFINITY; nb];
    let mut strategy_min = vec![f64::INFINITY; nq];
    let mut strategy_max = vec![f64::NEG_INFINITY; nq];
    let mut centroid = vec![0.0; nb + nq];
    for (c, f) in members.iter().zip(&flat) {
        for k in 0..nb {
            belief_min[k] = belief_min[k].min(c.belief[k]);
            belief_max[k] = belief_max[k].max(c.belief[k]);
            centroid[k] += c.belief[k];
        }
        for k in 0..nq {
            strategy_min[k] = strategy_min[k].min(f[k]);
            strategy_max[k] = strategy_max[k].max(f[k]);
            centroid[nb + k] += f[k];
        }
    }
    for v in centroid.iter_mut() {
        *v /= members.len() as f64;
    }
    let dist_to_centroid = |c: &FixedPointCertificate, f: &[f64]| {
        c.belief
            .iter()
            .chain(f)
            .zip(&centroid)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
    };
    let (best, _) = members
        .iter()
        .zip(&flat)
        .enumerate()
        .map(|(k, (c, f))| (k, dist_to_centroid(c, f)))
        .fold((0, f64::INFINITY), |acc, (k, d)| if d < acc.1 { (k, d) } else { acc });
    let representative = members[best].clone();
    let equilibrium = equilibrium_set(game, &belief_from_probs(&representative.belief)?)?;
    Ok(FixedPointCluster {
        is_complete_info: representative.is_complete_info,
        id,
        size: members.len(),
        members: Vec::new(),
        belief_min,
        belief_max,
        strategy_min,
        strategy_max,
        representative,
        equilibrium,
    })
}

/// Scans a belief grid (plus refined minima of the consistency residual on
/// every simplex face), certifies the members of `EQ(θ)` for each belief,
/// and groups the certificates into connected families. The
/// complete-information fixed points form the cluster `complete_info`; the
/// others are `theta_dagger`, `theta_dagger_2`, ... in scan order.
pub fn enumerate_fixed_points(
    game: &dyn GameModel,
    belief_resolution: usize,
    strategy_resolution: usize,
    tols: FixedPointTolerances,
) -> Result<FixedPointEnumeration> {
    if belief_resolution < 2 || strategy_resolution < 2 {
        return Err(Error::Precondition("fixed-point grids need at least 2 points per axis".into()));
    }
    let n = game.space().len();
    let h = 1.0 / (belief_resolution - 1) as f64;
    let mut beliefs = belief_grid(n, belief_resolution);
    for p in refined_face_beliefs(game, &beliefs, h)? {
        if !beliefs.iter().any(|b| sup_dist(b, &p) <= DUPLICATE_TOL) {
            beliefs.push(p);
        }
    }
    let mut certificates = Vec::new();
    for p in &beliefs {
        certificates.extend(certify_belief(game, p, strategy_resolution, tols)?);
    }

    let hq = strategy_spacing(game, strategy_resolution);
    let flat: Vec<Vec<f64>> = certificates.iter().map(|c| c.strategy.flat()).collect();
    let mut parent: Vec<usize> = (0..certificates.len()).collect();
    for a in 0..certificates.len() {
        for b in a + 1..certificates.len() {
            let (ca, cb) = (&certificates[a], &certificates[b]);
            if ca.is_complete_info != cb.is_complete_info {
                continue;
            }
            let linked = ca.is_complete_info
                || (sup_dist(&ca.belief, &cb.belief) <= h * (1.0 + 1e-9)
                    && sup_dist(&flat[a], &flat[b]) <= hq * (1.0 + 1e-6));
            if linked {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[rb.max(ra)] = ra.min(rb);
                }
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for k in 0..certificates.len() {
        let r = find(&mut parent, k);
        match groups.iter_mut().find(|(root, _)| *root == r) {
            Some((_, members)) => members.push(k),
            None => groups.push((r, vec![k])),
        }
    }
    let mut clusters = Vec::new();
    let mut dagger = 0;
    for (_, members) in groups {
        let certs: Vec<&FixedPointCertificate> = members.iter().map(|&k| &certificates[k]).collect();
        let id = if certs[0].is_complete_info {
            "complete_info".to_string()
        } else {
            dagger += 1;
            if dagger == 1 {
                "theta_dagger".to_string()
            } else {
                format!("theta_dagger_{dagger}")
            }
        };
        let mut cluster = build_cluster(game, id, certs)?;
        cluster.members = members;
        clusters.push(cluster);
    }
    clusters.sort_by_key(|c| !c.is_complete_info);
    Ok(FixedPointEnumeration {
        beliefs_scanned: beliefs.len(),
        certificates,
        clusters,
    })
}

/// Outcome of [`check_all_fixed_points_complete`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletenessCheck {
    /// No belief other than the complete-information one admits a fixed point.
    pub holds: bool,
    /// Number of beliefs tested.
    pub beliefs_tested: usize,
    /// A fixed point with an incorrect belief, if one was found.
    pub counterexample: Option<FixedPointCertificate>,
}

/// Tests whether `[θ] ∖ S*(q)` is non-empty for every `θ ≠ θ*` and every
/// `q ∈ EQ(θ)`, over a belief grid, refined face minima, and `n_random`
/// Dirichlet(1, …, 1) draws.
pub fn check_all_fixed_points_complete(
    game: &dyn GameModel,
    n_random: usize,
    seed: u64,
) -> Result<CompletenessCheck> {
    let n = game.space().len();
    let truth = game.space().true_index();
    let h = 1.0 / (DEFAULT_BELIEF_RESOLUTION - 1) as f64;
    let grid = belief_grid(n, DEFAULT_BELIEF_RESOLUTION);
    let mut beliefs = refined_face_beliefs(game, &grid, h)?;
    beliefs.extend(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_random {
        let e: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = e.iter().sum();
        beliefs.push(e.iter().map(|v| v / total).collect());
    }
    let is_truth = |p: &[f64]| (0..n).all(|k| if k == truth { p[k] == 1.0 } else { p[k] == 0.0 });
    let mut tested = 0;
    for p in beliefs.iter().filter(|p| !is_truth(p)) {
        tested += 1;
        let found = certify_belief(game, p, DEFAULT_STRATEGY_RESOLUTION, FixedPointTolerances::default())?;
        if let Some(cert) = found.into_iter().find(|c| !c.is_complete_info) {
            return Ok(CompletenessCheck {
                holds: false,
                beliefs_tested: tested,
                counterexample: Some(cert),
            });
        }
    }
    Ok(CompletenessCheck {
        holds: true,
        beliefs_tested: tested,
        counterexample: None,
    })
}

/// Outcome of [`check_complete_info_equilibrium_conditions`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompleteInfoConditions {
    /// (i): `[θ̄] ⊆ S*(q)` for every probed `q` with `‖q − q̄‖ < ξ`.
    pub local_equivalence: bool,
    /// (ii): every `u_i^s`, `s ∈ [θ̄]`, passed the concavity probes in `q_i`.
    pub concavity: bool,
    /// `EQ(θ̄)` and `EQ(θ*)` coincide within tolerance.
    pub equilibria_match: bool,
    /// Hausdorff distance between `EQ(θ̄)` and `EQ(θ*)`.
    pub equilibrium_distance: f64,
    /// Number of strategies probed for (i).
    pub probes: usize,
    /// A probed strategy violating (i).
    pub counterexample: Option<StrategyProfile>,
}

/// Probes the sufficient conditions under which a fixed-point strategy is a
/// complete-information equilibrium: local payoff equivalence of the support
/// within radius `ξ` and concavity of every supported payoff in the own strategy.
pub fn check_complete_info_equilibrium_conditions(
    game: &dyn GameModel,
    certificate: &FixedPointCertificate,
    xi: f64,
    n_probe: usize,
    seed: u64,
) -> Result<CompleteInfoConditions> {
    if !certificate.valid {
        return Err(Error::Precondition("certificate is not a valid fixed point".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q_bar = &certificate.strategy;
    let mut counterexample = None;
    for _ in 0..n_probe {
        let q = sample_strategy_near(game, q_bar, xi, &mut rng);
        let eq = payoff_equivalent_set(game, &q, DEFAULT_KL_TOL);
        if !certificate.support.iter().all(|s| eq.contains(s)) {
            counterexample = Some(q);
            break;
        }
    }

    let mut concave = true;
    let sets = game.strategy_sets();
    'outer: for &s in &certificate.support {
        for (i, set) in sets.iter().enumerate() {
            let StrategySet::Box { lo, hi } = set else {
                // Payoffs are linear in the own mixed strategy.
                continue;
            };
            for _ in 0..20 {
                let base = sample_strategy_near(game, q_bar, f64::INFINITY, &mut rng);
                for k in 0..lo.len() {
                    let h = (hi[k] - lo[k]) / 20.0;
                    if h <= 0.0 {
                        continue;
                    }
                    let f = |x: f64| {
                        let mut qi = base.player(i).to_vec();
                        qi[k] = x;
                        game.mean_payoff(s, &base.with_player(i, qi), i)
                    };
                    for m in 1..20 {
                        let x = lo[k] + m as f64 * h;
                        let (a, b, c) = (f(x - h), f(x), f(x + h));
                        let scale = 1.0 + a.abs().max(b.abs()).max(c.abs());
                        if a + c - 2.0 * b > 1e-9 * scale {
                            concave = false;
                            break 'outer;
                        }
                    }
                }
            }
        }
    }

    let bar = equilibrium_set(game, &belief_from_probs(&certificate.belief)?)?;
    let star = equilibrium_set(game, &Belief::point_mass(game.space().len(), game.space().true_index())?)?;
    let equilibrium_distance = bar.hausdorff(&star);
    Ok(CompleteInfoConditions {
        local_equivalence: counterexample.is_none(),
        concavity: concave,
        equilibria_match: equilibrium_distance <= EQ_SET_TOL,
        equilibrium_distance,
        probes: n_probe,
        counterexample,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{Cournot, Investment};

    #[test]
    fn grid_sizes() {
        assert_eq!(belief_grid(2, 51).len(), 51);
        assert_eq!(belief_grid(3, 51).len(), 1326);
        for p in belief_grid(3, 5) {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cournot_certificates() {
        let g = Cournot::new();
        let tol = FixedPointTolerances::default();
        let star = certify_fixed_point(
            &g,
            &Belief::point_mass(2, 0).unwrap(),
            &StrategyProfile::scalars(&[2.0 / 3.0, 2.0 / 3.0]),
            tol.kl,
            tol.eq,
        )
        .unwrap();
        assert!(star.valid && star.is_complete_info);
        let half = Belief::from_probs(&[0.5, 0.5]).unwrap();
        let dagger = certify_fixed_point(&g, &half, &StrategyProfile::scalars(&[0.5, 0.5]), tol.kl, tol.eq).unwrap();
        assert!(dagger.valid && !dagger.is_complete_info);
        let off = certify_fixed_point(&g, &half, &StrategyProfile::scalars(&[0.6, 0.6]), tol.kl, tol.eq).unwrap();
        assert!(!off.valid);
        assert!(off.eq_residual > tol.eq && !off.support_in_equivalence_set);
    }

    #[test]
    fn investment_has_only_the_complete_information_point() {
        let g = Investment::new();
        let e = enumerate_fixed_points(&g, 21, 5, FixedPointTolerances::default()).unwrap();
        assert_eq!(e.clusters.len(), 1);
        assert_eq!(e.clusters[0].id, "complete_info");
    }
}
