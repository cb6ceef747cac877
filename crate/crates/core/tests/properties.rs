//! Property-based tests of the invariants of every module.

use beliefplay::analysis::{
    certify_fixed_point, enumerate_fixed_points, estimate_convergence_rate, fit_line, kl_divergence,
    monte_carlo_local_stability, payoff_equivalent_set, stability_thresholds, upcrossing_count,
    FixedPointTolerances, LocalStabilityParams,
};
use beliefplay::dynamics::{run, run_with, AlphaSchedule, RunOptions, StageRecord, Trajectory, TrajectorySummary, UpdateRule};
use beliefplay::games::{
    best_response, best_response_numeric, equilibrium_set, pure_action, sample_observation, CoordinationPenalty,
    Cournot, GameModel, Investment, StrategyProfile, TwoRouteCongestion, ZeroSum,
};
use beliefplay::param_belief::{bayes_update, Belief, ObservationBatch, OlsState, ScheduleKind};
use num_rational::BigRational;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Normalized full-support probability vector from positive weights.
fn normalize(w: &[f64]) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    let mut p: Vec<f64> = w.iter().map(|x| x / total).collect();
    // Put the rounding residue on the largest entry so the sum is 1 to machine precision.
    let residue = 1.0 - p.iter().sum::<f64>();
    let k = (0..p.len()).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap();
    p[k] += residue;
    p
}

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, n)
}

fn game_case(k: usize) -> Box<dyn GameModel> {
    match k {
        0 => Box::new(Cournot::new()),
        1 => Box::new(Investment::new()),
        _ => Box::new(ZeroSum::new()),
    }
}

/// A profile with each coordinate at fraction `u` of its box.
fn box_profile(game: &dyn GameModel, u: &[f64]) -> StrategyProfile {
    use beliefplay::games::StrategySet;
    StrategyProfile::new(
        game.strategy_sets()
            .iter()
            .zip(u)
            .map(|(set, x)| match set {
                StrategySet::Box { lo, hi } => vec![lo[0] + x * (hi[0] - lo[0])],
                StrategySet::Simplex { .. } => unreachable!("box games only"),
            })
            .collect(),
    )
}

fn batch_at(game: &dyn GameModel, q: &StrategyProfile, n: usize, seed: u64) -> ObservationBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut batch = ObservationBatch::default();
    for _ in 0..n {
        let obs = sample_observation(game, game.space().true_index(), q, &mut rng);
        batch.push(q.clone(), obs.channels);
    }
    batch
}

/// Independent O(n²) count of upcrossings: repeatedly find the first index
/// at or below `lo`, then the first later index at or above `hi`.
fn brute_upcrossings(x: &[f64], lo: f64, hi: f64) -> usize {
    let mut count = 0;
    let mut start = 0;
    'outer: while start < x.len() {
        for a in start..x.len() {
            if x[a] <= lo {
                for b in a + 1..x.len() {
                    if x[b] >= hi {
                        count += 1;
                        start = b + 1;
                        continue 'outer;
                    }
                }
                break 'outer;
            }
        }
        break;
    }
    count
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bayes_update_stays_on_the_simplex(k in 0usize..3, w in weights(3), u in prop::collection::vec(0.0f64..1.0, 2), n in 1usize..20, seed: u64) {
        let game = game_case(k);
        let m = game.space().len();
        let prior = Belief::from_probs(&normalize(&w[..m])).unwrap();
        let q = box_profile(game.as_ref(), &u);
        let post = bayes_update(&prior, &batch_at(game.as_ref(), &q, n, seed), game.as_ref()).unwrap();
        let total: f64 = post.probs().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12, "sum {total}");
        prop_assert!(post.probs().iter().all(|p| *p >= 0.0));
    }

    #[test]
    fn excluded_parameters_stay_excluded(w in weights(3), zero in 0usize..3, u in prop::collection::vec(0.0f64..1.0, 2), seed: u64) {
        let game = Investment::new();
        prop_assume!(zero != game.space().true_index());
        let mut p = w.clone();
        p[zero] = 0.0;
        let mut belief = Belief::from_probs(&normalize(&p)).unwrap();
        let q = box_profile(&game, &u);
        for round in 0..5 {
            belief = bayes_update(&belief, &batch_at(&game, &q, 3, seed.wrapping_add(round)), &game).unwrap();
            prop_assert_eq!(belief.prob(zero), 0.0);
            prop_assert!(belief.is_excluded(zero));
        }
    }

    #[test]
    fn equivalent_parameters_keep_their_ratio(a in 0.01f64..0.99, n in 1usize..30, seed: u64) {
        // At q = (1/2, 1/2) both Cournot parameters predict the same price.
        let game = Cournot::new();
        let q = StrategyProfile::scalars(&[0.5, 0.5]);
        prop_assert_eq!(kl_divergence(&game, 0, 1, &q), 0.0);
        let prior = Belief::from_probs(&[a, 1.0 - a]).unwrap();
        let post = bayes_update(&prior, &batch_at(&game, &q, n, seed), &game).unwrap();
        prop_assert_eq!(post.log_ratio(1, 0).to_bits(), prior.log_ratio(1, 0).to_bits());
    }

    #[test]
    fn ols_interpolates_noiseless_data(coef in prop::collection::vec(-3.0f64..3.0, 6), rows in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 2), 5..40)) {
        // Two players, scalar strategies: c_i = a_i · q + b_i.
        let mut ols = OlsState::new(2, 2);
        for r in &rows {
            let q = StrategyProfile::scalars(r);
            let c: Vec<f64> = (0..2).map(|i| coef[3 * i] * r[0] + coef[3 * i + 1] * r[1] + coef[3 * i + 2]).collect();
            ols.ingest(&q, &c).unwrap();
        }
        match ols.solve() {
            Ok(fit) => {
                for i in 0..2 {
                    for k in 0..3 {
                        prop_assert!((fit[i][k] - coef[3 * i + k]).abs() <= 1e-10, "player {i} coef {k}: {} vs {}", fit[i][k], coef[3 * i + k]);
                    }
                }
            }
            // Nearly collinear random designs are legitimately rejected.
            Err(beliefplay::error::Error::Unidentifiable { .. }) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn numeric_best_response_matches_the_closed_form(k in 0usize..3, w in weights(3), u in prop::collection::vec(0.0f64..1.0, 2), i in 0usize..2) {
        let game = game_case(k);
        let m = game.space().len();
        let belief = Belief::from_probs(&normalize(&w[..m])).unwrap();
        let q = box_profile(game.as_ref(), &u);
        let analytic = best_response(game.as_ref(), &belief, i, &q).unwrap();
        let numeric = best_response_numeric(game.as_ref(), &belief, i, &q).unwrap();
        // Set-valued responses may pick different maximizers; compare to the set.
        prop_assert!(analytic.distance_to_set(&numeric.strategy) <= 1e-6,
            "analytic {:?} numeric {:?}", analytic, numeric.strategy);
    }

    #[test]
    fn best_response_maps_contract(k in 0usize..2, w in weights(3), u in prop::collection::vec(0.0f64..1.0, 2), v in prop::collection::vec(0.0f64..1.0, 2)) {
        // Cournot: BR_i = r/2 − q_j/2 on the interior, a 1/2-contraction;
        // investment contracts by 1/4.
        let (game, factor) = match k {
            0 => (game_case(0), 0.5),
            _ => (game_case(1), 0.25),
        };
        let m = game.space().len();
        let belief = Belief::from_probs(&normalize(&w[..m])).unwrap();
        let (q, q2) = (box_profile(game.as_ref(), &u), box_profile(game.as_ref(), &v));
        let br = |q: &StrategyProfile| {
            StrategyProfile::new((0..2).map(|i| best_response(game.as_ref(), &belief, i, q).unwrap().strategy).collect())
        };
        prop_assert!(br(&q).distance(&br(&q2)) <= (factor + 1e-12) * q.distance(&q2) + 1e-15);
    }

    #[test]
    fn zero_sum_payoffs_cancel(u in prop::collection::vec(0.0f64..1.0, 2), s in 0usize..3, seed: u64) {
        let game = ZeroSum::new();
        let q = box_profile(&game, &u);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let obs = sample_observation(&game, s, &q, &mut rng);
            prop_assert_eq!(obs.payoffs[0] + obs.payoffs[1], 0.0);
        }
    }

    #[test]
    fn coordination_cost_is_continuous_at_the_knot(s in 0.5f64..4.0) {
        let below = CoordinationPenalty::cost(s, 1.0);
        let above = CoordinationPenalty::cost(s, 1.0 + 1e-12);
        prop_assert!((below - 1.0).abs() <= 1e-12);
        prop_assert!((above - below).abs() <= 1e-10);
        prop_assert_eq!(CoordinationPenalty::cost(s, -1.0), below);
    }

    #[test]
    fn equilibrium_members_are_best_responses(k in 0usize..3, w in weights(3), seed: u64) {
        let game = game_case(k);
        let m = game.space().len();
        let belief = Belief::from_probs(&normalize(&w[..m])).unwrap();
        let eq = equilibrium_set(game.as_ref(), &belief).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for q in eq.sample_members(10, &mut rng) {
            for i in 0..game.n_players() {
                let br = best_response(game.as_ref(), &belief, i, &q).unwrap();
                prop_assert!(br.distance_to_set(q.player(i)) <= 1e-8, "{q:?}");
            }
        }
    }

    #[test]
    fn runs_are_deterministic(k in 0usize..3, rule in 0usize..3, seed: u64) {
        let game = game_case(k);
        let rule = [UpdateRule::Simultaneous, UpdateRule::Sequential, UpdateRule::linear()][rule];
        let m = game.space().len();
        let init = || (Belief::uniform(m), box_profile(game.as_ref(), &[0.3, 0.8]));
        let a = run(game.as_ref(), &rule, ScheduleKind::EveryStage, init(), 200, seed).unwrap();
        let b = run(game.as_ref(), &rule, ScheduleKind::EveryStage, init(), 200, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn rules_move_the_right_blocks(k in 0usize..3, rule in 0usize..3, alpha in 0.0f64..1.0, seed: u64) {
        let game = game_case(k);
        let m = game.space().len();
        let rule = [
            UpdateRule::Sequential,
            UpdateRule::Linear { alpha: AlphaSchedule::Constant { value: alpha } },
            UpdateRule::linear(),
        ][rule];
        let traj = run(game.as_ref(), &rule, ScheduleKind::EveryStage, (Belief::uniform(m), box_profile(game.as_ref(), &[0.9, 0.1])), 100, seed).unwrap();
        let diams: Vec<f64> = game.strategy_sets().iter().map(|s| s.diameter()).collect();
        for pair in traj.records.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            let moved: Vec<f64> = (0..2).map(|i| {
                a.q.player(i).iter().zip(b.q.player(i)).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
            }).collect();
            match rule {
                UpdateRule::Sequential => {
                    let mover = ((a.t - 1) % 2) as usize;
                    prop_assert_eq!(moved[1 - mover], 0.0);
                }
                UpdateRule::Linear { alpha: a_sched } => {
                    let step = a_sched.alpha(a.t);
                    for i in 0..2 {
                        prop_assert!(moved[i] <= step * diams[i] + 1e-12);
                    }
                }
                _ => unreachable!(),
            }
            for (i, set) in game.strategy_sets().iter().enumerate() {
                prop_assert!(set.contains(b.q.player(i)));
            }
        }
    }

    #[test]
    fn fictitious_play_tracks_exact_frequencies(seed: u64, start in 0usize..2) {
        let game = TwoRouteCongestion::new(2).unwrap();
        let q1 = StrategyProfile::new(vec![pure_action(2, start), pure_action(2, 1 - start)]);
        let traj = run(&game, &UpdateRule::FictitiousPlay, ScheduleKind::EveryStage, (Belief::uniform(game.space().len()), q1.clone()), 60, seed).unwrap();
        let to_q = |x: f64| BigRational::from_float(x).unwrap();
        // Counts start from q¹ (weight 1) and add one unit per played action.
        let mut counts: Vec<Vec<BigRational>> = q1.per_player().iter().map(|b| b.iter().map(|x| to_q(*x)).collect()).collect();
        for (k, rec) in traj.records.iter().enumerate() {
            let t = BigRational::from_integer((k as i64 + 1).into());
            for i in 0..2 {
                for (a, c) in counts[i].iter().enumerate() {
                    let exact = c / &t;
                    let recorded = to_q(rec.q.player(i)[a]);
                    let diff = exact - recorded;
                    let err = if diff < to_q(0.0) { -diff } else { diff };
                    prop_assert!(err <= to_q(1e-12), "stage {} player {i} action {a}", rec.t);
                }
                for (a, x) in rec.play.player(i).iter().enumerate() {
                    counts[i][a] += to_q(*x);
                }
            }
        }
    }

    #[test]
    fn divergences_are_non_negative(k in 0usize..3, u in prop::collection::vec(0.0f64..1.0, 2), a in 0usize..3, b in 0usize..3) {
        let game = game_case(k);
        let m = game.space().len();
        let (a, b) = (a % m, b % m);
        let q = box_profile(game.as_ref(), &u);
        prop_assert!(kl_divergence(game.as_ref(), a, b, &q) >= 0.0);
        prop_assert_eq!(kl_divergence(game.as_ref(), a, a, &q), 0.0);
    }

    #[test]
    fn equivalence_set_contains_the_truth_and_grows_with_tol(k in 0usize..3, u in prop::collection::vec(0.0f64..1.0, 2), t1 in -12.0f64..1.0, t2 in -12.0f64..1.0) {
        let game = game_case(k);
        let q = box_profile(game.as_ref(), &u);
        let (lo, hi) = (10f64.powf(t1.min(t2)), 10f64.powf(t1.max(t2)));
        let small = payoff_equivalent_set(game.as_ref(), &q, lo);
        let large = payoff_equivalent_set(game.as_ref(), &q, hi);
        prop_assert!(small.contains(&game.space().true_index()));
        prop_assert!(small.iter().all(|s| large.contains(s)));
    }

    #[test]
    fn thresholds_are_ordered(w in prop::collection::vec(0.01f64..1.0, 2..7), excluded in 1usize..6, eps in 0.01f64..0.99, gamma in 0.01f64..0.99) {
        let n = w.len();
        let excluded = excluded.min(n - 1);
        let mut theta = w.clone();
        for x in theta.iter_mut().take(excluded) {
            *x = 0.0;
        }
        let theta = normalize(&theta);
        let t = stability_thresholds(&theta, eps, gamma).unwrap();
        let min_support = theta.iter().copied().filter(|p| *p > 0.0).fold(f64::INFINITY, f64::min);
        prop_assert!(0.0 < t.rho1 && t.rho1 < t.rho2 && t.rho2 < eps / n as f64);
        prop_assert!(t.rho3 <= min_support);
    }

    #[test]
    fn synthetic_exponentials_give_their_slope(rate in -2.0f64..0.0, c in -5.0f64..5.0, burn_in in 0u64..50) {
        let records: Vec<StageRecord> = (1..=300u64).map(|t| StageRecord {
            t,
            theta: vec![0.0; 2],
            log_theta: vec![0.0, c + rate * t as f64],
            q: StrategyProfile::scalars(&[0.0]),
            play: StrategyProfile::scalars(&[0.0]),
            obs: vec![],
            payoffs: vec![],
            updated: true,
        }).collect();
        let traj = Trajectory {
            records,
            summary: TrajectorySummary {
                horizon: 300,
                seed: 0,
                converged: false,
                t_stop: None,
                cycle_period: None,
                final_belief: vec![],
                final_strategy: StrategyProfile::scalars(&[0.0]),
                updates: 300,
                nearest_fixed_point: None,
                fixed_point_distance: None,
                equilibrium_distances: vec![],
            },
        };
        let fit = estimate_convergence_rate(&traj, 1, burn_in).unwrap();
        prop_assert!((fit.slope - rate).abs() <= 1e-12, "{} vs {rate}", fit.slope);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn upcrossings_match_brute_force(x in prop::collection::vec(0.0f64..1.0, 0..60), lo in 0.0f64..0.5, width in 0.01f64..0.5) {
        let hi = lo + width;
        prop_assert_eq!(upcrossing_count(&x, lo, hi).unwrap(), brute_upcrossings(&x, lo, hi));
    }
}

#[test]
fn upcrossings_of_the_reference_sequence() {
    assert_eq!(upcrossing_count(&[0.0, 0.5, 0.0, 0.5], 0.1, 0.4).unwrap(), 2);
}

#[test]
fn synthetic_line_fit_is_exact() {
    let xs: Vec<f64> = (1..=500).map(f64::from).collect();
    let ys: Vec<f64> = xs.iter().map(|t| 1.5 - 0.031 * t).collect();
    assert!((fit_line(&xs, &ys).unwrap().slope + 0.031).abs() <= 1e-12);
}

#[test]
fn enumerated_fixed_points_recertify() {
    let tols = FixedPointTolerances::default();
    for game in [game_case(0), game_case(1), game_case(2)] {
        let e = enumerate_fixed_points(game.as_ref(), 21, 6, tols).unwrap();
        assert!(!e.certificates.is_empty());
        for c in &e.certificates {
            let again = certify_fixed_point(
                game.as_ref(),
                &Belief::from_probs(&c.belief).unwrap(),
                &c.strategy,
                tols.kl,
                tols.eq,
            )
            .unwrap();
            assert!(again.valid, "{} {:?}", game.id(), c);
            assert_eq!(again.equivalence_set, c.equivalence_set);
            assert_eq!(again.support, c.support);
            assert_eq!(again.is_complete_info, c.is_complete_info);
        }
    }
}

#[test]
fn one_stage_from_the_fixed_point_always_stays() {
    let game = Cournot::new();
    let e = enumerate_fixed_points(&game, 21, 6, FixedPointTolerances::default()).unwrap();
    for cluster in &e.clusters {
        let params = LocalStabilityParams::new(0.0, 0.0, 1e-9, 1e-9, 50, 1, 3);
        let est = monte_carlo_local_stability(&game, &cluster.representative, &params).unwrap();
        assert_eq!(est.stay_probability, 1.0, "{}", cluster.id);
    }
}

#[test]
fn partial_support_runs_need_the_option() {
    let game = Cournot::new();
    let init = || (Belief::point_mass(2, 0).unwrap(), StrategyProfile::scalars(&[0.5, 0.5]));
    assert!(run(&game, &UpdateRule::Simultaneous, ScheduleKind::EveryStage, init(), 5, 1).is_err());
    let options = RunOptions {
        allow_partial_support: true,
        ..RunOptions::default()
    };
    assert!(run_with(&game, &UpdateRule::Simultaneous, ScheduleKind::EveryStage, init(), 5, 1, &options).is_ok());
}
