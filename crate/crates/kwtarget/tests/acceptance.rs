//! Acceptance suite: one test per criterion, each enforcing its stated
//! tolerance and runtime budget and printing a PASS line. Criterion 10
//! (CLI determinism) lives in the CLI crate's acceptance tests, next to
//! the binary it exercises.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the
//! per-criterion lines.

use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::Rng;

use kwtarget::baselines::{self, observed_stats, BaselineConfig, Strategy};
use kwtarget::campaign::{
    build_options, evaluate_solution, KeywordKey, MatchMix, OptionSet, ScenarioSet,
};
use kwtarget::dataset::synth::{generate_synthetic, SyntheticSpec};
use kwtarget::dataset::{parse_dataset, serialize_dataset, summarize};
use kwtarget::imputation::{estimate_all, GibbsConfig};
use kwtarget::solver::{brute_force_oracle, solve_bb_ksm, SolverConfig};
use kwtarget::statcore::{
    conditional_mvn, normal_quantile, sample_inverse_wishart, MvnParams, RngStream, SpdMatrix,
    WishartSpec,
};

fn pass(criterion: u32, name: &str, elapsed: Duration, limit: Duration) {
    assert!(
        elapsed <= limit,
        "criterion {criterion} exceeded its runtime budget: {elapsed:?} > {limit:?}"
    );
    println!("ACCEPT criterion {criterion:2} ({name}): PASS in {elapsed:.2?}");
}

// ---------------------------------------------------------------------
// Criterion 1: closed-form distribution checks.
// ---------------------------------------------------------------------

#[test]
fn criterion_01_closed_form_distribution_checks() {
    let start = Instant::now();

    // 2-dim Schur complement by hand: θ=(0,0), Σ=[[1,.5],[.5,1]],
    // observe x₀=1 → mean .5, variance .75.
    let p2 = MvnParams::new(
        vec![0.0, 0.0],
        SpdMatrix::from_rows(&[&[1.0, 0.5], &[0.5, 1.0]]).unwrap(),
    )
    .unwrap();
    let c2 = conditional_mvn(&p2, &[0], &[1.0]).unwrap();
    assert!((c2.mean[0] - 0.5).abs() < 1e-10);
    assert!((c2.cov.matrix()[(0, 0)] - 0.75).abs() < 1e-10);

    // 3-dim case, observing coordinates {0, 2}. Independent hand route:
    // with Σ_aa = [[4,.5],[.5,2]] (det 7.75), Σ_ba = [1, .8] and residual
    // (1, −2), the Schur formulas give the values below.
    let p3 = MvnParams::new(
        vec![1.0, 2.0, 3.0],
        SpdMatrix::from_rows(&[&[4.0, 1.0, 0.5], &[1.0, 3.0, 0.8], &[0.5, 0.8, 2.0]]).unwrap(),
    )
    .unwrap();
    let c3 = conditional_mvn(&p3, &[0, 2], &[2.0, 1.0]).unwrap();
    let det: f64 = 4.0 * 2.0 - 0.5 * 0.5;
    let w = ((2.0 * 1.0 + -0.5 * -2.0) / det, (-0.5 * 1.0 + 4.0 * -2.0) / det);
    let mean_hand = 2.0 + 1.0 * w.0 + 0.8 * w.1;
    let u = ((2.0 * 1.0 - 0.5 * 0.8) / det, (-0.5 * 1.0 + 4.0 * 0.8) / det);
    let var_hand = 3.0 - (1.0 * u.0 + 0.8 * u.1);
    assert!((c3.mean[0] - mean_hand).abs() < 1e-10, "{} vs {mean_hand}", c3.mean[0]);
    assert!((c3.cov.matrix()[(0, 0)] - var_hand).abs() < 1e-10);

    // Normal quantile at the configured confidence level.
    let z = normal_quantile(0.95).unwrap();
    assert!((z - 1.64485).abs() <= 1e-4, "z = {z}");

    // Inverse-Wishart mean within 2% of scale/(ν − p − 1) over 1e5 draws.
    let spec = WishartSpec::new(10.0, SpdMatrix::identity(3).scaled(6.0)).unwrap();
    let expect = 1.0; // 6 I / (10 − 3 − 1) = I
    let mut rng = RngStream::new(2024, 0).rng();
    let n = 100_000;
    let mut diag = [0.0f64; 3];
    for _ in 0..n {
        let s = sample_inverse_wishart(&spec, &mut rng).unwrap();
        for (i, d) in diag.iter_mut().enumerate() {
            *d += s.matrix()[(i, i)] / n as f64;
        }
    }
    for d in diag {
        assert!((d - expect).abs() < 0.02 * expect, "inverse-Wishart mean diag {d}");
    }

    pass(1, "closed-form distribution checks", start.elapsed(), Duration::from_secs(30));
}

// ---------------------------------------------------------------------
// Criterion 2: Gibbs recovery on benchmark-S.
// ---------------------------------------------------------------------

#[test]
fn criterion_02_gibbs_recovery_on_benchmark_s() {
    let start = Instant::now();
    let mut pairs = 0usize;
    let mut pairs_ok = 0usize;

    for seed in 0..5u64 {
        let spec = SyntheticSpec::benchmark_s(RngStream::new(seed, 0));
        let (records, sidecar) = generate_synthetic(&spec).unwrap();
        let cfg = GibbsConfig {
            iterations: 5_000,
            burn_in: 1_000,
            thinning: 10,
            seed: RngStream::new(seed, 1),
            epsilon: 1e-6,
        };
        let posteriors = estimate_all(&records, &cfg).unwrap();

        for truth in &sidecar.groups {
            let post = &posteriors[&truth.adgroup_id];
            for (family, truth_params) in [
                (&post.impressions, &truth.impressions),
                (&post.ctr, &truth.ctr),
            ] {
                pairs += 1;
                let theta_hat = family.theta_mean();
                let sigma_hat = family.sigma_mean();
                let theta_ok = (0..3).all(|i| (theta_hat[i] - truth_params.mean[i]).abs() <= 0.2);
                let sigma_ok = (0..3).all(|i| {
                    let truth_v = truth_params.cov.matrix()[(i, i)];
                    (sigma_hat[i][i] - truth_v).abs() <= 0.25 * truth_v
                });
                if theta_ok && sigma_ok {
                    pairs_ok += 1;
                }
            }
        }
    }
    let frac = pairs_ok as f64 / pairs as f64;
    assert!(
        frac >= 0.9,
        "only {pairs_ok}/{pairs} (group, family) pairs recovered within tolerance"
    );
    pass(2, "Gibbs recovery on benchmark-S", start.elapsed(), Duration::from_secs(120));
}

// ---------------------------------------------------------------------
// Criteria 3 and 4 share twenty seeded small instances.
// ---------------------------------------------------------------------

struct SmallInstanceCheck {
    solver_objective: f64,
    oracle_objective: f64,
    root_relaxation_bound: f64,
}

fn small_instances() -> &'static (Vec<SmallInstanceCheck>, Duration) {
    static CELL: OnceLock<(Vec<SmallInstanceCheck>, Duration)> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let mut checks = Vec::with_capacity(20);
        for seed in 0..20u64 {
            let n_kw = 3 + (seed % 6) as usize; // 3..=8
            let (options, scenarios) = lognormal_instance(n_kw, 500, 9_000 + seed);
            let budget = 0.2 * total_mean_cost(&options, &scenarios);
            let cfg = SolverConfig { budget, t: 500, ..SolverConfig::new(budget) };
            let oracle = brute_force_oracle(&options, &scenarios, &cfg).unwrap();
            let (incumbent, stats) = solve_bb_ksm(&options, &scenarios, &cfg).unwrap();
            assert!(!stats.truncated);
            checks.push(SmallInstanceCheck {
                solver_objective: incumbent.objective,
                oracle_objective: oracle.objective,
                root_relaxation_bound: stats.root_relaxation_bound,
            });
        }
        (checks, start.elapsed())
    })
}

/// Instance generator shaped like the estimation stage's output:
/// lognormal impressions, logit-normal CTRs, per-keyword margins.
fn lognormal_instance(n_keywords: usize, t: usize, seed: u64) -> (OptionSet, ScenarioSet) {
    let mut rng = RngStream::new(seed, 0).rng();
    let keywords: Vec<KeywordKey> = (0..n_keywords)
        .map(|k| KeywordKey { adgroup_id: "g".into(), keyword_id: format!("kw-{k:02}") })
        .collect();
    let cpc: Vec<f64> = (0..n_keywords).map(|_| rng.gen_range(0.1..0.6)).collect();
    let vpc: Vec<f64> = cpc
        .iter()
        .map(|c| c + rng.gen_range(-0.2..3.0f64).max(0.0))
        .collect();
    let options = OptionSet::new(keywords, vpc, cpc);
    let n = options.n_options();
    let mut d = vec![0.0; n * t];
    let mut c = vec![0.0; n * t];
    for opt in 0..n {
        let mu_d: f64 = rng.gen_range(2.0..4.5);
        let mu_c: f64 = rng.gen_range(-2.5..-0.5);
        let sd: f64 = rng.gen_range(0.2..0.8);
        for s in 0..t {
            let zd: f64 = rng.sample(rand_distr::StandardNormal);
            let zc: f64 = rng.sample(rand_distr::StandardNormal);
            d[opt * t + s] = (mu_d + sd * zd).exp();
            c[opt * t + s] = 1.0 / (1.0 + (-(mu_c + sd * zc)).exp());
        }
    }
    (options, ScenarioSet::from_draws(t, RngStream::new(seed, 0), d, c))
}

fn total_mean_cost(options: &OptionSet, scenarios: &ScenarioSet) -> f64 {
    let t = scenarios.len();
    let mut total = 0.0;
    for opt in 0..options.n_options() {
        for s in 0..t {
            total += scenarios.option_cost(options, opt, s);
        }
    }
    total / (t as f64 * 3.0)
}

#[test]
fn criterion_03_oracle_equivalence() {
    let (checks, elapsed) = small_instances();
    for (i, check) in checks.iter().enumerate() {
        assert_eq!(
            check.solver_objective, check.oracle_objective,
            "instance {i}: solver {} differs from oracle {}",
            check.solver_objective, check.oracle_objective
        );
    }
    pass(3, "oracle equivalence on 20 instances", *elapsed, Duration::from_secs(120));
}

#[test]
fn criterion_04_bound_validity() {
    let (checks, elapsed) = small_instances();
    for (i, check) in checks.iter().enumerate() {
        let slack = 1e-6 * (1.0 + check.oracle_objective.abs());
        assert!(
            check.root_relaxation_bound >= check.oracle_objective - slack,
            "instance {i}: root bound {} below oracle {}",
            check.root_relaxation_bound,
            check.oracle_objective
        );
    }
    pass(4, "root relaxation bound validity", *elapsed, Duration::from_secs(120));
}

// ---------------------------------------------------------------------
// Criteria 5–8 share one benchmark-S sweep over five seeds.
// ---------------------------------------------------------------------

struct SweepRun {
    /// In-sample solver objective per budget (common random numbers).
    bbksm_objective: Vec<f64>,
    /// Out-of-sample expected profit per strategy per budget.
    oos_profit: BTreeMap<Strategy, Vec<f64>>,
    /// Out-of-sample chance-constraint probability per budget for BB-KSM.
    bbksm_alpha_hat: Vec<f64>,
    /// BB-KSM matching mix at the mid-sweep budget.
    bbksm_mix_at_500: MatchMix,
}

const SWEEP_BUDGETS: [f64; 10] =
    [100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0, 800.0, 900.0, 1000.0];

fn benchmark_sweep() -> &'static (Vec<SweepRun>, Duration) {
    static CELL: OnceLock<(Vec<SweepRun>, Duration)> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let runs = (0..5u64).map(run_one_seed).collect();
        (runs, start.elapsed())
    })
}

fn run_one_seed(seed: u64) -> SweepRun {
    let root = RngStream::new(seed, 0);
    let spec = SyntheticSpec::benchmark_s(root);
    let (records, _) = generate_synthetic(&spec).unwrap();
    let gibbs = GibbsConfig {
        iterations: 5_000,
        burn_in: 1_000,
        thinning: 10,
        seed: root,
        epsilon: 1e-6,
    };
    let posteriors = estimate_all(&records, &gibbs).unwrap();

    let t_solver = 1_000;
    let t_eval = 10_000;
    let (options, solver_scen) =
        build_options(&records, &posteriors, t_solver, root.derive("solver-scenarios")).unwrap();
    let (_, eval_scen) =
        build_options(&records, &posteriors, t_eval, root.derive("eval-scenarios")).unwrap();
    let obs = observed_stats(&records, &options);
    let baseline_cfg = BaselineConfig { tau: 0.01, seed: root };

    let mut run = SweepRun {
        bbksm_objective: Vec::new(),
        oos_profit: BTreeMap::new(),
        bbksm_alpha_hat: Vec::new(),
        bbksm_mix_at_500: MatchMix { exact: 0.0, phrase: 0.0, broad: 0.0 },
    };

    for &budget in &SWEEP_BUDGETS {
        let cfg = SolverConfig { budget, t: t_solver, seed: root, ..SolverConfig::new(budget) };
        let (incumbent, stats) = solve_bb_ksm(&options, &solver_scen, &cfg).unwrap();
        assert!(!stats.truncated, "seed {seed} B={budget}: node limit hit");
        run.bbksm_objective.push(incumbent.objective);

        let decisions = [
            (Strategy::BbKsm, incumbent.decision.clone()),
            (Strategy::Base1Past, baselines::base1_past(&obs, &options, budget)),
            (Strategy::Base2PrefixOrder, baselines::base2_prefix_order(&obs, &options, budget)),
            (
                Strategy::Base3Competitiveness,
                baselines::base3_competitiveness(&obs, &options, budget, &baseline_cfg),
            ),
            (Strategy::Base4SharpeRatio, baselines::base4_sharpe(&obs, &options, budget)),
            (
                Strategy::Base5SelectNomatch,
                baselines::base5_select_nomatch(&records, &options, &obs, &cfg).unwrap(),
            ),
            (
                Strategy::Base6RandMatch,
                baselines::base6_rand_match(&obs, &options, &solver_scen, budget, &baseline_cfg),
            ),
            (Strategy::Base7OptMatch, baselines::base7_opt_match(&options, &solver_scen, budget)),
        ];
        for (strategy, decision) in decisions {
            let report =
                evaluate_solution(&decision, &eval_scen, &options, budget, 0.95, strategy.label());
            if strategy == Strategy::BbKsm {
                run.bbksm_alpha_hat.push(report.alpha_hat_out_of_sample);
                if budget == 500.0 {
                    run.bbksm_mix_at_500 = report.match_pct;
                }
            }
            run.oos_profit.entry(strategy).or_default().push(report.expected_profit);
        }
    }
    run
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values[values.len() / 2]
}

#[test]
fn criterion_05_chance_constraint_honesty() {
    let (runs, elapsed) = benchmark_sweep();
    for (seed, run) in runs.iter().enumerate() {
        for (b, alpha_hat) in run.bbksm_alpha_hat.iter().enumerate() {
            assert!(
                *alpha_hat >= 0.92,
                "seed {seed} budget {}: out-of-sample alpha_hat {alpha_hat}",
                SWEEP_BUDGETS[b]
            );
        }
    }
    pass(5, "out-of-sample chance-constraint honesty", *elapsed, Duration::from_secs(600));
}

#[test]
fn criterion_06_budget_monotonicity() {
    let (runs, elapsed) = benchmark_sweep();
    for (seed, run) in runs.iter().enumerate() {
        for w in run.bbksm_objective.windows(2) {
            assert!(
                w[1] >= w[0],
                "seed {seed}: objective dropped from {} to {} along the sweep",
                w[0],
                w[1]
            );
        }
    }
    pass(6, "budget monotonicity under common random numbers", *elapsed, Duration::from_secs(600));
}

#[test]
fn criterion_07_profit_trend_vs_baselines() {
    let (runs, elapsed) = benchmark_sweep();
    // Upper half of the sweep: budgets 600 through 1000.
    for b in SWEEP_BUDGETS.len() / 2..SWEEP_BUDGETS.len() {
        let mut bbksm: Vec<f64> =
            runs.iter().map(|r| r.oos_profit[&Strategy::BbKsm][b]).collect();
        let mut best_base: Vec<f64> = runs
            .iter()
            .map(|r| {
                Strategy::ALL[1..]
                    .iter()
                    .map(|s| r.oos_profit[s][b])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        let med_bbksm = median(&mut bbksm);
        let med_best = median(&mut best_base);
        assert!(
            med_bbksm >= med_best - 0.01 * med_best.abs(),
            "budget {}: median BB-KSM {med_bbksm} below best baseline {med_best} − 1%",
            SWEEP_BUDGETS[b]
        );
    }
    for b in 0..SWEEP_BUDGETS.len() {
        let mut bbksm: Vec<f64> =
            runs.iter().map(|r| r.oos_profit[&Strategy::BbKsm][b]).collect();
        let mut base5: Vec<f64> = runs
            .iter()
            .map(|r| r.oos_profit[&Strategy::Base5SelectNomatch][b])
            .collect();
        assert!(
            median(&mut bbksm) >= median(&mut base5),
            "budget {}: median BB-KSM below BASE5",
            SWEEP_BUDGETS[b]
        );
    }
    pass(7, "profit trend versus baselines", *elapsed, Duration::from_secs(600));
}

#[test]
fn criterion_08_match_type_mix_at_mid_budget() {
    let (runs, elapsed) = benchmark_sweep();
    let mut max_shares: Vec<f64> = runs.iter().map(|r| r.bbksm_mix_at_500.max()).collect();
    let med = median(&mut max_shares);
    assert!(
        med <= 0.9,
        "median dominant matching-type share {med} exceeds 0.9 at B=500"
    );
    pass(8, "mixed matching types at B=500", *elapsed, Duration::from_secs(600));
}

// ---------------------------------------------------------------------
// Criterion 9: dataset format fidelity.
// ---------------------------------------------------------------------

#[test]
fn criterion_09_format_fidelity() {
    let start = Instant::now();
    let text = "\
day,keyword_id,ad_group_id,matching_type,impression,ctr,vpc,cpc
2012/6/13,keyword-31,ad-group-13,exact,-,-,-,-
2012/6/13,keyword-31,ad-group-13,phrase,-,-,-,-
2012/6/13,keyword-31,ad-group-13,broad,36,0.06,50,0.31
2012/6/20,keyword-31,ad-group-13,exact,-,-,-,-
2012/6/20,keyword-31,ad-group-13,phrase,-,-,-,-
2012/6/20,keyword-31,ad-group-13,broad,18,0.17,18.3,0.25
2016/3/8,keyword-402,ad-group-25,exact,-,-,-,-
2016/3/8,keyword-402,ad-group-25,phrase,2,0.5,75,0.31
2016/3/8,keyword-402,ad-group-25,broad,-,-,-,-
2013/1/8,keyword-527,ad-group-9,exact,21,0.38,39.8,0.27
2013/1/8,keyword-527,ad-group-9,phrase,-,-,-,-
2013/1/8,keyword-527,ad-group-9,broad,-,-,-,-
";
    let records = parse_dataset(text).unwrap();
    let first = &records[0];
    assert_eq!(first.keyword_id, "keyword-31");
    assert_eq!(first.match_type.label(), "broad");
    assert_eq!(first.impressions, 36);
    assert_eq!(first.ctr, 0.06);
    assert_eq!(first.vpc, 50.0);
    assert_eq!(first.cpc, 0.31);
    assert_eq!(serialize_dataset(&records), text, "roundtrip must be byte-identical");

    let table = summarize(&records).unwrap();
    let total: f64 = table.rows.iter().map(|r| r.proportion_pct).sum();
    assert!((total - 100.0).abs() <= 0.01);

    pass(9, "dataset format fidelity", start.elapsed(), Duration::from_secs(30));
}
