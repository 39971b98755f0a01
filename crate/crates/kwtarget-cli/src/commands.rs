//! Implementations of the CLI subcommands. All artifacts are derived
//! deterministically from the seed, the config, and the input files.

use std::collections::BTreeMap;
use std::path::Path;

use kwtarget::baselines::{
    self, observed_stats, BaselineConfig, ObservedStats, Strategy,
};
use kwtarget::campaign::{
    build_options, evaluate_solution, OptionSet, PerformanceRecord, ScenarioSet, SolutionReport,
    TargetingDecision,
};
use kwtarget::dataset::synth::{generate_synthetic, SyntheticSpec};
use kwtarget::dataset::{parse_dataset_file, serialize_dataset, summarize, summary_to_csv};
use kwtarget::imputation::{estimate_all, AdGroupPosterior, GibbsConfig, ImputeError};
use kwtarget::report::{
    fig_match_percentages, fig_profit_cost_scatter, fig_profit_vs_budget, fig_selected_counts,
    posterior_export_csv, PosteriorFile,
};
use kwtarget::solver::{brute_force_oracle, solve_bb_ksm, SolverConfig, SolverError};
use kwtarget::statcore::RngStream;

use crate::{CliError, RunConfig};

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|e| CliError::runtime(format!("cannot write {path:?}: {e}")))
}

fn load_records(path: &Path) -> Result<Vec<PerformanceRecord>, CliError> {
    parse_dataset_file(path).map_err(|e| match e {
        kwtarget::dataset::DatasetError::Io(io) => {
            CliError::runtime(format!("cannot read {path:?}: {io}"))
        }
        other => CliError::validation(format!("{}: {other}", path.display())),
    })
}

fn load_posterior(path: &Path) -> Result<PosteriorFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::runtime(format!("cannot read {path:?}: {e}")))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::validation(format!("invalid posterior file {path:?}: {e}")))
}

fn impute_error(e: ImputeError) -> CliError {
    match e {
        ImputeError::BadConfig(_) | ImputeError::EmptyAdGroup => CliError::validation(e.to_string()),
        other => CliError::runtime(other.to_string()),
    }
}

fn solver_error(e: SolverError) -> CliError {
    match e {
        SolverError::NoFeasibleSolution | SolverError::BadConfig(_) | SolverError::TooLarge { .. } => {
            CliError::validation(e.to_string())
        }
    }
}

fn sweep(run_cfg: &RunConfig, budget_flags: &[f64]) -> Result<Vec<f64>, CliError> {
    let budgets = if budget_flags.is_empty() {
        run_cfg.budgets.clone()
    } else {
        budget_flags.to_vec()
    };
    if budgets.iter().any(|b| !(*b > 0.0)) {
        return Err(CliError::validation("budget must be positive"));
    }
    Ok(budgets)
}

/// Options plus solver and evaluation scenario sets drawn from disjoint
/// streams of the same seed.
fn build_instance(
    records: &[PerformanceRecord],
    posteriors: &BTreeMap<String, AdGroupPosterior>,
    run_cfg: &RunConfig,
    seed: u64,
) -> Result<(OptionSet, ScenarioSet, ScenarioSet), CliError> {
    let root = RngStream::new(seed, 0);
    let (options, solver_scen) =
        build_options(records, posteriors, run_cfg.t, root.derive("solver-scenarios"))
            .map_err(|e| CliError::validation(e.to_string()))?;
    let (_, eval_scen) =
        build_options(records, posteriors, run_cfg.t_eval, root.derive("eval-scenarios"))
            .map_err(|e| CliError::validation(e.to_string()))?;
    Ok((options, solver_scen, eval_scen))
}

fn report_path(out: &Path, strategy: &str, budget: f64) -> std::path::PathBuf {
    out.join(format!("report_{strategy}_B{budget}.json"))
}

fn write_report(out: &Path, report: &SolutionReport) -> Result<(), CliError> {
    let path = report_path(out, &report.strategy, report.budget);
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::runtime(format!("cannot serialize report: {e}")))?;
    write_file(&path, &(json + "\n"))
}

pub fn synth(out: &Path, seed: u64, benchmark: &str, days: Option<usize>) -> Result<(), CliError> {
    let stream = RngStream::new(seed, 0);
    let mut spec = match benchmark.to_ascii_lowercase().as_str() {
        "s" => SyntheticSpec::benchmark_s(stream),
        "l" => SyntheticSpec::benchmark_l(stream),
        other => {
            return Err(CliError::validation(format!(
                "unknown benchmark '{other}' (expected 's' or 'l')"
            )))
        }
    };
    if let Some(days) = days {
        spec.days = days;
    }
    let (records, sidecar) = generate_synthetic(&spec).map_err(CliError::validation)?;
    write_file(&out.join("dataset.csv"), &serialize_dataset(&records))?;
    let truth = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| CliError::runtime(e.to_string()))?;
    write_file(&out.join("truth.json"), &(truth + "\n"))?;
    eprintln!(
        "synth: {} records for {} ad-groups -> {}",
        records.len(),
        sidecar.groups.len(),
        out.display()
    );
    Ok(())
}

pub fn estimate(out: &Path, seed: u64, run_cfg: &RunConfig, data: &Path) -> Result<(), CliError> {
    run_cfg.validate()?;
    let records = load_records(data)?;
    let summary = summarize(&records).map_err(|e| CliError::validation(e.to_string()))?;
    let gibbs = GibbsConfig {
        iterations: run_cfg.gibbs_iterations,
        burn_in: run_cfg.gibbs_burn_in,
        thinning: run_cfg.gibbs_thinning,
        seed: RngStream::new(seed, 0),
        epsilon: run_cfg.epsilon,
    };
    gibbs.validate().map_err(impute_error)?;
    let adgroups = estimate_all(&records, &gibbs).map_err(impute_error)?;

    write_file(&out.join("summary.csv"), &summary_to_csv(&summary))?;
    write_file(&out.join("posterior_export.csv"), &posterior_export_csv(&adgroups))?;
    let file = PosteriorFile { gibbs, adgroups };
    let json = serde_json::to_string(&file).map_err(|e| CliError::runtime(e.to_string()))?;
    write_file(&out.join("posterior.json"), &(json + "\n"))?;
    eprintln!(
        "estimate: {} ad-groups, {} retained draws each -> {}",
        file.adgroups.len(),
        file.gibbs.retained(),
        out.display()
    );
    Ok(())
}

pub fn optimize(
    out: &Path,
    seed: u64,
    run_cfg: &RunConfig,
    data: &Path,
    posterior: &Path,
    budget_flags: &[f64],
) -> Result<(), CliError> {
    run_cfg.validate()?;
    let records = load_records(data)?;
    let posterior = load_posterior(posterior)?;
    let budgets = sweep(run_cfg, budget_flags)?;
    let (options, solver_scen, eval_scen) =
        build_instance(&records, &posterior.adgroups, run_cfg, seed)?;

    for &budget in &budgets {
        let cfg = SolverConfig {
            budget,
            alpha: run_cfg.alpha,
            t: run_cfg.t,
            node_limit: run_cfg.node_limit,
            bound_tolerance: run_cfg.bound_tolerance,
            seed: RngStream::new(seed, 0),
        };
        let (incumbent, stats) = solve_bb_ksm(&options, &solver_scen, &cfg).map_err(solver_error)?;
        eprintln!(
            "optimize: B={budget} objective={:.4} alpha_hat={:.4} nodes={} ({:.0} ms{})",
            incumbent.objective,
            incumbent.alpha_hat,
            stats.nodes_explored,
            stats.wall_ms,
            if stats.truncated { ", truncated" } else { "" }
        );
        let mut report = evaluate_solution(
            &incumbent.decision,
            &eval_scen,
            &options,
            budget,
            run_cfg.alpha,
            Strategy::BbKsm.label(),
        );
        report.search_stats = Some(stats);
        write_report(out, &report)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn baseline(
    out: &Path,
    seed: u64,
    run_cfg: &RunConfig,
    strategy: &str,
    data: &Path,
    posterior: Option<&Path>,
    budget_flags: &[f64],
) -> Result<(), CliError> {
    run_cfg.validate()?;
    let strategy: Strategy = strategy.parse().map_err(CliError::validation)?;
    if strategy == Strategy::BbKsm {
        return Err(CliError::validation("use the optimize command for BBKSM"));
    }
    let posterior_path = posterior.ok_or_else(|| {
        CliError::validation("baseline evaluation requires --posterior for scenario draws")
    })?;
    let records = load_records(data)?;
    let posterior = load_posterior(posterior_path)?;
    let budgets = sweep(run_cfg, budget_flags)?;
    let (options, solver_scen, eval_scen) =
        build_instance(&records, &posterior.adgroups, run_cfg, seed)?;
    let stats: ObservedStats = observed_stats(&records, &options);
    let root = RngStream::new(seed, 0);
    let baseline_cfg = BaselineConfig { tau: run_cfg.tau, seed: root };

    for &budget in &budgets {
        let decision: TargetingDecision = match strategy {
            Strategy::Base1Past => baselines::base1_past(&stats, &options, budget),
            Strategy::Base2PrefixOrder => baselines::base2_prefix_order(&stats, &options, budget),
            Strategy::Base3Competitiveness => {
                baselines::base3_competitiveness(&stats, &options, budget, &baseline_cfg)
            }
            Strategy::Base4SharpeRatio => baselines::base4_sharpe(&stats, &options, budget),
            Strategy::Base5SelectNomatch => {
                let cfg = SolverConfig {
                    budget,
                    alpha: run_cfg.alpha,
                    t: run_cfg.t,
                    node_limit: run_cfg.node_limit,
                    bound_tolerance: run_cfg.bound_tolerance,
                    seed: root,
                };
                baselines::base5_select_nomatch(&records, &options, &stats, &cfg)
                    .map_err(solver_error)?
            }
            Strategy::Base6RandMatch => {
                baselines::base6_rand_match(&stats, &options, &solver_scen, budget, &baseline_cfg)
            }
            Strategy::Base7OptMatch => baselines::base7_opt_match(&options, &solver_scen, budget),
            Strategy::BbKsm => unreachable!("rejected above"),
        };
        let report = evaluate_solution(
            &decision,
            &eval_scen,
            &options,
            budget,
            run_cfg.alpha,
            strategy.label(),
        );
        eprintln!(
            "baseline {}: B={budget} profit={:.4} selected={}",
            strategy.label(),
            report.expected_profit,
            report.n_selected
        );
        write_report(out, &report)?;
    }
    Ok(())
}

pub fn report(out: &Path, runs: &Path) -> Result<(), CliError> {
    let mut names: Vec<std::path::PathBuf> = std::fs::read_dir(runs)
        .map_err(|e| CliError::runtime(format!("cannot read {runs:?}: {e}")))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map(|n| n.starts_with("report_") && n.ends_with(".json"))
                .unwrap_or(false)
        })
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(CliError::validation(format!(
            "no report_*.json files under {}",
            runs.display()
        )));
    }

    let mut reports = Vec::with_capacity(names.len());
    for path in &names {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::runtime(format!("cannot read {path:?}: {e}")))?;
        let report: SolutionReport = serde_json::from_str(&text)
            .map_err(|e| CliError::validation(format!("invalid report {path:?}: {e}")))?;
        reports.push(report);
    }

    write_file(&out.join("profit_vs_budget.csv"), &fig_profit_vs_budget(&reports))?;
    write_file(&out.join("profit_cost.csv"), &fig_profit_cost_scatter(&reports))?;
    write_file(&out.join("selected_counts.csv"), &fig_selected_counts(&reports))?;
    write_file(&out.join("match_percentages.csv"), &fig_match_percentages(&reports))?;
    eprintln!("report: collated {} runs -> {}", reports.len(), out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn oracle(
    out: &Path,
    seed: u64,
    run_cfg: &RunConfig,
    data: &Path,
    posterior: &Path,
    keywords: usize,
    budget: Option<f64>,
) -> Result<(), CliError> {
    run_cfg.validate()?;
    if keywords == 0 || keywords > 12 {
        return Err(CliError::validation("keyword count must lie in 1..=12"));
    }
    let records = load_records(data)?;
    let posterior = load_posterior(posterior)?;

    // Keep only the first `keywords` keys in sorted order.
    let mut keys: Vec<(String, String)> = records
        .iter()
        .map(|r| (r.adgroup_id.clone(), r.keyword_id.clone()))
        .collect();
    keys.sort();
    keys.dedup();
    keys.truncate(keywords);
    let reduced: Vec<PerformanceRecord> = records
        .into_iter()
        .filter(|r| keys.contains(&(r.adgroup_id.clone(), r.keyword_id.clone())))
        .collect();

    let (options, solver_scen, _) = build_instance(&reduced, &posterior.adgroups, run_cfg, seed)?;
    let budget = budget.unwrap_or_else(|| run_cfg.budgets[run_cfg.budgets.len() / 2]);
    let cfg = SolverConfig {
        budget,
        alpha: run_cfg.alpha,
        t: run_cfg.t,
        node_limit: run_cfg.node_limit,
        bound_tolerance: run_cfg.bound_tolerance,
        seed: RngStream::new(seed, 0),
    };
    let exact = brute_force_oracle(&options, &solver_scen, &cfg).map_err(solver_error)?;
    let (incumbent, _) = solve_bb_ksm(&options, &solver_scen, &cfg).map_err(solver_error)?;

    #[derive(serde::Serialize)]
    struct OracleCheck {
        keywords: usize,
        budget: f64,
        bbksm_objective: f64,
        oracle_objective: f64,
        equal: bool,
    }
    let check = OracleCheck {
        keywords: options.n_keywords(),
        budget,
        bbksm_objective: incumbent.objective,
        oracle_objective: exact.objective,
        equal: incumbent.objective == exact.objective,
    };
    let json = serde_json::to_string_pretty(&check).map_err(|e| CliError::runtime(e.to_string()))?;
    println!("{json}");
    write_file(&out.join("oracle_check.json"), &(json + "\n"))?;
    if !check.equal {
        return Err(CliError::runtime(format!(
            "solver objective {} does not match oracle {}",
            check.bbksm_objective, check.oracle_objective
        )));
    }
    Ok(())
}
