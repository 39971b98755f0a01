//! Seven comparison strategies for keyword targeting.
//!
//! BASE1–BASE5 work from each keyword's observed history only (no
//! cross-matching-type estimation): frequency of past use, profit-to-cost
//! prefix ordering, a competitiveness-discounted greedy, a Sharpe-ratio
//! ranking over impression growth, and the stochastic solver restricted to
//! observed matching types. BASE6 and BASE7 rank keywords by profit and
//! then pick the matching type at random or optimally from the imputed
//! scenario draws. All greedy strategies share one stop rule: add keywords
//! in rank order while the cumulative expected cost stays within budget,
//! stopping at the first that would exceed it.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::campaign::{
    KeywordKey, MatchType, OptionSet, PerformanceRecord, ScenarioSet, TargetingDecision,
};
use crate::solver::{solve_bb_ksm, OptionStats, SolverConfig, SolverError};
use crate::statcore::RngStream;

/// Strategy identifiers as they appear on the CLI and in reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    BbKsm,
    Base1Past,
    Base2PrefixOrder,
    Base3Competitiveness,
    Base4SharpeRatio,
    Base5SelectNomatch,
    Base6RandMatch,
    Base7OptMatch,
}

impl Strategy {
    pub const ALL: [Strategy; 8] = [
        Strategy::BbKsm,
        Strategy::Base1Past,
        Strategy::Base2PrefixOrder,
        Strategy::Base3Competitiveness,
        Strategy::Base4SharpeRatio,
        Strategy::Base5SelectNomatch,
        Strategy::Base6RandMatch,
        Strategy::Base7OptMatch,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Strategy::BbKsm => "BBKSM",
            Strategy::Base1Past => "BASE1",
            Strategy::Base2PrefixOrder => "BASE2",
            Strategy::Base3Competitiveness => "BASE3",
            Strategy::Base4SharpeRatio => "BASE4",
            Strategy::Base5SelectNomatch => "BASE5",
            Strategy::Base6RandMatch => "BASE6",
            Strategy::Base7OptMatch => "BASE7",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown strategy '{s}'"))
    }
}

/// Baseline tuning knobs: the competitiveness coefficient τ and the random
/// stream BASE6 draws matching types from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub tau: f64,
    pub seed: RngStream,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig { tau: 0.01, seed: RngStream::new(0, 0) }
    }
}

/// Observed-history summary per keyword, aligned with the option set's
/// keyword order. Matching-type-specific fields use the keyword's most
/// used observed type (ties go to the narrower type).
#[derive(Clone, Debug)]
pub struct ObservedStats {
    pub record_count: Vec<usize>,
    pub observed_match: Vec<MatchType>,
    pub mean_impressions: Vec<f64>,
    pub exp_profit: Vec<f64>,
    pub exp_cost: Vec<f64>,
    pub growth_mean: Vec<Option<f64>>,
    pub growth_sd: Vec<Option<f64>>,
}

pub fn observed_stats(records: &[PerformanceRecord], options: &OptionSet) -> ObservedStats {
    let n = options.n_keywords();
    let mut record_count = vec![0usize; n];
    let mut per_type_counts = vec![[0usize; 3]; n];
    let mut per_type_impr = vec![[0.0f64; 3]; n];
    let mut per_type_clicks = vec![[0.0f64; 3]; n];
    let mut per_type_ctr_sum = vec![[0.0f64; 3]; n];
    let mut daily: Vec<Vec<(crate::campaign::Day, f64)>> = vec![Vec::new(); n];

    for r in records {
        let key = KeywordKey {
            adgroup_id: r.adgroup_id.clone(),
            keyword_id: r.keyword_id.clone(),
        };
        let Ok(k) = options.keywords().binary_search(&key) else { continue };
        let m = r.match_type.index();
        record_count[k] += 1;
        per_type_counts[k][m] += 1;
        per_type_impr[k][m] += r.impressions as f64;
        per_type_clicks[k][m] += r.impressions as f64 * r.ctr;
        per_type_ctr_sum[k][m] += r.ctr;
        daily[k].push((r.day, r.impressions as f64));
    }

    let mut observed_match = vec![MatchType::Exact; n];
    let mut mean_impressions = vec![0.0; n];
    let mut exp_profit = vec![0.0; n];
    let mut exp_cost = vec![0.0; n];
    let mut growth_mean = vec![None; n];
    let mut growth_sd = vec![None; n];

    for k in 0..n {
        let counts = per_type_counts[k];
        let best = MatchType::ALL
            .into_iter()
            .max_by_key(|m| (counts[m.index()], std::cmp::Reverse(m.index())))
            .unwrap();
        observed_match[k] = best;
        let m = best.index();
        if counts[m] > 0 {
            let d_mean = per_type_impr[k][m] / counts[m] as f64;
            let ctr = if per_type_impr[k][m] > 0.0 {
                per_type_clicks[k][m] / per_type_impr[k][m]
            } else {
                per_type_ctr_sum[k][m] / counts[m] as f64
            };
            mean_impressions[k] = d_mean;
            exp_profit[k] = d_mean * ctr * options.margin(options.option_index(k, best));
            exp_cost[k] = d_mean * ctr * options.cpc(k);
        }

        // Period-over-period impression growth across the keyword's
        // observed days, any matching type.
        daily[k].sort_by(|a, b| a.0.cmp(&b.0));
        let growths: Vec<f64> = daily[k]
            .windows(2)
            .filter(|w| w[0].1 > 0.0)
            .map(|w| w[1].1 / w[0].1 - 1.0)
            .collect();
        if growths.len() >= 2 {
            let mean = growths.iter().sum::<f64>() / growths.len() as f64;
            let var = growths.iter().map(|g| (g - mean).powi(2)).sum::<f64>()
                / (growths.len() - 1) as f64;
            growth_mean[k] = Some(mean);
            growth_sd[k] = Some(var.sqrt());
        }
    }

    ObservedStats {
        record_count,
        observed_match,
        mean_impressions,
        exp_profit,
        exp_cost,
        growth_mean,
        growth_sd,
    }
}

/// Adds keywords in the given rank order while the cumulative expected
/// cost stays within budget; stops at the first keyword that would
/// exceed it.
fn greedy_prefix(
    ranked: &[usize],
    choose: impl Fn(usize) -> (MatchType, f64),
    budget: f64,
    n_keywords: usize,
) -> TargetingDecision {
    let mut decision = TargetingDecision::empty(n_keywords);
    let mut spent = 0.0;
    for &k in ranked {
        let (m, cost) = choose(k);
        if spent + cost > budget {
            break;
        }
        decision.select(k, m);
        spent += cost;
    }
    decision
}

/// Keyword indices ranked by a score, descending; non-positive scores are
/// dropped and exact ties fall back to the keyword key order.
fn rank_by_score(options: &OptionSet, score: impl Fn(usize) -> f64) -> Vec<usize> {
    let mut ranked: Vec<(usize, f64)> = (0..options.n_keywords())
        .map(|k| (k, score(k)))
        .filter(|&(_, s)| s > 0.0)
        .collect();
    ranked.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| options.keywords()[a.0].cmp(&options.keywords()[b.0]))
    });
    ranked.into_iter().map(|(k, _)| k).collect()
}

/// BASE1: keywords ordered by how often they were used in past campaigns,
/// each under its most-used matching type.
pub fn base1_past(stats: &ObservedStats, options: &OptionSet, budget: f64) -> TargetingDecision {
    let ranked = rank_by_score(options, |k| stats.record_count[k] as f64);
    greedy_prefix(
        &ranked,
        |k| (stats.observed_match[k], stats.exp_cost[k]),
        budget,
        options.n_keywords(),
    )
}

/// BASE2: prefix ordering by observed profit-to-cost ratio.
pub fn base2_prefix_order(
    stats: &ObservedStats,
    options: &OptionSet,
    budget: f64,
) -> TargetingDecision {
    let ranked = rank_by_score(options, |k| {
        if stats.exp_profit[k] <= 0.0 {
            0.0
        } else if stats.exp_cost[k] > 0.0 {
            stats.exp_profit[k] / stats.exp_cost[k]
        } else {
            f64::INFINITY
        }
    });
    greedy_prefix(
        &ranked,
        |k| (stats.observed_match[k], stats.exp_cost[k]),
        budget,
        options.n_keywords(),
    )
}

/// Impression confidence used by BASE3: `1 − 1/(1 + e^{−τ d})`, strictly
/// decreasing in the impression volume `d`.
pub fn competitiveness_confidence(tau: f64, impressions: f64) -> f64 {
    1.0 - 1.0 / (1.0 + (-tau * impressions).exp())
}

/// BASE3: greedy on observed profit discounted by the competitiveness
/// confidence of the keyword's impression volume.
pub fn base3_competitiveness(
    stats: &ObservedStats,
    options: &OptionSet,
    budget: f64,
    cfg: &BaselineConfig,
) -> TargetingDecision {
    let ranked = rank_by_score(options, |k| {
        stats.exp_profit[k] * competitiveness_confidence(cfg.tau, stats.mean_impressions[k])
    });
    greedy_prefix(
        &ranked,
        |k| (stats.observed_match[k], stats.exp_cost[k]),
        budget,
        options.n_keywords(),
    )
}

/// Cap for the growth Sharpe ratio so zero-risk positive growth ranks
/// first without producing infinities.
const SHARPE_CAP: f64 = 1e12;

/// BASE4: mean-variance ranking of keywords by the Sharpe ratio of their
/// impression growth rate (diagonal covariance approximation), mapped into
/// the budget greedily.
pub fn base4_sharpe(stats: &ObservedStats, options: &OptionSet, budget: f64) -> TargetingDecision {
    let ranked = rank_by_score(options, |k| {
        match (stats.growth_mean[k], stats.growth_sd[k]) {
            (Some(mean), Some(sd)) if mean > 0.0 => {
                if sd > 0.0 {
                    (mean / sd).min(SHARPE_CAP)
                } else {
                    SHARPE_CAP
                }
            }
            _ => 0.0,
        }
    });
    greedy_prefix(
        &ranked,
        |k| (stats.observed_match[k], stats.exp_cost[k]),
        budget,
        options.n_keywords(),
    )
}

/// BASE5: the stochastic targeting solver with no distribution estimation.
/// Each keyword offers only its observed matching type, and scenarios
/// resample its own historical records instead of posterior draws.
pub fn base5_select_nomatch(
    records: &[PerformanceRecord],
    options: &OptionSet,
    stats: &ObservedStats,
    cfg: &SolverConfig,
) -> Result<TargetingDecision, SolverError> {
    let t = cfg.t;
    let n = options.n_options();
    let mut d = vec![0.0; n * t];
    let mut c = vec![0.0; n * t];

    // Historical (impressions, ctr) pairs per keyword under its observed
    // matching type.
    let mut history: Vec<Vec<(f64, f64)>> = vec![Vec::new(); options.n_keywords()];
    for r in records {
        let key = KeywordKey {
            adgroup_id: r.adgroup_id.clone(),
            keyword_id: r.keyword_id.clone(),
        };
        let Ok(k) = options.keywords().binary_search(&key) else { continue };
        if r.match_type == stats.observed_match[k] {
            history[k].push((r.impressions as f64, r.ctr));
        }
    }

    let mut rng = cfg.seed.derive("base5-resample").rng();
    for k in 0..options.n_keywords() {
        if history[k].is_empty() {
            continue;
        }
        let opt = options.option_index(k, stats.observed_match[k]);
        for s in 0..t {
            let (di, ci) = history[k][rng.gen_range(0..history[k].len())];
            d[opt * t + s] = di;
            c[opt * t + s] = ci;
        }
    }

    let scenarios = ScenarioSet::from_draws(t, cfg.seed, d, c);
    let (incumbent, _) = solve_bb_ksm(options, &scenarios, cfg)?;
    Ok(incumbent.decision)
}

/// BASE6: keywords ranked by observed profit; the matching type is drawn
/// uniformly per keyword, costed from the imputed scenario draws.
pub fn base6_rand_match(
    stats: &ObservedStats,
    options: &OptionSet,
    scenarios: &ScenarioSet,
    budget: f64,
    cfg: &BaselineConfig,
) -> TargetingDecision {
    let opt_stats = OptionStats::compute(options, scenarios, 0.95);
    let ranked = rank_by_score(options, |k| stats.exp_profit[k]);
    let mut rng = cfg.seed.derive("base6-types").rng();
    let mut decision = TargetingDecision::empty(options.n_keywords());
    let mut spent = 0.0;
    for &k in &ranked {
        let m = MatchType::ALL[rng.gen_range(0..3)];
        let cost = opt_stats.mean_cost[options.option_index(k, m)];
        if spent + cost > budget {
            break;
        }
        decision.select(k, m);
        spent += cost;
    }
    decision
}

/// The matching type with the highest mean profit for a keyword on the
/// given scenario draws; ties go to the narrower type.
pub fn best_match_type(
    keyword: usize,
    options: &OptionSet,
    opt_stats: &OptionStats,
) -> (MatchType, f64) {
    let mut best = MatchType::Exact;
    let mut best_profit = f64::NEG_INFINITY;
    for m in MatchType::ALL {
        let p = opt_stats.mean_profit[options.option_index(keyword, m)];
        if p > best_profit {
            best = m;
            best_profit = p;
        }
    }
    (best, best_profit)
}

/// BASE7: keywords ranked by their best-type profit from the imputed
/// scenario draws, each under that optimal matching type.
pub fn base7_opt_match(
    options: &OptionSet,
    scenarios: &ScenarioSet,
    budget: f64,
) -> TargetingDecision {
    let opt_stats = OptionStats::compute(options, scenarios, 0.95);
    let ranked = rank_by_score(options, |k| best_match_type(k, options, &opt_stats).1);
    greedy_prefix(
        &ranked,
        |k| {
            let (m, _) = best_match_type(k, options, &opt_stats);
            (m, opt_stats.mean_cost[options.option_index(k, m)])
        },
        budget,
        options.n_keywords(),
    )
}
