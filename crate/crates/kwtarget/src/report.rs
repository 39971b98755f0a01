//! Report artifacts: the posterior export CSV, the serialized posterior
//! file the optimizer consumes, and the four figure-style CSV tables
//! (profit versus budget, per-keyword profit/cost, selected-keyword
//! counts, matching-type percentages) collated from solution reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::campaign::SolutionReport;
use crate::imputation::{AdGroupPosterior, GibbsConfig};

/// Full estimation output for a dataset: one posterior per ad-group plus
/// the sampler configuration that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorFile {
    pub gibbs: GibbsConfig,
    pub adgroups: BTreeMap<String, AdGroupPosterior>,
}

/// One record per retained draw per ad-group and family: the mean vector
/// and the row-major covariance entries.
pub fn posterior_export_csv(posteriors: &BTreeMap<String, AdGroupPosterior>) -> String {
    let mut out = String::from(
        "adgroup_id,family,draw_index,theta_1,theta_2,theta_3,sigma_11,sigma_12,sigma_13,sigma_21,sigma_22,sigma_23,sigma_31,sigma_32,sigma_33\n",
    );
    for (gid, post) in posteriors {
        for (family, draws) in [("impressions", &post.impressions), ("ctr", &post.ctr)] {
            for i in 0..draws.len() {
                let theta = draws.theta_draws[i];
                let sigma = draws.sigma_draws[i].matrix();
                let _ = write!(out, "{gid},{family},{i},{},{},{}", theta[0], theta[1], theta[2]);
                for r in 0..3 {
                    for c in 0..3 {
                        let _ = write!(out, ",{}", sigma[(r, c)]);
                    }
                }
                out.push('\n');
            }
        }
    }
    out
}

fn sorted(reports: &[SolutionReport]) -> Vec<&SolutionReport> {
    let mut v: Vec<&SolutionReport> = reports.iter().collect();
    v.sort_by(|a, b| {
        a.strategy
            .cmp(&b.strategy)
            .then_with(|| a.budget.total_cmp(&b.budget))
    });
    v
}

/// Expected profit per strategy and budget.
pub fn fig_profit_vs_budget(reports: &[SolutionReport]) -> String {
    let mut out = String::from("strategy,budget,expected_profit\n");
    for r in sorted(reports) {
        let _ = writeln!(out, "{},{},{}", r.strategy, r.budget, r.expected_profit);
    }
    out
}

/// Per-keyword expected profit and cost of every selected keyword.
pub fn fig_profit_cost_scatter(reports: &[SolutionReport]) -> String {
    let mut out = String::from("strategy,budget,keyword_id,adgroup_id,match,exp_profit,exp_cost\n");
    for r in sorted(reports) {
        for k in &r.keywords {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.strategy, r.budget, k.id, k.adgroup, k.r#match, k.exp_profit, k.exp_cost
            );
        }
    }
    out
}

/// Number of selected keywords per strategy and budget.
pub fn fig_selected_counts(reports: &[SolutionReport]) -> String {
    let mut out = String::from("strategy,budget,n_selected\n");
    for r in sorted(reports) {
        let _ = writeln!(out, "{},{},{}", r.strategy, r.budget, r.n_selected);
    }
    out
}

/// Matching-type shares of the selected keywords per strategy and budget.
pub fn fig_match_percentages(reports: &[SolutionReport]) -> String {
    let mut out = String::from("strategy,budget,exact_pct,phrase_pct,broad_pct\n");
    for r in sorted(reports) {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.strategy, r.budget, r.match_pct.exact, r.match_pct.phrase, r.match_pct.broad
        );
    }
    out
}
