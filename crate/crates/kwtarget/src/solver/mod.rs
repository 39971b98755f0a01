//! Branch-and-bound over keyword-matching combinations under a Monte
//! Carlo chance constraint on the campaign budget.
//!
//! The search shares one scenario set across all candidate decisions
//! (common random numbers), which makes both the objective and the
//! feasibility check deterministic functions of the decision, so
//! best-first search with sound bounds returns the exact optimum of the
//! sampled problem. Nodes are pruned by a trimmed-cost knapsack bound that
//! provably dominates every feasible completion, and by infeasibility of
//! the forced-in set (costs are non-negative, so infeasibility is
//! inherited by supersets). Incumbents come from greedily plunging
//! force-in children down the profit ranking.

mod bound;
mod oracle;

pub use bound::{relaxation_bound, required_count, OptionStats, Subproblem};
pub use oracle::brute_force_oracle;

use std::collections::BinaryHeap;
use std::time::Instant;

use crate::campaign::{
    chance_probability, cost_moments, expected_profit, OptionSet, ScenarioSet, SearchStats,
    TargetingDecision,
};
use crate::statcore::RngStream;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("no feasible solution: budget must be positive")]
    NoFeasibleSolution,
    #[error("instance too large for exhaustive verification: {keywords} keywords (cap {cap})")]
    TooLarge { keywords: usize, cap: usize },
    #[error("invalid solver configuration: {0}")]
    BadConfig(String),
}

/// Search parameters. Defaults: α = 0.95, 1,000 scenarios, a one-million
/// node cap and 1e-6 relative bound tolerance.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverConfig {
    pub budget: f64,
    pub alpha: f64,
    pub t: usize,
    pub node_limit: u64,
    pub bound_tolerance: f64,
    pub seed: RngStream,
}

impl SolverConfig {
    pub fn new(budget: f64) -> SolverConfig {
        SolverConfig {
            budget,
            alpha: 0.95,
            t: 1_000,
            node_limit: 1_000_000,
            bound_tolerance: 1e-6,
            seed: RngStream::new(0, 0),
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !self.budget.is_finite() {
            return Err(SolverError::BadConfig("budget must be finite".to_string()));
        }
        if !(self.alpha > 0.5 && self.alpha < 1.0) {
            return Err(SolverError::BadConfig(format!(
                "alpha {} outside (0.5, 1)",
                self.alpha
            )));
        }
        if self.t == 0 {
            return Err(SolverError::BadConfig("need at least one scenario".to_string()));
        }
        if self.node_limit == 0 {
            return Err(SolverError::BadConfig("node limit must be positive".to_string()));
        }
        if !(self.bound_tolerance > 0.0) {
            return Err(SolverError::BadConfig("bound tolerance must be positive".to_string()));
        }
        Ok(())
    }
}

/// Best feasible decision found, with its shared-scenario objective and
/// empirical budget probability.
#[derive(Clone, Debug, PartialEq)]
pub struct Incumbent {
    pub decision: TargetingDecision,
    pub objective: f64,
    pub alpha_hat: f64,
}

/// One branch-and-bound subproblem: everything before `cursor` in the
/// profit ranking is decided (either in `accepted` or implicitly
/// rejected), everything from `cursor` on is free.
#[derive(Clone, Debug)]
pub struct BbNode {
    pub cursor: usize,
    pub accepted: Vec<usize>,
    pub sup: f64,
}

/// Options ordered by decreasing mean profit on the shared scenarios,
/// ties broken by (ad-group, keyword, match).
pub fn rank_options(options: &OptionSet, scenarios: &ScenarioSet) -> Vec<usize> {
    let stats = OptionStats::compute(options, scenarios, 0.95);
    rank_by_profit(options, &stats.mean_profit)
}

fn rank_by_profit(options: &OptionSet, mean_profit: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..options.n_options()).collect();
    order.sort_by(|&a, &b| {
        mean_profit[b]
            .total_cmp(&mean_profit[a])
            .then_with(|| options.option(a).key.cmp(&options.option(b).key))
            .then_with(|| options.match_of(a).cmp(&options.match_of(b)))
    });
    order
}

/// Monte Carlo feasibility of a (possibly partial) decision: the fraction
/// of shared scenarios whose cost stays within budget, compared against α.
pub fn stochastic_feasible(
    decision: &TargetingDecision,
    scenarios: &ScenarioSet,
    options: &OptionSet,
    cfg: &SolverConfig,
) -> (bool, f64) {
    let alpha_hat = chance_probability(decision, scenarios, options, cfg.budget);
    (alpha_hat >= cfg.alpha, alpha_hat)
}

struct HeapEntry {
    sup: f64,
    seq: u64,
    node: BbNode,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.sup == other.sup && self.seq == other.seq
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sup
            .total_cmp(&other.sup)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct SearchContext<'a> {
    options: &'a OptionSet,
    scenarios: &'a ScenarioSet,
    cfg: &'a SolverConfig,
    stats: OptionStats,
    /// Rank positions of options with strictly positive mean profit.
    ranked: Vec<usize>,
    /// Per-option scenario costs, `cost[opt * t + s]`.
    cost: Vec<f64>,
}

impl<'a> SearchContext<'a> {
    fn new(options: &'a OptionSet, scenarios: &'a ScenarioSet, cfg: &'a SolverConfig) -> Self {
        let stats = OptionStats::compute(options, scenarios, cfg.alpha);
        let ranked: Vec<usize> = rank_by_profit(options, &stats.mean_profit)
            .into_iter()
            .filter(|&opt| stats.mean_profit[opt] > 0.0)
            .collect();
        let t = scenarios.len();
        let mut cost = vec![0.0; options.n_options() * t];
        for opt in 0..options.n_options() {
            for s in 0..t {
                cost[opt * t + s] = scenarios.option_cost(options, opt, s);
            }
        }
        SearchContext { options, scenarios, cfg, stats, ranked, cost }
    }

    fn decision_of(&self, accepted: &[usize]) -> TargetingDecision {
        let mut decision = TargetingDecision::empty(self.options.n_keywords());
        for &opt in accepted {
            decision.select(self.options.keyword_of(opt), self.options.match_of(opt));
        }
        decision
    }

    /// Canonical comparison objective: per-option mean profits summed in
    /// keyword order. Cheap, and identical between solver and oracle for
    /// identical decisions.
    fn cheap_objective(&self, accepted: &[usize]) -> f64 {
        let mut opts: Vec<usize> = accepted.to_vec();
        opts.sort_unstable();
        opts.iter().map(|&o| self.stats.mean_profit[o]).sum()
    }

    fn feasible(&self, accepted: &[usize]) -> (bool, f64) {
        let decision = self.decision_of(accepted);
        stochastic_feasible(&decision, self.scenarios, self.options, self.cfg)
    }

    /// Trimmed-cost knapsack bound over the node's free options. Sound for
    /// every feasible completion of `accepted` (see module docs).
    fn knapsack_sup(&self, accepted: &[usize], cursor: usize) -> f64 {
        let mut kw_taken = vec![false; self.options.n_keywords()];
        let mut base_profit = 0.0;
        let mut base_cost = 0.0;
        for &opt in accepted {
            kw_taken[self.options.keyword_of(opt)] = true;
            base_profit += self.stats.mean_profit[opt];
            base_cost += self.stats.trimmed_cost[opt];
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; self.options.n_keywords()];
        for &opt in &self.ranked[cursor.min(self.ranked.len())..] {
            let k = self.options.keyword_of(opt);
            if kw_taken[k] {
                continue;
            }
            if slot[k] == usize::MAX {
                slot[k] = groups.len();
                groups.push(Vec::with_capacity(3));
            }
            groups[slot[k]].push(opt);
        }
        let budget = self.cfg.budget * (1.0 + 1e-9) + 1e-9 - base_cost;
        let bound = bound::mckp_dual_bound(
            &groups,
            &self.stats.mean_profit,
            &self.stats.trimmed_cost,
            budget,
        );
        base_profit + bound
    }

    /// Greedy completion of `accepted` down the ranking from `start`,
    /// keeping every option that stays Monte Carlo feasible.
    fn plunge(&self, accepted: &[usize], start: usize) -> Vec<usize> {
        let t = self.scenarios.len();
        let q = self.stats.required_count;
        let mut kw_taken = vec![false; self.options.n_keywords()];
        let mut cost_vec = vec![0.0; t];
        for &opt in accepted {
            kw_taken[self.options.keyword_of(opt)] = true;
            for s in 0..t {
                cost_vec[s] += self.cost[opt * t + s];
            }
        }
        let mut selected = accepted.to_vec();
        let mut scratch = vec![0.0; t];
        for &opt in &self.ranked[start.min(self.ranked.len())..] {
            let k = self.options.keyword_of(opt);
            if kw_taken[k] {
                continue;
            }
            let mut within = 0usize;
            for s in 0..t {
                scratch[s] = cost_vec[s] + self.cost[opt * t + s];
                if scratch[s] <= self.cfg.budget {
                    within += 1;
                }
            }
            if within >= q {
                std::mem::swap(&mut cost_vec, &mut scratch);
                kw_taken[k] = true;
                selected.push(opt);
            }
        }
        selected
    }
}

/// Exact best-first branch-and-bound for the sampled chance-constrained
/// targeting problem. Returns the incumbent and search statistics; when
/// the node limit interrupts the search, the best incumbent so far is
/// returned with `truncated` set.
pub fn solve_bb_ksm(
    options: &OptionSet,
    scenarios: &ScenarioSet,
    cfg: &SolverConfig,
) -> Result<(Incumbent, SearchStats), SolverError> {
    cfg.validate()?;
    if cfg.budget <= 0.0 {
        return Err(SolverError::NoFeasibleSolution);
    }
    let start_time = Instant::now();
    let ctx = SearchContext::new(options, scenarios, cfg);

    let moments = cost_moments(options, scenarios).ok();
    let root_relaxation = match &moments {
        Some(m) => {
            let sub = Subproblem {
                options,
                mean_profit: &ctx.stats.mean_profit,
                accepted: &[],
                rejected: &[],
            };
            relaxation_bound(&sub, m, cfg).unwrap_or(f64::NEG_INFINITY)
        }
        None => f64::INFINITY,
    };

    let mut stats = SearchStats {
        nodes_explored: 0,
        nodes_pruned: 0,
        wall_ms: 0.0,
        truncated: false,
        root_relaxation_bound: root_relaxation,
        incumbent_trace: Vec::new(),
    };

    // The empty decision is always feasible for a positive budget.
    let mut best_accepted: Vec<usize> = Vec::new();
    let mut inf = 0.0;
    stats.incumbent_trace.push((0, 0.0));

    let consider = |candidate: Vec<usize>,
                        ctx: &SearchContext,
                        inf: &mut f64,
                        best: &mut Vec<usize>,
                        stats: &mut SearchStats| {
        let cheap = ctx.cheap_objective(&candidate);
        if cheap > *inf && ctx.feasible(&candidate).0 {
            *inf = cheap;
            *best = candidate;
            stats.incumbent_trace.push((stats.nodes_explored, cheap));
        }
    };

    // Root incumbent from a full greedy pass.
    consider(ctx.plunge(&[], 0), &ctx, &mut inf, &mut best_accepted, &mut stats);

    let prune_margin = |inf: f64| 1e-9 * (1.0 + inf.abs());

    let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::new();
    let mut seq = 0u64;
    let root_sup = ctx.knapsack_sup(&[], 0);
    heap.push(HeapEntry {
        sup: root_sup,
        seq,
        node: BbNode { cursor: 0, accepted: Vec::new(), sup: root_sup },
    });

    while let Some(entry) = heap.pop() {
        let node = entry.node;
        // Best-first: once the best bound cannot beat the incumbent, no
        // node can.
        if node.sup <= inf - prune_margin(inf) {
            stats.nodes_pruned += 1 + heap.len() as u64;
            break;
        }
        if stats.nodes_explored >= cfg.node_limit {
            stats.truncated = true;
            break;
        }
        stats.nodes_explored += 1;

        // Branch position: first free option at or after the cursor.
        let mut kw_taken = vec![false; options.n_keywords()];
        for &opt in &node.accepted {
            kw_taken[options.keyword_of(opt)] = true;
        }
        let mut pos = node.cursor;
        while pos < ctx.ranked.len() && kw_taken[options.keyword_of(ctx.ranked[pos])] {
            pos += 1;
        }
        if pos >= ctx.ranked.len() {
            continue; // leaf: its decision was already considered
        }
        let branch_opt = ctx.ranked[pos];

        // Force-in child.
        let mut accepted_in = node.accepted.clone();
        accepted_in.push(branch_opt);
        if ctx.feasible(&accepted_in).0 {
            consider(
                ctx.plunge(&accepted_in, pos + 1),
                &ctx,
                &mut inf,
                &mut best_accepted,
                &mut stats,
            );
            let sup_in = ctx.knapsack_sup(&accepted_in, pos + 1).min(node.sup);
            if sup_in > inf - prune_margin(inf) {
                seq += 1;
                heap.push(HeapEntry {
                    sup: sup_in,
                    seq,
                    node: BbNode { cursor: pos + 1, accepted: accepted_in, sup: sup_in },
                });
            } else {
                stats.nodes_pruned += 1;
            }
        } else {
            stats.nodes_pruned += 1;
        }

        // Force-out child.
        let sup_out = ctx.knapsack_sup(&node.accepted, pos + 1).min(node.sup);
        if sup_out > inf - prune_margin(inf) {
            seq += 1;
            heap.push(HeapEntry {
                sup: sup_out,
                seq,
                node: BbNode { cursor: pos + 1, accepted: node.accepted, sup: sup_out },
            });
        } else {
            stats.nodes_pruned += 1;
        }
    }

    let decision = ctx.decision_of(&best_accepted);
    let objective = expected_profit(&decision, scenarios, options);
    let alpha_hat = chance_probability(&decision, scenarios, options, cfg.budget);
    stats.wall_ms = start_time.elapsed().as_secs_f64() * 1e3;
    Ok((Incumbent { decision, objective, alpha_hat }, stats))
}
