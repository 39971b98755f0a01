//! Upper bounds for the branch-and-bound search.
//!
//! Two bounds are computed from the shared scenario set. The pruning bound
//! relaxes the chance constraint to a deterministic knapsack over each
//! option's trimmed mean cost (the mean of its `⌈αt⌉` cheapest scenario
//! costs): any decision whose cost stays within budget in at least `⌈αt⌉`
//! scenarios must satisfy that knapsack, so the bound can never cut off a
//! feasible incumbent. The reporting bound reformulates the relaxed chance
//! constraint as a second-order cone under a normal cost model
//! (`Σxμ + Φ⁻¹(α)·sqrt(Σx²σ²) ≤ B`) and upper-bounds it by iterating
//! outer linearizations of the cone term, each solved as a fractional
//! multiple-choice knapsack in its Lagrangian dual.

use crate::campaign::{CostMoments, OptionSet, ScenarioSet};
use crate::statcore::normal_quantile;

use super::SolverConfig;

/// Relative inflation applied to knapsack budgets so floating-point noise
/// in the scenario sums can never flip a feasible completion infeasible
/// inside a bound.
const BUDGET_SLACK: f64 = 1e-9;

/// Per-option statistics shared by ranking, bounding and reporting.
#[derive(Clone, Debug)]
pub struct OptionStats {
    /// Mean per-scenario profit `E[d·c]·(v−p)`.
    pub mean_profit: Vec<f64>,
    /// Mean per-scenario cost `E[d·c·p]`.
    pub mean_cost: Vec<f64>,
    /// Mean of the `⌈αt⌉` smallest scenario costs.
    pub trimmed_cost: Vec<f64>,
    /// Smallest scenario count whose fraction of `t` passes the `≥ α` test.
    pub required_count: usize,
}

impl OptionStats {
    pub fn compute(options: &OptionSet, scenarios: &ScenarioSet, alpha: f64) -> OptionStats {
        let t = scenarios.len();
        let n = options.n_options();
        let q = required_count(alpha, t);

        let mut mean_profit = vec![0.0; n];
        let mut mean_cost = vec![0.0; n];
        let mut trimmed_cost = vec![0.0; n];
        let mut buf = vec![0.0; t];
        for opt in 0..n {
            let mut p_sum = 0.0;
            let mut c_sum = 0.0;
            for s in 0..t {
                let c = scenarios.option_cost(options, opt, s);
                p_sum += scenarios.option_profit(options, opt, s);
                c_sum += c;
                buf[s] = c;
            }
            mean_profit[opt] = p_sum / t as f64;
            mean_cost[opt] = c_sum / t as f64;
            buf.sort_by(f64::total_cmp);
            trimmed_cost[opt] = buf[..q].iter().sum::<f64>() / q as f64;
        }
        OptionStats { mean_profit, mean_cost, trimmed_cost, required_count: q }
    }
}

/// Smallest scenario count `c` with `c / t ≥ α` under the same
/// floating-point comparison the feasibility check uses.
pub fn required_count(alpha: f64, t: usize) -> usize {
    let mut q = (alpha * t as f64).ceil() as usize;
    q = q.clamp(1, t);
    while q > 1 && (q - 1) as f64 / t as f64 >= alpha {
        q -= 1;
    }
    while (q as f64) / (t as f64) < alpha && q < t {
        q += 1;
    }
    q
}

/// Lagrangian-dual upper bound for the fractional multiple-choice
/// knapsack: at most one option per group, linear costs, budget `b`.
///
/// Every evaluated dual value is itself a valid bound, so the bisection
/// may stop anywhere; the minimum over evaluations is returned. A negative
/// remaining budget means no completion can be feasible.
pub(crate) fn mckp_dual_bound(
    groups: &[Vec<usize>],
    profit: &[f64],
    cost: &[f64],
    budget: f64,
) -> f64 {
    if budget < 0.0 {
        return f64::NEG_INFINITY;
    }

    // Dual value and selected-cost subgradient at a multiplier.
    let eval = |lambda: f64| -> (f64, f64) {
        let mut value = lambda * budget;
        let mut selected_cost = 0.0;
        for group in groups {
            let mut best = 0.0;
            let mut best_cost = 0.0;
            for &opt in group {
                let reduced = profit[opt] - lambda * cost[opt];
                if reduced > best {
                    best = reduced;
                    best_cost = cost[opt];
                }
            }
            value += best;
            selected_cost += best_cost;
        }
        (value, selected_cost)
    };

    let (h0, cost0) = eval(0.0);
    if cost0 <= budget {
        return h0;
    }
    let mut lambda_hi: f64 = 1.0;
    for group in groups {
        for &opt in group {
            if cost[opt] > 0.0 && profit[opt] > 0.0 {
                lambda_hi = lambda_hi.max(1.0 + profit[opt] / cost[opt]);
            }
        }
    }

    let mut best = h0;
    let mut lo = 0.0;
    let mut hi = lambda_hi;
    best = best.min(eval(hi).0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let (h, selected_cost) = eval(mid);
        best = best.min(h);
        if selected_cost > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    best
}

/// The subtree a bound is asked about: options forced in, options forced
/// out, and the option universe with its per-option mean profits.
pub struct Subproblem<'a> {
    pub options: &'a OptionSet,
    pub mean_profit: &'a [f64],
    pub accepted: &'a [usize],
    pub rejected: &'a [usize],
}

impl<'a> Subproblem<'a> {
    /// Option ids still free to choose, grouped per keyword: not accepted,
    /// not rejected, and not owned by a keyword that already has an
    /// accepted option.
    fn undecided_groups(&self) -> Vec<Vec<usize>> {
        let n_kw = self.options.n_keywords();
        let mut taken = vec![false; n_kw];
        for &opt in self.accepted {
            taken[self.options.keyword_of(opt)] = true;
        }
        let mut out: Vec<Vec<usize>> = Vec::new();
        for k in 0..n_kw {
            if taken[k] {
                continue;
            }
            let group: Vec<usize> = (0..3)
                .map(|m| 3 * k + m)
                .filter(|opt| !self.rejected.contains(opt))
                .collect();
            if !group.is_empty() {
                out.push(group);
            }
        }
        out
    }
}

/// Normal-model relaxation bound (the deterministic second-order-cone
/// reformulation of the chance constraint with `x` relaxed to `[0, 1]`).
///
/// Returns `None` when the accepted set alone violates the cone
/// constraint, which maps to pruning the subtree. The returned bound
/// includes the configured tolerance slack, `tol · (1 + |SUP|)`.
pub fn relaxation_bound(
    sub: &Subproblem,
    moments: &CostMoments,
    cfg: &SolverConfig,
) -> Option<f64> {
    let z = normal_quantile(cfg.alpha).expect("alpha validated in (0.5, 1)");
    let tol = cfg.bound_tolerance;

    let mut accepted_profit = 0.0;
    let mut mu_acc = 0.0;
    let mut var_acc = 0.0;
    for &opt in sub.accepted {
        accepted_profit += sub.mean_profit[opt];
        mu_acc += moments.mean[opt];
        var_acc += moments.variance[opt];
    }
    let budget = cfg.budget * (1.0 + BUDGET_SLACK) + BUDGET_SLACK;
    if mu_acc + z * var_acc.sqrt() > budget {
        return None;
    }

    let groups = sub.undecided_groups();
    let flat: Vec<usize> = groups.iter().flatten().copied().collect();
    let n = sub.options.n_options();

    // Outer linearization of the cone term. Each pass relaxes the cone to
    // the tangent plane at the current point, which only enlarges the
    // feasible set, so each pass yields a valid bound; keep the tightest.
    let mut x = vec![0.0; n];
    let mut best = f64::INFINITY;
    for _ in 0..8 {
        let mut quad = var_acc;
        for &opt in &flat {
            quad += moments.variance[opt] * x[opt] * x[opt];
        }
        let norm = quad.sqrt();
        let mut lin_cost = vec![0.0; n];
        for &opt in &flat {
            let w = if norm > 0.0 { moments.variance[opt] * x[opt] / norm } else { 0.0 };
            lin_cost[opt] = moments.mean[opt] + z * w;
        }
        let lin_base = if norm > 0.0 { mu_acc + z * var_acc / norm } else { mu_acc };
        let remaining = budget - lin_base;

        let bound = mckp_dual_bound(&groups, sub.mean_profit, &lin_cost, remaining);
        if bound == f64::NEG_INFINITY {
            return None;
        }
        best = best.min(accepted_profit + bound);

        // Re-linearize at the greedy selection for the current multiplier
        // scale: options worth taking at the budget's shadow price.
        let mut spent = 0.0;
        for opt in &mut x {
            *opt = 0.0;
        }
        let mut order: Vec<usize> = flat
            .iter()
            .copied()
            .filter(|&o| sub.mean_profit[o] > 0.0)
            .collect();
        order.sort_by(|&a, &b| {
            let ra = sub.mean_profit[a] / lin_cost[a].max(1e-300);
            let rb = sub.mean_profit[b] / lin_cost[b].max(1e-300);
            rb.total_cmp(&ra)
        });
        let mut kw_used = vec![false; sub.options.n_keywords()];
        for &opt in &order {
            let k = sub.options.keyword_of(opt);
            if kw_used[k] {
                continue;
            }
            let c = lin_cost[opt];
            if spent + c <= remaining {
                x[opt] = 1.0;
                spent += c;
                kw_used[k] = true;
            } else if c > 0.0 && remaining > spent {
                x[opt] = (remaining - spent) / c;
                spent = remaining;
                kw_used[k] = true;
            }
        }
    }

    Some(best + tol * (1.0 + best.abs()))
}
