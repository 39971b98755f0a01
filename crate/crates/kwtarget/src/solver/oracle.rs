//! Exhaustive verification oracle for small instances.
//!
//! Enumerates every per-keyword choice in {none, exact, phrase, broad},
//! keeps the Monte Carlo feasible decision with the highest mean profit on
//! the shared scenario set, and breaks exact ties toward fewer selected
//! keywords and then the lexicographically smaller choice vector. The
//! solver must reproduce this objective exactly under common random
//! numbers.

use crate::campaign::{
    chance_probability, expected_profit, MatchType, OptionSet, ScenarioSet, TargetingDecision,
};

use super::bound::{required_count, OptionStats};
use super::{Incumbent, SolverConfig, SolverError};

/// Keyword count above which enumeration (4^K assignments) is refused.
pub const ORACLE_KEYWORD_CAP: usize = 12;

struct Dfs<'a> {
    options: &'a OptionSet,
    mean_profit: &'a [f64],
    cost: &'a [f64],
    t: usize,
    q: usize,
    budget: f64,
    /// `levels[d]` holds the per-scenario cost of `d` selected options.
    levels: Vec<Vec<f64>>,
    choices: Vec<Option<MatchType>>,
    best_choices: Vec<Option<MatchType>>,
    best_profit: f64,
    best_selected: usize,
    found: bool,
}

impl Dfs<'_> {
    fn run(&mut self, keyword: usize, profit: f64, selected: usize) {
        if keyword == self.options.n_keywords() {
            let within = self.levels[selected]
                .iter()
                .filter(|&&c| c <= self.budget)
                .count();
            if within < self.q {
                return;
            }
            let better = profit > self.best_profit
                || (profit == self.best_profit
                    && (selected < self.best_selected
                        || (selected == self.best_selected
                            && lex_less(&self.choices, &self.best_choices))));
            if !self.found || better {
                self.found = true;
                self.best_profit = profit;
                self.best_selected = selected;
                self.best_choices = self.choices.clone();
            }
            return;
        }
        // Not selected first: the scan order makes the lexicographic
        // tie-break natural (none < exact < phrase < broad).
        self.choices[keyword] = None;
        self.run(keyword + 1, profit, selected);
        for m in MatchType::ALL {
            let opt = self.options.option_index(keyword, m);
            let (src, dst) = self.levels.split_at_mut(selected + 1);
            for s in 0..self.t {
                dst[0][s] = src[selected][s] + self.cost[opt * self.t + s];
            }
            self.choices[keyword] = Some(m);
            self.run(keyword + 1, profit + self.mean_profit[opt], selected + 1);
        }
        self.choices[keyword] = None;
    }
}

fn lex_less(a: &[Option<MatchType>], b: &[Option<MatchType>]) -> bool {
    let rank = |c: &Option<MatchType>| c.map(|m| m.index() + 1).unwrap_or(0);
    for (x, y) in a.iter().zip(b) {
        if rank(x) != rank(y) {
            return rank(x) < rank(y);
        }
    }
    false
}

pub fn brute_force_oracle(
    options: &OptionSet,
    scenarios: &ScenarioSet,
    cfg: &SolverConfig,
) -> Result<Incumbent, SolverError> {
    cfg.validate()?;
    if cfg.budget <= 0.0 {
        return Err(SolverError::NoFeasibleSolution);
    }
    let n_kw = options.n_keywords();
    if n_kw > ORACLE_KEYWORD_CAP {
        return Err(SolverError::TooLarge { keywords: n_kw, cap: ORACLE_KEYWORD_CAP });
    }

    let t = scenarios.len();
    let stats = OptionStats::compute(options, scenarios, cfg.alpha);

    let mut cost = vec![0.0; options.n_options() * t];
    for opt in 0..options.n_options() {
        for s in 0..t {
            cost[opt * t + s] = scenarios.option_cost(options, opt, s);
        }
    }

    let mut dfs = Dfs {
        options,
        mean_profit: &stats.mean_profit,
        cost: &cost,
        t,
        q: required_count(cfg.alpha, t),
        budget: cfg.budget,
        levels: vec![vec![0.0; t]; n_kw + 1],
        choices: vec![None; n_kw],
        best_choices: vec![None; n_kw],
        best_profit: 0.0,
        best_selected: 0,
        found: false,
    };
    dfs.run(0, 0.0, 0);

    // The empty decision is feasible for any positive budget, so a best
    // choice vector always exists.
    let decision = TargetingDecision::from_choices(dfs.best_choices);
    let objective = expected_profit(&decision, scenarios, options);
    let alpha_hat = chance_probability(&decision, scenarios, options, cfg.budget);
    Ok(Incumbent { decision, objective, alpha_hat })
}
