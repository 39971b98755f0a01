//! Advertising domain model and Monte Carlo evaluation: keywords,
//! ad-groups, targeting decisions, scenario sampling from fitted
//! posteriors, expected profit and cost, and the empirical probability of
//! staying within budget.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::imputation::{inverse_transform, AdGroupPosterior, IndexKind};
use crate::statcore::RngStream;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CampaignError {
    #[error("no posterior covers keyword '{keyword}' in ad-group '{adgroup}'")]
    MissingPosterior { adgroup: String, keyword: String },
    #[error("cost moments need at least two scenarios")]
    InsufficientScenarios,
    #[error("record for '{keyword}' is invalid: {reason}")]
    InvalidRecord { keyword: String, reason: String },
}

/// Calendar day, serialized as `YYYY/M/D` without zero padding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Day {
    pub year: u16,
    pub month: u8,
    pub day: u8,
}

impl Day {
    pub fn new(year: u16, month: u8, day: u8) -> Option<Day> {
        if (1..=12).contains(&month) && (1..=31).contains(&day) {
            Some(Day { year, month, day })
        } else {
            None
        }
    }
}

impl fmt::Display for Day {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.year, self.month, self.day)
    }
}

impl FromStr for Day {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split('/');
        let year = parts.next().and_then(|p| p.parse().ok());
        let month = parts.next().and_then(|p| p.parse().ok());
        let day = parts.next().and_then(|p| p.parse().ok());
        match (year, month, day, parts.next()) {
            (Some(y), Some(m), Some(d), None) => {
                Day::new(y, m, d).ok_or_else(|| format!("invalid date '{s}'"))
            }
            _ => Err(format!("invalid date '{s}'")),
        }
    }
}

/// Keyword matching type. `exact` is the narrowest targeting rule and
/// `broad` the widest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchType {
    Exact,
    Phrase,
    Broad,
}

impl MatchType {
    pub const ALL: [MatchType; 3] = [MatchType::Exact, MatchType::Phrase, MatchType::Broad];

    pub fn index(self) -> usize {
        match self {
            MatchType::Exact => 0,
            MatchType::Phrase => 1,
            MatchType::Broad => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            MatchType::Exact => "exact",
            MatchType::Phrase => "phrase",
            MatchType::Broad => "broad",
        }
    }

    pub fn from_label(s: &str) -> Option<MatchType> {
        match s {
            "exact" => Some(MatchType::Exact),
            "phrase" => Some(MatchType::Phrase),
            "broad" => Some(MatchType::Broad),
            _ => None,
        }
    }
}

/// One daily log row: the observed performance of a keyword under the
/// matching type chosen that day.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerformanceRecord {
    pub day: Day,
    pub keyword_id: String,
    pub adgroup_id: String,
    pub match_type: MatchType,
    pub impressions: u64,
    pub ctr: f64,
    pub vpc: f64,
    pub cpc: f64,
}

impl PerformanceRecord {
    pub fn validate(&self) -> Result<(), CampaignError> {
        let fail = |reason: String| CampaignError::InvalidRecord {
            keyword: self.keyword_id.clone(),
            reason,
        };
        if !(0.0..=1.0).contains(&self.ctr) {
            return Err(fail(format!("ctr {} outside [0, 1]", self.ctr)));
        }
        if self.vpc < 0.0 || !self.vpc.is_finite() {
            return Err(fail(format!("vpc {} negative or non-finite", self.vpc)));
        }
        if self.cpc < 0.0 || !self.cpc.is_finite() {
            return Err(fail(format!("cpc {} negative or non-finite", self.cpc)));
        }
        Ok(())
    }
}

/// A keyword is identified by its ad-group and its id; the same id in two
/// ad-groups is two distinct keywords.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct KeywordKey {
    pub adgroup_id: String,
    pub keyword_id: String,
}

/// One selectable keyword-matching combination.
#[derive(Clone, Debug, PartialEq)]
pub struct KeywordOption {
    pub keyword: usize,
    pub key: KeywordKey,
    pub match_type: MatchType,
    pub vpc: f64,
    pub cpc: f64,
}

/// The decision universe: every keyword with its three matching options.
/// Option indices are laid out as `3 * keyword + match_type.index()`.
#[derive(Clone, Debug)]
pub struct OptionSet {
    keywords: Vec<KeywordKey>,
    vpc: Vec<f64>,
    cpc: Vec<f64>,
}

impl OptionSet {
    pub fn new(keywords: Vec<KeywordKey>, vpc: Vec<f64>, cpc: Vec<f64>) -> Self {
        assert_eq!(keywords.len(), vpc.len());
        assert_eq!(keywords.len(), cpc.len());
        OptionSet { keywords, vpc, cpc }
    }

    pub fn n_keywords(&self) -> usize {
        self.keywords.len()
    }

    pub fn n_options(&self) -> usize {
        3 * self.keywords.len()
    }

    pub fn keywords(&self) -> &[KeywordKey] {
        &self.keywords
    }

    pub fn keyword_of(&self, option: usize) -> usize {
        option / 3
    }

    pub fn match_of(&self, option: usize) -> MatchType {
        MatchType::ALL[option % 3]
    }

    pub fn option_index(&self, keyword: usize, match_type: MatchType) -> usize {
        3 * keyword + match_type.index()
    }

    pub fn vpc(&self, keyword: usize) -> f64 {
        self.vpc[keyword]
    }

    pub fn cpc(&self, keyword: usize) -> f64 {
        self.cpc[keyword]
    }

    /// Margin `v − p` of the keyword owning `option`.
    pub fn margin(&self, option: usize) -> f64 {
        let k = self.keyword_of(option);
        self.vpc[k] - self.cpc[k]
    }

    pub fn option(&self, index: usize) -> KeywordOption {
        let k = self.keyword_of(index);
        KeywordOption {
            keyword: k,
            key: self.keywords[k].clone(),
            match_type: self.match_of(index),
            vpc: self.vpc[k],
            cpc: self.cpc[k],
        }
    }
}

/// Monte Carlo draws of (impressions, CTR) per option, shared by every
/// candidate decision so comparisons use common random numbers.
#[derive(Clone, Debug)]
pub struct ScenarioSet {
    t: usize,
    seed: RngStream,
    /// `impressions[opt * t + s]`
    impressions: Vec<f64>,
    /// `ctr[opt * t + s]`
    ctr: Vec<f64>,
}

impl ScenarioSet {
    pub fn from_draws(t: usize, seed: RngStream, impressions: Vec<f64>, ctr: Vec<f64>) -> Self {
        assert_eq!(impressions.len(), ctr.len());
        assert!(t > 0 && impressions.len() % t == 0);
        ScenarioSet { t, seed, impressions, ctr }
    }

    pub fn len(&self) -> usize {
        self.t
    }

    pub fn is_empty(&self) -> bool {
        self.t == 0
    }

    pub fn seed(&self) -> RngStream {
        self.seed
    }

    pub fn draw(&self, option: usize, scenario: usize) -> (f64, f64) {
        let i = option * self.t + scenario;
        (self.impressions[i], self.ctr[i])
    }

    /// Realized cost `d · c · p` of one option in one scenario.
    pub fn option_cost(&self, options: &OptionSet, option: usize, scenario: usize) -> f64 {
        let (d, c) = self.draw(option, scenario);
        d * c * options.cpc(options.keyword_of(option))
    }

    /// Realized profit `d · c · (v − p)` of one option in one scenario.
    pub fn option_profit(&self, options: &OptionSet, option: usize, scenario: usize) -> f64 {
        let (d, c) = self.draw(option, scenario);
        d * c * options.margin(option)
    }
}

/// Per-keyword targeting choice: a matching type or not selected.
/// One entry per keyword makes over-selection unrepresentable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetingDecision {
    choices: Vec<Option<MatchType>>,
}

impl TargetingDecision {
    pub fn empty(n_keywords: usize) -> Self {
        TargetingDecision { choices: vec![None; n_keywords] }
    }

    pub fn from_choices(choices: Vec<Option<MatchType>>) -> Self {
        TargetingDecision { choices }
    }

    pub fn n_keywords(&self) -> usize {
        self.choices.len()
    }

    pub fn choice(&self, keyword: usize) -> Option<MatchType> {
        self.choices[keyword]
    }

    pub fn select(&mut self, keyword: usize, match_type: MatchType) {
        self.choices[keyword] = Some(match_type);
    }

    pub fn n_selected(&self) -> usize {
        self.choices.iter().filter(|c| c.is_some()).count()
    }

    /// Option indices of the selected keywords, in keyword order.
    pub fn selected_options(&self, options: &OptionSet) -> Vec<usize> {
        assert_eq!(self.choices.len(), options.n_keywords());
        self.choices
            .iter()
            .enumerate()
            .filter_map(|(k, c)| c.map(|m| options.option_index(k, m)))
            .collect()
    }

    /// Fraction of selected keywords per matching type; all zero when
    /// nothing is selected.
    pub fn match_mix(&self) -> MatchMix {
        let mut counts = [0usize; 3];
        for c in self.choices.iter().flatten() {
            counts[c.index()] += 1;
        }
        let total: usize = counts.iter().sum();
        if total == 0 {
            return MatchMix { exact: 0.0, phrase: 0.0, broad: 0.0 };
        }
        MatchMix {
            exact: counts[0] as f64 / total as f64,
            phrase: counts[1] as f64 / total as f64,
            broad: counts[2] as f64 / total as f64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchMix {
    pub exact: f64,
    pub phrase: f64,
    pub broad: f64,
}

impl MatchMix {
    pub fn max(&self) -> f64 {
        self.exact.max(self.phrase).max(self.broad)
    }
}

/// Realized profit of a decision in one scenario.
pub fn profit(
    decision: &TargetingDecision,
    scenario: usize,
    options: &OptionSet,
    scenarios: &ScenarioSet,
) -> f64 {
    decision
        .selected_options(options)
        .iter()
        .map(|&opt| scenarios.option_profit(options, opt, scenario))
        .sum()
}

/// Realized cost of a decision in one scenario.
pub fn cost(
    decision: &TargetingDecision,
    scenario: usize,
    options: &OptionSet,
    scenarios: &ScenarioSet,
) -> f64 {
    decision
        .selected_options(options)
        .iter()
        .map(|&opt| scenarios.option_cost(options, opt, scenario))
        .sum()
}

/// Mean profit of a decision over all scenarios.
pub fn expected_profit(
    decision: &TargetingDecision,
    scenarios: &ScenarioSet,
    options: &OptionSet,
) -> f64 {
    let selected = decision.selected_options(options);
    let t = scenarios.len();
    let mut acc = 0.0;
    for s in 0..t {
        for &opt in &selected {
            acc += scenarios.option_profit(options, opt, s);
        }
    }
    acc / t as f64
}

/// Fraction of scenarios whose realized cost stays within the budget.
pub fn chance_probability(
    decision: &TargetingDecision,
    scenarios: &ScenarioSet,
    options: &OptionSet,
    budget: f64,
) -> f64 {
    let selected = decision.selected_options(options);
    let t = scenarios.len();
    let mut ok = 0usize;
    for s in 0..t {
        let c: f64 = selected
            .iter()
            .map(|&opt| scenarios.option_cost(options, opt, s))
            .sum();
        if c <= budget {
            ok += 1;
        }
    }
    ok as f64 / t as f64
}

/// Per-option sample mean and unbiased sample variance of the cost.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMoments {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

pub fn cost_moments(
    options: &OptionSet,
    scenarios: &ScenarioSet,
) -> Result<CostMoments, CampaignError> {
    let t = scenarios.len();
    if t < 2 {
        return Err(CampaignError::InsufficientScenarios);
    }
    let n = options.n_options();
    let mut mean = vec![0.0; n];
    let mut variance = vec![0.0; n];
    for opt in 0..n {
        let mut sum = 0.0;
        for s in 0..t {
            sum += scenarios.option_cost(options, opt, s);
        }
        let m = sum / t as f64;
        let mut ss = 0.0;
        for s in 0..t {
            let d = scenarios.option_cost(options, opt, s) - m;
            ss += d * d;
        }
        mean[opt] = m;
        variance[opt] = ss / (t as f64 - 1.0);
    }
    Ok(CostMoments { mean, variance })
}

/// Branch-and-bound search counters, attached to reports for solver runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub nodes_explored: u64,
    pub nodes_pruned: u64,
    /// Wall-clock time; excluded from serialized reports so repeated runs
    /// with one seed produce byte-identical files.
    #[serde(skip)]
    pub wall_ms: f64,
    pub truncated: bool,
    pub root_relaxation_bound: f64,
    /// `(nodes_explored, objective)` at each incumbent improvement.
    pub incumbent_trace: Vec<(u64, f64)>,
}

/// Per-keyword row of a solution report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeywordReport {
    pub id: String,
    pub adgroup: String,
    pub r#match: String,
    pub exp_profit: f64,
    pub exp_cost: f64,
}

/// Out-of-sample evaluation of one targeting decision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub budget: f64,
    pub alpha: f64,
    pub strategy: String,
    pub expected_profit: f64,
    pub alpha_hat_out_of_sample: f64,
    pub n_selected: usize,
    pub match_pct: MatchMix,
    pub keywords: Vec<KeywordReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search_stats: Option<SearchStats>,
}

/// Evaluates a decision on scenarios the optimizer never saw: expected
/// profit, empirical budget probability, selection counts, the matching
/// mix, and per-keyword profit/cost pairs.
pub fn evaluate_solution(
    decision: &TargetingDecision,
    fresh_scenarios: &ScenarioSet,
    options: &OptionSet,
    budget: f64,
    alpha: f64,
    strategy: &str,
) -> SolutionReport {
    let t = fresh_scenarios.len() as f64;
    let mut keywords = Vec::new();
    for (k, choice) in (0..options.n_keywords()).map(|k| (k, decision.choice(k))) {
        let Some(m) = choice else { continue };
        let opt = options.option_index(k, m);
        let mut p_sum = 0.0;
        let mut c_sum = 0.0;
        for s in 0..fresh_scenarios.len() {
            p_sum += fresh_scenarios.option_profit(options, opt, s);
            c_sum += fresh_scenarios.option_cost(options, opt, s);
        }
        keywords.push(KeywordReport {
            id: options.keywords()[k].keyword_id.clone(),
            adgroup: options.keywords()[k].adgroup_id.clone(),
            r#match: m.label().to_string(),
            exp_profit: p_sum / t,
            exp_cost: c_sum / t,
        });
    }
    SolutionReport {
        budget,
        alpha,
        strategy: strategy.to_string(),
        expected_profit: expected_profit(decision, fresh_scenarios, options),
        alpha_hat_out_of_sample: chance_probability(decision, fresh_scenarios, options, budget),
        n_selected: decision.n_selected(),
        match_pct: decision.match_mix(),
        keywords,
        search_stats: None,
    }
}

/// Builds the option universe and its scenario draws from historical
/// records and fitted per-ad-group posteriors.
///
/// Every keyword yields three options sharing the keyword's VPC/CPC
/// (record means). Scenario `s` picks one retained posterior draw per
/// ad-group for impressions and an independent one for CTRs, then reads
/// each keyword's own imputed row and back-transforms it, so a keyword's
/// observed history pins its scenario values while unobserved matching
/// types inherit posterior uncertainty.
pub fn build_options(
    records: &[PerformanceRecord],
    posteriors: &BTreeMap<String, AdGroupPosterior>,
    t: usize,
    seed: RngStream,
) -> Result<(OptionSet, ScenarioSet), CampaignError> {
    assert!(t >= 1, "scenario count must be at least 1");
    // Keyword universe with pooled vpc/cpc means, sorted for determinism.
    let mut acc: BTreeMap<KeywordKey, (f64, f64, usize)> = BTreeMap::new();
    for r in records {
        let key = KeywordKey {
            adgroup_id: r.adgroup_id.clone(),
            keyword_id: r.keyword_id.clone(),
        };
        let e = acc.entry(key).or_insert((0.0, 0.0, 0));
        e.0 += r.vpc;
        e.1 += r.cpc;
        e.2 += 1;
    }

    let mut keywords = Vec::with_capacity(acc.len());
    let mut vpc = Vec::with_capacity(acc.len());
    let mut cpc = Vec::with_capacity(acc.len());
    for (key, (v_sum, p_sum, n)) in &acc {
        keywords.push(key.clone());
        vpc.push(v_sum / *n as f64);
        cpc.push(p_sum / *n as f64);
    }
    let options = OptionSet::new(keywords, vpc, cpc);

    let n_opts = options.n_options();
    let mut impressions = vec![0.0; n_opts * t];
    let mut ctr = vec![0.0; n_opts * t];

    // Scenario draw indices per ad-group, independent per index family.
    let mut group_ids: Vec<&String> = posteriors.keys().collect();
    group_ids.sort();
    let mut row_of: BTreeMap<&KeywordKey, usize> = BTreeMap::new();
    for (k, key) in options.keywords().iter().enumerate() {
        row_of.insert(key, k);
    }

    for gid in group_ids {
        let post = &posteriors[gid];
        let n_draws_d = post.impressions.len();
        let n_draws_c = post.ctr.len();
        let mut rng = seed.derive("scenarios").derive(gid).rng();
        for s in 0..t {
            let u = rng.gen_range(0..n_draws_d);
            let w = rng.gen_range(0..n_draws_c);
            let d_mat = &post.impressions.imputed_draws[u];
            let c_mat = &post.ctr.imputed_draws[w];
            for (row, kw_id) in post.keywords.iter().enumerate() {
                let key = KeywordKey {
                    adgroup_id: gid.clone(),
                    keyword_id: kw_id.clone(),
                };
                let Some(&k) = row_of.get(&key) else { continue };
                for m in MatchType::ALL {
                    let opt = options.option_index(k, m);
                    let i = opt * t + s;
                    impressions[i] =
                        inverse_transform(d_mat[row][m.index()], IndexKind::Impressions);
                    ctr[i] = inverse_transform(c_mat[row][m.index()], IndexKind::Ctr);
                }
            }
        }
    }

    // Every keyword in the records must be covered by a posterior.
    for key in options.keywords() {
        let covered = posteriors
            .get(&key.adgroup_id)
            .map(|p| p.keywords.iter().any(|k| *k == key.keyword_id))
            .unwrap_or(false);
        if !covered {
            return Err(CampaignError::MissingPosterior {
                adgroup: key.adgroup_id.clone(),
                keyword: key.keyword_id.clone(),
            });
        }
    }

    Ok((options, ScenarioSet::from_draws(t, seed, impressions, ctr)))
}
