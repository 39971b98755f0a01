//! Seeded synthetic campaign generator.
//!
//! Produces format-compatible datasets with known ground truth for
//! recovery testing. Each ad-group gets true mean vectors and covariances
//! for both index families; each keyword draws one latent index vector per
//! family, constant across days, and each (keyword, day) logs exactly one
//! observed matching type, mirroring the logging regime where only the
//! chosen type's performance is recorded.
//!
//! When a group has enough keywords, the latent vectors are rescaled to
//! carry the true mean and covariance as their exact sample moments, so
//! the sidecar values are the exact data-generating moments of the emitted
//! sample and recovery tolerances test the estimator rather than the
//! generator's sampling noise.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::campaign::{Day, MatchType, PerformanceRecord};
use crate::imputation::sigmoid;
use crate::statcore::{sample_mvn, sample_mvn_exact_moments, Matrix, MvnParams, RngStream, SpdMatrix};

/// True distribution parameters for one ad-group, both index families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupTruth {
    pub adgroup_id: String,
    pub impressions: MvnParams,
    pub ctr: MvnParams,
}

/// Ground-truth sidecar written next to generated datasets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthSidecar {
    pub seed: RngStream,
    pub days: usize,
    pub type_probs: [f64; 3],
    pub groups: Vec<GroupTruth>,
    /// Keyword ids per group, in matrix row order.
    pub keywords: Vec<Vec<String>>,
}

/// Synthetic campaign layout and distributions.
#[derive(Clone, Debug)]
pub struct SyntheticSpec {
    pub truths: Vec<GroupTruth>,
    pub keywords_per_group: Vec<usize>,
    pub days: usize,
    /// Probability that each matching type is the one observed on a given
    /// (keyword, day); must sum to 1.
    pub type_probs: [f64; 3],
    pub vpc_range: (f64, f64),
    pub cpc_range: (f64, f64),
    pub seed: RngStream,
}

impl SyntheticSpec {
    /// Small benchmark: 5 ad-groups of 10 keywords over 40 days, uniform
    /// observed-type probabilities.
    pub fn benchmark_s(seed: RngStream) -> SyntheticSpec {
        SyntheticSpec::sized(5, &vec![10; 5], 40, seed)
    }

    /// Large benchmark mirroring the scale of a multi-year campaign log:
    /// 34 ad-groups totalling 627 keywords.
    pub fn benchmark_l(seed: RngStream) -> SyntheticSpec {
        let mut counts = vec![18usize; 34];
        for c in counts.iter_mut().take(15) {
            *c = 19;
        }
        debug_assert_eq!(counts.iter().sum::<usize>(), 627);
        SyntheticSpec::sized(34, &counts, 40, seed)
    }

    fn sized(m: usize, keywords_per_group: &[usize], days: usize, seed: RngStream) -> SyntheticSpec {
        SyntheticSpec {
            truths: random_truths(m, seed),
            keywords_per_group: keywords_per_group.to_vec(),
            days,
            type_probs: [1.0 / 3.0; 3],
            vpc_range: (0.4, 3.5),
            cpc_range: (0.25, 0.8),
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.truths.len() != self.keywords_per_group.len() {
            return Err("one keyword count per ad-group required".to_string());
        }
        if self.days == 0 {
            return Err("need at least one day".to_string());
        }
        let p_sum: f64 = self.type_probs.iter().sum();
        if (p_sum - 1.0).abs() > 1e-9 || self.type_probs.iter().any(|p| *p < 0.0) {
            return Err("type probabilities must be non-negative and sum to 1".to_string());
        }
        if self.vpc_range.0 > self.vpc_range.1 || self.cpc_range.0 > self.cpc_range.1 {
            return Err("value ranges must be ordered".to_string());
        }
        Ok(())
    }
}

/// Draws per-group true parameters: log-impression means around
/// `ln(100)..ln(270)`, logit-CTR means around 15–35% CTR, moderate
/// standard deviations and positive cross-type correlations.
pub fn random_truths(m: usize, seed: RngStream) -> Vec<GroupTruth> {
    let mut truths = Vec::with_capacity(m);
    for j in 0..m {
        let adgroup_id = format!("ad-group-{:02}", j + 1);
        let mut rng = seed.derive("truths").derive(&adgroup_id).rng();
        let theta_d: Vec<f64> = (0..3).map(|_| rng.gen_range(4.6..5.6)).collect();
        let theta_c: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.7..-0.6)).collect();
        let sigma_d = random_spd(&mut rng, 0.35, 0.6);
        let sigma_c = random_spd(&mut rng, 0.25, 0.5);
        truths.push(GroupTruth {
            adgroup_id,
            impressions: MvnParams::new(theta_d, sigma_d).expect("finite"),
            ctr: MvnParams::new(theta_c, sigma_c).expect("finite"),
        });
    }
    truths
}

/// Random 3×3 SPD matrix with standard deviations in `[sd_lo, sd_hi]` and
/// positive correlations; redrawn until the correlation matrix is
/// positive definite.
fn random_spd<R: Rng>(rng: &mut R, sd_lo: f64, sd_hi: f64) -> SpdMatrix {
    loop {
        let sd: Vec<f64> = (0..3).map(|_| rng.gen_range(sd_lo..sd_hi)).collect();
        let rho: Vec<f64> = (0..3).map(|_| rng.gen_range(0.1..0.55)).collect();
        let mut m = Matrix::zeros(3);
        for i in 0..3 {
            m[(i, i)] = sd[i] * sd[i];
        }
        m[(0, 1)] = rho[0] * sd[0] * sd[1];
        m[(1, 0)] = m[(0, 1)];
        m[(0, 2)] = rho[1] * sd[0] * sd[2];
        m[(2, 0)] = m[(0, 2)];
        m[(1, 2)] = rho[2] * sd[1] * sd[2];
        m[(2, 1)] = m[(1, 2)];
        if let Ok(spd) = SpdMatrix::new(m) {
            return spd;
        }
    }
}

/// Generates the synthetic dataset and its ground-truth sidecar.
/// Deterministic given the spec's seed.
pub fn generate_synthetic(
    spec: &SyntheticSpec,
) -> Result<(Vec<PerformanceRecord>, TruthSidecar), String> {
    spec.validate()?;
    let mut records = Vec::new();
    let mut keywords_by_group = Vec::with_capacity(spec.truths.len());
    let mut next_keyword = 1usize;

    for (truth, &n_kw) in spec.truths.iter().zip(&spec.keywords_per_group) {
        let mut rng = spec.seed.derive("synth").derive(&truth.adgroup_id).rng();
        let keyword_ids: Vec<String> = (0..n_kw)
            .map(|i| format!("keyword-{:03}", next_keyword + i))
            .collect();
        next_keyword += n_kw;

        // Latent per-keyword index vectors; exact sample moments when the
        // group is large enough for the rescaling to be well defined.
        let draw_family = |p: &MvnParams, rng: &mut rand_chacha::ChaCha8Rng| -> Vec<Vec<f64>> {
            if n_kw > 4 {
                sample_mvn_exact_moments(p, n_kw, rng).expect("valid truth covariance")
            } else {
                (0..n_kw).map(|_| sample_mvn(p, rng)).collect()
            }
        };
        let latent_d = draw_family(&truth.impressions, &mut rng);
        let latent_c = draw_family(&truth.ctr, &mut rng);

        let vpc: Vec<f64> = (0..n_kw)
            .map(|_| rng.gen_range(spec.vpc_range.0..=spec.vpc_range.1))
            .collect();
        let cpc: Vec<f64> = (0..n_kw)
            .map(|_| rng.gen_range(spec.cpc_range.0..=spec.cpc_range.1))
            .collect();

        for (k, keyword_id) in keyword_ids.iter().enumerate() {
            for day_idx in 0..spec.days {
                let u: f64 = rng.gen();
                let m = if u < spec.type_probs[0] {
                    MatchType::Exact
                } else if u < spec.type_probs[0] + spec.type_probs[1] {
                    MatchType::Phrase
                } else {
                    MatchType::Broad
                };
                let i = m.index();
                records.push(PerformanceRecord {
                    day: day_for(day_idx),
                    keyword_id: keyword_id.clone(),
                    adgroup_id: truth.adgroup_id.clone(),
                    match_type: m,
                    impressions: latent_d[k][i].exp().round().max(0.0) as u64,
                    ctr: sigmoid(latent_c[k][i]),
                    vpc: vpc[k],
                    cpc: cpc[k],
                });
            }
        }
        keywords_by_group.push(keyword_ids);
    }

    let sidecar = TruthSidecar {
        seed: spec.seed,
        days: spec.days,
        type_probs: spec.type_probs,
        groups: spec.truths.clone(),
        keywords: keywords_by_group,
    };
    Ok((records, sidecar))
}

/// Simple calendar scheme: 30-day months starting 2012/1/1, always valid.
fn day_for(index: usize) -> Day {
    let year = 2012 + (index / 360) as u16;
    let month = ((index % 360) / 30 + 1) as u8;
    let day = ((index % 30) + 1) as u8;
    Day::new(year, month, day).expect("constructed in range")
}
