//! Property tests for the numeric core: Cholesky reconstruction on random
//! SPD matrices, conditional-normal consistency, quantile/CDF inversion,
//! transform bijectivity, and evaluator linearity.

use proptest::prelude::*;

use kwtarget::campaign::{
    cost, profit, KeywordKey, MatchType, OptionSet, ScenarioSet, TargetingDecision,
};
use kwtarget::imputation::{
    inverse_transform, log_transform, logit_transform, IndexKind,
};
use kwtarget::statcore::{
    cholesky, conditional_mvn, normal_cdf, normal_quantile, Matrix, MvnParams, RngStream,
    SpdMatrix,
};

/// Random SPD matrix as BᵀB + εI from arbitrary entries.
fn spd_from_entries(entries: &[f64; 9], eps: f64) -> SpdMatrix {
    let b = Matrix::from_rows(&[
        &entries[0..3],
        &entries[3..6],
        &entries[6..9],
    ]);
    let mut a = b.transpose().mat_mul(&b);
    for i in 0..3 {
        a[(i, i)] += eps;
    }
    SpdMatrix::new(a.symmetrized()).expect("BᵀB + εI is SPD")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn cholesky_reconstructs_random_spd(
        entries in prop::array::uniform9(-10.0f64..10.0),
        eps in 1e-6f64..1.0,
    ) {
        let a = spd_from_entries(&entries, eps);
        let l = cholesky(a.matrix()).unwrap();
        let recon = l.mat_mul(&l.transpose());
        let mut max_err: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                max_err = max_err.max((recon[(i, j)] - a.matrix()[(i, j)]).abs());
            }
        }
        prop_assert!(max_err <= 1e-10 * a.matrix().max_abs());
        // Lower triangular with positive diagonal.
        for i in 0..3 {
            prop_assert!(l[(i, i)] > 0.0);
            for j in i + 1..3 {
                prop_assert_eq!(l[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn conditional_covariance_never_exceeds_marginal(
        entries in prop::array::uniform9(-5.0f64..5.0),
        eps in 1e-3f64..1.0,
        observed in 0usize..3,
        value in -20.0f64..20.0,
    ) {
        let covariance = spd_from_entries(&entries, eps);
        let p = MvnParams::new(vec![0.0; 3], covariance.clone()).unwrap();
        let cond = conditional_mvn(&p, &[observed], &[value]).unwrap();
        let free: Vec<usize> = (0..3).filter(|i| *i != observed).collect();
        for (r, &i) in free.iter().enumerate() {
            prop_assert!(
                cond.cov.matrix()[(r, r)] <= covariance.matrix()[(i, i)] + 1e-12,
                "conditional variance grew for coordinate {}", i
            );
        }
        // The conditional covariance cannot depend on the observed value.
        let cond2 = conditional_mvn(&p, &[observed], &[-value]).unwrap();
        prop_assert_eq!(cond.cov, cond2.cov);
    }

    #[test]
    fn conditioning_on_uncorrelated_block_is_marginal(
        d in prop::array::uniform3(0.1f64..5.0),
        rho in -0.9f64..0.9,
        value in -10.0f64..10.0,
    ) {
        // Coordinates 0 and 1 correlate; coordinate 2 is independent.
        let c01 = rho * (d[0] * d[1]).sqrt();
        let cov = SpdMatrix::from_rows(&[
            &[d[0], c01, 0.0],
            &[c01, d[1], 0.0],
            &[0.0, 0.0, d[2]],
        ]).unwrap();
        let p = MvnParams::new(vec![1.0, -1.0, 2.0], cov).unwrap();
        let cond = conditional_mvn(&p, &[2], &[value]).unwrap();
        prop_assert!((cond.mean[0] - 1.0).abs() < 1e-12);
        prop_assert!((cond.mean[1] + 1.0).abs() < 1e-12);
        prop_assert!((cond.cov.matrix()[(0, 0)] - d[0]).abs() < 1e-12);
        prop_assert!((cond.cov.matrix()[(1, 1)] - d[1]).abs() < 1e-12);
    }

    #[test]
    fn quantile_inverts_cdf(alpha in 0.001f64..0.999) {
        let z = normal_quantile(alpha).unwrap();
        prop_assert!((normal_cdf(z) - alpha).abs() <= 1e-9);
    }

    #[test]
    fn transforms_round_trip(
        d in 0.0f64..1e7,
        c in 0.0f64..=1.0,
    ) {
        let eps = 1e-6;
        let x = log_transform(d, eps).unwrap();
        let back = inverse_transform(x, IndexKind::Impressions);
        prop_assert!((back - d.max(eps)).abs() <= 1e-9 * d.max(1.0));

        let y = logit_transform(c, eps).unwrap();
        let back = inverse_transform(y, IndexKind::Ctr);
        prop_assert!((back - c.clamp(eps, 1.0 - eps)).abs() <= 1e-9);
    }

    #[test]
    fn profit_and_cost_add_over_disjoint_decisions(
        volumes in prop::collection::vec(0.0f64..500.0, 6),
        ctrs in prop::collection::vec(0.0f64..1.0, 6),
        split in prop::array::uniform6(prop::bool::ANY),
    ) {
        let n_kw = 6;
        let keywords: Vec<KeywordKey> = (0..n_kw)
            .map(|k| KeywordKey { adgroup_id: "g".into(), keyword_id: format!("kw-{k}") })
            .collect();
        let options = OptionSet::new(keywords, vec![2.0; n_kw], vec![0.7; n_kw]);
        let t = 3;
        let n = options.n_options();
        let mut d = vec![0.0; n * t];
        let mut c = vec![0.0; n * t];
        for k in 0..n_kw {
            let opt = options.option_index(k, MatchType::Broad);
            for s in 0..t {
                d[opt * t + s] = volumes[k] * (s + 1) as f64;
                c[opt * t + s] = ctrs[k];
            }
        }
        let scen = ScenarioSet::from_draws(t, RngStream::new(0, 0), d, c);

        let mut left = TargetingDecision::empty(n_kw);
        let mut right = TargetingDecision::empty(n_kw);
        let mut both = TargetingDecision::empty(n_kw);
        for k in 0..n_kw {
            both.select(k, MatchType::Broad);
            if split[k] {
                left.select(k, MatchType::Broad);
            } else {
                right.select(k, MatchType::Broad);
            }
        }
        for s in 0..t {
            let p_sum = profit(&left, s, &options, &scen) + profit(&right, s, &options, &scen);
            prop_assert!((profit(&both, s, &options, &scen) - p_sum).abs() <= 1e-9);
            let c_sum = cost(&left, s, &options, &scen) + cost(&right, s, &options, &scen);
            prop_assert!((cost(&both, s, &options, &scen) - c_sum).abs() <= 1e-9);
        }
    }
}
