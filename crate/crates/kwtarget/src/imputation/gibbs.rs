//! Conjugate Gibbs sampling for one index family of one ad-group.
//!
//! Each sweep draws the mean vector given the completed data and current
//! covariance, then the covariance given the completed data and new mean,
//! then redraws every unobserved cell conditional on its row's observed
//! cells. Observed cells are never touched, so every retained draw
//! reproduces the inputs exactly where data exists.

use rand::Rng;

use crate::statcore::{
    conditional_mvn, sample_inverse_wishart, sample_mvn, MvnParams, SpdMatrix, Vec3, WishartSpec,
};

use super::{GibbsConfig, ImputeError, PosteriorDraws, PriorSpec, TransformedMatrix};

/// Full conditional of the mean vector: a normal with covariance
/// `(Λ0⁻¹ + n Σ⁻¹)⁻¹` and mean `Λn (Λ0⁻¹ μ0 + n Σ⁻¹ d̄)`, where `d̄` is
/// the column-mean vector of the completed data. With no data this is the
/// prior itself.
pub fn theta_full_conditional(
    data: &[Vec3],
    sigma: &SpdMatrix,
    prior: &PriorSpec,
) -> Result<MvnParams, ImputeError> {
    let n = data.len() as f64;
    let lambda0_inv = prior.mean_prior.cov.inverse();
    let sigma_inv = sigma.inverse();

    let mut precision = lambda0_inv.matrix().clone();
    for i in 0..3 {
        for j in 0..3 {
            precision[(i, j)] += n * sigma_inv.matrix()[(i, j)];
        }
    }

    let mut dbar = [0.0; 3];
    for row in data {
        for i in 0..3 {
            dbar[i] += row[i];
        }
    }
    if !data.is_empty() {
        for v in dbar.iter_mut() {
            *v /= n;
        }
    }

    let a = lambda0_inv.matrix().mul_vec(&prior.mean_prior.mean);
    let b = sigma_inv.matrix().mul_vec(&dbar);
    let rhs: Vec<f64> = (0..3).map(|i| a[i] + n * b[i]).collect();

    let lambda_n = SpdMatrix::new(precision.symmetrized())?.inverse();
    let mu_n = lambda_n.matrix().mul_vec(&rhs);
    Ok(MvnParams::new(mu_n, lambda_n)?)
}

/// One draw of the mean vector from its full conditional.
pub fn sample_theta<R: Rng>(
    data: &[Vec3],
    sigma: &SpdMatrix,
    prior: &PriorSpec,
    rng: &mut R,
) -> Result<Vec3, ImputeError> {
    let cond = theta_full_conditional(data, sigma, prior)?;
    let draw = sample_mvn(&cond, rng);
    Ok([draw[0], draw[1], draw[2]])
}

/// Full conditional of the covariance: inverse-Wishart with degrees of
/// freedom `ν0 + n` and scale `S0 + S_θ`, where `S_θ` sums the outer
/// products of the residuals around the current mean vector.
pub fn sigma_full_conditional(
    data: &[Vec3],
    theta: &Vec3,
    prior: &PriorSpec,
) -> Result<WishartSpec, ImputeError> {
    let mut scale = prior.cov_prior.scale().matrix().clone();
    for row in data {
        for i in 0..3 {
            for j in 0..3 {
                scale[(i, j)] += (row[i] - theta[i]) * (row[j] - theta[j]);
            }
        }
    }
    let dof = prior.cov_prior.dof() + data.len() as f64;
    Ok(WishartSpec::new(dof, SpdMatrix::new(scale.symmetrized())?)?)
}

/// One draw of the covariance matrix from its full conditional.
pub fn sample_sigma<R: Rng>(
    data: &[Vec3],
    theta: &Vec3,
    prior: &PriorSpec,
    rng: &mut R,
) -> Result<SpdMatrix, ImputeError> {
    let cond = sigma_full_conditional(data, theta, prior)?;
    Ok(sample_inverse_wishart(&cond, rng)?)
}

/// Completes one keyword row: observed entries pass through unchanged,
/// unobserved entries are drawn from their conditional normal given the
/// observed ones.
pub fn impute_row<R: Rng>(
    row: &Vec3,
    mask_row: &[bool; 3],
    theta: &Vec3,
    sigma: &SpdMatrix,
    rng: &mut R,
) -> Result<Vec3, ImputeError> {
    let observed_idx: Vec<usize> = (0..3).filter(|&i| mask_row[i]).collect();
    if observed_idx.len() == 3 {
        return Ok(*row);
    }
    let observed_vals: Vec<f64> = observed_idx.iter().map(|&i| row[i]).collect();
    let joint = MvnParams::new(theta.to_vec(), sigma.clone())?;
    let cond = conditional_mvn(&joint, &observed_idx, &observed_vals)?;
    let draw = sample_mvn(&cond, rng);

    let mut out = *row;
    let mut next = 0;
    for i in 0..3 {
        if !mask_row[i] {
            out[i] = draw[next];
            next += 1;
        }
    }
    Ok(out)
}

/// Runs the three-step sweep (mean, covariance, unobserved cells) for
/// `cfg.iterations` iterations and retains every `cfg.thinning`-th state
/// after burn-in. Starting values: the prior covariance scale (its mean
/// when defined) and observed column means for the unobserved cells.
pub fn run_gibbs(
    group_data: &TransformedMatrix,
    prior: &PriorSpec,
    cfg: &GibbsConfig,
) -> Result<PosteriorDraws, ImputeError> {
    cfg.validate()?;
    let mut rng = cfg.seed.rng();

    let mask = group_data.mask().clone();

    let mut sigma = prior
        .cov_prior
        .inverse_wishart_mean()
        .unwrap_or_else(|| prior.cov_prior.scale().clone());

    // Completed working copy; unobserved cells start at the observed
    // column means (prior mean as a last resort for empty columns).
    let col_means = group_data.observed_column_means();
    let mut completed: Vec<Vec3> = group_data
        .rows()
        .iter()
        .zip(mask.rows())
        .map(|(row, m)| {
            std::array::from_fn(|i| {
                if m[i] {
                    row[i]
                } else {
                    col_means[i].unwrap_or(prior.mean_prior.mean[i])
                }
            })
        })
        .collect();

    let retained = cfg.retained();
    let mut draws = PosteriorDraws {
        theta_draws: Vec::with_capacity(retained),
        sigma_draws: Vec::with_capacity(retained),
        imputed_draws: Vec::with_capacity(retained),
    };

    for sweep in 1..=cfg.iterations {
        let theta = sample_theta(&completed, &sigma, prior, &mut rng)?;
        sigma = sample_sigma(&completed, &theta, prior, &mut rng)?;
        for (row_idx, m) in mask.rows().iter().enumerate() {
            completed[row_idx] = impute_row(&completed[row_idx], m, &theta, &sigma, &mut rng)?;
        }

        let finite = theta.iter().all(|v| v.is_finite())
            && sigma.matrix().is_finite()
            && completed.iter().all(|r| r.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(ImputeError::DivergentChain);
        }

        if sweep > cfg.burn_in && (sweep - cfg.burn_in) % cfg.thinning == 0 {
            draws.theta_draws.push(theta);
            draws.sigma_draws.push(sigma.clone());
            draws.imputed_draws.push(completed.clone());
        }
    }
    debug_assert_eq!(draws.len(), retained);
    Ok(draws)
}
