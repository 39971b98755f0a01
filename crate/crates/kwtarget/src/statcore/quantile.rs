//! Standard-normal CDF and quantile.
//!
//! The CDF uses Cody's rational Chebyshev approximations for erf/erfc
//! (relative error below 1e-15 in double precision). The quantile starts
//! from Acklam's rational approximation and polishes with Newton steps on
//! the CDF until the residual is below 1e-12 in probability space.

use super::StatError;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const FRAC_1_SQRT_2PI: f64 = 0.3989422804014326779;
const FRAC_1_SQRT_PI: f64 = 0.5641895835477562869;

/// Standard normal CDF Φ(x).
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal density φ(x).
pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal quantile: the `z` with `Φ(z) = alpha`.
///
/// Fails with [`StatError::OutOfRange`] unless `0 < alpha < 1`.
pub fn normal_quantile(alpha: f64) -> Result<f64, StatError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatError::OutOfRange(alpha));
    }
    let mut z = acklam_guess(alpha);
    // Newton on Φ(z) − α; quadratic convergence from the rational guess.
    for _ in 0..8 {
        let err = normal_cdf(z) - alpha;
        if err.abs() <= 1e-12 {
            break;
        }
        let step = err / normal_pdf(z);
        z -= step.clamp(-1.0, 1.0);
    }
    Ok(z)
}

/// Acklam's rational approximation of the inverse normal CDF
/// (absolute error about 1e-9, refined by the caller).
fn acklam_guess(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Complementary error function, Cody's algorithm.
fn erfc(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 0.46875 {
        1.0 - erf_small(x)
    } else if x > 0.0 {
        erfc_positive(ax)
    } else {
        2.0 - erfc_positive(ax)
    }
}

/// erf(x) for |x| ≤ 0.46875.
fn erf_small(x: f64) -> f64 {
    const A: [f64; 5] = [
        3.16112374387056560e+00,
        1.13864154151050156e+02,
        3.77485237685302021e+02,
        3.20937758913846947e+03,
        1.85777706184603153e-01,
    ];
    const B: [f64; 4] = [
        2.36012909523441209e+01,
        2.44024637934444173e+02,
        1.28261652607737228e+03,
        2.84423683343917062e+03,
    ];
    let z = x * x;
    let num = ((((A[4] * z + A[0]) * z + A[1]) * z + A[2]) * z + A[3]) * x;
    let den = (((z + B[0]) * z + B[1]) * z + B[2]) * z + B[3];
    num / den
}

/// erfc(x) for x > 0.46875.
fn erfc_positive(x: f64) -> f64 {
    const C: [f64; 9] = [
        5.64188496988670089e-01,
        8.88314979438837594e+00,
        6.61191906371416295e+01,
        2.98635138197400131e+02,
        8.81952221241769090e+02,
        1.71204761263407058e+03,
        2.05107837782607147e+03,
        1.23033935479799725e+03,
        2.15311535474403846e-08,
    ];
    const D: [f64; 8] = [
        1.57449261107098347e+01,
        1.17693950891312499e+02,
        5.37181101862009858e+02,
        1.62138957456669019e+03,
        3.29079923573345963e+03,
        4.36261909014324716e+03,
        3.43936767414372164e+03,
        1.23033935480374942e+03,
    ];
    const P: [f64; 6] = [
        3.05326634961232344e-01,
        3.60344899949804439e-01,
        1.25781726111229246e-01,
        1.60837851487422766e-02,
        6.58749161529837803e-04,
        1.63153871373020978e-02,
    ];
    const Q: [f64; 5] = [
        2.56852019228982242e+00,
        1.87295284992346047e+00,
        5.27905102951428412e-01,
        6.05183413124413191e-02,
        2.33520497626869185e-03,
    ];

    if x <= 4.0 {
        let mut num = C[8] * x;
        let mut den = x;
        for i in 0..7 {
            num = (num + C[i]) * x;
            den = (den + D[i]) * x;
        }
        (-x * x).exp() * (num + C[7]) / (den + D[7])
    } else if x < 26.5 {
        let z = 1.0 / (x * x);
        let mut num = P[5] * z;
        let mut den = z;
        for i in 0..4 {
            num = (num + P[i]) * z;
            den = (den + Q[i]) * z;
        }
        let r = z * (num + P[4]) / (den + Q[4]);
        (-x * x).exp() * (FRAC_1_SQRT_PI - r) / x
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent CDF oracle: adaptive Simpson quadrature of the normal
    /// density from 0 to |x|, combined with Φ(0) = 1/2 and symmetry.
    fn cdf_by_quadrature(x: f64) -> f64 {
        fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64, eps: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = normal_pdf(lm);
            let frm = normal_pdf(rm);
            let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * eps {
                left + right + (left + right - whole) / 15.0
            } else {
                simpson(a, m, fa, flm, fm, eps / 2.0, depth - 1)
                    + simpson(m, b, fm, frm, fb, eps / 2.0, depth - 1)
            }
        }
        let ax = x.abs();
        let half = simpson(
            0.0,
            ax,
            normal_pdf(0.0),
            normal_pdf(ax / 2.0),
            normal_pdf(ax),
            1e-14,
            40,
        );
        if x >= 0.0 {
            0.5 + half
        } else {
            0.5 - half
        }
    }

    #[test]
    fn cdf_matches_quadrature_oracle() {
        let mut x = -6.0;
        while x <= 6.0 {
            let expect = cdf_by_quadrature(x);
            assert!(
                (normal_cdf(x) - expect).abs() < 1e-12,
                "x={x}: {} vs {expect}",
                normal_cdf(x)
            );
            x += 0.25;
        }
    }

    #[test]
    fn quantile_trivial_and_tabled_values() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        assert!((normal_quantile(0.95).unwrap() - 1.64485).abs() < 1e-4);
        assert!((normal_quantile(0.975).unwrap() - 1.95996).abs() < 1e-4);
    }

    #[test]
    fn quantile_inverts_cdf_across_grid() {
        for i in 1..100 {
            let alpha = i as f64 / 100.0;
            let z = normal_quantile(alpha).unwrap();
            assert!(
                (normal_cdf(z) - alpha).abs() <= 1e-9,
                "alpha={alpha}, z={z}"
            );
        }
    }

    #[test]
    fn quantile_rejects_out_of_range() {
        for bad in [0.0, 1.0, -0.3, 1.5, f64::NAN] {
            assert!(matches!(
                normal_quantile(bad),
                Err(StatError::OutOfRange(_))
            ));
        }
    }

    #[test]
    fn quantile_symmetry() {
        for alpha in [0.01, 0.2, 0.35, 0.49] {
            let lo = normal_quantile(alpha).unwrap();
            let hi = normal_quantile(1.0 - alpha).unwrap();
            assert!((lo + hi).abs() < 1e-10);
        }
    }
}
