//! Special functions and small distribution helpers.
//!
//! `erf`/`erfc` come from `libm` (musl port, about 1 ulp). `erf_inv` starts
//! from the `statrs` approximation and is polished with Newton steps.

use std::f64::consts::SQRT_2;

pub use libm::{erf, erfc};
use statrs::function::gamma::ln_gamma;

/// Inverse error function on `(-1, 1)`, accurate to a few ulps.
pub fn erf_inv(x: f64) -> f64 {
    if !(x > -1.0 && x < 1.0) {
        return statrs::function::erf::erf_inv(x);
    }
    let mut y = statrs::function::erf::erf_inv(x);
    // d/dy erf(y) = 2/sqrt(pi) exp(-y^2)
    for _ in 0..3 {
        let err = if x > 0.5 {
            (1.0 - x) - erfc(y)
        } else if x < -0.5 {
            erfc(-y) - (1.0 + x)
        } else {
            erf(y) - x
        };
        let step = err / (std::f64::consts::FRAC_2_SQRT_PI * (-y * y).exp());
        if !step.is_finite() {
            break;
        }
        y -= step;
    }
    y
}

/// `1 - erf(sqrt(2))`: chance a normal draw lands beyond two standard deviations.
pub fn two_sigma_tail() -> f64 {
    erfc(SQRT_2)
}

/// `erf(0.1 / sqrt(2))`: chance a normal draw lands within 0.1 standard deviations.
pub fn tenth_sigma_mass() -> f64 {
    erf(0.1 / SQRT_2)
}

/// CDF of `|N(0, sigma^2)|`. A zero `sigma` is the point mass at 0.
pub fn half_normal_cdf(v: f64, sigma: f64) -> f64 {
    if v < 0.0 {
        0.0
    } else if sigma <= 0.0 {
        1.0
    } else {
        erf(v / (SQRT_2 * sigma))
    }
}

/// Standard normal upper tail `P(Z > z)`.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    SQRT_2 * erf_inv(2.0 * p - 1.0)
}

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Binomial point mass in log space.
pub fn binomial_ln_pmf(n: u64, p: f64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if p <= 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p >= 1.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p()
}

/// `P(X >= k)` for `X ~ Binomial(n, p)`, summed term by term.
///
/// Sums whichever tail is shorter from the mode so tiny upper tails keep
/// their relative precision.
pub fn binomial_upper_tail(n: u64, p: f64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    let mode = ((n as f64 + 1.0) * p).floor() as u64;
    if k > mode {
        let mut total = 0.0;
        for i in k..=n {
            let term = binomial_ln_pmf(n, p, i).exp();
            total += term;
            if term < total * 1e-17 && i > k + 8 {
                break;
            }
        }
        total.min(1.0)
    } else {
        let lower: f64 = (0..k).map(|i| binomial_ln_pmf(n, p, i).exp()).sum();
        (1.0 - lower).clamp(0.0, 1.0)
    }
}

/// Nearest-rank percentile (`p` in percent, `0 < p <= 100`) of unsorted data.
///
/// Returns the `ceil(p/100 * n)`-th smallest value. `data` is reordered.
pub fn nearest_rank(data: &mut [f64], p: f64) -> f64 {
    let n = data.len();
    debug_assert!(n > 0);
    let rank = nearest_rank_index(n, p);
    let (_, v, _) = data.select_nth_unstable_by(rank, f64::total_cmp);
    *v
}

/// Zero-based index used by [`nearest_rank`].
pub fn nearest_rank_index(n: usize, p: f64) -> usize {
    let rank = (p / 100.0 * n as f64 - 1e-9).ceil() as usize;
    rank.clamp(1, n) - 1
}
