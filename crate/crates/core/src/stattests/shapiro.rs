//! Shapiro-Wilk W with Royston's polynomial approximations for the
//! coefficients and for the normalizing transformation of W.

use serde::{Deserialize, Serialize};

use crate::domain::NormalizedSeries;
use crate::error::{Error, Result};
use crate::special::{normal_quantile, normal_sf};

pub const SW_METHOD: &str = "royston-1995";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapiroWilk {
    pub w: f64,
    pub p_value: f64,
    pub n: usize,
    pub method: String,
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, ci| acc * x + ci)
}

/// The `floor(n/2)` positive coefficients `a_n, a_{n-1}, ...` pairing the
/// largest and smallest order statistics.
pub fn shapiro_wilk_coefficients(n: usize) -> Result<Vec<f64>> {
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    let half = n / 2;
    if n == 3 {
        return Ok(vec![std::f64::consts::FRAC_1_SQRT_2]);
    }
    const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
    const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
    let an = n as f64;
    // m_i for the upper half, largest first
    let m: Vec<f64> = (0..half)
        .map(|i| normal_quantile((an - i as f64 - 0.375) / (an + 0.25)))
        .collect();
    let summ2 = 2.0 * m.iter().map(|x| x * x).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / an.sqrt();
    let a1 = poly(&C1, rsn) + m[0] / ssumm2;
    let mut a = vec![0.0; half];
    a[0] = a1;
    let (start, fac) = if n > 5 {
        let a2 = poly(&C2, rsn) + m[1] / ssumm2;
        a[1] = a2;
        let fac = ((summ2 - 2.0 * m[0].powi(2) - 2.0 * m[1].powi(2))
            / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2))
            .sqrt();
        (2, fac)
    } else {
        let fac = ((summ2 - 2.0 * m[0].powi(2)) / (1.0 - 2.0 * a1 * a1)).sqrt();
        (1, fac)
    };
    for i in start..half {
        a[i] = m[i] / fac;
    }
    Ok(a)
}

/// W statistic and p-value, `3 <= n <= 5000`.
pub fn shapiro_wilk(series: &NormalizedSeries) -> Result<ShapiroWilk> {
    let n = series.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    if n > 5000 {
        return Err(Error::InvalidParameter(format!(
            "Shapiro-Wilk supports at most 5000 points, got {n}"
        )));
    }
    let mut x = series.values.clone();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite value in series".into()));
    }
    x.sort_by(f64::total_cmp);
    if x[n - 1] - x[0] <= 0.0 {
        return Err(Error::Domain(
            "Shapiro-Wilk undefined for a constant sample".into(),
        ));
    }
    let a = shapiro_wilk_coefficients(n)?;
    let mean = x.iter().sum::<f64>() / n as f64;
    let ssq: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    let b: f64 = a
        .iter()
        .enumerate()
        .map(|(i, ai)| ai * (x[n - 1 - i] - x[i]))
        .sum();
    let w = (b * b / ssq).min(1.0);
    Ok(ShapiroWilk {
        w,
        p_value: sw_pvalue(w, n),
        n,
        method: SW_METHOD.into(),
    })
}

fn sw_pvalue(w: f64, n: usize) -> f64 {
    if n == 3 {
        let p = 6.0 / std::f64::consts::PI * (w.sqrt().asin() - 0.75f64.sqrt().asin());
        return p.clamp(0.0, 1.0);
    }
    const G: [f64; 2] = [-2.273, 0.459];
    const C3: [f64; 4] = [0.5440, -0.39978, 0.025054, -6.714e-4];
    const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
    const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
    const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
    let an = n as f64;
    let mut y = (1.0 - w).ln();
    let (m, s) = if n <= 11 {
        let gamma = poly(&G, an);
        if y >= gamma {
            return 1e-99;
        }
        y = -(gamma - y).ln();
        (poly(&C3, an), poly(&C4, an).exp())
    } else {
        let xx = an.ln();
        (poly(&C5, xx), poly(&C6, xx).exp())
    };
    normal_sf((y - m) / s)
}
