use crate::error::{Error, Result};
use crate::special::half_normal_cdf;

/// A nondecreasing, right-continuous distribution function.
pub trait Cdf {
    /// `P(X <= x)`.
    fn cdf(&self, x: f64) -> f64;

    /// `P(X < x)`; equals [`Cdf::cdf`] for continuous laws.
    fn cdf_left(&self, x: f64) -> f64 {
        self.cdf(x)
    }
}

/// Empirical CDF with steps of `1/k` at the sorted sample values.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidParameter("ECDF input contains NaN".into()));
        }
        values.sort_by(f64::total_cmp);
        Ok(Ecdf { sorted: values })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn support(&self) -> &[f64] {
        &self.sorted
    }

    pub fn max(&self) -> f64 {
        *self.sorted.last().expect("nonempty")
    }

    /// Distinct support points with the CDF value just left of and at each.
    pub fn steps(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let k = self.sorted.len() as f64;
        let mut i = 0;
        std::iter::from_fn(move || {
            if i >= self.sorted.len() {
                return None;
            }
            let x = self.sorted[i];
            let before = i;
            while i < self.sorted.len() && self.sorted[i] == x {
                i += 1;
            }
            Some((x, before as f64 / k, i as f64 / k))
        })
    }
}

impl Cdf for Ecdf {
    fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|v| *v <= x) as f64 / self.sorted.len() as f64
    }

    fn cdf_left(&self, x: f64) -> f64 {
        self.sorted.partition_point(|v| *v < x) as f64 / self.sorted.len() as f64
    }
}

/// `|N(0, sigma^2)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfNormal {
    pub sigma: f64,
}

impl Cdf for HalfNormal {
    fn cdf(&self, x: f64) -> f64 {
        half_normal_cdf(x, self.sigma)
    }
}

/// Pointwise maximum of several CDFs.
#[derive(Debug, Clone)]
pub struct UpperEnvelope {
    pub members: Vec<Ecdf>,
}

impl Cdf for UpperEnvelope {
    fn cdf(&self, x: f64) -> f64 {
        self.members.iter().map(|c| c.cdf(x)).fold(0.0, f64::max)
    }

    fn cdf_left(&self, x: f64) -> f64 {
        self.members
            .iter()
            .map(|c| c.cdf_left(x))
            .fold(0.0, f64::max)
    }
}

/// Adapts a closure to [`Cdf`].
pub struct FnCdf<F>(pub F);

impl<F: Fn(f64) -> f64> Cdf for FnCdf<F> {
    fn cdf(&self, x: f64) -> f64 {
        (self.0)(x)
    }
}
