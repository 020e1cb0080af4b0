//! Sample means with standard errors.

use num_traits::Float;

/// A Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

impl Estimate {
    /// Mean and standard error of the mean (sample variance with `n - 1`).
    ///
    /// Uses Welford's update; the result depends only on the order of
    /// `samples`.
    pub fn from_samples<I: IntoIterator<Item = f64>>(samples: I) -> Self {
        let mut n = 0usize;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for x in samples {
            n += 1;
            let d = x - mean;
            mean += d / n as f64;
            m2 += d * (x - mean);
        }
        let std_error = if n > 1 {
            (m2 / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std_error, n }
    }

    /// `|mean - target| / std_error`; infinite when the standard error is zero
    /// and the mean misses the target.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_standard_error() {
        let e = Estimate::from_samples([1.0, 2.0, 3.0, 4.0]);
        assert!((e.mean - 2.5).abs() < 1e-15);
        // sample variance 5/3, se = sqrt(5/12)
        assert!((e.std_error - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert_eq!(e.n, 4);
    }

    #[test]
    fn constant_samples_have_zero_error() {
        let e = Estimate::from_samples([3.0; 10]);
        assert_eq!(e.std_error, 0.0);
        assert_eq!(e.z_score(3.0), 0.0);
        assert!(e.z_score(3.1).is_infinite());
    }
}
