use serde::{Deserialize, Serialize};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub samples: usize,
}

impl MeanEstimate {
    /// Two-pass mean and standard error, summed in iteration order.
    ///
    /// A single sample (or an empty iterator) has zero standard error; an
    /// empty iterator yields a NaN mean.
    pub fn from_samples<I>(samples: I) -> Self
    where
        I: IntoIterator<Item = f64>,
    {
        let values: Vec<f64> = samples.into_iter().collect();
        Self::from_slice(&values)
    }

    pub fn from_slice(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                standard_error: 0.0,
                samples: 0,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Self {
                mean,
                standard_error: 0.0,
                samples: 1,
            };
        }
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        let variance = ss / (n - 1) as f64;
        Self {
            mean,
            standard_error: (variance / n as f64).sqrt(),
            samples: n,
        }
    }

    /// Three standard errors.
    pub fn half_width(&self) -> f64 {
        3.0 * self.standard_error
    }
}
