use std::fmt;
use std::str::FromStr;

use crate::dsp::percentile_sorted;
use crate::error::{Error, Module, Result};

/// A statistic summarizing one descriptor track.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Functional {
    Mean,
    /// Population standard deviation.
    Std,
    Percentile20,
    Percentile50,
    Percentile80,
    Range,
    /// Least-squares slope per frame step.
    Slope,
    /// Mean of the positive frame-to-frame differences.
    RiseRate,
    /// Mean magnitude of the negative frame-to-frame differences.
    FallRate,
}

impl Functional {
    pub const ALL: [Functional; 9] = [
        Functional::Mean,
        Functional::Std,
        Functional::Percentile20,
        Functional::Percentile50,
        Functional::Percentile80,
        Functional::Range,
        Functional::Slope,
        Functional::RiseRate,
        Functional::FallRate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Functional::Mean => "mean",
            Functional::Std => "std",
            Functional::Percentile20 => "percentile20",
            Functional::Percentile50 => "percentile50",
            Functional::Percentile80 => "percentile80",
            Functional::Range => "range",
            Functional::Slope => "slope",
            Functional::RiseRate => "riseRate",
            Functional::FallRate => "fallRate",
        }
    }

    /// Value over a track; empty tracks give 0.
    pub fn apply(self, values: &[f64]) -> f64 {
        if values.is_empty() {
            return 0.0;
        }
        let n = values.len() as f64;
        match self {
            Functional::Mean => values.iter().sum::<f64>() / n,
            Functional::Std => {
                let mean = values.iter().sum::<f64>() / n;
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
            }
            Functional::Percentile20 | Functional::Percentile50 | Functional::Percentile80 => {
                let mut sorted = values.to_vec();
                sorted.sort_by(f64::total_cmp);
                let p = match self {
                    Functional::Percentile20 => 20.0,
                    Functional::Percentile50 => 50.0,
                    _ => 80.0,
                };
                percentile_sorted(&sorted, p)
            }
            Functional::Range => {
                let (lo, hi) = values
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
                hi - lo
            }
            Functional::Slope => {
                if values.len() < 2 {
                    return 0.0;
                }
                let mx = (n - 1.0) / 2.0;
                let my = values.iter().sum::<f64>() / n;
                let (sxy, sxx) = values.iter().enumerate().fold((0.0, 0.0), |(sxy, sxx), (i, v)| {
                    let dx = i as f64 - mx;
                    (sxy + dx * (v - my), sxx + dx * dx)
                });
                sxy / sxx
            }
            Functional::RiseRate | Functional::FallRate => {
                let sign = if self == Functional::RiseRate { 1.0 } else { -1.0 };
                let steps: Vec<f64> = values
                    .windows(2)
                    .map(|w| sign * (w[1] - w[0]))
                    .filter(|d| *d > 0.0)
                    .collect();
                if steps.is_empty() {
                    0.0
                } else {
                    steps.iter().sum::<f64>() / steps.len() as f64
                }
            }
        }
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Functional {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Functional::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::invalid(Module::Acoustic, "parse_functional", s, "unknown functional"))
    }
}
