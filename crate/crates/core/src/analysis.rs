//! Posterior summaries from Monte Carlo draws: quantile-based bounds,
//! interval overlap and containment across datasets, and histogram densities.
//!
//! Quantiles use the linear-interpolation convention known as "type 7": on
//! the ascending order statistics `x(1) <= ... <= x(n)`, the `p`-quantile sits
//! at position `h = 1 + p (n - 1)` and is
//! `x(floor h) + (h - floor h) (x(floor h + 1) - x(floor h))`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::posterior::Interval;
use crate::sampler::JointSamples;

/// Recorded in every report so readers know how bounds were formed.
pub const QUANTILE_CONVENTION: &str = "type-7 (linear interpolation at 1 + p(n-1))";

fn check_p(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::param("p", format!("must lie in [0, 1], got {p}")))
    }
}

fn sorted_copy(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::param("samples", "empty input"));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::param("samples", "contains NaN"));
    }
    let mut v = samples.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    Ok(v)
}

/// Type-7 quantile of already sorted, non-empty data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = p * (n - 1) as f64;
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - lo as f64;
    if frac == 0.0 {
        return sorted[lo];
    }
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

pub fn quantile(samples: &[f64], p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(quantile_sorted(&sorted_copy(samples)?, p))
}

/// Central interval between the `(1 - level) / 2` and `1 - (1 - level) / 2` quantiles.
pub fn posterior_bound(samples: &[f64], level: f64) -> Result<Interval> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::param(
            "level",
            format!("must lie in (0, 1), got {level}"),
        ));
    }
    let sorted = sorted_copy(samples)?;
    let tail = (1.0 - level) / 2.0;
    let lo = quantile_sorted(&sorted, tail);
    let hi = quantile_sorted(&sorted, 1.0 - tail);
    Interval::new(lo, hi, level)
}

pub fn interval_overlap(a: &Interval, b: &Interval) -> f64 {
    (a.hi.min(b.hi) - a.lo.max(b.lo)).max(0.0)
}

pub fn contains(a: &Interval, x: f64) -> bool {
    a.lo <= x && x <= a.hi
}

pub fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `samples` and `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let sorted = sorted_copy(samples)?;
    let n = sorted.len() as f64;
    Ok(sorted.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i + 1) as f64 / n - f).max(f - i as f64 / n)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityBin {
    pub center: f64,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySummary {
    pub width: f64,
    pub bins: Vec<DensityBin>,
}

impl DensitySummary {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("center,density\n");
        for b in &self.bins {
            let _ = writeln!(out, "{},{}", b.center, b.density);
        }
        out
    }

    /// `sum(density) * width`.
    pub fn integral(&self) -> f64 {
        self.bins.iter().map(|b| b.density).sum::<f64>() * self.width
    }
}

/// Equal-width histogram over `[min, max]` normalized to unit area.
///
/// Samples with zero spread collapse to one bin of width 1 centred on the
/// common value, whatever `bins` asks for.
pub fn density_summary(samples: &[f64], bins: usize) -> Result<DensitySummary> {
    if bins == 0 {
        return Err(Error::param("bins", "must be at least 1"));
    }
    let sorted = sorted_copy(samples)?;
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::param("samples", "contains infinite values"));
    }
    if hi == lo {
        return Ok(DensitySummary {
            width: 1.0,
            bins: vec![DensityBin {
                center: lo,
                density: 1.0,
            }],
        });
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &x in &sorted {
        let k = (((x - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let norm = sorted.len() as f64 * width;
    Ok(DensitySummary {
        width,
        bins: counts
            .iter()
            .enumerate()
            .map(|(k, &c)| DensityBin {
                center: lo + (k as f64 + 0.5) * width,
                density: c as f64 / norm,
            })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub label: String,
    pub theta_mean: f64,
    pub theta_bound: Interval,
    pub sigma_sq_mean: f64,
    pub sigma_sq_bound: Interval,
    #[serde(rename = "S")]
    pub num_samples: usize,
    pub seed: u64,
}

impl PosteriorSummary {
    pub fn level(&self) -> f64 {
        self.theta_bound.level
    }
}

pub fn summarize(label: &str, samples: &JointSamples, level: f64) -> Result<PosteriorSummary> {
    samples.validate()?;
    Ok(PosteriorSummary {
        label: label.to_string(),
        theta_mean: mean(&samples.theta),
        theta_bound: posterior_bound(&samples.theta, level)?,
        sigma_sq_mean: mean(&samples.sigma_sq),
        sigma_sq_bound: posterior_bound(&samples.sigma_sq, level)?,
        num_samples: samples.len(),
        seed: samples.seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapResult {
    /// `(reference, dataset)`.
    pub pair: (String, String),
    pub theta_overlap_len: f64,
    /// Overlap length divided by the reference bound length; `None` if that is zero.
    pub theta_overlap_norm: Option<f64>,
    pub theta_contains_ref_mean: bool,
    pub sigma_overlap_len: f64,
    pub sigma_overlap_norm: Option<f64>,
    pub sigma_contains_ref_mean: bool,
}

fn normalized(len: f64, reference: &Interval) -> Option<f64> {
    let r = reference.len();
    (r > 0.0).then(|| len / r)
}

/// Overlap of each dataset's bounds with the reference bounds, and whether
/// the dataset's bounds contain the reference posterior means.
pub fn compare(
    reference: &PosteriorSummary,
    others: &[PosteriorSummary],
) -> Result<Vec<OverlapResult>> {
    let level = reference.level();
    others
        .iter()
        .map(|o| {
            for b in [&o.theta_bound, &o.sigma_sq_bound, &reference.sigma_sq_bound] {
                if b.level != level {
                    return Err(Error::param(
                        "level",
                        format!(
                            "`{}` is summarized at level {} but reference `{}` at {}",
                            o.label, b.level, reference.label, level
                        ),
                    ));
                }
            }
            let theta_len = interval_overlap(&reference.theta_bound, &o.theta_bound);
            let sigma_len = interval_overlap(&reference.sigma_sq_bound, &o.sigma_sq_bound);
            Ok(OverlapResult {
                pair: (reference.label.clone(), o.label.clone()),
                theta_overlap_len: theta_len,
                theta_overlap_norm: normalized(theta_len, &reference.theta_bound),
                theta_contains_ref_mean: contains(&o.theta_bound, reference.theta_mean),
                sigma_overlap_len: sigma_len,
                sigma_overlap_norm: normalized(sigma_len, &reference.sigma_sq_bound),
                sigma_contains_ref_mean: contains(&o.sigma_sq_bound, reference.sigma_sq_mean),
            })
        })
        .collect()
}
