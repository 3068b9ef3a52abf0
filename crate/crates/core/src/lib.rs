//! Bayesian comparison of model-output temperature distributions.
//!
//! A small sample of a (spatially averaged) temperature series is summarized
//! by its sufficient statistics, combined with an informative
//! normal–inverse-gamma prior in closed form, and the joint posterior of the
//! population mean and variance is explored by direct Monte Carlo sampling.
//! Datasets are then compared through quantile-based credible bounds.
//!
//! ```
//! use posterior_bench::{posterior_update, sample_joint, summarize, Prior, SampleStats, SamplerConfig};
//!
//! let prior = Prior::from_climatology(7.48, 1.27).unwrap();
//! let stats = SampleStats::new(200, Some(4.80), Some(7.08)).unwrap();
//! let post = posterior_update(&prior, &stats).unwrap();
//! let draws = sample_joint(&post, &SamplerConfig::new(42, 10_000)).unwrap();
//! let summary = summarize("d01", &draws, 0.95).unwrap();
//! assert!(summary.theta_bound.lo < post.mu_n && post.mu_n < summary.theta_bound.hi);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod error;
pub mod ingest;
pub mod pipeline;
pub mod posterior;
pub mod report;
pub mod rng;
pub mod sampler;

pub use analysis::{
    compare, contains, density_summary, interval_overlap, ks_statistic, posterior_bound, quantile,
    summarize, DensitySummary, OverlapResult, PosteriorSummary,
};
pub use error::{Error, Result};
pub use ingest::{box_average, compute_stats, subsample, GeoBox, GridPoint, GridSlice, TimeSeries};
pub use pipeline::{cmd_compare, cmd_fit, cmd_synth, RunManifest};
pub use posterior::{
    posterior_expectations, posterior_update, precision_marginal_params, theta_conditional_params,
    theta_marginal_quantile, Interval, Posterior, Prior, SampleStats,
};
pub use sampler::{
    sample_gamma, sample_inverse_gamma, sample_joint, sample_normal, JointSamples, SamplerConfig,
};
