//! Direct Monte Carlo sampling of the joint posterior of `(theta, sigma_sq)`.
//!
//! For each draw `s`:
//!
//! 1. `sigma_sq[s] = 1 / g` with `g ~ Gamma(nu_n / 2, nu_n * sigma_n_sq / 2)` (shape–rate),
//! 2. `theta[s] ~ N(mu_n, sigma_sq[s] / kappa_n)`.
//!
//! Draw `s` consumes ChaCha8 stream `s` of the key `seed` and nothing else,
//! so the output is bit-identical for any chunk size or worker count.
//! `chunk_size` only sets the granularity of parallel work items.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Open01, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::posterior::{precision_marginal_params, Posterior};
use crate::rng::stream_rng;

pub const DEFAULT_CHUNK_SIZE: usize = 4096;
pub const DEFAULT_NUM_SAMPLES: usize = 10_000;

pub const SAMPLES_FORMAT: &str = "posterior-bench/joint-samples/v1";

/// One gamma draw, shape–rate parameterization.
///
/// Marsaglia–Tsang squeeze/rejection for `shape >= 1`. For `shape < 1` a draw
/// at `shape + 1` is boosted by `U^(1 / shape)`. Normal deviates come from
/// `rand_distr::StandardNormal` (ziggurat), uniforms from the open interval.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    check_positive("shape", shape)?;
    check_positive("rate", rate)?;
    let draw = if shape < 1.0 {
        let u: f64 = rng.sample(Open01);
        marsaglia_tsang(shape + 1.0, rng) * u.powf(1.0 / shape)
    } else {
        marsaglia_tsang(shape, rng)
    };
    Ok(draw / rate)
}

fn marsaglia_tsang<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = rng.sample(Open01);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// One `sigma_sq` draw: the reciprocal of a `Gamma(shape, rate)` precision draw.
pub fn sample_inverse_gamma<R: Rng + ?Sized>(
    shape: f64,
    rate_of_precision: f64,
    rng: &mut R,
) -> Result<f64> {
    Ok(1.0 / sample_gamma(shape, rate_of_precision, rng)?)
}

/// `mean + sqrt(variance) * z` with `z` a ziggurat standard normal.
pub fn sample_normal<R: Rng + ?Sized>(mean: f64, variance: f64, rng: &mut R) -> Result<f64> {
    check_positive("variance", variance)?;
    let z: f64 = rng.sample(StandardNormal);
    Ok(mean + variance.sqrt() * z)
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(
            name,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub seed: u64,
    pub num_samples: usize,
    #[serde(default = "default_chunk_size")]
    pub chunk_size: usize,
}

fn default_chunk_size() -> usize {
    DEFAULT_CHUNK_SIZE
}

impl SamplerConfig {
    pub fn new(seed: u64, num_samples: usize) -> Self {
        SamplerConfig {
            seed,
            num_samples,
            chunk_size: DEFAULT_CHUNK_SIZE,
        }
    }

    pub fn with_chunk_size(mut self, chunk_size: usize) -> Self {
        self.chunk_size = chunk_size;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_samples == 0 {
            return Err(Error::param("num_samples", "must be at least 1"));
        }
        if self.chunk_size == 0 {
            return Err(Error::param("chunk_size", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSamples {
    pub theta: Vec<f64>,
    pub sigma_sq: Vec<f64>,
    pub seed: u64,
    pub posterior: Posterior,
}

/// Provenance record written next to a samples CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplesEnvelope {
    pub format: String,
    pub seed: u64,
    pub num_samples: usize,
    pub posterior: Posterior,
    pub gamma_parameterization: String,
}

impl JointSamples {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Elementwise `1 / sigma_sq`.
    pub fn precision(&self) -> Vec<f64> {
        self.sigma_sq.iter().map(|s| 1.0 / s).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta.is_empty() {
            return Err(Error::param("samples", "no draws"));
        }
        if self.theta.len() != self.sigma_sq.len() {
            return Err(Error::param(
                "samples",
                format!(
                    "theta has {} draws but sigma_sq has {}",
                    self.theta.len(),
                    self.sigma_sq.len()
                ),
            ));
        }
        if let Some(bad) = self.sigma_sq.iter().find(|s| !(**s > 0.0)) {
            return Err(Error::param("sigma_sq", format!("non-positive draw {bad}")));
        }
        Ok(())
    }

    /// Columnar form, header `index,theta,sigma_sq`, 1-based index.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * 40 + 32);
        out.push_str("index,theta,sigma_sq\n");
        for (i, (t, s)) in self.theta.iter().zip(&self.sigma_sq).enumerate() {
            let _ = writeln!(out, "{},{},{}", i + 1, t, s);
        }
        out
    }

    pub fn envelope(&self) -> SamplesEnvelope {
        SamplesEnvelope {
            format: SAMPLES_FORMAT.to_string(),
            seed: self.seed,
            num_samples: self.len(),
            posterior: self.posterior,
            gamma_parameterization: "shape-rate".to_string(),
        }
    }

    /// Rebuilds samples from [`JointSamples::to_csv`] output and its envelope.
    pub fn from_csv(csv_text: &str, envelope: &SamplesEnvelope) -> Result<Self> {
        let mut lines = csv_text.lines().enumerate();
        let malformed = |line: usize, reason: String| Error::Malformed {
            path: "<joint samples>".into(),
            line: line as u64 + 1,
            reason,
        };
        match lines.next() {
            Some((_, "index,theta,sigma_sq")) => {}
            Some((i, other)) => return Err(malformed(i, format!("unexpected header `{other}`"))),
            None => return Err(malformed(0, "missing header".into())),
        }
        let mut theta = Vec::with_capacity(envelope.num_samples);
        let mut sigma_sq = Vec::with_capacity(envelope.num_samples);
        for (i, line) in lines {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(malformed(
                    i,
                    format!("expected 3 fields, found {}", fields.len()),
                ));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| malformed(i, format!("`{s}` is not a number: {e}")))
            };
            theta.push(parse(fields[1])?);
            sigma_sq.push(parse(fields[2])?);
        }
        if theta.len() != envelope.num_samples {
            return Err(Error::param(
                "samples",
                format!(
                    "envelope declares {} draws, CSV holds {}",
                    envelope.num_samples,
                    theta.len()
                ),
            ));
        }
        let samples = JointSamples {
            theta,
            sigma_sq,
            seed: envelope.seed,
            posterior: envelope.posterior,
        };
        samples.validate()?;
        Ok(samples)
    }
}

/// Draws `config.num_samples` independent `(theta, sigma_sq)` pairs on the
/// global rayon pool.
pub fn sample_joint(post: &Posterior, config: &SamplerConfig) -> Result<JointSamples> {
    post.validate()?;
    config.validate()?;
    let gamma = precision_marginal_params(post)?;
    let (shape, rate) = (gamma.shape, gamma.rate);

    let mut theta = vec![0.0; config.num_samples];
    let mut sigma_sq = vec![0.0; config.num_samples];
    theta
        .par_chunks_mut(config.chunk_size)
        .zip(sigma_sq.par_chunks_mut(config.chunk_size))
        .enumerate()
        .try_for_each(|(chunk, (theta, sigma_sq))| -> Result<()> {
            let start = chunk * config.chunk_size;
            for (k, (t, s)) in theta.iter_mut().zip(sigma_sq.iter_mut()).enumerate() {
                let mut rng = stream_rng(config.seed, (start + k) as u64);
                *s = sample_inverse_gamma(shape, rate, &mut rng)?;
                *t = sample_normal(post.mu_n, *s / post.kappa_n, &mut rng)?;
            }
            Ok(())
        })?;

    Ok(JointSamples {
        theta,
        sigma_sq,
        seed: config.seed,
        posterior: *post,
    })
}

/// [`sample_joint`] on a dedicated pool of `workers` threads.
pub fn sample_joint_with_workers(
    post: &Posterior,
    config: &SamplerConfig,
    workers: usize,
) -> Result<JointSamples> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} worker threads: {e}")))?;
    pool.install(|| sample_joint(post, config))
}
