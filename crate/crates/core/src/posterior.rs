//! Conjugate normal–inverse-gamma model for a normal sample with unknown
//! mean `theta` and variance `sigma_sq`.
//!
//! The prior is `theta | sigma_sq ~ N(mu0, sigma_sq / kappa0)` and
//! `1 / sigma_sq ~ Gamma(nu0 / 2, nu0 * sigma0_sq / 2)` (shape–rate). After
//! observing sufficient statistics `(n, y_bar, s_sq)` the posterior stays in
//! the same family with
//!
//! ```text
//! kappa_n    = kappa0 + n
//! nu_n       = nu0 + n
//! mu_n       = (kappa0 * mu0 + n * y_bar) / kappa_n
//! sigma_n_sq = [nu0 * sigma0_sq + (n - 1) * s_sq + (kappa0 * n / kappa_n) * (y_bar - mu0)^2] / nu_n
//! ```
//!
//! Every gamma parameter pair in this crate is shape–rate, never shape–scale.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Default prior pseudo-observations for the mean.
pub const DEFAULT_KAPPA0: f64 = 1.0;
/// Default prior degrees of freedom for the variance.
pub const DEFAULT_NU0: f64 = 1.0;

/// Kvamsøy station April climatology, 7.48 ± 1.27 °C.
pub const STATION_APRIL_MEAN: f64 = 7.48;
pub const STATION_APRIL_SD: f64 = 1.27;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prior {
    pub mu0: f64,
    pub kappa0: f64,
    pub nu0: f64,
    pub sigma0_sq: f64,
}

impl Prior {
    pub fn new(mu0: f64, kappa0: f64, nu0: f64, sigma0_sq: f64) -> Result<Self> {
        let prior = Prior {
            mu0,
            kappa0,
            nu0,
            sigma0_sq,
        };
        prior.validate()?;
        Ok(prior)
    }

    /// Prior elicited from a station mean and standard deviation, with the
    /// default pseudo-counts.
    pub fn from_climatology(mean: f64, sd: f64) -> Result<Self> {
        Prior::new(mean, DEFAULT_KAPPA0, DEFAULT_NU0, sd * sd)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu0.is_finite() {
            return Err(Error::InvalidPrior(format!(
                "mu0 must be finite, got {}",
                self.mu0
            )));
        }
        for (name, v) in [
            ("kappa0", self.kappa0),
            ("nu0", self.nu0),
            ("sigma0_sq", self.sigma0_sq),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidPrior(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn update(&self, stats: &SampleStats) -> Result<Posterior> {
        posterior_update(self, stats)
    }
}

/// Sufficient statistics of a sample.
///
/// `y_bar` is absent for `n == 0`; `s_sq` (the `n - 1` denominator variance)
/// is absent for `n <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub n: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_bar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_sq: Option<f64>,
}

impl SampleStats {
    pub fn empty() -> Self {
        SampleStats {
            n: 0,
            y_bar: None,
            s_sq: None,
        }
    }

    pub fn new(n: u64, y_bar: Option<f64>, s_sq: Option<f64>) -> Result<Self> {
        let stats = SampleStats { n, y_bar, s_sq };
        stats.validate()?;
        Ok(stats)
    }

    pub fn validate(&self) -> Result<()> {
        match self.n {
            0 => return Ok(()),
            1 if self.s_sq.is_some() => {
                return Err(Error::InvalidStats(
                    "s_sq is undefined for n = 1 and must be absent".into(),
                ))
            }
            _ => {}
        }
        match self.y_bar {
            None => {
                return Err(Error::InvalidStats(format!(
                    "y_bar is required when n = {}",
                    self.n
                )))
            }
            Some(y) if !y.is_finite() => {
                return Err(Error::InvalidStats(format!(
                    "y_bar must be finite, got {y}"
                )))
            }
            Some(_) => {}
        }
        if self.n >= 2 {
            match self.s_sq {
                None => {
                    return Err(Error::InvalidStats(format!(
                        "s_sq is required when n = {}",
                        self.n
                    )))
                }
                Some(s) if !(s >= 0.0 && s.is_finite()) => {
                    return Err(Error::InvalidStats(format!(
                        "s_sq must be non-negative and finite, got {s}"
                    )))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub mu_n: f64,
    pub kappa_n: f64,
    pub nu_n: f64,
    pub sigma_n_sq: f64,
}

impl Posterior {
    pub fn new(mu_n: f64, kappa_n: f64, nu_n: f64, sigma_n_sq: f64) -> Result<Self> {
        let post = Posterior {
            mu_n,
            kappa_n,
            nu_n,
            sigma_n_sq,
        };
        post.validate()?;
        Ok(post)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu_n.is_finite() {
            return Err(Error::param(
                "mu_n",
                format!("must be finite, got {}", self.mu_n),
            ));
        }
        for (name, v) in [
            ("kappa_n", self.kappa_n),
            ("nu_n", self.nu_n),
            ("sigma_n_sq", self.sigma_n_sq),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(
                    name,
                    format!("must be positive and finite, got {v}"),
                ));
            }
        }
        Ok(())
    }
}

/// Central credible interval `[lo, hi]` at credibility `level`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, level: f64) -> Result<Self> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::param(
                "level",
                format!("must lie in (0, 1), got {level}"),
            ));
        }
        if !(lo <= hi) {
            return Err(Error::param(
                "interval",
                format!("lo ({lo}) exceeds hi ({hi})"),
            ));
        }
        Ok(Interval { lo, hi, level })
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Normal distribution parameters, variance form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalParams {
    pub mean: f64,
    pub variance: f64,
}

/// Gamma distribution parameters in shape–rate form (mean = shape / rate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaShapeRate {
    pub shape: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Expectations {
    pub e_theta: f64,
    /// `None` when `nu_n <= 2`, where the inverse-gamma mean does not exist.
    pub e_sigma_sq: Option<f64>,
}

pub fn posterior_update(prior: &Prior, stats: &SampleStats) -> Result<Posterior> {
    prior.validate()?;
    stats.validate()?;
    if stats.n == 0 {
        return Ok(Posterior {
            mu_n: prior.mu0,
            kappa_n: prior.kappa0,
            nu_n: prior.nu0,
            sigma_n_sq: prior.sigma0_sq,
        });
    }
    let n = stats.n as f64;
    // validate() guarantees presence for n >= 1
    let y_bar = stats.y_bar.unwrap_or_default();
    let s_sq = if stats.n >= 2 {
        stats.s_sq.unwrap_or_default()
    } else {
        0.0
    };

    let kappa_n = prior.kappa0 + n;
    let nu_n = prior.nu0 + n;
    let mu_n = (prior.kappa0 * prior.mu0 + n * y_bar) / kappa_n;
    let dev = y_bar - prior.mu0;
    let ss =
        prior.nu0 * prior.sigma0_sq + (n - 1.0) * s_sq + (prior.kappa0 * n / kappa_n) * dev * dev;
    Ok(Posterior {
        mu_n,
        kappa_n,
        nu_n,
        sigma_n_sq: ss / nu_n,
    })
}

/// Conditional law of `theta` given `sigma_sq`: `N(mu_n, sigma_sq / kappa_n)`.
pub fn theta_conditional_params(post: &Posterior, sigma_sq: f64) -> Result<NormalParams> {
    if !(sigma_sq > 0.0 && sigma_sq.is_finite()) {
        return Err(Error::param(
            "sigma_sq",
            format!("must be positive, got {sigma_sq}"),
        ));
    }
    Ok(NormalParams {
        mean: post.mu_n,
        variance: sigma_sq / post.kappa_n,
    })
}

/// Marginal law of the precision `1 / sigma_sq`: `Gamma(nu_n / 2, nu_n * sigma_n_sq / 2)`.
pub fn precision_marginal_params(post: &Posterior) -> Result<GammaShapeRate> {
    post.validate()?;
    Ok(GammaShapeRate {
        shape: post.nu_n / 2.0,
        rate: post.nu_n * post.sigma_n_sq / 2.0,
    })
}

/// Quantile of the marginal of `theta`, a Student-t with `nu_n` degrees of
/// freedom, location `mu_n` and scale `sqrt(sigma_n_sq / kappa_n)`.
pub fn theta_marginal_quantile(post: &Posterior, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param("p", format!("must lie in (0, 1), got {p}")));
    }
    post.validate()?;
    let scale = (post.sigma_n_sq / post.kappa_n).sqrt();
    Ok(post.mu_n + scale * student_t_quantile(p, post.nu_n))
}

/// Standard Student-t CDF with `dof` degrees of freedom.
pub fn student_t_cdf(x: f64, dof: f64) -> f64 {
    // dof > 0 is checked by callers
    StudentsT::new(0.0, 1.0, dof)
        .map(|t| t.cdf(x))
        .unwrap_or(f64::NAN)
}

/// Standard Student-t quantile: the incomplete-beta inversion from `statrs`,
/// polished with Newton steps on the CDF.
pub(crate) fn student_t_quantile(p: f64, dof: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    let Ok(t) = StudentsT::new(0.0, 1.0, dof) else {
        return f64::NAN;
    };
    let mut x = t.inverse_cdf(p);
    for _ in 0..8 {
        let f = t.pdf(x);
        if !(f > 0.0) || !x.is_finite() {
            break;
        }
        let step = (t.cdf(x) - p) / f;
        x -= step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

pub fn posterior_expectations(post: &Posterior) -> Expectations {
    let e_sigma_sq = (post.nu_n > 2.0).then(|| post.nu_n * post.sigma_n_sq / (post.nu_n - 2.0));
    Expectations {
        e_theta: post.mu_n,
        e_sigma_sq,
    }
}
