//! C ABI over `posterior_bench`.
//!
//! Plain parameter blocks cross the boundary as `#[repr(C)]` structs; Monte
//! Carlo draws live behind the opaque [`PbSamples`] handle, which the caller
//! releases with [`pb_samples_free`]. Functions return a [`PbStatus`] and
//! write results through out-pointers; panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use posterior_bench::analysis::{self, posterior_bound, quantile};
use posterior_bench::sampler::DEFAULT_CHUNK_SIZE;
use posterior_bench::{
    posterior_expectations, posterior_update, precision_marginal_params, sample_joint,
    theta_conditional_params, theta_marginal_quantile, Error, Interval, JointSamples, Posterior,
    Prior, SampleStats, SamplerConfig,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidPrior = 2,
    InvalidStats = 3,
    InvalidArgument = 4,
    BufferTooSmall = 5,
    Internal = 6,
    Panic = 7,
}

/// Which marginal of a sample set to read.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PbMarginal {
    Theta = 0,
    SigmaSq = 1,
    Precision = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PbPrior {
    pub mu0: f64,
    pub kappa0: f64,
    pub nu0: f64,
    pub sigma0_sq: f64,
}

/// Sufficient statistics; `y_bar` is ignored when `n == 0` and `s_sq` when `n <= 1`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PbStats {
    pub n: i64,
    pub y_bar: f64,
    pub s_sq: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PbPosterior {
    pub mu_n: f64,
    pub kappa_n: f64,
    pub nu_n: f64,
    pub sigma_n_sq: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PbInterval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

/// Opaque set of joint posterior draws.
pub struct PbSamples {
    inner: JointSamples,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

struct Failure(PbStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidPrior(_) => PbStatus::InvalidPrior,
            Error::InvalidStats(_) => PbStatus::InvalidStats,
            Error::InvalidParameter { .. } => PbStatus::InvalidArgument,
            _ => PbStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

type FfiResult = Result<(), Failure>;

fn null(name: &str) -> Failure {
    Failure(PbStatus::NullPointer, format!("`{name}` is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(PbStatus::InvalidArgument, msg.into())
}

/// Runs `f`, records any failure message and converts panics to [`PbStatus::Panic`].
fn guard(f: impl FnOnce() -> FfiResult) -> PbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PbStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PbStatus::Panic
        }
    }
}

unsafe fn read<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn write<T>(p: *mut T, name: &str, v: T) -> FfiResult {
    if p.is_null() {
        return Err(null(name));
    }
    p.write(v);
    Ok(())
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn to_posterior(p: &PbPosterior) -> Result<Posterior, Failure> {
    Ok(Posterior::new(p.mu_n, p.kappa_n, p.nu_n, p.sigma_n_sq)?)
}

fn to_interval(i: &PbInterval) -> Result<Interval, Failure> {
    Ok(Interval::new(i.lo, i.hi, i.level)?)
}

fn from_interval(i: Interval) -> PbInterval {
    PbInterval {
        lo: i.lo,
        hi: i.hi,
        level: i.level,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pb_version() -> *const c_char {
    static VERSION: &CStr =
        match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
            Ok(v) => v,
            Err(_) => panic!("version contains NUL"),
        };
    VERSION.as_ptr()
}

/// Message for the last failed call on this thread, or "" after a success.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn pb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Conjugate update; `n == 0` returns the prior unchanged.
///
/// # Safety
/// Pointers must be null or valid for the pointee type.
#[no_mangle]
pub unsafe extern "C" fn pb_posterior_update(
    prior: *const PbPrior,
    stats: *const PbStats,
    out: *mut PbPosterior,
) -> PbStatus {
    guard(|| {
        let p = read(prior, "prior")?;
        let s = read(stats, "stats")?;
        let prior = Prior::new(p.mu0, p.kappa0, p.nu0, p.sigma0_sq)?;
        let n = u64::try_from(s.n)
            .map_err(|_| Failure(PbStatus::InvalidStats, format!("n = {} is negative", s.n)))?;
        let stats = SampleStats::new(n, (n >= 1).then_some(s.y_bar), (n >= 2).then_some(s.s_sq))?;
        let post = posterior_update(&prior, &stats)?;
        write(
            out,
            "out",
            PbPosterior {
                mu_n: post.mu_n,
                kappa_n: post.kappa_n,
                nu_n: post.nu_n,
                sigma_n_sq: post.sigma_n_sq,
            },
        )
    })
}

/// Mean and variance of `theta` given `sigma_sq`.
///
/// # Safety
/// Pointers must be null or valid for the pointee type.
#[no_mangle]
pub unsafe extern "C" fn pb_theta_conditional_params(
    post: *const PbPosterior,
    sigma_sq: f64,
    mean: *mut f64,
    variance: *mut f64,
) -> PbStatus {
    guard(|| {
        let c = theta_conditional_params(&to_posterior(read(post, "post")?)?, sigma_sq)?;
        write(mean, "mean", c.mean)?;
        write(variance, "variance", c.variance)
    })
}

/// Shape and rate of the gamma marginal of the precision `1 / sigma_sq`.
///
/// # Safety
/// Pointers must be null or valid for the pointee type.
#[no_mangle]
pub unsafe extern "C" fn pb_precision_marginal_params(
    post: *const PbPosterior,
    shape: *mut f64,
    rate: *mut f64,
) -> PbStatus {
    guard(|| {
        let g = precision_marginal_params(&to_posterior(read(post, "post")?)?)?;
        write(shape, "shape", g.shape)?;
        write(rate, "rate", g.rate)
    })
}

/// `p`-quantile of the Student-t marginal of `theta`.
///
/// # Safety
/// Pointers must be null or valid for the pointee type.
#[no_mangle]
pub unsafe extern "C" fn pb_theta_marginal_quantile(
    post: *const PbPosterior,
    p: f64,
    out: *mut f64,
) -> PbStatus {
    guard(|| {
        let q = theta_marginal_quantile(&to_posterior(read(post, "post")?)?, p)?;
        write(out, "out", q)
    })
}

/// Posterior means of `theta` and `sigma_sq`; `e_sigma_sq` is NaN when
/// `nu_n <= 2`, where it does not exist.
///
/// # Safety
/// Pointers must be null or valid for the pointee type.
#[no_mangle]
pub unsafe extern "C" fn pb_posterior_expectations(
    post: *const PbPosterior,
    e_theta: *mut f64,
    e_sigma_sq: *mut f64,
) -> PbStatus {
    guard(|| {
        let e = posterior_expectations(&to_posterior(read(post, "post")?)?);
        write(e_theta, "e_theta", e.e_theta)?;
        write(e_sigma_sq, "e_sigma_sq", e.e_sigma_sq.unwrap_or(f64::NAN))
    })
}

/// Draws `num_samples` joint samples; `chunk_size == 0` picks the default.
/// The draws depend only on `seed`, never on `chunk_size` or thread count.
/// On success `*out` owns a handle to release with [`pb_samples_free`].
///
/// # Safety
/// Pointers must be null or valid for the pointee type.
#[no_mangle]
pub unsafe extern "C" fn pb_sample_joint(
    post: *const PbPosterior,
    seed: u64,
    num_samples: usize,
    chunk_size: usize,
    out: *mut *mut PbSamples,
) -> PbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        out.write(std::ptr::null_mut());
        let post = to_posterior(read(post, "post")?)?;
        let chunk = if chunk_size == 0 {
            DEFAULT_CHUNK_SIZE
        } else {
            chunk_size
        };
        let draws = sample_joint(
            &post,
            &SamplerConfig::new(seed, num_samples).with_chunk_size(chunk),
        )?;
        out.write(Box::into_raw(Box::new(PbSamples { inner: draws })));
        Ok(())
    })
}

/// Number of draws held by `samples`; 0 for null.
///
/// # Safety
/// `samples` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pb_samples_len(samples: *const PbSamples) -> usize {
    samples.as_ref().map_or(0, |s| s.inner.len())
}

fn marginal(s: &PbSamples, which: PbMarginal) -> Vec<f64> {
    match which {
        PbMarginal::Theta => s.inner.theta.clone(),
        PbMarginal::SigmaSq => s.inner.sigma_sq.clone(),
        PbMarginal::Precision => s.inner.precision(),
    }
}

/// Copies one marginal into `dst`, which must hold at least `pb_samples_len` values.
///
/// # Safety
/// `samples` must be null or a live handle; `dst` must be valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn pb_samples_copy(
    samples: *const PbSamples,
    which: PbMarginal,
    dst: *mut f64,
    capacity: usize,
) -> PbStatus {
    guard(|| {
        let s = read(samples, "samples")?;
        if dst.is_null() {
            return Err(null("dst"));
        }
        let n = s.inner.len();
        if capacity < n {
            return Err(Failure(
                PbStatus::BufferTooSmall,
                format!("buffer holds {capacity} values, {n} needed"),
            ));
        }
        std::ptr::copy_nonoverlapping(marginal(s, which).as_ptr(), dst, n);
        Ok(())
    })
}

/// Central credible interval of one marginal of `samples`.
///
/// # Safety
/// Pointers must be null or valid; `samples` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pb_samples_bound(
    samples: *const PbSamples,
    which: PbMarginal,
    level: f64,
    out: *mut PbInterval,
) -> PbStatus {
    guard(|| {
        let b = posterior_bound(&marginal(read(samples, "samples")?, which), level)?;
        write(out, "out", from_interval(b))
    })
}

/// Releases a handle from [`pb_sample_joint`]; null is a no-op.
///
/// # Safety
/// `samples` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pb_samples_free(samples: *mut PbSamples) {
    if !samples.is_null() {
        drop(Box::from_raw(samples));
    }
}

/// Type-7 `p`-quantile of `len` values.
///
/// # Safety
/// `values` must be valid for `len` reads; `out` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn pb_quantile(
    values: *const f64,
    len: usize,
    p: f64,
    out: *mut f64,
) -> PbStatus {
    guard(|| {
        let q = quantile(slice(values, len, "values")?, p)?;
        write(out, "out", q)
    })
}

/// Central credible interval of `len` values at credibility `level`.
///
/// # Safety
/// `values` must be valid for `len` reads; `out` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn pb_posterior_bound(
    values: *const f64,
    len: usize,
    level: f64,
    out: *mut PbInterval,
) -> PbStatus {
    guard(|| {
        let b = posterior_bound(slice(values, len, "values")?, level)?;
        write(out, "out", from_interval(b))
    })
}

/// Length of the intersection of two intervals (0 when disjoint).
///
/// # Safety
/// Pointers must be null or valid for the pointee type.
#[no_mangle]
pub unsafe extern "C" fn pb_interval_overlap(
    a: *const PbInterval,
    b: *const PbInterval,
    out: *mut f64,
) -> PbStatus {
    guard(|| {
        let a = to_interval(read(a, "a")?)?;
        let b = to_interval(read(b, "b")?)?;
        if !a.lo.is_finite() || !a.hi.is_finite() || !b.lo.is_finite() || !b.hi.is_finite() {
            return Err(invalid("interval endpoints must be finite"));
        }
        write(out, "out", analysis::interval_overlap(&a, &b))
    })
}

/// Whether `x` lies in the closed interval.
///
/// # Safety
/// Pointers must be null or valid for the pointee type.
#[no_mangle]
pub unsafe extern "C" fn pb_interval_contains(
    interval: *const PbInterval,
    x: f64,
    out: *mut bool,
) -> PbStatus {
    guard(|| {
        let i = to_interval(read(interval, "interval")?)?;
        write(out, "out", analysis::contains(&i, x))
    })
}
