//! Test-only oracles, independent of the library's numerical paths.
#![allow(dead_code)]

use chrono::{Duration, TimeZone, Utc};
use num::{BigInt, BigRational, One, ToPrimitive, Zero};
use posterior_bench::rng::stream_rng;
use posterior_bench::{GeoBox, GridPoint, GridSlice};
use rand::Rng;

pub fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

pub fn rat_dec(s: &str) -> BigRational {
    // exact decimal literal, e.g. "7.48"
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    let digits: BigInt = format!("{int}{frac}").parse().unwrap();
    let denom = num::pow(BigInt::from(10), frac.len());
    BigRational::new(digits, denom)
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap()
}

/// Closed-form posterior in exact rational arithmetic: (mu_n, kappa_n, nu_n, sigma_n_sq).
pub fn exact_posterior(
    mu0: &BigRational,
    kappa0: &BigRational,
    nu0: &BigRational,
    sigma0_sq: &BigRational,
    n: u64,
    y_bar: &BigRational,
    s_sq: &BigRational,
) -> [BigRational; 4] {
    let nr = BigRational::from_integer(n.into());
    let kappa_n = kappa0 + &nr;
    let nu_n = nu0 + &nr;
    let mu_n = (kappa0 * mu0 + &nr * y_bar) / &kappa_n;
    let dev = y_bar - mu0;
    let ss =
        nu0 * sigma0_sq + (&nr - BigRational::one()) * s_sq + kappa0 * &nr / &kappa_n * &dev * &dev;
    let sigma_n_sq = ss / &nu_n;
    [mu_n, kappa_n, nu_n, sigma_n_sq]
}

/// Exact two-pass mean and unbiased variance of f64 data.
pub fn exact_stats(xs: &[f64]) -> (BigRational, BigRational) {
    let n = BigRational::from_integer(BigInt::from(xs.len()));
    let sum = xs.iter().fold(BigRational::zero(), |acc, &x| acc + rat(x));
    let mean = sum / &n;
    let ss = xs.iter().fold(BigRational::zero(), |acc, &x| {
        let d = rat(x) - &mean;
        acc + &d * &d
    });
    (mean, ss / (n - BigRational::one()))
}

/// Lanczos (g = 7, 9 terms) log-gamma for x > 0.5.
#[allow(clippy::excessive_precision)]
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

pub fn t_pdf(x: f64, dof: f64) -> f64 {
    let ln_c =
        ln_gamma((dof + 1.0) / 2.0) - ln_gamma(dof / 2.0) - 0.5 * (dof * std::f64::consts::PI).ln();
    (ln_c - (dof + 1.0) / 2.0 * (1.0 + x * x / dof).ln()).exp()
}

/// Composite Simpson integral of `f` over [a, b] with `m` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Student-t CDF by quadrature of the density from 0.
pub fn t_cdf_quadrature(x: f64, dof: f64) -> f64 {
    0.5 + simpson(|u| t_pdf(u, dof), 0.0, x, 4000)
}

/// Student-t quantile by bisection on the quadrature CDF.
pub fn t_quantile_bisection(p: f64, dof: f64) -> f64 {
    let (mut lo, mut hi) = (-50.0f64, 50.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if t_cdf_quadrature(mid, dof) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    0.5 * (lo + hi)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Ordinary least squares of y on x: (intercept, slope, slope standard error).
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let se = (rss / (n - 2.0) / sxx).sqrt();
    (intercept, slope, se)
}

/// Published four-dataset summary: label, theta mean, theta bound, sigma^2 mean, sigma^2 bound.
pub type PublishedRow = (&'static str, f64, (f64, f64), f64, (f64, f64));

pub const PUBLISHED: [PublishedRow; 4] = [
    ("ERAi", 4.26, (3.87, 4.66), 9.90, (8.30, 11.93)),
    ("d01", 4.80, (4.57, 5.04), 7.08, (6.26, 8.07)),
    ("d02", 4.19, (3.93, 4.44), 8.04, (7.12, 9.14)),
    ("d03", 4.56, (4.29, 4.83), 9.19, (8.11, 10.46)),
];

/// The published summary as text rows, without header.
pub const PUBLISHED_TEXT: [&str; 4] = [
    "ERAi  4.26  (3.87, 4.66)  9.90  (8.30, 11.93)",
    "d01   4.80  (4.57, 5.04)  7.08  (6.26, 8.07)",
    "d02   4.19  (3.93, 4.44)  8.04  (7.12, 9.14)",
    "d03   4.56  (4.29, 4.83)  9.19  (8.11, 10.46)",
];

pub fn published_summaries() -> Vec<posterior_bench::PosteriorSummary> {
    use posterior_bench::{Interval, PosteriorSummary};
    PUBLISHED
        .iter()
        .map(|&(label, t, (tl, th), s, (sl, sh))| PosteriorSummary {
            label: label.to_string(),
            theta_mean: t,
            theta_bound: Interval::new(tl, th, 0.95).unwrap(),
            sigma_sq_mean: s,
            sigma_sq_bound: Interval::new(sl, sh, 0.95).unwrap(),
            num_samples: 100_000,
            seed: 0,
        })
        .collect()
}

/// Random grid slices around `geo`, each with at least one in-box point.
pub fn random_grid(seed: u64, geo: &GeoBox) -> Vec<GridSlice> {
    let mut rng = stream_rng(seed, 0);
    let t0 = Utc.with_ymd_and_hms(2008, 4, 1, 0, 0, 0).unwrap();
    let steps = rng.random_range(1..8);
    (0..steps)
        .map(|k| {
            let npts = rng.random_range(1..60);
            let mut points: Vec<GridPoint> = (0..npts)
                .map(|_| GridPoint {
                    lat: rng.random_range(geo.lat_min - 1.0..geo.lat_max + 1.0),
                    lon: rng.random_range(geo.lon_min - 1.0..geo.lon_max + 1.0),
                    value: rng.random_range(-15.0..25.0),
                })
                .collect();
            points.push(GridPoint {
                lat: geo.lat_min,
                lon: geo.lon_max,
                value: rng.random_range(-15.0..25.0),
            });
            GridSlice::new(t0 + Duration::hours(3 * k), points).unwrap()
        })
        .collect()
}

/// Filter-then-mean in exact arithmetic.
pub fn box_oracle(slice: &GridSlice, geo: &GeoBox) -> f64 {
    let inside: Vec<&GridPoint> = slice
        .points
        .iter()
        .filter(|p| {
            p.lat >= geo.lat_min
                && p.lat <= geo.lat_max
                && p.lon >= geo.lon_min
                && p.lon <= geo.lon_max
        })
        .collect();
    let sum = inside.iter().fold(rat(0.0), |a, p| a + rat(p.value));
    to_f64(&(sum / BigRational::from_integer(inside.len().into())))
}
