//! Plot-ready and tabular renderings of a comparison run.
//!
//! * summary table (text, JSON, CSV) with the columns dataset, θ, θ PB, σ², σ² PB
//! * joint `(theta, sigma_sq)` scatter data
//! * marginal density data for `theta` and the precision `1 / sigma_sq`
//!
//! Text output rounds half-to-even at two decimals, applied to the shortest
//! decimal representation of each value. JSON carries full precision.
//! CSV documents start with `# key=value` provenance lines.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    density_summary, mean, posterior_bound, PosteriorSummary, QUANTILE_CONVENTION,
};
use crate::error::{Error, Result};
use crate::posterior::{posterior_expectations, Interval, Prior};
use crate::sampler::JointSamples;

pub const SUMMARY_FORMAT: &str = "posterior-bench/summary/v1";

/// Settings a rendered document needs to be regenerated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub master_seed: u64,
    pub prior: Prior,
    pub level: f64,
    pub quantile_convention: String,
}

impl Provenance {
    pub fn new(master_seed: u64, prior: Prior, level: f64) -> Self {
        Provenance {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed,
            prior,
            level,
            quantile_convention: QUANTILE_CONVENTION.to_string(),
        }
    }

    fn comment_lines(&self) -> String {
        format!(
            "# tool_version={}\n# master_seed={}\n# prior mu0={} kappa0={} nu0={} sigma0_sq={}\n# level={}\n# quantile={}\n",
            self.tool_version,
            self.master_seed,
            self.prior.mu0,
            self.prior.kappa0,
            self.prior.nu0,
            self.prior.sigma0_sq,
            self.level,
            self.quantile_convention
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Marginal {
    Theta,
    Precision,
}

impl Marginal {
    pub fn name(self) -> &'static str {
        match self {
            Marginal::Theta => "theta",
            Marginal::Precision => "precision",
        }
    }
}

/// Fixed-point rendering with round-half-to-even on the shortest decimal
/// representation of `x`.
pub fn round_half_even(x: f64, decimals: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let repr = format!("{}", x.abs());
    let (int_part, frac_part) = repr.split_once('.').unwrap_or((&repr, ""));
    let mut digits: Vec<u8> = int_part.bytes().map(|b| b - b'0').collect();
    let int_len = digits.len();
    let frac: Vec<u8> = frac_part.bytes().map(|b| b - b'0').collect();
    digits.extend(frac.iter().take(decimals));
    digits.resize(int_len + decimals, 0);

    let rest = frac.get(decimals..).unwrap_or(&[]);
    let round_up = match rest.first() {
        Some(&d) if d > 5 => true,
        Some(&5) => rest[1..].iter().any(|&d| d != 0) || digits.last().is_some_and(|d| d % 2 == 1),
        _ => false,
    };
    let mut int_len = int_len;
    if round_up {
        let mut i = digits.len();
        loop {
            if i == 0 {
                digits.insert(0, 1);
                int_len += 1;
                break;
            }
            i -= 1;
            if digits[i] == 9 {
                digits[i] = 0;
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    let mut out = String::new();
    if x < 0.0 && digits.iter().any(|&d| d != 0) {
        out.push('-');
    }
    for (k, d) in digits.iter().enumerate() {
        if k == int_len {
            out.push('.');
        }
        out.push((b'0' + d) as char);
    }
    out
}

fn fmt2(x: f64) -> String {
    round_half_even(x, 2)
}

fn fmt_bound(b: &Interval) -> String {
    format!("({}, {})", fmt2(b.lo), fmt2(b.hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplayRow {
    pub theta: String,
    pub theta_pb: String,
    pub sigma_sq: String,
    pub sigma_sq_pb: String,
}

impl DisplayRow {
    pub fn of(s: &PosteriorSummary) -> Self {
        DisplayRow {
            theta: fmt2(s.theta_mean),
            theta_pb: fmt_bound(&s.theta_bound),
            sigma_sq: fmt2(s.sigma_sq_mean),
            sigma_sq_pb: fmt_bound(&s.sigma_sq_bound),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    #[serde(flatten)]
    pub summary: PosteriorSummary,
    pub display: DisplayRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDocument {
    pub format: String,
    pub quantile_convention: String,
    #[serde(default)]
    pub provenance: Option<Provenance>,
    pub rows: Vec<SummaryRow>,
}

pub fn render_summary_table(
    summaries: &[PosteriorSummary],
    format: TableFormat,
    provenance: Option<&Provenance>,
) -> Result<String> {
    if summaries.is_empty() {
        return Err(Error::param("summaries", "nothing to tabulate"));
    }
    match format {
        TableFormat::Text => Ok(render_text(summaries, provenance)),
        TableFormat::Json => {
            let doc = SummaryDocument {
                format: SUMMARY_FORMAT.to_string(),
                quantile_convention: QUANTILE_CONVENTION.to_string(),
                provenance: provenance.cloned(),
                rows: summaries
                    .iter()
                    .map(|s| SummaryRow {
                        summary: s.clone(),
                        display: DisplayRow::of(s),
                    })
                    .collect(),
            };
            let mut text = serde_json::to_string_pretty(&doc)
                .map_err(|e| Error::Config(format!("cannot serialize summary: {e}")))?;
            text.push('\n');
            Ok(text)
        }
        TableFormat::Csv => render_csv(summaries, provenance),
    }
}

fn render_text(summaries: &[PosteriorSummary], provenance: Option<&Provenance>) -> String {
    let mut rows: Vec<[String; 5]> = vec![[
        String::new(),
        "θ".into(),
        "θ PB".into(),
        "σ²".into(),
        "σ² PB".into(),
    ]];
    for s in summaries {
        let d = DisplayRow::of(s);
        rows.push([
            s.label.clone(),
            d.theta,
            d.theta_pb,
            d.sigma_sq,
            d.sigma_sq_pb,
        ]);
    }
    let mut widths = [0usize; 5];
    for r in &rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    if let Some(p) = provenance {
        out.push_str(&p.comment_lines());
    }
    for r in &rows {
        let mut line = String::new();
        for (k, cell) in r.iter().enumerate() {
            if k > 0 {
                line.push_str("  ");
            }
            line.push_str(cell);
            if k + 1 < r.len() {
                let pad = widths[k] - cell.chars().count();
                line.extend(std::iter::repeat_n(' ', pad));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn render_csv(summaries: &[PosteriorSummary], provenance: Option<&Provenance>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::Config(format!("cannot write summary CSV: {e}"));
    w.write_record([
        "label",
        "theta_mean",
        "theta_lo",
        "theta_hi",
        "sigma_sq_mean",
        "sigma_sq_lo",
        "sigma_sq_hi",
        "level",
        "S",
        "seed",
        "theta_display",
        "theta_pb_display",
        "sigma_sq_display",
        "sigma_sq_pb_display",
    ])
    .map_err(to_err)?;
    for s in summaries {
        let d = DisplayRow::of(s);
        w.write_record([
            s.label.clone(),
            s.theta_mean.to_string(),
            s.theta_bound.lo.to_string(),
            s.theta_bound.hi.to_string(),
            s.sigma_sq_mean.to_string(),
            s.sigma_sq_bound.lo.to_string(),
            s.sigma_sq_bound.hi.to_string(),
            s.level().to_string(),
            s.num_samples.to_string(),
            s.seed.to_string(),
            d.theta,
            d.theta_pb,
            d.sigma_sq,
            d.sigma_sq_pb,
        ])
        .map_err(to_err)?;
    }
    let body = w
        .into_inner()
        .map_err(|e| Error::Config(format!("cannot write summary CSV: {e}")))?;
    let mut out = provenance
        .map(Provenance::comment_lines)
        .unwrap_or_default();
    out.push_str(&String::from_utf8_lossy(&body));
    Ok(out)
}

fn sample_header(out: &mut String, label: &str, samples: &JointSamples) {
    let p = &samples.posterior;
    let _ = writeln!(out, "# label={label}");
    let _ = writeln!(out, "# seed={}", samples.seed);
    let _ = writeln!(out, "# S={}", samples.len());
    let _ = writeln!(
        out,
        "# posterior mu_n={} kappa_n={} nu_n={} sigma_n_sq={}",
        p.mu_n, p.kappa_n, p.nu_n, p.sigma_n_sq
    );
}

/// `theta,sigma_sq` rows, optionally every `thin`-th draw starting with the first.
///
/// The header records the analytic posterior means of `theta` and `sigma_sq`
/// alongside the Monte Carlo means of all draws.
pub fn render_joint_scatter(
    label: &str,
    samples: &JointSamples,
    thin: Option<usize>,
) -> Result<String> {
    samples.validate()?;
    let step = match thin {
        None => 1,
        Some(0) => return Err(Error::param("thin", "must be at least 1")),
        Some(k) if k >= samples.len() => {
            return Err(Error::param(
                "thin",
                format!(
                    "{k} must be smaller than the sample count {}",
                    samples.len()
                ),
            ))
        }
        Some(k) => k,
    };
    let e = posterior_expectations(&samples.posterior);
    let mut out = String::with_capacity(samples.len() / step * 40 + 256);
    sample_header(&mut out, label, samples);
    let _ = writeln!(out, "# thin={step}");
    let _ = writeln!(out, "# mean_theta={}", e.e_theta);
    match e.e_sigma_sq {
        Some(v) => {
            let _ = writeln!(out, "# mean_sigma_sq={v}");
        }
        None => out.push_str("# mean_sigma_sq=undefined\n"),
    }
    let _ = writeln!(out, "# mc_mean_theta={}", mean(&samples.theta));
    let _ = writeln!(out, "# mc_mean_sigma_sq={}", mean(&samples.sigma_sq));
    out.push_str("theta,sigma_sq\n");
    for (t, s) in samples.theta.iter().zip(&samples.sigma_sq).step_by(step) {
        let _ = writeln!(out, "{t},{s}");
    }
    Ok(out)
}

/// Histogram of `theta` or of `1 / sigma_sq`, with the credible-bound
/// endpoints and an optional reference mean recorded in the header.
pub fn render_marginal(
    label: &str,
    samples: &JointSamples,
    which: Marginal,
    bins: usize,
    level: f64,
    reference_mean: Option<f64>,
) -> Result<String> {
    samples.validate()?;
    let values = match which {
        Marginal::Theta => samples.theta.clone(),
        Marginal::Precision => samples.precision(),
    };
    let bound = posterior_bound(&values, level)?;
    let density = density_summary(&values, bins)?;
    let mut out = String::new();
    sample_header(&mut out, label, samples);
    let _ = writeln!(out, "# which={}", which.name());
    let _ = writeln!(out, "# level={level}");
    let _ = writeln!(out, "# bound_lo={}", bound.lo);
    let _ = writeln!(out, "# bound_hi={}", bound.hi);
    if let Some(r) = reference_mean {
        let _ = writeln!(out, "# reference_mean={r}");
    }
    let _ = writeln!(out, "# bin_width={}", density.width);
    out.push_str(&density.to_csv());
    Ok(out)
}

/// Reads the `# key=value` header lines of a rendered CSV document.
pub fn header_value<'a>(document: &'a str, key: &str) -> Option<&'a str> {
    document
        .lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| {
            l.trim_start_matches('#')
                .trim()
                .strip_prefix(key)?
                .strip_prefix('=')
        })
}

/// gnuplot script drawing the joint scatter and both marginals per label.
pub fn render_gnuplot_script(labels: &[String]) -> String {
    let mut out = String::from(
        "# gnuplot script for posterior-bench output; run inside the output directory\n\
         set datafile separator ','\n\
         set datafile commentschars '#'\n\
         set key off\n",
    );
    for label in labels {
        let _ = write!(
            out,
            "\nset terminal pngcairo size 1200,400\n\
             set output 'plot_{label}.png'\n\
             set multiplot layout 1,3 title '{label}'\n\
             set xlabel 'theta'; set ylabel 'sigma^2'\n\
             plot 'joint_{label}.csv' every ::1 using 1:2 with dots\n\
             set xlabel 'theta'; set ylabel 'density'\n\
             plot 'marginal_theta_{label}.csv' every ::1 using 1:2 with steps\n\
             set xlabel '1/sigma^2'; set ylabel 'density'\n\
             plot 'marginal_precision_{label}.csv' every ::1 using 1:2 with steps\n\
             unset multiplot\n"
        );
    }
    out
}
