//! End-to-end commands: `fit`, `compare` and `synth`.
//!
//! Every stochastic step draws from a seed derived from
//! `(master seed, dataset label, step name)`, so datasets are independent of
//! each other and of processing order.

use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    compare, mean, summarize, OverlapResult, PosteriorSummary, QUANTILE_CONVENTION,
};
use crate::config::{DatasetConfig, DatasetKind, RunConfig, SynthSpec};
use crate::error::{Error, Result};
use crate::ingest::{
    box_average, compute_stats, parse_time, read_grid_csv, read_timeseries_csv, subsample,
    TimeSeries,
};
use crate::posterior::{posterior_update, Posterior, Prior, SampleStats};
use crate::report::{
    render_gnuplot_script, render_joint_scatter, render_marginal, render_summary_table,
    round_half_even, Marginal, Provenance, TableFormat,
};
use crate::rng::{derive_seed, stream_rng};
use crate::sampler::{sample_joint, sample_normal, JointSamples, SamplerConfig};

pub const MANIFEST_FORMAT: &str = "posterior-bench/manifest/v1";
pub const OVERLAP_FORMAT: &str = "posterior-bench/overlap/v1";

pub const STEP_SUBSAMPLE: &str = "subsample";
pub const STEP_SAMPLE_JOINT: &str = "sample_joint";
pub const STEP_SYNTH: &str = "synth";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub label: String,
    pub source: PathBuf,
    pub kind: DatasetKind,
    /// Timesteps left after the month filter, before subsampling.
    pub available: usize,
    pub stats: SampleStats,
    pub posterior: Posterior,
    pub subsample_seed: u64,
    pub sample_seed: u64,
    #[serde(rename = "S")]
    pub num_samples: usize,
    pub summary: PosteriorSummary,
}

/// Provenance for a `fit` run; embeds the fully resolved config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub tool_version: String,
    pub created: String,
    pub quantile_convention: String,
    pub level: f64,
    pub prior: Prior,
    pub config: RunConfig,
    pub datasets: Vec<DatasetRecord>,
}

impl RunManifest {
    pub fn summaries(&self) -> Vec<PosteriorSummary> {
        self.datasets.iter().map(|d| d.summary.clone()).collect()
    }
}

/// Manifest timestamp: the config's `created`, else `SOURCE_DATE_EPOCH`, else now.
fn resolve_created(config: &RunConfig) -> Result<String> {
    if let Some(c) = &config.created {
        return parse_time(c)
            .map(|t| t.to_rfc3339_opts(SecondsFormat::Secs, true))
            .ok_or_else(|| Error::Config(format!("bad `created` timestamp `{c}`")));
    }
    if let Ok(epoch) = std::env::var("SOURCE_DATE_EPOCH") {
        let secs: i64 = epoch
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("SOURCE_DATE_EPOCH `{epoch}` is not an integer")))?;
        let t = DateTime::<Utc>::from_timestamp(secs, 0)
            .ok_or_else(|| Error::Config(format!("SOURCE_DATE_EPOCH {secs} out of range")))?;
        return Ok(t.to_rfc3339_opts(SecondsFormat::Secs, true));
    }
    Ok(Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    // only plain data structs with finite floats are serialized here
    let mut s = serde_json::to_string_pretty(value).expect("serializable record");
    s.push('\n');
    s
}

pub fn load_series(d: &DatasetConfig, config: &RunConfig) -> Result<TimeSeries> {
    match d.kind {
        DatasetKind::Timeseries => read_timeseries_csv(&d.path, &d.label, config.lenient),
        DatasetKind::Grid => {
            let geo = config
                .geo_box
                .ok_or_else(|| Error::Config("grid datasets need a `box`".into()))?;
            let slices = read_grid_csv(&d.path, config.lenient)?;
            box_average(&slices, &geo, &d.label)
        }
    }
}

struct Fitted {
    record: DatasetRecord,
    samples: JointSamples,
}

fn fit_dataset(d: &DatasetConfig, config: &RunConfig, prior: &Prior) -> Result<Fitted> {
    let series = load_series(d, config)?.filter_months(&config.months);
    let subsample_seed = derive_seed(config.seed, &d.label, STEP_SUBSAMPLE);
    let picked = subsample(&series, config.n_subsample, subsample_seed)?;
    let stats = compute_stats(&picked)?;
    let posterior = posterior_update(prior, &stats)?;
    let sample_seed = derive_seed(config.seed, &d.label, STEP_SAMPLE_JOINT);
    let sampler = SamplerConfig {
        seed: sample_seed,
        num_samples: config.num_samples,
        chunk_size: config.chunk_size,
    };
    let samples = sample_joint(&posterior, &sampler)?;
    let summary = summarize(&d.label, &samples, config.level)?;
    info!(
        "{}: n={} y_bar={:?} s_sq={:?} -> mu_n={} sigma_n_sq={}",
        d.label, stats.n, stats.y_bar, stats.s_sq, posterior.mu_n, posterior.sigma_n_sq
    );
    Ok(Fitted {
        record: DatasetRecord {
            label: d.label.clone(),
            source: d.path.clone(),
            kind: d.kind,
            available: series.len(),
            stats,
            posterior,
            subsample_seed,
            sample_seed,
            num_samples: config.num_samples,
            summary,
        },
        samples,
    })
}

/// Ingest, subsample, update, sample and summarize every dataset, then write
/// the report files and `manifest.json` into `out_dir`.
pub fn cmd_fit(config: &RunConfig, out_dir: &Path) -> Result<RunManifest> {
    config.validate()?;
    let prior = config.prior.to_prior()?;
    let mut resolved = config.clone();
    resolved.created = Some(resolve_created(config)?);

    let results: Vec<Result<Fitted>> = resolved
        .datasets
        .par_iter()
        .map(|d| fit_dataset(d, &resolved, &prior).map_err(|e| e.in_dataset(&d.label)))
        .collect();
    let mut fitted = Vec::with_capacity(results.len());
    let mut first_err = None;
    for r in results {
        match r {
            Ok(f) => fitted.push(f),
            Err(e) => {
                log::error!("{e}");
                first_err.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_err {
        return Err(e);
    }

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let provenance = Provenance::new(resolved.seed, prior, resolved.level);
    let summaries: Vec<PosteriorSummary> =
        fitted.iter().map(|f| f.record.summary.clone()).collect();
    for (name, format) in [
        ("summary.txt", TableFormat::Text),
        ("summary.json", TableFormat::Json),
        ("summary.csv", TableFormat::Csv),
    ] {
        let doc = render_summary_table(&summaries, format, Some(&provenance))?;
        write_file(&out_dir.join(name), &doc)?;
    }

    let reference = fitted
        .iter()
        .find(|f| f.record.label == resolved.reference)
        .ok_or_else(|| Error::UnknownReference {
            label: resolved.reference.clone(),
            available: resolved.labels().join(", "),
        })?;
    let ref_theta_mean = reference.record.summary.theta_mean;
    let ref_precision_mean = mean(&reference.samples.precision());

    fitted.par_iter().try_for_each(|f| -> Result<()> {
        let label = &f.record.label;
        // thin >= S would keep a single row; such runs write every draw
        let thin = resolved
            .scatter_thin
            .filter(|&k| k > 1 && k < f.samples.len());
        write_file(
            &out_dir.join(format!("joint_{label}.csv")),
            &render_joint_scatter(label, &f.samples, thin)?,
        )?;
        for (which, reference_mean) in [
            (Marginal::Theta, ref_theta_mean),
            (Marginal::Precision, ref_precision_mean),
        ] {
            let doc = render_marginal(
                label,
                &f.samples,
                which,
                resolved.bins,
                resolved.level,
                Some(reference_mean),
            )?;
            write_file(
                &out_dir.join(format!("marginal_{}_{label}.csv", which.name())),
                &doc,
            )?;
        }
        if resolved.write_samples {
            write_file(
                &out_dir.join(format!("samples_{label}.csv")),
                &f.samples.to_csv(),
            )?;
            write_file(
                &out_dir.join(format!("samples_{label}.json")),
                &to_json(&f.samples.envelope()),
            )?;
        }
        Ok(())
    })?;

    if resolved.gnuplot {
        write_file(
            &out_dir.join("plots.gp"),
            &render_gnuplot_script(&resolved.labels()),
        )?;
    }

    let manifest = RunManifest {
        format: MANIFEST_FORMAT.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        created: resolved.created.clone().unwrap_or_default(),
        quantile_convention: QUANTILE_CONVENTION.to_string(),
        level: resolved.level,
        prior,
        datasets: fitted.into_iter().map(|f| f.record).collect(),
        config: resolved,
    };
    write_file(&out_dir.join("manifest.json"), &to_json(&manifest))?;
    info!(
        "wrote {} datasets to {}",
        manifest.datasets.len(),
        out_dir.display()
    );
    Ok(manifest)
}

/// The parts of a manifest `compare` needs; fixture manifests may carry only these.
#[derive(Debug, Clone, Deserialize)]
struct CompareInput {
    #[serde(default)]
    config: Option<ReferenceHint>,
    datasets: Vec<CompareDataset>,
}

#[derive(Debug, Clone, Deserialize)]
struct ReferenceHint {
    reference: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
struct CompareDataset {
    summary: PosteriorSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub format: String,
    pub reference: String,
    pub level: f64,
    pub results: Vec<OverlapResult>,
    /// Dataset labels by decreasing `theta` bound overlap with the reference.
    pub theta_ranking: Vec<String>,
    /// Dataset labels by decreasing `sigma_sq` bound overlap with the reference.
    pub sigma_ranking: Vec<String>,
}

fn ranking(results: &[OverlapResult], key: impl Fn(&OverlapResult) -> f64) -> Vec<String> {
    let mut order: Vec<&OverlapResult> = results.iter().collect();
    order.sort_by(|a, b| {
        key(b)
            .total_cmp(&key(a))
            .then_with(|| a.pair.1.cmp(&b.pair.1))
    });
    order.into_iter().map(|r| r.pair.1.clone()).collect()
}

/// Compares every dataset in `summaries` with the one labelled `reference`.
pub fn compare_summaries(
    summaries: &[PosteriorSummary],
    reference: &str,
) -> Result<ComparisonReport> {
    let Some(reference_summary) = summaries.iter().find(|s| s.label == reference) else {
        return Err(Error::UnknownReference {
            label: reference.to_string(),
            available: summaries
                .iter()
                .map(|s| s.label.as_str())
                .collect::<Vec<_>>()
                .join(", "),
        });
    };
    let others: Vec<PosteriorSummary> = summaries
        .iter()
        .filter(|s| s.label != reference)
        .cloned()
        .collect();
    if others.is_empty() {
        warn!("only the reference dataset `{reference}` is present; nothing to compare");
    }
    let results = compare(reference_summary, &others)?;
    Ok(ComparisonReport {
        format: OVERLAP_FORMAT.to_string(),
        reference: reference.to_string(),
        level: reference_summary.level(),
        theta_ranking: ranking(&results, |r| r.theta_overlap_len),
        sigma_ranking: ranking(&results, |r| r.sigma_overlap_len),
        results,
    })
}

pub fn render_ranking_text(report: &ComparisonReport) -> String {
    let mut out = format!(
        "# reference={}\n# level={}\n# quantile={}\n",
        report.reference, report.level, QUANTILE_CONVENTION
    );
    if report.results.is_empty() {
        out.push_str("no datasets besides the reference\n");
        return out;
    }
    let by_label = |l: &str| report.results.iter().find(|r| r.pair.1 == l);
    out.push_str("theta overlap ranking\n");
    for (rank, label) in report.theta_ranking.iter().enumerate() {
        if let Some(r) = by_label(label) {
            out.push_str(&format!(
                "{}. {}  overlap={}  contains_ref_mean={}\n",
                rank + 1,
                label,
                round_half_even(r.theta_overlap_len, 2),
                r.theta_contains_ref_mean
            ));
        }
    }
    out.push_str("sigma_sq overlap ranking\n");
    for (rank, label) in report.sigma_ranking.iter().enumerate() {
        if let Some(r) = by_label(label) {
            out.push_str(&format!(
                "{}. {}  overlap={}  contains_ref_mean={}\n",
                rank + 1,
                label,
                round_half_even(r.sigma_overlap_len, 2),
                r.sigma_contains_ref_mean
            ));
        }
    }
    out
}

/// Reads a manifest, compares against `reference` (default: the manifest's
/// configured reference) and writes `overlap.json` and `overlap.txt` into
/// `out_dir` (default: the manifest's directory).
pub fn cmd_compare(
    manifest_path: &Path,
    reference: Option<&str>,
    out_dir: Option<&Path>,
) -> Result<ComparisonReport> {
    let text = std::fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let input: CompareInput = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: manifest_path.to_path_buf(),
        source: e,
    })?;
    let reference = match reference {
        Some(r) => r.to_string(),
        None => input.config.and_then(|c| c.reference).ok_or_else(|| {
            Error::Config("no reference label given and none recorded in the manifest".into())
        })?,
    };
    let summaries: Vec<PosteriorSummary> = input.datasets.into_iter().map(|d| d.summary).collect();
    let report = compare_summaries(&summaries, &reference)?;

    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| {
        manifest_path
            .parent()
            .unwrap_or(Path::new("."))
            .to_path_buf()
    });
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_file(&dir.join("overlap.json"), &to_json(&report))?;
    write_file(&dir.join("overlap.txt"), &render_ranking_text(&report))?;
    Ok(report)
}

/// Writes one seeded Gaussian `<label>.csv` per spec entry; returns the paths.
pub fn cmd_synth(spec: &SynthSpec, out_dir: &Path) -> Result<Vec<PathBuf>> {
    spec.validate()?;
    let series = synth_series(spec)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    series
        .iter()
        .map(|s| {
            let path = out_dir.join(format!("{}.csv", s.label));
            write_file(&path, &s.to_csv())?;
            Ok(path)
        })
        .collect()
}

pub fn synth_series(spec: &SynthSpec) -> Result<Vec<TimeSeries>> {
    spec.validate()?;
    let start = parse_time(&spec.start)
        .ok_or_else(|| Error::Config(format!("bad start `{}`", spec.start)))?;
    let step = chrono::Duration::hours(spec.step_hours as i64);
    spec.datasets
        .iter()
        .map(|d| {
            let mut rng = stream_rng(derive_seed(spec.seed, &d.label, STEP_SYNTH), 0);
            let times = (0..d.steps).map(|i| start + step * i as i32).collect();
            let values = (0..d.steps)
                .map(|_| {
                    if d.variance == 0.0 {
                        Ok(d.mean)
                    } else {
                        sample_normal(d.mean, d.variance, &mut rng)
                    }
                })
                .collect::<Result<Vec<f64>>>()?;
            TimeSeries::new(d.label.clone(), times, values)
        })
        .collect()
}
