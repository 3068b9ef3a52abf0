//! Time-series and gridded CSV ingestion, spatial box averaging, random
//! timestep subsampling and sufficient statistics.
//!
//! Schemas:
//!
//! * time series: header `time,value`
//! * grid: header `time,lat,lon,value`, one row per point per time
//!
//! Timestamps are ISO-8601; RFC 3339 with any offset is accepted, as is the
//! minute-precision form `2008-04-01T03:00Z`. Everything is converted to UTC.
//! Columns may appear in any order. Extra columns are rejected unless the
//! reader is lenient.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Datelike, NaiveDateTime, Utc};
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::posterior::SampleStats;
use crate::rng::stream_rng;

pub type Timestamp = DateTime<Utc>;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub label: String,
    pub times: Vec<Timestamp>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(label: impl Into<String>, times: Vec<Timestamp>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::param(
                "series",
                format!("{} timestamps but {} values", times.len(), values.len()),
            ));
        }
        if let Some(w) = times.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::param(
                "series",
                format!(
                    "timestamps not strictly increasing at {}",
                    format_time(&times[w + 1])
                ),
            ));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::param("series", format!("non-finite value {v}")));
        }
        Ok(TimeSeries {
            label: label.into(),
            times,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Writes the `time,value` schema with second-precision UTC timestamps.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,value\n");
        for (t, v) in self.times.iter().zip(&self.values) {
            let _ = writeln!(out, "{},{}", format_time(t), v);
        }
        out
    }

    /// Keeps only timesteps whose `(year, month)` is listed; an empty filter
    /// keeps everything.
    pub fn filter_months(&self, months: &[(i32, u32)]) -> TimeSeries {
        if months.is_empty() {
            return self.clone();
        }
        let (times, values) = self
            .times
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| months.contains(&(t.year(), t.month())))
            .map(|(t, v)| (*t, *v))
            .unzip();
        TimeSeries {
            label: self.label.clone(),
            times,
            values,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub lat: f64,
    pub lon: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSlice {
    pub time: Timestamp,
    pub points: Vec<GridPoint>,
}

impl GridSlice {
    pub fn new(time: Timestamp, points: Vec<GridPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::param(
                "grid slice",
                format!("no points at {}", format_time(&time)),
            ));
        }
        for p in &points {
            check_point(p).map_err(|reason| Error::param("grid slice", reason))?;
        }
        Ok(GridSlice { time, points })
    }
}

fn check_point(p: &GridPoint) -> std::result::Result<(), String> {
    if !(-90.0..=90.0).contains(&p.lat) {
        return Err(format!("latitude {} outside [-90, 90]", p.lat));
    }
    if !(-180.0..360.0).contains(&p.lon) {
        return Err(format!("longitude {} outside [-180, 360)", p.lon));
    }
    if !p.value.is_finite() {
        return Err(format!("non-finite value {}", p.value));
    }
    Ok(())
}

/// Latitude/longitude rectangle, inclusive on all four edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

/// Hardanger fjord averaging box, 59.32–60.75 °N, 5.05–7.90 °E.
pub const HARDANGER_BOX: GeoBox = GeoBox {
    lat_min: 59.32,
    lat_max: 60.75,
    lon_min: 5.05,
    lon_max: 7.90,
};

impl GeoBox {
    pub fn new(lat_min: f64, lat_max: f64, lon_min: f64, lon_max: f64) -> Result<Self> {
        let b = GeoBox {
            lat_min,
            lat_max,
            lon_min,
            lon_max,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lat_min < self.lat_max) {
            return Err(Error::param("box", "lat_min must be below lat_max"));
        }
        if !(self.lon_min < self.lon_max) {
            return Err(Error::param("box", "lon_min must be below lon_max"));
        }
        Ok(())
    }

    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        self.lat_min <= lat && lat <= self.lat_max && self.lon_min <= lon && lon <= self.lon_max
    }
}

pub fn format_time(t: &Timestamp) -> String {
    t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

pub fn parse_time(s: &str) -> Option<Timestamp> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    ["%Y-%m-%dT%H:%MZ", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|t| t.and_utc())
}

struct Columns {
    index: Vec<usize>,
}

fn resolve_columns(
    headers: &csv::StringRecord,
    wanted: &[&str],
    path: &Path,
    lenient: bool,
) -> Result<Columns> {
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    let mut index = Vec::with_capacity(wanted.len());
    for w in wanted {
        match names.iter().position(|n| n == w) {
            Some(i) => index.push(i),
            None => {
                return Err(Error::Malformed {
                    path: path.to_path_buf(),
                    line: 1,
                    reason: format!(
                        "missing column `{w}` (expected header `{}`)",
                        wanted.join(",")
                    ),
                })
            }
        }
    }
    if !lenient {
        if let Some(extra) = names.iter().find(|n| !wanted.contains(n)) {
            return Err(Error::Malformed {
                path: path.to_path_buf(),
                line: 1,
                reason: format!("unknown column `{extra}` (use --lenient to ignore)"),
            });
        }
    }
    Ok(Columns { index })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::Malformed {
        path: path.to_path_buf(),
        line,
        reason: e.to_string(),
    }
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::io(path, e))
}

pub fn read_timeseries_csv(
    path: impl AsRef<Path>,
    label: &str,
    lenient: bool,
) -> Result<TimeSeries> {
    let path = path.as_ref();
    parse_timeseries_csv(open(path)?, path, label, lenient)
}

/// Parses the time-series schema; `path` is used only in error messages.
pub fn parse_timeseries_csv<R: Read>(
    reader: R,
    path: &Path,
    label: &str,
    lenient: bool,
) -> Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.is_empty() {
        return Err(Error::EmptySeries {
            path: path.to_path_buf(),
        });
    }
    let cols = resolve_columns(&headers, &["time", "value"], path, lenient)?;

    let mut times: Vec<Timestamp> = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let bad = |reason: String| Error::Malformed {
            path: path.to_path_buf(),
            line,
            reason,
        };
        let raw_time = &rec[cols.index[0]];
        let time =
            parse_time(raw_time).ok_or_else(|| bad(format!("bad timestamp `{raw_time}`")))?;
        let raw_value = &rec[cols.index[1]];
        let value: f64 = raw_value
            .parse()
            .map_err(|_| bad(format!("non-numeric value `{raw_value}`")))?;
        if !value.is_finite() {
            return Err(bad(format!("non-finite value `{raw_value}`")));
        }
        if let Some(prev) = times.last() {
            if time <= *prev {
                return Err(bad(format!(
                    "timestamp {} is not after the previous row ({})",
                    format_time(&time),
                    format_time(prev)
                )));
            }
        }
        times.push(time);
        values.push(value);
    }
    if values.is_empty() {
        return Err(Error::EmptySeries {
            path: path.to_path_buf(),
        });
    }
    TimeSeries::new(label, times, values)
}

pub fn read_grid_csv(path: impl AsRef<Path>, lenient: bool) -> Result<Vec<GridSlice>> {
    let path = path.as_ref();
    parse_grid_csv(open(path)?, path, lenient)
}

/// Parses the grid schema into slices ordered by time.
pub fn parse_grid_csv<R: Read>(reader: R, path: &Path, lenient: bool) -> Result<Vec<GridSlice>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.is_empty() {
        return Err(Error::EmptySeries {
            path: path.to_path_buf(),
        });
    }
    let cols = resolve_columns(&headers, &["time", "lat", "lon", "value"], path, lenient)?;

    let mut by_time: BTreeMap<Timestamp, Vec<GridPoint>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let bad = |reason: String| Error::Malformed {
            path: path.to_path_buf(),
            line,
            reason,
        };
        let raw_time = &rec[cols.index[0]];
        let time =
            parse_time(raw_time).ok_or_else(|| bad(format!("bad timestamp `{raw_time}`")))?;
        let num = |k: usize, name: &str| -> Result<f64> {
            let raw = &rec[cols.index[k]];
            raw.parse::<f64>()
                .map_err(|_| bad(format!("non-numeric {name} `{raw}`")))
        };
        let point = GridPoint {
            lat: num(1, "lat")?,
            lon: num(2, "lon")?,
            value: num(3, "value")?,
        };
        check_point(&point).map_err(bad)?;
        by_time.entry(time).or_default().push(point);
    }
    if by_time.is_empty() {
        return Err(Error::EmptySeries {
            path: path.to_path_buf(),
        });
    }
    Ok(by_time
        .into_iter()
        .map(|(time, points)| GridSlice { time, points })
        .collect())
}

/// Unweighted mean of the in-box points of every slice, in time order.
pub fn box_average(slices: &[GridSlice], geo: &GeoBox, label: &str) -> Result<TimeSeries> {
    geo.validate()?;
    let mut rows: Vec<(Timestamp, f64)> = Vec::with_capacity(slices.len());
    for slice in slices {
        let (sum, count) = slice
            .points
            .iter()
            .filter(|p| geo.contains(p.lat, p.lon))
            .fold((0.0, 0usize), |(s, c), p| (s + p.value, c + 1));
        if count == 0 {
            return Err(Error::EmptyBox {
                time: format_time(&slice.time),
            });
        }
        rows.push((slice.time, sum / count as f64));
    }
    rows.sort_by_key(|r| r.0);
    let (times, values) = rows.into_iter().unzip();
    TimeSeries::new(label, times, values)
}

/// `n` distinct timesteps drawn uniformly without replacement, kept in
/// chronological order.
pub fn subsample(series: &TimeSeries, n: usize, seed: u64) -> Result<TimeSeries> {
    if n > series.len() {
        return Err(Error::SubsampleTooLarge {
            requested: n,
            available: series.len(),
        });
    }
    let mut rng = stream_rng(seed, 0);
    let mut picks = index::sample(&mut rng, series.len(), n).into_vec();
    picks.sort_unstable();
    Ok(TimeSeries {
        label: series.label.clone(),
        times: picks.iter().map(|&i| series.times[i]).collect(),
        values: picks.iter().map(|&i| series.values[i]).collect(),
    })
}

pub fn compute_stats(series: &TimeSeries) -> Result<SampleStats> {
    sample_stats(&series.values).map_err(|e| match e {
        Error::EmptySeries { .. } => Error::EmptySeries {
            path: PathBuf::from(&series.label),
        },
        e => e,
    })
}

/// Sufficient statistics by a shifted, corrected two-pass algorithm.
///
/// Pass one averages `x - x[0]` with Neumaier summation; pass two forms the
/// centred sum of squares with the `(sum e)^2 / n` rounding correction.
/// A constant sample gives exactly `s_sq = 0`.
pub fn sample_stats(values: &[f64]) -> Result<SampleStats> {
    let Some(&shift) = values.first() else {
        return Err(Error::EmptySeries {
            path: PathBuf::from("<values>"),
        });
    };
    let n = values.len();
    let nf = n as f64;
    let mean_offset = neumaier_sum(values.iter().map(|x| x - shift)) / nf;
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let y_bar = (shift + mean_offset).clamp(lo, hi);
    if n == 1 {
        return Ok(SampleStats {
            n: 1,
            y_bar: Some(y_bar),
            s_sq: None,
        });
    }
    let sum_e = neumaier_sum(values.iter().map(|x| x - y_bar));
    let sum_e2 = neumaier_sum(values.iter().map(|x| (x - y_bar) * (x - y_bar)));
    let s_sq = ((sum_e2 - sum_e * sum_e / nf) / (nf - 1.0)).max(0.0);
    Ok(SampleStats {
        n: n as u64,
        y_bar: Some(y_bar),
        s_sq: Some(s_sq),
    })
}

fn neumaier_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn t(h: u32) -> Timestamp {
        Utc.with_ymd_and_hms(2008, 4, 1, 0, 0, 0).unwrap() + chrono::Duration::hours(h as i64)
    }

    fn parse(text: &str) -> Result<TimeSeries> {
        parse_timeseries_csv(text.as_bytes(), Path::new("mem.csv"), "x", false)
    }

    #[test]
    fn reads_schema_example() {
        let s = parse("time,value\n2008-04-01T00:00Z,5.0\n2008-04-01T03:00Z,6.0\n").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.values, vec![5.0, 6.0]);
        assert_eq!(s.times[1], t(3));
    }

    #[test]
    fn duplicate_timestamp_names_line() {
        let err = parse("time,value\n2008-04-01T00:00Z,5.0\n2008-04-01T00:00Z,6.0\n").unwrap_err();
        match err {
            Error::Malformed { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_and_malformed_inputs() {
        assert!(matches!(
            parse("time,value\n"),
            Err(Error::EmptySeries { .. })
        ));
        assert!(matches!(parse(""), Err(Error::EmptySeries { .. })));
        match parse("time,value\n2008-04-01T00:00Z,abc\n") {
            Err(Error::Malformed {
                line: 2, reason, ..
            }) => assert!(reason.contains("non-numeric")),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse("time,value\nyesterday,1\n"),
            Err(Error::Malformed { line: 2, .. })
        ));
        assert!(matches!(
            parse("time,value\n2008-04-01T00:00Z\n"),
            Err(Error::Malformed { .. })
        ));
        assert!(matches!(
            parse("time,value,station\n2008-04-01T00:00Z,1,a\n"),
            Err(Error::Malformed { line: 1, .. })
        ));
        let lenient = parse_timeseries_csv(
            "station,time,value\na,2008-04-01T00:00Z,1\n".as_bytes(),
            Path::new("mem.csv"),
            "x",
            true,
        )
        .unwrap();
        assert_eq!(lenient.values, vec![1.0]);
    }

    #[test]
    fn grid_groups_by_time() {
        let text = "time,lat,lon,value\n\
                    2008-04-01T03:00Z,60.0,6.0,2.0\n\
                    2008-04-01T00:00Z,60.0,6.0,4.0\n\
                    2008-04-01T00:00Z,60.1,6.1,6.0\n";
        let slices = parse_grid_csv(text.as_bytes(), Path::new("g.csv"), false).unwrap();
        assert_eq!(slices.len(), 2);
        assert_eq!(slices[0].time, t(0));
        assert_eq!(slices[0].points.len(), 2);
        let bad = "time,lat,lon,value\n2008-04-01T00:00Z,95.0,6.0,2.0\n";
        assert!(matches!(
            parse_grid_csv(bad.as_bytes(), Path::new("g.csv"), false),
            Err(Error::Malformed { line: 2, .. })
        ));
    }

    fn pt(lat: f64, lon: f64, value: f64) -> GridPoint {
        GridPoint { lat, lon, value }
    }

    #[test]
    fn box_average_masks_and_means() {
        let constant = GridSlice::new(t(0), vec![pt(60.0, 6.0, 5.0), pt(60.5, 7.0, 5.0)]).unwrap();
        let s = box_average(&[constant], &HARDANGER_BOX, "c").unwrap();
        assert_eq!(s.values, vec![5.0]);

        let masked = GridSlice::new(
            t(0),
            vec![pt(60.0, 6.0, 4.0), pt(62.0, 6.0, 100.0), pt(60.0, 6.5, 6.0)],
        )
        .unwrap();
        let s = box_average(&[masked], &HARDANGER_BOX, "m").unwrap();
        assert_eq!(s.values, vec![5.0]);

        // inclusive edges
        let edge = GridSlice::new(t(0), vec![pt(59.32, 5.05, 1.0), pt(60.75, 7.90, 3.0)]).unwrap();
        assert_eq!(
            box_average(&[edge], &HARDANGER_BOX, "e").unwrap().values,
            vec![2.0]
        );

        let outside = GridSlice::new(t(6), vec![pt(10.0, 6.0, 1.0)]).unwrap();
        match box_average(&[outside], &HARDANGER_BOX, "o") {
            Err(Error::EmptyBox { time }) => assert_eq!(time, "2008-04-01T06:00:00Z"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn subsample_bounds_and_determinism() {
        let times: Vec<_> = (0..1000).map(|h| t(3 * h)).collect();
        let values: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let s = TimeSeries::new("x", times, values).unwrap();
        let a = subsample(&s, 200, 7).unwrap();
        assert_eq!(a, subsample(&s, 200, 7).unwrap());
        assert_eq!(a.len(), 200);
        assert!(a.times.windows(2).all(|w| w[0] < w[1]));

        let short = subsample(&s, 1000, 3).unwrap();
        assert_eq!(short, s);
        match subsample(&s, 1001, 1) {
            Err(e @ Error::SubsampleTooLarge { .. }) => {
                let msg = e.to_string();
                assert!(msg.contains("1001") && msg.contains("1000"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn stats_textbook_and_constant() {
        let st = sample_stats(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((st.n, st.y_bar, st.s_sq), (3, Some(2.0), Some(1.0)));
        let st = sample_stats(&[0.1; 100]).unwrap();
        assert_eq!(st.s_sq, Some(0.0));
        assert_eq!(st.y_bar, Some(0.1));
        let st = sample_stats(&[3.5]).unwrap();
        assert_eq!((st.n, st.y_bar, st.s_sq), (1, Some(3.5), None));
        assert!(sample_stats(&[]).is_err());
    }

    #[test]
    fn month_filter() {
        let times = vec![
            Utc.with_ymd_and_hms(2008, 3, 31, 21, 0, 0).unwrap(),
            Utc.with_ymd_and_hms(2008, 4, 1, 0, 0, 0).unwrap(),
            Utc.with_ymd_and_hms(2009, 4, 1, 0, 0, 0).unwrap(),
            Utc.with_ymd_and_hms(2009, 5, 1, 0, 0, 0).unwrap(),
        ];
        let s = TimeSeries::new("x", times, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(
            s.filter_months(&[(2008, 4), (2009, 4)]).values,
            vec![2.0, 3.0]
        );
        assert_eq!(s.filter_months(&[]).len(), 4);
    }
}
