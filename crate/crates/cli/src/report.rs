//! Report files. JSON carries the full nested result; CSV files are long
//! format, one row per parameter point, grid cell, degree bin or
//! comparison row.
//!
//! | file              | columns |
//! |-------------------|---------|
//! | `evaluate.csv`    | kernel, top_l, r, ep, h, i, users_evaluated, links_evaluated, links_skipped |
//! | `degree_bins.csv` | kernel, x, lo, hi, mean_r, link_count, object_count |
//! | `sweep.csv`       | family, param, status, r, ep, h, i, users_evaluated, links_evaluated, error |
//! | `grid.csv`        | a, b, metric, value, status, error |
//! | `compare.csv`     | family, parameter, r, ep, h, i, best_r, best_ep, best_h, best_i, failed_points, error |
//!
//! Every JSON report has the top-level fields `command`, `config`, `split`
//! and `result`. Empty CSV fields mean "not available" (failed point or
//! empty bin).

use std::fs;
use std::path::{Path, PathBuf};

use diffrec::experiment::{ComparisonReport, GridResult};
use diffrec::metrics::{DegreeBinCurve, MetricsReport};
use diffrec::{Family, SplitDataset, SweepResult};
use serde::Serialize;

use crate::config::{OutFormat, RunConfig};

#[derive(Serialize)]
pub struct SplitInfo {
    pub checksum: String,
    pub ratio: f64,
    pub seed: u64,
    pub users: usize,
    pub objects: usize,
    pub train_links: usize,
    pub test_links: usize,
}

impl SplitInfo {
    pub fn of(ds: &SplitDataset) -> Self {
        SplitInfo {
            checksum: ds.checksum(),
            ratio: ds.ratio(),
            seed: ds.seed(),
            users: ds.num_users(),
            objects: ds.num_objects(),
            train_links: ds.train().num_links(),
            test_links: ds.num_test_links(),
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    config: &'a RunConfig,
    split: &'a SplitInfo,
    result: &'a T,
}

pub struct ReportWriter<'a> {
    dir: PathBuf,
    format: OutFormat,
    config: &'a RunConfig,
    split: SplitInfo,
    command: &'static str,
}

impl<'a> ReportWriter<'a> {
    pub fn new(command: &'static str, config: &'a RunConfig, ds: &SplitDataset) -> std::io::Result<Self> {
        let dir = config.out.clone().unwrap_or_else(|| PathBuf::from("reports"));
        fs::create_dir_all(&dir)?;
        Ok(ReportWriter {
            dir,
            format: config.out_format,
            config,
            split: SplitInfo::of(ds),
            command,
        })
    }

    pub fn json<T: Serialize>(&self, result: &T) -> std::io::Result<()> {
        if !self.format.json() {
            return Ok(());
        }
        let env = Envelope {
            command: self.command,
            config: self.config,
            split: &self.split,
            result,
        };
        let mut bytes = serde_json::to_vec_pretty(&env).map_err(std::io::Error::other)?;
        bytes.push(b'\n');
        fs::write(self.dir.join(format!("{}.json", self.command)), bytes)
    }

    pub fn csv<R: Serialize>(&self, name: &str, rows: impl IntoIterator<Item = R>) -> std::io::Result<()> {
        if !self.format.csv() {
            return Ok(());
        }
        write_csv(&self.dir.join(name), rows)
    }
}

fn write_csv<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row).map_err(std::io::Error::other)?;
    }
    w.flush()
}

#[derive(Serialize)]
pub struct EvaluateRow {
    kernel: String,
    top_l: usize,
    r: f64,
    ep: f64,
    h: f64,
    i: f64,
    users_evaluated: usize,
    links_evaluated: usize,
    links_skipped: usize,
}

impl From<&MetricsReport> for EvaluateRow {
    fn from(r: &MetricsReport) -> Self {
        EvaluateRow {
            kernel: r.kernel.to_string(),
            top_l: r.top_l,
            r: r.ranking_score,
            ep: r.precision_enhancement,
            h: r.hamming,
            i: r.self_information,
            users_evaluated: r.users_evaluated,
            links_evaluated: r.links_evaluated,
            links_skipped: r.links_skipped,
        }
    }
}

#[derive(Serialize)]
pub struct DegreeBinRow {
    kernel: String,
    x: u32,
    lo: f64,
    hi: f64,
    mean_r: Option<f64>,
    link_count: usize,
    object_count: usize,
}

pub fn degree_bin_rows(kernel: String, curve: &DegreeBinCurve) -> Vec<DegreeBinRow> {
    curve
        .points
        .iter()
        .map(|p| DegreeBinRow {
            kernel: kernel.clone(),
            x: p.x,
            lo: p.lo,
            hi: p.hi,
            mean_r: p.mean_r,
            link_count: p.link_count,
            object_count: p.object_count,
        })
        .collect()
}

#[derive(Serialize)]
pub struct SweepRow {
    family: Family,
    param: f64,
    status: &'static str,
    r: Option<f64>,
    ep: Option<f64>,
    h: Option<f64>,
    i: Option<f64>,
    users_evaluated: Option<usize>,
    links_evaluated: Option<usize>,
    error: Option<String>,
}

pub fn sweep_rows(sweep: &SweepResult) -> Vec<SweepRow> {
    sweep
        .points
        .iter()
        .map(|p| {
            let r = p.report.as_ref();
            SweepRow {
                family: sweep.family,
                param: p.param,
                status: if r.is_some() { "ok" } else { "failed" },
                r: r.map(|r| r.ranking_score),
                ep: r.map(|r| r.precision_enhancement),
                h: r.map(|r| r.hamming),
                i: r.map(|r| r.self_information),
                users_evaluated: r.map(|r| r.users_evaluated),
                links_evaluated: r.map(|r| r.links_evaluated),
                error: p.error.clone(),
            }
        })
        .collect()
}

#[derive(Serialize)]
pub struct GridRow {
    a: f64,
    b: f64,
    metric: &'static str,
    value: Option<f64>,
    status: &'static str,
    error: Option<String>,
}

pub fn grid_rows(grid: &GridResult) -> Vec<GridRow> {
    grid.cells
        .iter()
        .map(|c| GridRow {
            a: c.a,
            b: c.b,
            metric: grid.metric.name(),
            value: c.value,
            status: if c.value.is_some() { "ok" } else { "failed" },
            error: c.error.clone(),
        })
        .collect()
}

#[derive(Serialize)]
pub struct CompareRow {
    family: Family,
    parameter: Option<f64>,
    r: Option<f64>,
    ep: Option<f64>,
    h: Option<f64>,
    i: Option<f64>,
    best_r: bool,
    best_ep: bool,
    best_h: bool,
    best_i: bool,
    failed_points: usize,
    error: Option<String>,
}

pub fn compare_rows(cmp: &ComparisonReport) -> Vec<CompareRow> {
    cmp.rows
        .iter()
        .map(|row| {
            let r = row.report.as_ref();
            let f = Some(row.family);
            CompareRow {
                family: row.family,
                parameter: row.parameter,
                r: r.map(|r| r.ranking_score),
                ep: r.map(|r| r.precision_enhancement),
                h: r.map(|r| r.hamming),
                i: r.map(|r| r.self_information),
                best_r: cmp.best.ranking_score == f,
                best_ep: cmp.best.precision_enhancement == f,
                best_h: cmp.best.hamming == f,
                best_i: cmp.best.self_information == f,
                failed_points: row.failed_points,
                error: row.error.clone(),
            }
        })
        .collect()
}

/// `r=… ep(L)=… h(L)=… I(L)=…` with five decimals.
pub fn metric_summary(r: &MetricsReport) -> String {
    let l = r.top_l;
    format!(
        "r={:.5} ep({l})={:.5} h({l})={:.5} I({l})={:.5}",
        r.ranking_score, r.precision_enhancement, r.hamming, r.self_information
    )
}
