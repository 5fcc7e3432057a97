//! Run configuration: built-in defaults, overridden by a flat `key = value`
//! config file, overridden by command-line flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use clap::Args;
use diffrec::dataset::DEFAULT_SPLIT_RATIO;
use diffrec::experiment::{DEFAULT_GRID_STEP, DEFAULT_SWEEP_STEP};
use diffrec::kernel::DEFAULT_ORACLE_CAP;
use diffrec::metrics::DEFAULT_TOP_L;
use diffrec::{EvalOptions, Family, FieldLayout, GridMetric, KernelSpec};
use serde::Serialize;

/// Flags shared by every subcommand. Each may also be given in the config
/// file under the same name without the leading dashes.
#[derive(Args, Debug, Clone, Default)]
pub struct RunArgs {
    /// Raw interaction file or split file produced by `ingest`
    #[arg(long)]
    pub input: Option<String>,
    /// Field layout of a raw input: tsv, csv or <delim>:<cols>
    #[arg(long)]
    pub format: Option<String>,
    /// Fraction of links kept for training
    #[arg(long)]
    pub ratio: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Drop ratings below this value when ingesting
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Kernel family: md, hc, hhp, bhc, bd, pd or gen (two exponents)
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<f64>,
    /// Exponent on the receiving object's degree (gen kernel)
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Exponent on the emitting object's degree (gen kernel)
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    /// Use the literal per-object normaliser for pd
    #[arg(long)]
    pub pd_printed: bool,
    /// Recommendation list length L
    #[arg(long)]
    pub top_l: Option<usize>,
    /// Parameter range lo:hi
    #[arg(long, allow_hyphen_values = true)]
    pub range: Option<String>,
    #[arg(long)]
    pub step: Option<f64>,
    /// Output file (ingest) or directory (reports)
    #[arg(long)]
    pub out: Option<String>,
    /// Report format: csv, json or both
    #[arg(long)]
    pub out_format: Option<String>,
    /// Worker threads; defaults to the machine's parallelism
    #[arg(long)]
    pub workers: Option<usize>,
    /// Flat key = value config file
    #[arg(long)]
    pub config: Option<String>,
    /// Log base for the degree-bin width ½·log 5 (default: natural)
    #[arg(long)]
    pub bin_log_base: Option<f64>,
    /// Largest object count for which the dense oracle may be built
    #[arg(long)]
    pub oracle_cap: Option<usize>,
    /// Grid metric: r, ep, h or i
    #[arg(long)]
    pub metric: Option<String>,
    /// Families to compare, comma separated
    #[arg(long)]
    pub kernels: Option<String>,
    /// Raw user id (recommend)
    #[arg(long)]
    pub user: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutFormat {
    Csv,
    Json,
    Both,
}

impl OutFormat {
    pub fn csv(self) -> bool {
        matches!(self, OutFormat::Csv | OutFormat::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, OutFormat::Json | OutFormat::Both)
    }
}

/// Fully resolved settings. Everything that can change a reported number is
/// serialised into reports; `workers` and `out` are not, since they only
/// affect where and how fast results are produced.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub input: PathBuf,
    pub format: String,
    pub ratio: f64,
    pub seed: u64,
    pub threshold: Option<f64>,
    pub kernel: Option<String>,
    pub lambda: Option<f64>,
    pub epsilon: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub pd_printed: bool,
    pub top_l: usize,
    pub range: Option<(f64, f64)>,
    pub step: Option<f64>,
    pub bin_log_base: Option<f64>,
    pub oracle_cap: usize,
    pub metric: GridMetric,
    pub kernels: Vec<Family>,
    pub user: Option<String>,
    #[serde(skip)]
    pub layout: FieldLayout,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub out_format: OutFormat,
    #[serde(skip)]
    pub workers: Option<usize>,
}

const KEYS: &[&str] = &[
    "input",
    "format",
    "ratio",
    "seed",
    "threshold",
    "kernel",
    "lambda",
    "epsilon",
    "a",
    "b",
    "pd-printed",
    "top-l",
    "range",
    "step",
    "out",
    "out-format",
    "workers",
    "bin-log-base",
    "oracle-cap",
    "metric",
    "kernels",
    "user",
];

/// Parses a flat config file: one `key = value` per line, `#` comments.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, Vec<String>> {
    let mut map = BTreeMap::new();
    let mut errors = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            errors.push(format!("config line {}: expected key = value", i + 1));
            continue;
        };
        let key = k.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            errors.push(format!("config line {}: unknown key '{}'", i + 1, k.trim()));
            continue;
        }
        map.insert(key, v.trim().to_owned());
    }
    if errors.is_empty() {
        Ok(map)
    } else {
        Err(errors)
    }
}

pub fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("range '{s}' must look like lo:hi"))?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad range start '{lo}'"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad range end '{hi}'"))?;
    Ok((lo, hi))
}

/// Which subcommand is being configured; decides which settings are required.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Ingest,
    Recommend,
    Evaluate,
    Sweep,
    Grid,
    Compare,
}

struct Merger<'a> {
    file: BTreeMap<String, String>,
    errors: &'a mut Vec<String>,
}

impl Merger<'_> {
    fn pick<T: std::str::FromStr>(&mut self, key: &str, flag: Option<T>) -> Option<T> {
        if flag.is_some() {
            return flag;
        }
        let raw = self.file.get(key)?;
        match raw.parse() {
            Ok(v) => Some(v),
            Err(_) => {
                self.errors.push(format!("config key '{key}': cannot parse '{raw}'"));
                None
            }
        }
    }
}

impl RunConfig {
    /// Merges defaults, the config file named by `--config` and the flags,
    /// then validates. Returns every problem found, not just the first.
    pub fn resolve(args: &RunArgs, mode: Mode) -> Result<Self, Vec<String>> {
        let mut errors = Vec::new();
        let file = match &args.config {
            None => BTreeMap::new(),
            Some(path) => match fs::read_to_string(path) {
                Ok(text) => match parse_config_file(&text) {
                    Ok(map) => map,
                    Err(errs) => {
                        errors.extend(errs);
                        BTreeMap::new()
                    }
                },
                Err(e) => {
                    errors.push(format!("cannot read config file {path}: {e}"));
                    BTreeMap::new()
                }
            },
        };
        let mut m = Merger {
            file,
            errors: &mut errors,
        };

        let input = m.pick("input", args.input.clone());
        let format = m.pick("format", args.format.clone()).unwrap_or_else(|| "tsv".into());
        let ratio = m.pick("ratio", args.ratio).unwrap_or(DEFAULT_SPLIT_RATIO);
        let seed = m.pick("seed", args.seed).unwrap_or(0);
        let threshold = m.pick("threshold", args.threshold);
        let kernel = m.pick("kernel", args.kernel.clone());
        let lambda = m.pick("lambda", args.lambda);
        let epsilon = m.pick("epsilon", args.epsilon);
        let a = m.pick("a", args.a);
        let b = m.pick("b", args.b);
        let pd_printed = args.pd_printed || m.pick::<bool>("pd-printed", None).unwrap_or(false);
        let top_l = m.pick("top-l", args.top_l).unwrap_or(DEFAULT_TOP_L);
        let range_raw: Option<String> = m.pick("range", args.range.clone());
        let step = m.pick("step", args.step);
        let out = m.pick::<String>("out", args.out.clone());
        let out_format_raw = m
            .pick("out-format", args.out_format.clone())
            .unwrap_or_else(|| "both".into());
        let workers = m.pick("workers", args.workers);
        let bin_log_base = m.pick("bin-log-base", args.bin_log_base);
        let oracle_cap = m.pick("oracle-cap", args.oracle_cap).unwrap_or(DEFAULT_ORACLE_CAP);
        let metric_raw: Option<String> = m.pick("metric", args.metric.clone());
        let kernels_raw: Option<String> = m.pick("kernels", args.kernels.clone());
        let user = m.pick("user", args.user.clone());

        let input = match input {
            None => {
                errors.push("--input is required".into());
                PathBuf::new()
            }
            Some(p) => {
                let p = PathBuf::from(p);
                if !p.exists() {
                    errors.push(format!("input {} does not exist", p.display()));
                }
                p
            }
        };
        let layout = format.parse::<FieldLayout>().unwrap_or_else(|e| {
            errors.push(format!("--format: {e}"));
            FieldLayout::default()
        });
        if !(ratio > 0.0 && ratio < 1.0) {
            errors.push(format!("--ratio must lie strictly between 0 and 1, got {ratio}"));
        }
        if top_l == 0 {
            errors.push("--top-l must be at least 1".into());
        }
        if let Some(s) = step {
            if !(s > 0.0 && s.is_finite()) {
                errors.push(format!("--step must be positive, got {s}"));
            }
        }
        let range = range_raw.and_then(|r| match parse_range(&r) {
            Ok((lo, hi)) if lo <= hi => Some((lo, hi)),
            Ok(_) => {
                errors.push(format!("--range {r}: lo exceeds hi"));
                None
            }
            Err(e) => {
                errors.push(format!("--range: {e}"));
                None
            }
        });
        let out_format = match out_format_raw.as_str() {
            "csv" => OutFormat::Csv,
            "json" => OutFormat::Json,
            "both" => OutFormat::Both,
            other => {
                errors.push(format!("--out-format must be csv, json or both, got '{other}'"));
                OutFormat::Both
            }
        };
        if workers == Some(0) {
            errors.push("--workers must be at least 1".into());
        }
        if let Some(b) = bin_log_base {
            if !(b > 0.0 && b != 1.0 && b.is_finite()) {
                errors.push(format!("--bin-log-base must be positive and not 1, got {b}"));
            }
        }
        let metric = metric_raw
            .map(|s| {
                s.parse::<GridMetric>().unwrap_or_else(|e| {
                    errors.push(format!("--metric: {e}"));
                    GridMetric::RankingScore
                })
            })
            .unwrap_or_default();
        let kernels = match kernels_raw {
            None => Family::COMPARED.to_vec(),
            Some(list) => list
                .split(',')
                .filter_map(|f| match f.trim().parse::<Family>() {
                    Ok(fam) if fam.is_parametric() => Some(fam),
                    Ok(fam) => {
                        errors.push(format!("--kernels: {fam} has no parameter to optimise"));
                        None
                    }
                    Err(e) => {
                        errors.push(format!("--kernels: {e}"));
                        None
                    }
                })
                .collect(),
        };

        let config = RunConfig {
            input,
            format,
            ratio,
            seed,
            threshold,
            kernel,
            lambda,
            epsilon,
            a,
            b,
            pd_printed,
            top_l,
            range,
            step,
            bin_log_base,
            oracle_cap,
            metric,
            kernels,
            user,
            layout,
            out: out.map(PathBuf::from),
            out_format,
            workers,
        };
        config.check_mode(mode, &mut errors);
        if errors.is_empty() {
            Ok(config)
        } else {
            Err(errors)
        }
    }

    fn check_mode(&self, mode: Mode, errors: &mut Vec<String>) {
        match mode {
            Mode::Ingest => {
                if self.out.is_none() {
                    errors.push("ingest needs --out <split file>".into());
                }
            }
            Mode::Recommend | Mode::Evaluate => {
                if let Err(e) = self.kernel_spec() {
                    errors.push(e);
                }
                if mode == Mode::Recommend && self.user.is_none() {
                    errors.push("recommend needs --user <raw id>".into());
                }
            }
            Mode::Sweep => match self.family() {
                Ok(f) if !f.is_parametric() => errors.push(format!("--kernel {f} has no parameter to sweep")),
                Ok(f) => {
                    if let Err(e) = self.sweep_plan(f).validate() {
                        errors.push(e.to_string());
                    }
                }
                Err(e) => errors.push(e),
            },
            Mode::Grid | Mode::Compare => {}
        }
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            top_l: self.top_l,
            bin_log_base: self.bin_log_base,
        }
    }

    pub fn family(&self) -> Result<Family, String> {
        let name = self.kernel.as_deref().ok_or("--kernel is required")?;
        name.parse::<Family>().map_err(|e| format!("--kernel: {e}"))
    }

    /// The single kernel named by `--kernel` and its parameter flags.
    pub fn kernel_spec(&self) -> Result<KernelSpec, String> {
        let name = self.kernel.as_deref().ok_or("--kernel is required")?;
        let need = |v: Option<f64>, flag: &str| v.ok_or(format!("--kernel {name} needs --{flag}"));
        let spec = match name.to_ascii_lowercase().as_str() {
            "gen" | "generalized" => KernelSpec::generalized(need(self.a, "a")?, need(self.b, "b")?),
            "pd" if self.pd_printed => KernelSpec::pd_printed(need(self.epsilon, "epsilon")?),
            "pd" => KernelSpec::pd(need(self.epsilon, "epsilon")?),
            _ => {
                let family = self.family()?;
                let param = if family.is_parametric() {
                    need(self.lambda, "lambda")?
                } else {
                    0.0
                };
                family.spec(param).map_err(|e| e.to_string())?
            }
        };
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }

    pub fn sweep_plan(&self, family: Family) -> diffrec::SweepPlan {
        let (lo, hi) = self.range.unwrap_or_else(|| family.default_range());
        diffrec::SweepPlan {
            family,
            range: diffrec::ParamRange {
                lo,
                hi,
                step: self.step.unwrap_or(DEFAULT_SWEEP_STEP),
            },
            options: self.eval_options(),
        }
    }

    pub fn grid_plan(&self) -> diffrec::GridPlan {
        let (lo, hi) = self.range.unwrap_or((0.0, 1.0));
        let r = diffrec::ParamRange {
            lo,
            hi,
            step: self.step.unwrap_or(DEFAULT_GRID_STEP),
        };
        diffrec::GridPlan {
            a: r,
            b: r,
            metric: self.metric,
            options: self.eval_options(),
        }
    }

    pub fn compare_step(&self) -> f64 {
        self.step.unwrap_or(DEFAULT_SWEEP_STEP)
    }
}
