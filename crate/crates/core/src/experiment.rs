//! Parameter sweeps, the two-exponent grid and algorithm comparisons.
//!
//! All experiments on one split share a single [`Evaluator`]. Parameter
//! points are evaluated in parallel and collected in parameter order, so
//! reports are identical for any worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::SplitDataset;
use crate::error::{Error, Result};
use crate::kernel::{Family, KernelSpec};
use crate::metrics::{EvalOptions, Evaluator, MetricsReport};

/// Closed range `[lo, hi]` walked in fixed steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl ParamRange {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        let r = Self { lo, hi, step };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.step.is_finite()) {
            return Err(Error::InvalidParameter("range bounds and step must be finite".into()));
        }
        if self.lo > self.hi {
            return Err(Error::InvalidParameter(format!(
                "range lo {} exceeds hi {}",
                self.lo, self.hi
            )));
        }
        if self.step <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        Ok(())
    }

    /// `lo + i·step` for every `i` that stays within `hi`, rounded to ten
    /// decimals so that e.g. `0 + 79·0.01` is exactly `0.79`.
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| round10(self.lo + i as f64 * self.step)).collect()
    }
}

fn round10(x: f64) -> f64 {
    let r = (x * 1e10).round() / 1e10;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub family: Family,
    pub range: ParamRange,
    pub options: EvalOptions,
}

pub const DEFAULT_SWEEP_STEP: f64 = 0.01;
pub const DEFAULT_GRID_STEP: f64 = 0.05;

impl SweepPlan {
    /// The family's default range at the default step of 0.01.
    pub fn default_for(family: Family, options: EvalOptions) -> Self {
        let (lo, hi) = family.default_range();
        Self {
            family,
            range: ParamRange {
                lo,
                hi,
                step: DEFAULT_SWEEP_STEP,
            },
            options,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.range.validate()?;
        self.options.validate()?;
        if !self.family.is_parametric() {
            return Err(Error::InvalidParameter(format!(
                "{} has no parameter to sweep",
                self.family
            )));
        }
        if self.family == Family::Pd && (self.range.lo < -1.0 || self.range.hi > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "pd sweep range [{}, {}] leaves [-1, 0]",
                self.range.lo, self.range.hi
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub param: f64,
    pub report: Option<MetricsReport>,
    pub error: Option<String>,
}

impl SweepPoint {
    fn from_result(param: f64, result: Result<MetricsReport>) -> Self {
        match result {
            Ok(report) => Self {
                param,
                report: Some(report),
                error: None,
            },
            Err(e) => Self {
                param,
                report: None,
                error: Some(e.to_string()),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub family: Family,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn failed_points(&self) -> usize {
        self.points.iter().filter(|p| p.report.is_none()).count()
    }
}

/// Evaluates the family at every parameter of the plan on one split.
/// A failing point is recorded and the rest still run.
pub fn run_sweep(ds: &SplitDataset, plan: &SweepPlan) -> Result<SweepResult> {
    plan.validate()?;
    let evaluator = Evaluator::new(ds, plan.options)?;
    Ok(sweep_with(&evaluator, plan.family, &plan.range.points()))
}

fn sweep_with(evaluator: &Evaluator<'_>, family: Family, params: &[f64]) -> SweepResult {
    let points = params
        .par_iter()
        .map(|&p| {
            let result = family
                .spec(p)
                .and_then(|spec| evaluator.evaluate(spec))
                .map(|e| e.report);
            SweepPoint::from_result(p, result)
        })
        .collect();
    SweepResult { family, points }
}

/// The point with the smallest ranking score; ties go to the smaller
/// parameter.
pub fn find_optimal(points: &[SweepPoint]) -> Result<(f64, MetricsReport)> {
    let mut best: Option<(f64, &MetricsReport)> = None;
    for p in points {
        let Some(report) = &p.report else { continue };
        let better = match best {
            None => true,
            Some((param, b)) => {
                report.ranking_score < b.ranking_score || (report.ranking_score == b.ranking_score && p.param < param)
            }
        };
        if better {
            best = Some((p.param, report));
        }
    }
    best.map(|(p, r)| (p, r.clone())).ok_or(Error::EmptySweep)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridMetric {
    #[default]
    RankingScore,
    PrecisionEnhancement,
    Hamming,
    SelfInformation,
}

impl GridMetric {
    pub fn value(self, r: &MetricsReport) -> f64 {
        match self {
            GridMetric::RankingScore => r.ranking_score,
            GridMetric::PrecisionEnhancement => r.precision_enhancement,
            GridMetric::Hamming => r.hamming,
            GridMetric::SelfInformation => r.self_information,
        }
    }

    pub fn lower_is_better(self) -> bool {
        matches!(self, GridMetric::RankingScore)
    }

    pub fn name(self) -> &'static str {
        match self {
            GridMetric::RankingScore => "r",
            GridMetric::PrecisionEnhancement => "ep",
            GridMetric::Hamming => "h",
            GridMetric::SelfInformation => "i",
        }
    }
}

impl std::str::FromStr for GridMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "r" | "ranking_score" => Ok(GridMetric::RankingScore),
            "ep" | "precision_enhancement" => Ok(GridMetric::PrecisionEnhancement),
            "h" | "hamming" => Ok(GridMetric::Hamming),
            "i" | "I" | "self_information" => Ok(GridMetric::SelfInformation),
            other => Err(Error::InvalidParameter(format!("unknown grid metric '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPlan {
    pub a: ParamRange,
    pub b: ParamRange,
    pub metric: GridMetric,
    pub options: EvalOptions,
}

impl GridPlan {
    pub fn unit_square(step: f64, options: EvalOptions) -> Self {
        let r = ParamRange { lo: 0.0, hi: 1.0, step };
        Self {
            a: r,
            b: r,
            metric: GridMetric::RankingScore,
            options,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub a: f64,
    pub b: f64,
    pub value: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub metric: GridMetric,
    /// Row-major: `a` outer, `b` inner.
    pub cells: Vec<GridCell>,
    pub best: Option<GridCell>,
    /// Best cell on the line `a = b`.
    pub best_diagonal: Option<GridCell>,
    /// Cells within 1% of the best value.
    pub near_optimal: Vec<GridCell>,
}

impl GridResult {
    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.value.is_none()).count()
    }
}

fn pick_best<'a>(cells: impl Iterator<Item = &'a GridCell>, metric: GridMetric) -> Option<GridCell> {
    let mut best: Option<&GridCell> = None;
    for c in cells {
        let Some(v) = c.value else { continue };
        let better = match best.and_then(|b| b.value) {
            None => true,
            Some(bv) => {
                if metric.lower_is_better() {
                    v < bv
                } else {
                    v > bv
                }
            }
        };
        if better {
            best = Some(c);
        }
    }
    best.cloned()
}

/// Evaluates the two-exponent kernel on every `(a, b)` cell of the plan.
pub fn run_grid(ds: &SplitDataset, plan: &GridPlan) -> Result<GridResult> {
    plan.a.validate()?;
    plan.b.validate()?;
    let evaluator = Evaluator::new(ds, plan.options)?;
    let pairs: Vec<(f64, f64)> = plan
        .a
        .points()
        .into_iter()
        .flat_map(|a| plan.b.points().into_iter().map(move |b| (a, b)))
        .collect();
    let cells: Vec<GridCell> = pairs
        .par_iter()
        .map(|&(a, b)| match evaluator.evaluate(KernelSpec::generalized(a, b)) {
            Ok(e) => GridCell {
                a,
                b,
                value: Some(plan.metric.value(&e.report)),
                error: None,
            },
            Err(e) => GridCell {
                a,
                b,
                value: None,
                error: Some(e.to_string()),
            },
        })
        .collect();

    let best = pick_best(cells.iter(), plan.metric);
    let best_diagonal = pick_best(cells.iter().filter(|c| c.a == c.b), plan.metric);
    let near_optimal = match best.as_ref().and_then(|b| b.value) {
        None => Vec::new(),
        Some(bv) => cells
            .iter()
            .filter(|c| {
                c.value.is_some_and(|v| {
                    if plan.metric.lower_is_better() {
                        v <= bv + 0.01 * bv.abs()
                    } else {
                        v >= bv - 0.01 * bv.abs()
                    }
                })
            })
            .cloned()
            .collect(),
    };
    Ok(GridResult {
        metric: plan.metric,
        cells,
        best,
        best_diagonal,
        near_optimal,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub family: Family,
    pub parameter: Option<f64>,
    pub report: Option<MetricsReport>,
    pub failed_points: usize,
    pub error: Option<String>,
}

/// Which family holds the best value of each column.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BestColumns {
    pub ranking_score: Option<Family>,
    pub precision_enhancement: Option<Family>,
    pub hamming: Option<Family>,
    pub self_information: Option<Family>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub best: BestColumns,
}

impl ComparisonReport {
    pub fn row(&self, family: Family) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.family == family)
    }

    pub fn failed_points(&self) -> usize {
        self.rows.iter().map(|r| r.failed_points).sum()
    }
}

/// Sweeps each family over its default range at `step`, picks the point
/// with the lowest ranking score and tabulates all four metrics there.
pub fn compare_algorithms(
    ds: &SplitDataset,
    families: &[Family],
    step: f64,
    options: EvalOptions,
) -> Result<ComparisonReport> {
    let plans = families
        .iter()
        .map(|&family| {
            let mut plan = SweepPlan::default_for(family, options);
            plan.range.step = step;
            plan.validate()?;
            Ok(plan)
        })
        .collect::<Result<Vec<_>>>()?;
    let evaluator = Evaluator::new(ds, options)?;
    let rows: Vec<ComparisonRow> = plans
        .iter()
        .map(|plan| {
            let sweep = sweep_with(&evaluator, plan.family, &plan.range.points());
            let failed_points = sweep.failed_points();
            match find_optimal(&sweep.points) {
                Ok((param, report)) => ComparisonRow {
                    family: plan.family,
                    parameter: Some(param),
                    report: Some(report),
                    failed_points,
                    error: None,
                },
                Err(e) => ComparisonRow {
                    family: plan.family,
                    parameter: None,
                    report: None,
                    failed_points,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let best_by = |key: fn(&MetricsReport) -> f64, lower: bool| -> Option<Family> {
        let mut best: Option<(Family, f64)> = None;
        for row in &rows {
            let Some(r) = &row.report else { continue };
            let v = key(r);
            let better = best.is_none_or(|(_, b)| if lower { v < b } else { v > b });
            if better {
                best = Some((row.family, v));
            }
        }
        best.map(|(f, _)| f)
    };
    let best = BestColumns {
        ranking_score: best_by(|r| r.ranking_score, true),
        precision_enhancement: best_by(|r| r.precision_enhancement, false),
        hamming: best_by(|r| r.hamming, false),
        self_information: best_by(|r| r.self_information, false),
    };
    Ok(ComparisonReport { rows, best })
}
