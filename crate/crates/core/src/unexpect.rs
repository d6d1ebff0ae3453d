//! Unexpectedness quotients and their determinants.
//!
//! For each engagement type a quantile baseline predicts the count from the
//! other two counts. The quotient `E = observed / max(predicted, floor)` says
//! how far a post exceeded that expectation; `ln E` is then regressed on
//! content, topic and author features.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{EngagementCounts, FilterConfig};
use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::linalg::dependent_columns;
use crate::linmod::{self, fmt_f64, CvReport, RegressionResult, WelchTest};
use crate::quantreg::{self, validate_tau, QuantileModel, SolverConfig};
use crate::stats::{mean, quantile_sorted, sorted, std_dev};
use crate::textfeat::{FeatureVector, LexiconPaths, SentimentConfig};
use crate::topics::Topic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Likes,
    Retweets,
    Comments,
}

impl Target {
    pub const ALL: [Target; 3] = [Target::Likes, Target::Retweets, Target::Comments];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Target::Likes => "likes",
            Target::Retweets => "retweets",
            Target::Comments => "comments",
        }
    }

    pub fn count(self, c: &EngagementCounts) -> u64 {
        c.as_array()[self.index()]
    }

    /// The two other engagement types, in fixed order.
    pub fn predictors(self) -> [Target; 2] {
        match self {
            Target::Likes => [Target::Retweets, Target::Comments],
            Target::Retweets => [Target::Likes, Target::Comments],
            Target::Comments => [Target::Likes, Target::Retweets],
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Target::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::config(format!("unknown engagement type {s:?}")))
    }
}

/// Scale on which the baselines are fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantileScale {
    #[default]
    Raw,
    /// Fit on `ln(1 + count)` and map predictions back with `exp(·) − 1`.
    Log1p,
}

impl QuantileScale {
    pub fn forward(self, count: f64) -> f64 {
        match self {
            QuantileScale::Raw => count,
            QuantileScale::Log1p => count.ln_1p(),
        }
    }

    pub fn inverse(self, v: f64) -> f64 {
        match self {
            QuantileScale::Raw => v,
            QuantileScale::Log1p => v.exp_m1(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            QuantileScale::Raw => "raw",
            QuantileScale::Log1p => "log1p",
        }
    }
}

impl FromStr for QuantileScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(QuantileScale::Raw),
            "log1p" => Ok(QuantileScale::Log1p),
            _ => Err(Error::config(format!("quantile_scale must be raw or log1p, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OlsVariant {
    Linear,
    /// Adds the square of every continuous predictor.
    Quadratic,
    /// Adds topic × content-feature products.
    Interactions,
}

impl OlsVariant {
    pub const ALL: [OlsVariant; 3] = [OlsVariant::Linear, OlsVariant::Quadratic, OlsVariant::Interactions];

    pub fn name(self) -> &'static str {
        match self {
            OlsVariant::Linear => "linear",
            OlsVariant::Quadratic => "quadratic",
            OlsVariant::Interactions => "interactions",
        }
    }
}

/// Continuous predictors of the determinant model, in design order.
pub const CONTINUOUS_FEATURES: [&str; 7] =
    ["readability", "concreteness", "length", "sentiment", "subjectivity", "followers", "listed"];

/// Content features crossed with topics in the interaction variant.
pub const CONTENT_FEATURES: [&str; 5] = ["readability", "concreteness", "length", "sentiment", "subjectivity"];

/// Features that may be listed in `log_transform_columns` (all are ≥ 0).
pub const LOG_TRANSFORMABLE: [&str; 5] = ["readability", "concreteness", "length", "followers", "listed"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub tau: f64,
    pub quantile_scale: QuantileScale,
    pub prediction_floor: f64,
    /// Continuous predictors replaced by `ln(1 + x)` before standardization.
    pub log_transform_columns: Vec<String>,
    pub ols_variants: Vec<OlsVariant>,
    /// Second analysis threshold: keep posts with at least this many of some engagement type.
    pub robustness_min_any: u64,
    /// Extra quantile levels for the sign-robustness table.
    pub robustness_taus: Vec<f64>,
    pub cv_k: usize,
    pub cv_seed: u64,
    pub filter: FilterConfig,
    pub solver: SolverConfig,
    pub sentiment: SentimentConfig,
    pub lexicons: LexiconPaths,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tau: 0.9,
            quantile_scale: QuantileScale::Raw,
            prediction_floor: 1.0,
            log_transform_columns: vec!["length".into(), "followers".into(), "listed".into()],
            ols_variants: OlsVariant::ALL.to_vec(),
            robustness_min_any: 10,
            robustness_taus: vec![0.5, 0.75],
            cv_k: 10,
            cv_seed: 1,
            filter: FilterConfig::default(),
            solver: SolverConfig::default(),
            sentiment: SentimentConfig::default(),
            lexicons: LexiconPaths::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        validate_tau(self.tau)?;
        for &t in &self.robustness_taus {
            validate_tau(t).map_err(|_| Error::config(format!("robustness_taus: tau must be in (0, 1), got {t}")))?;
        }
        if !(self.prediction_floor > 0.0) || !self.prediction_floor.is_finite() {
            return Err(Error::config(format!("prediction_floor must be > 0, got {}", self.prediction_floor)));
        }
        for c in &self.log_transform_columns {
            if !LOG_TRANSFORMABLE.contains(&c.as_str()) {
                return Err(Error::config(format!(
                    "log_transform_columns: {c:?} is not one of {}",
                    LOG_TRANSFORMABLE.join(", ")
                )));
            }
        }
        if self.ols_variants.is_empty() {
            return Err(Error::config("ols_variants must not be empty"));
        }
        if self.cv_k < 2 {
            return Err(Error::config(format!("cv_k must be >= 2, got {}", self.cv_k)));
        }
        self.filter.validate()?;
        self.solver.validate()?;
        self.sentiment.validate()
    }

    /// Main τ followed by the robustness levels, deduplicated, in config order.
    pub fn all_taus(&self) -> Vec<f64> {
        let mut out = vec![self.tau];
        for &t in &self.robustness_taus {
            if !out.contains(&t) {
                out.push(t);
            }
        }
        out
    }
}

/// One quantile baseline per engagement type, indexed by [`Target::index`].
#[derive(Debug, Clone, PartialEq)]
pub struct Baselines {
    pub tau: f64,
    pub scale: QuantileScale,
    pub models: [QuantileModel; 3],
}

fn baseline_design(counts: &[EngagementCounts], target: Target, scale: QuantileScale) -> Result<DesignMatrix> {
    let mut x = DesignMatrix::with_intercept(counts.len());
    for p in target.predictors() {
        x.push_column(p.name(), counts.iter().map(|c| scale.forward(p.count(c) as f64)).collect())?;
    }
    Ok(x)
}

/// Fits each engagement type on the other two counts plus an intercept.
pub fn fit_baselines(
    counts: &[EngagementCounts],
    tau: f64,
    scale: QuantileScale,
    solver: &SolverConfig,
) -> Result<Baselines> {
    if counts.len() < 10 {
        return Err(Error::input(format!("baselines need at least 10 records, got {}", counts.len())));
    }
    let fitted = Target::ALL
        .par_iter()
        .map(|&t| {
            let x = baseline_design(counts, t, scale)?;
            let y: Vec<f64> = counts.iter().map(|c| scale.forward(t.count(c) as f64)).collect();
            fit_dropping_dependent(&x, &y, tau, solver)
        })
        .collect::<Result<Vec<_>>>()?;
    let models: [QuantileModel; 3] = fitted.try_into().expect("three targets");
    Ok(Baselines { tau, scale, models })
}

/// Fits after removing predictors that duplicate earlier columns; their
/// coefficients are reported as 0 so every model keeps the full column set.
fn fit_dropping_dependent(x: &DesignMatrix, y: &[f64], tau: f64, solver: &SolverConfig) -> Result<QuantileModel> {
    let dependent = dependent_columns(x);
    if dependent.is_empty() {
        return quantreg::fit(x, y, tau, solver);
    }
    let reduced = x.without_columns(&dependent);
    let mut m = quantreg::fit(&reduced, y, tau, solver)?;
    m.coefficients = x.names().iter().map(|c| reduced.column_index(c).map_or(0.0, |j| m.coefficients[j])).collect();
    m.columns = x.names().to_vec();
    Ok(m)
}

impl Baselines {
    /// Count-scale predictions for every record, before flooring.
    pub fn predict(&self, counts: &[EngagementCounts]) -> Result<[Vec<f64>; 3]> {
        let mut out: [Vec<f64>; 3] = Default::default();
        for t in Target::ALL {
            let x = baseline_design(counts, t, self.scale)?;
            let raw = self.models[t.index()].predict(&x)?;
            out[t.index()] = raw.into_iter().map(|v| self.scale.inverse(v)).collect();
        }
        Ok(out)
    }

    /// `target,tau,scale,term,estimate,iterations,pivots,final_loss,converged`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv_writer(w);
        out.write_record([
            "target",
            "tau",
            "scale",
            "term",
            "estimate",
            "iterations",
            "pivots",
            "final_loss",
            "converged",
        ])?;
        for t in Target::ALL {
            let m = &self.models[t.index()];
            for (term, b) in m.columns.iter().zip(&m.coefficients) {
                out.write_record([
                    t.name().to_string(),
                    fmt_f64(self.tau),
                    self.scale.name().to_string(),
                    term.clone(),
                    fmt_f64(*b),
                    m.report.iterations.to_string(),
                    m.report.pivots.to_string(),
                    fmt_f64(m.report.final_loss),
                    m.report.converged.to_string(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

/// Observed, predicted and quotient values of one post, indexed by [`Target::index`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnexpectednessScores {
    pub id: String,
    pub counts: EngagementCounts,
    /// Floored count-scale predictions.
    pub predicted: [f64; 3],
    pub quotient: [f64; 3],
    pub log_quotient: [f64; 3],
}

impl UnexpectednessScores {
    fn new(id: String, counts: EngagementCounts, predicted: [f64; 3]) -> Self {
        let obs = counts.as_array();
        let quotient = [0, 1, 2].map(|k| obs[k] as f64 / predicted[k]);
        let log_quotient = quotient.map(f64::ln);
        Self { id, counts, predicted, quotient, log_quotient }
    }
}

/// Quotient of observed to floored predicted counts.
pub fn quotient(observed: f64, predicted: f64, floor: f64) -> f64 {
    observed / predicted.max(floor)
}

pub fn score<S: AsRef<str>>(
    ids: &[S],
    counts: &[EngagementCounts],
    baselines: &Baselines,
    prediction_floor: f64,
) -> Result<Vec<UnexpectednessScores>> {
    if ids.len() != counts.len() {
        return Err(Error::input("ids and counts differ in length"));
    }
    let pred = baselines.predict(counts)?;
    Ok(ids
        .iter()
        .zip(counts)
        .enumerate()
        .map(|(i, (id, c))| {
            let p = [0, 1, 2].map(|k| pred[k][i].max(prediction_floor));
            UnexpectednessScores::new(id.as_ref().to_string(), *c, p)
        })
        .collect())
}

const SCORES_HEADER: [&str; 10] = [
    "id",
    "likes",
    "retweets",
    "comments",
    "pred_likes",
    "pred_retweets",
    "pred_comments",
    "e_likes",
    "e_retweets",
    "e_comments",
];

pub fn write_scores_csv<W: Write>(w: W, scores: &[UnexpectednessScores]) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(SCORES_HEADER)?;
    for s in scores {
        let mut row = vec![s.id.clone()];
        row.extend(s.counts.as_array().iter().map(u64::to_string));
        row.extend(s.predicted.iter().map(|v| fmt_f64(*v)));
        row.extend(s.quotient.iter().map(|v| fmt_f64(*v)));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_scores_csv<R: Read>(r: R) -> Result<Vec<UnexpectednessScores>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != SCORES_HEADER {
        return Err(Error::input(format!("scores header must be {}", SCORES_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |what: &str| Error::Record { line, message: format!("invalid {what}") };
        let int = |k: usize| rec[k].parse::<u64>().map_err(|_| bad(SCORES_HEADER[k]));
        let real = |k: usize| rec[k].parse::<f64>().map_err(|_| bad(SCORES_HEADER[k]));
        let counts = EngagementCounts::new(int(1)?, int(2)?, int(3)?);
        let predicted = [real(4)?, real(5)?, real(6)?];
        if predicted.iter().any(|p| !(*p > 0.0)) {
            return Err(bad("prediction"));
        }
        out.push(UnexpectednessScores::new(rec[0].to_string(), counts, predicted));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairTest {
    pub a: Target,
    pub b: Target,
    pub test: WelchTest,
    pub mean_a: f64,
    pub mean_b: f64,
}

/// Per-type summary of log-quotients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeSummary {
    pub target: Target,
    pub mean: f64,
    pub sd: f64,
    pub mean_abs: f64,
    pub p10: f64,
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
    pub p90: f64,
    /// Share of posts with quotient > 1.
    pub frac_above_one: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionComparison {
    pub tests: Vec<PairTest>,
    pub summaries: Vec<TypeSummary>,
}

/// Pairs compared, in output order.
pub const COMPARED_PAIRS: [(Target, Target); 3] =
    [(Target::Comments, Target::Likes), (Target::Comments, Target::Retweets), (Target::Likes, Target::Retweets)];

pub fn compare_distributions(scores: &[UnexpectednessScores]) -> Result<DistributionComparison> {
    if scores.len() < 2 {
        return Err(Error::degenerate("distribution comparison needs at least 2 scored posts"));
    }
    let logs: [Vec<f64>; 3] = [0, 1, 2].map(|k| scores.iter().map(|s| s.log_quotient[k]).collect());
    let tests = COMPARED_PAIRS
        .iter()
        .map(|&(a, b)| {
            let (xa, xb) = (&logs[a.index()], &logs[b.index()]);
            Ok(PairTest { a, b, test: linmod::welch_ttest(xa, xb)?, mean_a: mean(xa), mean_b: mean(xb) })
        })
        .collect::<Result<_>>()?;
    let summaries = Target::ALL
        .iter()
        .map(|&t| {
            let v = &logs[t.index()];
            let s = sorted(v);
            let abs: Vec<f64> = v.iter().map(|x| x.abs()).collect();
            TypeSummary {
                target: t,
                mean: mean(v),
                sd: std_dev(v),
                mean_abs: mean(&abs),
                p10: quantile_sorted(&s, 0.1),
                p25: quantile_sorted(&s, 0.25),
                median: quantile_sorted(&s, 0.5),
                p75: quantile_sorted(&s, 0.75),
                p90: quantile_sorted(&s, 0.9),
                frac_above_one: v.iter().filter(|x| **x > 0.0).count() as f64 / v.len() as f64,
            }
        })
        .collect();
    Ok(DistributionComparison { tests, summaries })
}

impl DistributionComparison {
    pub fn summary(&self, t: Target) -> &TypeSummary {
        &self.summaries[t.index()]
    }

    /// `pair,t,df,p,mean_a,mean_b`.
    pub fn write_tests_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv_writer(w);
        out.write_record(["pair", "t", "df", "p", "mean_a", "mean_b"])?;
        for pt in &self.tests {
            out.write_record([
                format!("{}-{}", pt.a, pt.b),
                fmt_f64(pt.test.t),
                fmt_f64(pt.test.df),
                fmt_f64(pt.test.p),
                fmt_f64(pt.mean_a),
                fmt_f64(pt.mean_b),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv_writer(w);
        out.write_record([
            "type",
            "mean_log_e",
            "sd_log_e",
            "mean_abs_log_e",
            "p10",
            "p25",
            "median",
            "p75",
            "p90",
            "frac_e_above_1",
        ])?;
        for s in &self.summaries {
            let mut row = vec![s.target.name().to_string()];
            row.extend([s.mean, s.sd, s.mean_abs, s.p10, s.p25, s.median, s.p75, s.p90, s.frac_above_one].map(fmt_f64));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Name of the design column for a topic flag.
pub fn topic_column(t: Topic) -> String {
    format!("topic_{}", t.slug())
}

fn raw_continuous(f: &FeatureVector, name: &str, concreteness_fill: f64) -> f64 {
    match name {
        "readability" => f.complexity.readability,
        "concreteness" => f.complexity.concreteness.unwrap_or(concreteness_fill),
        "length" => f.complexity.length as f64,
        "sentiment" => f.valence.sentiment,
        "subjectivity" => f.valence.subjectivity,
        "followers" => f.log_followers.exp_m1(),
        "listed" => f.log_listed.exp_m1(),
        _ => unreachable!("unknown feature {name}"),
    }
}

/// Determinant design plus what was done to build it.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterminantDesign {
    pub x: DesignMatrix,
    /// Constant columns removed before fitting.
    pub dropped: Vec<String>,
}

fn standardize(v: &mut [f64]) {
    let (m, s) = (mean(v), std_dev(v));
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x = (*x - m) / s);
    }
}

/// Builds the standardized design for one variant. Continuous predictors are
/// optionally log1p-transformed, then z-scored; missing concreteness is
/// mean-imputed with an indicator; topic flags use Other as the reference
/// level. Constant columns are dropped and reported.
pub fn build_design(
    features: &[FeatureVector],
    variant: OlsVariant,
    cfg: &PipelineConfig,
) -> Result<DeterminantDesign> {
    let n = features.len();
    let observed: Vec<f64> = features.iter().filter_map(|f| f.complexity.concreteness).collect();
    let fill = if observed.is_empty() { 0.0 } else { mean(&observed) };
    let mut x = DesignMatrix::with_intercept(n);
    for name in CONTINUOUS_FEATURES {
        let log = cfg.log_transform_columns.iter().any(|c| c == name);
        let mut col: Vec<f64> = features
            .iter()
            .map(|f| {
                let v = raw_continuous(f, name, fill);
                if log {
                    v.ln_1p()
                } else {
                    v
                }
            })
            .collect();
        standardize(&mut col);
        x.push_column(name, col)?;
    }
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    x.push_column("concreteness_missing", features.iter().map(|f| flag(f.concreteness_missing())).collect())?;
    x.push_column("has_link", features.iter().map(|f| flag(f.complexity.has_link)).collect())?;
    for t in Topic::NAMED {
        x.push_column(topic_column(t), features.iter().map(|f| flag(f.topics.contains(t))).collect())?;
    }
    x.push_column("verified", features.iter().map(|f| flag(f.verified)).collect())?;

    let dropped = x.constant_columns();
    let mut x = x.without_columns(&dropped);
    let kept = |c: &str| x.column_index(c).is_some();
    match variant {
        OlsVariant::Linear => {}
        OlsVariant::Quadratic => {
            let cols: Vec<&str> = CONTINUOUS_FEATURES.iter().copied().filter(|c| kept(c)).collect();
            x = linmod::add_quadratic_terms(&x, &cols)?;
        }
        OlsVariant::Interactions => {
            let topics: Vec<String> = Topic::NAMED.iter().map(|t| topic_column(*t)).filter(|c| kept(c)).collect();
            let feats: Vec<&str> = CONTENT_FEATURES.iter().copied().filter(|c| kept(c)).collect();
            x = linmod::add_interactions(&x, &topics, &feats)?;
        }
    }
    // Products can be constant even when their factors are not.
    let mut dropped = dropped;
    let extra = x.constant_columns();
    if !extra.is_empty() {
        x = x.without_columns(&extra);
        dropped.extend(extra);
    }
    Ok(DeterminantDesign { x, dropped })
}

/// Threshold under which a determinant model was fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Threshold {
    /// The corpus filter as configured.
    Standard,
    /// Additionally requires some engagement count ≥ `robustness_min_any`.
    MinAny,
}

impl Threshold {
    pub fn name(self) -> &'static str {
        match self {
            Threshold::Standard => "std",
            Threshold::MinAny => "min10",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeterminantResult {
    pub target: Target,
    pub variant: OlsVariant,
    pub threshold: Threshold,
    pub dropped: Vec<String>,
    pub result: RegressionResult,
}

impl DeterminantResult {
    pub fn file_name(&self) -> String {
        format!("coefficients_{}_{}_{}.csv", self.target, self.variant.name(), self.threshold.name())
    }
}

fn check_aligned(features: &[FeatureVector], scores: &[UnexpectednessScores]) -> Result<()> {
    if features.len() != scores.len() {
        return Err(Error::input(format!("{} feature rows but {} score rows", features.len(), scores.len())));
    }
    if let Some((f, s)) = features.iter().zip(scores).find(|(f, s)| f.id != s.id) {
        return Err(Error::input(format!("feature row {} is not aligned with score row {}", f.id, s.id)));
    }
    Ok(())
}

/// Regresses `ln E` of every target on one design.
pub fn regress_targets(
    design: &DeterminantDesign,
    scores: &[UnexpectednessScores],
    variant: OlsVariant,
    threshold: Threshold,
) -> Result<Vec<DeterminantResult>> {
    Target::ALL
        .par_iter()
        .map(|&t| {
            let y: Vec<f64> = scores.iter().map(|s| s.log_quotient[t.index()]).collect();
            Ok(DeterminantResult {
                target: t,
                variant,
                threshold,
                dropped: design.dropped.clone(),
                result: linmod::regress(&design.x, &y)?,
            })
        })
        .collect()
}

/// Rows whose largest count reaches `min_any`.
pub fn min_any_subset(scores: &[UnexpectednessScores], min_any: u64) -> Vec<usize> {
    (0..scores.len()).filter(|&i| scores[i].counts.max() >= min_any).collect()
}

/// Rescores a row subset with baselines refit on that subset.
pub fn rescore_subset(
    scores: &[UnexpectednessScores],
    rows: &[usize],
    tau: f64,
    cfg: &PipelineConfig,
) -> Result<Vec<UnexpectednessScores>> {
    let ids: Vec<&str> = rows.iter().map(|&i| scores[i].id.as_str()).collect();
    let counts: Vec<EngagementCounts> = rows.iter().map(|&i| scores[i].counts).collect();
    let baselines = fit_baselines(&counts, tau, cfg.quantile_scale, &cfg.solver)?;
    score(&ids, &counts, &baselines, cfg.prediction_floor)
}

/// Every (target × variant × threshold) determinant regression, in fixed order.
pub fn determinant_analysis(
    features: &[FeatureVector],
    scores: &[UnexpectednessScores],
    cfg: &PipelineConfig,
) -> Result<Vec<DeterminantResult>> {
    check_aligned(features, scores)?;
    let mut variants = cfg.ols_variants.clone();
    variants.sort();
    variants.dedup();

    let rows = min_any_subset(scores, cfg.robustness_min_any);
    let sub_features: Vec<FeatureVector> = rows.iter().map(|&i| features[i].clone()).collect();
    let sub_scores = rescore_subset(scores, &rows, cfg.tau, cfg)?;

    let mut out = Vec::new();
    for (threshold, feats, sc) in
        [(Threshold::Standard, features, scores), (Threshold::MinAny, &sub_features[..], &sub_scores[..])]
    {
        for &variant in &variants {
            let design = build_design(feats, variant, cfg)?;
            out.extend(regress_targets(&design, sc, variant, threshold)?);
        }
    }
    out.sort_by_key(|r| (r.target, r.variant, r.threshold));
    Ok(out)
}

/// `target,variant,threshold,n,r_squared,f_statistic,log_likelihood,se_flavor,dropped_columns`.
pub fn write_model_stats_csv<W: Write>(w: W, results: &[DeterminantResult]) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record([
        "target",
        "variant",
        "threshold",
        "n",
        "r_squared",
        "f_statistic",
        "log_likelihood",
        "se_flavor",
        "dropped_columns",
    ])?;
    for r in results {
        out.write_record([
            r.target.name().to_string(),
            r.variant.name().to_string(),
            r.threshold.name().to_string(),
            r.result.n.to_string(),
            fmt_f64(r.result.r_squared),
            fmt_f64(r.result.f_statistic),
            fmt_f64(r.result.log_likelihood),
            r.result.se_flavor.to_string(),
            r.dropped.join(";"),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Linear-variant coefficients refit with baselines at each τ of [`PipelineConfig::all_taus`].
#[derive(Debug, Clone, PartialEq)]
pub struct TauRobustness {
    pub taus: Vec<f64>,
    /// `results[k]` holds the three target regressions at `taus[k]`.
    pub results: Vec<Vec<DeterminantResult>>,
}

pub fn tau_robustness(
    features: &[FeatureVector],
    scores: &[UnexpectednessScores],
    cfg: &PipelineConfig,
) -> Result<TauRobustness> {
    check_aligned(features, scores)?;
    let taus = cfg.all_taus();
    let all: Vec<usize> = (0..scores.len()).collect();
    let design = build_design(features, OlsVariant::Linear, cfg)?;
    let results = taus
        .iter()
        .map(|&tau| {
            let sc = rescore_subset(scores, &all, tau, cfg)?;
            regress_targets(&design, &sc, OlsVariant::Linear, Threshold::Standard)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TauRobustness { taus, results })
}

impl TauRobustness {
    /// Signs of `term`'s estimate for `target` at every τ.
    pub fn signs(&self, target: Target, term: &str) -> Vec<f64> {
        self.results.iter().filter_map(|rs| rs[target.index()].result.term(term).map(|t| t.estimate.signum())).collect()
    }

    /// `tau,target,term,estimate,robust_se,p`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv_writer(w);
        out.write_record(["tau", "target", "term", "estimate", "robust_se", "p"])?;
        for (tau, rs) in self.taus.iter().zip(&self.results) {
            for r in rs {
                for t in &r.result.terms {
                    out.write_record([
                        fmt_f64(*tau),
                        r.target.name().to_string(),
                        t.term.clone(),
                        fmt_f64(t.estimate),
                        fmt_f64(t.robust_se),
                        fmt_f64(t.p),
                    ])?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// k-fold stability of the linear determinant model, one report per target.
pub fn cross_validate(
    features: &[FeatureVector],
    scores: &[UnexpectednessScores],
    cfg: &PipelineConfig,
    k: usize,
    seed: u64,
) -> Result<Vec<(Target, CvReport)>> {
    check_aligned(features, scores)?;
    let design = build_design(features, OlsVariant::Linear, cfg)?;
    Target::ALL
        .iter()
        .map(|&t| {
            let y: Vec<f64> = scores.iter().map(|s| s.log_quotient[t.index()]).collect();
            Ok((t, linmod::kfold_cv(&design.x, &y, k, seed)?))
        })
        .collect()
}

/// `target,term,mean,std,relative_std,fold_1..fold_k`.
pub fn write_cv_csv<W: Write>(w: W, reports: &[(Target, CvReport)]) -> Result<()> {
    let mut out = csv_writer(w);
    let Some((_, first)) = reports.first() else {
        return Err(Error::input("no cross-validation reports"));
    };
    let mut header = vec!["target".to_string(), "term".into(), "mean".into(), "std".into(), "relative_std".into()];
    header.extend((1..=first.k).map(|f| format!("fold_{f}")));
    out.write_record(&header)?;
    for (t, rep) in reports {
        for (j, term) in rep.columns.iter().enumerate() {
            let vals: Vec<f64> = rep.fold_coefficients.iter().map(|c| c[j]).collect();
            let mut row = vec![t.name().to_string(), term.clone(), fmt_f64(mean(&vals)), fmt_f64(std_dev(&vals))];
            row.push(fmt_f64(rep.relative_std[j]));
            row.extend(vals.into_iter().map(fmt_f64));
            out.write_record(&row)?;
        }
    }
    out.flush()?;
    Ok(())
}
