//! Ordinary least squares with HC1 robust inference, design expansions,
//! k-fold coefficient stability and Welch's t-test.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::design::{DesignMatrix, INTERCEPT};
use crate::error::{Error, Result};
use crate::linalg::dependent_columns;
use crate::stats::{mean, variance};

/// Two-sided 95% normal critical value used for confidence intervals.
pub const Z_95: f64 = 1.96;

pub const SE_FLAVOR: &str = "HC1";

#[derive(Debug, Clone, PartialEq)]
pub struct OlsModel {
    pub columns: Vec<String>,
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    pub fitted: Vec<f64>,
    pub df_resid: usize,
    /// Inverse of the R factor of X; `(X'X)⁻¹ = R⁻¹ R⁻ᵀ`.
    r_inv: DMatrix<f64>,
}

fn check_response(x: &DesignMatrix, y: &[f64]) -> Result<()> {
    if y.len() != x.nrows() {
        return Err(Error::input(format!("response has {} rows, design has {}", y.len(), x.nrows())));
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::input(format!("response has a non-finite value at row {i}")));
    }
    Ok(())
}

/// Least-squares fit via Householder QR.
pub fn fit_ols(x: &DesignMatrix, y: &[f64]) -> Result<OlsModel> {
    check_response(x, y)?;
    let (n, p) = (x.nrows(), x.ncols());
    if n <= p {
        return Err(Error::input(format!("need more than {p} rows for {p} columns, got {n}")));
    }
    let dependent = dependent_columns(x);
    if !dependent.is_empty() {
        return Err(Error::RankDeficient { columns: dependent });
    }
    let qr = x.to_matrix().qr();
    let mut qty = DVector::from_column_slice(y);
    qr.q_tr_mul(&mut qty);
    let r = qr.r();
    let r_inv = r.clone().try_inverse().ok_or_else(|| Error::RankDeficient { columns: x.names()[1..].to_vec() })?;
    let beta = &r_inv * qty.rows(0, p);
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let fitted = x.mul_vec(&coefficients);
    let residuals = y.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    Ok(OlsModel { columns: x.names().to_vec(), coefficients, residuals, fitted, df_resid: n - p, r_inv })
}

/// HC1 standard errors: square roots of the diagonal of
/// `n/(n−p) · (X'X)⁻¹ X' diag(r²) X (X'X)⁻¹`.
pub fn robust_se(model: &OlsModel, x: &DesignMatrix) -> Result<Vec<f64>> {
    if x.names() != model.columns.as_slice() || x.nrows() != model.residuals.len() {
        return Err(Error::input("design does not match the fitted model"));
    }
    let (n, p) = (x.nrows(), x.ncols());
    // Rows of A = (X'X)⁻¹ X' are R⁻¹ R⁻ᵀ x_i; accumulate Σ r_i² A_ji².
    let bread = &model.r_inv * model.r_inv.transpose();
    let mut acc = vec![0.0; p];
    let mut xi = DVector::zeros(p);
    for (i, r) in model.residuals.iter().enumerate() {
        let r2 = r * r;
        if r2 == 0.0 {
            continue;
        }
        for j in 0..p {
            xi[j] = x.get(i, j);
        }
        let a = &bread * &xi;
        for j in 0..p {
            acc[j] += r2 * a[j] * a[j];
        }
    }
    let scale = n as f64 / (n - p) as f64;
    Ok(acc.into_iter().map(|v| (v * scale).sqrt()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelStats {
    pub r_squared: f64,
    /// Joint test of all non-intercept coefficients; NaN for an intercept-only model.
    pub f_statistic: f64,
    pub log_likelihood: f64,
}

pub fn model_stats(model: &OlsModel, y: &[f64]) -> Result<ModelStats> {
    let n = y.len();
    let ybar = mean(y);
    let sst: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    if sst <= 0.0 {
        return Err(Error::degenerate("response has zero variance; R² is undefined"));
    }
    let ssr: f64 = model.residuals.iter().map(|r| r * r).sum();
    let r_squared = (1.0 - ssr / sst).clamp(0.0, 1.0);
    let p = model.coefficients.len();
    let has_intercept = model.columns.first().is_some_and(|c| c == INTERCEPT);
    let df_model = p - usize::from(has_intercept);
    let f_statistic =
        if df_model == 0 { f64::NAN } else { ((sst - ssr) / df_model as f64) / (ssr / model.df_resid as f64) };
    let nf = n as f64;
    let log_likelihood =
        if ssr > 0.0 { -0.5 * nf * ((2.0 * std::f64::consts::PI).ln() + (ssr / nf).ln() + 1.0) } else { f64::INFINITY };
    Ok(ModelStats { r_squared, f_statistic, log_likelihood })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermEstimate {
    pub term: String,
    pub estimate: f64,
    pub robust_se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub t: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionResult {
    pub terms: Vec<TermEstimate>,
    pub r_squared: f64,
    pub f_statistic: f64,
    pub log_likelihood: f64,
    pub n: usize,
    pub se_flavor: &'static str,
}

/// Two-sided p-value of `t` under Student's t with `df` degrees of freedom.
pub fn two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    match StudentsT::new(0.0, 1.0, df) {
        Ok(dist) => (2.0 * dist.sf(t.abs())).min(1.0),
        Err(_) => f64::NAN,
    }
}

/// OLS fit with HC1 inference and model statistics.
pub fn regress(x: &DesignMatrix, y: &[f64]) -> Result<RegressionResult> {
    let model = fit_ols(x, y)?;
    let se = robust_se(&model, x)?;
    let stats = model_stats(&model, y)?;
    let df = model.df_resid as f64;
    let terms = model
        .columns
        .iter()
        .zip(&model.coefficients)
        .zip(&se)
        .map(|((term, &estimate), &robust_se)| {
            let t = if robust_se > 0.0 {
                estimate / robust_se
            } else if estimate == 0.0 {
                0.0
            } else {
                estimate.signum() * f64::INFINITY
            };
            TermEstimate {
                term: term.clone(),
                estimate,
                robust_se,
                ci_low: estimate - Z_95 * robust_se,
                ci_high: estimate + Z_95 * robust_se,
                t,
                p: two_sided_p(t, df),
            }
        })
        .collect();
    Ok(RegressionResult {
        terms,
        r_squared: stats.r_squared,
        f_statistic: stats.f_statistic,
        log_likelihood: stats.log_likelihood,
        n: y.len(),
        se_flavor: SE_FLAVOR,
    })
}

impl RegressionResult {
    pub fn term(&self, name: &str) -> Option<&TermEstimate> {
        self.terms.iter().find(|t| t.term == name)
    }

    /// `term,estimate,robust_se,ci_low,ci_high,t,p`, one row per design column.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(["term", "estimate", "robust_se", "ci_low", "ci_high", "t", "p"])?;
        for t in &self.terms {
            out.write_record([
                t.term.clone(),
                fmt_f64(t.estimate),
                fmt_f64(t.robust_se),
                fmt_f64(t.ci_low),
                fmt_f64(t.ci_high),
                fmt_f64(t.t),
                fmt_f64(t.p),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Shortest representation that round-trips.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Appends `<name>_sq` for each named column.
pub fn add_quadratic_terms<S: AsRef<str>>(x: &DesignMatrix, columns: &[S]) -> Result<DesignMatrix> {
    let mut out = x.clone();
    for name in columns {
        let name = name.as_ref();
        let col = x.column(name).ok_or_else(|| Error::input(format!("unknown column {name}")))?;
        let sq = col.iter().map(|v| v * v).collect();
        out.push_column(format!("{name}_sq"), sq)?;
    }
    Ok(out)
}

/// Appends `topic:feature` products for every topic × feature pair, topic-major.
pub fn add_interactions<S: AsRef<str>, T: AsRef<str>>(
    x: &DesignMatrix,
    topic_columns: &[S],
    feature_columns: &[T],
) -> Result<DesignMatrix> {
    let lookup = |name: &str| x.column(name).ok_or_else(|| Error::input(format!("unknown column {name}")));
    let features: Vec<(&str, &[f64])> =
        feature_columns.iter().map(|f| Ok((f.as_ref(), lookup(f.as_ref())?))).collect::<Result<_>>()?;
    let mut out = x.clone();
    for topic in topic_columns {
        let topic = topic.as_ref();
        let t = lookup(topic)?;
        for (fname, f) in &features {
            let prod = t.iter().zip(f.iter()).map(|(a, b)| a * b).collect();
            out.push_column(format!("{topic}:{fname}"), prod)?;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    pub k: usize,
    pub seed: u64,
    pub columns: Vec<String>,
    /// Fold index of every row.
    pub fold_of: Vec<usize>,
    /// Coefficients refit with each fold held out.
    pub fold_coefficients: Vec<Vec<f64>>,
    /// Per-column standard deviation across folds divided by |mean|.
    pub relative_std: Vec<f64>,
}

impl CvReport {
    /// Mean relative std over the named columns (all non-intercept columns when empty).
    pub fn mean_relative_std<S: AsRef<str>>(&self, terms: &[S]) -> Result<f64> {
        let picked: Vec<f64> = if terms.is_empty() {
            self.columns
                .iter()
                .zip(&self.relative_std)
                .filter(|(c, _)| c.as_str() != INTERCEPT)
                .map(|(_, v)| *v)
                .collect()
        } else {
            terms
                .iter()
                .map(|t| {
                    let t = t.as_ref();
                    self.columns
                        .iter()
                        .position(|c| c == t)
                        .map(|j| self.relative_std[j])
                        .ok_or_else(|| Error::input(format!("unknown column {t}")))
                })
                .collect::<Result<_>>()?
        };
        if picked.is_empty() {
            return Err(Error::input("no columns to average"));
        }
        Ok(mean(&picked))
    }

    /// `term,mean,std,relative_std,fold_1..fold_k`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        let mut header = vec!["term".to_string(), "mean".into(), "std".into(), "relative_std".into()];
        header.extend((1..=self.k).map(|f| format!("fold_{f}")));
        out.write_record(&header)?;
        for (j, term) in self.columns.iter().enumerate() {
            let vals: Vec<f64> = self.fold_coefficients.iter().map(|c| c[j]).collect();
            let mut row = vec![term.clone(), fmt_f64(mean(&vals)), fmt_f64(variance(&vals).sqrt())];
            row.push(fmt_f64(self.relative_std[j]));
            row.extend(vals.iter().map(|v| fmt_f64(*v)));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Seeded fold assignment: shuffle rows, then cut into `k` contiguous slices
/// whose sizes differ by at most one.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0; n];
    let (base, extra) = (n / k, n % k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        for &row in &perm[start..start + size] {
            fold_of[row] = f;
        }
        start += size;
    }
    fold_of
}

pub fn kfold_cv(x: &DesignMatrix, y: &[f64], k: usize, seed: u64) -> Result<CvReport> {
    check_response(x, y)?;
    let n = x.nrows();
    if k < 2 {
        return Err(Error::config(format!("k must be >= 2, got {k}")));
    }
    if n < 2 * k {
        return Err(Error::input(format!("k-fold CV needs at least {} rows for k = {k}, got {n}", 2 * k)));
    }
    let fold_of = fold_assignment(n, k, seed);
    let fold_coefficients = (0..k)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != f).collect();
            let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
            fit_ols(&x.select_rows(&train), &yt).map(|m| m.coefficients)
        })
        .collect::<Result<Vec<_>>>()?;
    let relative_std = (0..x.ncols())
        .map(|j| {
            let vals: Vec<f64> = fold_coefficients.iter().map(|c| c[j]).collect();
            let (m, s) = (mean(&vals), variance(&vals).sqrt());
            if s <= 1e-12 * m.abs().max(1.0) {
                0.0
            } else {
                s / m.abs()
            }
        })
        .collect();
    Ok(CvReport { k, seed, columns: x.names().to_vec(), fold_of, fold_coefficients, relative_std })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

/// Welch's unequal-variance t-test of mean(a) − mean(b).
pub fn welch_ttest(a: &[f64], b: &[f64]) -> Result<WelchTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::degenerate("each sample needs at least 2 values"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::input("samples must be finite"));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (variance(a) / na, variance(b) / nb);
    let s = va + vb;
    if s <= 0.0 {
        return Err(Error::degenerate("both samples have zero variance"));
    }
    let t = (mean(a) - mean(b)) / s.sqrt();
    let df = s * s / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    Ok(WelchTest { t, df, p: two_sided_p(t, df) })
}
