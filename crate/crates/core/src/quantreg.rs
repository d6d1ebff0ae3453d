//! Linear quantile regression by pinball-loss minimization.
//!
//! Two solvers share one contract:
//!
//! * [`SolverMethod::Irls`]: iteratively reweighted least squares on the
//!   ε-smoothed check function, started from OLS. Each step minimizes the
//!   quadratic majorizer `Σ r²/(2 mᵢ) + (2τ − 1) r` with `mᵢ = max(|rᵢ|, ε)`,
//!   so the smoothed loss never increases. The IRLS point is then snapped to
//!   the nearest basic solution (p interpolated observations) and refined by
//!   exact line searches along the edges of that basis until no edge
//!   descends, which is the optimality condition of the underlying LP.
//! * [`SolverMethod::ExactSmall`]: enumerates every p-subset of observations,
//!   solves the interpolating system, and keeps the loss-minimizing basic
//!   solution. Only for small problems; used as the reference oracle.
//!
//! When the optimum is not unique both solvers prefer the lexicographically
//! smallest coefficient vector (globally for `ExactSmall`, along each search
//! line for `Irls`).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::linalg::{dependent_columns, least_squares, solve_small};

/// Largest problem the enumeration solver accepts.
pub const EXACT_MAX_ROWS: usize = 200;
pub const EXACT_MAX_COLS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    #[default]
    Irls,
    ExactSmall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub method: SolverMethod,
    /// Floor on |residual| in the IRLS weights.
    pub epsilon: f64,
    /// Relative coefficient-change tolerance for IRLS convergence.
    pub tol: f64,
    /// Cap on IRLS iterations and, separately, on basis pivots.
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { method: SolverMethod::Irls, epsilon: 1e-9, tol: 1e-8, max_iter: 500 }
    }
}

impl SolverConfig {
    pub fn exact() -> Self {
        Self { method: SolverMethod::ExactSmall, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::config("solver.epsilon must be > 0"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::config("solver.tol must be > 0"));
        }
        if self.max_iter < 1 {
            return Err(Error::config("solver.max_iter must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverReport {
    pub method: SolverMethod,
    /// IRLS iterations, or subsets evaluated for the exact solver.
    pub iterations: usize,
    /// Basis exchanges during refinement (IRLS only).
    pub pivots: usize,
    pub final_loss: f64,
    pub converged: bool,
    /// Pinball loss at the start of each IRLS iteration.
    #[serde(skip)]
    pub irls_losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileModel {
    pub tau: f64,
    pub columns: Vec<String>,
    pub coefficients: Vec<f64>,
    pub report: SolverReport,
}

#[inline]
fn check(r: f64, tau: f64) -> f64 {
    if r >= 0.0 {
        tau * r
    } else {
        (tau - 1.0) * r
    }
}

/// Σ ρ_τ(r) with ρ_τ(r) = τ·r for r ≥ 0 and (τ − 1)·r otherwise.
pub fn pinball_loss(residuals: &[f64], tau: f64) -> f64 {
    residuals.iter().map(|&r| check(r, tau)).sum()
}

pub fn validate_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::config(format!("tau must be in (0, 1), got {tau}")))
    }
}

fn residuals(x: &DesignMatrix, y: &[f64], beta: &[f64]) -> Vec<f64> {
    let fitted = x.mul_vec(beta);
    y.iter().zip(fitted).map(|(y, f)| y - f).collect()
}

/// `a` lexicographically smaller than `b`, ignoring differences at rounding level.
fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > 1e-12 * (1.0 + x.abs().max(y.abs())) {
            return x < y;
        }
    }
    false
}

/// Fits the τ-th conditional quantile of `y` given `x`.
pub fn fit(x: &DesignMatrix, y: &[f64], tau: f64, cfg: &SolverConfig) -> Result<QuantileModel> {
    validate_tau(tau)?;
    cfg.validate()?;
    let (n, p) = (x.nrows(), x.ncols());
    if y.len() != n {
        return Err(Error::input(format!("response has {} rows, design has {n}", y.len())));
    }
    if n < p + 1 {
        return Err(Error::input(format!("need at least {} rows for {p} columns, got {n}", p + 1)));
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::input(format!("response has a non-finite value at row {i}")));
    }
    let dependent = dependent_columns(x);
    if !dependent.is_empty() {
        return Err(Error::RankDeficient { columns: dependent });
    }
    let (coefficients, report) = match cfg.method {
        SolverMethod::Irls => fit_irls(x, y, tau, cfg)?,
        SolverMethod::ExactSmall => fit_exact(x, y, tau)?,
    };
    Ok(QuantileModel { tau, columns: x.names().to_vec(), coefficients, report })
}

/// Fitted values `X · β`; the design's columns must match the model's.
pub fn predict(model: &QuantileModel, x: &DesignMatrix) -> Result<Vec<f64>> {
    if x.names() != model.columns.as_slice() {
        return Err(Error::input(format!(
            "design columns [{}] do not match model columns [{}]",
            x.names().join(", "),
            model.columns.join(", ")
        )));
    }
    Ok(x.mul_vec(&model.coefficients))
}

impl QuantileModel {
    pub fn predict(&self, x: &DesignMatrix) -> Result<Vec<f64>> {
        predict(self, x)
    }
}

fn weighted_step(xm: &DMatrix<f64>, z: &[f64], w: &[f64]) -> Option<Vec<f64>> {
    let (n, p) = xm.shape();
    let sw: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let a = DMatrix::from_fn(n, p, |i, j| xm[(i, j)] * sw[i]);
    let b = DVector::from_fn(n, |i, _| z[i] * sw[i]);
    least_squares(a, b).map(|v| v.iter().copied().collect())
}

fn fit_irls(x: &DesignMatrix, y: &[f64], tau: f64, cfg: &SolverConfig) -> Result<(Vec<f64>, SolverReport)> {
    let xm = x.to_matrix();
    let ones = vec![1.0; y.len()];
    let mut beta =
        weighted_step(&xm, y, &ones).ok_or_else(|| Error::degenerate("initial least-squares solve failed"))?;
    let mut losses = Vec::new();
    let mut iterations = 0;
    let mut r = residuals(x, y, &beta);
    for _ in 0..cfg.max_iter {
        losses.push(pinball_loss(&r, tau));
        let m: Vec<f64> = r.iter().map(|v| v.abs().max(cfg.epsilon)).collect();
        let w: Vec<f64> = m.iter().map(|v| 1.0 / v).collect();
        let z: Vec<f64> = y.iter().zip(&m).map(|(y, m)| y + (2.0 * tau - 1.0) * m).collect();
        iterations += 1;
        let Some(next) = weighted_step(&xm, &z, &w) else { break };
        let scale = 1.0 + next.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        let delta = next.iter().zip(&beta).fold(0.0f64, |s, (a, b)| s.max((a - b).abs()));
        beta = next;
        r = residuals(x, y, &beta);
        if delta <= cfg.tol * scale {
            break;
        }
    }

    let refined = refine_to_vertex(x, y, tau, &r, cfg.max_iter)
        .ok_or_else(|| Error::degenerate("no nonsingular basis found near the IRLS solution"))?;
    let report = SolverReport {
        method: SolverMethod::Irls,
        iterations,
        pivots: refined.pivots,
        final_loss: refined.loss,
        converged: refined.optimal,
        irls_losses: losses,
    };
    Ok((refined.beta, report))
}

/// Basic solution: `p` observations interpolated exactly.
struct Vertex {
    basis: Vec<usize>,
    beta: Vec<f64>,
    /// Row-major inverse of the basis rows of X.
    inv: Vec<f64>,
    residuals: Vec<f64>,
    loss: f64,
}

fn make_vertex(x: &DesignMatrix, y: &[f64], tau: f64, basis: Vec<usize>) -> Option<Vertex> {
    let p = x.ncols();
    let xh: Vec<f64> = basis.iter().flat_map(|&i| (0..p).map(move |j| x.get(i, j))).collect();
    let yh: Vec<f64> = basis.iter().map(|&i| y[i]).collect();
    let beta = solve_small(&xh, &yh, p)?;
    let mut inv = vec![0.0; p * p];
    for j in 0..p {
        let mut e = vec![0.0; p];
        e[j] = 1.0;
        let col = solve_small(&xh, &e, p)?;
        for (k, v) in col.into_iter().enumerate() {
            inv[k * p + j] = v;
        }
    }
    let mut residuals = residuals(x, y, &beta);
    for &i in &basis {
        residuals[i] = 0.0;
    }
    let loss = pinball_loss(&residuals, tau);
    Some(Vertex { basis, beta, inv, residuals, loss })
}

/// Picks `p` linearly independent rows, preferring small |residual|.
fn basis_near(x: &DesignMatrix, r: &[f64]) -> Option<Vec<usize>> {
    let p = x.ncols();
    let mut order: Vec<usize> = (0..r.len()).collect();
    order.sort_by(|&a, &b| r[a].abs().total_cmp(&r[b].abs()).then(a.cmp(&b)));
    let mut chosen = Vec::with_capacity(p);
    let mut ortho: Vec<Vec<f64>> = Vec::with_capacity(p);
    for i in order {
        let row = x.row(i);
        let norm0 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm0 == 0.0 {
            continue;
        }
        let mut v = row;
        for _ in 0..2 {
            for q in &ortho {
                let c: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
        let norm = v.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-8 * norm0 {
            v.iter_mut().for_each(|a| *a /= norm);
            ortho.push(v);
            chosen.push(i);
            if chosen.len() == p {
                return Some(chosen);
            }
        }
    }
    None
}

/// Minimizers of the loss along the line `β + t·d`, where `d` moves basis
/// observation `j` off the fit while the other basis observations stay
/// interpolated. Returns up to two `(t, entering row)` candidates (two when
/// the minimum is a flat segment).
fn line_minimizers(x: &DesignMatrix, v: &Vertex, j: usize, tau: f64) -> (Vec<f64>, Vec<(f64, usize)>) {
    let p = x.ncols();
    let d: Vec<f64> = (0..p).map(|c| v.inv[c * p + j]).collect();
    let a = x.mul_vec(&d);
    let mut points: Vec<(f64, f64, usize)> = Vec::new();
    let mut slope = 0.0;
    let mut total_w = 0.0;
    for (i, (&ai, &ri)) in a.iter().zip(&v.residuals).enumerate() {
        let (ai, ri) = if i == v.basis[j] {
            (1.0, 0.0)
        } else if v.basis.contains(&i) {
            continue;
        } else {
            (ai, ri)
        };
        let w = ai.abs();
        if w <= 1e-14 {
            continue;
        }
        slope -= if ai > 0.0 { tau * w } else { (1.0 - tau) * w };
        total_w += w;
        points.push((ri / ai, w, i));
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
    let tol = 1e-12 * total_w;
    let mut out = Vec::new();
    for (k, &(c, w, i)) in points.iter().enumerate() {
        slope += w;
        if slope >= -tol {
            out.push((c, i));
            if slope <= tol {
                if let Some(&(c2, _, i2)) = points.get(k + 1) {
                    out.push((c2, i2));
                }
            }
            break;
        }
    }
    (d, out)
}

struct Refined {
    beta: Vec<f64>,
    loss: f64,
    pivots: usize,
    optimal: bool,
}

/// Best move out of `v` along any of its edges, if one lowers the loss (or
/// keeps it and gives a lexicographically smaller β).
fn improving_move(x: &DesignMatrix, y: &[f64], tau: f64, v: &Vertex) -> Option<Vertex> {
    let tol = 1e-12 * v.loss.max(1.0);
    let mut best: Option<Vertex> = None;
    for j in 0..v.basis.len() {
        let (_, cands) = line_minimizers(x, v, j, tau);
        for (_, entering) in cands {
            if entering == v.basis[j] || v.basis.contains(&entering) {
                continue;
            }
            let mut basis = v.basis.clone();
            basis[j] = entering;
            let Some(next) = make_vertex(x, y, tau, basis) else { continue };
            let reference = best.as_ref().unwrap_or(v);
            let better = next.loss < reference.loss - tol
                || (next.loss <= reference.loss + tol && lex_less(&next.beta, &reference.beta));
            if better {
                best = Some(next);
            }
        }
        if best.as_ref().is_some_and(|b| b.loss < v.loss - tol) {
            break;
        }
    }
    best
}

fn refine_to_vertex(x: &DesignMatrix, y: &[f64], tau: f64, r: &[f64], max_pivots: usize) -> Option<Refined> {
    let basis = basis_near(x, r)?;
    let mut v = make_vertex(x, y, tau, basis)?;
    let mut pivots = 0;
    let mut optimal = false;
    while pivots < max_pivots {
        if let Some(next) = improving_move(x, y, tau, &v) {
            v = next;
            pivots += 1;
            continue;
        }
        // Degenerate vertex: other observations are also interpolated, so a
        // different basis for the same β may expose a descent edge.
        match alternative_basis_move(x, y, tau, &v) {
            Some(next) => {
                v = next;
                pivots += 1;
            }
            None => {
                optimal = true;
                break;
            }
        }
    }
    Some(Refined { beta: v.beta, loss: v.loss, pivots, optimal })
}

const MAX_DEGENERATE_SWAPS: usize = 32;

fn alternative_basis_move(x: &DesignMatrix, y: &[f64], tau: f64, v: &Vertex) -> Option<Vertex> {
    let scale = 1.0 + v.beta.iter().fold(0.0f64, |s, b| s.max(b.abs()));
    let zeros: Vec<usize> = (0..y.len())
        .filter(|i| !v.basis.contains(i) && v.residuals[*i].abs() <= 1e-9 * (scale + y[*i].abs()))
        .take(MAX_DEGENERATE_SWAPS)
        .collect();
    let tol = 1e-12 * v.loss.max(1.0);
    for &z in &zeros {
        for j in 0..v.basis.len() {
            let mut basis = v.basis.clone();
            basis[j] = z;
            let Some(alt) = make_vertex(x, y, tau, basis) else { continue };
            if let Some(next) = improving_move(x, y, tau, &alt) {
                if next.loss < v.loss - tol {
                    return Some(next);
                }
            }
        }
    }
    None
}

/// Visits every `k`-subset of `0..n` in lexicographic order.
fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] < n - k + i {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for m in i + 1..k {
            idx[m] = idx[m - 1] + 1;
        }
    }
}

fn fit_exact(x: &DesignMatrix, y: &[f64], tau: f64) -> Result<(Vec<f64>, SolverReport)> {
    let (n, p) = (x.nrows(), x.ncols());
    if n > EXACT_MAX_ROWS || p > EXACT_MAX_COLS {
        return Err(Error::config(format!(
            "exact_small solver handles at most {EXACT_MAX_ROWS} rows and {EXACT_MAX_COLS} columns, got {n}x{p}"
        )));
    }
    let rows: Vec<Vec<f64>> = (0..n).map(|i| x.row(i)).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut evaluated = 0;
    let mut xh = vec![0.0; p * p];
    let mut yh = vec![0.0; p];
    for_each_subset(n, p, |subset| {
        for (k, &i) in subset.iter().enumerate() {
            xh[k * p..(k + 1) * p].copy_from_slice(&rows[i]);
            yh[k] = y[i];
        }
        let Some(beta) = solve_small(&xh, &yh, p) else { return };
        evaluated += 1;
        let loss: f64 = rows
            .iter()
            .zip(y)
            .map(|(row, yi)| check(yi - row.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>(), tau))
            .sum();
        match &best {
            None => best = Some((loss, beta)),
            Some((bl, bb)) => {
                let tol = 1e-10 * bl.max(1.0);
                if loss < bl - tol || (loss <= bl + tol && lex_less(&beta, bb)) {
                    best = Some((loss.min(*bl), beta));
                }
            }
        }
    });
    let (_, beta) = best.ok_or_else(|| Error::degenerate("no nonsingular basic solution"))?;
    let loss = pinball_loss(&residuals(x, y, &beta), tau);
    let report = SolverReport {
        method: SolverMethod::ExactSmall,
        iterations: evaluated,
        pivots: 0,
        final_loss: loss,
        converged: true,
        irls_losses: Vec::new(),
    };
    Ok((beta, report))
}
