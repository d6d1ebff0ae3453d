//! Named-column design matrices.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const INTERCEPT: &str = "intercept";

/// Column-major matrix of finite predictors with named columns.
///
/// Built with [`DesignMatrix::with_intercept`], so the intercept column is
/// present exactly once and comes first.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    n: usize,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl DesignMatrix {
    pub fn with_intercept(n: usize) -> Self {
        Self { n, names: vec![INTERCEPT.to_string()], columns: vec![vec![1.0; n]] }
    }

    /// Appends a named column. Names must be unique and values finite.
    pub fn push_column(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        if values.len() != self.n {
            return Err(Error::input(format!("column {name} has {} rows, design has {}", values.len(), self.n)));
        }
        if self.names.contains(&name) {
            return Err(Error::input(format!("{name} exists")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!("column {name} has a non-finite value at row {i}")));
        }
        self.names.push(name);
        self.columns.push(values);
        Ok(())
    }

    pub fn with_column(mut self, name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        self.push_column(name, values)?;
        Ok(self)
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.column_index(name).map(|i| self.columns[i].as_slice())
    }

    pub fn column_at(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.columns[j][i]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// Rows `idx` in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self {
            n: idx.len(),
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| idx.iter().map(|&i| c[i]).collect()).collect(),
        }
    }

    /// Drops the named columns; the intercept cannot be dropped.
    pub fn without_columns(&self, drop: &[String]) -> Self {
        let mut out = Self { n: self.n, names: Vec::new(), columns: Vec::new() };
        for (name, col) in self.names.iter().zip(&self.columns) {
            if name == INTERCEPT || !drop.contains(name) {
                out.names.push(name.clone());
                out.columns.push(col.clone());
            }
        }
        out
    }

    /// Non-intercept columns whose values are all equal.
    pub fn constant_columns(&self) -> Vec<String> {
        self.names
            .iter()
            .zip(&self.columns)
            .filter(|(name, col)| name.as_str() != INTERCEPT && col.iter().all(|&v| v == col[0]))
            .map(|(name, _)| name.clone())
            .collect()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.ncols(), |i, j| self.columns[j][i])
    }

    /// Row-wise `X · beta`.
    pub fn mul_vec(&self, beta: &[f64]) -> Vec<f64> {
        assert_eq!(beta.len(), self.ncols());
        let mut out = vec![0.0; self.n];
        for (col, b) in self.columns.iter().zip(beta) {
            for (o, x) in out.iter_mut().zip(col) {
                *o += b * x;
            }
        }
        out
    }
}
