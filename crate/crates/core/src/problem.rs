//! Resource-allocation problem objects: the attention matrix `W`, the
//! allocation matrix `A`, the resource budget vector `r`, and the utility
//! `Σ_l Σ_d w_{l,d} f(a_{l,d})` evaluated over them.
//!
//! Rows index services, columns index resource types. Column units are
//! descriptive only; nothing here converts between them.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance for attention row sums and budget comparisons.
pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("matrix must have at least one row and one column")]
    Empty,
    #[error("row {row} has {found} columns, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("dimension mismatch: {what} (left {left}, right {right})")]
    DimensionMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },
    #[error("entry at ({row}, {column}) is not a finite non-negative number: {value}")]
    InvalidEntry {
        row: usize,
        column: usize,
        value: f64,
    },
    #[error(transparent)]
    Attention(#[from] AttentionViolation),
    #[error(transparent)]
    Budget(#[from] BudgetViolation),
    #[error("step utility requires low <= high (got {low} > {high})")]
    DecreasingStep { low: f64, high: f64 },
}

/// Dense row-major matrix shared by `W` and `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Grid {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Grid {
    fn from_rows(rows: &[Vec<f64>], allow_empty_rows: bool) -> Result<Self, ProblemError> {
        let cols = rows.first().map_or(0, Vec::len);
        if (!allow_empty_rows && rows.is_empty()) || (!rows.is_empty() && cols == 0) {
            return Err(ProblemError::Empty);
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(ProblemError::RaggedRow {
                    row: r,
                    found: row.len(),
                    expected: cols,
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}

/// First violation found while checking an attention matrix.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct AttentionViolation {
    pub row: usize,
    /// Offending column for a negative entry; `None` when the row sum is off.
    pub column: Option<usize>,
    pub row_sum: f64,
    pub entry: Option<f64>,
}

impl fmt::Display for AttentionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.column, self.entry) {
            (Some(c), Some(e)) => write!(
                f,
                "attention row {} has invalid entry {} at column {} (row sum {})",
                self.row, e, c, self.row_sum
            ),
            _ => write!(
                f,
                "attention row {} sums to {} instead of 1",
                self.row, self.row_sum
            ),
        }
    }
}

/// Checks non-negativity and unit row sums, reporting the first violation.
pub fn validate_attention(rows: &[Vec<f64>]) -> Result<(), ProblemError> {
    let grid = Grid::from_rows(rows, false)?;
    check_attention_grid(&grid).map_err(ProblemError::from)
}

fn check_attention_grid(grid: &Grid) -> Result<(), AttentionViolation> {
    for r in 0..grid.rows {
        let row = grid.row(r);
        let row_sum: f64 = row.iter().sum();
        if let Some((c, &e)) = row
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(AttentionViolation {
                row: r,
                column: Some(c),
                row_sum,
                entry: Some(e),
            });
        }
        if (row_sum - 1.0).abs() > TOLERANCE {
            return Err(AttentionViolation {
                row: r,
                column: None,
                row_sum,
                entry: None,
            });
        }
    }
    Ok(())
}

/// Row-normalized preference weights `w_{l,d}` (L services × D resources).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionMatrix(Grid);

impl AttentionMatrix {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self, ProblemError> {
        let grid = Grid::from_rows(rows, false)?;
        check_attention_grid(&grid)?;
        Ok(Self(grid))
    }

    /// Normalizes each row of positive preferences so it sums to one.
    pub fn from_preferences(rows: &[Vec<f64>]) -> Result<Self, ProblemError> {
        let normalized: Vec<Vec<f64>> = rows
            .iter()
            .map(|row| {
                let s: f64 = row.iter().sum();
                row.iter().map(|v| v / s).collect()
            })
            .collect();
        Self::new(&normalized)
    }

    pub fn services(&self) -> usize {
        self.0.rows
    }

    pub fn resources(&self) -> usize {
        self.0.cols
    }

    pub fn weight(&self, service: usize, resource: usize) -> f64 {
        self.0.get(service, resource)
    }

    pub fn row(&self, service: usize) -> &[f64] {
        self.0.row(service)
    }
}

/// Allocated quantities `a_{l,d}`. May have zero rows (no services).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationMatrix(Grid);

impl AllocationMatrix {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self, ProblemError> {
        let grid = Grid::from_rows(rows, true)?;
        check_nonnegative(&grid)?;
        Ok(Self(grid))
    }

    /// An allocation with no services over `resources` columns.
    pub fn empty(resources: usize) -> Self {
        Self(Grid {
            rows: 0,
            cols: resources,
            data: Vec::new(),
        })
    }

    pub fn zeros(services: usize, resources: usize) -> Self {
        Self(Grid {
            rows: services,
            cols: resources,
            data: vec![0.0; services * resources],
        })
    }

    pub fn services(&self) -> usize {
        self.0.rows
    }

    pub fn resources(&self) -> usize {
        self.0.cols
    }

    pub fn amount(&self, service: usize, resource: usize) -> f64 {
        self.0.get(service, resource)
    }

    pub fn column_sum(&self, resource: usize) -> f64 {
        (0..self.0.rows).map(|r| self.0.get(r, resource)).sum()
    }

    /// Element-wise sum of two conformable allocations.
    pub fn add(&self, other: &Self) -> Result<Self, ProblemError> {
        same_shape(&self.0, &other.0, "allocation sum")?;
        let data = self
            .0
            .data
            .iter()
            .zip(&other.0.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self(Grid {
            rows: self.0.rows,
            cols: self.0.cols,
            data,
        }))
    }

    pub fn with_amount(
        &self,
        service: usize,
        resource: usize,
        value: f64,
    ) -> Result<Self, ProblemError> {
        if !value.is_finite() || value < 0.0 {
            return Err(ProblemError::InvalidEntry {
                row: service,
                column: resource,
                value,
            });
        }
        let mut next = self.clone();
        next.0.data[service * self.0.cols + resource] = value;
        Ok(next)
    }
}

/// Available quantity `r_d` of each resource.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceVector(Vec<f64>);

impl ResourceVector {
    pub fn new(values: Vec<f64>) -> Result<Self, ProblemError> {
        if let Some((c, &v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(ProblemError::InvalidEntry {
                row: 0,
                column: c,
                value: v,
            });
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

fn check_nonnegative(grid: &Grid) -> Result<(), ProblemError> {
    for r in 0..grid.rows {
        for c in 0..grid.cols {
            let v = grid.get(r, c);
            if !v.is_finite() || v < 0.0 {
                return Err(ProblemError::InvalidEntry {
                    row: r,
                    column: c,
                    value: v,
                });
            }
        }
    }
    Ok(())
}

fn same_shape(a: &Grid, b: &Grid, what: &'static str) -> Result<(), ProblemError> {
    if a.rows != b.rows {
        return Err(ProblemError::DimensionMismatch {
            what,
            left: a.rows,
            right: b.rows,
        });
    }
    if a.cols != b.cols {
        return Err(ProblemError::DimensionMismatch {
            what,
            left: a.cols,
            right: b.cols,
        });
    }
    Ok(())
}

/// Mapping `f` from allocated quantity to quality of service.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UtilityShape {
    /// `f(a) = a`
    Identity,
    /// `f(a) = scale · log2(1 + a)`
    LogRate { scale: f64 },
    /// `f(a) = low` below `threshold`, `high` at or above it.
    Step { threshold: f64, low: f64, high: f64 },
}

impl UtilityShape {
    pub fn validate(&self) -> Result<(), ProblemError> {
        match *self {
            UtilityShape::Step { low, high, .. } if low > high => {
                Err(ProblemError::DecreasingStep { low, high })
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, amount: f64) -> f64 {
        match *self {
            UtilityShape::Identity => amount,
            UtilityShape::LogRate { scale } => scale * amount.ln_1p() / std::f64::consts::LN_2,
            UtilityShape::Step {
                threshold,
                low,
                high,
            } => {
                if amount >= threshold {
                    high
                } else {
                    low
                }
            }
        }
    }
}

/// `Σ_l Σ_d w_{l,d} f(a_{l,d})`.
pub fn total_utility(
    allocation: &AllocationMatrix,
    attention: &AttentionMatrix,
    shape: &UtilityShape,
) -> Result<f64, ProblemError> {
    shape.validate()?;
    same_shape(&allocation.0, &attention.0, "allocation vs attention")?;
    Ok(allocation
        .0
        .data
        .iter()
        .zip(&attention.0.data)
        .map(|(&a, &w)| w * shape.eval(a))
        .sum())
}

/// First resource whose column sum exceeds its budget.
#[derive(Debug, Clone, PartialEq, Error)]
#[error(
    "resource {resource} over budget by {excess} (allocated {allocated}, available {available})"
)]
pub struct BudgetViolation {
    pub resource: usize,
    pub allocated: f64,
    pub available: f64,
    pub excess: f64,
}

/// Accepts iff `Σ_l a_{l,d} <= r_d` (within [`TOLERANCE`]) for every `d`.
pub fn check_feasibility(
    allocation: &AllocationMatrix,
    budget: &ResourceVector,
) -> Result<(), ProblemError> {
    if allocation.resources() != budget.len() {
        return Err(ProblemError::DimensionMismatch {
            what: "allocation columns vs budget length",
            left: allocation.resources(),
            right: budget.len(),
        });
    }
    for (d, &available) in budget.values().iter().enumerate() {
        let allocated = allocation.column_sum(d);
        if allocated > available + TOLERANCE {
            return Err(BudgetViolation {
                resource: d,
                allocated,
                available,
                excess: allocated - available,
            }
            .into());
        }
    }
    Ok(())
}
