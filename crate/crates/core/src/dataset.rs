//! Grouped regression data: per group a design `X` (`p x n`) and a response
//! `Y` (`q x n`), samples stored as columns.

use crate::error::{Error, Result};
use crate::matcore::{all_finite, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub x: Matrix,
    pub y: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupedDataset {
    groups: Vec<Group>,
    p: usize,
    q: usize,
    n: usize,
}

impl GroupedDataset {
    pub fn new(groups: Vec<Group>) -> Result<Self> {
        let first = groups
            .first()
            .ok_or_else(|| Error::Config("dataset has no groups".into()))?;
        let (p, n) = first.x.shape();
        let q = first.y.nrows();
        if p == 0 || q == 0 || n == 0 {
            return Err(Error::Dimension(format!(
                "group 0 has an empty design or response ({p}x{n}, {q}x{})",
                first.y.ncols()
            )));
        }
        for (g, group) in groups.iter().enumerate() {
            if group.x.shape() != (p, n) {
                return Err(Error::Dimension(format!(
                    "group {g}: X is {}x{}, expected {p}x{n}",
                    group.x.nrows(),
                    group.x.ncols()
                )));
            }
            if group.y.shape() != (q, n) {
                return Err(Error::Dimension(format!(
                    "group {g}: Y is {}x{}, expected {q}x{n}",
                    group.y.nrows(),
                    group.y.ncols()
                )));
            }
            if !all_finite(&group.x) || !all_finite(&group.y) {
                return Err(Error::Validation(format!("group {g}: non-finite entries")));
            }
        }
        Ok(Self { groups, p, q, n })
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn group(&self, g: usize) -> &Group {
        &self.groups[g]
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Keeps the listed groups, in the given order.
    pub fn subset_groups(&self, indices: &[usize]) -> Result<Self> {
        let groups = indices
            .iter()
            .map(|&g| {
                self.groups
                    .get(g)
                    .cloned()
                    .ok_or_else(|| Error::Config(format!("group index {g} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(groups)
    }

    /// Keeps the listed sample columns in every group.
    pub fn select_columns(&self, columns: &[usize]) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Config("column selection is empty".into()));
        }
        if let Some(&bad) = columns.iter().find(|&&c| c >= self.n) {
            return Err(Error::Config(format!("column {bad} out of range (n = {})", self.n)));
        }
        let groups = self
            .groups
            .iter()
            .map(|g| Group {
                x: g.x.select_columns(columns),
                y: g.y.select_columns(columns),
            })
            .collect();
        Self::new(groups)
    }

    pub fn stats(&self) -> Vec<GroupStats> {
        self.groups.iter().map(GroupStats::new).collect()
    }
}

/// Second-moment summaries of one group. Every quadratic quantity the solvers
/// need (squared residuals, gradients, lasso Gram matrices) is a function of
/// these, so the cost per evaluation does not grow with `n`.
#[derive(Debug, Clone)]
pub struct GroupStats {
    /// `(1/n) X X^T`, `p x p`.
    pub sxx: Matrix,
    /// `(1/n) Y X^T`, `q x p`.
    pub syx: Matrix,
    /// `(1/n) ||Y||_F^2`.
    pub yy: f64,
}

impl GroupStats {
    pub fn new(group: &Group) -> Self {
        let n = group.x.ncols() as f64;
        Self {
            sxx: &group.x * group.x.transpose() / n,
            syx: &group.y * group.x.transpose() / n,
            yy: group.y.norm_squared() / n,
        }
    }

    /// `(1/n) ||Y - B X||_F^2` expanded in second moments.
    pub fn squared_residual(&self, b: &Matrix) -> f64 {
        let bs = b * &self.sxx;
        self.yy - 2.0 * crate::matcore::frobenius_dot(b, &self.syx) + crate::matcore::frobenius_dot(&bs, b)
    }

    /// `(1/n) (Y - B X) X^T = Syx - B Sxx`.
    pub fn residual_cross(&self, b: &Matrix) -> Matrix {
        &self.syx - b * &self.sxx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn group(p: usize, q: usize, n: usize, seed: f64) -> Group {
        Group {
            x: Matrix::from_fn(p, n, |i, j| ((i * 7 + j * 3) as f64 * 0.37 + seed).sin()),
            y: Matrix::from_fn(q, n, |i, j| ((i * 5 + j * 11) as f64 * 0.21 - seed).cos()),
        }
    }

    #[test]
    fn rejects_empty_and_mismatched() {
        assert!(matches!(GroupedDataset::new(vec![]), Err(Error::Config(_))));
        let err = GroupedDataset::new(vec![group(3, 2, 5, 0.0), group(4, 2, 5, 1.0)]).unwrap_err();
        assert!(err.to_string().contains("group 1"));
    }

    #[test]
    fn stats_residual_matches_direct() {
        let g = group(4, 3, 9, 0.5);
        let b = Matrix::from_fn(3, 4, |i, j| (i as f64 - j as f64) * 0.3);
        let direct = (&g.y - &b * &g.x).norm_squared() / 9.0;
        let viastats = GroupStats::new(&g).squared_residual(&b);
        assert!((direct - viastats).abs() < 1e-12 * direct.max(1.0));
    }

    #[test]
    fn select_columns_keeps_shapes() {
        let ds = GroupedDataset::new(vec![group(3, 2, 6, 0.0), group(3, 2, 6, 2.0)]).unwrap();
        let sub = ds.select_columns(&[0, 4]).unwrap();
        assert_eq!(sub.n(), 2);
        assert_eq!(sub.group(1).x.column(1), ds.group(1).x.column(4));
        assert!(ds.select_columns(&[6]).is_err());
    }
}
