use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Sorted row and column indices picked from a `rows × cols` source matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SelectionPlan {
    source_dims: (usize, usize),
    row_indices: Vec<usize>,
    col_indices: Vec<usize>,
    seed: u64,
}

impl SelectionPlan {
    /// Draws `target.0` rows then `target.1` columns without replacement
    /// from one SplitMix64 stream seeded with `seed`, then sorts both.
    pub fn generate(source_dims: (usize, usize), target: (usize, usize), seed: u64) -> Result<Self> {
        let (rows, cols) = source_dims;
        let (r, c) = target;
        if r == 0 || c == 0 || r > rows || c > cols {
            return Err(Error::TargetExceedsSource {
                source_dims,
                target,
            });
        }
        let mut rng = SplitMix64::new(seed);
        let mut row_indices = rng.sample_without_replacement(rows, r);
        let mut col_indices = rng.sample_without_replacement(cols, c);
        row_indices.sort_unstable();
        col_indices.sort_unstable();
        Ok(SelectionPlan {
            source_dims,
            row_indices,
            col_indices,
            seed,
        })
    }

    /// A plan from explicit indices; they are sorted and must be distinct.
    pub fn from_indices(
        source_dims: (usize, usize),
        mut row_indices: Vec<usize>,
        mut col_indices: Vec<usize>,
        seed: u64,
    ) -> Result<Self> {
        row_indices.sort_unstable();
        col_indices.sort_unstable();
        let valid = |idx: &[usize], bound: usize| {
            !idx.is_empty() && idx.windows(2).all(|w| w[0] < w[1]) && idx.iter().all(|&i| i < bound)
        };
        if !valid(&row_indices, source_dims.0) || !valid(&col_indices, source_dims.1) {
            return Err(Error::SelectionOutOfRange(format!(
                "indices invalid for source {source_dims:?}"
            )));
        }
        Ok(SelectionPlan {
            source_dims,
            row_indices,
            col_indices,
            seed,
        })
    }

    pub fn identity(source_dims: (usize, usize)) -> Self {
        SelectionPlan {
            source_dims,
            row_indices: (0..source_dims.0).collect(),
            col_indices: (0..source_dims.1).collect(),
            seed: 0,
        }
    }

    pub fn source_dims(&self) -> (usize, usize) {
        self.source_dims
    }

    pub fn target_dims(&self) -> (usize, usize) {
        (self.row_indices.len(), self.col_indices.len())
    }

    pub fn row_indices(&self) -> &[usize] {
        &self.row_indices
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of cells kept per sample.
    pub fn cell_count(&self) -> usize {
        self.row_indices.len() * self.col_indices.len()
    }
}

pub fn make_selection_plan(
    source_dims: (usize, usize),
    target: (usize, usize),
    seed: u64,
) -> Result<SelectionPlan> {
    SelectionPlan::generate(source_dims, target, seed)
}

/// Submatrix `out[i][j] = matrix[rows[i]][cols[j]]` of a row-major matrix.
pub fn apply_selection<T: Copy>(
    plan: &SelectionPlan,
    matrix: &[T],
    dims: (usize, usize),
) -> Result<Vec<T>> {
    if dims != plan.source_dims || matrix.len() != dims.0 * dims.1 {
        return Err(Error::DimMismatch(format!(
            "plan source {:?} vs matrix {dims:?} with {} values",
            plan.source_dims,
            matrix.len()
        )));
    }
    let cols = dims.1;
    let mut out = Vec::with_capacity(plan.cell_count());
    for &r in &plan.row_indices {
        let row = &matrix[r * cols..(r + 1) * cols];
        out.extend(plan.col_indices.iter().map(|&c| row[c]));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn message_plan_keeps_750_cells() {
        let plan = make_selection_plan((100, 768), (15, 50), 3).unwrap();
        assert_eq!(plan.cell_count(), 750);
        assert!(plan.row_indices().windows(2).all(|w| w[0] < w[1]));
        assert!(plan.col_indices().iter().all(|&c| c < 768));
    }

    #[test]
    fn full_target_is_identity() {
        let plan = make_selection_plan((4, 6), (4, 6), 99).unwrap();
        assert_eq!(plan.row_indices(), &[0, 1, 2, 3]);
        assert_eq!(plan.col_indices(), &[0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn oversized_target_is_rejected() {
        assert!(matches!(
            make_selection_plan((4, 4), (5, 1), 0),
            Err(Error::TargetExceedsSource { .. })
        ));
        assert!(make_selection_plan((4, 4), (0, 1), 0).is_err());
    }

    #[test]
    fn hand_indexed_submatrix() {
        let plan = SelectionPlan::from_indices((2, 2), vec![1], vec![0], 0).unwrap();
        assert_eq!(apply_selection(&plan, &[1, 2, 3, 4], (2, 2)).unwrap(), vec![3]);
    }

    #[test]
    fn identity_plan_returns_input() {
        let m: Vec<i32> = (0..12).collect();
        let plan = SelectionPlan::identity((3, 4));
        assert_eq!(apply_selection(&plan, &m, (3, 4)).unwrap(), m);
    }

    #[test]
    fn wrong_dims_rejected() {
        let plan = SelectionPlan::identity((2, 2));
        assert!(matches!(
            apply_selection(&plan, &[1, 2, 3, 4, 5, 6], (2, 3)),
            Err(Error::DimMismatch(_))
        ));
    }
}
