//! Trace table: which server each model visits at each time step, and which
//! roots it trains there.
//!
//! Column `t` of the initial table sends model `d` to server `(d + t) % N`
//! and holds the roots of batch `d` homed at that server. Merging deletes a
//! whole column and spreads each model's roots from it over the same model's
//! surviving columns, so every surviving column stays a bijection and each
//! model keeps its total root count.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::graph::partition::ServerId;
use crate::graph::VertexId;
use crate::rng::stream;
use crate::sampler::MiniBatchPlan;

/// Server of model `d` at time step `t` before any merging.
pub fn migration_target(d: usize, t: usize, n: usize) -> ServerId {
    ((d + t) % n) as ServerId
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    /// Index of the time step in the unmerged table.
    pub step: usize,
    /// `servers[d]`: where model `d` trains in this column.
    pub servers: Vec<ServerId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceTable {
    columns: Vec<Column>,
    /// `cells[d][c]`: roots model `d` trains in column `c`.
    cells: Vec<Vec<Vec<VertexId>>>,
}

impl TraceTable {
    /// Unmerged table for `n` models with empty cells.
    pub fn initial(n: usize) -> Self {
        let columns = (0..n)
            .map(|t| Column {
                step: t,
                servers: (0..n).map(|d| migration_target(d, t, n)).collect(),
            })
            .collect();
        Self {
            columns,
            cells: vec![vec![Vec::new(); n]; n],
        }
    }

    /// Unmerged table filled from a redistribution plan.
    pub fn from_plan(plan: &MiniBatchPlan) -> Self {
        let n = plan.groups.len();
        let mut tt = Self::initial(n);
        for d in 0..n {
            for t in 0..n {
                let s = migration_target(d, t, n) as usize;
                tt.cells[d][t] = plan.groups[d][s].clone();
            }
        }
        tt
    }

    /// Unmerged table from a count matrix `[model][column]`; roots are
    /// placeholders numbered per model row.
    pub fn from_counts(counts: &[Vec<usize>]) -> Result<Self> {
        let n = counts.len();
        if counts.iter().any(|row| row.len() != n) {
            return Err(Error::invalid("count matrix must be N x N"));
        }
        let mut tt = Self::initial(n);
        for (d, row) in counts.iter().enumerate() {
            let mut next = 0 as VertexId;
            for (t, &c) in row.iter().enumerate() {
                tt.cells[d][t] = (next..next + c as VertexId).collect();
                next += c as VertexId;
            }
        }
        Ok(tt)
    }

    pub fn n_models(&self) -> usize {
        self.cells.len()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn cell(&self, model: usize, column: usize) -> &[VertexId] {
        &self.cells[model][column]
    }

    pub fn server(&self, model: usize, column: usize) -> ServerId {
        self.columns[column].servers[model]
    }

    /// Original step indices of the surviving columns.
    pub fn steps(&self) -> Vec<usize> {
        self.columns.iter().map(|c| c.step).collect()
    }

    pub fn root_counts(&self) -> Vec<Vec<usize>> {
        self.cells
            .iter()
            .map(|row| row.iter().map(Vec::len).collect())
            .collect()
    }

    pub fn column_sums(&self) -> Vec<usize> {
        (0..self.n_columns())
            .map(|c| self.cells.iter().map(|row| row[c].len()).sum())
            .collect()
    }

    pub fn row_sums(&self) -> Vec<usize> {
        self.cells
            .iter()
            .map(|row| row.iter().map(Vec::len).sum())
            .collect()
    }

    /// Every column assigns the models to distinct servers.
    pub fn check_bijection(&self) -> Result<()> {
        let n = self.n_models();
        for col in &self.columns {
            let mut seen = vec![false; n];
            for &s in &col.servers {
                if s as usize >= n || std::mem::replace(&mut seen[s as usize], true) {
                    return Err(Error::Invariant(format!(
                        "column for step {} is not a bijection: {:?}",
                        col.step, col.servers
                    )));
                }
            }
        }
        Ok(())
    }

    /// Column with the fewest roots (ties to the lowest index); `None` when
    /// fewer than two columns remain.
    pub fn find_fewest_column(&self) -> Option<usize> {
        find_fewest_column(&self.column_sums())
    }

    /// Removes column `col` and spreads each model's roots from it over that
    /// model's surviving columns. Each survivor gets `q` or `q + 1` roots, the
    /// extra ones going to the lowest surviving columns; which roots land
    /// where is shuffled with `key`.
    pub fn delete_column_and_redistribute(&self, col: usize, key: u64) -> Result<TraceTable> {
        if self.n_columns() < 2 {
            return Err(Error::invalid("need at least two columns to merge"));
        }
        if col >= self.n_columns() {
            return Err(Error::invalid(format!("column {col} out of range")));
        }
        let mut out = self.clone();
        out.columns.remove(col);
        let survivors = out.n_columns();
        for (d, row) in out.cells.iter_mut().enumerate() {
            let mut moved = row.remove(col);
            moved.shuffle(&mut stream(crate::rng::mix64(key, d as u64)));
            let (q, r) = (moved.len() / survivors, moved.len() % survivors);
            let mut it = moved.into_iter();
            for (j, cell) in row.iter_mut().enumerate() {
                let take = q + usize::from(j < r);
                cell.extend(it.by_ref().take(take));
            }
        }
        Ok(out)
    }

    /// Applies a merge pattern (original step ids, in removal order).
    pub fn apply_pattern(&self, removed_steps: &[usize], key: u64) -> Result<TraceTable> {
        let mut tt = self.clone();
        for (i, &step) in removed_steps.iter().enumerate() {
            let col = tt
                .columns
                .iter()
                .position(|c| c.step == step)
                .ok_or_else(|| Error::invalid(format!("step {step} not in table")))?;
            tt = tt.delete_column_and_redistribute(col, crate::rng::mix64(key, i as u64))?;
        }
        Ok(tt)
    }
}

/// Argmin over column sums, ties to the lowest index; `None` below two
/// columns.
pub fn find_fewest_column(column_sums: &[usize]) -> Option<usize> {
    if column_sums.len() < 2 {
        return None;
    }
    column_sums
        .iter()
        .enumerate()
        .min_by_key(|&(i, &s)| (s, i))
        .map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn migration_examples() {
        assert_eq!(migration_target(0, 0, 2), 0);
        assert_eq!(migration_target(0, 1, 2), 1);
        assert_eq!(migration_target(2, 2, 3), 1);
    }

    #[test]
    fn fewest_column() {
        assert_eq!(find_fewest_column(&[9, 6, 9]), Some(1));
        assert_eq!(find_fewest_column(&[4, 4]), Some(0));
        assert_eq!(find_fewest_column(&[4]), None);
    }

    #[test]
    fn walkthrough_row() {
        let tt = TraceTable::from_counts(&[vec![3, 2, 3], vec![4, 2, 2], vec![2, 2, 4]]).unwrap();
        assert_eq!(tt.column_sums(), vec![9, 6, 9]);
        let merged = tt.delete_column_and_redistribute(1, 0).unwrap();
        assert_eq!(merged.root_counts()[1], vec![5, 3]);
        assert_eq!(merged.row_sums(), vec![8, 8, 8]);
        merged.check_bijection().unwrap();
    }

    #[test]
    fn remainder_goes_low() {
        let tt = TraceTable::from_counts(&[vec![0, 5, 0], vec![0; 3], vec![0; 3]]).unwrap();
        let merged = tt.delete_column_and_redistribute(1, 9).unwrap();
        assert_eq!(merged.root_counts()[0], vec![3, 2]);
    }

    #[test]
    fn single_column_cannot_merge() {
        let tt = TraceTable::from_counts(&[vec![1]]).unwrap();
        assert!(tt.find_fewest_column().is_none());
        assert!(tt.delete_column_and_redistribute(0, 0).is_err());
    }

    #[test]
    fn broken_bijection_detected() {
        let mut tt = TraceTable::initial(3);
        tt.columns[0].servers = vec![0, 0, 2];
        assert!(tt.check_bijection().is_err());
    }

    #[test]
    fn pattern_matches_manual_removal() {
        let tt = TraceTable::from_counts(&[vec![1, 2, 3], vec![3, 1, 2], vec![2, 3, 1]]).unwrap();
        let manual = tt
            .delete_column_and_redistribute(2, crate::rng::mix64(7, 0))
            .unwrap()
            .delete_column_and_redistribute(0, crate::rng::mix64(7, 1))
            .unwrap();
        assert_eq!(tt.apply_pattern(&[2, 0], 7).unwrap(), manual);
        assert_eq!(manual.steps(), vec![1]);
    }
}
