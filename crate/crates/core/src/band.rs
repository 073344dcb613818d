//! The banded decomposable graph `G^k` on `p` ordered variables.
//!
//! Vertices `i` and `j` are adjacent when `|i - j| <= k`. The cliques are the
//! windows of `k + 1` consecutive variables, listed in a perfect order, and
//! each separator is the overlap of two consecutive cliques. With `k = 0` the
//! graph has `p` singleton cliques and no separators; with `k = p - 1` it is
//! complete.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::matrix::IndexSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BandModel {
    p: usize,
    k: usize,
}

impl BandModel {
    pub fn new(p: usize, k: usize) -> Result<Self> {
        if p == 0 {
            return Err(invalid("dimension p must be at least 1"));
        }
        if k >= p {
            return Err(invalid(format!("bandwidth k = {k} must be at most p - 1 = {}", p - 1)));
        }
        Ok(BandModel { p, k })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_cliques(&self) -> usize {
        self.p - self.k
    }

    pub fn num_separators(&self) -> usize {
        if self.k == 0 {
            0
        } else {
            self.p - self.k - 1
        }
    }

    pub fn is_complete(&self) -> bool {
        self.k + 1 == self.p
    }

    /// Clique `j` (0-based position in the perfect order): variables `j..=j+k`.
    pub fn clique(&self, j: usize) -> IndexSet {
        IndexSet::contiguous(j, self.k + 1)
    }

    /// Separator attached to clique `j >= 1`: variables `j..j+k`.
    pub fn separator(&self, j: usize) -> IndexSet {
        debug_assert!(j >= 1 && self.k >= 1);
        IndexSet::contiguous(j, self.k)
    }

    pub fn cliques(&self) -> Vec<IndexSet> {
        (0..self.num_cliques()).map(|j| self.clique(j)).collect()
    }

    /// Separators in perfect order; element `m` belongs to clique `m + 1`.
    pub fn separators(&self) -> Vec<IndexSet> {
        (1..=self.num_separators()).map(|j| self.separator(j)).collect()
    }
}
