//! Minimal coordinate-format complex sparse matrix.
//!
//! Entries are kept sorted by `(row, col)` with no duplicates and no stored
//! exact zeros, so two matrices built from the same contributions compare
//! and serialize identically.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64 as C64;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, entries: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|k| (k, k, C64::new(1.0, 0.0))))
    }

    /// Builds from `(row, col, value)` contributions. Contributions at the
    /// same position are summed in the order given.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let mut acc: BTreeMap<(usize, usize), C64> = BTreeMap::new();
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "entry ({r}, {c}) outside {nrows}x{ncols}");
            *acc.entry((r, c)).or_insert(C64::new(0.0, 0.0)) += v;
        }
        let entries = acc.into_iter().filter(|(_, v)| *v != C64::new(0.0, 0.0)).map(|((r, c), v)| (r, c, v)).collect();
        Self { nrows, ncols, entries }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Sorted `(row, col, value)` entries.
    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries
            .binary_search_by(|&(r, c, _)| (r, c).cmp(&(row, col)))
            .map(|k| self.entries[k].2)
            .unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_triplets(self.nrows, self.ncols, self.entries.iter().map(|&(r, c, v)| (r, c, v * s)))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        Self::from_triplets(self.nrows, self.ncols, self.entries.iter().chain(&other.entries).copied())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.entries.iter().map(|&(r, c, v)| (c, r, v)))
    }

    pub fn conj(&self) -> Self {
        Self::from_triplets(self.nrows, self.ncols, self.entries.iter().map(|&(r, c, v)| (r, c, v.conj())))
    }

    pub fn adjoint(&self) -> Self {
        self.transpose().conj()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut by_row: Vec<Vec<(usize, C64)>> = vec![Vec::new(); other.nrows];
        for &(r, c, v) in &other.entries {
            by_row[r].push((c, v));
        }
        let products = self.entries.iter().flat_map(|&(r, k, a)| by_row[k].iter().map(move |&(c, b)| (r, c, a * b)));
        Self::from_triplets(self.nrows, other.ncols, products)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (pr, pc) = (other.nrows, other.ncols);
        let products = self
            .entries
            .iter()
            .flat_map(|&(ra, ca, a)| other.entries.iter().map(move |&(rb, cb, b)| (ra * pr + rb, ca * pc + cb, a * b)));
        Self::from_triplets(self.nrows * pr, self.ncols * pc, products)
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![C64::new(0.0, 0.0); self.nrows];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    /// Largest entrywise `|self − other|`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.entries, &other.entries);
        let mut worst = 0.0_f64;
        while i < a.len() || j < b.len() {
            let ka = a.get(i).map(|e| (e.0, e.1));
            let kb = b.get(j).map(|e| (e.0, e.1));
            let d = match (ka, kb) {
                (Some(x), Some(y)) if x == y => {
                    i += 1;
                    j += 1;
                    (a[i - 1].2 - b[j - 1].2).norm()
                }
                (Some(x), Some(y)) if x < y => {
                    i += 1;
                    a[i - 1].2.norm()
                }
                (Some(_), None) => {
                    i += 1;
                    a[i - 1].2.norm()
                }
                _ => {
                    j += 1;
                    b[j - 1].2.norm()
                }
            };
            worst = worst.max(d);
        }
        worst
    }

    /// One `row col re im` line per stored entry, sorted by `(row, col)`.
    pub fn to_coo_text(&self) -> String {
        let mut out = String::new();
        for &(r, c, v) in &self.entries {
            writeln!(out, "{r} {c} {:.16e} {:.16e}", v.re, v.im).unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn duplicates_are_summed_and_zeros_dropped() {
        let m = SparseMatrix::from_triplets(2, 2, vec![(1, 1, c(1.0, 0.0)), (0, 1, c(2.0, 0.0)), (1, 1, c(-1.0, 0.0))]);
        assert_eq!(m.entries(), &[(0, 1, c(2.0, 0.0))]);
        assert_eq!(m.get(1, 1), c(0.0, 0.0));
    }

    #[test]
    fn kron_matches_definition() {
        let a = SparseMatrix::from_triplets(2, 2, vec![(0, 1, c(1.0, 0.0)), (1, 0, c(0.0, 2.0))]);
        let b = SparseMatrix::from_triplets(2, 2, vec![(0, 0, c(3.0, 0.0)), (1, 1, c(-1.0, 0.0))]);
        let k = a.kron(&b);
        assert_eq!(k.get(0, 2), c(3.0, 0.0));
        assert_eq!(k.get(1, 3), c(-1.0, 0.0));
        assert_eq!(k.get(2, 0), c(0.0, 6.0));
        assert_eq!(k.get(3, 1), c(0.0, -2.0));
        assert_eq!(k.nnz(), 4);
    }

    #[test]
    fn matmul_and_adjoint() {
        let a = SparseMatrix::from_triplets(2, 2, vec![(0, 1, c(1.0, 1.0))]);
        let p = a.adjoint().matmul(&a);
        assert_eq!(p.entries(), &[(1, 1, c(2.0, 0.0))]);
    }

    #[test]
    fn max_abs_diff_sees_one_sided_entries() {
        let a = SparseMatrix::from_triplets(3, 3, vec![(0, 0, c(1.0, 0.0)), (2, 2, c(0.5, 0.0))]);
        let b = SparseMatrix::from_triplets(3, 3, vec![(0, 0, c(1.0, 0.0)), (1, 2, c(0.0, 0.25))]);
        assert_eq!(a.max_abs_diff(&b), 0.5);
        assert_eq!(a.max_abs_diff(&a), 0.0);
    }

    #[test]
    fn coo_text_is_sorted() {
        let m = SparseMatrix::from_triplets(2, 2, vec![(1, 0, c(1.0, 0.0)), (0, 1, c(0.0, -1.0))]);
        let text = m.to_coo_text();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "0 1 0.0000000000000000e0 -1.0000000000000000e0");
        assert!(lines[1].starts_with("1 0 "));
    }
}
