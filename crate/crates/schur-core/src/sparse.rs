//! Compressed sparse row matrices, just enough for the elliptic solvers.
//!
//! Assembly goes through triplets with duplicate summation; iteration order in
//! every kernel is fixed so repeated runs are bit-identical.

#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Build an n x n matrix from (row, col, value) triplets. Duplicates are
    /// summed in sorted order; exact zeros produced by assembly are kept out.
    pub fn from_triplets(n: usize, triplets: &mut Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in triplets.iter() {
            assert!(r < n && c < n, "triplet index out of bounds");
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        // Drop entries that summed to exactly zero to keep patterns tight.
        let mut keep_col = Vec::with_capacity(col_idx.len());
        let mut keep_val = Vec::with_capacity(vals.len());
        let mut new_counts = vec![0usize; n];
        let mut k = 0;
        for r in 0..n {
            let cnt = row_ptr[r + 1];
            for _ in 0..cnt {
                if vals[k] != 0.0 {
                    keep_col.push(col_idx[k]);
                    keep_val.push(vals[k]);
                    new_counts[r] += 1;
                }
                k += 1;
            }
        }
        let mut ptr = vec![0usize; n + 1];
        for r in 0..n {
            ptr[r + 1] = ptr[r] + new_counts[r];
        }
        Self { n, row_ptr: ptr, col_idx: keep_col, vals: keep_val }
    }

    /// Build row by row: `fill` receives each row index in order and appends
    /// that row's (column, value) pairs to the scratch buffer in any order.
    /// Entries are sorted and duplicates summed per row, so peak memory stays
    /// at the final CSR size; banded assemblies need this at fine
    /// resolutions where a global triplet list would not fit.
    pub fn from_row_fn(n: usize, mut fill: impl FnMut(usize, &mut Vec<(usize, f64)>)) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0usize);
        let mut col_idx = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for r in 0..n {
            scratch.clear();
            fill(r, &mut scratch);
            scratch.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < scratch.len() {
                let (c, mut v) = scratch[k];
                assert!(c < n, "column index out of bounds");
                k += 1;
                while k < scratch.len() && scratch[k].0 == c {
                    v += scratch[k].1;
                    k += 1;
                }
                if v != 0.0 {
                    col_idx.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self { n, row_ptr, col_idx, vals }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        (&self.col_idx[lo..hi], &self.vals[lo..hi])
    }

    /// y = A x, sequential row order.
    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for r in 0..self.n {
            let lo = self.row_ptr[r];
            let hi = self.row_ptr[r + 1];
            let mut acc = 0.0;
            for k in lo..hi {
                acc += self.vals[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_into(x, &mut y);
        y
    }

    /// Largest |A_rc - A_cr| over the joint pattern.
    pub fn symmetry_defect(&self) -> f64 {
        let mut defect = 0.0f64;
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let mirrored = self.get(c, r);
                defect = defect.max((v - mirrored).abs());
            }
        }
        defect
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|r| {
                let (_, vals) = self.row(r);
                vals.iter().sum()
            })
            .collect()
    }

    /// Connected components of the sparsity graph; used to reject operators
    /// whose kernel is bigger than the constants.
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut components = 0;
        let mut stack = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(v) = stack.pop() {
                let (cols, _) = self.row(v);
                for &c in cols {
                    if !seen[c] {
                        seen[c] = true;
                        stack.push(c);
                    }
                }
            }
        }
        components
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn assembles_sorted_and_merged() {
        let mut t = vec![(1usize, 0usize, 2.0), (0, 0, 1.0), (1, 0, 3.0), (0, 1, -1.0), (1, 1, 0.0)];
        let a = CsrMatrix::from_triplets(2, &mut t);
        assert_eq!(a.get(0, 0), 1.0);
        assert_eq!(a.get(0, 1), -1.0);
        assert_eq!(a.get(1, 0), 5.0);
        assert_eq!(a.get(1, 1), 0.0);
        assert_eq!(a.nnz(), 3); // exact zero dropped
    }

    #[test]
    fn from_row_fn_matches_from_triplets() {
        let mut t = vec![
            (0usize, 1usize, 2.0),
            (0, 1, 3.0),
            (0, 0, 1.0),
            (1, 2, -1.0),
            (2, 0, 4.0),
            (2, 2, 0.0),
        ];
        let rows: Vec<Vec<(usize, f64)>> = vec![
            vec![(1, 2.0), (0, 1.0), (1, 3.0)],
            vec![(2, -1.0)],
            vec![(2, 0.0), (0, 4.0)],
        ];
        let a = CsrMatrix::from_triplets(3, &mut t);
        let b = CsrMatrix::from_row_fn(3, |r, out| out.extend_from_slice(&rows[r]));
        assert_eq!(a.nnz(), b.nnz());
        for r in 0..3 {
            for c in 0..3 {
                assert_eq!(a.get(r, c), b.get(r, c));
            }
        }
    }

    #[test]
    fn component_count_sees_block_structure() {
        let mut t = vec![(0usize, 1usize, 1.0), (1, 0, 1.0), (2, 3, 1.0), (3, 2, 1.0)];
        let a = CsrMatrix::from_triplets(4, &mut t);
        assert_eq!(a.component_count(), 2);
    }

    proptest! {
        #[test]
        fn matvec_matches_dense(n in 1usize..8, entries in proptest::collection::vec((0usize..8, 0usize..8, -5.0f64..5.0), 0..40), x in proptest::collection::vec(-2.0f64..2.0, 8)) {
            let mut t: Vec<(usize, usize, f64)> = entries.into_iter().filter(|&(r, c, _)| r < n && c < n).collect();
            let mut dense = vec![vec![0.0f64; n]; n];
            for &(r, c, v) in &t {
                dense[r][c] += v;
            }
            let a = CsrMatrix::from_triplets(n, &mut t);
            let y = a.mul(&x[..n].to_vec());
            for r in 0..n {
                let want: f64 = (0..n).map(|c| dense[r][c] * x[c]).sum();
                prop_assert!((y[r] - want).abs() < 1e-12);
            }
        }
    }
}
