//! Direct dense and block-tridiagonal solvers for the causal layer systems.
//!
//! Layer matrices are small and dense (one element in a tent solve) or block
//! tridiagonal (one space-time slab: elements couple only to same-slab
//! neighbors through time-like faces). Both paths factor once and then solve
//! many right-hand sides, expose transpose solves for condition estimation,
//! and flag near-singular pivots instead of regularizing them.

use ndarray::{Array1, Array2, ArrayView2, ArrayViewMut2, Axis};

use crate::error::{Error, Result};

/// Relative pivot floor: a factorization whose smallest pivot falls below
/// this times the largest matrix entry is reported singular.
pub const PIVOT_RTOL: f64 = 1e-13;

/// Dense LU factorization with partial pivoting, PA = LU stored in place.
#[derive(Clone, Debug)]
pub struct DenseLu {
    lu: Array2<f64>,
    // Row swapped with row k at step k.
    pivots: Vec<usize>,
    min_pivot: f64,
    max_entry: f64,
}

impl DenseLu {
    /// Factor the matrix. `layer` only labels the error on singular systems.
    pub fn factor(mut a: Array2<f64>, layer: usize) -> Result<DenseLu> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "layer matrices are square");
        let max_entry = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut pivots = vec![0usize; n];
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let mut piv = k;
            let mut best = a[[k, k]].abs();
            for i in (k + 1)..n {
                let v = a[[i, k]].abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            pivots[k] = piv;
            if piv != k {
                for j in 0..n {
                    a.swap([k, j], [piv, j]);
                }
            }
            let d = a[[k, k]];
            min_pivot = min_pivot.min(d.abs());
            if d.abs() <= PIVOT_RTOL * max_entry {
                return Err(Error::SingularLayer {
                    layer,
                    pivot: d.abs(),
                    threshold: PIVOT_RTOL * max_entry,
                });
            }
            // Eliminate below the pivot; row-slice updates keep this tight.
            let (pivot_rows, mut rest) = a.view_mut().split_at(Axis(0), k + 1);
            let pivot_row = pivot_rows.row(k);
            for mut row in rest.rows_mut() {
                let l = row[k] / d;
                if l != 0.0 {
                    row[k] = l;
                    let (_, tail) = row.split_at(Axis(0), k + 1);
                    let (_, ptail) = pivot_row.split_at(Axis(0), k + 1);
                    let mut tail = tail;
                    tail.scaled_add(-l, &ptail);
                }
            }
        }
        Ok(DenseLu {
            lu: a,
            pivots,
            min_pivot: if n == 0 { 0.0 } else { min_pivot },
            max_entry,
        })
    }

    pub fn size(&self) -> usize {
        self.lu.nrows()
    }

    /// Smallest |pivot| over largest matrix entry; a cheap conditioning hint.
    pub fn pivot_ratio(&self) -> f64 {
        if self.max_entry == 0.0 {
            0.0
        } else {
            self.min_pivot / self.max_entry
        }
    }

    /// Solve A x = b in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.size();
        assert_eq!(b.len(), n);
        for k in 0..n {
            b.swap(k, self.pivots[k]);
        }
        // L y = Pb (unit lower), then U x = y.
        for k in 0..n {
            let bk = b[k];
            if bk != 0.0 {
                for i in (k + 1)..n {
                    b[i] -= self.lu[[i, k]] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut v = b[k];
            for j in (k + 1)..n {
                v -= self.lu[[k, j]] * b[j];
            }
            b[k] = v / self.lu[[k, k]];
        }
    }

    /// Solve A^T x = b in place.
    pub fn solve_transpose_in_place(&self, b: &mut [f64]) {
        let n = self.size();
        assert_eq!(b.len(), n);
        // A^T = U^T L^T P: forward with U^T, back with L^T, then un-permute.
        for k in 0..n {
            let mut v = b[k];
            for i in 0..k {
                v -= self.lu[[i, k]] * b[i];
            }
            b[k] = v / self.lu[[k, k]];
        }
        for k in (0..n).rev() {
            let bk = b[k];
            if bk != 0.0 {
                for i in 0..k {
                    b[i] -= self.lu[[k, i]] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            b.swap(k, self.pivots[k]);
        }
    }

    /// Solve A X = B for all columns of B in place.
    pub fn solve_mat_in_place(&self, b: &mut Array2<f64>) {
        assert_eq!(b.nrows(), self.size());
        for mut col in b.columns_mut() {
            if let Some(slice) = col.as_slice_mut() {
                self.solve_in_place(slice);
            } else {
                let mut tmp: Vec<f64> = col.to_vec();
                self.solve_in_place(&mut tmp);
                for (dst, src) in col.iter_mut().zip(&tmp) {
                    *dst = *src;
                }
            }
        }
    }

    /// Solve A^T X = B for all columns of B in place.
    pub fn solve_transpose_mat_in_place(&self, b: &mut Array2<f64>) {
        assert_eq!(b.nrows(), self.size());
        for mut col in b.columns_mut() {
            let mut tmp: Vec<f64> = col.to_vec();
            self.solve_transpose_in_place(&mut tmp);
            for (dst, src) in col.iter_mut().zip(&tmp) {
                *dst = *src;
            }
        }
    }
}

/// Block-tridiagonal system: diagonal blocks D_0..D_{m-1}, sub-diagonal
/// blocks L_1..L_{m-1} (block row j, column j-1), super-diagonal blocks
/// U_0..U_{m-2} (block row j, column j+1). Blocks may be rectangular-free
/// (all square, one size per block row).
#[derive(Clone, Debug, Default)]
pub struct BlockTridiagonal {
    pub diag: Vec<Array2<f64>>,
    pub lower: Vec<Array2<f64>>,
    pub upper: Vec<Array2<f64>>,
}

impl BlockTridiagonal {
    pub fn new(diag: Vec<Array2<f64>>, lower: Vec<Array2<f64>>, upper: Vec<Array2<f64>>) -> Self {
        assert!(!diag.is_empty());
        assert_eq!(lower.len(), diag.len() - 1);
        assert_eq!(upper.len(), diag.len() - 1);
        for (j, d) in diag.iter().enumerate() {
            assert_eq!(d.nrows(), d.ncols(), "diagonal block {j} not square");
        }
        for j in 1..diag.len() {
            assert_eq!(lower[j - 1].nrows(), diag[j].nrows());
            assert_eq!(lower[j - 1].ncols(), diag[j - 1].nrows());
            assert_eq!(upper[j - 1].nrows(), diag[j - 1].nrows());
            assert_eq!(upper[j - 1].ncols(), diag[j].nrows());
        }
        BlockTridiagonal { diag, lower, upper }
    }

    pub fn nblocks(&self) -> usize {
        self.diag.len()
    }

    pub fn size(&self) -> usize {
        self.diag.iter().map(|d| d.nrows()).sum()
    }

    /// Matrix 1-norm (max absolute column sum), from the unfactored blocks.
    pub fn norm_1(&self) -> f64 {
        let m = self.nblocks();
        let mut best = 0.0f64;
        let mut offsets = vec![0usize; m];
        for j in 1..m {
            offsets[j] = offsets[j - 1] + self.diag[j - 1].nrows();
        }
        for j in 0..m {
            let cols = self.diag[j].ncols();
            for c in 0..cols {
                let mut s = 0.0;
                for v in self.diag[j].column(c) {
                    s += v.abs();
                }
                if j + 1 < m {
                    for v in self.lower[j].column(c) {
                        s += v.abs();
                    }
                }
                if j > 0 {
                    for v in self.upper[j - 1].column(c) {
                        s += v.abs();
                    }
                }
                best = best.max(s);
            }
        }
        best
    }

    /// Block Thomas factorization: S_0 = D_0 and
    /// S_j = D_j - L_j S_{j-1}^{-1} U_{j-1}, each S_j factored densely.
    /// Consumes the diagonal blocks; keeps L and U for the sweeps.
    pub fn factor(self, layer: usize) -> Result<BlockTridiagonalLu> {
        let m = self.nblocks();
        let norm_1 = self.norm_1();
        let mut schur: Vec<DenseLu> = Vec::with_capacity(m);
        let mut lhat: Vec<Array2<f64>> = Vec::with_capacity(m.saturating_sub(1));
        for (j, dj) in self.diag.into_iter().enumerate() {
            if j == 0 {
                schur.push(DenseLu::factor(dj, layer)?);
                continue;
            }
            // Lhat_j = L_j S_{j-1}^{-1}, via S_{j-1}^T Lhat_j^T = L_j^T.
            let mut rhs = self.lower[j - 1].t().to_owned();
            schur[j - 1].solve_transpose_mat_in_place(&mut rhs);
            let lh = rhs.t().to_owned();
            let s = dj - lh.dot(&self.upper[j - 1]);
            schur.push(DenseLu::factor(s, layer)?);
            lhat.push(lh);
        }
        Ok(BlockTridiagonalLu {
            schur,
            lhat,
            upper: self.upper,
            norm_1,
        })
    }
}

/// Factored block-tridiagonal matrix: A = (I + Lhat) blockdiag(S) (I + V)
/// with V_j = S_j^{-1} U_j kept implicitly through solves.
pub struct BlockTridiagonalLu {
    schur: Vec<DenseLu>,
    lhat: Vec<Array2<f64>>,
    upper: Vec<Array2<f64>>,
    norm_1: f64,
}

impl BlockTridiagonalLu {
    pub fn nblocks(&self) -> usize {
        self.schur.len()
    }

    pub fn size(&self) -> usize {
        self.schur.iter().map(|s| s.size()).sum()
    }

    /// 1-norm of the unfactored matrix, recorded at factorization time.
    pub fn norm_1(&self) -> f64 {
        self.norm_1
    }

    fn block_bounds(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.nblocks());
        let mut at = 0;
        for s in &self.schur {
            out.push((at, at + s.size()));
            at += s.size();
        }
        out
    }

    /// Solve A x = b in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.size());
        let bounds = self.block_bounds();
        let m = self.nblocks();
        // Forward: y_j = b_j - Lhat_j y_{j-1}.
        for j in 1..m {
            let (p0, p1) = bounds[j - 1];
            let (q0, q1) = bounds[j];
            let prev = Array1::from(b[p0..p1].to_vec());
            let correction = self.lhat[j - 1].dot(&prev);
            for (dst, c) in b[q0..q1].iter_mut().zip(correction.iter()) {
                *dst -= c;
            }
        }
        // Backward: x_j = S_j^{-1} (y_j - U_j x_{j+1}).
        for j in (0..m).rev() {
            let (q0, q1) = bounds[j];
            if j + 1 < m {
                let (r0, r1) = bounds[j + 1];
                let nxt = Array1::from(b[r0..r1].to_vec());
                let correction = self.upper[j].dot(&nxt);
                for (dst, c) in b[q0..q1].iter_mut().zip(correction.iter()) {
                    *dst -= c;
                }
            }
            self.schur[j].solve_in_place(&mut b[q0..q1]);
        }
    }

    /// Solve A^T x = b in place.
    pub fn solve_transpose_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.size());
        let bounds = self.block_bounds();
        let m = self.nblocks();
        // A^T = (I + V^T) blockdiag(S^T) (I + Lhat^T).
        // Forward: z_j = b_j - V_{j-1}^T z_{j-1} = b_j - U_{j-1}^T S_{j-1}^{-T} z_{j-1}.
        for j in 1..m {
            let (p0, p1) = bounds[j - 1];
            let (q0, q1) = bounds[j];
            let mut prev = b[p0..p1].to_vec();
            self.schur[j - 1].solve_transpose_in_place(&mut prev);
            let correction = self.upper[j - 1].t().dot(&Array1::from(prev));
            for (dst, c) in b[q0..q1].iter_mut().zip(correction.iter()) {
                *dst -= c;
            }
        }
        // Diagonal: w_j = S_j^{-T} z_j.
        for j in 0..m {
            let (q0, q1) = bounds[j];
            self.schur[j].solve_transpose_in_place(&mut b[q0..q1]);
        }
        // Backward: x_j = w_j - Lhat_{j+1}^T x_{j+1}.
        for j in (0..m.saturating_sub(1)).rev() {
            let (q0, q1) = bounds[j];
            let (r0, r1) = bounds[j + 1];
            let nxt = Array1::from(b[r0..r1].to_vec());
            let correction = self.lhat[j].t().dot(&nxt);
            for (dst, c) in b[q0..q1].iter_mut().zip(correction.iter()) {
                *dst -= c;
            }
        }
    }

    /// Hager-style 1-norm condition estimate of the unfactored matrix.
    pub fn condition_estimate(&self) -> f64 {
        let n = self.size();
        let inv_norm = estimate_inverse_norm_1(
            n,
            |x| self.solve_in_place(x),
            |x| self.solve_transpose_in_place(x),
        );
        self.norm_1 * inv_norm
    }
}

/// Estimate the 1-norm of A^{-1} given solve callbacks, by the classic
/// gradient-ascent bound: repeatedly solve for a direction, take signs, and
/// follow the transpose solve to the steepest coordinate. Terminates in a few
/// iterations and always returns a lower bound attained by a concrete vector.
pub fn estimate_inverse_norm_1<F, G>(n: usize, solve: F, solve_t: G) -> f64
where
    F: Fn(&mut [f64]),
    G: Fn(&mut [f64]),
{
    if n == 0 {
        return 0.0;
    }
    let mut x = vec![1.0 / n as f64; n];
    let mut best = 0.0f64;
    for _ in 0..8 {
        solve(&mut x);
        let norm: f64 = x.iter().map(|v| v.abs()).sum();
        best = best.max(norm);
        let mut xi: Vec<f64> = x.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
        solve_t(&mut xi);
        // Pick the coordinate with the largest gradient; stop at a fixpoint.
        let (jmax, zmax) = xi
            .iter()
            .enumerate()
            .fold((0usize, 0.0f64), |(bj, bv), (j, v)| {
                if v.abs() > bv {
                    (j, v.abs())
                } else {
                    (bj, bv)
                }
            });
        let dot: f64 = xi.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() / norm.max(f64::MIN_POSITIVE);
        if zmax <= dot.abs() + 1e-14 {
            break;
        }
        x = vec![0.0; n];
        x[jmax] = 1.0;
    }
    best
}

/// Condition estimate for a dense factored matrix; `norm_1` is the 1-norm of
/// the unfactored matrix (compute before factoring).
pub fn dense_condition_estimate(lu: &DenseLu, norm_1: f64) -> f64 {
    let inv = estimate_inverse_norm_1(
        lu.size(),
        |x| lu.solve_in_place(x),
        |x| lu.solve_transpose_in_place(x),
    );
    norm_1 * inv
}

/// Matrix 1-norm of a dense matrix.
pub fn dense_norm_1(a: &ArrayView2<f64>) -> f64 {
    let mut best = 0.0f64;
    for col in a.columns() {
        let s: f64 = col.iter().map(|v| v.abs()).sum();
        best = best.max(s);
    }
    best
}

/// Scatter-add a local block into a dense matrix at the given offsets.
pub fn add_block(target: &mut ArrayViewMut2<f64>, row0: usize, col0: usize, block: &ArrayView2<f64>) {
    for ((i, j), v) in block.indexed_iter() {
        if *v != 0.0 {
            target[[row0 + i, col0 + j]] += v;
        }
    }
}
