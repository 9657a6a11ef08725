//! Dense row-major matrices and the vector kernels the solvers run on.
//!
//! Everything here is plain `f64` with fixed summation order, so results are
//! bit-reproducible across runs and thread counts.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::rng::SampleStream;

/// Power iteration stops when successive Rayleigh quotients (estimates of the
/// squared spectral norm) differ by less than this, or at the iteration cap.
const POWER_TOL: f64 = 1e-12;
const POWER_CAP: usize = 10_000;
/// Fixed seed for the power-iteration start vector: random direction, but the
/// same one every run.
const POWER_START_SEED: u64 = 0x5eed_1e57;

/// Dense row-major matrix of finite `f64` entries.
///
/// The spectral norm is computed on first use and cached; the cache write is
/// idempotent and thread-safe, so shared read-only matrices can be used from
/// concurrent workers.
#[derive(Debug, Clone)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    spectral_norm_cache: OnceLock<f64>,
}

impl PartialEq for DenseMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.data == other.data
    }
}

impl DenseMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::contract(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::contract(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::contract("matrix entries must be finite"));
        }
        Ok(Self {
            rows,
            cols,
            data,
            spectral_norm_cache: OnceLock::new(),
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self::new(n, n, data).expect("identity dimensions are valid")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major entry slice.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        assert!(i < self.rows, "row index out of bounds");
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Computes `A x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::contract(format!(
                "matvec: matrix is {}x{} but x has length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok(self
            .data
            .chunks_exact(self.cols)
            .map(|row| dot(row, x))
            .collect())
    }

    /// Computes `A' y` without materializing the transpose.
    pub fn matvec_transpose(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows {
            return Err(Error::contract(format!(
                "matvec_transpose: matrix is {}x{} but y has length {}",
                self.rows,
                self.cols,
                y.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (row, &yi) in self.data.chunks_exact(self.cols).zip(y) {
            if yi != 0.0 {
                for (o, &a) in out.iter_mut().zip(row) {
                    *o += yi * a;
                }
            }
        }
        Ok(out)
    }

    /// Largest singular value, estimated by power iteration on the Gram
    /// operator and cached on first use. Returns 0 for the zero matrix.
    ///
    /// The iteration runs on the smaller of `A A'` and `A' A` (same nonzero
    /// spectrum), which keeps the per-step cost at `min(m,n)^2` after a single
    /// Gram-matrix build.
    pub fn spectral_norm(&self) -> f64 {
        *self
            .spectral_norm_cache
            .get_or_init(|| self.power_iteration())
    }

    fn power_iteration(&self) -> f64 {
        let (gram, d) = self.compact_gram();
        let mut v = SampleStream::new(POWER_START_SEED).normal_block(d);
        let nv = norm2(&v);
        for vi in v.iter_mut() {
            *vi /= nv;
        }
        let mut rho_prev = f64::INFINITY;
        let mut rho = 0.0;
        for _ in 0..POWER_CAP {
            let w: Vec<f64> = gram.chunks_exact(d).map(|row| dot(row, &v)).collect();
            rho = dot(&v, &w);
            if (rho - rho_prev).abs() < POWER_TOL {
                break;
            }
            rho_prev = rho;
            let nw = norm2(&w);
            if nw == 0.0 {
                // v is in the null space; for the zero matrix rho is 0.
                break;
            }
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi = wi / nw;
            }
        }
        rho.max(0.0).sqrt()
    }

    /// Builds the smaller Gram matrix (`A A'` when rows <= cols, else `A' A`)
    /// as a dense symmetric `d x d` block, `d = min(rows, cols)`.
    fn compact_gram(&self) -> (Vec<f64>, usize) {
        if self.rows <= self.cols {
            let d = self.rows;
            let mut gram = vec![0.0; d * d];
            for i in 0..d {
                let ri = self.row(i);
                for j in i..d {
                    let g = dot(ri, self.row(j));
                    gram[i * d + j] = g;
                    gram[j * d + i] = g;
                }
            }
            (gram, d)
        } else {
            let d = self.cols;
            let mut gram = vec![0.0; d * d];
            for row in self.data.chunks_exact(d) {
                for (i, &ai) in row.iter().enumerate() {
                    if ai != 0.0 {
                        for (g, &aj) in gram[i * d + i..(i + 1) * d].iter_mut().zip(&row[i..]) {
                            *g += ai * aj;
                        }
                    }
                }
            }
            for i in 0..d {
                for j in 0..i {
                    gram[i * d + j] = gram[j * d + i];
                }
            }
            (gram, d)
        }
    }
}

/// Dot product with four-lane accumulation (fixed order, fast, deterministic).
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let ra = ca.remainder();
    let rb = cb.remainder();
    let mut acc = [0.0f64; 4];
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        sum += x * y;
    }
    sum
}

/// Euclidean norm.
pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// Magnitudes of `x` sorted in nonincreasing order.
///
/// The sort is stable, so ties keep their original index order.
pub fn nonincreasing_rearrangement(x: &[f64]) -> Vec<f64> {
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    mags
}

/// The k-th largest magnitude of `x` (k is 1-based), in O(n).
pub(crate) fn kth_largest_magnitude(x: &[f64], k: usize) -> f64 {
    assert!(k >= 1 && k <= x.len(), "k out of range");
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let (_, kth, _) = mags.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    *kth
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let data = SampleStream::new(seed).normal_block(rows * cols);
        DenseMatrix::new(rows, cols, data).unwrap()
    }

    #[test]
    fn new_rejects_bad_shapes() {
        assert!(DenseMatrix::new(0, 3, vec![]).is_err());
        assert!(DenseMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(DenseMatrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(DenseMatrix::new(1, 2, vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn matvec_identity_and_hand_cases() {
        let id = DenseMatrix::identity(2);
        assert_eq!(id.matvec(&[3.0, -1.0]).unwrap(), vec![3.0, -1.0]);

        let a = DenseMatrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(a.matvec(&[1.0, 1.0]).unwrap(), vec![3.0, 7.0]);

        let z = DenseMatrix::new(3, 2, vec![0.0; 6]).unwrap();
        assert_eq!(z.matvec(&[5.0, 5.0]).unwrap(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn matvec_transpose_hand_cases() {
        let id = DenseMatrix::identity(2);
        assert_eq!(id.matvec_transpose(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);

        let a = DenseMatrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(a.matvec_transpose(&[1.0, 0.0]).unwrap(), vec![1.0, 2.0]);

        let swap = DenseMatrix::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(swap.matvec_transpose(&[2.5, -4.0]).unwrap(), vec![-4.0, 2.5]);
    }

    #[test]
    fn matvec_rejects_dimension_mismatch() {
        let a = DenseMatrix::new(2, 3, vec![0.0; 6]).unwrap();
        assert!(a.matvec(&[1.0, 2.0]).is_err());
        assert!(a.matvec_transpose(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn spectral_norm_identity() {
        let id = DenseMatrix::identity(5);
        assert!((id.spectral_norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn spectral_norm_diagonal() {
        let a = DenseMatrix::new(2, 2, vec![3.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((a.spectral_norm() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn spectral_norm_zero_matrix() {
        let z = DenseMatrix::new(3, 4, vec![0.0; 12]).unwrap();
        assert_eq!(z.spectral_norm(), 0.0);
    }

    #[test]
    fn spectral_norm_is_cached_and_consistent() {
        let a = random_matrix(6, 9, 100);
        let first = a.spectral_norm();
        assert_eq!(first, a.spectral_norm());
    }

    /// Cyclic Jacobi eigenvalue iteration for a symmetric matrix, used only
    /// as an independent oracle for the power-iteration result.
    fn jacobi_max_eigenvalue(mut g: Vec<Vec<f64>>) -> f64 {
        let d = g.len();
        let frob: f64 = g
            .iter()
            .flat_map(|r| r.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        for _sweep in 0..200 {
            let mut off = 0.0;
            for p in 0..d {
                for q in (p + 1)..d {
                    off += g[p][q] * g[p][q];
                }
            }
            if off.sqrt() <= 1e-14 * frob.max(1.0) {
                break;
            }
            for p in 0..d {
                for q in (p + 1)..d {
                    if g[p][q].abs() <= 1e-300 {
                        continue;
                    }
                    let theta = (g[q][q] - g[p][p]) / (2.0 * g[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..d {
                        let gkp = g[k][p];
                        let gkq = g[k][q];
                        g[k][p] = c * gkp - s * gkq;
                        g[k][q] = s * gkp + c * gkq;
                    }
                    for k in 0..d {
                        let gpk = g[p][k];
                        let gqk = g[q][k];
                        g[p][k] = c * gpk - s * gqk;
                        g[q][k] = s * gpk + c * gqk;
                    }
                }
            }
        }
        (0..d).map(|i| g[i][i]).fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn spectral_norm_matches_jacobi_oracle() {
        let a = random_matrix(8, 12, 2024);
        // Full 12x12 Gram matrix A'A, built with plain loops.
        let mut g = vec![vec![0.0; 12]; 12];
        for i in 0..12 {
            for j in 0..12 {
                let mut s = 0.0;
                for k in 0..8 {
                    s += a.get(k, i) * a.get(k, j);
                }
                g[i][j] = s;
            }
        }
        let oracle = jacobi_max_eigenvalue(g).sqrt();
        let est = a.spectral_norm();
        assert!(
            (est - oracle).abs() <= 1e-5 * oracle,
            "power iteration {est} vs jacobi {oracle}"
        );
    }

    #[test]
    fn spectral_norm_dominates_rayleigh_quotients() {
        let a = random_matrix(10, 14, 55);
        let sigma = a.spectral_norm();
        let mut stream = SampleStream::new(77);
        for _ in 0..100 {
            let mut x = stream.normal_block(14);
            let nx = norm2(&x);
            for xi in x.iter_mut() {
                *xi /= nx;
            }
            let ax = a.matvec(&x).unwrap();
            assert!(norm2(&ax) <= sigma * (1.0 + 1e-5));
        }
    }

    #[test]
    fn rearrangement_hand_cases() {
        assert_eq!(
            nonincreasing_rearrangement(&[3.0, -5.0, 2.0]),
            vec![5.0, 3.0, 2.0]
        );
        assert_eq!(
            nonincreasing_rearrangement(&[0.0, 0.0, 0.0]),
            vec![0.0, 0.0, 0.0]
        );
        assert_eq!(
            nonincreasing_rearrangement(&[-1.0, -1.0, 2.0]),
            vec![2.0, 1.0, 1.0]
        );
    }

    #[test]
    fn kth_largest_magnitude_agrees_with_rearrangement() {
        let x = [0.3, -2.0, 0.0, 1.5, -1.5, 4.0];
        let sorted = nonincreasing_rearrangement(&x);
        for k in 1..=x.len() {
            assert_eq!(kth_largest_magnitude(&x, k), sorted[k - 1]);
        }
    }

    mod proptests {
        use super::*;
        use proptest::prelude::*;

        fn finite_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
            proptest::collection::vec(-1e3..1e3f64, len)
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(200))]

            #[test]
            fn matvec_is_linear(
                x in finite_vec(6),
                y in finite_vec(6),
                alpha in -10.0..10.0f64,
                beta in -10.0..10.0f64,
                seed in 0u64..1000,
            ) {
                let a = random_matrix(4, 6, seed);
                let combo: Vec<f64> = x.iter().zip(&y)
                    .map(|(xi, yi)| alpha * xi + beta * yi)
                    .collect();
                let lhs = a.matvec(&combo).unwrap();
                let ax = a.matvec(&x).unwrap();
                let ay = a.matvec(&y).unwrap();
                let scale = norm2(&lhs).max(1.0);
                for i in 0..4 {
                    prop_assert!((lhs[i] - (alpha * ax[i] + beta * ay[i])).abs() <= 1e-12 * scale);
                }
            }

            #[test]
            fn adjoint_consistency(
                x in finite_vec(7),
                y in finite_vec(5),
                seed in 0u64..1000,
            ) {
                let a = random_matrix(5, 7, seed);
                let ax = a.matvec(&x).unwrap();
                let aty = a.matvec_transpose(&y).unwrap();
                let lhs = dot(&ax, &y);
                let rhs = dot(&x, &aty);
                let scale = lhs.abs().max(rhs.abs()).max(1.0);
                prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
            }

            #[test]
            fn rearrangement_is_sorted_permutation_of_magnitudes(
                x in proptest::collection::vec(-1e6..1e6f64, 0..40),
            ) {
                let r = nonincreasing_rearrangement(&x);
                prop_assert_eq!(r.len(), x.len());
                for w in r.windows(2) {
                    prop_assert!(w[0] >= w[1]);
                }
                let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
                mags.sort_by(f64::total_cmp);
                let mut sorted_r = r.clone();
                sorted_r.sort_by(f64::total_cmp);
                prop_assert_eq!(mags, sorted_r);
            }
        }
    }
}
