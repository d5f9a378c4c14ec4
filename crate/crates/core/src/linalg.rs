//! Dense and banded kernels: row-major matrices, banded Cholesky, Kronecker-structured
//! products, restarted GMRES and a dense LU fallback.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Config(format!(
                "matrix data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = dot(self.row(i), x);
        }
    }

    /// `self ← self + s·other`
    pub fn add_scaled(&mut self, s: f64, other: &DenseMatrix) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    /// Adds `s · u vᵀ`.
    pub fn add_outer(&mut self, s: f64, u: &[f64], v: &[f64]) {
        for (i, &ui) in u.iter().enumerate() {
            let f = s * ui;
            if f != 0.0 {
                for (a, &vj) in self.data[i * self.cols..(i + 1) * self.cols].iter_mut().zip(v) {
                    *a += f * vj;
                }
            }
        }
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Full Kronecker product `A ⊗ B`.
    pub fn kron(&self, other: &DenseMatrix) -> DenseMatrix {
        let (r, c) = (self.rows * other.rows, self.cols * other.cols);
        let mut out = DenseMatrix::zeros(r, c);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == 0.0 {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Half-bandwidth: largest `|i - j|` with a nonzero entry.
    pub fn bandwidth(&self) -> usize {
        let mut bw = 0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self[(i, j)] != 0.0 {
                    bw = bw.max(i.abs_diff(j));
                }
            }
        }
        bw
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `y ← y + s·x`
pub fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

/// Solves `A x = b` by LU with partial pivoting.
pub fn lu_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let lu = a.to_nalgebra().lu();
    let rhs = nalgebra::DVector::from_column_slice(b);
    lu.solve(&rhs)
        .map(|x| x.as_slice().to_vec())
        .ok_or_else(|| Error::Singular("LU factorization hit a zero pivot".into()))
}

/// Cholesky factor of a symmetric positive definite band matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    /// `l[i * (bw + 1) + (i - j)]` holds `L[i, j]` for `i - bw ≤ j ≤ i`.
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        let n = a.rows();
        if n != a.cols() {
            return Err(Error::Singular("band Cholesky needs a square matrix".into()));
        }
        let bw = a.bandwidth();
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut s = a[(i, j)];
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    s -= l[i * w + (i - k)] * l[j * w + (j - k)];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::Singular(format!("non-positive pivot {s:e} at row {i}")));
                    }
                    l[i * w] = s.sqrt();
                } else {
                    l[i * w + (i - j)] = s / l[j * w];
                }
            }
        }
        Ok(Self { n, bw, l })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// Overwrites `x` (holding `b`) with `A⁻¹ b`.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let w = self.bw + 1;
        for i in 0..self.n {
            let mut s = x[i];
            for k in i.saturating_sub(self.bw)..i {
                s -= self.l[i * w + (i - k)] * x[k];
            }
            x[i] = s / self.l[i * w];
        }
        for i in (0..self.n).rev() {
            let mut s = x[i];
            for k in i + 1..(i + w).min(self.n) {
                s -= self.l[k * w + (k - i)] * x[k];
            }
            x[i] = s / self.l[i * w];
        }
    }

    /// Strided variant: the unknowns live at `x[offset + i * stride]`.
    fn solve_strided(&self, x: &mut [f64], offset: usize, stride: usize, buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend((0..self.n).map(|i| x[offset + i * stride]));
        self.solve_in_place(buf);
        for (i, v) in buf.iter().enumerate() {
            x[offset + i * stride] = *v;
        }
    }
}

/// Applies `A_0 ⊗ A_1 ⊗ … ⊗ A_{d-1}` to `x` (last axis fastest) mode by mode.
pub fn kron_apply(factors: &[&DenseMatrix], x: &[f64]) -> Vec<f64> {
    let mut cur = x.to_vec();
    let mut dims: Vec<usize> = factors.iter().map(|f| f.cols()).collect();
    debug_assert_eq!(dims.iter().product::<usize>(), x.len());
    for (a, f) in factors.iter().enumerate() {
        cur = apply_mode(f, &cur, &dims, a);
        dims[a] = f.rows();
    }
    cur
}

/// Applies `A` along axis `axis` of the tensor `x` with extents `dims`.
pub fn apply_mode(a: &DenseMatrix, x: &[f64], dims: &[usize], axis: usize) -> Vec<f64> {
    let pre: usize = dims[..axis].iter().product();
    let post: usize = dims[axis + 1..].iter().product();
    let (n_in, n_out) = (dims[axis], a.rows());
    let mut out = vec![0.0; pre * n_out * post];
    for p in 0..pre {
        let xin = &x[p * n_in * post..(p + 1) * n_in * post];
        let xout = &mut out[p * n_out * post..(p + 1) * n_out * post];
        if post == 1 {
            for i in 0..n_out {
                xout[i] = dot(a.row(i), xin);
            }
        } else {
            for i in 0..n_out {
                let dst = &mut xout[i * post..(i + 1) * post];
                for (k, &aik) in a.row(i).iter().enumerate() {
                    if aik != 0.0 {
                        axpy(aik, &xin[k * post..(k + 1) * post], dst);
                    }
                }
            }
        }
    }
    out
}

/// Solves `(L_0 ⊗ … ⊗ L_{d-1}) x = b` in place for per-axis Cholesky factors.
pub fn kron_solve_in_place(factors: &[&BandedCholesky], x: &mut [f64]) {
    let dims: Vec<usize> = factors.iter().map(|f| f.len()).collect();
    let mut buf = Vec::new();
    for (a, f) in factors.iter().enumerate() {
        let pre: usize = dims[..a].iter().product();
        let post: usize = dims[a + 1..].iter().product();
        for p in 0..pre {
            for q in 0..post {
                f.solve_strided(x, p * dims[a] * post + q, post, &mut buf);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresStats {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Right-preconditioned restarted GMRES for `A x = b`, starting from `x`.
///
/// Stops when `‖b − A x‖₂ ≤ max(rtol·‖b‖₂, atol)`.
#[allow(clippy::too_many_arguments)]
pub fn gmres(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    mut precond: impl FnMut(&mut [f64]),
    b: &[f64],
    x: &mut [f64],
    rtol: f64,
    atol: f64,
    restart: usize,
    max_iter: usize,
) -> GmresStats {
    let n = b.len();
    let target = (rtol * norm2(b)).max(atol);
    let mut total = 0;
    let mut tmp = vec![0.0; n];
    let mut residual = f64::INFINITY;
    while total < max_iter {
        apply(x, &mut tmp);
        let r: Vec<f64> = b.iter().zip(&tmp).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r);
        residual = beta;
        if beta <= target {
            return GmresStats { iterations: total, residual, converged: true };
        }
        let m = restart.min(max_iter - total).max(1);
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|ri| ri / beta).collect());
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_done = 0;
        for k in 0..m {
            let mut z = v[k].clone();
            precond(&mut z);
            let mut w = vec![0.0; n];
            apply(&z, &mut w);
            for (j, vj) in v.iter().enumerate() {
                h[j][k] = dot(&w, vj);
                axpy(-h[j][k], vj, &mut w);
            }
            // One reorthogonalization pass keeps the basis orthogonal near roundoff.
            for (j, vj) in v.iter().enumerate() {
                let c = dot(&w, vj);
                h[j][k] += c;
                axpy(-c, vj, &mut w);
            }
            h[k + 1][k] = norm2(&w);
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let denom = h[k][k].hypot(h[k + 1][k]);
            if denom == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = h[k][k] / denom;
                sn[k] = h[k + 1][k] / denom;
            }
            let hk1 = h[k + 1][k];
            h[k][k] = cs[k] * h[k][k] + sn[k] * hk1;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k_done = k + 1;
            residual = g[k + 1].abs();
            let hnorm = norm2(&w);
            if residual <= target || hnorm == 0.0 {
                break;
            }
            v.push(w.iter().map(|wi| wi / hnorm).collect());
        }
        let mut y = vec![0.0; k_done];
        for i in (0..k_done).rev() {
            let mut s = g[i];
            for j in i + 1..k_done {
                s -= h[i][j] * y[j];
            }
            y[i] = if h[i][i] != 0.0 { s / h[i][i] } else { 0.0 };
        }
        let mut update = vec![0.0; n];
        for (j, yj) in y.iter().enumerate() {
            axpy(*yj, &v[j], &mut update);
        }
        precond(&mut update);
        axpy(1.0, &update, x);
        if residual <= target {
            apply(x, &mut tmp);
            let true_res = norm2(&b.iter().zip(&tmp).map(|(bi, ai)| bi - ai).collect::<Vec<_>>());
            return GmresStats { iterations: total, residual: true_res, converged: true_res <= target * 10.0 };
        }
    }
    GmresStats { iterations: total, residual, converged: residual <= target }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spd_band(n: usize, bw: usize, seed: u64) -> DenseMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i.saturating_sub(bw)..i {
                let v = rng.gen_range(-1.0..1.0);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
            a[(i, i)] = 2.0 * bw as f64 + 1.0 + rng.gen_range(0.0..1.0);
        }
        a
    }

    #[test]
    fn cholesky_solves_band_systems() {
        for (n, bw) in [(1, 0), (5, 1), (12, 3), (40, 2)] {
            let a = spd_band(n, bw, n as u64);
            let chol = BandedCholesky::factor(&a).unwrap();
            assert_eq!(chol.bandwidth(), bw);
            let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
            let mut b = a.matvec(&x);
            chol.solve_in_place(&mut b);
            for (u, v) in b.iter().zip(&x) {
                assert!((u - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = DenseMatrix::identity(3);
        a[(1, 1)] = -1.0;
        assert!(matches!(BandedCholesky::factor(&a), Err(Error::Singular(_))));
    }

    #[test]
    fn kron_apply_matches_explicit_product() {
        let a = spd_band(3, 1, 1);
        let b = DenseMatrix::from_row_major(2, 4, (0..8).map(|v| v as f64 - 3.0).collect()).unwrap();
        let c = spd_band(4, 2, 2);
        let x: Vec<f64> = (0..48).map(|i| (i as f64).cos()).collect();
        let got = kron_apply(&[&a, &b, &c], &x);
        let want = a.kron(&b).kron(&c).matvec(&x);
        assert_eq!(got.len(), 24);
        for (u, v) in got.iter().zip(&want) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn kron_solve_inverts_kron_apply() {
        let a = spd_band(5, 1, 3);
        let b = spd_band(4, 2, 4);
        let (ca, cb) = (BandedCholesky::factor(&a).unwrap(), BandedCholesky::factor(&b).unwrap());
        let x: Vec<f64> = (0..20).map(|i| 1.0 + i as f64).collect();
        let mut y = kron_apply(&[&a, &b], &x);
        kron_solve_in_place(&[&ca, &cb], &mut y);
        for (u, v) in y.iter().zip(&x) {
            assert!((u - v).abs() < 1e-11);
        }
    }

    #[test]
    fn gmres_solves_nonsymmetric_system() {
        let n = 30;
        let mut a = spd_band(n, 2, 9);
        for i in 0..n {
            for j in i + 1..n {
                a[(i, j)] += 0.05 / (1.0 + (j - i) as f64);
            }
        }
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sqrt()).collect();
        let b = a.matvec(&x_true);
        let mut x = vec![0.0; n];
        let diag: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        let stats = gmres(
            |v, out| a.matvec_into(v, out),
            |v| v.iter_mut().zip(&diag).for_each(|(vi, d)| *vi /= d),
            &b,
            &mut x,
            1e-13,
            0.0,
            8,
            500,
        );
        assert!(stats.converged, "{stats:?}");
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-10);
        }
        let lu = lu_solve(&a, &b).unwrap();
        for (u, v) in lu.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-11);
        }
    }

    #[test]
    fn gmres_exact_guess_needs_no_iterations() {
        let a = spd_band(6, 1, 5);
        let x_true = vec![1.0; 6];
        let b = a.matvec(&x_true);
        let mut x = x_true.clone();
        let stats = gmres(|v, o| a.matvec_into(v, o), |_| {}, &b, &mut x, 1e-12, 0.0, 5, 10);
        assert_eq!(stats.iterations, 0);
    }

    proptest! {
        #[test]
        fn kron_is_bilinear(s in -3.0f64..3.0, seed in any::<u64>()) {
            let a = spd_band(3, 1, seed);
            let b = spd_band(2, 1, seed.wrapping_add(1));
            let x: Vec<f64> = (0..6).map(|i| (i as f64 + s).sin()).collect();
            let sx: Vec<f64> = x.iter().map(|v| s * v).collect();
            let y1 = kron_apply(&[&a, &b], &sx);
            let y2 = kron_apply(&[&a, &b], &x);
            for (u, v) in y1.iter().zip(&y2) {
                prop_assert!((u - s * v).abs() <= 1e-12 * (1.0 + v.abs()));
            }
        }
    }
}
