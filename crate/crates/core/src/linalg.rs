//! Dense linear-algebra helpers on top of `nalgebra`.
//!
//! Everything here works on small dense matrices (hundreds of rows at most).
//! Wide matrices are zero-padded to square before the SVD so that the full
//! right singular basis, and with it the null space, is available.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

/// Relative factor in the numerical rank threshold `max(rows, cols) * sigma_max * RANK_EPS`.
pub const RANK_EPS: f64 = 1e-12;

/// SVD with an iteration cap.
///
/// The unbounded Golub-Kahan loop can stall on some inputs. On failure the SVD of
/// `H A` is taken for a few Householder reflections `H` (same singular values and
/// right vectors, `U = H U'`), and as a last resort it is assembled from the
/// eigen-decomposition of `A^T A`.
pub fn svd(a: DMatrix<f64>, compute_u: bool, compute_v: bool) -> SVD<f64, nalgebra::Dyn, nalgebra::Dyn> {
    let (r, c) = a.shape();
    let cap = 100 * (r.max(c) + 10);
    if let Some(s) = SVD::try_new(a.clone(), compute_u, compute_v, f64::EPSILON, cap) {
        return s;
    }
    for k in 1..=4 {
        let mut h = DVector::from_fn(r, |i, _| ((k * (i + 1)) as f64 * 0.7).sin() + 0.1);
        h /= h.norm();
        let refl = DMatrix::identity(r, r) - &h * h.transpose() * 2.0;
        if let Some(mut s) = SVD::try_new(&refl * &a, compute_u, compute_v, f64::EPSILON, cap) {
            s.u = s.u.map(|u| &refl * u);
            return s;
        }
    }
    log::warn!("SVD did not converge on a {r}x{c} matrix; using the Gram eigen-decomposition");
    let eig = SymmetricEigen::new(a.transpose() * &a);
    let k = r.min(c);
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap_or(std::cmp::Ordering::Equal));
    let v = DMatrix::from_fn(c, k, |i, j| eig.eigenvectors[(i, order[j])]);
    let sv = DVector::from_fn(k, |j, _| eig.eigenvalues[order[j]].max(0.0).sqrt());
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let u = DMatrix::from_fn(r, k, |i, j| {
        if sv[j] > smax * 1e-15 {
            (a.row(i) * v.column(j))[0] / sv[j]
        } else {
            0.0
        }
    });
    SVD {
        u: compute_u.then_some(u),
        v_t: compute_v.then(|| v.transpose()),
        singular_values: sv,
    }
}

/// Singular values in descending order together with the full right singular basis.
#[derive(Debug, Clone)]
pub struct FullSvd {
    /// Singular values, descending, length `min(rows, cols)`.
    pub singular_values: Vec<f64>,
    /// `cols x cols` orthogonal matrix; column `k` pairs with `singular_values[k]`
    /// for `k < min(rows, cols)` and spans the null space beyond that.
    pub v: DMatrix<f64>,
    pub rows: usize,
    pub cols: usize,
}

impl FullSvd {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let (rows, cols) = a.shape();
        if cols == 0 {
            return FullSvd {
                singular_values: vec![],
                v: DMatrix::zeros(0, 0),
                rows,
                cols,
            };
        }
        let padded = if rows < cols {
            let mut p = DMatrix::zeros(cols, cols);
            p.view_mut((0, 0), (rows, cols)).copy_from(a);
            p
        } else {
            a.clone()
        };
        let svd = svd(padded, false, true);
        let v_t = svd.v_t.expect("v_t requested");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&i, &j| {
            svd.singular_values[j]
                .partial_cmp(&svd.singular_values[i])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut v = DMatrix::zeros(cols, cols);
        for (k, &idx) in order.iter().enumerate() {
            v.set_column(k, &v_t.row(idx).transpose());
        }
        let k = rows.min(cols);
        let singular_values = order.iter().take(k).map(|&i| svd.singular_values[i]).collect();
        FullSvd {
            singular_values,
            v,
            rows,
            cols,
        }
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// Smallest singular value counting the implicit zeros of a wide matrix.
    pub fn sigma_min(&self) -> f64 {
        if self.cols > self.rows {
            0.0
        } else {
            self.singular_values.last().copied().unwrap_or(0.0)
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.rows.max(self.cols) as f64 * self.sigma_max() * RANK_EPS
    }

    pub fn rank(&self) -> usize {
        let tol = self.tolerance();
        self.singular_values.iter().filter(|&&s| s > tol).count()
    }

    /// Orthonormal basis of the numerical null space (as columns).
    pub fn null_space(&self) -> DMatrix<f64> {
        let r = self.rank();
        self.v.columns(r, self.cols - r).into_owned()
    }

    /// Right singular vector of the smallest singular value.
    pub fn smallest_right_vector(&self) -> DVector<f64> {
        self.v.column(self.cols - 1).into_owned()
    }
}

pub fn numerical_rank(a: &DMatrix<f64>) -> usize {
    FullSvd::new(a).rank()
}

/// Minimum-norm least-squares solution of `a x = b` with the standard rank cutoff.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let (rows, cols) = a.shape();
    if cols == 0 {
        return DVector::zeros(0);
    }
    if rows == 0 {
        return DVector::zeros(cols);
    }
    let svd = svd(a.clone(), true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = rows.max(cols) as f64 * smax * RANK_EPS;
    svd.solve(b, tol.max(f64::MIN_POSITIVE))
        .unwrap_or_else(|_| DVector::zeros(cols))
}

/// Estimate of `||a||_2^2` by power iteration on `a^T a`.
pub fn spectral_norm_sq(a: &DMatrix<f64>, iters: usize, tol: f64) -> f64 {
    let cols = a.ncols();
    if cols == 0 || a.nrows() == 0 {
        return 0.0;
    }
    // Deterministic start that is not orthogonal to the top singular vector
    // for any reasonable input.
    let mut v = DVector::from_fn(cols, |i, _| 1.0 + 0.1 * ((i % 7) as f64));
    v /= v.norm();
    let mut est = 0.0;
    for _ in 0..iters {
        let av = a * &v;
        let atav = a.transpose() * av;
        let nrm = atav.norm();
        if nrm == 0.0 {
            return 0.0;
        }
        let next = nrm;
        v = atav / nrm;
        if (next - est).abs() <= tol * next.max(1.0) {
            est = next;
            break;
        }
        est = next;
    }
    est
}

/// Build a matrix whose columns are the given vectors.
pub fn columns_to_matrix(rows: usize, cols: &[DVector<f64>]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}

pub fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
