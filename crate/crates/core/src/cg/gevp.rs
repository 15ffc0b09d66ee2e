//! Generalized symmetric eigenproblem `H c = E S c` with an overlap-eigenvalue
//! cutoff, plus the rank-one bordering update used during basis growth.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_COND_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralResult<T: Scalar> {
    /// Lowest generalized eigenvalue.
    pub energy: T,
    /// Ground-state coefficients, normalized to `c^T S c = 1`.
    pub coefficients: DVector<T>,
    /// Dimension of the subspace kept after the conditioning cutoff.
    pub n_kept: usize,
    /// Smallest kept eigenvalue of the diagonally normalized overlap matrix.
    pub min_overlap_eig: T,
    /// `||H c - E S c|| / ||c||`
    pub residual: T,
    /// All kept eigenvalues in ascending order.
    pub levels: Vec<T>,
}

/// Eigen-decomposition of a projected problem, kept for bordering updates.
#[derive(Debug, Clone)]
pub(crate) struct Factorization<T: Scalar> {
    pub levels: DVector<T>,
    /// Columns are S-orthonormal eigenvectors in the original basis.
    pub vectors: DMatrix<T>,
    pub min_overlap_eig: T,
}

pub(crate) fn factorize<T: Scalar>(h: &DMatrix<T>, s: &DMatrix<T>, cond_cutoff: T) -> Result<Factorization<T>> {
    let k = h.nrows();
    if k == 0 || h.ncols() != k || s.nrows() != k || s.ncols() != k {
        return Err(invalid("H and S must be square matrices of equal size"));
    }
    if !(cond_cutoff > T::zero() && cond_cutoff < T::one()) {
        return Err(invalid("cond_cutoff must lie in (0, 1)"));
    }
    let mut d = DVector::zeros(k);
    for i in 0..k {
        let sii = s[(i, i)];
        if !(sii > T::zero()) {
            return Err(invalid(format!("overlap diagonal {i} is not positive")));
        }
        d[i] = T::one() / sii.sqrt();
    }
    let scale = |m: &DMatrix<T>| DMatrix::from_fn(k, k, |i, j| m[(i, j)] * d[i] * d[j]);
    let s_n = scale(s);
    let h_n = scale(h);

    let eig = s_n.symmetric_eigen();
    let s_max = eig.eigenvalues.iter().fold(T::zero(), |m, &x| m.max(x));
    let keep: Vec<usize> = (0..k).filter(|&i| eig.eigenvalues[i] >= cond_cutoff * s_max).collect();
    if keep.is_empty() || !(s_max > T::zero()) {
        return Err(Error::DegenerateBasis { size: k, cutoff: cond_cutoff.as_f64() });
    }
    let min_overlap_eig = keep.iter().map(|&i| eig.eigenvalues[i]).fold(s_max, |m, x| m.min(x));
    let x = DMatrix::from_fn(k, keep.len(), |i, c| eig.eigenvectors[(i, keep[c])] / eig.eigenvalues[keep[c]].sqrt());
    let mut hp = x.transpose() * &h_n * &x;
    hp = (&hp + hp.transpose()) * T::lit(0.5);
    let heig = hp.symmetric_eigen();

    let mut order: Vec<usize> = (0..keep.len()).collect();
    order.sort_by(|&a, &b| heig.eigenvalues[a].partial_cmp(&heig.eigenvalues[b]).expect("finite eigenvalues"));
    let levels = DVector::from_iterator(order.len(), order.iter().map(|&i| heig.eigenvalues[i]));
    let y = DMatrix::from_fn(keep.len(), order.len(), |r, c| heig.eigenvectors[(r, order[c])]);
    let mut vectors = x * y;
    for i in 0..k {
        vectors.row_mut(i).scale_mut(d[i]);
    }
    Ok(Factorization { levels, vectors, min_overlap_eig })
}

pub fn solve_gevp<T: Scalar>(h: &DMatrix<T>, s: &DMatrix<T>, cond_cutoff: T) -> Result<SpectralResult<T>> {
    let f = factorize(h, s, cond_cutoff)?;
    Ok(f.ground_state(h, s))
}

impl<T: Scalar> Factorization<T> {
    pub fn ground_state(&self, h: &DMatrix<T>, s: &DMatrix<T>) -> SpectralResult<T> {
        let energy = self.levels[0];
        let coefficients: DVector<T> = self.vectors.column(0).into_owned();
        let r = h * &coefficients - (s * &coefficients) * energy;
        let residual = r.norm() / coefficients.norm();
        SpectralResult {
            energy,
            coefficients,
            n_kept: self.levels.len(),
            min_overlap_eig: self.min_overlap_eig,
            residual,
            levels: self.levels.iter().copied().collect(),
        }
    }

    /// Lowest eigenvalue after appending one function whose elements against
    /// the current basis are `h_col`, `s_col` and whose diagonal is `(h_nn, s_nn)`.
    ///
    /// Returns `None` when the new function is linearly dependent on the
    /// current span at the level `dependence_tol` of its normalized residual.
    pub fn bordered_ground(&self, h_col: &[T], s_col: &[T], h_nn: T, s_nn: T, dependence_tol: T) -> Option<T> {
        let inv = T::one() / s_nn.sqrt();
        let m = self.levels.len();
        let mut a = vec![T::zero(); m];
        let mut b = vec![T::zero(); m];
        for k in 0..m {
            let col = self.vectors.column(k);
            let mut sa = T::zero();
            let mut sb = T::zero();
            for i in 0..col.len() {
                sa += col[i] * s_col[i];
                sb += col[i] * h_col[i];
            }
            a[k] = sa * inv;
            b[k] = sb * inv;
        }
        let a2 = a.iter().fold(T::zero(), |acc, x| acc + *x * *x);
        let norm2 = T::one() - a2;
        if !(norm2 > dependence_tol) {
            return None;
        }
        let norm = norm2.sqrt();
        let v: Vec<T> = (0..m).map(|k| (b[k] - self.levels[k] * a[k]) / norm).collect();
        let mut d = h_nn * inv * inv;
        for k in 0..m {
            d += -T::lit(2.0) * a[k] * b[k] + a[k] * a[k] * self.levels[k];
        }
        d /= norm2;
        Some(arrowhead_lowest(self.levels.as_slice(), &v, d))
    }
}

/// Lowest eigenvalue of `[[diag(e), v], [v^T, d]]` with `e` ascending.
pub(crate) fn arrowhead_lowest<T: Scalar>(e: &[T], v: &[T], d: T) -> T {
    let vnorm = v.iter().fold(T::zero(), |acc, x| acc + *x * *x).sqrt();
    let e1 = e[0];
    let secular = |lam: T| {
        let mut f = d - lam;
        for (ek, vk) in e.iter().zip(v) {
            f -= *vk * *vk / (*ek - lam);
        }
        f
    };
    let pad = (e1.abs() + d.abs() + T::one()) * T::eps() * T::lit(4.0);
    let mut lo = e1.min(d) - vnorm - pad;
    let mut hi = e1;
    // No pole below e1 pulls the root down: the old ground state survives.
    if v[0] == T::zero() {
        let probe = e1 - e1.abs().max(T::one()) * T::eps() * T::lit(4.0);
        if secular(probe) >= T::zero() {
            return e1;
        }
    }
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if secular(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * T::lit(0.5)
}
