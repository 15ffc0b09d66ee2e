//! Closed-form matrix elements between correlated Gaussians
//! `exp(-x^T A x / 2)` over `n` three-dimensional coordinates.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// `B = Ai + Aj` factorized once and shared by all element types of a pair.
#[derive(Debug, Clone)]
pub struct PairIntegrals<T: Scalar> {
    pub b_inv: DMatrix<T>,
    pub det_b: T,
    pub overlap: T,
}

impl<T: Scalar> PairIntegrals<T> {
    pub fn new(ai: &DMatrix<T>, aj: &DMatrix<T>) -> Result<Self> {
        let n = ai.nrows();
        if ai.ncols() != n || aj.nrows() != n || aj.ncols() != n {
            return Err(invalid("width matrices must be square with matching size"));
        }
        let b = ai + aj;
        let chol = b.clone().cholesky().ok_or_else(|| invalid("Ai + Aj is not positive-definite"))?;
        let det_b = chol.l().diagonal().iter().fold(T::one(), |acc, d| acc * *d * *d);
        let b_inv = chol.inverse();
        let two_pi = T::two_pi();
        let three_halves = T::lit(1.5);
        let overlap = (two_pi.powi(n as i32) / det_b).powf(three_halves);
        Ok(Self { b_inv, det_b, overlap })
    }

    /// `3 tr(Lambda Ai B^-1 Aj) * overlap`
    pub fn kinetic(&self, ai: &DMatrix<T>, aj: &DMatrix<T>, lambda: &DMatrix<T>) -> T {
        let m = lambda * ai * &self.b_inv * aj;
        T::lit(3.0) * m.trace() * self.overlap
    }

    /// `<1/|w^T x|>` times the overlap.
    pub fn coulomb(&self, w: &DVector<T>) -> T {
        let c = (w.transpose() * &self.b_inv * w)[(0, 0)];
        self.overlap * (T::lit(2.0) / (T::pi() * c)).sqrt()
    }
}

fn check_spd<T: Scalar>(a: &DMatrix<T>) -> Result<()> {
    if super::system::is_spd(a) {
        Ok(())
    } else {
        Err(invalid("width matrix is not symmetric positive-definite"))
    }
}

/// `(2 pi)^(3n/2) det(Ai + Aj)^(-3/2)`
pub fn overlap<T: Scalar>(ai: &DMatrix<T>, aj: &DMatrix<T>) -> Result<T> {
    check_spd(ai)?;
    check_spd(aj)?;
    Ok(PairIntegrals::new(ai, aj)?.overlap)
}

/// `<phi_i| -div^T Lambda grad |phi_j>`
pub fn kinetic<T: Scalar>(ai: &DMatrix<T>, aj: &DMatrix<T>, lambda: &DMatrix<T>) -> Result<T> {
    check_spd(ai)?;
    check_spd(aj)?;
    Ok(PairIntegrals::new(ai, aj)?.kinetic(ai, aj, lambda))
}

/// `<phi_i| 1/|w^T x| |phi_j>`
pub fn coulomb<T: Scalar>(ai: &DMatrix<T>, aj: &DMatrix<T>, w: &DVector<T>) -> Result<T> {
    if w.iter().all(|x| *x == T::zero()) {
        return Err(invalid("w must be nonzero"));
    }
    check_spd(ai)?;
    check_spd(aj)?;
    Ok(PairIntegrals::new(ai, aj)?.coulomb(w))
}
