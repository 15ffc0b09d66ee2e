use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::kinematics::JacobiFrame;
use crate::scalar::Scalar;

/// One Coulomb-type term `g / |w^T x|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Interaction<T: Scalar> {
    pub w: DVector<T>,
    pub g: T,
}

/// Full description of a Hamiltonian `-div^T Lambda grad + sum g / |w^T x|`
/// over `n_vec` three-dimensional coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemSpec<T: Scalar> {
    pub n_vec: usize,
    pub kinetic: DMatrix<T>,
    pub interactions: Vec<Interaction<T>>,
    /// Coordinate permutation for identical-particle symmetrization.
    pub exchange: Option<DMatrix<T>>,
    /// Natural length of the most strongly bound attractive pair; sets the
    /// scale of the sampled Gaussian widths.
    pub length_scale: T,
}

impl<T: Scalar> SystemSpec<T> {
    pub fn new(kinetic: DMatrix<T>, interactions: Vec<Interaction<T>>, exchange: Option<DMatrix<T>>) -> Result<Self> {
        let n_vec = kinetic.nrows();
        if n_vec == 0 || kinetic.ncols() != n_vec {
            return Err(invalid("kinetic matrix must be square and nonempty"));
        }
        if !is_spd(&kinetic) {
            return Err(invalid("kinetic matrix must be symmetric positive-definite"));
        }
        for (i, term) in interactions.iter().enumerate() {
            if term.w.len() != n_vec {
                return Err(invalid(format!("interaction {i}: w has length {}, expected {n_vec}", term.w.len())));
            }
            if term.w.iter().all(|x| *x == T::zero()) {
                return Err(invalid(format!("interaction {i}: w must be nonzero")));
            }
        }
        if let Some(p) = &exchange {
            if p.nrows() != n_vec || p.ncols() != n_vec {
                return Err(invalid("exchange permutation has wrong shape"));
            }
            let tol = T::lit(1e-12);
            let id = DMatrix::<T>::identity(n_vec, n_vec);
            if !approx_eq(&(p * p), &id, tol) {
                return Err(invalid("exchange permutation must satisfy P^2 = I"));
            }
            if !approx_eq(&(p.transpose() * &kinetic * p), &kinetic, tol) {
                return Err(invalid("exchange permutation must leave the kinetic matrix invariant"));
            }
        }
        let length_scale = natural_length(&kinetic, &interactions);
        Ok(Self { n_vec, kinetic, interactions, exchange, length_scale })
    }

    /// One coordinate, `-(1/2mu) Laplacian - q/r`.
    pub fn hydrogenic(mu: T, q: T) -> Result<Self> {
        if !(mu > T::zero()) {
            return Err(invalid("reduced mass must be positive"));
        }
        let kinetic = DMatrix::from_element(1, 1, T::one() / (T::lit(2.0) * mu));
        Self::new(kinetic, vec![Interaction { w: DVector::from_element(1, T::one()), g: -q }], None)
    }

    /// Three charges `{q1, q2, -1}` in the Jacobi coordinates `(xi, R)` of `frame`.
    pub fn three_body(frame: &JacobiFrame<T>, q1: T, q2: T) -> Result<Self> {
        let kinetic = DMatrix::from_fn(2, 2, |i, j| frame.kinetic[(i, j)]);
        let interactions = frame
            .pairs_for(q1, q2)
            .iter()
            .filter(|p| p.charge_product != T::zero())
            .map(|p| Interaction { w: DVector::from_column_slice(p.w.as_slice()), g: p.charge_product })
            .collect();
        Self::new(kinetic, interactions, None)
    }

    /// Nucleus of charge `z` and mass `nuclear_mass` (None = infinite) with two
    /// unit-mass electrons, in nucleus-centred coordinates `(r1, r2)`. The
    /// mass-polarization term `-(1/M) grad1 . grad2` sits in the off-diagonal
    /// of the kinetic matrix. Symmetrized under electron exchange.
    pub fn two_electron_atom(z: T, nuclear_mass: Option<T>) -> Result<Self> {
        let two = T::lit(2.0);
        let (diag, off) = match nuclear_mass {
            None => (T::lit(0.5), T::zero()),
            Some(m) => {
                if !(m > T::zero()) {
                    return Err(invalid("nuclear mass must be positive"));
                }
                let mu = m / (m + T::one());
                (T::one() / (two * mu), T::one() / (two * m))
            }
        };
        let kinetic = DMatrix::from_row_slice(2, 2, &[diag, off, off, diag]);
        let v = |a: f64, b: f64| DVector::from_column_slice(&[T::lit(a), T::lit(b)]);
        let interactions = vec![
            Interaction { w: v(1.0, 0.0), g: -z },
            Interaction { w: v(0.0, 1.0), g: -z },
            Interaction { w: v(1.0, -1.0), g: T::one() },
        ];
        let swap = DMatrix::from_row_slice(2, 2, &[T::zero(), T::one(), T::one(), T::zero()]);
        Self::new(kinetic, interactions, Some(swap))
    }

    /// Effective kinetic coefficient `w^T Lambda w` along the pair coordinate.
    pub fn pair_kinetic(&self, w: &DVector<T>) -> T {
        (w.transpose() * &self.kinetic * w)[(0, 0)]
    }
}

fn natural_length<T: Scalar>(kinetic: &DMatrix<T>, interactions: &[Interaction<T>]) -> T {
    // Bohr radius 2 (w^T Lambda w) / |g| of each attractive pair; the tightest wins.
    let mut best: Option<T> = None;
    for term in interactions.iter().filter(|t| t.g < T::zero()) {
        let kin = (term.w.transpose() * kinetic * &term.w)[(0, 0)];
        let a = T::lit(2.0) * kin / (-term.g);
        best = Some(match best {
            Some(b) if b < a => b,
            _ => a,
        });
    }
    best.unwrap_or_else(T::one)
}

pub(crate) fn is_spd<T: Scalar>(m: &DMatrix<T>) -> bool {
    let sym_tol = T::lit(1e-12) * m.amax().max(T::one());
    if !approx_eq(m, &m.transpose(), sym_tol) {
        return false;
    }
    m.clone().cholesky().is_some()
}

fn approx_eq<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>, tol: T) -> bool {
    a.iter().zip(b.iter()).all(|(x, y)| (*x - *y).abs() <= tol)
}
