use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

use super::system::is_spd;

/// Relative Frobenius distance below which two width matrices are the same function.
pub const DUPLICATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianBasis<T: Scalar> {
    n_vec: usize,
    widths: Vec<DMatrix<T>>,
}

impl<T: Scalar> GaussianBasis<T> {
    pub fn new(n_vec: usize) -> Self {
        Self { n_vec, widths: Vec::new() }
    }

    pub fn from_widths(n_vec: usize, widths: impl IntoIterator<Item = DMatrix<T>>) -> Result<Self> {
        let mut basis = Self::new(n_vec);
        for a in widths {
            basis.push(a)?;
        }
        Ok(basis)
    }

    pub fn n_vec(&self) -> usize {
        self.n_vec
    }

    pub fn len(&self) -> usize {
        self.widths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.widths.is_empty()
    }

    pub fn widths(&self) -> &[DMatrix<T>] {
        &self.widths
    }

    pub fn get(&self, i: usize) -> &DMatrix<T> {
        &self.widths[i]
    }

    /// Checks a candidate against the SPD and duplicate rules without inserting it.
    pub fn admissible(&self, a: &DMatrix<T>) -> Result<()> {
        if a.nrows() != self.n_vec || a.ncols() != self.n_vec {
            return Err(invalid(format!("width matrix must be {0}x{0}", self.n_vec)));
        }
        if !is_spd(a) {
            return Err(invalid("width matrix is not symmetric positive-definite"));
        }
        if self.widths.iter().any(|b| is_duplicate(a, b)) {
            return Err(invalid("duplicate basis function"));
        }
        Ok(())
    }

    pub fn push(&mut self, a: DMatrix<T>) -> Result<()> {
        self.admissible(&a)?;
        self.widths.push(a);
        Ok(())
    }

    /// Appends without the duplicate check; only used to probe solver behaviour
    /// on exactly dependent sets.
    pub fn push_unchecked(&mut self, a: DMatrix<T>) {
        self.widths.push(a);
    }

    pub fn insert(&mut self, i: usize, a: DMatrix<T>) -> Result<()> {
        self.admissible(&a)?;
        self.widths.insert(i, a);
        Ok(())
    }

    pub fn replace(&mut self, i: usize, a: DMatrix<T>) -> Result<()> {
        let old = std::mem::replace(&mut self.widths[i], a);
        let candidate = self.widths.remove(i);
        match self.admissible(&candidate) {
            Ok(()) => {
                self.widths.insert(i, candidate);
                Ok(())
            }
            Err(e) => {
                self.widths.insert(i, old);
                Err(e)
            }
        }
    }

    pub fn remove(&mut self, i: usize) -> DMatrix<T> {
        self.widths.remove(i)
    }

    pub fn truncate(&mut self, len: usize) {
        self.widths.truncate(len);
    }

    /// One line per function: the row-major upper triangle of `A_i`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for a in &self.widths {
            let mut first = true;
            for i in 0..self.n_vec {
                for j in i..self.n_vec {
                    if !first {
                        out.push(' ');
                    }
                    first = false;
                    let _ = write!(out, "{}", a[(i, j)]);
                }
            }
            out.push('\n');
        }
        out
    }
}

impl<T: Scalar + FromStr> GaussianBasis<T> {
    pub fn from_text(text: &str) -> Result<Self> {
        let mut n_vec = None;
        let mut basis: Option<Self> = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let values: Vec<T> = line
                .split_whitespace()
                .map(|tok| tok.parse::<T>().map_err(|_| invalid(format!("line {}: bad number {tok:?}", lineno + 1))))
                .collect::<Result<_>>()?;
            let n = triangle_dim(values.len())
                .ok_or_else(|| invalid(format!("line {}: {} entries is not a triangle count", lineno + 1, values.len())))?;
            match n_vec {
                None => n_vec = Some(n),
                Some(m) if m != n => return Err(invalid(format!("line {}: dimension {n} differs from {m}", lineno + 1))),
                _ => {}
            }
            let mut a = DMatrix::zeros(n, n);
            let mut it = values.into_iter();
            for i in 0..n {
                for j in i..n {
                    let v = it.next().expect("triangle count checked");
                    a[(i, j)] = v;
                    a[(j, i)] = v;
                }
            }
            basis
                .get_or_insert_with(|| Self::new(n))
                .push(a)
                .map_err(|e| match e {
                    Error::InvalidInput(m) => invalid(format!("line {}: {m}", lineno + 1)),
                    other => other,
                })?;
        }
        basis.ok_or_else(|| invalid("empty basis file"))
    }
}

fn triangle_dim(count: usize) -> Option<usize> {
    (1..=64).find(|n| n * (n + 1) / 2 == count)
}

fn is_duplicate<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> bool {
    let scale = a.norm().max(b.norm());
    (a - b).norm() < T::lit(DUPLICATE_TOL) * scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn duplicates_rejected() {
        let mut b = GaussianBasis::<f64>::new(2);
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.1, 2.0]);
        b.push(a.clone()).unwrap();
        assert!(b.push(a.clone() * (1.0 + 1e-12)).is_err());
        b.push(a * 1.001).unwrap();
        assert_eq!(b.len(), 2);
    }

    #[test]
    fn non_spd_rejected() {
        let mut b = GaussianBasis::<f64>::new(2);
        assert!(b.push(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
    }

    #[test]
    fn text_format_layout() {
        let b = GaussianBasis::from_widths(2, [DMatrix::from_row_slice(2, 2, &[1.5, -0.25, -0.25, 3.0])]).unwrap();
        assert_eq!(b.to_text(), "1.5 -0.25 3\n");
        assert!(GaussianBasis::<f64>::from_text("1 2\n").is_err());
        assert!(GaussianBasis::<f64>::from_text("").is_err());
        assert!(GaussianBasis::<f64>::from_text("1 0 1\n2\n").is_err());
    }

    proptest! {
        #[test]
        fn text_round_trip(entries in prop::collection::vec((0.01f64..100.0, -0.5f64..0.5, 0.01f64..100.0), 1..20)) {
            let mut b = GaussianBasis::<f64>::new(2);
            for (a11, c, a22) in entries {
                let off = c * (a11 * a22).sqrt();
                let _ = b.push(DMatrix::from_row_slice(2, 2, &[a11, off, off, a22]));
            }
            prop_assume!(!b.is_empty());
            let back = GaussianBasis::<f64>::from_text(&b.to_text()).unwrap();
            prop_assert_eq!(back, b);
        }
    }
}
