use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

use super::basis::GaussianBasis;
use super::elements::PairIntegrals;
use super::system::SystemSpec;

/// Hamiltonian and overlap between two unsymmetrized Gaussians.
pub fn raw_elements<T: Scalar>(spec: &SystemSpec<T>, ai: &DMatrix<T>, aj: &DMatrix<T>) -> Result<(T, T)> {
    let pair = PairIntegrals::new(ai, aj)?;
    let mut h = pair.kinetic(ai, aj, &spec.kinetic);
    for term in &spec.interactions {
        h += term.g * pair.coulomb(&term.w);
    }
    Ok((h, pair.overlap))
}

/// Applies the exchange projector `(1 + P)/2` to the ket of an element function.
pub fn symmetrize_element<T, F>(exchange: &DMatrix<T>, ai: &DMatrix<T>, aj: &DMatrix<T>, element: F) -> Result<(T, T)>
where
    T: Scalar,
    F: Fn(&DMatrix<T>, &DMatrix<T>) -> Result<(T, T)>,
{
    let (h0, s0) = element(ai, aj)?;
    let aj_swapped = exchange.transpose() * aj * exchange;
    let (h1, s1) = element(ai, &aj_swapped)?;
    let half = T::lit(0.5);
    Ok((half * (h0 + h1), half * (s0 + s1)))
}

/// `(H_ij, S_ij)` in the symmetry sector selected by `spec.exchange`.
pub fn element<T: Scalar>(spec: &SystemSpec<T>, ai: &DMatrix<T>, aj: &DMatrix<T>) -> Result<(T, T)> {
    match &spec.exchange {
        None => raw_elements(spec, ai, aj),
        Some(p) => symmetrize_element(p, ai, aj, |a, b| raw_elements(spec, a, b)),
    }
}

pub fn assemble<T: Scalar>(spec: &SystemSpec<T>, basis: &GaussianBasis<T>) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let k = basis.len();
    if k == 0 {
        return Err(invalid("basis is empty"));
    }
    if basis.n_vec() != spec.n_vec {
        return Err(invalid(format!("basis has n_vec={} but system has n_vec={}", basis.n_vec(), spec.n_vec)));
    }
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i..k).map(move |j| (i, j))).collect();
    let widths = basis.widths();
    let values: Vec<(T, T)> = pairs
        .par_iter()
        .map(|&(i, j)| element(spec, &widths[i], &widths[j]))
        .collect::<Result<_>>()?;
    let mut h = DMatrix::zeros(k, k);
    let mut s = DMatrix::zeros(k, k);
    for (&(i, j), &(hv, sv)) in pairs.iter().zip(values.iter()) {
        h[(i, j)] = hv;
        h[(j, i)] = hv;
        s[(i, j)] = sv;
        s[(j, i)] = sv;
    }
    Ok((h, s))
}

/// Elements of a new function against every member of `basis`, plus its diagonal.
pub(crate) fn border<T: Scalar>(
    spec: &SystemSpec<T>,
    basis: &GaussianBasis<T>,
    a_new: &DMatrix<T>,
) -> Result<(Vec<T>, Vec<T>, T, T)> {
    let mut hs = Vec::with_capacity(basis.len());
    let mut ss = Vec::with_capacity(basis.len());
    for a in basis.widths() {
        let (h, s) = element(spec, a, a_new)?;
        hs.push(h);
        ss.push(s);
    }
    let (hnn, snn) = element(spec, a_new, a_new)?;
    Ok((hs, ss, hnn, snn))
}
