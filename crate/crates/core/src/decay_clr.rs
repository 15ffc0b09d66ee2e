//! Exponential decay of computed bound states and the state-count bound for
//! a localized attractive well.
//!
//! The moments `(psi, |r|^n psi)` with `|r| = sum_i |r_i|` are exact for a
//! correlated Gaussian expansion: after the angular integration
//! `int dOmega1 dOmega2 e^{-b r1.r2} = 16 pi^2 sinh(b r1 r2)/(b r1 r2)`, the
//! sinh series splits each pair term into products of one-dimensional
//! Gaussian radial moments. All series terms are positive.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::cg::{GaussianBasis, SpectralResult, SystemSpec};
use crate::error::{invalid, Error, Result};

/// Lieb's constant for the three-dimensional Cwikel-Lieb-Rozenblum bound,
/// `N <= 0.1156 int V^{3/2}`, with the unit-ball volume `4 pi / 3` absorbed
/// so that a well of depth `2T` and radius `R` gives `C_3 (2T)^{3/2} R^3`.
pub const LIEB_CLR_C3: f64 = 0.1156 * 4.0 * PI / 3.0;

/// `Z/(2g) + sqrt(Z^2 + 2g)/(2g)`.
pub fn ahlrichs_constant(z: f64, gap: f64) -> Result<f64> {
    if !(gap > 0.0 && gap.is_finite()) {
        return Err(invalid("threshold gap must be positive"));
    }
    if !(z >= 0.0 && z.is_finite()) {
        return Err(invalid("nuclear charge must be non-negative"));
    }
    Ok((z + (z * z + 2.0 * gap).sqrt()) / (2.0 * gap))
}

/// Upper bound on `(psi, |r_1|^{n+1} psi) / (psi, |r_1|^n psi)`:
/// `(1/(2g)) (Z + sqrt(Z^2 + (g/2)(n+2)^2))`. Never exceeds `(n+1) C`.
pub fn moment_ratio_bound(z: f64, gap: f64, n: usize) -> f64 {
    let m = (n + 2) as f64;
    (z + (z * z + 0.5 * gap * m * m).sqrt()) / (2.0 * gap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayBudget {
    pub z: f64,
    pub gap: f64,
    pub n_e: usize,
    pub c: f64,
    /// Decay rate `1 / (4 C N_e)`.
    pub beta: f64,
}

impl DecayBudget {
    pub fn new(z: f64, gap: f64, n_e: usize) -> Result<Self> {
        if n_e == 0 {
            return Err(invalid("electron count must be positive"));
        }
        let c = ahlrichs_constant(z, gap)?;
        Ok(Self { z, gap, n_e, c, beta: 1.0 / (4.0 * c * n_e as f64) })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRow {
    pub n: usize,
    pub moment: f64,
    /// `(C N_e)^n n!`
    pub bound: f64,
    pub ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub budget: DecayBudget,
    pub energy: f64,
    pub threshold: f64,
    pub rows: Vec<MomentRow>,
    /// `sum_{n <= n_max} (2 beta)^n / n! (psi, |r|^n psi)`
    pub series: f64,
    /// Remainder of the series, bounded term by term with the per-`n` bound.
    pub series_tail: f64,
    pub series_pass: bool,
    pub pass: bool,
}

impl MomentReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,moment,bound\n");
        for r in &self.rows {
            out.push_str(&format!("{},{:.12e},{:.12e}\n", r.n, r.moment, r.bound));
        }
        out
    }
}

/// `int_0^inf r^p e^{-b r^2 / 2} dr`, in logarithmic form.
fn ln_gauss_radial(p: usize, b: f64) -> f64 {
    let s = 0.5 * (p as f64 + 1.0);
    -(2.0f64).ln() + s * (2.0 / b).ln() + ln_gamma(s)
}

/// `int |r|^a e^{-b r^2/2} d^3 r`.
pub fn gaussian_moment_1(a: usize, b: f64) -> f64 {
    4.0 * PI * ln_gauss_radial(a + 2, b).exp()
}

/// `int |r1|^a |r2|^b exp(-x^T B x / 2) d^3 r1 d^3 r2` for a 2x2 positive
/// definite `B`.
pub fn gaussian_moment_2(a: usize, b: usize, m: &DMatrix<f64>) -> Result<f64> {
    let (b11, b22, b12) = (m[(0, 0)], m[(1, 1)], m[(0, 1)]);
    if !(b11 > 0.0 && b22 > 0.0 && b11 * b22 > b12 * b12) {
        return Err(invalid("width matrix must be positive definite"));
    }
    let mut term = 16.0 * PI * PI * (ln_gauss_radial(a + 2, b11) + ln_gauss_radial(b + 2, b22)).exp();
    let mut sum = term;
    let c2 = b12 * b12 / (b11 * b22);
    let (fa, fb) = (a as f64, b as f64);
    for j in 0..1_000_000usize {
        let jj = 2.0 * j as f64;
        // term ratios decrease in j, so once below one the rest is geometric
        let ratio = c2 * (fa + 3.0 + jj) * (fb + 3.0 + jj) / ((jj + 2.0) * (jj + 3.0));
        term *= ratio;
        sum += term;
        if ratio < 1.0 && term * ratio / (1.0 - ratio) <= 1e-17 * sum {
            return Ok(sum);
        }
    }
    Err(Error::Resolution("Gaussian moment series did not converge".into()))
}

/// `int (sum_i |r_i|)^n exp(-x^T B x / 2)` for `n = 0..=n_max`, one or two coordinates.
fn sum_moments(m: &DMatrix<f64>, n_max: usize) -> Result<Vec<f64>> {
    match m.nrows() {
        1 => Ok((0..=n_max).map(|n| gaussian_moment_1(n, m[(0, 0)])).collect()),
        2 => {
            let mut table = vec![vec![0.0; n_max + 1]; n_max + 1];
            for a in 0..=n_max {
                for b in 0..=n_max - a {
                    table[a][b] = gaussian_moment_2(a, b, m)?;
                }
            }
            Ok((0..=n_max)
                .map(|n| {
                    let mut binom = 1.0;
                    let mut s = 0.0;
                    for k in 0..=n {
                        s += binom * table[k][n - k];
                        binom *= (n - k) as f64 / (k + 1) as f64;
                    }
                    s
                })
                .collect())
        }
        d => Err(Error::OutOfScope(format!("moments implemented for one or two coordinates, got {d}"))),
    }
}

/// `(psi, |r|^n psi) / (psi, psi)` for `n = 0..=n_max`.
pub fn state_moments(spec: &SystemSpec<f64>, basis: &GaussianBasis<f64>, coeffs: &[f64], n_max: usize) -> Result<Vec<f64>> {
    let k = basis.len();
    if coeffs.len() != k || k == 0 {
        return Err(invalid("coefficient vector does not match the basis"));
    }
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i..k).map(move |j| (i, j))).collect();
    let terms = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (ai, aj) = (basis.get(i), basis.get(j));
            let mut mom = sum_moments(&(ai + aj), n_max)?;
            if let Some(p) = &spec.exchange {
                let swapped = sum_moments(&(ai + p.transpose() * aj * p), n_max)?;
                for (x, y) in mom.iter_mut().zip(swapped) {
                    *x = 0.5 * (*x + y);
                }
            }
            let w = coeffs[i] * coeffs[j] * if i == j { 1.0 } else { 2.0 };
            Ok(mom.into_iter().map(|x| w * x).collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = vec![0.0; n_max + 1];
    for t in terms {
        for (s, x) in total.iter_mut().zip(t) {
            *s += x;
        }
    }
    if !(total[0] > 0.0) {
        return Err(Error::Resolution("state has non-positive norm".into()));
    }
    let norm = total[0];
    Ok(total.into_iter().map(|x| x / norm).collect())
}

/// Checks `(psi, |r|^n psi) <= (C N_e)^n n!` for `n <= n_max` and
/// `||e^{beta |r|} psi||^2 <= 2`.
pub fn verify_decay(
    spec: &SystemSpec<f64>,
    basis: &GaussianBasis<f64>,
    state: &SpectralResult<f64>,
    budget: &DecayBudget,
    threshold: f64,
    n_max: usize,
) -> Result<MomentReport> {
    if state.energy > threshold - budget.gap {
        return Err(Error::LemmaInapplicable(format!(
            "energy {} is not below threshold {} by the gap {}",
            state.energy, threshold, budget.gap
        )));
    }
    let moments = state_moments(spec, basis, state.coefficients.as_slice(), n_max)?;
    let cn = budget.c * budget.n_e as f64;
    let two_beta = 2.0 * budget.beta;
    let mut rows = Vec::with_capacity(n_max + 1);
    let (mut bound, mut weight, mut series) = (1.0, 1.0, 0.0);
    for (n, &moment) in moments.iter().enumerate() {
        if n > 0 {
            bound *= cn * n as f64;
            weight *= two_beta / n as f64;
        }
        series += weight * moment;
        rows.push(MomentRow { n, moment, bound, ratio: moment / bound, pass: moment <= bound });
    }
    // (2 beta)^n / n! * (C N_e)^n n! = 2^-n
    let series_tail = 0.5f64.powi(n_max as i32);
    let series_pass = series + series_tail <= 2.0;
    let pass = series_pass && rows.iter().all(|r| r.pass);
    Ok(MomentReport { budget: *budget, energy: state.energy, threshold, rows, series, series_tail, series_pass, pass })
}

/// `C_d (2T)^{d/2} R^d n_s`: the Cwikel-Lieb-Rozenblum count for a well of
/// depth `2T` and radius `R` in `d >= 3` dimensions.
pub fn clr_bound_for_radius(t: f64, r: f64, d: usize, n_s: f64, c_d: f64) -> Result<f64> {
    if d < 3 {
        return Err(Error::OutOfScope(format!("the Cwikel-Lieb-Rozenblum bound needs d >= 3, got {d}")));
    }
    if !(t > 0.0 && r >= 0.0 && n_s >= 0.0 && c_d > 0.0) {
        return Err(invalid("T, C_d must be positive and R, n_s non-negative"));
    }
    Ok(c_d * (2.0 * t).powf(0.5 * d as f64) * r.powi(d as i32) * n_s)
}

/// `C_d (2T)^{d/2} |ln 2A|^d / (2 beta)^d * n_s`, the count at radius `|ln 2A| / (2 beta)`.
pub fn clr_count_bound(t: f64, a_w: f64, beta: f64, d: usize, n_s: f64, c_d: f64) -> Result<f64> {
    if !(a_w > 0.0 && beta > 0.0) {
        return Err(invalid("A and beta must be positive"));
    }
    clr_bound_for_radius(t, (2.0 * a_w).ln().abs() / (2.0 * beta), d, n_s, c_d)
}

/// The count at the half-mass radius [`localization_radius`], which is the
/// radius the well actually needs for the mass split to hold for `A > 1`.
pub fn clr_count_bound_localized(t: f64, a_w: f64, beta: f64, d: usize, n_s: f64, c_d: f64) -> Result<f64> {
    if !(a_w > 0.0 && beta > 0.0) {
        return Err(invalid("A and beta must be positive"));
    }
    clr_bound_for_radius(t, localization_radius(a_w, beta).max(0.0), d, n_s, c_d)
}

/// Radius outside which `A^2 e^{-2 beta R}` leaves at most half the mass:
/// `ln(2 A^2) / (2 beta)`.
pub fn localization_radius(a_w: f64, beta: f64) -> f64 {
    (2.0 * a_w * a_w).ln() / (2.0 * beta)
}

/// Inverse of [`localization_radius`] in `A`.
pub fn amplitude_for_radius(r: f64, beta: f64) -> f64 {
    (0.5 * (2.0 * beta * r).exp()).sqrt()
}

/// Number of negative eigenvalues of `-Laplacian - 2T chi_{|x| <= R}` in three
/// dimensions, with multiplicity.
///
/// Per partial wave the zero-energy regular solution is followed in Prüfer
/// form in `x = sqrt(2T) r`; each interior node counts one state, and one more
/// if the exterior solution `a r^{l+1} + b r^{-l}` has a node, which happens
/// iff `R u'/u < -l` at the edge. Channels with `l(l+1) >= 2T R^2` see a
/// non-negative effective potential and bind nothing.
pub fn square_well_count(t: f64, r: f64) -> Result<u64> {
    if !(t > 0.0 && r > 0.0 && t.is_finite() && r.is_finite()) {
        return Err(invalid("well depth and radius must be positive"));
    }
    let x = (2.0 * t).sqrt() * r;
    let mut total = 0u64;
    let mut l = 0usize;
    while ((l * (l + 1)) as f64) < x * x {
        total += (2 * l + 1) as u64 * channel_count(l, x);
        l += 1;
    }
    Ok(total)
}

/// States of angular momentum `l` (without the `2l + 1` degeneracy) in the
/// well of [`square_well_count`].
pub fn square_well_channel_count(t: f64, r: f64, l: usize) -> Result<u64> {
    if !(t > 0.0 && r > 0.0 && t.is_finite() && r.is_finite()) {
        return Err(invalid("well depth and radius must be positive"));
    }
    Ok(channel_count(l, (2.0 * t).sqrt() * r))
}

fn channel_count(l: usize, x: f64) -> u64 {
    let ll = (l * (l + 1)) as f64;
    let lf = l as f64 + 1.0;
    let rhs = |s: f64, th: f64| {
        let (sn, cs) = th.sin_cos();
        cs * cs + (1.0 - ll / (s * s)) * sn * sn
    };
    // u ~ s^{l+1} near the origin, so cot(theta) = (l+1)/s
    let mut s = 1e-3 * x.min(1.0);
    let mut th = (s / lf).atan();
    while s < x {
        // the phase equation has stiffness about 2l/s under the barrier
        let h = (0.05 * s / lf).min(0.01).min(x - s);
        let k1 = rhs(s, th);
        let k2 = rhs(s + 0.5 * h, th + 0.5 * h * k1);
        let k3 = rhs(s + 0.5 * h, th + 0.5 * h * k2);
        let k4 = rhs(s + h, th + h * k3);
        th += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        s += h;
    }
    let nodes = (th / PI).floor().max(0.0);
    let rem = th - nodes * PI;
    // R u'/u = x cot(theta)
    let exterior = rem > 0.0 && x * rem.cos() / rem.sin() < -(l as f64);
    nodes as u64 + u64::from(exterior)
}
