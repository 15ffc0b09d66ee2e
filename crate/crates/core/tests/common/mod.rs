//! Independent numerical oracles shared by the integration suites.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite Gauss-Legendre of `panels` pieces on [lo, hi].
pub fn integrate(f: &mut dyn FnMut(f64) -> f64, lo: f64, hi: f64, panels: usize, rule: &[(f64, f64)]) -> f64 {
    let h = (hi - lo) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let a = lo + p as f64 * h;
        for &(x, w) in rule {
            s += 0.5 * h * w * f(a + 0.5 * h * (x + 1.0));
        }
    }
    s
}

/// Random symmetric positive-definite 2x2 matrix with eigenvalues in [lo, hi].
pub fn random_spd(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> DMatrix<f64> {
    let th: f64 = rng.gen_range(0.0..PI);
    let (c, s) = (th.cos(), th.sin());
    let l1: f64 = rng.gen_range(lo..hi);
    let l2: f64 = rng.gen_range(lo..hi);
    let q = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
    &q * DMatrix::from_diagonal(&DVector::from_column_slice(&[l1, l2])) * q.transpose()
}

pub fn random_w(rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let w = DVector::from_column_slice(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
        if w.norm() > 0.2 {
            return w;
        }
    }
}

#[derive(Clone, Copy)]
pub enum Element<'a> {
    Overlap,
    Kinetic(&'a DMatrix<f64>),
    Coulomb(&'a DVector<f64>),
}

/// `<phi_i | O | phi_j>` for two-coordinate Gaussians `exp(-x^T A x / 2)`,
/// integrated over `(r1, r2, cos theta_12)` in polar form `r1 = rho cos phi`,
/// `r2 = rho sin phi`. The kinetic element uses the gradient form
/// `int grad phi_i^T Lambda grad phi_j`.
pub fn element_by_quadrature(ai: &DMatrix<f64>, aj: &DMatrix<f64>, op: Element) -> f64 {
    let b = ai + aj;
    let (b11, b22, b12) = (b[(0, 0)], b[(1, 1)], b[(0, 1)]);
    let lam_min = b.symmetric_eigenvalues().min();
    let rho_max = (2.0 * 45.0 / lam_min).sqrt();
    let g_u = gauss_legendre(48);
    let g_r = gauss_legendre(24);
    let g_p = gauss_legendre(32);
    let gauss = |r1: f64, r2: f64, u: f64| (-0.5 * (b11 * r1 * r1 + b22 * r2 * r2 + 2.0 * b12 * r1 * r2 * u)).exp();

    let angular = |r1: f64, r2: f64| -> f64 {
        match op {
            Element::Overlap => integrate(&mut |u| gauss(r1, r2, u), -1.0, 1.0, 1, &g_u),
            Element::Kinetic(lam) => integrate(
                &mut |u| {
                    let g = DMatrix::from_row_slice(2, 2, &[r1 * r1, r1 * r2 * u, r1 * r2 * u, r2 * r2]);
                    (lam * ai * g * aj).trace() * gauss(r1, r2, u)
                },
                -1.0,
                1.0,
                1,
                &g_u,
            ),
            Element::Coulomb(w) => {
                let a = w[0] * w[0] * r1 * r1 + w[1] * w[1] * r2 * r2;
                let bb = 2.0 * w[0] * w[1] * r1 * r2;
                if bb.abs() < 1e-300 {
                    return integrate(&mut |u| gauss(r1, r2, u) / a.sqrt(), -1.0, 1.0, 1, &g_u);
                }
                let lo = (a - bb.abs()).max(0.0).sqrt();
                let hi = (a + bb.abs()).sqrt();
                integrate(&mut |s| 2.0 / bb.abs() * gauss(r1, r2, (s * s - a) / bb), lo, hi, 1, &g_u)
            }
        }
    };

    let radial = |phi: f64| -> f64 {
        let (c, s) = (phi.cos(), phi.sin());
        integrate(
            &mut |rho| {
                let (r1, r2) = (rho * c, rho * s);
                r1 * r1 * r2 * r2 * rho * angular(r1, r2)
            },
            0.0,
            rho_max,
            4,
            &g_r,
        )
    };

    let total = match op {
        Element::Coulomb(w) if w[0] != 0.0 && w[1] != 0.0 => {
            let kink = (w[0].abs() / w[1].abs()).atan();
            integrate(&mut |p| radial(p), 0.0, kink, 2, &g_p) + integrate(&mut |p| radial(p), kink, 0.5 * PI, 2, &g_p)
        }
        _ => integrate(&mut |p| radial(p), 0.0, 0.5 * PI, 2, &g_p),
    };
    8.0 * PI * PI * total
}

/// Monte-Carlo `<phi_i | 1/|w^T x| | phi_j>` with its one-sigma error, by
/// sampling `x ~ N(0, B^{-1})` in six dimensions.
pub fn coulomb_by_sampling(ai: &DMatrix<f64>, aj: &DMatrix<f64>, w: &DVector<f64>, samples: usize, seed: u64) -> (f64, f64) {
    let b = ai + aj;
    let cov = b.clone().try_inverse().unwrap();
    let l = cov.cholesky().unwrap().l();
    let s_norm = (2.0 * PI).powi(3) * b.determinant().powf(-1.5);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..samples {
        let mut y = [0.0f64; 3];
        for yc in y.iter_mut() {
            let z = DVector::from_column_slice(&[rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)]);
            let x = &l * z;
            *yc = w[0] * x[0] + w[1] * x[1];
        }
        let v = 1.0 / (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
        s1 += v;
        s2 += v * v;
    }
    let m = samples as f64;
    let mean = s1 / m;
    let err = ((s2 / m - mean * mean).max(0.0) / m).sqrt();
    (s_norm * mean, s_norm * err)
}

/// Zeros of the spherical Bessel function `j_n` (`n >= -1`) below `x`,
/// counted as sign changes on a grid finer than the zero spacing.
pub fn spherical_bessel_zeros_below(n: i64, x: f64) -> u64 {
    let j = |order: i64, t: f64| -> f64 {
        // j_{-1}(t) = cos t / t
        let jm1 = t.cos() / t;
        if order == -1 {
            return jm1;
        }
        let j0 = t.sin() / t;
        if order == 0 {
            return j0;
        }
        // Miller's downward recurrence, normalized by j_0
        let start = order + (1.5 * t) as i64 + 60;
        let (mut hi, mut mid) = (0.0f64, 1e-300f64);
        let mut val = 0.0;
        for k in (1..=start).rev() {
            let lo = (2 * k + 1) as f64 / t * mid - hi;
            hi = mid;
            mid = lo;
            if k - 1 == order {
                val = mid;
            }
            if mid.abs() > 1e200 {
                hi *= 1e-200;
                mid *= 1e-200;
                val *= 1e-200;
            }
        }
        val * j0 / mid
    };
    let steps = ((x / 1e-2).ceil() as usize).max(100);
    let h = x / steps as f64;
    let mut count = 0;
    let mut prev = j(n, 0.5 * h);
    for i in 1..=steps {
        let t = (i as f64 * h).min(x);
        let v = j(n, t);
        if v == 0.0 || v.signum() != prev.signum() {
            count += 1;
        }
        prev = v;
    }
    count
}
