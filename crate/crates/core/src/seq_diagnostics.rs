//! Tail-mass diagnostics for sequences of functions and finite proxies for
//! the spreading property.
//!
//! A sequence spreads if for some `a > 0` the tail `||chi_{|x|>R} f_n||` has
//! `limsup > a` for every `R`. On a finite sequence the limsup is replaced by
//! the maximum over the trailing half; verdicts are labelled as proxies.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};
use crate::greens::BoundReport;

pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Field = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// How a function is represented and integrated.
#[derive(Clone)]
pub enum Shape {
    /// `f(x) = p(|x|)` on `R^dim`, zero beyond `support`.
    Radial { dim: usize, p: Profile, support: f64 },
    /// `f(x) = p(|x - offset e_1|)` on `R^3`, `p` zero beyond `support`.
    Shifted { offset: f64, p: Profile, support: f64 },
    /// `f(x^a, R_a) = p(|x^a|) q(|R_a|)` on `R^3 x R^3` with `|x| = |x^a| + |R_a|`.
    ProductRadial { p: Profile, q: Profile, support: (f64, f64) },
    /// Arbitrary field on `R^dim`, integrated by importance sampling from a
    /// centred Gaussian of the given width.
    MonteCarlo { dim: usize, f: Field, width: f64, samples: usize, seed: u64 },
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Radial { dim, support, .. } => write!(f, "Radial(dim={dim}, support={support})"),
            Shape::Shifted { offset, support, .. } => write!(f, "Shifted(offset={offset}, support={support})"),
            Shape::ProductRadial { support, .. } => write!(f, "ProductRadial(support={support:?})"),
            Shape::MonteCarlo { dim, width, samples, .. } => write!(f, "MonteCarlo(dim={dim}, width={width}, samples={samples})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailMass {
    pub value: f64,
    /// Quadrature (or one-sigma sampling) error estimate.
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct SampledFunction {
    pub shape: Shape,
    /// Composite Simpson intervals per one-dimensional integral.
    pub nodes: usize,
    pub norm: f64,
}

pub const DEFAULT_NODES: usize = 800;

impl SampledFunction {
    pub fn new(shape: Shape) -> Result<Self> {
        Self::with_nodes(shape, DEFAULT_NODES)
    }

    pub fn with_nodes(shape: Shape, nodes: usize) -> Result<Self> {
        let ok = match &shape {
            Shape::Radial { dim, support, .. } => *dim > 0 && *support > 0.0,
            Shape::Shifted { offset, support, .. } => *offset >= 0.0 && *support > 0.0,
            Shape::ProductRadial { support, .. } => support.0 > 0.0 && support.1 > 0.0,
            Shape::MonteCarlo { dim, width, samples, .. } => *dim > 0 && *width > 0.0 && *samples > 1,
        };
        if !ok || nodes < 4 {
            return Err(invalid("function description has non-positive dimension, support or resolution"));
        }
        let mut f = Self { shape, nodes: nodes + nodes % 2, norm: 0.0 };
        let n = f.tail_mass(0.0)?;
        if !n.value.is_finite() {
            return Err(Error::Resolution("norm is not finite".into()));
        }
        f.norm = n.value;
        Ok(f)
    }

    pub fn radial(dim: usize, support: f64, p: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        Self::new(Shape::Radial { dim, p: Arc::new(p), support })
    }

    pub fn shifted(offset: f64, support: f64, p: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        Self::new(Shape::Shifted { offset, p: Arc::new(p), support })
    }

    pub fn dim(&self) -> usize {
        match &self.shape {
            Shape::Radial { dim, .. } | Shape::MonteCarlo { dim, .. } => *dim,
            Shape::Shifted { .. } => 3,
            Shape::ProductRadial { .. } => 6,
        }
    }

    /// Pointwise value; `x` must have length `dim()`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let norm = |v: &[f64]| v.iter().map(|c| c * c).sum::<f64>().sqrt();
        match &self.shape {
            Shape::Radial { p, support, .. } => cut(p, norm(x), *support),
            Shape::Shifted { offset, p, support } => {
                let d = ((x[0] - offset).powi(2) + x[1] * x[1] + x[2] * x[2]).sqrt();
                cut(p, d, *support)
            }
            Shape::ProductRadial { p, q, support } => cut(p, norm(&x[..3]), support.0) * cut(q, norm(&x[3..]), support.1),
            Shape::MonteCarlo { f, .. } => f(x),
        }
    }

    /// `||chi_{|x| > R} f||`.
    pub fn tail_mass(&self, r: f64) -> Result<TailMass> {
        if !(r >= 0.0) {
            return Err(invalid("tail radius must be non-negative"));
        }
        let n = self.nodes;
        let (sq, err) = match &self.shape {
            Shape::Radial { dim, p, support } => {
                if r >= *support {
                    (0.0, 0.0)
                } else {
                    let w = sphere_area(*dim);
                    let d = *dim as i32;
                    simpson(|s| w * p(s).powi(2) * s.powi(d - 1), r, *support, n)
                }
            }
            Shape::Shifted { offset, p, support } => {
                let dd = *offset;
                // measure of cos(angle) in [-1, 1] with |c + rho u| > R
                let frac = move |rho: f64| -> f64 {
                    if dd == 0.0 || rho == 0.0 {
                        return if (dd + rho) > r || (r == 0.0 && rho > 0.0) { 2.0 } else { 0.0 };
                    }
                    let u0 = (r * r - dd * dd - rho * rho) / (2.0 * dd * rho);
                    (1.0 - u0).clamp(0.0, 2.0)
                };
                simpson(|s| 2.0 * PI * p(s).powi(2) * s * s * frac(s), 0.0, *support, n)
            }
            Shape::ProductRadial { p, q, support } => {
                let (s1, s2) = *support;
                let inner = |t: f64| -> (f64, f64) {
                    if t >= s2 {
                        (0.0, 0.0)
                    } else {
                        simpson(|s| 4.0 * PI * q(s).powi(2) * s * s, t, s2, n)
                    }
                };
                let mut err_acc = 0.0;
                // t = 0 repeats for every s >= R
                let mut cache = (f64::NAN, (0.0, 0.0));
                let (v, e) = simpson(
                    |s| {
                        let t = (r - s).max(0.0);
                        let qv = if t == cache.0 {
                            cache.1
                        } else {
                            let qv = inner(t);
                            cache = (t, qv);
                            qv
                        };
                        if qv.1 > err_acc {
                            err_acc = qv.1;
                        }
                        4.0 * PI * p(s).powi(2) * s * s * qv.0
                    },
                    0.0,
                    s1,
                    n,
                );
                let pn = simpson(|s| 4.0 * PI * p(s).powi(2) * s * s, 0.0, s1, n).0;
                (v, e + pn * err_acc)
            }
            Shape::MonteCarlo { dim, f, width, samples, seed } => {
                let d = *dim;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let ln_q0 = -(d as f64) * (width * (2.0 * PI).sqrt()).ln();
                let (mut s1, mut s2) = (0.0, 0.0);
                let mut x = vec![0.0; d];
                for _ in 0..*samples {
                    for c in x.iter_mut() {
                        let z: f64 = rng.sample(StandardNormal);
                        *c = width * z;
                    }
                    let rr: f64 = x.iter().map(|c| c * c).sum();
                    let y = if rr.sqrt() > r {
                        let ln_q = ln_q0 - rr / (2.0 * width * width);
                        f(&x).powi(2) * (-ln_q).exp()
                    } else {
                        0.0
                    };
                    s1 += y;
                    s2 += y * y;
                }
                let m = *samples as f64;
                let mean = s1 / m;
                let var = (s2 / m - mean * mean).max(0.0);
                (mean, (var / m).sqrt())
            }
        };
        let sq = sq.max(0.0);
        let value = sq.sqrt();
        let error = if value > 0.0 { (err / (2.0 * value)).min(err.sqrt()) } else { err.sqrt() };
        Ok(TailMass { value, error })
    }
}

fn cut(p: &Profile, r: f64, support: f64) -> f64 {
    if r > support {
        0.0
    } else {
        p(r)
    }
}

fn sphere_area(dim: usize) -> f64 {
    let h = 0.5 * dim as f64;
    2.0 * (h * PI.ln() - ln_gamma(h)).exp()
}

/// Composite Simpson on `n` (even) intervals, with the difference to the
/// `n/2` rule as error estimate.
fn simpson(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    let h = (hi - lo) / n as f64;
    let vals: Vec<f64> = (0..=n).map(|i| f(lo + i as f64 * h)).collect();
    let fine = h / 3.0 * (vals[0] + vals[n] + (1..n).map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * vals[i]).sum::<f64>());
    let m = n / 2;
    let coarse = if m >= 2 && m.is_multiple_of(2) {
        2.0 * h / 3.0 * (vals[0] + vals[n] + (1..m).map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * vals[2 * i]).sum::<f64>())
    } else {
        fine
    };
    (fine, (fine - coarse).abs() / 15.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpreadVerdict {
    SpreadProxy,
    NonSpreadProxy,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpreadProbe {
    pub r_grid: Vec<f64>,
    /// `tail[n][j] = ||chi_{|x| > r_grid[j]} f_n||`.
    pub tail: Vec<Vec<f64>>,
    pub a: f64,
    pub verdict: SpreadVerdict,
}

impl SpreadProbe {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,R,mass\n");
        for (n, row) in self.tail.iter().enumerate() {
            for (r, m) in self.r_grid.iter().zip(row) {
                out.push_str(&format!("{n},{r},{m:.12e}\n"));
            }
        }
        out
    }
}

/// Spread proxy: for every `R` in the grid, some member of the trailing half
/// of the sequence keeps tail mass above `a`.
pub fn probe_sequence(seq: &[SampledFunction], r_grid: &[f64], a: f64) -> Result<SpreadProbe> {
    if seq.len() < 8 {
        return Err(invalid("need at least 8 sequence members"));
    }
    if r_grid.is_empty() || !(a > 0.0) {
        return Err(invalid("need a nonempty radius grid and a > 0"));
    }
    let tail = seq
        .par_iter()
        .map(|f| r_grid.iter().map(|&r| f.tail_mass(r).map(|t| t.value)).collect::<Result<Vec<f64>>>())
        .collect::<Result<Vec<_>>>()?;
    let half = seq.len() / 2;
    let spread = (0..r_grid.len()).all(|j| tail[half..].iter().map(|row| row[j]).fold(0.0, f64::max) > a);
    let verdict = if spread { SpreadVerdict::SpreadProxy } else { SpreadVerdict::NonSpreadProxy };
    Ok(SpreadProbe { r_grid: r_grid.to_vec(), tail, a, verdict })
}

fn dominates(lo: &SampledFunction, hi: &SampledFunction, points: &[Vec<f64>]) -> bool {
    points.iter().all(|x| lo.eval(x).abs() <= hi.eval(x).abs())
}

/// `|f_n| <= |f_{n+1}|` at every sample point and `||f_n|| <= norm_bound`.
pub fn check_monotone_domination(seq: &[SampledFunction], points: &[Vec<f64>], norm_bound: f64) -> bool {
    seq.iter().all(|f| f.norm.is_finite() && f.norm <= norm_bound) && seq.windows(2).all(|w| dominates(&w[0], &w[1], points))
}

/// Longest index chain `i_1 < i_2 < ...` along which each member dominates
/// the previous one at the sample points; ties go to the earliest indices.
pub fn dominated_chain(seq: &[SampledFunction], points: &[Vec<f64>]) -> Vec<usize> {
    let n = seq.len();
    if n == 0 {
        return Vec::new();
    }
    let mut best = vec![1usize; n];
    let mut prev = vec![usize::MAX; n];
    for j in 0..n {
        for i in 0..j {
            if best[i] + 1 > best[j] && dominates(&seq[i], &seq[j], points) {
                best[j] = best[i] + 1;
                prev[j] = i;
            }
        }
    }
    let mut end = 0;
    for j in 1..n {
        if best[j] > best[end] {
            end = j;
        }
    }
    let mut chain = vec![end];
    while prev[*chain.last().unwrap()] != usize::MAX {
        chain.push(prev[*chain.last().unwrap()]);
    }
    chain.reverse();
    chain
}

/// Growth weight `w(|x^a|)` with `sup_n ||w A_n|| < K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Weight {
    Exponential,
    Polynomial,
}

impl Weight {
    pub fn value(self, alpha: f64, r: f64) -> f64 {
        match self {
            Weight::Exponential => (alpha * r).exp(),
            Weight::Polynomial => (1.0 + r).powf(alpha),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductSplitReport {
    /// `chi_{|x| >= 2R} <= chi_{|x^a| >= R} + chi_{|R_a| >= R}` on random points.
    pub indicator: BoundReport,
    /// `||chi_{|x| >= 2R} A_n f_n|| <= K sup_{|x^a|>=R} 1/w sup||f|| + K ||chi_{|R_a| >= R} f_n||`.
    pub split: BoundReport,
    /// Spread proxy of the composed family `A_n f_n`.
    pub composed: SpreadProbe,
}

/// Takes `A_n` as multiplication by `w(|x^a|)^{-2}`, so that `||w A_n|| = 1 <= K`,
/// and checks the tail split of the composed family for each `R` in `r_grid`.
pub fn check_product_split(
    seq: &[SampledFunction],
    weight: Weight,
    alpha: f64,
    k_bound: f64,
    r_grid: &[f64],
    a: f64,
    indicator_samples: usize,
    seed: u64,
) -> Result<ProductSplitReport> {
    if !(alpha > 0.0) || !(k_bound >= 1.0) {
        return Err(invalid("need alpha > 0 and K >= 1"));
    }
    let mut indicator = BoundReport::new("indicator_split", &[("samples", indicator_samples as f64)], 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..indicator_samples {
        let xa: f64 = rng.gen_range(0.0..20.0);
        let ra: f64 = rng.gen_range(0.0..20.0);
        let r: f64 = rng.gen_range(0.0..20.0);
        let lhs = f64::from(u8::from(xa + ra >= 2.0 * r));
        let rhs = f64::from(u8::from(xa >= r)) + f64::from(u8::from(ra >= r));
        indicator.record(lhs - rhs, &[xa, ra, r]);
    }
    let indicator = indicator.finish();

    let mut composed = Vec::with_capacity(seq.len());
    let mut fns = Vec::with_capacity(seq.len());
    for f in seq {
        let Shape::ProductRadial { p, q, support } = &f.shape else {
            return Err(invalid("product split needs product-radial functions"));
        };
        let pw = p.clone();
        let damped: Profile = Arc::new(move |s| pw(s) / weight.value(alpha, s).powi(2));
        composed.push(SampledFunction::with_nodes(Shape::ProductRadial { p: damped, q: q.clone(), support: *support }, f.nodes)?);
        fns.push((p.clone(), q.clone(), *support, f.nodes));
    }
    let sup_norm = seq.iter().map(|f| f.norm).fold(0.0, f64::max);
    let mut split = BoundReport::new("product_split", &[("alpha", alpha), ("K", k_bound)], 0.0);
    let rows = composed
        .par_iter()
        .zip(fns.par_iter())
        .map(|(g, (p, q, support, nodes))| {
            let p_norm = simpson(|s| 4.0 * PI * p(s).powi(2) * s * s, 0.0, support.0, *nodes).0.sqrt();
            r_grid
                .iter()
                .map(|&r| {
                    let lhs = g.tail_mass(2.0 * r)?;
                    let (qt, qe) =
                        if r >= support.1 { (0.0, 0.0) } else { simpson(|s| 4.0 * PI * q(s).powi(2) * s * s, r, support.1, *nodes) };
                    let outer = p_norm * qt.max(0.0).sqrt();
                    let rhs = k_bound * sup_norm / weight.value(alpha, r) + k_bound * outer;
                    Ok((lhs.value - lhs.error - rhs - qe.sqrt() * p_norm, r))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    for (n, row) in rows.iter().enumerate() {
        for &(v, r) in row {
            split.record(v, &[n as f64, r]);
        }
    }
    let split = split.finish();
    let composed_grid: Vec<f64> = r_grid.iter().map(|r| 2.0 * r).collect();
    let composed = probe_sequence(&composed, &composed_grid, a)?;
    Ok(ProductSplitReport { indicator, split, composed })
}

/// Seeded generators of synthetic sequences for the property suites.
pub mod families {
    use super::*;

    fn shell(c: f64, w: f64) -> impl Fn(f64) -> f64 + Send + Sync + Copy {
        move |r: f64| (-((r - c) / w).powi(2)).exp()
    }

    /// Radial sums of Gaussian shells whose amplitudes grow monotonically to
    /// a limit of unit norm: `|f_n| <= |f_{n+1}|` everywhere.
    pub fn monotone_dominated(seed: u64, len: usize) -> Result<Vec<SampledFunction>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.gen_range(1..=4);
        let shells: Vec<(f64, f64, f64, f64)> = (0..m)
            .map(|_| (rng.gen_range(0.0..6.0), rng.gen_range(0.3..2.0), rng.gen_range(0.1..1.0), rng.gen_range(0.0..0.9)))
            .collect();
        let support = shells.iter().map(|s| s.0 + 8.0 * s.1).fold(0.0, f64::max);
        let profile = |n: usize, scale: f64, shells: Vec<(f64, f64, f64, f64)>| {
            move |r: f64| scale * shells.iter().map(|&(c, w, a, q)| a * (1.0 - q.powi(n as i32 + 1)) * shell(c, w)(r)).sum::<f64>()
        };
        let limit = SampledFunction::radial(3, support, {
            let sh = shells.clone();
            move |r| sh.iter().map(|&(c, w, a, _)| a * shell(c, w)(r)).sum::<f64>()
        })?;
        let scale = 1.0 / limit.norm;
        (0..len).map(|n| SampledFunction::radial(3, support, profile(n, scale, shells.clone()))).collect()
    }

    /// A bump of random radius translated outward by a random step per member.
    pub fn translated_bumps(seed: u64, len: usize) -> Result<Vec<SampledFunction>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let radius: f64 = rng.gen_range(0.5..2.0);
        let step: f64 = rng.gen_range(1.0..3.0);
        let bump = move |s: f64| {
            let t = s / radius;
            if t < 1.0 {
                (-1.0 / (1.0 - t * t)).exp()
            } else {
                0.0
            }
        };
        (0..len).map(|n| SampledFunction::shifted(step * (n + 1) as f64, radius, bump)).collect()
    }

    /// Normalized Gaussians of width `n + 1`.
    pub fn widening_gaussians(len: usize) -> Result<Vec<SampledFunction>> {
        (0..len)
            .map(|n| {
                let w = (n + 1) as f64;
                let c = (PI * w * w).powf(-0.75);
                SampledFunction::radial(3, 12.0 * w, move |r| c * (-0.5 * (r / w).powi(2)).exp())
            })
            .collect()
    }

    /// `(1 - 1/(n+2)) g` for a unit Gaussian `g`.
    pub fn scaled_gaussian(len: usize) -> Result<Vec<SampledFunction>> {
        let c = PI.powf(-0.75);
        (0..len)
            .map(|n| {
                let k = 1.0 - 1.0 / (n + 2) as f64;
                SampledFunction::radial(3, 12.0, move |r| k * c * (-0.5 * r * r).exp())
            })
            .collect()
    }

    /// Two monotone families centred at different radii, interleaved.
    pub fn interleaved(len: usize) -> Result<Vec<SampledFunction>> {
        (0..len)
            .map(|n| {
                let k = 1.0 - 1.0 / (n / 2 + 2) as f64;
                let c = if n % 2 == 0 { 1.0 } else { 5.0 };
                SampledFunction::radial(3, 15.0, move |r| k * (-(r - c).powi(2)).exp())
            })
            .collect()
    }

    /// `p(|x^a|) q_n(|R_a|)` with a fixed Gaussian `p` and a monotone,
    /// non-spreading radial family `q_n`.
    pub fn product(seed: u64, len: usize) -> Result<Vec<SampledFunction>> {
        let inner = monotone_dominated(seed, len)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let wp: f64 = rng.gen_range(0.5..2.0);
        let p: Profile = Arc::new(move |r: f64| (-0.5 * (r / wp).powi(2)).exp());
        inner
            .into_iter()
            .map(|f| {
                let Shape::Radial { p: q, support, .. } = f.shape else { unreachable!() };
                SampledFunction::with_nodes(Shape::ProductRadial { p: p.clone(), q, support: (12.0 * wp, support) }, 200)
            })
            .collect()
    }

    /// Points along the first axis covering `[0, r_max]`.
    pub fn axis_points(dim: usize, r_max: f64, count: usize) -> Vec<Vec<f64>> {
        (0..count)
            .map(|i| {
                let mut x = vec![0.0; dim];
                x[0] = r_max * i as f64 / (count - 1) as f64;
                x
            })
            .collect()
    }
}
