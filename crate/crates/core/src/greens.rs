//! Resolvent of `-Laplacian + A eta_{-1}(r) + k^2` in three dimensions.
//!
//! Each partial wave is solved in Riccati form. With `t = ln r` and
//! `z = r u'/u` the radial equation `-u'' + Q u = 0`,
//! `Q = l(l+1)/r^2 + V + k^2`, becomes
//!
//! ```text
//! dz/dt = z + l(l+1) + r^2 (V + k^2) - z^2,   d(ln u)/dt = z
//! ```
//!
//! The regular solution is integrated outward and the decaying one inward,
//! each in its stable direction. The channel kernel is then
//! `g(r<, r>) = exp(L_dec(r>) - L_dec(r<)) r< / (z_reg(r<) - z_dec(r<))`,
//! which never forms the exponentially large or small amplitudes.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::kinematics::eta_radial;

/// Largest tolerated drift of `ln W` along the interior of the grid.
pub const WRONSKIAN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_max: f64,
    /// Node spacing in `ln r`.
    pub h: f64,
}

impl GridSpec {
    pub const DEFAULT_R_MIN: f64 = 1e-4;
    pub const DEFAULT_H: f64 = 0.01;

    /// Resolves both the resolvent range `1/k` and a cutoff radius `n`.
    pub fn for_params(k: f64, n: f64) -> Self {
        Self { r_min: Self::DEFAULT_R_MIN, r_max: (40.0 / k).max(8.0 * n), h: Self::DEFAULT_H }
    }

    /// Extends the grid so that `r` stays clear of the outer seeding region.
    pub fn covering(mut self, r: f64) -> Self {
        self.r_max = self.r_max.max(2.0 * r);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.r_min > 0.0 && self.r_min < 1.0 && self.r_max > 1.0 && self.h > 0.0 && self.h < 0.5) {
            return Err(invalid("grid needs 0 < r_min < 1 < r_max and 0 < h < 0.5"));
        }
        Ok(())
    }

    fn layout(&self) -> Layout {
        let t0 = self.r_min.ln();
        let t1 = self.r_max.ln();
        let n_in = (-t0 / self.h).ceil() as usize;
        let n_out = (t1 / self.h).ceil() as usize;
        Layout { t0, h_in: -t0 / n_in as f64, n_in, h_out: t1 / n_out as f64, n_out }
    }
}

/// Uniform nodes in `t` on each side of `r = 1`, which is always a node.
#[derive(Debug, Clone, Copy)]
struct Layout {
    t0: f64,
    h_in: f64,
    n_in: usize,
    h_out: f64,
    n_out: usize,
}

impl Layout {
    fn len(&self) -> usize {
        self.n_in + self.n_out + 1
    }

    fn t(&self, i: usize) -> f64 {
        if i <= self.n_in {
            self.t0 + i as f64 * self.h_in
        } else {
            (i - self.n_in) as f64 * self.h_out
        }
    }

    /// Interval index containing `t` and its width.
    fn locate(&self, t: f64) -> (usize, f64) {
        if t < 0.0 {
            let i = ((t - self.t0) / self.h_in).floor().clamp(0.0, (self.n_in - 1) as f64) as usize;
            (i, self.h_in)
        } else {
            let j = (t / self.h_out).floor().clamp(0.0, (self.n_out - 1) as f64) as usize;
            (self.n_in + j, self.h_out)
        }
    }
}

/// One partial wave of the resolvent.
#[derive(Debug, Clone)]
pub struct RadialChannel {
    pub a: f64,
    pub k: f64,
    pub l: usize,
    pub grid: GridSpec,
    layout: Layout,
    z_reg: Vec<f64>,
    dz_reg: Vec<f64>,
    z_dec: Vec<f64>,
    dz_dec: Vec<f64>,
    l_reg: Vec<f64>,
    l_dec: Vec<f64>,
    /// Largest deviation of `ln W` from its value at `r = 1` over `r <= r_max/2`.
    pub wronskian_drift: f64,
}

struct Riccati {
    a: f64,
    k2: f64,
    ll: f64,
}

impl Riccati {
    fn potential(&self, r: f64) -> f64 {
        if r <= 1.0 {
            self.a
        } else {
            self.a / r
        }
    }

    fn source(&self, t: f64) -> f64 {
        let r = t.exp();
        self.ll + r * r * (self.potential(r) + self.k2)
    }

    fn rhs(&self, t: f64, z: f64) -> f64 {
        z + self.source(t) - z * z
    }

    /// Advances `(z, ln u)` from `t` by `dt` (either sign) with RK4 substeps.
    fn step(&self, t: f64, z: f64, lu: f64, dt: f64) -> (f64, f64) {
        let m = (dt.abs() * (1.0 + 2.0 * z.abs()) * 5.0).ceil().max(1.0) as usize;
        let hs = dt / m as f64;
        let (mut t, mut z, mut lu) = (t, z, lu);
        for _ in 0..m {
            let k1 = self.rhs(t, z);
            let k2 = self.rhs(t + 0.5 * hs, z + 0.5 * hs * k1);
            let k3 = self.rhs(t + 0.5 * hs, z + 0.5 * hs * k2);
            let k4 = self.rhs(t + hs, z + hs * k3);
            let zn = z + hs / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            // d(ln u)/dt = z integrated with the same stages
            lu += hs / 6.0 * (z + 2.0 * (z + 0.5 * hs * k1) + 2.0 * (z + 0.5 * hs * k2) + (z + hs * k3));
            z = zn;
            t += hs;
        }
        (z, lu)
    }
}

pub fn solve_channel(a: f64, k: f64, l: usize, grid: &GridSpec) -> Result<RadialChannel> {
    if !(a >= 0.0 && a.is_finite()) {
        return Err(invalid("repulsion strength A must be non-negative"));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(invalid("momentum k must be positive"));
    }
    grid.validate()?;
    let layout = grid.layout();
    let n = layout.len();
    let eq = Riccati { a, k2: k * k, ll: (l * (l + 1)) as f64 };

    let mut z_reg = vec![0.0; n];
    let mut l_reg = vec![0.0; n];
    let r0 = grid.r_min;
    z_reg[0] = (l + 1) as f64 + r0 * r0 * (a + k * k) / (2 * l + 3) as f64;
    l_reg[0] = (l + 1) as f64 * r0.ln();
    for i in 0..n - 1 {
        let (t, tn) = (layout.t(i), layout.t(i + 1));
        let (z, lu) = eq.step(t, z_reg[i], l_reg[i], tn - t);
        z_reg[i + 1] = z;
        l_reg[i + 1] = lu;
    }

    let mut z_dec = vec![0.0; n];
    let mut l_dec = vec![0.0; n];
    // adiabatic root of z^2 - z - P = 0; the seeding error decays inward
    let p_end = eq.source(layout.t(n - 1));
    z_dec[n - 1] = 0.5 * (1.0 - (1.0 + 4.0 * p_end).sqrt());
    for i in (1..n).rev() {
        let (t, tp) = (layout.t(i), layout.t(i - 1));
        let (z, lu) = eq.step(t, z_dec[i], l_dec[i], tp - t);
        z_dec[i - 1] = z;
        l_dec[i - 1] = lu;
    }

    let dz_reg: Vec<f64> = (0..n).map(|i| eq.rhs(layout.t(i), z_reg[i])).collect();
    let dz_dec: Vec<f64> = (0..n).map(|i| eq.rhs(layout.t(i), z_dec[i])).collect();

    let ln_w = |i: usize| l_reg[i] + l_dec[i] + (z_reg[i] - z_dec[i]).ln() - layout.t(i);
    let w_ref = ln_w(layout.n_in);
    let t_cut = (0.5 * grid.r_max).ln();
    let mut drift = 0.0f64;
    for i in 0..n {
        if layout.t(i) > t_cut {
            break;
        }
        let d = (ln_w(i) - w_ref).abs();
        if !d.is_finite() {
            return Err(Error::Resolution(format!("channel l={l}: non-finite Wronskian at node {i}")));
        }
        drift = drift.max(d);
    }
    if drift > WRONSKIAN_TOL {
        return Err(Error::Resolution(format!("channel l={l}: Wronskian drift {drift:e} exceeds {WRONSKIAN_TOL:e}; refine the grid")));
    }
    Ok(RadialChannel { a, k, l, grid: *grid, layout, z_reg, dz_reg, z_dec, dz_dec, l_reg, l_dec, wronskian_drift: drift })
}

fn hermite(y0: f64, d0: f64, y1: f64, d1: f64, h: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * h * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * h * d1
}

impl RadialChannel {
    fn in_range(&self, r: f64) -> bool {
        r >= self.grid.r_min && r <= self.grid.r_max
    }

    /// `(z_reg, z_dec, L_dec)` at `r` by cubic Hermite interpolation in `ln r`.
    fn sample(&self, r: f64) -> (f64, f64, f64) {
        let t = r.ln();
        let (i, h) = self.layout.locate(t);
        let s = ((t - self.layout.t(i)) / h).clamp(0.0, 1.0);
        let zr = hermite(self.z_reg[i], self.dz_reg[i], self.z_reg[i + 1], self.dz_reg[i + 1], h, s);
        let zd = hermite(self.z_dec[i], self.dz_dec[i], self.z_dec[i + 1], self.dz_dec[i + 1], h, s);
        let ld = hermite(self.l_dec[i], self.z_dec[i], self.l_dec[i + 1], self.z_dec[i + 1], h, s);
        (zr, zd, ld)
    }

    /// Reduced channel kernel `g_l(r, r')`, symmetric in its arguments.
    pub fn g(&self, r: f64, rp: f64) -> Result<f64> {
        if !self.in_range(r) || !self.in_range(rp) {
            return Err(Error::Resolution(format!(
                "radius outside grid [{}, {}]",
                self.grid.r_min, self.grid.r_max
            )));
        }
        let (lo, hi) = if r <= rp { (r, rp) } else { (rp, r) };
        let (zr, zd, ld_lo) = self.sample(lo);
        let ld_hi = self.sample(hi).2;
        Ok((ld_hi - ld_lo).exp() * lo / (zr - zd))
    }
}

/// Partial-wave representation of the resolvent for fixed `(A, k)`.
#[derive(Debug, Clone)]
pub struct Resolvent {
    pub a: f64,
    pub k: f64,
    pub grid: GridSpec,
    pub channels: Vec<RadialChannel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelValue {
    pub value: f64,
    /// Rigorous bound on the omitted partial waves.
    pub tail: f64,
}

impl Resolvent {
    pub fn new(a: f64, k: f64, l_max: usize, grid: GridSpec) -> Result<Self> {
        let channels = (0..=l_max).into_par_iter().map(|l| solve_channel(a, k, l, &grid)).collect::<Result<Vec<_>>>()?;
        Ok(Self { a, k, grid, channels })
    }

    pub fn l_max(&self) -> usize {
        self.channels.len() - 1
    }

    /// `G(r, r')` for radii `r`, `rp` and angle cosine `cos_theta`.
    ///
    /// Every channel is dominated by the free zero-energy channel
    /// `r<^(l+1) r>^(-l) / (2l+1)`, so the omitted waves contribute at most
    /// `rho^(L+1) / ((1 - rho) 4 pi r>)` with `rho = r< / r>`. Fails with
    /// [`Error::LMaxInsufficient`] when that exceeds `max_rel_tail` times the value.
    pub fn kernel(&self, r: f64, rp: f64, cos_theta: f64, max_rel_tail: f64) -> Result<KernelValue> {
        if !(-1.0..=1.0).contains(&cos_theta) {
            return Err(invalid("cos_theta must lie in [-1, 1]"));
        }
        let (lo, hi) = if r <= rp { (r, rp) } else { (rp, r) };
        let rho = lo / hi;
        if rho >= 1.0 && cos_theta >= 1.0 {
            return Err(invalid("kernel is singular at r = r'"));
        }
        let mut value = 0.0;
        let (mut p_prev, mut p) = (0.0, 1.0);
        for (l, ch) in self.channels.iter().enumerate() {
            value += (2 * l + 1) as f64 * ch.g(r, rp)? * p;
            let next = ((2 * l + 1) as f64 * cos_theta * p - l as f64 * p_prev) / (l + 1) as f64;
            p_prev = p;
            p = next;
        }
        value /= 4.0 * PI * r * rp;
        let tail = if rho < 1.0 { rho.powi(self.l_max() as i32 + 1) / ((1.0 - rho) * 4.0 * PI * hi) } else { f64::INFINITY };
        if tail > max_rel_tail * value.abs() {
            return Err(Error::LMaxInsufficient { l_max: self.l_max(), tail });
        }
        Ok(KernelValue { value, tail })
    }

    /// `||G chi_{|r| <= n}||`, maximized over the computed channels.
    pub fn op_norm_chi(&self, n: f64) -> Result<ChannelNorms> {
        let inside = move |r: f64| if r <= n * (1.0 + 1e-12) { 1.0 } else { 0.0 };
        self.channel_norms(inside, |_| 1.0)
    }

    /// `||chi_m G chi_m||`.
    pub fn op_norm_chi_chi(&self, m: f64) -> Result<ChannelNorms> {
        let inside = move |r: f64| if r <= m * (1.0 + 1e-12) { 1.0 } else { 0.0 };
        self.channel_norms(inside, inside)
    }

    /// `||G eta_{-alpha}||`.
    pub fn op_norm_eta(&self, alpha: f64) -> Result<ChannelNorms> {
        self.channel_norms(move |r| eta_radial(-alpha, r), |_| 1.0)
    }

    /// `||left G right||` per channel, for radial multipliers `left`, `right`.
    /// The channels decouple because the multipliers are radial, and `g_l`
    /// is pointwise decreasing in `l`, so the norms must be non-increasing.
    fn channel_norms(&self, right: impl Fn(f64) -> f64 + Sync, left: impl Fn(f64) -> f64 + Sync) -> Result<ChannelNorms> {
        let per_l = self
            .channels
            .par_iter()
            .map(|ch| {
                let op = ChannelOperator::new(ch);
                let wr: Vec<f64> = op.r.iter().map(|&r| right(r)).collect();
                let wl: Vec<f64> = op.r.iter().map(|&r| left(r)).collect();
                op.norm(&wl, &wr)
            })
            .collect::<Result<Vec<f64>>>()?;
        for w in per_l.windows(2) {
            if w[1] > w[0] * (1.0 + 1e-6) {
                return Err(Error::LMaxInsufficient { l_max: self.l_max(), tail: w[1] - w[0] });
            }
        }
        let norm = per_l.iter().fold(0.0f64, |a, &b| a.max(b));
        Ok(ChannelNorms { norm, per_l })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelNorms {
    pub norm: f64,
    pub per_l: Vec<f64>,
}

/// `int_0^1 e^(-lam u) du` and `int_0^1 e^(-lam u) u du`.
fn exp_moments(lam: f64) -> (f64, f64) {
    if lam < 1e-3 {
        let l2 = lam * lam;
        (1.0 - lam / 2.0 + l2 / 6.0 - l2 * lam / 24.0, 0.5 - lam / 3.0 + l2 / 8.0 - l2 * lam / 30.0)
    } else {
        let e = (-lam).exp();
        ((1.0 - e) / lam, (1.0 - (1.0 + lam) * e) / (lam * lam))
    }
}

/// The channel integral operator on piecewise-linear functions over the
/// grid nodes up to `r_max/2`.
///
/// Uses `g = u_reg(r<) u_dec(r>) / W`: one forward and one backward running
/// sum, each interval integrated exactly for an exponential amplitude ratio,
/// so the cost is linear in the number of nodes and the kernel width `1/k`
/// need not be resolved by the grid.
struct ChannelOperator {
    r: Vec<f64>,
    w: Vec<f64>,
    diag: Vec<f64>,
    reg_decay: Vec<f64>,
    reg_left: Vec<f64>,
    reg_right: Vec<f64>,
    dec_decay: Vec<f64>,
    dec_left: Vec<f64>,
    dec_right: Vec<f64>,
}

impl ChannelOperator {
    fn new(ch: &RadialChannel) -> Self {
        let t_cut = (0.5 * ch.grid.r_max).ln();
        let m = (0..ch.layout.len()).take_while(|&i| ch.layout.t(i) <= t_cut).count();
        let r: Vec<f64> = (0..m).map(|i| ch.layout.t(i).exp()).collect();
        let mut w = vec![0.0; m];
        let mut reg = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);
        let mut dec = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);
        for i in 0..m - 1 {
            let d = r[i + 1] - r[i];
            w[i] += 0.5 * d;
            w[i + 1] += 0.5 * d;
            let (p0, p1) = exp_moments(ch.l_reg[i + 1] - ch.l_reg[i]);
            reg.0[i] = (ch.l_reg[i] - ch.l_reg[i + 1]).exp();
            reg.1[i] = d * p1;
            reg.2[i] = d * (p0 - p1);
            let (q0, q1) = exp_moments(ch.l_dec[i] - ch.l_dec[i + 1]);
            dec.0[i] = (ch.l_dec[i + 1] - ch.l_dec[i]).exp();
            dec.1[i] = d * (q0 - q1);
            dec.2[i] = d * q1;
        }
        let diag = (0..m).map(|i| r[i] / (ch.z_reg[i] - ch.z_dec[i])).collect();
        Self { r, w, diag, reg_decay: reg.0, reg_left: reg.1, reg_right: reg.2, dec_decay: dec.0, dec_left: dec.1, dec_right: dec.2 }
    }

    fn apply(&self, f: &[f64]) -> Vec<f64> {
        let m = self.r.len();
        let mut fwd = vec![0.0; m];
        for i in 0..m - 1 {
            fwd[i + 1] = self.reg_decay[i] * fwd[i] + self.reg_left[i] * f[i] + self.reg_right[i] * f[i + 1];
        }
        let mut back = vec![0.0; m];
        for i in (0..m - 1).rev() {
            back[i] = self.dec_decay[i] * back[i + 1] + self.dec_left[i] * f[i] + self.dec_right[i] * f[i + 1];
        }
        (0..m).map(|i| self.diag[i] * (fwd[i] + back[i])).collect()
    }

    fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).zip(&self.w).map(|((x, y), w)| x * y * w).sum()
    }

    /// `||left G right||` by power iteration on `right G left^2 G right`.
    fn norm(&self, left: &[f64], right: &[f64]) -> Result<f64> {
        let mul = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x * y).collect() };
        let mut v: Vec<f64> = right.iter().map(|&x| if x != 0.0 { 1.0 } else { 0.0 }).collect();
        let mut est = 0.0;
        for _ in 0..20_000 {
            let u = mul(left, &self.apply(&mul(right, &v)));
            let vv = self.dot(&v, &v);
            let next = self.dot(&u, &u) / vv;
            let t = mul(right, &self.apply(&mul(left, &u)));
            let tn = self.dot(&t, &t).sqrt();
            if !(tn > 0.0) {
                return Ok(0.0);
            }
            v = t.iter().map(|x| x / tn).collect();
            if (next - est).abs() <= 1e-12 * next {
                return Ok(next.sqrt());
            }
            est = next;
        }
        Err(Error::Resolution("power iteration did not converge".into()))
    }
}

/// Positive root of `a (a + 1) = 4 A`.
pub fn comparison_exponent(a_rep: f64) -> f64 {
    0.5 * (-1.0 + (1.0 + 16.0 * a_rep).sqrt())
}

/// Far-field kernel bound on `{|r| >= 4n, |r'| <= n}`.
pub fn far_field_bound(a_rep: f64, n: f64, r: f64) -> f64 {
    let a = comparison_exponent(a_rep);
    (0.5 * a * ((2.0 * n).sqrt() - (r - n).sqrt())).exp() / (4.0 * PI * 3.0 * n)
}

/// Checks `R0 = 2n >= 1 + |r'|` and `a/2 <= a R0^(3/2) (R0 + |r'|)^(-3/2)` at the
/// worst case `|r'| = n`.
pub fn comparison_parameters_admissible(n: f64) -> bool {
    let r0 = 2.0 * n;
    n >= 1.0 && r0 >= 1.0 + n && 0.5 <= (r0 / (r0 + n)).powf(1.5)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    /// Largest `(lhs - rhs)` seen, in the units documented per check.
    pub max_violation: f64,
    pub location: Vec<f64>,
    pub tolerance: f64,
    pub samples: usize,
    pub pass: bool,
}

impl BoundReport {
    pub(crate) fn new(name: &str, params: &[(&str, f64)], tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            max_violation: f64::NEG_INFINITY,
            location: Vec::new(),
            tolerance,
            samples: 0,
            pass: false,
        }
    }

    pub(crate) fn record(&mut self, violation: f64, location: &[f64]) {
        self.samples += 1;
        if violation > self.max_violation || self.location.is_empty() {
            self.max_violation = violation;
            self.location = location.to_vec();
        }
    }

    pub(crate) fn finish(mut self) -> Self {
        self.pass = self.max_violation <= self.tolerance && self.max_violation.is_finite();
        self
    }
}

fn random_unit(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let c: f64 = rng.gen_range(-1.0..=1.0);
    let phi: f64 = rng.gen_range(0.0..2.0 * PI);
    let s = (1.0 - c * c).max(0.0).sqrt();
    [s * phi.cos(), s * phi.sin(), c]
}

fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn dist3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    norm3(&[a[0] - b[0], a[1] - b[1], a[2] - b[2]])
}

/// Samples `|r| in [4n, 32n]`, `|r'| <= n` and checks the kernel plus its
/// truncation tail against [`far_field_bound`]. Violations are relative to
/// the bound value.
pub fn verify_far_field(a_rep: f64, k: f64, n: f64, samples: usize, seed: u64) -> Result<BoundReport> {
    if !(n >= 1.0) {
        return Err(invalid("far-field check needs n >= 1"));
    }
    let grid = GridSpec::for_params(k, n).covering(32.0 * n);
    let res = Resolvent::new(a_rep, k, 40, grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = BoundReport::new("far_field", &[("A", a_rep), ("k", k), ("n", n)], 1e-6);
    for _ in 0..samples {
        let r = 4.0 * n * (rng.gen_range(0.0..1.0f64) * 8f64.ln()).exp();
        let rp = (n * rng.gen_range(0.0..1.0f64).cbrt()).max(1e-3);
        let c: f64 = rng.gen_range(-1.0..=1.0);
        let kv = res.kernel(r, rp, c, f64::INFINITY)?;
        let bound = far_field_bound(a_rep, n, r);
        report.record((kv.value + kv.tail - bound) / bound, &[r, rp, c]);
    }
    Ok(report.finish())
}

/// `G(r, r') <= 1/(4 pi |r - r'|)` on pairs with `|r - r'| <= 2n`, reported on
/// the normalized value `4 pi |r - r'| G - 1`.
pub fn verify_near_diagonal(a_rep: f64, k: f64, n: f64, samples: usize, seed: u64) -> Result<BoundReport> {
    let grid = GridSpec::for_params(k, n).covering(4.0 * n);
    let res = Resolvent::new(a_rep, k, 120, grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = BoundReport::new("near_diagonal", &[("A", a_rep), ("k", k), ("n", n)], 1e-10);
    while report.samples < samples {
        let r = 2.0 * n * rng.gen_range(0.01..1.0f64);
        let rp = r * rng.gen_range(0.2..0.85f64);
        let c: f64 = rng.gen_range(-1.0..=1.0);
        let d = (r * r + rp * rp - 2.0 * r * rp * c).sqrt();
        if d > 2.0 * n {
            continue;
        }
        let kv = res.kernel(r, rp, c, 1e-6)?;
        report.record(4.0 * PI * d * (kv.value + kv.tail) - 1.0, &[r, rp, c]);
    }
    Ok(report.finish())
}

/// Minimum slack of `A eta_{-1}(r) >= a^2/(4r) + a/(4 r^(3/2))` on `|r| in [1, 1e3]`.
/// The report's violation is the negated slack relative to `A`.
pub fn verify_comparison_potential(a_rep: f64, samples: usize) -> Result<BoundReport> {
    if !(a_rep > 0.0) {
        return Err(invalid("A must be positive"));
    }
    let a = comparison_exponent(a_rep);
    let mut report = BoundReport::new("comparison_potential", &[("A", a_rep), ("a", a)], 1e-12);
    let count = samples.max(2);
    for i in 0..count {
        let r = (3.0 * 10f64.ln() * i as f64 / (count - 1) as f64).exp();
        let slack = a_rep * eta_radial(-1.0, r) - (a * a / (4.0 * r) + a / (4.0 * r.powf(1.5)));
        report.record(-slack / a_rep, &[r]);
    }
    Ok(report.finish())
}

/// `|chi(|s - s'| >= 1)/|s - s'| - eta_{-1}(s)| <= 2 eta_2(s') eta_{-2}(s)` on random
/// pairs spread over six decades. Violation is `lhs - rhs` relative to `rhs`.
pub fn verify_two_point_inequality(samples: usize, seed: u64) -> BoundReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = BoundReport::new("two_point", &[], 1e-12);
    let scale = |rng: &mut ChaCha8Rng| 10f64.powf(rng.gen_range(-3.0..3.0));
    for i in 0..samples {
        let u = random_unit(&mut rng);
        let rs = scale(&mut rng);
        let s = [u[0] * rs, u[1] * rs, u[2] * rs];
        let sp = if i % 3 == 0 {
            // near-coincident pairs straddle the |s - s'| = 1 cut
            let v = random_unit(&mut rng);
            let d = rng.gen_range(0.0..2.0);
            [s[0] + v[0] * d, s[1] + v[1] * d, s[2] + v[2] * d]
        } else {
            let v = random_unit(&mut rng);
            let rp = scale(&mut rng);
            [v[0] * rp, v[1] * rp, v[2] * rp]
        };
        report.record(two_point_violation(&s, &sp), &[s[0], s[1], s[2], sp[0], sp[1], sp[2]]);
    }
    report.finish()
}

fn two_point_violation(s: &[f64; 3], sp: &[f64; 3]) -> f64 {
    let d = dist3(s, sp);
    let cut = if d >= 1.0 { 1.0 / d } else { 0.0 };
    let ns = norm3(s);
    let lhs = (cut - eta_radial(-1.0, ns)).abs();
    let rhs = 2.0 * eta_radial(2.0, norm3(sp)) * eta_radial(-2.0, ns);
    (lhs - rhs) / rhs
}

/// Pointwise `G(A2, k2) <= G(A1, k1)` for `A2 >= A1`, `k2 >= k1`, on normalized
/// values `4 pi |r - r'| G`, with both truncation tails charged against the check.
pub fn verify_kernel_monotonicity(lower: (f64, f64), upper: (f64, f64), samples: usize, seed: u64) -> Result<BoundReport> {
    let ((a1, k1), (a2, k2)) = (lower, upper);
    if !(a2 >= a1 && k2 >= k1) {
        return Err(invalid("upper parameters must dominate the lower ones"));
    }
    let grid = GridSpec::for_params(k1, 20.0).covering(40.0);
    let (g1, g2) = rayon::join(|| Resolvent::new(a1, k1, 80, grid), || Resolvent::new(a2, k2, 80, grid));
    let (g1, g2) = (g1?, g2?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = BoundReport::new("kernel_monotonicity", &[("A1", a1), ("k1", k1), ("A2", a2), ("k2", k2)], 1e-10);
    for _ in 0..samples {
        let r = 10f64.powf(rng.gen_range(-2.0..1.3f64));
        let rp = r * rng.gen_range(0.05..0.7f64);
        let c: f64 = rng.gen_range(-1.0..=1.0);
        let d = (r * r + rp * rp - 2.0 * r * rp * c).sqrt();
        let v1 = g1.kernel(r, rp, c, f64::INFINITY)?;
        let v2 = g2.kernel(r, rp, c, f64::INFINITY)?;
        let excess = 4.0 * PI * d * ((v2.value - v2.tail) - (v1.value + v1.tail));
        report.record(excess, &[r, rp, c]);
    }
    Ok(report.finish())
}

/// `||G chi_n|| / n` over a set of `n`, the measured surrogate of the linear law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearLawSweep {
    pub a: f64,
    pub k: f64,
    pub n: Vec<f64>,
    pub ratio: Vec<f64>,
    /// `||chi_{4n} G chi_{4n}|| / (4n / A)`, must not exceed 1.
    pub inner_ratio: Vec<f64>,
}

pub fn linear_law_sweep(a_rep: f64, k: f64, ns: &[f64], l_max: usize) -> Result<LinearLawSweep> {
    let n_top = ns.iter().cloned().fold(1.0, f64::max);
    let res = Resolvent::new(a_rep, k, l_max, GridSpec::for_params(k, 4.0 * n_top))?;
    let mut ratio = Vec::new();
    let mut inner = Vec::new();
    for &n in ns {
        ratio.push(res.op_norm_chi(n)?.norm / n);
        inner.push(res.op_norm_chi_chi(4.0 * n)?.norm / (4.0 * n / a_rep));
    }
    Ok(LinearLawSweep { a: a_rep, k, n: ns.to_vec(), ratio, inner_ratio: inner })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EtaReport {
    pub report: BoundReport,
    pub b_hat: f64,
    pub series: f64,
    pub series_tail: f64,
    pub bound: f64,
    /// `(k, ||G eta_{-alpha}||)` for each `k`.
    pub measured: Vec<(f64, f64)>,
}

/// `sum_{n=2}^{n_max} n^2 (n-1)^(-2 alpha)` and a rigorous bound on the rest.
pub fn eta_series(alpha: f64, n_max: usize) -> (f64, f64) {
    let s: f64 = (2..=n_max).map(|n| (n * n) as f64 * ((n - 1) as f64).powf(-2.0 * alpha)).sum();
    // n^2 (n-1)^(-2 alpha) <= ((N+1)/N)^2 (n-1)^(2 - 2 alpha) for n > N, and the
    // decreasing power sums below its integral from N - 1
    let nm = n_max as f64;
    let c = ((nm + 1.0) / nm).powi(2);
    let tail = c * (nm - 1.0).max(1.0).powf(3.0 - 2.0 * alpha) / (2.0 * alpha - 3.0);
    (s, tail)
}

pub fn verify_eta_corollary(a_rep: f64, alpha: f64, k_list: &[f64], n_max: usize, l_max: usize) -> Result<EtaReport> {
    if !(alpha > 1.5) {
        return Err(invalid("alpha must exceed 3/2"));
    }
    if k_list.is_empty() || n_max < 2 {
        return Err(invalid("need at least one k and n_max >= 2"));
    }
    let per_k = k_list
        .iter()
        .map(|&k| {
            let res = Resolvent::new(a_rep, k, l_max, GridSpec::for_params(k, n_max as f64))?;
            let mut b = 0.0f64;
            for n in 1..=n_max {
                b = b.max(res.op_norm_chi(n as f64)?.norm / n as f64);
            }
            Ok((k, b, res.op_norm_eta(alpha)?.norm))
        })
        .collect::<Result<Vec<_>>>()?;
    let b_hat = per_k.iter().fold(0.0f64, |a, x| a.max(x.1));
    let (series, series_tail) = eta_series(alpha, n_max);
    let bound = b_hat * (1.0 + series + series_tail).sqrt();
    let mut report = BoundReport::new("eta_corollary", &[("A", a_rep), ("alpha", alpha), ("n_max", n_max as f64)], 0.0);
    for &(k, _, m) in &per_k {
        report.record((m - bound) / bound, &[k]);
    }
    Ok(EtaReport { report: report.finish(), b_hat, series, series_tail, bound, measured: per_k.iter().map(|x| (x.0, x.2)).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_s_wave_channel() {
        let k = 0.7;
        let ch = solve_channel(0.0, k, 0, &GridSpec::for_params(k, 4.0)).unwrap();
        for (r, rp) in [(0.3, 2.0), (1.0, 1.0), (5.0, 0.01), (3.0, 7.0)] {
            let (lo, hi): (f64, f64) = if r < rp { (r, rp) } else { (rp, r) };
            let exact = (k * lo).sinh() * (-k * hi).exp() / k;
            let got = ch.g(r, rp).unwrap();
            assert!((got / exact - 1.0).abs() < 1e-8, "{r} {rp}: {got} vs {exact}");
        }
    }

    #[test]
    fn free_kernel_limit() {
        let k = 0.5;
        let res = Resolvent::new(1e-8, k, 40, GridSpec::for_params(k, 4.0)).unwrap();
        let (r, rp, c): (f64, f64, f64) = (1.0, 2.0, 0.3);
        let d = (r * r + rp * rp - 2.0 * r * rp * c).sqrt();
        let exact = (-k * d).exp() / (4.0 * PI * d);
        let got = res.kernel(r, rp, c, 1e-6).unwrap();
        assert!((got.value / exact - 1.0).abs() < 1e-5);
    }

    #[test]
    fn channel_symmetric_and_positive() {
        let ch = solve_channel(1.0, 0.1, 2, &GridSpec::for_params(0.1, 4.0)).unwrap();
        for (r, rp) in [(0.5, 3.0), (2.0, 0.01), (10.0, 11.0)] {
            assert_eq!(ch.g(r, rp).unwrap(), ch.g(rp, r).unwrap());
            assert!(ch.g(r, rp).unwrap() > 0.0);
        }
    }

    #[test]
    fn channel_monotone_in_a_and_k() {
        let grid = GridSpec::for_params(0.1, 4.0);
        let base = solve_channel(1.0, 0.1, 0, &grid).unwrap();
        let strong = solve_channel(4.0, 0.1, 0, &grid).unwrap();
        let fast = solve_channel(1.0, 1.0, 0, &grid).unwrap();
        for (r, rp) in [(0.5, 3.0), (2.0, 0.01), (10.0, 11.0), (0.2, 0.3)] {
            let g = base.g(r, rp).unwrap();
            assert!(strong.g(r, rp).unwrap() <= g);
            assert!(fast.g(r, rp).unwrap() <= g);
        }
    }

    #[test]
    fn kernel_needs_enough_waves() {
        let res = Resolvent::new(1.0, 1.0, 2, GridSpec::for_params(1.0, 2.0)).unwrap();
        assert!(matches!(res.kernel(1.0, 0.9, 0.5, 1e-6), Err(Error::LMaxInsufficient { .. })));
        assert!(res.kernel(1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn comparison_identity_at_unit_radius() {
        for a_rep in [0.01, 1.0, 100.0] {
            let a = comparison_exponent(a_rep);
            assert!((a * (a + 1.0) - 4.0 * a_rep).abs() < 1e-12 * a_rep.max(1.0));
            assert!((a * a / 4.0 + a / 4.0 - a_rep).abs() < 1e-12 * a_rep.max(1.0));
        }
        let a = comparison_exponent(1.0);
        assert!((a - (-1.0 + 17f64.sqrt()) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn comparison_reports_pass() {
        for a_rep in [0.01, 1.0, 4.0, 100.0] {
            assert!(verify_comparison_potential(a_rep, 2000).unwrap().pass);
        }
    }

    #[test]
    fn two_point_cases() {
        // s' = 0 with |s| >= 1 cancels exactly
        assert!(two_point_violation(&[3.0, 0.0, 0.0], &[0.0; 3]) <= -1.0 + 1e-15);
        // inside the unit ball with |s - s'| < 1
        let v = two_point_violation(&[0.2, 0.0, 0.0], &[0.5, 0.0, 0.0]);
        assert!((v - (1.0 - 2.0) / 2.0).abs() < 1e-15);
        assert!(verify_two_point_inequality(20_000, 3).pass);
    }

    #[test]
    fn parameter_choice_admissible() {
        for n in [1.0, 2.0, 7.0, 1e3] {
            assert!(comparison_parameters_admissible(n));
        }
    }

    #[test]
    fn far_field_bound_below_free_kernel_at_inner_edge() {
        for n in [1.0, 2.0, 4.0] {
            assert!(far_field_bound(1.0, n, 4.0 * n) < 1.0 / (4.0 * PI * 3.0 * n));
        }
    }

    #[test]
    fn series_tail_dominates_partial_sums() {
        for alpha in [1.6, 1.75, 3.0] {
            let (s10, t10) = eta_series(alpha, 10);
            let (s2000, _) = eta_series(alpha, 2000);
            assert!(s2000 - s10 <= t10);
        }
    }

    #[test]
    fn op_norm_bounded_by_inner_estimate() {
        let res = Resolvent::new(1.0, 0.5, 3, GridSpec::for_params(0.5, 8.0)).unwrap();
        let inner = res.op_norm_chi_chi(8.0).unwrap();
        assert!(inner.norm <= 8.0);
        let full = res.op_norm_chi(2.0).unwrap();
        assert!(full.per_l.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn op_norm_resolves_narrow_kernels() {
        // Width 1/k is far below the grid spacing at large r; the norm must still respect 1/k^2.
        let res = Resolvent::new(1.0, 10.0, 2, GridSpec::for_params(10.0, 32.0)).unwrap();
        let n = res.op_norm_chi(32.0).unwrap().norm;
        assert!(n <= 0.01 && n > 0.009, "{n}");
    }
}
