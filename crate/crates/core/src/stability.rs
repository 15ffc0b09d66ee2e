//! Stability of three-charge systems `{q1, q2, -1}` and two-electron atoms.
//!
//! Variational energies are upper bounds, so a point is only ever certified
//! stable. Instability is reported solely through the closed-form edge
//! criterion; everything else is undecided.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cg::{optimize, optimize_from, GaussianBasis, OptimizeConfig, SystemSpec};
use crate::error::{invalid, Error, Result};
use crate::kinematics::{threshold_energy, Channel, JacobiFrame};

pub const DEFAULT_EPS_NUM: f64 = 1e-6;

/// Basis budget for one variational run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub basis_size: usize,
    pub trials: usize,
    pub seed: u64,
    pub refine_cycles: usize,
    /// Required distance below threshold before a point counts as stable.
    pub eps_num: f64,
}

impl Budget {
    pub fn new(basis_size: usize, trials: usize, seed: u64) -> Self {
        Self { basis_size, trials, seed, refine_cycles: 1, eps_num: DEFAULT_EPS_NUM }
    }

    pub fn optimize_config(&self) -> OptimizeConfig {
        OptimizeConfig::new(self.basis_size, self.trials, self.seed).with_refinement(self.refine_cycles)
    }

    fn validate(&self) -> Result<()> {
        if self.basis_size == 0 || self.trials == 0 {
            return Err(invalid("basis size and trials must be positive"));
        }
        if !(self.eps_num > 0.0 && self.eps_num.is_finite()) {
            return Err(invalid("eps_num must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VerdictState {
    CertifiedStable,
    CriterionUnstable,
    Undecided,
}

impl VerdictState {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::CertifiedStable => "certified_stable",
            Self::CriterionUnstable => "criterion_unstable",
            Self::Undecided => "undecided",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityVerdict {
    pub q1: f64,
    pub q2: f64,
    pub state: VerdictState,
    /// `E_thr - E0`; positive means the variational energy is below threshold.
    pub margin: f64,
    pub e0: f64,
    pub e_thr: f64,
    pub channel: Channel,
    pub basis_size: usize,
}

pub fn classify(frame: &JacobiFrame<f64>, q1: f64, q2: f64, budget: &Budget) -> Result<StabilityVerdict> {
    if !(q1 >= 0.0 && q2 >= 0.0 && q1.is_finite() && q2.is_finite()) {
        return Err(invalid("charges must be finite and non-negative"));
    }
    budget.validate()?;
    let spec = SystemSpec::three_body(frame, q1, q2)?;
    let out = optimize(&spec, &budget.optimize_config())?;
    let e0 = out.result.energy;
    let (e_thr, channel) = threshold_energy(frame, q1, q2);
    let margin = e_thr - e0;
    let certified = margin > budget.eps_num;
    let criterion = edge_criterion(frame, q1, q2)?;
    if certified && criterion {
        return Err(Error::Inconsistent(format!(
            "({q1}, {q2}) certified stable with margin {margin:e} but the instability criterion holds"
        )));
    }
    let state = if certified {
        VerdictState::CertifiedStable
    } else if criterion {
        VerdictState::CriterionUnstable
    } else {
        VerdictState::Undecided
    };
    Ok(StabilityVerdict { q1, q2, state, margin, e0, e_thr, channel, basis_size: out.basis.len() })
}

fn edge_criterion(frame: &JacobiFrame<f64>, q1: f64, q2: f64) -> Result<bool> {
    if q2 == 1.0 && instability_criterion(frame, q1).holds {
        return Ok(true);
    }
    if q1 == 1.0 {
        return Ok(instability_criterion(&frame.swapped()?, q2).holds);
    }
    Ok(false)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub holds: bool,
    /// Supremum of the `q1` interval on which both inequalities hold; a lower
    /// bound on the critical charge of the `q2 = 1` edge.
    pub sup_q1: f64,
}

/// Closed-form instability test for `H(q1, 1)`. On the `q1 = 1` edge pass
/// `frame.swapped()` and the free charge.
pub fn instability_criterion(frame: &JacobiFrame<f64>, q1: f64) -> CriterionOutcome {
    CriterionOutcome { holds: q1 > 0.0 && both_inequalities(frame, q1), sup_q1: criterion_sup(frame) }
}

fn both_inequalities(frame: &JacobiFrame<f64>, q1: f64) -> bool {
    let (mu, mu23) = (frame.mu, frame.mu23);
    if !(q1 * q1 < 3.0 / 16.0 * mu23 / mu) {
        return false;
    }
    let root = (3.0 * mu23).sqrt();
    let t = 4.0 * q1 * mu.sqrt();
    6.0 * mu / mu23 * q1 * (1.0 + t / (root - t)) < 1.0
}

fn criterion_sup(frame: &JacobiFrame<f64>) -> f64 {
    // the second inequality is increasing on the interval allowed by the first
    let mut lo = 0.0;
    let mut hi = (3.0 / 16.0 * frame.mu23 / frame.mu).sqrt();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if both_inequalities(frame, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sector {
    /// `mu23 q2^2 > mu13 q1^2`: rays at fixed `q2`, scanning `q1`.
    Upper,
    /// `mu13 q1^2 > mu23 q2^2`: rays at fixed `q1`, scanning `q2`.
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BorderPoint {
    /// Charge held fixed along the ray.
    pub fixed: f64,
    /// Scanned charge at the not-certified end of the bracket.
    pub unstable_side: f64,
    /// Scanned charge at the certified end of the bracket.
    pub stable_side: f64,
    pub margin_unstable_side: f64,
    pub margin_stable_side: f64,
}

impl BorderPoint {
    /// `(q1, q2)` of the certified endpoint.
    pub fn stable_point(&self, sector: Sector) -> (f64, f64) {
        match sector {
            Sector::Upper => (self.stable_side, self.fixed),
            Sector::Lower => (self.fixed, self.stable_side),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RayOutcome {
    Border(BorderPoint),
    /// Every coarse sample is certified, or none is.
    NoBorderOnRay { fixed: f64, all_certified: bool },
}

/// Ray-wise bisection of the border between certified and not-certified
/// points. Each ray runs from the axis to the equal-threshold line and is
/// first sampled at `coarse` points; the first not-certified to certified
/// transition is then bisected to `resolution`. The result is an inner
/// approximation of the stable region.
pub fn trace_border(
    frame: &JacobiFrame<f64>,
    sector: Sector,
    rays: &[f64],
    budget: &Budget,
    coarse: usize,
    resolution: f64,
) -> Result<Vec<RayOutcome>> {
    if coarse < 2 || !(resolution > 0.0) {
        return Err(invalid("need at least two coarse samples and a positive resolution"));
    }
    budget.validate()?;
    rays.par_iter().map(|&fixed| trace_ray(frame, sector, fixed, budget, coarse, resolution)).collect()
}

fn trace_ray(frame: &JacobiFrame<f64>, sector: Sector, fixed: f64, budget: &Budget, coarse: usize, resolution: f64) -> Result<RayOutcome> {
    if !(fixed > 0.0) {
        return Err(invalid("ray charge must be positive"));
    }
    let end = match sector {
        Sector::Upper => fixed * (frame.mu23 / frame.mu13).sqrt(),
        Sector::Lower => fixed * (frame.mu13 / frame.mu23).sqrt(),
    };
    let margin_at = |x: f64| -> Result<(bool, f64)> {
        let (q1, q2) = match sector {
            Sector::Upper => (x, fixed),
            Sector::Lower => (fixed, x),
        };
        let v = classify(frame, q1, q2, budget)?;
        Ok((v.state == VerdictState::CertifiedStable, v.margin))
    };
    let xs: Vec<f64> = (1..=coarse).map(|i| end * i as f64 / coarse as f64).collect();
    let mut prev: Option<(f64, f64)> = None;
    for (i, &x) in xs.iter().enumerate() {
        let (ok, m) = margin_at(x)?;
        if ok {
            let Some((mut lo, mut m_lo)) = prev else {
                return Ok(RayOutcome::NoBorderOnRay { fixed, all_certified: i == 0 && all_certified(&xs, &margin_at)? });
            };
            let (mut hi, mut m_hi) = (x, m);
            while hi - lo > resolution {
                let mid = 0.5 * (lo + hi);
                let (ok, m) = margin_at(mid)?;
                if ok {
                    hi = mid;
                    m_hi = m;
                } else {
                    lo = mid;
                    m_lo = m;
                }
            }
            return Ok(RayOutcome::Border(BorderPoint {
                fixed,
                unstable_side: lo,
                stable_side: hi,
                margin_unstable_side: m_lo,
                margin_stable_side: m_hi,
            }));
        }
        prev = Some((x, m));
    }
    Ok(RayOutcome::NoBorderOnRay { fixed, all_certified: false })
}

fn all_certified(xs: &[f64], margin_at: &impl Fn(f64) -> Result<(bool, f64)>) -> Result<bool> {
    for &x in &xs[1..] {
        if !margin_at(x)?.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityDiagram {
    pub masses: [f64; 3],
    pub budget: Budget,
    pub points: Vec<StabilityVerdict>,
}

impl StabilityDiagram {
    /// Classifies every grid point. Output order follows the input order.
    pub fn scan(frame: &JacobiFrame<f64>, grid: &[(f64, f64)], budget: &Budget) -> Result<Self> {
        let points = grid.par_iter().map(|&(q1, q2)| classify(frame, q1, q2, budget)).collect::<Result<Vec<_>>>()?;
        Ok(Self { masses: frame.masses, budget: budget.clone(), points })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("q1,q2,state,margin,E0,E_thr,basis_size\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{:e},{:.12e},{:.12e},{}",
                p.q1,
                p.q2,
                p.state.as_str(),
                p.margin,
                p.e0,
                p.e_thr,
                p.basis_size
            );
        }
        out
    }
}

/// One bisection step of the critical-charge search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChargeProbe {
    pub z: f64,
    pub e0: f64,
    pub e_thr: f64,
    pub margin: f64,
    pub stable: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalChargeReport {
    /// `[z_lo, z_hi]`: `z_hi` is certified stable, `z_lo` is not.
    pub bracket: [f64; 2],
    pub nuclear_mass: Option<f64>,
    pub budget: Budget,
    pub tolerance: f64,
    pub probes: Vec<ChargeProbe>,
}

/// Hydrogenic one-electron threshold with the reduced mass of a nucleus of
/// mass `nuclear_mass` (None = infinite).
pub fn atomic_threshold(z: f64, nuclear_mass: Option<f64>) -> f64 {
    let red = nuclear_mass.map_or(1.0, |m| m / (m + 1.0));
    -0.5 * red * z * z
}

pub fn probe_atomic(z: f64, nuclear_mass: Option<f64>, budget: &Budget) -> Result<ChargeProbe> {
    Ok(probe_atomic_from(z, nuclear_mass, budget, None)?.0)
}

fn probe_atomic_from(
    z: f64,
    nuclear_mass: Option<f64>,
    budget: &Budget,
    start: Option<&GaussianBasis<f64>>,
) -> Result<(ChargeProbe, GaussianBasis<f64>)> {
    let spec = SystemSpec::two_electron_atom(z, nuclear_mass)?;
    let cfg = budget.optimize_config();
    let out = match start {
        None => optimize(&spec, &cfg)?,
        Some(b) => optimize_from(&spec, b, &cfg)?,
    };
    let e_thr = atomic_threshold(z, nuclear_mass);
    let margin = e_thr - out.result.energy;
    let probe =
        ChargeProbe { z, e0: out.result.energy, e_thr, margin, stable: margin > budget.eps_num, residual: out.result.residual };
    Ok((probe, out.basis))
}

/// Bisects the two-electron critical nuclear charge on `[0.5, 1]` until the
/// bracket is narrower than `tolerance`.
///
/// Near the critical charge the bound state is very diffuse and a basis grown
/// from scratch often only resolves the continuum above threshold. Each
/// bisection probe therefore continues from the basis of the current stable
/// end of the bracket and re-optimizes it in place.
pub fn critical_charge_atomic(nuclear_mass: Option<f64>, budget: &Budget, tolerance: f64) -> Result<CriticalChargeReport> {
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(invalid("tolerance must be positive"));
    }
    if let Some(m) = nuclear_mass {
        if !(m > 0.0) {
            return Err(invalid("nuclear mass must be positive"));
        }
    }
    budget.validate()?;
    let (mut lo, mut hi) = (0.5, 1.0);
    let ends = [lo, hi].par_iter().map(|&z| probe_atomic_from(z, nuclear_mass, budget, None)).collect::<Result<Vec<_>>>()?;
    if ends[0].0.stable || !ends[1].0.stable {
        return Err(Error::BudgetInsufficient(format!(
            "no sign change on [0.5, 1]: margins {:e} and {:e}",
            ends[0].0.margin, ends[1].0.margin
        )));
    }
    let mut stable_basis = ends[1].1.clone();
    let mut probes: Vec<ChargeProbe> = ends.into_iter().map(|e| e.0).collect();
    while hi - lo > tolerance {
        let (p, basis) = probe_atomic_from(0.5 * (lo + hi), nuclear_mass, budget, Some(&stable_basis))?;
        if p.stable {
            hi = p.z;
            stable_basis = basis;
        } else {
            lo = p.z;
        }
        probes.push(p);
    }
    Ok(CriticalChargeReport { bracket: [lo, hi], nuclear_mass, budget: budget.clone(), tolerance, probes })
}
