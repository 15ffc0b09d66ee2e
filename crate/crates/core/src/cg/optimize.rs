//! Stochastic variational basis growth.
//!
//! Candidates are built pair by pair: `A = sum_p w_p w_p^T / b_p^2` where the
//! pair lengths `b_p` are drawn log-uniformly. Each slot keeps the candidate
//! with the lowest bordered ground energy; optional refinement sweeps revisit
//! every slot and swap its function for a better candidate.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

use super::assemble::{assemble, border, element};
use super::basis::GaussianBasis;
use super::gevp::{factorize, Factorization, SpectralResult, DEFAULT_COND_CUTOFF};
use super::system::SystemSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeConfig {
    pub target_size: usize,
    pub trials_per_slot: usize,
    pub seed: u64,
    /// Number of refinement sweeps over all slots after growth.
    pub refine_cycles: usize,
    /// Log-uniform sampling range of the pair widths `1/b^2`, in units of
    /// `1/length_scale^2`.
    pub width_range: (f64, f64),
    pub cond_cutoff: f64,
    /// Candidates whose normalized overlap with an existing function exceeds
    /// this value are discarded.
    pub max_overlap: f64,
}

impl OptimizeConfig {
    pub fn new(target_size: usize, trials_per_slot: usize, seed: u64) -> Self {
        Self {
            target_size,
            trials_per_slot,
            seed,
            refine_cycles: 0,
            width_range: (1e-4, 1e3),
            cond_cutoff: DEFAULT_COND_CUTOFF,
            max_overlap: 0.99999,
        }
    }

    pub fn with_refinement(mut self, cycles: usize) -> Self {
        self.refine_cycles = cycles;
        self
    }

    pub fn with_width_range(mut self, lo: f64, hi: f64) -> Self {
        self.width_range = (lo, hi);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.target_size == 0 {
            return Err(invalid("target_size must be at least 1"));
        }
        if self.trials_per_slot == 0 {
            return Err(invalid("trials_per_slot must be at least 1"));
        }
        let (lo, hi) = self.width_range;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(invalid("width range must satisfy 0 < lo < hi"));
        }
        if !(self.cond_cutoff > 0.0 && self.cond_cutoff < 1.0) {
            return Err(invalid("cond_cutoff must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Optimized<T: Scalar> {
    pub basis: GaussianBasis<T>,
    pub result: SpectralResult<T>,
    /// Ground energy after each growth slot, then after each refinement sweep.
    pub history: Vec<T>,
}

pub fn optimize_basis<T: Scalar>(spec: &SystemSpec<T>, target_size: usize, trials_per_slot: usize, seed: u64) -> Result<GaussianBasis<T>> {
    Ok(optimize(spec, &OptimizeConfig::new(target_size, trials_per_slot, seed))?.basis)
}

pub fn optimize<T: Scalar>(spec: &SystemSpec<T>, cfg: &OptimizeConfig) -> Result<Optimized<T>> {
    optimize_from(spec, &GaussianBasis::new(spec.n_vec), cfg)
}

/// Continues from `start`: grows it to `cfg.target_size` (no-op if already
/// that large) and then runs the refinement sweeps. Used for continuation in
/// a parameter, where the previous optimum is a much better starting point
/// than an empty basis.
pub fn optimize_from<T: Scalar>(spec: &SystemSpec<T>, start: &GaussianBasis<T>, cfg: &OptimizeConfig) -> Result<Optimized<T>> {
    cfg.validate()?;
    if start.n_vec() != spec.n_vec {
        return Err(invalid("starting basis has the wrong number of coordinates"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sampler = Sampler::new(spec, cfg);
    let cutoff = T::lit(cfg.cond_cutoff);
    let mut basis = start.clone();
    let mut diag: Vec<T> = basis.widths().iter().map(|a| element(spec, a, a).map(|e| e.1)).collect::<Result<_>>()?;
    let mut history = Vec::new();
    let mut state: Option<Factorization<T>> = None;
    if !basis.is_empty() {
        let (h, s) = assemble(spec, &basis)?;
        let f = factorize(&h, &s, cutoff)?;
        history.push(f.levels[0]);
        state = Some(f);
    }

    while basis.len() < cfg.target_size {
        let candidates = sampler.draw(&mut rng, cfg.trials_per_slot);
        let best = best_candidate(spec, &basis, &diag, state.as_ref(), &candidates, cfg)?;
        let Some((a, _)) = best else {
            return Err(Error::BudgetInsufficient(format!(
                "no admissible candidate for slot {} after {} trials",
                basis.len(),
                cfg.trials_per_slot
            )));
        };
        let (_, snn) = element(spec, &a, &a)?;
        basis.push(a)?;
        diag.push(snn);
        let (h, s) = assemble(spec, &basis)?;
        let f = factorize(&h, &s, cutoff)?;
        history.push(f.levels[0]);
        state = Some(f);
    }

    for _ in 0..cfg.refine_cycles {
        for slot in 0..basis.len() {
            let current = basis.remove(slot);
            let cur_diag = diag.remove(slot);
            let reduced = if basis.is_empty() {
                None
            } else {
                let (h, s) = assemble(spec, &basis)?;
                Some(factorize(&h, &s, cutoff)?)
            };
            let mut candidates = sampler.draw(&mut rng, cfg.trials_per_slot);
            candidates.push(current.clone());
            let best = best_candidate(spec, &basis, &diag, reduced.as_ref(), &candidates, cfg)?;
            let chosen = match best {
                Some((a, _)) => a,
                None => current.clone(),
            };
            let snn = if chosen == current { cur_diag } else { element(spec, &chosen, &chosen)?.1 };
            basis.insert(slot, chosen)?;
            diag.insert(slot, snn);
        }
        let (h, s) = assemble(spec, &basis)?;
        let f = factorize(&h, &s, cutoff)?;
        history.push(f.levels[0]);
        state = Some(f);
    }

    let (h, s) = assemble(spec, &basis)?;
    let f = match state {
        Some(f) if f.vectors.nrows() == basis.len() => f,
        _ => factorize(&h, &s, cutoff)?,
    };
    let result = f.ground_state(&h, &s);
    Ok(Optimized { basis, result, history })
}

/// Picks the candidate with the lowest bordered energy. Evaluation runs in
/// parallel; ties resolve to the lowest index so the outcome is independent
/// of scheduling.
fn best_candidate<T: Scalar>(
    spec: &SystemSpec<T>,
    basis: &GaussianBasis<T>,
    diag: &[T],
    state: Option<&Factorization<T>>,
    candidates: &[DMatrix<T>],
    cfg: &OptimizeConfig,
) -> Result<Option<(DMatrix<T>, T)>> {
    let dep_tol = T::lit(cfg.cond_cutoff.max(1e-14));
    let max_overlap = T::lit(cfg.max_overlap);
    let scored: Vec<Option<T>> = candidates
        .par_iter()
        .map(|a| -> Result<Option<T>> {
            if basis.admissible(a).is_err() {
                return Ok(None);
            }
            let (hs, ss, hnn, snn) = border(spec, basis, a)?;
            if !(snn > T::zero()) {
                return Ok(None);
            }
            for (sij, sii) in ss.iter().zip(diag) {
                if (*sij).abs() / (*sii * snn).sqrt() > max_overlap {
                    return Ok(None);
                }
            }
            let e = match state {
                None => hnn / snn,
                Some(f) => match f.bordered_ground(&hs, &ss, hnn, snn, dep_tol) {
                    Some(e) => e,
                    None => return Ok(None),
                },
            };
            Ok(if e.is_finite() { Some(e) } else { None })
        })
        .collect::<Result<_>>()?;
    let mut best: Option<(usize, T)> = None;
    for (i, e) in scored.iter().enumerate() {
        if let Some(e) = e {
            if best.is_none_or(|(_, b)| *e < b) {
                best = Some((i, *e));
            }
        }
    }
    Ok(best.map(|(i, e)| (candidates[i].clone(), e)))
}

struct Sampler<T: Scalar> {
    directions: Vec<DVector<T>>,
    log_len: (f64, f64),
    length_scale: f64,
    n_vec: usize,
}

impl<T: Scalar> Sampler<T> {
    fn new(spec: &SystemSpec<T>, cfg: &OptimizeConfig) -> Self {
        let mut directions: Vec<DVector<T>> = spec.interactions.iter().map(|t| t.w.clone()).collect();
        // complete the span with coordinate axes when the pairs do not cover it
        for k in 0..spec.n_vec {
            let rank = rank_of(&directions, spec.n_vec);
            if rank >= spec.n_vec {
                break;
            }
            let mut e = DVector::zeros(spec.n_vec);
            e[k] = T::one();
            directions.push(e);
            if rank_of(&directions, spec.n_vec) == rank {
                directions.pop();
            }
        }
        let (wlo, whi) = cfg.width_range;
        // width 1/b^2 in [wlo, whi] <=> b in [whi^-1/2, wlo^-1/2]
        let log_len = (-0.5 * whi.log10(), -0.5 * wlo.log10());
        Self { directions, log_len, length_scale: spec.length_scale.as_f64(), n_vec: spec.n_vec }
    }

    fn draw(&self, rng: &mut ChaCha8Rng, count: usize) -> Vec<DMatrix<T>> {
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let mut a = DMatrix::<f64>::zeros(self.n_vec, self.n_vec);
            for w in &self.directions {
                let b = self.length_scale * 10f64.powf(rng.gen_range(self.log_len.0..self.log_len.1));
                let wf: Vec<f64> = w.iter().map(|x| x.as_f64()).collect();
                for i in 0..self.n_vec {
                    for j in 0..self.n_vec {
                        a[(i, j)] += wf[i] * wf[j] / (b * b);
                    }
                }
            }
            if a.clone().cholesky().is_some() {
                out.push(a.map(T::lit));
            }
        }
        out
    }
}

fn rank_of<T: Scalar>(vectors: &[DVector<T>], n: usize) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(n, vectors.len(), |i, j| vectors[j][i].as_f64());
    m.rank(1e-10)
}
