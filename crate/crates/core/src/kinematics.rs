//! Masses, charges and Jacobi coordinates for three charges `{q1, q2, -1}`.
//!
//! The internal coordinates are `xi = r3 - r2` and `R = r1 - r2 - s*xi` with
//! `s = m3 / (m2 + m3)`. Every pair separation is a fixed linear combination
//! `w^T (xi, R)`; the three coefficient vectors are stored with their first
//! nonzero entry positive since only `|w^T x|` enters the Hamiltonian.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Masses of the three particles and the two non-negative charges. The third
/// charge is fixed at `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassCharge<T> {
    pub masses: [T; 3],
    pub q1: T,
    pub q2: T,
}

impl<T: Scalar> MassCharge<T> {
    pub fn new(masses: [T; 3], q1: T, q2: T) -> Result<Self> {
        let mc = Self { masses, q1, q2 };
        mc.validate()?;
        Ok(mc)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, m) in self.masses.iter().enumerate() {
            if !(*m > T::zero()) || !m.is_finite() {
                return Err(invalid(format!("mass m{} must be positive and finite, got {m}", i + 1)));
            }
        }
        if !(self.q1 >= T::zero()) || !(self.q2 >= T::zero()) {
            return Err(invalid(format!("charges must be non-negative, got q1={} q2={}", self.q1, self.q2)));
        }
        Ok(())
    }
}

/// Which particle pair is separated by a coefficient vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pair {
    /// particles 2 and 3, separation `xi`
    P23,
    /// particles 1 and 3, separation `R - (1-s) xi`
    P13,
    /// particles 1 and 2, separation `R + s xi`
    P12,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairDescriptor<T: Scalar> {
    pub pair: Pair,
    pub w: Vector2<T>,
    pub charge_product: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobiFrame<T: Scalar> {
    pub masses: [T; 3],
    pub s: T,
    pub mu23: T,
    pub mu13: T,
    pub mu: T,
    /// Kinetic matrix in `-div^T Lambda grad` form, here `diag(1/(2 mu23), 1/(2 mu))`.
    pub kinetic: Matrix2<T>,
    pub pairs: [PairDescriptor<T>; 3],
}

/// The two-body channel that sets the lowest dissociation threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    /// `{123} -> {23} + 1`, upper sector
    Pair23,
    /// `{123} -> {13} + 2`, lower sector
    Pair13,
    /// both channels within relative 1e-12; point on the equal-threshold line
    Tied,
    /// no two-body binding (both charges zero)
    None,
}

const TIE_REL: f64 = 1e-12;

pub fn build_frame<T: Scalar>(mc: &MassCharge<T>) -> Result<JacobiFrame<T>> {
    mc.validate()?;
    let [m1, m2, m3] = mc.masses;
    let two = T::lit(2.0);
    let s = m3 / (m2 + m3);
    let mu23 = m2 * m3 / (m2 + m3);
    let mu13 = m1 * m3 / (m1 + m3);
    let mu = m1 * (m2 + m3) / (m1 + m2 + m3);
    let kinetic = Matrix2::new(T::one() / (two * mu23), T::zero(), T::zero(), T::one() / (two * mu));

    let pairs = [
        PairDescriptor { pair: Pair::P23, w: normalize_sign(Vector2::new(T::one(), T::zero())), charge_product: -mc.q2 },
        PairDescriptor { pair: Pair::P13, w: normalize_sign(Vector2::new(-(T::one() - s), T::one())), charge_product: -mc.q1 },
        PairDescriptor { pair: Pair::P12, w: normalize_sign(Vector2::new(s, T::one())), charge_product: mc.q1 * mc.q2 },
    ];
    Ok(JacobiFrame { masses: mc.masses, s, mu23, mu13, mu, kinetic, pairs })
}

fn normalize_sign<T: Scalar>(w: Vector2<T>) -> Vector2<T> {
    let first = if w[0] != T::zero() { w[0] } else { w[1] };
    if first < T::zero() {
        -w
    } else {
        w
    }
}

impl<T: Scalar> JacobiFrame<T> {
    /// Pair descriptors with charge products for the charges `(q1, q2)`.
    pub fn pairs_for(&self, q1: T, q2: T) -> [PairDescriptor<T>; 3] {
        let mut pairs = self.pairs;
        pairs[0].charge_product = -q2;
        pairs[1].charge_product = -q1;
        pairs[2].charge_product = q1 * q2;
        pairs
    }

    pub fn pair(&self, which: Pair) -> &PairDescriptor<T> {
        match which {
            Pair::P23 => &self.pairs[0],
            Pair::P13 => &self.pairs[1],
            Pair::P12 => &self.pairs[2],
        }
    }

    /// Frame with particles 1 and 2 relabelled. Used for the `1 <-> 2` index
    /// interchange of the edge criteria.
    pub fn swapped(&self) -> Result<Self> {
        let [m1, m2, m3] = self.masses;
        build_frame(&MassCharge { masses: [m2, m1, m3], q1: T::zero(), q2: T::zero() })
    }
}

pub fn threshold_energy<T: Scalar>(frame: &JacobiFrame<T>, q1: T, q2: T) -> (T, Channel) {
    let b23 = frame.mu23 * q2 * q2;
    let b13 = frame.mu13 * q1 * q1;
    let half = T::lit(0.5);
    if b23 == T::zero() && b13 == T::zero() {
        return (T::zero(), Channel::None);
    }
    let big = b23.max(b13);
    let channel = if (b23 - b13).abs() <= T::lit(TIE_REL) * big {
        Channel::Tied
    } else if b23 > b13 {
        Channel::Pair23
    } else {
        Channel::Pair13
    };
    (-half * big, channel)
}

/// `q2` on the line of equal thresholds `mu23 q2^2 = mu13 q1^2`.
pub fn equal_threshold_q2<T: Scalar>(frame: &JacobiFrame<T>, q1: T) -> T {
    q1 * (frame.mu13 / frame.mu23).sqrt()
}

/// Cutoff weight: 1 inside the unit ball, `|r|^alpha` outside.
pub fn eta<T: Scalar>(alpha: T, r: &[T]) -> T {
    let norm = r.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
    eta_radial(alpha, norm)
}

#[inline]
pub fn eta_radial<T: Scalar>(alpha: T, r: T) -> T {
    if r <= T::one() {
        T::one()
    } else {
        r.powf(alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Vector3;
    use proptest::prelude::*;

    fn frame(m: [f64; 3]) -> JacobiFrame<f64> {
        build_frame(&MassCharge::new(m, 1.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn equal_masses() {
        let f = frame([1.0, 1.0, 1.0]);
        assert_relative_eq!(f.mu23, 0.5);
        assert_relative_eq!(f.mu13, 0.5);
        assert_relative_eq!(f.mu, 2.0 / 3.0);
        assert_relative_eq!(f.s, 0.5);
    }

    #[test]
    fn heavy_third_particle_limit() {
        let f = frame([1.0, 1.0, 1e6]);
        assert_relative_eq!(f.mu23, 1.0, max_relative = 2e-6);
        assert_relative_eq!(f.s, 1.0, max_relative = 2e-6);
    }

    #[test]
    fn proton_plus_two_unit_masses() {
        let f = frame([1836.15, 1.0, 1.0]);
        assert_relative_eq!(f.mu23, 0.5);
        assert_relative_eq!(f.mu, 1836.15 * 2.0 / 1838.15, max_relative = 1e-15);
    }

    #[test]
    fn non_positive_mass_rejected() {
        assert!(MassCharge::new([1.0, 0.0, 1.0], 1.0, 1.0).is_err());
        assert!(MassCharge::new([1.0, -2.0, 1.0], 1.0, 1.0).is_err());
        assert!(MassCharge::new([1.0, 1.0, 1.0], -0.1, 1.0).is_err());
    }

    #[test]
    fn pair_vectors() {
        let f = frame([1.0, 2.0, 3.0]);
        let s = 3.0 / 5.0;
        assert_eq!(f.pair(Pair::P23).w, Vector2::new(1.0, 0.0));
        assert_relative_eq!(f.pair(Pair::P13).w, Vector2::new(1.0 - s, -1.0));
        assert_relative_eq!(f.pair(Pair::P12).w, Vector2::new(s, 1.0));
    }

    #[test]
    fn thresholds() {
        let f = frame([1.0, 1.0, 1.0]);
        assert_eq!(threshold_energy(&f, 1.0, 1.0), (-0.25, Channel::Tied));
        assert_eq!(threshold_energy(&f, 0.0, 1.0), (-0.25, Channel::Pair23));
        assert_eq!(threshold_energy(&f, 0.0, 0.0), (0.0, Channel::None));

        // mu23 = 6/5, mu13 = 3/4
        let f = frame([1.0, 2.0, 3.0]);
        let (e, ch) = threshold_energy(&f, 1.0, 1.0);
        assert_relative_eq!(e, -0.6, max_relative = 1e-15);
        assert_eq!(ch, Channel::Pair23);
    }

    #[test]
    fn equal_threshold_line() {
        let f = frame([1.0, 1.0, 1.0]);
        assert_relative_eq!(equal_threshold_q2(&f, 0.7), 0.7);
        assert_eq!(equal_threshold_q2(&f, 0.0), 0.0);
        let f = frame([1.0, 1.0, 1e6]);
        let mu13: f64 = 1e6 / (1e6 + 1.0);
        let mu23: f64 = 1e6 / (1e6 + 1.0);
        assert_relative_eq!(equal_threshold_q2(&f, 1.0), (mu13 / mu23).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn eta_values() {
        assert_eq!(eta(-1.0, &[0.5, 0.0, 0.0]), 1.0);
        assert_relative_eq!(eta(-1.0, &[0.0, 2.0, 0.0]), 0.5);
        let r = [3.0, 0.0, 0.0];
        assert_relative_eq!(eta(1.0, &r) * eta(2.0, &r), 27.0, max_relative = 1e-14);
        assert_relative_eq!(eta(3.0, &r), 27.0, max_relative = 1e-14);
    }

    #[test]
    fn single_precision_frame() {
        let f = build_frame(&MassCharge::<f32>::new([1.0, 1.0, 1.0], 1.0, 1.0).unwrap()).unwrap();
        assert!((f.mu - 2.0 / 3.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn pair_separations_reconstruct(
            m in prop::array::uniform3(0.05f64..50.0),
            r in prop::array::uniform9(-5.0f64..5.0),
        ) {
            let f = frame(m);
            let r1 = Vector3::new(r[0], r[1], r[2]);
            let r2 = Vector3::new(r[3], r[4], r[5]);
            let r3 = Vector3::new(r[6], r[7], r[8]);
            let xi = r3 - r2;
            let big_r = r1 - r2 - xi * f.s;
            let sep = |w: Vector2<f64>| xi * w[0] + big_r * w[1];
            let close = |a: Vector3<f64>, b: Vector3<f64>| (a - b).norm() <= 1e-12 * (1.0 + a.norm());
            let d23 = sep(f.pair(Pair::P23).w);
            let d13 = sep(f.pair(Pair::P13).w);
            let d12 = sep(f.pair(Pair::P12).w);
            prop_assert!(close(d23, r3 - r2));
            prop_assert!(close(d13, r1 - r3) || close(d13, r3 - r1));
            prop_assert!(close(d12, r1 - r2));
        }

        #[test]
        fn eta_exponents_add(a1 in -3.0f64..3.0, a2 in -3.0f64..3.0, x in prop::array::uniform3(-20.0f64..20.0)) {
            let lhs = eta(a1, &x) * eta(a2, &x);
            let rhs = eta(a1 + a2, &x);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
        }

        #[test]
        fn threshold_monotone_and_tie(m in prop::array::uniform3(0.1f64..10.0), q1 in 0.0f64..3.0, q2 in 0.0f64..3.0, dq in 0.0f64..0.5) {
            let f = frame(m);
            let (e, _) = threshold_energy(&f, q1, q2);
            prop_assert!(threshold_energy(&f, q1 + dq, q2).0 <= e);
            prop_assert!(threshold_energy(&f, q1, q2 + dq).0 <= e);
            let qt = equal_threshold_q2(&f, q1);
            let b23 = f.mu23 * qt * qt;
            let b13 = f.mu13 * q1 * q1;
            prop_assert!((b23 - b13).abs() <= 1e-12 * b13.max(1e-300));
            if q1 > 0.0 {
                prop_assert_eq!(threshold_energy(&f, q1, qt).1, Channel::Tied);
            }
        }
    }
}
