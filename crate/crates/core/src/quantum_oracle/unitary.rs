use num_complex::Complex64;
use serde::Serialize;

use crate::error::{domain, Result};

/// Amplitudes of |1⟩₁|0⟩₂ and |0⟩₁|1⟩₂.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SinglePhononState {
    pub amplitude_ion1: Complex64,
    pub amplitude_ion2: Complex64,
}

impl SinglePhononState {
    pub fn on_ion1() -> Self {
        Self { amplitude_ion1: Complex64::new(1.0, 0.0), amplitude_ion2: Complex64::new(0.0, 0.0) }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitude_ion1.norm_sqr() + self.amplitude_ion2.norm_sqr()
    }
}

/// A 2×2 Hermitian matrix [[d1, off], [conj(off), d2]] in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hermitian2 {
    pub d1: f64,
    pub d2: f64,
    pub off: Complex64,
}

impl Hermitian2 {
    /// exp(−iHt) by spectral decomposition, returned row-major.
    pub fn propagator(&self, t: f64) -> [[Complex64; 2]; 2] {
        let mean = 0.5 * (self.d1 + self.d2);
        let half_gap = 0.5 * (self.d1 - self.d2);
        let radius = half_gap.hypot(self.off.norm());
        let phase = |lambda: f64| Complex64::from_polar(1.0, -lambda * t);
        if radius == 0.0 {
            let p = phase(mean);
            let zero = Complex64::new(0.0, 0.0);
            return [[p, zero], [zero, p]];
        }
        // Eigenvector for λ₊ = mean + radius, chosen from whichever column is
        // better conditioned.
        let (v1, v2) = if half_gap >= 0.0 {
            (Complex64::new(half_gap + radius, 0.0), self.off.conj())
        } else {
            (self.off, Complex64::new(radius - half_gap, 0.0))
        };
        let norm = (v1.norm_sqr() + v2.norm_sqr()).sqrt();
        let (u1, u2) = (v1 / norm, v2 / norm);
        // Orthogonal partner for λ₋.
        let (w1, w2) = (-u2.conj(), u1.conj());
        let (p_plus, p_minus) = (phase(mean + radius), phase(mean - radius));
        let entry = |a: Complex64, b: Complex64| p_plus * a * b.conj();
        let entry_minus = |a: Complex64, b: Complex64| p_minus * a * b.conj();
        [
            [entry(u1, u1) + entry_minus(w1, w1), entry(u1, u2) + entry_minus(w1, w2)],
            [entry(u2, u1) + entry_minus(w2, w1), entry(u2, u2) + entry_minus(w2, w2)],
        ]
    }

    pub fn evolve(&self, state: SinglePhononState, t: f64) -> SinglePhononState {
        let u = self.propagator(t);
        SinglePhononState {
            amplitude_ion1: u[0][0] * state.amplitude_ion1 + u[0][1] * state.amplitude_ion2,
            amplitude_ion2: u[1][0] * state.amplitude_ion1 + u[1][1] * state.amplitude_ion2,
        }
    }
}

/// Single-phonon sector of the two-site hopping Hamiltonian in the frame
/// rotating at the on-site frequency, with the exchange amplitude reduced by
/// the rocking-mode shift of `n_s` stretch phonons.
fn hopping_hamiltonian(kappa: f64, chi: f64, n_s: u64) -> Hermitian2 {
    Hermitian2 { d1: 0.0, d2: 0.0, off: Complex64::new(0.5 * (kappa - chi * n_s as f64), 0.0) }
}

pub fn evolve_state(kappa: f64, chi: f64, n_s: i64, t: f64) -> Result<SinglePhononState> {
    if n_s < 0 {
        return Err(domain(format!("n_s must be non-negative, got {n_s}")));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(domain(format!("t must be non-negative and finite, got {t}")));
    }
    Ok(hopping_hamiltonian(kappa, chi, n_s as u64).evolve(SinglePhononState::on_ion1(), t))
}

/// Probability of finding the phonon on ion 2 at time `t` after starting on ion 1.
pub fn evolve_single_phonon(kappa: f64, chi: f64, n_s: i64, t: f64) -> Result<f64> {
    Ok(evolve_state(kappa, chi, n_s, t)?.amplitude_ion2.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn matmul(a: [[Complex64; 2]; 2], b: [[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    out[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        out
    }

    /// Taylor series of exp(−iHt) with scaling and squaring.
    fn taylor_propagator(h: &Hermitian2, t: f64) -> [[Complex64; 2]; 2] {
        let m = [
            [Complex64::new(h.d1, 0.0), h.off],
            [h.off.conj(), Complex64::new(h.d2, 0.0)],
        ];
        let scale = (h.d1.abs() + h.d2.abs() + h.off.norm()) * t.abs();
        let squarings = scale.log2().ceil().max(0.0) as u32 + 2;
        let dt = t / 2f64.powi(squarings as i32);
        let a = m.map(|row| row.map(|x| x * Complex64::new(0.0, -dt)));
        let id = [[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]];
        let mut sum = id;
        let mut term = id;
        for k in 1..30 {
            term = matmul(term, a).map(|row| row.map(|x| x / k as f64));
            for i in 0..2 {
                for j in 0..2 {
                    sum[i][j] += term[i][j];
                }
            }
        }
        for _ in 0..squarings {
            sum = matmul(sum, sum);
        }
        sum
    }

    #[test]
    fn starts_on_ion1() {
        assert_eq!(evolve_single_phonon(1.0, -0.1, 3, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn full_swap_without_kerr() {
        let kappa = 2.0 * PI * 7.9e3;
        for n in [0, 5, 100] {
            let p = evolve_single_phonon(kappa, 0.0, n, PI / kappa).unwrap();
            assert!((p - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_negative_arguments() {
        assert!(evolve_single_phonon(1.0, 0.0, -1, 1.0).is_err());
        assert!(evolve_single_phonon(1.0, 0.0, 1, -1.0).is_err());
    }

    #[test]
    fn propagator_matches_taylor_series() {
        let h = Hermitian2 { d1: 0.7, d2: -1.3, off: Complex64::new(0.4, -0.9) };
        for t in [0.0, 0.3, 2.0, 11.0] {
            let a = h.propagator(t);
            let b = taylor_propagator(&h, t);
            for i in 0..2 {
                for j in 0..2 {
                    assert!((a[i][j] - b[i][j]).norm() < 1e-10, "t={t} ({i},{j})");
                }
            }
        }
        let h = Hermitian2 { d1: -2.0, d2: 0.5, off: Complex64::new(0.0, 0.0) };
        let u = h.propagator(1.5);
        assert!((u[0][0] - Complex64::from_polar(1.0, 3.0)).norm() < 1e-14);
        assert_eq!(u[0][1], Complex64::new(0.0, 0.0));
    }

    proptest! {
        #[test]
        fn unitarity_is_preserved(
            kappa in 1.0f64..1e5,
            chi in -10.0f64..10.0,
            n_s in 0i64..2000,
            periods in 0.0f64..1e5,
        ) {
            let t = periods * 2.0 * PI / kappa;
            let state = evolve_state(kappa, chi, n_s, t).unwrap();
            prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn general_hermitian_propagator_is_unitary(
            d1 in -10.0f64..10.0, d2 in -10.0f64..10.0,
            re in -10.0f64..10.0, im in -10.0f64..10.0, t in 0.0f64..1e3,
        ) {
            let h = Hermitian2 { d1, d2, off: Complex64::new(re, im) };
            let u = h.propagator(t);
            for (a, b) in [(0, 0), (0, 1), (1, 1)] {
                let dot = u[0][a].conj() * u[0][b] + u[1][a].conj() * u[1][b];
                let expect = if a == b { 1.0 } else { 0.0 };
                prop_assert!((dot - Complex64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
    }
}
