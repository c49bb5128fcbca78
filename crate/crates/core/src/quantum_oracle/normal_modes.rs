use serde::Serialize;

use crate::error::{require_positive, Error, Result};
use crate::trap_physics::{axial_freq_to_distance, DistanceConvention, TrapConfig, CONSTANTS};

/// Central-difference step for the potential Hessian, m.
pub const HESSIAN_STEP: f64 = 1e-9;

const FORCE_BALANCE_TOL: f64 = 1e-10;

/// Two ions in a harmonic trap. Coordinates are (x, y, z) in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IonCrystal {
    pub positions: [[f64; 3]; 2],
    /// (ω_x, ω_y, ω_z) in rad/s; ω_x is carried along but unused.
    pub trap_frequencies: [f64; 3],
    pub mass: f64,
}

impl IonCrystal {
    /// Equilibrium configuration for `config`, ions at z = ±d₀/2.
    pub fn equilibrium(config: &TrapConfig) -> Result<Self> {
        config.validate()?;
        let d0 = axial_freq_to_distance(config.omega_z, config.mass, DistanceConvention::Exact)?;
        Ok(Self {
            positions: [[0.0, 0.0, -0.5 * d0], [0.0, 0.0, 0.5 * d0]],
            trap_frequencies: [config.omega_y, config.omega_y, config.omega_z],
            mass: config.mass,
        })
    }

    pub fn separation(&self) -> f64 {
        let [a, b] = self.positions;
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    }

    /// Relative imbalance between trap force and Coulomb repulsion on each ion.
    pub fn force_imbalance(&self) -> f64 {
        let d = self.separation();
        let wz = self.trap_frequencies[2];
        let trap = self.mass * wz * wz * 0.5 * d;
        let coulomb = CONSTANTS.coulomb_constant() / (d * d);
        (trap - coulomb).abs() / trap
    }

    fn check_equilibrium(&self) -> Result<()> {
        require_positive("mass", self.mass)?;
        require_positive("omega_y", self.trap_frequencies[1])?;
        require_positive("omega_z", self.trap_frequencies[2])?;
        let [a, b] = self.positions;
        let centred = (a[2] + b[2]).abs() <= 1e-12 * self.separation();
        let on_axis = a[0] == 0.0 && a[1] == 0.0 && b[0] == 0.0 && b[1] == 0.0;
        let imbalance = self.force_imbalance();
        if !(centred && on_axis && imbalance < FORCE_BALANCE_TOL) {
            return Err(Error::Precondition(format!(
                "crystal is not at equilibrium (relative force imbalance {imbalance:.3e})"
            )));
        }
        Ok(())
    }
}

/// Total potential energy, J, for displacements (y₁, y₂, z₁, z₂) from the
/// crystal's stored positions.
pub fn potential_energy(crystal: &IonCrystal, displacement: [f64; 4]) -> f64 {
    let [_, wy, wz] = crystal.trap_frequencies;
    let [a, b] = crystal.positions;
    let (y1, y2) = (a[1] + displacement[0], b[1] + displacement[1]);
    let (z1, z2) = (a[2] + displacement[2], b[2] + displacement[3]);
    let trap = 0.5 * crystal.mass * (wy * wy * (y1 * y1 + y2 * y2) + wz * wz * (z1 * z1 + z2 * z2));
    let r = ((y1 - y2).powi(2) + (z1 - z2).powi(2) + (a[0] - b[0]).powi(2)).sqrt();
    trap + CONSTANTS.coulomb_constant() / r
}

/// Finite-difference Hessian of [`potential_energy`] at zero displacement,
/// before symmetrisation.
pub fn potential_hessian(crystal: &IonCrystal, step: f64) -> [[f64; 4]; 4] {
    let u = |d: [f64; 4]| potential_energy(crystal, d);
    let shifted = |moves: &[(usize, f64)]| {
        let mut d = [0.0; 4];
        for &(i, s) in moves {
            d[i] += s;
        }
        d
    };
    let h = step;
    let centre = u([0.0; 4]);
    let mut hess = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            hess[i][j] = if i == j {
                (u(shifted(&[(i, h)])) - 2.0 * centre + u(shifted(&[(i, -h)]))) / (h * h)
            } else {
                (u(shifted(&[(i, h), (j, h)])) - u(shifted(&[(i, h), (j, -h)])) - u(shifted(&[(i, -h), (j, h)]))
                    + u(shifted(&[(i, -h), (j, -h)])))
                    / (4.0 * h * h)
            };
        }
    }
    hess
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues<const N: usize>(matrix: [[f64; N]; N]) -> Vec<f64> {
    let mut a = matrix;
    let scale = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..N).flat_map(|i| (0..N).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..N {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..N {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..N).map(|i| a[i][i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Angular frequencies of the four (y, z) normal modes, ascending.
///
/// For a stable two-ion chain these are ω_z, √3 ω_z, √(ω_y² − ω_z²), ω_y.
pub fn classical_normal_modes(crystal: &IonCrystal) -> Result<Vec<f64>> {
    crystal.check_equilibrium()?;
    let raw = potential_hessian(crystal, HESSIAN_STEP);
    let mut sym = raw;
    for i in 0..4 {
        for j in 0..4 {
            sym[i][j] = 0.5 * (raw[i][j] + raw[j][i]);
        }
    }
    let eigenvalues = jacobi_eigenvalues(sym);
    if let Some(&lowest) = eigenvalues.first() {
        if lowest < 0.0 {
            return Err(Error::Instability(format!("negative curvature {lowest:.3e} J/m^2")));
        }
    }
    Ok(eigenvalues.into_iter().map(|k| (k / crystal.mass).sqrt()).collect())
}
