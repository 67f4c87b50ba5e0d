use nalgebra::{Matrix5, SymmetricEigen};

use crate::error::Result;
use crate::maxwellian::FluidState;

/// Result of checking the symmetrizer of the difference system.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetrizerReport {
    pub a0_spd: bool,
    pub ai_symmetric: bool,
    pub min_a0_eig: f64,
    pub max_asymmetry: f64,
    /// `max |A0 M_i - A_i|`, where `M_i` is the principal symbol of the
    /// linearized system in `(σ_d, u_d, θ_d)`.
    pub max_symmetrization_defect: f64,
}

/// `A0 = diag(T/ρ, ρ, ρ, ρ, 3ρ/(2T))`.
pub fn symmetrizer_a0(rho: f64, temp: f64) -> Matrix5<f64> {
    Matrix5::from_diagonal(&nalgebra::Vector5::new(temp / rho, rho, rho, rho, 1.5 * rho / temp))
}

/// Flux matrix `A_i` for the unknowns `(σ_d, u_d, θ_d)`.
pub fn flux_matrix(rho: f64, u: [f64; 3], temp: f64, axis: usize) -> Matrix5<f64> {
    let ui = u[axis];
    let mut a = Matrix5::zeros();
    a[(0, 0)] = temp / rho * ui;
    a[(0, 1 + axis)] = temp;
    a[(1 + axis, 0)] = temp;
    for d in 0..3 {
        a[(1 + d, 1 + d)] = rho * ui;
    }
    a[(1 + axis, 4)] = rho;
    a[(4, 1 + axis)] = rho;
    a[(4, 4)] = 1.5 * rho / temp * ui;
    a
}

/// Principal symbol along `axis` of the system before symmetrization.
fn principal_symbol(rho: f64, u: [f64; 3], temp: f64, axis: usize) -> Matrix5<f64> {
    let ui = u[axis];
    let mut m = Matrix5::from_diagonal_element(ui);
    m[(0, 1 + axis)] = rho;
    m[(1 + axis, 0)] = temp / rho;
    m[(1 + axis, 4)] = 1.0;
    m[(4, 1 + axis)] = 2.0 / 3.0 * temp;
    m
}

pub fn check_symmetrizer(state: &FluidState) -> Result<SymmetrizerReport> {
    state.validate()?;
    let mut report = SymmetrizerReport {
        a0_spd: true,
        ai_symmetric: true,
        min_a0_eig: f64::INFINITY,
        max_asymmetry: 0.0,
        max_symmetrization_defect: 0.0,
    };
    for ix in 0..state.len() {
        let (rho, u, temp) = state.at(ix);
        let a0 = symmetrizer_a0(rho, temp);
        let eig = SymmetricEigen::new(a0).eigenvalues.min();
        report.min_a0_eig = report.min_a0_eig.min(eig);
        for axis in 0..3 {
            let a = flux_matrix(rho, u, temp, axis);
            report.max_asymmetry = report.max_asymmetry.max((a - a.transpose()).amax());
            let defect = (a0 * principal_symbol(rho, u, temp, axis) - a).amax();
            report.max_symmetrization_defect = report.max_symmetrization_defect.max(defect);
        }
    }
    report.a0_spd = report.min_a0_eig > 0.0;
    report.ai_symmetric = report.max_asymmetry == 0.0;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_state() {
        let st = FluidState::constant(3, 1.0, [0.0; 3], 1.0);
        let r = check_symmetrizer(&st).unwrap();
        assert!(r.a0_spd && r.ai_symmetric);
        assert_eq!(r.min_a0_eig, 1.0);
        let a0 = symmetrizer_a0(1.0, 1.0);
        assert_eq!(a0[(0, 0)], 1.0);
        assert_eq!(a0[(4, 4)], 1.5);
        let a1 = flux_matrix(1.0, [0.0; 3], 1.0, 0);
        let nonzero: Vec<(usize, usize)> =
            (0..5).flat_map(|i| (0..5).map(move |j| (i, j))).filter(|&(i, j)| a1[(i, j)] != 0.0).collect();
        assert_eq!(nonzero, vec![(0, 1), (1, 0), (1, 4), (4, 1)]);
    }

    #[test]
    fn random_states_are_symmetrized() {
        let mut st = FluidState::constant(50, 1.0, [0.0; 3], 1.0);
        for i in 0..50 {
            let x = i as f64;
            st.rho[i] = 0.5 + (0.37 * x).sin().abs();
            st.temp[i] = 0.3 + (0.91 * x).cos().abs();
            st.u[0][i] = (1.3 * x).sin();
            st.u[1][i] = (0.2 * x).cos() - 0.4;
            st.u[2][i] = 2.0 * (0.7 * x).sin();
        }
        let r = check_symmetrizer(&st).unwrap();
        assert!(r.a0_spd && r.ai_symmetric);
        assert_eq!(r.max_asymmetry, 0.0);
        assert!(r.max_symmetrization_defect < 1e-14);
    }

    #[test]
    fn rejects_non_positive_density() {
        let st = FluidState::constant(2, -1.0, [0.0; 3], 1.0);
        assert!(check_symmetrizer(&st).is_err());
    }
}
