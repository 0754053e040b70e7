//! Exact (non-perturbative in the spectrum) per-collision changes of the tape
//! qubit, obtained by diagonalizing the map output directly.

use crate::model::TapeQubitState;
use crate::steady::SteadyState;
use crate::tapemap::{apply_map_matrix, qubit_ergotropy, von_neumann_entropy};

/// r·(S(E(ρ)) − S(ρ)).
pub fn exact_map_entropy_delta(pi: &SteadyState, tape: &TapeQubitState, phi: f64, r: f64) -> f64 {
    let out = apply_map_matrix(pi, tape, phi);
    r * (von_neumann_entropy(&out) - von_neumann_entropy(&tape.density_matrix()))
}

/// r·(W(E(ρ)) − W(ρ)) for a qubit of gap `e_q`.
pub fn exact_map_ergotropy_delta(
    pi: &SteadyState,
    tape: &TapeQubitState,
    phi: f64,
    r: f64,
    e_q: f64,
) -> f64 {
    let out = apply_map_matrix(pi, tape, phi);
    r * (qubit_ergotropy(&out, e_q) - qubit_ergotropy(&tape.density_matrix(), e_q))
}

/// r·E_q·(⟨1|E(ρ)|1⟩ − p1).
pub fn exact_map_energy_delta(
    pi: &SteadyState,
    tape: &TapeQubitState,
    phi: f64,
    r: f64,
    e_q: f64,
) -> f64 {
    let out = apply_map_matrix(pi, tape, phi);
    r * e_q * (out[(1, 1)].re - tape.p1())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gibbs_qubit, virtual_beta};
    use crate::steady::{build_dynamical_matrix, solve_steady_state};
    use crate::testutil::{fig3, tape};

    #[test]
    fn zero_strength_changes_nothing() {
        let cfg = fig3();
        let t = tape(0.3, 0.2);
        let pi = solve_steady_state(&build_dynamical_matrix(&cfg, &t)).unwrap();
        assert_eq!(exact_map_entropy_delta(&pi, &t, 0.0, 2.0), 0.0);
        assert_eq!(exact_map_ergotropy_delta(&pi, &t, 0.0, 2.0, 1.0), 0.0);
    }

    #[test]
    fn virtual_gibbs_entropy_change_is_third_order() {
        let cfg = fig3();
        let tv = gibbs_qubit(virtual_beta(&cfg), 1.0);
        let pi = solve_steady_state(&build_dynamical_matrix(&cfg, &tv)).unwrap();
        let phi = cfg.phi();
        assert!(exact_map_entropy_delta(&pi, &tv, phi, 1.0).abs() <= phi.powi(3));
    }
}
