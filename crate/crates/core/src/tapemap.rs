//! The per-collision channel acting on tape qubits and its second-order
//! spectral perturbation theory.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{qubit_spectrum, TapeQubitState};
use crate::steady::SteadyState;

/// Spectral gaps below this value make non-degenerate perturbation theory unusable.
pub const DEGENERACY_GAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MapOutput {
    pub state: TapeQubitState,
    pub lambda2_minus: f64,
    pub lambda2_plus: f64,
}

fn lowering() -> Matrix2<Complex64> {
    let (z, o) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    Matrix2::new(z, o, z, z)
}

/// D[L]ρ = LρL† − ½{L†L, ρ}
pub fn dissipator(l: &Matrix2<Complex64>, rho: &Matrix2<Complex64>) -> Matrix2<Complex64> {
    let ld = l.adjoint();
    let ldl = ld * l;
    l * rho * ld - (ldl * rho + rho * ldl) * Complex64::new(0.5, 0.0)
}

/// Hamiltonian-like operator of the first-order term, π_c*·σ⁺ + π_c·σ⁻.
fn drive_operator(pi: &SteadyState) -> Matrix2<Complex64> {
    let sm = lowering();
    sm.adjoint() * pi.pi_c.conj() + sm * pi.pi_c
}

/// Second-order generator K(ρ) = π10·D[σ⁻]ρ + π01·D[σ⁺]ρ.
fn second_order_term(pi: &SteadyState, rho: &Matrix2<Complex64>) -> Matrix2<Complex64> {
    let sm = lowering();
    dissipator(&sm, rho) * Complex64::new(pi.pi10, 0.0)
        + dissipator(&sm.adjoint(), rho) * Complex64::new(pi.pi01, 0.0)
}

/// Output density matrix of one collision against the stationary machine.
pub fn apply_map_matrix(pi: &SteadyState, tape: &TapeQubitState, phi: f64) -> Matrix2<Complex64> {
    let rho = tape.density_matrix();
    let b = drive_operator(pi);
    let commutator = b * rho - rho * b;
    rho - commutator * Complex64::new(0.0, phi) + second_order_term(pi, &rho) * Complex64::from(phi * phi)
}

pub fn apply_map(pi: &SteadyState, tape: &TapeQubitState, phi: f64) -> TapeQubitState {
    TapeQubitState::from_density_matrix(&apply_map_matrix(pi, tape, phi))
}

/// Eigenvalues of a 2×2 Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &Matrix2<Complex64>) -> (f64, f64) {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)].conj());
    let mean = 0.5 * (a + d);
    let half = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    (mean - half, mean + half)
}

/// Von Neumann entropy (natural log) with 0·ln 0 = 0.
pub fn von_neumann_entropy(m: &Matrix2<Complex64>) -> f64 {
    let (a, b) = hermitian_eigenvalues(m);
    [a, b]
        .into_iter()
        .filter(|&l| l > 0.0)
        .map(|l| -l * l.ln())
        .sum()
}

/// Ergotropy of a qubit state with the given gap: p1·gap − λ_min·gap.
pub fn qubit_ergotropy(m: &Matrix2<Complex64>, gap: f64) -> f64 {
    let (lm, _) = hermitian_eigenvalues(m);
    (m[(1, 1)].re - lm.max(0.0)) * gap
}

/// Orthonormal eigenvectors (|λ₋⟩, |λ₊⟩) of the tape state.
///
/// Phase convention: the component of |λ₊⟩ along |1⟩ is real and
/// non-negative when p1 ≥ p0, and the component along |0⟩ otherwise.
fn eigenbasis(tape: &TapeQubitState) -> (Vector2<Complex64>, Vector2<Complex64>) {
    let (lp, _) = qubit_spectrum(tape);
    let (p0, p1, c) = (tape.p0(), tape.p1(), tape.c());
    let plus = if p1 >= p0 {
        // first row of (ρ − λ₊)v = 0: (p0 − λ₊)v0 + c·v1 = 0
        Vector2::new(c, Complex64::new(lp - p0, 0.0))
    } else {
        Vector2::new(Complex64::new(lp - p1, 0.0), c.conj())
    };
    let plus = plus / Complex64::new(plus.norm(), 0.0);
    let minus = Vector2::new(-plus[1].conj(), plus[0].conj());
    (minus, plus)
}

/// Second-order eigenvalue shifts (λ₋⁽²⁾, λ₊⁽²⁾), in units of φ².
pub fn second_order_shifts(pi: &SteadyState, tape: &TapeQubitState) -> Result<(f64, f64)> {
    let (lp, lm) = qubit_spectrum(tape);
    let gap = lp - lm;
    if gap < DEGENERACY_GAP {
        return Err(Error::DegenerateSpectrum { gap });
    }
    let (vm, vp) = eigenbasis(tape);
    let rho = tape.density_matrix();
    let k = second_order_term(pi, &rho);
    let b = drive_operator(pi);
    let expect = |u: &Vector2<Complex64>, m: &Matrix2<Complex64>, v: &Vector2<Complex64>| {
        (u.adjoint() * m * v)[(0, 0)]
    };
    let coupling = expect(&vp, &b, &vm).norm_sqr();
    let l2m = expect(&vm, &k, &vm).re - (lp - lm) * coupling;
    let l2p = expect(&vp, &k, &vp).re - (lm - lp) * coupling;
    Ok((l2m, l2p))
}

pub fn map_output(pi: &SteadyState, tape: &TapeQubitState, phi: f64) -> Result<MapOutput> {
    let (lambda2_minus, lambda2_plus) = second_order_shifts(pi, tape)?;
    Ok(MapOutput {
        state: apply_map(pi, tape, phi),
        lambda2_minus,
        lambda2_plus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gibbs_qubit, virtual_beta, MachineConfig};
    use crate::steady::{build_dynamical_matrix, solve_steady_state};
    use crate::testutil::{config_strategy, fig3, tape, tape_strategy};
    use approx::assert_relative_eq;

    fn stationary(cfg: &MachineConfig, t: &TapeQubitState) -> SteadyState {
        solve_steady_state(&build_dynamical_matrix(cfg, t)).unwrap()
    }

    fn trace_norm(m: &Matrix2<Complex64>) -> f64 {
        let (a, b) = hermitian_eigenvalues(m);
        a.abs() + b.abs()
    }

    #[test]
    fn zero_strength_is_identity() {
        let cfg = fig3();
        let t = tape(0.3, 0.2);
        let out = apply_map_matrix(&stationary(&cfg, &t), &t, 0.0);
        assert_eq!(out, t.density_matrix());
    }

    #[test]
    fn trace_is_exactly_one() {
        let cfg = fig3();
        let t = TapeQubitState::new(0.7, Complex64::new(-0.1, 0.3)).unwrap();
        let out = apply_map_matrix(&stationary(&cfg, &t), &t, 0.08);
        assert_eq!((out[(0, 0)] + out[(1, 1)]).re, 1.0);
    }

    #[test]
    fn virtual_gibbs_is_fixed_point() {
        let cfg = fig3();
        let tv = gibbs_qubit(virtual_beta(&cfg), 1.0);
        let pi = stationary(&cfg, &tv);
        let out = apply_map_matrix(&pi, &tv, cfg.phi());
        assert!(trace_norm(&(out - tv.density_matrix())) <= 10.0 * cfg.phi().powi(3));
        // equilibrium: both shifts vanish
        let (a, b) = second_order_shifts(&pi, &tv).unwrap();
        assert!(a.abs() < 1e-15 && b.abs() < 1e-15);
    }

    #[test]
    fn degenerate_spectrum_is_rejected() {
        let cfg = fig3();
        let t = tape(0.5, 0.0);
        assert!(matches!(
            second_order_shifts(&stationary(&cfg, &t), &t),
            Err(Error::DegenerateSpectrum { .. })
        ));
    }

    #[test]
    fn shift_matches_finite_difference_fig3() {
        let cfg = fig3();
        let t = tape(0.5, 0.4);
        let pi = stationary(&cfg, &t);
        let (l2m, _) = second_order_shifts(&pi, &t).unwrap();
        let phi = cfg.phi();
        let (lm_out, _) = hermitian_eigenvalues(&apply_map_matrix(&pi, &t, phi));
        let fd = (lm_out - qubit_spectrum(&t).1) / (phi * phi);
        assert!((fd / l2m - 1.0).abs() <= 0.05 * phi);
    }

    #[test]
    fn perturbation_residual_is_cubic() {
        let cfg = fig3();
        let t = TapeQubitState::new(0.35, Complex64::new(0.2, 0.25)).unwrap();
        let pi = stationary(&cfg, &t);
        let (l2m, _) = second_order_shifts(&pi, &t).unwrap();
        let lm = qubit_spectrum(&t).1;
        let resid: Vec<f64> = [0.04, 0.02, 0.01]
            .iter()
            .map(|&phi| {
                let (out, _) = hermitian_eigenvalues(&apply_map_matrix(&pi, &t, phi));
                (out - lm - phi * phi * l2m).abs()
            })
            .collect();
        for w in resid.windows(2) {
            let ratio = w[0] / w[1];
            assert!((6.0..10.0).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn eigenbasis_is_orthonormal_and_diagonalizes() {
        let t = TapeQubitState::new(0.2, Complex64::new(0.1, -0.3)).unwrap();
        let (vm, vp) = eigenbasis(&t);
        let rho = t.density_matrix();
        let (lp, lm) = qubit_spectrum(&t);
        assert!((rho * vp - vp * Complex64::new(lp, 0.0)).norm() < 1e-14);
        assert!((rho * vm - vm * Complex64::new(lm, 0.0)).norm() < 1e-14);
        assert!((vm.adjoint() * vp)[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn entropy_and_ergotropy_helpers() {
        let mixed = tape(0.5, 0.0).density_matrix();
        assert_relative_eq!(von_neumann_entropy(&mixed), 2f64.ln(), epsilon = 1e-15);
        let pure = tape(0.5, 0.5).density_matrix();
        assert!(von_neumann_entropy(&pure).abs() < 1e-15);
        assert_relative_eq!(qubit_ergotropy(&pure, 2.0), 1.0, epsilon = 1e-15);
        assert!(qubit_ergotropy(&tape(0.3, 0.0).density_matrix(), 1.0).abs() < 1e-15);
        assert_relative_eq!(qubit_ergotropy(&tape(1.0, 0.0).density_matrix(), 1.0), 1.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn shifts_sum_to_zero(cfg in config_strategy(), t in tape_strategy()) {
                let pi = stationary(&cfg, &t);
                if let Ok((a, b)) = second_order_shifts(&pi, &t) {
                    prop_assert!((a + b).abs() < 1e-12);
                }
            }

            #[test]
            fn shifts_are_phase_invariant(cfg in config_strategy(), t in tape_strategy(), th in 0.0f64..6.3) {
                let a = second_order_shifts(&stationary(&cfg, &t), &t);
                let u = t.with_phase(th);
                let b = second_order_shifts(&stationary(&cfg, &u), &u);
                if let (Ok(a), Ok(b)) = (a, b) {
                    prop_assert!((a.0 - b.0).abs() < 1e-10 * (1.0 + a.0.abs()));
                }
            }

            #[test]
            fn output_is_a_state(cfg in config_strategy(), t in tape_strategy()) {
                let out = apply_map_matrix(&stationary(&cfg, &t), &t, cfg.phi());
                let (lo, _) = hermitian_eigenvalues(&out);
                prop_assert!(lo >= -1e-12);
            }

            // The channel is contractive in trace distance against a frozen machine state.
            #[test]
            fn contractive_for_frozen_machine(cfg in config_strategy(), a in tape_strategy(), b in tape_strategy()) {
                let pi = stationary(&cfg, &a);
                let before = trace_norm(&(a.density_matrix() - b.density_matrix()));
                let after = trace_norm(&(apply_map_matrix(&pi, &a, cfg.phi()) - apply_map_matrix(&pi, &b, cfg.phi())));
                prop_assert!(after <= before * (1.0 + 1e-12));
            }
        }
    }
}
