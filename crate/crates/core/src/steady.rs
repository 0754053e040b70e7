//! Reduced dynamics of the machine and its unique stationary state.
//!
//! The machine basis is |ij⟩ with i the cold qubit and j the hot qubit. The
//! stationary state only populates the diagonal and the virtual-qubit
//! coherence ρ_v = ⟨10|ρ|01⟩, so the generator closes on the six-component
//! vector P = (ρ00, ρ01, ρ10, ρ11, ρ_v, ρ_v*).

use nalgebra::{Matrix4, SMatrix, SVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{bath_rates, tape_rates, MachineConfig, TapeQubitState};

pub type Matrix6c = SMatrix<Complex64, 6, 6>;
pub type Vector6c = SVector<Complex64, 6>;

pub const I00: usize = 0;
pub const I01: usize = 1;
pub const I10: usize = 2;
pub const I11: usize = 3;
pub const IV: usize = 4;
pub const IVC: usize = 5;

/// Condition estimate above which the bordered linear solve is abandoned in
/// favour of a singular value decomposition.
const COND_LIMIT: f64 = 1e12;
/// Relative singular-value threshold for counting kernel directions.
const KERNEL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicalMatrix {
    pub entries: Matrix6c,
}

/// All rates entering the dynamical matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct MatrixRates {
    pub cold_up: f64,
    pub cold_down: f64,
    pub hot_up: f64,
    pub hot_down: f64,
    pub tape_up: f64,
    pub tape_down: f64,
    /// r·φ·c
    pub drive: Complex64,
}

impl MatrixRates {
    pub fn new(config: &MachineConfig, tape: &TapeQubitState) -> Self {
        let cold = bath_rates(config.beta_c(), config.e_c(), config.gamma0());
        let hot = bath_rates(config.beta_h(), config.e_h(), config.gamma0());
        let q = tape_rates(config, tape);
        MatrixRates {
            cold_up: cold.up,
            cold_down: cold.down,
            hot_up: hot.up,
            hot_down: hot.down,
            tape_up: q.up,
            tape_down: q.down,
            drive: tape.c() * (config.r() * config.phi()),
        }
    }

    pub fn assemble(&self) -> DynamicalMatrix {
        let re = |x: f64| Complex64::new(x, 0.0);
        let i = Complex64::i();
        let (cu, cd, hu, hd) = (self.cold_up, self.cold_down, self.hot_up, self.hot_down);
        let (qu, qd) = (self.tape_up, self.tape_down);
        let g = self.drive;
        let mut m = Matrix6c::zeros();

        // local baths: cold flips the first index, hot the second
        m[(I00, I00)] = re(-(cu + hu));
        m[(I00, I01)] = re(hd);
        m[(I00, I10)] = re(cd);
        m[(I01, I01)] = re(-(hd + cu) - qd);
        m[(I01, I00)] = re(hu);
        m[(I01, I11)] = re(cd);
        m[(I10, I10)] = re(-(cd + hu) - qu);
        m[(I10, I00)] = re(cu);
        m[(I10, I11)] = re(hd);
        m[(I11, I11)] = re(-(cd + hd));
        m[(I11, I01)] = re(cu);
        m[(I11, I10)] = re(hu);

        // tape-induced incoherent transfer inside the virtual qubit
        m[(I10, I01)] += re(qd);
        m[(I01, I10)] += re(qu);

        // coherent drive of the virtual qubit
        m[(I10, IV)] = i * g.conj();
        m[(I10, IVC)] = -i * g;
        m[(I01, IV)] = -i * g.conj();
        m[(I01, IVC)] = i * g;
        m[(IV, I01)] = -i * g;
        m[(IV, I10)] = i * g;
        m[(IVC, I01)] = i * g.conj();
        m[(IVC, I10)] = -i * g.conj();

        let dephasing = -0.5 * (qu + qd) - 0.5 * (cu + cd + hu + hd);
        m[(IV, IV)] = re(dephasing);
        m[(IVC, IVC)] = re(dephasing);
        DynamicalMatrix { entries: m }
    }
}

pub fn build_dynamical_matrix(config: &MachineConfig, tape: &TapeQubitState) -> DynamicalMatrix {
    MatrixRates::new(config, tape).assemble()
}

impl DynamicalMatrix {
    pub fn norm_inf(&self) -> f64 {
        (0..6)
            .map(|r| (0..6).map(|c| self.entries[(r, c)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// ‖M·Π‖∞ for a stationary state.
    pub fn residual(&self, pi: &SteadyState) -> f64 {
        (self.entries * pi.as_vector()).camax()
    }
}

/// Stationary machine state: four populations and the virtual-qubit coherence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyState {
    pub pi00: f64,
    pub pi01: f64,
    pub pi10: f64,
    pub pi11: f64,
    /// ⟨10|π|01⟩
    pub pi_c: Complex64,
}

impl SteadyState {
    fn from_kernel(v: &Vector6c) -> Self {
        let norm: Complex64 = v[I00] + v[I01] + v[I10] + v[I11];
        let v = v / norm;
        SteadyState {
            pi00: v[I00].re,
            pi01: v[I01].re,
            pi10: v[I10].re,
            pi11: v[I11].re,
            pi_c: 0.5 * (v[IV] + v[IVC].conj()),
        }
    }

    pub fn as_vector(&self) -> Vector6c {
        let re = |x: f64| Complex64::new(x, 0.0);
        Vector6c::from([
            re(self.pi00),
            re(self.pi01),
            re(self.pi10),
            re(self.pi11),
            self.pi_c,
            self.pi_c.conj(),
        ])
    }

    /// Full 4×4 density operator, index 2·i + j for |ij⟩.
    pub fn density_matrix(&self) -> Matrix4<Complex64> {
        let mut rho = Matrix4::zeros();
        rho[(I00, I00)] = self.pi00.into();
        rho[(I01, I01)] = self.pi01.into();
        rho[(I10, I10)] = self.pi10.into();
        rho[(I11, I11)] = self.pi11.into();
        rho[(I10, I01)] = self.pi_c;
        rho[(I01, I10)] = self.pi_c.conj();
        rho
    }

    pub fn trace(&self) -> f64 {
        self.pi00 + self.pi01 + self.pi10 + self.pi11
    }
}

fn one_norm(m: &Matrix6c) -> f64 {
    (0..6)
        .map(|c| (0..6).map(|r| m[(r, c)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Unique normalized kernel of `m`.
///
/// The first population row is redundant (trace preservation), so it is
/// replaced by the normalization condition and the bordered system is solved
/// by LU. Ill-conditioned cases go through an SVD, which also detects a
/// non-unique kernel.
pub fn solve_steady_state(m: &DynamicalMatrix) -> Result<SteadyState> {
    let mut a = m.entries;
    for c in 0..6 {
        a[(0, c)] = if c < 4 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
    }
    let mut rhs = Vector6c::zeros();
    rhs[0] = Complex64::new(1.0, 0.0);

    let lu = a.lu();
    if let Some(inv) = lu.try_inverse() {
        let cond = one_norm(&a) * one_norm(&inv);
        if cond.is_finite() && cond <= COND_LIMIT {
            let v = inv * rhs;
            return Ok(SteadyState::from_kernel(&v));
        }
    }
    solve_by_svd(m)
}

fn solve_by_svd(m: &DynamicalMatrix) -> Result<SteadyState> {
    let svd = m.entries.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors were requested");
    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let sigma_min = svd.singular_values[order[0]];
    let sigma_next = svd.singular_values[order[1]];
    let scale = m.norm_inf().max(f64::MIN_POSITIVE);
    if sigma_min > KERNEL_TOL * scale || sigma_next <= KERNEL_TOL * scale {
        return Err(Error::DegenerateSteadyState {
            sigma_min,
            sigma_next,
        });
    }
    let row = v_t.row(order[0]);
    let v = Vector6c::from_fn(|k, _| row[k].conj());
    Ok(SteadyState::from_kernel(&v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gibbs_qubit, virtual_beta};
    use approx::assert_relative_eq;

    fn fig3() -> MachineConfig {
        MachineConfig::new(1.0, 0.5, 1.2, 0.06, 0.0025, 2.0, 0.02).unwrap()
    }

    fn tape(p1: f64, c: f64) -> TapeQubitState {
        TapeQubitState::new(p1, Complex64::new(c, 0.0)).unwrap()
    }

    fn population_column_sums(m: &Matrix6c) -> f64 {
        (0..6)
            .map(|c| (0..4).map(|r| m[(r, c)]).sum::<Complex64>().norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn trace_preservation() {
        let m = build_dynamical_matrix(&fig3(), &tape(0.5, 0.4));
        let scale = m.entries.camax();
        assert!(population_column_sums(&m.entries) <= 1e-13 * scale);
    }

    #[test]
    fn conjugate_row_symmetry() {
        let t = TapeQubitState::new(0.4, Complex64::new(0.2, -0.3)).unwrap();
        let m = build_dynamical_matrix(&fig3(), &t).entries;
        let swap = |k: usize| match k {
            IV => IVC,
            IVC => IV,
            k => k,
        };
        for c in 0..6 {
            assert_eq!(m[(IVC, c)], m[(IV, swap(c))].conj());
        }
    }

    #[test]
    fn printed_sign_breaks_trace_preservation() {
        // The tabulated generator carries a minus sign on the 10 -> 01 tape
        // transfer; that choice leaks probability out of the population block.
        let cfg = fig3();
        let t = tape(0.3, 0.2);
        let mut printed = build_dynamical_matrix(&cfg, &t).entries;
        let qd = tape_rates(&cfg, &t).down;
        printed[(I01, I10)] = Complex64::new(-qd, 0.0);
        assert!(population_column_sums(&printed) > 1e-4);
        let derived = build_dynamical_matrix(&cfg, &t).entries;
        assert!(population_column_sums(&derived) < 1e-13 * derived.camax());
    }

    #[test]
    fn dephasing_entry_fig3() {
        let cfg = fig3();
        let t = tape(0.5, 0.4);
        let m = build_dynamical_matrix(&cfg, &t);
        let cold = bath_rates(1.2, 0.5, 0.0025);
        let hot = bath_rates(0.06, 1.5, 0.0025);
        let d = -0.5 * (4e-4 + 4e-4) - 0.5 * (cold.up + cold.down + hot.up + hot.down);
        assert_relative_eq!(m.entries[(IV, IV)].re, d, epsilon = 1e-16);
    }

    #[test]
    fn incoherent_tape_decouples_coherences() {
        let m = build_dynamical_matrix(&fig3(), &tape(0.3, 0.0)).entries;
        for k in 0..4 {
            for v in [IV, IVC] {
                assert_eq!(m[(k, v)], Complex64::new(0.0, 0.0));
                assert_eq!(m[(v, k)], Complex64::new(0.0, 0.0));
            }
        }
        let pi = solve_steady_state(&build_dynamical_matrix(&fig3(), &tape(0.3, 0.0))).unwrap();
        assert!(pi.pi_c.norm() < 1e-13);
    }

    #[test]
    fn decoupled_machine_is_product_gibbs() {
        let cfg = fig3();
        let mut rates = MatrixRates::new(&cfg, &tape(0.8, 0.3));
        rates.tape_up = 0.0;
        rates.tape_down = 0.0;
        rates.drive = Complex64::new(0.0, 0.0);
        let pi = solve_steady_state(&rates.assemble()).unwrap();
        let pc = gibbs_qubit(1.2, 0.5).p1();
        let ph = gibbs_qubit(0.06, 1.5).p1();
        assert_relative_eq!(pi.pi00, (1.0 - pc) * (1.0 - ph), epsilon = 1e-13);
        assert_relative_eq!(pi.pi01, (1.0 - pc) * ph, epsilon = 1e-13);
        assert_relative_eq!(pi.pi10, pc * (1.0 - ph), epsilon = 1e-13);
        assert_relative_eq!(pi.pi11, pc * ph, epsilon = 1e-13);
        assert_eq!(pi.pi_c.norm(), 0.0);
        // |01⟩ is the excited level of the virtual qubit: π01/π10 = exp(-β_v E_q)
        assert_relative_eq!((pi.pi01 / pi.pi10).ln(), -virtual_beta(&cfg), epsilon = 1e-12);
    }

    #[test]
    fn virtual_gibbs_tape_gives_detailed_balance() {
        let cfg = fig3();
        let t = gibbs_qubit(virtual_beta(&cfg), cfg.e_q());
        let pi = solve_steady_state(&build_dynamical_matrix(&cfg, &t)).unwrap();
        assert!((pi.pi01 * t.p0() - pi.pi10 * t.p1()).abs() < 1e-15);
        assert!(pi.pi_c.norm() < 1e-15);
    }

    #[test]
    fn degenerate_kernel_is_reported() {
        let mut rates = MatrixRates::new(&fig3(), &tape(0.3, 0.0));
        rates.cold_up = 0.0;
        rates.cold_down = 0.0;
        rates.hot_up = 0.0;
        rates.hot_down = 0.0;
        let err = solve_steady_state(&rates.assemble()).unwrap_err();
        assert!(matches!(err, Error::DegenerateSteadyState { .. }));
    }

    #[test]
    fn svd_path_agrees_with_lu() {
        let cfg = fig3();
        let m = build_dynamical_matrix(&cfg, &TapeQubitState::new(0.45, Complex64::new(0.1, 0.35)).unwrap());
        let a = solve_steady_state(&m).unwrap();
        let b = solve_by_svd(&m).unwrap();
        assert!((a.as_vector() - b.as_vector()).camax() < 1e-12);
    }

    #[test]
    fn fig3_point_is_positive_and_normalized() {
        let m = build_dynamical_matrix(&fig3(), &tape(0.5, 0.4));
        let pi = solve_steady_state(&m).unwrap();
        assert_relative_eq!(pi.trace(), 1.0, epsilon = 1e-14);
        assert!(m.residual(&pi) <= 1e-11 * m.norm_inf());
        assert!(pi.pi_c.norm_sqr() <= pi.pi01 * pi.pi10);
    }

    mod props {
        use super::*;
        use crate::testutil::{config_strategy, tape_strategy};
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(512))]

            #[test]
            fn kernel_residual_and_positivity(cfg in config_strategy(), t in tape_strategy()) {
                let m = build_dynamical_matrix(&cfg, &t);
                let pi = solve_steady_state(&m).unwrap();
                prop_assert!(m.residual(&pi) <= 1e-11 * m.norm_inf());
                prop_assert!((pi.trace() - 1.0).abs() < 1e-10);
                let eig = pi.density_matrix().symmetric_eigenvalues();
                prop_assert!(eig.min() >= -1e-12);
            }

            #[test]
            fn phase_covariance(cfg in config_strategy(), t in tape_strategy(), th in 0.0f64..6.3) {
                let a = solve_steady_state(&build_dynamical_matrix(&cfg, &t)).unwrap();
                let b = solve_steady_state(&build_dynamical_matrix(&cfg, &t.with_phase(th))).unwrap();
                prop_assert!((a.pi01 - b.pi01).abs() < 1e-12);
                prop_assert!((a.pi10 - b.pi10).abs() < 1e-12);
                prop_assert!((a.pi00 - b.pi00).abs() < 1e-12);
                prop_assert!((a.pi_c * Complex64::from_polar(1.0, th) - b.pi_c).norm() < 1e-12);
            }
        }
    }
}
