//! Steady-state currents, entropy and free-energy rates, performance figures
//! and operating-regime classification.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{bloch_length, qubit_spectrum, MachineConfig, TapeQubitState};
use crate::steady::SteadyState;

/// Below this Bloch length the entropy rate uses its series expansion.
const SMALL_BLOCH: f64 = 1e-6;
/// Relative margin of the purity bound |c|² ≤ p0·p1·(1 − 1e−9).
const PURITY_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Regime {
    HeatEngine,
    Refrigerator,
    Dissipator,
    Equilibrium,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::HeatEngine => "HeatEngine",
            Regime::Refrigerator => "Refrigerator",
            Regime::Dissipator => "Dissipator",
            Regime::Equilibrium => "Equilibrium",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurrentSet {
    pub delta: f64,
    pub zeta: f64,
    pub e_tape: f64,
    pub q_c: f64,
    pub q_h: f64,
    pub s_tape: f64,
    pub f_tape: f64,
    pub f_classical: f64,
    pub c_coh: f64,
    pub s_tot: f64,
    pub ergotropy_rate: f64,
    pub eta: Option<f64>,
    pub cop: Option<f64>,
    pub eta_carnot: f64,
    pub cop_carnot: f64,
}

impl CurrentSet {
    pub fn eta_over_carnot(&self) -> Option<f64> {
        self.eta.map(|e| e / self.eta_carnot)
    }

    pub fn cop_over_carnot(&self) -> Option<f64> {
        if self.cop_carnot.is_finite() {
            self.cop.map(|e| e / self.cop_carnot)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Performance {
    pub eta: Option<f64>,
    pub cop: Option<f64>,
    pub eta_carnot: f64,
    pub cop_carnot: f64,
}

/// Default classification tolerance, 1e−10·E_q·rφ².
pub fn default_tolerance(config: &MachineConfig) -> f64 {
    1e-10 * config.e_q() * config.tape_scale()
}

/// Incoherent (Δ) and coherent (ζ) parts of the virtual-qubit flux.
pub fn components(pi: &SteadyState, tape: &TapeQubitState, config: &MachineConfig) -> (f64, f64) {
    let k = config.tape_scale();
    let delta = k * (pi.pi01 * tape.p0() - pi.pi10 * tape.p1());
    let zeta = 2.0 * config.r() * config.phi() * (tape.c() * pi.pi_c.conj()).im;
    (delta, zeta)
}

/// (Ė_tape, Q̇_c, Q̇_h)
pub fn energy_currents(delta: f64, zeta: f64, config: &MachineConfig) -> (f64, f64, f64) {
    let j = delta + zeta;
    (config.e_q() * j, -config.e_c() * j, config.e_h() * j)
}

/// Bloch length s and the spectral bracket
/// Y = s²·rφ²|π_c|² + Δ(p1 − p0) − N|c|², with N = rφ²(π01 + π10).
///
/// The second-order shift of the small eigenvalue is rφ²λ₋⁽²⁾ = −Y/s.
fn spectral_bracket(
    pi: &SteadyState,
    tape: &TapeQubitState,
    config: &MachineConfig,
    delta: f64,
) -> Result<(f64, f64)> {
    let p0p1 = tape.p0() * tape.p1();
    let c2 = tape.c().norm_sqr();
    if p0p1 <= 0.0 || c2 > p0p1 * (1.0 - PURITY_MARGIN) * (1.0 + 1e-12) {
        return Err(Error::PureStateBoundary { c2, p0p1 });
    }
    let k = config.tape_scale();
    let s = bloch_length(tape);
    let n = k * (pi.pi01 + pi.pi10);
    let y = s * s * k * pi.pi_c.norm_sqr() + delta * (tape.p1() - tape.p0()) - n * c2;
    Ok((s, y))
}

/// Rate of von Neumann entropy change of the tape qubits.
pub fn entropy_rate(
    pi: &SteadyState,
    tape: &TapeQubitState,
    config: &MachineConfig,
    delta: f64,
) -> Result<f64> {
    let (s, y) = spectral_bracket(pi, tape, config, delta)?;
    if s < SMALL_BLOCH {
        // s·ln((1 − s)/(1 + s))/s² = −2 − 2s²/3 + O(s⁴)
        return Ok(-(2.0 + 2.0 * s * s / 3.0) * y);
    }
    let (lp, lm) = qubit_spectrum(tape);
    Ok((lm / lp).ln() * y / s)
}

pub fn free_energy(e_tape: f64, s_tape: f64, beta_c: f64) -> f64 {
    e_tape - s_tape / beta_c
}

/// Split of the free-energy rate into a population part and a coherence part,
/// returned as (Ḟ̄_tape, Ċ_tape) with Ḟ_tape = Ḟ̄_tape + Ċ_tape/β_c.
pub fn free_energy_split(
    tape: &TapeQubitState,
    config: &MachineConfig,
    delta: f64,
    zeta: f64,
    s_tape: f64,
) -> Result<(f64, f64)> {
    let (p0, p1) = (tape.p0(), tape.p1());
    if p1 <= 0.0 || p0 <= 0.0 {
        return Err(Error::UnboundedTemperature { p1 });
    }
    let s_dephased = (delta + zeta) * (p0 / p1).ln();
    let (e_tape, _, _) = energy_currents(delta, zeta, config);
    Ok((e_tape - s_dephased / config.beta_c(), s_dephased - s_tape))
}

pub fn entropy_production(s_tape: f64, q_c: f64, q_h: f64, config: &MachineConfig) -> f64 {
    s_tape - config.beta_c() * q_c - config.beta_h() * q_h
}

pub fn performance(f_tape: f64, q_c: f64, q_h: f64, config: &MachineConfig, tol: f64) -> Performance {
    let (bc, bh) = (config.beta_c(), config.beta_h());
    Performance {
        eta: (q_h > tol).then(|| f_tape / q_h),
        cop: (f_tape < -tol).then(|| q_c / -f_tape),
        eta_carnot: 1.0 - bh / bc,
        cop_carnot: bc / (bc - bh),
    }
}

/// Ergotropy of a qubit state with the given gap.
pub fn ergotropy(tape: &TapeQubitState, gap: f64) -> f64 {
    let (_, lm) = qubit_spectrum(tape);
    (tape.p1() - lm) * gap
}

/// Rate of ergotropy change of the tape qubits, Ẇ = Ė_tape − rφ²λ₋⁽²⁾E_q.
pub fn ergotropy_rate(
    e_tape: f64,
    pi: &SteadyState,
    tape: &TapeQubitState,
    config: &MachineConfig,
    delta: f64,
) -> Result<f64> {
    let (s, y) = spectral_bracket(pi, tape, config, delta)?;
    if s == 0.0 {
        // maximally mixed input: the output is active only if it gained energy
        return Ok(e_tape + e_tape.abs());
    }
    Ok(e_tape + config.e_q() * y / s)
}

pub fn classify_regime(cs: &CurrentSet, config: &MachineConfig, tol: f64) -> Result<Regime> {
    let f = cs.f_tape;
    if f > tol && cs.q_h > tol {
        Ok(Regime::HeatEngine)
    } else if cs.q_c > tol && f < -tol {
        Ok(Regime::Refrigerator)
    } else if f < -tol && cs.q_h > tol {
        Ok(Regime::Dissipator)
    } else if ((cs.delta + cs.zeta) * config.e_q()).abs() <= tol && f.abs() <= tol {
        Ok(Regime::Equilibrium)
    } else {
        Err(Error::UnclassifiedPoint)
    }
}

/// Same sign rules with the ergotropy rate as the work measure.
pub fn classify_ergotropy_regime(cs: &CurrentSet, config: &MachineConfig, tol: f64) -> Option<Regime> {
    let w = cs.ergotropy_rate;
    if w > tol && cs.q_h > tol {
        Some(Regime::HeatEngine)
    } else if cs.q_c > tol && w < -tol {
        Some(Regime::Refrigerator)
    } else if w < -tol && cs.q_h > tol {
        Some(Regime::Dissipator)
    } else if ((cs.delta + cs.zeta) * config.e_q()).abs() <= tol && w.abs() <= tol {
        Some(Regime::Equilibrium)
    } else {
        None
    }
}

/// Every rate for one operating point, given its stationary machine state.
pub fn current_set(
    config: &MachineConfig,
    tape: &TapeQubitState,
    pi: &SteadyState,
    tol: f64,
) -> Result<CurrentSet> {
    let (delta, zeta) = components(pi, tape, config);
    current_set_from_components(config, tape, pi, delta, zeta, tol)
}

pub(crate) fn current_set_from_components(
    config: &MachineConfig,
    tape: &TapeQubitState,
    pi: &SteadyState,
    delta: f64,
    zeta: f64,
    tol: f64,
) -> Result<CurrentSet> {
    let (e_tape, q_c, q_h) = energy_currents(delta, zeta, config);
    let s_tape = entropy_rate(pi, tape, config, delta)?;
    let f_tape = free_energy(e_tape, s_tape, config.beta_c());
    let (f_classical, c_coh) = free_energy_split(tape, config, delta, zeta, s_tape)?;
    let s_tot = entropy_production(s_tape, q_c, q_h, config);
    let ergotropy_rate = ergotropy_rate(e_tape, pi, tape, config, delta)?;
    let perf = performance(f_tape, q_c, q_h, config, tol);
    Ok(CurrentSet {
        delta,
        zeta,
        e_tape,
        q_c,
        q_h,
        s_tape,
        f_tape,
        f_classical,
        c_coh,
        s_tot,
        ergotropy_rate,
        eta: perf.eta,
        cop: perf.cop,
        eta_carnot: perf.eta_carnot,
        cop_carnot: perf.cop_carnot,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gibbs_qubit, incoherent_tape_beta, virtual_beta};
    use crate::steady::{build_dynamical_matrix, solve_steady_state};
    use crate::tapemap::{apply_map_matrix, qubit_ergotropy, von_neumann_entropy};
    use crate::testutil::{config_strategy, fig3, tape, tape_strategy};
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn eval(cfg: &MachineConfig, t: &TapeQubitState) -> (SteadyState, CurrentSet) {
        let pi = solve_steady_state(&build_dynamical_matrix(cfg, t)).unwrap();
        let cs = current_set(cfg, t, &pi, default_tolerance(cfg)).unwrap();
        (pi, cs)
    }

    fn fig4() -> MachineConfig {
        MachineConfig::new(1.0, 0.8, 1.2, 0.6, 0.0025, 2.0, 0.04).unwrap()
    }

    #[test]
    fn incoherent_tape_has_no_coherent_flux() {
        let cfg = fig3();
        let (_, cs) = eval(&cfg, &tape(0.3, 0.0));
        assert_eq!(cs.zeta, 0.0);
        assert!(cs.c_coh.abs() < 1e-15 * cfg.tape_scale());
        assert!((cs.f_classical - cs.f_tape).abs() < 1e-15 * cfg.tape_scale());
    }

    #[test]
    fn equilibrium_point_is_reversible() {
        let cfg = fig3();
        let tv = gibbs_qubit(virtual_beta(&cfg), 1.0);
        let (_, cs) = eval(&cfg, &tv);
        for x in [cs.delta, cs.zeta, cs.e_tape, cs.s_tape, cs.f_tape, cs.s_tot, cs.ergotropy_rate] {
            assert!(x.abs() < 1e-17, "{cs:?}");
        }
        assert_eq!(classify_regime(&cs, &cfg, default_tolerance(&cfg)).unwrap(), Regime::Equilibrium);
    }

    #[test]
    fn energy_current_sign_logic() {
        let cfg = fig3();
        let (e, qc, qh) = energy_currents(-1e-4, 2e-5, &cfg);
        assert!(e < 0.0 && qc > 0.0 && qh < 0.0);
        assert_eq!(energy_currents(1e-5, -1e-5, &cfg), (0.0, -0.0, 0.0));
    }

    #[test]
    fn maximally_mixed_tape_uses_limit_branch() {
        let cfg = fig3();
        let (_, cs) = eval(&cfg, &tape(0.5, 0.0));
        assert_eq!(cs.s_tape, 0.0);
        assert_eq!(cs.ergotropy_rate, cs.e_tape + cs.e_tape.abs());
    }

    #[test]
    fn incoherent_free_energy_closed_form() {
        let cfg = fig3();
        for p1 in [0.1, 0.3, 0.55, 0.8, 0.95] {
            let t = tape(p1, 0.0);
            let (_, cs) = eval(&cfg, &t);
            let bq = incoherent_tape_beta(&t, 1.0).unwrap();
            let closed = cs.delta * (1.0 - bq / cfg.beta_c());
            assert!((cs.f_tape - closed).abs() <= 1e-12 * cfg.tape_scale());
        }
    }

    #[test]
    fn dephased_split_at_half_population() {
        let (_, cs) = eval(&fig3(), &tape(0.5, 0.3));
        assert_eq!(cs.f_classical, cs.e_tape);
    }

    #[test]
    fn carnot_values() {
        let cfg = MachineConfig::new(1.0, 1.0, 2.0, 0.1, 0.0025, 2.0, 0.02).unwrap();
        let p = performance(0.0, 0.0, 0.0, &cfg, 1e-12);
        assert_relative_eq!(p.eta_carnot, 0.95, epsilon = 1e-15);
        assert!(p.eta.is_none() && p.cop.is_none());
        let cfg = MachineConfig::new(1.0, 1.0, 2.0, 1.0, 0.0025, 2.0, 0.02).unwrap();
        assert_relative_eq!(performance(0.0, 0.0, 0.0, &cfg, 1e-12).cop_carnot, 2.0);
        let cfg = MachineConfig::new(1.0, 1.0, 2.0, 1.0, 0.0025, 2.0, 0.02).unwrap();
        assert_eq!(cfg.beta_c() / (cfg.beta_c() - cfg.beta_h()), 2.0);
    }

    #[test]
    fn ergotropy_examples() {
        assert_eq!(ergotropy(&tape(0.3, 0.0), 1.0), 0.0);
        assert_eq!(ergotropy(&tape(1.0, 0.0), 2.0), 2.0);
        assert_relative_eq!(ergotropy(&tape(0.5, 0.5), 1.0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn ergotropy_rate_vanishes_south_on_incoherent_line() {
        let cfg = fig3();
        let (_, cs) = eval(&cfg, &tape(0.3, 0.0));
        assert!(cs.ergotropy_rate.abs() <= 1e-12 * cfg.tape_scale());
    }

    #[test]
    fn fig3_point_is_heat_engine() {
        let cfg = fig3();
        let (_, cs) = eval(&cfg, &tape(0.5, 0.4));
        assert_eq!(classify_regime(&cs, &cfg, default_tolerance(&cfg)).unwrap(), Regime::HeatEngine);
    }

    #[test]
    fn fig4_south_coherent_point_refrigerates() {
        let cfg = fig4();
        // (0.2, 0.4) is a pure state; take the largest admissible coherence
        let c = (0.16f64 * (1.0 - 2e-9)).sqrt();
        let (_, cs) = eval(&cfg, &tape(0.2, c));
        assert_eq!(classify_regime(&cs, &cfg, default_tolerance(&cfg)).unwrap(), Regime::Refrigerator);
        // cooling here is carried by a negative coherent flux
        assert!(cs.zeta < 0.0);
    }

    #[test]
    fn incoherent_regime_boundaries() {
        let cfg = fig3();
        let bv = virtual_beta(&cfg);
        let tol = default_tolerance(&cfg);
        for p1 in [0.02, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.62, 0.63, 0.7, 0.9, 0.98] {
            let t = tape(p1, 0.0);
            let bq = incoherent_tape_beta(&t, 1.0).unwrap();
            let (_, cs) = eval(&cfg, &t);
            let expected = if bq < bv {
                Regime::Refrigerator
            } else if bq > cfg.beta_c() {
                Regime::Dissipator
            } else {
                Regime::HeatEngine
            };
            assert_eq!(classify_regime(&cs, &cfg, tol).unwrap(), expected, "p1 = {p1}");
        }
    }

    #[test]
    fn pure_tape_is_rejected() {
        let cfg = fig3();
        let t = tape(0.5, 0.5);
        let pi = solve_steady_state(&build_dynamical_matrix(&cfg, &t)).unwrap();
        assert!(matches!(
            entropy_rate(&pi, &t, &cfg, 0.0),
            Err(Error::PureStateBoundary { .. })
        ));
        assert!(matches!(
            current_set(&cfg, &tape(0.0, 0.0), &pi, 1e-12),
            Err(Error::PureStateBoundary { .. })
        ));
    }

    /// Exact tape entropy and ergotropy change per unit time against the
    /// perturbative closed forms.
    #[test]
    fn closed_forms_match_exact_map_fig3() {
        let cfg = fig3();
        let t = tape(0.5, 0.4);
        let (pi, cs) = eval(&cfg, &t);
        let rho = t.density_matrix();
        let out = apply_map_matrix(&pi, &t, cfg.phi());
        let ds = cfg.r() * (von_neumann_entropy(&out) - von_neumann_entropy(&rho));
        let dw = cfg.r() * (qubit_ergotropy(&out, 1.0) - qubit_ergotropy(&rho, 1.0));
        let de = cfg.r() * (out[(1, 1)].re - rho[(1, 1)].re);
        assert!((ds / cs.s_tape - 1.0).abs() <= 3.0 * cfg.phi());
        assert!((dw / cs.ergotropy_rate - 1.0).abs() <= 3.0 * cfg.phi());
        assert_relative_eq!(de, cs.e_tape, max_relative = 1e-10);
    }

    #[test]
    fn zeta_sign_follows_virtual_population_inversion() {
        let cfg = fig4();
        for (p1, c) in [(0.2, 0.35), (0.7, 0.4), (0.5, 0.2)] {
            let (pi, cs) = eval(&cfg, &tape(p1, c));
            assert_eq!(cs.zeta.signum(), (pi.pi01 - pi.pi10).signum());
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn scale(cs: &CurrentSet) -> f64 {
            [cs.e_tape, cs.q_c, cs.q_h, cs.s_tape, cs.f_tape]
                .iter()
                .fold(0.0f64, |m, x| m.max(x.abs()))
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(512))]

            #[test]
            fn conservation_and_proportionality(cfg in config_strategy(), t in tape_strategy()) {
                let (_, cs) = eval(&cfg, &t);
                let sc = scale(&cs).max(1e-300);
                prop_assert!((cs.e_tape - cs.q_c - cs.q_h).abs() <= 1e-12 * sc);
                let j = cs.e_tape / cfg.e_q();
                prop_assert!((-cs.q_c / cfg.e_c() - j).abs() <= 1e-11 * j.abs().max(1e-300));
                prop_assert!((cs.q_h / cfg.e_h() - j).abs() <= 1e-11 * j.abs().max(1e-300));
            }

            #[test]
            fn second_law(cfg in config_strategy(), t in tape_strategy()) {
                let (_, cs) = eval(&cfg, &t);
                prop_assert!(cs.s_tot >= -1e-12, "{:?}", cs);
            }

            #[test]
            fn split_reconstructs_free_energy(cfg in config_strategy(), t in tape_strategy()) {
                let (_, cs) = eval(&cfg, &t);
                let sc = scale(&cs).max(1e-300);
                prop_assert!((cs.f_classical + cs.c_coh / cfg.beta_c() - cs.f_tape).abs() <= 1e-12 * sc);
            }

            #[test]
            fn performance_bounds(cfg in config_strategy(), t in tape_strategy()) {
                let (_, cs) = eval(&cfg, &t);
                match classify_regime(&cs, &cfg, default_tolerance(&cfg)) {
                    Ok(Regime::HeatEngine) => prop_assert!(cs.eta.unwrap() <= cs.eta_carnot * (1.0 + 1e-9)),
                    Ok(Regime::Refrigerator) => prop_assert!(cs.cop.unwrap() <= cs.cop_carnot * (1.0 + 1e-9)),
                    _ => {}
                }
            }

            #[test]
            fn regime_labels_match_signs(cfg in config_strategy(), t in tape_strategy()) {
                let (_, cs) = eval(&cfg, &t);
                let tol = default_tolerance(&cfg);
                if let Ok(r) = classify_regime(&cs, &cfg, tol) {
                    match r {
                        Regime::HeatEngine => prop_assert!(cs.f_tape > tol && cs.q_h > tol),
                        Regime::Refrigerator => prop_assert!(cs.q_c > tol && cs.f_tape < -tol),
                        Regime::Dissipator => prop_assert!(cs.q_h > tol && cs.f_tape < -tol),
                        Regime::Equilibrium => prop_assert!(cs.f_tape.abs() <= tol),
                    }
                }
            }

            #[test]
            fn scalars_are_phase_invariant(cfg in config_strategy(), t in tape_strategy(), th in 0.0f64..6.3) {
                let (_, a) = eval(&cfg, &t);
                let (_, b) = eval(&cfg, &t.with_phase(th));
                let sc = scale(&a).max(1e-300);
                for (x, y) in [
                    (a.delta, b.delta), (a.zeta, b.zeta), (a.s_tape, b.s_tape),
                    (a.f_tape, b.f_tape), (a.s_tot, b.s_tot), (a.ergotropy_rate, b.ergotropy_rate),
                ] {
                    prop_assert!((x - y).abs() <= 1e-10 * sc);
                }
            }

            #[test]
            fn ergotropy_bounded_by_energy(p1 in 0.0f64..=1.0, frac in 0.0f64..=1.0, th in 0.0f64..6.3) {
                let cm = (p1 * (1.0 - p1)).sqrt() * frac;
                let t = TapeQubitState::new(p1, Complex64::from_polar(cm, th)).unwrap();
                let w = ergotropy(&t, 1.0);
                prop_assert!(w >= -1e-15 && w <= p1 + 1e-15);
            }
        }
    }
}
