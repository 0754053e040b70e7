//! Self-consistency suite: the closed-form pipeline against the independent
//! oracles.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{MachineConfig, TapeQubitState};
use crate::oracle::{
    build_liouvillian, exact_map_energy_delta, exact_map_entropy_delta,
    exact_map_ergotropy_delta, integrate_to_steady, simulate_collisions, trace_distance,
    IntegrateOptions,
};
use crate::steady::{build_dynamical_matrix, solve_steady_state, SteadyState};
use crate::sweepopt::{evaluate_point_with, EvalHooks};
use crate::thermo::{components, entropy_rate, ergotropy_rate, energy_currents};

pub const LADDER_PHIS: [f64; 4] = [0.08, 0.04, 0.02, 0.01];
pub const LADDER_MIN_RATIO: f64 = 1.6;
pub const PROJECTION_TOL: f64 = 1e-13;
pub const KERNEL_TOL: f64 = 1e-8;
pub const ENERGY_REL_TOL: f64 = 1e-10;
pub const MC_COLLISIONS: usize = 100_000;
pub const MC_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationLevel {
    Quick,
    Full,
}

impl FromStr for ValidationLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(ValidationLevel::Quick),
            "full" => Ok(ValidationLevel::Full),
            _ => Err(Error::InvalidConfig {
                field: "level",
                reason: format!("expected quick or full, got {s:?}"),
            }),
        }
    }
}

impl fmt::Display for ValidationLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValidationLevel::Quick => "quick",
            ValidationLevel::Full => "full",
        })
    }
}

/// Deliberate defects injected to confirm the suite notices them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    FlipZetaSign,
}

impl FromStr for Fault {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flip-zeta" | "flip_zeta" | "flip_zeta_sign" => Ok(Fault::FlipZetaSign),
            _ => Err(Error::InvalidConfig {
                field: "fault",
                reason: format!("unknown fault {s:?}"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub metric: f64,
    pub threshold: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub level: ValidationLevel,
    pub seed: u64,
    pub fault: Option<Fault>,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn failed_checks(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }
}

fn reference_config() -> MachineConfig {
    MachineConfig::new(1.0, 0.5, 1.2, 0.06, 0.0025, 2.0, 0.02).expect("reference parameters are valid")
}

fn reference_tape() -> TapeQubitState {
    TapeQubitState::new(0.5, Complex64::new(0.4, 0.0)).expect("inside the Bloch disc")
}

/// Same parameter distribution as the property tests.
pub fn random_config(rng: &mut impl Rng) -> MachineConfig {
    let beta_c = rng.random_range(0.1..5.0);
    MachineConfig::new(
        1.0,
        rng.random_range(0.05..4.0),
        beta_c,
        beta_c * rng.random_range(0.02..1.0),
        10f64.powf(rng.random_range(-3.5..-0.5)),
        10f64.powf(rng.random_range(-1.0..1.0)),
        10f64.powf(rng.random_range(-2.5..-1.0)),
    )
    .expect("sampled parameters are valid")
}

pub fn random_tape(rng: &mut impl Rng) -> TapeQubitState {
    let p1: f64 = rng.random_range(0.001..0.999);
    let c_abs = (p1 * (1.0 - p1)).sqrt() * rng.random_range(0.0..0.999);
    let theta = rng.random_range(0.0..std::f64::consts::TAU);
    TapeQubitState::new(p1, Complex64::from_polar(c_abs, theta)).expect("inside the Bloch disc")
}

fn check(name: &'static str, metric: f64, threshold: f64, below: bool, detail: String) -> CheckResult {
    let passed = if below { metric <= threshold } else { metric >= threshold };
    CheckResult {
        name,
        passed: passed && metric.is_finite(),
        metric,
        threshold,
        detail,
    }
}

fn failure(name: &'static str, threshold: f64, err: &Error) -> CheckResult {
    CheckResult {
        name,
        passed: false,
        metric: f64::NAN,
        threshold,
        detail: err.to_string(),
    }
}

pub fn projection_equivalence(draws: usize, rng: &mut impl Rng) -> CheckResult {
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let (cfg, tape) = (random_config(rng), random_tape(rng));
        let proj = build_liouvillian(&cfg, &tape).project_to_dynamical();
        worst = worst.max((proj - build_dynamical_matrix(&cfg, &tape).entries).camax());
    }
    check(
        "projection-equivalence",
        worst,
        PROJECTION_TOL,
        true,
        format!("max entrywise difference over {draws} draws"),
    )
}

/// Largest trace distance between the kernel and the time-integrated state.
pub fn kernel_distance(cfg: &MachineConfig, tape: &TapeQubitState) -> Result<f64> {
    let pi = solve_steady_state(&build_dynamical_matrix(cfg, tape))?;
    let l = build_liouvillian(cfg, tape);
    let initial = nalgebra::Matrix4::<Complex64>::identity() * Complex64::from(0.25);
    let rho = integrate_to_steady(&l, &initial, &IntegrateOptions::for_liouvillian(&l))?;
    Ok(trace_distance(&rho, &pi.density_matrix()))
}

pub fn kernel_vs_integration(draws: usize, rng: &mut impl Rng) -> CheckResult {
    const NAME: &str = "kernel-vs-integration";
    let mut worst: f64 = 0.0;
    let mut cases = vec![(reference_config(), reference_tape())];
    cases.extend((0..draws).map(|_| (random_config(rng), random_tape(rng))));
    for (cfg, tape) in &cases {
        match kernel_distance(cfg, tape) {
            Ok(d) => worst = worst.max(d),
            Err(e) => return failure(NAME, KERNEL_TOL, &e),
        }
    }
    check(
        NAME,
        worst,
        KERNEL_TOL,
        true,
        format!("max trace distance over {} configurations", cases.len()),
    )
}

/// Relative errors of the perturbative entropy and ergotropy rates against the
/// exact one-collision map, with the machine state frozen at `pi` and the
/// collision strength varied in the map only.
pub fn ladder_errors(
    cfg: &MachineConfig,
    pi: &SteadyState,
    tape: &TapeQubitState,
    phis: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut ent = Vec::with_capacity(phis.len());
    let mut erg = Vec::with_capacity(phis.len());
    for &phi in phis {
        let c = cfg.with_phi(phi)?;
        let (delta, zeta) = components(pi, tape, &c);
        let (e_tape, _, _) = energy_currents(delta, zeta, &c);
        let s = entropy_rate(pi, tape, &c, delta)?;
        let w = ergotropy_rate(e_tape, pi, tape, &c, delta)?;
        let s_exact = exact_map_entropy_delta(pi, tape, phi, c.r());
        let w_exact = exact_map_ergotropy_delta(pi, tape, phi, c.r(), c.e_q());
        ent.push(((s_exact - s) / s).abs());
        erg.push(((w_exact - w) / w).abs());
    }
    Ok((ent, erg))
}

fn join(xs: &[f64], f: impl Fn(f64) -> String) -> String {
    xs.iter().map(|&x| f(x)).collect::<Vec<_>>().join(", ")
}

pub fn successive_ratios(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| w[0] / w[1]).collect()
}

fn ladder_checks() -> Vec<CheckResult> {
    let cfg = reference_config();
    let tape = reference_tape();
    let res = solve_steady_state(&build_dynamical_matrix(&cfg, &tape))
        .and_then(|pi| ladder_errors(&cfg, &pi, &tape, &LADDER_PHIS));
    let (ent, erg) = match res {
        Ok(v) => v,
        Err(e) => {
            return vec![
                failure("entropy-order-ladder", LADDER_MIN_RATIO, &e),
                failure("ergotropy-order-ladder", LADDER_MIN_RATIO, &e),
            ]
        }
    };
    [("entropy-order-ladder", ent), ("ergotropy-order-ladder", erg)]
        .into_iter()
        .map(|(name, errs)| {
            let ratios = successive_ratios(&errs);
            let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
            check(
                name,
                min,
                LADDER_MIN_RATIO,
                false,
                format!(
                    "relative errors {} at phi {LADDER_PHIS:?}, ratios {}",
                    join(&errs, |e| format!("{e:.3e}")),
                    join(&ratios, |r| format!("{r:.3}"))
                ),
            )
        })
        .collect()
}

/// Pipeline energy current against the exact one-collision energy change.
pub fn energy_current(fault: Option<Fault>) -> CheckResult {
    const NAME: &str = "energy-current";
    let hooks = EvalHooks {
        flip_zeta: fault == Some(Fault::FlipZetaSign),
    };
    let fig4 = MachineConfig::new(1.0, 0.8, 1.2, 0.6, 0.0025, 2.0, 0.04).expect("valid");
    let cases = [
        (reference_config(), 0.5, Complex64::new(0.4, 0.0)),
        (reference_config(), 0.3, Complex64::new(0.1, 0.3)),
        (fig4, 0.2, Complex64::new(0.35, 0.0)),
        (fig4, 0.7, Complex64::new(0.0, -0.3)),
    ];
    let mut worst: f64 = 0.0;
    for (cfg, p1, c) in cases {
        let tape = TapeQubitState::new(p1, c).expect("inside the Bloch disc");
        let res = solve_steady_state(&build_dynamical_matrix(&cfg, &tape))
            .and_then(|pi| Ok((pi, evaluate_point_with(&cfg, &tape, hooks)?)));
        let (pi, rec) = match res {
            Ok(v) => v,
            Err(e) => return failure(NAME, ENERGY_REL_TOL, &e),
        };
        let exact = exact_map_energy_delta(&pi, &tape, cfg.phi(), cfg.r(), cfg.e_q());
        let e_tape = rec.currents.map_or(f64::NAN, |cs| cs.e_tape);
        worst = worst.max((e_tape - exact).abs() / exact.abs());
    }
    check(
        NAME,
        worst,
        ENERGY_REL_TOL,
        true,
        format!("max relative deviation over {} points", cases.len()),
    )
}

/// Largest |Monte Carlo − kernel| over all density-matrix entries, in units of
/// the Monte Carlo standard error.
pub fn monte_carlo_deviation(
    cfg: &MachineConfig,
    tape: &TapeQubitState,
    n_collisions: usize,
    seed: u64,
) -> Result<f64> {
    let pi = solve_steady_state(&build_dynamical_matrix(cfg, tape))?;
    let kernel = pi.density_matrix();
    let mc = simulate_collisions(cfg, tape, 1.0, n_collisions, seed)?;
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let d = mc.mean_state[(i, j)] - kernel[(i, j)];
            let se = mc.stderr[(i, j)];
            for (dev, err) in [(d.re, se.re), (d.im, se.im)] {
                // entries that vanish structurally have zero spread
                let z = if err > 0.0 {
                    dev.abs() / err
                } else if dev.abs() <= 1e-12 {
                    0.0
                } else {
                    f64::INFINITY
                };
                worst = worst.max(z);
            }
        }
    }
    Ok(worst)
}

pub fn monte_carlo(seed: u64) -> CheckResult {
    const NAME: &str = "monte-carlo";
    match monte_carlo_deviation(&reference_config(), &reference_tape(), MC_COLLISIONS, seed) {
        Ok(z) => check(
            NAME,
            z,
            MC_SIGMAS,
            true,
            format!("max deviation in standard errors, {MC_COLLISIONS} collisions"),
        ),
        Err(e) => failure(NAME, MC_SIGMAS, &e),
    }
}

pub fn run_validation(level: ValidationLevel, seed: u64, fault: Option<Fault>) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (projections, kernels) = match level {
        ValidationLevel::Quick => (200, 4),
        ValidationLevel::Full => (1000, 100),
    };
    let mut checks = vec![
        projection_equivalence(projections, &mut rng),
        kernel_vs_integration(kernels, &mut rng),
    ];
    checks.extend(ladder_checks());
    checks.push(energy_current(fault));
    if level == ValidationLevel::Full {
        checks.push(monte_carlo(seed));
    }
    ValidationReport {
        level,
        seed,
        fault,
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}
