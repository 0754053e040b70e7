//! Stochastic collision model: Poissonian arrivals of fresh tape qubits, each
//! interacting with the machine through the exact three-body unitary, with
//! exact bath relaxation in between.
//!
//! Seed streams: stream k of a run with master seed s is `ChaCha8Rng` seeded
//! from s with `set_stream(k)`. The split is fixed (four streams), so results
//! do not depend on the number of worker threads.

use nalgebra::{Matrix2, Matrix4, SMatrix};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{bath_rates, gibbs_qubit, MachineConfig, RatePair, TapeQubitState};
use crate::oracle::liouvillian::kron2;

pub type Matrix8c = SMatrix<Complex64, 8, 8>;

pub const STREAMS: usize = 4;
pub const BATCHES_PER_STREAM: usize = 5;
pub const BURN_IN_FRACTION: f64 = 0.2;
/// Collisions shorter than this fraction of the bath lifetime are treated as instantaneous.
pub const TAU_WARN: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryResult {
    pub mean_state: Matrix4<Complex64>,
    /// Standard error of the real and imaginary part of each entry.
    pub stderr: Matrix4<Complex64>,
    pub n_collisions: usize,
    pub seed: u64,
    pub warnings: Vec<String>,
}

/// exp(−iφ(σc⁺σh⁻σq⁺ + h.c.)) on |c h q⟩, index 4c + 2h + q.
///
/// The interaction only couples |010⟩ and |101⟩, where it acts as a rotation
/// by φ.
pub fn three_body_unitary(phi: f64) -> Matrix8c {
    let mut u = Matrix8c::identity();
    let (a, b) = (0b010, 0b101);
    let (cos, sin) = (phi.cos(), phi.sin());
    u[(a, a)] = Complex64::new(cos, 0.0);
    u[(b, b)] = Complex64::new(cos, 0.0);
    u[(a, b)] = Complex64::new(0.0, -sin);
    u[(b, a)] = Complex64::new(0.0, -sin);
    u
}

/// Bare Hamiltonian E_c σc⁺σc⁻ + E_h σh⁺σh⁻ + E_q σq⁺σq⁻ on the same basis.
pub fn bare_hamiltonian(config: &MachineConfig) -> Matrix8c {
    Matrix8c::from_fn(|r, c| {
        if r != c {
            return Complex64::new(0.0, 0.0);
        }
        let e = config.e_c() * ((r >> 2) & 1) as f64
            + config.e_h() * ((r >> 1) & 1) as f64
            + config.e_q() * (r & 1) as f64;
        Complex64::new(e, 0.0)
    })
}

fn embed(machine: &Matrix4<Complex64>, tape: &Matrix2<Complex64>) -> Matrix8c {
    Matrix8c::from_fn(|r, c| machine[(r / 2, c / 2)] * tape[(r % 2, c % 2)])
}

fn trace_out_tape(joint: &Matrix8c) -> Matrix4<Complex64> {
    Matrix4::from_fn(|i, j| joint[(2 * i, 2 * j)] + joint[(2 * i + 1, 2 * j + 1)])
}

/// One collision with a fresh tape qubit.
pub fn collide(u: &Matrix8c, machine: &Matrix4<Complex64>, tape: &Matrix2<Complex64>) -> Matrix4<Complex64> {
    trace_out_tape(&(u * embed(machine, tape) * u.adjoint()))
}

/// Kraus operators of a qubit relaxing for time t with the given rates.
fn relaxation_kraus(rates: &RatePair, t: f64) -> [Matrix2<Complex64>; 4] {
    let k = rates.up + rates.down;
    let decay = -(-k * t).exp_m1();
    let p = if k > 0.0 { rates.up / k } else { 0.0 };
    let (sg, sk) = (decay.sqrt(), (1.0 - decay).sqrt());
    let z = 0.0;
    let m = |a: f64, b: f64, c: f64, d: f64| {
        Matrix2::new(a.into(), b.into(), c.into(), d.into())
    };
    let (w0, w1) = ((1.0 - p).sqrt(), p.sqrt());
    [
        m(w0, z, z, w0 * sk),
        m(z, w0 * sg, z, z),
        m(w1 * sk, z, z, w1),
        m(z, z, w1 * sg, z),
    ]
}

/// Exact bath-only evolution of the machine over time t.
///
/// The two local dissipators commute, and each one integrates to a
/// generalized amplitude-damping channel on its own qubit.
pub fn bath_propagate(config: &MachineConfig, rho: &Matrix4<Complex64>, t: f64) -> Matrix4<Complex64> {
    let cold = bath_rates(config.beta_c(), config.e_c(), config.gamma0());
    let hot = bath_rates(config.beta_h(), config.e_h(), config.gamma0());
    let id = Matrix2::identity();
    let mut out = Matrix4::zeros();
    for k in relaxation_kraus(&cold, t) {
        let kk = kron2(&k, &id);
        out += kk * rho * kk.adjoint();
    }
    let mut res = Matrix4::zeros();
    for k in relaxation_kraus(&hot, t) {
        let kk = kron2(&id, &k);
        res += kk * out * kk.adjoint();
    }
    res
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Waiting times between collisions of a rate-r Poisson process.
pub fn sample_waiting_times(r: f64, n: usize, seed: u64) -> Vec<f64> {
    let exp = Exp::new(r).expect("rate must be positive");
    let mut rng = stream_rng(seed, 0);
    (0..n).map(|_| exp.sample(&mut rng)).collect()
}

fn run_stream(
    config: &MachineConfig,
    tape: &Matrix2<Complex64>,
    u: &Matrix8c,
    n: usize,
    seed: u64,
    stream: u64,
) -> Vec<Matrix4<Complex64>> {
    let exp = Exp::new(config.r()).expect("rate validated by MachineConfig");
    let mut rng = stream_rng(seed, stream);
    let mut rho = kron2(
        &gibbs_qubit(config.beta_c(), config.e_c()).density_matrix(),
        &gibbs_qubit(config.beta_h(), config.e_h()).density_matrix(),
    );
    let burn = (n as f64 * BURN_IN_FRACTION).ceil() as usize;
    let per_batch = (n - burn) / BATCHES_PER_STREAM;
    let mut batches = vec![Matrix4::zeros(); BATCHES_PER_STREAM];
    for step in 0..burn + per_batch * BATCHES_PER_STREAM {
        let wait = exp.sample(&mut rng);
        rho = bath_propagate(config, &rho, wait);
        if step >= burn {
            // states seen by Poisson arrivals are distributed as time averages
            batches[(step - burn) / per_batch] += rho;
        }
        rho = collide(u, &rho, tape);
    }
    let norm = Complex64::from(1.0 / per_batch as f64);
    batches.into_iter().map(|b| b * norm).collect()
}

/// Time-averaged late-time machine state from `n_collisions` Poissonian
/// collisions of duration `tau`.
pub fn simulate_collisions(
    config: &MachineConfig,
    tape: &TapeQubitState,
    tau: f64,
    n_collisions: usize,
    seed: u64,
) -> Result<TrajectoryResult> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidTau(tau));
    }
    let min = STREAMS * BATCHES_PER_STREAM * 2;
    if n_collisions < min {
        return Err(Error::InvalidConfig {
            field: "n_collisions",
            reason: format!("at least {min} collisions are needed, got {n_collisions}"),
        });
    }
    let mut warnings = Vec::new();
    if config.gamma0() * tau > TAU_WARN {
        warnings.push(format!(
            "gamma0*tau = {} exceeds {TAU_WARN}; instantaneous collisions are a poor approximation",
            config.gamma0() * tau
        ));
    }
    // the unitary depends on the coupling only through phi = g*tau
    let u = three_body_unitary(config.phi());
    let rho_q = tape.density_matrix();
    let per_stream = n_collisions / STREAMS;
    let batches: Vec<Matrix4<Complex64>> = (0..STREAMS as u64)
        .into_par_iter()
        .map(|k| run_stream(config, &rho_q, &u, per_stream, seed, k))
        .collect::<Vec<_>>()
        .concat();

    let nb = batches.len() as f64;
    let mean = batches.iter().fold(Matrix4::zeros(), |acc, b| acc + b) * Complex64::from(1.0 / nb);
    let stderr = Matrix4::from_fn(|i, j| {
        let (mut vr, mut vi) = (0.0, 0.0);
        for b in &batches {
            let d = b[(i, j)] - mean[(i, j)];
            vr += d.re * d.re;
            vi += d.im * d.im;
        }
        let denom = (nb - 1.0) * nb;
        Complex64::new((vr / denom).sqrt(), (vi / denom).sqrt())
    });
    Ok(TrajectoryResult {
        mean_state: mean,
        stderr,
        n_collisions: per_stream * STREAMS,
        seed,
        warnings,
    })
}
