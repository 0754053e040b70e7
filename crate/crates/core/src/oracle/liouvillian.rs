//! Full 16×16 Lindblad generator on the vectorized machine state, and a
//! fixed-step integrator used to cross-check the kernel solver.
//!
//! Vectorization stacks columns: vec(AXB) = (Bᵀ ⊗ A)·vec(X), so the entry
//! ρ[i][j] sits at index 4·j + i.

use nalgebra::{Matrix2, Matrix4, SMatrix, SVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{bath_rates, tape_rates, MachineConfig, TapeQubitState};
use crate::steady::{Matrix6c, I00, I01, I10, I11, IV, IVC};

pub type Matrix16c = SMatrix<Complex64, 16, 16>;
pub type Vector16c = SVector<Complex64, 16>;

#[derive(Debug, Clone, PartialEq)]
pub struct Liouvillian {
    pub entries: Matrix16c,
}

pub fn vec_index(row: usize, col: usize) -> usize {
    4 * col + row
}

pub fn vectorize(rho: &Matrix4<Complex64>) -> Vector16c {
    Vector16c::from_fn(|k, _| rho[(k % 4, k / 4)])
}

pub fn unvectorize(v: &Vector16c) -> Matrix4<Complex64> {
    Matrix4::from_fn(|i, j| v[vec_index(i, j)])
}

pub fn kron4(a: &Matrix4<Complex64>, b: &Matrix4<Complex64>) -> Matrix16c {
    Matrix16c::from_fn(|r, c| a[(r / 4, c / 4)] * b[(r % 4, c % 4)])
}

pub fn kron2(a: &Matrix2<Complex64>, b: &Matrix2<Complex64>) -> Matrix4<Complex64> {
    Matrix4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

pub(crate) fn qubit_lowering() -> Matrix2<Complex64> {
    let (z, o) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    Matrix2::new(z, o, z, z)
}

/// σ⁻ on the cold (first) and hot (second) machine qubit.
pub(crate) fn machine_lowering() -> (Matrix4<Complex64>, Matrix4<Complex64>) {
    let sm = qubit_lowering();
    let id = Matrix2::identity();
    (kron2(&sm, &id), kron2(&id, &sm))
}

/// Superoperator of D[L]ρ = LρL† − ½{L†L, ρ}.
pub fn dissipator_superop(l: &Matrix4<Complex64>) -> Matrix16c {
    let id = Matrix4::identity();
    let ldl = l.adjoint() * l;
    let conj_l = l.map(|z| z.conj());
    kron4(&conj_l, l) - (kron4(&id, &ldl) + kron4(&ldl.transpose(), &id)) * Complex64::new(0.5, 0.0)
}

/// Superoperator of −i[H, ρ].
pub fn commutator_superop(h: &Matrix4<Complex64>) -> Matrix16c {
    let id = Matrix4::identity();
    (kron4(&id, h) - kron4(&h.transpose(), &id)) * Complex64::new(0.0, -1.0)
}

/// Local bath dissipators only.
pub fn bath_superop(config: &MachineConfig) -> Matrix16c {
    let (sc, sh) = machine_lowering();
    let cold = bath_rates(config.beta_c(), config.e_c(), config.gamma0());
    let hot = bath_rates(config.beta_h(), config.e_h(), config.gamma0());
    dissipator_superop(&sc) * Complex64::from(cold.down)
        + dissipator_superop(&sc.adjoint()) * Complex64::from(cold.up)
        + dissipator_superop(&sh) * Complex64::from(hot.down)
        + dissipator_superop(&sh.adjoint()) * Complex64::from(hot.up)
}

pub fn build_liouvillian(config: &MachineConfig, tape: &TapeQubitState) -> Liouvillian {
    let (sc, sh) = machine_lowering();
    // virtual-qubit raising operator |10⟩⟨01| = σc⁺σh⁻
    let a = sc.adjoint() * sh;
    let c = tape.c();
    let v = (a * c + a.adjoint() * c.conj()) * Complex64::from(config.r() * config.phi());
    let q = tape_rates(config, tape);
    let entries = commutator_superop(&v)
        + dissipator_superop(&a) * Complex64::from(q.down)
        + dissipator_superop(&a.adjoint()) * Complex64::from(q.up)
        + bath_superop(config);
    Liouvillian { entries }
}

impl Liouvillian {
    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..16)
            .map(|r| (0..16).map(|c| self.entries[(r, c)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// vec(I)†·L, which vanishes for a trace-preserving generator.
    pub fn trace_row(&self) -> SVector<Complex64, 16> {
        let mut out = SVector::<Complex64, 16>::zeros();
        for k in 0..4 {
            out += self.entries.row(vec_index(k, k)).transpose();
        }
        out
    }

    /// Restriction to (ρ00, ρ01, ρ10, ρ11, ρ_v, ρ_v*).
    pub fn project_to_dynamical(&self) -> Matrix6c {
        let idx = [
            (I00, vec_index(0, 0)),
            (I01, vec_index(1, 1)),
            (I10, vec_index(2, 2)),
            (I11, vec_index(3, 3)),
            (IV, vec_index(2, 1)),
            (IVC, vec_index(1, 2)),
        ];
        let mut m = Matrix6c::zeros();
        for &(a, ia) in &idx {
            for &(b, ib) in &idx {
                m[(a, b)] = self.entries[(ia, ib)];
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub dt: f64,
    pub tol: f64,
    /// Steps per convergence probe; rounded up to a power of two.
    pub probe_steps: usize,
    pub max_steps: usize,
}

impl IntegrateOptions {
    /// Largest admissible step, 0.1/‖L‖∞, with tolerance 1e−12.
    pub fn for_liouvillian(l: &Liouvillian) -> Self {
        IntegrateOptions {
            dt: 0.1 / l.norm_inf(),
            tol: 1e-12,
            probe_steps: 1024,
            max_steps: 1 << 30,
        }
    }
}

/// Sum of absolute eigenvalues of the Hermitian part.
pub fn trace_norm(m: &Matrix4<Complex64>) -> f64 {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().map(|x| x.abs()).sum()
}

pub fn trace_distance(a: &Matrix4<Complex64>, b: &Matrix4<Complex64>) -> f64 {
    0.5 * trace_norm(&(a - b))
}

/// Fourth-order Runge–Kutta with a fixed step until the state stops moving.
///
/// For a linear generator one RK4 step is the polynomial
/// P = I + hL + (hL)²/2 + (hL)³/6 + (hL)⁴/24, and a probe window of 2ᵏ steps
/// is P raised to 2ᵏ by repeated squaring, which visits exactly the same
/// iterates at the window boundaries.
pub fn integrate_to_steady(
    l: &Liouvillian,
    initial: &Matrix4<Complex64>,
    opts: &IntegrateOptions,
) -> Result<Matrix4<Complex64>> {
    let limit = 0.1 / l.norm_inf();
    if !(opts.dt > 0.0 && opts.dt <= limit * (1.0 + 1e-12)) {
        return Err(Error::StepTooLarge {
            dt: opts.dt,
            limit,
        });
    }
    if opts.tol < 1e-12 {
        return Err(Error::InvalidConfig {
            field: "tol",
            reason: format!("must be at least 1e-12, got {}", opts.tol),
        });
    }
    let hl = l.entries * Complex64::new(opts.dt, 0.0);
    let id = Matrix16c::identity();
    let hl2 = hl * hl;
    let hl3 = hl2 * hl;
    let hl4 = hl3 * hl;
    let step = id + hl + hl2 * Complex64::from(0.5) + hl3 * Complex64::from(1.0 / 6.0) + hl4 * Complex64::from(1.0 / 24.0);

    let squarings = opts.probe_steps.max(1).next_power_of_two().trailing_zeros();
    let window_steps = 1usize << squarings;
    let mut window = step;
    for _ in 0..squarings {
        window = window * window;
    }
    let window_time = window_steps as f64 * opts.dt;

    let mut v = vectorize(initial);
    let mut steps = 0usize;
    while steps < opts.max_steps {
        let next = window * v;
        steps += window_steps;
        let change = trace_norm(&unvectorize(&(next - v)));
        v = next;
        if change < opts.tol * window_time {
            return Ok(normalize(&unvectorize(&v)));
        }
    }
    Err(Error::SteadyStateTimeout { steps })
}

fn normalize(rho: &Matrix4<Complex64>) -> Matrix4<Complex64> {
    let h = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    let tr = h.trace();
    h / tr
}
