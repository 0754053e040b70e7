//! Physical parameters and the elementary closed-form quantities built from them.
//!
//! Natural units throughout: k_B = ħ = 1, and the tape-qubit gap `e_q` is the
//! energy scale (1 unless stated otherwise).

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Collision strengths above this value are accepted but flagged, since the
/// master equation is only second order in φ.
pub const PHI_WARN_THRESHOLD: f64 = 0.2;

/// Above this value of β·E the thermal occupation underflows and the bath is
/// treated as zero temperature.
const OVERFLOW_GUARD: f64 = 700.0;

/// Machine, bath and coupling parameters.
///
/// `e_h` is never stored independently: resonance with the tape qubit fixes
/// `e_h = e_c + e_q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MachineConfig {
    e_q: f64,
    e_c: f64,
    beta_c: f64,
    beta_h: f64,
    gamma0: f64,
    r: f64,
    phi: f64,
}

fn positive(field: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidConfig {
            field,
            reason: format!("must be a positive finite number, got {value}"),
        })
    }
}

impl MachineConfig {
    pub fn new(
        e_q: f64,
        e_c: f64,
        beta_c: f64,
        beta_h: f64,
        gamma0: f64,
        r: f64,
        phi: f64,
    ) -> Result<Self> {
        let cfg = MachineConfig {
            e_q: positive("e_q", e_q)?,
            e_c: positive("e_c", e_c)?,
            beta_c: positive("beta_c", beta_c)?,
            beta_h: positive("beta_h", beta_h)?,
            gamma0: positive("gamma0", gamma0)?,
            r: positive("r", r)?,
            phi: positive("phi", phi)?,
        };
        if beta_h > beta_c {
            return Err(Error::InvalidConfig {
                field: "beta_h",
                reason: format!("the hot bath must not be colder than the cold bath (beta_h = {beta_h} > beta_c = {beta_c})"),
            });
        }
        Ok(cfg)
    }

    /// Builds a configuration from the largest machine gap `e_m = e_c + e_h`.
    pub fn from_e_m(
        e_q: f64,
        e_m: f64,
        beta_c: f64,
        beta_h: f64,
        gamma0: f64,
        r: f64,
        phi: f64,
    ) -> Result<Self> {
        let e_q = positive("e_q", e_q)?;
        if !(e_m.is_finite() && e_m > e_q) {
            return Err(Error::InvalidConfig {
                field: "e_m",
                reason: format!("must exceed e_q = {e_q}, got {e_m}"),
            });
        }
        Self::new(e_q, 0.5 * (e_m - e_q), beta_c, beta_h, gamma0, r, phi)
    }

    pub fn e_q(&self) -> f64 {
        self.e_q
    }
    pub fn e_c(&self) -> f64 {
        self.e_c
    }
    pub fn e_h(&self) -> f64 {
        self.e_c + self.e_q
    }
    pub fn e_m(&self) -> f64 {
        self.e_c + self.e_h()
    }
    pub fn beta_c(&self) -> f64 {
        self.beta_c
    }
    pub fn beta_h(&self) -> f64 {
        self.beta_h
    }
    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Natural scale of every tape-induced rate, r·φ².
    pub fn tape_scale(&self) -> f64 {
        self.r * self.phi * self.phi
    }

    pub fn with_e_c(&self, e_c: f64) -> Result<Self> {
        Self::new(self.e_q, e_c, self.beta_c, self.beta_h, self.gamma0, self.r, self.phi)
    }

    pub fn with_e_m(&self, e_m: f64) -> Result<Self> {
        self.template().with_e_m(e_m)
    }

    pub fn with_phi(&self, phi: f64) -> Result<Self> {
        Self::new(self.e_q, self.e_c, self.beta_c, self.beta_h, self.gamma0, self.r, phi)
    }

    pub fn template(&self) -> GapTemplate {
        GapTemplate {
            e_q: self.e_q,
            beta_c: self.beta_c,
            beta_h: self.beta_h,
            gamma0: self.gamma0,
            r: self.r,
            phi: self.phi,
        }
    }

    /// Non-fatal diagnostics about the parameter choice.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.phi > PHI_WARN_THRESHOLD {
            out.push(format!(
                "phi = {} exceeds {PHI_WARN_THRESHOLD}; second-order collision expansion may be inaccurate",
                self.phi
            ));
        }
        out
    }
}

/// Everything in a [`MachineConfig`] except the machine gaps, which the gap
/// optimizer chooses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapTemplate {
    pub e_q: f64,
    pub beta_c: f64,
    pub beta_h: f64,
    pub gamma0: f64,
    pub r: f64,
    pub phi: f64,
}

impl GapTemplate {
    pub fn with_e_m(&self, e_m: f64) -> Result<MachineConfig> {
        MachineConfig::from_e_m(
            self.e_q,
            e_m,
            self.beta_c,
            self.beta_h,
            self.gamma0,
            self.r,
            self.phi,
        )
    }
}

/// Incoming tape-qubit state `[[p0, c], [c*, p1]]` in the basis {|0⟩, |1⟩}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TapeQubitState {
    p1: f64,
    c: Complex64,
}

impl TapeQubitState {
    pub fn new(p1: f64, c: Complex64) -> Result<Self> {
        if !(p1.is_finite() && (0.0..=1.0).contains(&p1)) {
            return Err(Error::InvalidTape(format!("p1 must lie in [0, 1], got {p1}")));
        }
        if !(c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::InvalidTape("c must be finite".into()));
        }
        let p0p1 = p1 * (1.0 - p1);
        let c2 = c.norm_sqr();
        if c2 > p0p1 * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::InvalidTape(format!(
                "positivity bound |c|^2 <= p0*p1 violated: |c|^2 = {c2}, p0*p1 = {p0p1}"
            )));
        }
        Ok(TapeQubitState { p1, c })
    }

    pub fn diagonal(p1: f64) -> Result<Self> {
        Self::new(p1, Complex64::new(0.0, 0.0))
    }

    pub fn p0(&self) -> f64 {
        1.0 - self.p1
    }
    pub fn p1(&self) -> f64 {
        self.p1
    }
    pub fn c(&self) -> Complex64 {
        self.c
    }

    /// Largest admissible |c| for this population.
    pub fn c_max(&self) -> f64 {
        (self.p0() * self.p1).sqrt()
    }

    /// Same state with the coherence rotated by `theta`.
    pub fn with_phase(&self, theta: f64) -> Self {
        TapeQubitState {
            p1: self.p1,
            c: self.c * Complex64::from_polar(1.0, theta),
        }
    }

    pub fn density_matrix(&self) -> Matrix2<Complex64> {
        Matrix2::new(
            Complex64::new(self.p0(), 0.0),
            self.c,
            self.c.conj(),
            Complex64::new(self.p1, 0.0),
        )
    }

    /// Reads (p1, c) off a 2×2 density matrix. Only the Hermitian part is used.
    pub fn from_density_matrix(rho: &Matrix2<Complex64>) -> Self {
        let tr = rho[(0, 0)].re + rho[(1, 1)].re;
        TapeQubitState {
            p1: rho[(1, 1)].re / tr,
            c: 0.5 * (rho[(0, 1)] + rho[(1, 0)].conj()) / tr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePair {
    pub up: f64,
    pub down: f64,
}

/// β_v = (β_h E_h − β_c E_c)/(E_h − E_c); negative means population inversion.
pub fn virtual_beta(config: &MachineConfig) -> f64 {
    (config.beta_h * config.e_h() - config.beta_c * config.e_c) / config.e_q
}

/// Gibbs state of a qubit with the given gap. Negative `beta` is allowed.
pub fn gibbs_qubit(beta: f64, gap: f64) -> TapeQubitState {
    // logistic form is stable for both signs of beta*gap
    let x = beta * gap;
    let p1 = if x >= 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    };
    TapeQubitState {
        p1,
        c: Complex64::new(0.0, 0.0),
    }
}

/// Absorption and emission rates of a machine qubit coupled to a bosonic bath.
pub fn bath_rates(beta: f64, gap: f64, gamma0: f64) -> RatePair {
    let x = beta * gap;
    if x > OVERFLOW_GUARD {
        return RatePair {
            up: 0.0,
            down: gamma0,
        };
    }
    let n = 1.0 / x.exp_m1();
    RatePair {
        up: gamma0 * n,
        down: gamma0 * (n + 1.0),
    }
}

/// Effective excitation/de-excitation rates the tape induces on the virtual qubit.
pub fn tape_rates(config: &MachineConfig, tape: &TapeQubitState) -> RatePair {
    let k = config.tape_scale();
    RatePair {
        up: k * tape.p1,
        down: k * tape.p0(),
    }
}

/// Eigenvalues (λ₊, λ₋) of the tape-qubit density matrix.
///
/// λ₋ is obtained from the determinant so that it is exactly zero on the
/// purity boundary and accurate close to it.
pub fn qubit_spectrum(tape: &TapeQubitState) -> (f64, f64) {
    let lp = 0.5 * (1.0 + bloch_length(tape));
    let det = (tape.p0() * tape.p1 - tape.c.norm_sqr()).max(0.0);
    (lp, det / lp)
}

/// Length of the Bloch vector, s = √((p1 − p0)² + 4|c|²) = λ₊ − λ₋.
pub fn bloch_length(tape: &TapeQubitState) -> f64 {
    let z = tape.p1 - tape.p0();
    (z * z + 4.0 * tape.c.norm_sqr()).sqrt().min(1.0)
}

/// β_q = ln(p0/p1)/e_q.
pub fn incoherent_tape_beta(tape: &TapeQubitState, e_q: f64) -> Result<f64> {
    if tape.p1 <= 0.0 || tape.p1 >= 1.0 {
        return Err(Error::UnboundedTemperature { p1: tape.p1 });
    }
    Ok((tape.p0() / tape.p1).ln() / e_q)
}
