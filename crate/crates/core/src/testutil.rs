use num_complex::Complex64;
use proptest::prelude::*;

use crate::model::{MachineConfig, TapeQubitState};

pub(crate) fn fig3() -> MachineConfig {
    MachineConfig::new(1.0, 0.5, 1.2, 0.06, 0.0025, 2.0, 0.02).unwrap()
}

pub(crate) fn tape(p1: f64, c: f64) -> TapeQubitState {
    TapeQubitState::new(p1, Complex64::new(c, 0.0)).unwrap()
}

/// Log-uniform rates, arbitrary gaps and temperature ratios.
pub(crate) fn config_strategy() -> impl Strategy<Value = MachineConfig> {
    (
        0.05f64..4.0,
        0.1f64..5.0,
        0.02f64..1.0,
        -3.5f64..-0.5,
        -1.0f64..1.0,
        -2.5f64..-1.0,
    )
        .prop_map(|(e_c, beta_c, frac, lg, lr, lphi)| {
            MachineConfig::new(
                1.0,
                e_c,
                beta_c,
                beta_c * frac,
                10f64.powf(lg),
                10f64.powf(lr),
                10f64.powf(lphi),
            )
            .unwrap()
        })
}

/// Mixed tape states strictly inside the Bloch ball.
pub(crate) fn tape_strategy() -> impl Strategy<Value = TapeQubitState> {
    (0.001f64..0.999, 0.0f64..0.999, 0.0f64..std::f64::consts::TAU).prop_map(|(p1, frac, th)| {
        let cm = (p1 * (1.0 - p1)).sqrt() * frac;
        TapeQubitState::new(p1, Complex64::from_polar(cm, th)).unwrap()
    })
}
