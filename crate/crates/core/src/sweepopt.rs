//! Single-point evaluation, Bloch-disc sweeps and the machine-gap optimizer.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GapTemplate, MachineConfig, TapeQubitState};
use crate::steady::{build_dynamical_matrix, solve_steady_state};
use crate::thermo::{
    classify_regime, components, current_set_from_components, default_tolerance, CurrentSet,
    Regime,
};

/// Grid points keep |c|² ≤ p0·p1·(1 − CLIP).
pub const CLIP: f64 = 1e-9;
/// Number of log-spaced samples in the coarse gap scan.
pub const COARSE_SAMPLES: usize = 64;
/// Number of coarse-scan maxima refined by golden section.
pub const REFINED_BRACKETS: usize = 3;
pub const DEFAULT_REL_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CAxis {
    /// Real coherence on [−c_max, c_max].
    SignedDiameter,
    /// Real coherence on [0, c_max].
    HalfDisc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub p1_min: f64,
    pub p1_max: f64,
    pub p1_count: usize,
    pub c_axis: CAxis,
    pub c_count: usize,
}

impl SweepGrid {
    pub fn new(p1_range: (f64, f64), p1_count: usize, c_axis: CAxis, c_count: usize) -> Result<Self> {
        let (lo, hi) = p1_range;
        if p1_count < 2 || c_count < 2 {
            return Err(Error::InvalidConfig {
                field: "grid",
                reason: format!("both grid counts must be at least 2, got {p1_count}x{c_count}"),
            });
        }
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(Error::InvalidConfig {
                field: "p1_range",
                reason: format!("need 0 <= min < max <= 1, got [{lo}, {hi}]"),
            });
        }
        Ok(SweepGrid {
            p1_min: lo,
            p1_max: hi,
            p1_count,
            c_axis,
            c_count,
        })
    }

    pub fn len(&self) -> usize {
        self.p1_count * self.c_count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid points in row-major order (p1 outer, c inner). The c axis of each
    /// row is scaled to that row's clipped disc radius.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.p1_count {
            let p1 = lerp(self.p1_min, self.p1_max, i, self.p1_count);
            let c_max = clipped_c_max(p1);
            let c_lo = match self.c_axis {
                CAxis::SignedDiameter => -c_max,
                CAxis::HalfDisc => 0.0,
            };
            for j in 0..self.c_count {
                out.push((p1, lerp(c_lo, c_max, j, self.c_count)));
            }
        }
        out
    }
}

fn lerp(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
    if i + 1 == n {
        hi
    } else {
        lo + (hi - lo) * i as f64 / (n - 1) as f64
    }
}

/// Largest |c| the grids emit for population `p1`.
pub fn clipped_c_max(p1: f64) -> f64 {
    (p1 * (1.0 - p1) * (1.0 - CLIP)).max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizationTarget {
    /// Maximize Ḟ_tape over heat-engine points.
    FreeEnergy,
    /// Maximize Q̇_c over refrigerator points.
    CoolingPower,
    /// Maximize Ẇ_tape over points with Ẇ > 0 and Q̇_h > 0.
    Ergotropy,
}

impl OptimizationTarget {
    pub fn as_str(&self) -> &'static str {
        match self {
            OptimizationTarget::FreeEnergy => "free_energy",
            OptimizationTarget::CoolingPower => "cooling_power",
            OptimizationTarget::Ergotropy => "ergotropy",
        }
    }

    /// Objective value, or `None` where the target is undefined.
    pub fn value(&self, cs: &CurrentSet, regime: Option<Regime>, tol: f64) -> Option<f64> {
        match self {
            OptimizationTarget::FreeEnergy => (regime == Some(Regime::HeatEngine)).then_some(cs.f_tape),
            OptimizationTarget::CoolingPower => (regime == Some(Regime::Refrigerator)).then_some(cs.q_c),
            OptimizationTarget::Ergotropy => {
                (cs.ergotropy_rate > tol && cs.q_h > tol).then_some(cs.ergotropy_rate)
            }
        }
    }
}

impl fmt::Display for OptimizationTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OptimizationTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "freeenergy" | "f" => Ok(OptimizationTarget::FreeEnergy),
            "coolingpower" | "cooling" | "qc" => Ok(OptimizationTarget::CoolingPower),
            "ergotropy" | "w" => Ok(OptimizationTarget::Ergotropy),
            _ => Err(Error::InvalidConfig {
                field: "optimize",
                reason: format!("unknown target {s:?} (expected free_energy, cooling_power or ergotropy)"),
            }),
        }
    }
}

/// Closed interval of machine gaps E_m searched by the optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapRange {
    pub lo: f64,
    pub hi: f64,
}

impl GapRange {
    /// [E_q(1 + 1e−6), 20·E_q]
    pub fn standard(e_q: f64) -> Self {
        GapRange {
            lo: e_q * (1.0 + 1e-6),
            hi: 20.0 * e_q,
        }
    }

    fn validate(&self, e_q: f64) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo > e_q && self.hi > self.lo) {
            return Err(Error::InvalidConfig {
                field: "e_m_range",
                reason: format!("need e_q < lo < hi, got [{}, {}] with e_q = {e_q}", self.lo, self.hi),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizerInfo {
    pub target: OptimizationTarget,
    /// Objective evaluations, coarse scan included.
    pub iterations: usize,
    /// Final golden-section interval around the optimum.
    pub bracket: (f64, f64),
    pub at_boundary: bool,
}

/// Evaluation status of a sweep row: `ok` or an error tag from [`Error::kind`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub p1: f64,
    pub c: Complex64,
    pub e_m: Option<f64>,
    pub currents: Option<CurrentSet>,
    pub regime: Option<Regime>,
    pub status: &'static str,
    pub optimizer: Option<OptimizerInfo>,
}

impl SweepRecord {
    fn failed(p1: f64, c: Complex64, e_m: Option<f64>, err: &Error) -> Self {
        SweepRecord {
            p1,
            c,
            e_m,
            currents: None,
            regime: None,
            status: err.kind(),
            optimizer: None,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct EvalHooks {
    pub flip_zeta: bool,
}

/// Full pipeline for one operating point: dynamical matrix, kernel, currents
/// and regime. A point matching no regime pattern is returned with status
/// `unclassified` and its currents filled in.
pub fn evaluate_point(config: &MachineConfig, tape: &TapeQubitState) -> Result<SweepRecord> {
    evaluate_point_with(config, tape, EvalHooks::default())
}

pub(crate) fn evaluate_point_with(
    config: &MachineConfig,
    tape: &TapeQubitState,
    hooks: EvalHooks,
) -> Result<SweepRecord> {
    let pi = solve_steady_state(&build_dynamical_matrix(config, tape))?;
    let tol = default_tolerance(config);
    let (delta, zeta) = components(&pi, tape, config);
    let zeta = if hooks.flip_zeta { -zeta } else { zeta };
    let cs = current_set_from_components(config, tape, &pi, delta, zeta, tol)?;
    let (regime, status) = match classify_regime(&cs, config, tol) {
        Ok(r) => (Some(r), "ok"),
        Err(Error::UnclassifiedPoint) => (None, Error::UnclassifiedPoint.kind()),
        Err(e) => return Err(e),
    };
    Ok(SweepRecord {
        p1: tape.p1(),
        c: tape.c(),
        e_m: Some(config.e_m()),
        currents: Some(cs),
        regime,
        status,
        optimizer: None,
    })
}

struct Objective<'a> {
    template: &'a GapTemplate,
    tape: &'a TapeQubitState,
    target: OptimizationTarget,
    evaluations: usize,
}

impl Objective<'_> {
    fn eval(&mut self, e_m: f64) -> Result<(Option<f64>, SweepRecord)> {
        self.evaluations += 1;
        let cfg = self.template.with_e_m(e_m)?;
        let rec = evaluate_point(&cfg, self.tape)?;
        let tol = default_tolerance(&cfg);
        let v = rec
            .currents
            .as_ref()
            .and_then(|cs| self.target.value(cs, rec.regime, tol));
        Ok((v, rec))
    }

    /// Value with infeasible points and solver failures mapped to −∞.
    fn score(&mut self, e_m: f64) -> (f64, Option<SweepRecord>) {
        match self.eval(e_m) {
            Ok((Some(v), rec)) => (v, Some(rec)),
            _ => (f64::NEG_INFINITY, None),
        }
    }
}

/// Golden-section maximization of `f` on [a, b] until b − a ≤ rel_tol·(a + b)/2.
/// Returns the best point seen and the final interval.
fn golden_section<F>(mut f: F, mut a: f64, mut b: f64, rel_tol: f64) -> (f64, f64, (f64, f64))
where
    F: FnMut(f64) -> f64,
{
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let (mut best_x, mut best_f) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    while b - a > rel_tol * 0.5 * (a + b) {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
            if f2 > best_f {
                (best_x, best_f) = (x2, f2);
            }
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
            if f1 > best_f {
                (best_x, best_f) = (x1, f1);
            }
        }
    }
    (best_x, best_f, (a, b))
}

/// Coarse-scan sample positions, log-spaced over the range.
pub fn coarse_gaps(range: &GapRange) -> Vec<f64> {
    let (l0, l1) = (range.lo.ln(), range.hi.ln());
    (0..COARSE_SAMPLES)
        .map(|i| {
            if i + 1 == COARSE_SAMPLES {
                range.hi
            } else if i == 0 {
                range.lo
            } else {
                (l0 + (l1 - l0) * i as f64 / (COARSE_SAMPLES - 1) as f64).exp()
            }
        })
        .collect()
}

/// Maximizes `target` over the largest machine gap E_m.
///
/// A 64-point log-spaced scan locates the feasible local maxima; the best
/// three are refined by golden section on their neighbouring samples and the
/// overall best evaluated point is returned.
pub fn optimize_gap(
    template: &GapTemplate,
    tape: &TapeQubitState,
    target: OptimizationTarget,
    range: GapRange,
    rel_tol: f64,
) -> Result<(f64, SweepRecord)> {
    range.validate(template.e_q)?;
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::InvalidConfig {
            field: "rel_tol",
            reason: format!("must lie in (0, 1), got {rel_tol}"),
        });
    }
    let mut obj = Objective {
        template,
        tape,
        target,
        evaluations: 0,
    };
    let gaps = coarse_gaps(&range);
    let mut scores = Vec::with_capacity(gaps.len());
    let mut best: Option<(f64, f64, SweepRecord)> = None;
    let mut first_err = None;
    let mut failures = 0;
    for &e in &gaps {
        match obj.eval(e) {
            Ok((v, rec)) => {
                let s = v.unwrap_or(f64::NEG_INFINITY);
                if v.is_some() && best.as_ref().is_none_or(|b| s > b.1) {
                    best = Some((e, s, rec));
                }
                scores.push(s);
            }
            Err(err) => {
                // a tape on the purity boundary fails for every gap
                if matches!(err, Error::PureStateBoundary { .. } | Error::InvalidTape(_)) {
                    return Err(err);
                }
                first_err.get_or_insert(err);
                failures += 1;
                scores.push(f64::NEG_INFINITY);
            }
        }
    }
    let Some(mut best) = best else {
        return Err(match first_err {
            Some(e) if failures == gaps.len() => e,
            _ => Error::TargetInfeasible,
        });
    };

    let n = gaps.len();
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&i| {
            scores[i].is_finite()
                && (i == 0 || scores[i] >= scores[i - 1])
                && (i + 1 == n || scores[i] >= scores[i + 1])
        })
        .collect();
    peaks.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    peaks.truncate(REFINED_BRACKETS);

    let mut bracket = (gaps[peaks[0]], gaps[peaks[0]]);
    for (k, &i) in peaks.iter().enumerate() {
        let a = gaps[i.saturating_sub(1)];
        let b = gaps[(i + 1).min(n - 1)];
        let mut local_best: Option<SweepRecord> = None;
        let mut local_f = f64::NEG_INFINITY;
        let (x, fx, br) = golden_section(
            |e| {
                let (s, rec) = obj.score(e);
                if s > local_f {
                    local_f = s;
                    local_best = rec;
                }
                s
            },
            a,
            b,
            rel_tol,
        );
        if k == 0 {
            bracket = br;
        }
        if fx > best.1 {
            if let Some(rec) = local_best {
                best = (x, fx, rec);
                bracket = br;
            }
        }
    }

    let (e_star, _, mut rec) = best;
    // report the gap the record was evaluated at, after the e_c round trip
    let e_star = rec.e_m.unwrap_or(e_star);
    let edge = rel_tol * e_star;
    rec.optimizer = Some(OptimizerInfo {
        target,
        iterations: obj.evaluations,
        bracket,
        at_boundary: (e_star - range.lo).abs() <= edge || (range.hi - e_star).abs() <= edge,
    });
    Ok((e_star, rec))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub grid: SweepGrid,
    pub target: Option<OptimizationTarget>,
    pub rows: Vec<SweepRecord>,
}

impl SweepTable {
    /// Rows that evaluated successfully, with their currents.
    pub fn evaluated(&self) -> impl Iterator<Item = (&SweepRecord, &CurrentSet)> {
        self.rows
            .iter()
            .filter_map(|r| r.currents.as_ref().map(|cs| (r, cs)))
    }
}

/// Evaluates every grid point, optimizing the gap per point when `target` is
/// given. Row order is row-major in (p1, c) regardless of scheduling.
pub fn sweep(
    config: &MachineConfig,
    grid: &SweepGrid,
    target: Option<OptimizationTarget>,
) -> SweepTable {
    let template = config.template();
    let range = GapRange::standard(config.e_q());
    let rows = grid
        .points()
        .into_par_iter()
        .map(|(p1, c)| {
            let c = Complex64::new(c, 0.0);
            let tape = match TapeQubitState::new(p1, c) {
                Ok(t) => t,
                Err(e) => return SweepRecord::failed(p1, c, None, &e),
            };
            match target {
                None => evaluate_point(config, &tape)
                    .unwrap_or_else(|e| SweepRecord::failed(p1, c, Some(config.e_m()), &e)),
                Some(t) => match optimize_gap(&template, &tape, t, range, DEFAULT_REL_TOL) {
                    Ok((_, rec)) => rec,
                    Err(e) => SweepRecord::failed(p1, c, None, &e),
                },
            }
        })
        .collect();
    SweepTable {
        grid: *grid,
        target,
        rows,
    }
}
