//! Preset noisy-state families, threshold search and uncertainty propagation.

use std::fmt;

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dual::{lower_bound, BoundStatus, LowerBoundConfig, MeasureKind};
use crate::error::{Error, Result};
use crate::measures::restart_rng;
use crate::observables::{
    bell_correlators, build_cluster_state, build_named_state, cluster_stabilizer_generators,
    expectation, noisy_state, w3_stabilizers, HermitianObservable, NamedState, PureState,
};

/// A bound above this counts as positive.
pub const EPS_POS: f64 = 1e-4;

/// Grid of the coarse scan before bisection.
pub const SCAN_STEP: f64 = 0.01;

/// Noisy-state families `ρ(p) = (1-p)|ψ⟩⟨ψ| + p·I/D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "name")]
pub enum Scenario {
    /// Bell pair in `d × d` with `X⊗X, -Y⊗Y, Z⊗Z` and, for `ops = 4`, `M⊗M`.
    BellEmbedded { d: usize, ops: usize },
    /// Linear cluster state with its `N` stabilizer generators.
    ClusterLinear { n: usize },
    /// W state with its three nonlocal stabilizers.
    W3,
}

impl Scenario {
    pub fn measure(&self) -> MeasureKind {
        match self {
            Scenario::BellEmbedded { .. } => MeasureKind::Geometric,
            Scenario::ClusterLinear { .. } | Scenario::W3 => MeasureKind::Ggm,
        }
    }

    pub fn target(&self) -> Result<PureState> {
        match *self {
            Scenario::BellEmbedded { d, .. } => build_named_state(NamedState::BellEmbedded(d)),
            Scenario::ClusterLinear { n } => build_cluster_state(n),
            Scenario::W3 => build_named_state(NamedState::W3),
        }
    }

    pub fn observables(&self) -> Result<Vec<HermitianObservable>> {
        match *self {
            Scenario::BellEmbedded { d, ops } => match ops {
                3 => bell_correlators(d, false),
                4 => bell_correlators(d, true),
                _ => Err(Error::OutOfRange(format!("ops must be 3 or 4, got {ops}"))),
            },
            Scenario::ClusterLinear { n } => cluster_stabilizer_generators(n),
            Scenario::W3 => w3_stabilizers(),
        }
    }

    pub fn preset_name(&self) -> &'static str {
        match self {
            Scenario::BellEmbedded { .. } => "bell",
            Scenario::ClusterLinear { .. } => "cluster",
            Scenario::W3 => "w3",
        }
    }

    /// Closed-form noise threshold of the fidelity-type witness built from the
    /// same observables, where one is known.
    pub fn witness_threshold(&self) -> Option<f64> {
        match *self {
            Scenario::BellEmbedded { .. } => None,
            Scenario::ClusterLinear { n } => Some(wc_threshold(n.max(2))),
            Scenario::W3 => Some(ww_threshold()),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario::BellEmbedded { d, ops } => write!(f, "bell_embedded(d={d}, {ops}ops)"),
            Scenario::ClusterLinear { n } => write!(f, "cluster_linear(N={n})"),
            Scenario::W3 => f.write_str("w3"),
        }
    }
}

/// Observables of `s` and their expectations on the noisy target state.
///
/// Stabilizer-type correlators evaluate to `1-p`. `M⊗M` is not a stabilizer
/// of the embedded pair and evaluates to `(1-p)/2`.
pub fn scenario_record(s: &Scenario, p: f64) -> Result<(Vec<HermitianObservable>, Vec<f64>)> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("noise weight {p} not in [0, 1]")));
    }
    let ops = s.observables()?;
    let rho = noisy_state(&s.target()?, p)?;
    let values = ops
        .iter()
        .map(|o| expectation(o, &rho))
        .collect::<Result<Vec<f64>>>()?;
    Ok((ops, values))
}

fn bound_at(s: &Scenario, p: f64, cfg: &LowerBoundConfig) -> Result<(f64, BoundStatus)> {
    let (ops, values) = scenario_record(s, p)?;
    let res = lower_bound(&ops, &values, s.measure(), cfg)?;
    Ok((res.bound, res.status))
}

/// Largest noise weight with a positive bound. The first nonpositive point
/// of the [`SCAN_STEP`] grid is located by binary search over the grid (the
/// bound is convex and nonincreasing in `p`, so this matches a linear scan),
/// then bisection shrinks that bracket to width `tol_p`. Returns the bracket
/// midpoint.
pub fn noise_threshold(s: &Scenario, tol_p: f64, cfg: &LowerBoundConfig) -> Result<f64> {
    if !(tol_p >= 1e-3) {
        return Err(Error::OutOfRange(format!("tol_p must be at least 1e-3, got {tol_p}")));
    }
    let positive = |p: f64| -> Result<bool> { Ok(bound_at(s, p, cfg)?.0 > EPS_POS) };
    if !positive(0.0)? {
        return Ok(0.0);
    }
    let steps = (1.0 / SCAN_STEP).round() as usize;
    let grid = |i: usize| (i as f64 * SCAN_STEP).min(1.0);
    if positive(1.0)? {
        return Ok(1.0);
    }
    // Invariant: grid(lo_i) positive, grid(hi_i) not.
    let (mut lo_i, mut hi_i) = (0, steps);
    while hi_i - lo_i > 1 {
        let mid = (lo_i + hi_i) / 2;
        if positive(grid(mid))? {
            lo_i = mid;
        } else {
            hi_i = mid;
        }
    }
    let (mut lo, mut hi) = (grid(lo_i), grid(hi_i));
    while hi - lo > tol_p {
        let mid = 0.5 * (lo + hi);
        if positive(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: f64,
    pub bound: f64,
    pub status: BoundStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Midpoint between the last positive row and the first row at or below
    /// [`EPS_POS`]; the sweep limits when no crossing is seen.
    pub threshold: f64,
}

/// Bounds on the grid `p_min, p_min + step, …, p_max`.
pub fn sweep(s: &Scenario, p_min: f64, p_max: f64, step: f64, cfg: &LowerBoundConfig) -> Result<SweepResult> {
    if !(0.0..=1.0).contains(&p_min) || !(0.0..=1.0).contains(&p_max) || p_min > p_max {
        return Err(Error::OutOfRange(format!("bad sweep range [{p_min}, {p_max}]")));
    }
    if !(step > 0.0) {
        return Err(Error::OutOfRange(format!("step must be positive, got {step}")));
    }
    let count = ((p_max - p_min) / step + 1e-9).floor() as usize + 1;
    let grid: Vec<f64> = (0..count)
        .map(|i| (p_min + i as f64 * step).min(p_max))
        .collect();
    let rows = grid
        .par_iter()
        .map(|&p| {
            let (bound, status) = bound_at(s, p, cfg)?;
            Ok(SweepRow { p, bound, status })
        })
        .collect::<Result<Vec<_>>>()?;
    let threshold = match rows.iter().position(|r| r.bound <= EPS_POS) {
        None => p_max,
        Some(0) => p_min,
        Some(i) => 0.5 * (rows[i - 1].p + rows[i].p),
    };
    Ok(SweepResult { rows, threshold })
}

/// Noise threshold of the cluster fidelity witness for `n` qubits.
pub fn wc_threshold(n: usize) -> f64 {
    assert!(n >= 2, "wc_threshold needs at least two qubits");
    if n.is_multiple_of(2) {
        1.0 / (4.0 - 4.0 / 2f64.powi((n / 2) as i32))
    } else {
        let hi = 2f64.powi(n.div_ceil(2) as i32);
        let lo = 2f64.powi(((n - 1) / 2) as i32);
        1.0 / (4.0 - 2.0 * (1.0 / hi + 1.0 / lo))
    }
}

/// Noise threshold of the W-state witness built from the nonlocal stabilizers.
pub fn ww_threshold() -> f64 {
    4.0 / 15.0
}

/// Sample mean and standard deviation of a Monte-Carlo bound distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Uncertainty {
    pub mean: f64,
    pub std: f64,
    pub trials: usize,
}

/// Resamples each value from `N(a_k, σ_k²)` and recomputes the bound.
/// Draws are clipped to the observable's spectral range so every trial is a
/// physically admissible record.
pub fn propagate_uncertainty(
    observables: &[HermitianObservable],
    values: &[f64],
    sigmas: &[f64],
    measure: MeasureKind,
    trials: usize,
    cfg: &LowerBoundConfig,
) -> Result<Uncertainty> {
    if trials < 100 {
        return Err(Error::OutOfRange(format!("at least 100 trials required, got {trials}")));
    }
    if sigmas.len() != values.len() || observables.len() != values.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} observables, {} values, {} sigmas",
            observables.len(),
            values.len(),
            sigmas.len()
        )));
    }
    if let Some(s) = sigmas.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
        return Err(Error::OutOfRange(format!("sigma {s} must be finite and nonnegative")));
    }
    let ranges: Vec<(f64, f64)> = observables.iter().map(|o| o.spectral_range()).collect();
    let bounds = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = restart_rng(cfg.seed ^ 0x5EED_0F7A_1A15, t as u64);
            let sample: Vec<f64> = values
                .iter()
                .zip(sigmas)
                .zip(&ranges)
                .map(|((&a, &s), &(lo, hi))| {
                    let x = Normal::new(a, s).expect("validated sigma").sample(&mut rng);
                    x.clamp(lo, hi)
                })
                .collect();
            Ok(lower_bound(observables, &sample, measure, cfg)?.bound)
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = bounds.len() as f64;
    let mean = bounds.iter().sum::<f64>() / n;
    let var = bounds.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(Uncertainty {
        mean,
        std: var.sqrt(),
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn records_match_one_minus_p() {
        let (ops, vals) = scenario_record(&Scenario::BellEmbedded { d: 3, ops: 3 }, 0.3).unwrap();
        assert_eq!(ops.len(), 3);
        for v in vals {
            close(v, 0.7, 1e-10);
        }
        let (ops, vals) = scenario_record(&Scenario::ClusterLinear { n: 4 }, 0.0).unwrap();
        assert_eq!(ops.len(), 4);
        for v in vals {
            close(v, 1.0, 1e-10);
        }
        let (_, vals) = scenario_record(&Scenario::W3, 0.45).unwrap();
        for v in vals {
            close(v, 0.55, 1e-10);
        }
        let (_, vals) = scenario_record(&Scenario::BellEmbedded { d: 4, ops: 4 }, 0.2).unwrap();
        close(vals[3], 0.4, 1e-10);
        assert!(scenario_record(&Scenario::W3, 1.5).is_err());
        assert!(scenario_record(&Scenario::BellEmbedded { d: 3, ops: 5 }, 0.1).is_err());
    }

    #[test]
    fn records_agree_with_noisy_states() {
        let presets = [
            Scenario::BellEmbedded { d: 3, ops: 3 },
            Scenario::BellEmbedded { d: 4, ops: 4 },
            Scenario::ClusterLinear { n: 5 },
            Scenario::W3,
        ];
        for s in presets {
            for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
                let (ops, vals) = scenario_record(&s, p).unwrap();
                let rho = noisy_state(&s.target().unwrap(), p).unwrap();
                for (o, v) in ops.iter().zip(vals) {
                    close(expectation(o, &rho).unwrap(), v, 1e-10);
                }
                if !matches!(s, Scenario::BellEmbedded { ops: 4, .. }) {
                    let (_, vals) = scenario_record(&s, p).unwrap();
                    assert!(vals.iter().all(|v| (v - (1.0 - p)).abs() < 1e-10));
                }
            }
        }
    }

    #[test]
    fn closed_form_thresholds() {
        assert_eq!(wc_threshold(4), 1.0 / 3.0);
        close(wc_threshold(5), 4.0 / 13.0, 1e-15);
        close(wc_threshold(2), 0.5, 1e-15);
        close(wc_threshold(40), 0.25, 1e-3);
        close(wc_threshold(41), 0.25, 1e-3);
        assert_eq!(ww_threshold(), 4.0 / 15.0);
        assert!(ww_threshold() < 0.45);
        assert!(wc_threshold(4) < 0.5);
    }

    #[test]
    fn bell_threshold_and_sweep() {
        let cfg = LowerBoundConfig::default();
        let s = Scenario::BellEmbedded { d: 3, ops: 3 };
        let t = noise_threshold(&s, 0.01, &cfg).unwrap();
        close(t, 2.0 / 3.0, 0.02);
        let sw = sweep(&s, 0.5, 0.8, 0.1, &cfg).unwrap();
        assert_eq!(sw.rows.len(), 4);
        assert!(sw.rows.windows(2).all(|w| w[0].p < w[1].p));
        assert!(sw.rows.windows(2).all(|w| w[1].bound <= w[0].bound + 1e-4));
        close(sw.threshold, 0.65, 1e-12);
        assert!(noise_threshold(&s, 1e-4, &cfg).is_err());
    }

    #[test]
    fn uncertainty_basics() {
        let cfg = LowerBoundConfig::default();
        let (ops, vals) = scenario_record(&Scenario::BellEmbedded { d: 2, ops: 3 }, 0.2).unwrap();
        let point = lower_bound(&ops, &vals, MeasureKind::Geometric, &cfg).unwrap().bound;
        let u = propagate_uncertainty(&ops, &vals, &[0.0; 3], MeasureKind::Geometric, 100, &cfg).unwrap();
        close(u.std, 0.0, 1e-9);
        close(u.mean, point, 1e-7);
        let one = propagate_uncertainty(&ops, &vals, &[0.01; 3], MeasureKind::Geometric, 200, &cfg).unwrap();
        let two = propagate_uncertainty(&ops, &vals, &[0.02; 3], MeasureKind::Geometric, 200, &cfg).unwrap();
        let ratio = two.std / one.std;
        assert!((1.5..=2.5).contains(&ratio), "ratio {ratio}");
        assert!(propagate_uncertainty(&ops, &vals, &[0.0; 3], MeasureKind::Geometric, 99, &cfg).is_err());
        assert!(propagate_uncertainty(&ops, &vals, &[-1.0; 3], MeasureKind::Geometric, 100, &cfg).is_err());
    }
}
