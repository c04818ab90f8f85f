use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::state::{apply_shift, frobenius, frobenius_diff, median_shift, normalize_global, weighted_median};
use super::{class_ratios, l1, LabelConstraints, MultiClassState, Result, ShiftRule, SolverConfig, SolverError};
use crate::graph::NormalizedGradient;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerReport {
    pub iterations: usize,
    /// Relative change `‖u_{ℓ+1} - u_ℓ‖ / ‖u_ℓ‖` of the last iteration.
    pub residual: f64,
    pub converged: bool,
}

/// One outer step as recorded in the solve trace.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OuterRecord {
    /// Ratios `Δ₁(u^k)/‖u^k‖₁` after the shift and normalization.
    pub ratios: Vec<f64>,
    pub ratio_sum: f64,
    /// Ratios of `v`, i.e. the coefficients `c^k` of the linearized term.
    pub ratios_before: Vec<f64>,
    /// Ratios of the step output, before the shift.
    pub ratios_inner: Vec<f64>,
    /// `c^k ‖u^k‖₁ - Δ₁(u^k)` on the pre-shift output; non-negative when
    /// the step decreased the ratio of class `k`.
    pub decrease_slack: Vec<f64>,
    /// Fraction of the prox step kept after backtracking (1 for a full step).
    pub step_fraction: f64,
    pub inner_iters: usize,
    pub residual: f64,
    /// Constraint violation of the inner-loop output (after projection).
    pub max_violation: f64,
    /// Constraint violation after the median shift and normalization.
    pub shift_violation: f64,
    pub wall_ms: f64,
}

/// Accelerated primal-dual iterations for the proximal subproblem.
///
/// Starts from `state.u`, `state.u_bar`, `state.z` and keeps `state.v` as
/// the proximal center. `coefficients[k]` is the ratio `c^k` multiplying
/// `⟨sign(v^k), u^k⟩`. `(sigma0, tau0)` are taken from `config` as given;
/// the step rule has to be resolved by the caller.
pub fn inner_primal_dual(
    state: &mut MultiClassState,
    k: &NormalizedGradient<'_>,
    constraints: &LabelConstraints,
    config: &SolverConfig,
    coefficients: &[f64],
) -> Result<InnerReport> {
    let signs = state.v.mapv(sign);
    let weights = vec![1.0; coefficients.len()];
    inner_loop(state, k, constraints, config, coefficients, &signs, &weights)
}

fn inner_loop(
    state: &mut MultiClassState,
    k: &NormalizedGradient<'_>,
    constraints: &LabelConstraints,
    config: &SolverConfig,
    coefficients: &[f64],
    signs: &Array2<f64>,
    weights: &[f64],
) -> Result<InnerReport> {
    let classes = state.num_classes();
    let n = k.domain_dim();
    if state.u.dim() != (classes, n)
        || state.z.dim() != (classes, k.range_dim())
        || coefficients.len() != classes
        || weights.len() != classes
    {
        return Err(SolverError::ShapeMismatch("state does not match graph/classes".into()));
    }

    let dt = config.dt;
    // Class k minimizes ω_k (Δ₁(u^k) - c^k <s^k, u^k>): the dual box shrinks
    // to ω_k and the prox center becomes v + Δt ω c s.
    let mut center = state.v.clone();
    for (((mut row, s_row), &c), &w) in center.rows_mut().into_iter().zip(signs.rows()).zip(coefficients).zip(weights) {
        row.zip_mut_with(&s_row, |x, s| *x += dt * w * c * s);
    }

    let mut sigma = config.sigma0;
    let mut tau = config.tau0;
    let mut ku = vec![0.0; k.range_dim()];
    let mut div = vec![0.0; n];
    let mut previous = state.u.clone();
    let mut residual = f64::INFINITY;

    for iteration in 1..=config.inner_max {
        // Dual ascent on ω Δ₁ = max_{|z| ≤ ω} <K u, z>, then clamp.
        for ((bar_row, mut z_row), &w) in state.u_bar.rows().into_iter().zip(state.z.rows_mut()).zip(weights) {
            k.apply_into(bar_row.as_slice().expect("contiguous"), &mut ku);
            for (z, g) in z_row.iter_mut().zip(&ku) {
                *z = (*z + sigma * g).clamp(-w, w);
            }
        }

        // Proximal primal descent, then projection onto C.
        previous.assign(&state.u);
        let a = tau / dt;
        for ((mut u_row, z_row), c_row) in state.u.rows_mut().into_iter().zip(state.z.rows()).zip(center.rows()) {
            k.adjoint_into(z_row.as_slice().expect("contiguous"), &mut div);
            for ((u, d), c) in u_row.iter_mut().zip(&div).zip(c_row) {
                *u = (*u - tau * d + a * c) / (1.0 + a);
            }
        }
        constraints.project(&mut state.u);

        let gamma = config.acceleration.gamma(tau, dt);
        tau *= gamma;
        sigma /= gamma;

        ndarray::Zip::from(&mut state.u_bar)
            .and(&state.u)
            .and(&previous)
            .for_each(|bar, &u, &p| *bar = u + gamma * (u - p));

        if !all_finite(&state.u) || !all_finite(&state.z) {
            return Err(SolverError::NonFinite { iteration });
        }
        residual = frobenius_diff(&state.u, &previous) / frobenius(&previous).max(1e-30);
        if residual < config.inner_tol {
            return Ok(InnerReport {
                iterations: iteration,
                residual,
                converged: true,
            });
        }
    }
    Ok(InnerReport {
        iterations: config.inner_max,
        residual,
        converged: false,
    })
}

/// Largest number of halvings of the step fraction before an outer step
/// falls back to `u = v`.
pub const MAX_BACKTRACKS: usize = 40;

/// One ratio-decreasing step: snapshot `v = u`, solve the proximal
/// subproblem, then re-center and normalize.
///
/// With [`ShiftRule::Degree`] the iterate itself stays in `C`. Shifting
/// along the degree vector leaves `Δ₁` unchanged, so the shift is folded
/// into the coefficients: `c^k = Δ₁(v^k) / N(v^k)` with
/// `N(w) = min_m ‖w - m d‖₁`, and `s^k` is a balanced subgradient of `N` at
/// `v^k` (see [`balanced_sign`]). Class `k` is weighted by
/// `min_j N(v^j) / N(v^k)`. Since the coupling only bounds the weighted sum
/// of the linearized terms, the step then backtracks along the segment from
/// `v` to the prox solution (which stays in `C`) until the sum of shifted
/// ratios does not increase and `Δ₁(u^k) ≤ c^k ‖u^k‖₁` holds for every
/// class. The shifted, normalized copy of the result feeds the recorded
/// ratios.
///
/// With [`ShiftRule::Median`] the step is taken in full and the state is
/// replaced by its median-shifted, normalized version.
pub fn outer_step(
    state: &mut MultiClassState,
    k: &NormalizedGradient<'_>,
    constraints: &LabelConstraints,
    config: &SolverConfig,
) -> Result<OuterRecord> {
    state.restart_from_u(k);
    match config.shift {
        ShiftRule::Degree => degree_step(state, k, constraints, config),
        ShiftRule::Median => median_step(state, k, constraints, config),
    }
}

fn degree_step(
    state: &mut MultiClassState,
    k: &NormalizedGradient<'_>,
    constraints: &LabelConstraints,
    config: &SolverConfig,
) -> Result<OuterRecord> {
    let guard = config.zero_guard;
    let degrees = k.graph().degrees();
    let (coefficients, signs, norms) = shifted_coefficients(k, &state.v, guard);
    let smallest = norms.iter().copied().fold(f64::INFINITY, f64::min).max(guard);
    let weights: Vec<f64> = norms.iter().map(|n| smallest / n.max(guard)).collect();
    let inner = inner_loop(state, k, constraints, config, &coefficients, &signs, &weights)?;

    let target: f64 = coefficients.iter().sum();
    let step = &state.u - &state.v;
    let mut theta = 1.0;
    let mut accepted = None;
    for _ in 0..=MAX_BACKTRACKS {
        let mut trial = state.v.clone();
        trial.scaled_add(theta, &step);
        let view = shifted_view(&trial, degrees, ShiftRule::Degree)?;
        let ratios = class_ratios(k, &view, guard);
        let slack = decrease_slack(k, &trial, &coefficients);
        if ratios.iter().sum::<f64>() <= target && slack.iter().all(|&s| s >= 0.0) {
            accepted = Some((trial, view, ratios, slack));
            break;
        }
        theta *= 0.5;
    }
    let (trial, view, ratios, slack) = match accepted {
        Some(found) => found,
        None => {
            theta = 0.0;
            let view = shifted_view(&state.v, degrees, ShiftRule::Degree)?;
            let ratios = class_ratios(k, &view, guard);
            let slack = decrease_slack(k, &state.v, &coefficients);
            (state.v.clone(), view, ratios, slack)
        }
    };
    if theta < 1.0 {
        log::debug!("outer step backtracked to fraction {theta:e}");
    }
    state.u = trial;

    Ok(OuterRecord {
        ratio_sum: ratios.iter().sum(),
        ratios,
        ratios_before: coefficients,
        ratios_inner: class_ratios(k, &state.u, guard),
        decrease_slack: slack,
        step_fraction: theta,
        inner_iters: inner.iterations,
        residual: inner.residual,
        max_violation: constraints.max_violation(&state.u),
        shift_violation: constraints.max_violation(&view),
        wall_ms: 0.0,
    })
}

fn median_step(
    state: &mut MultiClassState,
    k: &NormalizedGradient<'_>,
    constraints: &LabelConstraints,
    config: &SolverConfig,
) -> Result<OuterRecord> {
    let guard = config.zero_guard;
    let coefficients = class_ratios(k, &state.v, guard);
    let signs = state.v.mapv(sign);
    let weights = vec![1.0; coefficients.len()];
    let inner = inner_loop(state, k, constraints, config, &coefficients, &signs, &weights)?;

    let ratios_inner = class_ratios(k, &state.u, guard);
    let slack = decrease_slack(k, &state.u, &coefficients);
    let max_violation = constraints.max_violation(&state.u);
    median_shift(&mut state.u);
    normalize_global(&mut state.u)?;
    let ratios = class_ratios(k, &state.u, guard);

    Ok(OuterRecord {
        ratio_sum: ratios.iter().sum(),
        ratios,
        ratios_before: coefficients,
        ratios_inner,
        decrease_slack: slack,
        step_fraction: 1.0,
        inner_iters: inner.iterations,
        residual: inner.residual,
        max_violation,
        shift_violation: constraints.max_violation(&state.u),
        wall_ms: 0.0,
    })
}

/// `c^k ‖u^k‖₁ - Δ₁(u^k)` per class.
fn decrease_slack(k: &NormalizedGradient<'_>, u: &Array2<f64>, coefficients: &[f64]) -> Vec<f64> {
    u.rows()
        .into_iter()
        .zip(coefficients)
        .map(|(row, c)| {
            let row = row.as_slice().expect("contiguous");
            c * l1(row) - k.total_variation_unchecked(row)
        })
        .collect()
}

/// Shifted and normalized copy of `u`.
pub(crate) fn shifted_view(u: &Array2<f64>, degrees: &[f64], rule: ShiftRule) -> Result<Array2<f64>> {
    let mut view = u.clone();
    apply_shift(&mut view, degrees, rule);
    normalize_global(&mut view)?;
    Ok(view)
}

/// Per-class `Δ₁(v) / N(v)`, balanced sign vectors and `N(v)`.
fn shifted_coefficients(
    k: &NormalizedGradient<'_>,
    v: &Array2<f64>,
    guard: f64,
) -> (Vec<f64>, Array2<f64>, Vec<f64>) {
    let degrees = k.graph().degrees();
    let mut signs = Array2::zeros(v.dim());
    let mut coefficients = Vec::with_capacity(v.nrows());
    let mut norms = Vec::with_capacity(v.nrows());
    for (v_row, mut s_row) in v.rows().into_iter().zip(signs.rows_mut()) {
        let v_row = v_row.as_slice().expect("contiguous");
        let norm = balanced_sign(v_row, degrees, s_row.as_slice_mut().expect("contiguous"));
        coefficients.push(k.total_variation_unchecked(v_row) / norm.max(guard));
        norms.push(norm);
    }
    (coefficients, signs, norms)
}

/// Writes into `s` a subgradient of `N(u) = min_m ‖u - m d‖₁` and returns
/// `N(u)`. Entries at the weighted median get the common value that makes
/// `⟨s, d⟩ = 0`, so that `⟨s, w⟩ ≤ N(w)` for every `w`.
pub fn balanced_sign(u: &[f64], degrees: &[f64], s: &mut [f64]) -> f64 {
    let f: Vec<f64> = u.iter().zip(degrees).map(|(x, d)| x / d).collect();
    let m = weighted_median(&f, degrees);
    let (mut above, mut below, mut at, mut norm) = (0.0, 0.0, 0.0, 0.0);
    for ((s, &fi), &d) in s.iter_mut().zip(&f).zip(degrees) {
        *s = sign(fi - m);
        match *s {
            x if x > 0.0 => above += d,
            x if x < 0.0 => below += d,
            _ => at += d,
        }
        norm += d * (fi - m).abs();
    }
    if at > 0.0 {
        let t = ((below - above) / at).clamp(-1.0, 1.0);
        s.iter_mut().zip(&f).filter(|(_, &fi)| fi == m).for_each(|(s, _)| *s = t);
    }
    norm
}

/// `sign(0) = 0`.
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn all_finite(a: &Array2<f64>) -> bool {
    a.iter().all(|x| x.is_finite())
}
