//! Rescaled mean-curvature flow of normal graphs over a shrinker base.
//!
//! The flow moves the graph of u with normal speed φ = ½⟨x,ν⟩ − H; in height
//! coordinates ∂_τ u = φ/⟨ν_graph, ν_Σ⟩. With the Euler–Lagrange field
//! 𝓜(u) = φ·cos·J·ratio this is exactly the W-gradient flow of the discrete
//! Gaussian area F(u) = Σᵢ wᵢ·Jᵢ·ratioᵢ: along the flow,
//! dF/dτ = −Σᵢ wᵢ φᵢ²·Jᵢ·ratioᵢ, the discrete dissipation, so the
//! energy-dissipation identity holds up to time-discretization error only.

use crate::error::{LabError, Result};
use crate::fields::ScalarField;
use crate::geometry::normal_graph_geometry;
use crate::grid::Hypersurface;
use crate::operators::{assemble_l, spectrum, SpectralResult};
use crate::scales::{compute_scales, ScaleParams};
use crate::shrinkers::Shrinker;
use crate::util::linear_fit;
use serde::{Deserialize, Serialize};

/// Time-stepping scheme for one flow step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepMode {
    /// Forward Euler; stable for Δτ ≤ 0.2·h².
    Explicit,
    /// Implicit in the linear part L (solved in the eigenbasis of L on the
    /// base), explicit in the remainder 𝓜-velocity − Lu; Δτ ≤ 0.05.
    SemiImplicit,
}

/// Whether unstable directions are projected out after each step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stabilization {
    None,
    /// Remove the L²_W-projection onto eigenmodes of L with λ ≥ 0 after
    /// every step, emulating the tangent-flow normalization that keeps the
    /// flow near the base.
    ProjectNonnegModes,
}

/// Run configuration stored alongside a trace.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowConfig {
    pub dtau: f64,
    pub mode: StepMode,
    pub stabilization: Stabilization,
    pub grid_id: String,
    pub seed: u64,
    /// The three geometric scales are recomputed every `scale_stride`-th
    /// step (they are far more expensive than a flow step) and carried
    /// forward in between.
    pub scale_stride: usize,
}

/// One recorded instant of a flow run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowRecord {
    pub tau: f64,
    /// Gaussian area F(M_τ) of the graph.
    pub f_area: f64,
    /// ∫ |φ|² ρ over the graph.
    pub dissipation: f64,
    /// ‖u‖_{L²_W} over the base.
    pub l2w: f64,
    /// ‖u‖_{C⁰}.
    pub c0: f64,
    pub shrinker_scale: f64,
    pub rough_conical_scale: f64,
    pub conical_scale: f64,
}

/// Append-only record of a flow run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowTrace {
    pub records: Vec<FlowRecord>,
    pub config: FlowConfig,
    /// Discrete Gaussian area of the base itself (same quadrature as the
    /// per-step F, so F − f_sigma is consistent to round-off).
    pub f_sigma: f64,
    /// True when the run stopped before τ_end.
    pub truncated: bool,
    /// Reason the run stopped early, if it did.
    pub blow_up: Option<String>,
    /// Height field at the last recorded step, for chaining runs.
    pub final_state: ScalarField,
}

impl FlowTrace {
    /// CSV body with the fixed column order
    /// τ, F, dissipation, L2W, C0, R, r_rough, r_conical.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,F,dissipation,L2W,C0,R,r_rough,r_conical\n");
        for r in &self.records {
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                r.tau,
                r.f_area,
                r.dissipation,
                r.l2w,
                r.c0,
                r.shrinker_scale,
                r.rough_conical_scale,
                r.conical_scale,
            ));
        }
        out
    }

    /// JSON sidecar with the run configuration.
    pub fn config_json(&self) -> String {
        serde_json::to_string_pretty(&self.config).expect("config serializes")
    }
}

/// Instantaneous state of the graph of u: height velocity, dissipation, and
/// Gaussian area, all over the base quadrature.
struct GraphState {
    velocity: Vec<f64>,
    dissipation: f64,
    f_area: f64,
}

fn graph_state(base: &Shrinker, weights: &[f64], u: &ScalarField) -> Result<GraphState> {
    let g = normal_graph_geometry(base, u)?;
    let m = u.len();
    let mut velocity = vec![0.0; m];
    let mut dissipation = 0.0;
    let mut f_area = 0.0;
    for i in 0..m {
        let cos = g.cos_angle[i];
        if cos < 0.5 {
            return Err(LabError::GraphOutOfReach(format!(
                "⟨ν_graph, ν_Σ⟩ = {cos:.3} < 0.5 at node {i}"
            )));
        }
        let phi = 0.5 * g.bundle.support[i] - g.bundle.mean_curvature[i];
        velocity[i] = phi / cos;
        let cell = weights[i] * g.area_element[i] * g.weight_ratio[i];
        dissipation += cell * phi * phi;
        f_area += cell;
    }
    Ok(GraphState {
        velocity,
        dissipation,
        f_area,
    })
}

/// Maximum height the flow tolerates before declaring blow-up: the normal
/// graph's geometric reach 0.9/max|A|, capped at 1 so that flat bases (where
/// the reach is infinite) still report runaway growth.
fn reach_cap(base: &Shrinker) -> f64 {
    let max_a = base
        .bundle
        .a_sq
        .iter()
        .fold(0.0f64, |m, &a| m.max(a.sqrt()));
    if max_a > 0.0 {
        (0.9 / max_a).min(1.0)
    } else {
        1.0
    }
}

/// Eigenmodes treated as "λ ≥ 0" for stabilization: everything above −¼,
/// halfway to the first stable eigenvalue on the canonical bases, so that
/// discretization error in the neutral modes cannot leak them past the
/// projector.
const NONNEG_CUT: f64 = -0.25;

struct FlowEngine<'a> {
    base: &'a Shrinker,
    weights: Vec<f64>,
    /// Full eigenbasis of L on the base (semi-implicit solves and
    /// stabilization both live here); built lazily.
    spectral: Option<SpectralResult>,
}

impl<'a> FlowEngine<'a> {
    fn new(base: &'a Shrinker) -> Result<Self> {
        let op = assemble_l(base, 0.5, None)?;
        Ok(FlowEngine {
            base,
            weights: op.weights.clone(),
            spectral: None,
        })
    }

    fn spectral(&mut self) -> Result<&SpectralResult> {
        if self.spectral.is_none() {
            let op = assemble_l(self.base, 0.5, None)?;
            self.spectral = Some(spectrum(&op, op.len())?);
        }
        Ok(self.spectral.as_ref().unwrap())
    }

    fn ip_w(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.weights)
            .map(|((&x, &y), &w)| x * y * w)
            .sum()
    }

    fn step(&mut self, u: &ScalarField, dtau: f64, mode: StepMode) -> Result<ScalarField> {
        let h = self.base.surface.grid.spacing();
        match mode {
            StepMode::Explicit => {
                if dtau > 0.2 * h * h + 1e-15 {
                    return Err(LabError::InvalidArgument(format!(
                        "explicit step needs Δτ ≤ 0.2h² = {:.3e} (got {dtau:.3e})",
                        0.2 * h * h
                    )));
                }
                let state = graph_state(self.base, &self.weights, u)?;
                Ok(ScalarField::new(
                    u.values
                        .iter()
                        .zip(&state.velocity)
                        .map(|(&ui, &vi)| ui + dtau * vi)
                        .collect(),
                ))
            }
            StepMode::SemiImplicit => {
                if dtau > 0.05 + 1e-15 {
                    return Err(LabError::InvalidArgument(format!(
                        "semi-implicit step needs Δτ ≤ 0.05 (got {dtau:.3e})"
                    )));
                }
                let state = graph_state(self.base, &self.weights, u)?;
                let op = assemble_l(self.base, 0.5, None)?;
                let lu = op.apply(&u.values);
                // Nonlinear remainder, treated explicitly.
                let remainder: Vec<f64> = state
                    .velocity
                    .iter()
                    .zip(&lu)
                    .map(|(&v, &l)| v - l)
                    .collect();
                let weights = self.weights.clone();
                let spec = self.spectral()?;
                let m = u.len();
                let mut next = vec![0.0; m];
                for (lam, e) in spec.eigenvalues.iter().zip(&spec.eigenfields) {
                    let c: f64 = u
                        .values
                        .iter()
                        .zip(e)
                        .zip(&weights)
                        .map(|((&x, &y), &w)| x * y * w)
                        .sum();
                    let r: f64 = remainder
                        .iter()
                        .zip(e)
                        .zip(&weights)
                        .map(|((&x, &y), &w)| x * y * w)
                        .sum();
                    let cnew = (c + dtau * r) / (1.0 - dtau * lam);
                    for (ni, &ei) in next.iter_mut().zip(e) {
                        *ni += cnew * ei;
                    }
                }
                Ok(ScalarField::new(next))
            }
        }
    }

    /// Remove the projection onto eigenmodes with λ above the nonnegative
    /// cut.
    fn stabilize(&mut self, u: &ScalarField) -> Result<ScalarField> {
        let weights = self.weights.clone();
        let spec = self.spectral()?;
        let mut out = u.values.clone();
        for (lam, e) in spec.eigenvalues.iter().zip(&spec.eigenfields) {
            if *lam < NONNEG_CUT {
                continue;
            }
            let c: f64 = u
                .values
                .iter()
                .zip(e)
                .zip(&weights)
                .map(|((&x, &y), &w)| x * y * w)
                .sum();
            for (oi, &ei) in out.iter_mut().zip(e) {
                *oi -= c * ei;
            }
        }
        Ok(ScalarField::new(out))
    }
}

/// Advance the graph of u by one step of the rescaled flow.
pub fn step_rescaled_flow(
    base: &Shrinker,
    u: &ScalarField,
    dtau: f64,
    mode: StepMode,
) -> Result<ScalarField> {
    let mut engine = FlowEngine::new(base)?;
    engine.step(u, dtau, mode)
}

/// Run the rescaled flow to τ_end with the semi-implicit stepper, recording
/// every step. Blow-up (loss of graph reach or runaway height) truncates the
/// trace and is reported in it rather than as an error.
pub fn run_flow(
    base: &Shrinker,
    u0: &ScalarField,
    tau_end: f64,
    dtau: f64,
    stabilization: Stabilization,
) -> Result<FlowTrace> {
    let config = FlowConfig {
        dtau,
        mode: StepMode::SemiImplicit,
        stabilization,
        grid_id: format!("{}:{}", base.surface.grid.kind_name(), base.surface.grid.len()),
        seed: 0,
        scale_stride: 1,
    };
    run_flow_configured(base, u0, tau_end, &config, &ScaleParams::default())
}

/// `run_flow` with explicit configuration and scale parameters.
pub fn run_flow_configured(
    base: &Shrinker,
    u0: &ScalarField,
    tau_end: f64,
    config: &FlowConfig,
    scale_params: &ScaleParams,
) -> Result<FlowTrace> {
    if config.dtau <= 0.0 || tau_end <= 0.0 || config.scale_stride == 0 {
        return Err(LabError::InvalidArgument(
            "run_flow needs Δτ > 0, τ_end > 0, scale_stride ≥ 1".into(),
        ));
    }
    let cap = reach_cap(base);
    let c0_init = u0.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if c0_init > 0.1 * cap {
        return Err(LabError::InvalidArgument(format!(
            "initial height {c0_init:.3e} exceeds a tenth of the reach {cap:.3e}"
        )));
    }
    let mut engine = FlowEngine::new(base)?;
    let f_sigma: f64 = engine.weights.iter().sum();
    let n_steps = (tau_end / config.dtau).round().max(1.0) as usize;
    let mut u = u0.clone();
    let mut records: Vec<FlowRecord> = Vec::with_capacity(n_steps + 1);
    let mut truncated = false;
    let mut blow_up = None;
    let mut last_scales = (f64::NAN, f64::NAN, f64::NAN);
    for step in 0..=n_steps {
        let tau = step as f64 * config.dtau;
        let state = match graph_state(base, &engine.weights, &u) {
            Ok(s) => s,
            Err(e) => {
                truncated = true;
                blow_up = Some(format!("step {step}: {e}"));
                break;
            }
        };
        let c0 = u.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let l2w = engine.ip_w(&u.values, &u.values).sqrt();
        if !state.f_area.is_finite() || !l2w.is_finite() {
            truncated = true;
            blow_up = Some(format!("step {step}: non-finite state"));
            break;
        }
        if step % config.scale_stride == 0 {
            let m = Hypersurface::with_height(base.surface.grid.clone(), u.values.clone())?;
            let rep = compute_scales(&m, base, scale_params)?;
            last_scales = (
                rep.shrinker_scale.value,
                rep.rough_conical_scale,
                rep.conical_scale,
            );
        }
        records.push(FlowRecord {
            tau,
            f_area: state.f_area,
            dissipation: state.dissipation,
            l2w,
            c0,
            shrinker_scale: last_scales.0,
            rough_conical_scale: last_scales.1,
            conical_scale: last_scales.2,
        });
        if c0 > cap {
            truncated = true;
            blow_up = Some(format!(
                "step {step}: ‖u‖_C⁰ = {c0:.3e} exceeded the reach cap {cap:.3e}"
            ));
            break;
        }
        if step == n_steps {
            break;
        }
        u = match engine.step(&u, config.dtau, config.mode) {
            Ok(next) => next,
            Err(e) => {
                truncated = true;
                blow_up = Some(format!("step {step}: {e}"));
                break;
            }
        };
        if config.stabilization == Stabilization::ProjectNonnegModes {
            u = engine.stabilize(&u)?;
        }
    }
    Ok(FlowTrace {
        records,
        config: config.clone(),
        f_sigma,
        truncated,
        blow_up,
        final_state: u,
    })
}

/// Result of checking the energy-dissipation identity along a trace.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DissipationReport {
    /// max over steps of |ΔF/Δτ + dissipation|.
    pub max_defect: f64,
    /// ΔF ≤ 2·Δτ·dissipation at every step.
    pub monotone: bool,
    /// ∫ (dissipation)^{1/2} dτ over the trace (trapezoid).
    pub sqrt_dissipation_integral: f64,
}

/// Check dF/dτ = −∫|φ|²ρ discretely along a recorded trace.
pub fn dissipation_check(trace: &FlowTrace) -> Result<DissipationReport> {
    if trace.records.len() < 3 {
        return Err(LabError::InvalidArgument(
            "dissipation check needs at least 3 recorded steps".into(),
        ));
    }
    let mut max_defect = 0.0f64;
    let mut monotone = true;
    let mut integral = 0.0;
    for w in trace.records.windows(2) {
        let dt = w[1].tau - w[0].tau;
        let df = w[1].f_area - w[0].f_area;
        max_defect = max_defect.max((df / dt + w[0].dissipation).abs());
        if df > 2.0 * dt * w[0].dissipation + 1e-14 {
            monotone = false;
        }
        integral += 0.5 * dt * (w[0].dissipation.sqrt() + w[1].dissipation.sqrt());
    }
    Ok(DissipationReport {
        max_defect,
        monotone,
        sqrt_dissipation_integral: integral,
    })
}

/// Measured convergence rates of F − F(Σ) over a τ-window.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayReport {
    /// Slope of log(F − F_Σ) against τ.
    pub exponential_rate: f64,
    /// Slope of log(F − F_Σ) against log(1 + τ).
    pub polynomial_rate: f64,
    /// The gap shrank across the window at least as fast as
    /// (1+τ)^{−1/(1−2θ′)}.
    pub polynomial_ok: bool,
}

/// Fit decay rates of the area gap on [window.0, window.1] and compare with
/// the polynomial bound of exponent −1/(1 − 2θ′).
pub fn measure_decay_rate(
    trace: &FlowTrace,
    window: (f64, f64),
    theta_prime: f64,
) -> Result<DecayReport> {
    if !(0.0..0.5).contains(&theta_prime) {
        return Err(LabError::InvalidArgument(format!(
            "θ′ must lie in [0, ½) (got {theta_prime})"
        )));
    }
    let floor = 10.0 * f64::EPSILON;
    let samples: Vec<(f64, f64)> = trace
        .records
        .iter()
        .filter(|r| r.tau >= window.0 && r.tau <= window.1)
        .map(|r| (r.tau, r.f_area - trace.f_sigma))
        .collect();
    if samples.len() < 3 || samples.iter().any(|&(_, g)| g <= floor) {
        return Err(LabError::InsufficientSignal(
            "area gap at or below round-off in the window".into(),
        ));
    }
    let taus: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let logs: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let log1p: Vec<f64> = taus.iter().map(|&t| (1.0 + t).ln()).collect();
    let (_, exponential_rate, _) = linear_fit(&taus, &logs);
    let (_, polynomial_rate, _) = linear_fit(&log1p, &logs);
    let (t0, g0) = *samples.first().unwrap();
    let (t1, g1) = *samples.last().unwrap();
    let bound_exp = -1.0 / (1.0 - 2.0 * theta_prime);
    let bound_ratio = ((1.0 + t1) / (1.0 + t0)).powf(bound_exp);
    let polynomial_ok = g1 / g0 <= bound_ratio * 1.05;
    Ok(DecayReport {
        exponential_rate,
        polynomial_rate,
        polynomial_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shrinkers::{canonical_shrinker, GridSpec, ShrinkerKind};
    use approx::assert_abs_diff_eq;

    fn line_base() -> Shrinker {
        canonical_shrinker(ShrinkerKind::Line, 1, &GridSpec::default()).unwrap()
    }

    fn mode2(base: &Shrinker, eps: f64) -> ScalarField {
        let xs = match &base.surface.grid {
            crate::grid::BaseGrid::Line { xs } => xs.clone(),
            _ => unreachable!(),
        };
        ScalarField::new(xs.iter().map(|x| eps * (x * x - 2.0)).collect())
    }

    fn quiet_config(dtau: f64, stab: Stabilization) -> FlowConfig {
        FlowConfig {
            dtau,
            mode: StepMode::SemiImplicit,
            stabilization: stab,
            grid_id: "test".into(),
            seed: 0,
            scale_stride: usize::MAX,
        }
    }

    #[test]
    fn constant_mode_follows_the_exact_ode() {
        // u ≡ c on the line: φ = c/2, cos = 1, so one explicit Euler step is
        // exactly c·(1 + Δτ/2).
        let base = line_base();
        let c = 0.01;
        let u = ScalarField::new(vec![c; base.surface.grid.len()]);
        let dtau = 4e-4; // ≤ 0.2·h² at h = 0.05
        let next = step_rescaled_flow(&base, &u, dtau, StepMode::Explicit).unwrap();
        for &v in &next.values {
            assert_abs_diff_eq!(v, c * (1.0 + dtau / 2.0), epsilon = 1e-14);
        }
        // u ≡ 0 is a fixed point of either stepper.
        let zero = ScalarField::zeros(base.surface.grid.len());
        let next = step_rescaled_flow(&base, &zero, 0.05, StepMode::SemiImplicit).unwrap();
        for &v in &next.values {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn stability_bounds_are_enforced() {
        let base = line_base();
        let u = ScalarField::zeros(base.surface.grid.len());
        assert!(matches!(
            step_rescaled_flow(&base, &u, 0.01, StepMode::Explicit),
            Err(LabError::InvalidArgument(_))
        ));
        assert!(matches!(
            step_rescaled_flow(&base, &u, 0.2, StepMode::SemiImplicit),
            Err(LabError::InvalidArgument(_))
        ));
    }

    #[test]
    fn stabilized_mode_two_decays_at_the_eigenrate() {
        let base = line_base();
        let u0 = mode2(&base, 5e-4);
        let trace = run_flow_configured(
            &base,
            &u0,
            2.0,
            &quiet_config(0.01, Stabilization::ProjectNonnegModes),
            &ScaleParams::default(),
        )
        .unwrap();
        assert!(!trace.truncated);
        let first = trace.records.first().unwrap();
        let last = trace.records.last().unwrap();
        // ‖u‖ decays like e^{−τ/2} (eigenvalue −½), the area gap like e^{−τ}.
        let ratio = last.l2w / first.l2w;
        assert_abs_diff_eq!(ratio, (-1.0f64).exp(), epsilon = 0.02);
        let rate = measure_decay_rate(&trace, (0.0, 2.0), 1.0 / 6.0).unwrap();
        assert_abs_diff_eq!(rate.exponential_rate, -1.0, epsilon = 0.05);
        assert!(rate.polynomial_ok, "exponential beats any polynomial bound");
        // F is nonincreasing along the stabilized run.
        for w in trace.records.windows(2) {
            assert!(w[1].f_area <= w[0].f_area + 1e-13);
        }
    }

    #[test]
    fn dissipation_defect_is_first_order_in_dtau() {
        let base = line_base();
        let u0 = mode2(&base, 5e-4);
        let mut defects = Vec::new();
        for dtau in [0.02, 0.01] {
            let trace = run_flow_configured(
                &base,
                &u0,
                0.5,
                &quiet_config(dtau, Stabilization::ProjectNonnegModes),
                &ScaleParams::default(),
            )
            .unwrap();
            let rep = dissipation_check(&trace).unwrap();
            assert!(rep.monotone);
            defects.push(rep.max_defect);
        }
        let ratio = defects[0] / defects[1];
        assert!(
            (1.5..=2.5).contains(&ratio),
            "defect ratio {ratio} not ≈ 2 under Δτ halving"
        );
    }

    #[test]
    fn unstabilized_constant_blows_up_at_the_ode_time() {
        // ċ = c/2 ⇒ c(τ) = c₀e^{τ/2} crosses the reach cap 1.0 at
        // τ = 2·ln(1/c₀) ≈ 9.21 for c₀ = 0.01.
        let base = line_base();
        let u0 = ScalarField::new(vec![0.01; base.surface.grid.len()]);
        let trace = run_flow_configured(
            &base,
            &u0,
            12.0,
            &quiet_config(0.05, Stabilization::None),
            &ScaleParams::default(),
        )
        .unwrap();
        assert!(trace.truncated);
        assert!(trace.blow_up.is_some());
        let t_stop = trace.records.last().unwrap().tau;
        assert_abs_diff_eq!(t_stop, 2.0 * (1.0f64 / 0.01).ln(), epsilon = 0.5);
    }

    #[test]
    fn exact_base_gives_a_constant_trace() {
        let base = line_base();
        let u0 = ScalarField::zeros(base.surface.grid.len());
        let config = FlowConfig {
            scale_stride: 10,
            ..quiet_config(0.05, Stabilization::None)
        };
        let trace =
            run_flow_configured(&base, &u0, 1.0, &config, &ScaleParams::default()).unwrap();
        assert!(!trace.truncated);
        for r in &trace.records {
            assert_abs_diff_eq!(r.f_area, trace.f_sigma, epsilon = 1e-13);
            assert!(r.dissipation < 1e-20);
        }
        let rep = dissipation_check(&trace).unwrap();
        assert!(rep.max_defect < 1e-12);
        // Scales of the exact base: saturated shrinker scale, conical chain.
        let r0 = &trace.records[0];
        assert_abs_diff_eq!(r0.shrinker_scale, 12.0, epsilon = 1e-9);
        assert!(r0.conical_scale >= 5.0);
        // Round-off gap means no decay signal to fit.
        assert!(matches!(
            measure_decay_rate(&trace, (0.0, 1.0), 0.25),
            Err(LabError::InsufficientSignal(_))
        ));
    }

    #[test]
    fn csv_and_sidecar_have_the_fixed_layout() {
        let base = line_base();
        let u0 = mode2(&base, 5e-4);
        let trace = run_flow_configured(
            &base,
            &u0,
            0.1,
            &quiet_config(0.05, Stabilization::ProjectNonnegModes),
            &ScaleParams::default(),
        )
        .unwrap();
        let csv = trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "tau,F,dissipation,L2W,C0,R,r_rough,r_conical"
        );
        assert_eq!(csv.lines().count(), trace.records.len() + 1);
        let sidecar = trace.config_json();
        assert!(sidecar.contains("\"dtau\""));
        assert!(sidecar.contains("\"stabilization\""));
    }
}
