//! Łojasiewicz–Simon inequalities for shrinkers: the entire inequality for
//! cone-space graphs, its localized form with explicit error terms, the
//! final form under the core-graphical and scale-gap hypotheses, and an
//! empirical fit of the exponent θ.
//!
//! All evaluations are honest quadratures of both sides: a report records
//! each term and the constant that would make the inequality tight, so the
//! inequality "holds" exactly when that constant is stable over a family.

use crate::error::{LabError, Result};
use crate::fields::ScalarField;
use crate::geometry::normal_graph_geometry;
use crate::grid::Hypersurface;
use crate::operators::euler_lagrange_m;
use crate::scales::{compute_scales, conical_scale, ScaleParams, ScaleReport};
use crate::shrinkers::Shrinker;
use crate::util::total_least_squares;
use crate::weighted_spaces::{a_kn, cs_norm, reconstruct, ConeDecomposition, PairSpec};
use serde::{Deserialize, Serialize};

/// Default smallness threshold β₀ on the CS norm of the graph function.
pub const BETA0_DEFAULT: f64 = 0.05;

/// Θ = ((1 − θ/2)/(1 − θ))^{1/4} ∈ (1, (3/2)^{1/4}] for θ ∈ (0, ½].
pub fn theta_constant(theta: f64) -> Result<f64> {
    if theta <= 0.0 || theta > 0.5 {
        return Err(LabError::InvalidArgument(format!(
            "θ must lie in (0, ½] (got {theta})"
        )));
    }
    Ok(((1.0 - theta / 2.0) / (1.0 - theta)).powf(0.25))
}

/// Both sides of the (localized) Łojasiewicz–Simon inequality
/// |F(M) − F(Σ)| ≤ C·((∫_{M∩B_R}|φ|²ρ)^{1/(2(1−θ))} + error terms).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LojReport {
    /// |F(M) − F(Σ)|.
    pub lhs: f64,
    /// (∫_{M∩B_R}|φ|²ρ)^{1/(2(1−θ))}.
    pub rhs_primary: f64,
    /// R^{(n−4)/(2(1−θ))}·e^{−R²/(8(1−θ))}; zero in the entire regime.
    pub err_localization: f64,
    /// e^{−R²/(4γ)}; zero in the entire regime.
    pub err_gaussian: f64,
    /// lhs / (rhs_primary + error terms); the constant making the
    /// inequality tight (0 when both sides vanish).
    pub constant: f64,
    pub theta: f64,
    /// Θ = ((1−θ/2)/(1−θ))^{1/4}.
    pub theta_cap: f64,
    pub gamma: f64,
    /// The proof's internal localization choice γ = 2Θ^{−4}(1−θ/3).
    pub gamma_internal: f64,
    /// Localization radius actually used (r_max in the entire regime).
    pub radius: f64,
    pub entire: bool,
}

/// Discrete Gaussian area, residual, and quadrature cells of the graph of u.
struct GraphQuadrature {
    /// F(M) = Σ wᵢ Jᵢ ratioᵢ.
    f_area: f64,
    /// F(Σ) = Σ wᵢ.
    f_sigma: f64,
    /// φ = ½⟨q,ν̃⟩ − H̃ per node.
    phi: Vec<f64>,
    /// Quadrature cell wᵢ Jᵢ ratioᵢ of the graph per node.
    cell: Vec<f64>,
    /// |q| of the graph node q = p + uν.
    radius: Vec<f64>,
}

fn graph_quadrature(base: &Shrinker, u: &ScalarField) -> Result<GraphQuadrature> {
    let g = normal_graph_geometry(base, u)?;
    let w = crate::geometry::gaussian_measure(&base.surface)?;
    let pos = crate::geometry::embedded_positions(&base.surface)?;
    let m = u.len();
    let mut phi = vec![0.0; m];
    let mut cell = vec![0.0; m];
    let mut radius = vec![0.0; m];
    let mut f_area = 0.0;
    for i in 0..m {
        phi[i] = 0.5 * g.bundle.support[i] - g.bundle.mean_curvature[i];
        cell[i] = w[i] * g.area_element[i] * g.weight_ratio[i];
        f_area += cell[i];
        let nu = &base.bundle.normal[i];
        let q = [
            pos[i][0] + u.values[i] * nu[0],
            pos[i][1] + u.values[i] * nu[1],
            pos[i][2] + u.values[i] * nu[2],
        ];
        radius[i] = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
    }
    Ok(GraphQuadrature {
        f_area,
        f_sigma: w.iter().sum(),
        phi,
        cell,
        radius,
    })
}

/// Evaluate the Łojasiewicz–Simon inequality for the graph encoded by a cone
/// decomposition over Σ. `radius = None` is the entire regime (R = r_max, no
/// localization error terms); a finite R must satisfy 1 ≤ R ≤ r_ℓ(M) − 1.
pub fn evaluate_loj(
    base: &Shrinker,
    dec: &ConeDecomposition,
    theta: f64,
    radius: Option<f64>,
    gamma: f64,
) -> Result<LojReport> {
    let theta_cap = theta_constant(theta)?;
    if gamma <= 1.0 || gamma >= 2.0 {
        return Err(LabError::InvalidArgument(format!(
            "γ must lie in (1, 2) (got {gamma})"
        )));
    }
    let norm = cs_norm(&base.surface, dec, 0.5, &PairSpec::default())?;
    if norm.total >= BETA0_DEFAULT {
        return Err(LabError::HypothesisViolation(format!(
            "‖u‖_CS = {:.3e} ≥ β₀ = {BETA0_DEFAULT}",
            norm.total
        )));
    }
    let u = reconstruct(&base.surface, dec)?;
    let quad = graph_quadrature(base, &u)?;
    let r_max = base.surface.grid.r_max();
    let (r_loc, entire) = match radius {
        None => (r_max, true),
        Some(r) if r >= r_max => {
            // R beyond the grid covers everything: same integrals as the
            // entire regime, but the localization error terms are still
            // evaluated at R = r_max for consistency checks.
            (r_max, false)
        }
        Some(r) => {
            let m = Hypersurface::with_height(base.surface.grid.clone(), u.values.clone())?;
            let r_ell = conical_scale(&m, base, &ScaleParams::default())?;
            if !(1.0..=r_ell - 1.0).contains(&r) {
                return Err(LabError::InvalidArgument(format!(
                    "R = {r} outside the admissible window [1, r_ℓ − 1] = [1, {:.3}]",
                    r_ell - 1.0
                )));
            }
            (r, false)
        }
    };
    let lhs = (quad.f_area - quad.f_sigma).abs();
    let local_integral: f64 = quad
        .phi
        .iter()
        .zip(&quad.cell)
        .zip(&quad.radius)
        .filter(|&(_, &r)| r <= r_loc)
        .map(|((&p, &c), _)| c * p * p)
        .sum();
    let exponent = 1.0 / (2.0 * (1.0 - theta));
    let rhs_primary = local_integral.powf(exponent);
    let n = base.surface.grid.n() as f64;
    let (err_localization, err_gaussian) = if entire {
        (0.0, 0.0)
    } else {
        (
            r_loc.powf((n - 4.0) * exponent) * (-r_loc * r_loc / (8.0 * (1.0 - theta))).exp(),
            (-r_loc * r_loc / (4.0 * gamma)).exp(),
        )
    };
    let denom = rhs_primary + err_localization + err_gaussian;
    let constant = if denom > 0.0 { lhs / denom } else { 0.0 };
    Ok(LojReport {
        lhs,
        rhs_primary,
        err_localization,
        err_gaussian,
        constant,
        theta,
        theta_cap,
        gamma,
        gamma_internal: 2.0 * theta_cap.powi(-4) * (1.0 - theta / 3.0),
        radius: r_loc,
        entire,
    })
}

/// Empirical fit of the Łojasiewicz exponent from a family of graphs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThetaFit {
    /// TLS slope s of log|F − F_Σ| against log‖𝓜(u)‖_W.
    pub slope: f64,
    /// θ̂ = 1 − 1/s from |F − F_Σ|^{1−θ} ≤ C‖𝓜(u)‖.
    pub theta_hat: f64,
    /// Propagated slope scatter: half-width of the θ̂ confidence band.
    pub band: f64,
    pub samples_used: usize,
}

/// Fit θ from log|F − F_Σ| vs log‖𝓜(u)‖_{L²_W} over a family of height
/// fields. Samples with area gap below 10⁻¹² carry no signal and are
/// dropped; fewer than 20 surviving samples (e.g. a family inside ker L)
/// is an insufficient-signal error.
pub fn fit_theta(base: &Shrinker, family: &[ScalarField]) -> Result<ThetaFit> {
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for u in family {
        let quad = graph_quadrature(base, u)?;
        let lhs = (quad.f_area - quad.f_sigma).abs();
        if lhs < 1e-12 {
            continue;
        }
        let m = euler_lagrange_m(base, u)?;
        let w = crate::geometry::gaussian_measure(&base.surface)?;
        let mnorm: f64 = m
            .values
            .iter()
            .zip(&w)
            .map(|(&v, &wi)| v * v * wi)
            .sum::<f64>()
            .sqrt();
        if mnorm <= 0.0 {
            continue;
        }
        lx.push(mnorm.ln());
        ly.push(lhs.ln());
    }
    if lx.len() < 20 {
        return Err(LabError::InsufficientSignal(format!(
            "only {} samples with area gap above 10⁻¹²",
            lx.len()
        )));
    }
    let (_, slope, resid) = total_least_squares(&lx, &ly);
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let sx = (lx.iter().map(|&x| (x - mx) * (x - mx)).sum::<f64>() / n).sqrt();
    let slope_sigma = if sx > 0.0 { resid / sx / n.sqrt() } else { f64::INFINITY };
    let theta_hat = 1.0 - 1.0 / slope;
    Ok(ThetaFit {
        slope,
        theta_hat,
        // dθ/ds = 1/s², so the band is σ_s/s².
        band: slope_sigma / (slope * slope),
        samples_used: lx.len(),
    })
}

/// Result of the final localized Łojasiewicz–Simon check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FinalLojReport {
    /// |F(M) − F(Σ)|.
    pub lhs: f64,
    /// (∫_M |φ|²ρ)^{1/(2(1−θ′))} with θ′ = θ/3.
    pub rhs: f64,
    /// lhs / rhs.
    pub constant: f64,
    /// θ′ = θ/3.
    pub theta_prime: f64,
    /// max over sampled nodes of (1+|z|)·sup_{B_{r_z}(z)}|φ| divided by the
    /// interpolation expression ψ-bound at that node.
    pub pointwise_constant: f64,
    pub scales: ScaleReport,
}

/// The final inequality |F(M) − F(Σ)| ≤ C(∫|φ|²ρ)^{1/(2(1−θ/3))} under the
/// core-graphical hypothesis and the scale gap 𝐑(M) ≤ r̃_ℓ(M) − 1; also
/// samples the intermediate pointwise bound (1+|z|)·sup|φ| against the
/// L¹∩C^ℓ-interpolation expression per node.
pub fn final_loj_check(
    m: &Hypersurface,
    base: &Shrinker,
    theta: f64,
    params: &ScaleParams,
) -> Result<FinalLojReport> {
    let theta_cap = theta_constant(theta)?;
    let scales = compute_scales(m, base, params)?;
    if !scales.core.verdict {
        return Err(LabError::HypothesisViolation(
            "core graphical hypothesis (*_{b,r̲}) fails".into(),
        ));
    }
    let big_r = scales.shrinker_scale.value;
    if big_r > scales.rough_conical_scale - 1.0 {
        return Err(LabError::HypothesisViolation(format!(
            "scale gap: 𝐑 = {big_r:.3} > r̃_ℓ − 1 = {:.3}",
            scales.rough_conical_scale - 1.0
        )));
    }
    let u = ScalarField::new(m.height_or_zero());
    let quad = graph_quadrature(base, &u)?;
    let lhs = (quad.f_area - quad.f_sigma).abs();
    let total: f64 = quad
        .phi
        .iter()
        .zip(&quad.cell)
        .map(|(&p, &c)| c * p * p)
        .sum();
    let theta_prime = theta / 3.0;
    let rhs = total.powf(1.0 / (2.0 * (1.0 - theta_prime)));
    let constant = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    // Pointwise interpolation bound, sampled on M ∩ B_{ΘR} with
    // R = Θ^{−2}·𝐑: lhs_z = (1+|z|)·sup_{B_{r_z}(z)}|φ| against
    // r_z^{−1−n/2} e^{|z|²/8} ψ + (r_z^{n/2} e^{|z|²/8} ψ)^a (1+|z|)^{(1−ℓ)(1−a)−1}
    // with ψ = local L²_ρ mass of φ and a = a_{ℓ,n}.
    let n = base.surface.grid.n();
    let a = a_kn(params.ell, n);
    let ball = theta_cap.powi(-1) * big_r; // ΘR with R = Θ^{−2}𝐑
    let stride = if quad.phi.len() > 2000 { 4 } else { 1 };
    let mut pointwise_constant = 0.0f64;
    for i in (0..quad.phi.len()).step_by(stride) {
        let rz_center = quad.radius[i];
        if rz_center > ball {
            continue;
        }
        let r_z = 1.0 / (1.0 + rz_center);
        let mut sup_phi = 0.0f64;
        let mut psi_sq = 0.0f64;
        for j in 0..quad.phi.len() {
            if (quad.radius[j] - rz_center).abs() <= r_z {
                sup_phi = sup_phi.max(quad.phi[j].abs());
                psi_sq += quad.cell[j] * quad.phi[j] * quad.phi[j];
            }
        }
        let psi = psi_sq.sqrt();
        let boost = (rz_center * rz_center / 8.0).exp();
        let expr = r_z.powf(-1.0 - n as f64 / 2.0) * boost * psi
            + (r_z.powf(n as f64 / 2.0) * boost * psi).powf(a)
                * (1.0 + rz_center).powf((1.0 - params.ell as f64) * (1.0 - a) - 1.0);
        if expr > 0.0 {
            let lhs_z = (1.0 + rz_center) * sup_phi;
            pointwise_constant = pointwise_constant.max(lhs_z / expr);
        }
    }
    Ok(FinalLojReport {
        lhs,
        rhs,
        constant,
        theta_prime,
        pointwise_constant,
        scales,
    })
}
