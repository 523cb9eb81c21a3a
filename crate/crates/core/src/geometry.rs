//! Extrinsic geometry of discrete hypersurfaces: unit normal, mean
//! curvature, second fundamental form, support ⟨x,ν⟩, shrinker residual φ,
//! Gaussian area and entropy, and the closed normal-graph formulas.
//!
//! Sign conventions: the scalar mean curvature H is positive on round
//! spheres/circles with outward normal (H⃗ = −Hν), so the shrinker residual
//! φ = ½⟨x,ν⟩ − H vanishes on the canonical shrinkers. Graphs over the line
//! and the plane use the upward normal; circles and closed profiles use the
//! outward normal.

use crate::error::{LabError, Result};
use crate::fields::{curve_params, fd_quartic, param_d1, param_d2, ScalarField};
use crate::grid::{BaseGrid, Hypersurface};
use crate::shrinkers::Shrinker;
use crate::util::{dot3, norm3, sub3};
use serde::{Deserialize, Serialize};

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Gaussian density ρ = (4π)^{−n/2} e^{−|x|²/4}.
pub fn gaussian_weight(n: usize, q: [f64; 3]) -> f64 {
    FOUR_PI.powf(-(n as f64) / 2.0) * (-dot3(q, q) / 4.0).exp()
}

/// Per-node extrinsic geometry.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeometryBundle {
    /// Unit normal ν per node (third component 0 for curves in ℝ²).
    pub normal: Vec<[f64; 3]>,
    /// Scalar mean curvature H (positive on round shrinkers, outward ν).
    pub mean_curvature: Vec<f64>,
    /// Principal curvatures (second entry 0 for n = 1).
    pub principal: Vec<[f64; 2]>,
    /// Support function ⟨x, ν⟩.
    pub support: Vec<f64>,
    /// Squared norm of the second fundamental form |A|².
    pub a_sq: Vec<f64>,
}

impl GeometryBundle {
    /// The bundle for the opposite orientation: ν, H, ⟨x,ν⟩ and the
    /// principal curvatures all change sign; |A|² is unchanged.
    pub fn flipped(&self) -> GeometryBundle {
        GeometryBundle {
            normal: self.normal.iter().map(|v| [-v[0], -v[1], -v[2]]).collect(),
            mean_curvature: self.mean_curvature.iter().map(|h| -h).collect(),
            principal: self.principal.iter().map(|p| [-p[0], -p[1]]).collect(),
            support: self.support.iter().map(|s| -s).collect(),
            a_sq: self.a_sq.clone(),
        }
    }
}

/// Frame of a sampled planar curve: tangent, left normal, curvature with
/// respect to the left normal (γ″ = κ N in unit-speed parametrization).
struct CurveFrame {
    tangent: Vec<[f64; 2]>,
    kappa_left: Vec<f64>,
}

fn curve_frame(points: &[[f64; 2]], closed: bool) -> Result<CurveFrame> {
    let n = points.len();
    let (ts, period) = curve_params(points, closed);
    if ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LabError::InvalidGrid("repeated curve nodes".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
    let ys: Vec<f64> = points.iter().map(|p| p[1]).collect();
    // Quartic sliding-window stencils: curvature is parametrization
    // invariant, so chord parametrization does not cap the order, and the
    // fourth-order truncation lets the spacing stay large enough that
    // position round-off (ε/h²) is negligible.
    let per = if closed { Some(period) } else { None };
    let (dx, ddx) = fd_quartic(&ts, &xs, per);
    let (dy, ddy) = fd_quartic(&ts, &ys, per);
    let mut tangent = Vec::with_capacity(n);
    let mut kappa = Vec::with_capacity(n);
    for i in 0..n {
        let sp = (dx[i] * dx[i] + dy[i] * dy[i]).sqrt();
        if sp == 0.0 {
            return Err(LabError::InvalidGrid("degenerate curve speed".into()));
        }
        tangent.push([dx[i] / sp, dy[i] / sp]);
        kappa.push((dx[i] * ddy[i] - dy[i] * ddx[i]) / (sp * sp * sp));
    }
    Ok(CurveFrame {
        tangent,
        kappa_left: kappa,
    })
}

/// Embedded ℝ^{n+1} positions of the surface nodes (normal graph applied).
pub fn embedded_positions(surface: &Hypersurface) -> Result<Vec<[f64; 3]>> {
    let u = surface.height_or_zero();
    match &surface.grid {
        BaseGrid::Line { xs } => Ok(xs
            .iter()
            .zip(&u)
            .map(|(&x, &h)| [x, h, 0.0])
            .collect()),
        BaseGrid::Circle { radius, .. } => Ok(surface
            .grid
            .thetas()
            .iter()
            .zip(&u)
            .map(|(&th, &h)| [(radius + h) * th.cos(), (radius + h) * th.sin(), 0.0])
            .collect()),
        BaseGrid::PlanePolar { rs, n_theta } => {
            let thetas = surface.grid.thetas();
            let mut out = Vec::with_capacity(rs.len() * n_theta);
            for (ir, &r) in rs.iter().enumerate() {
                for (it, &th) in thetas.iter().enumerate() {
                    out.push([r * th.cos(), r * th.sin(), u[ir * n_theta + it]]);
                }
            }
            Ok(out)
        }
        BaseGrid::Profile { points, closed, .. } => {
            if u.iter().all(|&h| h == 0.0) {
                return Ok(points.iter().map(|p| [p[0], p[1], 0.0]).collect());
            }
            let prof = profile_points_displaced(points, *closed, &u)?;
            Ok(prof.iter().map(|p| [p[0], p[1], 0.0]).collect())
        }
    }
}

/// Displace a profile curve along its (outward-oriented) normal.
fn profile_points_displaced(
    points: &[[f64; 2]],
    closed: bool,
    u: &[f64],
) -> Result<Vec<[f64; 2]>> {
    let frame = curve_frame(points, closed)?;
    let flip = profile_outward_flip(points, &frame);
    Ok(points
        .iter()
        .zip(frame.tangent.iter().zip(u))
        .map(|(p, (t, &h))| {
            let nu = right_normal(*t, flip);
            [p[0] + h * nu[0], p[1] + h * nu[1]]
        })
        .collect())
}

fn right_normal(t: [f64; 2], flip: bool) -> [f64; 2] {
    let s = if flip { -1.0 } else { 1.0 };
    [s * t[1], -s * t[0]]
}

/// Choose the normal sign that points outward (positive mean support) on
/// star-shaped profiles.
fn profile_outward_flip(points: &[[f64; 2]], frame: &CurveFrame) -> bool {
    let mut s = 0.0;
    for (p, t) in points.iter().zip(&frame.tangent) {
        let nu = [t[1], -t[0]];
        s += p[0] * nu[0] + p[1] * nu[1];
    }
    s < 0.0
}

/// Extrinsic geometry of a discrete hypersurface (parametric finite
/// differences on the embedded nodes).
pub fn geometry_bundle(surface: &Hypersurface) -> Result<GeometryBundle> {
    let u = surface.height_or_zero();
    match &surface.grid {
        BaseGrid::Line { .. } | BaseGrid::Circle { .. } => {
            let pos = embedded_positions(surface)?;
            let pts: Vec<[f64; 2]> = pos.iter().map(|p| [p[0], p[1]]).collect();
            let closed = matches!(surface.grid, BaseGrid::Circle { .. });
            let frame = curve_frame(&pts, closed)?;
            // Line graphs: upward normal (left of the left-to-right tangent).
            // Circle graphs: outward normal (right of the ccw tangent).
            let use_left = matches!(surface.grid, BaseGrid::Line { .. });
            Ok(curve_bundle(&pts, &frame, use_left))
        }
        BaseGrid::Profile {
            points,
            closed,
            dim,
        } => {
            let prof = if u.iter().all(|&h| h == 0.0) {
                points.clone()
            } else {
                profile_points_displaced(points, *closed, &u)?
            };
            let frame = curve_frame(&prof, *closed)?;
            let flip = profile_outward_flip(&prof, &frame);
            if *dim == 1 {
                // ν = outward; with ccw orientation that is the right normal
                // and H = +κ_left; a clockwise sampling flips both.
                Ok(curve_bundle_signed(&prof, &frame, flip))
            } else {
                revolution_bundle(&prof, &frame, flip)
            }
        }
        BaseGrid::PlanePolar { .. } => plane_monge_bundle(surface, &u),
    }
}

/// Curve bundle with ν = left normal (use_left) or right normal.
fn curve_bundle(pts: &[[f64; 2]], frame: &CurveFrame, use_left: bool) -> GeometryBundle {
    // Right normal: H = +κ_left. Left normal: H = −κ_left.
    curve_bundle_signed(pts, frame, use_left)
}

/// flip = false: ν = right normal, H = κ_left; flip = true: ν = left normal,
/// H = −κ_left.
fn curve_bundle_signed(pts: &[[f64; 2]], frame: &CurveFrame, flip: bool) -> GeometryBundle {
    let n = pts.len();
    let mut normal = Vec::with_capacity(n);
    let mut mean = Vec::with_capacity(n);
    let mut principal = Vec::with_capacity(n);
    let mut support = Vec::with_capacity(n);
    let mut a_sq = Vec::with_capacity(n);
    let sgn = if flip { -1.0 } else { 1.0 };
    for i in 0..n {
        let t = frame.tangent[i];
        let nu = right_normal(t, flip);
        let h = sgn * frame.kappa_left[i];
        normal.push([nu[0], nu[1], 0.0]);
        mean.push(h);
        principal.push([h, 0.0]);
        support.push(pts[i][0] * nu[0] + pts[i][1] * nu[1]);
        a_sq.push(h * h);
    }
    GeometryBundle {
        normal,
        mean_curvature: mean,
        principal,
        support,
        a_sq,
    }
}

/// Surface of revolution about the z-axis: profile curvature plus the
/// rotational principal curvature ν_x / x.
fn revolution_bundle(
    prof: &[[f64; 2]],
    frame: &CurveFrame,
    flip: bool,
) -> Result<GeometryBundle> {
    let n = prof.len();
    let sgn = if flip { -1.0 } else { 1.0 };
    let mut normal = Vec::with_capacity(n);
    let mut mean = Vec::with_capacity(n);
    let mut principal = Vec::with_capacity(n);
    let mut support = Vec::with_capacity(n);
    let mut a_sq = Vec::with_capacity(n);
    for i in 0..n {
        let t = frame.tangent[i];
        let nu = right_normal(t, flip);
        let k1 = sgn * frame.kappa_left[i];
        let x = prof[i][0];
        if x <= 0.0 {
            return Err(LabError::InvalidGrid(
                "revolution profile must stay in x > 0".into(),
            ));
        }
        let k2 = if x < 1e-9 { k1 } else { nu[0] / x };
        // Representative meridian at angle 0: 3D normal (ν_x, 0, ν_z).
        normal.push([nu[0], 0.0, nu[1]]);
        mean.push(k1 + k2);
        principal.push([k1, k2]);
        support.push(prof[i][0] * nu[0] + prof[i][1] * nu[1]);
        a_sq.push(k1 * k1 + k2 * k2);
    }
    Ok(GeometryBundle {
        normal,
        mean_curvature: mean,
        principal,
        support,
        a_sq,
    })
}

/// Monge-form geometry for graphs z = u(r, θ) over the plane (upward ν).
fn plane_monge_bundle(surface: &Hypersurface, u: &[f64]) -> Result<GeometryBundle> {
    let grid = &surface.grid;
    let (rs, nt) = match grid {
        BaseGrid::PlanePolar { rs, n_theta } => (rs.clone(), *n_theta),
        _ => unreachable!(),
    };
    let thetas = grid.thetas();
    let d1 = param_d1(grid, u);
    let d2 = param_d2(grid, u);
    let n = grid.len();
    let mut normal = Vec::with_capacity(n);
    let mut mean = Vec::with_capacity(n);
    let mut principal = Vec::with_capacity(n);
    let mut support = Vec::with_capacity(n);
    let mut a_sq = Vec::with_capacity(n);
    for (ir, &r) in rs.iter().enumerate() {
        for (it, &th) in thetas.iter().enumerate() {
            let i = ir * nt + it;
            let (c, s) = (th.cos(), th.sin());
            let ur = d1[0][i];
            let ut = d1[1][i];
            // Cartesian gradient.
            let ux = ur * c - ut * s / r;
            let uy = ur * s + ut * c / r;
            // Flat Hessian in the orthonormal polar frame, rotated to
            // Cartesian axes.
            let hrr = d2[0][i];
            let hrt = d2[1][i] / r - d1[1][i] / (r * r);
            let htt = d2[2][i] / (r * r) + d1[0][i] / r;
            let hxx = c * c * hrr - 2.0 * c * s * hrt + s * s * htt;
            let hxy = c * s * (hrr - htt) + (c * c - s * s) * hrt;
            let hyy = s * s * hrr + 2.0 * c * s * hrt + c * c * htt;
            let v2 = 1.0 + ux * ux + uy * uy;
            let v = v2.sqrt();
            // Shape operator S = −(1/v) G^{-1} Hess, G^{-1} = I − ∇u∇uᵀ/v².
            let g11 = 1.0 - ux * ux / v2;
            let g12 = -ux * uy / v2;
            let g22 = 1.0 - uy * uy / v2;
            let m11 = -(g11 * hxx + g12 * hxy) / v;
            let m12 = -(g11 * hxy + g12 * hyy) / v;
            let m21 = -(g12 * hxx + g22 * hxy) / v;
            let m22 = -(g12 * hxy + g22 * hyy) / v;
            let tr = m11 + m22;
            let det = m11 * m22 - m12 * m21;
            let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
            let (k1, k2) = (0.5 * tr + disc, 0.5 * tr - disc);
            let x = r * c;
            let y = r * s;
            normal.push([-ux / v, -uy / v, 1.0 / v]);
            mean.push(tr);
            principal.push([k1, k2]);
            support.push((u[i] - x * ux - y * uy) / v);
            a_sq.push(m11 * m11 + m12 * m21 + m21 * m12 + m22 * m22);
        }
    }
    Ok(GeometryBundle {
        normal,
        mean_curvature: mean,
        principal,
        support,
        a_sq,
    })
}

/// Shrinker residual φ = ½⟨x,ν⟩ − H per node.
pub fn phi_residual(surface: &Hypersurface) -> Result<ScalarField> {
    let b = geometry_bundle(surface)?;
    Ok(ScalarField::new(
        b.support
            .iter()
            .zip(&b.mean_curvature)
            .map(|(&s, &h)| 0.5 * s - h)
            .collect(),
    ))
}

/// Unweighted ℋⁿ quadrature weight per node (trapezoidal in each grid axis).
pub fn area_weights(surface: &Hypersurface) -> Result<Vec<f64>> {
    let u = surface.height_or_zero();
    match &surface.grid {
        BaseGrid::Line { .. } | BaseGrid::Circle { .. } => {
            let pos = embedded_positions(surface)?;
            Ok(curve_weights(&pos, matches!(surface.grid, BaseGrid::Circle { .. })))
        }
        BaseGrid::Profile {
            points,
            closed,
            dim,
        } => {
            let prof = if u.iter().all(|&h| h == 0.0) {
                points.clone()
            } else {
                profile_points_displaced(points, *closed, &u)?
            };
            let pos: Vec<[f64; 3]> = prof.iter().map(|p| [p[0], p[1], 0.0]).collect();
            let mut w = curve_weights(&pos, *closed);
            if *dim == 2 {
                for (wi, p) in w.iter_mut().zip(&prof) {
                    *wi *= 2.0 * std::f64::consts::PI * p[0];
                }
            }
            Ok(w)
        }
        BaseGrid::PlanePolar { rs, n_theta } => {
            let nt = *n_theta;
            let ht = 2.0 * std::f64::consts::PI / nt as f64;
            let d1 = param_d1(&surface.grid, &u);
            let mut w = vec![0.0; rs.len() * nt];
            for (ir, &r) in rs.iter().enumerate() {
                let dr = radial_trapezoid_weight(rs, ir);
                for it in 0..nt {
                    let i = ir * nt + it;
                    let ur = d1[0][i];
                    let ut = d1[1][i];
                    let v = (1.0 + ur * ur + ut * ut / (r * r)).sqrt();
                    w[i] = r * dr * ht * v;
                }
            }
            Ok(w)
        }
    }
}

fn radial_trapezoid_weight(rs: &[f64], ir: usize) -> f64 {
    let n = rs.len();
    if n == 1 {
        return 0.0;
    }
    if ir == 0 {
        // The innermost cell also carries the unsampled disc r < rs[0]:
        // extending the cell to the origin assigns it the exact disc area
        // r·(r/2) = r²/2 per unit angle.
        (rs[1] - rs[0]) / 2.0 + rs[0] / 2.0
    } else if ir == n - 1 {
        (rs[n - 1] - rs[n - 2]) / 2.0
    } else {
        (rs[ir + 1] - rs[ir - 1]) / 2.0
    }
}

/// Half-sum of adjacent chord lengths (trapezoid rule in arclength).
fn curve_weights(pos: &[[f64; 3]], closed: bool) -> Vec<f64> {
    let n = pos.len();
    let mut seg = vec![0.0; n]; // seg[i] = |p_{i+1} − p_i|
    let last = if closed { n } else { n - 1 };
    for i in 0..last {
        seg[i] = norm3(sub3(pos[(i + 1) % n], pos[i]));
    }
    let mut w = vec![0.0; n];
    for i in 0..n {
        let prev = if i == 0 {
            if closed {
                seg[n - 1]
            } else {
                0.0
            }
        } else {
            seg[i - 1]
        };
        let next = if i == n - 1 && !closed { 0.0 } else { seg[i] };
        w[i] = 0.5 * (prev + next);
    }
    w
}

/// Gaussian measure per node: quadrature weight × ρ at the node position.
/// These are the weights of every L²_W inner product in the crate.
pub fn gaussian_measure(surface: &Hypersurface) -> Result<Vec<f64>> {
    let n = surface.grid.n();
    let pos = embedded_positions(surface)?;
    let w = area_weights(surface)?;
    Ok(pos
        .iter()
        .zip(&w)
        .map(|(q, wi)| wi * gaussian_weight(n, *q))
        .collect())
}

/// Result of a Gaussian-area quadrature.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AreaResult {
    pub value: f64,
    /// Upper bound on the mass beyond the truncation radius (0 for compact
    /// surfaces).
    pub truncation_tail: f64,
}

/// Gaussian area F(M) = ∫_M ρ dℋⁿ by composite quadrature.
pub fn gaussian_area(surface: &Hypersurface) -> Result<AreaResult> {
    let n = surface.grid.n();
    let pos = embedded_positions(surface)?;
    let w = area_weights(surface)?;
    let mut value = 0.0;
    for (q, wi) in pos.iter().zip(&w) {
        value += wi * gaussian_weight(n, *q);
    }
    let r_max = surface.grid.r_max();
    let tail = match &surface.grid {
        BaseGrid::Line { .. } => {
            2.0 * FOUR_PI.powf(-0.5) * (2.0 / r_max) * (-r_max * r_max / 4.0).exp()
        }
        BaseGrid::PlanePolar { .. } => (-r_max * r_max / 4.0).exp(),
        _ => 0.0,
    };
    Ok(AreaResult {
        value,
        truncation_tail: tail,
    })
}

/// Search specification for the entropy supremum over centers and scales.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EntropySearchSpec {
    pub center_half_width: f64,
    pub center_samples: usize,
    pub scale_min: f64,
    pub scale_max: f64,
    pub scale_samples: usize,
    pub refine_passes: usize,
}

impl Default for EntropySearchSpec {
    fn default() -> Self {
        EntropySearchSpec {
            center_half_width: 2.0,
            center_samples: 9,
            scale_min: 0.25,
            scale_max: 4.0,
            scale_samples: 9,
            refine_passes: 2,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EntropyResult {
    pub value: f64,
    pub argmax_center: [f64; 3],
    pub argmax_scale: f64,
}

/// Gaussian area with center c and scale s (density of the rescaled surface).
pub fn gaussian_area_at(
    positions: &[[f64; 3]],
    weights: &[f64],
    n: usize,
    center: [f64; 3],
    scale: f64,
) -> f64 {
    let pref = (FOUR_PI * scale * scale).powf(-(n as f64) / 2.0);
    let mut v = 0.0;
    for (q, wi) in positions.iter().zip(weights) {
        let d = sub3(*q, center);
        v += wi * pref * (-dot3(d, d) / (4.0 * scale * scale)).exp();
    }
    v
}

/// Sampled entropy supremum λ̂ ≤ λ(M).
pub fn entropy(surface: &Hypersurface, spec: &EntropySearchSpec) -> Result<EntropyResult> {
    if spec.center_samples == 0 || spec.scale_samples == 0 || spec.scale_min <= 0.0 {
        return Err(LabError::InvalidArgument("empty entropy search spec".into()));
    }
    let n = surface.grid.n();
    let ambient = n + 1;
    let pos = embedded_positions(surface)?;
    let w = area_weights(surface)?;

    let mut best = (f64::MIN, [0.0; 3], 1.0);
    let mut cw = spec.center_half_width;
    let mut c0 = [0.0; 3];
    let mut smin = spec.scale_min;
    let mut smax = spec.scale_max;
    // Surfaces of revolution are represented by a single meridian with ring
    // quadrature weights; recentering is only valid on the symmetry axis
    // (profile component 1), where the ring structure is preserved.
    let revolved = matches!(
        &surface.grid,
        BaseGrid::Profile { dim: 2, .. }
    );
    for _pass in 0..=spec.refine_passes {
        let axis = |k: usize, c: f64| -> Vec<f64> {
            if k >= ambient || (revolved && k != 1) {
                return vec![0.0];
            }
            (0..spec.center_samples)
                .map(|i| {
                    c - cw + 2.0 * cw * i as f64 / (spec.center_samples.max(2) - 1) as f64
                })
                .collect()
        };
        let scales: Vec<f64> = (0..spec.scale_samples)
            .map(|i| {
                (smin.ln()
                    + (smax.ln() - smin.ln()) * i as f64
                        / (spec.scale_samples.max(2) - 1) as f64)
                    .exp()
            })
            .collect();
        for &cx in &axis(0, c0[0]) {
            for &cy in &axis(1, c0[1]) {
                for &cz in &axis(2, c0[2]) {
                    for &s in &scales {
                        let v = gaussian_area_at(&pos, &w, n, [cx, cy, cz], s);
                        if v > best.0 {
                            best = (v, [cx, cy, cz], s);
                        }
                    }
                }
            }
        }
        // Shrink the window around the incumbent.
        c0 = best.1;
        cw /= 3.0;
        let sc = best.2;
        smin = sc / 1.5;
        smax = sc * 1.5;
    }
    Ok(EntropyResult {
        value: best.0,
        argmax_center: best.1,
        argmax_scale: best.2,
    })
}

/// Normal-graph geometry over a shrinker base, with area element and weight
/// ratio.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormalGraphGeometry {
    pub bundle: GeometryBundle,
    /// Area element J = √(det g̃) per unit base area.
    pub area_element: Vec<f64>,
    /// ρ(y + uν) / ρ(y) = exp(−(2u⟨y,ν_Σ⟩ + u²)/4).
    pub weight_ratio: Vec<f64>,
    /// ⟨ν_graph, ν_Σ⟩ = 1/v.
    pub cos_angle: Vec<f64>,
}

/// Geometry of the normal graph q = p + u(p)ν_Σ(p) via the closed formulas
/// for normal graphs (normal, support, inverse metric, second fundamental
/// form), evaluated with the field's derivative provider.
///
/// Supported bases: line and circle (general curve formulas) and the plane
/// (vanishing shape operator).
pub fn normal_graph_geometry(base: &Shrinker, u: &ScalarField) -> Result<NormalGraphGeometry> {
    let grid = &base.surface.grid;
    if u.len() != grid.len() {
        return Err(LabError::InvalidArgument(
            "height field length mismatch".into(),
        ));
    }
    let max_a = base
        .bundle
        .a_sq
        .iter()
        .fold(0.0f64, |m, &a| m.max(a.sqrt()));
    let max_u = u.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if max_u * max_a >= 0.9 {
        return Err(LabError::GraphOutOfReach(format!(
            "|u|·max|A| = {:.3} ≥ 0.9",
            max_u * max_a
        )));
    }
    match grid {
        BaseGrid::Line { .. } | BaseGrid::Circle { .. } => curve_normal_graph(base, u),
        BaseGrid::PlanePolar { .. } => plane_normal_graph(base, u),
        _ => Err(LabError::InvalidArgument(
            "normal-graph formulas implemented for line, circle, and plane bases".into(),
        )),
    }
}

/// n = 1 normal-graph formulas. λ is the ⟨∂²F, ν⟩-convention curvature of
/// the base (λ = −H_base in this crate's sign convention).
fn curve_normal_graph(base: &Shrinker, u: &ScalarField) -> Result<NormalGraphGeometry> {
    let grid = &base.surface.grid;
    let n = grid.len();
    let d1 = u.d1(grid)?;
    let d2 = u.d2(grid)?;
    let pos = embedded_positions(&base.surface)?;
    // Exact base frames for the canonical bases.
    let (tangents, normals): (Vec<[f64; 2]>, Vec<[f64; 2]>) = match grid {
        BaseGrid::Line { xs } => (
            vec![[1.0, 0.0]; xs.len()],
            vec![[0.0, 1.0]; xs.len()],
        ),
        BaseGrid::Circle { .. } => {
            let th = grid.thetas();
            (
                th.iter().map(|t| [-t.sin(), t.cos()]).collect(),
                th.iter().map(|t| [t.cos(), t.sin()]).collect(),
            )
        }
        _ => unreachable!(),
    };
    // λ and its arclength derivative: exact constants on the canonical bases
    // (λ = −H_base; 0 on the line, −1/R on the circle).
    let lam_exact = match grid {
        BaseGrid::Line { .. } => 0.0,
        BaseGrid::Circle { radius, .. } => -1.0 / radius,
        _ => unreachable!(),
    };
    let lambdas = vec![lam_exact; n];
    let dlambda = vec![0.0; n];

    let mut normal = Vec::with_capacity(n);
    let mut mean = Vec::with_capacity(n);
    let mut principal = Vec::with_capacity(n);
    let mut support = Vec::with_capacity(n);
    let mut a_sq = Vec::with_capacity(n);
    let mut area_element = Vec::with_capacity(n);
    let mut weight_ratio = Vec::with_capacity(n);
    let mut cos_angle = Vec::with_capacity(n);
    for i in 0..n {
        let uu = u.values[i];
        let up = d1[0][i];
        let upp = d2[0][i];
        let lam = lambdas[i];
        let one = 1.0 - lam * uu;
        if one <= 0.1 {
            return Err(LabError::GraphOutOfReach("1 − λu too small".into()));
        }
        let wslope = up / one;
        let v = (1.0 + wslope * wslope).sqrt();
        let t = tangents[i];
        let nu_b = normals[i];
        // ν_N = v^{-1}(−(1−λu)^{-1} u' T + ν_Σ)
        let nu = [
            (-wslope * t[0] + nu_b[0]) / v,
            (-wslope * t[1] + nu_b[1]) / v,
        ];
        let p = [pos[i][0], pos[i][1]];
        // ⟨q, ν_N⟩ = v^{-1}(u + ⟨p,ν_Σ⟩ − ⟨p, (1−λu)^{-1}u' T⟩)
        let supp = (uu + (p[0] * nu_b[0] + p[1] * nu_b[1])
            - (p[0] * t[0] + p[1] * t[1]) * wslope)
            / v;
        // g̃₁₁ = (1−λu)² + u'², h̃₁₁ per the closed second-fundamental-form
        // formula; scalar H flips sign to this crate's convention.
        let gt = one * one + up * up;
        let ht = (2.0 * lam / one * up * up + uu / one * up * dlambda[i] + lam
            - lam * lam * uu
            + upp)
            / v;
        let trh = ht / gt;
        let h_scalar = -trh;
        normal.push([nu[0], nu[1], 0.0]);
        mean.push(h_scalar);
        principal.push([h_scalar, 0.0]);
        support.push(supp);
        a_sq.push(h_scalar * h_scalar);
        area_element.push(gt.sqrt());
        let ynu = p[0] * nu_b[0] + p[1] * nu_b[1];
        weight_ratio.push((-(2.0 * uu * ynu + uu * uu) / 4.0).exp());
        cos_angle.push(1.0 / v);
    }
    Ok(NormalGraphGeometry {
        bundle: GeometryBundle {
            normal,
            mean_curvature: mean,
            principal,
            support,
            a_sq,
        },
        area_element,
        weight_ratio,
        cos_angle,
    })
}

/// Plane-base normal-graph formulas (shape operator S = 0): the general
/// expressions reduce to the Monge form, evaluated with the field's
/// derivative provider in polar parameters.
fn plane_normal_graph(base: &Shrinker, u: &ScalarField) -> Result<NormalGraphGeometry> {
    let grid = &base.surface.grid;
    let (rs, nt) = match grid {
        BaseGrid::PlanePolar { rs, n_theta } => (rs.clone(), *n_theta),
        _ => unreachable!(),
    };
    let thetas = grid.thetas();
    let d1 = u.d1(grid)?;
    let d2 = u.d2(grid)?;
    let n = grid.len();
    let mut normal = Vec::with_capacity(n);
    let mut mean = Vec::with_capacity(n);
    let mut principal = Vec::with_capacity(n);
    let mut support = Vec::with_capacity(n);
    let mut a_sq = Vec::with_capacity(n);
    let mut area_element = Vec::with_capacity(n);
    let mut weight_ratio = Vec::with_capacity(n);
    let mut cos_angle = Vec::with_capacity(n);
    for (ir, &r) in rs.iter().enumerate() {
        for (it, &th) in thetas.iter().enumerate() {
            let i = ir * nt + it;
            let (c, s) = (th.cos(), th.sin());
            let ur = d1[0][i];
            let ut = d1[1][i];
            let ux = ur * c - ut * s / r;
            let uy = ur * s + ut * c / r;
            let hrr = d2[0][i];
            let hrt = d2[1][i] / r - d1[1][i] / (r * r);
            let htt = d2[2][i] / (r * r) + d1[0][i] / r;
            let hxx = c * c * hrr - 2.0 * c * s * hrt + s * s * htt;
            let hxy = c * s * (hrr - htt) + (c * c - s * s) * hrt;
            let hyy = s * s * hrr + 2.0 * c * s * hrt + c * c * htt;
            let v2 = 1.0 + ux * ux + uy * uy;
            let v = v2.sqrt();
            let g11 = 1.0 - ux * ux / v2;
            let g12 = -ux * uy / v2;
            let g22 = 1.0 - uy * uy / v2;
            // trace of g̃^{ij} h̃_ij with h̃ = Hess u / v.
            let trh = (g11 * hxx + 2.0 * g12 * hxy + g22 * hyy) / v;
            let h_scalar = -trh;
            let m11 = -(g11 * hxx + g12 * hxy) / v;
            let m12 = -(g11 * hxy + g12 * hyy) / v;
            let m21 = -(g12 * hxx + g22 * hxy) / v;
            let m22 = -(g12 * hxy + g22 * hyy) / v;
            let det = m11 * m22 - m12 * m21;
            let disc = (0.25 * (m11 + m22).powi(2) - det).max(0.0).sqrt();
            let x = r * c;
            let y = r * s;
            let uu = u.values[i];
            let k1 = 0.5 * (m11 + m22) + disc;
            let k2 = 0.5 * (m11 + m22) - disc;
            normal.push([-ux / v, -uy / v, 1.0 / v]);
            mean.push(h_scalar);
            principal.push([k1, k2]);
            support.push((uu - x * ux - y * uy) / v);
            a_sq.push(m11 * m11 + 2.0 * m12 * m21 + m22 * m22);
            area_element.push(v);
            weight_ratio.push((-(uu * uu) / 4.0).exp()); // ⟨y, ν_Σ⟩ = 0 on the plane
            cos_angle.push(1.0 / v);
        }
    }
    Ok(NormalGraphGeometry {
        bundle: GeometryBundle {
            normal,
            mean_curvature: mean,
            principal,
            support,
            a_sq,
        },
        area_element,
        weight_ratio,
        cos_angle,
    })
}

/// Area-growth report: ℋⁿ(M ∩ B_R(x)) / Rⁿ over sampled centers and radii.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AreaGrowthReport {
    pub samples: Vec<AreaGrowthSample>,
    /// Smallest constant C with ℋⁿ(M∩B_R(x)) ≤ C Rⁿ over the samples.
    pub smallest_c: f64,
    pub entropy_bound: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AreaGrowthSample {
    pub center: [f64; 3],
    pub radius: f64,
    pub ratio: f64,
}

/// Verify polynomial area growth at sampled centers/radii.
pub fn area_growth_check(
    surface: &Hypersurface,
    lambda0: f64,
    radii: &[f64],
) -> Result<AreaGrowthReport> {
    let n = surface.grid.n();
    let pos = embedded_positions(surface)?;
    let w = area_weights(surface)?;
    let stride = (pos.len() / 8).max(1);
    let mut centers: Vec<[f64; 3]> = vec![[0.0, 0.0, 0.0]];
    centers.extend(pos.iter().step_by(stride).copied());
    let mut samples = Vec::new();
    let mut smallest_c = 0.0f64;
    for c in centers {
        for &r in radii {
            let mut area = 0.0;
            for (q, wi) in pos.iter().zip(&w) {
                if norm3(sub3(*q, c)) <= r {
                    area += wi;
                }
            }
            let ratio = area / r.powi(n as i32);
            smallest_c = smallest_c.max(ratio);
            samples.push(AreaGrowthSample {
                center: c,
                radius: r,
                ratio,
            });
        }
    }
    Ok(AreaGrowthReport {
        samples,
        smallest_c,
        entropy_bound: lambda0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Hypersurface;
    use crate::shrinkers::{canonical_shrinker, GridSpec, ShrinkerKind};
    use approx::assert_abs_diff_eq;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn line_geometry_is_exact() {
        let grid = BaseGrid::line(0.05, 12.0).unwrap();
        let b = geometry_bundle(&Hypersurface::bare(grid.clone())).unwrap();
        for i in 0..grid.len() {
            assert_eq!(b.mean_curvature[i], 0.0);
            assert_eq!(b.support[i], 0.0);
            assert_abs_diff_eq!(b.normal[i][1], 1.0, epsilon = 1e-14);
        }
        let phi = phi_residual(&Hypersurface::bare(grid)).unwrap();
        assert!(phi.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn circle_geometry_matches_round_values() {
        let grid = BaseGrid::circle(SQRT2, 1024).unwrap();
        let b = geometry_bundle(&Hypersurface::bare(grid)).unwrap();
        for i in 0..b.support.len() {
            assert_abs_diff_eq!(b.mean_curvature[i], 1.0 / SQRT2, epsilon = 1e-5);
            assert_abs_diff_eq!(b.support[i], SQRT2, epsilon = 1e-10);
        }
    }

    #[test]
    fn sin_graph_mean_curvature_matches_monge_formula() {
        // Graph y = 0.3 sin x over the line: upward normal, H = −u″/v³.
        let grid = BaseGrid::line(0.02, 12.0).unwrap();
        let xs = match &grid {
            BaseGrid::Line { xs } => xs.clone(),
            _ => unreachable!(),
        };
        let u: Vec<f64> = xs.iter().map(|x| 0.3 * x.sin()).collect();
        let surf = Hypersurface::with_height(grid, u).unwrap();
        let b = geometry_bundle(&surf).unwrap();
        for (i, &x) in xs.iter().enumerate().skip(2).take(xs.len() - 4) {
            let up = 0.3 * x.cos();
            let upp = -0.3 * x.sin();
            let v = (1.0f64 + up * up).sqrt();
            assert_abs_diff_eq!(b.mean_curvature[i], -upp / (v * v * v), epsilon = 5e-4);
        }
    }

    #[test]
    fn gaussian_area_of_canonical_shrinkers() {
        // F(line) = 1.
        let line = Hypersurface::bare(BaseGrid::line(0.05, 12.0).unwrap());
        let f = gaussian_area(&line).unwrap();
        assert_abs_diff_eq!(f.value, 1.0, epsilon = 1e-9);

        // F(S¹_{√2}) = √(2π) e^{−1/2}.
        let circle = Hypersurface::bare(BaseGrid::circle(SQRT2, 4096).unwrap());
        let f = gaussian_area(&circle).unwrap();
        let exact = (2.0 * std::f64::consts::PI).sqrt() * (-0.5f64).exp();
        assert_abs_diff_eq!(f.value, exact, epsilon = 1e-6);

        // F(S²_2) = 4/e.
        let spec = GridSpec {
            h: 0.002,
            ..GridSpec::default()
        };
        let sphere = canonical_shrinker(ShrinkerKind::Sphere, 2, &spec).unwrap();
        let f = gaussian_area(&sphere.surface).unwrap();
        assert_abs_diff_eq!(f.value, 4.0 / std::f64::consts::E, epsilon = 1e-6);

        // F(plane) = 1 up to the truncation tail.
        let plane = Hypersurface::bare(BaseGrid::plane_polar(0.05, 12.0, 48).unwrap());
        let f = gaussian_area(&plane).unwrap();
        assert!((f.value - 1.0).abs() < 1e-3 + f.truncation_tail);
    }

    #[test]
    fn sphere_residual_refines_at_second_order() {
        let coarse = canonical_shrinker(
            ShrinkerKind::Sphere,
            2,
            &GridSpec {
                h: 0.02,
                ..GridSpec::default()
            },
        )
        .unwrap();
        let fine = canonical_shrinker(
            ShrinkerKind::Sphere,
            2,
            &GridSpec {
                h: 0.01,
                ..GridSpec::default()
            },
        )
        .unwrap();
        assert!(fine.max_phi <= 1e-8, "fine max_phi = {:e}", fine.max_phi);
        let ratio = coarse.max_phi / fine.max_phi;
        assert!(ratio >= 3.5, "refinement ratio = {ratio}");
    }

    #[test]
    fn plane_graph_geometry() {
        let grid = BaseGrid::plane_polar(0.05, 12.0, 256).unwrap();
        // Flat plane: everything vanishes.
        let b = geometry_bundle(&Hypersurface::bare(grid.clone())).unwrap();
        for i in 0..grid.len() {
            assert_eq!(b.mean_curvature[i], 0.0);
            assert_eq!(b.support[i], 0.0);
            assert_eq!(b.normal[i], [0.0, 0.0, 1.0]);
        }
        // Tilted plane u = x/2: still H = 0, support 0, constant normal.
        let (rs, nt) = match &grid {
            BaseGrid::PlanePolar { rs, n_theta } => (rs.clone(), *n_theta),
            _ => unreachable!(),
        };
        let mut u = vec![0.0; grid.len()];
        for (ir, &r) in rs.iter().enumerate() {
            for (it, &th) in grid.thetas().iter().enumerate() {
                u[ir * nt + it] = 0.5 * r * th.cos();
            }
        }
        let surf = Hypersurface::with_height(grid, u).unwrap();
        let b = geometry_bundle(&surf).unwrap();
        let v = (1.25f64).sqrt();
        // Skip the innermost rings: angular differencing has an O(h_θ²/r)
        // error near the origin.
        for i in 3 * nt..b.support.len() {
            assert_abs_diff_eq!(b.mean_curvature[i], 0.0, epsilon = 1e-3);
            assert_abs_diff_eq!(b.support[i], 0.0, epsilon = 1e-3);
            assert_abs_diff_eq!(b.normal[i][0], -0.5 / v, epsilon = 1e-3);
            assert_abs_diff_eq!(b.normal[i][2], 1.0 / v, epsilon = 1e-3);
        }
    }

    #[test]
    fn entropy_of_line_and_sphere() {
        let line = Hypersurface::bare(BaseGrid::line(0.05, 12.0).unwrap());
        let e = entropy(&line, &EntropySearchSpec::default()).unwrap();
        assert_abs_diff_eq!(e.value, 1.0, epsilon = 1e-8);

        let sphere = canonical_shrinker(
            ShrinkerKind::Sphere,
            2,
            &GridSpec {
                h: 0.01,
                ..GridSpec::default()
            },
        )
        .unwrap();
        let e = entropy(&sphere.surface, &EntropySearchSpec::default()).unwrap();
        assert_abs_diff_eq!(e.value, 4.0 / std::f64::consts::E, epsilon = 1e-3);
        assert_abs_diff_eq!(e.argmax_scale, 1.0, epsilon = 0.1);
    }

    #[test]
    fn normal_graph_constant_offsets() {
        // Plane base, u ≡ c: H̃ = 0, support = c, J = 1, ratio = e^{−c²/4}.
        let plane = canonical_shrinker(ShrinkerKind::Plane, 2, &GridSpec::default()).unwrap();
        let c = 0.3;
        let u = ScalarField::new(vec![c; plane.surface.grid.len()]);
        let g = normal_graph_geometry(&plane, &u).unwrap();
        for i in 0..u.len() {
            assert_abs_diff_eq!(g.bundle.mean_curvature[i], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(g.bundle.support[i], c, epsilon = 1e-12);
            assert_abs_diff_eq!(g.area_element[i], 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(g.weight_ratio[i], (-c * c / 4.0f64).exp(), epsilon = 1e-12);
        }

        // Circle base, u ≡ ε: H̃ = 1/(√2+ε), J = (√2+ε)/√2, support = √2+ε.
        let circle = canonical_shrinker(ShrinkerKind::Circle, 1, &GridSpec::default()).unwrap();
        let eps = 0.1;
        let u = ScalarField::new(vec![eps; circle.surface.grid.len()]);
        let g = normal_graph_geometry(&circle, &u).unwrap();
        let r = SQRT2 + eps;
        for i in 0..u.len() {
            assert_abs_diff_eq!(g.bundle.mean_curvature[i], 1.0 / r, epsilon = 1e-12);
            assert_abs_diff_eq!(g.bundle.support[i], r, epsilon = 1e-10);
            assert_abs_diff_eq!(g.area_element[i], r / SQRT2, epsilon = 1e-10);
            assert_abs_diff_eq!(
                g.weight_ratio[i],
                (-(2.0 * eps * SQRT2 + eps * eps) / 4.0f64).exp(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn normal_graph_matches_parametric_geometry_on_line() {
        // The closed normal-graph formulas and the parametric FD engine must
        // agree on a smooth graph over the line up to discretization error.
        let line = canonical_shrinker(ShrinkerKind::Line, 1, &GridSpec::default()).unwrap();
        let xs = match &line.surface.grid {
            BaseGrid::Line { xs } => xs.clone(),
            _ => unreachable!(),
        };
        let u: Vec<f64> = xs.iter().map(|x| 0.05 * (0.7 * x).sin()).collect();
        let d1: Vec<f64> = xs.iter().map(|x| 0.035 * (0.7 * x).cos()).collect();
        let d2: Vec<f64> = xs.iter().map(|x| -0.0245 * (0.7 * x).sin()).collect();
        let field = ScalarField::with_derivs(u.clone(), vec![d1], vec![d2]);
        let g = normal_graph_geometry(&line, &field).unwrap();
        let surf = Hypersurface::with_height(line.surface.grid.clone(), u).unwrap();
        let b = geometry_bundle(&surf).unwrap();
        for i in 2..xs.len() - 2 {
            assert_abs_diff_eq!(g.bundle.mean_curvature[i], b.mean_curvature[i], epsilon = 1e-5);
            assert_abs_diff_eq!(g.bundle.support[i], b.support[i], epsilon = 1e-6);
            assert_abs_diff_eq!(g.bundle.normal[i][0], b.normal[i][0], epsilon = 1e-6);
            assert_abs_diff_eq!(g.bundle.normal[i][1], b.normal[i][1], epsilon = 1e-6);
        }
    }

    #[test]
    fn area_growth_is_polynomial_on_the_circle() {
        let circle = Hypersurface::bare(BaseGrid::circle(SQRT2, 512).unwrap());
        let rep = area_growth_check(&circle, 1.6, &[0.5, 1.0, 2.0, 4.0]).unwrap();
        assert!(rep.smallest_c.is_finite() && rep.smallest_c > 0.0);
        // Total length 2π√2 within B_4(0): ratio ≤ 2π√2/0.5 at worst sample.
        assert!(rep.smallest_c <= 2.0 * std::f64::consts::PI * SQRT2 / 0.5 + 1e-9);
    }
}
