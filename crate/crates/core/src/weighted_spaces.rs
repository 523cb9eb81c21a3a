//! Weighted function spaces on a shrinker: homogeneous and anisotropic
//! weighted Hölder norms, the cone space 𝒞𝒮 with its decomposition
//! u = χ(r)·c(ω)·r + f, Gaussian Sobolev norms L²_W / H^k_W, the Ecker
//! Sobolev inequality, and interpolation-inequality verifiers.
//!
//! Hölder seminorms are evaluated over node pairs within extrinsic distance
//! 1. Dense pair sets are quadratic, so large grids use a fixed-seed uniform
//! subsample (the seminorm is a sup; subsampling only lowers it) together
//! with all immediate-neighbor pairs, which dominate discrete difference
//! quotients.

use crate::error::{LabError, Result};
use crate::fields::{fd1_periodic, fd2_periodic, param_d1, ScalarField};
use crate::geometry::{embedded_positions, gaussian_measure};
use crate::grid::{BaseGrid, Hypersurface};
use crate::util::{chi_cutoff, norm3, sub3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Which weighted Hölder norm to evaluate.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub enum HolderKind {
    /// ‖f‖^hom_{k,α;−γ} = Σ_{j≤k} [ sup r̃^γ|∇^j f| + seminorm_j ].
    Hom { k: usize, alpha: f64, gamma: f64 },
    /// ‖f‖^an_{2,α;−1} = ‖f‖^hom_{2,α;−1} + ‖x·∇f‖^hom_{0,α;−1}.
    An { alpha: f64 },
}

/// How Hölder seminorm pairs are generated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairMode {
    /// Dense on small grids, subsampled (plus all neighbor pairs) otherwise.
    Auto,
    /// All node pairs within distance 1 (quadratic; oracle use).
    Dense,
    /// Immediate grid-neighbor pairs only.
    NeighborsOnly,
}

/// Pair-set specification for Hölder seminorms.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PairSpec {
    pub mode: PairMode,
    pub max_pairs: usize,
    pub seed: u64,
}

impl Default for PairSpec {
    fn default() -> Self {
        PairSpec {
            mode: PairMode::Auto,
            max_pairs: 100_000,
            seed: 0x51AB,
        }
    }
}

/// Node pairs within extrinsic distance 1, with their distances.
pub struct PairSet {
    pub pairs: Vec<(usize, usize, f64)>,
}

/// Named-component norm value.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormReport {
    pub components: Vec<(String, f64)>,
    pub total: f64,
    pub k: usize,
    pub alpha: f64,
    pub gamma: f64,
}

impl NormReport {
    fn from_components(components: Vec<(String, f64)>, k: usize, alpha: f64, gamma: f64) -> Self {
        let total = components.iter().map(|(_, v)| v).sum();
        NormReport {
            components,
            total,
            k,
            alpha,
            gamma,
        }
    }

    pub fn component(&self, name: &str) -> Option<f64> {
        self.components
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, v)| v)
    }
}

/// Cone decomposition u = χ(r)·c(ω)·r + f of a field on a conical base.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConeDecomposition {
    /// c per link sample (line: \[+x, −x\]; plane: one per angular sector).
    pub c: Vec<f64>,
    pub f: ScalarField,
    /// Cutoff radius R of χ (χ rises on \[R, 2R\]).
    pub cutoff_radius: f64,
    /// Bound on the dropped tail of the defining integral: max_ω |w(r_max)|/r_max.
    pub tail_estimate: f64,
}

/// Build the pair set for Hölder seminorms on this surface.
pub fn build_pairs(surface: &Hypersurface, spec: &PairSpec) -> Result<PairSet> {
    let pos = embedded_positions(surface)?;
    let n = pos.len();
    let mut pairs = Vec::new();
    let push = |i: usize, j: usize, pairs: &mut Vec<(usize, usize, f64)>| {
        let d = norm3(sub3(pos[i], pos[j]));
        if d > 0.0 && d <= 1.0 {
            pairs.push((i, j, d));
        }
    };
    // Immediate grid neighbors (always included except in Dense mode, where
    // the full enumeration already contains them).
    let neighbors: Vec<(usize, usize)> = match &surface.grid {
        BaseGrid::Line { .. } => (0..n - 1).map(|i| (i, i + 1)).collect(),
        BaseGrid::Circle { .. } => (0..n).map(|i| (i, (i + 1) % n)).collect(),
        BaseGrid::Profile { closed, .. } => {
            let last = if *closed { n } else { n - 1 };
            (0..last).map(|i| (i, (i + 1) % n)).collect()
        }
        BaseGrid::PlanePolar { rs, n_theta } => {
            let mut out = Vec::new();
            for ir in 0..rs.len() {
                for it in 0..*n_theta {
                    let i = ir * n_theta + it;
                    out.push((i, ir * n_theta + (it + 1) % n_theta));
                    if ir + 1 < rs.len() {
                        out.push((i, (ir + 1) * n_theta + it));
                    }
                }
            }
            out
        }
    };
    match spec.mode {
        PairMode::NeighborsOnly => {
            for (i, j) in neighbors {
                push(i, j, &mut pairs);
            }
        }
        PairMode::Dense => {
            for i in 0..n {
                for j in i + 1..n {
                    push(i, j, &mut pairs);
                }
            }
        }
        PairMode::Auto => {
            if n <= 2000 {
                for i in 0..n {
                    for j in i + 1..n {
                        push(i, j, &mut pairs);
                    }
                }
            } else {
                for (i, j) in neighbors {
                    push(i, j, &mut pairs);
                }
                let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
                let mut attempts = 0usize;
                while pairs.len() < spec.max_pairs && attempts < 30 * spec.max_pairs {
                    attempts += 1;
                    let i = rng.gen_range(0..n);
                    let j = rng.gen_range(0..n);
                    if i != j {
                        push(i.min(j), i.max(j), &mut pairs);
                    }
                }
            }
        }
    }
    Ok(PairSet { pairs })
}

/// Representative components of ∇^j u used in seminorms (curves: the signed
/// j-th arclength derivative; plane: orthonormal polar-frame components).
fn deriv_components(grid: &BaseGrid, u: &ScalarField, j: usize) -> Result<Vec<Vec<f64>>> {
    if j == 0 {
        return Ok(vec![u.values.clone()]);
    }
    if j > 6 {
        return Err(LabError::OrderUnavailable(format!(
            "derivative order {j} not supported"
        )));
    }
    match grid {
        BaseGrid::Line { .. } | BaseGrid::Circle { .. } | BaseGrid::Profile { .. } => {
            let mut cur = match j {
                1 => u.d1(grid)?.swap_remove(0),
                _ => u.d2(grid)?.swap_remove(0),
            };
            for _ in 2..j {
                cur = param_d1(grid, &cur).swap_remove(0);
            }
            Ok(vec![cur])
        }
        BaseGrid::PlanePolar { rs, n_theta } => {
            let nt = *n_theta;
            let radii: Vec<f64> = rs
                .iter()
                .flat_map(|&r| std::iter::repeat(r).take(nt))
                .collect();
            if j == 1 {
                let d1 = u.d1(grid)?;
                let fr = d1[0].clone();
                let ft: Vec<f64> = d1[1]
                    .iter()
                    .zip(&radii)
                    .map(|(&v, &r)| v / r)
                    .collect();
                return Ok(vec![fr, ft]);
            }
            if j == 2 {
                let d1 = u.d1(grid)?;
                let d2 = u.d2(grid)?;
                let m = grid.len();
                let mut hrr = vec![0.0; m];
                let mut hrt = vec![0.0; m];
                let mut htt = vec![0.0; m];
                for i in 0..m {
                    let r = radii[i];
                    hrr[i] = d2[0][i];
                    hrt[i] = d2[1][i] / r - d1[1][i] / (r * r);
                    htt[i] = d2[2][i] / (r * r) + d1[0][i] / r;
                }
                return Ok(vec![hrr, hrt, htt]);
            }
            // j ≥ 3: iterate the frame derivatives (∂_r, r^{-1}∂_θ).
            let mut comps: Vec<Vec<f64>> = vec![u.values.clone()];
            for _ in 0..j {
                let mut next = Vec::with_capacity(comps.len() * 2);
                for c in &comps {
                    let d = param_d1(grid, c);
                    next.push(d[0].clone());
                    let mut dt = d[1].clone();
                    for (v, &r) in dt.iter_mut().zip(&radii) {
                        *v /= r;
                    }
                    next.push(dt);
                }
                comps = next;
            }
            Ok(comps)
        }
    }
}

/// |∇^j u| per node (plane j = 2 weights the mixed component twice, as in the
/// Hessian Frobenius norm).
pub fn deriv_magnitude(grid: &BaseGrid, u: &ScalarField, j: usize) -> Result<Vec<f64>> {
    deriv_mag(grid, u, j)
}

fn deriv_mag(grid: &BaseGrid, u: &ScalarField, j: usize) -> Result<Vec<f64>> {
    let comps = deriv_components(grid, u, j)?;
    let plane_hessian = matches!(grid, BaseGrid::PlanePolar { .. }) && j == 2;
    let n = grid.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut s = 0.0;
        for (ci, c) in comps.iter().enumerate() {
            let w = if plane_hessian && ci == 1 { 2.0 } else { 1.0 };
            s += w * c[i] * c[i];
        }
        out[i] = s.sqrt();
    }
    Ok(out)
}

fn sup_term(vals: &[f64], r_tilde: &[f64], gamma: f64) -> f64 {
    vals.iter()
        .zip(r_tilde)
        .map(|(&v, &rt)| rt.powf(gamma) * v.abs())
        .fold(0.0, f64::max)
}

/// [·]_{α;−γ−α} seminorm over the pair set, maximized over tensor components.
fn seminorm_term(
    comps: &[Vec<f64>],
    r_tilde: &[f64],
    pairs: &PairSet,
    alpha: f64,
    gamma: f64,
) -> f64 {
    let mut m = 0.0f64;
    for &(i, j, d) in &pairs.pairs {
        let weight = 1.0 / (r_tilde[i].powf(-gamma - alpha) + r_tilde[j].powf(-gamma - alpha));
        let da = d.powf(alpha);
        for c in comps {
            let q = weight * (c[i] - c[j]).abs() / da;
            if q > m {
                m = q;
            }
        }
    }
    m
}

/// The field x·∇u (tangential radial derivative).
pub fn radial_derivative(surface: &Hypersurface, u: &ScalarField) -> Result<Vec<f64>> {
    let grid = &surface.grid;
    match grid {
        BaseGrid::Line { xs } => {
            let d1 = u.d1(grid)?;
            Ok(xs.iter().zip(&d1[0]).map(|(&x, &ux)| x * ux).collect())
        }
        // ⟨x, T⟩ = 0 on a centered circle.
        BaseGrid::Circle { .. } => Ok(vec![0.0; grid.len()]),
        BaseGrid::PlanePolar { rs, n_theta } => {
            let d1 = u.d1(grid)?;
            let mut out = vec![0.0; grid.len()];
            for (ir, &r) in rs.iter().enumerate() {
                for it in 0..*n_theta {
                    let i = ir * n_theta + it;
                    out[i] = r * d1[0][i];
                }
            }
            Ok(out)
        }
        BaseGrid::Profile { points, .. } => {
            // ⟨x, T⟩ ∂_s u with T the unit tangent; the overall tangent
            // orientation does not affect the norms taken of this field.
            let d1 = u.d1(grid)?;
            let xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
            let ys: Vec<f64> = points.iter().map(|p| p[1]).collect();
            let tx = param_d1(grid, &xs).swap_remove(0);
            let ty = param_d1(grid, &ys).swap_remove(0);
            let mut out = vec![0.0; grid.len()];
            for i in 0..grid.len() {
                let sp = (tx[i] * tx[i] + ty[i] * ty[i]).sqrt().max(1e-300);
                out[i] = (points[i][0] * tx[i] + points[i][1] * ty[i]) / sp * d1[0][i];
            }
            Ok(out)
        }
    }
}

/// Weighted Hölder norm of a field on the base surface.
pub fn holder_norm(
    surface: &Hypersurface,
    u: &ScalarField,
    kind: HolderKind,
    spec: &PairSpec,
) -> Result<NormReport> {
    let grid = &surface.grid;
    if u.len() != grid.len() {
        return Err(LabError::InvalidArgument("field/grid size mismatch".into()));
    }
    let r_tilde = grid.r_tilde();
    let pairs = build_pairs(surface, spec)?;
    match kind {
        HolderKind::Hom { k, alpha, gamma } => {
            if k > 4 {
                return Err(LabError::OrderUnavailable(format!(
                    "Hölder norms support k ≤ 4 (got {k})"
                )));
            }
            let mut components = Vec::new();
            for j in 0..=k {
                let mag = deriv_mag(grid, u, j)?;
                let comps = deriv_components(grid, u, j)?;
                components.push((format!("sup_d{j}"), sup_term(&mag, &r_tilde, gamma)));
                components.push((
                    format!("seminorm_d{j}"),
                    seminorm_term(&comps, &r_tilde, &pairs, alpha, gamma),
                ));
            }
            Ok(NormReport::from_components(components, k, alpha, gamma))
        }
        HolderKind::An { alpha } => {
            let hom = holder_norm(
                surface,
                u,
                HolderKind::Hom {
                    k: 2,
                    alpha,
                    gamma: 1.0,
                },
                spec,
            )?;
            let rad = ScalarField::new(radial_derivative(surface, u)?);
            let mut components = hom.components;
            components.push(("sup_radial".into(), sup_term(&rad.values, &r_tilde, 1.0)));
            components.push((
                "seminorm_radial".into(),
                seminorm_term(&[rad.values.clone()], &r_tilde, &pairs, alpha, 1.0),
            ));
            Ok(NormReport::from_components(components, 2, alpha, 1.0))
        }
    }
}

/// 𝒞𝒮^{2,α}_{−1} norm: ‖c‖_{C^{2,α}(Γ)} + ‖f‖^an_{2,α;−1}.
pub fn cs_norm(
    surface: &Hypersurface,
    dec: &ConeDecomposition,
    alpha: f64,
    spec: &PairSpec,
) -> Result<NormReport> {
    let mut components = link_c2a_norm(&surface.grid, &dec.c, alpha)?;
    let f_report = holder_norm(surface, &dec.f, HolderKind::An { alpha }, spec)?;
    for (name, v) in f_report.components {
        components.push((format!("f_{name}"), v));
    }
    Ok(NormReport::from_components(components, 2, alpha, 1.0))
}

/// C^{2,α}(Γ) norm of a function on the link (two points for n = 1; the unit
/// circle of directions for the plane-like grids).
fn link_c2a_norm(grid: &BaseGrid, c: &[f64], alpha: f64) -> Result<Vec<(String, f64)>> {
    match grid {
        BaseGrid::Line { .. } => {
            if c.len() != 2 {
                return Err(LabError::InvalidArgument(
                    "line link has two samples".into(),
                ));
            }
            // Zero-dimensional link: only the sup survives.
            Ok(vec![(
                "link_sup".into(),
                c.iter().fold(0.0f64, |m, &v| m.max(v.abs())),
            )])
        }
        BaseGrid::PlanePolar { n_theta, .. } => {
            if c.len() != *n_theta {
                return Err(LabError::InvalidArgument(
                    "link sample count must equal n_theta".into(),
                ));
            }
            let h = 2.0 * std::f64::consts::PI / *n_theta as f64;
            let d1 = fd1_periodic(c, h);
            let d2 = fd2_periodic(c, h);
            let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
            // Hölder seminorm of c″ over arc distances ≤ 1 on the unit circle.
            let n = c.len();
            let mut semi = 0.0f64;
            let window = (1.0 / h).floor() as usize;
            for i in 0..n {
                for off in 1..=window.min(n / 2) {
                    let j = (i + off) % n;
                    let d = off as f64 * h;
                    if d > 1.0 {
                        break;
                    }
                    semi = semi.max((d2[i] - d2[j]).abs() / d.powf(alpha));
                }
            }
            Ok(vec![
                ("link_sup".into(), sup(c)),
                ("link_sup_d1".into(), sup(&d1)),
                ("link_sup_d2".into(), sup(&d2)),
                ("link_seminorm_d2".into(), semi),
            ])
        }
        _ => Err(LabError::NotConical(
            "cone norms need a line or plane base".into(),
        )),
    }
}

/// Rays of a conical grid: for each link sample, the node indices ordered by
/// increasing radius, with the radii.
fn conical_rays(grid: &BaseGrid) -> Result<Vec<Vec<(usize, f64)>>> {
    match grid {
        BaseGrid::Line { xs } => {
            let mut pos: Vec<(usize, f64)> = xs
                .iter()
                .enumerate()
                .filter(|(_, &x)| x >= 0.0)
                .map(|(i, &x)| (i, x))
                .collect();
            pos.sort_by(|a, b| a.1.total_cmp(&b.1));
            let mut neg: Vec<(usize, f64)> = xs
                .iter()
                .enumerate()
                .filter(|(_, &x)| x <= 0.0)
                .map(|(i, &x)| (i, -x))
                .collect();
            neg.sort_by(|a, b| a.1.total_cmp(&b.1));
            Ok(vec![pos, neg])
        }
        BaseGrid::PlanePolar { rs, n_theta } => Ok((0..*n_theta)
            .map(|it| {
                rs.iter()
                    .enumerate()
                    .map(|(ir, &r)| (ir * n_theta + it, r))
                    .collect()
            })
            .collect()),
        _ => Err(LabError::NotConical(
            "cone decomposition needs a line or plane base".into(),
        )),
    }
}

/// Decompose u into χ(r)·c(ω)·r + f with the defining quadrature
/// c(ω) = u(R,ω)/R + ∫_R^∞ w(s,ω) s^{−2} ds, w = r∂_r u − u, truncated at
/// r_max with the tail reported.
pub fn cone_decompose(
    surface: &Hypersurface,
    u: &ScalarField,
    r_cut: f64,
) -> Result<ConeDecomposition> {
    let grid = &surface.grid;
    let r_max = grid.r_max();
    if r_cut <= 1.0 || 2.0 * r_cut > r_max {
        return Err(LabError::InsufficientDomain(format!(
            "need 1 < R and 2R ≤ r_max (R = {r_cut}, r_max = {r_max})"
        )));
    }
    let rays = conical_rays(grid)?;
    let w_field = {
        // w = x·∇u − u (equals r∂_r u − u on these exact cones).
        let rad = radial_derivative(surface, u)?;
        rad.iter()
            .zip(&u.values)
            .map(|(&r, &v)| r - v)
            .collect::<Vec<f64>>()
    };
    let mut c = Vec::with_capacity(rays.len());
    let mut tail = 0.0f64;
    for ray in &rays {
        // Linear interpolation of u and w at exactly r = R.
        let interp = |field: &dyn Fn(usize) -> f64| -> Result<f64> {
            for win in ray.windows(2) {
                let (i0, r0) = win[0];
                let (i1, r1) = win[1];
                if r0 <= r_cut && r_cut <= r1 {
                    let t = if r1 > r0 { (r_cut - r0) / (r1 - r0) } else { 0.0 };
                    return Ok((1.0 - t) * field(i0) + t * field(i1));
                }
            }
            Err(LabError::InsufficientDomain(
                "cutoff radius outside the grid".into(),
            ))
        };
        let u_at_r = interp(&|i| u.values[i])?;
        let w_at_r = interp(&|i| w_field[i])?;
        // Trapezoid of w/s² from R to r_max, starting at the interpolated
        // point.
        let mut integral = 0.0;
        let mut prev = (r_cut, w_at_r / (r_cut * r_cut));
        for &(i, r) in ray.iter().filter(|&&(_, r)| r > r_cut) {
            let val = w_field[i] / (r * r);
            integral += 0.5 * (prev.1 + val) * (r - prev.0);
            prev = (r, val);
        }
        tail = tail.max(w_field[ray.last().unwrap().0].abs() / r_max);
        c.push(u_at_r / r_cut + integral);
    }
    // f = u − χ(r)·c(ω)·r at every node.  The cutoff ramps up on the fixed
    // interval [1, 2] regardless of the averaging radius R: anchoring χ at a
    // scale comparable to R would fold the cone c·r itself into f over the
    // whole transition region and inflate every weighted norm of f by a
    // factor that grows with R.
    let chi_anchor = 1.0;
    let mut f = u.values.clone();
    for (omega, ray) in rays.iter().enumerate() {
        for &(i, r) in ray {
            f[i] = u.values[i] - chi_cutoff(r, chi_anchor) * c[omega] * r;
        }
    }
    Ok(ConeDecomposition {
        c,
        f: ScalarField::new(f),
        cutoff_radius: chi_anchor,
        tail_estimate: tail,
    })
}

/// Reconstruct u = χ(r)·c(ω)·r + f at the nodes.
pub fn reconstruct(surface: &Hypersurface, dec: &ConeDecomposition) -> Result<ScalarField> {
    let rays = conical_rays(&surface.grid)?;
    let mut u = dec.f.values.clone();
    for (omega, ray) in rays.iter().enumerate() {
        for &(i, r) in ray {
            u[i] = dec.f.values[i] + chi_cutoff(r, dec.cutoff_radius) * dec.c[omega] * r;
        }
    }
    Ok(ScalarField::new(u))
}

/// H^k_W norm (k ≤ 2): (Σ_{j≤k} ∫ |∇^j u|² ρ)^{1/2}.
pub fn sobolev_norm(surface: &Hypersurface, u: &ScalarField, k: usize) -> Result<f64> {
    if k > 2 {
        return Err(LabError::OrderUnavailable(format!(
            "Sobolev order {k} not supported"
        )));
    }
    let w = gaussian_measure(surface)?;
    let mut total = 0.0;
    for j in 0..=k {
        let mag = deriv_mag(&surface.grid, u, j)?;
        total += mag
            .iter()
            .zip(&w)
            .map(|(&m, &wi)| m * m * wi)
            .sum::<f64>();
    }
    Ok(total.sqrt())
}

/// L²_W inner product of two fields.
pub fn inner_product_w(surface: &Hypersurface, a: &[f64], b: &[f64]) -> Result<f64> {
    let w = gaussian_measure(surface)?;
    Ok(a.iter()
        .zip(b)
        .zip(&w)
        .map(|((&x, &y), &wi)| x * y * wi)
        .sum())
}

/// Both sides of the Ecker Sobolev inequality
/// ∫ f²|x|² ρ ≤ 4∫ (n f² + 4|∇f|²) ρ.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EckerReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

pub fn verify_ecker_sobolev(surface: &Hypersurface, u: &ScalarField) -> Result<EckerReport> {
    let n = surface.grid.n() as f64;
    let w = gaussian_measure(surface)?;
    let pos = embedded_positions(surface)?;
    let grad = deriv_mag(&surface.grid, u, 1)?;
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for i in 0..u.len() {
        let x2 = pos[i][0] * pos[i][0] + pos[i][1] * pos[i][1] + pos[i][2] * pos[i][2];
        let f2 = u.values[i] * u.values[i];
        lhs += f2 * x2 * w[i];
        rhs += 4.0 * (n * f2 + 4.0 * grad[i] * grad[i]) * w[i];
    }
    Ok(EckerReport {
        lhs,
        rhs,
        ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 },
    })
}

/// Interpolation exponents a_{k,n} = k/(k+n) and b_{k,n} = (k−1)/(k+n).
pub fn a_kn(k: usize, n: usize) -> f64 {
    k as f64 / (k + n) as f64
}

pub fn b_kn(k: usize, n: usize) -> f64 {
    (k as f64 - 1.0) / (k + n) as f64
}

/// Which interpolation inequality to verify.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub enum InterpKind {
    /// ‖D^j u‖_{C⁰(B₁)} ≤ C ‖u‖_{C⁰(B₂)}^{1−j/k} ‖D^k u‖_{C⁰(B₂)}^{j/k}.
    Multiplicative { j: usize, k: usize },
    /// The L¹ ∩ C^k two-term bounds with exponents a_{k,n}, b_{k,n}.
    L1Ck { k: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InterpReport {
    pub lhs: f64,
    pub rhs: f64,
    /// Smallest constant making lhs ≤ C·rhs.
    pub constant: f64,
}

/// Evaluate an interpolation inequality on the balls B₁(0) ⊂ B₂(0) of the
/// base.
pub fn verify_interpolation(
    surface: &Hypersurface,
    u: &ScalarField,
    kind: InterpKind,
) -> Result<InterpReport> {
    let grid = &surface.grid;
    let pos = embedded_positions(surface)?;
    let radii: Vec<f64> = pos.iter().map(|p| norm3(*p)).collect();
    let sup_on = |vals: &[f64], r: f64| -> f64 {
        vals.iter()
            .zip(&radii)
            .filter(|(_, &ri)| ri <= r)
            .map(|(&v, _)| v.abs())
            .fold(0.0, f64::max)
    };
    match kind {
        InterpKind::Multiplicative { j, k } => {
            if j >= k {
                return Err(LabError::InvalidArgument("need j < k".into()));
            }
            let dj = deriv_mag(grid, u, j)?;
            let dk = deriv_mag(grid, u, k)?;
            let lhs = sup_on(&dj, 1.0);
            let t = j as f64 / k as f64;
            let rhs = sup_on(&u.values, 2.0).powf(1.0 - t) * sup_on(&dk, 2.0).powf(t);
            Ok(InterpReport {
                lhs,
                rhs,
                constant: if rhs > 0.0 { lhs / rhs } else { 0.0 },
            })
        }
        InterpKind::L1Ck { k } => {
            let n = grid.n();
            let w = crate::geometry::area_weights(surface)?;
            let l1: f64 = u
                .values
                .iter()
                .zip(&w)
                .zip(&radii)
                .filter(|(_, &ri)| ri <= 2.0)
                .map(|((&v, &wi), _)| v.abs() * wi)
                .sum();
            let dk = deriv_mag(grid, u, k)?;
            let d1 = deriv_mag(grid, u, 1)?;
            let dk_sup = sup_on(&dk, 2.0);
            let lhs0 = sup_on(&u.values, 1.0);
            let rhs0 = l1 + l1.powf(a_kn(k, n)) * dk_sup.powf(1.0 - a_kn(k, n));
            let lhs1 = sup_on(&d1, 1.0);
            let rhs1 = l1 + l1.powf(b_kn(k, n)) * dk_sup.powf(1.0 - b_kn(k, n));
            let c0 = if rhs0 > 0.0 { lhs0 / rhs0 } else { 0.0 };
            let c1 = if rhs1 > 0.0 { lhs1 / rhs1 } else { 0.0 };
            Ok(InterpReport {
                lhs: lhs0.max(lhs1),
                rhs: rhs0.max(rhs1),
                constant: c0.max(c1),
            })
        }
    }
}
