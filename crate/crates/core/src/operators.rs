//! The Gaussian-weighted linear operators 𝓛_γ = Δ − ½x·∇ + γ and
//! L = 𝓛_{1/2} + |A|², their spectrum, kernel, and Fredholm theory in L²_W,
//! the kernel projection Π, the nonlinear Euler–Lagrange operator 𝓜 of
//! Gaussian area, and a Fréchet-differentiability check 𝓜(εu) ≈ εLu.
//!
//! Discretization is in flux form: 𝓛_γ u = ρ^{−1}div(ρ∇u) + γu becomes a
//! weighted graph Laplacian with edge conductances built from the Gaussian
//! density at edge midpoints and the node weights of [`gaussian_measure`].
//! Conjugating by the square root of the node weights turns L²_W
//! self-adjointness into exact matrix symmetry, so a standard symmetric
//! eigensolver applies; the drift −½x·∇ is absorbed by the conductances to
//! O(h²). Truncation at r_max uses the natural (no-flux) boundary, where the
//! Gaussian weight is below 10⁻¹⁵.

use crate::error::{LabError, Result};
use crate::fields::ScalarField;
use crate::geometry::{gaussian_measure, gaussian_weight, normal_graph_geometry};
use crate::grid::{BaseGrid, Hypersurface};
use crate::shrinkers::Shrinker;
use crate::weighted_spaces::{inner_product_w, sobolev_norm};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Discrete 𝓛_γ + V in the Gaussian-weighted inner product.
pub struct WeightedOperator {
    /// Base surface the operator lives on.
    pub surface: Hypersurface,
    /// Gaussian measure per node (the L²_W weights).
    pub weights: Vec<f64>,
    /// Zeroth-order term γ + V per node.
    pub zeroth: Vec<f64>,
    pub gamma: f64,
    /// Edge conductances (i, j, c) of the weighted graph Laplacian.
    edges: Vec<(usize, usize, f64)>,
}

/// Eigenpairs of a weighted operator, descending in eigenvalue.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralResult {
    pub eigenvalues: Vec<f64>,
    /// L²_W-orthonormal eigenfields, one per eigenvalue.
    pub eigenfields: Vec<Vec<f64>>,
    /// ‖L e_i − λ_i e_i‖_W per pair.
    pub residuals: Vec<f64>,
}

impl SpectralResult {
    pub fn kernel_dim(&self) -> usize {
        self.eigenfields.len()
    }
}

/// Edge conductances of the flux-form discretization on the base geometry.
fn conductances(grid: &BaseGrid) -> Result<Vec<(usize, usize, f64)>> {
    let n = grid.n();
    let mut edges = Vec::new();
    match grid {
        BaseGrid::Line { xs } => {
            for i in 0..xs.len() - 1 {
                let mid = 0.5 * (xs[i] + xs[i + 1]);
                let c = gaussian_weight(n, [mid, 0.0, 0.0]) / (xs[i + 1] - xs[i]);
                edges.push((i, i + 1, c));
            }
        }
        BaseGrid::Circle { radius, n_theta } => {
            let nt = *n_theta;
            let dth = 2.0 * std::f64::consts::PI / nt as f64;
            let chord = 2.0 * radius * (dth / 2.0).sin();
            // Edge midpoints all sit at radius R·cos(Δθ/2).
            let rm = radius * (dth / 2.0).cos();
            let c = gaussian_weight(n, [rm, 0.0, 0.0]) / chord;
            for i in 0..nt {
                edges.push((i, (i + 1) % nt, c));
            }
        }
        BaseGrid::Profile {
            points,
            closed,
            dim,
        } => {
            let m = points.len();
            let last = if *closed { m } else { m - 1 };
            for i in 0..last {
                let j = (i + 1) % m;
                let mx = 0.5 * (points[i][0] + points[j][0]);
                let my = 0.5 * (points[i][1] + points[j][1]);
                let dx = points[j][0] - points[i][0];
                let dy = points[j][1] - points[i][1];
                let chord = (dx * dx + dy * dy).sqrt();
                let mut c = gaussian_weight(n, [mx, my, 0.0]) / chord;
                if *dim == 2 {
                    // Rotationally symmetric (m = 0) sector of the revolved
                    // surface: the revolution factor enters the conductance
                    // exactly as it enters the measure.
                    c *= 2.0 * std::f64::consts::PI * mx;
                }
                edges.push((i, j, c));
            }
        }
        BaseGrid::PlanePolar { rs, n_theta } => {
            let nt = *n_theta;
            let nr = rs.len();
            let dth = 2.0 * std::f64::consts::PI / nt as f64;
            let gw = |r: f64| gaussian_weight(n, [r, 0.0, 0.0]);
            for ir in 0..nr {
                // Angular edges within the ring; the cell's radial extent is
                // the trapezoid weight of the ring.
                let dr_cell = if ir == 0 {
                    // Matches the quadrature cell, which extends to the
                    // origin to carry the inner-disc mass.
                    (rs[1] - rs[0]) / 2.0 + rs[0] / 2.0
                } else if ir == nr - 1 {
                    (rs[nr - 1] - rs[nr - 2]) / 2.0
                } else {
                    (rs[ir + 1] - rs[ir - 1]) / 2.0
                };
                // Fourth-order angular stencil: the angular coefficient is
                // constant on each ring, so the quadratic form
                // (4/3)Σ(u_{i+1}−u_i)² − (1/12)Σ(u_{i+2}−u_i)² reproduces
                // −∂²_θ with symbol error O(Δθ⁴) while staying symmetric and
                // positive (symbol 4s²(1+s²/3), s = sin(kΔθ/2)).
                let c_ang = gw(rs[ir]) * dr_cell / (rs[ir] * dth);
                for it in 0..nt {
                    edges.push((ir * nt + it, ir * nt + (it + 1) % nt, 4.0 / 3.0 * c_ang));
                    edges.push((ir * nt + it, ir * nt + (it + 2) % nt, -c_ang / 12.0));
                }
                // Radial edges to the next ring.
                if ir + 1 < nr {
                    let re = 0.5 * (rs[ir] + rs[ir + 1]);
                    let c_rad = dth * re * gw(re) / (rs[ir + 1] - rs[ir]);
                    for it in 0..nt {
                        edges.push((ir * nt + it, (ir + 1) * nt + it, c_rad));
                    }
                }
            }
        }
    }
    Ok(edges)
}

/// Assemble L = 𝓛_γ + V on the base of a shrinker. `potential = None` uses
/// the geometric |A|², giving the stability operator L = 𝓛_{1/2} + |A|² when
/// γ = ½.
pub fn assemble_l(
    shrinker: &Shrinker,
    gamma: f64,
    potential: Option<&ScalarField>,
) -> Result<WeightedOperator> {
    let surface = &shrinker.surface;
    let m = surface.grid.len();
    let v: Vec<f64> = match potential {
        Some(p) => {
            if p.len() != m {
                return Err(LabError::InvalidArgument(
                    "potential length does not match the grid".into(),
                ));
            }
            p.values.clone()
        }
        None => shrinker.bundle.a_sq.clone(),
    };
    let weights = gaussian_measure(surface)?;
    let edges = conductances(&surface.grid)?;
    Ok(WeightedOperator {
        surface: surface.clone(),
        weights,
        zeroth: v.iter().map(|&vi| gamma + vi).collect(),
        gamma,
        edges,
    })
}

impl WeightedOperator {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Apply the operator: (Lu)_i = w_i^{−1} Σ_j c_ij (u_j − u_i) + (γ+V_i)u_i.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .zeroth
            .iter()
            .zip(u)
            .map(|(&z, &ui)| z * ui)
            .collect();
        for &(i, j, c) in &self.edges {
            out[i] += c * (u[j] - u[i]) / self.weights[i];
            out[j] += c * (u[i] - u[j]) / self.weights[j];
        }
        out
    }

    /// Dirichlet energy ⟨−(L − γ − V)u, u⟩_W = Σ_edges c (u_i − u_j)².
    pub fn dirichlet_energy(&self, u: &[f64]) -> f64 {
        self.edges
            .iter()
            .map(|&(i, j, c)| c * (u[i] - u[j]) * (u[i] - u[j]))
            .sum()
    }

    /// Conjugated matrix S = D^{1/2} L D^{−1/2}, exactly symmetric.
    pub fn symmetrized(&self) -> DMatrix<f64> {
        let m = self.len();
        let sqrt_w: Vec<f64> = self.weights.iter().map(|&w| w.sqrt()).collect();
        let mut s = DMatrix::zeros(m, m);
        for i in 0..m {
            s[(i, i)] = self.zeroth[i];
        }
        for &(i, j, c) in &self.edges {
            s[(i, i)] -= c / self.weights[i];
            s[(j, j)] -= c / self.weights[j];
            let off = c / (sqrt_w[i] * sqrt_w[j]);
            s[(i, j)] += off;
            s[(j, i)] += off;
        }
        s
    }
}

/// Top `count` eigenpairs of the operator in L²_W.
pub fn spectrum(op: &WeightedOperator, count: usize) -> Result<SpectralResult> {
    let m = op.len();
    if count > m {
        return Err(LabError::InvalidArgument(format!(
            "requested {count} eigenpairs of a {m}-node operator"
        )));
    }
    let s = op.symmetrized();
    let eig = s.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let sqrt_w: Vec<f64> = op.weights.iter().map(|&w| w.sqrt()).collect();
    let mut eigenvalues = Vec::with_capacity(count);
    let mut eigenfields = Vec::with_capacity(count);
    let mut residuals = Vec::with_capacity(count);
    for &idx in order.iter().take(count) {
        let lam = eig.eigenvalues[idx];
        let v = eig.eigenvectors.column(idx);
        // e = D^{−1/2} v is W-orthonormal when v is ℓ²-orthonormal.
        let e: Vec<f64> = (0..m).map(|i| v[i] / sqrt_w[i]).collect();
        let le = op.apply(&e);
        let res = le
            .iter()
            .zip(&e)
            .zip(&op.weights)
            .map(|((&l, &ei), &w)| (l - lam * ei) * (l - lam * ei) * w)
            .sum::<f64>()
            .sqrt();
        eigenvalues.push(lam);
        eigenfields.push(e);
        residuals.push(res);
    }
    Ok(SpectralResult {
        eigenvalues,
        eigenfields,
        residuals,
    })
}

/// Default kernel tolerance: 10⁻³ times the spectral gap around zero,
/// estimated as the smallest |λ| clearly away from zero.
pub fn default_kernel_tol(spectral: &SpectralResult) -> f64 {
    let gap = spectral
        .eigenvalues
        .iter()
        .map(|l| l.abs())
        .filter(|a| *a > 0.05)
        .fold(f64::INFINITY, f64::min);
    if gap.is_finite() {
        1e-3 * gap
    } else {
        1e-3
    }
}

/// Eigenfields with |λ| < tol. Errors if some eigenvalue falls in
/// [tol, 2·tol): the zero cluster is then not separated at this tolerance.
pub fn kernel_basis(op: &WeightedOperator, tol: f64) -> Result<SpectralResult> {
    let full = spectrum(op, op.len())?;
    if let Some(l) = full
        .eigenvalues
        .iter()
        .find(|l| l.abs() >= tol && l.abs() < 2.0 * tol)
    {
        return Err(LabError::AmbiguousKernel(format!(
            "eigenvalue {l:.3e} within [tol, 2·tol) of zero (tol = {tol:.3e})"
        )));
    }
    let mut eigenvalues = Vec::new();
    let mut eigenfields = Vec::new();
    let mut residuals = Vec::new();
    for i in 0..full.eigenvalues.len() {
        if full.eigenvalues[i].abs() < tol {
            eigenvalues.push(full.eigenvalues[i]);
            eigenfields.push(full.eigenfields[i].clone());
            residuals.push(full.residuals[i]);
        }
    }
    Ok(SpectralResult {
        eigenvalues,
        eigenfields,
        residuals,
    })
}

/// Solution of Lu = f with u ⊥_W ker L.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FredholmSolution {
    pub u: ScalarField,
    /// ‖Lu − f‖_W.
    pub residual: f64,
    /// Measured a-priori constant ‖u‖_{H²_W} / ‖f‖_{L²_W}.
    pub h2_constant: f64,
}

/// Solve Lu = f by spectral pseudo-inverse. The right-hand side must be
/// L²_W-orthogonal to the kernel (the solvability condition); the returned u
/// is the unique solution orthogonal to the kernel.
pub fn fredholm_solve(op: &WeightedOperator, f: &ScalarField) -> Result<FredholmSolution> {
    if f.len() != op.len() {
        return Err(LabError::InvalidArgument(
            "right-hand side length mismatch".into(),
        ));
    }
    let full = spectrum(op, op.len())?;
    let tol = default_kernel_tol(&full);
    let f_norm = inner_product_w(&op.surface, &f.values, &f.values)?.sqrt();
    let mut u = vec![0.0; op.len()];
    let mut kernel_mass = 0.0f64;
    for (lam, e) in full.eigenvalues.iter().zip(&full.eigenfields) {
        let coeff = inner_product_w(&op.surface, &f.values, e)?;
        if lam.abs() < tol {
            kernel_mass += coeff * coeff;
        } else {
            for (ui, &ei) in u.iter_mut().zip(e) {
                *ui += coeff / lam * ei;
            }
        }
    }
    if kernel_mass.sqrt() > 1e-8 * f_norm {
        return Err(LabError::SolvabilityViolation(format!(
            "‖Π_ker f‖_W = {:.3e} exceeds 10⁻⁸·‖f‖_W",
            kernel_mass.sqrt()
        )));
    }
    let lu = op.apply(&u);
    let diff: Vec<f64> = lu.iter().zip(&f.values).map(|(&a, &b)| a - b).collect();
    let residual = inner_product_w(&op.surface, &diff, &diff)?.sqrt();
    let uf = ScalarField::new(u);
    let h2 = sobolev_norm(&op.surface, &uf, 2)?;
    Ok(FredholmSolution {
        u: uf,
        residual,
        h2_constant: if f_norm > 0.0 { h2 / f_norm } else { 0.0 },
    })
}

/// Π u = Σ_i ⟨u, e_i⟩_W e_i onto the span of the given orthonormal fields.
pub fn projection_pi(
    surface: &Hypersurface,
    u: &ScalarField,
    kernel: &SpectralResult,
) -> Result<ScalarField> {
    let mut out = vec![0.0; u.len()];
    for e in &kernel.eigenfields {
        let coeff = inner_product_w(surface, &u.values, e)?;
        for (oi, &ei) in out.iter_mut().zip(e) {
            *oi += coeff * ei;
        }
    }
    Ok(ScalarField::new(out))
}

/// The Euler–Lagrange operator of Gaussian area over the base:
/// 𝓜(u) = (½⟨q,ν̃⟩ − H̃)·⟨ν̃,ν_Σ⟩·J·ρ(q)/ρ(y), assembled from the
/// normal-graph geometry of u. Vanishes identically iff the graph is a
/// shrinker.
pub fn euler_lagrange_m(base: &Shrinker, u: &ScalarField) -> Result<ScalarField> {
    let g = normal_graph_geometry(base, u)?;
    let m = u.len();
    let mut out = vec![0.0; m];
    for i in 0..m {
        let phi = 0.5 * g.bundle.support[i] - g.bundle.mean_curvature[i];
        out[i] = phi * g.cos_angle[i] * g.area_element[i] * g.weight_ratio[i];
    }
    Ok(ScalarField::new(out))
}

/// Defects of the linearization 𝓜(εu) ≈ εLu over an ε-ladder.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinearizationReport {
    /// (ε, ‖𝓜(εu) − εLu‖_W) per rung.
    pub defects: Vec<(f64, f64)>,
    /// Defect/ε² per rung; bounded for a Fréchet-differentiable 𝓜.
    pub normalized: Vec<f64>,
    /// Successive raw defects decay at least like the ε-ratio squared
    /// (within 20%; directions with vanishing quadratic term decay faster).
    pub quadratic: bool,
}

/// Check that L is the Fréchet derivative of 𝓜 at 0 along the direction u:
/// the defect ‖𝓜(εu) − εLu‖_W must decay like ε². `lu` supplies Lu
/// (analytic when available); `None` applies the assembled operator.
pub fn linearization_check(
    base: &Shrinker,
    u: &ScalarField,
    lu: Option<&[f64]>,
    epsilons: &[f64],
) -> Result<LinearizationReport> {
    if epsilons.is_empty() {
        return Err(LabError::InvalidArgument("empty ε-ladder".into()));
    }
    let lu_vec: Vec<f64> = match lu {
        Some(v) => v.to_vec(),
        None => assemble_l(base, 0.5, None)?.apply(&u.values),
    };
    let mut defects = Vec::new();
    let mut normalized = Vec::new();
    for &eps in epsilons {
        let scaled = u.scaled(eps);
        let m = euler_lagrange_m(base, &scaled)?;
        let diff: Vec<f64> = m
            .values
            .iter()
            .zip(&lu_vec)
            .map(|(&mi, &li)| mi - eps * li)
            .collect();
        let d = inner_product_w(&base.surface, &diff, &diff)?.sqrt();
        defects.push((eps, d));
        normalized.push(d / (eps * eps));
    }
    let mut quadratic = true;
    for w in defects.windows(2) {
        let (e0, d0) = w[0];
        let (e1, d1) = w[1];
        if d0 <= 1e-14 || d1 <= 1e-14 {
            continue;
        }
        let expected = (e0 / e1) * (e0 / e1);
        let actual = d0 / d1;
        if actual < 0.8 * expected {
            quadratic = false;
        }
    }
    Ok(LinearizationReport {
        defects,
        normalized,
        quadratic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shrinkers::{canonical_shrinker, GridSpec, ShrinkerKind};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line_shrinker() -> Shrinker {
        canonical_shrinker(ShrinkerKind::Line, 1, &GridSpec::default()).unwrap()
    }

    fn circle_shrinker(n_theta: usize) -> Shrinker {
        let spec = GridSpec {
            h: 2.0 * std::f64::consts::PI * 2.0f64.sqrt() / n_theta as f64,
            ..GridSpec::default()
        };
        canonical_shrinker(ShrinkerKind::Circle, 1, &spec).unwrap()
    }

    fn line_xs(s: &Shrinker) -> Vec<f64> {
        match &s.surface.grid {
            BaseGrid::Line { xs } => xs.clone(),
            _ => unreachable!(),
        }
    }

    #[test]
    fn hermite_identities_on_the_line() {
        let s = line_shrinker();
        let xs = line_xs(&s);
        let op = assemble_l(&s, 0.5, None).unwrap();
        // Row sums are exact: L(1) = γ + V by construction.
        let ones = vec![1.0; op.len()];
        for &v in op.apply(&ones).iter() {
            assert_abs_diff_eq!(v, 0.5, epsilon = 1e-12);
        }
        // Lx = 0 and L(x²−2) = −½(x²−2) at interior nodes to O(h²).
        let lx = op.apply(&xs);
        let h2: Vec<f64> = xs.iter().map(|x| x * x - 2.0).collect();
        let lh2 = op.apply(&h2);
        for (i, &x) in xs.iter().enumerate() {
            if x.abs() <= 4.0 {
                assert_abs_diff_eq!(lx[i], 0.0, epsilon = 2e-3);
                assert_abs_diff_eq!(lh2[i], -0.5 * h2[i], epsilon = 5e-3);
            }
        }
        // In L²_W the defects are tiny.
        let r = inner_product_w(&s.surface, &lx, &lx).unwrap().sqrt();
        assert!(r < 1e-3, "‖Lx‖_W = {r}");
    }

    #[test]
    fn circle_fourier_identities() {
        let s = circle_shrinker(512);
        let op = assemble_l(&s, 0.5, None).unwrap();
        // |A|² = ½, so L = Δ_{S¹_{√2}} + 1 and cos(kθ) ↦ (1 − k²/2)cos(kθ).
        let thetas = s.surface.grid.thetas();
        for k in [1usize, 2, 3] {
            let u: Vec<f64> = thetas.iter().map(|&t| (k as f64 * t).cos()).collect();
            let lu = op.apply(&u);
            let lam = 1.0 - (k * k) as f64 / 2.0;
            for i in 0..u.len() {
                assert_abs_diff_eq!(lu[i], lam * u[i], epsilon = 1e-3);
            }
        }
    }

    #[test]
    fn symmetrized_matrix_and_self_adjointness() {
        let s = circle_shrinker(128);
        let op = assemble_l(&s, 0.5, None).unwrap();
        let m = op.symmetrized();
        for i in 0..op.len() {
            for j in 0..op.len() {
                assert_abs_diff_eq!(m[(i, j)], m[(j, i)], epsilon = 1e-12 * m[(i, j)].abs().max(1.0));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let u: Vec<f64> = (0..op.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..op.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let a = inner_product_w(&s.surface, &op.apply(&u), &v).unwrap();
            let b = inner_product_w(&s.surface, &u, &op.apply(&v)).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-8 * a.abs().max(1.0));
        }
    }

    #[test]
    fn line_spectrum_is_hermite() {
        let s = line_shrinker();
        let op = assemble_l(&s, 0.5, None).unwrap();
        let spec = spectrum(&op, 5).unwrap();
        let expect = [0.5, 0.0, -0.5, -1.0, -1.5];
        for (l, e) in spec.eigenvalues.iter().zip(&expect) {
            assert_abs_diff_eq!(l, e, epsilon = 5e-3);
        }
        for &r in &spec.residuals {
            assert!(r < 1e-6, "eigen residual {r}");
        }
        // W-orthonormality of the eigenfields.
        for i in 0..5 {
            for j in 0..5 {
                let ip = inner_product_w(&s.surface, &spec.eigenfields[i], &spec.eigenfields[j])
                    .unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(ip, want, epsilon = 1e-8);
            }
        }
        // γ = 0 with no potential: the Ornstein–Uhlenbeck spectrum 0, −½, −1.
        let zero_pot = ScalarField::new(vec![0.0; op.len()]);
        let op0 = assemble_l(&s, 0.0, Some(&zero_pot)).unwrap();
        let spec0 = spectrum(&op0, 3).unwrap();
        for (l, e) in spec0.eigenvalues.iter().zip(&[0.0, -0.5, -1.0]) {
            assert_abs_diff_eq!(l, e, epsilon = 5e-3);
        }
    }

    #[test]
    fn kernel_dimensions_match_geometry() {
        // Line: one-dimensional kernel spanned by the rotation mode x.
        let s = line_shrinker();
        let op = assemble_l(&s, 0.5, None).unwrap();
        let full = spectrum(&op, op.len()).unwrap();
        let tol = default_kernel_tol(&full);
        let k = kernel_basis(&op, tol).unwrap();
        assert_eq!(k.kernel_dim(), 1);
        let xs = line_xs(&s);
        let overlap = inner_product_w(&s.surface, &k.eigenfields[0], &xs)
            .unwrap()
            .abs();
        let xnorm = inner_product_w(&s.surface, &xs, &xs).unwrap().sqrt();
        assert!(overlap / xnorm > 0.999, "kernel not aligned with x");

        // Circle √2: 1 − k²/2 never vanishes, so the kernel is trivial.
        let c = circle_shrinker(256);
        let opc = assemble_l(&c, 0.5, None).unwrap();
        let k = kernel_basis(&opc, 1e-3).unwrap();
        assert_eq!(k.kernel_dim(), 0);
    }

    #[test]
    fn plane_kernel_is_the_two_translations() {
        let spec = GridSpec {
            h: 0.25,
            r_max: 12.0,
            n_theta: 16,
        };
        let s = canonical_shrinker(ShrinkerKind::Plane, 2, &spec).unwrap();
        let op = assemble_l(&s, 0.5, None).unwrap();
        let full = spectrum(&op, op.len()).unwrap();
        let tol = default_kernel_tol(&full);
        let k = kernel_basis(&op, tol).unwrap();
        assert_eq!(k.kernel_dim(), 2, "eigenvalues near 0: {:?}",
            full.eigenvalues.iter().filter(|l| l.abs() < 0.05).collect::<Vec<_>>());
    }

    #[test]
    fn fredholm_solves_and_solvability() {
        let s = line_shrinker();
        let op = assemble_l(&s, 0.5, None).unwrap();
        // L(2) = 1 and 1 ⊥ x, so f ≡ 1 solves to u ≡ 2.
        let f = ScalarField::new(vec![1.0; op.len()]);
        let sol = fredholm_solve(&op, &f).unwrap();
        for &v in &sol.u.values {
            assert_abs_diff_eq!(v, 2.0, epsilon = 1e-5);
        }
        assert!(sol.residual < 1e-8, "residual {}", sol.residual);
        assert!(sol.h2_constant > 0.0);

        // f = x lies in the kernel: the solvability condition fails.
        let xs = line_xs(&s);
        let fx = ScalarField::new(xs);
        assert!(matches!(
            fredholm_solve(&op, &fx),
            Err(LabError::SolvabilityViolation(_))
        ));

        // Circle: cos(2θ) is a −1-eigenfield, so u = −cos(2θ).
        let c = circle_shrinker(256);
        let opc = assemble_l(&c, 0.5, None).unwrap();
        let thetas = c.surface.grid.thetas();
        let f = ScalarField::new(thetas.iter().map(|&t| (2.0 * t).cos()).collect());
        let sol = fredholm_solve(&opc, &f).unwrap();
        for (v, &t) in sol.u.values.iter().zip(&thetas) {
            assert_abs_diff_eq!(*v, -(2.0 * t).cos(), epsilon = 1e-3);
        }
    }

    #[test]
    fn projection_pi_selects_kernel_component() {
        let s = line_shrinker();
        let op = assemble_l(&s, 0.5, None).unwrap();
        let k = kernel_basis(&op, 5e-4).unwrap();
        let xs = line_xs(&s);
        // u = x + (x² − 2): Π picks out the kernel part x.
        let u = ScalarField::new(xs.iter().map(|x| x + x * x - 2.0).collect());
        let p = projection_pi(&s.surface, &u, &k).unwrap();
        for (pi, &x) in p.values.iter().zip(&xs) {
            if x.abs() <= 6.0 {
                assert_abs_diff_eq!(*pi, x, epsilon = 5e-3);
            }
        }
        // Constants are W-orthogonal to x.
        let ones = ScalarField::new(vec![1.0; op.len()]);
        let p = projection_pi(&s.surface, &ones, &k).unwrap();
        for &v in &p.values {
            assert!(v.abs() < 1e-6);
        }
    }

    #[test]
    fn euler_lagrange_oracles() {
        // 𝓜(0) = 0 on every base.
        let s = line_shrinker();
        let zero = ScalarField::new(vec![0.0; s.surface.grid.len()]);
        let m = euler_lagrange_m(&s, &zero).unwrap();
        for &v in &m.values {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-8);
        }

        // Plane shifted by a constant: (c/2)·e^{−c²/4} per node.
        let p = canonical_shrinker(
            ShrinkerKind::Plane,
            2,
            &GridSpec {
                h: 0.25,
                r_max: 12.0,
                n_theta: 16,
            },
        )
        .unwrap();
        let c = 0.3;
        let n = p.surface.grid.len();
        let u = ScalarField::with_derivs(vec![c; n], vec![vec![0.0; n]; 2], vec![vec![0.0; n]; 3]);
        let m = euler_lagrange_m(&p, &u).unwrap();
        let want = (c / 2.0) * (-c * c / 4.0).exp();
        for &v in &m.values {
            assert_abs_diff_eq!(v, want, epsilon = 1e-10);
        }

        // Concentric circle: closed-form residual times area and weight
        // factors.
        let circ = circle_shrinker(256);
        let eps = 0.05;
        let n = circ.surface.grid.len();
        let u = ScalarField::with_derivs(vec![eps; n], vec![vec![0.0; n]], vec![vec![0.0; n]]);
        let m = euler_lagrange_m(&circ, &u).unwrap();
        let r0 = 2.0f64.sqrt();
        let r1 = r0 + eps;
        let want = (0.5 * r1 - 1.0 / r1) * (r1 / r0)
            * (-(2.0 * eps * r0 + eps * eps) / 4.0).exp();
        for &v in &m.values {
            assert_abs_diff_eq!(v, want, epsilon = 1e-8);
        }
    }

    #[test]
    fn linearization_is_quadratically_accurate() {
        let s = line_shrinker();
        let xs = line_xs(&s);
        let n = xs.len();
        // Hermite mode 2 with analytic derivatives and analytic Lu.
        let u = ScalarField::with_derivs(
            xs.iter().map(|x| x * x - 2.0).collect(),
            vec![xs.iter().map(|x| 2.0 * x).collect()],
            vec![vec![2.0; n]],
        );
        let lu: Vec<f64> = xs.iter().map(|x| -0.5 * (x * x - 2.0)).collect();
        let ladder = [1e-2, 1e-3, 1e-4, 1e-5];
        let rep = linearization_check(&s, &u, Some(&lu), &ladder).unwrap();
        assert!(rep.quadratic, "defects: {:?}", rep.defects);
        let base = rep.normalized[0];
        for &c in &rep.normalized {
            assert!(c < 10.0 * base.max(1.0), "normalized defect {c}");
        }

        // Kernel direction x: 𝓜(εx) itself is O(ε²).
        let u = ScalarField::with_derivs(xs.clone(), vec![vec![1.0; n]], vec![vec![0.0; n]]);
        let lu = vec![0.0; n];
        let rep = linearization_check(&s, &u, Some(&lu), &ladder).unwrap();
        assert!(rep.quadratic, "defects: {:?}", rep.defects);

        // The zero direction has zero defect.
        let zero = ScalarField::new(vec![0.0; n]);
        let rep = linearization_check(&s, &zero, Some(&vec![0.0; n]), &[1e-2]).unwrap();
        assert_abs_diff_eq!(rep.defects[0].1, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn dirichlet_energy_bound() {
        // ⟨−𝓛₀u, u⟩_W = Q(u) ≤ ‖𝓛₀u‖_W ‖u‖_W (Cauchy–Schwarz made
        // quantitative; holds exactly at the discrete level).
        let s = line_shrinker();
        let xs = line_xs(&s);
        let zero_pot = ScalarField::new(vec![0.0; xs.len()]);
        let op = assemble_l(&s, 0.0, Some(&zero_pot)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            // Random smooth compactly supported bump combination.
            let c1: f64 = rng.gen_range(-1.0..1.0);
            let c2: f64 = rng.gen_range(-1.0..1.0);
            let x1: f64 = rng.gen_range(-3.0..3.0);
            let x2: f64 = rng.gen_range(-3.0..3.0);
            let u: Vec<f64> = xs
                .iter()
                .map(|x| {
                    c1 * (-(x - x1) * (x - x1)).exp() + c2 * (-(x - x2) * (x - x2) / 2.0).exp()
                })
                .collect();
            let q = op.dirichlet_energy(&u);
            let lu = op.apply(&u);
            let nl = inner_product_w(&s.surface, &lu, &lu).unwrap().sqrt();
            let nu = inner_product_w(&s.surface, &u, &u).unwrap().sqrt();
            assert!(q <= nl * nu * (1.0 + 1e-10), "Q = {q}, bound = {}", nl * nu);
        }
    }
}
