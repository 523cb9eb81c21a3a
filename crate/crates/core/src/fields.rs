//! Scalar fields on base grids and the finite-difference machinery behind
//! every derivative the laboratory takes.
//!
//! A `ScalarField` is a value per grid node. Derivatives are taken with
//! centered second-order stencils (one-sided at open ends, periodic where the
//! grid is periodic). Fields built from symbolic data may carry *provided*
//! derivative tables; every consumer asks the field for derivatives instead
//! of differencing directly, so symbolic inputs flow through the closed
//! formulas exactly.

use crate::error::{LabError, Result};
use crate::grid::BaseGrid;
use serde::{Deserialize, Serialize};

/// Analytic derivative tables attached to a field.
///
/// `d1` holds one array per parameter axis (curves: arclength/coordinate;
/// plane-polar: r then θ). `d2` holds the unique second partials in
/// lexicographic order (curves: \[ss\]; plane-polar: \[rr, rθ, θθ\]).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProvidedDerivs {
    pub d1: Vec<Vec<f64>>,
    pub d2: Vec<Vec<f64>>,
}

/// Values of a function on a grid, with derivative access.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalarField {
    pub values: Vec<f64>,
    pub provided: Option<ProvidedDerivs>,
}

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Self {
        ScalarField {
            values,
            provided: None,
        }
    }

    pub fn zeros(n: usize) -> Self {
        ScalarField::new(vec![0.0; n])
    }

    pub fn with_derivs(values: Vec<f64>, d1: Vec<Vec<f64>>, d2: Vec<Vec<f64>>) -> Self {
        ScalarField {
            values,
            provided: Some(ProvidedDerivs { d1, d2 }),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The field c·u, scaling any provided derivative tables alongside the
    /// values.
    pub fn scaled(&self, c: f64) -> Self {
        let scale = |v: &Vec<Vec<f64>>| {
            v.iter()
                .map(|row| row.iter().map(|&x| c * x).collect())
                .collect()
        };
        ScalarField {
            values: self.values.iter().map(|&x| c * x).collect(),
            provided: self.provided.as_ref().map(|p| ProvidedDerivs {
                d1: scale(&p.d1),
                d2: scale(&p.d2),
            }),
        }
    }

    /// First parameter derivatives, one array per axis. Uses the provided
    /// tables when present, finite differences otherwise.
    pub fn d1(&self, grid: &BaseGrid) -> Result<Vec<Vec<f64>>> {
        self.check_len(grid)?;
        if let Some(p) = &self.provided {
            return Ok(p.d1.clone());
        }
        Ok(param_d1(grid, &self.values))
    }

    /// Unique second parameter derivatives in lexicographic order.
    pub fn d2(&self, grid: &BaseGrid) -> Result<Vec<Vec<f64>>> {
        self.check_len(grid)?;
        if let Some(p) = &self.provided {
            return Ok(p.d2.clone());
        }
        Ok(param_d2(grid, &self.values))
    }

    fn check_len(&self, grid: &BaseGrid) -> Result<()> {
        if self.values.len() != grid.len() {
            return Err(LabError::InvalidArgument(format!(
                "field length {} vs grid size {}",
                self.values.len(),
                grid.len()
            )));
        }
        Ok(())
    }
}

/// Centered first derivative on a non-uniform open 1-D grid, second-order
/// one-sided stencils at the two ends.
pub fn fd1_open(ts: &[f64], vals: &[f64]) -> Vec<f64> {
    let n = ts.len();
    assert!(n >= 3 && vals.len() == n);
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        let a = ts[i] - ts[i - 1];
        let b = ts[i + 1] - ts[i];
        out[i] = (-b / (a * (a + b))) * vals[i - 1]
            + ((b - a) / (a * b)) * vals[i]
            + (a / (b * (a + b))) * vals[i + 1];
    }
    // Second-order one-sided three-point formulas.
    let a = ts[1] - ts[0];
    let b = ts[2] - ts[1];
    out[0] = (-(2.0 * a + b) / (a * (a + b))) * vals[0]
        + ((a + b) / (a * b)) * vals[1]
        + (-a / (b * (a + b))) * vals[2];
    let a = ts[n - 1] - ts[n - 2];
    let b = ts[n - 2] - ts[n - 3];
    out[n - 1] = ((2.0 * a + b) / (a * (a + b))) * vals[n - 1]
        + (-(a + b) / (a * b)) * vals[n - 2]
        + (a / (b * (a + b))) * vals[n - 3];
    out
}

/// Second derivative on a non-uniform open 1-D grid. Interior nodes use the
/// three-point formula; the ends use the second derivative of the cubic
/// through the nearest four nodes (second-order one-sided when the spacing is
/// uniform), falling back to copying the neighbor on three-node grids.
pub fn fd2_open(ts: &[f64], vals: &[f64]) -> Vec<f64> {
    let n = ts.len();
    assert!(n >= 3 && vals.len() == n);
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        let a = ts[i] - ts[i - 1];
        let b = ts[i + 1] - ts[i];
        out[i] = 2.0 * vals[i - 1] / (a * (a + b)) - 2.0 * vals[i] / (a * b)
            + 2.0 * vals[i + 1] / (b * (a + b));
    }
    if n >= 4 {
        out[0] = cubic_end_d2(&ts[0..4], &vals[0..4]);
        let t4: Vec<f64> = ts[n - 4..n].iter().rev().copied().collect();
        let v4: Vec<f64> = vals[n - 4..n].iter().rev().copied().collect();
        out[n - 1] = cubic_end_d2(&t4, &v4);
    } else {
        out[0] = out[1];
        out[n - 1] = out[n - 2];
    }
    out
}

/// Second derivative at ts[0] of the cubic interpolating four nodes
/// (Newton divided differences).
fn cubic_end_d2(ts: &[f64], vals: &[f64]) -> f64 {
    let f01 = (vals[1] - vals[0]) / (ts[1] - ts[0]);
    let f12 = (vals[2] - vals[1]) / (ts[2] - ts[1]);
    let f23 = (vals[3] - vals[2]) / (ts[3] - ts[2]);
    let f012 = (f12 - f01) / (ts[2] - ts[0]);
    let f123 = (f23 - f12) / (ts[3] - ts[1]);
    let f0123 = (f123 - f012) / (ts[3] - ts[0]);
    2.0 * f012 + 2.0 * f0123 * ((ts[0] - ts[1]) + (ts[0] - ts[2]))
}

/// First and second derivatives at every node from the quartic polynomial
/// through the five nearest nodes (sliding window, clamped at open ends,
/// wrapped with unwrapped parameters when `period` is given). Fourth-order
/// accurate on smooth data; node-local coordinates avoid cancellation.
pub fn fd_quartic(ts: &[f64], vals: &[f64], period: Option<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = ts.len();
    assert!(vals.len() == n);
    if n < 5 {
        // Fall back to the second-order stencils on tiny grids.
        return match period {
            None => (fd1_open(ts, vals), fd2_open(ts, vals)),
            Some(p) => (
                fd1_periodic_nonuniform(ts, vals, p),
                fd2_periodic_nonuniform(ts, vals, p),
            ),
        };
    }
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    let mut tau = [0.0f64; 5];
    let mut f = [0.0f64; 5];
    for i in 0..n {
        match period {
            Some(p) => {
                for (k, off) in (-2i64..=2).enumerate() {
                    let j = (i as i64 + off).rem_euclid(n as i64) as usize;
                    let mut t = ts[j] - ts[i];
                    if off < 0 && t > 0.0 {
                        t -= p;
                    }
                    if off > 0 && t < 0.0 {
                        t += p;
                    }
                    tau[k] = t;
                    f[k] = vals[j];
                }
            }
            None => {
                let start = i.saturating_sub(2).min(n - 5);
                for k in 0..5 {
                    tau[k] = ts[start + k] - ts[i];
                    f[k] = vals[start + k];
                }
            }
        }
        let (a1, a2) = quartic_derivs_at_zero(&tau, &f);
        d1[i] = a1;
        d2[i] = a2;
    }
    (d1, d2)
}

/// p′(0) and p″(0) of the quartic through (τ_k, f_k), τ in node-local
/// coordinates (one τ_k is 0 for the node itself).
fn quartic_derivs_at_zero(tau: &[f64; 5], f: &[f64; 5]) -> (f64, f64) {
    // Newton divided differences.
    let mut c = *f;
    for lvl in 1..5 {
        for k in (lvl..5).rev() {
            c[k] = (c[k] - c[k - 1]) / (tau[k] - tau[k - lvl]);
        }
    }
    // Expand Π(τ − τ_j) incrementally to monomial coefficients and
    // accumulate p(τ) = Σ c_k Π_{j<k}(τ − τ_j).
    let mut basis = [0.0f64; 5]; // coefficients of the current product
    basis[0] = 1.0;
    let mut poly = [0.0f64; 5];
    poly[0] = c[0];
    for k in 1..5 {
        // basis ← basis · (τ − τ_{k−1})
        let mut next = [0.0f64; 5];
        for d in 0..k {
            next[d + 1] += basis[d];
            next[d] -= basis[d] * tau[k - 1];
        }
        basis = next;
        for d in 0..=k {
            poly[d] += c[k] * basis[d];
        }
    }
    (poly[1], 2.0 * poly[2])
}

/// Centered first derivative on a uniform periodic grid with step h.
pub fn fd1_periodic(vals: &[f64], h: f64) -> Vec<f64> {
    let n = vals.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let ip = (i + 1) % n;
        let im = (i + n - 1) % n;
        out[i] = (vals[ip] - vals[im]) / (2.0 * h);
    }
    out
}

/// Centered second derivative on a uniform periodic grid with step h.
pub fn fd2_periodic(vals: &[f64], h: f64) -> Vec<f64> {
    let n = vals.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let ip = (i + 1) % n;
        let im = (i + n - 1) % n;
        out[i] = (vals[ip] - 2.0 * vals[i] + vals[im]) / (h * h);
    }
    out
}

/// First derivative on a non-uniform periodic grid given the node parameters
/// and the total period.
pub fn fd1_periodic_nonuniform(ts: &[f64], vals: &[f64], period: f64) -> Vec<f64> {
    let n = ts.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let ip = (i + 1) % n;
        let im = (i + n - 1) % n;
        let a = if i == 0 {
            ts[0] + period - ts[n - 1]
        } else {
            ts[i] - ts[i - 1]
        };
        let b = if i == n - 1 {
            ts[0] + period - ts[n - 1]
        } else {
            ts[i + 1] - ts[i]
        };
        out[i] = (-b / (a * (a + b))) * vals[im] + ((b - a) / (a * b)) * vals[i]
            + (a / (b * (a + b))) * vals[ip];
    }
    out
}

/// Second derivative on a non-uniform periodic grid.
pub fn fd2_periodic_nonuniform(ts: &[f64], vals: &[f64], period: f64) -> Vec<f64> {
    let n = ts.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let ip = (i + 1) % n;
        let im = (i + n - 1) % n;
        let a = if i == 0 {
            ts[0] + period - ts[n - 1]
        } else {
            ts[i] - ts[i - 1]
        };
        let b = if i == n - 1 {
            ts[0] + period - ts[n - 1]
        } else {
            ts[i + 1] - ts[i]
        };
        out[i] = 2.0 * vals[im] / (a * (a + b)) - 2.0 * vals[i] / (a * b)
            + 2.0 * vals[ip] / (b * (a + b));
    }
    out
}

/// Curve parameter values: cumulative chord length (≈ arclength) together
/// with the total period for closed curves.
pub fn curve_params(points: &[[f64; 2]], closed: bool) -> (Vec<f64>, f64) {
    let n = points.len();
    let mut ts = vec![0.0; n];
    for i in 1..n {
        let d = ((points[i][0] - points[i - 1][0]).powi(2)
            + (points[i][1] - points[i - 1][1]).powi(2))
        .sqrt();
        ts[i] = ts[i - 1] + d;
    }
    let period = if closed {
        let d = ((points[0][0] - points[n - 1][0]).powi(2)
            + (points[0][1] - points[n - 1][1]).powi(2))
        .sqrt();
        ts[n - 1] + d
    } else {
        ts[n - 1]
    };
    (ts, period)
}

/// First parameter derivatives of raw values on a grid (no provided tables).
pub fn param_d1(grid: &BaseGrid, vals: &[f64]) -> Vec<Vec<f64>> {
    match grid {
        BaseGrid::Line { xs } => vec![fd1_open(xs, vals)],
        BaseGrid::Circle { radius, n_theta } => {
            // Derivative with respect to arclength s = R·θ.
            let h = 2.0 * std::f64::consts::PI * radius / *n_theta as f64;
            vec![fd1_periodic(vals, h)]
        }
        BaseGrid::PlanePolar { rs, n_theta } => {
            let nt = *n_theta;
            let nr = rs.len();
            let ht = 2.0 * std::f64::consts::PI / nt as f64;
            let mut ur = vec![0.0; nr * nt];
            let mut ut = vec![0.0; nr * nt];
            // Radial derivative along each ray.
            let mut ray = vec![0.0; nr];
            for it in 0..nt {
                for ir in 0..nr {
                    ray[ir] = vals[ir * nt + it];
                }
                let d = fd1_open(rs, &ray);
                for ir in 0..nr {
                    ur[ir * nt + it] = d[ir];
                }
            }
            // Angular derivative along each ring.
            for ir in 0..nr {
                let ring = &vals[ir * nt..(ir + 1) * nt];
                let d = fd1_periodic(ring, ht);
                ut[ir * nt..(ir + 1) * nt].copy_from_slice(&d);
            }
            vec![ur, ut]
        }
        BaseGrid::Profile { points, closed, .. } => {
            let (ts, period) = curve_params(points, *closed);
            if *closed {
                vec![fd1_periodic_nonuniform(&ts, vals, period)]
            } else {
                vec![fd1_open(&ts, vals)]
            }
        }
    }
}

/// Unique second parameter derivatives (curves: \[ss\]; plane: \[rr, rθ, θθ\]).
pub fn param_d2(grid: &BaseGrid, vals: &[f64]) -> Vec<Vec<f64>> {
    match grid {
        BaseGrid::Line { xs } => vec![fd2_open(xs, vals)],
        BaseGrid::Circle { radius, n_theta } => {
            let h = 2.0 * std::f64::consts::PI * radius / *n_theta as f64;
            vec![fd2_periodic(vals, h)]
        }
        BaseGrid::PlanePolar { rs, n_theta } => {
            let nt = *n_theta;
            let nr = rs.len();
            let ht = 2.0 * std::f64::consts::PI / nt as f64;
            let mut urr = vec![0.0; nr * nt];
            let mut urt = vec![0.0; nr * nt];
            let mut utt = vec![0.0; nr * nt];
            let mut ray = vec![0.0; nr];
            for it in 0..nt {
                for ir in 0..nr {
                    ray[ir] = vals[ir * nt + it];
                }
                let d = fd2_open(rs, &ray);
                for ir in 0..nr {
                    urr[ir * nt + it] = d[ir];
                }
            }
            for ir in 0..nr {
                let ring = &vals[ir * nt..(ir + 1) * nt];
                let d = fd2_periodic(ring, ht);
                utt[ir * nt..(ir + 1) * nt].copy_from_slice(&d);
            }
            // Mixed partial: θ-derivative of the radial derivative.
            let d1 = param_d1(grid, vals);
            for ir in 0..nr {
                let ring = &d1[0][ir * nt..(ir + 1) * nt];
                let d = fd1_periodic(ring, ht);
                urt[ir * nt..(ir + 1) * nt].copy_from_slice(&d);
            }
            vec![urr, urt, utt]
        }
        BaseGrid::Profile { points, closed, .. } => {
            let (ts, period) = curve_params(points, *closed);
            if *closed {
                vec![fd2_periodic_nonuniform(&ts, vals, period)]
            } else {
                vec![fd2_open(&ts, vals)]
            }
        }
    }
}

/// Magnitude of the j-th derivative per node.
///
/// Curves: |d^j u / ds^j|. Plane-polar: exact flat gradient/Hessian
/// magnitudes in the orthonormal polar frame for j ≤ 2; for j ≥ 3 the
/// frame derivatives (∂_r, r^{-1}∂_θ) are iterated componentwise (a
/// comparable-norm surrogate for the full covariant derivative, adequate for
/// threshold checks).
pub fn deriv_magnitude(grid: &BaseGrid, vals: &[f64], order: usize) -> Vec<f64> {
    let n = grid.len();
    if order == 0 {
        return vals.iter().map(|v| v.abs()).collect();
    }
    match grid {
        BaseGrid::Line { .. } | BaseGrid::Circle { .. } | BaseGrid::Profile { .. } => {
            let mut cur = vals.to_vec();
            for _ in 0..order {
                cur = param_d1(grid, &cur).remove(0);
            }
            cur.iter().map(|v| v.abs()).collect()
        }
        BaseGrid::PlanePolar { rs, n_theta } => {
            let nt = *n_theta;
            let radii: Vec<f64> = {
                let mut out = Vec::with_capacity(n);
                for &r in rs {
                    for _ in 0..nt {
                        out.push(r);
                    }
                }
                out
            };
            if order == 2 {
                // Exact flat Hessian in the orthonormal polar frame.
                let d1 = param_d1(grid, vals);
                let d2 = param_d2(grid, vals);
                let mut out = vec![0.0; n];
                for i in 0..n {
                    let r = radii[i];
                    let hrr = d2[0][i];
                    let hrt = d2[1][i] / r - d1[1][i] / (r * r);
                    let htt = d2[2][i] / (r * r) + d1[0][i] / r;
                    out[i] = (hrr * hrr + 2.0 * hrt * hrt + htt * htt).sqrt();
                }
                return out;
            }
            // Iterated frame derivatives.
            let mut comps: Vec<Vec<f64>> = vec![vals.to_vec()];
            for _ in 0..order {
                let mut next: Vec<Vec<f64>> = Vec::with_capacity(comps.len() * 2);
                for c in &comps {
                    let d = param_d1(grid, c);
                    next.push(d[0].clone());
                    let mut dt = d[1].clone();
                    for i in 0..n {
                        dt[i] /= radii[i];
                    }
                    next.push(dt);
                }
                comps = next;
            }
            let mut out = vec![0.0; n];
            for i in 0..n {
                let mut s = 0.0;
                for c in &comps {
                    s += c[i] * c[i];
                }
                out[i] = s.sqrt();
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn fd_matches_polynomials_exactly() {
        // Second-order stencils are exact on quadratics, including nonuniform
        // spacing and the one-sided ends.
        let ts: Vec<f64> = vec![0.0, 0.1, 0.25, 0.45, 0.7, 1.0, 1.35];
        let vals: Vec<f64> = ts.iter().map(|t| 2.0 - 3.0 * t + 1.5 * t * t).collect();
        let d1 = fd1_open(&ts, &vals);
        let d2 = fd2_open(&ts, &vals);
        for (i, &t) in ts.iter().enumerate() {
            assert_abs_diff_eq!(d1[i], -3.0 + 3.0 * t, epsilon = 1e-12);
            assert_abs_diff_eq!(d2[i], 3.0, epsilon = 1e-10);
        }
        // The four-point end formula is exact on cubics.
        let cubic: Vec<f64> = ts.iter().map(|t| t * t * t).collect();
        let d2c = fd2_open(&ts, &cubic);
        assert_abs_diff_eq!(d2c[0], 6.0 * ts[0], epsilon = 1e-10);
        assert_abs_diff_eq!(d2c[ts.len() - 1], 6.0 * ts[ts.len() - 1], epsilon = 1e-10);
    }

    #[test]
    fn periodic_fd_on_trig() {
        let n = 256;
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let vals: Vec<f64> = (0..n).map(|i| (3.0 * i as f64 * h).sin()).collect();
        let d1 = fd1_periodic(&vals, h);
        let d2 = fd2_periodic(&vals, h);
        for i in 0..n {
            let t = i as f64 * h;
            assert_abs_diff_eq!(d1[i], 3.0 * (3.0 * t).cos(), epsilon = 3e-3);
            assert_abs_diff_eq!(d2[i], -9.0 * (3.0 * t).sin(), epsilon = 5e-3);
        }
    }

    #[test]
    fn plane_polar_derivatives() {
        let grid = BaseGrid::plane_polar(0.1, 10.0, 64).unwrap();
        let (rs, nt) = match &grid {
            BaseGrid::PlanePolar { rs, n_theta } => (rs.clone(), *n_theta),
            _ => unreachable!(),
        };
        // u = r² cos θ: u_r = 2r cos θ, u_θ = −r² sin θ, u_rr = 2cos θ.
        let mut vals = vec![0.0; grid.len()];
        for (ir, &r) in rs.iter().enumerate() {
            for (it, &th) in grid.thetas().iter().enumerate() {
                vals[ir * nt + it] = r * r * th.cos();
            }
        }
        let d1 = param_d1(&grid, &vals);
        let d2 = param_d2(&grid, &vals);
        for (ir, &r) in rs.iter().enumerate().skip(1).take(rs.len() - 2) {
            for (it, &th) in grid.thetas().iter().enumerate() {
                let i = ir * nt + it;
                assert_abs_diff_eq!(d1[0][i], 2.0 * r * th.cos(), epsilon = 2e-2);
                assert_abs_diff_eq!(d1[1][i], -r * r * th.sin(), epsilon = 2e-2 * r * r);
                assert_abs_diff_eq!(d2[0][i], 2.0 * th.cos(), epsilon = 5e-2);
            }
        }
    }

    #[test]
    fn provided_derivs_win() {
        let grid = BaseGrid::line(0.05, 12.0).unwrap();
        let n = grid.len();
        let f = ScalarField::with_derivs(vec![1.0; n], vec![vec![7.0; n]], vec![vec![0.0; n]]);
        let d = f.d1(&grid).unwrap();
        assert!(d[0].iter().all(|&v| v == 7.0));
    }
}
