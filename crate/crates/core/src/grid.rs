//! Discrete base grids and hypersurface representations.
//!
//! Four grid kinds cover every surface the laboratory manipulates:
//! uniform samples of a line, a periodic circle, a tensor polar grid for
//! graphs over the plane, and sampled profile curves (closed curves in ℝ²
//! or meridians revolved about the z-axis).

use crate::error::{LabError, Result};
use serde::{Deserialize, Serialize};

/// A discrete base grid. Node coordinates are dimensionless Euclidean units.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum BaseGrid {
    /// Uniform samples of the line {y = 0} ⊂ ℝ² on [−r_max, r_max] (n = 1).
    Line { xs: Vec<f64> },
    /// Circle of the given radius in ℝ², uniform angular step, periodic (n = 1).
    Circle { radius: f64, n_theta: usize },
    /// Tensor polar grid (r_i, θ_j) for graphs over {z = 0} ⊂ ℝ³ (n = 2).
    /// Radial nodes may be graded; angular nodes are uniform and periodic.
    PlanePolar { rs: Vec<f64>, n_theta: usize },
    /// Sampled profile curve in the (x, z) half-plane. `dim = 1`: a closed
    /// curve in ℝ² (Abresch–Langer type). `dim = 2`: a meridian revolved
    /// about the z-axis (surface of revolution).
    Profile {
        points: Vec<[f64; 2]>,
        closed: bool,
        dim: usize,
    },
}

impl BaseGrid {
    /// Uniform line grid on [−r_max, r_max] with spacing ≈ h (snapped so the
    /// node set is symmetric about 0 and contains 0).
    pub fn line(h: f64, r_max: f64) -> Result<Self> {
        if h <= 0.0 || r_max < 10.0 {
            return Err(LabError::InvalidGrid(format!(
                "line grid needs h > 0 and r_max >= 10 (got h={h}, r_max={r_max})"
            )));
        }
        let half = (r_max / h).round() as i64;
        let h = r_max / half as f64;
        let xs = (-half..=half).map(|i| i as f64 * h).collect();
        Ok(BaseGrid::Line { xs })
    }

    /// Periodic circle grid.
    pub fn circle(radius: f64, n_theta: usize) -> Result<Self> {
        if radius <= 0.0 || n_theta < 8 {
            return Err(LabError::InvalidGrid(format!(
                "circle grid needs radius > 0 and n_theta >= 8 (got {radius}, {n_theta})"
            )));
        }
        Ok(BaseGrid::Circle { radius, n_theta })
    }

    /// Polar grid for the plane: geometric grading from r_min = 0.05 up to 1,
    /// then uniform spacing h_r out to r_max.
    pub fn plane_polar(h_r: f64, r_max: f64, n_theta: usize) -> Result<Self> {
        if h_r <= 0.0 || r_max < 10.0 || n_theta < 8 {
            return Err(LabError::InvalidGrid(format!(
                "plane grid needs h_r > 0, r_max >= 10, n_theta >= 8 (got {h_r}, {r_max}, {n_theta})"
            )));
        }
        let mut rs: Vec<f64> = vec![0.05];
        // Geometric grading on the inner disk.  The ratio tightens with h_r so
        // that trapezoid error on the graded rings refines along with the
        // uniform region instead of staying fixed.
        let ratio = (1.0 + 4.0 * h_r).min(1.25);
        while *rs.last().unwrap() < 1.0 {
            let r = *rs.last().unwrap();
            let step = (r * ratio).max(r + 0.25 * h_r);
            rs.push(step.min(1.0));
        }
        let n_out = ((r_max - 1.0) / h_r).round().max(1.0) as usize;
        let h = (r_max - 1.0) / n_out as f64;
        for i in 1..=n_out {
            rs.push(1.0 + i as f64 * h);
        }
        Ok(BaseGrid::PlanePolar { rs, n_theta })
    }

    pub fn profile(points: Vec<[f64; 2]>, closed: bool, dim: usize) -> Result<Self> {
        if points.len() < 8 {
            return Err(LabError::InvalidGrid("profile needs >= 8 points".into()));
        }
        if dim != 1 && dim != 2 {
            return Err(LabError::InvalidGrid("profile dim must be 1 or 2".into()));
        }
        for w in points.windows(2) {
            let d = ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt();
            if d == 0.0 {
                return Err(LabError::InvalidGrid("repeated profile nodes".into()));
            }
        }
        Ok(BaseGrid::Profile { points, closed, dim })
    }

    /// Intrinsic dimension n of the surface.
    pub fn n(&self) -> usize {
        match self {
            BaseGrid::Line { .. } | BaseGrid::Circle { .. } => 1,
            BaseGrid::PlanePolar { .. } => 2,
            BaseGrid::Profile { dim, .. } => *dim,
        }
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        match self {
            BaseGrid::Line { xs } => xs.len(),
            BaseGrid::Circle { n_theta, .. } => *n_theta,
            BaseGrid::PlanePolar { rs, n_theta } => rs.len() * n_theta,
            BaseGrid::Profile { points, .. } => points.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flattened index for the polar grid: radial index major, angular minor.
    pub fn polar_index(&self, ir: usize, it: usize) -> usize {
        match self {
            BaseGrid::PlanePolar { n_theta, .. } => ir * n_theta + it,
            _ => panic!("polar_index on non-polar grid"),
        }
    }

    /// Angular samples for circle / polar grids.
    pub fn thetas(&self) -> Vec<f64> {
        let n = match self {
            BaseGrid::Circle { n_theta, .. } => *n_theta,
            BaseGrid::PlanePolar { n_theta, .. } => *n_theta,
            _ => return Vec::new(),
        };
        (0..n)
            .map(|i| 2.0 * std::f64::consts::PI * i as f64 / n as f64)
            .collect()
    }

    /// Truncation radius of the grid.
    pub fn r_max(&self) -> f64 {
        match self {
            BaseGrid::Line { xs } => xs.last().copied().unwrap_or(0.0).abs(),
            BaseGrid::Circle { radius, .. } => *radius,
            BaseGrid::PlanePolar { rs, .. } => rs.last().copied().unwrap_or(0.0),
            BaseGrid::Profile { points, .. } => points
                .iter()
                .map(|p| (p[0] * p[0] + p[1] * p[1]).sqrt())
                .fold(0.0, f64::max),
        }
    }

    /// Representative grid spacing (used in convergence reporting).
    pub fn spacing(&self) -> f64 {
        match self {
            BaseGrid::Line { xs } => {
                if xs.len() < 2 {
                    0.0
                } else {
                    xs[1] - xs[0]
                }
            }
            BaseGrid::Circle { radius, n_theta } => {
                2.0 * std::f64::consts::PI * radius / *n_theta as f64
            }
            BaseGrid::PlanePolar { rs, n_theta } => {
                let hr = rs
                    .windows(2)
                    .map(|w| w[1] - w[0])
                    .fold(0.0f64, f64::max);
                let ht = 2.0 * std::f64::consts::PI * rs.last().unwrap() / *n_theta as f64;
                hr.max(ht)
            }
            BaseGrid::Profile { points, closed, .. } => {
                let mut m = 0.0f64;
                let k = points.len();
                let last = if *closed { k } else { k - 1 };
                for i in 0..last {
                    let a = points[i];
                    let b = points[(i + 1) % k];
                    m = m.max(((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt());
                }
                m
            }
        }
    }

    /// Radial coordinate |x| of each base node (before any height is applied).
    pub fn base_radii(&self) -> Vec<f64> {
        match self {
            BaseGrid::Line { xs } => xs.iter().map(|x| x.abs()).collect(),
            BaseGrid::Circle { radius, n_theta } => vec![*radius; *n_theta],
            BaseGrid::PlanePolar { rs, n_theta } => {
                let mut out = Vec::with_capacity(rs.len() * n_theta);
                for &r in rs {
                    for _ in 0..*n_theta {
                        out.push(r);
                    }
                }
                out
            }
            BaseGrid::Profile { points, .. } => points
                .iter()
                .map(|p| (p[0] * p[0] + p[1] * p[1]).sqrt())
                .collect(),
        }
    }

    /// r̃ = max(1, r) per node.
    pub fn r_tilde(&self) -> Vec<f64> {
        self.base_radii().into_iter().map(|r| r.max(1.0)).collect()
    }

    /// Halve the grid spacing (refinement used in convergence tests).
    pub fn refine(&self) -> Result<BaseGrid> {
        match self {
            BaseGrid::Line { xs } => {
                let h = (xs[1] - xs[0]) / 2.0;
                BaseGrid::line(h, self.r_max())
            }
            BaseGrid::Circle { radius, n_theta } => BaseGrid::circle(*radius, n_theta * 2),
            BaseGrid::PlanePolar { rs, n_theta } => {
                let mut out = Vec::with_capacity(rs.len() * 2);
                for w in rs.windows(2) {
                    out.push(w[0]);
                    out.push(0.5 * (w[0] + w[1]));
                }
                out.push(*rs.last().unwrap());
                Ok(BaseGrid::PlanePolar {
                    rs: out,
                    n_theta: n_theta * 2,
                })
            }
            BaseGrid::Profile { .. } => Err(LabError::InvalidArgument(
                "profile grids are refined by reconstructing the profile".into(),
            )),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            BaseGrid::Line { .. } => "line",
            BaseGrid::Circle { .. } => "circle",
            BaseGrid::PlanePolar { .. } => "plane-polar",
            BaseGrid::Profile { .. } => "profile-of-revolution",
        }
    }
}

/// A hypersurface: a base grid plus an optional height field that turns it
/// into a normal graph over the base.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Hypersurface {
    pub grid: BaseGrid,
    pub height: Option<Vec<f64>>,
}

impl Hypersurface {
    pub fn bare(grid: BaseGrid) -> Self {
        Hypersurface { grid, height: None }
    }

    pub fn with_height(grid: BaseGrid, height: Vec<f64>) -> Result<Self> {
        if height.len() != grid.len() {
            return Err(LabError::InvalidArgument(format!(
                "height length {} does not match grid size {}",
                height.len(),
                grid.len()
            )));
        }
        Ok(Hypersurface {
            grid,
            height: Some(height),
        })
    }

    pub fn height_or_zero(&self) -> Vec<f64> {
        self.height
            .clone()
            .unwrap_or_else(|| vec![0.0; self.grid.len()])
    }

    /// Columnar text serialization: one header line, then one node per row
    /// (coordinates, then optional height).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let g = &self.grid;
        out.push_str(&format!(
            "# surface kind={} n={} h={:.17e} r_max={:.17e}\n",
            g.kind_name(),
            g.n(),
            g.spacing(),
            g.r_max()
        ));
        let h = self.height_or_zero();
        match g {
            BaseGrid::Line { xs } => {
                for (i, &x) in xs.iter().enumerate() {
                    out.push_str(&format!("{:.17e} {:.17e}\n", x, h[i]));
                }
            }
            BaseGrid::Circle { radius, .. } => {
                for (i, th) in g.thetas().iter().enumerate() {
                    out.push_str(&format!("{:.17e} {:.17e} {:.17e}\n", radius, th, h[i]));
                }
            }
            BaseGrid::PlanePolar { rs, n_theta } => {
                let thetas = g.thetas();
                for (ir, &r) in rs.iter().enumerate() {
                    for (it, &th) in thetas.iter().enumerate() {
                        out.push_str(&format!(
                            "{:.17e} {:.17e} {:.17e}\n",
                            r,
                            th,
                            h[ir * n_theta + it]
                        ));
                    }
                }
            }
            BaseGrid::Profile { points, .. } => {
                for (i, p) in points.iter().enumerate() {
                    out.push_str(&format!("{:.17e} {:.17e} {:.17e}\n", p[0], p[1], h[i]));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_grid_symmetric_and_contains_zero() {
        let g = BaseGrid::line(0.05, 12.0).unwrap();
        if let BaseGrid::Line { xs } = &g {
            assert_eq!(xs.len() % 2, 1);
            assert!(xs.iter().any(|&x| x == 0.0));
            assert_eq!(xs[0], -12.0);
            assert_eq!(*xs.last().unwrap(), 12.0);
        } else {
            panic!()
        }
        assert_eq!(g.n(), 1);
    }

    #[test]
    fn refine_halves_spacing() {
        let g = BaseGrid::line(0.1, 12.0).unwrap();
        let f = g.refine().unwrap();
        assert!((f.spacing() - g.spacing() / 2.0).abs() < 1e-12);
        let c = BaseGrid::circle(2.0f64.sqrt(), 128).unwrap();
        assert_eq!(c.refine().unwrap().len(), 256);
    }

    #[test]
    fn plane_polar_shape() {
        let g = BaseGrid::plane_polar(0.25, 12.0, 48).unwrap();
        if let BaseGrid::PlanePolar { rs, n_theta } = &g {
            assert!(rs[0] == 0.05);
            assert!((rs.last().unwrap() - 12.0).abs() < 1e-12);
            assert!(rs.windows(2).all(|w| w[1] > w[0]));
            assert_eq!(*n_theta, 48);
        } else {
            panic!()
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(BaseGrid::line(0.05, 5.0).is_err());
        assert!(BaseGrid::circle(-1.0, 64).is_err());
        assert!(BaseGrid::profile(vec![[0.0, 0.0]; 3], true, 1).is_err());
    }
}
