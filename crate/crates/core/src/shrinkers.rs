//! Construction of self-shrinkers: the canonical round examples, numerically
//! shot closed profile curves (Abresch–Langer type), and asymptotic-cone
//! extraction for the non-compact ones.

use crate::error::{LabError, Result};
use crate::geometry::{geometry_bundle, phi_residual, GeometryBundle};
use crate::grid::{BaseGrid, Hypersurface};
use crate::util::linear_fit;
use serde::{Deserialize, Serialize};

/// Which canonical shrinker a `Shrinker` represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShrinkerKind {
    Line,
    Plane,
    Circle,
    Sphere,
    Cylinder,
    Numeric,
}

/// A certified self-shrinker: base surface, precomputed geometry, residual
/// certificate, core radius, and sampled asymptotic-cone link.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Shrinker {
    pub kind: ShrinkerKind,
    pub surface: Hypersurface,
    pub bundle: GeometryBundle,
    /// Residual certificate max|φ| over the grid.
    pub max_phi: f64,
    /// Radius outside which the end is graphical over the asymptotic cone
    /// (r_max for compact shrinkers, which have no end).
    pub core_radius: f64,
    /// Unit directions sampling the asymptotic-cone link Γ (empty when the
    /// shrinker is compact or not conical).
    pub link: Vec<[f64; 3]>,
}

impl Shrinker {
    /// Build and certify a shrinker from a surface: computes the geometry
    /// bundle and the residual certificate max|φ|.
    pub fn new(
        kind: ShrinkerKind,
        surface: Hypersurface,
        core_radius: f64,
        link: Vec<[f64; 3]>,
    ) -> Result<Shrinker> {
        Shrinker::certify(kind, surface, core_radius, link)
    }

    fn certify(
        kind: ShrinkerKind,
        surface: Hypersurface,
        core_radius: f64,
        link: Vec<[f64; 3]>,
    ) -> Result<Shrinker> {
        let bundle = geometry_bundle(&surface)?;
        let phi = phi_residual(&surface)?;
        let max_phi = phi.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        for l in &link {
            let n = (l[0] * l[0] + l[1] * l[1] + l[2] * l[2]).sqrt();
            if (n - 1.0).abs() > 1e-12 {
                return Err(LabError::InvalidArgument("link sample not unit".into()));
            }
        }
        Ok(Shrinker {
            kind,
            surface,
            bundle,
            max_phi,
            core_radius,
            link,
        })
    }

    pub fn is_compact(&self) -> bool {
        matches!(self.kind, ShrinkerKind::Circle | ShrinkerKind::Sphere)
            || (self.kind == ShrinkerKind::Numeric
                && matches!(&self.surface.grid, BaseGrid::Profile { closed: true, .. }))
    }
}

/// Grid resolution for canonical shrinkers.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridSpec {
    /// Target spacing (arclength for curves/profiles, radial step for the
    /// plane).
    pub h: f64,
    pub r_max: f64,
    /// Angular sectors for the plane grid.
    pub n_theta: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            h: 0.05,
            r_max: 12.0,
            n_theta: 48,
        }
    }
}

/// Construct an exact round shrinker on a grid of the requested resolution.
pub fn canonical_shrinker(kind: ShrinkerKind, n: usize, spec: &GridSpec) -> Result<Shrinker> {
    match (kind, n) {
        (ShrinkerKind::Line, 1) => {
            let grid = BaseGrid::line(spec.h, spec.r_max)?;
            Shrinker::certify(
                kind,
                Hypersurface::bare(grid),
                1.0,
                vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]],
            )
        }
        (ShrinkerKind::Plane, 2) => {
            let grid = BaseGrid::plane_polar(spec.h, spec.r_max, spec.n_theta)?;
            let link = grid
                .thetas()
                .iter()
                .map(|&t| [t.cos(), t.sin(), 0.0])
                .collect();
            Shrinker::certify(kind, Hypersurface::bare(grid), 1.0, link)
        }
        (ShrinkerKind::Circle, 1) => {
            let r = 2.0f64.sqrt();
            let n_theta = (2.0 * std::f64::consts::PI * r / spec.h).round() as usize;
            let grid = BaseGrid::circle(r, n_theta.max(64))?;
            Shrinker::certify(kind, Hypersurface::bare(grid), spec.r_max, Vec::new())
        }
        (ShrinkerKind::Sphere, 2) => {
            let r = 2.0;
            let grid = sphere_profile_grid(r, spec.h)?;
            Shrinker::certify(kind, Hypersurface::bare(grid), spec.r_max, Vec::new())
        }
        (ShrinkerKind::Cylinder, 2) => {
            // S¹_{√2} × ℝ, reduced by symmetry to the vertical profile line
            // x = √2 revolved about the z-axis.
            let r = 2.0f64.sqrt();
            let z_max = (spec.r_max * spec.r_max - r * r).max(1.0).sqrt();
            let m = (2.0 * z_max / spec.h).round() as usize;
            let points = (0..=m)
                .map(|i| [r, -z_max + 2.0 * z_max * i as f64 / m as f64])
                .collect();
            let grid = BaseGrid::profile(points, false, 2)?;
            Shrinker::certify(kind, Hypersurface::bare(grid), spec.r_max, Vec::new())
        }
        _ => Err(LabError::InvalidArgument(format!(
            "unsupported canonical shrinker ({kind:?}, n={n})"
        ))),
    }
}

/// Sphere meridian sampled with a half-step offset so no node sits on the
/// rotation axis (keeps the rotational principal curvature regular).
fn sphere_profile_grid(radius: f64, h: f64) -> Result<BaseGrid> {
    let m = (std::f64::consts::PI * radius / h).round() as usize;
    let da = std::f64::consts::PI / m as f64;
    let points = (0..m)
        .map(|i| {
            let a = (i as f64 + 0.5) * da;
            [radius * a.sin(), radius * a.cos()]
        })
        .collect();
    BaseGrid::profile(points, false, 2)
}

/// Closure target for profile shooting.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub enum ClosureTarget {
    /// Close after total turning 2π (round circle fixed point).
    Round,
    /// Abresch–Langer closure: rotation number p over q petals; the
    /// half-petal polar angle must equal π·p/q.
    Petals { p: usize, q: usize },
}

/// Shooting configuration for the profile shrinker ODE.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShootingSpec {
    pub target: ClosureTarget,
    /// Bracket on the seed r₀ (starting radius at the vertical-tangent
    /// point).
    pub bracket: (f64, f64),
    /// Fixed arclength step of the 4th-order integrator.
    pub ds: f64,
    pub closure_tol: f64,
    /// Approximate node count of the resampled output grid.
    pub resample: usize,
}

impl Default for ShootingSpec {
    fn default() -> Self {
        ShootingSpec {
            target: ClosureTarget::Round,
            bracket: (1.2, 1.6),
            ds: 1e-4,
            closure_tol: 1e-8,
            resample: 16384,
        }
    }
}

/// JSON record emitted for every shooting run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShootingRecord {
    pub seed: f64,
    pub defect: f64,
    pub iterations: usize,
    pub max_phi: f64,
}

#[derive(Clone, Copy)]
struct OdeState {
    x: f64,
    y: f64,
    phi: f64,
}

/// Shrinker curve ODE in arclength: tangent (cos φ, sin φ), outward normal
/// (sin φ, −cos φ), curvature φ' = ½⟨x, ν⟩ = ½(x sin φ − y cos φ).
fn ode_rhs(s: OdeState) -> [f64; 3] {
    [
        s.phi.cos(),
        s.phi.sin(),
        0.5 * (s.x * s.phi.sin() - s.y * s.phi.cos()),
    ]
}

fn rk4_step(s: OdeState, h: f64) -> OdeState {
    let k1 = ode_rhs(s);
    let mid = |k: &[f64; 3], f: f64| OdeState {
        x: s.x + f * h * k[0],
        y: s.y + f * h * k[1],
        phi: s.phi + f * h * k[2],
    };
    let k2 = ode_rhs(mid(&k1, 0.5));
    let k3 = ode_rhs(mid(&k2, 0.5));
    let k4 = ode_rhs(mid(&k3, 1.0));
    OdeState {
        x: s.x + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y: s.y + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        phi: s.phi + h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    }
}

/// Signed closure defect for a seed r₀.
fn closure_defect(r0: f64, target: ClosureTarget, ds: f64) -> Result<f64> {
    let mut s = OdeState {
        x: r0,
        y: 0.0,
        phi: std::f64::consts::FRAC_PI_2,
    };
    match target {
        ClosureTarget::Round => {
            // Integrate until total turning reaches 2π; defect = y_end.
            let phi_target = std::f64::consts::FRAC_PI_2 + 2.0 * std::f64::consts::PI;
            let mut steps = 0usize;
            while s.phi < phi_target {
                s = rk4_step(s, ds);
                steps += 1;
                if steps > 80_000_000 || s.x.abs() + s.y.abs() > 1e3 {
                    return Err(LabError::IntegrationFailure(
                        "round closure integration diverged".into(),
                    ));
                }
            }
            // Linear backtrack in φ to hit the target turning exactly.
            let k = ode_rhs(s)[2];
            let over = s.phi - phi_target;
            Ok(s.y - over / k * s.phi.sin())
        }
        ClosureTarget::Petals { p, q } => {
            // Integrate to the next radial extremum ⟨x, T⟩ = 0 and compare
            // the swept polar angle with π p/q.
            let mut alpha = 0.0; // unwrapped polar angle from the start
            let mut prev = s;
            let mut prev_f = 0.0;
            let mut moved = false;
            let mut steps = 0usize;
            loop {
                let next = rk4_step(prev, ds);
                steps += 1;
                if steps > 40_000_000 || next.x.abs() + next.y.abs() > 1e3 {
                    return Err(LabError::IntegrationFailure(
                        "petal integration diverged".into(),
                    ));
                }
                let da = polar_increment(prev, next);
                alpha += da;
                let f = next.x * next.phi.cos() + next.y * next.phi.sin();
                if moved && prev_f > 0.0 && f <= 0.0 {
                    // Bisect the step for the event location.
                    let (frac, ev) = bisect_event(prev, ds, prev_f);
                    let da_ev = polar_increment(prev, ev);
                    let alpha_ev = alpha - da + da_ev;
                    let _ = frac;
                    return Ok(alpha_ev - std::f64::consts::PI * p as f64 / q as f64);
                }
                if f > 0.0 {
                    moved = true;
                }
                prev_f = f;
                prev = next;
            }
        }
    }
}

fn polar_increment(a: OdeState, b: OdeState) -> f64 {
    let a0 = a.y.atan2(a.x);
    let b0 = b.y.atan2(b.x);
    let mut d = b0 - a0;
    while d > std::f64::consts::PI {
        d -= 2.0 * std::f64::consts::PI;
    }
    while d < -std::f64::consts::PI {
        d += 2.0 * std::f64::consts::PI;
    }
    d
}

fn bisect_event(from: OdeState, ds: f64, _f_from: f64) -> (f64, OdeState) {
    let mut lo = 0.0f64;
    let mut hi = ds;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let s = rk4_step(from, mid);
        let f = s.x * s.phi.cos() + s.y * s.phi.sin();
        if f > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = rk4_step(from, 0.5 * (lo + hi));
    (0.5 * (lo + hi) / ds, s)
}

/// Shoot for a closed profile shrinker by bisection on the seed radius.
pub fn solve_profile_shrinker(spec: &ShootingSpec) -> Result<(Shrinker, ShootingRecord)> {
    let (mut lo, mut hi) = spec.bracket;
    if lo >= hi {
        return Err(LabError::InvalidArgument("empty shooting bracket".into()));
    }
    let f_lo = closure_defect(lo, spec.target, spec.ds)?;
    let f_hi = closure_defect(hi, spec.target, spec.ds)?;
    if f_lo == 0.0 {
        hi = lo;
    } else if f_hi == 0.0 {
        lo = hi;
    } else if f_lo.signum() == f_hi.signum() {
        return Err(LabError::NoRoot(format!(
            "closure defect has no sign change on [{lo}, {hi}] ({f_lo:.3e}, {f_hi:.3e})"
        )));
    }
    let mut iterations = 0usize;
    let mut defect;
    loop {
        let mid = 0.5 * (lo + hi);
        defect = closure_defect(mid, spec.target, spec.ds)?;
        iterations += 1;
        if defect.abs() < spec.closure_tol || (hi - lo) < 1e-14 || iterations >= 80 {
            lo = mid;
            break;
        }
        if defect.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let seed = lo;
    let (surface, closure_gap) = integrate_closed_curve(seed, spec)?;
    let core = surface.grid.r_max();
    let shr = Shrinker::certify(ShrinkerKind::Numeric, surface, core, Vec::new())?;
    let record = ShootingRecord {
        seed,
        defect: defect.abs().max(closure_gap),
        iterations,
        max_phi: shr.max_phi,
    };
    Ok((shr, record))
}

/// Integrate the full closed curve at the converged seed and resample it.
fn integrate_closed_curve(r0: f64, spec: &ShootingSpec) -> Result<(Hypersurface, f64)> {
    let windings = match spec.target {
        ClosureTarget::Round => 1.0,
        ClosureTarget::Petals { p, .. } => p as f64,
    };
    let mut s = OdeState {
        x: r0,
        y: 0.0,
        phi: std::f64::consts::FRAC_PI_2,
    };
    let mut alpha = 0.0;
    let mut pts: Vec<[f64; 2]> = vec![[s.x, s.y]];
    let target = 2.0 * std::f64::consts::PI * windings;
    let mut steps = 0usize;
    loop {
        let next = rk4_step(s, spec.ds);
        let da = polar_increment(s, next);
        if alpha + da >= target {
            // Bisect the final step length so the sweep lands on the target
            // polar angle, instead of overshooting by up to one step.
            let mut lo = 0.0f64;
            let mut hi = spec.ds;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let t = rk4_step(s, mid);
                if alpha + polar_increment(s, t) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            s = rk4_step(s, 0.5 * (lo + hi));
            break;
        }
        alpha += da;
        s = next;
        steps += 1;
        if steps > 80_000_000 {
            return Err(LabError::IntegrationFailure("closed curve too long".into()));
        }
        pts.push([s.x, s.y]);
    }
    let closure_gap = ((s.x - r0).powi(2) + s.y.powi(2)).sqrt();
    // Uniform subsample down to the requested node count.
    let stride = (pts.len() / spec.resample).max(1);
    let sampled: Vec<[f64; 2]> = pts.iter().step_by(stride).copied().collect();
    let grid = BaseGrid::profile(sampled, true, 1)?;
    Ok((Hypersurface::bare(grid), closure_gap))
}

/// Asymptotic-cone extraction report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConeReport {
    pub link: Vec<[f64; 3]>,
    /// Least-squares slope of log|w| vs log r (None when w vanishes
    /// identically to round-off).
    pub decay_slope: Option<f64>,
    pub w_samples: Vec<(f64, f64)>,
}

/// Extract the asymptotic cone of a non-compact shrinker (or graph over one)
/// and measure the decay rate of the height w over the cone.
pub fn asymptotic_cone(sigma: &Shrinker, radii: &[f64]) -> Result<ConeReport> {
    if sigma.is_compact() {
        return Err(LabError::NotConical("compact shrinker has no cone".into()));
    }
    let heights = sigma.surface.height_or_zero();
    let base_r = sigma.surface.grid.base_radii();
    let mut w_samples = Vec::new();
    for &r in radii {
        // Max height magnitude over nodes within half a spacing of radius r.
        let tol = (0.5 * sigma.surface.grid.spacing()).max(1e-6);
        let mut m: f64 = 0.0;
        let mut found = false;
        for (rb, h) in base_r.iter().zip(&heights) {
            if (rb - r).abs() <= tol {
                m = m.max(h.abs());
                found = true;
            }
        }
        if found {
            w_samples.push((r, m));
        }
    }
    let sig: Vec<(f64, f64)> = w_samples
        .iter()
        .copied()
        .filter(|&(_, w)| w > 1e-13)
        .collect();
    let decay_slope = if sig.len() >= 3 {
        let xs: Vec<f64> = sig.iter().map(|&(r, _)| r.ln()).collect();
        let ys: Vec<f64> = sig.iter().map(|&(_, w)| w.ln()).collect();
        Some(linear_fit(&xs, &ys).1)
    } else {
        None
    };
    Ok(ConeReport {
        link: sigma.link.clone(),
        decay_slope,
        w_samples,
    })
}
