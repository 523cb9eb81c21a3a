//! Small numeric helpers shared across modules: smooth steps, least-squares
//! fits, and vector arithmetic on embedded points.

/// Quintic smooth step: 0 for t ≤ 0, 1 for t ≥ 1, C² at both ends
/// (first and second derivatives vanish at t = 0 and t = 1).
pub fn smoothstep5(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

/// Cutoff χ for the cone decomposition: 0 for r ≤ R, 1 for r ≥ 2R,
/// quintic in between. Supported on [R, ∞).
pub fn chi_cutoff(r: f64, big_r: f64) -> f64 {
    smoothstep5((r - big_r) / big_r)
}

/// Cutoff ζ for the conical extension blend: 1 for t ≤ 0, 0 for t ≥ 1,
/// with ζ'(0) = ζ''(0) = 0 so multiplying by ζ(r − R̃) preserves the C²
/// match of the blend at r = R̃.
pub fn zeta_cutoff(t: f64) -> f64 {
    1.0 - smoothstep5(t)
}

/// Ordinary least-squares line y = a + b·x. Returns (a, b, rms residual).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    assert!(n >= 2.0, "linear_fit needs at least two samples");
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let b = sxy / sxx;
    let a = my - b * mx;
    let mut ss = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let r = y - (a + b * x);
        ss += r * r;
    }
    (a, b, (ss / n).sqrt())
}

/// Total-least-squares (orthogonal regression) line in the (x, y) plane.
/// Returns (intercept, slope, rms orthogonal residual).
pub fn total_least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    assert!(n >= 2.0);
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    // Slope from the principal axis of the scatter covariance.
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let b = theta.tan();
    let a = my - b * mx;
    let norm = (1.0 + b * b).sqrt();
    let mut ss = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let d = (y - (a + b * x)) / norm;
        ss += d * d;
    }
    (a, b, (ss / n).sqrt())
}

pub fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm2(a: [f64; 2]) -> f64 {
    dot2(a, a).sqrt()
}

pub fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

pub fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
