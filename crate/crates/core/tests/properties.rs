//! Randomized property tests for module invariants that hold for *all*
//! admissible inputs, not just the tuned oracles of the acceptance gate.

use proptest::prelude::*;
use shrinker_lab::fields::ScalarField;
use shrinker_lab::loja::theta_constant;
use shrinker_lab::operators::assemble_l;
use shrinker_lab::shrinkers::{canonical_shrinker, GridSpec, Shrinker, ShrinkerKind};
use shrinker_lab::weighted_spaces::{a_kn, b_kn, cone_decompose, inner_product_w, reconstruct};

fn line_base() -> Shrinker {
    canonical_shrinker(ShrinkerKind::Line, 1, &GridSpec::default()).unwrap()
}

fn line_xs(base: &Shrinker) -> Vec<f64> {
    match &base.surface.grid {
        shrinker_lab::BaseGrid::Line { xs } => xs.clone(),
        _ => unreachable!(),
    }
}

fn bump_field(xs: &[f64], a: f64, c: f64, s: f64) -> ScalarField {
    ScalarField::new(
        xs.iter()
            .map(|&x| a * (-(x - c) * (x - c) / (2.0 * s)).exp())
            .collect(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    /// The cone decomposition u = χ·c·r + f loses no information:
    /// reconstructing from (c, f) returns u node-for-node.
    #[test]
    fn cone_decomposition_roundtrips(
        a in -0.05f64..0.05,
        c in -2.0f64..2.0,
        s in 0.5f64..3.0,
        r in 2.0f64..5.9,
    ) {
        let base = line_base();
        let xs = line_xs(&base);
        let u = bump_field(&xs, a, c, s);
        let dec = cone_decompose(&base.surface, &u, r).unwrap();
        let back = reconstruct(&base.surface, &dec).unwrap();
        for (got, want) in back.values.iter().zip(&u.values) {
            prop_assert!((got - want).abs() <= 1e-12);
        }
    }

    /// Θ(θ) = ((1−θ/2)/(1−θ))^{1/4} is ≥ 1 and strictly increasing on (0, ½].
    #[test]
    fn theta_constant_monotone(theta in 0.01f64..0.49) {
        let t0 = theta_constant(theta).unwrap();
        let t1 = theta_constant(theta + 0.01).unwrap();
        prop_assert!(t0 >= 1.0);
        prop_assert!(t1 > t0);
        prop_assert!(t1 <= theta_constant(0.5).unwrap());
    }

    /// ⟨·,·⟩_W is symmetric and satisfies the Cauchy–Schwarz inequality.
    #[test]
    fn weighted_inner_product_is_an_inner_product(
        a1 in -1.0f64..1.0, c1 in -2.0f64..2.0, s1 in 0.5f64..3.0,
        a2 in -1.0f64..1.0, c2 in -2.0f64..2.0, s2 in 0.5f64..3.0,
    ) {
        let base = line_base();
        let xs = line_xs(&base);
        let u = bump_field(&xs, a1, c1, s1);
        let v = bump_field(&xs, a2, c2, s2);
        let uv = inner_product_w(&base.surface, &u.values, &v.values).unwrap();
        let vu = inner_product_w(&base.surface, &v.values, &u.values).unwrap();
        let uu = inner_product_w(&base.surface, &u.values, &u.values).unwrap();
        let vv = inner_product_w(&base.surface, &v.values, &v.values).unwrap();
        prop_assert!((uv - vu).abs() <= 1e-15 * (1.0 + uv.abs()));
        prop_assert!(uu >= 0.0 && vv >= 0.0);
        prop_assert!(uv * uv <= uu * vv * (1.0 + 1e-12));
    }

    /// The flux-form Dirichlet energy on the plane stays nonnegative even
    /// though the wide angular stencil carries negative edge conductances
    /// (the angular symbol 4s²(1 + s²/3) is positive).
    #[test]
    fn plane_dirichlet_energy_nonnegative(
        a in -1.0f64..1.0, cx in -3.0f64..3.0, cy in -3.0f64..3.0, s in 0.5f64..4.0,
    ) {
        let plane = canonical_shrinker(
            ShrinkerKind::Plane,
            2,
            &GridSpec { h: 0.5, r_max: 10.0, n_theta: 12 },
        )
        .unwrap();
        let pos = shrinker_lab::geometry::embedded_positions(&plane.surface).unwrap();
        let u: Vec<f64> = pos
            .iter()
            .map(|p| {
                let d = (p[0] - cx) * (p[0] - cx) + (p[1] - cy) * (p[1] - cy);
                a * (-d / (2.0 * s)).exp()
            })
            .collect();
        let op = assemble_l(&plane, 0.5, None).unwrap();
        let energy = op.dirichlet_energy(&u);
        prop_assert!(energy >= -1e-14 * (1.0 + energy.abs()));
    }

    /// Interpolation exponents: a_{k,n} = k/(k+n) ∈ (0, 1), increasing in k,
    /// with b_{k,n} = a_{k,n} − 1/(k+n) one derivative below.
    #[test]
    fn interpolation_exponents(k in 1usize..8, n in 1usize..3) {
        let a = a_kn(k, n);
        let b = b_kn(k, n);
        prop_assert!(a > 0.0 && a < 1.0);
        prop_assert!((a - b - 1.0 / (k + n) as f64).abs() <= 1e-15);
        prop_assert!(a_kn(k + 1, n) > a);
    }
}
