use std::sync::Arc;

use proptest::prelude::*;
use specgap_core::bloch::{mckean_singer, sample_complex, spectral_density, vn_heat_trace, DensityKind, SampleOptions};
use specgap_core::complex::PeriodicComplex;
use specgap_core::hyperbolic::{
    product_theta, theta_hyperbolic, ClosedFormModel, ClosedFormTheta, HyperbolicModel, Term,
};
use specgap_core::spectral::{estimate_beta, laplace_of_density, power_law_density, ThetaFunction, DEFAULT_WINDOW};
use specgap_core::zeta::{determinant, HeatExpansion};

fn skew_basis(g: usize, a: f64, b: f64) -> Vec<Vec<f64>> {
    match g {
        1 => vec![vec![1.0 + a]],
        _ => vec![vec![1.0 + a, 0.0], vec![b, 0.8 + a]],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn euler_characteristic_of_heat_traces(g in 1usize..=2, n in 1usize..=3, a in 0.0f64..0.5, b in -0.4f64..0.4, t in 0.05f64..20.0) {
        let c = PeriodicComplex::build_torus(g, n, &skew_basis(g, a, b)).unwrap();
        let s = sample_complex(&c, &SampleOptions { resolution: 5, ..Default::default() }).unwrap();
        prop_assert!(mckean_singer(&s, t).abs() < 1e-9);
    }

    #[test]
    fn heat_traces_decrease_and_densities_grow(n in 2usize..=6, t in 0.01f64..5.0, dt in 0.01f64..5.0, l in 0.0f64..200.0, dl in 0.0f64..50.0) {
        let c = PeriodicComplex::build_torus(1, n, &[vec![1.0]]).unwrap();
        let s = sample_complex(&c, &SampleOptions { resolution: 16, primitive: true, ..Default::default() }).unwrap();
        for j in 0..=1 {
            prop_assert!(vn_heat_trace(&s, j, t + dt) <= vn_heat_trace(&s, j, t) + 1e-15);
            let lo = spectral_density(&s, j, l, DensityKind::Full, None).unwrap();
            let hi = spectral_density(&s, j, l + dl, DensityKind::Full, None).unwrap();
            prop_assert!(lo <= hi);
        }
    }

    #[test]
    fn subdivision_keeps_shape(a in 0.0f64..0.5, b in -0.4f64..0.4) {
        let c = PeriodicComplex::build_torus(2, 2, &skew_basis(2, a, b)).unwrap();
        let f = c.subdivide().unwrap();
        let (s0, s1) = (c.mesh_stats(), f.mesh_stats());
        prop_assert!((s1.mesh - s0.mesh / 2.0).abs() < 1e-12);
        prop_assert!((s1.fullness_min - s0.fullness_min).abs() < 1e-12);
        prop_assert!((f.volume() - c.volume()).abs() < 1e-12);
    }

    #[test]
    fn hyperbolic_thetas_scale_with_volume_and_are_dual(idx in 0usize..3, vol in 0.1f64..10.0, t in 0.05f64..50.0) {
        let d = [3, 5, 7][idx];
        let one = HyperbolicModel::new(d, 1.0).unwrap();
        let scaled = HyperbolicModel::new(d, vol).unwrap();
        for j in 0..=d {
            let a = theta_hyperbolic(&one, j).unwrap().eval(t);
            let b = theta_hyperbolic(&scaled, j).unwrap().eval(t);
            prop_assert!((b - vol * a).abs() <= 1e-12 * b.abs().max(1e-300));
            let dual = theta_hyperbolic(&one, d - j).unwrap().eval(t);
            prop_assert!((a - dual).abs() <= 1e-12 * a.abs());
        }
    }

    #[test]
    fn product_thetas_multiply(v1 in 0.5f64..3.0, v2 in 0.5f64..3.0, t in 0.1f64..30.0) {
        let a = ClosedFormModel::hyperbolic(&HyperbolicModel::new(3, v1).unwrap()).unwrap();
        let b = ClosedFormModel::hyperbolic(&HyperbolicModel::new(5, v2).unwrap()).unwrap();
        for k in 0..=8 {
            let direct: f64 = (0..=3)
                .filter(|&i| k >= i && k - i <= 5)
                .map(|i| a.thetas[i].eval(t) * b.thetas[k - i].eval(t))
                .sum();
            let composed = product_theta(&a.thetas, &b.thetas, k).unwrap().eval(t);
            prop_assert!((composed - direct).abs() <= 1e-12 * direct.abs());
        }
    }

    #[test]
    fn beta_bounds_are_ordered(p2 in 1u32..6, q2 in 1u32..6, c in 0.1f64..5.0, rate in 0.0f64..3.0, gap in 0.01f64..2.0) {
        let cf = ClosedFormTheta::new(vec![
            Term { coefficient: 1.0, power2: p2, rate },
            Term { coefficient: c, power2: q2, rate: rate + gap },
        ]).unwrap();
        let est = estimate_beta(&ThetaFunction::from_closed_form(cf, 0), None, DEFAULT_WINDOW, 32).unwrap();
        prop_assert!(est.beta <= est.beta_bar);
        prop_assert!((est.beta - f64::from(p2) / 2.0).abs() < 0.05);
    }

    #[test]
    fn log_determinant_is_linear_in_masses(rates in proptest::collection::vec(0.1f64..10.0, 1..6), scale in 0.1f64..5.0) {
        let atoms: Vec<(f64, f64)> = rates.iter().enumerate().map(|(i, &r)| (r, 1.0 + i as f64 * 0.25)).collect();
        let scaled: Vec<(f64, f64)> = atoms.iter().map(|&(r, m)| (r, scale * m)).collect();
        let log_det = |atoms: &[(f64, f64)]| {
            let th = ThetaFunction::from_closed_form(ClosedFormTheta::atomic(atoms).unwrap(), 0);
            let exp = HeatExpansion::for_theta(&th, None).unwrap();
            determinant(&th, &exp, f64::INFINITY).unwrap().log_determinant
        };
        let (a, b) = (log_det(&atoms), log_det(&scaled));
        prop_assert!((b - scale * a).abs() <= 1e-9 * (1.0 + a.abs() * scale));
    }

    #[test]
    fn laplace_transform_of_density_decreases(alpha in 0.2f64..3.0, lambda0 in 0.0f64..2.0, t in 0.5f64..20.0, dt in 0.1f64..10.0) {
        let table = power_law_density(alpha, lambda0).unwrap();
        prop_assert!(laplace_of_density(&table, t + dt).unwrap() < laplace_of_density(&table, t).unwrap());
    }
}

#[test]
fn sampled_theta_pipeline_matches_heat_trace() {
    let c = PeriodicComplex::build_torus(2, 2, &skew_basis(2, 0.2, 0.3)).unwrap();
    let s = Arc::new(
        sample_complex(
            &c,
            &SampleOptions {
                resolution: 6,
                ..Default::default()
            },
        )
        .unwrap(),
    );
    for j in 0..=2 {
        let th = ThetaFunction::from_sample(s.clone(), j, None).unwrap();
        for t in [0.01, 0.3, 4.0] {
            let direct = vn_heat_trace(&s, j, t) - th.betti;
            assert!((th.theta(t).unwrap() - direct).abs() < 1e-12);
        }
    }
}
