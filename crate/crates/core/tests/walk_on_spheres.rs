use std::sync::Arc;

use fracops::evaluate::{mean_value, QuadConfig};
use fracops::exact_solutions::shifted_halfspace_harmonic;
use fracops::field::{BumpField, ExteriorData};
use fracops::wos::{wos_solve, Domain, WosConfig};

/// From the center of a ball the first jump already leaves it, so the
/// estimator is a plain Monte Carlo average of the mean-value integral.
#[test]
fn one_step_matches_mean_value_integral() {
    for &s in &[0.3, 0.6] {
        let bump = BumpField::new(1, vec![(1.0, vec![1.8], 0.9)]).unwrap();
        let exact = mean_value(&bump, 1.0, 1, s, &QuadConfig::default()).unwrap();
        let domain = Domain::ball(vec![0.0], 1.0).unwrap();
        let g = ExteriorData::new(Arc::new(bump));
        let cfg = WosConfig {
            n_samples: 200_000,
            master_seed: 3,
            ..Default::default()
        };
        let est = wos_solve(&domain, &g, &[0.0], s, &cfg).unwrap();
        assert!((est.mean_steps - 1.0).abs() < 1e-12);
        assert!(
            (est.mean - exact.value).abs() < 4.0 * est.stderr + exact.err_est,
            "s={s}: {} ± {} vs {}",
            est.mean,
            est.stderr,
            exact.value
        );
    }
}

#[test]
fn halfspace_solution_in_two_dimensions() {
    let s = 0.5;
    let u = shifted_halfspace_harmonic(2, s, &[1.0, 0.0], 1.0).unwrap();
    let domain = Domain::ball(vec![0.0, 0.0], 1.0).unwrap();
    let g = ExteriorData::new(u.field.clone());
    let cfg = WosConfig {
        n_samples: 50_000,
        master_seed: 11,
        ..Default::default()
    };
    for x in [[0.0, 0.0], [0.4, -0.3]] {
        let est = wos_solve(&domain, &g, &x, s, &cfg).unwrap();
        assert!((est.mean - u.eval(&x)).abs() < 4.0 * est.stderr, "{x:?}: {est:?}");
    }
}

/// Positive s-harmonic functions in a ball are comparable at interior points.
/// Only positivity and finiteness of the ratio are asserted.
#[test]
fn harnack_ratio_is_finite() {
    let s = 0.5;
    let bump = BumpField::new(1, vec![(1.0, vec![3.0], 1.0)]).unwrap();
    let g = ExteriorData::new(Arc::new(bump));
    let domain = Domain::interval(-1.0, 1.0).unwrap();
    let cfg = WosConfig {
        n_samples: 40_000,
        master_seed: 5,
        ..Default::default()
    };
    let values: Vec<f64> = [-0.5, 0.0, 0.5]
        .iter()
        .map(|&x| wos_solve(&domain, &g, &[x], s, &cfg).unwrap().mean)
        .collect();
    assert!(values.iter().all(|&v| v > 0.0));
    let ratio = values.iter().cloned().fold(0.0, f64::max) / values.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(ratio.is_finite() && ratio < 100.0, "{values:?}");
    // data sits to the right, so the solution increases towards it
    assert!(values[0] < values[2]);
}

#[test]
fn union_domain_reaches_exterior() {
    let domain = Domain::union(vec![
        Domain::interval(-1.0, 0.2).unwrap(),
        Domain::interval(-0.2, 1.0).unwrap(),
    ])
    .unwrap();
    let g = ExteriorData::constant(1, 2.5);
    let est = wos_solve(&domain, &g, &[0.0], 0.4, &WosConfig::default()).unwrap();
    assert_eq!(est.mean, 2.5);
    assert_eq!(est.stderr, 0.0);
    assert!(!est.bias_warning);
}
