use fracops::discrete::{assemble_operator, energy, solve_dirichlet, solve_obstacle, Grid1D, GridFunction1D};
use fracops::field::ExteriorData;

fn setup(s: f64, n: usize) -> (fracops::discrete::DiscreteOperator, Vec<f64>) {
    let op = assemble_operator(s, Grid1D::new(-1.0, 1.0, n).unwrap()).unwrap();
    let phi = op.grid.sample(|x| 0.3 - (x - 0.1).powi(2));
    (op, phi)
}

/// The solution is the least discrete supersolution above the obstacle.
#[test]
fn supersolutions_above_obstacle_dominate() {
    let zero = ExteriorData::constant(1, 0.0);
    for &s in &[0.25, 0.5, 0.75] {
        let (op, phi) = setup(s, 200);
        let sol = solve_obstacle(&op, &phi, &zero, 1e-11).unwrap();
        // the torsion-like solution has A w = 1 ≥ 0; scale it above φ
        let w = solve_dirichlet(&op, &vec![1.0; 200], &zero).unwrap();
        let alpha = phi
            .iter()
            .zip(&w.values)
            .map(|(p, w)| p / w)
            .fold(0.0f64, f64::max);
        for (i, (v, w)) in sol.v.values.iter().zip(&w.values).enumerate() {
            assert!(*v <= alpha * w + 1e-10, "s={s} node {i}");
        }
        // constants above max φ are supersolutions too
        let top = phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(sol.v.values.iter().all(|v| *v <= top + 1e-10));
    }
}

/// Among admissible grid functions with zero exterior data the solution has
/// the least energy.
#[test]
fn solution_minimizes_energy() {
    let zero = ExteriorData::constant(1, 0.0);
    let (op, phi) = setup(0.5, 150);
    let sol = solve_obstacle(&op, &phi, &zero, 1e-12).unwrap();
    let e0 = energy(&op, &sol.v, &sol.v).unwrap();
    for k in 1..40 {
        let w: Vec<f64> = sol
            .v
            .values
            .iter()
            .zip(&phi)
            .enumerate()
            .map(|(i, (v, p))| (v + 0.02 * ((i * k) as f64 * 0.37).sin()).max(*p))
            .collect();
        let w = GridFunction1D::new(op.grid, w, zero.clone()).unwrap();
        let e = energy(&op, &w, &w).unwrap();
        assert!(e >= e0 - 1e-10 * e0.abs(), "perturbation {k}: {e} < {e0}");
    }
}

#[test]
fn obstacle_below_zero_gives_zero_contact_free_solution() {
    let zero = ExteriorData::constant(1, 0.0);
    let op = assemble_operator(0.4, Grid1D::new(-1.0, 1.0, 64).unwrap()).unwrap();
    let phi = vec![-0.5; 64];
    let sol = solve_obstacle(&op, &phi, &zero, 1e-12).unwrap();
    assert!(sol.contact_set.is_empty());
    assert!(sol.v.values.iter().all(|v| v.abs() < 1e-12));
}
