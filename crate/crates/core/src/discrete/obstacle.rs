//! Discrete obstacle problem `min{A v + ℓ, v − φ} = 0` and free-boundary
//! diagnostics.

use serde::Serialize;

use super::{conjugate_gradient, solve_spd, DiscreteOperator, GridFunction1D};
use crate::error::{Error, Result};
use crate::field::ExteriorData;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObstacleConfig {
    /// Complementarity residual to reach, max norm.
    pub tol: f64,
    /// Over-relaxation factor of projected SOR.
    pub omega: f64,
    pub max_sweeps: usize,
    /// Locate the contact set by primal-dual active-set steps before the
    /// projected SOR sweeps.
    pub active_set: bool,
    pub max_active_set_steps: usize,
}

impl Default for ObstacleConfig {
    fn default() -> Self {
        ObstacleConfig {
            tol: 1e-8,
            omega: 1.8,
            max_sweeps: 200_000,
            active_set: true,
            max_active_set_steps: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ObstacleSolution {
    pub v: GridFunction1D,
    /// Indices with `v_i − φ_i ≤ tol`, increasing.
    pub contact_set: Vec<usize>,
    /// `max_i |min((Av + ℓ)_i, v_i − φ_i)|`
    pub residual: f64,
    /// Active-set steps plus SOR sweeps.
    pub iterations: usize,
    /// `A v + ℓ` at the solution.
    pub operator_values: Vec<f64>,
    /// Requested residual, also the contact threshold.
    pub tol: f64,
}

impl Serialize for ObstacleSolution {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = ser.serialize_struct("ObstacleSolution", 6)?;
        st.serialize_field("grid", &self.v.grid)?;
        st.serialize_field("residual", &self.residual)?;
        st.serialize_field("iterations", &self.iterations)?;
        st.serialize_field("contact_count", &self.contact_set.len())?;
        st.serialize_field(
            "contact_interval",
            &self.contact_set.first().map(|&i| (self.v.grid.x(i), self.v.grid.x(*self.contact_set.last().unwrap()))),
        )?;
        st.serialize_field("contact_set", &self.contact_set)?;
        st.end()
    }
}

fn complementarity(r: &[f64], v: &[f64], phi: &[f64]) -> f64 {
    r.iter()
        .zip(v.iter().zip(phi))
        .map(|(ri, (vi, pi))| ri.min(vi - pi).abs())
        .fold(0.0, f64::max)
}

pub fn solve_obstacle(op: &DiscreteOperator, phi: &[f64], g: &ExteriorData, tol: f64) -> Result<ObstacleSolution> {
    solve_obstacle_with(
        op,
        phi,
        g,
        &ObstacleConfig {
            tol,
            ..Default::default()
        },
    )
}

/// Projected SOR on `min ½vᵀAv + vᵀℓ` over `v ≥ φ`, optionally started from
/// the primal-dual active-set solution.
pub fn solve_obstacle_with(
    op: &DiscreteOperator,
    phi: &[f64],
    g: &ExteriorData,
    cfg: &ObstacleConfig,
) -> Result<ObstacleSolution> {
    let n = op.size();
    if phi.len() != n {
        return Err(Error::GridMismatch(format!("obstacle of length {} on {n} nodes", phi.len())));
    }
    if phi.iter().any(|p| !p.is_finite()) {
        return Err(Error::Parameter("obstacle values must be finite".into()));
    }
    if !(cfg.tol > 0.0) || !(cfg.omega > 0.0 && cfg.omega < 2.0) {
        return Err(Error::Parameter(format!("invalid obstacle configuration {cfg:?}")));
    }
    let load = op.exterior_load(g)?;
    let neg_load: Vec<f64> = load.iter().map(|l| -l).collect();
    let free_solution = solve_spd(op, &neg_load)?;
    let mut v: Vec<f64> = free_solution.iter().zip(phi).map(|(u, p)| u.max(*p)).collect();
    let mut iterations = 0;

    if cfg.active_set {
        let mut active: Vec<bool> = free_solution.iter().zip(phi).map(|(u, p)| p > u).collect();
        let penalty = op.diagonal();
        for _ in 0..cfg.max_active_set_steps {
            iterations += 1;
            active_set_solve(op, phi, &load, &active, &mut v, cfg.tol)?;
            let r = residual_vector(op, &v, &load)?;
            let next: Vec<bool> = (0..n).map(|i| r[i] + penalty * (phi[i] - v[i]) > 0.0).collect();
            if next == active {
                break;
            }
            active = next;
        }
    }

    let diag = op.diagonal();
    let mut r = residual_vector(op, &v, &load)?;
    let mut residual = complementarity(&r, &v, phi);
    let mut sweeps = 0;
    while residual > cfg.tol {
        if sweeps == cfg.max_sweeps {
            return Err(Error::NonConvergence {
                iterations: iterations + sweeps,
                residual,
            });
        }
        for i in 0..n {
            let ri = op.apply_row(i, &v) + load[i];
            v[i] = phi[i].max(v[i] - cfg.omega * ri / diag);
        }
        sweeps += 1;
        r = residual_vector(op, &v, &load)?;
        residual = complementarity(&r, &v, phi);
    }
    iterations += sweeps;
    let contact_set = (0..n).filter(|&i| v[i] - phi[i] <= cfg.tol).collect();
    Ok(ObstacleSolution {
        v: GridFunction1D::new(op.grid, v, g.clone())?,
        contact_set,
        residual,
        iterations,
        operator_values: r,
        tol: cfg.tol,
    })
}

fn residual_vector(op: &DiscreteOperator, v: &[f64], load: &[f64]) -> Result<Vec<f64>> {
    Ok(op.apply(v)?.iter().zip(load).map(|(a, l)| a + l).collect())
}

/// `v = φ` on the active set, `(Av + ℓ)_i = 0` elsewhere.
fn active_set_solve(
    op: &DiscreteOperator,
    phi: &[f64],
    load: &[f64],
    active: &[bool],
    v: &mut [f64],
    tol: f64,
) -> Result<()> {
    let n = op.size();
    let fixed: Vec<f64> = (0..n).map(|i| if active[i] { phi[i] } else { 0.0 }).collect();
    let a_fixed = op.toeplitz().apply(&fixed);
    let scale = op.scale();
    let rhs: Vec<f64> = (0..n).map(|i| -load[i] / scale - a_fixed[i]).collect();
    let free: Vec<bool> = active.iter().map(|a| !a).collect();
    let mut x: Vec<f64> = (0..n).map(|i| if active[i] { 0.0 } else { v[i] }).collect();
    conjugate_gradient(op.toeplitz(), &free, &rhs, &mut x, 0.05 * tol / scale, 20 * n);
    for i in 0..n {
        v[i] = if active[i] { phi[i] } else { x[i] };
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    /// Free boundary at the left end of the contact set.
    Left,
    /// Free boundary at the right end of the contact set.
    Right,
}

/// Free-boundary point `x*` on one side of the contact set, with the index of
/// the first non-contact node beyond it.
///
/// `x*` is where the linear interpolant of `v − φ` between the last contact
/// node and the first non-contact node reaches the contact tolerance.
pub fn free_boundary_point(sol: &ObstacleSolution, phi: &[f64], side: Side) -> Result<(f64, usize)> {
    let grid = sol.v.grid;
    let n = grid.n;
    let (&first, &last) = match (sol.contact_set.first(), sol.contact_set.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::Domain("contact set is empty".into())),
    };
    let (contact, free) = match side {
        Side::Right if last + 1 < n => (last, last + 1),
        Side::Left if first >= 1 => (first, first - 1),
        _ => return Err(Error::Domain("no free boundary on that side inside the grid".into())),
    };
    let gap = |i: usize| sol.v.values[i] - phi[i];
    let (ec, ef) = (gap(contact), gap(free));
    let theta = if ef > ec { ((sol.tol - ec) / (ef - ec)).clamp(0.0, 1.0) } else { 0.0 };
    let (xc, xf) = (grid.x(contact), grid.x(free));
    Ok((xc + theta * (xf - xc), free))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthFit {
    pub exponent: f64,
    pub r2: f64,
    pub x_star: f64,
    pub points: usize,
}

/// Least-squares slope of `log(v − φ)` against `log|x − x*|` over the nodes
/// `first_free + k` (moving away from the contact set) for `k` in `window`.
/// Nodes within `2h` of `x*` are dropped.
pub fn fit_growth_exponent(
    sol: &ObstacleSolution,
    phi: &[f64],
    side: Side,
    window: std::ops::Range<usize>,
) -> Result<GrowthFit> {
    let (x_star, free) = free_boundary_point(sol, phi, side)?;
    let grid = sol.v.grid;
    let h = grid.h();
    let mut pts = Vec::new();
    for k in window {
        let i = match side {
            Side::Right => free + k,
            Side::Left => match free.checked_sub(k) {
                Some(i) => i,
                None => break,
            },
        };
        if i >= grid.n {
            break;
        }
        let d = (grid.x(i) - x_star).abs();
        let e = sol.v.values[i] - phi[i];
        if d >= 2.0 * h && e > 0.0 {
            pts.push((d.ln(), e.ln()));
        }
    }
    let (exponent, r2) = log_log_fit(&pts)?;
    Ok(GrowthFit {
        exponent,
        r2,
        x_star,
        points: pts.len(),
    })
}

/// Slope and r² of the least-squares line through `pts`.
pub(crate) fn log_log_fit(pts: &[(f64, f64)]) -> Result<(f64, f64)> {
    if pts.len() < 6 {
        return Err(Error::WindowTooSmall { points: pts.len() });
    }
    let m = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / m, b + y / m));
    let (sxx, sxy, syy) = pts.iter().fold((0.0, 0.0, 0.0), |(a, b, c), (x, y)| {
        let (dx, dy) = (x - mx, y - my);
        (a + dx * dx, b + dx * dy, c + dy * dy)
    });
    if !(sxx > 0.0) {
        return Err(Error::WindowTooSmall { points: 1 });
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok((slope, r2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SemiconvexityReport {
    /// Smallest `(v_{i+1} + v_{i−1} − 2v_i)/h²` over the region.
    pub min_second_difference: f64,
    /// `−‖φ''‖_∞`
    pub bound: f64,
    /// `max(0, bound − min_second_difference)`
    pub defect: f64,
    pub nodes: usize,
}

/// Second differences of `v` at the nodes in `[lo, hi]`, compared with the
/// lower bound `−phi_c11`.
pub fn semiconvexity(v: &GridFunction1D, phi_c11: f64, lo: f64, hi: f64) -> Result<SemiconvexityReport> {
    let grid = v.grid;
    let h2 = grid.h() * grid.h();
    let mut min = f64::INFINITY;
    let mut nodes = 0;
    for i in 0..grid.n {
        let x = grid.x(i);
        if x < lo || x > hi {
            continue;
        }
        let ii = i as isize;
        let d2 = (v.extended(ii + 1) + v.extended(ii - 1) - 2.0 * v.values[i]) / h2;
        min = min.min(d2);
        nodes += 1;
    }
    if nodes == 0 {
        return Err(Error::Domain(format!("no grid nodes in [{lo}, {hi}]")));
    }
    let bound = -phi_c11.abs();
    Ok(SemiconvexityReport {
        min_second_difference: min,
        bound,
        defect: (bound - min).max(0.0),
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{assemble_operator, Grid1D};
    use super::*;

    fn quadratic_problem(s: f64, n: usize) -> (DiscreteOperator, Vec<f64>, ExteriorData) {
        let op = assemble_operator(s, Grid1D::new(-1.0, 1.0, n).unwrap()).unwrap();
        let phi = op.grid.sample(|x| 0.5 - x * x);
        (op, phi, ExteriorData::constant(1, 0.0))
    }

    #[test]
    fn nonpositive_obstacle_gives_zero() {
        let op = assemble_operator(0.5, Grid1D::new(-1.0, 1.0, 64).unwrap()).unwrap();
        let phi = op.grid.sample(|x| -1.0 - x * x);
        let sol = solve_obstacle(&op, &phi, &ExteriorData::constant(1, 0.0), 1e-10).unwrap();
        assert!(sol.v.values.iter().all(|v| v.abs() < 1e-12));
        assert!(sol.contact_set.is_empty());
    }

    #[test]
    fn quadratic_obstacle_complementarity() {
        let (op, phi, g) = quadratic_problem(0.5, 255);
        let sol = solve_obstacle(&op, &phi, &g, 1e-9).unwrap();
        assert!(sol.residual < 1e-9);
        assert!(sol.v.values.iter().zip(&phi).all(|(v, p)| *v >= p - 1e-14));
        assert!(!sol.contact_set.is_empty());
        let mid = sol.contact_set[sol.contact_set.len() / 2];
        assert!(op.grid.x(mid).abs() < 0.1);
    }

    #[test]
    fn psor_alone_agrees_with_active_set() {
        let (op, phi, g) = quadratic_problem(0.4, 63);
        let fast = solve_obstacle(&op, &phi, &g, 1e-10).unwrap();
        let slow = solve_obstacle_with(
            &op,
            &phi,
            &g,
            &ObstacleConfig {
                tol: 1e-10,
                active_set: false,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(slow.iterations > fast.iterations);
        for (a, b) in fast.v.values.iter().zip(&slow.v.values) {
            assert!((a - b).abs() < 1e-9);
        }
        assert_eq!(fast.contact_set, slow.contact_set);
    }

    #[test]
    fn exact_power_fit() {
        let grid = Grid1D::new(0.0, 1.0, 199).unwrap();
        // contact up to node 59, v − φ = d^{1.5} beyond
        let x_star = grid.x(59);
        let phi = vec![0.0; 199];
        let values: Vec<f64> = (0..199).map(|i| (grid.x(i) - x_star).max(0.0).powf(1.5)).collect();
        let zero = ExteriorData::constant(1, 0.0);
        let sol = ObstacleSolution {
            v: GridFunction1D::new(grid, values, zero).unwrap(),
            contact_set: (0..60).collect(),
            residual: 0.0,
            iterations: 0,
            operator_values: vec![0.0; 199],
            tol: 1e-14,
        };
        let fit = fit_growth_exponent(&sol, &phi, Side::Right, 0..100).unwrap();
        assert!((fit.x_star - x_star).abs() < 1e-9 * grid.h());
        assert!((fit.exponent - 1.5).abs() < 1e-6 && fit.r2 > 0.999_999, "{fit:?}");
        assert!(matches!(
            fit_growth_exponent(&sol, &phi, Side::Right, 0..4),
            Err(Error::WindowTooSmall { .. })
        ));
        assert!(fit_growth_exponent(&sol, &phi, Side::Left, 0..100).is_err());
    }

    #[test]
    fn semiconvexity_of_a_parabola() {
        let grid = Grid1D::new(-1.0, 1.0, 99).unwrap();
        let zero = ExteriorData::constant(1, 0.0);
        let v = GridFunction1D::new(grid, grid.sample(|x| 1.0 - x * x), zero).unwrap();
        let rep = semiconvexity(&v, 2.0, -0.5, 0.5).unwrap();
        assert!((rep.min_second_difference + 2.0).abs() < 1e-9);
        assert!(rep.defect < 1e-9);
    }
}
