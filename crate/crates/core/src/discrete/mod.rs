//! Finite-difference/quadrature discretization of `(-Δ)^s` on an interval.
//!
//! With `w(y) = 2u(x) − u(x+y) − u(x−y)` the operator is
//! `c_{1,s} ∫_0^∞ w(y) y^{−1−2s} dy`. On `[0, h]` the second difference is
//! treated as `w(h)(y/h)²`; on `[h, ∞)` `u` is the piecewise-linear
//! interpolant of the nodal values inside `(a, b)` and the exact datum `g`
//! outside. This gives
//!
//! `(Au)_i = c h^{−2s} (d u_i − Σ_{j≠i} W_{|i−j|} u_j)` with
//! `d = 2/(2−2s) + 1/s`, `W_1 = 1/(2−2s) + ∫_1^2 (2−τ)τ^{−1−2s}dτ` and
//! `W_k = ∫_{−1}^{1} (1−|τ|)(k+τ)^{−1−2s}dτ` for k ≥ 2,
//!
//! a symmetric Toeplitz M-matrix. The exterior enters through a load vector.

mod obstacle;
mod toeplitz;

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::ExteriorData;
use crate::quadrature::{gauss_legendre, tanh_sinh};
use crate::special_math::constants;

pub use obstacle::{
    fit_growth_exponent, free_boundary_point, semiconvexity, solve_obstacle, solve_obstacle_with, GrowthFit,
    ObstacleConfig, ObstacleSolution, SemiconvexityReport, Side,
};
pub use toeplitz::{conjugate_gradient, CgReport, SymmetricToeplitz};

/// Uniform grid with `N` interior nodes `x_i = a + i h`, `i = 1..=N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid1D {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl Grid1D {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter(format!("need at least 2 interior nodes, got {n}")));
        }
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Parameter(format!("bad interval ({a}, {b})")));
        }
        Ok(Grid1D { a, b, n })
    }

    pub fn h(&self) -> f64 {
        (self.b - self.a) / (self.n + 1) as f64
    }

    /// Interior node `i` in `0..N` (that is, `x_{i+1}`).
    pub fn x(&self, i: usize) -> f64 {
        self.a + (i + 1) as f64 * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.n).map(|i| f(self.x(i))).collect()
    }
}

/// Interior values on a grid together with the exterior datum.
#[derive(Clone)]
pub struct GridFunction1D {
    pub grid: Grid1D,
    pub values: Vec<f64>,
    pub exterior: ExteriorData,
}

impl fmt::Debug for GridFunction1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GridFunction1D({:?}, {} values, {:?})", self.grid, self.values.len(), self.exterior)
    }
}

impl GridFunction1D {
    pub fn new(grid: Grid1D, values: Vec<f64>, exterior: ExteriorData) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::GridMismatch(format!("{} values on a grid of {} nodes", values.len(), grid.n)));
        }
        if exterior.field.dim() != 1 {
            return Err(Error::GridMismatch("exterior datum must live on ℝ".into()));
        }
        Ok(GridFunction1D { grid, values, exterior })
    }

    /// Value at interior index `i`, with the exterior datum for `i = −1, N`.
    pub fn extended(&self, i: isize) -> f64 {
        if i < 0 {
            self.exterior.eval(&[self.grid.a])
        } else if i as usize >= self.grid.n {
            self.exterior.eval(&[self.grid.b])
        } else {
            self.values[i as usize]
        }
    }

    /// CSV with header `x,value`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
        w.write_record(["x", "value"]).map_err(|e| Error::Io(e.to_string()))?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([format!("{:.17e}", self.grid.x(i)), format!("{v:.17e}")])
                .map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path, grid: Grid1D, exterior: ExteriorData) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
        let mut values = Vec::with_capacity(grid.n);
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| Error::Io(e.to_string()))?;
            let parse = |k: usize| -> Result<f64> {
                rec.get(k)
                    .and_then(|v| v.trim().parse().ok())
                    .ok_or_else(|| Error::Io(format!("bad CSV row {}", i + 2)))
            };
            let (x, v) = (parse(0)?, parse(1)?);
            if i >= grid.n || (x - grid.x(i)).abs() > 1e-9 * (1.0 + x.abs()) {
                return Err(Error::GridMismatch(format!("CSV row {} does not match the grid", i + 2)));
            }
            values.push(v);
        }
        GridFunction1D::new(grid, values, exterior)
    }
}

/// Lowest and highest accepted orders; beyond them the weights over- or
/// underflow relative to the diagonal.
pub const MIN_ORDER: f64 = 0.05;
pub const MAX_ORDER: f64 = 0.95;

/// The assembled 1D operator.
#[derive(Clone)]
pub struct DiscreteOperator {
    pub s: f64,
    pub grid: Grid1D,
    /// `c_{1,s} h^{−2s}`
    scale: f64,
    /// `A = scale · T` where `T` has first column `(d, −W_1, −W_2, …)`.
    matrix: SymmetricToeplitz,
    /// `B_m = ∫_{m−1}^{m} (τ−m+1) τ^{−1−2s} dτ`: weight of the boundary node
    /// at `m` spacings, `m ≥ 2` (index 0 and 1 unused).
    boundary: Vec<f64>,
}

impl fmt::Debug for DiscreteOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DiscreteOperator(s={}, {:?})", self.s, self.grid)
    }
}

/// `∫_lo^hi f` by 30-point Gauss–Legendre (the integrands here are smooth).
fn gl30(nodes: &(Vec<f64>, Vec<f64>), lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (m, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    nodes.0.iter().zip(&nodes.1).map(|(x, w)| w * f(m + r * x)).sum::<f64>() * r
}

pub fn assemble_operator(s: f64, grid: Grid1D) -> Result<DiscreteOperator> {
    if !(MIN_ORDER..=MAX_ORDER).contains(&s) {
        return Err(Error::Parameter(format!("order s = {s} outside [{MIN_ORDER}, {MAX_ORDER}]")));
    }
    let c = constants(1, s)?.c_ns;
    let h = grid.h();
    let p = 1.0 + 2.0 * s;
    let gl = gauss_legendre(30);
    let n = grid.n;
    let mut col = vec![0.0; n];
    col[0] = 2.0 / (2.0 - 2.0 * s) + 1.0 / s;
    col.par_iter_mut().enumerate().skip(1).for_each(|(k, w)| {
        let kf = k as f64;
        let weight = if k == 1 {
            1.0 / (2.0 - 2.0 * s) + gl30(&gl, 1.0, 2.0, |t| (2.0 - t) * t.powf(-p))
        } else {
            gl30(&gl, kf - 1.0, kf, |t| (t - kf + 1.0) * t.powf(-p))
                + gl30(&gl, kf, kf + 1.0, |t| (kf + 1.0 - t) * t.powf(-p))
        };
        *w = -weight;
    });
    let boundary = (0..n + 2)
        .map(|m| {
            if m < 2 {
                return 0.0;
            }
            let mf = m as f64;
            gl30(&gl, mf - 1.0, mf, |t| (t - mf + 1.0) * t.powf(-p))
        })
        .collect();
    Ok(DiscreteOperator {
        s,
        grid,
        scale: c * h.powf(-2.0 * s),
        matrix: SymmetricToeplitz::new(col),
        boundary,
    })
}

impl DiscreteOperator {
    pub fn size(&self) -> usize {
        self.grid.n
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.scale * self.matrix.entry(i, j)
    }

    /// First column of `A`.
    pub fn first_column(&self) -> Vec<f64> {
        self.matrix.column().iter().map(|v| self.scale * v).collect()
    }

    pub fn diagonal(&self) -> f64 {
        self.entry(0, 0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.size();
        DMatrix::from_fn(n, n, |i, j| self.entry(i, j))
    }

    /// `A u`.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len(u.len())?;
        Ok(self.matrix.apply(u).into_iter().map(|v| self.scale * v).collect())
    }

    /// `(A u)_i` from the explicit row.
    pub fn apply_row(&self, i: usize, u: &[f64]) -> f64 {
        self.scale * self.matrix.row_dot(i, u)
    }

    pub(crate) fn toeplitz(&self) -> &SymmetricToeplitz {
        &self.matrix
    }

    pub(crate) fn scale(&self) -> f64 {
        self.scale
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.size() {
            return Err(Error::GridMismatch(format!("vector of length {len} on a grid of {} nodes", self.size())));
        }
        Ok(())
    }

    /// Contribution of `g` to `(−Δ)^s` at the interior nodes, so that
    /// `A u + exterior_load(g)` is the full discrete operator.
    pub fn exterior_load(&self, g: &ExteriorData) -> Result<Vec<f64>> {
        if g.field.dim() != 1 {
            return Err(Error::GridMismatch("exterior datum must live on ℝ".into()));
        }
        g.check(self.s)?;
        let s = self.s;
        let (a, b, n, h) = (self.grid.a, self.grid.b, self.grid.n, self.grid.h());
        let c = self.scale * h.powf(2.0 * s);
        let (ga, gb) = (g.eval(&[a]), g.eval(&[b]));
        let near = 1.0 / (2.0 - 2.0 * s);
        // ∫_d^∞ g(x ∓ t) t^{−1−2s} dt = d^{−2s}/(2s) ∫_0^1 g(x ∓ d u^{−1/(2s)}) du
        let tail = |x: f64, d: f64, dir: f64| -> Result<f64> {
            let q = tanh_sinh(|u, du| {
                let u = if u < 0.5 { du } else { u };
                g.eval(&[x + dir * d * u.powf(-1.0 / (2.0 * s))])
            }, 0.0, 1.0, 1e-12);
            if !q.value.is_finite() {
                return Err(Error::NumericalFailure {
                    what: "exterior load quadrature".into(),
                    achieved: q.err,
                });
            }
            Ok(d.powf(-2.0 * s) / (2.0 * s) * q.value)
        };
        (0..n)
            .into_par_iter()
            .map(|i| {
                let x = self.grid.x(i);
                // boundary nodes a, b sit i+1 and N−i spacings away
                let (ml, mr) = (i + 1, n - i);
                let hat = |m: usize| if m == 1 { near } else { self.boundary[m] };
                let nodal = hat(ml) * ga + hat(mr) * gb;
                let ext = tail(x, x - a, -1.0)? + tail(x, b - x, 1.0)?;
                Ok(-self.scale * nodal - c * ext)
            })
            .collect()
    }
}

/// Solves `A u = f − exterior_load(g)`.
pub fn solve_dirichlet(op: &DiscreteOperator, f: &[f64], g: &ExteriorData) -> Result<GridFunction1D> {
    op.check_len(f.len())?;
    let load = op.exterior_load(g)?;
    let rhs: Vec<f64> = f.iter().zip(&load).map(|(a, b)| a - b).collect();
    let values = solve_spd(op, &rhs)?;
    GridFunction1D::new(op.grid, values, g.clone())
}

/// Dense Cholesky up to this size, conjugate gradients above.
const DENSE_LIMIT: usize = 2048;

pub(crate) fn solve_spd(op: &DiscreteOperator, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = op.size();
    if n <= DENSE_LIMIT {
        let chol = op.to_dense().cholesky().ok_or_else(|| Error::NumericalFailure {
            what: "Cholesky factorization".into(),
            achieved: f64::NAN,
        })?;
        let x = chol.solve(&DVector::from_column_slice(rhs));
        return Ok(x.iter().copied().collect());
    }
    let scaled: Vec<f64> = rhs.iter().map(|v| v / op.scale).collect();
    let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let b_norm = max_abs(&scaled).max(f64::MIN_POSITIVE);
    let t_norm = 2.0 * op.toeplitz().column()[0];
    let mut x = vec![0.0; n];
    let rep = conjugate_gradient(op.toeplitz(), &vec![true; n], &scaled, &mut x, 1e-14 * b_norm, 20 * n);
    // normwise backward error
    let backward = rep.residual / (t_norm * max_abs(&x) + b_norm);
    if !(backward < 1e-12) {
        return Err(Error::NumericalFailure {
            what: "conjugate gradients".into(),
            achieved: backward,
        });
    }
    Ok(x)
}

/// Discrete bilinear form
/// `h [uᵀAv + uᵀℓ(g_v) + vᵀℓ(g_u) − Σ_i ℓ(g_u g_v)_i]`, with `ℓ` the exterior
/// load. Symmetric, nonnegative on the diagonal, zero on constants.
pub fn energy(op: &DiscreteOperator, u: &GridFunction1D, v: &GridFunction1D) -> Result<f64> {
    for w in [u, v] {
        if w.grid != op.grid {
            return Err(Error::GridMismatch(format!("{:?} vs operator {:?}", w.grid, op.grid)));
        }
    }
    let av = op.apply(&v.values)?;
    let lu = op.exterior_load(&u.exterior)?;
    let lv = op.exterior_load(&v.exterior)?;
    let (gu, gv) = (u.exterior.field.clone(), v.exterior.field.clone());
    let product = crate::field::FnField::new(
        1,
        move |x| gu.eval(x) * gv.eval(x),
        crate::field::Growth {
            m: u.exterior.field.growth().m * v.exterior.field.growth().m,
            tau: u.exterior.field.growth().tau + v.exterior.field.growth().tau,
        },
    );
    let luv = op.exterior_load(&ExteriorData::new(Arc::new(product)))?;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let total = dot(&u.values, &av) + dot(&u.values, &lv) + dot(&v.values, &lu) - luv.iter().sum::<f64>();
    Ok(op.grid.h() * total)
}
