//! Pointwise evaluation of `Lu(x) = ½∫(2u(x) − u(x+y) − u(x−y)) K(dy)`, of the
//! extremal operators `M±`, and of the mean-value integral over a ball's
//! exterior.
//!
//! The integral is written in polar form over a half sphere of directions.
//! Along each direction: a small shell where `δ²u = O(r²)` is integrated
//! against the kernel's second moment, dyadic annuli are integrated
//! adaptively, and the tail is either exact (field constant far away) or
//! bounded through the field's growth.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{C2Bound, FarField, Growth, ScalarField};
use crate::kernels::{norm, one_dim_symbol_constant, Density, Kernel};
use crate::quadrature::{adaptive, hemisphere_rule, tanh_sinh, Quad};
use crate::special_math::{constants, ln_beta};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadConfig {
    /// Fraction of the field's C² radius usable for the singular shell.
    pub near_radius_fraction: f64,
    /// Fixed truncation radius; chosen from the growth bound when `None`.
    pub far_cutoff: Option<f64>,
    /// Angular resolution (points per angle) for n = 2, 3.
    pub angular_order: usize,
    /// Maximum adaptive panels per radial interval.
    pub radial_points: usize,
    pub target_rel_err: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            near_radius_fraction: 1.0,
            far_cutoff: None,
            angular_order: 16,
            radial_points: 200,
            target_rel_err: 1e-7,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.near_radius_fraction > 0.0
            && self.near_radius_fraction <= 1.0
            && self.far_cutoff.is_none_or(|r| r > 0.0)
            && self.angular_order > 0
            && self.radial_points > 0
            && self.target_rel_err > 1e-12
            && self.target_rel_err < 1e-1;
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("invalid quadrature configuration {self:?}")))
        }
    }
}

/// A computed value with its error estimate. `accuracy_met` is false when the
/// estimate exceeds the configured target.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Evaluation {
    pub value: f64,
    pub err_est: f64,
    pub accuracy_met: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Extremal {
    Plus,
    Minus,
}

/// Piecewise-linear map applied to the second difference: `d ↦ pos·d` for
/// `d ≥ 0`, `neg·d` otherwise.
#[derive(Debug, Clone, Copy)]
struct Response {
    pos: f64,
    neg: f64,
}

impl Response {
    const LINEAR: Response = Response { pos: 1.0, neg: 1.0 };

    fn apply(self, d: f64) -> f64 {
        if d >= 0.0 {
            self.pos * d
        } else {
            self.neg * d
        }
    }

    fn lip(self) -> f64 {
        self.pos.abs().max(self.neg.abs())
    }
}

/// Radial kernel along one direction, `k(r) = K(rθ) r^{n-1}`.
#[derive(Clone)]
enum Profile<'a> {
    Power { c: f64 },
    Density { density: &'a Density, n: usize, theta: [f64; 3], upper: f64 },
}

impl Profile<'_> {
    fn k(&self, r: f64, s: f64) -> f64 {
        match self {
            Profile::Power { c } => c * r.powf(-1.0 - 2.0 * s),
            Profile::Density { density, n, theta, .. } => {
                let y = [r * theta[0], r * theta[1], r * theta[2]];
                density.eval(&y[..*n]) * r.powi(*n as i32 - 1)
            }
        }
    }

    /// `k(r) ≤ κ r^{-1-2s}`.
    fn kappa(&self) -> f64 {
        match self {
            Profile::Power { c } => *c,
            Profile::Density { upper, .. } => *upper,
        }
    }

    /// `∫_0^ε r^p k(r) dr` for p = 2, 4.
    fn moment(&self, p: i32, eps: f64, s: f64) -> Quad {
        match self {
            Profile::Power { c } => exact(c * eps.powf(p as f64 - 2.0 * s) / (p as f64 - 2.0 * s)),
            Profile::Density { .. } => tanh_sinh(
                |t, d| {
                    let r = eps * if t < 0.5 { d } else { t };
                    eps * r.powi(p) * self.k(r, s)
                },
                0.0,
                1.0,
                1e-10,
            ),
        }
    }

    /// `∫_R^∞ k(r) dr`.
    fn tail(&self, big_r: f64, s: f64) -> Quad {
        match self {
            Profile::Power { c } => exact(c * big_r.powf(-2.0 * s) / (2.0 * s)),
            Profile::Density { .. } => tanh_sinh(
                |v, d| {
                    let one_minus = if v > 0.5 { d } else { 1.0 - v };
                    let r = big_r / one_minus;
                    self.k(r, s) * big_r / (one_minus * one_minus)
                },
                0.0,
                1.0,
                1e-10,
            ),
        }
    }
}

fn exact(v: f64) -> Quad {
    Quad {
        value: v,
        err: 0.0,
        evals: 0,
        converged: true,
    }
}

struct Direction<'a> {
    theta: [f64; 3],
    weight: f64,
    profile: Profile<'a>,
}

fn kernel_directions(kernel: &Kernel, order: usize) -> Result<Vec<Direction<'_>>> {
    let n = kernel.dim();
    Ok(match kernel {
        Kernel::FractionalLaplacian { n, s } => {
            let c = constants(*n, *s)?.c_ns;
            hemisphere_rule(*n, order)
                .into_iter()
                .map(|(theta, weight)| Direction {
                    theta,
                    weight,
                    profile: Profile::Power { c },
                })
                .collect()
        }
        Kernel::Stable { s, atoms, .. } => {
            // ∑_j w_j/(4C_s) ∫_0^∞ δ²u(x, rθ_j) r^{-1-2s} dr has symbol ½∑ w_j|ξ·θ_j|^{2s}
            let cs = one_dim_symbol_constant(*s);
            atoms
                .iter()
                .map(|a| {
                    let mut theta = [0.0; 3];
                    theta[..n].copy_from_slice(&a.direction);
                    Direction {
                        theta,
                        weight: a.weight / (4.0 * cs),
                        profile: Profile::Power { c: 1.0 },
                    }
                })
                .collect()
        }
        Kernel::Comparable {
            n,
            big_lambda,
            density,
            ..
        } => hemisphere_rule(*n, order)
            .into_iter()
            .map(|(theta, weight)| Direction {
                theta,
                weight,
                profile: Profile::Density {
                    density,
                    n: *n,
                    theta,
                    upper: *big_lambda,
                },
            })
            .collect(),
    })
}

fn power_directions(n: usize, order: usize) -> Vec<Direction<'static>> {
    hemisphere_rule(n, order)
        .into_iter()
        .map(|(theta, weight)| Direction {
            theta,
            weight,
            profile: Profile::Power { c: 1.0 },
        })
        .collect()
}

struct Problem<'a, U: ?Sized> {
    u: &'a U,
    x: &'a [f64],
    s: f64,
    u0: f64,
    c2: C2Bound,
    growth: Growth,
    far: FarField,
    resp: Response,
    cfg: &'a QuadConfig,
}

const EPS: f64 = f64::EPSILON;

impl<U: ScalarField + ?Sized> Problem<'_, U> {
    fn second_difference(&self, theta: &[f64; 3], r: f64) -> f64 {
        let n = self.x.len();
        let mut p = [0.0; 3];
        let mut m = [0.0; 3];
        for i in 0..n {
            p[i] = self.x[i] + r * theta[i];
            m[i] = self.x[i] - r * theta[i];
        }
        2.0 * self.u0 - self.u.eval(&p[..n]) - self.u.eval(&m[..n])
    }

    /// Tail bound `∫_R^∞ |φ(δ²)| k` from `|u(y)| ≤ M(1 + |y|^τ)`.
    fn growth_tail_bound(&self, kappa: f64, big_r: f64) -> f64 {
        let (m, tau, s) = (self.growth.m, self.growth.tau, self.s);
        self.resp.lip()
            * kappa
            * ((2.0 * self.u0.abs() + 2.0 * m) * big_r.powf(-2.0 * s) / (2.0 * s)
                + 2.0 * m * 2f64.powf(tau) * big_r.powf(tau - 2.0 * s) / (2.0 * s - tau))
    }

    /// `∫_0^∞ φ(δ²u(x, rθ)) k(r) dr` with error estimate and accuracy flag.
    fn radial(&self, dir: &Direction, target: f64) -> (Quad, bool) {
        let s = self.s;
        let theta = &dir.theta;
        let profile = &dir.profile;
        let kappa = profile.kappa();
        let lip = self.resp.lip();
        let xnorm = norm(self.x);
        let rho = (self.c2.radius * self.cfg.near_radius_fraction).min(1e300);
        let big_c = self.c2.constant;
        let mut total = Quad::ZERO;

        // singular shell [0, ε]
        let eps = if big_c == 0.0 {
            rho.min(1.0)
        } else {
            let e = 2.0 - 2.0 * s;
            let eps_target = (target * e / (20.0 * lip * big_c * kappa)).powf(1.0 / e);
            let eps_round = (1e4 * EPS * (2.0 * self.u0.abs() + 1e-300) / big_c).sqrt();
            rho.min(eps_target.max(eps_round))
        };
        if big_c > 0.0 {
            let d1 = self.second_difference(theta, eps) / (eps * eps);
            let d2 = self.second_difference(theta, 0.5 * eps) / (0.25 * eps * eps);
            let m2 = profile.moment(2, eps, s);
            let m4 = profile.moment(4, eps, s);
            // δ²(r) ≈ (D0 + a r²) r², fitted through r = ε, ε/2
            let a = 4.0 * (d1 - d2) / (3.0 * eps * eps);
            let d0 = d1 - a * eps * eps;
            let rigorous = 2.0 * lip * big_c * m2.value;
            let (value, est) = if d0 * d1 > 0.0 || self.resp.pos == self.resp.neg {
                let slope = if d1 >= 0.0 { self.resp.pos } else { self.resp.neg };
                let v = slope * (d0 * m2.value + a * m4.value);
                let round = lip * 8.0 * EPS * (2.0 * self.u0.abs() + 1e-300) / (eps * eps) * m2.value;
                (v, (lip * a.abs() * eps * eps * m2.value).max(round))
            } else {
                (self.resp.apply(d1) * m2.value, rigorous)
            };
            total = total.add(Quad {
                value,
                err: est.min(rigorous) + m2.err * lip * big_c + m4.err * lip * a.abs(),
                evals: 4,
                converged: m2.converged && m4.converged,
            });
        }

        // far cutoff
        let (big_r, tail, mut met) = match (self.far, self.cfg.far_cutoff) {
            (FarField::ConstantOutside { radius, value }, _) => {
                let big_r = (radius + xnorm).max(2.0 * eps);
                let t = profile.tail(big_r, s);
                let v = self.resp.apply(2.0 * self.u0 - 2.0 * value);
                (big_r, t.scale(v), t.converged)
            }
            (FarField::Unknown, Some(r)) => {
                let big_r = r.max(2.0 * eps).max(xnorm + 1.0);
                let b = self.growth_tail_bound(kappa, big_r);
                (big_r, Quad { value: 0.0, err: b, evals: 0, converged: true }, b <= 0.1 * target)
            }
            (FarField::Unknown, None) => {
                let mut big_r = (4.0f64).max(2.0 * (xnorm + 1.0)).max(2.0 * eps);
                let cap = 2f64.powi(200) * (xnorm + 1.0);
                while self.growth_tail_bound(kappa, big_r) > 0.1 * target && big_r < cap {
                    big_r *= 2.0;
                }
                let b = self.growth_tail_bound(kappa, big_r);
                (big_r, Quad { value: 0.0, err: b, evals: 0, converged: true }, b <= 0.1 * target)
            }
        };
        total = total.add(tail);

        // panels on [ε, R]: dyadic radii, the C² radius, and field breakpoints
        let mut breaks = vec![eps];
        let mut r = eps;
        while 2.0 * r < big_r {
            r *= 2.0;
            breaks.push(r);
        }
        breaks.push(big_r);
        if rho > eps && rho < big_r {
            breaks.push(rho);
        }
        let mut bp = Vec::new();
        self.u.breakpoints(self.x, &theta[..self.x.len()], &mut bp);
        breaks.extend(bp.into_iter().filter(|&b| b > eps && b < big_r));
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs());
        let per_panel = 0.1 * target / breaks.len() as f64;
        let f = |r: f64| self.resp.apply(self.second_difference(theta, r)) * profile.k(r, s);
        for w in breaks.windows(2) {
            let q = adaptive(f, w[0], w[1], per_panel, 1e-12, self.cfg.radial_points);
            met &= q.converged || q.err <= per_panel;
            total = total.add(q);
        }
        met &= total.err <= target;
        (total, met)
    }
}

fn run<U: ScalarField + ?Sized>(
    u: &U,
    x: &[f64],
    s: f64,
    resp: Response,
    directions: &[Direction],
    coarse: Option<&[Direction]>,
    cfg: &QuadConfig,
) -> Result<Evaluation> {
    cfg.validate()?;
    let n = u.dim();
    if x.len() != n {
        return Err(Error::Parameter(format!("point has dimension {}, field has {n}", x.len())));
    }
    let growth = u.growth();
    if growth.tau >= 2.0 * s {
        return Err(Error::NonIntegrableTail {
            tau: growth.tau,
            two_s: 2.0 * s,
        });
    }
    let c2 = u.c2_bound(x).ok_or_else(|| {
        Error::Domain(format!("field has no second-difference bound at x = {x:?}"))
    })?;
    if !(c2.radius > 0.0) {
        return Err(Error::Domain(format!("C² radius vanishes at x = {x:?}")));
    }
    let u0 = u.eval(x);
    let problem = Problem {
        u,
        x,
        s,
        u0,
        c2,
        growth,
        far: u.far_field(),
        resp,
        cfg,
    };
    let weight_sum: f64 = directions.iter().map(|d| d.weight * d.profile.kappa()).sum();
    let scale = weight_sum * resp.lip() * (u0.abs() + growth.m + c2.constant.min(1e300) * c2.radius.min(1.0).powi(2));
    let target = cfg.target_rel_err * scale.max(f64::MIN_POSITIVE);
    let sweep = |dirs: &[Direction]| -> (f64, f64, bool) {
        let w: f64 = dirs.iter().map(|d| d.weight * d.profile.kappa()).sum();
        let per_dir = |d: &Direction| target * d.profile.kappa() / w.max(f64::MIN_POSITIVE);
        let parts: Vec<(Quad, bool, f64)> = dirs
            .par_iter()
            .map(|d| {
                let (q, met) = problem.radial(d, per_dir(d));
                (q, met, d.weight)
            })
            .collect();
        parts.iter().fold((0.0, 0.0, true), |(v, e, ok), (q, met, w)| {
            (v + w * q.value, e + w * q.err, ok && *met)
        })
    };
    let (value, mut err, mut met) = sweep(directions);
    if let Some(coarse) = coarse {
        let (v2, _, _) = sweep(coarse);
        let angular = (value - v2).abs();
        err += angular;
        met &= angular <= target;
    }
    if !value.is_finite() {
        return Err(Error::NumericalFailure {
            what: "operator evaluation".into(),
            achieved: err,
        });
    }
    Ok(Evaluation {
        value,
        err_est: err,
        accuracy_met: met && err <= target,
    })
}

fn needs_angular_check<U: ScalarField + ?Sized>(n: usize, cfg: &QuadConfig, _u: &U) -> Option<usize> {
    if n >= 2 {
        Some((cfg.angular_order / 2).max(1))
    } else {
        None
    }
}

/// `Lu(x)` for any kernel variant.
pub fn apply_operator<U: ScalarField + ?Sized>(kernel: &Kernel, u: &U, x: &[f64], cfg: &QuadConfig) -> Result<Evaluation> {
    if u.dim() != kernel.dim() {
        return Err(Error::Parameter("field and kernel dimensions differ".into()));
    }
    let dirs = kernel_directions(kernel, cfg.angular_order)?;
    let coarse = match (kernel, needs_angular_check(kernel.dim(), cfg, u)) {
        (Kernel::Stable { .. }, _) | (_, None) => None,
        (_, Some(order)) => Some(kernel_directions(kernel, order)?),
    };
    run(u, x, kernel.order(), Response::LINEAR, &dirs, coarse.as_deref(), cfg)
}

/// Extremal operators of the class with bounds `λ ≤ K(y)|y|^{n+2s} ≤ Λ`:
/// `M⁺u = ½∫{Λ(−δ²)_+ − λ(−δ²)_−}|y|^{-n-2s}`, and `M⁻` with the roles swapped.
pub fn apply_extremal<U: ScalarField + ?Sized>(
    lambda: f64,
    big_lambda: f64,
    which: Extremal,
    s: f64,
    u: &U,
    x: &[f64],
    cfg: &QuadConfig,
) -> Result<Evaluation> {
    crate::error::check_order(s)?;
    if !(lambda > 0.0 && big_lambda >= lambda) {
        return Err(Error::Parameter(format!(
            "need 0 < lambda <= Lambda, got ({lambda}, {big_lambda})"
        )));
    }
    let n = u.dim();
    crate::error::check_dim(n)?;
    // with δ² = 2u(x) − u(x+y) − u(x−y), (u(x+y)+u(x−y)−2u(x))_± = (−δ²)_±
    let resp = match which {
        Extremal::Plus => Response {
            pos: -lambda,
            neg: -big_lambda,
        },
        Extremal::Minus => Response {
            pos: -big_lambda,
            neg: -lambda,
        },
    };
    let dirs = power_directions(n, cfg.angular_order);
    let coarse = needs_angular_check(n, cfg, u).map(|o| power_directions(n, o));
    run(u, x, s, resp, &dirs, coarse.as_deref(), cfg)
}

/// `a_{n,s} ∫_{|z|>r} r^{2s} u(z) / ((|z|² − r²)^s |z|^n) dz`, the mean-value
/// integral over the exterior of `B_r(0)`.
///
/// In the variable `W = 1 − r²/|z|²` the radial weight is the Beta(1−s, s)
/// density, and the angular part is uniform.
pub fn mean_value<U: ScalarField + ?Sized>(u: &U, r: f64, n: usize, s: f64, cfg: &QuadConfig) -> Result<Evaluation> {
    crate::error::check_order(s)?;
    crate::error::check_dim(n)?;
    cfg.validate()?;
    if u.dim() != n {
        return Err(Error::Parameter("field dimension differs from n".into()));
    }
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radius {r} must be positive")));
    }
    let growth = u.growth();
    if growth.tau >= 2.0 * s {
        return Err(Error::NonIntegrableTail {
            tau: growth.tau,
            two_s: 2.0 * s,
        });
    }
    let log_norm = ln_beta(1.0 - s, s)?;
    let tol = cfg.target_rel_err.max(1e-11);
    let along = |theta: &[f64; 3]| -> Quad {
        let mut bp = Vec::new();
        let origin = [0.0; 3];
        u.breakpoints(&origin[..n], &theta[..n], &mut bp);
        let mut cuts = vec![0.0, 1.0];
        for t in bp {
            if t > r {
                let w = 1.0 - (r / t).powi(2);
                if w > 0.0 && w < 1.0 {
                    cuts.push(w);
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut acc = Quad::ZERO;
        for c in cuts.windows(2) {
            let (a, b) = (c[0], c[1]);
            let q = tanh_sinh(
                |w, d| {
                    let (lo, hi) = if w - a < b - w {
                        (if a == 0.0 { d } else { w }, 1.0 - w)
                    } else {
                        (w, if b == 1.0 { d } else { 1.0 - w })
                    };
                    let density = (-s * lo.ln() + (s - 1.0) * hi.ln() - log_norm).exp();
                    let radius = r / hi.sqrt();
                    let mut p = [0.0; 3];
                    let mut m = [0.0; 3];
                    for i in 0..n {
                        p[i] = radius * theta[i];
                        m[i] = -radius * theta[i];
                    }
                    density * 0.5 * (u.eval(&p[..n]) + u.eval(&m[..n]))
                },
                a,
                b,
                tol,
            );
            acc = acc.add(q);
        }
        acc
    };
    let average = |order: usize| -> (f64, f64, bool) {
        let rule = hemisphere_rule(n, order);
        let total_w: f64 = rule.iter().map(|r| r.1).sum();
        let parts: Vec<Quad> = rule.par_iter().map(|(t, _)| along(t)).collect();
        rule.iter().zip(&parts).fold((0.0, 0.0, true), |(v, e, ok), ((_, w), q)| {
            (v + w * q.value / total_w, e + w * q.err / total_w, ok && q.converged)
        })
    };
    let (value, mut err, mut ok) = average(cfg.angular_order);
    if n >= 2 {
        let (v2, _, _) = average((cfg.angular_order / 2).max(1));
        err += (value - v2).abs();
    }
    let target = tol * value.abs().max(growth.m).max(f64::MIN_POSITIVE);
    ok &= err <= target.max(1e3 * tol * value.abs());
    Ok(Evaluation {
        value,
        err_est: err,
        accuracy_met: ok,
    })
}
