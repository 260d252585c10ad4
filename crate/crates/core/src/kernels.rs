//! Symmetric Lévy kernels of order 2s: the fractional Laplacian, stable
//! operators with atomic spectral measure, and densities comparable to
//! `|y|^{-n-2s}`. Fourier symbols and ellipticity certificates live here.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, check_order, Error, Result};
use crate::quadrature::{adaptive, tanh_sinh, Quad};
use crate::special_math::{constants, gamma};

type DensityFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A pointwise kernel density `y ↦ K(y)`.
#[derive(Clone)]
pub struct Density {
    name: String,
    f: Arc<DensityFn>,
}

impl Density {
    pub fn new(name: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Density {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    /// `factor · |y|^{-n-2s}`.
    pub fn homogeneous(n: usize, s: f64, factor: f64) -> Self {
        let p = -(n as f64) - 2.0 * s;
        Density::new(format!("homogeneous({factor})"), move |y| {
            factor * norm(y).powf(p)
        })
    }

    /// `factor · (1 + ½ sin log|y|) · |y|^{-n-2s}`: radial, with the ratio to
    /// the homogeneous kernel oscillating across scales in `[factor/2, 3factor/2]`.
    pub fn oscillating(n: usize, s: f64, factor: f64) -> Self {
        let p = -(n as f64) - 2.0 * s;
        Density::new(format!("oscillating({factor})"), move |y| {
            let r = norm(y);
            factor * (1.0 + 0.5 * r.ln().sin()) * r.powf(p)
        })
    }

    /// `factor · (1 + ½(2y_1²/|y|² − 1)) · |y|^{-n-2s}`: even, non-radial.
    pub fn anisotropic(n: usize, s: f64, factor: f64) -> Self {
        let p = -(n as f64) - 2.0 * s;
        Density::new(format!("anisotropic({factor})"), move |y| {
            let r2: f64 = y.iter().map(|v| v * v).sum();
            let c = y[0] * y[0] / r2;
            factor * (1.0 + 0.5 * (2.0 * c - 1.0)) * r2.sqrt().powf(p)
        })
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        (self.f)(y)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Density({})", self.name)
    }
}

/// One atom `w δ_θ` of a spectral measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub direction: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub enum Kernel {
    FractionalLaplacian {
        n: usize,
        s: f64,
    },
    /// Stable operator with spectral weights already normalized, so that the
    /// symbol is `½ Σ w_j |ξ·θ_j|^{2s}`.
    Stable {
        n: usize,
        s: f64,
        atoms: Vec<Atom>,
    },
    Comparable {
        n: usize,
        s: f64,
        lambda: f64,
        big_lambda: f64,
        density: Density,
    },
}

/// `∫_0^∞ (1 - cos t) t^{-1-2s} dt = π / (2 Γ(1+2s) sin πs)`.
pub fn one_dim_symbol_constant(s: f64) -> f64 {
    PI / (2.0 * gamma(1.0 + 2.0 * s).expect("positive") * (PI * s).sin())
}

pub(crate) fn norm(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Kernel {
    pub fn fractional_laplacian(n: usize, s: f64) -> Result<Kernel> {
        check_dim(n)?;
        check_order(s)?;
        Ok(Kernel::FractionalLaplacian { n, s })
    }

    /// Stable kernel from atoms. Directions must be unit vectors and the
    /// measure must be invariant under `θ ↦ −θ`.
    pub fn stable(n: usize, s: f64, atoms: Vec<Atom>) -> Result<Kernel> {
        check_dim(n)?;
        check_order(s)?;
        if atoms.is_empty() {
            return Err(Error::Parameter("spectral measure has no atoms".into()));
        }
        for a in &atoms {
            if a.direction.len() != n {
                return Err(Error::Parameter(format!(
                    "atom direction has length {}, expected {n}",
                    a.direction.len()
                )));
            }
            if (norm(&a.direction) - 1.0).abs() > 1e-12 {
                return Err(Error::Parameter("atom direction is not a unit vector".into()));
            }
            if !(a.weight > 0.0 && a.weight.is_finite()) {
                return Err(Error::Parameter(format!("atom weight {} must be positive", a.weight)));
            }
        }
        for a in &atoms {
            let found = atoms.iter().any(|b| {
                a.direction
                    .iter()
                    .zip(&b.direction)
                    .all(|(x, y)| (x + y).abs() < 1e-12)
                    && (a.weight - b.weight).abs() <= 1e-12 * a.weight
            });
            if !found {
                return Err(Error::Parameter(
                    "spectral measure is not symmetric under θ ↦ −θ".into(),
                ));
            }
        }
        Ok(Kernel::Stable { n, s, atoms })
    }

    /// Unit weights on `±e_1, …, ±e_n`; symbol `Σ |ξ_i|^{2s}`.
    pub fn stable_axis(n: usize, s: f64) -> Result<Kernel> {
        let mut atoms = Vec::with_capacity(2 * n);
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let mut d = vec![0.0; n];
                d[i] = sign;
                atoms.push(Atom {
                    direction: d,
                    weight: 1.0,
                });
            }
        }
        Kernel::stable(n, s, atoms)
    }

    /// Kernel with density satisfying `λ|y|^{-n-2s} ≤ K(y) ≤ Λ|y|^{-n-2s}`.
    /// Symmetry and the bounds are checked on a fixed set of sample points.
    pub fn comparable(n: usize, s: f64, lambda: f64, big_lambda: f64, density: Density) -> Result<Kernel> {
        check_dim(n)?;
        check_order(s)?;
        if !(lambda > 0.0 && big_lambda >= lambda && big_lambda.is_finite()) {
            return Err(Error::Parameter(format!(
                "need 0 < lambda <= Lambda, got ({lambda}, {big_lambda})"
            )));
        }
        let p = n as f64 + 2.0 * s;
        for y in sample_points(n) {
            let k = density.eval(&y);
            let neg: Vec<f64> = y.iter().map(|v| -v).collect();
            let k_neg = density.eval(&neg);
            if !(k.is_finite() && (k - k_neg).abs() <= 1e-12 * k.abs().max(1e-300)) {
                return Err(Error::Parameter(format!("density is not even at y = {y:?}")));
            }
            let scaled = k * norm(&y).powf(p);
            let slack = 1e-12 * big_lambda;
            if scaled < lambda - slack || scaled > big_lambda + slack {
                return Err(Error::Parameter(format!(
                    "density violates comparability bounds at y = {y:?}: K|y|^(n+2s) = {scaled}"
                )));
            }
        }
        Ok(Kernel::Comparable {
            n,
            s,
            lambda,
            big_lambda,
            density,
        })
    }

    /// Build from flat `key=value` parameters: `variant` (fraclap, stable,
    /// comparable), `n`, `s`; for stable `atoms` (`axis` or
    /// `x1,x2:w;...`); for comparable `lambda`, `Lambda`, and `density`
    /// (homogeneous, oscillating, anisotropic) with optional `scale`.
    pub fn from_params(params: &BTreeMap<String, String>) -> Result<Kernel> {
        let get = |k: &str| params.get(k).map(String::as_str);
        let num = |k: &str, default: Option<f64>| -> Result<f64> {
            match get(k) {
                Some(v) => v
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Usage(format!("{k}={v} is not a number"))),
                None => default.ok_or_else(|| Error::Usage(format!("missing parameter {k}"))),
            }
        };
        let n = num("n", Some(1.0))? as usize;
        let s = num("s", None)?;
        match get("variant").or(get("kernel")).unwrap_or("fraclap") {
            "fraclap" | "fractional_laplacian" => Kernel::fractional_laplacian(n, s),
            "stable" => match get("atoms").unwrap_or("axis") {
                "axis" => Kernel::stable_axis(n, s),
                list => {
                    let mut atoms = Vec::new();
                    for item in list.split(';').filter(|t| !t.trim().is_empty()) {
                        let (dir, w) = item
                            .split_once(':')
                            .ok_or_else(|| Error::Usage(format!("atom '{item}' needs dir:weight")))?;
                        let direction = dir
                            .split(',')
                            .map(|v| v.trim().parse::<f64>())
                            .collect::<std::result::Result<Vec<_>, _>>()
                            .map_err(|_| Error::Usage(format!("bad atom direction '{dir}'")))?;
                        let weight = w
                            .trim()
                            .parse::<f64>()
                            .map_err(|_| Error::Usage(format!("bad atom weight '{w}'")))?;
                        atoms.push(Atom { direction, weight });
                    }
                    Kernel::stable(n, s, atoms)
                }
            },
            "comparable" => {
                check_dim(n)?;
                check_order(s)?;
                let scale = num("scale", Some(1.0))?;
                let (density, lo, hi) = match get("density").unwrap_or("homogeneous") {
                    "homogeneous" => (Density::homogeneous(n, s, scale), scale, scale),
                    "oscillating" => (Density::oscillating(n, s, scale), 0.5 * scale, 1.5 * scale),
                    "anisotropic" => (Density::anisotropic(n, s, scale), 0.5 * scale, 1.5 * scale),
                    other => return Err(Error::Usage(format!("unknown density '{other}'"))),
                };
                let lambda = num("lambda", Some(lo))?;
                let big_lambda = num("Lambda", Some(hi))?;
                Kernel::comparable(n, s, lambda, big_lambda, density)
            }
            other => Err(Error::Usage(format!("unknown kernel variant '{other}'"))),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Kernel::FractionalLaplacian { n, .. }
            | Kernel::Stable { n, .. }
            | Kernel::Comparable { n, .. } => *n,
        }
    }

    pub fn order(&self) -> f64 {
        match self {
            Kernel::FractionalLaplacian { s, .. }
            | Kernel::Stable { s, .. }
            | Kernel::Comparable { s, .. } => *s,
        }
    }

    /// Pointwise density `K(y)`.
    pub fn density(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.dim() {
            return Err(Error::Parameter(format!(
                "point has dimension {}, kernel has {}",
                y.len(),
                self.dim()
            )));
        }
        let r = norm(y);
        if r == 0.0 {
            return Err(Error::Singularity);
        }
        match self {
            Kernel::FractionalLaplacian { n, s } => {
                let c = constants(*n, *s)?.c_ns;
                Ok(c * r.powf(-(*n as f64) - 2.0 * s))
            }
            Kernel::Stable { .. } => Err(Error::UnsupportedDensity),
            Kernel::Comparable { density, .. } => Ok(density.eval(y)),
        }
    }

    /// Fourier symbol `A(ξ) = ∫ (1 - cos(y·ξ)) K(dy)`.
    pub fn symbol(&self, xi: &[f64]) -> Result<f64> {
        self.symbol_quad(xi).map(|q| q.value)
    }

    /// Symbol with its quadrature error estimate (zero for closed forms).
    pub fn symbol_quad(&self, xi: &[f64]) -> Result<Quad> {
        if xi.len() != self.dim() {
            return Err(Error::Parameter(format!(
                "frequency has dimension {}, kernel has {}",
                xi.len(),
                self.dim()
            )));
        }
        let m = norm(xi);
        if m == 0.0 {
            return Ok(Quad::ZERO);
        }
        match self {
            Kernel::FractionalLaplacian { s, .. } => Ok(exact(m.powf(2.0 * s))),
            Kernel::Stable { s, atoms, .. } => {
                let v = 0.5
                    * atoms
                        .iter()
                        .map(|a| a.weight * dot(xi, &a.direction).abs().powf(2.0 * s))
                        .sum::<f64>();
                Ok(exact(v))
            }
            Kernel::Comparable {
                n,
                s,
                lambda,
                big_lambda,
                density,
            } => comparable_symbol(*n, *s, *lambda, *big_lambda, density, xi, 1e-7),
        }
    }

    /// Empirical `(min, max)` of `A(ξ)/|ξ|^{2s}` over `samples` directions and
    /// magnitudes `|ξ| = 2^k`, `k = -4..=4`.
    pub fn ellipticity_certificate(&self, samples: usize) -> Result<(f64, f64)> {
        let n = self.dim();
        let s = self.order();
        let dirs = certificate_directions(n, samples.max(1));
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for d in &dirs {
            for k in -4..=4 {
                let t = 2f64.powi(k);
                let xi: Vec<f64> = d.iter().map(|v| v * t).collect();
                let ratio = self.symbol(&xi)? / t.powf(2.0 * s);
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
        }
        Ok((lo, hi))
    }
}

fn exact(v: f64) -> Quad {
    Quad {
        value: v,
        err: 0.0,
        evals: 1,
        converged: true,
    }
}

/// Deterministic points used to audit a density: several radii along a few
/// directions, including non-axis ones.
fn sample_points(n: usize) -> Vec<Vec<f64>> {
    let dirs: Vec<Vec<f64>> = match n {
        1 => vec![vec![1.0]],
        2 => (0..7)
            .map(|j| {
                let a = 0.37 + j as f64 * PI / 7.0;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => certificate_directions(3, 9),
    };
    let mut out = Vec::new();
    for d in &dirs {
        for k in -6..=6 {
            let r = 1.7f64.powi(k);
            out.push(d.iter().map(|v| v * r).collect());
        }
    }
    out
}

fn certificate_directions(n: usize, samples: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0]],
        2 => (0..samples)
            .map(|j| {
                let a = j as f64 * PI / samples as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => {
            // Fibonacci points on the upper hemisphere (A is even in ξ)
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..samples)
                .map(|j| {
                    let z = (j as f64 + 0.5) / samples as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = golden * j as f64;
                    vec![r * a.cos(), r * a.sin(), z]
                })
                .collect()
        }
    }
}

/// `∫_0^∞ (1 − cos(a r)) k(r) dr` where `lo ≤ k(r) r^{1+2s} ≤ hi`.
///
/// In `t = a r` the integral is split into a small-`t` piece (replaced by the
/// homogeneous extension of `k`, with the comparability gap as error bound),
/// dyadic panels up to 1, full periods up to `T = 2πP`, and a tail where the
/// oscillatory part is removed by integration by parts.
pub(crate) fn radial_symbol<F: Fn(f64) -> f64>(k: &F, a: f64, s: f64, lo: f64, hi: f64, rel_tol: f64) -> Quad {
    let kk = |t: f64| k(t / a) / a;
    let a2s = a.powf(2.0 * s);
    let scale = lo * a2s * one_dim_symbol_constant(s);
    let target = rel_tol * scale;

    let small_t_integral = |t0: f64| {
        // ∫_0^{t0} (1 − cos t) t^{-1-2s} dt by its power series
        let e = 2.0 - 2.0 * s;
        t0.powf(e) * (1.0 / (2.0 * e) - t0 * t0 / (24.0 * (e + 2.0)) + t0.powi(4) / (720.0 * (e + 4.0)))
    };
    let mut t0 = 1.0f64;
    let mut halvings = 0;
    while (hi - lo) * a2s * small_t_integral(t0) > 0.1 * target && halvings < 1000 {
        t0 *= 0.5;
        halvings += 1;
    }
    if hi == lo {
        t0 = 2f64.powi(-20);
        halvings = 20;
    }
    let head_value = kk(t0) * t0.powf(1.0 + 2.0 * s) * small_t_integral(t0);
    let mut total = Quad {
        value: head_value,
        err: (hi - lo) * a2s * small_t_integral(t0),
        evals: 1,
        converged: true,
    };

    let integrand = |t: f64| (1.0 - t.cos()) * kk(t);
    let integrand_small = |t: f64| {
        // 1 − cos t = 2 sin²(t/2) avoids cancellation for small t
        let h = (0.5 * t).sin();
        2.0 * h * h * kk(t)
    };
    let periods = 64usize;
    let panels = halvings + periods + 1;
    let per_panel = 0.1 * target / panels as f64;
    let mut left = t0;
    for _ in 0..halvings {
        let right = 2.0 * left;
        total = total.add(adaptive(integrand_small, left, right, per_panel, 1e-13, 50));
        left = right;
    }
    total = total.add(adaptive(integrand_small, 1.0, 2.0 * PI, per_panel, 1e-13, 50));
    for j in 1..periods {
        let a0 = 2.0 * PI * j as f64;
        total = total.add(adaptive(integrand, a0, a0 + 2.0 * PI, per_panel, 1e-13, 50));
    }
    let big_t = 2.0 * PI * periods as f64;
    // ∫_T^∞ k̃ through t = T/(1−v)
    let tail = tanh_sinh(
        |v, d| {
            let one_minus = if v > 0.5 { d } else { 1.0 - v };
            kk(big_t / one_minus) * big_t / (one_minus * one_minus)
        },
        0.0,
        1.0,
        1e-11,
    );
    // ∫_T^∞ cos t k̃(t) dt = −k̃'(T) + O(k̃'''(T)) since sin T = 0
    let h = 1e-3 * big_t;
    let dk = (kk(big_t + h) - kk(big_t - h)) / (2.0 * h);
    let d3_scale = hi * a2s * big_t.powf(-4.0 - 2.0 * s) * 30.0;
    total = total.add(Quad {
        value: tail.value + dk,
        err: tail.err + d3_scale,
        evals: tail.evals + 2,
        converged: tail.converged,
    });
    total.converged = total.converged && total.err <= target.max(1e-300) * 1.0001 + 0.5 * rel_tol * total.value.abs();
    total
}

fn comparable_symbol(
    n: usize,
    s: f64,
    lambda: f64,
    big_lambda: f64,
    density: &Density,
    xi: &[f64],
    rel_tol: f64,
) -> Result<Quad> {
    let m = norm(xi);
    let e: Vec<f64> = xi.iter().map(|v| v / m).collect();
    let nf = n as f64;
    // radial density along θ: K(rθ) r^{n-1}
    let radial = |theta: &[f64], a: f64| -> Quad {
        let theta = theta.to_vec();
        let k = move |r: f64| {
            let mut y = [0.0; 3];
            for (yi, ti) in y.iter_mut().zip(&theta) {
                *yi = r * ti;
            }
            density.eval(&y[..n]) * r.powf(nf - 1.0)
        };
        if a == 0.0 {
            return Quad::ZERO;
        }
        radial_symbol(&k, a, s, lambda, big_lambda, 0.1 * rel_tol)
    };
    let mut ok = true;
    let value = match n {
        1 => {
            let q = radial(&[1.0], m);
            ok &= q.converged;
            2.0 * q.value
        }
        2 => {
            let perp = [-e[1], e[0]];
            let q = tanh_sinh(
                |phi, d| {
                    let (c, sn) = (phi.cos(), phi.sin());
                    let theta = [c * e[0] + sn * perp[0], c * e[1] + sn * perp[1]];
                    // distance to ±π/2 gives cos φ without cancellation
                    let a = m * if phi.abs() > 0.25 * PI { d.sin() } else { c };
                    let q = radial(&theta, a);
                    ok &= q.converged;
                    q.value
                },
                -0.5 * PI,
                0.5 * PI,
                rel_tol,
            );
            ok &= q.converged;
            2.0 * q.value
        }
        _ => {
            let (u, v) = orthonormal_complement(&e);
            let nb = 16;
            let q = tanh_sinh(
                |alpha, d| {
                    let (ca, sa) = if alpha > 0.25 * PI {
                        (d.sin(), alpha.sin())
                    } else {
                        (alpha.cos(), alpha.sin())
                    };
                    let mut acc = 0.0;
                    for j in 0..nb {
                        let beta = 2.0 * PI * j as f64 / nb as f64;
                        let (cb, sb) = (beta.cos(), beta.sin());
                        let theta: Vec<f64> =
                            (0..3).map(|i| ca * e[i] + sa * (cb * u[i] + sb * v[i])).collect();
                        let q = radial(&theta, m * ca);
                        ok &= q.converged;
                        acc += q.value;
                    }
                    acc * 2.0 * PI / nb as f64 * sa
                },
                0.0,
                0.5 * PI,
                rel_tol,
            );
            ok &= q.converged;
            2.0 * q.value
        }
    };
    if !ok || !value.is_finite() {
        return Err(Error::NumericalFailure {
            what: "comparable-kernel symbol".into(),
            achieved: rel_tol,
        });
    }
    Ok(Quad {
        value,
        err: rel_tol * value.abs(),
        evals: 0,
        converged: true,
    })
}

pub(crate) fn orthonormal_complement(e: &[f64]) -> ([f64; 3], [f64; 3]) {
    let pick = if e[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = dot(&pick, e);
    let mut u = [pick[0] - d * e[0], pick[1] - d * e[1], pick[2] - d * e[2]];
    let nu = norm(&u);
    u.iter_mut().for_each(|x| *x /= nu);
    let v = [
        e[1] * u[2] - e[2] * u[1],
        e[2] * u[0] - e[0] * u[2],
        e[0] * u[1] - e[1] * u[0],
    ];
    (u, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre;

    #[test]
    fn fractional_laplacian_density_examples() {
        let k = Kernel::fractional_laplacian(1, 0.5).unwrap();
        assert!((k.density(&[1.0]).unwrap() - 1.0 / PI).abs() < 1e-15);
        assert!((k.density(&[2.0]).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert_eq!(k.density(&[0.0]), Err(Error::Singularity));
    }

    #[test]
    fn comparable_scaled_density() {
        let c = constants(1, 0.5).unwrap().c_ns;
        let k = Kernel::comparable(1, 0.5, 2.0 * c, 2.0 * c, Density::homogeneous(1, 0.5, 2.0 * c)).unwrap();
        assert!((k.density(&[1.0]).unwrap() - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn stable_has_no_density() {
        let k = Kernel::stable_axis(2, 0.5).unwrap();
        assert_eq!(k.density(&[1.0, 0.0]), Err(Error::UnsupportedDensity));
    }

    #[test]
    fn validation_rejects_bad_kernels() {
        assert!(Kernel::stable(
            1,
            0.5,
            vec![Atom {
                direction: vec![1.0],
                weight: 1.0
            }]
        )
        .is_err());
        assert!(Kernel::comparable(1, 0.5, 1.0, 1.2, Density::homogeneous(1, 0.5, 2.0)).is_err());
        let odd = Density::new("odd", |y: &[f64]| (1.0 + 0.1 * y[0].signum()) * y[0].abs().powf(-2.0));
        assert!(Kernel::comparable(1, 0.5, 0.5, 2.0, odd).is_err());
        assert!(Kernel::fractional_laplacian(4, 0.5).is_err());
        assert!(Kernel::fractional_laplacian(1, 1.0).is_err());
    }

    #[test]
    fn closed_form_symbols() {
        let k = Kernel::fractional_laplacian(2, 0.3).unwrap();
        assert!((k.symbol(&[3.0, 4.0]).unwrap() - 5f64.powf(0.6)).abs() < 1e-14);
        assert_eq!(k.symbol(&[0.0, 0.0]).unwrap(), 0.0);
        let k = Kernel::stable_axis(3, 0.7).unwrap();
        let xi = [0.5, -2.0, 1.5];
        let expect: f64 = xi.iter().map(|v: &f64| v.abs().powf(1.4)).sum();
        assert!((k.symbol(&xi).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn stable_axis_certificate_matches_direction_scan() {
        let k = Kernel::stable_axis(2, 0.5).unwrap();
        let (lo, hi) = k.ellipticity_certificate(64).unwrap();
        // oracle: dense scan of |cos φ| + |sin φ| over the circle
        let scan: Vec<f64> = (0..100_000)
            .map(|j| {
                let a = j as f64 * 2.0 * PI / 100_000.0;
                a.cos().abs() + a.sin().abs()
            })
            .collect();
        let smin = scan.iter().cloned().fold(f64::INFINITY, f64::min);
        let smax = scan.iter().cloned().fold(0.0, f64::max);
        assert!((lo - smin).abs() < 1e-9 && (lo - 1.0).abs() < 1e-12);
        assert!((hi - smax).abs() < 1e-9 && (hi - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn fractional_laplacian_certificate_is_one() {
        let (lo, hi) = Kernel::fractional_laplacian(3, 0.4).unwrap().ellipticity_certificate(10).unwrap();
        assert!((lo - 1.0).abs() < 1e-10 && (hi - 1.0).abs() < 1e-10);
    }

    #[test]
    fn one_dim_constant_matches_quadrature() {
        // oracle: ∫_0^∞ (1−cos t) t^{-1-2s} with GL on a log grid plus tails
        for &s in &[0.25, 0.5, 0.75] {
            let (x, w) = gauss_legendre(40);
            let mut acc = 0.0;
            let mut a = 1e-8f64;
            while a < 4000.0 {
                let b = (2.0 * a).min(a + 1.0);
                for (xi, wi) in x.iter().zip(&w) {
                    let t = 0.5 * (b - a) * xi + 0.5 * (a + b);
                    acc += 0.5 * (b - a) * wi * 2.0 * (0.5 * t).sin().powi(2) * t.powf(-1.0 - 2.0 * s);
                }
                a = b;
            }
            let e = 2.0 - 2.0 * s;
            acc += 1e-8f64.powf(e) / (2.0 * e);
            // ∫_A^∞ (1−cos t)t^{-1-2s} ≈ A^{-2s}/(2s) (cos part O(A^{-1-2s}))
            acc += a.powf(-2.0 * s) / (2.0 * s);
            let exact = one_dim_symbol_constant(s);
            assert!((acc - exact).abs() / exact < 2e-4, "s={s} {acc} {exact}");
        }
    }

    #[test]
    fn symbol_normalization_identity() {
        for &(n, s) in &[(1usize, 0.25), (1, 0.5), (1, 0.75), (2, 0.5)] {
            let k = Kernel::comparable(n, s, 1.0, 1.0, Density::homogeneous(n, s, 1.0)).unwrap();
            let mut xi = vec![0.0; n];
            xi[0] = 1.0;
            let v = k.symbol(&xi).unwrap();
            let c = constants(n, s).unwrap().c_ns;
            assert!((v * c - 1.0).abs() < 1e-6, "n={n} s={s} got {}", v * c);
        }
    }

    #[test]
    fn comparable_symbol_symmetric_and_bounded() {
        let s = 0.5;
        let c = constants(2, s).unwrap().c_ns;
        let k = Kernel::comparable(2, s, 0.5 * c, 1.5 * c, Density::anisotropic(2, s, c)).unwrap();
        let xi = [0.7, -1.3];
        let a = k.symbol(&xi).unwrap();
        let b = k.symbol(&[-0.7, 1.3]).unwrap();
        assert!((a - b).abs() < 1e-8 * a);
        let m = norm(&xi).powf(2.0 * s);
        assert!(a > 0.5 * m && a < 1.5 * m);
    }

    #[test]
    fn oscillating_certificate_within_bounds() {
        let s = 0.5;
        let c = constants(1, s).unwrap().c_ns;
        let k = Kernel::comparable(1, s, 0.5 * c, 1.5 * c, Density::oscillating(1, s, c)).unwrap();
        let (lo, hi) = k.ellipticity_certificate(1).unwrap();
        assert!(lo >= 0.5 && hi <= 2.0 && lo < hi, "({lo}, {hi})");
    }

    #[test]
    fn params_roundtrip() {
        let mut p = BTreeMap::new();
        p.insert("variant".to_string(), "stable".to_string());
        p.insert("n".to_string(), "2".to_string());
        p.insert("s".to_string(), "0.5".to_string());
        p.insert("atoms".to_string(), "1,0:2;-1,0:2".to_string());
        let k = Kernel::from_params(&p).unwrap();
        // ½(2·2 + 2·2) with s = ½
        assert!((k.symbol(&[2.0, 5.0]).unwrap() - 4.0).abs() < 1e-14);
        p.insert("variant".to_string(), "comparable".to_string());
        p.insert("density".to_string(), "oscillating".to_string());
        assert!(matches!(Kernel::from_params(&p).unwrap(), Kernel::Comparable { .. }));
        p.insert("variant".to_string(), "bogus".to_string());
        assert!(Kernel::from_params(&p).is_err());
    }
}
