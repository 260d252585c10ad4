//! Closed-form objects for `(-Δ)^s`: explicit s-harmonic functions, the
//! torsion function of the ball, fundamental solutions, Poisson kernels, the
//! mean-value weight and heat kernels.

mod heat;

use std::f64::consts::PI;
use std::sync::Arc;

pub use heat::{heat_kernel, semigroup_error, HeatKernel1D};

use crate::error::{check_dim, check_order, Error, Result};
use crate::field::{C2Bound, FarField, Growth, ScalarField};
use crate::kernels::norm;
use crate::special_math::{beta_inc_reg, constants, gamma, ln_beta};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `(x·e + offset)_+^s`, s-harmonic in `{x·e > −offset}`.
#[derive(Debug, Clone)]
pub struct HalfspaceHarmonic {
    pub s: f64,
    pub e: Vec<f64>,
    pub offset: f64,
}

impl ScalarField for HalfspaceHarmonic {
    fn dim(&self) -> usize {
        self.e.len()
    }
    fn eval(&self, x: &[f64]) -> f64 {
        (dot(x, &self.e) + self.offset).max(0.0).powf(self.s)
    }
    fn c2_bound(&self, x: &[f64]) -> Option<C2Bound> {
        let d = dot(x, &self.e) + self.offset;
        if d > 0.0 {
            let s = self.s;
            Some(C2Bound {
                radius: 0.5 * d,
                constant: s * (1.0 - s) * (0.5 * d).powf(s - 2.0),
            })
        } else if d < 0.0 {
            Some(C2Bound {
                radius: -d,
                constant: 0.0,
            })
        } else {
            None
        }
    }
    fn growth(&self) -> Growth {
        Growth {
            m: 1.0 + self.offset.abs().powf(self.s),
            tau: self.s,
        }
    }
    fn breakpoints(&self, x: &[f64], theta: &[f64], out: &mut Vec<f64>) {
        let a = dot(theta, &self.e);
        if a != 0.0 {
            out.push(((dot(x, &self.e) + self.offset) / a).abs());
        }
    }
}

/// `(1 − |x|²)_+^s`.
#[derive(Debug, Clone, Copy)]
pub struct BallTorsion {
    pub n: usize,
    pub s: f64,
}

impl ScalarField for BallTorsion {
    fn dim(&self) -> usize {
        self.n
    }
    fn eval(&self, x: &[f64]) -> f64 {
        (1.0 - dot(x, x)).max(0.0).powf(self.s)
    }
    fn c2_bound(&self, x: &[f64]) -> Option<C2Bound> {
        let r = norm(x);
        let s = self.s;
        if r < 1.0 {
            // ∂_θθ g(|z|²) = 2g'(q) + 4g''(q)(θ·z)², g(q) = (1−q)^s, over |z| ≤ m
            let rho = 0.5 * (1.0 - r);
            let m = r + rho;
            let q = 1.0 - m * m;
            Some(C2Bound {
                radius: rho,
                constant: 2.0 * s * q.powf(s - 1.0) + 4.0 * s * (1.0 - s) * m * m * q.powf(s - 2.0),
            })
        } else if r > 1.0 {
            Some(C2Bound {
                radius: r - 1.0,
                constant: 0.0,
            })
        } else {
            None
        }
    }
    fn growth(&self) -> Growth {
        Growth { m: 1.0, tau: 0.0 }
    }
    fn far_field(&self) -> FarField {
        FarField::ConstantOutside {
            radius: 1.0,
            value: 0.0,
        }
    }
    fn breakpoints(&self, x: &[f64], theta: &[f64], out: &mut Vec<f64>) {
        // |x ± tθ| = 1  ⇔  t² ± 2tb + |x|² − 1 = 0
        let b = dot(x, theta);
        let c = dot(x, x) - 1.0;
        let disc = b * b - c;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            for t in [-b + sq, -b - sq, b + sq, b - sq] {
                if t > 0.0 {
                    out.push(t);
                }
            }
        }
    }
}

/// `κ|x|^{2s−n}` for n > 2s, or `−(1/π) log|x|` for n = 1, s = ½.
#[derive(Debug, Clone, Copy)]
pub struct FundamentalSolution {
    pub n: usize,
    pub s: f64,
    kappa: Option<f64>,
}

impl ScalarField for FundamentalSolution {
    fn dim(&self) -> usize {
        self.n
    }
    fn eval(&self, x: &[f64]) -> f64 {
        let r = norm(x);
        match self.kappa {
            Some(k) => k * r.powf(2.0 * self.s - self.n as f64),
            None => -r.ln() / PI,
        }
    }
    fn c2_bound(&self, x: &[f64]) -> Option<C2Bound> {
        let r = norm(x);
        if r == 0.0 {
            return None;
        }
        let half = 0.5 * r;
        let constant = match self.kappa {
            // ∂_θθ |z|^p = p|z|^{p−2}(1 + (p−2)(θ·ẑ)²)
            Some(k) => {
                let p = 2.0 * self.s - self.n as f64;
                k * p.abs() * (1.0 + (p - 2.0).abs()) * half.powf(p - 2.0)
            }
            None => half.powi(-2) / PI,
        };
        Some(C2Bound {
            radius: half,
            constant,
        })
    }
    fn growth(&self) -> Growth {
        match self.kappa {
            Some(k) => Growth { m: k, tau: 0.0 },
            // log y ≤ y^τ/(eτ) with τ = ¼
            None => Growth { m: 0.5, tau: 0.25 },
        }
    }
    fn breakpoints(&self, x: &[f64], _theta: &[f64], out: &mut Vec<f64>) {
        out.push(norm(x));
    }
}

#[derive(Debug, Clone)]
pub enum OracleKind {
    HalfspaceHarmonic,
    BallTorsion { q: f64 },
    FundamentalSolution,
}

/// A field together with the exact value of `(-Δ)^s u` where it is known.
#[derive(Clone)]
pub struct OracleField {
    pub name: String,
    pub n: usize,
    pub s: f64,
    pub kind: OracleKind,
    pub field: Arc<dyn ScalarField>,
}

impl std::fmt::Debug for OracleField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "OracleField({}, n={}, s={})", self.name, self.n, self.s)
    }
}

impl OracleField {
    pub fn in_validity_region(&self, x: &[f64]) -> bool {
        match &self.kind {
            OracleKind::HalfspaceHarmonic => self.field.c2_bound(x).is_some_and(|b| b.constant > 0.0),
            OracleKind::BallTorsion { .. } => norm(x) < 1.0,
            OracleKind::FundamentalSolution => norm(x) > 0.0,
        }
    }

    /// Exact `(-Δ)^s u(x)` on the validity region.
    pub fn known_operator_value(&self, x: &[f64]) -> Option<f64> {
        if !self.in_validity_region(x) {
            return None;
        }
        Some(match &self.kind {
            OracleKind::BallTorsion { q } => *q,
            _ => 0.0,
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.field.eval(x)
    }
}

/// `(x·e)_+^s` for a unit vector `e`.
pub fn halfspace_harmonic(n: usize, s: f64, e: &[f64]) -> Result<OracleField> {
    shifted_halfspace_harmonic(n, s, e, 0.0)
}

/// `(x·e + offset)_+^s`, harmonic on `{x·e > −offset}`.
pub fn shifted_halfspace_harmonic(n: usize, s: f64, e: &[f64], offset: f64) -> Result<OracleField> {
    check_dim(n)?;
    check_order(s)?;
    if e.len() != n || (norm(e) - 1.0).abs() > 1e-12 {
        return Err(Error::Parameter("e must be a unit vector in ℝⁿ".into()));
    }
    Ok(OracleField {
        name: "halfspace_harmonic".into(),
        n,
        s,
        kind: OracleKind::HalfspaceHarmonic,
        field: Arc::new(HalfspaceHarmonic {
            s,
            e: e.to_vec(),
            offset,
        }),
    })
}

pub fn ball_torsion(n: usize, s: f64) -> Result<OracleField> {
    let c = constants(n, s)?;
    Ok(OracleField {
        name: "ball_torsion".into(),
        n,
        s,
        kind: OracleKind::BallTorsion { q: c.q_ns },
        field: Arc::new(BallTorsion { n, s }),
    })
}

pub fn fundamental_solution(n: usize, s: f64) -> Result<OracleField> {
    let c = constants(n, s)?;
    let log_case = n == 1 && (s - 0.5).abs() < 1e-15;
    if c.kappa_ns.is_none() && !log_case {
        return Err(Error::Domain(format!(
            "fundamental solution needs n > 2s or (n, s) = (1, ½); got ({n}, {s})"
        )));
    }
    Ok(OracleField {
        name: "fundamental_solution".into(),
        n,
        s,
        kind: OracleKind::FundamentalSolution,
        field: Arc::new(FundamentalSolution {
            n,
            s,
            kappa: if log_case { None } else { c.kappa_ns },
        }),
    })
}

impl FundamentalSolution {
    /// Value at `x`, rejecting the singular point.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        if norm(x) == 0.0 {
            return Err(Error::Singularity);
        }
        Ok(self.eval(x))
    }
}

/// Poisson kernel of the unit ball for `(-Δ)^s`:
/// `a_{n,s}(1−|x|²)^s (|z|²−1)^{−s} |x−z|^{−n}`.
pub fn poisson_kernel_ball(n: usize, s: f64, x: &[f64], z: &[f64]) -> Result<f64> {
    let c = constants(n, s)?;
    if x.len() != n || z.len() != n {
        return Err(Error::Parameter("points must lie in ℝⁿ".into()));
    }
    let (rx, rz) = (dot(x, x), dot(z, z));
    if rx >= 1.0 {
        return Err(Error::Domain(format!("x must lie inside the unit ball, |x|² = {rx}")));
    }
    if rz <= 1.0 {
        return Err(Error::Domain(format!("z must lie outside the unit ball, |z|² = {rz}")));
    }
    let d: Vec<f64> = x.iter().zip(z).map(|(a, b)| a - b).collect();
    Ok(c.a_ns * ((1.0 - rx) / (rz - 1.0)).powf(s) * norm(&d).powi(-(n as i32)))
}

/// Poisson kernel of the half space `{x·e > 0}` for `√−Δ`:
/// `a_n √(x·e) / (√|z·e| |x−z|^n)` with `a_n = Γ(n/2)π^{−n/2−1}`.
pub fn poisson_kernel_halfspace(n: usize, x: &[f64], z: &[f64], e: &[f64]) -> Result<f64> {
    check_dim(n)?;
    if x.len() != n || z.len() != n || e.len() != n {
        return Err(Error::Parameter("points must lie in ℝⁿ".into()));
    }
    let (xe, ze) = (dot(x, e), dot(z, e));
    if xe <= 0.0 {
        return Err(Error::Domain("x must satisfy x·e > 0".into()));
    }
    if ze > 0.0 {
        return Err(Error::Domain("z must satisfy z·e ≤ 0".into()));
    }
    let nf = n as f64;
    let a_n = gamma(nf / 2.0)? * PI.powf(-nf / 2.0 - 1.0);
    let d: Vec<f64> = x.iter().zip(z).map(|(a, b)| a - b).collect();
    Ok(a_n * (xe / ze.abs()).sqrt() * norm(&d).powi(-(n as i32)))
}

/// Radial mean-value weight: `u(0) = ∫ u(z) ω_s(|z|) dz` for u s-harmonic in
/// `B_1`. Obtained by averaging the exterior Poisson formula over
/// `r ∈ (0, 1)` against `n r^{n−1} dr`, which gives
/// `ω_s(t) = n a_{n,s} ∫_0^{min(1, 1/t)} ρ^{n+2s−1}(1−ρ²)^{−s} dρ`.
pub fn mean_value_weight(t: f64, n: usize, s: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("t = {t} must be nonnegative")));
    }
    let c = constants(n, s)?;
    let a = (n as f64 + 2.0 * s) / 2.0;
    let b = 1.0 - s;
    let x = if t <= 1.0 { 1.0 } else { (t * t).recip() };
    // ∫_0^X ρ^{n+2s−1}(1−ρ²)^{−s} dρ = ½ B(a, b) I_{X²}(a, b)
    let partial = 0.5 * ln_beta(a, b)?.exp() * beta_inc_reg(a, b, x)?;
    Ok(n as f64 * c.a_ns * partial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluate::{apply_operator, QuadConfig};
    use crate::kernels::Kernel;
    use crate::quadrature::{adaptive, semi_infinite};
    use crate::special_math::sphere_area;

    #[test]
    fn halfspace_values() {
        let u = halfspace_harmonic(1, 0.5, &[1.0]).unwrap();
        assert_eq!(u.eval(&[4.0]), 2.0);
        assert_eq!(u.eval(&[-1.0]), 0.0);
        let k = Kernel::fractional_laplacian(1, 0.5).unwrap();
        let e = apply_operator(&k, &u.field, &[0.5], &QuadConfig::default()).unwrap();
        assert!(e.value.abs() < 1e-3, "{e:?}");
    }

    #[test]
    fn torsion_values() {
        let u = ball_torsion(1, 0.5).unwrap();
        assert!((u.known_operator_value(&[0.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(u.eval(&[1.0]), 0.0);
        let u2 = ball_torsion(2, 0.5).unwrap();
        let q = u2.known_operator_value(&[0.0]).unwrap();
        assert!((q - PI / 2.0).abs() < 1e-13);
        let k = Kernel::fractional_laplacian(2, 0.5).unwrap();
        let e = apply_operator(&k, &u2.field, &[0.0, 0.0], &QuadConfig::default()).unwrap();
        assert!((e.value - q).abs() < 1e-3 * q, "{e:?}");
    }

    #[test]
    fn fundamental_solution_values() {
        let f3 = FundamentalSolution {
            n: 3,
            s: 0.5,
            kappa: constants(3, 0.5).unwrap().kappa_ns,
        };
        assert!((f3.value(&[1.0, 0.0, 0.0]).unwrap() - 1.0 / (2.0 * PI * PI)).abs() < 1e-15);
        let a = f3.value(&[0.3, 0.2, 0.1]).unwrap();
        let b = f3.value(&[0.6, 0.4, 0.2]).unwrap();
        assert!((b - 0.25 * a).abs() < 1e-14 * a);
        assert_eq!(f3.value(&[0.0; 3]), Err(Error::Singularity));
        let f1 = fundamental_solution(1, 0.5).unwrap();
        assert_eq!(f1.eval(&[1.0]), 0.0);
        assert!(fundamental_solution(1, 0.7).is_err());
    }

    #[test]
    fn poisson_ball_examples() {
        let v = poisson_kernel_ball(1, 0.5, &[0.0], &[2.0]).unwrap();
        assert!((v - (1.0 / PI) * 3f64.powf(-0.5) * 0.5).abs() < 1e-15);
        assert!(poisson_kernel_ball(1, 0.5, &[1.0], &[2.0]).is_err());
        assert!(poisson_kernel_ball(1, 0.5, &[0.0], &[0.5]).is_err());
        let near = poisson_kernel_ball(1, 0.5, &[1.0 - 1e-12], &[2.0]).unwrap();
        assert!(near < 1e-6);
    }

    #[test]
    fn poisson_ball_normalization() {
        for &x in &[0.0, 0.5] {
            let f = |z: f64| poisson_kernel_ball(1, 0.5, &[x], &[z]).unwrap();
            let g = |z: f64| poisson_kernel_ball(1, 0.5, &[x], &[-z]).unwrap();
            // z = 1 + w² removes the inverse square root at |z| = 1
            let near = adaptive(|w| 2.0 * w * (f(1.0 + w * w) + g(1.0 + w * w)), 0.0, 1.0, 1e-13, 1e-13, 2000);
            let far = semi_infinite(|z| f(z) + g(z), 2.0, 1e-13, 1e-13, 2000);
            assert!((near.value + far.value - 1.0).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn poisson_halfspace_examples() {
        let v = poisson_kernel_halfspace(1, &[1.0], &[-1.0], &[1.0]).unwrap();
        assert!((v - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!(poisson_kernel_halfspace(1, &[-1.0], &[-1.0], &[1.0]).is_err());
        let q = semi_infinite(
            |z| poisson_kernel_halfspace(1, &[1.0], &[-z], &[1.0]).unwrap(),
            0.0,
            1e-12,
            1e-12,
            4000,
        );
        assert!((q.value - 1.0).abs() < 1e-6, "{q:?}");
    }

    #[test]
    fn mean_value_weight_properties() {
        for &s in &[0.3, 0.5, 0.7] {
            for n in 1..=3 {
                let w0 = mean_value_weight(0.0, n, s).unwrap();
                assert_eq!(w0, mean_value_weight(1.0, n, s).unwrap());
                let mut prev = w0;
                for i in 0..50 {
                    let w = mean_value_weight(i as f64 * 0.2, n, s).unwrap();
                    assert!(w <= prev * (1.0 + 1e-14));
                    prev = w;
                }
                // ∫ ω(|z|) dz = |S^{n−1}| ∫_0^∞ ω(t) t^{n−1} dt
                let area = sphere_area(n);
                let inner = w0 / n as f64;
                let outer = semi_infinite(
                    |t| mean_value_weight(t, n, s).unwrap() * t.powi(n as i32 - 1),
                    1.0,
                    1e-12,
                    1e-12,
                    4000,
                );
                let total = area * (inner + outer.value);
                assert!((total - 1.0).abs() < 1e-6, "n={n} s={s} total={total}");
            }
        }
        assert!(mean_value_weight(-1.0, 1, 0.5).is_err());
    }
}
