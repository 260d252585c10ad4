//! Special functions and the closed-form constants attached to `(-Δ)^s`.
//!
//! Every Γ-based constant used elsewhere in the crate is produced here so that
//! the kernels, oracles and solvers agree to rounding.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{check_dim, check_order, Error, Result};

// Lanczos approximation, g = 607/128, 15 terms (Godfrey). Relative error of
// Γ is below 1e-15 on the positive axis.
const LANCZOS_G: f64 = 607.0 / 128.0;
const LANCZOS_COEF: [f64; 15] = [
    0.999_999_999_999_997_1,
    57.156_235_665_862_92,
    -59.597_960_355_475_49,
    14.136_097_974_741_747,
    -0.491_913_816_097_620_2,
    0.339_946_499_848_118_9e-4,
    0.465_236_289_270_485_8e-4,
    -0.983_744_753_048_795_6e-4,
    0.158_088_703_224_912_5e-3,
    -0.210_264_441_724_104_9e-3,
    0.217_439_618_115_212_6e-3,
    -0.164_318_106_536_763_9e-3,
    0.844_182_239_838_527_4e-4,
    -0.261_908_384_015_814_1e-4,
    0.368_991_826_595_316_2e-5,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

fn ln_gamma_lanczos(x: f64) -> f64 {
    // valid for x >= 0.5
    let z = x - 1.0;
    let mut sum = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        sum += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + sum.ln()
}

/// Natural logarithm of Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    if x < 0.5 {
        // reflection: Γ(x)Γ(1-x) = π / sin(πx)
        Ok((PI / (PI * x).sin()).ln() - ln_gamma_lanczos(1.0 - x))
    } else {
        Ok(ln_gamma_lanczos(x))
    }
}

/// Γ(x) for x > 0.
pub fn gamma(x: f64) -> Result<f64> {
    ln_gamma(x).map(f64::exp)
}

/// ln B(a, b).
pub fn ln_beta(a: f64, b: f64) -> Result<f64> {
    Ok(ln_gamma(a)? + ln_gamma(b)? - ln_gamma(a + b)?)
}

/// Surface area |S^{n-1}| of the unit sphere in ℝⁿ.
pub fn sphere_area(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => {
            let half = n as f64 / 2.0;
            2.0 * PI.powf(half) / gamma(half).expect("positive argument")
        }
    }
}

fn check_beta_shape(a: f64, b: f64) -> Result<()> {
    if a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "beta parameters must be positive and finite, got a = {a}, b = {b}"
        )))
    }
}

const CF_MAX_ITER: usize = 1000;
const CF_TINY: f64 = 1e-300;

/// Continued fraction for I_x(a, b) (modified Lentz), accurate for x below the mean.
fn beta_cf(a: f64, b: f64, x: f64, ln_b: f64) -> Result<f64> {
    let ln_front = a * x.ln() + b * (-x).ln_1p() - ln_b;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;

    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 4.0 * f64::EPSILON {
            return Ok(ln_front.exp() * h / a);
        }
    }
    Err(Error::NumericalFailure {
        what: format!("incomplete beta continued fraction (a={a}, b={b}, x={x})"),
        achieved: f64::NAN,
    })
}

/// Regularized incomplete beta function I_x(a, b).
pub fn beta_inc_reg(a: f64, b: f64, x: f64) -> Result<f64> {
    check_beta_shape(a, b)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("beta_inc_reg requires x in [0, 1], got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let ln_b = ln_beta(a, b)?;
    let value = if x < a / (a + b) {
        beta_cf(a, b, x, ln_b)?
    } else {
        1.0 - beta_cf(b, a, 1.0 - x, ln_b)?
    };
    Ok(value.clamp(0.0, 1.0))
}

/// Inverse of `x ↦ I_x(a, b)`: returns x with I_x(a, b) = p.
pub fn beta_inverse(a: f64, b: f64, p: f64) -> Result<f64> {
    check_beta_shape(a, b)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("beta_inverse requires p in [0, 1], got {p}")));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    let ln_b = ln_beta(a, b)?;

    // Initial guess (Numerical Recipes, invbetai).
    let mut x = if a >= 1.0 && b >= 1.0 {
        let pp = if p < 0.5 { p } else { 1.0 - p };
        let t = (-2.0 * pp.ln()).sqrt();
        let mut z = (2.30753 + t * 0.27061) / (1.0 + t * (0.99229 + t * 0.04481)) - t;
        if p < 0.5 {
            z = -z;
        }
        let al = (z * z - 3.0) / 6.0;
        let h = 2.0 / (1.0 / (2.0 * a - 1.0) + 1.0 / (2.0 * b - 1.0));
        let w = z * (al + h).sqrt() / h
            - (1.0 / (2.0 * b - 1.0) - 1.0 / (2.0 * a - 1.0)) * (al + 5.0 / 6.0 - 2.0 / (3.0 * h));
        a / (a + b * (2.0 * w).exp())
    } else {
        let lna = (a / (a + b)).ln();
        let lnb = (b / (a + b)).ln();
        let t = (a * lna).exp() / a;
        let u = (b * lnb).exp() / b;
        let w = t + u;
        if p < t / w {
            (a * w * p).powf(1.0 / a)
        } else {
            1.0 - (b * w * (1.0 - p)).powf(1.0 / b)
        }
    };

    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    if !(x > 0.0 && x < 1.0) {
        x = 0.5;
    }
    for _ in 0..200 {
        let f = beta_inc_reg(a, b, x)? - p;
        if f == 0.0 {
            return Ok(x);
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let ln_pdf = (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_b;
        let pdf = ln_pdf.exp();
        let mut next = f64::NAN;
        if pdf.is_finite() && pdf > 0.0 {
            // Halley correction using d(ln pdf)/dx.
            let u = f / pdf;
            let curv = (a - 1.0) / x - (b - 1.0) / (1.0 - x);
            let denom = 1.0 - 0.5 * (u * curv).clamp(-1.0, 1.0);
            next = x - u / denom;
        }
        if !(next > lo && next < hi) {
            next = if lo > 0.0 && hi / lo > 1e3 {
                // geometric bisection when the bracket spans many decades
                (lo * hi).sqrt()
            } else {
                0.5 * (lo + hi)
            };
        }
        let step = (next - x).abs();
        x = next;
        if step <= 1e-15 * x || hi - lo <= 1e-16 * hi.max(1e-300) {
            return Ok(x);
        }
    }
    Ok(x)
}

/// The named constants of `(-Δ)^s` in dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatorConstants {
    pub n: usize,
    pub s: f64,
    /// Normalization of `(-Δ)^s`: `2^{2s} s Γ((n+2s)/2) / Γ(1-s) π^{-n/2}`.
    pub c_ns: f64,
    /// Right-hand side of the torsion problem in the unit ball.
    pub q_ns: f64,
    /// Constant of the Poisson kernel of the unit ball.
    pub a_ns: f64,
    /// Constant of the fundamental solution `κ|x|^{2s-n}`; `None` unless n > 2s.
    pub kappa_ns: Option<f64>,
}

/// Compute the constants for dimension `n ∈ {1,2,3}` and order `s ∈ (0,1)`.
pub fn constants(n: usize, s: f64) -> Result<OperatorConstants> {
    check_order(s)?;
    check_dim(n)?;
    let nf = n as f64;
    let four_s = (2.0 * s * 2f64.ln()).exp();
    let lg_mid = ln_gamma((nf + 2.0 * s) / 2.0)?;
    let c_ns = four_s * s * (lg_mid - ln_gamma(1.0 - s)?).exp() * PI.powf(-nf / 2.0);
    let q_ns = four_s * (ln_gamma(1.0 + s)? + lg_mid - ln_gamma(nf / 2.0)?).exp();
    let a_ns = gamma(nf / 2.0)? * PI.powf(-nf / 2.0 - 1.0) * (PI * s).sin();
    let kappa_ns = if nf > 2.0 * s {
        Some(
            (ln_gamma((nf - 2.0 * s) / 2.0)? - ln_gamma(s)?).exp() / four_s * PI.powf(-nf / 2.0),
        )
    } else {
        None
    };
    Ok(OperatorConstants {
        n,
        s,
        c_ns,
        q_ns,
        a_ns,
        kappa_ns,
    })
}

/// `c_n = Γ((n+1)/2) π^{-(n+1)/2}`, the constant of `√−Δ`.
pub fn half_laplacian_constant(n: usize) -> f64 {
    let m = (n as f64 + 1.0) / 2.0;
    gamma(m).expect("positive argument") * PI.powf(-m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).unwrap().abs() < 1e-15);
        assert!(ln_gamma(2.0).unwrap().abs() < 1e-15);
        let ln_sqrt_pi = 0.5 * PI.ln();
        assert!((ln_gamma(0.5).unwrap() - ln_sqrt_pi).abs() < 1e-14);
        assert!((ln_gamma(1.5).unwrap() - (ln_sqrt_pi - 2f64.ln())).abs() < 1e-14);
        // Γ(10) = 9!
        let rel = (gamma(10.0).unwrap() - 362_880.0).abs() / 362_880.0;
        assert!(rel < 1e-13, "{rel}");
        // ln Γ(100) = ln(99!)
        let expected = (1..100).map(|k| (k as f64).ln()).sum::<f64>();
        assert!((ln_gamma(100.0).unwrap() - expected).abs() / expected < 1e-13);
        // small argument via reflection: Γ(1e-3) ≈ 999.4237724845955
        let rel = (gamma(1e-3).unwrap() - 999.423_772_484_595_5).abs() / 999.4;
        assert!(rel < 1e-13, "{rel}");
    }

    #[test]
    fn ln_gamma_rejects_non_positive() {
        assert!(matches!(ln_gamma(0.0), Err(Error::Domain(_))));
        assert!(matches!(ln_gamma(-1.5), Err(Error::Domain(_))));
        assert!(ln_gamma(f64::NAN).is_err());
    }

    #[test]
    fn beta_inc_reg_trivial_cases() {
        assert_eq!(beta_inc_reg(2.5, 0.7, 1.0).unwrap(), 1.0);
        assert_eq!(beta_inc_reg(2.5, 0.7, 0.0).unwrap(), 0.0);
        for &x in &[0.01, 0.3, 0.5, 0.77, 0.999] {
            assert!((beta_inc_reg(1.0, 1.0, x).unwrap() - x).abs() < 1e-14);
        }
        // I_x(a, 1) = x^a and I_x(1, b) = 1 - (1-x)^b
        assert!((beta_inc_reg(3.0, 1.0, 0.4).unwrap() - 0.064).abs() < 1e-14);
        assert!((beta_inc_reg(1.0, 0.3, 0.6).unwrap() - (1.0 - 0.4f64.powf(0.3))).abs() < 1e-14);
    }

    /// Composite Gauss–Legendre quadrature of the arcsine density
    /// 1/(π√(t(1-t))) after t = u², which removes the singularity at 0.
    fn arcsine_cdf_by_quadrature(x: f64) -> f64 {
        let u_max = x.sqrt();
        let panels = 64;
        let (nodes, weights) = crate::quadrature::gauss_legendre(8);
        let mut sum = 0.0;
        for k in 0..panels {
            let lo = u_max * k as f64 / panels as f64;
            let hi = u_max * (k + 1) as f64 / panels as f64;
            let half = 0.5 * (hi - lo);
            for (t, w) in nodes.iter().zip(&weights) {
                let u = lo + half * (t + 1.0);
                sum += w * half * 2.0 / (PI * (1.0 - u * u).sqrt());
            }
        }
        sum
    }

    #[test]
    fn beta_inc_reg_arcsine_law() {
        let oracle = arcsine_cdf_by_quadrature(0.75);
        assert!((oracle - 2.0 / 3.0).abs() < 1e-13);
        let value = beta_inc_reg(0.5, 0.5, 0.75).unwrap();
        assert!((value - 2.0 / 3.0).abs() < 1e-13, "{value}");
        for &x in &[0.001_f64, 0.1, 0.4, 0.9, 0.9999] {
            let exact = 2.0 / PI * x.sqrt().asin();
            assert!((beta_inc_reg(0.5, 0.5, x).unwrap() - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn beta_inc_reg_domain_errors() {
        assert!(beta_inc_reg(0.0, 1.0, 0.5).is_err());
        assert!(beta_inc_reg(1.0, -1.0, 0.5).is_err());
        assert!(beta_inc_reg(1.0, 1.0, 1.5).is_err());
        assert!(beta_inc_reg(1.0, 1.0, -0.1).is_err());
        assert!(beta_inverse(1.0, 1.0, 1.1).is_err());
        assert!(beta_inverse(-1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn beta_inverse_examples() {
        assert!((beta_inverse(1.0, 1.0, 0.25).unwrap() - 0.25).abs() < 1e-14);
        assert_eq!(beta_inverse(0.7, 0.3, 0.0).unwrap(), 0.0);
        assert_eq!(beta_inverse(0.7, 0.3, 1.0).unwrap(), 1.0);
        assert!((beta_inverse(0.5, 0.5, 2.0 / 3.0).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn beta_inverse_roundtrip_grid() {
        // shapes (1-s, s) drive the exit-law sampler
        for &(a, b) in &[(0.7, 0.3), (0.5, 0.5), (0.3, 0.7), (0.05, 0.95), (0.95, 0.05), (1.5, 0.5)] {
            for k in 0..100 {
                let x = (k as f64 + 0.5) / 100.0;
                let p = beta_inc_reg(a, b, x).unwrap();
                let back = beta_inverse(a, b, p).unwrap();
                assert!((back - x).abs() < 1e-10, "a={a} b={b} x={x} back={back}");
            }
        }
    }

    #[test]
    fn beta_inverse_extreme_quantiles() {
        for &(a, b) in &[(0.3, 0.7), (0.05, 0.95), (0.95, 0.05)] {
            for &p in &[1e-12, 1e-6, 0.5] {
                let x = beta_inverse(a, b, p).unwrap();
                let back = beta_inc_reg(a, b, x).unwrap();
                assert!((back - p).abs() <= 1e-12 + 1e-9 * p, "a={a} p={p} x={x} back={back}");
            }
        }
    }

    #[test]
    fn constants_at_half() {
        let k = constants(1, 0.5).unwrap();
        assert!((k.c_ns - 1.0 / PI).abs() < 1e-15);
        assert!((k.q_ns - 1.0).abs() < 4.0 * f64::EPSILON);
        assert!((k.a_ns - 1.0 / PI).abs() < 1e-15);
        assert!(k.kappa_ns.is_none());

        let k2 = constants(2, 0.5).unwrap();
        assert!((k2.c_ns - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((k2.q_ns - PI / 2.0).abs() < 1e-14);

        let k3 = constants(3, 0.5).unwrap();
        assert!((k3.kappa_ns.unwrap() - 1.0 / (2.0 * PI * PI)).abs() < 1e-15);
        for n in 1..=3 {
            let k = constants(n, 0.5).unwrap();
            let cn = half_laplacian_constant(n);
            assert!((k.c_ns - cn).abs() / k.c_ns < 1e-12);
        }
    }

    #[test]
    fn constants_positive_and_validated() {
        for n in 1..=3 {
            for &s in &[0.05, 0.3, 0.5, 0.7, 0.95] {
                let k = constants(n, s).unwrap();
                assert!(k.c_ns > 0.0 && k.q_ns > 0.0 && k.a_ns > 0.0);
                if let Some(kappa) = k.kappa_ns {
                    assert!(kappa > 0.0);
                }
                assert_eq!(k.kappa_ns.is_some(), n as f64 > 2.0 * s);
            }
        }
        assert!(constants(1, 0.0).is_err());
        assert!(constants(1, 1.0).is_err());
        assert!(constants(4, 0.5).is_err());
    }
}
