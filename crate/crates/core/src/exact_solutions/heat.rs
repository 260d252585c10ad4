//! Heat kernels `p(t, ·)` with `p̂(t, ξ) = e^{−t|ξ|^{2s}}`.
//!
//! For s = ½ the kernel is the Poisson kernel of the half space, in closed
//! form. For other s (n = 1) the table `p(1, ·)` is obtained by a symmetric
//! trapezoid rule in ξ evaluated with one FFT; other times follow from
//! `p(t, x) = t^{−1/(2s)} p(1, x t^{−1/(2s)})`.

use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{check_dim, check_order, Error, Result};
use crate::kernels::norm;
use crate::special_math::{gamma, half_laplacian_constant};

/// Absolute aliasing error allowed in the table.
const ALIAS_TOL: f64 = 1e-8;
/// Symbol cutoff: `e^{−Ξ^{2s}} ≤ 1e-12`.
const SYMBOL_TOL: f64 = 1e-12;
const MAX_DX: f64 = 0.02;

/// Tabulated `p(1, x)` for `0 ≤ x ≤ half_range`, n = 1.
#[derive(Debug, Clone)]
pub struct HeatKernel1D {
    s: f64,
    dx: f64,
    values: Vec<f64>,
    period: f64,
}

impl HeatKernel1D {
    pub fn new(s: f64) -> Result<Self> {
        check_order(s)?;
        // p(1, x) ~ C |x|^{−1−2s}; images at distance ≥ 3L/4 from |x| ≤ L/4
        let tail = tail_constant(s);
        let period = 4.0 / 3.0 * (2.5 * tail / ALIAS_TOL).powf(1.0 / (1.0 + 2.0 * s));
        let dxi = 2.0 * PI / period;
        let xi_max = (-SYMBOL_TOL.ln()).powf(1.0 / (2.0 * s));
        let needed = (xi_max / dxi).max(period / MAX_DX).ceil() as usize;
        let m = needed.next_power_of_two();
        if m > 1 << 24 {
            return Err(Error::NumericalFailure {
                what: format!("heat kernel table for s = {s} needs {m} points"),
                achieved: ALIAS_TOL,
            });
        }
        let mut buf: Vec<Complex<f64>> = (0..m)
            .map(|k| {
                // symmetric trapezoid: ξ_k and ξ_{−k} fold onto k and m − k
                let kk = if k <= m / 2 { k } else { m - k };
                let xi = kk as f64 * dxi;
                Complex::new((-xi.powf(2.0 * s)).exp(), 0.0)
            })
            .collect();
        FftPlanner::new().plan_fft_forward(m).process(&mut buf);
        let dx = period / m as f64;
        let keep = m / 4 + 3;
        let values = buf[..keep]
            .iter()
            .enumerate()
            .map(|(j, c)| c.re * dxi / (2.0 * PI) - image_sum(tail, s, period, j as f64 * dx))
            .collect();
        Ok(HeatKernel1D { s, dx, values, period })
    }

    /// Largest `|x|` covered at t = 1.
    pub fn half_range(&self) -> f64 {
        (self.values.len() - 3) as f64 * self.dx
    }

    pub fn spacing(&self) -> f64 {
        self.dx
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Table nodes `(x_j, p(1, x_j))`, `x_j = j·dx ≥ 0`.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values[..self.values.len() - 3]
            .iter()
            .enumerate()
            .map(move |(j, v)| (j as f64 * self.dx, *v))
    }

    fn eval_unit(&self, x: f64) -> Result<f64> {
        let x = x.abs();
        if x > self.half_range() {
            return Err(Error::NumericalFailure {
                what: format!("|x| = {x} beyond heat-kernel table range {}", self.half_range()),
                achieved: f64::INFINITY,
            });
        }
        // cubic Lagrange through the four nearest nodes; p is even, so
        // negative indices reflect
        let u = x / self.dx;
        let j = (u.floor() as isize).max(0);
        let t = u - j as f64;
        let at = |i: isize| self.values[i.unsigned_abs()];
        let (p0, p1, p2, p3) = (at(j - 1), at(j), at(j + 1), at(j + 2));
        Ok(p1
            + 0.5 * t * (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0))))
    }

    pub fn eval(&self, t: f64, x: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("time t = {t} must be positive")));
        }
        let scale = t.powf(-1.0 / (2.0 * self.s));
        Ok(scale * self.eval_unit(x * scale)?)
    }

    /// `∫ p(1, x) dx`: Simpson on the table plus two terms of the
    /// asymptotic tail beyond the table.
    pub fn total_mass(&self) -> f64 {
        let n = self.values.len() - 3;
        let n = if n % 2 == 0 { n - 1 } else { n };
        let mut acc = self.values[0] + self.values[n - 1];
        for j in 1..n - 1 {
            acc += if j % 2 == 1 { 4.0 } else { 2.0 } * self.values[j];
        }
        let half = acc * self.dx / 3.0;
        let a = (n - 1) as f64 * self.dx;
        let s = self.s;
        // second term of the expansion: −Γ(1+4s) sin(2πs)/(2π) x^{−1−4s}
        let c2 = -gamma(1.0 + 4.0 * s).expect("positive") * (2.0 * PI * s).sin() / (2.0 * PI);
        2.0 * half
            + 2.0 * tail_constant(s) * a.powf(-2.0 * s) / (2.0 * s)
            + 2.0 * c2 * a.powf(-4.0 * s) / (4.0 * s)
    }
}

/// Periodic images `Σ_{k≠0} p(1, x + kL)` from the tail asymptotics. All
/// images sit at distance ≥ 3L/4, deep in the power-law regime.
fn image_sum(tail: f64, s: f64, period: f64, x: f64) -> f64 {
    const TERMS: usize = 8;
    let p = 1.0 + 2.0 * s;
    let mut acc = 0.0;
    for k in 1..=TERMS {
        let kl = k as f64 * period;
        acc += (kl - x).powf(-p) + (kl + x).powf(-p);
    }
    // midpoint tail ∫_{K+½}^∞ over both signs
    let k0 = (TERMS as f64 + 0.5) * period;
    acc += ((k0 - x).powf(1.0 - p) + (k0 + x).powf(1.0 - p)) / (period * (p - 1.0));
    tail * acc
}

/// `p(1, x) ~ C|x|^{−1−2s}` with `C = Γ(1+2s) sin(πs)/π`.
pub(crate) fn tail_constant(s: f64) -> f64 {
    gamma(1.0 + 2.0 * s).expect("positive") * (PI * s).sin() / PI
}

fn cached(s: f64) -> Result<Arc<HeatKernel1D>> {
    static CACHE: OnceLock<Mutex<Vec<(u64, Arc<HeatKernel1D>)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
    let key = s.to_bits();
    if let Some((_, t)) = cache.lock().expect("heat cache").iter().find(|(k, _)| *k == key) {
        return Ok(t.clone());
    }
    let table = Arc::new(HeatKernel1D::new(s)?);
    let mut guard = cache.lock().expect("heat cache");
    if guard.len() >= 8 {
        guard.remove(0);
    }
    guard.push((key, table.clone()));
    Ok(table)
}

/// `p(t, x)` for `(-Δ)^s`: closed form when s = ½ (any n ≤ 3), FFT table
/// when n = 1.
pub fn heat_kernel(n: usize, s: f64, t: f64, x: &[f64]) -> Result<f64> {
    check_dim(n)?;
    check_order(s)?;
    if !(t > 0.0) {
        return Err(Error::Domain(format!("time t = {t} must be positive")));
    }
    if x.len() != n {
        return Err(Error::Parameter("point must lie in ℝⁿ".into()));
    }
    if s == 0.5 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        return Ok(half_laplacian_constant(n) * t / (r2 + t * t).powf((n as f64 + 1.0) / 2.0));
    }
    if n != 1 {
        return Err(Error::Domain("heat kernel for s ≠ ½ is available only for n = 1".into()));
    }
    cached(s)?.eval(t, norm(x))
}

/// Largest relative deviation of `(p(1,·) * p(1,·))(x)` from `p(2, x)` over
/// `xs`, n = 1. The convolution is the trapezoid rule on the table nodes,
/// where both factors are exact table values.
pub fn semigroup_error(s: f64, xs: &[f64]) -> Result<f64> {
    check_order(s)?;
    let table = cached(s)?;
    let dx = table.spacing();
    let last = table.values.len() as isize - 4;
    let p1 = |j: isize| table.values[j.unsigned_abs()];
    let mut worst = 0.0f64;
    for &x in xs {
        // evaluate at the nearest node so that x − y stays on the grid
        let k = (x / dx).round() as isize;
        let (lo, hi) = ((k - last).max(-last), (k + last).min(last));
        let conv: f64 = (lo..=hi).map(|j| p1(j) * p1(k - j)).sum::<f64>() * dx;
        let exact = table.eval(2.0, k as f64 * dx)?;
        worst = worst.max((conv - exact).abs() / exact);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_at_origin() {
        assert!((heat_kernel(1, 0.5, 1.0, &[0.0]).unwrap() - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn fft_branch_matches_closed_form() {
        let table = HeatKernel1D::new(0.5).unwrap();
        let mut worst = 0.0f64;
        for i in 0..=500 {
            let x = -5.0 + 0.02 * i as f64 + 0.0037;
            let exact = heat_kernel(1, 0.5, 1.0, &[x]).unwrap();
            worst = worst.max((table.eval(1.0, x).unwrap() - exact).abs() / exact);
        }
        assert!(worst < 1e-6, "worst rel err {worst}");
        let exact = heat_kernel(1, 0.5, 0.3, &[0.7]).unwrap();
        assert!((table.eval(0.3, 0.7).unwrap() - exact).abs() < 1e-6 * exact);
    }

    #[test]
    fn general_s_mass_and_positivity() {
        for &s in &[0.3, 0.7] {
            let table = HeatKernel1D::new(s).unwrap();
            assert!((table.total_mass() - 1.0).abs() < 1e-6, "s={s}");
            assert!(table.nodes().all(|(_, p)| p > 0.0));
        }
    }

    #[test]
    fn semigroup_property() {
        let xs: Vec<f64> = (0..=10).map(|i| -5.0 + i as f64).collect();
        for &s in &[0.3, 0.5, 0.7] {
            let e = semigroup_error(s, &xs).unwrap();
            assert!(e < 1e-6, "s={s} err={e}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(heat_kernel(2, 0.3, 1.0, &[0.0, 0.0]).is_err());
        assert!(heat_kernel(1, 0.3, 0.0, &[0.0]).is_err());
        assert!(heat_kernel(1, 0.3, 1.0, &[1e12]).is_err());
    }
}
