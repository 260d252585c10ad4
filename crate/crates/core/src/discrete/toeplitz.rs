//! Symmetric Toeplitz matrices: dense rows on demand, FFT products, and
//! conjugate gradients on principal submatrices.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Symmetric Toeplitz matrix given by its first column.
#[derive(Clone)]
pub struct SymmetricToeplitz {
    col: Vec<f64>,
    /// Spectrum of the circulant embedding of size `m ≥ 2N`.
    spectrum: Vec<Complex<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SymmetricToeplitz {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SymmetricToeplitz(N={})", self.col.len())
    }
}

/// Below this size products are computed directly.
const DIRECT_LIMIT: usize = 256;

impl SymmetricToeplitz {
    pub fn new(col: Vec<f64>) -> Self {
        let n = col.len();
        let m = (2 * n).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let mut spectrum = vec![Complex::new(0.0, 0.0); m];
        for (k, &c) in col.iter().enumerate() {
            spectrum[k].re = c;
            if k > 0 {
                spectrum[m - k].re = c;
            }
        }
        forward.process(&mut spectrum);
        SymmetricToeplitz {
            col,
            spectrum,
            forward,
            inverse,
        }
    }

    pub fn size(&self) -> usize {
        self.col.len()
    }

    pub fn column(&self) -> &[f64] {
        &self.col
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.col[i.abs_diff(j)]
    }

    /// `y = T x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.col.len();
        assert_eq!(x.len(), n);
        if n <= DIRECT_LIMIT {
            return (0..n).map(|i| (0..n).map(|j| self.entry(i, j) * x[j]).sum()).collect();
        }
        let m = self.spectrum.len();
        let mut buf: Vec<Complex<f64>> = (0..m)
            .map(|k| Complex::new(if k < n { x[k] } else { 0.0 }, 0.0))
            .collect();
        self.forward.process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        self.inverse.process(&mut buf);
        buf[..n].iter().map(|c| c.re / m as f64).collect()
    }

    /// `(T x)_i` from the explicit row.
    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (j, xj) in x.iter().enumerate() {
            acc += self.col[i.abs_diff(j)] * xj;
        }
        acc
    }
}

/// Outcome of [`conjugate_gradient`].
#[derive(Debug, Clone, Copy)]
pub struct CgReport {
    pub iterations: usize,
    /// Max-norm of the recomputed residual `b − T x` on the free set.
    pub residual: f64,
}

/// Solves `T_FF x_F = b_F` on the free index set `free` (entries outside it
/// are held at zero), starting from `x`. Stops when the max-norm residual
/// is below `tol`.
pub fn conjugate_gradient(
    t: &SymmetricToeplitz,
    free: &[bool],
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> CgReport {
    let n = t.size();
    let masked = |v: &[f64]| -> Vec<f64> {
        let mut out = t.apply(v);
        for (o, &f) in out.iter_mut().zip(free) {
            if !f {
                *o = 0.0;
            }
        }
        out
    };
    for (xi, &f) in x.iter_mut().zip(free) {
        if !f {
            *xi = 0.0;
        }
    }
    let residual_of = |x: &[f64]| -> Vec<f64> {
        let ax = masked(x);
        (0..n).map(|i| if free[i] { b[i] - ax[i] } else { 0.0 }).collect()
    };
    let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    let mut r = residual_of(x);
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut it = 0;
    while it < max_iter {
        if max_abs(&r) <= tol {
            // confirm against the true residual before stopping
            r = residual_of(x);
            if max_abs(&r) <= tol {
                break;
            }
            p = r.clone();
            rr = dot(&r, &r);
        }
        let ap = masked(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        // r·p equals r·r in exact arithmetic and stays correct after a
        // residual replacement
        let alpha = dot(&r, &p) / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        it += 1;
        if it % 50 == 0 {
            r = residual_of(x);
            rr = dot(&r, &r);
        }
    }
    let r = residual_of(x);
    CgReport {
        iterations: it,
        residual: max_abs(&r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kms(n: usize) -> SymmetricToeplitz {
        SymmetricToeplitz::new((0..n).map(|k| 0.5f64.powi(k as i32)).collect())
    }

    #[test]
    fn fft_product_matches_rows() {
        let t = kms(700);
        let x: Vec<f64> = (0..700).map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0).collect();
        let y = t.apply(&x);
        for i in [0, 1, 350, 699] {
            assert!((y[i] - t.row_dot(i, &x)).abs() < 1e-12);
        }
    }

    #[test]
    fn cg_on_subset() {
        let t = kms(400);
        let free: Vec<bool> = (0..400).map(|i| i % 7 != 3).collect();
        let b: Vec<f64> = (0..400).map(|i| if free[i] { (i as f64).sin() } else { 0.0 }).collect();
        let mut x = vec![0.0; 400];
        let rep = conjugate_gradient(&t, &free, &b, &mut x, 1e-12, 1000);
        assert!(rep.residual <= 1e-12, "{rep:?}");
        assert!(x.iter().zip(&free).all(|(v, f)| *f || *v == 0.0));
    }
}
