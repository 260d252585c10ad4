//! Scalar fields on ℝⁿ with the metadata needed to evaluate nonlocal
//! operators: a local second-difference bound, a growth bound at infinity,
//! and optional knowledge of the far field.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernels::norm;

/// `|2u(x) − u(x+y) − u(x−y)| ≤ constant·|y|²` for `|y| ≤ radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C2Bound {
    pub radius: f64,
    pub constant: f64,
}

/// `|u(y)| ≤ m (1 + |y|^tau)` for `|y| ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Growth {
    pub m: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FarField {
    Unknown,
    /// `u ≡ value` on `{|y| ≥ radius}`.
    ConstantOutside { radius: f64, value: f64 },
}

pub trait ScalarField: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> f64;

    /// Second-difference bound around `x`; `None` where `u` is not `C²`.
    fn c2_bound(&self, x: &[f64]) -> Option<C2Bound>;

    fn growth(&self) -> Growth;

    fn far_field(&self) -> FarField {
        FarField::Unknown
    }

    /// Push radii `r > 0` at which `t ↦ u(x ± tθ)` may fail to be smooth.
    fn breakpoints(&self, _x: &[f64], _theta: &[f64], _out: &mut Vec<f64>) {}
}

impl<T: ScalarField + ?Sized> ScalarField for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &[f64]) -> f64 {
        (**self).eval(x)
    }
    fn c2_bound(&self, x: &[f64]) -> Option<C2Bound> {
        (**self).c2_bound(x)
    }
    fn growth(&self) -> Growth {
        (**self).growth()
    }
    fn far_field(&self) -> FarField {
        (**self).far_field()
    }
    fn breakpoints(&self, x: &[f64], theta: &[f64], out: &mut Vec<f64>) {
        (**self).breakpoints(x, theta, out)
    }
}

/// The constant function.
#[derive(Debug, Clone, Copy)]
pub struct Constant {
    pub n: usize,
    pub value: f64,
}

impl ScalarField for Constant {
    fn dim(&self) -> usize {
        self.n
    }
    fn eval(&self, _x: &[f64]) -> f64 {
        self.value
    }
    fn c2_bound(&self, _x: &[f64]) -> Option<C2Bound> {
        Some(C2Bound {
            radius: f64::INFINITY,
            constant: 0.0,
        })
    }
    fn growth(&self) -> Growth {
        Growth {
            m: self.value.abs(),
            tau: 0.0,
        }
    }
    fn far_field(&self) -> FarField {
        FarField::ConstantOutside {
            radius: 0.0,
            value: self.value,
        }
    }
}

type EvalFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type BoundFn = dyn Fn(&[f64]) -> Option<C2Bound> + Send + Sync;

/// A field assembled from closures.
#[derive(Clone)]
pub struct FnField {
    n: usize,
    f: Arc<EvalFn>,
    c2: Arc<BoundFn>,
    growth: Growth,
    far: FarField,
}

impl FnField {
    /// A field without a second-difference bound (usable as exterior data or
    /// mean-value integrand, not for operator evaluation) and bounded growth.
    pub fn new(n: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static, growth: Growth) -> Self {
        FnField {
            n,
            f: Arc::new(f),
            c2: Arc::new(|_| None),
            growth,
            far: FarField::Unknown,
        }
    }

    pub fn with_c2(mut self, c2: impl Fn(&[f64]) -> Option<C2Bound> + Send + Sync + 'static) -> Self {
        self.c2 = Arc::new(c2);
        self
    }

    pub fn with_far_field(mut self, far: FarField) -> Self {
        self.far = far;
        self
    }
}

impl fmt::Debug for FnField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnField(n={}, {:?}, {:?})", self.n, self.growth, self.far)
    }
}

impl ScalarField for FnField {
    fn dim(&self) -> usize {
        self.n
    }
    fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn c2_bound(&self, x: &[f64]) -> Option<C2Bound> {
        (self.c2)(x)
    }
    fn growth(&self) -> Growth {
        self.growth
    }
    fn far_field(&self) -> FarField {
        self.far
    }
}

/// `Σ a_k u_k`.
#[derive(Clone)]
pub struct Combination {
    terms: Vec<(f64, Arc<dyn ScalarField>)>,
}

impl Combination {
    pub fn new(terms: Vec<(f64, Arc<dyn ScalarField>)>) -> Result<Self> {
        let n = terms
            .first()
            .ok_or_else(|| Error::Parameter("empty combination".into()))?
            .1
            .dim();
        if terms.iter().any(|(_, u)| u.dim() != n) {
            return Err(Error::Parameter("combined fields differ in dimension".into()));
        }
        Ok(Combination { terms })
    }
}

impl ScalarField for Combination {
    fn dim(&self) -> usize {
        self.terms[0].1.dim()
    }
    fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(a, u)| a * u.eval(x)).sum()
    }
    fn c2_bound(&self, x: &[f64]) -> Option<C2Bound> {
        let mut radius = f64::INFINITY;
        let mut constant = 0.0;
        for (a, u) in &self.terms {
            if *a == 0.0 {
                continue;
            }
            let b = u.c2_bound(x)?;
            radius = radius.min(b.radius);
            constant += a.abs() * b.constant;
        }
        Some(C2Bound { radius, constant })
    }
    fn growth(&self) -> Growth {
        let mut m = 0.0;
        let mut tau = 0.0f64;
        for (a, u) in &self.terms {
            let g = u.growth();
            m += a.abs() * g.m;
            tau = tau.max(g.tau);
        }
        Growth { m, tau }
    }
    fn far_field(&self) -> FarField {
        let mut radius = 0.0f64;
        let mut value = 0.0;
        for (a, u) in &self.terms {
            match u.far_field() {
                FarField::ConstantOutside { radius: r, value: v } => {
                    radius = radius.max(r);
                    value += a * v;
                }
                FarField::Unknown => return FarField::Unknown,
            }
        }
        FarField::ConstantOutside { radius, value }
    }
    fn breakpoints(&self, x: &[f64], theta: &[f64], out: &mut Vec<f64>) {
        for (_, u) in &self.terms {
            u.breakpoints(x, theta, out);
        }
    }
}

/// `x ↦ u(x + shift)`.
#[derive(Clone)]
pub struct Translated<U> {
    pub inner: U,
    pub shift: Vec<f64>,
}

impl<U: ScalarField> Translated<U> {
    fn moved(&self, x: &[f64]) -> [f64; 3] {
        let mut y = [0.0; 3];
        for i in 0..x.len() {
            y[i] = x[i] + self.shift[i];
        }
        y
    }
}

impl<U: ScalarField> ScalarField for Translated<U> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval(&self, x: &[f64]) -> f64 {
        let y = self.moved(x);
        self.inner.eval(&y[..x.len()])
    }
    fn c2_bound(&self, x: &[f64]) -> Option<C2Bound> {
        let y = self.moved(x);
        self.inner.c2_bound(&y[..x.len()])
    }
    fn growth(&self) -> Growth {
        // (a + b)^τ ≤ c(a^τ + b^τ) with c = max(1, 2^{τ-1}), and |y| ≥ 1 outside
        // the unit ball; the bounded region in between is covered by m(1 + |h|)^τ.
        let g = self.inner.growth();
        let h = norm(&self.shift);
        let c = 2f64.powf(g.tau - 1.0).max(1.0);
        Growth {
            m: g.m * c * (1.0 + h).powf(g.tau) * 2.0,
            tau: g.tau,
        }
    }
    fn far_field(&self) -> FarField {
        match self.inner.far_field() {
            FarField::ConstantOutside { radius, value } => FarField::ConstantOutside {
                radius: radius + norm(&self.shift),
                value,
            },
            FarField::Unknown => FarField::Unknown,
        }
    }
    fn breakpoints(&self, x: &[f64], theta: &[f64], out: &mut Vec<f64>) {
        let y = self.moved(x);
        self.inner.breakpoints(&y[..x.len()], theta, out)
    }
}

/// `x ↦ u(t x)` for `t > 0`.
#[derive(Clone)]
pub struct Dilated<U> {
    pub inner: U,
    pub t: f64,
}

impl<U: ScalarField> ScalarField for Dilated<U> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval(&self, x: &[f64]) -> f64 {
        let mut y = [0.0; 3];
        for i in 0..x.len() {
            y[i] = self.t * x[i];
        }
        self.inner.eval(&y[..x.len()])
    }
    fn c2_bound(&self, x: &[f64]) -> Option<C2Bound> {
        let mut y = [0.0; 3];
        for i in 0..x.len() {
            y[i] = self.t * x[i];
        }
        self.inner.c2_bound(&y[..x.len()]).map(|b| C2Bound {
            radius: b.radius / self.t,
            constant: b.constant * self.t * self.t,
        })
    }
    fn growth(&self) -> Growth {
        let g = self.inner.growth();
        Growth {
            m: g.m * self.t.powf(g.tau).max(1.0) * (1.0 + self.t.recip()).powf(g.tau) * 2.0,
            tau: g.tau,
        }
    }
    fn far_field(&self) -> FarField {
        match self.inner.far_field() {
            FarField::ConstantOutside { radius, value } => FarField::ConstantOutside {
                radius: radius / self.t,
                value,
            },
            FarField::Unknown => FarField::Unknown,
        }
    }
    fn breakpoints(&self, x: &[f64], theta: &[f64], out: &mut Vec<f64>) {
        let mut y = [0.0; 3];
        for i in 0..x.len() {
            y[i] = self.t * x[i];
        }
        let start = out.len();
        self.inner.breakpoints(&y[..x.len()], theta, out);
        for r in &mut out[start..] {
            *r /= self.t;
        }
    }
}

/// `Σ a_k (1 − |x − c_k|²/w_k²)_+^4`: smooth (C³), compactly supported.
#[derive(Debug, Clone)]
pub struct BumpField {
    n: usize,
    bumps: Vec<(f64, Vec<f64>, f64)>,
}

impl BumpField {
    /// Bumps given as `(amplitude, center, width)`.
    pub fn new(n: usize, bumps: Vec<(f64, Vec<f64>, f64)>) -> Result<Self> {
        for (_, c, w) in &bumps {
            if c.len() != n || !(*w > 0.0) {
                return Err(Error::Parameter("bump needs an n-dim center and positive width".into()));
            }
        }
        Ok(BumpField { n, bumps })
    }
}

impl ScalarField for BumpField {
    fn dim(&self) -> usize {
        self.n
    }
    fn eval(&self, x: &[f64]) -> f64 {
        self.bumps
            .iter()
            .map(|(a, c, w)| {
                let q: f64 = x.iter().zip(c).map(|(xi, ci)| (xi - ci) * (xi - ci)).sum::<f64>() / (w * w);
                if q < 1.0 {
                    a * (1.0 - q).powi(4)
                } else {
                    0.0
                }
            })
            .sum()
    }
    fn c2_bound(&self, _x: &[f64]) -> Option<C2Bound> {
        // ∂_θθ of (1−q)^4 with q = |z|²: 2f'(q) + 4f''(q)(θ·z)², bounded by 8 + 48·4/27 < 16
        let constant = self.bumps.iter().map(|(a, _, w)| a.abs() * 16.0 / (w * w)).sum();
        Some(C2Bound {
            radius: f64::INFINITY,
            constant,
        })
    }
    fn growth(&self) -> Growth {
        Growth {
            m: self.bumps.iter().map(|(a, _, _)| a.abs()).sum(),
            tau: 0.0,
        }
    }
    fn far_field(&self) -> FarField {
        let radius = self
            .bumps
            .iter()
            .map(|(_, c, w)| norm(c) + w)
            .fold(0.0, f64::max);
        FarField::ConstantOutside { radius, value: 0.0 }
    }
}

/// Exterior datum `g` of a Dirichlet problem, with its growth bound.
#[derive(Clone)]
pub struct ExteriorData {
    pub field: Arc<dyn ScalarField>,
}

impl ExteriorData {
    pub fn new(field: Arc<dyn ScalarField>) -> Self {
        ExteriorData { field }
    }

    pub fn constant(n: usize, value: f64) -> Self {
        ExteriorData::new(Arc::new(Constant { n, value }))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.field.eval(x)
    }

    /// Reject data whose growth is not integrable against the order-2s tail.
    pub fn check(&self, s: f64) -> Result<()> {
        let tau = self.field.growth().tau;
        if tau >= 2.0 * s {
            return Err(Error::NonIntegrableTail { tau, two_s: 2.0 * s });
        }
        Ok(())
    }
}

impl fmt::Debug for ExteriorData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExteriorData(n={}, {:?})", self.field.dim(), self.field.growth())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn second_difference(u: &dyn ScalarField, x: &[f64], y: &[f64]) -> f64 {
        let p: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
        let m: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        2.0 * u.eval(x) - u.eval(&p) - u.eval(&m)
    }

    #[test]
    fn bump_c2_bound_holds() {
        let u = BumpField::new(2, vec![(1.3, vec![0.2, -0.1], 0.7), (-0.4, vec![-0.5, 0.3], 0.4)]).unwrap();
        let b = u.c2_bound(&[0.0, 0.0]).unwrap();
        for i in 0..200 {
            let t = i as f64 * 0.37;
            let r = 0.01 + 0.6 * ((i * 7) % 13) as f64 / 13.0;
            let x = [0.3 * t.sin(), 0.4 * (1.3 * t).cos()];
            let y = [r * t.cos(), r * t.sin()];
            assert!(second_difference(&u, &x, &y).abs() <= b.constant * r * r * (1.0 + 1e-12));
        }
    }

    #[test]
    fn combination_metadata() {
        let a: Arc<dyn ScalarField> = Arc::new(BumpField::new(1, vec![(1.0, vec![0.0], 1.0)]).unwrap());
        let b: Arc<dyn ScalarField> = Arc::new(Constant { n: 1, value: 2.0 });
        let c = Combination::new(vec![(2.0, a), (-1.0, b)]).unwrap();
        assert_eq!(c.eval(&[0.0]), 0.0);
        assert_eq!(c.far_field(), FarField::ConstantOutside { radius: 1.0, value: -2.0 });
        assert_eq!(c.growth().m, 4.0);
    }

    #[test]
    fn translate_and_dilate() {
        let u = BumpField::new(1, vec![(1.0, vec![1.0], 0.5)]).unwrap();
        let t = Translated {
            inner: u.clone(),
            shift: vec![1.0],
        };
        assert_eq!(t.eval(&[0.0]), 1.0);
        assert_eq!(t.far_field(), FarField::ConstantOutside { radius: 2.5, value: 0.0 });
        let d = Dilated { inner: u, t: 2.0 };
        assert_eq!(d.eval(&[0.5]), 1.0);
        assert_eq!(d.c2_bound(&[0.0]).unwrap().constant, 4.0 * 64.0);
    }

    #[test]
    fn exterior_growth_check() {
        let g = ExteriorData::new(Arc::new(FnField::new(1, |x| x[0].abs().sqrt(), Growth { m: 1.0, tau: 0.5 })));
        assert!(g.check(0.25).is_err());
        assert!(g.check(0.3).is_ok());
    }
}
