//! One-dimensional quadrature: Gauss–Legendre nodes, adaptive Gauss–Kronrod
//! (21 points) and tanh–sinh for endpoint singularities.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

/// Result of a 1D quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub err: f64,
    pub evals: usize,
    pub converged: bool,
}

impl Quad {
    pub const ZERO: Quad = Quad {
        value: 0.0,
        err: 0.0,
        evals: 0,
        converged: true,
    };

    pub fn add(self, other: Quad) -> Quad {
        Quad {
            value: self.value + other.value,
            err: self.err + other.err,
            evals: self.evals + other.evals,
            converged: self.converged && other.converged,
        }
    }

    pub fn scale(self, factor: f64) -> Quad {
        Quad {
            value: self.value * factor,
            err: self.err * factor.abs(),
            ..self
        }
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_352,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

/// Single 21-point Gauss–Kronrod panel with the QUADPACK error heuristic.
pub fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Quad {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    let finite = value.is_finite() && err.is_finite();
    Quad {
        value,
        err: if finite { err } else { f64::INFINITY },
        evals: 21,
        converged: finite,
    }
}

struct Panel {
    a: f64,
    b: f64,
    q: Quad,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.q.err == other.q.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.q.err.total_cmp(&other.q.err)
    }
}

/// Adaptive bisection with GK21 panels until the summed error estimate meets
/// `max(abs_tol, rel_tol·|I|)` or `max_panels` panels are in use.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Quad {
    if a == b {
        return Quad::ZERO;
    }
    let first = gk21(&mut f, a, b);
    let mut evals = first.evals;
    let mut value = first.value;
    let mut err = first.err;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, q: first });
    while err > abs_tol.max(rel_tol * value.abs()) && heap.len() < max_panels.max(1) {
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a.min(worst.b) && mid < worst.a.max(worst.b)) {
            heap.push(worst);
            break;
        }
        let left = gk21(&mut f, worst.a, mid);
        let right = gk21(&mut f, mid, worst.b);
        evals += 42;
        value += left.value + right.value - worst.q.value;
        err += left.err + right.err - worst.q.err;
        heap.push(Panel { a: worst.a, b: mid, q: left });
        heap.push(Panel { a: mid, b: worst.b, q: right });
    }
    // recompute sums to shed accumulated cancellation
    let (value, err) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.q.value, e + p.q.err));
    Quad {
        value,
        err,
        evals,
        converged: err <= abs_tol.max(rel_tol * value.abs()) && value.is_finite(),
    }
}

/// `∫_a^∞ f` via the map x = a + t/(1-t) and adaptive GK on [0, 1].
pub fn semi_infinite<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Quad {
    adaptive(
        |t| {
            let one_minus = 1.0 - t;
            let x = a + t / one_minus;
            let v = f(x) / (one_minus * one_minus);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
        max_panels,
    )
}

/// Tanh–sinh quadrature on [a, b]. The integrand receives the abscissa and its
/// distance to the nearer endpoint (computed without cancellation), so
/// endpoint singularities can be evaluated accurately.
pub fn tanh_sinh<F: FnMut(f64, f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Quad {
    let half = 0.5 * (b - a);
    let center = 0.5 * (a + b);
    let mut evals = 0usize;
    // Abscissa mapping: x = center ± half·tanh(π/2·sinh t).
    let eval_pair = |f: &mut F, t: f64, evals: &mut usize| -> f64 {
        let u = 0.5 * PI * t.sinh();
        let cosh_u = u.cosh();
        let w = 0.5 * PI * t.cosh() / (cosh_u * cosh_u);
        // 1 - tanh(u) = 2 / (e^{2u} + 1)
        let comp = 2.0 / ((2.0 * u).exp() + 1.0);
        let delta = half * comp;
        if !(delta > 0.0) || w == 0.0 {
            return 0.0;
        }
        let x_hi = b - delta;
        let x_lo = a + delta;
        *evals += 2;
        let v = f(x_hi, delta) + f(x_lo, delta);
        if v.is_finite() {
            w * v
        } else {
            0.0
        }
    };
    let t_max = 4.0;
    let mut h = 0.5;
    evals += 1;
    let mut sum = 0.5 * PI * f(center, half);
    let mut k = 1;
    while k as f64 * h <= t_max {
        sum += eval_pair(&mut f, k as f64 * h, &mut evals);
        k += 1;
    }
    let mut estimate = sum * h * half;
    let mut err = f64::INFINITY;
    for _level in 0..12 {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= t_max {
            sum += eval_pair(&mut f, k as f64 * h, &mut evals);
            k += 2;
        }
        let next = sum * h * half;
        err = (next - estimate).abs();
        estimate = next;
        if err <= tol * estimate.abs().max(1e-300) {
            break;
        }
    }
    Quad {
        value: estimate,
        err,
        evals,
        converged: err <= tol * estimate.abs().max(1e-300),
    }
}

/// Direction rule on the half sphere `{θ ∈ S^{n-1} : θ·e_n ≥ 0}` (for n = 1 the
/// single direction +1). Weights sum to half the sphere area, so integrating an
/// even function of θ over the hemisphere and doubling gives the sphere integral.
///
/// n = 2 uses the midpoint rule in the polar angle; n = 3 uses Gauss–Legendre
/// in `cos α` times the trapezoid rule in azimuth.
pub fn hemisphere_rule(n: usize, order: usize) -> Vec<([f64; 3], f64)> {
    let m = order.max(1);
    match n {
        1 => vec![([1.0, 0.0, 0.0], 1.0)],
        2 => (0..m)
            .map(|j| {
                let phi = (j as f64 + 0.5) * PI / m as f64;
                ([phi.cos(), phi.sin(), 0.0], PI / m as f64)
            })
            .collect(),
        3 => {
            let (mu, wmu) = gauss_legendre(m);
            let nb = 2 * m;
            let mut out = Vec::with_capacity(m * nb);
            for (mu, wmu) in mu.iter().zip(&wmu) {
                // map [-1, 1] to [0, 1]
                let z = 0.5 * (mu + 1.0);
                let rho = (1.0 - z * z).max(0.0).sqrt();
                for k in 0..nb {
                    let beta = 2.0 * PI * k as f64 / nb as f64;
                    out.push((
                        [rho * beta.cos(), rho * beta.sin(), z],
                        0.5 * wmu * 2.0 * PI / nb as f64,
                    ));
                }
            }
            out
        }
        _ => panic!("hemisphere_rule: unsupported dimension {n}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let (x, w) = gauss_legendre(6);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // degree 10 monomial: ∫ x^10 = 2/11
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((v - 2.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_smooth_and_singular() {
        let q = adaptive(|x: f64| x.sin(), 0.0, PI, 1e-13, 1e-13, 100);
        assert!((q.value - 2.0).abs() < 1e-12 && q.converged);
        // ∫_0^1 x^{-1/2} = 2
        let q = adaptive(|x: f64| x.powf(-0.5), 0.0, 1.0, 1e-10, 1e-10, 500);
        assert!((q.value - 2.0).abs() < 1e-9, "{q:?}");
        // jump discontinuity
        let q = adaptive(|x: f64| if x < 0.3 { 1.0 } else { 0.0 }, 0.0, 1.0, 1e-10, 0.0, 500);
        assert!((q.value - 0.3).abs() < 1e-9);
    }

    #[test]
    fn semi_infinite_algebraic_decay() {
        // ∫_1^∞ x^{-1.6} = 1/0.6
        let q = semi_infinite(|x: f64| x.powf(-1.6), 1.0, 1e-11, 1e-11, 1000);
        assert!((q.value - 1.0 / 0.6).abs() < 1e-8, "{q:?}");
    }

    #[test]
    fn hemisphere_rule_weights_and_moments() {
        for n in 1..=3 {
            let rule = hemisphere_rule(n, 12);
            let total: f64 = rule.iter().map(|r| r.1).sum();
            let half_area = [1.0, PI, 2.0 * PI][n - 1];
            assert!((total - half_area).abs() < 1e-12);
            for (theta, _) in &rule {
                let norm: f64 = theta.iter().map(|t| t * t).sum();
                assert!((norm - 1.0).abs() < 1e-14);
            }
        }
        // ∫_{S^2} θ_1^2 = 4π/3, so the hemisphere gives 2π/3
        let q: f64 = hemisphere_rule(3, 8).iter().map(|(t, w)| w * t[0] * t[0]).sum();
        assert!((q - 2.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn tanh_sinh_endpoint_singularity() {
        // ∫_0^1 dx / sqrt(x(1-x)) = π, singular at both ends
        let q = tanh_sinh(
            |x, d| {
                let (p, r) = if x < 0.5 { (d, 1.0 - x) } else { (x, d) };
                1.0 / (p * r).sqrt()
            },
            0.0,
            1.0,
            1e-12,
        );
        assert!((q.value - PI).abs() < 1e-10, "{q:?}");
    }
}
