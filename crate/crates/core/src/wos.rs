//! Walk-on-spheres for `(-Δ)^s u = 0` in Ω with `u = g` outside Ω.
//!
//! From a ball `B_r(c)` the isotropic 2s-stable process exits to
//! `c + rρθ`, θ uniform on the sphere and `1 − ρ^{−2} ~ Beta(1−s, s)`.
//! The walker restarts from every landing point inside Ω.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_dim, check_order, Error, Result};
use crate::field::ExteriorData;
use crate::kernels::norm;
use crate::special_math::beta_inc_reg;

/// Open sets with a conservative distance to the complement.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Ball { center: Vec<f64>, radius: f64 },
    /// `(a, b) ⊂ ℝ`
    Interval { a: f64, b: f64 },
    /// `Π (lo_i, hi_i)`
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `{x : x·normal > offset}`, `normal` a unit vector.
    HalfSpace { normal: Vec<f64>, offset: f64 },
    Union(Vec<Domain>),
    Intersection(Vec<Domain>),
}

impl Domain {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        check_dim(center.len())?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Parameter(format!("ball radius {radius} must be positive")));
        }
        Ok(Domain::Ball { center, radius })
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Parameter(format!("interval ({a}, {b}) is empty")));
        }
        Ok(Domain::Interval { a, b })
    }

    pub fn cuboid(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_dim(lo.len())?;
        if lo.len() != hi.len() || lo.iter().zip(&hi).any(|(l, h)| !(l < h)) {
            return Err(Error::Parameter("box needs lo < hi in every coordinate".into()));
        }
        Ok(Domain::Box { lo, hi })
    }

    pub fn half_space(normal: Vec<f64>, offset: f64) -> Result<Self> {
        check_dim(normal.len())?;
        let len = norm(&normal);
        if !(len > 0.0) {
            return Err(Error::Parameter("half-space normal must be nonzero".into()));
        }
        Ok(Domain::HalfSpace {
            normal: normal.iter().map(|v| v / len).collect(),
            offset: offset / len,
        })
    }

    pub fn union(parts: Vec<Domain>) -> Result<Self> {
        Self::check_parts(&parts)?;
        Ok(Domain::Union(parts))
    }

    pub fn intersection(parts: Vec<Domain>) -> Result<Self> {
        Self::check_parts(&parts)?;
        Ok(Domain::Intersection(parts))
    }

    fn check_parts(parts: &[Domain]) -> Result<()> {
        let n = parts.first().ok_or_else(|| Error::Parameter("no component domains".into()))?.dim();
        if parts.iter().any(|p| p.dim() != n) {
            return Err(Error::Parameter("component domains differ in dimension".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Ball { center, .. } => center.len(),
            Domain::Interval { .. } => 1,
            Domain::Box { lo, .. } => lo.len(),
            Domain::HalfSpace { normal, .. } => normal.len(),
            Domain::Union(p) | Domain::Intersection(p) => p[0].dim(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.dist_to_complement(x) > 0.0
    }

    /// Signed-style distance: positive inside (never above the true distance
    /// to Ωᶜ), nonpositive outside.
    pub fn dist_to_complement(&self, x: &[f64]) -> f64 {
        match self {
            Domain::Ball { center, radius } => {
                let d: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                radius - d.sqrt()
            }
            Domain::Interval { a, b } => (x[0] - a).min(b - x[0]),
            Domain::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (l, h))| (v - l).min(h - v))
                .fold(f64::INFINITY, f64::min),
            Domain::HalfSpace { normal, offset } => dot(x, normal) - offset,
            Domain::Union(p) => p.iter().map(|d| d.dist_to_complement(x)).fold(f64::NEG_INFINITY, f64::max),
            Domain::Intersection(p) => p.iter().map(|d| d.dist_to_complement(x)).fold(f64::INFINITY, f64::min),
        }
    }

    /// Axis-aligned bounding box, `None` when unbounded.
    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Domain::Ball { center, radius } => Some((
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            )),
            Domain::Interval { a, b } => Some((vec![*a], vec![*b])),
            Domain::Box { lo, hi } => Some((lo.clone(), hi.clone())),
            Domain::HalfSpace { .. } => None,
            Domain::Union(p) => p.iter().try_fold(None::<(Vec<f64>, Vec<f64>)>, |acc, d| {
                let (lo, hi) = d.bounding_box()?;
                Some(Some(match acc {
                    None => (lo, hi),
                    Some((l, h)) => (
                        l.iter().zip(&lo).map(|(a, b)| a.min(*b)).collect(),
                        h.iter().zip(&hi).map(|(a, b)| a.max(*b)).collect(),
                    ),
                }))
            })?,
            Domain::Intersection(p) => p.iter().filter_map(|d| d.bounding_box()).reduce(|(l, h), (lo, hi)| {
                (
                    l.iter().zip(&lo).map(|(a, b)| a.max(*b)).collect(),
                    h.iter().zip(&hi).map(|(a, b)| a.min(*b)).collect(),
                )
            }),
        }
    }

    /// Upper bound on the diameter (infinite for unbounded domains).
    pub fn diameter_bound(&self) -> f64 {
        match self {
            Domain::Ball { radius, .. } => 2.0 * radius,
            Domain::Interval { a, b } => b - a,
            _ => match self.bounding_box() {
                Some((lo, hi)) => lo.iter().zip(&hi).map(|(l, h)| (h - l).max(0.0).powi(2)).sum::<f64>().sqrt(),
                None => f64::INFINITY,
            },
        }
    }

    /// A point of Ωᶜ near `x`, used when a walk is cut off.
    pub fn project_outside(&self, x: &[f64]) -> Vec<f64> {
        let raw = self.nearest_exterior(x);
        // rounding can leave the foot point barely inside; push it out
        let mut stretch = f64::EPSILON;
        let mut z = raw.clone();
        while self.contains(&z) && stretch < 1e-6 {
            z = x.iter().zip(&raw).map(|(a, b)| a + (1.0 + stretch) * (b - a)).collect();
            stretch *= 4.0;
        }
        z
    }

    fn nearest_exterior(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Domain::Ball { center, radius } => {
                let d: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                let len = norm(&d);
                if len == 0.0 {
                    let mut z = center.clone();
                    z[0] += radius;
                    return z;
                }
                center.iter().zip(&d).map(|(c, v)| c + v * radius / len).collect()
            }
            Domain::Interval { a, b } => vec![if x[0] - a <= b - x[0] { *a } else { *b }],
            Domain::Box { lo, hi } => {
                let (mut best, mut k, mut to_hi) = (f64::INFINITY, 0, false);
                for i in 0..x.len() {
                    for (gap, up) in [(x[i] - lo[i], false), (hi[i] - x[i], true)] {
                        if gap < best {
                            (best, k, to_hi) = (gap, i, up);
                        }
                    }
                }
                let mut z = x.to_vec();
                z[k] = if to_hi { hi[k] } else { lo[k] };
                z
            }
            Domain::HalfSpace { normal, offset } => {
                let d = dot(x, normal) - offset;
                x.iter().zip(normal).map(|(v, e)| v - d.max(0.0) * e).collect()
            }
            Domain::Intersection(p) => p
                .iter()
                .map(|d| d.nearest_exterior(x))
                .min_by(|a, b| dist(a, x).total_cmp(&dist(b, x)))
                .expect("nonempty"),
            Domain::Union(p) => {
                // leave each component that still contains the point
                let mut z = x.to_vec();
                for _ in 0..4 * p.len() {
                    match p.iter().find(|d| d.contains(&z)) {
                        Some(d) => z = d.project_outside(&z),
                        None => return z,
                    }
                }
                let mut far = x.to_vec();
                far[0] += self.diameter_bound().min(1e300) + 1.0;
                far
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WosConfig {
    pub radius_safety: f64,
    pub max_steps: usize,
    pub master_seed: u64,
    pub n_samples: usize,
    pub n_streams: usize,
}

impl Default for WosConfig {
    fn default() -> Self {
        WosConfig {
            radius_safety: 1.0,
            max_steps: 10_000,
            master_seed: 0,
            n_samples: 10_000,
            n_streams: 64,
        }
    }
}

impl WosConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius_safety > 0.0 && self.radius_safety <= 1.0) {
            return Err(Error::Parameter(format!("radius_safety {} not in (0, 1]", self.radius_safety)));
        }
        if self.max_steps == 0 || self.n_samples == 0 || self.n_streams == 0 {
            return Err(Error::Parameter("max_steps, n_samples and n_streams must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WosEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub mean_steps: f64,
    pub max_steps_hit: usize,
    /// More than 1% of the walks were cut off at `max_steps`.
    pub bias_warning: bool,
}

/// Independent generator for stream `k` of `master_seed`.
pub fn stream_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Uniform point on the unit sphere of ℝⁿ.
pub fn sample_direction<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![if rng.random::<bool>() { 1.0 } else { -1.0 }];
    }
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let len = norm(&v);
        if len > 1e-12 {
            return v.into_iter().map(|x| x / len).collect();
        }
    }
}

/// Exit radius `ρ = |z − c|/r > 1` with `1 − ρ^{−2} = V ~ Beta(1−s, s)`.
///
/// `V = X/(X+Y)` with `X ~ Γ(1−s)`, `Y ~ Γ(s)`, so `ρ² − 1 = X/Y` keeps full
/// relative precision both near the sphere and in the far tail.
pub struct ExitRadius {
    x: Gamma<f64>,
    y: Gamma<f64>,
}

impl ExitRadius {
    pub fn new(s: f64) -> Result<Self> {
        check_order(s)?;
        let gamma = |shape: f64| Gamma::new(shape, 1.0).map_err(|e| Error::Parameter(e.to_string()));
        Ok(ExitRadius {
            x: gamma(1.0 - s)?,
            y: gamma(s)?,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let x: f64 = self.x.sample(rng);
            let y: f64 = self.y.sample(rng);
            let rho = (1.0 + x / y).sqrt();
            // x = 0 (landing on the sphere) and y = 0 (a jump to infinity)
            // are null events produced only by underflow
            if rho > 1.0 && rho.is_finite() {
                return rho;
            }
        }
    }
}

/// Exit point of the 2s-stable process from `B_r(center)`.
pub fn sample_exit<R: Rng + ?Sized>(rng: &mut R, center: &[f64], r: f64, s: f64) -> Result<Vec<f64>> {
    if !(r > 0.0) {
        return Err(Error::Parameter(format!("radius {r} must be positive")));
    }
    let rho = ExitRadius::new(s)?.sample(rng);
    Ok(exit_point(rng, center, r, rho))
}

fn exit_point<R: Rng + ?Sized>(rng: &mut R, center: &[f64], r: f64, rho: f64) -> Vec<f64> {
    let theta = sample_direction(rng, center.len());
    center.iter().zip(&theta).map(|(c, t)| c + r * rho * t).collect()
}

/// `P(ρ ≤ t) = I_{1−t^{−2}}(1−s, s)` for `t ≥ 1`.
pub fn radial_cdf(t: f64, s: f64) -> Result<f64> {
    if t <= 1.0 {
        return Ok(0.0);
    }
    beta_inc_reg(1.0 - s, s, 1.0 - t.powi(-2))
}

/// Running mean and centered sum of squares.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: usize,
    mean: f64,
    m2: f64,
    steps: u64,
    hit: usize,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let delta = other.mean - self.mean;
        Moments {
            count: self.count + other.count,
            mean: (na * self.mean + nb * other.mean) / n,
            m2: self.m2 + other.m2 + delta * delta * na * nb / n,
            steps: self.steps + other.steps,
            hit: self.hit + other.hit,
        }
    }
}

/// Monte Carlo estimate of `u(x)` for `(-Δ)^s u = 0` in Ω, `u = g` in Ωᶜ.
pub fn wos_solve(domain: &Domain, g: &ExteriorData, x: &[f64], s: f64, cfg: &WosConfig) -> Result<WosEstimate> {
    check_order(s)?;
    cfg.validate()?;
    g.check(s)?;
    let n = domain.dim();
    if x.len() != n || g.field.dim() != n {
        return Err(Error::Parameter("point, domain and data dimensions differ".into()));
    }
    if !domain.contains(x) {
        return Err(Error::Domain(format!("start point {x:?} is not inside the domain")));
    }
    let radius = ExitRadius::new(s)?;
    let streams = cfg.n_streams.min(cfg.n_samples);
    let per_stream: Vec<Moments> = (0..streams)
        .into_par_iter()
        .map(|k| {
            let lo = k * cfg.n_samples / streams;
            let hi = (k + 1) * cfg.n_samples / streams;
            let mut rng = stream_rng(cfg.master_seed, k as u64);
            let mut acc = Moments::default();
            for _ in lo..hi {
                let mut z = x.to_vec();
                let mut steps = 0;
                loop {
                    let d = domain.dist_to_complement(&z);
                    if d <= 0.0 {
                        break;
                    }
                    if steps == cfg.max_steps {
                        z = domain.project_outside(&z);
                        acc.hit += 1;
                        break;
                    }
                    let rho = radius.sample(&mut rng);
                    z = exit_point(&mut rng, &z, cfg.radius_safety * d, rho);
                    steps += 1;
                }
                acc.steps += steps as u64;
                acc.push(g.eval(&z));
            }
            acc
        })
        .collect();
    let total = per_stream.into_iter().fold(Moments::default(), Moments::merge);
    let count = total.count;
    let variance = if count > 1 { total.m2 / (count - 1) as f64 } else { 0.0 };
    if !total.mean.is_finite() {
        return Err(Error::NumericalFailure {
            what: "non-finite Monte Carlo mean".into(),
            achieved: total.mean,
        });
    }
    Ok(WosEstimate {
        mean: total.mean,
        stderr: (variance.max(0.0) / count as f64).sqrt(),
        n_samples: count,
        mean_steps: total.steps as f64 / count as f64,
        max_steps_hit: total.hit,
        bias_warning: total.hit * 100 > count,
    })
}

/// One-sample Kolmogorov–Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &[f64], mut cdf: impl FnMut(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// Asymptotic p-value `Q_KS((√n + 0.12 + 0.11/√n) D)`.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::field::{FnField, Growth};

    #[test]
    fn domain_distances() {
        let b = Domain::ball(vec![0.0, 0.0], 2.0).unwrap();
        assert_eq!(b.dist_to_complement(&[1.0, 0.0]), 1.0);
        assert!(!b.contains(&[2.0, 0.0]));
        let i = Domain::interval(-1.0, 3.0).unwrap();
        assert_eq!(i.dist_to_complement(&[2.5]), 0.5);
        let bx = Domain::cuboid(vec![0.0, 0.0], vec![1.0, 4.0]).unwrap();
        assert_eq!(bx.dist_to_complement(&[0.5, 3.0]), 0.5);
        assert!((bx.diameter_bound() - 17f64.sqrt()).abs() < 1e-15);
        let h = Domain::half_space(vec![0.0, 2.0], 2.0).unwrap();
        assert_eq!(h.dist_to_complement(&[5.0, 3.0]), 2.0);
        assert_eq!(h.diameter_bound(), f64::INFINITY);
        let u = Domain::union(vec![Domain::interval(0.0, 1.0).unwrap(), Domain::interval(2.0, 5.0).unwrap()]).unwrap();
        assert!(u.contains(&[0.5]) && u.contains(&[3.0]) && !u.contains(&[1.5]));
        assert_eq!(u.diameter_bound(), 5.0);
        let x = Domain::intersection(vec![Domain::interval(0.0, 3.0).unwrap(), Domain::interval(2.0, 5.0).unwrap()]).unwrap();
        assert!(x.contains(&[2.5]) && !x.contains(&[1.0]));
        assert_eq!(x.dist_to_complement(&[2.75]), 0.25);
        assert_eq!(x.diameter_bound(), 1.0);
    }

    #[test]
    fn projections_leave_the_domain() {
        let doms = vec![
            Domain::ball(vec![0.0, 1.0], 1.0).unwrap(),
            Domain::cuboid(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap(),
            Domain::half_space(vec![1.0, 1.0], 0.0).unwrap(),
            Domain::union(vec![Domain::interval(0.0, 1.0).unwrap(), Domain::interval(0.5, 2.0).unwrap()]).unwrap(),
        ];
        for d in doms {
            let x = if d.dim() == 1 { vec![0.9] } else { vec![0.4, 0.7] };
            assert!(d.contains(&x), "{d:?}");
            assert!(!d.contains(&d.project_outside(&x)), "{d:?}");
        }
    }

    #[test]
    fn exit_radius_exceeds_one() {
        let mut rng = stream_rng(3, 0);
        for &s in &[0.1, 0.5, 0.9] {
            let r = ExitRadius::new(s).unwrap();
            assert!((0..2000).all(|_| r.sample(&mut rng) > 1.0));
        }
    }

    #[test]
    fn exit_radius_median_matches_cdf() {
        // arcsine law at s = ½: P(ρ > 2) = 1/3
        let r = ExitRadius::new(0.5).unwrap();
        let mut rng = stream_rng(11, 2);
        let m = 40_000;
        let above = (0..m).filter(|_| r.sample(&mut rng) > 2.0).count() as f64 / m as f64;
        let sigma = (1.0 / 3.0 * 2.0 / 3.0 / m as f64).sqrt();
        assert!((above - 1.0 / 3.0).abs() < 3.0 * sigma, "{above}");
        assert!((radial_cdf(2.0, 0.5).unwrap() - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn constant_data_is_exact() {
        let d = Domain::ball(vec![0.0, 0.0], 1.0).unwrap();
        let g = ExteriorData::constant(2, 2.5);
        let cfg = WosConfig {
            n_samples: 1000,
            radius_safety: 0.5,
            ..Default::default()
        };
        let e = wos_solve(&d, &g, &[0.2, 0.1], 0.4, &cfg).unwrap();
        assert_eq!(e.mean, 2.5);
        assert_eq!(e.stderr, 0.0);
        assert!(e.mean_steps >= 1.0);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let d = Domain::interval(-1.0, 1.0).unwrap();
        let g = ExteriorData::new(Arc::new(FnField::new(
            1,
            |x| (x[0] + 1.0).max(0.0).sqrt(),
            Growth { m: 2.0, tau: 0.5 },
        )));
        let cfg = WosConfig {
            n_samples: 5000,
            n_streams: 7,
            master_seed: 9,
            radius_safety: 0.8,
            ..Default::default()
        };
        let a = wos_solve(&d, &g, &[0.3], 0.6, &cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| wos_solve(&d, &g, &[0.3], 0.6, &cfg).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    }

    #[test]
    fn rejects_bad_input() {
        let d = Domain::interval(-1.0, 1.0).unwrap();
        let g = ExteriorData::constant(1, 1.0);
        assert!(matches!(
            wos_solve(&d, &g, &[1.5], 0.5, &WosConfig::default()),
            Err(Error::Domain(_))
        ));
        let bad = WosConfig {
            radius_safety: 1.5,
            ..Default::default()
        };
        assert!(wos_solve(&d, &g, &[0.0], 0.5, &bad).is_err());
        let heavy = ExteriorData::new(Arc::new(FnField::new(1, |x| x[0].abs(), Growth { m: 1.0, tau: 1.0 })));
        assert!(matches!(
            wos_solve(&d, &heavy, &[0.0], 0.5, &WosConfig::default()),
            Err(Error::NonIntegrableTail { .. })
        ));
    }

    #[test]
    fn ks_against_uniform() {
        let mut rng = stream_rng(1, 0);
        let xs: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let d = ks_statistic(&xs, |x| x);
        assert!(ks_p_value(d, xs.len()) > 0.01);
        let skewed: Vec<f64> = xs.iter().map(|x| x * x).collect();
        assert!(ks_p_value(ks_statistic(&skewed, |x| x), xs.len()) < 1e-6);
    }
}
