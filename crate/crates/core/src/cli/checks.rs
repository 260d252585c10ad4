//! Oracle-consistency suite run by `verify`.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::discrete::{
    assemble_operator, fit_growth_exponent, semiconvexity, solve_dirichlet, solve_obstacle, Grid1D, Side,
};
use crate::error::Result;
use crate::evaluate::{apply_extremal, apply_operator, Extremal, QuadConfig};
use crate::exact_solutions::{
    ball_torsion, heat_kernel, mean_value_weight, poisson_kernel_ball, semigroup_error, shifted_halfspace_harmonic,
    HeatKernel1D,
};
use crate::field::{BumpField, ExteriorData, FnField, Growth, ScalarField};
use crate::kernels::{Density, Kernel};
use crate::quadrature::{adaptive, semi_infinite};
use crate::special_math::{constants, gamma, sphere_area};
use crate::wos::{ks_p_value, ks_statistic, radial_cdf, stream_rng, wos_solve, Domain, ExitRadius, WosConfig};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// The quantity compared against `tolerance`.
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
    /// Wall time; left out of serialized output so reports stay reproducible.
    #[serde(skip)]
    pub seconds: f64,
}

type CheckFn = fn(u64) -> Result<(bool, f64, f64, String)>;

/// Named checks in a fixed order.
pub const CHECKS: [(&str, CheckFn); 14] = [
    ("constants_half_laplacian", constants_check),
    ("symbol_normalization", symbol_check),
    ("torsion_identity", torsion_check),
    ("halfspace_harmonicity", halfspace_check),
    ("poisson_mean_value_normalization", poisson_check),
    ("wos_shifted_halfspace", wos_check),
    ("exit_law", exit_law_check),
    ("fd_convergence", fd_convergence_check),
    ("discrete_maximum_principle", maximum_principle_check),
    ("obstacle_complementarity", obstacle_check),
    ("free_boundary_exponent", exponent_check),
    ("discrete_semiconvexity", semiconvexity_check),
    ("extremal_algebra", extremal_check),
    ("heat_kernel", heat_check),
];

pub fn run_check(index: usize, seed: u64) -> CheckResult {
    let (name, f) = CHECKS[index];
    let start = Instant::now();
    let (passed, measured, tolerance, detail) = match f(seed) {
        Ok(r) => r,
        Err(e) => (false, f64::NAN, f64::NAN, format!("error: {e}")),
    };
    CheckResult {
        name,
        passed,
        measured,
        tolerance,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_all(seed: u64) -> Vec<CheckResult> {
    (0..CHECKS.len()).map(|i| run_check(i, seed)).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn constants_check(_: u64) -> Result<(bool, f64, f64, String)> {
    let mut worst = 0.0f64;
    for n in 1..=3 {
        let nf = n as f64;
        let direct = gamma((nf + 1.0) / 2.0)? * PI.powf(-(nf + 1.0) / 2.0);
        worst = worst.max(rel(constants(n, 0.5)?.c_ns, direct));
    }
    Ok((worst < 1e-12, worst, 1e-12, "c_{n,1/2} vs Γ((n+1)/2)π^{-(n+1)/2}, n = 1..3".into()))
}

fn symbol_check(_: u64) -> Result<(bool, f64, f64, String)> {
    let mut worst = 0.0f64;
    for &(n, s) in &[(1usize, 0.25), (1, 0.5), (1, 0.75), (2, 0.5)] {
        let k = Kernel::comparable(n, s, 1.0, 1.0, Density::homogeneous(n, s, 1.0))?;
        let mut xi = vec![0.0; n];
        xi[0] = 1.0;
        worst = worst.max(rel(k.symbol(&xi)?, 1.0 / constants(n, s)?.c_ns));
    }
    Ok((worst < 1e-4, worst, 1e-4, "∫(1−cos y₁)|y|^{−n−2s}dy vs 1/c_{n,s}".into()))
}

fn torsion_check(_: u64) -> Result<(bool, f64, f64, String)> {
    let cfg = QuadConfig::default();
    let mut worst = 0.0f64;
    let mut half = 0.0f64;
    for &s in &[0.3, 0.5, 0.7] {
        let k = Kernel::fractional_laplacian(1, s)?;
        let u = ball_torsion(1, s)?;
        let q = constants(1, s)?.q_ns;
        for &x in &[0.0, 0.3, -0.3, 0.6, -0.6] {
            let e = rel(apply_operator(&k, &*u.field, &[x], &cfg)?.value, q);
            worst = worst.max(e);
            if s == 0.5 {
                half = half.max(e);
            }
        }
    }
    Ok((worst < 1e-3, worst, 1e-3, format!("max rel err vs q_{{1,s}}; at s = 1/2 vs 1: {half:.2e}")))
}

fn halfspace_check(_: u64) -> Result<(bool, f64, f64, String)> {
    let cfg = QuadConfig::default();
    let mut worst = 0.0f64;
    for &s in &[0.3, 0.5, 0.7] {
        let k = Kernel::fractional_laplacian(1, s)?;
        let u = shifted_halfspace_harmonic(1, s, &[1.0], 1.0)?;
        let q = constants(1, s)?.q_ns;
        for &x in &[-0.5, 0.0, 0.5] {
            worst = worst.max(apply_operator(&k, &*u.field, &[x], &cfg)?.value.abs() / q);
        }
    }
    Ok((worst < 1e-3, worst, 1e-3, "|(-Δ)^s (x+1)_+^s| / q_{1,s}".into()))
}

fn poisson_check(_: u64) -> Result<(bool, f64, f64, String)> {
    let mut worst = 0.0f64;
    for &x in &[0.0, 0.5] {
        let f = |z: f64| -> f64 {
            poisson_kernel_ball(1, 0.5, &[x], &[z]).unwrap_or(f64::NAN)
                + poisson_kernel_ball(1, 0.5, &[x], &[-z]).unwrap_or(f64::NAN)
        };
        // z = 1 + w² removes the inverse square root at |z| = 1
        let near = adaptive(|w| 2.0 * w * f(1.0 + w * w), 0.0, 1.0, 1e-12, 1e-12, 2000);
        let far = semi_infinite(f, 2.0, 1e-12, 1e-12, 2000);
        worst = worst.max((near.value + far.value - 1.0).abs());
    }
    let mut worst_w = 0.0f64;
    for &s in &[0.3, 0.7] {
        let w0 = mean_value_weight(0.0, 1, s)?;
        let outer = semi_infinite(|t| mean_value_weight(t, 1, s).unwrap_or(f64::NAN), 1.0, 1e-12, 1e-12, 4000);
        worst_w = worst_w.max((sphere_area(1) * (w0 + outer.value) - 1.0).abs());
    }
    let m = worst.max(worst_w);
    Ok((
        m < 1e-4,
        m,
        1e-4,
        format!("ball Poisson kernel mass err {worst:.2e}; mean-value weight mass err {worst_w:.2e}"),
    ))
}

fn wos_check(seed: u64) -> Result<(bool, f64, f64, String)> {
    let start = Instant::now();
    let mut ok = true;
    let mut worst_z = 0.0f64;
    let mut detail = String::new();
    for &s in &[0.3, 0.5, 0.7] {
        let domain = Domain::ball(vec![0.0], 1.0)?;
        let g = ExteriorData::new(shifted_halfspace_harmonic(1, s, &[1.0], 1.0)?.field);
        let cfg = WosConfig {
            n_samples: 100_000,
            master_seed: seed,
            ..Default::default()
        };
        let e = wos_solve(&domain, &g, &[0.0], s, &cfg)?;
        let z = (e.mean - 1.0).abs() / e.stderr;
        ok &= z < 4.0 && e.stderr < 0.01;
        worst_z = worst_z.max(z);
        detail += &format!("s={s}: mean {:.5} stderr {:.2e}; ", e.mean, e.stderr);
    }
    ok &= start.elapsed().as_secs_f64() < 60.0;
    Ok((ok, worst_z, 4.0, detail.trim_end_matches("; ").to_string()))
}

fn exit_law_check(seed: u64) -> Result<(bool, f64, f64, String)> {
    let mut min_p = 1.0f64;
    for (k, &s) in [0.3, 0.5, 0.7].iter().enumerate() {
        let r = ExitRadius::new(s)?;
        let mut rng = stream_rng(seed, 100 + k as u64);
        let radii: Vec<f64> = (0..10_000).map(|_| r.sample(&mut rng)).collect();
        let d = ks_statistic(&radii, |t| radial_cdf(t, s).unwrap_or(f64::NAN));
        min_p = min_p.min(ks_p_value(d, radii.len()));
    }
    let r = ExitRadius::new(0.5)?;
    let mut rng = stream_rng(seed, 200);
    let m = 100_000;
    let above = (0..m).filter(|_| r.sample(&mut rng) > 2.0).count() as f64 / m as f64;
    let sigmas = (above - 1.0 / 3.0).abs() / (2.0 / 9.0 / m as f64).sqrt();
    Ok((
        min_p > 0.01 && sigmas < 3.0,
        min_p,
        0.01,
        format!("smallest KS p-value; P(ρ > 2) = {above:.4} ({sigmas:.2} σ from 1/3)"),
    ))
}

fn fd_convergence_check(_: u64) -> Result<(bool, f64, f64, String)> {
    let zero = ExteriorData::constant(1, 0.0);
    let mut errs = Vec::new();
    for n in [256, 512, 1024] {
        let op = assemble_operator(0.5, Grid1D::new(-1.0, 1.0, n)?)?;
        let u = solve_dirichlet(&op, &vec![1.0; n], &zero)?;
        let e = (0..n)
            .filter(|&i| op.grid.x(i).abs() <= 0.5)
            .map(|i| (u.values[i] - (1.0 - op.grid.x(i).powi(2)).sqrt()).abs())
            .fold(0.0, f64::max);
        errs.push(e);
    }
    let monotone = errs.windows(2).all(|w| w[1] <= 1.1 * w[0]);
    Ok((
        monotone && errs[2] < 1e-2,
        errs[2],
        1e-2,
        format!("interior max errors N = 256, 512, 1024: {:.2e}, {:.2e}, {:.2e}", errs[0], errs[1], errs[2]),
    ))
}

fn maximum_principle_check(seed: u64) -> Result<(bool, f64, f64, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..200 {
        let s = rng.random_range(0.1..0.9);
        let n = rng.random_range(8..96);
        let op = assemble_operator(s, Grid1D::new(-1.0, 1.0, n)?)?;
        let f: Vec<f64> = (0..n)
            .map(|_| if rng.random::<f64>() < 0.3 { 0.0 } else { rng.random::<f64>() })
            .collect();
        let (amp, shift) = (rng.random::<f64>(), rng.random_range(-2.0..2.0));
        let g = ExteriorData::new(Arc::new(FnField::new(
            1,
            move |x: &[f64]| amp * (-(x[0] - shift).powi(2)).exp(),
            Growth { m: amp, tau: 0.0 },
        )));
        let u = solve_dirichlet(&op, &f, &g)?;
        worst = worst.min(u.values.iter().copied().fold(f64::INFINITY, f64::min));
    }
    Ok((worst >= -1e-12, worst, -1e-12, "smallest value over 200 random f, g ≥ 0".into()))
}

fn obstacle_check(seed: u64) -> Result<(bool, f64, f64, String)> {
    let zero = ExteriorData::constant(1, 0.0);
    let op = assemble_operator(0.5, Grid1D::new(-1.0, 1.0, 2048)?)?;
    let phi = op.grid.sample(|x| 0.5 - x * x);
    let sol = solve_obstacle(&op, &phi, &zero, 1e-8)?;
    let above = sol.v.values.iter().zip(&phi).all(|(v, p)| *v >= p - 1e-14);
    let contact = !sol.contact_set.is_empty();

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let small = assemble_operator(0.5, Grid1D::new(-1.0, 1.0, 256)?)?;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let (c, w, lift) = (rng.random_range(-0.5..0.5), rng.random_range(0.2..0.8), rng.random_range(0.0..0.3));
        let height = rng.random_range(0.1..1.0);
        let phi1 = small.grid.sample(|x| height * (1.0 - ((x - c) / w).powi(2)) - 0.2);
        let phi2: Vec<f64> = phi1
            .iter()
            .zip(small.grid.nodes())
            .map(|(p, x)| p + lift * (1.0 - x * x))
            .collect();
        let v1 = solve_obstacle(&small, &phi1, &zero, 1e-10)?;
        let v2 = solve_obstacle(&small, &phi2, &zero, 1e-10)?;
        let gap = v1.v.values.iter().zip(&v2.v.values).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(gap);
    }
    let monotone = worst <= 1e-10;
    Ok((
        sol.residual < 1e-8 && above && contact && monotone,
        sol.residual,
        1e-8,
        format!(
            "N=2048 residual {:.2e}, {} contact nodes, v ≥ φ: {above}; max(v₁ − v₂) over 20 ordered pairs {worst:.2e}",
            sol.residual,
            sol.contact_set.len()
        ),
    ))
}

fn exponent_check(_: u64) -> Result<(bool, f64, f64, String)> {
    let start = Instant::now();
    let zero = ExteriorData::constant(1, 0.0);
    let mut ok = true;
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for &s in &[0.3, 0.5] {
        let n = 4096;
        let op = assemble_operator(s, Grid1D::new(-1.0, 1.0, n)?)?;
        let phi = op.grid.sample(|x| 0.5 - x * x);
        let sol = solve_obstacle(&op, &phi, &zero, 1e-9)?;
        for side in [Side::Left, Side::Right] {
            let fit = fit_growth_exponent(&sol, &phi, side, 2..n / 16)?;
            let dev = (fit.exponent - (1.0 + s)).abs();
            ok &= dev <= 0.15 && fit.r2 > 0.99;
            worst = worst.max(dev);
            detail += &format!("s={s} {side:?}: {:.3} (r² {:.5}); ", fit.exponent, fit.r2);
        }
    }
    ok &= start.elapsed().as_secs_f64() < 120.0;
    Ok((ok, worst, 0.15, detail.trim_end_matches("; ").to_string()))
}

fn semiconvexity_check(_: u64) -> Result<(bool, f64, f64, String)> {
    let zero = ExteriorData::constant(1, 0.0);
    let mut defects = Vec::new();
    let mut floors = Vec::new();
    for n in [1024, 2048] {
        let op = assemble_operator(0.5, Grid1D::new(-1.0, 1.0, n)?)?;
        let phi = op.grid.sample(|x| 0.5 - x * x);
        let sol = solve_obstacle(&op, &phi, &zero, 1e-10)?;
        let rep = semiconvexity(&sol.v, 2.0, -0.5, 0.5)?;
        defects.push(rep.defect);
        // second differences carry a rounding error of a few ulps of v over h²
        let h = op.grid.h();
        floors.push(16.0 * f64::EPSILON / (h * h));
    }
    let (d1, d2) = (defects[0], defects[1]);
    let resolved = d1 > floors[0];
    let ok = if resolved {
        let ratio = d2 / d1;
        (0.4..=0.6).contains(&ratio)
    } else {
        // the bound already holds without slack on both grids
        d2 <= floors[1]
    };
    Ok((
        ok,
        d2,
        if resolved { 0.6 * d1 } else { floors[1] },
        format!(
            "defect below −max|φ''| on [−0.5, 0.5]: N=1024 {d1:.2e}, N=2048 {d2:.2e} (rounding floor {:.1e})",
            floors[1]
        ),
    ))
}

fn random_bump(rng: &mut ChaCha8Rng, n: usize) -> Result<BumpField> {
    let count = rng.random_range(1..=3);
    let bumps = (0..count)
        .map(|_| {
            let amp = rng.random_range(-1.0..1.0);
            let center: Vec<f64> = (0..n).map(|_| rng.random_range(-0.8..0.8)).collect();
            (amp, center, rng.random_range(0.4..1.2))
        })
        .collect();
    BumpField::new(n, bumps)
}

fn extremal_check(seed: u64) -> Result<(bool, f64, f64, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xe7);
    let cfg = QuadConfig::default();
    let mut worst = f64::NEG_INFINITY;
    for trial in 0..50 {
        let n = if trial % 5 == 4 { 2 } else { 1 };
        let s = rng.random_range(0.2..0.8);
        let u = random_bump(&mut rng, n)?;
        let neg = crate::field::Combination::new(vec![(-1.0, Arc::new(u.clone()) as Arc<dyn ScalarField>)])?;
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (lo, hi) = (0.5, 1.5);
        let plus = apply_extremal(lo, hi, Extremal::Plus, s, &u, &x, &cfg)?;
        let minus = apply_extremal(lo, hi, Extremal::Minus, s, &u, &x, &cfg)?;
        let plus_neg = apply_extremal(lo, hi, Extremal::Plus, s, &neg, &x, &cfg)?;
        let floor = 1e-12 * (1.0 + plus.value.abs() + minus.value.abs());
        // M⁺(−u) = −M⁻u
        let e1 = (plus_neg.value + minus.value).abs() - (plus_neg.err_est + minus.err_est) - floor;
        // M⁻u ≤ −Lu ≤ M⁺u for a kernel between λ and Λ
        let k = Kernel::comparable(n, s, lo, hi, Density::oscillating(n, s, 1.0))?;
        let lu = apply_operator(&k, &u, &x, &cfg)?;
        let e2 = (minus.value + lu.value) - (minus.err_est + lu.err_est) - floor;
        let e3 = -(plus.value + lu.value) - (plus.err_est + lu.err_est) - floor;
        // λ = Λ = 1: M⁺u = −(−Δ)^s u / c_{n,s}
        let one = apply_extremal(1.0, 1.0, Extremal::Plus, s, &u, &x, &cfg)?;
        let fl = apply_operator(&Kernel::fractional_laplacian(n, s)?, &u, &x, &cfg)?;
        let c = constants(n, s)?.c_ns;
        let e4 = (one.value + fl.value / c).abs() - (one.err_est + fl.err_est / c) - floor;
        worst = worst.max(e1).max(e2).max(e3).max(e4);
    }
    Ok((
        worst <= 0.0,
        worst,
        0.0,
        "largest violation beyond the combined error estimates over 50 random bump fields".into(),
    ))
}

fn heat_check(_: u64) -> Result<(bool, f64, f64, String)> {
    let table = HeatKernel1D::new(0.5)?;
    let mut sup = 0.0f64;
    for i in 0..=1000 {
        let x = -5.0 + 0.01 * i as f64;
        let exact = heat_kernel(1, 0.5, 1.0, &[x])?;
        sup = sup.max(rel(table.eval(1.0, x)?, exact));
        debug_assert!((exact - 1.0 / (PI * (1.0 + x * x))).abs() < 1e-15);
    }
    let mut mass = 0.0f64;
    for &s in &[0.3, 0.7] {
        mass = mass.max((HeatKernel1D::new(s)?.total_mass() - 1.0).abs());
    }
    let xs: Vec<f64> = (0..=10).map(|i| -5.0 + i as f64).collect();
    let mut semi = 0.0f64;
    for &s in &[0.3, 0.7] {
        semi = semi.max(semigroup_error(s, &xs)?);
    }
    Ok((
        sup < 1e-3 && mass < 1e-6 && semi < 1e-3,
        sup,
        1e-3,
        format!("FFT vs Cauchy sup rel err {sup:.2e}; mass err {mass:.2e}; semigroup rel err {semi:.2e}"),
    ))
}
