//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use mlfrac_core::cauchy_solver::{n_conditions, solve, CauchyProblem, Forcing};
use mlfrac_core::char_poly::{CharPolynomial, RootSpectrum};
use mlfrac_core::laplace_oracle::{caputo_residual, convolve_numeric, invert_solution, TalbotOptions};
use mlfrac_core::montecarlo::{monte_carlo_multi, McConfig, McEstimate};
use mlfrac_core::quadrature::{integrate_left_singular, QuadOptions};
use mlfrac_core::random_motion::{
    cf_derivative_exact, cf_initial_derivative, empirical_cf, orthogonal_cf_nu1, orthogonal_motion,
    orthogonal_problem, orthogonal_roots, simulate_path, telegraph_decomposition_check, three_direction_motion,
    three_direction_problem, MotionPath, MotionSpec,
};
use mlfrac_core::special_functions::{
    gamma_real, ml2, ml_multivariate, ml_prabhakar, ml_shift_identity, MlParams2, MlParamsMultivariate,
    MlParamsPrabhakar, TruncationPolicy,
};
use mlfrac_core::subordination::{
    build_associated_problem, g_density, iterated_brownian_mc, mellin_g, mellin_product, subordinate_mc,
    subordinate_quadrature, GVariableSpec,
};
use mlfrac_core::{Complex64, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C = Complex64;

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn rel_err(a: C, b: C) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale.is_infinite() {
        f64::INFINITY
    } else if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

fn random_complex(rng: &mut ChaCha8Rng, r: std::ops::Range<f64>) -> C {
    C::from_polar(rng.random_range(r), rng.random_range(-PI..PI))
}

// ---------------------------------------------------------------------------
// 1. Mittag-Leffler identities

fn ml_identities() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let pol = TruncationPolicy::default();
    let mut worst: f64 = 0.0;
    let mut points = 0;
    let mut check = |a: C, b: C| {
        worst = worst.max(rel_err(a, b));
        points += 1;
    };
    // |z|^{1/nu} stays below ~6, where the power series is well conditioned
    for _ in 0..25 {
        let nu = rng.random_range(0.5..2.0);
        let delta = rng.random_range(0.5..3.0);
        let g1 = rng.random_range(0.5..2.5);
        let g2 = rng.random_range(0.5..2.5);
        let z = random_complex(&mut rng, 0.5..2.5);

        // Prabhakar with gamma = 1 is the two-parameter function
        let two = ml2(&MlParams2::real(nu, delta)?, z, &pol)?.value;
        let prab1 = ml_prabhakar(&MlParamsPrabhakar::real(nu, delta, 1.0)?, z, &pol)?.value;
        check(prab1, two);

        // one variable: the multivariate function is the Prabhakar one, bit for bit
        let prab = ml_prabhakar(&MlParamsPrabhakar::real(nu, delta, g1)?, z, &pol)?.value;
        let multi1 = ml_multivariate(&MlParamsMultivariate::new(nu, c(delta), vec![c(g1)])?, &[z], &pol)?.value;
        if multi1 != prab {
            check(c(f64::INFINITY), c(0.0));
        }

        // equal arguments merge the Pochhammer weights, a zero argument drops its variable
        let pair = MlParamsMultivariate::new(nu, c(delta), vec![c(g1), c(g2)])?;
        let merged = ml_prabhakar(&MlParamsPrabhakar::real(nu, delta, g1 + g2)?, z, &pol)?.value;
        check(ml_multivariate(&pair, &[z, z], &pol)?.value, merged);
        check(ml_multivariate(&pair, &[z, c(0.0)], &pol)?.value, prab);

        // E_{nu, n nu + l}(z) through the shift identity
        let n = rng.random_range(1..=3usize);
        let zs = random_complex(&mut rng, 1.0..2.5);
        let shifted = ml_shift_identity(nu, c(delta), n, zs, &pol)?;
        let direct = ml2(&MlParams2::real(nu, n as f64 * nu + delta)?, zs, &pol)?.value;
        check(shifted, direct);

        // E_{1,l+1}(x) = x^{-l} (e^x - sum_{i<l} x^i / i!)
        let l = rng.random_range(1..=3usize);
        let x = random_complex(&mut rng, 0.5..2.0);
        let mut partial = C::new(0.0, 0.0);
        let mut term = c(1.0);
        for i in 0..l {
            if i > 0 {
                term *= x / i as f64;
            }
            partial += term;
        }
        let closed = (x.exp() - partial) / x.powu(l as u32);
        check(ml2(&MlParams2::real(1.0, l as f64 + 1.0)?, x, &pol)?.value, closed);
    }
    Ok(Outcome {
        pass: worst <= 1e-9 && points >= 100,
        detail: format!("{points} points, worst relative error {worst:.2e} (tol 1e-9)"),
    })
}

// ---------------------------------------------------------------------------
// 2. Convolution theorems

fn kernel(nu: f64, delta: f64, gamma: f64, eta: C, pol: TruncationPolicy) -> impl Fn(f64) -> Result<C> {
    move |x: f64| {
        let p = MlParamsPrabhakar::real(nu, delta, gamma)?;
        Ok(ml_prabhakar(&p, eta * x.powf(nu), &pol)?.value * x.powf(delta - 1.0))
    }
}

fn distinct_etas(rng: &mut ChaCha8Rng, m: usize) -> Vec<C> {
    loop {
        let etas: Vec<C> = (0..m)
            .map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let separated = (0..m).all(|i| (0..i).all(|j| (etas[i] - etas[j]).norm() > 0.3));
        if separated {
            return etas;
        }
    }
}

fn convolution_theorems() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(2002);
    let pol = TruncationPolicy::default();
    // the nested inner rule must resolve well below the outer tolerance, or
    // the outer rule keeps splitting on quadrature noise
    let quad = QuadOptions::default();
    let inner_quad = QuadOptions {
        abs_tol: 1e-14,
        rel_tol: 1e-13,
        ..quad
    };
    let outer_quad = QuadOptions {
        abs_tol: 1e-10,
        rel_tol: 1e-9,
        ..quad
    };
    let mut worst: f64 = 0.0;
    let mut instances = 0;
    for case in 0..24 {
        let m = if case % 2 == 0 { 2 } else { 3 };
        let lemma = case % 4 < 2;
        let nu = rng.random_range(0.5..1.5);
        let t = rng.random_range(0.5..2.0);
        let deltas: Vec<f64> = (0..m).map(|_| rng.random_range(0.6..1.8)).collect();
        let gammas: Vec<f64> = if lemma {
            (0..m).map(|_| rng.random_range(0.5..2.0)).collect()
        } else {
            vec![1.0; m]
        };
        let etas = distinct_etas(&mut rng, m);
        let f: Vec<_> = (0..m).map(|i| kernel(nu, deltas[i], gammas[i], etas[i], pol)).collect();

        let numeric = if m == 2 {
            convolve_numeric(&f[0], deltas[0] - 1.0, &f[1], deltas[1] - 1.0, t, &quad)?
        } else {
            let inner = |x: f64| convolve_numeric(&f[0], deltas[0] - 1.0, &f[1], deltas[1] - 1.0, x, &inner_quad);
            convolve_numeric(inner, deltas[0] + deltas[1] - 1.0, &f[2], deltas[2] - 1.0, t, &outer_quad)?
        };

        let total: f64 = deltas.iter().sum();
        let scale = t.powf(total - 1.0);
        let z: Vec<C> = etas.iter().map(|&e| e * t.powf(nu)).collect();
        let closed = if lemma {
            let p = MlParamsMultivariate::new(nu, c(total), gammas.iter().map(|&g| c(g)).collect())?;
            ml_multivariate(&p, &z, &pol)?.value * scale
        } else {
            let mut acc = C::new(0.0, 0.0);
            for i in 0..m {
                let mut w = etas[i].powu(m as u32 - 1);
                for j in (0..m).filter(|&j| j != i) {
                    w /= etas[i] - etas[j];
                }
                acc += w * ml2(&MlParams2::real(nu, total)?, z[i], &pol)?.value;
            }
            acc * scale
        };
        worst = worst.max((numeric - closed).norm());
        instances += 1;
    }
    Ok(Outcome {
        pass: worst <= 1e-7,
        detail: format!("{instances} instances (M = 2, 3), worst absolute error {worst:.2e} (tol 1e-7)"),
    })
}

// ---------------------------------------------------------------------------
// 3. Solver against Laplace inversion and RK4

/// Classical RK4 for `sum_k lambda_k F^{(k)} = g` with `F^{(l)}(0) = f_l`.
fn rk4(lambda: &[C], init: &[C], g: C, times: &[f64]) -> Vec<C> {
    let n = lambda.len() - 1;
    let lead = lambda[n];
    let rhs = |y: &[C]| -> Vec<C> {
        let mut d: Vec<C> = y[1..].to_vec();
        let mut top = g;
        for k in 0..n {
            top -= lambda[k] * y[k];
        }
        d.push(top / lead);
        d
    };
    let mut y = init.to_vec();
    let mut now = 0.0;
    let mut out = Vec::new();
    for &t in times {
        let steps = ((t - now) / 1e-3).ceil().max(1.0) as usize;
        let h = (t - now) / steps as f64;
        for _ in 0..steps {
            let k1 = rhs(&y);
            let y2: Vec<C> = y.iter().zip(&k1).map(|(a, b)| a + b * (h / 2.0)).collect();
            let k2 = rhs(&y2);
            let y3: Vec<C> = y.iter().zip(&k2).map(|(a, b)| a + b * (h / 2.0)).collect();
            let k3 = rhs(&y3);
            let y4: Vec<C> = y.iter().zip(&k3).map(|(a, b)| a + b * h).collect();
            let k4 = rhs(&y4);
            for i in 0..n {
                y[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
            }
        }
        now = t;
        out.push(y[0]);
    }
    out
}

fn solver_cross_oracle() -> Result<Outcome> {
    const NUS: [f64; 5] = [0.4, 0.5, 0.8, 1.0, 1.3];
    const TIMES: [f64; 7] = [0.1, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0];
    let mut rng = ChaCha8Rng::seed_from_u64(3003);
    let mut worst_laplace: f64 = 0.0;
    let mut worst_rk4: f64 = 0.0;
    let problems = 15;
    for i in 0..problems {
        let nu = NUS[i % NUS.len()];
        let degree = rng.random_range(1..=4usize);
        let roots = loop {
            let r: Vec<C> = (0..degree)
                .map(|_| {
                    let angle = rng.random_range(PI / 2.0 + 0.1..3.0 * PI / 2.0 - 0.1);
                    C::from_polar(rng.random_range(0.3..1.5), angle)
                })
                .collect();
            if (0..degree).all(|a| (0..a).all(|b| (r[a] - r[b]).norm() > 0.3)) {
                break r;
            }
        };
        let spectrum = RootSpectrum::simple(roots)?;
        let lead = random_complex(&mut rng, 0.5..2.0);
        let coeffs: Vec<C> = spectrum.expand().iter().map(|&x| x * lead).collect();
        let poly = CharPolynomial::new(coeffs.clone())?;
        let init: Vec<C> = (0..n_conditions(nu, degree))
            .map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let mut p = CauchyProblem::new(nu, poly, spectrum, init.clone())?;
        let g = if i % 3 == 2 { random_complex(&mut rng, 0.2..1.0) } else { c(0.0) };
        if g != c(0.0) {
            p = p.with_forcing(Forcing::Constant(g));
        }
        let s = solve(&p)?;
        let values = TIMES.iter().map(|&t| s.evaluate(t)).collect::<Result<Vec<_>>>()?;
        for (&t, &f) in TIMES.iter().zip(&values) {
            let inv = invert_solution(&p, t, &TalbotOptions::default())?;
            worst_laplace = worst_laplace.max((f - inv.value).norm());
        }
        if nu == 1.0 {
            let reference = rk4(&coeffs, &init, g, &TIMES);
            for (f, r) in values.iter().zip(reference) {
                worst_rk4 = worst_rk4.max((f - r).norm());
            }
        }
    }
    Ok(Outcome {
        pass: worst_laplace <= 1e-6 && worst_rk4 <= 1e-6,
        detail: format!(
            "{problems} problems, worst |F - Laplace inverse| {worst_laplace:.2e}, worst |F - RK4| {worst_rk4:.2e} (tol 1e-6)"
        ),
    })
}

// ---------------------------------------------------------------------------
// 4. Caputo residual

fn telegraph(nu: f64, init: &[f64]) -> Result<CauchyProblem> {
    let poly = CharPolynomial::from_real(&[0.25, 2.0, 1.0])?;
    CauchyProblem::from_coefficients(nu, poly, init.iter().map(|&x| c(x)).collect())
}

fn caputo_residuals() -> Result<Outcome> {
    let steps = [1e-2, 1e-3, 1e-4];
    let mut pass = true;
    let mut parts = Vec::new();
    for (nu, init) in [(1.0, vec![1.0, 0.0]), (0.5, vec![1.0])] {
        let p = telegraph(nu, &init)?;
        let s = solve(&p)?;
        let r = steps
            .iter()
            .map(|&h| caputo_residual(&p, &s, 1.0, h).map(|x| x.norm()))
            .collect::<Result<Vec<_>>>()?;
        let order = (r[0] / r[2]).log10() / (steps[0] / steps[2]).log10();
        let decreasing = r.windows(2).all(|w| w[1] < w[0]);
        pass &= decreasing && order >= 0.9 && r[2] < 1e-3;
        parts.push(format!(
            "nu={nu}: residuals {:.1e}/{:.1e}/{:.1e}, order {order:.2}",
            r[0], r[1], r[2]
        ));
    }
    Ok(Outcome {
        pass,
        detail: format!("{} (need order >= 0.9, final < 1e-3)", parts.join("; ")),
    })
}

// ---------------------------------------------------------------------------
// 5. Subordination

fn subordination() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();

    let half = telegraph(0.5, &[1.0])?;
    let plan = build_associated_problem(&half, 2)?;
    let direct = solve(&half)?;
    let mut worst: f64 = 0.0;
    for t in [0.5, 1.0, 2.0] {
        let q = subordinate_quadrature(&plan, t, &QuadOptions::default())?;
        worst = worst.max((q - direct.evaluate(t)?).norm());
    }
    pass &= worst <= 1e-6;
    parts.push(format!("n=2 quadrature error {worst:.1e}"));

    // one seed per time: shared draws would make the three z-scores one
    let cfg = |i: u64| McConfig::new(5005 + i, 1_000_000);
    let third = telegraph(1.0 / 3.0, &[1.0])?;
    let plan = build_associated_problem(&third, 3)?;
    let direct = solve(&third)?;
    let mut z_max: f64 = 0.0;
    for (i, t) in [0.5, 1.0, 2.0].into_iter().enumerate() {
        let est = subordinate_mc(&plan, t, &cfg(i as u64))?;
        z_max = z_max.max(est.z_score(direct.evaluate(t)?));
    }
    pass &= z_max <= 3.0;
    parts.push(format!("n=3 Monte Carlo max {z_max:.2} sigma"));

    let quarter = telegraph(0.25, &[1.0])?;
    let direct = solve(&quarter)?;
    let mut z_max: f64 = 0.0;
    for (i, t) in [0.25, 0.5, 1.0].into_iter().enumerate() {
        let est = iterated_brownian_mc(&quarter, 2, t, &cfg(10 + i as u64))?;
        z_max = z_max.max(est.z_score(direct.evaluate(t)?));
    }
    pass &= z_max <= 3.0;
    parts.push(format!("iterated k=2 max {z_max:.2} sigma"));

    Ok(Outcome {
        pass,
        detail: parts.join("; "),
    })
}

// ---------------------------------------------------------------------------
// 6. G-variable laws

fn g_variable_laws() -> Result<Outcome> {
    let quad = QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-12,
        ..QuadOptions::default()
    };
    let mut worst_norm: f64 = 0.0;
    let mut worst_mellin: f64 = 0.0;
    let mut worst_product: f64 = 0.0;
    let mut worst_gauss: f64 = 0.0;
    for n in 2..=4usize {
        let nf = n as f64;
        for t in [0.5, 1.0, 2.0] {
            let scale = (nf.powf(nf) * t).powf(1.0 / (nf - 1.0));
            let upper = (80.0 * scale).powf(1.0 / nf);
            for j in 1..n {
                let spec = GVariableSpec::new(n, j, t)?;
                for s in [1.0, 0.5, 1.5, 2.0, 3.7] {
                    let exponent = s - 1.0 + j as f64 - 1.0;
                    let moment = integrate_left_singular(
                        |y| Ok(c(y.powf(s - 1.0) * g_density(&spec, y)?)),
                        0.0,
                        upper,
                        exponent,
                        &quad,
                    )?
                    .value
                    .re;
                    let err = (moment - mellin_g(&spec, s)?).abs() / mellin_g(&spec, s)?;
                    if s == 1.0 {
                        worst_norm = worst_norm.max((moment - 1.0).abs());
                    } else {
                        worst_mellin = worst_mellin.max(err);
                    }
                }
            }
            for s in [0.5, 1.5, 2.0, 3.7] {
                let mut prod = 1.0;
                for j in 1..n {
                    prod *= mellin_g(&GVariableSpec::new(n, j, t)?, s)?;
                }
                let closed = mellin_product(n, t, s)?;
                worst_product = worst_product.max((prod - closed).abs() / closed);
            }
        }
        for z in [0.3, 0.75, 1.6, 2.9] {
            let mut prod = (2.0 * PI).powf((1.0 - nf) / 2.0) * nf.powf(nf * z - 0.5);
            for k in 0..n {
                prod *= gamma_real(z + k as f64 / nf)?;
            }
            let lhs = gamma_real(nf * z)?;
            worst_gauss = worst_gauss.max((lhs - prod).abs() / lhs.abs());
        }
    }
    let worst = worst_norm.max(worst_mellin).max(worst_product).max(worst_gauss);
    Ok(Outcome {
        pass: worst <= 1e-8,
        detail: format!(
            "normalization {worst_norm:.1e}, Mellin {worst_mellin:.1e}, product {worst_product:.1e}, \
             multiplication formula {worst_gauss:.1e} (tol 1e-8)"
        ),
    })
}

// ---------------------------------------------------------------------------
// 7. Random motions

fn orthogonal_closed(alpha: f64, beta: f64, t: f64) -> Result<C> {
    match orthogonal_cf_nu1(2.0, 1.0, alpha, beta, t) {
        Err(mlfrac_core::Error::Pole(_)) => solve(&orthogonal_problem(2.0, 1.0, alpha, beta, 1.0)?)?.evaluate(t),
        other => other,
    }
}

fn poly_from_roots(roots: &[C]) -> Vec<C> {
    let mut coeffs = vec![c(1.0)];
    for &r in roots {
        let mut next = vec![c(0.0); coeffs.len() + 1];
        for (i, &a) in coeffs.iter().enumerate() {
            next[i + 1] += a;
            next[i] -= a * r;
        }
        coeffs = next;
    }
    coeffs
}

fn random_motions() -> Result<Outcome> {
    let cfg = McConfig::new(7007, 100_000);
    let mut z_orth: f64 = 0.0;
    let orth = orthogonal_motion(2.0, 1.0)?;
    let orth_points = [
        (0.5, 0.3, 1.0),
        (1.0, -0.5, 0.5),
        (0.2, 1.2, 2.0),
        (-0.7, 0.4, 1.5),
        (1.0, 1.0, 1.0),
        (1.5, 0.0, 0.8),
    ];
    for (i, (a, b, t)) in orth_points.into_iter().enumerate() {
        let est = empirical_cf(&orth, t, &[a, b], &McConfig::new(7100 + i as u64, 100_000))?;
        z_orth = z_orth.max(est.z_score(orthogonal_closed(a, b, t)?));
    }

    let mut z_three: f64 = 0.0;
    let three = three_direction_motion(1.5, 1.0)?;
    let three_points = [
        (0.5, 0.3, 1.0),
        (1.0, -0.5, 0.5),
        (0.2, 1.2, 2.0),
        (-0.7, 0.4, 1.5),
        (1.2, 0.9, 1.0),
        (0.0, 1.5, 0.8),
    ];
    for (i, (a, b, t)) in three_points.into_iter().enumerate() {
        let est = empirical_cf(&three, t, &[a, b], &McConfig::new(7200 + i as u64, 100_000))?;
        let closed = solve(&three_direction_problem(1.5, 1.0, a, b, 1.0)?)?.evaluate(t)?;
        z_three = z_three.max(est.z_score(closed));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7008);
    let mut worst_coeff: f64 = 0.0;
    let mut params = vec![(2.0, 1.0, 1.0, 1.0), (2.0, 1.0, 1.0, 0.0), (2.0, 1.0, 0.5, 0.3)];
    for _ in 0..20 {
        params.push((
            rng.random_range(0.2..3.0),
            rng.random_range(0.2..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
        ));
    }
    for (lambda, speed, a, b) in params {
        let expanded = poly_from_roots(&orthogonal_roots(lambda, speed, a, b));
        let p = orthogonal_problem(lambda, speed, a, b, 1.0)?;
        let scale = p.poly().coeffs().iter().map(|x| x.norm()).fold(1.0, f64::max);
        for (x, y) in expanded.iter().zip(p.poly().coeffs()) {
            worst_coeff = worst_coeff.max((x - y).norm() / scale);
        }
    }

    let grid = [(0.5, 0.3), (1.0, -0.5), (0.2, 1.2), (-0.7, 0.4), (1.0, 1.0), (1.5, 0.0)];
    let report = telegraph_decomposition_check(2.0, 1.0, 1.0, &grid, &cfg)?;

    Ok(Outcome {
        pass: z_orth <= 3.0 && z_three <= 3.0 && worst_coeff <= 1e-10 && report.passes(3.0),
        detail: format!(
            "orthogonal max {z_orth:.2} sigma, three-direction max {z_three:.2} sigma over 6 points each; \
             quartic coefficients {worst_coeff:.1e}; decomposition max {:.2} sigma",
            report.max_sigma
        ),
    })
}

// ---------------------------------------------------------------------------
// 8. Initial derivatives

fn explicit_derivative(spec: &MotionSpec, alpha: &[f64], n: usize) -> C {
    let a: Vec<f64> = spec
        .velocities()
        .iter()
        .map(|v| v.iter().zip(alpha).map(|(x, y)| x * y).sum())
        .collect();
    let p = spec.initial_dist();
    match n {
        0 => c(1.0),
        1 => C::i() * p.iter().zip(&a).map(|(pk, ak)| pk * ak).sum::<f64>(),
        _ => {
            let mut jump = 0.0;
            for (h, row) in spec.switch_matrix().iter().enumerate() {
                for (k, &phk) in row.iter().enumerate() {
                    jump += p[h] * phk * (a[k] - a[h]);
                }
            }
            c(-p.iter().zip(&a).map(|(pk, ak)| pk * ak * ak).sum::<f64>()) + C::i() * spec.rate() * jump
        }
    }
}

fn position_at(spec: &MotionSpec, path: &MotionPath, s: f64) -> Vec<f64> {
    let mut pos = vec![0.0; spec.dim()];
    let mut start = 0.0;
    for (i, &k) in path.velocity_indices.iter().enumerate() {
        let end = path.switch_times.get(i).copied().unwrap_or(f64::INFINITY).min(s);
        for (x, v) in pos.iter_mut().zip(&spec.velocities()[k]) {
            *x += (end - start) * v;
        }
        if end >= s {
            break;
        }
        start = end;
    }
    pos
}

/// One-sided stencils: `(-3 F(0) + 4 F(h) - F(2h)) / 2h` and
/// `(2 F(0) - 5 F(h) + 4 F(2h) - F(3h)) / h^2`.
const STENCILS: [(usize, [f64; 4], f64); 2] = [(1, [-3.0, 4.0, -1.0, 0.0], 2.0), (2, [2.0, -5.0, 4.0, -1.0], 1.0)];

fn stencil_expectation(spec: &MotionSpec, alpha: &[f64], h: f64, weights: &[f64; 4], denom_power: usize, denom: f64) -> Result<C> {
    let mut acc = c(0.0);
    for m in 0..=14 {
        let d = cf_derivative_exact(spec, alpha, m)?;
        let moment: f64 = weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * (i as f64 * h).powi(m as i32))
            .sum::<f64>()
            / gamma_real(m as f64 + 1.0)?;
        acc += d * moment;
    }
    Ok(acc / (denom * h.powi(denom_power as i32)))
}

fn stratified_stencils(spec: &MotionSpec, alpha: &[f64], h: f64, cfg: &McConfig) -> Result<Vec<McEstimate>> {
    let mut mean = vec![c(0.0); STENCILS.len()];
    let mut var = vec![0.0; STENCILS.len()];
    for (k, &pk) in spec.initial_dist().iter().enumerate() {
        if pk == 0.0 {
            continue;
        }
        let start = spec.started_from(k)?;
        let est = monte_carlo_multi(cfg, 100, STENCILS.len(), |rng, out| {
            let path = simulate_path(&start, 3.0 * h, rng)?;
            let f: Vec<C> = (0..4)
                .map(|i| {
                    let x = position_at(&start, &path, i as f64 * h);
                    C::from_polar(1.0, x.iter().zip(alpha).map(|(a, b)| a * b).sum())
                })
                .collect();
            for (o, (n, w, denom)) in out.iter_mut().zip(STENCILS) {
                let sum: C = f.iter().zip(w).map(|(v, w)| v * w).sum();
                *o = sum / (denom * h.powi(n as i32));
            }
            Ok(())
        })?;
        for (i, e) in est.iter().enumerate() {
            mean[i] += e.mean * pk;
            var[i] += (pk * e.std_error).powi(2);
        }
    }
    Ok(mean
        .into_iter()
        .zip(var)
        .map(|(m, v)| McEstimate {
            mean: m,
            std_error: v.sqrt(),
            std_error_re: f64::NAN,
            std_error_im: f64::NAN,
            samples: cfg.samples,
        })
        .collect())
}

fn initial_derivatives() -> Result<Outcome> {
    let motions = [orthogonal_motion(2.0, 1.0)?, three_direction_motion(1.5, 1.0)?];
    let asymmetric = MotionSpec::new(
        vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![-1.0, -1.0]],
        1.7,
        vec![0.2, 0.5, 0.3],
        vec![vec![0.1, 0.6, 0.3], vec![0.5, 0.0, 0.5], vec![0.2, 0.2, 0.6]],
    )?;
    let alphas = [[0.8, -0.3], [1.2, 0.5], [0.0, 1.0]];
    let mut worst_formula: f64 = 0.0;
    for spec in motions.iter().chain([&asymmetric]) {
        for alpha in &alphas {
            for n in 0..=2 {
                let f = cf_initial_derivative(spec, alpha, n)?;
                let e = explicit_derivative(spec, alpha, n);
                worst_formula = worst_formula.max((f - e).norm() / e.norm().max(1.0));
            }
        }
    }

    let h = 0.05;
    let cfg = McConfig::new(8008, 1_000_000);
    let mut z_taylor: f64 = 0.0;
    let mut z_formula: f64 = 0.0;
    let mut biggest_truncation: f64 = 0.0;
    for spec in &motions {
        for alpha in &alphas[..2] {
            let est = stratified_stencils(spec, alpha, h, &cfg)?;
            for ((n, w, denom), e) in STENCILS.iter().zip(&est) {
                let expected = stencil_expectation(spec, alpha, h, w, *n, *denom)?;
                let formula = cf_initial_derivative(spec, alpha, *n)?;
                let truncation = (expected - formula).norm();
                biggest_truncation = biggest_truncation.max(truncation);
                z_taylor = z_taylor.max(e.z_score(expected));
                z_formula = z_formula.max(((e.mean - formula).norm() - truncation).max(0.0) / e.std_error);
            }
        }
    }
    Ok(Outcome {
        pass: worst_formula <= 1e-12 && z_taylor <= 3.0 && z_formula <= 3.0,
        detail: format!(
            "explicit n<=2 formulas {worst_formula:.1e} (tol 1e-12); finite differences at h={h}: \
             {z_formula:.2} sigma beyond truncation {biggest_truncation:.1e}, {z_taylor:.2} sigma from the stencil's exact mean"
        ),
    })
}

// ---------------------------------------------------------------------------
// 9. CLI determinism

fn run_cli(args: &[&str], threads: &str) -> std::io::Result<(bool, Vec<u8>)> {
    let out = Command::new(env!("CARGO_BIN_EXE_mlfrac"))
        .args(args)
        .env("MLFRAC_THREADS", threads)
        .output()?;
    Ok((out.status.success(), out.stdout))
}

fn cli_determinism() -> std::result::Result<Outcome, String> {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-cli");
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let problem = dir.join("third.json");
    std::fs::write(
        &problem,
        r#"{"nu": 0.3333333333333333, "lambda": [[0.25,0],[2,0],[1,0]], "init_conds": [[1,0]]}"#,
    )
    .map_err(|e| e.to_string())?;
    let problem = problem.to_string_lossy().to_string();
    let runs: [Vec<&str>; 4] = [
        vec!["example", "orthogonal", "--seed", "42", "--samples", "20000"],
        vec!["example", "three-direction", "--seed", "42", "--samples", "20000", "--format", "json"],
        vec!["subordinate", &problem, "--divisor", "3", "--seed", "9", "--samples", "20000"],
        vec!["simulate", "--alpha", "0.5,0.3", "--alpha", "1,-1", "--t-grid", "0.5,1", "--seed", "3"],
    ];
    let mut identical = 0;
    for args in &runs {
        let (ok1, a) = run_cli(args, "4").map_err(|e| e.to_string())?;
        let (ok2, b) = run_cli(args, "4").map_err(|e| e.to_string())?;
        let (ok3, d) = run_cli(args, "1").map_err(|e| e.to_string())?;
        let seeded = String::from_utf8_lossy(&a).contains("seed");
        if ok1 && ok2 && ok3 && seeded && a == b && a == d {
            identical += 1;
        }
    }
    Ok(Outcome {
        pass: identical == runs.len(),
        detail: format!(
            "{identical}/{} commands byte-identical over repeated runs and thread counts",
            runs.len()
        ),
    })
}

type Criterion = (u32, &'static str, Duration, fn() -> std::result::Result<Outcome, String>);

fn wrap(f: fn() -> Result<Outcome>) -> std::result::Result<Outcome, String> {
    f().map_err(|e| e.to_string())
}

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "Mittag-Leffler identities", Duration::from_secs(10), || wrap(ml_identities)),
        (2, "convolution theorems", Duration::from_secs(60), || wrap(convolution_theorems)),
        (3, "solver cross-oracle", Duration::from_secs(120), || wrap(solver_cross_oracle)),
        (4, "Caputo residual", Duration::MAX, || wrap(caputo_residuals)),
        (5, "subordination", Duration::from_secs(300), || wrap(subordination)),
        (6, "G-variable laws", Duration::MAX, || wrap(g_variable_laws)),
        (7, "random-motion validation", Duration::MAX, || wrap(random_motions)),
        (8, "initial-condition formulas", Duration::MAX, || wrap(initial_derivatives)),
        (9, "CLI determinism", Duration::MAX, cli_determinism),
    ];
    let only: Option<u32> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failures = 0;
    for (n, name, budget, run) in criteria {
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass && elapsed <= budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let budget_note = if budget == Duration::MAX {
            String::new()
        } else {
            format!(", budget {}s", budget.as_secs())
        };
        println!(
            "criterion {n} ({name}): {} | {detail} | {:.1}s{budget_note}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
        if !pass {
            failures += 1;
        }
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
