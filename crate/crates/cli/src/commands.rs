use std::path::Path;

use mlfrac_core::cauchy_solver::{
    solve as solve_auto, solve_distinct, solve_general, solve_nonhomogeneous, solve_nonhomogeneous_distinct,
    CauchyProblem, ExpansionForm, SolutionExpansion,
};
use mlfrac_core::laplace_oracle::{invert_solution, residual_from_samples, TalbotOptions, UniformSamples};
use mlfrac_core::montecarlo::{McConfig, McEstimate};
use mlfrac_core::quadrature::QuadOptions;
use mlfrac_core::random_motion::{
    empirical_cf, empirical_cf_many, orthogonal_cf_nu1, orthogonal_motion, orthogonal_problem,
    three_direction_motion, three_direction_problem, MotionSpec,
};
use mlfrac_core::schema::load_problem;
use mlfrac_core::special_functions::{
    ml2, ml_multivariate, ml_prabhakar, MlParams2, MlParamsMultivariate, MlParamsPrabhakar, SeriesEval,
    TruncationPolicy,
};
use mlfrac_core::subordination::{
    build_associated_problem, iterated_brownian_mc, subordinate_mc, subordinate_quadrature,
};
use mlfrac_core::{Complex64, Error};

use crate::output::{complex_cells, emit, Cell, Header, Table};
use crate::{
    Common, ExampleArgs, Failure, Form, MlEvalArgs, MlKind, Preset, SimulateArgs, SolveArgs, SubMethod,
    SubordinateArgs, VerifyArgs,
};

type CmdResult = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

pub fn parse_complex(s: &str) -> Result<Complex64, Failure> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|_| usage(format!("cannot read \"{s}\" as a number")));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(usage(format!("complex values are \"re\" or \"re,im\", got \"{s}\""))),
    }
}

fn parse_reals(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| usage(format!("cannot read \"{s}\" as numbers"))))
        .collect()
}

/// `""`, a comma list, or `start:stop:count`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, Failure> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    if let [a, b, n] = s.split(':').collect::<Vec<_>>().as_slice() {
        let bad = || usage(format!("grid \"{s}\" is not start:stop:count"));
        let a: f64 = a.trim().parse().map_err(|_| bad())?;
        let b: f64 = b.trim().parse().map_err(|_| bad())?;
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        return Ok(match n {
            0 => Vec::new(),
            1 => vec![a],
            _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
        });
    }
    let grid = parse_reals(s)?;
    if grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(usage("grid times must be finite and non-negative"));
    }
    Ok(grid)
}

fn policy(common: &Common, max_terms: usize) -> Result<TruncationPolicy, Failure> {
    Ok(TruncationPolicy::new(common.abs_tol, common.rel_tol, max_terms)?)
}

fn read_problem(path: &Path) -> Result<CauchyProblem, Failure> {
    let text = std::fs::read_to_string(path)?;
    Ok(load_problem(&text)?)
}

fn finish(table: &Table, common: &Common, command: &str) -> CmdResult {
    let header = Header {
        command: command.to_string(),
        seed: common.seed,
    };
    emit(&table.render(&header, common.format), common.out.as_deref())?;
    Ok(())
}

fn series_row(z: Option<Complex64>, e: &SeriesEval) -> Vec<Cell> {
    let mut row = Vec::new();
    if let Some(z) = z {
        row.extend(complex_cells(z));
    }
    row.extend(complex_cells(e.value));
    row.push(e.terms.into());
    row.push(e.tail_bound.into());
    row
}

pub fn ml_eval(a: &MlEvalArgs, common: &Common, command: &str) -> CmdResult {
    let pol = policy(common, a.max_terms)?;
    let delta = parse_complex(&a.delta)?;
    let zs = a.z.iter().map(|s| parse_complex(s)).collect::<Result<Vec<_>, _>>()?;
    let gammas = a.gamma.iter().map(|s| parse_complex(s)).collect::<Result<Vec<_>, _>>()?;
    let mut table;
    match a.kind {
        MlKind::Ml2 | MlKind::Prabhakar => {
            table = Table::new(&["z_re", "z_im", "re", "im", "terms", "tail_bound"]);
            for &z in &zs {
                let e = if a.kind == MlKind::Ml2 {
                    ml2(&MlParams2::new(a.nu, delta)?, z, &pol)?
                } else {
                    let g = match gammas.as_slice() {
                        [] => Complex64::new(1.0, 0.0),
                        [g] => *g,
                        _ => return Err(usage("prabhakar takes a single --gamma")),
                    };
                    ml_prabhakar(&MlParamsPrabhakar::new(a.nu, delta, g)?, z, &pol)?
                };
                table.push(series_row(Some(z), &e));
            }
        }
        MlKind::Multi => {
            table = Table::new(&["re", "im", "terms", "tail_bound"]);
            let params = MlParamsMultivariate::new(a.nu, delta, gammas)?;
            let e = ml_multivariate(&params, &zs, &pol)?;
            table.push(series_row(None, &e));
        }
    }
    finish(&table, common, command)
}

fn solve_with(p: &CauchyProblem, form: Form) -> Result<SolutionExpansion, Error> {
    let forced = p.forcing().is_some();
    match (form, forced) {
        (Form::Auto, _) => solve_auto(p),
        (Form::General, false) => solve_general(p),
        (Form::General, true) => solve_nonhomogeneous(p),
        (Form::Distinct, false) => solve_distinct(p),
        (Form::Distinct, true) => solve_nonhomogeneous_distinct(p),
    }
}

fn form_name(s: &SolutionExpansion) -> &'static str {
    match s.form() {
        ExpansionForm::General { .. } => "general",
        ExpansionForm::Distinct { .. } => "distinct",
    }
}

pub fn solve(a: &SolveArgs, common: &Common, command: &str) -> CmdResult {
    let grid = parse_grid(&a.t_grid)?;
    let p = read_problem(&a.problem)?;
    let s = solve_with(&p, a.form)?.with_policy(policy(common, 2000)?);
    let mut table = Table::new(&["t", "re", "im"]);
    table.note("form", form_name(&s));
    table.note("nu", p.nu());
    for &t in &grid {
        let f = s.evaluate(t)?;
        let mut row = vec![Cell::Num(t)];
        row.extend(complex_cells(f));
        table.push(row);
    }
    finish(&table, common, command)
}

pub fn verify(a: &VerifyArgs, common: &Common, command: &str) -> CmdResult {
    let grid = parse_grid(&a.t_grid)?;
    let p = read_problem(&a.problem)?;
    let s = solve_auto(&p)?.with_policy(policy(common, 2000)?);
    let shift = Complex64::new(a.perturb, 0.0);
    let value = |t: f64| s.evaluate(t).map(|f| f + shift);

    let mut table = Table::new(&[
        "check", "t", "value_re", "value_im", "reference_re", "reference_im", "error", "tolerance", "status",
    ]);
    let mut all_pass = true;
    let mut record = |check: &str, t: f64, v: Complex64, r: Complex64, tol: f64| {
        let err = (v - r).norm();
        let pass = err <= tol;
        all_pass &= pass;
        let mut row = vec![Cell::from(check), Cell::Num(t)];
        row.extend(complex_cells(v));
        row.extend(complex_cells(r));
        row.extend([Cell::Num(err), Cell::Num(tol), Cell::from(if pass { "pass" } else { "fail" })]);
        table.push(row);
    };
    for &t in &grid {
        let inv = invert_solution(&p, t, &TalbotOptions::default())?;
        record("laplace", t, value(t)?, inv.value, a.laplace_tol);
    }
    let samples = UniformSamples::sample(value, a.caputo_t, a.step)?;
    let residual = residual_from_samples(&p, &samples)?;
    record("caputo", a.caputo_t, residual, Complex64::new(0.0, 0.0), a.residual_tol);
    table.note("step", a.step);
    finish(&table, common, command)?;
    if all_pass {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

pub fn subordinate(a: &SubordinateArgs, common: &Common, command: &str) -> CmdResult {
    let grid = parse_grid(&a.t_grid)?;
    let target = read_problem(&a.problem)?;
    let cfg = McConfig::new(common.seed, common.samples);
    let direct = solve_auto(&target)?;
    let mut table = Table::new(&["t", "re", "im", "std_error", "direct_re", "direct_im"]);
    table.note("method", format!("{:?}", a.method).to_lowercase());
    table.note("divisor", a.divisor);
    table.note("samples", common.samples);
    let plan = build_associated_problem(&target, a.divisor)?;
    let depth = if a.method == SubMethod::Iterated {
        if !a.divisor.is_power_of_two() || a.divisor < 2 {
            return Err(usage("the iterated method needs a divisor 2^k with k >= 1"));
        }
        a.divisor.trailing_zeros() as usize
    } else {
        0
    };
    for &t in &grid {
        let est = match a.method {
            SubMethod::Mc => subordinate_mc(&plan, t, &cfg)?,
            SubMethod::Quadrature => McEstimate::exact(subordinate_quadrature(&plan, t, &QuadOptions::default())?),
            SubMethod::Iterated => iterated_brownian_mc(&target, depth, t, &cfg)?,
        };
        // the direct series can lose precision where the time-changed one does not
        let d = direct.evaluate(t).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
        let mut row = vec![Cell::Num(t)];
        row.extend(complex_cells(est.mean));
        row.push(Cell::Num(est.std_error));
        row.extend(complex_cells(d));
        table.push(row);
    }
    finish(&table, common, command)
}

fn preset_motion(preset: Preset, lambda: f64, speed: f64) -> Result<MotionSpec, Error> {
    match preset {
        Preset::Orthogonal => orthogonal_motion(lambda, speed),
        Preset::ThreeDirection => three_direction_motion(lambda, speed),
    }
}

pub fn simulate(a: &SimulateArgs, common: &Common, command: &str) -> CmdResult {
    let spec = match &a.motion {
        Some(path) => serde_json::from_str::<MotionSpec>(&std::fs::read_to_string(path)?)
            .map_err(|e| Error::Schema(e.to_string()))?,
        None => preset_motion(a.preset, a.lambda, a.speed)?,
    };
    let grid = parse_grid(&a.t_grid)?;
    let alphas = a.alpha.iter().map(|s| parse_reals(s)).collect::<Result<Vec<_>, _>>()?;
    let cfg = McConfig::new(common.seed, common.samples);
    let mut columns = vec!["t".to_string()];
    columns.extend((1..=spec.dim()).map(|i| format!("alpha_{i}")));
    columns.extend(["re", "im", "std_error"].map(String::from));
    let mut table = Table::new(&columns.iter().map(String::as_str).collect::<Vec<_>>());
    table.note("samples", common.samples);
    for &t in &grid {
        let ests = empirical_cf_many(&spec, t, &alphas, &cfg)?;
        for (alpha, est) in alphas.iter().zip(ests) {
            let mut row = vec![Cell::Num(t)];
            row.extend(alpha.iter().map(|&x| Cell::Num(x)));
            row.extend(complex_cells(est.mean));
            row.push(Cell::Num(est.std_error));
            table.push(row);
        }
    }
    finish(&table, common, command)
}

const ORTHOGONAL_POINTS: [(f64, f64, f64); 6] = [
    (0.5, 0.3, 1.0),
    (1.0, -0.5, 0.5),
    (0.2, 1.2, 2.0),
    (-0.7, 0.4, 1.5),
    (1.0, 1.0, 1.0),
    (1.5, 0.0, 0.8),
];

const THREE_DIRECTION_POINTS: [(f64, f64, f64); 6] = [
    (0.5, 0.3, 1.0),
    (1.0, -0.5, 0.5),
    (0.2, 1.2, 2.0),
    (-0.7, 0.4, 1.5),
    (1.2, 0.9, 1.0),
    (0.0, 1.5, 0.8),
];

fn closed_form(preset: Preset, lambda: f64, speed: f64, alpha: f64, beta: f64, t: f64) -> Result<Complex64, Error> {
    match preset {
        Preset::Orthogonal => match orthogonal_cf_nu1(lambda, speed, alpha, beta, t) {
            // repeated roots: fall back to the expansion with multiplicities
            Err(Error::Pole(_)) => solve_auto(&orthogonal_problem(lambda, speed, alpha, beta, 1.0)?)?.evaluate(t),
            other => other,
        },
        Preset::ThreeDirection => solve_auto(&three_direction_problem(lambda, speed, alpha, beta, 1.0)?)?.evaluate(t),
    }
}

pub fn example(a: &ExampleArgs, common: &Common, command: &str) -> CmdResult {
    let (lambda, speed, points) = match a.preset {
        Preset::Orthogonal => (2.0, 1.0, ORTHOGONAL_POINTS),
        Preset::ThreeDirection => (1.5, 1.0, THREE_DIRECTION_POINTS),
    };
    let spec = preset_motion(a.preset, lambda, speed)?;
    let cfg = McConfig::new(common.seed, common.samples);
    let mut table = Table::new(&[
        "t", "alpha", "beta", "closed_re", "closed_im", "empirical_re", "empirical_im", "std_error",
    ]);
    table.note("lambda", lambda);
    table.note("speed", speed);
    table.note("samples", common.samples);
    for (alpha, beta, t) in points {
        let exact = closed_form(a.preset, lambda, speed, alpha, beta, t)?;
        let est = empirical_cf(&spec, t, &[alpha, beta], &cfg)?;
        let mut row = vec![Cell::Num(t), Cell::Num(alpha), Cell::Num(beta)];
        row.extend(complex_cells(exact));
        row.extend(complex_cells(est.mean));
        row.push(Cell::Num(est.std_error));
        table.push(row);
    }
    finish(&table, common, command)
}
