//! Globally adaptive Gauss-Kronrod (7/15) quadrature for complex integrands.

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

fn kronrod<F>(f: &mut F, a: f64, b: f64) -> Result<Segment>
where
    F: FnMut(f64) -> Result<Complex64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = f(center - dx)? + f(center + dx)?;
        k += pair * WGK[i];
        if i % 2 == 1 {
            g += pair * WG[i / 2];
        }
    }
    let value = k * half;
    let error = ((k - g) * half).norm();
    Ok(Segment { a, b, value, error })
}

/// Integrates a fallible complex integrand over `[a, b]`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<Complex64>,
{
    if a == b {
        return Ok(QuadResult {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
            evaluations: 0,
        });
    }
    let mut segments = vec![kronrod(&mut f, a, b)?];
    let mut evaluations = 15;
    loop {
        let total: Complex64 = segments.iter().map(|s| s.value).sum();
        let err: f64 = segments.iter().map(|s| s.error).sum();
        let target = opts.abs_tol.max(opts.rel_tol * total.norm());
        if err <= target {
            return Ok(QuadResult {
                value: total,
                error: err,
                evaluations,
            });
        }
        if segments.len() >= opts.max_intervals {
            return Err(Error::Quadrature {
                achieved: err,
                requested: target,
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one segment");
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            return Err(Error::Quadrature {
                achieved: err,
                requested: target,
            });
        }
        segments.push(kronrod(&mut f, seg.a, mid)?);
        segments.push(kronrod(&mut f, mid, seg.b)?);
        evaluations += 30;
    }
}

/// Convenience wrapper for infallible integrands.
pub fn integrate_plain<F>(mut f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult>
where
    F: FnMut(f64) -> Complex64,
{
    integrate(|x| Ok(f(x)), a, b, opts)
}

/// Integrates `f` over `[a, b]` when `f(x) ~ (x - a)^exponent` near `a`.
///
/// For `exponent < 0` the substitution `x = a + (b - a) u^{1/(exponent+1)}`
/// turns the endpoint singularity into a bounded integrand.
pub fn integrate_left_singular<F>(
    mut f: F,
    a: f64,
    b: f64,
    exponent: f64,
    opts: &QuadOptions,
) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<Complex64>,
{
    if exponent >= 0.0 {
        return integrate(f, a, b, opts);
    }
    if exponent <= -1.0 {
        return Err(Error::Domain(format!(
            "endpoint exponent {exponent} is not integrable"
        )));
    }
    let p = 1.0 / (exponent + 1.0);
    let len = b - a;
    integrate(
        |u| {
            if u <= 0.0 {
                return Ok(Complex64::new(0.0, 0.0));
            }
            let x = a + len * u.powf(p);
            Ok(f(x)? * (len * p * u.powf(p - 1.0)))
        },
        0.0,
        1.0,
        opts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_oscillatory() {
        let opts = QuadOptions::default();
        let r = integrate_plain(|x| Complex64::new(x * x, 0.0), 0.0, 3.0, &opts).unwrap();
        assert!((r.value.re - 9.0).abs() < 1e-13);
        let r = integrate_plain(|x| Complex64::new(0.0, x).exp(), 0.0, 20.0, &opts).unwrap();
        let exact = (Complex64::new(0.0, 20.0).exp() - 1.0) / Complex64::i();
        assert!((r.value - exact).norm() < 1e-10);
    }

    #[test]
    fn endpoint_singularity() {
        let opts = QuadOptions::default();
        // int_0^1 x^{-1/2} dx = 2
        let r = integrate_left_singular(
            |x| Ok(Complex64::new(x.powf(-0.5), 0.0)),
            0.0,
            1.0,
            -0.5,
            &opts,
        )
        .unwrap();
        assert!((r.value.re - 2.0).abs() < 1e-12);
    }

    #[test]
    fn failure_reports_achieved_error() {
        let opts = QuadOptions {
            abs_tol: 1e-15,
            rel_tol: 1e-15,
            max_intervals: 3,
        };
        let err = integrate_plain(|x| Complex64::new(x.abs().sqrt(), 0.0), -1.0, 1.0, &opts);
        assert!(matches!(err, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn integrand_errors_propagate() {
        let opts = QuadOptions::default();
        let err = integrate(|_| Err(Error::Domain("boom".into())), 0.0, 1.0, &opts);
        assert_eq!(err.unwrap_err(), Error::Domain("boom".into()));
    }
}
