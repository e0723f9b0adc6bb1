//! Two-parameter, Prabhakar and multivariate Mittag-Leffler functions.
//!
//! All three are evaluated from their power series. Termination uses a
//! ratio test on a positive majorant of the terms: once the majorant ratio is
//! below one and non-increasing, the remaining tail is bounded by a geometric
//! series. The same majorant gives a rounding-error estimate, so arguments
//! whose series cancel catastrophically are reported instead of returned with
//! garbage digits.
//!
//! One exception: for `nu = 1` and integer `delta = l + 1` the exact form
//! `z^{-l} (e^z - sum_{i<l} z^i / i!)` replaces the series once `|z|` is large
//! enough that the polynomial part cannot cancel.

use std::cell::RefCell;
use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::gamma::rgamma;
use crate::error::{invalid, Error, Result};

// Reciprocal gammas `1 / Gamma(delta + nu k)` dominate the cost of every
// series here and depend only on `(nu, delta)`. Each thread keeps the
// sequences it has already computed; the cache is dropped wholesale when it
// holds too many of them.
const RGAMMA_CACHE_ENTRIES: usize = 512;

thread_local! {
    static RGAMMA_CACHE: RefCell<HashMap<[u64; 3], Vec<Complex64>>> = RefCell::new(HashMap::new());
}

struct RgammaSeq<'a> {
    nu: f64,
    delta: Complex64,
    values: &'a mut Vec<Complex64>,
}

impl RgammaSeq<'_> {
    fn get(&mut self, k: usize) -> Complex64 {
        while self.values.len() <= k {
            let j = self.values.len() as f64;
            self.values.push(rgamma(self.delta + self.nu * j));
        }
        self.values[k]
    }
}

/// Runs `body` with the cached sequence for `(nu, delta)`; `body` must not
/// evaluate other series.
fn with_rgammas<R>(nu: f64, delta: Complex64, body: impl FnOnce(&mut RgammaSeq<'_>) -> R) -> R {
    let key = [nu.to_bits(), delta.re.to_bits(), delta.im.to_bits()];
    RGAMMA_CACHE.with(|cell| {
        let mut cache = cell.borrow_mut();
        if cache.len() >= RGAMMA_CACHE_ENTRIES && !cache.contains_key(&key) {
            cache.clear();
        }
        let values = cache.entry(key).or_default();
        body(&mut RgammaSeq { nu, delta, values })
    })
}

/// Rounding errors above this fraction of `max(|value|, 1)` are reported
/// as [`Error::PrecisionLoss`].
const PRECISION_FLOOR: f64 = 1e-7;

/// Stopping rule shared by all series in this module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-12,
            max_terms: 2000,
        }
    }
}

impl TruncationPolicy {
    pub fn new(abs_tol: f64, rel_tol: f64, max_terms: usize) -> Result<Self> {
        if !(abs_tol > 0.0) || !(rel_tol > 0.0) || max_terms == 0 {
            return Err(invalid(format!(
                "truncation policy needs abs_tol > 0, rel_tol > 0, max_terms >= 1 \
                 (got {abs_tol}, {rel_tol}, {max_terms})"
            )));
        }
        Ok(Self {
            abs_tol,
            rel_tol,
            max_terms,
        })
    }
}

/// Value of a truncated series together with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesEval {
    pub value: Complex64,
    /// Number of terms summed.
    pub terms: usize,
    /// Bound on the discarded tail.
    pub tail_bound: f64,
    /// Sum of the term majorants; `EPSILON * abs_sum` estimates rounding error.
    pub abs_sum: f64,
}

impl SeriesEval {
    pub fn rounding_estimate(&self) -> f64 {
        4.0 * f64::EPSILON * self.abs_sum
    }
}

/// Parameters of `E_{nu,delta}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlParams2 {
    nu: f64,
    delta: Complex64,
}

impl MlParams2 {
    pub fn new(nu: f64, delta: Complex64) -> Result<Self> {
        check_nu(nu)?;
        if !(delta.re > 0.0) {
            return Err(invalid(format!("delta must have positive real part, got {delta}")));
        }
        Ok(Self { nu, delta })
    }

    pub fn real(nu: f64, delta: f64) -> Result<Self> {
        Self::new(nu, Complex64::new(delta, 0.0))
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn delta(&self) -> Complex64 {
        self.delta
    }
}

/// Parameters of the Prabhakar function `E^gamma_{nu,delta}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlParamsPrabhakar {
    nu: f64,
    delta: Complex64,
    gamma: Complex64,
}

impl MlParamsPrabhakar {
    pub fn new(nu: f64, delta: Complex64, gamma: Complex64) -> Result<Self> {
        check_nu(nu)?;
        check_gamma(gamma)?;
        Ok(Self { nu, delta, gamma })
    }

    pub fn real(nu: f64, delta: f64, gamma: f64) -> Result<Self> {
        Self::new(nu, Complex64::new(delta, 0.0), Complex64::new(gamma, 0.0))
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn delta(&self) -> Complex64 {
        self.delta
    }

    pub fn gamma(&self) -> Complex64 {
        self.gamma
    }
}

/// Parameters of the multivariate function `E^{(gamma_1..gamma_M)}_{nu,delta}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlParamsMultivariate {
    nu: f64,
    delta: Complex64,
    gammas: Vec<Complex64>,
}

impl MlParamsMultivariate {
    pub fn new(nu: f64, delta: Complex64, gammas: Vec<Complex64>) -> Result<Self> {
        check_nu(nu)?;
        if gammas.is_empty() {
            return Err(invalid("multivariate Mittag-Leffler needs at least one gamma"));
        }
        for &g in &gammas {
            check_gamma(g)?;
        }
        Ok(Self { nu, delta, gammas })
    }

    /// Integer multiplicities as the Pochhammer parameters.
    pub fn from_multiplicities(nu: f64, delta: f64, mults: &[usize]) -> Result<Self> {
        let gammas = mults.iter().map(|&m| Complex64::new(m as f64, 0.0)).collect();
        Self::new(nu, Complex64::new(delta, 0.0), gammas)
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn delta(&self) -> Complex64 {
        self.delta
    }

    pub fn gammas(&self) -> &[Complex64] {
        &self.gammas
    }

    pub fn dim(&self) -> usize {
        self.gammas.len()
    }
}

fn check_nu(nu: f64) -> Result<()> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(invalid(format!("fractional order nu must be positive, got {nu}")));
    }
    Ok(())
}

fn check_gamma(g: Complex64) -> Result<()> {
    if !(g.re > 0.0) {
        return Err(invalid(format!("gamma must have positive real part, got {g}")));
    }
    Ok(())
}

/// Tracks the majorant ratio of one series and decides when to stop.
#[derive(Debug, Clone)]
struct TailTracker {
    sum: Complex64,
    abs_sum: f64,
    prev_major: f64,
    prev_ratio: f64,
    terms: usize,
    tail: f64,
    done: bool,
}

impl TailTracker {
    fn new() -> Self {
        Self {
            sum: Complex64::new(0.0, 0.0),
            abs_sum: 0.0,
            prev_major: 0.0,
            prev_ratio: f64::INFINITY,
            terms: 0,
            tail: f64::INFINITY,
            done: false,
        }
    }

    fn push(&mut self, term: Complex64, major: f64, policy: &TruncationPolicy) {
        self.sum += term;
        self.abs_sum += major;
        self.terms += 1;
        if self.prev_major > 0.0 && major > 0.0 {
            let ratio = major / self.prev_major;
            if ratio < 1.0 && ratio <= self.prev_ratio * (1.0 + 1e-12) {
                self.tail = major * ratio / (1.0 - ratio);
                let target = policy.abs_tol.max(policy.rel_tol * self.sum.norm());
                if self.tail <= target {
                    self.done = true;
                }
            } else {
                self.tail = f64::INFINITY;
            }
            self.prev_ratio = ratio;
        }
        if major > 0.0 {
            self.prev_major = major;
        }
    }

    fn finish(self) -> Result<SeriesEval> {
        if !self.done {
            return Err(Error::NonConvergence {
                terms: self.terms,
                tail: self.tail,
            });
        }
        let eval = SeriesEval {
            value: self.sum,
            terms: self.terms,
            tail_bound: self.tail,
            abs_sum: self.abs_sum,
        };
        let rounding = eval.rounding_estimate();
        if rounding > PRECISION_FLOOR * self.sum.norm().max(1.0) {
            return Err(Error::PrecisionLoss {
                rounding,
                value: self.sum.norm(),
            });
        }
        Ok(eval)
    }

    fn exact(value: Complex64) -> SeriesEval {
        SeriesEval {
            value,
            terms: 1,
            tail_bound: 0.0,
            abs_sum: value.norm(),
        }
    }
}

/// Series `sum_k z^k / Gamma(nu k + delta)` without parameter validation.
pub(crate) fn ml2_series(
    nu: f64,
    delta: Complex64,
    z: Complex64,
    policy: &TruncationPolicy,
) -> Result<SeriesEval> {
    if z == Complex64::new(0.0, 0.0) {
        return Ok(TailTracker::exact(rgamma(delta)));
    }
    if let Some(v) = exponential_form(nu, delta, z) {
        return Ok(TailTracker::exact(v));
    }
    let zn = z.norm();
    let mut tracker = TailTracker::new();
    let mut zk = Complex64::new(1.0, 0.0);
    let mut zk_abs = 1.0;
    with_rgammas(nu, delta, |rgammas| {
        for k in 0..policy.max_terms {
            let rg = rgammas.get(k);
            let term = zk * rg;
            tracker.push(term, zk_abs * rg.norm(), policy);
            if tracker.done {
                break;
            }
            zk *= z;
            zk_abs *= zn;
            if !zk_abs.is_finite() {
                break;
            }
        }
    });
    tracker.finish()
}

/// `E_{1,l+1}(z)` from the exponential when `|z| > 2l + 2`.
fn exponential_form(nu: f64, delta: Complex64, z: Complex64) -> Option<Complex64> {
    if nu != 1.0 || delta.im != 0.0 || delta.re < 1.0 || delta.re.fract() != 0.0 {
        return None;
    }
    let l = delta.re as usize - 1;
    if z.norm() <= 2.0 * l as f64 + 2.0 {
        return None;
    }
    let mut poly = Complex64::new(0.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    for i in 0..l {
        if i > 0 {
            term *= z / i as f64;
        }
        poly += term;
    }
    Some((z.exp() - poly) / z.powu(l as u32))
}

/// Two-parameter Mittag-Leffler function `E_{nu,delta}(z)`.
pub fn ml2(params: &MlParams2, z: Complex64, policy: &TruncationPolicy) -> Result<SeriesEval> {
    ml2_series(params.nu, params.delta, z, policy)
}

/// Prabhakar function `E^gamma_{nu,delta}(z)`.
pub fn ml_prabhakar(
    params: &MlParamsPrabhakar,
    z: Complex64,
    policy: &TruncationPolicy,
) -> Result<SeriesEval> {
    let MlParamsPrabhakar { nu, delta, gamma } = *params;
    if z == Complex64::new(0.0, 0.0) {
        return Ok(TailTracker::exact(rgamma(delta)));
    }
    let zn = z.norm();
    let mut tracker = TailTracker::new();
    // (gamma)_k z^k / k!
    let mut coef = Complex64::new(1.0, 0.0);
    let mut coef_abs = 1.0;
    with_rgammas(nu, delta, |rgammas| {
        for k in 0..policy.max_terms {
            if k > 0 {
                let kf = k as f64;
                coef *= (gamma + kf - 1.0) / kf * z;
                coef_abs *= (gamma + kf - 1.0).norm() / kf * zn;
                if !coef_abs.is_finite() {
                    break;
                }
            }
            let rg = rgammas.get(k);
            tracker.push(coef * rg, coef_abs * rg.norm(), policy);
            if tracker.done {
                break;
            }
        }
    });
    tracker.finish()
}

/// Multivariate Mittag-Leffler function `E^{(gamma)}_{nu,delta}(z_1..z_M)`.
///
/// For `M = 1` this is exactly [`ml_prabhakar`].
pub fn ml_multivariate(
    params: &MlParamsMultivariate,
    z: &[Complex64],
    policy: &TruncationPolicy,
) -> Result<SeriesEval> {
    if z.len() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: z.len(),
        });
    }
    if params.dim() == 1 {
        let p = MlParamsPrabhakar {
            nu: params.nu,
            delta: params.delta,
            gamma: params.gammas[0],
        };
        return ml_prabhakar(&p, z[0], policy);
    }
    let mut out = multivariate_many(params.nu, &[params.delta], &params.gammas, z, policy)?;
    Ok(out.pop().expect("one delta in, one value out"))
}

/// Evaluates the multivariate series for several second parameters at once.
///
/// The degree-`s` coefficient `sum_{|k| = s} prod_j (gamma_j)_{k_j} z_j^{k_j} / k_j!`
/// does not depend on `delta`, so it is built once by incremental convolution
/// of the per-variable sequences and shared by every requested `delta`.
pub fn ml_multivariate_many(
    nu: f64,
    deltas: &[Complex64],
    gammas: &[Complex64],
    z: &[Complex64],
    policy: &TruncationPolicy,
) -> Result<Vec<SeriesEval>> {
    check_nu(nu)?;
    if gammas.is_empty() {
        return Err(invalid("multivariate Mittag-Leffler needs at least one gamma"));
    }
    if z.len() != gammas.len() {
        return Err(Error::DimensionMismatch {
            expected: gammas.len(),
            got: z.len(),
        });
    }
    for &g in gammas {
        check_gamma(g)?;
    }
    multivariate_many(nu, deltas, gammas, z, policy)
}

fn multivariate_many(
    nu: f64,
    deltas: &[Complex64],
    gammas: &[Complex64],
    z: &[Complex64],
    policy: &TruncationPolicy,
) -> Result<Vec<SeriesEval>> {
    let zero = Complex64::new(0.0, 0.0);
    if z.iter().all(|&x| x == zero) {
        return Ok(deltas.iter().map(|&d| TailTracker::exact(rgamma(d))).collect());
    }
    let m = gammas.len();
    let zabs: Vec<f64> = z.iter().map(|x| x.norm()).collect();
    let gabs: Vec<f64> = gammas.iter().map(|g| g.norm()).collect();

    // per-variable coefficients a_j[k] and their majorants
    let mut coef: Vec<Vec<Complex64>> = vec![Vec::new(); m];
    let mut major: Vec<Vec<f64>> = vec![Vec::new(); m];
    // partial convolutions of variables 0..=j
    let mut conv: Vec<Vec<Complex64>> = vec![Vec::new(); m];
    let mut conv_major: Vec<Vec<f64>> = vec![Vec::new(); m];

    let mut trackers: Vec<TailTracker> = deltas.iter().map(|_| TailTracker::new()).collect();
    for s in 0..policy.max_terms {
        for j in 0..m {
            if s == 0 {
                coef[j].push(Complex64::new(1.0, 0.0));
                major[j].push(1.0);
            } else {
                let kf = s as f64;
                let next = coef[j][s - 1] * (gammas[j] + kf - 1.0) / kf * z[j];
                let next_major = major[j][s - 1] * (gabs[j] + kf - 1.0) / kf * zabs[j];
                coef[j].push(next);
                major[j].push(next_major);
            }
        }
        conv[0].push(coef[0][s]);
        conv_major[0].push(major[0][s]);
        for j in 1..m {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut acc_major = 0.0;
            for i in 0..=s {
                acc += conv[j - 1][i] * coef[j][s - i];
                acc_major += conv_major[j - 1][i] * major[j][s - i];
            }
            conv[j].push(acc);
            conv_major[j].push(acc_major);
        }
        let c_s = conv[m - 1][s];
        let c_major = conv_major[m - 1][s];
        if !c_major.is_finite() {
            break;
        }
        for (tracker, &delta) in trackers.iter_mut().zip(deltas) {
            if tracker.done {
                continue;
            }
            let rg = with_rgammas(nu, delta, |r| r.get(s));
            tracker.push(c_s * rg, c_major * rg.norm(), policy);
        }
        if trackers.iter().all(|t| t.done) {
            break;
        }
    }
    trackers.into_iter().map(TailTracker::finish).collect()
}

/// `E_{nu, n nu + l}(z)` through the shift identity
/// `E_{nu,l}(z) / z^n - sum_{j=1}^n z^{-j} / Gamma((n - j) nu + l)`.
///
/// Reciprocal gamma vanishes at the poles, so `l` may be any complex number.
pub fn ml_shift_identity(
    nu: f64,
    l: Complex64,
    n: usize,
    z: Complex64,
    policy: &TruncationPolicy,
) -> Result<Complex64> {
    check_nu(nu)?;
    if z == Complex64::new(0.0, 0.0) {
        return Err(Error::Domain("shift identity needs z != 0".into()));
    }
    let base = ml2_series(nu, l, z, policy)?.value;
    let zinv = z.inv();
    let mut correction = Complex64::new(0.0, 0.0);
    let mut zpow = Complex64::new(1.0, 0.0);
    for j in 1..=n {
        zpow *= zinv;
        correction += zpow * rgamma(l + ((n - j) as f64) * nu);
    }
    Ok(base * zinv.powu(n as u32) - correction)
}
