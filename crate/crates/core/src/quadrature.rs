//! Adaptive Gauss-Kronrod integration.
//!
//! All integrals in the analytic engine go through this module: finite
//! intervals, semi-infinite intervals mapped onto `[0, 1)`, power-law tails
//! integrated in logarithmic coordinates, and Gaussian-tailed distance
//! integrals truncated by mass.
//!
//! The engine is re-entrant. Every call owns its interval heap, so nested
//! integrals and concurrent callers need no coordination.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::QuadError;

// 15-point Kronrod abscissae (positive half) and weights, with the embedded
// 7-point Gauss weights. Values from QUADPACK qk15.
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
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and budget for one integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Hard cap on integrand evaluations.
    pub max_evals: usize,
    /// Probability mass allowed beyond the truncation radius of an
    /// `exp(-pi lambda r^2)` tail.
    pub tail_mass: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_evals: 200_000,
            tail_mass: 1e-10,
        }
    }
}

impl QuadSpec {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    pub fn with_max_evals(mut self, max_evals: usize) -> Self {
        self.max_evals = max_evals;
        self
    }

    pub fn with_tail_mass(mut self, tail_mass: f64) -> Self {
        self.tail_mass = tail_mass;
        self
    }

    pub fn validate(&self) -> Result<(), QuadError> {
        let ok = self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.max_evals >= 15
            && self.tail_mass > 0.0
            && self.tail_mass < 1.0;
        if ok {
            Ok(())
        } else {
            Err(QuadError::InvalidSpec(format!("{self:?}")))
        }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// Result of a converged integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

impl Integral {
    const ZERO: Integral = Integral {
        value: 0.0,
        error: 0.0,
        evals: 0,
    };

    fn add(self, other: Integral) -> Integral {
        Integral {
            value: self.value + other.value,
            error: self.error + other.error,
            evals: self.evals + other.evals,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut err = err.abs();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    err
}

fn kronrod15<F, E>(f: &mut F, a: f64, b: f64) -> Result<Segment, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        // odd indices of the Kronrod abscissae are the Gauss nodes
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let error = rescale_error((res_k - res_g) * half, res_abs * half.abs(), res_asc * half.abs());
    Ok(Segment { a, b, value, error })
}

/// Globally adaptive integration of a fallible integrand over `[a, b]`.
///
/// Integrand errors abort the integral and are returned unchanged. Running
/// out of evaluations yields [`QuadError::NonConvergence`] carrying the
/// partial value and achieved error.
pub fn try_integrate<F, E>(mut f: F, a: f64, b: f64, spec: &QuadSpec) -> Result<Integral, E>
where
    F: FnMut(f64) -> Result<f64, E>,
    E: From<QuadError>,
{
    spec.validate()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(QuadError::InvalidInterval { a, b }.into());
    }
    if a == b {
        return Ok(Integral::ZERO);
    }
    if a > b {
        let r = try_integrate(f, b, a, spec)?;
        return Ok(Integral {
            value: -r.value,
            ..r
        });
    }

    let first = kronrod15(&mut f, a, b)?;
    let mut evals = 15;
    check_finite(first.value, a, b)?;
    let mut total = first.value;
    let mut total_err = first.error;
    let mut heap = BinaryHeap::new();
    // segments too narrow to split are parked here
    let mut frozen_value = 0.0;
    let mut frozen_err = 0.0;
    heap.push(first);

    while total_err > spec.target(total) {
        if evals + 30 > spec.max_evals {
            return Err(QuadError::NonConvergence {
                value: total,
                error: total_err,
                evals,
            }
            .into());
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b || (worst.b - worst.a) < 1e-14 * mid.abs().max(1.0) {
            frozen_value += worst.value;
            frozen_err += worst.error;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let left = kronrod15(&mut f, worst.a, mid)?;
        let right = kronrod15(&mut f, mid, worst.b)?;
        evals += 30;
        total += left.value + right.value - worst.value;
        check_finite(total, a, b)?;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        if heap.is_empty() {
            break;
        }
    }

    // recompute from the live segments to shed accumulated rounding
    let mut value = frozen_value;
    let mut error = frozen_err;
    for s in heap.iter() {
        value += s.value;
        error += s.error;
    }
    Ok(Integral { value, error, evals })
}

fn check_finite(value: f64, a: f64, b: f64) -> Result<(), QuadError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(QuadError::NonFinite { a, b })
    }
}

/// Infallible counterpart of [`try_integrate`].
pub fn integrate<F>(mut f: F, a: f64, b: f64, spec: &QuadSpec) -> Result<Integral, QuadError>
where
    F: FnMut(f64) -> f64,
{
    try_integrate(|x| Ok::<f64, QuadError>(f(x)), a, b, spec)
}

/// Integrate over `[a, inf)` through the map `u = a + t / (1 - t)`.
pub fn try_integrate_semi_infinite<F, E>(mut f: F, a: f64, spec: &QuadSpec) -> Result<Integral, E>
where
    F: FnMut(f64) -> Result<f64, E>,
    E: From<QuadError>,
{
    try_integrate(
        |t| {
            let one_minus = 1.0 - t;
            let u = a + t / one_minus;
            let v = f(u)?;
            if v == 0.0 {
                Ok(0.0)
            } else {
                Ok(v / (one_minus * one_minus))
            }
        },
        0.0,
        1.0,
        spec,
    )
}

pub fn integrate_semi_infinite<F>(mut f: F, a: f64, spec: &QuadSpec) -> Result<Integral, QuadError>
where
    F: FnMut(f64) -> f64,
{
    try_integrate_semi_infinite(|x| Ok::<f64, QuadError>(f(x)), a, spec)
}

/// Integrate a power-law tailed integrand over `[a, inf)`, `a > 0`.
///
/// Works in `x = ln(u / a)`, where an `u^-p` tail becomes `exp(-(p - 1) x)`.
/// The `x` axis is consumed in fixed-width chunks until a chunk adds less
/// than the tolerance target; `breaks` are interior points (in `u`) where
/// the integrand has a kink.
pub fn try_integrate_power_tail<F, E>(
    mut f: F,
    a: f64,
    breaks: &[f64],
    spec: &QuadSpec,
) -> Result<Integral, E>
where
    F: FnMut(f64) -> Result<f64, E>,
    E: From<QuadError>,
{
    const CHUNK: f64 = 4.0;
    const MAX_X: f64 = 690.0;
    if !(a > 0.0 && a.is_finite()) {
        return Err(QuadError::InvalidInterval { a, b: f64::INFINITY }.into());
    }
    let mut g = |x: f64| -> Result<f64, E> {
        let u = a * x.exp();
        let v = f(u)?;
        Ok(if v == 0.0 { 0.0 } else { v * u })
    };
    let mut acc = Integral::ZERO;
    let mut lo = 0.0;
    let mut edges: Vec<f64> = breaks
        .iter()
        .filter(|&&b| b > a)
        .map(|&b| (b / a).ln())
        .collect();
    edges.sort_by(f64::total_cmp);
    for e in edges {
        let part = try_integrate(&mut g, lo, e, spec)?;
        acc = acc.add(part);
        lo = e;
    }
    let mut quiet = 0;
    while lo < MAX_X {
        let hi = (lo + CHUNK).min(MAX_X);
        let part = try_integrate(&mut g, lo, hi, spec)?;
        acc = acc.add(part);
        lo = hi;
        if acc.evals > spec.max_evals {
            return Err(QuadError::NonConvergence {
                value: acc.value,
                error: acc.error,
                evals: acc.evals,
            }
            .into());
        }
        if part.value.abs() <= 0.1 * spec.target(acc.value) {
            // two consecutive negligible chunks: the tail is spent
            quiet += 1;
            if quiet >= 2 {
                return Ok(acc);
            }
        } else {
            quiet = 0;
        }
    }
    Ok(acc)
}

/// Radius beyond which an `exp(-pi lambda r^2)` tail holds at most `mass`.
pub fn gaussian_tail_radius(lambda: f64, mass: f64) -> f64 {
    if lambda <= 0.0 {
        return f64::INFINITY;
    }
    (-(mass.ln()) / (std::f64::consts::PI * lambda)).sqrt()
}

/// Integrate over `[0, R]` with interior breakpoints, where `R` truncates a
/// Gaussian tail of density `lambda` at `spec.tail_mass`.
pub fn try_integrate_gaussian_tail<F, E>(
    mut f: F,
    lambda: f64,
    breaks: &[f64],
    spec: &QuadSpec,
) -> Result<Integral, E>
where
    F: FnMut(f64) -> Result<f64, E>,
    E: From<QuadError>,
{
    let radius = gaussian_tail_radius(lambda, spec.tail_mass);
    if !radius.is_finite() {
        return Ok(Integral::ZERO);
    }
    let mut acc = Integral::ZERO;
    let mut lo = 0.0;
    let mut edges: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&b| b > 0.0 && b < radius)
        .collect();
    edges.sort_by(f64::total_cmp);
    edges.push(radius);
    for e in edges {
        acc = acc.add(try_integrate(&mut f, lo, e, spec)?);
        lo = e;
    }
    Ok(acc)
}

pub fn integrate_gaussian_tail<F>(
    mut f: F,
    lambda: f64,
    breaks: &[f64],
    spec: &QuadSpec,
) -> Result<Integral, QuadError>
where
    F: FnMut(f64) -> f64,
{
    try_integrate_gaussian_tail(|x| Ok::<f64, QuadError>(f(x)), lambda, breaks, spec)
}
