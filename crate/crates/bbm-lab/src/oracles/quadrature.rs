//! Adaptive Gauss–Kronrod quadrature (G7–K15 with bisection).
//!
//! Semi-infinite integrals are mapped to `[0, 1)` by `x = a + z/(1−z)`.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature did not converge to tolerance {tol} within {max_depth} subdivisions (error estimate {estimate})")]
    NoConvergence {
        tol: f64,
        max_depth: usize,
        estimate: f64,
    },
    #[error("integrand returned a non-finite value at x = {0}")]
    NonFinite(f64),
}

// 15-point Kronrod abscissae on [0, 1] side (symmetric), with the embedded
// 7-point Gauss rule at the odd positions.
const XK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One G7–K15 evaluation on `[a, b]`; returns `(kronrod, |kronrod − gauss|)`.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64), QuadratureError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = 0.0;
    let mut g = 0.0;
    for i in 0..8 {
        let (lo, hi) = (c - h * XK[i], c + h * XK[i]);
        let flo = f(lo);
        if !flo.is_finite() {
            return Err(QuadratureError::NonFinite(lo));
        }
        let pair = if i == 7 {
            flo
        } else {
            let fhi = f(hi);
            if !fhi.is_finite() {
                return Err(QuadratureError::NonFinite(hi));
            }
            flo + fhi
        };
        k += WK[i] * pair;
        if i % 2 == 1 {
            g += WG[i / 2] * pair;
        }
    }
    Ok((k * h, (k - g).abs() * h))
}

/// Adaptive integral of `f` over the finite interval `[a, b]` with absolute
/// error at most `tol`.
pub fn try_integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64, QuadratureError> {
    const MAX_DEPTH: usize = 60;
    // worklist of (lo, hi, local tol, depth)
    let mut stack = vec![(a, b, tol, 0usize)];
    let mut total = 0.0;
    while let Some((lo, hi, t, depth)) = stack.pop() {
        let (value, err) = gk15(&f, lo, hi)?;
        if err <= t || hi - lo < f64::EPSILON * (1.0 + lo.abs() + hi.abs()) {
            if err > t && depth >= MAX_DEPTH {
                return Err(QuadratureError::NoConvergence {
                    tol,
                    max_depth: MAX_DEPTH,
                    estimate: err,
                });
            }
            total += value;
            continue;
        }
        if depth >= MAX_DEPTH {
            return Err(QuadratureError::NoConvergence {
                tol,
                max_depth: MAX_DEPTH,
                estimate: err,
            });
        }
        let mid = 0.5 * (lo + hi);
        stack.push((lo, mid, t / 2.0, depth + 1));
        stack.push((mid, hi, t / 2.0, depth + 1));
    }
    Ok(total)
}

/// Like [`try_integrate`] but panics on failure; for integrands known to be
/// smooth.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    try_integrate(f, a, b, tol).expect("quadrature failed on a smooth integrand")
}

/// Adaptive integral of `f` over `[a, ∞)` via the substitution
/// `x = a + z/(1−z)`.
pub fn try_integrate_to_inf<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    tol: f64,
) -> Result<f64, QuadratureError> {
    try_integrate(
        |z| {
            let one_minus = 1.0 - z;
            let x = a + z / one_minus;
            f(x) / (one_minus * one_minus)
        },
        0.0,
        1.0,
        tol,
    )
}

/// Panicking variant of [`try_integrate_to_inf`].
pub fn integrate_to_inf<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> f64 {
    try_integrate_to_inf(f, a, tol).expect("quadrature failed on a smooth integrand")
}
