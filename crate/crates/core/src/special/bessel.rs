//! Integer-order Bessel functions of the first kind.
//!
//! Values come from Miller's downward recurrence normalized with
//! `J_0 + 2 Σ J_{2k} = 1`, which is stable for every order once the start
//! index sits well above `|x|`. Tiny arguments use the leading terms of the
//! power series instead.

use super::MathError;

const SMALL_ARG: f64 = 1e-6;
const RESCALE_LIMIT: f64 = 1e250;

/// `J_order(x)` for any integer order.
pub fn bessel_j(order: i32, x: f64) -> Result<f64, MathError> {
    if !x.is_finite() {
        return Err(MathError::NonFiniteArgument(x));
    }
    let n = order.unsigned_abs() as usize;
    let value = bessel_j_table(n, x)[n];
    Ok(if order < 0 && n % 2 == 1 { -value } else { value })
}

/// `[J_0(x), J_1(x), …, J_max_order(x)]` in one recurrence sweep.
///
/// `x` must be finite; callers that accept user input go through
/// [`bessel_j`] or validate first.
pub fn bessel_j_table(max_order: usize, x: f64) -> Vec<f64> {
    debug_assert!(x.is_finite());
    let mut out = vec![0.0; max_order + 1];
    let ax = x.abs();
    if ax == 0.0 {
        out[0] = 1.0;
        return out;
    }
    if ax < SMALL_ARG {
        small_argument(&mut out, ax);
    } else {
        miller(&mut out, ax);
    }
    if x < 0.0 {
        for (k, v) in out.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

/// Symmetric table `J_k(x)` for `k = -max_order..=max_order`, stored at
/// index `k + max_order`.
pub fn bessel_j_symmetric(max_order: usize, x: f64) -> Vec<f64> {
    let half = bessel_j_table(max_order, x);
    let mut out = vec![0.0; 2 * max_order + 1];
    for (k, &v) in half.iter().enumerate() {
        out[max_order + k] = v;
        out[max_order - k] = if k % 2 == 1 { -v } else { v };
    }
    out
}

fn small_argument(out: &mut [f64], ax: f64) {
    // (x/2)^k / k! · (1 − (x/2)²/(k+1)); the next term is below 1e-24 relative.
    let half = 0.5 * ax;
    let q = half * half;
    let mut lead = 1.0;
    for (k, v) in out.iter_mut().enumerate() {
        if k > 0 {
            lead *= half / k as f64;
        }
        if lead == 0.0 {
            break;
        }
        *v = lead * (1.0 - q / (k as f64 + 1.0));
    }
}

fn miller(out: &mut [f64], ax: f64) {
    let max_order = out.len() - 1;
    let reach = (max_order as f64).max(ax);
    let mut start = (reach + 30.0 + (40.0 * reach).sqrt()).ceil() as usize;
    start += start % 2;

    let two_over_x = 2.0 / ax;
    let mut next = 0.0; // J_{k+1}
    let mut current = 1e-300; // J_k, arbitrary seed
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let prev = k as f64 * two_over_x * current - next; // J_{k-1}
        next = current;
        current = prev;
        if current.abs() > RESCALE_LIMIT {
            current /= RESCALE_LIMIT;
            next /= RESCALE_LIMIT;
            norm /= RESCALE_LIMIT;
            for v in out.iter_mut() {
                *v /= RESCALE_LIMIT;
            }
        }
        let order = k - 1;
        if order <= max_order {
            out[order] = current;
        }
        if order % 2 == 0 && order > 0 {
            norm += 2.0 * current;
        }
    }
    norm += current;
    for v in out.iter_mut() {
        *v /= norm;
    }
}
