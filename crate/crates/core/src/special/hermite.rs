use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::MathError;

pub const MIN_ORDER: usize = 2;
pub const MAX_ORDER: usize = 256;

/// Nodes and weights of an `order`-point rule for `∫ e^{-x²} f(x) dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Strictly increasing abscissae.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<T, F>(&self, mut f: F) -> T
    where
        T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
        F: FnMut(f64) -> T,
    {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(T::default(), |acc, (&x, &w)| acc + f(x) * w)
    }
}

fn cache() -> &'static Mutex<HashMap<usize, Arc<QuadratureRule>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<QuadratureRule>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Gauss-Hermite rule of the given order, exact for polynomials of degree
/// up to `2·order − 1` against the weight `e^{-x²}`.
pub fn gauss_hermite(order: usize) -> Result<Arc<QuadratureRule>, MathError> {
    if !(MIN_ORDER..=MAX_ORDER).contains(&order) {
        return Err(MathError::QuadratureOrder(order));
    }
    let mut guard = cache().lock().unwrap_or_else(|e| e.into_inner());
    if let Some(rule) = guard.get(&order) {
        return Ok(Arc::clone(rule));
    }
    let rule = Arc::new(compute(order));
    guard.insert(order, Arc::clone(&rule));
    Ok(rule)
}

/// Orthonormal Hermite recurrence; returns (p_n(x), p_{n-1}(x)).
fn orthonormal_hermite(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 0.0;
    let mut p = std::f64::consts::PI.powf(-0.25);
    for j in 1..=n {
        let jf = j as f64;
        let next = x * (2.0 / jf).sqrt() * p - ((jf - 1.0) / jf).sqrt() * p_prev;
        p_prev = p;
        p = next;
    }
    (p, p_prev)
}

fn compute(n: usize) -> QuadratureRule {
    let nf = n as f64;
    let scale = (2.0 * nf).sqrt();
    // Positive roots lie below sqrt(2n + 1) and are at least about
    // π / sqrt(2n + 1) apart, so a scan at a fifth of that spacing brackets
    // each one exactly once.
    let upper = (2.0 * nf + 1.0).sqrt() + 0.5;
    let step = std::f64::consts::PI / (2.0 * nf + 1.0).sqrt() / 5.0;
    let mut positive = Vec::with_capacity(n / 2);
    let mut lo = if n % 2 == 1 { 0.5 * step } else { 0.0 };
    let mut f_lo = orthonormal_hermite(n, lo).0;
    while lo < upper {
        let hi = lo + step;
        let f_hi = orthonormal_hermite(n, hi).0;
        if f_lo.signum() != f_hi.signum() {
            positive.push(refine(n, lo, hi, f_lo));
        }
        lo = hi;
        f_lo = f_hi;
    }
    debug_assert_eq!(positive.len(), n / 2);

    let weight = |z: f64| {
        let derivative = scale * orthonormal_hermite(n, z).1;
        2.0 / (derivative * derivative)
    };
    let mut nodes: Vec<f64> = positive.iter().rev().map(|&z| -z).collect();
    if n % 2 == 1 {
        nodes.push(0.0);
    }
    nodes.extend(positive.iter().copied());
    let weights = nodes.iter().map(|&z| weight(z.abs())).collect();
    QuadratureRule { nodes, weights }
}

/// Newton inside `[lo, hi]`, falling back to bisection whenever a step
/// leaves the bracket.
fn refine(n: usize, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let scale = (2.0 * n as f64).sqrt();
    let mut z = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (p, p_prev) = orthonormal_hermite(n, z);
        if p == 0.0 {
            return z;
        }
        if p.signum() == f_lo.signum() {
            lo = z;
        } else {
            hi = z;
        }
        let newton = z - p / (scale * p_prev);
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - z).abs() <= 4.0 * f64::EPSILON * z.abs().max(1.0) {
            return next;
        }
        z = next;
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn order_two_closed_form() {
        let r = gauss_hermite(2).unwrap();
        let s = 0.5f64.sqrt();
        assert!((r.nodes()[0] + s).abs() < 1e-15);
        assert!((r.nodes()[1] - s).abs() < 1e-15);
        for w in r.weights() {
            assert!((w - PI.sqrt() / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_out_of_range_orders() {
        assert!(gauss_hermite(0).is_err());
        assert!(gauss_hermite(1).is_err());
        assert!(gauss_hermite(257).is_err());
        assert!(gauss_hermite(256).is_ok());
    }

    #[test]
    fn second_moment_order_eight() {
        let r = gauss_hermite(8).unwrap();
        let got: f64 = r.integrate(|x| x * x);
        assert!((got - PI.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_against_trapezoid_oracle() {
        // ∫ e^{-x²} cos x dx on [-12, 12]; the tails are below 1e-60.
        let m = 24_000;
        let h = 24.0 / m as f64;
        let f = |x: f64| (-x * x).exp() * x.cos();
        let mut trap = 0.5 * (f(-12.0) + f(12.0));
        for i in 1..m {
            trap += f(-12.0 + i as f64 * h);
        }
        trap *= h;
        let closed = PI.sqrt() * (-0.25f64).exp();
        assert!((trap - closed).abs() < 1e-13);
        let r = gauss_hermite(32).unwrap();
        let got: f64 = r.integrate(|x| x.cos());
        assert!((got - trap).abs() < 1e-10);
    }

    #[test]
    fn structural_invariants_every_order() {
        for order in MIN_ORDER..=MAX_ORDER {
            let r = gauss_hermite(order).unwrap();
            assert_eq!(r.order(), order);
            assert_eq!(r.weights().len(), order);
            assert!(r.weights().iter().all(|&w| w > 0.0), "order {order}");
            assert!(r.nodes().windows(2).all(|p| p[0] < p[1]), "order {order}");
            let total: f64 = r.weights().iter().sum();
            assert!((total / PI.sqrt() - 1.0).abs() < 1e-12, "order {order}: {total}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        // ∫ e^{-x²} x^{2k} dx = Γ(k + 1/2)
        for order in [3usize, 10, 40] {
            let r = gauss_hermite(order).unwrap();
            let mut gamma = PI.sqrt();
            for k in 0..order {
                let got: f64 = r.integrate(|x| x.powi(2 * k as i32));
                assert!((got / gamma - 1.0).abs() < 1e-10, "order {order} k {k}");
                let odd: f64 = r.integrate(|x| x.powi(2 * k as i32 + 1));
                assert!(odd.abs() < 1e-8 * gamma.max(1.0));
                gamma *= k as f64 + 0.5;
            }
        }
    }

    #[test]
    fn cached_rules_are_shared() {
        let a = gauss_hermite(64).unwrap();
        let b = gauss_hermite(64).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
    }
}
