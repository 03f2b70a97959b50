//! Small quadrature toolbox: Gauss–Legendre rules and double-exponential
//! rules for endpoint singularities and half-line integrals.

use std::f64::consts::{FRAC_PI_2, PI};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on `P_n` from the Chebyshev-like initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// `∫_a^b f`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(c + r * x))
            .sum::<f64>()
            * r
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Tanh–sinh rule on `[a, b]`; tolerates integrable endpoint singularities.
/// The integrand is never evaluated at the endpoints.
pub fn tanh_sinh<F: Fn(f64) -> f64>(a: f64, b: f64, tol: f64, f: F) -> f64 {
    if a == b {
        return 0.0;
    }
    let r = 0.5 * (b - a);
    // Evaluate with the distance to the nearest endpoint to keep precision.
    let term = |s: f64| -> f64 {
        let u = FRAC_PI_2 * s.sinh();
        let x = u.tanh();
        let w = FRAC_PI_2 * s.cosh() / (u.cosh() * u.cosh());
        let dist = r / (u.abs().exp() * u.cosh());
        let point = if x >= 0.0 { b - dist } else { a + dist };
        if point <= a || point >= b || w == 0.0 {
            0.0
        } else {
            w * f(point)
        }
    };
    let smax = 4.5;
    let mut h = 0.5;
    let mut sum = term(0.0);
    let mut k = 1;
    while k as f64 * h <= smax {
        let s = k as f64 * h;
        sum += term(s) + term(-s);
        k += 1;
    }
    let mut estimate = sum * h * r;
    for _ in 0..8 {
        h *= 0.5;
        let mut k = 1;
        let mut add = 0.0;
        while k as f64 * h <= smax {
            let s = k as f64 * h;
            add += term(s) + term(-s);
            k += 2;
        }
        sum += add;
        let next = sum * h * r;
        if (next - estimate).abs() <= tol * next.abs().max(1e-300) {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// Exp–sinh rule for `∫_a^∞ f`, suited to exponentially or algebraically
/// decaying integrands with a mild singularity at `a`.
pub fn exp_sinh<F: Fn(f64) -> f64>(a: f64, tol: f64, f: F) -> f64 {
    let term = |s: f64| -> f64 {
        let e = (FRAC_PI_2 * s.sinh()).exp();
        let w = FRAC_PI_2 * s.cosh() * e;
        if e == 0.0 || !w.is_finite() {
            return 0.0;
        }
        let v = f(a + e);
        if v == 0.0 {
            0.0
        } else {
            w * v
        }
    };
    let (smin, smax) = (-4.5, 4.5);
    let mut h = 0.5;
    let mut sum = term(0.0);
    let mut k = 1;
    while k as f64 * h <= smax {
        let s = k as f64 * h;
        sum += term(s);
        if -s >= smin {
            sum += term(-s);
        }
        k += 1;
    }
    let mut estimate = sum * h;
    for _ in 0..9 {
        h *= 0.5;
        let mut add = 0.0;
        let mut k = 1;
        while k as f64 * h <= smax {
            let s = k as f64 * h;
            add += term(s);
            if -s >= smin {
                add += term(-s);
            }
            k += 2;
        }
        sum += add;
        let next = sum * h;
        if (next - estimate).abs() <= tol * next.abs().max(1e-300) {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// `(1 − e^{−z})/z`, accurate near zero.
pub fn exp_g1(z: f64) -> f64 {
    if z.abs() < 1e-300 {
        1.0
    } else {
        -(-z).exp_m1() / z
    }
}

/// `(1 − e^{−z}(1 + z))/z²`, accurate near zero.
pub fn exp_g2(z: f64) -> f64 {
    if z.abs() < 0.5 {
        // Σ_{m≥2} (−1)^m (m−1) z^{m−2}/m!
        let mut term = 0.5;
        let mut sum = 0.0;
        for m in 2..30 {
            sum += (m - 1) as f64 * term;
            term *= -z / (m + 1) as f64;
        }
        sum
    } else {
        (1.0 - (-z).exp() * (1.0 + z)) / (z * z)
    }
}

/// `(e^{−z} − 1 + z)/z²`, accurate near zero.
pub fn exp_phi2(z: f64) -> f64 {
    if z.abs() < 0.5 {
        let mut term = 0.5;
        let mut sum = 0.0;
        for m in 2..30 {
            sum += term;
            term *= -z / (m + 1) as f64;
        }
        sum
    } else {
        ((-z).exp_m1() + z) / (z * z)
    }
}
