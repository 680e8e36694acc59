//! Special functions and quadrature used by the kernel code.

/// Gamma function.
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Complete beta function.
pub fn beta(p: f64, q: f64) -> f64 {
    (libm::lgamma(p) + libm::lgamma(q) - libm::lgamma(p + q)).exp()
}

/// Lower incomplete beta integral on `[0, x]`, `x <= 1/2`, by its power series.
fn inc_beta_series(x: f64, p: f64, q: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    // x^p * sum_n (1-q)_n / n! * x^n / (p + n)
    let mut term = 1.0;
    let mut sum = 1.0 / p;
    let mut n = 0.0;
    loop {
        term *= (n + 1.0 - q) * x / (n + 1.0);
        n += 1.0;
        let add = term / (p + n);
        sum += add;
        if add.abs() <= 1e-17 * sum.abs() || n > 500.0 {
            break;
        }
    }
    x.powf(p) * sum
}

/// `∫_{x0}^{x1} t^(p-1) (1-t)^(q-1) dt` for `0 <= x0 <= x1 <= 1`, `p, q > 0`.
///
/// Evaluated on whichever side of 1/2 keeps the two terms small, so nearby
/// arguments do not cancel against the complete integral.
pub fn beta_inc_diff(x0: f64, x1: f64, p: f64, q: f64) -> f64 {
    debug_assert!(x0 <= x1);
    if x1 <= 0.5 {
        inc_beta_series(x1, p, q) - inc_beta_series(x0, p, q)
    } else if x0 >= 0.5 {
        inc_beta_series(1.0 - x0, q, p) - inc_beta_series(1.0 - x1, q, p)
    } else {
        (inc_beta_series(0.5, p, q) - inc_beta_series(x0, p, q))
            + (inc_beta_series(0.5, q, p) - inc_beta_series(1.0 - x1, q, p))
    }
}

/// Tanh-sinh quadrature of `f` over `[a, b]`.
///
/// The integrand receives `(x, x - a, b - x)` so endpoint singularities can
/// be evaluated from the exact distances rather than from a rounded `x`.
pub fn tanh_sinh<F>(f: F, a: f64, b: f64, tol: f64) -> f64
where
    F: Fn(f64, f64, f64) -> f64,
{
    use std::f64::consts::FRAC_PI_2;
    let half = 0.5 * (b - a);
    if half == 0.0 {
        return 0.0;
    }
    let eval = |t: f64| -> f64 {
        let v = FRAC_PI_2 * t.sinh();
        let w = FRAC_PI_2 * t.cosh() / (v.cosh() * v.cosh());
        // 1 + tanh v and 1 - tanh v without cancellation
        let lo = 2.0 / (1.0 + (-2.0 * v).exp());
        let hi = 2.0 / (1.0 + (2.0 * v).exp());
        let dl = half * lo;
        let dr = half * hi;
        if dl <= 0.0 || dr <= 0.0 {
            return 0.0;
        }
        let x = if t < 0.0 { a + dl } else { b - dr };
        w * f(x, dl, dr)
    };
    const T_MAX: f64 = 5.0;
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    while (k as f64) * h <= T_MAX {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut estimate = sum * h * half;
    for _ in 0..8 {
        h *= 0.5;
        let mut k = 1;
        let mut add = 0.0;
        while (k as f64) * h <= T_MAX {
            let t = k as f64 * h;
            add += eval(t) + eval(-t);
            k += 2;
        }
        sum += add;
        let next = sum * h * half;
        let done = (next - estimate).abs() <= tol * next.abs().max(1e-300);
        estimate = next;
        if done {
            break;
        }
    }
    estimate
}
