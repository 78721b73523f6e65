//! Special functions not covered by `statrs`.

pub use statrs::function::gamma::{gamma, ln_gamma};

/// Kummer's function M(a, b, −x) for x ≥ 0, b > 0 and b ≥ a.
///
/// Small arguments use the Kummer-transformed series, whose terms are all
/// positive; large arguments use the algebraic asymptotic expansion and fall
/// back to the series when that expansion does not reach full precision.
pub fn kummer_neg(a: f64, b: f64, x: f64) -> f64 {
    assert!(x >= 0.0 && b > 0.0 && b - a >= 0.0, "kummer_neg: unsupported parameters");
    if x > 30.0 {
        if let Some(v) = kummer_neg_asymptotic(a, b, x) {
            return v;
        }
    }
    kummer_neg_series(a, b, x, 0.0).exp()
}

/// log of `M(a, b, −x)·exp(shift)`, summed as `e^{−x} M(b−a, b, x)` with rescaling.
pub fn kummer_neg_series(a: f64, b: f64, x: f64, shift: f64) -> f64 {
    let c = b - a;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut log_scale = 0.0f64;
    let mut s = 0.0f64;
    loop {
        term *= (c + s) / (b + s) * x / (s + 1.0);
        sum += term;
        s += 1.0;
        if sum > 1e280 {
            sum *= 1e-280;
            term *= 1e-280;
            log_scale += 280.0 * std::f64::consts::LN_10;
        }
        if s > x && term <= 1e-17 * sum {
            break;
        }
        if s > 1e7 {
            break;
        }
    }
    sum.ln() + log_scale - x + shift
}

/// `Γ(b)/Γ(b−a)·x^{−a}·Σ (a)_s (a−b+1)_s / (s! x^s)`; `None` if not converged.
pub fn kummer_neg_asymptotic(a: f64, b: f64, x: f64) -> Option<f64> {
    let sum = kummer_asymptotic_sum(a, b, x)?;
    Some((ln_gamma(b) - ln_gamma(b - a) - a * x.ln()).exp() * sum)
}

/// The bare asymptotic sum `Σ (a)_s (a−b+1)_s / (s! x^s)`.
pub fn kummer_asymptotic_sum(a: f64, b: f64, x: f64) -> Option<f64> {
    let d = a - b + 1.0;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut last = f64::INFINITY;
    for s in 0..200 {
        let s = s as f64;
        term *= (a + s) * (d + s) / ((s + 1.0) * x);
        if term.abs() > last {
            return None;
        }
        sum += term;
        last = term.abs();
        if term.abs() <= 1e-17 * sum.abs() {
            return Some(sum);
        }
    }
    None
}

/// Fully normalised associated Legendre functions `P̄_l^m`, l = m..=lmax,
/// with ∫_{−1}^{1} P̄² dx = 1 and no Condon–Shortley phase.
///
/// `x = cos φ` and `s = sin φ ≥ 0` are passed separately so that both stay
/// accurate near the poles.
pub fn legendre_column(lmax: usize, m: usize, x: f64, s: f64, out: &mut Vec<f64>) {
    out.clear();
    if m > lmax {
        return;
    }
    let mut p = std::f64::consts::FRAC_1_SQRT_2;
    for i in 1..=m {
        let i = i as f64;
        p *= ((2.0 * i - 1.0) / (2.0 * i)).sqrt() * s;
    }
    p *= ((2 * m + 1) as f64).sqrt();
    out.push(p);
    if lmax == m {
        return;
    }
    let mut prev = p;
    let mut cur = x * ((2 * m + 3) as f64).sqrt() * p;
    out.push(cur);
    let mf = m as f64;
    let mut a_prev = ((2 * m + 3) as f64).sqrt();
    for l in (m + 2)..=lmax {
        let lf = l as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let next = a * (x * cur - prev / a_prev);
        prev = cur;
        cur = next;
        a_prev = a;
        out.push(cur);
    }
}
