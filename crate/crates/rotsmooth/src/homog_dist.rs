//! The distributions x₊ᵃ, q_α⁻¹ and d_α, paired against polynomial-times-Gaussian
//! test functions, and their Gaussian mollifications.
//!
//! Pairings are evaluated in spherical coordinates: every ray restriction
//! ψ_θ(ρ) = φ(ρθ) is again polynomial times Gaussian, so derivative transfers
//! on the half-line are exact and only one-dimensional quadratures remain.

use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{adaptive_breaks, graded, Estimate, Inner, Tol, C64};
use crate::special::{gamma, kummer_asymptotic_sum, kummer_neg_series, ln_gamma};
use crate::symbols::{monomial, HomogeneousSymbol, MultiIndex};

/// Geometric levels used toward ρ = 0.
pub const GRADED_LEVELS: usize = 40;

/// φ(η) = P(η)·exp(−s²|η − c|²/2) on ℝ^k.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub k: usize,
    pub center: Vec<f64>,
    pub scale: f64,
    pub poly: Vec<(MultiIndex, C64)>,
}

impl TestFunction {
    pub fn gaussian(center: Vec<f64>, scale: f64, amplitude: C64) -> Self {
        let k = center.len();
        TestFunction { k, center, scale, poly: vec![(vec![0; k], amplitude)] }
    }

    /// η ↦ ψ_t(η₀ − η) with ψ the unit-mass Gaussian; centred at η₀ with scale t.
    pub fn mollifier(t: f64, eta0: &[f64]) -> Self {
        let k = eta0.len();
        let amp = t.powi(k as i32) * (2.0 * PI).powf(-(k as f64) / 2.0);
        Self::gaussian(eta0.to_vec(), t, C64::new(amp, 0.0))
    }

    pub fn with_poly(center: Vec<f64>, scale: f64, poly: Vec<(MultiIndex, C64)>) -> Self {
        TestFunction { k: center.len(), center, scale, poly }
    }

    pub fn eval(&self, eta: &[f64]) -> C64 {
        let d2: f64 = eta.iter().zip(&self.center).map(|(x, c)| (x - c) * (x - c)).sum();
        let p: C64 = self.poly.iter().map(|(b, z)| z * monomial(eta, b)).sum();
        p * (-0.5 * self.scale * self.scale * d2).exp()
    }

    fn from_map(&self, map: BTreeMap<MultiIndex, C64>) -> Self {
        let poly = map.into_iter().filter(|(_, z)| *z != C64::new(0.0, 0.0)).collect();
        TestFunction { k: self.k, center: self.center.clone(), scale: self.scale, poly }
    }

    /// (η·∇ − shift) applied once.
    fn euler_shifted(&self, shift: f64) -> Self {
        let s2 = self.scale * self.scale;
        let mut out: BTreeMap<MultiIndex, C64> = BTreeMap::new();
        for (b, z) in &self.poly {
            let deg: u32 = b.iter().sum();
            *out.entry(b.clone()).or_default() += z * (deg as f64 - shift);
            for i in 0..self.k {
                let mut b2 = b.clone();
                b2[i] += 2;
                *out.entry(b2).or_default() -= z * s2;
                if self.center[i] != 0.0 {
                    let mut b1 = b.clone();
                    b1[i] += 1;
                    *out.entry(b1).or_default() += z * (s2 * self.center[i]);
                }
            }
        }
        self.from_map(out)
    }

    /// The Euler operator η·∇ applied m times.
    pub fn euler_apply(&self, m: u32) -> Self {
        (0..m).fold(self.clone(), |f, _| f.euler_shifted(0.0))
    }

    /// Σ_{|β|=m} (m!/β!) η^β ∂^β φ, i.e. the m-th derivative along η with η frozen.
    /// On a ray it equals ρ^m ψ_θ^{(m)}(ρ); it agrees with `euler_apply` for m ≤ 1.
    pub fn radial_power_derivative(&self, m: u32) -> Self {
        (0..m).fold(self.clone(), |f, j| f.euler_shifted(j as f64))
    }

    /// φ_λ(η) = λ^k φ(λη).
    pub fn dilate(&self, lambda: f64) -> Self {
        let lk = lambda.powi(self.k as i32);
        let poly = self.poly.iter().map(|(b, z)| (b.clone(), z * lk * lambda.powi(b.iter().sum::<u32>() as i32))).collect();
        TestFunction { k: self.k, center: self.center.iter().map(|c| c / lambda).collect(), scale: self.scale * lambda, poly }
    }

    /// ψ_θ(ρ) = φ(ρθ) for a unit vector θ.
    pub fn restrict_ray(&self, theta: &[f64]) -> RadialTestFunction {
        let deg = self.poly.iter().map(|(b, _)| b.iter().sum::<u32>()).max().unwrap_or(0) as usize;
        let mut p = vec![C64::new(0.0, 0.0); deg + 1];
        for (b, z) in &self.poly {
            p[b.iter().sum::<u32>() as usize] += z * monomial(theta, b);
        }
        let ct: f64 = theta.iter().zip(&self.center).map(|(a, b)| a * b).sum();
        let c2: f64 = self.center.iter().map(|c| c * c).sum();
        let perp = (c2 - ct * ct).max(0.0);
        let f = (-0.5 * self.scale * self.scale * perp).exp();
        for z in p.iter_mut() {
            *z *= f;
        }
        RadialTestFunction { poly: p, center: ct, scale: self.scale }
    }

    /// η′ ↦ φ(η′, κ): freezes the trailing coordinates at κ.
    pub fn slice_tail(&self, kappa: &[f64]) -> Self {
        let k = self.k - kappa.len();
        let d2: f64 = kappa.iter().zip(&self.center[k..]).map(|(x, c)| (x - c) * (x - c)).sum();
        let g = (-0.5 * self.scale * self.scale * d2).exp();
        let mut map: BTreeMap<MultiIndex, C64> = BTreeMap::new();
        for (b, z) in &self.poly {
            *map.entry(b[..k].to_vec()).or_default() += z * (g * monomial(kappa, &b[k..]));
        }
        let head = TestFunction { k, center: self.center[..k].to_vec(), scale: self.scale, poly: Vec::new() };
        head.from_map(map)
    }

    pub fn value_at_origin(&self) -> C64 {
        self.eval(&vec![0.0; self.k])
    }
}

/// ψ(x) = p(x)·exp(−s²(x − c)²/2) on the half-line x ≥ 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialTestFunction {
    /// Coefficients of p in ascending powers.
    pub poly: Vec<C64>,
    pub center: f64,
    pub scale: f64,
}

impl RadialTestFunction {
    pub fn gaussian(center: f64, scale: f64, amplitude: f64) -> Self {
        RadialTestFunction { poly: vec![C64::new(amplitude, 0.0)], center, scale }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for z in self.poly.iter().rev() {
            acc = acc * x + z;
        }
        let d = x - self.center;
        acc * (-0.5 * self.scale * self.scale * d * d).exp()
    }

    pub fn derivative(&self) -> Self {
        let s2 = self.scale * self.scale;
        let n = self.poly.len();
        let mut out = vec![C64::new(0.0, 0.0); n + 1];
        for (i, z) in self.poly.iter().enumerate() {
            if i > 0 {
                out[i - 1] += z * i as f64;
            }
            out[i + 1] -= z * s2;
            out[i] += z * (s2 * self.center);
        }
        while out.len() > 1 && out.last() == Some(&C64::new(0.0, 0.0)) {
            out.pop();
        }
        RadialTestFunction { poly: out, center: self.center, scale: self.scale }
    }

    pub fn derivative_n(&self, l: u32) -> Self {
        (0..l).fold(self.clone(), |f, _| f.derivative())
    }

    fn support(&self) -> (f64, f64) {
        let w = (10.0 + 2.0 * (self.poly.len() as f64).sqrt()) / self.scale;
        (self.center - w, self.center + w)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    PlainIntegral,
    GammaRegularized,
    LogRegularized,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingResult {
    pub value: C64,
    pub quadrature_error_estimate: f64,
    pub branch: Branch,
}

#[derive(Clone, Copy)]
enum Weight {
    Power(f64),
    Log,
}

/// ∫₀^∞ w(x) ψ(x) dx for w = x^a (a > −1) or w = log x.
fn half_line(w: Weight, psi: &RadialTestFunction) -> Result<Estimate> {
    let (lo, hi) = psi.support();
    if hi <= 0.0 {
        return Ok(Estimate::zero());
    }
    let weight = |x: f64| match w {
        Weight::Power(a) => {
            if a == 0.0 {
                1.0
            } else {
                x.powf(a)
            }
        }
        Weight::Log => x.ln(),
    };
    let mut f = |x: f64| psi.eval(x) * weight(x);
    let tol = Tol::default();
    let mut breaks = Vec::with_capacity(5);
    let mut total = Estimate::zero();
    let start = if lo > 0.0 {
        lo
    } else {
        let h0 = hi.min(1.0 / psi.scale);
        let p0 = psi.eval(0.0);
        let p1 = psi.derivative().eval(0.0);
        let near = graded(&mut f, h0, GRADED_LEVELS, tol, |h| {
            Inner::Value(match w {
                Weight::Power(a) => p0 * (h.powf(a + 1.0) / (a + 1.0)) + p1 * (h.powf(a + 2.0) / (a + 2.0)),
                Weight::Log => p0 * (h * h.ln() - h) + p1 * (0.5 * h * h * h.ln() - 0.25 * h * h),
            })
        })?;
        total = total.add(near);
        h0
    };
    breaks.push(start);
    for b in [psi.center, 1.0] {
        if b > start && b < hi {
            breaks.push(b);
        }
    }
    breaks.push(hi);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if hi > start {
        total = total.add(adaptive_breaks(&mut f, &breaks, tol)?);
    }
    Ok(total)
}

fn branch_of_exponent(a: f64) -> Branch {
    if a > -1.0 {
        Branch::PlainIntegral
    } else if (a - a.round()).abs() < 1e-12 {
        Branch::LogRegularized
    } else {
        Branch::GammaRegularized
    }
}

/// ⟨x₊ᵃ, ψ⟩ for any real a.
pub fn pair_xplus(a: f64, psi: &RadialTestFunction) -> Result<PairingResult> {
    let branch = branch_of_exponent(a);
    let est = xplus_estimate(a, psi)?;
    Ok(PairingResult { value: est.value, quadrature_error_estimate: est.error, branch })
}

fn xplus_estimate(a: f64, psi: &RadialTestFunction) -> Result<Estimate> {
    if (a + 1.0).abs() < 1e-12 {
        return Ok(half_line(Weight::Log, &psi.derivative())?.scale(C64::new(-1.0, 0.0)));
    }
    if a > -1.0 {
        return half_line(Weight::Power(a), psi);
    }
    // −l−1 ≤ a < −l; for a = −l−1 the shifted exponent is −1 and the log formula applies.
    let l = ((-a).ceil() as u32).saturating_sub(1).max(1);
    let mut denom = 1.0;
    for j in 1..=l {
        denom *= a + j as f64;
    }
    let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
    let inner = xplus_estimate(a + l as f64, &psi.derivative_n(l))?;
    Ok(inner.scale(C64::new(sign / denom, 0.0)))
}

/// Γ(α−k−⌊α−k⌋)/Γ(α−k+1) for α − k > 0 non-integer.
pub fn regularization_constant(sym: &HomogeneousSymbol) -> Option<f64> {
    let d = sym.alpha - sym.k as f64;
    (d > 0.0 && sym.integer_excess().is_none()).then(|| gamma(d - d.floor()) / gamma(d + 1.0))
}

pub fn qinv_branch(sym: &HomogeneousSymbol) -> Branch {
    if sym.integer_excess().is_some() {
        Branch::LogRegularized
    } else if sym.alpha < sym.k as f64 {
        Branch::PlainIntegral
    } else {
        Branch::GammaRegularized
    }
}

/// Angular window where a test function centred at `c` with scale `s` is
/// non-negligible on rays, as breakpoints in the polar angle (k = 2).
fn angular_breaks(phi: &TestFunction) -> Vec<f64> {
    let (c1, c2) = (phi.center[0], phi.center[1]);
    let rc = (c1 * c1 + c2 * c2).sqrt();
    let tc = c2.atan2(c1);
    let deg = phi.poly.iter().map(|(b, _)| b.iter().sum::<u32>()).max().unwrap_or(0) as f64;
    let w_rad = 10.0 + 2.0 * (deg + 1.0).sqrt();
    let sc = phi.scale * rc;
    if sc > w_rad {
        let w = (w_rad / sc).asin();
        let w2 = (1.0 / sc).min(w / 4.0);
        vec![tc - w, tc - w2, tc, tc + w2, tc + w]
    } else {
        vec![tc - PI, tc - PI / 2.0, tc, tc + PI / 2.0, tc + PI]
    }
}

/// ∫_{S^{k−1}} g(θ)/q(θ) dS for a ray functional g.
fn sphere_ray_integral<G>(sym: &HomogeneousSymbol, phi: &TestFunction, mut g: G) -> Result<Estimate>
where
    G: FnMut(&RadialTestFunction) -> Result<Estimate>,
{
    if phi.k != sym.k {
        return Err(Error::Domain(format!("test function on ℝ^{} paired with symbol on ℝ^{}", phi.k, sym.k)));
    }
    match sym.k {
        1 => {
            let mut total = Estimate::zero();
            for t in [-1.0, 1.0] {
                let e = g(&phi.restrict_ray(&[t]))?;
                total = total.add(e.scale(1.0 / sym.eval(&[t])));
            }
            Ok(total)
        }
        2 => {
            let mut inner_err = 0.0f64;
            let mut failure = None;
            let mut f = |t: f64| {
                let th = [t.cos(), t.sin()];
                match g(&phi.restrict_ray(&th)) {
                    Ok(e) => {
                        inner_err = inner_err.max(e.error);
                        e.value / sym.eval(&th)
                    }
                    Err(err) => {
                        failure = Some(err);
                        C64::new(0.0, 0.0)
                    }
                }
            };
            let breaks = angular_breaks(phi);
            let mut est = adaptive_breaks(&mut f, &breaks, Tol { rel: 1e-11, ..Tol::default() })?;
            if let Some(e) = failure {
                return Err(e);
            }
            est.error += inner_err * (breaks[breaks.len() - 1] - breaks[0]);
            Ok(est)
        }
        k => Err(Error::Domain(format!("pairings implemented for k ≤ 2, got k = {k}"))),
    }
}

/// ⟨q_α⁻¹, φ⟩ = ∫_{S^{k−1}} q(θ)⁻¹ ⟨x₊^{k−α−1}, ψ_θ⟩ dS.
pub fn pair_qinv(sym: &HomogeneousSymbol, phi: &TestFunction) -> Result<PairingResult> {
    let a = sym.k as f64 - sym.alpha - 1.0;
    let a = match sym.integer_excess() {
        Some(j) => -(j as f64) - 1.0,
        None => a,
    };
    let est = sphere_ray_integral(sym, phi, |psi| xplus_estimate(a, psi))?;
    Ok(PairingResult { value: est.value, quadrature_error_estimate: est.error, branch: qinv_branch(sym) })
}

/// ⟨d_α, φ⟩ = ∫ q_α⁻¹ (ζ·∇)^{α−k+1} φ dζ as a volume integral in polar coordinates.
pub fn pair_dalpha(sym: &HomogeneousSymbol, phi: &TestFunction) -> Result<PairingResult> {
    let Some(j) = sym.integer_excess() else {
        return Err(Error::Domain(format!("d_alpha needs alpha − k ∈ ℕ₀, got alpha − k = {}", sym.alpha - sym.k as f64)));
    };
    // On the ray θ the integrand ρ^{k−1}·(ρ^{j+1}ψ^{(j+1)})/(ρ^α q(θ)) reduces to ψ^{(j+1)}(ρ)/q(θ).
    let est = sphere_ray_integral(sym, phi, |psi| half_line(Weight::Power(0.0), &psi.derivative_n(j + 1)))?;
    Ok(PairingResult { value: est.value, quadrature_error_estimate: est.error, branch: Branch::LogRegularized })
}

/// −Σ_{|β|=α−k} (j!/β!) ∂^βφ(0) ∫ θ^β/q dS written as −∫ (θ·∇)^j φ(0)/q(θ) dS.
pub fn dalpha_sphere_form(sym: &HomogeneousSymbol, phi: &TestFunction) -> Result<C64> {
    let j = sym.integer_excess().ok_or_else(|| Error::Domain("d_alpha needs alpha − k ∈ ℕ₀".into()))?;
    let est = sphere_ray_integral(sym, phi, |psi| Ok(Estimate { value: psi.derivative_n(j).eval(0.0), error: 0.0, abs: 0.0, evals: 1 }))?;
    Ok(-est.value)
}

pub fn mollified_qinv(sym: &HomogeneousSymbol, t: f64, eta: &[f64]) -> Result<C64> {
    if t <= 0.0 {
        return Err(Error::Domain("mollification scale must be positive".into()));
    }
    Ok(pair_qinv(sym, &TestFunction::mollifier(t, eta))?.value)
}

pub fn mollified_dalpha(sym: &HomogeneousSymbol, t: f64, eta: &[f64]) -> Result<C64> {
    if t <= 0.0 {
        return Err(Error::Domain("mollification scale must be positive".into()));
    }
    Ok(pair_dalpha(sym, &TestFunction::mollifier(t, eta))?.value)
}

/// t^α·g_m(t²ρ²/2), the radial factor of (|y|^{−α}Y_m(y/|y|)) * ψ_t at distance ρ
/// from the origin, for a degree-m spherical harmonic Y_m on ℝ^k and 0 < α < k:
/// g_m(X) = 2^{−α/2} Γ((m+k−α)/2)/Γ(m+k/2) · X^{m/2} · M((m+α)/2, m+k/2, −X).
pub fn mollified_power_profile(k: usize, alpha: f64, m: u32, t: f64, rho: f64) -> f64 {
    let (kf, mf) = (k as f64, m as f64);
    let x = 0.5 * t * t * rho * rho;
    let a = 0.5 * (mf + alpha);
    let b = mf + 0.5 * kf;
    if x > 30.0 {
        if let Some(sum) = kummer_asymptotic_sum(a, b, x) {
            return rho.powf(-alpha) * sum;
        }
    }
    let log_pre = -0.5 * alpha * LN_2 + ln_gamma(0.5 * (mf + kf - alpha)) - ln_gamma(b);
    if x == 0.0 {
        return if m == 0 { t.powf(alpha) * log_pre.exp() } else { 0.0 };
    }
    t.powf(alpha) * (log_pre + 0.5 * mf * x.ln() + kummer_neg_series(a, b, x, 0.0)).exp()
}

/// Harmonic decomposition of 1/q on S^{k−1} (k ≤ 2), giving closed-form
/// mollifications q_{α,t}⁻¹ when α < k.
///
/// For k = 1 the modes are the even (m = 0) and odd (m = 1, harmonic sgn) parts;
/// for k = 2 they are the Fourier coefficients of λ ↦ 1/q(cos λ, sin λ).
#[derive(Clone, Debug)]
pub struct SymbolModes {
    pub k: usize,
    pub alpha: f64,
    pub modes: Vec<(i64, C64)>,
}

impl SymbolModes {
    pub fn new(sym: &HomogeneousSymbol) -> Result<Self> {
        if sym.alpha >= sym.k as f64 {
            return Err(Error::Domain("closed-form mollification needs alpha < k".into()));
        }
        let modes = match sym.k {
            1 => {
                let (p, m) = (sym.eval(&[1.0]).inv(), sym.eval(&[-1.0]).inv());
                vec![(0, (p + m) * 0.5), (1, (p - m) * 0.5)]
            }
            2 => {
                let n = 1024;
                let mut buf: Vec<C64> = (0..n)
                    .map(|j| {
                        let t = 2.0 * PI * j as f64 / n as f64;
                        sym.eval(&[t.cos(), t.sin()]).inv()
                    })
                    .collect();
                rustfft::FftPlanner::new().plan_fft_forward(n).process(&mut buf);
                let peak = buf.iter().map(|z| z.norm()).fold(0.0, f64::max) / n as f64;
                let tail = buf[n / 4..3 * n / 4].iter().map(|z| z.norm()).fold(0.0, f64::max) / n as f64;
                if !(tail <= 1e-13 * peak) {
                    return Err(Error::Resolution { requested: n / 4, available: n / 4 });
                }
                buf.iter()
                    .enumerate()
                    .filter(|(_, z)| z.norm() / n as f64 > 1e-15 * peak)
                    .map(|(j, z)| {
                        let m = if j < n / 2 { j as i64 } else { j as i64 - n as i64 };
                        (m, z / n as f64)
                    })
                    .collect()
            }
            k => return Err(Error::Domain(format!("closed-form mollification implemented for k ≤ 2, got k = {k}"))),
        };
        Ok(SymbolModes { k: sym.k, alpha: sym.alpha, modes })
    }

    /// q_{α,t}⁻¹(η).
    pub fn mollified(&self, t: f64, eta: &[f64]) -> C64 {
        match self.k {
            1 => {
                let x = eta[0];
                let mut v = C64::new(0.0, 0.0);
                for &(m, a) in &self.modes {
                    let y = if m == 0 { 1.0 } else { x.signum() };
                    v += a * y * mollified_power_profile(1, self.alpha, m as u32, t, x.abs());
                }
                v
            }
            _ => {
                let rho = eta[0].hypot(eta[1]);
                let lam = eta[1].atan2(eta[0]);
                self.modes
                    .iter()
                    .map(|&(m, a)| {
                        a * C64::from_polar(1.0, m as f64 * lam) * mollified_power_profile(2, self.alpha, m.unsigned_abs() as u32, t, rho)
                    })
                    .sum()
            }
        }
    }

    /// Angular modes of q_{α,t}⁻¹ on the circle of radius ρ (k = 2): (m, coefficient of e^{imλ}).
    pub fn ring(&self, t: f64, rho: f64) -> Vec<(i64, C64)> {
        self.modes.iter().map(|&(m, a)| (m, a * mollified_power_profile(self.k, self.alpha, m.unsigned_abs() as u32, t, rho))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::gauss_legendre;

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    fn gauss1() -> RadialTestFunction {
        RadialTestFunction::gaussian(0.0, 1.0, 1.0)
    }

    #[test]
    fn xplus_examples() {
        let p0 = pair_xplus(0.0, &gauss1()).unwrap();
        assert!((p0.value.re - (PI / 2.0).sqrt()).abs() < 1e-13);
        assert_eq!(p0.branch, Branch::PlainIntegral);
        let pl = pair_xplus(-1.0, &gauss1()).unwrap();
        // (log 2 − γ)/2 = 0.0579818...
        assert!((pl.value.re - (2f64.ln() - EULER_GAMMA) / 2.0).abs() < 1e-12, "{}", pl.value);
        assert_eq!(pl.branch, Branch::LogRegularized);
        let ph = pair_xplus(-0.5, &gauss1()).unwrap();
        // 2^{-3/4} Γ(1/4), frozen from an independent quadrature
        assert!((ph.value.re - 2.155_800_549_540_792).abs() < 1e-11, "{}", ph.value);
    }

    #[test]
    fn xplus_recursion_identity() {
        let psi = RadialTestFunction { poly: vec![C64::new(1.0, 0.5), C64::new(-0.3, 0.0)], center: 0.7, scale: 1.3 };
        for a in [-0.9, -0.5, -0.1] {
            let lhs = pair_xplus(a, &psi).unwrap().value;
            let rhs = pair_xplus(a + 1.0, &psi.derivative()).unwrap().value * (-1.0 / (a + 1.0));
            assert!((lhs - rhs).norm() < 1e-10 * lhs.norm(), "a={a}");
        }
        // integer exponents below −1 go through the log formula
        let a = -2.0;
        let lhs = pair_xplus(a, &psi).unwrap().value;
        let rhs = pair_xplus(-1.0, &psi.derivative()).unwrap().value;
        assert!((lhs - rhs).norm() < 1e-12 * rhs.norm());
        let a = -2.5;
        let lhs = pair_xplus(a, &psi).unwrap();
        assert_eq!(lhs.branch, Branch::GammaRegularized);
        let rhs = pair_xplus(-0.5, &psi.derivative_n(2)).unwrap().value / ((a + 1.0) * (a + 2.0));
        assert!((lhs.value - rhs).norm() < 1e-12 * rhs.norm());
    }

    #[test]
    fn euler_examples() {
        let g = TestFunction::gaussian(vec![0.0, 0.0], 1.0, C64::new(1.0, 0.0));
        let e = g.euler_apply(1);
        for x in [[0.3f64, -1.2], [2.0, 0.5]] {
            let r2 = x[0] * x[0] + x[1] * x[1];
            assert!((e.eval(&x) - C64::new(-r2 * (-r2 / 2.0).exp(), 0.0)).norm() < 1e-15);
        }
        assert_eq!(g.euler_apply(0), g);
        let h = TestFunction::with_poly(vec![0.0, 0.0], 1.0, vec![(vec![1, 0], C64::new(1.0, 0.0))]);
        let eh = h.euler_apply(1);
        for x in [[0.3f64, -1.2], [1.1, 0.4]] {
            let r2 = x[0] * x[0] + x[1] * x[1];
            let want = (x[0] - x[0] * r2) * (-r2 / 2.0).exp();
            assert!((eh.eval(&x).re - want).abs() < 1e-15);
        }
    }

    #[test]
    fn radial_power_derivative_is_frozen_directional_derivative() {
        let phi = TestFunction::with_poly(vec![0.4, -0.2], 1.5, vec![(vec![1, 1], C64::new(0.5, 0.1)), (vec![0, 0], C64::new(1.0, 0.0))]);
        let th = [0.6, 0.8];
        let rho = 0.9;
        let d2 = phi.radial_power_derivative(2).eval(&[rho * th[0], rho * th[1]]);
        let psi = phi.restrict_ray(&th);
        let want = psi.derivative_n(2).eval(rho) * rho * rho;
        assert!((d2 - want).norm() < 1e-13);
    }

    #[test]
    fn qinv_examples() {
        let g2 = TestFunction::gaussian(vec![0.0, 0.0], 1.0, C64::new(1.0, 0.0));
        let v = pair_qinv(&HomogeneousSymbol::riesz(2, 1.0), &g2).unwrap();
        assert!((v.value.re - PI * (2.0 * PI).sqrt()).abs() < 1e-10);
        assert_eq!(v.branch, Branch::PlainIntegral);
        let s = HomogeneousSymbol::riesz(1, 1.5);
        assert!((regularization_constant(&s).unwrap() - 2.0).abs() < 1e-14);
        let g1 = TestFunction::gaussian(vec![0.0], 1.0, C64::new(1.0, 0.0));
        let t = pair_qinv(&HomogeneousSymbol::transport(), &g1).unwrap();
        assert!(t.value.norm() < 1e-14);
        assert_eq!(t.branch, Branch::LogRegularized);
    }

    fn symmetric_volume(f: impl Fn(f64) -> C64) -> C64 {
        let mut g = |u: f64| f(u) + f(-u);
        graded(&mut g, 14.0, 60, Tol { abs: 1e-13, ..Tol::default() }, |_| Inner::Rule).unwrap().value
    }

    #[test]
    fn gamma_branch_matches_volume_form() {
        // k = 1, α = 3/2: ⟨q⁻¹, φ⟩ = 2 ∫ (η∂)φ / |η|^{3/2}
        let sym = HomogeneousSymbol::riesz(1, 1.5);
        let phi = TestFunction::with_poly(vec![0.3], 1.2, vec![(vec![0], C64::new(1.0, 0.0)), (vec![1], C64::new(0.2, 0.0))]);
        let got = pair_qinv(&sym, &phi).unwrap();
        assert_eq!(got.branch, Branch::GammaRegularized);
        let e = phi.radial_power_derivative(1);
        let vol = symmetric_volume(|x| e.eval(&[x]) / x.abs().powf(1.5));
        assert!((got.value - vol * 2.0).norm() < 1e-9 * got.value.norm(), "{} {}", got.value, vol * 2.0);
        // α − k = 2.5 uses the frozen third radial derivative
        let sym = HomogeneousSymbol::riesz(1, 3.5);
        let got = pair_qinv(&sym, &phi).unwrap().value;
        let c = regularization_constant(&sym).unwrap();
        let e = phi.radial_power_derivative(3);
        let vol = symmetric_volume(|x| e.eval(&[x]) / x.abs().powf(3.5));
        assert!((got - vol * c).norm() < 1e-9 * got.norm(), "{} {}", got, vol * c);
    }

    #[test]
    fn dalpha_examples() {
        let g1 = TestFunction::gaussian(vec![0.0], 1.0, C64::new(1.0, 0.0));
        assert!(pair_dalpha(&HomogeneousSymbol::transport(), &g1).unwrap().value.norm() < 1e-14);
        let v = pair_dalpha(&HomogeneousSymbol::riesz(1, 1.0), &g1).unwrap().value;
        assert!((v - C64::new(-2.0, 0.0)).norm() < 1e-12);
        let g2 = TestFunction::gaussian(vec![0.0, 0.0], 1.0, C64::new(1.0, 0.0));
        let v2 = pair_dalpha(&HomogeneousSymbol::riesz(2, 2.0), &g2).unwrap().value;
        assert!((v2 + 2.0 * PI).norm() < 1e-10);
        assert!(pair_dalpha(&HomogeneousSymbol::riesz(2, 1.0), &g2).is_err());
    }

    #[test]
    fn dalpha_volume_matches_sphere_sum() {
        let phi = TestFunction::with_poly(vec![0.3, -0.5], 1.3, vec![(vec![1, 0], C64::new(1.0, 0.0)), (vec![0, 0], C64::new(0.5, 0.0))]);
        for sym in [HomogeneousSymbol::riesz(2, 2.0), HomogeneousSymbol::riesz(2, 3.0)] {
            let vol = pair_dalpha(&sym, &phi).unwrap().value;
            let sph = dalpha_sphere_form(&sym, &phi).unwrap();
            assert!((vol - sph).norm() < 1e-9 * (1.0 + sph.norm()), "{} {}", vol, sph);
        }
    }

    #[test]
    fn property_one_direct_quadrature() {
        // φ concentrated in 0.5 < |η| < 4: pairing is the plain integral ∫ φ/q
        let sym = HomogeneousSymbol::cauchy();
        let phi = TestFunction::gaussian(vec![1.5, 0.8], 6.0, C64::new(1.0, 0.0));
        let got = pair_qinv(&sym, &phi).unwrap().value;
        let gl = gauss_legendre(60, -1.0, 1.0);
        let mut direct = C64::new(0.0, 0.0);
        for &(x, wx) in &gl {
            for &(y, wy) in &gl {
                let eta = [1.5 + 2.0 * x, 0.8 + 2.0 * y];
                direct += phi.eval(&eta) / sym.eval(&eta) * (wx * wy * 4.0);
            }
        }
        assert!((got - direct).norm() < 1e-6 * direct.norm(), "{got} {direct}");
    }

    #[test]
    fn closed_form_mollification_matches_pairing() {
        for sym in [HomogeneousSymbol::cauchy(), HomogeneousSymbol::riesz(2, 0.6), HomogeneousSymbol::riesz(1, 0.25)] {
            let modes = SymbolModes::new(&sym).unwrap();
            for (t, eta) in [(1.7, vec![0.5, 0.3]), (9.0, vec![-0.2, 0.7]), (0.3, vec![1.5, -2.0])] {
                let eta = &eta[..sym.k];
                let want = mollified_qinv(&sym, t, eta).unwrap();
                let got = modes.mollified(t, eta);
                assert!((got - want).norm() < 1e-9 * want.norm(), "{} {t}: {got} {want}", sym.name());
            }
        }
        // odd part for k = 1
        let sym = HomogeneousSymbol::custom(1, 0.4, |e| C64::new(e[0].abs().powf(0.4), 0.0) * if e[0] > 0.0 { 1.0 } else { 2.0 });
        let modes = SymbolModes::new(&sym).unwrap();
        let want = mollified_qinv(&sym, 1.3, &[0.7]).unwrap();
        assert!((modes.mollified(1.3, &[0.7]) - want).norm() < 1e-9 * want.norm());
    }

    #[test]
    fn power_profile_oracle() {
        // k = 2, α = 0.6, m = 1, t = 1.7, ρ = |(0.5, 0.3)|: value frozen from a 2-D scipy quadrature
        let rho = 0.5f64.hypot(0.3);
        let lam = 0.3f64.atan2(0.5);
        let v = C64::from_polar(1.0, -lam) * mollified_power_profile(2, 0.6, 1, 1.7, rho);
        assert!((v - C64::new(0.511_160_140_472_816_8, -0.306_696_084_284_067_8)).norm() < 1e-9);
        // large-argument limit is ρ^{−α}
        assert!((mollified_power_profile(1, 0.25, 0, 1e4, 0.5) - 0.5f64.powf(-0.25)).abs() < 1e-7);
    }
}
