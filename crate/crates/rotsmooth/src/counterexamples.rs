//! Lower bounds for the loss of derivatives: the sphere kernel integral whose
//! growth rate 𝔤 controls the local averaged energy, and the log N growth of
//! the mollified restrictions when the cancellation condition fails.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homog_dist::mollified_dalpha;
use crate::quad::{adaptive_breaks, Tol, C64};
use crate::sphere::{
    expand_harmonics, quad_integrate, restrict_mollified, sobolev_norm, sphere_area, ChartAtlas, HarmonicExpansion, PartitionOfUnity,
    SphereQuadrature, DEFAULT_LEVELS,
};
use crate::symbols::{check_conditions, HomogeneousSymbol, DEFAULT_TOL_B};

/// ε ↦ ∫_{S^{n−1}} (θ₁² + … + θ_k² + ε²)^{−α} dS(θ).
///
/// Written as S(S^{k−1})·S(S^{n−k−1})·∫₀^{π/2} (sin²x + ε²)^{−α} sin^{k−1}x cos^{n−k−1}x dx
/// and integrated adaptively with geometric breaks around x ~ ε.
pub fn sphere_kernel_integral(n: usize, k: usize, alpha: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0) || k == 0 || k >= n {
        return Err(Error::Domain(format!("need eps > 0 and 0 < k < n; got eps = {eps}, k = {k}, n = {n}")));
    }
    let mut breaks = vec![0.0];
    let mut b = eps * 1e-3;
    while b < FRAC_PI_2 {
        breaks.push(b);
        b *= 4.0;
    }
    breaks.push(FRAC_PI_2);
    let (km1, nk1) = ((k - 1) as i32, (n - k - 1) as i32);
    let mut f = |x: f64| {
        let s = x.sin();
        C64::new((s * s + eps * eps).powf(-alpha) * s.powi(km1) * x.cos().powi(nk1), 0.0)
    };
    let est = adaptive_breaks(&mut f, &breaks, Tol::rel(1e-11))?;
    Ok(sphere_area(k) * sphere_area(n - k) * est.value.re)
}

/// The same integral with the weight Σ_{m > 2k} χ_m, the charts centred on
/// {θ₁ = … = θ_k = 0}. Never exceeds `sphere_kernel_integral`.
pub fn chart_kernel_integral(n: usize, k: usize, alpha: f64, eps: f64) -> Result<f64> {
    let pou = PartitionOfUnity::new(ChartAtlas::new(n));
    let rule = SphereQuadrature::graded(n, k, 32, DEFAULT_LEVELS)?;
    let f = |t: &[f64]| {
        let r2: f64 = t[..k].iter().map(|x| x * x).sum();
        let w: f64 = pou.weights(t)[2 * k..].iter().sum();
        C64::new(w * (r2 + eps * eps).powf(-alpha), 0.0)
    };
    Ok(quad_integrate(&rule, &f)?.re)
}

/// The growth function: log x at α = k/2, x^{2α−k} above.
pub fn growth_function(k: usize, alpha: f64, x: f64) -> f64 {
    let e = 2.0 * alpha - k as f64;
    if e.abs() < 1e-12 {
        x.ln()
    } else {
        x.powf(e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthModel {
    Power,
    Log,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub model: GrowthModel,
    /// power: slope of log value against log(1/ε); log: mean of value/log(1/ε) over the last decade
    pub estimate: f64,
    /// power: fitted intercept; log: (max − min)/mean of the ratios over the last decade
    pub spread: f64,
    /// RMS residual of the least-squares line (power) or of the ratios about their mean (log)
    pub residual: f64,
    pub eps_min: f64,
    pub eps_max: f64,
    pub points: usize,
}

/// Least-squares slope and intercept of y against x.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rms = (x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum::<f64>() / n).sqrt();
    (slope, icpt, rms)
}

/// Fits value ~ ε^{−p} (power) or value ~ c·log(1/ε) (log) to an (ε, value) series.
pub fn fit_growth(series: &[(f64, f64)], model: GrowthModel) -> Result<GrowthFit> {
    if series.len() < 5 {
        return Err(Error::Config(format!("growth fit needs at least 5 points, got {}", series.len())));
    }
    let eps_min = series.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let eps_max = series.iter().map(|p| p.0).fold(0.0, f64::max);
    if !(eps_max >= 10.0 * eps_min * (1.0 - 1e-12)) {
        return Err(Error::Config(format!("growth fit needs a decade of ε, got [{eps_min:e}, {eps_max:e}]")));
    }
    if series.iter().any(|&(e, v)| !(e > 0.0 && v > 0.0 && v.is_finite())) {
        return Err(Error::Domain("growth fit needs positive ε and values".into()));
    }
    let points = series.len();
    match model {
        GrowthModel::Power => {
            let x: Vec<f64> = series.iter().map(|p| -p.0.ln()).collect();
            let y: Vec<f64> = series.iter().map(|p| p.1.ln()).collect();
            let (slope, icpt, rms) = linear_fit(&x, &y);
            Ok(GrowthFit { model, estimate: slope, spread: icpt, residual: rms, eps_min, eps_max, points })
        }
        GrowthModel::Log => {
            if eps_max >= 1.0 {
                return Err(Error::Domain("log model needs ε < 1".into()));
            }
            let ratios: Vec<f64> = series.iter().filter(|p| p.0 <= 10.0 * eps_min * (1.0 + 1e-12)).map(|p| p.1 / (-p.0.ln())).collect();
            let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
            let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
            let rms = (ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / ratios.len() as f64).sqrt();
            Ok(GrowthFit { model, estimate: mean, spread: (max - min) / mean, residual: rms, eps_min, eps_max, points })
        }
    }
}

/// ε-grid geometric from 10⁻¹ to 10⁻⁴.
pub fn default_eps_grid() -> Vec<f64> {
    (0..12).map(|j| 10f64.powf(-1.0 - 3.0 * j as f64 / 11.0)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossExperiment {
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    /// radius R of the ball B_R
    pub radius: f64,
    pub n_list: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRow {
    pub n_scale: f64,
    /// (RN)^{−1}
    pub eps: f64,
    pub kernel_integral: f64,
    /// 𝔤(RN)
    pub growth: f64,
    pub ratio_to_growth: f64,
    /// ‖f_N‖_{Ḣ^s}/N^s for s = α − k/2 (s = 1/2 at α = k/2)
    pub hs_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub experiment: LossExperiment,
    pub rows: Vec<LossRow>,
    pub fit: GrowthFit,
    pub hs_exponent: f64,
    /// sup |x·(ξ − η)| over x ∈ B_R and ξ, η in the frequency ball; ≤ π/4 keeps cos ≥ 1/√2
    pub max_phase: f64,
}

/// ‖f_N‖²_{Ḣ^s} for f̂_N = R^{n/2}·1_{B(Ne₁, π/(8R))}.
pub fn ball_profile_hs_norm_sq(n: usize, radius: f64, big_n: f64, s: f64) -> Result<f64> {
    let rho = PI / (8.0 * radius);
    let pre = radius.powi(n as i32);
    // |Ne₁ + u ω|² = N² + 2Nu cos γ + u², γ the angle to e₁
    let angular = |u: f64| -> Result<f64> {
        let mut g = |c: f64| {
            let v = (big_n * big_n + 2.0 * big_n * u * c + u * u).powf(s);
            C64::new(if n == 2 { v / (1.0 - c * c).sqrt() * 2.0 } else { v * 2.0 * PI }, 0.0)
        };
        if n == 2 {
            let mut h = |a: f64| g(a.cos()) * a.sin();
            Ok(adaptive_breaks(&mut h, &[0.0, PI], Tol::rel(1e-12))?.value.re)
        } else {
            Ok(adaptive_breaks(&mut g, &[-1.0, 1.0], Tol::rel(1e-12))?.value.re)
        }
    };
    let mut err = None;
    let mut f = |u: f64| match angular(u) {
        Ok(v) => C64::new(v * u.powi(n as i32 - 1), 0.0),
        Err(e) => {
            err.get_or_insert(e);
            C64::new(0.0, 0.0)
        }
    };
    let v = adaptive_breaks(&mut f, &[0.0, rho], Tol::rel(1e-10))?.value.re;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(pre * v)
}

pub fn loss_lower_bound(exp: &LossExperiment) -> Result<LossReport> {
    let (n, k, alpha, r) = (exp.n, exp.k, exp.alpha, exp.radius);
    let kf = k as f64;
    if !(alpha >= 0.5 * kf - 1e-12 && alpha < kf) {
        return Err(Error::Domain(format!("loss experiment needs k/2 ≤ α < k, got α = {alpha}, k = {k}")));
    }
    if !(r > 0.0) || exp.n_list.iter().any(|&m| !(m > PI / (2.0 * r))) {
        return Err(Error::Domain(format!("need R > 0 and N > π/(2R) = {}", PI / (2.0 * r))));
    }
    let log_case = (alpha - 0.5 * kf).abs() < 1e-12;
    let s = if log_case { 0.5 } else { alpha - 0.5 * kf };
    let rows: Vec<LossRow> = exp
        .n_list
        .par_iter()
        .map(|&big_n| -> Result<LossRow> {
            let eps = 1.0 / (r * big_n);
            let kernel_integral = sphere_kernel_integral(n, k, alpha, eps)?;
            let growth = growth_function(k, alpha, r * big_n);
            let hs = ball_profile_hs_norm_sq(n, r, big_n, s)?.sqrt();
            Ok(LossRow {
                n_scale: big_n,
                eps,
                kernel_integral,
                growth,
                ratio_to_growth: kernel_integral / growth,
                hs_ratio: hs / big_n.powf(s),
            })
        })
        .collect::<Result<_>>()?;
    let series: Vec<(f64, f64)> = rows.iter().map(|r| (r.eps, r.kernel_integral)).collect();
    let fit = fit_growth(&series, if log_case { GrowthModel::Log } else { GrowthModel::Power })?;
    Ok(LossReport { experiment: exp.clone(), rows, fit, hs_exponent: s, max_phase: r * 2.0 * PI / (8.0 * r) })
}

/// Parameters of the log N growth experiment for a symbol failing the cancellation condition.
#[derive(Clone, Debug)]
pub struct CancelExperiment {
    pub sym: HomogeneousSymbol,
    pub n: usize,
    pub delta: f64,
    /// fixed mollification scale
    pub t: f64,
    pub n_list: Vec<f64>,
    /// harmonic truncation degree
    pub l: usize,
    pub levels: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CancelRow {
    pub n_scale: f64,
    pub log_n: f64,
    /// ‖q_{α,Nt}⁻¹ − log N·d_{α,Nt}‖_{H^{−δ}}
    pub norm: f64,
    pub q_norm: f64,
    pub d_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CancelReport {
    pub symbol: String,
    pub n: usize,
    pub delta: f64,
    pub t: f64,
    pub l: usize,
    pub passes_c: Option<bool>,
    pub rows: Vec<CancelRow>,
    /// least-squares slope of `norm` against log N
    pub slope: f64,
    /// sup of the q-part norms over the run
    pub a: f64,
    /// inf of the d-part norms over the run
    pub b: f64,
}

impl CancelReport {
    /// min over the run of norm − (c·B·log N − A).
    pub fn bound_margin(&self, c: f64) -> f64 {
        self.rows.iter().map(|r| r.norm - (c * self.b * r.log_n - self.a)).fold(f64::INFINITY, f64::min)
    }
}

fn combine(a: &HarmonicExpansion, b: &HarmonicExpansion, c: f64) -> HarmonicExpansion {
    let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x.iter().zip(y).map(|(u, v)| u + v * c).collect()).collect();
    HarmonicExpansion { n: a.n, lmax: a.lmax, coeffs }
}

/// For each N, the H^{−δ}(S^{n−1}) norm of N^α·q_{α,t}⁻¹(N·) restricted to the
/// sphere, computed through its split q_{α,Nt}⁻¹ − log N·d_{α,Nt}.
pub fn cancel_growth(exp: &CancelExperiment) -> Result<CancelReport> {
    let sym = &exp.sym;
    if sym.integer_excess().is_none() {
        return Err(Error::Domain(format!("cancellation experiment needs α − k ∈ ℕ₀; got α = {}, k = {}", sym.alpha, sym.k)));
    }
    if exp.n_list.iter().any(|&m| !(m >= 1.0)) || !(exp.t > 0.0) {
        return Err(Error::Domain("need t > 0 and N ≥ 1".into()));
    }
    let passes_c = check_conditions(sym, 64, &[0.5, 2.0], DEFAULT_TOL_B).passes_c;
    let rule = SphereQuadrature::graded(exp.n, sym.k, exp.l, exp.levels)?;
    let k = sym.k;
    let mut rows = Vec::with_capacity(exp.n_list.len());
    for &big_n in &exp.n_list {
        let s = big_n * exp.t;
        let qf = restrict_mollified(sym, s, exp.n)?;
        let qe = expand_harmonics(&qf, exp.l, &rule)?;
        let df = |t: &[f64]| mollified_dalpha(sym, s, &t[..k]).unwrap_or(C64::new(f64::NAN, f64::NAN));
        let de = expand_harmonics(&df, exp.l, &rule)?;
        let log_n = big_n.ln();
        let norm = sobolev_norm(&combine(&qe, &de, -log_n), -exp.delta);
        rows.push(CancelRow { n_scale: big_n, log_n, norm, q_norm: sobolev_norm(&qe, -exp.delta), d_norm: sobolev_norm(&de, -exp.delta) });
    }
    let x: Vec<f64> = rows.iter().map(|r| r.log_n).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.norm).collect();
    let slope = if rows.len() >= 2 { linear_fit(&x, &y).0 } else { f64::NAN };
    let a = rows.iter().map(|r| r.q_norm).fold(0.0, f64::max);
    let b = rows.iter().map(|r| r.d_norm).fold(f64::INFINITY, f64::min);
    Ok(CancelReport { symbol: sym.name(), n: exp.n, delta: exp.delta, t: exp.t, l: exp.l, passes_c, rows, slope, a, b })
}

/// N^α‖q_{α,t}⁻¹(N·)‖_{H^{−δ}} computed directly, without the split; used to cross-check `cancel_growth`.
pub fn direct_scaled_norm(sym: &HomogeneousSymbol, n: usize, delta: f64, t: f64, big_n: f64, l: usize, levels: usize) -> Result<f64> {
    let rule = SphereQuadrature::graded(n, sym.k, l, levels)?;
    let f = restrict_mollified(sym, t, n)?.at_radius(big_n);
    Ok(sobolev_norm(&expand_harmonics(&f, l, &rule)?, -delta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_integral_closed_forms() {
        // 4π ∫₀¹ du/(u² + 1) = π²
        let v = sphere_kernel_integral(3, 1, 1.0, 1.0).unwrap();
        assert!((v - PI * PI).abs() < 1e-12 * v, "{v}");
        // α = 0: the sphere area
        assert!((sphere_kernel_integral(3, 2, 0.0, 0.1).unwrap() - 4.0 * PI).abs() < 1e-12);
        assert!((sphere_kernel_integral(2, 1, 0.0, 0.1).unwrap() - 2.0 * PI).abs() < 1e-12);
        // ∫_{S¹} (cos²φ + ε²)^{−1/2} dφ = 4K(−1/ε²)/ε (mpmath oracle)
        let v = sphere_kernel_integral(2, 1, 0.5, 0.5).unwrap();
        assert!((v - 8.075623279913693).abs() < 1e-10, "{v}");
    }

    #[test]
    fn kernel_integral_large_eps_and_monotone() {
        let e = 1e4;
        let v = sphere_kernel_integral(3, 2, 0.75, e).unwrap();
        assert!((v * e.powf(1.5) / (4.0 * PI) - 1.0).abs() < 1e-7);
        let grid = default_eps_grid();
        let vals: Vec<f64> = grid.iter().map(|&e| sphere_kernel_integral(2, 1, 0.75, e).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn fit_self_test() {
        let s: Vec<(f64, f64)> = default_eps_grid().into_iter().map(|e| (e, (1.0 / e).powf(0.7))).collect();
        let f = fit_growth(&s, GrowthModel::Power).unwrap();
        assert!((f.estimate - 0.7).abs() < 1e-12 && f.residual < 1e-12);
        let s: Vec<(f64, f64)> = default_eps_grid().into_iter().map(|e| (e, 3.0 * (1.0 / e).ln())).collect();
        let f = fit_growth(&s, GrowthModel::Log).unwrap();
        assert!((f.estimate - 3.0).abs() < 1e-12 && f.spread < 1e-12);
        assert!(fit_growth(&s[..4], GrowthModel::Power).is_err());
        assert!(fit_growth(&[(0.1, 1.0), (0.09, 1.0), (0.08, 1.0), (0.07, 1.0), (0.06, 1.0)], GrowthModel::Power).is_err());
    }

    #[test]
    fn chart_part_is_a_lower_bound() {
        for &(n, k, a) in &[(2usize, 1usize, 0.75), (3, 1, 0.5), (3, 2, 1.5)] {
            for &e in &[1e-1, 1e-2, 1e-3] {
                let full = sphere_kernel_integral(n, k, a, e).unwrap();
                let part = chart_kernel_integral(n, k, a, e).unwrap();
                assert!(part > 0.0 && part <= full, "{n} {k} {a} {e}: {part} {full}");
            }
        }
    }

    #[test]
    fn contrast_case_converges() {
        // α < k/2: the limit is ∫_{S¹} |cos φ|^{−1/2} dφ = 2√π Γ(1/4)/Γ(3/4), approached at rate ε^{1/2}
        let limit = 10.488230217168479;
        let errs: Vec<f64> = [1e-4, 1e-6, 1e-8].iter().map(|&e| (sphere_kernel_integral(2, 1, 0.25, e).unwrap() - limit).abs()).collect();
        assert!(errs[0] < 0.05 * limit && errs[1] < 0.1 * errs[0] && errs[2] < 0.1 * errs[1], "{errs:?}");
    }

    #[test]
    fn split_matches_direct() {
        let sym = HomogeneousSymbol::riesz(1, 1.0);
        let exp = CancelExperiment { sym: sym.clone(), n: 2, delta: 1.0, t: 4.0, n_list: vec![8.0, 64.0], l: 32, levels: 48 };
        let rep = cancel_growth(&exp).unwrap();
        for r in &rep.rows {
            let d = direct_scaled_norm(&sym, 2, 1.0, 4.0, r.n_scale, 32, 48).unwrap();
            assert!((r.norm - d).abs() < 1e-6 * d, "N = {}: split {} direct {d}", r.n_scale, r.norm);
        }
    }
}
