//! The rotated solution operators in frequency space, and numerical checks of
//! the smoothing identity
//!
//! ‖S_α f‖_{H^{−δ}(SO(n); Ḣ^α)} = S(S^{n−1})^{−1/2} ‖r_α‖_{H^{−δ}(S^{n−1})} ‖f‖_{L²}.
//!
//! Everything is evaluated in polar frequency coordinates ξ = r θ. Angular
//! integrals over Haar-rotated frames use θ = Qθ′, so that the singular set of
//! p_α(·, Q) is always {θ′₁ = … = θ′_k = 0} and the graded sphere rules apply.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counterexamples::{fit_growth, GrowthFit, GrowthModel};
use crate::error::{Error, Result};
use crate::quad::{adaptive_breaks, gauss_legendre, Tol, C64};
use crate::rotations::{mean_and_se, sample_haar, HaarSampler, Rotation};
use crate::sphere::{
    aitken_limit, expand_harmonics, l2_norm, ralpha_norm, restrict_mollified, sobolev_norm, sphere_area, RalphaNorm, RalphaOptions,
    SphereFunction, SphereQuadrature,
};
use crate::symbols::HomogeneousSymbol;

/// Radial Gauss–Legendre nodes used for ξ-integrals over the profile support.
pub const RADIAL_NODES: usize = 48;

/// JSON description of a frequency profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    #[serde(default = "default_r0")]
    pub r0: f64,
    #[serde(default = "default_r1")]
    pub r1: f64,
    /// ‖f‖_{L²}
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    /// a in the angular factor 1 + a·θ (empty: constant 1)
    #[serde(default)]
    pub angular: Vec<f64>,
}

fn default_r0() -> f64 {
    1.0
}
fn default_r1() -> f64 {
    2.0
}
fn default_amplitude() -> f64 {
    1.0
}

impl Default for ProfileSpec {
    fn default() -> Self {
        ProfileSpec { r0: 1.0, r1: 2.0, amplitude: 1.0, angular: Vec::new() }
    }
}

/// f̂(ξ) = radial(|ξ|)·(1 + a·ξ/|ξ|), with radial(r) = c·exp(−1/((r − r₀)(r₁ − r))) on (r₀, r₁)
/// and c fixed by ‖f‖_{L²} = amplitude.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyProfile {
    pub n: usize,
    pub spec: ProfileSpec,
    a: Vec<f64>,
    c: f64,
    radial_sq_integral: f64,
}

impl FrequencyProfile {
    pub fn new(n: usize, spec: ProfileSpec) -> Result<Self> {
        if !(spec.r0 > 0.0 && spec.r1 > spec.r0) {
            return Err(Error::Config(format!("profile support must satisfy 0 < r0 < r1, got [{}, {}]", spec.r0, spec.r1)));
        }
        if !(spec.amplitude >= 0.0 && spec.amplitude.is_finite()) {
            return Err(Error::Config("profile amplitude must be finite and ≥ 0".into()));
        }
        if spec.angular.len() > n {
            return Err(Error::Config(format!("angular coefficients: at most n = {n}, got {}", spec.angular.len())));
        }
        let mut a = spec.angular.clone();
        a.resize(n, 0.0);
        let mut p = FrequencyProfile { n, spec, a, c: 1.0, radial_sq_integral: 1.0 };
        let (r0, r1) = (p.spec.r0, p.spec.r1);
        let mut g = |r: f64| C64::new(r.powi(n as i32 - 1) * p.bump(r).powi(2), 0.0);
        let raw = adaptive_breaks(&mut g, &[r0, 0.5 * (r0 + r1), r1], Tol::rel(1e-13))?.value.re;
        let ang = p.angular_sq_integral();
        p.c = p.spec.amplitude / (raw * ang).sqrt();
        p.radial_sq_integral = p.c * p.c * raw;
        Ok(p)
    }

    pub fn default_for(n: usize) -> Self {
        Self::new(n, ProfileSpec::default()).expect("default profile")
    }

    fn bump(&self, r: f64) -> f64 {
        let (r0, r1) = (self.spec.r0, self.spec.r1);
        if r <= r0 || r >= r1 {
            0.0
        } else {
            (-1.0 / ((r - r0) * (r1 - r))).exp()
        }
    }

    pub fn radial(&self, r: f64) -> f64 {
        self.c * self.bump(r)
    }

    pub fn angular(&self, theta: &[f64]) -> f64 {
        1.0 + self.a.iter().zip(theta).map(|(a, t)| a * t).sum::<f64>()
    }

    pub fn angular_coeffs(&self) -> &[f64] {
        &self.a
    }

    pub fn eval(&self, xi: &[f64]) -> C64 {
        let r = norm(xi);
        if r == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let theta: Vec<f64> = xi.iter().map(|x| x / r).collect();
        C64::new(self.radial(r) * self.angular(&theta), 0.0)
    }

    /// ∫_{S^{n−1}} |1 + a·θ|² dS = S(1 + |a|²/n).
    pub fn angular_sq_integral(&self) -> f64 {
        sphere_area(self.n) * (1.0 + self.a.iter().map(|a| a * a).sum::<f64>() / self.n as f64)
    }

    /// ∫ r^{n−1} radial(r)² dr.
    pub fn radial_sq_integral(&self) -> f64 {
        self.radial_sq_integral
    }

    pub fn l2_norm(&self) -> f64 {
        (self.radial_sq_integral * self.angular_sq_integral()).sqrt()
    }

    /// Gauss–Legendre nodes (r, w) on the radial support.
    pub fn radial_rule(&self, m: usize) -> Vec<(f64, f64)> {
        gauss_legendre(m, self.spec.r0, self.spec.r1)
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn require_subcritical(sym: &HomogeneousSymbol) -> Result<()> {
    if sym.alpha >= sym.k as f64 {
        return Err(Error::Domain(format!("the pointwise multiplier needs α < k; got α = {}, k = {}", sym.alpha, sym.k)));
    }
    Ok(())
}

/// (Qe₁·ξ, …, Qe_k·ξ) = the first k entries of Qᵀξ.
fn frame_coords(sym: &HomogeneousSymbol, xi: &[f64], q: &Rotation) -> Vec<f64> {
    q.apply_transpose(xi)[..sym.k].to_vec()
}

/// |ξ|^α / q_α(Qe₁·ξ, …, Qe_k·ξ).
pub fn multiplier(sym: &HomogeneousSymbol, xi: &[f64], q: &Rotation) -> Result<C64> {
    require_subcritical(sym)?;
    let eta = frame_coords(sym, xi, q);
    let r = norm(xi);
    if norm(&eta) <= 1e-14 * r || r == 0.0 {
        return Err(Error::Singular(xi.to_vec()));
    }
    Ok(sym.eval(&eta).inv() * r.powf(sym.alpha))
}

/// û = f̂/p_α(·, Q) for α < k.
#[derive(Clone, Debug)]
pub struct SolutionField {
    pub sym: HomogeneousSymbol,
    pub profile: FrequencyProfile,
    pub q: Rotation,
}

pub fn apply_solution_operator(sym: &HomogeneousSymbol, f: &FrequencyProfile, q: &Rotation) -> Result<SolutionField> {
    require_subcritical(sym)?;
    if q.n != f.n || sym.k >= f.n {
        return Err(Error::Domain(format!("dimension mismatch: n = {}, rotation n = {}, k = {}", f.n, q.n, sym.k)));
    }
    Ok(SolutionField { sym: sym.clone(), profile: f.clone(), q: q.clone() })
}

impl SolutionField {
    pub fn symbol_at(&self, xi: &[f64]) -> C64 {
        self.sym.eval(&frame_coords(&self.sym, xi, &self.q))
    }

    pub fn eval(&self, xi: &[f64]) -> Result<C64> {
        let eta = frame_coords(&self.sym, xi, &self.q);
        if norm(&eta) <= 1e-14 * norm(xi) {
            return Err(Error::Singular(xi.to_vec()));
        }
        Ok(self.profile.eval(xi) / self.sym.eval(&eta))
    }

    /// |p_α·û − f̂| at ξ.
    pub fn inverse_residual(&self, xi: &[f64]) -> Result<f64> {
        Ok((self.symbol_at(xi) * self.eval(xi)? - self.profile.eval(xi)).norm())
    }

    /// ∫ |ξ|^{2α}|û|² dξ.
    pub fn homogeneous_norm_sq(&self, l: usize, levels: usize) -> Result<f64> {
        let m = SingularMoments::new(&self.sym, self.profile.n, l, levels)?;
        Ok(self.profile.radial_sq_integral() * m.weighted(&self.q.apply_transpose(self.profile.angular_coeffs())))
    }

    /// (2π)^{−n/2} ∫ e^{ix·ξ} û(ξ) dξ.
    pub fn inverse_transform(&self, x: &[f64], opts: &OscillatoryOptions) -> Result<C64> {
        let sym = &self.sym;
        let k = sym.k;
        polar_transform(&self.profile, k, &self.q, x, opts, |r, tp| sym.eval(&tp[..k]).inv() * r.powf(-sym.alpha))
    }
}

/// Moments Σ w|r_α|²·(1, θ, θθᵀ) of a graded sphere rule in the canonical frame.
/// With them, ∫ |1 + b·θ|²|r_α(θ)|² dS = M₀ + 2b·M₁ + bᵀM₂b exactly.
#[derive(Clone, Debug)]
pub struct SingularMoments {
    pub n: usize,
    pub m0: f64,
    pub m1: Vec<f64>,
    pub m2: Vec<f64>,
}

impl SingularMoments {
    /// Errors with `Divergent` when M₀ changes by more than 10⁻³ between `levels/2` and `levels`.
    pub fn new(sym: &HomogeneousSymbol, n: usize, l: usize, levels: usize) -> Result<Self> {
        require_subcritical(sym)?;
        let coarse = Self::at_levels(sym, n, l, levels / 2)?;
        let fine = Self::at_levels(sym, n, l, levels)?;
        if !(fine.m0.is_finite() && (fine.m0 - coarse.m0).abs() <= 1e-3 * fine.m0) {
            return Err(Error::Divergent {
                reason: format!(
                    "∫|r_α|² grows under refinement toward the singular set: {:.6e} at {} levels, {:.6e} at {levels}",
                    coarse.m0,
                    levels / 2,
                    fine.m0
                ),
                table: vec![((levels / 2) as f64, coarse.m0), (levels as f64, fine.m0)],
            });
        }
        Ok(fine)
    }

    fn at_levels(sym: &HomogeneousSymbol, n: usize, l: usize, levels: usize) -> Result<Self> {
        let rule = SphereQuadrature::graded(n, sym.k, l, levels)?;
        let k = sym.k;
        let mut m0 = 0.0;
        let mut m1 = vec![0.0; n];
        let mut m2 = vec![0.0; n * n];
        let mut bad = None;
        rule.for_each(|t, w| {
            let v = w * sym.eval(&t[..k]).norm_sqr().recip();
            if !v.is_finite() {
                bad.get_or_insert_with(|| t.to_vec());
                return;
            }
            m0 += v;
            for i in 0..n {
                m1[i] += v * t[i];
                for j in 0..n {
                    m2[i * n + j] += v * t[i] * t[j];
                }
            }
        });
        if let Some(node) = bad {
            return Err(Error::NonFinite { node });
        }
        Ok(SingularMoments { n, m0, m1, m2 })
    }

    pub fn weighted(&self, b: &[f64]) -> f64 {
        let n = self.n;
        let mut v = self.m0;
        for i in 0..n {
            v += 2.0 * b[i] * self.m1[i];
            for j in 0..n {
                v += b[i] * b[j] * self.m2[i * n + j];
            }
        }
        v
    }
}

/// Quadrature parameters for oscillatory ξ-integrals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillatoryOptions {
    pub l: usize,
    pub levels: usize,
    pub radial_nodes: usize,
}

impl Default for OscillatoryOptions {
    fn default() -> Self {
        OscillatoryOptions { l: 64, levels: 60, radial_nodes: 32 }
    }
}

/// (2π)^{−n/2} ∫ r^{n−1} radial(r) ∫ e^{i r x·Qθ′} (1 + a·Qθ′) g(r, θ′) dS(θ′) dr.
fn polar_transform<G>(f: &FrequencyProfile, k: usize, q: &Rotation, x: &[f64], opts: &OscillatoryOptions, g: G) -> Result<C64>
where
    G: Fn(f64, &[f64]) -> C64 + Sync,
{
    let n = f.n;
    let rule = SphereQuadrature::graded(n, k, opts.l, opts.levels)?;
    let nodes = rule.nodes();
    let qx = q.apply_transpose(x);
    let b = q.apply_transpose(f.angular_coeffs());
    let radial = f.radial_rule(opts.radial_nodes);
    let parts: Vec<Result<C64>> = radial
        .par_iter()
        .map(|&(r, wr)| {
            let mut acc = C64::new(0.0, 0.0);
            for (t, w) in &nodes {
                let phase: f64 = r * qx.iter().zip(t.iter()).map(|(a, b)| a * b).sum::<f64>();
                let ang = 1.0 + b.iter().zip(t.iter()).map(|(a, b)| a * b).sum::<f64>();
                let v = g(r, t);
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::NonFinite { node: t.clone() });
                }
                acc += C64::from_polar(1.0, phase) * v * (w * ang);
            }
            Ok(acc * (wr * r.powi(n as i32 - 1) * f.radial(r)))
        })
        .collect();
    let mut total = C64::new(0.0, 0.0);
    for p in parts {
        total += p?;
    }
    Ok(total * (2.0 * PI).powf(-(n as f64) / 2.0))
}

/// S_{α,N} f(x, Q) = (2π)^{−n/2} ∫ e^{ix·ξ} p_{α,N}⁻¹(ξ, Q) f̂(ξ) dξ, with p_{α,N}⁻¹(ξ, Q) = q_{α,N}⁻¹(Qᵀξ).
pub fn evaluate_salpha_n(
    sym: &HomogeneousSymbol,
    f: &FrequencyProfile,
    big_n: f64,
    x: &[f64],
    q: &Rotation,
    opts: &OscillatoryOptions,
) -> Result<C64> {
    let base = restrict_mollified(sym, big_n, f.n)?;
    let alpha = sym.alpha;
    // MollifiedRestriction at radius r gives r^α q_{α,N}⁻¹(rθ′)
    polar_transform(f, sym.k, q, x, opts, |r, tp| base.clone().at_radius(r).eval(tp) * r.powf(-alpha))
}

/// Radial norm profile and both evaluations of the left-hand side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LhsReport {
    pub delta: f64,
    /// S^{−1}‖r_α‖²_{H^{−δ}}‖f‖²
    pub reduced_sq: f64,
    /// S^{−1}∫ r^{n−1} radial² N(r)² dr ∫|angular|², N(r) the t-extrapolated norm at radius r
    pub full_sq: f64,
    pub rel_diff: f64,
    /// (r, N(r)) at the radial nodes
    pub radial_norms: Vec<(f64, f64)>,
    pub ralpha: RalphaNorm,
}

impl LhsReport {
    pub fn reduced(&self) -> f64 {
        self.reduced_sq.sqrt()
    }
    pub fn full(&self) -> f64 {
        self.full_sq.sqrt()
    }
}

/// The norm used on the right-hand side: the pointwise restriction when α < k, else the t-limit.
pub fn best_norm(r: &RalphaNorm) -> f64 {
    r.pointwise_norm.unwrap_or(r.norm)
}

/// H^{−δ} norm (or L² norm for δ = 0) of the radius-r mollified restriction,
/// extrapolated over the last three scales of `opts.t_sequence`.
fn radial_norm(sym: &HomogeneousSymbol, n: usize, delta: f64, opts: &RalphaOptions, rule: &SphereQuadrature, r: f64) -> Result<f64> {
    let ts = &opts.t_sequence[opts.t_sequence.len().saturating_sub(3)..];
    let mut seq = Vec::with_capacity(3);
    for &t in ts {
        let f = restrict_mollified(sym, t, n)?.at_radius(r);
        seq.push(if delta == 0.0 { l2_norm(rule, &f)? } else { sobolev_norm(&expand_harmonics(&f, opts.l, rule)?, -delta) });
    }
    Ok(aitken_limit(&seq))
}

pub fn lhs_identity(sym: &HomogeneousSymbol, f: &FrequencyProfile, n: usize, delta: f64, opts: &RalphaOptions) -> Result<LhsReport> {
    if f.n != n {
        return Err(Error::Domain("profile dimension differs from n".into()));
    }
    let ralpha = ralpha_norm(sym, n, delta, opts)?;
    lhs_from_norm(sym, f, n, delta, opts, ralpha)
}

fn lhs_from_norm(
    sym: &HomogeneousSymbol,
    f: &FrequencyProfile,
    n: usize,
    delta: f64,
    opts: &RalphaOptions,
    ralpha: RalphaNorm,
) -> Result<LhsReport> {
    let s = sphere_area(n);
    let nr = best_norm(&ralpha);
    let reduced_sq = nr * nr * f.l2_norm().powi(2) / s;
    let rule = SphereQuadrature::graded(n, sym.k, opts.l, opts.levels)?;
    let nodes = f.radial_rule(RADIAL_NODES / 3);
    let radial_norms: Vec<(f64, f64)> =
        nodes.iter().map(|&(r, _)| radial_norm(sym, n, delta, opts, &rule, r).map(|v| (r, v))).collect::<Result<_>>()?;
    let radial: f64 =
        nodes.iter().zip(&radial_norms).map(|(&(r, w), &(_, nv))| w * r.powi(n as i32 - 1) * f.radial(r).powi(2) * nv * nv).sum();
    let full_sq = radial * f.angular_sq_integral() / s;
    Ok(LhsReport {
        delta,
        reduced_sq,
        full_sq,
        rel_diff: (full_sq.sqrt() - reduced_sq.sqrt()).abs() / reduced_sq.sqrt(),
        radial_norms,
        ralpha,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhsReport {
    pub rhs: f64,
    pub sphere_norm: f64,
    pub f_norm: f64,
    pub ralpha: RalphaNorm,
}

/// S(S^{n−1})^{−1/2}‖r_α‖_{H^{−δ}}‖f‖_{L²}.
pub fn rhs_identity(sym: &HomogeneousSymbol, f: &FrequencyProfile, n: usize, delta: f64, opts: &RalphaOptions) -> Result<RhsReport> {
    let ralpha = ralpha_norm(sym, n, delta, opts)?;
    Ok(rhs_from_norm(f, n, ralpha))
}

fn rhs_from_norm(f: &FrequencyProfile, n: usize, ralpha: RalphaNorm) -> RhsReport {
    let sphere_norm = best_norm(&ralpha);
    let f_norm = f.l2_norm();
    RhsReport { rhs: sphere_norm * f_norm / sphere_area(n).sqrt(), sphere_norm, f_norm, ralpha }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub seed: u64,
    pub count: usize,
    pub failures: usize,
    /// Haar mean of ∫|ξ|^{2α}|f̂|²/|p_α(ξ, Q)|² dξ
    pub mean_sq: f64,
    pub std_error_sq: f64,
    pub value: f64,
    pub std_error: f64,
}

/// Monte Carlo over Haar Q of ∫|ξ|^{2α}|f̂(ξ)|²/|p_α(ξ, Q)|² dξ, δ = 0 and α < k/2.
pub fn mc_lhs_delta0(sym: &HomogeneousSymbol, f: &FrequencyProfile, count: usize, seed: u64, l: usize, levels: usize) -> Result<McReport> {
    if !(sym.alpha < 0.5 * sym.k as f64) {
        return Err(Error::Domain(format!("δ = 0 needs α < k/2; got α = {}, k = {}", sym.alpha, sym.k)));
    }
    let n = f.n;
    let moments = SingularMoments::new(sym, n, l, levels)?;
    let mut sampler = HaarSampler::new(n, seed)?;
    let rots = sample_haar(&mut sampler, count);
    let radial = f.radial_sq_integral();
    let a = f.angular_coeffs();
    let vals: Vec<f64> = rots.par_iter().map(|q| radial * moments.weighted(&q.apply_transpose(a))).collect();
    let ok: Vec<f64> = vals.iter().copied().filter(|v| v.is_finite()).collect();
    let failures = vals.len() - ok.len();
    let (mean_sq, std_error_sq) = mean_and_se(&ok);
    let value = mean_sq.sqrt();
    Ok(McReport { seed, count, failures, mean_sq, std_error_sq, value, std_error: std_error_sq / (2.0 * value) })
}

/// Everything needed to compare both sides of the identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub symbol: String,
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    pub delta: f64,
    pub lhs: f64,
    pub lhs_reduced: f64,
    pub rhs: f64,
    /// lhs/rhs
    pub ratio: f64,
    pub mc: Option<McReport>,
    /// |mc/rhs − 1|
    pub mc_rel_diff: Option<f64>,
    /// quadrature and truncation: |full − reduced|/reduced + truncation + t-convergence
    pub deterministic_error: f64,
    /// MC standard error relative to rhs
    pub statistical_error: f64,
    pub options: RalphaOptions,
    pub lhs_report: LhsReport,
}

pub fn verify_identity(
    sym: &HomogeneousSymbol,
    f: &FrequencyProfile,
    n: usize,
    delta: f64,
    opts: &RalphaOptions,
    mc: Option<(usize, u64)>,
) -> Result<IdentityReport> {
    let ralpha = ralpha_norm(sym, n, delta, opts)?;
    let rhs = rhs_from_norm(f, n, ralpha.clone());
    let lhs = lhs_from_norm(sym, f, n, delta, opts, ralpha.clone())?;
    let mc = match mc {
        Some((count, seed)) if delta == 0.0 => Some(mc_lhs_delta0(sym, f, count, seed, opts.l, opts.levels)?),
        _ => None,
    };
    let mc_rel_diff = mc.as_ref().map(|m| (m.value / rhs.rhs - 1.0).abs());
    let statistical_error = mc.as_ref().map(|m| m.std_error / rhs.rhs).unwrap_or(0.0);
    let trunc = if ralpha.pointwise_norm.is_some() && delta == 0.0 { 0.0 } else { ralpha.truncation_rel_diff };
    Ok(IdentityReport {
        symbol: sym.name(),
        n,
        k: sym.k,
        alpha: sym.alpha,
        delta,
        lhs: lhs.full(),
        lhs_reduced: lhs.reduced(),
        rhs: rhs.rhs,
        ratio: lhs.full() / rhs.rhs,
        mc,
        mc_rel_diff,
        deterministic_error: lhs.rel_diff + trunc + ralpha.last_rel_diff,
        statistical_error,
        options: opts.clone(),
        lhs_report: lhs,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    /// (ε, truncated integral)
    pub rows: Vec<(f64, f64)>,
    /// power fit for α > k/2, log fit for α = k/2, none below
    pub fit: Option<GrowthFit>,
    /// |I(ε_min) − I(ε_next)|/I(ε_min): small when the integral converges
    pub last_rel_change: f64,
}

/// ∫_{dist(ξ, Σ_Q) > ε} |ξ|^{2α}|f̂|²/|p_α(ξ, Q)|² dξ for each ε.
pub fn divergence_witness(sym: &HomogeneousSymbol, f: &FrequencyProfile, q: &Rotation, eps: &[f64]) -> Result<WitnessReport> {
    require_subcritical(sym)?;
    let n = f.n;
    let k = sym.k;
    if !matches!((n, k), (2, 1) | (3, 1) | (3, 2)) {
        return Err(Error::Domain(format!("divergence witness implemented for (n, k) ∈ {{(2,1), (3,1), (3,2)}}, got ({n}, {k})")));
    }
    let b = q.apply_transpose(f.angular_coeffs());
    let radial = f.radial_rule(RADIAL_NODES);
    let rows: Vec<(f64, f64)> = eps
        .par_iter()
        .map(|&e| -> Result<(f64, f64)> {
            let mut total = 0.0;
            for &(r, w) in &radial {
                let c = e / r;
                total += w * r.powi(n as i32 - 1) * f.radial(r).powi(2) * truncated_angular(sym, n, &b, c)?;
            }
            Ok((e, total))
        })
        .collect::<Result<_>>()?;
    let crit = 2.0 * sym.alpha - k as f64;
    let fit = if crit > 1e-12 {
        Some(fit_growth(&rows, GrowthModel::Power)?)
    } else if crit.abs() <= 1e-12 {
        Some(fit_growth(&rows, GrowthModel::Log)?)
    } else {
        None
    };
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let last_rel_change = if sorted.len() >= 2 { (sorted[0].1 - sorted[1].1).abs() / sorted[0].1 } else { f64::NAN };
    Ok(WitnessReport { n, k, alpha: sym.alpha, rows, fit, last_rel_change })
}

/// ∫_{|θ′_{1..k}| > c} |1 + b·θ′|² |q_α(θ′₁, …, θ′_k)|^{−2} dS(θ′).
fn truncated_angular(sym: &HomogeneousSymbol, n: usize, b: &[f64], c: f64) -> Result<f64> {
    if c >= 1.0 {
        return Ok(0.0);
    }
    let tol = Tol::rel(1e-10);
    let weight = |t: &[f64]| {
        let a = 1.0 + b.iter().zip(t).map(|(x, y)| x * y).sum::<f64>();
        a * a * sym.eval(&t[..sym.k]).norm_sqr().recip()
    };
    // breaks where the distance to the singular set equals c·4^j
    let dists: Vec<f64> = std::iter::successors(Some(c), |d| Some(d * 4.0)).take_while(|d| *d < 1.0).collect();
    let lam = 256;
    let ring = |x: f64, s: f64, axis_first: bool| -> f64 {
        (0..lam)
            .map(|j| {
                let l = 2.0 * PI * j as f64 / lam as f64;
                let t = if axis_first { [x, s * l.cos(), s * l.sin()] } else { [s * l.cos(), s * l.sin(), x] };
                weight(&t)
            })
            .sum::<f64>()
            * (2.0 * PI / lam as f64)
    };
    let v = match (n, sym.k) {
        (2, _) => {
            // θ′ = (cos φ, sin φ); |cos φ| > c on [−φc, φc] and its shift by π
            let pc = c.acos();
            let mut br: Vec<f64> = dists.iter().map(|d| d.acos()).collect();
            br.push(0.0);
            br.sort_by(f64::total_cmp);
            let mut pts: Vec<f64> = br.iter().rev().map(|p| -p).collect();
            pts.extend(br.iter().skip(1).copied());
            pts.insert(0, -pc);
            pts.push(pc);
            pts.dedup();
            let mut g = |p: f64| C64::new(weight(&[p.cos(), p.sin()]) + weight(&[-p.cos(), -p.sin()]), 0.0);
            adaptive_breaks(&mut g, &pts, tol)?.value.re
        }
        (3, 1) => {
            // θ′ = (u, s cos λ, s sin λ), dS = du dλ, |u| > c
            let mut pts = dists.clone();
            pts.push(1.0);
            let mut g = |u: f64| {
                let s = (1.0 - u * u).max(0.0).sqrt();
                C64::new(ring(u, s, true) + ring(-u, s, true), 0.0)
            };
            adaptive_breaks(&mut g, &pts, tol)?.value.re
        }
        _ => {
            // θ′ = (sin φ cos λ, sin φ sin λ, cos φ), dS = sin φ dφ dλ, sin φ > c
            let mut pts: Vec<f64> = dists.iter().map(|d| d.asin()).collect();
            pts.push(0.5 * PI);
            let mut g = |p: f64| C64::new((ring(p.cos(), p.sin(), false) + ring(-p.cos(), p.sin(), false)) * p.sin(), 0.0);
            adaptive_breaks(&mut g, &pts, tol)?.value.re
        }
    };
    Ok(v)
}
