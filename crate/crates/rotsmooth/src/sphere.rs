//! Quadrature, harmonic expansions and Sobolev norms on S¹ and S², the
//! restriction r_α of 1/q_α to the sphere, and the 2n-chart atlas.
//!
//! Rules that must cope with the singular set {θ₁ = … = θ_k = 0} are built
//! from offsets to exactly represented anchor points, so nodes close to the
//! singular set keep full relative precision in the coordinates that vanish.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homog_dist::{mollified_qinv, pair_qinv, SymbolModes, TestFunction};
use crate::quad::{adaptive_breaks, gauss_legendre, kronrod_nodes, Tol, C64};
use crate::special::{gamma, legendre_column};
use crate::symbols::HomogeneousSymbol;

/// Geometric refinement levels toward the singular set in `SphereQuadrature::graded`.
pub const DEFAULT_LEVELS: usize = 96;

/// Surface measure of S^{n−1}.
pub fn sphere_area(n: usize) -> f64 {
    match n {
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => 2.0 * PI.powf(n as f64 / 2.0) / gamma(n as f64 / 2.0),
    }
}

/// A function on S^{n−1}.
pub trait SphereFunction: Sync {
    fn eval(&self, theta: &[f64]) -> C64;

    /// Azimuthal Fourier modes `(m, F_m)` on a ring of a polar layout, when known in
    /// closed form. For `axis = 2` the ring is θ = (s cos λ, s sin λ, x); for
    /// `axis = 0` it is θ = (x, s cos λ, s sin λ). The function equals Σ F_m e^{imλ}.
    fn ring_modes(&self, _axis: usize, _x: f64, _s: f64) -> Option<Vec<(i64, C64)>> {
        None
    }
}

impl<F: Fn(&[f64]) -> C64 + Sync> SphereFunction for F {
    fn eval(&self, theta: &[f64]) -> C64 {
        self(theta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ring {
    pub x: f64,
    pub s: f64,
    /// weight in the measure dx = sin φ dφ
    pub w: f64,
}

#[derive(Clone, Debug)]
enum Layout {
    Circle { angles: Vec<f64>, points: Vec<[f64; 2]>, weights: Vec<f64> },
    Polar { axis: usize, rings: Vec<Ring>, azimuth: usize },
}

/// Quadrature on S¹ (n = 2) or S² (n = 3).
#[derive(Clone, Debug)]
pub struct SphereQuadrature {
    pub n: usize,
    /// Largest harmonic degree L for which degree-2L products are resolved.
    pub resolved_degree: usize,
    layout: Layout,
}

fn is_finite(z: C64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Kronrod panels of width ≤ `width` covering `[a, b]`.
fn panels(a: f64, b: f64, width: f64, out: &mut Vec<(f64, f64)>) {
    let m = ((b - a) / width).ceil().max(1.0) as usize;
    for i in 0..m {
        let lo = a + (b - a) * i as f64 / m as f64;
        let hi = a + (b - a) * (i + 1) as f64 / m as f64;
        out.extend_from_slice(&kronrod_nodes(lo, hi));
    }
}

/// Offsets u ∈ (0, len] graded toward 0: dyadic pieces, each split into panels of width ≤ π/L.
fn offset_rule(len: f64, l: usize, levels: usize) -> Vec<(f64, f64)> {
    let width = PI / l.max(1) as f64;
    let mut out = Vec::new();
    let mut hi = len;
    for _ in 0..levels {
        let lo = 0.5 * hi;
        panels(lo, hi, width, &mut out);
        hi = lo;
    }
    out.extend_from_slice(&kronrod_nodes(0.0, hi));
    out
}

impl SphereQuadrature {
    /// Uniform trapezoid rule with `m` points on S¹.
    pub fn circle(m: usize) -> Self {
        let angles: Vec<f64> = (0..m).map(|j| 2.0 * PI * j as f64 / m as f64).collect();
        let points = angles.iter().map(|t| [t.cos(), t.sin()]).collect();
        let weights = vec![2.0 * PI / m as f64; m];
        SphereQuadrature { n: 2, resolved_degree: (m.max(1) - 1) / 2, layout: Layout::Circle { angles, points, weights } }
    }

    /// Gauss–Legendre in cos φ times a uniform azimuthal rule on S².
    pub fn gauss_product(nphi: usize, naz: usize) -> Self {
        let rings = gauss_legendre(nphi, -1.0, 1.0).into_iter().map(|(x, w)| Ring { x, s: (1.0 - x * x).max(0.0).sqrt(), w }).collect();
        let resolved_degree = (nphi.max(1) - 1).min((naz.max(1) - 1) / 2);
        SphereQuadrature { n: 3, resolved_degree, layout: Layout::Polar { axis: 2, rings, azimuth: naz } }
    }

    /// Rule on S^{n−1} graded toward {θ₁ = … = θ_k = 0}, resolving harmonics up to degree `l`.
    ///
    /// n = 2, k = 1: anchors ±e₂. n = 3, k = 2: poles ±e₃. n = 3, k = 1: the great
    /// circle θ₁ = 0, using a polar layout about e₁. `k = 0` gives a smooth rule.
    pub fn graded(n: usize, k: usize, l: usize, levels: usize) -> Result<Self> {
        let l = l.max(1);
        match (n, k) {
            (2, 0) => Ok(Self::circle(4 * l + 4)),
            (3, 0) => Ok(Self::gauss_product(l + 8, 2 * l + 2)),
            (2, 1) => {
                let offs = offset_rule(0.5 * PI, l, levels);
                let mut angles = Vec::with_capacity(4 * offs.len());
                let mut points = Vec::with_capacity(4 * offs.len());
                let mut weights = Vec::with_capacity(4 * offs.len());
                for a in [1.0f64, -1.0] {
                    for side in [1.0f64, -1.0] {
                        for &(u, w) in &offs {
                            let p = [side * u.sin(), a * u.cos()];
                            angles.push(p[1].atan2(p[0]));
                            points.push(p);
                            weights.push(w);
                        }
                    }
                }
                Ok(SphereQuadrature { n, resolved_degree: l, layout: Layout::Circle { angles, points, weights } })
            }
            (3, 2) | (3, 1) => {
                let offs = offset_rule(0.5 * PI, l, levels);
                let mut rings = Vec::with_capacity(2 * offs.len());
                for sign in [1.0f64, -1.0] {
                    for &(u, w) in &offs {
                        let (su, cu) = u.sin_cos();
                        rings.push(if k == 2 { Ring { x: sign * cu, s: su, w: w * su } } else { Ring { x: sign * su, s: cu, w: w * cu } });
                    }
                }
                let axis = if k == 2 { 2 } else { 0 };
                Ok(SphereQuadrature { n, resolved_degree: l, layout: Layout::Polar { axis, rings, azimuth: 2 * l + 2 } })
            }
            _ => Err(Error::Domain(format!("sphere rules implemented for n ∈ {{2,3}}, k < n; got n = {n}, k = {k}"))),
        }
    }

    pub fn len(&self) -> usize {
        match &self.layout {
            Layout::Circle { points, .. } => points.len(),
            Layout::Polar { rings, azimuth, .. } => rings.len() * azimuth,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Visits every node with its weight.
    pub fn for_each(&self, mut f: impl FnMut(&[f64], f64)) {
        match &self.layout {
            Layout::Circle { points, weights, .. } => {
                for (p, &w) in points.iter().zip(weights) {
                    f(p, w);
                }
            }
            Layout::Polar { axis, rings, azimuth } => {
                let trig = azimuth_trig(*azimuth);
                let wa = 2.0 * PI / *azimuth as f64;
                for r in rings {
                    for &(c, s) in &trig {
                        f(&polar_point(*axis, r, c, s), r.w * wa);
                    }
                }
            }
        }
    }

    /// Nodes and weights as explicit lists.
    pub fn nodes(&self) -> Vec<(Vec<f64>, f64)> {
        let mut out = Vec::with_capacity(self.len());
        self.for_each(|p, w| out.push((p.to_vec(), w)));
        out
    }

    pub fn total_weight(&self) -> f64 {
        let mut s = 0.0;
        self.for_each(|_, w| s += w);
        s
    }
}

fn azimuth_trig(m: usize) -> Vec<(f64, f64)> {
    (0..m)
        .map(|j| {
            let (s, c) = (2.0 * PI * j as f64 / m as f64).sin_cos();
            (c, s)
        })
        .collect()
}

#[inline]
fn polar_point(axis: usize, r: &Ring, c: f64, s: f64) -> [f64; 3] {
    if axis == 2 {
        [r.s * c, r.s * s, r.x]
    } else {
        [r.x, r.s * c, r.s * s]
    }
}

/// Azimuthal modes of `f` on one ring, |m| ≤ `mmax`.
fn ring_modes_of(
    f: &dyn SphereFunction,
    axis: usize,
    r: &Ring,
    trig: &[(f64, f64)],
    fft: &Arc<dyn Fft<f64>>,
    mmax: usize,
) -> Result<Vec<(i64, C64)>> {
    if let Some(modes) = f.ring_modes(axis, r.x, r.s) {
        for (_, z) in &modes {
            if !is_finite(*z) {
                return Err(Error::NonFinite { node: polar_point(axis, r, 1.0, 0.0).to_vec() });
            }
        }
        return Ok(modes.into_iter().filter(|(m, _)| m.unsigned_abs() as usize <= mmax).collect());
    }
    let mut buf = Vec::with_capacity(trig.len());
    for &(c, s) in trig {
        let p = polar_point(axis, r, c, s);
        let v = f.eval(&p);
        if !is_finite(v) {
            return Err(Error::NonFinite { node: p.to_vec() });
        }
        buf.push(v);
    }
    fft.process(&mut buf);
    let m = trig.len();
    let top = mmax.min((m - 1) / 2);
    let mut out = Vec::with_capacity(2 * top + 1);
    for j in -(top as i64)..=(top as i64) {
        let idx = j.rem_euclid(m as i64) as usize;
        out.push((j, buf[idx] / m as f64));
    }
    Ok(out)
}

/// Σ w f(θ) over the rule.
pub fn quad_integrate(q: &SphereQuadrature, f: &dyn SphereFunction) -> Result<C64> {
    match &q.layout {
        Layout::Circle { points, weights, .. } => {
            let vals: Vec<Result<C64>> = points
                .par_iter()
                .zip(weights.par_iter())
                .map(|(p, &w)| {
                    let v = f.eval(p);
                    if is_finite(v) {
                        Ok(v * w)
                    } else {
                        Err(Error::NonFinite { node: p.to_vec() })
                    }
                })
                .collect();
            let mut acc = C64::new(0.0, 0.0);
            for v in vals {
                acc += v?;
            }
            Ok(acc)
        }
        Layout::Polar { axis, rings, azimuth } => {
            let trig = azimuth_trig(*azimuth);
            let fft = FftPlanner::new().plan_fft_forward(*azimuth);
            let vals: Vec<Result<C64>> = rings
                .par_iter()
                .map(|r| {
                    let modes = ring_modes_of(f, *axis, r, &trig, &fft, 0)?;
                    let f0 = modes.iter().find(|(m, _)| *m == 0).map_or(C64::new(0.0, 0.0), |p| p.1);
                    Ok(f0 * (2.0 * PI * r.w))
                })
                .collect();
            let mut acc = C64::new(0.0, 0.0);
            for v in vals {
                acc += v?;
            }
            Ok(acc)
        }
    }
}

/// ‖f‖_{L²} by direct quadrature of |f|².
pub fn l2_norm(q: &SphereQuadrature, f: &dyn SphereFunction) -> Result<f64> {
    match &q.layout {
        Layout::Circle { .. } => {
            let g = |t: &[f64]| C64::new(f.eval(t).norm_sqr(), 0.0);
            Ok(quad_integrate(q, &g)?.re.sqrt())
        }
        Layout::Polar { axis, rings, azimuth } => {
            let trig = azimuth_trig(*azimuth);
            let fft = FftPlanner::new().plan_fft_forward(*azimuth);
            let vals: Vec<Result<f64>> = rings
                .par_iter()
                .map(|r| {
                    let modes = ring_modes_of(f, *axis, r, &trig, &fft, usize::MAX)?;
                    Ok(2.0 * PI * r.w * modes.iter().map(|(_, z)| z.norm_sqr()).sum::<f64>())
                })
                .collect();
            let mut acc = 0.0;
            for v in vals {
                acc += v?;
            }
            Ok(acc.sqrt())
        }
    }
}

/// L² norm of a function singular on {θ₁ = … = θ_k = 0}, with divergence detection:
/// the graded rule is evaluated at `levels/2` and `levels`, and a relative change
/// above 10⁻³ is reported as divergence.
pub fn l2_norm_singular(f: &dyn SphereFunction, n: usize, k: usize, l: usize, levels: usize) -> Result<f64> {
    let coarse = l2_norm(&SphereQuadrature::graded(n, k, l, levels / 2)?, f)?;
    let fine = l2_norm(&SphereQuadrature::graded(n, k, l, levels)?, f)?;
    if !(fine.is_finite() && (fine - coarse).abs() <= 1e-3 * fine) {
        return Err(Error::Divergent {
            reason: format!(
                "L2 norm grows under refinement toward the singular set: {coarse:.6e} at {} levels, {fine:.6e} at {levels}",
                levels / 2
            ),
            table: vec![((levels / 2) as f64, coarse), (levels as f64, fine)],
        });
    }
    Ok(fine)
}

/// Truncated spherical-harmonic expansion.
///
/// n = 2: `coeffs[0] = [c₀]`, `coeffs[l] = [c_{−l}, c_l]` for e^{ilθ}/√(2π).
/// n = 3: `coeffs[l][l + m]` for the real harmonics Y_{l,m}, m = −l..l, with
/// Y_{l,0} = P̄_l⁰/√(2π), Y_{l,m} = P̄_l^m cos(mλ)/√π and Y_{l,−m} = P̄_l^m sin(mλ)/√π.
/// The azimuth λ and polar angle are those of the rule's layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicExpansion {
    pub n: usize,
    pub lmax: usize,
    pub coeffs: Vec<Vec<C64>>,
}

pub fn expand_harmonics(f: &dyn SphereFunction, lmax: usize, q: &SphereQuadrature) -> Result<HarmonicExpansion> {
    if lmax > q.resolved_degree {
        return Err(Error::Resolution { requested: lmax, available: q.resolved_degree });
    }
    match &q.layout {
        Layout::Circle { angles, points, weights } => {
            let chunk = 1024;
            let partial: Vec<Result<Vec<C64>>> = (0..points.len().div_ceil(chunk))
                .into_par_iter()
                .map(|c| {
                    let mut acc = vec![C64::new(0.0, 0.0); 2 * lmax + 1];
                    for i in c * chunk..((c + 1) * chunk).min(points.len()) {
                        let v = f.eval(&points[i]);
                        if !is_finite(v) {
                            return Err(Error::NonFinite { node: points[i].to_vec() });
                        }
                        let v = v * weights[i];
                        let step = C64::from_polar(1.0, -angles[i]);
                        let mut e = C64::new(1.0, 0.0);
                        acc[lmax] += v;
                        for l in 1..=lmax {
                            e *= step;
                            acc[lmax + l] += v * e;
                            acc[lmax - l] += v * e.conj();
                        }
                    }
                    Ok(acc)
                })
                .collect();
            let mut acc = vec![C64::new(0.0, 0.0); 2 * lmax + 1];
            for p in partial {
                for (a, b) in acc.iter_mut().zip(p?) {
                    *a += b;
                }
            }
            let norm = (2.0 * PI).sqrt().recip();
            let coeffs = (0..=lmax)
                .map(|l| if l == 0 { vec![acc[lmax] * norm] } else { vec![acc[lmax - l] * norm, acc[lmax + l] * norm] })
                .collect();
            Ok(HarmonicExpansion { n: 2, lmax, coeffs })
        }
        Layout::Polar { axis, rings, azimuth } => {
            let trig = azimuth_trig(*azimuth);
            let fft = FftPlanner::new().plan_fft_forward(*azimuth);
            let per_ring: Vec<Result<Vec<(i64, C64)>>> = rings.par_iter().map(|r| ring_modes_of(f, *axis, r, &trig, &fft, lmax)).collect();
            let mut cols: BTreeMap<i64, Vec<C64>> = BTreeMap::new();
            for (i, modes) in per_ring.into_iter().enumerate() {
                for (m, z) in modes? {
                    if z != C64::new(0.0, 0.0) {
                        cols.entry(m).or_insert_with(|| vec![C64::new(0.0, 0.0); rings.len()])[i] = z;
                    }
                }
            }
            let zero_col = vec![C64::new(0.0, 0.0); rings.len()];
            let ms: Vec<usize> = (0..=lmax).filter(|&m| cols.contains_key(&(m as i64)) || cols.contains_key(&-(m as i64))).collect();
            let blocks: Vec<(usize, Vec<C64>, Vec<C64>)> = ms
                .par_iter()
                .map(|&m| {
                    let fp = cols.get(&(m as i64)).unwrap_or(&zero_col);
                    let fm = cols.get(&-(m as i64)).unwrap_or(&zero_col);
                    let mut cos_part = vec![C64::new(0.0, 0.0); lmax + 1 - m];
                    let mut sin_part = vec![C64::new(0.0, 0.0); lmax + 1 - m];
                    let mut col = Vec::with_capacity(lmax + 1);
                    for (i, r) in rings.iter().enumerate() {
                        let (a, b) = if m == 0 {
                            (fp[i] * ((2.0 * PI).sqrt() * r.w), C64::new(0.0, 0.0))
                        } else {
                            let sp = PI.sqrt() * r.w;
                            ((fp[i] + fm[i]) * sp, (fp[i] - fm[i]) * C64::new(0.0, sp))
                        };
                        if a == C64::new(0.0, 0.0) && b == C64::new(0.0, 0.0) {
                            continue;
                        }
                        legendre_column(lmax, m, r.x, r.s, &mut col);
                        for (j, p) in col.iter().enumerate() {
                            cos_part[j] += a * *p;
                            sin_part[j] += b * *p;
                        }
                    }
                    (m, cos_part, sin_part)
                })
                .collect();
            let mut coeffs: Vec<Vec<C64>> = (0..=lmax).map(|l| vec![C64::new(0.0, 0.0); 2 * l + 1]).collect();
            for (m, cp, sp) in blocks {
                for (j, (c, s)) in cp.into_iter().zip(sp).enumerate() {
                    let l = m + j;
                    coeffs[l][l + m] = c;
                    if m > 0 {
                        coeffs[l][l - m] = s;
                    }
                }
            }
            Ok(HarmonicExpansion { n: 3, lmax, coeffs })
        }
    }
}

/// λ_l = l(l + n − 2).
pub fn eigenvalue(n: usize, l: usize) -> f64 {
    (l * (l + n - 2)) as f64
}

/// (Σ_{l,m} (1 + λ_l)^s |c_{l,m}|²)^{1/2}.
pub fn sobolev_norm(exp: &HarmonicExpansion, s: f64) -> f64 {
    sobolev_norm_upto(exp, s, exp.lmax)
}

/// `sobolev_norm` restricted to degrees l ≤ `lmax`.
pub fn sobolev_norm_upto(exp: &HarmonicExpansion, s: f64, lmax: usize) -> f64 {
    exp.coeffs
        .iter()
        .enumerate()
        .take(lmax.min(exp.lmax) + 1)
        .map(|(l, c)| (1.0 + eigenvalue(exp.n, l)).powf(s) * c.iter().map(|z| z.norm_sqr()).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}

fn check_geometry(sym: &HomogeneousSymbol, n: usize) -> Result<()> {
    if !(n == 2 || n == 3) || sym.k >= n {
        return Err(Error::Domain(format!("need k < n with n ∈ {{2,3}}; got k = {}, n = {n}", sym.k)));
    }
    Ok(())
}

/// θ ↦ 1/q_α(θ₁, …, θ_k) on S^{n−1} for α < k.
#[derive(Clone, Debug)]
pub struct RestrictedSymbol {
    pub sym: HomogeneousSymbol,
    pub n: usize,
    modes: Option<SymbolModes>,
}

impl RestrictedSymbol {
    pub fn is_singular(&self, theta: &[f64]) -> bool {
        theta[..self.sym.k].iter().all(|&x| x == 0.0)
    }

    pub fn try_eval(&self, theta: &[f64]) -> Result<C64> {
        if self.is_singular(theta) {
            return Err(Error::Singular(theta.to_vec()));
        }
        Ok(self.eval(theta))
    }
}

impl SphereFunction for RestrictedSymbol {
    fn eval(&self, theta: &[f64]) -> C64 {
        self.sym.eval(&theta[..self.sym.k]).inv()
    }

    fn ring_modes(&self, axis: usize, x: f64, s: f64) -> Option<Vec<(i64, C64)>> {
        match (self.sym.k, axis) {
            (2, 2) => {
                let sa = s.powf(-self.sym.alpha);
                Some(self.modes.as_ref()?.modes.iter().map(|&(m, a)| (m, a * sa)).collect())
            }
            (1, 0) => Some(vec![(0, self.sym.eval(&[x]).inv())]),
            _ => None,
        }
    }
}

/// θ ↦ ρ^α q_{α,t}⁻¹(ρ θ₁, …, ρ θ_k) on S^{n−1}; ρ = 1 is the mollified restriction r_α^t.
#[derive(Clone, Debug)]
pub struct MollifiedRestriction {
    pub sym: HomogeneousSymbol,
    pub n: usize,
    pub t: f64,
    pub radius: f64,
    modes: Option<SymbolModes>,
}

impl MollifiedRestriction {
    pub fn at_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    fn value(&self, eta: &[f64]) -> C64 {
        let scaled: Vec<f64> = eta.iter().map(|x| x * self.radius).collect();
        let v = match &self.modes {
            Some(m) => m.mollified(self.t, &scaled),
            None => mollified_qinv(&self.sym, self.t, &scaled).unwrap_or(C64::new(f64::NAN, f64::NAN)),
        };
        v * self.radius.powf(self.sym.alpha)
    }
}

impl SphereFunction for MollifiedRestriction {
    fn eval(&self, theta: &[f64]) -> C64 {
        self.value(&theta[..self.sym.k])
    }

    fn ring_modes(&self, axis: usize, x: f64, s: f64) -> Option<Vec<(i64, C64)>> {
        match (self.sym.k, axis) {
            (2, 2) => {
                let ra = self.radius.powf(self.sym.alpha);
                Some(self.modes.as_ref()?.ring(self.t, self.radius * s).into_iter().map(|(m, z)| (m, z * ra)).collect())
            }
            (1, 0) => Some(vec![(0, self.value(&[x]))]),
            _ => None,
        }
    }
}

/// The pointwise restriction r_α (α < k). For α ≥ k use `restrict_mollified`.
pub fn restrict_symbol(sym: &HomogeneousSymbol, n: usize) -> Result<RestrictedSymbol> {
    check_geometry(sym, n)?;
    if sym.alpha >= sym.k as f64 {
        return Err(Error::Domain(format!(
            "1/q_alpha is not locally integrable for alpha = {} ≥ k = {}; use restrict_mollified and the chart formula",
            sym.alpha, sym.k
        )));
    }
    Ok(RestrictedSymbol { sym: sym.clone(), n, modes: SymbolModes::new(sym).ok() })
}

/// r_α^t(θ) = q_{α,t}⁻¹(θ₁, …, θ_k).
pub fn restrict_mollified(sym: &HomogeneousSymbol, t: f64, n: usize) -> Result<MollifiedRestriction> {
    check_geometry(sym, n)?;
    if t <= 0.0 {
        return Err(Error::Domain("mollification scale must be positive".into()));
    }
    let modes = if sym.alpha < sym.k as f64 { SymbolModes::new(sym).ok() } else { None };
    Ok(MollifiedRestriction { sym: sym.clone(), n, t, radius: 1.0, modes })
}

/// The sphere distribution r_α: pointwise for α < k, otherwise given by the chart formula.
#[derive(Clone, Debug)]
pub enum SphereDistribution {
    Pointwise(RestrictedSymbol),
    ChartFamily { sym: HomogeneousSymbol, n: usize },
}

impl SphereDistribution {
    pub fn new(sym: &HomogeneousSymbol, n: usize) -> Result<Self> {
        check_geometry(sym, n)?;
        Ok(if sym.alpha < sym.k as f64 {
            SphereDistribution::Pointwise(restrict_symbol(sym, n)?)
        } else {
            SphereDistribution::ChartFamily { sym: sym.clone(), n }
        })
    }

    pub fn approximant(&self, t: f64) -> Result<MollifiedRestriction> {
        match self {
            SphereDistribution::Pointwise(r) => restrict_mollified(&r.sym, t, r.n),
            SphereDistribution::ChartFamily { sym, n } => restrict_mollified(sym, t, *n),
        }
    }

    /// ⟨r_{α,m}, φ⟩ in chart m.
    pub fn chart_pairing(&self, m: usize, phi: &TestFunction) -> Result<C64> {
        match self {
            SphereDistribution::Pointwise(r) => chart_formula_pairing(&r.sym, r.n, m, phi),
            SphereDistribution::ChartFamily { sym, n } => chart_formula_pairing(sym, *n, m, phi),
        }
    }
}

/// Parameters of `ralpha_norm`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RalphaOptions {
    pub l: usize,
    pub t_sequence: Vec<f64>,
    pub levels: usize,
}

impl RalphaOptions {
    /// L = 64 on S¹, 48 on S², t ∈ {2⁰, …, 2⁸}.
    pub fn defaults(n: usize) -> Self {
        RalphaOptions { l: if n == 2 { 64 } else { 48 }, t_sequence: (0..=8).map(|j| 2f64.powi(j)).collect(), levels: DEFAULT_LEVELS }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub t: f64,
    pub l: usize,
    /// H^{−δ} norm used for the limit (direct L² quadrature when δ = 0)
    pub norm: f64,
    /// expansion truncated at L
    pub norm_l: f64,
    /// expansion truncated at L/2
    pub norm_half: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RalphaNorm {
    pub n: usize,
    pub delta: f64,
    /// limit in t, extrapolated from the last three rows
    pub norm: f64,
    pub table: Vec<NormRow>,
    /// |N_last − N_prev| / N_last
    pub last_rel_diff: f64,
    /// last two rows differ by less than 1 %
    pub cauchy: bool,
    /// |N_L − N_{L/2}| / N_L at the last t
    pub truncation_rel_diff: f64,
    pub truncation_stable: bool,
    /// norm of the pointwise restriction (α < k), same truncation rules
    pub pointwise_norm: Option<f64>,
}

/// Aitken's Δ² limit of the last three terms; falls back to the last term when
/// the differences are not geometrically shrinking.
pub fn aitken_limit(seq: &[f64]) -> f64 {
    let n = seq.len();
    if n < 3 {
        return seq.last().copied().unwrap_or(f64::NAN);
    }
    let (a, b, c) = (seq[n - 3], seq[n - 2], seq[n - 1]);
    let (d1, d2) = (b - a, c - b);
    let r = d2 / d1;
    if d1 == 0.0 || d2 == 0.0 || !(r > 0.0 && r < 0.95) {
        return c;
    }
    c + d2 * r / (1.0 - r)
}

/// ‖r_α‖_{H^{−δ}(S^{n−1})} as the limit of the mollified restrictions r_α^t.
pub fn ralpha_norm(sym: &HomogeneousSymbol, n: usize, delta: f64, opts: &RalphaOptions) -> Result<RalphaNorm> {
    check_geometry(sym, n)?;
    if opts.t_sequence.is_empty() {
        return Err(Error::Config("t_sequence is empty".into()));
    }
    let k = sym.k;
    let rule = SphereQuadrature::graded(n, k, opts.l, opts.levels)?;
    let half = opts.l / 2;
    let mut table = Vec::with_capacity(opts.t_sequence.len());
    for &t in &opts.t_sequence {
        let f = restrict_mollified(sym, t, n)?;
        let exp = expand_harmonics(&f, opts.l, &rule)?;
        let norm_l = sobolev_norm(&exp, -delta);
        let norm_half = sobolev_norm_upto(&exp, -delta, half);
        let norm = if delta == 0.0 { l2_norm(&rule, &f)? } else { norm_l };
        table.push(NormRow { t, l: opts.l, norm, norm_l, norm_half });
    }
    let seq: Vec<f64> = table.iter().map(|r| r.norm).collect();
    let as_pairs = || table.iter().map(|r| (r.t, r.norm)).collect::<Vec<_>>();
    let pointwise_norm = if sym.alpha < k as f64 {
        let r = restrict_symbol(sym, n)?;
        if delta == 0.0 {
            match l2_norm_singular(&r, n, k, opts.l, opts.levels) {
                Ok(v) => Some(v),
                Err(Error::Divergent { reason, .. }) => return Err(Error::Divergent { reason, table: as_pairs() }),
                Err(e) => return Err(e),
            }
        } else {
            Some(sobolev_norm(&expand_harmonics(&r, opts.l, &rule)?, -delta))
        }
    } else {
        None
    };
    let m = seq.len();
    if m >= 3 {
        let (d1, d2) = ((seq[m - 2] - seq[m - 3]).abs(), (seq[m - 1] - seq[m - 2]).abs());
        if d2 >= 0.9 * d1 && d2 > 1e-3 * seq[m - 1] {
            return Err(Error::Divergent {
                reason: format!("successive differences do not shrink ({d1:.3e}, {d2:.3e})"),
                table: as_pairs(),
            });
        }
    }
    let last = table.last().unwrap();
    let last_rel_diff = if m >= 2 { (seq[m - 1] - seq[m - 2]).abs() / seq[m - 1] } else { f64::NAN };
    let truncation_rel_diff = (last.norm_l - last.norm_half).abs() / last.norm_l;
    Ok(RalphaNorm {
        n,
        delta,
        norm: aitken_limit(&seq),
        last_rel_diff,
        cauchy: last_rel_diff < 0.01,
        truncation_rel_diff,
        truncation_stable: truncation_rel_diff < 0.01,
        table,
        pointwise_norm,
    })
}

/// The 2n-chart atlas of S^{n−1} built from the patch over
/// V = {y ∈ ℝ^{n−1} : |y|² < (n − 1/2)/n}, reflections R_{jn} (swap of e_j, e_n)
/// and P_j (sign change of e_j). Charts are numbered m = 1..=2n; m = 2j − 1 and
/// m = 2j share the coordinate j.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartAtlas {
    pub n: usize,
}

impl ChartAtlas {
    pub fn new(n: usize) -> Self {
        ChartAtlas { n }
    }

    pub fn len(&self) -> usize {
        2 * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// (n − 1/2)/n
    pub fn v_radius_sq(&self) -> f64 {
        (self.n as f64 - 0.5) / self.n as f64
    }

    pub fn in_v(&self, y: &[f64]) -> bool {
        y.iter().map(|v| v * v).sum::<f64>() < self.v_radius_sq()
    }

    fn check(&self, m: usize) -> Result<(usize, bool)> {
        if m == 0 || m > 2 * self.n {
            return Err(Error::Domain(format!("chart index {m} outside 1..={}", 2 * self.n)));
        }
        Ok(((m + 1) / 2, m % 2 == 0))
    }

    /// φ_m⁻¹(ζ) for ζ ∈ V.
    pub fn inverse(&self, m: usize, zeta: &[f64]) -> Result<Vec<f64>> {
        let (j, even) = self.check(m)?;
        let n = self.n;
        let mut w: Vec<f64> = zeta.to_vec();
        w.push((1.0 - zeta.iter().map(|v| v * v).sum::<f64>()).max(0.0).sqrt());
        w.swap(j - 1, n - 1);
        if even {
            w[j - 1] = -w[j - 1];
        }
        Ok(w)
    }

    /// φ_m(θ), or `None` when θ ∉ U_m.
    pub fn forward(&self, m: usize, theta: &[f64]) -> Result<Option<Vec<f64>>> {
        let (j, even) = self.check(m)?;
        let n = self.n;
        let mut w = theta.to_vec();
        if even {
            w[j - 1] = -w[j - 1];
        }
        w.swap(j - 1, n - 1);
        let zeta = w[..n - 1].to_vec();
        Ok((w[n - 1] > 0.0 && self.in_v(&zeta)).then_some(zeta))
    }
}

/// χ_m = b_m / Σ b, with b_m(θ) = exp(−1/(1 − |φ_m(θ)|²/ρ²)) on U_m and
/// ρ² = (n − 3/4)/n, so supp b_m ⊂ U_m and Σ b > 0 everywhere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionOfUnity {
    pub atlas: ChartAtlas,
    pub rho_sq: f64,
}

impl PartitionOfUnity {
    pub fn new(atlas: ChartAtlas) -> Self {
        let n = atlas.n as f64;
        PartitionOfUnity { atlas, rho_sq: (n - 0.75) / n }
    }

    fn bump(&self, m: usize, theta: &[f64]) -> f64 {
        match self.atlas.forward(m, theta) {
            Ok(Some(z)) => {
                let r = z.iter().map(|v| v * v).sum::<f64>() / self.rho_sq;
                if r < 1.0 {
                    (-1.0 / (1.0 - r)).exp()
                } else {
                    0.0
                }
            }
            _ => 0.0,
        }
    }

    /// (χ_1(θ), …, χ_{2n}(θ)).
    pub fn weights(&self, theta: &[f64]) -> Vec<f64> {
        let b: Vec<f64> = (1..=self.atlas.len()).map(|m| self.bump(m, theta)).collect();
        let s: f64 = b.iter().sum();
        b.into_iter().map(|v| v / s).collect()
    }

    pub fn chi(&self, m: usize, theta: &[f64]) -> f64 {
        self.weights(theta)[m - 1]
    }
}

/// Σ_m ‖(χ_m f)∘φ_m⁻¹‖_{H^s(ℝ^{n−1})}, each flat norm by FFT on a grid of
/// `grid` points per dimension over [−2, 2]^{n−1}.
pub fn chart_norm(f: &dyn SphereFunction, s: f64, pou: &PartitionOfUnity, grid: usize) -> Result<f64> {
    let atlas = pou.atlas;
    let d = atlas.n - 1;
    let half_width = 2.0;
    let h = 2.0 * half_width / grid as f64;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(grid);
    let mut total = 0.0;
    for m in 1..=atlas.len() {
        let sample = |y: &[f64]| -> Result<C64> {
            if y.iter().map(|v| v * v).sum::<f64>() >= pou.rho_sq {
                return Ok(C64::new(0.0, 0.0));
            }
            let th = atlas.inverse(m, y)?;
            let chi = pou.chi(m, &th);
            if chi == 0.0 {
                return Ok(C64::new(0.0, 0.0));
            }
            let v = f.eval(&th);
            if !is_finite(v) {
                return Err(Error::NonFinite { node: th });
            }
            Ok(v * chi)
        };
        let coord = |i: usize| -half_width + h * i as f64;
        let freq = |i: usize| {
            let j = if i < grid / 2 { i as f64 } else { i as f64 - grid as f64 };
            2.0 * PI * j / (grid as f64 * h)
        };
        let band = |i: usize| {
            let j = if i < grid / 2 { i } else { grid - i };
            j >= 3 * grid / 8
        };
        let (mut norm_sq, mut total_e, mut edge_e) = (0.0, 0.0, 0.0);
        match d {
            1 => {
                let mut buf = (0..grid).map(|i| sample(&[coord(i)])).collect::<Result<Vec<_>>>()?;
                fft.process(&mut buf);
                for (i, z) in buf.iter().enumerate() {
                    let e = z.norm_sqr();
                    total_e += e;
                    if band(i) {
                        edge_e += e;
                    }
                    norm_sq += (1.0 + freq(i).powi(2)).powf(s) * e;
                }
                norm_sq *= h / grid as f64;
            }
            2 => {
                let mut rows: Vec<Vec<C64>> = (0..grid)
                    .map(|i| (0..grid).map(|j| sample(&[coord(i), coord(j)])).collect::<Result<Vec<_>>>())
                    .collect::<Result<_>>()?;
                for r in rows.iter_mut() {
                    fft.process(r);
                }
                for j in 0..grid {
                    let mut col: Vec<C64> = rows.iter().map(|r| r[j]).collect();
                    fft.process(&mut col);
                    for (i, z) in col.iter().enumerate() {
                        let e = z.norm_sqr();
                        total_e += e;
                        if band(i) || band(j) {
                            edge_e += e;
                        }
                        norm_sq += (1.0 + freq(i).powi(2) + freq(j).powi(2)).powf(s) * e;
                    }
                }
                norm_sq *= h * h / (grid * grid) as f64;
            }
            _ => return Err(Error::Domain("chart norms implemented for n ∈ {2,3}".into())),
        }
        if total_e > 0.0 && edge_e > 1e-4 * total_e {
            return Err(Error::Resolution { requested: grid, available: grid / 2 });
        }
        total += norm_sq.sqrt();
    }
    Ok(total)
}

/// ∫ g over the disc |y| < r in ℝ^d (d ∈ {1, 2}) by iterated adaptive quadrature
/// with breaks at 0 and at `center`.
fn integrate_ball(d: usize, r: f64, center: &[f64], g: &(dyn Fn(&[f64]) -> C64 + Sync), tol: Tol) -> Result<C64> {
    let breaks = |lo: f64, hi: f64, extra: &[f64]| {
        let mut b = vec![lo];
        for &x in extra {
            if x > lo && x < hi {
                b.push(x);
            }
        }
        b.push(hi);
        b.sort_by(|a, b| a.partial_cmp(b).unwrap());
        b.dedup();
        b
    };
    match d {
        1 => {
            let mut f = |x: f64| g(&[x]);
            Ok(adaptive_breaks(&mut f, &breaks(-r, r, &[0.0, center[0]]), tol)?.value)
        }
        2 => {
            let mut failure = None;
            let mut outer = |y: f64| {
                let w = (r * r - y * y).max(0.0).sqrt();
                let mut f = |x: f64| g(&[x, y]);
                match adaptive_breaks(&mut f, &breaks(-w, w, &[0.0, center[0]]), tol) {
                    Ok(e) => e.value,
                    Err(e) => {
                        failure = Some(e);
                        C64::new(0.0, 0.0)
                    }
                }
            };
            let v = adaptive_breaks(&mut outer, &breaks(-r, r, &[0.0, center[1]]), tol)?.value;
            match failure {
                Some(e) => Err(e),
                None => Ok(v),
            }
        }
        _ => Err(Error::Domain("chart pairings implemented for n ∈ {2,3}".into())),
    }
}

/// ⟨r_{α,m}, φ⟩ for a test function φ supported (numerically) in V.
///
/// m ≤ 2k: ∫_V φ(ζ)/(q_α⊗1)(φ_m⁻¹(ζ)) dζ, a bounded integrand.
/// m > 2k: ⟨q_α⁻¹ ⊗ 1_{ℝ^{n−k−1}}, φ⟩, with `pair_qinv` in the first k variables.
pub fn chart_formula_pairing(sym: &HomogeneousSymbol, n: usize, m: usize, phi: &TestFunction) -> Result<C64> {
    check_geometry(sym, n)?;
    let atlas = ChartAtlas::new(n);
    atlas.check(m)?;
    if phi.k != n - 1 {
        return Err(Error::Domain(format!("chart test functions live on ℝ^{}, got ℝ^{}", n - 1, phi.k)));
    }
    let k = sym.k;
    if m <= 2 * k {
        let g = |z: &[f64]| match atlas.inverse(m, z) {
            Ok(th) => phi.eval(z) / sym.eval(&th[..k]),
            Err(_) => C64::new(f64::NAN, f64::NAN),
        };
        return integrate_ball(n - 1, atlas.v_radius_sq().sqrt(), &phi.center, &g, Tol::rel(1e-10));
    }
    if n - 1 == k {
        return Ok(pair_qinv(sym, phi)?.value);
    }
    // n = 3, k = 1: integrate the pairing in ζ₁ over the free variable ζ₂
    let c = phi.center[1];
    let w = (12.0 + 2.0 * (phi.poly.len() as f64).sqrt()) / phi.scale;
    let mut failure = None;
    let mut f = |kappa: f64| match pair_qinv(sym, &phi.slice_tail(&[kappa])) {
        Ok(p) => p.value,
        Err(e) => {
            failure = Some(e);
            C64::new(0.0, 0.0)
        }
    };
    let v = adaptive_breaks(&mut f, &[c - w, c, c + w], Tol::rel(1e-10))?.value;
    match failure {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// ∫_V r_α^t(φ_m⁻¹(ζ)) φ(ζ) dζ, whose t → ∞ limit is the chart pairing.
pub fn chart_mollified_pairing(sym: &HomogeneousSymbol, n: usize, m: usize, phi: &TestFunction, t: f64) -> Result<C64> {
    let atlas = ChartAtlas::new(n);
    atlas.check(m)?;
    let r = restrict_mollified(sym, t, n)?;
    let g = |z: &[f64]| match atlas.inverse(m, z) {
        Ok(th) => phi.eval(z) * r.eval(&th),
        Err(_) => C64::new(f64::NAN, f64::NAN),
    };
    integrate_ball(n - 1, atlas.v_radius_sq().sqrt(), &phi.center, &g, Tol::rel(1e-9))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::legendre_column;

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn weights_sum_to_area() {
        assert!((SphereQuadrature::circle(17).total_weight() - 2.0 * PI).abs() < 1e-12);
        assert!((SphereQuadrature::gauss_product(20, 40).total_weight() - 4.0 * PI).abs() < 1e-12);
        for (n, k) in [(2, 1), (3, 1), (3, 2)] {
            let q = SphereQuadrature::graded(n, k, 16, 40).unwrap();
            assert!((q.total_weight() - sphere_area(n)).abs() < 1e-12, "{n} {k}");
        }
    }

    #[test]
    fn integrate_examples() {
        let q = SphereQuadrature::gauss_product(16, 32);
        assert!((quad_integrate(&q, &|_: &[f64]| re(1.0)).unwrap().re - 4.0 * PI).abs() < 1e-12);
        assert!((quad_integrate(&q, &|t: &[f64]| re(t[0] * t[0])).unwrap().re - 4.0 * PI / 3.0).abs() < 1e-12);
        // ∫_{S¹} |cos θ|^{−1/2} = 2√π Γ(1/4)/Γ(3/4)
        let g = SphereQuadrature::graded(2, 1, 8, 120).unwrap();
        let v = quad_integrate(&g, &|t: &[f64]| re(t[0].abs().powf(-0.5))).unwrap().re;
        let want = 2.0 * PI.sqrt() * gamma(0.25) / gamma(0.75);
        assert!((v - want).abs() < 1e-9 * want, "{v} {want}");
        let bad = quad_integrate(&SphereQuadrature::circle(4), &|t: &[f64]| re(1.0 / t[1]));
        assert!(matches!(bad, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn monomial_exactness() {
        // ∫_{S²} x^a y^b z^c for even exponents, against the Beta-function closed form
        let q = SphereQuadrature::gauss_product(12, 24);
        let exact = |a: i32, b: i32, c: i32| {
            let g = |p: i32| gamma((p as f64 + 1.0) / 2.0);
            2.0 * g(a) * g(b) * g(c) / gamma((a + b + c) as f64 / 2.0 + 1.5)
        };
        for (a, b, c) in [(2, 4, 6), (0, 0, 10), (8, 2, 0), (4, 4, 4)] {
            let v = quad_integrate(&q, &|t: &[f64]| re(t[0].powi(a) * t[1].powi(b) * t[2].powi(c))).unwrap().re;
            assert!((v - exact(a, b, c)).abs() < 1e-12, "{a}{b}{c}");
        }
        let c = SphereQuadrature::circle(13);
        let v = quad_integrate(&c, &|t: &[f64]| re(t[0].powi(12))).unwrap().re;
        assert!((v - 2.0 * PI * 231.0 / 1024.0).abs() < 1e-12);
    }

    #[test]
    fn harmonic_examples() {
        let q = SphereQuadrature::gauss_product(20, 40);
        let e = expand_harmonics(&|_: &[f64]| re(1.0), 8, &q).unwrap();
        assert!((e.coeffs[0][0].re - (4.0 * PI).sqrt()).abs() < 1e-12);
        assert!(e.coeffs.iter().skip(1).flatten().all(|z| z.norm() < 1e-12));
        // real Y_{2,1} = P̄_2^1(z) cos λ/√π
        let y21 = |t: &[f64]| {
            let s = t[0].hypot(t[1]);
            let mut col = Vec::new();
            legendre_column(2, 1, t[2], s, &mut col);
            re(col[1] * (t[0] / s) / PI.sqrt())
        };
        let e = expand_harmonics(&y21, 8, &q).unwrap();
        for (l, c) in e.coeffs.iter().enumerate() {
            for (i, z) in c.iter().enumerate() {
                let want = if l == 2 && i == 3 { 1.0 } else { 0.0 };
                assert!((z - re(want)).norm() < 1e-10, "l={l} i={i} {z}");
            }
        }
        assert!((sobolev_norm(&e, -1.0) - 7f64.powf(-0.5)).abs() < 1e-10);
        assert!((sobolev_norm(&e, 0.0) - 1.0).abs() < 1e-10);
        let c = SphereQuadrature::circle(64);
        let e = expand_harmonics(&|t: &[f64]| re(t[0]), 10, &c).unwrap();
        assert!((e.coeffs[1][0].re - (PI / 2.0).sqrt()).abs() < 1e-12);
        assert!((sobolev_norm(&e, 0.0).powi(2) - PI).abs() < 1e-12);
        assert!(matches!(expand_harmonics(&|_: &[f64]| re(1.0), 40, &c), Err(Error::Resolution { .. })));
    }

    #[test]
    fn parseval_on_band_limited_input() {
        let f = |t: &[f64]| C64::new(t[0] * t[1] - 0.3 * t[2].powi(3), t[0].powi(2) * t[2]);
        let q = SphereQuadrature::gauss_product(24, 48);
        let e = expand_harmonics(&f, 12, &q).unwrap();
        let l2 = l2_norm(&q, &f).unwrap();
        assert!((sobolev_norm(&e, 0.0) - l2).abs() < 1e-10 * l2);
        // the same through the graded layouts
        for k in [1, 2] {
            let g = SphereQuadrature::graded(3, k, 12, 20).unwrap();
            let e = expand_harmonics(&f, 12, &g).unwrap();
            assert!((sobolev_norm(&e, 0.0) - l2).abs() < 1e-10 * l2, "k={k}");
        }
    }

    #[test]
    fn restriction_examples() {
        let r = restrict_symbol(&HomogeneousSymbol::riesz(1, 0.3), 2).unwrap();
        let th = [0.6, 0.8];
        assert!((r.eval(&th) - re(0.6f64.powf(-0.3))).norm() < 1e-15);
        let c = restrict_symbol(&HomogeneousSymbol::cauchy(), 3).unwrap();
        let th = [0.48, 0.64, 0.6];
        assert!((c.eval(&th) - C64::new(-0.64, 0.48).inv()).norm() < 1e-15);
        assert!(matches!(c.try_eval(&[0.0, 0.0, 1.0]), Err(Error::Singular(_))));
        assert!(!is_finite(c.eval(&[0.0, 0.0, 1.0])));
        assert!(restrict_symbol(&HomogeneousSymbol::riesz(1, 1.0), 2).is_err());
    }

    #[test]
    fn ring_modes_agree_with_sampling() {
        let sym = HomogeneousSymbol::cauchy();
        let q = SphereQuadrature::graded(3, 2, 16, 30).unwrap();
        let f = restrict_mollified(&sym, 3.0, 3).unwrap();
        let sampled = |t: &[f64]| f.eval(t);
        let a = expand_harmonics(&f, 16, &q).unwrap();
        let b = expand_harmonics(&sampled, 16, &q).unwrap();
        for (x, y) in a.coeffs.iter().flatten().zip(b.coeffs.iter().flatten()) {
            assert!((x - y).norm() < 1e-11, "{x} {y}");
        }
    }

    #[test]
    fn ralpha_riesz_quarter() {
        let sym = HomogeneousSymbol::riesz(1, 0.25);
        let mut opts = RalphaOptions::defaults(2);
        opts.t_sequence = (4..=10).map(|j| 2f64.powi(j)).collect();
        let r = ralpha_norm(&sym, 2, 0.0, &opts).unwrap();
        // (2√π Γ(1/4)/Γ(3/4))^{1/2}
        let want = (2.0 * PI.sqrt() * gamma(0.25) / gamma(0.75)).sqrt();
        assert!((r.pointwise_norm.unwrap() - want).abs() < 1e-8 * want);
        assert!((r.norm - want).abs() < 2e-3 * want, "{} {want}", r.norm);
        let err = ralpha_norm(&HomogeneousSymbol::riesz(1, 0.75), 2, 0.0, &opts);
        assert!(matches!(err, Err(Error::Divergent { .. })));
        let ok = ralpha_norm(&HomogeneousSymbol::riesz(1, 0.75), 2, 0.5, &opts).unwrap();
        assert!(ok.cauchy, "{:?}", ok.table);
    }

    #[test]
    fn atlas_identities() {
        for n in [2usize, 3] {
            let atlas = ChartAtlas::new(n);
            let pou = PartitionOfUnity::new(atlas);
            let zs: Vec<Vec<f64>> = if n == 2 { vec![vec![0.3], vec![-0.8]] } else { vec![vec![0.3, -0.5], vec![0.0, 0.9]] };
            for m in 1..=2 * n {
                let j = (m + 1) / 2;
                for z in &zs {
                    let th = atlas.inverse(m, z).unwrap();
                    assert!((th.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-15);
                    assert!(th[j - 1].powi(2) > 0.5 / n as f64);
                    for l in 0..n - 1 {
                        let want = if l == j - 1 { z[j - 1] } else { z[l] };
                        let got = if l == j - 1 { th[n - 1] } else { th[l] };
                        assert_eq!(got, want);
                    }
                    let back = atlas.forward(m, &th).unwrap().unwrap();
                    assert_eq!(&back, z);
                }
            }
            let th: &[f64] = if n == 2 { &[0.6, 0.8] } else { &[0.0, 0.6, 0.8] };
            let w = pou.weights(th);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn chart_norm_zero_and_constant() {
        let pou = PartitionOfUnity::new(ChartAtlas::new(2));
        assert_eq!(chart_norm(&|_: &[f64]| re(0.0), 0.0, &pou, 256).unwrap(), 0.0);
        let v = chart_norm(&|_: &[f64]| re(1.0), 0.0, &pou, 256).unwrap();
        assert!(v > 0.0 && v.is_finite());
    }
}
