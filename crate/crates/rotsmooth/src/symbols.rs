//! Homogeneous elliptic symbols q_α on ℝ^k and the checks for ellipticity,
//! homogeneity and the cancellation condition.
//!
//! Ellipticity is certified only by sampling: a report with `passes_a` is
//! evidence, not a proof.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{gauss_legendre, C64};

pub type MultiIndex = Vec<u32>;

type Evaluator = Arc<dyn Fn(&[f64]) -> C64 + Send + Sync>;

#[derive(Clone)]
pub enum SymbolKind {
    /// |η|^α
    Riesz,
    /// iη₁ − η₂ on ℝ²
    Cauchy,
    /// iη on ℝ
    Transport,
    Polynomial(Vec<(MultiIndex, C64)>),
    Custom(Evaluator),
}

impl fmt::Debug for SymbolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymbolKind::Riesz => write!(f, "Riesz"),
            SymbolKind::Cauchy => write!(f, "Cauchy"),
            SymbolKind::Transport => write!(f, "Transport"),
            SymbolKind::Polynomial(c) => write!(f, "Polynomial({c:?})"),
            SymbolKind::Custom(_) => write!(f, "Custom"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct HomogeneousSymbol {
    pub k: usize,
    pub alpha: f64,
    pub kind: SymbolKind,
}

/// JSON description of a symbol.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SymbolSpec {
    pub kind: String,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub coeffs: Vec<(MultiIndex, f64, f64)>,
}

/// Tolerance under which α − k counts as a non-negative integer.
pub const INTEGER_TOL: f64 = 1e-12;

impl HomogeneousSymbol {
    pub fn riesz(k: usize, alpha: f64) -> Self {
        HomogeneousSymbol { k, alpha, kind: SymbolKind::Riesz }
    }

    pub fn cauchy() -> Self {
        HomogeneousSymbol { k: 2, alpha: 1.0, kind: SymbolKind::Cauchy }
    }

    pub fn transport() -> Self {
        HomogeneousSymbol { k: 1, alpha: 1.0, kind: SymbolKind::Transport }
    }

    /// Polynomial symbol; every multi-index must have length k and degree α.
    pub fn polynomial(k: usize, coeffs: Vec<(MultiIndex, C64)>) -> Result<Self> {
        let Some(first) = coeffs.first() else {
            return Err(Error::Config("polynomial symbol needs at least one coefficient".into()));
        };
        let deg: u32 = first.0.iter().sum();
        for (b, _) in &coeffs {
            if b.len() != k {
                return Err(Error::Config(format!("multi-index {b:?} does not have length k = {k}")));
            }
            if b.iter().sum::<u32>() != deg {
                return Err(Error::Config(format!("multi-index {b:?} has degree different from {deg}")));
            }
        }
        if deg == 0 {
            return Err(Error::Config("polynomial symbol must have positive degree".into()));
        }
        Ok(HomogeneousSymbol { k, alpha: deg as f64, kind: SymbolKind::Polynomial(coeffs) })
    }

    pub fn custom(k: usize, alpha: f64, f: impl Fn(&[f64]) -> C64 + Send + Sync + 'static) -> Self {
        HomogeneousSymbol { k, alpha, kind: SymbolKind::Custom(Arc::new(f)) }
    }

    pub fn from_spec(spec: &SymbolSpec) -> Result<Self> {
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| Error::Config(format!("symbol kind '{}' needs '{name}'", spec.kind)));
        let sym = match spec.kind.as_str() {
            "riesz" => {
                let k = spec.k.ok_or_else(|| Error::Config("symbol kind 'riesz' needs 'k'".into()))?;
                let alpha = need(spec.alpha, "alpha")?;
                if k == 0 || alpha <= 0.0 {
                    return Err(Error::Config("riesz symbol needs k ≥ 1 and alpha > 0".into()));
                }
                Self::riesz(k, alpha)
            }
            "cauchy" => Self::cauchy(),
            "transport" => Self::transport(),
            "polynomial" => {
                let k = spec.k.ok_or_else(|| Error::Config("symbol kind 'polynomial' needs 'k'".into()))?;
                let c = spec.coeffs.iter().map(|(b, re, im)| (b.clone(), C64::new(*re, *im))).collect();
                Self::polynomial(k, c)?
            }
            "custom" => return Err(Error::Config("custom symbols cannot be built from JSON".into())),
            other => return Err(Error::Config(format!("unknown symbol kind '{other}' (expected riesz, cauchy, transport or polynomial)"))),
        };
        if let Some(k) = spec.k {
            if k != sym.k {
                return Err(Error::Config(format!("symbol '{}' has k = {}, config says {k}", spec.kind, sym.k)));
            }
        }
        if let Some(a) = spec.alpha {
            if (a - sym.alpha).abs() > INTEGER_TOL {
                return Err(Error::Config(format!("symbol '{}' has alpha = {}, config says {a}", spec.kind, sym.alpha)));
            }
        }
        Ok(sym)
    }

    pub fn to_spec(&self) -> SymbolSpec {
        let (kind, coeffs) = match &self.kind {
            SymbolKind::Riesz => ("riesz", vec![]),
            SymbolKind::Cauchy => ("cauchy", vec![]),
            SymbolKind::Transport => ("transport", vec![]),
            SymbolKind::Polynomial(c) => ("polynomial", c.iter().map(|(b, z)| (b.clone(), z.re, z.im)).collect()),
            SymbolKind::Custom(_) => ("custom", vec![]),
        };
        SymbolSpec { kind: kind.into(), k: Some(self.k), alpha: Some(self.alpha), coeffs }
    }

    pub fn name(&self) -> String {
        match &self.kind {
            SymbolKind::Riesz => format!("riesz(k={}, alpha={})", self.k, self.alpha),
            SymbolKind::Cauchy => "cauchy".into(),
            SymbolKind::Transport => "transport".into(),
            SymbolKind::Polynomial(_) => format!("polynomial(k={}, alpha={})", self.k, self.alpha),
            SymbolKind::Custom(_) => format!("custom(k={}, alpha={})", self.k, self.alpha),
        }
    }

    /// q_α(η) without the zero check.
    #[inline]
    pub fn eval(&self, eta: &[f64]) -> C64 {
        match &self.kind {
            SymbolKind::Riesz => {
                let r2: f64 = eta.iter().map(|x| x * x).sum();
                C64::new(r2.powf(0.5 * self.alpha), 0.0)
            }
            SymbolKind::Cauchy => C64::new(-eta[1], eta[0]),
            SymbolKind::Transport => C64::new(0.0, eta[0]),
            SymbolKind::Polynomial(c) => c.iter().map(|(b, z)| z * monomial(eta, b)).sum(),
            SymbolKind::Custom(f) => f(eta),
        }
    }

    /// α − k when it is a non-negative integer.
    pub fn integer_excess(&self) -> Option<u32> {
        let d = self.alpha - self.k as f64;
        let r = d.round();
        (d > -INTEGER_TOL && (d - r).abs() < INTEGER_TOL).then_some(r as u32)
    }
}

#[inline]
pub fn monomial(x: &[f64], b: &[u32]) -> f64 {
    x.iter().zip(b).map(|(xi, &e)| xi.powi(e as i32)).product()
}

/// ⌈x⌉ in the strict sense min{l ∈ ℕ₀ : x < l}.
pub fn strict_ceil(x: f64) -> u32 {
    if x < 0.0 {
        0
    } else {
        x.floor() as u32 + 1
    }
}

pub fn eval_symbol(sym: &HomogeneousSymbol, eta: &[f64]) -> Result<C64> {
    if eta.len() != sym.k {
        return Err(Error::Domain(format!("point has dimension {}, symbol has k = {}", eta.len(), sym.k)));
    }
    if eta.iter().all(|&x| x == 0.0) {
        return Err(Error::Domain("q_alpha is not evaluated at the origin".into()));
    }
    Ok(sym.eval(eta))
}

/// All multi-indices of length k and degree d, in lexicographic order.
pub fn multi_indices(k: usize, d: u32) -> Vec<MultiIndex> {
    fn rec(k: usize, d: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if k == 1 {
            prefix.push(d);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for i in 0..=d {
            prefix.push(i);
            rec(k - 1, d - i, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, d, &mut Vec::new(), &mut out);
    out
}

/// Sample points on S^{k−1}: S⁰ = {−1, 1}, equispaced on S¹, a Fibonacci lattice on S².
pub fn sphere_samples(k: usize, count: usize) -> Vec<Vec<f64>> {
    match k {
        1 => vec![vec![-1.0], vec![1.0]],
        2 => (0..count)
            .map(|j| {
                let t = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|j| {
                    let z = 1.0 - 2.0 * (j as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let mut v = vec![r * (golden * j as f64).cos(), r * (golden * j as f64).sin(), z];
                    v.resize(k.max(3), 0.0);
                    v.truncate(k);
                    v
                })
                .collect()
        }
    }
}

/// ∫_{S^{k−1}} θ^β / q(θ) dS; S⁰ carries unit point masses.
pub fn cancellation_integral(sym: &HomogeneousSymbol, beta: &[u32]) -> Result<C64> {
    match sym.k {
        1 => Ok([-1.0f64, 1.0].iter().map(|&t| monomial(&[t], beta) / sym.eval(&[t])).sum()),
        2 => {
            let trap = |m: usize| -> C64 {
                (0..m)
                    .map(|j| {
                        let t = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
                        let th = [t.cos(), t.sin()];
                        monomial(&th, beta) / sym.eval(&th)
                    })
                    .sum::<C64>()
                    * (2.0 * std::f64::consts::PI / m as f64)
            };
            let mut m = 64;
            let mut prev = trap(m);
            while m < 1 << 18 {
                m *= 2;
                let cur = trap(m);
                if (cur - prev).norm() <= 1e-13 * (1.0 + cur.norm()) {
                    return Ok(cur);
                }
                prev = cur;
            }
            Err(Error::Quadrature { partial: prev, error: f64::NAN })
        }
        3 => {
            let polar = gauss_legendre(96, -1.0, 1.0);
            let naz = 192;
            let mut acc = C64::new(0.0, 0.0);
            for &(z, w) in &polar {
                let r = (1.0 - z * z).sqrt();
                for j in 0..naz {
                    let t = 2.0 * std::f64::consts::PI * j as f64 / naz as f64;
                    let th = [r * t.cos(), r * t.sin(), z];
                    acc += monomial(&th, beta) / sym.eval(&th) * w;
                }
            }
            Ok(acc * (2.0 * std::f64::consts::PI / naz as f64))
        }
        k => Err(Error::Domain(format!("cancellation quadrature implemented for k ≤ 3, got k = {k}"))),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SymbolCheckReport {
    pub min_modulus_on_sphere: f64,
    pub max_modulus_on_sphere: f64,
    pub max_homogeneity_residual: f64,
    pub cancellation_values: Vec<(MultiIndex, C64)>,
    pub passes_a: bool,
    pub passes_b: bool,
    /// Present only when α − k ∈ ℕ₀.
    pub passes_c: Option<bool>,
    pub tol_a_relative: f64,
    pub tol_b: f64,
    pub tol_c: f64,
    pub sphere_samples: usize,
    pub lambda_grid: Vec<f64>,
}

pub const DEFAULT_TOL_B: f64 = 1e-10;
pub const DEFAULT_TOL_C: f64 = 1e-8;
pub const TOL_A_RELATIVE: f64 = 1e-10;

pub fn check_conditions(sym: &HomogeneousSymbol, samples: usize, lambda_grid: &[f64], tol: f64) -> SymbolCheckReport {
    let pts = sphere_samples(sym.k, samples.max(1));
    let mut min_mod = f64::INFINITY;
    let mut max_mod: f64 = 0.0;
    let mut max_res: f64 = 0.0;
    let mut argmin = 0;
    for (i, th) in pts.iter().enumerate() {
        let q = sym.eval(th);
        let m = q.norm();
        if m < min_mod {
            min_mod = m;
            argmin = i;
        }
        max_mod = max_mod.max(m);
        for &lam in lambda_grid {
            let eta: Vec<f64> = th.iter().map(|x| lam * x).collect();
            let scaled = q * lam.powf(sym.alpha);
            let res = (sym.eval(&eta) - scaled).norm() / scaled.norm();
            max_res = max_res.max(if res.is_finite() { res } else { f64::INFINITY });
        }
    }
    if sym.k == 2 && pts.len() > 1 {
        // polish the sampled minimum with a golden-section search in angle
        let t0 = pts[argmin][1].atan2(pts[argmin][0]);
        let h = 2.0 * PI / pts.len() as f64;
        let g = |t: f64| sym.eval(&[t.cos(), t.sin()]).norm();
        let (mut a, mut b) = (t0 - h, t0 + h);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let (c, d) = (b - r * (b - a), a + r * (b - a));
            if g(c) < g(d) {
                b = d;
            } else {
                a = c;
            }
        }
        min_mod = min_mod.min(g(0.5 * (a + b)));
    }
    let mut values = Vec::new();
    let mut passes_c = None;
    if let Some(j) = sym.integer_excess() {
        let mut ok = true;
        for b in multi_indices(sym.k, j) {
            let v = cancellation_integral(sym, &b).unwrap_or(C64::new(f64::NAN, f64::NAN));
            ok &= v.norm() <= DEFAULT_TOL_C;
            values.push((b, v));
        }
        passes_c = Some(ok);
    }
    SymbolCheckReport {
        min_modulus_on_sphere: min_mod,
        max_modulus_on_sphere: max_mod,
        max_homogeneity_residual: max_res,
        cancellation_values: values,
        passes_a: min_mod.is_finite() && min_mod > TOL_A_RELATIVE * max_mod,
        passes_b: max_res <= tol,
        passes_c,
        tol_a_relative: TOL_A_RELATIVE,
        tol_b: tol,
        tol_c: DEFAULT_TOL_C,
        sphere_samples: pts.len(),
        lambda_grid: lambda_grid.to_vec(),
    }
}
