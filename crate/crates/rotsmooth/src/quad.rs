//! One-dimensional Gauss–Kronrod quadrature.
//!
//! All integrands are complex valued. `gk21` is the fixed 10/21-point pair,
//! `adaptive` bisects the worst interval until the tolerance is met and
//! `graded` integrates towards a singular endpoint on a geometric mesh.

use num_complex::Complex64;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

pub type C64 = Complex64;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_478_125,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Nodes and weights of the 21-point Kronrod rule mapped to `[a, b]`.
pub fn kronrod_nodes(a: f64, b: f64) -> [(f64, f64); 21] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [(0.0, 0.0); 21];
    for j in 0..10 {
        out[2 * j] = (c - h * XGK[j], h * WGK[j]);
        out[2 * j + 1] = (c + h * XGK[j], h * WGK[j]);
    }
    out[20] = (c, h * WGK[10]);
    out
}

/// Gauss–Legendre nodes and weights on `[a, b]` by Newton iteration.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 {
                1.0
            } else if n == 1 {
                x
            } else {
                p1
            };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((c - h * x, h * w));
    }
    out.reverse();
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: C64,
    pub error: f64,
    /// Integral of |f|, used for round-off floors.
    pub abs: f64,
    pub evals: usize,
}

impl Estimate {
    pub fn zero() -> Self {
        Estimate { value: C64::new(0.0, 0.0), error: 0.0, abs: 0.0, evals: 0 }
    }

    pub fn add(self, o: Estimate) -> Estimate {
        Estimate { value: self.value + o.value, error: self.error + o.error, abs: self.abs + o.abs, evals: self.evals + o.evals }
    }

    pub fn scale(self, c: C64) -> Estimate {
        Estimate { value: self.value * c, error: self.error * c.norm(), abs: self.abs * c.norm(), evals: self.evals }
    }
}

/// Single application of the 21-point Kronrod rule with the QUADPACK error heuristic.
pub fn gk21<F: FnMut(f64) -> C64>(f: &mut F, a: f64, b: f64) -> Estimate {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let ah = h.abs();
    let fc = f(c);
    let mut rk = fc * WGK[10];
    let mut rg = C64::new(0.0, 0.0);
    let mut rabs = fc.norm() * WGK[10];
    let mut fv = [(C64::new(0.0, 0.0), C64::new(0.0, 0.0)); 10];
    for j in 0..10 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        fv[j] = (f1, f2);
        rk += (f1 + f2) * WGK[j];
        rabs += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            rg += (f1 + f2) * WG[j / 2];
        }
    }
    let mean = rk * 0.5;
    let mut rasc = WGK[10] * (fc - mean).norm();
    for j in 0..10 {
        rasc += WGK[j] * ((fv[j].0 - mean).norm() + (fv[j].1 - mean).norm());
    }
    let value = rk * h;
    rabs *= ah;
    rasc *= ah;
    let mut err = ((rk - rg) * h).norm();
    if rasc != 0.0 && err != 0.0 {
        err = rasc * (200.0 * err / rasc).powf(1.5).min(1.0);
    }
    if rabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * rabs);
    }
    Estimate { value, error: err, abs: rabs, evals: 21 }
}

#[derive(Clone, Copy, Debug)]
pub struct Tol {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tol {
    fn default() -> Self {
        Tol { abs: 0.0, rel: 1e-12, max_intervals: 2000 }
    }
}

impl Tol {
    pub fn rel(rel: f64) -> Self {
        Tol { rel, ..Tol::default() }
    }

    fn met(&self, e: &Estimate) -> bool {
        e.error <= self.abs.max(self.rel * e.value.norm()) || e.error <= 100.0 * f64::EPSILON * e.abs
    }
}

struct Piece {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.est.error == o.est.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> Ordering {
        self.est.error.partial_cmp(&o.est.error).unwrap_or(Ordering::Equal)
    }
}

/// Adaptive bisection over `[points[0], points[last]]` with the interior points as breaks.
pub fn adaptive_breaks<F: FnMut(f64) -> C64>(f: &mut F, points: &[f64], tol: Tol) -> Result<Estimate> {
    let mut heap = BinaryHeap::new();
    let mut total = Estimate::zero();
    for w in points.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let est = gk21(f, w[0], w[1]);
        total = total.add(est);
        heap.push(Piece { a: w[0], b: w[1], est });
    }
    let mut count = heap.len();
    while !tol.met(&total) {
        if count >= tol.max_intervals {
            return Err(Error::Quadrature { partial: total.value, error: total.error });
        }
        let Some(p) = heap.pop() else { break };
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            heap.push(p);
            break;
        }
        let l = gk21(f, p.a, m);
        let r = gk21(f, m, p.b);
        total.value += l.value + r.value - p.est.value;
        total.error += l.error + r.error - p.est.error;
        total.abs += l.abs + r.abs - p.est.abs;
        total.evals += l.evals + r.evals;
        heap.push(Piece { a: p.a, b: m, est: l });
        heap.push(Piece { a: m, b: p.b, est: r });
        count += 1;
    }
    // Re-sum to shed accumulated cancellation in the running totals.
    let mut clean = Estimate::zero();
    let evals = total.evals;
    for p in heap.into_iter() {
        clean = clean.add(p.est);
    }
    clean.evals = evals;
    Ok(clean)
}

pub fn adaptive<F: FnMut(f64) -> C64>(f: &mut F, a: f64, b: f64, tol: Tol) -> Result<Estimate> {
    adaptive_breaks(f, &[a, b], tol)
}

/// Behaviour of the integrand inside the innermost graded piece `(0, h)`.
#[derive(Clone, Copy, Debug)]
pub enum Inner {
    /// Integrate the last piece with the Kronrod rule like the others.
    Rule,
    /// Replace it by the given closed-form value.
    Value(C64),
}

/// Integral over offsets `u ∈ (0, len]` from a singular anchor on the mesh
/// `len·2^{-j-1} < u ≤ len·2^{-j}`, `j < levels`, each piece adaptive.
/// The remaining `(0, len·2^{-levels})` is handled according to `inner`.
pub fn graded<F, G>(f: &mut F, len: f64, levels: usize, tol: Tol, inner: G) -> Result<Estimate>
where
    F: FnMut(f64) -> C64,
    G: FnOnce(f64) -> Inner,
{
    let mut total = Estimate::zero();
    let mut hi = len;
    let piece_tol = Tol { abs: tol.abs / (levels as f64 + 1.0), ..tol };
    for _ in 0..levels {
        let lo = 0.5 * hi;
        let e = adaptive(f, lo, hi, piece_tol)?;
        total = total.add(e);
        hi = lo;
    }
    match inner(hi) {
        Inner::Rule => total = total.add(gk21(f, 0.0, hi)),
        Inner::Value(v) => total.value += v,
    }
    Ok(total)
}
