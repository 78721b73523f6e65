//! Haar-distributed rotations on SO(2) and SO(3) and Monte Carlo checks of
//! the invariance and sphere-transfer identities.
//!
//! Random numbers come from ChaCha20 (RFC 8439 block function, 64-bit stream id).
//! Samples are produced in blocks of `BLOCK` rotations; block b of a sampler with
//! seed s uses the ChaCha20 stream `set_stream(b)` keyed by `seed_from_u64(s)`, so
//! streams are reproducible and independent of the thread count. Normals use the
//! Box–Muller transform on 53-bit uniforms.

use std::f64::consts::PI;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::quad::C64;
use crate::sphere::{l2_norm, quad_integrate, sphere_area, SphereFunction, SphereQuadrature};

pub const BLOCK: usize = 4096;

/// An n×n rotation matrix, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    pub n: usize,
    pub m: Vec<f64>,
}

impl Rotation {
    pub fn identity(n: usize) -> Self {
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            m[i * n + i] = 1.0;
        }
        Rotation { n, m }
    }

    pub fn plane(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation { n: 2, m: vec![c, -s, s, c] }
    }

    /// Rotation of a unit quaternion (w, x, y, z).
    pub fn from_quaternion(q: [f64; 4]) -> Self {
        let [w, x, y, z] = q;
        Rotation {
            n: 3,
            m: vec![
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i * self.n + j]
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum()).collect()
    }

    /// Qᵀv.
    pub fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(j, i) * v[j]).sum()).collect()
    }

    /// Q e_j.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        Rotation { n, m: (0..n * n).map(|k| self.get(k % n, k / n)).collect() }
    }

    pub fn mul(&self, o: &Rotation) -> Self {
        let n = self.n;
        Rotation { n, m: (0..n * n).map(|k| (0..n).map(|l| self.get(k / n, l) * o.get(l, k % n)).sum()).collect() }
    }

    pub fn det(&self) -> f64 {
        match self.n {
            2 => self.m[0] * self.m[3] - self.m[1] * self.m[2],
            3 => {
                let a = &self.m;
                a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) + a[2] * (a[3] * a[7] - a[4] * a[6])
            }
            _ => f64::NAN,
        }
    }

    /// max |QᵀQ − I| and |det Q − 1|.
    pub fn orthogonality_defect(&self) -> f64 {
        let p = self.transpose().mul(self);
        let mut d: f64 = (self.det() - 1.0).abs();
        for i in 0..self.n {
            for j in 0..self.n {
                d = d.max((p.get(i, j) - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        d
    }
}

#[inline]
fn uniform(rng: &mut ChaCha20Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn normal_pair(rng: &mut ChaCha20Rng) -> (f64, f64) {
    let u1 = 1.0 - uniform(rng);
    let u2 = uniform(rng);
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (2.0 * PI * u2).sin_cos();
    (r * c, r * s)
}

/// Reproducible Haar sampler on SO(n), n ∈ {2, 3}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HaarSampler {
    pub n: usize,
    pub seed: u64,
    /// index of the next block
    pub counter: u64,
}

impl HaarSampler {
    pub fn new(n: usize, seed: u64) -> Result<Self> {
        if !(n == 2 || n == 3) {
            return Err(Error::Domain(format!("Haar sampling implemented for n ∈ {{2,3}}, got {n}")));
        }
        Ok(HaarSampler { n, seed, counter: 0 })
    }

    /// The rotations of block `b`.
    pub fn block(&self, b: u64) -> Vec<Rotation> {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(b);
        (0..BLOCK)
            .map(|_| match self.n {
                2 => Rotation::plane(2.0 * PI * uniform(&mut rng)),
                _ => {
                    let (a, b) = normal_pair(&mut rng);
                    let (c, d) = normal_pair(&mut rng);
                    let r = (a * a + b * b + c * c + d * d).sqrt();
                    Rotation::from_quaternion([a / r, b / r, c / r, d / r])
                }
            })
            .collect()
    }
}

/// Draws `count` rotations and advances the sampler.
pub fn sample_haar(sampler: &mut HaarSampler, count: usize) -> Vec<Rotation> {
    let blocks = count.div_ceil(BLOCK) as u64;
    let first = sampler.counter;
    let mut out: Vec<Rotation> = (first..first + blocks).into_par_iter().flat_map_iter(|b| sampler.block(b)).collect();
    out.truncate(count);
    sampler.counter += blocks;
    out
}

/// Mean and standard error of a sample, reduced in input order.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

fn z_score(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff / se
    } else if diff.abs() <= 1e-12 {
        0.0
    } else {
        f64::INFINITY
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PushMode {
    /// Q ↦ Qe₁
    Column,
    /// Q ↦ Qᵀe₁
    Row,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PushforwardReport {
    pub seed: u64,
    pub count: usize,
    pub mode: PushMode,
    pub mc_mean: f64,
    pub std_error: f64,
    pub sphere_mean: f64,
    pub z_score: f64,
}

/// Compares the Haar average of f(Qe₁) (or f(Qᵀe₁)) with the normalized sphere mean of a real f.
pub fn pushforward_check(
    f: &dyn SphereFunction,
    q: &SphereQuadrature,
    mode: PushMode,
    sampler: &mut HaarSampler,
    count: usize,
) -> Result<PushforwardReport> {
    let seed = sampler.seed;
    let n = sampler.n;
    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    let rots = sample_haar(sampler, count);
    let vals: Vec<f64> = rots
        .par_iter()
        .map(|r| {
            let v = match mode {
                PushMode::Column => r.apply(&e1),
                PushMode::Row => r.apply_transpose(&e1),
            };
            let y = f.eval(&v).re;
            if y.is_finite() {
                Ok(y)
            } else {
                Err(Error::NonFinite { node: v })
            }
        })
        .collect::<Result<_>>()?;
    let (mc_mean, std_error) = mean_and_se(&vals);
    let sphere_mean = quad_integrate(q, f)?.re / sphere_area(n);
    Ok(PushforwardReport { seed, count, mode, mc_mean, std_error, sphere_mean, z_score: z_score(mc_mean - sphere_mean, std_error) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvarianceMode {
    /// f(PQ) against f(Q)
    Left,
    /// f(QP) against f(Q)
    Right,
    /// f(Qᵀ) against f(Q)
    Transpose,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub seed: u64,
    pub count: usize,
    pub mode: InvarianceMode,
    pub mean_original: f64,
    pub mean_transformed: f64,
    pub std_error: f64,
    pub z_score: f64,
}

/// Two-sample z-score of the Haar means of f∘T and f for T the left/right translation by P or transposition.
pub fn invariance_check<F>(f: F, p: &Rotation, mode: InvarianceMode, sampler: &mut HaarSampler, count: usize) -> InvarianceReport
where
    F: Fn(&Rotation) -> f64 + Sync,
{
    let seed = sampler.seed;
    let orig = sample_haar(sampler, count);
    let other = sample_haar(sampler, count);
    let a: Vec<f64> = orig.par_iter().map(&f).collect();
    let b: Vec<f64> = other
        .par_iter()
        .map(|q| match mode {
            InvarianceMode::Left => f(&p.mul(q)),
            InvarianceMode::Right => f(&q.mul(p)),
            InvarianceMode::Transpose => f(&q.transpose()),
        })
        .collect();
    let (ma, sa) = mean_and_se(&a);
    let (mb, sb) = mean_and_se(&b);
    let se = (sa * sa + sb * sb).sqrt();
    InvarianceReport { seed, count, mode, mean_original: ma, mean_transformed: mb, std_error: se, z_score: z_score(mb - ma, se) }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub seed: u64,
    pub count: usize,
    /// S^{1/2}·(MC ‖f∘F_v‖_{L²(SO(n))}) / ‖f‖_{L²(S^{n−1})}
    pub ratio: f64,
    pub std_error: f64,
    pub z_score: f64,
}

/// Ratio of S(S^{n−1})^{1/2}‖f(Q v)‖_{L²(SO(n), μ)} (Monte Carlo) to ‖f‖_{L²(S^{n−1})} (quadrature).
pub fn transfer_norm_check(
    f: &dyn SphereFunction,
    q: &SphereQuadrature,
    v: &[f64],
    sampler: &mut HaarSampler,
    count: usize,
) -> Result<TransferReport> {
    let seed = sampler.seed;
    let n = sampler.n;
    let rots = sample_haar(sampler, count);
    let vals: Vec<f64> = rots
        .par_iter()
        .map(|r| {
            let p = r.apply(v);
            let y = f.eval(&p).norm_sqr();
            if y.is_finite() {
                Ok(y)
            } else {
                Err(Error::NonFinite { node: p })
            }
        })
        .collect::<Result<_>>()?;
    let (mean, se) = mean_and_se(&vals);
    let l2 = l2_norm(q, f)?;
    let scale = sphere_area(n).sqrt() / l2;
    let ratio = scale * mean.sqrt();
    // delta method: d sqrt(m) = dm / (2 sqrt(m))
    let std_error = if mean > 0.0 { scale * se / (2.0 * mean.sqrt()) } else { 0.0 };
    Ok(TransferReport { seed, count, ratio, std_error, z_score: z_score(ratio - 1.0, std_error) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformityReport {
    pub seed: u64,
    pub count: usize,
    pub bins: usize,
    pub chi_square: f64,
    pub p_value: f64,
}

/// Chi-square test of Qe₁ against the uniform law on S^{n−1}: 20 equal arcs on S¹,
/// 6 equal-area z-bands × 8 longitudes on S².
pub fn uniformity_check(sampler: &mut HaarSampler, count: usize) -> UniformityReport {
    let seed = sampler.seed;
    let n = sampler.n;
    let rots = sample_haar(sampler, count);
    let bins = if n == 2 { 20 } else { 48 };
    let mut hist = vec![0usize; bins];
    for r in &rots {
        let v = r.column(0);
        let b = if n == 2 {
            let a = v[1].atan2(v[0]).rem_euclid(2.0 * PI);
            ((a / (2.0 * PI) * 20.0) as usize).min(19)
        } else {
            let band = (((v[2] + 1.0) / 2.0 * 6.0) as usize).min(5);
            let lon = ((v[1].atan2(v[0]).rem_euclid(2.0 * PI) / (2.0 * PI) * 8.0) as usize).min(7);
            band * 8 + lon
        };
        hist[b] += 1;
    }
    let expect = count as f64 / bins as f64;
    let chi: f64 = hist.iter().map(|&h| (h as f64 - expect).powi(2) / expect).sum();
    let p_value = 1.0 - ChiSquared::new((bins - 1) as f64).map(|d| d.cdf(chi)).unwrap_or(f64::NAN);
    UniformityReport { seed, count, bins, chi_square: chi, p_value }
}

/// Convenience: the real-valued sphere function θ ↦ g(θ).
pub fn real_fn(g: impl Fn(&[f64]) -> f64 + Sync) -> impl Fn(&[f64]) -> C64 + Sync {
    move |t: &[f64]| C64::new(g(t), 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_are_rotations_and_reproducible() {
        for n in [2, 3] {
            let mut s = HaarSampler::new(n, 42).unwrap();
            let a = sample_haar(&mut s, 5000);
            assert!(a.iter().all(|r| r.orthogonality_defect() < 1e-12));
            let mut s2 = HaarSampler::new(n, 42).unwrap();
            assert_eq!(sample_haar(&mut s2, 5000), a);
            assert_eq!(s.counter, 2);
        }
    }

    #[test]
    fn second_moment_of_first_column() {
        for n in [2usize, 3] {
            let mut s = HaarSampler::new(n, 7).unwrap();
            let v: Vec<f64> = sample_haar(&mut s, 100_000).iter().map(|r| r.get(0, 0).powi(2)).collect();
            let (m, se) = mean_and_se(&v);
            assert!(((m - 1.0 / n as f64) / se).abs() < 3.0, "n={n}: {m} ± {se}");
        }
    }

    #[test]
    fn constant_invariance_is_exact() {
        let mut s = HaarSampler::new(3, 1).unwrap();
        let p = Rotation::from_quaternion([0.5, 0.5, 0.5, 0.5]);
        let r = invariance_check(|_| 2.0, &p, InvarianceMode::Left, &mut s, 1000);
        assert_eq!(r.z_score, 0.0);
    }

    #[test]
    fn transfer_of_constant_is_one() {
        let mut s = HaarSampler::new(2, 3).unwrap();
        let q = SphereQuadrature::circle(64);
        let r = transfer_norm_check(&real_fn(|_| 1.0), &q, &[1.0, 0.0], &mut s, 1000).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-14);
    }
}
