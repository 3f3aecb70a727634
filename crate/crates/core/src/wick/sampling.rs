//! Seeded sampling from the free field and its conditional laws.
//!
//! Every draw uses `ChaCha8Rng::seed_from_u64(seed)` with the stream set to
//! the draw index, so a batch is a pure function of `(seed, index)` and can
//! be split across threads without changing any value.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Ordering, Polynomial};
use crate::error::{Error, Result};
use crate::mesh::VertexSet;
use crate::sobolev::{Factor, FieldOperator, TestVector};

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer over `seed` and `tag`, for nested seeds.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn normals(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(rng)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub values: Vec<f64>,
    pub seed: u64,
    pub index: u64,
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    pub seed: u64,
}

impl Estimate {
    /// Welford mean and variance; constant samples give their value exactly
    /// with zero error.
    pub fn from_values(values: &[f64], seed: u64) -> Result<Estimate> {
        if values.len() < 2 {
            return Err(Error::InvalidParameter("an estimate needs at least 2 samples".into()));
        }
        let (mut mean, mut m2) = (0.0, 0.0);
        for (k, &x) in values.iter().enumerate() {
            let d = x - mean;
            mean += d / (k + 1) as f64;
            m2 += d * (x - mean);
        }
        let n = values.len();
        let var = m2 / (n - 1) as f64;
        Ok(Estimate {
            mean,
            stderr: (var / n as f64).sqrt(),
            n,
            seed,
        })
    }

    /// `(mean − target)/stderr`, or 0 / ±∞ when the error vanishes.
    pub fn z(&self, target: f64) -> f64 {
        let d = self.mean - target;
        if self.stderr > 0.0 {
            d / self.stderr
        } else if d == 0.0 {
            0.0
        } else {
            d.signum() * f64::INFINITY
        }
    }
}

fn one_sample(fop: &FieldOperator, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, index);
    let z = normals(&mut rng, fop.dim());
    fop.factor().whiten_inverse(&z).as_slice().to_vec()
}

/// `n` draws `Φ = R⁻ᵀz` with `S = RRᵀ` and `z` standard normal.
pub fn sample_field(fop: &FieldOperator, seed: u64, n: usize) -> Result<Vec<FieldSample>> {
    fop.require_massive()?;
    Ok((0..n as u64)
        .into_par_iter()
        .map(|index| FieldSample {
            values: one_sample(fop, seed, index),
            seed,
            index,
        })
        .collect())
}

/// Monte Carlo estimate of `E[φ(f₁)…φ(f_k)]`.
pub fn mc_moment(fop: &FieldOperator, fs: &[TestVector], seed: u64, n: usize) -> Result<Estimate> {
    let p = Polynomial::plain(1.0, fs.to_vec())?;
    mc_expectation(fop, &p, seed, n)
}

/// Monte Carlo estimate of `∫ p dμ` for a plain polynomial.
pub fn mc_expectation(fop: &FieldOperator, p: &Polynomial, seed: u64, n: usize) -> Result<Estimate> {
    fop.require_massive()?;
    if p.ordering() != Ordering::Plain {
        return Err(Error::WrongOrdering { expected: "plain" });
    }
    let values: Vec<f64> = (0..n as u64)
        .into_par_iter()
        .map(|i| p.evaluate(&one_sample(fop, seed, i)))
        .collect::<Result<_>>()?;
    Estimate::from_values(&values, seed)
}

/// The law of the field given its values on `A`: the complement `c` is
/// Gaussian with mean `−S_cc⁻¹S_cA φ_A` and covariance `S_cc⁻¹`.
pub struct ConditionalGaussian<'a> {
    fop: &'a FieldOperator,
    region: Vec<usize>,
    outside: Vec<usize>,
    /// `(row in c, column in A, S entry)`.
    coupling: Vec<(usize, usize, f64)>,
    factor: Option<Factor>,
}

impl<'a> ConditionalGaussian<'a> {
    pub fn new(fop: &'a FieldOperator, region: &VertexSet) -> Result<Self> {
        fop.require_massive()?;
        let n = fop.dim();
        if let Some(&v) = region.iter().find(|&&v| v >= n) {
            return Err(Error::InvalidParameter(format!("vertex {v} out of range")));
        }
        let region_v: Vec<usize> = region.iter().copied().collect();
        let outside: Vec<usize> = (0..n).filter(|v| !region.contains(v)).collect();
        let mut pos = vec![usize::MAX; n];
        for (k, &v) in region_v.iter().enumerate() {
            pos[v] = k;
        }
        let mut coupling = Vec::new();
        for (r, &i) in outside.iter().enumerate() {
            for &(j, val) in fop.mesh().neighbors(i) {
                if pos[j] != usize::MAX {
                    coupling.push((r, pos[j], val));
                }
            }
        }
        let factor = if outside.is_empty() {
            None
        } else {
            Some(fop.block_factor(&outside)?)
        };
        Ok(ConditionalGaussian {
            fop,
            region: region_v,
            outside,
            coupling,
            factor,
        })
    }

    pub fn region(&self) -> &[usize] {
        &self.region
    }

    pub fn outside(&self) -> &[usize] {
        &self.outside
    }

    fn check(&self, phi_a: &[f64]) -> Result<()> {
        if phi_a.len() != self.region.len() {
            return Err(Error::Dimension {
                expected: self.region.len(),
                found: phi_a.len(),
            });
        }
        Ok(())
    }

    fn mean_outside(&self, phi_a: &[f64]) -> DVector<f64> {
        let mut rhs = DVector::zeros(self.outside.len());
        for &(r, a, val) in &self.coupling {
            rhs[r] -= val * phi_a[a];
        }
        match &self.factor {
            Some(f) if rhs.iter().any(|&x| x != 0.0) => f.solve(&rhs),
            _ => rhs,
        }
    }

    /// Conditional mean as a full configuration; equals `phi_a` on `A`.
    pub fn mean(&self, phi_a: &[f64]) -> Result<Vec<f64>> {
        self.check(phi_a)?;
        let mut out = vec![0.0; self.fop.dim()];
        for (k, &v) in self.region.iter().enumerate() {
            out[v] = phi_a[k];
        }
        let mu = self.mean_outside(phi_a);
        for (k, &v) in self.outside.iter().enumerate() {
            out[v] = mu[k];
        }
        Ok(out)
    }

    /// Draw `index` of the stream `seed` given `φ_A = phi_a`.
    pub fn sample(&self, phi_a: &[f64], seed: u64, index: u64) -> Result<Vec<f64>> {
        let mut out = self.mean(phi_a)?;
        if let Some(f) = &self.factor {
            let mut rng = stream_rng(seed, index);
            let x = f.whiten_inverse(&normals(&mut rng, self.outside.len()));
            for (k, &v) in self.outside.iter().enumerate() {
                out[v] += x[k];
            }
        }
        Ok(out)
    }
}

/// Monte Carlo estimate of `E[p | φ_A]` by sampling the conditional law.
/// `phi_a` lists the conditioned values in increasing vertex order.
pub fn mc_conditional_oracle(
    fop: &FieldOperator,
    region: &VertexSet,
    p: &Polynomial,
    phi_a: &[f64],
    seed: u64,
    n: usize,
) -> Result<Estimate> {
    if region.is_empty() || region.len() >= fop.dim() {
        return Err(Error::InvalidParameter(
            "conditioning region must be a nonempty proper subset".into(),
        ));
    }
    if p.ordering() != Ordering::Plain {
        return Err(Error::WrongOrdering { expected: "plain" });
    }
    let cond = ConditionalGaussian::new(fop, region)?;
    cond.check(phi_a)?;
    let values: Vec<f64> = (0..n as u64)
        .into_par_iter()
        .map(|i| p.evaluate(&cond.sample(phi_a, seed, i)?))
        .collect::<Result<_>>()?;
    Estimate::from_values(&values, seed)
}
