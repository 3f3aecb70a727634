//! Interacting fields `dν = e^{−V} dμ / Z` with a Wick-ordered polynomial
//! potential `V_A(Φ) = Σ_{i∈A} W_i :P(Φ_i):_{c_i}`, `c_i = (S⁻¹)_ii`.
//!
//! Expectations under `ν` are importance-weighted averages over free-field
//! draws. Conditional expectations use
//! `E^ν_A F = E_A(F e^{−V_{Aᶜ}}) / E_A(e^{−V_{Aᶜ}})` with the Gaussian
//! conditional law of [`ConditionalGaussian`].

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::mesh::{RegionPartition, VertexSet};
use crate::sobolev::FieldOperator;
use crate::wick::{derive_seed, stream_rng, ConditionalGaussian, Ordering, Polynomial};

/// Below this effective sample size an estimate is flagged as degenerate.
pub const MIN_ESS: f64 = 10.0;

/// `:x^n:_c = c^{n/2} He_n(x/√c)` by the recursion
/// `:x^{n+1}: = x·:x^n: − n c :x^{n−1}:`.
pub fn wick_power(x: f64, n: usize, c: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if n == 0 {
        return 1.0;
    }
    for k in 1..n {
        let next = x * cur - k as f64 * c * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Coefficients of `:x^n:_c` as a polynomial in `x`, lowest degree first.
pub fn wick_power_coefficients(n: usize, c: f64) -> Vec<f64> {
    let mut prev = vec![1.0];
    if n == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 1.0];
    for k in 1..n {
        let mut next = vec![0.0; k + 2];
        for (d, &a) in cur.iter().enumerate() {
            next[d + 1] += a;
        }
        for (d, &a) in prev.iter().enumerate() {
            next[d] -= k as f64 * c * a;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// A lower semi-bounded Wick-ordered potential on a vertex region.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    coeffs: Vec<f64>,
    active: Vec<bool>,
    variances: Vec<f64>,
    weights: Vec<f64>,
}

/// `P(x) = Σ coeffs[k] x^k`. The top nonzero coefficient must be positive
/// and of even degree; constants are always accepted.
pub fn wick_potential(fop: &FieldOperator, region: &VertexSet, coeffs: &[f64]) -> Result<Potential> {
    fop.require_massive()?;
    let n = fop.dim();
    if let Some(&v) = region.iter().find(|&&v| v >= n) {
        return Err(Error::InvalidParameter(format!("vertex {v} out of range")));
    }
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::Potential("coefficients must be finite".into()));
    }
    let mut coeffs = coeffs.to_vec();
    while coeffs.last() == Some(&0.0) {
        coeffs.pop();
    }
    let top = coeffs.len().saturating_sub(1);
    if top > 0 {
        if top % 2 == 1 {
            return Err(Error::Potential(format!("top degree {top} is odd")));
        }
        if coeffs[top] < 0.0 {
            return Err(Error::Potential(format!(
                "leading coefficient {} is negative",
                coeffs[top]
            )));
        }
    }
    let cov = fop.covariance();
    Ok(Potential {
        coeffs,
        active: (0..n).map(|v| region.contains(&v)).collect(),
        variances: (0..n).map(|i| cov[(i, i)]).collect(),
        weights: fop.mesh().mass().to_vec(),
    })
}

impl Potential {
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn region(&self) -> VertexSet {
        (0..self.active.len()).filter(|&v| self.active[v]).collect()
    }

    /// `:P(x):_c`.
    pub fn local(&self, x: f64, c: f64) -> f64 {
        if self.coeffs.is_empty() {
            return 0.0;
        }
        let (mut prev, mut cur) = (1.0, x);
        let mut total = self.coeffs[0];
        for (k, &a) in self.coeffs.iter().enumerate().skip(1) {
            if k > 1 {
                let next = x * cur - (k - 1) as f64 * c * prev;
                prev = cur;
                cur = next;
            }
            total += a * cur;
        }
        total
    }

    /// `V_A(Φ)`.
    pub fn evaluate(&self, phi: &[f64]) -> f64 {
        (0..self.active.len())
            .filter(|&i| self.active[i])
            .map(|i| self.weights[i] * self.local(phi[i], self.variances[i]))
            .sum()
    }

    /// The same potential on `region ∩ self.region()`.
    pub fn restricted(&self, region: &VertexSet) -> Potential {
        let mut out = self.clone();
        for (v, a) in out.active.iter_mut().enumerate() {
            *a = *a && region.contains(&v);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty() || !self.active.iter().any(|&a| a)
    }
}

/// Where a potential lives, as written in scenario files: a vertex list or
/// the string `"all"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RegionSpec {
    Named(AllVertices),
    Vertices(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllVertices {
    All,
}

impl RegionSpec {
    pub fn resolve(&self, n: usize) -> VertexSet {
        match self {
            RegionSpec::Named(AllVertices::All) => (0..n).collect(),
            RegionSpec::Vertices(v) => v.iter().copied().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub coeffs: Vec<f64>,
    #[serde(default = "all_region")]
    pub region: RegionSpec,
    #[serde(default = "unit")]
    pub lambda: f64,
}

fn all_region() -> RegionSpec {
    RegionSpec::Named(AllVertices::All)
}

fn unit() -> f64 {
    1.0
}

impl PotentialSpec {
    /// `λ·P` on the resolved region.
    pub fn build(&self, fop: &FieldOperator) -> Result<Potential> {
        let scaled: Vec<f64> = self.coeffs.iter().map(|c| c * self.lambda).collect();
        wick_potential(fop, &self.region.resolve(fop.dim()), &scaled)
    }
}

/// Monte Carlo settings. Stochastic steps always carry a seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub seed: u64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuEstimate {
    pub value: f64,
    pub stderr: f64,
    /// Number of batches.
    pub n_outer: usize,
    /// Draws per batch.
    pub n_inner: usize,
    pub seed: u64,
    /// `(Σw)² / Σw²`.
    pub ess: f64,
    pub degenerate: bool,
}

impl NuEstimate {
    pub fn z(&self, target: f64) -> f64 {
        let d = self.value - target;
        if self.stderr > 0.0 {
            d / self.stderr
        } else if d == 0.0 {
            0.0
        } else {
            d.signum() * f64::INFINITY
        }
    }
}

fn batch_count(n: usize) -> usize {
    (n / 10).clamp(2, 50)
}

/// Weighted mean of `values` with log-weights `logw`, batch-means stderr.
///
/// The running weighted mean `m += (w/W)(x − m)` returns a constant sample
/// exactly, so `E^ν[1] = 1` holds without rounding.
fn weighted_estimate(values: &[f64], logw: &[f64], seed: u64) -> Result<NuEstimate> {
    let n = values.len();
    if n < 4 {
        return Err(Error::InvalidParameter("importance estimates need at least 4 draws".into()));
    }
    let shift = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return Err(Error::Potential("all importance weights vanish".into()));
    }
    let w: Vec<f64> = logw.iter().map(|l| (l - shift).exp()).collect();
    let running = |range: std::ops::Range<usize>| {
        let (mut m, mut total) = (0.0, 0.0);
        for i in range {
            if w[i] > 0.0 {
                total += w[i];
                m += (w[i] / total) * (values[i] - m);
            }
        }
        m
    };
    let value = running(0..n);
    let b = batch_count(n);
    let size = n / b;
    let means: Vec<f64> = (0..b).map(|k| running(k * size..(k + 1) * size)).collect();
    let (mut bm, mut m2) = (0.0, 0.0);
    for (k, &x) in means.iter().enumerate() {
        let d = x - bm;
        bm += d / (k + 1) as f64;
        m2 += d * (x - bm);
    }
    let stderr = (m2 / (b - 1) as f64 / b as f64).sqrt();
    let sw: f64 = w.iter().sum();
    let sw2: f64 = w.iter().map(|x| x * x).sum();
    let ess = sw * sw / sw2;
    Ok(NuEstimate {
        value,
        stderr,
        n_outer: b,
        n_inner: size,
        seed,
        ess,
        degenerate: ess < MIN_ESS,
    })
}

fn require_plain(f: &Polynomial) -> Result<()> {
    if f.ordering() != Ordering::Plain {
        return Err(Error::WrongOrdering { expected: "plain" });
    }
    Ok(())
}

/// `E^ν[F] = E[F e^{−V}] / E[e^{−V}]`.
pub fn nu_moment(fop: &FieldOperator, pot: &Potential, f: &Polynomial, mc: McConfig) -> Result<NuEstimate> {
    require_plain(f)?;
    nu_conditional(fop, pot, &VertexSet::new(), f, &[], mc)
}

/// `E^ν_A F` at `φ_A = phi_a` (values in increasing vertex order), from
/// conditional free-field draws reweighted by `e^{−V_{Aᶜ}}`.
pub fn nu_conditional(
    fop: &FieldOperator,
    pot: &Potential,
    region: &VertexSet,
    f: &Polynomial,
    phi_a: &[f64],
    mc: McConfig,
) -> Result<NuEstimate> {
    require_plain(f)?;
    let cond = ConditionalGaussian::new(fop, region)?;
    let outside: VertexSet = cond.outside().iter().copied().collect();
    let v_out = pot.restricted(&outside);
    let draws: Vec<(f64, f64)> = (0..mc.n as u64)
        .into_par_iter()
        .map(|i| {
            let phi = cond.sample(phi_a, mc.seed, i)?;
            Ok((f.evaluate(&phi)?, -v_out.evaluate(&phi)))
        })
        .collect::<Result<_>>()?;
    let (values, logw): (Vec<f64>, Vec<f64>) = draws.into_iter().unzip();
    weighted_estimate(&values, &logw, mc.seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkovMc {
    pub seed: u64,
    pub n_outer: usize,
    pub n_inner: usize,
    /// Free-field draws per selected configuration in the outer pool.
    #[serde(default = "pool_factor")]
    pub pool_factor: usize,
}

fn pool_factor() -> usize {
    20
}

/// One outer configuration: the two conditional expectations and their
/// difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkovRow {
    pub config: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub diff: f64,
    pub stderr: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovReport {
    pub rows: Vec<MarkovRow>,
    /// `Σ z_k / √K`.
    pub pooled_z: f64,
    /// Effective size of the outer importance pool.
    pub outer_ess: f64,
    /// Smallest effective size among the inner estimates.
    pub min_inner_ess: f64,
    pub degenerate: bool,
    pub seed: u64,
}

impl MarkovReport {
    pub fn csv(&self) -> String {
        let mut s = String::from("config,lhs,rhs,diff,stderr,z\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{:e},{:e},{:e},{:e},{:e}\n",
                r.config, r.lhs, r.rhs, r.diff, r.stderr, r.z
            ));
        }
        s
    }
}

/// Draws configurations from `ν` by importance resampling and compares
/// conditioning on `Ωᶜ` with conditioning on `∂Ω` alone.
pub fn nu_markov_report(
    fop: &FieldOperator,
    pot: &Potential,
    partition: &RegionPartition,
    f: &Polynomial,
    mc: MarkovMc,
) -> Result<MarkovReport> {
    require_plain(f)?;
    partition.validate(fop.mesh())?;
    f.require_support(&partition.closure(), "F")?;
    if mc.n_outer < 2 || mc.n_inner < 4 || mc.pool_factor < 1 {
        return Err(Error::InvalidParameter(
            "need n_outer >= 2, n_inner >= 4 and pool_factor >= 1".into(),
        ));
    }
    let pool_seed = derive_seed(mc.seed, 0x706f6f6c);
    let pool_n = mc.n_outer * mc.pool_factor;
    let pool_fop = ConditionalGaussian::new(fop, &VertexSet::new())?;
    let pool: Vec<(Vec<f64>, f64)> = (0..pool_n as u64)
        .into_par_iter()
        .map(|i| {
            let phi = pool_fop.sample(&[], pool_seed, i)?;
            let lw = -pot.evaluate(&phi);
            Ok((phi, lw))
        })
        .collect::<Result<_>>()?;
    let shift = pool.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = pool.iter().map(|p| (p.1 - shift).exp()).collect();
    let total: f64 = w.iter().sum();
    let outer_ess = total * total / w.iter().map(|x| x * x).sum::<f64>();
    let mut cdf = Vec::with_capacity(pool_n);
    let mut acc = 0.0;
    for x in &w {
        acc += x / total;
        cdf.push(acc);
    }
    let mut rng = stream_rng(derive_seed(mc.seed, 0x73656c), 0);
    let picks: Vec<usize> = (0..mc.n_outer)
        .map(|_| {
            let u: f64 = rng.gen::<f64>() * acc;
            cdf.partition_point(|&c| c < u).min(pool_n - 1)
        })
        .collect();

    let complement = partition.complement();
    let boundary = &partition.boundary;
    let restrict = |phi: &[f64], a: &VertexSet| a.iter().map(|&v| phi[v]).collect::<Vec<f64>>();
    let rows: Vec<(MarkovRow, f64)> = picks
        .par_iter()
        .enumerate()
        .map(|(k, &p)| {
            let phi = &pool[p].0;
            let lhs = nu_conditional(
                fop,
                pot,
                &complement,
                f,
                &restrict(phi, &complement),
                McConfig {
                    seed: derive_seed(mc.seed, 2 * k as u64 + 1),
                    n: mc.n_inner,
                },
            )?;
            let rhs = nu_conditional(
                fop,
                pot,
                boundary,
                f,
                &restrict(phi, boundary),
                McConfig {
                    seed: derive_seed(mc.seed, 2 * k as u64 + 2),
                    n: mc.n_inner,
                },
            )?;
            let diff = lhs.value - rhs.value;
            let stderr = lhs.stderr.hypot(rhs.stderr);
            let z = if stderr > 0.0 {
                diff / stderr
            } else if diff == 0.0 {
                0.0
            } else {
                diff.signum() * f64::INFINITY
            };
            let row = MarkovRow {
                config: k,
                lhs: lhs.value,
                rhs: rhs.value,
                diff,
                stderr,
                z,
            };
            Ok((row, lhs.ess.min(rhs.ess)))
        })
        .collect::<Result<_>>()?;
    let min_inner_ess = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let rows: Vec<MarkovRow> = rows.into_iter().map(|r| r.0).collect();
    let pooled_z = rows.iter().map(|r| r.z).sum::<f64>() / (rows.len() as f64).sqrt();
    Ok(MarkovReport {
        rows,
        pooled_z,
        outer_ess,
        min_inner_ess,
        degenerate: outer_ess < MIN_ESS || min_inner_ess < MIN_ESS,
        seed: mc.seed,
    })
}

/// Kolmogorov–Smirnov p-value of `samples` against the standard normal,
/// with Stephens' finite-sample correction of the statistic.
pub fn ks_normal_pvalue(samples: &[f64]) -> f64 {
    let n = samples.len();
    if n == 0 {
        return 1.0;
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / n as f64).max((i + 1) as f64 / n as f64 - f)
        })
        .fold(0.0, f64::max);
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    kolmogorov_q(lambda)
}

/// `Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
