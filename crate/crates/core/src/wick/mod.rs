//! Polynomials in the field, Wick-ordered or plain, and the Gaussian
//! measure they are integrated against.
//!
//! A monomial is a multiset of test vectors `{f₁,…,f_k}` standing for
//! `:φ(f₁)…φ(f_k):` (Wick) or `φ(f₁)…φ(f_k)` (plain). Vectors are interned
//! per polynomial by their bit pattern, and a monomial key is the sorted list
//! of intern ids.

mod algebra;
mod sampling;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

pub use algebra::{
    apply_gamma, conditional_expectation, convert, expectation, gaussian_moment, wick_inner,
    Compose, FnMap, LinearMap, Target, DEGREE_CAP,
};
pub(crate) use algebra::{check_context, map_factors};
pub use sampling::{
    derive_seed, mc_conditional_oracle, mc_expectation, mc_moment, sample_field, stream_rng,
    ConditionalGaussian, Estimate, FieldSample,
};

use crate::error::{Error, Result};
use crate::mesh::VertexSet;
use crate::sobolev::{ContextId, FieldOperator, TestVector};

/// Entries below this fraction of a vector's largest entry are dropped by
/// [`Polynomial::coordinate_expansion`].
pub const EXPANSION_CUTOFF: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ordering {
    Plain,
    Wick(ContextId),
}

/// One monomial with its factor vectors written out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermData {
    pub coef: f64,
    pub factors: Vec<TestVector>,
}

#[derive(Debug, Clone)]
pub struct Polynomial {
    ordering: Ordering,
    dim: Option<usize>,
    vectors: Vec<TestVector>,
    index: HashMap<Vec<u64>, usize>,
    terms: BTreeMap<Vec<usize>, f64>,
}

fn bits(f: &[f64]) -> Vec<u64> {
    f.iter().map(|x| (x + 0.0).to_bits()).collect()
}

impl Polynomial {
    pub fn zero(ordering: Ordering) -> Self {
        Polynomial {
            ordering,
            dim: None,
            vectors: Vec::new(),
            index: HashMap::new(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(ordering: Ordering, c: f64) -> Self {
        let mut p = Polynomial::zero(ordering);
        p.add_term(c, Vec::<TestVector>::new()).expect("constants have no factors");
        p
    }

    pub fn monomial(ordering: Ordering, coef: f64, factors: Vec<TestVector>) -> Result<Self> {
        let mut p = Polynomial::zero(ordering);
        p.add_term(coef, factors)?;
        Ok(p)
    }

    /// `coef·:φ(f₁)…φ(f_k):` ordered against `fop`.
    pub fn wick(fop: &FieldOperator, coef: f64, factors: Vec<TestVector>) -> Result<Self> {
        Polynomial::monomial(Ordering::Wick(fop.context()), coef, factors)
    }

    pub fn plain(coef: f64, factors: Vec<TestVector>) -> Result<Self> {
        Polynomial::monomial(Ordering::Plain, coef, factors)
    }

    /// `coef·φ_{i₁}…φ_{i_k}` in point-evaluation coordinates.
    pub fn coordinate(ordering: Ordering, n: usize, coef: f64, vertices: &[usize]) -> Result<Self> {
        if let Some(&v) = vertices.iter().find(|&&v| v >= n) {
            return Err(Error::InvalidParameter(format!("vertex {v} out of range")));
        }
        let factors = vertices.iter().map(|&v| TestVector::delta(n, v)).collect();
        Polynomial::monomial(ordering, coef, factors)
    }

    pub fn ordering(&self) -> Ordering {
        self.ordering
    }

    pub fn context(&self) -> Option<ContextId> {
        match self.ordering {
            Ordering::Wick(c) => Some(c),
            Ordering::Plain => None,
        }
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    fn intern(&mut self, f: TestVector) -> usize {
        let key = bits(&f);
        if let Some(&id) = self.index.get(&key) {
            return id;
        }
        let id = self.vectors.len();
        self.vectors.push(f);
        self.index.insert(key, id);
        id
    }

    /// Adds `coef` times the monomial in `factors`. Monomials with a zero
    /// factor vanish; coefficients that cancel to zero are pruned.
    pub fn add_term<F: Into<TestVector>>(&mut self, coef: f64, factors: Vec<F>) -> Result<()> {
        let factors: Vec<TestVector> = factors.into_iter().map(Into::into).collect();
        for f in &factors {
            match self.dim {
                Some(n) if n != f.len() => {
                    return Err(Error::Dimension {
                        expected: n,
                        found: f.len(),
                    })
                }
                None => self.dim = Some(f.len()),
                _ => {}
            }
        }
        if coef == 0.0 || factors.iter().any(|f| f.is_zero()) {
            return Ok(());
        }
        let mut key: Vec<usize> = factors.into_iter().map(|f| self.intern(f)).collect();
        key.sort_unstable();
        let entry = self.terms.entry(key.clone()).or_insert(0.0);
        *entry += coef;
        if *entry == 0.0 {
            self.terms.remove(&key);
        }
        Ok(())
    }

    /// Terms as `(coefficient, factors)`.
    pub fn terms(&self) -> impl Iterator<Item = (f64, Vec<&TestVector>)> + '_ {
        self.terms
            .iter()
            .map(|(k, &c)| (c, k.iter().map(|&i| &self.vectors[i]).collect()))
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest monomial degree; `0` for constants and the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    /// Coefficient of the degree-0 monomial.
    pub fn constant_term(&self) -> f64 {
        self.terms.get(&Vec::new()).copied().unwrap_or(0.0)
    }

    fn same_ordering(&self, other: &Polynomial) -> Result<()> {
        match (self.ordering, other.ordering) {
            (a, b) if a == b => Ok(()),
            (Ordering::Wick(a), Ordering::Wick(b)) => Err(Error::ContextMismatch {
                expected: a.0,
                found: b.0,
            }),
            (Ordering::Plain, _) => Err(Error::WrongOrdering { expected: "plain" }),
            (Ordering::Wick(_), _) => Err(Error::WrongOrdering { expected: "Wick" }),
        }
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial> {
        self.same_ordering(other)?;
        let mut out = self.clone();
        for (c, fs) in other.terms() {
            out.add_term(c, fs.into_iter().cloned().collect())?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Polynomial) -> Result<Polynomial> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        let mut out = Polynomial::zero(self.ordering);
        out.dim = self.dim;
        for (c, fs) in self.terms() {
            out.add_term(c * s, fs.into_iter().cloned().collect())
                .expect("same dimensions");
        }
        out
    }

    /// Product of plain polynomials. Wick products need a covariance; go
    /// through [`convert`].
    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial> {
        if self.ordering != Ordering::Plain || other.ordering != Ordering::Plain {
            return Err(Error::WrongOrdering { expected: "plain" });
        }
        let mut out = Polynomial::zero(Ordering::Plain);
        out.dim = self.dim.or(other.dim);
        for (a, fa) in self.terms() {
            for (b, fb) in other.terms() {
                let factors: Vec<TestVector> = fa.iter().chain(&fb).map(|&f| f.clone()).collect();
                out.add_term(a * b, factors)?;
            }
        }
        Ok(out)
    }

    /// Value of a plain polynomial at the field configuration `phi`.
    pub fn evaluate(&self, phi: &[f64]) -> Result<f64> {
        if self.ordering != Ordering::Plain {
            return Err(Error::WrongOrdering { expected: "plain" });
        }
        if let Some(n) = self.dim {
            if n != phi.len() {
                return Err(Error::Dimension {
                    expected: n,
                    found: phi.len(),
                });
            }
        }
        let values: Vec<f64> = self.vectors.iter().map(|f| f.dot(phi)).collect();
        Ok(self
            .terms
            .iter()
            .map(|(k, &c)| c * k.iter().map(|&i| values[i]).product::<f64>())
            .sum())
    }

    /// First vertex in the support of some factor that lies outside `region`.
    pub fn escapes(&self, region: &VertexSet) -> Option<usize> {
        self.terms
            .keys()
            .flatten()
            .filter_map(|&i| self.vectors[i].escapes(region))
            .min()
    }

    /// Errors with the offending vertex unless every factor is supported in
    /// `region`.
    pub fn require_support(&self, region: &VertexSet, what: &str) -> Result<()> {
        match self.escapes(region) {
            Some(vertex) => Err(Error::SupportViolation {
                what: what.to_string(),
                vertex,
            }),
            None => Ok(()),
        }
    }

    /// Union of the supports of all factors.
    pub fn support(&self) -> VertexSet {
        self.terms
            .keys()
            .flatten()
            .flat_map(|&i| self.vectors[i].support())
            .collect()
    }

    /// The same formal combination under another ordering tag. Moving a
    /// Wick polynomial to a different covariance changes the random variable
    /// it denotes.
    pub fn retagged(mut self, ordering: Ordering) -> Polynomial {
        self.ordering = ordering;
        self
    }

    pub fn to_terms(&self) -> Vec<TermData> {
        self.terms()
            .map(|(coef, fs)| TermData {
                coef,
                factors: fs.into_iter().cloned().collect(),
            })
            .collect()
    }

    pub fn from_terms(ordering: Ordering, terms: &[TermData]) -> Result<Polynomial> {
        let mut p = Polynomial::zero(ordering);
        for t in terms {
            p.add_term(t.coef, t.factors.clone())?;
        }
        Ok(p)
    }

    /// Rewrites every monomial over point evaluations `φ_i`: the result maps
    /// sorted vertex multisets to coefficients. Entries of a factor smaller
    /// than [`EXPANSION_CUTOFF`] times its largest entry are dropped; the
    /// second value bounds the coefficient mass lost that way.
    pub fn coordinate_expansion(&self) -> (BTreeMap<Vec<usize>, f64>, f64) {
        let mut out: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        let mut dropped = 0.0;
        let sparse: Vec<(Vec<(usize, f64)>, f64, f64)> = self
            .vectors
            .iter()
            .map(|f| {
                let max = f.max_abs();
                let kept: Vec<(usize, f64)> = f
                    .iter()
                    .enumerate()
                    .filter(|(_, &x)| x.abs() > EXPANSION_CUTOFF * max)
                    .map(|(i, &x)| (i, x))
                    .collect();
                let lost: f64 = f
                    .iter()
                    .filter(|x| x.abs() <= EXPANSION_CUTOFF * max)
                    .map(|x| x.abs())
                    .sum();
                let l1: f64 = f.iter().map(|x| x.abs()).sum();
                (kept, lost, l1)
            })
            .collect();
        for (key, &c) in &self.terms {
            // ‖⊗f_k − ⊗f̃_k‖₁ ≤ Σ_k lost_k Π_{j≠k} ‖f_j‖₁.
            let mut bound = 0.0;
            for (pos, &k) in key.iter().enumerate() {
                let others: f64 = key
                    .iter()
                    .enumerate()
                    .filter(|&(q, _)| q != pos)
                    .map(|(_, &j)| sparse[j].2)
                    .product();
                bound += sparse[k].1 * others;
            }
            dropped += c.abs() * bound;
            let mut stack: Vec<(Vec<usize>, f64)> = vec![(Vec::new(), c)];
            for &k in key {
                let mut next = Vec::with_capacity(stack.len() * sparse[k].0.len());
                for (idx, val) in &stack {
                    for &(i, x) in &sparse[k].0 {
                        let mut idx2 = idx.clone();
                        idx2.push(i);
                        next.push((idx2, val * x));
                    }
                }
                stack = next;
            }
            for (mut idx, val) in stack {
                idx.sort_unstable();
                *out.entry(idx).or_insert(0.0) += val;
            }
        }
        (out, dropped)
    }

    /// Largest coefficient difference in coordinate form, plus the expansion
    /// truncation bound of both sides.
    pub fn coefficient_distance(&self, other: &Polynomial) -> Result<f64> {
        self.same_ordering(other)?;
        let (a, da) = self.coordinate_expansion();
        let (b, db) = other.coordinate_expansion();
        let mut worst: f64 = 0.0;
        for (k, &x) in &a {
            worst = worst.max((x - b.get(k).copied().unwrap_or(0.0)).abs());
        }
        for (k, &y) in &b {
            if !a.contains_key(k) {
                worst = worst.max(y.abs());
            }
        }
        Ok(worst + da + db)
    }

    /// Largest absolute coefficient in coordinate form.
    pub fn coefficient_scale(&self) -> f64 {
        self.coordinate_expansion()
            .0
            .values()
            .fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Structural equality: same ordering and the same coefficient on every
/// multiset of factor vectors, compared bit for bit.
impl PartialEq for Polynomial {
    fn eq(&self, other: &Self) -> bool {
        let keyed = |p: &Polynomial| -> BTreeMap<Vec<Vec<u64>>, u64> {
            p.terms
                .iter()
                .map(|(k, c)| {
                    let mut fs: Vec<Vec<u64>> = k.iter().map(|&i| bits(&p.vectors[i])).collect();
                    fs.sort();
                    (fs, (c + 0.0).to_bits())
                })
                .collect()
        };
        self.ordering == other.ordering && keyed(self) == keyed(other)
    }
}
