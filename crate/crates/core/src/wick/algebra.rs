use nalgebra::{DMatrix, DVector};

use super::{Ordering, Polynomial};
use crate::error::{Error, Result};
use crate::mesh::{Involution, VertexSet};
use crate::sobolev::{FieldOperator, Projector, TestVector};

/// Largest degree accepted by the pairing enumerations.
pub const DEGREE_CAP: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Wick,
    Plain,
}

/// A linear map on test vectors, applied factorwise by [`apply_gamma`].
pub trait LinearMap {
    fn map(&self, f: &[f64]) -> TestVector;
}

impl LinearMap for Projector {
    fn map(&self, f: &[f64]) -> TestVector {
        self.apply(f)
    }
}

impl LinearMap for DMatrix<f64> {
    fn map(&self, f: &[f64]) -> TestVector {
        let y = self * DVector::from_column_slice(f);
        TestVector::new(y.as_slice().to_vec())
    }
}

/// `θ_*`.
impl LinearMap for Involution {
    fn map(&self, f: &[f64]) -> TestVector {
        TestVector::new(self.push_forward(f))
    }
}

pub struct FnMap<F>(pub F);

impl<F: Fn(&[f64]) -> TestVector> LinearMap for FnMap<F> {
    fn map(&self, f: &[f64]) -> TestVector {
        (self.0)(f)
    }
}

/// `T∘S`: applies `.1` first.
pub struct Compose<'a>(pub &'a dyn LinearMap, pub &'a dyn LinearMap);

impl LinearMap for Compose<'_> {
    fn map(&self, f: &[f64]) -> TestVector {
        self.0.map(&self.1.map(f))
    }
}

pub(crate) fn check_context(fop: &FieldOperator, p: &Polynomial) -> Result<()> {
    match p.ordering() {
        Ordering::Wick(c) if c == fop.context() => match p.dim() {
            Some(n) if n != fop.dim() => Err(Error::Dimension {
                expected: fop.dim(),
                found: n,
            }),
            _ => Ok(()),
        },
        Ordering::Wick(c) => Err(Error::ContextMismatch {
            expected: fop.context().0,
            found: c.0,
        }),
        Ordering::Plain => Err(Error::WrongOrdering { expected: "Wick" }),
    }
}

fn check_degree(degree: usize) -> Result<()> {
    if degree > DEGREE_CAP {
        return Err(Error::DegreeTooHigh {
            degree,
            cap: DEGREE_CAP,
        });
    }
    Ok(())
}

fn gram(fop: &FieldOperator, a: &[&TestVector], b: &[&TestVector]) -> Result<Vec<Vec<f64>>> {
    let solved: Vec<Vec<f64>> = b.iter().map(|g| fop.solve(g)).collect::<Result<_>>()?;
    a.iter()
        .map(|f| {
            fop.check_dim(f)?;
            if fop.mass() == 0.0 {
                fop.check_mean_zero(f)?;
            }
            Ok(solved.iter().map(|s| f.dot(s)).collect())
        })
        .collect()
}

/// Permanent by dynamic programming over column subsets.
fn permanent(m: &[Vec<f64>]) -> f64 {
    let k = m.len();
    let mut dp = vec![0.0; 1 << k];
    dp[0] = 1.0;
    for mask in 0usize..(1 << k) {
        let row = mask.count_ones() as usize;
        if row >= k || dp[mask] == 0.0 {
            continue;
        }
        for (j, &x) in m[row].iter().enumerate() {
            if mask & (1 << j) == 0 {
                dp[mask | (1 << j)] += dp[mask] * x;
            }
        }
    }
    dp[(1 << k) - 1]
}

/// Hafnian of a symmetric matrix: the sum over perfect matchings.
fn hafnian(c: &[Vec<f64>]) -> f64 {
    let k = c.len();
    if k % 2 == 1 {
        return 0.0;
    }
    let mut memo = vec![f64::NAN; 1 << k];
    fn go(mask: usize, c: &[Vec<f64>], memo: &mut [f64]) -> f64 {
        if mask == 0 {
            return 1.0;
        }
        if !memo[mask].is_nan() {
            return memo[mask];
        }
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut total = 0.0;
        let mut bits = rest;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            if c[i][j] != 0.0 {
                total += c[i][j] * go(rest & !(1 << j), c, memo);
            }
        }
        memo[mask] = total;
        total
    }
    go((1 << k) - 1, c, &mut memo)
}

/// `E[φ(f₁)…φ(f_n)]`: zero for odd `n`, else the sum over pairings of
/// products of `(f_i, f_j)₋₁`.
pub fn gaussian_moment(fop: &FieldOperator, fs: &[TestVector]) -> Result<f64> {
    check_degree(fs.len())?;
    if fs.len() % 2 == 1 {
        for f in fs {
            fop.check_dim(f)?;
        }
        return Ok(0.0);
    }
    let refs: Vec<&TestVector> = fs.iter().collect();
    Ok(hafnian(&gram(fop, &refs, &refs)?))
}

/// `∫ p dμ` for a plain or Wick polynomial. Wick monomials of positive
/// degree integrate to zero.
pub fn expectation(fop: &FieldOperator, p: &Polynomial) -> Result<f64> {
    match p.ordering() {
        Ordering::Wick(_) => {
            check_context(fop, p)?;
            Ok(p.constant_term())
        }
        Ordering::Plain => {
            let mut total = 0.0;
            for (c, fs) in p.terms() {
                let owned: Vec<TestVector> = fs.into_iter().cloned().collect();
                total += c * gaussian_moment(fop, &owned)?;
            }
            Ok(total)
        }
    }
}

/// `∫ a·b dμ` for Wick polynomials: monomials of different degree are
/// orthogonal, equal degrees pair to the permanent of `(f_i, g_j)₋₁`.
pub fn wick_inner(fop: &FieldOperator, a: &Polynomial, b: &Polynomial) -> Result<f64> {
    check_context(fop, a)?;
    check_context(fop, b)?;
    check_degree(a.degree())?;
    check_degree(b.degree())?;
    let mut total = 0.0;
    for (ca, fa) in a.terms() {
        for (cb, fb) in b.terms() {
            if fa.len() != fb.len() {
                continue;
            }
            total += ca * cb * permanent(&gram(fop, &fa, &fb)?);
        }
    }
    Ok(total)
}

/// Visits every partial matching of `0..k` with the unmatched indices and
/// the list of matched pairs.
fn partial_matchings(k: usize, visit: &mut dyn FnMut(&[usize], &[(usize, usize)])) {
    fn go(
        i: usize,
        k: usize,
        used: &mut Vec<bool>,
        free: &mut Vec<usize>,
        pairs: &mut Vec<(usize, usize)>,
        visit: &mut dyn FnMut(&[usize], &[(usize, usize)]),
    ) {
        if i == k {
            visit(free, pairs);
            return;
        }
        if used[i] {
            go(i + 1, k, used, free, pairs, visit);
            return;
        }
        free.push(i);
        go(i + 1, k, used, free, pairs, visit);
        free.pop();
        for j in i + 1..k {
            if !used[j] {
                used[j] = true;
                pairs.push((i, j));
                go(i + 1, k, used, free, pairs, visit);
                pairs.pop();
                used[j] = false;
            }
        }
    }
    go(0, k, &mut vec![false; k], &mut Vec::new(), &mut Vec::new(), visit);
}

/// Re-expresses `p` in the other ordering by covariance contractions:
/// `φ(f₁)…φ(f_n) = Σ Π(f_i,f_j)₋₁ :rest:` and
/// `:φ(f₁)…φ(f_n): = Σ (−1)^{#pairs} Π(f_i,f_j)₋₁ rest`, both sums running
/// over partial matchings.
pub fn convert(fop: &FieldOperator, p: &Polynomial, target: Target) -> Result<Polynomial> {
    let (sign, out_ordering) = match (p.ordering(), target) {
        (Ordering::Plain, Target::Plain) => return Ok(p.clone()),
        (Ordering::Wick(_), Target::Wick) => {
            check_context(fop, p)?;
            return Ok(p.clone());
        }
        (Ordering::Plain, Target::Wick) => (1.0, Ordering::Wick(fop.context())),
        (Ordering::Wick(_), Target::Plain) => {
            check_context(fop, p)?;
            (-1.0, Ordering::Plain)
        }
    };
    check_degree(p.degree())?;
    let mut out = Polynomial::zero(out_ordering);
    for (c, fs) in p.terms() {
        let g = gram(fop, &fs, &fs)?;
        let mut err = None;
        partial_matchings(fs.len(), &mut |free, pairs| {
            let weight: f64 = pairs.iter().map(|&(i, j)| g[i][j]).product();
            let s = if pairs.len() % 2 == 1 { sign } else { 1.0 };
            let factors: Vec<TestVector> = free.iter().map(|&i| fs[i].clone()).collect();
            if let Err(e) = out.add_term(c * s * weight, factors) {
                err.get_or_insert(e);
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
    }
    Ok(out)
}

/// `Γ(T)`: `:φ(f₁)…φ(f_k): ↦ :φ(Tf₁)…φ(Tf_k):`, extended linearly. The
/// context tag is kept.
pub fn apply_gamma(t: &dyn LinearMap, p: &Polynomial) -> Result<Polynomial> {
    if p.ordering() == Ordering::Plain {
        return Err(Error::WrongOrdering { expected: "Wick" });
    }
    map_factors(t, p)
}

pub(crate) fn map_factors(t: &dyn LinearMap, p: &Polynomial) -> Result<Polynomial> {
    let mut out = Polynomial::zero(p.ordering());
    for (c, fs) in p.terms() {
        out.add_term(c, fs.into_iter().map(|f| t.map(f)).collect())?;
    }
    Ok(out)
}

/// `E_A = Γ(e_A)`, the conditional expectation onto fields in `A`.
pub fn conditional_expectation(
    fop: &FieldOperator,
    region: &VertexSet,
    p: &Polynomial,
) -> Result<Polynomial> {
    check_context(fop, p)?;
    let e = fop.projector(region)?;
    apply_gamma(&e, p)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::mesh::{build_mesh, Mesh, MeshSpec};

    fn torus(m: f64) -> FieldOperator {
        let mesh = build_mesh(&MeshSpec::TorusLattice {
            nx: 3,
            ny: 3,
            spacing: 1.0,
        })
        .unwrap();
        FieldOperator::assemble(Arc::new(mesh), m).unwrap()
    }

    fn vec_of(n: usize, seed: usize) -> TestVector {
        TestVector::new((0..n).map(|i| (((i + 3) * (seed + 7)) % 5) as f64 - 2.0).collect())
    }

    #[test]
    fn permanent_and_hafnian_small_cases() {
        assert_eq!(permanent(&[vec![1.0, 2.0], vec![3.0, 4.0]]), 10.0);
        let c = vec![
            vec![1.0, 2.0, 3.0, 4.0],
            vec![2.0, 1.0, 5.0, 6.0],
            vec![3.0, 5.0, 1.0, 7.0],
            vec![4.0, 6.0, 7.0, 1.0],
        ];
        // c01 c23 + c02 c13 + c03 c12
        assert_eq!(hafnian(&c), 2.0 * 7.0 + 3.0 * 6.0 + 4.0 * 5.0);
    }

    #[test]
    fn moments_low_order() {
        let fop = torus(1.0);
        let (f, g) = (vec_of(9, 1), vec_of(9, 2));
        assert_eq!(gaussian_moment(&fop, &[f.clone()]).unwrap(), 0.0);
        assert_eq!(
            gaussian_moment(&fop, &[f.clone(), g.clone(), f.clone()]).unwrap(),
            0.0
        );
        let c = fop.pairing(&f, &g).unwrap();
        assert!((gaussian_moment(&fop, &[f.clone(), g.clone()]).unwrap() - c).abs() < 1e-15);
        let cff = fop.pairing(&f, &f).unwrap();
        let m4 = gaussian_moment(&fop, &[f.clone(), f.clone(), f.clone(), f.clone()]).unwrap();
        assert!((m4 - 3.0 * cff * cff).abs() < 1e-12 * m4);
        assert!(matches!(
            gaussian_moment(&fop, &vec![f; 10]),
            Err(Error::DegreeTooHigh { degree: 10, .. })
        ));
    }

    #[test]
    fn degree_two_wick_pairing() {
        let fop = torus(0.8);
        let fs: Vec<TestVector> = (0..4).map(|s| vec_of(9, s)).collect();
        let a = Polynomial::wick(&fop, 1.0, vec![fs[0].clone(), fs[1].clone()]).unwrap();
        let b = Polynomial::wick(&fop, 1.0, vec![fs[2].clone(), fs[3].clone()]).unwrap();
        let p = |i: usize, j: usize| fop.pairing(&fs[i], &fs[j]).unwrap();
        let expected = p(0, 2) * p(1, 3) + p(0, 3) * p(1, 2);
        assert!((wick_inner(&fop, &a, &b).unwrap() - expected).abs() < 1e-13);
        let c = Polynomial::wick(&fop, 1.0, vec![fs[2].clone()]).unwrap();
        assert_eq!(wick_inner(&fop, &a, &c).unwrap(), 0.0);
        let k = Ordering::Wick(fop.context());
        let one = wick_inner(&fop, &Polynomial::constant(k, 2.0), &Polynomial::constant(k, 3.0));
        assert_eq!(one.unwrap(), 6.0);
    }

    #[test]
    fn context_mismatch_rejected() {
        let (a, b) = (torus(1.0), torus(2.0));
        let p = Polynomial::wick(&a, 1.0, vec![vec_of(9, 1)]).unwrap();
        assert!(matches!(
            wick_inner(&b, &p, &p),
            Err(Error::ContextMismatch { .. })
        ));
        let q = Polynomial::plain(1.0, vec![vec_of(9, 1)]).unwrap();
        assert!(matches!(
            wick_inner(&a, &q, &q),
            Err(Error::WrongOrdering { .. })
        ));
    }

    #[test]
    fn wick_square_subtracts_covariance() {
        let fop = torus(1.0);
        let (f, g) = (vec_of(9, 3), vec_of(9, 4));
        let w = Polynomial::wick(&fop, 1.0, vec![f.clone(), g.clone()]).unwrap();
        let plain = convert(&fop, &w, Target::Plain).unwrap();
        let mut expected = Polynomial::plain(1.0, vec![f.clone(), g.clone()]).unwrap();
        expected
            .add_term(-fop.pairing(&f, &g).unwrap(), Vec::<TestVector>::new())
            .unwrap();
        assert_eq!(plain, expected);
    }

    #[test]
    fn wick_fourth_power_is_hermite() {
        let fop = torus(1.0);
        let f = vec_of(9, 5);
        let c = fop.pairing(&f, &f).unwrap();
        let w = Polynomial::wick(&fop, 1.0, vec![f.clone(); 4]).unwrap();
        let plain = convert(&fop, &w, Target::Plain).unwrap();
        // He₄(x) = x⁴ − 6x² + 3, scaled: c²He₄(φ/√c).
        let mut he4 = Polynomial::plain(1.0, vec![f.clone(); 4]).unwrap();
        he4.add_term(-6.0 * c, vec![f.clone(); 2]).unwrap();
        he4.add_term(3.0 * c * c, Vec::<TestVector>::new()).unwrap();
        assert!(plain.sub(&he4).unwrap().terms().all(|(x, _)| x.abs() < 1e-12));
    }

    #[test]
    fn massless_moment_requires_mean_zero() {
        let fop = torus(0.0);
        let f = vec_of(9, 1);
        assert!(matches!(
            gaussian_moment(&fop, &[f.clone(), f.clone()]),
            Err(Error::NotMeanZero(_))
        ));
        let g = f.mean_zero(fop.mesh());
        let m = gaussian_moment(&fop, &[g.clone(), g.clone()]).unwrap();
        assert!(m > 0.0);
    }

    #[test]
    fn gamma_identity_and_full_region() {
        let fop = torus(1.0);
        let p = Polynomial::wick(&fop, 2.0, vec![vec_of(9, 1), vec_of(9, 2)]).unwrap();
        let id = FnMap(|f: &[f64]| TestVector::new(f.to_vec()));
        assert_eq!(apply_gamma(&id, &p).unwrap(), p);
        let all: VertexSet = (0..9).collect();
        assert_eq!(conditional_expectation(&fop, &all, &p).unwrap(), p);
    }

    #[test]
    fn conditional_expectation_is_factorwise_projection() {
        let mesh = Arc::new(Mesh::from_weighted_edges(3, [(0, 1, 1.0), (1, 2, 1.0)], vec![1.0; 3]).unwrap());
        let fop = FieldOperator::assemble(mesh, 1.0).unwrap();
        let (f, g) = (TestVector::delta(3, 2), TestVector::new(vec![0.0, 1.0, 1.0]));
        let p = Polynomial::wick(&fop, 1.0, vec![f.clone(), g.clone()]).unwrap();
        let a = VertexSet::from([0, 1]);
        let e = fop.projector(&a).unwrap();
        let got = conditional_expectation(&fop, &a, &p).unwrap();
        let expected = Polynomial::wick(&fop, 1.0, vec![e.apply(&f), e.apply(&g)]).unwrap();
        assert_eq!(got, expected);
        let twice = conditional_expectation(&fop, &a, &got).unwrap();
        assert!(twice.coefficient_distance(&got).unwrap() < 1e-14);
    }
}
