//! Reflection positivity.
//!
//! An involution `θ` that swaps `Ω₊` with its exterior and fixes the
//! boundary `B` induces `Θ = Γ(θ_*)`. For polynomials `F_i` in fields
//! supported on `Ω₊ ∪ B` the Gram matrix `M_ij = ∫ Θ(F_i) F_j dμ` is
//! positive semidefinite.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{
    build_mesh, make_partition, mirror_permutation, validate_involution, Involution, Mesh,
    MeshSpec, VertexSet,
};
use crate::sobolev::{FieldOperator, TestVector};
use crate::wick::{apply_gamma, derive_seed, stream_rng, wick_inner, Ordering, Polynomial, TermData};

/// Default PSD slack relative to `‖M‖₂`.
pub const RP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassMode {
    /// `m > 0`; supports in `Ω₊ ∪ B`.
    #[default]
    Massive,
    /// `m = 0` with mean-zero vectors supported in `Ω₊`.
    ZeroMassLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramReport {
    pub mode: MassMode,
    pub mass: f64,
    pub matrix: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
    /// `‖M‖₂`.
    pub scale: f64,
    /// `max |M_ij − M_ji|`.
    pub asymmetry: f64,
    pub tolerance: f64,
    /// Eigenvalues with `|λ| ≤ tolerance·scale`: the null vectors of the
    /// reflected form within the family's span.
    pub null_dimension: usize,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
}

impl GramReport {
    pub fn matrix(&self) -> DMatrix<f64> {
        let k = self.matrix.len();
        DMatrix::from_fn(k, k, |i, j| self.matrix[i][j])
    }
}

/// `Θp = Γ(θ_*)p`.
pub fn reflect_poly(fop: &FieldOperator, inv: &Involution, p: &Polynomial) -> Result<Polynomial> {
    if inv.perm().len() != fop.dim() {
        return Err(Error::Dimension {
            expected: fop.dim(),
            found: inv.perm().len(),
        });
    }
    crate::wick::check_context(fop, p)?;
    apply_gamma(inv, p)
}

/// The reflected Gram matrix of `family`, after checking the support
/// precondition of `mode`.
pub fn rp_gram(
    fop: &FieldOperator,
    inv: &Involution,
    family: &[Polynomial],
    mode: MassMode,
) -> Result<GramReport> {
    let part = inv.partition();
    let allowed = match mode {
        MassMode::Massive => {
            fop.require_massive()?;
            part.closure()
        }
        MassMode::ZeroMassLimit => {
            if fop.mass() != 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "zero mass limit needs the massless operator, got m = {}",
                    fop.mass()
                )));
            }
            part.omega.clone()
        }
    };
    for (i, f) in family.iter().enumerate() {
        f.require_support(&allowed, &format!("family member {i}"))?;
        if mode == MassMode::ZeroMassLimit {
            for (_, fs) in f.terms() {
                for v in fs {
                    fop.check_mean_zero(v)?;
                }
            }
        }
    }
    rp_gram_unchecked(fop, inv, family, mode, RP_TOLERANCE)
}

/// [`rp_gram`] without the support check, for counterexample searches.
#[doc(hidden)]
pub fn rp_gram_unchecked(
    fop: &FieldOperator,
    inv: &Involution,
    family: &[Polynomial],
    mode: MassMode,
    tolerance: f64,
) -> Result<GramReport> {
    let reflected: Vec<Polynomial> = family
        .iter()
        .map(|p| reflect_poly(fop, inv, p))
        .collect::<Result<_>>()?;
    let k = family.len();
    let entries: Vec<f64> = (0..k * k)
        .into_par_iter()
        .map(|ij| wick_inner(fop, &reflected[ij / k], &family[ij % k]))
        .collect::<Result<_>>()?;
    let m = DMatrix::from_row_slice(k, k, &entries);
    Ok(summarize(m, mode, fop.mass(), tolerance))
}

pub(crate) fn summarize(m: DMatrix<f64>, mode: MassMode, mass: f64, tolerance: f64) -> GramReport {
    let k = m.nrows();
    let asymmetry = (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .map(|(i, j)| (m[(i, j)] - m[(j, i)]).abs())
        .fold(0.0, f64::max);
    let sym = (&m + m.transpose()) * 0.5;
    let mut eigenvalues: Vec<f64> = if k == 0 {
        Vec::new()
    } else {
        sym.symmetric_eigenvalues().iter().copied().collect()
    };
    eigenvalues.sort_by(f64::total_cmp);
    let scale = eigenvalues.iter().fold(0.0, |a: f64, x| a.max(x.abs()));
    let min_eigenvalue = eigenvalues.first().copied().unwrap_or(0.0);
    let null_dimension = eigenvalues
        .iter()
        .filter(|x| x.abs() <= tolerance * scale)
        .count();
    GramReport {
        mode,
        mass,
        matrix: (0..k).map(|i| (0..k).map(|j| m[(i, j)]).collect()).collect(),
        eigenvalues,
        min_eigenvalue,
        scale,
        asymmetry,
        tolerance,
        null_dimension,
        pass: min_eigenvalue >= -tolerance * scale,
        labels: Vec::new(),
    }
}

/// A closed mesh with a validated reflection.
#[derive(Debug, Clone)]
pub struct ReflectedMesh {
    pub mesh: Arc<Mesh>,
    pub involution: Involution,
}

/// Lattice torus reflected by `row ↦ −row mod ny`; `Ω₊` is rows
/// `1..ny/2`, the boundary rows `0` and `ny/2`.
pub fn reflected_torus(nx: usize, ny: usize) -> Result<ReflectedMesh> {
    if ny % 2 == 1 || ny < 4 {
        return Err(Error::InvalidParameter(format!(
            "reflected torus needs an even row count >= 4, got {ny}"
        )));
    }
    let mesh = build_mesh(&MeshSpec::TorusLattice {
        nx,
        ny,
        spacing: 1.0,
    })?;
    let perm: Vec<usize> = (0..nx * ny)
        .map(|v| ((ny - v / nx) % ny) * nx + v % nx)
        .collect();
    let omega: VertexSet = (nx..(ny / 2) * nx).collect();
    let part = make_partition(&mesh, &omega)?;
    let involution = validate_involution(&mesh, &perm, &part)?;
    Ok(ReflectedMesh {
        mesh: Arc::new(mesh),
        involution,
    })
}

/// Icosphere with a flat equator, reflected through `x = 0`; `Ω₊` is the
/// `x > 0` hemisphere.
pub fn reflected_icosphere(subdivisions: usize) -> Result<ReflectedMesh> {
    let mesh = build_mesh(&MeshSpec::IcosphereEquatorial { subdivisions })?;
    let perm = mirror_permutation(&mesh, 0)?;
    let pos = mesh.positions().expect("icosphere has positions");
    let omega: VertexSet = (0..mesh.vertex_count()).filter(|&v| pos[v][0] > 0.0).collect();
    let part = make_partition(&mesh, &omega)?;
    let involution = validate_involution(&mesh, &perm, &part)?;
    Ok(ReflectedMesh {
        mesh: Arc::new(mesh),
        involution,
    })
}

/// Random vector on up to four vertices of `region`, entries uniform in
/// `(-1, 1)`, made
/// mean-zero on its support when asked.
pub fn random_vector<R: Rng>(rng: &mut R, n: usize, region: &[usize], mean_zero: bool) -> TestVector {
    let k = rng.gen_range(1..=region.len().min(4)).max(if mean_zero { 2 } else { 1 });
    let k = k.min(region.len());
    let mut f = vec![0.0; n];
    let mut picked: Vec<usize> = Vec::with_capacity(k);
    while picked.len() < k {
        let v = region[rng.gen_range(0..region.len())];
        if !picked.contains(&v) {
            picked.push(v);
        }
    }
    for &v in &picked {
        f[v] = rng.gen_range(-1.0..1.0);
    }
    if mean_zero {
        let mean = picked.iter().map(|&v| f[v]).sum::<f64>() / k as f64;
        for &v in &picked {
            f[v] -= mean;
        }
    }
    TestVector::new(f)
}

/// A family of `size` Wick polynomials, each a sum of up to two monomials of
/// degree `0..=max_degree` in random vectors supported in `region`.
pub fn random_family(
    ordering: Ordering,
    n: usize,
    region: &VertexSet,
    size: usize,
    max_degree: usize,
    mean_zero: bool,
    seed: u64,
) -> Result<Vec<Polynomial>> {
    let region: Vec<usize> = region.iter().copied().collect();
    if region.is_empty() || (mean_zero && region.len() < 2) {
        return Err(Error::InvalidParameter("region too small for a random family".into()));
    }
    (0..size)
        .map(|i| {
            let mut rng = stream_rng(derive_seed(seed, 0x5250), i as u64);
            let mut p = Polynomial::zero(ordering);
            for _ in 0..rng.gen_range(1..=2) {
                let degree = rng.gen_range(0..=max_degree);
                let factors: Vec<TestVector> = (0..degree)
                    .map(|_| random_vector(&mut rng, n, &region, mean_zero))
                    .collect();
                p.add_term(rng.gen_range(0.5..1.5), factors)?;
            }
            Ok(p)
        })
        .collect()
}

/// A family violating the support precondition whose reflected Gram matrix
/// is indefinite, stored as a regression fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RpWitness {
    pub torus: (usize, usize),
    pub mass: f64,
    pub family: Vec<Vec<TermData>>,
    pub min_eigenvalue: f64,
    pub seed: u64,
}

impl RpWitness {
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<RpWitness> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Rebuilds the setup and recomputes the Gram report.
    pub fn replay(&self) -> Result<GramReport> {
        let rm = reflected_torus(self.torus.0, self.torus.1)?;
        let fop = FieldOperator::assemble(rm.mesh.clone(), self.mass)?;
        let ord = Ordering::Wick(fop.context());
        let family: Vec<Polynomial> = self
            .family
            .iter()
            .map(|t| Polynomial::from_terms(ord, t))
            .collect::<Result<_>>()?;
        rp_gram_unchecked(&fop, &rm.involution, &family, MassMode::Massive, RP_TOLERANCE)
    }
}

/// Random search over small degree-1 families whose factors may sit
/// anywhere on the mesh; returns the first indefinite one.
pub fn search_rp_counterexample(
    nx: usize,
    ny: usize,
    mass: f64,
    seed: u64,
    tries: usize,
) -> Result<Option<RpWitness>> {
    let rm = reflected_torus(nx, ny)?;
    let fop = FieldOperator::assemble(rm.mesh.clone(), mass)?;
    let n = fop.dim();
    let everywhere: Vec<usize> = (0..n).collect();
    for t in 0..tries {
        let mut rng = stream_rng(derive_seed(seed, 0x4358), t as u64);
        let size = rng.gen_range(2..=3);
        let family: Vec<Polynomial> = (0..size)
            .map(|_| {
                let f = random_vector(&mut rng, n, &everywhere, false);
                Polynomial::wick(&fop, 1.0, vec![f])
            })
            .collect::<Result<_>>()?;
        let report = rp_gram_unchecked(&fop, &rm.involution, &family, MassMode::Massive, RP_TOLERANCE)?;
        if !report.pass {
            return Ok(Some(RpWitness {
                torus: (nx, ny),
                mass,
                family: family.iter().map(Polynomial::to_terms).collect(),
                min_eigenvalue: report.min_eigenvalue,
                seed,
            }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wick::conditional_expectation;

    fn setup(m: f64) -> (ReflectedMesh, FieldOperator) {
        let rm = reflected_torus(6, 6).unwrap();
        let fop = FieldOperator::assemble(rm.mesh.clone(), m).unwrap();
        (rm, fop)
    }

    #[test]
    fn constant_family() {
        let (rm, fop) = setup(1.0);
        let one = Polynomial::constant(Ordering::Wick(fop.context()), 1.0);
        let r = rp_gram(&fop, &rm.involution, &[one], MassMode::Massive).unwrap();
        assert_eq!(r.matrix, vec![vec![1.0]]);
        assert_eq!(r.min_eigenvalue, 1.0);
        assert!(r.pass);
    }

    #[test]
    fn reflection_is_an_involution() {
        let (rm, fop) = setup(1.0);
        let ord = Ordering::Wick(fop.context());
        let fam = random_family(ord, 36, &(0..36).collect(), 4, 3, false, 3).unwrap();
        for p in &fam {
            let twice = reflect_poly(&fop, &rm.involution, &reflect_poly(&fop, &rm.involution, p).unwrap()).unwrap();
            assert_eq!(&twice, p);
        }
        let b = &rm.involution.partition().boundary;
        for p in random_family(ord, 36, b, 4, 3, false, 4).unwrap() {
            assert_eq!(reflect_poly(&fop, &rm.involution, &p).unwrap(), p);
        }
    }

    #[test]
    fn crossing_support_rejected_with_vertex() {
        let (rm, fop) = setup(1.0);
        let ext = *rm.involution.partition().exterior.iter().next().unwrap();
        let p = Polynomial::wick(&fop, 1.0, vec![TestVector::delta(36, ext)]).unwrap();
        match rp_gram(&fop, &rm.involution, &[p], MassMode::Massive) {
            Err(Error::SupportViolation { vertex, .. }) => assert_eq!(vertex, ext),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn delta_pair_across_boundary_is_indefinite() {
        let (rm, fop) = setup(1.0);
        let x = 7;
        let tx = rm.involution.image(x);
        let fam = [
            Polynomial::wick(&fop, 1.0, vec![TestVector::delta(36, x)]).unwrap(),
            Polynomial::wick(&fop, 1.0, vec![TestVector::delta(36, tx)]).unwrap(),
        ];
        let r = rp_gram_unchecked(&fop, &rm.involution, &fam, MassMode::Massive, RP_TOLERANCE).unwrap();
        let cov = fop.covariance();
        // M = [[C(θx,x), C(θx,θx)], [C(x,x), C(x,θx)]], eigenvalues C(x,θx) ± C(x,x).
        assert!((r.min_eigenvalue - (cov[(x, tx)] - cov[(x, x)])).abs() < 1e-12);
        assert!(!r.pass);
    }

    #[test]
    fn boundary_expectation_commutes_with_reflection() {
        let (rm, fop) = setup(1.0);
        let inv = &rm.involution;
        let part = inv.partition();
        let ord = Ordering::Wick(fop.context());
        for p in random_family(ord, 36, &(0..36).collect(), 5, 3, false, 9).unwrap() {
            let eb = conditional_expectation(&fop, &part.boundary, &p).unwrap();
            assert_eq!(reflect_poly(&fop, inv, &eb).unwrap(), eb);
            let ebt = conditional_expectation(&fop, &part.boundary, &reflect_poly(&fop, inv, &p).unwrap()).unwrap();
            assert!(ebt.coefficient_distance(&eb).unwrap() < 1e-10);
        }
    }

    #[test]
    fn reflected_pairing_is_boundary_norm() {
        let (rm, fop) = setup(0.7);
        let inv = &rm.involution;
        let part = inv.partition();
        let ord = Ordering::Wick(fop.context());
        for f in random_family(ord, 36, &part.closure(), 5, 3, false, 21).unwrap() {
            let rp = wick_inner(&fop, &reflect_poly(&fop, inv, &f).unwrap(), &f).unwrap();
            let eb = conditional_expectation(&fop, &part.boundary, &f).unwrap();
            let norm = wick_inner(&fop, &eb, &eb).unwrap();
            assert!((rp - norm).abs() <= 1e-10 * norm.abs().max(1e-300));
        }
    }

    #[test]
    fn massless_mode_checks_inputs() {
        let (rm, fop0) = setup(0.0);
        let ord = Ordering::Wick(fop0.context());
        let b = *rm.involution.partition().boundary.iter().next().unwrap();
        let on_b = Polynomial::monomial(ord, 1.0, vec![TestVector::delta(36, b).sub(&TestVector::delta(36, 8))]).unwrap();
        assert!(matches!(
            rp_gram(&fop0, &rm.involution, &[on_b], MassMode::ZeroMassLimit),
            Err(Error::SupportViolation { .. })
        ));
        let not_mean_zero = Polynomial::monomial(ord, 1.0, vec![TestVector::delta(36, 8)]).unwrap();
        assert!(matches!(
            rp_gram(&fop0, &rm.involution, &[not_mean_zero], MassMode::ZeroMassLimit),
            Err(Error::NotMeanZero(_))
        ));
        let omega = &rm.involution.partition().omega;
        let fam = random_family(ord, 36, omega, 6, 3, true, 5).unwrap();
        let r = rp_gram(&fop0, &rm.involution, &fam, MassMode::ZeroMassLimit).unwrap();
        assert!(r.pass, "{:?}", r.eigenvalues);
    }

    #[test]
    fn search_finds_indefinite_family() {
        let w = search_rp_counterexample(6, 6, 1.0, 1, 200).unwrap().expect("a witness");
        let r = w.replay().unwrap();
        assert!(!r.pass);
        assert_eq!(r.min_eigenvalue, w.min_eigenvalue);
    }
}
