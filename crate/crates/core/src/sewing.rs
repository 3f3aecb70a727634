//! Sewing two surfaces along a circle.
//!
//! Each side `M_k` has a boundary circle `C_k`. Capping it gives a closed
//! surface `M̃_k`; gluing the uncapped sides gives `M`. For `F` in fields on
//! `M₁` and `G` on `M₂`
//!
//! ```text
//! ∫ J₁(A₁F) J₂(A₂G) dμ_M = ∫ J₁F J₂G dμ_M,   A_k = E^{M̃_k}_{C_k}
//! ```
//!
//! where `J_k` pushes test vectors forward into `M` and re-tags the Wick
//! ordering. Only the stiffness of `M_k` off the circle and between the
//! circle and `M_k` enters `e^{M̃_k}_{C_k}` on vectors supported in `M_k`,
//! so the identity holds for any cap.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{build_mesh, glue_meshes_multi, icosphere_hemispheres, GluedMesh, Mesh, MeshSpec, VertexSet};
use crate::sobolev::{FieldOperator, TestVector};
use crate::wick::{
    check_context, conditional_expectation, map_factors, wick_inner, FnMap, Ordering, Polynomial,
    TermData,
};

type VertexPairs = BTreeSet<(usize, usize)>;

/// Default sewing residual tolerance.
pub const SEW_TOLERANCE: f64 = 1e-8;

/// Standard ways of closing a boundary circle.
///
/// Both caps add a copy of the circle's own edge weights and masses, so the
/// circle vertices of the capped mesh carry the same seam entries as in the
/// glued mesh. Every circle vertex `c` is then joined inward with the total
/// weight `a_c` it has into its own side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CapKind {
    /// One apex joined to every circle vertex with weight `a_c`; apex mass
    /// is the total circle mass.
    Cone,
    /// `rings` concentric copies of the circle closed by an apex. Ring edges
    /// carry twice the seam weight and ring vertices twice the seam mass,
    /// spokes carry `a_c`. On a lattice cylinder this continues the lattice.
    Disk { rings: usize },
}

/// A closed mesh obtained by capping boundary circles. Original vertices
/// keep their ids; cap vertices follow.
#[derive(Debug, Clone)]
pub struct CappedMesh {
    pub mesh: Mesh,
    pub original_vertices: usize,
    pub circle: VertexSet,
}

impl CappedMesh {
    /// Vertices of the original mesh.
    pub fn region(&self) -> VertexSet {
        (0..self.original_vertices).collect()
    }

    pub fn cap_vertices(&self) -> VertexSet {
        (self.original_vertices..self.mesh.vertex_count()).collect()
    }
}

/// Caps every named cycle of `mesh` with `cap`.
pub fn cap_boundary(mesh: &Mesh, cycles: &[&str], cap: CapKind) -> Result<CappedMesh> {
    if let CapKind::Disk { rings: 0 } = cap {
        return Err(Error::Cap("a disk cap needs at least one ring".into()));
    }
    let n0 = mesh.vertex_count();
    let mut edges: Vec<(usize, usize, f64)> = mesh.edges().map(|(i, j, v)| (i, j, -v)).collect();
    let mut mass = mesh.mass().to_vec();
    let mut tris = mesh.triangles().map(<[_]>::to_vec);
    let boundary: Option<VertexPairs> = mesh
        .boundary_edges()
        .map(|e| e.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect());
    let mut circle = VertexSet::new();
    for name in cycles {
        let cyc = mesh.cycle(name)?.to_vec();
        let on_cycle: VertexSet = cyc.iter().copied().collect();
        if !circle.is_disjoint(&on_cycle) {
            return Err(Error::Cap(format!("cycle {name} meets another capped cycle")));
        }
        circle.extend(&on_cycle);
        let k = cyc.len();
        let mut seam_w = Vec::with_capacity(k);
        let mut flip = Vec::with_capacity(k);
        for i in 0..k {
            let (a, b) = (cyc[i], cyc[(i + 1) % k]);
            let w = -mesh.stiffness(a, b);
            if w == 0.0 {
                return Err(Error::Cap(format!(
                    "cycle {name}: consecutive vertices {a} and {b} are not adjacent"
                )));
            }
            if let Some(be) = &boundary {
                if !be.contains(&(a.min(b), a.max(b))) {
                    return Err(Error::Cap(format!(
                        "cycle {name}: edge ({a}, {b}) is not a boundary edge"
                    )));
                }
            }
            seam_w.push(w);
            flip.push(mesh.edge_direction(a, b) == Some(true));
        }
        let inward: Vec<f64> = cyc
            .iter()
            .map(|&c| {
                let mut w: Vec<f64> = mesh
                    .neighbors(c)
                    .iter()
                    .filter(|(j, _)| !on_cycle.contains(j))
                    .map(|&(_, v)| -v)
                    .collect();
                w.sort_by(f64::total_cmp);
                w.iter().sum()
            })
            .collect();
        for i in 0..k {
            edges.push((cyc[i], cyc[(i + 1) % k], seam_w[i]));
            mass[cyc[i]] += mesh.mass()[cyc[i]];
        }
        let tri = |a: usize, b: usize, c: usize, f: bool| if f { [b, a, c] } else { [a, b, c] };
        let mut outer: Vec<usize> = cyc.clone();
        let mut new_tris = Vec::new();
        if let CapKind::Disk { rings } = cap {
            for _ in 0..rings {
                let base = mass.len();
                let ring: Vec<usize> = (base..base + k).collect();
                for i in 0..k {
                    mass.push(2.0 * mesh.mass()[cyc[i]]);
                }
                for i in 0..k {
                    let j = (i + 1) % k;
                    edges.push((outer[i], ring[i], inward[i]));
                    edges.push((ring[i], ring[j], 2.0 * seam_w[i]));
                    new_tris.push(tri(outer[i], outer[j], ring[i], flip[i]));
                    new_tris.push(tri(ring[i], outer[j], ring[j], flip[i]));
                }
                outer = ring;
            }
        }
        let apex = mass.len();
        mass.push(cyc.iter().map(|&c| mesh.mass()[c]).sum());
        for i in 0..k {
            edges.push((outer[i], apex, inward[i]));
            new_tris.push(tri(outer[i], outer[(i + 1) % k], apex, flip[i]));
        }
        if let Some(t) = tris.as_mut() {
            t.extend(new_tris);
        }
    }
    let n = mass.len();
    let mut out = Mesh::from_weighted_edges(n, edges, mass)?;
    if let Some(t) = tris {
        out = out.with_triangles(t)?;
    }
    for (name, cyc) in mesh.cycles() {
        out = out.with_cycle(name.clone(), cyc.clone())?;
    }
    Ok(CappedMesh {
        mesh: out,
        original_vertices: n0,
        circle,
    })
}

/// One side of a sewing: the capped surface, its field operator and the
/// embedding of its original vertices into the glued mesh.
#[derive(Debug)]
pub struct Side {
    pub capped: CappedMesh,
    pub fop: FieldOperator,
    /// `embedding[v]` is the glued id of original vertex `v`.
    pub embedding: Vec<usize>,
}

impl Side {
    pub fn region(&self) -> VertexSet {
        self.capped.region()
    }

    pub fn circle(&self) -> &VertexSet {
        &self.capped.circle
    }

    pub fn dim(&self) -> usize {
        self.fop.dim()
    }

    /// Bump of the capped mesh around `center`, cut to the original region.
    pub fn bump(&self, center: usize, radius: usize) -> TestVector {
        let mut f = TestVector::bump(&self.capped.mesh, center, radius).into_inner();
        for x in f.iter_mut().skip(self.capped.original_vertices) {
            *x = 0.0;
        }
        TestVector::new(f)
    }

    /// `j_*f`, dropping any entries on cap vertices.
    pub fn push_forward(&self, f: &[f64], glued_dim: usize) -> TestVector {
        let mut out = vec![0.0; glued_dim];
        for (v, &g) in self.embedding.iter().enumerate() {
            out[g] += f[v];
        }
        TestVector::new(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetupSpec {
    /// Two `circumference × rows` cylinders glued end to end along both
    /// boundary circles into a torus.
    TorusFromCylinders { circumference: usize, rows: usize },
    /// The two halves of an equatorial icosphere glued along the equator.
    IcosphereHalves { subdivisions: usize },
}

#[derive(Debug)]
pub struct SewSetup {
    pub spec: SetupSpec,
    pub cap: CapKind,
    pub side1: Side,
    pub side2: Side,
    pub glued: GluedMesh,
    /// The seam `C` in glued ids.
    pub circle: VertexSet,
    pub fop: FieldOperator,
}

impl SewSetup {
    pub fn build(spec: SetupSpec, cap: CapKind, mass: f64) -> Result<SewSetup> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::MassRequired(mass));
        }
        let (a, b, pairs, cycles_a, cycles_b): (Mesh, Mesh, Vec<(Vec<usize>, Vec<usize>)>, Vec<&str>, Vec<&str>) =
            match spec {
                SetupSpec::TorusFromCylinders {
                    circumference,
                    rows,
                } => {
                    let cyl = build_mesh(&MeshSpec::CylinderCollar {
                        circumference,
                        rows,
                        spacing: 1.0,
                    })?;
                    let pairs = vec![
                        (cyl.cycle("top")?.to_vec(), cyl.cycle("bottom")?.to_vec()),
                        (cyl.cycle("bottom")?.to_vec(), cyl.cycle("top")?.to_vec()),
                    ];
                    (cyl.clone(), cyl, pairs, vec!["bottom", "top"], vec!["bottom", "top"])
                }
                SetupSpec::IcosphereHalves { subdivisions } => {
                    let h = icosphere_hemispheres(subdivisions)?;
                    let pairs = vec![(h.plus.cycle("equator")?.to_vec(), h.minus.cycle("equator")?.to_vec())];
                    (h.plus, h.minus, pairs, vec!["equator"], vec!["equator"])
                }
            };
        let glued = glue_meshes_multi(&a, &b, &pairs)?;
        let circle = glued.seam_vertices();
        let fop = FieldOperator::assemble(Arc::new(glued.mesh.clone()), mass)?;
        let side = |m: &Mesh, cycles: &[&str], embedding: Vec<usize>| -> Result<Side> {
            let capped = cap_boundary(m, cycles, cap)?;
            let fop = FieldOperator::assemble(Arc::new(capped.mesh.clone()), mass)?;
            Ok(Side {
                capped,
                fop,
                embedding,
            })
        };
        let side1 = side(&a, &cycles_a, glued.map_a.clone())?;
        let side2 = side(&b, &cycles_b, glued.map_b.clone())?;
        let setup = SewSetup {
            spec,
            cap,
            side1,
            side2,
            glued,
            circle,
            fop,
        };
        setup.check()?;
        Ok(setup)
    }

    /// Embeddings are isometric off the circle and send `C_k` onto `C`.
    fn check(&self) -> Result<()> {
        let m = self.fop.mesh();
        for (k, side) in [(1, &self.side1), (2, &self.side2)] {
            let cm = &side.capped.mesh;
            for v in 0..side.capped.original_vertices {
                let g = side.embedding[v];
                if side.circle().contains(&v) != self.circle.contains(&g) {
                    return Err(Error::Sewing(format!("side {k}: vertex {v} misplaced on the circle")));
                }
                if side.circle().contains(&v) {
                    if cm.mass()[v] != m.mass()[g] {
                        return Err(Error::Sewing(format!("side {k}: circle mass differs at {v}")));
                    }
                    continue;
                }
                if cm.mass()[v] != m.mass()[g] || cm.diagonal()[v] != m.diagonal()[g] {
                    return Err(Error::Sewing(format!("side {k}: embedding not isometric at {v}")));
                }
                for &(w, val) in cm.neighbors(v) {
                    if m.stiffness(g, side.embedding[w]) != val {
                        return Err(Error::Sewing(format!(
                            "side {k}: stiffness ({v}, {w}) not preserved"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn side(&self, k: u8) -> Result<&Side> {
        match k {
            1 => Ok(&self.side1),
            2 => Ok(&self.side2),
            _ => Err(Error::InvalidParameter(format!("side must be 1 or 2, got {k}"))),
        }
    }

    /// Wick polynomial on side `k` from terms in that side's vertex ids.
    pub fn side_polynomial(&self, k: u8, terms: &[TermData]) -> Result<Polynomial> {
        let side = self.side(k)?;
        Polynomial::from_terms(Ordering::Wick(side.fop.context()), terms)
    }

    pub fn fingerprints(&self) -> [String; 3] {
        [
            self.side1.capped.mesh.fingerprint(),
            self.side2.capped.mesh.fingerprint(),
            self.fop.mesh().fingerprint(),
        ]
    }
}

fn check_side(side: &Side, p: &Polynomial, what: &str) -> Result<()> {
    check_context(&side.fop, p)?;
    p.require_support(&side.region(), what)
}

/// `A_{C_k,M_k}F = E^{M̃_k}_{C_k}F`.
pub fn boundary_amplitude(setup: &SewSetup, k: u8, f: &Polynomial) -> Result<Polynomial> {
    let side = setup.side(k)?;
    check_side(side, f, "boundary amplitude input")?;
    conditional_expectation(&side.fop, side.circle(), f)
}

/// `J_k`: pushes every factor into the glued mesh and re-tags the ordering
/// with the glued covariance; coefficients are unchanged.
pub fn j_map(setup: &SewSetup, k: u8, p: &Polynomial) -> Result<Polynomial> {
    let side = setup.side(k)?;
    check_side(side, p, "J map input")?;
    j_map_unchecked(setup, side, p)
}

fn j_map_unchecked(setup: &SewSetup, side: &Side, p: &Polynomial) -> Result<Polynomial> {
    let n = setup.fop.dim();
    let push = FnMap(|f: &[f64]| side.push_forward(f, n));
    Ok(map_factors(&push, p)?.retagged(Ordering::Wick(setup.fop.context())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SewReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs − rhs| / max(|lhs|, |rhs|, 1)`.
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub fingerprints: [String; 3],
}

/// Both sides of the sewing identity for `F` on side 1 and `G` on side 2.
pub fn sew_check(setup: &SewSetup, f: &Polynomial, g: &Polynomial) -> Result<SewReport> {
    check_side(&setup.side1, f, "F")?;
    check_side(&setup.side2, g, "G")?;
    sew_check_unchecked(setup, f, g)
}

/// [`sew_check`] without the support precondition. Factors on cap vertices
/// enter the boundary amplitude but are dropped by the J maps.
#[doc(hidden)]
pub fn sew_check_unchecked(setup: &SewSetup, f: &Polynomial, g: &Polynomial) -> Result<SewReport> {
    check_context(&setup.side1.fop, f)?;
    check_context(&setup.side2.fop, g)?;
    let af = conditional_expectation(&setup.side1.fop, setup.side1.circle(), f)?;
    let ag = conditional_expectation(&setup.side2.fop, setup.side2.circle(), g)?;
    let lhs = wick_inner(
        &setup.fop,
        &j_map_unchecked(setup, &setup.side1, &af)?,
        &j_map_unchecked(setup, &setup.side2, &ag)?,
    )?;
    let rhs = wick_inner(
        &setup.fop,
        &j_map_unchecked(setup, &setup.side1, f)?,
        &j_map_unchecked(setup, &setup.side2, g)?,
    )?;
    let residual = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0);
    Ok(SewReport {
        lhs,
        rhs,
        residual,
        tolerance: SEW_TOLERANCE,
        pass: residual <= SEW_TOLERANCE,
        fingerprints: setup.fingerprints(),
    })
}

/// Sewing residuals for fixed side polynomials as the mass decreases.
pub fn mass_sweep(
    spec: SetupSpec,
    cap: CapKind,
    masses: &[f64],
    f: &[TermData],
    g: &[TermData],
) -> Result<Vec<(f64, SewReport)>> {
    masses
        .iter()
        .map(|&m| {
            let setup = SewSetup::build(spec, cap, m)?;
            let fp = setup.side_polynomial(1, f)?;
            let gp = setup.side_polynomial(2, g)?;
            Ok((m, sew_check(&setup, &fp, &gp)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wick::{convert, Target};

    fn torus_setup(cap: CapKind) -> SewSetup {
        SewSetup::build(
            SetupSpec::TorusFromCylinders {
                circumference: 5,
                rows: 4,
            },
            cap,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn capped_cylinder_is_a_sphere() {
        let cyl = build_mesh(&MeshSpec::CylinderCollar {
            circumference: 6,
            rows: 3,
            spacing: 1.0,
        })
        .unwrap();
        for cap in [CapKind::Cone, CapKind::Disk { rings: 2 }] {
            let c = cap_boundary(&cyl, &["bottom", "top"], cap).unwrap();
            assert_eq!(c.mesh.euler_characteristic(), Some(2));
            assert_eq!(c.mesh.boundary_edges().unwrap(), vec![]);
            for v in 0..18 {
                if c.circle.contains(&v) {
                    continue;
                }
                assert_eq!(c.mesh.mass()[v], cyl.mass()[v]);
                for &(w, val) in cyl.neighbors(v) {
                    assert_eq!(c.mesh.stiffness(v, w), val);
                }
            }
        }
    }

    #[test]
    fn disk_cap_continues_the_lattice() {
        let cyl = build_mesh(&MeshSpec::CylinderCollar {
            circumference: 6,
            rows: 3,
            spacing: 1.0,
        })
        .unwrap();
        let c = cap_boundary(&cyl, &["bottom"], CapKind::Disk { rings: 1 }).unwrap();
        // Bottom row and first ring now look like an interior lattice row.
        for v in 0..6 {
            assert_eq!(c.mesh.mass()[v], cyl.mass()[6 + v]);
            assert_eq!(c.mesh.stiffness(v, (v + 1) % 6), cyl.stiffness(6 + v, 6 + (v + 1) % 6));
            assert_eq!(c.mesh.stiffness(v, 18 + v), cyl.stiffness(v, 6 + v));
        }
    }

    #[test]
    fn interior_cycle_rejected() {
        let cyl = build_mesh(&MeshSpec::CylinderCollar {
            circumference: 5,
            rows: 4,
            spacing: 1.0,
        })
        .unwrap()
        .with_cycle("middle", (5..10).collect())
        .unwrap();
        assert!(matches!(
            cap_boundary(&cyl, &["middle"], CapKind::Cone),
            Err(Error::Cap(_))
        ));
        assert!(matches!(
            cap_boundary(&cyl, &["top"], CapKind::Disk { rings: 0 }),
            Err(Error::Cap(_))
        ));
    }

    #[test]
    fn constant_sewing() {
        let s = torus_setup(CapKind::Cone);
        let f = Polynomial::constant(Ordering::Wick(s.side1.fop.context()), 1.0);
        let g = Polynomial::constant(Ordering::Wick(s.side2.fop.context()), 1.0);
        let r = sew_check(&s, &f, &g).unwrap();
        assert_eq!((r.lhs, r.rhs), (1.0, 1.0));
    }

    #[test]
    fn amplitude_is_idempotent_and_lands_on_circle() {
        let s = torus_setup(CapKind::Disk { rings: 1 });
        let f = s.side1.bump(7, 1);
        let p = Polynomial::wick(&s.side1.fop, 1.0, vec![f.clone(), f]).unwrap();
        let a = boundary_amplitude(&s, 1, &p).unwrap();
        assert!(a.escapes(s.side1.circle()).is_none());
        let aa = boundary_amplitude(&s, 1, &a).unwrap();
        assert!(aa.coefficient_distance(&a).unwrap() < 1e-12);
    }

    #[test]
    fn intertwining_at_vector_level() {
        for cap in [CapKind::Cone, CapKind::Disk { rings: 2 }] {
            let s = torus_setup(cap);
            let n = s.fop.dim();
            let e1 = s.side1.fop.projector(s.side1.circle()).unwrap();
            let e = s.fop.projector(&s.circle).unwrap();
            for v in 0..20 {
                let f = TestVector::delta(s.side1.dim(), v);
                let lhs = s.side1.push_forward(&e1.apply(&f), n);
                let rhs = e.apply(&s.side1.push_forward(&f, n));
                assert!(lhs.sub(&rhs).max_abs() < 1e-10, "vertex {v}");
            }
        }
    }

    #[test]
    fn degree_two_sewing_on_torus() {
        let s = torus_setup(CapKind::Cone);
        let (f, g) = (s.side1.bump(7, 1), s.side2.bump(8, 1));
        let fp = Polynomial::wick(&s.side1.fop, 1.0, vec![f.clone(), f]).unwrap();
        let gp = Polynomial::wick(&s.side2.fop, 1.0, vec![g.clone(), g]).unwrap();
        let r = sew_check(&s, &fp, &gp).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.lhs > 0.0);
    }

    #[test]
    fn j_map_shifts_the_wick_constant() {
        let s = torus_setup(CapKind::Cone);
        let f = s.side1.bump(6, 1);
        let p = Polynomial::wick(&s.side1.fop, 1.0, vec![f.clone(), f.clone()]).unwrap();
        let jp = j_map(&s, 1, &p).unwrap();
        let plain_m = convert(&s.fop, &jp, Target::Plain).unwrap();
        let jf = s.side1.push_forward(&f, s.fop.dim());
        assert!((plain_m.constant_term() + s.fop.pairing(&jf, &jf).unwrap()).abs() < 1e-14);
        let plain_tilde = convert(&s.side1.fop, &p, Target::Plain).unwrap();
        assert!((plain_tilde.constant_term() + s.side1.fop.pairing(&f, &f).unwrap()).abs() < 1e-14);
        assert_ne!(plain_m.constant_term(), plain_tilde.constant_term());
        let k = Ordering::Wick(s.side1.fop.context());
        let one = j_map(&s, 1, &Polynomial::constant(k, 2.0)).unwrap();
        assert_eq!(one.constant_term(), 2.0);
    }

    #[test]
    fn cap_support_rejected() {
        let s = torus_setup(CapKind::Cone);
        let apex = s.side1.dim() - 1;
        let p = Polynomial::wick(&s.side1.fop, 1.0, vec![TestVector::delta(s.side1.dim(), apex)]).unwrap();
        let g = Polynomial::wick(&s.side2.fop, 1.0, vec![s.side2.bump(8, 1)]).unwrap();
        assert!(matches!(
            sew_check(&s, &p, &g),
            Err(Error::SupportViolation { .. })
        ));
        let r = sew_check_unchecked(&s, &p, &g).unwrap();
        assert!(!r.pass, "{r:?}");
    }

    #[test]
    fn icosphere_halves_build() {
        let s = SewSetup::build(SetupSpec::IcosphereHalves { subdivisions: 1 }, CapKind::Cone, 1.0).unwrap();
        assert_eq!(s.fop.dim(), build_mesh(&MeshSpec::IcosphereEquatorial { subdivisions: 1 }).unwrap().vertex_count());
        let f = s.side1.bump(0, 1);
        let g = s.side2.bump(0, 1);
        let fp = Polynomial::wick(&s.side1.fop, 1.0, vec![f]).unwrap();
        let gp = Polynomial::wick(&s.side2.fop, 1.0, vec![g]).unwrap();
        assert!(sew_check(&s, &fp, &gp).unwrap().pass);
    }

    #[test]
    fn factors_sized_for_another_cap_are_rejected() {
        let cone = torus_setup(CapKind::Cone);
        let disk = torus_setup(CapKind::Disk { rings: 2 });
        let terms = vec![TermData {
            coef: 1.0,
            factors: vec![cone.side1.bump(6, 1)],
        }];
        let f = disk.side_polynomial(1, &terms).unwrap();
        let g = disk.side_polynomial(2, &[]).unwrap();
        assert!(matches!(sew_check(&disk, &f, &g), Err(Error::Dimension { .. })));
    }
}
