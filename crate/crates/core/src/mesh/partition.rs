use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Mesh, VertexSet};
use crate::error::{Error, InvolutionError, Result};

/// Disjoint split `exterior ∪ boundary ∪ omega` of the vertex set.
///
/// The boundary is the set of vertices outside `omega` that share an edge
/// with it, so no stiffness entry couples `omega` to `exterior`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionPartition {
    pub omega: VertexSet,
    pub boundary: VertexSet,
    pub exterior: VertexSet,
}

impl RegionPartition {
    /// `omega ∪ boundary`.
    pub fn closure(&self) -> VertexSet {
        self.omega.union(&self.boundary).copied().collect()
    }

    /// `exterior ∪ boundary`, the complement of `omega`.
    pub fn complement(&self) -> VertexSet {
        self.exterior.union(&self.boundary).copied().collect()
    }

    /// `Ω ≠ ∅` and `ext Ω ≠ ∅`: the boundary then carries nontrivial data.
    pub fn is_nontrivial(&self) -> bool {
        !self.omega.is_empty() && !self.exterior.is_empty()
    }

    /// Checks disjointness, coverage and separation against `mesh`.
    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        let n = mesh.vertex_count();
        let total = self.omega.len() + self.boundary.len() + self.exterior.len();
        let covered: VertexSet = self
            .omega
            .iter()
            .chain(&self.boundary)
            .chain(&self.exterior)
            .copied()
            .collect();
        if total != n || covered.len() != n || covered.iter().any(|&v| v >= n) {
            return Err(Error::InvalidPartition(
                "sets must be disjoint and cover every vertex".into(),
            ));
        }
        for &i in &self.omega {
            if let Some(&(j, _)) = mesh.neighbors(i).iter().find(|(j, _)| self.exterior.contains(j)) {
                return Err(Error::InvalidPartition(format!(
                    "edge ({i}, {j}) joins omega to the exterior"
                )));
            }
        }
        Ok(())
    }
}

/// Splits the vertices around `omega`. An empty exterior is allowed but
/// yields a partition for which [`RegionPartition::is_nontrivial`] is false.
pub fn make_partition(mesh: &Mesh, omega: &VertexSet) -> Result<RegionPartition> {
    let n = mesh.vertex_count();
    if omega.is_empty() {
        return Err(Error::InvalidPartition("omega is empty".into()));
    }
    if omega.len() >= n {
        return Err(Error::InvalidPartition("omega must be a proper subset".into()));
    }
    if let Some(&v) = omega.iter().find(|&&v| v >= n) {
        return Err(Error::InvalidPartition(format!("vertex {v} out of range")));
    }
    let boundary: VertexSet = omega
        .iter()
        .flat_map(|&i| mesh.neighbors(i).iter().map(|&(j, _)| j))
        .filter(|j| !omega.contains(j))
        .collect();
    let exterior = (0..n)
        .filter(|v| !omega.contains(v) && !boundary.contains(v))
        .collect();
    Ok(RegionPartition {
        omega: omega.clone(),
        boundary,
        exterior,
    })
}

/// A validated isometric vertex involution exchanging `omega` and the
/// exterior of its partition and fixing the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Involution {
    perm: Vec<usize>,
    partition: RegionPartition,
}

impl Involution {
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn partition(&self) -> &RegionPartition {
        &self.partition
    }

    pub fn image(&self, v: usize) -> usize {
        self.perm[v]
    }

    /// `θ_* f = f ∘ θ⁻¹`; for an involution `θ⁻¹ = θ`.
    pub fn push_forward(&self, f: &[f64]) -> Vec<f64> {
        self.perm.iter().map(|&t| f[t]).collect()
    }
}

pub fn validate_involution(
    mesh: &Mesh,
    perm: &[usize],
    partition: &RegionPartition,
) -> std::result::Result<Involution, InvolutionError> {
    let n = mesh.vertex_count();
    if perm.len() != n {
        return Err(InvolutionError::Length {
            expected: n,
            found: perm.len(),
        });
    }
    let mut hit = vec![false; n];
    for &t in perm {
        if t >= n || hit[t] {
            return Err(InvolutionError::NotBijective(t));
        }
        hit[t] = true;
    }
    if let Some(v) = (0..n).find(|&v| perm[perm[v]] != v) {
        return Err(InvolutionError::NotInvolutive(v));
    }
    for i in 0..n {
        if mesh.diagonal()[perm[i]] != mesh.diagonal()[i] {
            return Err(InvolutionError::StiffnessNotPreserved(i, i));
        }
        for &(j, v) in mesh.neighbors(i) {
            if mesh.stiffness(perm[i], perm[j]) != v {
                return Err(InvolutionError::StiffnessNotPreserved(i, j));
            }
        }
    }
    if let Some(v) = (0..n).find(|&v| mesh.mass()[perm[v]] != mesh.mass()[v]) {
        return Err(InvolutionError::MassNotPreserved(v));
    }
    for &v in &partition.omega {
        if !partition.exterior.contains(&perm[v]) {
            return Err(InvolutionError::PartitionNotSwapped(v));
        }
    }
    for &v in &partition.exterior {
        if !partition.omega.contains(&perm[v]) {
            return Err(InvolutionError::PartitionNotSwapped(v));
        }
    }
    if let Some(&v) = partition.boundary.iter().find(|&&v| perm[v] != v) {
        return Err(InvolutionError::BoundaryNotFixed(v));
    }
    Ok(Involution {
        perm: perm.to_vec(),
        partition: partition.clone(),
    })
}

/// Vertex permutation induced by negating coordinate `axis` of the
/// positions. Positions must match bit for bit.
pub fn mirror_permutation(mesh: &Mesh, axis: usize) -> Result<Vec<usize>> {
    let pos = mesh
        .positions()
        .ok_or_else(|| Error::InvalidMesh("mirror permutation needs positions".into()))?;
    let key = |p: &[f64; 3]| p.map(|x| (x + 0.0).to_bits());
    let index: HashMap<[u64; 3], usize> = pos.iter().enumerate().map(|(i, p)| (key(p), i)).collect();
    pos.iter()
        .enumerate()
        .map(|(i, p)| {
            let mut q = *p;
            q[axis] = -q[axis];
            index.get(&key(&q)).copied().ok_or_else(|| {
                Error::InvalidMesh(format!("vertex {i} has no mirror image"))
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, MeshSpec};

    fn torus8() -> Mesh {
        build_mesh(&MeshSpec::TorusLattice {
            nx: 8,
            ny: 8,
            spacing: 1.0,
        })
        .unwrap()
    }

    fn rows(range: std::ops::RangeInclusive<usize>) -> VertexSet {
        range.flat_map(|r| (0..8).map(move |c| r * 8 + c)).collect()
    }

    #[test]
    fn single_vertex_partition() {
        let mesh = torus8();
        let p = make_partition(&mesh, &VertexSet::from([9])).unwrap();
        assert_eq!(p.boundary, VertexSet::from([1, 8, 10, 17]));
        assert_eq!(p.exterior.len(), 59);
        p.validate(&mesh).unwrap();
    }

    #[test]
    fn empty_omega_rejected() {
        assert!(make_partition(&torus8(), &VertexSet::new()).is_err());
    }

    #[test]
    fn band_partition_boundary_rows() {
        let mesh = torus8();
        let p = make_partition(&mesh, &rows(3..=4)).unwrap();
        let mut expected = rows(2..=2);
        expected.extend(rows(5..=5));
        assert_eq!(p.boundary, expected);
    }

    #[test]
    fn empty_exterior_is_trivial() {
        let mesh = build_mesh(&MeshSpec::Path {
            vertices: 3,
            weight: 1.0,
            mass: 1.0,
        })
        .unwrap();
        let p = make_partition(&mesh, &VertexSet::from([1])).unwrap();
        assert!(p.exterior.is_empty());
        assert!(!p.is_nontrivial());
    }

    fn reflection() -> Vec<usize> {
        (0..64)
            .map(|v| {
                let (c, r) = (v % 8, v / 8);
                ((8 - r) % 8) * 8 + c
            })
            .collect()
    }

    #[test]
    fn torus_reflection_is_valid() {
        let mesh = torus8();
        let p = make_partition(&mesh, &rows(1..=3)).unwrap();
        let mut b = rows(0..=0);
        b.extend(rows(4..=4));
        assert_eq!(p.boundary, b);
        let inv = validate_involution(&mesh, &reflection(), &p).unwrap();
        // Boundary-supported vectors are fixed.
        let mut u = vec![0.0; 64];
        for &v in &p.boundary {
            u[v] = v as f64 + 1.0;
        }
        assert_eq!(inv.push_forward(&u), u);
    }

    #[test]
    fn identity_does_not_swap() {
        let mesh = torus8();
        let p = make_partition(&mesh, &rows(1..=3)).unwrap();
        let id: Vec<usize> = (0..64).collect();
        assert_eq!(
            validate_involution(&mesh, &id, &p),
            Err(InvolutionError::PartitionNotSwapped(8))
        );
    }

    #[test]
    fn failures_reported_distinctly() {
        let mesh = torus8();
        let p = make_partition(&mesh, &rows(1..=3)).unwrap();
        // 3-cycle on the first three vertices.
        let mut perm: Vec<usize> = (0..64).collect();
        perm[0] = 1;
        perm[1] = 2;
        perm[2] = 0;
        assert!(matches!(
            validate_involution(&mesh, &perm, &p),
            Err(InvolutionError::NotInvolutive(_))
        ));
        // Swapping two non-adjacent vertices breaks the stiffness.
        let mut perm: Vec<usize> = (0..64).collect();
        perm.swap(0, 18);
        assert!(matches!(
            validate_involution(&mesh, &perm, &p),
            Err(InvolutionError::StiffnessNotPreserved(..))
        ));
        let mut perm = reflection();
        perm[0] = 0;
        perm[1] = 0;
        assert!(matches!(
            validate_involution(&mesh, &perm, &p),
            Err(InvolutionError::NotBijective(0))
        ));
    }

    #[test]
    fn equatorial_icosphere_mirror_is_valid() {
        let mesh = build_mesh(&MeshSpec::IcosphereEquatorial { subdivisions: 2 }).unwrap();
        let perm = mirror_permutation(&mesh, 0).unwrap();
        let pos = mesh.positions().unwrap();
        let omega: VertexSet = (0..mesh.vertex_count()).filter(|&v| pos[v][0] > 0.0).collect();
        let p = make_partition(&mesh, &omega).unwrap();
        let inv = validate_involution(&mesh, &perm, &p).unwrap();
        assert_eq!(
            inv.partition().boundary.len(),
            mesh.cycle("equator").unwrap().len()
        );
    }
}
