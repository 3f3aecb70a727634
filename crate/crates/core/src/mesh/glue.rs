use std::collections::{BTreeMap, HashMap};

use super::{Mesh, VertexSet};
use crate::error::{Error, Result};

/// Result of identifying seam cycles of two meshes.
#[derive(Debug, Clone)]
pub struct GluedMesh {
    pub mesh: Mesh,
    /// Vertex `v` of the first source lands on `map_a[v]`.
    pub map_a: Vec<usize>,
    /// Vertex `v` of the second source lands on `map_b[v]`.
    pub map_b: Vec<usize>,
    /// Seam cycles in glued numbering.
    pub seams: Vec<Vec<usize>>,
}

impl GluedMesh {
    pub fn seam_vertices(&self) -> VertexSet {
        self.seams.iter().flatten().copied().collect()
    }
}

/// Identifies `cycle_a[i]` with `cycle_b[i]` for every `i`.
pub fn glue_meshes(a: &Mesh, cycle_a: &[usize], b: &Mesh, cycle_b: &[usize]) -> Result<GluedMesh> {
    glue_meshes_multi(a, b, &[(cycle_a.to_vec(), cycle_b.to_vec())])
}

/// Glues along several cycle pairs at once (two cylinders into a torus).
///
/// Collars must agree exactly: seam masses, stiffness between seam
/// vertices, and the multiset of weights from each seam vertex into its own
/// side. When both meshes carry triangles the identified edges must be
/// traversed in opposite directions, which makes the identification
/// orientation reversing.
pub fn glue_meshes_multi(a: &Mesh, b: &Mesh, pairs: &[(Vec<usize>, Vec<usize>)]) -> Result<GluedMesh> {
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("no cycles to glue".into()));
    }
    let mut b_to_a: HashMap<usize, usize> = HashMap::new();
    let mut seam_a: Vec<usize> = Vec::new();
    for (ca, cb) in pairs {
        if ca.len() != cb.len() {
            return Err(Error::CollarMismatch(format!(
                "cycle lengths differ: {} vs {}",
                ca.len(),
                cb.len()
            )));
        }
        if ca.len() < 3 {
            return Err(Error::InvalidParameter("seam cycles need at least 3 vertices".into()));
        }
        for (&x, &y) in ca.iter().zip(cb) {
            if x >= a.vertex_count() || y >= b.vertex_count() {
                return Err(Error::InvalidParameter(format!(
                    "seam vertex pair ({x}, {y}) out of range"
                )));
            }
            if b_to_a.insert(y, x).is_some() || seam_a.contains(&x) {
                return Err(Error::InvalidParameter(format!(
                    "seam vertex pair ({x}, {y}) used twice"
                )));
            }
            seam_a.push(x);
        }
    }
    let seam_a_set: VertexSet = seam_a.iter().copied().collect();
    let seam_b_set: VertexSet = b_to_a.keys().copied().collect();

    for (ca, cb) in pairs {
        check_collar(a, ca, &seam_a_set, b, cb, &seam_b_set)?;
    }
    // Seam-to-seam couplings across different cycles must match as well.
    for (&yb, &xa) in &b_to_a {
        for &(zb, w) in b.neighbors(yb) {
            if let Some(&za) = b_to_a.get(&zb) {
                if a.stiffness(xa, za) != w {
                    return Err(Error::CollarMismatch(format!(
                        "seam coupling ({xa}, {za}) differs: {} vs {w}",
                        a.stiffness(xa, za)
                    )));
                }
            }
        }
    }

    let na = a.vertex_count();
    let map_a: Vec<usize> = (0..na).collect();
    let mut next = na;
    let map_b: Vec<usize> = (0..b.vertex_count())
        .map(|v| match b_to_a.get(&v) {
            Some(&x) => x,
            None => {
                next += 1;
                next - 1
            }
        })
        .collect();
    let n = next;

    // Edge weights: each side contributes its own half of a seam edge; all
    // other edges come from exactly one side.
    let mut weights: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (i, j, v) in a.edges() {
        *weights.entry((i, j)).or_insert(0.0) += -v;
    }
    for (i, j, v) in b.edges() {
        let (x, y) = (map_b[i], map_b[j]);
        *weights.entry((x.min(y), x.max(y))).or_insert(0.0) += -v;
    }
    let mut mass = vec![0.0; n];
    mass[..na].copy_from_slice(a.mass());
    for (v, &w) in b.mass().iter().enumerate() {
        if b_to_a.contains_key(&v) {
            mass[map_b[v]] += w;
        } else {
            mass[map_b[v]] = w;
        }
    }
    let mut mesh = Mesh::from_weighted_edges(n, weights.into_iter().map(|((i, j), w)| (i, j, w)), mass)?;

    if let (Some(ta), Some(tb)) = (a.triangles(), b.triangles()) {
        let mut tris = ta.to_vec();
        tris.extend(tb.iter().map(|t| [map_b[t[0]], map_b[t[1]], map_b[t[2]]]));
        mesh = mesh.with_triangles(tris)?;
    }
    if let (Some(pa), Some(pb)) = (a.positions(), b.positions()) {
        let mut pos = vec![[0.0; 3]; n];
        pos[..na].copy_from_slice(pa);
        for (v, p) in pb.iter().enumerate() {
            if !b_to_a.contains_key(&v) {
                pos[map_b[v]] = *p;
            }
        }
        mesh = mesh.with_positions(pos)?;
    }
    for (name, cyc) in a.cycles() {
        if !pairs.iter().any(|(ca, _)| ca == cyc) {
            mesh = mesh.with_cycle(name.clone(), cyc.clone())?;
        }
    }
    for (name, cyc) in b.cycles() {
        if !pairs.iter().any(|(_, cb)| cb == cyc) {
            let mapped: Vec<usize> = cyc.iter().map(|&v| map_b[v]).collect();
            let key = if mesh.cycles().contains_key(name) {
                format!("{name}_b")
            } else {
                name.clone()
            };
            mesh = mesh.with_cycle(key, mapped)?;
        }
    }
    let seams = pairs.iter().map(|(ca, _)| ca.clone()).collect();
    Ok(GluedMesh {
        mesh,
        map_a,
        map_b,
        seams,
    })
}

fn check_collar(
    a: &Mesh,
    ca: &[usize],
    seam_a: &VertexSet,
    b: &Mesh,
    cb: &[usize],
    seam_b: &VertexSet,
) -> Result<()> {
    let len = ca.len();
    for i in 0..len {
        let (x, y) = (ca[i], cb[i]);
        if a.mass()[x] != b.mass()[y] {
            return Err(Error::CollarMismatch(format!(
                "seam mass at position {i}: {} vs {}",
                a.mass()[x],
                b.mass()[y]
            )));
        }
        let (xn, yn) = (ca[(i + 1) % len], cb[(i + 1) % len]);
        let (wa, wb) = (a.stiffness(x, xn), b.stiffness(y, yn));
        if wa != wb {
            return Err(Error::CollarMismatch(format!(
                "seam edge at position {i}: {wa} vs {wb}"
            )));
        }
        if wa == 0.0 && a.triangles().is_none() {
            return Err(Error::CollarMismatch(format!(
                "consecutive seam vertices at position {i} are not adjacent"
            )));
        }
        let inward = |m: &Mesh, v: usize, seam: &VertexSet| {
            let mut w: Vec<f64> = m
                .neighbors(v)
                .iter()
                .filter(|(u, _)| !seam.contains(u))
                .map(|&(_, w)| w)
                .collect();
            w.sort_by(f64::total_cmp);
            w
        };
        let (ia, ib) = (inward(a, x, seam_a), inward(b, y, seam_b));
        if ia != ib {
            return Err(Error::CollarMismatch(format!(
                "collar weights into the interior differ at seam position {i}: {ia:?} vs {ib:?}"
            )));
        }
        if a.triangles().is_some() && b.triangles().is_some() {
            let da = a.edge_direction(x, xn);
            let db = b.edge_direction(y, yn);
            match (da, db) {
                (Some(p), Some(q)) if p != q => {}
                (Some(_), Some(_)) => {
                    return Err(Error::CollarMismatch(format!(
                        "seam edge at position {i} has the same orientation on both sides"
                    )))
                }
                _ => {
                    return Err(Error::CollarMismatch(format!(
                        "seam edge at position {i} is not a triangle edge"
                    )))
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, MeshSpec};

    fn cyl(n: usize, k: usize) -> Mesh {
        build_mesh(&MeshSpec::CylinderCollar {
            circumference: n,
            rows: k,
            spacing: 1.0,
        })
        .unwrap()
    }

    #[test]
    fn vertex_count_after_gluing() {
        let (a, b) = (cyl(5, 3), cyl(5, 4));
        let g = glue_meshes(
            &a,
            a.cycle("top").unwrap(),
            &b,
            b.cycle("bottom").unwrap(),
        )
        .unwrap();
        assert_eq!(g.mesh.vertex_count(), 15 + 20 - 5);
        // Two cylinders end to end make a longer cylinder with two cycles left.
        assert_eq!(g.mesh.cycles().len(), 2);
        assert_eq!(g.mesh.euler_characteristic(), Some(0));
    }

    #[test]
    fn pulled_back_interior_matches_source() {
        let (a, b) = (cyl(6, 3), cyl(6, 3));
        let g = glue_meshes(&a, a.cycle("top").unwrap(), &b, b.cycle("bottom").unwrap()).unwrap();
        let seam = g.seam_vertices();
        for v in 0..b.vertex_count() {
            if seam.contains(&g.map_b[v]) {
                continue;
            }
            assert_eq!(g.mesh.mass()[g.map_b[v]], b.mass()[v]);
            assert_eq!(g.mesh.diagonal()[g.map_b[v]], b.diagonal()[v]);
            for &(w, val) in b.neighbors(v) {
                assert_eq!(g.mesh.stiffness(g.map_b[v], g.map_b[w]), val);
            }
        }
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let (a, b) = (cyl(5, 3), cyl(6, 3));
        let err = glue_meshes(&a, a.cycle("top").unwrap(), &b, b.cycle("bottom").unwrap());
        assert!(matches!(err, Err(Error::CollarMismatch(_))));
    }

    #[test]
    fn same_orientation_rejected() {
        let (a, b) = (cyl(5, 3), cyl(5, 3));
        // top-to-top keeps the orientation: not a valid sewing.
        let err = glue_meshes(&a, a.cycle("top").unwrap(), &b, b.cycle("top").unwrap());
        assert!(matches!(err, Err(Error::CollarMismatch(_))));
    }

    #[test]
    fn weight_mismatch_rejected() {
        let a = cyl(5, 3);
        let b = build_mesh(&MeshSpec::CylinderCollar {
            circumference: 5,
            rows: 3,
            spacing: 2.0,
        })
        .unwrap();
        let err = glue_meshes(&a, a.cycle("top").unwrap(), &b, b.cycle("bottom").unwrap());
        assert!(matches!(err, Err(Error::CollarMismatch(_))));
    }
}
