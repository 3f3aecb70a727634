//! Discretized compact surfaces.
//!
//! A [`Mesh`] carries a symmetric stiffness matrix `L` (the discrete Dirichlet
//! form) and a positive lumped mass vector `W` (the discrete volume element).
//! Off-diagonal entries are stored once per edge; the diagonal is always
//! rebuilt as minus the row sum so that `L·1 = 0` holds exactly.
//!
//! Row sums and lumped masses are accumulated in value-sorted order. Two rows
//! holding the same multiset of entries therefore produce bitwise identical
//! sums, which is what lets mirror images and glued halves compare with `==`.

mod generators;
mod glue;
mod json;
mod partition;

pub use generators::{build_mesh, icosphere_hemispheres, Hemispheres, MeshSpec};
pub use glue::{glue_meshes, glue_meshes_multi, GluedMesh};
pub use json::MeshFile;
pub use partition::{
    make_partition, mirror_permutation, validate_involution, Involution, RegionPartition,
};

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Vertex subsets are kept ordered so iteration is deterministic.
pub type VertexSet = BTreeSet<usize>;

pub(crate) fn sorted_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertex_count: usize,
    positions: Option<Vec<[f64; 3]>>,
    triangles: Option<Vec<[usize; 3]>>,
    /// Upper-triangle off-diagonal stiffness, `i < j`, nonzero only.
    edges: BTreeMap<(usize, usize), f64>,
    diagonal: Vec<f64>,
    mass: Vec<f64>,
    neighbors: Vec<Vec<(usize, f64)>>,
    cycles: BTreeMap<String, Vec<usize>>,
    warnings: Vec<String>,
}

impl Mesh {
    /// Builds a mesh from weighted edges and a lumped mass vector.
    ///
    /// Repeated edges are summed in the order given; edges whose total is
    /// exactly zero are dropped so that the sparsity pattern of `L` is the
    /// adjacency. Negative weights are accepted with a warning.
    pub fn from_weighted_edges(
        vertex_count: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
        mass: Vec<f64>,
    ) -> Result<Self> {
        if vertex_count == 0 {
            return Err(Error::InvalidMesh("mesh has no vertices".into()));
        }
        if mass.len() != vertex_count {
            return Err(Error::InvalidMesh(format!(
                "mass has {} entries for {} vertices",
                mass.len(),
                vertex_count
            )));
        }
        if let Some((i, w)) = mass
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(Error::InvalidMesh(format!(
                "mass at vertex {i} is {w}, must be positive"
            )));
        }
        let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, w) in edges {
            if i >= vertex_count || j >= vertex_count {
                return Err(Error::InvalidMesh(format!(
                    "edge ({i}, {j}) out of range for {vertex_count} vertices"
                )));
            }
            if i == j {
                return Err(Error::InvalidMesh(format!(
                    "self-loop at vertex {i}; the diagonal is derived from row sums"
                )));
            }
            if !w.is_finite() {
                return Err(Error::InvalidMesh(format!("edge ({i}, {j}) has weight {w}")));
            }
            *acc.entry((i.min(j), i.max(j))).or_insert(0.0) += w;
        }
        // Stored values are L_ij = -weight.
        let edges: BTreeMap<(usize, usize), f64> = acc
            .into_iter()
            .filter(|(_, w)| *w != 0.0)
            .map(|(k, w)| (k, -w))
            .collect();
        let mut mesh = Mesh {
            vertex_count,
            positions: None,
            triangles: None,
            edges,
            diagonal: Vec::new(),
            mass,
            neighbors: Vec::new(),
            cycles: BTreeMap::new(),
            warnings: Vec::new(),
        };
        mesh.rebuild();
        Ok(mesh)
    }

    /// Cotangent-weight stiffness and barycentric lumped mass for a triangle
    /// mesh embedded in R^3.
    pub fn from_triangles(positions: Vec<[f64; 3]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let n = positions.len();
        let mut edge_terms: Vec<(usize, usize, f64)> = Vec::with_capacity(3 * triangles.len());
        let mut mass_terms: Vec<Vec<f64>> = vec![Vec::new(); n];
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} references a vertex outside 0..{n}"
                )));
            }
            let [a, b, c] = *tri;
            if a == b || b == c || a == c {
                return Err(Error::DegenerateTriangle { index: t, a, b, c });
            }
            let area = triangle_area(&positions[a], &positions[b], &positions[c]);
            if !(area > 0.0) {
                return Err(Error::DegenerateTriangle { index: t, a, b, c });
            }
            for k in 0..3 {
                let corner = tri[k];
                let i = tri[(k + 1) % 3];
                let j = tri[(k + 2) % 3];
                let u = sub(&positions[i], &positions[corner]);
                let v = sub(&positions[j], &positions[corner]);
                let cot = dot(&u, &v) / (2.0 * area);
                edge_terms.push((i, j, 0.5 * cot));
                mass_terms[corner].push(area / 3.0);
            }
        }
        if let Some(v) = mass_terms.iter().position(|m| m.is_empty()) {
            return Err(Error::InvalidMesh(format!("vertex {v} belongs to no triangle")));
        }
        let mass = mass_terms.iter_mut().map(|m| sorted_sum(m)).collect();
        let mut mesh = Mesh::from_weighted_edges(n, edge_terms, mass)?;
        mesh.positions = Some(positions);
        mesh.triangles = Some(triangles);
        Ok(mesh)
    }

    fn rebuild(&mut self) {
        let n = self.vertex_count;
        let mut neighbors: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (&(i, j), &v) in &self.edges {
            neighbors[i].push((j, v));
            neighbors[j].push((i, v));
        }
        for row in &mut neighbors {
            row.sort_by_key(|&(j, _)| j);
        }
        self.diagonal = neighbors
            .iter()
            .map(|row| {
                let mut vals: Vec<f64> = row.iter().map(|&(_, v)| v).collect();
                -sorted_sum(&mut vals)
            })
            .collect();
        self.neighbors = neighbors;
        self.warnings.retain(|w| !w.starts_with("negative edge weight"));
        let negative: Vec<_> = self.edges.iter().filter(|(_, &v)| v > 0.0).collect();
        if let Some((&(i, j), &v)) = negative.first() {
            self.warnings.push(format!(
                "negative edge weight on {} edge(s), first ({i}, {j}) = {}",
                negative.len(),
                -v
            ));
        }
    }

    pub fn with_triangles(mut self, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if let Some(t) = triangles
            .iter()
            .position(|tri| tri.iter().any(|&v| v >= self.vertex_count))
        {
            return Err(Error::InvalidMesh(format!("triangle {t} out of range")));
        }
        self.triangles = Some(triangles);
        Ok(self)
    }

    pub fn with_positions(mut self, positions: Vec<[f64; 3]>) -> Result<Self> {
        if positions.len() != self.vertex_count {
            return Err(Error::InvalidMesh(format!(
                "{} positions for {} vertices",
                positions.len(),
                self.vertex_count
            )));
        }
        self.positions = Some(positions);
        Ok(self)
    }

    /// Records a named vertex cycle (a boundary circle or a seam).
    pub fn with_cycle(mut self, name: impl Into<String>, cycle: Vec<usize>) -> Result<Self> {
        let name = name.into();
        if cycle.len() < 3 {
            return Err(Error::InvalidMesh(format!(
                "cycle {name:?} has {} vertices, need at least 3",
                cycle.len()
            )));
        }
        let distinct: BTreeSet<_> = cycle.iter().collect();
        if distinct.len() != cycle.len() || cycle.iter().any(|&v| v >= self.vertex_count) {
            return Err(Error::InvalidMesh(format!(
                "cycle {name:?} repeats a vertex or is out of range"
            )));
        }
        self.cycles.insert(name, cycle);
        Ok(self)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn positions(&self) -> Option<&[[f64; 3]]> {
        self.positions.as_deref()
    }

    pub fn triangles(&self) -> Option<&[[usize; 3]]> {
        self.triangles.as_deref()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// Sum of the lumped masses; plays the role of the volume.
    pub fn total_mass(&self) -> f64 {
        let mut m = self.mass.clone();
        sorted_sum(&mut m)
    }

    /// Entry `L_ij`.
    pub fn stiffness(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diagonal[i];
        }
        self.edges
            .get(&(i.min(j), i.max(j)))
            .copied()
            .unwrap_or(0.0)
    }

    /// Off-diagonal entries `(j, L_ij)` of row `i`, sorted by `j`.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }

    /// Upper-triangle off-diagonal entries `(i, j, L_ij)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().map(|(&(i, j), &v)| (i, j, v))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn cycles(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.cycles
    }

    pub fn cycle(&self, name: &str) -> Result<&[usize]> {
        self.cycles
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::InvalidMesh(format!("no cycle named {name:?}")))
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// `(L·1)_i`, accumulated in the same order as the diagonal so the result
    /// is exactly zero.
    pub fn row_sum(&self, i: usize) -> f64 {
        let mut vals: Vec<f64> = self.neighbors[i].iter().map(|&(_, v)| v).collect();
        self.diagonal[i] + sorted_sum(&mut vals)
    }

    pub fn stiffness_dense(&self) -> DMatrix<f64> {
        let n = self.vertex_count;
        let mut l = DMatrix::zeros(n, n);
        for i in 0..n {
            l[(i, i)] = self.diagonal[i];
        }
        for (&(i, j), &v) in &self.edges {
            l[(i, j)] = v;
            l[(j, i)] = v;
        }
        l
    }

    /// `L·u`.
    pub fn apply_stiffness(&self, u: &[f64]) -> Vec<f64> {
        (0..self.vertex_count)
            .map(|i| {
                self.diagonal[i] * u[i]
                    + self.neighbors[i]
                        .iter()
                        .map(|&(j, v)| v * u[j])
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        self.components() == 1
    }

    pub fn components(&self) -> usize {
        let n = self.vertex_count;
        let mut seen = vec![false; n];
        let mut count = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &(w, _) in &self.neighbors[v] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        count
    }

    /// Vertices within graph distance `radius` of `center`.
    pub fn ball(&self, center: usize, radius: usize) -> VertexSet {
        let mut dist = HashMap::from([(center, 0usize)]);
        let mut queue = VecDeque::from([center]);
        while let Some(v) = queue.pop_front() {
            let d = dist[&v];
            if d == radius {
                continue;
            }
            for &(w, _) in &self.neighbors[v] {
                if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(w) {
                    e.insert(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist.into_keys().collect()
    }

    /// Distinct triangle edges, if the mesh carries triangles.
    pub fn triangle_edges(&self) -> Option<BTreeSet<(usize, usize)>> {
        let tris = self.triangles.as_ref()?;
        let mut out = BTreeSet::new();
        for t in tris {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                out.insert((a.min(b), a.max(b)));
            }
        }
        Some(out)
    }

    /// `V - E + F` of the triangulation.
    pub fn euler_characteristic(&self) -> Option<i64> {
        let edges = self.triangle_edges()?;
        let faces = self.triangles.as_ref()?.len();
        Some(self.vertex_count as i64 - edges.len() as i64 + faces as i64)
    }

    /// Directed boundary edges `(u, v)` as they occur in their single
    /// incident triangle.
    pub fn boundary_edges(&self) -> Option<Vec<(usize, usize)>> {
        let tris = self.triangles.as_ref()?;
        let mut count: BTreeMap<(usize, usize), (usize, (usize, usize))> = BTreeMap::new();
        for t in tris {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let e = count.entry((a.min(b), a.max(b))).or_insert((0, (a, b)));
                e.0 += 1;
            }
        }
        Some(
            count
                .into_values()
                .filter(|(c, _)| *c == 1)
                .map(|(_, d)| d)
                .collect(),
        )
    }

    /// Boundary loops traced along the triangle orientation, each starting at
    /// its smallest vertex.
    pub fn boundary_loops(&self) -> Option<Vec<Vec<usize>>> {
        let edges = self.boundary_edges()?;
        let next: BTreeMap<usize, usize> = edges.iter().copied().collect();
        let mut visited = BTreeSet::new();
        let mut loops = Vec::new();
        for &start in next.keys() {
            if visited.contains(&start) {
                continue;
            }
            let mut cycle = vec![start];
            visited.insert(start);
            let mut v = next[&start];
            while v != start {
                if !visited.insert(v) {
                    break;
                }
                cycle.push(v);
                match next.get(&v) {
                    Some(&w) => v = w,
                    None => break,
                }
            }
            loops.push(cycle);
        }
        Some(loops)
    }

    /// Direction in which the triangles traverse edge `{a, b}`: `Some(true)`
    /// when some triangle contains `a -> b`.
    pub(crate) fn edge_direction(&self, a: usize, b: usize) -> Option<bool> {
        let tris = self.triangles.as_ref()?;
        for t in tris {
            for k in 0..3 {
                let (u, v) = (t[k], t[(k + 1) % 3]);
                if (u, v) == (a, b) {
                    return Some(true);
                }
                if (u, v) == (b, a) {
                    return Some(false);
                }
            }
        }
        None
    }

    /// Hex SHA-256 over the stiffness, mass and vertex count.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.vertex_count as u64).to_le_bytes());
        for (&(i, j), &v) in &self.edges {
            h.update((i as u64).to_le_bytes());
            h.update((j as u64).to_le_bytes());
            h.update(v.to_bits().to_le_bytes());
        }
        for w in &self.mass {
            h.update(w.to_bits().to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn length(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let d = sub(a, b);
    dot(&d, &d).sqrt()
}

/// Triangle area from its sorted side lengths (Kahan's form of Heron's
/// formula), independent of vertex order.
pub(crate) fn triangle_area(p: &[f64; 3], q: &[f64; 3], r: &[f64; 3]) -> f64 {
    let mut s = [length(p, q), length(q, r), length(r, p)];
    s.sort_by(|x, y| y.total_cmp(x));
    let [a, b, c] = s;
    let prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    if prod <= 0.0 {
        0.0
    } else {
        0.25 * prod.sqrt()
    }
}
