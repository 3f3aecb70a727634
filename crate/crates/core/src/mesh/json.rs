use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Mesh;
use crate::error::{Error, Result};

/// On-disk mesh. `stiffness` lists the upper triangle `[i, j, L_ij]` with
/// `i <= j`, diagonal included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshFile {
    pub vertices: usize,
    pub positions: Option<Vec<[f64; 3]>>,
    pub triangles: Option<Vec<[usize; 3]>>,
    pub stiffness: Vec<(usize, usize, f64)>,
    pub mass: Vec<f64>,
    #[serde(default)]
    pub cycles: BTreeMap<String, Vec<usize>>,
}

impl From<&Mesh> for MeshFile {
    fn from(mesh: &Mesh) -> Self {
        let mut stiffness: Vec<(usize, usize, f64)> = (0..mesh.vertex_count())
            .map(|i| (i, i, mesh.diagonal()[i]))
            .chain(mesh.edges())
            .collect();
        stiffness.sort_by_key(|&(i, j, _)| (i, j));
        MeshFile {
            vertices: mesh.vertex_count(),
            positions: mesh.positions().map(<[_]>::to_vec),
            triangles: mesh.triangles().map(<[_]>::to_vec),
            stiffness,
            mass: mesh.mass().to_vec(),
            cycles: mesh.cycles().clone(),
        }
    }
}

impl TryFrom<MeshFile> for Mesh {
    type Error = Error;

    /// Rebuilds the mesh from its off-diagonal entries and checks that any
    /// stored diagonal agrees with the zero-row-sum diagonal.
    fn try_from(file: MeshFile) -> Result<Mesh> {
        let n = file.vertices;
        let mut diag: BTreeMap<usize, f64> = BTreeMap::new();
        let mut edges = Vec::new();
        for &(i, j, v) in &file.stiffness {
            if i >= n || j >= n {
                return Err(Error::InvalidMesh(format!("stiffness entry ({i}, {j}) out of range")));
            }
            if i > j {
                return Err(Error::InvalidMesh(format!(
                    "stiffness entry ({i}, {j}) is below the diagonal"
                )));
            }
            if i == j {
                if diag.insert(i, v).is_some() {
                    return Err(Error::InvalidMesh(format!("diagonal entry {i} repeated")));
                }
            } else {
                edges.push((i, j, -v));
            }
        }
        let mut mesh = Mesh::from_weighted_edges(n, edges, file.mass)?;
        for (&i, &d) in &diag {
            let scale = mesh.diagonal()[i].abs().max(1.0);
            if (d - mesh.diagonal()[i]).abs() > 1e-12 * scale {
                return Err(Error::InvalidMesh(format!(
                    "row {i} does not sum to zero: diagonal {d} vs {}",
                    mesh.diagonal()[i]
                )));
            }
        }
        if let Some(p) = file.positions {
            mesh = mesh.with_positions(p)?;
        }
        if let Some(t) = file.triangles {
            mesh = mesh.with_triangles(t)?;
        }
        for (name, cyc) in file.cycles {
            mesh = mesh.with_cycle(name, cyc)?;
        }
        Ok(mesh)
    }
}

impl Mesh {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&MeshFile::from(self)).expect("mesh serializes")
    }

    pub fn from_json(text: &str) -> Result<Mesh> {
        let file: MeshFile = serde_json::from_str(text)?;
        Mesh::try_from(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Mesh> {
        Mesh::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}
