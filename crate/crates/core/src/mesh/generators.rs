//! Built-in meshes.
//!
//! Vertex orderings:
//! * `torus_lattice` / `cylinder_collar`: vertex `(col, row)` has index
//!   `row * width + col`.
//! * `icosphere`: the 12 icosahedron vertices first, then edge midpoints in
//!   the order they are first created while refining the face list.
//! * `icosphere_equatorial`: the icosphere ordering, followed by one vertex
//!   per edge crossing the plane `x = 0`, in order of first encounter.
//! * `path`: vertex `i` joined to `i + 1`.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{Mesh, VertexSet};
use crate::error::{Error, Result};

/// Serializable mesh recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSpec {
    TorusLattice {
        nx: usize,
        ny: usize,
        #[serde(default = "unit")]
        spacing: f64,
    },
    CylinderCollar {
        circumference: usize,
        rows: usize,
        #[serde(default = "unit")]
        spacing: f64,
    },
    Icosphere {
        subdivisions: usize,
    },
    IcosphereEquatorial {
        subdivisions: usize,
    },
    Path {
        vertices: usize,
        #[serde(default = "unit")]
        weight: f64,
        #[serde(default = "unit")]
        mass: f64,
    },
}

fn unit() -> f64 {
    1.0
}

pub fn build_mesh(spec: &MeshSpec) -> Result<Mesh> {
    match *spec {
        MeshSpec::TorusLattice { nx, ny, spacing } => torus_lattice(nx, ny, spacing),
        MeshSpec::CylinderCollar {
            circumference,
            rows,
            spacing,
        } => cylinder_collar(circumference, rows, spacing),
        MeshSpec::Icosphere { subdivisions } => icosphere(subdivisions),
        MeshSpec::IcosphereEquatorial { subdivisions } => icosphere_equatorial(subdivisions),
        MeshSpec::Path {
            vertices,
            weight,
            mass,
        } => path(vertices, weight, mass),
    }
}

fn check_spacing(spacing: f64) -> Result<()> {
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "spacing must be positive, got {spacing}"
        )));
    }
    Ok(())
}

/// Square lattice assembled cell by cell: every cell gives half a unit of
/// weight to each of its four sides and a quarter of its area to each
/// corner. Rows `0..rows` are periodic when `periodic` is set.
fn lattice(width: usize, rows: usize, spacing: f64, periodic: bool) -> Result<Mesh> {
    let idx = |c: usize, r: usize| r * width + c;
    let cell_rows = if periodic { rows } else { rows - 1 };
    let area = spacing * spacing;
    let mut edges = Vec::new();
    let mut mass_terms = vec![Vec::new(); width * rows];
    let mut triangles = Vec::new();
    for r in 0..cell_rows {
        let r1 = (r + 1) % rows;
        for c in 0..width {
            let c1 = (c + 1) % width;
            let (a, b, cc, d) = (idx(c, r), idx(c1, r), idx(c1, r1), idx(c, r1));
            edges.extend([(a, b, 0.5), (d, cc, 0.5), (a, d, 0.5), (b, cc, 0.5)]);
            for v in [a, b, cc, d] {
                mass_terms[v].push(area / 4.0);
            }
            triangles.push([a, b, cc]);
            triangles.push([a, cc, d]);
        }
    }
    let mass = mass_terms
        .iter_mut()
        .map(|m| super::sorted_sum(m))
        .collect();
    Mesh::from_weighted_edges(width * rows, edges, mass)?.with_triangles(triangles)
}

pub(crate) fn torus_lattice(nx: usize, ny: usize, spacing: f64) -> Result<Mesh> {
    if nx < 3 || ny < 3 {
        return Err(Error::InvalidParameter(format!(
            "torus lattice needs at least 3 sites per periodic direction, got {nx}x{ny}"
        )));
    }
    check_spacing(spacing)?;
    lattice(nx, ny, spacing, true)
}

/// Open cylinder: periodic around, `rows` rings along. The ring at row 0 is
/// recorded as cycle `"bottom"` and the ring at `rows - 1` as `"top"`, both
/// listed in increasing column order.
pub(crate) fn cylinder_collar(circumference: usize, rows: usize, spacing: f64) -> Result<Mesh> {
    if circumference < 3 {
        return Err(Error::InvalidParameter(format!(
            "cylinder circumference must be at least 3, got {circumference}"
        )));
    }
    if rows < 2 {
        return Err(Error::InvalidParameter(format!(
            "cylinder needs at least 2 rows, got {rows}"
        )));
    }
    check_spacing(spacing)?;
    let bottom = (0..circumference).collect();
    let top = ((rows - 1) * circumference..rows * circumference).collect();
    lattice(circumference, rows, spacing, false)?
        .with_cycle("bottom", bottom)?
        .with_cycle("top", top)
}

pub(crate) fn path(vertices: usize, weight: f64, mass: f64) -> Result<Mesh> {
    if vertices == 0 {
        return Err(Error::InvalidParameter("path needs a vertex".into()));
    }
    Mesh::from_weighted_edges(
        vertices,
        (1..vertices).map(|i| (i - 1, i, weight)),
        vec![mass; vertices],
    )
}

fn normalize(p: [f64; 3]) -> [f64; 3] {
    let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    [p[0] / n, p[1] / n, p[2] / n]
}

fn icosphere_geometry(subdivisions: usize) -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut pos: Vec<[f64; 3]> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .into_iter()
    .map(normalize)
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, pos: &mut Vec<[f64; 3]>| -> usize {
            *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (p, q) = (pos[a], pos[b]);
                pos.push(normalize([
                    (p[0] + q[0]) / 2.0,
                    (p[1] + q[1]) / 2.0,
                    (p[2] + q[2]) / 2.0,
                ]));
                pos.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut pos);
            let bc = midpoint(b, c, &mut pos);
            let ca = midpoint(c, a, &mut pos);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    (pos, faces)
}

/// Unit icosphere with cotangent stiffness.
pub(crate) fn icosphere(subdivisions: usize) -> Result<Mesh> {
    let (pos, faces) = icosphere_geometry(subdivisions);
    Mesh::from_triangles(pos, faces)
}

/// Icosphere refined so that the plane `x = 0` is covered by mesh edges.
///
/// Every edge crossing the plane joins a vertex to its mirror image; it is
/// split at its midpoint `(0, y, z)` and each crossing face is cut in two.
/// The cut is flat, so the new right angles get an exactly zero cotangent and
/// the reflection `x -> -x` preserves the stiffness and mass bit for bit.
/// The equator is recorded as cycle `"equator"`.
pub(crate) fn icosphere_equatorial(subdivisions: usize) -> Result<Mesh> {
    let (mut pos, faces) = icosphere_geometry(subdivisions);
    let side = |p: &[f64; 3]| p[0].partial_cmp(&0.0).unwrap();
    let mut split: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut out = Vec::with_capacity(faces.len() + 16);
    for face in &faces {
        let crossing = (0..3).find(|&k| {
            let (u, v) = (face[k], face[(k + 1) % 3]);
            side(&pos[u]) as i8 * side(&pos[v]) as i8 == -1
        });
        let Some(k) = crossing else {
            out.push(*face);
            continue;
        };
        let (u, v, c) = (face[k], face[(k + 1) % 3], face[(k + 2) % 3]);
        let (pu, pv) = (pos[u], pos[v]);
        if pu[0] != -pv[0] || pu[1] != pv[1] || pu[2] != pv[2] || pos[c][0] != 0.0 {
            return Err(Error::InvalidMesh(
                "plane crossing is not a mirror pair; equatorial split needs a symmetric mesh"
                    .into(),
            ));
        }
        let key = (u.min(v), u.max(v));
        let p = *split.entry(key).or_insert_with(|| {
            pos.push([0.0, pu[1], pu[2]]);
            pos.len() - 1
        });
        out.push([c, u, p]);
        out.push([c, p, v]);
    }
    let mesh = Mesh::from_triangles(pos, out)?;
    let equator = equator_cycle(&mesh)?;
    mesh.with_cycle("equator", equator)
}

fn equator_cycle(mesh: &Mesh) -> Result<Vec<usize>> {
    let (plus, map) = submesh(mesh, |p| p[0] >= 0.0)?;
    let loops = plus.boundary_loops().unwrap_or_default();
    match loops.as_slice() {
        [one] => Ok(one.iter().map(|&v| map[v]).collect()),
        _ => Err(Error::InvalidMesh(format!(
            "expected one equatorial loop, found {}",
            loops.len()
        ))),
    }
}

/// Triangles whose three vertices satisfy `keep`, re-indexed compactly in
/// increasing original order. Returns the submesh and the map back to the
/// original vertex ids.
fn submesh(mesh: &Mesh, keep: impl Fn(&[f64; 3]) -> bool) -> Result<(Mesh, Vec<usize>)> {
    let pos = mesh
        .positions()
        .ok_or_else(|| Error::InvalidMesh("submesh needs positions".into()))?;
    let tris = mesh
        .triangles()
        .ok_or_else(|| Error::InvalidMesh("submesh needs triangles".into()))?;
    let kept: Vec<[usize; 3]> = tris
        .iter()
        .filter(|t| t.iter().all(|&v| keep(&pos[v])))
        .copied()
        .collect();
    let used: VertexSet = kept.iter().flatten().copied().collect();
    let back: Vec<usize> = used.into_iter().collect();
    let forward: HashMap<usize, usize> = back.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let sub_pos = back.iter().map(|&v| pos[v]).collect();
    let sub_tris = kept
        .iter()
        .map(|t| [forward[&t[0]], forward[&t[1]], forward[&t[2]]])
        .collect();
    Ok((Mesh::from_triangles(sub_pos, sub_tris)?, back))
}

/// The two closed halves `x >= 0` and `x <= 0` of an equatorial icosphere.
#[derive(Debug, Clone)]
pub struct Hemispheres {
    pub full: Mesh,
    pub plus: Mesh,
    pub minus: Mesh,
    pub plus_to_full: Vec<usize>,
    pub minus_to_full: Vec<usize>,
}

/// Splits [`MeshSpec::IcosphereEquatorial`] into hemispheres. Both carry a
/// cycle `"equator"`; position `i` of the two cycles is the same vertex of
/// the full sphere, traversed in opposite directions by the two halves.
pub fn icosphere_hemispheres(subdivisions: usize) -> Result<Hemispheres> {
    let full = icosphere_equatorial(subdivisions)?;
    let (plus, plus_to_full) = submesh(&full, |p| p[0] >= 0.0)?;
    let (minus, minus_to_full) = submesh(&full, |p| p[0] <= 0.0)?;
    let loops = plus.boundary_loops().unwrap_or_default();
    let [plus_cycle] = loops.as_slice() else {
        return Err(Error::InvalidMesh("hemisphere boundary is not one loop".into()));
    };
    let full_to_minus: HashMap<usize, usize> = minus_to_full
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i))
        .collect();
    let minus_cycle = plus_cycle
        .iter()
        .map(|&v| full_to_minus[&plus_to_full[v]])
        .collect();
    let plus = plus.with_cycle("equator", plus_cycle.clone())?;
    let minus = minus.with_cycle("equator", minus_cycle)?;
    Ok(Hemispheres {
        full,
        plus,
        minus,
        plus_to_full,
        minus_to_full,
    })
}
