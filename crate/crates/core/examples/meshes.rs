//! Builds every built-in mesh and prints its basic invariants.
//!
//! `cargo run --example meshes`

use mfield::mesh::{build_mesh, MeshSpec};

fn main() -> mfield::Result<()> {
    let specs = [
        MeshSpec::TorusLattice { nx: 8, ny: 8, spacing: 1.0 },
        MeshSpec::CylinderCollar { circumference: 6, rows: 4, spacing: 1.0 },
        MeshSpec::Icosphere { subdivisions: 2 },
        MeshSpec::IcosphereEquatorial { subdivisions: 1 },
        MeshSpec::Path { vertices: 10, weight: 1.0, mass: 1.0 },
    ];
    for spec in &specs {
        let mesh = build_mesh(spec)?;
        let chi = mesh
            .euler_characteristic()
            .map_or("-".to_string(), |c| c.to_string());
        let loops = mesh.boundary_loops().map_or(0, |l| l.len());
        println!(
            "{:<60} V={:<4} E={:<4} chi={:<3} boundary loops={} area={:.4} fingerprint={}",
            serde_json::to_string(spec)?,
            mesh.vertex_count(),
            mesh.edge_count(),
            chi,
            loops,
            mesh.total_mass(),
            &mesh.fingerprint()[..12],
        );
    }
    Ok(())
}
