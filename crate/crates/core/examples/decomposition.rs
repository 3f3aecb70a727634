//! Splits a bump on the torus into exterior, boundary and interior parts and
//! checks that the parts are orthogonal in the `-1` inner product.
//!
//! `cargo run --example decomposition -- [mass]`

use std::sync::Arc;

use mfield::mesh::{build_mesh, make_partition, MeshSpec};
use mfield::sobolev::{triple_decompose, FieldOperator, SobolevOrder, TestVector};

fn main() -> mfield::Result<()> {
    let mass: f64 = std::env::args().nth(1).map_or(Ok(1.0), |s| s.parse()).unwrap_or(1.0);
    let mesh = Arc::new(build_mesh(&MeshSpec::TorusLattice { nx: 8, ny: 8, spacing: 1.0 })?);
    let part = make_partition(&mesh, &mesh.ball(27, 2))?;
    println!(
        "omega {} vertices, boundary {}, exterior {}",
        part.omega.len(),
        part.boundary.len(),
        part.exterior.len()
    );
    let fop = FieldOperator::assemble(Arc::clone(&mesh), mass)?;
    println!("pre-Markov residual {:e}", fop.premarkov_residual(&part)?);

    let f = TestVector::bump(&mesh, 29, 2);
    let d = triple_decompose(&fop, &part, &f)?;
    let sum = d.exterior.add(&d.boundary).add(&d.interior).sub(&f).max_abs();
    println!("reconstruction error {sum:e}");
    let parts = [("exterior", &d.exterior), ("boundary", &d.boundary), ("interior", &d.interior)];
    for (i, (a, u)) in parts.iter().enumerate() {
        for (b, v) in &parts[i + 1..] {
            println!("({a}, {b})_-1 = {:e}", fop.inner(SobolevOrder::Minus, u, v)?);
        }
    }
    Ok(())
}
