//! Conditions a Wick polynomial supported near a disk on the complement of
//! the disk and on its boundary circle, and compares the two results.
//!
//! `cargo run --example markov`

use std::sync::Arc;

use mfield::mesh::{build_mesh, make_partition, MeshSpec};
use mfield::positivity::random_family;
use mfield::sobolev::FieldOperator;
use mfield::wick::{conditional_expectation, Ordering};

fn main() -> mfield::Result<()> {
    let mesh = Arc::new(build_mesh(&MeshSpec::TorusLattice { nx: 8, ny: 8, spacing: 1.0 })?);
    let part = make_partition(&mesh, &mesh.ball(36, 1))?;
    for mass in [0.1, 1.0, 10.0] {
        let fop = FieldOperator::assemble(Arc::clone(&mesh), mass)?;
        let family = random_family(Ordering::Wick(fop.context()), fop.dim(), &part.closure(), 10, 4, false, 7)?;
        let mut worst = 0.0f64;
        for p in &family {
            let lhs = conditional_expectation(&fop, &part.complement(), p)?;
            let rhs = conditional_expectation(&fop, &part.boundary, p)?;
            let scale = lhs.coefficient_scale().max(rhs.coefficient_scale()).max(1.0);
            worst = worst.max(lhs.coefficient_distance(&rhs)? / scale);
        }
        println!("m = {mass:<5} worst relative coefficient distance {worst:e}");
    }
    Ok(())
}
