//! A quartic Wick interaction on a path: interacting moments and a Monte
//! Carlo check of the Markov property with pooled z-scores.
//!
//! `cargo run --release --example interacting`

use std::sync::Arc;

use mfield::interacting::{nu_markov_report, nu_moment, wick_potential, MarkovMc, McConfig};
use mfield::mesh::{build_mesh, make_partition, MeshSpec, VertexSet};
use mfield::sobolev::FieldOperator;
use mfield::wick::{Ordering, Polynomial};

fn main() -> mfield::Result<()> {
    let mesh = Arc::new(build_mesh(&MeshSpec::Path { vertices: 8, weight: 1.0, mass: 1.0 })?);
    let fop = FieldOperator::assemble(Arc::clone(&mesh), 1.0)?;
    let all: VertexSet = (0..8).collect();
    let pot = wick_potential(&fop, &all, &[0.0, 0.0, 0.0, 0.0, 0.2])?;

    let free = fop.covariance()[(3, 3)];
    let sq = Polynomial::coordinate(Ordering::Plain, 8, 1.0, &[3, 3])?;
    let e = nu_moment(&fop, &pot, &sq, McConfig { seed: 1, n: 200_000 })?;
    println!("free <phi_3^2> = {free:.5}, interacting {:.5} +- {:.5} (ess {:.0})", e.value, e.stderr, e.ess);

    let part = make_partition(&mesh, &VertexSet::from([5, 6]))?;
    let f = Polynomial::coordinate(Ordering::Plain, 8, 1.0, &[5, 6])?;
    let mc = MarkovMc { seed: 2, n_outer: 40, n_inner: 5000, pool_factor: 20 };
    let report = nu_markov_report(&fop, &pot, &part, &f, mc)?;
    for row in &report.rows {
        println!("config {:>2} diff {:+.4e} z {:+.2}", row.config, row.diff, row.z);
    }
    println!("pooled z {:+.3}, outer ess {:.0}, degenerate {}", report.pooled_z, report.outer_ess, report.degenerate);
    Ok(())
}
