//! Reflected Gram matrices of random Wick families on the reflected torus and
//! icosphere, at positive mass and in the massless limit.
//!
//! `cargo run --example reflection_positivity`

use mfield::positivity::{random_family, reflected_icosphere, reflected_torus, rp_gram, MassMode, ReflectedMesh};
use mfield::sobolev::FieldOperator;
use mfield::wick::{derive_seed, Ordering};

fn report(name: &str, rm: &ReflectedMesh, mass: f64, mode: MassMode) -> mfield::Result<()> {
    let fop = FieldOperator::assemble(rm.mesh.clone(), mass)?;
    let part = rm.involution.partition();
    let (region, mean_zero) = match mode {
        MassMode::Massive => (part.closure(), false),
        MassMode::ZeroMassLimit => (part.omega.clone(), true),
    };
    let mut min_ratio = f64::INFINITY;
    for k in 0..10 {
        let fam = random_family(Ordering::Wick(fop.context()), fop.dim(), &region, 8, 3, mean_zero, derive_seed(1, k))?;
        let g = rp_gram(&fop, &rm.involution, &fam, mode)?;
        assert!(g.pass);
        min_ratio = min_ratio.min(g.min_eigenvalue / g.scale);
    }
    println!("{name:<10} m = {mass:<4} smallest eigenvalue / norm over 10 families: {min_ratio:e}");
    Ok(())
}

fn main() -> mfield::Result<()> {
    let torus = reflected_torus(8, 8)?;
    let sphere = reflected_icosphere(1)?;
    for (name, rm) in [("torus", &torus), ("icosphere", &sphere)] {
        report(name, rm, 1.0, MassMode::Massive)?;
        report(name, rm, 0.0, MassMode::ZeroMassLimit)?;
    }
    Ok(())
}
