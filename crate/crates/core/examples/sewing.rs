//! Sews two capped cylinders into a torus and compares the inner product of
//! boundary amplitudes with the glued inner product, over a mass sweep.
//!
//! `cargo run --example sewing`

use mfield::sewing::{mass_sweep, CapKind, SetupSpec, SewSetup};
use mfield::wick::TermData;

fn main() -> mfield::Result<()> {
    let spec = SetupSpec::TorusFromCylinders { circumference: 6, rows: 4 };
    for cap in [CapKind::Cone, CapKind::Disk { rings: 2 }] {
        // Factor vectors live on the capped mesh, whose size depends on the cap.
        let probe = SewSetup::build(spec, cap, 1.0)?;
        let f = vec![TermData {
            coef: 1.0,
            factors: vec![probe.side1.bump(8, 1), probe.side1.bump(14, 1)],
        }];
        let g = vec![TermData {
            coef: 0.5,
            factors: vec![probe.side2.bump(9, 1), probe.side2.bump(9, 1)],
        }];
        for (m, r) in mass_sweep(spec, cap, &[2.0, 1.0, 0.5, 0.1], &f, &g)? {
            println!(
                "{cap:?} m = {m:<4} amplitudes {:.10e} glued {:.10e} residual {:.1e}",
                r.lhs, r.rhs, r.residual
            );
        }
    }
    Ok(())
}
