//! Tracks `m² (u, v)₋₁` as the mass goes to zero; the limit is the product of
//! the zero-mode coefficients.
//!
//! `cargo run --example zero_mode`

use mfield::mesh::{build_mesh, MeshSpec};
use mfield::sobolev::Spectrum;

fn main() -> mfield::Result<()> {
    let mesh = build_mesh(&MeshSpec::Icosphere { subdivisions: 1 })?;
    let w = mesh.mass();
    let lump = |center: usize| -> Vec<f64> {
        let mut f = vec![0.0; mesh.vertex_count()];
        for v in mesh.ball(center, 1) {
            f[v] = w[v];
        }
        f
    };
    let (f, g) = (lump(0), lump(3));
    let limit = f.iter().sum::<f64>() * g.iter().sum::<f64>() / mesh.total_mass();
    let spectrum = Spectrum::new(&mesh);
    println!("limit {limit:.8e}");
    for k in 0..6 {
        let m = 10f64.powi(-k);
        let value = m * m * spectrum.inner_minus(&f, &g, m);
        println!("m = {m:<8e} m^2 (f,g)_-1 = {value:.8e} relative gap {:.2e}", (value - limit).abs() / limit);
    }
    Ok(())
}
