// Sphere series solutions: coefficients, far-field patterns, and the
// optical theorem Im A(alpha) = k/(4 pi) int |A|^2.

use lapscat::coefficients::BoundaryKind;
use lapscat::geometry::{sphere_quadrature, Vec3};
use lapscat::oracle::MieSeries;

fn main() -> lapscat::Result<()> {
    let k = 1.0;
    let quad = sphere_quadrature(1.0, 40)?;
    for (kind, sigma) in [
        (BoundaryKind::Dirichlet, 0.0),
        (BoundaryKind::Neumann, 0.0),
        (BoundaryKind::Robin, 1.0),
    ] {
        let mie = MieSeries::new(1.0, k, kind, sigma)?;
        let forward = mie.far_field(&Vec3::z());
        let back = mie.far_field(&-Vec3::z());
        let energy: f64 = quad.integrate(|b| mie.far_field(b).norm_sqr());
        let optical = k / (4.0 * std::f64::consts::PI) * energy;
        println!(
            "{:<9} L = {:>2}  A(+z) = {:.5}  A(-z) = {:.5}  sigma_tot = {:.5}  Im A(+z) = {:.6} vs {:.6}",
            kind.as_str(),
            mie.order(),
            forward,
            back,
            mie.cross_section(),
            forward.im,
            optical
        );
    }

    let mie = MieSeries::new(1.0, k, BoundaryKind::Dirichlet, 0.0)?;
    println!("\n|x|    |u_total| on the +x axis");
    for r in [1.0, 1.5, 2.0, 4.0, 8.0] {
        let (u, _) = mie.total(&Vec3::new(r, 0.0, 0.0))?;
        println!("{r:<6} {:.6}", u.norm());
    }
    Ok(())
}
