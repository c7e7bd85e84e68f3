
use pshlab::fiber::FiberIntegrator;
use pshlab::quadrature::make_grid;
use std::f64::consts::PI;

fn main() {
    let spec = pshlab::catalog::demailly(2);
    let it = FiberIntegrator::new(&spec).unwrap();
    for (nt, np) in [(64usize, 128usize), (96, 192), (128, 256), (192, 384), (256, 512)] {
        let grid = make_grid(nt, np).unwrap();
        let s = it.integrate(-2.0, &grid);
        println!("grid {nt}x{np}: mass-pi={:+.3e}  i={:.12}  k={:.12} k3={:.12}", s.mass - PI, s.i, s.cross + s.j, s.k3);
    }
}
