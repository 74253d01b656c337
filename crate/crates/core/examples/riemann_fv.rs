//! Exact wave solution of the fixture against the mollified Godunov scheme.

use discoflux::fv::{Discretization, PeriodicRiemann, StepProfile};
use discoflux::{FluxModel, Grid1D, MollifierKernel, RateFunction, SpeedField};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = FluxModel::for_rate(SpeedField::step(2.0, 1.0, 0.5)?, &RateFunction::Indicator)?;
    let data = StepProfile::new(vec![(0.0, 1.0 / 3.0), (0.5, 2.0)]).unwrap();
    let exact = PeriodicRiemann::new(model.speed(), model.closure(), &data)?;
    for (x, w) in exact.jumps().iter().zip(exact.locals()) {
        println!("jump at {x}: trace {:.6}, {:?}", w.trace(), w.wave());
    }
    println!("waves interact at t = {:.6}", exact.interaction_time());

    let t = 0.4;
    for n in [256, 512, 1024, 2048] {
        let grid = Grid1D::new(n);
        let eps = 8.0 * grid.dx();
        let disc = Discretization::new(&model, Some(&MollifierKernel::new(eps)?), grid)?;
        let sol = disc.solve(&grid.sample(|x| data.eval(x)), t)?;
        let reference: Vec<f64> = grid.centers().iter().map(|&x| exact.eval(t, x)).collect::<Result<_, _>>()?;
        println!("n = {n:5}, eps = {eps:.5}: L1 error {:.5}", grid.l1_distance(&sol.values, &reference));
    }
    Ok(())
}
