//! The fixture flux `λ(x) h(ρ)` and its mollified speed across the jump.

use discoflux::flux::mollified_speed;
use discoflux::{Closure, FluxModel, MollifierKernel, RateFunction, SpeedField};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = FluxModel::for_rate(SpeedField::step(2.0, 1.0, 0.5)?, &RateFunction::Indicator)?;
    let h = model.closure();
    println!("h(1) = {}, sup h = {:.6}, h^-1(0.5) = {:?}", h.h(1.0), h.sup(), h.inverse(0.5));

    let k = MollifierKernel::new(0.05)?;
    println!("kernel mass {:.12}", k.mass());
    println!("{:>6} {:>10} {:>10}", "x", "lambda", "lambda_eps");
    for i in 0..=10 {
        let x = 0.4 + 0.02 * i as f64;
        println!("{x:6.2} {:10.6} {:10.6}", model.speed().eval(x), mollified_speed(&model, &k, x));
    }

    // a table rate gets a tabulated closure
    let table = Closure::for_rate(&RateFunction::table(&[0.0, 1.0, 1.5, 2.0])?)?;
    println!("table rate: h(1) = {:.6}, sup = {:.6}", table.h(1.0), table.sup());
    Ok(())
}
