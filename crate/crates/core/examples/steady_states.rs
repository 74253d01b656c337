//! Steady states `m_α` of the fixture and the envelope level of a datum.

use discoflux::steady::{envelope_alpha, solve_steady, steady_profile, Branch};
use discoflux::{FluxModel, Grid1D, RateFunction, SpeedField};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = FluxModel::for_rate(SpeedField::step(2.0, 1.0, 0.5)?, &RateFunction::Indicator)?;
    for alpha in [0.25, 0.5, 0.9] {
        let left = solve_steady(&model, alpha, 0.25, Branch::Plus)?;
        let right = solve_steady(&model, alpha, 0.75, Branch::Plus)?;
        println!("alpha {alpha}: m = {left:.10} | {right:.10}");
    }

    let grid = Grid1D::new(8);
    let m = steady_profile(&model, 0.5, &grid, Branch::Plus)?;
    let flux: Vec<f64> = grid.centers().iter().zip(&m).map(|(&x, &r)| model.flux(x, r)).collect();
    println!("flux along m_0.5: {flux:.12?}");

    let rho = grid.sample(|x| if x < 0.5 { 1.0 / 3.0 } else { 2.0 });
    println!("envelope level of the Riemann datum: {}", envelope_alpha(&model, &grid.centers(), &rho)?);
    Ok(())
}
