//! One zero range trajectory from the Riemann datum, block-averaged.

use std::sync::Arc;

use discoflux::rng::{stream, Purpose};
use discoflux::zrp::{profile_at_sites, sample_product_measure, LatticeModel, ZrpProcess};
use discoflux::{EquilibriumTables, JumpKernel, RateFunction, SpeedField};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 1000;
    let field = SpeedField::step(2.0, 1.0, 0.5)?;
    let lattice = Arc::new(LatticeModel::mollified(
        &field,
        n,
        0.5,
        RateFunction::Indicator,
        JumpKernel::totally_asymmetric(),
    )?);
    let tables = EquilibriumTables::new(RateFunction::Indicator)?;
    let rho = profile_at_sites(n, |x| if x < 0.5 { 1.0 / 3.0 } else { 2.0 });
    let eta = sample_product_measure(&tables, &rho, &mut stream(7, 0, Purpose::Initial))?;
    let particles = eta.total_particles();
    let mut process = ZrpProcess::new(lattice, eta)?;
    let mut rng = stream(7, 0, Purpose::Dynamics);
    for t in [0.1, 0.2, 0.4] {
        process.run_until(t, &mut rng)?;
        let blocks = process.configuration().block_averages(10);
        let sample: Vec<String> = (0..10).map(|k| format!("{:.2}", blocks[k * n / 10])).collect();
        println!("t = {t}: events {:9}, eta^l at x = 0, 0.1, ..: {}", process.events(), sample.join(" "));
    }
    assert_eq!(process.configuration().total_particles(), particles);
    Ok(())
}
