//! Basic coupling: an ordered pair stays ordered; two independent samples
//! of one equilibrium lose discrepancy over time.

use std::sync::Arc;

use discoflux::coupling::CoupledProcess;
use discoflux::rng::{stream, Purpose};
use discoflux::zrp::{sample_product_measure, LatticeModel};
use discoflux::{Configuration, EquilibriumTables, JumpKernel, RateFunction, SpeedField};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 512;
    let field = SpeedField::step(2.0, 1.0, 0.5)?;
    let lattice = Arc::new(LatticeModel::mollified(
        &field,
        n,
        0.5,
        RateFunction::Indicator,
        JumpKernel::totally_asymmetric(),
    )?);
    let tables = EquilibriumTables::new(RateFunction::Indicator)?;
    let mut init = stream(3, 0, Purpose::Initial);

    let xi = sample_product_measure(&tables, &vec![1.5; n], &mut init)?;
    let eta = Configuration::from_occupancy(xi.occupancy().iter().map(|&k| k / 2).collect());
    let mut ordered = CoupledProcess::new(lattice.clone(), eta, xi)?.with_order_check()?;
    let mut rng = stream(3, 0, Purpose::Dynamics);
    ordered.run_until(0.5, &mut rng)?;
    println!("ordered pair: {} events, order kept, discrepancy {:.4}", ordered.events(), ordered.discrepancy());

    let eta = sample_product_measure(&tables, &vec![1.0; n], &mut init)?;
    let xi = sample_product_measure(&tables, &vec![1.0; n], &mut init)?;
    let mut pair = CoupledProcess::new(lattice, eta, xi)?;
    let times: Vec<f64> = (0..=10).map(|k| 0.1 * k as f64).collect();
    let trace = pair.run_trace(&times, &mut rng)?;
    for ((t, d), g) in trace.times.iter().zip(&trace.discrepancy).zip(&trace.uncoupled_pairs) {
        println!("t = {t:.1}: discrepancy {d:.4}, uncoupled pairs {g}");
    }
    Ok(())
}
