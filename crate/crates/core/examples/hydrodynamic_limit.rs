//! N-ladder of particle ensembles against the exact wave solution.
//! Pass a config file path to override the fixture.

use discoflux::entropy::young_concentration;
use discoflux::harness::{run_hydro, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = match std::env::args().nth(1) {
        Some(p) => ExperimentConfig::from_file(p.as_ref())?,
        None => ExperimentConfig::parse("n_ladder = 125,250,500\nreplicas = 30\n")?,
    };
    let out = run_hydro(&cfg)?;
    println!("reference: {:?}", out.report.reference.as_ref().map(|r| &r.kind));
    for (row, point) in out.report.rows.iter().zip(&out.points) {
        let young = point.young.as_ref().and_then(|y| young_concentration(y).ok());
        println!(
            "N = {:5}  eps = {:.4}  L1 = {:.4e} +- {:.1e}  events = {:10}  max bin variance = {:.3e}",
            row.n,
            row.epsilon,
            row.l1_mean,
            row.standard_error(),
            row.events_total,
            young.map_or(f64::NAN, |s| s.max_variance)
        );
    }
    println!("decreasing within noise: {}", out.report.decreasing_within_noise());
    println!("error ratio last/first: {:.3}", out.report.final_ratio());
    for (k, r) in out.young_ratios().into_iter().enumerate() {
        match r {
            Some(r) => println!("pooled variance ratio, doubling {k}: {r:.3}"),
            None => println!("pooled variance ratio, doubling {k}: undefined"),
        }
    }
    Ok(())
}
