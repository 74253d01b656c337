use std::sync::Arc;

use discoflux::coupling::CoupledProcess;
use discoflux::fv::Discretization;
use discoflux::rng::{stream, Purpose};
use discoflux::zrp::{sample_product_measure, LatticeModel, ZrpProcess};
use discoflux::{Branch, Closure, EquilibriumTables, JumpKernel, RateFunction, SpeedField};

fn lattice(n: usize) -> Arc<LatticeModel> {
    let field = SpeedField::step(2.0, 1.0, 0.5).unwrap();
    Arc::new(LatticeModel::raw(&field, n, RateFunction::Indicator, JumpKernel::totally_asymmetric()).unwrap())
}

fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn eta_marginal_matches_plain_process() {
    let n = 20;
    let runs = 1000;
    let lat = lattice(n);
    let tables = EquilibriumTables::new(RateFunction::Indicator).unwrap();
    let rho: Vec<f64> = (0..n).map(|u| if u < n / 2 { 1.0 / 3.0 } else { 2.0 }).collect();
    let xi_rho = vec![0.8; n];
    let probe = |occ: &[u32]| (occ[n / 2] as f64, occ[..n / 2].iter().sum::<u32>() as f64);
    let (mut site_c, mut half_c, mut site_p, mut half_p) = (vec![], vec![], vec![], vec![]);
    for r in 0..runs {
        let eta = sample_product_measure(&tables, &rho, &mut stream(1, r, Purpose::Initial)).unwrap();
        let xi = sample_product_measure(&tables, &xi_rho, &mut stream(1, r, Purpose::Reference)).unwrap();
        let mut c = CoupledProcess::new(lat.clone(), eta, xi).unwrap();
        c.run_until(0.5, &mut stream(1, r, Purpose::Dynamics)).unwrap();
        let (s, h) = probe(c.eta().occupancy());
        site_c.push(s);
        half_c.push(h);

        let eta = sample_product_measure(&tables, &rho, &mut stream(2, r, Purpose::Initial)).unwrap();
        let mut p = ZrpProcess::new(lat.clone(), eta).unwrap();
        p.run_until(0.5, &mut stream(2, r, Purpose::Dynamics)).unwrap();
        let (s, h) = probe(p.configuration().occupancy());
        site_p.push(s);
        half_p.push(h);
    }
    let critical = 1.36 * (2.0 / runs as f64).sqrt();
    let d1 = ks_statistic(site_c, site_p);
    let d2 = ks_statistic(half_c, half_p);
    assert!(d1 < critical && d2 < critical, "KS {d1} {d2} vs {critical}");
}

#[test]
fn invariant_block_averages_concentrate_at_steady_state() {
    let n = 512;
    let l = 10;
    let m = 50;
    let lat = lattice(n);
    let tables = EquilibriumTables::new(RateFunction::Indicator).unwrap();
    let disc = Discretization::from_speeds(lat.speeds().to_vec(), Closure::saturating());
    let rho = disc.steady_profile(0.5, Branch::Plus).unwrap();
    // sites well inside each region; the site law at m is geometric
    for (u, m_alpha) in [(128usize, 1.0f64 / 3.0), (384usize, 1.0)] {
        let sigma = (m_alpha * (1.0 + m_alpha)).sqrt();
        let values: Vec<f64> = (0..m as u64)
            .map(|r| {
                let eta = sample_product_measure(&tables, &rho, &mut stream(8, r, Purpose::Reference)).unwrap();
                let xi = eta.clone();
                let mut c = CoupledProcess::new(lat.clone(), eta, xi).unwrap();
                c.run_until(0.2, &mut stream(8, r, Purpose::Dynamics)).unwrap();
                c.xi().block_average(u, l)
            })
            .collect();
        let mean = values.iter().sum::<f64>() / m as f64;
        let band = 4.0 * sigma / (((2 * l + 1) * m) as f64).sqrt();
        assert!((mean - m_alpha).abs() <= band, "site {u}: {mean} vs {m_alpha} (band {band})");
    }
}

#[test]
fn ordered_pairs_stay_ordered_for_table_rates() {
    let n = 64;
    let g = RateFunction::table(&[0.0, 1.0, 1.5, 1.75, 2.0]).unwrap();
    let speeds: Vec<f64> = (0..n).map(|u| if u < n / 2 { 2.0 } else { 1.0 }).collect();
    let lat = Arc::new(LatticeModel::from_speeds(speeds, g.clone(), JumpKernel::new(&[(1, 0.4), (-1, 0.2), (2, 0.4)]).unwrap()).unwrap());
    let tables = EquilibriumTables::new(g).unwrap();
    let xi = sample_product_measure(&tables, &vec![2.0; n], &mut stream(4, 0, Purpose::Initial)).unwrap();
    let eta = discoflux::Configuration::from_occupancy(xi.occupancy().iter().map(|&k| k.saturating_sub(1)).collect());
    let mut c = CoupledProcess::new(lat, eta, xi).unwrap().with_order_check().unwrap();
    let mut rng = stream(4, 0, Purpose::Dynamics);
    for _ in 0..100_000 {
        c.step(&mut rng).unwrap();
    }
    for u in 0..n {
        assert!(c.eta().eta(u) <= c.xi().eta(u));
    }
}
