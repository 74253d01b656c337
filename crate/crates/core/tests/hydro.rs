use discoflux::entropy::bin_means;
use discoflux::fv::{Discretization, Grid1D};
use discoflux::harness::{binned_l1, flux_model, hydro_reference, lattice_model, run_epsilon_study, run_hydro};
use discoflux::harness::{ExperimentConfig, ReferenceKind};
use discoflux::rng::{stream, Purpose};
use discoflux::zrp::sample_product_measure;
use discoflux::{Branch, EquilibriumTables, MollifierKernel, RateFunction};

#[test]
fn equilibrium_start_stays_within_fluctuation_scale() {
    let cfg = ExperimentConfig::parse("profile = steady:0.5\nn_ladder = 250,500\nreplicas = 20\nt = 0.4\ndeterministic = true\n")
        .unwrap();
    let out = run_hydro(&cfg).unwrap();
    let reference = out.report.reference.clone().unwrap();
    assert!(matches!(reference.kind, ReferenceKind::ExactRiemann { .. }));
    let model = flux_model(&cfg).unwrap();
    let tables = EquilibriumTables::new(RateFunction::Indicator).unwrap();
    for row in &out.report.rows {
        // equilibrium Monte Carlo: the same L1 functional on fresh product-measure samples
        let lattice = lattice_model(&cfg, row.n).unwrap();
        let rho = cfg.profile.at_sites(&model, &lattice).unwrap();
        let sigma_eq = (0..200u64)
            .map(|r| {
                let c = sample_product_measure(&tables, &rho, &mut stream(99, r, Purpose::Auxiliary)).unwrap();
                let bins: Vec<f64> = bin_means(&c.block_averages(row.l), cfg.bins).into_iter().map(Option::unwrap).collect();
                binned_l1(&bins, &reference.bins)
            })
            .sum::<f64>()
            / 200.0;
        assert!(row.l1_mean >= 0.0);
        assert!(row.l1_mean <= 5.0 * sigma_eq, "N = {}: {} vs sigma_eq {}", row.n, row.l1_mean, sigma_eq);
    }
}

#[test]
fn events_grow_at_most_sixfold_per_doubling() {
    let cfg = ExperimentConfig::parse("n_ladder = 125,250,500\nreplicas = 4\nblock = 5\nt = 0.4\n").unwrap();
    let out = run_hydro(&cfg).unwrap();
    for g in out.report.event_growth() {
        assert!(g > 2.0 && g <= 6.0, "{g}");
    }
}

#[test]
fn steady_epsilon_ladder_bounded_by_steady_perturbation() {
    let cfg = ExperimentConfig::parse("profile = steady:0.5\nepsilon0 = 1/16\nlevels = 3\nt = 0.4\n").unwrap();
    let rep = run_epsilon_study(&cfg).unwrap();
    let model = flux_model(&cfg).unwrap();
    let steady = |eps: f64, n: usize| {
        let d = Discretization::new(&model, Some(&MollifierKernel::new(eps).unwrap()), Grid1D::new(n)).unwrap();
        d.steady_profile(0.5, Branch::Plus).unwrap()
    };
    let restrict = |v: Vec<f64>| -> Vec<f64> { v.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect() };
    for row in &rep.rows {
        let (eps, n) = (row.epsilon, row.n_cells);
        let coarse = Grid1D::new(n);
        let fine = Grid1D::new(2 * n);
        // contraction towards each level's own steady state, then the triangle inequality
        let start_gap_coarse = coarse.l1_distance(&steady(cfg.epsilon0, n), &steady(eps, n));
        let start_gap_fine = fine.l1_distance(&steady(cfg.epsilon0, 2 * n), &steady(eps / 2.0, 2 * n));
        let perturbation = coarse.l1_distance(&steady(eps, n), &restrict(steady(eps / 2.0, 2 * n)));
        let bound = start_gap_coarse + perturbation + start_gap_fine;
        assert!(row.l1_diff <= bound * (1.0 + 1e-9), "eps {eps}: {} > {bound}", row.l1_diff);
    }
}

#[test]
fn riemann_reference_bins_match_fine_solve() {
    let cfg = ExperimentConfig::parse("t = 0.4").unwrap();
    let exact = hydro_reference(&cfg, 0.4, 10).unwrap();
    let model = flux_model(&cfg).unwrap();
    let grid = Grid1D::new(4000);
    let disc = Discretization::new(&model, Some(&MollifierKernel::new(8.0 / 4000.0).unwrap()), grid).unwrap();
    let sol = disc.solve(&cfg.profile.on_grid(&model, &disc).unwrap(), 0.4).unwrap();
    let fine: Vec<f64> = bin_means(&sol.values, 10).into_iter().map(Option::unwrap).collect();
    assert!(binned_l1(&exact.bins, &fine) < 0.01);
}
