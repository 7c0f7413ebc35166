use qergodic::ergodic::ErgodicDriver;
use qergodic::fit::linear_fit;
use qergodic::matcore::HermMatrix;
use qergodic::mps::{
    brute_force_expectation, brute_force_state, correlation, finite_expectation, gauge_fix, thermo_expectation,
    LocalObservable, MpsChain,
};
use qergodic::process::{kappa_estimate, limit_sequence, Side};
use qergodic::rng::{keyed_rng, random_matrix};

fn observable(support: (i64, i64), d: usize, seed: u64) -> LocalObservable {
    let mut rng = keyed_rng(seed, 0, 0);
    let size = d.pow((support.1 - support.0 + 1) as u32);
    LocalObservable::new(support, HermMatrix::from_hermitian_part(&random_matrix(size, size, &mut rng)).into_inner(), d)
        .unwrap()
}

#[test]
fn twelve_site_chain_matches_state_vector() {
    for seed in 0..5 {
        let drv = ErgodicDriver::iid(2, 2, 100 + seed, seed % 2 == 1).unwrap();
        let chain = MpsChain::from_driver(&drv, 0, 11).unwrap();
        let st = brute_force_state(&chain).unwrap();
        let o = observable((5, 6), 2, seed);
        let f = finite_expectation(&chain, &o).unwrap();
        let b = brute_force_expectation(&chain, &st, &o).unwrap();
        assert!((f - b).abs() <= 1e-8, "{f} vs {b}");
    }
}

/// Gaps shrink along an exponential envelope; consecutive gaps need not
/// decrease because the environment fluctuates from site to site.
#[test]
fn finite_chains_approach_the_thermodynamic_limit() {
    for seed in 0..4 {
        let drv = ErgodicDriver::iid(2, 2, 110 + seed, false).unwrap();
        let left = limit_sequence(&drv, Side::Left, 8, 1e-13).unwrap();
        let right = limit_sequence(&drv, Side::Right, 8, 1e-13).unwrap();
        let g = gauge_fix(&drv, &left, &right, 0, 1).unwrap();
        let o = observable((0, 1), 2, 111 + seed);
        let w = thermo_expectation(&g, &o).unwrap();
        let ns: Vec<i64> = (6..=14).collect();
        let gaps: Vec<f64> = ns
            .iter()
            .map(|&n| {
                let chain = MpsChain::from_driver(&drv, -n, n).unwrap();
                (finite_expectation(&chain, &o).unwrap() - w).abs()
            })
            .collect();
        let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        let ys: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
        assert!(linear_fit(&xs, &ys).unwrap().slope < 0.0, "gaps {gaps:?}");
        let early = gaps[..3].iter().cloned().fold(f64::INFINITY, f64::min);
        let late = gaps[6..].iter().cloned().fold(0.0, f64::max);
        assert!(late < early, "gaps {gaps:?}");
    }
}

#[test]
fn correlation_rate_is_comparable_to_kappa() {
    let drv = ErgodicDriver::iid(2, 4, 120, true).unwrap();
    let left = limit_sequence(&drv, Side::Left, 8, 1e-13).unwrap();
    let right = limit_sequence(&drv, Side::Right, 8, 1e-13).unwrap();
    let g = gauge_fix(&drv, &left, &right, -1, 13).unwrap();
    let o1 = observable((0, 0), 4, 121);
    let o2 = observable((0, 0), 4, 122);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for s in 1..=12i64 {
        let shifted = LocalObservable::new((s, s), o2.matrix().clone(), 4).unwrap();
        let c = correlation(&g, &o1, &shifted).unwrap();
        xs.push(s as f64);
        ys.push(c.connected.abs().ln());
    }
    let fit = linear_fit(&xs, &ys).unwrap();
    assert!(fit.slope < 0.0);
    let rate = fit.slope.exp();
    let kappa = kappa_estimate(&drv, 12, 8).unwrap().kappa_hat;
    assert!(rate >= kappa / 2.0 && rate <= 2.0 * kappa, "rate {rate} vs κ̂ {kappa}");
}
