use graphbec::spectral::{full_spectrum, negative_spectrum};
use graphbec::thermo_limit::{
    bec_sweep, critical_temperature_estimate, finite_free_energy_for_graph, ground_state_sweep,
    tonks_convergence_sweep, Thresholds, Verdict,
};
use graphbec::{Error, MetricGraph, VertexConditions};

fn attractive_star() -> (MetricGraph, VertexConditions) {
    let g = MetricGraph::star(3, 1.0).unwrap();
    let vc = VertexConditions::delta(&g, &[-3.0, 0.0, 0.0, 0.0]).unwrap();
    (g, vc)
}

/// Root of `k tanh(k l) = 1`.
fn tanh_root(l: f64) -> f64 {
    let (mut a, mut b) = (1e-12, 10.0);
    for _ in 0..300 {
        let m = 0.5 * (a + b);
        if m * (m * l).tanh() < 1.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[test]
fn star_ground_state_follows_the_tanh_oracle() {
    let (g, vc) = attractive_star();
    let recs = ground_state_sweep(&g, &vc, &[1.0, 4.0]).unwrap();
    for r in &recs {
        let k = tanh_root(r.eta);
        assert!((r.e0 + k * k).abs() < 1e-10, "eta {}: {} vs {}", r.eta, r.e0, -k * k);
        assert_eq!(r.negative_count, 1);
    }
    assert!((recs[0].e0 + 1.43923).abs() < 1e-5);
    assert!((recs[1].e0 + 1.00134).abs() < 1e-5);
}

#[test]
fn residual_shrinks_under_doubling() {
    let g = MetricGraph::interval(2.0).unwrap();
    let vc = VertexConditions::delta(&g, &[-2.0, -1.0]).unwrap();
    // Beyond eta = 4 the residual sits at round-off.
    let recs = ground_state_sweep(&g, &vc, &[1.0, 2.0, 4.0]).unwrap();
    let res: Vec<f64> = recs.iter().map(|r| r.e0_residual.unwrap()).collect();
    assert!(res.windows(2).all(|w| w[1] < w[0]), "{res:?}");
    assert!(recs.iter().all(|r| r.negative_count == 2));
}

/// Weak well on a triangle: the second bound state only appears once the
/// edges are long enough. Reference values come from a finite-difference
/// discretisation with Richardson extrapolation.
#[test]
fn triangle_bound_states_match_finite_differences() {
    let g = MetricGraph::from_triples(3, &[(0, 1, 1.0), (1, 2, 1.3), (2, 0, 0.7)]).unwrap();
    let vc = VertexConditions::delta(&g, &[-4.0, -1.0, 0.0]).unwrap();
    let cases: [(f64, &[f64]); 2] = [
        (1.0, &[-4.09665071, 1.52018363, 3.95392123]),
        (2.0, &[-4.00102475, -0.04802686, 0.90260253]),
    ];
    for (eta, expected) in cases {
        let spec = full_spectrum(&g.scale(eta).unwrap(), &vc, 20.0).unwrap();
        let got = spec.state_energies();
        for (a, b) in got.iter().zip(expected) {
            assert!((a - b).abs() < 1e-6, "eta {eta}: {a} vs {b}");
        }
    }
    let counts: Vec<usize> = [1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|&eta| negative_spectrum(&g.scale(eta).unwrap(), &vc).unwrap().negative_count())
        .collect();
    assert_eq!(counts, [1, 2, 2, 2]);
}

#[test]
fn kirchhoff_sweep_vanishes_attractive_sweep_persists() {
    let star = MetricGraph::star(3, 1.0).unwrap();
    let th = Thresholds::default();
    let k = bec_sweep(&star, &VertexConditions::kirchhoff(&star), &[10.0, 40.0, 160.0], 1.0, 1.0, &th).unwrap();
    assert_eq!(k.verdict, Verdict::Vanishing);
    assert!(k.records.iter().all(|r| r.e0 == 0.0 && r.negative_count == 0));
    for r in &k.records {
        let lambda = r.lambda_po.unwrap();
        assert!((lambda - r.n0_fraction.unwrap()).abs() < 0.05, "{r:?}");
    }

    let (g, vc) = attractive_star();
    let a = bec_sweep(&g, &vc, &[10.0, 40.0, 160.0], 0.25, 1.0, &th).unwrap();
    assert_eq!(a.verdict, Verdict::Persistent);
    for r in &a.records {
        assert!(r.mu.unwrap() < r.e0);
        assert!(r.lambda_po.unwrap() > 0.5);
    }
}

#[test]
fn critical_temperature_estimate_is_stable() {
    let (g, vc) = attractive_star();
    let grid: Vec<f64> = (1..=24).map(|i| 0.25 * i as f64).collect();
    let t160 = critical_temperature_estimate(&g, &vc, 160.0, 1.0, &grid, 0.1).unwrap();
    let t320 = critical_temperature_estimate(&g, &vc, 320.0, 1.0, &grid, 0.1).unwrap();
    assert!(t160.temperature > 0.0);
    assert_eq!(t160.eta, 160.0);
    assert!((t320.temperature - t160.temperature).abs() <= 0.2 * t160.temperature);

    let hot: Vec<f64> = vec![20.0, 40.0];
    assert_eq!(
        critical_temperature_estimate(&g, &vc, 160.0, 1.0, &hot, 0.1),
        Err(Error::NoCondensationDetected)
    );
    let star = MetricGraph::star(3, 1.0).unwrap();
    assert_eq!(
        critical_temperature_estimate(&star, &VertexConditions::kirchhoff(&star), 160.0, 1.0, &grid, 0.1),
        Err(Error::NoCondensationDetected)
    );
}

#[test]
fn hardcore_gaps_shrink_with_length() {
    let g = MetricGraph::interval(1.0).unwrap();
    for mu in [0.0, -1.0] {
        let recs = tonks_convergence_sweep(&g, &[25.0, 50.0, 100.0, 200.0], 1.0, mu).unwrap();
        let gaps: Vec<f64> = recs.iter().map(|r| r.f_gap.unwrap()).collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "mu {mu}: {gaps:?}");
    }
    let recs = tonks_convergence_sweep(&g, &[25.0, 50.0, 100.0, 200.0], 1.0, -40.0).unwrap();
    assert!(recs.iter().all(|r| r.f_gap.unwrap() <= 1e-8));
}

#[test]
fn hardcore_free_energy_is_graph_and_condition_independent() {
    let interval = MetricGraph::interval(300.0).unwrap();
    let star = MetricGraph::star(3, 100.0).unwrap();
    let fi = finite_free_energy_for_graph(&interval, &VertexConditions::dirichlet(&interval), 1.0, 0.0).unwrap();
    let fs = finite_free_energy_for_graph(&star, &VertexConditions::dirichlet(&star), 1.0, 0.0).unwrap();
    assert!((fi - fs).abs() <= 1e-2);

    // Differences between conditions scale like 1 / length; each of the six
    // ends contributes about ln(2) / 2.
    let mut spread = Vec::new();
    for len in [100.0, 200.0] {
        let g = MetricGraph::star(3, len / 3.0).unwrap();
        let f: Vec<f64> = [
            VertexConditions::dirichlet(&g),
            VertexConditions::neumann(&g),
            VertexConditions::kirchhoff(&g),
        ]
        .iter()
        .map(|vc| finite_free_energy_for_graph(&g, vc, 1.0, 0.0).unwrap())
        .collect();
        let s = f.iter().copied().fold(f64::NEG_INFINITY, f64::max) - f.iter().copied().fold(f64::INFINITY, f64::min);
        spread.push(s * len);
    }
    assert!((spread[0] - 3.0 * 2f64.ln()).abs() < 0.05, "{spread:?}");
    assert!((spread[1] / spread[0] - 1.0).abs() < 0.05, "{spread:?}");
}

#[test]
fn sweeps_reject_bad_input() {
    let (g, vc) = attractive_star();
    let th = Thresholds::default();
    assert!(bec_sweep(&g, &vc, &[2.0, 1.0], 1.0, 1.0, &th).is_err());
    assert!(bec_sweep(&g, &vc, &[1.0], -1.0, 1.0, &th).is_err());
    assert!(bec_sweep(&g, &vc, &[1.0], 1.0, 0.0, &th).is_err());
    assert!(tonks_convergence_sweep(&g, &[1.0], 0.0, 0.0).is_err());
}
