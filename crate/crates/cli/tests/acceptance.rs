//! Acceptance criteria. Each test prints one `criterion N ... PASS|FAIL` line
//! and asserts at the stated tolerance.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;

use graphbec::spectral::{full_spectrum, negative_spectrum, positive_spectrum, weyl_deviation};
use graphbec::statistics::{bose_density, canonical_partitions, penrose_onsager_lambda};
use graphbec::thermo_limit::{bec_sweep, ground_state_sweep, tonks_convergence_sweep, Thresholds, Verdict};
use graphbec::tonks::{grand_canonical_consistency, limit_free_energy_density, refinement_change};
use graphbec::{Eigenvalue, MetricGraph, Spectrum, VertexConditions};

fn report(n: u32, name: &str, pass: bool, detail: String) {
    println!(
        "criterion {n:>2} {name:<28} {}  {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {n} ({name}) failed: {detail}");
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn star_attractive() -> (MetricGraph, VertexConditions) {
    let g = MetricGraph::star(3, 1.0).unwrap();
    let vc = VertexConditions::delta(&g, &[-3.0, 0.0, 0.0, 0.0]).unwrap();
    (g, vc)
}

/// Root of `k tanh(k l) = s` by bisection.
fn tanh_root(s: f64, l: f64) -> f64 {
    let (mut a, mut b) = (1e-14, s + 10.0);
    for _ in 0..400 {
        let m = 0.5 * (a + b);
        if m * (m * l).tanh() < s {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[test]
fn criterion_01_spectral_exactness() {
    let mut worst: f64 = 0.0;
    let mut ok = true;

    let g = MetricGraph::interval(PI).unwrap();
    let spec = positive_spectrum(&g, &VertexConditions::dirichlet(&g), 2550.0).unwrap();
    let levels: Vec<_> = spec.levels().take(50).copied().collect();
    ok &= levels.len() == 50;
    for (i, lvl) in levels.iter().enumerate() {
        let exact = ((i + 1) * (i + 1)) as f64;
        worst = worst.max((lvl.energy - exact).abs() / exact);
        ok &= lvl.multiplicity == 1;
    }

    let g = MetricGraph::interval(1.0).unwrap();
    let spec = positive_spectrum(&g, &VertexConditions::neumann(&g), (49.5 * PI).powi(2)).unwrap();
    let levels: Vec<_> = spec.levels().copied().collect();
    ok &= levels.len() == 50 && levels[0].energy.abs() < 1e-12 && levels[0].multiplicity == 1;
    for (n, lvl) in levels.iter().enumerate().skip(1) {
        let exact = (n as f64 * PI).powi(2);
        worst = worst.max((lvl.energy - exact).abs() / exact);
    }

    let g = MetricGraph::loop_graph(2.0 * PI).unwrap();
    let spec = positive_spectrum(&g, &VertexConditions::kirchhoff(&g), 2550.0).unwrap();
    let levels: Vec<_> = spec.levels().copied().collect();
    ok &= levels.len() == 51 && levels[0].multiplicity == 1;
    for (n, lvl) in levels.iter().enumerate().skip(1) {
        let exact = (n * n) as f64;
        worst = worst.max((lvl.energy - exact).abs() / exact);
        ok &= lvl.multiplicity == 2;
    }

    report(1, "spectral exactness", ok && worst <= 1e-10, format!("max rel err {worst:.3e}"));
}

#[test]
fn criterion_02_negative_branch() {
    let g = MetricGraph::interval(1.0).unwrap();
    let vc = VertexConditions::delta(&g, &[-1.0, 0.0]).unwrap();
    let spec = negative_spectrum(&g, &vc).unwrap();
    let kappa = tanh_root(1.0, 1.0);
    let e0 = spec.ground_energy().unwrap();
    let err = (e0 + kappa * kappa).abs();
    report(
        2,
        "negative-branch calibration",
        spec.negative_count() == 1 && err <= 1e-10,
        format!("E0 = {e0:.12}, oracle {:.12}, err {err:.2e}", -kappa * kappa),
    );
}

#[test]
fn criterion_03_ground_state_limit() {
    let (g, vc) = star_attractive();
    let recs = ground_state_sweep(&g, &vc, &[1.0, 2.0, 4.0, 8.0, 16.0]).unwrap();
    let res: Vec<f64> = recs.iter().map(|r| r.e0_residual.unwrap()).collect();
    let decreasing = res.windows(2).all(|w| w[1] < w[0]);
    let last = *res.last().unwrap();
    report(
        3,
        "ground-state limit",
        decreasing && last <= 1e-6,
        format!("residuals {}", sci(&res)),
    );
}

#[test]
fn criterion_04_negative_count_bound() {
    let star = MetricGraph::star(3, 1.0).unwrap();
    let interval2 = MetricGraph::interval(2.0).unwrap();
    let interval1 = MetricGraph::interval(1.0).unwrap();
    let lasso = MetricGraph::loop_graph(1.0).unwrap();
    let cases = vec![
        ("star attractive", star.clone(), VertexConditions::delta(&star, &[-3.0, 0.0, 0.0, 0.0]).unwrap()),
        ("star kirchhoff", star.clone(), VertexConditions::kirchhoff(&star)),
        ("star repulsive", star.clone(), VertexConditions::delta(&star, &[2.0, 0.0, 0.0, 0.0]).unwrap()),
        ("interval two wells", interval2.clone(), VertexConditions::delta(&interval2, &[-2.0, -2.0]).unwrap()),
        ("interval one well", interval1.clone(), VertexConditions::delta(&interval1, &[-1.0, 0.0]).unwrap()),
        ("interval dirichlet", interval1.clone(), VertexConditions::dirichlet(&interval1)),
        ("interval neumann", interval1.clone(), VertexConditions::neumann(&interval1)),
        ("loop attractive", lasso.clone(), VertexConditions::delta(&lasso, &[-2.0]).unwrap()),
    ];
    let etas = [1.0, 2.0, 4.0, 8.0, 16.0];
    let mut ok = true;
    let mut summary = Vec::new();
    for (name, g, vc) in &cases {
        let bound = vc.l_spectrum().unwrap().count_positive;
        let counts: Vec<usize> = etas
            .iter()
            .map(|&eta| negative_spectrum(&g.scale(eta).unwrap(), vc).unwrap().negative_count())
            .collect();
        let good = counts.iter().all(|&c| c <= bound) && counts.iter().all(|&c| c == counts[0]);
        ok &= good;
        summary.push(format!("{name}: {counts:?} <= {bound}"));
    }
    report(4, "negative-count bound", ok, summary.join("; "));
}

#[test]
fn criterion_05_weyl() {
    let interval_pi = MetricGraph::interval(PI).unwrap();
    let interval1 = MetricGraph::interval(1.0).unwrap();
    let ring = MetricGraph::loop_graph(2.0 * PI).unwrap();
    let star = MetricGraph::star(3, 1.0).unwrap();
    let triangle = MetricGraph::from_triples(3, &[(0, 1, 1.0), (1, 2, 2f64.sqrt()), (2, 0, PI / 3.0)]).unwrap();
    let cases = vec![
        ("interval dirichlet", interval_pi.clone(), VertexConditions::dirichlet(&interval_pi)),
        ("interval neumann", interval1.clone(), VertexConditions::neumann(&interval1)),
        ("loop kirchhoff", ring.clone(), VertexConditions::kirchhoff(&ring)),
        ("star kirchhoff", star.clone(), VertexConditions::kirchhoff(&star)),
        ("star attractive", star.clone(), VertexConditions::delta(&star, &[-3.0, 0.0, 0.0, 0.0]).unwrap()),
        ("triangle kirchhoff", triangle.clone(), VertexConditions::kirchhoff(&triangle)),
        ("triangle delta", triangle.clone(), VertexConditions::delta(&triangle, &[-1.0, 2.0, 0.5]).unwrap()),
    ];
    let mut ok = true;
    let mut summary = Vec::new();
    for (name, g, vc) in &cases {
        let spec = full_spectrum(g, vc, 1000.0).unwrap();
        let dev = weyl_deviation(&spec);
        let bound = (2 * g.edge_count() + g.vertex_count()) as f64;
        ok &= dev <= bound;
        summary.push(format!("{name}: {dev:.3} <= {bound}"));
    }
    report(5, "Weyl deviation", ok, summary.join("; "));
}

#[test]
fn criterion_06_no_condensation_without_attraction() {
    let g = MetricGraph::star(3, 1.0).unwrap();
    let vc = VertexConditions::kirchhoff(&g);
    let sweep = bec_sweep(&g, &vc, &[10.0, 40.0, 160.0], 1.0, 1.0, &Thresholds::default()).unwrap();
    let f: Vec<f64> = sweep.records.iter().map(|r| r.n0_fraction.unwrap()).collect();
    let pass = f.windows(2).all(|w| w[1] < w[0]) && f[2] <= 0.02;
    report(
        6,
        "no BEC for L <= 0",
        pass && sweep.verdict == Verdict::Vanishing,
        format!("fractions {}, verdict {}", sci(&f), sweep.verdict.as_str()),
    );
}

#[test]
fn criterion_07_condensation_below_tc() {
    let (g, vc) = star_attractive();
    let sweep = bec_sweep(&g, &vc, &[10.0, 20.0, 40.0, 80.0, 160.0], 1.0 / 8.0, 1.0, &Thresholds::default())
        .unwrap();
    let f: Vec<f64> = sweep.records.iter().map(|r| r.n0_fraction.unwrap()).collect();
    let pass = f.windows(2).all(|w| w[1] >= w[0] - 1e-2) && *f.last().unwrap() >= 0.5;
    report(
        7,
        "BEC below Tc for L_max > 0",
        pass && sweep.verdict == Verdict::Persistent,
        format!("fractions {f:.6?}, verdict {}", sweep.verdict.as_str()),
    );
}

/// Brute-force canonical ensemble over explicit one-particle states:
/// `(Z_N, <n_s>)` for every state.
fn enumerate_canonical(states: &[f64], n: usize, beta: f64) -> (f64, Vec<f64>) {
    fn go(states: &[f64], i: usize, left: usize, occ: &mut Vec<usize>, beta: f64, z: &mut f64, acc: &mut [f64]) {
        if i == states.len() {
            if left == 0 {
                let e: f64 = occ.iter().zip(states).map(|(&k, &e)| k as f64 * e).sum();
                let w = (-beta * e).exp();
                *z += w;
                for (a, &k) in acc.iter_mut().zip(occ.iter()) {
                    *a += k as f64 * w;
                }
            }
            return;
        }
        for k in 0..=left {
            occ.push(k);
            go(states, i + 1, left - k, occ, beta, z, acc);
            occ.pop();
        }
    }
    let mut z = 0.0;
    let mut acc = vec![0.0; states.len()];
    go(states, 0, n, &mut Vec::new(), beta, &mut z, &mut acc);
    (z, acc.iter().map(|a| a / z).collect())
}

#[test]
fn criterion_08_canonical_oracle() {
    let level_sets: Vec<Vec<Eigenvalue>> = vec![
        vec![Eigenvalue { energy: 0.0, multiplicity: 1 }],
        vec![
            Eigenvalue { energy: -1.0, multiplicity: 1 },
            Eigenvalue { energy: 0.5, multiplicity: 1 },
        ],
        vec![
            Eigenvalue { energy: 0.0, multiplicity: 1 },
            Eigenvalue { energy: 1.0, multiplicity: 2 },
            Eigenvalue { energy: 2.5, multiplicity: 1 },
        ],
        vec![
            Eigenvalue { energy: -1.44, multiplicity: 1 },
            Eigenvalue { energy: 0.3, multiplicity: 1 },
            Eigenvalue { energy: 0.7, multiplicity: 1 },
            Eigenvalue { energy: 1.1, multiplicity: 1 },
            Eigenvalue { energy: 2.0, multiplicity: 1 },
            Eigenvalue { energy: 4.0, multiplicity: 1 },
        ],
        vec![
            Eigenvalue { energy: 1.0, multiplicity: 3 },
            Eigenvalue { energy: 4.0, multiplicity: 3 },
        ],
    ];
    let mut worst: f64 = 0.0;
    for levels in &level_sets {
        let states: Vec<f64> = levels
            .iter()
            .flat_map(|l| std::iter::repeat_n(l.energy, l.multiplicity))
            .collect();
        for beta in [0.3, 1.0, 3.0] {
            let table = canonical_partitions(levels, 4, beta).unwrap();
            for n in 1..=4 {
                let (z, occ) = enumerate_canonical(&states, n, beta);
                worst = worst.max((table.z(n) - z).abs() / z);
                let mut per_level = Vec::new();
                let mut s = 0;
                for l in levels {
                    per_level.push(occ[s..s + l.multiplicity].iter().sum::<f64>());
                    s += l.multiplicity;
                }
                for (a, b) in table.occupations(n).iter().zip(&per_level) {
                    worst = worst.max((a - b).abs() / n as f64);
                }
                let lambda = occ.iter().copied().fold(0.0, f64::max) / n as f64;
                let got = penrose_onsager_lambda(levels, n, beta).unwrap();
                worst = worst.max((got - lambda).abs());
            }
        }
    }
    report(8, "canonical oracle", worst <= 1e-12, format!("max deviation {worst:.2e}"));
}

/// `sum (-1)^(n+1) n^(-s)` by repeated averaging of partial sums.
fn alternating_zeta(s: f64) -> f64 {
    let mut partial = Vec::with_capacity(60);
    let mut acc = 0.0;
    for n in 1..=60 {
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        acc += sign / (n as f64).powf(s);
        partial.push(acc);
    }
    while partial.len() > 1 {
        partial = partial.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    partial[0]
}

#[test]
fn criterion_09_hardcore_limit() {
    // (1 - 2^(-1/2)) zeta(3/2) is the alternating sum at s = 3/2.
    let oracle = -(PI.sqrt() / (2.0 * PI)) * alternating_zeta(1.5);
    let f_inf = limit_free_energy_density(1.0, 0.0).unwrap();
    let limit_err = (f_inf - oracle).abs();

    let g = MetricGraph::interval(1.0).unwrap();
    let recs = tonks_convergence_sweep(&g, &[25.0, 50.0, 100.0, 200.0], 1.0, 0.0).unwrap();
    let gaps: Vec<f64> = recs.iter().map(|r| r.f_gap.unwrap()).collect();
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
    let last = *gaps.last().unwrap();
    report(
        9,
        "hardcore limit value",
        limit_err <= 1e-8 && monotone && last <= 5e-3,
        format!("f_inf = {f_inf:.10}, oracle {oracle:.10}, gaps {}", sci(&gaps)),
    );
}

#[test]
fn criterion_10_hardcore_smoothness() {
    let changes: Vec<f64> = [1.0, 2.0]
        .iter()
        .map(|&beta| refinement_change(beta, -2.0, 2.0, 0.1).unwrap())
        .collect();

    // Contrast: the ideal Bose density grows without bound as mu -> E0.
    let spec = Spectrum::from_levels(
        &[
            Eigenvalue { energy: -1.0, multiplicity: 1 },
            Eigenvalue { energy: 0.5, multiplicity: 2 },
        ],
        1.0,
        f64::INFINITY,
    );
    let bose: Vec<f64> = [1e-1, 1e-3, 1e-5]
        .iter()
        .map(|d| bose_density(&spec, 1.0, -1.0 - d).unwrap())
        .collect();
    let diverges = bose.windows(2).all(|w| w[1] > 10.0 * w[0]);

    report(
        10,
        "hardcore smoothness",
        changes.iter().all(|&c| c <= 1e-4),
        format!(
            "max |d2f(h=0.1) - d2f(h=0.05)| on [-2,2]: beta=1 {:.3e}, beta=2 {:.3e}; \
             bose density near E0 {} (diverging: {diverges})",
            changes[0],
            changes[1],
            sci(&bose)
        ),
    );
}

#[test]
fn criterion_11_fermionization_identity() {
    let interval_levels: Vec<f64> = (1..=6).map(|n| (n * n) as f64).collect();
    let cases: Vec<(Vec<f64>, f64, f64)> = vec![
        (vec![1.0, 2.0], 1.0, 0.0),
        (interval_levels.clone(), 0.5, 1.0),
        (interval_levels.clone(), 2.0, 10.0),
        (vec![-1.4392, 0.3, 0.3, 1.7, 5.0, 9.5, 12.0], 1.0, -0.5),
        (vec![], 1.0, 0.0),
    ];
    let worst = cases
        .iter()
        .map(|(l, b, m)| grand_canonical_consistency(l, *b, *m, l.len()))
        .fold(0.0, f64::max);
    report(11, "fermionization identity", worst <= 1e-12, format!("max discrepancy {worst:.2e}"));
}

fn run_cli(config: &Path, command: &str, out: &Path) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_graphbec"))
        .args(["--config", config.to_str().unwrap(), "--command", command, "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success(), "{command} failed with {status}");
    std::fs::read(out.join(format!("{command}.csv"))).unwrap()
}

#[test]
fn criterion_12_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(
        &config,
        r#"{
  "graph": {"vertices": 4, "edges": [
    {"start": 0, "end": 1, "length": 1.0},
    {"start": 0, "end": 2, "length": 1.0},
    {"start": 0, "end": 3, "length": 1.0}]},
  "conditions": {"preset": "delta", "strengths": [-3.0, 0.0, 0.0, 0.0]},
  "spectrum": {"e_max": 200.0, "eta": 2.0},
  "bec_sweep": {"temperature": 0.5, "density": 1.0, "etas": [5.0, 10.0, 20.0]},
  "tc_estimate": {"density": 1.0, "temperatures": [0.5, 1.0, 2.0, 4.0, 8.0], "eta": 20.0},
  "tonks_free_energy": {"betas": [1.0, 2.0], "mus": [-1.0, 0.0, 1.0], "eta": 10.0},
  "tonks_smoothness": {"betas": [1.0], "mu_min": -1.0, "mu_max": 1.0, "step": 0.25}
}"#,
    )
    .unwrap();
    let commands = ["spectrum", "bec-sweep", "tc-estimate", "tonks-free-energy", "tonks-smoothness"];
    let mut identical = true;
    for command in commands {
        let a = run_cli(&config, command, &dir.path().join("a"));
        let b = run_cli(&config, command, &dir.path().join("b"));
        identical &= a == b && !a.is_empty();
    }
    let manifests_equal = std::fs::read(dir.path().join("a/manifest.json")).unwrap()
        == std::fs::read(dir.path().join("b/manifest.json")).unwrap();
    report(
        12,
        "determinism",
        identical && manifests_equal,
        format!("{} commands run twice", commands.len()),
    );
}
