//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs as part of `cargo test`; `cargo test --test acceptance`
//! runs it alone.

use std::process::ExitCode;
use std::time::Instant;

use gossip_core::birthdeath::{
    hitting_prob, rates_lower, rates_meanfield, rates_upper, sample_hit, simulate_bd, BirthDeathChain, ChainKind,
};
use gossip_core::bounds::{
    expansive_thresholds, integrate_covariance, integrate_first_moment, simulate_linear, variance_bound,
    LinearProcessParams,
};
use gossip_core::dynamics::{init_config, simulate};
use gossip_core::experiments::{run_sweep, transition_midpoint, GraphFamily, Substrate, SweepAxis, SweepSpec};
use gossip_core::graph::{
    cheeger_exact, cheeger_spectral_lower_bound, gen_ba, gen_complete, gen_config_model, gen_er, gen_torus,
    spectral_radius, DegreeDistribution, Graph, GraphMetrics, DEFAULT_POWER_MAX_ITER, DEFAULT_POWER_TOL,
};
use gossip_core::meanfield::{beta_star, equilibria, integrate_ode_checked, kurtz_gap, DEFAULT_ODE_STEP};
use gossip_core::rng::{derive_seed, rng_from_seed};
use gossip_core::{Persuasion, SampleOptions};
use nalgebra::DMatrix;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

fn a1() -> Outcome {
    let start = Instant::now();
    let b = beta_star(&Persuasion::linear()).beta_star;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        (b - 4.0).abs() <= 1e-9 && secs < 1.0,
        format!("beta_star = {b:.15}, |err| = {:.1e}, {secs:.3}s", (b - 4.0).abs()),
    )
}

fn a2() -> Outcome {
    let start = Instant::now();
    let t = expansive_thresholds(1.0, 2.0, 1.0, 10.0).expect("valid family");
    let secs = start.elapsed().as_secs_f64();
    let (zp, zpp) = (t.z_u_prime.unwrap_or(f64::NAN), t.z_u_dprime.unwrap_or(f64::NAN));
    outcome(
        zp == 0.01 && (zpp - 0.2764).abs() <= 1e-4 && secs < 1.0,
        format!("z_u' = {zp}, z_u'' = {zpp:.6}, {secs:.3}s"),
    )
}

fn a3() -> Outcome {
    let phi = Persuasion::linear();
    let chain = rates_meanfield(10_000, 10.0, &phi).expect("chain");
    let ode = integrate_ode_checked(10.0, &phi, 0.5, 10.0, DEFAULT_ODE_STEP).expect("ode");
    let gaps: Vec<f64> = (0..100u64)
        .into_par_iter()
        .map(|s| {
            let traj = simulate_bd(&chain, 0.5, 10.0, derive_seed(3, &[s]), SampleOptions::every_event()).unwrap();
            kurtz_gap(&traj, &ode).unwrap()
        })
        .collect();
    let good = gaps.iter().filter(|&&g| g <= 0.05).count();
    let worst = gaps.iter().cloned().fold(0.0, f64::max);
    outcome(good >= 95, format!("{good}/100 runs with sup-gap <= 0.05 (worst {worst:.4})"))
}

struct A4Data {
    low_absorbed: usize,
    high_alive_above: usize,
    survivor_z: Vec<f64>,
}

fn a4_runs() -> A4Data {
    let phi = Persuasion::linear();
    let chain = rates_meanfield(1000, 10.0, &phi).expect("chain");
    let z_s = equilibria(10.0, &phi).z_s.expect("bistable");
    let run = |z0: f64, tag: u64| -> Vec<(bool, f64)> {
        (0..200u64)
            .into_par_iter()
            .map(|s| {
                let t = simulate_bd(&chain, z0, 100.0, derive_seed(4, &[tag, s]), SampleOptions::grid_only(1)).unwrap();
                (t.absorbed_at.is_none(), t.value_at(100.0))
            })
            .collect()
    };
    let low = run(0.05, 0);
    let high = run(0.5, 1);
    let mut survivor_z: Vec<f64> = Vec::new();
    for &(alive, z) in low.iter().chain(&high) {
        if alive {
            survivor_z.push(z);
        }
    }
    A4Data {
        low_absorbed: low.iter().filter(|r| !r.0).count(),
        high_alive_above: high.iter().filter(|r| r.0 && r.1 > z_s - 0.1).count(),
        survivor_z,
    }
}

fn a4(d: &A4Data) -> Outcome {
    outcome(
        d.low_absorbed >= 190 && d.high_alive_above >= 190,
        format!(
            "z0=0.05: {}/200 absorbed; z0=0.5: {}/200 alive with Z(100) > z_s - 0.1",
            d.low_absorbed, d.high_alive_above
        ),
    )
}

fn a5() -> Outcome {
    let phi = Persuasion::linear();
    let ratio2 = {
        let birth = vec![0.0, 1.0, 1.0, 1.0, 0.0];
        let death = vec![0.0, 2.0, 2.0, 2.0, 2.0];
        BirthDeathChain::new(birth, death, ChainKind::Custom).expect("chain")
    };
    let closed = hitting_prob(&ratio2, 1, 4).unwrap();
    let cases: Vec<(&str, BirthDeathChain, usize, usize)> = vec![
        ("ratio 2, M=4", ratio2, 1, 4),
        ("meanfield N=50 beta=10", rates_meanfield(50, 10.0, &phi).unwrap(), 5, 25),
        ("meanfield N=100 beta=3", rates_meanfield(100, 3.0, &phi).unwrap(), 50, 70),
        ("lower N=60", rates_lower(60, 10.0, &phi, 3.0, 4.0).unwrap(), 20, 45),
        ("upper N=60", rates_upper(60, 2.0, &phi, 6.0, 4.0).unwrap(), 6, 30),
        ("constant phi N=40", rates_meanfield(40, 5.0, &Persuasion::constant(0.3)).unwrap(), 1, 30),
    ];
    let runs = 100_000u64;
    let mut worst: f64 = 0.0;
    let mut agree = 0;
    for (i, (_, chain, k, m)) in cases.iter().enumerate() {
        let exact = hitting_prob(chain, *k, *m).unwrap();
        let hits: u64 = (0..100u64)
            .into_par_iter()
            .map(|block| {
                let mut rng = rng_from_seed(derive_seed(5, &[i as u64, block]));
                (0..runs / 100).filter(|_| sample_hit(chain, *k, *m, &mut rng)).count() as u64
            })
            .sum();
        let p = hits as f64 / runs as f64;
        let se = (exact * (1.0 - exact) / runs as f64).sqrt();
        let z = (p - exact).abs() / se;
        worst = worst.max(z);
        if z <= 3.0 {
            agree += 1;
        }
    }
    let closed_err = (closed - 1.0 / 15.0).abs();
    outcome(
        agree == cases.len() && closed_err <= 1e-12,
        format!(
            "{agree}/{} chains within 3 SE (worst {worst:.2} SE); ratio-2 case err {closed_err:.1e}",
            cases.len()
        ),
    )
}

fn er_beta_sweep() -> gossip_core::experiments::SweepResult {
    let spec = SweepSpec {
        substrate: Substrate::Family {
            family: GraphFamily::Er { n: 500, p: 0.05 },
            regenerate_per_replica: true,
        },
        phi: Persuasion::linear(),
        axis: SweepAxis::Beta,
        grid: vec![2.0, 10.0],
        fixed: 1.0,
        replicas: 100,
        horizon: 100.0,
        master_seed: 6,
    };
    run_sweep(&spec).expect("sweep")
}

fn a6(res: &gossip_core::experiments::SweepResult) -> Outcome {
    let (lo, hi) = (res.rows[0].success_fraction(), res.rows[1].success_fraction());
    outcome(
        lo <= 0.05 && hi >= 0.95,
        format!("success at beta=2: {lo:.2}, at beta=10: {hi:.2}"),
    )
}

fn a7() -> Outcome {
    let grid = vec![0.01, 0.02, 0.03, 0.05, 0.07, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5];
    let spec = SweepSpec {
        substrate: Substrate::Family {
            family: GraphFamily::Er { n: 800, p: 0.05 },
            regenerate_per_replica: true,
        },
        phi: Persuasion::linear(),
        axis: SweepAxis::Z0,
        grid: grid.clone(),
        fixed: 10.0,
        replicas: 100,
        horizon: 100.0,
        master_seed: 7,
    };
    let res = run_sweep(&spec).expect("sweep");
    let at = |z: f64| res.rows[grid.iter().position(|&g| g == z).unwrap()].success_fraction();
    let mid = transition_midpoint(&res.rows);
    let ok_mid = mid.is_some_and(|m| (0.01..=0.43).contains(&m));
    let curve: Vec<String> = res.rows.iter().map(|r| format!("{:.2}", r.success_fraction())).collect();
    outcome(
        at(0.02) <= 0.1 && at(0.5) >= 0.9 && ok_mid,
        format!(
            "success at z0=0.02: {:.2}, at z0=0.5: {:.2}, midpoint {:?}; curve [{}]",
            at(0.02),
            at(0.5),
            mid.map(|m| (m * 1e4).round() / 1e4),
            curve.join(" ")
        ),
    )
}

fn a8() -> Outcome {
    let path = Graph::from_undirected_edges(5, (0..4).map(|i| (i, i + 1))).unwrap();
    let rho = spectral_radius(&path, DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITER).value;
    let params = LinearProcessParams::new(&path, 0.5 / rho).unwrap();
    let init = [0u64, 0, 1, 0, 0];
    let z0 = 0.2;
    let times = [0.5, 1.0, 2.0];
    let moments = integrate_first_moment(&params, &[0.0, 0.0, 1.0, 0.0, 0.0], 2.0, 1e-3).unwrap();
    let runs = 20_000u64;
    let samples: Vec<[f64; 3]> = (0..runs)
        .into_par_iter()
        .map(|s| {
            let t = simulate_linear(&params, &init, 2.0, derive_seed(8, &[s]), SampleOptions::grid_only(4)).unwrap();
            [t.value_at(0.5), t.value_at(1.0), t.value_at(2.0)]
        })
        .collect();
    let mut mean_ok = true;
    let mut var_ok = true;
    let mut notes = Vec::new();
    for (i, &t) in times.iter().enumerate() {
        let xs: Vec<f64> = samples.iter().map(|s| s[i]).collect();
        let (m, se) = mean_se(&xs);
        let exact = moments.mean_z(moments.index_of(t).unwrap());
        mean_ok &= (m - exact).abs() <= 3.0 * se;
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0);
        let bound = variance_bound(&params, z0, t).unwrap();
        var_ok &= var <= bound;
        notes.push(format!("t={t}: mean {m:.4}/{exact:.4}, var {var:.4} <= {bound:.4}"));
    }
    let single = Graph::build_from_arcs(1, [(0, 0)]).unwrap();
    let pure = LinearProcessParams::new(&single, 0.0).unwrap();
    let cov = integrate_covariance(&pure, &[1.0], 3.0, 1e-3).unwrap();
    let cov_err = cov
        .times
        .iter()
        .zip(&cov.covariances)
        .map(|(t, o)| (o[(0, 0)] - (-t).exp() * (1.0 - (-t).exp())).abs())
        .fold(0.0, f64::max);
    outcome(
        mean_ok && var_ok && cov_err <= 1e-6,
        format!("{}; pure-death covariance err {cov_err:.1e}", notes.join("; ")),
    )
}

fn a9() -> Outcome {
    let g = gen_er(50, 0.2, 9).expect("graph");
    let phi = Persuasion::linear();
    let beta = 10.0;
    let dbar = g.avg_degree();
    let delta = g.max_in_degree() as f64;
    // λ₂/2 never exceeds the bottleneck ratio, so the chain it defines is
    // still dominated by the graph process
    let gamma = cheeger_spectral_lower_bound(&g).expect("symmetric");
    let lower = rates_lower(50, beta, &phi, gamma, dbar).expect("lower");
    let upper = rates_upper(50, beta, &phi, delta, dbar).expect("upper");
    let times = [1.0, 5.0, 20.0];
    let opts = SampleOptions::grid_only(20);
    let runs: Vec<[[f64; 3]; 3]> = (0..1000u64)
        .into_par_iter()
        .map(|r| {
            let seed = derive_seed(99, &[r]);
            let init = init_config(50, 0.5, derive_seed(seed, &[1])).unwrap();
            let full = simulate(&g, &phi, beta, init, 20.0, seed, opts).unwrap();
            let lo = simulate_bd(&lower, 0.5, 20.0, seed, opts).unwrap();
            let up = simulate_bd(&upper, 0.5, 20.0, seed, opts).unwrap();
            let at = |tr: &gossip_core::Trajectory| times.map(|t| tr.value_at(t));
            [at(&lo), at(&full), at(&up)]
        })
        .collect();
    let mut ok = true;
    let mut notes = Vec::new();
    for (i, t) in times.iter().enumerate() {
        let diff = |a: usize, b: usize| -> (f64, f64) {
            let xs: Vec<f64> = runs.iter().map(|r| r[b][i] - r[a][i]).collect();
            mean_se(&xs)
        };
        let (d_lo, se_lo) = diff(0, 1);
        let (d_up, se_up) = diff(1, 2);
        ok &= d_lo >= -3.0 * se_lo && d_up >= -3.0 * se_up;
        let m = |k: usize| runs.iter().map(|r| r[k][i]).sum::<f64>() / runs.len() as f64;
        notes.push(format!("t={t}: {:.3} <= {:.3} <= {:.3}", m(0), m(1), m(2)));
    }
    outcome(
        ok,
        format!("gamma >= {gamma:.3}, dbar = {dbar:.2}, Delta = {delta}; {}", notes.join("; ")),
    )
}

fn naive_cheeger(g: &Graph) -> f64 {
    let n = g.node_count();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << n) - 1 {
        let size = mask.count_ones() as usize;
        let cut = g
            .arcs()
            .filter(|&(u, v)| mask >> u & 1 == 1 && mask >> v & 1 == 0)
            .count();
        best = best.min(cut as f64 / size.min(n - size) as f64);
    }
    best
}

fn dense_radius(g: &Graph) -> f64 {
    let n = g.node_count();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (u, v) in g.arcs() {
        a[(u, v)] = 1.0;
    }
    a.symmetric_eigenvalues().iter().map(|x| x.abs()).fold(0.0, f64::max)
}

fn a10() -> Outcome {
    let mut graphs: Vec<Graph> = Vec::new();
    for s in 0..4 {
        graphs.push(gen_er(12 + 2 * s as usize, 0.35, s).unwrap());
    }
    graphs.push(gen_er(50, 0.1, 10).unwrap());
    graphs.push(gen_ba(18, 2, 3).unwrap());
    graphs.push(gen_ba(40, 2, 4).unwrap());
    graphs.push(gen_config_model(16, &"3:0.5,4:0.5".parse::<DegreeDistribution>().unwrap(), 5).unwrap());
    graphs.push(gen_torus(2, 4).unwrap());
    graphs.push(gen_complete(9, true).unwrap());
    let mut worst: f64 = 0.0;
    let mut ineq_ok = true;
    for g in &graphs {
        let r = spectral_radius(g, DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITER).value;
        worst = worst.max((r - dense_radius(g)).abs());
        let m = GraphMetrics::compute(g);
        ineq_ok &= m.check_inequalities().is_ok();
        if let Some(c) = &m.cheeger {
            ineq_ok &= c.value() == naive_cheeger(g);
        }
    }
    let k4 = gen_complete(4, false).unwrap();
    let c8 = Graph::from_undirected_edges(8, (0..8).map(|i| (i, (i + 1) % 8))).unwrap();
    let (gk4, gc8) = (cheeger_exact(&k4).unwrap().value(), cheeger_exact(&c8).unwrap().value());
    let cheeger_ok = gk4 == 2.0 && gc8 == 0.5 && naive_cheeger(&k4) == 2.0 && naive_cheeger(&c8) == 0.5;
    outcome(
        worst <= 1e-8 && cheeger_ok && ineq_ok,
        format!(
            "{} graphs, worst spectral error {worst:.1e}; gamma(K4) = {gk4}, gamma(C8) = {gc8}; inequalities {}",
            graphs.len(),
            if ineq_ok { "hold" } else { "VIOLATED" }
        ),
    )
}

fn a11(a4: &A4Data, er: &gossip_core::experiments::SweepResult) -> Outcome {
    let low = a4.survivor_z.iter().filter(|&&z| z <= 0.5).count();
    let total = a4.survivor_z.len();
    // the sweep keeps only the smallest survivor level, so any ER survivor at
    // or below 0.5 counts as a failure here
    let er_min = er.min_survivor_z[1];
    let er_ok = er_min.is_none_or(|m| m > 0.5);
    outcome(
        (low as f64) <= 0.01 * total as f64 && er_ok,
        format!(
            "mean-field: {low}/{total} survivors at or below 0.5; ER beta=10: min survivor Z(T) = {}",
            er_min.map_or("n/a".into(), |m| format!("{m:.3}"))
        ),
    )
}

fn report(name: &str, desc: &str, start: Instant, o: Outcome, failures: &mut usize) {
    let secs = start.elapsed().as_secs_f64();
    if !o.pass {
        *failures += 1;
    }
    println!(
        "{} {name} {desc}: {} [{secs:.1}s]",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail
    );
}

fn main() -> ExitCode {
    let mut failures = 0;
    let t = Instant::now();
    report("A1", "critical rate", t, a1(), &mut failures);
    let t = Instant::now();
    report("A2", "published thresholds", t, a2(), &mut failures);
    let t = Instant::now();
    report("A3", "Kurtz closeness", t, a3(), &mut failures);
    let t = Instant::now();
    let a4_data = a4_runs();
    report("A4", "bistability", t, a4(&a4_data), &mut failures);
    let t = Instant::now();
    report("A5", "hitting probabilities", t, a5(), &mut failures);
    let t = Instant::now();
    let er = er_beta_sweep();
    report("A6", "ER phase diagram", t, a6(&er), &mut failures);
    let t = Instant::now();
    report("A7", "initial-condition transition", t, a7(), &mut failures);
    let t = Instant::now();
    report("A8", "moment machinery", t, a8(), &mut failures);
    let t = Instant::now();
    report("A9", "domination sandwich", t, a9(), &mut failures);
    let t = Instant::now();
    report("A10", "graph metrics", t, a10(), &mut failures);
    let t = Instant::now();
    report("A11", "survivor level", t, a11(&a4_data, &er), &mut failures);
    if failures == 0 {
        println!("acceptance: all 11 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} of 11 criteria failed");
        ExitCode::FAILURE
    }
}
