//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use revnm::control::gain_polynomials;
use revnm::harness::commands::{run_collect, run_compare, run_evaluate, run_track, run_train};
use revnm::harness::{ControllerKind, ExperimentConfig};
use revnm::plant::{
    dead_zone, hysteresis_step_branch, rigid_body_matrices, HysteresisBranch, HysteresisState,
    NonlinearityParams,
};
use revnm::revnm::FeatureLayout;
use revnm::training::LossConfig;

use common::closed_loop::{collapsed_vs_stepwise, uub_run};
use common::grad::{cases, max_gradient_error};
use common::plant_oracle::{observed_order, oracle, plant, random_state, smooth_start};
use common::random_model;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn invertibility() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for i in 0..10_000u64 {
        let layout = FeatureLayout::new(2, (i % 3) as usize);
        let outputs = match i % 3 {
            0 => vec![0],
            1 => vec![1],
            _ => vec![0, 1],
        };
        let m = random_model(i, layout, outputs, 4 + (i % 5) as usize, 1.0);
        let h: Vec<f64> = (0..layout.dim()).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let u: Vec<f64> = m.outputs().iter().map(|_| rng.gen_range(-200.0..200.0)).collect();
        let d = m.forward(&h, &u).unwrap();
        let inv = m.inverse(&h, &d).unwrap();
        for (a, b) in inv.u.iter().zip(&u) {
            worst = worst.max((a - b).abs() / b.abs().max(1.0));
        }
    }
    let t = secs(start.elapsed());
    outcome(
        worst <= 1e-12 && t < 5.0,
        format!("max |u_rec - u|/max(1,|u|) = {worst:.2e} (limit 1e-12), {t:.2} s (limit 5 s)"),
    )
}

fn gradient() -> Outcome {
    let start = Instant::now();
    let cfg = LossConfig::default();
    let worst = cases()
        .iter()
        .map(|(m, batch)| max_gradient_error(m, batch, &cfg))
        .fold(0.0, f64::max);
    let t = secs(start.elapsed());
    outcome(
        worst <= 1e-5 && t < 30.0,
        format!("max relative error {worst:.2e} over 20 models (limit 1e-5), {t:.2} s (limit 30 s)"),
    )
}

fn collapsed_law() -> Outcome {
    let worst = collapsed_vs_stepwise(3, 1000);
    let poly = gain_polynomials(1.0, 1.0, 1.0);
    outcome(
        worst <= 1e-10 && poly == (3.0, 5.0, 3.0),
        format!("max relative gap {worst:.2e} (limit 1e-10), R(1,1,1) = {poly:?}"),
    )
}

fn uub() -> Outcome {
    let start = Instant::now();
    let runs: Vec<_> = (1..=3).map(|s| uub_run(s, 30.0, 0.1)).collect();
    let t = secs(start.elapsed());
    let worst = runs.iter().map(|r| r.worst_ratio).fold(0.0, f64::max);
    outcome(
        worst <= 1.0 && t < 10.0,
        format!(
            "max V/envelope {worst:.4} over 3 runs of 30 s (limit 1), d_max {:.3}, {t:.2} s (limit 10 s)",
            runs[0].d_max
        ),
    )
}

fn plant_checks() -> Outcome {
    let p = plant();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (s, sigma) = random_state(&p, &mut rng);
        let d = p.derivative_with_signal(&s, sigma).unwrap();
        let got = [
            d.q_dot[0], d.q_dot[1], d.q_ddot[0], d.q_ddot[1], d.p_cap_dot[0], d.p_rod_dot[0], d.p_cap_dot[1],
            d.p_rod_dot[1],
        ];
        let want = oracle(&p.config, s.q, s.q_dot, s.p_cap, s.p_rod, sigma);
        for k in 0..8 {
            worst = worst.max((got[k] - want[k]).abs() / want[k].abs().max(1.0));
        }
    }

    // Ṁ both in closed form and by central difference; N = Ṁ − 2C must
    // satisfy N + Nᵀ = 0.
    let links = p.config.links;
    let mut skew = 0.0f64;
    for _ in 0..1000 {
        let q = [rng.gen_range(-1.0..1.0), rng.gen_range(-3.0..0.0)];
        let qd = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let t = rigid_body_matrices(q, qd, &links, p.config.gravity);
        let a = links[1].mass * links[0].length * links[1].com * q[1].sin() * qd[1];
        let closed = [[-2.0 * a, -a], [-a, 0.0]];
        let h = 1e-6;
        let mass = |s: f64| rigid_body_matrices([q[0] + s * qd[0], q[1] + s * qd[1]], qd, &links, 9.81).mass.m;
        let (plus, minus) = (mass(h), mass(-h));
        let fd: [[f64; 2]; 2] = std::array::from_fn(|i| std::array::from_fn(|j| (plus[i][j] - minus[i][j]) / (2.0 * h)));
        let c = t.coriolis.m;
        for m_dot in [closed, fd] {
            let n = |i: usize, j: usize| m_dot[i][j] - 2.0 * c[i][j];
            let scale = m_dot.iter().flatten().chain(c.iter().flatten()).fold(1.0f64, |s, v| s.max(v.abs()));
            for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                skew = skew.max((n(i, j) + n(j, i)).abs() / scale);
            }
        }
    }

    let mut sim = plant();
    let (s0, u) = smooth_start(&mut sim);
    let order = observed_order(&mut sim, &s0, u, 2e-3, 1.0);
    outcome(
        worst <= 1e-10 && skew <= 1e-6 && order >= 3.5,
        format!(
            "derivative vs oracle {worst:.2e} (limit 1e-10), skew {skew:.2e} (limit 1e-6), RK4 order {order:.2} (limit 3.5)"
        ),
    )
}

fn branch_coverage() -> Outcome {
    let p: NonlinearityParams<f64> = NonlinearityParams::new(-0.2, 0.1, 0.05).unwrap();
    let mut seen_dead = [false; 2];
    let mut ok = true;
    for (u, want, side) in [(0.5f64, 0.4f64, 1), (-0.5, -0.3, 0)] {
        ok &= (dead_zone(u, &p) - want).abs() < 1e-15;
        seen_dead[side] = true;
    }
    ok &= dead_zone(0.05, &p) == 0.0;

    let mut seen = Vec::new();
    let mut s = HysteresisState::default();
    // Up through the band, on past it, back by less than D_w, then down.
    for (u, u_dot, want) in [
        (0.01f64, 1.0f64, 0.0f64),
        (0.3, 1.0, 0.275),
        (0.5, 1.0, 0.475),
        (0.46, -1.0, 0.475),
        (0.3, -1.0, 0.325),
    ] {
        let (next, out, branch) = hysteresis_step_branch(s, u, u_dot, &p);
        ok &= (out - want).abs() < 1e-12;
        if !seen.contains(&branch) {
            seen.push(branch);
        }
        s = next;
    }
    use HysteresisBranch::*;
    let all = [CentralBand, Rising, Falling, Hold];
    let covered = all.iter().all(|b| seen.contains(b));
    outcome(
        ok && covered && seen_dead == [true, true],
        format!("dead-zone branches left/right hit, hysteresis branches hit {seen:?}, values exact: {ok}"),
    )
}

struct Pipeline {
    eta: [f64; 2],
    rmse: Vec<(ControllerKind, f64)>,
    rmse_k2: Vec<(ControllerKind, f64)>,
    seconds: f64,
}

fn lookup(kv: &[(String, String)], key: &str) -> f64 {
    kv.iter().find(|(k, _)| k == key).unwrap().1.parse().unwrap()
}

fn pipeline(out: &Path) -> revnm::Result<Pipeline> {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::load(&config("circle.toml"))?;
    cfg.run.out = out.to_path_buf();
    cfg.validate()?;
    run_collect(&cfg)?;
    run_train(&cfg)?;
    let ev = run_evaluate(&cfg)?;
    let rmse = run_compare(&cfg)?
        .iter()
        .map(|m| (m.controller, m.rmse_trajectory))
        .collect();
    let seconds = secs(start.elapsed());
    let mut k2 = cfg.clone();
    k2.controller.backstepping = [[2.0; 3]; 2];
    let rmse_k2 = run_compare(&k2)?
        .iter()
        .map(|m| (m.controller, m.rmse_trajectory))
        .collect();
    Ok(Pipeline {
        eta: [lookup(&ev, "eta_boom"), lookup(&ev, "eta_arm")],
        rmse,
        rmse_k2,
        seconds,
    })
}

fn tracking(p: &Pipeline) -> (Outcome, String) {
    let get = |v: &[(ControllerKind, f64)], k| v.iter().find(|(c, _)| *c == k).unwrap().1;
    let hybrid = get(&p.rmse, ControllerKind::Hybrid);
    let comp = get(&p.rmse, ControllerKind::PdComp);
    let pd = get(&p.rmse, ControllerKind::Pd);
    let o = outcome(
        hybrid <= 0.5 * comp && p.seconds < 1800.0,
        format!(
            "trajectory RMSE hybrid {hybrid:.4} m vs pd-comp {comp:.4} m (limit ratio 0.5, got {:.3}), pd {pd:.4} m, {:.0} s (limit 1800 s)",
            hybrid / comp,
            p.seconds
        ),
    );
    let note = format!(
        "info  hybrid with backstepping gains k=(2,2,2): trajectory RMSE {:.4} m, ratio to pd-comp {:.3}",
        get(&p.rmse_k2, ControllerKind::Hybrid),
        get(&p.rmse_k2, ControllerKind::Hybrid) / comp
    );
    (o, note)
}

fn accuracy(p: &Pipeline) -> Outcome {
    let [boom, arm] = p.eta;
    outcome(
        boom >= 0.88 && arm >= 0.88 && boom > 0.92,
        format!("holdout eta boom {boom:.4}, arm {arm:.4} (limits 0.88 each, boom > 0.92)"),
    )
}

fn determinism() -> Outcome {
    let run = |dir: &Path| -> revnm::Result<Vec<(String, Vec<u8>)>> {
        let mut cfg = ExperimentConfig::load(&config("quick.toml"))?;
        cfg.run.out = dir.to_path_buf();
        cfg.validate()?;
        run_collect(&cfg)?;
        run_train(&cfg)?;
        run_evaluate(&cfg)?;
        run_track(&cfg, ControllerKind::Hybrid)?;
        let files = [
            "collect.txt",
            "train.txt",
            "evaluate.txt",
            "model_boom.json",
            "model_arm.json",
            "track_hybrid/metrics.txt",
            "track_hybrid/metrics.csv",
            "track_hybrid/timeseries.csv",
        ];
        files
            .iter()
            .map(|f| Ok((f.to_string(), fs::read(dir.join(f))?)))
            .collect()
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    match (run(a.path()), run(b.path())) {
        (Ok(x), Ok(y)) => {
            let differing: Vec<&str> = x
                .iter()
                .zip(&y)
                .filter(|(p, q)| p.1 != q.1)
                .map(|(p, _)| p.0.as_str())
                .collect();
            outcome(
                differing.is_empty(),
                format!("{} output files compared across two runs, differing: {differing:?}", x.len()),
            )
        }
        (Err(e), _) | (_, Err(e)) => outcome(false, format!("run failed: {e}")),
    }
}

fn main() {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, o: Outcome| {
        if !o.pass {
            failed += 1;
        }
        println!("{} {n} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    };
    report(1, "invertibility", invertibility());
    report(2, "gradient", gradient());
    report(3, "collapsed law", collapsed_law());
    report(4, "ultimate boundedness", uub());

    let dir = tempfile::tempdir().unwrap();
    let pipe = pipeline(dir.path());
    match &pipe {
        Ok(p) => {
            let (o, note) = tracking(p);
            report(5, "tracking", o);
            report(6, "prediction accuracy", accuracy(p));
            println!("{note}");
        }
        Err(e) => {
            report(5, "tracking", outcome(false, format!("pipeline failed: {e}")));
            report(6, "prediction accuracy", outcome(false, format!("pipeline failed: {e}")));
        }
    }

    report(7, "plant", plant_checks());
    report(8, "nonlinearity branches", branch_coverage());
    report(9, "determinism", determinism());
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
