//! End-to-end acceptance suite.
//!
//! Runs each criterion in turn, prints one PASS/FAIL line per criterion and
//! exits nonzero if any failed. Criteria run sequentially so that the timing
//! measurements are not disturbed by the sampling work. Pass criterion numbers
//! as arguments to run a subset, e.g. `cargo test --test acceptance -- 4 8`.

use std::process::Command;
use std::time::Instant;

use srwalk_cli::output::strip_timestamp;
use srwalk_core::analysis::scan;
use srwalk_core::coupling::{fit_bounds, DEFAULT_EPSILON};
use srwalk_core::oracle::{
    energy_identity_deviation, enumerate_spins, enumerate_walks, equivalence_diff, exact_distribution,
    factorization_deviation, griffiths_check,
};
use srwalk_core::sampler::{self, rng, stationarity_test, ChainState, ClusterBuilder, Sampler, Start, UpdateMix};
use srwalk_core::{CouplingField, ModelParams, Regime, RunPlan};

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

fn params(n: usize, alpha: f64, beta: f64) -> ModelParams {
    ModelParams::new(n, alpha, beta).expect("valid parameters")
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn walk_spin_equivalence() -> Outcome {
    let mut worst = (0.0f64, 0, 0.0, 0.0);
    for n in [4, 6, 8] {
        for alpha in [3.2, 3.5, 4.0] {
            for beta in [0.1, 0.5, 1.0, 2.0] {
                let p = params(n, alpha, beta);
                let c = CouplingField::dense(p);
                let walk = enumerate_walks(&p).map_err(|e| e.to_string())?;
                let spin = enumerate_spins(&p, &c).map_err(|e| e.to_string())?;
                let d = equivalence_diff(&walk, &spin);
                if d >= worst.0 {
                    worst = (d, n, alpha, beta);
                }
            }
        }
    }
    let (d, n, alpha, beta) = worst;
    verdict(d < 1e-10, format!("36 cells, max relative difference {d:.2e} (N={n}, alpha={alpha}, beta={beta}), tolerance 1e-10"))
}

fn free_walk() -> Outcome {
    let mut exact_worst = 0.0f64;
    for n in 1..=12 {
        let r = enumerate_walks(&params(n, 3.5, 0.0)).map_err(|e| e.to_string())?;
        exact_worst = exact_worst.max((r.mean_omega_sq - n as f64).abs() / n as f64);
    }
    let mut ok = exact_worst < 1e-12;
    let mut detail = format!("enumeration N<=12 max relative deviation {exact_worst:.1e}");
    for (k, n) in [256usize, 1024, 4096].into_iter().enumerate() {
        let p = params(n, 3.5, 0.0);
        let c = CouplingField::with_default_storage(p);
        let plan = RunPlan { n_therm: Some(100), n_measure: 4000, seed: 20 + k as u64, ..RunPlan::default() };
        let s = sampler::run(&p, &plan, &c).map_err(|e| e.to_string())?;
        let z = (s.mean_m_sq - n as f64) / s.err_m_sq;
        ok &= z.abs() < 3.0;
        detail.push_str(&format!("; N={n}: {:.1} +- {:.1} ({z:+.2} sigma)", s.mean_m_sq, s.err_m_sq));
    }
    verdict(ok, detail)
}

fn identity_and_factorization() -> Outcome {
    let mut identity = 0.0f64;
    let mut factor = 0.0f64;
    for alpha in [3.2, 3.5, 4.0] {
        for n in 1..=8 {
            identity = identity.max(energy_identity_deviation(&params(n, alpha, 1.0)).map_err(|e| e.to_string())?);
        }
        for n in 1..=6 {
            for beta in [0.1, 0.5, 1.0, 2.0, 4.0] {
                factor = factor.max(factorization_deviation(&params(n, alpha, beta)).map_err(|e| e.to_string())?);
            }
        }
    }
    verdict(
        identity < 1e-10 && factor < 1e-12,
        format!("energy identity N<=8 max deviation {identity:.1e} (tol 1e-10); factorization N<=6 max relative deviation {factor:.1e} (tol 1e-12)"),
    )
}

fn coupling_bounds() -> Outcome {
    let mut ok = true;
    let mut spreads = Vec::new();
    let mut negative = 0usize;
    for n in [256, 512, 1024, 2048, 4096] {
        let c = CouplingField::with_default_storage(params(n, 3.5, 0.0));
        let fit = fit_bounds(&c, DEFAULT_EPSILON).map_err(|e| e.to_string())?;
        ok &= fit.spread() < 10.0 && fit.outside_violations == 0;
        spreads.push(format!("N={n}: c1={:.4} c2={:.4} ratio={:.1}", fit.c1_hat, fit.c2_hat, fit.spread()));
        for i in 0..n {
            for j in i + 1..n {
                if c.u(i, j).is_nan() || c.u(i, j) < 0.0 {
                    negative += 1;
                }
            }
        }
    }
    ok &= negative == 0;
    verdict(ok, format!("{}; negative couplings {negative}; required ratio < 10", spreads.join(", ")))
}

fn griffiths() -> Outcome {
    let grid = [0.0, 0.5, 1.0, 2.0, 4.0];
    let mut systems = 0usize;
    let mut violations = Vec::new();
    for alpha in [3.2, 3.5, 4.0] {
        for n in 2..=12 {
            let p = params(n, alpha, 0.0);
            let c = CouplingField::dense(p);
            let r = griffiths_check(&p, &c, &grid, 1.5).map_err(|e| e.to_string())?;
            systems += 1;
            violations.extend(r.violations.into_iter().map(|v| format!("N={n} alpha={alpha}: {v:?}")));
        }
    }
    let shown: Vec<&String> = violations.iter().take(3).collect();
    verdict(violations.is_empty(), format!("{systems} systems (N=2..12, alpha 3.2/3.5/4.0), {} violations {shown:?}", violations.len()))
}

fn stationarity() -> Outcome {
    let p = params(6, 3.5, 0.0);
    let c = CouplingField::dense(p);
    let sampler = Sampler::new(&c).map_err(|e| e.to_string())?;
    let mixes = [("metropolis", UpdateMix::METROPOLIS_ONLY), ("cluster", UpdateMix::CLUSTER_ONLY), ("mixed", UpdateMix::MIXED)];
    let mut cells = Vec::new();
    for beta in [0.25, 1.0, 4.0] {
        let exact = exact_distribution(&params(6, 3.5, beta), &c).map_err(|e| e.to_string())?;
        for (name, mix) in mixes {
            cells.push((beta, name, mix, exact.clone()));
        }
    }
    let reports: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = cells
            .iter()
            .enumerate()
            .map(|(k, (beta, _, mix, exact))| {
                let sampler = &sampler;
                s.spawn(move || stationarity_test(sampler, *beta, *mix, ClusterBuilder::Majorant, 1_000_000, 600 + k as u64, exact))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker finished")).collect()
    });
    let mut ok = true;
    let mut detail = Vec::new();
    for ((beta, name, _, _), r) in cells.iter().zip(reports) {
        let r = r.map_err(|e| e.to_string())?;
        ok &= r.chi_square.p_value > 0.001;
        detail.push(format!("beta={beta} {name} p={:.3}", r.chi_square.p_value));
    }
    verdict(ok, format!("10^6 sweeps per cell: {}", detail.join(", ")))
}

fn transition() -> Outcome {
    let betas = [0.0, 0.05, 0.5, 1.0, 2.0, 5.0];
    let ns = [64, 128, 256, 512, 1024];
    let plan = RunPlan { seed: 7, ..RunPlan::default() };
    let started = Instant::now();
    let result = scan(&[3.5], &betas, &ns, &plan, 0).map_err(|e| e.to_string())?;
    let labels: Vec<String> = result
        .records
        .iter()
        .map(|r| match r.fit {
            Some(f) => format!("beta={}: gamma={:.3}+-{:.3} {}", r.beta, f.gamma, f.gamma_err, r.regime),
            None => format!("beta={}: no fit ({})", r.beta, r.error.clone().unwrap_or_default()),
        })
        .collect();
    let any = |regime: Regime| result.records.iter().any(|r| r.regime == regime);
    let free = result.record(3.5, 0.0).and_then(|r| r.fit).map(|f| f.gamma);
    let ok = any(Regime::Diffusive) && any(Regime::Ballistic) && free.is_some_and(|g| (g - 1.0).abs() <= 0.05);
    verdict(ok, format!("{} ({:.0} s)", labels.join(", "), started.elapsed().as_secs_f64()))
}

/// Median wall time per compound sweep at each size.
fn sweep_times(ns: &[usize], beta: f64, builder: ClusterBuilder, budget: usize) -> Result<Vec<f64>, String> {
    let mut medians = Vec::new();
    for &n in ns {
        let c = CouplingField::with_default_storage(params(n, 3.5, 0.0));
        let sampler = Sampler::new(&c).map_err(|e| e.to_string())?;
        let mut state = ChainState::new(&c, Start::Ordered, rng::stream(99, n as u64));
        let sweeps = (budget / n).max(1);
        for _ in 0..sweeps.min(10) {
            sampler.compound_sweep(&mut state, beta, UpdateMix::MIXED, builder).map_err(|e| e.to_string())?;
        }
        let mut times = Vec::new();
        for _ in 0..5 {
            let t = Instant::now();
            for _ in 0..sweeps {
                sampler.compound_sweep(&mut state, beta, UpdateMix::MIXED, builder).map_err(|e| e.to_string())?;
            }
            times.push(t.elapsed().as_secs_f64() / sweeps as f64);
        }
        times.sort_by(f64::total_cmp);
        medians.push(times[2]);
    }
    Ok(medians)
}

fn loglog_slope(ns: &[usize], ts: &[f64]) -> f64 {
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn scaling() -> Outcome {
    let ns = [512, 1024, 2048, 4096, 8192];
    let beta = 5.0;
    let fast = sweep_times(&ns, beta, ClusterBuilder::Majorant, 1 << 18)?;
    let naive = sweep_times(&ns, beta, ClusterBuilder::Naive, 1 << 14)?;
    let (s_fast, s_naive) = (loglog_slope(&ns, &fast), loglog_slope(&ns, &naive));
    let ms = |ts: &[f64]| ts.iter().map(|t| format!("{:.2}", t * 1e3)).collect::<Vec<_>>().join("/");
    verdict(
        s_fast < 2.0 && s_naive >= 1.8,
        format!(
            "beta={beta}, ms per sweep at N=512..8192: majorant {} (slope {s_fast:.2}), naive {} (slope {s_naive:.2})",
            ms(&fast),
            ms(&naive)
        ),
    )
}

fn cli_twice(args: &[&str], out: &std::path::Path) -> Result<String, String> {
    let mut texts = Vec::new();
    for _ in 0..2 {
        let o = Command::new(env!("CARGO_BIN_EXE_srwalk"))
            .args(args)
            .args(["--out", out.to_str().expect("utf-8 path")])
            .output()
            .map_err(|e| e.to_string())?;
        if !o.status.success() {
            return Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&o.stderr)));
        }
        texts.push(strip_timestamp(&std::fs::read_to_string(out).map_err(|e| e.to_string())?));
    }
    if texts[0] == texts[1] {
        Ok(format!("{} bytes", texts[0].len()))
    } else {
        Err(format!("{args:?} differs between runs"))
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let sample = ["sample", "--n", "256", "--beta", "1", "--seed", "42", "--n-therm", "200", "--n-measure", "2000"];
    let scan = ["scan", "--betas", "0.05,2", "--ns", "32,64,128,256", "--seed", "42", "--n-therm", "200", "--n-measure", "1000"];
    let mut detail = Vec::new();
    for (name, args) in [("sample", &sample[..]), ("scan", &scan[..])] {
        for format in ["csv", "json"] {
            let mut full = args.to_vec();
            full.extend(["--format", format]);
            let bytes = cli_twice(&full, &dir.path().join(format!("{name}.{format}")))?;
            detail.push(format!("{name} {format} identical ({bytes})"));
        }
    }
    Ok(detail.join(", "))
}

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "walk/spin equivalence", walk_spin_equivalence),
        (2, "free-walk anchors", free_walk),
        (3, "energy identity and factorization", identity_and_factorization),
        (4, "coupling bounds", coupling_bounds),
        (5, "Griffiths inequalities", griffiths),
        (6, "sampler stationarity", stationarity),
        (7, "desk-scale transition", transition),
        (8, "cluster cost scaling", scaling),
        (9, "determinism", determinism),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (k, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&k) {
            continue;
        }
        let started = Instant::now();
        let outcome = run();
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {k} ({name}, {secs:.1} s): {detail}"),
            Err(detail) => {
                println!("FAIL criterion {k} ({name}, {secs:.1} s): {detail}");
                failed.push(k);
            }
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
