//! Acceptance checks, one line per criterion. Exits non-zero if any fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;

use tokenflow_cli::csv_io::Table;
use tokenflow_cli::{execute, Cli};
use tokenflow_core::experiment::{TABLE3_HORIZON, TABLE3_POOLS};
use tokenflow_core::model::vars;
use tokenflow_core::{
    build_insolar_pipeline, initial_state, run_trajectory, table3_scenarios, ModelParams64,
    NoiseSpec, ParamOverrides, PriceProxySpec, ScenarioSummary, Stepping, SweepReport,
    Trajectory64,
};

/// Spread of terminal developer income across the default pool-size sweep.
const GOLDEN_SPREAD: f64 = 0.200_977_003_967_290_62;
const GOLDEN_TOLERANCE: f64 = 1e-6;

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

fn trajectory(p: &ModelParams64, horizon: u64, run_id: u64) -> Trajectory64 {
    let pipeline = build_insolar_pipeline(p).expect("valid model");
    run_trajectory(
        &initial_state(p).expect("valid model"),
        &pipeline,
        p,
        horizon,
        run_id,
    )
    .expect("finite run")
}

fn closed_form_decay() -> Check {
    let p = ModelParams64::deterministic();
    let start = Instant::now();
    let tr = trajectory(&p, TABLE3_HORIZON, 0);
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let a = tr.last().get(vars::POOL).unwrap();
    let err = rel(a, 250e6 * (-1.826f64).exp());
    Check {
        name: "closed-form decay",
        pass: err <= 1e-9 && elapsed < 50.0,
        detail: format!(
            "A(3652) rel err {err:.2e} (<= 1e-9), one trajectory {elapsed:.1} ms (< 50)"
        ),
    }
}

fn conservation() -> Check {
    let specs = table3_scenarios::<f64>(&ParamOverrides::default()).unwrap();
    let mut worst_pool: f64 = 0.0;
    let mut worst_treasury: f64 = 0.0;
    for spec in &specs {
        let p = &spec.model;
        for run_id in [0, 1] {
            let tr = trajectory(p, spec.horizon, run_id);
            let a = tr.series_by_name(vars::POOL).unwrap();
            let outlay = tr.series_by_name(vars::OUTLAY).unwrap();
            let t = tr.series_by_name(vars::TREASURY).unwrap();
            let mut paid = 0.0;
            for i in 0..a.len() {
                paid += outlay[i];
                worst_pool =
                    worst_pool.max((paid - (p.initial_pool - a[i])).abs() / p.initial_pool);
                worst_treasury =
                    worst_treasury.max((paid - (p.initial_treasury - t[i])).abs() / p.initial_pool);
            }
        }
    }
    Check {
        name: "conservation",
        pass: worst_pool <= 1e-9 && worst_treasury <= 1e-9,
        detail: format!(
            "max |sum outlay - (A0 - A)|/A0 = {worst_pool:.2e}, vs T0 - T {worst_treasury:.2e} (<= 1e-9)"
        ),
    }
}

fn sorted(summaries: &[ScenarioSummary<f64>]) -> Vec<&ScenarioSummary<f64>> {
    let mut s: Vec<_> = summaries.iter().collect();
    s.sort_by(|a, b| {
        a.initial_pool()
            .unwrap()
            .total_cmp(&b.initial_pool().unwrap())
    });
    s
}

fn pool_shape(summaries: &[ScenarioSummary<f64>], report: &SweepReport<f64>) -> Check {
    let mut problems = Vec::new();
    for s in sorted(summaries) {
        let a = &s.require(vars::POOL).unwrap().mean;
        let cum = &s.require(vars::CUMULATIVE_OUTLAY).unwrap().mean;
        let outlay = &s.require(vars::OUTLAY).unwrap().mean;
        if !a.windows(2).all(|w| w[1] < w[0]) {
            problems.push(format!("{}: pool not strictly decreasing", s.id));
        }
        if !cum.windows(2).all(|w| w[1] > w[0]) {
            problems.push(format!("{}: cumulative outlay not increasing", s.id));
        }
        if !outlay[1..].windows(2).all(|w| w[1] < w[0]) {
            problems.push(format!("{}: per-step outlay not decreasing", s.id));
        }
    }
    let verdicts = report.stats.verdicts.as_ref().expect("four scenarios");
    for v in [&verdicts.pool_ordered, &verdicts.cumulative_outlay_ordered] {
        if !v.outcome.holds() {
            problems.push(format!("{}: {:?}", v.name, v.outcome));
        }
    }
    Check {
        name: "pool and outlay shape/ordering",
        pass: problems.is_empty(),
        detail: if problems.is_empty() {
            "pool decreasing, cumulative outlay increasing and concave, both ordered by A0 at every t".into()
        } else {
            problems.join("; ")
        },
    }
}

fn income_convergence(report: &SweepReport<f64>) -> Check {
    let spread = report
        .stats
        .income_convergence_spread
        .expect("four scenarios");
    let drift = (spread - GOLDEN_SPREAD).abs();
    Check {
        name: "income convergence",
        pass: spread <= 0.25 && drift <= GOLDEN_TOLERANCE,
        detail: format!(
            "spread {spread:.9} (<= 0.25), golden {GOLDEN_SPREAD:.9} drift {drift:.1e} (<= 1e-6)"
        ),
    }
}

fn treasury_orderings(report: &SweepReport<f64>, priced: &SweepReport<f64>) -> Check {
    let holdings = report
        .stats
        .verdicts
        .as_ref()
        .unwrap()
        .treasury_inverse
        .outcome;
    let value = priced
        .stats
        .verdicts
        .as_ref()
        .unwrap()
        .treasury_value_ordered
        .outcome;
    let terminal = |r: &SweepReport<f64>, var: &str| -> Vec<String> {
        r.stats
            .terminal
            .iter()
            .map(|t| format!("{:.4e}", t.means[var]))
            .collect()
    };
    Check {
        name: "treasury orderings",
        pass: holdings.holds() && value.holds(),
        detail: format!(
            "terminal T decreasing in A0: {:?} [{}]; terminal T*price (proxy on) increasing: {:?} [{}]",
            holdings,
            terminal(report, vars::TREASURY).join(", "),
            value,
            terminal(priced, tokenflow_core::experiment::TREASURY_VALUE).join(", ")
        ),
    }
}

fn read_tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().is_some_and(|n| n != "resolved.toml") {
                let rel = p.strip_prefix(root).unwrap().display().to_string();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn run_cli(args: &[&str]) {
    let cli = Cli::parse_from(std::iter::once("tokenflow").chain(args.iter().copied()));
    let mut lines = Vec::new();
    execute(&cli, &mut lines).unwrap_or_else(|e| panic!("{args:?}: {e}"));
}

fn full_sweep(dir: &Path) -> (Check, Vec<ScenarioSummary<f64>>) {
    let first = dir.join("first");
    let second = dir.join("second");
    let start = Instant::now();
    run_cli(&["sweep", "table3", "--out", first.to_str().unwrap()]);
    let secs = start.elapsed().as_secs_f64();
    run_cli(&["sweep", "table3", "--out", second.to_str().unwrap()]);
    let (a, b) = (read_tree(&first), read_tree(&second));
    let identical = a == b && a.len() == 6;
    let summaries = TABLE3_POOLS
        .iter()
        .map(|p| {
            let path = first
                .join(format!("a0-{}m", (p / 1e6) as u64))
                .join("aggregate.csv");
            Table::read(&path).unwrap().to_summary().unwrap()
        })
        .collect();
    let threads = rayon::current_num_threads();
    (
        Check {
            name: "full sweep speed and reproducibility",
            pass: secs < 10.0 && identical,
            detail: format!(
                "4 x 100 runs x 3652 steps in {secs:.2} s on {threads} thread(s) (< 10); rerun byte-identical over {} files: {identical}",
                a.len()
            ),
        },
        summaries,
    )
}

fn monte_carlo_sanity() -> Check {
    let noisy = ModelParams64::default();
    let NoiseSpec::MultiplicativeGrowth { sigma } = noisy.noise else {
        unreachable!("noise is on by default")
    };
    let spec = tokenflow_core::ScenarioSpec64 {
        id: "mc".into(),
        model: noisy.clone(),
        horizon: TABLE3_HORIZON,
        runs: 100,
        master_seed: tokenflow_core::experiment::DEFAULT_MASTER_SEED,
    };
    let ensemble = spec.run().unwrap();
    let u = tokenflow_core::aggregate(&ensemble, vars::APPS).unwrap();
    let last = u.len() - 1;
    let mean = u.mean[last];
    let se = u.std_error(last);
    let det = ModelParams64 {
        noise: NoiseSpec::Off,
        ..noisy
    };
    let target = trajectory(&det, TABLE3_HORIZON, 0)
        .last()
        .get(vars::APPS)
        .unwrap();
    let z = (mean - target) / se;
    Check {
        name: "Monte Carlo sanity",
        pass: z.abs() <= 3.0,
        detail: format!(
            "sigma {sigma}: mean U(3652) {mean:.6e}, noise-free {target:.6e}, {z:+.2} standard errors (|z| <= 3)"
        ),
    }
}

fn euler_exact() -> Check {
    let exact = ModelParams64::deterministic();
    let euler = ModelParams64 {
        stepping: Stepping::Euler,
        ..exact.clone()
    };
    let a = trajectory(&exact, TABLE3_HORIZON, 0)
        .series_by_name(vars::POOL)
        .unwrap();
    let b = trajectory(&euler, TABLE3_HORIZON, 0)
        .series_by_name(vars::POOL)
        .unwrap();
    let worst = a
        .iter()
        .zip(&b)
        .map(|(x, y)| rel(*y, *x))
        .fold(0.0, f64::max);
    Check {
        name: "Euler/exact agreement",
        pass: worst <= 1e-3,
        detail: format!(
            "max relative difference on A {:.4}% (<= 0.1%)",
            worst * 100.0
        ),
    }
}

fn main() {
    let tmp = std::env::temp_dir().join(format!("tokenflow-acceptance-{}", std::process::id()));
    let _ = fs::remove_dir_all(&tmp);
    fs::create_dir_all(&tmp).unwrap();

    let (sweep_check, summaries) = full_sweep(&tmp);
    let report = SweepReport::from_summaries(summaries.clone()).unwrap();
    let priced_specs = table3_scenarios(&ParamOverrides::<f64> {
        price: Some(Some(PriceProxySpec::default())),
        ..Default::default()
    })
    .unwrap();
    let priced = SweepReport::run(&priced_specs).unwrap();

    let checks = [
        closed_form_decay(),
        conservation(),
        pool_shape(&summaries, &report),
        income_convergence(&report),
        treasury_orderings(&report, &priced),
        sweep_check,
        monte_carlo_sanity(),
        euler_exact(),
    ];
    let _ = fs::remove_dir_all(PathBuf::from(&tmp));

    let mut failed = 0;
    for (i, c) in checks.iter().enumerate() {
        let mark = if c.pass { "PASS" } else { "FAIL" };
        println!("criterion {} {mark} {}: {}", i + 1, c.name, c.detail);
        failed += usize::from(!c.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        checks.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
