//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use mmap_core::harness::{run_benchmark_on, uniform_grid, BenchmarkSpec};
use mmap_core::inference::{mar_with, pr_with};
use mmap_core::synth::{pairwise_model, random_model, PairwiseSpec};
use mmap_core::uai::{parse_uai, write_uai};
use mmap_core::{
    entropy, epsilon_mmap2mar, mmap2mar, Evidence, GraphicalModel, MassFunction, Oracle, OrderStrategy,
    VariableId,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

/// Weather dilemma: R is 0 = sunny, 1 = rainy and D is 0 = walk, 1 = drive.
const WEATHER_UAI: &str = "MARKOV\n2\n2 2\n2\n1 0\n2 0 1\n\n2\n 0.6 0.4\n\n4\n 0.5 0.5 0.125 0.875\n";

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(name: &str, got: &[f64], want: &[f64], tol: f64) -> Result<(), String> {
    ensure(
        got.len() == want.len() && got.iter().zip(want).all(|(g, w)| (g - w).abs() <= tol),
        || format!("{name}: got {got:?}, want {want:?} (tol {tol:e})"),
    )
}

fn weather() -> GraphicalModel {
    parse_uai(WEATHER_UAI).expect("weather model parses")
}

fn ids(v: &[usize]) -> BTreeSet<VariableId> {
    v.iter().copied().map(VariableId).collect()
}

fn weather_golden() -> Outcome {
    let m = weather();
    let joint = m.potentials()[0].product(&m.potentials()[1]).map_err(|e| e.to_string())?;
    close("joint (product)", joint.table(), &[0.30, 0.30, 0.05, 0.35], 1e-12)?;
    let oracle_joint = Oracle::default().joint(&m).map_err(|e| e.to_string())?;
    close("joint (oracle)", oracle_joint.table(), &[0.30, 0.30, 0.05, 0.35], 1e-12)?;

    let none = Evidence::new();
    let p_r = mmap_core::mar(&m, &none, VariableId(0)).map_err(|e| e.to_string())?;
    let p_d = mmap_core::mar(&m, &none, VariableId(1)).map_err(|e| e.to_string())?;
    close("P(R)", p_r.probs(), &[0.60, 0.40], 1e-12)?;
    close("P(D)", p_d.probs(), &[0.35, 0.65], 1e-12)?;
    let drive = Evidence::from_pairs([(1, 1)]).unwrap();
    let p_r_drive = mmap_core::mar(&m, &drive, VariableId(0)).map_err(|e| e.to_string())?;
    close("P(R|drive)", p_r_drive.probs(), &[6.0 / 13.0, 7.0 / 13.0], 1e-12)?;

    let trace = mmap2mar(&m, &ids(&[0, 1]), &none).map_err(|e| e.to_string())?;
    let got: Vec<usize> = trace.explained.values().copied().collect();
    ensure(got == vec![1, 1], || format!("heuristic gave {got:?}, want (rainy, drive)"))?;
    close("p_tilde", &[trace.p_tilde], &[0.35], 1e-12)?;
    let sol = Oracle::default().mmap(&m, &none, &ids(&[0, 1])).map_err(|e| e.to_string())?;
    let got: Vec<usize> = sol.assignment.values().copied().collect();
    ensure(got == vec![1, 1], || format!("oracle gave {got:?}, want (rainy, drive)"))?;
    close("p_star", &[sol.probability], &[0.35], 1e-12)?;
    Ok(format!("p_tilde = {:.15}, p* = {:.15}", trace.p_tilde, sol.probability))
}

fn lower_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xB0B);
    let oracle = Oracle::default();
    let (mut equal, total) = (0, 500);
    for i in 0..total {
        let n = rng.gen_range(6..=12);
        let m = random_model(&mut rng, n, 4, n);
        let k = rng.gen_range(1..=3);
        let observed = rand::seq::index::sample(&mut rng, n, k).into_vec();
        let e = Evidence::from_pairs(observed.iter().map(|&v| (v, rng.gen_range(0..m.cardinalities()[v])))).unwrap();
        let free: Vec<usize> = (0..n).filter(|v| !observed.contains(v)).collect();
        let size = rng.gen_range(3..=5).min(free.len());
        let explain: BTreeSet<VariableId> = rand::seq::index::sample(&mut rng, free.len(), size)
            .into_iter()
            .map(|j| VariableId(free[j]))
            .collect();
        let trace = mmap2mar(&m, &explain, &e).map_err(|err| format!("instance {i}: {err}"))?;
        let sol = oracle.mmap(&m, &e, &explain).map_err(|err| format!("instance {i}: {err}"))?;
        ensure(trace.p_tilde <= sol.probability * (1.0 + 1e-12), || {
            format!("instance {i}: p_tilde {} > p* {}", trace.p_tilde, sol.probability)
        })?;
        if trace.explained == sol.assignment {
            equal += 1;
        }
    }
    Ok(format!("{total} instances, heuristic exact on {equal}"))
}

/// Decodes joint-table index `idx` (first variable most significant).
fn decode(mut idx: usize, cards: &[usize], out: &mut [usize]) {
    for d in (0..cards.len()).rev() {
        out[d] = idx % cards[d];
        idx /= cards[d];
    }
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE0);
    let oracle = Oracle::default();
    let models = 200;
    let (mut worst_pr, mut worst_mar) = (0.0f64, 0.0f64);
    for i in 0..models {
        let n = rng.gen_range(2..=12);
        let max_card = match n {
            0..=7 => 4,
            8..=10 => 3,
            _ => 2,
        };
        let m = random_model(&mut rng, n, max_card, n);
        let k = rng.gen_range(1..n);
        let observed = rand::seq::index::sample(&mut rng, n, k).into_vec();
        let e = Evidence::from_pairs(observed.iter().map(|&v| (v, rng.gen_range(0..m.cardinalities()[v])))).unwrap();
        let target = VariableId((0..n).find(|v| !observed.contains(v)).unwrap());

        let joint = oracle.joint(&m).map_err(|err| err.to_string())?;
        let mut state = vec![0; n];
        let mut want_pr = 0.0;
        let mut want_mar = vec![0.0; m.cardinality(target)];
        for (idx, &p) in joint.table().iter().enumerate() {
            decode(idx, m.cardinalities(), &mut state);
            if e.iter().all(|(v, s)| state[v.0] == s) {
                want_pr += p;
                want_mar[state[target.0]] += p;
            }
        }
        want_mar.iter_mut().for_each(|x| *x /= want_pr);

        for strategy in [OrderStrategy::Identity, OrderStrategy::MinFill] {
            let got = pr_with(&m, &e, strategy).map_err(|err| err.to_string())?;
            let rel = (got - want_pr).abs() / want_pr;
            worst_pr = worst_pr.max(rel);
            ensure(rel <= 1e-9, || format!("model {i} {strategy:?}: pr {got} vs {want_pr}"))?;
            let got = mar_with(&m, &e, target, strategy).map_err(|err| err.to_string())?;
            for (g, w) in got.probs().iter().zip(&want_mar) {
                worst_mar = worst_mar.max((g - w).abs());
            }
            close(&format!("model {i} {strategy:?} mar"), got.probs(), &want_mar, 1e-9)?;
        }
    }
    Ok(format!(
        "{models} models, worst pr rel err {worst_pr:.1e}, worst mar abs err {worst_mar:.1e}"
    ))
}

fn entropy_functional() -> Outcome {
    for k in 2..=6 {
        let uniform = MassFunction::new(VariableId(0), vec![1.0 / k as f64; k]).map_err(|e| e.to_string())?;
        close(&format!("uniform k={k}"), &[entropy(&uniform)], &[1.0], 1e-12)?;
        for hot in 0..k {
            let mut p = vec![0.0; k];
            p[hot] = 1.0;
            let degenerate = MassFunction::new(VariableId(0), p).unwrap();
            close(&format!("degenerate k={k}"), &[entropy(&degenerate)], &[0.0], 1e-12)?;
        }
    }
    let a = entropy(&MassFunction::new(VariableId(0), vec![0.75, 0.24, 0.01]).unwrap());
    let b = entropy(&MassFunction::new(VariableId(0), vec![0.80, 0.10, 0.10]).unwrap());
    ensure(a < b, || format!("H[.75,.24,.01] = {a} not below H[.8,.1,.1] = {b}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(0xE7);
    for _ in 0..10_000 {
        let k = rng.gen_range(2..=6);
        let raw: Vec<f64> = (0..k)
            .map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..1.0) })
            .collect();
        let z: f64 = raw.iter().sum();
        if z == 0.0 {
            continue;
        }
        let mass = MassFunction::new(VariableId(0), raw.iter().map(|r| r / z).collect()).unwrap();
        let h = entropy(&mass);
        ensure((0.0..=1.0).contains(&h), || format!("entropy {h} of {:?} outside [0, 1]", mass.probs()))?;
    }
    Ok(format!("H[.75,.24,.01] = {a:.4} < H[.8,.1,.1] = {b:.4}; 10000 samples in [0, 1]"))
}

fn mar_call_count() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xCA11);
    let mut counts = Vec::new();
    for k in 1..=8 {
        let m = random_model(&mut rng, 10, 3, 10);
        let e = Evidence::from_pairs([(9, 0)]).unwrap();
        let explain = ids(&(0..k).collect::<Vec<_>>());
        let trace = mmap2mar(&m, &explain, &e).map_err(|err| err.to_string())?;
        ensure(trace.mar_calls == k * (k + 1) / 2, || {
            format!("k = {k}: {} MAR calls, want {}", trace.mar_calls, k * (k + 1) / 2)
        })?;
        counts.push(trace.mar_calls);
    }
    Ok(format!("calls for k = 1..8: {counts:?}"))
}

fn epsilon_semantics() -> Outcome {
    let m = weather();
    let both = ids(&[0, 1]);
    let t = epsilon_mmap2mar(&m, &both, &Evidence::new(), 0.95).map_err(|e| e.to_string())?;
    ensure(t.explained.len() == 1 && t.explained.get(&VariableId(1)) == Some(&1), || {
        format!("epsilon 0.95 explained {:?}, want exactly D=drive", t.explained)
    })?;
    let t = epsilon_mmap2mar(&m, &both, &Evidence::new(), 1.0).map_err(|e| e.to_string())?;
    ensure(t.explained.len() == 2, || format!("epsilon 1 explained {:?}", t.explained))?;

    let grid = uniform_grid(21);
    let mut rng = ChaCha8Rng::seed_from_u64(0xE5);
    for i in 0..100 {
        let n = rng.gen_range(6..=10);
        let m = random_model(&mut rng, n, 3, n);
        let observed = rand::seq::index::sample(&mut rng, n, 2).into_vec();
        let e = Evidence::from_pairs(observed.iter().map(|&v| (v, rng.gen_range(0..m.cardinalities()[v])))).unwrap();
        let explain: BTreeSet<VariableId> = (0..n).filter(|v| !observed.contains(v)).map(VariableId).collect();
        let mut previous: Option<Vec<_>> = None;
        for &eps in &grid {
            let t = epsilon_mmap2mar(&m, &explain, &e, eps).map_err(|err| err.to_string())?;
            if let Some(prev) = &previous {
                ensure(prev.len() <= t.steps.len() && t.steps[..prev.len()] == prev[..], || {
                    format!("instance {i}: trace at epsilon {eps} does not extend the previous one")
                })?;
            }
            previous = Some(t.steps);
        }
    }
    Ok("weather: 0.95 -> {D=drive}, 1.0 -> both; prefixes hold on 100 instances x 21 thresholds".into())
}

fn trajectory_trend() -> Outcome {
    let grid = uniform_grid(21);
    let mut summary = Vec::new();
    for seed in [1u64, 2, 3] {
        let m = pairwise_model(&PairwiseSpec { coupling: 3.0, ..PairwiseSpec::grid(3, 3, 2, seed) });
        let spec = BenchmarkSpec {
            model_path: "generated".into(),
            k: 3,
            q: 500,
            epsilon_grid: grid.clone(),
            seed: 1000 + seed,
            oracle_cap: 1 << 20,
        };
        let report = run_benchmark_on(&m, &spec).map_err(|e| e.to_string())?;
        ensure(report.skipped.is_empty(), || format!("grid {seed}: {} skipped", report.skipped.len()))?;
        for p in &report.points {
            ensure(p.instances == 500, || format!("grid {seed}: {} instances at {}", p.instances, p.epsilon))?;
            ensure(p.mean_hamming >= p.exact_match_rate, || {
                format!("grid {seed}: hamming {} < exact {} at {}", p.mean_hamming, p.exact_match_rate, p.epsilon)
            })?;
        }
        let at_one: Vec<_> = report.instances.iter().filter(|r| r.epsilon == 1.0).collect();
        let rate = |rs: &[&mmap_core::harness::InstanceResult]| {
            rs.iter().filter(|r| r.exact_match).count() as f64 / rs.len() as f64
        };
        let overall = rate(&at_one);
        let confident: Vec<_> = at_one.iter().copied().filter(|r| r.confidence >= 0.5).collect();
        ensure(!confident.is_empty(), || format!("grid {seed}: no instance with confidence >= 0.5"))?;
        let confident_rate = rate(&confident);
        ensure(confident_rate >= overall, || {
            format!("grid {seed}: confident exact rate {confident_rate} < overall {overall}")
        })?;
        let t_mar: f64 = report.instances.iter().map(|r| r.t_mar).sum();
        let t_mmap: f64 = report.instances.iter().map(|r| r.t_mmap).sum();
        summary.push(format!(
            "grid {seed}: exact@1 {overall:.3}, confident({}) {confident_rate:.3}, T_MAR {t_mar:.2}s T_MMAP {t_mmap:.2}s",
            confident.len()
        ));
    }
    Ok(summary.join("; "))
}

fn format_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xF0);
    for i in 0..100 {
        let n = rng.gen_range(1..=12);
        let extra = rng.gen_range(0..=n);
        let m = if i % 2 == 0 {
            random_model(&mut rng, n, 4, extra)
        } else {
            pairwise_model(&PairwiseSpec::grid(rng.gen_range(1..=4), rng.gen_range(1..=4), rng.gen_range(2..=4), i))
        };
        let back = parse_uai(&write_uai(&m)).map_err(|e| format!("model {i}: {e}"))?;
        ensure(back.cardinalities() == m.cardinalities() && back.f() == m.f(), || format!("model {i}: shape changed"))?;
        for (p, q) in m.potentials().iter().zip(back.potentials()) {
            let same = p.scope() == q.scope()
                && p.table().iter().map(|v| v.to_bits()).eq(q.table().iter().map(|v| v.to_bits()));
            ensure(same, || format!("model {i}: potential changed"))?;
        }
    }
    let golden = GraphicalModel::from_tables(
        mmap_core::NetworkKind::Markov,
        vec![2, 2],
        vec![(vec![0], vec![0.6, 0.4]), (vec![0, 1], vec![0.5, 0.5, 0.125, 0.875])],
    )
    .unwrap();
    ensure(weather() == golden, || "weather text does not parse to the golden model".into())?;
    Ok("100 models bit-exact; weather text parses to the golden model".into())
}

fn csv_without_timing(path: &Path) -> Result<String, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(text
        .lines()
        .map(|l| l.split(',').take(6).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("\n"))
}

fn bench_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let model = dir.path().join("grid.uai");
    let bin = env!("CARGO_BIN_EXE_mmap");
    let status = Command::new(bin)
        .args(["gen", "--rows", "3", "--cols", "3", "--seed", "42", "--out"])
        .arg(&model)
        .status()
        .map_err(|e| e.to_string())?;
    ensure(status.success(), || "gen failed".into())?;

    let mut runs = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let output = Command::new(bin)
            .arg("bench")
            .arg("--model")
            .arg(&model)
            .args(["--k", "3", "--q", "60", "--grid-points", "11", "--seed", "2024", "--name", "grid", "--out-dir"])
            .arg(&out_dir)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(output.status.success(), || String::from_utf8_lossy(&output.stderr).into_owned())?;
        let read = |f: &str| std::fs::read(out_dir.join(f)).map_err(|e| e.to_string());
        runs.push((
            output.stdout,
            read("grid_match.dat")?,
            read("grid_hamming.dat")?,
            csv_without_timing(&out_dir.join("grid_instances.csv"))?,
        ));
    }
    ensure(runs[0] == runs[1], || "two bench runs with the same seed differ".into())?;
    ensure(String::from_utf8_lossy(&runs[0].0).contains("seed 2024"), || "seed not echoed".into())?;
    Ok(format!("stdout, .dat files and {} CSV lines identical", runs[0].3.lines().count()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("AC1 weather-dilemma golden values", weather_golden),
        ("AC2 heuristic value never exceeds exact MMAP", lower_bound),
        ("AC3 PR/MAR agree with joint enumeration", oracle_equivalence),
        ("AC4 normalized entropy functional", entropy_functional),
        ("AC5 quadratic MAR call count", mar_call_count),
        ("AC6 threshold semantics and prefix monotonicity", epsilon_semantics),
        ("AC7 accuracy trend on 3x3 grids", trajectory_trend),
        ("AC8 UAI round trip", format_round_trip),
        ("AC9 bench determinism", bench_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let outcome = check();
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {name} ({secs:.2}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name} ({secs:.2}s): {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
