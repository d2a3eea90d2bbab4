//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use pumpdown::augmentation::{generate_augmented, AugmentOptions, AugmentedSet};
use pumpdown::decomposition::{decompose, extract_all, learn_dictionary};
use pumpdown::io::{generate_synthetic, GroundTruthSet, SyntheticCorpusSpec};
use pumpdown::models::mlp::Mlp;
use pumpdown::models::{
    external_predict_batch, split_classic, train_tuned, Dataset, ExternalEndpoint, FeatureVector, FnRegressor,
    Hyperparams, ModelKind,
};
use pumpdown::physics::{effective_speed, pressure_at, ChamberSpec};
use pumpdown::rng::stream_rng;
use pumpdown::robustness::volume::simplex_volume;
use pumpdown::robustness::{evaluate, metric_linf, metric_mae, metric_r2, run_oracles, ScenarioResults, Thresholds};
use pumpdown::{with_workers, Error};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn physics_roundtrip() -> Outcome {
    let mut rng = stream_rng(2024, 1, 0);
    let draws: Vec<(f64, f64, f64, f64)> = (0..1000)
        .map(|_| {
            let v = rng.random_range(0.5..50.0);
            let s = rng.random_range(0.01..10.0);
            let p0 = rng.random_range(1.0..2000.0);
            // keep P(t) a normal float: tS/V below 100
            let t = rng.random_range(0.1..(600.0f64).min(100.0 * v / s));
            (v, s, p0, t)
        })
        .collect();
    let start = Instant::now();
    let mut worst = 0.0f64;
    for &(v, s, p0, t) in &draws {
        let chamber = ChamberSpec::sealed(v).map_err(|e| e.to_string())?;
        let p = pressure_at(&chamber, p0, s, t).map_err(|e| e.to_string())?;
        let back = effective_speed(&chamber, p0, p, t).map_err(|e| e.to_string())?;
        worst = worst.max(((back - s) / s).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    check(worst < 1e-9, || format!("max relative error {worst:e}"))?;
    check(secs < 1.0, || format!("took {secs:.3} s"))?;
    Ok(format!("max relative error {worst:.2e}, {secs:.4} s"))
}

fn asymptote_and_monotonicity() -> Outcome {
    let mut rng = stream_rng(2024, 2, 0);
    let mut worst_gap = 0.0f64;
    for i in 0..1000 {
        let v = rng.random_range(0.5..50.0);
        let s = rng.random_range(0.01..10.0);
        let p0 = rng.random_range(1.0..2000.0);
        let q = rng.random_range(0.0..0.9) * p0 * s;
        let split = rng.random_range(0.0..1.0);
        let chamber = ChamberSpec::new(v, split * q, (1.0 - split) * q).map_err(|e| e.to_string())?;
        let ultimate = q / s;
        let far = pressure_at(&chamber, p0, s, 1e6 * v / s).map_err(|e| e.to_string())?;
        let gap = (far - ultimate).abs();
        worst_gap = worst_gap.max(gap / p0);
        check(gap <= 1e-6 * p0, || format!("draw {i}: |P(inf) - Q/S| = {gap:e}"))?;
        let horizon = 20.0 * v / s;
        let mut prev = p0;
        for k in 1..=50 {
            let p = pressure_at(&chamber, p0, s, horizon * k as f64 / 50.0).map_err(|e| e.to_string())?;
            check(p < prev && p >= ultimate - 1e-6 * p0, || {
                format!("draw {i}: P not decreasing towards Q/S at step {k}")
            })?;
            prev = p;
        }
    }
    Ok(format!("worst asymptote gap {worst_gap:.2e}·P0"))
}

fn dictionary_recovery() -> Outcome {
    let spec = SyntheticCorpusSpec {
        noise_rel: 0.0,
        speed_archetypes: 3,
        n_events: 200,
        seed: 3,
        ..Default::default()
    };
    let gt = generate_synthetic(&spec).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let speeds = extract_all(&gt.curves, 500).map_err(|e| e.to_string())?;
    let dict = learn_dictionary(&speeds, 1e-3).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    check(dict.atom_count() <= 3, || format!("{} atoms", dict.atom_count()))?;
    let mut worst = 0.0f64;
    for v in &speeds {
        worst = worst.max(dict.residual_norm(&v.values).map_err(|e| e.to_string())?);
    }
    check(worst <= 1e-3, || format!("residual {worst:e}"))?;
    check(dict.max_residual_history.windows(2).all(|w| w[1] <= w[0]), || {
        "max-residual history increases".into()
    })?;
    check(secs < 10.0, || format!("took {secs:.2} s"))?;
    Ok(format!("{} atoms, worst residual {worst:.2e}, {secs:.3} s", dict.atom_count()))
}

fn augmentation_invariants() -> Outcome {
    let gt = generate_synthetic(&SyntheticCorpusSpec {
        seed: 4,
        ..Default::default()
    })
    .map_err(|e| e.to_string())?;
    let dec = decompose(&gt, 500, 1e-3).map_err(|e| e.to_string())?;
    let opts = AugmentOptions::new(2000, 4);
    let run = |w| {
        with_workers(w, || {
            generate_augmented(&dec.dictionary, &dec.p0_dist, &dec.t_dist, &gt.curves[0].chamber, &opts)
        })
    };
    let one = run(1).map_err(|e| e.to_string())?;
    let eight = run(8).map_err(|e| e.to_string())?;
    check(one.len() == 2000, || format!("{} samples", one.len()))?;
    for (i, s) in one.samples.iter().enumerate() {
        check(s.curve.pressures_mbar.iter().all(|&p| p > 0.0), || format!("sample {i}: non-positive pressure"))?;
        check((dec.p0_dist.observed_min..=dec.p0_dist.observed_max).contains(&s.p0), || {
            format!("sample {i}: P0 {} out of bounds", s.p0)
        })?;
        check(
            (dec.t_dist.observed_min..=dec.t_dist.observed_max).contains(&s.pump_down_time),
            || format!("sample {i}: T {} out of bounds", s.pump_down_time),
        )?;
        let w = &s.weights.weights;
        let total: f64 = w.iter().sum();
        check(w.iter().all(|&x| x >= 0.0) && (total - 1.0).abs() <= 1e-12, || {
            format!("sample {i}: weights sum to {total}")
        })?;
    }
    let a = serde_json::to_string(&one).map_err(|e| e.to_string())?;
    let b = serde_json::to_string(&eight).map_err(|e| e.to_string())?;
    check(a == b, || "1 and 8 workers differ".into())?;
    Ok(format!("2000 samples from {} atoms, 1 vs 8 workers identical", dec.dictionary.atom_count()))
}

fn naive_mae(p: &[f64], a: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (p[i] - a[i]).abs();
    }
    s / a.len() as f64
}

fn naive_r2(a: &[f64], p: &[f64]) -> f64 {
    let mut mean = 0.0;
    for x in a {
        mean += x;
    }
    mean /= a.len() as f64;
    let (mut res, mut tot) = (0.0, 0.0);
    for i in 0..a.len() {
        res += (a[i] - p[i]) * (a[i] - p[i]);
        tot += (a[i] - mean) * (a[i] - mean);
    }
    1.0 - res / tot
}

fn naive_linf(p: &[f64], a: &[f64]) -> f64 {
    let mut m = 0.0f64;
    for i in 0..a.len() {
        m = m.max((p[i] - a[i]).abs());
    }
    m
}

fn metric_oracles() -> Outcome {
    let mut rng = stream_rng(2024, 5, 0);
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0);
    for i in 0..100 {
        let n = rng.random_range(2..500);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..100.0)).collect();
        let p: Vec<f64> = a.iter().map(|x| x + rng.random_range(-5.0..5.0)).collect();
        let (mae, r2, linf) = (
            metric_mae(&p, &a).map_err(|e| e.to_string())?,
            metric_r2(&a, &p).map_err(|e| e.to_string())?,
            metric_linf(&p, &a).map_err(|e| e.to_string())?,
        );
        check(close(mae, naive_mae(&p, &a)), || format!("pair {i}: mae {mae} vs {}", naive_mae(&p, &a)))?;
        check(close(r2, naive_r2(&a, &p)), || format!("pair {i}: r2 {r2} vs {}", naive_r2(&a, &p)))?;
        check(close(linf, naive_linf(&p, &a)), || format!("pair {i}: linf {linf}"))?;
        check(mae <= linf, || format!("pair {i}: mae {mae} > linf {linf}"))?;
        let self_r2 = metric_r2(&a, &a).map_err(|e| e.to_string())?;
        check(self_r2 == 1.0, || format!("pair {i}: R2(a, a) = {self_r2}"))?;
        let mean = a.iter().sum::<f64>() / n as f64;
        let mean_r2 = metric_r2(&a, &vec![mean; n]).map_err(|e| e.to_string())?;
        check(mean_r2.abs() <= 1e-12, || format!("pair {i}: R2(a, mean) = {mean_r2}"))?;
    }
    Ok("100 pairs agree with naive loops".into())
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn simplex_volumes() -> Outcome {
    let mut rng = stream_rng(2024, 6, 0);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let dim = 2 + i % 7;
        let vertices: Vec<Vec<f64>> =
            (0..=dim).map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
        let edges = DMatrix::from_fn(dim, dim, |r, c| vertices[r][c] - vertices[dim][c]);
        let oracle = edges.lu().determinant().abs() / factorial(dim);
        let refs: Vec<&[f64]> = vertices.iter().map(Vec::as_slice).collect();
        let vol = simplex_volume(&refs).map_err(|e| e.to_string())?;
        let rel = (vol.volume - oracle).abs() / oracle;
        worst = worst.max(rel);
        check(rel <= 1e-10, || format!("simplex {i} (dim {dim}): {} vs {oracle}", vol.volume))?;

        let c = rng.random_range(0.1..10.0);
        let scaled: Vec<Vec<f64>> = vertices.iter().map(|v| v.iter().map(|x| c * x).collect()).collect();
        let srefs: Vec<&[f64]> = scaled.iter().map(Vec::as_slice).collect();
        let svol = simplex_volume(&srefs).map_err(|e| e.to_string())?.volume;
        let expected = vol.volume * c.powi(dim as i32);
        check((svol - expected).abs() <= 1e-10 * expected, || {
            format!("simplex {i}: scaled volume {svol} vs {expected}")
        })?;
    }
    let unit = simplex_volume(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]).map_err(|e| e.to_string())?;
    check(unit.volume == 0.5, || format!("unit triangle {}", unit.volume))?;
    Ok(format!("worst relative error {worst:.2e}, unit triangle 0.5"))
}

fn fixture(o1: bool, mae: f64, r2: f64, linf: f64, v_t: f64) -> ScenarioResults {
    ScenarioResults {
        feasibility_pass: o1,
        mae,
        r2,
        linf_gt: linf,
        linf_aug: linf,
        v_t,
        v_tot: 1e-10,
        log10_v_t: v_t.log10(),
        log10_v_tot: -10.0,
        d_effective: 60,
        gated: 100,
    }
}

fn oracle_truth_table() -> Outcome {
    let t = Thresholds::default();
    for bits in 0..8u8 {
        let (o1, o2, o3) = (bits & 1 != 0, bits & 2 != 0, bits & 4 != 0);
        let r = fixture(o1, if o2 { 1.0 } else { 3.0 }, 0.98, 22.12, if o3 { 7.48e-21 } else { 1e-40 });
        let v = run_oracles(&r, &t);
        check((v.oracle1, v.oracle2, v.oracle3) == (o1, o2, o3), || format!("combination {bits:03b}"))?;
        check(v.main == (o1 && o2 && o3), || format!("main for {bits:03b}"))?;
    }
    let v = run_oracles(&fixture(true, 1.0, 0.98, 22.12, 7.48e-21), &t);
    check(v.main, || "threshold fixture fails".into())?;
    Ok("8 combinations and threshold fixture".into())
}

fn small_setup(seed: u64) -> Result<(GroundTruthSet, AugmentedSet), String> {
    let gt = generate_synthetic(&SyntheticCorpusSpec {
        n_events: 80,
        seed,
        ..Default::default()
    })
    .map_err(|e| e.to_string())?;
    let dec = decompose(&gt, 500, 1e-3).map_err(|e| e.to_string())?;
    let aug = generate_augmented(
        &dec.dictionary,
        &dec.p0_dist,
        &dec.t_dist,
        &gt.curves[0].chamber,
        &AugmentOptions::new(500, seed),
    )
    .map_err(|e| e.to_string())?;
    Ok((gt, aug))
}

fn feasibility_detection() -> Outcome {
    let (gt, aug) = small_setup(8)?;
    let data = Dataset::from_ground_truth(&gt).map_err(|e| e.to_string())?;
    let target = aug.samples[137].first_minute.clone();
    let key = target.clone();
    let rigged = FnRegressor(move |x: &[f64]| if x == key.as_slice() { -0.01 } else { x[59] });
    let sibling = FnRegressor(move |x: &[f64]| if x == target.as_slice() { 0.01 } else { x[59] });
    let t = Thresholds::default();
    let bad = evaluate(&rigged, &data, &aug, t.residual_gate).map_err(|e| e.to_string())?;
    let good = evaluate(&sibling, &data, &aug, t.residual_gate).map_err(|e| e.to_string())?;
    let negatives = bad.aug_predicted.iter().filter(|&&p| p <= 0.0).count();
    check(negatives == 1, || format!("rigged model emitted {negatives} non-positive predictions"))?;
    check(!run_oracles(&bad.results, &t).oracle1, || "rigged model passes oracle 1".into())?;
    check(run_oracles(&good.results, &t).oracle1, || "positive sibling fails oracle 1".into())?;
    Ok("one negative prediction fails oracle 1, sibling passes".into())
}

fn aug_vs_classic() -> Outcome {
    let start = Instant::now();
    let (mut mae_wins, mut vol_wins) = (0, 0);
    let mut lines = Vec::new();
    for rep in 0..10u64 {
        let furnace_m = generate_synthetic(&SyntheticCorpusSpec {
            n_events: 200,
            seed: 100 + rep,
            ..Default::default()
        })
        .map_err(|e| e.to_string())?;
        let furnace_s = generate_synthetic(&SyntheticCorpusSpec {
            n_events: 100,
            seed: 1000 + rep,
            ..Default::default()
        })
        .map_err(|e| e.to_string())?;
        let dec = decompose(&furnace_m, 500, 1e-3).map_err(|e| e.to_string())?;
        let aug = generate_augmented(
            &dec.dictionary,
            &dec.p0_dist,
            &dec.t_dist,
            &furnace_m.curves[0].chamber,
            &AugmentOptions::new(2000, rep),
        )
        .map_err(|e| e.to_string())?;
        let m_data = Dataset::from_ground_truth(&furnace_m).map_err(|e| e.to_string())?;
        let s_data = Dataset::from_ground_truth(&furnace_s).map_err(|e| e.to_string())?;
        let a_data = Dataset::from_augmented(&aug).map_err(|e| e.to_string())?;
        let (train_c, _) = split_classic(&m_data, 0.8, rep).map_err(|e| e.to_string())?;
        let h = Hyperparams::new();
        let (classic, _) = train_tuned(ModelKind::Ridge, &train_c, &h, rep, "classic").map_err(|e| e.to_string())?;
        let (augmented, _) = train_tuned(ModelKind::Ridge, &a_data, &h, rep, "aug").map_err(|e| e.to_string())?;
        let gate = Thresholds::default().residual_gate;
        let c = evaluate(&classic, &s_data, &aug, gate).map_err(|e| e.to_string())?.results;
        let a = evaluate(&augmented, &s_data, &aug, gate).map_err(|e| e.to_string())?.results;
        let mae_win = a.mae <= c.mae;
        let vol_win = (a.d_effective, a.log10_v_t) > (c.d_effective, c.log10_v_t);
        mae_wins += usize::from(mae_win);
        vol_wins += usize::from(vol_win);
        lines.push(format!(
            "    rep {rep}: MAE aug {:.4} vs classic {:.4} [{}]; v_t aug rank {} log10 {:.2} vs classic rank {} log10 {:.2} [{}]",
            a.mae,
            c.mae,
            if mae_win { "win" } else { "loss" },
            a.d_effective,
            a.log10_v_t,
            c.d_effective,
            c.log10_v_t,
            if vol_win { "win" } else { "loss" },
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    for l in &lines {
        println!("{l}");
    }
    let summary = format!("MAE wins {mae_wins}/10, volume wins {vol_wins}/10, {secs:.1} s");
    check(mae_wins >= 8 && vol_wins >= 8 && secs < 300.0, || summary.clone())?;
    Ok(summary)
}

fn mlp_gradient() -> Outcome {
    let mut rng = stream_rng(2024, 10, 0);
    let mut net = Mlp::init(60, 16, 1e-3, &mut rng);
    let xs: Vec<Vec<f64>> = (0..8).map(|_| (0..60).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let ys: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
    let rows: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
    let (_, grad) = net.loss_and_grad(&rows, &ys);
    let h = 1e-5;
    let mut numeric = vec![0.0; grad.len()];
    for (i, n) in numeric.iter_mut().enumerate() {
        let orig = net.params[i];
        net.params[i] = orig + h;
        let (up, _) = net.loss_and_grad(&rows, &ys);
        net.params[i] = orig - h;
        let (down, _) = net.loss_and_grad(&rows, &ys);
        net.params[i] = orig;
        *n = (up - down) / (2.0 * h);
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = grad.iter().zip(&numeric).map(|(g, n)| g - n).collect();
    let rel = norm(&diff) / norm(&grad).max(norm(&numeric));
    let worst_component = grad
        .iter()
        .zip(&numeric)
        .map(|(g, n)| (g - n).abs() / g.abs().max(n.abs()).max(1e-8))
        .fold(0.0, f64::max);
    check(rel < 1e-5, || format!("relative error {rel:e}"))?;
    Ok(format!(
        "{} parameters, relative error {rel:.2e} (worst single component {worst_component:.2e})",
        grad.len()
    ))
}

fn external_protocol() -> Outcome {
    let echo = |args: &[&str]| {
        ExternalEndpoint::new(env!("CARGO_BIN_EXE_echo_model"), args.iter().map(|s| s.to_string()).collect())
    };
    let features = |n: usize| -> Result<Vec<FeatureVector>, String> {
        (0..n)
            .map(|i| FeatureVector::new((0..60).map(|j| 1.0 + i as f64 + 0.001 * j as f64).collect()))
            .collect::<Result<_, _>>()
            .map_err(|e: Error| e.to_string())
    };
    let single = FeatureVector::new((0..60).map(|j| 7.0 + j as f64).collect()).map_err(|e| e.to_string())?;
    let out = external_predict_batch(&echo(&[]), &[single]).map_err(|e| e.to_string())?;
    check(out == vec![7.0], || format!("echo returned {out:?}"))?;

    match external_predict_batch(&echo(&["--die-after", "10"]), &features(50)?) {
        Err(Error::Protocol { .. }) => {}
        other => return Err(format!("process death gave {other:?}")),
    }

    let out = external_predict_batch(&echo(&["--reverse"]), &features(2000)?).map_err(|e| e.to_string())?;
    check(out.len() == 2000, || format!("{} replies", out.len()))?;
    for (i, v) in out.iter().enumerate() {
        check(*v == 1.0 + i as f64, || format!("reply {i} out of order: {v}"))?;
    }
    Ok("echo, process death and 2000-input ordering".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("physics roundtrip", physics_roundtrip),
        ("asymptote and monotonicity", asymptote_and_monotonicity),
        ("dictionary learning", dictionary_recovery),
        ("augmentation invariants", augmentation_invariants),
        ("metric oracles", metric_oracles),
        ("simplex volume", simplex_volumes),
        ("oracle truth table", oracle_truth_table),
        ("feasibility detection", feasibility_detection),
        ("aug vs classic direction", aug_vs_classic),
        ("MLP gradient check", mlp_gradient),
        ("external-model protocol", external_protocol),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
