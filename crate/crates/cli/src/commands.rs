use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use pumpdown::augmentation::{generate_augmented, load_augmented, save_augmented, AugmentOptions, AUGMENTED_MANIFEST};
use pumpdown::decomposition::{decompose, Decomposition};
use pumpdown::io::{generate_synthetic, load_ground_truth, write_synthetic};
use pumpdown::models::{split_classic, train, train_tuned, Dataset, ModelKind, TrainedModel};
use pumpdown::robustness::{evaluate, run_oracles, write_plot_csv, ReportEntry, RobustnessReport, RunSeeds};

use crate::config::RunConfig;
use crate::UsageError;

pub const DICTIONARY_FILE: &str = "dictionary.json";
pub const AUGMENTED_DIR: &str = "augmented";
pub const REPORT_FILE: &str = "report.json";
pub const PLOTS_DIR: &str = "plots";

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

pub fn synth(config: &RunConfig) -> Result<()> {
    let spec = config.synth_spec()?;
    let out = config.out_dir()?;
    create_dir(out)?;
    let gt = generate_synthetic(&spec)?;
    write_synthetic(&spec, &gt, out)?;
    println!("wrote {} events (seed {}) to {}", gt.len(), spec.seed, out.display());
    Ok(())
}

pub fn decompose_cmd(config: &RunConfig) -> Result<()> {
    config.validate_decomposition()?;
    let chamber = config.chamber()?;
    let gt_dir = config.gt_dir()?;
    let out = config.out_dir()?;
    let gt = load_ground_truth(gt_dir, chamber)?;
    let d = &config.decomposition;
    let dec = decompose(&gt, d.resolution, d.epsilon)?;
    create_dir(out)?;
    let path = out.join(DICTIONARY_FILE);
    dec.save(&path)?;
    println!(
        "{} atoms from {} events, max residual {:.3e} (epsilon {:e})",
        dec.dictionary.atom_count(),
        gt.len(),
        dec.dictionary.achieved_max_residual().unwrap_or(0.0),
        d.epsilon
    );
    println!(
        "P0 {:.3} ± {:.3} mbar, T {:.3} ± {:.3} s",
        dec.p0_dist.mean, dec.p0_dist.std, dec.t_dist.mean, dec.t_dist.std
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn augmented_dir(out: &Path) -> PathBuf {
    out.join(AUGMENTED_DIR)
}

pub fn augment(config: &RunConfig) -> Result<()> {
    config.validate_augmentation()?;
    let out = config.out_dir()?;
    let dict_path = out.join(DICTIONARY_FILE);
    if !dict_path.exists() {
        return Err(UsageError(format!("no dictionary at {}; run `decompose` first", dict_path.display())).into());
    }
    let dec = Decomposition::load(&dict_path)?;
    let chamber = config.chamber()?;
    let a = &config.augmentation;
    let opts = AugmentOptions {
        m: a.m,
        seed: a.seed,
        max_nnz: a.max_nnz,
    };
    let set = generate_augmented(&dec.dictionary, &dec.p0_dist, &dec.t_dist, &chamber, &opts)?;

    let dir = augmented_dir(out);
    if dir.exists() {
        if !dir.join(AUGMENTED_MANIFEST).exists() {
            return Err(UsageError(format!("{} exists and is not an augmented set", dir.display())).into());
        }
        fs::remove_dir_all(&dir).with_context(|| format!("cannot replace {}", dir.display()))?;
    }
    create_dir(&dir)?;
    save_augmented(&set, &dec.dictionary, &dec.p0_dist, &dec.t_dist, &chamber, a.max_nnz, &dir)?;

    let (p0, t) = (&dec.p0_dist, &dec.t_dist);
    let p0_ok = set.samples.iter().filter(|s| (p0.observed_min..=p0.observed_max).contains(&s.p0)).count();
    let t_ok = set
        .samples
        .iter()
        .filter(|s| (t.observed_min..=t.observed_max).contains(&s.pump_down_time))
        .count();
    println!("m = {} samples (seed {}, at most {} atoms each)", set.len(), a.seed, a.max_nnz);
    println!(
        "P0 in [{:.3}, {:.3}] mbar: {p0_ok}/{}; T in [{:.3}, {:.3}] s: {t_ok}/{}",
        p0.observed_min,
        p0.observed_max,
        set.len(),
        t.observed_min,
        t.observed_max,
        set.len()
    );
    println!("wrote {}", dir.display());
    Ok(())
}

pub fn test(config: &RunConfig) -> Result<()> {
    config.validate_test()?;
    let chamber = config.chamber()?;
    let gt_dir = config.gt_dir()?;
    let out = config.out_dir()?;
    let aug_dir = augmented_dir(out);
    if !aug_dir.join(AUGMENTED_MANIFEST).exists() {
        return Err(UsageError(format!("no augmented set in {}; run `augment` first", aug_dir.display())).into());
    }
    let gt = load_ground_truth(gt_dir, chamber)?;
    let (aug, manifest) = load_augmented(&aug_dir)?;

    let gt_data = Dataset::from_ground_truth(&gt)?;
    let aug_data = Dataset::from_augmented(&aug)?;
    let seed = config.split.seed;
    let (classic_train, classic_test) = split_classic(&gt_data, config.split.ratio, seed)?;
    let thresholds = config.thresholds;
    let aug_targets = aug.targets();
    let plots = out.join(PLOTS_DIR);
    create_dir(&plots)?;

    let mut entries = Vec::new();
    for spec in &config.models {
        let name = spec.name();
        let regimes = [("classic", &classic_train, &classic_test), ("aug", &aug_data, &gt_data)];
        for (regime, train_data, test_data) in regimes {
            let (model, hyperparams, train_size) = match spec.kind {
                ModelKind::External => {
                    let endpoint = spec.endpoint.clone().expect("validated");
                    (TrainedModel::external(endpoint, regime), spec.hyperparams.clone(), 0)
                }
                kind => {
                    let (model, h) = if spec.tune {
                        train_tuned(kind, train_data, &spec.hyperparams, seed, regime)
                    } else {
                        train(kind, train_data, &spec.hyperparams, seed, regime).map(|m| (m, spec.hyperparams.clone()))
                    }
                    .with_context(|| format!("training model `{name}` ({regime})"))?;
                    (model, h, train_data.len())
                }
            };
            let eval = evaluate(&model, test_data, &aug, thresholds.residual_gate)
                .with_context(|| format!("evaluating model `{name}` ({regime})"))?;
            let verdict = run_oracles(&eval.results, &thresholds);
            let entry_name = format!("{name}-{regime}");
            write_plot_csv(&plots.join(format!("{entry_name}_gt.csv")), &eval.gt_actual, &eval.gt_predicted)?;
            write_plot_csv(&plots.join(format!("{entry_name}_aug.csv")), &aug_targets, &eval.aug_predicted)?;
            log::info!("{entry_name}: main oracle {}", if verdict.main { "pass" } else { "fail" });
            entries.push(ReportEntry {
                name: entry_name,
                model: name.clone(),
                regime: regime.to_string(),
                hyperparams,
                train_size,
                test_size: test_data.len(),
                results: eval.results,
                verdict,
            });
        }
    }

    let seeds = RunSeeds {
        augment: manifest.seed,
        split: seed,
        model: seed,
    };
    let report = RobustnessReport::new(thresholds, seeds, manifest.dictionary_hash, aug.len(), entries);
    let path = out.join(REPORT_FILE);
    report.save(&path)?;
    print_report(&report);
    println!("wrote {} and plot data in {}", path.display(), plots.display());
    Ok(())
}

pub fn report(config: &RunConfig) -> Result<()> {
    let path = config.out_dir()?.join(REPORT_FILE);
    if !path.exists() {
        return Err(UsageError(format!("no report at {}; run `test` first", path.display())).into());
    }
    print_report(&RobustnessReport::load(&path)?);
    Ok(())
}

fn mark(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "FAIL"
    }
}

pub fn print_report(report: &RobustnessReport) {
    println!(
        "{:<24} {:>5} {:>5} {:>5} {:>5} {:>9} {:>7} {:>9} {:>9} {:>4} {:>6}",
        "model", "O1", "O2", "O3", "main", "MAE", "R2", "linf", "log10 vT", "r", "gated"
    );
    for e in &report.entries {
        let r = &e.results;
        let v = &e.verdict;
        println!(
            "{:<24} {:>5} {:>5} {:>5} {:>5} {:>9.4} {:>7.4} {:>9.3} {:>9.2} {:>4} {:>6}",
            e.name,
            mark(v.oracle1),
            mark(v.oracle2),
            mark(v.oracle3),
            mark(v.main),
            r.mae,
            r.r2,
            r.linf_gt.max(r.linf_aug),
            r.log10_v_t,
            r.d_effective,
            r.gated
        );
    }
    println!("ranking:");
    for r in &report.ranking {
        match r.rank {
            Some(k) => println!("  {k}. {}", r.name),
            None => println!("  -  {} (main oracle failed)", r.name),
        }
    }
}
