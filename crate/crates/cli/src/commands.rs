use std::fmt::{Display, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use geomae::datasets::{
    earth_generate, generate, load_csv, standardize, write_csv, write_latent_csv, DatasetKind, EmbeddingFrame,
    LandRaster,
};
use geomae::diagnostics::{
    condition_numbers, det_heatmap, heatmap_to_csv, indicatrices, indicatrices_to_text, latent_grid, points_of,
    scale_indicatrices, HeatmapValues, Point,
};
use geomae::metrics::{
    aggregate_ranks, evaluate_all, reports_to_csv, reports_to_table, EvalOptions, RankTable, METRICS,
};
use geomae::nn::{
    evaluate_losses, load_model, save_model, train as fit, Autoencoder, EpochRecord, Regularizer, TrainConfig,
    TrainingLog,
};
use geomae::pca::{pca_as_autoencoder, pca_fit};
use geomae::plotting::{heatmap_svg, indicatrix_svg, PlotStyle};
use geomae::verify::{gradcheck_suite, run_suite, Suite, SuiteReport};
use geomae::Tensor64;

use crate::settings::{manifest_path, write_manifest, ConfigFile, Resolved, Resolver};
use crate::{CliError, DiagnoseArgs, EvaluateArgs, GenDataArgs, GradcheckArgs, TrainArgs, VerifyArgs};

fn parse_flag<T: FromStr>(key: &str, raw: Option<String>) -> Result<Option<T>, CliError>
where
    T::Err: Display,
{
    raw.map(|s| {
        s.parse()
            .map_err(|e| CliError::new("usage", format!("--{key} {s:?}: {e}")))
    })
    .transpose()
}

fn path_setting(r: &mut Resolver, key: &str, flag: Option<PathBuf>) -> Result<PathBuf, CliError> {
    let s: String = r.required(key, flag.map(|p| p.display().to_string()))?;
    Ok(PathBuf::from(s))
}

fn optional_path(r: &mut Resolver, key: &str, flag: Option<PathBuf>) -> Result<Option<PathBuf>, CliError> {
    Ok(r.optional::<String>(key, flag.map(|p| p.display().to_string()))?
        .map(PathBuf::from))
}

fn io_err(path: &Path, e: impl Display) -> CliError {
    CliError::new("io", format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| io_err(path, e))
}

/// One manifest next to each output file.
fn manifests(
    command: &str,
    args: &[String],
    seed: u64,
    settings: &Resolved,
    outputs: &[PathBuf],
) -> Result<(), CliError> {
    for o in outputs {
        write_manifest(&manifest_path(o, false), command, args, seed, settings, outputs)?;
    }
    Ok(())
}

/// Data matrix as used for training, diagnostics and evaluation.
fn load_inputs(path: &Path, standardized: bool) -> Result<EmbeddingFrame, CliError> {
    let frame = load_csv(path).map_err(|e| CliError::new(e.kind(), format!("{}: {e}", path.display())))?;
    if frame.is_empty() {
        return Err(CliError::new(
            "invalid_argument",
            format!("{}: no rows", path.display()),
        ));
    }
    if !standardized {
        return Ok(frame);
    }
    let st = standardize(&frame)?;
    if !st.dropped.is_empty() {
        eprintln!("warning: dropped constant columns {:?}", st.dropped);
    }
    Ok(st.frame)
}

pub fn gen_data(a: GenDataArgs, cfg: &ConfigFile, args: &[String]) -> Result<(), CliError> {
    let mut r = Resolver::new(cfg);
    let kind: DatasetKind = r.required("kind", parse_flag("kind", a.kind)?)?;
    let n: usize = r.value("n", a.n, 10_000)?;
    let seed: u64 = r.value("seed", a.seed, 0)?;
    let out = path_setting(&mut r, "out", a.out)?;
    if n == 0 {
        return Err(CliError::new("invalid_argument", "--n must be at least 1"));
    }
    let frame = if kind == DatasetKind::Earth {
        let (frame, stats) = earth_generate(n, seed, &LandRaster::bundled())?;
        println!(
            "earth: {} points from {} draws, acceptance rate {:.6}",
            stats.accepted,
            stats.attempts,
            stats.acceptance_rate()
        );
        frame
    } else {
        generate(kind, n, seed)?
    };
    write_csv(&out, &frame).map_err(|e| io_err(&out, e))?;
    println!("wrote {} rows of {} to {}", frame.len(), kind, out.display());
    manifests("gen-data", args, seed, &r.finish(), &[out])
}

fn parse_hidden(s: &str) -> Result<Vec<usize>, CliError> {
    let widths: Vec<usize> = s
        .split(',')
        .map(|w| w.trim().parse::<usize>().ok().filter(|&w| w > 0))
        .collect::<Option<_>>()
        .ok_or_else(|| {
            CliError::new(
                "usage",
                format!("--hidden must be comma-separated positive widths, got {s:?}"),
            )
        })?;
    if widths.is_empty() {
        return Err(CliError::new("usage", "--hidden needs at least one width"));
    }
    Ok(widths)
}

pub fn train(a: TrainArgs, cfg: &ConfigFile, args: &[String]) -> Result<(), CliError> {
    let mut r = Resolver::new(cfg);
    let data = path_setting(&mut r, "data", a.data)?;
    let model: String = r.value("model", a.model, "geometric".to_string())?;
    let defaults = TrainConfig::default();
    let alpha = r.value("alpha", a.alpha, defaults.alpha)?;
    let epochs = r.value("epochs", a.epochs, defaults.epochs)?;
    let batch = r.value("batch", a.batch, defaults.batch_size)?;
    let lr = r.value("lr", a.lr, defaults.learning_rate)?;
    let weight_decay = r.value("weight-decay", a.weight_decay, defaults.weight_decay)?;
    let seed = r.value("seed", a.seed, 0u64)?;
    let hidden = parse_hidden(&r.value("hidden", a.hidden, "100,100,100,100".to_string())?)?;
    let latent_dim = r.value("latent-dim", a.latent_dim, 2usize)?;
    let det_floor = r.optional("det-floor", a.det_floor)?;
    let standardized = r.value("standardize", a.standardize, true)?;
    let out = path_setting(&mut r, "out", a.out)?;
    let log_path = optional_path(&mut r, "log", a.log)?;
    let latent_path = optional_path(&mut r, "latent", a.latent)?;
    let settings = r.finish();

    let frame = load_inputs(&data, standardized)?;
    let x = &frame.x;
    let (ae, log) = if model == "pca" {
        let ae = pca_as_autoencoder(&pca_fit(x, latent_dim)?)?;
        let s = evaluate_losses(&ae, x, batch)?;
        let log = TrainingLog {
            regularizer: Regularizer::None,
            records: vec![EpochRecord {
                epoch: 0,
                rec_loss: s.rec_loss,
                reg_loss: s.det_loss,
            }],
        };
        (ae, log)
    } else {
        let regularizer: Regularizer = parse_flag("model", Some(model.clone()))?.expect("some");
        let tc = TrainConfig {
            epochs,
            batch_size: batch,
            learning_rate: lr,
            weight_decay,
            alpha,
            seed,
            regularizer,
            det_floor,
        };
        let mut ae = Autoencoder::<f64>::init(x.cols(), &hidden, latent_dim, seed)?;
        let log = fit(&mut ae, x, &tc)?;
        (ae, log)
    };

    save_model(&out, &ae).map_err(|e| io_err(&out, e))?;
    let mut outputs = vec![out.clone()];
    if let Some(p) = &log_path {
        log.write_csv(p).map_err(|e| io_err(p, e))?;
        outputs.push(p.clone());
    }
    if let Some(p) = &latent_path {
        let z = ae.encode(x)?;
        write_latent_csv(p, &z, &frame.labels).map_err(|e| io_err(p, e))?;
        outputs.push(p.clone());
    }
    if let Some(last) = log.last() {
        println!(
            "{model}: {} epochs, final rec_loss {:?}, reg_loss {:?}",
            log.records.len(),
            last.rec_loss,
            last.reg_loss
        );
    }
    manifests("train", args, seed, &settings, &outputs)
}

fn latent_points(ae: &Autoencoder<f64>, x: &Tensor64) -> Result<(Tensor64, Vec<Point<f64>>), CliError> {
    if x.cols() != ae.encoder.input_dim() {
        return Err(CliError::new(
            "shape",
            format!(
                "data has {} columns, model expects {}",
                x.cols(),
                ae.encoder.input_dim()
            ),
        ));
    }
    if ae.latent_dim() != 2 {
        return Err(CliError::new(
            "latent_dim",
            format!(
                "diagnostics need a 2-dimensional latent space, model has {}",
                ae.latent_dim()
            ),
        ));
    }
    let z = ae.encode(x)?;
    let pts = points_of(&z)?;
    Ok((z, pts))
}

pub fn diagnose(a: DiagnoseArgs, cfg: &ConfigFile, args: &[String]) -> Result<(), CliError> {
    let mut r = Resolver::new(cfg);
    let model_path = path_setting(&mut r, "model", a.model)?;
    let data = path_setting(&mut r, "data", a.data)?;
    let what: String = r.required("what", a.what)?;
    let default_steps = match what.as_str() {
        "indicatrices" => 20,
        "condition" => 100,
        "determinant" => 0,
        other => {
            return Err(CliError::new(
                "usage",
                format!("--what must be indicatrices|determinant|condition, got {other:?}"),
            ))
        }
    };
    let steps = if default_steps > 0 {
        r.value("steps", a.steps, default_steps)?
    } else {
        0
    };
    let (samples, target) = if what == "indicatrices" {
        (
            r.value("samples", a.samples, 100usize)?,
            r.value("target-fraction", a.target_fraction, 0.8f64)?,
        )
    } else {
        (0, 0.0)
    };
    let standardized = r.value("standardize", a.standardize, true)?;
    let seed = r.value("seed", a.seed, 0u64)?;
    let out = path_setting(&mut r, "out", a.out)?;
    let settings = r.finish();

    let ae: Autoencoder<f64> =
        load_model(&model_path).map_err(|e| CliError::new(e.kind(), format!("{}: {e}", model_path.display())))?;
    let frame = load_inputs(&data, standardized)?;
    let (z, pts) = latent_points(&ae, &frame.x)?;
    std::fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;
    let style = PlotStyle {
        title: Some(what.clone()),
        ..PlotStyle::default()
    };
    let mut outputs = Vec::new();
    match what.as_str() {
        "indicatrices" => {
            let grid = latent_grid(&z, steps)?;
            let raw = indicatrices(&ae.decoder, &grid.points, samples)?;
            let scaled = scale_indicatrices(&raw, target, grid.spacing)?;
            let txt = out.join("indicatrices.txt");
            write_file(&txt, &indicatrices_to_text(&scaled))?;
            let svg = out.join("indicatrices.svg");
            write_file(&svg, &indicatrix_svg(&pts, &frame.labels, &scaled, &style)?)?;
            let degenerate = scaled.iter().filter(|i| i.degenerate).count();
            println!(
                "{} indicatrices on a {steps}x{steps} grid, {degenerate} degenerate",
                scaled.len()
            );
            outputs.extend([txt, svg]);
        }
        "determinant" => {
            let heat = det_heatmap(&ae.decoder, &z)?;
            let csv = out.join("determinant.csv");
            write_file(&csv, &heatmap_to_csv(&z, &heat))?;
            let svg = out.join("determinant.svg");
            write_file(&svg, &heatmap_svg(&pts, &heat, &style)?)?;
            println!(
                "determinant heatmap: {} points, {} excluded, clip bounds ({:?}, {:?}){}",
                heat.values.len(),
                heat.excluded(),
                heat.clip_bounds.0,
                heat.clip_bounds.1,
                if heat.centered_fallback {
                    ", mean-centered fallback"
                } else {
                    ""
                }
            );
            outputs.extend([csv, svg]);
        }
        _ => {
            let grid = latent_grid(&z, steps)?;
            let conds = condition_numbers(&ae.decoder, &grid.points)?;
            let mut csv = String::from("x,y,condition\n");
            for (p, c) in grid.points.iter().zip(&conds) {
                let _ = writeln!(
                    csv,
                    "{:?},{:?},{}",
                    p[0],
                    p[1],
                    c.map(|c| format!("{c:?}")).unwrap_or_default()
                );
            }
            let csv_path = out.join("condition.csv");
            write_file(&csv_path, &csv)?;
            let defined: Vec<f64> = conds.iter().flatten().copied().collect();
            let logs: Vec<Option<f64>> = conds.iter().map(|c| c.map(f64::log10)).collect();
            let hi = logs.iter().flatten().fold(0.0f64, |m, &v| m.max(v));
            let heat = HeatmapValues {
                values: logs.clone(),
                raw: logs,
                clip_bounds: (0.0, hi),
                centered_fallback: false,
            };
            let svg = out.join("condition.svg");
            let style = PlotStyle {
                title: Some("log10 condition number".into()),
                ..style
            };
            write_file(&svg, &heatmap_svg(&grid.points, &heat, &style)?)?;
            if defined.is_empty() {
                println!("condition numbers: no positive definite metric on the grid");
            } else {
                let k = defined.len() as f64;
                let mean = defined.iter().sum::<f64>() / k;
                let sd = (defined.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / k).sqrt();
                println!(
                    "condition number over {} grid points: {mean:.4} ± {sd:.4} ({} undefined)",
                    defined.len(),
                    conds.len() - defined.len()
                );
            }
            outputs.extend([csv_path, svg]);
        }
    }
    write_manifest(&manifest_path(&out, true), "diagnose", args, seed, &settings, &outputs)
}

pub fn evaluate(a: EvaluateArgs, cfg: &ConfigFile, args: &[String]) -> Result<(), CliError> {
    let mut r = Resolver::new(cfg);
    let data = path_setting(&mut r, "data", a.data)?;
    let embeddings = r.list("embedding", a.embedding)?;
    let defaults = EvalOptions::default();
    let subsample = r.value("subsample", a.subsample, defaults.subsample)?;
    let seed = r.value("seed", a.seed, 0u64)?;
    let k_max = r.value("k-max", a.k_max, 200usize)?;
    let k_step = r.value("k-step", a.k_step, 10usize)?;
    let standardized = r.value("standardize", a.standardize, true)?;
    let out = path_setting(&mut r, "out", a.out)?;
    let settings = r.finish();
    if k_step == 0 || k_max < k_step {
        return Err(CliError::new("usage", "need 0 < --k-step <= --k-max"));
    }
    let opts = EvalOptions {
        subsample,
        seed,
        ks: (k_step..=k_max).step_by(k_step).collect(),
        ..defaults
    };

    let frame = load_inputs(&data, standardized)?;
    let mut reports = Vec::with_capacity(embeddings.len());
    for e in &embeddings {
        let path = Path::new(e);
        let emb = load_csv(path).map_err(|err| CliError::new(err.kind(), format!("{e}: {err}")))?;
        if emb.len() != frame.len() {
            return Err(CliError::new(
                "shape",
                format!("{e} has {} rows, data has {}", emb.len(), frame.len()),
            ));
        }
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| e.clone());
        reports.push(evaluate_all(&label, &frame.x, &emb.x, &opts)?);
    }
    let table = RankTable {
        metrics: METRICS.iter().map(|(n, hb)| (n.to_string(), *hb)).collect(),
        models: reports.iter().map(|r| r.label.clone()).collect(),
        datasets: vec![data.display().to_string()],
        values: vec![reports
            .iter()
            .map(|r| r.values.iter().map(|&v| Some(v)).collect())
            .collect()],
    };
    let ranks = aggregate_ranks(&table)?;
    write_file(&out, &reports_to_csv(&reports))?;
    print!("{}", reports_to_table(&reports, Some(&ranks)));
    manifests("evaluate", args, seed, &settings, &[out])
}

fn finish_suite(report: SuiteReport) -> Result<(), CliError> {
    print!("{}", report.to_text());
    if report.passed() {
        Ok(())
    } else {
        let failed = report.checks.iter().filter(|c| !c.passed).count();
        Err(CliError::new(
            "check_failed",
            format!("{failed} of {} checks failed in {}", report.checks.len(), report.suite),
        ))
    }
}

pub fn gradcheck(a: GradcheckArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    let mut r = Resolver::new(cfg);
    let seed = r.value("seed", a.seed, 0u64)?;
    finish_suite(gradcheck_suite(seed))
}

pub fn verify(a: VerifyArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    let mut r = Resolver::new(cfg);
    let suite: Suite = r.required("suite", parse_flag("suite", a.suite)?)?;
    let seed = r.value("seed", a.seed, 0u64)?;
    finish_suite(run_suite(suite, seed))
}
