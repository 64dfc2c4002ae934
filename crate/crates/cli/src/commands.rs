use std::fs;
use std::path::{Path, PathBuf};

use ltcal::calibrate::{
    default_alpha_grid, evaluate_model, fit_class_adaptive, fit_esbin, fit_scalar, fuse_dual,
    sweep_alpha, FitReport, Fitted, SweepTable, Variant, DEFAULT_ALPHA, DEFAULT_FIT_BINS,
};
use ltcal::data::{self, imbalance_factor, load_csv, save_csv, save_report};
use ltcal::metrics::{reliability_csv, DEFAULT_METRIC_BINS};
use ltcal::{CalibrationReport, FusionMode, LogitsDataset, SynthConfig, TemperatureModel};
use serde_json::{json, Value};

use crate::config::{require, Method, RunConfig, SelectOn};
use crate::error::{CliError, CliResult};

const DEFAULT_SPLIT_FRACTION: f64 = 0.5;
const DEFAULT_SPLIT_SEED: u64 = 7;

/// Core argument names and the flags that set them.
const FLAG_NAMES: [(&str, &str); 12] = [
    ("num_classes", "--classes"),
    ("imbalance_factor", "--if"),
    ("head_count", "--head"),
    ("class_separation", "--separation"),
    ("overconfidence_boost", "--boost"),
    ("noise_scale", "--noise"),
    ("fraction", "--split-fraction"),
    ("alpha", "--alpha"),
    ("alpha grid", "--alpha-grid"),
    ("bins", "--bins"),
    ("max_iterations", "--max-iter"),
    ("history_size", "--history"),
];

/// Rewrite a core argument error so it names the flag the user typed.
fn with_flag_names(e: ltcal::Error, overrides: &[(&str, &str)]) -> CliError {
    match e {
        ltcal::Error::InvalidArgument { name, reason } => {
            let flag = overrides
                .iter()
                .chain(FLAG_NAMES.iter())
                .find(|(core, _)| *core == name)
                .map_or(name, |(_, flag)| *flag);
            CliError::usage(format!("{flag}: {reason}"))
        }
        other => other.into(),
    }
}

fn flag_err(e: ltcal::Error) -> CliError {
    with_flag_names(e, &[])
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Io {
        context: path.display().to_string(),
        source: e,
    })
}

fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    text.push('\n');
    write_text(path, &text)
}

/// `dir/stem{suffix}` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn check_alpha(alpha: f64, flag: &str) -> CliResult<()> {
    if alpha > 0.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(CliError::usage(format!(
            "{flag}: must lie strictly between 0 and 2, got {alpha}"
        )))
    }
}

fn check_bins(bins: usize, flag: &str) -> CliResult<()> {
    if bins == 0 {
        return Err(CliError::usage(format!("{flag}: must be >= 1")));
    }
    Ok(())
}

fn warn_all(report: &FitReport) {
    for w in &report.warnings {
        eprintln!("warning: {}: {w}", report.method);
    }
}

fn fmt_temps(temps: &[f64]) -> String {
    temps
        .iter()
        .map(|t| format!("{t:.4}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn print_fit(fitted: &Fitted) {
    let r = &fitted.report;
    match fitted.model.variant() {
        Variant::Scalar { temperature } => println!("{}: temperature {temperature:.4}", r.method),
        Variant::ClassWise { temperatures } => {
            println!(
                "{}: class temperatures {}",
                r.method,
                fmt_temps(temperatures)
            )
        }
        Variant::BinWise(bins) => {
            println!(
                "{}: bin temperatures {}",
                r.method,
                fmt_temps(&bins.temperatures)
            );
            println!(
                "{}: bin boundaries {}",
                r.method,
                fmt_temps(&bins.boundaries)
            );
        }
        Variant::Dual { .. } => {}
    }
    println!(
        "{}: fit NLL {:.6} at T = 1, {:.6} at start, {:.6} fitted",
        r.method, r.nll_identity, r.nll_initial, r.nll_fitted
    );
    warn_all(r);
}

// ---------------------------------------------------------------------------

pub fn synth(cfg: &RunConfig) -> CliResult<()> {
    let output = require(&cfg.output, "--output")?;
    let eval_output = match cfg.split_fraction {
        Some(_) => Some(require(
            &cfg.eval_output,
            "--eval-output (with --split-fraction)",
        )?),
        None => None,
    };
    let d = SynthConfig::default();
    let synth = SynthConfig {
        num_classes: cfg.classes.unwrap_or(d.num_classes),
        imbalance_factor: cfg.imbalance_factor.unwrap_or(d.imbalance_factor),
        head_count: cfg.head.unwrap_or(d.head_count),
        class_separation: cfg.separation.unwrap_or(d.class_separation),
        overconfidence_boost: cfg.boost.unwrap_or(d.overconfidence_boost),
        noise_scale: cfg.noise.unwrap_or(d.noise_scale),
        seed: cfg.seed.unwrap_or(d.seed),
    };
    synth.validate().map_err(flag_err)?;
    let ds = data::gen_synthetic(&synth)?;

    let counts = ds.class_counts();
    println!(
        "class counts: {}",
        counts
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    );
    println!("imbalance factor: {}", imbalance_factor(&ds)?);

    match (cfg.split_fraction, eval_output) {
        (Some(fraction), Some(eval_output)) => {
            let (fit, eval) = data::split(&ds, fraction, synth.seed).map_err(flag_err)?;
            save_csv(&fit, &output)?;
            save_csv(&eval, &eval_output)?;
            println!("wrote {} ({} records)", output.display(), fit.len());
            println!("wrote {} ({} records)", eval_output.display(), eval.len());
        }
        _ => {
            save_csv(&ds, &output)?;
            println!("wrote {} ({} records)", output.display(), ds.len());
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------

pub fn fit(cfg: &RunConfig) -> CliResult<()> {
    let method = require(&cfg.method, "--method")?;
    let data_path = require(&cfg.data, "--data")?;
    let output = require(&cfg.output, "--output")?;
    let bins = cfg.bins.unwrap_or(DEFAULT_FIT_BINS);
    check_bins(bins, "--bins")?;
    let alpha = cfg.alpha.unwrap_or(DEFAULT_ALPHA);
    check_alpha(alpha, "--alpha")?;
    let opts = cfg.fit_options()?;

    let ds = load_csv(&data_path)?;
    println!(
        "fitting {} on {} (N = {}, C = {})",
        method.name(),
        ds.name(),
        ds.len(),
        ds.num_classes()
    );
    let model = match method {
        Method::Ts => {
            let f = fit_scalar(&ds, &opts)?;
            print_fit(&f);
            f.model
        }
        Method::CaTs => {
            let f = fit_class_adaptive(&ds, &opts)?;
            print_fit(&f);
            f.model
        }
        Method::EsbinTs => {
            let f = fit_esbin(&ds, bins, &opts).map_err(flag_err)?;
            print_fit(&f);
            f.model
        }
        Method::DualTs => {
            let ca = fit_class_adaptive(&ds, &opts)?;
            let es = fit_esbin(&ds, bins, &opts).map_err(flag_err)?;
            print_fit(&ca);
            print_fit(&es);
            let fusion = cfg.fusion.unwrap_or_default();
            println!(
                "dual-ts: alpha {alpha}, fusion {}",
                json!(fusion).as_str().unwrap_or_default()
            );
            fuse_dual(&ca.model, &es.model, alpha, fusion)?
        }
    };
    let model = match cfg.assignment {
        Some(mode) => model.with_assignment(mode),
        None => model,
    };
    model.save(&output)?;
    println!("wrote {}", output.display());
    Ok(())
}

// ---------------------------------------------------------------------------

fn evaluate(
    model: &TemperatureModel,
    ds: &LogitsDataset,
    b_metric: usize,
    config: Value,
) -> CliResult<CalibrationReport> {
    evaluate_model(model, ds, b_metric, config)
        .map_err(|e| with_flag_names(e, &[("bins", "--metric-bins")]))
}

pub fn eval(cfg: &RunConfig) -> CliResult<()> {
    let model_path = require(&cfg.model, "--model")?;
    let data_path = require(&cfg.data, "--data")?;
    let output = require(&cfg.output, "--output")?;
    let b_metric = cfg.metric_bins.unwrap_or(DEFAULT_METRIC_BINS);
    check_bins(b_metric, "--metric-bins")?;

    let mut model = TemperatureModel::load(&model_path)?;
    if let Some(mode) = cfg.assignment {
        model = model.with_assignment(mode);
    }
    let ds = load_csv(&data_path)?;
    let mut config = cfg.to_json();
    config["command"] = json!("eval");
    let report = evaluate(&model, &ds, b_metric, config)?;

    save_report(&report, &output)?;
    let width = sibling(&output, "-equal-width.csv");
    let count = sibling(&output, "-equal-count.csv");
    write_text(&width, &reliability_csv(&report.reliability.equal_width))?;
    write_text(&count, &reliability_csv(&report.reliability.equal_count))?;
    println!(
        "ACC / ECE / Esbin-ECE / NLL: {}",
        report.metrics.summary_line()
    );
    println!(
        "wrote {}, {}, {}",
        output.display(),
        width.display(),
        count.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------

fn alpha_grid(cfg: &RunConfig) -> CliResult<Vec<f64>> {
    let grid = cfg.alpha_grid.clone().unwrap_or_else(default_alpha_grid);
    if grid.is_empty() {
        return Err(CliError::usage("--alpha-grid: must not be empty"));
    }
    for &a in &grid {
        check_alpha(a, "--alpha-grid")?;
    }
    Ok(grid)
}

fn print_sweep(table: &SweepTable) {
    println!("alpha   ACC / ECE / Esbin-ECE / NLL");
    for r in &table.rows {
        println!(
            "{:<6}  {:.2} / {:.2} / {:.2} / {:.3}",
            r.alpha,
            r.acc * 100.0,
            r.ece,
            r.esbin_ece,
            r.nll
        );
    }
    println!(
        "best alpha {} (ECE {:.2})",
        table.best_alpha, table.best_ece
    );
}

pub fn sweep(cfg: &RunConfig) -> CliResult<()> {
    let eval_path = require(&cfg.eval_data, "--eval-data")?;
    let output = require(&cfg.output, "--output")?;
    let grid = alpha_grid(cfg)?;
    let b_metric = cfg.metric_bins.unwrap_or(DEFAULT_METRIC_BINS);
    check_bins(b_metric, "--metric-bins")?;
    let bins = cfg.bins.unwrap_or(DEFAULT_FIT_BINS);
    check_bins(bins, "--bins")?;
    let fusion = cfg.fusion.unwrap_or_default();
    let opts = cfg.fit_options()?;
    let source = match (&cfg.model, &cfg.fit_data) {
        (Some(m), None) => Ok(m.clone()),
        (None, Some(d)) => Err(d.clone()),
        _ => {
            return Err(CliError::usage(
                "give exactly one of --model and --fit-data",
            ))
        }
    };

    let (ca, es) = match source {
        Ok(model_path) => {
            let model = TemperatureModel::load(&model_path)?;
            model.branches().ok_or_else(|| {
                CliError::usage(format!(
                    "--model: {} holds a {} model; sweeping needs a Dual model",
                    model_path.display(),
                    model.kind()
                ))
            })?
        }
        Err(fit_path) => {
            let fit_ds = load_csv(&fit_path)?;
            let ca = fit_class_adaptive(&fit_ds, &opts)?;
            let es = fit_esbin(&fit_ds, bins, &opts).map_err(flag_err)?;
            warn_all(&ca.report);
            warn_all(&es.report);
            (ca.model, es.model)
        }
    };
    let es = match cfg.assignment {
        Some(mode) => es.with_assignment(mode),
        None => es,
    };
    let eval_ds = load_csv(&eval_path)?;
    let table = sweep_alpha(&ca, &es, &eval_ds, &grid, fusion, b_metric)
        .map_err(|e| with_flag_names(e, &[("bins", "--metric-bins")]))?;

    write_text(&output, &table.to_csv())?;
    let sidecar = output.with_extension("json");
    let mut config = cfg.to_json();
    config["command"] = json!("sweep");
    write_json(
        &sidecar,
        &json!({
            "config": config,
            "eval_data": eval_ds.name(),
            "fusion": fusion,
            "b_metric": b_metric,
            "best_alpha": table.best_alpha,
            "best_ece": table.best_ece,
            "rows": table.rows,
        }),
    )?;
    print_sweep(&table);
    println!("wrote {}, {}", output.display(), sidecar.display());
    Ok(())
}

// ---------------------------------------------------------------------------

fn report_splits(cfg: &RunConfig) -> CliResult<(LogitsDataset, LogitsDataset)> {
    match (&cfg.fit_data, &cfg.eval_data, &cfg.data) {
        (Some(f), Some(e), None) => Ok((load_csv(f)?, load_csv(e)?)),
        (None, None, Some(d)) => {
            let fraction = cfg.split_fraction.unwrap_or(DEFAULT_SPLIT_FRACTION);
            let seed = cfg.seed.unwrap_or(DEFAULT_SPLIT_SEED);
            let ds = load_csv(d)?;
            Ok(data::split(&ds, fraction, seed).map_err(flag_err)?)
        }
        _ => Err(CliError::usage(
            "give either --fit-data and --eval-data, or --data to be split",
        )),
    }
}

pub fn report(cfg: &RunConfig) -> CliResult<()> {
    let b_metric = cfg.metric_bins.unwrap_or(DEFAULT_METRIC_BINS);
    check_bins(b_metric, "--metric-bins")?;
    let bins = cfg.bins.unwrap_or(DEFAULT_FIT_BINS);
    check_bins(bins, "--bins")?;
    let fusion: FusionMode = cfg.fusion.unwrap_or_default();
    let opts = cfg.fit_options()?;
    let grid = alpha_grid(cfg)?;
    if let Some(a) = cfg.alpha {
        check_alpha(a, "--alpha")?;
    } else if cfg.select_on.is_none() {
        return Err(CliError::usage(
            "give --alpha, or --select-on fit|eval to choose alpha by sweeping",
        ));
    }
    if cfg.data.is_some() {
        if let Some(f) = cfg.split_fraction {
            if !(f > 0.0 && f < 1.0) {
                return Err(CliError::usage(format!(
                    "--split-fraction: must lie in (0, 1), got {f}"
                )));
            }
        }
    }
    let (fit_ds, eval_ds) = report_splits(cfg)?;

    let ts = fit_scalar(&fit_ds, &opts)?;
    let ca = fit_class_adaptive(&fit_ds, &opts)?;
    let es = fit_esbin(&fit_ds, bins, &opts).map_err(flag_err)?;
    for f in [&ts, &ca, &es] {
        warn_all(&f.report);
    }
    let es_model = match cfg.assignment {
        Some(mode) => es.model.clone().with_assignment(mode),
        None => es.model.clone(),
    };
    let (alpha, selected_on) = match (cfg.alpha, cfg.select_on) {
        (Some(a), _) => (a, None),
        (None, Some(split)) => {
            let on = match split {
                SelectOn::Fit => &fit_ds,
                SelectOn::Eval => &eval_ds,
            };
            let table = sweep_alpha(&ca.model, &es_model, on, &grid, fusion, b_metric)
                .map_err(|e| with_flag_names(e, &[("bins", "--metric-bins")]))?;
            (table.best_alpha, Some(split))
        }
        (None, None) => unreachable!("checked above"),
    };
    let dual = fuse_dual(&ca.model, &es_model, alpha, fusion)?;

    let mut config = cfg.to_json();
    config["command"] = json!("report");
    let rows: Vec<(&str, TemperatureModel)> = vec![
        (
            "uncalibrated",
            TemperatureModel::scalar(fit_ds.num_classes(), 1.0)?,
        ),
        (Method::Ts.name(), ts.model),
        (Method::CaTs.name(), ca.model),
        (Method::EsbinTs.name(), es_model),
        (Method::DualTs.name(), dual),
    ];
    let mut reports = serde_json::Map::new();
    println!(
        "fit: {} (N = {}), eval: {} (N = {})",
        fit_ds.name(),
        fit_ds.len(),
        eval_ds.name(),
        eval_ds.len()
    );
    println!("{:<14}ACC / ECE / Esbin-ECE / NLL", "method");
    for (name, model) in &rows {
        let mut c = config.clone();
        c["method"] = json!(name);
        let report = evaluate(model, &eval_ds, b_metric, c)?;
        println!("{name:<14}{}", report.metrics.summary_line());
        reports.insert(
            name.to_string(),
            serde_json::to_value(&report).expect("reports serialize"),
        );
    }
    match selected_on {
        Some(split) => println!(
            "dual-ts alpha {alpha} selected on the {} split",
            json!(split).as_str().unwrap_or_default()
        ),
        None => println!("dual-ts alpha {alpha} (fixed)"),
    }

    if let Some(output) = &cfg.output {
        write_json(
            output,
            &json!({
                "config": config,
                "alpha": alpha,
                "alpha_selected_on": selected_on,
                "b_metric": b_metric,
                "reports": reports,
            }),
        )?;
        println!("wrote {}", output.display());
    }
    Ok(())
}
