//! CSV tables, JSON metadata sidecar and plot files.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), so the CSV
//! round-trips every value exactly.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::config::{OutputFormat, ScenarioConfig, SweepAxis};
use super::plot::{Plot, Scale, Series, SeriesStyle};
use super::runner::{CrbSource, RunKind, RunResult};
use crate::error::{Error, Result};

pub const RESULT_COLUMNS: [&str; 9] = [
    "nu", "bias_s", "bias_d", "rmse_s", "rmse_d", "crb_s", "crb_d", "fail_rate", "seed",
];

pub const FIM_COLUMNS: [&str; 17] = [
    "x",
    "nu",
    "exact_ss",
    "exact_sd",
    "exact_dd",
    "exact_signal_ss",
    "exact_signal_sd",
    "exact_signal_dd",
    "exact_noise_ss",
    "exact_noise_sd",
    "exact_noise_dd",
    "asymptotic_ss",
    "asymptotic_sd",
    "asymptotic_dd",
    "trace_inverse_exact",
    "trace_inverse_asymptotic",
    "phi_bound",
];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    fmt_f64(v.unwrap_or(f64::NAN))
}

/// Column names of the main table: the fig2 schema, preceded by the sweep
/// variable when it is not `nu`.
pub fn result_header(result: &RunResult) -> Vec<&'static str> {
    let mut header = Vec::new();
    if result.axis != SweepAxis::Nu {
        header.push(result.axis.column());
    }
    header.extend_from_slice(&RESULT_COLUMNS);
    header
}

pub fn result_csv(result: &RunResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Numerical(format!("CSV encoding failed: {e}"));
    w.write_record(result_header(result)).map_err(csv_err)?;
    for row in &result.rows {
        let mut rec = Vec::new();
        if result.axis != SweepAxis::Nu {
            rec.push(fmt_f64(row.x));
        }
        rec.push(row.nu.to_string());
        for v in [
            row.stats.bias_s,
            row.stats.bias_d,
            row.stats.rmse_s,
            row.stats.rmse_d,
            row.crb_s,
            row.crb_d,
            row.fail_rate,
        ] {
            rec.push(fmt_f64(v));
        }
        rec.push(row.seed.to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is ASCII"))
}

pub fn fim_csv(result: &RunResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Numerical(format!("CSV encoding failed: {e}"));
    w.write_record(FIM_COLUMNS).map_err(csv_err)?;
    for f in &result.fim {
        let asym = f.asymptotic.unwrap_or([f64::NAN; 3]);
        let mut rec = vec![fmt_f64(f.x), f.nu.to_string()];
        rec.extend(f.exact.iter().chain(&f.exact_signal).chain(&f.exact_noise).chain(&asym).map(|&v| fmt_f64(v)));
        rec.push(fmt_f64(f.trace_inverse_exact));
        rec.push(opt(f.trace_inverse_asymptotic));
        rec.push(opt(f.phi_bound));
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is ASCII"))
}

fn column_notes(result: &RunResult) -> BTreeMap<&'static str, &'static str> {
    let mut m = BTreeMap::new();
    m.insert("nu", "number of joint homodyne outcomes per trial");
    m.insert("N", "total mean photon number, split N_s = N_c = N/2");
    m.insert("beta", "fraction of coherent photons entering port 1");
    m.insert("bias_s", "mean of wrap(phi_s_hat - phi_s) over successful trials");
    m.insert("bias_d", "mean of wrap(phi_d_hat - phi_d) over successful trials");
    m.insert("rmse_s", "root-mean-square of wrap(phi_s_hat - phi_s)");
    m.insert("rmse_d", "root-mean-square of wrap(phi_d_hat - phi_d)");
    let crb = match result.crb_source {
        CrbSource::Asymptotic => "sqrt of the closed-form bound from the total asymptotic Fisher matrix, no sampling",
        CrbSource::Exact => "sqrt of the diagonal of the inverse exact Fisher matrix over nu, no sampling",
    };
    m.insert("crb_s", crb);
    m.insert("crb_d", crb);
    m.insert("fail_rate", "fraction of trials where the estimator failed; excluded from bias and rmse");
    m.insert("seed", "base RNG seed; trial t of sweep point i uses ChaCha20 stream (i << 32) | t");
    m
}

pub fn metadata_json(result: &RunResult, config: &ScenarioConfig) -> String {
    let v = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "kind": result.kind,
        "config": config,
        "seed": config.run.seed,
        "config_digest": format!("{:016x}", config.digest()),
        "rng": "ChaCha20Rng::seed_from_u64(seed) with set_stream((point << 32) | trial)",
        "estimator": result.method,
        "crb_source": result.crb_source,
        "truth": result.truth,
        "lo": format!("{:?}", config.lo.setting().ok()),
        "columns": column_notes(result),
        "rows": result.rows,
        "fits": result.fits,
        "fim": result.fim,
    });
    serde_json::to_string_pretty(&v).expect("metadata is serializable") + "\n"
}

pub fn result_plot(result: &RunResult) -> Result<Plot> {
    if result.rows.is_empty() {
        return Err(Error::Config("empty sweep: nothing to plot".into()));
    }
    let xs: Vec<f64> = result.rows.iter().map(|r| r.x).collect();
    let pick = |f: &dyn Fn(&super::runner::SweepRow) -> f64| -> Vec<(f64, f64)> {
        xs.iter().zip(&result.rows).map(|(&x, r)| (x, f(r))).collect()
    };
    let mut series = vec![
        Series::new("rmse φs", SeriesStyle::Markers, pick(&|r| r.stats.rmse_s)),
        Series::new("rmse φd", SeriesStyle::Markers, pick(&|r| r.stats.rmse_d)),
    ];
    let same_crb = result
        .rows
        .iter()
        .all(|r| (r.crb_s - r.crb_d).abs() <= 1e-9 * r.crb_s.abs());
    if same_crb {
        series.push(Series::new("CRB", SeriesStyle::Line, pick(&|r| r.crb_s)));
    } else {
        series.push(Series::new("CRB φs", SeriesStyle::Line, pick(&|r| r.crb_s)));
        series.push(Series::new("CRB φd", SeriesStyle::Dashed, pick(&|r| r.crb_d)));
    }
    let x_scale = if result.axis == SweepAxis::Beta { Scale::Linear } else { Scale::Log };
    let x_label = match result.axis {
        SweepAxis::Nu => "ν",
        SweepAxis::Photons => "N",
        SweepAxis::Beta => "β",
    };
    let title = match result.kind {
        RunKind::Fig2 => "Estimation error vs number of measurements",
        RunKind::Fig3 => "Estimation error vs photon number",
        RunKind::Custom => "Estimation error",
    };
    Ok(Plot {
        title: title.to_string(),
        x_label: x_label.to_string(),
        y_label: "Δφ".to_string(),
        x_scale,
        y_scale: Scale::Log,
        series,
    })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes the requested formats into `dir` and returns the written paths.
pub fn write_outputs(result: &RunResult, config: &ScenarioConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    if result.rows.is_empty() {
        return Err(Error::Config("empty sweep: no rows to write".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stem = result.kind.name();
    let mut written = Vec::new();
    for format in &config.outputs.formats {
        match format {
            OutputFormat::Csv => {
                let path = dir.join(format!("{stem}.csv"));
                write(&path, &result_csv(result)?)?;
                written.push(path);
                if !result.fim.is_empty() {
                    let path = dir.join(format!("{stem}_fim.csv"));
                    write(&path, &fim_csv(result)?)?;
                    written.push(path);
                }
            }
            OutputFormat::Json => {
                let path = dir.join(format!("{stem}_metadata.json"));
                write(&path, &metadata_json(result, config))?;
                written.push(path);
            }
            OutputFormat::Svg => {
                let path = dir.join(format!("{stem}.svg"));
                write(&path, &result_plot(result)?.to_svg())?;
                written.push(path);
            }
        }
    }
    Ok(written)
}
