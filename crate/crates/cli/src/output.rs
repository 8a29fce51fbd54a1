//! CSV files and the JSON sidecar that makes a run reproducible.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use dephasing::scaling::ScalingThresholds;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::run::{Output, RunError, RunResult, Table};

pub const SIGNIFICANT_DIGITS: usize = 17;

pub fn write_table<W: Write>(table: &Table, sink: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|c| c.render()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn render_table(table: &Table) -> String {
    let mut buf = Vec::new();
    write_table(table, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is UTF-8")
}

/// `out.csv` for a single table, `out_<suffix>.csv` for figure curves.
pub fn output_path(base: &Path, output: &Output) -> PathBuf {
    match &output.suffix {
        None => base.to_path_buf(),
        Some(suffix) => {
            let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let ext = base.extension().map(|e| e.to_string_lossy().into_owned());
            let name = match ext {
                Some(ext) => format!("{stem}_{suffix}.{ext}"),
                None => format!("{stem}_{suffix}"),
            };
            base.with_file_name(name)
        }
    }
}

pub fn sidecar_path(base: &Path) -> PathBuf {
    base.with_extension("json")
}

pub fn sidecar(cfg: &RunConfig, result: &RunResult, files: &[PathBuf]) -> Value {
    let t = ScalingThresholds::default();
    json!({
        "version": dephasing::VERSION,
        "command": cfg.command.name(),
        "config": cfg.entries(),
        "tolerances": {
            "quadrature_relative": cfg.tolerance,
            "quadrature_max_evaluations": cfg.max_evaluations,
            "csv_significant_digits": SIGNIFICANT_DIGITS,
            "scaling_window": t.window,
            "scaling_linear": t.linear,
            "scaling_crossover": t.crossover,
            "scaling_quadratic": t.quadratic,
        },
        "outputs": files
            .iter()
            .map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default())
            .collect::<Vec<_>>(),
        "summary": result.summary,
    })
}

fn io_error(path: &Path, source: std::io::Error) -> RunError {
    RunError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Write every table plus the sidecar; returns the files written.
pub fn emit(cfg: &RunConfig, result: &RunResult, base: &Path) -> Result<Vec<PathBuf>, RunError> {
    if result.outputs.iter().any(|o| o.table.rows.is_empty()) {
        return Err(RunError::Usage("nothing to write: empty series".into()));
    }
    let side = sidecar_path(base);
    let mut files = Vec::new();
    for output in &result.outputs {
        let path = output_path(base, output);
        if path == side {
            return Err(RunError::Usage(format!(
                "output {} would overwrite its sidecar",
                path.display()
            )));
        }
        let file = fs::File::create(&path).map_err(|e| io_error(&path, e))?;
        write_table(&output.table, file).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => io_error(&path, io),
            other => io_error(&path, std::io::Error::other(format!("{other:?}"))),
        })?;
        files.push(path);
    }
    let mut text = serde_json::to_string_pretty(&sidecar(cfg, result, &files)).expect("sidecar serializes");
    text.push('\n');
    fs::write(&side, text).map_err(|e| io_error(&side, e))?;
    files.push(side);
    Ok(files)
}

/// Configuration text from either a flat config file or a sidecar.
pub fn config_text(contents: &str) -> Result<String, RunError> {
    if !contents.trim_start().starts_with('{') {
        return Ok(contents.to_string());
    }
    let v: Value = serde_json::from_str(contents)
        .map_err(|e| RunError::Usage(format!("sidecar is not valid JSON: {e}")))?;
    let Some(map) = v.get("config").and_then(Value::as_object) else {
        return Err(RunError::Usage("sidecar has no config object".into()));
    };
    let mut text = String::new();
    for (k, v) in map {
        let Some(s) = v.as_str() else {
            return Err(RunError::Usage(format!("sidecar config value for {k} is not a string")));
        };
        text.push_str(&format!("{k}={s}\n"));
    }
    Ok(text)
}
