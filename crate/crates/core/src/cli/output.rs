//! Output files: CSV with a provenance header, JSON summaries and gnuplot scripts.
//!
//! Everything is written to a temporary sibling and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `%.12g`-style formatting, independent of locale.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        trim_fraction(format!("{:.*}", (11 - exp) as usize, x))
    } else {
        format!("{}e{exp}", trim_fraction(mantissa.to_string()))
    }
}

fn trim_fraction(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// What produced a file.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub command: String,
    pub config_hash: String,
}

impl Provenance {
    pub fn new(command: &str, canonical_config: &str) -> Self {
        Provenance {
            command: command.to_string(),
            config_hash: sha256_hex(canonical_config.as_bytes()),
        }
    }

    fn header_lines(&self) -> String {
        format!(
            "# latticeqfi {VERSION}\n# command: {}\n# config-sha256: {}\n",
            self.command, self.config_hash
        )
    }
}

/// A CSV table held as already formatted cells.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, provenance: &Provenance) -> String {
        let mut out = provenance.header_lines();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn num(x: f64) -> String {
    format_number(x)
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(String::new, format_number)
}

/// Writes `contents` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let io = |e: std::io::Error| Error::Numerical(format!("writing {}: {e}", path.display()));
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("output");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io)
}

/// Summary document with the provenance block merged in.
pub fn summary_json(provenance: &Provenance, config: Value, mut body: serde_json::Map<String, Value>) -> String {
    body.insert("tool".into(), Value::from("latticeqfi"));
    body.insert("version".into(), Value::from(VERSION));
    body.insert("command".into(), Value::from(provenance.command.clone()));
    body.insert("config_sha256".into(), Value::from(provenance.config_hash.clone()));
    body.insert("config".into(), config);
    let mut s = serde_json::to_string_pretty(&Value::Object(body)).expect("summary serialises");
    s.push('\n');
    s
}

/// How a CSV should be drawn by the companion gnuplot script.
#[derive(Debug, Clone)]
pub enum PlotKind {
    /// Columns `ys` against column `x`.
    Lines { x: usize, ys: Vec<usize>, logscale: bool },
    /// Colour map of column `z` over columns `x` and `y`.
    Map { x: usize, y: usize, z: usize },
}

pub fn plot_script(csv: &Path, table: &Table, kind: &PlotKind) -> String {
    let file = csv.file_name().and_then(|n| n.to_str()).unwrap_or("data.csv");
    let stem = file.trim_end_matches(".csv");
    let title = |c: usize| table.header[c].replace('_', " ");
    let mut s = format!(
        "# gnuplot script for {file}\nset datafile separator ','\nset datafile commentschars '#'\nset key autotitle columnhead\nset terminal pngcairo size 900,600\nset output '{stem}.png'\n"
    );
    match kind {
        PlotKind::Lines { x, ys, logscale } => {
            s.push_str(&format!("set xlabel '{}'\n", title(*x)));
            if *logscale {
                s.push_str("set logscale xy\n");
            }
            let parts: Vec<String> = ys
                .iter()
                .map(|y| format!("'{file}' using {}:{} with linespoints", x + 1, y + 1))
                .collect();
            s.push_str(&format!("plot {}\n", parts.join(", \\\n     ")));
        }
        PlotKind::Map { x, y, z } => {
            s.push_str(&format!(
                "set xlabel '{}'\nset ylabel '{}'\nset cblabel '{}'\nset view map\nsplot '{file}' using {}:{}:{} with points pointtype 5 pointsize 0.5 palette notitle\n",
                title(*x),
                title(*y),
                title(*z),
                x + 1,
                y + 1,
                z + 1
            ));
        }
    }
    s
}

/// Writes the CSV and, if asked, its plot script; returns the paths written.
pub fn emit_table(
    dir: &Path,
    name: &str,
    table: &Table,
    provenance: &Provenance,
    plot: Option<&PlotKind>,
) -> Result<Vec<PathBuf>> {
    let path = dir.join(name);
    write_atomic(&path, &table.render(provenance))?;
    let mut written = vec![path.clone()];
    if let Some(kind) = plot {
        let script = path.with_extension("gp");
        write_atomic(&script, &plot_script(&path, table, kind))?;
        written.push(script);
    }
    Ok(written)
}
