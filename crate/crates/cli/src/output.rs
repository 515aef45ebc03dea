//! CSV and JSON writers.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::RunConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `x` with 12 significant digits, fixed notation for moderate exponents,
/// trailing zeros dropped.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.into()
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn escape(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// A CSV table with `#` header comments and optional footer rows.
#[derive(Debug, Clone, Default)]
pub struct CsvTable {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub trailing_comments: Vec<String>,
}

impl CsvTable {
    pub fn new(cfg: &RunConfig, header: &[&str]) -> Self {
        Self {
            comments: vec![format!("purifylab {VERSION}"), cfg.echo()],
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            trailing_comments: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.comments {
            s.push_str(&format!("# {c}\n"));
        }
        let line = |fields: &[String]| fields.iter().map(|f| escape(f)).collect::<Vec<_>>().join(",");
        s.push_str(&line(&self.header));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&line(r));
            s.push('\n');
        }
        for c in &self.trailing_comments {
            s.push_str(&format!("# {c}\n"));
        }
        s
    }
}

/// JSON document with the config echo and version.
#[derive(Debug, Serialize)]
pub struct JsonDoc<'a, T: Serialize> {
    pub version: &'a str,
    pub config: String,
    #[serde(flatten)]
    pub body: T,
}

pub fn render_json<T: Serialize>(cfg: &RunConfig, body: T) -> Result<String> {
    let doc = JsonDoc {
        version: VERSION,
        config: cfg.echo(),
        body,
    };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

/// Write to `path`, or stdout when absent.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

/// Where the SVG goes: next to `--out` with an `.svg` extension, else
/// `purifylab-<command>.svg` in the working directory.
pub fn plot_path(cfg: &RunConfig) -> PathBuf {
    match &cfg.out {
        Some(p) => p.with_extension("svg"),
        None => PathBuf::from(format!("purifylab-{}.svg", cfg.command.name())),
    }
}
