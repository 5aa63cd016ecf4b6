//! Result files, CSV formatting, and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use num::{BigInt, BigRational, ToPrimitive};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use hypercurrent_core::io::canonical_json;

pub const MANIFEST: &str = "manifest.json";

/// 17 significant digits, locale independent.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_row(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(fmt_f64).collect::<Vec<_>>().join(",")
}

pub fn big_json(x: &BigInt) -> Value {
    x.to_i64().map_or_else(|| Value::String(x.to_string()), Value::from)
}

pub fn rational_json(x: &BigRational) -> Value {
    if x.is_integer() {
        big_json(x.numer())
    } else {
        Value::String(x.to_string())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    args: &'a [String],
    inputs: &'a [(String, String)],
    protocol_hash: Option<&'a str>,
    seed: u64,
    elapsed_seconds: f64,
    warnings: &'a [String],
    outputs: &'a [String],
    extra: &'a Value,
}

/// Collects outputs of one run; writes to stdout or to an output directory with a manifest.
pub struct Sink {
    out: Option<PathBuf>,
    started: Instant,
    subcommand: String,
    pub inputs: Vec<(String, String)>,
    pub protocol_hash: Option<String>,
    pub seed: u64,
    pub warnings: Vec<String>,
    pub extra: Value,
    outputs: Vec<String>,
}

impl Sink {
    pub fn new(out: Option<PathBuf>, subcommand: &str, seed: u64) -> Result<Self> {
        if let Some(dir) = &out {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        Ok(Self {
            out,
            started: Instant::now(),
            subcommand: subcommand.to_string(),
            inputs: Vec::new(),
            protocol_hash: None,
            seed,
            warnings: Vec::new(),
            extra: Value::Null,
            outputs: Vec::new(),
        })
    }

    pub fn has_dir(&self) -> bool {
        self.out.is_some()
    }

    pub fn add_input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.push((path.display().to_string(), sha256_hex(bytes)));
    }

    fn write(&mut self, name: &str, text: &str) -> Result<()> {
        match &self.out {
            Some(dir) => {
                let path = dir.join(name);
                fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
                self.outputs.push(name.to_string());
            }
            None => print!("{text}"),
        }
        Ok(())
    }

    /// JSON result; files carry a reference to the manifest.
    pub fn json(&mut self, name: &str, mut value: Value) -> Result<()> {
        if self.out.is_some() {
            if let Value::Object(m) = &mut value {
                m.insert("manifest".into(), json!(MANIFEST));
            }
        }
        let text = canonical_json(&value);
        self.write(name, &text)
    }

    /// CSV result; files start with a comment line naming the manifest.
    pub fn csv(&mut self, name: &str, header: &[String], rows: &[String]) -> Result<()> {
        let mut text = String::new();
        if self.out.is_some() {
            text.push_str(&format!("# manifest: {MANIFEST}\n"));
        }
        text.push_str(&header.join(","));
        text.push('\n');
        for r in rows {
            text.push_str(r);
            text.push('\n');
        }
        self.write(name, &text)
    }

    pub fn finish(self) -> Result<()> {
        for w in &self.warnings {
            eprintln!("warning: {w}");
        }
        let Some(dir) = &self.out else {
            return Ok(());
        };
        let args: Vec<String> = std::env::args().skip(1).collect();
        let m = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand: &self.subcommand,
            args: &args,
            inputs: &self.inputs,
            protocol_hash: self.protocol_hash.as_deref(),
            seed: self.seed,
            elapsed_seconds: self.started.elapsed().as_secs_f64(),
            warnings: &self.warnings,
            outputs: &self.outputs,
            extra: &self.extra,
        };
        let path = dir.join(MANIFEST);
        fs::write(&path, canonical_json(&m)).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e0");
        let back: f64 = fmt_f64(std::f64::consts::PI).parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn rationals_render_exactly() {
        let half = BigRational::new(1.into(), 2.into());
        assert_eq!(rational_json(&half), json!("1/2"));
        assert_eq!(rational_json(&BigRational::from_integer((-3).into())), json!(-3));
    }
}
