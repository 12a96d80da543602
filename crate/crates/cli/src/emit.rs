//! Serialization of run results. Fractions always appear as separate
//! numerator and denominator strings in lowest terms, so two runs agree
//! byte for byte exactly when their exact values agree.

use crate::CliError;
use keisler_core::weight::Weight;
use keisler_core::Rat;
use serde_json::{json, Value};
use std::fs;
use std::path::{Path, PathBuf};

pub fn frac(w: &Rat) -> Value {
    let (num, den) = w.fraction_parts();
    json!({ "num": num, "den": den })
}

pub fn frac_csv(w: &Rat) -> String {
    let (num, den) = w.fraction_parts();
    format!("{num},{den}")
}

pub fn write_json(dir: &Path, name: &str, value: &Value) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, text)?;
    Ok(path)
}
