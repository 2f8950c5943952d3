//! JSON-lines helpers shared by the dataset and corpus formats.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{DctError, Result};

/// Parses one JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned, R: Read>(reader: R) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|source| DctError::JsonLine { line: idx + 1, source })?;
        out.push(value);
    }
    Ok(out)
}

pub fn read_jsonl_file<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    read_jsonl(File::open(path)?)
}

pub fn write_jsonl<T: Serialize, W: Write>(writer: W, items: &[T]) -> Result<()> {
    let mut w = BufWriter::new(writer);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_jsonl_string<T: Serialize>(items: &[T]) -> Result<String> {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, items)?;
    Ok(String::from_utf8(buf).expect("serde_json emits utf-8"))
}
