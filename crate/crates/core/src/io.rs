//! Plain-text signal and table files.
//!
//! A signal file holds one complex sample per line as `re,im`, optionally
//! preceded by the header line `re,im`. Values are written in scientific
//! notation with 17 significant digits so that reading a file back recovers
//! every sample bit for bit.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparkle::IterationRecord;

pub const SIGNAL_HEADER: [&str; 2] = ["re", "im"];

pub fn write_signal_to<W: Write>(writer: W, samples: &[Complex64]) -> Result<()> {
    let mut out = BufWriter::new(writer);
    writeln!(out, "{}", SIGNAL_HEADER.join(","))?;
    for z in samples {
        writeln!(out, "{:.16e},{:.16e}", z.re, z.im)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_signal(path: &Path, samples: &[Complex64]) -> Result<()> {
    write_signal_to(File::create(path)?, samples)
}

fn parse_field(raw: Option<&str>, line: u64) -> Result<f64> {
    let raw = raw.ok_or_else(|| Error::Malformed(format!("line {line}: expected two fields")))?;
    raw.trim()
        .parse()
        .map_err(|_| Error::Malformed(format!("line {line}: {raw:?} is not a number")))
}

pub fn read_signal_from<R: Read>(reader: R) -> Result<Vec<Complex64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut samples = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(idx as u64 + 1, |p| p.line());
        if idx == 0 && record.iter().eq(SIGNAL_HEADER) {
            continue;
        }
        if record.len() != 2 {
            return Err(Error::Malformed(format!(
                "line {line}: expected two fields, found {}",
                record.len()
            )));
        }
        let re = parse_field(record.get(0), line)?;
        let im = parse_field(record.get(1), line)?;
        samples.push(Complex64::new(re, im));
    }
    if samples.is_empty() {
        return Err(Error::EmptySignal);
    }
    Ok(samples)
}

pub fn read_signal(path: &Path) -> Result<Vec<Complex64>> {
    read_signal_from(File::open(path)?)
}

/// `iteration,rel_error,beta,mu`; `beta` is left empty when the solver has none.
pub fn write_trace(path: &Path, trace: &[IterationRecord]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "iteration,rel_error,beta,mu")?;
    for r in trace {
        let beta = r.beta.map(|b| format!("{b:e}")).unwrap_or_default();
        writeln!(out, "{},{:e},{},{:e}", r.iteration, r.rel_error, beta, r.mu)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Vec<IterationRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut trace = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |k: usize| record.get(k).map(str::trim).unwrap_or("");
        let num = |k: usize| -> Result<f64> {
            field(k)
                .parse()
                .map_err(|_| Error::Malformed(format!("line {line}: bad trace field {:?}", field(k))))
        };
        let iteration = field(0)
            .parse()
            .map_err(|_| Error::Malformed(format!("line {line}: bad iteration {:?}", field(0))))?;
        trace.push(IterationRecord {
            iteration,
            rel_error: num(1)?,
            beta: if field(2).is_empty() { None } else { Some(num(2)?) },
            mu: num(3)?,
        });
    }
    Ok(trace)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}
