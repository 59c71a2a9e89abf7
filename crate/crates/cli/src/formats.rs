//! Text file formats.
//!
//! Transmission matrix: first line `rows cols`, then `rows` lines of `cols`
//! whitespace-separated `re im` pairs. Squeezing: whitespace-separated
//! values, one per input mode. Click patterns: one string of `0`/`1` per
//! line, character `j` for output mode `j`.
//!
//! CSV outputs start with `#` comment lines carrying the resolved config,
//! then a header row. Floats are written with 17 significant digits.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use phasegbs_core::clicks::{GroupPartition, GroupedDistribution, PatternBinner};
use phasegbs_core::TransmissionMatrix;

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .with_context(|| format!("line {line}: {tok:?} is not a number"))
}

pub fn parse_matrix(text: &str) -> Result<TransmissionMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (n, header) = lines.next().context("empty matrix file")?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        bail!("line {n}: expected `rows cols`");
    }
    let rows: usize = dims[0].parse().with_context(|| format!("line {n}: bad row count"))?;
    let cols: usize = dims[1].parse().with_context(|| format!("line {n}: bad column count"))?;
    let mut entries = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let (n, line) = lines
            .next()
            .with_context(|| format!("matrix has {r} rows, expected {rows}"))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 * cols {
            bail!("line {n}: expected {} numbers, found {}", 2 * cols, toks.len());
        }
        for pair in toks.chunks(2) {
            entries.push(Complex64::new(parse_f64(pair[0], n)?, parse_f64(pair[1], n)?));
        }
    }
    if let Some((n, _)) = lines.next() {
        bail!("line {n}: trailing data after {rows} rows");
    }
    Ok(TransmissionMatrix::from_row_major(rows, cols, &entries)?)
}

pub fn read_matrix(path: &Path) -> Result<TransmissionMatrix> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_matrix(&text).with_context(|| format!("in {}", path.display()))
}

pub fn format_matrix(t: &TransmissionMatrix) -> String {
    let mut out = format!("{} {}\n", t.rows(), t.cols());
    for r in 0..t.rows() {
        let row: Vec<String> = (0..t.cols())
            .map(|c| {
                let z = t.get(r, c);
                format!("{} {}", float(z.re), float(z.im))
            })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: &Path, t: &TransmissionMatrix) -> Result<()> {
    std::fs::write(path, format_matrix(t)).with_context(|| format!("writing {}", path.display()))
}

pub fn read_squeezing(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        for tok in line.split_whitespace() {
            values.push(parse_f64(tok, i + 1).with_context(|| format!("in {}", path.display()))?);
        }
    }
    Ok(values)
}

/// Streams a pattern file into grouped relative frequencies.
pub fn read_patterns(path: &Path, partition: &GroupPartition) -> Result<GroupedDistribution> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut binner = PatternBinner::new(partition);
    for line in BufReader::new(file).lines() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        binner
            .push_line(&line)
            .with_context(|| format!("in {}", path.display()))?;
    }
    binner.finish().with_context(|| format!("in {}", path.display()))
}

/// Click masks (bit `j` = output mode `j`) as `0`/`1` lines.
pub fn write_patterns(path: &Path, masks: &[usize], modes: usize) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    let mut line = vec![b'0'; modes + 1];
    line[modes] = b'\n';
    for &mask in masks {
        for (j, ch) in line[..modes].iter_mut().enumerate() {
            *ch = if mask >> j & 1 == 1 { b'1' } else { b'0' };
        }
        w.write_all(&line)?;
    }
    w.flush()?;
    Ok(())
}

/// CSV writer with `# ` comment lines already emitted.
pub fn csv_writer(path: &Path, comments: &[String]) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    Ok(csv::Writer::from_writer(w))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Writes a grouped distribution as rows `m_1..m_d, probability,
/// std_error, imag, imag_error`.
pub fn write_distribution(path: &Path, dist: &GroupedDistribution, comments: &[String]) -> Result<()> {
    let mut w = csv_writer(path, comments)?;
    let d = dist.shape().len();
    let mut header: Vec<String> = (1..=d).map(|j| format!("m_{j}")).collect();
    header.extend(["probability", "std_error", "imag", "imag_error"].map(String::from));
    w.write_record(&header)?;
    for i in 0..dist.len() {
        let mut row: Vec<String> = dist.multi_index(i).iter().map(|m| m.to_string()).collect();
        row.push(float(dist.probabilities()[i]));
        row.push(float(dist.std_errors()[i]));
        row.push(float(dist.imaginary()[i]));
        row.push(float(dist.imaginary_errors()[i]));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
