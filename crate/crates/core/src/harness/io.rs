//! CSV emission and loading for traces and summaries.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{RegretTrace, Summary, TraceRecord};
use crate::error::{Error, Result};

pub const TRACE_HEADER: [&str; 10] = [
    "run_id",
    "t",
    "layer_indices",
    "alpha",
    "lambda",
    "arm",
    "raw_reward",
    "reward",
    "instant_regret",
    "cum_regret",
];

pub const SUMMARY_HEADER: [&str; 3] = ["t", "mean_cum_regret", "std_cum_regret"];

/// `%g` with six significant digits.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!(
            "{}e{}{:02}",
            trim_zeros(mantissa.to_string()),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_g).unwrap_or_default()
}

fn trace_rows<W: Write>(w: &mut csv::Writer<W>, trace: &RegretTrace) -> Result<()> {
    let run_id = trace.run_id.to_string();
    for r in &trace.records {
        let idx: Vec<String> = r.layer_indices.iter().map(usize::to_string).collect();
        w.write_record([
            run_id.clone(),
            r.t.to_string(),
            idx.join(";"),
            opt(r.alpha),
            opt(r.lambda),
            r.arm.to_string(),
            fmt_g(r.raw_reward),
            fmt_g(r.reward),
            fmt_g(r.instant_regret),
            fmt_g(r.cum_regret),
        ])?;
    }
    Ok(())
}

pub fn write_trace(trace: &RegretTrace, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TRACE_HEADER)?;
    trace_rows(&mut w, trace)?;
    w.flush()?;
    Ok(())
}

/// File name used for repeat `run_id` inside a trace directory.
pub fn trace_file_name(run_id: u64) -> String {
    format!("trace_{run_id:04}.csv")
}

/// Writes one `trace_NNNN.csv` per trace into `dir` (created if missing).
pub fn write_traces(traces: &[RegretTrace], dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    traces
        .iter()
        .map(|t| {
            let p = dir.join(trace_file_name(t.run_id));
            write_trace(t, &p)?;
            Ok(p)
        })
        .collect()
}

pub fn write_summary(summary: &Summary, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for (i, (m, s)) in summary.mean.iter().zip(&summary.std).enumerate() {
        w.write_record([(i + 1).to_string(), fmt_g(*m), fmt_g(*s)])?;
    }
    w.flush()?;
    Ok(())
}

/// Selection frequencies as `layer,candidate,count,frequency`.
pub fn write_selections(summary: &Summary, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["layer", "candidate", "count", "frequency"])?;
    let freqs = summary.selection_frequencies();
    for (l, (counts, fr)) in summary.selections.iter().zip(&freqs).enumerate() {
        for (i, (c, f)) in counts.iter().zip(fr).enumerate() {
            w.write_record([l.to_string(), i.to_string(), c.to_string(), fmt_g(*f)])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn parse<T: std::str::FromStr>(s: &str, col: &str, line: u64) -> Result<T> {
    s.parse()
        .map_err(|_| Error::InvalidData(format!("line {line}: bad {col} `{s}`")))
}

fn parse_opt(s: &str, col: &str, line: u64) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse(s, col, line).map(Some)
    }
}

/// Reads one trace CSV. Rows may belong to several runs; they are grouped by
/// `run_id` in order of first appearance.
pub fn read_trace_file(path: impl AsRef<Path>) -> Result<Vec<RegretTrace>> {
    let mut rdr = csv::Reader::from_path(path.as_ref())?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != TRACE_HEADER {
        return Err(Error::InvalidData(format!(
            "{}: not a trace file (header {:?})",
            path.as_ref().display(),
            header
        )));
    }
    let mut out: Vec<RegretTrace> = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i as u64 + 2;
        let run_id: u64 = parse(&row[0], "run_id", line)?;
        let layer_indices = if row[2].is_empty() {
            Vec::new()
        } else {
            row[2]
                .split(';')
                .map(|s| parse(s, "layer_indices", line))
                .collect::<Result<_>>()?
        };
        let rec = TraceRecord {
            t: parse(&row[1], "t", line)?,
            layer_indices,
            alpha: parse_opt(&row[3], "alpha", line)?,
            lambda: parse_opt(&row[4], "lambda", line)?,
            arm: parse(&row[5], "arm", line)?,
            raw_reward: parse(&row[6], "raw_reward", line)?,
            reward: parse(&row[7], "reward", line)?,
            instant_regret: parse(&row[8], "instant_regret", line)?,
            cum_regret: parse(&row[9], "cum_regret", line)?,
        };
        match out.iter_mut().find(|t| t.run_id == run_id) {
            Some(t) => t.records.push(rec),
            None => out.push(RegretTrace {
                run_id,
                layer_sizes: Vec::new(),
                records: vec![rec],
            }),
        }
    }
    Ok(out)
}

/// Reads every `*.csv` trace file in `dir`, sorted by run id. Files with a
/// different header (summaries, selections) are skipped.
pub fn read_traces(dir: impl AsRef<Path>) -> Result<Vec<RegretTrace>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir.as_ref())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    let mut traces = Vec::new();
    for p in paths {
        match read_trace_file(&p) {
            Ok(ts) => traces.extend(ts),
            Err(Error::InvalidData(msg)) if msg.contains("not a trace file") => continue,
            Err(e) => return Err(e),
        }
    }
    if traces.is_empty() {
        return Err(Error::InvalidData(format!(
            "no trace files in {}",
            dir.as_ref().display()
        )));
    }
    traces.sort_by_key(|t| t.run_id);
    Ok(traces)
}
