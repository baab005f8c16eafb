//! Power-sweep CSV: raw integer counts per point.

use std::io::{Read, Write};
use std::path::Path;

use super::fs::write_atomic;
use crate::error::{Error, Result};
use crate::montecarlo::SweepRecord;

pub const SWEEP_HEADER: [&str; 6] = ["power_uW", "duration_s", "gate_ns", "singles_s", "singles_i", "coincidences"];

/// Gate width in seconds whose nanosecond value prints back as `ns`.
fn ns_to_seconds(ns: f64) -> f64 {
    let mut s = ns / 1e9;
    for _ in 0..4 {
        let back = s * 1e9;
        if back == ns {
            break;
        }
        s = if back < ns { s.next_up() } else { s.next_down() };
    }
    s
}

fn record_fields(r: &SweepRecord) -> [String; 6] {
    [
        r.power.to_string(),
        r.duration.to_string(),
        r.gate.map_or_else(|| "0".to_string(), |g| (g * 1e9).to_string()),
        r.singles_s.to_string(),
        r.singles_i.to_string(),
        r.coincidences.to_string(),
    ]
}

pub fn write_sweep_csv<W: Write>(out: W, records: &[SweepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let map = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(SWEEP_HEADER).map_err(map)?;
    for r in records {
        w.write_record(record_fields(r)).map_err(map)?;
    }
    w.flush()?;
    Ok(())
}

pub fn sweep_csv_string(records: &[SweepRecord]) -> String {
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, records).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

pub fn write_sweep_file(path: &Path, records: &[SweepRecord]) -> Result<()> {
    write_atomic(path, sweep_csv_string(records).as_bytes())
}

/// Parses a sweep CSV. The coincidence window is not part of the file and
/// is supplied by the caller. `source` names the input in error messages.
pub fn read_sweep_csv<R: Read>(input: R, source: &str, tau_c: f64) -> Result<Vec<SweepRecord>> {
    let perr = |line: usize, msg: String| Error::Parse {
        path: source.to_string(),
        line,
        msg,
    };
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rd.headers().map_err(|e| perr(1, e.to_string()))?.clone();
    if header.iter().ne(SWEEP_HEADER) {
        return Err(perr(
            1,
            format!("expected header '{}', found '{}'", SWEEP_HEADER.join(","), header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row.map_err(|e| perr(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let float = |k: usize| -> Result<f64> {
            let v: f64 = row[k]
                .trim()
                .parse()
                .map_err(|_| perr(line, format!("{}: '{}' is not a number", SWEEP_HEADER[k], &row[k])))?;
            if !v.is_finite() || v < 0.0 {
                return Err(perr(line, format!("{}: {} must be finite and >= 0", SWEEP_HEADER[k], v)));
            }
            Ok(v)
        };
        let count = |k: usize| -> Result<u64> {
            row[k]
                .trim()
                .parse()
                .map_err(|_| perr(line, format!("{}: '{}' is not a non-negative integer count", SWEEP_HEADER[k], &row[k])))
        };
        let duration = float(1)?;
        if duration == 0.0 {
            return Err(perr(line, "duration_s must be > 0".to_string()));
        }
        let gate_ns = float(2)?;
        out.push(SweepRecord {
            power: float(0)?,
            duration,
            gate: (gate_ns > 0.0).then(|| ns_to_seconds(gate_ns)),
            tau_c,
            singles_s: count(3)?,
            singles_i: count(4)?,
            coincidences: count(5)?,
        });
    }
    Ok(out)
}

pub fn read_sweep_file(path: &Path, tau_c: f64) -> Result<Vec<SweepRecord>> {
    let file = std::fs::File::open(path)?;
    read_sweep_csv(std::io::BufReader::new(file), &path.display().to_string(), tau_c)
}
