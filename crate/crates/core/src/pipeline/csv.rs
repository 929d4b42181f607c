use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::text::format_significant;

use super::sweep::SweepRow;

pub const SWEEP_CSV_HEADER: &str =
    "detuning_gamma,detuning_rad_s,theory_deg,theory_lo_deg,theory_hi_deg,sim_deg,sim_err_deg,flags";

const DIGITS: usize = 10;

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    let f = |x: f64| format_significant(x, DIGITS);
    let opt = |x: Option<f64>| x.map(f).unwrap_or_default();
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            f(r.detuning_gamma),
            f(r.detuning),
            f(r.theory_deg()),
            f(r.theory_lo_deg()),
            f(r.theory_hi_deg()),
            opt(r.sim_deg()),
            opt(r.sim_err_deg()),
            r.flags
        )?;
    }
    out.flush()
}

pub fn sweep_csv_string(rows: &[SweepRow]) -> String {
    let mut buf = Vec::new();
    write_sweep_csv(rows, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV is ASCII")
}

/// Writes the sweep CSV to `path`.
pub fn emit_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_sweep_csv(rows, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

/// A sweep CSV row as read back, in file units (Γ, rad/s, degrees).
#[derive(Clone, Debug, PartialEq)]
pub struct SweepCsvRecord {
    pub detuning_gamma: f64,
    pub detuning_rad_s: f64,
    pub theory_deg: f64,
    pub theory_lo_deg: f64,
    pub theory_hi_deg: f64,
    pub sim_deg: Option<f64>,
    pub sim_err_deg: Option<f64>,
    pub flags: String,
}

pub fn read_sweep_csv(text: &str) -> Result<Vec<SweepCsvRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == SWEEP_CSV_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                key: "header".into(),
                message: format!("expected `{SWEEP_CSV_HEADER}`"),
            })
        }
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let err = |key: &str, message: String| Error::Parse {
            line: i + 1,
            key: key.into(),
            message,
        };
        if fields.len() != 8 {
            return Err(err("row", format!("expected 8 fields, found {}", fields.len())));
        }
        let names: Vec<&str> = SWEEP_CSV_HEADER.split(',').collect();
        let num = |k: usize| -> Result<f64> {
            fields[k].parse().map_err(|e: std::num::ParseFloatError| err(names[k], e.to_string()))
        };
        let opt = |k: usize| -> Result<Option<f64>> {
            if fields[k].is_empty() {
                Ok(None)
            } else {
                num(k).map(Some)
            }
        };
        records.push(SweepCsvRecord {
            detuning_gamma: num(0)?,
            detuning_rad_s: num(1)?,
            theory_deg: num(2)?,
            theory_lo_deg: num(3)?,
            theory_hi_deg: num(4)?,
            sim_deg: opt(5)?,
            sim_err_deg: opt(6)?,
            flags: fields[7].to_owned(),
        });
    }
    Ok(records)
}
