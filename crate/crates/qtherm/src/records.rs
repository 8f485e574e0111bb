//! Shot record CSV files.
//!
//! One row per shot, in dataset order: run I, run II, then qutrit records.
//! Fields that do not apply to a preparation are empty. Floats carry 17
//! significant digits so a file reloads to the same bits.

use std::io::{Read, Write};
use std::path::Path;

use qtherm_core::sim::{Dataset, Prep, ShotRecord};
use qtherm_core::Complex64;

use crate::error::{Error, Result};

pub const HEADER: [&str; 9] = [
    "shot_index",
    "prep",
    "rabi_angle_rad",
    "with_ge_pi",
    "tau_s",
    "v1_re",
    "v1_im",
    "v2_re",
    "v2_im",
];

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn row(r: &ShotRecord) -> [String; 9] {
    let (angle, with_pi) = match r.prep {
        Prep::PiEfRabi { angle, with_ge_pi } => (float(angle), with_ge_pi.to_string()),
        _ => (String::new(), String::new()),
    };
    let (v2_re, v2_im) = r.v2.map_or((String::new(), String::new()), |v| {
        (float(v.re), float(v.im))
    });
    [
        r.shot_index.to_string(),
        r.prep.tag().to_string(),
        angle,
        with_pi,
        float(r.tau),
        float(r.v1.re),
        float(r.v1.im),
        v2_re,
        v2_im,
    ]
}

pub fn write_records<W: Write>(out: W, dataset: &Dataset) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(HEADER)?;
    for r in dataset.iter() {
        writer.write_record(row(r))?;
    }
    writer.flush()?;
    Ok(())
}

pub fn save_records(path: &Path, dataset: &Dataset) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_records(std::io::BufWriter::new(file), dataset).map_err(|e| csv_error(path, 0, e))
}

fn csv_error(path: &Path, row: u64, e: csv::Error) -> Error {
    if e.is_io_error() {
        if let csv::ErrorKind::Io(io) = e.into_kind() {
            return Error::io(path, io);
        }
        unreachable!()
    }
    Error::Records {
        path: path.to_path_buf(),
        row,
        message: e.to_string(),
    }
}

/// Reads records, validating the schema. Reported rows are file line
/// numbers, with the header on line 1.
pub fn read_records<R: Read>(input: R, path: &Path) -> Result<Vec<ShotRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = reader.headers().map_err(|e| csv_error(path, 1, e))?;
    if header.iter().ne(HEADER) {
        return Err(Error::Records {
            path: path.to_path_buf(),
            row: 1,
            message: format!("expected header `{}`", HEADER.join(",")),
        });
    }
    let mut records = Vec::new();
    for (i, result) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let fields = result.map_err(|e| csv_error(path, line, e))?;
        let fail = |message: String| Error::Records {
            path: path.to_path_buf(),
            row: line,
            message,
        };
        records.push(parse_row(&fields).map_err(fail)?);
    }
    Ok(records)
}

pub fn load_records(path: &Path) -> Result<Vec<ShotRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_records(std::io::BufReader::new(file), path)
}

fn parse_float(fields: &csv::StringRecord, i: usize) -> std::result::Result<f64, String> {
    let text = &fields[i];
    let x: f64 = text
        .parse()
        .map_err(|_| format!("{}: `{text}` is not a number", HEADER[i]))?;
    if !x.is_finite() {
        return Err(format!("{}: value must be finite", HEADER[i]));
    }
    Ok(x)
}

fn expect_empty(
    fields: &csv::StringRecord,
    i: usize,
    prep: &str,
) -> std::result::Result<(), String> {
    if fields[i].is_empty() {
        Ok(())
    } else {
        Err(format!("{} must be empty for prep `{prep}`", HEADER[i]))
    }
}

fn parse_row(fields: &csv::StringRecord) -> std::result::Result<ShotRecord, String> {
    let shot_index: u64 = fields[0]
        .parse()
        .map_err(|_| format!("shot_index: `{}` is not a non-negative integer", &fields[0]))?;
    let tag = &fields[1];
    let prep = match tag {
        "none" | "pi_ge" => {
            expect_empty(fields, 2, tag)?;
            expect_empty(fields, 3, tag)?;
            if tag == "none" {
                Prep::None
            } else {
                Prep::PiGe
            }
        }
        "pi_ef_rabi" => {
            let angle = parse_float(fields, 2)?;
            let with_ge_pi = match &fields[3] {
                "true" => true,
                "false" => false,
                other => return Err(format!("with_ge_pi: `{other}` is not true or false")),
            };
            Prep::PiEfRabi { angle, with_ge_pi }
        }
        other => {
            return Err(format!(
                "prep: unknown preparation `{other}` (expected none, pi_ge or pi_ef_rabi)"
            ))
        }
    };
    let tau = parse_float(fields, 4)?;
    if tau < 0.0 {
        return Err("tau_s must be >= 0".into());
    }
    let v1 = Complex64::new(parse_float(fields, 5)?, parse_float(fields, 6)?);
    let v2 = if prep == Prep::None {
        Some(Complex64::new(
            parse_float(fields, 7)?,
            parse_float(fields, 8)?,
        ))
    } else {
        expect_empty(fields, 7, tag)?;
        expect_empty(fields, 8, tag)?;
        None
    };
    Ok(ShotRecord {
        shot_index,
        prep,
        v1,
        v2,
        tau,
        truth: None,
    })
}
