//! CSV form of a [`Trace`]: one row per iterate, vectors joined with `;`,
//! floats written with 17 significant digits so they read back bit-exact.

use std::io::{Read, Write};

use thiserror::Error;

use crate::driver::{IterateRecord, Trace};
pub use crate::numfmt::format_float;

pub const HEADER: [&str; 10] = [
    "k",
    "x",
    "F",
    "lambda",
    "e",
    "z",
    "step_norm",
    "inner_iters",
    "stationarity",
    "criticality_residual",
];

#[derive(Debug, Error)]
pub enum TraceCsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("row {row}: bad field `{field}`: {value:?}")]
    Field {
        row: usize,
        field: &'static str,
        value: String,
    },
    #[error("unexpected header {0:?}")]
    Header(Vec<String>),
}

fn format_vec(v: &[f64]) -> String {
    v.iter()
        .map(|x| format_float(*x))
        .collect::<Vec<_>>()
        .join(";")
}

fn opt<T>(v: &Option<T>, f: impl Fn(&T) -> String) -> String {
    v.as_ref().map(f).unwrap_or_default()
}

pub fn write_trace<W: Write>(trace: &Trace, out: W) -> Result<(), TraceCsvError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in &trace.records {
        w.write_record([
            r.k.to_string(),
            format_vec(&r.x),
            format_vec(&r.f_of_x),
            opt(&r.lambda, |v| format_float(*v)),
            opt(&r.e, |v| format_vec(v)),
            opt(&r.z, |v| format_vec(v)),
            opt(&r.step_norm, |v| format_float(*v)),
            opt(&r.inner_iterations, |v| v.to_string()),
            opt(&r.stationarity, |v| format_float(*v)),
            format_float(r.criticality_residual),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace<R: Read>(input: R) -> Result<Vec<IterateRecord>, TraceCsvError> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_owned).collect();
    if header != HEADER {
        return Err(TraceCsvError::Header(header));
    }
    let mut out = Vec::new();
    for (row, rec) in rd.records().enumerate() {
        let rec = rec?;
        let get = |i: usize| rec.get(i).unwrap_or("");
        let bad = |field: &'static str, value: &str| TraceCsvError::Field {
            row,
            field,
            value: value.to_owned(),
        };
        let float = |i: usize| -> Result<f64, TraceCsvError> {
            get(i).parse().map_err(|_| bad(HEADER[i], get(i)))
        };
        let vector = |i: usize| -> Result<Vec<f64>, TraceCsvError> {
            get(i)
                .split(';')
                .map(|s| s.parse().map_err(|_| bad(HEADER[i], get(i))))
                .collect()
        };
        let present = |i: usize| !get(i).is_empty();
        out.push(IterateRecord {
            k: get(0).parse().map_err(|_| bad("k", get(0)))?,
            x: vector(1)?,
            f_of_x: vector(2)?,
            lambda: present(3).then(|| float(3)).transpose()?,
            e: present(4).then(|| vector(4)).transpose()?,
            z: present(5).then(|| vector(5)).transpose()?,
            step_norm: present(6).then(|| float(6)).transpose()?,
            inner_iterations: present(7)
                .then(|| get(7).parse().map_err(|_| bad("inner_iters", get(7))))
                .transpose()?,
            stationarity: present(8).then(|| float(8)).transpose()?,
            criticality_residual: float(9)?,
        });
    }
    Ok(out)
}
