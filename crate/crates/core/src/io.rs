//! CSV encodings of the tabular outputs.
//!
//! Numbers are written with `{:e}`, the shortest representation that
//! round-trips, so equal values always produce identical bytes.

use std::io::{self, Write};

use crate::analysis::SpecularityReport;
use crate::dynamics::State;
use crate::ensemble::{CloudTimeSeries, Snapshot};
use crate::error::CsvError;
use crate::field::FieldVector;

pub const FIELD_MAP_HEADER: &str = "x_m,y_m,Bx_T,By_T,Bz_T,Bmag_T";
pub const TRAJECTORY_HEADER: &str = "t_s,x_m,y_m,vx_ms,vy_ms,E_J";
pub const ENSEMBLE_HEADER: &str = "t_s,mean_y_m,rms_x_m,rms_y_m,mean_vx_ms,rms_vx_ms,n_survivors";
pub const RESIDUALS_HEADER: &str = "t_s,residual_m,window";
pub const BOUNCE_RECORD_HEADER: &str = "atom,t_turn_s,y_turn_m,x_turn_m,interaction_time_s,penetrated";

pub fn num(v: f64) -> String {
    format!("{v:e}")
}

/// One field-map row; `bmag` is whatever the chosen model reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub x: f64,
    pub y: f64,
    pub vector: FieldVector,
    pub magnitude: f64,
}

pub fn write_field_map<W: Write>(mut w: W, rows: &[FieldSample]) -> io::Result<()> {
    writeln!(w, "{FIELD_MAP_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            num(r.x),
            num(r.y),
            num(r.vector.bx),
            num(r.vector.by),
            num(r.vector.bz),
            num(r.magnitude)
        )?;
    }
    Ok(())
}

/// Writes trajectory samples with their total mechanical energy.
pub fn write_trajectory<W: Write>(mut w: W, samples: &[State], energies: &[f64]) -> io::Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for (s, e) in samples.iter().zip(energies) {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            num(s.t),
            num(s.x),
            num(s.y),
            num(s.vx),
            num(s.vy),
            num(*e)
        )?;
    }
    Ok(())
}

pub fn write_series<W: Write>(mut w: W, series: &CloudTimeSeries) -> io::Result<()> {
    writeln!(w, "{ENSEMBLE_HEADER}")?;
    for s in &series.snapshots {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            num(s.t),
            num(s.mean_y),
            num(s.rms_x),
            num(s.rms_y),
            num(s.mean_vx),
            num(s.rms_vx),
            s.n_survivors
        )?;
    }
    Ok(())
}

pub fn series_to_csv(series: &CloudTimeSeries) -> String {
    let mut buf = Vec::new();
    write_series(&mut buf, series).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// Reads an ensemble CSV. The atom count is taken from the first row's
/// survivor count.
pub fn parse_series(text: &str) -> Result<CloudTimeSeries, CsvError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(CsvError::Empty)?;
    if header.trim() != ENSEMBLE_HEADER {
        return Err(CsvError::Header {
            expected: ENSEMBLE_HEADER.into(),
            found: header.trim().into(),
        });
    }
    let mut snapshots = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 7 {
            return Err(CsvError::Row {
                line: line_no,
                message: format!("expected 7 columns, found {}", fields.len()),
            });
        }
        let f = |j: usize| -> Result<f64, CsvError> {
            fields[j].parse::<f64>().map_err(|e| CsvError::Row {
                line: line_no,
                message: format!("column {}: {e}", j + 1),
            })
        };
        let n_survivors = fields[6].parse::<usize>().map_err(|e| CsvError::Row {
            line: line_no,
            message: format!("column 7: {e}"),
        })?;
        snapshots.push(Snapshot {
            t: f(0)?,
            mean_y: f(1)?,
            rms_x: f(2)?,
            rms_y: f(3)?,
            mean_vx: f(4)?,
            rms_vx: f(5)?,
            n_survivors,
        });
    }
    let n_atoms = snapshots.first().ok_or(CsvError::Empty)?.n_survivors;
    Ok(CloudTimeSeries { n_atoms, snapshots })
}

/// Residuals that fall in the fit, guard or post window.
pub fn write_residuals<W: Write>(mut w: W, report: &SpecularityReport) -> io::Result<()> {
    writeln!(w, "{RESIDUALS_HEADER}")?;
    for (t, r, label) in report.labelled_residuals() {
        writeln!(w, "{},{},{label}", num(t), num(r))?;
    }
    Ok(())
}

pub fn write_bounce_records<W: Write>(
    mut w: W,
    records: &[crate::ensemble::AtomRecord],
) -> io::Result<()> {
    writeln!(w, "{BOUNCE_RECORD_HEADER}")?;
    for rec in records {
        for b in &rec.bounces {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                rec.index,
                num(b.t_turn),
                num(b.y_turn),
                num(b.x_at_turn),
                num(b.interaction_time),
                b.penetrated
            )?;
        }
    }
    Ok(())
}
