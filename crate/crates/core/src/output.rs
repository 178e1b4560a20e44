//! CSV emission with fixed formatting: 12 significant digits in scientific
//! notation, `.` as decimal point and `\n` line endings.
//!
//! Schemas:
//! - `speeds.csv`: `name,value,lambda,reason`
//! - `wave_profile.csv`: `z,phi,psi,residual_local`
//! - `wave_summary.csv`: `key,value`
//! - `probes.csv`: `t,frame_speed,u,v`; rows with `frame_speed = sup` hold
//!   the whole-line maxima of `u` and `v`
//! - `snapshots.csv`: `t,x,u,v`
//! - `outcome.csv`: `band,lo,hi,expected,verdict,u_min,u_max,v_min,v_max,coex_distance,frames`
//! - `sweep.csv`: `s,status,verdict,bands,error`
//! - `accept.csv`: `criterion,check,pass,measured,target,seconds`
//! - `results.csv`: `scenario,command,param_hash,outputs,wall_time_s`

use crate::dispersion::SpeedReport;
use crate::error::{Error, Result};
use crate::sim::{Field, OutcomeReport, ProbeSeries};
use crate::wave::{WaveSolution, WaveSystem};
use std::path::Path;

/// `{:.11e}`, or `NA` for non-finite values.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        "NA".to_string()
    }
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?)
}

pub fn write_speeds(path: &Path, report: &SpeedReport) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["name", "value", "lambda", "reason"])?;
    for (name, v) in report.rows() {
        let value = v.value().map_or("NA".to_string(), fmt_num);
        let lambda = v.lambda().map_or("NA".to_string(), fmt_num);
        w.write_record([name, &value, &lambda, v.reason().unwrap_or("")])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_wave_profile(path: &Path, sol: &WaveSolution, sys: &WaveSystem) -> Result<()> {
    let (r1, r2) = sys.residuals(&sol.pair);
    let mut w = writer(path)?;
    w.write_record(["z", "phi", "psi", "residual_local"])?;
    for j in 0..sol.pair.grid.n {
        let res = r1[j].abs().max(r2[j].abs());
        w.write_record([
            fmt_num(sol.pair.grid.z(j)),
            fmt_num(sol.pair.phi[j]),
            fmt_num(sol.pair.psi[j]),
            fmt_num(res),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes string rows; the first row is the header.
pub fn write_rows(path: &Path, rows: &[Vec<String>]) -> Result<()> {
    let mut w = writer(path)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_key_values(path: &Path, rows: &[(String, String)]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["key", "value"])?;
    for (k, v) in rows {
        w.write_record([k, v])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_probes(path: &Path, series: &ProbeSeries) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["t", "frame_speed", "u", "v"])?;
    for (k, &t) in series.times.iter().enumerate() {
        let ts = fmt_num(t);
        for (i, &c) in series.frames.iter().enumerate() {
            w.write_record([
                ts.clone(),
                fmt_num(c),
                fmt_num(series.u[k][i]),
                fmt_num(series.v[k][i]),
            ])?;
        }
        w.write_record([
            ts,
            "sup".into(),
            fmt_num(series.sup_u[k]),
            fmt_num(series.sup_v[k]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a probe file written by [`write_probes`].
pub fn read_probes(path: &Path) -> Result<ProbeSeries> {
    let mut r = csv::Reader::from_path(path)?;
    let bad = |line: u64, reason: String| Error::Table {
        path: path.display().to_string(),
        line: line as usize,
        reason,
    };
    let mut series = ProbeSeries::default();
    let mut frames_done = false;
    let mut row_u = Vec::new();
    let mut row_v = Vec::new();
    let mut frame_idx = 0;
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 4 {
            return Err(bad(line, format!("expected 4 fields, found {}", rec.len())));
        }
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|_| bad(line, format!("`{}` is not a number", &rec[i])))
        };
        let t = num(0)?;
        let (u, v) = (num(2)?, num(3)?);
        if &rec[1] == "sup" {
            if frames_done && frame_idx != series.frames.len() {
                return Err(bad(
                    line,
                    "frame count differs from the first time block".into(),
                ));
            }
            frames_done = true;
            series.times.push(t);
            series.u.push(std::mem::take(&mut row_u));
            series.v.push(std::mem::take(&mut row_v));
            series.sup_u.push(u);
            series.sup_v.push(v);
            frame_idx = 0;
        } else {
            let c = num(1)?;
            if !frames_done {
                series.frames.push(c);
            } else if series
                .frames
                .get(frame_idx)
                .is_none_or(|&f| (f - c).abs() > 1e-9 * f.abs().max(1.0))
            {
                return Err(bad(line, format!("unexpected frame speed {c}")));
            }
            frame_idx += 1;
            row_u.push(u);
            row_v.push(v);
        }
    }
    if !row_u.is_empty() {
        return Err(Error::Table {
            path: path.display().to_string(),
            line: 0,
            reason: "last time block lacks its `sup` row".into(),
        });
    }
    Ok(series)
}

pub fn write_snapshots(path: &Path, snapshots: &[Field]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["t", "x", "u", "v"])?;
    for f in snapshots {
        let ts = fmt_num(f.t);
        for j in 0..f.n() {
            w.write_record([
                ts.clone(),
                fmt_num(f.x(j)),
                fmt_num(f.u[j]),
                fmt_num(f.v[j]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_outcome(path: &Path, report: &OutcomeReport) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "band",
        "lo",
        "hi",
        "expected",
        "verdict",
        "u_min",
        "u_max",
        "v_min",
        "v_max",
        "coex_distance",
        "frames",
    ])?;
    for b in &report.bands {
        w.write_record([
            b.band.name.to_string(),
            fmt_num(b.band.lo),
            fmt_num(b.band.hi),
            b.band.expected.map_or("NA".to_string(), |e| e.to_string()),
            b.verdict.to_string(),
            fmt_num(b.u_min),
            fmt_num(b.u_max),
            fmt_num(b.v_min),
            fmt_num(b.v_max),
            fmt_num(b.coex_distance),
            b.frames_used.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One line of `results.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub scenario: String,
    pub command: String,
    pub param_hash: String,
    /// `key=value` pairs joined with `;`.
    pub outputs: Vec<(String, String)>,
    pub wall_time_s: f64,
}

/// Writes `results.csv`, creating it with a header or appending to it.
pub fn append_results(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let fresh = !path.exists();
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    if fresh {
        w.write_record([
            "scenario",
            "command",
            "param_hash",
            "outputs",
            "wall_time_s",
        ])?;
    }
    for r in rows {
        let outputs: Vec<String> = r.outputs.iter().map(|(k, v)| format!("{k}={v}")).collect();
        w.write_record([
            r.scenario.as_str(),
            r.command.as_str(),
            r.param_hash.as_str(),
            &outputs.join(";"),
            &format!("{:.3}", r.wall_time_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}
