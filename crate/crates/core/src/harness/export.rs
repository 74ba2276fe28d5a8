//! Log persistence: JSON Lines, a single JSON document, and plot-ready CSV.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::conversion::curve_to_dp;
use crate::curve::RdpCurve;
use crate::error::{Error, Result};
use crate::harness::log::{LogHeader, LogRecord, SessionLog};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Jsonl,
    Json,
    Csv,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(ExportFormat::Jsonl),
            "json" => Ok(ExportFormat::Json),
            "csv" => Ok(ExportFormat::Csv),
            other => Err(Error::Config(format!("unknown format {other:?}"))),
        }
    }
}

/// Header line, then one line per record.
pub fn to_jsonl(log: &SessionLog) -> Result<String> {
    let mut out = serde_json::to_string(log.header())?;
    out.push('\n');
    for event in log.events() {
        out.push_str(&serde_json::to_string(event)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn from_jsonl(reader: impl BufRead) -> Result<SessionLog> {
    let mut lines = reader.lines().enumerate().filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()));
    let header: LogHeader = match lines.next() {
        Some((_, line)) => serde_json::from_str(&line.map_err(|e| Error::io("<log>", e))?)?,
        None => return Err(Error::Config("log has no header line".into())),
    };
    let mut events = Vec::new();
    for (n, line) in lines {
        let line = line.map_err(|e| Error::io("<log>", e))?;
        let record: LogRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        events.push(record);
    }
    SessionLog::new(header, events)
}

pub fn write_jsonl(log: &SessionLog, path: &Path) -> Result<()> {
    std::fs::write(path, to_jsonl(log)?).map_err(|e| Error::io(path, e))
}

pub fn read_jsonl(path: &Path) -> Result<SessionLog> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    from_jsonl(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn write_json(log: &SessionLog, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer(&mut writer, log)?;
    writer.write_all(b"\n").and_then(|_| writer.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_json(path: &Path) -> Result<SessionLog> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

/// Columns: `step`, `spent_a<α>` per order, then `decision` (filter) or `f`
/// (odometer), then `eps_dp`. Filter logs report `curve_to_dp` of the spend;
/// odometer logs report the running bound, empty when unbounded.
pub fn to_csv(log: &SessionLog, out: impl Write) -> Result<()> {
    let header = log.header();
    let orders = header.orders();
    let mut writer = csv::Writer::from_writer(out);
    let mut columns = vec!["step".to_owned()];
    columns.extend(orders.iter().map(|a| format!("spent_a{a}")));
    columns.push(if header.is_filter() { "decision" } else { "f" }.to_owned());
    columns.push("eps_dp".to_owned());
    writer.write_record(&columns)?;

    let mut spent = RdpCurve::zeros(orders);
    for event in log.events() {
        let mut row = Vec::with_capacity(columns.len());
        match event {
            LogRecord::Filter(r) => {
                if r.decision == crate::filter::Decision::Grant {
                    spent.add_assign(&r.request)?;
                }
                row.push(r.i.to_string());
                row.extend(spent.values().iter().map(f64::to_string));
                row.push(format!("{:?}", r.decision).to_uppercase());
                row.push(curve_to_dp(&spent, header.delta())?.epsilon.to_string());
            }
            LogRecord::Odometer(r) => {
                spent.add_assign(&r.request)?;
                row.push(r.i.to_string());
                row.extend(spent.values().iter().map(f64::to_string));
                row.push(r.bound.f.map_or_else(String::new, |f| f.to_string()));
                row.push(r.bound.eps.map_or_else(String::new, |e| e.to_string()));
            }
        }
        writer.write_record(&row)?;
    }
    writer.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_csv(log: &SessionLog, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    to_csv(log, BufWriter::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Write `log` to `path` in `format`.
pub fn export(log: &SessionLog, format: ExportFormat, path: &Path) -> Result<()> {
    match format {
        ExportFormat::Jsonl => write_jsonl(log, path),
        ExportFormat::Json => write_json(log, path),
        ExportFormat::Csv => write_csv(log, path),
    }
}

/// Read a log written as JSON Lines or as one JSON document.
pub fn import(path: &Path) -> Result<SessionLog> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim_start().starts_with("{\"header\"") {
        Ok(serde_json::from_str(&text)?)
    } else {
        from_jsonl(text.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::replay::{ScheduleReplay, ScheduleSegment};
    use crate::harness::session::{run_session, SessionConfig, SessionSource};
    use crate::mechanisms::{GaussianMechanism, MechanismSpec};
    use crate::orders::OrderSet;

    fn odometer_log(steps: u64) -> SessionLog {
        let orders = OrderSet::new(vec![2.0, 4.0]).unwrap();
        let mechanism = MechanismSpec::Gaussian(GaussianMechanism::new(2.0, 1.0).unwrap());
        let source = if steps == 0 {
            ScheduleReplay::empty()
        } else {
            ScheduleReplay::new(vec![ScheduleSegment { mechanism, steps }]).unwrap()
        };
        let config = SessionConfig::odometer(orders, 1e-5, SessionSource::Schedule(source)).with_seed(9);
        run_session(&config).unwrap().log
    }

    #[test]
    fn csv_shape() {
        let mut buf = Vec::new();
        to_csv(&odometer_log(0), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "step,spent_a2,spent_a4,f,eps_dp\n");

        let mut buf = Vec::new();
        to_csv(&odometer_log(7), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 8);
        assert!(text.lines().nth(1).unwrap().starts_with("1,0.25,0.5,1,"));
    }

    #[test]
    fn jsonl_round_trip() {
        let log = odometer_log(5);
        let text = to_jsonl(&log).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert_eq!(from_jsonl(text.as_bytes()).unwrap(), log);
    }

    #[test]
    fn file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let log = odometer_log(4);
        for (format, name) in [(ExportFormat::Json, "log.json"), (ExportFormat::Jsonl, "log.jsonl")] {
            let path = dir.path().join(name);
            export(&log, format, &path).unwrap();
            assert_eq!(import(&path).unwrap(), log);
        }
        assert_eq!(read_json(&dir.path().join("log.json")).unwrap(), log);
        assert_eq!(read_jsonl(&dir.path().join("log.jsonl")).unwrap(), log);
    }

    #[test]
    fn io_errors_carry_the_path() {
        let err = read_jsonl(Path::new("/nonexistent/dir/log.jsonl")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/log.jsonl"), "{err}");
        let err = write_csv(&odometer_log(1), Path::new("/nonexistent/dir/out.csv")).unwrap_err();
        assert!(err.to_string().contains("out.csv"), "{err}");
    }
}
