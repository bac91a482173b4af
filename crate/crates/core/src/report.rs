//! CSV output for simulation results and dependability metrics.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use iwcn_dependability::description::MetricRow;

use crate::sim::SweepRow;

pub const SWEEP_HEADER: [&str; 10] = [
    "N",
    "policy",
    "wus_mode",
    "detection_prob",
    "log10_detection_prob",
    "ci95_lo",
    "ci95_hi",
    "events",
    "mean_reports",
    "depletion_frac",
];

/// Shortest round-trip decimal form; `nan`, `inf` and `-inf` otherwise.
pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        // Display never uses exponents or locale separators
        format!("{v}")
    }
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

fn to_io(e: csv::Error) -> io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => io::Error::other(format!("{other:?}")),
    }
}

/// Writes the header and one row per cell.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> io::Result<()> {
    let mut w = writer(out);
    w.write_record(SWEEP_HEADER).map_err(to_io)?;
    for row in rows {
        let r = &row.result;
        w.write_record([
            row.devices.to_string(),
            row.policy.as_str().to_string(),
            row.wus_mode.as_str().to_string(),
            format_f64(r.detection_probability),
            format_f64(r.detection_probability.log10()),
            format_f64(r.ci95_lo),
            format_f64(r.ci95_hi),
            r.events.to_string(),
            format_f64(r.mean_reports),
            format_f64(r.depletion_fraction),
        ])
        .map_err(to_io)?;
    }
    w.flush()
}

/// Writes `rows` to a new file at `path`.
pub fn emit_csv(rows: &[SweepRow], path: &Path) -> io::Result<()> {
    if rows.is_empty() {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "no results to write"));
    }
    let mut f = BufWriter::new(File::create(path)?);
    write_sweep_csv(rows, &mut f)?;
    f.flush()
}

/// `model,metric,value` rows from the dependability analyzer.
pub fn write_metrics_csv<W: Write>(rows: &[MetricRow], out: W) -> io::Result<()> {
    let mut w = writer(out);
    w.write_record(["model", "metric", "value"]).map_err(to_io)?;
    for r in rows {
        w.write_record([r.model_id.as_str(), r.metric.as_str(), &format_f64(r.value)]).map_err(to_io)?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mac::WusMode;
    use crate::sim::{PolicyKind, RunResult, Tally};

    fn row(successes: u64, events: u64) -> SweepRow {
        SweepRow {
            devices: 10,
            policy: PolicyKind::Benchmark,
            wus_mode: WusMode::Group,
            result: RunResult::from_tally(Tally {
                events,
                successes,
                relevant_reports: 3,
                depleted_device_slots: 1,
                device_slots: 4,
            }),
        }
    }

    #[test]
    fn zero_detection_gives_minus_inf() {
        let mut buf = Vec::new();
        write_sweep_csv(&[row(0, 10)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], SWEEP_HEADER.join(","));
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(&fields[..5], &["10", "benchmark", "group", "0", "-inf"]);
        assert_eq!(fields[9], "0.25");
        assert!(text.ends_with('\n') && !text.contains('\r'));
    }

    #[test]
    fn no_events_prints_nan() {
        let mut buf = Vec::new();
        write_sweep_csv(&[row(0, 0)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("10,benchmark,group,nan,nan,nan,nan,0,nan,"));
    }

    #[test]
    fn small_values_have_no_exponent() {
        assert_eq!(format_f64(1e-7), "0.0000001");
        assert_eq!(format_f64(f64::NEG_INFINITY), "-inf");
        assert_eq!(format_f64(0.5), "0.5");
    }

    #[test]
    fn metric_fields_are_quoted_when_needed() {
        let rows = vec![MetricRow { model_id: "a,b".into(), metric: "reliability".into(), value: 0.81 }];
        let mut buf = Vec::new();
        write_metrics_csv(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "model,metric,value\n\"a,b\",reliability,0.81\n");
    }
}
