//! Plain CSV from report payloads.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::report::{Payload, ReportFile};

pub const EXPORTABLE: [&str; 4] = ["trajectory", "histogram", "population", "bound-slack"];

fn unit_of(column: &str) -> &'static str {
    match column {
        "t" => "time",
        "energy" => "energy",
        c if c.starts_with('q') => "length",
        c if c.starts_with('p') => "momentum",
        _ => "1",
    }
}

/// Header row names columns and units; rows follow payload order.
pub fn write_csv<W: Write>(payload: &Payload, mut w: W) -> Result<()> {
    match payload {
        Payload::Trajectory { columns, rows } => {
            let header: Vec<String> = columns.iter().map(|c| format!("{c} [{}]", unit_of(c))).collect();
            writeln!(w, "{}", header.join(","))?;
            for row in rows {
                let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
                writeln!(w, "{}", cells.join(","))?;
            }
        }
        Payload::Histogram { variable, centers, density, .. } => {
            writeln!(w, "bin_center [{variable}],density [1/{variable}]")?;
            for (c, d) in centers.iter().zip(density) {
                writeln!(w, "{c},{d}")?;
            }
        }
        Payload::Population { t, n } => {
            writeln!(w, "t [time],n [count]")?;
            for (t, n) in t.iter().zip(n) {
                writeln!(w, "{t},{n}")?;
            }
        }
        Payload::BoundSlack { parameter, x, slack } => {
            let unit = if parameter == "beta" { "1/energy" } else { "1" };
            writeln!(w, "{parameter} [{unit}],slack [nats]")?;
            for (x, s) in x.iter().zip(slack) {
                writeln!(w, "{x},{s}")?;
            }
        }
        Payload::Data { .. } => return Err(Error::contract("data payloads are JSON only")),
    }
    Ok(())
}

/// Writes every payload of kind `what` as `<run>.<payload>.csv` in `dir`.
pub fn export(report: &ReportFile, what: &str, dir: &Path) -> Result<Vec<PathBuf>> {
    if !EXPORTABLE.contains(&what) {
        return Err(Error::Config(format!("unknown export `{what}`; expected one of {EXPORTABLE:?}")));
    }
    let mut available = Vec::new();
    let mut written = Vec::new();
    std::fs::create_dir_all(dir)?;
    for run in report.runs() {
        for (key, payload) in &run.payloads {
            let kind = payload.export_name();
            if kind != "data" && !available.contains(&kind.to_string()) {
                available.push(kind.to_string());
            }
            if kind == what {
                let path = dir.join(format!("{}.{key}.csv", run.name));
                let file = std::fs::File::create(&path)?;
                let mut w = std::io::BufWriter::new(file);
                write_csv(payload, &mut w)?;
                w.flush()?;
                written.push(path);
            }
        }
    }
    if written.is_empty() {
        available.sort();
        return Err(Error::MissingPayload { wanted: what.to_string(), available });
    }
    Ok(written)
}
