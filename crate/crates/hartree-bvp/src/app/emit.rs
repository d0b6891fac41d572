//! Diagnostics serialization: fixed-header CSV and JSON.
//!
//! Floating values print as shortest round-trip decimals, so a reader gets
//! back bit-identical values; the verify harness and the determinism checks
//! rely on that.

use std::io::Write;
use std::path::Path;

use crate::diagnostics::DiagnosticsRow;
use crate::error::{Error, Result};

/// The fixed CSV column set, in order.
pub const CSV_HEADER: &str = "step,t,mass,energy,mass_lhs,mass_rhs,mass_res,energy_lhs,energy_rhs,energy_res,virial_lhs,virial_rhs,virial_res,J_cum,h1_norm,picard_iters,contraction_est";

fn row_line(r: &DiagnosticsRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.step,
        r.t,
        r.mass,
        r.energy,
        r.mass_lhs,
        r.mass_rhs,
        r.mass_res,
        r.energy_lhs,
        r.energy_rhs,
        r.energy_res,
        r.virial_lhs,
        r.virial_rhs,
        r.virial_res,
        r.j_cum,
        r.h1_norm,
        r.picard_iters,
        r.contraction_est
    )
}

/// Render rows as CSV text. A truncation marker comment is appended when a
/// run stopped early.
pub fn csv_string(rows: &[DiagnosticsRow], truncated: Option<&str>) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&row_line(r));
        out.push('\n');
    }
    if let Some(reason) = truncated {
        out.push_str(&format!("# truncated: {reason}\n"));
    }
    out
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.display().to_string(),
        source: e,
    }
}

pub fn write_csv(rows: &[DiagnosticsRow], path: &Path, truncated: Option<&str>) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(io_err(path))?;
    f.write_all(csv_string(rows, truncated).as_bytes())
        .map_err(io_err(path))
}

pub fn write_json_rows(rows: &[DiagnosticsRow], path: &Path, ) -> Result<()> {
    let text = serde_json::to_string_pretty(rows).expect("rows serialize");
    std::fs::write(path, text).map_err(io_err(path))
}

/// Write any serializable report as pretty JSON.
pub fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    std::fs::write(path, text).map_err(io_err(path))
}

/// Read back a diagnostics CSV. Comment lines (`#`) are skipped; values
/// round-trip bit-exactly. Fields the CSV does not carry are zero.
pub fn read_csv(text: &str) -> Result<Vec<DiagnosticsRow>> {
    let mut lines = text.lines().filter(|l| !l.trim_start().starts_with('#'));
    let header = lines.next().unwrap_or("");
    if header != CSV_HEADER {
        return Err(Error::Config(vec![format!(
            "csv: unexpected header '{header}'"
        )]));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 17 {
            return Err(Error::Config(vec![format!(
                "csv row {}: expected 17 columns, got {}",
                i + 2,
                fields.len()
            )]));
        }
        let pf = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Config(vec![format!("csv row {}: bad float '{s}'", i + 2)]))
        };
        rows.push(DiagnosticsRow {
            step: fields[0]
                .parse()
                .map_err(|_| Error::Config(vec![format!("csv row {}: bad step", i + 2)]))?,
            t: pf(fields[1])?,
            mass: pf(fields[2])?,
            energy: pf(fields[3])?,
            mass_lhs: pf(fields[4])?,
            mass_rhs: pf(fields[5])?,
            mass_res: pf(fields[6])?,
            energy_lhs: pf(fields[7])?,
            energy_rhs: pf(fields[8])?,
            energy_res: pf(fields[9])?,
            virial_lhs: pf(fields[10])?,
            virial_rhs: pf(fields[11])?,
            virial_res: pf(fields[12])?,
            j_cum: pf(fields[13])?,
            h1_norm: pf(fields[14])?,
            picard_iters: fields[15]
                .parse()
                .map_err(|_| Error::Config(vec![format!("csv row {}: bad iters", i + 2)]))?,
            contraction_est: pf(fields[16])?,
            apriori_lhs: 0.0,
            apriori_rhs: 0.0,
        });
    }
    Ok(rows)
}
