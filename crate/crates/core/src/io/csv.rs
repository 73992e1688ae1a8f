//! Diagnostics and comparison tables as CSV.
//!
//! Numbers use 17 significant digits in scientific notation, absent values
//! are empty fields and lines end with `\n`.

use std::fmt::Write as _;
use std::path::Path;

use super::checkpoint::write_atomic;
use crate::diagnostics::{DefectReport, DiagnosticsRecord, RelativeEnergySeries};
use crate::error::{Error, Result};

pub const DIAGNOSTICS_COLUMNS: [&str; 15] = [
    "t",
    "E_kin",
    "E_P",
    "E_elastic",
    "E_bulk_F",
    "E_bulk_G",
    "E_total_F",
    "E_total_G",
    "balance_residual",
    "helicity",
    "max_div_v",
    "max_trace_Q",
    "loop_circulation",
    "vort_res_plus",
    "vort_res_minus",
];

pub fn number(x: f64) -> String {
    format!("{x:.16e}")
}

fn optional(x: Option<f64>) -> String {
    x.map(number).unwrap_or_default()
}

pub fn format_diagnostics(records: &[DiagnosticsRecord]) -> Result<String> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no diagnostics records to write".into()));
    }
    let mut out = DIAGNOSTICS_COLUMNS.join(",");
    out.push('\n');
    for r in records {
        let fields = [
            number(r.t),
            number(r.e_kin),
            number(r.e_p),
            number(r.e_elastic),
            number(r.e_bulk_f),
            number(r.e_bulk_g),
            number(r.e_total_f),
            number(r.e_total_g),
            optional(r.balance_residual),
            optional(r.helicity),
            optional(r.max_div_v),
            optional(r.max_trace_q),
            optional(r.loop_circulation),
            optional(r.vort_res_plus),
            optional(r.vort_res_minus),
        ];
        let _ = writeln!(out, "{}", fields.join(","));
    }
    Ok(out)
}

pub fn write_diagnostics(records: &[DiagnosticsRecord], path: &Path) -> Result<()> {
    write_atomic(path, format_diagnostics(records)?.as_bytes())
}

/// `t, relative_energy, envelope, lipschitz, R1, R2, D` rows.
///
/// Either part may be absent; its columns are then empty.
pub fn format_comparison(
    times: &[f64],
    series: Option<&RelativeEnergySeries>,
    defect: Option<&DefectReport>,
) -> String {
    let mut out = String::from("t,relative_energy,envelope,lipschitz,R1,R2,D\n");
    for (k, t) in times.iter().enumerate() {
        let s = |f: fn(&RelativeEnergySeries) -> &Vec<f64>| optional(series.map(|s| f(s)[k]));
        let d = |f: fn(&DefectReport) -> &Vec<f64>| optional(defect.map(|d| f(d)[k]));
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            number(*t),
            s(|s| &s.relative_energy),
            s(|s| &s.envelope),
            s(|s| &s.lipschitz),
            d(|d| &d.r1),
            d(|d| &d.r2),
            d(|d| &d.dissipation),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::energy_breakdown;
    use crate::dynamics::SpectralState;
    use crate::potential::PotentialParams;
    use crate::spectral::{Grid, Spectral};

    fn record(t: f64) -> DiagnosticsRecord {
        let g = Grid::new(8, 2).unwrap();
        let mut s = SpectralState::zeros(g, PotentialParams::new(1.0, 0.0, 1.0, 0.0));
        s.t = t;
        let mut r = energy_breakdown(&Spectral::new(g), &s);
        r.helicity = Some(-1.0 / 3.0);
        r
    }

    #[test]
    fn one_record_gives_two_lines() {
        let text = format_diagnostics(&[record(0.5)]).unwrap();
        let lines: Vec<&str> = text.split_inclusive('\n').collect();
        assert_eq!(lines.len(), 2);
        assert!(!text.contains('\r'));
        assert_eq!(lines[0].trim_end(), DIAGNOSTICS_COLUMNS.join(","));
        let fields: Vec<&str> = lines[1].trim_end().split(',').collect();
        assert_eq!(fields.len(), 15);
        assert_eq!(fields[0], "5.0000000000000000e-1");
        assert_eq!(fields[9], "-3.3333333333333331e-1");
        assert_eq!(fields[9].parse::<f64>().unwrap(), -1.0 / 3.0);
        assert_eq!(fields[8], "");
    }

    #[test]
    fn empty_records_are_refused() {
        assert!(format_diagnostics(&[]).is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        assert!(write_diagnostics(&[], &path).is_err());
        assert!(!path.exists());
    }

    #[test]
    fn rewriting_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let recs = [record(0.0), record(0.1)];
        write_diagnostics(&recs, &path).unwrap();
        let first = std::fs::read(&path).unwrap();
        write_diagnostics(&recs, &path).unwrap();
        assert_eq!(first, std::fs::read(&path).unwrap());
    }

    #[test]
    fn every_value_keeps_seventeen_digits() {
        for x in [std::f64::consts::PI, 1e-300, -123456.789, 0.1 + 0.2] {
            assert_eq!(number(x).parse::<f64>().unwrap(), x);
        }
    }
}
