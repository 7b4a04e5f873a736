//! Sweep CSV: UTF-8, comma separated, header required, columns bound by name.

use std::fmt::Write as _;

use super::SweepRecord;
use crate::csvio::{fmt_f64, SchemaError, Table};

pub const SWEEP_COLUMNS: [&str; 12] = [
    "angle_travel_deg",
    "angle_from_deg",
    "v_true_m_per_s",
    "dR0_ohm",
    "dR90_ohm",
    "dR180_ohm",
    "dR270_ohm",
    "dR0_clean_ohm",
    "dR90_clean_ohm",
    "dR180_clean_ohm",
    "dR270_clean_ohm",
    "replicate",
];

pub(crate) fn write_row(out: &mut String, r: &SweepRecord) {
    let _ = write!(
        out,
        "{},{},{}",
        fmt_f64(r.angle_travel_deg),
        fmt_f64(r.angle_from_deg),
        fmt_f64(r.v_true)
    );
    for v in r.dr.iter().chain(r.dr_clean.iter()) {
        let _ = write!(out, ",{}", fmt_f64(*v));
    }
    let _ = write!(out, ",{}", r.replicate);
}

/// Header line followed by one line per record.
pub fn export_csv(records: &[SweepRecord]) -> String {
    let mut out = SWEEP_COLUMNS.join(",");
    out.push('\n');
    for r in records {
        write_row(&mut out, r);
        out.push('\n');
    }
    out
}

pub fn import_csv(text: &str) -> Result<Vec<SweepRecord>, SchemaError> {
    let table = Table::parse(text, &SWEEP_COLUMNS)?;
    let mut records = Vec::with_capacity(table.len());
    for row in 0..table.len() {
        let get = |c| table.f64(row, c);
        let record = SweepRecord {
            angle_travel_deg: get("angle_travel_deg")?,
            angle_from_deg: get("angle_from_deg")?,
            v_true: get("v_true_m_per_s")?,
            dr: [
                get("dR0_ohm")?,
                get("dR90_ohm")?,
                get("dR180_ohm")?,
                get("dR270_ohm")?,
            ],
            dr_clean: [
                get("dR0_clean_ohm")?,
                get("dR90_clean_ohm")?,
                get("dR180_clean_ohm")?,
                get("dR270_clean_ohm")?,
            ],
            replicate: table.u32(row, "replicate")?,
        };
        let expected_from = crate::sensor_model::normalize_degrees(record.angle_travel_deg + 180.0);
        let gap = (expected_from - record.angle_from_deg).abs();
        if gap.min(360.0 - gap) > 1e-9 {
            return Err(SchemaError::Invalid {
                row: row + 2,
                message: format!(
                    "angle_from_deg {} inconsistent with angle_travel_deg {}",
                    record.angle_from_deg, record.angle_travel_deg
                ),
            });
        }
        records.push(record);
    }
    Ok(records)
}
