//! Text and CSV renderings of EER slices.
//!
//! The text report leads with the per-attack table row
//! `A09 A10 A11 A12 A13 A14 overall w/o-acesinger`, EERs in percent with two
//! decimals and `-` for missing cells, followed by per-origin and any other
//! slices.

use std::fmt::Write as _;

use super::breakdown::{Slice, SliceResult};
use crate::error::{Error, Result};
use crate::numfmt::{fmt_g17, parse_f64};

pub const RESULTS_HEADER: &str = "slice,eer,threshold,n_bonafide,n_spoof";
pub const TABLE_ATTACKS: [&str; 6] = ["A09", "A10", "A11", "A12", "A13", "A14"];
const EXCLUDED_ORIGIN: &str = "acesinger";

/// One slice's EER; everything except `eer` may be absent in hand-entered
/// results.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub slice: Slice,
    pub eer: f64,
    pub threshold: Option<f64>,
    pub n_bonafide: Option<usize>,
    pub n_spoof: Option<usize>,
}

impl From<&SliceResult> for ReportRow {
    fn from(s: &SliceResult) -> Self {
        Self {
            slice: s.slice.clone(),
            eer: s.result.eer,
            threshold: Some(s.result.threshold),
            n_bonafide: Some(s.result.n_bonafide),
            n_spoof: Some(s.result.n_spoof),
        }
    }
}

/// Full-precision CSV, header [`RESULTS_HEADER`].
pub fn results_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.slice,
            fmt_g17(r.eer),
            r.threshold.map(fmt_g17).unwrap_or_default(),
            r.n_bonafide.map(|n| n.to_string()).unwrap_or_default(),
            r.n_spoof.map(|n| n.to_string()).unwrap_or_default(),
        )
        .unwrap();
    }
    out
}

/// Parses results CSV. `eer` is a fraction in `[0, 1]`; the last three
/// columns may be empty or missing.
pub fn parse_results_csv(text: &str, source_name: &str) -> Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') || line.starts_with("slice,") {
            continue;
        }
        let err = |m: String| Error::parse(source_name, lineno, m);
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() < 2 || cols.len() > 5 {
            return Err(err(format!(
                "expected 2 to 5 columns, found {}",
                cols.len()
            )));
        }
        let slice: Slice = cols[0].parse().map_err(err)?;
        let eer = parse_f64(cols[1])
            .filter(|e| (0.0..=1.0).contains(e))
            .ok_or_else(|| err(format!("bad eer {:?} (fraction in [0, 1])", cols[1])))?;
        let opt = |k: usize| cols.get(k).copied().filter(|c| !c.is_empty());
        let threshold = opt(2)
            .map(|c| parse_f64(c).ok_or_else(|| err(format!("bad threshold {c:?}"))))
            .transpose()?;
        let count = |k: usize| {
            opt(k)
                .map(|c| {
                    c.parse::<usize>()
                        .map_err(|_| err(format!("bad count {c:?}")))
                })
                .transpose()
        };
        rows.push(ReportRow {
            slice,
            eer,
            threshold,
            n_bonafide: count(3)?,
            n_spoof: count(4)?,
        });
    }
    Ok(rows)
}

fn pct(eer: f64) -> String {
    format!("{:.2}", eer * 100.0)
}

fn cell(rows: &[ReportRow], slice: &Slice) -> String {
    rows.iter()
        .find(|r| &r.slice == slice)
        .map(|r| pct(r.eer))
        .unwrap_or_else(|| "-".into())
}

pub fn render_report(rows: &[ReportRow]) -> String {
    let mut table: Vec<Slice> = TABLE_ATTACKS
        .iter()
        .map(|a| Slice::Attack(a.to_string()))
        .collect();
    table.push(Slice::Overall);
    table.push(Slice::ExcludeOrigin(EXCLUDED_ORIGIN.into()));

    let mut out = String::from("EER (%)\n");
    out.push_str(&TABLE_ATTACKS.join(" "));
    out.push_str(" overall w/o-");
    out.push_str(EXCLUDED_ORIGIN);
    out.push('\n');
    out.push_str(
        &table
            .iter()
            .map(|s| cell(rows, s))
            .collect::<Vec<_>>()
            .join(" "),
    );
    out.push('\n');

    let origins: Vec<&ReportRow> = rows
        .iter()
        .filter(|r| matches!(r.slice, Slice::Origin(_)))
        .collect();
    if !origins.is_empty() {
        out.push_str("\nEER (%) by origin\n");
        let names: Vec<String> = origins
            .iter()
            .map(|r| match &r.slice {
                Slice::Origin(o) => o.clone(),
                _ => unreachable!(),
            })
            .collect();
        out.push_str(&names.join(" "));
        out.push('\n');
        out.push_str(
            &origins
                .iter()
                .map(|r| pct(r.eer))
                .collect::<Vec<_>>()
                .join(" "),
        );
        out.push('\n');
    }

    let others: Vec<&ReportRow> = rows
        .iter()
        .filter(|r| !table.contains(&r.slice) && !matches!(r.slice, Slice::Origin(_)))
        .collect();
    if !others.is_empty() {
        out.push_str("\nother slices\n");
        for r in others {
            writeln!(out, "{} {}", r.slice, pct(r.eer)).unwrap();
        }
    }
    out
}
