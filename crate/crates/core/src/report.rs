//! Deterministic text outputs: spectrum, match and observable CSV tables and
//! binary PGM heatmaps.
//!
//! Floats are written with 17 significant digits in `{:e}` form, which is
//! locale independent and round-trips exactly.

use faer::c64;

use crate::dmd::{DmdResult, GroupKind, ModeGroup};
use crate::error::{Error, Result};
use crate::membrane::GridDomain;
use crate::oracle::{Candidate, MatchReport, Outcome};

pub const SPECTRUM_HEADER: [&str; 7] = [
    "index",
    "frequency_hz",
    "eigenvalue_re",
    "eigenvalue_im",
    "magnitude",
    "power",
    "paired_with",
];

pub const MATCH_HEADER: [&str; 8] = [
    "analytic_m",
    "analytic_n",
    "nu_analytic",
    "nu_dmd",
    "rel_err",
    "principal_angle_deg",
    "power",
    "status",
];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// One row per mode in result order, which is descending power.
pub fn spectrum_csv(result: &DmdResult, groups: &[ModeGroup]) -> String {
    let mut partner = vec![None; result.len()];
    for g in groups.iter().filter(|g| g.kind == GroupKind::Oscillatory) {
        partner[g.members[0]] = Some(g.members[1]);
        partner[g.members[1]] = Some(g.members[0]);
    }
    table(
        &SPECTRUM_HEADER,
        (0..result.len()).map(|i| {
            let l = result.eigenvalues[i];
            vec![
                i.to_string(),
                fmt_f64(result.frequencies[i]),
                fmt_f64(l.re),
                fmt_f64(l.im),
                fmt_f64(result.growth_magnitudes[i]),
                fmt_f64(result.powers[i]),
                partner[i].map(|j: usize| j.to_string()).unwrap_or_default(),
            ]
        }),
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumRow {
    pub index: usize,
    pub frequency: f64,
    pub eigenvalue: c64,
    pub magnitude: f64,
    pub power: f64,
    pub paired_with: Option<usize>,
}

pub fn parse_spectrum_csv(text: &str) -> Result<Vec<SpectrumRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::Csv(e.to_string()))?;
    if header.iter().ne(SPECTRUM_HEADER) {
        return Err(Error::Csv("unexpected spectrum header".into()));
    }
    reader
        .records()
        .map(|rec| {
            let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
            let line = rec.position().map_or(0, |p| p.line());
            let bad = |field: &str| Error::Csv(format!("line {line}: bad {field}"));
            let num = |k: usize| rec[k].parse::<f64>().map_err(|_| bad(SPECTRUM_HEADER[k]));
            Ok(SpectrumRow {
                index: rec[0].parse().map_err(|_| bad("index"))?,
                frequency: num(1)?,
                eigenvalue: c64::new(num(2)?, num(3)?),
                magnitude: num(4)?,
                power: num(5)?,
                paired_with: match &rec[6] {
                    "" => None,
                    s => Some(s.parse().map_err(|_| bad("paired_with"))?),
                },
            })
        })
        .collect()
}

/// Rows of a spectrum that the matcher should see: one per conjugate pair
/// (the non-negative member) plus unpaired complex modes. Real modes are
/// dropped.
pub fn oscillatory_rows(rows: &[SpectrumRow]) -> Vec<&SpectrumRow> {
    rows.iter()
        .filter(|r| match r.paired_with {
            Some(j) => {
                let other = rows.iter().find(|o| o.index == j);
                let other_freq = other.map_or(f64::NEG_INFINITY, |o| o.frequency);
                r.frequency > other_freq || (r.frequency == other_freq && r.index < j)
            }
            None => r.eigenvalue.im != 0.0,
        })
        .collect()
}

/// Candidate built from a spectrum row and its stored mode vector.
pub fn candidate_from_row(row: &SpectrumRow, mode: Vec<c64>) -> Candidate {
    Candidate {
        id: row.index,
        frequency: row.frequency.abs(),
        power: row.power,
        vectors: vec![mode],
    }
}

/// Matched and spurious rows in candidate order, then one undetected row
/// per level that received nothing.
pub fn match_csv(report: &MatchReport) -> String {
    let mut rows: Vec<Vec<String>> = Vec::new();
    for outcome in &report.outcomes {
        rows.push(match *outcome {
            Outcome::Matched(i) => {
                let m = &report.matched[i];
                vec![
                    m.m.to_string(),
                    m.n.to_string(),
                    fmt_f64(m.nu_analytic),
                    fmt_f64(m.nu_dmd),
                    fmt_f64(m.rel_err),
                    fmt_f64(m.max_angle_deg()),
                    fmt_f64(m.power),
                    "matched".into(),
                ]
            }
            Outcome::Spurious(i) => {
                let s = &report.spurious[i];
                vec![
                    String::new(),
                    String::new(),
                    String::new(),
                    fmt_f64(s.nu_dmd),
                    String::new(),
                    String::new(),
                    fmt_f64(s.power),
                    "spurious".into(),
                ]
            }
        });
    }
    for &k in &report.undetected {
        let level = &report.levels[k];
        let (m, n) = level.canonical();
        rows.push(vec![
            m.to_string(),
            n.to_string(),
            fmt_f64(level.frequency),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            "undetected".into(),
        ]);
    }
    table(&MATCH_HEADER, rows)
}

pub fn observable_csv(times: &[f64], values: &[f64]) -> String {
    table(
        &["t", "height_sum"],
        times
            .iter()
            .zip(values)
            .map(|(t, v)| vec![fmt_f64(*t), fmt_f64(*v)]),
    )
}

/// Binary P5 image of `|values|` on the domain grid, one pixel per node in
/// raster order (row `j` is the `j`-th grid line in y). The largest
/// magnitude maps to 255, exterior nodes to 0.
pub fn render_pgm(values: &[f64], domain: &GridDomain) -> Result<Vec<u8>> {
    let full = domain.scatter(values)?;
    if let Some(k) = full.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: k, col: 0 });
    }
    let peak = full.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut out = format!("P5\n{} {}\n255\n", domain.nx(), domain.ny()).into_bytes();
    out.extend(full.iter().map(|v| {
        if peak == 0.0 {
            0
        } else {
            (255.0 * v.abs() / peak).round() as u8
        }
    }));
    Ok(out)
}
