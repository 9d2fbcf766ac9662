//! Closed-form square-membrane modes and the engine that scores DMD output
//! against them.
//!
//! Degenerate frequencies (several `(m, n)` with the same `m^2 + n^2`) only
//! determine a subspace, so mode shapes are compared through principal
//! angles between the DMD span and the analytic subspace.

use std::f64::consts::PI;

use faer::{c64, Mat, MatRef};

use crate::dmd::{DmdResult, GroupKind, ModeGroup};
use crate::error::{Error, Result};
use crate::membrane::GridDomain;

/// Default relative frequency window for matching.
pub const MATCH_WINDOW: f64 = 0.05;

/// Directions of a DMD span weaker than this fraction of the strongest are
/// treated as noise when building the span basis.
pub const SPAN_TOLERANCE: f64 = 1e-2;

pub fn analytic_frequency(m: u32, n: u32, c: f64) -> f64 {
    0.5 * c * ((m as f64).powi(2) + (n as f64).powi(2)).sqrt()
}

/// `sin(m pi x) sin(n pi y)` on the interior nodes of a full square,
/// normalized to unit 2-norm.
pub fn analytic_mode_field(m: u32, n: u32, domain: &GridDomain) -> Result<Vec<f64>> {
    if !domain.is_full_square() {
        return Err(Error::InvalidDomain(
            "analytic modes need the full square mask".into(),
        ));
    }
    if m == 0 || n == 0 {
        return Err(Error::InvalidDomain(
            "quantization indices start at 1".into(),
        ));
    }
    let mut values: Vec<f64> = domain
        .interior()
        .iter()
        .map(|&k| {
            let (x, y) = domain.coords(k);
            (m as f64 * PI * x).sin() * (n as f64 * PI * y).sin()
        })
        .collect();
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    values.iter_mut().for_each(|v| *v /= norm);
    Ok(values)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticMode {
    pub m: u32,
    pub n: u32,
    pub frequency: f64,
    /// Interior values in snapshot order, unit 2-norm.
    pub field: Vec<f64>,
}

impl AnalyticMode {
    pub fn new(m: u32, n: u32, c: f64, domain: &GridDomain) -> Result<Self> {
        Ok(Self {
            m,
            n,
            frequency: analytic_frequency(m, n, c),
            field: analytic_mode_field(m, n, domain)?,
        })
    }
}

/// All `(m, n)` sharing one analytic frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyLevel {
    pub frequency: f64,
    /// Index pairs with `m <= n` listed first for each unordered pair.
    pub indices: Vec<(u32, u32)>,
}

impl FrequencyLevel {
    pub fn multiplicity(&self) -> usize {
        self.indices.len()
    }

    /// Representative index pair, the one with the smallest `m`.
    pub fn canonical(&self) -> (u32, u32) {
        self.indices[0]
    }
}

/// Analytic frequencies up to `max_freq`, ascending, grouped by degeneracy.
pub fn analytic_levels(c: f64, max_freq: f64) -> Vec<FrequencyLevel> {
    if !(c > 0.0 && max_freq > 0.0) {
        return Vec::new();
    }
    let limit = (2.0 * max_freq / c).floor() as u32 + 1;
    let mut by_norm: std::collections::BTreeMap<u32, Vec<(u32, u32)>> = Default::default();
    for m in 1..=limit {
        for n in 1..=limit {
            if analytic_frequency(m, n, c) <= max_freq {
                by_norm.entry(m * m + n * n).or_default().push((m, n));
            }
        }
    }
    by_norm
        .into_iter()
        .map(|(sq, indices)| FrequencyLevel {
            frequency: 0.5 * c * (sq as f64).sqrt(),
            indices,
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchSettings {
    pub c: f64,
    pub max_freq: f64,
    pub window: f64,
}

impl MatchSettings {
    pub fn new(c: f64, max_freq: f64) -> Self {
        Self {
            c,
            max_freq,
            window: MATCH_WINDOW,
        }
    }
}

/// One oscillatory DMD group as seen by the matcher.
#[derive(Clone, Debug)]
pub struct Candidate {
    /// Mode index of the group representative.
    pub id: usize,
    pub frequency: f64,
    pub power: f64,
    /// Mode vectors of the group, interior snapshot order.
    pub vectors: Vec<Vec<c64>>,
}

/// Oscillatory (and unpaired complex) groups of a DMD result.
pub fn candidates(result: &DmdResult, groups: &[ModeGroup]) -> Vec<Candidate> {
    groups
        .iter()
        .filter(|g| g.kind != GroupKind::Real)
        .map(|g| Candidate {
            id: g.representative,
            frequency: g.frequency.abs(),
            power: g.power,
            vectors: vec![result.mode(g.representative)],
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchedGroup {
    pub id: usize,
    pub level: usize,
    pub m: u32,
    pub n: u32,
    pub nu_analytic: f64,
    pub nu_dmd: f64,
    pub rel_err: f64,
    /// Principal angles in degrees between this group's span and the
    /// analytic subspace of its level.
    pub principal_angles_deg: Vec<f64>,
    pub power: f64,
    /// Another analytic frequency also fell inside the window.
    pub ambiguous: bool,
}

impl MatchedGroup {
    pub fn max_angle_deg(&self) -> f64 {
        self.principal_angles_deg
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpuriousGroup {
    pub id: usize,
    pub nu_dmd: f64,
    pub power: f64,
}

/// Combined comparison for every analytic level that received groups.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelMatch {
    pub level: usize,
    pub groups: Vec<usize>,
    /// Principal angles between the span of all its groups and the level's
    /// analytic subspace.
    pub principal_angles_deg: Vec<f64>,
}

impl LevelMatch {
    pub fn max_angle_deg(&self) -> f64 {
        self.principal_angles_deg
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }
}

/// Where a candidate ended up, as an index into `matched` or `spurious`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Matched(usize),
    Spurious(usize),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MatchReport {
    pub levels: Vec<FrequencyLevel>,
    /// In candidate order.
    pub matched: Vec<MatchedGroup>,
    pub spurious: Vec<SpuriousGroup>,
    /// Indices into `levels` that received no group.
    pub undetected: Vec<usize>,
    pub level_matches: Vec<LevelMatch>,
    /// One entry per candidate, in candidate order.
    pub outcomes: Vec<Outcome>,
}

impl MatchReport {
    pub fn level_match_for(&self, frequency: f64) -> Option<&LevelMatch> {
        self.level_matches
            .iter()
            .find(|lm| (self.levels[lm.level].frequency - frequency).abs() <= 1e-12 * frequency)
    }
}

/// Scores a DMD result from a square-membrane run.
pub fn match_modes(
    result: &DmdResult,
    groups: &[ModeGroup],
    domain: &GridDomain,
    settings: &MatchSettings,
) -> Result<MatchReport> {
    match_candidates(&candidates(result, groups), domain, settings)
}

/// Greedy matching in candidate order: each candidate takes the nearest
/// analytic level inside the window that still has free multiplicity.
pub fn match_candidates(
    candidates: &[Candidate],
    domain: &GridDomain,
    settings: &MatchSettings,
) -> Result<MatchReport> {
    let levels = analytic_levels(settings.c, settings.max_freq);
    let mut free: Vec<usize> = levels.iter().map(FrequencyLevel::multiplicity).collect();
    let mut bases: Vec<Option<Mat<f64>>> = vec![None; levels.len()];
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); levels.len()];
    let mut report = MatchReport::default();

    for (ci, cand) in candidates.iter().enumerate() {
        if let Some(v) = cand
            .vectors
            .iter()
            .find(|v| v.len() != domain.interior_len())
        {
            return Err(Error::LengthMismatch(format!(
                "mode of length {} for {} interior nodes",
                v.len(),
                domain.interior_len()
            )));
        }
        let rel = |l: &FrequencyLevel| (cand.frequency - l.frequency).abs() / l.frequency;
        let inside: Vec<usize> = (0..levels.len())
            .filter(|&k| rel(&levels[k]) <= settings.window)
            .collect();
        let pick = inside
            .iter()
            .copied()
            .filter(|&k| free[k] > 0)
            .min_by(|&a, &b| rel(&levels[a]).total_cmp(&rel(&levels[b])));
        let Some(k) = pick else {
            report
                .outcomes
                .push(Outcome::Spurious(report.spurious.len()));
            report.spurious.push(SpuriousGroup {
                id: cand.id,
                nu_dmd: cand.frequency,
                power: cand.power,
            });
            continue;
        };
        free[k] -= 1;
        members[k].push(ci);
        if bases[k].is_none() {
            bases[k] = Some(level_basis(&levels[k], domain)?);
        }
        let span = span_basis(&cand.vectors);
        let (m, n) = levels[k].canonical();
        report.outcomes.push(Outcome::Matched(report.matched.len()));
        report.matched.push(MatchedGroup {
            id: cand.id,
            level: k,
            m,
            n,
            nu_analytic: levels[k].frequency,
            nu_dmd: cand.frequency,
            rel_err: rel(&levels[k]),
            principal_angles_deg: principal_angles_deg(
                span.as_ref(),
                bases[k].as_ref().unwrap().as_ref(),
            ),
            power: cand.power,
            ambiguous: inside.len() > 1,
        });
    }

    for (k, idx) in members.iter().enumerate() {
        if idx.is_empty() {
            report.undetected.push(k);
            continue;
        }
        let vectors: Vec<Vec<c64>> = idx
            .iter()
            .flat_map(|&ci| candidates[ci].vectors.clone())
            .collect();
        let span = span_basis(&vectors);
        report.level_matches.push(LevelMatch {
            level: k,
            groups: idx.iter().map(|&ci| candidates[ci].id).collect(),
            principal_angles_deg: principal_angles_deg(
                span.as_ref(),
                bases[k].as_ref().unwrap().as_ref(),
            ),
        });
    }
    report.levels = levels;
    Ok(report)
}

fn level_basis(level: &FrequencyLevel, domain: &GridDomain) -> Result<Mat<f64>> {
    let fields = level
        .indices
        .iter()
        .map(|&(m, n)| analytic_mode_field(m, n, domain))
        .collect::<Result<Vec<_>>>()?;
    Ok(Mat::from_fn(domain.interior_len(), fields.len(), |i, j| {
        fields[j][i]
    }))
}

/// Orthonormal basis for the real span of the real and imaginary parts of
/// `vectors`, dropping directions below [`SPAN_TOLERANCE`].
pub fn span_basis(vectors: &[Vec<c64>]) -> Mat<f64> {
    let rows = vectors.first().map_or(0, Vec::len);
    let raw = Mat::from_fn(rows, 2 * vectors.len(), |i, j| {
        let z = vectors[j / 2][i];
        if j % 2 == 0 {
            z.re
        } else {
            z.im
        }
    });
    orthonormal_columns(raw.as_ref(), SPAN_TOLERANCE)
}

fn orthonormal_columns(a: MatRef<'_, f64>, tol: f64) -> Mat<f64> {
    if a.nrows() == 0 || a.ncols() == 0 || a.norm_max() == 0.0 {
        return Mat::zeros(a.nrows(), 0);
    }
    let Ok(svd) = a.thin_svd() else {
        return Mat::zeros(a.nrows(), 0);
    };
    let s: Vec<f64> = svd.S().column_vector().iter().copied().collect();
    let keep = s.iter().take_while(|&&v| v > tol * s[0]).count();
    svd.U().get(.., ..keep).to_owned()
}

/// Principal angles in degrees, ascending, between the column spans of two
/// orthonormal bases; there are `min(p, q)` of them.
pub fn principal_angles_deg(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Vec<f64> {
    let (a, b) = if b.ncols() <= a.ncols() {
        (a, b)
    } else {
        (b, a)
    };
    let k = b.ncols();
    if k == 0 {
        return Vec::new();
    }
    let overlap = a.transpose() * b;
    let residual = b - a * &overlap;
    let (Ok(cos), Ok(sin)) = (overlap.singular_values(), residual.singular_values()) else {
        return vec![90.0; k];
    };
    // cosines lose precision near zero angle, sines near a right angle
    (0..k)
        .map(|i| {
            let c = cos[i].clamp(0.0, 1.0);
            let s = sin[k - 1 - i].clamp(0.0, 1.0);
            if c * c < 0.5 { c.acos() } else { s.asin() }.to_degrees()
        })
        .collect()
}
