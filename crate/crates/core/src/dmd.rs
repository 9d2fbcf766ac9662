//! Exact dynamic mode decomposition.
//!
//! The pipeline is: compact SVD of the left-shifted data, truncation,
//! reduced operator `U^T V1 W S^-1`, its eigendecomposition, lifting of the
//! reduced eigenvectors to exact modes, and the amplitude matrix `B` that
//! expresses every left-shifted snapshot in the mode basis.

use std::f64::consts::PI;

use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};
use crate::linalg::{self, CompactSvd, EigenPairs};
use crate::snapshot::{build_data_matrices, DataMatrixPair, SnapshotMatrix};

/// Relative magnitude under which an eigenvalue is treated as zero when
/// lifting modes.
pub const ZERO_EIGENVALUE: f64 = 1e-12;

/// Default relative tolerance used to pair conjugate eigenvalues.
pub const PAIRING_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Truncation {
    /// Keep every numerically nonzero singular value.
    None,
    FixedRank(usize),
    /// Smallest rank whose cumulative squared singular values reach the
    /// given fraction of the total.
    EnergyFraction(f64),
    /// Keep singular values at or above this fraction of the largest.
    SvThreshold(f64),
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::SvThreshold(1e-10)
    }
}

impl Truncation {
    pub fn validate(self) -> Result<Self> {
        match self {
            Truncation::FixedRank(0) => Err(Error::InvalidOptions(
                "fixed rank must be at least 1".into(),
            )),
            Truncation::EnergyFraction(f) if !(f > 0.0 && f <= 1.0) => Err(Error::InvalidOptions(
                format!("energy fraction must lie in (0, 1], got {f}"),
            )),
            Truncation::SvThreshold(e) if !(e > 0.0 && e.is_finite()) => {
                Err(Error::InvalidOptions(format!(
                    "singular value threshold must be positive, got {e}"
                )))
            }
            t => Ok(t),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DmdOptions {
    pub m_stack: usize,
    pub truncation: Truncation,
}

pub fn truncation_rank(s: &[f64], policy: Truncation) -> Result<usize> {
    if s.is_empty() {
        return Err(Error::InvalidSingularValues("empty spectrum".into()));
    }
    if s.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidSingularValues(
            "values must be positive and finite".into(),
        ));
    }
    if s.windows(2).any(|p| p[0] < p[1]) {
        return Err(Error::InvalidSingularValues(
            "values must be in descending order".into(),
        ));
    }
    let r = match policy.validate()? {
        Truncation::None => s.len(),
        Truncation::FixedRank(r) => r.min(s.len()),
        Truncation::EnergyFraction(f) => {
            let total: f64 = s.iter().map(|v| v * v).sum();
            let mut acc = 0.0;
            s.iter()
                .position(|v| {
                    acc += v * v;
                    acc / total >= f
                })
                .map_or(s.len(), |k| k + 1)
        }
        Truncation::SvThreshold(eps) => s.iter().take_while(|&&v| v >= eps * s[0]).count(),
    };
    Ok(r.max(1))
}

/// Oscillation frequency in hertz of a per-step eigenvalue.
pub fn frequency_of(lambda: c64, dt: f64) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::InvalidOptions(format!(
            "sampling interval must be positive, got {dt}"
        )));
    }
    if lambda.norm() == 0.0 {
        return Err(Error::ZeroEigenvalue);
    }
    // principal argument in (-pi, pi]
    let mut arg = lambda.im.atan2(lambda.re);
    if arg <= -PI {
        arg = PI;
    }
    Ok(arg / (2.0 * PI * dt))
}

/// Mean coefficient magnitude of each row.
pub fn mode_power(b: MatRef<'_, c64>) -> Vec<f64> {
    let n = b.ncols().max(1) as f64;
    (0..b.nrows())
        .map(|i| (0..b.ncols()).map(|j| b[(i, j)].norm()).sum::<f64>() / n)
        .collect()
}

#[derive(Clone, Debug)]
pub struct Amplitudes {
    pub b: Mat<c64>,
    /// The reduced eigenvector matrix was too ill-conditioned for a plain
    /// solve; `b` is a least-squares pseudo-solution.
    pub pseudo: bool,
}

/// Coefficients of the left-shifted snapshots in the reduced eigenvector
/// basis: solves `P * B = diag(s) * W^T`.
pub fn amplitudes(svd: &CompactSvd, eig: &EigenPairs) -> Result<Amplitudes> {
    let r = svd.rank();
    if eig.right_vectors.nrows() != r || eig.right_vectors.ncols() != r {
        return Err(Error::LengthMismatch(format!(
            "{} x {} eigenvectors for rank {r}",
            eig.right_vectors.nrows(),
            eig.right_vectors.ncols()
        )));
    }
    let rhs = Mat::from_fn(r, svd.w.nrows(), |i, j| {
        c64::new(svd.s[i] * svd.w[(j, i)], 0.0)
    });
    let sol = linalg::solve_dense(eig.right_vectors.as_ref(), rhs.as_ref())?;
    Ok(Amplitudes {
        b: sol.x,
        pseudo: sol.pseudo,
    })
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub values: Mat<f64>,
    /// Largest imaginary part discarded when taking the real part.
    pub imag_max: f64,
}

/// `Re(modes * b)`.
pub fn reconstruct(modes: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Result<Reconstruction> {
    if modes.ncols() != b.nrows() {
        return Err(Error::LengthMismatch(format!(
            "{} modes with {} amplitude rows",
            modes.ncols(),
            b.nrows()
        )));
    }
    let full = modes * b;
    let mut imag_max = 0.0f64;
    let values = Mat::from_fn(full.nrows(), full.ncols(), |i, j| {
        imag_max = imag_max.max(full[(i, j)].im.abs());
        full[(i, j)].re
    });
    Ok(Reconstruction { values, imag_max })
}

#[derive(Clone, Debug)]
pub struct DmdResult {
    pub eigenvalues: Vec<c64>,
    /// Exact modes restricted to the first snapshot block, unit 2-norm,
    /// phase-rotated so the largest-magnitude entry is real positive.
    pub modes: Mat<c64>,
    /// Full-height exact modes, scaled by the same factors as `modes`.
    pub stacked_modes: Mat<c64>,
    pub frequencies: Vec<f64>,
    pub growth_magnitudes: Vec<f64>,
    pub powers: Vec<f64>,
    /// One row per mode, one column per left-shifted (stacked) snapshot.
    pub amplitudes: Mat<c64>,
    pub rank_used: usize,
    pub dt: f64,
    pub m_stack: usize,
    pub base_m: usize,
    /// Numerically nonzero singular values of the left data matrix before
    /// truncation.
    pub singular_values: Vec<f64>,
    /// Modes that fell back to the projected form `U w` because their
    /// eigenvalue is numerically zero.
    pub projected: Vec<bool>,
    pub pseudo_solved: bool,
}

impl DmdResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn mode(&self, i: usize) -> Vec<c64> {
        self.modes.col(i).iter().copied().collect()
    }

    /// Real reconstruction of snapshots `0..N'` from the unstacked modes.
    pub fn reconstruct(&self) -> Result<Reconstruction> {
        reconstruct(self.modes.as_ref(), self.amplitudes.as_ref())
    }

    /// Real reconstruction of the stacked left data matrix.
    pub fn reconstruct_stacked(&self) -> Result<Reconstruction> {
        reconstruct(self.stacked_modes.as_ref(), self.amplitudes.as_ref())
    }

    /// Copy with modes reordered; `order[k]` is the old index of new mode `k`.
    pub fn permuted(&self, order: &[usize]) -> DmdResult {
        let pick_cols =
            |m: &Mat<c64>| Mat::from_fn(m.nrows(), order.len(), |i, k| m[(i, order[k])]);
        let pick = |v: &[f64]| order.iter().map(|&k| v[k]).collect::<Vec<_>>();
        DmdResult {
            eigenvalues: order.iter().map(|&k| self.eigenvalues[k]).collect(),
            modes: pick_cols(&self.modes),
            stacked_modes: pick_cols(&self.stacked_modes),
            frequencies: pick(&self.frequencies),
            growth_magnitudes: pick(&self.growth_magnitudes),
            powers: pick(&self.powers),
            amplitudes: Mat::from_fn(order.len(), self.amplitudes.ncols(), |k, j| {
                self.amplitudes[(order[k], j)]
            }),
            rank_used: self.rank_used,
            dt: self.dt,
            m_stack: self.m_stack,
            base_m: self.base_m,
            singular_values: self.singular_values.clone(),
            projected: order.iter().map(|&k| self.projected[k]).collect(),
            pseudo_solved: self.pseudo_solved,
        }
    }
}

/// Stacks the snapshots per `opts.m_stack` and fits.
pub fn decompose(snapshots: &SnapshotMatrix, opts: &DmdOptions) -> Result<DmdResult> {
    let pair = build_data_matrices(snapshots, opts.m_stack)?;
    fit(&pair, snapshots.dt(), opts)
}

pub fn fit(pair: &DataMatrixPair, dt: f64, opts: &DmdOptions) -> Result<DmdResult> {
    let truncation = opts.truncation.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidOptions(format!(
            "sampling interval must be positive, got {dt}"
        )));
    }
    if pair.v0.nrows() != pair.v1.nrows()
        || pair.v0.ncols() != pair.v1.ncols()
        || pair.v0.nrows() != (pair.m_stack + 1) * pair.base_m
    {
        return Err(Error::LengthMismatch(
            "inconsistent data matrix pair".into(),
        ));
    }

    let full = linalg::compact_svd(pair.v0.as_ref())?;
    let r = truncation_rank(&full.s, truncation)?;
    let svd = full.truncated(r);

    // V1 W S^-1, reused for the reduced operator and the exact modes
    let mut lifted = &pair.v1 * &svd.w;
    for (j, &s) in svd.s.iter().enumerate() {
        lifted.col_mut(j).iter_mut().for_each(|v| *v /= s);
    }
    let reduced = svd.u.transpose() * &lifted;
    let eig = linalg::eig_dense(reduced.as_ref())?;

    let lambda_max = eig.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let exact = mul_real_complex(lifted.as_ref(), eig.right_vectors.as_ref());
    let projected_modes = mul_real_complex(svd.u.as_ref(), eig.right_vectors.as_ref());
    let rows = pair.v0.nrows();
    let mut stacked = Mat::<c64>::zeros(rows, r);
    let mut projected = vec![false; r];
    for (k, lambda) in eig.values.iter().enumerate() {
        if lambda.norm() < ZERO_EIGENVALUE * lambda_max || lambda_max == 0.0 {
            projected[k] = true;
            stacked.col_mut(k).copy_from(projected_modes.col(k));
        } else {
            let inv = lambda.inv();
            for i in 0..rows {
                stacked[(i, k)] = exact[(i, k)] * inv;
            }
        }
    }

    let amps = amplitudes(&svd, &eig)?;
    let mut b = amps.b;
    let mut modes = Mat::<c64>::zeros(pair.base_m, r);

    for k in 0..r {
        let column: Vec<c64> = stacked.col(k).iter().copied().collect();
        let scale = normalization(&column[..pair.base_m])
            .or_else(|| normalization(&column))
            .unwrap_or(c64::new(1.0, 0.0));
        let inv = scale.inv();
        stacked.col_mut(k).iter_mut().for_each(|v| *v *= inv);
        b.row_mut(k).iter_mut().for_each(|v| *v *= scale);
        for i in 0..pair.base_m {
            modes[(i, k)] = stacked[(i, k)];
        }
    }

    // conjugate partners of real data are exact mirrors; enforce it so
    // that paired powers and modes agree bitwise
    let pairs = adjacent_conjugates(&eig.values);
    for &(p, q) in &pairs {
        for i in 0..rows {
            stacked[(i, q)] = stacked[(i, p)].conj();
        }
        for i in 0..pair.base_m {
            modes[(i, q)] = modes[(i, p)].conj();
        }
        for j in 0..b.ncols() {
            b[(q, j)] = b[(p, j)].conj();
        }
    }

    let powers = mode_power(b.as_ref());
    let frequencies = eig
        .values
        .iter()
        .map(|&l| {
            if l.norm() == 0.0 {
                Ok(0.0)
            } else {
                frequency_of(l, dt)
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let result = DmdResult {
        growth_magnitudes: eig.values.iter().map(|v| v.norm()).collect(),
        eigenvalues: eig.values,
        modes,
        stacked_modes: stacked,
        frequencies,
        powers,
        amplitudes: b,
        rank_used: r,
        dt,
        m_stack: pair.m_stack,
        base_m: pair.base_m,
        singular_values: full.s,
        projected,
        pseudo_solved: amps.pseudo,
    };
    Ok(result.permuted(&power_order(&result.powers, &pairs)))
}

/// Unit-norm, phase-fixing divisor for a mode: its norm times the phase of
/// its largest-magnitude entry.
fn normalization(v: &[c64]) -> Option<c64> {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let peak = v.iter().copied().fold(c64::new(0.0, 0.0), |best, z| {
        if z.norm() > best.norm() {
            z
        } else {
            best
        }
    });
    (norm > 0.0 && peak.norm() > 0.0).then(|| peak / peak.norm() * norm)
}

/// `(positive, negative)` index pairs of exact conjugates as laid out by
/// [`linalg::eig_dense`].
fn adjacent_conjugates(values: &[c64]) -> Vec<(usize, usize)> {
    (0..values.len().saturating_sub(1))
        .filter(|&k| values[k].im > 0.0 && values[k + 1] == values[k].conj())
        .map(|k| (k, k + 1))
        .collect()
}

/// Descending power, conjugate pairs kept together, stable otherwise.
fn power_order(powers: &[f64], pairs: &[(usize, usize)]) -> Vec<usize> {
    let mut groups: Vec<Vec<usize>> = Vec::with_capacity(powers.len());
    let mut k = 0;
    let mut pairs = pairs.iter().peekable();
    while k < powers.len() {
        if pairs.peek().is_some_and(|&&(p, _)| p == k) {
            let &(p, q) = pairs.next().unwrap();
            groups.push(vec![p, q]);
            k = q + 1;
        } else {
            groups.push(vec![k]);
            k += 1;
        }
    }
    groups.sort_by(|g, h| powers[h[0]].total_cmp(&powers[g[0]]));
    groups.concat()
}

fn mul_real_complex(a: MatRef<'_, f64>, b: MatRef<'_, c64>) -> Mat<c64> {
    let re = Mat::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)].re);
    let im = Mat::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)].im);
    let (pr, pi) = (a * &re, a * &im);
    Mat::from_fn(pr.nrows(), pr.ncols(), |i, j| {
        c64::new(pr[(i, j)], pi[(i, j)])
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupKind {
    /// Real eigenvalue; frequency 0 (or Nyquist for negative eigenvalues).
    Real,
    /// Conjugate pair.
    Oscillatory,
    /// Complex eigenvalue without a partner inside the tolerance.
    Unpaired,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeGroup {
    pub members: Vec<usize>,
    /// Member with non-negative frequency.
    pub representative: usize,
    pub frequency: f64,
    pub power: f64,
    pub kind: GroupKind,
}

/// Groups each eigenvalue with its conjugate partner. Every mode lands in
/// exactly one group; groups keep the result's mode order.
pub fn pair_conjugates(result: &DmdResult, tol: f64) -> Vec<ModeGroup> {
    let values = &result.eigenvalues;
    let n = values.len();
    let mut used = vec![false; n];
    let mut groups = Vec::new();
    for i in 0..n {
        if used[i] {
            continue;
        }
        used[i] = true;
        let li = values[i];
        let scale = li.norm();
        let single = |kind| ModeGroup {
            members: vec![i],
            representative: i,
            frequency: result.frequencies[i],
            power: result.powers[i],
            kind,
        };
        if li.im.abs() <= tol * scale {
            groups.push(single(GroupKind::Real));
            continue;
        }
        let partner = (0..n)
            .filter(|&j| !used[j] && (values[j] - li.conj()).norm() <= tol * scale)
            .min_by(|&p, &q| {
                (values[p] - li.conj())
                    .norm()
                    .total_cmp(&(values[q] - li.conj()).norm())
            });
        match partner {
            Some(j) => {
                used[j] = true;
                let rep = if result.frequencies[i] >= 0.0 { i } else { j };
                groups.push(ModeGroup {
                    members: vec![i, j],
                    representative: rep,
                    frequency: result.frequencies[rep],
                    power: result.powers[rep],
                    kind: GroupKind::Oscillatory,
                });
            }
            None => groups.push(single(GroupKind::Unpaired)),
        }
    }
    groups
}
