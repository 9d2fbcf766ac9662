//! Dense kernels: compact SVD, real nonsymmetric eigendecomposition and a
//! small complex solver with a pseudo-inverse fallback. Backed by `faer`.

use faer::prelude::*;
use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};

/// Singular values below `RANK_TOLERANCE * s_max` are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Condition number above which [`solve_dense`] switches to the
/// pseudo-inverse.
pub const CONDITION_LIMIT: f64 = 1e12;

/// `a = u * diag(s) * w^T` with only the numerically nonzero singular
/// triplets kept.
#[derive(Clone, Debug)]
pub struct CompactSvd {
    pub u: Mat<f64>,
    pub s: Vec<f64>,
    pub w: Mat<f64>,
}

impl CompactSvd {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// Leading `r` triplets (clamped to the available rank).
    pub fn truncated(&self, r: usize) -> CompactSvd {
        let r = r.min(self.rank());
        CompactSvd {
            u: self.u.get(.., ..r).to_owned(),
            s: self.s[..r].to_vec(),
            w: self.w.get(.., ..r).to_owned(),
        }
    }

    pub fn reconstruct(&self) -> Mat<f64> {
        let mut us = self.u.clone();
        for (j, &s) in self.s.iter().enumerate() {
            us.col_mut(j).iter_mut().for_each(|v| *v *= s);
        }
        &us * self.w.transpose()
    }
}

pub fn compact_svd(a: MatRef<'_, f64>) -> Result<CompactSvd> {
    check_finite(a)?;
    if a.nrows() == 0 || a.ncols() == 0 || a.norm_max() == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let svd = a.thin_svd().map_err(|_| Error::SvdNoConvergence)?;
    let all: Vec<f64> = svd.S().column_vector().iter().copied().collect();
    let cutoff = RANK_TOLERANCE * all[0];
    let r = all.iter().take_while(|&&s| s > cutoff).count();
    Ok(CompactSvd {
        u: svd.U().get(.., ..r).to_owned(),
        s: all[..r].to_vec(),
        w: svd.V().get(.., ..r).to_owned(),
    })
}

/// Eigenvalues with unit-norm right eigenvectors in the matching columns.
#[derive(Clone, Debug)]
pub struct EigenPairs {
    pub values: Vec<c64>,
    pub right_vectors: Mat<c64>,
}

/// Eigendecomposition of a real square matrix.
///
/// Eigenvalues come out sorted by descending magnitude; each complex
/// conjugate pair is adjacent with the positive-imaginary member first.
pub fn eig_dense(a: MatRef<'_, f64>) -> Result<EigenPairs> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::LengthMismatch(format!(
            "eigendecomposition needs a nonempty square matrix, got {} x {}",
            a.nrows(),
            a.ncols()
        )));
    }
    check_finite(a)?;
    let evd = a.eigen().map_err(|_| Error::EigenNoConvergence)?;
    let values: Vec<c64> = evd.S().column_vector().iter().copied().collect();
    if values
        .iter()
        .any(|v| !(v.re.is_finite() && v.im.is_finite()))
    {
        return Err(Error::EigenNoConvergence);
    }
    let order = conjugate_order(&values);
    let n = values.len();
    let mut vectors = Mat::<c64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = evd.U().col(src);
        let norm = col.norm_l2();
        for i in 0..n {
            vectors[(i, dst)] = if norm > 0.0 { col[i] / norm } else { col[i] };
        }
    }
    Ok(EigenPairs {
        values: order.iter().map(|&k| values[k]).collect(),
        right_vectors: vectors,
    })
}

/// Permutation that sorts by descending magnitude while keeping conjugate
/// partners adjacent.
fn conjugate_order(values: &[c64]) -> Vec<usize> {
    let n = values.len();
    let mut used = vec![false; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        if used[i] {
            continue;
        }
        used[i] = true;
        if values[i].im == 0.0 {
            groups.push(vec![i]);
            continue;
        }
        let target = values[i].conj();
        let partner = (0..n)
            .filter(|&j| !used[j] && values[j].im.signum() != values[i].im.signum())
            .min_by(|&p, &q| {
                (values[p] - target)
                    .norm()
                    .total_cmp(&(values[q] - target).norm())
            });
        match partner {
            Some(j)
                if (values[j] - target).norm()
                    <= 1e-8 * values[i].norm().max(f64::MIN_POSITIVE) =>
            {
                used[j] = true;
                if values[i].im > 0.0 {
                    groups.push(vec![i, j]);
                } else {
                    groups.push(vec![j, i]);
                }
            }
            _ => groups.push(vec![i]),
        }
    }
    groups.sort_by(|g, h| {
        let (a, b) = (values[g[0]], values[h[0]]);
        b.norm()
            .total_cmp(&a.norm())
            .then(b.re.total_cmp(&a.re))
            .then(b.im.total_cmp(&a.im))
    });
    groups.concat()
}

#[derive(Clone, Debug)]
pub struct DenseSolution {
    pub x: Mat<c64>,
    /// Set when the system was too ill-conditioned for LU and the
    /// least-squares pseudo-solution was returned instead.
    pub pseudo: bool,
    pub condition: f64,
}

/// Solves `a * x = b` for square complex `a`.
pub fn solve_dense(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Result<DenseSolution> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(Error::LengthMismatch(format!(
            "cannot solve {} x {} system with {} right-hand rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    if n == 0 {
        return Ok(DenseSolution {
            x: Mat::zeros(0, b.ncols()),
            pseudo: false,
            condition: 1.0,
        });
    }
    let svd = a.svd().map_err(|_| Error::SvdNoConvergence)?;
    let s: Vec<f64> = svd.S().column_vector().iter().map(|v| v.re).collect();
    let (s_max, s_min) = (s[0], s[n - 1]);
    let condition = if s_min > 0.0 {
        s_max / s_min
    } else {
        f64::INFINITY
    };

    if condition <= CONDITION_LIMIT {
        let x = a.partial_piv_lu().solve(b);
        return Ok(DenseSolution {
            x,
            pseudo: false,
            condition,
        });
    }

    // pseudo-inverse: V * diag(1/s) * U^H * b over the numerically nonzero part
    let cutoff = RANK_TOLERANCE * s_max;
    let mut projected = svd.U().adjoint() * b;
    for (i, &si) in s.iter().enumerate() {
        let scale = if si > cutoff { 1.0 / si } else { 0.0 };
        projected.row_mut(i).iter_mut().for_each(|v| *v *= scale);
    }
    let x = svd.V() * &projected;

    let exactly_singular = s_min <= n as f64 * f64::EPSILON * s_max;
    if exactly_singular {
        let residual = (a * &x - b).norm_l2();
        if residual > 1e-8 * (s_max * x.norm_l2() + b.norm_l2()) {
            return Err(Error::SingularSystem);
        }
    }
    Ok(DenseSolution {
        x,
        pseudo: true,
        condition,
    })
}

fn check_finite(a: MatRef<'_, f64>) -> Result<()> {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if !a[(i, j)].is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

pub fn to_complex(a: MatRef<'_, f64>) -> Mat<c64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| c64::new(a[(i, j)], 0.0))
}
