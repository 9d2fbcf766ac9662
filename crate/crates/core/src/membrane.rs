//! Damped 2D wave equation `h_tt = c^2 lap(h) - gamma h_t` on a masked
//! uniform grid with the field pinned to zero outside the mask.
//!
//! Fields are stored as full `nx * ny` arrays indexed `j * nx + i`, where
//! `i` runs along x and `j` along y; node `(i, j)` sits at `(i h, j h)`.
//! Snapshots hold only the interior nodes, in that same raster order.

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::snapshot::SnapshotMatrix;

/// Fraction of the explicit-scheme stability limit used for time steps.
pub const CFL_SAFETY: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct GridDomain {
    nx: usize,
    ny: usize,
    h: f64,
    mask: Vec<bool>,
    interior: Vec<usize>,
}

impl GridDomain {
    pub fn new(nx: usize, ny: usize, h: f64, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != nx * ny {
            return Err(Error::InvalidDomain(format!(
                "mask has {} cells for a {nx} x {ny} grid",
                mask.len()
            )));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidDomain(format!(
                "grid spacing must be positive, got {h}"
            )));
        }
        let interior: Vec<usize> = (0..nx * ny).filter(|&k| mask[k]).collect();
        if interior.is_empty() {
            return Err(Error::InvalidDomain("mask has no interior cell".into()));
        }
        if let Some(&k) = interior
            .iter()
            .find(|&&k| k % nx == 0 || k % nx == nx - 1 || k / nx == 0 || k / nx == ny - 1)
        {
            return Err(Error::InvalidDomain(format!(
                "interior cell ({}, {}) touches the grid edge",
                k % nx,
                k / nx
            )));
        }
        Ok(Self {
            nx,
            ny,
            h,
            mask,
            interior,
        })
    }

    /// Unit square sampled with `n` points per side, boundary nodes pinned.
    pub fn square(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidDomain(format!(
                "square grid needs at least 3 points, got {n}"
            )));
        }
        let mask = (0..n * n)
            .map(|k| {
                let (i, j) = (k % n, k / n);
                i > 0 && i < n - 1 && j > 0 && j < n - 1
            })
            .collect();
        Self::new(n, n, 1.0 / (n - 1) as f64, mask)
    }

    /// Parses an ASCII mask (`#` interior, `.` exterior, one grid row per
    /// line). The grid is scaled so its longer side spans the unit length.
    pub fn parse_mask(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text
            .lines()
            .map(|l| l.trim_end_matches('\r'))
            .filter(|l| !l.is_empty())
            .collect();
        let nx = lines.first().map_or(0, |l| l.chars().count());
        if lines.iter().any(|l| l.chars().count() != nx) {
            return Err(Error::InvalidDomain("mask lines differ in length".into()));
        }
        let mut mask = Vec::with_capacity(nx * lines.len());
        for (row, line) in lines.iter().enumerate() {
            for (col, ch) in line.chars().enumerate() {
                mask.push(match ch {
                    '#' => true,
                    '.' => false,
                    other => {
                        return Err(Error::InvalidDomain(format!(
                            "unexpected character {other:?} at line {}, column {}",
                            row + 1,
                            col + 1
                        )))
                    }
                });
            }
        }
        let ny = lines.len();
        if nx < 3 || ny < 3 {
            return Err(Error::InvalidDomain(format!(
                "mask of {nx} x {ny} is too small"
            )));
        }
        Self::new(nx, ny, 1.0 / (nx.max(ny) - 1) as f64, mask)
    }

    pub fn to_mask_string(&self) -> String {
        let mut out = String::with_capacity((self.nx + 1) * self.ny);
        for row in self.mask.chunks_exact(self.nx) {
            out.extend(row.iter().map(|&m| if m { '#' } else { '.' }));
            out.push('\n');
        }
        out
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Raster indices of the interior nodes, in snapshot order.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn interior_len(&self) -> usize {
        self.interior.len()
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coords(&self, k: usize) -> (f64, f64) {
        ((k % self.nx) as f64 * self.h, (k / self.nx) as f64 * self.h)
    }

    /// True for the plain unit square with a one-node pinned border.
    pub fn is_full_square(&self) -> bool {
        self.nx == self.ny
            && self.mask.iter().enumerate().all(|(k, &m)| {
                let (i, j) = (k % self.nx, k / self.nx);
                m == (i > 0 && i < self.nx - 1 && j > 0 && j < self.ny - 1)
            })
    }

    /// Interior values of a full field, in snapshot order.
    pub fn gather(&self, field: &[f64]) -> Vec<f64> {
        self.interior.iter().map(|&k| field[k]).collect()
    }

    /// Full field from interior values; exterior nodes are zero.
    pub fn scatter(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.interior.len() {
            return Err(Error::LengthMismatch(format!(
                "{} values for {} interior nodes",
                values.len(),
                self.interior.len()
            )));
        }
        let mut field = vec![0.0; self.len()];
        for (&k, &v) in self.interior.iter().zip(values) {
            field[k] = v;
        }
        Ok(field)
    }

    /// Largest stable explicit step for wave speed `c`, before the safety
    /// factor.
    pub fn stability_limit(&self, c: f64) -> f64 {
        self.h / (c * SQRT_2)
    }

    /// `(h_E + h_W) + (h_N + h_S) - 4 h`, without the `1/h^2` factor.
    /// Evaluated at interior nodes only; the x and y pairs are summed
    /// separately so transposed inputs give bitwise transposed outputs.
    fn laplacian_sum(&self, field: &[f64], k: usize) -> f64 {
        let nx = self.nx;
        (field[k + 1] + field[k - 1]) + (field[k + nx] + field[k - nx]) - 4.0 * field[k]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveConfig {
    pub c: f64,
    pub gamma: f64,
    pub ic_center: (f64, f64),
    pub ic_sigma: f64,
    pub ic_amplitude: f64,
    pub dt_sim: f64,
    pub t_end: f64,
    pub n_samples: usize,
}

impl Default for WaveConfig {
    /// Unit wave speed, no damping, `sigma = 0.1` Gaussian of height 1 at
    /// (0.3, 0.4), 1000 samples over ten seconds; time step fitted to the
    /// default 41-point square.
    fn default() -> Self {
        let mut cfg = Self {
            c: 1.0,
            gamma: 0.0,
            ic_center: (0.3, 0.4),
            ic_sigma: 0.1,
            ic_amplitude: 1.0,
            dt_sim: 0.0,
            t_end: 10.0,
            n_samples: 1000,
        };
        cfg.dt_sim = cfg.fitted_step(1.0 / 40.0);
        cfg
    }
}

impl WaveConfig {
    /// Sampling interval between recorded snapshots.
    pub fn sample_interval(&self) -> f64 {
        self.t_end / (self.n_samples.max(2) - 1) as f64
    }

    /// Largest step that divides the sampling interval evenly and respects
    /// the CFL bound on a grid of spacing `h`.
    pub fn fitted_step(&self, h: f64) -> f64 {
        let limit = CFL_SAFETY * h / (self.c * SQRT_2);
        let dt = self.sample_interval();
        let k = (dt / limit).ceil().max(1.0);
        dt / k
    }

    pub fn fit_step(&mut self, domain: &GridDomain) {
        self.dt_sim = self.fitted_step(domain.h());
    }

    pub fn steps_per_sample(&self) -> usize {
        (self.sample_interval() / self.dt_sim).round() as usize
    }

    pub fn validate(&self, domain: &GridDomain) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad(format!("wave speed must be positive, got {}", self.c));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad(format!("damping must be non-negative, got {}", self.gamma));
        }
        if !(self.ic_sigma > 0.0 && self.ic_sigma.is_finite()) {
            return bad(format!(
                "gaussian width must be positive, got {}",
                self.ic_sigma
            ));
        }
        if !self.ic_amplitude.is_finite() {
            return bad("amplitude must be finite".into());
        }
        if self.n_samples < 2 {
            return bad(format!(
                "at least 2 samples required, got {}",
                self.n_samples
            ));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("end time must be positive, got {}", self.t_end));
        }
        let limit = CFL_SAFETY * domain.stability_limit(self.c);
        if !(self.dt_sim > 0.0) || self.dt_sim > limit * (1.0 + 1e-12) {
            return bad(format!("solver step {} outside (0, {limit}]", self.dt_sim));
        }
        let dt = self.sample_interval();
        let k = (dt / self.dt_sim).round();
        if k < 1.0 || (k * self.dt_sim - dt).abs() > 1e-9 * dt {
            return bad(format!(
                "sampling interval {dt} is not a multiple of the solver step {}",
                self.dt_sim
            ));
        }
        Ok(())
    }
}

/// Gaussian bump on the interior nodes, zero elsewhere.
pub fn gaussian_ic(domain: &GridDomain, cfg: &WaveConfig) -> Vec<f64> {
    let (cx, cy) = cfg.ic_center;
    let two_s2 = 2.0 * cfg.ic_sigma * cfg.ic_sigma;
    let mut field = vec![0.0; domain.len()];
    for &k in domain.interior() {
        let (x, y) = domain.coords(k);
        let r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        field[k] = cfg.ic_amplitude * (-r2 / two_s2).exp();
    }
    field
}

/// Field at the current and previous solver step.
#[derive(Clone, Debug, PartialEq)]
pub struct MembraneState {
    pub current: Vec<f64>,
    pub previous: Vec<f64>,
}

impl MembraneState {
    /// State at rest in `field`: the previous level is the second-order
    /// Taylor extrapolation back one step with zero initial velocity.
    pub fn at_rest(domain: &GridDomain, cfg: &WaveConfig, field: Vec<f64>) -> Self {
        let courant2 = (cfg.c * cfg.dt_sim / domain.h()).powi(2);
        let mut previous = vec![0.0; field.len()];
        for &k in domain.interior() {
            previous[k] = field[k] + 0.5 * courant2 * domain.laplacian_sum(&field, k);
        }
        Self {
            current: field,
            previous,
        }
    }

    /// State in `field` moving with `velocity`; second-order accurate like
    /// [`MembraneState::at_rest`].
    pub fn with_velocity(
        domain: &GridDomain,
        cfg: &WaveConfig,
        field: Vec<f64>,
        velocity: &[f64],
    ) -> Self {
        let mut state = Self::at_rest(domain, cfg, field);
        for &k in domain.interior() {
            state.previous[k] -= cfg.dt_sim * velocity[k];
        }
        state
    }

    pub fn reversed(self) -> Self {
        Self {
            current: self.previous,
            previous: self.current,
        }
    }
}

/// One explicit central-difference step with centred damping.
pub fn step(state: &MembraneState, domain: &GridDomain, cfg: &WaveConfig) -> MembraneState {
    let mut next = vec![0.0; domain.len()];
    advance(&state.current, &state.previous, &mut next, domain, cfg);
    MembraneState {
        current: next,
        previous: state.current.clone(),
    }
}

fn advance(
    current: &[f64],
    previous: &[f64],
    next: &mut [f64],
    domain: &GridDomain,
    cfg: &WaveConfig,
) {
    let courant2 = (cfg.c * cfg.dt_sim / domain.h()).powi(2);
    let g = 0.5 * cfg.gamma * cfg.dt_sim;
    let (lag, denom) = (1.0 - g, 1.0 + g);
    for &k in domain.interior() {
        let lap = domain.laplacian_sum(current, k);
        next[k] = (2.0 * current[k] - lag * previous[k] + courant2 * lap) / denom;
    }
}

/// Runs from the Gaussian initial condition and records the interior every
/// sampling interval, starting at t = 0.
pub fn simulate(domain: &GridDomain, cfg: &WaveConfig) -> Result<SnapshotMatrix> {
    simulate_from(domain, cfg, gaussian_ic(domain, cfg))
}

/// Like [`simulate`] but starting at rest in an arbitrary field.
pub fn simulate_from(
    domain: &GridDomain,
    cfg: &WaveConfig,
    initial: Vec<f64>,
) -> Result<SnapshotMatrix> {
    cfg.validate(domain)?;
    if initial.len() != domain.len() {
        return Err(Error::LengthMismatch(format!(
            "initial field has {} nodes, grid has {}",
            initial.len(),
            domain.len()
        )));
    }
    run(domain, cfg, initial, |_, _| {})
}

/// Like [`simulate`] but starting from an arbitrary two-level state.
pub fn simulate_state(
    domain: &GridDomain,
    cfg: &WaveConfig,
    initial: MembraneState,
) -> Result<SnapshotMatrix> {
    cfg.validate(domain)?;
    for field in [&initial.current, &initial.previous] {
        if field.len() != domain.len() {
            return Err(Error::LengthMismatch(format!(
                "initial field has {} nodes, grid has {}",
                field.len(),
                domain.len()
            )));
        }
    }
    run_state(domain, cfg, initial, |_, _| {})
}

/// Same as [`simulate`], also calling `observe(sample_index, state)` at
/// every recorded sample.
pub fn simulate_observed(
    domain: &GridDomain,
    cfg: &WaveConfig,
    observe: impl FnMut(usize, &MembraneState),
) -> Result<SnapshotMatrix> {
    cfg.validate(domain)?;
    run(domain, cfg, gaussian_ic(domain, cfg), observe)
}

fn run(
    domain: &GridDomain,
    cfg: &WaveConfig,
    mut initial: Vec<f64>,
    observe: impl FnMut(usize, &MembraneState),
) -> Result<SnapshotMatrix> {
    for (k, v) in initial.iter_mut().enumerate() {
        if !domain.mask[k] {
            *v = 0.0;
        }
    }
    let state = MembraneState::at_rest(domain, cfg, initial);
    run_state(domain, cfg, state, observe)
}

fn run_state(
    domain: &GridDomain,
    cfg: &WaveConfig,
    mut state: MembraneState,
    mut observe: impl FnMut(usize, &MembraneState),
) -> Result<SnapshotMatrix> {
    for k in 0..domain.len() {
        if !domain.mask[k] {
            state.current[k] = 0.0;
            state.previous[k] = 0.0;
        }
    }
    let peak = state
        .current
        .iter()
        .chain(&state.previous)
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let ceiling = 1e6 * cfg.ic_amplitude.abs().max(peak);
    let per_sample = cfg.steps_per_sample().max(1);

    let mut scratch = vec![0.0; domain.len()];
    let mut data = Vec::with_capacity(cfg.n_samples * domain.interior_len());
    data.extend(domain.gather(&state.current));
    observe(0, &state);
    for sample in 1..cfg.n_samples {
        for _ in 0..per_sample {
            advance(&state.current, &state.previous, &mut scratch, domain, cfg);
            std::mem::swap(&mut state.previous, &mut state.current);
            std::mem::swap(&mut state.current, &mut scratch);
        }
        let max = domain
            .interior()
            .iter()
            .fold(0.0f64, |m, &k| m.max(state.current[k].abs()));
        if !(max <= ceiling) {
            return Err(Error::BlowUp {
                step: sample * per_sample,
            });
        }
        data.extend(domain.gather(&state.current));
        observe(sample, &state);
    }
    SnapshotMatrix::new(
        domain.interior_len(),
        cfg.n_samples,
        cfg.sample_interval(),
        data,
    )
}

/// Sum of the field values; the scalar observable plotted over time.
pub fn height_sum(values: &[f64]) -> f64 {
    values.iter().sum()
}

/// Discrete energy between two consecutive solver levels,
/// `(h^2 / 2) * sum[((u - u_prev) / dt)^2 + c^2 grad(u) . grad(u_prev)]`.
///
/// Pairing the gradients of both levels makes this exactly conserved by the
/// undamped scheme and non-increasing under damping.
pub fn discrete_energy(state: &MembraneState, domain: &GridDomain, cfg: &WaveConfig) -> f64 {
    let (u, p) = (&state.current, &state.previous);
    let (nx, ny, h) = (domain.nx, domain.ny, domain.h);
    let kinetic: f64 = domain
        .interior()
        .iter()
        .map(|&k| ((u[k] - p[k]) / cfg.dt_sim).powi(2))
        .sum();
    let mut potential = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            if i + 1 < nx {
                potential += (u[k + 1] - u[k]) * (p[k + 1] - p[k]);
            }
            if j + 1 < ny {
                potential += (u[k + nx] - u[k]) * (p[k + nx] - p[k]);
            }
        }
    }
    0.5 * h * h * (kinetic + cfg.c * cfg.c * potential / (h * h))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(domain: &GridDomain, gamma: f64, t_end: f64, n_samples: usize) -> WaveConfig {
        let mut cfg = WaveConfig {
            gamma,
            t_end,
            n_samples,
            ..WaveConfig::default()
        };
        cfg.fit_step(domain);
        cfg
    }

    fn rk4_damped_oscillator(k: f64, gamma: f64, x0: f64, t_end: f64, steps: usize) -> f64 {
        let f = |x: f64, v: f64| (v, -k * x - gamma * v);
        let dt = t_end / steps as f64;
        let (mut x, mut v) = (x0, 0.0);
        for _ in 0..steps {
            let (k1x, k1v) = f(x, v);
            let (k2x, k2v) = f(x + 0.5 * dt * k1x, v + 0.5 * dt * k1v);
            let (k3x, k3v) = f(x + 0.5 * dt * k2x, v + 0.5 * dt * k2v);
            let (k4x, k4v) = f(x + dt * k3x, v + dt * k3v);
            x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        }
        x
    }

    #[test]
    fn square_domain_shape() {
        let d = GridDomain::square(41).unwrap();
        assert_eq!(d.interior_len(), 39 * 39);
        assert!(d.is_full_square());
        assert!((d.h() - 0.025).abs() < 1e-15);
        assert!(GridDomain::square(2).is_err());
    }

    #[test]
    fn mask_parsing() {
        let d = GridDomain::parse_mask("....\n.##.\n.#..\n....\n").unwrap();
        assert_eq!((d.nx(), d.ny(), d.interior_len()), (4, 4, 3));
        assert!(!d.is_full_square());
        assert_eq!(d.to_mask_string(), "....\n.##.\n.#..\n....\n");
        assert!(GridDomain::parse_mask("...\n.#\n...\n").is_err());
        assert!(GridDomain::parse_mask("...\n.x.\n...\n").is_err());
        assert!(GridDomain::parse_mask("#..\n...\n...\n").is_err());
        assert!(GridDomain::parse_mask("...\n...\n...\n").is_err());
    }

    #[test]
    fn gaussian_cases() {
        let d = GridDomain::square(41).unwrap();
        let zero = gaussian_ic(
            &d,
            &WaveConfig {
                ic_amplitude: 0.0,
                ..WaveConfig::default()
            },
        );
        assert!(zero.iter().all(|&v| v == 0.0));

        let cfg = WaveConfig::default();
        let ic = gaussian_ic(&d, &cfg);
        let at =
            |x: f64, y: f64| ic[(y * 40.0).round() as usize * 41 + (x * 40.0).round() as usize];
        assert!((at(0.3, 0.4) - 1.0).abs() < 1e-12);
        assert!((at(0.4, 0.4) - (-0.5f64).exp()).abs() < 1e-12);
        assert!((at(0.4, 0.4) - 0.6065).abs() < 1e-4);
        assert!(d.mask().iter().zip(&ic).all(|(&m, &v)| m || v == 0.0));
    }

    #[test]
    fn zero_state_stays_zero() {
        let d = GridDomain::square(9).unwrap();
        let cfg = small_config(&d, 0.3, 1.0, 11);
        let mut s = MembraneState {
            current: vec![0.0; d.len()],
            previous: vec![0.0; d.len()],
        };
        for _ in 0..20 {
            s = step(&s, &d, &cfg);
        }
        assert!(s.current.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn spike_update_matches_stencil() {
        let d = GridDomain::square(7).unwrap();
        let cfg = small_config(&d, 0.0, 1.0, 11);
        let k = 3 * 7 + 3;
        let spike = 0.7;
        let mut current = vec![0.0; d.len()];
        current[k] = spike;
        let next = step(
            &MembraneState {
                current,
                previous: vec![0.0; d.len()],
            },
            &d,
            &cfg,
        );
        let r2 = (cfg.c * cfg.dt_sim / d.h()).powi(2);
        let expected = 2.0 * spike * (1.0 - 2.0 * r2);
        assert!((next.current[k] - expected).abs() < 1e-15);
        assert!((next.current[k + 1] - r2 * spike).abs() < 1e-15);
    }

    #[test]
    fn heavy_damping_follows_scalar_ode() {
        // one interior node: h'' = -(4 c^2 / h^2) h - gamma h'
        let d = GridDomain::square(3).unwrap();
        let gamma = 1000.0;
        let dt = 2.0 / gamma; // gamma dt / 2 = 1
        let cfg = WaveConfig {
            c: 1.0,
            gamma,
            dt_sim: dt,
            ic_amplitude: 1.0,
            t_end: 100.0,
            n_samples: 2,
            ..WaveConfig::default()
        };
        let mut field = vec![0.0; 9];
        field[4] = 1.0;
        let steps = (cfg.t_end / dt).round() as usize;
        let mut s = MembraneState::at_rest(&d, &cfg, field);
        for _ in 0..steps {
            s = step(&s, &d, &cfg);
        }
        let stiffness = 4.0 * cfg.c * cfg.c / (d.h() * d.h());
        let oracle = rk4_damped_oscillator(stiffness, gamma, 1.0, cfg.t_end, 2_000_000);
        assert!(
            (s.current[4] - oracle).abs() <= 1e-3 * oracle.abs(),
            "{} vs {oracle}",
            s.current[4]
        );
    }

    #[test]
    fn degenerate_sampling_rejected() {
        let d = GridDomain::square(11).unwrap();
        let cfg = WaveConfig {
            t_end: 0.0,
            n_samples: 2,
            ..WaveConfig::default()
        };
        assert!(simulate(&d, &cfg).is_err());
        let cfg = WaveConfig {
            n_samples: 1,
            ..WaveConfig::default()
        };
        assert!(simulate(&d, &cfg).is_err());
        let mut cfg = small_config(&d, 0.0, 1.0, 11);
        cfg.dt_sim *= 3.0;
        assert!(matches!(simulate(&d, &cfg), Err(Error::InvalidConfig(_))));
        let mut cfg = small_config(&d, 0.0, 1.0, 11);
        cfg.dt_sim *= 0.7;
        assert!(matches!(simulate(&d, &cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn unstable_step_is_detected() {
        let d = GridDomain::square(11).unwrap();
        let mut cfg = small_config(&d, 0.0, 2.0, 21);
        cfg.dt_sim = cfg.sample_interval();
        cfg.c = 10.0;
        let err = run(&d, &cfg, gaussian_ic(&d, &cfg), |_, _| {}).unwrap_err();
        assert!(err.to_string().starts_with("CFL violation or blow-up"));
    }

    #[test]
    fn undamped_energy_drift_is_small() {
        let d = GridDomain::square(41).unwrap();
        let cfg = WaveConfig::default();
        let mut energies = Vec::new();
        simulate_observed(&d, &cfg, |_, s| energies.push(discrete_energy(s, &d, &cfg))).unwrap();
        let e0 = energies[0];
        let drift = energies.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / e0;
        assert!(drift <= 0.01, "drift {drift}");
    }

    #[test]
    fn damped_energy_never_increases() {
        let d = GridDomain::square(21).unwrap();
        for gamma in [0.1, 1.0] {
            let cfg = small_config(&d, gamma, 5.0, 201);
            let mut energies = Vec::new();
            simulate_observed(&d, &cfg, |_, s| energies.push(discrete_energy(s, &d, &cfg)))
                .unwrap();
            for w in energies.windows(2) {
                assert!(
                    w[1] <= w[0] + 1e-10 * energies[0],
                    "gamma {gamma}: {} > {}",
                    w[1],
                    w[0]
                );
            }
            assert!(energies.last().unwrap() < &energies[0]);
        }
    }

    #[test]
    fn fundamental_mode_oscillates_at_analytic_rate() {
        let d = GridDomain::square(41).unwrap();
        let cfg = small_config(&d, 0.0, 1.0, 11);
        let mode: Vec<f64> = (0..d.len())
            .map(|k| {
                let (x, y) = d.coords(k);
                if d.mask()[k] {
                    (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin()
                } else {
                    0.0
                }
            })
            .collect();
        let s = simulate_from(&d, &cfg, mode.clone()).unwrap();
        let factor = (SQRT_2 * std::f64::consts::PI * cfg.c * 1.0).cos();
        let expected: Vec<f64> = d.gather(&mode).iter().map(|v| v * factor).collect();
        let last = s.column(s.cols() - 1);
        let err: f64 = last
            .iter()
            .zip(&expected)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm: f64 = expected.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(err / norm <= 0.02, "relative error {}", err / norm);
    }

    #[test]
    fn height_sum_basics() {
        assert_eq!(height_sum(&[0.0; 5]), 0.0);
        assert_eq!(height_sum(&[1.0; 7]), 7.0);
    }

    #[test]
    fn damped_height_sum_peaks_decrease() {
        let d = GridDomain::square(41).unwrap();
        let cfg = WaveConfig {
            gamma: 1.0,
            ..WaveConfig::default()
        };
        let s = simulate(&d, &cfg).unwrap();
        let sums: Vec<f64> = s.columns().map(|c| height_sum(c).abs()).collect();
        let peaks: Vec<f64> = sums
            .windows(3)
            .filter(|w| w[1] > w[0] && w[1] >= w[2])
            .map(|w| w[1])
            .collect();
        // skip the first second of transients
        let settled = &peaks[peaks.len() / 10..];
        assert!(settled.len() > 5);
        for w in settled.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9), "{} after {}", w[1], w[0]);
        }
    }

    #[test]
    fn dirichlet_nodes_and_zero_input() {
        let d = GridDomain::parse_mask(".....\n.###.\n.##..\n.....\n").unwrap();
        let cfg = small_config(&d, 0.2, 1.0, 11);
        let mut s = MembraneState::at_rest(&d, &cfg, gaussian_ic(&d, &cfg));
        for _ in 0..50 {
            s = step(&s, &d, &cfg);
            for (k, &m) in d.mask().iter().enumerate() {
                if !m {
                    assert_eq!(s.current[k].to_bits(), 0.0f64.to_bits());
                }
            }
        }
        let zero = WaveConfig {
            ic_amplitude: 0.0,
            ..cfg
        };
        let snaps = simulate(&d, &zero).unwrap();
        assert!(snaps.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn undamped_scheme_is_reversible() {
        let d = GridDomain::square(21).unwrap();
        let cfg = small_config(&d, 0.0, 1.0, 11);
        let start = MembraneState::at_rest(&d, &cfg, gaussian_ic(&d, &cfg));
        let mut s = start.clone();
        for _ in 0..300 {
            s = step(&s, &d, &cfg);
        }
        let mut s = s.reversed();
        for _ in 0..300 {
            s = step(&s, &d, &cfg);
        }
        let back = s.reversed();
        let norm: f64 = start.current.iter().map(|v| v * v).sum::<f64>().sqrt();
        let err: f64 = back
            .current
            .iter()
            .zip(&start.current)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-8 * norm, "{}", err / norm);
    }

    #[test]
    fn diagonal_mirror_transposes_fields_exactly() {
        let d = GridDomain::square(21).unwrap();
        let cfg = small_config(&d, 0.5, 1.0, 21);
        let mirrored = WaveConfig {
            ic_center: (cfg.ic_center.1, cfg.ic_center.0),
            ..cfg.clone()
        };
        let a = simulate(&d, &cfg).unwrap();
        let b = simulate(&d, &mirrored).unwrap();
        let n = d.nx();
        for (ca, cb) in a.columns().zip(b.columns()) {
            let fa = d.scatter(ca).unwrap();
            let fb = d.scatter(cb).unwrap();
            for j in 0..n {
                for i in 0..n {
                    assert_eq!(fa[j * n + i].to_bits(), fb[i * n + j].to_bits());
                }
            }
        }
    }

    #[test]
    fn default_sampling() {
        let d = GridDomain::square(41).unwrap();
        let cfg = WaveConfig::default();
        cfg.validate(&d).unwrap();
        assert!((cfg.sample_interval() - 10.0 / 999.0).abs() < 1e-15);
        assert_eq!(cfg.steps_per_sample(), 2);
    }
}
