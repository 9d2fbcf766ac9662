//! WebAssembly bindings for the browser demo in `www/`: simulate a small
//! membrane, decompose it, and draw analytic modes for comparison.

use dmdkit::dmd::{
    decompose, pair_conjugates, DmdOptions, DmdResult, GroupKind, ModeGroup, PAIRING_TOLERANCE,
};
use dmdkit::membrane::{simulate, GridDomain, WaveConfig};
use dmdkit::oracle::{analytic_frequency, analytic_levels, analytic_mode_field};
use dmdkit::report::render_pgm;
use dmdkit::snapshot::SnapshotMatrix;
use wasm_bindgen::prelude::*;

/// Largest grid the page offers; the decomposition cost grows fast.
pub const MAX_GRID: u32 = 41;

fn js(e: impl ToString) -> JsError {
    JsError::new(&e.to_string())
}

/// Grey level per grid node, one byte each, of `|values|` scaled to the
/// peak; exterior nodes are 0.
pub fn magnitude_pixels(values: &[f64], domain: &GridDomain) -> Result<Vec<u8>, String> {
    let pgm = render_pgm(values, domain).map_err(|e| e.to_string())?;
    Ok(pgm[pgm.len() - domain.len()..].to_vec())
}

/// Signed grey levels: 128 is zero, 255 and 1 are the positive and negative
/// peaks; exterior nodes are 0.
pub fn signed_pixels(values: &[f64], domain: &GridDomain) -> Result<Vec<u8>, String> {
    let full = domain.scatter(values).map_err(|e| e.to_string())?;
    let peak = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let scale = if peak > 0.0 { 127.0 / peak } else { 0.0 };
    Ok(full
        .iter()
        .zip(domain.mask())
        .map(|(v, &inside)| {
            if inside {
                (128.0 + scale * v).round() as u8
            } else {
                0
            }
        })
        .collect())
}

#[wasm_bindgen]
pub struct Membrane {
    domain: GridDomain,
    snapshots: SnapshotMatrix,
    spectrum: Option<(DmdResult, Vec<ModeGroup>)>,
}

impl Membrane {
    pub fn create(
        grid: u32,
        gamma: f64,
        cx: f64,
        cy: f64,
        samples: u32,
        t_end: f64,
    ) -> Result<Self, String> {
        if !(5..=MAX_GRID).contains(&grid) {
            return Err(format!("grid must lie in 5..={MAX_GRID}"));
        }
        let domain = GridDomain::square(grid as usize).map_err(|e| e.to_string())?;
        let mut cfg = WaveConfig {
            gamma,
            ic_center: (cx, cy),
            n_samples: samples as usize,
            t_end,
            ..WaveConfig::default()
        };
        cfg.fit_step(&domain);
        let snapshots = simulate(&domain, &cfg).map_err(|e| e.to_string())?;
        Ok(Self {
            domain,
            snapshots,
            spectrum: None,
        })
    }

    pub fn run_dmd(&mut self, stack: u32) -> Result<usize, String> {
        let opts = DmdOptions {
            m_stack: stack as usize,
            ..DmdOptions::default()
        };
        let result = decompose(&self.snapshots, &opts).map_err(|e| e.to_string())?;
        let groups: Vec<ModeGroup> = pair_conjugates(&result, PAIRING_TOLERANCE)
            .into_iter()
            .filter(|g| g.kind != GroupKind::Unpaired)
            .collect();
        let n = groups.len();
        self.spectrum = Some((result, groups));
        Ok(n)
    }

    fn group(&self, i: usize) -> Result<(&DmdResult, &ModeGroup), String> {
        let (result, groups) = self
            .spectrum
            .as_ref()
            .ok_or("run the decomposition first")?;
        let g = groups.get(i).ok_or_else(|| format!("no group {i}"))?;
        Ok((result, g))
    }

    pub fn group_pixels(&self, i: usize) -> Result<Vec<u8>, String> {
        let (result, g) = self.group(i)?;
        let mode: Vec<f64> = result
            .mode(g.representative)
            .iter()
            .map(|z| z.norm())
            .collect();
        magnitude_pixels(&mode, &self.domain)
    }

    pub fn frame(&self, k: usize) -> Result<Vec<u8>, String> {
        if k >= self.snapshots.cols() {
            return Err(format!("no frame {k}"));
        }
        signed_pixels(self.snapshots.column(k), &self.domain)
    }
}

#[wasm_bindgen]
impl Membrane {
    /// Simulates a unit-speed membrane on a `grid`-point square from a
    /// Gaussian bump at (`cx`, `cy`).
    #[wasm_bindgen(constructor)]
    pub fn new(
        grid: u32,
        gamma: f64,
        cx: f64,
        cy: f64,
        samples: u32,
        t_end: f64,
    ) -> Result<Membrane, JsError> {
        Self::create(grid, gamma, cx, cy, samples, t_end).map_err(js)
    }

    pub fn grid(&self) -> u32 {
        self.domain.nx() as u32
    }

    pub fn frames(&self) -> u32 {
        self.snapshots.cols() as u32
    }

    pub fn dt(&self) -> f64 {
        self.snapshots.dt()
    }

    /// Signed grey levels of snapshot `k`, row-major over the grid.
    #[wasm_bindgen(js_name = framePixels)]
    pub fn frame_pixels(&self, k: u32) -> Result<Vec<u8>, JsError> {
        self.frame(k as usize).map_err(js)
    }

    /// Runs the decomposition and returns the number of mode groups.
    pub fn decompose(&mut self, stack: u32) -> Result<u32, JsError> {
        self.run_dmd(stack).map(|n| n as u32).map_err(js)
    }

    /// Non-negative frequency of each group, strongest first.
    #[wasm_bindgen(js_name = groupFrequencies)]
    pub fn group_frequencies(&self) -> Vec<f64> {
        self.spectrum.as_ref().map_or(Vec::new(), |(_, g)| {
            g.iter().map(|g| g.frequency.abs()).collect()
        })
    }

    #[wasm_bindgen(js_name = groupPowers)]
    pub fn group_powers(&self) -> Vec<f64> {
        self.spectrum
            .as_ref()
            .map_or(Vec::new(), |(_, g)| g.iter().map(|g| g.power).collect())
    }

    #[wasm_bindgen(js_name = groupMagnitudes)]
    pub fn group_magnitudes(&self) -> Vec<f64> {
        self.spectrum.as_ref().map_or(Vec::new(), |(r, g)| {
            g.iter()
                .map(|g| r.growth_magnitudes[g.representative])
                .collect()
        })
    }

    /// Nearest analytic frequency for each group, 0 where none is within
    /// 5%.
    #[wasm_bindgen(js_name = nearestAnalytic)]
    pub fn nearest_analytic(&self) -> Vec<f64> {
        let levels = analytic_levels(1.0, 20.0);
        self.group_frequencies()
            .iter()
            .map(|&f| {
                levels
                    .iter()
                    .map(|l| l.frequency)
                    .min_by(|a, b| (a - f).abs().total_cmp(&(b - f).abs()))
                    .filter(|a| (a - f).abs() <= 0.05 * a)
                    .unwrap_or(0.0)
            })
            .collect()
    }

    /// `|mode|` grey levels of group `i`.
    #[wasm_bindgen(js_name = groupPixels)]
    pub fn group_pixels_js(&self, i: u32) -> Result<Vec<u8>, JsError> {
        self.group_pixels(i as usize).map_err(js)
    }
}

pub fn analytic_pixels_for(m: u32, n: u32, grid: u32) -> Result<Vec<u8>, String> {
    if !(5..=MAX_GRID).contains(&grid) {
        return Err(format!("grid must lie in 5..={MAX_GRID}"));
    }
    let domain = GridDomain::square(grid as usize).map_err(|e| e.to_string())?;
    let field = analytic_mode_field(m, n, &domain).map_err(|e| e.to_string())?;
    magnitude_pixels(&field, &domain)
}

/// `|sin(m pi x) sin(n pi y)|` grey levels on a `grid`-point square.
#[wasm_bindgen(js_name = analyticPixels)]
pub fn analytic_pixels(m: u32, n: u32, grid: u32) -> Result<Vec<u8>, JsError> {
    analytic_pixels_for(m, n, grid).map_err(js)
}

#[wasm_bindgen(js_name = analyticFrequency)]
pub fn analytic_frequency_js(m: u32, n: u32) -> f64 {
    analytic_frequency(m, n, 1.0)
}
