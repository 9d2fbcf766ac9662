#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dmdkit::c64;
use dmdkit::dmd::{
    decompose, pair_conjugates, DmdOptions, GroupKind, Truncation, PAIRING_TOLERANCE,
};
use dmdkit::membrane::{height_sum, simulate_observed, GridDomain, WaveConfig};
use dmdkit::oracle::{match_candidates, MatchSettings, MATCH_WINDOW};
use dmdkit::report::{
    candidate_from_row, match_csv, observable_csv, oscillatory_rows, parse_spectrum_csv,
    render_pgm, spectrum_csv,
};
use dmdkit::snapshot::{
    load_snapshots, read_csv_snapshots, read_fields, save_snapshots, write_fields, FieldStack,
};

type CliResult<T = ()> = Result<T, Box<dyn std::error::Error>>;

#[derive(Parser)]
#[command(
    name = "dmdkit",
    version,
    about = "Dynamic mode decomposition of membrane vibrations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a damped membrane and write its snapshots
    Simulate(SimulateArgs),
    /// Decompose a snapshot series into modes
    Dmd(DmdArgs),
    /// Compare a spectrum against analytic square-membrane modes
    Verify(VerifyArgs),
    /// Render one field of a snapshot or mode file as a PGM image
    Render(RenderArgs),
}

#[derive(Args)]
struct GridArgs {
    /// Grid points per side of the unit square
    #[arg(long, default_value_t = 41, value_parser = clap::value_parser!(u32).range(3..))]
    grid: u32,
    /// ASCII mask file ('#' inside, '.' outside); replaces --grid
    #[arg(long, conflicts_with = "grid")]
    mask: Option<PathBuf>,
}

impl GridArgs {
    fn domain(&self) -> CliResult<GridDomain> {
        Ok(match &self.mask {
            Some(path) => at(path, GridDomain::parse_mask(&read_text(path)?))?,
            None => GridDomain::square(self.grid as usize)?,
        })
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Wave speed
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    c: f64,
    /// Damping coefficient
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    gamma: f64,
    /// Width of the Gaussian initial displacement
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    sigma: f64,
    /// Centre of the Gaussian as x,y
    #[arg(long, default_value = "0.3,0.4", value_parser = parse_pair, allow_negative_numbers = true)]
    center: (f64, f64),
    /// Height of the Gaussian
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    amplitude: f64,
    #[command(flatten)]
    grid: GridArgs,
    /// Simulated duration
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    t_end: f64,
    /// Number of recorded snapshots, including t = 0
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u32).range(2..))]
    samples: u32,
    /// Directory receiving snapshots.dmds and observable.csv
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct DmdArgs {
    /// DMDS1 snapshot file, or CSV with one snapshot per row
    input: PathBuf,
    /// Sampling interval for CSV input
    #[arg(long, allow_negative_numbers = true)]
    dt: Option<f64>,
    /// Number of delayed copies stacked under each snapshot
    #[arg(long, default_value_t = 0)]
    stack: usize,
    /// Keep exactly this many singular values
    #[arg(long, group = "truncation", value_parser = clap::value_parser!(u64).range(1..))]
    rank: Option<u64>,
    /// Keep the smallest rank reaching this fraction of the energy
    #[arg(long, group = "truncation", allow_negative_numbers = true)]
    energy: Option<f64>,
    /// Keep singular values at or above this fraction of the largest
    #[arg(long, group = "truncation", allow_negative_numbers = true)]
    sv_threshold: Option<f64>,
    /// Only write mode files for modes at least this powerful
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    power_floor: f64,
    /// Directory receiving spectrum.csv and mode files
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Directory written by `dmdkit dmd`
    spectrum_dir: PathBuf,
    /// Wave speed of the simulated membrane
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    c: f64,
    /// Highest analytic frequency to compare against
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    max_freq: f64,
    /// Relative frequency window for a match
    #[arg(long, default_value_t = MATCH_WINDOW, allow_negative_numbers = true)]
    window: f64,
    /// Grid points per side of the unit square
    #[arg(long, default_value_t = 41, value_parser = clap::value_parser!(u32).range(3..))]
    grid: u32,
    /// Directory receiving match.csv
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    /// DMDS1 file holding one field per column
    input: PathBuf,
    /// Column to render
    #[arg(long, default_value_t = 0)]
    column: usize,
    #[command(flatten)]
    grid: GridArgs,
    /// Output image
    #[arg(long)]
    out: PathBuf,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected x,y")?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    Ok((num(a)?, num(b)?))
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> CliResult {
    fs::write(path, bytes).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn at<T>(path: &Path, r: dmdkit::Result<T>) -> CliResult<T> {
    r.map_err(|e| format!("{}: {e}", path.display()).into())
}

fn ensure_dir(dir: &Path) -> CliResult {
    fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()).into())
}

fn positive(flag: &str, v: f64) -> CliResult {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(format!("{flag} must be positive, got {v}").into())
    }
}

fn mode_file(dir: &Path, index: usize, kind: &str) -> PathBuf {
    dir.join(format!("mode_{index:03}_{kind}.dmds"))
}

fn simulate(args: SimulateArgs) -> CliResult {
    positive("--c", args.c)?;
    positive("--sigma", args.sigma)?;
    positive("--t-end", args.t_end)?;
    if !(args.gamma >= 0.0 && args.gamma.is_finite()) {
        return Err(format!("--gamma must be non-negative, got {}", args.gamma).into());
    }
    if !args.amplitude.is_finite() {
        return Err("--amplitude must be finite".into());
    }
    let domain = args.grid.domain()?;
    let mut cfg = WaveConfig {
        c: args.c,
        gamma: args.gamma,
        ic_center: args.center,
        ic_sigma: args.sigma,
        ic_amplitude: args.amplitude,
        dt_sim: 0.0,
        t_end: args.t_end,
        n_samples: args.samples as usize,
    };
    cfg.fit_step(&domain);

    let mut sums = Vec::with_capacity(cfg.n_samples);
    let snapshots = simulate_observed(&domain, &cfg, |_, state| {
        sums.push(height_sum(&state.current))
    })?;
    let times: Vec<f64> = (0..cfg.n_samples)
        .map(|k| k as f64 * snapshots.dt())
        .collect();

    ensure_dir(&args.out_dir)?;
    let path = args.out_dir.join("snapshots.dmds");
    at(&path, save_snapshots(&snapshots, &path))?;
    write_file(
        &args.out_dir.join("observable.csv"),
        observable_csv(&times, &sums),
    )?;
    println!(
        "{} interior nodes, {} snapshots, dt {}, {} solver steps per snapshot",
        snapshots.rows(),
        snapshots.cols(),
        snapshots.dt(),
        cfg.steps_per_sample()
    );
    Ok(())
}

fn dmd(args: DmdArgs) -> CliResult {
    let is_csv = args
        .input
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let snapshots = if is_csv {
        let dt = args.dt.ok_or("--dt is required for CSV input")?;
        positive("--dt", dt)?;
        let file =
            fs::File::open(&args.input).map_err(|e| format!("{}: {e}", args.input.display()))?;
        at(
            &args.input,
            read_csv_snapshots(std::io::BufReader::new(file), dt),
        )?
    } else {
        if args.dt.is_some() {
            return Err("--dt only applies to CSV input".into());
        }
        at(&args.input, load_snapshots(&args.input))?
    };
    let truncation = match (args.rank, args.energy, args.sv_threshold) {
        (Some(r), _, _) => Truncation::FixedRank(r as usize),
        (_, Some(f), _) => Truncation::EnergyFraction(f),
        (_, _, Some(e)) => Truncation::SvThreshold(e),
        _ => Truncation::default(),
    };
    if !(args.power_floor >= 0.0) {
        return Err(format!(
            "--power-floor must be non-negative, got {}",
            args.power_floor
        )
        .into());
    }
    let result = decompose(
        &snapshots,
        &DmdOptions {
            m_stack: args.stack,
            truncation,
        },
    )?;
    let groups = pair_conjugates(&result, PAIRING_TOLERANCE);

    ensure_dir(&args.out_dir)?;
    write_file(
        &args.out_dir.join("spectrum.csv"),
        spectrum_csv(&result, &groups),
    )?;
    let mut written = 0;
    for i in (0..result.len()).filter(|&i| result.powers[i] >= args.power_floor) {
        let mode = result.mode(i);
        let abs: Vec<f64> = mode.iter().map(|z| z.norm()).collect();
        let re: Vec<f64> = mode.iter().map(|z| z.re).collect();
        let im: Vec<f64> = mode.iter().map(|z| z.im).collect();
        let path = mode_file(&args.out_dir, i, "abs");
        at(
            &path,
            write_fields(&FieldStack::from_columns(result.dt, &[abs])?, &path),
        )?;
        let path = mode_file(&args.out_dir, i, "reim");
        at(
            &path,
            write_fields(&FieldStack::from_columns(result.dt, &[re, im])?, &path),
        )?;
        written += 1;
    }

    println!(
        "rank {}, {} modes, {written} mode files",
        result.rank_used,
        result.len()
    );
    for g in groups.iter().take(12) {
        let kind = match g.kind {
            GroupKind::Real => "real",
            GroupKind::Oscillatory => "pair",
            GroupKind::Unpaired => "unpaired",
        };
        println!(
            "  mode {:>3}  {kind:<8} {:>12.6} Hz  |lambda| {:.9}  power {:.6e}",
            g.representative,
            g.frequency.abs(),
            result.growth_magnitudes[g.representative],
            g.power
        );
    }
    Ok(())
}

fn verify(args: VerifyArgs) -> CliResult {
    positive("--c", args.c)?;
    positive("--max-freq", args.max_freq)?;
    positive("--window", args.window)?;
    let domain = GridDomain::square(args.grid as usize)?;
    let rows = parse_spectrum_csv(&read_text(&args.spectrum_dir.join("spectrum.csv"))?)?;
    let mut candidates = Vec::new();
    for row in oscillatory_rows(&rows) {
        let path = mode_file(&args.spectrum_dir, row.index, "reim");
        if !path.exists() {
            // below the power floor of the dmd run
            continue;
        }
        let fields = at(&path, read_fields(&path))?;
        if fields.cols() != 2 || fields.rows() != domain.interior_len() {
            return Err(format!(
                "{}: {}x{} field does not fit a {}-point grid ({} interior nodes)",
                path.display(),
                fields.rows(),
                fields.cols(),
                args.grid,
                domain.interior_len()
            )
            .into());
        }
        let mode: Vec<c64> = fields
            .column(0)
            .iter()
            .zip(fields.column(1))
            .map(|(&re, &im)| c64::new(re, im))
            .collect();
        candidates.push(candidate_from_row(row, mode));
    }
    let settings = MatchSettings {
        c: args.c,
        max_freq: args.max_freq,
        window: args.window,
    };
    let report = match_candidates(&candidates, &domain, &settings)?;
    ensure_dir(&args.out_dir)?;
    write_file(&args.out_dir.join("match.csv"), match_csv(&report))?;
    println!(
        "{} matched, {} spurious, {} undetected of {} analytic frequencies",
        report.matched.len(),
        report.spurious.len(),
        report.undetected.len(),
        report.levels.len()
    );
    for m in report.matched.iter().take(12) {
        println!(
            "  ({},{}) {:.6} Hz  dmd {:.6} Hz  rel err {:.2e}  angle {:.2e} deg{}",
            m.m,
            m.n,
            m.nu_analytic,
            m.nu_dmd,
            m.rel_err,
            m.max_angle_deg(),
            if m.ambiguous { "  ambiguous" } else { "" }
        );
    }
    Ok(())
}

fn render(args: RenderArgs) -> CliResult {
    let domain = args.grid.domain()?;
    let fields = at(&args.input, read_fields(&args.input))?;
    if args.column >= fields.cols() {
        return Err(format!(
            "--column {} out of range, file has {} columns",
            args.column,
            fields.cols()
        )
        .into());
    }
    if fields.rows() != domain.interior_len() {
        return Err(format!(
            "field has {} values, grid has {} interior nodes",
            fields.rows(),
            domain.interior_len()
        )
        .into());
    }
    write_file(&args.out, render_pgm(fields.column(args.column), &domain)?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Dmd(a) => dmd(a),
        Command::Verify(a) => verify(a),
        Command::Render(a) => render(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
