use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use sgspin::carrier::{write_trajectory_csv, ForceModel};
use sgspin::config::ConfigFile;
use sgspin::experiment::{
    detector_histogram, drive_profile, flip_statistics, flux_dominance_check, measure_sigma_y, read_runs_csv,
    run_ensemble, run_single_traced, sample_initial_conditions, write_drive_profile_csv, write_flip_curve_csv,
    write_histogram_csv, write_runs_csv, write_slices_csv, Classification, FluxCheckInput, RunResult,
};
use sgspin::magnetostatics::{divergence_profile, write_slice_csv, yz_slice, FieldSource};
use sgspin::Vec3;

use crate::{field, Cli, CliError, Command, DiagArgs, FieldArgs, SlicePlane, StatsArgs};

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn write_with<F>(path: &Path, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let mut w = create(path)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(path, e))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

/// Loads the config, applies command-line overrides and writes the effective config.
fn effective_config(cli: &Cli) -> Result<ConfigFile, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    if let Some(dir) = &cli.output_dir {
        cfg.output.dir = dir.clone();
    }
    if let Some(t) = cli.threads {
        cfg.experiment.threads = Some(t);
    }
    if let Some(s) = cli.seed {
        cfg.experiment.seed = s;
    }
    if cli.direct_field {
        cfg.field.direct = true;
    }
    if let Command::Run(r) = &cli.command {
        if let Some(n) = r.phi_steps {
            cfg.experiment.phi_steps = n;
        }
        if let Some(n) = r.reps {
            cfg.experiment.reps_per_phi = n;
        }
        if let Some(n) = r.trajectories {
            cfg.output.trajectories = n;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let cfg = effective_config(cli)?;
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let echo = dir.join("effective_config.json");
    std::fs::write(&echo, cfg.to_json() + "\n").map_err(|e| io_err(&echo, e))?;
    if let Some(n) = cfg.experiment.threads {
        // only fails if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Field(a) => cmd_field(&cfg, a),
        Command::Run(_) => cmd_run(&cfg),
        Command::Stats(a) => cmd_stats(&cfg, a),
        Command::Diag(a) => cmd_diag(&cfg, a),
    }
}

/// `"0.5L"` is half the device length; anything else is metres.
fn parse_at_x(text: &str, length: f64) -> Result<f64, CliError> {
    let bad = || CliError::Config(format!("--at-x: cannot parse `{text}`"));
    let x = match text.strip_suffix('L') {
        Some(frac) => frac.trim().parse::<f64>().map_err(|_| bad())? * length,
        None => text.trim().parse::<f64>().map_err(|_| bad())?,
    };
    if x.is_finite() {
        Ok(x)
    } else {
        Err(bad())
    }
}

/// Largest |y| used for slices and the σ_y search: inside the grid corridor.
const LATERAL_SPAN: f64 = 1.9e-3;

fn cmd_field(cfg: &ConfigFile, a: &FieldArgs) -> Result<(), CliError> {
    let params = cfg.geometry.params();
    params.validate()?;
    let started = Instant::now();
    let direct = FieldSource::Direct(field::evaluator(cfg)?);
    let source = if a.no_grid {
        direct.clone()
    } else {
        let (grid, path) = field::build_and_cache(cfg)?;
        println!("grid: {:?} nodes written to {}", grid.dims, path.display());
        FieldSource::Grid(grid)
    };

    let centre = direct.sample(&Vec3::new(0.5 * params.length, 0.0, 0.0))?;
    println!(
        "gap centre: B = ({:.6e}, {:.6e}, {:.6e}) T, dBz/dz = {:.6e} T/m",
        centre.b.x, centre.b.y, centre.b.z, centre.jacobian[(2, 2)]
    );
    match measure_sigma_y(&source, &params, LATERAL_SPAN)? {
        Some(s) => println!("sigma_y (central lobe of dBz/dz): {s:.6e} m"),
        None => println!("sigma_y: no sign change of dBz/dz within {LATERAL_SPAN:e} m"),
    }

    let inset = (0.05e-3f64).min(0.1 * params.gap());
    let z_range = (-params.bottom_top + inset, params.tip - inset);
    if let Some(SlicePlane::Yz) = a.slice {
        let x = parse_at_x(&a.at_x, params.length)?;
        let n = a.slice_points.max(2);
        let rows = yz_slice(&direct, x, (-LATERAL_SPAN, LATERAL_SPAN), z_range, (n, n))?;
        let path = cfg.output.dir.join("slice_yz.csv");
        write_with(&path, |w| write_slice_csv(&rows, w))?;
        println!("slice: {} points at x = {x:e} m -> {}", rows.len(), path.display());
    }
    if a.divergence_profile {
        let rows = divergence_profile(&direct, 0.5 * params.length, 0.0, (-LATERAL_SPAN, LATERAL_SPAN), a.profile_points.max(2))?;
        let path = cfg.output.dir.join("divergence_profile.csv");
        write_with(&path, |w| write_slice_csv(&rows, w))?;
        println!("divergence profile: {} points -> {}", rows.len(), path.display());
    }
    println!("wall time: {:.2} s", started.elapsed().as_secs_f64());
    Ok(())
}

/// Per-class tallies printed after `run` and `stats`.
fn print_summary(runs: &[RunResult]) {
    let ok: Vec<&RunResult> = runs.iter().filter(|r| !r.is_flagged()).collect();
    let count = |c: Classification| ok.iter().filter(|r| r.classification == c).count();
    let collapsed = ok.iter().filter(|r| r.final_beta.cos().abs() > 0.999).count();
    let flips = ok.iter().filter(|r| r.flipped()).count();
    let mean_z = |c: Classification| {
        let z: Vec<f64> = ok.iter().filter(|r| r.classification == c).map(|r| r.detector_hit.1).collect();
        if z.is_empty() {
            f64::NAN
        } else {
            z.iter().sum::<f64>() / z.len() as f64
        }
    };
    println!("runs: {} ({} flagged)", runs.len(), runs.len() - ok.len());
    println!(
        "classes: up {}, down {}, unresolved {}",
        count(Classification::Up),
        count(Classification::Down),
        count(Classification::Unresolved)
    );
    if !ok.is_empty() {
        println!("collapsed (|cos beta_f| > 0.999): {:.4}", collapsed as f64 / ok.len() as f64);
        println!("flipped: {flips} of {}", ok.len());
    }
    println!(
        "mean detector z: up {:.4e} m, down {:.4e} m",
        mean_z(Classification::Up),
        mean_z(Classification::Down)
    );
}

fn write_statistics(cfg: &ConfigFile, runs: &[RunResult]) -> Result<(), CliError> {
    let dir = &cfg.output.dir;
    let stats = flip_statistics(runs, cfg.experiment.theta_bands);
    write_with(&dir.join("flip_curve.csv"), |w| write_flip_curve_csv(w, &stats.curve))?;
    write_with(&dir.join("slices.csv"), |w| write_slices_csv(w, &stats.slices))?;
    let hist = detector_histogram(runs, cfg.experiment.histogram_bins);
    write_with(&dir.join("detector_histogram.csv"), |w| write_histogram_csv(w, &hist))
}

fn cmd_run(cfg: &ConfigFile) -> Result<(), CliError> {
    let started = Instant::now();
    let source = field::load(cfg)?;
    let params = cfg.geometry.params();
    let sim = if cfg.force.needs_measured_sigma() {
        if matches!(source, FieldSource::Vacuum) {
            // nothing to measure and no force to suppress
            let mut s = cfg.sim_config(Some(1.0))?;
            s.force_model = ForceModel::ZOnly { suppression: false, sigma_y: f64::INFINITY };
            s
        } else {
            let sigma = measure_sigma_y(&source, &params, LATERAL_SPAN)?;
            if let Some(s) = sigma {
                println!("sigma_y (measured): {s:.6e} m");
            }
            cfg.sim_config(sigma)?
        }
    } else {
        cfg.sim_config(None)?
    };

    let ensemble = run_ensemble(&sim, &source)?;
    let dir = &cfg.output.dir;
    write_with(&dir.join("runs.csv"), |w| write_runs_csv(w, &ensemble.runs))?;
    write_statistics(cfg, &ensemble.runs)?;

    let n_traj = cfg.output.trajectories.min(sim.total_runs());
    if n_traj > 0 {
        let tdir = dir.join("trajectories");
        std::fs::create_dir_all(&tdir).map_err(|e| io_err(&tdir, e))?;
        for i in 0..n_traj {
            let ic = sample_initial_conditions(&sim, i);
            let (_, rows) = run_single_traced(&ic, &sim, &source, cfg.output.trajectory_decimation);
            write_with(&tdir.join(format!("run_{i}.csv")), |w| write_trajectory_csv(w, &rows))?;
        }
    }

    print_summary(&ensemble.runs);
    println!("wall time: {:.2} s", started.elapsed().as_secs_f64());
    Ok(())
}

fn cmd_stats(cfg: &ConfigFile, a: &StatsArgs) -> Result<(), CliError> {
    let path = a.runs.clone().unwrap_or_else(|| cfg.output.dir.join("runs.csv"));
    let file = File::open(&path).map_err(|e| io_err(&path, e))?;
    let runs = read_runs_csv(std::io::BufReader::new(file))?;
    if runs.is_empty() {
        return Err(CliError::Io(format!("{}: no runs", path.display())));
    }
    write_statistics(cfg, &runs)?;
    print_summary(&runs);
    Ok(())
}

fn cmd_diag(cfg: &ConfigFile, a: &DiagArgs) -> Result<(), CliError> {
    let (flux, drive) = if a.flux || a.drive_profile { (a.flux, a.drive_profile) } else { (true, true) };
    let dir = &cfg.output.dir;
    if flux {
        let d = FluxCheckInput::default();
        let input = FluxCheckInput {
            b_sg: a.flux_b_sg.unwrap_or(d.b_sg),
            mu: a.flux_mu.unwrap_or(d.mu),
            mu0: a.flux_mu0.unwrap_or(d.mu0),
            radius: a.flux_radius.unwrap_or(d.radius),
            ..d
        };
        input.validate().map_err(|e| CliError::Config(format!("flux check: {e}")))?;
        let check = flux_dominance_check(&input);
        let json = serde_json::to_string_pretty(&check).expect("serializable");
        let path = dir.join("flux_check.json");
        std::fs::write(&path, json + "\n").map_err(|e| io_err(&path, e))?;
        println!("flux ratio B_qs/B_sg: {:.4e} ({:?})", check.ratio, check.verdict);
    }
    if drive {
        let source = match field::load(cfg) {
            Ok(s) => s,
            Err(e) => {
                log::info!("{e}; using direct quadrature");
                FieldSource::Direct(field::evaluator(cfg)?)
            }
        };
        let params = cfg.geometry.params();
        let profile = drive_profile(&source, &params, a.profile_points)?;
        write_with(&dir.join("drive_profile.csv"), |w| write_drive_profile_csv(w, &profile))?;
        let (x, r) = profile.iter().copied().fold((f64::NAN, 0.0), |acc, p| if p.1 > acc.1 { p } else { acc });
        let above = profile.iter().filter(|p| p.1 > 1.0).count();
        println!("drive ratio: max {r:.4e} at x = {x:.4e} m; {above} of {} points above 1", profile.len());
    }
    Ok(())
}
