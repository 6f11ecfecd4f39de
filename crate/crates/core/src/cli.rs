//! Run specification, figure presets and CSV output.
//!
//! Precedence when resolving a run: preset defaults, then `key = value` lines
//! from the config file, then explicit command-line flags.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{default_n_max, validate_config, SystemConfig};
use crate::observables::{linear_grid, simulation_time_series, ObservableRecord, PhiSweep, JUMP_THRESHOLD};
use crate::propagator::ReferenceIntegrator;
use crate::state::{partial_trace_atoms, BlockAmplitudes, Simulation};

/// Atomic and field frequency shared by every figure preset (units of lambda).
pub const FIGURE_FREQUENCY: f64 = 0.1;
pub const FIGURE_NBAR: f64 = 10.0;
/// Decay rates swept by the multi-curve presets.
pub const DECAY_SET: [f64; 3] = [0.0, 1e-4, 1e-3];

pub const DEFAULT_TIME_POINTS: usize = 4000;
pub const DEFAULT_PHI_POINTS: usize = 1600;

/// Times oracle columns are integrated in per chunk; bounds memory use.
const ORACLE_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    Time,
    Phi,
}

impl SweepKind {
    fn name(self) -> &'static str {
        match self {
            SweepKind::Time => "time",
            SweepKind::Phi => "phi",
        }
    }
}

/// One parameter set of a preset.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub config: SystemConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub sweep: SweepKind,
    pub curves: Vec<Curve>,
    /// Evaluation times of a phi sweep.
    pub phi_times: Vec<f64>,
}

/// Base parameters of every figure: one-photon process, resonant,
/// `nbar = 10` in both modes, `phi = pi/2`, `theta = pi/4`.
pub fn figure_base() -> SystemConfig {
    SystemConfig::resonant(FIGURE_FREQUENCY, FIGURE_NBAR, 1)
}

pub struct PresetTable;

impl PresetTable {
    pub const NAMES: [&'static str; 8] = ["fig2", "fig3a", "fig3b", "fig3c", "fig4a", "fig4b", "fig5a", "fig5b"];

    pub fn get(name: &str) -> Result<Preset> {
        let base = figure_base();
        let with = |f: &dyn Fn(&mut SystemConfig)| {
            let mut c = base.clone();
            f(&mut c);
            c
        };
        let single = |label: &str, config: SystemConfig| vec![Curve { label: label.to_string(), config }];
        let field_decays = |varpi: f64| -> Vec<Curve> {
            DECAY_SET
                .iter()
                .map(|&g| Curve {
                    label: format!("gamma={g:e}"),
                    config: with(&|c| {
                        c.varpi = varpi;
                        c.gamma_field = [g; 2];
                    }),
                })
                .collect()
        };
        let atomic_decays = |varpi: f64| -> Vec<Curve> {
            DECAY_SET
                .iter()
                .map(|&g| Curve {
                    label: format!("Gamma={g:e}"),
                    config: with(&|c| {
                        c.varpi = varpi;
                        c.gamma_atom = [[g; 2]; 2];
                    }),
                })
                .collect()
        };
        let time = |name, curves| Preset { name, sweep: SweepKind::Time, curves, phi_times: vec![] };
        let preset = match name {
            "fig2" => Preset {
                name: "fig2",
                sweep: SweepKind::Phi,
                curves: single("lossless", base.clone()),
                phi_times: vec![PI / 3.0, PI / 4.0, PI / 2.0],
            },
            "fig3a" => time(
                "fig3a",
                single(
                    "theta=0",
                    with(&|c| {
                        c.theta = 0.0;
                        c.varpi = PI;
                    }),
                ),
            ),
            "fig3b" => time("fig3b", field_decays(0.0)),
            "fig3c" => time("fig3c", field_decays(PI)),
            "fig4a" => time("fig4a", atomic_decays(0.0)),
            "fig4b" => time("fig4b", atomic_decays(PI)),
            "fig5a" => time(
                "fig5a",
                single(
                    "gamma=1e-3",
                    with(&|c| {
                        c.varpi = PI;
                        c.gamma_field = [1e-3; 2];
                    }),
                ),
            ),
            "fig5b" => time(
                "fig5b",
                single(
                    "Gamma=1e-4",
                    with(&|c| {
                        c.varpi = PI;
                        c.gamma_atom = [[1e-4; 2]; 2];
                    }),
                ),
            ),
            other => return Err(Error::UnknownPreset(other.to_string())),
        };
        Ok(preset)
    }
}

/// Command-line flags.
#[derive(Debug, Clone, Default, Parser)]
#[command(name = "cavity", about = "Two-atom two-mode dissipative cavity: concurrence and Pancharatnam phase sweeps")]
pub struct RunArgs {
    /// Named figure preset (fig2, fig3a, fig3b, fig3c, fig4a, fig4b, fig5a, fig5b).
    #[arg(long)]
    pub preset: Option<String>,
    /// Flat `key = value` config file; overrides the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub sweep: Option<SweepKind>,
    /// Grid start (lambda t for time sweeps, phi for phi sweeps).
    #[arg(long, allow_hyphen_values = true)]
    pub t_start: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_stop: Option<String>,
    #[arg(long)]
    pub points: Option<usize>,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Add reference-integrator columns.
    #[arg(long)]
    pub oracle: bool,
    /// Keep the counter-rotating terms in the reference integrator.
    #[arg(long)]
    pub counter_rotating: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        linear_grid(self.start, self.stop, self.count)
    }
}

/// Fully resolved run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    /// Preset name, or `custom`.
    pub source: String,
    pub config_path: Option<PathBuf>,
    pub curves: Vec<Curve>,
    pub sweep: SweepKind,
    pub grid: GridSpec,
    pub phi_times: Vec<f64>,
    pub out: PathBuf,
    pub jobs: Option<usize>,
    pub oracle: bool,
    pub counter_rotating: bool,
}

/// Parses `argv` (program name first) and reads the config file if given.
pub fn parse_run<I, T>(argv: I) -> Result<RunSpec>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = RunArgs::try_parse_from(argv).map_err(|e| Error::ConflictingFlags(e.to_string()))?;
    resolve_args(&args)
}

/// Reads the config file named by `args`, if any, and resolves the run.
pub fn resolve_args(args: &RunArgs) -> Result<RunSpec> {
    let text = match &args.config {
        Some(path) => Some(fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?),
        None => None,
    };
    resolve_run(args, text.as_deref())
}

/// Numbers may be plain floats or multiples of `pi`: `pi`, `-pi/2`, `3pi/4`,
/// `2*pi`, `0.5*pi`.
pub fn parse_number(raw: &str) -> Option<f64> {
    let s = raw.trim();
    if let Ok(v) = s.parse::<f64>() {
        return Some(v);
    }
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim().parse::<f64>().ok()?),
        None => (s, 1.0),
    };
    let pos = num.find("pi")?;
    if pos + 2 != num.len() {
        return None;
    }
    let factor = num[..pos].trim().trim_end_matches('*').trim();
    let factor = match factor {
        "" | "+" => 1.0,
        "-" => -1.0,
        f => f.parse::<f64>().ok()?,
    };
    Some(factor * PI / den)
}

#[derive(Debug, Default)]
struct Overrides {
    preset: Option<String>,
    sweep: Option<SweepKind>,
    start: Option<f64>,
    stop: Option<f64>,
    points: Option<usize>,
    phi_times: Option<Vec<f64>>,
    n_max: Option<usize>,
    params: Vec<(usize, String, f64)>,
}

fn parse_config(text: &str) -> Result<Overrides> {
    let mut out = Overrides::default();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |message: String| Error::MalformedConfig { line: line_no, message };
        let (key, value) = line.split_once('=').ok_or_else(|| bad(format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let number = || parse_number(value).ok_or_else(|| bad(format!("`{key}`: `{value}` is not a number")));
        let integer = || value.parse::<usize>().map_err(|_| bad(format!("`{key}`: `{value}` is not an integer")));
        match key {
            "preset" => out.preset = Some(value.to_string()),
            "sweep" => {
                out.sweep = Some(match value {
                    "time" => SweepKind::Time,
                    "phi" => SweepKind::Phi,
                    _ => return Err(bad(format!("sweep must be `time` or `phi`, got `{value}`"))),
                })
            }
            "t_start" => out.start = Some(number()?),
            "t_stop" => out.stop = Some(number()?),
            "points" => out.points = Some(integer()?),
            "n_max" => out.n_max = Some(integer()?),
            "kappa" => out.params.push((line_no, key.to_string(), integer()? as f64)),
            "phi_times" => {
                let times = value
                    .split(',')
                    .map(|v| parse_number(v).ok_or_else(|| bad(format!("`phi_times`: `{v}` is not a number"))))
                    .collect::<Result<Vec<_>>>()?;
                out.phi_times = Some(times);
            }
            _ if is_param_key(key) => out.params.push((line_no, key.to_string(), number()?)),
            _ => return Err(bad(format!("unknown key `{key}`"))),
        }
    }
    Ok(out)
}

const PARAM_KEYS: [&str; 25] = [
    "omega_atom",
    "omega_atom_1_1",
    "omega_atom_1_2",
    "omega_atom_2_1",
    "omega_atom_2_2",
    "gamma_atom",
    "gamma_atom_1_1",
    "gamma_atom_1_2",
    "gamma_atom_2_1",
    "gamma_atom_2_2",
    "omega_field",
    "omega_field_1",
    "omega_field_2",
    "gamma_field",
    "gamma_field_1",
    "gamma_field_2",
    "lambda",
    "lambda_1",
    "lambda_2",
    "nbar",
    "nbar_1",
    "nbar_2",
    "varpi",
    "theta",
    "phi",
];

fn is_param_key(key: &str) -> bool {
    PARAM_KEYS.contains(&key)
}

/// Applies one physical-parameter override. Indexed keys are
/// `<name>_<level>_<atom>` for atoms and `<name>_<mode>` for fields.
fn apply_param(cfg: &mut SystemConfig, key: &str, v: f64) {
    let idx = |s: &str| s.parse::<usize>().unwrap() - 1;
    let parts: Vec<&str> = key.rsplitn(3, '_').collect();
    match key {
        "omega_atom" => cfg.omega_atom = [[v; 2]; 2],
        "gamma_atom" => cfg.gamma_atom = [[v; 2]; 2],
        "omega_field" => cfg.omega_field = [v; 2],
        "gamma_field" => cfg.gamma_field = [v; 2],
        "lambda" => cfg.lambda = [v; 2],
        "nbar" => cfg.nbar = [v; 2],
        "varpi" => cfg.varpi = v,
        "theta" => cfg.theta = v,
        "phi" => cfg.phi = v,
        "kappa" => cfg.kappa = v as usize,
        _ if key.starts_with("omega_atom_") => cfg.omega_atom[idx(parts[1])][idx(parts[0])] = v,
        _ if key.starts_with("gamma_atom_") => cfg.gamma_atom[idx(parts[1])][idx(parts[0])] = v,
        _ if key.starts_with("omega_field_") => cfg.omega_field[idx(parts[0])] = v,
        _ if key.starts_with("gamma_field_") => cfg.gamma_field[idx(parts[0])] = v,
        _ if key.starts_with("lambda_") => cfg.lambda[idx(parts[0])] = v,
        _ if key.starts_with("nbar_") => cfg.nbar[idx(parts[0])] = v,
        _ => unreachable!("unchecked key {key}"),
    }
}

/// Resolves flags plus optional config text into a [`RunSpec`].
pub fn resolve_run(args: &RunArgs, config_text: Option<&str>) -> Result<RunSpec> {
    let overrides = match config_text {
        Some(text) => parse_config(text)?,
        None => Overrides::default(),
    };
    let preset_name = match (&args.preset, &overrides.preset) {
        (Some(a), Some(b)) if a != b => {
            return Err(Error::ConflictingFlags(format!("--preset {a} but the config file names preset {b}")))
        }
        (Some(a), _) => Some(a.clone()),
        (None, b) => b.clone(),
    };
    let preset = match &preset_name {
        Some(name) => PresetTable::get(name)?,
        None => Preset {
            name: "custom",
            sweep: SweepKind::Time,
            curves: vec![Curve { label: "custom".into(), config: figure_base() }],
            phi_times: vec![],
        },
    };

    let mut curves = preset.curves.clone();
    for curve in &mut curves {
        let before = curve.config.clone();
        for (_, key, value) in &overrides.params {
            apply_param(&mut curve.config, key, *value);
        }
        match overrides.n_max {
            Some(n) => curve.config.n_max = n,
            None => {
                if before.nbar != curve.config.nbar || before.kappa != curve.config.kappa {
                    let nbar = curve.config.nbar[0].max(curve.config.nbar[1]);
                    curve.config.n_max = default_n_max(nbar, curve.config.kappa);
                }
            }
        }
        curve.config = validate_config(curve.config.clone())?;
    }

    let sweep = args.sweep.or(overrides.sweep).unwrap_or(preset.sweep);
    let (default_start, default_stop, default_count) = match sweep {
        SweepKind::Time => (0.0, 20.0 * PI, DEFAULT_TIME_POINTS),
        SweepKind::Phi => (0.0, 4.0 * PI, DEFAULT_PHI_POINTS),
    };
    let flag_number = |flag: &Option<String>, name: &'static str| -> Result<Option<f64>> {
        flag.as_deref()
            .map(|raw| {
                parse_number(raw)
                    .ok_or_else(|| Error::InvalidParameter { name, reason: format!("`{raw}` is not a number") })
            })
            .transpose()
    };
    let grid = GridSpec {
        start: flag_number(&args.t_start, "t-start")?.or(overrides.start).unwrap_or(default_start),
        stop: flag_number(&args.t_stop, "t-stop")?.or(overrides.stop).unwrap_or(default_stop),
        count: args.points.or(overrides.points).unwrap_or(default_count),
    };
    if grid.count < 2 {
        return Err(Error::InvalidParameter { name: "points", reason: format!("need at least 2, got {}", grid.count) });
    }
    if !(grid.stop > grid.start) || !grid.start.is_finite() || !grid.stop.is_finite() {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: format!("stop ({}) must exceed start ({})", grid.stop, grid.start),
        });
    }
    if sweep == SweepKind::Time && grid.start < 0.0 {
        return Err(Error::InvalidParameter { name: "t-start", reason: "time grids start at 0 or later".into() });
    }
    if args.counter_rotating && !args.oracle {
        return Err(Error::ConflictingFlags("--counter-rotating only affects the --oracle columns".into()));
    }
    if args.oracle && sweep == SweepKind::Phi {
        return Err(Error::ConflictingFlags("--oracle applies to time sweeps only".into()));
    }
    if args.jobs == Some(0) {
        return Err(Error::InvalidParameter { name: "jobs", reason: "must be at least 1".into() });
    }
    let phi_times = overrides.phi_times.clone().unwrap_or_else(|| {
        if preset.phi_times.is_empty() {
            vec![PI / 3.0, PI / 4.0, PI / 2.0]
        } else {
            preset.phi_times.clone()
        }
    });
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}.csv", preset.name)));

    Ok(RunSpec {
        source: preset.name.to_string(),
        config_path: args.config.clone(),
        curves,
        sweep,
        grid,
        phi_times,
        out,
        jobs: args.jobs,
        oracle: args.oracle,
        counter_rotating: args.counter_rotating,
    })
}

/// Summary of a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub rows: usize,
    pub rwa_max_discrepancy: Option<f64>,
}

/// Computes every row, then writes the CSV through a temporary file and a
/// rename.
pub fn run(spec: &RunSpec) -> Result<RunReport> {
    let (csv, report) = match spec.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Io(format!("thread pool: {e}")))?
            .install(|| render(spec))?,
        None => render(spec)?,
    };
    write_atomically(&spec.out, csv.as_bytes())?;
    Ok(report)
}

fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().ok_or_else(|| Error::Io(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes).map_err(|e| Error::Io(format!("{}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::Io(format!("{}: {e}", path.display()))
    })
}

/// 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Produces the full CSV text for a run.
pub fn render(spec: &RunSpec) -> Result<(String, RunReport)> {
    let mut body = String::new();
    let mut rows = 0;
    let mut rwa_max: Option<f64> = None;
    let mut diagnostics = Vec::new();

    match spec.sweep {
        SweepKind::Time => {
            let grid = spec.grid.points();
            let mut header = String::from("curve,t,concurrence,pancharatnam,norm2,p11,p12,p21,p22");
            if spec.oracle {
                header.push_str(",oracle_concurrence,oracle_max_amplitude_diff");
            }
            body.push_str(&header);
            body.push('\n');
            for curve in &spec.curves {
                let sim = Simulation::new(curve.config.clone())?;
                diagnostics.push(format!(
                    "{}: tail_mass=({:e},{:e}) initial_deficit={:e}",
                    curve.label,
                    sim.field()[0].tail_mass,
                    sim.field()[1].tail_mass,
                    sim.initial_deficit()
                ));
                let records = simulation_time_series(&sim, &grid)?;
                let oracle = if spec.oracle { Some(oracle_columns(&sim, &grid, spec.counter_rotating)?) } else { None };
                for (i, r) in records.iter().enumerate() {
                    write_time_row(&mut body, &curve.label, r);
                    if let Some(cols) = &oracle {
                        let (c, d) = cols[i];
                        let _ = write!(body, ",{},{}", num(c), num(d));
                        if spec.counter_rotating {
                            rwa_max = Some(rwa_max.unwrap_or(0.0).max(d));
                        }
                    }
                    body.push('\n');
                    rows += 1;
                }
            }
        }
        SweepKind::Phi => {
            body.push_str("curve,phi,pancharatnam_phase\n");
            let phis = spec.grid.points();
            for curve in &spec.curves {
                for &t in &spec.phi_times {
                    let sweep = PhiSweep::new(&curve.config, t)?;
                    let label = if spec.curves.len() == 1 {
                        format!("lambda_t={}", num(t))
                    } else {
                        format!("{}/lambda_t={}", curve.label, num(t))
                    };
                    for (phi, phase) in sweep.samples(&phis) {
                        let _ = writeln!(body, "{label},{},{}", num(phi), phase.map(num).unwrap_or_default());
                        rows += 1;
                    }
                }
            }
        }
    }

    let mut csv = metadata_line(spec, &diagnostics, rwa_max);
    csv.push('\n');
    csv.push_str(&body);
    Ok((csv, RunReport { rows, rwa_max_discrepancy: rwa_max }))
}

fn write_time_row(out: &mut String, label: &str, r: &ObservableRecord) {
    let [p11, p12, p21, p22] = r.populations;
    let _ = write!(
        out,
        "{label},{},{},{},{},{},{},{},{}",
        num(r.time),
        num(r.concurrence),
        r.pancharatnam.map(num).unwrap_or_default(),
        num(r.norm2),
        num(p11),
        num(p12),
        num(p21),
        num(p22)
    );
}

/// Concurrence from the reference integrator and the largest amplitude
/// difference to the analytic path, per grid time.
fn oracle_columns(sim: &Simulation, grid: &[f64], counter_rotating: bool) -> Result<Vec<(f64, f64)>> {
    let mut integrators: Vec<ReferenceIntegrator> =
        sim.initial_blocks().map(|(coeffs, amps)| ReferenceIntegrator::new(coeffs, amps, counter_rotating)).collect();
    let labels: Vec<(usize, usize)> = sim.block_coefficients().map(|c| (c.n1, c.n2)).collect();
    let mut out = Vec::with_capacity(grid.len());
    for chunk in grid.chunks(ORACLE_CHUNK) {
        // per block: amplitudes at every time of the chunk
        let per_block: Vec<Vec<BlockAmplitudes>> = integrators
            .par_iter_mut()
            .zip(labels.par_iter())
            .map(|(integ, &(n1, n2))| {
                chunk.iter().map(|&t| integ.advance_to(t)).collect::<Result<Vec<_>>>().map_err(|e| Error::Block {
                    n1,
                    n2,
                    source: Box::new(e),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let cols = chunk
            .par_iter()
            .enumerate()
            .map(|(k, &t)| {
                let amps: Vec<BlockAmplitudes> = per_block.iter().map(|b| b[k]).collect();
                let analytic = sim.blocks_at(t)?;
                let diff = amps
                    .iter()
                    .zip(&analytic)
                    .flat_map(|(a, b)| (0..4).map(move |m| (a.0[m] - b.0[m]).norm()))
                    .fold(0.0, f64::max);
                let rho = partial_trace_atoms(&sim.assemble(&amps, t));
                Ok((crate::observables::concurrence(&rho)?, diff))
            })
            .collect::<Result<Vec<_>>>()?;
        out.extend(cols);
    }
    Ok(out)
}

fn describe(cfg: &SystemConfig) -> String {
    let [[w11, w12], [w21, w22]] = cfg.omega_atom;
    let [[r11, r12], [r21, r22]] = cfg.gamma_atom;
    format!(
        "omega_atom=({},{},{},{}) gamma_atom=({},{},{},{}) omega_field=({},{}) gamma_field=({},{}) \
         lambda=({},{}) varpi={} kappa={} theta={} phi={} nbar=({},{}) n_max={} detuning={}",
        num(w11),
        num(w12),
        num(w21),
        num(w22),
        num(r11),
        num(r12),
        num(r21),
        num(r22),
        num(cfg.omega_field[0]),
        num(cfg.omega_field[1]),
        num(cfg.gamma_field[0]),
        num(cfg.gamma_field[1]),
        num(cfg.lambda[0]),
        num(cfg.lambda[1]),
        num(cfg.varpi),
        cfg.kappa,
        num(cfg.theta),
        num(cfg.phi),
        num(cfg.nbar[0]),
        num(cfg.nbar[1]),
        cfg.n_max,
        num(cfg.detuning()),
    )
}

fn metadata_line(spec: &RunSpec, diagnostics: &[String], rwa_max: Option<f64>) -> String {
    let mut parts = vec![
        format!("cavity-core {}", env!("CARGO_PKG_VERSION")),
        format!("source={}", spec.source),
        format!("sweep={}", spec.sweep.name()),
        format!("grid=[{},{}] points={}", num(spec.grid.start), num(spec.grid.stop), spec.grid.count),
        "coherent_phase=real_nonnegative".into(),
        "truncation=ceil(nbar+10sqrt(nbar))+kappa unless overridden".into(),
        "normalization=trace_normalized_reduced_density(norm2_raw)".into(),
        "frame=B1=A1exp(-i delta t),B4=A4exp(+i delta t)".into(),
        format!("jump_threshold={JUMP_THRESHOLD}"),
        format!("decay_set=({})", DECAY_SET.map(num).join(",")),
        "atomic_decay_curves_apply_Gamma_to_all_levels_and_atoms".into(),
    ];
    if let Some(path) = &spec.config_path {
        parts.push(format!("config={}", path.display()));
    }
    if spec.sweep == SweepKind::Phi {
        parts.push(format!("phi_times=({})", spec.phi_times.iter().map(|t| num(*t)).collect::<Vec<_>>().join(",")));
    }
    if spec.oracle {
        parts.push(format!("oracle=reference_integrator counter_rotating={}", spec.counter_rotating));
    }
    if let Some(d) = rwa_max {
        parts.push(format!("rwa_max_discrepancy={}", num(d)));
    }
    for curve in &spec.curves {
        parts.push(format!("curve[{}]: {}", curve.label, describe(&curve.config)));
    }
    parts.extend(diagnostics.iter().cloned());
    let mut line = String::from("# ");
    line.push_str(&parts.join("; ").replace('\n', " "));
    line
}
