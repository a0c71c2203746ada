//! `lmgc`: sweeps, limit-temperature maps and spectrum dumps on the command
//! line. Exit codes: 0 success, 2 bad arguments, 3 numerical or I/O failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use serde::{Deserialize, Serialize};

use lmg_concurrence::exact::spectrum_low;
use lmg_concurrence::harness::{
    emit, run_phase_map, run_points, run_sweep, Axis, EnergyUnit, Format, GridRange, Method, Output, SweepSpec, Table,
};
use lmg_concurrence::{Error, ModelParams};

#[derive(Debug, Parser)]
#[command(
    name = "lmgc",
    version,
    about = "Thermal pairwise concurrence of fully connected XYZ spins in a transverse field"
)]
struct Cli {
    /// Number of spins.
    #[arg(long)]
    n: Option<usize>,
    /// Transverse field (fixed value, or the default of a temperature sweep).
    #[arg(long)]
    b: Option<f64>,
    /// Coupling along x; when omitted energies are in units of v_x = 1.
    #[arg(long)]
    vx: Option<f64>,
    #[arg(long, conflicts_with = "chi")]
    vy: Option<f64>,
    #[arg(long)]
    vz: Option<f64>,
    /// Anisotropy (v_y - v_z)/(v_x - v_z), instead of --vy.
    #[arg(long)]
    chi: Option<f64>,
    /// Temperature.
    #[arg(long = "T", short = 'T')]
    temperature: Option<f64>,
    /// exact | oracle | mfrpa_full | mfrpa_asymptotic | cspa
    #[arg(long)]
    method: Option<Method>,
    /// Sweep axis: field | temperature. Without it a single point is computed.
    #[arg(long)]
    sweep: Option<Axis>,
    #[arg(long)]
    from: Option<f64>,
    #[arg(long)]
    to: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// Geometric instead of linear spacing.
    #[arg(long)]
    geometric: bool,
    /// Comma-separated columns: C,nC,C+,C-,alpha_x,alpha_y,alpha_z,sz,lnZ,omega,lambda,T_L+,T_L-
    #[arg(long, value_delimiter = ',')]
    outputs: Option<Vec<Output>>,
    /// Limit temperatures on the --from/--to/--points field grid.
    #[arg(long)]
    phase_map: bool,
    /// Dump the lowest COUNT levels at --b instead.
    #[arg(long, value_name = "COUNT")]
    spectrum: Option<usize>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv | json
    #[arg(long)]
    format: Option<Format>,
    /// JSON file with any of the flags above as keys; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Mirror of the flags for `--config`.
#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    n: Option<usize>,
    b: Option<f64>,
    vx: Option<f64>,
    vy: Option<f64>,
    vz: Option<f64>,
    chi: Option<f64>,
    #[serde(rename = "T")]
    temperature: Option<f64>,
    method: Option<Method>,
    sweep: Option<Axis>,
    from: Option<f64>,
    to: Option<f64>,
    points: Option<usize>,
    geometric: Option<bool>,
    outputs: Option<Vec<Output>>,
    phase_map: Option<bool>,
    spectrum: Option<usize>,
    out: Option<PathBuf>,
    format: Option<Format>,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn numerical(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_input_error() {
            Failure::usage(e.to_string())
        } else {
            Failure::numerical(e.to_string())
        }
    }
}

/// Flags merged over the config file, with defaults applied.
#[derive(Debug)]
struct Settings {
    params: ModelParams,
    units: EnergyUnit,
    temperature: f64,
    method: Method,
    sweep: Option<Axis>,
    range: Option<GridRange>,
    outputs: Vec<Output>,
    phase_map: bool,
    spectrum: Option<usize>,
    out: Option<PathBuf>,
    format: Format,
}

fn load_config(path: &Path) -> Result<ConfigFile, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("bad config {}: {e}", path.display())))
}

fn settings(cli: Cli) -> Result<Settings, Failure> {
    let cfg = match &cli.config {
        Some(p) => load_config(p)?,
        None => ConfigFile::default(),
    };
    if cfg.vy.is_some() && cfg.chi.is_some() {
        return Err(Failure::usage("config gives both vy and chi"));
    }
    let n = cli.n.or(cfg.n).ok_or_else(|| Failure::usage("--n is required"))?;
    let b = cli.b.or(cfg.b).unwrap_or(0.0);
    let vx_given = cli.vx.or(cfg.vx);
    let vx = vx_given.unwrap_or(1.0);
    let vz = cli.vz.or(cfg.vz).unwrap_or(0.0);
    // an anisotropy flag replaces whatever the config said about v_y
    let (vy, chi) = if cli.vy.is_some() || cli.chi.is_some() { (cli.vy, cli.chi) } else { (cfg.vy, cfg.chi) };
    let params = match (vy, chi) {
        (_, Some(chi)) => ModelParams::with_chi(n, b, vx, chi, vz)?,
        (vy, None) => ModelParams::new(n, b, vx, vy.unwrap_or(0.0), vz)?,
    };
    let sweep = cli.sweep.or(cfg.sweep);
    let phase_map = cli.phase_map || cfg.phase_map.unwrap_or(false);
    let from = cli.from.or(cfg.from);
    let to = cli.to.or(cfg.to);
    let range = match (from, to) {
        (Some(start), Some(stop)) => Some(GridRange {
            start,
            stop,
            points: cli.points.or(cfg.points).unwrap_or(21),
            geometric: cli.geometric || cfg.geometric.unwrap_or(false),
        }),
        (None, None) => None,
        _ => return Err(Failure::usage("--from and --to go together")),
    };
    if (sweep.is_some() || phase_map) && range.is_none() {
        return Err(Failure::usage("a sweep or phase map needs --from and --to"));
    }
    let modes = [sweep.is_some(), phase_map, cli.spectrum.or(cfg.spectrum).is_some()];
    if modes.iter().filter(|&&m| m).count() > 1 {
        return Err(Failure::usage("--sweep, --phase-map and --spectrum are exclusive"));
    }
    Ok(Settings {
        params,
        units: if vx_given.is_some() { EnergyUnit::Absolute } else { EnergyUnit::Vx },
        temperature: cli.temperature.or(cfg.temperature).unwrap_or(0.0),
        method: cli.method.or(cfg.method).unwrap_or(Method::Exact),
        sweep,
        range,
        outputs: cli.outputs.or(cfg.outputs).unwrap_or_else(|| Output::DEFAULT.to_vec()),
        phase_map,
        spectrum: cli.spectrum.or(cfg.spectrum),
        out: cli.out.or(cfg.out),
        format: cli.format.or(cfg.format).unwrap_or(Format::Csv),
    })
}

fn spec_of(s: &Settings, axis: Axis, range: GridRange) -> SweepSpec {
    let mut spec = SweepSpec::new(s.method, s.params, s.temperature, axis, range).with_outputs(&s.outputs);
    spec.units = s.units;
    spec
}

fn build_table(s: &Settings) -> Result<Table, Failure> {
    if s.phase_map {
        let range = s.range.expect("checked in settings");
        range.validate()?;
        let mut table = run_phase_map(&s.params, &range.values(), s.method)?;
        table.metadata.units = s.units;
        return Ok(table);
    }
    if let Some(axis) = s.sweep {
        return Ok(run_sweep(&spec_of(s, axis, s.range.expect("checked in settings")))?);
    }
    // a single point is a one-row field table; its failure is a hard error
    if let Some(o) = s.outputs.iter().find(|&&o| !s.method.supports(o)) {
        return Err(Failure::usage(format!("method {} cannot produce {o}", s.method)));
    }
    let spec = spec_of(s, Axis::Field, GridRange::linear(s.params.b, s.params.b, 2));
    let table = run_points(&spec, &[s.params.b])?;
    let row = &table.rows[0];
    if row.failed {
        let note = row.flags.note.clone().unwrap_or_default();
        return Err(if row.bad_input { Failure::usage(note) } else { Failure::numerical(note) });
    }
    Ok(table)
}

#[derive(Serialize)]
struct SpectrumRow {
    /// Twice the total spin.
    two_s: u32,
    k: usize,
    parity: &'static str,
    delta_e: f64,
}

fn write_spectrum<W: Write>(s: &Settings, count: usize, mut w: W) -> Result<(), Failure> {
    let levels = spectrum_low(&s.params, count)?;
    let rows: Vec<SpectrumRow> = levels
        .iter()
        .map(|l| SpectrumRow {
            two_s: l.spin2.0,
            k: l.k,
            parity: if l.parity.sign() > 0 { "even" } else { "odd" },
            delta_e: l.delta_e,
        })
        .collect();
    let io = |e: std::io::Error| Failure::numerical(e.to_string());
    match s.format {
        Format::Csv => {
            writeln!(w, "two_s,k,parity,delta_e").map_err(io)?;
            for r in &rows {
                writeln!(w, "{},{},{},{:?}", r.two_s, r.k, r.parity, r.delta_e).map_err(io)?;
            }
        }
        Format::Json => {
            let doc = serde_json::json!({
                "metadata": { "params": s.params, "units": s.units, "version": env!("CARGO_PKG_VERSION") },
                "rows": rows,
            });
            serde_json::to_writer_pretty(&mut w, &doc).map_err(|e| Failure::numerical(e.to_string()))?;
            writeln!(w).map_err(io)?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let s = settings(cli)?;
    // render fully before touching the destination
    let mut buf = Vec::new();
    if let Some(count) = s.spectrum {
        write_spectrum(&s, count, &mut buf)?;
    } else {
        emit(&build_table(&s)?, s.format, &mut buf)?;
    }
    let written = match &s.out {
        Some(p) => std::fs::write(p, &buf).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => std::io::stdout().lock().write_all(&buf).map_err(|e| e.to_string()),
    };
    written.map_err(Failure::numerical)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("lmgc: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
