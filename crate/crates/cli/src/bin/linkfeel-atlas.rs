use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use linkfeel_cli::args::{parse_bounds, parse_floats, parse_grid, parse_interval, parse_serde};
use linkfeel_core::atlas::field::{sample_index_field, AtlasMechanism};
use linkfeel_core::atlas::{
    compute_aspects, write_aspects_csv, write_aspects_pgm, write_field_csv, write_field_pgm, DEFAULT_SINGULAR_THRESHOLD,
};
use linkfeel_core::{FieldKind, FieldMode, FiveBarGeometry, GridSpec, IndexField, Interval, Mechanism, SerialGeometry};

/// Samples singularity index fields and their aspects on a grid.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the normalized index field.
    Sample(FieldArgs),
    /// Write the aspect labels of the field and print their sizes.
    Aspects {
        #[command(flatten)]
        field: FieldArgs,
        /// Normalized index below which a vertex counts as singular.
        #[arg(long, default_value_t = DEFAULT_SINGULAR_THRESHOLD)]
        threshold: f64,
    },
}

#[derive(Debug, Args)]
struct FieldArgs {
    /// serial or fivebar.
    #[arg(long, value_parser = parse_serde::<Mechanism>)]
    mech: Mechanism,
    /// serial_combined, fivebar_direct, fivebar_inverse or fivebar_composed.
    /// Defaults to serial_combined / fivebar_composed.
    #[arg(long, value_parser = parse_serde::<FieldKind>)]
    kind: Option<FieldKind>,
    /// ElbowPlus, ElbowMinus, AllPostures, WM1..WM4 or e.g. WM2-AM1.
    /// Defaults to ElbowPlus / WM1.
    #[arg(long)]
    mode: Option<FieldMode>,
    #[arg(long, default_value = "400x400", value_parser = parse_grid)]
    grid: (usize, usize),
    /// XMIN,XMAX,YMIN,YMAX; defaults to the padded workspace box.
    #[arg(long, value_parser = parse_bounds, allow_hyphen_values = true)]
    bounds: Option<[f64; 4]>,
    /// Link lengths: L1,L2 (serial) or L0,L1,L2,L3,L4 (five-bar).
    #[arg(long, value_parser = parse_floats, allow_hyphen_values = true)]
    lengths: Option<Vec<f64>>,
    /// Serial joint-1 limits LO,HI in radians.
    #[arg(long, value_parser = parse_interval, allow_hyphen_values = true)]
    theta1_limits: Option<Interval>,
    /// Serial joint-2 limits LO,HI in radians (absolute angle).
    #[arg(long, value_parser = parse_interval, allow_hyphen_values = true)]
    theta2_limits: Option<Interval>,
    /// Joint-limit ramp width in radians.
    #[arg(long, default_value_t = 0.3)]
    margin: f64,
    /// Output file; .csv or .pgm.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy)]
enum Format {
    Csv,
    Pgm,
}

impl FieldArgs {
    fn format(&self) -> Result<Format, String> {
        match self.out.extension().and_then(|e| e.to_str()) {
            Some("csv") => Ok(Format::Csv),
            Some("pgm") => Ok(Format::Pgm),
            _ => Err(format!("{}: output must end in .csv or .pgm", self.out.display())),
        }
    }

    fn mechanism(&self) -> Result<AtlasMechanism, String> {
        match self.mech {
            Mechanism::Serial => {
                let [l1, l2] = match self.lengths.as_deref() {
                    None => [1.0, 1.0],
                    Some(&[l1, l2]) => [l1, l2],
                    Some(v) => return Err(format!("the serial arm takes 2 lengths, got {}", v.len())),
                };
                let geometry = SerialGeometry::new(l1, l2)
                    .and_then(|g| g.with_limits(self.theta1_limits, self.theta2_limits))
                    .map_err(|e| e.to_string())?;
                Ok(AtlasMechanism::Serial {
                    geometry,
                    limit_margin: self.margin,
                })
            }
            Mechanism::FiveBar => {
                if self.theta1_limits.is_some() || self.theta2_limits.is_some() {
                    return Err("joint limits apply to the serial arm only".into());
                }
                let geometry = match self.lengths.as_deref() {
                    None => FiveBarGeometry::default(),
                    Some(&[l0, l1, l2, l3, l4]) => {
                        FiveBarGeometry::new(l0, l1, l2, l3, l4).map_err(|e| e.to_string())?
                    }
                    Some(v) => return Err(format!("the five-bar takes 5 lengths, got {}", v.len())),
                };
                Ok(AtlasMechanism::FiveBar { geometry })
            }
        }
    }

    fn sample(&self) -> Result<IndexField, String> {
        let mech = self.mechanism()?;
        let (nx, ny) = self.grid;
        let grid = match self.bounds {
            Some([x_min, x_max, y_min, y_max]) => GridSpec::new((x_min, x_max), (y_min, y_max), nx, ny),
            None => mech.default_grid(nx, ny),
        }
        .map_err(|e| e.to_string())?;
        let (kind, mode) = match self.mech {
            Mechanism::Serial => (
                FieldKind::SerialCombined,
                FieldMode::Posture(linkfeel_core::Posture::ElbowPlus),
            ),
            Mechanism::FiveBar => (
                FieldKind::FiveBarComposed,
                FieldMode::working(linkfeel_core::WorkingMode::WM1),
            ),
        };
        sample_index_field(&mech, grid, self.kind.unwrap_or(kind), self.mode.unwrap_or(mode)).map_err(|e| e.to_string())
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, String> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| format!("{}: {e}", path.display()))
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Sample(args) => {
            let format = args.format()?;
            let field = args.sample()?;
            let mut out = create(&args.out)?;
            match format {
                Format::Csv => write_field_csv(&field, &mut out),
                Format::Pgm => write_field_pgm(&field, &mut out),
            }
            .and_then(|_| out.flush())
            .map_err(|e| e.to_string())?;
            let reachable = field.reachable().count();
            println!(
                "{:?} {}: {}x{} vertices, {reachable} reachable, max raw {:e}",
                field.kind, field.mode, field.grid.nx, field.grid.ny, field.max_raw
            );
        }
        Command::Aspects { field: args, threshold } => {
            let format = args.format()?;
            let field = args.sample()?;
            let map = compute_aspects(&field, threshold).map_err(|e| e.to_string())?;
            let mut out = create(&args.out)?;
            match format {
                Format::Csv => write_aspects_csv(&map, &mut out),
                Format::Pgm => write_aspects_pgm(&map, &mut out),
            }
            .and_then(|_| out.flush())
            .map_err(|e| e.to_string())?;
            println!("aspects: {}", map.count);
            for (label, size) in map.sizes().iter().enumerate().skip(1) {
                println!("  {label}: {size} vertices");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("linkfeel-atlas: {e}");
            ExitCode::FAILURE
        }
    }
}
