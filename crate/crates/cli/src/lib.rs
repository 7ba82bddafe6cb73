//! Shell around the pipeline: point-file ingestion, barcode files, oracle
//! comparison, a per-cover origin report, and a static SVG plot.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ph_core::cover::GridSpec;
use ph_core::geometry::Point2;
use ph_core::oracle::{self, Bar};
use ph_core::runtime::{run, LocalizedBar, RunError, RunOptions, RunOutput};

#[derive(Parser)]
#[command(name = "ph", version, about = "Persistent homology of 2D point clouds")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Distributed pipeline over a grid cover.
    Compute(ComputeArgs),
    /// Sequential computation only.
    Oracle(OracleArgs),
}

#[derive(Args)]
pub struct ComputeArgs {
    /// Point file: one "x y" per line, '#' starts a comment.
    #[arg(long)]
    pub input: PathBuf,
    /// Grid layout, e.g. 2x3; one worker per zone.
    #[arg(long, default_value = "1x1", value_parser = parse_grid)]
    pub grid: (usize, usize),
    /// Points per grid cell targeted when sizing the zones.
    #[arg(long, default_value_t = 1000)]
    pub density: usize,
    /// Also run the sequential computation and compare.
    #[arg(long)]
    pub compare: bool,
    /// Comparison tolerance on interval endpoints.
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,
    /// Write a static SVG barcode plot.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Write the per-cover origin of each interval.
    #[arg(long)]
    pub localized: Option<PathBuf>,
    /// Message delivery shuffle seed (test-harness fuzzing only; the output
    /// never depends on it).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for the dim0.txt / dim1.txt barcode files.
    #[arg(long, default_value = ".")]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Write a static SVG barcode plot.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Directory for the dim0.txt / dim1.txt barcode files.
    #[arg(long, default_value = ".")]
    pub output: PathBuf,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected M1xM2, got {s:?}"))?;
    let m1 = a.parse().map_err(|_| format!("bad zone count {a:?}"))?;
    let m2 = b.parse().map_err(|_| format!("bad zone count {b:?}"))?;
    if m1 == 0 || m2 == 0 {
        return Err("grid dimensions must be positive".into());
    }
    Ok((m1, m2))
}

/// Reads a point file: two whitespace-separated reals per line, blank lines
/// and '#' comments skipped, duplicates rejected. Errors carry the line
/// number.
pub fn read_points(path: &Path) -> Result<Vec<(usize, Point2)>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut points = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            bail!(
                "{}:{}: expected two coordinates, got {}",
                path.display(),
                lineno,
                fields.len()
            );
        }
        let x: f64 = fields[0]
            .parse()
            .with_context(|| format!("{}:{}: bad number {:?}", path.display(), lineno, fields[0]))?;
        let y: f64 = fields[1]
            .parse()
            .with_context(|| format!("{}:{}: bad number {:?}", path.display(), lineno, fields[1]))?;
        if !x.is_finite() || !y.is_finite() {
            bail!("{}:{}: coordinates must be finite", path.display(), lineno);
        }
        if !seen.insert((x.to_bits(), y.to_bits())) {
            bail!("{}:{}: duplicate point ({x}, {y})", path.display(), lineno);
        }
        points.push((points.len(), Point2::new(x, y)));
    }
    if points.is_empty() {
        bail!("{}: no points", path.display());
    }
    Ok(points)
}

/// 17 significant digits, or "inf".
pub fn format_value(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:.16e}")
    }
}

/// One "dim birth death" line per interval, standard order assumed.
pub fn format_bars(bars: &[Bar]) -> String {
    let mut s = String::new();
    for b in bars {
        writeln!(s, "{} {} {}", b.dim, format_value(b.birth), format_value(b.death)).unwrap();
    }
    s
}

/// Inverse of [`format_bars`]; used by the round-trip check.
pub fn parse_bars(text: &str) -> Result<Vec<Bar>> {
    let mut bars = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            bail!("line {}: expected \"dim birth death\"", idx + 1);
        }
        bars.push(Bar {
            dim: fields[0].parse().with_context(|| format!("line {}", idx + 1))?,
            birth: fields[1].parse().with_context(|| format!("line {}", idx + 1))?,
            death: fields[2].parse().with_context(|| format!("line {}", idx + 1))?,
        });
    }
    Ok(bars)
}

/// Writes dim0.txt and dim1.txt under `dir`.
pub fn write_barcode_files(dir: &Path, bars: &[Bar]) -> Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create {}", dir.display()))?;
    for dim in 0..2 {
        let slice: Vec<Bar> = bars.iter().copied().filter(|b| b.dim == dim).collect();
        let path = dir.join(format!("dim{dim}.txt"));
        std::fs::write(&path, format_bars(&slice))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

/// Per-cover origin report: the interval followed by the nerve cells its
/// generator draws from, zones comma-separated within a cell.
pub fn localized_report(bars: &[LocalizedBar]) -> String {
    let mut s = String::new();
    for lb in bars {
        write!(
            s,
            "{} {} {}",
            lb.bar.dim,
            format_value(lb.bar.birth),
            format_value(lb.bar.death)
        )
        .unwrap();
        for cell in &lb.cells {
            let zones: Vec<String> = cell.iter().map(|z| z.to_string()).collect();
            write!(s, " {}", zones.join(",")).unwrap();
        }
        s.push('\n');
    }
    s
}

/// Static barcode plot: one horizontal line per interval, dimension 0 in
/// red, dimension 1 in blue; infinite bars run to the right edge.
pub fn svg_plot(bars: &[Bar]) -> String {
    const W: f64 = 800.0;
    const ROW: f64 = 8.0;
    const MARGIN: f64 = 40.0;
    let drawn: Vec<&Bar> = bars.iter().filter(|b| !b.is_empty()).collect();
    let h = MARGIN * 2.0 + ROW * drawn.len().max(1) as f64;
    let max_finite = drawn
        .iter()
        .flat_map(|b| [b.birth, b.death])
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let x = |v: f64| {
        if v.is_infinite() {
            W - MARGIN / 2.0
        } else {
            MARGIN + (W - 2.0 * MARGIN) * v / max_finite
        }
    };
    let mut s = String::new();
    writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{h}\" \
         viewBox=\"0 0 {W} {h}\">"
    )
    .unwrap();
    writeln!(
        s,
        "  <line x1=\"{MARGIN}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>",
        h - MARGIN / 2.0,
        W - MARGIN
    )
    .unwrap();
    for (i, b) in drawn.iter().enumerate() {
        let color = if b.dim == 0 { "red" } else { "blue" };
        let y = MARGIN + ROW * i as f64;
        writeln!(
            s,
            "  <line x1=\"{:.3}\" y1=\"{y}\" x2=\"{:.3}\" y2=\"{y}\" \
             stroke=\"{color}\" stroke-width=\"3\"/>",
            x(b.birth),
            x(b.death),
        )
        .unwrap();
    }
    writeln!(s, "</svg>").unwrap();
    s
}

/// Exit code contract: 0 ok, 1 error, 2 collapse-hypothesis failure.
pub fn exit_code(err: &RunError) -> u8 {
    match err {
        RunError::Collapse(_) => 2,
        _ => 1,
    }
}

fn finish_output(
    bars: &[Bar],
    localized: Option<(&Path, &[LocalizedBar])>,
    plot: Option<&Path>,
    output: &Path,
) -> Result<()> {
    write_barcode_files(output, bars)?;
    if let Some((path, lbs)) = localized {
        std::fs::write(path, localized_report(lbs))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    if let Some(path) = plot {
        std::fs::write(path, svg_plot(bars))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn compute(args: &ComputeArgs) -> Result<u8> {
    let points = read_points(&args.input)?;
    let (m1, m2) = args.grid;
    let spec = GridSpec {
        m1,
        m2,
        density: args.density,
        k: 0,
    };
    let out: RunOutput = match run(
        &points,
        spec,
        m1 * m2,
        RunOptions {
            seed: args.seed,
            optimised: true,
        },
    ) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(exit_code(&e));
        }
    };
    for (phase, secs) in &out.timings {
        eprintln!("phase {phase}: {secs:.3} s");
    }
    let bars = out.plain_bars();
    finish_output(
        &bars,
        args.localized.as_deref().map(|p| (p, out.bars.as_slice())),
        args.plot.as_deref(),
        &args.output,
    )?;
    if args.compare {
        let want = oracle::sequential_persistence(&points)?;
        match oracle::compare(&bars, &want, args.tolerance) {
            Ok(()) => println!("MATCH"),
            Err(m) => {
                println!("{m}");
                return Ok(1);
            }
        }
    }
    Ok(0)
}

fn oracle_cmd(args: &OracleArgs) -> Result<u8> {
    let points = read_points(&args.input)?;
    let bars = oracle::sequential_persistence(&points)?;
    finish_output(&bars, None, args.plot.as_deref(), &args.output)?;
    Ok(0)
}

/// Runs one parsed invocation and returns the process exit code.
pub fn run_cli(cli: &Cli) -> u8 {
    let result = match &cli.cmd {
        Cmd::Compute(args) => compute(args),
        Cmd::Oracle(args) => oracle_cmd(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
