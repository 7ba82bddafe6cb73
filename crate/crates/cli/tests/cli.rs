//! End-to-end tests of the `ph` binary and the file formats.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ph"))
}

fn tmpdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ph-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_cloud(path: &Path, seed: u64, n: usize) {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut s = String::from("# test cloud\n\n");
    for _ in 0..n {
        s.push_str(&format!(
            "{} {}\n",
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-5.0..5.0)
        ));
    }
    std::fs::write(path, s).unwrap();
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn compute_writes_barcode_files() {
    let dir = tmpdir("compute");
    let input = dir.join("pts.txt");
    write_cloud(&input, 1, 80);
    let out = bin()
        .args(["compute", "--input"])
        .arg(&input)
        .args(["--grid", "2x2", "--output"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    for dim in 0..2 {
        let text = std::fs::read_to_string(dir.join(format!("dim{dim}.txt"))).unwrap();
        assert!(!text.is_empty());
        for line in text.lines() {
            assert!(line.starts_with(&format!("{dim} ")));
        }
    }
    // Every phase shows up in the timing report.
    let log = stderr(&out);
    for phase in [
        "point-distribution",
        "layer-points",
        "triple-intersection-share",
        "critical-non-gabriel",
        "barcode-and-matrices",
        "e2-broadcast",
        "lift-coordinates",
        "withheld-intervals",
        "final-barcode",
    ] {
        assert!(log.contains(&format!("phase {phase}:")), "missing {phase}");
    }
}

#[test]
fn compare_prints_match() {
    let dir = tmpdir("compare");
    let input = dir.join("pts.txt");
    write_cloud(&input, 2, 100);
    let out = bin()
        .args(["compute", "--input"])
        .arg(&input)
        .args(["--grid", "3x1", "--compare", "--output"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "MATCH");
}

#[test]
fn oracle_equals_single_zone_compute() {
    let dir = tmpdir("oracle");
    let input = dir.join("pts.txt");
    write_cloud(&input, 3, 70);
    let cdir = dir.join("c");
    let odir = dir.join("o");
    let out = bin()
        .args(["compute", "--input"])
        .arg(&input)
        .args(["--grid", "1x1", "--output"])
        .arg(&cdir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let out = bin()
        .args(["oracle", "--input"])
        .arg(&input)
        .arg("--output")
        .arg(&odir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    for dim in 0..2 {
        let name = format!("dim{dim}.txt");
        assert_eq!(
            std::fs::read_to_string(cdir.join(&name)).unwrap(),
            std::fs::read_to_string(odir.join(&name)).unwrap(),
            "{name} differs"
        );
    }
}

#[test]
fn parse_error_reports_line_number() {
    let dir = tmpdir("badline");
    let input = dir.join("pts.txt");
    std::fs::write(&input, "1.0 2.0\n# fine\n3.0 oops\n").unwrap();
    let out = bin()
        .args(["compute", "--input"])
        .arg(&input)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains(":3:"), "{}", stderr(&out));
}

#[test]
fn duplicate_points_rejected() {
    let dir = tmpdir("dup");
    let input = dir.join("pts.txt");
    std::fs::write(&input, "1.0 2.0\n0.5 0.5\n1.0 2.0\n").unwrap();
    let out = bin()
        .args(["compute", "--input"])
        .arg(&input)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains(":3:") && err.contains("duplicate"), "{err}");
}

#[test]
fn wrong_field_count_rejected() {
    let dir = tmpdir("fields");
    let input = dir.join("pts.txt");
    std::fs::write(&input, "1.0 2.0 3.0\n").unwrap();
    let out = bin()
        .args(["compute", "--input"])
        .arg(&input)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains(":1:"), "{}", stderr(&out));
}

#[test]
fn plot_and_localized_files() {
    let dir = tmpdir("plot");
    let input = dir.join("pts.txt");
    write_cloud(&input, 4, 90);
    let svg = dir.join("bars.svg");
    let loc = dir.join("loc.txt");
    let out = bin()
        .args(["compute", "--input"])
        .arg(&input)
        .args(["--grid", "2x2", "--output"])
        .arg(&dir)
        .arg("--plot")
        .arg(&svg)
        .arg("--localized")
        .arg(&loc)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let svg = std::fs::read_to_string(&svg).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("stroke=\"red\"") && svg.contains("stroke=\"blue\""));
    let loc = std::fs::read_to_string(&loc).unwrap();
    // Every line is an interval plus at least one cover cell.
    for line in loc.lines() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        assert!(fields.len() >= 4, "short line {line:?}");
    }
}

/// Round-trip: the barcode files parse back to exactly the in-memory bars.
#[test]
fn barcode_files_round_trip() {
    let dir = tmpdir("roundtrip");
    let input = dir.join("pts.txt");
    write_cloud(&input, 5, 110);
    let points = ph_cli::read_points(&input).unwrap();
    let out = ph_core::runtime::run(
        &points,
        ph_core::cover::GridSpec {
            m1: 2,
            m2: 2,
            density: 1000,
            k: 0,
        },
        4,
        ph_core::runtime::RunOptions::default(),
    )
    .unwrap();
    let bars = out.plain_bars();
    ph_cli::write_barcode_files(&dir, &bars).unwrap();
    let mut parsed = Vec::new();
    for dim in 0..2 {
        let text = std::fs::read_to_string(dir.join(format!("dim{dim}.txt"))).unwrap();
        parsed.extend(ph_cli::parse_bars(&text).unwrap());
    }
    assert_eq!(parsed.len(), bars.len());
    for (a, b) in parsed.iter().zip(&bars) {
        assert_eq!(a.dim, b.dim);
        assert_eq!(a.birth.to_bits(), b.birth.to_bits(), "birth drifts in print");
        assert_eq!(a.death.to_bits(), b.death.to_bits(), "death drifts in print");
    }
}

#[test]
fn grid_flag_validation() {
    let dir = tmpdir("grid");
    let input = dir.join("pts.txt");
    write_cloud(&input, 6, 30);
    for bad in ["2", "0x2", "2x", "axb"] {
        let out = bin()
            .args(["compute", "--input"])
            .arg(&input)
            .args(["--grid", bad])
            .output()
            .unwrap();
        assert!(!out.status.success(), "grid {bad:?} accepted");
    }
}
