//! I/O tests: PGM parsing in both encodings, image vectorization, solution
//! CSVs with exact round-trips, JSON run reports, and the synthetic image.

use std::fs;
use std::path::Path;

use stiffelm::assembly::{Collocation, OdeProblem};
use stiffelm::basis::{Activation, ElmConfig, Encoding, WeightDist};
use stiffelm::error::Error;
use stiffelm::io::{
    load_image_vector, read_pgm, read_report, synthetic_image, write_pgm, write_report,
    write_solution_csv, ArtifactPaths, ConditioningSummary, ProblemSpec, RunReport,
    REPORT_SCHEMA_VERSION,
};
use stiffelm::solver::Metrics;
use tempfile::tempdir;

fn write_bytes(dir: &Path, name: &str, bytes: &[u8]) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, bytes).unwrap();
    path
}

fn sample_report(metrics: Option<Metrics>, raw_condition: f64) -> RunReport {
    RunReport {
        schema_version: REPORT_SCHEMA_VERSION.to_string(),
        command: "solve-ode".to_string(),
        config: ElmConfig {
            nodes: 1000,
            encoding: Encoding::Gaussian { filter_width: 1e-4 },
            activation: Activation::Tanh,
            weight_dist: WeightDist::Uniform { lo: -1.0, hi: 1.0 },
            seed: 1,
        },
        problem: ProblemSpec::Ode {
            epsilon: Some(0.01),
            problem: OdeProblem::ade(0.01, Collocation::Uniform { n: 1000 }),
        },
        rank_tol_factor: 1.0,
        metrics,
        conditioning: ConditioningSummary {
            rank: 747,
            raw_condition,
            effective_condition: 3.2e11,
            log10_det_proxy: -812.5,
            sparsity: 0.5281,
        },
        train_seconds: 0.84,
        artifacts: ArtifactPaths {
            solution_csv: Some("solution.csv".to_string()),
            spectrum_csv: Some("spectrum.csv".to_string()),
            heatmap_pgm: Some("heatmap.pgm".to_string()),
            ..ArtifactPaths::default()
        },
    }
}

#[test]
fn p2_and_p5_files_load_identically() {
    let dir = tempdir().unwrap();
    let ascii = write_bytes(dir.path(), "a.pgm", b"P2\n2 2\n255\n0 255\n255 0\n");
    let mut binary = b"P5\n2 2\n255\n".to_vec();
    binary.extend_from_slice(&[0, 255, 255, 0]);
    let raster = write_bytes(dir.path(), "b.pgm", &binary);

    let img_a = read_pgm(&ascii).unwrap();
    let img_b = read_pgm(&raster).unwrap();
    assert_eq!(img_a, img_b);
    assert_eq!((img_a.width, img_a.height, img_a.maxval), (2, 2, 255));
    assert_eq!(img_a.pixels, vec![0, 255, 255, 0]);

    let (xs, ys) = load_image_vector(&ascii).unwrap();
    assert_eq!(xs, vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]);
    assert_eq!(ys, vec![0.0, 1.0, 1.0, 0.0]);
    assert_eq!(load_image_vector(&raster).unwrap(), (xs, ys));
}

#[test]
fn header_comments_and_odd_whitespace_are_tolerated() {
    let dir = tempdir().unwrap();
    let path = write_bytes(
        dir.path(),
        "c.pgm",
        b"P2 # magic\n# full comment line\n  2\t2 # dims\n 255\n0 255\n255\t0",
    );
    let img = read_pgm(&path).unwrap();
    assert_eq!(img.pixels, vec![0, 255, 255, 0]);
}

#[test]
fn maxval_scales_the_signal() {
    let dir = tempdir().unwrap();
    let path = write_bytes(dir.path(), "m.pgm", b"P2\n2 1\n100\n50 100\n");
    let (_, ys) = load_image_vector(&path).unwrap();
    assert_eq!(ys, vec![0.5, 1.0]);
}

#[test]
fn all_black_image_maps_to_zero_signal() {
    let dir = tempdir().unwrap();
    let path = write_bytes(dir.path(), "black.pgm", b"P2\n3 2\n255\n0 0 0 0 0 0\n");
    let (xs, ys) = load_image_vector(&path).unwrap();
    assert_eq!(ys, vec![0.0; 6]);
    assert_eq!(xs[0], 0.0);
    assert_eq!(xs[5], 1.0);
}

#[test]
fn single_pixel_image_sits_at_the_origin() {
    let dir = tempdir().unwrap();
    let path = write_bytes(dir.path(), "one.pgm", b"P2\n1 1\n255\n51\n");
    let (xs, ys) = load_image_vector(&path).unwrap();
    assert_eq!(xs, vec![0.0]);
    assert_eq!(ys, vec![51.0 / 255.0]);
}

#[test]
fn malformed_pgm_inputs_are_rejected() {
    let dir = tempdir().unwrap();
    let cases: Vec<(&str, &[u8], &str)> = vec![
        ("magic.pgm", b"P6\n2 2\n255\n0 0 0 0\n", "unsupported magic"),
        ("maxzero.pgm", b"P2\n2 1\n0\n0 0\n", "unsupported maxval"),
        ("maxbig.pgm", b"P2\n2 1\n65536\n0 0\n", "unsupported maxval"),
        ("overmax.pgm", b"P2\n2 1\n100\n50 120\n", "exceeds maxval"),
        ("overbyte.pgm", b"P2\n2 1\n255\n50 300\n", "exceeds 255"),
        ("zerodim.pgm", b"P2\n0 2\n255\n", "must be positive"),
        ("short2.pgm", b"P2\n2 2\n255\n0 255 255\n", "unexpected end"),
        ("short5.pgm", b"P5\n2 2\n255\n\x00\xff", "truncated"),
        ("garbage.pgm", b"P2\n2 1\n255\n12a 4\n", "not a number"),
        ("header.pgm", b"P2\n2", "unexpected end"),
    ];
    for (name, bytes, needle) in cases {
        let path = write_bytes(dir.path(), name, bytes);
        let err = read_pgm(&path).unwrap_err();
        assert!(matches!(err, Error::Malformed(_)), "{name}: {err:?}");
        assert!(err.to_string().contains(needle), "{name}: {err}");
    }
}

#[test]
fn missing_file_surfaces_as_an_io_error() {
    let dir = tempdir().unwrap();
    let err = read_pgm(&dir.path().join("nope.pgm")).unwrap_err();
    assert!(matches!(err, Error::Io(_)), "{err:?}");
}

#[test]
fn write_pgm_round_trips_and_ignores_comments() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("rt.pgm");
    let pixels: Vec<u8> = (0..300).map(|i| (i * 7 % 256) as u8).collect();
    let comments = vec!["first note".to_string(), "second note".to_string()];
    write_pgm(&path, 20, 15, &pixels, &comments).unwrap();

    let img = read_pgm(&path).unwrap();
    assert_eq!((img.width, img.height, img.maxval), (20, 15, 255));
    assert_eq!(img.pixels, pixels);

    let raw = fs::read(&path).unwrap();
    let header = String::from_utf8_lossy(&raw[..60]).into_owned();
    assert!(header.contains("# first note"), "{header}");
}

#[test]
fn write_pgm_validates_pixel_count() {
    let dir = tempdir().unwrap();
    let err = write_pgm(&dir.path().join("bad.pgm"), 4, 4, &[0u8; 15], &[]).unwrap_err();
    assert!(matches!(err, Error::DimensionMismatch(_)), "{err:?}");
}

#[test]
fn empty_solution_csv_is_header_only() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    write_solution_csv(&path, &[], &[], None).unwrap();
    assert_eq!(fs::read_to_string(&path).unwrap(), "x,u_pred\n");
}

#[test]
fn solution_csv_round_trips_doubles_exactly() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("sol.csv");
    let xs = [0.0, 1.0 / 3.0, std::f64::consts::PI / 4.0];
    let pred = [1e-17, -0.12345678901234567, std::f64::consts::E];
    write_solution_csv(&path, &xs, &pred, None).unwrap();

    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,u_pred"));
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 2);
        // 17 significant digits reproduce the original bits.
        assert_eq!(fields[0].parse::<f64>().unwrap(), xs[i], "x row {i}");
        assert_eq!(fields[1].parse::<f64>().unwrap(), pred[i], "pred row {i}");
    }
}

#[test]
fn solution_csv_with_oracle_adds_error_columns() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("sol.csv");
    let xs = [0.0, 0.5, 1.0];
    let pred = [0.1, 0.75, 0.99];
    let exact = [0.0, 0.8, 1.0];
    write_solution_csv(&path, &xs, &pred, Some(&exact)).unwrap();

    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,u_pred,u_exact,abs_err");
    assert_eq!(lines.len(), 4);
    for (i, line) in lines[1..].iter().enumerate() {
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields.len(), 4);
        assert_eq!(fields[1], pred[i]);
        assert_eq!(fields[2], exact[i]);
        assert_eq!(fields[3], (pred[i] - exact[i]).abs(), "abs_err row {i}");
    }
}

#[test]
fn solution_csv_rejects_mismatched_columns() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    let err = write_solution_csv(&path, &[0.0, 1.0], &[0.0], None).unwrap_err();
    assert!(matches!(err, Error::DimensionMismatch(_)), "{err:?}");
    let err = write_solution_csv(&path, &[0.0], &[0.0], Some(&[0.0, 1.0])).unwrap_err();
    assert!(matches!(err, Error::DimensionMismatch(_)), "{err:?}");
}

#[test]
fn report_round_trips_field_for_field() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("report.json");
    let report = sample_report(
        Some(Metrics { mae: 2.9e-10, mse: 1.4e-19, max_abs_err: 8.1e-10 }),
        f64::INFINITY,
    );
    write_report(&report, &path).unwrap();
    let loaded = read_report(&path).unwrap();
    assert_eq!(loaded, report);
    assert_eq!(loaded.conditioning.raw_condition, f64::INFINITY);
}

#[test]
fn report_serializes_infinite_condition_as_a_string() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("report.json");
    write_report(&sample_report(None, f64::INFINITY), &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    // JSON has no infinity literal; the writer must not emit null.
    assert!(text.contains("\"raw_condition\": \"inf\""), "{text}");
    assert!(!text.contains("null"), "{text}");
}

#[test]
fn report_omits_absent_optionals_instead_of_writing_null() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("report.json");
    write_report(&sample_report(None, 1e8), &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert!(!text.contains("\"metrics\""), "{text}");
    assert!(!text.contains("\"reconstruction_pgm\""), "{text}");
    assert!(!text.contains("null"), "{text}");
    // Present optionals still appear.
    assert!(text.contains("\"solution_csv\": \"solution.csv\""), "{text}");
}

#[test]
fn report_writes_are_deterministic_and_keys_keep_declaration_order() {
    let dir = tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let report = sample_report(None, 1e8);
    write_report(&report, &a).unwrap();
    write_report(&report, &b).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let text = fs::read_to_string(&a).unwrap();
    let order = [
        "\"schema_version\"",
        "\"command\"",
        "\"config\"",
        "\"problem\"",
        "\"rank_tol_factor\"",
        "\"conditioning\"",
        "\"train_seconds\"",
        "\"artifacts\"",
    ];
    let positions: Vec<usize> = order
        .iter()
        .map(|k| text.find(k).unwrap_or_else(|| panic!("missing key {k}")))
        .collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]), "{positions:?}");
    assert!(text.contains("\"schema_version\": \"1\""), "{text}");
}

#[test]
fn report_rejects_unknown_schema_version() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("report.json");
    write_report(&sample_report(None, 1e8), &path).unwrap();
    let bumped = fs::read_to_string(&path)
        .unwrap()
        .replace("\"schema_version\": \"1\"", "\"schema_version\": \"2\"");
    fs::write(&path, bumped).unwrap();
    let err = read_report(&path).unwrap_err();
    assert!(matches!(err, Error::Malformed(_)), "{err:?}");
    assert!(err.to_string().contains("schema_version"), "{err}");
}

#[test]
fn report_rejects_invalid_json() {
    let dir = tempdir().unwrap();
    let path = write_bytes(dir.path(), "bad.json", b"{ not json");
    let err = read_report(&path).unwrap_err();
    assert!(matches!(err, Error::Malformed(_)), "{err:?}");
}

#[test]
fn synthetic_image_matches_frozen_pixels() {
    let pixels = synthetic_image(128, 128);
    assert_eq!(pixels.len(), 128 * 128);
    // Values pinned from the closed-form intensity field, evaluated
    // independently at a handful of coordinates.
    let spots = [
        (0usize, 0usize, 199u8),
        (0, 127, 199),
        (64, 32, 175),
        (127, 127, 199),
        (17, 93, 78),
        (100, 3, 109),
        (63, 64, 53),
    ];
    for (row, col, expected) in spots {
        assert_eq!(pixels[row * 128 + col], expected, "pixel ({row},{col})");
    }
    assert_eq!(pixels, synthetic_image(128, 128), "must be deterministic");
}

#[test]
fn synthetic_image_covers_a_wide_dynamic_range() {
    let pixels = synthetic_image(128, 128);
    let lo = *pixels.iter().min().unwrap();
    let hi = *pixels.iter().max().unwrap();
    assert!(lo < 40, "min {lo}");
    assert!(hi > 220, "max {hi}");
    let mut seen = [false; 256];
    for &p in &pixels {
        seen[p as usize] = true;
    }
    let distinct = seen.iter().filter(|&&s| s).count();
    assert!(distinct > 100, "only {distinct} distinct gray levels");
}

#[test]
fn synthetic_image_degenerate_sizes() {
    // A 1x1 image evaluates the field at the origin: 0.5 + 0.28 -> 199.
    assert_eq!(synthetic_image(1, 1), vec![199]);
    let row = synthetic_image(3, 1);
    assert_eq!(row.len(), 3);
    // Height 1 pins r = 0, so the value varies only through the column terms.
    let again = synthetic_image(3, 1);
    assert_eq!(row, again);
}

#[test]
fn checked_in_asset_matches_a_fresh_generation() {
    let asset = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/synthetic_128.pgm");
    let img = read_pgm(&asset).expect("asset present and well-formed");
    assert_eq!((img.width, img.height, img.maxval), (128, 128, 255));
    assert_eq!(img.pixels, synthetic_image(128, 128), "asset drifted; regenerate it");
}

#[test]
fn synthetic_image_round_trips_through_pgm() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("synth.pgm");
    let pixels = synthetic_image(64, 32);
    write_pgm(&path, 64, 32, &pixels, &[]).unwrap();
    let img = read_pgm(&path).unwrap();
    assert_eq!((img.width, img.height), (64, 32));
    assert_eq!(img.pixels, pixels);
    let (xs, ys) = load_image_vector(&path).unwrap();
    assert_eq!(xs.len(), 64 * 32);
    assert_eq!(ys[5], pixels[5] as f64 / 255.0);
}
