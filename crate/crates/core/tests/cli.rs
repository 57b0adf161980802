use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;
use tss::embedding::{build_embedding_map, DEFAULT_MAX_PERIOD};
use tss::freq::Trajectory;
use tss::io;
use tss::spatial::spatial_timestep_at;
use tss::{build_tds_schedule, variance_map, ImageRaster, Preset, Raster, SamplerParams, Schedule, VarianceConfig};

fn tss(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tss"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .output()
        .expect("spawn tss")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_gray(path: &Path, r: &Raster) {
    io::write_png_gray(path, r).unwrap();
}

fn checker(w: usize, h: usize) -> Raster {
    Raster::from_fn(w, h, |x, y| if (x / 2 + y / 3) % 2 == 0 { 0.1 } else { 0.9 })
}

#[test]
fn schedule_polynomial_example() {
    let tmp = TempDir::new().unwrap();
    let out = tss(
        tmp.path(),
        &[
            "schedule",
            "--kind",
            "polynomial",
            "--n",
            "2",
            "--a-frac",
            "0.5",
            "--steps",
            "4",
            "--T",
            "1000",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let s = Schedule::from_json(&fs::read_to_string(tmp.path().join("schedule.json")).unwrap()).unwrap();
    assert_eq!(s.steps, vec![125.0, 500.0, 875.0, 1000.0]);
    let csv = fs::read_to_string(tmp.path().join("schedule.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("index,step_real,step_int"));
    assert_eq!(csv.lines().count(), 5);
    assert!(String::from_utf8_lossy(&out.stdout).contains("[125, 500, 875, 1000]"));
}

#[test]
fn schedule_preset_and_uniform() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(
        code(&tss(tmp.path(), &["schedule", "--preset", "supir", "--steps", "7"])),
        0
    );
    let s = Schedule::from_json(&fs::read_to_string(tmp.path().join("schedule.json")).unwrap()).unwrap();
    assert_eq!(
        s,
        build_tds_schedule(&SamplerParams::from_preset(&Preset::SUPIR, 1000, 7)).unwrap()
    );

    assert_eq!(
        code(&tss(
            tmp.path(),
            &["--force", "schedule", "--kind", "uniform", "--steps", "10"]
        )),
        0
    );
    let s = Schedule::from_json(&fs::read_to_string(tmp.path().join("schedule.json")).unwrap()).unwrap();
    assert_eq!(s.quantized, (1..=10).map(|k| 100 * k).collect::<Vec<u32>>());
}

#[test]
fn existing_outputs_need_force() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&tss(tmp.path(), &["schedule", "--steps", "3"])), 0);
    let before = fs::read(tmp.path().join("schedule.json")).unwrap();
    assert_eq!(code(&tss(tmp.path(), &["schedule", "--steps", "5"])), 1);
    assert_eq!(fs::read(tmp.path().join("schedule.json")).unwrap(), before);
    assert_eq!(code(&tss(tmp.path(), &["--force", "schedule", "--steps", "5"])), 0);
}

#[test]
fn usage_and_domain_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    for args in [
        &["schedule"][..],
        &["schedule", "--steps", "4", "--kind", "spline"],
        &["schedule", "--steps", "4", "--preset", "nope"],
        &["schedule", "--steps", "0"],
        &["schedule", "--steps", "4", "--n", "0.5"],
        &["frobnicate"],
    ] {
        assert_eq!(code(&tss(tmp.path(), args)), 2, "{args:?}");
    }
}

#[test]
fn variance_outputs_and_errors() {
    let tmp = TempDir::new().unwrap();
    let flat = tmp.path().join("flat.png");
    write_gray(&flat, &Raster::filled(20, 16, 0.5));
    assert_eq!(code(&tss(tmp.path(), &["variance", flat.to_str().unwrap()])), 0);
    let m = io::read_variance_npy(&tmp.path().join("variance.npy")).unwrap();
    assert!(m.values().iter().all(|&v| v == 0.0));
    assert!(tmp.path().join("variance.png").exists());

    let tex = tmp.path().join("tex.png");
    write_gray(&tex, &checker(20, 16));
    assert_eq!(
        code(&tss(
            tmp.path(),
            &["--force", "variance", tex.to_str().unwrap(), "--window", "5"]
        )),
        0
    );
    let got = io::read_raster_npy(&tmp.path().join("variance.npy")).unwrap();
    let want = variance_map(&io::read_image(&tex).unwrap(), VarianceConfig::with_window(5)).unwrap();
    for (g, w) in got.data().iter().zip(want.values()) {
        assert!((g - w).abs() < 1e-6);
    }
    assert!(got.data().iter().any(|&v| v > 0.0));

    assert_eq!(code(&tss(tmp.path(), &["variance", "/nonexistent/x.png"])), 1);
    let junk = tmp.path().join("junk.png");
    fs::write(&junk, b"not a png").unwrap();
    assert_eq!(
        code(&tss(tmp.path(), &["--force", "variance", junk.to_str().unwrap()])),
        1
    );
}

#[test]
fn spatial_schedule_then_embed() {
    let tmp = TempDir::new().unwrap();
    let img = tmp.path().join("img.png");
    write_gray(&img, &checker(24, 18));
    let out = tss(
        tmp.path(),
        &[
            "spatial-schedule",
            img.to_str().unwrap(),
            "--preset",
            "pasd",
            "--steps",
            "6",
            "--grid",
            "8x6",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let npy = tmp.path().join("spatial_schedule.npy");
    let map = io::read_spatial_schedule(&npy).unwrap();
    assert_eq!(map.shape(), [6, 8, 6]);
    assert_eq!(io::read_npy(&npy).unwrap().shape, vec![6, 8, 6]);

    assert_eq!(
        code(&tss(
            tmp.path(),
            &["embed", npy.to_str().unwrap(), "--k", "6", "--dim", "16"]
        )),
        0
    );
    let emb = io::read_npy(&tmp.path().join("embedding.npy")).unwrap();
    assert_eq!(emb.shape, vec![6, 8, 16]);
    let want = build_embedding_map(&Raster::filled(8, 6, 1000.0), 16, DEFAULT_MAX_PERIOD).unwrap();
    for (g, w) in emb.data.iter().zip(want.tensor().data()) {
        assert!((g - w).abs() < 1e-6);
    }

    assert_eq!(
        code(&tss(
            tmp.path(),
            &[
                "--force",
                "embed",
                npy.to_str().unwrap(),
                "--k",
                "2",
                "--dim",
                "8",
                "--exact"
            ]
        )),
        0
    );
    let emb = io::read_npy(&tmp.path().join("embedding.npy")).unwrap();
    let want = build_embedding_map(&spatial_timestep_at(&map, 2).unwrap(), 8, DEFAULT_MAX_PERIOD).unwrap();
    for (g, w) in emb.data.iter().zip(want.tensor().data()) {
        assert!((g - w).abs() < 1e-6);
    }

    assert_eq!(
        code(&tss(
            tmp.path(),
            &["--force", "embed", npy.to_str().unwrap(), "--k", "7", "--dim", "8"]
        )),
        2
    );
    assert_eq!(
        code(&tss(
            tmp.path(),
            &["--force", "embed", npy.to_str().unwrap(), "--k", "0", "--dim", "8"]
        )),
        2
    );
    fs::remove_file(tmp.path().join("spatial_schedule.json")).unwrap();
    assert_eq!(
        code(&tss(
            tmp.path(),
            &["--force", "embed", npy.to_str().unwrap(), "--k", "1", "--dim", "8"]
        )),
        1
    );
}

#[test]
fn spatial_schedule_constant_image_and_bad_bounds() {
    let tmp = TempDir::new().unwrap();
    let img = tmp.path().join("flat.png");
    write_gray(&img, &Raster::filled(10, 10, 0.3));
    let args = [
        "spatial-schedule",
        img.to_str().unwrap(),
        "--bounds",
        "1.5,2.5,0.4,0.6",
        "--steps",
        "5",
    ];
    assert_eq!(code(&tss(tmp.path(), &args)), 0);
    let map = io::read_spatial_schedule(&tmp.path().join("spatial_schedule.npy")).unwrap();
    let low = build_tds_schedule(
        &SamplerParams::new(1000, 5, tss::ResampleKind::Polynomial)
            .with_power(1.5)
            .with_transition(0.4),
    )
    .unwrap();
    let want: Vec<f32> = low.steps.iter().map(|&s| s as f32).collect();
    for y in 0..10 {
        for x in 0..10 {
            assert_eq!(map.slice(x, y), &want[..]);
        }
    }
    let bad = [
        "spatial-schedule",
        img.to_str().unwrap(),
        "--bounds",
        "2,1,0.4,0.6",
        "--steps",
        "5",
    ];
    assert_eq!(code(&tss(tmp.path(), &bad)), 2);
    let short = [
        "spatial-schedule",
        img.to_str().unwrap(),
        "--bounds",
        "1,2,0.4",
        "--steps",
        "5",
    ];
    assert_eq!(code(&tss(tmp.path(), &short)), 2);
}

fn converging_frames(dir: &Path) -> Vec<u32> {
    fs::create_dir_all(dir).unwrap();
    let clean = checker(32, 32);
    let steps = [900u32, 600, 300, 0];
    for (i, &t) in steps.iter().enumerate() {
        let amp = [0.3, 0.2, 0.1, 0.0][i];
        let f = Raster::from_fn(32, 32, |x, y| {
            let n = (((x * 7 + y * 13) % 11) as f64 / 10.0 - 0.5) * 2.0 * amp;
            (clean.get(x, y) + n).clamp(0.0, 1.0)
        });
        write_gray(&dir.join(format!("frame_{t}.png")), &f);
    }
    steps.to_vec()
}

#[test]
fn analyze_frame_directory() {
    let tmp = TempDir::new().unwrap();
    let frames = tmp.path().join("frames");
    converging_frames(&frames);
    let out = tss(tmp.path(), &["analyze", frames.to_str().unwrap(), "--patch", "16"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let snr = fs::read_to_string(tmp.path().join("band_snr.csv")).unwrap();
    assert_eq!(snr.lines().next(), Some("step,band,snr_db,noise_power,delta_noise"));
    assert_eq!(snr.lines().count(), 1 + 3 * 3);
    assert!(snr.lines().nth(1).unwrap().starts_with("900,low,"));
    let deltas = fs::read_to_string(tmp.path().join("noise_delta.csv")).unwrap();
    let rows: Vec<&str> = deltas.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        let vals: Vec<f64> = row.split(',').skip(2).map(|v| v.parse().unwrap()).collect();
        assert!(vals.iter().all(|&v| v < 0.0), "{row}");
    }
    let strat = fs::read_to_string(tmp.path().join("stratified_snr.csv")).unwrap();
    assert!(strat.starts_with("class,step,band,"));
    assert!(strat.lines().count() > 1);
}

#[test]
fn analyze_npy_stack_with_identical_frames() {
    let tmp = TempDir::new().unwrap();
    let r = checker(8, 8);
    let traj = Trajectory::new(vec![r.clone(), r.clone(), r], vec![20, 10, 0]).unwrap();
    let stack = tmp.path().join("stack.npy");
    io::write_frame_stack(&stack, &traj).unwrap();
    assert_eq!(
        code(&tss(
            tmp.path(),
            &["analyze", stack.to_str().unwrap(), "--timesteps", "20,10,0"]
        )),
        0
    );
    let snr = fs::read_to_string(tmp.path().join("band_snr.csv")).unwrap();
    for row in snr.lines().skip(1) {
        assert_eq!(row.split(',').nth(2), Some("inf"));
    }
    assert_eq!(
        code(&tss(
            tmp.path(),
            &["--force", "analyze", stack.to_str().unwrap(), "--timesteps", "20,10"]
        )),
        1
    );
    let bad = tmp.path().join("bad.npy");
    fs::write(&bad, b"\x93NUMPY garbage").unwrap();
    assert_eq!(
        code(&tss(tmp.path(), &["--force", "analyze", bad.to_str().unwrap()])),
        1
    );
    let one = tmp.path().join("one");
    fs::create_dir(&one).unwrap();
    write_gray(&one.join("frame_0.png"), &checker(8, 8));
    assert_eq!(
        code(&tss(tmp.path(), &["--force", "analyze", one.to_str().unwrap()])),
        1
    );
}

#[test]
fn simulate_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"size": 32, "patch": 16, "window": 9, "T_prime": 7}"#).unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&tss(&a, &["--seed", "4", "simulate", cfg.to_str().unwrap()])), 0);
    assert_eq!(code(&tss(&b, &["--seed", "4", "simulate", cfg.to_str().unwrap()])), 0);
    for name in [
        "comparison.csv",
        "trajectory_uniform.npy",
        "trajectory_tds.npy",
        "trajectory_tss.npy",
        "band_snr_tss.csv",
        "clean.npy",
    ] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let csv = fs::read_to_string(a.join("comparison.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], tss::experiment::COMPARISON_HEADER.join(","));
    let stack = io::read_npy(&a.join("trajectory_tds.npy")).unwrap();
    assert_eq!(stack.shape, vec![8, 32, 32]);
}

#[test]
fn simulate_config_errors() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"size": 32, "unknown_key": 1}"#).unwrap();
    assert_eq!(code(&tss(tmp.path(), &["simulate", cfg.to_str().unwrap()])), 2);
    fs::write(&cfg, r#"{"size": 8, "patch": 16}"#).unwrap();
    assert_eq!(code(&tss(tmp.path(), &["simulate", cfg.to_str().unwrap()])), 2);
    fs::write(&cfg, "{ not json").unwrap();
    assert_eq!(code(&tss(tmp.path(), &["simulate", cfg.to_str().unwrap()])), 2);
    assert_eq!(code(&tss(tmp.path(), &["simulate", "/nonexistent/cfg.json"])), 1);
}

#[test]
fn artifacts_round_trip() {
    let tmp = TempDir::new().unwrap();
    let r = Raster::from_fn(7, 5, |x, y| (x * 5 + y) as f64 / 64.0);
    let p = tmp.path().join("r.npy");
    io::write_raster_npy(&p, &r).unwrap();
    assert_eq!(io::read_raster_npy(&p).unwrap(), r);

    let img = ImageRaster::from_gray(r.clone()).unwrap();
    let vmap = variance_map(&img, VarianceConfig::with_window(3)).unwrap();
    let map =
        tss::build_spatial_schedule(&vmap, &Preset::SUPIR.into(), 1000, 4, tss::ResampleKind::Polynomial).unwrap();
    let p = tmp.path().join("m.npy");
    io::write_spatial_schedule(&p, &map).unwrap();
    assert_eq!(io::read_spatial_schedule(&p).unwrap(), map);
}
