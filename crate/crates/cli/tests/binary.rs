use std::path::Path;
use std::process::{Command, Output};

fn volcast(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_volcast"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn decode_png(path: &Path) -> (u32, u32, Vec<u8>) {
    let file = std::fs::File::open(path).unwrap();
    let mut reader = png::Decoder::new(std::io::BufReader::new(file)).read_info().unwrap();
    let mut buf = vec![0; reader.output_buffer_size().unwrap()];
    let info = reader.next_frame(&mut buf).unwrap();
    buf.truncate(info.buffer_size());
    (info.width, info.height, buf)
}

#[test]
fn empty_phantom_renders_pure_background() {
    let dir = tempfile::tempdir().unwrap();
    let out = volcast(
        &["render", "--phantom", "empty", "--size", "24", "--width", "40", "--height", "30", "--out", "e.png"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains(" ms"), "render millis missing: {}", text(&out.stdout));
    let (w, h, rgba) = decode_png(&dir.path().join("e.png"));
    assert_eq!((w, h), (40, 30));
    assert!(rgba.chunks(4).all(|p| p == [0, 0, 0, 255]));
}

#[test]
fn ppm_output_for_other_extensions() {
    let dir = tempfile::tempdir().unwrap();
    let out = volcast(
        &["render", "--phantom", "sphere", "--size", "32", "--width", "20", "--height", "10", "--out", "x.ppm"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", text(&out.stderr));
    let bytes = std::fs::read(dir.path().join("x.ppm")).unwrap();
    assert!(bytes.starts_with(b"P6\n20 10\n255\n"));
    assert_eq!(bytes.len(), 13 + 20 * 10 * 3);
}

#[test]
fn identical_configs_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let args = |name: &'static str| {
        vec![
            "render", "--size", "48", "--width", "96", "--height", "72", "--azimuth", "33",
            "--elevation", "-12", "--operator", "zucker-hummel", "--out", name,
        ]
    };
    for name in ["a.png", "b.png"] {
        assert!(volcast(&args(name), dir.path()).status.success());
    }
    let a = std::fs::read(dir.path().join("a.png")).unwrap();
    let b = std::fs::read(dir.path().join("b.png")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn unreadable_slices_exit_2_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = volcast(
        &["render", "--slices", "missing/ct_##.raw", "--dims", "8x8x4", "--out", "x.png"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let err = text(&out.stderr);
    assert!(err.contains("missing/ct_00.raw"), "{err}");
    assert_eq!(err.trim().lines().count(), 1, "{err}");
}

#[test]
fn unwritable_output_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = volcast(
        &["render", "--size", "16", "--width", "8", "--height", "8", "--out", "no/such/dir/x.png"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("no/such/dir/x.png"));
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["render", "--operator", "laplace"],
        vec!["render", "--frobnicate", "3"],
        vec!["render", "--t-low", "500", "--t-high", "100"],
        vec!["render", "--size", "16", "--radius", "40"],
        vec!["bench", "--frames", "0"],
        vec!["frobnicate"],
    ] {
        let out = volcast(&args, dir.path());
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", text(&out.stderr));
    }
    let help = volcast(&["render", "--help"], dir.path());
    assert_eq!(help.status.code(), Some(0));
    assert!(text(&help.stdout).contains("[default: central]"));
}

#[test]
fn phantom_slices_load_back_into_the_same_render() {
    let dir = tempfile::tempdir().unwrap();
    let out = volcast(
        &["phantom", "--phantom", "shell", "--size", "32", "--out", "ct/s_###.raw", "--endianness", "big"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert_eq!(std::fs::read_dir(dir.path().join("ct")).unwrap().count(), 32);
    let common = ["--width", "48", "--height", "36", "--azimuth", "20"];
    let mut from_slices = vec![
        "render", "--slices", "ct/s_###.raw", "--dims", "32x32x32", "--endianness", "big", "--out", "s.png",
    ];
    from_slices.extend(common);
    let mut from_phantom = vec!["render", "--phantom", "shell", "--size", "32", "--out", "p.png"];
    from_phantom.extend(common);
    assert!(volcast(&from_slices, dir.path()).status.success());
    assert!(volcast(&from_phantom, dir.path()).status.success());
    assert_eq!(
        decode_png(&dir.path().join("s.png")).2,
        decode_png(&dir.path().join("p.png")).2
    );
}

#[test]
fn one_cell_per_resolution_in_the_bench_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = volcast(
        &[
            "bench", "--size", "24", "--operators", "central", "--resolutions", "32x24,64x48",
            "--warmup", "1", "--frames", "2", "--out", "b.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", text(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "dataset,operator,width,height,frames,total_seconds,fps");
    assert_eq!(lines.len(), 3, "{csv}");
    assert!(lines[1].starts_with("sphere,central,32,24,2,"));
    assert!(lines[2].starts_with("sphere,central,64,48,2,"));
}

#[test]
fn config_file_supplies_flags_and_command_line_wins() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("view.json"),
        r#"{"phantom": "empty", "size": 16, "width": 30, "height": 20, "out": "cfg.png"}"#,
    )
    .unwrap();
    let out = volcast(&["render", "--config", "view.json", "--width", "12"], dir.path());
    assert!(out.status.success(), "{}", text(&out.stderr));
    let (w, h, _) = decode_png(&dir.path().join("cfg.png"));
    assert_eq!((w, h), (12, 20));

    std::fs::write(dir.path().join("bad.json"), r#"{"widht": 30}"#).unwrap();
    let out = volcast(&["render", "--config", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("widht"));

    let out = volcast(&["render", "--config", "absent.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("absent.json"));
}
