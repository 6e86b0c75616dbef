use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = "stage1_iters = 2\nstage2_iters = 2\nstage2_patch = 32\ncheckpoint_every = 2\n";

fn lfnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lfnet")).args(args).output().expect("spawn lfnet")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(files(&path));
        } else {
            out.push((path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap()));
        }
    }
    out.sort();
    out
}

fn datagen(dir: &Path, photos: usize, art: usize, seed: u64) -> Output {
    lfnet(&[
        "datagen",
        "--out",
        s(dir),
        "--photos",
        &photos.to_string(),
        "--art",
        &art.to_string(),
        "--size",
        "32",
        "--seed",
        &seed.to_string(),
    ])
}

/// Trains with `config` on a fresh 32px dataset and returns the final checkpoint.
fn train(root: &Path, config: &str) -> PathBuf {
    let data = root.join("data");
    assert_eq!(code(&datagen(&data, 10, 10, 0)), 0);
    let cfg = root.join("run.conf");
    fs::write(&cfg, config).unwrap();
    let out = lfnet(&["train", "--config", s(&cfg), "--data", s(&data), "--out", s(&root.join("run"))]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    PathBuf::from(String::from_utf8(out.stdout).unwrap().trim().strip_prefix("wrote ").unwrap())
}

#[test]
fn datagen_counts_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("d");
    assert_eq!(code(&datagen(&dir, 10, 10, 3)), 0);
    let pngs = |sub: &str| fs::read_dir(dir.join(sub)).unwrap().count();
    assert_eq!((pngs("photo"), pngs("art/style0"), pngs("art/style1")), (10, 10, 10));
    assert_eq!(fs::read_to_string(dir.join("manifest.csv")).unwrap().lines().count(), 30);
}

#[test]
fn datagen_is_byte_identical_on_rerun() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&datagen(&a, 4, 3, 9)), 0);
    assert_eq!(code(&datagen(&b, 4, 3, 9)), 0);
    assert_eq!(files(&a), files(&b));
    let c = tmp.path().join("c");
    assert_eq!(code(&datagen(&c, 4, 3, 10)), 0);
    assert_ne!(files(&a), files(&c));
}

#[test]
fn datagen_zero_gives_empty_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("d");
    assert_eq!(code(&datagen(&dir, 0, 0, 0)), 0);
    assert_eq!(fs::read(dir.join("manifest.csv")).unwrap(), b"");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&lfnet(&["datagen", "--out", "x"])), 1);
    assert_eq!(code(&lfnet(&["frobnicate"])), 1);
    assert_eq!(code(&lfnet(&["--help"])), 0);
}

#[test]
fn misspelled_key_names_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.conf");
    fs::write(&cfg, "seed = 1\n# weights\nlamda_pxl = 2\n").unwrap();
    let out = lfnet(&["train", "--config", s(&cfg), "--data", s(tmp.path()), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains("line 3") && err.contains("lamda_pxl"), "{err}");
}

#[test]
fn missing_data_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("ok.conf");
    fs::write(&cfg, SMALL).unwrap();
    let out = lfnet(&["train", "--config", s(&cfg), "--data", s(&tmp.path().join("none")), "--out", s(tmp.path())]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn train_writes_log_and_checkpoints() {
    let tmp = tempfile::tempdir().unwrap();
    let last = train(tmp.path(), SMALL);
    assert!(last.ends_with("ckpt-000004.txt"), "{}", last.display());
    let run = tmp.path().join("run");
    assert!(run.join("ckpt-000002.txt").is_file());
    let log = fs::read_to_string(run.join("metrics.log")).unwrap();
    assert_eq!(log.lines().count(), 4);
    assert!(log.lines().all(|l| !l.contains("NaN") && !l.contains("inf")), "{log}");

    let resumed = tmp.path().join("resumed");
    let cfg = tmp.path().join("run.conf");
    let out = lfnet(&[
        "train",
        "--config",
        s(&cfg),
        "--data",
        s(&tmp.path().join("data")),
        "--out",
        s(&resumed),
        "--resume",
        s(&run.join("ckpt-000002.txt")),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let tail: Vec<&str> = log.lines().skip(2).collect();
    let again = fs::read_to_string(resumed.join("metrics.log")).unwrap();
    assert_eq!(again.lines().collect::<Vec<_>>(), tail);
}

#[test]
fn stylize_init_checkpoint_is_transform_free_and_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let ckpt = train(tmp.path(), "stage1_iters = 0\nstage2_iters = 0\n");
    let img = tmp.path().join("data/photo/00000.png");
    let run = |flags: &[&str], out: &str| {
        let out = tmp.path().join(out);
        let mut args = vec!["stylize", "--ckpt", s(&ckpt), "--in", s(&img), "--out", s(&out)];
        args.extend_from_slice(flags);
        let o = lfnet(&args);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        fs::read(out.join("00000.png")).unwrap()
    };
    let with = run(&[], "a");
    assert_eq!(with, run(&[], "b"));
    assert_eq!(with, run(&["--no-transform"], "c"));
    assert_ne!(with, fs::read(&img).unwrap());
}

#[test]
fn stylize_keeps_or_crops_dimensions() {
    let tmp = tempfile::tempdir().unwrap();
    let ckpt = train(tmp.path(), "stage1_iters = 0\nstage2_iters = 0\n");
    // A 40x40 input is cropped to 32x32 with a warning.
    let odd = tmp.path().join("odd");
    assert_eq!(
        code(&lfnet(&["datagen", "--out", s(&odd), "--photos", "1", "--art", "0", "--size", "40"])),
        0
    );
    let inputs = [tmp.path().join("data/photo/00001.png"), odd.join("photo/00000.png")];
    let out = tmp.path().join("styled");
    let o = lfnet(&["stylize", "--ckpt", s(&ckpt), "--in", s(&inputs[0]), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(png_size(&out.join("00001.png")), (32, 32));

    let o = lfnet(&["stylize", "--ckpt", s(&ckpt), "--in", s(&inputs[1]), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("center-cropping"), "{}", stderr(&o));
    assert_eq!(png_size(&out.join("00000.png")), (32, 32));

    let o = lfnet(&["stylize", "--ckpt", s(&ckpt), "--in", s(&inputs[1]), "--out", s(&out), "--size", "16"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(png_size(&out.join("00000.png")), (16, 16));

    let o = lfnet(&["stylize", "--ckpt", s(&ckpt), "--in", s(&inputs[0]), s(&inputs[1]), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let dup = lfnet(&["stylize", "--ckpt", s(&ckpt), "--in", s(&inputs[0]), s(&inputs[0]), "--out", s(&out)]);
    assert_eq!(code(&dup), 1);
}

fn png_size(path: &Path) -> (u32, u32) {
    let bytes = fs::read(path).unwrap();
    let be = |i: usize| u32::from_be_bytes(bytes[i..i + 4].try_into().unwrap());
    (be(16), be(20))
}

#[test]
fn stylize_rejects_a_checkpoint_of_another_architecture() {
    let tmp = tempfile::tempdir().unwrap();
    let ckpt = train(tmp.path(), "stage1_iters = 0\nstage2_iters = 0\n");
    let manifest = fs::read_to_string(&ckpt).unwrap();
    let widened = manifest.replace("width_scale 0.125", "width_scale 0.25");
    assert_ne!(manifest, widened, "manifest layout changed");
    fs::write(&ckpt, widened).unwrap();
    let img = tmp.path().join("data/photo/00000.png");
    let o = lfnet(&["stylize", "--ckpt", s(&ckpt), "--in", s(&img), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("shape"), "{}", stderr(&o));
}

#[test]
fn eval_rejects_unknown_metric() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lfnet(&[
        "eval",
        "--ckpt",
        s(&tmp.path().join("none.txt")),
        "--data",
        s(tmp.path()),
        "--metric",
        "fid",
        "--out",
        s(&tmp.path().join("r.txt")),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("fid"), "{}", stderr(&o));
}

#[test]
fn eval_refuses_an_unreliable_classifier() {
    let tmp = tempfile::tempdir().unwrap();
    let ckpt = train(tmp.path(), "stage1_iters = 0\nstage2_iters = 0\n");
    // 10 samples per class is below the classifier's minimum.
    let o = lfnet(&[
        "eval",
        "--ckpt",
        s(&ckpt),
        "--data",
        s(&tmp.path().join("data")),
        "--metric",
        "deception",
        "--out",
        s(&tmp.path().join("r.txt")),
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}
