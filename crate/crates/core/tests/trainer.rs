use std::fs;
use std::path::Path;

use lfnet::checkpoint::{self, file_name};
use lfnet::data::{synth_art, synth_photo, Batch, Dataset};
use lfnet::eval::stylize_all;
use lfnet::losses::adv_style_terms;
use lfnet::networks::prefix;
use lfnet::trainer::{changed_parameters, generator_parameter, Pools, Side, StageConfig, TrainConfig, Trainer, METRICS_LOG};
use lfnet::{Error, Tape};

fn toy_data(n: u64, size: usize) -> Dataset {
    let mut samples = Vec::new();
    for i in 0..n {
        samples.push(synth_photo(i, size).unwrap());
        samples.push(synth_art(i, size, 0).unwrap());
        samples.push(synth_art(i, size, 1).unwrap());
    }
    Dataset { samples }
}

/// Desk networks on a short curriculum.
fn short_config(iters1: u64, iters2: u64) -> TrainConfig {
    TrainConfig {
        stage1: StageConfig {
            patch: 32,
            iters: iters1,
            batch: 2,
            step_two: false,
        },
        stage2: StageConfig {
            patch: 32,
            iters: iters2,
            batch: 2,
            step_two: true,
        },
        checkpoint_every: 4,
        ..TrainConfig::desk()
    }
}

/// Running accuracies that make the gate pick the discriminator on even
/// `n` and the generator on odd `n`.
fn alternate_gate(t: &mut Trainer, n: u64) {
    let acc = if n % 2 == 0 { 0.0 } else { 0.95 };
    t.state.ema_s = acc;
    t.state.ema_c = acc;
}

fn batches(t: &Trainer, data: &Dataset, n: u64) -> (Batch, Batch) {
    t.batches(&Pools::new(data, 0).unwrap(), n).unwrap()
}

fn under(names: &[String], prefixes: &[&str]) -> bool {
    names.iter().all(|n| prefixes.iter().any(|p| n.starts_with(p)))
}

fn touches(names: &[String], prefix: &str) -> bool {
    names.iter().any(|n| n.starts_with(prefix))
}

#[test]
fn freezing_contract_for_every_step_and_gate_outcome() {
    let data = toy_data(6, 32);
    let cases = [
        (1, 0.0, 0.0, vec![prefix::DISC_S]),
        (1, 0.95, 0.0, vec![prefix::ENCODER, prefix::DECODER]),
        (2, 0.0, 0.0, vec![prefix::DISC_C]),
        (2, 0.0, 0.95, vec![prefix::TRANSFORMER]),
    ];
    for (step, ema_s, ema_c, allowed) in cases {
        let mut t = Trainer::new(short_config(4, 4)).unwrap();
        // A few generator updates first so T is no longer at its identity init.
        t.state.ema_s = 0.95;
        t.state.ema_c = 0.95;
        for n in 0..3 {
            let (p, a) = batches(&t, &data, n);
            t.step_one(&p, &a).unwrap();
            t.step_two(&p, &a).unwrap();
        }
        for _ in 0..3 {
            t.state.ema_s = ema_s;
            t.state.ema_c = ema_c;
            let before = t.state.params.clone();
            let (p, a) = batches(&t, &data, 7);
            let report = if step == 1 { t.step_one(&p, &a) } else { t.step_two(&p, &a) }.unwrap();
            let changed = changed_parameters(&before, &t.state.params);
            assert!(under(&changed, &allowed), "step {step} {:?}: {changed:?}", report.updated);
            for pre in &allowed {
                assert!(touches(&changed, pre), "step {step}: nothing under {pre} changed");
            }
            let expected = if allowed[0].starts_with("disc") { Side::Discriminator } else { Side::Generator };
            assert_eq!(report.updated, expected);
        }
    }
}

#[test]
fn step_one_never_moves_the_transformer() {
    let data = toy_data(6, 32);
    let mut t = Trainer::new(short_config(4, 4)).unwrap();
    let before = t.state.params.clone();
    let mut sides = Vec::new();
    for n in 0..30 {
        alternate_gate(&mut t, n);
        let (p, a) = batches(&t, &data, n);
        sides.push(t.step_one(&p, &a).unwrap().updated);
    }
    assert!(sides.contains(&Side::Generator) && sides.contains(&Side::Discriminator));
    let changed = changed_parameters(&before, &t.state.params);
    assert!(!touches(&changed, prefix::TRANSFORMER));
    assert!(!touches(&changed, prefix::DISC_C));
}

#[test]
fn zero_style_weight_never_moves_disc_s() {
    let data = toy_data(6, 32);
    let mut cfg = short_config(4, 4);
    cfg.weights.adv_style = 0.0;
    let mut t = Trainer::new(cfg).unwrap();
    let before = t.state.params.clone();
    for n in 0..20 {
        let (p, a) = batches(&t, &data, n);
        assert_eq!(t.step_one(&p, &a).unwrap().updated, Side::Generator);
        t.step_two(&p, &a).unwrap();
    }
    assert!(!touches(&changed_parameters(&before, &t.state.params), prefix::DISC_S));
    assert_eq!(t.state.ema_s, 0.0);
}

#[test]
fn step_two_never_moves_encoder_or_decoder() {
    let data = toy_data(6, 32);
    let mut t = Trainer::new(short_config(4, 4)).unwrap();
    let before = t.state.params.clone();
    let mut sides = Vec::new();
    for n in 0..30 {
        alternate_gate(&mut t, n);
        let (p, a) = batches(&t, &data, n);
        sides.push(t.step_two(&p, &a).unwrap().updated);
    }
    assert!(sides.contains(&Side::Generator) && sides.contains(&Side::Discriminator));
    let changed = changed_parameters(&before, &t.state.params);
    assert!(under(&changed, &[prefix::TRANSFORMER, prefix::DISC_C]), "{changed:?}");
}

#[test]
fn step_two_style_term_equals_step_one_at_init() {
    let data = toy_data(6, 32);
    let t = Trainer::new(short_config(4, 4)).unwrap();
    let (p, a) = batches(&t, &data, 0);
    let mut one = Trainer::new(short_config(4, 4)).unwrap();
    let mut two = Trainer::new(short_config(4, 4)).unwrap();
    let s1 = one.step_one(&p, &a).unwrap().get("style_g").unwrap();
    let s2 = two.step_two(&p, &a).unwrap().get("style_g").unwrap();
    assert_eq!(s1, s2);

    // With T the identity, the same value comes from D(E(x)) directly.
    let tape = Tape::new();
    let b = tape.bind(&t.state.params, |_| false);
    let stylized = t.nets.stylize(&b, tape.constant(p.images.clone()), false).unwrap();
    let direct = adv_style_terms(&t.nets.disc_s, &b, tape.constant(a.images.clone()), stylized, &p.scene).unwrap();
    assert_eq!(direct.g_loss.item() as f64, s1);
}

#[test]
fn optimizer_states_are_disjoint() {
    let data = toy_data(6, 32);
    let mut t = Trainer::new(short_config(6, 10)).unwrap();
    let pools = Pools::new(&data, 0).unwrap();
    for n in 0..16 {
        alternate_gate(&mut t, n / 2);
        t.iterate(&pools).unwrap();
    }
    let gen: Vec<&String> = t.state.gen_opt.state().keys().collect();
    let disc: Vec<&String> = t.state.disc_opt.state().keys().collect();
    assert!(!gen.is_empty() && !disc.is_empty());
    assert!(gen.iter().all(|n| generator_parameter(n)));
    assert!(disc.iter().all(|n| !generator_parameter(n)));
}

#[test]
fn pixel_loss_halves_on_a_fixed_toy_set() {
    let data = Dataset {
        samples: (0..10).flat_map(|i| [synth_photo(i, 32).unwrap(), synth_art(i, 32, 0).unwrap()]).collect(),
    };
    // Pure reconstruction with the fixpoint weight of configs/desk.conf.
    let mut cfg = short_config(200, 0);
    cfg.stage1.batch = 8;
    cfg.weights.adv_style = 0.0;
    cfg.weights.fixpoint = 0.1;
    let mut t = Trainer::new(cfg).unwrap();
    let pools = Pools::new(&data, 0).unwrap();
    let mut first = None;
    let mut last = 0.0;
    for n in 0..200 {
        let (p, a) = t.batches(&pools, n).unwrap();
        let pxl = t.step_one(&p, &a).unwrap().get("pxl").unwrap();
        first.get_or_insert(pxl);
        last = pxl;
    }
    let first = first.unwrap();
    assert!(last <= 0.5 * first, "pxl {first} -> {last}");
}

fn log_lines(dir: &Path) -> Vec<String> {
    fs::read_to_string(dir.join(METRICS_LOG)).unwrap().lines().map(str::to_string).collect()
}

#[test]
fn run_writes_log_and_loadable_checkpoints() {
    let data = toy_data(6, 32);
    let dir = tempfile::tempdir().unwrap();
    let mut t = Trainer::new(short_config(6, 6)).unwrap();
    let last = t.run(&data, dir.path()).unwrap();
    assert_eq!(last, dir.path().join(file_name(12)));
    for n in [4, 8, 12] {
        assert!(dir.path().join(file_name(n)).is_file());
    }
    let lines = log_lines(dir.path());
    assert_eq!(lines.len(), 12);
    for (i, line) in lines.iter().enumerate() {
        assert!(line.starts_with(&format!("iter={} step=", i + 1)), "{line}");
        let step = if i < 6 || i % 2 == 0 { "step=1" } else { "step=2" };
        assert!(line.contains(step), "{line}");
        for field in line.split(' ').filter(|f| !f.starts_with("update=")) {
            let v: f64 = field.split_once('=').unwrap().1.parse().unwrap();
            assert!(v.is_finite(), "{line}");
        }
    }
    let ckpt = checkpoint::load(&last).unwrap();
    assert_eq!(ckpt.state.iteration, 12);
    assert!(ckpt.state == t.state.clone().with_adam_of(&ckpt.state));
}

trait SameAdam {
    fn with_adam_of(self, other: &Self) -> Self;
}

impl SameAdam for lfnet::trainer::TrainState {
    fn with_adam_of(mut self, other: &Self) -> Self {
        self.gen_opt.config = other.gen_opt.config;
        self.disc_opt.config = other.disc_opt.config;
        self
    }
}

#[test]
fn resume_reproduces_the_uninterrupted_run() {
    let data = toy_data(6, 32);
    let full = tempfile::tempdir().unwrap();
    Trainer::new(short_config(6, 6)).unwrap().run(&data, full.path()).unwrap();
    let reference = log_lines(full.path());

    let resumed = tempfile::tempdir().unwrap();
    let ckpt = checkpoint::load(&full.path().join(file_name(4))).unwrap();
    let mut t = Trainer::resume(short_config(6, 6), ckpt).unwrap();
    let end = t.run(&data, resumed.path()).unwrap();
    assert_eq!(log_lines(resumed.path()), reference[4..]);
    assert_eq!(
        fs::read(full.path().join(file_name(12)).with_extension("bin")).unwrap(),
        fs::read(end.with_extension("bin")).unwrap()
    );

    // Resuming inside the original directory rewrites the log tail.
    let ckpt = checkpoint::load(&full.path().join(file_name(8))).unwrap();
    Trainer::resume(short_config(6, 6), ckpt).unwrap().run(&data, full.path()).unwrap();
    assert_eq!(log_lines(full.path()), reference);
}

#[test]
fn resume_rejects_a_different_architecture() {
    let data = toy_data(2, 32);
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = short_config(2, 0);
    cfg.stop_after = 1;
    let path = Trainer::new(cfg.clone()).unwrap().run(&data, dir.path()).unwrap();
    cfg.network.width_scale = 0.25;
    let err = Trainer::resume(cfg, checkpoint::load(&path).unwrap()).err().unwrap();
    assert!(matches!(err, Error::Checkpoint(_)), "{err}");
}

#[test]
fn checkpoint_round_trip_is_byte_identical_and_bit_exact() {
    let data = toy_data(6, 32);
    let dir = tempfile::tempdir().unwrap();
    let mut t = Trainer::new(short_config(3, 2)).unwrap();
    let first = t.run(&data, dir.path()).unwrap();
    let copy_dir = dir.path().join("copy");
    fs::create_dir(&copy_dir).unwrap();
    let second = copy_dir.join(first.file_name().unwrap());
    let loaded = checkpoint::load(&first).unwrap();
    checkpoint::save(&second, &loaded).unwrap();
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
    assert_eq!(fs::read(first.with_extension("bin")).unwrap(), fs::read(second.with_extension("bin")).unwrap());

    let photos: Vec<_> = data.photos().iter().map(|s| s.image.clone()).collect();
    let resumed = Trainer::resume(short_config(3, 2), checkpoint::load(&second).unwrap()).unwrap();
    for use_t in [true, false] {
        let a = stylize_all(&t.nets, &t.state.params, &photos, use_t).unwrap();
        let b = stylize_all(&resumed.nets, &resumed.state.params, &photos, use_t).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn corrupted_checkpoints_are_rejected() {
    let data = toy_data(2, 32);
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = short_config(2, 0);
    cfg.stop_after = 1;
    let path = Trainer::new(cfg).unwrap().run(&data, dir.path()).unwrap();
    let blob = path.with_extension("bin");
    let mut bytes = fs::read(&blob).unwrap();
    bytes[10] ^= 1;
    fs::write(&blob, &bytes).unwrap();
    assert!(matches!(checkpoint::load(&path), Err(Error::Checkpoint(_))));
    fs::write(&path, "lfnet-checkpoint 9\n").unwrap();
    match checkpoint::load(&path) {
        Err(Error::Checkpoint(msg)) => assert!(msg.contains(":1:"), "{msg}"),
        other => panic!("{:?}", other.err()),
    }
}

#[test]
fn non_finite_parameters_abort_with_the_loss_name() {
    let data = toy_data(2, 32);
    let mut t = Trainer::new(short_config(4, 4)).unwrap();
    let name = t.state.params.names().find(|n| n.starts_with(prefix::DECODER)).unwrap().to_string();
    t.state.params.get_mut(&name).unwrap().data_mut()[0] = f32::NAN;
    let (p, a) = batches(&t, &data, 0);
    match t.step_one(&p, &a) {
        Err(Error::NonFiniteLoss { iteration, .. }) => assert_eq!(iteration, 1),
        other => panic!("{:?}", other.err()),
    }
}
