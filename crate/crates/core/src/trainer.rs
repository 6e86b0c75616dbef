//! Two-step alternating training.
//!
//! Step one trains `E` and `D` (with `T` frozen) against `D_s` on pixel,
//! fixpoint and style-adversarial terms. Step two trains `T` against `D_c`
//! and `D_s` with `E`, `D` and `D_s` frozen. In each step a win-rate gate on
//! the discriminator's running accuracy picks which side is updated.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::checkpoint::{self, Checkpoint};
use crate::data::{rng_for, sample_batch, Batch, Dataset, Sample};
use crate::error::{Error, Result};
use crate::losses::{adv_cont_terms, adv_style_terms, fixpoint_loss, pixel_loss, LossWeights};
use crate::networks::{prefix, NetworkSpec, Networks};
use crate::optim::{Adam, AdamConfig};
use crate::params::ParameterStore;
use crate::tape::{Bound, Tape, Var};
use crate::tensor::Tensor;

pub const METRICS_LOG: &str = "metrics.log";
const BATCH_STREAM: u64 = 100;
const INIT_STREAM: u64 = 101;

/// Patch size, iteration count and batch size of one curriculum stage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StageConfig {
    pub patch: usize,
    pub iters: u64,
    pub batch: usize,
    /// Whether step two alternates with step one in this stage.
    pub step_two: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub network: NetworkSpec,
    pub weights: LossWeights,
    pub adam: AdamConfig,
    pub win_rate_target: f64,
    pub win_rate_ema_decay: f64,
    pub stage1: StageConfig,
    pub stage2: StageConfig,
    pub seed: u64,
    pub target_style: usize,
    pub checkpoint_every: u64,
    /// Treat the re-encoding `E` of the fixpoint loss as constant.
    pub fixpoint_stop_outer: bool,
    /// Stop after this many total iterations (0 runs both stages fully).
    pub stop_after: u64,
}

impl TrainConfig {
    /// Desk-scale defaults: width 1/8, 32px/2000 iters/batch 8 then
    /// 64px/2000 iters/batch 2.
    pub fn desk() -> Self {
        TrainConfig {
            network: NetworkSpec::desk(crate::data::SCENE_CLASSES),
            weights: LossWeights::default(),
            adam: AdamConfig::default(),
            win_rate_target: 0.8,
            win_rate_ema_decay: 0.99,
            stage1: StageConfig {
                patch: 32,
                iters: 2000,
                batch: 8,
                step_two: false,
            },
            stage2: StageConfig {
                patch: 64,
                iters: 2000,
                batch: 2,
                step_two: true,
            },
            seed: 0,
            target_style: 0,
            checkpoint_every: 500,
            fixpoint_stop_outer: false,
            stop_after: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        self.weights.validate()?;
        self.adam.validate()?;
        if !(self.win_rate_target > 0.0 && self.win_rate_target < 1.0) {
            return Err(Error::Config(format!("win_rate_target {} is outside (0, 1)", self.win_rate_target)));
        }
        if !(0.0..1.0).contains(&self.win_rate_ema_decay) {
            return Err(Error::Config(format!(
                "win_rate_ema_decay {} is outside [0, 1)",
                self.win_rate_ema_decay
            )));
        }
        for (name, st) in [("stage1", &self.stage1), ("stage2", &self.stage2)] {
            if st.patch == 0 || st.patch % 16 != 0 {
                return Err(Error::Config(format!("{name} patch {} is not a positive multiple of 16", st.patch)));
            }
            if st.batch == 0 {
                return Err(Error::Config(format!("{name} batch must be >= 1")));
            }
            if st.patch < self.network.reference_size {
                return Err(Error::Config(format!(
                    "{name} patch {} is smaller than the discriminator's reference size {}",
                    st.patch, self.network.reference_size
                )));
            }
        }
        if self.checkpoint_every == 0 {
            return Err(Error::Config("checkpoint_every must be >= 1".into()));
        }
        Ok(())
    }

    pub fn total_iters(&self) -> u64 {
        self.stage1.iters + self.stage2.iters
    }

    /// Stage and step (1 or 2) of global iteration `n` (0-based).
    pub fn schedule(&self, n: u64) -> (&StageConfig, u8) {
        if n < self.stage1.iters {
            let step = if self.stage1.step_two && n % 2 == 1 { 2 } else { 1 };
            (&self.stage1, step)
        } else {
            let k = n - self.stage1.iters;
            let step = if self.stage2.step_two && k % 2 == 1 { 2 } else { 1 };
            (&self.stage2, step)
        }
    }
}

/// True when the discriminator should be updated: its running accuracy is
/// below the target.
pub fn win_rate_gate(running_accuracy: f64, target: f64) -> bool {
    running_accuracy < target
}

pub fn ema(previous: f64, value: f64, decay: f64) -> f64 {
    decay * previous + (1.0 - decay) * value
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Generator,
    Discriminator,
}

/// Values of one training step.
#[derive(Clone, Debug, PartialEq)]
pub struct LossReport {
    pub step: u8,
    pub updated: Side,
    /// Named loss terms in log order.
    pub terms: Vec<(&'static str, f64)>,
    /// Batch accuracy of the step's discriminator.
    pub accuracy: f64,
}

impl LossReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|(n, _)| *n == name).map(|&(_, v)| v)
    }
}

/// Parameters, optimizer states and running accuracies.
#[derive(Clone, PartialEq)]
pub struct TrainState {
    pub params: ParameterStore<f32>,
    /// Adam over `E`, `T` and `D`.
    pub gen_opt: Adam<f32>,
    /// Adam over `D_s` and `D_c`.
    pub disc_opt: Adam<f32>,
    pub ema_s: f64,
    pub ema_c: f64,
    /// Completed iterations.
    pub iteration: u64,
}

impl TrainState {
    pub fn fresh(nets: &Networks, adam: AdamConfig, seed: u64) -> Result<Self> {
        Ok(TrainState {
            params: nets.init(&mut rng_for(seed, INIT_STREAM, 0))?,
            gen_opt: Adam::new(adam),
            disc_opt: Adam::new(adam),
            ema_s: 0.0,
            ema_c: 0.0,
            iteration: 0,
        })
    }
}

fn is_generator(name: &str) -> bool {
    name.starts_with(prefix::ENCODER) || name.starts_with(prefix::DECODER) || name.starts_with(prefix::TRANSFORMER)
}

fn value<T: crate::Scalar>(v: Var<'_, T>) -> f64 {
    v.item().as_f64()
}

pub struct Trainer {
    pub config: TrainConfig,
    pub nets: Networks,
    pub state: TrainState,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let nets = Networks::new(config.network.clone())?;
        let state = TrainState::fresh(&nets, config.adam, config.seed)?;
        Ok(Trainer { config, nets, state })
    }

    /// Continues from a checkpoint; its architecture, seed and target style
    /// must match `config`.
    pub fn resume(config: TrainConfig, ckpt: Checkpoint) -> Result<Self> {
        let mut t = Trainer::new(config)?;
        checkpoint::check_compatible(&t.state.params, &ckpt.state.params)?;
        if ckpt.spec != t.config.network {
            return Err(Error::Checkpoint(format!(
                "checkpoint network {:?} differs from the configured {:?}",
                ckpt.spec, t.config.network
            )));
        }
        for (what, found, configured) in [
            ("seed", ckpt.seed, t.config.seed),
            ("target_style", ckpt.target_style as u64, t.config.target_style as u64),
        ] {
            if found != configured {
                return Err(Error::Checkpoint(format!(
                    "checkpoint was trained with {what} {found}, the configuration says {configured}"
                )));
            }
        }
        let adam = t.config.adam;
        t.state = ckpt.state;
        t.state.gen_opt.config = adam;
        t.state.disc_opt.config = adam;
        Ok(t)
    }

    fn weights(&self) -> LossWeights {
        self.config.weights
    }

    fn apply(&mut self, side: Side, grads: BTreeMap<String, Tensor<f32>>) -> Result<()> {
        match side {
            Side::Generator => self.state.gen_opt.step(&mut self.state.params, &grads),
            Side::Discriminator => self.state.disc_opt.step(&mut self.state.params, &grads),
        }
    }

    /// Eq. 11: pixel + fixpoint + style-adversarial terms on `D(T(E(x)))`.
    pub fn step_one(&mut self, photo: &Batch, art: &Batch) -> Result<LossReport> {
        let w = self.weights();
        let side = if w.adv_style > 0.0 && win_rate_gate(self.state.ema_s, self.config.win_rate_target) {
            Side::Discriminator
        } else {
            Side::Generator
        };
        let trainable = |n: &str| match side {
            Side::Generator => n.starts_with(prefix::ENCODER) || n.starts_with(prefix::DECODER),
            Side::Discriminator => n.starts_with(prefix::DISC_S),
        };
        let tape = Tape::new();
        let p = tape.bind(&self.state.params, trainable);
        let frozen;
        let outer: &Bound<'_, f32> = if self.config.fixpoint_stop_outer {
            frozen = tape.bind(&self.state.params, |_| false);
            &frozen
        } else {
            &p
        };
        let nets = &self.nets;
        let x = tape.constant(photo.images.clone());
        let y = tape.constant(art.images.clone());
        let code = nets.encoder.forward(&p, x)?;
        let stylized = nets.decoder.forward(&p, nets.transformer.forward(&p, code)?)?;
        let pxl = pixel_loss(x, stylized)?;
        let fp = fixpoint_loss(&nets.encoder, outer, stylized, code)?;
        let style = adv_style_terms(&nets.disc_s, &p, y, stylized, &photo.scene)?;
        let loss = match side {
            Side::Generator => pxl
                .scale(w.pixel)
                .add(fp.scale(w.fixpoint))?
                .add(style.g_loss.scale(w.adv_style))?,
            Side::Discriminator => style.d_loss.scale(w.adv_style),
        };
        let report = LossReport {
            step: 1,
            updated: side,
            terms: vec![
                ("pxl", value(pxl)),
                ("fp", value(fp)),
                ("style_g", value(style.g_loss)),
                ("style_d", value(style.d_loss)),
            ],
            accuracy: style.accuracy,
        };
        self.check_finite(&report)?;
        let grads = p.trainable_gradients(&tape.backward(loss)?);
        drop(p);
        self.apply(side, grads)?;
        if w.adv_style > 0.0 {
            self.state.ema_s = ema(self.state.ema_s, style.accuracy, self.config.win_rate_ema_decay);
        }
        Ok(report)
    }

    /// Eq. 12: content- and style-adversarial terms; updates `T` or `D_c`.
    pub fn step_two(&mut self, photo: &Batch, art: &Batch) -> Result<LossReport> {
        let w = self.weights();
        let side = if w.adv_cont > 0.0 && win_rate_gate(self.state.ema_c, self.config.win_rate_target) {
            Side::Discriminator
        } else {
            Side::Generator
        };
        let trainable = |n: &str| match side {
            Side::Generator => n.starts_with(prefix::TRANSFORMER),
            Side::Discriminator => n.starts_with(prefix::DISC_C),
        };
        let tape = Tape::new();
        let p = tape.bind(&self.state.params, trainable);
        let nets = &self.nets;
        let x = tape.constant(photo.images.clone());
        let y = tape.constant(art.images.clone());
        let art_code = nets.encoder.forward(&p, y)?;
        let code = nets.transformer.forward(&p, nets.encoder.forward(&p, x)?)?;
        let cont = adv_cont_terms(&nets.disc_c, &p, art_code, code, &art.content, &photo.content)?;
        let stylized = nets.decoder.forward(&p, code)?;
        let style = adv_style_terms(&nets.disc_s, &p, y, stylized, &photo.scene)?;
        let loss = match side {
            Side::Generator => cont.g_loss.scale(w.adv_cont).add(style.g_loss.scale(w.adv_style))?,
            Side::Discriminator => cont.d_loss.scale(w.adv_cont),
        };
        let report = LossReport {
            step: 2,
            updated: side,
            terms: vec![
                ("cont_g", value(cont.g_loss)),
                ("cont_d", value(cont.d_loss)),
                ("style_g", value(style.g_loss)),
            ],
            accuracy: cont.accuracy,
        };
        self.check_finite(&report)?;
        let grads = p.trainable_gradients(&tape.backward(loss)?);
        drop(p);
        self.apply(side, grads)?;
        if w.adv_cont > 0.0 {
            self.state.ema_c = ema(self.state.ema_c, cont.accuracy, self.config.win_rate_ema_decay);
        }
        Ok(report)
    }

    fn check_finite(&self, report: &LossReport) -> Result<()> {
        for &(name, v) in &report.terms {
            if !v.is_finite() {
                return Err(Error::NonFiniteLoss {
                    name: name.to_string(),
                    iteration: self.state.iteration + 1,
                });
            }
        }
        Ok(())
    }

    /// Photo and target-style art batches of global iteration `n`.
    pub fn batches(&self, pools: &Pools<'_>, n: u64) -> Result<(Batch, Batch)> {
        let (stage, _) = self.config.schedule(n);
        let mut rng = rng_for(self.config.seed, BATCH_STREAM, n);
        let photo = sample_batch(&pools.photos, stage.batch, stage.patch, &mut rng)?;
        let art = sample_batch(&pools.art, stage.batch, stage.patch, &mut rng)?;
        Ok((photo, art))
    }

    /// Runs iteration `state.iteration` and returns its log line.
    pub fn iterate(&mut self, pools: &Pools<'_>) -> Result<String> {
        let n = self.state.iteration;
        let (photo, art) = self.batches(pools, n)?;
        let report = match self.config.schedule(n).1 {
            1 => self.step_one(&photo, &art)?,
            _ => self.step_two(&photo, &art)?,
        };
        self.state.iteration += 1;
        Ok(self.log_line(&report))
    }

    pub fn log_line(&self, r: &LossReport) -> String {
        let mut line = format!(
            "iter={} step={} update={}",
            self.state.iteration,
            r.step,
            match r.updated {
                Side::Generator => "gen",
                Side::Discriminator => "disc",
            }
        );
        for (name, v) in &r.terms {
            let _ = write!(line, " {name}={v}");
        }
        let _ = write!(line, " ema_s={} ema_c={} dacc={}", self.state.ema_s, self.state.ema_c, r.accuracy);
        line
    }

    /// Runs the remaining iterations, appending to `out/metrics.log` and
    /// writing checkpoints every `checkpoint_every` iterations plus a final
    /// one. Returns the path of the last checkpoint.
    pub fn run(&mut self, data: &Dataset, out: &Path) -> Result<PathBuf> {
        let pools = Pools::new(data, self.config.target_style)?;
        fs::create_dir_all(out).map_err(|e| Error::io(format!("creating {}", out.display()), e))?;
        let log_path = out.join(METRICS_LOG);
        truncate_log(&log_path, self.state.iteration)?;
        let mut log = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&log_path)
            .map_err(|e| Error::io(format!("opening {}", log_path.display()), e))?;
        let end = match self.config.stop_after {
            0 => self.config.total_iters(),
            s => s.min(self.config.total_iters()),
        };
        let mut last = None;
        while self.state.iteration < end {
            let line = self.iterate(&pools)?;
            writeln!(log, "{line}").map_err(|e| Error::io(format!("writing {}", log_path.display()), e))?;
            let n = self.state.iteration;
            if n % self.config.checkpoint_every == 0 || n == end {
                log.flush().map_err(|e| Error::io(format!("writing {}", log_path.display()), e))?;
                last = Some(self.save(out)?);
            }
        }
        match last {
            Some(p) => Ok(p),
            None => self.save(out),
        }
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            spec: self.config.network.clone(),
            seed: self.config.seed,
            target_style: self.config.target_style,
            state: self.state.clone(),
        }
    }

    pub fn save(&self, out: &Path) -> Result<PathBuf> {
        let path = out.join(checkpoint::file_name(self.state.iteration));
        checkpoint::save(&path, &self.checkpoint())?;
        Ok(path)
    }
}

/// Keeps the first `lines` lines of an existing log, so a resumed run
/// continues it without duplicates.
fn truncate_log(path: &Path, lines: u64) -> Result<()> {
    if !path.exists() {
        return Ok(());
    }
    let err = |e| Error::io(format!("rewriting {}", path.display()), e);
    let kept: Vec<String> = BufReader::new(File::open(path).map_err(err)?)
        .lines()
        .take(lines as usize)
        .collect::<std::io::Result<_>>()
        .map_err(err)?;
    let mut f = File::create(path).map_err(err)?;
    for l in kept {
        writeln!(f, "{l}").map_err(err)?;
    }
    Ok(())
}

/// Photos and target-style artworks of a dataset.
pub struct Pools<'a> {
    pub photos: Vec<&'a Sample>,
    pub art: Vec<&'a Sample>,
}

impl<'a> Pools<'a> {
    pub fn new(data: &'a Dataset, style: usize) -> Result<Self> {
        let pools = Pools {
            photos: data.photos(),
            art: data.art(style),
        };
        if pools.photos.is_empty() || pools.art.is_empty() {
            return Err(Error::Degenerate(format!(
                "training needs photos and style-{style} artworks, found {} and {}",
                pools.photos.len(),
                pools.art.len()
            )));
        }
        Ok(pools)
    }
}

/// Names of parameters whose values differ between two stores.
pub fn changed_parameters(before: &ParameterStore<f32>, after: &ParameterStore<f32>) -> Vec<String> {
    before
        .iter()
        .filter(|(n, t)| after.get(n) != Some(t))
        .map(|(n, _)| n.to_string())
        .collect()
}

/// True for `E`, `T` and `D` parameter names.
pub fn generator_parameter(name: &str) -> bool {
    is_generator(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gate_boundary() {
        assert!(win_rate_gate(0.79, 0.8));
        assert!(!win_rate_gate(0.8, 0.8));
    }

    #[test]
    fn ema_converges() {
        let mut e = 0.0;
        for _ in 0..1000 {
            e = ema(e, 0.7, 0.99);
        }
        assert!((e - 0.7).abs() <= 0.7 * 0.99f64.powi(1000) + 1e-12);
    }

    #[test]
    fn schedule_alternates_in_stage_two() {
        let mut c = TrainConfig::desk();
        c.stage1.iters = 3;
        let steps: Vec<u8> = (0..7).map(|n| c.schedule(n).1).collect();
        assert_eq!(steps, [1, 1, 1, 1, 2, 1, 2]);
        assert_eq!(c.schedule(2).0.patch, 32);
        assert_eq!(c.schedule(3).0.patch, 64);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::desk().validate().is_ok());
        let mut c = TrainConfig::desk();
        c.stage1.patch = 40;
        assert!(c.validate().is_err());
        let mut c = TrainConfig::desk();
        c.win_rate_target = 1.0;
        assert!(c.validate().is_err());
        let mut c = TrainConfig::desk();
        c.adam.lr = 0.0;
        assert!(c.validate().is_err());
    }
}
