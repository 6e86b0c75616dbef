//! Flat `key = value` configuration files.
//!
//! One assignment per line; `#` starts a comment, blank lines are ignored.
//! Keys not listed in [`KEYS`] are rejected with their line number. Every
//! key defaults to the desk-scale value of [`TrainConfig::desk`].

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lfn::LfnMode;
use crate::trainer::TrainConfig;

/// Every accepted key with a short description.
pub const KEYS: &[(&str, &str)] = &[
    ("seed", "seed of initialization and batch sampling"),
    ("target_style", "art style the generator is trained towards"),
    ("lambda_pxl", "weight of the pixel loss"),
    ("lambda_fp", "weight of the fixpoint loss"),
    ("lambda_adv_style", "weight of the style-adversarial loss"),
    ("lambda_adv_cont", "weight of the content-adversarial loss"),
    ("fixpoint_stop_outer", "treat the re-encoding E of the fixpoint loss as constant"),
    ("lr", "Adam learning rate of both optimizers"),
    ("adam_beta1", "Adam first-moment decay"),
    ("adam_beta2", "Adam second-moment decay"),
    ("adam_eps", "Adam denominator epsilon"),
    ("win_rate_target", "discriminators are updated while their running accuracy is below this"),
    ("win_rate_ema_decay", "decay of the running-accuracy EMA"),
    ("stage1_patch", "stage 1 patch size"),
    ("stage1_iters", "stage 1 iterations"),
    ("stage1_batch", "stage 1 batch size"),
    ("stage1_step_two", "alternate step two with step one in stage 1"),
    ("stage2_patch", "stage 2 patch size"),
    ("stage2_iters", "stage 2 iterations"),
    ("stage2_batch", "stage 2 batch size"),
    ("stage2_step_two", "alternate step two with step one in stage 2"),
    ("checkpoint_every", "iterations between checkpoints"),
    ("stop_after", "stop after this many total iterations (0: run both stages)"),
    ("width_scale", "multiplier on all channel counts"),
    ("reference_size", "input size LFN windows are scaled to"),
    ("scene_classes", "number of photo scene classes"),
    ("disc_s_stages", "stride-2 stages of D_s"),
    ("disc_s_domain_stages", "two 1-based D_s stages carrying domain heads, `a,b`"),
    ("lfn_mode", "`exact` or `sampled` LFN statistics"),
    ("lfn_eps", "added to the LFN standard deviation"),
    ("lfn_grid_stride", "sampled-mode anchor spacing (0: half the window)"),
];

fn parse<V: FromStr>(key: &str, value: &str) -> std::result::Result<V, String> {
    value.parse().map_err(|_| format!("invalid value `{value}` for `{key}`"))
}

fn parse_bool(key: &str, value: &str) -> std::result::Result<bool, String> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("invalid value `{value}` for `{key}` (expected true or false)")),
    }
}

/// Applies one assignment to `cfg`.
pub fn set(cfg: &mut TrainConfig, key: &str, value: &str) -> std::result::Result<(), String> {
    let n = &mut cfg.network;
    match key {
        "seed" => cfg.seed = parse(key, value)?,
        "target_style" => cfg.target_style = parse(key, value)?,
        "lambda_pxl" => cfg.weights.pixel = parse(key, value)?,
        "lambda_fp" => cfg.weights.fixpoint = parse(key, value)?,
        "lambda_adv_style" => cfg.weights.adv_style = parse(key, value)?,
        "lambda_adv_cont" => cfg.weights.adv_cont = parse(key, value)?,
        "fixpoint_stop_outer" => cfg.fixpoint_stop_outer = parse_bool(key, value)?,
        "lr" => cfg.adam.lr = parse(key, value)?,
        "adam_beta1" => cfg.adam.beta1 = parse(key, value)?,
        "adam_beta2" => cfg.adam.beta2 = parse(key, value)?,
        "adam_eps" => cfg.adam.eps = parse(key, value)?,
        "win_rate_target" => cfg.win_rate_target = parse(key, value)?,
        "win_rate_ema_decay" => cfg.win_rate_ema_decay = parse(key, value)?,
        "stage1_patch" => cfg.stage1.patch = parse(key, value)?,
        "stage1_iters" => cfg.stage1.iters = parse(key, value)?,
        "stage1_batch" => cfg.stage1.batch = parse(key, value)?,
        "stage1_step_two" => cfg.stage1.step_two = parse_bool(key, value)?,
        "stage2_patch" => cfg.stage2.patch = parse(key, value)?,
        "stage2_iters" => cfg.stage2.iters = parse(key, value)?,
        "stage2_batch" => cfg.stage2.batch = parse(key, value)?,
        "stage2_step_two" => cfg.stage2.step_two = parse_bool(key, value)?,
        "checkpoint_every" => cfg.checkpoint_every = parse(key, value)?,
        "stop_after" => cfg.stop_after = parse(key, value)?,
        "width_scale" => n.width_scale = parse(key, value)?,
        "reference_size" => n.reference_size = parse(key, value)?,
        "scene_classes" => n.scene_classes = parse(key, value)?,
        "disc_s_stages" => n.disc_s_stages = parse(key, value)?,
        "disc_s_domain_stages" => {
            let parts: Vec<usize> = value
                .split(',')
                .map(|v| parse(key, v.trim()))
                .collect::<std::result::Result<_, _>>()?;
            n.disc_s_domain_stages = parts
                .try_into()
                .map_err(|_| format!("`{key}` takes two comma-separated stages, got `{value}`"))?;
        }
        "lfn_mode" => {
            n.lfn_mode = match value {
                "exact" => LfnMode::Exact,
                "sampled" => LfnMode::Sampled,
                _ => return Err(format!("invalid value `{value}` for `{key}` (expected exact or sampled)")),
            }
        }
        "lfn_eps" => n.lfn_eps = parse(key, value)?,
        "lfn_grid_stride" => n.lfn_grid_stride = parse(key, value)?,
        _ => return Err(format!("unknown key `{key}`")),
    }
    Ok(())
}

/// Current value of `key` in config-file syntax.
pub fn get(cfg: &TrainConfig, key: &str) -> Option<String> {
    let n = &cfg.network;
    Some(match key {
        "seed" => cfg.seed.to_string(),
        "target_style" => cfg.target_style.to_string(),
        "lambda_pxl" => cfg.weights.pixel.to_string(),
        "lambda_fp" => cfg.weights.fixpoint.to_string(),
        "lambda_adv_style" => cfg.weights.adv_style.to_string(),
        "lambda_adv_cont" => cfg.weights.adv_cont.to_string(),
        "fixpoint_stop_outer" => cfg.fixpoint_stop_outer.to_string(),
        "lr" => cfg.adam.lr.to_string(),
        "adam_beta1" => cfg.adam.beta1.to_string(),
        "adam_beta2" => cfg.adam.beta2.to_string(),
        "adam_eps" => cfg.adam.eps.to_string(),
        "win_rate_target" => cfg.win_rate_target.to_string(),
        "win_rate_ema_decay" => cfg.win_rate_ema_decay.to_string(),
        "stage1_patch" => cfg.stage1.patch.to_string(),
        "stage1_iters" => cfg.stage1.iters.to_string(),
        "stage1_batch" => cfg.stage1.batch.to_string(),
        "stage1_step_two" => cfg.stage1.step_two.to_string(),
        "stage2_patch" => cfg.stage2.patch.to_string(),
        "stage2_iters" => cfg.stage2.iters.to_string(),
        "stage2_batch" => cfg.stage2.batch.to_string(),
        "stage2_step_two" => cfg.stage2.step_two.to_string(),
        "checkpoint_every" => cfg.checkpoint_every.to_string(),
        "stop_after" => cfg.stop_after.to_string(),
        "width_scale" => n.width_scale.to_string(),
        "reference_size" => n.reference_size.to_string(),
        "scene_classes" => n.scene_classes.to_string(),
        "disc_s_stages" => n.disc_s_stages.to_string(),
        "disc_s_domain_stages" => format!("{},{}", n.disc_s_domain_stages[0], n.disc_s_domain_stages[1]),
        "lfn_mode" => match n.lfn_mode {
            LfnMode::Exact => "exact".into(),
            LfnMode::Sampled => "sampled".into(),
        },
        "lfn_eps" => n.lfn_eps.to_string(),
        "lfn_grid_stride" => n.lfn_grid_stride.to_string(),
        _ => return None,
    })
}

/// Parses config text on top of the desk defaults and validates the result.
pub fn parse_config(text: &str) -> Result<TrainConfig> {
    let mut cfg = TrainConfig::desk();
    let mut seen = std::collections::BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Config(format!("line {line_no}: {msg}"));
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, found `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if let Some(prev) = seen.insert(key.to_string(), line_no) {
            return Err(err(format!("`{key}` was already set on line {prev}")));
        }
        set(&mut cfg, key, value).map_err(err)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<TrainConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// A complete config file for `cfg`, one commented key per entry.
pub fn render(cfg: &TrainConfig) -> String {
    let mut s = String::new();
    for (key, doc) in KEYS {
        let _ = writeln!(s, "# {doc}");
        let _ = writeln!(s, "{key} = {}", get(cfg, key).expect("listed key"));
    }
    s
}
