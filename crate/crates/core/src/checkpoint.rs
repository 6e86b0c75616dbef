//! Checkpoints: a line-oriented text manifest next to a little-endian `f32`
//! blob.
//!
//! ```text
//! lfnet-checkpoint 1
//! blob ckpt-000500.bin
//! blob_fnv1a 9c3a0f0e12ab34cd
//! iteration 500
//! seed 7
//! target_style 0
//! ema_s 0.8012
//! ema_c 0.7931
//! width_scale 0.125
//! reference_size 32
//! scene_classes 4
//! disc_s_stages 4
//! disc_s_domain_stages 2 3
//! lfn_mode exact
//! lfn_eps 0.00001
//! lfn_grid_stride 0
//! param encoder/block1/conv/kernel 3x3x3x4 0
//! moments gen encoder/block1/conv/kernel 500 3x3x3x4 108 144
//! ```
//!
//! Offsets count `f32` values from the start of the blob.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::lfn::LfnMode;
use crate::networks::NetworkSpec;
use crate::optim::{Adam, AdamConfig, Moments};
use crate::params::ParameterStore;
use crate::tensor::{Shape, Tensor};
use crate::trainer::TrainState;

const MAGIC: &str = "lfnet-checkpoint 1";

pub struct Checkpoint {
    pub spec: NetworkSpec,
    pub seed: u64,
    /// Art style the generator was trained towards.
    pub target_style: usize,
    pub state: TrainState,
}

pub fn file_name(iteration: u64) -> String {
    format!("ckpt-{iteration:06}.txt")
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

fn shape_text(s: Shape) -> String {
    let [b, h, w, c] = s.dims();
    format!("{b}x{h}x{w}x{c}")
}

struct Blob {
    data: Vec<f32>,
}

impl Blob {
    fn push(&mut self, t: &Tensor<f32>) -> usize {
        let offset = self.data.len();
        self.data.extend_from_slice(t.data());
        offset
    }
}

pub fn save(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let blob_name = path.with_extension("bin");
    let blob_file = blob_name
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::Checkpoint(format!("invalid checkpoint path {}", path.display())))?
        .to_string();
    let s = &ckpt.spec;
    let st = &ckpt.state;
    let mut blob = Blob { data: Vec::new() };
    let mut body = Vec::new();
    for (name, t) in st.params.iter() {
        let off = blob.push(t);
        body.push(format!("param {name} {} {off}", shape_text(t.shape())));
    }
    for (which, opt) in [("gen", &st.gen_opt), ("disc", &st.disc_opt)] {
        for (name, m) in opt.state() {
            let mo = blob.push(&m.m);
            let vo = blob.push(&m.v);
            body.push(format!("moments {which} {name} {} {} {mo} {vo}", m.step, shape_text(m.m.shape())));
        }
    }
    let bytes: Vec<u8> = blob.data.iter().flat_map(|v| v.to_le_bytes()).collect();
    let mode = match s.lfn_mode {
        LfnMode::Exact => "exact",
        LfnMode::Sampled => "sampled",
    };
    let mut text = vec![
        MAGIC.to_string(),
        format!("blob {blob_file}"),
        format!("blob_fnv1a {:016x}", fnv1a(&bytes)),
        format!("iteration {}", st.iteration),
        format!("seed {}", ckpt.seed),
        format!("target_style {}", ckpt.target_style),
        format!("ema_s {}", st.ema_s),
        format!("ema_c {}", st.ema_c),
        format!("width_scale {}", s.width_scale),
        format!("reference_size {}", s.reference_size),
        format!("scene_classes {}", s.scene_classes),
        format!("disc_s_stages {}", s.disc_s_stages),
        format!("disc_s_domain_stages {} {}", s.disc_s_domain_stages[0], s.disc_s_domain_stages[1]),
        format!("lfn_mode {mode}"),
        format!("lfn_eps {}", s.lfn_eps),
        format!("lfn_grid_stride {}", s.lfn_grid_stride),
    ];
    text.extend(body);
    let mut manifest = text.join("\n");
    manifest.push('\n');
    fs::write(&blob_name, &bytes).map_err(|e| Error::io(format!("writing {}", blob_name.display()), e))?;
    fs::write(path, manifest).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn bad(path: &Path, line: usize, what: impl std::fmt::Display) -> Error {
    Error::Checkpoint(format!("{}:{line}: {what}", path.display()))
}

fn parse_shape(text: &str) -> Option<Shape> {
    let d: Vec<usize> = text.split('x').map(|p| p.parse().ok()).collect::<Option<_>>()?;
    match d[..] {
        [b, h, w, c] => Shape::new(b, h, w, c).ok(),
        _ => None,
    }
}

/// Loads a checkpoint; the Adam configuration is left at its default and
/// should be replaced by the caller's.
pub fn load(path: &Path) -> Result<Checkpoint> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l == MAGIC => {}
        _ => return Err(bad(path, 1, format!("expected `{MAGIC}`"))),
    }
    let mut header = std::collections::BTreeMap::new();
    let mut entries = Vec::new();
    for (n, line) in lines {
        let (key, rest) = line.split_once(' ').ok_or_else(|| bad(path, n, "expected `key value`"))?;
        match key {
            "param" | "moments" => entries.push((n, key, rest)),
            _ => {
                if header.insert(key, (n, rest)).is_some() {
                    return Err(bad(path, n, format!("duplicate key `{key}`")));
                }
            }
        }
    }
    let field = |key: &str| header.get(key).copied().ok_or_else(|| bad(path, 0, format!("missing `{key}`")));
    fn num<V: std::str::FromStr>(path: &Path, (n, v): (usize, &str)) -> Result<V> {
        v.parse().map_err(|_| bad(path, n, format!("cannot parse `{v}`")))
    }
    let (_, blob_file) = field("blob")?;
    let blob_path: PathBuf = path.parent().unwrap_or(Path::new(".")).join(blob_file);
    let bytes = fs::read(&blob_path).map_err(|e| Error::io(format!("reading {}", blob_path.display()), e))?;
    let (n, hash) = field("blob_fnv1a")?;
    if format!("{:016x}", fnv1a(&bytes)) != hash {
        return Err(bad(path, n, format!("blob {} does not match its checksum", blob_path.display())));
    }
    if bytes.len() % 4 != 0 {
        return Err(bad(path, n, "blob length is not a multiple of 4"));
    }
    let blob: Vec<f32> = bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
    let (n, stages) = field("disc_s_domain_stages")?;
    let ds: Vec<usize> = stages.split(' ').map(|v| num(path, (n, v))).collect::<Result<_>>()?;
    let [d0, d1] = ds[..] else {
        return Err(bad(path, n, "expected two domain stages"));
    };
    let (n, mode) = field("lfn_mode")?;
    let spec = NetworkSpec {
        width_scale: num(path, field("width_scale")?)?,
        reference_size: num(path, field("reference_size")?)?,
        scene_classes: num(path, field("scene_classes")?)?,
        disc_s_stages: num(path, field("disc_s_stages")?)?,
        disc_s_domain_stages: [d0, d1],
        lfn_mode: match mode {
            "exact" => LfnMode::Exact,
            "sampled" => LfnMode::Sampled,
            other => return Err(bad(path, n, format!("unknown lfn_mode `{other}`"))),
        },
        lfn_eps: num(path, field("lfn_eps")?)?,
        lfn_grid_stride: num(path, field("lfn_grid_stride")?)?,
    };
    spec.validate()?;
    let slice = |n: usize, shape: Shape, off: usize| -> Result<Tensor<f32>> {
        let data = blob
            .get(off..off + shape.len())
            .ok_or_else(|| bad(path, n, "tensor extends past the end of the blob"))?;
        Tensor::from_vec(shape, data.to_vec())
    };
    let mut params = ParameterStore::new();
    let mut gen_opt = Adam::new(AdamConfig::default());
    let mut disc_opt = Adam::new(AdamConfig::default());
    for (n, key, rest) in entries {
        let f: Vec<&str> = rest.split(' ').collect();
        let shape_at = |i: usize| f.get(i).and_then(|s| parse_shape(s)).ok_or_else(|| bad(path, n, "bad shape"));
        let usize_at = |i: usize| f.get(i).and_then(|s| s.parse::<usize>().ok()).ok_or_else(|| bad(path, n, "bad number"));
        if key == "param" {
            if f.len() != 3 {
                return Err(bad(path, n, "expected `param <name> <shape> <offset>`"));
            }
            params
                .insert(f[0], slice(n, shape_at(1)?, usize_at(2)?)?)
                .map_err(|e| bad(path, n, e))?;
        } else {
            if f.len() != 6 {
                return Err(bad(path, n, "expected `moments <opt> <name> <step> <shape> <m> <v>`"));
            }
            let shape = shape_at(3)?;
            let moments = Moments {
                step: usize_at(2)? as u64,
                m: slice(n, shape, usize_at(4)?)?,
                v: slice(n, shape, usize_at(5)?)?,
            };
            match f[0] {
                "gen" => gen_opt.set_state(f[1], moments),
                "disc" => disc_opt.set_state(f[1], moments),
                other => return Err(bad(path, n, format!("unknown optimizer `{other}`"))),
            }
        }
    }
    Ok(Checkpoint {
        spec,
        seed: num(path, field("seed")?)?,
        target_style: num(path, field("target_style")?)?,
        state: TrainState {
            params,
            gen_opt,
            disc_opt,
            ema_s: num(path, field("ema_s")?)?,
            ema_c: num(path, field("ema_c")?)?,
            iteration: num(path, field("iteration")?)?,
        },
    })
}

/// Errors unless both stores hold the same names with the same shapes.
pub fn check_compatible(expected: &ParameterStore<f32>, found: &ParameterStore<f32>) -> Result<()> {
    for (name, t) in expected.iter() {
        match found.get(name) {
            None => return Err(Error::Checkpoint(format!("checkpoint lacks parameter `{name}`"))),
            Some(f) if f.shape() != t.shape() => {
                return Err(Error::Checkpoint(format!(
                    "parameter `{name}` has shape {} in the checkpoint, expected {}",
                    f.shape(),
                    t.shape()
                )))
            }
            _ => {}
        }
    }
    if let Some(extra) = found.names().find(|n| !expected.contains(n)) {
        return Err(Error::Checkpoint(format!("checkpoint has unexpected parameter `{extra}`")));
    }
    Ok(())
}
