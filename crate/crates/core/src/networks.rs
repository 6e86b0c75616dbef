//! Encoder `E`, content transformation block `T`, decoder `D` and the two
//! discriminators `D_s` (images) and `D_c` (content codes).
//!
//! Channel widths are the full-size widths multiplied by a width scale.
//! LFN window sizes are given for 256-pixel inputs and scaled to the
//! network's reference input size.

use rand::Rng;

use crate::error::{Error, Result};
use crate::lfn::{LfnConfig, LfnMode};
use crate::ops::Padding;
use crate::params::{he_normal, ParameterStore};
use crate::scalar::Scalar;
use crate::tape::{Bound, Var};
use crate::tensor::{Shape, Tensor};

pub const LRELU_SLOPE: f64 = 0.2;
pub const CONTENT_CLASSES: usize = 2;

const ENCODER_WIDTHS: [usize; 5] = [32, 64, 128, 256, 256];
const ENCODER_WINDOWS: [usize; 5] = [128, 64, 32, 32, 16];
const DECODER_WIDTHS: [usize; 4] = [256, 128, 64, 32];
const DECODER_WINDOWS: [usize; 4] = [16, 32, 64, 128];
const RESBLOCK_WINDOW: usize = 32;
const RESIDUAL_BLOCKS: usize = 9;
const DISC_S_WIDTHS: [usize; 7] = [128, 128, 256, 512, 512, 1024, 1024];
const DISC_S_WINDOWS: [usize; 7] = [128, 64, 32, 16, 8, 4, 4];
const DISC_S_FINAL_KERNEL: usize = 6;
const DISC_C_HIDDEN: usize = 512;

/// Shared description of all five sub-networks.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSpec {
    /// Multiplier on every channel count, in `(0, 1]`.
    pub width_scale: f64,
    /// Input size the LFN windows are scaled to (256 at full size).
    pub reference_size: usize,
    pub scene_classes: usize,
    /// Number of stride-2 stages in `D_s` (7 at full size).
    pub disc_s_stages: usize,
    /// 1-based `D_s` stages carrying the single-kernel domain heads.
    pub disc_s_domain_stages: [usize; 2],
    pub lfn_mode: LfnMode,
    pub lfn_eps: f64,
    /// Anchor spacing of sampled LFN; 0 picks `ceil(window / 2)` per layer.
    pub lfn_grid_stride: usize,
}

impl NetworkSpec {
    /// The architecture at full width for 256-pixel inputs.
    pub fn full(scene_classes: usize) -> Self {
        NetworkSpec {
            width_scale: 1.0,
            reference_size: 256,
            scene_classes,
            disc_s_stages: 7,
            disc_s_domain_stages: [4, 5],
            lfn_mode: LfnMode::Exact,
            lfn_eps: crate::lfn::DEFAULT_EPS,
            lfn_grid_stride: 0,
        }
    }

    /// Width 1/8, 32-pixel reference, four `D_s` stages.
    pub fn desk(scene_classes: usize) -> Self {
        NetworkSpec {
            width_scale: 0.125,
            reference_size: 32,
            scene_classes,
            disc_s_stages: 4,
            disc_s_domain_stages: [2, 3],
            lfn_mode: LfnMode::Exact,
            lfn_eps: crate::lfn::DEFAULT_EPS,
            lfn_grid_stride: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width_scale > 0.0 && self.width_scale <= 1.0) {
            return Err(Error::Config(format!("width_scale {} is outside (0, 1]", self.width_scale)));
        }
        if self.reference_size == 0 || self.reference_size % 16 != 0 {
            return Err(Error::Config(format!(
                "reference size {} is not a positive multiple of 16",
                self.reference_size
            )));
        }
        if self.scene_classes < 2 {
            return Err(Error::Config("at least two scene classes are needed".into()));
        }
        if !(1..=DISC_S_WIDTHS.len()).contains(&self.disc_s_stages) {
            return Err(Error::Config(format!(
                "D_s needs 1..={} stages, got {}",
                DISC_S_WIDTHS.len(),
                self.disc_s_stages
            )));
        }
        if self.reference_size >> self.disc_s_stages == 0 {
            return Err(Error::Config(format!(
                "{}-pixel inputs are too small for {} stride-2 stages",
                self.reference_size, self.disc_s_stages
            )));
        }
        if self.disc_s_domain_stages.iter().any(|&s| s == 0 || s > self.disc_s_stages) {
            return Err(Error::Config(format!(
                "D_s domain heads {:?} must lie in 1..={}",
                self.disc_s_domain_stages, self.disc_s_stages
            )));
        }
        if !(self.lfn_eps > 0.0 && self.lfn_eps.is_finite()) {
            return Err(Error::Config(format!("lfn_eps must be > 0, got {}", self.lfn_eps)));
        }
        Ok(())
    }

    /// LFN group size: 32 scaled, at least 4.
    pub fn group(&self) -> usize {
        ((32.0 * self.width_scale).round() as usize).max(4)
    }

    /// Scaled channel count, rounded up to a multiple of the group size.
    pub fn channels(&self, full: usize) -> usize {
        let g = self.group();
        let c = ((full as f64 * self.width_scale).round() as usize).max(g);
        c.div_ceil(g) * g
    }

    /// Channels of the content tensor between `E`, `T` and `D`.
    pub fn content_channels(&self) -> usize {
        self.channels(ENCODER_WIDTHS[4])
    }

    pub fn window(&self, full: usize) -> usize {
        ((full * self.reference_size) as f64 / 256.0).round().max(1.0) as usize
    }

    fn lfn(&self, full_window: usize) -> LfnConfig {
        let cfg = LfnConfig::new(self.window(full_window), self.group()).with_eps(self.lfn_eps);
        match (self.lfn_mode, self.lfn_grid_stride) {
            (LfnMode::Exact, _) => cfg,
            (LfnMode::Sampled, 0) => cfg.sampled(cfg.grid_stride),
            (LfnMode::Sampled, s) => cfg.sampled(s),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    LRelu,
    None,
}

impl Activation {
    fn apply<'t, T: Scalar>(self, x: Var<'t, T>) -> Var<'t, T> {
        match self {
            Activation::Relu => x.relu(),
            Activation::LRelu => x.lrelu(LRELU_SLOPE),
            Activation::None => x,
        }
    }
}

#[derive(Clone, Debug)]
struct Conv {
    name: String,
    kernel: usize,
    cin: usize,
    cout: usize,
    stride: usize,
    padding: Padding,
    zero_init: bool,
}

impl Conv {
    fn new(name: String, kernel: usize, cin: usize, cout: usize, stride: usize) -> Self {
        Conv {
            name,
            kernel,
            cin,
            cout,
            stride,
            padding: Padding::Reflect,
            zero_init: false,
        }
    }

    fn init<T: Scalar, R: Rng + ?Sized>(&self, store: &mut ParameterStore<T>, rng: &mut R) -> Result<()> {
        let shape = Shape::new(self.kernel, self.kernel, self.cin, self.cout)?;
        let kernel = if self.zero_init {
            Tensor::zeros(shape)
        } else {
            he_normal(shape, self.kernel * self.kernel * self.cin, rng)
        };
        store.insert(format!("{}/kernel", self.name), kernel)?;
        store.insert(format!("{}/bias", self.name), Tensor::zeros(Shape::vector(self.cout)))
    }

    fn apply<'t, T: Scalar>(&self, p: &Bound<'t, T>, x: Var<'t, T>) -> Result<Var<'t, T>> {
        let k = p.get(&format!("{}/kernel", self.name))?;
        let b = p.get(&format!("{}/bias", self.name))?;
        x.conv2d(k, b, self.stride, self.padding)
    }

    fn numel(&self) -> usize {
        self.kernel * self.kernel * self.cin * self.cout + self.cout
    }
}

#[derive(Clone, Debug)]
struct Norm {
    name: String,
    channels: usize,
    cfg: LfnConfig,
}

impl Norm {
    fn init<T: Scalar>(&self, store: &mut ParameterStore<T>) -> Result<()> {
        self.cfg.validate(self.channels)?;
        store.insert(format!("{}/gamma", self.name), Tensor::ones(Shape::vector(self.channels)))?;
        store.insert(format!("{}/beta", self.name), Tensor::zeros(Shape::vector(self.channels)))
    }

    fn apply<'t, T: Scalar>(&self, p: &Bound<'t, T>, x: Var<'t, T>) -> Result<Var<'t, T>> {
        let g = p.get(&format!("{}/gamma", self.name))?;
        let b = p.get(&format!("{}/beta", self.name))?;
        x.lfn(g, b, &self.cfg)
    }
}

#[derive(Clone, Debug)]
struct Dense {
    name: String,
    n_in: usize,
    n_out: usize,
}

impl Dense {
    fn init<T: Scalar, R: Rng + ?Sized>(&self, store: &mut ParameterStore<T>, rng: &mut R) -> Result<()> {
        let shape = Shape::new(1, 1, self.n_in, self.n_out)?;
        store.insert(format!("{}/weights", self.name), he_normal(shape, self.n_in, rng))?;
        store.insert(format!("{}/bias", self.name), Tensor::zeros(Shape::vector(self.n_out)))
    }

    fn apply<'t, T: Scalar>(&self, p: &Bound<'t, T>, x: Var<'t, T>) -> Result<Var<'t, T>> {
        let w = p.get(&format!("{}/weights", self.name))?;
        let b = p.get(&format!("{}/bias", self.name))?;
        x.fully_connected(w, b)
    }
}

/// Convolution, LFN, activation.
#[derive(Clone, Debug)]
struct Stage {
    conv: Conv,
    norm: Norm,
    act: Activation,
}

impl Stage {
    fn new(spec: &NetworkSpec, name: &str, conv: Conv, full_window: usize, act: Activation) -> Self {
        let norm = Norm {
            name: format!("{name}/lfn"),
            channels: conv.cout,
            cfg: spec.lfn(full_window),
        };
        Stage { conv, norm, act }
    }

    fn init<T: Scalar, R: Rng + ?Sized>(&self, store: &mut ParameterStore<T>, rng: &mut R) -> Result<()> {
        self.conv.init(store, rng)?;
        self.norm.init(store)
    }

    fn apply<'t, T: Scalar>(&self, p: &Bound<'t, T>, x: Var<'t, T>) -> Result<Var<'t, T>> {
        let y = self.conv.apply(p, x)?;
        Ok(self.act.apply(self.norm.apply(p, y)?))
    }

    fn numel(&self) -> usize {
        self.conv.numel() + 2 * self.norm.channels
    }
}

/// Two 3x3 stages plus an identity skip.
#[derive(Clone, Debug)]
struct ResBlock {
    first: Stage,
    second: Stage,
}

impl ResBlock {
    fn new(spec: &NetworkSpec, name: &str, channels: usize, act: Activation, zero_last: bool) -> Self {
        let conv = |i: usize| Conv::new(format!("{name}/stage{i}/conv"), 3, channels, channels, 1);
        let mut second = Stage::new(spec, &format!("{name}/stage2"), conv(2), RESBLOCK_WINDOW, act);
        second.conv.zero_init = zero_last;
        ResBlock {
            first: Stage::new(spec, &format!("{name}/stage1"), conv(1), RESBLOCK_WINDOW, act),
            second,
        }
    }

    fn init<T: Scalar, R: Rng + ?Sized>(&self, store: &mut ParameterStore<T>, rng: &mut R) -> Result<()> {
        self.first.init(store, rng)?;
        self.second.init(store, rng)
    }

    fn apply<'t, T: Scalar>(&self, p: &Bound<'t, T>, x: Var<'t, T>) -> Result<Var<'t, T>> {
        let y = self.second.apply(p, self.first.apply(p, x)?)?;
        y.add(x)
    }

    fn numel(&self) -> usize {
        self.first.numel() + self.second.numel()
    }
}

fn check_channels(net: &str, x: Shape, channels: usize) -> Result<()> {
    if x.channels != channels {
        return Err(Error::Shape(format!(
            "{net} expects {channels} input channels, got {} ({x})",
            x.channels
        )));
    }
    Ok(())
}

/// `E`: image `[B, S, S, 3]` to content code `[B, S/16, S/16, 256 * scale]`.
#[derive(Clone, Debug)]
pub struct Encoder {
    stages: Vec<Stage>,
}

impl Encoder {
    pub fn new(spec: &NetworkSpec) -> Self {
        let mut stages = Vec::new();
        let mut cin = 3;
        for (i, (&w, &ws)) in ENCODER_WIDTHS.iter().zip(&ENCODER_WINDOWS).enumerate() {
            let cout = spec.channels(w);
            let name = format!("encoder/block{}", i + 1);
            let stride = if i == 0 { 1 } else { 2 };
            let conv = Conv::new(format!("{name}/conv"), 3, cin, cout, stride);
            stages.push(Stage::new(spec, &name, conv, ws, Activation::Relu));
            cin = cout;
        }
        Encoder { stages }
    }

    pub fn init<T: Scalar, R: Rng + ?Sized>(&self, store: &mut ParameterStore<T>, rng: &mut R) -> Result<()> {
        self.stages.iter().try_for_each(|s| s.init(store, rng))
    }

    pub fn forward<'t, T: Scalar>(&self, p: &Bound<'t, T>, x: Var<'t, T>) -> Result<Var<'t, T>> {
        let s = x.shape();
        if s.height % 16 != 0 || s.width % 16 != 0 {
            return Err(Error::Config(format!(
                "encoder input {}x{} is not divisible by 16",
                s.height, s.width
            )));
        }
        check_channels("encoder", s, 3)?;
        self.stages.iter().try_fold(x, |x, stage| stage.apply(p, x))
    }

    pub fn numel(&self) -> usize {
        self.stages.iter().map(Stage::numel).sum()
    }
}

/// `T`: nine residual blocks with LReLU; identity at initialization.
#[derive(Clone, Debug)]
pub struct Transformer {
    channels: usize,
    blocks: Vec<ResBlock>,
}

impl Transformer {
    pub fn new(spec: &NetworkSpec) -> Self {
        let channels = spec.content_channels();
        let blocks = (1..=RESIDUAL_BLOCKS)
            .map(|i| ResBlock::new(spec, &format!("transformer/res{i}"), channels, Activation::LRelu, true))
            .collect();
        Transformer { channels, blocks }
    }

    pub fn init<T: Scalar, R: Rng + ?Sized>(&self, store: &mut ParameterStore<T>, rng: &mut R) -> Result<()> {
        self.blocks.iter().try_for_each(|b| b.init(store, rng))
    }

    pub fn forward<'t, T: Scalar>(&self, p: &Bound<'t, T>, x: Var<'t, T>) -> Result<Var<'t, T>> {
        check_channels("transformer", x.shape(), self.channels)?;
        self.blocks.iter().try_fold(x, |x, b| b.apply(p, x))
    }

    pub fn numel(&self) -> usize {
        self.blocks.iter().map(ResBlock::numel).sum()
    }
}

/// `D`: content code to image in `(0, 1)`, 16x the code's spatial size.
#[derive(Clone, Debug)]
pub struct Decoder {
    channels: usize,
    input: Conv,
    blocks: Vec<ResBlock>,
    upscales: Vec<Stage>,
    output: Conv,
}

impl Decoder {
    pub fn new(spec: &NetworkSpec) -> Self {
        let channels = spec.content_channels();
        let blocks = (1..=RESIDUAL_BLOCKS)
            .map(|i| ResBlock::new(spec, &format!("decoder/res{i}"), channels, Activation::Relu, false))
            .collect();
        let mut upscales = Vec::new();
        let mut cin = channels;
        for (i, (&w, &ws)) in DECODER_WIDTHS.iter().zip(&DECODER_WINDOWS).enumerate() {
            let cout = spec.channels(w);
            let name = format!("decoder/up{}", i + 1);
            let conv = Conv::new(format!("{name}/conv"), 3, cin, cout, 1);
            upscales.push(Stage::new(spec, &name, conv, ws, Activation::Relu));
            cin = cout;
        }
        Decoder {
            channels,
            input: Conv::new("decoder/input".into(), 3, channels, channels, 1),
            blocks,
            upscales,
            output: Conv::new("decoder/output".into(), 7, cin, 3, 1),
        }
    }

    pub fn init<T: Scalar, R: Rng + ?Sized>(&self, store: &mut ParameterStore<T>, rng: &mut R) -> Result<()> {
        self.input.init(store, rng)?;
        self.blocks.iter().try_for_each(|b| b.init(store, rng))?;
        self.upscales.iter().try_for_each(|s| s.init(store, rng))?;
        self.output.init(store, rng)
    }

    pub fn forward<'t, T: Scalar>(&self, p: &Bound<'t, T>, x: Var<'t, T>) -> Result<Var<'t, T>> {
        check_channels("decoder", x.shape(), self.channels)?;
        let mut h = self.input.apply(p, x)?.relu();
        for b in &self.blocks {
            h = b.apply(p, h)?;
        }
        for s in &self.upscales {
            h = s.apply(p, h.upsample_nearest2x())?;
        }
        Ok(self.output.apply(p, h)?.sigmoid())
    }

    pub fn numel(&self) -> usize {
        self.input.numel()
            + self.blocks.iter().map(ResBlock::numel).sum::<usize>()
            + self.upscales.iter().map(Stage::numel).sum::<usize>()
            + self.output.numel()
    }
}

/// Outputs of [`DiscS`].
pub struct DiscSOutput<'t, T: Scalar> {
    /// `[B, 1, 1, scene_classes]`.
    pub scene_logits: Var<'t, T>,
    /// `[B, 1, 1, 1]`, real art is the positive class.
    pub domain_logit: Var<'t, T>,
}

/// `D_s`: image to scene logits and a domain logit.
///
/// The domain logit averages the spatial means of two single-kernel 1x1
/// convolutions on intermediate stages.
#[derive(Clone, Debug)]
pub struct DiscS {
    stages: Vec<Stage>,
    heads: Vec<(usize, Conv)>,
    final_conv: Conv,
    classifier: Dense,
}

impl DiscS {
    pub fn new(spec: &NetworkSpec) -> Self {
        let mut stages = Vec::new();
        let mut cin = 3;
        for i in 0..spec.disc_s_stages {
            let cout = spec.channels(DISC_S_WIDTHS[i]);
            let name = format!("disc_s/block{}", i + 1);
            let conv = Conv::new(format!("{name}/conv"), 5, cin, cout, 2);
            stages.push(Stage::new(spec, &name, conv, DISC_S_WINDOWS[i], Activation::LRelu));
            cin = cout;
        }
        let heads = spec
            .disc_s_domain_stages
            .iter()
            .enumerate()
            .map(|(i, &stage)| {
                let c = stages[stage - 1].conv.cout;
                (stage, Conv::new(format!("disc_s/domain{}", i + 1), 1, c, 1, 1))
            })
            .collect();
        let last = (spec.reference_size >> spec.disc_s_stages).max(1);
        let mut final_conv = Conv::new("disc_s/final".into(), DISC_S_FINAL_KERNEL.min(last), cin, cin, 1);
        final_conv.padding = Padding::Valid;
        DiscS {
            classifier: Dense {
                name: "disc_s/scene".into(),
                n_in: cin,
                n_out: spec.scene_classes,
            },
            stages,
            heads,
            final_conv,
        }
    }

    pub fn init<T: Scalar, R: Rng + ?Sized>(&self, store: &mut ParameterStore<T>, rng: &mut R) -> Result<()> {
        self.stages.iter().try_for_each(|s| s.init(store, rng))?;
        self.heads.iter().try_for_each(|(_, h)| h.init(store, rng))?;
        self.final_conv.init(store, rng)?;
        self.classifier.init(store, rng)
    }

    pub fn forward<'t, T: Scalar>(&self, p: &Bound<'t, T>, x: Var<'t, T>) -> Result<DiscSOutput<'t, T>> {
        check_channels("D_s", x.shape(), 3)?;
        let mut h = x;
        let mut domain: Option<Var<'t, T>> = None;
        for (i, stage) in self.stages.iter().enumerate() {
            h = stage.apply(p, h)?;
            for (_, head) in self.heads.iter().filter(|(s, _)| *s == i + 1) {
                let score = head.apply(p, h)?.global_avg_pool();
                domain = Some(match domain {
                    Some(d) => d.add(score)?,
                    None => score,
                });
            }
        }
        let domain = domain.expect("at least one domain head").scale(1.0 / self.heads.len() as f64);
        let s = h.shape();
        if s.height < self.final_conv.kernel || s.width < self.final_conv.kernel {
            return Err(Error::Config(format!(
                "D_s input {}x{} is too small: the final {k}x{k} convolution sees {}x{}",
                x.shape().height,
                x.shape().width,
                s.height,
                s.width,
                k = self.final_conv.kernel
            )));
        }
        let h = self.final_conv.apply(p, h)?.lrelu(LRELU_SLOPE).max_pool_full();
        Ok(DiscSOutput {
            scene_logits: self.classifier.apply(p, h)?,
            domain_logit: domain,
        })
    }
}

/// Outputs of [`DiscC`], each `[B, 1, 1, 2]`.
pub struct DiscCOutput<'t, T: Scalar> {
    pub class_logits: Var<'t, T>,
    /// Index 1 is "real art code".
    pub domain_logits: Var<'t, T>,
}

/// `D_c`: content code to content-class and domain logits.
#[derive(Clone, Debug)]
pub struct DiscC {
    channels: usize,
    hidden: [Dense; 2],
    class_head: Dense,
    domain_head: Dense,
}

impl DiscC {
    pub fn new(spec: &NetworkSpec) -> Self {
        let channels = spec.content_channels();
        let width = ((DISC_C_HIDDEN as f64 * spec.width_scale).round() as usize).max(1);
        let dense = |name: &str, n_in, n_out| Dense {
            name: format!("disc_c/{name}"),
            n_in,
            n_out,
        };
        DiscC {
            channels,
            hidden: [dense("fc1", channels, width), dense("fc2", width, width)],
            class_head: dense("class", width, CONTENT_CLASSES),
            domain_head: dense("domain", width, 2),
        }
    }

    pub fn init<T: Scalar, R: Rng + ?Sized>(&self, store: &mut ParameterStore<T>, rng: &mut R) -> Result<()> {
        for d in self.hidden.iter().chain([&self.class_head, &self.domain_head]) {
            d.init(store, rng)?;
        }
        Ok(())
    }

    pub fn forward<'t, T: Scalar>(&self, p: &Bound<'t, T>, x: Var<'t, T>) -> Result<DiscCOutput<'t, T>> {
        check_channels("D_c", x.shape(), self.channels)?;
        let mut h = x.global_avg_pool();
        for d in &self.hidden {
            h = d.apply(p, h)?.relu();
        }
        Ok(DiscCOutput {
            class_logits: self.class_head.apply(p, h)?,
            domain_logits: self.domain_head.apply(p, h)?,
        })
    }
}

/// Parameter name prefixes of the five sub-networks.
pub mod prefix {
    pub const ENCODER: &str = "encoder/";
    pub const TRANSFORMER: &str = "transformer/";
    pub const DECODER: &str = "decoder/";
    pub const DISC_S: &str = "disc_s/";
    pub const DISC_C: &str = "disc_c/";
}

/// All five sub-networks built from one spec.
#[derive(Clone, Debug)]
pub struct Networks {
    pub spec: NetworkSpec,
    pub encoder: Encoder,
    pub transformer: Transformer,
    pub decoder: Decoder,
    pub disc_s: DiscS,
    pub disc_c: DiscC,
}

impl Networks {
    pub fn new(spec: NetworkSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Networks {
            encoder: Encoder::new(&spec),
            transformer: Transformer::new(&spec),
            decoder: Decoder::new(&spec),
            disc_s: DiscS::new(&spec),
            disc_c: DiscC::new(&spec),
            spec,
        })
    }

    /// Fresh parameters for every sub-network.
    pub fn init<T: Scalar, R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ParameterStore<T>> {
        let mut store = ParameterStore::new();
        self.encoder.init(&mut store, rng)?;
        self.transformer.init(&mut store, rng)?;
        self.decoder.init(&mut store, rng)?;
        self.disc_s.init(&mut store, rng)?;
        self.disc_c.init(&mut store, rng)?;
        Ok(store)
    }

    /// `D(T(E(x)))`, or `D(E(x))` when `use_transform` is false.
    pub fn stylize<'t, T: Scalar>(&self, p: &Bound<'t, T>, x: Var<'t, T>, use_transform: bool) -> Result<Var<'t, T>> {
        let code = self.encoder.forward(p, x)?;
        let code = if use_transform {
            self.transformer.forward(p, code)?
        } else {
            code
        };
        self.decoder.forward(p, code)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_widths_and_windows() {
        let spec = NetworkSpec::desk(4);
        assert_eq!(spec.group(), 4);
        assert_eq!(spec.channels(32), 4);
        assert_eq!(spec.channels(256), 32);
        assert_eq!(spec.channels(1024), 128);
        assert_eq!(spec.window(128), 16);
        assert_eq!(spec.window(4), 1);
        let full = NetworkSpec::full(4);
        assert_eq!(full.group(), 32);
        assert_eq!(full.channels(256), 256);
        assert_eq!(full.window(128), 128);
    }

    #[test]
    fn odd_scales_round_to_group_multiples() {
        let spec = NetworkSpec {
            width_scale: 0.3,
            ..NetworkSpec::desk(4)
        };
        let g = spec.group();
        assert_eq!(g, 10);
        for w in [32, 64, 128, 256, 512] {
            assert_eq!(spec.channels(w) % g, 0);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(NetworkSpec { width_scale: 0.0, ..NetworkSpec::desk(4) }.validate().is_err());
        assert!(NetworkSpec { reference_size: 40, ..NetworkSpec::desk(4) }.validate().is_err());
        assert!(NetworkSpec { disc_s_stages: 6, ..NetworkSpec::desk(4) }.validate().is_err());
        assert!(NetworkSpec { disc_s_domain_stages: [2, 5], ..NetworkSpec::desk(4) }.validate().is_err());
        assert!(NetworkSpec::full(365).validate().is_ok());
    }
}
