//! Local Feature Normalization.
//!
//! Every element is normalized by the mean and (population) standard
//! deviation of a `window x window` spatial neighbourhood across its channel
//! group, then scaled and shifted per channel:
//!
//! ```text
//! out(b,h,w,c) = gamma[c] * (x(b,h,w,c) - mean) / (std + eps) + beta[c]
//! ```
//!
//! Windows use the inclusive radius `window / 2` and are clipped at the
//! tensor border. Window sums are separable box sums. In [`LfnMode::Sampled`] the statistics are only
//! evaluated on a regular anchor grid and bilinearly interpolated in between.

use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tape::Var;
use crate::tensor::{Shape, Tensor};

pub const DEFAULT_EPS: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LfnMode {
    /// Statistics at every position.
    #[default]
    Exact,
    /// Statistics on an anchor grid with step `grid_stride`, interpolated.
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LfnConfig {
    /// Spatial window size in pixels.
    pub window: usize,
    /// Number of neighbouring channels normalized together.
    pub group: usize,
    /// Added to the standard deviation.
    pub eps: f64,
    /// Anchor spacing for [`LfnMode::Sampled`].
    pub grid_stride: usize,
    pub mode: LfnMode,
}

impl LfnConfig {
    /// Exact mode, `eps = 1e-5`, grid stride `ceil(window / 2)`.
    pub fn new(window: usize, group: usize) -> Self {
        LfnConfig {
            window,
            group,
            eps: DEFAULT_EPS,
            grid_stride: window.div_ceil(2).max(1),
            mode: LfnMode::Exact,
        }
    }

    pub fn sampled(mut self, grid_stride: usize) -> Self {
        self.mode = LfnMode::Sampled;
        self.grid_stride = grid_stride;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn radius(&self) -> usize {
        self.window / 2
    }

    pub fn validate(&self, channels: usize) -> Result<()> {
        if self.window == 0 || self.group == 0 {
            return Err(Error::Config("LFN window and group size must be >= 1".into()));
        }
        if channels % self.group != 0 {
            return Err(Error::Config(format!(
                "LFN group size {} does not divide {channels} channels",
                self.group
            )));
        }
        if !(self.eps > 0.0) {
            return Err(Error::Config("LFN eps must be > 0".into()));
        }
        if self.mode == LfnMode::Sampled && (self.grid_stride == 0 || self.grid_stride > self.window) {
            return Err(Error::Config(format!(
                "LFN grid stride {} must lie in 1..={}",
                self.grid_stride, self.window
            )));
        }
        Ok(())
    }

    fn effective_stride(&self) -> usize {
        match self.mode {
            LfnMode::Exact => 1,
            LfnMode::Sampled => self.grid_stride,
        }
    }
}

/// Trainable per-channel scale and shift.
#[derive(Clone, PartialEq)]
pub struct LfnParams<T> {
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
}

impl<T: Scalar> LfnParams<T> {
    /// `gamma = 1`, `beta = 0`.
    pub fn identity(channels: usize) -> Self {
        LfnParams {
            gamma: Tensor::ones(Shape::vector(channels)),
            beta: Tensor::zeros(Shape::vector(channels)),
        }
    }
}

/// Index ranges (inclusive) of the normalization window around one element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowRegion {
    pub rows: RangeInclusive<usize>,
    pub cols: RangeInclusive<usize>,
    pub channels: RangeInclusive<usize>,
}

impl WindowRegion {
    pub fn len(&self) -> usize {
        self.rows.clone().count() * self.cols.clone().count() * self.channels.clone().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn clipped(center: usize, radius: usize, len: usize) -> RangeInclusive<usize> {
    center.saturating_sub(radius)..=(center + radius).min(len - 1)
}

/// The window of element `(h, w, c)` for a tensor of `shape`.
pub fn window_region(shape: Shape, window: usize, group: usize, h: usize, w: usize, c: usize) -> WindowRegion {
    let r = window / 2;
    let first = c / group * group;
    WindowRegion {
        rows: clipped(h, r, shape.height),
        cols: clipped(w, r, shape.width),
        channels: first..=first + group - 1,
    }
}

/// Anchor coordinates along one axis: `0, s, 2s, ...` plus the last index.
fn anchors(len: usize, stride: usize) -> Vec<usize> {
    let mut a: Vec<usize> = (0..len).step_by(stride).collect();
    if *a.last().expect("len >= 1") != len - 1 {
        a.push(len - 1);
    }
    a
}

/// For each coordinate: (lower anchor slot, upper anchor slot, weight of upper).
fn interpolation(len: usize, anchors: &[usize]) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::with_capacity(len);
    let mut j = 0;
    for i in 0..len {
        while j + 1 < anchors.len() && anchors[j + 1] <= i {
            j += 1;
        }
        if anchors[j] == i || j + 1 == anchors.len() {
            out.push((j, j, 0.0));
        } else {
            let (lo, hi) = (anchors[j], anchors[j + 1]);
            out.push((j, j + 1, (i - lo) as f64 / (hi - lo) as f64));
        }
    }
    out
}

/// Sum over the clipped `(2r+1) x (2r+1)` window around every position of a
/// row-major plane. Separable: a horizontal pass then a vertical pass, each
/// summing only the elements inside the window.
fn box_sum(plane: &[f64], height: usize, width: usize, radius: usize) -> Vec<f64> {
    let mut rows = vec![0.0; height * width];
    for h in 0..height {
        let line = &plane[h * width..(h + 1) * width];
        for w in 0..width {
            let span = clipped(w, radius, width);
            rows[h * width + w] = line[span].iter().sum();
        }
    }
    let mut out = vec![0.0; height * width];
    for h in 0..height {
        for y in clipped(h, radius, height) {
            let src = &rows[y * width..(y + 1) * width];
            for (o, &v) in out[h * width..(h + 1) * width].iter_mut().zip(src) {
                *o += v;
            }
        }
    }
    out
}

/// Grid geometry shared by every (batch, group) plane.
struct Grid {
    height: usize,
    width: usize,
    radius: usize,
    row_anchors: Vec<usize>,
    col_anchors: Vec<usize>,
    row_interp: Vec<(usize, usize, f64)>,
    col_interp: Vec<(usize, usize, f64)>,
}

impl Grid {
    fn new(shape: Shape, cfg: &LfnConfig) -> Self {
        let stride = cfg.effective_stride();
        let row_anchors = anchors(shape.height, stride);
        let col_anchors = anchors(shape.width, stride);
        Grid {
            height: shape.height,
            width: shape.width,
            radius: cfg.radius(),
            row_interp: interpolation(shape.height, &row_anchors),
            col_interp: interpolation(shape.width, &col_anchors),
            row_anchors,
            col_anchors,
        }
    }

    fn n_anchors(&self) -> usize {
        self.row_anchors.len() * self.col_anchors.len()
    }

    fn window(&self, h: usize, w: usize) -> (RangeInclusive<usize>, RangeInclusive<usize>) {
        (clipped(h, self.radius, self.height), clipped(w, self.radius, self.width))
    }

    /// Bilinear interpolation of an anchor field to every position.
    fn interpolate(&self, anchor: &[f64]) -> Vec<f64> {
        let na = self.col_anchors.len();
        let mut out = Vec::with_capacity(self.height * self.width);
        for &(r0, r1, tr) in &self.row_interp {
            for &(c0, c1, tc) in &self.col_interp {
                let v = if tr == 0.0 && tc == 0.0 {
                    anchor[r0 * na + c0]
                } else {
                    let top = lerp(anchor[r0 * na + c0], anchor[r0 * na + c1], tc);
                    let bottom = lerp(anchor[r1 * na + c0], anchor[r1 * na + c1], tc);
                    lerp(top, bottom, tr)
                };
                out.push(v);
            }
        }
        out
    }

    /// Adjoint of [`Grid::interpolate`].
    fn interpolate_adjoint(&self, field: &[f64]) -> Vec<f64> {
        let na = self.col_anchors.len();
        let mut anchor = vec![0.0; self.n_anchors()];
        let mut i = 0;
        for &(r0, r1, tr) in &self.row_interp {
            for &(c0, c1, tc) in &self.col_interp {
                let g = field[i];
                i += 1;
                anchor[r0 * na + c0] += g * (1.0 - tr) * (1.0 - tc);
                if tc != 0.0 {
                    anchor[r0 * na + c1] += g * (1.0 - tr) * tc;
                }
                if tr != 0.0 {
                    anchor[r1 * na + c0] += g * tr * (1.0 - tc);
                    if tc != 0.0 {
                        anchor[r1 * na + c1] += g * tr * tc;
                    }
                }
            }
        }
        anchor
    }
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    if t == 0.0 {
        a
    } else {
        a + (b - a) * t
    }
}

/// Statistics of one (batch item, channel group) plane.
struct PlaneStats {
    /// Per-plane offset subtracted before accumulation; statistics are shift
    /// invariant, so this only improves conditioning.
    shift: f64,
    /// Window element count, mean and std at each anchor (shifted frame).
    count: Vec<f64>,
    mean: Vec<f64>,
    std: Vec<f64>,
    /// Interpolated std at every position.
    std_field: Vec<f64>,
}

struct Forward<T> {
    output: Tensor<T>,
    xhat: Vec<f64>,
    planes: Vec<PlaneStats>,
}

fn check_inputs(shape: Shape, gamma: Shape, beta: Shape, cfg: &LfnConfig) -> Result<()> {
    cfg.validate(shape.channels)?;
    for (name, s) in [("gamma", gamma), ("beta", beta)] {
        if s.len() != shape.channels {
            return Err(Error::Shape(format!(
                "LFN {name} has {} entries for {} channels",
                s.len(),
                shape.channels
            )));
        }
    }
    Ok(())
}

fn forward<T: Scalar>(x: &Tensor<T>, gamma: &[T], beta: &[T], cfg: &LfnConfig) -> Forward<T> {
    let s = x.shape();
    let grid = Grid::new(s, cfg);
    let (g, groups, plane) = (cfg.group, s.channels / cfg.group, s.height * s.width);
    let data = x.data();
    let mut out = vec![T::zero(); s.len()];
    let mut xhat = vec![0.0; s.len()];
    let mut planes = Vec::with_capacity(s.batch * groups);
    let mut s1 = vec![0.0; plane];
    let mut s2 = vec![0.0; plane];

    for b in 0..s.batch {
        for k in 0..groups {
            let at = |p: usize, j: usize| b * s.item_len() + p * s.channels + k * g + j;
            let mut total = 0.0;
            for p in 0..plane {
                for j in 0..g {
                    total += data[at(p, j)].as_f64();
                }
            }
            let shift = total / (plane * g) as f64;
            for p in 0..plane {
                let (mut a, mut q) = (0.0, 0.0);
                for j in 0..g {
                    let v = data[at(p, j)].as_f64() - shift;
                    a += v;
                    q += v * v;
                }
                s1[p] = a;
                s2[p] = q;
            }
            let sum1 = box_sum(&s1, s.height, s.width, grid.radius);
            let sum2 = box_sum(&s2, s.height, s.width, grid.radius);

            let mut count = Vec::with_capacity(grid.n_anchors());
            let mut mean = Vec::with_capacity(grid.n_anchors());
            let mut std = Vec::with_capacity(grid.n_anchors());
            for &ah in &grid.row_anchors {
                for &aw in &grid.col_anchors {
                    let (rows, cols) = grid.window(ah, aw);
                    let n = (rows.count() * cols.count() * g) as f64;
                    let p = ah * s.width + aw;
                    let m = sum1[p] / n;
                    let var = (sum2[p] / n - m * m).max(0.0);
                    count.push(n);
                    mean.push(m);
                    std.push(var.sqrt());
                }
            }
            let mean_field = grid.interpolate(&mean);
            let std_field = grid.interpolate(&std);

            for p in 0..plane {
                let inv = 1.0 / (std_field[p] + cfg.eps);
                for j in 0..g {
                    let i = at(p, j);
                    let c = k * g + j;
                    let xh = (data[i].as_f64() - shift - mean_field[p]) * inv;
                    xhat[i] = xh;
                    out[i] = T::of(gamma[c].as_f64() * xh + beta[c].as_f64());
                }
            }
            planes.push(PlaneStats {
                shift,
                count,
                mean,
                std,
                std_field,
            });
        }
    }
    Forward {
        output: Tensor::from_vec(s, out).expect("shape preserved"),
        xhat,
        planes,
    }
}

struct LfnGrads<T> {
    input: Tensor<T>,
    gamma: Tensor<T>,
    beta: Tensor<T>,
}

fn backward<T: Scalar>(
    x: &Tensor<T>,
    gamma: &[T],
    dy: &Tensor<T>,
    fwd_xhat: &[f64],
    planes: &[PlaneStats],
    cfg: &LfnConfig,
) -> LfnGrads<T> {
    let s = x.shape();
    let grid = Grid::new(s, cfg);
    let (g, groups, plane) = (cfg.group, s.channels / cfg.group, s.height * s.width);
    let data = x.data();
    let dyd = dy.data();
    let mut dx = vec![0.0f64; s.len()];
    let mut dgamma = vec![0.0f64; s.channels];
    let mut dbeta = vec![0.0f64; s.channels];
    let mut dmean_field = vec![0.0; plane];
    let mut dstd_field = vec![0.0; plane];
    let na_cols = grid.col_anchors.len();

    for b in 0..s.batch {
        for k in 0..groups {
            let stats = &planes[b * groups + k];
            let at = |p: usize, j: usize| b * s.item_len() + p * s.channels + k * g + j;
            for p in 0..plane {
                let inv = 1.0 / (stats.std_field[p] + cfg.eps);
                let (mut dm, mut ds) = (0.0, 0.0);
                for j in 0..g {
                    let i = at(p, j);
                    let c = k * g + j;
                    let gy = dyd[i].as_f64();
                    dbeta[c] += gy;
                    dgamma[c] += gy * fwd_xhat[i];
                    let dxh = gy * gamma[c].as_f64();
                    dx[i] = dxh * inv;
                    dm -= dxh * inv;
                    ds -= dxh * fwd_xhat[i] * inv;
                }
                dmean_field[p] = dm;
                dstd_field[p] = ds;
            }
            let dmean = grid.interpolate_adjoint(&dmean_field);
            let dstd = grid.interpolate_adjoint(&dstd_field);

            // Window-sum adjoints placed at their anchors.
            let mut a1 = vec![0.0; plane];
            let mut a2 = vec![0.0; plane];
            for (ai, &ah) in grid.row_anchors.iter().enumerate() {
                for (aj, &aw) in grid.col_anchors.iter().enumerate() {
                    let idx = ai * na_cols + aj;
                    let n = stats.count[idx];
                    let sd = stats.std[idx];
                    let dvar = if sd > 0.0 { dstd[idx] / (2.0 * sd) } else { 0.0 };
                    a1[ah * s.width + aw] = dmean[idx] / n - 2.0 * stats.mean[idx] * dvar / n;
                    a2[ah * s.width + aw] = dvar / n;
                }
            }
            // Element q lies in the window of anchor a iff a lies in the
            // window of q, so the scatter is again a clipped box sum.
            let b1 = box_sum(&a1, s.height, s.width, grid.radius);
            let b2 = box_sum(&a2, s.height, s.width, grid.radius);
            for p in 0..plane {
                for j in 0..g {
                    let i = at(p, j);
                    dx[i] += b1[p] + 2.0 * (data[i].as_f64() - stats.shift) * b2[p];
                }
            }
        }
    }
    let to_t = |v: Vec<f64>, shape: Shape| {
        Tensor::from_vec(shape, v.into_iter().map(T::of).collect()).expect("shape preserved")
    };
    LfnGrads {
        input: to_t(dx, s),
        gamma: to_t(dgamma, Shape::vector(s.channels)),
        beta: to_t(dbeta, Shape::vector(s.channels)),
    }
}

/// Differentiable LFN with per-channel `gamma` and `beta` vectors.
pub fn lfn<'t, T: Scalar>(
    input: Var<'t, T>,
    gamma: Var<'t, T>,
    beta: Var<'t, T>,
    cfg: &LfnConfig,
) -> Result<Var<'t, T>> {
    let tape = input.tape();
    check_inputs(input.shape(), gamma.shape(), beta.shape(), cfg)?;
    let fwd = forward(
        &tape.value(input),
        tape.value(gamma).data(),
        tape.value(beta).data(),
        cfg,
    );
    let cfg = *cfg;
    let Forward {
        output,
        xhat,
        planes,
    } = fwd;
    Ok(tape.record(
        output,
        &[input, gamma, beta],
        Box::new(move |ctx| {
            let g = backward(ctx.inputs[0], ctx.inputs[1].data(), ctx.grad, &xhat, &planes, &cfg);
            vec![
                ctx.needs[0].then_some(g.input),
                ctx.needs[1].then_some(g.gamma.reshape(ctx.inputs[1].shape()).expect("len")),
                ctx.needs[2].then_some(g.beta.reshape(ctx.inputs[2].shape()).expect("len")),
            ]
        }),
    ))
}

impl<'t, T: Scalar> Var<'t, T> {
    pub fn lfn(self, gamma: Var<'t, T>, beta: Var<'t, T>, cfg: &LfnConfig) -> Result<Var<'t, T>> {
        lfn(self, gamma, beta, cfg)
    }
}

fn forward_value<T: Scalar>(input: &Tensor<T>, cfg: &LfnConfig, params: &LfnParams<T>) -> Result<Tensor<T>> {
    check_inputs(input.shape(), params.gamma.shape(), params.beta.shape(), cfg)?;
    Ok(forward(input, params.gamma.data(), params.beta.data(), cfg).output)
}

/// LFN with statistics evaluated at every position.
pub fn lfn_forward_exact<T: Scalar>(input: &Tensor<T>, cfg: &LfnConfig, params: &LfnParams<T>) -> Result<Tensor<T>> {
    let cfg = LfnConfig {
        mode: LfnMode::Exact,
        ..*cfg
    };
    forward_value(input, &cfg, params)
}

/// LFN with statistics on the anchor grid, bilinearly interpolated.
pub fn lfn_forward_sampled<T: Scalar>(input: &Tensor<T>, cfg: &LfnConfig, params: &LfnParams<T>) -> Result<Tensor<T>> {
    let cfg = LfnConfig {
        mode: LfnMode::Sampled,
        ..*cfg
    };
    forward_value(input, &cfg, params)
}
