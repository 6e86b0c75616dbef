//! Procedural photos and artworks.
//!
//! Photos: a linear luminance gradient whose direction (0: left to right,
//! 1: top to bottom, 2: right to left, 3: bottom to top) is the scene class,
//! plus, for content class 1, a filled disc.
//!
//! Art style 0: oriented stripes in a warm palette, content class 1 drawn as
//! a triangle. Art style 1: blotchy low-frequency texture in a cool palette,
//! content class 1 drawn as a square.

use std::f64::consts::PI;

use rand::Rng;

use super::{rng_for, Domain, Sample};
use crate::error::{Error, Result};
use crate::tensor::{Shape, Tensor};

pub const SCENE_CLASSES: usize = 4;
pub const STYLES: usize = 2;
/// Smallest image side the generators accept.
pub const MIN_SIZE: usize = 16;

const PHOTO_STREAM: u64 = 1;
const ART_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;
const NOISE: f64 = 0.02;

/// Style 0 hues lie in `[0, 40)`, style 1 hues in `[190, 240)`.
pub const STYLE_HUES: [(f64, f64); STYLES] = [(0.0, 40.0), (190.0, 240.0)];

/// HSV (hue in degrees) to RGB in `[0, 1]`.
pub fn hsv(hue: f64, sat: f64, val: f64) -> [f64; 3] {
    let h = hue.rem_euclid(360.0) / 60.0;
    let c = val * sat;
    let x = c * (1.0 - (h % 2.0 - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = val - c;
    [r + m, g + m, b + m]
}

/// Hue in degrees and saturation of an RGB triple.
pub fn hue_sat(rgb: [f64; 3]) -> (f64, f64) {
    let [r, g, b] = rgb;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let d = max - min;
    if d <= 0.0 {
        return (0.0, 0.0);
    }
    let h = if max == r {
        60.0 * ((g - b) / d).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / d + 2.0)
    } else {
        60.0 * ((r - g) / d + 4.0)
    };
    (h, d / max)
}

fn check_size(size: usize) -> Result<()> {
    if size < MIN_SIZE {
        return Err(Error::Config(format!("synthetic images need size >= {MIN_SIZE}, got {size}")));
    }
    Ok(())
}

struct Canvas {
    size: usize,
    data: Vec<f64>,
}

impl Canvas {
    fn new(size: usize) -> Self {
        Canvas {
            size,
            data: vec![0.0; size * size * 3],
        }
    }

    fn put(&mut self, y: usize, x: usize, rgb: [f64; 3]) {
        let i = (y * self.size + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    fn fill(&mut self, f: impl Fn(f64, f64) -> [f64; 3]) {
        for y in 0..self.size {
            for x in 0..self.size {
                self.put(y, x, f(y as f64, x as f64));
            }
        }
    }

    fn fill_where(&mut self, inside: impl Fn(f64, f64) -> bool, rgb: [f64; 3]) {
        for y in 0..self.size {
            for x in 0..self.size {
                if inside(y as f64, x as f64) {
                    self.put(y, x, rgb);
                }
            }
        }
    }

    /// Adds uniform noise of amplitude [`NOISE`] and clamps to `[0, 1]`.
    fn finish(mut self, noise_seed: u64) -> Tensor<f32> {
        let mut rng = rng_for(noise_seed, NOISE_STREAM, 0);
        for v in &mut self.data {
            *v = (*v + rng.gen_range(-NOISE..NOISE)).clamp(0.0, 1.0);
        }
        let s = Shape::new(1, self.size, self.size, 3).expect("size >= 16");
        Tensor::from_f64(s, &self.data).expect("canvas size")
    }
}

/// A filled disc, the photo-domain "person" analog.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Disc {
    pub cy: f64,
    pub cx: f64,
    pub radius: f64,
    pub color: [f64; 3],
}

impl Disc {
    pub fn contains(&self, y: f64, x: f64) -> bool {
        (y - self.cy).powi(2) + (x - self.cx).powi(2) <= self.radius * self.radius
    }
}

/// Random choices behind one synthetic photo.
#[derive(Clone, Debug, PartialEq)]
pub struct PhotoLayout {
    pub seed: u64,
    pub size: usize,
    pub scene: usize,
    pub hue: f64,
    pub saturation: f64,
    pub disc: Option<Disc>,
}

impl PhotoLayout {
    pub fn new(seed: u64, size: usize) -> Result<Self> {
        check_size(size)?;
        let mut rng = rng_for(seed, PHOTO_STREAM, 0);
        let scene = rng.gen_range(0..SCENE_CLASSES);
        let hue = rng.gen_range(0.0..360.0);
        let saturation = rng.gen_range(0.2..0.6);
        let disc = rng.gen_bool(0.5).then(|| {
            let s = size as f64;
            let radius = rng.gen_range(s / 8.0..=s / 4.0);
            let cy = rng.gen_range(radius..=s - 1.0 - radius);
            let cx = rng.gen_range(radius..=s - 1.0 - radius);
            let color = hsv(hue + 180.0, 0.85, rng.gen_range(0.55..1.0));
            Disc { cy, cx, radius, color }
        });
        Ok(PhotoLayout {
            seed,
            size,
            scene,
            hue,
            saturation,
            disc,
        })
    }

    /// Gradient position in `[0, 1]` along the scene direction.
    fn position(&self, y: f64, x: f64) -> f64 {
        let last = (self.size - 1) as f64;
        match self.scene {
            0 => x / last,
            1 => y / last,
            2 => 1.0 - x / last,
            _ => 1.0 - y / last,
        }
    }

    pub fn render(&self, draw_disc: bool) -> Tensor<f32> {
        let mut canvas = Canvas::new(self.size);
        canvas.fill(|y, x| hsv(self.hue, self.saturation, 0.3 + 0.6 * self.position(y, x)));
        if let (Some(d), true) = (self.disc, draw_disc) {
            canvas.fill_where(|y, x| d.contains(y, x), d.color);
        }
        canvas.finish(self.seed)
    }
}

pub fn synth_photo(seed: u64, size: usize) -> Result<Sample> {
    let layout = PhotoLayout::new(seed, size)?;
    Ok(Sample {
        image: layout.render(true),
        domain: Domain::Photo,
        content: layout.disc.is_some() as usize,
        scene: Some(layout.scene),
        style: None,
    })
}

fn in_triangle(y: f64, x: f64, cy: f64, cx: f64, r: f64) -> bool {
    // Apex up at (cy - r, cx), base from (cy + r, cx - r) to (cy + r, cx + r).
    if y < cy - r || y > cy + r {
        return false;
    }
    let half_width = r * (y - (cy - r)) / (2.0 * r);
    (x - cx).abs() <= half_width
}

pub fn synth_art(seed: u64, size: usize, style: usize) -> Result<Sample> {
    check_size(size)?;
    if style >= STYLES {
        return Err(Error::Config(format!("style id {style} is not in 0..{STYLES}")));
    }
    let mut rng = rng_for(seed, ART_STREAM, style as u64);
    let s = size as f64;
    let (lo, hi) = STYLE_HUES[style];
    let hue = rng.gen_range(lo..hi);
    let mut canvas = Canvas::new(size);
    match style {
        0 => {
            let light = hsv(hue, 0.7, 0.95);
            let dark = hsv(hue + 10.0, 0.9, 0.45);
            let theta = rng.gen_range(0.0..PI);
            let period = s / 8.0 * rng.gen_range(0.8..1.2);
            let phase = rng.gen_range(0.0..2.0 * PI);
            let (c, sn) = (theta.cos(), theta.sin());
            canvas.fill(|y, x| {
                let t = 0.5 + 0.5 * (3.0 * (2.0 * PI * (x * c + y * sn) / period + phase).sin()).tanh();
                std::array::from_fn(|i| dark[i] + t * (light[i] - dark[i]))
            });
        }
        _ => {
            let light = hsv(hue, 0.45, 0.9);
            let dark = hsv(hue + 10.0, 0.8, 0.4);
            let waves: Vec<(f64, f64, f64)> = (0..4)
                .map(|_| {
                    let angle = rng.gen_range(0.0..2.0 * PI);
                    let freq = 2.0 * PI / (s * rng.gen_range(0.35..0.9));
                    (freq * angle.cos(), freq * angle.sin(), rng.gen_range(0.0..2.0 * PI))
                })
                .collect();
            canvas.fill(|y, x| {
                let v: f64 = waves.iter().map(|&(fx, fy, p)| (fx * x + fy * y + p).sin()).sum::<f64>() / 4.0;
                let t = 0.5 + 0.5 * (2.0 * v).tanh();
                std::array::from_fn(|i| dark[i] + t * (light[i] - dark[i]))
            });
        }
    }
    let person = rng.gen_bool(0.5);
    if person {
        let r = rng.gen_range(s / 8.0..=s / 4.0);
        let cy = rng.gen_range(r..=s - 1.0 - r);
        let cx = rng.gen_range(r..=s - 1.0 - r);
        let ink = hsv(hue + 20.0, 0.9, 0.15);
        if style == 0 {
            canvas.fill_where(|y, x| in_triangle(y, x, cy, cx, r), ink);
        } else {
            canvas.fill_where(|y, x| (y - cy).abs() <= r * 0.8 && (x - cx).abs() <= r * 0.8, ink);
        }
    }
    Ok(Sample {
        image: canvas.finish(seed ^ ((style as u64 + 1) << 32)),
        domain: Domain::Art,
        content: person as usize,
        scene: None,
        style: Some(style),
    })
}
