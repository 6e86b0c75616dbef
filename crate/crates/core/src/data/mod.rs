//! Samples, datasets, manifests and patch sampling.
//!
//! A manifest is a UTF-8 text file with one comma-separated record per line:
//!
//! ```text
//! path,domain,content_class,scene_class[,style]
//! ```
//!
//! `path` is relative to the manifest's directory, `domain` is `photo` or
//! `art`, `scene_class` is `-` for art and `style` (art only, default 0) is
//! `-` or absent for photos. Blank lines and lines starting with `#` are
//! ignored.

mod image_io;
pub mod synth;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use image_io::{read_png, to_byte, write_png};
pub use synth::{synth_art, synth_photo, PhotoLayout, SCENE_CLASSES, STYLES};

use crate::error::{Error, Result};
use crate::networks::CONTENT_CLASSES;
use crate::tensor::{Shape, Tensor};

pub const MANIFEST_NAME: &str = "manifest.csv";

/// Deterministic RNG for `(seed, stream, index)`; different streams and
/// indices give independent sequences for the same seed.
pub fn rng_for(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&stream.to_le_bytes());
    key[16..24].copy_from_slice(&index.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    Photo,
    Art,
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Domain::Photo => "photo",
            Domain::Art => "art",
        })
    }
}

/// One image with its labels. Photos carry a scene class, art a style.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    /// `[1, S, S, 3]` in `[0, 1]`.
    pub image: Tensor<f32>,
    pub domain: Domain,
    /// 1 for the "person" analog.
    pub content: usize,
    pub scene: Option<usize>,
    pub style: Option<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct Dataset {
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn photos(&self) -> Vec<&Sample> {
        self.samples.iter().filter(|s| s.domain == Domain::Photo).collect()
    }

    pub fn art(&self, style: usize) -> Vec<&Sample> {
        self.samples
            .iter()
            .filter(|s| s.domain == Domain::Art && s.style == Some(style))
            .collect()
    }
}

/// Writes `photos` synthetic photos and `art` artworks per style under
/// `out/photo/` and `out/art/style<k>/`, plus `out/manifest.csv`.
pub fn generate_dataset(out: &Path, photos: usize, art: usize, styles: usize, size: usize, seed: u64) -> Result<PathBuf> {
    if styles > STYLES {
        return Err(Error::Config(format!("at most {STYLES} styles are available, got {styles}")));
    }
    let mkdir = |p: &Path| fs::create_dir_all(p).map_err(|e| Error::io(format!("creating {}", p.display()), e));
    let mut lines = Vec::new();
    mkdir(&out.join("photo"))?;
    for i in 0..photos {
        let s = synth_photo(rng_for(seed, 10, i as u64).gen(), size)?;
        let rel = format!("photo/{i:05}.png");
        write_png(&out.join(&rel), &s.image)?;
        lines.push(format!("{rel},photo,{},{},-", s.content, s.scene.expect("photo")));
    }
    for style in 0..styles {
        let dir = format!("art/style{style}");
        mkdir(&out.join(&dir))?;
        for i in 0..art {
            let s = synth_art(rng_for(seed, 20 + style as u64, i as u64).gen(), size, style)?;
            let rel = format!("{dir}/{i:05}.png");
            write_png(&out.join(&rel), &s.image)?;
            lines.push(format!("{rel},art,{},-,{style}", s.content));
        }
    }
    let path = out.join(MANIFEST_NAME);
    let mut f = fs::File::create(&path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    for l in &lines {
        writeln!(f, "{l}").map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    }
    Ok(path)
}

/// A parsed manifest line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub path: PathBuf,
    pub domain: Domain,
    pub content: usize,
    pub scene: Option<usize>,
    pub style: Option<usize>,
}

fn parse_record(line: &str) -> std::result::Result<Record, String> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if !(4..=5).contains(&fields.len()) {
        return Err(format!("expected 4 or 5 comma-separated fields, found {}", fields.len()));
    }
    let index = |name: &str, v: &str, limit: usize| -> std::result::Result<usize, String> {
        let n: usize = v.parse().map_err(|_| format!("{name} `{v}` is not a non-negative integer"))?;
        if n >= limit {
            return Err(format!("{name} {n} is out of range 0..{limit}"));
        }
        Ok(n)
    };
    if fields[0].is_empty() {
        return Err("empty path".into());
    }
    let domain = match fields[1] {
        "photo" => Domain::Photo,
        "art" => Domain::Art,
        other => return Err(format!("unknown domain `{other}` (expected photo or art)")),
    };
    let content = index("content_class", fields[2], CONTENT_CLASSES)?;
    let style_field = fields.get(4).copied().unwrap_or("-");
    let (scene, style) = match domain {
        Domain::Photo => {
            if style_field != "-" {
                return Err("photos cannot carry a style".into());
            }
            (Some(index("scene_class", fields[3], SCENE_CLASSES)?), None)
        }
        Domain::Art => {
            if fields[3] != "-" {
                return Err("artworks carry no scene class; use `-`".into());
            }
            let style = if style_field == "-" { 0 } else { index("style", style_field, STYLES)? };
            (None, Some(style))
        }
    };
    Ok(Record {
        path: PathBuf::from(fields[0]),
        domain,
        content,
        scene,
        style,
    })
}

/// Parses a manifest without reading any image.
pub fn read_manifest(path: &Path) -> Result<Vec<Record>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let ingest = |reason: String| Error::Ingest {
            path: path.to_path_buf(),
            line: i + 1,
            reason,
        };
        let mut r = parse_record(line).map_err(ingest)?;
        r.path = base.join(&r.path);
        if !r.path.is_file() {
            return Err(ingest(format!("image {} does not exist", r.path.display())));
        }
        records.push(r);
    }
    Ok(records)
}

/// Reads a manifest and decodes every image.
pub fn load_manifest(path: &Path) -> Result<Dataset> {
    let samples = read_manifest(path)?
        .into_iter()
        .map(|r| {
            Ok(Sample {
                image: read_png(&r.path)?,
                domain: r.domain,
                content: r.content,
                scene: r.scene,
                style: r.style,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Dataset { samples })
}

/// Loads `dir/manifest.csv`.
pub fn load_dir(dir: &Path) -> Result<Dataset> {
    load_manifest(&dir.join(MANIFEST_NAME))
}

/// Uniformly placed `size x size` crop of item 0 of `image`.
pub fn extract_patch<R: Rng + ?Sized>(image: &Tensor<f32>, size: usize, rng: &mut R) -> Result<Tensor<f32>> {
    let s = image.shape();
    if size == 0 || size > s.height || size > s.width {
        return Err(Error::Config(format!(
            "patch size {size} does not fit a {}x{} image",
            s.height, s.width
        )));
    }
    let y0 = rng.gen_range(0..=s.height - size);
    let x0 = rng.gen_range(0..=s.width - size);
    let mut data = Vec::with_capacity(size * size * s.channels);
    for y in y0..y0 + size {
        let start = s.offset(0, y, x0, 0);
        data.extend_from_slice(&image.data()[start..start + size * s.channels]);
    }
    Tensor::from_vec(Shape::new(1, size, size, s.channels)?, data)
}

/// Patches and labels of a sampled mini-batch.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    /// `[n, P, P, 3]`.
    pub images: Tensor<f32>,
    pub content: Vec<usize>,
    /// Empty for art batches.
    pub scene: Vec<usize>,
}

/// Draws `n` samples with replacement and crops one patch from each.
pub fn sample_batch<R: Rng + ?Sized>(pool: &[&Sample], n: usize, patch: usize, rng: &mut R) -> Result<Batch> {
    if pool.is_empty() {
        return Err(Error::Degenerate("cannot sample a batch from an empty set".into()));
    }
    let mut images = Vec::with_capacity(n);
    let mut content = Vec::with_capacity(n);
    let mut scene = Vec::with_capacity(n);
    for _ in 0..n {
        let s = pool[rng.gen_range(0..pool.len())];
        images.push(extract_patch(&s.image, patch, rng)?);
        content.push(s.content);
        if let Some(sc) = s.scene {
            scene.push(sc);
        }
    }
    Ok(Batch {
        images: Tensor::stack(&images)?,
        content,
        scene,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_parsing() {
        let r = parse_record("a.png,photo,1,3").unwrap();
        assert_eq!((r.domain, r.content, r.scene, r.style), (Domain::Photo, 1, Some(3), None));
        let r = parse_record("b.png, art, 0, -, 1").unwrap();
        assert_eq!((r.domain, r.scene, r.style), (Domain::Art, None, Some(1)));
        assert_eq!(parse_record("b.png,art,0,-").unwrap().style, Some(0));
        for bad in ["a.png,photo,2,0", "a.png,photo,0,9", "a.png,video,0,0", "a.png,art,0,2", "a.png,photo", ",photo,0,0", "a.png,photo,0,1,1"] {
            assert!(parse_record(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn rng_streams_differ() {
        let a: u64 = rng_for(1, 0, 0).gen();
        let b: u64 = rng_for(1, 1, 0).gen();
        let c: u64 = rng_for(1, 0, 1).gen();
        assert!(a != b && a != c && b != c);
        assert_eq!(a, rng_for(1, 0, 0).gen::<u64>());
    }
}
