//! Evaluation: RSSCD, toy artist and content classifiers, deception rate
//! and content retention.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::data::{rng_for, Dataset, Domain, STYLES};
use crate::error::{Error, Result};
use crate::networks::{Networks, LRELU_SLOPE};
use crate::ops::Padding;
use crate::optim::{Adam, AdamConfig};
use crate::params::{he_normal, ParameterStore};
use crate::tape::{Bound, Tape, Var};
use crate::tensor::{Shape, Tensor};

const SPLIT_STREAM: u64 = 200;
const CLASSIFIER_INIT_STREAM: u64 = 201;
const CLASSIFIER_BATCH_STREAM: u64 = 202;
const INFERENCE_BATCH: usize = 16;

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Relative style-specific content distance.
///
/// Mean over `zp` of the distance to the nearest `yp`, divided by the mean
/// distance over all `(yp, yn)` pairs.
pub fn rsscd(zp: &[Vec<f64>], yp: &[Vec<f64>], yn: &[Vec<f64>]) -> Result<f64> {
    if zp.is_empty() || yp.is_empty() || yn.is_empty() {
        return Err(Error::Degenerate(format!(
            "RSSCD needs nonempty sets, got |Z_p|={} |Y_p|={} |Y_n|={}",
            zp.len(),
            yp.len(),
            yn.len()
        )));
    }
    let dim = zp[0].len();
    if zp.iter().chain(yp).chain(yn).any(|v| v.len() != dim) {
        return Err(Error::Degenerate("RSSCD feature vectors differ in dimension".into()));
    }
    let numerator = zp
        .iter()
        .map(|z| yp.iter().map(|y| euclidean(z, y)).fold(f64::INFINITY, f64::min))
        .sum::<f64>()
        / zp.len() as f64;
    let denominator = yp.iter().flat_map(|p| yn.iter().map(move |n| euclidean(p, n))).sum::<f64>()
        / (yp.len() * yn.len()) as f64;
    if denominator <= 0.0 {
        return Err(Error::Degenerate(
            "all artwork features coincide across classes; RSSCD is undefined".into(),
        ));
    }
    Ok(numerator / denominator)
}

pub fn centroid(features: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = features
        .first()
        .ok_or_else(|| Error::Degenerate("centroid of an empty set".into()))?;
    let mut c = vec![0.0; first.len()];
    for f in features {
        for (ci, v) in c.iter_mut().zip(f) {
            *ci += v;
        }
    }
    Ok(c.into_iter().map(|v| v / features.len() as f64).collect())
}

/// Mean Euclidean distance from each feature vector to `target`.
pub fn mean_distance(features: &[Vec<f64>], target: &[f64]) -> Result<f64> {
    if features.is_empty() {
        return Err(Error::Degenerate("mean distance of an empty set".into()));
    }
    Ok(features.iter().map(|f| euclidean(f, target)).sum::<f64>() / features.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BinaryMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Metrics for class 1 as the positive class. Precision, recall and F1 are
/// 0 when their denominators are.
pub fn binary_metrics(predicted: &[usize], truth: &[usize]) -> Result<BinaryMetrics> {
    if predicted.len() != truth.len() || truth.is_empty() {
        return Err(Error::Degenerate(format!(
            "binary metrics need equal nonempty label lists, got {} and {}",
            predicted.len(),
            truth.len()
        )));
    }
    let (mut tp, mut fp, mut fneg, mut correct) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &t) in predicted.iter().zip(truth) {
        correct += (p == t) as usize;
        match (p == 1, t == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            _ => {}
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fneg);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(BinaryMetrics {
        accuracy: ratio(correct, truth.len()),
        precision,
        recall,
        f1,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifierConfig {
    pub iters: usize,
    pub batch: usize,
    pub lr: f64,
    /// Fraction of samples held out for the accuracy estimate.
    pub held_out: f64,
    pub seed: u64,
    /// Width of the first convolution; later layers double it.
    pub width: usize,
    /// Held-out accuracy below which evaluation refuses to proceed.
    pub floor: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            iters: 300,
            batch: 16,
            lr: 2e-3,
            held_out: 0.2,
            seed: 0,
            width: 8,
            floor: 0.95,
        }
    }
}

/// Three stride-2 convolutions, global average pooling, a hidden layer
/// (the feature layer) and a linear head.
pub struct ToyClassifier {
    params: ParameterStore<f32>,
    pub classes: usize,
    pub held_out_accuracy: f64,
}

impl ToyClassifier {
    fn init(classes: usize, width: usize, seed: u64) -> Result<ParameterStore<f32>> {
        let mut rng = rng_for(seed, CLASSIFIER_INIT_STREAM, 0);
        let mut p = ParameterStore::new();
        let widths = [3, width, 2 * width, 4 * width];
        for i in 0..3 {
            let (cin, cout) = (widths[i], widths[i + 1]);
            p.insert(format!("conv{i}/kernel"), he_normal(Shape::new(3, 3, cin, cout)?, 9 * cin, &mut rng))?;
            p.insert(format!("conv{i}/bias"), Tensor::zeros(Shape::vector(cout)))?;
        }
        let f = widths[3];
        p.insert("hidden/weights", he_normal(Shape::new(1, 1, f, f)?, f, &mut rng))?;
        p.insert("hidden/bias", Tensor::zeros(Shape::vector(f)))?;
        p.insert("head/weights", he_normal(Shape::new(1, 1, f, classes)?, f, &mut rng))?;
        p.insert("head/bias", Tensor::zeros(Shape::vector(classes)))?;
        Ok(p)
    }

    fn forward<'t>(p: &Bound<'t, f32>, x: Var<'t, f32>) -> Result<(Var<'t, f32>, Var<'t, f32>)> {
        let mut h = x;
        for i in 0..3 {
            h = h
                .conv2d(p.get(&format!("conv{i}/kernel"))?, p.get(&format!("conv{i}/bias"))?, 2, Padding::Reflect)?
                .lrelu(LRELU_SLOPE);
        }
        let features = h
            .global_avg_pool()
            .fully_connected(p.get("hidden/weights")?, p.get("hidden/bias")?)?
            .relu();
        let logits = features.fully_connected(p.get("head/weights")?, p.get("head/bias")?)?;
        Ok((features, logits))
    }

    /// Trains on `images` (all the same size) without checking a floor.
    pub fn train(images: &[Tensor<f32>], labels: &[usize], classes: usize, cfg: &ClassifierConfig) -> Result<Self> {
        if images.len() != labels.len() || labels.iter().any(|&l| l >= classes) {
            return Err(Error::Contract("classifier labels do not match the images".into()));
        }
        let mut order: Vec<usize> = (0..images.len()).collect();
        order.shuffle(&mut rng_for(cfg.seed, SPLIT_STREAM, 0));
        let n_test = ((images.len() as f64 * cfg.held_out).round() as usize).max(1);
        if images.len() <= n_test {
            return Err(Error::Degenerate(format!("{} samples are too few to train a classifier", images.len())));
        }
        let (test, train) = order.split_at(n_test);
        let mut params = Self::init(classes, cfg.width, cfg.seed)?;
        let mut opt = Adam::new(AdamConfig {
            lr: cfg.lr,
            ..AdamConfig::default()
        });
        for it in 0..cfg.iters {
            let mut rng = rng_for(cfg.seed, CLASSIFIER_BATCH_STREAM, it as u64);
            let idx: Vec<usize> = (0..cfg.batch).map(|_| train[rng.gen_range(0..train.len())]).collect();
            let x = Tensor::stack(&idx.iter().map(|&i| images[i].clone()).collect::<Vec<_>>())?;
            let y: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
            let tape = Tape::new();
            let p = tape.bind(&params, |_| true);
            let (_, logits) = Self::forward(&p, tape.constant(x))?;
            let loss = logits.softmax_cross_entropy(&y)?;
            if !loss.item().is_finite() {
                return Err(Error::NonFiniteLoss {
                    name: "classifier".into(),
                    iteration: it as u64 + 1,
                });
            }
            let grads = p.trainable_gradients(&tape.backward(loss)?);
            drop(p);
            opt.step(&mut params, &grads)?;
        }
        let mut clf = ToyClassifier {
            params,
            classes,
            held_out_accuracy: 0.0,
        };
        let test_images: Vec<Tensor<f32>> = test.iter().map(|&i| images[i].clone()).collect();
        let predicted = clf.predict(&test_images)?;
        let correct = predicted.iter().zip(test).filter(|(p, &i)| **p == labels[i]).count();
        clf.held_out_accuracy = correct as f64 / test.len() as f64;
        Ok(clf)
    }

    pub fn require_floor(self, floor: f64) -> Result<Self> {
        if self.held_out_accuracy < floor {
            return Err(Error::ClassifierFloor {
                accuracy: self.held_out_accuracy,
                floor,
            });
        }
        Ok(self)
    }

    /// Feature-layer activations and logits, one row per image.
    pub fn outputs(&self, images: &[Tensor<f32>]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let (mut feats, mut logits) = (Vec::new(), Vec::new());
        for chunk in images.chunks(INFERENCE_BATCH) {
            let tape = Tape::new();
            let p = tape.bind(&self.params, |_| false);
            let (f, l) = Self::forward(&p, tape.constant(Tensor::stack(chunk)?))?;
            let (f, l) = (f.value(), l.value());
            feats.extend(f.to_f64_vec().chunks(f.shape().item_len()).map(<[f64]>::to_vec));
            logits.extend(l.to_f64_vec().chunks(l.shape().item_len()).map(<[f64]>::to_vec));
        }
        Ok((feats, logits))
    }

    pub fn features(&self, images: &[Tensor<f32>]) -> Result<Vec<Vec<f64>>> {
        Ok(self.outputs(images)?.0)
    }

    /// Argmax class per image; ties go to the lower index.
    pub fn predict(&self, images: &[Tensor<f32>]) -> Result<Vec<usize>> {
        Ok(self
            .outputs(images)?
            .1
            .iter()
            .map(|l| {
                l.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
                    .0
            })
            .collect())
    }
}

/// Label of an artist-classifier class: style `k` is `k`, photos are
/// [`PHOTO_CLASS`].
pub const PHOTO_CLASS: usize = STYLES;

/// Crops every image centrally to the smallest side present, rounded down to
/// a multiple of 16.
pub fn common_crop(images: &[&Tensor<f32>]) -> Result<Vec<Tensor<f32>>> {
    let side = images
        .iter()
        .map(|t| t.shape().height.min(t.shape().width))
        .min()
        .ok_or_else(|| Error::Degenerate("no images".into()))?;
    let side = side / 16 * 16;
    if side == 0 {
        return Err(Error::Degenerate("images smaller than 16 pixels".into()));
    }
    images.iter().map(|t| center_crop(t, side, side)).collect()
}

/// Central `h x w` crop of item 0.
pub fn center_crop(image: &Tensor<f32>, h: usize, w: usize) -> Result<Tensor<f32>> {
    let s = image.shape();
    if h > s.height || w > s.width {
        return Err(Error::Shape(format!("cannot crop {s} to {h}x{w}")));
    }
    let (y0, x0) = ((s.height - h) / 2, (s.width - w) / 2);
    let mut data = Vec::with_capacity(h * w * s.channels);
    for y in y0..y0 + h {
        let start = s.offset(0, y, x0, 0);
        data.extend_from_slice(&image.data()[start..start + w * s.channels]);
    }
    Tensor::from_vec(Shape::new(1, h, w, s.channels)?, data)
}

/// Classifier over {style 0, .., style K-1, photo}; fails below the floor.
pub fn train_toy_artist_classifier(data: &Dataset, cfg: &ClassifierConfig) -> Result<ToyClassifier> {
    let mut per_class = [0usize; STYLES + 1];
    let mut labels = Vec::new();
    for s in &data.samples {
        let l = match s.domain {
            Domain::Photo => PHOTO_CLASS,
            Domain::Art => s.style.unwrap_or(0),
        };
        per_class[l] += 1;
        labels.push(l);
    }
    if per_class.iter().filter(|&&n| n >= 100).count() < 2 {
        return Err(Error::Degenerate(format!(
            "the artist classifier needs two classes with >= 100 samples, found {per_class:?}"
        )));
    }
    let images = common_crop(&data.samples.iter().map(|s| &s.image).collect::<Vec<_>>())?;
    ToyClassifier::train(&images, &labels, STYLES + 1, cfg)?.require_floor(cfg.floor)
}

/// Binary content classifier on photos; fails below the floor.
pub fn train_content_classifier(data: &Dataset, cfg: &ClassifierConfig) -> Result<ToyClassifier> {
    let photos = data.photos();
    let labels: Vec<usize> = photos.iter().map(|s| s.content).collect();
    if labels.iter().filter(|&&c| c == 1).count() < 10 || labels.iter().filter(|&&c| c == 0).count() < 10 {
        return Err(Error::Degenerate("the content classifier needs >= 10 photos of each class".into()));
    }
    let images = common_crop(&photos.iter().map(|s| &s.image).collect::<Vec<_>>())?;
    ToyClassifier::train(&images, &labels, 2, cfg)?.require_floor(cfg.floor)
}

/// Fraction of `images` classified as `target_style`.
pub fn deception_rate(clf: &ToyClassifier, images: &[Tensor<f32>], target_style: usize) -> Result<f64> {
    if images.is_empty() {
        return Err(Error::Degenerate("deception rate of an empty image set".into()));
    }
    let hits = clf.predict(images)?.iter().filter(|&&c| c == target_style).count();
    Ok(hits as f64 / images.len() as f64)
}

/// Binary metrics of the content classifier on stylizations against the
/// source photos' labels.
pub fn content_retention(clf: &ToyClassifier, stylized: &[Tensor<f32>], labels: &[usize]) -> Result<BinaryMetrics> {
    binary_metrics(&clf.predict(stylized)?, labels)
}

/// `D(T(E(x)))` (or `D(E(x))`) for each image.
pub fn stylize_all(
    nets: &Networks,
    params: &ParameterStore<f32>,
    images: &[Tensor<f32>],
    use_transform: bool,
) -> Result<Vec<Tensor<f32>>> {
    let mut out = Vec::with_capacity(images.len());
    for chunk in images.chunks(INFERENCE_BATCH) {
        let tape = Tape::new();
        let p = tape.bind(params, |_| false);
        let y = nets.stylize(&p, tape.constant(Tensor::stack(chunk)?), use_transform)?.value();
        out.extend((0..y.shape().batch).map(|b| y.item_at(b)));
    }
    Ok(out)
}

/// Spatially averaged encoder codes `E(x)`.
pub fn encoder_features(nets: &Networks, params: &ParameterStore<f32>, images: &[Tensor<f32>]) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(images.len());
    for chunk in images.chunks(INFERENCE_BATCH) {
        let tape = Tape::new();
        let p = tape.bind(params, |_| false);
        let code = nets.encoder.forward(&p, tape.constant(Tensor::stack(chunk)?))?.global_avg_pool().value();
        out.extend(code.to_f64_vec().chunks(code.shape().item_len()).map(<[f64]>::to_vec));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Rsscd,
    Deception,
    Retention,
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rsscd" => Ok(Metric::Rsscd),
            "deception" => Ok(Metric::Deception),
            "retention" => Ok(Metric::Retention),
            _ => Err(Error::Config(format!("unknown metric `{s}` (expected rsscd, deception or retention)"))),
        }
    }
}

/// A trained generator and the evaluation set it is measured on.
pub struct Subject<'a> {
    pub nets: &'a Networks,
    pub params: &'a ParameterStore<f32>,
    pub target_style: usize,
    pub data: &'a Dataset,
}

/// Images of one evaluation set, cropped to a common size, with the
/// stylized photos.
struct Prepared {
    photos: Vec<Tensor<f32>>,
    photo_content: Vec<usize>,
    stylized: Vec<Tensor<f32>>,
    stylized_no_t: Vec<Tensor<f32>>,
    target_art: Vec<Tensor<f32>>,
    target_content: Vec<usize>,
}

impl Prepared {
    fn new(s: &Subject<'_>) -> Result<Self> {
        let photos = s.data.photos();
        let art = s.data.art(s.target_style);
        if photos.is_empty() || art.is_empty() {
            return Err(Error::Degenerate(format!(
                "evaluation needs photos and style-{} artworks, found {} and {}",
                s.target_style,
                photos.len(),
                art.len()
            )));
        }
        let mut all: Vec<&Tensor<f32>> = photos.iter().map(|p| &p.image).collect();
        all.extend(art.iter().map(|a| &a.image));
        let mut cropped = common_crop(&all)?;
        let target_art = cropped.split_off(photos.len());
        let photos_c = cropped;
        Ok(Prepared {
            stylized: stylize_all(s.nets, s.params, &photos_c, true)?,
            stylized_no_t: stylize_all(s.nets, s.params, &photos_c, false)?,
            photos: photos_c,
            photo_content: photos.iter().map(|p| p.content).collect(),
            target_art,
            target_content: art.iter().map(|a| a.content).collect(),
        })
    }

    fn positive(images: &[Tensor<f32>], labels: &[usize]) -> Vec<Tensor<f32>> {
        images.iter().zip(labels).filter(|(_, &l)| l == 1).map(|(t, _)| t.clone()).collect()
    }
}

/// Computes one metric family on `subject`.
///
/// The toy classifiers are trained on the subject's dataset and must pass
/// `cfg.floor`. Every stylized quantity is reported with `T` and, under a
/// `_no_t` suffix, with `T` bypassed.
pub fn evaluate(metric: Metric, subject: &Subject<'_>, cfg: &ClassifierConfig) -> Result<Report> {
    let mut r = Report::default();
    let s = Prepared::new(subject)?;
    match metric {
        Metric::Deception => {
            let clf = train_toy_artist_classifier(subject.data, cfg)?;
            r.push("artist_classifier_accuracy", clf.held_out_accuracy);
            let target = subject.target_style;
            let centre = centroid(&clf.features(&s.target_art)?)?;
            for (name, images) in [
                ("photos", &s.photos),
                ("target_art", &s.target_art),
                ("stylized", &s.stylized),
                ("stylized_no_t", &s.stylized_no_t),
            ] {
                r.push(format!("deception_{name}"), deception_rate(&clf, images, target)?);
                r.push(format!("centroid_distance_{name}"), mean_distance(&clf.features(images)?, &centre)?);
            }
            let base = r.get("centroid_distance_photos").expect("pushed above");
            for name in ["stylized", "stylized_no_t"] {
                let d = r.get(&format!("centroid_distance_{name}")).expect("pushed above");
                r.push(format!("centroid_ratio_{name}"), d / base);
            }
        }
        Metric::Rsscd => {
            let clf = train_toy_artist_classifier(subject.data, cfg)?;
            r.push("artist_classifier_accuracy", clf.held_out_accuracy);
            let yp = Prepared::positive(&s.target_art, &s.target_content);
            let yn: Vec<Tensor<f32>> = s
                .target_art
                .iter()
                .zip(&s.target_content)
                .filter(|(_, &l)| l != 1)
                .map(|(t, _)| t.clone())
                .collect();
            let zp = Prepared::positive(&s.stylized, &s.photo_content);
            let zp_no_t = Prepared::positive(&s.stylized_no_t, &s.photo_content);
            for (n, v) in [("z_p", zp.len()), ("y_p", yp.len()), ("y_n", yn.len())] {
                r.push(format!("count_{n}"), v as f64);
            }
            let toy = |v: &[Tensor<f32>]| clf.features(v);
            let enc = |v: &[Tensor<f32>]| encoder_features(subject.nets, subject.params, v);
            r.push("rsscd_toy", rsscd(&toy(&zp)?, &toy(&yp)?, &toy(&yn)?)?);
            r.push("rsscd_toy_no_t", rsscd(&toy(&zp_no_t)?, &toy(&yp)?, &toy(&yn)?)?);
            r.push("rsscd_encoder", rsscd(&enc(&zp)?, &enc(&yp)?, &enc(&yn)?)?);
            r.push("rsscd_encoder_no_t", rsscd(&enc(&zp_no_t)?, &enc(&yp)?, &enc(&yn)?)?);
        }
        Metric::Retention => {
            let clf = train_content_classifier(subject.data, cfg)?;
            r.push("content_classifier_accuracy", clf.held_out_accuracy);
            for (name, images) in [("photos", &s.photos), ("stylized", &s.stylized), ("stylized_no_t", &s.stylized_no_t)] {
                let m = content_retention(&clf, images, &s.photo_content)?;
                for (k, v) in [("accuracy", m.accuracy), ("precision", m.precision), ("recall", m.recall), ("f1", m.f1)] {
                    r.push(format!("retention_{name}_{k}"), v);
                }
            }
        }
    }
    Ok(r)
}

/// Ordered `metric=value` lines.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub entries: Vec<(String, f64)>,
}

impl Report {
    pub fn push(&mut self, name: impl Into<String>, value: f64) {
        self.entries.push((name.into(), value));
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (n, v) in &self.entries {
            let _ = writeln!(s, "{n}={v}");
        }
        s
    }

    /// Same entries as `key = value` lines under a comment header, readable
    /// by the config parser's syntax.
    pub fn to_key_value(&self) -> String {
        let mut s = String::from("# lfnet evaluation report\n");
        for (n, v) in &self.entries {
            let _ = writeln!(s, "{n} = {v}");
        }
        s
    }

    /// Writes `path` and the key-value copy `path.kv`; returns the latter.
    pub fn write(&self, path: &Path) -> Result<PathBuf> {
        let kv = PathBuf::from(format!("{}.kv", path.display()));
        fs::write(path, self.to_text()).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        fs::write(&kv, self.to_key_value()).map_err(|e| Error::io(format!("writing {}", kv.display()), e))?;
        Ok(kv)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut r = Report::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("report line {}: expected metric=value", i + 1)))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("report line {}: `{}` is not a number", i + 1, v.trim())))?;
            r.push(k.trim(), v);
        }
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rsscd_hand_example() {
        let v = rsscd(&[vec![0.0, 0.0]], &[vec![3.0, 4.0]], &[vec![3.0, 5.0]]).unwrap();
        assert!((v - 5.0).abs() < 1e-12);
    }

    #[test]
    fn rsscd_errors() {
        assert!(rsscd(&[], &[vec![1.0]], &[vec![2.0]]).is_err());
        assert!(rsscd(&[vec![1.0]], &[vec![2.0]], &[vec![2.0]]).is_err());
        assert!(rsscd(&[vec![1.0]], &[vec![2.0, 1.0]], &[vec![2.0]]).is_err());
    }

    #[test]
    fn metrics_without_positive_predictions() {
        let m = binary_metrics(&[0, 0, 0, 0], &[0, 1, 0, 1]).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (0.5, 0.0, 0.0, 0.0));
    }

    #[test]
    fn report_round_trip() {
        let mut r = Report::default();
        r.push("rsscd_toy", 0.25);
        r.push("f1", 1.0 / 3.0);
        assert_eq!(Report::parse(&r.to_text()).unwrap(), r);
        assert_eq!(Report::parse(&r.to_key_value()).unwrap(), r);
    }
}
