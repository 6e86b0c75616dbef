//! Training objectives. Adversarial objectives return both the
//! discriminator-side and the generator-side term from one forward pass.

use crate::error::{Error, Result};
use crate::networks::{DiscC, DiscS, Encoder};
use crate::scalar::Scalar;
use crate::tape::{Bound, Var};

/// Weights of the terms in the two training steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub pixel: f64,
    pub fixpoint: f64,
    pub adv_style: f64,
    pub adv_cont: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            pixel: 1.0,
            fixpoint: 1.0,
            adv_style: 1.0,
            adv_cont: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.pixel, self.fixpoint, self.adv_style, self.adv_cont];
        if all.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Config(format!("loss weights must be finite and >= 0, got {self:?}")));
        }
        if self.pixel + self.fixpoint + self.adv_style == 0.0 {
            return Err(Error::Config("step one needs a positive pixel, fixpoint or style weight".into()));
        }
        if self.adv_cont + self.adv_style == 0.0 {
            return Err(Error::Config("step two needs a positive content or style weight".into()));
        }
        Ok(())
    }
}

/// Mean squared difference between a photo and its stylization.
pub fn pixel_loss<'t, T: Scalar>(x: Var<'t, T>, stylized: Var<'t, T>) -> Result<Var<'t, T>> {
    if x.shape() != stylized.shape() {
        return Err(Error::ShapeMismatch {
            op: "pixel_loss",
            expected: x.shape(),
            actual: stylized.shape(),
        });
    }
    x.mse(stylized)
}

/// `mean((E(stylized) - code)^2)` where `code = E(x)`.
///
/// `outer` supplies the encoder parameters for the re-encoding; binding them
/// as constants stops the gradient through the outer `E` while still
/// reaching the decoder through `stylized`.
pub fn fixpoint_loss<'t, T: Scalar>(
    encoder: &Encoder,
    outer: &Bound<'t, T>,
    stylized: Var<'t, T>,
    code: Var<'t, T>,
) -> Result<Var<'t, T>> {
    encoder.forward(outer, stylized)?.mse(code)
}

/// Discriminator and generator terms of one adversarial objective.
pub struct AdversarialTerms<'t, T: Scalar> {
    pub d_loss: Var<'t, T>,
    pub g_loss: Var<'t, T>,
    /// Fraction of correct real/fake decisions in the batch.
    pub accuracy: f64,
}

fn fraction(correct: usize, total: usize) -> f64 {
    correct as f64 / total as f64
}

/// Domain decisions are "real" when the logit is positive.
pub fn domain_accuracy(real_logits: &[f64], fake_logits: &[f64]) -> f64 {
    let correct = real_logits.iter().filter(|&&z| z > 0.0).count() + fake_logits.iter().filter(|&&z| z < 0.0).count();
    fraction(correct, real_logits.len() + fake_logits.len())
}

/// Style-adversarial objective on real art and stylized photos.
///
/// Domain part: binary cross-entropy on the `D_s` domain logit (art is
/// real). Conditioning part: scene cross-entropy on the stylized branch.
/// The generator term flips the domain targets and keeps the scene term.
pub fn adv_style_terms<'t, T: Scalar>(
    disc: &DiscS,
    p: &Bound<'t, T>,
    art: Var<'t, T>,
    stylized: Var<'t, T>,
    scenes: &[usize],
) -> Result<AdversarialTerms<'t, T>> {
    let batch = stylized.shape().batch;
    if scenes.len() != batch {
        return Err(Error::Contract(format!(
            "{} scene labels for {batch} stylized photos",
            scenes.len()
        )));
    }
    let real = disc.forward(p, art)?;
    let fake = disc.forward(p, stylized)?;
    let n_real = real.domain_logit.shape().batch;
    let scene = fake.scene_logits.softmax_cross_entropy(scenes)?;
    let d_domain = real
        .domain_logit
        .bce_with_logits(&vec![1.0; n_real])?
        .add(fake.domain_logit.bce_with_logits(&vec![0.0; batch])?)?;
    let g_domain = fake.domain_logit.bce_with_logits(&vec![1.0; batch])?;
    let accuracy = domain_accuracy(&real.domain_logit.value().to_f64_vec(), &fake.domain_logit.value().to_f64_vec());
    Ok(AdversarialTerms {
        d_loss: d_domain.add(scene)?,
        g_loss: g_domain.add(scene)?,
        accuracy,
    })
}

/// Content-adversarial objective on art codes `E(y)` and transformed photo
/// codes `T(E(x))`.
///
/// Domain part: two-way softmax cross-entropy on the `D_c` domain head
/// (index 1 = art). Conditioning part: content-class cross-entropy on both
/// branches. The generator term flips the domain targets.
pub fn adv_cont_terms<'t, T: Scalar>(
    disc: &DiscC,
    p: &Bound<'t, T>,
    art_code: Var<'t, T>,
    photo_code: Var<'t, T>,
    art_classes: &[usize],
    photo_classes: &[usize],
) -> Result<AdversarialTerms<'t, T>> {
    let (a, b) = (art_code.shape(), photo_code.shape());
    if a.with_batch(1) != b.with_batch(1) {
        return Err(Error::ShapeMismatch {
            op: "adv_cont_terms",
            expected: a.with_batch(b.batch),
            actual: b,
        });
    }
    let real = disc.forward(p, art_code)?;
    let fake = disc.forward(p, photo_code)?;
    let class = real
        .class_logits
        .softmax_cross_entropy(art_classes)?
        .add(fake.class_logits.softmax_cross_entropy(photo_classes)?)?;
    let d_domain = real
        .domain_logits
        .softmax_cross_entropy(&vec![1; a.batch])?
        .add(fake.domain_logits.softmax_cross_entropy(&vec![0; b.batch])?)?;
    let g_domain = fake.domain_logits.softmax_cross_entropy(&vec![1; b.batch])?;
    let margin = |v: Var<'t, T>| -> Vec<f64> {
        v.value().to_f64_vec().chunks_exact(2).map(|r| r[1] - r[0]).collect()
    };
    let accuracy = domain_accuracy(&margin(real.domain_logits), &margin(fake.domain_logits));
    Ok(AdversarialTerms {
        d_loss: d_domain.add(class)?,
        g_loss: g_domain.add(class)?,
        accuracy,
    })
}
