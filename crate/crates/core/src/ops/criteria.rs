use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tape::Var;
use crate::tensor::Tensor;

fn log1p_exp(z: f64) -> f64 {
    // ln(1 + e^z) without overflow
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl<'t, T: Scalar> Var<'t, T> {
    /// Mean binary cross-entropy between `sigmoid(self)` and `targets`, one
    /// logit per element.
    pub fn bce_with_logits(self, targets: &[f64]) -> Result<Var<'t, T>> {
        let n = self.shape().len();
        if targets.len() != n {
            return Err(Error::Shape(format!(
                "{} targets for {n} logits",
                targets.len()
            )));
        }
        let loss: f64 = {
            let z = self.tape().value(self);
            z.data()
                .iter()
                .zip(targets)
                .map(|(&z, &t)| {
                    let z = z.as_f64();
                    log1p_exp(z) - z * t
                })
                .sum::<f64>()
                / n as f64
        };
        let targets = targets.to_vec();
        Ok(self.tape().record(
            Tensor::scalar(T::of(loss)),
            &[self],
            Box::new(move |ctx| {
                let g = ctx.grad.item().as_f64() / n as f64;
                let z = ctx.inputs[0];
                let data = z
                    .data()
                    .iter()
                    .zip(&targets)
                    .map(|(&z, &t)| T::of(g * (sigmoid(z.as_f64()) - t)))
                    .collect();
                vec![Some(Tensor::from_vec(z.shape(), data).expect("same shape"))]
            }),
        ))
    }

    /// Mean softmax cross-entropy of `[B, 1, 1, K]` logits against class
    /// indices.
    pub fn softmax_cross_entropy(self, labels: &[usize]) -> Result<Var<'t, T>> {
        let s = self.shape();
        let k = s.item_len();
        if labels.len() != s.batch {
            return Err(Error::Shape(format!(
                "{} labels for a batch of {}",
                labels.len(),
                s.batch
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::Contract(format!("label {bad} out of range for {k} classes")));
        }
        let probs: Vec<f64> = {
            let z = self.tape().value(self);
            z.data().chunks_exact(k).flat_map(softmax).collect()
        };
        let loss = {
            let z = self.tape().value(self);
            z.data()
                .chunks_exact(k)
                .zip(labels)
                .map(|(row, &l)| log_sum_exp(row) - row[l].as_f64())
                .sum::<f64>()
                / s.batch as f64
        };
        let labels = labels.to_vec();
        Ok(self.tape().record(
            Tensor::scalar(T::of(loss)),
            &[self],
            Box::new(move |ctx| {
                let g = ctx.grad.item().as_f64() / s.batch as f64;
                let mut data: Vec<T> = probs.iter().map(|&p| T::of(g * p)).collect();
                for (b, &l) in labels.iter().enumerate() {
                    data[b * k + l] -= T::of(g);
                }
                vec![Some(Tensor::from_vec(s, data).expect("same shape"))]
            }),
        ))
    }
}

fn log_sum_exp<T: Scalar>(row: &[T]) -> f64 {
    let m = row.iter().map(|v| v.as_f64()).fold(f64::NEG_INFINITY, f64::max);
    m + row.iter().map(|v| (v.as_f64() - m).exp()).sum::<f64>().ln()
}

fn softmax<T: Scalar>(row: &[T]) -> Vec<f64> {
    let m = row.iter().map(|v| v.as_f64()).fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = row.iter().map(|v| (v.as_f64() - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}
