use crate::error::{Error, Result};
use crate::scalar::{linalg, Scalar};
use crate::tape::Var;
use crate::tensor::{Shape, Tensor};

/// Nearest-neighbour upscaling by 2: every element becomes a 2x2 block.
pub fn upsample_nearest2x<T: Scalar>(input: Var<'_, T>) -> Var<'_, T> {
    let s = input.shape();
    let out_shape = Shape {
        height: 2 * s.height,
        width: 2 * s.width,
        ..s
    };
    let mut out = Tensor::zeros(out_shape);
    {
        let x = input.tape().value(input);
        let (xd, od) = (x.data(), out.data_mut());
        for b in 0..s.batch {
            for y in 0..out_shape.height {
                for xx in 0..out_shape.width {
                    let src = s.offset(b, y / 2, xx / 2, 0);
                    let dst = out_shape.offset(b, y, xx, 0);
                    od[dst..dst + s.channels].copy_from_slice(&xd[src..src + s.channels]);
                }
            }
        }
    }
    input.tape().record(
        out,
        &[input],
        Box::new(move |ctx| {
            let mut dx = Tensor::zeros(s);
            let (g, d) = (ctx.grad.data(), dx.data_mut());
            for b in 0..s.batch {
                for y in 0..out_shape.height {
                    for xx in 0..out_shape.width {
                        let src = out_shape.offset(b, y, xx, 0);
                        let dst = s.offset(b, y / 2, xx / 2, 0);
                        for c in 0..s.channels {
                            d[dst + c] += g[src + c];
                        }
                    }
                }
            }
            vec![Some(dx)]
        }),
    )
}

/// Spatial mean per (batch, channel): `[B, H, W, C] -> [B, 1, 1, C]`.
pub fn global_avg_pool<T: Scalar>(input: Var<'_, T>) -> Var<'_, T> {
    let s = input.shape();
    let plane = s.height * s.width;
    let out_shape = Shape {
        height: 1,
        width: 1,
        ..s
    };
    let mut out = Tensor::zeros(out_shape);
    {
        let x = input.tape().value(input);
        let inv = T::of(1.0 / plane as f64);
        for b in 0..s.batch {
            let item = &x.data()[b * s.item_len()..(b + 1) * s.item_len()];
            let acc = &mut out.data_mut()[b * s.channels..(b + 1) * s.channels];
            for px in item.chunks_exact(s.channels) {
                for (a, &v) in acc.iter_mut().zip(px) {
                    *a += v;
                }
            }
            for a in acc.iter_mut() {
                *a *= inv;
            }
        }
    }
    input.tape().record(
        out,
        &[input],
        Box::new(move |ctx| {
            let inv = T::of(1.0 / plane as f64);
            let mut dx = Tensor::zeros(s);
            let g = ctx.grad.data();
            for b in 0..s.batch {
                let gb = &g[b * s.channels..(b + 1) * s.channels];
                let item = &mut dx.data_mut()[b * s.item_len()..(b + 1) * s.item_len()];
                for px in item.chunks_exact_mut(s.channels) {
                    for (d, &gv) in px.iter_mut().zip(gb) {
                        *d = gv * inv;
                    }
                }
            }
            vec![Some(dx)]
        }),
    )
}

/// Spatial maximum per (batch, channel). Ties route the gradient to the
/// first maximal position in row-major order.
pub fn max_pool_full<T: Scalar>(input: Var<'_, T>) -> Var<'_, T> {
    let s = input.shape();
    let out_shape = Shape {
        height: 1,
        width: 1,
        ..s
    };
    let mut out = Tensor::zeros(out_shape);
    let mut argmax = vec![0usize; s.batch * s.channels];
    {
        let x = input.tape().value(input);
        for b in 0..s.batch {
            for c in 0..s.channels {
                let base = b * s.item_len() + c;
                let mut best = base;
                for p in 1..s.height * s.width {
                    let i = base + p * s.channels;
                    if x.data()[best].is_nan() {
                        break;
                    }
                    if x.data()[i] > x.data()[best] || x.data()[i].is_nan() {
                        best = i;
                    }
                }
                argmax[b * s.channels + c] = best;
                out.data_mut()[b * s.channels + c] = x.data()[best];
            }
        }
    }
    input.tape().log_branches(|| argmax.clone());
    input.tape().record(
        out,
        &[input],
        Box::new(move |ctx| {
            let mut dx = Tensor::zeros(s);
            for (&i, &g) in argmax.iter().zip(ctx.grad.data()) {
                dx.data_mut()[i] += g;
            }
            vec![Some(dx)]
        }),
    )
}

impl<'t, T: Scalar> Var<'t, T> {
    pub fn upsample_nearest2x(self) -> Var<'t, T> {
        upsample_nearest2x(self)
    }

    pub fn global_avg_pool(self) -> Var<'t, T> {
        global_avg_pool(self)
    }

    pub fn max_pool_full(self) -> Var<'t, T> {
        max_pool_full(self)
    }

    /// Affine map of each flattened batch item: `[B, ...] -> [B, 1, 1, out]`
    /// with weights `[1, 1, in, out]` and bias `[out]`.
    pub fn fully_connected(self, weights: Var<'t, T>, bias: Var<'t, T>) -> Result<Var<'t, T>> {
        let tape = self.tape();
        let s = self.shape();
        let ws = weights.shape();
        let (n_in, n_out) = (ws.width, ws.channels);
        if ws.batch != 1 || ws.height != 1 || s.item_len() != n_in {
            return Err(Error::Shape(format!(
                "fully connected layer expects {n_in} inputs per item, got {} ({s})",
                s.item_len()
            )));
        }
        if bias.shape().len() != n_out {
            return Err(Error::Shape(format!(
                "fully connected bias has {} entries, layer has {n_out} outputs",
                bias.shape().len()
            )));
        }
        let rows = s.batch;
        let mut out = vec![T::zero(); rows * n_out];
        for row in out.chunks_exact_mut(n_out) {
            row.copy_from_slice(tape.value(bias).data());
        }
        linalg::matmul(rows, n_in, n_out, tape.value(self).data(), tape.value(weights).data(), &mut out, true);
        let value = Tensor::from_vec(Shape::new(rows, 1, 1, n_out)?, out)?;
        Ok(tape.record(
            value,
            &[self, weights, bias],
            Box::new(move |ctx| {
                let dy = ctx.grad.data();
                let dx = ctx.needs[0].then(|| {
                    let mut dx = Tensor::zeros(s);
                    linalg::matmul_nt(rows, n_out, n_in, dy, ctx.inputs[1].data(), dx.data_mut(), false);
                    dx
                });
                let dw = ctx.needs[1].then(|| {
                    let mut dw = Tensor::zeros(ctx.inputs[1].shape());
                    linalg::matmul_tn(n_in, rows, n_out, ctx.inputs[0].data(), dy, dw.data_mut(), false);
                    dw
                });
                let db = ctx.needs[2].then(|| {
                    let mut db = Tensor::zeros(ctx.inputs[2].shape());
                    for row in dy.chunks_exact(n_out) {
                        for (a, &g) in db.data_mut().iter_mut().zip(row) {
                            *a += g;
                        }
                    }
                    db
                });
                vec![dx, dw, db]
            }),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tape::Tape;

    #[test]
    fn upsample_replicates_blocks() {
        let tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::from_f64(Shape::new(1, 2, 2, 1).unwrap(), &[1.0, 2.0, 3.0, 4.0]).unwrap());
        let y = x.upsample_nearest2x();
        assert_eq!(
            y.value().to_f64_vec(),
            vec![1., 1., 2., 2., 1., 1., 2., 2., 3., 3., 4., 4., 3., 3., 4., 4.]
        );
        let g = tape.backward(y.sum()).unwrap();
        assert_eq!(g.get(x).unwrap().to_f64_vec(), vec![4.0; 4]);
    }

    #[test]
    fn upsample_single_element() {
        let tape = Tape::<f64>::new();
        let y = tape.constant(Tensor::scalar(3.0)).upsample_nearest2x().value();
        assert_eq!(y.shape(), Shape::new(1, 2, 2, 1).unwrap());
        assert_eq!(y.to_f64_vec(), vec![3.0; 4]);
    }

    #[test]
    fn pools() {
        let tape = Tape::<f64>::new();
        let x = tape.constant(Tensor::from_f64(Shape::new(1, 2, 2, 1).unwrap(), &[1.0, 2.0, 3.0, 4.0]).unwrap());
        assert_eq!(x.global_avg_pool().item(), 2.5);
        assert_eq!(x.max_pool_full().item(), 4.0);
    }

    #[test]
    fn max_pool_per_batch_and_channel() {
        let tape = Tape::<f64>::new();
        let data: Vec<f64> = (0..16).map(|i| ((i * 7) % 16) as f64).collect();
        let t = Tensor::from_f64(Shape::new(2, 2, 2, 2).unwrap(), &data).unwrap();
        let x = tape.leaf(t.clone());
        let y = x.max_pool_full();
        for b in 0..2 {
            for c in 0..2 {
                let mut best = f64::MIN;
                for h in 0..2 {
                    for w in 0..2 {
                        best = best.max(t.at(b, h, w, c));
                    }
                }
                assert_eq!(y.value().at(b, 0, 0, c), best);
            }
        }
        let g = tape.backward(y.sum()).unwrap();
        assert_eq!(g.get(x).unwrap().sum(), 4.0);
    }

    #[test]
    fn identity_fully_connected() {
        let tape = Tape::<f64>::new();
        let x = Tensor::from_f64(Shape::new(2, 1, 1, 3).unwrap(), &[1., 2., 3., 4., 5., 6.]).unwrap();
        let mut w = Tensor::zeros(Shape::new(1, 1, 3, 3).unwrap());
        for i in 0..3 {
            w.set(0, 0, i, i, 1.0);
        }
        let y = tape
            .constant(x.clone())
            .fully_connected(tape.constant(w), tape.constant(Tensor::zeros(Shape::vector(3))))
            .unwrap();
        assert_eq!(y.value(), x);
    }

    #[test]
    fn fully_connected_dimension_mismatch() {
        let tape = Tape::<f64>::new();
        let x = tape.constant(Tensor::zeros(Shape::new(1, 2, 2, 1).unwrap()));
        let w = tape.constant(Tensor::zeros(Shape::new(1, 1, 3, 2).unwrap()));
        let b = tape.constant(Tensor::zeros(Shape::vector(2)));
        assert!(x.fully_connected(w, b).is_err());
    }
}
