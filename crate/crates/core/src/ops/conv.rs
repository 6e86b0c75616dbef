use crate::error::{Error, Result};
use crate::scalar::{linalg, Scalar};
use crate::tape::Var;
use crate::tensor::{Shape, Tensor};

/// Border handling for [`conv2d`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Padding {
    /// Mirror the input by `k / 2` pixels per side (odd kernels only).
    Reflect,
    /// No padding; the kernel must fit inside the input.
    Valid,
}

/// Maps a possibly out-of-range coordinate onto `0..n` by mirroring
/// without repeating the edge pixel (`-1 -> 1`, `n -> n - 2`).
pub fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m >= n as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

/// Output extent along one axis.
pub fn conv_output_size(input: usize, kernel: usize, stride: usize, padding: Padding) -> Option<usize> {
    match padding {
        Padding::Reflect => Some(input.div_ceil(stride)),
        Padding::Valid => (input >= kernel).then(|| (input - kernel) / stride + 1),
    }
}

#[derive(Clone, Copy, Debug)]
struct Geometry {
    input: Shape,
    kh: usize,
    kw: usize,
    cin: usize,
    cout: usize,
    stride: usize,
    pad_top: usize,
    pad_left: usize,
    out_h: usize,
    out_w: usize,
}

impl Geometry {
    fn new(input: Shape, kernel: Shape, bias: Shape, stride: usize, padding: Padding) -> Result<Self> {
        let [kh, kw, cin, cout] = kernel.dims();
        if stride < 1 {
            return Err(Error::Config("convolution stride must be >= 1".into()));
        }
        if input.channels != cin {
            return Err(Error::Shape(format!(
                "conv2d input has {} channels but the kernel expects {cin}",
                input.channels
            )));
        }
        if bias.len() != cout {
            return Err(Error::Shape(format!(
                "conv2d bias has {} entries, kernel has {cout} outputs",
                bias.len()
            )));
        }
        let (pad_top, pad_left) = match padding {
            Padding::Reflect => {
                if kh % 2 == 0 || kw % 2 == 0 {
                    return Err(Error::Shape(format!(
                        "reflect padding needs an odd kernel, got {kh}x{kw}"
                    )));
                }
                (kh / 2, kw / 2)
            }
            Padding::Valid => (0, 0),
        };
        let out = conv_output_size(input.height, kh, stride, padding)
            .zip(conv_output_size(input.width, kw, stride, padding));
        let Some((out_h, out_w)) = out else {
            return Err(Error::Shape(format!(
                "{kh}x{kw} kernel does not fit a {}x{} input without padding",
                input.height, input.width
            )));
        };
        Ok(Geometry {
            input,
            kh,
            kw,
            cin,
            cout,
            stride,
            pad_top,
            pad_left,
            out_h,
            out_w,
        })
    }

    fn rows(&self) -> usize {
        self.input.batch * self.out_h * self.out_w
    }

    fn cols(&self) -> usize {
        self.kh * self.kw * self.cin
    }

    fn output_shape(&self) -> Shape {
        Shape {
            batch: self.input.batch,
            height: self.out_h,
            width: self.out_w,
            channels: self.cout,
        }
    }

    /// For every (output position, kernel tap) the flat input offset it reads.
    fn gather_index(&self) -> Vec<u32> {
        let mut index = Vec::with_capacity(self.rows() * self.cols());
        let (h, w) = (self.input.height, self.input.width);
        for b in 0..self.input.batch {
            for oy in 0..self.out_h {
                for ox in 0..self.out_w {
                    for ky in 0..self.kh {
                        let iy = (oy * self.stride + ky) as isize - self.pad_top as isize;
                        let iy = reflect_index(iy, h);
                        for kx in 0..self.kw {
                            let ix = (ox * self.stride + kx) as isize - self.pad_left as isize;
                            let ix = reflect_index(ix, w);
                            let base = self.input.offset(b, iy, ix, 0) as u32;
                            index.extend((0..self.cin as u32).map(|c| base + c));
                        }
                    }
                }
            }
        }
        index
    }
}

/// 2-D convolution of an NHWC input with a `[kh, kw, cin, cout]` kernel.
///
/// With [`Padding::Reflect`] the output is `ceil(H / stride) x ceil(W / stride)`.
pub fn conv2d<'t, T: Scalar>(
    input: Var<'t, T>,
    kernel: Var<'t, T>,
    bias: Var<'t, T>,
    stride: usize,
    padding: Padding,
) -> Result<Var<'t, T>> {
    let tape = input.tape();
    let geo = Geometry::new(input.shape(), kernel.shape(), bias.shape(), stride, padding)?;
    let index = geo.gather_index();
    let patches: Vec<T> = {
        let x = tape.value(input);
        let x = x.data();
        index.iter().map(|&i| x[i as usize]).collect()
    };
    let (rows, cols, cout) = (geo.rows(), geo.cols(), geo.cout);
    let mut out = vec![T::zero(); rows * cout];
    {
        let b = tape.value(bias);
        for row in out.chunks_exact_mut(cout) {
            row.copy_from_slice(b.data());
        }
        linalg::matmul(rows, cols, cout, &patches, tape.value(kernel).data(), &mut out, true);
    }
    let value = Tensor::from_vec(geo.output_shape(), out)?;
    Ok(tape.record(
        value,
        &[input, kernel, bias],
        Box::new(move |ctx| {
            let dy = ctx.grad.data();
            let dx = ctx.needs[0].then(|| {
                let mut dpatches = vec![T::zero(); rows * cols];
                linalg::matmul_nt(rows, cout, cols, dy, ctx.inputs[1].data(), &mut dpatches, false);
                let mut dx = Tensor::zeros(geo.input);
                let d = dx.data_mut();
                for (&i, &g) in index.iter().zip(&dpatches) {
                    d[i as usize] += g;
                }
                dx
            });
            let dk = ctx.needs[1].then(|| {
                let mut dk = Tensor::zeros(ctx.inputs[1].shape());
                linalg::matmul_tn(cols, rows, cout, &patches, dy, dk.data_mut(), false);
                dk
            });
            let db = ctx.needs[2].then(|| {
                let mut db = Tensor::zeros(ctx.inputs[2].shape());
                let acc = db.data_mut();
                for row in dy.chunks_exact(cout) {
                    for (a, &g) in acc.iter_mut().zip(row) {
                        *a += g;
                    }
                }
                db
            });
            vec![dx, dk, db]
        }),
    ))
}

impl<'t, T: Scalar> Var<'t, T> {
    pub fn conv2d(self, kernel: Var<'t, T>, bias: Var<'t, T>, stride: usize, padding: Padding) -> Result<Var<'t, T>> {
        conv2d(self, kernel, bias, stride, padding)
    }
}
