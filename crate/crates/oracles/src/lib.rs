//! Slow, direct reference implementations for tests.
//!
//! Nothing here depends on `lfnet`; every routine recomputes its quantity
//! from the definition with plain loops over `f64` slices in NHWC order.

/// NHWC dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    pub b: usize,
    pub h: usize,
    pub w: usize,
    pub c: usize,
}

impl Dims {
    pub fn new(b: usize, h: usize, w: usize, c: usize) -> Self {
        Dims { b, h, w, c }
    }

    pub fn len(&self) -> usize {
        self.b * self.h * self.w * self.c
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn at(&self, b: usize, h: usize, w: usize, c: usize) -> usize {
        ((b * self.h + h) * self.w + w) * self.c + c
    }
}

fn mirror(i: isize, n: usize) -> usize {
    // Reflect repeatedly until inside [0, n).
    if n == 1 {
        return 0;
    }
    let mut i = i;
    loop {
        if i < 0 {
            i = -i;
        } else if i >= n as isize {
            i = 2 * (n as isize - 1) - i;
        } else {
            return i as usize;
        }
    }
}

/// Direct convolution with reflect padding of `k / 2`, kernel
/// `[kh, kw, cin, cout]`. Returns the output and its dimensions.
pub fn conv2d_reflect(
    x: &[f64],
    d: Dims,
    kernel: &[f64],
    (kh, kw, cout): (usize, usize, usize),
    bias: &[f64],
    stride: usize,
) -> (Vec<f64>, Dims) {
    let (ph, pw) = (kh / 2, kw / 2);
    let oh = (d.h + stride - 1) / stride;
    let ow = (d.w + stride - 1) / stride;
    let od = Dims::new(d.b, oh, ow, cout);
    let mut out = vec![0.0; od.len()];
    for b in 0..d.b {
        for oy in 0..oh {
            for ox in 0..ow {
                for o in 0..cout {
                    let mut acc = bias[o];
                    for ky in 0..kh {
                        for kx in 0..kw {
                            let iy = mirror((oy * stride + ky) as isize - ph as isize, d.h);
                            let ix = mirror((ox * stride + kx) as isize - pw as isize, d.w);
                            for i in 0..d.c {
                                let kidx = ((ky * kw + kx) * d.c + i) * cout + o;
                                acc += x[d.at(b, iy, ix, i)] * kernel[kidx];
                            }
                        }
                    }
                    out[od.at(b, oy, ox, o)] = acc;
                }
            }
        }
    }
    (out, od)
}

/// Elements of the LFN window around `(b, h, w, c)`: inclusive radius
/// `ws / 2` clipped to the tensor, channels of the same group of size `g`.
pub fn lfn_window(x: &[f64], d: Dims, ws: usize, g: usize, b: usize, h: usize, w: usize, c: usize) -> Vec<f64> {
    let r = (ws / 2) as isize;
    let first = c / g * g;
    let mut vals = Vec::new();
    for y in (h as isize - r)..=(h as isize + r) {
        if y < 0 || y >= d.h as isize {
            continue;
        }
        for xx in (w as isize - r)..=(w as isize + r) {
            if xx < 0 || xx >= d.w as isize {
                continue;
            }
            for z in first..first + g {
                vals.push(x[d.at(b, y as usize, xx as usize, z)]);
            }
        }
    }
    vals
}

/// Two-pass population mean and standard deviation.
pub fn mean_std(vals: &[f64]) -> (f64, f64) {
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// LFN recomputed element by element from its own window.
pub fn lfn(x: &[f64], d: Dims, ws: usize, g: usize, eps: f64, gamma: &[f64], beta: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; d.len()];
    for b in 0..d.b {
        for h in 0..d.h {
            for w in 0..d.w {
                for c in 0..d.c {
                    let (m, s) = mean_std(&lfn_window(x, d, ws, g, b, h, w, c));
                    let i = d.at(b, h, w, c);
                    out[i] = gamma[c] * (x[i] - m) / (s + eps) + beta[c];
                }
            }
        }
    }
    out
}

/// Per-(sample, channel) normalization over the whole spatial plane.
pub fn instance_norm(x: &[f64], d: Dims, eps: f64) -> Vec<f64> {
    let mut out = vec![0.0; d.len()];
    for b in 0..d.b {
        for c in 0..d.c {
            let vals: Vec<f64> = (0..d.h)
                .flat_map(|h| (0..d.w).map(move |w| (h, w)))
                .map(|(h, w)| x[d.at(b, h, w, c)])
                .collect();
            let (m, s) = mean_std(&vals);
            for h in 0..d.h {
                for w in 0..d.w {
                    let i = d.at(b, h, w, c);
                    out[i] = (x[i] - m) / (s + eps);
                }
            }
        }
    }
    out
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Relative style-specific content distance by explicit double loops.
pub fn rsscd(z_p: &[Vec<f64>], y_p: &[Vec<f64>], y_n: &[Vec<f64>]) -> f64 {
    let mut num = 0.0;
    for z in z_p {
        let mut best = f64::INFINITY;
        for y in y_p {
            let d = l2(z, y);
            if d < best {
                best = d;
            }
        }
        num += best;
    }
    num /= z_p.len() as f64;
    let mut den = 0.0;
    for a in y_p {
        for b in y_n {
            den += l2(a, b);
        }
    }
    den /= (y_p.len() * y_n.len()) as f64;
    num / den
}

/// Mean of `-[t ln p + (1 - t) ln (1 - p)]` with `p = 1 / (1 + e^-z)`.
pub fn bce(logits: &[f64], targets: &[f64]) -> f64 {
    logits
        .iter()
        .zip(targets)
        .map(|(&z, &t)| {
            let p = 1.0 / (1.0 + (-z).exp());
            -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
        })
        .sum::<f64>()
        / logits.len() as f64
}

/// Mean of `-ln softmax(row)[label]`.
pub fn cross_entropy(rows: &[Vec<f64>], labels: &[usize]) -> f64 {
    rows.iter()
        .zip(labels)
        .map(|(row, &l)| {
            let z: f64 = row.iter().map(|v| v.exp()).sum();
            -(row[l].exp() / z).ln()
        })
        .sum::<f64>()
        / rows.len() as f64
}

pub fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

/// (accuracy, precision, recall, f1) from a 2x2 confusion matrix.
pub fn binary_metrics(predicted: &[bool], actual: &[bool]) -> (f64, f64, f64, f64) {
    let mut m = [[0usize; 2]; 2];
    for (&p, &a) in predicted.iter().zip(actual) {
        m[a as usize][p as usize] += 1;
    }
    let (tn, fp, fn_, tp) = (m[0][0] as f64, m[0][1] as f64, m[1][0] as f64, m[1][1] as f64);
    let acc = (tp + tn) / (tp + tn + fp + fn_);
    let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
    let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    (acc, precision, recall, f1)
}
