//! Finite-difference gradient checks for every differentiable primitive.

use lfnet::gradcheck::GradCheck;
use lfnet::ops::Padding;
use lfnet::{LfnConfig, Result, Shape, Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: u64 = 20;

fn shape(b: usize, h: usize, w: usize, c: usize) -> Shape {
    Shape::new(b, h, w, c).unwrap()
}

/// `sum(y * r)` for a fixed random `r`, so every output element carries a
/// distinct weight.
fn weighted_sum<'t>(tape: &'t Tape<f64>, y: Var<'t, f64>, seed: u64) -> Result<Var<'t, f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5);
    let r = tape.constant(Tensor::uniform(y.shape(), -1.0, 1.0, &mut rng));
    Ok(y.mul(r)?.sum())
}

fn check<F>(name: &str, make_inputs: impl Fn(&mut ChaCha8Rng) -> Vec<Tensor<f64>>, f: F)
where
    F: for<'t> Fn(&'t Tape<f64>, &[Var<'t, f64>], u64) -> Result<Var<'t, f64>>,
{
    let checker = GradCheck::default();
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs = make_inputs(&mut rng);
        let report = checker
            .run(&inputs, |tape, vars| {
                let y = f(tape, vars, seed)?;
                weighted_sum(tape, y, seed)
            })
            .unwrap();
        assert!(
            report.passed,
            "{name} seed {seed}: max error {} at {:?}",
            report.max_error, report.worst
        );
    }
}

fn randn(rng: &mut ChaCha8Rng, s: Shape) -> Tensor<f64> {
    Tensor::randn(s, 1.0, rng)
}

#[test]
fn conv2d_stride_one_and_two() {
    for stride in [1, 2] {
        check(
            &format!("conv2d stride {stride}"),
            |rng| {
                let (h, w) = (rng.gen_range(2..7), rng.gen_range(2..7));
                vec![
                    randn(rng, shape(2, h, w, 2)),
                    randn(rng, shape(3, 3, 2, 3)),
                    randn(rng, Shape::vector(3)),
                ]
            },
            move |_, v, _| v[0].conv2d(v[1], v[2], stride, Padding::Reflect),
        );
    }
}

#[test]
fn conv2d_large_kernel_and_valid_padding() {
    check(
        "conv2d 5x5 reflect",
        |rng| {
            vec![
                randn(rng, shape(1, 4, 4, 2)),
                randn(rng, shape(5, 5, 2, 2)),
                randn(rng, Shape::vector(2)),
            ]
        },
        |_, v, _| v[0].conv2d(v[1], v[2], 2, Padding::Reflect),
    );
    check(
        "conv2d valid",
        |rng| {
            vec![
                randn(rng, shape(2, 5, 5, 2)),
                randn(rng, shape(3, 3, 2, 2)),
                randn(rng, Shape::vector(2)),
            ]
        },
        |_, v, _| v[0].conv2d(v[1], v[2], 1, Padding::Valid),
    );
}

#[test]
fn upsample() {
    check(
        "upsample",
        |rng| vec![randn(rng, shape(2, 3, 2, 3))],
        |_, v, _| Ok(v[0].upsample_nearest2x()),
    );
}

#[test]
fn activations() {
    check("lrelu", |rng| vec![randn(rng, shape(2, 3, 3, 2))], |_, v, _| Ok(v[0].lrelu(0.2)));
    check("relu", |rng| vec![randn(rng, shape(2, 3, 3, 2))], |_, v, _| Ok(v[0].relu()));
    check("sigmoid", |rng| vec![randn(rng, shape(2, 3, 3, 2))], |_, v, _| Ok(v[0].sigmoid()));
}

#[test]
fn fully_connected() {
    check(
        "fc",
        |rng| {
            vec![
                randn(rng, shape(3, 2, 1, 2)),
                randn(rng, shape(1, 1, 4, 5)),
                randn(rng, Shape::vector(5)),
            ]
        },
        |_, v, _| v[0].fully_connected(v[1], v[2]),
    );
}

#[test]
fn pools() {
    check(
        "global_avg_pool",
        |rng| vec![randn(rng, shape(2, 3, 4, 3))],
        |_, v, _| Ok(v[0].global_avg_pool()),
    );
    // Well separated values keep finite differences away from argmax ties.
    check(
        "max_pool_full",
        |rng| {
            let s = shape(2, 3, 3, 2);
            let mut vals: Vec<f64> = (0..s.len()).map(|i| i as f64 * 0.1).collect();
            for i in (1..vals.len()).rev() {
                vals.swap(i, rng.gen_range(0..=i));
            }
            vec![Tensor::from_f64(s, &vals).unwrap()]
        },
        |_, v, _| Ok(v[0].max_pool_full()),
    );
}

#[test]
fn criteria() {
    check(
        "bce_with_logits",
        |rng| vec![randn(rng, shape(4, 1, 1, 1))],
        |_, v, _| v[0].bce_with_logits(&[1.0, 0.0, 1.0, 0.0]),
    );
    check(
        "softmax_cross_entropy",
        |rng| vec![randn(rng, shape(3, 1, 1, 4))],
        |_, v, _| v[0].softmax_cross_entropy(&[0, 3, 1]),
    );
    check(
        "mse",
        |rng| vec![randn(rng, shape(2, 2, 2, 1)), randn(rng, shape(2, 2, 2, 1))],
        |_, v, _| v[0].mse(v[1]),
    );
}

#[test]
fn lfn_exact_mode() {
    for (ws, g) in [(3, 2), (1, 4), (5, 4), (4, 1)] {
        check(
            &format!("lfn exact ws={ws} g={g}"),
            |rng| {
                let (h, w) = (rng.gen_range(3..7), rng.gen_range(3..7));
                let mut gamma = randn(rng, Shape::vector(4));
                gamma.data_mut().iter_mut().for_each(|v| *v += 1.0);
                vec![randn(rng, shape(2, h, w, 4)), gamma, randn(rng, Shape::vector(4))]
            },
            move |_, v, _| v[0].lfn(v[1], v[2], &LfnConfig::new(ws, g)),
        );
    }
}

#[test]
fn lfn_sampled_mode() {
    for (ws, g, stride) in [(4, 2, 2), (5, 1, 3), (6, 4, 4)] {
        check(
            &format!("lfn sampled ws={ws} g={g} stride={stride}"),
            |rng| {
                let (h, w) = (rng.gen_range(4..9), rng.gen_range(4..9));
                vec![
                    randn(rng, shape(1, h, w, 4)),
                    randn(rng, Shape::vector(4)),
                    randn(rng, Shape::vector(4)),
                ]
            },
            move |_, v, _| v[0].lfn(v[1], v[2], &LfnConfig::new(ws, g).sampled(stride)),
        );
    }
}

#[test]
fn composite_conv_lfn_lrelu_mean() {
    let checker = GradCheck::default();
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let inputs = vec![
            randn(&mut rng, shape(2, 6, 5, 2)),
            randn(&mut rng, shape(3, 3, 2, 4)),
            randn(&mut rng, Shape::vector(4)),
            Tensor::uniform(Shape::vector(4), 0.5, 1.5, &mut rng),
            randn(&mut rng, Shape::vector(4)),
        ];
        let report = checker
            .run(&inputs, |_, v| {
                let y = v[0].conv2d(v[1], v[2], 2, Padding::Reflect)?;
                let y = y.lfn(v[3], v[4], &LfnConfig::new(3, 2))?;
                Ok(y.lrelu(0.2).square().mean())
            })
            .unwrap();
        assert!(report.passed, "seed {seed}: {report:?}");
    }
}
