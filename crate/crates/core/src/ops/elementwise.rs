use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tape::Var;
use crate::tensor::Tensor;

fn same_shape<T: Scalar>(op: &'static str, a: Var<'_, T>, b: Var<'_, T>) -> Result<()> {
    let (sa, sb) = (a.shape(), b.shape());
    if sa != sb {
        return Err(Error::ShapeMismatch {
            op,
            expected: sa,
            actual: sb,
        });
    }
    Ok(())
}

impl<'t, T: Scalar> Var<'t, T> {
    fn log_sign(self) {
        let tape = self.tape();
        tape.log_branches(|| tape.value(self).data().iter().map(|&x| (x > T::zero()) as usize).collect());
    }

    fn unary(self, f: impl Fn(T) -> T, df: impl Fn(T, T) -> T + 'static) -> Var<'t, T> {
        // df(x, y) is dy/dx at input x with output y.
        let value = self.tape().value(self).map(f);
        self.tape().record(
            value,
            &[self],
            Box::new(move |ctx| {
                let x = ctx.inputs[0].data();
                let y = ctx.output.data();
                let data = ctx
                    .grad
                    .data()
                    .iter()
                    .zip(x.iter().zip(y))
                    .map(|(&g, (&x, &y))| g * df(x, y))
                    .collect();
                vec![Some(
                    Tensor::from_vec(ctx.output.shape(), data).expect("shape preserved"),
                )]
            }),
        )
    }

    pub fn add(self, other: Var<'t, T>) -> Result<Var<'t, T>> {
        same_shape("add", self, other)?;
        let value = self.tape().value(self).zip_map(&self.tape().value(other), |a, b| a + b);
        Ok(self.tape().record(
            value,
            &[self, other],
            Box::new(|ctx| vec![Some(ctx.grad.clone()), Some(ctx.grad.clone())]),
        ))
    }

    pub fn sub(self, other: Var<'t, T>) -> Result<Var<'t, T>> {
        same_shape("sub", self, other)?;
        let value = self.tape().value(self).zip_map(&self.tape().value(other), |a, b| a - b);
        Ok(self.tape().record(
            value,
            &[self, other],
            Box::new(|ctx| {
                let neg = ctx.needs[1].then(|| ctx.grad.map(|g| -g));
                vec![Some(ctx.grad.clone()), neg]
            }),
        ))
    }

    pub fn mul(self, other: Var<'t, T>) -> Result<Var<'t, T>> {
        same_shape("mul", self, other)?;
        let value = self.tape().value(self).zip_map(&self.tape().value(other), |a, b| a * b);
        Ok(self.tape().record(
            value,
            &[self, other],
            Box::new(|ctx| {
                let ga = ctx.needs[0].then(|| ctx.grad.zip_map(ctx.inputs[1], |g, b| g * b));
                let gb = ctx.needs[1].then(|| ctx.grad.zip_map(ctx.inputs[0], |g, a| g * a));
                vec![ga, gb]
            }),
        ))
    }

    /// Multiplies every element by a constant.
    pub fn scale(self, factor: f64) -> Var<'t, T> {
        let k = T::of(factor);
        self.unary(move |x| x * k, move |_, _| k)
    }

    pub fn add_scalar(self, offset: f64) -> Var<'t, T> {
        let k = T::of(offset);
        self.unary(move |x| x + k, |_, _| T::one())
    }

    pub fn square(self) -> Var<'t, T> {
        self.unary(|x| x * x, |x, _| x + x)
    }

    /// NaN inputs stay NaN.
    pub fn relu(self) -> Var<'t, T> {
        self.log_sign();
        self.unary(
            |x| if x <= T::zero() { T::zero() } else { x },
            |x, _| if x > T::zero() { T::one() } else { T::zero() },
        )
    }

    /// `max(x, slope * x)`; the derivative at 0 is `slope`.
    pub fn lrelu(self, slope: f64) -> Var<'t, T> {
        let s = T::of(slope);
        self.log_sign();
        self.unary(
            move |x| if x > T::zero() { x } else { s * x },
            move |x, _| if x > T::zero() { T::one() } else { s },
        )
    }

    pub fn sigmoid(self) -> Var<'t, T> {
        self.unary(
            |x| {
                if x >= T::zero() {
                    T::one() / (T::one() + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (T::one() + e)
                }
            },
            |_, y| y * (T::one() - y),
        )
    }

    /// Sum of all elements as a scalar.
    pub fn sum(self) -> Var<'t, T> {
        let value = Tensor::scalar(self.tape().value(self).sum());
        self.tape().record(
            value,
            &[self],
            Box::new(|ctx| {
                let g = ctx.grad.item();
                vec![Some(Tensor::full(ctx.inputs[0].shape(), g))]
            }),
        )
    }

    /// Mean of all elements as a scalar.
    pub fn mean(self) -> Var<'t, T> {
        let n = self.shape().len() as f64;
        self.sum().scale(1.0 / n)
    }

    /// Mean squared difference over all elements.
    pub fn mse(self, other: Var<'t, T>) -> Result<Var<'t, T>> {
        Ok(self.sub(other)?.square().mean())
    }
}
