//! Reverse-mode automatic differentiation over a linear tape.
//!
//! Every op appends one node holding its forward value, its input ids and a
//! backward rule. Node ids increase monotonically, so the tape order is a
//! topological order and the backward pass is a single reverse sweep.

use std::cell::{Ref, RefCell};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::params::ParameterStore;
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};

/// Inputs to a backward rule.
pub struct BackwardCtx<'a, T> {
    /// Gradient of the loss with respect to this node's output.
    pub grad: &'a Tensor<T>,
    pub inputs: &'a [&'a Tensor<T>],
    pub output: &'a Tensor<T>,
    /// Which inputs need a gradient; rules may skip the rest.
    pub needs: &'a [bool],
}

/// Maps the output gradient to one optional gradient per input.
pub type BackwardFn<T> = Box<dyn Fn(&BackwardCtx<'_, T>) -> Vec<Option<Tensor<T>>>>;

struct Node<T> {
    value: Tensor<T>,
    inputs: Vec<usize>,
    backward: Option<BackwardFn<T>>,
    requires_grad: bool,
}

/// Recording context for one forward/backward pass.
pub struct Tape<T: Scalar> {
    nodes: RefCell<Vec<Node<T>>>,
    /// Branch decisions of non-smooth ops, when enabled.
    branches: Option<RefCell<Vec<usize>>>,
}

/// Handle to a tensor recorded on a [`Tape`].
pub struct Var<'t, T: Scalar> {
    tape: &'t Tape<T>,
    id: usize,
}

impl<T: Scalar> Clone for Var<'_, T> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<T: Scalar> Copy for Var<'_, T> {}

impl<T: Scalar> std::fmt::Debug for Var<'_, T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var#{}{:?}", self.id, self.shape())
    }
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape {
            nodes: RefCell::new(Vec::new()),
            branches: None,
        }
    }

    /// A tape that also logs which branch every non-smooth op (ReLU sign,
    /// max-pool winner) took, so two evaluations can be checked for lying on
    /// the same smooth piece.
    pub fn with_branch_log() -> Self {
        Tape {
            branches: Some(RefCell::new(Vec::new())),
            ..Self::new()
        }
    }

    /// Appends branch decisions; a no-op unless the log is enabled.
    pub fn log_branches(&self, decisions: impl FnOnce() -> Vec<usize>) {
        if let Some(log) = &self.branches {
            log.borrow_mut().extend(decisions());
        }
    }

    pub fn branch_log(&self) -> Option<Vec<usize>> {
        self.branches.as_ref().map(|log| log.borrow().clone())
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, node: Node<T>) -> Var<'_, T> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(node);
        Var {
            tape: self,
            id: nodes.len() - 1,
        }
    }

    /// A value that never receives a gradient.
    pub fn constant(&self, value: Tensor<T>) -> Var<'_, T> {
        self.push(Node {
            value,
            inputs: Vec::new(),
            backward: None,
            requires_grad: false,
        })
    }

    /// A leaf that receives a gradient.
    pub fn leaf(&self, value: Tensor<T>) -> Var<'_, T> {
        self.push(Node {
            value,
            inputs: Vec::new(),
            backward: None,
            requires_grad: true,
        })
    }

    /// Records an op output. The backward rule is dropped when no input
    /// requires a gradient.
    pub fn record<'t>(
        &'t self,
        value: Tensor<T>,
        inputs: &[Var<'t, T>],
        backward: BackwardFn<T>,
    ) -> Var<'t, T> {
        let requires_grad = {
            let nodes = self.nodes.borrow();
            inputs.iter().any(|v| {
                debug_assert!(std::ptr::eq(v.tape, self), "mixing tapes");
                nodes[v.id].requires_grad
            })
        };
        self.push(Node {
            value,
            inputs: inputs.iter().map(|v| v.id).collect(),
            backward: requires_grad.then_some(backward),
            requires_grad,
        })
    }

    pub fn value(&self, var: Var<'_, T>) -> Ref<'_, Tensor<T>> {
        Ref::map(self.nodes.borrow(), |n| &n[var.id].value)
    }

    /// Binds every tensor of `store` as a leaf (when `trainable(name)`) or a
    /// constant.
    pub fn bind(&self, store: &ParameterStore<T>, trainable: impl Fn(&str) -> bool) -> Bound<'_, T> {
        let vars = store
            .iter()
            .map(|(name, t)| {
                let v = if trainable(name) {
                    self.leaf(t.clone())
                } else {
                    self.constant(t.clone())
                };
                (name.to_string(), v)
            })
            .collect();
        Bound { vars }
    }

    /// Backpropagates from a scalar `loss`.
    pub fn backward(&self, loss: Var<'_, T>) -> Result<Gradients<T>> {
        let nodes = self.nodes.borrow();
        let shape = nodes[loss.id].value.shape();
        if !shape.is_scalar() {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {shape}"
            )));
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..nodes.len()).map(|_| None).collect();
        let mut visited = Vec::new();
        if nodes[loss.id].requires_grad {
            grads[loss.id] = Some(Tensor::ones(shape));
        }
        for id in (0..=loss.id).rev() {
            let node = &nodes[id];
            let Some(rule) = node.backward.as_ref() else {
                continue;
            };
            let Some(grad) = grads[id].take() else {
                continue;
            };
            visited.push(id);
            let inputs: Vec<&Tensor<T>> = node.inputs.iter().map(|&i| &nodes[i].value).collect();
            let needs: Vec<bool> = node.inputs.iter().map(|&i| nodes[i].requires_grad).collect();
            let ctx = BackwardCtx {
                grad: &grad,
                inputs: &inputs,
                output: &node.value,
                needs: &needs,
            };
            let input_grads = rule(&ctx);
            debug_assert_eq!(input_grads.len(), node.inputs.len());
            for ((&input, g), &need) in node.inputs.iter().zip(input_grads).zip(&needs) {
                let Some(g) = g else { continue };
                if !need {
                    continue;
                }
                debug_assert_eq!(g.shape(), nodes[input].value.shape());
                match &mut grads[input] {
                    Some(acc) => acc.add_assign(&g),
                    slot @ None => *slot = Some(g),
                }
            }
        }
        Ok(Gradients { grads, visited })
    }
}

impl<'t, T: Scalar> Var<'t, T> {
    pub fn tape(&self) -> &'t Tape<T> {
        self.tape
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn shape(&self) -> Shape {
        self.tape.value(*self).shape()
    }

    /// Copy of the forward value.
    pub fn value(&self) -> Tensor<T> {
        self.tape.value(*self).clone()
    }

    pub fn item(&self) -> T {
        self.tape.value(*self).item()
    }

    pub fn requires_grad(&self) -> bool {
        self.tape.nodes.borrow()[self.id].requires_grad
    }

    /// Same value, cut from the graph.
    pub fn detach(&self) -> Var<'t, T> {
        self.tape.constant(self.value())
    }
}

/// Result of a backward pass.
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
    visited: Vec<usize>,
}

impl<T: Scalar> Gradients<T> {
    /// Gradient of a leaf, if the loss depends on it.
    pub fn get(&self, var: Var<'_, T>) -> Option<&Tensor<T>> {
        self.grads.get(var.id).and_then(|g| g.as_ref())
    }

    /// Gradient of a leaf, zero-filled when the loss does not reach it.
    pub fn get_or_zero(&self, var: Var<'_, T>) -> Tensor<T> {
        self.get(var)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(var.shape()))
    }

    /// Node ids whose backward rule ran, in the order they ran.
    pub fn visited(&self) -> &[usize] {
        &self.visited
    }
}

/// Parameters of a [`ParameterStore`] bound onto a tape.
pub struct Bound<'t, T: Scalar> {
    vars: BTreeMap<String, Var<'t, T>>,
}

impl<'t, T: Scalar> Bound<'t, T> {
    pub fn get(&self, name: &str) -> Result<Var<'t, T>> {
        self.vars
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingParameter(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Var<'t, T>)> {
        self.vars.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// `d loss / d p` for every bound parameter; frozen or unreachable
    /// parameters get zeros.
    pub fn gradients(&self, grads: &Gradients<T>) -> BTreeMap<String, Tensor<T>> {
        self.vars
            .iter()
            .map(|(name, &v)| (name.clone(), grads.get_or_zero(v)))
            .collect()
    }

    /// Like [`Bound::gradients`] but only for parameters that required a
    /// gradient.
    pub fn trainable_gradients(&self, grads: &Gradients<T>) -> BTreeMap<String, Tensor<T>> {
        self.vars
            .iter()
            .filter(|(_, v)| v.requires_grad())
            .map(|(name, &v)| (name.clone(), grads.get_or_zero(v)))
            .collect()
    }
}

/// `d loss / d p` for every parameter in `bound`.
pub fn backward<T: Scalar>(loss: Var<'_, T>, bound: &Bound<'_, T>) -> Result<BTreeMap<String, Tensor<T>>> {
    let grads = loss.tape().backward(loss)?;
    Ok(bound.gradients(&grads))
}
