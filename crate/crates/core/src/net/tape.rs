//! Reverse-mode recording of the network's forward pass.

use super::ops;
use super::param::ParamSet;
use super::real::Real;
use super::tensor::Tensor;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

enum Node<R> {
    Input,
    Conv3 { x: usize, w: usize, b: usize, cols: Vec<R> },
    Conv1 { x: usize, w: usize, b: usize },
    ConvT { x: usize, w: usize, b: usize },
    Pool { x: usize },
    Relu { x: usize },
    Add { a: usize, b: usize },
    Concat { parts: Vec<usize> },
    Mean4 { parts: [usize; 4] },
}

/// Values and operations of one forward pass. With `record` off the
/// patch matrices are dropped and [`Tape::backward`] is unavailable.
pub struct Tape<R> {
    values: Vec<Tensor<R>>,
    nodes: Vec<Node<R>>,
    record: bool,
}

impl<R: Real> Tape<R> {
    pub fn new(record: bool) -> Self {
        Self {
            values: Vec::new(),
            nodes: Vec::new(),
            record,
        }
    }

    fn push(&mut self, value: Tensor<R>, node: Node<R>) -> Var {
        self.values.push(value);
        self.nodes.push(node);
        Var(self.values.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor<R> {
        &self.values[v.0]
    }

    pub fn take(&mut self, v: Var) -> Tensor<R> {
        std::mem::replace(&mut self.values[v.0], Tensor::zeros(0, 0, 0))
    }

    pub fn input(&mut self, x: Tensor<R>) -> Var {
        self.push(x, Node::Input)
    }

    pub fn conv3(&mut self, x: Var, w: usize, b: usize, p: &ParamSet<R>) -> Var {
        let (out, cols) = ops::conv3_forward(self.value(x), p.get(w), p.get(b));
        let cols = if self.record { cols } else { Vec::new() };
        self.push(out, Node::Conv3 { x: x.0, w, b, cols })
    }

    pub fn conv1(&mut self, x: Var, w: usize, b: usize, p: &ParamSet<R>) -> Var {
        let out = ops::conv1_forward(self.value(x), p.get(w), p.get(b));
        self.push(out, Node::Conv1 { x: x.0, w, b })
    }

    pub fn convt(&mut self, x: Var, w: usize, b: usize, p: &ParamSet<R>) -> Var {
        let out = ops::convt_forward(self.value(x), p.get(w), p.get(b));
        self.push(out, Node::ConvT { x: x.0, w, b })
    }

    pub fn pool(&mut self, x: Var) -> Var {
        let out = ops::avgpool2(self.value(x));
        self.push(out, Node::Pool { x: x.0 })
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let out = ops::relu(self.value(x));
        self.push(out, Node::Relu { x: x.0 })
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let out = ops::add(self.value(a), self.value(b));
        self.push(out, Node::Add { a: a.0, b: b.0 })
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        if parts.len() == 1 {
            return parts[0];
        }
        let refs: Vec<&Tensor<R>> = parts.iter().map(|v| self.value(*v)).collect();
        let out = ops::concat(&refs);
        self.push(
            out,
            Node::Concat {
                parts: parts.iter().map(|v| v.0).collect(),
            },
        )
    }

    pub fn mean4(&mut self, parts: [Var; 4]) -> Var {
        let out = ops::mean4(parts.map(|v| self.value(v)));
        self.push(
            out,
            Node::Mean4 {
                parts: parts.map(|v| v.0),
            },
        )
    }

    /// Propagates `seeds` (gradients of a scalar with respect to recorded
    /// values) back through the tape, accumulating into `grads`.
    pub fn backward(&self, seeds: Vec<(Var, Tensor<R>)>, params: &ParamSet<R>, grads: &mut [Vec<R>]) {
        assert!(self.record, "backward on a tape recorded without gradients");
        let mut g: Vec<Option<Tensor<R>>> = (0..self.values.len()).map(|_| None).collect();
        fn acc<R: Real>(g: &mut [Option<Tensor<R>>], i: usize, d: Tensor<R>) {
            match &mut g[i] {
                Some(t) => {
                    for (a, b) in t.data.iter_mut().zip(&d.data) {
                        *a = *a + *b;
                    }
                }
                slot => *slot = Some(d),
            }
        }
        for (v, t) in seeds {
            acc(&mut g, v.0, t);
        }
        for i in (0..self.nodes.len()).rev() {
            let Some(dout) = g[i].take() else { continue };
            match &self.nodes[i] {
                Node::Input => {}
                Node::Conv3 { x, w, b, cols } => {
                    let cin = self.values[*x].c;
                    let (gw, gb) = two_mut(grads, *w, *b);
                    let dx = ops::conv3_backward(&dout, cols, params.get(*w), cin, gw, gb);
                    acc(&mut g, *x, dx);
                }
                Node::Conv1 { x, w, b } => {
                    let (gw, gb) = two_mut(grads, *w, *b);
                    let dx = ops::conv1_backward(&dout, &self.values[*x], params.get(*w), gw, gb);
                    acc(&mut g, *x, dx);
                }
                Node::ConvT { x, w, b } => {
                    let (gw, gb) = two_mut(grads, *w, *b);
                    let dx = ops::convt_backward(&dout, &self.values[*x], params.get(*w), gw, gb);
                    acc(&mut g, *x, dx);
                }
                Node::Pool { x } => acc(&mut g, *x, ops::avgpool2_backward(&dout)),
                Node::Relu { x } => acc(&mut g, *x, ops::relu_backward(&dout, &self.values[i])),
                Node::Add { a, b } => {
                    acc(&mut g, *b, dout.clone());
                    acc(&mut g, *a, dout);
                }
                Node::Concat { parts } => {
                    let plane = dout.plane();
                    let mut offset = 0;
                    for &p in parts {
                        let t = &self.values[p];
                        let n = t.c * plane;
                        let d = Tensor::from_vec(t.c, t.h, t.w, dout.data[offset..offset + n].to_vec());
                        offset += n;
                        acc(&mut g, p, d);
                    }
                }
                Node::Mean4 { parts } => {
                    let quarter = R::from_f64_lossy(0.25);
                    let d = dout.map(|v| v * quarter);
                    for &p in parts {
                        acc(&mut g, p, d.clone());
                    }
                }
            }
        }
    }
}

fn two_mut<R>(v: &mut [Vec<R>], a: usize, b: usize) -> (&mut [R], &mut [R]) {
    assert!(a < b, "weight precedes its bias");
    let (lo, hi) = v.split_at_mut(b);
    (&mut lo[a], &mut hi[0])
}
