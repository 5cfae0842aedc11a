//! Residual UNet++ with cross-scale pooled skips and four averaged heads.
//!
//! Nodes `X^{i,j}` (depth `i`, nesting `j`, `i + j <= depth`) each hold two
//! residual blocks. Encoder node `X^{i,0}` reads the concatenation of
//! every shallower encoder node average-pooled down to depth `i`. Nested
//! node `X^{i,j}` reads `X^{i,0} .. X^{i,j-1}` and the transposed-conv
//! upsampling of `X^{i+1,j-1}`. Head `k` in `1..=4` is a 1x1 convolution
//! on `X^{0, ceil(k * depth / 4)}`; the output is the mean of the heads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::param::{ParamSet, ParamSpec};
use super::real::Real;
use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::error::{DuneError, Result};

pub const HEAD_COUNT: usize = 4;
pub const BLOCKS_PER_NODE: usize = 2;
pub const FILTER_SIZE: usize = 3;

/// Per-level widths at desk scale.
pub const DESK_WIDTHS: [usize; 5] = [8, 16, 32, 64, 128];
/// Per-level widths of the full-scale configuration.
pub const FULL_SCALE_WIDTHS: [usize; 5] = [64, 128, 256, 512, 1024];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Number of 2x downsamplings.
    pub depth: usize,
    /// Channel width at each depth, `depth + 1` entries, strictly increasing.
    pub widths: Vec<usize>,
    /// `2W + 5`.
    pub in_channels: usize,
    /// `W`: one output channel per target step.
    pub out_channels: usize,
    pub n_lat: usize,
    pub n_lon: usize,
}

impl ModelConfig {
    /// Desk-scale widths truncated to `depth`.
    pub fn desk(window: usize, depth: usize, n_lat: usize, n_lon: usize) -> Self {
        Self {
            depth,
            widths: DESK_WIDTHS[..=depth.min(4)].to_vec(),
            in_channels: crate::ingest::channel_count(window),
            out_channels: window,
            n_lat,
            n_lon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(DuneError::Config("depth must be at least 1".into()));
        }
        if self.widths.len() != self.depth + 1 {
            return Err(DuneError::Config(format!(
                "{} widths for depth {}",
                self.widths.len(),
                self.depth
            )));
        }
        if self.widths[0] == 0 || self.widths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(DuneError::Config(
                "channel widths must be positive and strictly increasing".into(),
            ));
        }
        if self.in_channels == 0 || self.out_channels == 0 {
            return Err(DuneError::Config("channel counts must be positive".into()));
        }
        let f = 1 << self.depth;
        if !self.n_lat.is_multiple_of(f) || !self.n_lon.is_multiple_of(f) {
            return Err(DuneError::InvalidGrid(format!(
                "{}x{} is not divisible by 2^{}",
                self.n_lat, self.n_lon, self.depth
            )));
        }
        Ok(())
    }

    /// Nesting index of the node feeding head `k` (0-based).
    pub fn head_node(&self, k: usize) -> usize {
        ((k + 1) * self.depth).div_ceil(HEAD_COUNT)
    }
}

#[derive(Clone, Copy, Debug)]
struct ConvIds {
    w: usize,
    b: usize,
}

#[derive(Clone, Debug)]
struct BlockIds {
    a: ConvIds,
    b: ConvIds,
    shortcut: Option<ConvIds>,
}

#[derive(Clone, Debug)]
struct NodeIds {
    i: usize,
    j: usize,
    in_channels: usize,
    blocks: Vec<BlockIds>,
    /// Transposed convolution from `X^{i+1,j-1}` (nested nodes only).
    up: Option<ConvIds>,
}

/// Read-only description of the node graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeInfo {
    pub i: usize,
    pub j: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub residual_blocks: usize,
    pub height: usize,
    pub width: usize,
    /// Names of the concatenated inputs, e.g. `pool2(X^{0,0})`.
    pub inputs: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeGraph {
    pub nodes: Vec<NodeInfo>,
    /// `(i, j)` of the node under each head.
    pub heads: Vec<(usize, usize)>,
}

/// Parameters are stored in a [`ParamSet`]; the network holds the
/// layout only and is shared freely across threads.
#[derive(Clone, Debug)]
pub struct Dune {
    config: ModelConfig,
    specs: Vec<ParamSpec>,
    nodes: Vec<NodeIds>,
    heads: Vec<ConvIds>,
}

pub struct ForwardOutput<R> {
    pub heads: [Tensor<R>; HEAD_COUNT],
    pub mean: Tensor<R>,
}

struct Builder {
    specs: Vec<ParamSpec>,
}

impl Builder {
    fn conv(&mut self, name: String, shape: Vec<usize>, fan_in: usize, bias: usize) -> ConvIds {
        self.specs.push(ParamSpec {
            name: format!("{name}.weight"),
            shape,
            fan_in: Some(fan_in),
        });
        self.specs.push(ParamSpec {
            name: format!("{name}.bias"),
            shape: vec![bias],
            fan_in: None,
        });
        let n = self.specs.len();
        ConvIds { w: n - 2, b: n - 1 }
    }

    fn conv3(&mut self, name: String, cin: usize, cout: usize) -> ConvIds {
        self.conv(name, vec![cout, cin, 3, 3], cin * 9, cout)
    }

    fn conv1(&mut self, name: String, cin: usize, cout: usize) -> ConvIds {
        self.conv(name, vec![cout, cin], cin, cout)
    }

    fn convt(&mut self, name: String, cin: usize, cout: usize) -> ConvIds {
        self.conv(name, vec![cin, cout, 2, 2], cin, cout)
    }

    fn block(&mut self, name: String, cin: usize, cout: usize) -> BlockIds {
        BlockIds {
            a: self.conv3(format!("{name}.conv_a"), cin, cout),
            b: self.conv3(format!("{name}.conv_b"), cout, cout),
            shortcut: (cin != cout).then(|| self.conv1(format!("{name}.shortcut"), cin, cout)),
        }
    }

    fn node(&mut self, i: usize, j: usize, cin: usize, cout: usize, up_from: Option<usize>) -> NodeIds {
        let name = format!("x{i}{j}");
        let up = up_from.map(|c| self.convt(format!("{name}.up"), c, cout));
        let mut blocks = vec![self.block(format!("{name}.block0"), cin, cout)];
        for b in 1..BLOCKS_PER_NODE {
            blocks.push(self.block(format!("{name}.block{b}"), cout, cout));
        }
        NodeIds {
            i,
            j,
            in_channels: cin,
            blocks,
            up,
        }
    }
}

impl Dune {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let w = &config.widths;
        let d = config.depth;
        let mut b = Builder { specs: Vec::new() };
        let mut nodes = vec![b.node(0, 0, config.in_channels, w[0], None)];
        for i in 1..=d {
            let cin = w[..i].iter().sum();
            nodes.push(b.node(i, 0, cin, w[i], None));
        }
        for j in 1..=d {
            for i in 0..=d - j {
                nodes.push(b.node(i, j, (j + 1) * w[i], w[i], Some(w[i + 1])));
            }
        }
        let heads = (0..HEAD_COUNT)
            .map(|k| b.conv1(format!("head{k}"), w[0], config.out_channels))
            .collect();
        Ok(Self {
            config,
            specs: b.specs,
            nodes,
            heads,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn param_specs(&self) -> &[ParamSpec] {
        &self.specs
    }

    pub fn param_count(&self) -> usize {
        self.specs.iter().map(ParamSpec::len).sum()
    }

    pub fn zero_params<R: Real>(&self) -> ParamSet<R> {
        ParamSet::zeros(self.specs.clone())
    }

    /// Kaiming-normal weights (`std = sqrt(2 / fan_in)`), zero biases,
    /// drawn in layout order from a seeded stream.
    pub fn init_params<R: Real>(&self, seed: u64) -> ParamSet<R> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = self.zero_params::<R>();
        for (spec, values) in p.specs.iter().zip(p.values.iter_mut()) {
            if let Some(fan_in) = spec.fan_in {
                let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
                for v in values.iter_mut() {
                    *v = R::from_f64_lossy(normal.sample(&mut rng));
                }
            }
        }
        p
    }

    pub fn graph(&self) -> NodeGraph {
        let w = &self.config.widths;
        let nodes = self
            .nodes
            .iter()
            .map(|n| {
                let inputs = if n.j == 0 && n.i == 0 {
                    vec!["input".to_string()]
                } else if n.j == 0 {
                    (0..n.i).map(|k| format!("pool{}(X^{{{k},0}})", n.i - k)).collect()
                } else {
                    let mut v: Vec<String> = (0..n.j).map(|q| format!("X^{{{},{q}}}", n.i)).collect();
                    v.push(format!("up(X^{{{},{}}})", n.i + 1, n.j - 1));
                    v
                };
                NodeInfo {
                    i: n.i,
                    j: n.j,
                    in_channels: n.in_channels,
                    out_channels: w[n.i],
                    residual_blocks: n.blocks.len(),
                    height: self.config.n_lat >> n.i,
                    width: self.config.n_lon >> n.i,
                    inputs,
                }
            })
            .collect();
        NodeGraph {
            nodes,
            heads: (0..HEAD_COUNT).map(|k| (0, self.config.head_node(k))).collect(),
        }
    }

    fn block<R: Real>(&self, t: &mut Tape<R>, p: &ParamSet<R>, b: &BlockIds, x: Var) -> Var {
        let h = t.conv3(x, b.a.w, b.a.b, p);
        let h = t.relu(h);
        let h = t.conv3(h, b.b.w, b.b.b, p);
        let s = match b.shortcut {
            Some(c) => t.conv1(x, c.w, c.b, p),
            None => x,
        };
        let sum = t.add(h, s);
        t.relu(sum)
    }

    fn node<R: Real>(&self, t: &mut Tape<R>, p: &ParamSet<R>, n: &NodeIds, x: Var) -> Var {
        n.blocks.iter().fold(x, |h, b| self.block(t, p, b, h))
    }

    /// Records the forward pass on `tape`; returns the head and mean outputs.
    pub fn forward_tape<R: Real>(
        &self,
        tape: &mut Tape<R>,
        p: &ParamSet<R>,
        x: Tensor<R>,
    ) -> Result<([Var; HEAD_COUNT], Var)> {
        let c = &self.config;
        if x.shape() != (c.in_channels, c.n_lat, c.n_lon) {
            return Err(DuneError::Shape(format!(
                "input {:?}, network expects ({}, {}, {})",
                x.shape(),
                c.in_channels,
                c.n_lat,
                c.n_lon
            )));
        }
        if p.specs != self.specs {
            return Err(DuneError::Shape("parameter layout does not match the network".into()));
        }
        let d = c.depth;
        let mut grid: Vec<Vec<Option<Var>>> = vec![vec![None; d + 1]; d + 1];
        let mut node_iter = self.nodes.iter();
        let input = tape.input(x);
        let n00 = node_iter.next().expect("root node");
        grid[0][0] = Some(self.node(tape, p, n00, input));
        // pooled[k] is X^{k,0} pooled down to the most recent depth
        let mut pooled: Vec<Var> = Vec::with_capacity(d);
        for i in 1..=d {
            pooled.push(grid[i - 1][0].expect("encoder order"));
            for v in pooled.iter_mut() {
                *v = tape.pool(*v);
            }
            let x = tape.concat(&pooled);
            let n = node_iter.next().expect("encoder node");
            grid[i][0] = Some(self.node(tape, p, n, x));
        }
        for n in node_iter {
            let (i, j) = (n.i, n.j);
            let up = n.up.expect("nested nodes upsample");
            let below = grid[i + 1][j - 1].expect("nested order");
            let u = tape.convt(below, up.w, up.b, p);
            let u = tape.relu(u);
            let mut parts: Vec<Var> = (0..j).map(|q| grid[i][q].expect("row order")).collect();
            parts.push(u);
            let x = tape.concat(&parts);
            grid[i][j] = Some(self.node(tape, p, n, x));
        }
        let heads: [Var; HEAD_COUNT] = std::array::from_fn(|k| {
            let h = &self.heads[k];
            let src = grid[0][c.head_node(k)].expect("head node");
            tape.conv1(src, h.w, h.b, p)
        });
        let mean = tape.mean4(heads);
        Ok((heads, mean))
    }

    /// Inference without gradient bookkeeping.
    pub fn forward<R: Real>(&self, p: &ParamSet<R>, x: Tensor<R>) -> Result<ForwardOutput<R>> {
        let mut tape = Tape::new(false);
        let (heads, mean) = self.forward_tape(&mut tape, p, x)?;
        Ok(ForwardOutput {
            heads: heads.map(|h| tape.take(h)),
            mean: tape.take(mean),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heads_at_top_row() {
        let c4 = ModelConfig::desk(1, 4, 32, 64);
        assert_eq!((0..4).map(|k| c4.head_node(k)).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        let c2 = ModelConfig::desk(1, 2, 16, 32);
        assert_eq!((0..4).map(|k| c2.head_node(k)).collect::<Vec<_>>(), vec![1, 1, 2, 2]);
    }

    #[test]
    fn config_validation() {
        let mut c = ModelConfig::desk(1, 4, 32, 64);
        assert!(c.validate().is_ok());
        c.n_lat = 24;
        assert!(c.validate().is_err());
        let mut c = ModelConfig::desk(1, 2, 16, 32);
        c.widths = vec![8, 8, 16];
        assert!(c.validate().is_err());
    }

    #[test]
    fn graph_has_two_blocks_per_node() {
        let net = Dune::new(ModelConfig::desk(3, 4, 32, 64)).unwrap();
        let g = net.graph();
        assert_eq!(g.nodes.len(), 15);
        assert!(g.nodes.iter().all(|n| n.residual_blocks == 2));
        let x30 = g.nodes.iter().find(|n| (n.i, n.j) == (3, 0)).unwrap();
        assert_eq!(x30.in_channels, 8 + 16 + 32);
        assert_eq!((x30.height, x30.width), (4, 8));
    }

    #[test]
    fn residual_block_zero_weights_is_relu_of_input() {
        let net = Dune::new(ModelConfig::desk(1, 2, 8, 8)).unwrap();
        let p = net.zero_params::<f64>();
        let x = Tensor::from_vec(8, 8, 8, (0..512).map(|i| (i as f64 * 0.37).sin()).collect());
        let mut t = Tape::new(false);
        let v = t.input(x.clone());
        let out = net.block(&mut t, &p, &net.nodes[0].blocks[1], v);
        assert_eq!(t.value(out), &super::super::ops::relu(&x));
    }
}
