// SPDX-License-Identifier: Apache-2.0

//! Shared-trunk policy/value network.
//!
//! ```text
//! input [C, H, W] -> conv3x3 + relu -> residual blocks (trunk)
//!   value:   spatial mean -> fc -> V
//!   density: spatial mean -> fc -> (mean, raw std)
//!   spatial: residual blocks -> conv1x1 -> 2 channels -> avg pool to A x A
//!            -> (mean, raw std) per action cell
//! ```
//!
//! A residual block computes `relu(h + conv_k(relu(... relu(conv_1(h)))))`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::nn::layers::{
    avg_pool_backward, avg_pool_forward, conv2d_backward, conv2d_forward, fc_backward, fc_forward, mean_pool_backward,
    mean_pool_forward, relu_backward, relu_forward,
};
use crate::nn::{mismatch, Params, Real, ShapeError, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionSpace {
    DensityWeight,
    Spatial,
}

impl ActionSpace {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "density" | "density_weight" => Some(ActionSpace::DensityWeight),
            "spatial" | "spatial_cost" => Some(ActionSpace::Spatial),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkConfig {
    pub in_channels: usize,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub trunk_blocks: usize,
    pub head_blocks: usize,
    pub convs_per_block: usize,
    pub action_grid: usize,
    pub action_space: ActionSpace,
    /// Initial density-head mean; `atanh(0.5)` starts the schedule
    /// multiplier at the top of its usual heuristic range.
    pub density_mean_bias: f64,
    pub init_seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            in_channels: 11,
            height: 32,
            width: 32,
            channels: 16,
            trunk_blocks: 3,
            head_blocks: 2,
            convs_per_block: 1,
            action_grid: 8,
            action_space: ActionSpace::DensityWeight,
            density_mean_bias: 0.5f64.atanh(),
            init_seed: 0,
        }
    }
}

impl NetworkConfig {
    /// Entries in the mean (and std) output.
    pub fn action_dims(&self) -> usize {
        match self.action_space {
            ActionSpace::DensityWeight => 1,
            ActionSpace::Spatial => self.action_grid * self.action_grid,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Output<T> {
    pub value: T,
    pub mean: Vec<T>,
    pub raw_std: Vec<T>,
}

/// Upstream gradients on the network outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputGrad<T> {
    pub value: T,
    pub mean: Vec<T>,
    pub raw_std: Vec<T>,
}

#[derive(Debug, Clone)]
struct BlockCache<T> {
    /// Inputs of each conv (the first is the block input).
    inputs: Vec<Tensor<T>>,
    out: Tensor<T>,
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Cache<T> {
    x: Tensor<T>,
    stem: Tensor<T>,
    trunk: Vec<BlockCache<T>>,
    pooled: Tensor<T>,
    head: Vec<BlockCache<T>>,
    head_in: Option<Tensor<T>>,
}

#[derive(Debug, Clone)]
pub struct Network {
    pub cfg: NetworkConfig,
}

fn conv_names(prefix: &str, blocks: usize, convs: usize) -> Vec<Vec<String>> {
    (0..blocks)
        .map(|b| (0..convs).map(|k| format!("{prefix}.{b}.conv{k}")).collect())
        .collect()
}

impl Network {
    pub fn new(cfg: NetworkConfig) -> Self {
        assert!(cfg.convs_per_block >= 1, "residual blocks need a conv");
        assert!(cfg.height % cfg.action_grid == 0 && cfg.width % cfg.action_grid == 0, "action grid must divide the state grid");
        Network { cfg }
    }

    /// Seeded He-style initialisation. The last conv of every residual
    /// block and the output layers start small.
    pub fn init<T: Real>(&self) -> Params<T> {
        let c = &self.cfg;
        let f = c.channels;
        let mut rng = ChaCha8Rng::seed_from_u64(c.init_seed);
        let mut p = Params::new();
        let mut normal = |shape: &[usize], sd: f64| {
            let n = Normal::new(0.0, sd).expect("positive sd");
            let len = shape.iter().product();
            Tensor::from_vec(shape, (0..len).map(|_| T::of(n.sample(&mut rng))).collect()).expect("shape")
        };
        let he = |fan_in: usize| (2.0 / fan_in as f64).sqrt();

        p.push("stem.w", normal(&[f, c.in_channels, 3, 3], he(9 * c.in_channels)));
        p.push("stem.b", Tensor::zeros(&[f]));
        let mut blocks = conv_names("trunk", c.trunk_blocks, c.convs_per_block);
        if c.action_space == ActionSpace::Spatial {
            blocks.extend(conv_names("spatial", c.head_blocks, c.convs_per_block));
        }
        for block in &blocks {
            for (k, name) in block.iter().enumerate() {
                let sd = he(9 * f) * if k + 1 == block.len() { 0.1 } else { 1.0 };
                p.push(format!("{name}.w"), normal(&[f, f, 3, 3], sd));
                p.push(format!("{name}.b"), Tensor::zeros(&[f]));
            }
        }
        p.push("value.w", normal(&[1, f], 0.01));
        p.push("value.b", Tensor::zeros(&[1]));
        match c.action_space {
            ActionSpace::DensityWeight => {
                p.push("density.w", normal(&[2, f], 0.01));
                let b = vec![T::of(c.density_mean_bias), T::zero()];
                p.push("density.b", Tensor::from_vec(&[2], b).expect("shape"));
            }
            ActionSpace::Spatial => {
                p.push("spatial.out.w", normal(&[2, f, 1, 1], 0.01));
                p.push("spatial.out.b", Tensor::zeros(&[2]));
            }
        }
        p
    }

    fn param<'a, T: Real>(params: &'a Params<T>, name: &str) -> &'a Tensor<T> {
        params.get(name).unwrap_or_else(|| panic!("missing parameter {name}"))
    }

    fn block_forward<T: Real>(&self, params: &Params<T>, names: &[String], h: Tensor<T>) -> Result<BlockCache<T>, ShapeError> {
        let mut inputs = vec![h];
        let mut z = None;
        for (k, name) in names.iter().enumerate() {
            let w = Self::param(params, &format!("{name}.w"));
            let b = Self::param(params, &format!("{name}.b"));
            let out = conv2d_forward(inputs.last().expect("nonempty"), w, b)?;
            if k + 1 < names.len() {
                inputs.push(relu_forward(&out));
            } else {
                z = Some(out);
            }
        }
        let mut out = z.expect("at least one conv");
        for (o, x) in out.data.iter_mut().zip(&inputs[0].data) {
            *o = (*o + *x).max(T::zero());
        }
        Ok(BlockCache { inputs, out })
    }

    /// Returns the gradient on the block input and adds parameter
    /// gradients into `grads`.
    fn block_backward<T: Real>(
        &self,
        params: &Params<T>,
        names: &[String],
        cache: &BlockCache<T>,
        grad_out: &Tensor<T>,
        grads: &mut Params<T>,
    ) -> Result<Tensor<T>, ShapeError> {
        let g_sum = relu_backward(&cache.out, grad_out);
        let mut g = g_sum.clone();
        for k in (0..names.len()).rev() {
            let name = &names[k];
            let w = Self::param(params, &format!("{name}.w"));
            let b = Self::param(params, &format!("{name}.b"));
            let cg = conv2d_backward(&cache.inputs[k], w, b, &g)?;
            add_grad(grads, &format!("{name}.w"), &cg.weight);
            add_grad(grads, &format!("{name}.b"), &cg.bias);
            g = if k > 0 { relu_backward(&cache.inputs[k], &cg.input) } else { cg.input };
        }
        for (a, s) in g.data.iter_mut().zip(&g_sum.data) {
            *a += *s;
        }
        Ok(g)
    }

    pub fn forward<T: Real>(&self, params: &Params<T>, x: &Tensor<T>) -> Result<(Output<T>, Cache<T>), ShapeError> {
        let c = &self.cfg;
        let expect = [c.in_channels, c.height, c.width];
        if x.shape != expect {
            return Err(mismatch("network input", &expect, &x.shape));
        }
        let stem = relu_forward(&conv2d_forward(x, Self::param(params, "stem.w"), Self::param(params, "stem.b"))?);
        let mut trunk = Vec::with_capacity(c.trunk_blocks);
        let mut h = stem.clone();
        for names in conv_names("trunk", c.trunk_blocks, c.convs_per_block) {
            let bc = self.block_forward(params, &names, h)?;
            h = bc.out.clone();
            trunk.push(bc);
        }
        let pooled = mean_pool_forward(&h);
        let value = fc_forward(&pooled, Self::param(params, "value.w"), Self::param(params, "value.b"))?.data[0];

        let mut head = Vec::new();
        let mut head_in = None;
        let (mean, raw_std) = match c.action_space {
            ActionSpace::DensityWeight => {
                let o = fc_forward(&pooled, Self::param(params, "density.w"), Self::param(params, "density.b"))?;
                (vec![o.data[0]], vec![o.data[1]])
            }
            ActionSpace::Spatial => {
                let mut g = h;
                for names in conv_names("spatial", c.head_blocks, c.convs_per_block) {
                    let bc = self.block_forward(params, &names, g)?;
                    g = bc.out.clone();
                    head.push(bc);
                }
                let o = conv2d_forward(&g, Self::param(params, "spatial.out.w"), Self::param(params, "spatial.out.b"))?;
                head_in = Some(g);
                let pooled = avg_pool_forward(&o, c.action_grid)?;
                let n = c.action_grid * c.action_grid;
                (pooled.data[..n].to_vec(), pooled.data[n..].to_vec())
            }
        };
        Ok((
            Output { value, mean, raw_std },
            Cache {
                x: x.clone(),
                stem,
                trunk,
                pooled,
                head,
                head_in,
            },
        ))
    }

    /// Parameter gradients for the given output gradients.
    pub fn backward<T: Real>(&self, params: &Params<T>, cache: &Cache<T>, grad: &OutputGrad<T>) -> Result<Params<T>, ShapeError> {
        let c = &self.cfg;
        let mut grads = params.zeros_like();
        let trunk_out = cache.trunk.last().map(|b| &b.out).unwrap_or(&cache.stem);

        let gv = Tensor::from_vec(&[1], vec![grad.value])?;
        let (gp_v, gw, gb) = fc_backward(&cache.pooled, Self::param(params, "value.w"), &gv)?;
        add_grad(&mut grads, "value.w", &gw);
        add_grad(&mut grads, "value.b", &gb);
        let mut g_pooled = gp_v;

        let mut g_trunk = match c.action_space {
            ActionSpace::DensityWeight => {
                let go = Tensor::from_vec(&[2], vec![grad.mean[0], grad.raw_std[0]])?;
                let (gp, gw, gb) = fc_backward(&cache.pooled, Self::param(params, "density.w"), &go)?;
                add_grad(&mut grads, "density.w", &gw);
                add_grad(&mut grads, "density.b", &gb);
                for (a, b) in g_pooled.data.iter_mut().zip(&gp.data) {
                    *a += *b;
                }
                Tensor::zeros(&trunk_out.shape)
            }
            ActionSpace::Spatial => {
                let a = c.action_grid;
                let mut gpool = grad.mean.clone();
                gpool.extend_from_slice(&grad.raw_std);
                let gpool = Tensor::from_vec(&[2, a, a], gpool)?;
                let go = avg_pool_backward(&[2, c.height, c.width], a, &gpool);
                let head_in = cache.head_in.as_ref().expect("spatial cache");
                let cg = conv2d_backward(head_in, Self::param(params, "spatial.out.w"), Self::param(params, "spatial.out.b"), &go)?;
                add_grad(&mut grads, "spatial.out.w", &cg.weight);
                add_grad(&mut grads, "spatial.out.b", &cg.bias);
                let mut g = cg.input;
                let names = conv_names("spatial", c.head_blocks, c.convs_per_block);
                for (bc, names) in cache.head.iter().zip(&names).rev() {
                    g = self.block_backward(params, names, bc, &g, &mut grads)?;
                }
                g
            }
        };
        let gm = mean_pool_backward(&trunk_out.shape, &g_pooled);
        for (a, b) in g_trunk.data.iter_mut().zip(&gm.data) {
            *a += *b;
        }

        let names = conv_names("trunk", c.trunk_blocks, c.convs_per_block);
        for (bc, names) in cache.trunk.iter().zip(&names).rev() {
            g_trunk = self.block_backward(params, names, bc, &g_trunk, &mut grads)?;
        }
        let g_stem = relu_backward(&cache.stem, &g_trunk);
        let cg = conv2d_backward(&cache.x, Self::param(params, "stem.w"), Self::param(params, "stem.b"), &g_stem)?;
        add_grad(&mut grads, "stem.w", &cg.weight);
        add_grad(&mut grads, "stem.b", &cg.bias);
        Ok(grads)
    }
}

fn add_grad<T: Real>(grads: &mut Params<T>, name: &str, g: &Tensor<T>) {
    let i = grads.names.iter().position(|n| n == name).unwrap_or_else(|| panic!("missing gradient slot {name}"));
    for (a, b) in grads.tensors[i].data.iter_mut().zip(&g.data) {
        *a += *b;
    }
}
