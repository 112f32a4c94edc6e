//! The encoded ELM first layer: frozen random weights, shifted Gaussian
//! encoding, activations, and exact analytic derivatives of every basis
//! function up to second order in the scalar input.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent threshold beyond which `exp(-e)` is a subnormal-or-zero double;
/// Gaussian factors past it are clamped to exactly 0, which is what produces
/// the sparse banded activation matrices.
pub const UNDERFLOW_EXPONENT: f64 = 745.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    None,
    Gaussian { filter_width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Sine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightDist {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, std: f64 },
}

/// Full determinism contract for one basis: identical configs produce
/// identical bases, bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElmConfig {
    pub nodes: usize,
    pub encoding: Encoding,
    pub activation: Activation,
    pub weight_dist: WeightDist,
    pub seed: u64,
}

impl ElmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 nodes, got {}",
                self.nodes
            )));
        }
        if let Encoding::Gaussian { filter_width } = self.encoding {
            if filter_width <= 0.0 || !filter_width.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "filter width must be positive and finite, got {filter_width}"
                )));
            }
        }
        match self.weight_dist {
            WeightDist::Uniform { lo, hi } => {
                if lo >= hi || !lo.is_finite() || !hi.is_finite() {
                    return Err(Error::InvalidConfig(format!(
                        "uniform weight distribution needs finite lo < hi, got ({lo}, {hi})"
                    )));
                }
            }
            WeightDist::Normal { mean, std } => {
                if std <= 0.0 || !std.is_finite() || !mean.is_finite() {
                    return Err(Error::InvalidConfig(format!(
                        "normal weight distribution needs finite mean and positive std, got ({mean}, {std})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Frozen first layer: weights, biases, and the center grid mu_i = i/(L-1).
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedBasis {
    weights: Vec<f64>,
    biases: Vec<f64>,
    centers: Vec<f64>,
    config: ElmConfig,
}

/// One evaluation point's basis values and their first two x-derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisRow {
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub d2phi: Vec<f64>,
}

/// Draws the frozen weights and biases (all weights first, then all biases)
/// from the configured distribution using a ChaCha8 stream seeded by
/// `config.seed`, and lays the centers on the uniform grid over [0, 1].
pub fn build_basis(config: &ElmConfig) -> Result<EncodedBasis> {
    config.validate()?;
    let l = config.nodes;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let draw = |rng: &mut ChaCha8Rng, n: usize| -> Vec<f64> {
        match config.weight_dist {
            WeightDist::Uniform { lo, hi } => {
                let dist = Uniform::new(lo, hi);
                (0..n).map(|_| dist.sample(rng)).collect()
            }
            WeightDist::Normal { mean, std } => {
                let dist = Normal::new(mean, std).expect("validated parameters");
                (0..n).map(|_| dist.sample(rng)).collect()
            }
        }
    };
    let weights = draw(&mut rng, l);
    let biases = draw(&mut rng, l);
    let centers = (0..l).map(|i| i as f64 / (l - 1) as f64).collect();
    Ok(EncodedBasis {
        weights,
        biases,
        centers,
        config: config.clone(),
    })
}

/// Shifted Gaussian encoding factor `exp(-(x - center)^2 / d)`, exactly 0 once
/// the exponent crosses the underflow threshold.
pub fn encoding_value(x: f64, center: f64, d: f64) -> f64 {
    debug_assert!(d > 0.0);
    let e = (x - center) * (x - center) / d;
    if e > UNDERFLOW_EXPONENT {
        0.0
    } else {
        (-e).exp()
    }
}

/// Encoding factor together with its first two derivatives in x. All three
/// share the clamp: an underflowed factor zeroes the whole triple.
fn encoding_parts(x: f64, center: f64, d: f64) -> (f64, f64, f64) {
    let g = encoding_value(x, center, d);
    if g == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let s = x - center;
    let dg = -2.0 * s * g / d;
    let d2g = (-2.0 / d + 4.0 * s * s / (d * d)) * g;
    (g, dg, d2g)
}

impl EncodedBasis {
    /// Assembles a basis from explicit weights and biases instead of random
    /// draws; centers still follow the uniform grid. The frozen-layer
    /// invariants (lengths, finiteness) are enforced here.
    pub fn from_parts(config: ElmConfig, weights: Vec<f64>, biases: Vec<f64>) -> Result<Self> {
        config.validate()?;
        if weights.len() != config.nodes || biases.len() != config.nodes {
            return Err(Error::DimensionMismatch(format!(
                "config has {} nodes, got {} weights and {} biases",
                config.nodes,
                weights.len(),
                biases.len()
            )));
        }
        if weights.iter().chain(&biases).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "weights and biases must be finite".into(),
            ));
        }
        let l = config.nodes;
        let centers = (0..l).map(|i| i as f64 / (l - 1) as f64).collect();
        Ok(Self {
            weights,
            biases,
            centers,
            config,
        })
    }

    pub fn config(&self) -> &ElmConfig {
        &self.config
    }

    pub fn nodes(&self) -> usize {
        self.config.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Pre-activation of one node: `z = w x g(x) + b` with the encoding factor
    /// `g(x) = E(x - mu_i)`, plus dz/dx and d2z/dx2.
    ///
    /// With `encoding = none` this reduces to the vanilla ELM line
    /// `z = w x + b`, `dz = w`, `d2z = 0`.
    pub fn preactivation(&self, x: f64, node: usize) -> (f64, f64, f64) {
        let w = self.weights[node];
        let b = self.biases[node];
        match self.config.encoding {
            Encoding::None => (w * x + b, w, 0.0),
            Encoding::Gaussian { filter_width } => {
                let (g, dg, d2g) = encoding_parts(x, self.centers[node], filter_width);
                let z = w * x * g + b;
                let dz = w * (g + x * dg);
                let d2z = w * (2.0 * dg + x * d2g);
                (z, dz, d2z)
            }
        }
    }

    /// All basis values and their first two x-derivatives at `x`, with the
    /// activation's analytic derivatives chained over the pre-activation.
    pub fn basis_row(&self, x: f64) -> BasisRow {
        let l = self.config.nodes;
        let mut phi = Vec::with_capacity(l);
        let mut dphi = Vec::with_capacity(l);
        let mut d2phi = Vec::with_capacity(l);
        for node in 0..l {
            let (z, dz, d2z) = self.preactivation(x, node);
            let (p, p1, p2) = match self.config.activation {
                Activation::Tanh => {
                    let t = z.tanh();
                    let t1 = 1.0 - t * t;
                    (t, t1, -2.0 * t * t1)
                }
                Activation::Sine => (z.sin(), z.cos(), -z.sin()),
            };
            phi.push(p);
            dphi.push(p1 * dz);
            d2phi.push(p2 * dz * dz + p1 * d2z);
        }
        BasisRow { phi, dphi, d2phi }
    }

    /// Network output `u(x) = phi(x) . beta`.
    pub fn forward(&self, beta: &[f64], x: f64) -> Result<f64> {
        if beta.len() != self.config.nodes {
            return Err(Error::DimensionMismatch(format!(
                "basis has {} nodes, beta has {} entries",
                self.config.nodes,
                beta.len()
            )));
        }
        Ok(crate::linalg::dot(&self.basis_row(x).phi, beta))
    }
}
