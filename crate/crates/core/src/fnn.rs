//! Fully-connected network IR: a sequence of affine layers with a
//! component-wise activation between them (none after the last layer).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::affine::AffineMap;
use crate::error::{Error, Result};
use crate::group::{same_group, FiniteGroup};
use crate::signal::{ChannelMap, ChannelSignal};

/// The closed activation registry. Networks carry a registry name rather
/// than user code, so serialized files stay portable and realisations are
/// reproducible across implementations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
    LeakyRelu { alpha: f64 },
    Tanh,
}

impl Activation {
    /// The scalar rule, applied strictly component-wise.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::LeakyRelu { alpha } => {
                if x >= 0.0 {
                    x
                } else {
                    alpha * x
                }
            }
            Activation::Tanh => x.tanh(),
        }
    }

    pub fn eval_vec(&self, xs: &mut [f64]) {
        if matches!(self, Activation::Identity) {
            return;
        }
        for x in xs.iter_mut() {
            *x = self.eval(*x);
        }
    }
}

/// A fully-connected network over a finite group. The first layer consumes
/// the channel-major flattening of `R^{[C0]×G}`; every layer's column count
/// must match its predecessor's row count.
#[derive(Debug, Clone, PartialEq)]
pub struct Fnn {
    group: Arc<FiniteGroup>,
    input_channels: usize,
    layers: Vec<AffineMap>,
    activation: Activation,
}

impl Fnn {
    pub fn new(
        group: Arc<FiniteGroup>,
        input_channels: usize,
        layers: Vec<AffineMap>,
        activation: Activation,
    ) -> Result<Self> {
        if input_channels == 0 {
            return Err(Error::InvalidParameter(
                "input channel count must be at least 1".into(),
            ));
        }
        let first = layers.first().ok_or_else(|| {
            Error::InvalidStructure("a network needs at least one layer".into())
        })?;
        let expected = input_channels * group.order();
        if first.cols() != expected {
            return Err(Error::InvalidStructure(format!(
                "layer 1 has {} columns but the input space has dimension {} ({} channels × group order {})",
                first.cols(),
                expected,
                input_channels,
                group.order()
            )));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[1].cols() != pair[0].rows() {
                return Err(Error::InvalidStructure(format!(
                    "layer {} has {} columns but layer {} has {} rows",
                    i + 2,
                    pair[1].cols(),
                    i + 1,
                    pair[0].rows()
                )));
            }
        }
        Ok(Fnn {
            group,
            input_channels,
            layers,
            activation,
        })
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn input_channels(&self) -> usize {
        self.input_channels
    }

    pub fn layers(&self) -> &[AffineMap] {
        &self.layers
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("at least one layer").rows()
    }

    /// The architecture tuple `(C0·|G|, N_1, …, N_L)`.
    pub fn architecture(&self) -> Vec<usize> {
        let mut arch = Vec::with_capacity(self.layers.len() + 1);
        arch.push(self.input_channels * self.group.order());
        arch.extend(self.layers.iter().map(|l| l.rows()));
        arch
    }

    /// Forward evaluation: activation after every layer except the last.
    pub fn realize(&self, x: &ChannelSignal) -> Result<Vec<f64>> {
        if !same_group(x.group(), &self.group) {
            return Err(Error::IncompatibleOperands(
                "input lives on a different group".into(),
            ));
        }
        if x.channels() != self.input_channels {
            return Err(Error::IncompatibleOperands(format!(
                "input has {} channels, network expects {}",
                x.channels(),
                self.input_channels
            )));
        }
        self.realize_flat(x.values())
    }

    /// Forward evaluation from an already-flattened input.
    pub fn realize_flat(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut current = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            current = layer.apply(&current)?;
            if i < last {
                self.activation.eval_vec(&mut current);
            }
        }
        Ok(current)
    }

    /// `W(Φ)`: the sum of per-layer ℓ⁰ norms.
    pub fn weight_count(&self) -> usize {
        self.layers.iter().map(AffineMap::l0_norm).sum()
    }

    /// `N(Φ) = C0·|G| + Σ N_ℓ`.
    pub fn neuron_count(&self) -> usize {
        self.input_channels * self.group.order()
            + self.layers.iter().map(AffineMap::rows).sum::<usize>()
    }

    /// Every stored weight: matrix triplets plus all (dense) bias entries.
    pub fn weights(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.extend(layer.entries().iter().map(|&(_, _, v)| v));
            out.extend_from_slice(layer.bias());
        }
        out
    }

    /// Admits the network to equivariance checking by declaring how its
    /// output splits into `out_channels × G`. Fails unless
    /// `N_L = out_channels·|G|`.
    pub fn as_channel_map(&self, out_channels: usize) -> Result<FnnChannelView<'_>> {
        if out_channels == 0 || self.output_dim() != out_channels * self.group.order() {
            return Err(Error::InvalidStructure(format!(
                "output dimension {} is not {} channels × group order {}",
                self.output_dim(),
                out_channels,
                self.group.order()
            )));
        }
        Ok(FnnChannelView {
            net: self,
            out_channels,
        })
    }
}

/// An FNN reinterpreted as a map `R^{[C0]×G} → R^{[N]×G}` via the frozen
/// channel-major layout.
#[derive(Debug, Clone)]
pub struct FnnChannelView<'a> {
    net: &'a Fnn,
    out_channels: usize,
}

impl ChannelMap for FnnChannelView<'_> {
    fn group(&self) -> &Arc<FiniteGroup> {
        self.net.group()
    }

    fn in_channels(&self) -> usize {
        self.net.input_channels()
    }

    fn out_channels(&self) -> usize {
        self.out_channels
    }

    fn apply(&self, x: &ChannelSignal) -> Result<ChannelSignal> {
        let flat = self.net.realize(x)?;
        ChannelSignal::new(Arc::clone(self.net.group()), self.out_channels, flat)
    }
}
