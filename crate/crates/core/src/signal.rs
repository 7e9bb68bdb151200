//! Multi-channel signals `R^{[C]×G}` in channel-major flat layout, plus the
//! coordinate projection and the vectorised shift.
//!
//! The layout is frozen: `value(i, g)` lives at flat index `i·|G| + g`. Under
//! it, reading a channel signal as the flat input of a fully-connected layer
//! is a no-op reinterpretation, and all serialization uses the same order.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::group::{same_group, FiniteGroup, GroupSignal};

/// An element of `R^{[C]×G}`: `channels` rows of one scalar per group element.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSignal {
    group: Arc<FiniteGroup>,
    channels: usize,
    values: Vec<f64>, // channel-major, length channels·|G|
}

impl ChannelSignal {
    pub fn new(group: Arc<FiniteGroup>, channels: usize, values: Vec<f64>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::InvalidParameter(
                "channel count must be at least 1".into(),
            ));
        }
        if values.len() != channels * group.order() {
            return Err(Error::IncompatibleOperands(format!(
                "expected {} values for {} channels on a group of order {}, got {}",
                channels * group.order(),
                channels,
                group.order(),
                values.len()
            )));
        }
        Ok(ChannelSignal {
            group,
            channels,
            values,
        })
    }

    pub fn zeros(group: Arc<FiniteGroup>, channels: usize) -> Result<Self> {
        let len = channels * group.order();
        ChannelSignal::new(group, channels, vec![0.0; len])
    }

    /// Stacks per-channel signals (all on the same group) into one value.
    pub fn from_channels(channels: &[GroupSignal]) -> Result<Self> {
        let first = channels.first().ok_or_else(|| {
            Error::InvalidParameter("at least one channel is required".into())
        })?;
        let group = Arc::clone(first.group());
        let mut values = Vec::with_capacity(channels.len() * group.order());
        for channel in channels {
            if !same_group(channel.group(), &group) {
                return Err(Error::IncompatibleOperands(
                    "channels live on different groups".into(),
                ));
            }
            values.extend_from_slice(channel.values());
        }
        ChannelSignal::new(group, channels.len(), values)
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// The flat channel-major view (also the FNN input layout).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, channel: usize, g: usize) -> f64 {
        self.values[channel * self.group.order() + g]
    }

    /// The `i`-th row of the channel-major layout.
    pub fn channel(&self, i: usize) -> Result<GroupSignal> {
        if i >= self.channels {
            return Err(Error::InvalidParameter(format!(
                "channel {i} out of range for {} channels",
                self.channels
            )));
        }
        let n = self.group.order();
        GroupSignal::new(
            Arc::clone(&self.group),
            self.values[i * n..(i + 1) * n].to_vec(),
        )
    }

    /// Projection onto the `g`-th spatial coordinate: `(x_{i,g})_i`.
    pub fn project(&self, g: usize) -> Result<Vec<f64>> {
        let n = self.group.order();
        if g >= n {
            return Err(Error::InvalidParameter(format!(
                "element {g} out of range for group of order {n}"
            )));
        }
        Ok((0..self.channels).map(|i| self.values[i * n + g]).collect())
    }

    /// Vectorised shift: applies the group shift independently to every
    /// channel. A pure coordinate permutation of the flat vector.
    pub fn shift(&self, g: usize) -> Result<ChannelSignal> {
        let n = self.group.order();
        if g >= n {
            return Err(Error::InvalidParameter(format!(
                "shift element {g} out of range for group of order {n}"
            )));
        }
        let g_inv = self.group.inverse(g);
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..self.channels {
            let base = i * n;
            for h in 0..n {
                values.push(self.values[base + self.group.mul(g_inv, h)]);
            }
        }
        Ok(ChannelSignal {
            group: Arc::clone(&self.group),
            channels: self.channels,
            values,
        })
    }
}

/// A map `R^{[C_in]×G} → R^{[C_out]×G}` over a fixed group — the shape on
/// which translation equivariance is defined.
pub trait ChannelMap {
    fn group(&self) -> &Arc<FiniteGroup>;
    fn in_channels(&self) -> usize;
    fn out_channels(&self) -> usize;
    fn apply(&self, x: &ChannelSignal) -> Result<ChannelSignal>;
}
