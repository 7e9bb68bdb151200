//! Convolutional network IR over a finite group: each layer convolves every
//! input channel with a bank of filters, then combines the results with an
//! affine map applied along fixed spatial coordinates.
//!
//! Layer cost is `‖A‖_{ℓ⁰} + Σ_r ‖a_r‖_{ℓ⁰}` for the stored factorization.
//! The filter/channel pair `(r, i)` flattens r-major into the affine map's
//! column `r·C_in + i`; this order is frozen in the file format.

use std::sync::Arc;

use crate::affine::AffineMap;
use crate::error::{Error, Result};
use crate::fnn::{Activation, Fnn};
use crate::group::{same_group, FiniteGroup, GroupSignal};
use crate::signal::{ChannelMap, ChannelSignal};

/// The convolution stage of a layer: `k` filters applied to each of the
/// `in_channels` input channels, producing `k·in_channels` output channels.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteringMap {
    group: Arc<FiniteGroup>,
    in_channels: usize,
    filters: Vec<GroupSignal>,
}

impl FilteringMap {
    pub fn new(
        group: Arc<FiniteGroup>,
        in_channels: usize,
        filters: Vec<GroupSignal>,
    ) -> Result<Self> {
        if in_channels == 0 {
            return Err(Error::InvalidParameter(
                "filtering map needs at least one input channel".into(),
            ));
        }
        if filters.is_empty() {
            return Err(Error::InvalidParameter(
                "filtering map needs at least one filter".into(),
            ));
        }
        for filter in &filters {
            if !same_group(filter.group(), &group) {
                return Err(Error::IncompatibleOperands(
                    "filter lives on a different group".into(),
                ));
            }
        }
        Ok(FilteringMap {
            group,
            in_channels,
            filters,
        })
    }

    /// `k` all-zero filters.
    pub fn zero(group: Arc<FiniteGroup>, in_channels: usize, k: usize) -> Result<Self> {
        let filters = (0..k)
            .map(|_| GroupSignal::zeros(Arc::clone(&group)))
            .collect();
        FilteringMap::new(group, in_channels, filters)
    }

    /// The single-filter identity stage `x ↦ x ∗ δ`.
    pub fn delta(group: Arc<FiniteGroup>, in_channels: usize) -> Result<Self> {
        let delta = GroupSignal::delta(Arc::clone(&group));
        FilteringMap::new(group, in_channels, vec![delta])
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn filters(&self) -> &[GroupSignal] {
        &self.filters
    }

    pub fn filter_count(&self) -> usize {
        self.filters.len()
    }

    /// Output channel `(r, i)` (r-major) is `x_i ∗ a_r`.
    pub fn apply(&self, x: &ChannelSignal) -> Result<ChannelSignal> {
        if !same_group(x.group(), &self.group) {
            return Err(Error::IncompatibleOperands(
                "signal lives on a different group".into(),
            ));
        }
        if x.channels() != self.in_channels {
            return Err(Error::IncompatibleOperands(format!(
                "signal has {} channels, filtering map expects {}",
                x.channels(),
                self.in_channels
            )));
        }
        let n = self.group.order();
        let mut values = Vec::with_capacity(self.filters.len() * self.in_channels * n);
        for filter in &self.filters {
            for i in 0..self.in_channels {
                let convolved = x.channel(i)?.convolve(filter)?;
                values.extend_from_slice(convolved.values());
            }
        }
        ChannelSignal::new(
            Arc::clone(&self.group),
            self.filters.len() * self.in_channels,
            values,
        )
    }

    /// `Σ_r ‖a_r‖_{ℓ⁰}`: total exactly-nonzero filter taps.
    pub fn l0(&self) -> usize {
        self.filters.iter().map(GroupSignal::l0).sum()
    }
}

/// One convolutional layer `T = lift(affine) ∘ filtering`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    filtering: FilteringMap,
    affine: AffineMap,
}

impl ConvLayer {
    pub fn new(filtering: FilteringMap, affine: AffineMap) -> Result<Self> {
        let expected = filtering.filter_count() * filtering.in_channels();
        if affine.cols() != expected {
            return Err(Error::InvalidStructure(format!(
                "affine part has {} columns but the filtering stage produces {} channels ({} filters × {} input channels)",
                affine.cols(),
                expected,
                filtering.filter_count(),
                filtering.in_channels()
            )));
        }
        Ok(ConvLayer { filtering, affine })
    }

    pub fn filtering(&self) -> &FilteringMap {
        &self.filtering
    }

    pub fn affine(&self) -> &AffineMap {
        &self.affine
    }

    pub fn in_channels(&self) -> usize {
        self.filtering.in_channels()
    }

    pub fn out_channels(&self) -> usize {
        self.affine.rows()
    }

    pub fn filter_count(&self) -> usize {
        self.filtering.filter_count()
    }

    pub fn apply(&self, x: &ChannelSignal) -> Result<ChannelSignal> {
        self.affine.apply_lifted(&self.filtering.apply(x)?)
    }

    /// Cost of the stored factorization, `‖A‖_{ℓ⁰} + ‖B‖_{ℓ⁰_filter}` — an
    /// upper bound on the minimum over all factorizations of the same layer.
    pub fn l0(&self) -> usize {
        self.affine.l0_norm() + self.filtering.l0()
    }

    /// The layer written out as one plain affine map on channel-major
    /// flattenings: entry `[(j,g), (i,h)] = Σ_r A[j, (r,i)]·a_r(h⁻¹g)`, bias
    /// replicated across the group.
    pub fn lower(&self) -> AffineMap {
        let group = self.filtering.group();
        let n = group.order();
        let c_in = self.in_channels();
        let c_out = self.out_channels();
        let mut dense: std::collections::BTreeMap<(usize, usize), f64> =
            std::collections::BTreeMap::new();
        for &(j, col, w) in self.affine.entries() {
            let r = col / c_in;
            let i = col % c_in;
            let filter = &self.filtering.filters()[r];
            for h in 0..n {
                for (u, &tap) in filter.values().iter().enumerate() {
                    if tap != 0.0 {
                        let g = group.mul(h, u);
                        *dense.entry((j * n + g, i * n + h)).or_insert(0.0) += w * tap;
                    }
                }
            }
        }
        let entries: Vec<(usize, usize, f64)> = dense
            .into_iter()
            .filter(|&(_, v)| v != 0.0)
            .map(|((row, col), v)| (row, col, v))
            .collect();
        let mut bias = vec![0.0; c_out * n];
        for (j, &b) in self.affine.bias().iter().enumerate() {
            for g in 0..n {
                bias[j * n + g] = b;
            }
        }
        AffineMap::new(c_out * n, c_in * n, entries, bias)
            .expect("lowered indices are in range by construction")
    }
}

/// A convolutional network: a chain of conv layers with a component-wise
/// activation between them (none after the last layer).
#[derive(Debug, Clone, PartialEq)]
pub struct Cnn {
    group: Arc<FiniteGroup>,
    layers: Vec<ConvLayer>,
    activation: Activation,
}

impl Cnn {
    pub fn new(
        group: Arc<FiniteGroup>,
        layers: Vec<ConvLayer>,
        activation: Activation,
    ) -> Result<Self> {
        let first = layers.first().ok_or_else(|| {
            Error::InvalidStructure("a network needs at least one layer".into())
        })?;
        if !same_group(first.filtering.group(), &group) {
            return Err(Error::IncompatibleOperands(
                "layer 1 lives on a different group".into(),
            ));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[1].in_channels() != pair[0].out_channels() {
                return Err(Error::InvalidStructure(format!(
                    "layer {} expects {} channels but layer {} produces {}",
                    i + 2,
                    pair[1].in_channels(),
                    i + 1,
                    pair[0].out_channels()
                )));
            }
            if !same_group(pair[1].filtering.group(), &group) {
                return Err(Error::IncompatibleOperands(
                    "layers live on different groups".into(),
                ));
            }
        }
        Ok(Cnn {
            group,
            layers,
            activation,
        })
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn layers(&self) -> &[ConvLayer] {
        &self.layers
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// `(C_0, C_1, …, C_L)`.
    pub fn channel_counts(&self) -> Vec<usize> {
        let mut counts = Vec::with_capacity(self.layers.len() + 1);
        counts.push(self.layers[0].in_channels());
        counts.extend(self.layers.iter().map(ConvLayer::out_channels));
        counts
    }

    /// `(k_1, …, k_L)`.
    pub fn filter_counts(&self) -> Vec<usize> {
        self.layers.iter().map(ConvLayer::filter_count).collect()
    }

    /// `C(Φ) = Σ_ℓ C_ℓ`, input and output layers included.
    pub fn channel_total(&self) -> usize {
        self.channel_counts().iter().sum()
    }

    /// `W_conv(Φ) = Σ_ℓ` layer cost.
    pub fn weight_count(&self) -> usize {
        self.layers.iter().map(ConvLayer::l0).sum()
    }

    /// Every stored weight: all filter taps (dense per filter), affine
    /// triplets, and all affine bias entries.
    pub fn weights(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            for filter in layer.filtering.filters() {
                out.extend_from_slice(filter.values());
            }
            out.extend(layer.affine.entries().iter().map(|&(_, _, v)| v));
            out.extend_from_slice(layer.affine.bias());
        }
        out
    }

    /// Forward evaluation: activation after every layer except the last.
    pub fn realize(&self, x: &ChannelSignal) -> Result<ChannelSignal> {
        if !same_group(x.group(), &self.group) {
            return Err(Error::IncompatibleOperands(
                "input lives on a different group".into(),
            ));
        }
        if x.channels() != self.layers[0].in_channels() {
            return Err(Error::IncompatibleOperands(format!(
                "input has {} channels, network expects {}",
                x.channels(),
                self.layers[0].in_channels()
            )));
        }
        let mut current = x.clone();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            current = layer.apply(&current)?;
            if i < last {
                let mut values = current.values().to_vec();
                self.activation.eval_vec(&mut values);
                current = ChannelSignal::new(
                    Arc::clone(&self.group),
                    current.channels(),
                    values,
                )?;
            }
        }
        Ok(current)
    }

    /// The same network as an FNN: each layer lowered to its plain affine
    /// form, architecture `(C_0·|G|, …, C_L·|G|)`. Realisations agree under
    /// the channel-major flattening.
    pub fn as_fnn(&self) -> Fnn {
        let layers = self.layers.iter().map(ConvLayer::lower).collect();
        Fnn::new(
            Arc::clone(&self.group),
            self.layers[0].in_channels(),
            layers,
            self.activation,
        )
        .expect("lowered shapes chain by construction")
    }
}

impl ChannelMap for Cnn {
    fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    fn in_channels(&self) -> usize {
        self.layers[0].in_channels()
    }

    fn out_channels(&self) -> usize {
        self.layers.last().expect("at least one layer").out_channels()
    }

    fn apply(&self, x: &ChannelSignal) -> Result<ChannelSignal> {
        self.realize(x)
    }
}

/// Random CNN for tests and generators: sparse filters and affine parts.
pub fn random_cnn(
    group: &Arc<FiniteGroup>,
    depth: usize,
    max_channels: usize,
    max_filters: usize,
    density: f64,
    activation: Activation,
    rng: &mut crate::rng::Rng,
) -> Cnn {
    let n = group.order();
    let mut channels = Vec::with_capacity(depth + 1);
    for _ in 0..=depth {
        channels.push(1 + (crate::rng::uniform(rng) * max_channels as f64) as usize);
    }
    let mut layers = Vec::with_capacity(depth);
    for l in 0..depth {
        let k = 1 + (crate::rng::uniform(rng) * max_filters as f64) as usize;
        let filters = (0..k)
            .map(|_| {
                let values = (0..n)
                    .map(|_| {
                        if crate::rng::uniform(rng) < density {
                            crate::rng::standard_normal(rng)
                        } else {
                            0.0
                        }
                    })
                    .collect();
                GroupSignal::new(Arc::clone(group), values).expect("length matches")
            })
            .collect();
        let filtering = FilteringMap::new(Arc::clone(group), channels[l], filters)
            .expect("valid by construction");
        let affine =
            crate::affine::random_sparse(channels[l + 1], k * channels[l], density, rng);
        layers.push(ConvLayer::new(filtering, affine).expect("shapes match"));
    }
    Cnn::new(Arc::clone(group), layers, activation).expect("chain is consistent")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::verify::relative_deviation;

    fn z(n: usize) -> Arc<FiniteGroup> {
        FiniteGroup::cyclic(n).unwrap()
    }

    fn identity_layer(group: &Arc<FiniteGroup>) -> ConvLayer {
        ConvLayer::new(
            FilteringMap::delta(Arc::clone(group), 1).unwrap(),
            AffineMap::identity(1),
        )
        .unwrap()
    }

    #[test]
    fn delta_filter_passes_input_through() {
        let group = z(4);
        let mut rng = rng::seeded(73);
        let x = rng::normal_signal(&group, 2, &mut rng);
        let filtering = FilteringMap::delta(Arc::clone(&group), 2).unwrap();
        assert_eq!(filtering.apply(&x).unwrap().values(), x.values());
    }

    #[test]
    fn filtering_output_is_r_major() {
        let group = z(2);
        let delta = GroupSignal::delta(Arc::clone(&group));
        let lag = GroupSignal::new(Arc::clone(&group), vec![0.0, 1.0]).unwrap();
        let filtering = FilteringMap::new(Arc::clone(&group), 1, vec![delta, lag]).unwrap();
        let x = ChannelSignal::new(Arc::clone(&group), 1, vec![1.0, 2.0]).unwrap();
        let out = filtering.apply(&x).unwrap();
        assert_eq!(out.channels(), 2);
        assert_eq!(out.channel(0).unwrap().values(), &[1.0, 2.0]);
        assert_eq!(out.channel(1).unwrap().values(), &[2.0, 1.0]);
    }

    #[test]
    fn zero_filters_produce_zero() {
        let group = z(3);
        let mut rng = rng::seeded(79);
        let x = rng::normal_signal(&group, 2, &mut rng);
        let filtering = FilteringMap::zero(Arc::clone(&group), 2, 2).unwrap();
        assert!(filtering.apply(&x).unwrap().values().iter().all(|v| *v == 0.0));
        assert_eq!(filtering.l0(), 0);
    }

    #[test]
    fn filter_l0_counts_taps() {
        let group = z(3);
        assert_eq!(FilteringMap::delta(Arc::clone(&group), 1).unwrap().l0(), 1);
        let a = GroupSignal::new(Arc::clone(&group), vec![1.0, 0.0, 2.0]).unwrap();
        let b = GroupSignal::new(Arc::clone(&group), vec![0.0, 3.0, 0.0]).unwrap();
        assert_eq!(
            FilteringMap::new(Arc::clone(&group), 1, vec![a, b]).unwrap().l0(),
            3
        );
    }

    #[test]
    fn conv_layer_l0_sums_both_stages() {
        let group = z(3);
        let zero = ConvLayer::new(
            FilteringMap::zero(Arc::clone(&group), 1, 1).unwrap(),
            AffineMap::zero(2, 1),
        )
        .unwrap();
        assert_eq!(zero.l0(), 0);

        let filters = vec![
            GroupSignal::new(Arc::clone(&group), vec![1.0, 1.0, 0.0]).unwrap(),
        ];
        let affine = AffineMap::new(
            2,
            1,
            vec![(0, 0, 1.0), (1, 0, -1.0)],
            vec![0.5, 0.25],
        )
        .unwrap();
        let layer = ConvLayer::new(
            FilteringMap::new(Arc::clone(&group), 1, filters).unwrap(),
            affine,
        )
        .unwrap();
        // ‖A‖ = 4 (two entries + two bias), ‖B‖ = 2.
        assert_eq!(layer.l0(), 6);
    }

    #[test]
    fn network_weight_count_sums_layers() {
        let group = z(3);
        // Layer 1: ‖A‖ = 4, ‖B‖ = 2 → 6; layer 2: δ filter + empty affine → 1.
        let first = ConvLayer::new(
            FilteringMap::new(
                Arc::clone(&group),
                1,
                vec![GroupSignal::new(Arc::clone(&group), vec![1.0, 1.0, 0.0]).unwrap()],
            )
            .unwrap(),
            AffineMap::new(2, 1, vec![(0, 0, 1.0), (1, 0, -1.0)], vec![0.5, 0.25]).unwrap(),
        )
        .unwrap();
        let second = ConvLayer::new(
            FilteringMap::delta(Arc::clone(&group), 2).unwrap(),
            AffineMap::zero(1, 2),
        )
        .unwrap();
        let net = Cnn::new(Arc::clone(&group), vec![first, second], Activation::Relu).unwrap();
        assert_eq!(net.weight_count(), 7);

        let zero = Cnn::new(
            Arc::clone(&group),
            vec![ConvLayer::new(
                FilteringMap::zero(Arc::clone(&group), 1, 1).unwrap(),
                AffineMap::zero(1, 1),
            )
            .unwrap()],
            Activation::Relu,
        )
        .unwrap();
        assert_eq!(zero.weight_count(), 0);
    }

    #[test]
    fn conv_layer_l0_within_dense_bound_of_lowered() {
        let group = z(4);
        let mut rng = rng::seeded(83);
        for _ in 0..20 {
            let cnn = random_cnn(&group, 1, 2, 2, 0.8, Activation::Identity, &mut rng);
            let layer = &cnn.layers()[0];
            let lowered = layer.lower();
            let dense_params = lowered.rows() * lowered.cols() + lowered.rows();
            assert!(layer.l0() <= dense_params);
            assert!(lowered.l0_norm() <= group.order().pow(2) * layer.l0());
        }
    }

    #[test]
    fn identity_layer_realizes_identity() {
        let group = z(3);
        let mut rng = rng::seeded(89);
        let x = rng::normal_signal(&group, 1, &mut rng);
        let net = Cnn::new(
            Arc::clone(&group),
            vec![identity_layer(&group)],
            Activation::Relu,
        )
        .unwrap();
        assert_eq!(net.realize(&x).unwrap().values(), x.values());
    }

    #[test]
    fn realisation_matches_lowered_evaluation() {
        let group = z(4);
        let mut rng = rng::seeded(97);
        for _ in 0..10 {
            let cnn = random_cnn(&group, 2, 2, 2, 0.7, Activation::Relu, &mut rng);
            let fnn = cnn.as_fnn();
            for _ in 0..5 {
                let x = rng::normal_signal(&group, cnn.in_channels(), &mut rng);
                let via_cnn = cnn.realize(&x).unwrap();
                let via_fnn = fnn.realize(&x).unwrap();
                for (a, b) in via_cnn.values().iter().zip(&via_fnn) {
                    assert!(relative_deviation(*a, *b) < 1e-12, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn lower_identity_layer_gives_identity_matrix() {
        let group = z(3);
        let lowered = identity_layer(&group).lower();
        assert_eq!(lowered, AffineMap::identity(3));
    }

    #[test]
    fn lowered_layer_agrees_pointwise() {
        let group = z(3);
        let mut rng = rng::seeded(101);
        let cnn = random_cnn(&group, 1, 2, 3, 0.8, Activation::Identity, &mut rng);
        let layer = &cnn.layers()[0];
        let lowered = layer.lower();
        for _ in 0..50 {
            let x = rng::normal_signal(&group, layer.in_channels(), &mut rng);
            let direct = layer.apply(&x).unwrap();
            let flat = lowered.apply(x.values()).unwrap();
            for (a, b) in direct.values().iter().zip(&flat) {
                assert!(relative_deviation(*a, *b) < 1e-12);
            }
        }
    }

    #[test]
    fn as_fnn_weight_bound_and_architecture() {
        let mut rng = rng::seeded(103);
        for order in 2..=5 {
            let group = z(order);
            for _ in 0..50 {
                let cnn = random_cnn(&group, 2, 3, 2, 0.6, Activation::Relu, &mut rng);
                let fnn = cnn.as_fnn();
                assert!(fnn.weight_count() <= order * order * cnn.weight_count());
                let expected: Vec<usize> = cnn
                    .channel_counts()
                    .iter()
                    .map(|c| c * order)
                    .collect();
                assert_eq!(fnn.architecture(), expected);
            }
        }
    }

    #[test]
    fn conv_layers_are_shift_equivariant() {
        let group = FiniteGroup::product(&z(2), &z(2));
        let mut rng = rng::seeded(107);
        let cnn = random_cnn(&group, 1, 2, 2, 0.8, Activation::Identity, &mut rng);
        let layer = &cnn.layers()[0];
        let x = rng::normal_signal(&group, layer.in_channels(), &mut rng);
        for g in 0..group.order() {
            let lhs = layer.apply(&x.shift(g).unwrap()).unwrap();
            let rhs = layer.apply(&x).unwrap().shift(g).unwrap();
            for (a, b) in lhs.values().iter().zip(rhs.values()) {
                assert!(relative_deviation(*a, *b) < 1e-9);
            }
        }
    }

    #[test]
    fn l0_invariant_under_filter_reordering() {
        let group = z(3);
        let f0 = GroupSignal::new(Arc::clone(&group), vec![1.0, 2.0, 0.0]).unwrap();
        let f1 = GroupSignal::new(Arc::clone(&group), vec![0.0, 0.0, 3.0]).unwrap();
        let affine = AffineMap::new(
            1,
            2,
            vec![(0, 0, 4.0), (0, 1, 5.0)],
            vec![0.0],
        )
        .unwrap();
        let layer = ConvLayer::new(
            FilteringMap::new(Arc::clone(&group), 1, vec![f0.clone(), f1.clone()]).unwrap(),
            affine,
        )
        .unwrap();

        // Swap the filters and the corresponding affine columns.
        let swapped_affine = AffineMap::new(
            1,
            2,
            vec![(0, 0, 5.0), (0, 1, 4.0)],
            vec![0.0],
        )
        .unwrap();
        let swapped = ConvLayer::new(
            FilteringMap::new(Arc::clone(&group), 1, vec![f1, f0]).unwrap(),
            swapped_affine,
        )
        .unwrap();

        assert_eq!(layer.l0(), swapped.l0());
        let mut rng = rng::seeded(109);
        let x = rng::normal_signal(&group, 1, &mut rng);
        let a = layer.apply(&x).unwrap();
        let b = swapped.apply(&x).unwrap();
        for (l, r) in a.values().iter().zip(b.values()) {
            assert!(relative_deviation(*l, *r) < 1e-12);
        }
    }

    #[test]
    fn constructor_shape_checks() {
        let group = z(2);
        // Affine expects k·C_in = 2 columns, give 3.
        assert!(ConvLayer::new(
            FilteringMap::delta(Arc::clone(&group), 2).unwrap(),
            AffineMap::zero(1, 3)
        )
        .is_err());
        // Chain mismatch between layers.
        let l1 = ConvLayer::new(
            FilteringMap::delta(Arc::clone(&group), 1).unwrap(),
            AffineMap::zero(2, 1),
        )
        .unwrap();
        let l2 = ConvLayer::new(
            FilteringMap::delta(Arc::clone(&group), 3).unwrap(),
            AffineMap::zero(1, 3),
        )
        .unwrap();
        assert!(Cnn::new(Arc::clone(&group), vec![l1, l2], Activation::Relu).is_err());
    }
}
