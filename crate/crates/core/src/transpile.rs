//! Constructive transfer between the two network kinds.
//!
//! `fnn_to_cnn` builds, for any fully-connected network, a convolutional
//! network whose realisation agrees with the source in the identity
//! coordinate and whose weight count is at most twice the source's. Layer 1
//! turns each row-block of the first affine map into an involuted filter and
//! selects the matching diagonal outputs with 0/1 indicator weights; every
//! later layer keeps its affine map and convolves with the identity filter.
//! Networks with an all-zero layer are handled by two closed forms (the zero
//! network and the constant network).
//!
//! `cnn_to_fnn` lowers every layer to its plain affine form and restricts
//! the last one to the identity coordinate, at the cost of at most a
//! `|G|²` blow-up in weights.

use std::sync::Arc;

use serde::Serialize;

use crate::affine::AffineMap;
use crate::cnn::{Cnn, ConvLayer, FilteringMap};
use crate::error::{Error, Result};
use crate::fnn::{Activation, Fnn};
use crate::group::{FiniteGroup, GroupSignal};
use crate::signal::ChannelSignal;
use crate::verify::{relative_deviation, AuditReport};

/// Which construction produced the target network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecialCase {
    None,
    /// The last layer is zero, so the source realises the zero function.
    ZeroLastLayer,
    /// Some earlier layer is zero, so the source realises a constant.
    ConstantNetwork,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    FnnToCnn,
    CnnToFnn,
}

/// Sample count and seed for the numerical equality check attached to every
/// transpilation.
#[derive(Debug, Clone, Copy)]
pub struct CheckConfig {
    pub samples: usize,
    pub seed: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            samples: 100,
            seed: 42,
        }
    }
}

/// Machine-readable certificate of one transpilation.
#[derive(Debug, Clone, Serialize)]
pub struct TransferReport {
    pub direction: Direction,
    pub special_case: SpecialCase,
    pub source_weights: usize,
    pub target_weights: usize,
    /// 2 for fnn→cnn, |G|² for cnn→fnn.
    pub bound_factor: u64,
    /// `target_weights ≤ bound_factor · source_weights`.
    pub bound_satisfied: bool,
    pub channel_counts: Vec<usize>,
    pub filter_counts: Vec<usize>,
    /// Max relative deviation between the two realisations (identity
    /// coordinate vs. source output) over the test inputs.
    pub equality_check: f64,
    pub equality_passed: bool,
    pub equality_samples: usize,
    pub seed: u64,
    pub tolerance: f64,
    /// Attached by callers that audit the result against a weight domain.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_domain_audit: Option<AuditReport>,
}

/// Default tolerance for the fnn→cnn equality check; the two evaluation
/// paths differ only in accumulation order.
pub const FNN_TO_CNN_TOLERANCE: f64 = 1e-9;
/// Default tolerance for the cnn→fnn equality check (lowered coefficients
/// are exact products, so the paths stay closer).
pub const CNN_TO_FNN_TOLERANCE: f64 = 1e-12;

fn zero_conv_layer(
    group: &Arc<FiniteGroup>,
    in_channels: usize,
    out_channels: usize,
    k: usize,
) -> ConvLayer {
    let filtering = FilteringMap::zero(Arc::clone(group), in_channels, k)
        .expect("k ≥ 1 and in_channels ≥ 1");
    let affine = AffineMap::zero(out_channels, k * in_channels);
    ConvLayer::new(filtering, affine).expect("shapes match by construction")
}

/// Filter counts `(N_1·C_0, 1, …, 1)` for a source with the given widths.
fn transfer_filter_counts(input_channels: usize, widths: &[usize]) -> Vec<usize> {
    let mut counts = vec![widths[0] * input_channels];
    counts.extend(std::iter::repeat_n(1, widths.len() - 1));
    counts
}

/// Builds the convolutional network attached to a fully-connected one.
///
/// The result has channel counts `(C_0, N_1, …, N_L)`, filter counts
/// `(N_1·C_0, 1, …, 1)`, weight count at most `2·W(source)`, and its
/// realisation projected to the identity coordinate reproduces the source
/// realisation (checked numerically on `check.samples` seeded inputs).
///
/// `n_out` must equal the source's output dimension; it exists to assert the
/// caller's intent and fail loudly on mismatch.
pub fn fnn_to_cnn(phi: &Fnn, n_out: usize, check: &CheckConfig) -> Result<(Cnn, TransferReport)> {
    if phi.output_dim() != n_out {
        return Err(Error::InvalidStructure(format!(
            "network produces {} outputs but n_out = {} was requested",
            phi.output_dim(),
            n_out
        )));
    }
    let group = phi.group();
    let c0 = phi.input_channels();
    let widths: Vec<usize> = phi.layers().iter().map(AffineMap::rows).collect();
    let depth = phi.depth();
    let filter_counts = transfer_filter_counts(c0, &widths);

    let last_zero = phi.layers().last().expect("depth ≥ 1").l0_norm() == 0;
    let middle_zero = phi.layers()[..depth - 1]
        .iter()
        .any(|layer| layer.l0_norm() == 0);

    let (layers, special_case) = if last_zero {
        // Source realises the zero function; emit the all-zero network with
        // the same channel/filter counts.
        let mut layers = Vec::with_capacity(depth);
        let mut in_channels = c0;
        for (l, &width) in widths.iter().enumerate() {
            layers.push(zero_conv_layer(group, in_channels, width, filter_counts[l]));
            in_channels = width;
        }
        (layers, SpecialCase::ZeroLastLayer)
    } else if middle_zero {
        // Source realises a constant; any input gives the same value, so
        // evaluate at zero to obtain it.
        let zero_input = ChannelSignal::zeros(Arc::clone(group), c0)?;
        let constant = phi.realize(&zero_input)?;
        let mut layers = Vec::with_capacity(depth);
        let mut in_channels = c0;
        for (l, &width) in widths.iter().enumerate().take(depth - 1) {
            layers.push(zero_conv_layer(group, in_channels, width, filter_counts[l]));
            in_channels = width;
        }
        let filtering = FilteringMap::zero(Arc::clone(group), in_channels, 1)
            .expect("shapes valid");
        let affine = AffineMap::new(n_out, in_channels, vec![], constant)?;
        layers.push(ConvLayer::new(filtering, affine)?);
        (layers, SpecialCase::ConstantNetwork)
    } else {
        // Generic construction: every layer is nonzero.
        let n = group.order();
        let v1 = &phi.layers()[0];
        let n1 = widths[0];

        // Row blocks v_j^i ∈ R^G of the first layer: v_j^i(g) = V1[j, i·|G| + g].
        let mut blocks: Vec<Vec<f64>> = vec![vec![0.0; n]; n1 * c0];
        for &(j, col, w) in v1.entries() {
            let i = col / n;
            let g = col % n;
            blocks[j * c0 + i][g] = w;
        }

        // Filters: (v_j^ι)* for (j, ι) flattened j-major.
        let mut filters = Vec::with_capacity(n1 * c0);
        for block in &blocks {
            let signal = GroupSignal::new(Arc::clone(group), block.clone())?;
            filters.push(signal.involute());
        }
        let filtering = FilteringMap::new(Arc::clone(group), c0, filters)?;

        // Indicator entries select the diagonal outputs y_{ℓ,i,i}: for each
        // nonzero block v_ℓ^i, weight 1 at column (ℓ·C0 + i)·C0 + i.
        let mut entries = Vec::new();
        for l in 0..n1 {
            for i in 0..c0 {
                if blocks[l * c0 + i].iter().any(|w| *w != 0.0) {
                    entries.push((l, (l * c0 + i) * c0 + i, 1.0));
                }
            }
        }
        let affine = AffineMap::new(n1, n1 * c0 * c0, entries, v1.bias().to_vec())?;
        let mut layers = vec![ConvLayer::new(filtering, affine)?];

        // Later layers: identity filter, affine map carried over unchanged.
        for layer in &phi.layers()[1..] {
            let filtering = FilteringMap::delta(Arc::clone(group), layer.cols())?;
            layers.push(ConvLayer::new(filtering, layer.clone())?);
        }
        (layers, SpecialCase::None)
    };

    let psi = Cnn::new(Arc::clone(group), layers, phi.activation())?;

    let source_weights = phi.weight_count();
    let target_weights = psi.weight_count();
    let equality_check = first_coordinate_deviation(phi, &psi, check)?;
    let report = TransferReport {
        direction: Direction::FnnToCnn,
        special_case,
        source_weights,
        target_weights,
        bound_factor: 2,
        bound_satisfied: target_weights <= 2 * source_weights,
        channel_counts: psi.channel_counts(),
        filter_counts: psi.filter_counts(),
        equality_check,
        equality_passed: equality_check <= FNN_TO_CNN_TOLERANCE,
        equality_samples: check.samples,
        seed: check.seed,
        tolerance: FNN_TO_CNN_TOLERANCE,
        weight_domain_audit: None,
    };
    Ok((psi, report))
}

/// Max relative deviation of the identity coordinate of `psi` against `phi`
/// over seeded normal inputs.
fn first_coordinate_deviation(phi: &Fnn, psi: &Cnn, check: &CheckConfig) -> Result<f64> {
    let mut rng = crate::rng::seeded(check.seed);
    let mut max_dev = 0.0f64;
    for _ in 0..check.samples {
        let x = crate::rng::normal_signal(phi.group(), phi.input_channels(), &mut rng);
        let via_fnn = phi.realize(&x)?;
        let via_cnn = psi.realize(&x)?.project(FiniteGroup::IDENTITY)?;
        for (a, b) in via_fnn.iter().zip(&via_cnn) {
            max_dev = max_dev.max(relative_deviation(*a, *b));
        }
    }
    Ok(max_dev)
}

/// Builds the fully-connected network associated to a convolutional one:
/// every layer lowered to its plain affine form, with the last restricted to
/// the identity coordinate. Architecture `(|G|·C_0, …, |G|·C_{L−1}, C_L)`.
///
/// The report's `target_weights` is the fully-connected weight count `W` of
/// the result (the result is an FNN, so that is the only weight notion that
/// applies to it), checked against `|G|²·W_conv(source)`.
pub fn cnn_to_fnn(psi: &Cnn, check: &CheckConfig) -> Result<(Fnn, TransferReport)> {
    let group = psi.group();
    let n = group.order();
    let depth = psi.depth();

    let mut layers: Vec<AffineMap> = Vec::with_capacity(depth);
    for layer in &psi.layers()[..depth - 1] {
        layers.push(layer.lower());
    }
    let last = psi.layers().last().expect("depth ≥ 1");
    layers.push(project_identity_rows(&last.lower(), n));

    let phi = Fnn::new(
        Arc::clone(group),
        psi.layers()[0].in_channels(),
        layers,
        psi.activation(),
    )?;

    let source_weights = psi.weight_count();
    let target_weights = phi.weight_count();
    let factor = (n * n) as u64;

    let mut rng = crate::rng::seeded(check.seed);
    let mut max_dev = 0.0f64;
    for _ in 0..check.samples {
        let x = crate::rng::normal_signal(group, psi.layers()[0].in_channels(), &mut rng);
        let via_cnn = psi.realize(&x)?.project(FiniteGroup::IDENTITY)?;
        let via_fnn = phi.realize(&x)?;
        for (a, b) in via_cnn.iter().zip(&via_fnn) {
            max_dev = max_dev.max(relative_deviation(*a, *b));
        }
    }

    let report = TransferReport {
        direction: Direction::CnnToFnn,
        special_case: SpecialCase::None,
        source_weights,
        target_weights,
        bound_factor: factor,
        bound_satisfied: target_weights <= factor as usize * source_weights,
        channel_counts: psi.channel_counts(),
        filter_counts: psi.filter_counts(),
        equality_check: max_dev,
        equality_passed: max_dev <= CNN_TO_FNN_TOLERANCE,
        equality_samples: check.samples,
        seed: check.seed,
        tolerance: CNN_TO_FNN_TOLERANCE,
        weight_domain_audit: None,
    };
    Ok((phi, report))
}

/// Keeps only the rows of spatial coordinate `identity` from a lowered map
/// (rows `j·|G| + 0` for each output channel `j`).
fn project_identity_rows(lowered: &AffineMap, group_order: usize) -> AffineMap {
    let out_channels = lowered.rows() / group_order;
    let entries = lowered
        .entries()
        .iter()
        .filter(|(row, _, _)| row % group_order == FiniteGroup::IDENTITY)
        .map(|&(row, col, v)| (row / group_order, col, v))
        .collect();
    let bias = (0..out_channels)
        .map(|j| lowered.bias()[j * group_order + FiniteGroup::IDENTITY])
        .collect();
    AffineMap::new(out_channels, lowered.cols(), entries, bias)
        .expect("projected indices stay in range")
}

/// Certificate of a full round trip fnn → cnn → fnn.
#[derive(Debug, Clone, Serialize)]
pub struct RoundtripReport {
    pub transpile: TransferReport,
    pub lower: TransferReport,
    /// Max relative deviation between the source and the round-tripped
    /// realisation over the supplied inputs.
    pub max_deviation: f64,
    pub deviation_passed: bool,
    /// `2·|G|²`, the chained weight-bound factor.
    pub chained_bound_factor: u64,
    pub chained_bound_satisfied: bool,
    pub samples: usize,
    pub tolerance: f64,
}

/// Runs fnn → cnn → fnn and verifies that the round-tripped network
/// reproduces the source on the supplied inputs, and that both weight
/// bounds hold in sequence.
pub fn roundtrip_check(
    phi: &Fnn,
    n_out: usize,
    inputs: &[ChannelSignal],
    check: &CheckConfig,
) -> Result<RoundtripReport> {
    let (psi, transpile_report) = fnn_to_cnn(phi, n_out, check)?;
    let (phi_back, lower_report) = cnn_to_fnn(&psi, check)?;

    let mut max_dev = 0.0f64;
    for x in inputs {
        let original = phi.realize(x)?;
        let round_tripped = phi_back.realize(x)?;
        for (a, b) in original.iter().zip(&round_tripped) {
            max_dev = max_dev.max(relative_deviation(*a, *b));
        }
    }

    let factor = 2 * (phi.group().order() as u64).pow(2);
    let chained_bound_satisfied =
        phi_back.weight_count() <= factor as usize * phi.weight_count();
    Ok(RoundtripReport {
        transpile: transpile_report,
        lower: lower_report,
        max_deviation: max_dev,
        deviation_passed: max_dev <= FNN_TO_CNN_TOLERANCE,
        chained_bound_factor: factor,
        chained_bound_satisfied,
        samples: inputs.len(),
        tolerance: FNN_TO_CNN_TOLERANCE,
    })
}

/// Builds a relu network realising the piecewise-linear interpolant of a
/// 1-D profile read off the first input coordinate. The profile samples a
/// scalar target at `profile.len()` uniform nodes on `[−1/2, 1/2]`; the
/// interpolant, as a function on `R^{[C0]×G}`, depends on coordinate
/// `(channel 0, identity)` only.
///
/// Returns the network together with its measured sup-error over the nodes.
/// Globally affine profiles collapse to a single affine layer; otherwise the
/// network has one hidden layer with one relu unit per slope change.
pub fn build_interpolation_fnn(
    group: &Arc<FiniteGroup>,
    input_channels: usize,
    profile: &[f64],
) -> Result<(Fnn, f64)> {
    let resolution = profile.len();
    if resolution < 2 {
        return Err(Error::InvalidParameter(
            "interpolation needs at least two grid values".into(),
        ));
    }
    if profile.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "grid values must be finite".into(),
        ));
    }
    let input_dim = input_channels * group.order();
    let step = 1.0 / (resolution - 1) as f64;
    let nodes: Vec<f64> = (0..resolution).map(|q| q as f64 * step - 0.5).collect();
    let slopes: Vec<f64> = (0..resolution - 1)
        .map(|q| (profile[q + 1] - profile[q]) / (nodes[q + 1] - nodes[q]))
        .collect();

    let net = if slopes.iter().all(|s| *s == slopes[0]) {
        // Globally affine: f(x) = s·x_1 + (y_0 − s·t_0) in one layer.
        let s = slopes[0];
        let triplets = if s != 0.0 { vec![(0, 0, s)] } else { vec![] };
        let layer = AffineMap::new(1, input_dim, triplets, vec![profile[0] - s * nodes[0]])?;
        Fnn::new(Arc::clone(group), input_channels, vec![layer], Activation::Relu)?
    } else {
        // f(x) = y_0 + Σ_q β_q · relu(x_1 − t_q), with β_0 = s_0 and
        // β_q = s_q − s_{q−1}; zero-coefficient units are pruned.
        let mut units: Vec<(f64, f64)> = Vec::new(); // (node, coefficient)
        for (q, &s) in slopes.iter().enumerate() {
            let beta = if q == 0 { s } else { s - slopes[q - 1] };
            if beta != 0.0 {
                units.push((nodes[q], beta));
            }
        }
        let hidden = units.len();
        let mut first_triplets = Vec::with_capacity(hidden);
        let mut first_bias = Vec::with_capacity(hidden);
        let mut second_triplets = Vec::with_capacity(hidden);
        for (u, &(node, beta)) in units.iter().enumerate() {
            first_triplets.push((u, 0, 1.0));
            first_bias.push(-node);
            second_triplets.push((0, u, beta));
        }
        let first = AffineMap::new(hidden, input_dim, first_triplets, first_bias)?;
        let second = AffineMap::new(1, hidden, second_triplets, vec![profile[0]])?;
        Fnn::new(
            Arc::clone(group),
            input_channels,
            vec![first, second],
            Activation::Relu,
        )?
    };

    let mut sup_error = 0.0f64;
    for (q, &node) in nodes.iter().enumerate() {
        let mut values = vec![0.0; input_dim];
        values[0] = node;
        let x = ChannelSignal::new(Arc::clone(group), input_channels, values)?;
        let out = net.realize(&x)?;
        sup_error = sup_error.max((out[0] - profile[q]).abs());
    }
    Ok((net, sup_error))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine;
    use crate::rng;
    use crate::verify::{
        audit_weight_domain, check_equivariance, SampleSet, WeightDomain,
    };

    fn z(n: usize) -> Arc<FiniteGroup> {
        FiniteGroup::cyclic(n).unwrap()
    }

    /// Random sparse FNN over the group with the given layer widths.
    fn random_fnn(
        group: &Arc<FiniteGroup>,
        c0: usize,
        widths: &[usize],
        density: f64,
        activation: Activation,
        rng: &mut rng::Rng,
    ) -> Fnn {
        let mut layers = Vec::with_capacity(widths.len());
        let mut cols = c0 * group.order();
        for &w in widths {
            layers.push(affine::random_sparse(w, cols, density, rng));
            cols = w;
        }
        Fnn::new(Arc::clone(group), c0, layers, activation).unwrap()
    }

    #[test]
    fn zero_last_layer_special_case() {
        let group = z(3);
        let mut rng = rng::seeded(137);
        let l1 = affine::random_sparse(4, 3, 0.8, &mut rng);
        let l2 = AffineMap::zero(2, 4);
        let phi = Fnn::new(Arc::clone(&group), 1, vec![l1, l2], Activation::Relu).unwrap();
        let (psi, report) = fnn_to_cnn(&phi, 2, &CheckConfig::default()).unwrap();
        assert_eq!(report.special_case, SpecialCase::ZeroLastLayer);
        assert_eq!(report.target_weights, 0);
        assert!(report.bound_satisfied);
        assert!(report.equality_passed);
        assert_eq!(psi.channel_counts(), vec![1, 4, 2]);
        assert_eq!(psi.filter_counts(), vec![4, 1]);
    }

    #[test]
    fn constant_network_special_case() {
        let group = z(3);
        let mut rng = rng::seeded(139);
        let l1 = AffineMap::zero(4, 3);
        let l2 = affine::random_sparse(2, 4, 0.9, &mut rng);
        let phi = Fnn::new(Arc::clone(&group), 1, vec![l1, l2], Activation::Relu).unwrap();
        let (psi, report) = fnn_to_cnn(&phi, 2, &CheckConfig::default()).unwrap();
        assert_eq!(report.special_case, SpecialCase::ConstantNetwork);
        assert!(report.bound_satisfied);
        assert_eq!(report.equality_check, 0.0, "constant branch is exact");

        let constant = phi
            .realize(&ChannelSignal::zeros(Arc::clone(&group), 1).unwrap())
            .unwrap();
        assert_eq!(
            report.target_weights,
            constant.iter().filter(|v| **v != 0.0).count()
        );
        assert!(report.target_weights <= report.source_weights);

        let mut rng2 = rng::seeded(17);
        let x = rng::normal_signal(&group, 1, &mut rng2);
        let out = psi.realize(&x).unwrap().project(FiniteGroup::IDENTITY).unwrap();
        assert_eq!(out, constant);
    }

    #[test]
    fn generic_counts_follow_source_architecture() {
        let group = z(2);
        let mut rng = rng::seeded(149);
        let phi = random_fnn(&group, 2, &[3, 1], 1.0, Activation::Relu, &mut rng);
        let (psi, report) = fnn_to_cnn(&phi, 1, &CheckConfig::default()).unwrap();
        assert_eq!(psi.channel_counts(), vec![2, 3, 1]);
        assert_eq!(psi.filter_counts(), vec![6, 1]);
        assert_eq!(report.special_case, SpecialCase::None);
    }

    #[test]
    fn generic_first_coordinate_agrees() {
        let group = z(4);
        let mut rng = rng::seeded(151);
        let phi = random_fnn(&group, 2, &[5, 4, 3], 0.6, Activation::Relu, &mut rng);
        let (psi, report) = fnn_to_cnn(&phi, 3, &CheckConfig::default()).unwrap();
        assert!(
            report.equality_check <= 1e-9,
            "deviation {}",
            report.equality_check
        );
        assert!(psi.weight_count() <= 2 * phi.weight_count());
    }

    #[test]
    fn per_layer_weight_bounds() {
        let group = z(3);
        let mut rng = rng::seeded(157);
        let phi = random_fnn(&group, 2, &[4, 3, 2], 0.7, Activation::Relu, &mut rng);
        let (psi, _) = fnn_to_cnn(&phi, 2, &CheckConfig::default()).unwrap();
        for (conv, dense) in psi.layers().iter().zip(phi.layers()) {
            assert!(conv.l0() <= 2 * dense.l0_norm());
        }
    }

    #[test]
    fn transpiled_outputs_are_equivariant() {
        let group = z(5);
        let mut rng = rng::seeded(163);
        let phi = random_fnn(&group, 1, &[4, 2], 0.7, Activation::Relu, &mut rng);
        let (psi, _) = fnn_to_cnn(&phi, 2, &CheckConfig::default()).unwrap();
        let samples = SampleSet::random_normal(&group, 1, 6, 9);
        let verdict = check_equivariance(&psi, &samples, 1e-9).unwrap();
        assert!(verdict.passed, "max deviation {}", verdict.max_deviation);
    }

    #[test]
    fn weight_domain_is_preserved_up_to_indicators() {
        let group = z(3);
        let domain = WeightDomain::finite(&[-1.0, 1.0]);
        // Dense ±1 weights so no layer vanishes.
        let mut rng = rng::seeded(167);
        let mut layers = Vec::new();
        let mut cols = 3;
        for &w in &[4usize, 2] {
            let triplets = (0..w)
                .flat_map(|r| (0..cols).map(move |c| (r, c, 0.0)))
                .map(|(r, c, _)| {
                    let sign = if rng::uniform(&mut rng) < 0.5 { -1.0 } else { 1.0 };
                    (r, c, sign)
                })
                .collect();
            let bias = (0..w)
                .map(|_| if rng::uniform(&mut rng) < 0.5 { -1.0 } else { 1.0 })
                .collect();
            layers.push(AffineMap::new(w, cols, triplets, bias).unwrap());
            cols = w;
        }
        let phi = Fnn::new(Arc::clone(&group), 1, layers, Activation::Relu).unwrap();
        assert!(audit_weight_domain(&phi.weights(), &domain).passed);

        let (psi, report) = fnn_to_cnn(&phi, 2, &CheckConfig::default()).unwrap();
        assert_eq!(report.special_case, SpecialCase::None);
        let audit = audit_weight_domain(&psi.weights(), &domain.with_zero_one());
        assert!(audit.passed, "offending: {:?}", audit.offending);
    }

    #[test]
    fn generic_branch_is_activation_independent() {
        let group = z(3);
        let mut rng = rng::seeded(173);
        let phi_relu = random_fnn(&group, 2, &[3, 2], 0.8, Activation::Relu, &mut rng);
        let phi_id = Fnn::new(
            Arc::clone(&group),
            2,
            phi_relu.layers().to_vec(),
            Activation::Identity,
        )
        .unwrap();
        let (psi_relu, _) = fnn_to_cnn(&phi_relu, 2, &CheckConfig::default()).unwrap();
        let (psi_id, _) = fnn_to_cnn(&phi_id, 2, &CheckConfig::default()).unwrap();
        assert_eq!(psi_relu.layers(), psi_id.layers());
    }

    #[test]
    fn n_out_mismatch_fails_loudly() {
        let group = z(2);
        let mut rng = rng::seeded(179);
        let phi = random_fnn(&group, 1, &[3], 0.8, Activation::Relu, &mut rng);
        assert!(matches!(
            fnn_to_cnn(&phi, 7, &CheckConfig::default()),
            Err(Error::InvalidStructure(_))
        ));
    }

    #[test]
    fn lowering_identity_cnn_selects_identity_slice() {
        let group = z(2);
        let psi = Cnn::new(
            Arc::clone(&group),
            vec![ConvLayer::new(
                FilteringMap::delta(Arc::clone(&group), 1).unwrap(),
                AffineMap::identity(1),
            )
            .unwrap()],
            Activation::Relu,
        )
        .unwrap();
        let (phi, report) = cnn_to_fnn(&psi, &CheckConfig::default()).unwrap();
        assert_eq!(phi.architecture(), vec![2, 1]);
        assert!(report.equality_passed);
        // The single layer keeps exactly the identity-coordinate row.
        assert_eq!(phi.layers()[0].entries(), &[(0, 0, 1.0)]);
    }

    #[test]
    fn lowered_architecture_follows_channel_counts() {
        let group = z(3);
        let mut rng = rng::seeded(181);
        let psi = crate::cnn::random_cnn(&group, 2, 2, 2, 0.8, Activation::Relu, &mut rng);
        let (phi, _) = cnn_to_fnn(&psi, &CheckConfig::default()).unwrap();
        let counts = psi.channel_counts();
        let mut expected: Vec<usize> = counts[..counts.len() - 1]
            .iter()
            .map(|c| c * 3)
            .collect();
        expected.push(*counts.last().unwrap());
        assert_eq!(phi.architecture(), expected);
    }

    #[test]
    fn lowered_architecture_fixed_instance() {
        // Channel counts (1, 2, 1) over a group of order 3 lower to (3, 6, 1).
        let group = z(3);
        let first = ConvLayer::new(
            FilteringMap::delta(Arc::clone(&group), 1).unwrap(),
            AffineMap::new(2, 1, vec![(0, 0, 1.0), (1, 0, 2.0)], vec![0.0, 0.0]).unwrap(),
        )
        .unwrap();
        let second = ConvLayer::new(
            FilteringMap::delta(Arc::clone(&group), 2).unwrap(),
            AffineMap::new(1, 2, vec![(0, 0, 1.0)], vec![0.5]).unwrap(),
        )
        .unwrap();
        let psi = Cnn::new(Arc::clone(&group), vec![first, second], Activation::Relu).unwrap();
        assert_eq!(psi.channel_counts(), vec![1, 2, 1]);
        let (phi, _) = cnn_to_fnn(&psi, &CheckConfig::default()).unwrap();
        assert_eq!(phi.architecture(), vec![3, 6, 1]);
    }

    #[test]
    fn lowered_network_matches_identity_coordinate() {
        let group = z(3);
        let mut rng = rng::seeded(191);
        for _ in 0..5 {
            let psi = crate::cnn::random_cnn(&group, 2, 3, 2, 0.7, Activation::Relu, &mut rng);
            let (_, report) = cnn_to_fnn(&psi, &CheckConfig::default()).unwrap();
            assert!(
                report.equality_check <= 1e-12,
                "deviation {}",
                report.equality_check
            );
            assert!(report.bound_satisfied);
        }
    }

    #[test]
    fn roundtrip_identity_is_exact() {
        let group = z(2);
        let phi = Fnn::new(
            Arc::clone(&group),
            1,
            vec![AffineMap::identity(2)],
            Activation::Relu,
        )
        .unwrap();
        let mut rng = rng::seeded(193);
        let inputs: Vec<ChannelSignal> = (0..20)
            .map(|_| rng::normal_signal(&group, 1, &mut rng))
            .collect();
        let report = roundtrip_check(&phi, 2, &inputs, &CheckConfig::default()).unwrap();
        assert_eq!(report.max_deviation, 0.0);
        assert!(report.chained_bound_satisfied);
    }

    #[test]
    fn roundtrip_random_networks() {
        let mut rng = rng::seeded(197);
        for order in 2..=5 {
            let group = z(order);
            let phi = random_fnn(&group, 2, &[4, 3], 0.6, Activation::Relu, &mut rng);
            let inputs: Vec<ChannelSignal> = (0..30)
                .map(|_| rng::normal_signal(&group, 2, &mut rng))
                .collect();
            let report = roundtrip_check(&phi, 3, &inputs, &CheckConfig::default()).unwrap();
            assert!(report.max_deviation <= 1e-9, "|G| = {order}");
            assert!(report.chained_bound_satisfied);
            assert_eq!(report.chained_bound_factor, 2 * (order as u64).pow(2));
        }
    }

    #[test]
    fn interpolation_constant_profile() {
        let group = z(2);
        let (net, err) = build_interpolation_fnn(&group, 1, &[0.75, 0.75, 0.75]).unwrap();
        assert_eq!(net.depth(), 1);
        assert_eq!(net.weight_count(), 1, "single bias entry");
        assert_eq!(err, 0.0);
    }

    #[test]
    fn interpolation_linear_profile() {
        let group = z(2);
        // Profile of the first-coordinate function itself.
        let (net, err) = build_interpolation_fnn(&group, 1, &[-0.5, 0.0, 0.5]).unwrap();
        assert_eq!(net.depth(), 1);
        assert_eq!(net.weight_count(), 1, "single linear weight, zero bias");
        assert_eq!(err, 0.0);
        let x = ChannelSignal::new(Arc::clone(&group), 1, vec![0.3, -0.9]).unwrap();
        assert_eq!(net.realize(&x).unwrap(), vec![0.3]);
    }

    #[test]
    fn interpolation_absolute_value() {
        let group = z(2);
        let (net, err) = build_interpolation_fnn(&group, 1, &[0.5, 0.0, 0.5]).unwrap();
        assert_eq!(net.depth(), 2);
        assert_eq!(net.layers()[0].rows(), 2, "two relu units");
        assert_eq!(err, 0.0);
        // Mid-segment points interpolate |x| exactly (it is piecewise linear).
        for t in [-0.25, 0.1, 0.4] {
            let x = ChannelSignal::new(Arc::clone(&group), 1, vec![t, 0.0]).unwrap();
            let out = net.realize(&x).unwrap();
            assert!((out[0] - t.abs()).abs() < 1e-15);
        }
    }

    #[test]
    fn interpolation_rejects_degenerate_grids() {
        let group = z(2);
        assert!(build_interpolation_fnn(&group, 1, &[1.0]).is_err());
        assert!(build_interpolation_fnn(&group, 1, &[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn transfer_works_over_a_nonabelian_group() {
        let s3 = crate::group::symmetric_3();
        let mut rng = rng::seeded(223);
        let phi = random_fnn(&s3, 1, &[4, 2], 0.6, Activation::Relu, &mut rng);
        let (psi, report) = fnn_to_cnn(&phi, 2, &CheckConfig::default()).unwrap();
        assert!(report.equality_check <= 1e-9);
        assert!(report.bound_satisfied);
        let samples = SampleSet::random_normal(&s3, 1, 4, 227);
        let verdict = check_equivariance(&psi, &samples, 1e-9).unwrap();
        assert!(verdict.passed, "max deviation {}", verdict.max_deviation);

        let inputs: Vec<ChannelSignal> = (0..20)
            .map(|_| rng::normal_signal(&s3, 1, &mut rng))
            .collect();
        let roundtrip = roundtrip_check(&phi, 2, &inputs, &CheckConfig::default()).unwrap();
        assert!(roundtrip.max_deviation <= 1e-9);
        assert!(roundtrip.chained_bound_satisfied);
    }
}
