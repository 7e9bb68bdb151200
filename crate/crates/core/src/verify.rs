//! Equivariance certification, empirical L^p norms over shift-closed sample
//! sets, the `|G|^{1/p}` norm identity, and weight-domain audits.
//!
//! The L^p identity holds exactly on a finite sample multiset that is closed
//! under all vectorised shifts, which turns an integral identity into a
//! bit-checkable one; nothing here estimates true integrals.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{same_group, FiniteGroup};
use crate::rng;
use crate::signal::{ChannelMap, ChannelSignal};

/// `|a − b|` scaled by `max(1, |a|, |b|)`: relative for large magnitudes,
/// absolute near zero (where accumulation noise is absolute anyway).
pub fn relative_deviation(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

/// A finite set of channel signals used as an empirical domain. The
/// `symmetrized` flag records that the point multiset is closed under every
/// vectorised shift.
#[derive(Debug, Clone)]
pub struct SampleSet {
    group: Arc<FiniteGroup>,
    channels: usize,
    points: Vec<ChannelSignal>,
    symmetrized: bool,
}

impl SampleSet {
    pub fn new(
        group: Arc<FiniteGroup>,
        channels: usize,
        points: Vec<ChannelSignal>,
    ) -> Result<Self> {
        for point in &points {
            if !same_group(point.group(), &group) || point.channels() != channels {
                return Err(Error::IncompatibleOperands(
                    "sample point does not match the declared group/channel shape".into(),
                ));
            }
        }
        Ok(SampleSet {
            group,
            channels,
            points,
            symmetrized: false,
        })
    }

    /// `count` seeded standard-normal points.
    pub fn random_normal(
        group: &Arc<FiniteGroup>,
        channels: usize,
        count: usize,
        seed: u64,
    ) -> Self {
        let mut rng = rng::seeded(seed);
        let points = (0..count)
            .map(|_| rng::normal_signal(group, channels, &mut rng))
            .collect();
        SampleSet {
            group: Arc::clone(group),
            channels,
            points,
            symmetrized: false,
        }
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn points(&self) -> &[ChannelSignal] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_symmetrized(&self) -> bool {
        self.symmetrized
    }

    /// The closure of the point multiset under all vectorised shifts: every
    /// point is replaced by its full orbit, so the size grows by `|G|`
    /// (counting multiplicity).
    pub fn symmetrize(&self) -> SampleSet {
        let n = self.group.order();
        let mut points = Vec::with_capacity(self.points.len() * n);
        for point in &self.points {
            for g in 0..n {
                points.push(point.shift(g).expect("g < |G|"));
            }
        }
        SampleSet {
            group: Arc::clone(&self.group),
            channels: self.channels,
            points,
            symmetrized: true,
        }
    }
}

/// Outcome of an exhaustive equivariance check.
#[derive(Debug, Clone, Serialize)]
pub struct EquivarianceVerdict {
    pub passed: bool,
    pub max_deviation: f64,
    pub tested_shifts: usize,
    pub tolerance: f64,
    /// First `(g, sample index, deviation)` exceeding the tolerance.
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub shift: usize,
    pub sample_index: usize,
    pub deviation: f64,
}

/// Compares `f(S_g x)` against `S_g f(x)` for every `g ∈ G` and every sample
/// point. Exhaustive in `g`; deviations measured by [`relative_deviation`].
pub fn check_equivariance(
    f: &dyn ChannelMap,
    samples: &SampleSet,
    tolerance: f64,
) -> Result<EquivarianceVerdict> {
    if tolerance < 0.0 {
        return Err(Error::InvalidParameter("tolerance must be ≥ 0".into()));
    }
    if !same_group(samples.group(), f.group()) || samples.channels() != f.in_channels() {
        return Err(Error::IncompatibleOperands(
            "sample set does not match the map's input shape".into(),
        ));
    }
    let n = f.group().order();
    let mut max_deviation = 0.0f64;
    let mut witness = None;
    for g in 0..n {
        for (idx, x) in samples.points().iter().enumerate() {
            let shifted_first = f.apply(&x.shift(g)?)?;
            let shifted_last = f.apply(x)?.shift(g)?;
            let mut local = 0.0f64;
            for (a, b) in shifted_first.values().iter().zip(shifted_last.values()) {
                local = local.max(relative_deviation(*a, *b));
            }
            if local > tolerance && witness.is_none() {
                witness = Some(Witness {
                    shift: g,
                    sample_index: idx,
                    deviation: local,
                });
            }
            max_deviation = max_deviation.max(local);
        }
    }
    Ok(EquivarianceVerdict {
        passed: max_deviation <= tolerance,
        max_deviation,
        tested_shifts: n,
        tolerance,
        witness,
    })
}

fn check_comparable(f: &dyn ChannelMap, g: &dyn ChannelMap, samples: &SampleSet) -> Result<()> {
    if !same_group(f.group(), g.group())
        || f.in_channels() != g.in_channels()
        || f.out_channels() != g.out_channels()
    {
        return Err(Error::IncompatibleOperands(
            "the two maps have different shapes".into(),
        ));
    }
    if !same_group(samples.group(), f.group()) || samples.channels() != f.in_channels() {
        return Err(Error::IncompatibleOperands(
            "sample set does not match the maps' input shape".into(),
        ));
    }
    if samples.is_empty() {
        return Err(Error::InvalidParameter("sample set is empty".into()));
    }
    Ok(())
}

fn validate_p(p: f64) -> Result<()> {
    if p.is_nan() || p <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "p must be positive or infinity, got {p}"
        )));
    }
    Ok(())
}

/// Empirical L^p distance over all samples and all output coordinates:
/// `(Σ_x Σ_c |f(x)_c − g(x)_c|^p)^{1/p}` for finite `p`, the maximum for
/// `p = ∞`.
pub fn empirical_lp_distance(
    f: &dyn ChannelMap,
    g: &dyn ChannelMap,
    samples: &SampleSet,
    p: f64,
) -> Result<f64> {
    validate_p(p)?;
    check_comparable(f, g, samples)?;
    let mut acc = 0.0f64;
    for x in samples.points() {
        let fx = f.apply(x)?;
        let gx = g.apply(x)?;
        for (a, b) in fx.values().iter().zip(gx.values()) {
            let d = (a - b).abs();
            if p.is_infinite() {
                acc = acc.max(d);
            } else {
                acc += d.powf(p);
            }
        }
    }
    Ok(if p.is_infinite() { acc } else { acc.powf(1.0 / p) })
}

fn identity_coordinate_distance(
    f: &dyn ChannelMap,
    g: &dyn ChannelMap,
    samples: &SampleSet,
    p: f64,
) -> Result<f64> {
    let mut acc = 0.0f64;
    for x in samples.points() {
        let fx = f.apply(x)?.project(FiniteGroup::IDENTITY)?;
        let gx = g.apply(x)?.project(FiniteGroup::IDENTITY)?;
        for (a, b) in fx.iter().zip(&gx) {
            let d = (a - b).abs();
            if p.is_infinite() {
                acc = acc.max(d);
            } else {
                acc += d.powf(p);
            }
        }
    }
    Ok(if p.is_infinite() { acc } else { acc.powf(1.0 / p) })
}

/// Both sides of the norm identity for equivariant maps over a shift-closed
/// sample set, and their gap.
#[derive(Debug, Clone, Serialize)]
pub struct NormIdentityReport {
    /// Full empirical distance over all output coordinates.
    pub lhs: f64,
    /// `|G|^{1/p} ×` the identity-coordinate distance (`|G|^{1/∞} = 1`).
    pub rhs: f64,
    pub relative_gap: f64,
    pub p: f64,
    pub samples: usize,
}

/// Checks `‖f − g‖_p = |G|^{1/p}·‖(f)_1 − (g)_1‖_p` over a symmetrized
/// sample set. Callers must pass equivariant maps; the identity is only
/// meaningful for them.
pub fn transfer_norm_identity_check(
    f: &dyn ChannelMap,
    g: &dyn ChannelMap,
    samples: &SampleSet,
    p: f64,
) -> Result<NormIdentityReport> {
    if !samples.is_symmetrized() {
        return Err(Error::Precondition(
            "the norm identity needs a symmetrized (shift-closed) sample set".into(),
        ));
    }
    validate_p(p)?;
    check_comparable(f, g, samples)?;
    let lhs = empirical_lp_distance(f, g, samples, p)?;
    let factor = if p.is_infinite() {
        1.0
    } else {
        (f.group().order() as f64).powf(1.0 / p)
    };
    let rhs = factor * identity_coordinate_distance(f, g, samples, p)?;
    Ok(NormIdentityReport {
        lhs,
        rhs,
        relative_gap: relative_deviation(lhs, rhs),
        p,
        samples: samples.len(),
    })
}

/// A set of admissible weight values.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightDomain {
    /// Membership by exact floating-point equality.
    Finite { values: Vec<f64> },
    /// All integers (as exact doubles).
    Integers,
}

impl WeightDomain {
    pub fn finite(values: &[f64]) -> Self {
        WeightDomain::Finite {
            values: values.to_vec(),
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        match self {
            WeightDomain::Finite { values } => values.contains(&v),
            WeightDomain::Integers => v.fract() == 0.0 && v.is_finite(),
        }
    }

    /// The domain extended by `{0, 1}` — what a transpiled network is audited
    /// against.
    pub fn with_zero_one(&self) -> Self {
        match self {
            WeightDomain::Finite { values } => {
                let mut extended = values.clone();
                for extra in [0.0, 1.0] {
                    if !extended.contains(&extra) {
                        extended.push(extra);
                    }
                }
                WeightDomain::Finite { values: extended }
            }
            WeightDomain::Integers => WeightDomain::Integers,
        }
    }
}

/// Result of a weight-domain audit.
#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub passed: bool,
    pub checked: usize,
    /// Distinct offending values in encounter order (capped).
    pub offending: Vec<f64>,
}

const MAX_OFFENDING: usize = 16;

/// Passes iff every collected weight lies in the domain. Use
/// [`crate::fnn::Fnn::weights`] / [`crate::cnn::Cnn::weights`] to collect.
pub fn audit_weight_domain(weights: &[f64], domain: &WeightDomain) -> AuditReport {
    let mut offending: Vec<f64> = Vec::new();
    for &w in weights {
        if !domain.contains(w)
            && !offending.iter().any(|o| o.to_bits() == w.to_bits())
            && offending.len() < MAX_OFFENDING
        {
            offending.push(w);
        }
    }
    AuditReport {
        passed: offending.is_empty(),
        checked: weights.len(),
        offending,
    }
}

/// A channel map defined by a closure, for reference functions in tests and
/// demos (e.g. the equivariant extension of a scalar target).
pub struct FnMap<F> {
    group: Arc<FiniteGroup>,
    in_channels: usize,
    out_channels: usize,
    f: F,
}

impl<F> FnMap<F>
where
    F: Fn(&ChannelSignal) -> Result<ChannelSignal>,
{
    pub fn new(group: Arc<FiniteGroup>, in_channels: usize, out_channels: usize, f: F) -> Self {
        FnMap {
            group,
            in_channels,
            out_channels,
            f,
        }
    }
}

impl<F> ChannelMap for FnMap<F>
where
    F: Fn(&ChannelSignal) -> Result<ChannelSignal>,
{
    fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    fn in_channels(&self) -> usize {
        self.in_channels
    }

    fn out_channels(&self) -> usize {
        self.out_channels
    }

    fn apply(&self, x: &ChannelSignal) -> Result<ChannelSignal> {
        (self.f)(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::{self, AffineMap};
    use crate::cnn::{self, Cnn, ConvLayer, FilteringMap};
    use crate::fnn::{Activation, Fnn};

    fn z(n: usize) -> Arc<FiniteGroup> {
        FiniteGroup::cyclic(n).unwrap()
    }

    fn identity_cnn(group: &Arc<FiniteGroup>) -> Cnn {
        Cnn::new(
            Arc::clone(group),
            vec![ConvLayer::new(
                FilteringMap::delta(Arc::clone(group), 1).unwrap(),
                AffineMap::identity(1),
            )
            .unwrap()],
            Activation::Relu,
        )
        .unwrap()
    }

    fn biased_identity_cnn(group: &Arc<FiniteGroup>, bias: f64) -> Cnn {
        Cnn::new(
            Arc::clone(group),
            vec![ConvLayer::new(
                FilteringMap::delta(Arc::clone(group), 1).unwrap(),
                AffineMap::new(1, 1, vec![(0, 0, 1.0)], vec![bias]).unwrap(),
            )
            .unwrap()],
            Activation::Relu,
        )
        .unwrap()
    }

    #[test]
    fn cnn_realisations_are_equivariant() {
        let group = z(5);
        let mut rng = crate::rng::seeded(113);
        let net = cnn::random_cnn(&group, 2, 2, 2, 0.7, Activation::Relu, &mut rng);
        let samples = SampleSet::random_normal(&group, net.in_channels(), 8, 1);
        let verdict = check_equivariance(&net, &samples, 1e-9).unwrap();
        assert!(verdict.passed, "max deviation {}", verdict.max_deviation);
        assert_eq!(verdict.tested_shifts, 5);
    }

    #[test]
    fn identity_map_is_exactly_equivariant() {
        let group = z(4);
        let net = identity_cnn(&group);
        let samples = SampleSet::random_normal(&group, 1, 4, 2);
        let verdict = check_equivariance(&net, &samples, 0.0).unwrap();
        assert!(verdict.passed);
        assert_eq!(verdict.max_deviation, 0.0);
    }

    #[test]
    fn dense_affine_map_fails_with_witness() {
        let group = z(3);
        let mut rng = crate::rng::seeded(127);
        let net = Fnn::new(
            Arc::clone(&group),
            1,
            vec![affine::random_sparse(3, 3, 1.0, &mut rng)],
            Activation::Identity,
        )
        .unwrap();
        let view = net.as_channel_map(1).unwrap();
        let samples = SampleSet::random_normal(&group, 1, 4, 3);
        let verdict = check_equivariance(&view, &samples, 1e-9).unwrap();
        assert!(!verdict.passed);
        let witness = verdict.witness.expect("failure must carry a witness");
        assert!(witness.shift != FiniteGroup::IDENTITY);
    }

    #[test]
    fn symmetrize_enumerates_orbits() {
        let group = z(2);
        let point = ChannelSignal::new(Arc::clone(&group), 1, vec![1.0, 2.0]).unwrap();
        let set = SampleSet::new(Arc::clone(&group), 1, vec![point]).unwrap();
        let sym = set.symmetrize();
        assert!(sym.is_symmetrized());
        assert_eq!(sym.len(), 2);
        assert_eq!(sym.points()[0].values(), &[1.0, 2.0]);
        assert_eq!(sym.points()[1].values(), &[2.0, 1.0]);
    }

    #[test]
    fn symmetrize_constant_point_copies_it() {
        let group = z(4);
        let point = ChannelSignal::new(Arc::clone(&group), 1, vec![3.0; 4]).unwrap();
        let set = SampleSet::new(Arc::clone(&group), 1, vec![point.clone()]).unwrap();
        let sym = set.symmetrize();
        assert_eq!(sym.len(), 4);
        for p in sym.points() {
            assert_eq!(p, &point);
        }
    }

    #[test]
    fn symmetrize_orbit_multiplies_multiset() {
        let group = z(3);
        let point = ChannelSignal::new(Arc::clone(&group), 1, vec![1.0, 2.0, 3.0]).unwrap();
        let orbit = SampleSet::new(Arc::clone(&group), 1, vec![point]).unwrap().symmetrize();
        let twice = orbit.symmetrize();
        assert_eq!(twice.len(), 9);
        let flatten_sorted = |s: &SampleSet| {
            let mut all: Vec<f64> = s
                .points()
                .iter()
                .flat_map(|p| p.values().to_vec())
                .collect();
            all.sort_by(f64::total_cmp);
            all
        };
        let mut orbit_thrice = flatten_sorted(&orbit);
        orbit_thrice.extend(flatten_sorted(&orbit));
        orbit_thrice.extend(flatten_sorted(&orbit));
        orbit_thrice.sort_by(f64::total_cmp);
        assert_eq!(flatten_sorted(&twice), orbit_thrice);
    }

    #[test]
    fn lp_distance_basics() {
        let group = z(4);
        let f = identity_cnn(&group);
        let g = identity_cnn(&group);
        let samples = SampleSet::random_normal(&group, 1, 5, 4);
        assert_eq!(empirical_lp_distance(&f, &g, &samples, 2.0).unwrap(), 0.0);

        // One sample, one coordinate differing by 3: distance is 3 for every p.
        let ident = FnMap::new(Arc::clone(&group), 1, 1, |x: &ChannelSignal| Ok(x.clone()));
        let bumped = FnMap::new(Arc::clone(&group), 1, 1, |x: &ChannelSignal| {
            let mut values = x.values().to_vec();
            values[0] += 3.0;
            ChannelSignal::new(Arc::clone(x.group()), 1, values)
        });
        let zero = ChannelSignal::zeros(Arc::clone(&group), 1).unwrap();
        let single = SampleSet::new(Arc::clone(&group), 1, vec![zero]).unwrap();
        for p in [0.5, 1.0, 2.0, f64::INFINITY] {
            let d = empirical_lp_distance(&ident, &bumped, &single, p).unwrap();
            assert!(relative_deviation(d, 3.0) < 1e-12, "p = {p}: {d}");
        }

        assert!(empirical_lp_distance(&f, &g, &samples, 0.0).is_err());
        assert!(empirical_lp_distance(&f, &g, &samples, -1.0).is_err());
        let empty = SampleSet::new(Arc::clone(&group), 1, vec![]).unwrap();
        assert!(empirical_lp_distance(&f, &g, &empty, 1.0).is_err());
    }

    #[test]
    fn norm_identity_factor_on_z4() {
        let group = z(4);
        let f = identity_cnn(&group);
        let g = biased_identity_cnn(&group, 0.5);
        // One constant point; its orbit is 4 identical copies.
        let constant = ChannelSignal::new(Arc::clone(&group), 1, vec![2.0; 4]).unwrap();
        let samples = SampleSet::new(Arc::clone(&group), 1, vec![constant])
            .unwrap()
            .symmetrize();
        let report = transfer_norm_identity_check(&f, &g, &samples, 2.0).unwrap();
        // Identity-coordinate distance is (4·(1/2)²)^½ = 1, so the full
        // distance must be |G|^{1/2}·1 = 2.
        assert!(relative_deviation(report.rhs, 2.0) < 1e-12);
        assert!(relative_deviation(report.lhs, 2.0) < 1e-12);
        assert!(report.relative_gap <= 1e-9);
    }

    #[test]
    fn norm_identity_infinity_convention() {
        let group = z(3);
        let f = identity_cnn(&group);
        let g = biased_identity_cnn(&group, 1.25);
        let samples = SampleSet::random_normal(&group, 1, 6, 5).symmetrize();
        let report = transfer_norm_identity_check(&f, &g, &samples, f64::INFINITY).unwrap();
        assert_eq!(report.lhs, report.rhs, "|G|^(1/∞) = 1 makes both sides equal");
        assert!(report.relative_gap == 0.0);
    }

    #[test]
    fn norm_identity_requires_symmetrized_samples() {
        let group = z(3);
        let f = identity_cnn(&group);
        let g = identity_cnn(&group);
        let samples = SampleSet::random_normal(&group, 1, 4, 6);
        assert!(matches!(
            transfer_norm_identity_check(&f, &g, &samples, 1.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn component_identity_for_equivariant_maps() {
        // (F)_g(x) = (F)_1(S_{g⁻¹} x) for equivariant F.
        let group = z(4);
        let mut rng = crate::rng::seeded(131);
        let net = cnn::random_cnn(&group, 2, 2, 2, 0.8, Activation::Relu, &mut rng);
        for _ in 0..5 {
            let x = rng::normal_signal(&group, net.in_channels(), &mut rng);
            let out = net.realize(&x).unwrap();
            for g in 0..4 {
                let component_g = out.project(g).unwrap();
                let via_shift = net
                    .realize(&x.shift(group.inverse(g)).unwrap())
                    .unwrap()
                    .project(FiniteGroup::IDENTITY)
                    .unwrap();
                for (a, b) in component_g.iter().zip(&via_shift) {
                    assert!(relative_deviation(*a, *b) < 1e-9);
                }
            }
        }
    }

    #[test]
    fn zero_identity_distance_propagates_to_full() {
        let group = z(3);
        let f = identity_cnn(&group);
        let g = identity_cnn(&group);
        let samples = SampleSet::random_normal(&group, 1, 4, 7).symmetrize();
        let report = transfer_norm_identity_check(&f, &g, &samples, 2.0).unwrap();
        assert_eq!(report.lhs, 0.0);
        assert_eq!(report.rhs, 0.0);
    }

    #[test]
    fn audit_examples() {
        let group = z(2);
        let zero_net = Fnn::new(
            Arc::clone(&group),
            1,
            vec![AffineMap::zero(2, 2)],
            Activation::Relu,
        )
        .unwrap();
        let report = audit_weight_domain(&zero_net.weights(), &WeightDomain::finite(&[0.0]));
        assert!(report.passed);

        let half = Fnn::new(
            Arc::clone(&group),
            1,
            vec![AffineMap::new(1, 2, vec![(0, 0, 0.5)], vec![0.0]).unwrap()],
            Activation::Relu,
        )
        .unwrap();
        let report = audit_weight_domain(&half.weights(), &WeightDomain::Integers);
        assert!(!report.passed);
        assert_eq!(report.offending, vec![0.5]);
    }

    #[test]
    fn domain_extension_adds_zero_and_one() {
        let domain = WeightDomain::finite(&[-1.0, 1.0]).with_zero_one();
        for v in [-1.0, 0.0, 1.0] {
            assert!(domain.contains(v));
        }
        assert!(!domain.contains(0.5));
        assert_eq!(WeightDomain::Integers.with_zero_one(), WeightDomain::Integers);
    }
}
