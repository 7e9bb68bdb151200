//! End-to-end demo: approximate a scalar target with a small relu network,
//! transpile it into a convolutional network, and watch the approximation
//! error transfer — unchanged in the identity coordinate, scaled by
//! |G|^{1/p} over the whole output.
//!
//! Run with `cargo run -p gconvnet --example transfer_demo`.

use std::sync::Arc;

use gconvnet::fnn::Activation;
use gconvnet::group::FiniteGroup;
use gconvnet::signal::ChannelSignal;
use gconvnet::transpile::{build_interpolation_fnn, fnn_to_cnn, CheckConfig};
use gconvnet::verify::{
    check_equivariance, transfer_norm_identity_check, FnMap, SampleSet,
};

fn main() {
    let group = FiniteGroup::cyclic(4).unwrap();
    let n = group.order();

    // Target: |x_1|, sampled at 4 nodes. The kink at 0 falls between nodes,
    // so the interpolant misses it and the approximation error is real.
    let resolution = 4;
    let profile: Vec<f64> = (0..resolution)
        .map(|q| (q as f64 / (resolution - 1) as f64 - 0.5).abs())
        .collect();
    let (fnn, node_error) = build_interpolation_fnn(&group, 1, &profile).unwrap();
    println!("interpolant: {} layer(s), W = {}", fnn.depth(), fnn.weight_count());
    println!("error at its own nodes: {node_error:.3e}");
    assert_eq!(fnn.activation(), Activation::Relu);

    // Transpile and show the certificate.
    let (cnn, report) = fnn_to_cnn(&fnn, 1, &CheckConfig::default()).unwrap();
    println!(
        "transpiled: W_conv = {} ≤ 2·W = {}, channels {:?}, filters {:?}",
        report.target_weights,
        2 * report.source_weights,
        report.channel_counts,
        report.filter_counts
    );
    println!(
        "identity-coordinate deviation over {} random inputs: {:.3e}",
        report.equality_samples, report.equality_check
    );

    // The convolutional network is translation equivariant.
    let samples = SampleSet::random_normal(&group, 1, 16, 1);
    let verdict = check_equivariance(&cnn, &samples, 1e-9).unwrap();
    println!(
        "equivariance over all {} shifts: passed = {}, max deviation {:.3e}",
        verdict.tested_shifts, verdict.passed, verdict.max_deviation
    );

    // Equivariant extension of the target: component-wise absolute value.
    let f_true = FnMap::new(Arc::clone(&group), 1, 1, |x: &ChannelSignal| {
        let values = x.values().iter().map(|v| v.abs()).collect();
        ChannelSignal::new(Arc::clone(x.group()), 1, values)
    });

    // A fine evaluation grid along the first coordinate, closed under shifts.
    let points: Vec<ChannelSignal> = (0..65)
        .map(|m| {
            let t = m as f64 / 64.0 - 0.5;
            let mut values = vec![0.0; n];
            values[0] = t;
            ChannelSignal::new(Arc::clone(&group), 1, values).unwrap()
        })
        .collect();
    let samples = SampleSet::new(Arc::clone(&group), 1, points)
        .unwrap()
        .symmetrize();

    println!("\nerror transfer over a shift-closed sample set ({} points):", samples.len());
    for p in [1.0, 2.0, f64::INFINITY] {
        let identity = transfer_norm_identity_check(&f_true, &cnn, &samples, p).unwrap();
        let factor = if p.is_infinite() {
            1.0
        } else {
            (n as f64).powf(1.0 / p)
        };
        println!(
            "  p = {:>3}: full error {:.6} = |G|^(1/p) × {:.6} (factor {:.4}, gap {:.2e})",
            if p.is_infinite() { "inf".into() } else { format!("{p}") },
            identity.lhs,
            identity.rhs / factor,
            factor,
            identity.relative_gap
        );
    }
}
