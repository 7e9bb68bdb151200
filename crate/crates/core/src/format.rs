//! On-disk formats: groups, networks, signals, and reports.
//!
//! All artifacts are JSON with a fixed field order and shortest round-trip
//! number formatting, so a stored document is byte-stable under load/store.
//! Matrix triplets are `[row, col, value]` with 0-based indices; filters are
//! dense `|G|`-arrays; every flat array is channel-major.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::affine::AffineMap;
use crate::cnn::{Cnn, ConvLayer, FilteringMap};
use crate::error::{Error, Result};
use crate::fnn::{Activation, Fnn};
use crate::group::{FiniteGroup, GroupDescriptor, GroupSignal};
use crate::signal::ChannelSignal;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AffinePayload {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
    bias: Vec<f64>,
}

impl AffinePayload {
    fn of(map: &AffineMap) -> Self {
        AffinePayload {
            rows: map.rows(),
            cols: map.cols(),
            entries: map.entries().to_vec(),
            bias: map.bias().to_vec(),
        }
    }

    fn build(self) -> Result<AffineMap> {
        for value in self
            .entries
            .iter()
            .map(|(_, _, v)| *v)
            .chain(self.bias.iter().copied())
        {
            if !value.is_finite() {
                return Err(Error::Validation("weights must be finite".into()));
            }
        }
        AffineMap::new(self.rows, self.cols, self.entries, self.bias)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ConvLayerPayload {
    filters: Vec<Vec<f64>>,
    affine: AffinePayload,
}

/// The single on-disk network document. `kind` selects which payload fields
/// apply; unknown fields are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    format_version: u32,
    kind: String,
    group: GroupDescriptor,
    activation: Activation,
    #[serde(skip_serializing_if = "Option::is_none")]
    input_channels: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    channel_counts: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    filter_counts: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    layers: Option<Vec<AffinePayload>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    conv_layers: Option<Vec<ConvLayerPayload>>,
}

/// A network loaded from disk.
#[derive(Debug, Clone)]
pub enum Network {
    Fnn(Fnn),
    Cnn(Cnn),
}

impl Network {
    pub fn group(&self) -> &Arc<FiniteGroup> {
        match self {
            Network::Fnn(net) => net.group(),
            Network::Cnn(net) => net.group(),
        }
    }
}

fn fnn_to_file(net: &Fnn) -> NetworkFile {
    NetworkFile {
        format_version: FORMAT_VERSION,
        kind: "fnn".into(),
        group: net.group().descriptor().clone(),
        activation: net.activation(),
        input_channels: Some(net.input_channels()),
        channel_counts: None,
        filter_counts: None,
        layers: Some(net.layers().iter().map(AffinePayload::of).collect()),
        conv_layers: None,
    }
}

fn cnn_to_file(net: &Cnn) -> NetworkFile {
    NetworkFile {
        format_version: FORMAT_VERSION,
        kind: "cnn".into(),
        group: net.group().descriptor().clone(),
        activation: net.activation(),
        input_channels: None,
        channel_counts: Some(net.channel_counts()),
        filter_counts: Some(net.filter_counts()),
        layers: None,
        conv_layers: Some(
            net.layers()
                .iter()
                .map(|layer| ConvLayerPayload {
                    filters: layer
                        .filtering()
                        .filters()
                        .iter()
                        .map(|f| f.values().to_vec())
                        .collect(),
                    affine: AffinePayload::of(layer.affine()),
                })
                .collect(),
        ),
    }
}

fn file_to_network(file: NetworkFile) -> Result<Network> {
    if file.format_version != FORMAT_VERSION {
        return Err(Error::Validation(format!(
            "unsupported format_version {}",
            file.format_version
        )));
    }
    let group = FiniteGroup::from_descriptor(&file.group)?;
    match file.kind.as_str() {
        "fnn" => {
            let input_channels = file.input_channels.ok_or_else(|| {
                Error::Validation("fnn document is missing input_channels".into())
            })?;
            let payloads = file
                .layers
                .ok_or_else(|| Error::Validation("fnn document is missing layers".into()))?;
            let layers = payloads
                .into_iter()
                .map(AffinePayload::build)
                .collect::<Result<Vec<_>>>()?;
            let net = Fnn::new(group, input_channels, layers, file.activation)?;
            Ok(Network::Fnn(net))
        }
        "cnn" => {
            let payloads = file.conv_layers.ok_or_else(|| {
                Error::Validation("cnn document is missing conv_layers".into())
            })?;
            let channel_counts = file.channel_counts.ok_or_else(|| {
                Error::Validation("cnn document is missing channel_counts".into())
            })?;
            if channel_counts.len() != payloads.len() + 1 {
                return Err(Error::Validation(
                    "channel_counts must list one count per layer boundary".into(),
                ));
            }
            let n = group.order();
            let mut layers = Vec::with_capacity(payloads.len());
            for (l, payload) in payloads.into_iter().enumerate() {
                let mut filters = Vec::with_capacity(payload.filters.len());
                for taps in payload.filters {
                    if taps.len() != n {
                        return Err(Error::Validation(format!(
                            "layer {} has a filter of length {} on a group of order {}",
                            l + 1,
                            taps.len(),
                            n
                        )));
                    }
                    if taps.iter().any(|t| !t.is_finite()) {
                        return Err(Error::Validation("weights must be finite".into()));
                    }
                    filters.push(GroupSignal::new(Arc::clone(&group), taps)?);
                }
                let filtering =
                    FilteringMap::new(Arc::clone(&group), channel_counts[l], filters)?;
                layers.push(ConvLayer::new(filtering, payload.affine.build()?)?);
            }
            let net = Cnn::new(group, layers, file.activation)?;
            if let Some(declared) = file.filter_counts {
                if declared != net.filter_counts() {
                    return Err(Error::Validation(
                        "filter_counts do not match the layer payloads".into(),
                    ));
                }
            }
            if channel_counts != net.channel_counts() {
                return Err(Error::Validation(
                    "channel_counts do not match the layer payloads".into(),
                ));
            }
            Ok(Network::Cnn(net))
        }
        other => Err(Error::Validation(format!("unknown network kind {other:?}"))),
    }
}

/// Canonical serialization: pretty JSON plus a trailing newline.
fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Parse(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn network_to_string(net: &Network) -> Result<String> {
    match net {
        Network::Fnn(f) => to_canonical_json(&fnn_to_file(f)),
        Network::Cnn(c) => to_canonical_json(&cnn_to_file(c)),
    }
}

pub fn network_from_str(text: &str) -> Result<Network> {
    let file: NetworkFile = serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("{e} (line {}, column {})", e.line(), e.column())))?;
    file_to_network(file)
}

pub fn store_network(net: &Network, path: &Path) -> Result<()> {
    std::fs::write(path, network_to_string(net)?)?;
    Ok(())
}

pub fn load_network(path: &Path) -> Result<Network> {
    let text = std::fs::read_to_string(path)?;
    network_from_str(&text)
}

pub fn store_fnn(net: &Fnn, path: &Path) -> Result<()> {
    store_network(&Network::Fnn(net.clone()), path)
}

pub fn store_cnn(net: &Cnn, path: &Path) -> Result<()> {
    store_network(&Network::Cnn(net.clone()), path)
}

/// Signal literal: the declared channel count plus the channel-major flat
/// values. The group always comes from context (the network it feeds).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalLiteral {
    pub channels: usize,
    pub values: Vec<f64>,
}

pub fn signal_to_string(x: &ChannelSignal) -> Result<String> {
    to_canonical_json(&SignalLiteral {
        channels: x.channels(),
        values: x.values().to_vec(),
    })
}

pub fn signal_from_str(text: &str, group: &Arc<FiniteGroup>) -> Result<ChannelSignal> {
    let literal: SignalLiteral = serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("{e} (line {}, column {})", e.line(), e.column())))?;
    ChannelSignal::new(Arc::clone(group), literal.channels, literal.values)
}

pub fn load_signal(path: &Path, group: &Arc<FiniteGroup>) -> Result<ChannelSignal> {
    let text = std::fs::read_to_string(path)?;
    signal_from_str(&text, group)
}

/// Sample-set literal: shared channel count plus one flat array per point.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSetLiteral {
    pub channels: usize,
    pub points: Vec<Vec<f64>>,
}

pub fn sample_set_to_string(samples: &crate::verify::SampleSet) -> Result<String> {
    to_canonical_json(&SampleSetLiteral {
        channels: samples.channels(),
        points: samples
            .points()
            .iter()
            .map(|p| p.values().to_vec())
            .collect(),
    })
}

pub fn sample_set_from_str(
    text: &str,
    group: &Arc<FiniteGroup>,
) -> Result<crate::verify::SampleSet> {
    let literal: SampleSetLiteral = serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("{e} (line {}, column {})", e.line(), e.column())))?;
    let points = literal
        .points
        .into_iter()
        .map(|values| ChannelSignal::new(Arc::clone(group), literal.channels, values))
        .collect::<Result<Vec<_>>>()?;
    crate::verify::SampleSet::new(Arc::clone(group), literal.channels, points)
}

pub fn load_sample_set(path: &Path, group: &Arc<FiniteGroup>) -> Result<crate::verify::SampleSet> {
    let text = std::fs::read_to_string(path)?;
    sample_set_from_str(&text, group)
}

/// Group descriptor documents for the `group-check` workflow.
pub fn group_descriptor_from_str(text: &str) -> Result<GroupDescriptor> {
    serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("{e} (line {}, column {})", e.line(), e.column())))
}

pub fn load_group_descriptor(path: &Path) -> Result<GroupDescriptor> {
    let text = std::fs::read_to_string(path)?;
    group_descriptor_from_str(&text)
}

/// Serializes any report type in the shared canonical form.
pub fn report_to_string<T: Serialize>(report: &T) -> Result<String> {
    to_canonical_json(report)
}

pub fn store_report<T: Serialize>(report: &T, path: &Path) -> Result<()> {
    std::fs::write(path, report_to_string(report)?)?;
    Ok(())
}
