use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    /// No padding; output side is `side - filter_width + 1`.
    Valid,
    /// Zero padding of `(filter_width - 1) / 2`; output side equals input side.
    Same,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv2d {
        out_channels: usize,
        filter_width: usize,
        padding: Padding,
    },
    #[serde(rename = "maxpool2x2")]
    MaxPool2x2,
    Relu,
    Flatten,
    Dense {
        out_units: usize,
    },
}

impl LayerSpec {
    pub fn conv(out_channels: usize, filter_width: usize, padding: Padding) -> Self {
        LayerSpec::Conv2d {
            out_channels,
            filter_width,
            padding,
        }
    }

    pub fn dense(out_units: usize) -> Self {
        LayerSpec::Dense { out_units }
    }

    pub fn is_parametric(&self) -> bool {
        matches!(self, LayerSpec::Conv2d { .. } | LayerSpec::Dense { .. })
    }
}

/// Per-example activation shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureShape {
    /// Height, width, channels; stored channel-minor (HWC).
    Spatial {
        h: usize,
        w: usize,
        c: usize,
    },
    Flat(usize),
}

impl FeatureShape {
    pub fn len(&self) -> usize {
        match *self {
            FeatureShape::Spatial { h, w, c } => h * w * c,
            FeatureShape::Flat(n) => n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> Vec<usize> {
        match *self {
            FeatureShape::Spatial { h, w, c } => vec![h, w, c],
            FeatureShape::Flat(n) => vec![n],
        }
    }
}

impl fmt::Display for FeatureShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureShape::Spatial { h, w, c } => write!(f, "{h}x{w}x{c}"),
            FeatureShape::Flat(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    /// (height, width, channels)
    pub input_shape: [usize; 3],
    pub layers: Vec<LayerSpec>,
    pub n_outputs: usize,
}

/// Shape bookkeeping for one parametric layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamLayerInfo {
    /// Index into `NetworkSpec::layers`.
    pub layer_index: usize,
    pub weight_shape: [usize; 4],
    pub weight_rank: usize,
    pub n_biases: usize,
    /// Fan-in of one output unit.
    pub n_in: usize,
}

impl ParamLayerInfo {
    pub fn weight_dims(&self) -> &[usize] {
        &self.weight_shape[..self.weight_rank]
    }
}

impl NetworkSpec {
    pub fn new(input_shape: [usize; 3], layers: Vec<LayerSpec>, n_outputs: usize) -> Result<Self> {
        let spec = Self {
            input_shape,
            layers,
            n_outputs,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Convolutional classifier: a valid 5x5 conv with `widths[0]` filters, then
    /// same-padded 3x3 convs for the remaining widths. Every conv is followed by
    /// ReLU and a 2x2 max pool; a dense layer maps the flattened features to
    /// the outputs.
    pub fn cnn(input_shape: [usize; 3], widths: &[usize], n_outputs: usize) -> Result<Self> {
        if widths.is_empty() {
            return Err(Error::InvalidSpec("a CNN needs at least one conv layer".into()));
        }
        let mut layers = Vec::new();
        for (i, &w) in widths.iter().enumerate() {
            let conv = if i == 0 {
                LayerSpec::conv(w, 5, Padding::Valid)
            } else {
                LayerSpec::conv(w, 3, Padding::Same)
            };
            layers.extend([conv, LayerSpec::Relu, LayerSpec::MaxPool2x2]);
        }
        layers.extend([LayerSpec::Flatten, LayerSpec::dense(n_outputs)]);
        Self::new(input_shape, layers, n_outputs)
    }

    /// Fully-connected classifier with `depth` ReLU hidden layers of `hidden` units.
    pub fn fcnn(input_shape: [usize; 3], depth: usize, hidden: usize, n_outputs: usize) -> Result<Self> {
        let mut layers = vec![LayerSpec::Flatten];
        for _ in 0..depth {
            layers.extend([LayerSpec::dense(hidden), LayerSpec::Relu]);
        }
        layers.push(LayerSpec::dense(n_outputs));
        Self::new(input_shape, layers, n_outputs)
    }

    /// Conv widths 16, 256, 4096, ... for the given depth.
    pub fn default_cnn_widths(depth: usize) -> Vec<usize> {
        (1..=depth as u32).map(|l| 16usize.pow(l)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        infer_shapes(self).map(|_| ())
    }

    pub fn input_len(&self) -> usize {
        self.input_shape.iter().product()
    }

    /// Parametric layers in order, with their parameter shapes.
    pub fn param_layers(&self) -> Result<Vec<ParamLayerInfo>> {
        let shapes = infer_shapes(self)?;
        let mut out = Vec::new();
        let mut prev = self.input_feature_shape();
        for (i, layer) in self.layers.iter().enumerate() {
            match (*layer, prev) {
                (
                    LayerSpec::Conv2d {
                        out_channels,
                        filter_width,
                        ..
                    },
                    FeatureShape::Spatial { c, .. },
                ) => out.push(ParamLayerInfo {
                    layer_index: i,
                    weight_shape: [out_channels, c, filter_width, filter_width],
                    weight_rank: 4,
                    n_biases: out_channels,
                    n_in: c * filter_width * filter_width,
                }),
                (LayerSpec::Dense { out_units }, FeatureShape::Flat(n)) => out.push(ParamLayerInfo {
                    layer_index: i,
                    weight_shape: [n, out_units, 0, 0],
                    weight_rank: 2,
                    n_biases: out_units,
                    n_in: n,
                }),
                _ => {}
            }
            prev = shapes[i];
        }
        Ok(out)
    }

    pub fn input_feature_shape(&self) -> FeatureShape {
        let [h, w, c] = self.input_shape;
        FeatureShape::Spatial { h, w, c }
    }

    /// Index of the first conv layer, if any.
    pub fn first_conv_index(&self) -> Option<usize> {
        self.layers.iter().position(|l| matches!(l, LayerSpec::Conv2d { .. }))
    }

    /// Index of the final dense layer.
    pub fn final_layer_index(&self) -> usize {
        self.layers.len() - 1
    }

    /// Replace the final dense layer so the network has `n_outputs` outputs.
    pub fn with_outputs(&self, n_outputs: usize) -> Result<Self> {
        let mut layers = self.layers.clone();
        if let Some(last) = layers.last_mut() {
            *last = LayerSpec::dense(n_outputs);
        }
        Self::new(self.input_shape, layers, n_outputs)
    }
}

/// Output shape of every layer, in order.
pub fn infer_shapes(spec: &NetworkSpec) -> Result<Vec<FeatureShape>> {
    if spec.input_shape.contains(&0) {
        return Err(Error::InvalidSpec(format!(
            "input shape {:?} has a zero dimension",
            spec.input_shape
        )));
    }
    if spec.n_outputs == 0 {
        return Err(Error::InvalidSpec("n_outputs must be positive".into()));
    }
    match spec.layers.last() {
        Some(LayerSpec::Dense { out_units }) if *out_units == spec.n_outputs => {}
        Some(_) => {
            return Err(Error::InvalidSpec(format!(
                "final layer must be dense with {} outputs",
                spec.n_outputs
            )))
        }
        None => return Err(Error::InvalidSpec("network has no layers".into())),
    }

    let mut shapes = Vec::with_capacity(spec.layers.len());
    let mut cur = spec.input_feature_shape();
    for (i, layer) in spec.layers.iter().enumerate() {
        cur = match (*layer, cur) {
            (
                LayerSpec::Conv2d {
                    out_channels,
                    filter_width,
                    padding,
                },
                FeatureShape::Spatial { h, w, .. },
            ) => {
                if out_channels == 0 {
                    return Err(Error::shape(i, "conv with zero output channels"));
                }
                if filter_width == 0 || filter_width % 2 == 0 {
                    return Err(Error::InvalidSpec(format!(
                        "layer {i}: filter width {filter_width} must be odd and positive"
                    )));
                }
                match padding {
                    Padding::Same => FeatureShape::Spatial { h, w, c: out_channels },
                    Padding::Valid => {
                        if h < filter_width || w < filter_width {
                            return Err(Error::shape(
                                i,
                                format!("{filter_width}x{filter_width} filter does not fit {h}x{w} input"),
                            ));
                        }
                        FeatureShape::Spatial {
                            h: h - filter_width + 1,
                            w: w - filter_width + 1,
                            c: out_channels,
                        }
                    }
                }
            }
            (LayerSpec::MaxPool2x2, FeatureShape::Spatial { h, w, c }) => {
                if h < 2 || w < 2 {
                    return Err(Error::shape(i, format!("cannot pool {h}x{w} input")));
                }
                FeatureShape::Spatial { h: h / 2, w: w / 2, c }
            }
            (LayerSpec::Relu, s) => s,
            (LayerSpec::Flatten, s) => FeatureShape::Flat(s.len()),
            (LayerSpec::Dense { out_units }, FeatureShape::Flat(_)) => {
                if out_units == 0 {
                    return Err(Error::shape(i, "dense with zero output units"));
                }
                FeatureShape::Flat(out_units)
            }
            (l, s) => {
                return Err(Error::shape(i, format!("{l:?} cannot take input of shape {s}")));
            }
        };
        shapes.push(cur);
    }
    Ok(shapes)
}
