//! The five cancellation architectures: linear FIR, Hammerstein (magnitude
//! MLP then FIR), Wiener (FIR then magnitude MLP), Wiener-Hammerstein
//! (MLP, FIR, MLP) and the time-delay FFNN over a sliding complex window.
//!
//! All models map a complex input sequence to a same-length causal complex
//! output with zero-padded history. Gradients are hand-derived for these
//! fixed graphs; complex quantities are differentiated as real pairs and a
//! complex gradient `g` stands for `∂L/∂re + j·∂L/∂im`.

mod checkpoint;
mod model;
mod params;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use model::{backward, forward, mlp_forward, Model, Trace};
pub use params::{init_params, Layout, ParamVector, Segment};

pub const DEFAULT_CONTEXT_LEN: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    Hammerstein,
    Wiener,
    WienerHammerstein,
    Ffnn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Linear,
        ModelKind::Ffnn,
        ModelKind::Hammerstein,
        ModelKind::Wiener,
        ModelKind::WienerHammerstein,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Linear => "linear",
            ModelKind::Hammerstein => "hammerstein",
            ModelKind::Wiener => "wiener",
            ModelKind::WienerHammerstein => "wiener_hammerstein",
            ModelKind::Ffnn => "ffnn",
        }
    }

    /// GMAC figures printed in the published comparison table, for reference
    /// next to the computed values.
    pub fn published_gmacs(&self) -> f64 {
        match self {
            ModelKind::Linear => 0.00053,
            ModelKind::Ffnn => 0.01468,
            ModelKind::Hammerstein => 0.00143,
            ModelKind::Wiener => 0.00152,
            ModelKind::WienerHammerstein => 0.00187,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Argument(format!("unknown model kind '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    #[inline]
    pub fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Scalar magnitude-to-magnitude MLP: one hidden layer, single linear output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MagnitudeMlpSpec {
    pub hidden_width: usize,
    pub activation: Activation,
    pub hidden_bias: bool,
    pub output_bias: bool,
}

impl MagnitudeMlpSpec {
    /// Tanh stage of the Hammerstein model, no biases (16 weights).
    pub fn hammerstein() -> Self {
        Self {
            hidden_width: 8,
            activation: Activation::Tanh,
            hidden_bias: false,
            output_bias: false,
        }
    }

    /// ReLU stage of the Wiener model with all biases (25 parameters).
    pub fn wiener() -> Self {
        Self {
            hidden_width: 8,
            activation: Activation::Relu,
            hidden_bias: true,
            output_bias: true,
        }
    }

    /// ReLU output stage of the Wiener-Hammerstein model: hidden biases
    /// only (24 parameters).
    pub fn wiener_hammerstein_post() -> Self {
        Self {
            output_bias: false,
            ..Self::wiener()
        }
    }

    pub fn param_count(&self) -> usize {
        let w = self.hidden_width;
        2 * w + if self.hidden_bias { w } else { 0 } + usize::from(self.output_bias)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelArch {
    pub kind: ModelKind,
    pub context_len: usize,
    pub mlp_pre: Option<MagnitudeMlpSpec>,
    pub mlp_post: Option<MagnitudeMlpSpec>,
    #[serde(default)]
    pub ffnn_hidden: Vec<usize>,
}

impl ModelArch {
    pub fn linear(context_len: usize) -> Self {
        Self {
            kind: ModelKind::Linear,
            context_len,
            mlp_pre: None,
            mlp_post: None,
            ffnn_hidden: vec![],
        }
    }

    pub fn hammerstein(context_len: usize) -> Self {
        Self {
            kind: ModelKind::Hammerstein,
            mlp_pre: Some(MagnitudeMlpSpec::hammerstein()),
            ..Self::linear(context_len)
        }
    }

    pub fn wiener(context_len: usize) -> Self {
        Self {
            kind: ModelKind::Wiener,
            mlp_post: Some(MagnitudeMlpSpec::wiener()),
            ..Self::linear(context_len)
        }
    }

    pub fn wiener_hammerstein(context_len: usize) -> Self {
        Self {
            kind: ModelKind::WienerHammerstein,
            mlp_pre: Some(MagnitudeMlpSpec::hammerstein()),
            mlp_post: Some(MagnitudeMlpSpec::wiener_hammerstein_post()),
            ..Self::linear(context_len)
        }
    }

    /// Sliding window of `context_len` complex samples → 17 ReLU → 2 linear.
    pub fn ffnn(context_len: usize) -> Self {
        Self {
            kind: ModelKind::Ffnn,
            ffnn_hidden: vec![17],
            ..Self::linear(context_len)
        }
    }

    pub fn default_for(kind: ModelKind) -> Self {
        Self::with_context(kind, DEFAULT_CONTEXT_LEN)
    }

    pub fn with_context(kind: ModelKind, l: usize) -> Self {
        match kind {
            ModelKind::Linear => Self::linear(l),
            ModelKind::Hammerstein => Self::hammerstein(l),
            ModelKind::Wiener => Self::wiener(l),
            ModelKind::WienerHammerstein => Self::wiener_hammerstein(l),
            ModelKind::Ffnn => Self::ffnn(l),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.context_len == 0 {
            return Err(Error::Config("context_len must be at least 1".into()));
        }
        let (pre, post) = (self.mlp_pre.is_some(), self.mlp_post.is_some());
        let shape_ok = match self.kind {
            ModelKind::Linear => !pre && !post,
            ModelKind::Hammerstein => pre && !post,
            ModelKind::Wiener => !pre && post,
            ModelKind::WienerHammerstein => pre && post,
            ModelKind::Ffnn => !pre && !post && !self.ffnn_hidden.is_empty(),
        };
        if !shape_ok {
            return Err(Error::Config(format!(
                "{} architecture has inconsistent stages",
                self.kind
            )));
        }
        if self.kind != ModelKind::Ffnn && !self.ffnn_hidden.is_empty() {
            return Err(Error::Config("ffnn_hidden set on a non-FFNN model".into()));
        }
        let widths_ok = self.ffnn_hidden.iter().all(|&w| w > 0)
            && [self.mlp_pre, self.mlp_post]
                .iter()
                .flatten()
                .all(|m| m.hidden_width > 0);
        if !widths_ok {
            return Err(Error::Config("hidden widths must be positive".into()));
        }
        Ok(())
    }
}

/// Number of real trainable scalars.
pub fn count_params(arch: &ModelArch) -> usize {
    Layout::for_arch(arch).total()
}

/// Compute in GMAC, counting one multiply-accumulate per real parameter per
/// output sample.
pub fn count_macs(arch: &ModelArch, n_samples: usize) -> f64 {
    count_params(arch) as f64 * n_samples as f64 / 1e9
}
