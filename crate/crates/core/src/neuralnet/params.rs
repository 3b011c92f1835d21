use serde::{Deserialize, Serialize};

use super::{Activation, MagnitudeMlpSpec, ModelArch, ModelKind};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// One named block of the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub name: String,
    pub offset: usize,
    pub len: usize,
    pub shape: Vec<usize>,
    /// Values are stored as interleaved (re, im) pairs.
    pub complex_pairs: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub segments: Vec<Segment>,
}

impl Layout {
    pub fn for_arch(arch: &ModelArch) -> Self {
        Plan::build(arch).1
    }

    pub fn total(&self) -> usize {
        self.segments.iter().map(|s| s.len).sum()
    }

    pub fn segment(&self, name: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.name == name)
    }

    /// Segments are contiguous, in order, and cover `0..total`.
    pub fn is_contiguous(&self) -> bool {
        let mut next = 0;
        for s in &self.segments {
            if s.offset != next || s.len != s.shape.iter().product::<usize>() * (1 + usize::from(s.complex_pairs)) {
                return false;
            }
            next += s.len;
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub values: Vec<f64>,
    pub layout: Layout,
}

impl ParamVector {
    pub fn zeros(layout: Layout) -> Self {
        Self {
            values: vec![0.0; layout.total()],
            layout,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn segment(&self, name: &str) -> Option<&[f64]> {
        self.layout
            .segment(name)
            .map(|s| &self.values[s.offset..s.offset + s.len])
    }

    pub fn segment_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        let s = self.layout.segment(name)?.clone();
        Some(&mut self.values[s.offset..s.offset + s.len])
    }

    pub(crate) fn check_against(&self, layout: &Layout) -> Result<()> {
        if &self.layout != layout || self.values.len() != layout.total() {
            return Err(Error::Structural(format!(
                "parameter vector of {} values does not match the architecture layout of {}",
                self.values.len(),
                layout.total()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct MlpIdx {
    pub width: usize,
    pub act: Activation,
    pub w1: usize,
    pub b1: Option<usize>,
    pub w2: usize,
    pub b2: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct DenseIdx {
    pub fan_in: usize,
    pub fan_out: usize,
    /// Row-major `[fan_out][fan_in]`.
    pub w: usize,
    pub b: usize,
}

#[derive(Debug, Clone)]
pub(crate) enum Plan {
    Linear {
        fir: usize,
    },
    Hammerstein {
        pre: MlpIdx,
        fir: usize,
    },
    Wiener {
        fir: usize,
        post: MlpIdx,
    },
    WienerHammerstein {
        pre: MlpIdx,
        fir: usize,
        post: MlpIdx,
    },
    Ffnn {
        layers: Vec<DenseIdx>,
    },
}

struct LayoutBuilder {
    segments: Vec<Segment>,
    next: usize,
}

impl LayoutBuilder {
    fn push(&mut self, name: String, shape: Vec<usize>, complex_pairs: bool) -> usize {
        let len = shape.iter().product::<usize>() * if complex_pairs { 2 } else { 1 };
        let offset = self.next;
        self.segments.push(Segment {
            name,
            offset,
            len,
            shape,
            complex_pairs,
        });
        self.next += len;
        offset
    }

    fn mlp(&mut self, prefix: &str, spec: &MagnitudeMlpSpec) -> MlpIdx {
        let w = spec.hidden_width;
        let w1 = self.push(format!("{prefix}.w1"), vec![w], false);
        let b1 = spec
            .hidden_bias
            .then(|| self.push(format!("{prefix}.b1"), vec![w], false));
        let w2 = self.push(format!("{prefix}.w2"), vec![w], false);
        let b2 = spec
            .output_bias
            .then(|| self.push(format!("{prefix}.b2"), vec![1], false));
        MlpIdx {
            width: w,
            act: spec.activation,
            w1,
            b1,
            w2,
            b2,
        }
    }

    fn fir(&mut self, len: usize) -> usize {
        self.push("fir.taps".into(), vec![len], true)
    }
}

impl Plan {
    /// Builds the evaluation plan and the matching layout. Assumes `arch`
    /// has been validated.
    pub(crate) fn build(arch: &ModelArch) -> (Plan, Layout) {
        let mut b = LayoutBuilder {
            segments: vec![],
            next: 0,
        };
        let l = arch.context_len;
        let plan = match arch.kind {
            ModelKind::Linear => Plan::Linear { fir: b.fir(l) },
            ModelKind::Hammerstein => {
                let pre = b.mlp("mlp_pre", arch.mlp_pre.as_ref().expect("validated"));
                Plan::Hammerstein { pre, fir: b.fir(l) }
            }
            ModelKind::Wiener => {
                let fir = b.fir(l);
                let post = b.mlp("mlp_post", arch.mlp_post.as_ref().expect("validated"));
                Plan::Wiener { fir, post }
            }
            ModelKind::WienerHammerstein => {
                let pre = b.mlp("mlp_pre", arch.mlp_pre.as_ref().expect("validated"));
                let fir = b.fir(l);
                let post = b.mlp("mlp_post", arch.mlp_post.as_ref().expect("validated"));
                Plan::WienerHammerstein { pre, fir, post }
            }
            ModelKind::Ffnn => {
                let mut fan_in = 2 * l;
                let mut layers = vec![];
                let widths = arch.ffnn_hidden.iter().copied().chain(std::iter::once(2));
                for (i, fan_out) in widths.enumerate() {
                    let w = b.push(format!("ffnn.l{i}.w"), vec![fan_out, fan_in], false);
                    let bias = b.push(format!("ffnn.l{i}.b"), vec![fan_out], false);
                    layers.push(DenseIdx {
                        fan_in,
                        fan_out,
                        w,
                        b: bias,
                    });
                    fan_in = fan_out;
                }
                Plan::Ffnn { layers }
            }
        };
        (
            plan,
            Layout {
                segments: b.segments,
            },
        )
    }
}

/// Deterministic initialization: FIR taps at a unit impulse plus uniform
/// noise of scale 1e-2, weights uniform in `±sqrt(1/fan_in)`, magnitude-MLP
/// hidden biases uniform in `±1`, other biases zero.
pub fn init_params(arch: &ModelArch, seed: u64) -> Result<ParamVector> {
    arch.validate()?;
    let layout = Layout::for_arch(arch);
    let mut p = ParamVector::zeros(layout.clone());
    let mut rng = SplitMix64::new(seed);
    for seg in &layout.segments {
        let vals = &mut p.values[seg.offset..seg.offset + seg.len];
        let field = seg.name.rsplit('.').next().unwrap_or("");
        match field {
            "taps" => {
                for v in vals.iter_mut() {
                    *v = rng.uniform(-1e-2, 1e-2);
                }
                vals[0] += 1.0;
            }
            // Inputs are magnitudes, so zero biases would leave every ReLU
            // unit either dead or linear; random biases spread the kinks.
            "w1" | "b1" => vals.iter_mut().for_each(|v| *v = rng.uniform(-1.0, 1.0)),
            "w2" => {
                let bound = (1.0 / seg.len as f64).sqrt();
                vals.iter_mut().for_each(|v| *v = rng.uniform(-bound, bound));
            }
            "w" => {
                let bound = (1.0 / seg.shape[1] as f64).sqrt();
                vals.iter_mut().for_each(|v| *v = rng.uniform(-bound, bound));
            }
            _ => {}
        }
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layouts_are_contiguous() {
        for kind in ModelKind::ALL {
            let layout = Layout::for_arch(&ModelArch::default_for(kind));
            assert!(layout.is_contiguous(), "{kind}");
        }
    }

    #[test]
    fn linear_init_is_perturbed_impulse() {
        let p = init_params(&ModelArch::linear(13), 1).unwrap();
        assert_eq!(p.len(), 26);
        let taps = p.segment("fir.taps").unwrap();
        assert!((taps[0] - 1.0).abs() <= 1e-2);
        assert!(taps[1..].iter().all(|v| v.abs() <= 1e-2));
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        for kind in ModelKind::ALL {
            let arch = ModelArch::default_for(kind);
            let a = init_params(&arch, 7).unwrap();
            assert_eq!(a, init_params(&arch, 7).unwrap());
            assert_ne!(a, init_params(&arch, 8).unwrap());
        }
        let p = init_params(&ModelArch::ffnn(13), 3).unwrap();
        let bound = (1.0f64 / 26.0).sqrt();
        assert!(p.segment("ffnn.l0.w").unwrap().iter().all(|v| v.abs() <= bound));
        assert!(p.segment("ffnn.l0.b").unwrap().iter().all(|v| *v == 0.0));
        let w = init_params(&ModelArch::wiener(13), 3).unwrap();
        let b1 = w.segment("mlp_post.b1").unwrap();
        assert!(b1.iter().all(|v| v.abs() <= 1.0) && b1.iter().any(|v| *v != 0.0));
        assert_eq!(w.segment("mlp_post.b2").unwrap(), &[0.0]);
    }
}
