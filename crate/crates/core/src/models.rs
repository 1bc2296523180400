//! Architecture builders, parameter accounting, freezing, and snapshots.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::gradcheck::Differentiable;
use crate::nn::loss::LossHead;
use crate::nn::{Conv2d, Dense, Dropout, GlobalAvgPool, Layer, LayerKind, MaxPool2x2, Mode, Op, Param, Relu};
use crate::rng::{Init, SeededRng};
use crate::tensor::{Scalar, Tensor};

/// Stable architecture identifiers used by the CLI and weight-file headers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArchId {
    SmallCnn,
    Vgg16,
    Vgg16Frozen,
    Mini,
    MiniFrozen,
}

impl ArchId {
    pub const ALL: [ArchId; 5] = [
        ArchId::SmallCnn,
        ArchId::Vgg16,
        ArchId::Vgg16Frozen,
        ArchId::Mini,
        ArchId::MiniFrozen,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ArchId::SmallCnn => "small-cnn",
            ArchId::Vgg16 => "vgg16",
            ArchId::Vgg16Frozen => "vgg16-frozen",
            ArchId::Mini => "mini",
            ArchId::MiniFrozen => "mini-frozen",
        }
    }

    pub fn is_frozen(self) -> bool {
        matches!(self, ArchId::Vgg16Frozen | ArchId::MiniFrozen)
    }

    pub fn is_vgg(self) -> bool {
        !matches!(self, ArchId::SmallCnn)
    }
}

impl fmt::Display for ArchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ArchId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ArchId::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown arch-id {s:?}")))
    }
}

/// Positive rational channel multiplier, written `num/den` (or a bare integer).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WidthMult {
    pub num: u32,
    pub den: u32,
}

impl WidthMult {
    pub const ONE: WidthMult = WidthMult { num: 1, den: 1 };
    pub const EIGHTH: WidthMult = WidthMult { num: 1, den: 8 };

    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::invalid("width multiplier must be positive"));
        }
        Ok(Self { num, den })
    }

    /// `floor(channels · num / den)`, at least 8.
    pub fn scale(self, channels: usize) -> usize {
        (channels * self.num as usize / self.den as usize).max(8)
    }
}

impl fmt::Display for WidthMult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for WidthMult {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("width multiplier {s:?} is not num/den"));
        let (n, d) = s.split_once('/').unwrap_or((s, "1"));
        WidthMult::new(n.trim().parse().map_err(|_| bad())?, d.trim().parse().map_err(|_| bad())?)
    }
}

impl Serialize for WidthMult {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for WidthMult {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// VGG-16 convolution widths per block.
pub const VGG16_BLOCKS: [&[usize]; 5] = [&[64, 64], &[128, 128], &[256, 256, 256], &[512, 512, 512], &[512, 512, 512]];
/// Small CNN convolution widths and hidden dense width.
pub const SMALL_CNN_WIDTHS: [usize; 4] = [64, 128, 256, 512];
pub const SMALL_CNN_HIDDEN: usize = 512;
pub const DEFAULT_DROPOUT: f64 = 0.5;

fn default_kernels() -> [usize; 4] {
    [3; 4]
}

fn default_dropout() -> f64 {
    DEFAULT_DROPOUT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchSpec {
    pub arch: ArchId,
    /// (channels, height, width)
    pub input: [usize; 3],
    pub width_mult: WidthMult,
    pub outputs: usize,
    /// Dropout rate of the small CNN; VGG heads go straight from GAP to logits.
    #[serde(default = "default_dropout")]
    pub dropout: f64,
    /// Per-layer kernel sizes of the small CNN (ignored by VGG variants).
    #[serde(default = "default_kernels")]
    pub kernels: [usize; 4],
    #[serde(default)]
    pub init: Init,
}

impl ArchSpec {
    /// Defaults per arch: full-size variants take 3×250×250 at width 1,
    /// mini variants take 1×64×64 at width 1/8.
    pub fn new(arch: ArchId, outputs: usize) -> Self {
        let (input, width_mult) = match arch {
            ArchId::Mini | ArchId::MiniFrozen => ([1, 64, 64], WidthMult::EIGHTH),
            _ => ([3, 250, 250], WidthMult::ONE),
        };
        Self {
            arch,
            input,
            width_mult,
            outputs,
            dropout: DEFAULT_DROPOUT,
            kernels: default_kernels(),
            init: Init::default(),
        }
    }

    pub fn with_input(mut self, input: [usize; 3]) -> Self {
        self.input = input;
        self
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    pub fn with_width(mut self, width_mult: WidthMult) -> Self {
        self.width_mult = width_mult;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.outputs == 0 || self.input.iter().any(|&d| d == 0) {
            return Err(Error::invalid("outputs and input extents must be positive"));
        }
        if self.kernels.iter().any(|k| k % 2 == 0) {
            return Err(Error::invalid("small-cnn kernels must be odd"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamCount {
    pub total: usize,
    pub trainable: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FreezePolicy {
    /// Every parameterised layer except the final dense layer is frozen.
    AllButLastDense,
    /// Exactly the named layers are frozen.
    ByName(Vec<String>),
    None,
}

/// Copies of every parameter tensor, keyed by layer name.
#[derive(Debug, Clone)]
pub struct Snapshot<T> {
    pub entries: Vec<(String, Vec<Tensor<T>>)>,
}

impl<T: Scalar> Snapshot<T> {
    pub fn bitwise_eq(&self, other: &Self) -> bool {
        self.entries.len() == other.entries.len()
            && self.entries.iter().zip(&other.entries).all(|((na, ta), (nb, tb))| {
                na == nb && ta.len() == tb.len() && ta.iter().zip(tb).all(|(a, b)| a.bitwise_eq(b))
            })
    }
}

#[derive(Debug, Clone)]
pub struct Model<T> {
    pub spec: ArchSpec,
    pub layers: Vec<Layer<T>>,
    pub loss: LossHead,
}

struct Builder<'a, T> {
    layers: Vec<Layer<T>>,
    rng: &'a mut SeededRng,
    init: Init,
}

impl<T: Scalar> Builder<'_, T> {
    fn conv(&mut self, name: String, cin: usize, cout: usize, k: usize) {
        self.layers.push(Layer::new(name.clone(), Op::Conv2d(Conv2d::with_init(cin, cout, k, self.init, self.rng))));
        self.layers.push(Layer::new(format!("{name}_relu"), Op::Relu(Relu::new())));
    }

    fn pool(&mut self, name: String) {
        self.layers.push(Layer::new(name, Op::MaxPool2x2(MaxPool2x2::new())));
    }

    fn dense(&mut self, name: &str, fin: usize, fout: usize) {
        self.layers.push(Layer::new(name, Op::Dense(Dense::with_init(fin, fout, self.init, self.rng))));
    }

    fn push(&mut self, name: &str, op: Op<T>) {
        self.layers.push(Layer::new(name, op));
    }
}

impl<T: Scalar> Model<T> {
    /// Build and initialise (`spec.init`, zero bias) from `seed`. Frozen
    /// arch-ids come back with every conv layer frozen.
    pub fn build(spec: &ArchSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = SeededRng::new(seed);
        let mut b = Builder {
            layers: Vec::new(),
            rng: &mut rng,
            init: spec.init,
        };
        let w = spec.width_mult;
        let mut cin = spec.input[0];
        if spec.arch.is_vgg() {
            for (bi, block) in VGG16_BLOCKS.iter().enumerate() {
                for (ci, &c) in block.iter().enumerate() {
                    let cout = w.scale(c);
                    b.conv(format!("block{}_conv{}", bi + 1, ci + 1), cin, cout, 3);
                    cin = cout;
                }
                // The fifth pool is left out so the CAM keeps a 2x finer grid.
                if bi < 4 {
                    b.pool(format!("block{}_pool", bi + 1));
                }
            }
            b.push("gap", Op::GlobalAvgPool(GlobalAvgPool::new()));
            b.dense("logits", cin, spec.outputs);
        } else {
            for (i, (&c, &k)) in SMALL_CNN_WIDTHS.iter().zip(&spec.kernels).enumerate() {
                let cout = w.scale(c);
                b.conv(format!("conv{}", i + 1), cin, cout, k);
                b.pool(format!("pool{}", i + 1));
                cin = cout;
            }
            let hidden = w.scale(SMALL_CNN_HIDDEN);
            b.push("dropout", Op::Dropout(Dropout::new(spec.dropout)?));
            b.push("gap", Op::GlobalAvgPool(GlobalAvgPool::new()));
            b.dense("fc1", cin, hidden);
            b.push("fc1_relu", Op::Relu(Relu::new()));
            b.dense("logits", hidden, spec.outputs);
        }
        let mut model = Model {
            spec: spec.clone(),
            layers: b.layers,
            loss: LossHead::for_outputs(spec.outputs),
        };
        if spec.arch.is_frozen() {
            model.freeze(&FreezePolicy::AllButLastDense)?;
        }
        Ok(model)
    }

    pub fn layer(&self, name: &str) -> Option<&Layer<T>> {
        self.layers.iter().find(|l| l.name == name)
    }

    pub fn layer_mut(&mut self, name: &str) -> Option<&mut Layer<T>> {
        self.layers.iter_mut().find(|l| l.name == name)
    }

    pub fn count_params(&self) -> ParamCount {
        self.layers.iter().fold(ParamCount { total: 0, trainable: 0 }, |acc, l| {
            let n = l.param_count();
            ParamCount {
                total: acc.total + n,
                trainable: acc.trainable + if l.frozen { 0 } else { n },
            }
        })
    }

    /// Parameter count of every layer ahead of global average pooling.
    pub fn backbone_param_count(&self) -> usize {
        let end = self.gap_index().unwrap_or(self.layers.len());
        self.layers[..end].iter().map(|l| l.param_count()).sum()
    }

    pub fn gap_index(&self) -> Option<usize> {
        self.layers.iter().position(|l| l.kind() == LayerKind::GlobalAvgPool)
    }

    pub fn freeze(&mut self, policy: &FreezePolicy) -> Result<()> {
        match policy {
            FreezePolicy::None => self.layers.iter_mut().for_each(|l| l.frozen = false),
            FreezePolicy::AllButLastDense => {
                let last = self
                    .layers
                    .iter()
                    .rposition(|l| l.kind() == LayerKind::Dense)
                    .ok_or_else(|| Error::invalid("model has no dense layer"))?;
                for (i, l) in self.layers.iter_mut().enumerate() {
                    l.frozen = l.has_params() && i != last;
                }
            }
            FreezePolicy::ByName(names) => {
                if let Some(bad) = names.iter().find(|n| self.layer(n).is_none()) {
                    return Err(Error::invalid(format!("no layer named {bad:?}")));
                }
                for l in &mut self.layers {
                    l.frozen = names.contains(&l.name);
                }
            }
        }
        for l in self.layers.iter_mut().filter(|l| l.frozen) {
            l.clear_grads();
        }
        Ok(())
    }

    /// Width of the pooled feature vector (inputs of the first dense layer
    /// after global average pooling).
    pub fn feature_dim(&self) -> Option<usize> {
        let gap = self.gap_index()?;
        self.layers[gap + 1..].iter().find_map(|l| match &l.op {
            Op::Dense(d) => Some(d.inputs()),
            _ => None,
        })
    }

    /// Index of the lowest trainable layer, if any.
    pub fn first_trainable(&self) -> Option<usize> {
        self.layers.iter().position(|l| l.is_trainable())
    }

    /// Pure eval-mode forward pass.
    pub fn predict(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.forward_range_eval(x, 0, self.layers.len())
    }

    /// Eval-mode forward through `layers[start..end]`.
    pub fn forward_range_eval(&self, x: &Tensor<T>, start: usize, end: usize) -> Result<Tensor<T>> {
        let mut h = self.layers[start].forward_eval(x)?;
        for l in &self.layers[start + 1..end] {
            h = l.forward_eval(&h)?;
        }
        Ok(h)
    }

    /// Forward pass. In train mode, layers below the first trainable layer
    /// skip caching (nothing will flow back into them); dropout still draws.
    pub fn forward(&mut self, x: &Tensor<T>, mode: Mode, rng: &mut SeededRng) -> Result<Tensor<T>> {
        let cache_from = match mode {
            Mode::Eval => return self.predict(x),
            Mode::Train => self.first_trainable().unwrap_or(self.layers.len()),
        };
        self.forward_train_from(x, rng, cache_from)
    }

    fn forward_train_from(&mut self, x: &Tensor<T>, rng: &mut SeededRng, cache_from: usize) -> Result<Tensor<T>> {
        let mut h: Option<Tensor<T>> = None;
        for (i, l) in self.layers.iter_mut().enumerate() {
            let input = h.as_ref().unwrap_or(x);
            let out = if i >= cache_from || l.kind() == LayerKind::Dropout {
                l.forward_train(input, rng)?
            } else {
                l.forward_eval(input)?
            };
            h = Some(out);
        }
        h.ok_or_else(|| Error::invalid("model has no layers"))
    }

    /// Backpropagate `dlogits` down to the first trainable layer.
    pub fn backward(&mut self, dlogits: &Tensor<T>) -> Result<()> {
        let Some(stop) = self.first_trainable() else {
            return Ok(());
        };
        self.backward_to(dlogits, stop).map(|_| ())
    }

    fn backward_to(&mut self, dlogits: &Tensor<T>, stop: usize) -> Result<Option<Tensor<T>>> {
        let mut g = dlogits.clone();
        for i in (stop..self.layers.len()).rev() {
            match self.layers[i].backward(&g, i > stop || stop == 0)? {
                Some(dx) => g = dx,
                None => return Ok(None),
            }
        }
        Ok(Some(g))
    }

    pub fn clear_caches(&mut self) {
        self.layers.iter_mut().for_each(Layer::clear_cache);
    }

    /// Trainable parameters in layer order.
    pub fn trainable_params_mut(&mut self) -> Vec<&mut Param<T>> {
        self.layers
            .iter_mut()
            .filter(|l| l.is_trainable())
            .flat_map(|l| l.params_mut())
            .collect()
    }

    /// `(qualified name, tensor)` for every parameter, in layer order.
    pub fn named_params(&self) -> Vec<(String, &Tensor<T>)> {
        self.layers
            .iter()
            .flat_map(|l| l.params().into_iter().map(move |p| (format!("{}.{}", l.name, p.name), &p.value)))
            .collect()
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, &mut Tensor<T>)> {
        self.layers
            .iter_mut()
            .flat_map(|l| {
                let name = l.name.clone();
                l.params_mut()
                    .into_iter()
                    .map(move |p| (format!("{name}.{}", p.name), &mut p.value))
            })
            .collect()
    }

    pub fn snapshot(&self) -> Snapshot<T> {
        Snapshot {
            entries: self
                .layers
                .iter()
                .filter(|l| l.has_params())
                .map(|l| (l.name.clone(), l.params().iter().map(|p| p.value.clone()).collect()))
                .collect(),
        }
    }

    pub fn restore(&mut self, snap: &Snapshot<T>) -> Result<()> {
        let targets: Vec<&Layer<T>> = self.layers.iter().filter(|l| l.has_params()).collect();
        let compatible = targets.len() == snap.entries.len()
            && targets.iter().zip(&snap.entries).all(|(l, (name, ts))| {
                &l.name == name
                    && l.params().len() == ts.len()
                    && l.params().iter().zip(ts).all(|(p, t)| p.value.shape() == t.shape())
            });
        if !compatible {
            return Err(Error::shape("snapshot does not match this architecture"));
        }
        let layers = self.layers.iter_mut().filter(|l| l.has_params());
        for (l, (_, ts)) in layers.zip(&snap.entries) {
            for (p, t) in l.params_mut().into_iter().zip(ts) {
                p.value = t.clone();
            }
        }
        Ok(())
    }

    /// The layers after global average pooling as a standalone model over
    /// feature vectors (shares nothing with `self`).
    pub fn head(&self) -> Result<Model<T>> {
        let gap = self.gap_index().ok_or_else(|| Error::invalid("model has no global average pooling"))?;
        let mut layers: Vec<Layer<T>> = self.layers[gap + 1..].to_vec();
        layers.iter_mut().for_each(Layer::clear_cache);
        Ok(Model {
            spec: self.spec.clone(),
            layers,
            loss: self.loss,
        })
    }

    /// Copy parameter values of same-named layers from `other` (used to put a
    /// trained head back into its full model).
    pub fn copy_params_from(&mut self, other: &Model<T>) -> Result<()> {
        for src in other.layers.iter().filter(|l| l.has_params()) {
            let dst = self
                .layer_mut(&src.name)
                .ok_or_else(|| Error::invalid(format!("no layer named {:?}", src.name)))?;
            for (d, s) in dst.params_mut().into_iter().zip(src.params()) {
                if d.value.shape() != s.value.shape() {
                    return Err(Error::shape(format!("{}: parameter shapes differ", src.name)));
                }
                d.value = s.value.clone();
            }
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> Result<Model<U>> {
        let mut out = Model::<U>::build(&self.spec, 0)?;
        out.layers = out
            .layers
            .into_iter()
            .zip(&self.layers)
            .map(|(mut dst, src)| {
                dst.frozen = src.frozen;
                for (d, s) in dst.params_mut().into_iter().zip(src.params()) {
                    d.value = s.value.cast();
                }
                dst
            })
            .collect();
        Ok(out)
    }

    /// Human-readable layer table.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for l in &self.layers {
            let shapes: Vec<String> = l.params().iter().map(|p| format!("{:?}", p.value.shape())).collect();
            s.push_str(&format!(
                "{:<18} {:<16} {:>10} {}{}\n",
                l.name,
                l.kind().as_str(),
                l.param_count(),
                shapes.join(" "),
                if l.frozen { " (frozen)" } else { "" }
            ));
        }
        let c = self.count_params();
        s.push_str(&format!("total {}  trainable {}\n", c.total, c.trainable));
        s
    }
}

impl Differentiable for Model<f64> {
    fn forward_train(&mut self, x: &Tensor<f64>, rng: &mut SeededRng) -> Result<Tensor<f64>> {
        self.forward_train_from(x, rng, 0)
    }

    fn backward_input(&mut self, dy: &Tensor<f64>) -> Result<Tensor<f64>> {
        self.backward_to(dy, 0)?
            .ok_or_else(|| Error::invalid("input gradient unavailable"))
    }

    fn param_slots(&mut self) -> Vec<(String, bool, &mut Param<f64>)> {
        self.layers
            .iter_mut()
            .flat_map(|l| {
                let (name, trainable) = (l.name.clone(), !l.frozen);
                l.params_mut()
                    .into_iter()
                    .map(move |p| (format!("{name}.{}", p.name), trainable, p))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vgg16_counts() {
        let m = Model::<f32>::build(&ArchSpec::new(ArchId::Vgg16, 1).with_input([3, 32, 32]), 0).unwrap();
        assert_eq!(m.backbone_param_count(), 14_714_688);
        assert_eq!(m.count_params(), ParamCount { total: 14_715_201, trainable: 14_715_201 });
        let f = Model::<f32>::build(&ArchSpec::new(ArchId::Vgg16Frozen, 1).with_input([3, 32, 32]), 0).unwrap();
        assert_eq!(f.count_params(), ParamCount { total: 14_715_201, trainable: 513 });
    }

    #[test]
    fn width_scaling() {
        let m = Model::<f32>::build(&ArchSpec::new(ArchId::Mini, 1), 0).unwrap();
        let widths: Vec<usize> = m
            .layers
            .iter()
            .filter_map(|l| match &l.op {
                Op::Conv2d(c) => Some(c.out_channels()),
                _ => None,
            })
            .collect();
        assert_eq!(widths, vec![8, 8, 16, 16, 32, 32, 32, 64, 64, 64, 64, 64, 64]);
        assert_eq!(WidthMult::new(1, 128).unwrap().scale(64), 8);
    }

    #[test]
    fn small_cnn_counts() {
        let m = Model::<f32>::build(&ArchSpec::new(ArchId::SmallCnn, 1).with_input([3, 16, 16]), 0).unwrap();
        assert_eq!(m.count_params().total, 1_814_145);
        let m4 = Model::<f32>::build(&ArchSpec::new(ArchId::SmallCnn, 4).with_input([3, 16, 16]), 0).unwrap();
        assert_eq!(m4.count_params().total - m.count_params().total, 3 * 513);
        let kinds: Vec<LayerKind> = m.layers.iter().map(|l| l.kind()).filter(|k| *k != LayerKind::Relu).collect();
        assert_eq!(&kinds[..8], &[LayerKind::Conv2d, LayerKind::MaxPool2x2].repeat(4)[..]);
    }

    #[test]
    fn freezing_accounting() {
        let mut m = Model::<f32>::build(&ArchSpec::new(ArchId::SmallCnn, 1).with_input([1, 8, 8]), 0).unwrap();
        let before = m.count_params();
        let conv2 = m.layer("conv2").unwrap().param_count();
        m.freeze(&FreezePolicy::ByName(vec!["conv2".into()])).unwrap();
        let after = m.count_params();
        assert_eq!(after.total, before.total);
        assert_eq!(after.trainable, before.trainable - conv2);
        assert!(m.freeze(&FreezePolicy::ByName(vec!["nope".into()])).is_err());
        m.freeze(&FreezePolicy::None).unwrap();
        assert_eq!(m.count_params().trainable, m.count_params().total);
    }

    #[test]
    fn snapshot_restore() {
        let spec = ArchSpec::new(ArchId::Mini, 1).with_input([1, 16, 16]);
        let mut m = Model::<f32>::build(&spec, 3).unwrap();
        let snap = m.snapshot();
        for (_, t) in m.named_params_mut() {
            t.data_mut().iter_mut().for_each(|v| *v += 1.0);
        }
        assert!(!m.snapshot().bitwise_eq(&snap));
        m.restore(&snap).unwrap();
        assert!(m.snapshot().bitwise_eq(&snap));

        let mut other = Model::<f32>::build(&ArchSpec::new(ArchId::SmallCnn, 1), 3).unwrap();
        assert!(other.restore(&snap).is_err());

        let frozen = Model::<f32>::build(&ArchSpec { arch: ArchId::MiniFrozen, ..spec }, 3).unwrap();
        assert!(frozen.snapshot().bitwise_eq(&snap));
    }

    #[test]
    fn output_shapes_for_odd_inputs() {
        for arch in [ArchId::SmallCnn, ArchId::Mini] {
            for hw in [5, 17, 33] {
                let spec = ArchSpec::new(arch, 3).with_input([1, hw, hw + 2]).with_width(WidthMult::EIGHTH);
                let m = Model::<f32>::build(&spec, 1).unwrap();
                let y = m.predict(&Tensor::zeros(&[2, 1, hw, hw + 2])).unwrap();
                assert_eq!(y.shape(), &[2, 3]);
            }
        }
    }

    #[test]
    fn parse_ids() {
        for a in ArchId::ALL {
            assert_eq!(a.as_str().parse::<ArchId>().unwrap(), a);
        }
        assert!("vgg19".parse::<ArchId>().is_err());
        assert_eq!("1/8".parse::<WidthMult>().unwrap(), WidthMult::EIGHTH);
        assert_eq!("2".parse::<WidthMult>().unwrap(), WidthMult::new(2, 1).unwrap());
        assert!("0/3".parse::<WidthMult>().is_err());
    }
}
