//! Moving learned weights between models: the NNWT weight file, freezing
//! policies, backbone fingerprints, and the frozen-backbone feature cache.

mod features;
mod weights;

pub use features::{extract_features, images_to_tensor, FeatureCache};
pub use weights::{
    load_weights, read_weight_file, save_backbone, save_weights, LoadMode, LoadReport, TensorEntry, WeightFile,
    WeightHeader, MAGIC, VERSION,
};

use crate::data::Dataset;
use crate::error::Result;
use crate::models::{FreezePolicy, Model};
use crate::tensor::Scalar;
use crate::train::{train_model, TrainConfig, TrainReport};

pub const FNV_OFFSET: u64 = 14_695_981_039_346_656_037;
pub const FNV_PRIME: u64 = 1_099_511_628_211;

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// Fingerprint of a weight payload.
pub fn fingerprint(payload: &[u8]) -> u64 {
    fnv1a(payload)
}

/// Fingerprint of the layers ahead of global average pooling, identical to
/// the fingerprint of the payload [`save_backbone`] would write.
pub fn backbone_fingerprint(model: &Model<f32>) -> u64 {
    let gap = model.gap_index().unwrap_or(model.layers.len());
    let mut h = FNV_OFFSET;
    for l in &model.layers[..gap] {
        for p in l.params() {
            for v in p.value.data() {
                for b in v.to_le_bytes() {
                    h = (h ^ b as u64).wrapping_mul(FNV_PRIME);
                }
            }
        }
    }
    h
}

pub fn freeze_layers<T: Scalar>(model: &mut Model<T>, policy: &FreezePolicy) -> Result<()> {
    model.freeze(policy)
}

/// Train only the layers after global average pooling on precomputed
/// pooled features, then copy them back into `model`. For a model whose
/// backbone is frozen this matches end-to-end training bit for bit.
pub fn train_head_on_features(
    model: &mut Model<f32>,
    train: &Dataset<f32>,
    val: Option<&Dataset<f32>>,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    let mut head = model.head()?;
    let report = train_model(&mut head, train, val, cfg)?;
    model.copy_params_from(&head)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ArchId, ArchSpec};
    use crate::rng::SeededRng;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(&[]), 14_695_981_039_346_656_037);
        // one round: (basis ^ 0) * prime mod 2^64
        assert_eq!(fnv1a(&[0]), 14_695_981_039_346_656_037u64.wrapping_mul(1_099_511_628_211));
        assert_eq!(fnv1a(&[0]), 0xAF63_BD4C_8601_B7DF);
        assert_eq!(fnv1a(b"a"), 0xAF63_DC4C_8601_EC8C);
    }

    #[test]
    fn single_bit_flips_change_fingerprint() {
        let mut rng = SeededRng::new(4);
        for _ in 0..200 {
            let len = rng.int_range(1, 64) as usize;
            let mut bytes: Vec<u8> = (0..len).map(|_| rng.next_u64() as u8).collect();
            let before = fingerprint(&bytes);
            let bit = rng.below(len * 8);
            bytes[bit / 8] ^= 1 << (bit % 8);
            assert_ne!(fingerprint(&bytes), before);
        }
    }

    #[test]
    fn freeze_policies() {
        let mut m = Model::<f32>::build(&ArchSpec::new(ArchId::Vgg16, 1).with_input([3, 8, 8]), 0).unwrap();
        freeze_layers(&mut m, &FreezePolicy::AllButLastDense).unwrap();
        assert_eq!(m.count_params().trainable, 513);
        freeze_layers(&mut m, &FreezePolicy::None).unwrap();
        assert_eq!(m.count_params().trainable, m.count_params().total);
        assert!(freeze_layers(&mut m, &FreezePolicy::ByName(vec!["block9_conv1".into()])).is_err());
    }
}
