use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// In-memory labelled samples, stacked along the leading axis.
#[derive(Debug, Clone)]
pub struct Dataset<T> {
    pub inputs: Tensor<T>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(inputs: Tensor<T>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if inputs.batch() != labels.len() {
            return Err(Error::shape(format!(
                "{} samples but {} labels",
                inputs.batch(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::invalid(format!("label {bad} >= {num_classes} classes")));
        }
        Ok(Self {
            inputs,
            labels,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sample_shape(&self) -> &[usize] {
        &self.inputs.shape()[1..]
    }

    /// Gather `indices` into a batch tensor and label vector.
    pub fn batch(&self, indices: &[usize]) -> Result<(Tensor<T>, Vec<usize>)> {
        let rows: Vec<&[T]> = indices.iter().map(|&i| self.inputs.sample(i)).collect();
        let x = Tensor::stack(&rows, self.sample_shape())?;
        Ok((x, indices.iter().map(|&i| self.labels[i]).collect()))
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let (inputs, labels) = self.batch(indices)?;
        Self::new(inputs, labels, self.num_classes)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.num_classes];
        self.labels.iter().for_each(|&l| c[l] += 1);
        c
    }
}
