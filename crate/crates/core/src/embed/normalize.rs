use super::EmbedError;

/// Allowed deviation of a stored vector's L2 norm from 1.
pub const NORM_TOLERANCE: f64 = 1e-5;

/// A unit-norm float32 vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }

    /// Wraps a vector already known to be unit norm (within tolerance).
    pub fn from_unit(values: Vec<f32>) -> Result<Self, EmbedError> {
        if values.is_empty() {
            return Err(EmbedError::EmptyVector);
        }
        let norm = norm_f64(&values);
        if !norm.is_finite() {
            return Err(EmbedError::NonFinite);
        }
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(EmbedError::Invariant(format!("vector norm {norm} is not 1")));
        }
        Ok(Self(values))
    }
}

impl AsRef<[f32]> for EmbeddingVector {
    fn as_ref(&self) -> &[f32] {
        &self.0
    }
}

pub(crate) fn norm_f64(v: &[f32]) -> f64 {
    v.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt()
}

/// Scales `v` to unit L2 norm.
pub fn l2_normalize(v: &[f32]) -> Result<EmbeddingVector, EmbedError> {
    if v.is_empty() {
        return Err(EmbedError::EmptyVector);
    }
    let norm = norm_f64(v);
    if !norm.is_finite() {
        return Err(EmbedError::NonFinite);
    }
    if norm == 0.0 {
        return Err(EmbedError::ZeroVector);
    }
    Ok(EmbeddingVector(
        v.iter().map(|&x| (f64::from(x) / norm) as f32).collect(),
    ))
}

/// Float32 dot product, accumulated sequentially in index order.
///
/// This is the scoring kernel of the flat index; keeping the order fixed
/// makes scores reproducible bit for bit.
#[inline]
pub fn inner_product(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0f32;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Cosine similarity of two arbitrary (not necessarily unit) vectors, in f64.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| f64::from(x) * f64::from(y))
        .sum();
    let denom = norm_f64(a) * norm_f64(b);
    if denom == 0.0 {
        0.0
    } else {
        dot / denom
    }
}
