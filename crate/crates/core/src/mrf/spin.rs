use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Which layer of a bipartite model a configuration belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Visible,
    Hidden,
    Joint,
}

/// A ±1 configuration of one layer (or both, concatenated visible-first).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinState {
    values: Vec<i8>,
    layer: Layer,
}

impl SpinState {
    pub fn new(values: Vec<i8>, layer: Layer) -> Result<Self> {
        if let Some(bad) = values.iter().find(|&&s| s != 1 && s != -1) {
            return invalid(format!("spin value {bad} is not -1 or +1"));
        }
        Ok(Self { values, layer })
    }

    pub(crate) fn from_raw(values: Vec<i8>, layer: Layer) -> Self {
        debug_assert!(values.iter().all(|&s| s == 1 || s == -1));
        Self { values, layer }
    }

    pub fn uniform(len: usize, value: i8, layer: Layer) -> Result<Self> {
        Self::new(vec![value; len], layer)
    }

    /// Decodes `index` as a bit pattern: bit `i` set means spin `i` is `+1`.
    pub fn from_index(index: usize, len: usize, layer: Layer) -> Self {
        Self::from_raw(index_to_spins(index, len), layer)
    }

    pub fn to_index(&self) -> usize {
        spins_to_index(&self.values)
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn into_values(self) -> Vec<i8> {
        self.values
    }

    pub fn layer(&self) -> Layer {
        self.layer
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub(crate) fn index_to_spins(index: usize, len: usize) -> Vec<i8> {
    (0..len)
        .map(|i| if (index >> i) & 1 == 1 { 1 } else { -1 })
        .collect()
}

pub(crate) fn spins_to_index(spins: &[i8]) -> usize {
    spins
        .iter()
        .enumerate()
        .filter(|(_, &s)| s == 1)
        .fold(0usize, |acc, (i, _)| acc | (1 << i))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_spin_values() {
        assert!(SpinState::new(vec![1, 0, -1], Layer::Visible).is_err());
        assert!(SpinState::new(vec![1, 2], Layer::Hidden).is_err());
        assert!(SpinState::new(vec![1, -1], Layer::Hidden).is_ok());
    }

    #[test]
    fn index_round_trip() {
        for idx in 0..32 {
            let s = SpinState::from_index(idx, 5, Layer::Visible);
            assert_eq!(s.to_index(), idx);
        }
        assert_eq!(SpinState::from_index(0, 3, Layer::Hidden).values(), &[-1, -1, -1]);
        assert_eq!(SpinState::from_index(5, 3, Layer::Hidden).values(), &[1, -1, 1]);
    }
}
