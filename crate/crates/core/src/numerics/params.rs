//! A flat parameter buffer with named slices and a parallel gradient buffer.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamSlice {
    pub name: String,
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl ParamSlice {
    #[inline]
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Slices are appended back to back, so they are disjoint and cover the
/// buffer by construction. `grads` always has the layout of `values`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    slices: Vec<ParamSlice>,
    values: Vec<f64>,
    grads: Vec<f64>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a zero-filled `rows x cols` slice and returns its index.
    pub fn push(&mut self, name: impl Into<String>, rows: usize, cols: usize) -> usize {
        let name = name.into();
        debug_assert!(self.index_of(&name).is_none(), "duplicate slice {name}");
        let offset = self.values.len();
        self.values.resize(offset + rows * cols, 0.0);
        self.grads.resize(offset + rows * cols, 0.0);
        self.slices.push(ParamSlice {
            name,
            offset,
            rows,
            cols,
        });
        self.slices.len() - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn slices(&self) -> &[ParamSlice] {
        &self.slices
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.slices.iter().position(|s| s.name == name)
    }

    pub fn slice(&self, idx: usize) -> &ParamSlice {
        &self.slices[idx]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn grads(&self) -> &[f64] {
        &self.grads
    }

    pub fn grads_mut(&mut self) -> &mut [f64] {
        &mut self.grads
    }

    #[inline]
    pub fn value(&self, idx: usize) -> &[f64] {
        &self.values[self.slices[idx].range()]
    }

    #[inline]
    pub fn value_mut(&mut self, idx: usize) -> &mut [f64] {
        let r = self.slices[idx].range();
        &mut self.values[r]
    }

    #[inline]
    pub fn grad(&self, idx: usize) -> &[f64] {
        &self.grads[self.slices[idx].range()]
    }

    #[inline]
    pub fn grad_mut(&mut self, idx: usize) -> &mut [f64] {
        let r = self.slices[idx].range();
        &mut self.grads[r]
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.index_of(name).map(|i| self.value(i))
    }

    pub fn zero_grads(&mut self) {
        self.grads.iter_mut().for_each(|g| *g = 0.0);
    }

    /// Replaces all values, keeping the layout.
    pub fn set_values(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.values.len() {
            return Err(Error::dims("ParamStore::set_values", self.values.len(), values.len()));
        }
        self.values.copy_from_slice(values);
        Ok(())
    }

    pub fn set_grads(&mut self, grads: &[f64]) -> Result<()> {
        if grads.len() != self.grads.len() {
            return Err(Error::dims("ParamStore::set_grads", self.grads.len(), grads.len()));
        }
        self.grads.copy_from_slice(grads);
        Ok(())
    }

    pub fn same_layout(&self, other: &ParamStore) -> bool {
        self.slices == other.slices
    }

    /// First slice whose gradient holds a NaN or infinity.
    pub fn non_finite_grad(&self) -> Option<&str> {
        self.slices
            .iter()
            .find(|s| self.grads[s.range()].iter().any(|g| !g.is_finite()))
            .map(|s| s.name.as_str())
    }

    pub fn non_finite_value(&self) -> Option<&str> {
        self.slices
            .iter()
            .find(|s| self.values[s.range()].iter().any(|g| !g.is_finite()))
            .map(|s| s.name.as_str())
    }
}
