use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A named, contiguous slice of a [`FlatParams`] vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamBlock {
    pub name: String,
    pub offset: usize,
    pub len: usize,
    /// Basis density for spline coefficient blocks, `None` for dense weights.
    pub density: Option<usize>,
}

/// Ordered, gap-free map from block names to ranges of a flat vector.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ParamBlock>", into = "Vec<ParamBlock>")]
pub struct ParamLayout {
    blocks: Vec<ParamBlock>,
    total: usize,
}

impl ParamLayout {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a block and returns its offset.
    pub fn push(&mut self, name: impl Into<String>, len: usize, density: Option<usize>) -> usize {
        let offset = self.total;
        self.blocks.push(ParamBlock {
            name: name.into(),
            offset,
            len,
            density,
        });
        self.total += len;
        offset
    }

    pub fn blocks(&self) -> &[ParamBlock] {
        &self.blocks
    }

    pub fn get(&self, name: &str) -> Option<&ParamBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    /// Total number of parameters covered by the layout.
    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }
}

impl TryFrom<Vec<ParamBlock>> for ParamLayout {
    type Error = Error;

    fn try_from(blocks: Vec<ParamBlock>) -> Result<Self> {
        let mut total = 0;
        for block in &blocks {
            if block.offset != total {
                return Err(Error::Malformed {
                    what: "parameter layout",
                    detail: format!(
                        "block `{}` starts at {} but the previous block ends at {}",
                        block.name, block.offset, total
                    ),
                });
            }
            total += block.len;
        }
        Ok(ParamLayout { blocks, total })
    }
}

impl From<ParamLayout> for Vec<ParamBlock> {
    fn from(layout: ParamLayout) -> Self {
        layout.blocks
    }
}

/// Every trainable parameter of a model in one contiguous vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatParams {
    layout: ParamLayout,
    values: Vec<f64>,
}

impl FlatParams {
    pub fn zeros(layout: ParamLayout) -> Self {
        let values = vec![0.0; layout.len()];
        FlatParams { layout, values }
    }

    pub fn from_parts(layout: ParamLayout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(Error::LengthMismatch {
                expected: layout.len(),
                found: values.len(),
            });
        }
        Ok(FlatParams { layout, values })
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn block(&self, name: &str) -> Option<&[f64]> {
        let b = self.layout.get(name)?;
        Some(&self.values[b.offset..b.offset + b.len])
    }

    pub fn block_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        let b = self.layout.get(name)?;
        let range = b.offset..b.offset + b.len;
        Some(&mut self.values[range])
    }

    /// Overwrites a named block.
    pub fn set_block(&mut self, name: &str, values: &[f64]) -> Result<()> {
        let block = self
            .block_mut(name)
            .ok_or_else(|| Error::InvalidConfig(format!("no parameter block named `{name}`")))?;
        if block.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: block.len(),
                found: values.len(),
            });
        }
        block.copy_from_slice(values);
        Ok(())
    }
}
