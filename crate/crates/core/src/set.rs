//! Subsets of G as dense membership arrays.

use crate::error::{Error, Result};
use crate::gf::Space;

/// A ⊆ F_p^n, one flag per encoded element.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SubsetOfG {
    member: Vec<bool>,
}

impl SubsetOfG {
    pub fn empty(space: &Space) -> Self {
        SubsetOfG { member: vec![false; space.size()] }
    }

    pub fn full(space: &Space) -> Self {
        SubsetOfG { member: vec![true; space.size()] }
    }

    pub fn from_membership(space: &Space, member: Vec<bool>) -> Result<Self> {
        if member.len() != space.size() {
            return Err(Error::Dimension { expected: space.size(), got: member.len() });
        }
        Ok(SubsetOfG { member })
    }

    pub fn from_elements(space: &Space, elements: &[usize]) -> Result<Self> {
        let mut member = vec![false; space.size()];
        for &x in elements {
            *member.get_mut(x).ok_or_else(|| Error::Invalid(format!("element {x} outside G")))? = true;
        }
        Ok(SubsetOfG { member })
    }

    pub fn membership(&self) -> &[bool] {
        &self.member
    }

    pub fn contains(&self, x: usize) -> bool {
        self.member[x]
    }

    pub fn len(&self) -> usize {
        self.member.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.member.iter().any(|&b| b)
    }

    /// Elements in ascending order.
    pub fn elements(&self) -> Vec<usize> {
        (0..self.member.len()).filter(|&x| self.member[x]).collect()
    }

    pub fn complement(&self) -> Self {
        SubsetOfG { member: self.member.iter().map(|&b| !b).collect() }
    }

    /// A + t.
    pub fn translate(&self, space: &Space, t: usize) -> Self {
        let mut member = vec![false; self.member.len()];
        for x in self.elements() {
            member[space.add(x, t)] = true;
        }
        SubsetOfG { member }
    }

    /// |A Δ B|.
    pub fn symmetric_difference(&self, other: &SubsetOfG) -> usize {
        self.member.iter().zip(&other.member).filter(|(a, b)| a != b).count()
    }

    /// Number of members among `cell`.
    pub fn hits(&self, cell: &[usize]) -> usize {
        cell.iter().filter(|&&x| self.member[x]).count()
    }
}
