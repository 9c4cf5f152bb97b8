//! Z/2-graded endomorphisms of the exterior-algebra bundle, exterior-power
//! actions and pointwise supertraces.

use crate::geometry::{differential_at, TorusMap};
use crate::linalg::{binomial, combinations, SquareMatrix};
use crate::numeric::Real;
use std::sync::Arc;

/// Basis bookkeeping for the full exterior algebra Lambda(R^n): for every
/// degree p the C(n, p) strictly increasing multi-indices in lexicographic
/// order.
#[derive(Debug, Clone)]
pub struct DeRhamBundleData {
    dimension: usize,
    basis: Vec<Vec<Vec<usize>>>,
}

impl DeRhamBundleData {
    pub fn new(dimension: usize) -> Self {
        let basis = (0..=dimension)
            .map(|p| combinations(dimension, p))
            .collect();
        Self { dimension, basis }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Multi-index basis of Lambda^p in lexicographic order.
    pub fn basis(&self, p: usize) -> &[Vec<usize>] {
        &self.basis[p]
    }

    /// Total rank sum_p C(n, p) = 2^n.
    pub fn total_rank(&self) -> usize {
        1 << self.dimension
    }
}

/// A degree-indexed family of endomorphism blocks acting on the exterior
/// powers Lambda^0, ..., Lambda^n, the computational stand-in for an
/// endomorphism of the graded bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedEndomorphism<T> {
    blocks: Vec<SquareMatrix<T>>,
}

impl<T: Real> GradedEndomorphism<T> {
    /// Build from blocks; block p must be C(n, p) x C(n, p) where
    /// n = blocks.len() - 1.
    pub fn from_blocks(blocks: Vec<SquareMatrix<T>>) -> Self {
        assert!(!blocks.is_empty(), "need at least the degree-0 block");
        let n = blocks.len() - 1;
        for (p, block) in blocks.iter().enumerate() {
            assert_eq!(
                block.dim(),
                binomial(n, p),
                "block {p} has wrong dimension for n = {n}"
            );
        }
        Self { blocks }
    }

    /// The identity endomorphism of Lambda(R^n).
    pub fn identity(n: usize) -> Self {
        Self::from_blocks(
            (0..=n)
                .map(|p| SquareMatrix::identity(binomial(n, p)))
                .collect(),
        )
    }

    /// A rank-1 ungraded bundle holding a single scalar (n = 0): useful for
    /// scalar-valued kernels.
    pub fn scalar(value: T) -> Self {
        Self {
            blocks: vec![SquareMatrix::scalar(value)],
        }
    }

    /// Degree of the underlying manifold: blocks run over p = 0..=n.
    pub fn degree_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, p: usize) -> &SquareMatrix<T> {
        &self.blocks[p]
    }

    /// Sum over degrees of (-1)^p tr(block_p).
    pub fn supertrace(&self) -> T {
        let mut acc = T::zero();
        for (p, block) in self.blocks.iter().enumerate() {
            if p % 2 == 0 {
                acc += block.trace();
            } else {
                acc -= block.trace();
            }
        }
        acc
    }

    /// Plain (ungraded) trace: sum over degrees of tr(block_p).
    pub fn trace(&self) -> T {
        let mut acc = T::zero();
        for block in &self.blocks {
            acc += block.trace();
        }
        acc
    }

    /// Blockwise composition self . other.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.blocks.len(), other.blocks.len());
        Self {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a.matmul(b))
                .collect(),
        }
    }

    pub fn scale(&self, c: T) -> Self {
        Self {
            blocks: self.blocks.iter().map(|b| b.scale(c)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.blocks.len(), other.blocks.len());
        Self {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.blocks.len(), other.blocks.len());
        Self {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.blocks
            .iter()
            .fold(T::zero(), |acc, b| acc.max(b.max_abs()))
    }
}

/// The matrix of Lambda^p(B) on the lexicographic multi-index basis: entry
/// (I, J) is the p x p minor of B with rows I and columns J (Cauchy-Binet
/// makes this functorial in B).
pub fn exterior_power_action<T: Real>(b: &SquareMatrix<T>, p: usize) -> SquareMatrix<T> {
    let n = b.dim();
    assert!(p <= n, "degree {p} exceeds dimension {n}");
    let idx = combinations(n, p);
    SquareMatrix::from_fn(idx.len(), |i, j| b.minor(&idx[i], &idx[j]))
}

/// All exterior powers of B collected into a graded endomorphism.
pub fn exterior_powers<T: Real>(b: &SquareMatrix<T>) -> GradedEndomorphism<T> {
    let n = b.dim();
    GradedEndomorphism::from_blocks((0..=n).map(|p| exterior_power_action(b, p)).collect())
}

/// The de Rham pullback twist at a point: blocks Lambda^p(dphi(x)^T), the
/// canonical bundle map from the pulled-back form bundle to the form bundle.
/// Its supertrace at a fixed point is det(I - dphi).
pub fn zeta_de_rham<T: Real>(map: &TorusMap<T>, x: &[T]) -> GradedEndomorphism<T> {
    exterior_powers(&differential_at(map, x).transpose())
}

/// A pointwise field of graded endomorphisms.
pub type GradedField<T> = Arc<dyn Fn(&[T]) -> GradedEndomorphism<T> + Send + Sync>;

/// A bundle map from the pulled-back graded bundle: either the canonical de
/// Rham pullback action, or a user-supplied field of graded endomorphisms.
/// Custom fields are used as given; no commutation with the differential is
/// checked for them.
#[derive(Clone)]
pub enum Zeta<T> {
    DeRham,
    Custom(GradedField<T>),
}

impl<T: Real> Zeta<T> {
    pub fn at(&self, map: &TorusMap<T>, x: &[T]) -> GradedEndomorphism<T> {
        match self {
            Zeta::DeRham => zeta_de_rham(map, x),
            Zeta::Custom(f) => f(x),
        }
    }

    pub fn is_de_rham(&self) -> bool {
        matches!(self, Zeta::DeRham)
    }
}

impl<T> std::fmt::Debug for Zeta<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Zeta::DeRham => write!(f, "Zeta::DeRham"),
            Zeta::Custom(_) => write!(f, "Zeta::Custom(..)"),
        }
    }
}
