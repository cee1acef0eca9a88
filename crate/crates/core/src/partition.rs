//! Jordan structures and the splittings that drive the blow-up tower.
//!
//! Coordinate indices are 1-based throughout this module and in every index
//! set it returns.

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::scalar::{GaussRational, Scalar};
use crate::series::MAX_VARS;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PartitionError {
    #[error("mu must be non-empty with positive entries")]
    EmptyBlock,
    #[error("mu must be non-increasing, got {0:?}")]
    NotSorted(Vec<usize>),
    #[error("{mu} blocks but {lambda} eigenvalues")]
    LengthMismatch { mu: usize, lambda: usize },
    #[error("eigenvalue of block {0} is zero, the differential is not invertible")]
    ZeroEigenvalue(usize),
    #[error("mu_1 = 1: the differential is diagonalizable, nothing to blow up")]
    Diagonalizable,
    #[error("dimension {0} exceeds the supported maximum {MAX_VARS}")]
    TooLarge(usize),
    #[error("stage {k} outside 0..={max}")]
    StageOutOfRange { k: usize, max: usize },
}

/// Features of a structure that deserve a caveat in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureFlag {
    /// `μ_3 = μ_1`: only block 2 is shortened at stage `μ_1`, blocks `l ≥ 3`
    /// of the same length are kept whole.
    ThirdBlockEqualsFirst,
}

/// Block lengths `μ_1 ≥ … ≥ μ_ρ` with eigenvalues `λ_l`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JordanStructure {
    mu: Vec<usize>,
    lambda: Vec<GaussRational>,
}

impl JordanStructure {
    pub fn new(mu: Vec<usize>, lambda: Vec<GaussRational>) -> Result<Self, PartitionError> {
        if mu.is_empty() || mu.contains(&0) {
            return Err(PartitionError::EmptyBlock);
        }
        if mu.len() != lambda.len() {
            return Err(PartitionError::LengthMismatch { mu: mu.len(), lambda: lambda.len() });
        }
        if mu.windows(2).any(|w| w[0] < w[1]) {
            return Err(PartitionError::NotSorted(mu));
        }
        if let Some(l) = lambda.iter().position(Scalar::is_zero) {
            return Err(PartitionError::ZeroEigenvalue(l + 1));
        }
        if mu[0] < 2 {
            return Err(PartitionError::Diagonalizable);
        }
        let n: usize = mu.iter().sum();
        if n > MAX_VARS {
            return Err(PartitionError::TooLarge(n));
        }
        Ok(JordanStructure { mu, lambda })
    }

    /// Single Jordan block of size `n` with eigenvalue 1.
    pub fn unipotent_block(n: usize) -> Result<Self, PartitionError> {
        Self::new(vec![n], vec![GaussRational::one()])
    }

    /// Shorthand with integer eigenvalues.
    pub fn from_ints(mu: &[usize], lambda: &[i64]) -> Result<Self, PartitionError> {
        Self::new(mu.to_vec(), lambda.iter().map(|&l| GaussRational::from_int(l)).collect())
    }

    pub fn n(&self) -> usize {
        self.mu.iter().sum()
    }

    pub fn rho(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[usize] {
        &self.mu
    }

    pub fn lambda(&self) -> &[GaussRational] {
        &self.lambda
    }

    pub fn mu1(&self) -> usize {
        self.mu[0]
    }

    fn mu2(&self) -> usize {
        self.mu.get(1).copied().unwrap_or(0)
    }

    /// Whether the two largest blocks have equal length.
    pub fn top_blocks_equal(&self) -> bool {
        self.mu2() == self.mu1()
    }

    /// Offsets `ν_l`, with `ν_1 = 0`.
    pub fn nu(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.mu.len());
        let mut acc = 0;
        for m in &self.mu {
            out.push(acc);
            acc += m;
        }
        out
    }

    /// Number of blow-ups `ℓ`.
    pub fn ell(&self) -> usize {
        if self.top_blocks_equal() {
            self.mu1() + 1
        } else {
            self.mu1()
        }
    }

    /// Block (0-based) containing coordinate `j` (1-based).
    pub fn block_of(&self, j: usize) -> usize {
        let nu = self.nu();
        (0..self.rho()).rev().find(|&l| j > nu[l]).expect("index within 1..=n")
    }

    /// Whether every eigenvalue equals 1.
    pub fn is_unipotent(&self) -> bool {
        self.lambda.iter().all(|l| *l == GaussRational::one())
    }

    /// Block-diagonal Jordan matrix with ones on the superdiagonal of each block.
    pub fn jordan_matrix(&self) -> Matrix<GaussRational> {
        let n = self.n();
        let nu = self.nu();
        let mut m = Matrix::zeros(n, n);
        for (l, &len) in self.mu.iter().enumerate() {
            for t in 0..len {
                let i = nu[l] + t;
                m[(i, i)] = self.lambda[l].clone();
                if t + 1 < len {
                    m[(i, i + 1)] = GaussRational::one();
                }
            }
        }
        m
    }

    pub fn flags(&self) -> Vec<StructureFlag> {
        let mut out = Vec::new();
        if self.mu.len() >= 3 && self.mu[2] == self.mu[0] {
            out.push(StructureFlag::ThirdBlockEqualsFirst);
        }
        out
    }

    /// Splitting of stage `k`, `0 ≤ k ≤ ℓ`.
    pub fn splitting(&self, k: usize) -> Result<Splitting, PartitionError> {
        let ell = self.ell();
        if k > ell {
            return Err(PartitionError::StageOutOfRange { k, max: ell });
        }
        let nu = self.nu();
        let mu1 = self.mu1();
        let mut per_block: Vec<Vec<usize>> = self
            .mu
            .iter()
            .zip(&nu)
            .map(|(&m, &v)| (v + 1..=v + k.min(m)).collect())
            .collect();
        if self.top_blocks_equal() && k >= mu1 {
            // block 2 loses its last index; at k = μ_1 + 1 it moves into block 1's set
            let last = nu[1] + self.mu[1];
            per_block[1].retain(|&j| j != last);
            if k == mu1 + 1 {
                per_block[0].push(last);
            }
        }
        let mut primed: Vec<usize> = per_block.iter().flatten().copied().collect();
        primed.sort_unstable();
        let double_primed = (1..=self.n()).filter(|j| primed.binary_search(j).is_err()).collect();
        Ok(Splitting { k, per_block, primed, double_primed })
    }

    /// Every splitting `k = 0..=ℓ`.
    pub fn splittings(&self) -> Vec<Splitting> {
        (0..=self.ell()).map(|k| self.splitting(k).expect("k within range")).collect()
    }

    /// Indices `h` whose `[e_h]` span the flag subspace `Y^k`, for `1 ≤ k ≤ ℓ−1`.
    pub fn flag_generators(&self, k: usize) -> Result<Vec<usize>, PartitionError> {
        let max = self.ell() - 1;
        if k == 0 || k > max {
            return Err(PartitionError::StageOutOfRange { k, max });
        }
        Ok(self.splitting(k)?.primed)
    }

    /// The singular-divisor index set `P'_{k1}` of stage `k`.
    pub fn divisor_indices(&self, k: usize) -> Result<Vec<usize>, PartitionError> {
        Ok(self.splitting(k)?.per_block[0].clone())
    }
}

/// The sets `P'_{kl}`, their union `P'_k` and the complement `P''_k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splitting {
    pub k: usize,
    pub per_block: Vec<Vec<usize>>,
    pub primed: Vec<usize>,
    pub double_primed: Vec<usize>,
}
