//! The configuration space of technology sequences and probability
//! distributions over it.
//!
//! A path assigns one technology to each of the `M` stages. Paths are
//! canonically encoded as integers: bit `k` holds the technology index of
//! stage `k` (stage 0 in the least significant bit), so the space maps onto
//! `[0, 2^M)`. Distributions are dense over that full range; encodings
//! excluded by per-stage restrictions simply carry weight zero.

use crate::kinetics::Technology;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard cap on the number of stages (and so on `2^M` encodings).
pub const MAX_STAGES: usize = 20;

/// Hard cap on the number of enumerable paths.
pub const MAX_PATHS: usize = 1 << MAX_STAGES;

/// Tolerance on the total probability mass of a distribution.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PathSpaceError {
    #[error("path space of {size} configurations exceeds the cap of {cap}")]
    SpaceTooLarge { size: usize, cap: usize },
    #[error("stage count {stages} outside 1..={max}", max = MAX_STAGES)]
    BadStageCount { stages: usize },
    #[error("stage {stage} allows no technology")]
    EmptyStageSet { stage: usize },
    #[error("invalid distribution: {reason}")]
    InvalidDistribution { reason: String },
}

/// A process configuration: the ordered sequence of technologies assigned
/// to the stages.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Path {
    stages: Vec<Technology>,
}

impl Path {
    pub fn new(stages: Vec<Technology>) -> Self {
        assert!(
            !stages.is_empty() && stages.len() <= MAX_STAGES,
            "path length must be in 1..={MAX_STAGES}"
        );
        Path { stages }
    }

    pub fn stages(&self) -> &[Technology] {
        &self.stages
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    /// Canonical integer encoding: bit `k` is the technology index of
    /// stage `k`.
    pub fn encoding(&self) -> usize {
        self.stages
            .iter()
            .enumerate()
            .map(|(k, tech)| tech.index() << k)
            .sum()
    }

    pub fn from_encoding(encoding: usize, stage_count: usize) -> Self {
        assert!(stage_count >= 1 && stage_count <= MAX_STAGES);
        assert!(encoding < (1usize << stage_count));
        let stages = (0..stage_count)
            .map(|k| Technology::from_index((encoding >> k) & 1).unwrap())
            .collect();
        Path { stages }
    }

    /// Number of stages using the given technology.
    pub fn count_of(&self, tech: Technology) -> usize {
        self.stages.iter().filter(|&&t| t == tech).count()
    }
}

impl std::fmt::Display for Path {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let labels: Vec<&str> = self.stages.iter().map(|t| t.label()).collect();
        f.write_str(&labels.join("-"))
    }
}

impl std::str::FromStr for Path {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let stages: Result<Vec<Technology>, String> =
            s.split('-').map(|part| part.parse()).collect();
        let stages = stages?;
        if stages.is_empty() || stages.len() > MAX_STAGES {
            return Err(format!("path length must be in 1..={MAX_STAGES}"));
        }
        Ok(Path { stages })
    }
}

/// Enumerates every path permitted by the per-stage technology sets, in
/// ascending encoding order, without duplicates.
pub fn enumerate_paths(allowed: &[Vec<Technology>]) -> Result<Vec<Path>, PathSpaceError> {
    let stages = allowed.len();
    if stages == 0 || stages > MAX_STAGES {
        return Err(PathSpaceError::BadStageCount { stages });
    }
    let mut sets: Vec<Vec<Technology>> = Vec::with_capacity(stages);
    let mut size: usize = 1;
    for (stage, set) in allowed.iter().enumerate() {
        let mut s = set.clone();
        s.sort_by_key(|t| t.index());
        s.dedup();
        if s.is_empty() {
            return Err(PathSpaceError::EmptyStageSet { stage });
        }
        size = size.saturating_mul(s.len());
        sets.push(s);
    }
    if size > MAX_PATHS {
        return Err(PathSpaceError::SpaceTooLarge {
            size,
            cap: MAX_PATHS,
        });
    }

    // Mixed-radix counter, most significant digit at the last stage, so the
    // integer encodings come out ascending.
    let mut digits = vec![0usize; stages];
    let mut paths = Vec::with_capacity(size);
    loop {
        paths.push(Path {
            stages: (0..stages).map(|k| sets[k][digits[k]]).collect(),
        });
        let mut k = 0;
        loop {
            if k == stages {
                debug_assert_eq!(paths.len(), size);
                return Ok(paths);
            }
            digits[k] += 1;
            if digits[k] < sets[k].len() {
                break;
            }
            digits[k] = 0;
            k += 1;
        }
    }
}

/// Both technologies allowed at every stage.
pub fn full_technology_sets(stage_count: usize) -> Vec<Vec<Technology>> {
    vec![Technology::ALL.to_vec(); stage_count]
}

/// A probability distribution over the full encoding range `[0, 2^M)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathDistribution {
    stage_count: usize,
    weights: Vec<f64>,
}

impl PathDistribution {
    /// Builds a distribution from dense weights of length `2^stage_count`,
    /// validating range and normalization.
    pub fn new(stage_count: usize, weights: Vec<f64>) -> Result<Self, PathSpaceError> {
        if stage_count == 0 || stage_count > MAX_STAGES {
            return Err(PathSpaceError::BadStageCount {
                stages: stage_count,
            });
        }
        if weights.len() != 1 << stage_count {
            return Err(PathSpaceError::InvalidDistribution {
                reason: format!(
                    "expected {} weights, got {}",
                    1usize << stage_count,
                    weights.len()
                ),
            });
        }
        let dist = PathDistribution {
            stage_count,
            weights,
        };
        dist.validate()?;
        Ok(dist)
    }

    /// Builds a dense distribution from sparse support given as
    /// `(encoding, weight)` pairs; missing encodings get weight zero.
    pub fn from_support(
        stage_count: usize,
        support: impl IntoIterator<Item = (usize, f64)>,
    ) -> Result<Self, PathSpaceError> {
        if stage_count == 0 || stage_count > MAX_STAGES {
            return Err(PathSpaceError::BadStageCount {
                stages: stage_count,
            });
        }
        let mut weights = vec![0.0; 1 << stage_count];
        for (encoding, w) in support {
            if encoding >= weights.len() {
                return Err(PathSpaceError::InvalidDistribution {
                    reason: format!("encoding {encoding} out of range"),
                });
            }
            weights[encoding] += w;
        }
        PathDistribution::new(stage_count, weights)
    }

    pub fn validate(&self) -> Result<(), PathSpaceError> {
        let mut sum = 0.0;
        for (i, &w) in self.weights.iter().enumerate() {
            if !(0.0..=1.0).contains(&w) || !w.is_finite() {
                return Err(PathSpaceError::InvalidDistribution {
                    reason: format!("weight {w} at encoding {i} outside [0, 1]"),
                });
            }
            sum += w;
        }
        if (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE {
            return Err(PathSpaceError::InvalidDistribution {
                reason: format!("weights sum to {sum}, not 1"),
            });
        }
        Ok(())
    }

    pub fn stage_count(&self) -> usize {
        self.stage_count
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight_of_encoding(&self, encoding: usize) -> f64 {
        self.weights[encoding]
    }

    /// Maximum-weight path; ties break toward the smallest encoding.
    pub fn argmax(&self) -> (Path, f64) {
        let mut best = 0usize;
        for (i, &w) in self.weights.iter().enumerate() {
            if w > self.weights[best] {
                best = i;
            }
        }
        (
            Path::from_encoding(best, self.stage_count),
            self.weights[best],
        )
    }
}

/// Maximum-weight path of a distribution; ties break toward the smallest
/// encoding.
pub fn argmax_weight(distribution: &PathDistribution) -> (Path, f64) {
    distribution.argmax()
}
