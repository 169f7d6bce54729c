//! Invariant-theoretic constants of the classical Lie algebras A_l, B_l, C_l.
//!
//! Everything downstream needs exactly three numbers per algebra: the ordered
//! degrees of its basis invariant polynomials, its dimension, and the
//! dimension of the standard representation. The degree lists are closed-form
//! per series, so they are generated directly instead of being derived from
//! root-system data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Classical series handled by the toolkit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LieSeries {
    A,
    B,
    C,
}

impl std::fmt::Display for LieSeries {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LieSeries::A => write!(f, "A"),
            LieSeries::B => write!(f, "B"),
            LieSeries::C => write!(f, "C"),
        }
    }
}

/// A validated (series, rank) pair.
///
/// Serialized as `{"series": "A"|"B"|"C", "rank": <int>}`. Construction
/// enforces rank >= 1, and rank >= 2 for series C (use A_1 instead of C_1).
/// Series D and the exceptional algebras are rejected during deserialization
/// because `LieSeries` has no variant for them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct LieAlgebraSpec {
    series: LieSeries,
    rank: u32,
}

#[derive(Deserialize)]
struct RawSpec {
    series: LieSeries,
    rank: u32,
}

impl TryFrom<RawSpec> for LieAlgebraSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        LieAlgebraSpec::new(raw.series, raw.rank)
    }
}

impl LieAlgebraSpec {
    pub fn new(series: LieSeries, rank: u32) -> Result<Self> {
        if rank == 0 {
            return Err(Error::InvalidRank {
                series: series_name(series),
                rank,
                reason: "rank must be at least 1".into(),
            });
        }
        if series == LieSeries::C && rank < 2 {
            return Err(Error::InvalidRank {
                series: "C",
                rank,
                reason: "C_1 is isomorphic to A_1; construct series A, rank 1 instead".into(),
            });
        }
        Ok(Self { series, rank })
    }

    pub fn series(&self) -> LieSeries {
        self.series
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }
}

impl std::fmt::Display for LieAlgebraSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{}", self.series, self.rank)
    }
}

fn series_name(series: LieSeries) -> &'static str {
    match series {
        LieSeries::A => "A",
        LieSeries::B => "B",
        LieSeries::C => "C",
    }
}

/// Degrees of the basis invariant polynomials plus the two dimensions used
/// throughout: dim g and the dimension n of the standard representation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InvariantData {
    /// Strictly increasing list d_1 < ... < d_l.
    pub degrees: Vec<u32>,
    pub dim_g: u32,
    pub n_standard: u32,
}

/// Invariant degrees and dimensions for a validated spec.
///
/// A_l: degrees 2..l+1, dim l(l+2), n = l+1.
/// B_l: degrees 2,4,...,2l, dim l(2l+1), n = 2l+1.
/// C_l: degrees 2,4,...,2l, dim l(2l+1), n = 2l.
pub fn invariant_data(spec: LieAlgebraSpec) -> InvariantData {
    let l = spec.rank();
    match spec.series() {
        LieSeries::A => InvariantData {
            degrees: (2..=l + 1).collect(),
            dim_g: l * (l + 2),
            n_standard: l + 1,
        },
        LieSeries::B => InvariantData {
            degrees: (1..=l).map(|k| 2 * k).collect(),
            dim_g: l * (2 * l + 1),
            n_standard: 2 * l + 1,
        },
        LieSeries::C => InvariantData {
            degrees: (1..=l).map(|k| 2 * k).collect(),
            dim_g: l * (2 * l + 1),
            n_standard: 2 * l,
        },
    }
}

/// Self-test of the identity sum(2 d_i - 1) = dim g.
pub fn check_degree_identity(spec: LieAlgebraSpec) -> bool {
    let data = invariant_data(spec);
    let sum: u32 = data.degrees.iter().map(|&d| 2 * d - 1).sum();
    sum == data.dim_g
}
