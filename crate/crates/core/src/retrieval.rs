//! Deterministic text embedding, Euclidean nearest-neighbor retrieval, and
//! the impedance-profile database.
//!
//! The embedding is a signed feature hash: every lowercase token lands on one
//! of 384 buckets with a ±1 sign, and the bucket counts are L2-normalized.
//! Retrieval is an exact linear scan; with 40-odd records nothing faster is
//! warranted, and the contract is stated against brute force so an index can
//! be added later without behavioral change.

use crate::scene::ObstacleKind;
use crate::{real, Real};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Embedding dimension.
pub const EMBEDDING_DIM: usize = 384;

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("embedding vector must have {EMBEDDING_DIM} finite entries")]
    BadVector,
}

/// Fixed-dimension embedding of a description text.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector<T>(Vec<T>);

impl<T: Real> EmbeddingVector<T> {
    /// Wraps raw values; they must be exactly [`EMBEDDING_DIM`] finite
    /// entries. Mostly useful for tests; library code goes through [`embed`].
    pub fn from_values(values: Vec<T>) -> Result<Self, EmbedError> {
        if values.len() != EMBEDDING_DIM || values.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::BadVector);
        }
        Ok(EmbeddingVector(values))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }
}

const FNV_PRIME: u64 = 0x100_0000_01b3;
const FNV_BASIS_INDEX: u64 = 0xcbf2_9ce4_8422_2325;
// Second independent stream for the sign bit: a different offset basis turns
// FNV-1a into a second hash function over the same bytes.
const FNV_BASIS_SIGN: u64 = 0x8422_2325_cbf2_9ce4;

fn fnv1a(bytes: &[u8], basis: u64) -> u64 {
    let mut h = basis;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Embeds text by signed feature hashing.
///
/// Tokens are maximal alphanumeric runs of the lowercased text. Each token
/// adds ±1 to one bucket; the bucket index and the sign come from two
/// independent FNV-1a hashes. The result is L2-normalized. Texts without
/// alphanumeric characters, or whose tokens cancel exactly, fall back to a
/// single pseudo-token over the whole trimmed text so the vector is never
/// all-zero.
pub fn embed<T: Real>(text: &str) -> Result<EmbeddingVector<T>, EmbedError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(EmbedError::EmptyText);
    }
    let lower = trimmed.to_lowercase();
    let mut acc = vec![T::zero(); EMBEDDING_DIM];
    let mut any = false;
    for token in lower.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
        any = true;
        accumulate(&mut acc, token.as_bytes());
    }
    let zero = acc.iter().all(|v| *v == T::zero());
    if !any || zero {
        accumulate(&mut acc, lower.as_bytes());
    }
    let norm = acc.iter().fold(T::zero(), |s, v| s + *v * *v).sqrt();
    for v in &mut acc {
        *v = *v / norm;
    }
    Ok(EmbeddingVector(acc))
}

fn accumulate<T: Real>(acc: &mut [T], token: &[u8]) {
    let idx = (fnv1a(token, FNV_BASIS_INDEX) % EMBEDDING_DIM as u64) as usize;
    let one = T::one();
    if fnv1a(token, FNV_BASIS_SIGN) & 1 == 0 {
        acc[idx] += one;
    } else {
        acc[idx] -= one;
    }
}

/// Euclidean distance between two embeddings.
pub fn distance<T: Real>(a: &EmbeddingVector<T>, b: &EmbeddingVector<T>) -> T {
    debug_assert_eq!(a.0.len(), b.0.len());
    a.0.iter()
        .zip(&b.0)
        .fold(T::zero(), |s, (x, y)| {
            let d = *x - *y;
            s + d * d
        })
        .sqrt()
}

/// Control bundle retrieved for a scenario: virtual mass `m`, stiffness `k`,
/// damping `d`, leader pull force `f`, formation separation `c`, and the
/// leader speed cap `v_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ImpedanceProfile<T> {
    pub m: T,
    pub k: T,
    pub d: T,
    #[serde(rename = "F")]
    pub f: T,
    pub c: T,
    pub v_max: T,
}

/// Inclusive per-parameter bounds of one obstacle-class column.
#[derive(Debug, Clone, Copy)]
pub struct ProfileRanges {
    pub m: (f64, f64),
    pub k: (f64, f64),
    pub d: (f64, f64),
    pub f: (f64, f64),
    pub c: (f64, f64),
}

/// Hard (inanimate) column: stiff, tightly damped, small separation.
pub const HARD_RANGES: ProfileRanges = ProfileRanges {
    m: (1.0, 1.5),
    k: (7.0, 10.0),
    d: (3.0, 5.0),
    f: (0.4, 0.7),
    c: (0.2, 0.5),
};

/// Soft (alive) column: heavy, compliant, wide separation.
pub const SOFT_RANGES: ProfileRanges = ProfileRanges {
    m: (3.0, 7.0),
    k: (0.1, 0.9),
    d: (1.0, 2.0),
    f: (0.2, 0.45),
    c: (0.6, 0.9),
};

pub fn ranges_for(kind: ObstacleKind) -> &'static ProfileRanges {
    match kind {
        ObstacleKind::Hard => &HARD_RANGES,
        ObstacleKind::Soft => &SOFT_RANGES,
    }
}

/// Leader speed cap by obstacle class and scene dynamics (m/s).
pub fn v_max_for(kind: ObstacleKind, dynamic: bool) -> f64 {
    match (kind, dynamic) {
        (ObstacleKind::Hard, false) => 1.4,
        (ObstacleKind::Soft, false) => 0.7,
        (ObstacleKind::Hard, true) => 1.0,
        (ObstacleKind::Soft, true) => 0.6,
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{field} = {value} outside {kind:?} range [{lo}, {hi}]")]
pub struct ProfileRangeError {
    pub kind: ObstacleKind,
    pub field: &'static str,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl<T: Real> ImpedanceProfile<T> {
    /// Checks that `(m, k, d, f, c)` sits in the column for `kind` and that
    /// `v_max` is positive.
    pub fn check_column(&self, kind: ObstacleKind) -> Result<(), ProfileRangeError> {
        let r = ranges_for(kind);
        let checks: [(&'static str, T, (f64, f64)); 5] = [
            ("m", self.m, r.m),
            ("k", self.k, r.k),
            ("d", self.d, r.d),
            ("F", self.f, r.f),
            ("c", self.c, r.c),
        ];
        for (field, value, (lo, hi)) in checks {
            if !(value >= real(lo) && value <= real(hi)) {
                return Err(ProfileRangeError {
                    kind,
                    field,
                    value: value.to_f64().unwrap_or(f64::NAN),
                    lo,
                    hi,
                });
            }
        }
        if !(self.v_max > T::zero()) {
            return Err(ProfileRangeError {
                kind,
                field: "v_max",
                value: self.v_max.to_f64().unwrap_or(f64::NAN),
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        Ok(())
    }
}

/// One database row: canonical description, its embedding, and the profile
/// recorded for that scene.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRecord<T> {
    pub id: u32,
    pub text: String,
    pub embedding: EmbeddingVector<T>,
    pub profile: ImpedanceProfile<T>,
    pub kind: ObstacleKind,
}

/// Ordered, validated collection of scenario records.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorDatabase<T> {
    records: Vec<ScenarioRecord<T>>,
}

impl<T: Real> VectorDatabase<T> {
    pub fn records(&self) -> &[ScenarioRecord<T>] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatabaseError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed database JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("record ids must be dense from 0: position {position} has id {id}")]
    NonDenseIds { position: usize, id: u32 },
    #[error("record {id}: {source}")]
    Range {
        id: u32,
        #[source]
        source: ProfileRangeError,
    },
    #[error("record {id}: stored embedding does not match the recomputed one (embedding version drift)")]
    EmbeddingMismatch { id: u32 },
    #[error("record {id}: {source}")]
    Embed {
        id: u32,
        #[source]
        source: EmbedError,
    },
}

/// Validates records and assembles the database. Stored embeddings are
/// recomputed from the texts and must match bit-exactly; a mismatch means
/// the records were produced by a different embedding version.
pub fn build_database<T: Real>(
    records: Vec<ScenarioRecord<T>>,
) -> Result<VectorDatabase<T>, DatabaseError> {
    for (position, rec) in records.iter().enumerate() {
        if rec.id as usize != position {
            return Err(DatabaseError::NonDenseIds { position, id: rec.id });
        }
        rec.profile
            .check_column(rec.kind)
            .map_err(|source| DatabaseError::Range { id: rec.id, source })?;
        let recomputed =
            embed::<T>(&rec.text).map_err(|source| DatabaseError::Embed { id: rec.id, source })?;
        if recomputed != rec.embedding {
            return Err(DatabaseError::EmbeddingMismatch { id: rec.id });
        }
    }
    Ok(VectorDatabase { records })
}

/// Database file row; embeddings are derived data and never persisted.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
struct RecordRow<T> {
    id: u32,
    text: String,
    profile: ImpedanceProfile<T>,
    kind: ObstacleKind,
}

pub fn load_database<T: Real>(path: impl AsRef<Path>) -> Result<VectorDatabase<T>, DatabaseError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DatabaseError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let rows: Vec<RecordRow<T>> = serde_json::from_str(&text)?;
    let mut records = Vec::with_capacity(rows.len());
    for row in rows {
        let embedding =
            embed::<T>(&row.text).map_err(|source| DatabaseError::Embed { id: row.id, source })?;
        records.push(ScenarioRecord {
            id: row.id,
            text: row.text,
            embedding,
            profile: row.profile,
            kind: row.kind,
        });
    }
    build_database(records)
}

/// Serializes the database rows as pretty JSON. The byte output is a pure
/// function of the records, which the database generator relies on for
/// reproducibility checks.
pub fn database_to_json<T: Real>(db: &VectorDatabase<T>) -> String {
    let rows: Vec<RecordRow<T>> = db
        .records
        .iter()
        .map(|r| RecordRow {
            id: r.id,
            text: r.text.clone(),
            profile: r.profile,
            kind: r.kind,
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&rows).expect("database rows serialize");
    text.push('\n');
    text
}

pub fn save_database<T: Real>(
    db: &VectorDatabase<T>,
    path: impl AsRef<Path>,
) -> Result<(), DatabaseError> {
    let path = path.as_ref();
    std::fs::write(path, database_to_json(db)).map_err(|source| DatabaseError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, thiserror::Error)]
pub enum RetrievalError {
    #[error("retrieve called on an empty database")]
    EmptyDatabase,
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

/// Nearest record to `query` plus the achieved distance.
#[derive(Debug, Clone, Copy)]
pub struct Retrieved<'a, T> {
    pub record: &'a ScenarioRecord<T>,
    pub distance: T,
}

/// Exact linear scan for the record minimizing Euclidean embedding distance;
/// ties go to the lowest id.
pub fn retrieve<'a, T: Real>(
    query: &str,
    db: &'a VectorDatabase<T>,
) -> Result<Retrieved<'a, T>, RetrievalError> {
    if db.records.is_empty() {
        return Err(RetrievalError::EmptyDatabase);
    }
    let q = embed::<T>(query)?;
    let mut best: Option<Retrieved<'a, T>> = None;
    for record in &db.records {
        let dist = distance(&q, &record.embedding);
        let better = match &best {
            None => true,
            // Strict inequality keeps the earliest (lowest-id) record on ties.
            Some(b) => dist < b.distance,
        };
        if better {
            best = Some(Retrieved { record, distance: dist });
        }
    }
    Ok(best.expect("database is non-empty"))
}
