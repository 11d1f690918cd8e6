//! Database construction: uniform random search over the impedance parameter
//! columns, each candidate scored in simulation, the best profile per
//! scenario recorded together with the scenario's canonical description.
//!
//! Every candidate derives its generator stream from (seed, scenario index,
//! sample index), so results are independent of evaluation order and the
//! first N samples of a larger search equal a smaller search exactly.

use crate::perception::analyze_ground_truth;
use crate::retrieval::{
    build_database, embed, ranges_for, v_max_for, DatabaseError, EmbedError, ImpedanceProfile,
    ScenarioRecord, VectorDatabase,
};
use crate::scene::{render_description, ObstacleKind, Scenario};
use crate::sim::{run, Metrics, SimConfig, SimError, SimResult};
use crate::{derive_seed, real, Real};
use rand::distributions::uniform::SampleUniform;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Scoring weights. `settle` weighs the settle-time penalty for Hard
/// scenarios and the residual-oscillation penalty for Soft ones; `overshoot`
/// applies to Soft only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreWeights<T> {
    pub deflection: T,
    pub overshoot: T,
    pub clearance: T,
    pub settle: T,
}

impl<T: Real> Default for ScoreWeights<T> {
    fn default() -> Self {
        ScoreWeights {
            deflection: T::one(),
            overshoot: T::one(),
            clearance: T::one(),
            settle: T::one(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig<T> {
    /// Candidates evaluated per scenario.
    pub samples: usize,
    pub seed: u64,
    pub weights: ScoreWeights<T>,
}

impl<T: Real> Default for SearchConfig<T> {
    fn default() -> Self {
        SearchConfig { samples: 200, seed: 1, weights: ScoreWeights::default() }
    }
}

impl<T: Real> SearchConfig<T> {
    pub fn validate(&self) -> Result<(), DbgenError> {
        if self.samples < 1 {
            return Err(DbgenError::BadConfig("samples must be at least 1".into()));
        }
        let w = &self.weights;
        let values = [w.deflection, w.overshoot, w.clearance, w.settle];
        if values.iter().any(|v| !(*v >= T::zero()) || !v.is_finite()) {
            return Err(DbgenError::BadConfig("weights must be finite and non-negative".into()));
        }
        if values.iter().all(|v| *v == T::zero()) {
            return Err(DbgenError::BadConfig("at least one weight must be positive".into()));
        }
        Ok(())
    }
}

/// One evaluated profile with its score and run metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCandidate<T> {
    pub profile: ImpedanceProfile<T>,
    pub score: T,
    pub metrics: Metrics<T>,
}

#[derive(Debug, thiserror::Error)]
pub enum DbgenError {
    #[error("invalid search config: {0}")]
    BadConfig(String),
    #[error("scenario {name:?}: every candidate collided")]
    AllCandidatesCollide { name: String },
    #[error("scenario {name:?}: simulation failed: {source}")]
    Sim {
        name: String,
        #[source]
        source: SimError,
    },
    #[error("scenario {name:?}: record assembly failed: {source}")]
    Record {
        name: String,
        #[source]
        source: EmbedError,
    },
    #[error(transparent)]
    Database(#[from] DatabaseError),
}

/// Uniform draw from the kind's parameter column; v_max comes from the
/// kind/static-dynamic table. The draw order (m, k, d, F, c) is fixed and is
/// part of the byte-reproducibility contract.
pub fn sample_profile<T, R>(kind: ObstacleKind, dynamic: bool, rng: &mut R) -> ImpedanceProfile<T>
where
    T: Real + SampleUniform,
    R: Rng + ?Sized,
{
    let ranges = ranges_for(kind);
    let draw = |rng: &mut R, (lo, hi): (f64, f64)| rng.gen_range(real::<T>(lo)..=real::<T>(hi));
    ImpedanceProfile {
        m: draw(rng, ranges.m),
        k: draw(rng, ranges.k),
        d: draw(rng, ranges.d),
        f: draw(rng, ranges.f),
        c: draw(rng, ranges.c),
        v_max: real(v_max_for(kind, dynamic)),
    }
}

/// Full-scale lateral deviation for normalization: the deflection radius.
const DEFLECTION_SCALE: f64 = 0.65;
/// Clearances beyond this (m) all score the same.
const CLEARANCE_SCALE: f64 = 0.5;
/// One deflection offset magnitude: overshoot past that is maximal.
const OVERSHOOT_SCALE: f64 = 0.2925;
/// Post-peak deviation energy (m²·s) treated as fully unsettled.
const RESIDUAL_SCALE: f64 = 0.05;
/// Settle times are normalized by the default run horizon (s).
const SETTLE_SCALE: f64 = 60.0;

fn clamp01<T: Real>(x: T) -> T {
    x.max(T::zero()).min(T::one())
}

/// Weighted multi-metric score; any collision disqualifies with −∞.
///
/// Soft scenarios reward wide deflection and clearance and penalize
/// overshoot and residual oscillation; Hard scenarios reward clearance and
/// penalize deflection and settle time (no settle within the horizon counts
/// as the worst settle).
pub fn score_candidate<T: Real>(
    result: &SimResult<T>,
    kind: ObstacleKind,
    weights: &ScoreWeights<T>,
) -> T {
    let m = &result.metrics;
    if m.collision_count > 0 {
        return T::neg_infinity();
    }
    let deflection = clamp01(m.max_deflection / real(DEFLECTION_SCALE));
    let clearance = m
        .min_obstacle_clearance
        .map(|c| clamp01(c / real(CLEARANCE_SCALE)))
        .unwrap_or_else(T::one);
    match kind {
        ObstacleKind::Soft => {
            let overshoot = clamp01(m.overshoot / real(OVERSHOOT_SCALE));
            let residual = clamp01(m.residual_oscillation / real(RESIDUAL_SCALE));
            weights.deflection * deflection + weights.clearance * clearance
                - weights.overshoot * overshoot
                - weights.settle * residual
        }
        ObstacleKind::Hard => {
            let settle = m
                .settle_time
                .map(|t| clamp01(t / real(SETTLE_SCALE)))
                .unwrap_or_else(T::one);
            weights.clearance * clearance
                - weights.deflection * deflection
                - weights.settle * settle
        }
    }
}

/// Runs the random search for one scenario and returns the best candidate
/// (strictly-greater argmax, so earlier samples win ties and a longer search
/// can only improve the score).
pub fn best_candidate<T>(
    name: &str,
    scenario: &Scenario<T>,
    scenario_idx: usize,
    search: &SearchConfig<T>,
) -> Result<ScoredCandidate<T>, DbgenError>
where
    T: Real + SampleUniform,
{
    search.validate()?;
    let kind = scenario.dominant_kind();
    let dynamic = scenario.is_dynamic();
    let cfg = SimConfig::default();
    let mut best: Option<ScoredCandidate<T>> = None;
    for sample_idx in 0..search.samples {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
            search.seed,
            scenario_idx as u64,
            sample_idx as u64,
        ));
        let profile = sample_profile(kind, dynamic, &mut rng);
        let result = run(scenario, &profile, &cfg)
            .map_err(|source| DbgenError::Sim { name: name.to_string(), source })?;
        let score = score_candidate(&result, kind, &search.weights);
        if best.as_ref().map_or(true, |b| score > b.score) {
            best = Some(ScoredCandidate { profile, score, metrics: result.metrics });
        }
    }
    let best = best.expect("validated samples >= 1");
    if !best.score.is_finite() {
        return Err(DbgenError::AllCandidatesCollide { name: name.to_string() });
    }
    Ok(best)
}

/// Assembles one database record: ground-truth description, its embedding,
/// and the chosen profile.
pub fn scenario_record<T: Real>(
    id: u32,
    scenario: &Scenario<T>,
    profile: ImpedanceProfile<T>,
) -> Result<ScenarioRecord<T>, EmbedError> {
    let text = render_description(&analyze_ground_truth(scenario));
    let embedding = embed(&text)?;
    Ok(ScenarioRecord { id, text, embedding, profile, kind: scenario.dominant_kind() })
}

/// Searches every scenario and assembles the validated database. `progress`
/// is called once per finished scenario with its index, name, and winner.
pub fn generate_database<T>(
    scenarios: &[(String, Scenario<T>)],
    search: &SearchConfig<T>,
    mut progress: impl FnMut(usize, &str, &ScoredCandidate<T>),
) -> Result<VectorDatabase<T>, DbgenError>
where
    T: Real + SampleUniform,
{
    if scenarios.is_empty() {
        return Err(DbgenError::BadConfig("at least one scenario is required".into()));
    }
    search.validate()?;
    let mut records = Vec::with_capacity(scenarios.len());
    for (idx, (name, scenario)) in scenarios.iter().enumerate() {
        let best = best_candidate(name, scenario, idx, search)?;
        progress(idx, name, &best);
        records.push(
            scenario_record(idx as u32, scenario, best.profile)
                .map_err(|source| DbgenError::Record { name: name.clone(), source })?,
        );
    }
    Ok(build_database(records)?)
}
