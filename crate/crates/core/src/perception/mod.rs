//! Scene analyzers: ground truth, a seeded noise model reproducing
//! lighting-dependent accuracy, and a remote-analyzer HTTP client.

pub mod remote;

pub use remote::{RemoteAnalyzer, RemoteError, DEFAULT_PROMPT, DEFAULT_TIMEOUT_SECS};

use crate::retrieval::{retrieve, RetrievalError, VectorDatabase};
use crate::scene::{
    classify_spacing, render_description, DescribedObstacle, Lighting, ObstacleKind, Scenario,
    SceneDescription, DEFAULT_SPACING_THRESHOLD,
};
use crate::Real;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Stochastic analyzer error model. Lighting presets are calibrated against
/// the bundled scenarios so the combined detection-and-retrieval success rate
/// lands at the reference values (0.80 optimal, 0.60 inadequate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerceptionNoise {
    /// Probability an obstacle is omitted entirely.
    pub p_miss: f64,
    /// Probability an obstacle's kind flips.
    pub p_misclass: f64,
    /// Standard deviation of the grid-cell position noise.
    pub jitter_sigma: f64,
    pub seed: u64,
}

/// Optimal-lighting preset: (p_miss, p_misclass, jitter_sigma). Calibrated
/// so the detection-and-retrieval success rate over the bundled scenarios
/// converges to 0.80.
pub const OPTIMAL_PRESET: (f64, f64, f64) = (0.056, 0.056, 0.8);
/// Inadequate-lighting preset, calibrated to 0.60 the same way.
pub const INADEQUATE_PRESET: (f64, f64, f64) = (0.126, 0.126, 1.6);

impl PerceptionNoise {
    pub fn zero(seed: u64) -> Self {
        PerceptionNoise { p_miss: 0.0, p_misclass: 0.0, jitter_sigma: 0.0, seed }
    }

    pub fn optimal(seed: u64) -> Self {
        let (p_miss, p_misclass, jitter_sigma) = OPTIMAL_PRESET;
        PerceptionNoise { p_miss, p_misclass, jitter_sigma, seed }
    }

    pub fn inadequate(seed: u64) -> Self {
        let (p_miss, p_misclass, jitter_sigma) = INADEQUATE_PRESET;
        PerceptionNoise { p_miss, p_misclass, jitter_sigma, seed }
    }

    pub fn for_lighting(lighting: Lighting, seed: u64) -> Self {
        match lighting {
            Lighting::Optimal => Self::optimal(seed),
            Lighting::Inadequate => Self::inadequate(seed),
        }
    }

    fn assert_valid(&self) {
        assert!((0.0..=1.0).contains(&self.p_miss), "p_miss out of [0,1]");
        assert!((0.0..=1.0).contains(&self.p_misclass), "p_misclass out of [0,1]");
        assert!(self.jitter_sigma >= 0.0, "jitter_sigma negative");
    }
}

/// Noisy analysis result; `exact` says the description equals the noiseless
/// ground truth bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzerOutcome {
    pub description: SceneDescription,
    pub exact: bool,
}

/// Exact description of the scenario at t = 0.
///
/// Obstacles are listed in id order. The gate partition and the spacing label
/// are computed from the grid-snapped positions, the same data the cells in
/// the description carry, so zero noise reproduces this output exactly.
pub fn analyze_ground_truth<T: Real>(scenario: &Scenario<T>) -> SceneDescription {
    let mut order: Vec<usize> = (0..scenario.obstacles.len()).collect();
    order.sort_by_key(|&i| scenario.obstacles[i].id);
    let mut entries = Vec::with_capacity(order.len());
    let mut before = 0u32;
    for &i in &order {
        let o = &scenario.obstacles[i];
        let cell = scenario.arena.to_cell(o.pos);
        if scenario.is_before_gate(scenario.arena.cell_center(cell)) {
            before += 1;
        }
        entries.push(DescribedObstacle { kind: o.kind, cell });
    }
    build_description(entries, before)
}

fn build_description(entries: Vec<DescribedObstacle>, before: u32) -> SceneDescription {
    let total = entries.len() as u32;
    let spacing = if total >= 2 {
        let cells: Vec<[u32; 2]> = entries.iter().map(|e| e.cell).collect();
        Some(classify_spacing(&cells, DEFAULT_SPACING_THRESHOLD).expect("two or more cells"))
    } else {
        None
    };
    let desc = SceneDescription { total, before, after: total - before, entries, spacing };
    debug_assert!(desc.validate().is_ok());
    desc
}

/// Applies miss, misclassification, and position jitter per obstacle in id
/// order, then recomputes counts, the gate partition, and the spacing label
/// from the perturbed cells.
///
/// Every obstacle consumes exactly four random draws (miss, flip, jitter x,
/// jitter y) regardless of the probabilities, so for one seed the outcome is
/// a monotone function of each probability.
pub fn analyze_noisy<T: Real>(scenario: &Scenario<T>, noise: &PerceptionNoise) -> AnalyzerOutcome {
    noise.assert_valid();
    let truth = analyze_ground_truth(scenario);
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let grid = scenario.arena.grid;

    let mut entries = Vec::with_capacity(truth.entries.len());
    let mut before = 0u32;
    for gt_entry in &truth.entries {
        let u_miss: f64 = rng.gen();
        let u_flip: f64 = rng.gen();
        let g_x: f64 = rng.sample(StandardNormal);
        let g_y: f64 = rng.sample(StandardNormal);
        if u_miss < noise.p_miss {
            continue;
        }
        let kind = if u_flip < noise.p_misclass {
            match gt_entry.kind {
                ObstacleKind::Soft => ObstacleKind::Hard,
                ObstacleKind::Hard => ObstacleKind::Soft,
            }
        } else {
            gt_entry.kind
        };
        let jitter_axis = |cell: u32, g: f64| -> u32 {
            let perturbed = (cell as f64 + g * noise.jitter_sigma).round();
            perturbed.clamp(0.0, (grid - 1) as f64) as u32
        };
        let cell = [jitter_axis(gt_entry.cell[0], g_x), jitter_axis(gt_entry.cell[1], g_y)];
        if scenario.is_before_gate(scenario.arena.cell_center(cell)) {
            before += 1;
        }
        entries.push(DescribedObstacle { kind, cell });
    }
    let description = build_description(entries, before);
    let exact = description == truth;
    AnalyzerOutcome { description, exact }
}

/// One detection-and-retrieval trial: success means the noisy description
/// matches ground truth up to position jitter (counts, kinds, spacing) and
/// retrieves the same database record as the noiseless description.
///
/// `gt_record_id` is the id retrieved from the ground-truth text; callers
/// precompute it once per scenario.
pub fn detection_retrieval_success<T: Real>(
    scenario: &Scenario<T>,
    gt: &SceneDescription,
    gt_record_id: u32,
    noise: &PerceptionNoise,
    db: &VectorDatabase<T>,
) -> Result<bool, RetrievalError> {
    let outcome = analyze_noisy(scenario, noise);
    if !outcome.description.matches_ignoring_positions(gt) {
        return Ok(false);
    }
    let hit = retrieve(&render_description(&outcome.description), db)?;
    Ok(hit.record.id == gt_record_id)
}
