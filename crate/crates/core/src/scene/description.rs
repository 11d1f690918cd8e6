//! Canonical scene-description grammar.
//!
//! A description is a sequence of clauses joined by `"; "`:
//!
//! ```text
//! counts:    "no obstacles" | "<n> cylindrical stand(s)" [" and <n> human(s)"]
//! before:    "no obstacles before the gate" | "<n> before the gate"
//! after:     "<n> after the gate"
//! spacing:   "closely spaced" | "widely spaced"      (present iff total >= 2)
//! positions: "at cells <kind> (<x>, <y>), ..."       (present iff total >= 1)
//! ```
//!
//! Hard obstacles are named "cylindrical stand(s)", soft ones "human(s)"; in
//! the counts clause hard comes first. `render_description` and
//! `parse_description` are exact inverses on valid descriptions.

use super::ObstacleKind;
use serde::{Deserialize, Serialize};

/// Scene-level spacing label from the minimum pairwise obstacle distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    CloselySpaced,
    WidelySpaced,
}

/// One detected obstacle: class plus description-grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescribedObstacle {
    pub kind: ObstacleKind,
    pub cell: [u32; 2],
}

/// Structured perception output; the value the canonical text serializes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneDescription {
    pub total: u32,
    pub before: u32,
    pub after: u32,
    pub entries: Vec<DescribedObstacle>,
    /// Present exactly when `total >= 2`; spacing of a single obstacle is
    /// undefined.
    pub spacing: Option<Spacing>,
}

impl SceneDescription {
    /// Internal-consistency check: counts match the entry list and the
    /// spacing label is present exactly for multi-obstacle scenes.
    pub fn validate(&self) -> Result<(), String> {
        if self.total as usize != self.entries.len() {
            return Err(format!(
                "total {} does not match {} entries",
                self.total,
                self.entries.len()
            ));
        }
        if self.before + self.after != self.total {
            return Err(format!(
                "before {} + after {} != total {}",
                self.before, self.after, self.total
            ));
        }
        if self.spacing.is_some() != (self.total >= 2) {
            return Err("spacing label must be present exactly when total >= 2".into());
        }
        Ok(())
    }

    /// Equality on everything the position jitter is exempt from: counts,
    /// the kind sequence, and the spacing label.
    pub fn matches_ignoring_positions(&self, other: &SceneDescription) -> bool {
        self.total == other.total
            && self.before == other.before
            && self.after == other.after
            && self.spacing == other.spacing
            && self.entries.len() == other.entries.len()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|(a, b)| a.kind == b.kind)
    }
}

/// Spacing threshold in grid cells.
pub const DEFAULT_SPACING_THRESHOLD: u32 = 20;

#[derive(Debug, thiserror::Error)]
pub enum SpacingError {
    #[error("spacing classification needs at least 2 positions, got {0}")]
    NotApplicable(usize),
}

/// Widely spaced iff the minimum pairwise Euclidean distance strictly exceeds
/// `threshold` grid cells. Exact integer arithmetic: distances are compared
/// through their squares.
pub fn classify_spacing(cells: &[[u32; 2]], threshold: u32) -> Result<Spacing, SpacingError> {
    assert!(threshold > 0, "threshold must be positive");
    if cells.len() < 2 {
        return Err(SpacingError::NotApplicable(cells.len()));
    }
    let mut min_sq = i64::MAX;
    for (i, a) in cells.iter().enumerate() {
        for b in &cells[i + 1..] {
            let dx = a[0] as i64 - b[0] as i64;
            let dy = a[1] as i64 - b[1] as i64;
            min_sq = min_sq.min(dx * dx + dy * dy);
        }
    }
    let t = threshold as i64;
    if min_sq > t * t {
        Ok(Spacing::WidelySpaced)
    } else {
        Ok(Spacing::CloselySpaced)
    }
}

fn kind_word(kind: ObstacleKind, n: u32) -> &'static str {
    match (kind, n) {
        (ObstacleKind::Hard, 1) => "cylindrical stand",
        (ObstacleKind::Hard, _) => "cylindrical stands",
        (ObstacleKind::Soft, 1) => "human",
        (ObstacleKind::Soft, _) => "humans",
    }
}

/// Serializes a description into the canonical text.
///
/// The input must satisfy [`SceneDescription::validate`]; rendering an
/// inconsistent value would produce text that cannot round-trip.
pub fn render_description(desc: &SceneDescription) -> String {
    debug_assert!(desc.validate().is_ok(), "render of invalid description");
    let mut clauses: Vec<String> = Vec::with_capacity(5);

    let hard = desc.entries.iter().filter(|e| e.kind == ObstacleKind::Hard).count() as u32;
    let soft = desc.total - hard;
    if desc.total == 0 {
        clauses.push("no obstacles".into());
    } else {
        let mut parts = Vec::new();
        if hard > 0 {
            parts.push(format!("{hard} {}", kind_word(ObstacleKind::Hard, hard)));
        }
        if soft > 0 {
            parts.push(format!("{soft} {}", kind_word(ObstacleKind::Soft, soft)));
        }
        clauses.push(parts.join(" and "));
    }

    if desc.before == 0 {
        clauses.push("no obstacles before the gate".into());
    } else {
        clauses.push(format!("{} before the gate", desc.before));
    }
    clauses.push(format!("{} after the gate", desc.after));

    if let Some(s) = desc.spacing {
        clauses.push(
            match s {
                Spacing::CloselySpaced => "closely spaced",
                Spacing::WidelySpaced => "widely spaced",
            }
            .into(),
        );
    }

    if !desc.entries.is_empty() {
        let entries: Vec<String> = desc
            .entries
            .iter()
            .map(|e| format!("{} ({}, {})", kind_word(e.kind, 1), e.cell[0], e.cell[1]))
            .collect();
        clauses.push(format!("at cells {}", entries.join(", ")));
    }

    clauses.join("; ")
}

#[derive(Debug, thiserror::Error)]
#[error("parse error at byte {pos}: {reason}")]
pub struct DescriptionParseError {
    pub pos: usize,
    pub reason: String,
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn err(&self, reason: impl Into<String>) -> DescriptionParseError {
        DescriptionParseError { pos: self.pos, reason: reason.into() }
    }

    fn try_eat(&mut self, lit: &str) -> bool {
        if self.rest().starts_with(lit) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn eat(&mut self, lit: &str) -> Result<(), DescriptionParseError> {
        if self.try_eat(lit) {
            Ok(())
        } else {
            Err(self.err(format!("expected \"{lit}\"")))
        }
    }

    fn eat_u32(&mut self) -> Result<u32, DescriptionParseError> {
        let digits: String = self.rest().chars().take_while(|c| c.is_ascii_digit()).collect();
        if digits.is_empty() {
            return Err(self.err("expected a number"));
        }
        if digits.len() > 1 && digits.starts_with('0') {
            return Err(self.err("numbers must not have leading zeros"));
        }
        let value: u32 = digits
            .parse()
            .map_err(|_| self.err(format!("number \"{digits}\" out of range")))?;
        self.pos += digits.len();
        Ok(value)
    }

    /// The next run of non-delimiter characters, for error messages.
    fn peek_token(&self) -> &'a str {
        let rest = self.rest();
        let end = rest
            .find(|c: char| c == ' ' || c == ';' || c == ',' || c == '(')
            .unwrap_or(rest.len());
        &rest[..end]
    }

    fn at_end(&self) -> bool {
        self.pos == self.text.len()
    }
}

fn parse_kind_word(cur: &mut Cursor, n: u32) -> Result<ObstacleKind, DescriptionParseError> {
    for kind in [ObstacleKind::Hard, ObstacleKind::Soft] {
        if cur.try_eat(kind_word(kind, n)) {
            return Ok(kind);
        }
    }
    Err(cur.err(format!("unknown obstacle word \"{}\"", cur.peek_token())))
}

/// Inverse of [`render_description`]. Rejects anything outside the canonical
/// format, reporting the byte position of the first offending token.
pub fn parse_description(text: &str) -> Result<SceneDescription, DescriptionParseError> {
    let mut cur = Cursor { text, pos: 0 };
    if text.trim().is_empty() {
        return Err(cur.err("empty description"));
    }

    // Counts clause.
    let (mut hard, mut soft) = (0u32, 0u32);
    if cur.try_eat("no obstacles") {
        // Total zero; "no obstacles" standing alone, not the before-clause
        // prefix, because the before clause follows only after "; ".
    } else {
        let n = cur.eat_u32()?;
        if n == 0 {
            return Err(cur.err("zero count must be written \"no obstacles\""));
        }
        cur.eat(" ")?;
        let first = parse_kind_word(&mut cur, n)?;
        match first {
            ObstacleKind::Hard => hard = n,
            ObstacleKind::Soft => soft = n,
        }
        if cur.rest().starts_with(" and ") {
            if first == ObstacleKind::Soft {
                return Err(cur.err("hard count must precede soft count"));
            }
            cur.eat(" and ")?;
            let n2 = cur.eat_u32()?;
            if n2 == 0 {
                return Err(cur.err("zero count must be omitted"));
            }
            cur.eat(" ")?;
            let second_pos = cur.pos;
            match parse_kind_word(&mut cur, n2)? {
                ObstacleKind::Soft => soft = n2,
                ObstacleKind::Hard => {
                    return Err(DescriptionParseError {
                        pos: second_pos,
                        reason: "duplicate hard-obstacle count".into(),
                    })
                }
            }
        }
    }
    let total = hard + soft;

    // Before clause.
    cur.eat("; ")?;
    let before = if cur.try_eat("no obstacles before the gate") {
        0
    } else {
        let n = cur.eat_u32()?;
        if n == 0 {
            return Err(cur.err("zero before-count must be written \"no obstacles before the gate\""));
        }
        cur.eat(" before the gate")?;
        n
    };

    // After clause.
    cur.eat("; ")?;
    let after_pos = cur.pos;
    let after = cur.eat_u32()?;
    cur.eat(" after the gate")?;
    if before + after != total {
        return Err(DescriptionParseError {
            pos: after_pos,
            reason: format!("{before} before + {after} after does not equal total {total}"),
        });
    }

    // Spacing clause, mandatory for two or more obstacles.
    let spacing = if total >= 2 {
        cur.eat("; ")?;
        if cur.try_eat("closely spaced") {
            Some(Spacing::CloselySpaced)
        } else if cur.try_eat("widely spaced") {
            Some(Spacing::WidelySpaced)
        } else {
            return Err(cur.err("expected spacing clause"));
        }
    } else {
        None
    };

    // Positions clause, mandatory for one or more obstacles.
    let mut entries = Vec::with_capacity(total as usize);
    if total >= 1 {
        cur.eat("; ")?;
        cur.eat("at cells ")?;
        for i in 0..total {
            if i > 0 {
                cur.eat(", ")?;
            }
            let kind = parse_kind_word(&mut cur, 1)?;
            cur.eat(" (")?;
            let x = cur.eat_u32()?;
            cur.eat(", ")?;
            let y = cur.eat_u32()?;
            cur.eat(")")?;
            entries.push(DescribedObstacle { kind, cell: [x, y] });
        }
        let listed_hard = entries.iter().filter(|e| e.kind == ObstacleKind::Hard).count() as u32;
        if listed_hard != hard {
            return Err(cur.err(format!(
                "position entries list {listed_hard} hard obstacles but the counts clause says {hard}"
            )));
        }
    }

    if !cur.at_end() {
        return Err(cur.err("unexpected trailing input"));
    }

    let desc = SceneDescription { total, before, after, entries, spacing };
    debug_assert!(desc.validate().is_ok());
    Ok(desc)
}
