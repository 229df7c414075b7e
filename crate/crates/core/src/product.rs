//! The product cipher: IDEA, then Skipjack, then Raiden, each applied a
//! number of times in succession, and its split into contiguous pipeline
//! partitions.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::block::{Block64, MasterKey128, RaidenKey, SkipjackKey80};
use crate::cipher::{idea, raiden, skipjack, Direction, IdeaKeySchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CipherId {
    Idea,
    Skipjack,
    Raiden,
}

impl CipherId {
    pub const ALL: [CipherId; 3] = [CipherId::Idea, CipherId::Skipjack, CipherId::Raiden];

    pub const fn name(self) -> &'static str {
        match self {
            CipherId::Idea => "idea",
            CipherId::Skipjack => "skipjack",
            CipherId::Raiden => "raiden",
        }
    }

    pub const fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for CipherId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CipherId {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "idea" => Ok(CipherId::Idea),
            "skipjack" => Ok(CipherId::Skipjack),
            "raiden" => Ok(CipherId::Raiden),
            other => Err(SpecError::UnknownCipher(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("unknown cipher {0:?} (expected idea, skipjack or raiden)")]
    UnknownCipher(String),
    #[error("iterations must be at least 1")]
    ZeroIterations,
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("cannot split {total} iterations into {stages} stages")]
    Partition { stages: usize, total: u64 },
    #[error("weight for {0} must be positive and finite")]
    Weight(CipherId),
}

/// One cipher applied `iterations` times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StageSpec {
    pub cipher: CipherId,
    iterations: u32,
}

impl StageSpec {
    pub fn new(cipher: CipherId, iterations: u32) -> Result<Self, SpecError> {
        if iterations == 0 {
            return Err(SpecError::ZeroIterations);
        }
        Ok(StageSpec { cipher, iterations })
    }

    pub fn iterations(&self) -> u32 {
        self.iterations
    }
}

impl fmt::Display for StageSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cipher={} iterations={}", self.cipher, self.iterations)
    }
}

impl FromStr for StageSpec {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_stage_line(s, 1)
    }
}

fn parse_stage_line(s: &str, line: usize) -> Result<StageSpec, SpecError> {
    let syntax = |message: String| SpecError::Syntax { line, message };
    let mut cipher = None;
    let mut iterations = None;
    for token in s.split_whitespace() {
        let (k, v) = token
            .split_once('=')
            .ok_or_else(|| syntax(format!("expected key=value, got {token:?}")))?;
        match k {
            "cipher" => cipher = Some(v.parse::<CipherId>().map_err(|e| syntax(e.to_string()))?),
            "iterations" => {
                iterations = Some(
                    v.parse::<u32>()
                        .map_err(|_| syntax(format!("bad iteration count {v:?}")))?,
                )
            }
            other => return Err(syntax(format!("unknown stage field {other:?}"))),
        }
    }
    let cipher = cipher.ok_or_else(|| syntax("missing cipher=".into()))?;
    let iterations = iterations.ok_or_else(|| syntax("missing iterations=".into()))?;
    StageSpec::new(cipher, iterations).map_err(|e| syntax(e.to_string()))
}

/// Parse an order-significant stage list, one `cipher=idea iterations=20`
/// entry per line. Blank lines and `#` comments are ignored.
pub fn parse_stages(text: &str) -> Result<Vec<StageSpec>, SpecError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        out.push(parse_stage_line(line, i + 1)?);
    }
    Ok(out)
}

pub fn format_stages(stages: &[StageSpec]) -> String {
    stages.iter().map(|s| format!("{s}\n")).collect()
}

pub fn canonical_stages() -> Vec<StageSpec> {
    vec![
        StageSpec { cipher: CipherId::Idea, iterations: 20 },
        StageSpec { cipher: CipherId::Skipjack, iterations: 24 },
        StageSpec { cipher: CipherId::Raiden, iterations: 20 },
    ]
}

fn canonical_five_way() -> Vec<Vec<StageSpec>> {
    let s = |cipher, iterations| vec![StageSpec { cipher, iterations }];
    vec![
        s(CipherId::Idea, 10),
        s(CipherId::Idea, 10),
        s(CipherId::Skipjack, 12),
        s(CipherId::Skipjack, 12),
        s(CipherId::Raiden, 20),
    ]
}

/// All key schedules derived from one master key.
#[derive(Debug, Clone)]
pub struct KeyMaterial {
    pub master: MasterKey128,
    pub idea_encrypt: IdeaKeySchedule,
    pub idea_decrypt: IdeaKeySchedule,
    pub skipjack: SkipjackKey80,
    pub raiden: RaidenKey,
}

impl KeyMaterial {
    pub fn derive(master: MasterKey128) -> Self {
        KeyMaterial {
            master,
            idea_encrypt: IdeaKeySchedule::new(&master, Direction::Encrypt),
            idea_decrypt: IdeaKeySchedule::new(&master, Direction::Decrypt),
            skipjack: master.skipjack_key(),
            raiden: master.raiden_key(),
        }
    }

    #[inline]
    pub fn encrypt_once(&self, cipher: CipherId, b: Block64) -> Block64 {
        match cipher {
            CipherId::Idea => idea::encrypt(b, &self.idea_encrypt),
            CipherId::Skipjack => skipjack::encrypt(b, &self.skipjack),
            CipherId::Raiden => raiden::encrypt(b, &self.raiden),
        }
    }

    #[inline]
    pub fn decrypt_once(&self, cipher: CipherId, b: Block64) -> Block64 {
        match cipher {
            CipherId::Idea => idea::decrypt(b, &self.idea_decrypt),
            CipherId::Skipjack => skipjack::decrypt(b, &self.skipjack),
            CipherId::Raiden => raiden::decrypt(b, &self.raiden),
        }
    }
}

/// A run of stages sharing one set of key schedules. This is what a single
/// pipeline worker executes.
#[derive(Debug, Clone)]
pub struct StageProgram {
    stages: Vec<StageSpec>,
    keys: Arc<KeyMaterial>,
    direction: Direction,
}

impl StageProgram {
    pub fn new(stages: Vec<StageSpec>, keys: Arc<KeyMaterial>, direction: Direction) -> Self {
        StageProgram { stages, keys, direction }
    }

    pub fn stages(&self) -> &[StageSpec] {
        &self.stages
    }

    #[inline]
    pub fn apply(&self, mut b: Block64) -> Block64 {
        match self.direction {
            Direction::Encrypt => {
                for s in &self.stages {
                    for _ in 0..s.iterations {
                        b = self.keys.encrypt_once(s.cipher, b);
                    }
                }
            }
            Direction::Decrypt => {
                for s in self.stages.iter().rev() {
                    for _ in 0..s.iterations {
                        b = self.keys.decrypt_once(s.cipher, b);
                    }
                }
            }
        }
        b
    }
}

#[derive(Debug, Clone)]
pub struct ProductCipherSpec {
    stages: Vec<StageSpec>,
    keys: Arc<KeyMaterial>,
}

impl ProductCipherSpec {
    pub fn new(stages: Vec<StageSpec>, key: MasterKey128) -> Self {
        ProductCipherSpec {
            stages,
            keys: Arc::new(KeyMaterial::derive(key)),
        }
    }

    /// IDEA ×20, Skipjack ×24, Raiden ×20.
    pub fn canonical(key: MasterKey128) -> Self {
        Self::new(canonical_stages(), key)
    }

    pub fn stages(&self) -> &[StageSpec] {
        &self.stages
    }

    pub fn key(&self) -> MasterKey128 {
        self.keys.master
    }

    pub fn keys(&self) -> &Arc<KeyMaterial> {
        &self.keys
    }

    pub fn total_iterations(&self) -> u64 {
        self.stages.iter().map(|s| s.iterations as u64).sum()
    }

    pub fn is_canonical(&self) -> bool {
        self.stages == canonical_stages()
    }

    pub fn program(&self, stages: Vec<StageSpec>, direction: Direction) -> StageProgram {
        StageProgram::new(stages, Arc::clone(&self.keys), direction)
    }

    pub fn encrypt_block(&self, b: Block64) -> Block64 {
        let mut b = b;
        for s in &self.stages {
            for _ in 0..s.iterations {
                b = self.keys.encrypt_once(s.cipher, b);
            }
        }
        b
    }

    pub fn decrypt_block(&self, b: Block64) -> Block64 {
        let mut b = b;
        for s in self.stages.iter().rev() {
            for _ in 0..s.iterations {
                b = self.keys.decrypt_once(s.cipher, b);
            }
        }
        b
    }
}

pub fn encrypt_block(block: Block64, spec: &ProductCipherSpec) -> Block64 {
    spec.encrypt_block(block)
}

pub fn decrypt_block(block: Block64, spec: &ProductCipherSpec) -> Block64 {
    spec.decrypt_block(block)
}

/// Relative cost of one iteration of each cipher, used to balance
/// partitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CipherWeights(pub [f64; 3]);

impl CipherWeights {
    pub const UNIT: CipherWeights = CipherWeights([1.0; 3]);

    pub fn get(&self, c: CipherId) -> f64 {
        self.0[c.index()]
    }

    fn validate(&self) -> Result<(), SpecError> {
        for c in CipherId::ALL {
            let w = self.get(c);
            if !(w.is_finite() && w > 0.0) {
                return Err(SpecError::Weight(c));
            }
        }
        Ok(())
    }
}

impl Default for CipherWeights {
    fn default() -> Self {
        Self::UNIT
    }
}

/// Split into `n_stages` contiguous groups with unit weights. The canonical
/// spec split five ways is pinned to IDEA 10 | IDEA 10 | Skipjack 12 |
/// Skipjack 12 | Raiden 20.
pub fn partition(spec: &ProductCipherSpec, n_stages: usize) -> Result<Vec<Vec<StageSpec>>, SpecError> {
    if n_stages == 5 && spec.is_canonical() {
        return Ok(canonical_five_way());
    }
    partition_weighted(spec.stages(), n_stages, &CipherWeights::UNIT)
}

/// Contiguous split minimising the heaviest group, then the sum of squared
/// group weights so runs are spread as evenly as possible. Ties go to the
/// earliest cut.
pub fn partition_weighted(
    stages: &[StageSpec],
    n_stages: usize,
    weights: &CipherWeights,
) -> Result<Vec<Vec<StageSpec>>, SpecError> {
    weights.validate()?;
    let total: u64 = stages.iter().map(|s| s.iterations as u64).sum();
    if n_stages == 0 || n_stages as u64 > total {
        return Err(SpecError::Partition { stages: n_stages, total });
    }

    // flattened iterations, tagged with the stage they came from
    let items: Vec<(usize, CipherId)> = stages
        .iter()
        .enumerate()
        .flat_map(|(i, s)| std::iter::repeat((i, s.cipher)).take(s.iterations as usize))
        .collect();
    let t = items.len();
    let mut prefix = vec![0.0f64; t + 1];
    for (i, &(_, c)) in items.iter().enumerate() {
        prefix[i + 1] = prefix[i] + weights.get(c);
    }
    let seg = |a: usize, b: usize| prefix[b] - prefix[a];

    // cost[g][i]: best (max, sumsq) splitting items[..i] into g groups
    const INF: (f64, f64) = (f64::INFINITY, f64::INFINITY);
    let mut cost = vec![vec![INF; t + 1]; n_stages + 1];
    let mut cut = vec![vec![0usize; t + 1]; n_stages + 1];
    cost[0][0] = (0.0, 0.0);
    for g in 1..=n_stages {
        for i in g..=t - (n_stages - g) {
            let mut best = INF;
            let mut best_k = 0;
            for k in (g - 1)..i {
                let (pm, ps) = cost[g - 1][k];
                if !pm.is_finite() {
                    continue;
                }
                let w = seg(k, i);
                let cand = (pm.max(w), ps + w * w);
                if cand.0 < best.0 || (cand.0 == best.0 && cand.1 < best.1) {
                    best = cand;
                    best_k = k;
                }
            }
            cost[g][i] = best;
            cut[g][i] = best_k;
        }
    }

    let mut bounds = vec![t];
    let mut i = t;
    for g in (1..=n_stages).rev() {
        i = cut[g][i];
        bounds.push(i);
    }
    bounds.reverse();

    Ok(bounds
        .windows(2)
        .map(|w| regroup(&items[w[0]..w[1]], stages))
        .collect())
}

fn regroup(items: &[(usize, CipherId)], stages: &[StageSpec]) -> Vec<StageSpec> {
    let mut out: Vec<(usize, StageSpec)> = Vec::new();
    for &(idx, cipher) in items {
        match out.last_mut() {
            Some((last, spec)) if *last == idx => spec.iterations += 1,
            _ => out.push((idx, StageSpec { cipher, iterations: 1 })),
        }
    }
    debug_assert!(out.iter().all(|(i, s)| s.cipher == stages[*i].cipher));
    out.into_iter().map(|(_, s)| s).collect()
}

/// Iteration sequence of a list of groups, for comparing partitions.
pub fn flatten(groups: &[Vec<StageSpec>]) -> Vec<CipherId> {
    groups
        .iter()
        .flatten()
        .flat_map(|s| std::iter::repeat(s.cipher).take(s.iterations as usize))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(c: CipherId, n: u32) -> StageSpec {
        StageSpec::new(c, n).unwrap()
    }

    #[test]
    fn canonical_five_way_split() {
        let spec = ProductCipherSpec::canonical(MasterKey128::ZERO);
        let groups = partition(&spec, 5).unwrap();
        let counts: Vec<(CipherId, u32)> = groups
            .iter()
            .map(|g| {
                assert_eq!(g.len(), 1);
                (g[0].cipher, g[0].iterations())
            })
            .collect();
        assert_eq!(
            counts,
            vec![
                (CipherId::Idea, 10),
                (CipherId::Idea, 10),
                (CipherId::Skipjack, 12),
                (CipherId::Skipjack, 12),
                (CipherId::Raiden, 20)
            ]
        );
    }

    #[test]
    fn single_group_is_the_spec() {
        let stages = vec![st(CipherId::Idea, 2), st(CipherId::Idea, 3), st(CipherId::Raiden, 1)];
        let spec = ProductCipherSpec::new(stages.clone(), MasterKey128::ZERO);
        assert_eq!(partition(&spec, 1).unwrap(), vec![stages]);
    }

    #[test]
    fn too_many_stages_rejected() {
        let spec = ProductCipherSpec::new(vec![st(CipherId::Raiden, 3)], MasterKey128::ZERO);
        assert_eq!(
            partition(&spec, 4),
            Err(SpecError::Partition { stages: 4, total: 3 })
        );
        assert!(partition(&spec, 0).is_err());
        assert_eq!(partition(&spec, 3).unwrap().len(), 3);
    }

    #[test]
    fn weighted_split_balances_cost() {
        // raiden is a quarter the cost of idea: 4 idea + 16 raiden => 2 groups of 8 units
        let stages = vec![st(CipherId::Idea, 4), st(CipherId::Raiden, 16)];
        let w = CipherWeights([4.0, 1.0, 1.0]);
        let groups = partition_weighted(&stages, 2, &w).unwrap();
        assert_eq!(groups[0], vec![st(CipherId::Idea, 4)]);
        assert_eq!(groups[1], vec![st(CipherId::Raiden, 16)]);
        assert!(partition_weighted(&stages, 2, &CipherWeights([0.0, 1.0, 1.0])).is_err());
    }

    #[test]
    fn stage_text_round_trip() {
        let text = format_stages(&canonical_stages());
        assert_eq!(
            text,
            "cipher=idea iterations=20\ncipher=skipjack iterations=24\ncipher=raiden iterations=20\n"
        );
        assert_eq!(parse_stages(&text).unwrap(), canonical_stages());
        let err = parse_stages("cipher=idea iterations=1\n\ncipher=des iterations=2").unwrap_err();
        assert!(matches!(err, SpecError::Syntax { line: 3, .. }), "{err}");
        assert!(matches!(
            parse_stages("cipher=idea iterations=0"),
            Err(SpecError::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn serde_names() {
        assert_eq!(serde_json::to_string(&CipherId::Skipjack).unwrap(), "\"skipjack\"");
    }
}
