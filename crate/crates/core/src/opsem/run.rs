//! Seeded sampling and exhaustive enumeration of the step relation.

use std::collections::{BTreeMap, VecDeque};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{step, step_outcome, Configuration, OpsemError, Outcome};
use crate::syntax::Comp;
use crate::{ExactDist, FinDist, Prob};

/// Upper bound on the number of steps taken by one run or enumeration.
pub const STEP_BUDGET: usize = 200_000;

/// Resolves `flip(θ)`: `true` selects the heads branch.
pub trait BranchChooser {
    fn choose(&mut self, theta: &Prob) -> bool;
}

/// Draws a uniform 64-bit integer `u` and takes heads iff `u / 2^64 < θ`,
/// compared exactly.
pub struct SeededChooser {
    rng: ChaCha8Rng,
}

impl SeededChooser {
    pub fn new(seed: u64) -> Self {
        SeededChooser {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl BranchChooser for SeededChooser {
    fn choose(&mut self, theta: &Prob) -> bool {
        let u = BigInt::from(self.rng.next_u64());
        let draw = Prob::new(u, BigInt::one() << 64);
        draw < *theta
    }
}

/// Replays a fixed sequence of branch choices, then repeats `fallback`.
pub struct ForcedChooser {
    choices: VecDeque<bool>,
    fallback: bool,
}

impl ForcedChooser {
    pub fn new(choices: impl IntoIterator<Item = bool>, fallback: bool) -> Self {
        ForcedChooser {
            choices: choices.into_iter().collect(),
            fallback,
        }
    }

    pub fn always(b: bool) -> Self {
        Self::new([], b)
    }
}

impl BranchChooser for ForcedChooser {
    fn choose(&mut self, _theta: &Prob) -> bool {
        self.choices.pop_front().unwrap_or(self.fallback)
    }
}

/// Runs `p` to a terminal configuration. Degenerate flips (θ ∈ {0, 1}) take
/// their only possible branch without consulting the chooser. Returns the
/// terminal configuration and the full trace, initial and terminal included.
pub fn run_with(
    p: &Comp,
    chooser: &mut dyn BranchChooser,
) -> Result<(Configuration, Vec<Configuration>), OpsemError> {
    let mut trace = Vec::new();
    let last = run_into(p, chooser, &mut trace)?;
    Ok((last, trace))
}

/// Like [`run_with`], but pushes every configuration onto `trace` as it is
/// reached, so on error `trace` ends at the configuration that failed.
pub fn run_into(
    p: &Comp,
    chooser: &mut dyn BranchChooser,
    trace: &mut Vec<Configuration>,
) -> Result<Configuration, OpsemError> {
    let mut cur = Configuration::initial(p);
    trace.push(cur.clone());
    let mut steps = 0usize;
    while !cur.is_terminal() {
        if steps >= STEP_BUDGET {
            return Err(OpsemError::StepBudgetExceeded(STEP_BUDGET));
        }
        steps += 1;
        cur = match step_outcome(&cur)? {
            Outcome::Det(c) => c,
            Outcome::Flip {
                theta,
                heads,
                tails,
            } => {
                let take_heads = if theta.is_zero() {
                    false
                } else if theta.is_one() {
                    true
                } else {
                    chooser.choose(&theta)
                };
                if take_heads {
                    heads
                } else {
                    tails
                }
            }
        };
        trace.push(cur.clone());
    }
    Ok(cur)
}

pub fn run_sampled(p: &Comp, seed: u64) -> Result<(Configuration, Vec<Configuration>), OpsemError> {
    run_with(p, &mut SeededChooser::new(seed))
}

/// Exhaustively unfolds the step relation from `start`, merging equal
/// configurations layer by layer, and calls `visit` on every configuration
/// reached (once per layer in which it occurs). Returns the distribution over
/// terminal configurations.
pub fn explore(
    start: Configuration,
    budget: usize,
    mut visit: impl FnMut(&Configuration),
) -> Result<ExactDist<Configuration>, OpsemError> {
    let mut frontier: BTreeMap<Configuration, Prob> = BTreeMap::new();
    frontier.insert(start, Prob::one());
    let mut terminals: Vec<(Configuration, Prob)> = Vec::new();
    let mut steps = 0usize;
    while !frontier.is_empty() {
        let mut next: BTreeMap<Configuration, Prob> = BTreeMap::new();
        for (c, w) in frontier {
            visit(&c);
            if c.is_terminal() {
                terminals.push((c, w));
                continue;
            }
            steps += 1;
            if steps > budget {
                return Err(OpsemError::StepBudgetExceeded(budget));
            }
            for (succ, p) in step(&c)?.iter() {
                let entry = next.entry(succ.clone()).or_insert_with(Prob::zero);
                *entry += &w * p;
            }
        }
        frontier = next;
    }
    Ok(FinDist::from_pairs(terminals).expect("enumeration preserves mass"))
}

/// Big-step semantics: the exact distribution over terminal configurations.
pub fn enumerate_bigstep(p: &Comp) -> Result<ExactDist<Configuration>, OpsemError> {
    explore(Configuration::initial(p), STEP_BUDGET, |_| {})
}
