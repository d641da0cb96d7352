//! Birth, death and move Metropolis-Hastings sampler for the Gibbs models on
//! a bounded window, with free boundary.
//!
//! The reference measure is the unit-rate Poisson process on the window with
//! marks drawn from the mark law, so all acceptance ratios involve only the
//! local energy `V(x | phi)` and the proposal probabilities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BucketGrid, Window};
use crate::models::ModelSpec;
use crate::patterns::{Mark, MarkSpace, MarkedPoint, PointPattern};
use crate::scalar::Scalar;

pub const DEFAULT_BURN_IN: u64 = 100_000;
pub const DEFAULT_STEPS: u64 = 200_000;

/// Probabilities of proposing a birth, a death or a move.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProposalMix<T> {
    pub birth: T,
    pub death: T,
    #[serde(rename = "move")]
    pub shift: T,
}

impl<T: Scalar> Default for ProposalMix<T> {
    fn default() -> Self {
        Self { birth: T::lit(0.45), death: T::lit(0.45), shift: T::lit(0.1) }
    }
}

impl<T: Scalar> ProposalMix<T> {
    pub fn validate(&self) -> Result<()> {
        let all = [self.birth, self.death, self.shift];
        if all.iter().any(|p| !(p.is_finite() && *p >= T::zero())) {
            return Err(Error::Configuration(format!("proposal probabilities must be nonnegative: {self:?}")));
        }
        let total = self.birth + self.death + self.shift;
        if (total - T::one()).abs() > T::lit(1e-12) {
            return Err(Error::Configuration(format!("proposal probabilities sum to {total}, not 1")));
        }
        // Births and deaths reverse each other, so both must be possible.
        if !(self.birth > T::zero() && self.death > T::zero()) {
            return Err(Error::Configuration("birth and death probabilities must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SimConfig<T> {
    pub model: ModelSpec<T>,
    pub theta: Vec<T>,
    pub window: Window<T>,
    /// Total number of proposals.
    pub steps: u64,
    /// Leading proposals excluded from the acceptance statistics.
    pub burn_in: u64,
    pub seed: u64,
    pub mix: ProposalMix<T>,
    /// Starting state; empty by default.
    pub initial: Vec<MarkedPoint<T>>,
}

impl<T: Scalar> SimConfig<T> {
    /// Defaults for everything except the model, parameters and window.
    pub fn new(model: ModelSpec<T>, theta: Vec<T>, window: Window<T>) -> Self {
        Self {
            model,
            theta,
            window,
            steps: DEFAULT_STEPS,
            burn_in: DEFAULT_BURN_IN,
            seed: 0,
            mix: ProposalMix::default(),
            initial: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate_theta(&self.theta)?;
        self.model.stability_bound(&self.theta)?;
        self.mix.validate()?;
        if self.steps < self.burn_in {
            return Err(Error::Configuration(format!("steps {} below burn_in {}", self.steps, self.burn_in)));
        }
        let mut grid = BucketGrid::new(&self.window, self.model.range());
        let mut ids = Vec::new();
        for (i, p) in self.initial.iter().enumerate() {
            if !self.window.contains(&p.location()) {
                return Err(Error::InvalidInput(format!("initial point ({}, {}) lies outside the window", p.x, p.y)));
            }
            if !self.model.accepts(&p.mark) {
                return Err(Error::ModelMismatch(format!("initial mark {:?} not valid for the model", p.mark)));
            }
            ids.clear();
            grid.candidates(&p.location(), T::zero(), &mut ids);
            if ids.iter().any(|&j| self.initial[j].location() == p.location()) {
                return Err(Error::InvalidInput(format!("duplicate initial location ({}, {})", p.x, p.y)));
            }
            grid.insert(i, &p.location());
        }
        Ok(())
    }
}

/// Proposal and acceptance counts of one kind after burn-in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveCounts {
    pub proposed: u64,
    pub accepted: u64,
}

impl MoveCounts {
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainStats {
    pub birth: MoveCounts,
    pub death: MoveCounts,
    #[serde(rename = "move")]
    pub shift: MoveCounts,
}

#[derive(Clone, Debug)]
pub struct SimRun<T> {
    pub pattern: PointPattern<T>,
    pub stats: ChainStats,
}

/// `log` of the birth acceptance ratio for adding `x` to a state of `n`
/// points whose local energy at `x` is `energy`.
pub fn birth_log_ratio<T: Scalar>(energy: T, n: usize, area: T, mix: &ProposalMix<T>) -> T {
    (mix.death / mix.birth * area / T::from_usize_lossy(n + 1)).ln() - energy
}

/// `log` of the death acceptance ratio for removing a point from a state of
/// `n` points, where `energy` is its local energy against the other `n - 1`.
pub fn death_log_ratio<T: Scalar>(energy: T, n: usize, area: T, mix: &ProposalMix<T>) -> T {
    (mix.birth / mix.death * T::from_usize_lossy(n) / area).ln() + energy
}

/// Chain state: points with a bucket index for neighbour queries.
struct State<'a, T> {
    model: &'a ModelSpec<T>,
    theta: &'a [T],
    points: Vec<MarkedPoint<T>>,
    grid: BucketGrid<T>,
    range: T,
    ids: Vec<usize>,
    near: Vec<MarkedPoint<T>>,
}

impl<'a, T: Scalar> State<'a, T> {
    fn new(cfg: &'a SimConfig<T>) -> Self {
        let range = cfg.model.range();
        let grid = BucketGrid::from_points(&cfg.window, range, cfg.initial.iter().map(MarkedPoint::location));
        Self {
            model: &cfg.model,
            theta: &cfg.theta,
            points: cfg.initial.iter().map(|p| normalize(p, &cfg.model.mark_space())).collect(),
            grid,
            range,
            ids: Vec::new(),
            near: Vec::new(),
        }
    }

    /// `V(x | phi - skip)`.
    fn energy(&mut self, x: &MarkedPoint<T>, skip: Option<usize>) -> T {
        self.ids.clear();
        self.near.clear();
        let loc = x.location();
        self.grid.candidates(&loc, self.range, &mut self.ids);
        self.ids.sort_unstable();
        let r2 = self.range * self.range;
        for &j in &self.ids {
            let p = self.points[j];
            if Some(j) != skip && p.location().dist2(&loc) <= r2 {
                if p.location() == loc {
                    // Duplicate locations have probability zero; never accept one.
                    return T::infinity();
                }
                self.near.push(p);
            }
        }
        self.model.local_from_neighbours(x, &self.near).energy(self.theta)
    }

    fn insert(&mut self, x: MarkedPoint<T>) {
        self.grid.insert(self.points.len(), &x.location());
        self.points.push(x);
    }

    fn remove(&mut self, i: usize) {
        let last = self.points.len() - 1;
        self.grid.remove(i, &self.points[i].location());
        if i != last {
            self.grid.relabel(last, i, &self.points[last].location());
        }
        self.points.swap_remove(i);
    }
}

/// Single-type labels become unit marks.
fn normalize<T: Scalar>(p: &MarkedPoint<T>, space: &MarkSpace<T>) -> MarkedPoint<T> {
    match (space, p.mark) {
        (MarkSpace::Unit, Mark::Label(_)) => MarkedPoint::new(p.x, p.y, Mark::Unit),
        _ => *p,
    }
}

fn random_mark<T: Scalar, R: Rng>(space: &MarkSpace<T>, rng: &mut R) -> Mark<T> {
    match space {
        MarkSpace::Unit => Mark::Unit,
        MarkSpace::Finite(m) => Mark::Label(rng.random_range(1..=*m)),
        MarkSpace::Interval(mx) => Mark::Size(T::lit(rng.random::<f64>()) * *mx),
    }
}

fn uniform_in<T: Scalar, R: Rng>(w: &Window<T>, rng: &mut R) -> (T, T) {
    let u = T::lit(rng.random::<f64>());
    let v = T::lit(rng.random::<f64>());
    (w.xmin + u * w.width(), w.ymin + v * w.height())
}

fn accept<T: Scalar, R: Rng>(log_ratio: T, rng: &mut R) -> bool {
    if log_ratio >= T::zero() {
        return true;
    }
    // Hard-core violations give -inf and are always rejected.
    let u: f64 = rng.random();
    u.ln() < log_ratio.to_f64_lossy()
}

/// Runs the chain for `config.steps` proposals and returns its final state.
pub fn simulate_mh<T: Scalar>(config: &SimConfig<T>) -> Result<SimRun<T>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = State::new(config);
    let mut stats = ChainStats::default();
    let w = config.window;
    let area = w.area();
    let space = config.model.mark_space();
    let mix = config.mix;
    let p_birth = mix.birth.to_f64_lossy();
    let p_death = p_birth + mix.death.to_f64_lossy();
    for step in 0..config.steps {
        let counted = step >= config.burn_in;
        let kind: f64 = rng.random();
        let n = state.points.len();
        if kind < p_birth {
            let (x, y) = uniform_in(&w, &mut rng);
            let p = MarkedPoint::new(x, y, random_mark(&space, &mut rng));
            let e = state.energy(&p, None);
            let ok = accept(birth_log_ratio(e, n, area, &mix), &mut rng);
            if ok {
                state.insert(p);
            }
            if counted {
                stats.birth.proposed += 1;
                stats.birth.accepted += ok as u64;
            }
        } else if kind < p_death {
            let ok = n > 0 && {
                let i = rng.random_range(0..n);
                let p = state.points[i];
                let e = state.energy(&p, Some(i));
                let ok = accept(death_log_ratio(e, n, area, &mix), &mut rng);
                if ok {
                    state.remove(i);
                }
                ok
            };
            if counted {
                stats.death.proposed += 1;
                stats.death.accepted += ok as u64;
            }
        } else {
            // Relocate a uniform point uniformly, keeping its mark.
            let ok = n > 0 && {
                let i = rng.random_range(0..n);
                let old = state.points[i];
                let (x, y) = uniform_in(&w, &mut rng);
                let new = MarkedPoint::new(x, y, old.mark);
                let e_old = state.energy(&old, Some(i));
                let e_new = state.energy(&new, Some(i));
                let ok = accept(e_old - e_new, &mut rng);
                if ok {
                    state.remove(i);
                    state.insert(new);
                }
                ok
            };
            if counted {
                stats.shift.proposed += 1;
                stats.shift.accepted += ok as u64;
            }
        }
    }
    let pattern = PointPattern::new(state.points, w, space)?;
    Ok(SimRun { pattern, stats })
}

/// Independent chains with the given seeds, run in parallel; results are
/// returned in seed order.
pub fn simulate_chains<T: Scalar>(config: &SimConfig<T>, seeds: &[u64]) -> Result<Vec<SimRun<T>>> {
    config.validate()?;
    seeds
        .par_iter()
        .map(|&seed| simulate_mh(&SimConfig { seed, ..config.clone() }))
        .collect()
}

#[cfg(test)]
mod tests;
