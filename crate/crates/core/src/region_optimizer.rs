//! Search over superposition designs: weighted-sum maximisation, ε-constraint
//! boundary tracing, the time-sharing gain γ*, and parametric sweeps.
//!
//! Every pmf is optimised through an anchored softmax (first logit fixed at
//! zero) and `ν` through a logistic map, so iterates stay strictly inside the
//! simplices and Nelder–Mead runs unconstrained. Sparse optima that the
//! interior parametrisation can only approach are covered by exact endpoint
//! designs built from the single-user capacity solutions.
//!
//! Multi-start: each auxiliary size `|B| ∈ 1..=|X|` is seeded with
//! `restarts` random starts plus structured ones (deterministic `X|U` maps,
//! the single-user optima, uniform). All starts get a short screening run and
//! the most promising are polished. Results are merged in a fixed order with
//! ties broken lexicographically, so the output does not depend on the
//! thread count.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel_model::{BcWardenModel, Channel, Distribution};
use crate::covert_rates::{
    softmax_with_anchor, ts_optimality_condition, user_capacity, RateContext, RatePair,
    SingleUserCapacity, SuperpositionParams, TsCondition,
};
use crate::error::{CovertError, Result};
use crate::nelder_mead::{minimize, NmOptions};

/// Slack on the ε-constraint `L1 ≥ target` for accepted points.
pub const TARGET_SLACK: f64 = 1e-8;
/// Points closer than this in both coordinates are treated as equal.
pub const DOMINANCE_TOL: f64 = 1e-9;
const PENALTIES: [f64; 4] = [1e2, 1e4, 1e6, 1e8];
const MAX_DETERMINISTIC_MAPS: usize = 81;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// Random starts per auxiliary alphabet size.
    pub restarts: usize,
    /// Number of log-spaced scalarisation weights used by the boundary.
    pub weight_grid: usize,
    /// Iteration cap of each polishing Nelder–Mead run.
    pub local_iters: usize,
    pub seed: u64,
    /// Parameter-space convergence tolerance.
    pub tol: f64,
    /// Lattice spacing for the time-sharing condition.
    pub ts_resolution: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            weight_grid: 16,
            local_iters: 3000,
            seed: 0,
            tol: 1e-10,
            ts_resolution: 1e-3,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(CovertError::InvalidParameter(
                "restarts must be at least 1".into(),
            ));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(CovertError::InvalidParameter("tol must be positive".into()));
        }
        if self.local_iters == 0 {
            return Err(CovertError::InvalidParameter(
                "local_iters must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn screening_iters(&self) -> usize {
        (self.local_iters / 10).max(50)
    }

    fn polished(&self) -> usize {
        (self.restarts / 4).max(4)
    }

    fn nm(&self, iters: usize, step: f64) -> NmOptions {
        NmOptions {
            max_iters: iters,
            xtol: self.tol,
            ftol: 1e-15,
            initial_step: step,
        }
    }
}

/// Weight on `L2` in the scalarisation `L1 + λ·L2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weight {
    Finite(f64),
    /// Maximise `L2` alone.
    Infinite,
}

#[derive(Debug, Clone, Copy)]
enum Goal {
    Weighted(f64),
    L2Only,
    Constrained { target: f64, rho: f64 },
}

impl Goal {
    fn score(self, r: RatePair) -> f64 {
        match self {
            Goal::Weighted(lambda) => r.l1 + lambda * r.l2,
            Goal::L2Only => r.l2,
            Goal::Constrained { target, rho } => {
                let short = (target - r.l1).max(0.0);
                r.l2 - rho * short * short
            }
        }
    }

    fn admits(self, r: RatePair) -> bool {
        match self {
            Goal::Constrained { target, .. } => r.l1 >= target - TARGET_SLACK,
            _ => true,
        }
    }
}

/// Maps unconstrained vectors to designs with a fixed `|B|`.
#[derive(Debug, Clone, Copy)]
struct Layout {
    nx: usize,
    nb: usize,
    x0: usize,
}

impl Layout {
    fn dim(&self) -> usize {
        1 + (self.nx - 2) + (self.nb - 1) + self.nb * (self.nx - 1)
    }

    fn decode(&self, theta: &[f64]) -> Design {
        let (nx, nb) = (self.nx, self.nb);
        let nu = 1.0 / (1.0 + (-theta[0]).exp());
        let mut at = 1;
        let take = |at: &mut usize, n: usize| {
            let s = &theta[*at..*at + n];
            *at += n;
            s
        };
        let tilde = softmax_with_anchor(take(&mut at, nx - 2));
        let mut ptilde = vec![0.0; nx];
        for (x, p) in (0..nx).filter(|&x| x != self.x0).zip(tilde) {
            ptilde[x] = p;
        }
        let pu = softmax_with_anchor(take(&mut at, nb - 1));
        let mut pxu = Vec::with_capacity(nb * nx);
        for _ in 0..nb {
            pxu.extend(softmax_with_anchor(take(&mut at, nx - 1)));
        }
        Design {
            nb,
            nu,
            ptilde,
            pu,
            pxu,
        }
    }

    /// Inverse of `decode` after mixing every pmf with `floor` of uniform mass.
    fn encode(&self, nu: f64, ptilde: &[f64], pu: &[f64], pxu: &[f64], floor: f64) -> Vec<f64> {
        fn logits(p: &[f64], floor: f64, out: &mut Vec<f64>) {
            let m = p.len() as f64;
            let mixed: Vec<f64> = p.iter().map(|v| (1.0 - floor) * v + floor / m).collect();
            out.extend(mixed[1..].iter().map(|v| (v / mixed[0]).ln()));
        }
        let nu = nu.clamp(1e-3, 1.0 - 1e-3);
        let mut theta = vec![(nu / (1.0 - nu)).ln()];
        let tilde: Vec<f64> = (0..self.nx)
            .filter(|&x| x != self.x0)
            .map(|x| ptilde[x])
            .collect();
        logits(&tilde, floor, &mut theta);
        logits(pu, floor, &mut theta);
        for row in pxu.chunks(self.nx) {
            logits(row, floor, &mut theta);
        }
        theta
    }
}

/// Raw design vectors; `pxu` is row-major `|B| × |X|`.
#[derive(Debug, Clone, PartialEq)]
struct Design {
    nb: usize,
    nu: f64,
    ptilde: Vec<f64>,
    pu: Vec<f64>,
    pxu: Vec<f64>,
}

impl Design {
    fn to_params(&self) -> SuperpositionParams {
        let nx = self.ptilde.len();
        SuperpositionParams {
            nu: self.nu,
            ptilde_x_a: Distribution::from_vec_unchecked(self.ptilde.clone()),
            pu_b: Distribution::from_vec_unchecked(self.pu.clone()),
            px_given_u_b: Channel::from_flat_unchecked(self.nb, nx, self.pxu.clone()),
        }
    }

    fn flat(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.nu)
            .chain(self.ptilde.iter().copied())
            .chain(self.pu.iter().copied())
            .chain(self.pxu.iter().copied())
    }

    fn lexicographic(&self, other: &Self) -> Ordering {
        self.nb.cmp(&other.nb).then_with(|| {
            self.flat()
                .zip(other.flat())
                .map(|(a, b)| a.total_cmp(&b))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    score: f64,
    pair: RatePair,
    design: Design,
}

impl Candidate {
    /// Is `self` preferable to `other`? Higher score first, then the
    /// lexicographically smaller design.
    fn beats(&self, other: &Candidate) -> bool {
        match self.score.total_cmp(&other.score) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => self.design.lexicographic(&other.design).is_lt(),
        }
    }
}

fn pick_best(cands: impl IntoIterator<Item = Candidate>) -> Option<Candidate> {
    cands.into_iter().fold(None, |best, c| match best {
        Some(b) if !c.beats(&b) => Some(b),
        _ => Some(c),
    })
}

/// Everything the searches need about one model.
struct Problem<'a> {
    ctx: RateContext<'a>,
    cap1: SingleUserCapacity,
    cap2: SingleUserCapacity,
    config: OptimizerConfig,
}

impl<'a> Problem<'a> {
    fn new(model: &'a BcWardenModel, config: &OptimizerConfig) -> Result<Self> {
        config.validate()?;
        if model.inputs() < 2 {
            return Err(CovertError::InvalidParameter(
                "the input alphabet needs a symbol besides x0".into(),
            ));
        }
        Ok(Self {
            ctx: RateContext::new(model)?,
            cap1: user_capacity(model, 1)?,
            cap2: user_capacity(model, 2)?,
            config: *config,
        })
    }

    fn model(&self) -> &BcWardenModel {
        self.ctx.model()
    }

    fn nx(&self) -> usize {
        self.model().inputs()
    }

    fn layout(&self, nb: usize) -> Layout {
        Layout {
            nx: self.nx(),
            nb,
            x0: self.model().x0(),
        }
    }

    fn evaluate(&self, d: &Design) -> Option<RatePair> {
        self.ctx.evaluate(d.nu, &d.ptilde, &d.pu, &d.pxu).ok()
    }

    fn candidate(&self, goal: Goal, design: Design) -> Option<Candidate> {
        let pair = self.evaluate(&design)?;
        if !goal.admits(pair) {
            return None;
        }
        Some(Candidate {
            score: goal.score(pair),
            pair,
            design,
        })
    }

    fn ptilde_star(&self) -> Vec<f64> {
        match &self.cap1.argmax {
            Some(a) => a.as_slice().to_vec(),
            None => uniform_off(self.nx(), self.model().x0()),
        }
    }

    /// `(L1*, 0)`: everything on the A-layer with the user-1 optimal pmf.
    fn endpoint1(&self) -> Design {
        let nx = self.nx();
        let mut pxu = vec![0.0; nx];
        pxu[self.model().x0()] = 1.0;
        Design {
            nb: 1,
            nu: 0.0,
            ptilde: self.ptilde_star(),
            pu: vec![1.0],
            pxu,
        }
    }

    /// `(0, L2*)`: everything on the B-layer, `U = X` drawn from the user-2
    /// optimal pmf, so no information reaches user 1 through `X|U`.
    fn endpoint2(&self) -> Design {
        let nx = self.nx();
        let x0 = self.model().x0();
        let pu = match &self.cap2.argmax {
            Some(a) => a.as_slice().to_vec(),
            None => {
                let mut v = vec![0.0; nx];
                v[x0] = 1.0;
                v
            }
        };
        let mut pxu = vec![0.0; nx * nx];
        for x in 0..nx {
            pxu[x * nx + x] = 1.0;
        }
        Design {
            nb: nx,
            nu: 1.0,
            ptilde: self.ptilde_star(),
            pu,
            pxu,
        }
    }

    fn endpoints(&self, goal: Goal) -> Vec<Candidate> {
        [self.endpoint1(), self.endpoint2()]
            .into_iter()
            .filter_map(|d| self.candidate(goal, d))
            .collect()
    }

    fn starts(&self, nb: usize, salt: u64) -> Vec<Vec<f64>> {
        let nx = self.nx();
        let x0 = self.model().x0();
        let layout = self.layout(nb);
        let ptilde = self.ptilde_star();
        let uniform_u = vec![1.0 / nb as f64; nb];
        let mut starts = Vec::new();

        let maps = nx.pow(nb as u32);
        let map_ids: Vec<usize> = if maps <= MAX_DETERMINISTIC_MAPS {
            (0..maps).collect()
        } else {
            // Cyclic shifts of u ↦ u.
            (0..nx)
                .map(|s| (0..nb).fold(0, |acc, u| acc * nx + (u + s) % nx))
                .collect()
        };
        for id in map_ids {
            let mut pxu = vec![0.0; nb * nx];
            let mut rest = id;
            for u in (0..nb).rev() {
                pxu[u * nx + rest % nx] = 1.0;
                rest /= nx;
            }
            starts.push(layout.encode(0.5, &ptilde, &uniform_u, &pxu, 0.05));
        }

        if let Some(a2) = &self.cap2.argmax {
            if nb == nx {
                let mut eye = vec![0.0; nx * nx];
                for x in 0..nx {
                    eye[x * nx + x] = 1.0;
                }
                starts.push(layout.encode(0.5, &ptilde, a2.as_slice(), &eye, 0.05));
            } else {
                let rows: Vec<f64> = (0..nb).flat_map(|_| a2.as_slice().to_vec()).collect();
                starts.push(layout.encode(0.5, &ptilde, &uniform_u, &rows, 0.05));
            }
        }
        let uniform_x = vec![1.0 / nx as f64; nx * nb];
        starts.push(layout.encode(0.5, &uniform_off(nx, x0), &uniform_u, &uniform_x, 0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(
            self.config
                .seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(((nb as u64) << 32) ^ salt),
        );
        for _ in 0..self.config.restarts {
            starts.push(
                (0..layout.dim())
                    .map(|_| rng.random_range(-3.0..3.0))
                    .collect(),
            );
        }
        starts
    }

    /// Maximises `goal` (or the last of a penalty continuation) from many
    /// starts for every `|B|`, returning the best admissible candidate.
    fn search(&self, goals: &[Goal], salt: u64, warm: &[Design]) -> Option<Candidate> {
        let final_goal = *goals.last().expect("at least one goal");
        let mut tasks: Vec<(usize, Vec<f64>)> = Vec::new();
        for nb in 1..=self.nx() {
            let layout = self.layout(nb);
            for d in warm.iter().filter(|d| d.nb == nb) {
                tasks.push((nb, layout.encode(d.nu, &d.ptilde, &d.pu, &d.pxu, 1e-6)));
            }
            tasks.extend(self.starts(nb, salt).into_iter().map(|t| (nb, t)));
        }

        let screen_opts = self.config.nm(self.config.screening_iters(), 0.5);
        let screened: Vec<(f64, usize, Vec<f64>)> = tasks
            .par_iter()
            .map(|(nb, theta)| {
                let r = self.run_nm(goals[0], *nb, theta, &screen_opts);
                (r.1, *nb, r.0)
            })
            .collect();

        // Keep the best few per |B|.
        let mut keep: Vec<(usize, Vec<f64>)> = Vec::new();
        for nb in 1..=self.nx() {
            let mut group: Vec<&(f64, usize, Vec<f64>)> =
                screened.iter().filter(|s| s.1 == nb).collect();
            group.sort_by(|a, b| b.0.total_cmp(&a.0));
            keep.extend(
                group
                    .into_iter()
                    .take(self.config.polished())
                    .map(|s| (s.1, s.2.clone())),
            );
        }

        let polish = self.config.nm(self.config.local_iters, 0.25);
        let polished: Vec<Option<Candidate>> = keep
            .par_iter()
            .map(|(nb, theta)| {
                let mut theta = theta.clone();
                for &goal in goals {
                    theta = self.run_nm(goal, *nb, &theta, &polish).0;
                }
                // One restart from the converged point escapes simplex collapse.
                theta = self
                    .run_nm(
                        final_goal,
                        *nb,
                        &theta,
                        &self.config.nm(self.config.local_iters, 0.05),
                    )
                    .0;
                self.candidate(final_goal, self.layout(*nb).decode(&theta))
            })
            .collect();
        pick_best(polished.into_iter().flatten())
    }

    /// Returns the minimiser in θ-space and its (maximised) score.
    fn run_nm(&self, goal: Goal, nb: usize, theta: &[f64], opts: &NmOptions) -> (Vec<f64>, f64) {
        let layout = self.layout(nb);
        let r = minimize(
            |t| {
                let d = layout.decode(t);
                self.evaluate(&d).map_or(f64::NAN, |p| -goal.score(p))
            },
            theta,
            opts,
        );
        (r.x, -r.fx)
    }

    fn weighted(&self, weight: Weight) -> Result<Candidate> {
        let goal = match weight {
            Weight::Finite(l) if l.is_finite() && l >= 0.0 => Goal::Weighted(l),
            Weight::Finite(l) if l == f64::INFINITY => Goal::L2Only,
            Weight::Infinite => Goal::L2Only,
            Weight::Finite(l) => {
                return Err(CovertError::InvalidParameter(format!(
                    "weight {l} must be ≥ 0"
                )))
            }
        };
        let salt = match goal {
            Goal::Weighted(l) => l.to_bits(),
            _ => u64::MAX,
        };
        let found = self.search(&[goal], salt, &[]);
        Ok(pick_best(self.endpoints(goal).into_iter().chain(found))
            .unwrap_or_else(|| self.zero_candidate()))
    }

    fn constrained(&self, target: f64, warm: &[Design]) -> Candidate {
        let l1_star = self.cap1.value;
        let cap_goal = Goal::Constrained {
            target,
            rho: PENALTIES[3],
        };
        if target <= 0.0 {
            return self
                .candidate(cap_goal, self.endpoint2())
                .unwrap_or_else(|| self.zero_candidate());
        }
        let e1 = self.candidate(cap_goal, self.endpoint1());
        if target >= l1_star - TARGET_SLACK {
            return e1.unwrap_or_else(|| self.zero_candidate());
        }
        let goals: Vec<Goal> = PENALTIES
            .iter()
            .map(|&rho| Goal::Constrained { target, rho })
            .collect();
        let found = self.search(&goals, target.to_bits(), warm);
        pick_best(e1.into_iter().chain(found)).unwrap_or_else(|| self.zero_candidate())
    }

    fn zero_candidate(&self) -> Candidate {
        let d = self.endpoint1();
        Candidate {
            score: 0.0,
            pair: RatePair::default(),
            design: Design {
                nu: 1.0,
                pxu: {
                    let mut v = vec![0.0; self.nx()];
                    v[self.model().x0()] = 1.0;
                    v
                },
                ..d
            },
        }
    }
}

fn uniform_off(nx: usize, x0: usize) -> Vec<f64> {
    let mut v = vec![1.0 / (nx - 1) as f64; nx];
    v[x0] = 0.0;
    v
}

/// Approximately maximises `L1 + λ·L2` over all superposition designs.
pub fn maximize_weighted(
    model: &BcWardenModel,
    weight: Weight,
    config: &OptimizerConfig,
) -> Result<(RatePair, SuperpositionParams)> {
    let problem = Problem::new(model, config)?;
    let best = problem.weighted(weight)?;
    Ok((best.pair, best.design.to_params()))
}

/// Largest `L2` found subject to `L1 ≥ target`.
pub fn max_l2_given_l1(
    model: &BcWardenModel,
    target: f64,
    config: &OptimizerConfig,
) -> Result<(RatePair, SuperpositionParams)> {
    let problem = Problem::new(model, config)?;
    if target > problem.cap1.value + TARGET_SLACK {
        return Err(CovertError::InvalidParameter(format!(
            "target {target} exceeds the user-1 covert capacity {}",
            problem.cap1.value
        )));
    }
    let best = problem.constrained(target, &[]);
    Ok((best.pair, best.design.to_params()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrontMeta {
    pub config: OptimizerConfig,
    pub requested_points: usize,
    pub l1_star: f64,
    pub l2_star: f64,
}

/// Non-dominated boundary samples ordered by decreasing `L1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParetoFront {
    pub points: Vec<RatePair>,
    pub params: Vec<SuperpositionParams>,
    pub meta: FrontMeta,
}

/// Traces the region boundary with `points` samples: the two single-user
/// endpoints, ε-constraint solves on a uniform `L1` grid in between, and
/// log-spaced weighted-sum solves, pruned to the non-dominated set.
pub fn pareto_boundary(
    model: &BcWardenModel,
    points: usize,
    config: &OptimizerConfig,
) -> Result<ParetoFront> {
    if points < 2 {
        return Err(CovertError::InvalidParameter(
            "a boundary needs at least its two endpoints".into(),
        ));
    }
    let problem = Problem::new(model, config)?;
    let (l1s, l2s) = (problem.cap1.value, problem.cap2.value);
    let mut cands: Vec<Candidate> = [problem.endpoint1(), problem.endpoint2()]
        .into_iter()
        .filter_map(|d| problem.candidate(Goal::L2Only, d))
        .collect();

    let interior = points - 2;
    if interior > 0 && l1s > 0.0 && l2s > 0.0 {
        let mut warm: Vec<Design> = Vec::new();
        for i in 1..=interior {
            let target = l1s * (1.0 - i as f64 / (points - 1) as f64);
            let c = problem.constrained(target, &warm);
            warm = vec![c.design.clone()];
            cands.push(c);
        }
        let weights = config.weight_grid.min(interior);
        let base = l1s / l2s;
        for j in 0..weights {
            let exponent = if weights == 1 {
                0.0
            } else {
                -1.0 + 2.0 * j as f64 / (weights - 1) as f64
            };
            cands.push(problem.weighted(Weight::Finite(base * 10f64.powf(exponent)))?);
        }
    }

    let (points_out, params) = prune_dominated(cands);
    Ok(ParetoFront {
        points: points_out,
        params,
        meta: FrontMeta {
            config: *config,
            requested_points: points,
            l1_star: l1s,
            l2_star: l2s,
        },
    })
}

fn prune_dominated(mut cands: Vec<Candidate>) -> (Vec<RatePair>, Vec<SuperpositionParams>) {
    cands.sort_by(|a, b| {
        b.pair
            .l1
            .total_cmp(&a.pair.l1)
            .then(b.pair.l2.total_cmp(&a.pair.l2))
            .then_with(|| a.design.lexicographic(&b.design))
    });
    let mut points = Vec::new();
    let mut params = Vec::new();
    let mut best_l2 = f64::NEG_INFINITY;
    for c in cands {
        if c.pair.l2 > best_l2 + DOMINANCE_TOL {
            best_l2 = c.pair.l2;
            points.push(c.pair);
            params.push(c.design.to_params());
        }
    }
    (points, params)
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaStar {
    /// `max L1/L1* + L2/L2*` over the region.
    pub value: f64,
    pub point: RatePair,
    pub params: SuperpositionParams,
    pub l1_star: f64,
    pub l2_star: f64,
}

pub fn gamma_star(model: &BcWardenModel, config: &OptimizerConfig) -> Result<GammaStar> {
    let problem = Problem::new(model, config)?;
    gamma_of(&problem)
}

fn gamma_of(problem: &Problem<'_>) -> Result<GammaStar> {
    let (l1s, l2s) = (problem.cap1.value, problem.cap2.value);
    if problem.cap1.is_zero() {
        return Err(CovertError::ZeroCapacity { user: 1 });
    }
    if problem.cap2.is_zero() {
        return Err(CovertError::ZeroCapacity { user: 2 });
    }
    let best = problem.weighted(Weight::Finite(l1s / l2s))?;
    Ok(GammaStar {
        value: best.score / l1s,
        point: best.pair,
        params: best.design.to_params(),
        l1_star: l1s,
        l2_star: l2s,
    })
}

/// A one-parameter family of models.
pub trait ModelFamily {
    fn model(&self, param: f64) -> Result<BcWardenModel>;
}

impl<F> ModelFamily for F
where
    F: Fn(f64) -> Result<BcWardenModel>,
{
    fn model(&self, param: f64) -> Result<BcWardenModel> {
        self(param)
    }
}

/// Two-by-two post-channels with one free entry `c`, applied to user 1's
/// output to obtain user 2's channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PostChannel {
    /// `[first_row; [c, 1−c]]`.
    SecondRow { first_row: [f64; 2] },
    /// `[[1−c, c]; second_row]`.
    FirstRow { second_row: [f64; 2] },
    /// Binary symmetric with crossover `c`.
    Bsc,
    /// User 2 sees exactly what user 1 sees; `c` is ignored.
    Identity,
}

impl PostChannel {
    pub fn matrix(&self, c: f64, size: usize) -> Result<Channel> {
        let binary = |rows: Vec<Vec<f64>>| {
            if size != 2 {
                return Err(CovertError::DimensionMismatch {
                    what: "binary post-channel vs user-1 outputs",
                    expected: 2,
                    found: size,
                });
            }
            Channel::from_rows(rows)
        };
        match self {
            PostChannel::SecondRow { first_row } => {
                binary(vec![first_row.to_vec(), vec![c, 1.0 - c]])
            }
            PostChannel::FirstRow { second_row } => {
                binary(vec![vec![1.0 - c, c], second_row.to_vec()])
            }
            PostChannel::Bsc => binary(vec![vec![1.0 - c, c], vec![c, 1.0 - c]]),
            PostChannel::Identity => Channel::identity(size),
        }
    }
}

/// On-disk description of a parametric family: `P2 = P1 · W(c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyFile {
    pub x0: usize,
    #[serde(rename = "P1")]
    pub p1: Vec<Vec<f64>>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    pub post_channel: PostChannel,
    /// Display name of the free parameter.
    #[serde(default = "default_param_name")]
    pub param: String,
    pub values: Vec<f64>,
}

fn default_param_name() -> String {
    "c".to_string()
}

impl ModelFamily for FamilyFile {
    fn model(&self, param: f64) -> Result<BcWardenModel> {
        let p1 = Channel::from_rows(self.p1.clone()).map_err(|e| e.in_channel("P1"))?;
        let q = Channel::from_rows(self.q.clone()).map_err(|e| e.in_channel("Q"))?;
        let w = self
            .post_channel
            .matrix(param, p1.outputs())
            .map_err(|e| e.in_channel("W"))?;
        let p2 = p1.compose(&w)?;
        BcWardenModel::new(p1, p2, q, self.x0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub param: f64,
    /// Whether the sufficient condition for time-sharing optimality holds.
    pub condition_bit: Option<bool>,
    pub gamma_star: Option<f64>,
    pub sup_ratio: Option<f64>,
    pub l1_star: Option<f64>,
    pub l2_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Evaluates the time-sharing condition and γ* for every parameter value.
/// Failures are recorded in the row's `note` and the sweep moves on.
pub fn sweep(family: &dyn ModelFamily, values: &[f64], config: &OptimizerConfig) -> Vec<SweepRow> {
    values
        .iter()
        .map(|&param| {
            let mut row = SweepRow {
                param,
                condition_bit: None,
                gamma_star: None,
                sup_ratio: None,
                l1_star: None,
                l2_star: None,
                note: None,
            };
            if let Err(e) = sweep_row(family, param, config, &mut row) {
                row.note = Some(e.to_string());
            }
            row
        })
        .collect()
}

fn sweep_row(
    family: &dyn ModelFamily,
    param: f64,
    config: &OptimizerConfig,
    row: &mut SweepRow,
) -> Result<()> {
    let model = family.model(param)?;
    let problem = Problem::new(&model, config)?;
    let (l1s, l2s) = (problem.cap1.value, problem.cap2.value);
    row.l1_star = Some(l1s);
    row.l2_star = Some(l2s);

    let cond: TsCondition = if l1s >= l2s {
        ts_optimality_condition(&model, l1s, l2s, config.ts_resolution)?
    } else {
        ts_optimality_condition(&model.swapped_users(), l2s, l1s, config.ts_resolution)?
    };
    row.condition_bit = Some(cond.holds);
    row.sup_ratio = Some(cond.sup_ratio);

    match gamma_of(&problem) {
        Ok(g) => row.gamma_star = Some(g.value),
        Err(CovertError::ZeroCapacity { user }) => {
            // The region collapses onto one axis, which time-sharing covers.
            row.gamma_star = Some(1.0);
            row.note = Some(format!(
                "user {user} has zero covert capacity; the region is the time-sharing segment"
            ));
        }
        Err(e) => return Err(e),
    }
    Ok(())
}
