//! Batch proposal: one exploit point, two expected-improvement points under
//! Thompson-drawn incumbents, one explore point.
//!
//! Exploit and EI slots search a box of half-width [`TRUST_RADIUS`] around the
//! input with the highest posterior utility. With a lengthscale of 2 on the
//! unit cube the posterior mean is close to linear and its global maximizer
//! almost always sits on a face of the cube, far from anything rated. Later
//! slots see the earlier ones as pending observations so the batch spreads out
//! instead of producing four near-copies that can only be rated as ties.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::kernel::matern52;
use super::likelihood::{std_normal_cdf, std_normal_pdf};
use super::model::{Prediction, PreferenceModel};
use crate::mesh::{ReductionParams, PARAM_COUNT};

pub const BATCH_SIZE: usize = 4;

const RANDOM_STARTS: usize = 256;
const REFINED_STARTS: usize = 3;
const INITIAL_STEP: f64 = 0.1;
const MIN_STEP: f64 = 1e-3;
const DUPLICATE_RADIUS: f64 = 1e-3;
pub const TRUST_RADIUS: f64 = 0.1;
const HALTON_BASES: [u64; PARAM_COUNT] = [2, 3, 5, 7, 11, 13, 17, 19, 23];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotRole {
    SpaceFilling,
    Exploit,
    ThompsonEi,
    Explore,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub params: ReductionParams,
    pub role: SlotRole,
}

/// Expected improvement over `incumbent` for a Gaussian with the given moments.
pub fn expected_improvement(mean: f64, variance: f64, incumbent: f64) -> f64 {
    let sd = variance.max(0.0).sqrt();
    let gap = mean - incumbent;
    if sd < 1e-12 {
        return gap.max(0.0);
    }
    let z = gap / sd;
    gap * std_normal_cdf(z) + sd * std_normal_pdf(z)
}

/// Posterior with earlier batch slots treated as if already observed at their
/// predicted mean: the mean is unchanged, the variance shrinks around them.
struct Believer<'a> {
    model: &'a PreferenceModel,
    pending: Vec<(ReductionParams, DVector<f64>)>,
    factor: Option<Cholesky<f64, Dyn>>,
}

impl<'a> Believer<'a> {
    fn new(model: &'a PreferenceModel, pending: &[ReductionParams]) -> Self {
        let pending: Vec<_> = pending.iter().map(|p| (*p, model.explained(p).1)).collect();
        let n = pending.len();
        let noise = model.kernel().noise.powi(2);
        let sigma = DMatrix::from_fn(n, n, |i, j| {
            let (a, va) = &pending[i];
            let (b, vb) = &pending[j];
            matern52(a, b, model.kernel()) - va.dot(vb) + if i == j { noise } else { 0.0 }
        });
        let factor = if n == 0 { None } else { sigma.cholesky() };
        Self { model, pending, factor }
    }

    fn predict(&self, p: &ReductionParams) -> Prediction {
        let (ks, v) = self.model.explained(p);
        let mean = ks.iter().zip(self.model.weights()).map(|(k, a)| k * a).sum();
        let mut variance = self.model.kernel().signal_variance - v.norm_squared();
        if let Some(factor) = &self.factor {
            let c = DVector::from_iterator(
                self.pending.len(),
                self.pending
                    .iter()
                    .map(|(q, vq)| matern52(p, q, self.model.kernel()) - v.dot(vq)),
            );
            variance -= c.dot(&factor.solve(&c));
        }
        Prediction {
            mean,
            variance: variance.max(0.0),
        }
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut x = 0.0;
    while i > 0 {
        x += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    x
}

/// First `n` Halton points with a random Cranley–Patterson shift.
pub fn space_filling(n: usize, rng: &mut impl Rng) -> Vec<ReductionParams> {
    let shift: [f64; PARAM_COUNT] = std::array::from_fn(|_| rng.random::<f64>());
    (1..=n as u64)
        .map(|i| {
            ReductionParams::clamped(std::array::from_fn(|d| {
                (radical_inverse(i, HALTON_BASES[d]) + shift[d]).fract()
            }))
        })
        .collect()
}

fn uniform(rng: &mut impl Rng) -> ReductionParams {
    ReductionParams::clamped(std::array::from_fn(|_| rng.random::<f64>()))
}

/// Axis-aligned search box, clipped to the unit cube.
#[derive(Debug, Clone, Copy)]
struct Region {
    lo: [f64; PARAM_COUNT],
    hi: [f64; PARAM_COUNT],
}

impl Region {
    const UNIT: Region = Region {
        lo: [0.0; PARAM_COUNT],
        hi: [1.0; PARAM_COUNT],
    };

    fn around(center: &ReductionParams, radius: f64) -> Self {
        let c = center.values();
        Self {
            lo: std::array::from_fn(|d| (c[d] - radius).max(0.0)),
            hi: std::array::from_fn(|d| (c[d] + radius).min(1.0)),
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> ReductionParams {
        ReductionParams::clamped(std::array::from_fn(|d| {
            self.lo[d] + (self.hi[d] - self.lo[d]) * rng.random::<f64>()
        }))
    }

    fn contains(&self, p: &ReductionParams) -> bool {
        p.values()
            .iter()
            .enumerate()
            .all(|(d, &v)| v >= self.lo[d] && v <= self.hi[d])
    }
}

/// Coordinate pattern search from `start`, halving the step on failure.
fn refine(
    start: ReductionParams,
    value: f64,
    region: &Region,
    f: &impl Fn(&ReductionParams) -> f64,
) -> (ReductionParams, f64) {
    let (mut best, mut best_v) = (start, value);
    let mut step = INITIAL_STEP;
    while step >= MIN_STEP {
        let mut improved = false;
        for d in 0..PARAM_COUNT {
            for sign in [1.0, -1.0] {
                let mut v = *best.values();
                v[d] = (v[d] + sign * step).clamp(region.lo[d], region.hi[d]);
                let cand = ReductionParams::clamped(v);
                let cv = f(&cand);
                if cv > best_v {
                    best = cand;
                    best_v = cv;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (best, best_v)
}

fn maximize(
    f: impl Fn(&ReductionParams) -> f64,
    seeds: &[ReductionParams],
    region: &Region,
    rng: &mut impl Rng,
) -> ReductionParams {
    let mut starts: Vec<(ReductionParams, f64)> = seeds
        .iter()
        .filter(|p| region.contains(p))
        .copied()
        .chain((0..RANDOM_STARTS).map(|_| region.sample(rng)))
        .map(|p| {
            let v = f(&p);
            (p, if v.is_finite() { v } else { f64::NEG_INFINITY })
        })
        .collect();
    starts.sort_by(|a, b| b.1.total_cmp(&a.1));
    starts
        .into_iter()
        .take(REFINED_STARTS)
        .map(|(p, v)| refine(p, v, region, &f))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(p, _)| p)
        .expect("at least one start")
}

fn push_distinct(
    batch: &mut Vec<Proposal>,
    history: &[ReductionParams],
    mut params: ReductionParams,
    role: SlotRole,
    rng: &mut impl Rng,
) {
    let taken = |p: &ReductionParams, batch: &[Proposal]| {
        batch
            .iter()
            .map(|q| &q.params)
            .chain(history)
            .any(|q| q.inf_distance(p) <= DUPLICATE_RADIUS)
    };
    while taken(&params, batch) {
        params = uniform(rng);
    }
    batch.push(Proposal { params, role });
}

/// Proposes the next four parameter sets. Deterministic in `(model, seed)`.
pub fn propose_batch(model: &PreferenceModel, seed: u64) -> Vec<Proposal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut batch = Vec::with_capacity(BATCH_SIZE);
    if model.is_empty() {
        for p in space_filling(BATCH_SIZE, &mut rng) {
            push_distinct(&mut batch, &[], p, SlotRole::SpaceFilling, &mut rng);
        }
        return batch;
    }

    let seeds = model.inputs();
    let incumbent_input = seeds[model
        .mode()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("fitted model has inputs")];
    let trust = Region::around(&incumbent_input, TRUST_RADIUS);
    let exploit = maximize(|p| model.predict(p).mean, seeds, &trust, &mut rng);
    push_distinct(&mut batch, seeds, exploit, SlotRole::Exploit, &mut rng);

    let at_best = model.predict(&exploit);
    let incumbent = Normal::new(at_best.mean, at_best.variance.sqrt()).expect("finite moments");
    for _ in 0..2 {
        let tau = incumbent.sample(&mut rng);
        let pending: Vec<ReductionParams> = batch.iter().map(|q| q.params).collect();
        let believer = Believer::new(model, &pending);
        let p = maximize(
            |p| {
                let pr = believer.predict(p);
                expected_improvement(pr.mean, pr.variance, tau)
            },
            seeds,
            &trust,
            &mut rng,
        );
        push_distinct(&mut batch, seeds, p, SlotRole::ThompsonEi, &mut rng);
    }

    let pending: Vec<ReductionParams> = batch.iter().map(|q| q.params).collect();
    let believer = Believer::new(model, &pending);
    let explore = maximize(|p| believer.predict(p).variance, &[], &Region::UNIT, &mut rng);
    push_distinct(&mut batch, seeds, explore, SlotRole::Explore, &mut rng);
    batch
}
