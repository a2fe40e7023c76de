//! The δ-GLMB filter: LMB-birth prediction, the generic-likelihood update
//! with marginal-product approximation, the separable fast path and track
//! extraction.
//!
//! All random draws come from streams keyed by `(seed, time, purpose,
//! component, label)`, so a run is reproducible regardless of how the caller
//! schedules trials.

mod resample;

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

pub use resample::{effective_sample_size, gaussian_cloud, systematic_resample};

use crate::approx::{separable_update_detailed, SeparableLikelihood};
use crate::error::{Error, Result};
use crate::glmb::{
    most_probable_subsets, CardinalityDistribution, DGlmbComponent, DGlmbDensity, DiscreteGridDensity,
    ParticleCloud, SingleObjectDensity,
};
use crate::label::{Kinematic, Label, LabelSet, LabeledState};
use crate::math;
use crate::rng::{derive_seed, purpose, stream, StreamRng};

/// Single-object Markov transition `f(x | x', ℓ)`.
pub trait Transition {
    fn sample(&self, x: &Kinematic, label: Label, rng: &mut StreamRng) -> Kinematic;
    fn log_density(&self, to: &Kinematic, from: &Kinematic, label: Label) -> f64;
}

/// `f(x | x') = δ(x − x')`.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityTransition;

impl Transition for IdentityTransition {
    fn sample(&self, x: &Kinematic, _: Label, _: &mut StreamRng) -> Kinematic {
        *x
    }

    fn log_density(&self, to: &Kinematic, from: &Kinematic, _: Label) -> f64 {
        if to == from {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }
}

pub type SurvivalFn = Box<dyn Fn(&Kinematic, Label) -> f64 + Send + Sync>;

/// Survival probability and single-object transition.
pub struct SurvivalModel<T> {
    pub p_s: SurvivalFn,
    pub transition: T,
}

impl<T> SurvivalModel<T> {
    pub fn new(p_s: impl Fn(&Kinematic, Label) -> f64 + Send + Sync + 'static, transition: T) -> Self {
        Self {
            p_s: Box::new(p_s),
            transition,
        }
    }

    pub fn constant(p_s: f64, transition: T) -> Self {
        Self::new(move |_, _| p_s, transition)
    }
}

/// LMB birth: labels born at the next scan with existence `r_B` and density
/// `p_B`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BirthModel {
    births: BTreeMap<Label, (f64, Arc<SingleObjectDensity>)>,
}

impl BirthModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, label: Label, r_b: f64, density: SingleObjectDensity) -> Result<()> {
        if !(0.0..=1.0).contains(&r_b) {
            return Err(Error::InvalidInput("birth probability outside [0, 1]"));
        }
        self.births.insert(label, (r_b, Arc::new(density)));
        Ok(())
    }

    pub fn births(&self) -> &BTreeMap<Label, (f64, Arc<SingleObjectDensity>)> {
        &self.births
    }

    pub fn is_empty(&self) -> bool {
        self.births.is_empty()
    }
}

/// Component cap and weight floor applied after every step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    pub max_components: usize,
    pub min_weight: f64,
}

impl Truncation {
    /// No truncation at all: every hypothesis is enumerated and kept.
    pub const fn none() -> Self {
        Self {
            max_components: usize::MAX,
            min_weight: 0.0,
        }
    }
}

impl Default for Truncation {
    fn default() -> Self {
        Self {
            max_components: 100,
            min_weight: 1e-5,
        }
    }
}

/// Bookkeeping from the last step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepDiagnostics {
    /// Log of the summed weight of every enumerated hypothesis before
    /// normalization: the predicted mass for a prediction (0 when nothing is
    /// capped), the log measurement normalizer for an update.
    pub log_mass: f64,
    pub components_before_truncation: usize,
    /// `ln η(I)` per updated component (updates only).
    pub component_log_eta: Vec<(LabelSet, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub density: DGlmbDensity,
    pub time: u32,
    pub label_space_used: LabelSet,
    pub seed: u64,
    pub diagnostics: StepDiagnostics,
}

impl FilterState {
    /// No objects at time 0.
    pub fn new(seed: u64) -> Self {
        Self {
            density: DGlmbDensity::empty(),
            time: 0,
            label_space_used: LabelSet::empty(),
            seed,
            diagnostics: StepDiagnostics::default(),
        }
    }

    pub fn from_density(density: DGlmbDensity, time: u32, seed: u64) -> Self {
        Self {
            label_space_used: density.labels(),
            density,
            time,
            seed,
            diagnostics: StepDiagnostics::default(),
        }
    }

    pub fn cardinality(&self) -> CardinalityDistribution {
        self.density.cardinality()
    }
}

fn density_key(d: &Arc<SingleObjectDensity>, label: Label) -> (usize, Label) {
    (Arc::as_ptr(d) as usize, label)
}

fn label_set_key(set: &LabelSet) -> u64 {
    let keys: Vec<u64> = set.iter().map(|l| l.as_u64()).collect();
    derive_seed(set.len() as u64, &keys)
}

fn survival_mass(d: &SingleObjectDensity, label: Label, p_s: &SurvivalFn) -> f64 {
    d.expect(|x| p_s(x, label)).clamp(0.0, 1.0)
}

/// `⟨p_S f(x|·), p⟩ / η_S` as a particle cloud or a grid density.
fn propagate_density<T: Transition>(
    d: &SingleObjectDensity,
    label: Label,
    survival: &SurvivalModel<T>,
    rng: &mut StreamRng,
) -> Result<SingleObjectDensity> {
    let weights: Vec<f64> = d
        .points()
        .iter()
        .zip(d.weights())
        .map(|(x, w)| w * (survival.p_s)(x, label))
        .collect();
    match d {
        SingleObjectDensity::Particles(c) => {
            let states = c
                .states()
                .iter()
                .map(|x| survival.transition.sample(x, label, rng))
                .collect();
            Ok(ParticleCloud::new(states, weights)?.into())
        }
        SingleObjectDensity::Grid(g) => {
            let points = g.points();
            let mut masses = vec![0.0; points.len()];
            for (j, from) in points.iter().enumerate() {
                if weights[j] == 0.0 {
                    continue;
                }
                let log_k: Vec<f64> = points
                    .iter()
                    .map(|to| survival.transition.log_density(to, from, label))
                    .collect();
                let lse = math::log_sum_exp(&log_k);
                if lse.is_finite() {
                    for (m, lk) in masses.iter_mut().zip(&log_k) {
                        *m += weights[j] * math::exp(lk - lse);
                    }
                } else {
                    // no grid point is reachable: the mass stays put
                    masses[j] += weights[j];
                }
            }
            Ok(DiscreteGridDensity::new(points.to_vec(), masses)?.into())
        }
    }
}

struct Candidate<'a> {
    weight: f64,
    survivors: &'a LabelSet,
    births: LabelSet,
    union: LabelSet,
}

/// δ-GLMB prediction with LMB births.
///
/// For every prior component `J` the survivor subsets `L ⊆ J` are enumerated
/// best-first with probability `Π_L η_S Π_{J∖L} (1 − η_S)`; contributions to
/// the same `L` from different `J` are summed and their predicted densities
/// merged into a weighted mixture (resampled back to the cloud size for
/// particles). Each survivor set is paired with every birth subset, and the
/// heaviest `max_components` pairs are kept.
pub fn predict<T: Transition>(
    state: &FilterState,
    survival: &SurvivalModel<T>,
    birth: &BirthModel,
    trunc: &Truncation,
) -> Result<FilterState> {
    let time = state.time + 1;
    if birth.births.keys().any(|l| state.label_space_used.contains(l)) {
        return Err(Error::InvalidInput("birth label already in use"));
    }
    let comps = state.density.components();
    let max_count = trunc.max_components.max(1);

    let mut survivors: BTreeMap<LabelSet, (f64, Vec<(usize, f64)>)> = BTreeMap::new();
    let mut eta_cache: BTreeMap<(usize, Label), f64> = BTreeMap::new();
    for (ci, c) in comps.iter().enumerate() {
        if c.weight == 0.0 {
            continue;
        }
        let etas: Vec<f64> = c
            .densities
            .iter()
            .map(|(l, d)| {
                *eta_cache
                    .entry(density_key(d, *l))
                    .or_insert_with(|| survival_mass(d, *l, &survival.p_s))
            })
            .collect();
        let min_prob = trunc.min_weight * 1e-3 / c.weight;
        for (mask, p) in most_probable_subsets(&etas, max_count, min_prob) {
            let w = c.weight * p;
            let entry = survivors.entry(c.label_set.subset_by_mask(mask)).or_default();
            entry.0 += w;
            entry.1.push((ci, w));
        }
    }

    let birth_labels: LabelSet = birth.births.keys().copied().collect();
    let rs: Vec<f64> = birth.births.values().map(|(r, _)| *r).collect();
    let birth_subsets = most_probable_subsets(&rs, max_count, trunc.min_weight * 1e-3);

    let mut candidates: Vec<Candidate<'_>> = Vec::new();
    for (set, (w_s, _)) in &survivors {
        for (mask, w_b) in &birth_subsets {
            let births = birth_labels.subset_by_mask(*mask);
            candidates.push(Candidate {
                weight: w_s * w_b,
                survivors: set,
                union: set.union(&births),
                births,
            });
        }
    }
    if candidates.is_empty() {
        return Err(Error::Degenerate("prediction produced no hypotheses"));
    }
    let total: f64 = candidates.iter().map(|c| c.weight).sum();
    let n_candidates = candidates.len();
    candidates.sort_by(|a, b| {
        b.weight
            .partial_cmp(&a.weight)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.union.cmp(&b.union))
    });
    let floor = trunc.min_weight * total;
    let mut kept: Vec<Candidate<'_>> = Vec::new();
    for c in candidates {
        if kept.len() == max_count {
            break;
        }
        if kept.is_empty() || c.weight >= floor {
            kept.push(c);
        }
    }

    let mut propagated: BTreeMap<(usize, Label), Arc<SingleObjectDensity>> = BTreeMap::new();
    let mut merged: BTreeMap<&LabelSet, BTreeMap<Label, Arc<SingleObjectDensity>>> = BTreeMap::new();
    let mut components = Vec::with_capacity(kept.len());
    for cand in &kept {
        if !merged.contains_key(cand.survivors) {
            let contributors = &survivors[cand.survivors].1;
            let mut densities = BTreeMap::new();
            for l in cand.survivors.iter() {
                let mut parts: Vec<(f64, Arc<SingleObjectDensity>)> = Vec::with_capacity(contributors.len());
                for &(ci, w) in contributors {
                    let prior = &comps[ci].densities[l];
                    let key = density_key(prior, *l);
                    let p = match propagated.get(&key) {
                        Some(p) => p.clone(),
                        None => {
                            let mut rng = stream(state.seed, &[time as u64, purpose::PROPAGATE, ci as u64, l.as_u64()]);
                            let p = Arc::new(propagate_density(prior, *l, survival, &mut rng)?);
                            propagated.insert(key, p.clone());
                            p
                        }
                    };
                    parts.push((w, p));
                }
                let density = if parts.iter().all(|(_, p)| Arc::ptr_eq(p, &parts[0].1)) {
                    parts[0].1.clone()
                } else {
                    let refs: Vec<(f64, &SingleObjectDensity)> = parts.iter().map(|(w, p)| (*w, p.as_ref())).collect();
                    let mix = SingleObjectDensity::mixture(&refs)?;
                    Arc::new(match mix {
                        SingleObjectDensity::Particles(cloud) => {
                            let n = parts.iter().map(|(_, p)| p.len()).max().unwrap_or(1);
                            let mut rng = stream(
                                state.seed,
                                &[time as u64, purpose::MERGE, label_set_key(cand.survivors), l.as_u64()],
                            );
                            systematic_resample(&cloud, n, &mut rng).into()
                        }
                        grid => grid,
                    })
                };
                densities.insert(*l, density);
            }
            merged.insert(cand.survivors, densities);
        }
        let mut densities = merged[cand.survivors].clone();
        for l in cand.births.iter() {
            densities.insert(*l, birth.births[l].1.clone());
        }
        components.push(DGlmbComponent {
            label_set: cand.union.clone(),
            weight: cand.weight,
            densities,
        });
    }
    let density = DGlmbDensity::new_unnormalized(components)?.normalize()?;
    Ok(FilterState {
        density,
        time,
        label_space_used: state.label_space_used.union(&birth_labels),
        seed: state.seed,
        diagnostics: StepDiagnostics {
            log_mass: math::ln(total),
            components_before_truncation: n_candidates,
            component_log_eta: Vec::new(),
        },
    })
}

/// A multi-object log-likelihood `ln g(z | X)` that can be evaluated one
/// object at a time.
///
/// Contract: whenever the footprints of two sets are disjoint,
/// `joint(X ∪ Y) = joint(X) + joint(Y)`; `single(x).0 = joint(&[x])`.
pub trait SetLikelihood {
    type Footprint: Clone;
    fn single(&self, x: &LabeledState) -> (f64, Self::Footprint);
    fn overlaps(&self, a: &Self::Footprint, b: &Self::Footprint) -> bool;
    /// A footprint covering both arguments.
    fn union(&self, a: &Self::Footprint, b: &Self::Footprint) -> Self::Footprint;
    fn joint(&self, xs: &[LabeledState]) -> f64;
    /// `joint(xs)` given the footprints `single` returned for each state;
    /// implementations may reuse what the footprints cache.
    fn joint_with(&self, xs: &[LabeledState], footprints: &[&Self::Footprint]) -> f64 {
        let _ = footprints;
        self.joint(xs)
    }
}

/// A set log-likelihood given as a closure; every footprint overlaps.
pub struct FnLikelihood<F>(pub F);

impl<F: Fn(&[LabeledState]) -> f64> SetLikelihood for FnLikelihood<F> {
    type Footprint = ();

    fn single(&self, x: &LabeledState) -> (f64, ()) {
        ((self.0)(core::slice::from_ref(x)), ())
    }

    fn overlaps(&self, _: &(), _: &()) -> bool {
        true
    }

    fn union(&self, _: &(), _: &()) {}

    fn joint(&self, xs: &[LabeledState]) -> f64 {
        (self.0)(xs)
    }
}

/// How joint samples are formed in the particle generic update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Coupling {
    /// Labels whose clouds cannot interact (disjoint footprint bounds) are
    /// updated independently; inside each interacting group the `j`-th
    /// particles of every label form the `j`-th joint sample.
    #[default]
    Clustered,
    /// One joint sample per particle index across all labels of a component.
    Common,
}

struct CloudEval<F> {
    singles: Vec<f64>,
    footprints: Vec<F>,
    bound: F,
}

/// Single-object results already computed in this update, keyed by the
/// exact state bits; resampling leaves many particles shared between and
/// within clouds.
type SingleMemo<F> = BTreeMap<([u64; 5], Label), (f64, F)>;

fn evaluate_cloud<L: SetLikelihood>(
    lik: &L,
    cloud: &SingleObjectDensity,
    label: Label,
    memo: &mut SingleMemo<L::Footprint>,
) -> CloudEval<L::Footprint> {
    let mut singles = Vec::with_capacity(cloud.len());
    let mut footprints: Vec<L::Footprint> = Vec::with_capacity(cloud.len());
    for x in cloud.points() {
        let (ll, fp) = memo
            .entry((x.map(f64::to_bits), label))
            .or_insert_with(|| lik.single(&LabeledState::new(*x, label)));
        singles.push(*ll);
        footprints.push(fp.clone());
    }
    let mut bound = footprints[0].clone();
    for fp in &footprints[1..] {
        bound = lik.union(&bound, fp);
    }
    CloudEval {
        singles,
        footprints,
        bound,
    }
}

/// Exact update of one component whose densities are all grids: the joint
/// posterior over every combination of support points, then its marginals.
fn grid_exhaustive<L: SetLikelihood>(
    c: &DGlmbComponent,
    lik: &L,
) -> Result<(f64, BTreeMap<Label, Arc<SingleObjectDensity>>)> {
    const CAP: usize = 1 << 20;
    let labels: Vec<Label> = c.label_set.iter().copied().collect();
    let dens: Vec<&SingleObjectDensity> = labels.iter().map(|l| c.densities[l].as_ref()).collect();
    let sizes: Vec<usize> = dens.iter().map(|d| d.len()).collect();
    let total = sizes.iter().try_fold(1usize, |acc, s| acc.checked_mul(*s)).unwrap_or(usize::MAX);
    if total > CAP {
        return Err(Error::TooLarge {
            what: "grid-exhaustive joint",
            size: total,
            cap: CAP,
        });
    }
    let mut log_w = Vec::with_capacity(total);
    let mut log_prior = Vec::with_capacity(total);
    let mut states = vec![LabeledState::new([0.0; 5], Label::new(0, 0)); labels.len()];
    let mut index = vec![0usize; labels.len()];
    for flat in 0..total {
        let mut rem = flat;
        for k in (0..labels.len()).rev() {
            index[k] = rem % sizes[k];
            rem /= sizes[k];
        }
        let mut lp = 0.0;
        for (k, d) in dens.iter().enumerate() {
            let w = d.weights()[index[k]];
            lp += if w > 0.0 { math::ln(w) } else { f64::NEG_INFINITY };
            states[k] = LabeledState::new(d.points()[index[k]], labels[k]);
        }
        log_prior.push(lp);
        log_w.push(if lp.is_finite() { lp + lik.joint(&states) } else { lp });
    }
    let lse = math::log_sum_exp(&log_w);
    let log_eta = lse - math::log_sum_exp(&log_prior);
    if !log_eta.is_finite() {
        return Ok((f64::NEG_INFINITY, BTreeMap::new()));
    }
    let mut marginals: Vec<Vec<f64>> = sizes.iter().map(|s| vec![0.0; *s]).collect();
    for (flat, lw) in log_w.iter().enumerate() {
        let p = math::exp(lw - lse);
        let mut rem = flat;
        for k in (0..labels.len()).rev() {
            marginals[k][rem % sizes[k]] += p;
            rem /= sizes[k];
        }
    }
    let densities = labels
        .iter()
        .zip(dens)
        .zip(marginals)
        .map(|((l, d), m)| Ok((*l, Arc::new(d.with_weights(m)?))))
        .collect::<Result<_>>()?;
    Ok((log_eta, densities))
}

fn connected_groups<F>(labels: &[Label], bounds: &[&F], overlaps: impl Fn(&F, &F) -> bool) -> Vec<Vec<usize>> {
    let n = labels.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for a in 0..n {
        for b in a + 1..n {
            if overlaps(bounds[a], bounds[b]) {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

type GroupResult = (f64, Vec<Arc<SingleObjectDensity>>);

/// Generic-likelihood update with the default [`Coupling::Clustered`].
pub fn generic_update<L: SetLikelihood>(state: &FilterState, lik: &L, trunc: &Truncation) -> Result<FilterState> {
    generic_update_with(state, lik, trunc, Coupling::Clustered)
}

/// Generic-likelihood update: each component's weight is multiplied by its
/// estimated `η(I) = ∫ g(z | X) p(X) dX`, and its densities are replaced by
/// the marginals of the reweighted joint.
///
/// Components made only of grid densities are updated exactly by
/// enumerating the joint support. Particle components use joint samples
/// (see [`Coupling`]) and every updated cloud is systematic-resampled back to
/// its size.
pub fn generic_update_with<L: SetLikelihood>(
    state: &FilterState,
    lik: &L,
    trunc: &Truncation,
    coupling: Coupling,
) -> Result<FilterState> {
    let comps = state.density.components();
    let time = state.time as u64;

    let mut evals: BTreeMap<(usize, Label), CloudEval<L::Footprint>> = BTreeMap::new();
    let mut memo = SingleMemo::new();
    for c in comps {
        if c.weight == 0.0 {
            continue;
        }
        for (l, d) in &c.densities {
            if !d.is_grid() {
                evals
                    .entry(density_key(d, *l))
                    .or_insert_with(|| evaluate_cloud(lik, d, *l, &mut memo));
            }
        }
    }

    let mut group_cache: BTreeMap<Vec<(usize, Label)>, GroupResult> = BTreeMap::new();
    let mut staged = Vec::new();
    let mut component_log_eta = Vec::new();
    for (ci, c) in comps.iter().enumerate() {
        if c.weight == 0.0 {
            continue;
        }
        let grids = c.densities.values().filter(|d| d.is_grid()).count();
        let (log_eta, densities) = if c.label_set.is_empty() {
            (lik.joint(&[]), BTreeMap::new())
        } else if grids == c.label_set.len() {
            grid_exhaustive(c, lik)?
        } else if grids > 0 {
            return Err(Error::InvalidInput("component mixes grid and particle densities"));
        } else {
            let labels: Vec<Label> = c.label_set.iter().copied().collect();
            let clouds: Vec<&Arc<SingleObjectDensity>> = labels.iter().map(|l| &c.densities[l]).collect();
            let keys: Vec<(usize, Label)> = labels.iter().zip(&clouds).map(|(l, d)| density_key(d, *l)).collect();
            let ev: Vec<&CloudEval<L::Footprint>> = keys.iter().map(|k| &evals[k]).collect();
            let groups = match coupling {
                Coupling::Common => vec![(0..labels.len()).collect()],
                Coupling::Clustered => {
                    let bounds: Vec<&L::Footprint> = ev.iter().map(|e| &e.bound).collect();
                    connected_groups(&labels, &bounds, |a, b| lik.overlaps(a, b))
                }
            };
            let mut log_eta = 0.0;
            let mut densities = BTreeMap::new();
            for group in groups {
                let gkey: Vec<(usize, Label)> = group.iter().map(|&i| keys[i]).collect();
                if !group_cache.contains_key(&gkey) {
                    let members: Vec<(Label, &SingleObjectDensity, &CloudEval<L::Footprint>)> =
                        group.iter().map(|&i| (labels[i], clouds[i].as_ref(), ev[i])).collect();
                    let result = update_group(state.seed, time, ci, &members, lik)?;
                    group_cache.insert(gkey.clone(), result);
                }
                let (le, ds) = &group_cache[&gkey];
                log_eta += le;
                for (&i, d) in group.iter().zip(ds) {
                    densities.insert(labels[i], d.clone());
                }
            }
            (log_eta, densities)
        };
        let log_w = math::ln(c.weight) + log_eta;
        if log_w.is_finite() && densities.len() == c.label_set.len() {
            component_log_eta.push((c.label_set.clone(), log_eta));
            staged.push((log_w, c.label_set.clone(), densities));
        }
    }
    if staged.is_empty() {
        return Err(Error::Degenerate("generic update: every component has zero likelihood"));
    }
    let log_ws: Vec<f64> = staged.iter().map(|s| s.0).collect();
    let lse = math::log_sum_exp(&log_ws);
    let n = staged.len();
    let components = staged
        .into_iter()
        .map(|(lw, label_set, densities)| DGlmbComponent {
            label_set,
            weight: math::exp(lw - lse),
            densities,
        })
        .collect();
    let density = DGlmbDensity::new_unnormalized(components)?
        .normalize()?
        .truncate(trunc.max_components, trunc.min_weight)?;
    Ok(FilterState {
        density,
        time: state.time,
        label_space_used: state.label_space_used.clone(),
        seed: state.seed,
        diagnostics: StepDiagnostics {
            log_mass: lse,
            components_before_truncation: n,
            component_log_eta,
        },
    })
}

/// Updates one group of interacting particle clouds with common-index joint
/// samples; returns `ln η` and the resampled marginals in group order.
fn update_group<L: SetLikelihood>(
    seed: u64,
    time: u64,
    component: usize,
    members: &[(Label, &SingleObjectDensity, &CloudEval<L::Footprint>)],
    lik: &L,
) -> Result<GroupResult> {
    let n = members[0].1.len();
    if members.iter().any(|(_, d, _)| d.len() != n) {
        return Err(Error::CloudSizeMismatch);
    }
    let mut log_prior = vec![0.0; n];
    let mut log_w = vec![0.0; n];
    let mut states = Vec::with_capacity(members.len());
    let mut fps = Vec::with_capacity(members.len());
    for j in 0..n {
        let mut lp = 0.0;
        let mut separable = 0.0;
        for (_, d, e) in members {
            lp += math::ln(d.weights()[j]);
            separable += e.singles[j];
        }
        let interacting = members.len() > 1
            && (0..members.len()).any(|a| {
                (a + 1..members.len()).any(|b| lik.overlaps(&members[a].2.footprints[j], &members[b].2.footprints[j]))
            });
        let ll = if interacting {
            states.clear();
            states.extend(members.iter().map(|(l, d, _)| LabeledState::new(d.points()[j], *l)));
            fps.clear();
            fps.extend(members.iter().map(|(_, _, e)| &e.footprints[j]));
            lik.joint_with(&states, &fps)
        } else {
            separable
        };
        log_prior[j] = lp;
        log_w[j] = lp + ll;
    }
    let lse = math::log_sum_exp(&log_w);
    let log_eta = lse - math::log_sum_exp(&log_prior);
    if !log_eta.is_finite() {
        return Ok((f64::NEG_INFINITY, Vec::new()));
    }
    let mut out = Vec::with_capacity(members.len());
    for (label, d, _) in members {
        let cloud = ParticleCloud::from_log_weights(d.points().to_vec(), &log_w)?;
        let mut rng = stream(seed, &[time, purpose::RESAMPLE, component as u64, label.as_u64()]);
        out.push(Arc::new(systematic_resample(&cloud, n, &mut rng).into()));
    }
    Ok((log_eta, out))
}

/// Separable update (`γ` per object), followed by resampling of every
/// particle cloud and truncation.
pub fn separable_update_path<L: SeparableLikelihood + ?Sized>(
    state: &FilterState,
    gamma: &L,
    trunc: &Truncation,
) -> Result<FilterState> {
    let update = separable_update_detailed(&state.density, gamma)?;
    let mut resampled: BTreeMap<(usize, Label), Arc<SingleObjectDensity>> = BTreeMap::new();
    let mut components = Vec::with_capacity(update.density.len());
    for (ci, c) in update.density.components().iter().enumerate() {
        let mut densities = BTreeMap::new();
        for (l, d) in &c.densities {
            let key = density_key(d, *l);
            let r = match resampled.get(&key) {
                Some(r) => r.clone(),
                None => {
                    let r = match d.as_ref() {
                        SingleObjectDensity::Particles(cloud) => {
                            let mut rng = stream(state.seed, &[state.time as u64, purpose::RESAMPLE, ci as u64, l.as_u64()]);
                            Arc::new(systematic_resample(cloud, cloud.len(), &mut rng).into())
                        }
                        SingleObjectDensity::Grid(_) => d.clone(),
                    };
                    resampled.insert(key, r.clone());
                    r
                }
            };
            densities.insert(*l, r);
        }
        components.push(DGlmbComponent {
            label_set: c.label_set.clone(),
            weight: c.weight,
            densities,
        });
    }
    let n = components.len();
    let density = DGlmbDensity::new(components)?.truncate(trunc.max_components, trunc.min_weight)?;
    Ok(FilterState {
        density,
        time: state.time,
        label_space_used: state.label_space_used.clone(),
        seed: state.seed,
        diagnostics: StepDiagnostics {
            log_mass: update.log_normalizer,
            components_before_truncation: n,
            component_log_eta: update.log_eta,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackEstimate {
    pub label: Label,
    pub time: u32,
    pub kinematic_mean: Kinematic,
}

/// MAP cardinality `n*`, then the heaviest component with `n*` labels (first
/// in canonical order on ties); one estimate per label at its density mean.
pub fn extract_tracks(state: &FilterState) -> Vec<TrackEstimate> {
    let n_star = state.density.cardinality().map_estimate();
    let mut best: Option<&DGlmbComponent> = None;
    for c in state.density.components() {
        if c.label_set.len() == n_star && best.is_none_or(|b| c.weight > b.weight) {
            best = Some(c);
        }
    }
    best.map(|c| {
        c.densities
            .iter()
            .map(|(l, d)| TrackEstimate {
                label: *l,
                time: state.time,
                kinematic_mean: d.mean(),
            })
            .collect()
    })
    .unwrap_or_default()
}
