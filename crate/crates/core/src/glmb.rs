//! δ-GLMB and LMB densities.
//!
//! A [`DGlmbDensity`] is the parameter set `{(w(I), p(I))}`: one weight per
//! label set `I` and one single-object density per label of `I`. Densities are
//! shared through `Arc` so that hypotheses built from the same parent reuse the
//! same particle clouds.

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::label::{Kinematic, Label, LabelSet, STATE_DIM};
use crate::math;

/// Normalization tolerance for weights and single-object densities.
pub const NORM_TOL: f64 = 1e-9;

fn normalized(weights: Vec<f64>) -> Result<Vec<f64>> {
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidInput("weights must be finite and non-negative"));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("all weights are zero"));
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Weighted kinematic samples representing one `p(·, ℓ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleCloud {
    states: Vec<Kinematic>,
    weights: Vec<f64>,
}

impl ParticleCloud {
    /// Builds a cloud, normalizing the weights.
    pub fn new(states: Vec<Kinematic>, weights: Vec<f64>) -> Result<Self> {
        if states.is_empty() || states.len() != weights.len() {
            return Err(Error::InvalidInput("particle cloud needs one weight per state"));
        }
        Ok(Self {
            states,
            weights: normalized(weights)?,
        })
    }

    pub fn uniform(states: Vec<Kinematic>) -> Self {
        assert!(!states.is_empty(), "empty particle cloud");
        let w = 1.0 / states.len() as f64;
        let weights = alloc::vec![w; states.len()];
        Self { states, weights }
    }

    /// Builds a cloud from unnormalized log-weights.
    pub fn from_log_weights(states: Vec<Kinematic>, log_weights: &[f64]) -> Result<Self> {
        let lse = math::log_sum_exp(log_weights);
        if !lse.is_finite() {
            return Err(Error::Degenerate("particle log-weights are all -inf"));
        }
        let weights = log_weights.iter().map(|lw| math::exp(lw - lse)).collect();
        Self::new(states, weights)
    }

    pub fn states(&self) -> &[Kinematic] {
        &self.states
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn is_uniform(&self) -> bool {
        let w = 1.0 / self.len() as f64;
        self.weights.iter().all(|x| *x == w)
    }
}

/// Probability masses on an explicit finite set of kinematic points.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteGridDensity {
    points: Vec<Kinematic>,
    masses: Vec<f64>,
}

impl DiscreteGridDensity {
    /// Builds a grid density, normalizing the masses.
    pub fn new(points: Vec<Kinematic>, masses: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != masses.len() {
            return Err(Error::InvalidInput("grid density needs one mass per point"));
        }
        Ok(Self {
            points,
            masses: normalized(masses)?,
        })
    }

    pub fn points(&self) -> &[Kinematic] {
        &self.points
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Total mass placed on `point` (duplicated points are summed).
    pub fn mass_at(&self, point: &Kinematic) -> f64 {
        self.points
            .iter()
            .zip(&self.masses)
            .filter(|(p, _)| *p == point)
            .map(|(_, m)| *m)
            .sum()
    }
}

/// A normalized single-object density `p(·, ℓ)`.
#[derive(Debug, Clone, PartialEq)]
pub enum SingleObjectDensity {
    Particles(ParticleCloud),
    Grid(DiscreteGridDensity),
}

impl SingleObjectDensity {
    pub fn points(&self) -> &[Kinematic] {
        match self {
            Self::Particles(c) => c.states(),
            Self::Grid(g) => g.points(),
        }
    }

    pub fn weights(&self) -> &[f64] {
        match self {
            Self::Particles(c) => c.weights(),
            Self::Grid(g) => g.masses(),
        }
    }

    pub fn len(&self) -> usize {
        self.points().len()
    }

    pub fn is_empty(&self) -> bool {
        self.points().is_empty()
    }

    pub fn is_grid(&self) -> bool {
        matches!(self, Self::Grid(_))
    }

    pub fn mean(&self) -> Kinematic {
        let mut m = [0.0; STATE_DIM];
        for (x, w) in self.points().iter().zip(self.weights()) {
            for (mi, xi) in m.iter_mut().zip(x) {
                *mi += w * xi;
            }
        }
        m
    }

    /// Expectation of `f` under the density.
    pub fn expect(&self, mut f: impl FnMut(&Kinematic) -> f64) -> f64 {
        self.points()
            .iter()
            .zip(self.weights())
            .map(|(x, w)| w * f(x))
            .sum()
    }

    /// Same support, new (unnormalized) weights.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        Ok(match self {
            Self::Particles(c) => Self::Particles(ParticleCloud::new(c.states.clone(), weights)?),
            Self::Grid(g) => Self::Grid(DiscreteGridDensity::new(g.points.clone(), weights)?),
        })
    }

    /// Weighted mixture `Σ a_i p_i / Σ a_i`.
    ///
    /// Grid densities on an identical point list are averaged point-wise; any
    /// other combination concatenates the weighted supports. Particle clouds
    /// are not resampled here.
    pub fn mixture(parts: &[(f64, &SingleObjectDensity)]) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidInput("mixture of zero densities"));
        }
        let total: f64 = parts.iter().map(|(a, _)| *a).sum();
        let coeff = |a: f64| {
            if total > 0.0 {
                a / total
            } else {
                1.0 / parts.len() as f64
            }
        };
        if parts.len() == 1 {
            return Ok(parts[0].1.clone());
        }
        let all_grid = parts.iter().all(|(_, d)| d.is_grid());
        if all_grid {
            let first = parts[0].1.points();
            if parts.iter().all(|(_, d)| d.points() == first) {
                let mut masses = alloc::vec![0.0; first.len()];
                for (a, d) in parts {
                    let c = coeff(*a);
                    for (m, w) in masses.iter_mut().zip(d.weights()) {
                        *m += c * w;
                    }
                }
                return Ok(Self::Grid(DiscreteGridDensity::new(first.to_vec(), masses)?));
            }
        }
        let mut states = Vec::new();
        let mut weights = Vec::new();
        for (a, d) in parts {
            let c = coeff(*a);
            states.extend_from_slice(d.points());
            weights.extend(d.weights().iter().map(|w| c * w));
        }
        Ok(if all_grid {
            Self::Grid(DiscreteGridDensity::new(states, weights)?)
        } else {
            Self::Particles(ParticleCloud::new(states, weights)?)
        })
    }
}

impl From<ParticleCloud> for SingleObjectDensity {
    fn from(c: ParticleCloud) -> Self {
        Self::Particles(c)
    }
}

impl From<DiscreteGridDensity> for SingleObjectDensity {
    fn from(g: DiscreteGridDensity) -> Self {
        Self::Grid(g)
    }
}

/// One δ-GLMB term `(I, w(I), p(I))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DGlmbComponent {
    pub label_set: LabelSet,
    pub weight: f64,
    pub densities: BTreeMap<Label, Arc<SingleObjectDensity>>,
}

impl DGlmbComponent {
    pub fn new(
        label_set: LabelSet,
        weight: f64,
        densities: BTreeMap<Label, Arc<SingleObjectDensity>>,
    ) -> Result<Self> {
        let c = Self {
            label_set,
            weight,
            densities,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn empty(weight: f64) -> Self {
        Self {
            label_set: LabelSet::empty(),
            weight,
            densities: BTreeMap::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.weight >= 0.0) || !self.weight.is_finite() {
            return Err(Error::InvalidInput("component weight must be finite and >= 0"));
        }
        if self.densities.len() != self.label_set.len()
            || !self.label_set.iter().all(|l| self.densities.contains_key(l))
        {
            return Err(Error::InvalidInput("densities must be keyed by exactly the label set"));
        }
        Ok(())
    }

    pub fn density(&self, label: &Label) -> Option<&SingleObjectDensity> {
        self.densities.get(label).map(|d| d.as_ref())
    }
}

/// A δ-GLMB density: components with unique label sets, stored in canonical
/// label-set order.
#[derive(Debug, Clone, PartialEq)]
pub struct DGlmbDensity {
    components: Vec<DGlmbComponent>,
}

impl DGlmbDensity {
    /// Validates structure and normalization (`Σ w = 1 ± 1e-9`).
    pub fn new(components: Vec<DGlmbComponent>) -> Result<Self> {
        let d = Self::new_unnormalized(components)?;
        let total = d.total_weight();
        if math::abs(total - 1.0) > NORM_TOL {
            return Err(Error::NotNormalized(total));
        }
        Ok(d)
    }

    /// Validates structure only; weights may have any positive scale.
    pub fn new_unnormalized(mut components: Vec<DGlmbComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidInput("a density needs at least one component"));
        }
        for c in &components {
            c.validate()?;
        }
        components.sort_by(|a, b| a.label_set.cmp(&b.label_set));
        if components.windows(2).any(|w| w[0].label_set == w[1].label_set) {
            return Err(Error::InvalidInput("duplicate label set in δ-GLMB"));
        }
        Ok(Self { components })
    }

    /// The density of "no objects": a single empty component with weight 1.
    pub fn empty() -> Self {
        Self {
            components: alloc::vec![DGlmbComponent::empty(1.0)],
        }
    }

    pub fn components(&self) -> &[DGlmbComponent] {
        &self.components
    }

    pub fn into_components(self) -> Vec<DGlmbComponent> {
        self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn get(&self, label_set: &LabelSet) -> Option<&DGlmbComponent> {
        self.components
            .binary_search_by(|c| c.label_set.cmp(label_set))
            .ok()
            .map(|i| &self.components[i])
    }

    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    /// Every label appearing in some component.
    pub fn labels(&self) -> LabelSet {
        self.components
            .iter()
            .flat_map(|c| c.label_set.iter().copied())
            .collect()
    }

    /// `ρ(n) = Σ_{|I| = n} w(I)`, with `n_max` the largest label-set size.
    pub fn cardinality(&self) -> CardinalityDistribution {
        let n_max = self.components.iter().map(|c| c.label_set.len()).max().unwrap_or(0);
        let mut masses = alloc::vec![0.0; n_max + 1];
        for c in &self.components {
            masses[c.label_set.len()] += c.weight;
        }
        CardinalityDistribution { masses }
    }

    /// Labeled PHD `v(·, ℓ) = Σ_{I ∋ ℓ} w(I) p(I)(·, ℓ)`.
    pub fn phd(&self) -> LabeledPhd {
        let mut parts: BTreeMap<Label, Vec<(f64, &SingleObjectDensity)>> = BTreeMap::new();
        for c in &self.components {
            for (l, d) in &c.densities {
                parts.entry(*l).or_default().push((c.weight, d.as_ref()));
            }
        }
        let per_label = parts
            .into_iter()
            .map(|(l, ps)| {
                let mass = ps.iter().map(|(w, _)| *w).sum();
                let density = SingleObjectDensity::mixture(&ps)
                    .expect("component densities are normalized");
                (l, PhdTerm { mass, density })
            })
            .collect();
        LabeledPhd { per_label }
    }

    /// Divides every weight by the total.
    pub fn normalize(&self) -> Result<Self> {
        let total = self.total_weight();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Degenerate("component weights sum to zero"));
        }
        let components = self
            .components
            .iter()
            .map(|c| DGlmbComponent {
                weight: c.weight / total,
                ..c.clone()
            })
            .collect();
        Ok(Self { components })
    }

    /// Keeps the `max_components` heaviest components whose weight is at
    /// least `min_weight` (never fewer than one), then renormalizes. Ties are
    /// broken in canonical label-set order.
    pub fn truncate(&self, max_components: usize, min_weight: f64) -> Result<Self> {
        let max_components = max_components.max(1);
        let mut order: Vec<usize> = (0..self.components.len()).collect();
        // stable sort keeps canonical order among equal weights
        order.sort_by(|&a, &b| {
            self.components[b]
                .weight
                .partial_cmp(&self.components[a].weight)
                .unwrap_or(Ordering::Equal)
        });
        let mut keep: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&i| self.components[i].weight >= min_weight)
            .take(max_components)
            .collect();
        if keep.is_empty() {
            keep.push(order[0]);
        }
        keep.sort_unstable();
        let components = keep.into_iter().map(|i| self.components[i].clone()).collect();
        Self { components }.normalize()
    }
}

/// Probability mass function of the number of objects.
#[derive(Debug, Clone, PartialEq)]
pub struct CardinalityDistribution {
    pub masses: Vec<f64>,
}

impl CardinalityDistribution {
    pub fn mass(&self, n: usize) -> f64 {
        self.masses.get(n).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.masses.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    /// Most probable cardinality; the lowest one on ties.
    pub fn map_estimate(&self) -> usize {
        let mut best = 0;
        for (n, p) in self.masses.iter().enumerate() {
            if *p > self.masses[best] {
                best = n;
            }
        }
        best
    }
}

/// One label's share of the PHD: `mass · density`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhdTerm {
    pub mass: f64,
    pub density: SingleObjectDensity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPhd {
    pub per_label: BTreeMap<Label, PhdTerm>,
}

impl LabeledPhd {
    pub fn mass(&self, label: &Label) -> f64 {
        self.per_label.get(label).map_or(0.0, |t| t.mass)
    }

    pub fn total_mass(&self) -> f64 {
        self.per_label.values().map(|t| t.mass).sum()
    }
}

/// Default cap on the number of tracks expanded by [`LmbDensity::to_dglmb`].
pub const DEFAULT_LMB_TRACK_CAP: usize = 20;

/// Labeled multi-Bernoulli density: independent tracks with existence
/// probabilities.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LmbDensity {
    pub tracks: BTreeMap<Label, (f64, Arc<SingleObjectDensity>)>,
}

impl LmbDensity {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, label: Label, existence: f64, density: SingleObjectDensity) -> Result<()> {
        if !(0.0..=1.0).contains(&existence) {
            return Err(Error::InvalidInput("existence probability outside [0, 1]"));
        }
        self.tracks.insert(label, (existence, Arc::new(density)));
        Ok(())
    }

    /// `w(L) = Π_{ℓ∉L}(1 − r) Π_{ℓ∈L} r`, zero when `L` has an unknown label.
    pub fn weight(&self, labels: &LabelSet) -> f64 {
        if !labels.iter().all(|l| self.tracks.contains_key(l)) {
            return 0.0;
        }
        let existence: Vec<(f64, bool)> = self
            .tracks
            .iter()
            .map(|(l, (r, _))| (*r, labels.contains(l)))
            .collect();
        bernoulli_product(&existence)
    }

    /// Expands into δ-GLMB form with one component per subset of tracks.
    pub fn to_dglmb(&self) -> Result<DGlmbDensity> {
        self.to_dglmb_with_cap(DEFAULT_LMB_TRACK_CAP)
    }

    pub fn to_dglmb_with_cap(&self, cap: usize) -> Result<DGlmbDensity> {
        if self.tracks.len() > cap {
            return Err(Error::TooLarge {
                what: "LMB track count",
                size: self.tracks.len(),
                cap,
            });
        }
        let all: LabelSet = self.tracks.keys().copied().collect();
        let components = all
            .subsets()
            .map(|set| {
                let weight = self.weight(&set);
                let densities = set
                    .iter()
                    .map(|l| (*l, self.tracks[l].1.clone()))
                    .collect();
                DGlmbComponent {
                    label_set: set,
                    weight,
                    densities,
                }
            })
            .collect();
        DGlmbDensity::new_unnormalized(components)?.normalize()
    }
}

/// `Π r_i^{s_i} (1 − r_i)^{1 − s_i}` summed in the log domain.
pub(crate) fn bernoulli_product(items: &[(f64, bool)]) -> f64 {
    let mut log_w = 0.0;
    for &(r, selected) in items {
        let p = if selected { r } else { 1.0 - r };
        if p <= 0.0 {
            return 0.0;
        }
        log_w += math::ln(p);
    }
    math::exp(log_w)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    cost: f64,
    last: usize,
    mask: u64,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on cost, then on mask for determinism
        other
            .cost
            .partial_cmp(&self.cost)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.mask.cmp(&self.mask))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The most probable outcomes of independent Bernoulli trials, in order of
/// decreasing probability: returns `(mask, probability)` pairs where bit `i`
/// of `mask` means trial `i` succeeded.
///
/// Starts from the mode and flips trials in order of increasing log-odds
/// cost, walking the subsets of flip costs best-first. Stops after
/// `max_count` outcomes or once probabilities drop below `min_prob`.
pub fn most_probable_subsets(probs: &[f64], max_count: usize, min_prob: f64) -> Vec<(u64, f64)> {
    assert!(probs.len() < 64, "too many Bernoulli trials");
    let mut mode = 0u64;
    let mut log_mode = 0.0;
    let mut flips: Vec<(f64, usize)> = Vec::new();
    for (i, &r) in probs.iter().enumerate() {
        let (hi, lo) = if r >= 0.5 { (r, 1.0 - r) } else { (1.0 - r, r) };
        if r >= 0.5 {
            mode |= 1 << i;
        }
        log_mode += math::ln(hi);
        if lo > 0.0 {
            flips.push((math::ln(hi) - math::ln(lo), i));
        }
    }
    flips.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));
    let mut out = Vec::new();
    if max_count == 0 {
        return out;
    }
    let mode_p = math::exp(log_mode);
    if mode_p < min_prob {
        return out;
    }
    out.push((mode, mode_p));
    let mut heap = BinaryHeap::new();
    if let Some(&(c, i)) = flips.first() {
        heap.push(HeapEntry {
            cost: c,
            last: 0,
            mask: 1 << i,
        });
    }
    while out.len() < max_count {
        let Some(e) = heap.pop() else { break };
        let p = math::exp(log_mode - e.cost);
        if p < min_prob {
            break;
        }
        out.push((mode ^ e.mask, p));
        if e.last + 1 < flips.len() {
            let (cn, i_next) = flips[e.last + 1];
            let (cl, il) = flips[e.last];
            heap.push(HeapEntry {
                cost: e.cost + cn,
                last: e.last + 1,
                mask: e.mask | 1 << i_next,
            });
            heap.push(HeapEntry {
                cost: e.cost - cl + cn,
                last: e.last + 1,
                mask: (e.mask & !(1 << il)) | 1 << i_next,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn l(i: u32) -> Label {
        Label::new(0, i)
    }

    fn point_density(x: f64) -> Arc<SingleObjectDensity> {
        Arc::new(
            DiscreteGridDensity::new(vec![[x, 0.0, 0.0, 0.0, 0.0]], vec![1.0])
                .unwrap()
                .into(),
        )
    }

    fn comp(labels: &[u32], w: f64) -> DGlmbComponent {
        let set: LabelSet = labels.iter().map(|&i| l(i)).collect();
        let densities = set.iter().map(|lab| (*lab, point_density(lab.index as f64))).collect();
        DGlmbComponent::new(set, w, densities).unwrap()
    }

    fn four_component() -> DGlmbDensity {
        DGlmbDensity::new(vec![
            comp(&[], 0.25),
            comp(&[0], 0.25),
            comp(&[1], 0.25),
            comp(&[0, 1], 0.25),
        ])
        .unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        math::abs(a - b) <= tol
    }

    #[test]
    fn cardinality_examples() {
        assert_eq!(DGlmbDensity::empty().cardinality().masses, vec![1.0]);
        assert_eq!(four_component().cardinality().masses, vec![0.25, 0.5, 0.25]);

        let mut lmb = LmbDensity::new();
        lmb.insert(l(0), 0.5, (*point_density(0.0)).clone()).unwrap();
        lmb.insert(l(1), 0.5, (*point_density(1.0)).clone()).unwrap();
        let d = lmb.to_dglmb().unwrap();
        assert_eq!(d.len(), 4);
        for c in d.components() {
            assert!(close(c.weight, 0.25, 1e-15));
        }
        assert_eq!(d.cardinality().masses, vec![0.25, 0.5, 0.25]);
    }

    #[test]
    fn phd_examples() {
        let single = DGlmbDensity::new(vec![comp(&[0], 1.0)]).unwrap();
        let phd = single.phd();
        assert_eq!(phd.mass(&l(0)), 1.0);
        assert_eq!(&phd.per_label[&l(0)].density, single.components()[0].density(&l(0)).unwrap());

        assert!(close(four_component().phd().mass(&l(0)), 0.5, 1e-15));
        assert!(DGlmbDensity::empty().phd().per_label.is_empty());
        assert_eq!(DGlmbDensity::empty().phd().mass(&l(3)), 0.0);
    }

    #[test]
    fn lmb_weight_examples() {
        assert_eq!(LmbDensity::new().weight(&LabelSet::empty()), 1.0);
        let mut lmb = LmbDensity::new();
        lmb.insert(l(0), 0.5, (*point_density(0.0)).clone()).unwrap();
        lmb.insert(l(1), 0.5, (*point_density(1.0)).clone()).unwrap();
        assert!(close(lmb.weight(&LabelSet::singleton(l(0))), 0.25, 1e-15));
        assert_eq!(lmb.weight(&LabelSet::singleton(l(9))), 0.0);

        let mut births = LmbDensity::new();
        for i in 0..3 {
            births.insert(l(i), 0.01, (*point_density(0.0)).clone()).unwrap();
        }
        assert!(close(births.weight(&LabelSet::empty()), 0.970299, 1e-12));
    }

    #[test]
    fn lmb_certain_track() {
        let mut lmb = LmbDensity::new();
        lmb.insert(l(0), 1.0, (*point_density(0.0)).clone()).unwrap();
        lmb.insert(l(1), 0.3, (*point_density(1.0)).clone()).unwrap();
        assert_eq!(lmb.weight(&LabelSet::singleton(l(1))), 0.0);
        assert!(close(lmb.weight(&LabelSet::singleton(l(0))), 0.7, 1e-15));
        let d = lmb.to_dglmb().unwrap();
        assert!(close(d.total_weight(), 1.0, 1e-12));
    }

    #[test]
    fn lmb_to_dglmb_edge_cases() {
        let d = LmbDensity::new().to_dglmb().unwrap();
        assert_eq!(d, DGlmbDensity::empty());

        let mut big = LmbDensity::new();
        for i in 0..4 {
            big.insert(l(i), 0.2, (*point_density(0.0)).clone()).unwrap();
        }
        assert!(matches!(big.to_dglmb_with_cap(3), Err(Error::TooLarge { .. })));

        let mut three = LmbDensity::new();
        for (i, r) in [0.13, 0.77, 0.42].into_iter().enumerate() {
            three.insert(l(i as u32), r, (*point_density(0.0)).clone()).unwrap();
        }
        assert!(close(three.to_dglmb().unwrap().total_weight(), 1.0, 1e-9));
    }

    #[test]
    fn normalize_examples() {
        let d = DGlmbDensity::new_unnormalized(vec![comp(&[], 2.0), comp(&[0], 2.0)]).unwrap();
        let n = d.normalize().unwrap();
        assert_eq!(n.components()[0].weight, 0.5);
        assert_eq!(n.components()[1].weight, 0.5);

        let d = DGlmbDensity::new_unnormalized(vec![comp(&[], 1.0), comp(&[0], 0.0)]).unwrap();
        let n = d.normalize().unwrap();
        assert_eq!(n.components()[0].weight, 1.0);
        assert_eq!(n.components()[1].weight, 0.0);

        let d = DGlmbDensity::new_unnormalized(vec![comp(&[], 0.0), comp(&[0], 0.0)]).unwrap();
        assert!(matches!(d.normalize(), Err(Error::Degenerate(_))));
    }

    #[test]
    fn truncate_examples() {
        let d = DGlmbDensity::new(vec![comp(&[], 0.7), comp(&[0], 0.2), comp(&[1], 0.1)]).unwrap();
        let t = d.truncate(2, 0.0).unwrap();
        assert_eq!(t.len(), 2);
        assert!(close(t.components()[0].weight, 0.7 / 0.9, 1e-15));
        assert!(close(t.components()[1].weight, 0.2 / 0.9, 1e-15));

        let same = d.truncate(10, 0.0).unwrap();
        assert_eq!(same.len(), 3);

        let eq = DGlmbDensity::new(vec![comp(&[1], 0.5), comp(&[0], 0.5)]).unwrap();
        let t = eq.truncate(1, 0.0).unwrap();
        assert_eq!(t.components()[0].label_set, LabelSet::singleton(l(0)));

        // min_weight filters, but at least the top component survives
        let t = d.truncate(5, 0.9).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.components()[0].weight, 1.0);
    }

    #[test]
    fn rejects_malformed_densities() {
        assert!(DGlmbDensity::new(vec![comp(&[0], 0.5), comp(&[0], 0.5)]).is_err());
        assert!(matches!(
            DGlmbDensity::new(vec![comp(&[0], 0.5)]),
            Err(Error::NotNormalized(_))
        ));
        let bad = DGlmbComponent::new(LabelSet::singleton(l(0)), 1.0, BTreeMap::new());
        assert!(bad.is_err());
    }

    #[test]
    fn mixture_of_grids_on_same_support() {
        let pts = vec![[0.0; 5], [1.0, 0.0, 0.0, 0.0, 0.0]];
        let a: SingleObjectDensity = DiscreteGridDensity::new(pts.clone(), vec![1.0, 0.0]).unwrap().into();
        let b: SingleObjectDensity = DiscreteGridDensity::new(pts.clone(), vec![0.0, 1.0]).unwrap().into();
        let m = SingleObjectDensity::mixture(&[(3.0, &a), (1.0, &b)]).unwrap();
        assert_eq!(m.weights(), &[0.75, 0.25]);
        assert_eq!(m.points(), pts.as_slice());
    }

    #[test]
    fn most_probable_subsets_is_exhaustive_and_sorted() {
        let probs = [0.9, 0.2, 0.5, 0.01, 0.65];
        let all = most_probable_subsets(&probs, 1 << 10, 0.0);
        assert_eq!(all.len(), 32);
        let total: f64 = all.iter().map(|(_, p)| p).sum();
        assert!(close(total, 1.0, 1e-12));
        for w in all.windows(2) {
            assert!(w[0].1 >= w[1].1 * (1.0 - 1e-12));
        }
        for (mask, p) in &all {
            let items: Vec<_> = probs.iter().enumerate().map(|(i, r)| (*r, mask >> i & 1 == 1)).collect();
            assert!(close(*p, bernoulli_product(&items), 1e-14));
        }
        let mut masks: Vec<u64> = all.iter().map(|(m, _)| *m).collect();
        masks.sort_unstable();
        masks.dedup();
        assert_eq!(masks.len(), 32);

        let certain = most_probable_subsets(&[1.0, 0.0, 0.3], 10, 0.0);
        assert_eq!(certain.len(), 2);
        assert_eq!(certain[0].0, 0b001);
    }

    /// Poisson-binomial pmf by direct convolution.
    fn poisson_binomial(rs: &[f64]) -> Vec<f64> {
        let mut pmf = vec![1.0];
        for &r in rs {
            let mut next = vec![0.0; pmf.len() + 1];
            for (n, p) in pmf.iter().enumerate() {
                next[n] += p * (1.0 - r);
                next[n + 1] += p * r;
            }
            pmf = next;
        }
        pmf
    }

    fn random_dglmb(weights: &[f64]) -> DGlmbDensity {
        // label sets are the subsets of three labels, in mask order
        let labels: LabelSet = (0..3).map(l).collect();
        let comps = labels
            .subsets()
            .zip(weights)
            .map(|(set, w)| {
                let densities = set.iter().map(|lab| (*lab, point_density(lab.index as f64))).collect();
                DGlmbComponent::new(set, *w, densities).unwrap()
            })
            .collect();
        DGlmbDensity::new_unnormalized(comps).unwrap().normalize().unwrap()
    }

    proptest! {
        #[test]
        fn lmb_cardinality_is_poisson_binomial(rs in proptest::collection::vec(0.0f64..=1.0, 0..7)) {
            let mut lmb = LmbDensity::new();
            for (i, r) in rs.iter().enumerate() {
                lmb.insert(l(i as u32), *r, (*point_density(0.0)).clone()).unwrap();
            }
            let card = lmb.to_dglmb().unwrap().cardinality();
            let want = poisson_binomial(&rs);
            for (n, w) in want.iter().enumerate() {
                prop_assert!(close(card.mass(n), *w, 1e-10), "n={} {} vs {}", n, card.mass(n), w);
            }
        }

        #[test]
        fn cardinality_sums_to_one_and_first_moment(ws in proptest::collection::vec(0.001f64..1.0, 8)) {
            let d = random_dglmb(&ws);
            let card = d.cardinality();
            prop_assert!(close(card.masses.iter().sum::<f64>(), 1.0, 1e-9));
            prop_assert!(close(d.phd().total_mass(), card.mean(), 1e-6));
        }

        #[test]
        fn truncate_is_idempotent(ws in proptest::collection::vec(0.0f64..1.0, 8), max in 1usize..9, min in 0.0f64..0.3) {
            let mut ws = ws;
            ws[0] += 0.01;
            let d = random_dglmb(&ws);
            let once = d.truncate(max, min).unwrap();
            let twice = once.truncate(max, min).unwrap();
            prop_assert_eq!(once.len(), twice.len());
            for (a, b) in once.components().iter().zip(twice.components()) {
                prop_assert_eq!(&a.label_set, &b.label_set);
                prop_assert!(close(a.weight, b.weight, 1e-15));
            }
        }
    }
}
