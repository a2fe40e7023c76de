//! Closed-form GLMB updates and approximations.
//!
//! * [`separable_update`]: the conjugate update of a δ-GLMB under a
//!   likelihood that factors into per-object terms `γ(x, ℓ)`.
//! * [`decompose`] and [`marginal_product_approx`]: split an arbitrary
//!   labeled density into joint existence weights and label-conditioned
//!   joints, then keep the weights and replace each joint by the product of
//!   its marginals. The result has the same cardinality distribution and PHD
//!   as the input.
//! * [`mixture_marginal_approx`]: the same construction applied term by term
//!   to a mixture, giving a general GLMB.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::glmb::{
    CardinalityDistribution, DGlmbComponent, DGlmbDensity, DiscreteGridDensity, LabeledPhd,
    ParticleCloud, PhdTerm, SingleObjectDensity, NORM_TOL,
};
use crate::label::{Kinematic, Label, LabelSet};
use crate::math;
use crate::oracle::{DiscreteInstance, LabeledSet};

/// Per-object likelihood `γ(x, ℓ)`, given in the log domain.
pub trait SeparableLikelihood {
    fn log_gamma(&self, x: &Kinematic, label: Label) -> f64;
}

/// Wraps a closure returning `γ` in the linear domain.
pub struct Gamma<F>(pub F);

impl<F: Fn(&Kinematic, Label) -> f64> SeparableLikelihood for Gamma<F> {
    fn log_gamma(&self, x: &Kinematic, label: Label) -> f64 {
        math::ln((self.0)(x, label))
    }
}

/// Wraps a closure returning `ln γ`.
pub struct LogGamma<F>(pub F);

impl<F: Fn(&Kinematic, Label) -> f64> SeparableLikelihood for LogGamma<F> {
    fn log_gamma(&self, x: &Kinematic, label: Label) -> f64 {
        (self.0)(x, label)
    }
}

/// Reweights one single-object density by `γ`; returns `(ln η, p γ / η)`.
pub fn reweight<L: SeparableLikelihood + ?Sized>(
    density: &SingleObjectDensity,
    label: Label,
    lik: &L,
) -> (f64, Option<SingleObjectDensity>) {
    let log_w: Vec<f64> = density
        .points()
        .iter()
        .zip(density.weights())
        .map(|(x, w)| {
            if *w == 0.0 {
                f64::NEG_INFINITY
            } else {
                math::ln(*w) + lik.log_gamma(x, label)
            }
        })
        .collect();
    let log_eta = math::log_sum_exp(&log_w);
    if !log_eta.is_finite() {
        return (log_eta, None);
    }
    let weights = log_w.iter().map(|lw| math::exp(lw - log_eta)).collect();
    (log_eta, density.with_weights(weights).ok())
}

/// Conjugate update: `w ∝ w Π η(ℓ)` and `p(·, ℓ) ∝ p(·, ℓ) γ(·, ℓ)`.
///
/// Components whose posterior weight vanishes are dropped. Densities shared
/// between components are updated once.
pub fn separable_update<L: SeparableLikelihood + ?Sized>(prior: &DGlmbDensity, lik: &L) -> Result<DGlmbDensity> {
    separable_update_detailed(prior, lik).map(|u| u.density)
}

/// A separable update with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableUpdate {
    pub density: DGlmbDensity,
    /// `ln Σ_I w(I) Π η(ℓ)` before normalization.
    pub log_normalizer: f64,
    /// `ln Π_{ℓ∈I} η(ℓ)` per surviving component.
    pub log_eta: Vec<(LabelSet, f64)>,
}

pub fn separable_update_detailed<L: SeparableLikelihood + ?Sized>(
    prior: &DGlmbDensity,
    lik: &L,
) -> Result<SeparableUpdate> {
    type Cached = (f64, Option<Arc<SingleObjectDensity>>);
    let mut cache: BTreeMap<(usize, Label), Cached> = BTreeMap::new();
    let mut staged = Vec::new();
    let mut log_eta = Vec::new();
    for c in prior.components() {
        if c.weight == 0.0 {
            continue;
        }
        let mut log_w = math::ln(c.weight);
        let mut densities = BTreeMap::new();
        for (l, d) in &c.densities {
            let key = (Arc::as_ptr(d) as usize, *l);
            let (log_eta, post) = cache
                .entry(key)
                .or_insert_with(|| {
                    let (e, p) = reweight(d, *l, lik);
                    (e, p.map(Arc::new))
                })
                .clone();
            log_w += log_eta;
            match post {
                Some(p) => {
                    densities.insert(*l, p);
                }
                None => break,
            }
        }
        if log_w.is_finite() && densities.len() == c.label_set.len() {
            log_eta.push((c.label_set.clone(), log_w - math::ln(c.weight)));
            staged.push((log_w, c.label_set.clone(), densities));
        }
    }
    if staged.is_empty() {
        return Err(Error::Degenerate("separable update: every component has zero likelihood"));
    }
    let log_ws: Vec<f64> = staged.iter().map(|s| s.0).collect();
    let lse = math::log_sum_exp(&log_ws);
    let components = staged
        .into_iter()
        .map(|(lw, set, densities)| DGlmbComponent {
            label_set: set,
            weight: math::exp(lw - lse),
            densities,
        })
        .collect();
    Ok(SeparableUpdate {
        density: DGlmbDensity::new_unnormalized(components)?.normalize()?,
        log_normalizer: lse,
        log_eta,
    })
}

/// A joint probability mass over `grid^n` for the labels of one label set.
///
/// `labels` gives the storage axis order (any permutation of the label set);
/// `masses` is row-major over those axes.
#[derive(Debug, Clone, PartialEq)]
pub struct JointGrid {
    labels: Vec<Label>,
    grid: Vec<Kinematic>,
    masses: Vec<f64>,
}

impl JointGrid {
    pub fn new(labels: Vec<Label>, grid: Vec<Kinematic>, masses: Vec<f64>) -> Result<Self> {
        let set: LabelSet = labels.iter().copied().collect();
        if set.len() != labels.len() {
            return Err(Error::InvalidInput("joint grid with repeated labels"));
        }
        if grid.is_empty() || masses.len() != grid.len().pow(labels.len() as u32) {
            return Err(Error::InvalidInput("joint grid needs |grid|^n masses"));
        }
        if masses.iter().any(|m| !(*m >= 0.0)) {
            return Err(Error::InvalidInput("negative joint mass"));
        }
        let total: f64 = masses.iter().sum();
        if math::abs(total - 1.0) > NORM_TOL {
            return Err(Error::NotNormalized(total));
        }
        Ok(Self { labels, grid, masses })
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn grid(&self) -> &[Kinematic] {
        &self.grid
    }

    pub fn label_set(&self) -> LabelSet {
        self.labels.iter().copied().collect()
    }

    fn flat_index(&self, assignment: &[(Label, usize)]) -> Option<usize> {
        let mut flat = 0;
        for l in &self.labels {
            let (_, g) = assignment.iter().find(|(al, _)| al == l)?;
            flat = flat * self.grid.len() + g;
        }
        Some(flat)
    }

    /// Mass at an assignment of grid indices, given in any label order.
    pub fn mass_at(&self, assignment: &[(Label, usize)]) -> f64 {
        if assignment.len() != self.labels.len() {
            return 0.0;
        }
        self.flat_index(assignment).map_or(0.0, |i| self.masses[i])
    }

    /// Assignments in canonical order: labels sorted, grid indices row-major.
    fn canonical_assignments(&self) -> impl Iterator<Item = LabeledSet> + '_ {
        let sorted = self.label_set();
        let n = sorted.len();
        let g = self.grid.len();
        (0..g.pow(n as u32)).map(move |flat| {
            let mut rem = flat;
            let mut a = vec![(Label::new(0, 0), 0usize); n];
            for (k, l) in sorted.iter().enumerate().rev() {
                a[k] = (*l, rem % g);
                rem /= g;
            }
            a
        })
    }

    /// Marginal of one label. The summation runs in canonical assignment
    /// order, so the result does not depend on the storage axis order.
    pub fn marginal(&self, label: Label) -> Result<DiscreteGridDensity> {
        if !self.labels.contains(&label) {
            return Err(Error::InvalidInput("label not in joint"));
        }
        let mut m = vec![0.0; self.grid.len()];
        for a in self.canonical_assignments() {
            let g = a.iter().find(|(l, _)| *l == label).map(|(_, g)| *g).expect("label present");
            m[g] += self.mass_at(&a);
        }
        DiscreteGridDensity::new(self.grid.clone(), m)
    }

    /// The same joint stored with a different axis order.
    pub fn permuted(&self, order: &[Label]) -> Result<Self> {
        let set: LabelSet = order.iter().copied().collect();
        if set != self.label_set() || order.len() != self.labels.len() {
            return Err(Error::InvalidInput("permutation must use the same labels"));
        }
        let mut out = Self {
            labels: order.to_vec(),
            grid: self.grid.clone(),
            masses: vec![0.0; self.masses.len()],
        };
        for a in self.canonical_assignments() {
            let i = out.flat_index(&a).expect("same labels");
            out.masses[i] = self.mass_at(&a);
        }
        Ok(out)
    }
}

/// Weighted joint samples for the labels of one label set: sample `j` holds
/// one kinematic state per label, in the order of `labels`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointParticles {
    labels: Vec<Label>,
    samples: Vec<Vec<Kinematic>>,
    weights: Vec<f64>,
}

impl JointParticles {
    pub fn new(labels: Vec<Label>, samples: Vec<Vec<Kinematic>>, weights: Vec<f64>) -> Result<Self> {
        let set: LabelSet = labels.iter().copied().collect();
        if set.len() != labels.len() {
            return Err(Error::InvalidInput("joint particles with repeated labels"));
        }
        if samples.is_empty() || samples.len() != weights.len() || samples.iter().any(|s| s.len() != labels.len()) {
            return Err(Error::InvalidInput("joint particles need one weight and one state per label per sample"));
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w >= 0.0)) || math::abs(total - 1.0) > NORM_TOL {
            return Err(Error::NotNormalized(total));
        }
        Ok(Self { labels, samples, weights })
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    /// The label's coordinate across all joint samples, joint weights kept.
    pub fn marginal(&self, label: Label) -> Result<ParticleCloud> {
        let axis = self
            .labels
            .iter()
            .position(|l| *l == label)
            .ok_or(Error::InvalidInput("label not in joint"))?;
        let states = self.samples.iter().map(|s| s[axis]).collect();
        ParticleCloud::new(states, self.weights.clone())
    }
}

/// A label-conditioned joint density.
#[derive(Debug, Clone, PartialEq)]
pub enum JointDensity {
    Grid(JointGrid),
    Particles(JointParticles),
}

impl JointDensity {
    pub fn labels(&self) -> &[Label] {
        match self {
            Self::Grid(g) => g.labels(),
            Self::Particles(p) => p.labels(),
        }
    }

    pub fn marginal(&self, label: Label) -> Result<SingleObjectDensity> {
        Ok(match self {
            Self::Grid(g) => g.marginal(label)?.into(),
            Self::Particles(p) => p.marginal(label)?.into(),
        })
    }

    /// Mass at a discrete assignment; zero for particle joints.
    pub fn mass_at(&self, assignment: &[(Label, usize)]) -> f64 {
        match self {
            Self::Grid(g) => g.mass_at(assignment),
            Self::Particles(_) => 0.0,
        }
    }
}

/// `π(X) = w(L(X)) p(X)`: joint existence weights plus one label-conditioned
/// joint per label set of positive weight.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledJointDensity {
    existence_weights: BTreeMap<LabelSet, f64>,
    joints: BTreeMap<LabelSet, JointDensity>,
}

impl LabeledJointDensity {
    pub fn new(existence_weights: BTreeMap<LabelSet, f64>, joints: BTreeMap<LabelSet, JointDensity>) -> Result<Self> {
        let total: f64 = existence_weights.values().sum();
        if existence_weights.values().any(|w| !(*w >= 0.0)) || math::abs(total - 1.0) > NORM_TOL {
            return Err(Error::NotNormalized(total));
        }
        for (set, w) in &existence_weights {
            match joints.get(set) {
                Some(j) => {
                    let labels: LabelSet = j.labels().iter().copied().collect();
                    if labels != *set {
                        return Err(Error::InvalidInput("joint labels differ from its label set"));
                    }
                }
                None if *w > 0.0 => return Err(Error::InvalidInput("missing joint for a weighted label set")),
                None => {}
            }
        }
        if joints.keys().any(|k| !existence_weights.get(k).is_some_and(|w| *w > 0.0)) {
            return Err(Error::InvalidInput("joint defined where the existence weight is zero"));
        }
        Ok(Self {
            existence_weights,
            joints,
        })
    }

    pub fn existence_weights(&self) -> &BTreeMap<LabelSet, f64> {
        &self.existence_weights
    }

    pub fn joints(&self) -> &BTreeMap<LabelSet, JointDensity> {
        &self.joints
    }

    /// `π(X)` at a discrete labeled set.
    pub fn mass_at(&self, set: &LabeledSet) -> f64 {
        let labels: LabelSet = set.iter().map(|(l, _)| *l).collect();
        match (self.existence_weights.get(&labels), self.joints.get(&labels)) {
            (Some(w), Some(j)) => w * j.mass_at(set),
            _ => 0.0,
        }
    }
}

/// Splits a discrete labeled density into `w(L)` and `p(X) = π(X) / w(L(X))`.
pub fn decompose(pi: &DiscreteInstance) -> Result<LabeledJointDensity> {
    let total = pi.expectation(|_| 1.0);
    if math::abs(total - 1.0) > 1e-6 {
        return Err(Error::NotNormalized(total));
    }
    let grid = pi.grid().to_vec();
    let mut existence_weights = BTreeMap::new();
    let mut joints = BTreeMap::new();
    for set in pi.label_space().subsets() {
        let n = set.len();
        let g = grid.len();
        let mut masses = Vec::with_capacity(g.pow(n as u32));
        for flat in 0..g.pow(n as u32) {
            let mut rem = flat;
            let mut a = vec![(Label::new(0, 0), 0usize); n];
            for (k, l) in set.iter().enumerate().rev() {
                a[k] = (*l, rem % g);
                rem /= g;
            }
            masses.push(pi.mass(&a));
        }
        let w: f64 = masses.iter().sum();
        existence_weights.insert(set.clone(), w);
        if w > 0.0 {
            for m in &mut masses {
                *m /= w;
            }
            let joint = JointGrid::new(set.as_slice().to_vec(), grid.clone(), masses)?;
            joints.insert(set, JointDensity::Grid(joint));
        }
    }
    // renormalize within the 1e-6 input tolerance
    for w in existence_weights.values_mut() {
        *w /= total;
    }
    LabeledJointDensity::new(existence_weights, joints)
}

/// Keeps `w(I)` and replaces each label-conditioned joint by the product of
/// its marginals.
pub fn marginal_product_approx(pi: &LabeledJointDensity) -> Result<DGlmbDensity> {
    let mut components = Vec::new();
    for (set, w) in &pi.existence_weights {
        if *w == 0.0 {
            continue;
        }
        let joint = &pi.joints[set];
        let densities = set
            .iter()
            .map(|l| Ok((*l, Arc::new(joint.marginal(*l)?))))
            .collect::<Result<_>>()?;
        components.push(DGlmbComponent::new(set.clone(), *w, densities)?);
    }
    DGlmbDensity::new(components)
}

/// One mixture term `w^(c)(L) p^(c)(X)`; the weights of all terms together
/// sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureTerm {
    pub weights: BTreeMap<LabelSet, f64>,
    pub joints: BTreeMap<LabelSet, JointDensity>,
}

impl MixtureTerm {
    pub fn mass_at(&self, set: &LabeledSet) -> f64 {
        let labels: LabelSet = set.iter().map(|(l, _)| *l).collect();
        match (self.weights.get(&labels), self.joints.get(&labels)) {
            (Some(w), Some(j)) => w * j.mass_at(set),
            _ => 0.0,
        }
    }
}

/// A GLMB term `(c, I)`; several terms may share a label set.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralComponent {
    pub index: usize,
    pub label_set: LabelSet,
    pub weight: f64,
    pub densities: BTreeMap<Label, Arc<SingleObjectDensity>>,
}

/// A general GLMB, components ordered by `(c, I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralGlmb {
    pub components: Vec<GeneralComponent>,
}

impl GeneralGlmb {
    pub fn cardinality(&self) -> CardinalityDistribution {
        let n_max = self.components.iter().map(|c| c.label_set.len()).max().unwrap_or(0);
        let mut masses = vec![0.0; n_max + 1];
        for c in &self.components {
            masses[c.label_set.len()] += c.weight;
        }
        CardinalityDistribution { masses }
    }

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
                let density = SingleObjectDensity::mixture(&ps).expect("normalized densities");
                (l, PhdTerm { mass, density })
            })
            .collect();
        LabeledPhd { per_label }
    }

    /// Collapses terms sharing a label set: weights add, per-label densities
    /// become weight-averaged mixtures. Not part of the default output since
    /// it changes the density.
    pub fn merge(&self) -> Result<DGlmbDensity> {
        let mut groups: BTreeMap<&LabelSet, Vec<&GeneralComponent>> = BTreeMap::new();
        for c in &self.components {
            groups.entry(&c.label_set).or_default().push(c);
        }
        let components = groups
            .into_iter()
            .map(|(set, cs)| {
                let weight: f64 = cs.iter().map(|c| c.weight).sum();
                let densities = set
                    .iter()
                    .map(|l| {
                        let parts: Vec<(f64, &SingleObjectDensity)> =
                            cs.iter().map(|c| (c.weight, c.densities[l].as_ref())).collect();
                        Ok((*l, Arc::new(SingleObjectDensity::mixture(&parts)?)))
                    })
                    .collect::<Result<_>>()?;
                DGlmbComponent::new(set.clone(), weight, densities)
            })
            .collect::<Result<Vec<_>>>()?;
        DGlmbDensity::new(components)
    }
}

/// Per-term marginal-product approximation of a mixture.
pub fn mixture_marginal_approx(terms: &[MixtureTerm]) -> Result<GeneralGlmb> {
    let total: f64 = terms.iter().flat_map(|t| t.weights.values()).sum();
    if math::abs(total - 1.0) > NORM_TOL {
        return Err(Error::NotNormalized(total));
    }
    let mut components = Vec::new();
    for (index, term) in terms.iter().enumerate() {
        for (set, w) in &term.weights {
            if *w == 0.0 {
                continue;
            }
            let joint = term
                .joints
                .get(set)
                .ok_or(Error::InvalidInput("missing joint for a weighted label set"))?;
            let densities = set
                .iter()
                .map(|l| Ok((*l, Arc::new(joint.marginal(*l)?))))
                .collect::<Result<_>>()?;
            components.push(GeneralComponent {
                index,
                label_set: set.clone(),
                weight: *w,
                densities,
            });
        }
    }
    Ok(GeneralGlmb { components })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{self, label_space, random_grid_dglmb, random_instance, unit_grid};
    use crate::rng::stream;
    use rand::Rng;

    fn l(i: u32) -> Label {
        Label::new(0, i)
    }

    fn grid_density(masses: &[f64]) -> Arc<SingleObjectDensity> {
        Arc::new(DiscreteGridDensity::new(unit_grid(masses.len()), masses.to_vec()).unwrap().into())
    }

    #[test]
    fn flat_likelihood_is_identity() {
        let prior = random_grid_dglmb(&mut stream(10, &[]), 2, 3).unwrap();
        let post = separable_update(&prior, &Gamma(|_: &Kinematic, _| 1.0)).unwrap();
        assert_eq!(post.len(), prior.len());
        for (a, b) in post.components().iter().zip(prior.components()) {
            assert!(math::abs(a.weight - b.weight) < 1e-15);
            for (da, db) in a.densities.values().zip(b.densities.values()) {
                for (x, y) in da.weights().iter().zip(db.weights()) {
                    assert!(math::abs(x - y) < 1e-15);
                }
            }
        }
    }

    #[test]
    fn pointwise_bayes_on_two_points() {
        let d = DGlmbDensity::new(vec![DGlmbComponent::new(
            LabelSet::singleton(l(0)),
            1.0,
            [(l(0), grid_density(&[0.5, 0.5]))].into_iter().collect(),
        )
        .unwrap()])
        .unwrap();
        let (log_eta, post) = reweight(
            d.components()[0].density(&l(0)).unwrap(),
            l(0),
            &Gamma(|x: &Kinematic, _| if x[0] == 0.0 { 2.0 } else { 1.0 }),
        );
        assert!(math::abs(math::exp(log_eta) - 1.5) < 1e-15);
        let post = post.unwrap();
        assert!(math::abs(post.weights()[0] - 2.0 / 3.0) < 1e-15);
        assert!(math::abs(post.weights()[1] - 1.0 / 3.0) < 1e-15);
    }

    #[test]
    fn component_weights_scale_by_eta() {
        let d = DGlmbDensity::new(vec![
            DGlmbComponent::empty(0.5),
            DGlmbComponent::new(
                LabelSet::singleton(l(0)),
                0.5,
                [(l(0), grid_density(&[1.0]))].into_iter().collect(),
            )
            .unwrap(),
        ])
        .unwrap();
        let post = separable_update(&d, &Gamma(|_: &Kinematic, _| 3.0)).unwrap();
        assert!(math::abs(post.components()[0].weight - 0.25) < 1e-15);
        assert!(math::abs(post.components()[1].weight - 0.75) < 1e-15);
        let mut only = d.components()[1].clone();
        only.weight = 1.0;
        let only = DGlmbDensity::new(vec![only]).unwrap();
        assert!(separable_update(&only, &Gamma(|_: &Kinematic, _| 0.0)).is_err());
    }

    #[test]
    fn decompose_dglmb_recovers_weights() {
        let d = random_grid_dglmb(&mut stream(11, &[]), 3, 3).unwrap();
        let inst = DiscreteInstance::from_dglmb(&d, label_space(3), unit_grid(3)).unwrap();
        let dec = decompose(&inst).unwrap();
        for c in d.components() {
            assert!(math::abs(dec.existence_weights()[&c.label_set] - c.weight) < 1e-12);
        }
        // a δ-GLMB is a fixed point of the approximation
        let approx = marginal_product_approx(&dec).unwrap();
        for (a, c) in approx.components().iter().zip(d.components()) {
            assert_eq!(a.label_set, c.label_set);
            for (da, dc) in a.densities.values().zip(c.densities.values()) {
                for (x, y) in da.weights().iter().zip(dc.weights()) {
                    assert!(math::abs(x - y) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn decompose_reproduces_pointwise() {
        let inst = random_instance(&mut stream(12, &[]), 2, 3).unwrap();
        let dec = decompose(&inst).unwrap();
        for s in inst.sets() {
            assert!(math::abs(dec.mass_at(&s) - inst.mass(&s)) < 1e-12);
        }
        let single = DiscreteInstance::new(
            label_space(1),
            unit_grid(2),
            [(vec![(l(0), 0)], 0.3), (vec![(l(0), 1)], 0.7)].into_iter().collect(),
        )
        .unwrap();
        let dec = decompose(&single).unwrap();
        assert_eq!(dec.existence_weights()[&LabelSet::singleton(l(0))], 1.0);
        assert_eq!(dec.existence_weights()[&LabelSet::empty()], 0.0);
        let m = dec.joints()[&LabelSet::singleton(l(0))].marginal(l(0)).unwrap();
        assert!(math::abs(m.weights()[0] - 0.3) < 1e-15);
    }

    #[test]
    fn correlated_joint_marginals() {
        let set: LabelSet = [l(0), l(1)].into_iter().collect();
        let joint = JointGrid::new(vec![l(0), l(1)], unit_grid(2), vec![0.4, 0.1, 0.1, 0.4]).unwrap();
        let pi = LabeledJointDensity::new(
            [(set.clone(), 1.0)].into_iter().collect(),
            [(set.clone(), JointDensity::Grid(joint))].into_iter().collect(),
        )
        .unwrap();
        let d = marginal_product_approx(&pi).unwrap();
        for lab in [l(0), l(1)] {
            let w = d.components()[0].density(&lab).unwrap().weights();
            assert!(math::abs(w[0] - 0.5) < 1e-15 && math::abs(w[1] - 0.5) < 1e-15);
        }
    }

    #[test]
    fn marginals_ignore_storage_order() {
        let mut rng = stream(13, &[]);
        let labels = [l(0), l(1), l(2)];
        let masses: Vec<f64> = (0..27).map(|_| rng.random::<f64>()).collect();
        let total: f64 = masses.iter().sum();
        let masses = masses.iter().map(|m| m / total).collect();
        let joint = JointGrid::new(labels.to_vec(), unit_grid(3), masses).unwrap();
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        for p in perms {
            let order: Vec<Label> = p.iter().map(|&i| labels[i]).collect();
            let permuted = joint.permuted(&order).unwrap();
            for lab in labels {
                assert_eq!(permuted.marginal(lab).unwrap(), joint.marginal(lab).unwrap());
            }
        }
    }

    #[test]
    fn particle_marginals_keep_joint_weights() {
        let s = |x: f64| [x, 0.0, 0.0, 0.0, 1.0];
        let jp = JointParticles::new(
            vec![l(1), l(0)],
            vec![vec![s(1.0), s(10.0)], vec![s(2.0), s(20.0)]],
            vec![0.25, 0.75],
        )
        .unwrap();
        let m = jp.marginal(l(0)).unwrap();
        assert_eq!(m.states(), &[s(10.0), s(20.0)]);
        assert_eq!(m.weights(), &[0.25, 0.75]);
    }

    fn random_term<R: Rng>(rng: &mut R, labels: &LabelSet, grid: usize, scale: f64) -> MixtureTerm {
        let mut weights = BTreeMap::new();
        let mut joints = BTreeMap::new();
        let raw: Vec<f64> = labels.subsets().map(|_| rng.random::<f64>() + 0.05).collect();
        let total: f64 = raw.iter().sum();
        for (set, w) in labels.subsets().zip(raw) {
            let n = grid.pow(set.len() as u32);
            let m: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.01).collect();
            let mt: f64 = m.iter().sum();
            let joint = JointGrid::new(set.as_slice().to_vec(), unit_grid(grid), m.iter().map(|x| x / mt).collect()).unwrap();
            weights.insert(set.clone(), scale * w / total);
            joints.insert(set, JointDensity::Grid(joint));
        }
        MixtureTerm { weights, joints }
    }

    #[test]
    fn mixture_single_term_matches_marginal_product() {
        let inst = random_instance(&mut stream(14, &[]), 2, 3).unwrap();
        let dec = decompose(&inst).unwrap();
        let term = MixtureTerm {
            weights: dec.existence_weights().clone(),
            joints: dec.joints().clone(),
        };
        let general = mixture_marginal_approx(&[term]).unwrap();
        let direct = marginal_product_approx(&dec).unwrap();
        assert_eq!(general.components.len(), direct.len());
        for (g, d) in general.components.iter().zip(direct.components()) {
            assert_eq!(g.label_set, d.label_set);
            assert_eq!(g.weight, d.weight);
            assert_eq!(g.densities, d.densities);
        }
    }

    #[test]
    fn mixture_preserves_cardinality_and_phd() {
        let labels = label_space(2);
        let grid = 3;
        for seed in 0..20 {
            let mut rng = stream(15, &[seed]);
            let terms = [random_term(&mut rng, &labels, grid, 0.4), random_term(&mut rng, &labels, grid, 0.6)];
            let inst = DiscreteInstance::from_fn(labels.clone(), unit_grid(grid), |x| {
                terms.iter().map(|t| t.mass_at(x)).sum()
            })
            .unwrap();
            let general = mixture_marginal_approx(&terms).unwrap();
            for (n, rho) in inst.cardinality().iter().enumerate() {
                assert!(math::abs(general.cardinality().mass(n) - rho) < 1e-10);
            }
            let phd = general.phd();
            for lab in labels.iter() {
                let term = &phd.per_label[lab];
                for (g, x) in unit_grid(grid).iter().enumerate() {
                    let got = term.mass * oracle::mass_at(&term.density, x);
                    assert!(math::abs(got - inst.phd(*lab, g)) < 1e-10);
                }
            }
            // merging keeps the weights and the PHD
            let merged = general.merge().unwrap();
            assert!(math::abs(merged.total_weight() - 1.0) < 1e-12);
            assert!(math::abs(merged.phd().total_mass() - phd.total_mass()) < 1e-12);
        }
    }

    #[test]
    fn mixture_with_disjoint_support_concatenates() {
        let a = LabelSet::singleton(l(0));
        let b = LabelSet::singleton(l(1));
        let joint = |set: &LabelSet| JointDensity::Grid(JointGrid::new(set.as_slice().to_vec(), unit_grid(2), vec![0.2, 0.8]).unwrap());
        let terms = [
            MixtureTerm {
                weights: [(a.clone(), 0.3)].into_iter().collect(),
                joints: [(a.clone(), joint(&a))].into_iter().collect(),
            },
            MixtureTerm {
                weights: [(b.clone(), 0.7)].into_iter().collect(),
                joints: [(b.clone(), joint(&b))].into_iter().collect(),
            },
        ];
        let g = mixture_marginal_approx(&terms).unwrap();
        assert_eq!(g.components.len(), 2);
        assert_eq!((g.components[0].index, &g.components[0].label_set, g.components[0].weight), (0, &a, 0.3));
        assert_eq!((g.components[1].index, &g.components[1].label_set, g.components[1].weight), (1, &b, 0.7));
    }

    #[test]
    fn decompose_rejects_unnormalized() {
        let grid = unit_grid(2);
        let d = JointGrid::new(vec![l(0)], grid, vec![0.5, 0.6]);
        assert!(matches!(d, Err(Error::NotNormalized(_))));
    }
}
