//! Exhaustive set integrals on small discrete labeled spaces.
//!
//! A [`DiscreteInstance`] places probability mass on every finite labeled set
//! over at most three labels and six kinematic grid points. On such a space the
//! set integral `Σ_i 1/i! ∫ f({x_1..x_i}) d(x_1..x_i)` is a plain sum over
//! unordered labeled sets, which is what everything here computes. It is the
//! ground truth for the GLMB algebra, the approximations and the filter
//! updates in tests.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::glmb::{DGlmbComponent, DGlmbDensity, DiscreteGridDensity, SingleObjectDensity};
use crate::label::{Kinematic, Label, LabelSet, LabeledState};
use crate::math;

pub const MAX_LABELS: usize = 3;
pub const MAX_GRID_POINTS: usize = 6;

/// A labeled set on the discrete space: `(label, grid index)` pairs sorted by
/// label, labels pairwise distinct.
pub type LabeledSet = Vec<(Label, usize)>;

/// Every distinct-label set over `labels × 0..grid_len`, grouped by label
/// subset (mask order) and then by grid assignment in row-major order.
pub fn enumerate_sets(labels: &LabelSet, grid_len: usize) -> Vec<LabeledSet> {
    let mut out = Vec::new();
    for subset in labels.subsets() {
        let n = subset.len();
        let total = grid_len.pow(n as u32);
        for flat in 0..total {
            let mut rem = flat;
            let mut set = alloc::vec![(Label::new(0, 0), 0usize); n];
            for (k, l) in subset.iter().enumerate().rev() {
                set[k] = (*l, rem % grid_len);
                rem /= grid_len;
            }
            out.push(set);
        }
    }
    out
}

fn label_set_of(set: &LabeledSet) -> LabelSet {
    set.iter().map(|(l, _)| *l).collect()
}

/// A probability mass function over all labeled sets of a small space.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteInstance {
    label_space: LabelSet,
    grid: Vec<Kinematic>,
    masses: BTreeMap<LabeledSet, f64>,
}

impl DiscreteInstance {
    /// Validates the space caps, the keys and `Σ mass = 1 ± 1e-9`.
    pub fn new(
        label_space: LabelSet,
        grid: Vec<Kinematic>,
        masses: BTreeMap<LabeledSet, f64>,
    ) -> Result<Self> {
        check_space(&label_space, grid.len())?;
        for (set, m) in &masses {
            let labels = label_set_of(set);
            if labels.len() != set.len() {
                return Err(Error::InvalidInput("labeled set with repeated labels"));
            }
            if !labels.is_subset(&label_space) || set.iter().any(|(_, g)| *g >= grid.len()) {
                return Err(Error::InvalidInput("labeled set outside the instance space"));
            }
            if set.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(Error::InvalidInput("labeled set not sorted by label"));
            }
            if !(*m >= 0.0) {
                return Err(Error::InvalidInput("negative mass"));
            }
        }
        let total: f64 = masses.values().sum();
        if math::abs(total - 1.0) > 1e-9 {
            return Err(Error::NotNormalized(total));
        }
        Ok(Self {
            label_space,
            grid,
            masses,
        })
    }

    /// Tabulates `f` on every labeled set and normalizes.
    pub fn from_fn(
        label_space: LabelSet,
        grid: Vec<Kinematic>,
        mut f: impl FnMut(&LabeledSet) -> f64,
    ) -> Result<Self> {
        check_space(&label_space, grid.len())?;
        let sets = enumerate_sets(&label_space, grid.len());
        let values: Vec<f64> = sets.iter().map(&mut f).collect();
        let total: f64 = values.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Degenerate("instance has zero total mass"));
        }
        let masses = sets
            .into_iter()
            .zip(values)
            .filter(|(_, v)| *v != 0.0)
            .map(|(s, v)| (s, v / total))
            .collect();
        Self::new(label_space, grid, masses)
    }

    /// The instance induced by a δ-GLMB whose single-object densities live on
    /// `grid`: `π(X) = w(L(X)) Π p(x, ℓ)`.
    pub fn from_dglmb(d: &DGlmbDensity, label_space: LabelSet, grid: Vec<Kinematic>) -> Result<Self> {
        if !d.labels().is_subset(&label_space) {
            return Err(Error::InvalidInput("density uses labels outside the space"));
        }
        let g = grid.clone();
        Self::from_fn(label_space, grid, |set| {
            let Some(c) = d.get(&label_set_of(set)) else {
                return 0.0;
            };
            set.iter().fold(c.weight, |acc, (l, gi)| {
                acc * mass_at(c.density(l).expect("validated component"), &g[*gi])
            })
        })
    }

    pub fn label_space(&self) -> &LabelSet {
        &self.label_space
    }

    pub fn grid(&self) -> &[Kinematic] {
        &self.grid
    }

    pub fn mass(&self, set: &LabeledSet) -> f64 {
        self.masses.get(set).copied().unwrap_or(0.0)
    }

    pub fn sets(&self) -> Vec<LabeledSet> {
        enumerate_sets(&self.label_space, self.grid.len())
    }

    /// Labeled states of a discrete set.
    pub fn states(&self, set: &LabeledSet) -> Vec<LabeledState> {
        set.iter()
            .map(|(l, g)| LabeledState::new(self.grid[*g], *l))
            .collect()
    }

    /// Maps labeled states back onto the grid (exact point equality).
    pub fn to_labeled_set(&self, states: &[LabeledState]) -> Option<LabeledSet> {
        let mut set: LabeledSet = states
            .iter()
            .map(|s| self.grid.iter().position(|p| *p == s.kinematic).map(|g| (s.label, g)))
            .collect::<Option<_>>()?;
        set.sort_by_key(|(l, _)| *l);
        Some(set)
    }

    /// `∫ f(X) δX`: the sum of `f` over every labeled set of the space.
    pub fn set_integral(&self, f: impl FnMut(&LabeledSet) -> f64) -> f64 {
        set_integral(&self.label_space, self.grid.len(), f)
    }

    /// `∫ f(X) π(X) δX`.
    pub fn expectation(&self, mut f: impl FnMut(&LabeledSet) -> f64) -> f64 {
        self.set_integral(|x| {
            let m = self.mass(x);
            if m == 0.0 {
                0.0
            } else {
                m * f(x)
            }
        })
    }

    /// `ρ(n)` for `n = 0..=|label space|`.
    pub fn cardinality(&self) -> Vec<f64> {
        (0..=self.label_space.len())
            .map(|n| self.expectation(|x| if x.len() == n { 1.0 } else { 0.0 }))
            .collect()
    }

    /// PHD mass at `(grid[point], label)`: `∫ π({(x, ℓ)} ∪ X) δX`.
    pub fn phd(&self, label: Label, point: usize) -> f64 {
        self.expectation(|x| {
            if x.iter().any(|(l, g)| *l == label && *g == point) {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Joint existence probability of a label set.
    pub fn existence(&self, labels: &LabelSet) -> f64 {
        self.expectation(|x| if label_set_of(x) == *labels { 1.0 } else { 0.0 })
    }
}

fn check_space(labels: &LabelSet, grid_len: usize) -> Result<()> {
    if labels.len() > MAX_LABELS {
        return Err(Error::TooLarge {
            what: "oracle label space",
            size: labels.len(),
            cap: MAX_LABELS,
        });
    }
    if grid_len > MAX_GRID_POINTS {
        return Err(Error::TooLarge {
            what: "oracle grid",
            size: grid_len,
            cap: MAX_GRID_POINTS,
        });
    }
    if grid_len == 0 {
        return Err(Error::InvalidInput("oracle grid is empty"));
    }
    Ok(())
}

/// Probability that a single-object density puts on exactly `point`.
pub fn mass_at(d: &SingleObjectDensity, point: &Kinematic) -> f64 {
    d.points()
        .iter()
        .zip(d.weights())
        .filter(|(p, _)| *p == point)
        .map(|(_, w)| *w)
        .sum()
}

/// The set integral of `f` over a space; refuses spaces above the caps.
pub fn set_integral(
    labels: &LabelSet,
    grid_len: usize,
    mut f: impl FnMut(&LabeledSet) -> f64,
) -> f64 {
    check_space(labels, grid_len).expect("oracle space within caps");
    enumerate_sets(labels, grid_len).iter().map(&mut f).sum()
}

/// Exact multi-object Bayes rule `g·π / ∫ g·π δX`.
pub fn exact_bayes(
    prior: &DiscreteInstance,
    mut likelihood: impl FnMut(&LabeledSet) -> f64,
) -> Result<DiscreteInstance> {
    let normalizer = prior.expectation(&mut likelihood);
    if !(normalizer > 0.0) || !normalizer.is_finite() {
        return Err(Error::Degenerate("Bayes normalizer is zero"));
    }
    let masses = prior
        .masses
        .iter()
        .map(|(s, m)| (s.clone(), m * likelihood(s) / normalizer))
        .filter(|(_, m)| *m != 0.0)
        .collect();
    DiscreteInstance::new(prior.label_space.clone(), prior.grid.clone(), masses)
}

/// `D_KL(p ‖ q) = Σ p log(p / q)`, with `0 log 0 = 0` and `+inf` when `q`
/// vanishes where `p` does not.
pub fn kld(p: &DiscreteInstance, q: &DiscreteInstance) -> Result<f64> {
    if p.label_space != q.label_space || p.grid != q.grid {
        return Err(Error::InvalidInput("KLD between different spaces"));
    }
    let mut total = 0.0;
    for (set, pm) in &p.masses {
        if *pm == 0.0 {
            continue;
        }
        let qm = q.mass(set);
        if qm == 0.0 {
            return Ok(f64::INFINITY);
        }
        total += pm * math::ln(pm / qm);
    }
    Ok(total)
}

/// Grid points `[i, 0, 0, 0, 1]` for `i = 0..n`.
pub fn unit_grid(n: usize) -> Vec<Kinematic> {
    (0..n).map(|i| [i as f64, 0.0, 0.0, 0.0, 1.0]).collect()
}

/// Labels `(0, 0), (0, 1), ...`.
pub fn label_space(n: usize) -> LabelSet {
    (0..n as u32).map(|i| Label::new(0, i)).collect()
}

/// A random instance with independent uniform masses on every labeled set,
/// so the label-conditioned joints are generically correlated.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, n_labels: usize, n_grid: usize) -> Result<DiscreteInstance> {
    DiscreteInstance::from_fn(label_space(n_labels), unit_grid(n_grid), |_| 0.05 + rng.random::<f64>())
}

/// A random δ-GLMB on `unit_grid(n_grid)` with one component per label subset.
pub fn random_grid_dglmb<R: Rng + ?Sized>(rng: &mut R, n_labels: usize, n_grid: usize) -> Result<DGlmbDensity> {
    let grid = unit_grid(n_grid);
    let components = label_space(n_labels)
        .subsets()
        .map(|set| {
            let densities = set
                .iter()
                .map(|l| {
                    let masses = (0..n_grid).map(|_| 0.05 + rng.random::<f64>()).collect();
                    let d = DiscreteGridDensity::new(grid.clone(), masses)?;
                    Ok((*l, Arc::new(SingleObjectDensity::Grid(d))))
                })
                .collect::<Result<_>>()?;
            DGlmbComponent::new(set, 0.05 + rng.random::<f64>(), densities)
        })
        .collect::<Result<Vec<_>>>()?;
    DGlmbDensity::new_unnormalized(components)?.normalize()
}
