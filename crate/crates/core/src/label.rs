//! Track labels and labeled single-object states.

use alloc::vec::Vec;
use core::fmt;

/// Dimension of the kinematic state `[p_x, v_x, p_y, v_y, amplitude]`.
pub const STATE_DIM: usize = 5;

/// Kinematic part of a single-object state: position and velocity in the
/// plane (m, m/s) followed by the echo amplitude modulus (linear).
pub type Kinematic = [f64; STATE_DIM];

/// A track label: the scan at which the track was born and an index that
/// separates tracks born at the same scan.
///
/// Ordering is lexicographic on `(birth_time, index)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label {
    pub birth_time: u32,
    pub index: u32,
}

impl Label {
    pub const fn new(birth_time: u32, index: u32) -> Self {
        Self { birth_time, index }
    }

    /// Packs the label into one integer, used to key RNG streams.
    pub fn as_u64(self) -> u64 {
        ((self.birth_time as u64) << 32) | self.index as u64
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.birth_time, self.index)
    }
}

/// A finite set of labels, always kept sorted and free of duplicates.
///
/// The derived ordering (lexicographic over the sorted labels) is the
/// canonical label-set order used for every tie-break in the crate.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelSet(Vec<Label>);

impl LabelSet {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn singleton(label: Label) -> Self {
        Self(alloc::vec![label])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, label: &Label) -> bool {
        self.0.binary_search(label).is_ok()
    }

    pub fn insert(&mut self, label: Label) -> bool {
        match self.0.binary_search(&label) {
            Ok(_) => false,
            Err(pos) => {
                self.0.insert(pos, label);
                true
            }
        }
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Label> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[Label] {
        &self.0
    }

    pub fn is_subset(&self, other: &LabelSet) -> bool {
        self.0.iter().all(|l| other.contains(l))
    }

    pub fn union(&self, other: &LabelSet) -> LabelSet {
        let mut out = self.clone();
        for l in other.iter() {
            out.insert(*l);
        }
        out
    }

    pub fn difference(&self, other: &LabelSet) -> LabelSet {
        Self(self.0.iter().filter(|l| !other.contains(l)).copied().collect())
    }

    /// Subset selected by the bits of `mask` (bit `i` keeps the `i`-th label
    /// in canonical order).
    pub fn subset_by_mask(&self, mask: u64) -> LabelSet {
        Self(
            self.0
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, l)| *l)
                .collect(),
        )
    }

    /// All subsets, in mask order. Only sensible for small sets.
    pub fn subsets(&self) -> impl Iterator<Item = LabelSet> + '_ {
        assert!(self.len() < 63, "label set too large to enumerate");
        (0..1u64 << self.len()).map(move |m| self.subset_by_mask(m))
    }
}

impl FromIterator<Label> for LabelSet {
    fn from_iter<T: IntoIterator<Item = Label>>(iter: T) -> Self {
        let mut v: Vec<Label> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }
}

impl<'a> IntoIterator for &'a LabelSet {
    type Item = &'a Label;
    type IntoIter = core::slice::Iter<'a, Label>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{l}")?;
        }
        f.write_str("}")
    }
}

/// A kinematic state paired with its track label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledState {
    pub kinematic: Kinematic,
    pub label: Label,
}

impl LabeledState {
    pub fn new(kinematic: Kinematic, label: Label) -> Self {
        Self { kinematic, label }
    }

    pub fn position(&self) -> [f64; 2] {
        [self.kinematic[0], self.kinematic[2]]
    }

    pub fn amplitude(&self) -> f64 {
        self.kinematic[4]
    }
}

/// 1 when `states` carries pairwise distinct labels, 0 otherwise.
pub fn distinct_label_indicator(states: &[LabeledState]) -> u8 {
    let labels: LabelSet = states.iter().map(|s| s.label).collect();
    u8::from(labels.len() == states.len())
}

/// Generalized inclusion `1_set(value)`.
pub fn inclusion(value: &Label, set: &LabelSet) -> u8 {
    u8::from(set.contains(value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn st(l: Label, x: f64) -> LabeledState {
        LabeledState::new([x, 0.0, 0.0, 0.0, 1.0], l)
    }

    #[test]
    fn distinct_labels() {
        let l1 = Label::new(0, 0);
        let l2 = Label::new(0, 1);
        assert_eq!(distinct_label_indicator(&[]), 1);
        assert_eq!(distinct_label_indicator(&[st(l1, 1.0), st(l1, 2.0)]), 0);
        assert_eq!(distinct_label_indicator(&[st(l1, 1.0), st(l2, 2.0)]), 1);
    }

    #[test]
    fn inclusion_function() {
        let l1 = Label::new(0, 0);
        let l2 = Label::new(1, 0);
        let l3 = Label::new(2, 5);
        let set: LabelSet = [l1, l2].into_iter().collect();
        assert_eq!(inclusion(&l1, &set), 1);
        assert_eq!(inclusion(&l3, &set), 0);
        assert_eq!(inclusion(&l1, &LabelSet::empty()), 0);
    }

    #[test]
    fn label_set_is_sorted_and_deduplicated() {
        let s: LabelSet = [Label::new(2, 0), Label::new(0, 3), Label::new(2, 0)]
            .into_iter()
            .collect();
        assert_eq!(s.as_slice(), &[Label::new(0, 3), Label::new(2, 0)]);
        assert_eq!(s.subsets().count(), 4);
    }

    fn label() -> impl Strategy<Value = Label> {
        (0u32..4, 0u32..4).prop_map(|(k, i)| Label::new(k, i))
    }

    proptest! {
        #[test]
        fn label_order_is_total(a in label(), b in label(), c in label()) {
            // exactly one of <, ==, > holds
            let n = [a < b, a == b, a > b].iter().filter(|x| **x).count();
            prop_assert_eq!(n, 1);
            if a <= b && b <= a { prop_assert_eq!(a, b); }
            if a <= b && b <= c { prop_assert!(a <= c); }
            prop_assert_eq!(a < b, (a.birth_time, a.index) < (b.birth_time, b.index));
        }

        #[test]
        fn indicator_is_permutation_invariant(
            labels in proptest::collection::vec(label(), 0..6),
            seed in any::<u64>(),
        ) {
            let states: Vec<_> = labels.iter().enumerate().map(|(i, l)| st(*l, i as f64)).collect();
            let mut shuffled = states.clone();
            // deterministic Fisher-Yates driven by the seed
            let mut s = seed;
            for i in (1..shuffled.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let j = (s >> 33) as usize % (i + 1);
                shuffled.swap(i, j);
            }
            prop_assert_eq!(distinct_label_indicator(&states), distinct_label_indicator(&shuffled));
        }
    }
}
