use std::collections::btree_map::{self, BTreeMap};
use std::fmt;

use serde::de::Deserializer;
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

/// A finite multiset over a totally ordered example type.
///
/// Entries with multiplicity zero are never stored, so two multisets compare
/// equal exactly when every element has the same multiplicity in both.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Multiset<E: Ord> {
    counts: BTreeMap<E, usize>,
    len: usize,
}

impl<E: Ord> Default for Multiset<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E: Ord> Multiset<E> {
    pub fn new() -> Self {
        Self {
            counts: BTreeMap::new(),
            len: 0,
        }
    }

    pub fn insert(&mut self, e: E) {
        self.insert_n(e, 1);
    }

    pub fn insert_n(&mut self, e: E, n: usize) {
        if n == 0 {
            return;
        }
        *self.counts.entry(e).or_insert(0) += n;
        self.len += n;
    }

    /// Removes one copy; returns whether a copy was present.
    pub fn remove_one(&mut self, e: &E) -> bool {
        match self.counts.get_mut(e) {
            Some(c) => {
                *c -= 1;
                if *c == 0 {
                    self.counts.remove(e);
                }
                self.len -= 1;
                true
            }
            None => false,
        }
    }

    /// Removes every copy and returns how many there were.
    pub fn remove_all(&mut self, e: &E) -> usize {
        let n = self.counts.remove(e).unwrap_or(0);
        self.len -= n;
        n
    }

    pub fn multiplicity(&self, e: &E) -> usize {
        self.counts.get(e).copied().unwrap_or(0)
    }

    pub fn contains(&self, e: &E) -> bool {
        self.counts.contains_key(e)
    }

    /// Cardinality counting repetitions.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn distinct_len(&self) -> usize {
        self.counts.len()
    }

    /// Distinct elements with multiplicities, in ascending order.
    pub fn iter_counts(&self) -> impl DoubleEndedIterator<Item = (&E, usize)> + '_ {
        self.counts.iter().map(|(e, &c)| (e, c))
    }

    pub fn distinct(&self) -> impl DoubleEndedIterator<Item = &E> + '_ {
        self.counts.keys()
    }

    /// Every copy, in ascending order.
    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &E> + '_ {
        self.counts.iter().flat_map(|(e, &c)| std::iter::repeat_n(e, c))
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.len <= other.len && self.counts.iter().all(|(e, &c)| other.multiplicity(e) >= c)
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&E, usize) -> usize) {
        let mut len = 0;
        self.counts.retain(|e, c| {
            *c = keep(e, *c).min(*c);
            len += *c;
            *c > 0
        });
        self.len = len;
    }
}

impl<E: Ord + Clone> Multiset<E> {
    /// Multiplicities add.
    pub fn union(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in other.iter_counts() {
            out.insert_n(e.clone(), c);
        }
        out
    }

    /// Multiplicities take the minimum.
    pub fn intersection(&self, other: &Self) -> Self {
        let mut out = Self::new();
        for (e, c) in self.iter_counts() {
            out.insert_n(e.clone(), c.min(other.multiplicity(e)));
        }
        out
    }

    /// Multiplicities subtract, saturating at zero.
    pub fn difference(&self, other: &Self) -> Self {
        let mut out = Self::new();
        for (e, c) in self.iter_counts() {
            out.insert_n(e.clone(), c.saturating_sub(other.multiplicity(e)));
        }
        out
    }

    pub fn with(&self, e: E) -> Self {
        let mut out = self.clone();
        out.insert(e);
        out
    }

    pub fn to_vec(&self) -> Vec<E> {
        self.iter().cloned().collect()
    }
}

impl<E: Ord> FromIterator<E> for Multiset<E> {
    fn from_iter<I: IntoIterator<Item = E>>(iter: I) -> Self {
        let mut m = Self::new();
        m.extend(iter);
        m
    }
}

impl<E: Ord> Extend<E> for Multiset<E> {
    fn extend<I: IntoIterator<Item = E>>(&mut self, iter: I) {
        for e in iter {
            self.insert(e);
        }
    }
}

impl<E: Ord> IntoIterator for Multiset<E> {
    type Item = (E, usize);
    type IntoIter = btree_map::IntoIter<E, usize>;

    fn into_iter(self) -> Self::IntoIter {
        self.counts.into_iter()
    }
}

impl<E: Ord + fmt::Debug> fmt::Debug for Multiset<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.counts.iter()).finish()
    }
}

#[derive(Serialize, Deserialize)]
struct Entry<E> {
    example: E,
    multiplicity: usize,
}

impl<E: Ord + Serialize> Serialize for Multiset<E> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Ref<'a, E> {
            example: &'a E,
            multiplicity: usize,
        }
        let mut seq = s.serialize_seq(Some(self.counts.len()))?;
        for (e, &c) in &self.counts {
            seq.serialize_element(&Ref { example: e, multiplicity: c })?;
        }
        seq.end()
    }
}

impl<'de, E: Ord + Deserialize<'de>> Deserialize<'de> for Multiset<E> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let entries = Vec::<Entry<E>>::deserialize(d)?;
        let mut m = Self::new();
        for Entry { example, multiplicity } in entries {
            m.insert_n(example, multiplicity);
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(v: &[i32]) -> Multiset<i32> {
        v.iter().copied().collect()
    }

    #[test]
    fn multiplicities() {
        let m = ms(&[3, 1, 3, 3]);
        assert_eq!(m.len(), 4);
        assert_eq!(m.distinct_len(), 2);
        assert_eq!(m.multiplicity(&3), 3);
        assert_eq!(m.to_vec(), vec![1, 3, 3, 3]);
    }

    #[test]
    fn operations() {
        let a = ms(&[1, 1, 2]);
        let b = ms(&[1, 2, 2, 3]);
        assert_eq!(a.union(&b), ms(&[1, 1, 1, 2, 2, 2, 3]));
        assert_eq!(a.intersection(&b), ms(&[1, 2]));
        assert_eq!(a.difference(&b), ms(&[1]));
        assert!(a.difference(&a).is_empty());
        assert!(ms(&[1, 2]).is_subset(&a));
        assert!(!ms(&[2, 2]).is_subset(&a));
    }

    #[test]
    fn removal() {
        let mut m = ms(&[5, 5]);
        assert!(m.remove_one(&5));
        assert_eq!(m.len(), 1);
        assert!(m.remove_one(&5));
        assert!(!m.contains(&5));
        assert!(!m.remove_one(&5));
        let mut m = ms(&[1, 1, 1, 2]);
        assert_eq!(m.remove_all(&1), 3);
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn retain_caps() {
        let mut m = ms(&[1, 1, 1, 2, 2]);
        m.retain(|_, c| c.min(2));
        assert_eq!(m, ms(&[1, 1, 2, 2]));
    }

    #[test]
    fn json_round_trip() {
        let m = ms(&[4, 4, 7]);
        let j = serde_json::to_string(&m).unwrap();
        assert_eq!(j, r#"[{"example":4,"multiplicity":2},{"example":7,"multiplicity":1}]"#);
        let back: Multiset<i32> = serde_json::from_str(&j).unwrap();
        assert_eq!(back, m);
    }
}
