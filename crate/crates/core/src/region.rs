//! Stopping regions as bitsets over state indices.

use std::fmt;

use serde::ser::{Serialize, SerializeSeq, Serializer};

/// Largest state space a [`StoppingRegion`] can address.
pub const MAX_STATES: usize = 64;

/// A subset of the state space, stored as a 64-bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct StoppingRegion(u64);

impl StoppingRegion {
    pub const fn empty() -> Self {
        StoppingRegion(0)
    }

    /// The whole state space `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_STATES);
        if n == MAX_STATES {
            StoppingRegion(u64::MAX)
        } else {
            StoppingRegion((1u64 << n) - 1)
        }
    }

    pub const fn from_bits(bits: u64) -> Self {
        StoppingRegion(bits)
    }

    pub fn from_states<I: IntoIterator<Item = usize>>(states: I) -> Self {
        let mut r = StoppingRegion::empty();
        for s in states {
            r.insert(s);
        }
        r
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, state: usize) -> bool {
        state < MAX_STATES && self.0 >> state & 1 == 1
    }

    pub fn insert(&mut self, state: usize) {
        self.0 |= 1 << state;
    }

    pub fn remove(&mut self, state: usize) {
        self.0 &= !(1 << state);
    }

    pub fn with(mut self, state: usize) -> Self {
        self.insert(state);
        self
    }

    pub fn without(mut self, state: usize) -> Self {
        self.remove(state);
        self
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        StoppingRegion(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        StoppingRegion(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        StoppingRegion(self.0 & !other.0)
    }

    pub fn complement(self, n: usize) -> Self {
        StoppingRegion::full(n).difference(self)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    /// All subsets of `self`, in increasing mask order.
    pub fn subsets(self) -> impl Iterator<Item = StoppingRegion> {
        // carry-rippler: next = (cur - mask) & mask
        let mask = self.0;
        let mut cur = Some(0u64);
        std::iter::from_fn(move || {
            let out = cur?;
            let next = out.wrapping_sub(mask) & mask;
            cur = if next == 0 { None } else { Some(next) };
            Some(StoppingRegion(out))
        })
    }
}

impl fmt::Display for StoppingRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, s) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "}}")
    }
}

/// Serialized as the sorted list of member indices.
impl Serialize for StoppingRegion {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.len()))?;
        for s in self.iter() {
            seq.serialize_element(&s)?;
        }
        seq.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_cover_powerset() {
        let r = StoppingRegion::from_states([1, 3, 4]);
        let subs: Vec<_> = r.subsets().collect();
        assert_eq!(subs.len(), 8);
        assert!(subs.iter().all(|s| s.is_subset(r)));
        assert!(subs.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(StoppingRegion::empty().subsets().count(), 1);
    }

    #[test]
    fn full_and_complement() {
        assert_eq!(StoppingRegion::full(3).bits(), 0b111);
        assert_eq!(StoppingRegion::full(64).len(), 64);
        let a = StoppingRegion::from_states([0, 2]);
        assert_eq!(a.complement(3), StoppingRegion::from_states([1]));
        assert_eq!(a.iter().collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(a.to_string(), "{0,2}");
    }
}
