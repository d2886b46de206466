//! Deterministic random streams.
//!
//! The generator is xorshift64* (Vigna 2016): state `s` is advanced by
//! `s ^= s >> 12; s ^= s << 25; s ^= s >> 27` and the output is
//! `s * 0x2545F4914F6CDD1D`. Seeds are expanded through one SplitMix64 step so
//! that small or zero seeds still give a nonzero, well-mixed state.
//!
//! Independent streams are derived with [`DetRng::substream`]: the child seed is
//! `splitmix64(parent_seed ^ fnv1a64(label))`. Everything here is plain integer
//! arithmetic so the streams are reproducible from other languages.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct DetRng {
    seed: u64,
    state: u64,
}

impl DetRng {
    pub fn new(seed: u64) -> Self {
        let mut state = splitmix64(seed);
        if state == 0 {
            state = 0x9e37_79b9_7f4a_7c15;
        }
        DetRng { seed, state }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Child stream for a named purpose; independent of how much of `self`
    /// has been consumed.
    pub fn substream(&self, label: &str) -> DetRng {
        DetRng::new(splitmix64(self.seed ^ fnv1a64(label.as_bytes())))
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut s = self.state;
        s ^= s >> 12;
        s ^= s << 25;
        s ^= s >> 27;
        self.state = s;
        s.wrapping_mul(0x2545_f491_4f6c_dd1d)
    }

    /// Uniform in `0..bound` by rejection (no modulo bias).
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let zone = u64::MAX - (u64::MAX % bound) - 1;
        loop {
            let x = self.next_u64();
            if x <= zone {
                return x % bound;
            }
        }
    }

    pub fn index(&mut self, len: usize) -> usize {
        self.below(len as u64) as usize
    }

    /// Fisher-Yates, swapping position `i` with a uniform `j <= i` from the top.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }

    /// `k` distinct elements of `0..n`, in increasing order.
    pub fn sample_subset(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n);
        // Floyd's algorithm.
        let mut chosen = std::collections::BTreeSet::new();
        for j in (n - k)..n {
            let t = self.index(j + 1);
            if !chosen.insert(t) {
                chosen.insert(j);
            }
        }
        chosen.into_iter().collect()
    }

    pub fn bernoulli(&mut self, num: u64, den: u64) -> bool {
        self.below(den) < num
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_and_labelled() {
        let a: Vec<u64> = {
            let mut r = DetRng::new(7);
            (0..4).map(|_| r.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut r = DetRng::new(7);
            (0..4).map(|_| r.next_u64()).collect()
        };
        assert_eq!(a, b);
        let root = DetRng::new(7);
        let mut x = root.substream("graph");
        let mut y = root.substream("errors");
        assert_ne!(x.next_u64(), y.next_u64());
        let mut consumed = DetRng::new(7);
        consumed.next_u64();
        assert_eq!(consumed.substream("graph").next_u64(), root.substream("graph").next_u64());
    }

    #[test]
    fn zero_seed_is_usable() {
        let mut r = DetRng::new(0);
        assert_ne!(r.next_u64(), 0);
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut r = DetRng::new(3);
        let mut v: Vec<usize> = (0..50).collect();
        r.shuffle(&mut v);
        let mut s = v.clone();
        s.sort();
        assert_eq!(s, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn subset_sampling() {
        let mut r = DetRng::new(11);
        for _ in 0..100 {
            let s = r.sample_subset(10, 4);
            assert_eq!(s.len(), 4);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            assert!(s.iter().all(|&x| x < 10));
        }
    }

    #[test]
    fn below_covers_range() {
        let mut r = DetRng::new(5);
        let mut seen = [false; 6];
        for _ in 0..600 {
            seen[r.below(6) as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }
}
