//! Counter-based deterministic random numbers.
//!
//! Every draw is a pure function of (seed, counter), so streams are
//! reproducible byte-for-byte across platforms and independent of call
//! order when indexed explicitly.

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Raw output for a (seed, counter) pair.
pub fn at(seed: u64, counter: u64) -> u64 {
    mix(seed.wrapping_add(counter.wrapping_mul(GOLDEN_GAMMA)).wrapping_add(GOLDEN_GAMMA))
}

/// Sequential counter-based generator.
#[derive(Debug, Clone)]
pub struct CounterRng {
    seed: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed, counter: 0 }
    }

    /// Derive an independent stream, e.g. one per frame or per sample.
    pub fn substream(seed: u64, stream: u64) -> Self {
        CounterRng {
            seed: mix(seed ^ stream.wrapping_mul(GOLDEN_GAMMA)),
            counter: 0,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = at(self.seed, self.counter);
        self.counter += 1;
        v
    }

    /// Uniform in (0, 1]; never returns 0 so it is safe under `ln`.
    pub fn next_uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 1.0) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform in [lo, hi).
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0);
        lo + u * (hi - lo)
    }

    /// Uniform index in [0, n).
    pub fn next_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.next_u64() % n as u64) as usize
    }

    /// Standard normal via Box-Muller.
    pub fn next_gaussian_pair(&mut self) -> (f64, f64) {
        let u1 = self.next_uniform();
        let u2 = self.next_uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let a = std::f64::consts::TAU * u2;
        (r * a.cos(), r * a.sin())
    }

    pub fn next_gaussian(&mut self) -> f64 {
        self.next_gaussian_pair().0
    }
}
