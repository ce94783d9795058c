//! Deterministic random number generation.
//!
//! The toolkit pins its own generator and variate algorithms so that a seed
//! identifies the produced dataset bytes on every platform with IEEE-754
//! doubles. The stream layout (which draw consumes which uniform) is part of
//! that contract and must not be reordered.

/// SplitMix64 generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in the open interval (0, 1), 53-bit resolution.
    pub fn uniform_open(&mut self) -> f64 {
        loop {
            let x = (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0);
            if x > 0.0 {
                return x;
            }
        }
    }

    /// Uniform draw in [0, 1) as `next_u64 / 2^64`; used for Bernoulli draws.
    pub fn uniform_bernoulli(&mut self) -> f64 {
        self.next_u64() as f64 * 2f64.powi(-64)
    }

    /// Standard normal via Box-Muller (two uniforms per draw, cosine branch).
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform_open();
        let u2 = self.uniform_open();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Gamma(shape, 1) via Marsaglia-Tsang, with the u^(1/shape) boost for
    /// shape < 1.
    pub fn gamma(&mut self, shape: f64) -> f64 {
        assert!(shape > 0.0 && shape.is_finite(), "gamma shape must be positive");
        if shape < 1.0 {
            let g = self.gamma(shape + 1.0);
            let u = self.uniform_open();
            return g * u.powf(1.0 / shape);
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.normal();
            let t = 1.0 + c * x;
            if t <= 0.0 {
                continue;
            }
            let v = t * t * t;
            let u = self.uniform_open();
            if u.ln() < 0.5 * x * x + d - d * v + d * v.ln() {
                return d * v;
            }
        }
    }

    /// Beta(a1, a2) variate via the gamma-ratio method.
    pub fn beta(&mut self, a1: f64, a2: f64) -> f64 {
        let x = self.gamma(a1);
        let y = self.gamma(a2);
        if x + y == 0.0 {
            return 0.5;
        }
        x / (x + y)
    }

    /// Fisher-Yates shuffle of indices 0..n.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = (self.next_u64() % (i as u64 + 1)) as usize;
            idx.swap(i, j);
        }
        idx
    }
}

/// Mix an arbitrary list of 64-bit words into one seed (splitmix finalizer
/// chain). Used to derive independent per-trial seeds in the benchmark.
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut acc: u64 = 0x243F_6A88_85A3_08D3; // pi fractional bits
    for &p in parts {
        acc ^= p;
        let mut rng = SplitMix64::new(acc);
        acc = rng.next_u64();
    }
    acc
}
