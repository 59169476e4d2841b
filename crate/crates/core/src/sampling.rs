//! Deterministic low-discrepancy sampling of spheres and balls.
//!
//! Points come from a Halton sequence with a Cranley-Patterson rotation drawn
//! from a seeded ChaCha generator, so every verdict built on samples is
//! reproducible from `(seed, count)`.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 0x5eed_2024;

const PRIMES: [u32; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while index > 0 {
        out += f * (index % b) as f64;
        index /= b;
        f *= inv;
    }
    out
}

/// Rotated Halton sequence in `[0,1)^dim`.
#[derive(Debug, Clone)]
pub struct Halton {
    shift: Vec<f64>,
    index: u64,
}

impl Halton {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim <= PRIMES.len(), "Halton dimension limited to {}", PRIMES.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Halton {
            shift: (0..dim).map(|_| rng.gen::<f64>()).collect(),
            index: 1,
        }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        let i = self.index;
        self.index += 1;
        self.shift
            .iter()
            .zip(PRIMES.iter())
            .map(|(s, &p)| (radical_inverse(i, p) + s).fract())
            .collect()
    }
}

fn gaussian_pair(u1: f64, u2: f64) -> (f64, f64) {
    let r = (-2.0 * u1.max(1e-300).ln()).sqrt();
    let t = std::f64::consts::TAU * u2;
    (r * t.cos(), r * t.sin())
}

/// `count` unit vectors in `R^dim`. The set is antipodally symmetric: every
/// direction is followed by its negation (so `count` is rounded up to even).
pub fn sphere_directions(dim: usize, count: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut out = Vec::with_capacity(count + 1);
    if dim == 0 {
        return out;
    }
    if dim == 1 {
        while out.len() < count {
            out.push(DVector::from_element(1, 1.0));
            out.push(DVector::from_element(1, -1.0));
        }
        return out;
    }
    if dim == 2 {
        // evenly spaced angles with a seeded offset
        let half = count.div_ceil(2).max(1);
        let offset = Halton::new(1, seed).next_point()[0];
        for k in 0..half {
            let t = std::f64::consts::PI * (k as f64 + offset) / half as f64;
            let d = DVector::from_vec(vec![t.cos(), t.sin()]);
            out.push(d.clone());
            out.push(-d);
        }
        return out;
    }
    let pairs = dim.div_ceil(2);
    let mut seq = Halton::new(2 * pairs, seed);
    while out.len() < count {
        let u = seq.next_point();
        let mut g = Vec::with_capacity(2 * pairs);
        for p in 0..pairs {
            let (a, b) = gaussian_pair(u[2 * p], u[2 * p + 1]);
            g.push(a);
            g.push(b);
        }
        g.truncate(dim);
        let v = DVector::from_vec(g);
        let n = v.norm();
        if n > 1e-12 {
            let d = v / n;
            out.push(d.clone());
            out.push(-d);
        }
    }
    out
}

/// `count` points of the closed ball `B(center, radius)`, uniformly spread.
pub fn ball_points(center: &DVector<f64>, radius: f64, count: usize, seed: u64) -> Vec<DVector<f64>> {
    let dim = center.len();
    let dirs = sphere_directions(dim, count, seed);
    let mut radial = Halton::new(1, seed ^ 0x9e37_79b9_7f4a_7c15);
    dirs.into_iter()
        .take(count)
        .map(|d| {
            let s = radial.next_point()[0].powf(1.0 / dim.max(1) as f64);
            center + d * (radius * s)
        })
        .collect()
}

/// `±e_i` for every coordinate.
pub fn coordinate_directions(dim: usize) -> Vec<DVector<f64>> {
    let mut out = Vec::with_capacity(2 * dim);
    for i in 0..dim {
        let mut e = DVector::zeros(dim);
        e[i] = 1.0;
        out.push(e.clone());
        out.push(-e);
    }
    out
}
