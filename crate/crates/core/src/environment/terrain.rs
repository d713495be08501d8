use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EnvError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerrainSpec {
    pub seed: u64,
    /// Grid nodes along x.
    pub width: usize,
    /// Grid nodes along z.
    pub depth: usize,
    pub cell_size: f64,
    pub amplitude: f64,
    pub frequency: f64,
    pub octaves: u32,
    pub persistence: f64,
}

impl TerrainSpec {
    pub fn validate(&self) -> Result<(), EnvError> {
        if self.width < 2 || self.depth < 2 {
            return Err(EnvError::InvalidSpec(
                "terrain grid needs at least 2x2 nodes",
            ));
        }
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return Err(EnvError::InvalidSpec("cell_size must be positive"));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(EnvError::InvalidSpec("amplitude must be non-negative"));
        }
        if !self.frequency.is_finite() {
            return Err(EnvError::InvalidSpec("frequency must be finite"));
        }
        if self.octaves == 0 {
            return Err(EnvError::InvalidSpec("octaves must be at least 1"));
        }
        if !(self.persistence > 0.0 && self.persistence <= 1.0) {
            return Err(EnvError::InvalidSpec("persistence must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Largest possible |height|: `amplitude * sum(persistence^o)`.
    pub fn height_bound(&self) -> f64 {
        let mut w = 1.0;
        let mut sum = 0.0;
        for _ in 0..self.octaves {
            sum += w;
            w *= self.persistence;
        }
        self.amplitude * sum
    }
}

/// Classic 2-D gradient noise over a seed-shuffled permutation table.
///
/// Gradients are the eight unit vectors at 45° steps, which keeps
/// `|noise| <= sqrt(2)/2 < 1`.
#[derive(Clone)]
pub struct Perlin {
    perm: [u8; 512],
}

const GRADIENTS: [(f64, f64); 8] = [
    (1.0, 0.0),
    (
        core::f64::consts::FRAC_1_SQRT_2,
        core::f64::consts::FRAC_1_SQRT_2,
    ),
    (0.0, 1.0),
    (
        -core::f64::consts::FRAC_1_SQRT_2,
        core::f64::consts::FRAC_1_SQRT_2,
    ),
    (-1.0, 0.0),
    (
        -core::f64::consts::FRAC_1_SQRT_2,
        -core::f64::consts::FRAC_1_SQRT_2,
    ),
    (0.0, -1.0),
    (
        core::f64::consts::FRAC_1_SQRT_2,
        -core::f64::consts::FRAC_1_SQRT_2,
    ),
];

fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + t * (b - a)
}

impl Perlin {
    pub fn new(seed: u64) -> Self {
        let mut table: [u8; 256] = core::array::from_fn(|i| i as u8);
        table.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut perm = [0u8; 512];
        for i in 0..512 {
            perm[i] = table[i & 255];
        }
        Perlin { perm }
    }

    fn grad(&self, xi: i64, yi: i64, dx: f64, dy: f64) -> f64 {
        let h = self.perm[self.perm[(xi & 255) as usize] as usize + (yi & 255) as usize];
        let (gx, gy) = GRADIENTS[(h & 7) as usize];
        gx * dx + gy * dy
    }

    pub fn noise(&self, x: f64, y: f64) -> f64 {
        let x0 = libm::floor(x);
        let y0 = libm::floor(y);
        let (xi, yi) = (x0 as i64, y0 as i64);
        let (dx, dy) = (x - x0, y - y0);
        let u = fade(dx);
        let v = fade(dy);
        let n00 = self.grad(xi, yi, dx, dy);
        let n10 = self.grad(xi + 1, yi, dx - 1.0, dy);
        let n01 = self.grad(xi, yi + 1, dx, dy - 1.0);
        let n11 = self.grad(xi + 1, yi + 1, dx - 1.0, dy - 1.0);
        lerp(lerp(n00, n10, u), lerp(n01, n11, u), v)
    }
}

/// Node heights, row-major with rows along z. Node `(i, j)` sits at
/// `x = i * cell_size`, `z = j * cell_size`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heightmap {
    pub width: usize,
    pub depth: usize,
    pub cell_size: f64,
    pub heights: Vec<f64>,
}

impl Heightmap {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.heights[j * self.width + i]
    }

    pub fn extent(&self) -> (f64, f64) {
        (
            (self.width - 1) as f64 * self.cell_size,
            (self.depth - 1) as f64 * self.cell_size,
        )
    }

    pub fn contains(&self, x: f64, z: f64) -> bool {
        let (ex, ez) = self.extent();
        (0.0..=ex).contains(&x) && (0.0..=ez).contains(&z)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.heights.chunks(self.width)
    }
}

/// Octave sum evaluated at an arbitrary point.
pub fn fractal_height(spec: &TerrainSpec, noise: &Perlin, x: f64, z: f64) -> f64 {
    let mut h = 0.0;
    let mut weight = 1.0;
    let mut freq = spec.frequency;
    for _ in 0..spec.octaves {
        h += weight * noise.noise(freq * x, freq * z);
        weight *= spec.persistence;
        freq *= 2.0;
    }
    spec.amplitude * h
}

pub fn generate_terrain(spec: &TerrainSpec) -> Result<Heightmap, EnvError> {
    spec.validate()?;
    let noise = Perlin::new(spec.seed);
    let mut heights = Vec::with_capacity(spec.width * spec.depth);
    for j in 0..spec.depth {
        for i in 0..spec.width {
            let x = i as f64 * spec.cell_size;
            let z = j as f64 * spec.cell_size;
            heights.push(fractal_height(spec, &noise, x, z));
        }
    }
    Ok(Heightmap {
        width: spec.width,
        depth: spec.depth,
        cell_size: spec.cell_size,
        heights,
    })
}

/// Bilinear height at `(x, z)`.
pub fn terrain_height(grid: &Heightmap, x: f64, z: f64) -> Result<f64, EnvError> {
    if !grid.contains(x, z) {
        return Err(EnvError::OutOfExtent { x, z });
    }
    let fx = x / grid.cell_size;
    let fz = z / grid.cell_size;
    let i = (libm::floor(fx) as usize).min(grid.width - 2);
    let j = (libm::floor(fz) as usize).min(grid.depth - 2);
    let tx = fx - i as f64;
    let tz = fz - j as f64;
    let h0 = lerp(grid.at(i, j), grid.at(i + 1, j), tx);
    let h1 = lerp(grid.at(i, j + 1), grid.at(i + 1, j + 1), tx);
    Ok(lerp(h0, h1, tz))
}
