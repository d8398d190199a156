//! Synthetic affine-transform graph pairs.
//!
//! Side A holds `nodes` uniform random points in the image rectangle with
//! unit-normal descriptors. Side B is the same point set after a random
//! similarity transform (scale, rotation about the origin, translation),
//! with optionally noisy copies of the descriptors, listed in a shuffled
//! order. Each pair depends only on `(seed, index)`.

use std::f64::consts::PI;

use clapgm_core::{GraphSide, HardAssignment, Point};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub pairs: usize,
    pub nodes: usize,
    pub width: f64,
    pub height: f64,
    /// Half-open `[lo, hi)`; `lo == hi` pins the value.
    pub scale_range: (f64, f64),
    pub rotation_range: (f64, f64),
    /// Translation is drawn from `[-w·f, w·f) x [-h·f, h·f)`.
    pub translation_fraction: f64,
    pub descriptor_dim: usize,
    pub descriptor_noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            pairs: 1000,
            nodes: 10,
            width: 256.0,
            height: 256.0,
            scale_range: (0.5, 1.0),
            rotation_range: (-PI, PI),
            translation_fraction: 0.25,
            descriptor_dim: 1024,
            descriptor_noise: 0.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Usage(msg.to_string()));
        if self.pairs == 0 {
            return bad("pairs must be at least 1");
        }
        if self.nodes == 0 {
            return bad("nodes must be at least 1");
        }
        if self.descriptor_dim == 0 {
            return bad("descriptor_dim must be at least 1");
        }
        if !(self.width > 0.0 && self.height > 0.0) {
            return bad("image width and height must be positive");
        }
        let (s0, s1) = self.scale_range;
        if !(s0 > 0.0 && s0 <= s1) {
            return bad("scale range must satisfy 0 < lo <= hi");
        }
        let (r0, r1) = self.rotation_range;
        if !(r0 <= r1) {
            return bad("rotation range must satisfy lo <= hi");
        }
        if !(self.translation_fraction >= 0.0) {
            return bad("translation fraction must be nonnegative");
        }
        if !(self.descriptor_noise >= 0.0) {
            return bad("descriptor noise must be nonnegative");
        }
        Ok(())
    }

    /// One-line label of the descriptor model, carried into reports.
    pub fn descriptor_model(&self) -> String {
        format!(
            "synthetic unit-normal descriptors, dim {}, gaussian noise sigma {}",
            self.descriptor_dim, self.descriptor_noise
        )
    }
}

/// The similarity transform applied to side A.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub scale: f64,
    pub rotation: f64,
    pub translation: [f64; 2],
}

impl Affine {
    pub fn apply(&self, p: Point) -> Point {
        let (s, c) = self.rotation.sin_cos();
        [
            self.scale * (c * p[0] - s * p[1]) + self.translation[0],
            self.scale * (s * p[0] + c * p[1]) + self.translation[1],
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPair {
    pub index: usize,
    pub a: GraphSide,
    pub b: GraphSide,
    pub truth: HardAssignment,
    pub transform: Affine,
}

fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

fn unit_normal(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

pub fn pair_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

pub fn gen_pair(config: &SynthConfig, index: usize) -> Result<SyntheticPair> {
    config.validate()?;
    let mut rng = pair_rng(config.seed, index);
    let n = config.nodes;

    let points: Vec<Point> = (0..n)
        .map(|_| {
            [
                uniform(&mut rng, 0.0, config.width),
                uniform(&mut rng, 0.0, config.height),
            ]
        })
        .collect();
    let descriptors: Vec<Vec<f64>> = (0..n).map(|_| unit_normal(&mut rng, config.descriptor_dim)).collect();

    let tx = config.width * config.translation_fraction;
    let ty = config.height * config.translation_fraction;
    let transform = Affine {
        scale: uniform(&mut rng, config.scale_range.0, config.scale_range.1),
        rotation: uniform(&mut rng, config.rotation_range.0, config.rotation_range.1),
        translation: [uniform(&mut rng, -tx, tx), uniform(&mut rng, -ty, ty)],
    };

    // node i of A lands at slot target[i] of B
    let mut target: Vec<usize> = (0..n).collect();
    target.shuffle(&mut rng);

    let noise = Normal::new(0.0, config.descriptor_noise).expect("validated noise");
    let mut b_points = vec![[0.0; 2]; n];
    let mut b_descriptors = vec![Vec::new(); n];
    for i in 0..n {
        b_points[target[i]] = transform.apply(points[i]);
        b_descriptors[target[i]] = if config.descriptor_noise == 0.0 {
            descriptors[i].clone()
        } else {
            let noisy: Vec<f64> = descriptors[i].iter().map(|x| x + noise.sample(&mut rng)).collect();
            let norm = noisy.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                noisy.into_iter().map(|x| x / norm).collect()
            } else {
                descriptors[i].clone()
            }
        };
    }

    Ok(SyntheticPair {
        index,
        a: GraphSide::new(points, descriptors)?,
        b: GraphSide::new(b_points, b_descriptors)?,
        truth: HardAssignment::from_mapping(n, target)?,
        transform,
    })
}
