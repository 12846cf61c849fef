//! Synthetic skeletal movement.
//!
//! A kinematic tree (the sensor's 25-joint topology, or a plain chain for
//! other joint counts) is animated by a small set of latent "movement factors".
//! Each factor is a sum of low-frequency sinusoids with seeded frequencies,
//! phases and amplitudes; every joint's local Euler angles and the root
//! translation are seeded linear mixtures of the factors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Corpus, PoseFrame, JOINT_COUNT};
use crate::error::{Error, Result};

const FACTOR_COUNT: usize = 20;
const SINUSOIDS_PER_FACTOR: usize = 7;
const FREQ_RANGE_HZ: (f64, f64) = (0.1, 0.8);
const FACTORS_PER_ANGLE: usize = 3;
const ANGLE_SCALE_RAD: f64 = 0.3;
const ROOT_SWAY_M: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub duration_s: f64,
    pub frame_rate_hz: f64,
    pub joint_count: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            duration_s: 600.0,
            frame_rate_hz: 30.0,
            joint_count: JOINT_COUNT,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn frame_count(&self) -> usize {
        (self.duration_s * self.frame_rate_hz).round() as usize
    }
}

// (parent, rest offset from parent in metres); parents precede children.
const KINECT_ORDER: [usize; 25] = [
    0, 1, 20, 2, 3, 4, 5, 6, 7, 21, 22, 8, 9, 10, 11, 23, 24, 12, 13, 14, 15, 16, 17, 18, 19,
];

fn kinect_bone(joint: usize) -> (Option<usize>, [f64; 3]) {
    match joint {
        0 => (None, [0.0, 0.0, 0.0]),
        1 => (Some(0), [0.0, 0.30, 0.0]),
        2 => (Some(20), [0.0, 0.10, 0.0]),
        3 => (Some(2), [0.0, 0.15, 0.0]),
        4 => (Some(20), [0.18, -0.05, 0.0]),
        5 => (Some(4), [0.28, 0.0, 0.0]),
        6 => (Some(5), [0.25, 0.0, 0.0]),
        7 => (Some(6), [0.08, 0.0, 0.0]),
        8 => (Some(20), [-0.18, -0.05, 0.0]),
        9 => (Some(8), [-0.28, 0.0, 0.0]),
        10 => (Some(9), [-0.25, 0.0, 0.0]),
        11 => (Some(10), [-0.08, 0.0, 0.0]),
        12 => (Some(0), [0.09, -0.05, 0.0]),
        13 => (Some(12), [0.0, -0.42, 0.0]),
        14 => (Some(13), [0.0, -0.40, 0.0]),
        15 => (Some(14), [0.0, -0.05, 0.12]),
        16 => (Some(0), [-0.09, -0.05, 0.0]),
        17 => (Some(16), [0.0, -0.42, 0.0]),
        18 => (Some(17), [0.0, -0.40, 0.0]),
        19 => (Some(18), [0.0, -0.05, 0.12]),
        20 => (Some(1), [0.0, 0.25, 0.0]),
        21 => (Some(7), [0.06, 0.0, 0.0]),
        22 => (Some(7), [0.03, 0.0, 0.03]),
        23 => (Some(11), [-0.06, 0.0, 0.0]),
        24 => (Some(11), [-0.03, 0.0, 0.03]),
        _ => unreachable!("kinect skeleton has 25 joints"),
    }
}

struct Skeleton {
    order: Vec<usize>,
    parent: Vec<Option<usize>>,
    offset: Vec<[f64; 3]>,
}

impl Skeleton {
    fn new(joint_count: usize) -> Self {
        if joint_count == JOINT_COUNT {
            let (parent, offset) = (0..JOINT_COUNT).map(kinect_bone).unzip();
            Self {
                order: KINECT_ORDER.to_vec(),
                parent,
                offset,
            }
        } else {
            Self {
                order: (0..joint_count).collect(),
                parent: (0..joint_count).map(|j| j.checked_sub(1)).collect(),
                offset: (0..joint_count)
                    .map(|j| if j == 0 { [0.0; 3] } else { [0.0, 0.2, 0.0] })
                    .collect(),
            }
        }
    }
}

struct Sinusoid {
    amplitude: f64,
    omega: f64,
    phase: f64,
}

/// Sum of sinusoids scaled to unit variance.
struct Factor(Vec<Sinusoid>);

impl Factor {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let mut parts: Vec<Sinusoid> = (0..SINUSOIDS_PER_FACTOR)
            .map(|_| Sinusoid {
                amplitude: rng.random_range(0.5..1.0),
                omega: std::f64::consts::TAU * rng.random_range(FREQ_RANGE_HZ.0..FREQ_RANGE_HZ.1),
                phase: rng.random_range(0.0..std::f64::consts::TAU),
            })
            .collect();
        // variance of Σ a sin(ωt+φ) is Σ a²/2
        let var: f64 = parts.iter().map(|p| p.amplitude * p.amplitude / 2.0).sum();
        let scale = var.sqrt().recip();
        for p in &mut parts {
            p.amplitude *= scale;
        }
        Self(parts)
    }

    fn at(&self, t: f64) -> f64 {
        self.0
            .iter()
            .map(|p| p.amplitude * (p.omega * t + p.phase).sin())
            .sum()
    }
}

/// Seeded sparse mixing of factors into one scalar channel.
struct Mix(Vec<(usize, f64)>);

impl Mix {
    fn random(rng: &mut ChaCha8Rng, scale: f64) -> Self {
        Self(
            (0..FACTORS_PER_ANGLE)
                .map(|_| {
                    let w: f64 = StandardNormal.sample(rng);
                    (rng.random_range(0..FACTOR_COUNT), w * scale)
                })
                .collect(),
        )
    }

    fn eval(&self, factors: &[f64]) -> f64 {
        self.0.iter().map(|&(f, w)| w * factors[f]).sum()
    }
}

type Mat3 = [[f64; 3]; 3];

fn euler_zyx(a: [f64; 3]) -> Mat3 {
    let (sx, cx) = a[0].sin_cos();
    let (sy, cy) = a[1].sin_cos();
    let (sz, cz) = a[2].sin_cos();
    [
        [cz * cy, cz * sy * sx - sz * cx, cz * sy * cx + sz * sx],
        [sz * cy, sz * sy * sx + cz * cx, sz * sy * cx - cz * sx],
        [-sy, cy * sx, cy * cx],
    ]
}

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn mat_vec(a: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2])
}

/// Deterministic synthetic corpus: `round(duration_s · frame_rate_hz)` frames
/// of `3 · joint_count` values.
pub fn generate_synthetic(config: &SynthConfig) -> Result<Corpus> {
    if !(config.duration_s.is_finite() && config.duration_s > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "duration must be positive, got {}",
            config.duration_s
        )));
    }
    if !(config.frame_rate_hz.is_finite() && config.frame_rate_hz > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "frame rate must be positive, got {}",
            config.frame_rate_hz
        )));
    }
    if config.joint_count == 0 {
        return Err(Error::InvalidConfig("joint_count must be positive".into()));
    }
    let n = config.frame_count();
    if n == 0 {
        return Err(Error::InvalidConfig(
            "duration × frame rate rounds to zero frames".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let skeleton = Skeleton::new(config.joint_count);
    let factors: Vec<Factor> = (0..FACTOR_COUNT)
        .map(|_| Factor::random(&mut rng))
        .collect();
    let angle_mix: Vec<[Mix; 3]> = (0..config.joint_count)
        .map(|_| {
            [(); 3].map(|_| {
                Mix::random(
                    &mut rng,
                    ANGLE_SCALE_RAD / (FACTORS_PER_ANGLE as f64).sqrt(),
                )
            })
        })
        .collect();
    let root_mix: [Mix; 3] =
        [(); 3].map(|_| Mix::random(&mut rng, ROOT_SWAY_M / (FACTORS_PER_ANGLE as f64).sqrt()));
    let root_home = [0.0, 0.9, 2.5];

    let mut frames = Vec::with_capacity(n);
    let mut factor_values = vec![0.0; FACTOR_COUNT];
    let mut position = vec![[0.0f64; 3]; config.joint_count];
    let mut rotation = vec![[[0.0f64; 3]; 3]; config.joint_count];
    for i in 0..n {
        let t = i as f64 / config.frame_rate_hz;
        for (v, f) in factor_values.iter_mut().zip(&factors) {
            *v = f.at(t);
        }
        for &j in &skeleton.order {
            let local = euler_zyx(angle_mix[j].each_ref().map(|m| m.eval(&factor_values)));
            match skeleton.parent[j] {
                None => {
                    let sway = root_mix.each_ref().map(|m| m.eval(&factor_values));
                    position[j] = [0, 1, 2].map(|k| root_home[k] + sway[k]);
                    rotation[j] = local;
                }
                Some(p) => {
                    let step = mat_vec(&rotation[p], &skeleton.offset[j]);
                    position[j] = [0, 1, 2].map(|k| position[p][k] + step[k]);
                    rotation[j] = mat_mul(&rotation[p], &local);
                }
            }
        }
        let values = position
            .iter()
            .flat_map(|p| p.iter().map(|&v| v as f32))
            .collect();
        frames.push(PoseFrame::with_any_dim(values, t)?);
    }
    Corpus::new(
        frames,
        config.frame_rate_hz,
        format!("synthetic(seed={})", config.seed),
    )
}
