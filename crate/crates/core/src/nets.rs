//! ε-nets on spheres, the volumetric cardinality cap, net-based operator-norm
//! certificates and integer-lattice nets of LCD level sets.

use std::io::Write;

use num_bigint::BigUint;
use num_rational::BigRational;

use crate::ensembles::{unit_vector, SeedPath};
use crate::error::ensure;
use crate::{par, Error, RealMatrix, RealVector, Result};

/// Largest number of integer points a lattice net may enumerate.
pub const LATTICE_BUDGET: f64 = 1e7;

/// A maximal ε-separated set of unit vectors in `Rⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereNet {
    pub n: usize,
    pub eps: f64,
    pub points: Vec<RealVector>,
}

/// Options of the greedy construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetOptions {
    /// Stop after `streak_factor · |net| + streak_base` consecutive rejections.
    pub streak_factor: usize,
    pub streak_base: usize,
}

impl Default for NetOptions {
    fn default() -> Self {
        Self { streak_factor: 10, streak_base: 1000 }
    }
}

fn dist(a: &RealVector, b: &RealVector) -> f64 {
    (a - b).norm()
}

/// Greedy maximal ε-separated set with default stopping rule.
pub fn build_sphere_net(n: usize, eps: f64, seed: &SeedPath) -> Result<SphereNet> {
    build_sphere_net_with(n, eps, seed, NetOptions::default())
}

/// Greedy maximal ε-separated set: unit candidates from a seeded stream are
/// kept when at distance ≥ ε from every kept point.
pub fn build_sphere_net_with(n: usize, eps: f64, seed: &SeedPath, opts: NetOptions) -> Result<SphereNet> {
    ensure!(n >= 1, Validation, "dimension must be >= 1");
    ensure!(eps > 0.0 && eps.is_finite(), Validation, "mesh must be positive, got {eps}");
    let unit = |i: usize| {
        let mut v = RealVector::zeros(n);
        v[i] = 1.0;
        v
    };
    if n == 1 {
        let points = if eps > 2.0 { vec![unit(0)] } else { vec![unit(0), -unit(0)] };
        return Ok(SphereNet { n, eps, points });
    }
    if eps >= 2.0 {
        // Distances on the sphere never exceed 2.
        let points = if eps == 2.0 { vec![unit(0), -unit(0)] } else { vec![unit(0)] };
        return Ok(SphereNet { n, eps, points });
    }
    let mut rng = seed.rng();
    let mut points: Vec<RealVector> = Vec::new();
    let mut streak = 0usize;
    while streak < opts.streak_factor * points.len() + opts.streak_base {
        let c = unit_vector(n, &mut rng);
        if points.iter().all(|p| dist(p, &c) >= eps) {
            points.push(c);
            streak = 0;
        } else {
            streak += 1;
        }
    }
    Ok(SphereNet { n, eps, points })
}

impl SphereNet {
    /// Smallest pairwise distance (infinite for fewer than two points).
    pub fn min_separation(&self) -> f64 {
        let m = self.points.len();
        par::map_range(m, |i| {
            (i + 1..m)
                .map(|j| dist(&self.points[i], &self.points[j]))
                .fold(f64::INFINITY, f64::min)
        })
        .into_iter()
        .fold(f64::INFINITY, f64::min)
    }

    /// Distance from `x` to the nearest net point.
    pub fn distance_to(&self, x: &RealVector) -> f64 {
        self.points.iter().map(|p| dist(p, x)).fold(f64::INFINITY, f64::min)
    }

    /// Number of `tests` random unit vectors farther than ε from the net.
    pub fn covering_misses(&self, tests: usize, seed: &SeedPath) -> usize {
        const BLOCK: usize = 1024;
        let blocks = tests.div_ceil(BLOCK);
        par::map_range(blocks, |b| {
            let mut rng = seed.trial(b as u64).rng();
            let len = BLOCK.min(tests - b * BLOCK);
            (0..len)
                .filter(|_| self.distance_to(&unit_vector(self.n, &mut rng)) > self.eps)
                .count()
        })
        .into_iter()
        .sum()
    }
}

/// `⌈(3/ε)ⁿ⌉`, the volumetric cap on an ε-net of `S^{n−1}`, for ε ∈ (0, 1).
/// Evaluated exactly from the binary value of `3/ε`.
pub fn volumetric_cap(n: usize, eps: f64) -> Result<BigUint> {
    ensure!(eps > 0.0 && eps < 1.0, Validation, "volumetric cap needs eps in (0, 1), got {eps}");
    let ratio = BigRational::from_float(3.0 / eps).expect("finite ratio");
    let power = ratio.pow(n as i32);
    let cap = power.ceil().to_integer();
    Ok(cap.to_biguint().expect("positive cap"))
}

/// `4 · max_{x∈N, y∈M} |⟨Mx, y⟩|` over nets of `S^{n−1}` and `S^{N−1}`.
pub fn certify_operator_norm(m: &RealMatrix, x_net: &SphereNet, y_net: &SphereNet) -> Result<f64> {
    ensure!(
        x_net.n == m.ncols() && y_net.n == m.nrows(),
        Dimension,
        "nets on S^{}, S^{} do not fit a {}x{} matrix",
        x_net.n - 1,
        y_net.n - 1,
        m.nrows(),
        m.ncols()
    );
    let best = par::map_slice(&x_net.points, |x| {
        let mx = m * x;
        y_net
            .points
            .iter()
            .map(|y| mx.dot(y).abs())
            .fold(0.0, f64::max)
    })
    .into_iter()
    .fold(0.0, f64::max);
    Ok(4.0 * best)
}

/// Normalized nonzero integer points of the ball of radius `3D`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeNet {
    pub n: usize,
    pub level: f64,
    pub alpha: f64,
    /// Integer vectors in lexicographic order; distinct multiples of one
    /// direction are all kept.
    pub integer_points: Vec<Vec<i64>>,
    pub points: Vec<RealVector>,
}

fn ball_volume(n: usize, r: f64) -> f64 {
    let half = n as f64 / 2.0;
    std::f64::consts::PI.powf(half) / statrs::function::gamma::gamma(half + 1.0) * r.powi(n as i32)
}

/// Enumerate the integer ball of radius `3D` lexicographically over the
/// bounding box and normalize; the mesh `4α/D` must not exceed 1.
pub fn build_lattice_net(n: usize, level: f64, alpha: f64) -> Result<LatticeNet> {
    ensure!((1..=4).contains(&n), Validation, "lattice nets need 1 <= n <= 4, got {n}");
    ensure!(level > 0.0 && alpha > 0.0, Validation, "level and alpha must be positive");
    ensure!(4.0 * alpha / level <= 1.0, Validation, "mesh 4*alpha/D = {} exceeds 1", 4.0 * alpha / level);
    let r = 3.0 * level;
    let estimate = ball_volume(n, r);
    ensure!(
        estimate <= LATTICE_BUDGET,
        Resource,
        "integer ball of radius {r} in dimension {n} holds about {estimate:.0} points (budget {LATTICE_BUDGET:.0})"
    );
    let bound = r.floor() as i64;
    let r2 = r * r;
    let mut integer_points = Vec::new();
    let mut p = vec![-bound; n];
    loop {
        let norm2: i64 = p.iter().map(|v| v * v).sum();
        if norm2 != 0 && (norm2 as f64) <= r2 {
            integer_points.push(p.clone());
        }
        let mut k = n;
        loop {
            if k == 0 {
                let points = integer_points
                    .iter()
                    .map(|q| {
                        let v = RealVector::from_iterator(n, q.iter().map(|&x| x as f64));
                        let norm = v.norm();
                        v / norm
                    })
                    .collect();
                return Ok(LatticeNet { n, level, alpha, integer_points, points });
            }
            k -= 1;
            if p[k] < bound {
                p[k] += 1;
                break;
            }
            p[k] = -bound;
        }
    }
}

impl LatticeNet {
    pub fn mesh(&self) -> f64 {
        4.0 * self.alpha / self.level
    }

    pub fn distance_to(&self, x: &RealVector) -> f64 {
        self.points.iter().map(|p| (p - x).norm()).fold(f64::INFINITY, f64::min)
    }

    /// Largest distance from the supplied vectors to the net.
    pub fn worst_distance(&self, xs: &[RealVector]) -> f64 {
        par::map_slice(xs, |x| self.distance_to(x))
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// One unit vector per row.
pub fn write_points_csv<W: Write>(out: W, points: &[RealVector]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for p in points {
        w.write_record(p.iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(Error::from)
}
