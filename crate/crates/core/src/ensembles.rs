//! Seedable random objects: scalar laws, i.i.d. matrices, Haar samplers and
//! empirical subgaussian moment constants.
//!
//! Every sampler is a pure function of a [`SeedPath`], so experiments can
//! hand trial `i` its own stream and run trials on any number of workers.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::error::ensure;
use crate::{ComplexMatrix, RealMatrix, RealVector, Result};

const PROB_TOL: f64 = 1e-12;

/// Default mass of the two outer atoms of the heavy-tailed law.
pub const DEFAULT_TAIL_MASS: f64 = 0.02;

/// One atom of a discrete law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub value: f64,
    pub prob: f64,
}

/// Scalar distribution of matrix entries or sum coefficients.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarKind {
    Gaussian,
    Rademacher,
    /// Uniform on a symmetric interval (`[-1, 1]`, or `[-√3, √3]` at unit variance).
    UniformSymmetric,
    Discrete(Vec<Atom>),
    /// Symmetric three-atom law `{-b, 0, b}` with `P(±b) = tail_mass / 2`.
    /// At unit variance `b = 1/√tail_mass`, so the fourth moment is
    /// `1/tail_mass`: finite, but large for small masses.
    HeavyTail4thMoment { tail_mass: f64 },
}

impl ScalarKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScalarKind::Gaussian => "gaussian",
            ScalarKind::Rademacher => "rademacher",
            ScalarKind::UniformSymmetric => "uniform_symmetric",
            ScalarKind::Discrete(_) => "discrete",
            ScalarKind::HeavyTail4thMoment { .. } => "heavy_tail_4th_moment",
        }
    }

    /// Parse a kind name; `discrete` needs explicit atoms and is rejected here.
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "gaussian" => ScalarKind::Gaussian,
            "rademacher" => ScalarKind::Rademacher,
            "uniform_symmetric" | "uniform" => ScalarKind::UniformSymmetric,
            "heavy_tail_4th_moment" | "heavy_tail" => ScalarKind::HeavyTail4thMoment {
                tail_mass: DEFAULT_TAIL_MASS,
            },
            other => {
                return Err(crate::Error::Validation(format!(
                    "unknown scalar distribution '{other}'"
                )))
            }
        })
    }
}

/// Declarative description of a random matrix ensemble with i.i.d. entries.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub kind: ScalarKind,
    pub rows: usize,
    pub cols: usize,
    pub unit_variance: bool,
}

impl EnsembleSpec {
    pub fn new(kind: ScalarKind, rows: usize, cols: usize) -> Self {
        Self {
            kind,
            rows,
            cols,
            unit_variance: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.rows >= 1 && self.cols >= 1,
            Validation,
            "ensemble dimensions must be positive, got {}x{}",
            self.rows,
            self.cols
        );
        ScalarLaw::new(&self.kind, self.unit_variance).map(|_| ())
    }
}

/// A resolved, ready-to-sample scalar law.
#[derive(Debug, Clone)]
pub struct ScalarLaw {
    repr: LawRepr,
}

#[derive(Debug, Clone)]
enum LawRepr {
    Gaussian,
    Rademacher,
    Uniform { half_width: f64 },
    Atoms { values: Vec<f64>, cdf: Vec<f64> },
}

impl ScalarLaw {
    /// Resolve a kind, checking atom probabilities and, at unit variance,
    /// that the law is centred (discrete atoms are rescaled to variance 1).
    pub fn new(kind: &ScalarKind, unit_variance: bool) -> Result<Self> {
        let repr = match kind {
            ScalarKind::Gaussian => LawRepr::Gaussian,
            ScalarKind::Rademacher => LawRepr::Rademacher,
            ScalarKind::UniformSymmetric => LawRepr::Uniform {
                half_width: if unit_variance { 3f64.sqrt() } else { 1.0 },
            },
            ScalarKind::HeavyTail4thMoment { tail_mass } => {
                let p = *tail_mass;
                ensure!(
                    p > 0.0 && p <= 1.0,
                    Validation,
                    "heavy-tail mass must lie in (0, 1], got {p}"
                );
                let b = if unit_variance { 1.0 / p.sqrt() } else { 1.0 };
                atoms_repr(&[
                    Atom { value: -b, prob: p / 2.0 },
                    Atom { value: 0.0, prob: 1.0 - p },
                    Atom { value: b, prob: p / 2.0 },
                ])?
            }
            ScalarKind::Discrete(atoms) => {
                ensure!(!atoms.is_empty(), Validation, "discrete law without atoms");
                ensure!(
                    atoms.iter().all(|a| a.prob >= 0.0 && a.value.is_finite()),
                    Validation,
                    "discrete atoms need finite values and nonnegative probabilities"
                );
                let total: f64 = atoms.iter().map(|a| a.prob).sum();
                ensure!(
                    (total - 1.0).abs() <= PROB_TOL,
                    Validation,
                    "atom probabilities sum to {total}, not 1"
                );
                if unit_variance {
                    let mean: f64 = atoms.iter().map(|a| a.value * a.prob).sum();
                    ensure!(
                        mean.abs() <= PROB_TOL,
                        Validation,
                        "unit-variance discrete law must be centred, mean is {mean}"
                    );
                    let var: f64 = atoms.iter().map(|a| a.value * a.value * a.prob).sum();
                    ensure!(var > 0.0, Validation, "discrete law has zero variance");
                    let scale = var.sqrt().recip();
                    let scaled: Vec<Atom> = atoms
                        .iter()
                        .map(|a| Atom { value: a.value * scale, prob: a.prob })
                        .collect();
                    atoms_repr(&scaled)?
                } else {
                    atoms_repr(atoms)?
                }
            }
        };
        Ok(Self { repr })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.repr {
            LawRepr::Gaussian => rng.sample(StandardNormal),
            LawRepr::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            LawRepr::Uniform { half_width } => rng.random_range(-*half_width..=*half_width),
            LawRepr::Atoms { values, cdf } => {
                let u: f64 = rng.random();
                let idx = cdf.partition_point(|&c| c <= u).min(values.len() - 1);
                values[idx]
            }
        }
    }

    /// `(E X, E X², E X⁴)` in closed form.
    pub fn moments(&self) -> (f64, f64, f64) {
        match &self.repr {
            LawRepr::Gaussian => (0.0, 1.0, 3.0),
            LawRepr::Rademacher => (0.0, 1.0, 1.0),
            LawRepr::Uniform { half_width } => {
                let h = *half_width;
                (0.0, h * h / 3.0, h.powi(4) / 5.0)
            }
            LawRepr::Atoms { values, cdf } => {
                let mut prev = 0.0;
                let mut m = (0.0, 0.0, 0.0);
                for (v, c) in values.iter().zip(cdf) {
                    let p = c - prev;
                    prev = *c;
                    m.0 += p * v;
                    m.1 += p * v * v;
                    m.2 += p * v.powi(4);
                }
                m
            }
        }
    }
}

fn atoms_repr(atoms: &[Atom]) -> Result<LawRepr> {
    let mut cdf = Vec::with_capacity(atoms.len());
    let mut acc = 0.0;
    for a in atoms {
        acc += a.prob;
        cdf.push(acc);
    }
    if let Some(last) = cdf.last_mut() {
        *last = 1.0;
    }
    Ok(LawRepr::Atoms {
        values: atoms.iter().map(|a| a.value).collect(),
        cdf,
    })
}

/// Address of a random stream: `(master seed, experiment label, trial index)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SeedPath {
    pub master_seed: u64,
    pub label: String,
    pub trial_index: u64,
}

impl SeedPath {
    pub fn new(master_seed: u64, label: impl Into<String>, trial_index: u64) -> Self {
        Self {
            master_seed,
            label: label.into(),
            trial_index,
        }
    }

    /// Same master seed and label, different trial.
    pub fn trial(&self, trial_index: u64) -> Self {
        Self {
            master_seed: self.master_seed,
            label: self.label.clone(),
            trial_index,
        }
    }

    /// Nested label `label/suffix`, trial index reset to 0.
    pub fn child(&self, suffix: &str) -> Self {
        Self {
            master_seed: self.master_seed,
            label: format!("{}/{}", self.label, suffix),
            trial_index: self.trial_index,
        }
    }

    /// The generator for this path. SHA-256 of the three fields keys a
    /// ChaCha8 stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(self.master_seed.to_le_bytes());
        h.update((self.label.len() as u64).to_le_bytes());
        h.update(self.label.as_bytes());
        h.update(self.trial_index.to_le_bytes());
        let digest = h.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        ChaCha8Rng::from_seed(seed)
    }
}

/// `rows × cols` matrix of i.i.d. entries, drawn in row-major order.
pub fn sample_matrix(spec: &EnsembleSpec, seed: &SeedPath) -> Result<RealMatrix> {
    spec.validate()?;
    let law = ScalarLaw::new(&spec.kind, spec.unit_variance)?;
    let mut rng = seed.rng();
    Ok(sample_matrix_with(&law, spec.rows, spec.cols, &mut rng))
}

pub(crate) fn sample_matrix_with<R: Rng + ?Sized>(
    law: &ScalarLaw,
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> RealMatrix {
    let entries: Vec<f64> = (0..rows * cols).map(|_| law.sample(rng)).collect();
    DMatrix::from_row_slice(rows, cols, &entries)
}

/// `count` i.i.d. scalars.
pub fn sample_scalars(
    kind: &ScalarKind,
    unit_variance: bool,
    count: usize,
    seed: &SeedPath,
) -> Result<Vec<f64>> {
    let law = ScalarLaw::new(kind, unit_variance)?;
    let mut rng = seed.rng();
    Ok((0..count).map(|_| law.sample(&mut rng)).collect())
}

pub fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> RealVector {
    RealVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Uniform point of `S^{n-1}` (normalised Gaussian).
pub fn unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> RealVector {
    loop {
        let g = gaussian_vector(n, rng);
        let norm = g.norm();
        if norm > 1e-300 {
            return g / norm;
        }
    }
}

/// Haar-distributed orthogonal matrix (special orthogonal when `special`).
///
/// QR of a Gaussian matrix with the triangular factor normalised to a
/// positive diagonal; for SO(n) one column is negated when `det Q < 0`.
pub fn sample_haar_orthogonal(n: usize, seed: &SeedPath, special: bool) -> Result<RealMatrix> {
    ensure!(n >= 1, Validation, "Haar sampler needs n >= 1");
    let mut rng = seed.rng();
    Ok(haar_orthogonal_with(n, special, &mut rng))
}

pub(crate) fn haar_orthogonal_with<R: Rng + ?Sized>(
    n: usize,
    special: bool,
    rng: &mut R,
) -> RealMatrix {
    let g = sample_matrix_with(&ScalarLaw { repr: LawRepr::Gaussian }, n, n, rng);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if special && q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

/// Haar-distributed unitary matrix: QR of a complex Gaussian matrix with
/// the diagonal of the triangular factor rotated onto the positive axis.
pub fn sample_haar_unitary(n: usize, seed: &SeedPath) -> Result<ComplexMatrix> {
    ensure!(n >= 1, Validation, "Haar sampler needs n >= 1");
    let mut rng = seed.rng();
    Ok(haar_unitary_with(n, &mut rng))
}

pub(crate) fn haar_unitary_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let entries: Vec<Complex64> = (0..n * n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * scale, im * scale)
        })
        .collect();
    let g = ComplexMatrix::from_row_slice(n, n, &entries);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let modulus = d.norm();
        if modulus > 0.0 {
            let phase = d / modulus;
            for i in 0..n {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// Empirical moment constant `max_{1≤p≤p_max} (E|X|^p)^{1/p} / √p`.
pub fn estimate_psi2(samples: &[f64], p_max: u32) -> Result<f64> {
    ensure!(!samples.is_empty(), Validation, "empty sample");
    ensure!(
        samples.len() >= 100,
        Validation,
        "need at least 100 samples, got {}",
        samples.len()
    );
    ensure!(p_max >= 2, Validation, "p_max must be at least 2");
    ensure!(
        samples.iter().all(|x| x.is_finite()),
        Validation,
        "samples must be finite"
    );
    let n = samples.len() as f64;
    let mut best = 0.0f64;
    for p in 1..=p_max {
        let pf = p as f64;
        let moment = samples.iter().map(|x| x.abs().powf(pf)).sum::<f64>() / n;
        best = best.max(moment.powf(1.0 / pf) / pf.sqrt());
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::mean_and_stderr;

    fn sp(label: &str) -> SeedPath {
        SeedPath::new(7, label, 0)
    }

    #[test]
    fn rademacher_support() {
        let spec = EnsembleSpec::new(ScalarKind::Rademacher, 1, 1);
        for i in 0..20 {
            let m = sample_matrix(&spec, &sp("r").trial(i)).unwrap();
            assert!(m[(0, 0)] == 1.0 || m[(0, 0)] == -1.0);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = EnsembleSpec::new(ScalarKind::Rademacher, 100, 100);
        let a = sample_matrix(&spec, &sp("det")).unwrap();
        let b = sample_matrix(&spec, &sp("det")).unwrap();
        assert_eq!(a, b);
        let c = sample_matrix(&spec, &sp("det").trial(1)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn gaussian_entry_variance() {
        let spec = EnsembleSpec::new(ScalarKind::Gaussian, 200, 200);
        let m = sample_matrix(&spec, &sp("g")).unwrap();
        let n = m.len() as f64;
        let mean = m.iter().sum::<f64>() / n;
        let var = m.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        assert!((0.9..=1.1).contains(&var), "variance {var}");
    }

    #[test]
    fn bad_atoms_are_rejected() {
        let atoms = vec![Atom { value: -1.0, prob: 0.5 }, Atom { value: 1.0, prob: 0.4 }];
        let spec = EnsembleSpec::new(ScalarKind::Discrete(atoms), 2, 2);
        assert!(matches!(
            sample_matrix(&spec, &sp("x")),
            Err(crate::Error::Validation(_))
        ));
        let off_centre = vec![Atom { value: 0.0, prob: 0.5 }, Atom { value: 2.0, prob: 0.5 }];
        assert!(ScalarLaw::new(&ScalarKind::Discrete(off_centre.clone()), true).is_err());
        assert!(ScalarLaw::new(&ScalarKind::Discrete(off_centre), false).is_ok());
        assert!(EnsembleSpec::new(ScalarKind::Gaussian, 0, 3).validate().is_err());
    }

    #[test]
    fn unit_variance_laws_have_exact_moments() {
        let kinds = [
            ScalarKind::Gaussian,
            ScalarKind::Rademacher,
            ScalarKind::UniformSymmetric,
            ScalarKind::HeavyTail4thMoment { tail_mass: 0.02 },
            ScalarKind::Discrete(vec![
                Atom { value: -2.0, prob: 0.25 },
                Atom { value: 1.0, prob: 0.5 },
                Atom { value: 0.0, prob: 0.25 },
            ]),
        ];
        for kind in &kinds {
            let (m, v, _) = ScalarLaw::new(kind, true).unwrap().moments();
            assert!(m.abs() < 1e-12, "{kind:?}");
            assert!((v - 1.0).abs() < 1e-12, "{kind:?}");
        }
        let (_, _, m4) = ScalarLaw::new(&kinds[3], true).unwrap().moments();
        assert!((m4 - 50.0).abs() < 1e-9);
    }

    #[test]
    fn empirical_moments_within_five_standard_errors() {
        let kinds = [
            ScalarKind::Gaussian,
            ScalarKind::Rademacher,
            ScalarKind::UniformSymmetric,
            ScalarKind::HeavyTail4thMoment { tail_mass: 0.02 },
        ];
        for kind in &kinds {
            let law = ScalarLaw::new(kind, true).unwrap();
            let (_, _, m4) = law.moments();
            let xs = sample_scalars(kind, true, 1_000_000, &sp(kind.name())).unwrap();
            let (mean, se) = mean_and_stderr(&xs);
            assert!(mean.abs() <= 5.0 * se, "{kind:?} mean {mean}");
            let n = xs.len() as f64;
            let var = xs.iter().map(|x| x * x).sum::<f64>() / n;
            let var_se = ((m4 - 1.0) / n).sqrt();
            assert!((var - 1.0).abs() <= 5.0 * var_se, "{kind:?} var {var}");
        }
    }

    #[test]
    fn haar_orthogonal_basics() {
        let q = sample_haar_orthogonal(1, &sp("h1"), true).unwrap();
        assert_eq!(q[(0, 0)], 1.0);
        for n in [2, 5, 9] {
            for special in [false, true] {
                let q = sample_haar_orthogonal(n, &sp("h5"), special).unwrap();
                let resid = (q.transpose() * &q - RealMatrix::identity(n, n)).amax();
                assert!(resid < 1e-10);
                if special {
                    assert!(q.determinant() > 0.0);
                }
            }
        }
        assert!(sample_haar_orthogonal(0, &sp("h0"), false).is_err());
    }

    #[test]
    fn haar_orthogonal_first_entry_second_moment() {
        // E <Q e1, e1>^2 = 1/n by symmetry of the uniform vector Q e1.
        let n = 4;
        let trials = 100_000;
        let vals = crate::par::map_range(trials, |i| {
            let q = sample_haar_orthogonal(n, &sp("moment").trial(i as u64), false).unwrap();
            q[(0, 0)].powi(2)
        });
        let (mean, se) = mean_and_stderr(&vals);
        assert!((mean - 0.25).abs() <= 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn haar_unitary_basics() {
        let u = sample_haar_unitary(1, &sp("u1")).unwrap();
        assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-12);
        let u = sample_haar_unitary(3, &sp("u3")).unwrap();
        assert!((u.determinant().norm() - 1.0).abs() < 1e-10);
        let resid = (u.adjoint() * &u - ComplexMatrix::identity(3, 3)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(resid < 1e-10);
    }

    #[test]
    fn haar_unitary_trace_mean_is_zero() {
        let n = 6;
        let traces = crate::par::map_range(10_000, |i| {
            sample_haar_unitary(n, &sp("trace").trial(i as u64)).unwrap().trace()
        });
        let re: Vec<f64> = traces.iter().map(|z| z.re).collect();
        let im: Vec<f64> = traces.iter().map(|z| z.im).collect();
        for part in [re, im] {
            let (mean, se) = mean_and_stderr(&part);
            assert!(mean.abs() <= 3.0 * se, "mean {mean} se {se}");
        }
    }

    #[test]
    fn psi2_examples() {
        assert_eq!(estimate_psi2(&[0.0; 200], 8).unwrap(), 0.0);
        let signs: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!((estimate_psi2(&signs, 8).unwrap() - 1.0).abs() < 1e-12);
        let g = sample_scalars(&ScalarKind::Gaussian, true, 100_000, &sp("psi")).unwrap();
        let k = estimate_psi2(&g, 8).unwrap();
        assert!((0.7..=1.2).contains(&k), "{k}");
        assert!(estimate_psi2(&[], 8).is_err());
        assert!(estimate_psi2(&signs, 1).is_err());
    }
}
