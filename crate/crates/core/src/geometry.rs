//! Exact ℓ1 minimization on the sphere by vertex enumeration, random sections
//! of the octahedron, empirical Khinchin constants and the norm sandwich.

use std::io::Write;

use rand::Rng;

use crate::ensembles::{gaussian_vector, unit_vector, SeedPath};
use crate::error::ensure;
use crate::spectra::{random_normal_vector, rows_of, singular_values};
use crate::{par, Error, RealMatrix, RealVector, Result};

/// Default cap on the number of enumerated index sets.
pub const SECTION_BUDGET: u64 = 1_000_000;
/// Seeded restarts of the approximate extremal searches.
pub const KHINCHIN_RESTARTS: usize = 1000;
const SUBSET_BLOCK: usize = 512;

/// `C(n, k)` saturating at `u64::MAX`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// All `k`-subsets of `0..n` in lexicographic order, flattened.
fn all_subsets(n: usize, k: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(binomial(n, k) as usize * k);
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.extend(c.iter().map(|&i| i as u32));
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if c[i] < n - k + i {
                c[i] += 1;
                for j in i + 1..k {
                    c[j] = c[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// One vertex `v_J` of the section `B₁ᴺ ∩ range(A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionVertex {
    /// Index set `J` of size `m = N − n + 1`; `A y_J` vanishes off `J`.
    pub j: Vec<usize>,
    /// `A y_J / ‖A y_J‖₁`.
    pub v: RealVector,
    /// Unit kernel vector of the rows outside `J`.
    pub y: RealVector,
    /// `‖A y_J‖₁`.
    pub l1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectionReport {
    pub m: usize,
    pub vertices: Vec<SectionVertex>,
    pub min_l1: f64,
    /// Index into `vertices` of the minimizer.
    pub argmin: usize,
    /// `2 · max_J ‖v_J‖₂`.
    pub diameter: f64,
    /// `√N · max_J ‖v_J‖₂`.
    pub kashin_ratio: f64,
    /// Index sets skipped because the complementary rows are rank-deficient.
    pub degenerate_count: usize,
}

impl SectionReport {
    pub fn minimizer(&self) -> &SectionVertex {
        &self.vertices[self.argmin]
    }
}

/// Exact `min_{‖x‖₂=1} ‖Ax‖₁` for an `N×n` matrix with `N > n`.
pub fn min_l1_on_sphere(a: &RealMatrix) -> Result<SectionReport> {
    min_l1_on_sphere_with_budget(a, SECTION_BUDGET)
}

/// [`min_l1_on_sphere`] with an explicit cap on `C(N, n − 1)`.
///
/// The minimizer maps to a vertex of the section, where `Ax` vanishes on
/// `n − 1` coordinates; every such set `J'` is enumerated and its kernel
/// direction evaluated.
pub fn min_l1_on_sphere_with_budget(a: &RealMatrix, budget: u64) -> Result<SectionReport> {
    let (big_n, n) = a.shape();
    ensure!(n >= 1 && big_n > n, Dimension, "need N > n >= 1, got {big_n}x{n}");
    ensure!(a.iter().all(|v| v.is_finite()), Validation, "matrix entries must be finite");
    let count = binomial(big_n, n - 1);
    ensure!(
        count <= budget,
        Resource,
        "C({big_n}, {}) = {count} index sets exceed the budget {budget}",
        big_n - n + 1
    );
    let rows = rows_of(a);
    let k = n - 1;
    let subsets = all_subsets(big_n, k);
    let total = count as usize;
    let blocks = total.div_ceil(SUBSET_BLOCK);
    let results: Vec<Option<SectionVertex>> = par::map_range(blocks, |b| {
        let hi = ((b + 1) * SUBSET_BLOCK).min(total);
        (b * SUBSET_BLOCK..hi)
            .map(|s| {
                let comp = &subsets[s * k..(s + 1) * k];
                let chosen: Vec<RealVector> = comp.iter().map(|&i| rows[i as usize].clone()).collect();
                let y = random_normal_vector(&chosen).ok()?;
                let ay = a * &y;
                let l1 = ay.iter().map(|v| v.abs()).sum::<f64>();
                if l1 == 0.0 {
                    return None;
                }
                let mut inside = vec![true; big_n];
                for &i in comp {
                    inside[i as usize] = false;
                }
                let j = (0..big_n).filter(|&i| inside[i]).collect();
                Some(SectionVertex { j, v: &ay / l1, y, l1 })
            })
            .collect::<Vec<_>>()
    })
    .concat();
    let degenerate_count = results.iter().filter(|r| r.is_none()).count();
    let vertices: Vec<SectionVertex> = results.into_iter().flatten().collect();
    ensure!(!vertices.is_empty(), Degenerate, "every index set is rank-deficient");
    let mut argmin = 0;
    for (i, v) in vertices.iter().enumerate() {
        if v.l1 < vertices[argmin].l1 {
            argmin = i;
        }
    }
    let max2 = vertices.iter().map(|v| v.v.norm()).fold(0.0, f64::max);
    Ok(SectionReport {
        m: big_n - n + 1,
        min_l1: vertices[argmin].l1,
        argmin,
        diameter: 2.0 * max2,
        kashin_ratio: (big_n as f64).sqrt() * max2,
        degenerate_count,
        vertices,
    })
}

/// The section `B₁ᴺ ∩ range(A)`: vertices, diameter and Kashin ratio.
pub fn octahedron_section(a: &RealMatrix) -> Result<SectionReport> {
    min_l1_on_sphere(a)
}

/// `A + scale · G` with an independent standard Gaussian `G`, to restore
/// genericity of discrete ensembles.
pub fn jitter(a: &RealMatrix, scale: f64, seed: &SeedPath) -> RealMatrix {
    let mut rng = seed.rng();
    let g = gaussian_vector(a.len(), &mut rng);
    RealMatrix::from_row_slice(a.nrows(), a.ncols(), g.as_slice()) * scale + a
}

/// Empirical Khinchin constants `α̂_p ≤ β̂_p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KhinchinConstants {
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Whether each end is an exact extremum or a multistart estimate.
    pub alpha_exact: bool,
    pub beta_exact: bool,
}

fn p_norm_mean(a: &RealMatrix, y: &RealVector, p: f64) -> f64 {
    let ay = a * y;
    (ay.iter().map(|v| v.abs().powf(p)).sum::<f64>() / a.nrows() as f64).powf(1.0 / p)
}

/// Rows merged up to sign: `‖Ax‖₁ = Σ w_k |⟨u_k, x⟩|` with distinct `u_k`.
fn merge_parallel_rows(a: &RealMatrix) -> (RealMatrix, usize) {
    let mut groups: Vec<(Vec<f64>, f64)> = Vec::new();
    for r in rows_of(a) {
        let mut v: Vec<f64> = r.iter().copied().collect();
        if let Some(first) = v.iter().find(|x| **x != 0.0) {
            if *first < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        } else {
            continue;
        }
        match groups.iter_mut().find(|(u, _)| *u == v) {
            Some((_, w)) => *w += 1.0,
            None => groups.push((v, 1.0)),
        }
    }
    let n = a.ncols();
    let data: Vec<f64> = groups
        .iter()
        .flat_map(|(u, w)| u.iter().map(move |x| x * w))
        .collect();
    (RealMatrix::from_row_slice(groups.len(), n, &data), groups.len())
}

/// Multistart Riemannian gradient search of `f` over the sphere with
/// Armijo backtracking; `sign = 1` maximizes, `-1` minimizes.
fn sphere_search<F, G>(n: usize, f: &F, grad: &G, sign: f64, starts: usize, seed: &SeedPath) -> f64
where
    F: Fn(&RealVector) -> f64 + Sync,
    G: Fn(&RealVector) -> RealVector + Sync,
{
    let best = par::map_range(starts, |s| {
        let mut rng = seed.trial(s as u64).rng();
        let mut x = unit_vector(n, &mut rng);
        let mut fx = f(&x);
        let mut step = 1.0;
        for _ in 0..500 {
            let g = grad(&x);
            let rg = &g - &x * g.dot(&x);
            let gn2 = rg.norm_squared();
            if gn2 < 1e-24 {
                break;
            }
            let mut accepted = false;
            step *= 2.0;
            while step > 1e-14 {
                let cand = (&x + &rg * (sign * step)).normalize();
                let fc = f(&cand);
                if sign * (fc - fx) >= 1e-4 * step * gn2 {
                    x = cand;
                    fx = fc;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        sign * fx
    })
    .into_iter()
    .fold(f64::NEG_INFINITY, f64::max);
    sign * best
}

/// `min` and `max` over the unit sphere of `((1/N) Σ_j |⟨y, X_j⟩|ᵖ)^{1/p}`
/// for the rows `X_j` of `a`. `p = 2` is exact from the singular values;
/// `p = 1` has an exact minimum by vertex enumeration; the remaining ends
/// are multistart estimates.
pub fn khinchin_constants(a: &RealMatrix, p: f64, seed: &SeedPath) -> Result<KhinchinConstants> {
    ensure!(p >= 1.0 && p.is_finite(), Validation, "p must be >= 1, got {p}");
    let (big_n, n) = a.shape();
    ensure!(big_n >= 1 && n >= 1, Dimension, "empty matrix");
    let root_n = (big_n as f64).sqrt();
    if p == 2.0 {
        let s = singular_values(a)?;
        let smallest = if big_n >= n { s.smallest() } else { 0.0 };
        return Ok(KhinchinConstants {
            p,
            alpha: smallest / root_n,
            beta: s.largest() / root_n,
            alpha_exact: true,
            beta_exact: true,
        });
    }
    let f = |y: &RealVector| p_norm_mean(a, y, p);
    let grad = |y: &RealVector| {
        let ay = a * y;
        let w = ay.map(|v| v.signum() * v.abs().powf(p - 1.0));
        a.transpose() * w
    };
    let starts = KHINCHIN_RESTARTS;
    if p == 1.0 {
        let (merged, distinct) = merge_parallel_rows(a);
        let alpha = if distinct > n {
            min_l1_on_sphere(&merged)?.min_l1 / big_n as f64
        } else {
            // Fewer distinct directions than the dimension: some unit
            // vector is orthogonal to all of them, or they span exactly.
            let s = singular_values(&merged)?;
            if distinct < n || s.smallest() < 1e-12 * s.largest() {
                0.0
            } else {
                exact_l1_min_square(&merged) / big_n as f64
            }
        };
        // ‖Ax‖₁ is convex: x ← Aᵀ sign(Ax) / ‖·‖ ascends monotonically.
        let beta = par::map_range(starts, |s| {
            let mut rng = seed.trial(s as u64).rng();
            let mut x = unit_vector(n, &mut rng);
            let mut fx = f(&x);
            for _ in 0..200 {
                let signs = (a * &x).map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
                let g = a.transpose() * signs;
                let norm = g.norm();
                if norm == 0.0 {
                    break;
                }
                let nx = g / norm;
                let fn_ = f(&nx);
                if fn_ <= fx * (1.0 + 1e-15) {
                    fx = fx.max(fn_);
                    break;
                }
                x = nx;
                fx = fn_;
            }
            fx
        })
        .into_iter()
        .fold(0.0, f64::max);
        return Ok(KhinchinConstants { p, alpha, beta, alpha_exact: true, beta_exact: false });
    }
    let alpha = sphere_search(n, &f, &grad, -1.0, starts, &seed.child("min"));
    let beta = sphere_search(n, &f, &grad, 1.0, starts, &seed.child("max"));
    Ok(KhinchinConstants { p, alpha, beta, alpha_exact: false, beta_exact: false })
}

/// Exact `min ‖Bx‖₁` on the sphere for square invertible `B`: the section
/// is a linear image of the cross-polytope with vertices `B⁻¹ e_i`.
fn exact_l1_min_square(b: &RealMatrix) -> f64 {
    let inv = b.clone().try_inverse().expect("invertible");
    let longest = inv.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    1.0 / longest
}

/// Outcome of the norm sandwich `εδn‖x‖ ≤ ‖Ax‖₁ ≤ √N‖Ax‖₂ ≤ C′n‖x‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichReport {
    pub tested: usize,
    /// Cauchy-Schwarz, which must always hold.
    pub middle_ok: bool,
    pub lower_ok: bool,
    pub upper_ok: bool,
    /// Whether the exact ℓ1 minimizer was among the tested vectors (skipped
    /// when the enumeration exceeds its budget).
    pub minimizer_tested: bool,
}

impl SandwichReport {
    pub fn pass(&self) -> bool {
        self.middle_ok && self.lower_ok && self.upper_ok
    }
}

/// Check the sandwich on `tests` random unit vectors and at the exact ℓ1
/// minimizer, for `A` of shape `⌊(1+δ)n⌋ × n`.
pub fn sandwich_audit(
    a: &RealMatrix,
    eps: f64,
    delta: f64,
    c_prime: f64,
    tests: usize,
    seed: &SeedPath,
) -> Result<SandwichReport> {
    let (big_n, n) = a.shape();
    ensure!(
        big_n == ((1.0 + delta) * n as f64).floor() as usize,
        Dimension,
        "expected N = floor((1+delta) n) rows, got {big_n}"
    );
    let mut xs: Vec<RealVector> = {
        let mut rng = seed.rng();
        (0..tests).map(|_| unit_vector(n, &mut rng)).collect()
    };
    let minimizer_tested = match min_l1_on_sphere(a) {
        Ok(r) => {
            xs.push(r.minimizer().y.clone());
            true
        }
        Err(Error::Resource(_) | Error::Degenerate(_) | Error::Dimension(_)) => false,
        Err(e) => return Err(e),
    };
    let root_n = (big_n as f64).sqrt();
    let checks = par::map_slice(&xs, |x| {
        let ax = a * x;
        let l1: f64 = ax.iter().map(|v| v.abs()).sum();
        let l2 = ax.norm();
        let middle = l1 <= root_n * l2 * (1.0 + 1e-12);
        (eps * delta * n as f64 <= l1, middle, root_n * l2 <= c_prime * n as f64)
    });
    Ok(SandwichReport {
        tested: xs.len(),
        lower_ok: checks.iter().all(|c| c.0),
        middle_ok: checks.iter().all(|c| c.1),
        upper_ok: checks.iter().all(|c| c.2),
        minimizer_tested,
    })
}

/// Vertex rows `(J, ‖A y_J‖₁, ‖v_J‖₂, v_J...)`.
pub fn write_vertices_csv<W: Write>(out: W, report: &SectionReport) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    w.write_record(["J", "l1", "l2", "v"])?;
    for v in &report.vertices {
        let mut rec = vec![
            v.j.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" "),
            v.l1.to_string(),
            v.v.norm().to_string(),
        ];
        rec.extend(v.v.iter().map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(Error::from)
}

/// Random unit vectors, for callers auditing `min_l1` from above.
pub fn min_sampled_l1<R: Rng + ?Sized>(a: &RealMatrix, samples: usize, rng: &mut R) -> f64 {
    (0..samples)
        .map(|_| (a * unit_vector(a.ncols(), rng)).iter().map(|v| v.abs()).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{sample_matrix, EnsembleSpec, ScalarKind};

    fn l1(a: &RealMatrix, x: &RealVector) -> f64 {
        (a * x).iter().map(|v| v.abs()).sum()
    }

    /// Crude local descent oracle in the plane: dense angle grid then golden
    /// refinement.
    fn planar_min(a: &RealMatrix) -> f64 {
        let f = |t: f64| l1(a, &RealVector::from_vec(vec![t.cos(), t.sin()]));
        let mut best = f64::INFINITY;
        let steps = 100_000;
        for k in 0..steps {
            best = best.min(f(std::f64::consts::PI * k as f64 / steps as f64));
        }
        best
    }

    #[test]
    fn three_rows_in_the_plane() {
        let a = RealMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.5, 0.5]);
        let r = min_l1_on_sphere(&a).unwrap();
        assert_eq!(r.m, 2);
        assert_eq!(r.vertices.len(), 3);
        let oracle = planar_min(&a);
        assert!(r.min_l1 <= oracle + 1e-12);
        assert!((r.min_l1 - oracle).abs() <= 1e-8 * oracle, "{} vs {oracle}", r.min_l1);
        assert_eq!(l1(&a, &r.minimizer().y), r.min_l1);
    }

    #[test]
    fn zero_row_is_skipped() {
        let a = RealMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 0.5, 0.5, 0.0, 0.0]);
        let r = min_l1_on_sphere(&a).unwrap();
        assert_eq!(r.degenerate_count, 1);
        assert!(r.min_l1 >= planar_min(&a) - 1e-8);
    }

    #[test]
    fn vertex_invariants_and_scaling() {
        let a = sample_matrix(&EnsembleSpec::new(ScalarKind::Gaussian, 9, 6), &SeedPath::new(4, "sec", 0)).unwrap();
        let r = octahedron_section(&a).unwrap();
        let norm = singular_values(&a).unwrap().largest();
        assert_eq!(r.vertices.len() as u64, binomial(9, 5));
        for v in &r.vertices {
            assert!((v.v.iter().map(|x| x.abs()).sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((v.y.norm() - 1.0).abs() < 1e-12);
            let ay = &a * &v.y;
            for i in (0..9).filter(|i| !v.j.contains(i)) {
                assert!(ay[i].abs() <= 1e-9 * norm);
            }
        }
        assert!(r.kashin_ratio >= 1.0);
        let scaled = min_l1_on_sphere(&(&a * 3.5)).unwrap();
        assert!((scaled.min_l1 - 3.5 * r.min_l1).abs() <= 1e-12 * scaled.min_l1);
        let mut rng = SeedPath::new(4, "probe", 0).rng();
        assert!(min_sampled_l1(&a, 20_000, &mut rng) >= r.min_l1);
    }

    #[test]
    fn coordinate_section_diameter() {
        let mut a = RealMatrix::zeros(5, 3);
        for i in 0..3 {
            a[(i, i)] = 1.0;
        }
        let a = jitter(&a, 1e-9, &SeedPath::new(1, "jit", 0));
        let r = octahedron_section(&a).unwrap();
        assert!((r.diameter - 2.0).abs() < 1e-6, "{}", r.diameter);
    }

    #[test]
    fn errors() {
        assert!(matches!(min_l1_on_sphere(&RealMatrix::zeros(3, 3)), Err(Error::Dimension(_))));
        let a = RealMatrix::from_element(40, 20, 1.0);
        assert!(matches!(min_l1_on_sphere(&a), Err(Error::Resource(_))));
    }

    #[test]
    fn khinchin_isometry() {
        let q = crate::ensembles::sample_haar_orthogonal(4, &SeedPath::new(2, "q", 0), false).unwrap();
        let a = q * 2.0;
        let k = khinchin_constants(&a, 2.0, &SeedPath::new(2, "k", 0)).unwrap();
        assert!((k.alpha - 1.0).abs() < 1e-12 && (k.beta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn khinchin_p1_rademacher() {
        let a = sample_matrix(&EnsembleSpec::new(ScalarKind::Rademacher, 64, 6), &SeedPath::new(3, "k1", 0)).unwrap();
        let k = khinchin_constants(&a, 1.0, &SeedPath::new(3, "k1s", 0)).unwrap();
        assert!(k.alpha_exact && !k.beta_exact);
        assert!(k.alpha > 0.0 && k.alpha <= k.beta);
        let mut rng = SeedPath::new(3, "probe", 0).rng();
        assert!(min_sampled_l1(&a, 20_000, &mut rng) / 64.0 >= k.alpha - 1e-12);
        // β̂₁ ≤ β̂₂ by Jensen.
        let k2 = khinchin_constants(&a, 2.0, &SeedPath::new(3, "k2", 0)).unwrap();
        assert!(k.beta <= k2.beta + 1e-12);
    }

    #[test]
    fn khinchin_p4_envelope() {
        let a = sample_matrix(&EnsembleSpec::new(ScalarKind::Gaussian, 625, 5), &SeedPath::new(5, "k4", 0)).unwrap();
        let k = khinchin_constants(&a, 4.0, &SeedPath::new(5, "k4s", 0)).unwrap();
        assert!(k.alpha >= 0.1 && k.beta <= 6.0, "{k:?}");
        let mut rng = SeedPath::new(5, "probe", 0).rng();
        for _ in 0..2000 {
            let v = p_norm_mean(&a, &unit_vector(5, &mut rng), 4.0);
            assert!(v >= k.alpha - 1e-9 && v <= k.beta + 1e-9);
        }
    }

    #[test]
    fn sandwich() {
        let a = sample_matrix(&EnsembleSpec::new(ScalarKind::Gaussian, 30, 20), &SeedPath::new(6, "sw", 0)).unwrap();
        let r = sandwich_audit(&a, 0.05, 0.5, 10.0, 10_000, &SeedPath::new(6, "x", 0)).unwrap();
        assert!(r.pass() && !r.minimizer_tested);
        let small = sample_matrix(&EnsembleSpec::new(ScalarKind::Gaussian, 9, 6), &SeedPath::new(6, "sw", 1)).unwrap();
        let r = sandwich_audit(&small, 0.05, 0.5, 10.0, 1000, &SeedPath::new(6, "x", 1)).unwrap();
        assert!(r.middle_ok && r.minimizer_tested);
        let r = sandwich_audit(&RealMatrix::zeros(30, 20), 0.05, 0.5, 10.0, 100, &SeedPath::new(6, "z", 0)).unwrap();
        assert!(r.middle_ok && !r.lower_ok && !r.pass());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(9, 4), 126);
        assert_eq!(binomial(64, 5), 7_624_512);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(all_subsets(4, 2), vec![0, 1, 0, 2, 0, 3, 1, 2, 1, 3, 2, 3]);
        assert_eq!(all_subsets(3, 0), Vec::<u32>::new());
    }
}
