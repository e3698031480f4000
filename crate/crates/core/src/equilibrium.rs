//! Green function by lift escape rate, inverse-iteration sampling of the
//! equilibrium measure, and Birkhoff averages of log |Jac|.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::family::{fs_jacobian_k1, Cx, FamilySpec, Lift, ProjPoint};
use crate::poly::Poly;
use crate::stats::mean_se;

const C_ZERO: Cx = Cx::new(0.0, 0.0);
#[cfg(test)]
const C_ONE: Cx = Cx::new(1.0, 0.0);

/// Escape-rate value g(λ, z) in lift normalization.
#[derive(Debug, Clone, Copy)]
pub struct GreenValue {
    pub value: f64,
    pub depth: usize,
    /// Estimated geometric truncation bound C·d^{-depth}.
    pub tail_bound: f64,
}

/// d^{-depth}·log‖F_λ^{depth}(ẑ)‖ with per-step renormalization, using the
/// affine representative (z, 1) (last coordinate one). For polynomial
/// families this is the standard Green function of the filled Julia set.
pub fn green(family: &FamilySpec, lambda: Cx, z: &ProjPoint, depth: usize) -> Result<GreenValue> {
    if depth < 1 {
        return Err(Error::Precondition("green: depth must be ≥ 1".into()));
    }
    let lift = Lift::new(family, lambda);
    green_lift(&lift, family.d, z, depth)
}

pub fn green_lift(lift: &Lift, d: usize, z: &ProjPoint, depth: usize) -> Result<GreenValue> {
    // representative: divide by the last coordinate when possible so that
    // the functional equation G(f z) = d·G(z) is exact for polynomials
    let coords = z.coords();
    let last = coords[coords.len() - 1];
    let rep: Vec<Cx> = if last.norm() > 1e-140 {
        coords.iter().map(|c| c / last).collect()
    } else {
        coords.to_vec()
    };
    let sup0 = rep.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut value = sup0.ln();
    let mut x: Vec<Cx> = rep.iter().map(|c| c / sup0).collect();
    let dinv = 1.0 / d as f64;
    let mut weight = 1.0;
    let mut last_logs = [0.0f64; 4];
    for step in 0..depth {
        let (y, log_norm) = lift.apply_normalized(&x)?;
        weight *= dinv;
        value += weight * log_norm;
        last_logs[step % 4] = log_norm.abs();
        x = y;
    }
    let c_est = last_logs.iter().cloned().fold(0.0, f64::max);
    let tail_bound = c_est * weight * dinv / (1.0 - dinv);
    Ok(GreenValue {
        value,
        depth,
        tail_bound,
    })
}

#[derive(Debug, Clone, serde::Serialize)]
pub enum Provenance {
    InverseIteration { depth: usize, seed: u64 },
    Birkhoff { orbit_length: usize, seed: u64 },
}

/// Finite sample of the equilibrium measure μ_λ (uniform weights).
#[derive(Debug, Clone)]
pub struct MeasureSample {
    pub lambda: Cx,
    pub points: Vec<ProjPoint>,
    pub provenance: Provenance,
    /// Seed point all inverse orbits end at.
    pub seed_point: ProjPoint,
}

impl MeasureSample {
    pub fn weight(&self) -> f64 {
        1.0 / self.points.len() as f64
    }

    /// CSV export: index, re, im, chart. Chart 0 rows carry the affine
    /// coordinate x₀/x₁, chart 1 rows (near infinity) carry x₁/x₀.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,re,im,chart\n");
        for (i, p) in self.points.iter().enumerate() {
            let c = p.coords();
            let (v, chart) = if c[1].norm() >= c[0].norm() {
                (c[0] / c[1], 0)
            } else {
                (c[1] / c[0], 1)
            };
            out.push_str(&format!("{i},{},{},{chart}\n", v.re, v.im));
        }
        out
    }
}

/// All d preimages of `target` under f_λ counted with multiplicity
/// (k = 1). Roots beyond the dehomogenized degree are at infinity.
pub fn fiber_points(
    family: &FamilySpec,
    lift: &Lift,
    target: &ProjPoint,
) -> Result<Vec<ProjPoint>> {
    let tc = target.coords();
    // cross(F(ŵ), ŵ_target) = P(ŵ)·t₁ − Q(ŵ)·t₀ = 0, dehomogenized at w = (t, 1)
    let p = family.components[0].dehomogenize_k1(lift.lambda, 1);
    let q = family.components[1].dehomogenize_k1(lift.lambda, 1);
    let poly = Poly::new(
        (0..=family.d)
            .map(|i| {
                let a = if i < p.coeffs.len() { p.coeffs[i] } else { C_ZERO };
                let b = if i < q.coeffs.len() { q.coeffs[i] } else { C_ZERO };
                a * tc[1] - b * tc[0]
            })
            .collect(),
    );
    let (finite, inf_mult) = poly.roots_projective(family.d, 1e-11);
    let mut out: Vec<ProjPoint> = Vec::with_capacity(family.d);
    for r in finite {
        let w = ProjPoint::from_affine(r);
        // residual check against numerically degenerate fibers
        let img = crate::family::evaluate_lift(lift, &w)?;
        if img.chordal(target) > 1e-6 {
            return Err(Error::RootFinding(format!(
                "fiber root residual {:.2e} at λ = {}",
                img.chordal(target),
                lift.lambda
            )));
        }
        out.push(w);
    }
    for _ in 0..inf_mult {
        out.push(ProjPoint::infinity());
    }
    if out.len() != family.d {
        return Err(Error::RootFinding(format!(
            "fiber has {} points, expected {}",
            out.len(),
            family.d
        )));
    }
    Ok(out)
}

/// Sample μ_λ by `depth` successive random inverse images from an escaping
/// seed point. Each output point uses its own RNG substream, so the result
/// is independent of evaluation order.
pub fn sample_equilibrium(
    family: &FamilySpec,
    lambda: Cx,
    n_points: usize,
    depth: usize,
    seed: u64,
) -> Result<MeasureSample> {
    if family.k != 1 {
        return Err(Error::WrongDimension {
            expected: 1,
            actual: family.k,
        });
    }
    let lift = Lift::new(family, lambda);
    let seed_point = draw_escaping_seed(family, &lift, lambda, seed)?;
    let mut points = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64 + 1);
        let mut w = seed_point.clone();
        for _ in 0..depth {
            let fiber = fiber_points(family, &lift, &w)?;
            w = fiber[rng.gen_range(0..fiber.len())].clone();
        }
        points.push(w);
    }
    Ok(MeasureSample {
        lambda,
        points,
        provenance: Provenance::InverseIteration { depth, seed },
        seed_point,
    })
}

/// Draw a seed with positive Green value (outside the filled Julia set and
/// hence off the exceptional set).
fn draw_escaping_seed(
    family: &FamilySpec,
    lift: &Lift,
    lambda: Cx,
    seed: u64,
) -> Result<ProjPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let radius = 3.0 + lambda.norm();
    for _ in 0..256 {
        let z = Cx::new(
            rng.gen_range(-radius..radius),
            rng.gen_range(-radius..radius),
        );
        let p = ProjPoint::from_affine(z);
        let g = green_lift(lift, family.d, &p, 30)?;
        if g.value > 1e-6 {
            return Ok(p);
        }
    }
    Err(Error::Precondition(
        "could not draw an escaping seed point".into(),
    ))
}

/// Birkhoff estimate of the Lyapunov exponent from a measure sample.
#[derive(Debug, Clone, Copy)]
pub struct BirkhoffEstimate {
    pub value: f64,
    pub std_error: f64,
    /// log |jac| terms clipped at the floor −40.
    pub clipped: usize,
    /// orbit points with |jac| below 1e-12 (near-critical passes).
    pub near_critical: usize,
}

const LOG_JAC_FLOOR: f64 = -40.0;
const NEAR_CRITICAL_JAC: f64 = 1e-12;

/// Average of (1/n)·Σ log|Jac_FS f_λ| along length-`n_iter` forward orbits
/// through the sample points. The standard error comes from the per-point
/// variance.
///
/// The orbit through a sample point is walked backward (random preimages,
/// per-point substreams) and read in forward order, ending at the sample
/// point. Backward walks contract toward the Julia set, so the orbit stays
/// μ-distributed for any `n_iter`; naive forward stepping leaves the
/// (repelling) Julia set after ~50 steps in double precision and collapses
/// log|Jac| into attracting basins.
pub fn birkhoff_lyapunov(
    family: &FamilySpec,
    lambda: Cx,
    sample: &MeasureSample,
    n_iter: usize,
) -> Result<BirkhoffEstimate> {
    if sample.lambda != lambda {
        return Err(Error::Precondition(
            "sample was drawn at a different parameter".into(),
        ));
    }
    let seed = match sample.provenance {
        Provenance::InverseIteration { seed, .. } => seed,
        Provenance::Birkhoff { seed, .. } => seed,
    };
    let lift = Lift::new(family, lambda);
    let mut averages = Vec::with_capacity(sample.points.len());
    let mut clipped = 0usize;
    let mut near_critical = 0usize;
    for (i, p) in sample.points.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5bd1_e995);
        rng.set_stream(i as u64 + 1);
        let mut w = p.clone();
        let mut acc = 0.0;
        for _ in 0..n_iter {
            let (jac, _) = fs_jacobian_k1(&lift, &w)?;
            if jac < NEAR_CRITICAL_JAC {
                near_critical += 1;
            }
            let mut l = jac.ln();
            if !(l >= LOG_JAC_FLOOR) {
                l = LOG_JAC_FLOOR;
                clipped += 1;
            }
            acc += l;
            let fiber = fiber_points(family, &lift, &w)?;
            w = fiber[rng.gen_range(0..fiber.len())].clone();
        }
        averages.push(acc / n_iter as f64);
    }
    let (value, std_error) = mean_se(&averages);
    Ok(BirkhoffEstimate {
        value,
        std_error,
        clipped,
        near_critical,
    })
}

/// Push every sample point forward by f_λ (used by the invariance check).
pub fn push_forward(family: &FamilySpec, sample: &MeasureSample) -> Result<MeasureSample> {
    let lift = Lift::new(family, sample.lambda);
    let points = sample
        .points
        .iter()
        .map(|p| crate::family::evaluate_lift(&lift, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(MeasureSample {
        lambda: sample.lambda,
        points,
        provenance: sample.provenance.clone(),
        seed_point: sample.seed_point.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_statistic, ks_two_sample_weighted};
    use std::f64::consts::PI;

    fn cx(re: f64, im: f64) -> Cx {
        Cx::new(re, im)
    }

    #[test]
    fn green_power_map_escape_rate() {
        // z², z = [2:1]: G = log 2 at any depth
        let fam = FamilySpec::power(2);
        for depth in [1, 5, 40] {
            let g = green(&fam, C_ZERO, &ProjPoint::from_affine(cx(2.0, 0.0)), depth).unwrap();
            assert!((g.value - 2.0f64.ln()).abs() < 1e-12, "depth {depth}: {}", g.value);
        }
    }

    #[test]
    fn green_vanishes_on_unit_circle() {
        let fam = FamilySpec::power(2);
        for ang in [0.3, 1.8, 4.0] {
            let z = Cx::from_polar(1.0, ang);
            let g = green(&fam, C_ZERO, &ProjPoint::from_affine(z), 30).unwrap();
            assert!(g.value.abs() < 1e-12);
        }
    }

    #[test]
    fn green_escaping_orbit_stabilizes() {
        // z²+1 at z = 0 escapes; value stable to 1e-9 between depths 50 and 60
        let fam = FamilySpec::quadratic();
        let z = ProjPoint::from_affine(C_ZERO);
        let g50 = green(&fam, C_ONE, &z, 50).unwrap();
        let g60 = green(&fam, C_ONE, &z, 60).unwrap();
        assert!(g60.value > 0.1);
        assert!((g60.value - g50.value).abs() < 1e-9);
        assert!(g50.tail_bound < 1e-9);
    }

    #[test]
    fn green_functional_equation() {
        // |G(f z) − d·G(z)| small for random (λ, z) in the quadratic family
        let fam = FamilySpec::quadratic();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let lambda = cx(rng.gen_range(-1.5..0.5), rng.gen_range(-1.0..1.0));
            let z = ProjPoint::from_affine(cx(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)));
            let gz = green(&fam, lambda, &z, 40).unwrap();
            let fz = crate::family::evaluate(&fam, lambda, &z).unwrap();
            let gfz = green(&fam, lambda, &fz, 40).unwrap();
            let defect = (gfz.value - 2.0 * gz.value).abs();
            assert!(
                defect <= 1e-8 + 2.0 * gz.tail_bound + gfz.tail_bound,
                "functional equation defect {defect}"
            );
        }
    }

    #[test]
    fn sample_circle_is_uniform() {
        // z²: μ is arc length on the unit circle
        let fam = FamilySpec::power(2);
        let sample = sample_equilibrium(&fam, C_ZERO, 4096, 30, 11).unwrap();
        let mut angles = Vec::new();
        for p in &sample.points {
            let z = p.affine().unwrap();
            assert!((z.norm() - 1.0).abs() < 1e-6);
            angles.push(z.arg().rem_euclid(2.0 * PI));
        }
        let d = ks_statistic(&angles, |t| (t / (2.0 * PI)).clamp(0.0, 1.0));
        assert!(d < 0.05, "KS = {d}");
    }

    #[test]
    fn sample_chebyshev_arcsine_law() {
        // z²−2: μ has CDF arccos(−x/2)/π on [−2, 2]
        let fam = FamilySpec::quadratic();
        let sample = sample_equilibrium(&fam, cx(-2.0, 0.0), 4096, 30, 3).unwrap();
        let xs: Vec<f64> = sample
            .points
            .iter()
            .map(|p| {
                let z = p.affine().unwrap();
                assert!(z.im.abs() < 1e-6 && z.re.abs() <= 2.0 + 1e-6);
                z.re
            })
            .collect();
        let d = ks_statistic(&xs, |x| ((-x / 2.0).clamp(-1.0, 1.0)).acos() / PI);
        assert!(d < 0.05, "KS = {d}");
    }

    #[test]
    fn inverse_iteration_fiber_consistency() {
        // applying f_λ depth times returns the seed point
        let fam = FamilySpec::quadratic();
        let lambda = cx(0.0, 0.25);
        let depth = 30;
        let sample = sample_equilibrium(&fam, lambda, 64, depth, 5).unwrap();
        for p in &sample.points {
            let fwd = crate::family::iterate(&fam, lambda, p, depth).unwrap();
            assert!(
                fwd.chordal(&sample.seed_point) < 1e-6,
                "forward orbit misses the seed: {}",
                fwd.chordal(&sample.seed_point)
            );
        }
    }

    #[test]
    fn sampling_is_deterministic_and_order_free() {
        let fam = FamilySpec::quadratic();
        let a = sample_equilibrium(&fam, cx(-1.0, 0.0), 32, 20, 9).unwrap();
        let b = sample_equilibrium(&fam, cx(-1.0, 0.0), 32, 20, 9).unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            assert_eq!(p.coords(), q.coords());
        }
        // prefix property: the first 16 points of a 32-point sample equal
        // a 16-point sample (per-index substreams)
        let c = sample_equilibrium(&fam, cx(-1.0, 0.0), 16, 20, 9).unwrap();
        for (p, q) in c.points.iter().zip(&a.points) {
            assert_eq!(p.coords(), q.coords());
        }
    }

    #[test]
    fn pushforward_invariance() {
        let fam = FamilySpec::quadratic();
        let lambda = cx(-1.0, 0.0);
        let sample = sample_equilibrium(&fam, lambda, 2048, 30, 21).unwrap();
        let pushed = push_forward(&fam, &sample).unwrap();
        let fresh = sample_equilibrium(&fam, lambda, 2048, 30, 22).unwrap();
        for proj in [0usize, 1] {
            let coord = |s: &MeasureSample| -> Vec<(f64, f64)> {
                s.points
                    .iter()
                    .map(|p| {
                        let z = p.affine().unwrap();
                        (if proj == 0 { z.re } else { z.im }, 1.0)
                    })
                    .collect()
            };
            let d = ks_two_sample_weighted(&coord(&pushed), &coord(&fresh));
            assert!(d < 0.08, "projection {proj}: KS = {d}");
        }
    }

    #[test]
    fn birkhoff_power_maps() {
        // z² -> log 2 (|Jac_FS| ≡ 2 on the circle), z³ -> log 3
        let fam2 = FamilySpec::power(2);
        let s2 = sample_equilibrium(&fam2, C_ZERO, 128, 30, 17).unwrap();
        let b2 = birkhoff_lyapunov(&fam2, C_ZERO, &s2, 50).unwrap();
        assert!((b2.value - 2.0f64.ln()).abs() < 1e-6, "{}", b2.value);

        let fam3 = FamilySpec::power(3);
        let s3 = sample_equilibrium(&fam3, C_ZERO, 128, 20, 17).unwrap();
        let b3 = birkhoff_lyapunov(&fam3, C_ZERO, &s3, 50).unwrap();
        assert!((b3.value - 3.0f64.ln()).abs() < 1e-6, "{}", b3.value);
    }

    #[test]
    fn birkhoff_basilica_matches_log_two() {
        // z²−1 has bounded critical orbit, so L = log 2
        let fam = FamilySpec::quadratic();
        let lambda = cx(-1.0, 0.0);
        let sample = sample_equilibrium(&fam, lambda, 4096, 30, 31).unwrap();
        let b = birkhoff_lyapunov(&fam, lambda, &sample, 200).unwrap();
        assert!(
            (b.value - 2.0f64.ln()).abs() < 3.0 * b.std_error.max(1e-3),
            "L = {} ± {}",
            b.value,
            b.std_error
        );
    }
}
