//! Critical points of f_λ and their continuation over parameter grids
//! (marked critical tracks).

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::family::spec::{Cx, FamilySpec, HomPoly, ParamRect};
use crate::family::ProjPoint;

const C_ZERO: Cx = Complex::new(0.0, 0.0);

/// Two critical points closer than this (chordal) cannot be told apart by
/// continuation; approaching tracks are reported as collisions.
pub const COLLISION_TOL: f64 = 1e-6;

/// Equality tolerance for projective points.
pub const POINT_EQ_TOL: f64 = 1e-9;

/// Maximum number of step subdivisions when a continuation match is
/// ambiguous.
const MAX_SUBDIVISIONS: usize = 16;

/// Regular grid of parameter samples (cell centers of a rectangle).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    pub rect: ParamRect,
    pub nx: usize,
    pub ny: usize,
}

impl ParamGrid {
    pub fn new(rect: ParamRect, nx: usize, ny: usize) -> Self {
        assert!(nx > 0 && ny > 0);
        ParamGrid { rect, nx, ny }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, i: usize, j: usize) -> Cx {
        Cx::new(
            self.rect.re[0] + (i as f64 + 0.5) * self.rect.width() / self.nx as f64,
            self.rect.im[0] + (j as f64 + 0.5) * self.rect.height() / self.ny as f64,
        )
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn nearest_index(&self, lambda: Cx) -> usize {
        let fi = (lambda.re - self.rect.re[0]) / self.rect.width() * self.nx as f64 - 0.5;
        let fj = (lambda.im - self.rect.im[0]) / self.rect.height() * self.ny as f64 - 0.5;
        let i = (fi.round().max(0.0) as usize).min(self.nx - 1);
        let j = (fj.round().max(0.0) as usize).min(self.ny - 1);
        self.index(i, j)
    }

    /// Serpentine traversal covering all nodes, each (except the first)
    /// paired with an already-visited neighbor.
    pub fn serpentine(&self) -> Vec<(usize, Option<usize>)> {
        let mut order = Vec::with_capacity(self.len());
        for j in 0..self.ny {
            let row: Vec<usize> = if j % 2 == 0 {
                (0..self.nx).collect()
            } else {
                (0..self.nx).rev().collect()
            };
            for (pos, &i) in row.iter().enumerate() {
                let idx = self.index(i, j);
                let prev = if pos > 0 {
                    Some(self.index(row[pos - 1], j))
                } else if j > 0 {
                    Some(self.index(i, j - 1))
                } else {
                    None
                };
                order.push((idx, prev));
            }
        }
        order
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum TrackKind {
    CriticalMarking,
    Postcritical,
    InverseBranch,
    RepellingPoint,
}

/// A holomorphically continued point function λ ↦ γ(λ) sampled on a grid.
#[derive(Debug, Clone)]
pub struct MotionTrack {
    pub grid: ParamGrid,
    pub values: Vec<ProjPoint>,
    pub kind: TrackKind,
    pub multiplicity: usize,
    /// Largest chordal step between grid-adjacent samples.
    pub max_step: f64,
}

impl MotionTrack {
    pub fn value_at_index(&self, idx: usize) -> &ProjPoint {
        &self.values[idx]
    }

    pub fn value_near(&self, lambda: Cx) -> &ProjPoint {
        &self.values[self.grid.nearest_index(lambda)]
    }

    fn compute_max_step(grid: &ParamGrid, values: &[ProjPoint]) -> f64 {
        let mut max = 0.0f64;
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let idx = grid.index(i, j);
                if i + 1 < grid.nx {
                    max = max.max(values[idx].chordal(&values[grid.index(i + 1, j)]));
                }
                if j + 1 < grid.ny {
                    max = max.max(values[idx].chordal(&values[grid.index(i, j + 1)]));
                }
            }
        }
        max
    }
}

/// Critical points at one parameter, clustered by multiplicity.
pub type ClusteredRoots = Vec<(ProjPoint, usize)>;

/// Wronskian of the two lift components: homogeneous of degree 2d−2,
/// its projective roots are the critical points of f_λ (k = 1).
pub fn wronskian(family: &FamilySpec) -> HomPoly {
    assert_eq!(family.k, 1, "wronskian is a k=1 construction");
    let p = &family.components[0];
    let q = &family.components[1];
    p.partial(0).mul(&q.partial(1)).sub(&p.partial(1).mul(&q.partial(0)))
}

/// Critical points of f_λ with multiplicities (2d−2 points counted with
/// multiplicity, including the point at infinity).
pub fn critical_points_at(wr: &HomPoly, lambda: Cx, d: usize) -> Result<ClusteredRoots> {
    let poly = wr.dehomogenize_k1(lambda, 1);
    let (finite, inf_mult) = poly.roots_projective(2 * d - 2, 1e-11);
    let mut points: Vec<ProjPoint> = finite.into_iter().map(ProjPoint::from_affine).collect();
    for _ in 0..inf_mult {
        points.push(ProjPoint::infinity());
    }
    Ok(cluster(points))
}

fn cluster(points: Vec<ProjPoint>) -> ClusteredRoots {
    let mut clusters: ClusteredRoots = Vec::new();
    for p in points {
        match clusters
            .iter_mut()
            .find(|(q, _)| q.chordal(&p) <= COLLISION_TOL)
        {
            Some((_, m)) => *m += 1,
            None => clusters.push((p, 1)),
        }
    }
    // deterministic order: by multiplicity then coordinates
    clusters.sort_by(|a, b| {
        let ka = (a.1, a.0.coords()[0].re, a.0.coords()[0].im, a.0.coords()[1].re);
        let kb = (b.1, b.0.coords()[0].re, b.0.coords()[0].im, b.0.coords()[1].re);
        ka.partial_cmp(&kb).unwrap()
    });
    clusters
}

fn multiplicity_pattern(c: &ClusteredRoots) -> Vec<usize> {
    let mut m: Vec<usize> = c.iter().map(|(_, m)| *m).collect();
    m.sort_unstable();
    m
}

/// Match each source cluster to a target cluster of equal multiplicity.
/// Fails with `None` when ambiguous (a margin rule: the chosen target must
/// be markedly closer than the runner-up, and targets must not be reused).
fn match_clusters(src: &ClusteredRoots, dst: &ClusteredRoots) -> Option<Vec<usize>> {
    if multiplicity_pattern(src) != multiplicity_pattern(dst) {
        return None;
    }
    let mut used = vec![false; dst.len()];
    let mut assignment = vec![usize::MAX; src.len()];
    for (si, (sp, sm)) in src.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        let mut second = f64::INFINITY;
        for (di, (dp, dm)) in dst.iter().enumerate() {
            if dm != sm {
                continue;
            }
            let dist = sp.chordal(dp);
            match best {
                Some((_, bd)) if dist < bd => {
                    second = bd;
                    best = Some((di, dist));
                }
                Some((_, bd)) => second = second.min(dist).max(bd.min(second)),
                None => best = Some((di, dist)),
            }
        }
        let (di, dist) = best?;
        if used[di] {
            return None;
        }
        // ambiguous when the runner-up is nearly as close
        if second.is_finite() && dist > 0.5 * second {
            return None;
        }
        used[di] = true;
        assignment[si] = di;
    }
    Some(assignment)
}

/// Continue clusters from λ₀ (with known clusters) to λ₁, subdividing the
/// segment when matching is ambiguous.
fn continue_clusters(
    wr: &HomPoly,
    d: usize,
    lambda0: Cx,
    from: &ClusteredRoots,
    lambda1: Cx,
    depth: usize,
) -> Result<Vec<usize>> {
    let to = critical_points_at(wr, lambda1, d)?;
    if let Some(assignment) = match_clusters(from, &to) {
        return Ok(assignment);
    }
    if depth >= MAX_SUBDIVISIONS {
        // distinguish a genuine merge from an unresolved ambiguity
        let sep = min_cluster_separation(&to);
        return Err(Error::Collision {
            lambda: format!("{lambda1}"),
            separation: sep,
        });
    }
    let mid = 0.5 * (lambda0 + lambda1);
    let first = continue_clusters(wr, d, lambda0, from, mid, depth + 1)?;
    let mid_clusters = critical_points_at(wr, mid, d)?;
    let reordered: ClusteredRoots = first
        .iter()
        .map(|&idx| mid_clusters[idx].clone())
        .collect();
    let second = continue_clusters(wr, d, mid, &reordered, lambda1, depth + 1)?;
    Ok(second)
}

fn min_cluster_separation(c: &ClusteredRoots) -> f64 {
    let mut sep = f64::INFINITY;
    for i in 0..c.len() {
        for j in i + 1..c.len() {
            sep = sep.min(c[i].0.chordal(&c[j].0));
        }
    }
    sep
}

/// Build the 2d−2 marked critical tracks over the grid.
///
/// Tracks are continued by nearest-root matching along a serpentine path
/// with step-halving on ambiguity; merging tracks raise
/// [`Error::Collision`]. A post-pass checks vertical neighbors so that a
/// monodromy mismatch across the grid is reported instead of silently
/// reordering markings.
pub fn critical_marking(family: &FamilySpec, grid: &ParamGrid) -> Result<Vec<MotionTrack>> {
    if family.k != 1 {
        return Err(Error::WrongDimension {
            expected: 1,
            actual: family.k,
        });
    }
    let wr = wronskian(family);
    let order = grid.serpentine();
    let mut per_node: Vec<Option<ClusteredRoots>> = vec![None; grid.len()];

    for (idx, prev) in &order {
        let lambda = node_of(grid, *idx);
        match prev {
            None => {
                let c = critical_points_at(&wr, lambda, family.d)?;
                // first node defines the reference pattern; a same-node
                // merge shows up later as a pattern change elsewhere
                per_node[*idx] = Some(c);
            }
            Some(p) => {
                let from = per_node[*p].as_ref().unwrap().clone();
                let lambda0 = node_of(grid, *p);
                let assignment = continue_clusters(&wr, family.d, lambda0, &from, lambda, 0)?;
                let to = critical_points_at(&wr, lambda, family.d)?;
                let reordered: ClusteredRoots =
                    assignment.iter().map(|&i| to[i].clone()).collect();
                per_node[*idx] = Some(reordered);
            }
        }
    }

    // vertical-consistency post-pass (monodromy detection)
    for j in 1..grid.ny {
        for i in 0..grid.nx {
            let above = per_node[grid.index(i, j - 1)].as_ref().unwrap();
            let here = per_node[grid.index(i, j)].as_ref().unwrap();
            if let Some(assignment) = match_clusters(above, here) {
                if assignment.iter().enumerate().any(|(a, &b)| a != b) {
                    return Err(Error::Collision {
                        lambda: format!("{}", grid.node(i, j)),
                        separation: min_cluster_separation(here),
                    });
                }
            }
            // ambiguous vertical matches are tolerated: the serpentine
            // path already continued through this node
        }
    }

    let n_tracks = per_node[order[0].0].as_ref().unwrap().len();
    let mut tracks = Vec::with_capacity(n_tracks);
    for t in 0..n_tracks {
        let values: Vec<ProjPoint> = (0..grid.len())
            .map(|idx| per_node[idx].as_ref().unwrap()[t].0.clone())
            .collect();
        let multiplicity = per_node[order[0].0].as_ref().unwrap()[t].1;
        let max_step = MotionTrack::compute_max_step(grid, &values);
        tracks.push(MotionTrack {
            grid: grid.clone(),
            values,
            kind: TrackKind::CriticalMarking,
            multiplicity,
            max_step,
        });
    }
    Ok(tracks)
}

fn node_of(grid: &ParamGrid, idx: usize) -> Cx {
    grid.node(idx % grid.nx, idx / grid.nx)
}

/// A marking value polished at an arbitrary parameter, with the chart used
/// and the implicit λ-derivative of the chart coordinate.
#[derive(Debug, Clone)]
pub struct MarkingValue {
    pub point: ProjPoint,
    /// Denominator coordinate index of the chart in which `t` lives.
    pub chart: usize,
    pub t: Cx,
    pub dt_dlambda: Cx,
}

/// Critical markings of a family along with the symbolic Wronskian, ready
/// for polishing at off-grid parameters.
#[derive(Debug, Clone)]
pub struct Markings {
    pub tracks: Vec<MotionTrack>,
    pub wronskian: HomPoly,
    pub d: usize,
}

impl Markings {
    pub fn compute(family: &FamilySpec, grid: &ParamGrid) -> Result<Self> {
        Ok(Markings {
            tracks: critical_marking(family, grid)?,
            wronskian: wronskian(family),
            d: family.d,
        })
    }

    /// Number of distinct tracks.
    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    /// Polish track `idx` at λ by multiplicity-aware Newton on the
    /// Wronskian, seeded from the nearest grid sample. Also returns the
    /// implicit derivative dc/dλ in the chart used.
    pub fn polish_at(&self, idx: usize, lambda: Cx) -> Result<MarkingValue> {
        let track = &self.tracks[idx];
        let seed = track.value_near(lambda);
        polish_critical(&self.wronskian, lambda, seed, track.multiplicity)
    }
}

/// Newton-polish a critical point of multiplicity `mult` at parameter λ,
/// starting from `seed`. Works in the chart adapted to the seed. For a
/// persistent multiple root the (mult−1)-th derivative of the Wronskian is
/// used, which has the track as a simple root.
pub fn polish_critical(
    wr: &HomPoly,
    lambda: Cx,
    seed: &ProjPoint,
    mult: usize,
) -> Result<MarkingValue> {
    let chart = if seed.coords()[1].norm() >= seed.coords()[0].norm() {
        1
    } else {
        0
    };
    let mut w = wr.dehomogenize_k1(lambda, chart);
    let mut wl = wr.dehomogenize_k1_dlambda(lambda, chart);
    for _ in 1..mult {
        w = w.derivative();
        wl = wl.derivative();
    }
    let mut t = {
        let c = seed.coords();
        if chart == 1 {
            c[0] / c[1]
        } else {
            c[1] / c[0]
        }
    };
    let scale = w.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        // Wronskian derivative identically zero: every point critical at
        // this multiplicity; keep the seed, zero velocity.
        return Ok(MarkingValue {
            point: seed.clone(),
            chart,
            t,
            dt_dlambda: C_ZERO,
        });
    }
    let mut converged = false;
    for _ in 0..40 {
        let (v, dv) = w.eval_with_derivative(t);
        if dv.norm() < 1e-14 * scale {
            break;
        }
        let step = v / dv;
        t -= step;
        if step.norm() < 1e-13 * (1.0 + t.norm()) {
            converged = true;
            break;
        }
    }
    let (v, dv) = w.eval_with_derivative(t);
    if !converged && v.norm() > 1e-7 * scale {
        return Err(Error::RootFinding(format!(
            "marking polish failed at λ = {lambda} (residual {:.2e})",
            v.norm() / scale
        )));
    }
    let dt = if dv.norm() > 1e-13 * scale {
        -wl.eval(t) / dv
    } else {
        C_ZERO
    };
    let point = if chart == 1 {
        ProjPoint::from_affine(t)
    } else {
        ProjPoint::new(vec![Complex::new(1.0, 0.0), t])?
    };
    Ok(MarkingValue {
        point,
        chart,
        t,
        dt_dlambda: dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Poly;

    fn cx(re: f64, im: f64) -> Cx {
        Cx::new(re, im)
    }

    #[test]
    fn quadratic_markings_are_constant() {
        let fam = FamilySpec::quadratic();
        let grid = ParamGrid::new(ParamRect::new([-1.0, 1.0], [-1.0, 1.0]), 8, 8);
        let tracks = critical_marking(&fam, &grid).unwrap();
        assert_eq!(tracks.len(), 2);
        let mut has_zero = false;
        let mut has_inf = false;
        for t in &tracks {
            assert_eq!(t.multiplicity, 1);
            assert!(t.max_step < 1e-12);
            if t.values[0].is_infinity() {
                has_inf = true;
            }
            if t.values[0].approx_eq(&ProjPoint::from_affine(C_ZERO), 1e-12) {
                has_zero = true;
            }
        }
        assert!(has_zero && has_inf);
    }

    #[test]
    fn cubic_markings_follow_sqrt_branches() {
        // z³+λz: finite critical points ±√(−λ/3), ∞ with multiplicity 2
        let fam = FamilySpec::cubic_odd();
        let grid = ParamGrid::new(ParamRect::new([-3.5, -2.5], [-0.4, 0.4]), 9, 5);
        let tracks = critical_marking(&fam, &grid).unwrap();
        assert_eq!(tracks.len(), 3);
        let inf_track = tracks.iter().find(|t| t.values[0].is_infinity()).unwrap();
        assert_eq!(inf_track.multiplicity, 2);

        // at λ = −3 the finite markings are ±1
        let idx = grid.nearest_index(cx(-3.0, 0.0));
        let lam = node_of(&grid, idx);
        let expect = (-lam / 3.0).sqrt();
        let finite: Vec<&MotionTrack> = tracks.iter().filter(|t| !t.values[0].is_infinity()).collect();
        assert_eq!(finite.len(), 2);
        for t in finite {
            let v = t.values[idx].affine().unwrap();
            assert!(
                (v - expect).norm() < 1e-9 || (v + expect).norm() < 1e-9,
                "marking {v} does not match ±{expect}"
            );
            assert!(t.max_step < 0.1);
        }
    }

    #[test]
    fn cubic_collision_at_zero() {
        // grid crossing λ = 0 where the ±√(−λ/3) tracks merge
        let fam = FamilySpec::cubic_odd();
        let grid = ParamGrid::new(ParamRect::new([-0.1, 0.1], [-0.05, 0.05]), 5, 5);
        match critical_marking(&fam, &grid) {
            Err(Error::Collision { .. }) => {}
            other => panic!("expected collision, got {other:?}"),
        }
    }

    #[test]
    fn marking_completeness_reproduces_wronskian() {
        // product of (z - c_j) over finite markings ∝ dehomogenized Wronskian
        let fam = FamilySpec::cubic_odd();
        let grid = ParamGrid::new(ParamRect::new([-3.2, -2.8], [-0.1, 0.1]), 3, 3);
        let tracks = critical_marking(&fam, &grid).unwrap();
        let wr = wronskian(&fam);
        for idx in 0..grid.len() {
            let lambda = node_of(&grid, idx);
            let mut prod = Poly::new(vec![Complex::new(1.0, 0.0)]);
            for t in &tracks {
                if t.values[idx].is_infinity() {
                    continue;
                }
                let c = t.values[idx].affine().unwrap();
                for _ in 0..t.multiplicity {
                    prod = prod.mul(&Poly::new(vec![-c, Complex::new(1.0, 0.0)]));
                }
            }
            let w = wr.dehomogenize_k1(lambda, 1);
            let deg = w.trimmed_degree(1e-12).unwrap();
            assert_eq!(deg, prod.coeffs.len() - 1);
            let unit = w.coeffs[deg] / prod.coeffs[deg];
            for (a, b) in prod.coeffs.iter().zip(&w.coeffs) {
                assert!((a * unit - b).norm() < 1e-8 * (1.0 + b.norm()));
            }
        }
    }

    #[test]
    fn polish_tracks_sqrt_branch_with_derivative() {
        let fam = FamilySpec::cubic_odd();
        let grid = ParamGrid::new(ParamRect::new([-3.2, -2.8], [-0.1, 0.1]), 3, 3);
        let markings = Markings::compute(&fam, &grid).unwrap();
        let lambda = cx(-3.01, 0.02);
        for idx in 0..markings.len() {
            let mv = markings.polish_at(idx, lambda).unwrap();
            if mv.point.is_infinity() {
                continue;
            }
            let c = mv.point.affine().unwrap();
            // residual of 3z² + λ = 0
            assert!((3.0 * c * c + lambda).norm() < 1e-10);
            // dc/dλ = −1/(6c)
            let expect = -1.0 / (6.0 * c);
            assert!((mv.dt_dlambda - expect).norm() < 1e-8);
        }
    }
}
