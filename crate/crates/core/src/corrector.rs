//! Majority-vote correction of nearly line-preserving maps, and recovery of
//! the semilinear map behind a line-preserving one.
//!
//! For a point `x`, a pointed line is a triple `(L, y1, y2)` with `L` through
//! `x` and `y1 ≠ y2` on `L \ {x}`. A pair of pointed lines `(y1, y2)`,
//! `(y3, y4)` votes for `z` when `Sp(y1, y3)` and `Sp(y2, y4)` are both sent
//! to lines by `f`, and the image lines `Sp(f(y1), f(y2))` and
//! `Sp(f(y3), f(y4))` are distinct and meet in the single point `z`. The
//! corrected value at `x` is the `z` holding at least half of all pairs.

use std::time::Instant;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, rational_json, BoundReport, Rational};
use crate::error::{Error, Result};
use crate::field::{Elem, Frobenius, GaloisField};
use crate::gadgets::{self, MarkedLine};
use crate::harness::derive_seed;
use crate::linalg;
use crate::projspace::{ordered_pairs_excluding, Incidence, PointMap, ProjLine, ProjPoint, ProjSpace};

/// `[v] ↦ [M·σ(v)]`, with `M` scaled so its first nonzero entry in
/// row-major order is 1. Two maps with the same projective action compare
/// equal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemilinearMap {
    field: GaloisField,
    sigma: Frobenius,
    matrix: Vec<Vec<Elem>>,
}

/// Serialized form of a [`SemilinearMap`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemilinearFile {
    pub sigma_exponent: u32,
    pub matrix: Vec<Vec<Elem>>,
}

impl SemilinearMap {
    pub fn new(field: &GaloisField, sigma: Frobenius, mut matrix: Vec<Vec<Elem>>) -> Result<Self> {
        let d = matrix.len();
        if d < 2 || matrix.iter().any(|r| r.len() != d) {
            return Err(Error::invalid("matrix must be square of size at least 2"));
        }
        if matrix.iter().flatten().any(|&c| !field.contains(c)) {
            return Err(Error::invalid("matrix entry outside the field"));
        }
        if linalg::rank(field, &matrix) != d {
            return Err(Error::invalid("matrix is singular"));
        }
        let lead = *matrix.iter().flatten().find(|&&c| c != 0).unwrap();
        let s = field.inv(lead);
        for row in &mut matrix {
            for c in row.iter_mut() {
                *c = field.mul(s, *c);
            }
        }
        Ok(SemilinearMap { field: field.clone(), sigma: Frobenius::new(sigma.exponent(), field), matrix })
    }

    pub fn identity(field: &GaloisField, n: usize) -> Self {
        let matrix = (0..=n).map(|i| (0..=n).map(|j| (i == j) as Elem).collect()).collect();
        SemilinearMap { field: field.clone(), sigma: Frobenius::identity(), matrix }
    }

    pub fn field(&self) -> &GaloisField {
        &self.field
    }

    pub fn sigma(&self) -> Frobenius {
        self.sigma
    }

    pub fn matrix(&self) -> &[Vec<Elem>] {
        &self.matrix
    }

    /// Projective dimension acted on.
    pub fn dim(&self) -> usize {
        self.matrix.len() - 1
    }

    pub fn apply_vector(&self, v: &[Elem]) -> Vec<Elem> {
        let sv: Vec<Elem> = v.iter().map(|&c| self.sigma.apply_code(&self.field, c)).collect();
        linalg::mat_vec(&self.field, &self.matrix, &sv)
    }

    /// # Panics
    /// If `x` does not have `dim() + 1` coordinates.
    pub fn apply(&self, x: &ProjPoint) -> ProjPoint {
        assert_eq!(x.coords().len(), self.matrix.len(), "dimension mismatch");
        ProjPoint::from_vector(&self.field, self.apply_vector(x.coords())).expect("matrix is invertible")
    }

    /// Tabulates the action on `space`.
    pub fn to_point_map(&self, space: &ProjSpace) -> Result<PointMap> {
        if space.dim() != self.dim() || *space.field() != self.field {
            return Err(Error::invalid("semilinear map does not act on this space"));
        }
        let mut buf = vec![0; space.dim() + 1];
        let table = (0..space.num_points())
            .map(|i| {
                space.coords_into(i, &mut buf);
                let mut img = self.apply_vector(&buf);
                linalg::normalize(&self.field, &mut img);
                space.index_of_coords(&img) as u32
            })
            .collect();
        PointMap::new(space.clone(), space.clone(), table)
    }

    pub fn to_file(&self) -> SemilinearFile {
        SemilinearFile { sigma_exponent: self.sigma.exponent(), matrix: self.matrix.clone() }
    }

    pub fn from_file(field: &GaloisField, file: SemilinearFile) -> Result<Self> {
        if file.sigma_exponent >= field.degree() {
            return Err(Error::invalid("sigma exponent out of range"));
        }
        SemilinearMap::new(field, Frobenius::new(file.sigma_exponent, field), file.matrix)
    }
}

pub fn apply_semilinear(m: &SemilinearMap, x: &ProjPoint) -> ProjPoint {
    m.apply(x)
}

/// How [`correct_map`] decides each point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CorrectionMode {
    /// Every pair of pointed lines; majority is at least half of all pairs.
    Exact,
    /// `samples` uniform pairs per point; the modal candidate must reach
    /// `threshold`. ε is estimated from `line_samples` uniform lines.
    Sampled { samples: usize, threshold: f64, seed: u64, line_samples: usize },
}

impl CorrectionMode {
    pub fn sampled(seed: u64) -> Self {
        CorrectionMode::Sampled { samples: 200, threshold: 0.6, seed, line_samples: 10_000 }
    }
}

/// Result of correcting one point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionOutcome {
    /// Domain point index.
    pub x: usize,
    /// Codomain point index, or `None` when no candidate won.
    pub z: Option<usize>,
    /// Pairs voting for the leading candidate.
    pub votes: u64,
    pub quadruples_examined: u64,
}

impl CorrectionOutcome {
    pub fn majority_fraction(&self) -> Rational {
        if self.quadruples_examined == 0 {
            return Rational::zero();
        }
        Rational::new(BigInt::from(self.votes), BigInt::from(self.quadruples_examined))
    }
}

/// How ε was obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EpsMeasurement {
    Exact {
        #[serde(with = "rational_json")]
        eps: Rational,
    },
    Sampled { estimate: f64, stderr: f64, bad: u64, samples: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectionReport {
    pub mode: CorrectionMode,
    pub eps: EpsMeasurement,
    pub outcomes: Vec<CorrectionOutcome>,
    /// Fraction of points where the output equals the input.
    #[serde(with = "rational_json")]
    pub agreement_with_input: Rational,
    pub uncorrectable_count: usize,
    /// Corrected values discarded because they collided with another point's
    /// value; those points keep `f(x)`.
    pub reverted_for_injectivity: usize,
    /// Bounds at the measured ε. In sampled mode ε is the raw sample
    /// fraction and `guarantee_applicable` is always false.
    pub bound_report: BoundReport,
    pub elapsed_seconds: f64,
}

/// Whether `f` sends the points of `l` onto a line.
pub fn preserves_line(f: &PointMap, l: &ProjLine) -> bool {
    gadgets::image_line(f, l).is_some()
}

fn check_enumerable(f: &PointMap) -> Result<()> {
    let lines = f.domain().num_lines();
    if lines > crate::projspace::MAX_ENUMERABLE_LINES {
        return Err(Error::TooLarge(format!(
            "{:?} has {lines} lines; exact mode needs at most {}; use the sampled mode",
            f.domain(),
            crate::projspace::MAX_ENUMERABLE_LINES
        )));
    }
    Ok(())
}

/// Preservation flag for every domain line, indexed by line index.
fn preserved_table(f: &PointMap) -> Result<Vec<bool>> {
    check_enumerable(f)?;
    let dom = f.domain();
    Ok((0..dom.num_lines())
        .into_par_iter()
        .map(|id| preserves_line(f, &dom.line_at(id)))
        .collect())
}

fn fraction(num: u64, den: u64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Exact proportion of domain lines sent to lines.
pub fn preserved_line_fraction_exact(f: &PointMap) -> Result<Rational> {
    let t = preserved_table(f)?;
    Ok(fraction(t.iter().filter(|&&b| b).count() as u64, t.len() as u64))
}

/// Number of preserved lines among `samples` uniform lines.
fn sample_preserved(f: &PointMap, samples: usize, seed: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dom = f.domain();
    (0..samples).filter(|_| preserves_line(f, &dom.sample_line_with(&mut rng))).count() as u64
}

/// Monte Carlo estimate of the preserved-line fraction and its standard error.
pub fn preserved_line_fraction_sampled(f: &PointMap, samples: usize, seed: u64) -> Result<(f64, f64)> {
    if samples == 0 {
        return Err(Error::invalid("samples must be at least 1"));
    }
    let hits = sample_preserved(f, samples, seed);
    Ok(estimate(hits, samples as u64))
}

fn estimate(hits: u64, samples: u64) -> (f64, f64) {
    let p = hits as f64 / samples as f64;
    (p, (p * (1.0 - p) / samples as f64).sqrt())
}

/// Every line is sent to a line; otherwise the first failing line in index
/// order.
pub fn is_line_preserving(f: &PointMap) -> Result<(bool, Option<ProjLine>)> {
    check_enumerable(f)?;
    let dom = f.domain();
    let bad = (0..dom.num_lines()).into_par_iter().find_first(|&id| !preserves_line(f, &dom.line_at(id)));
    Ok(match bad {
        None => (true, None),
        Some(id) => (false, Some(dom.line_at(id))),
    })
}

/// Shared read-only state for exact correction of one map.
struct ExactContext<'a> {
    f: &'a PointMap,
    dom: Incidence,
    cod: Incidence,
    preserved: Vec<bool>,
}

/// A pointed line at `x` with its image line.
struct Pointed {
    y1: usize,
    y2: usize,
    image_id: u64,
    image_points: Vec<usize>,
}

/// The common point of two distinct lines given as sorted point lists.
fn sorted_meet(a: &[usize], b: &[usize]) -> Option<usize> {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return Some(a[i]),
        }
    }
    None
}

impl<'a> ExactContext<'a> {
    fn new(f: &'a PointMap) -> Result<Self> {
        let preserved = preserved_table(f)?;
        Ok(ExactContext { f, dom: Incidence::new(f.domain()), cod: Incidence::new(f.codomain()), preserved })
    }

    fn pointed_lines(&self, x: usize) -> Vec<Pointed> {
        let mut out = Vec::with_capacity(self.dom.space().pointed_lines_per_point());
        for (_, pts) in self.dom.space().lines_through_index(x) {
            for (y1, y2) in ordered_pairs_excluding(&pts, x) {
                let (a, b) = (self.f.image(y1), self.f.image(y2));
                out.push(Pointed {
                    y1,
                    y2,
                    image_id: self.cod.line_id(a, b),
                    image_points: self.cod.line_points_through(a, b),
                });
            }
        }
        out
    }

    fn preserved(&self, a: usize, b: usize) -> bool {
        self.preserved[self.dom.line_id(a, b) as usize]
    }

    fn correct(&self, x: usize) -> CorrectionOutcome {
        let pencil = self.pointed_lines(x);
        let mut votes = vec![0u64; self.cod.space().num_points()];
        for p in &pencil {
            for r in &pencil {
                if p.y1 == r.y1 || p.y2 == r.y2 || p.image_id == r.image_id {
                    continue;
                }
                if !self.preserved(p.y1, r.y1) || !self.preserved(p.y2, r.y2) {
                    continue;
                }
                if let Some(z) = sorted_meet(&p.image_points, &r.image_points) {
                    votes[z] += 1;
                }
            }
        }
        let total = (pencil.len() * pencil.len()) as u64;
        decide_exact(x, &votes, total)
    }
}

/// At least half of `total`; two candidates at exactly one half cancel.
fn decide_exact(x: usize, votes: &[u64], total: u64) -> CorrectionOutcome {
    let winners: Vec<usize> = (0..votes.len()).filter(|&z| 2 * votes[z] >= total && votes[z] > 0).collect();
    // vote sets of distinct candidates are disjoint
    debug_assert!(votes.iter().sum::<u64>() <= total);
    debug_assert!(winners.len() <= 2);
    let best = votes.iter().copied().max().unwrap_or(0);
    CorrectionOutcome {
        x,
        z: (winners.len() == 1).then(|| winners[0]),
        votes: best,
        quadruples_examined: total,
    }
}

pub fn correct_point_exact(f: &PointMap, x: &ProjPoint) -> Result<CorrectionOutcome> {
    f.domain().check_point(x)?;
    Ok(ExactContext::new(f)?.correct(f.domain().index_of(x)))
}

/// A uniform pointed line at `x`: `y1` uniform off `x`, then `y2` uniform on
/// the rest of `Sp(x, y1)`.
fn sample_pointed<R: Rng>(dom: &ProjSpace, x: usize, rng: &mut R) -> (usize, usize) {
    let n = dom.num_points();
    let mut y1 = rng.random_range(0..n - 1);
    if y1 >= x {
        y1 += 1;
    }
    let pts = dom.line_point_indices(&dom.line_through_indices(x, y1).unwrap());
    let rest: Vec<usize> = pts.into_iter().filter(|&p| p != x && p != y1).collect();
    (y1, rest[rng.random_range(0..rest.len())])
}

/// The vote of one pair of pointed lines, computed without precomputation.
fn vote(f: &PointMap, (y1, y2): (usize, usize), (y3, y4): (usize, usize)) -> Option<usize> {
    let dom = f.domain();
    let cod = f.codomain();
    if y1 == y3 || y2 == y4 {
        return None;
    }
    for (a, b) in [(y1, y3), (y2, y4)] {
        if !preserves_line(f, &dom.line_through_indices(a, b).unwrap()) {
            return None;
        }
    }
    let l1 = cod.line_through_indices(f.image(y1), f.image(y2)).unwrap();
    let l2 = cod.line_through_indices(f.image(y3), f.image(y4)).unwrap();
    match cod.intersect_lines(&l1, &l2) {
        crate::projspace::LineMeet::Point(z) => Some(cod.index_of(&z)),
        _ => None,
    }
}

fn check_sampling(samples: usize, threshold: f64) -> Result<()> {
    if samples == 0 {
        return Err(Error::invalid("samples must be at least 1"));
    }
    if threshold.is_nan() || threshold <= 0.5 {
        return Err(Error::invalid("threshold must exceed 1/2"));
    }
    Ok(())
}

/// Votes over `samples` uniform pairs of pointed lines at `x`. The modal
/// candidate wins if its share reaches `threshold`; a threshold above 1 can
/// never be met.
pub fn correct_point_sampled(
    f: &PointMap,
    x: &ProjPoint,
    samples: usize,
    threshold: f64,
    seed: u64,
) -> Result<CorrectionOutcome> {
    check_sampling(samples, threshold)?;
    f.domain().check_point(x)?;
    Ok(sampled_at(f, f.domain().index_of(x), samples, threshold, seed))
}

fn sampled_at(f: &PointMap, x: usize, samples: usize, threshold: f64, seed: u64) -> CorrectionOutcome {
    let dom = f.domain();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally: std::collections::BTreeMap<usize, u64> = Default::default();
    for _ in 0..samples {
        let p = sample_pointed(dom, x, &mut rng);
        let r = sample_pointed(dom, x, &mut rng);
        if let Some(z) = vote(f, p, r) {
            *tally.entry(z).or_default() += 1;
        }
    }
    // smallest index among the most voted
    let best = tally.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)));
    let (z, votes) = best.map_or((None, 0), |(&z, &v)| (Some(z), v));
    let ok = votes as f64 >= threshold * samples as f64;
    CorrectionOutcome { x, z: z.filter(|_| ok), votes, quadruples_examined: samples as u64 }
}

/// Sets each uncorrectable point to `f(x)`, then reverts colliding corrected
/// values to `f(x)` until the table is injective. Returns the number reverted.
fn assemble(f: &PointMap, outcomes: &[CorrectionOutcome]) -> (Vec<u32>, usize) {
    let mut table: Vec<u32> = outcomes.iter().map(|o| o.z.unwrap_or(f.image(o.x)) as u32).collect();
    let mut reverted = 0;
    loop {
        let mut owners = vec![Vec::new(); f.codomain().num_points()];
        for (x, &z) in table.iter().enumerate() {
            owners[z as usize].push(x);
        }
        let mut changed = false;
        for group in owners.iter().filter(|g| g.len() > 1) {
            for &x in group {
                let orig = f.image(x) as u32;
                if table[x] != orig {
                    table[x] = orig;
                    reverted += 1;
                    changed = true;
                }
            }
        }
        if !changed {
            return (table, reverted);
        }
    }
}

/// Corrects every point of `f` and returns the corrected map with a report.
///
/// Points are processed in parallel on the current rayon pool; results are
/// merged by point index, so output does not depend on scheduling. In
/// sampled mode point `x` uses seed `derive_seed(seed, x)` and ε is estimated
/// with seed `derive_seed(seed, u64::MAX)`.
pub fn correct_map(f: &PointMap, mode: &CorrectionMode) -> Result<(PointMap, CorrectionReport)> {
    let start = Instant::now();
    let dom = f.domain();
    let (outcomes, eps_m, eps): (Vec<CorrectionOutcome>, EpsMeasurement, Rational) = match *mode {
        CorrectionMode::Exact => {
            let ctx = ExactContext::new(f)?;
            let good = ctx.preserved.iter().filter(|&&b| b).count() as u64;
            let eps = Rational::one() - fraction(good, ctx.preserved.len() as u64);
            let outcomes = (0..dom.num_points()).into_par_iter().map(|x| ctx.correct(x)).collect();
            (outcomes, EpsMeasurement::Exact { eps: eps.clone() }, eps)
        }
        CorrectionMode::Sampled { samples, threshold, seed, line_samples } => {
            check_sampling(samples, threshold)?;
            if line_samples == 0 {
                return Err(Error::invalid("line_samples must be at least 1"));
            }
            let hits = sample_preserved(f, line_samples, derive_seed(seed, u64::MAX));
            let n = line_samples as u64;
            let (est, stderr) = estimate(hits, n);
            let bad = n - hits;
            let outcomes = (0..dom.num_points())
                .into_par_iter()
                .map(|x| sampled_at(f, x, samples, threshold, derive_seed(seed, x as u64)))
                .collect();
            let m = EpsMeasurement::Sampled { estimate: 1.0 - est, stderr, bad, samples: n };
            (outcomes, m, fraction(bad, n))
        }
    };
    let (table, reverted) = assemble(f, &outcomes);
    let corrected = PointMap::new(dom.clone(), f.codomain().clone(), table)?;
    let same = (0..dom.num_points()).filter(|&i| corrected.image(i) == f.image(i)).count() as u64;
    let mut bound_report = bounds::hypotheses(dom.q() as u64, dom.dim() as u32, &eps)?;
    if matches!(mode, CorrectionMode::Sampled { .. }) {
        bound_report.guarantee_applicable = false;
    }
    let report = CorrectionReport {
        mode: mode.clone(),
        eps: eps_m,
        uncorrectable_count: outcomes.iter().filter(|o| o.z.is_none()).count(),
        outcomes,
        agreement_with_input: fraction(same, dom.num_points() as u64),
        reverted_for_injectivity: reverted,
        bound_report,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((corrected, report))
}

fn not_semilinear(reason: impl Into<String>, witness: Option<usize>) -> Error {
    Error::NotSemilinear { reason: reason.into(), witness }
}

/// Recovers `(σ, M)` with `f([v]) = [M·σ(v)]` for a line-preserving `f`.
///
/// `e0' ` is the normalized image of `[e0]`; each `e_i'` is the
/// representative of `f([e_i])` with `[e0' + e_i'] = f([e0 + e_i])`; σ is
/// read off the chart on `⟨e0, e1⟩`. The result is checked at every point,
/// so this also serves as the line-preservation check.
pub fn reconstruct_semilinear(f: &PointMap) -> Result<SemilinearMap> {
    let dom = f.domain();
    let cod = f.codomain();
    if dom.dim() != cod.dim() {
        return Err(Error::invalid("domain and codomain dimensions differ"));
    }
    let field = dom.field();
    let n = dom.dim();
    let unit = |i: usize| -> Vec<Elem> { (0..=n).map(|c| (c == i) as Elem).collect() };
    let image_coords = |v: Vec<Elem>| -> (usize, Vec<Elem>) {
        let idx = dom.index_of(&dom.point_from_vector(v).unwrap());
        (idx, cod.point_coords(f.image(idx)))
    };

    let (_, e0) = image_coords(unit(0));
    let mut cols = vec![e0.clone()];
    for i in 1..=n {
        let (_, w) = image_coords(unit(i));
        let (mid, target) = image_coords(linalg::axpy(field, &unit(0), 1, &unit(i)));
        match linalg::coords_in_pair(field, &target, &e0, &w) {
            Some((alpha, beta)) if alpha != 0 && beta != 0 => {
                cols.push(linalg::scale(field, field.div(beta, alpha), &w));
            }
            _ => return Err(not_semilinear("image of a coordinate line is not a line", Some(mid))),
        }
    }

    let m = MarkedLine::new(dom, dom.point(dom.index_of_coords(&unit(0))), {
        let mut v = unit(0);
        v[1] = 1;
        dom.point_from_vector(v)?
    }, dom.point(dom.index_of_coords(&unit(1))))?;
    let table = gadgets::sigma_from_line(f, &m)
        .map_err(|_| not_semilinear("image of the line <e0, e1> is not a line", None))?;
    let sigma = (0..field.degree())
        .map(|j| Frobenius::new(j, field))
        .find(|s| (0..field.order() as Elem).all(|a| s.apply_code(field, a) == table[a as usize]))
        .ok_or_else(|| not_semilinear("chart function is not a field automorphism", None))?;

    let matrix: Vec<Vec<Elem>> = (0..=n).map(|r| cols.iter().map(|c| c[r]).collect()).collect();
    let map = SemilinearMap::new(field, sigma, matrix)
        .map_err(|_| not_semilinear("images of the coordinate points are dependent", None))?;
    let mut buf = vec![0; n + 1];
    for i in 0..dom.num_points() {
        dom.coords_into(i, &mut buf);
        let mut img = map.apply_vector(&buf);
        linalg::normalize(field, &mut img);
        if cod.index_of_coords(&img) != f.image(i) {
            return Err(not_semilinear("semilinear candidate disagrees with f", Some(i)));
        }
    }
    Ok(map)
}
