//! Points, lines and incidence in P^n(F_q).
//!
//! Points are stored by their normalized representative (lowest-index nonzero
//! coordinate equal to 1) and indexed by the rank of that representative in
//! lexicographic order of coordinate codes. The rank is computed in closed
//! form, so no lookup tables are needed:
//!
//! ```text
//! index = (q^(n-i) - 1)/(q - 1) + Σ_{c>i} coord[c]·q^(n-c)      (i = pivot)
//! ```
//!
//! Lines are stored as the reduced row-echelon form of a 2×(n+1) spanning
//! matrix. Line indices are ordered by pivot pair `(i, j)` and then by the
//! free entries of the two rows read as one base-q number.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Elem, FieldSpec, GaloisField};
use crate::linalg;

/// Above this many lines, full line enumeration is refused.
pub const MAX_ENUMERABLE_LINES: u64 = 10_000_000;

/// Dense point-pair → line tables are only built up to this many points.
const PAIR_TABLE_MAX_POINTS: usize = 2048;

/// The projective space P^n over a finite field.
#[derive(Clone, PartialEq, Eq)]
pub struct ProjSpace {
    field: GaloisField,
    n: usize,
    q: usize,
    // qpow[i] = q^i for i <= 2n
    qpow: Vec<u64>,
    num_points: usize,
    // offsets of each pivot pair (i, j) in line index order, row-major in i
    line_offsets: Vec<u64>,
    num_lines: u64,
}

impl fmt::Debug for ProjSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P^{}(F_{})", self.n, self.q)
    }
}

/// A point of P^n, held by its normalized coordinate vector.
///
/// The derived ordering agrees with point index order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProjPoint(Vec<Elem>);

impl ProjPoint {
    /// Normalizes a nonzero vector into a point.
    pub fn from_vector(field: &GaloisField, mut v: Vec<Elem>) -> Result<Self> {
        if v.iter().any(|&c| !field.contains(c)) {
            return Err(Error::invalid("coordinate is not a field element"));
        }
        if !linalg::normalize(field, &mut v) {
            return Err(Error::invalid("the zero vector is not a projective point"));
        }
        Ok(ProjPoint(v))
    }

    pub fn coords(&self) -> &[Elem] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<Elem> {
        self.0
    }
}

/// A line of P^n in canonical RREF form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProjLine {
    rows: [Vec<Elem>; 2],
    pivots: (usize, usize),
}

impl ProjLine {
    /// Line spanned by two vectors, or `None` if they are dependent.
    pub fn from_vectors(field: &GaloisField, a: &[Elem], b: &[Elem]) -> Option<Self> {
        let mut m = vec![a.to_vec(), b.to_vec()];
        let piv = linalg::rref(field, &mut m);
        if piv.len() != 2 {
            return None;
        }
        let r1 = m.pop().unwrap();
        let r0 = m.pop().unwrap();
        Some(ProjLine { rows: [r0, r1], pivots: (piv[0], piv[1]) })
    }

    pub fn rows(&self) -> &[Vec<Elem>; 2] {
        &self.rows
    }

    pub fn pivots(&self) -> (usize, usize) {
        self.pivots
    }

    /// Whether the (not necessarily normalized) vector `v` lies on the line.
    pub fn contains_vector(&self, field: &GaloisField, v: &[Elem]) -> bool {
        let (i, j) = self.pivots;
        let (a, b) = (v[i], v[j]);
        v.iter().enumerate().all(|(c, &x)| {
            x == field.add(field.mul(a, self.rows[0][c]), field.mul(b, self.rows[1][c]))
        })
    }

    pub fn contains(&self, field: &GaloisField, p: &ProjPoint) -> bool {
        self.contains_vector(field, p.coords())
    }

    /// The q+1 normalized coordinate vectors on the line: `r0 + t·r1` for
    /// every t, then `r1`.
    pub fn point_vectors(&self, field: &GaloisField) -> Vec<Vec<Elem>> {
        let q = field.order() as Elem;
        let mut out: Vec<Vec<Elem>> =
            (0..q).map(|t| linalg::axpy(field, &self.rows[0], t, &self.rows[1])).collect();
        out.push(self.rows[1].clone());
        out
    }
}

/// A line through `x` with two further marked points on it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PointedLine {
    pub line: ProjLine,
    pub x: ProjPoint,
    pub y1: ProjPoint,
    pub y2: ProjPoint,
}

/// Set-theoretic intersection of two lines.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LineMeet {
    Empty,
    Point(ProjPoint),
    Same,
}

impl ProjSpace {
    pub fn new(field: GaloisField, n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::invalid("projective dimension must be at least 1"));
        }
        let q = field.order();
        let mut qpow = vec![1u64];
        for _ in 0..2 * n {
            let next = qpow.last().unwrap().checked_mul(q as u64);
            match next {
                Some(v) if v < (1u64 << 62) => qpow.push(v),
                _ => return Err(Error::TooLarge(format!("P^{n}(F_{q}) is too large"))),
            }
        }
        let num_points = ((qpow[n] * q as u64 - 1) / (q as u64 - 1)) as usize;
        if num_points > u32::MAX as usize {
            return Err(Error::TooLarge(format!("P^{n}(F_{q}) has too many points")));
        }
        let mut line_offsets = Vec::with_capacity((n + 1) * (n + 1));
        let mut total = 0u64;
        for i in 0..=n {
            for j in 0..=n {
                line_offsets.push(total);
                if i < j {
                    total += qpow[2 * n - i - j - 1];
                }
            }
        }
        Ok(ProjSpace { field, n, q, qpow, num_points, line_offsets, num_lines: total })
    }

    pub fn from_spec(spec: FieldSpec, n: usize) -> Result<Self> {
        Self::new(GaloisField::new(spec)?, n)
    }

    pub fn field(&self) -> &GaloisField {
        &self.field
    }

    /// Projective dimension.
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn num_lines(&self) -> u64 {
        self.num_lines
    }

    pub fn points_per_line(&self) -> usize {
        self.q + 1
    }

    /// Number of lines through any fixed point, `(q^n - 1)/(q - 1)`.
    pub fn lines_per_point(&self) -> usize {
        ((self.qpow[self.n] - 1) / (self.q as u64 - 1)) as usize
    }

    /// `#L_x^(2) = q^(n+1) - q`.
    pub fn pointed_lines_per_point(&self) -> usize {
        (self.qpow[self.n] as usize) * self.q - self.q
    }

    // ---- points -------------------------------------------------------

    /// Index of a normalized coordinate vector.
    pub fn index_of_coords(&self, c: &[Elem]) -> usize {
        debug_assert_eq!(c.len(), self.n + 1);
        let i = c.iter().position(|&x| x != 0).expect("zero vector");
        debug_assert_eq!(c[i], 1, "coordinates must be normalized");
        let offset = (self.qpow[self.n - i] - 1) / (self.q as u64 - 1);
        let tail = c[i + 1..].iter().fold(0u64, |acc, &x| acc * self.q as u64 + x as u64);
        (offset + tail) as usize
    }

    pub fn index_of(&self, p: &ProjPoint) -> usize {
        self.index_of_coords(p.coords())
    }

    /// Writes the normalized coordinates of point `idx` into `out`.
    pub fn coords_into(&self, idx: usize, out: &mut [Elem]) {
        debug_assert!(idx < self.num_points);
        let q = self.q as u64;
        let idx = idx as u64;
        let mut i = self.n;
        let mut offset = 0u64;
        loop {
            let count = self.qpow[self.n - i];
            if idx < offset + count {
                break;
            }
            offset += count;
            i -= 1;
        }
        out[..i].fill(0);
        out[i] = 1;
        let mut tail = idx - offset;
        for c in (i + 1..=self.n).rev() {
            out[c] = (tail % q) as Elem;
            tail /= q;
        }
    }

    pub fn point_coords(&self, idx: usize) -> Vec<Elem> {
        let mut v = vec![0; self.n + 1];
        self.coords_into(idx, &mut v);
        v
    }

    pub fn point(&self, idx: usize) -> ProjPoint {
        ProjPoint(self.point_coords(idx))
    }

    pub fn point_from_vector(&self, v: Vec<Elem>) -> Result<ProjPoint> {
        self.check_len(&v)?;
        ProjPoint::from_vector(&self.field, v)
    }

    fn check_len(&self, v: &[Elem]) -> Result<()> {
        if v.len() != self.n + 1 {
            return Err(Error::invalid(format!(
                "expected {} coordinates, got {}",
                self.n + 1,
                v.len()
            )));
        }
        Ok(())
    }

    pub fn check_point(&self, p: &ProjPoint) -> Result<()> {
        self.check_len(p.coords())?;
        let c = p.coords();
        match c.iter().position(|&x| x != 0) {
            Some(i) if c[i] == 1 && c.iter().all(|&x| self.field.contains(x)) => Ok(()),
            _ => Err(Error::invalid("point is not a normalized representative")),
        }
    }

    /// All points in index order.
    pub fn enumerate_points(&self) -> Vec<ProjPoint> {
        (0..self.num_points).map(|i| self.point(i)).collect()
    }

    // ---- lines --------------------------------------------------------

    pub fn line_through(&self, p: &ProjPoint, q: &ProjPoint) -> Result<ProjLine> {
        self.check_point(p)?;
        self.check_point(q)?;
        ProjLine::from_vectors(&self.field, p.coords(), q.coords())
            .ok_or_else(|| Error::invalid("a line needs two distinct points"))
    }

    pub fn line_through_indices(&self, a: usize, b: usize) -> Option<ProjLine> {
        ProjLine::from_vectors(&self.field, &self.point_coords(a), &self.point_coords(b))
    }

    /// Points of `l`, sorted by index.
    pub fn points_on_line(&self, l: &ProjLine) -> Vec<ProjPoint> {
        let mut pts: Vec<ProjPoint> =
            l.point_vectors(&self.field).into_iter().map(ProjPoint).collect();
        pts.sort();
        pts
    }

    /// Point indices of `l`, sorted.
    pub fn line_point_indices(&self, l: &ProjLine) -> Vec<usize> {
        let mut idx: Vec<usize> = l
            .point_vectors(&self.field)
            .iter()
            .map(|v| self.index_of_coords(v))
            .collect();
        idx.sort_unstable();
        idx
    }

    pub fn line_index(&self, l: &ProjLine) -> u64 {
        let (i, j) = l.pivots;
        let q = self.q as u64;
        let mut v = 0u64;
        for c in i + 1..=self.n {
            if c != j {
                v = v * q + l.rows[0][c] as u64;
            }
        }
        for c in j + 1..=self.n {
            v = v * q + l.rows[1][c] as u64;
        }
        self.line_offsets[i * (self.n + 1) + j] + v
    }

    pub fn line_at(&self, idx: u64) -> ProjLine {
        debug_assert!(idx < self.num_lines);
        let np1 = self.n + 1;
        let slot = self
            .line_offsets
            .iter()
            .enumerate()
            .filter(|(s, &off)| s / np1 < s % np1 && off <= idx)
            .max_by_key(|(_, &off)| off)
            .map(|(s, _)| s)
            .unwrap();
        let (i, j) = (slot / np1, slot % np1);
        let q = self.q as u64;
        let mut rest = idx - self.line_offsets[slot];
        let mut r0 = vec![0; np1];
        let mut r1 = vec![0; np1];
        r0[i] = 1;
        r1[j] = 1;
        for c in (j + 1..=self.n).rev() {
            r1[c] = (rest % q) as Elem;
            rest /= q;
        }
        for c in (i + 1..=self.n).rev() {
            if c != j {
                r0[c] = (rest % q) as Elem;
                rest /= q;
            }
        }
        ProjLine { rows: [r0, r1], pivots: (i, j) }
    }

    fn check_enumerable(&self) -> Result<()> {
        if self.num_lines > MAX_ENUMERABLE_LINES {
            return Err(Error::TooLarge(format!(
                "{self:?} has {} lines (limit {MAX_ENUMERABLE_LINES}); use the sampled mode",
                self.num_lines
            )));
        }
        Ok(())
    }

    /// Every line, in line index order.
    pub fn enumerate_lines(&self) -> Result<Vec<ProjLine>> {
        self.check_enumerable()?;
        Ok((0..self.num_lines).map(|i| self.line_at(i)).collect())
    }

    /// Lines through `x`, ordered by their smallest point other than `x`.
    pub fn lines_through_point(&self, x: &ProjPoint) -> Result<Vec<ProjLine>> {
        self.check_point(x)?;
        Ok(self
            .lines_through_index(self.index_of(x))
            .into_iter()
            .map(|(l, _)| l)
            .collect())
    }

    /// Lines through point `x` with their sorted point indices.
    pub(crate) fn lines_through_index(&self, x: usize) -> Vec<(ProjLine, Vec<usize>)> {
        let mut covered = vec![false; self.num_points];
        covered[x] = true;
        let xc = self.point_coords(x);
        let mut out = Vec::with_capacity(self.lines_per_point());
        for y in 0..self.num_points {
            if covered[y] {
                continue;
            }
            let l = ProjLine::from_vectors(&self.field, &xc, &self.point_coords(y)).unwrap();
            let pts = self.line_point_indices(&l);
            for &p in &pts {
                covered[p] = true;
            }
            out.push((l, pts));
        }
        out
    }

    /// All triples `(L, y1, y2)` with `L` through `x` and `y1 ≠ y2` on
    /// `L \ {x}`.
    pub fn pointed_lines_at(&self, x: &ProjPoint) -> Result<Vec<PointedLine>> {
        self.check_point(x)?;
        let xi = self.index_of(x);
        let mut out = Vec::with_capacity(self.pointed_lines_per_point());
        for (l, pts) in self.lines_through_index(xi) {
            for (y1, y2) in ordered_pairs_excluding(&pts, xi) {
                out.push(PointedLine {
                    line: l.clone(),
                    x: x.clone(),
                    y1: self.point(y1),
                    y2: self.point(y2),
                });
            }
        }
        Ok(out)
    }

    pub fn intersect_lines(&self, a: &ProjLine, b: &ProjLine) -> LineMeet {
        if a == b {
            return LineMeet::Same;
        }
        let f = &self.field;
        let [r0, r1] = &a.rows;
        if b.contains_vector(f, r1) {
            return LineMeet::Point(ProjPoint(r1.clone()));
        }
        let mut v = r0.clone();
        for t in 0..self.q as Elem {
            for c in 0..v.len() {
                v[c] = f.add(r0[c], f.mul(t, r1[c]));
            }
            if b.contains_vector(f, &v) {
                return LineMeet::Point(ProjPoint(v));
            }
        }
        LineMeet::Empty
    }

    /// Projective dimension of the span of `points`.
    pub fn span_dimension(&self, points: &[ProjPoint]) -> Result<usize> {
        if points.is_empty() {
            return Err(Error::invalid("span of the empty set"));
        }
        let rows: Vec<Vec<Elem>> = points.iter().map(|p| p.coords().to_vec()).collect();
        Ok(linalg::rank(&self.field, &rows) - 1)
    }

    // ---- sampling ------------------------------------------------------

    pub fn sample_point_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.num_points)
    }

    /// Uniform line: every line carries the same number of ordered point
    /// pairs, so a uniform pair of distinct points gives a uniform line.
    pub fn sample_line_with<R: Rng + ?Sized>(&self, rng: &mut R) -> ProjLine {
        let a = self.sample_point_index(rng);
        let b = loop {
            let b = self.sample_point_index(rng);
            if b != a {
                break b;
            }
        };
        self.line_through_indices(a, b).unwrap()
    }

    pub fn sample_point(&self, seed: u64) -> ProjPoint {
        self.point(self.sample_point_index(&mut ChaCha8Rng::seed_from_u64(seed)))
    }

    pub fn sample_line(&self, seed: u64) -> ProjLine {
        self.sample_line_with(&mut ChaCha8Rng::seed_from_u64(seed))
    }
}

/// Ordered pairs of distinct entries of `pts`, skipping `x`.
pub(crate) fn ordered_pairs_excluding(
    pts: &[usize],
    x: usize,
) -> impl Iterator<Item = (usize, usize)> + '_ {
    pts.iter()
        .filter(move |&&a| a != x)
        .flat_map(move |&a| pts.iter().filter(move |&&b| b != x && b != a).map(move |&b| (a, b)))
}

/// Index-level incidence queries for one space, with a dense
/// point-pair → line table when the space is small enough.
pub struct Incidence {
    space: ProjSpace,
    pair_line: Option<Vec<u32>>,
}

impl Incidence {
    pub fn new(space: &ProjSpace) -> Self {
        let n = space.num_points();
        let pair_line = (n <= PAIR_TABLE_MAX_POINTS && space.num_lines() < u32::MAX as u64).then(|| {
            let mut t = vec![u32::MAX; n * n];
            for id in 0..space.num_lines() {
                let pts = space.line_point_indices(&space.line_at(id));
                for &a in &pts {
                    for &b in &pts {
                        if a != b {
                            t[a * n + b] = id as u32;
                        }
                    }
                }
            }
            t
        });
        Incidence { space: space.clone(), pair_line }
    }

    pub fn space(&self) -> &ProjSpace {
        &self.space
    }

    /// Index of the line through distinct points `a` and `b`.
    #[inline]
    pub fn line_id(&self, a: usize, b: usize) -> u64 {
        debug_assert_ne!(a, b);
        match &self.pair_line {
            Some(t) => t[a * self.space.num_points() + b] as u64,
            None => self.space.line_index(&self.space.line_through_indices(a, b).unwrap()),
        }
    }

    /// Sorted point indices on the line through distinct points `a` and `b`.
    pub fn line_points_through(&self, a: usize, b: usize) -> Vec<usize> {
        self.space.line_point_indices(&self.space.line_through_indices(a, b).unwrap())
    }
}

/// A total injective map between the point sets of two projective spaces
/// over the same field, stored as a dense table of codomain indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointMap {
    domain: ProjSpace,
    codomain: ProjSpace,
    table: Vec<u32>,
}

/// On-disk form of a [`PointMap`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointMapFile {
    pub field: FieldSpec,
    pub n_domain: usize,
    pub n_codomain: usize,
    pub table: Vec<u32>,
}

impl PointMap {
    pub fn new(domain: ProjSpace, codomain: ProjSpace, table: Vec<u32>) -> Result<Self> {
        if domain.field() != codomain.field() {
            return Err(Error::FieldMismatch);
        }
        if table.len() != domain.num_points() {
            return Err(Error::invalid(format!(
                "table has {} entries, domain has {} points",
                table.len(),
                domain.num_points()
            )));
        }
        let mut seen = vec![false; codomain.num_points()];
        for (i, &t) in table.iter().enumerate() {
            let t = t as usize;
            if t >= seen.len() {
                return Err(Error::invalid(format!("image {t} of point {i} is out of range")));
            }
            if std::mem::replace(&mut seen[t], true) {
                return Err(Error::invalid(format!("map is not injective: point {t} hit twice")));
            }
        }
        Ok(PointMap { domain, codomain, table })
    }

    pub fn identity(space: &ProjSpace) -> Self {
        PointMap {
            domain: space.clone(),
            codomain: space.clone(),
            table: (0..space.num_points() as u32).collect(),
        }
    }

    pub fn domain(&self) -> &ProjSpace {
        &self.domain
    }

    pub fn codomain(&self) -> &ProjSpace {
        &self.codomain
    }

    pub fn table(&self) -> &[u32] {
        &self.table
    }

    #[inline]
    pub fn image(&self, i: usize) -> usize {
        self.table[i] as usize
    }

    pub fn apply(&self, p: &ProjPoint) -> ProjPoint {
        self.codomain.point(self.image(self.domain.index_of(p)))
    }

    /// Number of domain points on which the two maps differ.
    pub fn hamming_distance(&self, other: &PointMap) -> usize {
        self.table.iter().zip(&other.table).filter(|(a, b)| a != b).count()
    }

    pub fn to_file(&self) -> PointMapFile {
        PointMapFile {
            field: self.domain.field().spec().clone(),
            n_domain: self.domain.dim(),
            n_codomain: self.codomain.dim(),
            table: self.table.clone(),
        }
    }

    pub fn from_file(file: PointMapFile) -> Result<Self> {
        let field = GaloisField::new(file.field)?;
        let domain = ProjSpace::new(field.clone(), file.n_domain)?;
        let codomain = ProjSpace::new(field, file.n_codomain)?;
        Self::new(domain, codomain, file.table)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("point map serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(s)?)
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}
