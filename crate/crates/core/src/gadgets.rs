//! Coordinate charts on lines and the incidence constructions built on them.
//!
//! A [`MarkedLine`] `(L, P, Q, R)` identifies the field with `L \ {R}` via
//! `a ↦ [v_P + a·v_R]`, where `v_P` is the normalized representative of `P`
//! and `v_R` is the unique representative of `R` with `[v_P + v_R] = Q`.
//! The multiplicative and additive gadgets realise `-a/b` and `a + b` as
//! intersection points of lines, so any line-preserving map must respect
//! them; this is how a collineation determines its field automorphism.

use crate::error::{Error, Result};
use crate::field::{Elem, GaloisField};
use crate::linalg;
use crate::projspace::{LineMeet, PointMap, ProjLine, ProjPoint, ProjSpace};

/// A line with three distinct marked points `P`, `Q`, `R`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkedLine {
    line: ProjLine,
    p: ProjPoint,
    q: ProjPoint,
    r: ProjPoint,
    // v_P and the scaled v_R
    v_p: Vec<Elem>,
    v_r: Vec<Elem>,
}

/// `v_R` scaled so that `[v_P + v_R] = Q`.
fn scaled_partner(field: &GaloisField, v_p: &[Elem], q: &[Elem], r: &[Elem]) -> Option<Vec<Elem>> {
    let (alpha, beta) = linalg::coords_in_pair(field, q, v_p, r)?;
    if alpha == 0 || beta == 0 {
        return None;
    }
    Some(linalg::scale(field, field.div(beta, alpha), r))
}

impl MarkedLine {
    pub fn new(space: &ProjSpace, p: ProjPoint, q: ProjPoint, r: ProjPoint) -> Result<Self> {
        for x in [&p, &q, &r] {
            space.check_point(x)?;
        }
        if p == q || q == r || p == r {
            return Err(Error::invalid("marked points must be pairwise distinct"));
        }
        let line = space.line_through(&p, &r)?;
        if !line.contains(space.field(), &q) {
            return Err(Error::invalid("marked points are not collinear"));
        }
        let field = space.field();
        let v_p = p.coords().to_vec();
        let v_r = scaled_partner(field, &v_p, q.coords(), r.coords())
            .expect("Q lies on L(P,R) and differs from both");
        Ok(MarkedLine { line, p, q, r, v_p, v_r })
    }

    pub fn line(&self) -> &ProjLine {
        &self.line
    }

    pub fn p(&self) -> &ProjPoint {
        &self.p
    }

    pub fn q(&self) -> &ProjPoint {
        &self.q
    }

    pub fn r(&self) -> &ProjPoint {
        &self.r
    }

    /// `(v_P, v_R)` with `v_P` normalized and `[v_P + v_R] = Q`.
    pub fn basis(&self) -> (&[Elem], &[Elem]) {
        (&self.v_p, &self.v_r)
    }

    /// `[v_P + a·v_R]`.
    pub fn eval(&self, field: &GaloisField, a: Elem) -> ProjPoint {
        debug_assert!(field.contains(a));
        ProjPoint::from_vector(field, linalg::axpy(field, &self.v_p, a, &self.v_r))
            .expect("v_P and v_R are independent")
    }

    /// Chart coordinate of `x`; fails for `x = R` and for points off the line.
    pub fn coordinate(&self, field: &GaloisField, x: &ProjPoint) -> Result<Elem> {
        if *x == self.r {
            return Err(Error::invalid("R is the point at infinity of the chart"));
        }
        match linalg::coords_in_pair(field, x.coords(), &self.v_p, &self.v_r) {
            Some((alpha, beta)) if alpha != 0 => Ok(field.div(beta, alpha)),
            _ => Err(Error::invalid("point is not on the marked line")),
        }
    }
}

pub fn chart_eval(space: &ProjSpace, m: &MarkedLine, a: Elem) -> ProjPoint {
    m.eval(space.field(), a)
}

pub fn chart_inv(space: &ProjSpace, m: &MarkedLine, x: &ProjPoint) -> Result<Elem> {
    m.coordinate(space.field(), x)
}

fn line(space: &ProjSpace, a: &ProjPoint, b: &ProjPoint, what: &str) -> Result<ProjLine> {
    space
        .line_through(a, b)
        .map_err(|_| Error::degenerate(format!("{what}: points coincide")))
}

fn meet(space: &ProjSpace, a: &ProjLine, b: &ProjLine, what: &str) -> Result<ProjPoint> {
    match space.intersect_lines(a, b) {
        LineMeet::Point(p) => Ok(p),
        LineMeet::Same => Err(Error::degenerate(format!("{what}: lines coincide"))),
        LineMeet::Empty => Err(Error::degenerate(format!("{what}: lines are skew"))),
    }
}

fn shared_apex(m1: &MarkedLine, m2: &MarkedLine) -> Result<()> {
    if m1.p != m2.p {
        return Err(Error::degenerate("marked lines must share their first point"));
    }
    if m1.line == m2.line {
        return Err(Error::degenerate("marked lines must be distinct"));
    }
    Ok(())
}

/// The multiplicative construction for `m1 = (L, P, Q, R)` and
/// `m2 = (L', P, S, T)`, prepared once for evaluation at many `(a, b)`.
#[derive(Clone, Debug)]
pub struct MultGadget {
    space: ProjSpace,
    m1: MarkedLine,
    m2: MarkedLine,
    tr: ProjLine,
}

impl MultGadget {
    pub fn new(space: &ProjSpace, m1: &MarkedLine, m2: &MarkedLine) -> Result<Self> {
        shared_apex(m1, m2)?;
        let tr = line(space, &m2.r, &m1.r, "L(T,R)")?;
        Ok(MultGadget { space: space.clone(), m1: m1.clone(), m2: m2.clone(), tr })
    }

    /// `L(T, R) ∩ L(ε₁(a), ε₂(b))`.
    pub fn apply(&self, a: Elem, b: Elem) -> Result<ProjPoint> {
        if b == 0 {
            return Err(Error::invalid("b must be nonzero"));
        }
        let field = self.space.field();
        let ab = line(&self.space, &self.m1.eval(field, a), &self.m2.eval(field, b), "L(a,b)")?;
        meet(&self.space, &self.tr, &ab, "multiplicative gadget")
    }

    /// Chart on `L(T, R)` in which the output reads `-a/b`:
    /// `([v_T], [v_T + v_R], [v_R])`, with `v_R` from `m1` and `v_T` from
    /// `m2` both scaled against the common `v_P`.
    pub fn frame(&self) -> Result<MarkedLine> {
        let field = self.space.field();
        let v_r = &self.m1.v_r;
        let v_t = &self.m2.v_r;
        let p = self.space.point_from_vector(v_t.clone())?;
        let q = self.space.point_from_vector(linalg::axpy(field, v_t, 1, v_r))?;
        MarkedLine::new(&self.space, p, q, self.m1.r.clone())
    }
}

pub fn mult_gadget_frame(space: &ProjSpace, m1: &MarkedLine, m2: &MarkedLine) -> Result<MarkedLine> {
    MultGadget::new(space, m1, m2)?.frame()
}

/// Intersection of `L(T, R)` with the line through `ε₁(a)` and `ε₂(b)`, where
/// `m1 = (L, P, Q, R)` and `m2 = (L', P, S, T)`.
pub fn mult_gadget(
    space: &ProjSpace,
    m1: &MarkedLine,
    m2: &MarkedLine,
    a: Elem,
    b: Elem,
) -> Result<ProjPoint> {
    MultGadget::new(space, m1, m2)?.apply(a, b)
}

/// The additive construction for `m = (L, P, Q, R)`, `S` off `L` and `T` a
/// third point of `L(S, R)`: `V = L(P,T) ∩ L(Q,S)` and
/// `W = L(V,R) ∩ L(P,S)`.
#[derive(Clone, Debug)]
pub struct AddGadget {
    space: ProjSpace,
    m: MarkedLine,
    second: MarkedLine,
    v: ProjPoint,
    w: ProjPoint,
    vr: ProjLine,
}

impl AddGadget {
    pub fn new(space: &ProjSpace, m: &MarkedLine, s: &ProjPoint, t: &ProjPoint) -> Result<Self> {
        space.check_point(s)?;
        space.check_point(t)?;
        let field = space.field();
        if m.line.contains(field, s) {
            return Err(Error::degenerate("S must lie off the marked line"));
        }
        let sr = line(space, s, &m.r, "L(S,R)")?;
        if !sr.contains(field, t) || t == s || *t == m.r {
            return Err(Error::degenerate("T must be a third point of L(S,R)"));
        }
        let v = meet(
            space,
            &line(space, &m.p, t, "L(P,T)")?,
            &line(space, &m.q, s, "L(Q,S)")?,
            "V",
        )?;
        let vr = line(space, &v, &m.r, "L(V,R)")?;
        let w = meet(space, &vr, &line(space, &m.p, s, "L(P,S)")?, "W")?;
        let second = MarkedLine::new(space, s.clone(), t.clone(), m.r.clone())?;
        Ok(AddGadget { space: space.clone(), m: m.clone(), second, v, w, vr })
    }

    /// `L(V, R) ∩ L(ε^{P,Q,R}(a), ε^{S,T,R}(b))`.
    pub fn apply(&self, a: Elem, b: Elem) -> Result<ProjPoint> {
        let field = self.space.field();
        let ab = line(&self.space, &self.m.eval(field, a), &self.second.eval(field, b), "L(a,b)")?;
        meet(&self.space, &self.vr, &ab, "additive gadget")
    }

    /// The chart `(W, V, R)` in which the output reads `a + b`.
    pub fn frame(&self) -> Result<MarkedLine> {
        MarkedLine::new(&self.space, self.w.clone(), self.v.clone(), self.m.r.clone())
    }
}

pub fn add_gadget_frame(
    space: &ProjSpace,
    m: &MarkedLine,
    s: &ProjPoint,
    t: &ProjPoint,
) -> Result<MarkedLine> {
    AddGadget::new(space, m, s, t)?.frame()
}

/// The additive construction evaluated at `(a, b)`; see [`AddGadget`].
pub fn add_gadget(
    space: &ProjSpace,
    m: &MarkedLine,
    s: &ProjPoint,
    t: &ProjPoint,
    a: Elem,
    b: Elem,
) -> Result<ProjPoint> {
    AddGadget::new(space, m, s, t)?.apply(a, b)
}

/// Whether `f` sends the points of `l` onto a line; returns that line.
pub(crate) fn image_line(f: &PointMap, l: &ProjLine) -> Option<ProjLine> {
    let dom = f.domain();
    let cod = f.codomain();
    let imgs: Vec<usize> = dom.line_point_indices(l).iter().map(|&i| f.image(i)).collect();
    let target = cod.line_through_indices(imgs[0], imgs[1])?;
    let field = cod.field();
    imgs[2..]
        .iter()
        .all(|&i| target.contains_vector(field, &cod.point_coords(i)))
        .then_some(target)
}

/// The function `F_q → F_q` obtained by conjugating `f` with the charts of
/// `m` and of its image `(f(P), f(Q), f(R))`. Returned as a table indexed by
/// element code.
pub fn sigma_from_line(f: &PointMap, m: &MarkedLine) -> Result<Vec<Elem>> {
    let dom = f.domain();
    let cod = f.codomain();
    if image_line(f, &m.line).is_none() {
        return Err(Error::invalid("f does not map the marked line to a line"));
    }
    let image = MarkedLine::new(cod, f.apply(&m.p), f.apply(&m.q), f.apply(&m.r))?;
    let field = dom.field();
    (0..field.order() as Elem)
        .map(|a| image.coordinate(cod.field(), &f.apply(&m.eval(field, a))))
        .collect()
}

/// Ten points and ten lines forming a Desargues configuration.
///
/// Built from vectors `a, b, c, d`: the points are the spans of pairwise
/// differences of `{0, a, b, c, d}` and the lines are the spans of the
/// differences within each 3-element subset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DesarguesConfig {
    pub points: Vec<ProjPoint>,
    pub lines: Vec<ProjLine>,
}

const PAIRS: [(usize, usize); 10] =
    [(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)];

pub fn desargues_build(
    space: &ProjSpace,
    a: &[Elem],
    b: &[Elem],
    c: &[Elem],
    d: &[Elem],
) -> Result<DesarguesConfig> {
    let field = space.field();
    if space.dim() < 3 {
        return Err(Error::invalid("a Desargues configuration needs dimension at least 3"));
    }
    for v in [a, b, c, d] {
        if v.len() != space.dim() + 1 || v.iter().any(|&x| !field.contains(x)) {
            return Err(Error::invalid("vector does not belong to the space"));
        }
    }
    let basis = [a.to_vec(), b.to_vec(), c.to_vec(), d.to_vec()];
    if linalg::rank(field, &basis) != 4 {
        return Err(Error::invalid("a, b, c, d must be linearly independent"));
    }
    let zero = vec![0; space.dim() + 1];
    let elems = [&zero[..], a, b, c, d];
    let diff = |i: usize, j: usize| linalg::sub(field, elems[j], elems[i]);
    let points = PAIRS
        .iter()
        .map(|&(i, j)| space.point_from_vector(diff(i, j)))
        .collect::<Result<Vec<_>>>()?;
    let mut lines = Vec::with_capacity(10);
    for i in 0..5 {
        for j in i + 1..5 {
            for k in j + 1..5 {
                lines.push(ProjLine::from_vectors(field, &diff(i, j), &diff(i, k)).unwrap());
            }
        }
    }
    Ok(DesarguesConfig { points, lines })
}

/// Ten distinct points, ten distinct lines, three points on every line and
/// three lines through every point.
pub fn desargues_check(space: &ProjSpace, cfg: &DesarguesConfig) -> bool {
    let field = space.field();
    let distinct = |n: usize, eq: &dyn Fn(usize, usize) -> bool| {
        (0..n).all(|i| (i + 1..n).all(|j| !eq(i, j)))
    };
    if cfg.points.len() != 10
        || cfg.lines.len() != 10
        || !distinct(10, &|i, j| cfg.points[i] == cfg.points[j])
        || !distinct(10, &|i, j| cfg.lines[i] == cfg.lines[j])
    {
        return false;
    }
    let on = |l: &ProjLine, p: &ProjPoint| l.contains(field, p);
    cfg.lines.iter().all(|l| cfg.points.iter().filter(|p| on(l, p)).count() == 3)
        && cfg.points.iter().all(|p| cfg.lines.iter().filter(|l| on(l, p)).count() == 3)
}

/// Checks Desargues' theorem on triangles `ABC` and `DEF`: the lines
/// `AD`, `BE`, `CF` are concurrent exactly when `AB∩DE`, `AC∩DF`, `BC∩EF`
/// are collinear. Returns whether the equivalence holds.
///
/// Degenerate input (a collinear triangle, coincident points, or a pair of
/// corresponding sides that fails to meet in one point) is an error.
pub fn desargues_theorem_check(space: &ProjSpace, pts: [&ProjPoint; 6]) -> Result<bool> {
    let [a, b, c, d, e, f] = pts;
    for tri in [[a, b, c], [d, e, f]] {
        if space.span_dimension(&[tri[0].clone(), tri[1].clone(), tri[2].clone()])? != 2 {
            return Err(Error::degenerate("triangle vertices are collinear"));
        }
    }
    let ab = line(space, a, b, "AB")?;
    let ac = line(space, a, c, "AC")?;
    let bc = line(space, b, c, "BC")?;
    let de = line(space, d, e, "DE")?;
    let df = line(space, d, f, "DF")?;
    let ef = line(space, e, f, "EF")?;
    let ad = line(space, a, d, "AD")?;
    let be = line(space, b, e, "BE")?;
    let cf = line(space, c, f, "CF")?;

    let h = meet(space, &ab, &de, "H")?;
    let i = meet(space, &ac, &df, "I")?;
    let j = meet(space, &bc, &ef, "J")?;
    let axis = space.span_dimension(&[h, i, j])? <= 1;

    let concurrent = if ad == be || be == cf || ad == cf {
        true
    } else {
        match space.intersect_lines(&ad, &be) {
            LineMeet::Point(g) => cf.contains(space.field(), &g),
            _ => false,
        }
    };
    Ok(concurrent == axis)
}
