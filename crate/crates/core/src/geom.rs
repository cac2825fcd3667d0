//! Geometric primitives: points, axis-aligned boxes, balls, and generalized
//! dominance relations.
//!
//! All objects are closed; touching counts as intersection. The lower-bound
//! instance generators place tangent pairs on purpose, so the predicates must
//! accept equality. The solvers additionally assume general position (all
//! coordinate values distinct), under which strict and non-strict comparisons
//! agree.

use std::fmt;

use thiserror::Error;

use crate::scalar::{Rat, Scalar};

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 10;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeomError {
    #[error("dimension {0} outside supported range {MIN_DIM}..={MAX_DIM}")]
    BadDimension(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("box has lo > hi on axis {0}")]
    InvertedBox(usize),
    #[error("ball radius must be positive")]
    NonPositiveRadius,
    #[error("grid cells farther than 1 apart in L-infinity; no dominance relation exists")]
    CellsTooFar,
    #[error("circle parameter must lie strictly inside (0, 1)")]
    CircleParamOutOfRange,
}

/// A point with a fixed dimension between 2 and 10.
#[derive(Clone, PartialEq)]
pub struct PointD<S> {
    coords: Vec<S>,
}

impl<S: fmt::Debug> fmt::Debug for PointD<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords)
    }
}

impl<S: Scalar> PointD<S> {
    pub fn new(coords: Vec<S>) -> Result<Self, GeomError> {
        if !(MIN_DIM..=MAX_DIM).contains(&coords.len()) {
            return Err(GeomError::BadDimension(coords.len()));
        }
        if coords.iter().any(|c| !c.is_finite_s()) {
            return Err(GeomError::NonFinite);
        }
        Ok(PointD { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[S] {
        &self.coords
    }

    pub fn coord(&self, axis: usize) -> &S {
        &self.coords[axis]
    }

    fn check_same_dim(&self, other: &Self) -> Result<(), GeomError> {
        if self.dim() != other.dim() {
            Err(GeomError::DimensionMismatch(self.dim(), other.dim()))
        } else {
            Ok(())
        }
    }

    /// Squared Euclidean distance. Ring operations only, so exact on `Rat`.
    pub fn dist_sq(&self, other: &Self) -> Result<S, GeomError> {
        self.check_same_dim(other)?;
        let mut acc = S::zero();
        for (a, b) in self.coords.iter().zip(&other.coords) {
            let d = a.sub_s(b);
            acc = acc.add_s(&d.sq());
        }
        Ok(acc)
    }
}

/// Closed axis-aligned box given by per-axis minima and maxima.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisBoxD<S> {
    lo: PointD<S>,
    hi: PointD<S>,
}

impl<S: Scalar> AxisBoxD<S> {
    pub fn new(lo: PointD<S>, hi: PointD<S>) -> Result<Self, GeomError> {
        lo.check_same_dim(&hi)?;
        for i in 0..lo.dim() {
            if !lo.coord(i).le_s(hi.coord(i)) {
                return Err(GeomError::InvertedBox(i));
            }
        }
        Ok(AxisBoxD { lo, hi })
    }

    /// The unit cube centered at `c`: side length exactly 1 on every axis.
    pub fn unit_cube(center: &PointD<S>) -> Self {
        let h = S::half();
        let lo: Vec<S> = center.coords.iter().map(|v| v.sub_s(&h)).collect();
        let hi: Vec<S> = center.coords.iter().map(|v| v.add_s(&h)).collect();
        AxisBoxD {
            lo: PointD { coords: lo },
            hi: PointD { coords: hi },
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn lo(&self) -> &PointD<S> {
        &self.lo
    }

    pub fn hi(&self) -> &PointD<S> {
        &self.hi
    }
}

/// Closed ball. The radius is stored squared so that instances with
/// irrational radii (for example sqrt 2) stay exactly representable.
#[derive(Clone, Debug, PartialEq)]
pub struct BallD<S> {
    center: PointD<S>,
    radius_sq: S,
}

impl<S: Scalar> BallD<S> {
    pub fn from_radius_sq(center: PointD<S>, radius_sq: S) -> Result<Self, GeomError> {
        if !radius_sq.is_finite_s() || !S::zero().lt_s(&radius_sq) {
            return Err(GeomError::NonPositiveRadius);
        }
        Ok(BallD { center, radius_sq })
    }

    pub fn from_radius(center: PointD<S>, radius: S) -> Result<Self, GeomError> {
        if !S::zero().lt_s(&radius) {
            return Err(GeomError::NonPositiveRadius);
        }
        let rsq = radius.sq();
        Self::from_radius_sq(center, rsq)
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn center(&self) -> &PointD<S> {
        &self.center
    }

    pub fn radius_sq(&self) -> &S {
        &self.radius_sq
    }
}

/// One of the three geometric object kinds the deciders operate on.
#[derive(Clone, Debug, PartialEq)]
pub enum GeomObject<S> {
    UnitCube(PointD<S>),
    Box(AxisBoxD<S>),
    Ball(BallD<S>),
}

impl<S: Scalar> GeomObject<S> {
    pub fn dim(&self) -> usize {
        match self {
            GeomObject::UnitCube(c) => c.dim(),
            GeomObject::Box(b) => b.dim(),
            GeomObject::Ball(b) => b.dim(),
        }
    }

    pub fn intersects(&self, other: &Self) -> Result<bool, GeomError> {
        match (self, other) {
            (GeomObject::UnitCube(a), GeomObject::UnitCube(b)) => {
                boxes_intersect(&AxisBoxD::unit_cube(a), &AxisBoxD::unit_cube(b))
            }
            (GeomObject::Box(a), GeomObject::Box(b)) => boxes_intersect(a, b),
            (GeomObject::Ball(a), GeomObject::Ball(b)) => balls_intersect(a, b),
            _ => Err(GeomError::DimensionMismatch(self.dim(), other.dim())),
        }
    }
}

/// Closed boxes share a point iff their intervals overlap on every axis.
pub fn boxes_intersect<S: Scalar>(a: &AxisBoxD<S>, b: &AxisBoxD<S>) -> Result<bool, GeomError> {
    a.lo.check_same_dim(&b.lo)?;
    for i in 0..a.dim() {
        if a.hi.coord(i).lt_s(b.lo.coord(i)) || b.hi.coord(i).lt_s(a.lo.coord(i)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Closed balls intersect iff `dist^2 <= (r1 + r2)^2`, evaluated without
/// square roots: with `e := dist^2 - r1^2 - r2^2`, the condition is
/// `e <= 0 || e^2 <= 4 r1^2 r2^2`.
pub fn balls_intersect<S: Scalar>(a: &BallD<S>, b: &BallD<S>) -> Result<bool, GeomError> {
    let d2 = a.center.dist_sq(&b.center)?;
    let e = d2.sub_s(&a.radius_sq).sub_s(&b.radius_sq);
    if e.le_s(&S::zero()) {
        return Ok(true);
    }
    let four = S::from_i64(4);
    Ok(e.sq().le_s(&four.mul_s(&a.radius_sq).mul_s(&b.radius_sq)))
}

/// Per-axis comparison making up a generalized dominance relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxisRel {
    /// First point strictly smaller on this axis.
    Lt,
    /// First point strictly larger on this axis.
    Gt,
    /// Always satisfied.
    Any,
}

impl AxisRel {
    pub fn flip(self) -> AxisRel {
        match self {
            AxisRel::Lt => AxisRel::Gt,
            AxisRel::Gt => AxisRel::Lt,
            AxisRel::Any => AxisRel::Any,
        }
    }
}

/// Conjunction of per-axis `{<, >, any}` comparisons.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneralizedDominance {
    rels: Vec<AxisRel>,
}

impl GeneralizedDominance {
    pub fn new(rels: Vec<AxisRel>) -> Self {
        GeneralizedDominance { rels }
    }

    pub fn all_any(dim: usize) -> Self {
        GeneralizedDominance {
            rels: vec![AxisRel::Any; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.rels.len()
    }

    pub fn axis(&self, i: usize) -> AxisRel {
        self.rels[i]
    }

    pub fn axes(&self) -> &[AxisRel] {
        &self.rels
    }

    pub fn set_axis(&mut self, i: usize, r: AxisRel) {
        self.rels[i] = r;
    }

    /// Exchange the roles of the two points: `p rel q` iff `q flip(rel) p`.
    pub fn flip(&self) -> Self {
        GeneralizedDominance {
            rels: self.rels.iter().map(|r| r.flip()).collect(),
        }
    }
}

/// Does `p rel q` hold?
pub fn gd_holds<S: Scalar>(
    p: &PointD<S>,
    q: &PointD<S>,
    rel: &GeneralizedDominance,
) -> Result<bool, GeomError> {
    p.check_same_dim(q)?;
    if p.dim() != rel.dim() {
        return Err(GeomError::DimensionMismatch(p.dim(), rel.dim()));
    }
    for i in 0..p.dim() {
        let ok = match rel.axis(i) {
            AxisRel::Lt => p.coord(i).lt_s(q.coord(i)),
            AxisRel::Gt => q.coord(i).lt_s(p.coord(i)),
            AxisRel::Any => true,
        };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Dominance relation describing unit-cube intersection across neighboring
/// unit-grid cells.
///
/// For `p` in cell `cell_p + (0,1)^d` and `q` in `cell_q + (0,1)^d`, the unit
/// cubes centered at `p` and `q` intersect iff
/// `gd_holds(p - cell_p, q - cell_q, rel)`, where per axis the relation is
/// `>` when the q-cell sits one step above, `<` one step below, and `any`
/// when the cells agree. Exact under general position.
pub fn dominance_rel_for_cells(
    cell_p: &[i64],
    cell_q: &[i64],
) -> Result<GeneralizedDominance, GeomError> {
    if cell_p.len() != cell_q.len() {
        return Err(GeomError::DimensionMismatch(cell_p.len(), cell_q.len()));
    }
    let mut rels = Vec::with_capacity(cell_p.len());
    for (a, b) in cell_p.iter().zip(cell_q) {
        rels.push(match b - a {
            0 => AxisRel::Any,
            1 => AxisRel::Gt,
            -1 => AxisRel::Lt,
            _ => return Err(GeomError::CellsTooFar),
        });
    }
    Ok(GeneralizedDominance::new(rels))
}

/// Exact rational point on the unit circle via the Pythagorean
/// parametrization `b = 2t/(1+t^2)`, `w = (1-t^2)/(1+t^2)`.
///
/// Returns `(b, w)` with `b^2 + w^2 = 1` and both coordinates in `(0, 1)`
/// for `t` strictly inside `(0, 1)`.
pub fn rational_circle_point(t: &Rat) -> Result<(Rat, Rat), GeomError> {
    let zero = Rat::int(0);
    let one = Rat::int(1);
    if !zero.lt_s(t) || !t.lt_s(&one) {
        return Err(GeomError::CircleParamOutOfRange);
    }
    let t2 = t.sq();
    let den = one.add_s(&t2);
    let b = Rat((Rat::int(2).mul_s(t).0) / &den.0);
    let w = Rat(one.sub_s(&t2).0 / &den.0);
    Ok((b, w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn pt(coords: &[f64]) -> PointD<f64> {
        PointD::new(coords.to_vec()).unwrap()
    }

    fn rpt(coords: &[Rat]) -> PointD<Rat> {
        PointD::new(coords.to_vec()).unwrap()
    }

    #[test]
    fn touching_unit_cubes_intersect() {
        let a = AxisBoxD::unit_cube(&pt(&[0.0, 0.0, 0.0]));
        let b = AxisBoxD::unit_cube(&pt(&[1.0, 0.0, 0.0]));
        assert!(boxes_intersect(&a, &b).unwrap());
        let c = AxisBoxD::unit_cube(&pt(&[1.01, 0.0, 0.0]));
        assert!(!boxes_intersect(&a, &c).unwrap());
    }

    #[test]
    fn box_intersection_matches_interval_oracle() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..1000 {
            let dim = rng.gen_range(2..=4);
            let mut mk = |rng: &mut StdRng| {
                let lo: Vec<f64> = (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let hi: Vec<f64> = lo.iter().map(|v| v + rng.gen_range(0.0..2.0)).collect();
                AxisBoxD::new(PointD::new(lo).unwrap(), PointD::new(hi).unwrap()).unwrap()
            };
            let a = mk(&mut rng);
            let b = mk(&mut rng);
            // 1D interval-overlap conjunction, axis by axis.
            let expect = (0..dim).all(|i| {
                let (alo, ahi) = (a.lo().coord(i), a.hi().coord(i));
                let (blo, bhi) = (b.lo().coord(i), b.hi().coord(i));
                alo.max(*blo) <= ahi.min(*bhi)
            });
            assert_eq!(boxes_intersect(&a, &b).unwrap(), expect);
        }
    }

    #[test]
    fn box_intersect_symmetric_reflexive() {
        let mut rng = StdRng::seed_from_u64(8);
        let mut mk = |rng: &mut StdRng| {
            let lo: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let hi: Vec<f64> = lo.iter().map(|v| v + rng.gen_range(0.0..1.5)).collect();
            AxisBoxD::new(PointD::new(lo).unwrap(), PointD::new(hi).unwrap()).unwrap()
        };
        for _ in 0..200 {
            let a = mk(&mut rng);
            let b = mk(&mut rng);
            assert!(boxes_intersect(&a, &a).unwrap());
            assert_eq!(
                boxes_intersect(&a, &b).unwrap(),
                boxes_intersect(&b, &a).unwrap()
            );
        }
    }

    #[test]
    fn tangent_balls_intersect_exactly() {
        // Radii 1/2 at center distance exactly 1: tangency must count.
        let a =
            BallD::from_radius_sq(rpt(&[Rat::int(0), Rat::int(0), Rat::int(0)]), Rat::new(1, 4))
                .unwrap();
        let b =
            BallD::from_radius_sq(rpt(&[Rat::int(1), Rat::int(0), Rat::int(0)]), Rat::new(1, 4))
                .unwrap();
        assert!(balls_intersect(&a, &b).unwrap());
        // Any positive gap, however small, separates them.
        let c = BallD::from_radius_sq(
            rpt(&[
                Rat::int(1).add_s(&Rat::new(1, 1_000_000_000)),
                Rat::int(0),
                Rat::int(0),
            ]),
            Rat::new(1, 4),
        )
        .unwrap();
        assert!(!balls_intersect(&a, &c).unwrap());
        assert!(balls_intersect(&a, &a).unwrap());
    }

    #[test]
    fn ball_intersection_matches_exact_recomputation() {
        let mut rng = StdRng::seed_from_u64(9);
        let mut mk = |rng: &mut StdRng| {
            let c: Vec<Rat> = (0..3)
                .map(|_| Rat::new(rng.gen_range(-50..50), rng.gen_range(1..20)))
                .collect();
            let r = Rat::new(rng.gen_range(1..30), rng.gen_range(1..10));
            (BallD::from_radius(rpt(&c), r.clone()).unwrap(), r)
        };
        for _ in 0..1000 {
            let (a, r1) = mk(&mut rng);
            let (b, r2) = mk(&mut rng);
            // Independent oracle: dist^2 <= (r1+r2)^2 with explicit rational radii.
            let expect = a
                .center()
                .dist_sq(b.center())
                .unwrap()
                .le_s(&r1.add_s(&r2).sq());
            assert_eq!(balls_intersect(&a, &b).unwrap(), expect);
        }
    }

    #[test]
    fn gd_basic_cases() {
        let any = GeneralizedDominance::all_any(3);
        assert!(gd_holds(&pt(&[5.0, -2.0, 3.0]), &pt(&[0.0, 0.0, 0.0]), &any).unwrap());
        let lt = GeneralizedDominance::new(vec![AxisRel::Lt; 3]);
        assert!(gd_holds(&pt(&[0.0, 0.0, 0.0]), &pt(&[1.0, 1.0, 1.0]), &lt).unwrap());
        let mixed = GeneralizedDominance::new(vec![AxisRel::Gt, AxisRel::Any, AxisRel::Lt]);
        assert!(gd_holds(&pt(&[1.0, 5.0, 0.0]), &pt(&[0.0, -3.0, 1.0]), &mixed).unwrap());
        assert!(!gd_holds(&pt(&[0.0, 5.0, 0.0]), &pt(&[0.0, -3.0, 1.0]), &mixed).unwrap());
    }

    #[test]
    fn gd_flip_symmetry() {
        let mut rng = StdRng::seed_from_u64(10);
        for _ in 0..500 {
            let rels: Vec<AxisRel> = (0..3)
                .map(|_| match rng.gen_range(0..3) {
                    0 => AxisRel::Lt,
                    1 => AxisRel::Gt,
                    _ => AxisRel::Any,
                })
                .collect();
            let rel = GeneralizedDominance::new(rels);
            let p = pt(&[rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()]);
            let q = pt(&[rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()]);
            assert_eq!(
                gd_holds(&p, &q, &rel).unwrap(),
                gd_holds(&q, &p, &rel.flip()).unwrap()
            );
        }
    }

    #[test]
    fn cell_relation_cases() {
        let same = dominance_rel_for_cells(&[2, -1, 0], &[2, -1, 0]).unwrap();
        assert_eq!(same, GeneralizedDominance::all_any(3));
        let plus_x = dominance_rel_for_cells(&[0, 0, 0], &[1, 0, 0]).unwrap();
        assert_eq!(
            plus_x,
            GeneralizedDominance::new(vec![AxisRel::Gt, AxisRel::Any, AxisRel::Any])
        );
        assert_eq!(
            dominance_rel_for_cells(&[0, 0, 0], &[2, 0, 0]),
            Err(GeomError::CellsTooFar)
        );
    }

    #[test]
    fn cell_relation_matches_cube_intersection() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..10_000 {
            let cell_p: Vec<i64> = (0..3).map(|_| rng.gen_range(-3..3)).collect();
            let cell_q: Vec<i64> = cell_p.iter().map(|c| c + rng.gen_range(-1..=1)).collect();
            let p_loc: Vec<f64> = (0..3).map(|_| rng.gen::<f64>()).collect();
            let q_loc: Vec<f64> = (0..3).map(|_| rng.gen::<f64>()).collect();
            let p: Vec<f64> = p_loc
                .iter()
                .zip(&cell_p)
                .map(|(v, c)| v + *c as f64)
                .collect();
            let q: Vec<f64> = q_loc
                .iter()
                .zip(&cell_q)
                .map(|(v, c)| v + *c as f64)
                .collect();
            let rel = dominance_rel_for_cells(&cell_p, &cell_q).unwrap();
            let cubes = boxes_intersect(
                &AxisBoxD::unit_cube(&pt(&p)),
                &AxisBoxD::unit_cube(&pt(&q)),
            )
            .unwrap();
            let dom = gd_holds(&pt(&p_loc), &pt(&q_loc), &rel).unwrap();
            assert_eq!(cubes, dom);
        }
    }

    #[test]
    fn circle_point_small_cases() {
        let (b, w) = rational_circle_point(&Rat::new(1, 2)).unwrap();
        assert_eq!((b, w), (Rat::new(4, 5), Rat::new(3, 5)));
        let (b, w) = rational_circle_point(&Rat::new(1, 3)).unwrap();
        assert_eq!((b, w), (Rat::new(3, 5), Rat::new(4, 5)));
        assert!(rational_circle_point(&Rat::int(0)).is_err());
        assert!(rational_circle_point(&Rat::int(1)).is_err());
    }

    #[test]
    fn circle_point_exact_on_random_params() {
        let mut rng = StdRng::seed_from_u64(12);
        for _ in 0..100 {
            let den = rng.gen_range(2..10_000);
            let num = rng.gen_range(1..den);
            let (b, w) = rational_circle_point(&Rat::new(num, den)).unwrap();
            assert_eq!(b.sq().add_s(&w.sq()), Rat::int(1));
            assert!(Rat::int(0).lt_s(&b) && b.lt_s(&Rat::int(1)));
        }
    }
}
