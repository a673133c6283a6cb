//! Bounded unary and pairwise relation features over primitives.
//!
//! Every evaluator returns values in `[0, 1]`. A null operand yields the
//! relation's missing value, all zeros.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::{boundary_pixels, convex_hull, min_set_dist, on_hull_boundary, Point2};
use crate::primitives::{Contour, Primitive, PrimitiveKind, Region};
use crate::scalar::{unit_clamp, Scalar};

/// Number of sectors in the relative-position histogram.
pub const RELPOS_BINS: usize = 8;
pub const SHAPE_DIMS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationKind {
    Exists,
    Touch,
    Relpos,
    Continuity,
    Bounds,
    Shape,
}

impl RelationKind {
    pub const ALL: [RelationKind; 6] = [
        RelationKind::Exists,
        RelationKind::Touch,
        RelationKind::Relpos,
        RelationKind::Continuity,
        RelationKind::Bounds,
        RelationKind::Shape,
    ];

    pub fn id(self) -> &'static str {
        match self {
            RelationKind::Exists => "exists",
            RelationKind::Touch => "touch",
            RelationKind::Relpos => "relpos",
            RelationKind::Continuity => "continuity",
            RelationKind::Bounds => "bounds",
            RelationKind::Shape => "shape",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            RelationKind::Exists | RelationKind::Shape => 1,
            _ => 2,
        }
    }

    /// Output dimension.
    pub fn dims(self) -> usize {
        match self {
            RelationKind::Relpos => RELPOS_BINS,
            RelationKind::Shape => SHAPE_DIMS,
            _ => 1,
        }
    }

    /// Whether operands of these kinds are acceptable.
    pub fn accepts(self, kinds: &[PrimitiveKind]) -> bool {
        use PrimitiveKind::*;
        if kinds.len() != self.arity() {
            return false;
        }
        match self {
            RelationKind::Exists | RelationKind::Touch | RelationKind::Relpos => true,
            RelationKind::Continuity => kinds == [Contour, Contour],
            RelationKind::Bounds => kinds == [Contour, Region],
            RelationKind::Shape => kinds == [Region],
        }
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for RelationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RelationKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| format!("unknown relation kind {s:?}"))
    }
}

/// Tunable constants of a relation instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct RelationParams<T> {
    /// Distance decay constant in pixels (touch, continuity).
    pub tol: T,
    /// Strength that saturates existence of contours and points.
    pub strength_scale: T,
    /// Normalized area that saturates existence of regions.
    pub area_scale: T,
    /// Distance to the mask boundary counted as bounding, in pixels.
    pub bound_dist: T,
}

impl<T: Scalar> Default for RelationParams<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(2.0),
            strength_scale: T::lit(50.0),
            area_scale: T::lit(0.05),
            bound_dist: T::lit(1.5),
        }
    }
}

/// Fixed-length relation output.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationValue<T>(pub Vec<T>);

impl<T: Scalar> RelationValue<T> {
    pub fn scalar(v: T) -> Self {
        Self(vec![v])
    }

    pub fn missing(kind: RelationKind) -> Self {
        Self(vec![T::zero(); kind.dims()])
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn get(&self) -> T {
        self.0[0]
    }
}

pub fn rel_exists<T: Scalar>(p: Option<&Primitive<T>>, params: &RelationParams<T>) -> RelationValue<T> {
    let v = match p {
        None => T::zero(),
        Some(Primitive::Contour(c)) => c.mean_strength / params.strength_scale,
        Some(Primitive::Point(pt)) => pt.strength / params.strength_scale,
        Some(Primitive::Region(r)) => r.normalized_area() / params.area_scale,
    };
    RelationValue::scalar(unit_clamp(v))
}

/// `exp(−d / tol)` with `d` the minimum distance between the point sets.
pub fn rel_touch<T: Scalar>(a: &Primitive<T>, b: &Primitive<T>, tol: T) -> RelationValue<T> {
    let d = min_set_dist(&a.point_set(), &b.point_set());
    RelationValue::scalar(unit_clamp((-d / tol).exp()))
}

/// Exact centroid difference `centroid(b) − centroid(a)` computed from
/// coordinate sums, so integer translations cancel exactly.
fn centroid_delta<T: Scalar>(a: &Primitive<T>, b: &Primitive<T>) -> Point2<T> {
    fn sums<T: Scalar>(p: &Primitive<T>) -> (T, T, T) {
        match p {
            Primitive::Point(pt) => (pt.position.x, pt.position.y, T::one()),
            Primitive::Contour(c) => c.points.iter().fold((T::zero(), T::zero(), T::zero()), |(x, y, n), q| {
                (x + q.x, y + q.y, n + T::one())
            }),
            Primitive::Region(r) => {
                let (sx, sy) = r
                    .pixels
                    .iter()
                    .fold((0u64, 0u64), |(sx, sy), q| (sx + q.x as u64, sy + q.y as u64));
                (
                    T::from_u64(sx).unwrap(),
                    T::from_u64(sy).unwrap(),
                    T::from_usize_lossy(r.pixels.len()),
                )
            }
        }
    }
    let (ax, ay, an) = sums(a);
    let (bx, by, bn) = sums(b);
    let den = an * bn;
    Point2::new((bx * an - ax * bn) / den, (by * an - ay * bn) / den)
}

/// Soft 8-sector histogram of the direction from `a` to `b`. Sector 0 is
/// East and sectors advance counter-clockwise as seen on screen (North is
/// up, i.e. negative `y`).
pub fn rel_relative_position<T: Scalar>(a: &Primitive<T>, b: &Primitive<T>) -> RelationValue<T> {
    let d = centroid_delta(a, b);
    relpos_from_delta(d.x, d.y)
}

pub fn relpos_from_delta<T: Scalar>(dx: T, dy: T) -> RelationValue<T> {
    let mut bins = vec![T::zero(); RELPOS_BINS];
    if dx == T::zero() && dy == T::zero() {
        let u = T::one() / T::from_usize_lossy(RELPOS_BINS);
        return RelationValue(vec![u; RELPOS_BINS]);
    }
    let mut angle = (-dy).atan2(dx);
    if angle < T::zero() {
        angle += T::TAU();
    }
    let sector = T::TAU() / T::from_usize_lossy(RELPOS_BINS);
    let pos = angle / sector;
    let i = pos.floor();
    let frac = pos - i;
    let i = i.to_usize().unwrap_or(0) % RELPOS_BINS;
    bins[i] = T::one() - frac;
    bins[(i + 1) % RELPOS_BINS] += frac;
    RelationValue(bins)
}

/// Best endpoint pairing of `exp(−gap/tol) · cos²(Δθ)`; closed contours give 0.
pub fn rel_continuity<T: Scalar>(c1: &Contour<T>, c2: &Contour<T>, tol: T) -> RelationValue<T> {
    if c1.closed || c2.closed || c1.points.len() < 2 || c2.points.len() < 2 {
        return RelationValue::scalar(T::zero());
    }
    let mut best = T::zero();
    for (p, a) in c1.end_tangents(3) {
        for (q, b) in c2.end_tangents(3) {
            let gap = p.dist(q);
            let c = (a - b).cos();
            let v = (-gap / tol).exp() * c * c;
            if v > best {
                best = v;
            }
        }
    }
    RelationValue::scalar(unit_clamp(best))
}

/// Fraction of contour points within `bound_dist` of the region's boundary pixels.
pub fn rel_contour_bounds_region<T: Scalar>(c: &Contour<T>, r: &Region<T>, bound_dist: T) -> RelationValue<T> {
    if c.points.is_empty() || r.pixels.is_empty() {
        return RelationValue::scalar(T::zero());
    }
    let boundary: Vec<Point2<T>> = boundary_pixels(&r.pixels, r.frame.0, r.frame.1)
        .into_iter()
        .map(Point2::from_pixel)
        .collect();
    let lim = bound_dist * bound_dist;
    let near = c
        .points
        .iter()
        .filter(|p| boundary.iter().any(|q| p.dist2(*q) <= lim))
        .count();
    RelationValue::scalar(unit_clamp(
        T::from_usize_lossy(near) / T::from_usize_lossy(c.points.len()),
    ))
}

/// `[normalized area, elongation, solidity, boundary convexity]`.
pub fn shape_descriptor<T: Scalar>(r: &Region<T>) -> RelationValue<T> {
    if r.pixels.is_empty() {
        return RelationValue(vec![T::zero(); SHAPE_DIMS]);
    }
    let n = r.pixels.len() as i128;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0i128, 0i128, 0i128, 0i128, 0i128);
    let (mut x0, mut x1, mut y0, mut y1) = (u32::MAX, 0u32, u32::MAX, 0u32);
    for p in &r.pixels {
        let (x, y) = (p.x as i128, p.y as i128);
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    // n² times the covariance entries, exact
    let a = n * sxx - sx * sx;
    let c = n * syy - sy * sy;
    let b = n * sxy - sx * sy;
    let elongation = if a * c - b * b == 0 {
        // rank-deficient: collinear pixels (or a single pixel)
        T::one()
    } else {
        let (a, b, c) = (
            T::from_i128(a).unwrap(),
            T::from_i128(b).unwrap(),
            T::from_i128(c).unwrap(),
        );
        let half = T::lit(0.5);
        let mid = (a + c) * half;
        let rad = (((a - c) * half).powi(2) + b * b).sqrt();
        let l1 = mid + rad;
        let l2 = (mid - rad).max(T::zero());
        T::one() - l2 / l1
    };
    let bbox = ((x1 - x0 + 1) as usize) * ((y1 - y0 + 1) as usize);
    let solidity = T::from_usize_lossy(r.pixels.len()) / T::from_usize_lossy(bbox);
    let pts: Vec<(i64, i64)> = r.pixels.iter().map(|p| (p.x as i64, p.y as i64)).collect();
    let hull = convex_hull(&pts);
    let boundary = boundary_pixels(&r.pixels, r.frame.0.max(x1 as usize + 1), r.frame.1.max(y1 as usize + 1));
    let on_hull = boundary
        .iter()
        .filter(|p| on_hull_boundary((p.x as i64, p.y as i64), &hull, 0.5))
        .count();
    let convexity = T::from_usize_lossy(on_hull) / T::from_usize_lossy(boundary.len().max(1));
    RelationValue(
        [r.normalized_area(), elongation, solidity, convexity]
            .into_iter()
            .map(unit_clamp)
            .collect(),
    )
}

/// Dispatches on kind. Operands must already have been kind-checked;
/// unsupported operand kinds and null operands yield the missing value.
pub fn evaluate<T: Scalar>(
    kind: RelationKind,
    params: &RelationParams<T>,
    operands: &[Option<&Primitive<T>>],
) -> RelationValue<T> {
    match (kind, operands) {
        (RelationKind::Exists, [a]) => rel_exists(*a, params),
        (RelationKind::Touch, [Some(a), Some(b)]) => rel_touch(a, b, params.tol),
        (RelationKind::Relpos, [Some(a), Some(b)]) => rel_relative_position(a, b),
        (RelationKind::Continuity, [Some(Primitive::Contour(a)), Some(Primitive::Contour(b))]) => {
            rel_continuity(a, b, params.tol)
        }
        (RelationKind::Bounds, [Some(Primitive::Contour(c)), Some(Primitive::Region(r))]) => {
            rel_contour_bounds_region(c, r, params.bound_dist)
        }
        (RelationKind::Shape, [Some(Primitive::Region(r))]) => shape_descriptor(r),
        _ => RelationValue::missing(kind),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pixel;
    use crate::primitives::{PointFeature, PointKind};

    fn pt(x: f64, y: f64) -> Primitive<f64> {
        Primitive::Point(PointFeature {
            position: Point2::new(x, y),
            kind: PointKind::GradientPeak,
            strength: 10.0,
        })
    }

    fn contour(points: &[(f64, f64)], strength: f64) -> Contour<f64> {
        Contour {
            points: points.iter().map(|&(x, y)| Point2::new(x, y)).collect(),
            mean_strength: strength,
            closed: false,
        }
    }

    fn rect(x0: u32, y0: u32, w: u32, h: u32, frame: (usize, usize)) -> Region<f64> {
        let px = (y0..y0 + h)
            .flat_map(|y| (x0..x0 + w).map(move |x| Pixel::new(x, y)))
            .collect();
        Region::from_pixels(px, frame, None)
    }

    #[test]
    fn exists_cases() {
        let p = RelationParams::default();
        assert_eq!(rel_exists::<f64>(None, &p).get(), 0.0);
        let strong = Primitive::Contour(contour(&[(0.0, 0.0), (1.0, 0.0)], 80.0));
        assert_eq!(rel_exists(Some(&strong), &p).get(), 1.0);
        let half = Primitive::Contour(contour(&[(0.0, 0.0), (1.0, 0.0)], 25.0));
        assert_eq!(rel_exists(Some(&half), &p).get(), 0.5);
    }

    #[test]
    fn touch_closed_forms() {
        assert_eq!(rel_touch(&pt(3.0, 3.0), &pt(3.0, 3.0), 2.0).get(), 1.0);
        let v = rel_touch(&pt(0.0, 0.0), &pt(2.0, 0.0), 2.0).get();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.3679).abs() < 1e-4);
    }

    #[test]
    fn relpos_bin_centres_and_midpoints() {
        let e = rel_relative_position(&pt(0.0, 0.0), &pt(5.0, 0.0));
        assert_eq!(e.values(), &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let t = 22.5f64.to_radians();
        let ne = relpos_from_delta(t.cos(), -t.sin());
        assert!((ne.values()[0] - 0.5).abs() < 1e-12);
        assert!((ne.values()[1] - 0.5).abs() < 1e-12);
        let same = rel_relative_position(&pt(1.0, 1.0), &pt(1.0, 1.0));
        assert!(same.values().iter().all(|&v| v == 0.125));
        // north is up on screen
        let n = rel_relative_position(&pt(0.0, 5.0), &pt(0.0, 0.0));
        assert_eq!(n.values()[2], 1.0);
    }

    #[test]
    fn continuity_closed_forms() {
        let a = contour(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0)], 50.0);
        let b = contour(&[(3.0, 0.0), (4.0, 0.0), (5.0, 0.0), (6.0, 0.0)], 50.0);
        assert!((rel_continuity(&a, &b, 2.0).get() - 1.0).abs() < 1e-12);
        let c = contour(&[(3.0, 0.0), (3.0, 1.0), (3.0, 2.0), (3.0, 3.0)], 50.0);
        assert!(rel_continuity(&a, &c, 2.0).get() < 1e-12);
        let mut closed = b.clone();
        closed.closed = true;
        assert_eq!(rel_continuity(&a, &closed, 2.0).get(), 0.0);
    }

    #[test]
    fn bounds_cases() {
        let sq = rect(5, 5, 8, 8, (20, 20));
        let ring: Vec<(f64, f64)> = boundary_pixels(&sq.pixels, 20, 20)
            .iter()
            .map(|p| (p.x as f64, p.y as f64))
            .collect();
        assert_eq!(rel_contour_bounds_region(&contour(&ring, 50.0), &sq, 1.5).get(), 1.0);
        let far = contour(&[(0.0, 0.0), (0.0, 1.0), (0.0, 2.0)], 50.0);
        assert_eq!(rel_contour_bounds_region(&far, &sq, 1.5).get(), 0.0);
        // one side of the square: every contour point lies on the boundary
        let side: Vec<(f64, f64)> = (5..13).map(|x| (x as f64, 5.0)).collect();
        assert_eq!(rel_contour_bounds_region(&contour(&side, 50.0), &sq, 1.5).get(), 1.0);
        // half the points on the boundary, half far outside
        let mixed: Vec<(f64, f64)> = (5..13).map(|x| (x as f64, if x < 9 { 5.0 } else { 1.0 })).collect();
        assert_eq!(rel_contour_bounds_region(&contour(&mixed, 50.0), &sq, 1.5).get(), 0.5);
    }

    #[test]
    fn shape_of_full_square_and_strip() {
        let full = rect(0, 0, 10, 10, (10, 10));
        let s = shape_descriptor(&full);
        assert_eq!(s.values()[0], 1.0);
        assert_eq!(s.values()[1], 0.0);
        assert_eq!(s.values()[2], 1.0);
        let strip = rect(3, 2, 1, 10, (10, 20));
        let s = shape_descriptor(&strip);
        assert_eq!(s.values()[1], 1.0);
        assert_eq!(s.values()[2], 1.0);
    }

    #[test]
    fn evaluate_null_is_missing() {
        let p = RelationParams::<f64>::default();
        for kind in RelationKind::ALL {
            let ops = vec![None; kind.arity()];
            let v = evaluate(kind, &p, &ops);
            assert_eq!(v.values().len(), kind.dims());
            assert!(v.values().iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn kind_ids_roundtrip() {
        for kind in RelationKind::ALL {
            assert_eq!(kind.id().parse::<RelationKind>().unwrap(), kind);
        }
        assert!("nearby".parse::<RelationKind>().is_err());
    }
}
