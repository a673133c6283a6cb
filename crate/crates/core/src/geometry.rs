//! Small geometric vocabulary shared by primitives, relations and evaluation.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Sub-pixel position; `x` grows right, `y` grows down.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[T; 2]", into = "[T; 2]")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T> From<[T; 2]> for Point2<T> {
    fn from([x, y]: [T; 2]) -> Self {
        Self { x, y }
    }
}

impl<T> From<Point2<T>> for [T; 2] {
    fn from(p: Point2<T>) -> Self {
        [p.x, p.y]
    }
}

impl<T: Scalar> Point2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn from_pixel(p: Pixel) -> Self {
        Self::new(T::from_u32(p.x).unwrap(), T::from_u32(p.y).unwrap())
    }

    #[inline]
    pub fn dist2(self, o: Self) -> T {
        let dx = self.x - o.x;
        let dy = self.y - o.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn dist(self, o: Self) -> T {
        self.dist2(o).sqrt()
    }

    /// Nearest integer pixel, if it lies inside `dims`.
    pub fn to_pixel(self, dims: (usize, usize)) -> Option<Pixel> {
        let x = self.x.round();
        let y = self.y.round();
        if x < T::zero() || y < T::zero() {
            return None;
        }
        let (x, y) = (x.to_usize()?, y.to_usize()?);
        (x < dims.0 && y < dims.1).then(|| Pixel::new(x as u32, y as u32))
    }

    pub fn in_bounds(self, dims: (usize, usize)) -> bool {
        let w = T::from_usize_lossy(dims.0);
        let h = T::from_usize_lossy(dims.1);
        self.x >= T::zero() && self.y >= T::zero() && self.x <= w - T::one() && self.y <= h - T::one()
    }
}

/// Integer pixel coordinate. Ordered row-major (`y` first).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct Pixel {
    pub x: u32,
    pub y: u32,
}

impl Pixel {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dist2(self, o: Pixel) -> u64 {
        let dx = self.x as i64 - o.x as i64;
        let dy = self.y as i64 - o.y as i64;
        (dx * dx + dy * dy) as u64
    }
}

impl From<[u32; 2]> for Pixel {
    fn from([x, y]: [u32; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Pixel> for [u32; 2] {
    fn from(p: Pixel) -> Self {
        [p.x, p.y]
    }
}

impl PartialOrd for Pixel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pixel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

/// Dense boolean raster, used for set operations on pixel masks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMask {
    pub width: usize,
    pub height: usize,
    bits: Vec<bool>,
}

impl BitMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: &[Pixel]) -> Self {
        let mut m = Self::new(width, height);
        for p in pixels {
            m.insert(p.x as i64, p.y as i64);
        }
        m
    }

    /// Sets a pixel; coordinates outside the raster are ignored.
    #[inline]
    pub fn insert(&mut self, x: i64, y: i64) {
        if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            self.bits[y as usize * self.width + x as usize] = true;
        }
    }

    #[inline]
    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.bits[y as usize * self.width + x as usize]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn intersection_count(&self, o: &BitMask) -> usize {
        debug_assert_eq!((self.width, self.height), (o.width, o.height));
        self.bits.iter().zip(&o.bits).filter(|(a, b)| **a && **b).count()
    }

    pub fn union_count(&self, o: &BitMask) -> usize {
        debug_assert_eq!((self.width, self.height), (o.width, o.height));
        self.bits.iter().zip(&o.bits).filter(|(a, b)| **a || **b).count()
    }

    pub fn union_with(&mut self, o: &BitMask) {
        for (a, b) in self.bits.iter_mut().zip(&o.bits) {
            *a |= *b;
        }
    }

    /// Set pixels in row-major order.
    pub fn pixels(&self) -> Vec<Pixel> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if self.bits[y * self.width + x] {
                    out.push(Pixel::new(x as u32, y as u32));
                }
            }
        }
        out
    }

    /// `|A ∩ B| / |A ∪ B|` as an exact pair of counts; both empty gives `(0, 0)`.
    pub fn iou_counts(&self, o: &BitMask) -> (usize, usize) {
        (self.intersection_count(o), self.union_count(o))
    }

    pub fn iou(&self, o: &BitMask) -> f64 {
        let (i, u) = self.iou_counts(o);
        if u == 0 {
            0.0
        } else {
            i as f64 / u as f64
        }
    }
}

/// Pixels of `mask` that have at least one 4-neighbour outside the mask
/// (image border counts as outside).
pub fn boundary_pixels(pixels: &[Pixel], width: usize, height: usize) -> Vec<Pixel> {
    let m = BitMask::from_pixels(width, height, pixels);
    pixels
        .iter()
        .copied()
        .filter(|p| {
            let (x, y) = (p.x as i64, p.y as i64);
            [(1, 0), (-1, 0), (0, 1), (0, -1)]
                .iter()
                .any(|(dx, dy)| !m.contains(x + dx, y + dy))
        })
        .collect()
}

/// Distance from `p` to the segment `a`–`b`.
pub fn point_segment_dist<T: Scalar>(p: Point2<T>, a: Point2<T>, b: Point2<T>) -> T {
    let abx = b.x - a.x;
    let aby = b.y - a.y;
    let len2 = abx * abx + aby * aby;
    if len2 == T::zero() {
        return p.dist(a);
    }
    let t = ((p.x - a.x) * abx + (p.y - a.y) * aby) / len2;
    let t = t.max(T::zero()).min(T::one());
    p.dist(Point2::new(a.x + t * abx, a.y + t * aby))
}

/// Distance from `p` to a polyline (a single point counts as a degenerate polyline).
pub fn point_polyline_dist<T: Scalar>(p: Point2<T>, line: &[Point2<T>]) -> T {
    match line {
        [] => T::infinity(),
        [a] => p.dist(*a),
        _ => line
            .windows(2)
            .map(|w| point_segment_dist(p, w[0], w[1]))
            .fold(T::infinity(), T::min),
    }
}

/// Minimum distance between two finite point sets; infinity if either is empty.
///
/// Sweeps the larger set sorted by y (region pixel lists already are) and
/// skips pairs whose y gap alone already reaches the best squared distance,
/// so the result equals the all-pairs minimum.
pub fn min_set_dist<T: Scalar>(a: &[Point2<T>], b: &[Point2<T>]) -> T {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut best = T::infinity();
    if small.len() * large.len() <= 64 {
        for p in small {
            for q in large {
                let d = p.dist2(*q);
                if d < best {
                    best = d;
                }
            }
        }
        return best.sqrt();
    }
    let owned;
    let sorted: &[Point2<T>] = if large.is_sorted_by(|p, q| p.y <= q.y) {
        large
    } else {
        let mut v = large.to_vec();
        v.sort_by(|p, q| p.y.partial_cmp(&q.y).unwrap_or(std::cmp::Ordering::Equal));
        owned = v;
        &owned
    };
    for p in small {
        let start = sorted.partition_point(|q| q.y < p.y);
        for q in &sorted[start..] {
            let dy = q.y - p.y;
            if dy * dy >= best {
                break;
            }
            let d = p.dist2(*q);
            if d < best {
                best = d;
            }
        }
        for q in sorted[..start].iter().rev() {
            let dy = p.y - q.y;
            if dy * dy >= best {
                break;
            }
            let d = p.dist2(*q);
            if d < best {
                best = d;
            }
        }
        if best == T::zero() {
            break;
        }
    }
    best.sqrt()
}

/// 8-connected digital segment from `a` to `b` (inclusive), DDA stepping.
pub fn digital_line(a: (i64, i64), b: (i64, i64)) -> Vec<(i64, i64)> {
    let dx = b.0 - a.0;
    let dy = b.1 - a.1;
    let n = dx.abs().max(dy.abs());
    if n == 0 {
        return vec![a];
    }
    (0..=n)
        .map(|i| {
            // round-half-away-from-zero on exact rationals
            let x = a.0 * n + dx * i;
            let y = a.1 * n + dy * i;
            (div_round(x, n), div_round(y, n))
        })
        .collect()
}

fn div_round(num: i64, den: i64) -> i64 {
    (2 * num + den).div_euclid(2 * den)
}

/// Convex hull (monotone chain) of integer points, counter-clockwise,
/// collinear points removed.
pub fn convex_hull(points: &[(i64, i64)]) -> Vec<(i64, i64)> {
    let mut pts: Vec<(i64, i64)> = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    }
    let mut lower: Vec<(i64, i64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(i64, i64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Whether `p` lies on the boundary (within `eps`) of the convex polygon `hull`.
pub fn on_hull_boundary(p: (i64, i64), hull: &[(i64, i64)], eps: f64) -> bool {
    if hull.len() == 1 {
        return p == hull[0];
    }
    let pf = Point2::new(p.0 as f64, p.1 as f64);
    let n = hull.len();
    (0..n).any(|i| {
        let a = hull[i];
        let b = hull[(i + 1) % n];
        point_segment_dist(
            pf,
            Point2::new(a.0 as f64, a.1 as f64),
            Point2::new(b.0 as f64, b.1 as f64),
        ) <= eps
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn min_set_dist_matches_all_pairs() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(3);
        for _ in 0..200 {
            let set = |n: usize, rng: &mut rand_chacha::ChaCha20Rng| -> Vec<Point2<f64>> {
                (0..n)
                    .map(|_| Point2::new(rng.random_range(0..40) as f64 * 0.5, rng.random_range(0..40) as f64 * 0.5))
                    .collect()
            };
            let (na, nb) = (rng.random_range(1..60), rng.random_range(1..60));
            let a = set(na, &mut rng);
            let b = set(nb, &mut rng);
            let brute = a.iter().flat_map(|p| b.iter().map(move |q| p.dist2(*q))).fold(f64::INFINITY, f64::min).sqrt();
            assert_eq!(min_set_dist(&a, &b), brute);
            assert_eq!(min_set_dist(&b, &a), brute);
        }
        assert_eq!(min_set_dist::<f64>(&[], &[Point2::new(0.0, 0.0)]), f64::INFINITY);
    }

    #[test]
    fn digital_line_is_8_connected() {
        for &(b0, b1) in &[(7, 3), (-4, 9), (0, -5), (6, 6), (-8, -1)] {
            let line = digital_line((2, 2), (2 + b0, 2 + b1));
            assert_eq!(line[0], (2, 2));
            assert_eq!(*line.last().unwrap(), (2 + b0, 2 + b1));
            for w in line.windows(2) {
                assert!((w[0].0 - w[1].0).abs() <= 1 && (w[0].1 - w[1].1).abs() <= 1);
            }
        }
    }

    #[test]
    fn hull_of_square() {
        let pts: Vec<(i64, i64)> = (0..4).flat_map(|y| (0..4).map(move |x| (x, y))).collect();
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 4);
        assert!(on_hull_boundary((0, 2), &hull, 1e-9));
        assert!(!on_hull_boundary((1, 2), &hull, 1e-9));
    }

    #[test]
    fn polyline_distance() {
        let line = [Point2::new(0.0, 0.0), Point2::new(10.0, 0.0)];
        assert_eq!(point_polyline_dist(Point2::new(5.0, 3.0), &line), 3.0);
        assert_eq!(point_polyline_dist(Point2::new(13.0, 4.0), &line), 5.0);
    }

    #[test]
    fn point_serializes_as_pair() {
        let p = Point2::new(1.5f64, 2.0);
        assert_eq!(serde_json::to_string(&p).unwrap(), "[1.5,2.0]");
        let q: Point2<f64> = serde_json::from_str("[1.5,2.0]").unwrap();
        assert_eq!(p, q);
        assert_eq!(serde_json::to_string(&Pixel::new(3, 4)).unwrap(), "[3,4]");
    }
}
