//! Stage one of interpretation: candidate points, contours and regions.
//!
//! Contours come from central-difference gradients, asymmetric non-maximum
//! suppression, a single magnitude threshold, removal of redundant
//! staircase pixels, and greedy 8-connected linking. Regions are 4-connected
//! components of an equal-width intensity quantization. Points are contour
//! endpoints, chain junctions, and peaks of a centre-surround blob response.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::PrimitiveError;
use crate::geometry::{BitMask, Pixel, Point2};
use crate::image::Image;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    ContourEndpoint,
    Junction,
    GradientPeak,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct PointFeature<T> {
    pub position: Point2<T>,
    pub kind: PointKind,
    pub strength: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct Contour<T> {
    pub points: Vec<Point2<T>>,
    pub mean_strength: T,
    pub closed: bool,
}

impl<T: Scalar> Contour<T> {
    /// Polyline arc length (closing segment excluded).
    pub fn arc_length(&self) -> T {
        self.points
            .windows(2)
            .map(|w| w[0].dist(w[1]))
            .fold(T::zero(), |a, b| a + b)
    }

    /// The two ends with the outward tangent angle at each, in radians.
    /// Tangents are estimated over up to `span` polyline steps.
    pub fn end_tangents(&self, span: usize) -> [(Point2<T>, T); 2] {
        let n = self.points.len();
        let k = span.min(n.saturating_sub(1)).max(1).min(n - 1);
        let first = self.points[0];
        let last = self.points[n - 1];
        let a0 = (first.y - self.points[k].y).atan2(first.x - self.points[k].x);
        let a1 = (last.y - self.points[n - 1 - k].y).atan2(last.x - self.points[n - 1 - k].x);
        [(first, a0), (last, a1)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct Region<T> {
    /// Row-major sorted pixel list.
    pub pixels: Vec<Pixel>,
    pub area: usize,
    pub centroid: Point2<T>,
    pub mean_intensity: T,
    /// Dimensions of the image the region was extracted from.
    pub frame: (usize, usize),
}

impl<T: Scalar> Region<T> {
    /// Builds a region from pixels, computing area and centroid. Pixels are
    /// sorted and deduplicated. Intensity is taken from `img` when given.
    pub fn from_pixels(mut pixels: Vec<Pixel>, frame: (usize, usize), img: Option<&Image>) -> Self {
        pixels.sort_unstable();
        pixels.dedup();
        let area = pixels.len();
        let n = T::from_usize_lossy(area.max(1));
        let (sx, sy) = pixels
            .iter()
            .fold((0u64, 0u64), |(sx, sy), p| (sx + p.x as u64, sy + p.y as u64));
        let centroid = Point2::new(
            T::from_u64(sx).unwrap() / n,
            T::from_u64(sy).unwrap() / n,
        );
        let mean_intensity = match img {
            Some(img) => {
                let s: u64 = pixels
                    .iter()
                    .map(|p| img.get(p.x as usize, p.y as usize) as u64)
                    .sum();
                T::from_u64(s).unwrap() / n
            }
            None => T::zero(),
        };
        Self {
            pixels,
            area,
            centroid,
            mean_intensity,
            frame,
        }
    }

    pub fn normalized_area(&self) -> T {
        T::from_usize_lossy(self.area) / T::from_usize_lossy(self.frame.0 * self.frame.1)
    }

    pub fn point_set(&self) -> Vec<Point2<T>> {
        self.pixels.iter().map(|&p| Point2::from_pixel(p)).collect()
    }
}

/// Tagged union of the three primitive kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub enum Primitive<T> {
    Point(PointFeature<T>),
    Contour(Contour<T>),
    Region(Region<T>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveKind {
    Point,
    Contour,
    Region,
}

impl PrimitiveKind {
    pub fn name(self) -> &'static str {
        match self {
            PrimitiveKind::Point => "point",
            PrimitiveKind::Contour => "contour",
            PrimitiveKind::Region => "region",
        }
    }
}

impl<T: Scalar> Primitive<T> {
    pub fn kind(&self) -> PrimitiveKind {
        match self {
            Primitive::Point(_) => PrimitiveKind::Point,
            Primitive::Contour(_) => PrimitiveKind::Contour,
            Primitive::Region(_) => PrimitiveKind::Region,
        }
    }

    /// Point set used by distance relations: the single point, the
    /// polyline vertices, or the mask pixels.
    pub fn point_set(&self) -> Vec<Point2<T>> {
        match self {
            Primitive::Point(p) => vec![p.position],
            Primitive::Contour(c) => c.points.clone(),
            Primitive::Region(r) => r.point_set(),
        }
    }

    pub fn centroid(&self) -> Point2<T> {
        match self {
            Primitive::Point(p) => p.position,
            Primitive::Region(r) => r.centroid,
            Primitive::Contour(c) => {
                let n = T::from_usize_lossy(c.points.len());
                let (sx, sy) = c
                    .points
                    .iter()
                    .fold((T::zero(), T::zero()), |(sx, sy), p| (sx + p.x, sy + p.y));
                Point2::new(sx / n, sy / n)
            }
        }
    }

    pub fn as_contour(&self) -> Option<&Contour<T>> {
        match self {
            Primitive::Contour(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_region(&self) -> Option<&Region<T>> {
        match self {
            Primitive::Region(r) => Some(r),
            _ => None,
        }
    }

    /// Shifted by whole pixels into a frame of `frame` size. Region pixels
    /// falling outside the frame are dropped.
    pub fn translated(&self, dx: i64, dy: i64, frame: (usize, usize)) -> Self {
        let (fx, fy) = (T::from_i64(dx).unwrap(), T::from_i64(dy).unwrap());
        let shift = |p: Point2<T>| Point2::new(p.x + fx, p.y + fy);
        match self {
            Primitive::Point(p) => Primitive::Point(PointFeature {
                position: shift(p.position),
                ..p.clone()
            }),
            Primitive::Contour(c) => Primitive::Contour(Contour {
                points: c.points.iter().map(|&p| shift(p)).collect(),
                ..c.clone()
            }),
            Primitive::Region(r) => {
                let px = r
                    .pixels
                    .iter()
                    .filter_map(|p| {
                        let (x, y) = (p.x as i64 + dx, p.y as i64 + dy);
                        (x >= 0 && y >= 0 && (x as usize) < frame.0 && (y as usize) < frame.1)
                            .then(|| Pixel::new(x as u32, y as u32))
                    })
                    .collect();
                let mut out = Region::from_pixels(px, frame, None);
                out.mean_intensity = r.mean_intensity;
                Primitive::Region(out)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct PrimitiveSet<T> {
    pub points: Vec<PointFeature<T>>,
    pub contours: Vec<Contour<T>>,
    pub regions: Vec<Region<T>>,
    pub source_dims: (usize, usize),
}

impl<T: Scalar> PrimitiveSet<T> {
    /// Primitives of one kind as tagged values, in extraction order.
    pub fn of_kind(&self, kind: PrimitiveKind) -> Vec<Primitive<T>> {
        match kind {
            PrimitiveKind::Point => self.points.iter().cloned().map(Primitive::Point).collect(),
            PrimitiveKind::Contour => self.contours.iter().cloned().map(Primitive::Contour).collect(),
            PrimitiveKind::Region => self.regions.iter().cloned().map(Primitive::Region).collect(),
        }
    }

    pub fn count(&self, kind: PrimitiveKind) -> usize {
        match kind {
            PrimitiveKind::Point => self.points.len(),
            PrimitiveKind::Contour => self.contours.len(),
            PrimitiveKind::Region => self.regions.len(),
        }
    }
}

/// Extraction parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractParams {
    /// Minimum gradient magnitude, gray levels per pixel.
    pub mag_threshold: f64,
    /// Minimum contour arc length in pixels.
    pub min_contour_length: f64,
    /// Largest direction change (radians) allowed between linked chain steps.
    pub max_turn: f64,
    pub num_levels: usize,
    pub min_region_area: usize,
    /// Minimum centre-surround blob response for a gradient peak.
    pub blob_threshold: f64,
    /// Split chains where the quantized levels on either side of the edge change.
    pub split_on_level_change: bool,
    /// Drop a contour when at least this fraction of its points lies within
    /// one pixel of a stronger contour. Values above 1 disable the check.
    pub duplicate_fraction: f64,
    /// Open chains are cut where the direction over three pixels on each
    /// side turns by at least this much (radians). Values above π disable.
    pub corner_angle: f64,
}

impl Default for ExtractParams {
    fn default() -> Self {
        Self {
            mag_threshold: 20.0,
            min_contour_length: 4.0,
            max_turn: std::f64::consts::FRAC_PI_2,
            num_levels: 4,
            min_region_area: 6,
            blob_threshold: 20.0,
            split_on_level_change: true,
            duplicate_fraction: 0.5,
            corner_angle: 100f64.to_radians(),
        }
    }
}

/// Per-pixel gradient magnitude and orientation in `[0, π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientMap<T> {
    pub width: usize,
    pub height: usize,
    pub magnitude: Vec<T>,
    pub orientation: Vec<T>,
}

impl<T: Scalar> GradientMap<T> {
    #[inline]
    pub fn mag(&self, x: usize, y: usize) -> T {
        self.magnitude[y * self.width + x]
    }

    #[inline]
    pub fn theta(&self, x: usize, y: usize) -> T {
        self.orientation[y * self.width + x]
    }
}

pub fn gradient_map<T: Scalar>(img: &Image) -> Result<GradientMap<T>, PrimitiveError> {
    let (w, h) = img.dims();
    if w < 3 || h < 3 {
        return Err(PrimitiveError::TooSmall { width: w, height: h });
    }
    let mut magnitude = vec![T::zero(); w * h];
    let mut orientation = vec![T::zero(); w * h];
    let half = T::lit(0.5);
    let pi = T::PI();
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let gx = T::from_i32(img.get(x + 1, y) as i32 - img.get(x - 1, y) as i32).unwrap() * half;
            let gy = T::from_i32(img.get(x, y + 1) as i32 - img.get(x, y - 1) as i32).unwrap() * half;
            magnitude[y * w + x] = gx.hypot(gy);
            let mut th = gy.atan2(gx);
            if th < T::zero() {
                th += pi;
            }
            if th >= pi {
                th -= pi;
            }
            orientation[y * w + x] = th;
        }
    }
    Ok(GradientMap {
        width: w,
        height: h,
        magnitude,
        orientation,
    })
}

/// 8-neighbour offsets in chain-code order (E, SE, S, SW, W, NW, N, NE).
const DIRS: [(i64, i64); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

struct EdgeMap {
    w: usize,
    h: usize,
    on: Vec<bool>,
}

impl EdgeMap {
    #[inline]
    fn get(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.w && (y as usize) < self.h && self.on[y as usize * self.w + x as usize]
    }

    fn neighbours(&self, x: i64, y: i64) -> impl Iterator<Item = (usize, (i64, i64))> + '_ {
        DIRS.iter()
            .enumerate()
            .filter(move |(_, (dx, dy))| self.get(x + dx, y + dy))
            .map(move |(d, (dx, dy))| (d, (x + dx, y + dy)))
    }

    fn degree(&self, x: i64, y: i64) -> usize {
        self.neighbours(x, y).count()
    }

    /// Number of 8-connected groups among the set neighbours of `(x, y)`.
    fn neighbour_groups(&self, x: i64, y: i64) -> usize {
        let set: Vec<bool> = DIRS.iter().map(|(dx, dy)| self.get(x + dx, y + dy)).collect();
        let mut seen = [false; 8];
        let mut groups = 0;
        for start in 0..8 {
            if !set[start] || seen[start] {
                continue;
            }
            groups += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(i) = stack.pop() {
                let (ax, ay) = DIRS[i];
                for j in 0..8 {
                    let (bx, by) = DIRS[j];
                    if set[j] && !seen[j] && (ax - bx).abs() <= 1 && (ay - by).abs() <= 1 {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        groups
    }
}

/// Thin edge pixels: gradient magnitude at or above threshold, and a local
/// maximum across the quantized gradient direction. The comparison is strict
/// against the lower-index neighbour and non-strict against the other, so a
/// two-pixel plateau keeps exactly one pixel.
fn suppress_non_maxima<T: Scalar>(g: &GradientMap<T>, threshold: T) -> Vec<bool> {
    let (w, h) = (g.width, g.height);
    let mut out = vec![false; w * h];
    let deg = T::lit(180.0) / T::PI();
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            let m = g.mag(x, y);
            if m < threshold || m == T::zero() {
                continue;
            }
            let a = (g.theta(x, y) * deg).as_f64();
            let (dx, dy): (i64, i64) = if !(22.5..157.5).contains(&a) {
                (1, 0)
            } else if a < 67.5 {
                (1, 1)
            } else if a < 112.5 {
                (0, 1)
            } else {
                (-1, 1)
            };
            let at = |ox: i64, oy: i64| {
                let (nx, ny) = (x as i64 + ox, y as i64 + oy);
                if nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= h {
                    T::zero()
                } else {
                    g.mag(nx as usize, ny as usize)
                }
            };
            let before = at(-dx, -dy);
            let after = at(dx, dy);
            if m > before && m >= after {
                out[y * w + x] = true;
            }
        }
    }
    out
}

/// Removes pixels whose set neighbours form a single 8-connected group
/// (so removal keeps the chain connected), sparing endpoints. One raster pass.
fn thin_staircases(edges: &mut EdgeMap) {
    for y in 0..edges.h as i64 {
        for x in 0..edges.w as i64 {
            if !edges.get(x, y) {
                continue;
            }
            let deg = edges.degree(x, y);
            if deg >= 2 && deg <= 3 && edges.neighbour_groups(x, y) == 1 {
                // only drop if every pair of remaining neighbours stays linked
                // through each other, i.e. they are 4-adjacent to one another
                let ns: Vec<(i64, i64)> = edges.neighbours(x, y).map(|(_, p)| p).collect();
                let linked = ns.iter().all(|a| {
                    ns.iter()
                        .any(|b| a != b && (a.0 - b.0).abs() <= 1 && (a.1 - b.1).abs() <= 1)
                });
                let is_corner = deg == 2 && {
                    let (a, b) = (ns[0], ns[1]);
                    (a.0 == x || a.1 == y) && (b.0 == x || b.1 == y)
                };
                if linked && (is_corner || deg == 3) {
                    edges.on[y as usize * edges.w + x as usize] = false;
                }
            }
        }
    }
}

fn turn_between(d0: usize, d1: usize) -> usize {
    let diff = (d0 as i64 - d1 as i64).rem_euclid(8) as usize;
    diff.min(8 - diff)
}

/// Links edge pixels into chains. Chains start at endpoints (degree 1) in
/// raster order, then next to junctions, then at any remaining pixel in
/// raster order. At each step the walk moves to the unvisited neighbour with
/// the smallest direction change, preferring 4-neighbours and then
/// chain-code order; it stops when no neighbour is left, the smallest change
/// exceeds `max_turn_steps` eighths of a turn, or it has entered a junction
/// (three or more neighbours in three separate groups).
fn link_chains(edges: &EdgeMap, max_turn_steps: usize) -> Vec<(Vec<(i64, i64)>, bool)> {
    let (w, h) = (edges.w as i64, edges.h as i64);
    let mut visited = vec![false; edges.on.len()];
    let idx = |x: i64, y: i64| (y * w + x) as usize;
    let junction: Vec<bool> = (0..edges.on.len())
        .map(|i| {
            let (x, y) = ((i % edges.w) as i64, (i / edges.w) as i64);
            edges.on[i] && edges.degree(x, y) >= 3 && edges.neighbour_groups(x, y) >= 3
        })
        .collect();
    let mut seeds = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if edges.get(x, y) && edges.degree(x, y) == 1 {
                seeds.push((x, y, false));
            }
        }
    }
    for y in 0..h {
        for x in 0..w {
            if edges.get(x, y) && !junction[idx(x, y)] && edges.neighbours(x, y).any(|(_, (nx, ny))| junction[idx(nx, ny)]) {
                seeds.push((x, y, false));
            }
        }
    }
    for y in 0..h {
        for x in 0..w {
            if edges.get(x, y) {
                seeds.push((x, y, true));
            }
        }
    }
    let mut chains = Vec::new();
    for (sx, sy, loop_pass) in seeds {
        if visited[idx(sx, sy)] {
            continue;
        }
        visited[idx(sx, sy)] = true;
        let mut chain = vec![(sx, sy)];
        let (mut cx, mut cy) = (sx, sy);
        let mut prev_dir: Option<usize> = None;
        loop {
            let best = edges
                .neighbours(cx, cy)
                .filter(|&(_, (nx, ny))| !visited[idx(nx, ny)])
                .min_by_key(|&(d, (nx, ny))| {
                    let turn = prev_dir.map_or(0, |p| turn_between(p, d));
                    // a fresh chain walks away from an adjacent junction
                    let into_junction = prev_dir.is_none() && junction[idx(nx, ny)];
                    (into_junction, turn, d % 2, d)
                });
            let Some((d, (nx, ny))) = best else { break };
            if let Some(p) = prev_dir {
                if turn_between(p, d) > max_turn_steps {
                    break;
                }
            }
            visited[idx(nx, ny)] = true;
            chain.push((nx, ny));
            prev_dir = Some(d);
            cx = nx;
            cy = ny;
            if junction[idx(nx, ny)] {
                break;
            }
        }
        let closed = loop_pass
            && chain.len() >= 4
            && {
                let (lx, ly) = chain[chain.len() - 1];
                (lx - sx).abs() <= 1 && (ly - sy).abs() <= 1
            };
        chains.push((chain, closed));
    }
    chains
}

pub fn extract_contours<T: Scalar>(img: &Image, params: &ExtractParams) -> Vec<Contour<T>> {
    let Ok(grad) = gradient_map::<T>(img) else {
        return Vec::new();
    };
    extract_contours_from(img, &grad, params)
}

/// Thinned non-maximum-suppressed edge pixels.
pub fn edge_pixels<T: Scalar>(img: &Image, params: &ExtractParams) -> crate::geometry::BitMask {
    let mut mask = crate::geometry::BitMask::new(img.width(), img.height());
    if let Ok(grad) = gradient_map::<T>(img) {
        let e = edge_map(&grad, params);
        for (i, &on) in e.on.iter().enumerate() {
            if on {
                mask.insert((i % e.w) as i64, (i / e.w) as i64);
            }
        }
    }
    mask
}

fn edge_map<T: Scalar>(grad: &GradientMap<T>, params: &ExtractParams) -> EdgeMap {
    let on = suppress_non_maxima(grad, T::lit(params.mag_threshold));
    let mut edges = EdgeMap {
        w: grad.width,
        h: grad.height,
        on,
    };
    thin_staircases(&mut edges);
    edges
}

/// Unordered pair of quantized levels one pixel to either side of an edge
/// pixel, along its gradient.
fn side_levels<T: Scalar>(img: &Image, grad: &GradientMap<T>, (x, y): (i64, i64), levels: usize) -> (usize, usize) {
    let th = grad.theta(x as usize, y as usize).as_f64();
    let (dx, dy) = (th.cos().round() as i64, th.sin().round() as i64);
    let (w, h) = (img.width() as i64, img.height() as i64);
    let at = |px: i64, py: i64| quantize(img.get(px.clamp(0, w - 1) as usize, py.clamp(0, h - 1) as usize), levels);
    let (a, b) = (at(x - dx, y - dy), at(x + dx, y + dy));
    (a.min(b), a.max(b))
}

/// Shortest run of one level pair that may split a chain.
const MIN_LEVEL_RUN: usize = 3;

/// Cuts a chain wherever the level pair across it changes for at least
/// [`MIN_LEVEL_RUN`] pixels. Shorter runs are absorbed by their predecessor.
fn split_by_levels<T: Scalar>(
    img: &Image,
    grad: &GradientMap<T>,
    chain: Vec<(i64, i64)>,
    closed: bool,
    levels: usize,
) -> Vec<(Vec<(i64, i64)>, bool)> {
    let labels: Vec<(usize, usize)> = chain.iter().map(|&p| side_levels(img, grad, p, levels)).collect();
    // runs as (start, label)
    let mut runs: Vec<(usize, (usize, usize))> = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        if runs.last().is_none_or(|r| r.1 != l) {
            runs.push((i, l));
        }
    }
    let run_len = |runs: &[(usize, (usize, usize))], k: usize| {
        runs.get(k + 1).map_or(chain.len(), |r| r.0) - runs[k].0
    };
    let mut kept: Vec<(usize, (usize, usize))> = Vec::new();
    for k in 0..runs.len() {
        let long = run_len(&runs, k) >= MIN_LEVEL_RUN;
        match kept.last() {
            None => kept.push(runs[k]),
            Some(&(_, l)) if long && l != runs[k].1 => kept.push(runs[k]),
            _ => {}
        }
    }
    // a short leading run joins the next long one
    if kept.len() > 1 && run_len(&kept, 0) < MIN_LEVEL_RUN {
        kept.remove(1);
    }
    if closed && kept.len() > 1 && kept[0].1 == kept[kept.len() - 1].1 {
        kept.remove(0);
    }
    if kept.len() <= 1 && !(closed && kept.first().is_some_and(|r| r.0 != 0)) {
        return vec![(chain, closed)];
    }
    let cuts: Vec<usize> = kept.iter().map(|r| r.0).collect();
    if closed {
        // rotate so the ring starts at a cut; the last piece wraps around
        let mut pieces = Vec::new();
        for (k, &c) in cuts.iter().enumerate() {
            let end = cuts.get(k + 1).copied().unwrap_or(cuts[0] + chain.len());
            pieces.push(((c..end).map(|i| chain[i % chain.len()]).collect(), false));
        }
        return pieces;
    }
    let mut pieces = Vec::new();
    for (k, &c) in cuts.iter().enumerate() {
        let start = if k == 0 { 0 } else { c };
        let end = cuts.get(k + 1).copied().unwrap_or(chain.len());
        pieces.push((chain[start..end].to_vec(), false));
    }
    pieces
}

/// Half-span (pixels) over which corner turns are measured.
const CORNER_SPAN: usize = 3;

/// Cuts an open chain at the sharpest point of every stretch turning by at
/// least `min_angle`.
fn split_at_corners(chain: Vec<(i64, i64)>, closed: bool, min_angle: f64) -> Vec<(Vec<(i64, i64)>, bool)> {
    let k = CORNER_SPAN;
    if closed || min_angle > std::f64::consts::PI || chain.len() < 2 * k + 1 {
        return vec![(chain, closed)];
    }
    let turn = |i: usize| {
        let (a, b, c) = (chain[i - k], chain[i], chain[i + k]);
        let (ux, uy) = ((b.0 - a.0) as f64, (b.1 - a.1) as f64);
        let (vx, vy) = ((c.0 - b.0) as f64, (c.1 - b.1) as f64);
        (ux * vy - uy * vx).atan2(ux * vx + uy * vy).abs()
    };
    let mut cuts = Vec::new();
    let mut i = k;
    while i + k < chain.len() {
        if turn(i) >= min_angle {
            let mut best = i;
            while i + k < chain.len() && turn(i) >= min_angle {
                if turn(i) > turn(best) {
                    best = i;
                }
                i += 1;
            }
            cuts.push(best);
        }
        i += 1;
    }
    if cuts.is_empty() {
        return vec![(chain, false)];
    }
    let mut pieces = Vec::with_capacity(cuts.len() + 1);
    let mut start = 0;
    for c in cuts {
        pieces.push((chain[start..=c].to_vec(), false));
        start = c + 1;
    }
    pieces.push((chain[start..].to_vec(), false));
    pieces
}

fn extract_contours_from<T: Scalar>(img: &Image, grad: &GradientMap<T>, params: &ExtractParams) -> Vec<Contour<T>> {
    let edges = edge_map(grad, params);
    let max_turn_steps = (params.max_turn / std::f64::consts::FRAC_PI_4 + 1e-9).floor() as usize;
    let min_len = T::lit(params.min_contour_length);
    let mut chains = link_chains(&edges, max_turn_steps);
    if params.split_on_level_change && params.num_levels >= 2 {
        chains = chains
            .into_iter()
            .flat_map(|(c, closed)| split_by_levels(img, grad, c, closed, params.num_levels))
            .collect();
    }
    chains = chains
        .into_iter()
        .flat_map(|(c, closed)| split_at_corners(c, closed, params.corner_angle))
        .collect();
    let mut contours: Vec<Contour<T>> = chains
        .into_iter()
        .filter(|(chain, _)| chain.len() >= 2)
        .map(|(chain, closed)| {
            let n = T::from_usize_lossy(chain.len());
            let total = chain
                .iter()
                .map(|&(x, y)| grad.mag(x as usize, y as usize))
                .fold(T::zero(), |a, b| a + b);
            Contour {
                points: chain
                    .iter()
                    .map(|&(x, y)| Point2::new(T::from_i64(x).unwrap(), T::from_i64(y).unwrap()))
                    .collect(),
                mean_strength: total / n,
                closed,
            }
        })
        .filter(|c| c.arc_length() >= min_len)
        .collect();
    // stable: equal strengths keep linking order
    contours.sort_by(|a, b| crate::scalar::cmp_scores(b.mean_strength, a.mean_strength));
    if params.duplicate_fraction <= 1.0 {
        contours = drop_duplicates(contours, params.duplicate_fraction, grad.width, grad.height);
    }
    contours
}

/// Removes contours running alongside a stronger one (double responses on
/// diagonal edges).
fn drop_duplicates<T: Scalar>(contours: Vec<Contour<T>>, fraction: f64, w: usize, h: usize) -> Vec<Contour<T>> {
    let mut near = BitMask::new(w, h);
    let mut kept = Vec::with_capacity(contours.len());
    for c in contours {
        let pix: Vec<(i64, i64)> = c
            .points
            .iter()
            .map(|p| (p.x.to_i64().unwrap_or(-1), p.y.to_i64().unwrap_or(-1)))
            .collect();
        let hits = pix.iter().filter(|&&(x, y)| near.contains(x, y)).count();
        if (hits as f64) < fraction * pix.len() as f64 {
            for &(x, y) in &pix {
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        near.insert(x + dx, y + dy);
                    }
                }
            }
            kept.push(c);
        }
    }
    kept
}

/// Mean of the clipped `(2r+1)²` box centred on `(x, y)`.
fn box_mean(img: &Image, x: usize, y: usize, r: usize) -> f64 {
    let (w, h) = img.dims();
    let (x0, x1) = (x.saturating_sub(r), (x + r).min(w - 1));
    let (y0, y1) = (y.saturating_sub(r), (y + r).min(h - 1));
    let mut s = 0u64;
    for yy in y0..=y1 {
        for xx in x0..=x1 {
            s += img.get(xx, yy) as u64;
        }
    }
    s as f64 / ((x1 - x0 + 1) * (y1 - y0 + 1)) as f64
}

/// Isotropic centre-surround response `|mean₃ₓ₃ − mean₇ₓ₇|`.
pub fn blob_response(img: &Image) -> Vec<f64> {
    let (w, h) = img.dims();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            out.push((box_mean(img, x, y, 1) - box_mean(img, x, y, 3)).abs());
        }
    }
    out
}

pub fn extract_points<T: Scalar>(img: &Image, contours: &[Contour<T>], params: &ExtractParams) -> Vec<PointFeature<T>> {
    let (w, h) = img.dims();
    let mut out = Vec::new();
    let grad = gradient_map::<T>(img).ok();
    let strength_at = |p: Point2<T>| -> T {
        match (&grad, p.to_pixel((w, h))) {
            (Some(g), Some(px)) => g.mag(px.x as usize, px.y as usize),
            _ => T::zero(),
        }
    };
    for c in contours.iter().filter(|c| !c.closed) {
        for p in [c.points[0], c.points[c.points.len() - 1]] {
            out.push(PointFeature {
                position: p,
                kind: PointKind::ContourEndpoint,
                strength: strength_at(p),
            });
        }
    }
    // junctions: chain pixels with three or more chain neighbours
    let mut chain_map = EdgeMap {
        w,
        h,
        on: vec![false; w * h],
    };
    for c in contours {
        for p in &c.points {
            if let Some(px) = p.to_pixel((w, h)) {
                chain_map.on[px.y as usize * w + px.x as usize] = true;
            }
        }
    }
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            if chain_map.get(x, y) && chain_map.degree(x, y) >= 3 && chain_map.neighbour_groups(x, y) >= 3 {
                let pos = Point2::new(T::from_i64(x).unwrap(), T::from_i64(y).unwrap());
                out.push(PointFeature {
                    position: pos,
                    kind: PointKind::Junction,
                    strength: strength_at(pos),
                });
            }
        }
    }
    // blob peaks: strict maximum against earlier raster neighbours,
    // non-strict against later ones, refined by the response centroid
    let resp = blob_response(img);
    let at = |x: i64, y: i64| -> f64 {
        if x < 0 || y < 0 || x as usize >= w || y as usize >= h {
            f64::NEG_INFINITY
        } else {
            resp[y as usize * w + x as usize]
        }
    };
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let r = at(x, y);
            if r < params.blob_threshold {
                continue;
            }
            let is_peak = DIRS.iter().all(|&(dx, dy)| {
                let q = at(x + dx, y + dy);
                let earlier = dy < 0 || (dy == 0 && dx < 0);
                if earlier {
                    r > q
                } else {
                    r >= q
                }
            });
            if !is_peak {
                continue;
            }
            let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let q = at(x + dx, y + dy);
                    if q.is_finite() {
                        sx += q * (x + dx) as f64;
                        sy += q * (y + dy) as f64;
                        sw += q;
                    }
                }
            }
            out.push(PointFeature {
                position: Point2::new(T::lit(sx / sw), T::lit(sy / sw)),
                kind: PointKind::GradientPeak,
                strength: T::lit(r),
            });
        }
    }
    out
}

/// Quantization bin of an intensity for `levels` equal-width bins.
#[inline]
pub fn quantize(v: u8, levels: usize) -> usize {
    (v as usize * levels) / 256
}

/// 4-connected components of each quantization bin, seeded in raster order,
/// as `(bin, pixels)` with pixels row-major sorted.
pub fn quantized_components(img: &Image, levels: usize) -> Vec<(usize, Vec<Pixel>)> {
    let (w, h) = img.dims();
    let bins: Vec<usize> = img.data().iter().map(|&v| quantize(v, levels)).collect();
    let mut label = vec![usize::MAX; w * h];
    let mut comps = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if label[start] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let bin = bins[start];
        label[start] = id;
        queue.push_back(start);
        let mut pixels = Vec::new();
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            pixels.push(Pixel::new(x as u32, y as u32));
            let mut visit = |j: usize| {
                if label[j] == usize::MAX && bins[j] == bin {
                    label[j] = id;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        pixels.sort_unstable();
        comps.push((bin, pixels));
    }
    comps
}

pub fn extract_regions<T: Scalar>(img: &Image, params: &ExtractParams) -> Vec<Region<T>> {
    let levels = params.num_levels.max(2);
    let mut regions: Vec<Region<T>> = quantized_components(img, levels)
        .into_iter()
        .filter(|(_, px)| px.len() >= params.min_region_area)
        .map(|(_, px)| Region::from_pixels(px, img.dims(), Some(img)))
        .collect();
    regions.sort_by(|a, b| b.area.cmp(&a.area));
    regions
}

/// Runs all three extractors.
pub fn extract_primitives<T: Scalar>(img: &Image, params: &ExtractParams) -> PrimitiveSet<T> {
    let contours = extract_contours::<T>(img, params);
    let points = extract_points(img, &contours, params);
    let regions = extract_regions(img, params);
    PrimitiveSet {
        points,
        contours,
        regions,
        source_dims: img.dims(),
    }
}
