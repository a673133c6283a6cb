//! Sliding-window detection of minimal configurations in larger images and
//! combination of the per-window interpretations.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::SearchError;
use crate::evaluation::rasterize;
use crate::geometry::{BitMask, Pixel, Point2};
use crate::image::{reduced_len, Image};
use crate::model::{Assignment, Interpretation, InterpretationModel};
use crate::primitives::{ExtractParams, Primitive, PointFeature, Contour, Region};
use crate::scalar::{cmp_scores, Scalar};
use crate::search::{build_candidates, interpret_beam_indexed, SearchParams};
use crate::synthgen::{box_iou, WindowBox};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanParams {
    /// Side of the square window, in scaled-image pixels.
    pub window: usize,
    pub stride: usize,
    /// Resize factors applied to the whole image.
    pub scales: Vec<f64>,
    /// Detections overlapping a kept one by more than this are suppressed.
    pub nms_iou: f64,
    /// Claims whose masks overlap at least this much are merged.
    pub merge_iou: f64,
    /// Smallest accepted side of the interpreted configuration's bounding
    /// box, as a fraction of the window side. Smaller configurations are left
    /// to finer scales.
    pub min_extent: f64,
    /// Configurations reaching closer than this many pixels to the window
    /// border are treated as truncated and rejected.
    pub min_margin: usize,
    /// How many times each positive window is re-run centred on its
    /// configuration before suppression; 0 disables.
    pub recenter_steps: usize,
    /// Detections whose configurations (union of claimed masks in image
    /// coordinates) overlap a kept one at least this much are suppressed too.
    /// Values above 1 disable the check.
    pub configuration_iou: f64,
}

impl Default for ScanParams {
    fn default() -> Self {
        Self {
            window: 30,
            stride: 6,
            scales: vec![1.0, 0.75, 0.5],
            nms_iou: 0.5,
            merge_iou: 0.5,
            min_extent: 0.55,
            min_margin: 1,
            recenter_steps: 3,
            configuration_iou: 0.5,
        }
    }
}

/// Placement of a window inside one scaled copy of the image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowFrame {
    /// Top-left corner in the scaled image.
    pub origin: (usize, usize),
    /// Window size in the scaled image.
    pub size: (usize, usize),
    /// Full-image pixels per scaled pixel, per axis.
    pub ratio: (f64, f64),
    /// Full image dimensions.
    pub full: (usize, usize),
}

impl WindowFrame {
    /// Frame at scale 1.
    pub fn identity(origin: (usize, usize), size: (usize, usize), full: (usize, usize)) -> Self {
        Self {
            origin,
            size,
            ratio: (1.0, 1.0),
            full,
        }
    }

    fn unit(&self) -> bool {
        self.ratio == (1.0, 1.0)
    }

    /// Box covered in full-image pixels, clipped to the image.
    pub fn full_box(&self) -> WindowBox {
        let (u, v) = self.origin;
        let (n, m) = self.size;
        let x0 = ((u as f64) * self.ratio.0).floor() as usize;
        let y0 = ((v as f64) * self.ratio.1).floor() as usize;
        let x1 = (((u + n) as f64) * self.ratio.0).ceil().min(self.full.0 as f64) as usize;
        let y1 = (((v + m) as f64) * self.ratio.1).ceil().min(self.full.1 as f64) as usize;
        (x0.min(self.full.0 - 1), y0.min(self.full.1 - 1), (x1 - x0).max(1), (y1 - y0).max(1))
    }

    fn point_to_global<T: Scalar>(&self, p: Point2<T>) -> Point2<T> {
        let f = |c: T, o: usize, r: f64| T::lit((o as f64 + c.as_f64() + 0.5) * r - 0.5);
        Point2::new(f(p.x, self.origin.0, self.ratio.0), f(p.y, self.origin.1, self.ratio.1))
    }

    fn point_to_local<T: Scalar>(&self, p: Point2<T>) -> Point2<T> {
        let f = |c: T, o: usize, r: f64| T::lit((c.as_f64() + 0.5) / r - 0.5 - o as f64);
        Point2::new(f(p.x, self.origin.0, self.ratio.0), f(p.y, self.origin.1, self.ratio.1))
    }

    /// Maps window-local geometry into full-image coordinates. At scale 1 this
    /// is a translation; otherwise points are mapped through pixel centres and
    /// region masks are resampled at full-image pixel centres.
    pub fn to_global<T: Scalar>(&self, p: &Primitive<T>) -> Primitive<T> {
        if self.unit() {
            return p.translated(self.origin.0 as i64, self.origin.1 as i64, self.full);
        }
        match p {
            Primitive::Point(pt) => Primitive::Point(PointFeature {
                position: self.point_to_global(pt.position),
                ..pt.clone()
            }),
            Primitive::Contour(c) => Primitive::Contour(Contour {
                points: c.points.iter().map(|&q| self.point_to_global(q)).collect(),
                ..c.clone()
            }),
            Primitive::Region(r) => {
                let local = BitMask::from_pixels(self.size.0, self.size.1, &r.pixels);
                let (bx, by, bw, bh) = self.full_box();
                let mut px = Vec::new();
                for y in by..by + bh {
                    for x in bx..bx + bw {
                        let sx = ((x as f64 + 0.5) / self.ratio.0).floor() as i64 - self.origin.0 as i64;
                        let sy = ((y as f64 + 0.5) / self.ratio.1).floor() as i64 - self.origin.1 as i64;
                        if local.contains(sx, sy) {
                            px.push(Pixel::new(x as u32, y as u32));
                        }
                    }
                }
                let mut out = Region::from_pixels(px, self.full, None);
                out.mean_intensity = r.mean_intensity;
                Primitive::Region(out)
            }
        }
    }

    /// Inverse of [`WindowFrame::to_global`]; exact for integer geometry at
    /// scale 1.
    pub fn to_local<T: Scalar>(&self, p: &Primitive<T>) -> Primitive<T> {
        if self.unit() {
            return p.translated(-(self.origin.0 as i64), -(self.origin.1 as i64), self.size);
        }
        match p {
            Primitive::Point(pt) => Primitive::Point(PointFeature {
                position: self.point_to_local(pt.position),
                ..pt.clone()
            }),
            Primitive::Contour(c) => Primitive::Contour(Contour {
                points: c.points.iter().map(|&q| self.point_to_local(q)).collect(),
                ..c.clone()
            }),
            Primitive::Region(r) => {
                let global = BitMask::from_pixels(self.full.0, self.full.1, &r.pixels);
                let mut px = Vec::new();
                for y in 0..self.size.1 {
                    for x in 0..self.size.0 {
                        let gx = (((self.origin.0 + x) as f64 + 0.5) * self.ratio.0).floor() as i64;
                        let gy = (((self.origin.1 + y) as f64 + 0.5) * self.ratio.1).floor() as i64;
                        if global.contains(gx, gy) {
                            px.push(Pixel::new(x as u32, y as u32));
                        }
                    }
                }
                let mut out = Region::from_pixels(px, self.size, None);
                out.mean_intensity = r.mean_intensity;
                Primitive::Region(out)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct DetectedConfiguration<T> {
    /// Index into the model list given to [`scan`].
    pub model: usize,
    /// Window in full-image coordinates.
    pub window: WindowBox,
    pub scale: f64,
    pub frame: WindowFrame,
    /// Window-local interpretation.
    pub interpretation: Interpretation<T>,
    pub score: T,
    /// Score before [`refine`], if refined.
    pub original_score: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct ScanResult<T> {
    pub detections: Vec<DetectedConfiguration<T>>,
    pub windows_examined: usize,
    pub windows_interpretable: usize,
    /// Set when the image is smaller than the window at every scale.
    pub too_small: bool,
}

fn interpret_window<T: Scalar>(
    model: &InterpretationModel<T>,
    img: &Image,
    extract: &ExtractParams,
    search: &SearchParams,
) -> Result<Interpretation<T>, SearchError> {
    let prims = crate::primitives::extract_primitives::<T>(img, extract);
    let table = build_candidates(model, &prims, search.k)?;
    interpret_beam_indexed(model, &table, search.beam_width).map(|o| o.interpretation)
}

/// Greedy non-maximum suppression: highest score first (earlier index on
/// ties), dropping anything with window IoU above `iou` to a kept detection.
pub fn non_maximum_suppression<T: Scalar>(dets: Vec<DetectedConfiguration<T>>, iou: f64) -> Vec<DetectedConfiguration<T>> {
    suppress(dets, |a, b| box_iou(a.window, b.window) > iou)
}

/// Union of the claimed masks of a detection, in image coordinates.
pub fn configuration_mask<T: Scalar>(det: &DetectedConfiguration<T>) -> BitMask {
    let (w, h) = det.frame.full;
    let mut mask = BitMask::new(w, h);
    for c in detection_claims(det).values() {
        mask.union_with(&BitMask::from_pixels(w, h, &c.mask));
    }
    mask
}

/// Suppression by window IoU above `window_iou` or configuration-mask IoU of
/// at least `configuration_iou`.
pub fn suppress_duplicates<T: Scalar>(
    dets: Vec<DetectedConfiguration<T>>,
    window_iou: f64,
    configuration_iou: f64,
) -> Vec<DetectedConfiguration<T>> {
    if configuration_iou > 1.0 {
        return non_maximum_suppression(dets, window_iou);
    }
    let masks: Vec<BitMask> = dets.iter().map(configuration_mask).collect();
    let keyed: Vec<(usize, DetectedConfiguration<T>)> = dets.into_iter().enumerate().collect();
    suppress(keyed, |a, b| {
        box_iou(a.1.window, b.1.window) > window_iou || masks[a.0].iou(&masks[b.0]) >= configuration_iou
    })
    .into_iter()
    .map(|(_, d)| d)
    .collect()
}

trait Scored<T> {
    fn score(&self) -> T;
}

impl<T: Scalar> Scored<T> for DetectedConfiguration<T> {
    fn score(&self) -> T {
        self.score
    }
}

impl<T: Scalar> Scored<T> for (usize, DetectedConfiguration<T>) {
    fn score(&self) -> T {
        self.1.score
    }
}

fn suppress<T: Scalar, D: Scored<T>>(dets: Vec<D>, clash: impl Fn(&D, &D) -> bool) -> Vec<D> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| cmp_scores(dets[b].score(), dets[a].score()).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        if kept.iter().all(|&k| !clash(&dets[k], &dets[i])) {
            kept.push(i);
        }
    }
    let mut slots: Vec<Option<D>> = dets.into_iter().map(Some).collect();
    kept.into_iter().map(|i| slots[i].take().expect("kept once")).collect()
}

/// Bounding box `(x0, y0, x1, y1)` (inclusive) of the rasterized assigned
/// primitives, in window-local pixels.
pub fn configuration_extent<T: Scalar>(interp: &Interpretation<T>, size: (usize, usize)) -> Option<(u32, u32, u32, u32)> {
    let mut ext: Option<(u32, u32, u32, u32)> = None;
    for p in interp.assignment.values().flatten() {
        for px in rasterize(p, size).pixels() {
            ext = Some(match ext {
                None => (px.x, px.y, px.x, px.y),
                Some((a, b, c, d)) => (a.min(px.x), b.min(px.y), c.max(px.x), d.max(px.y)),
            });
        }
    }
    ext
}

struct ScaledImage {
    scale: f64,
    image: Image,
}

fn detect_at<T: Scalar>(
    model: &InterpretationModel<T>,
    mi: usize,
    level: &ScaledImage,
    frame: WindowFrame,
    extract: &ExtractParams,
    search: &SearchParams,
) -> Option<DetectedConfiguration<T>> {
    let crop = level.image.crop(frame.origin.0, frame.origin.1, frame.size.0, frame.size.1);
    let interp = interpret_window(model, &crop, extract, search).ok()?;
    Some(DetectedConfiguration {
        model: mi,
        window: frame.full_box(),
        scale: level.scale,
        frame,
        score: interp.score,
        interpretation: interp,
        original_score: None,
    })
}

fn accepted<T: Scalar>(model: &InterpretationModel<T>, d: &DetectedConfiguration<T>, params: &ScanParams) -> bool {
    if !model.is_positive(d.score) {
        return false;
    }
    let Some((x0, y0, x1, y1)) = configuration_extent(&d.interpretation, d.frame.size) else {
        return false;
    };
    let (w, h) = d.frame.size;
    let m = params.min_margin;
    let inside = (x0 as usize) >= m && (y0 as usize) >= m && (x1 as usize) + m < w && (y1 as usize) + m < h;
    let side = (x1 - x0 + 1).max(y1 - y0 + 1) as f64;
    inside && side >= params.min_extent * w.max(h) as f64
}

/// Same-scale window centred on the detection's configuration, if different.
fn centred_frame<T: Scalar>(d: &DetectedConfiguration<T>, level: &ScaledImage) -> Option<WindowFrame> {
    let (x0, y0, x1, y1) = configuration_extent(&d.interpretation, d.frame.size)?;
    let shift = |lo: u32, hi: u32, origin: usize, n: usize, limit: usize| {
        let c2 = (lo + hi) as i64 - (n as i64 - 1);
        // round half away from zero of c2 / 2
        let delta = if c2 >= 0 { (c2 + 1) / 2 } else { -((-c2 + 1) / 2) };
        (origin as i64 + delta).clamp(0, (limit - n) as i64) as usize
    };
    let (w, h) = level.image.dims();
    let origin = (
        shift(x0, x1, d.frame.origin.0, d.frame.size.0, w),
        shift(y0, y1, d.frame.origin.1, d.frame.size.1, h),
    );
    (origin != d.frame.origin).then_some(WindowFrame { origin, ..d.frame })
}

/// Slides a window over each scaled copy of `image` and interprets every
/// window with every model. A window is kept when the model classifies it as
/// positive, the configuration spans at least `min_extent` of the window and
/// stays `min_margin` pixels clear of its border.
/// Positive windows are first re-interpreted centred on their configuration,
/// up to `recenter_steps` times while the result stays positive; the last
/// accepted window of that chain is kept.
/// Suppression is applied per model. Output is ordered by model, then score.
pub fn scan<T: Scalar>(
    image: &Image,
    models: &[InterpretationModel<T>],
    params: &ScanParams,
    extract: &ExtractParams,
    search: &SearchParams,
) -> ScanResult<T> {
    let (w, h) = image.dims();
    let n = params.window;
    let stride = params.stride.max(1);
    let mut jobs = Vec::new();
    let mut levels = Vec::new();
    for &s in &params.scales {
        if !(s > 0.0) {
            continue;
        }
        let (sw, sh) = (reduced_len(w, s).max(1), reduced_len(h, s).max(1));
        if sw < n || sh < n {
            continue;
        }
        let img = if (sw, sh) == (w, h) { image.clone() } else { image.resample_area(sw, sh) };
        let ratio = (w as f64 / sw as f64, h as f64 / sh as f64);
        for v in (0..=sh - n).step_by(stride) {
            for u in (0..=sw - n).step_by(stride) {
                let frame = WindowFrame {
                    origin: (u, v),
                    size: (n, n),
                    ratio,
                    full: (w, h),
                };
                jobs.push((levels.len(), frame));
            }
        }
        levels.push(ScaledImage { scale: s, image: img });
    }
    let too_small = levels.is_empty();
    let results: Vec<Vec<Option<DetectedConfiguration<T>>>> = jobs
        .par_iter()
        .map(|&(li, frame)| {
            models
                .iter()
                .enumerate()
                .map(|(mi, model)| detect_at(model, mi, &levels[li], frame, extract, search))
                .collect()
        })
        .collect();
    let windows_interpretable = results.iter().filter(|r| r.iter().any(Option::is_some)).count();
    let mut detections = Vec::new();
    for (mi, model) in models.iter().enumerate() {
        let positives: Vec<(usize, DetectedConfiguration<T>)> = results
            .iter()
            .zip(&jobs)
            .filter_map(|(r, &(li, _))| r[mi].as_ref().map(|d| (li, d)))
            .filter(|(_, d)| model.is_positive(d.score))
            .map(|(li, d)| (li, d.clone()))
            .collect();
        let positives: Vec<DetectedConfiguration<T>> = positives
            .into_par_iter()
            .filter_map(|(li, mut d)| {
                let mut kept = accepted(model, &d, params).then(|| d.clone());
                for _ in 0..params.recenter_steps {
                    let next = centred_frame(&d, &levels[li])
                        .and_then(|f| detect_at(model, mi, &levels[li], f, extract, search))
                        .filter(|c| model.is_positive(c.score));
                    match next {
                        Some(c) => d = c,
                        None => break,
                    }
                    if accepted(model, &d, params) {
                        kept = Some(d.clone());
                    }
                }
                kept
            })
            .collect();
        detections.extend(suppress_duplicates(positives, params.nms_iou, params.configuration_iou));
    }
    ScanResult {
        detections,
        windows_examined: jobs.len(),
        windows_interpretable,
        too_small,
    }
}

/// Re-interprets the detection on the full-resolution pixels of its window.
/// The refined score replaces the original, which is kept in
/// `original_score`. If the full-resolution window cannot be interpreted the
/// detection is returned unchanged.
pub fn refine<T: Scalar>(
    det: &DetectedConfiguration<T>,
    model: &InterpretationModel<T>,
    full: &Image,
    extract: &ExtractParams,
    search: &SearchParams,
) -> DetectedConfiguration<T> {
    let (x, y, w, h) = det.window;
    let crop = full.crop(x, y, w, h);
    match interpret_window(model, &crop, extract, search) {
        Ok(interp) => DetectedConfiguration {
            model: det.model,
            window: det.window,
            scale: 1.0,
            frame: WindowFrame::identity((x, y), (w, h), full.dims()),
            score: interp.score,
            interpretation: interp,
            original_score: Some(det.original_score.unwrap_or(det.score)),
        },
        Err(_) => det.clone(),
    }
}

impl<T: Scalar> DetectedConfiguration<T> {
    /// The assignment mapped into full-image coordinates.
    pub fn global_assignment(&self) -> Assignment<T> {
        self.interpretation
            .assignment
            .iter()
            .map(|(k, p)| (k.clone(), p.as_ref().map(|p| self.frame.to_global(p))))
            .collect()
    }
}

/// One component's geometry in full-image coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct GlobalClaim<T> {
    /// Geometry of the highest-scoring contributor.
    pub primitive: Primitive<T>,
    /// Rasterized mask; the union over merged contributors.
    pub mask: Vec<Pixel>,
    pub confidence: T,
    /// Windows of every contributing detection.
    pub windows: Vec<WindowBox>,
}

impl<T: Scalar> GlobalClaim<T> {
    fn overlaps(&self, o: &GlobalClaim<T>) -> bool {
        self.windows.iter().any(|&a| o.windows.iter().any(|&b| box_iou(a, b) > 0.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct GlobalInterpretation<T> {
    pub dims: (usize, usize),
    /// Claims per component name, highest confidence first.
    pub components: BTreeMap<String, Vec<GlobalClaim<T>>>,
    /// Union of contributing windows, sorted.
    pub windows: Vec<WindowBox>,
}

impl<T: Scalar> GlobalInterpretation<T> {
    pub fn claim_count(&self) -> usize {
        self.components.values().map(Vec::len).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Claims of one detection, mapped to full-image coordinates.
pub fn detection_claims<T: Scalar>(det: &DetectedConfiguration<T>) -> BTreeMap<String, GlobalClaim<T>> {
    let full = det.frame.full;
    det.interpretation
        .assignment
        .iter()
        .filter_map(|(name, p)| {
            let g = det.frame.to_global(p.as_ref()?);
            let mask = rasterize(&g, full).pixels();
            Some((
                name.clone(),
                GlobalClaim {
                    primitive: g,
                    mask,
                    confidence: det.score,
                    windows: vec![det.window],
                },
            ))
        })
        .collect()
}

fn merge_pass<T: Scalar>(claims: Vec<GlobalClaim<T>>, dims: (usize, usize), merge_iou: f64) -> (Vec<GlobalClaim<T>>, bool) {
    let mut order: Vec<usize> = (0..claims.len()).collect();
    order.sort_by(|&a, &b| cmp_scores(claims[b].confidence, claims[a].confidence).then(a.cmp(&b)));
    let mut kept: Vec<(GlobalClaim<T>, BitMask)> = Vec::new();
    let mut changed = false;
    for i in order {
        let c = &claims[i];
        let mask = BitMask::from_pixels(dims.0, dims.1, &c.mask);
        let mut best: Option<(usize, f64)> = None;
        let mut conflict = false;
        for (k, (kc, km)) in kept.iter().enumerate() {
            if !kc.overlaps(c) || km.intersection_count(&mask) == 0 {
                continue;
            }
            conflict = true;
            let iou = km.iou(&mask);
            if iou >= merge_iou && best.is_none_or(|(_, b)| iou > b) {
                best = Some((k, iou));
            }
        }
        match best {
            Some((k, _)) => {
                let (kc, km) = &mut kept[k];
                km.union_with(&mask);
                kc.mask = km.pixels();
                kc.windows.extend(c.windows.iter().copied());
                kc.windows.sort_unstable();
                kc.windows.dedup();
                changed = true;
            }
            None if conflict => changed = true,
            None => kept.push((c.clone(), mask)),
        }
    }
    (kept.into_iter().map(|(c, _)| c).collect(), changed)
}

/// Combines claims component by component. Two claims conflict when their
/// windows overlap and their masks share a pixel; conflicting claims merge
/// when their masks overlap by at least `merge_iou` (union mask, max
/// confidence), otherwise the lower-confidence claim is dropped. Passes repeat
/// until nothing changes, so the result is a fixed point.
pub fn combine_claims<T: Scalar>(
    claims: BTreeMap<String, Vec<GlobalClaim<T>>>,
    dims: (usize, usize),
    merge_iou: f64,
) -> GlobalInterpretation<T> {
    let mut components = BTreeMap::new();
    let mut windows = Vec::new();
    for (name, mut list) in claims {
        loop {
            let (next, changed) = merge_pass(list, dims, merge_iou);
            list = next;
            if !changed {
                break;
            }
        }
        for c in &list {
            windows.extend(c.windows.iter().copied());
        }
        components.insert(name, list);
    }
    windows.sort_unstable();
    windows.dedup();
    GlobalInterpretation {
        dims,
        components,
        windows,
    }
}

/// Maps every detection into full-image coordinates and combines them.
pub fn combine<T: Scalar>(dets: &[DetectedConfiguration<T>], dims: (usize, usize), merge_iou: f64) -> GlobalInterpretation<T> {
    let mut claims: BTreeMap<String, Vec<GlobalClaim<T>>> = BTreeMap::new();
    for d in dets {
        for (name, c) in detection_claims(d) {
            claims.entry(name).or_default().push(c);
        }
    }
    combine_claims(claims, dims, merge_iou)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn region(px: &[(u32, u32)], frame: (usize, usize)) -> Primitive<f64> {
        Primitive::Region(Region::from_pixels(px.iter().map(|&(x, y)| Pixel::new(x, y)).collect(), frame, None))
    }

    #[test]
    fn unit_frame_round_trip_is_exact() {
        let f = WindowFrame::identity((7, 11), (30, 30), (120, 120));
        let r = region(&[(0, 0), (3, 4), (29, 29)], (30, 30));
        assert_eq!(f.to_local(&f.to_global(&r)), r);
        let c = Primitive::Contour(Contour {
            points: vec![Point2::new(1.0, 2.0), Point2::new(5.0, 9.0)],
            mean_strength: 3.0,
            closed: false,
        });
        assert_eq!(f.to_local(&f.to_global(&c)), c);
        assert_eq!(f.full_box(), (7, 11, 30, 30));
    }

    #[test]
    fn half_scale_maps_pixels_to_blocks() {
        let f = WindowFrame {
            origin: (2, 3),
            size: (30, 30),
            ratio: (2.0, 2.0),
            full: (120, 120),
        };
        assert_eq!(f.full_box(), (4, 6, 60, 60));
        let g = f.to_global(&region(&[(0, 0)], (30, 30)));
        let px = g.as_region().unwrap().pixels.clone();
        assert_eq!(px, vec![Pixel::new(4, 6), Pixel::new(5, 6), Pixel::new(4, 7), Pixel::new(5, 7)]);
        assert_eq!(f.to_local(&g), region(&[(0, 0)], (30, 30)));
        let p: Point2<f64> = Point2::new(3.0, 4.0);
        let q = f.point_to_local(f.point_to_global(p));
        assert!((q.x - p.x).abs() < 1e-12 && (q.y - p.y).abs() < 1e-12);
    }

    fn claim(px: &[(u32, u32)], conf: f64, window: WindowBox) -> GlobalClaim<f64> {
        let prim = region(px, (40, 40));
        GlobalClaim {
            mask: rasterize(&prim, (40, 40)).pixels(),
            primitive: prim,
            confidence: conf,
            windows: vec![window],
        }
    }

    fn square(x0: u32, y0: u32, n: u32) -> Vec<(u32, u32)> {
        (y0..y0 + n).flat_map(|y| (x0..x0 + n).map(move |x| (x, y))).collect()
    }

    #[test]
    fn overlapping_claims_merge_with_max_confidence() {
        // 10x10 squares shifted by one column: IoU 90/110
        let a = claim(&square(5, 5, 10), 2.0, (0, 0, 30, 30));
        let b = claim(&square(6, 5, 10), 3.0, (5, 0, 30, 30));
        let g = combine_claims(BTreeMap::from([("t".to_string(), vec![a, b])]), (40, 40), 0.5);
        let list = &g.components["t"];
        assert_eq!(list.len(), 1);
        assert_eq!(list[0].confidence, 3.0);
        assert_eq!(list[0].mask.len(), 110);
        assert_eq!(list[0].windows.len(), 2);
    }

    #[test]
    fn conflicting_claims_keep_higher_score() {
        // IoU 40/160
        let a = claim(&square(0, 0, 10), 2.0, (0, 0, 30, 30));
        let b = claim(&square(6, 0, 10), 3.0, (5, 0, 30, 30));
        let g = combine_claims(BTreeMap::from([("t".to_string(), vec![a, b.clone()])]), (40, 40), 0.5);
        assert_eq!(g.components["t"], vec![b]);
    }

    #[test]
    fn disjoint_masks_in_overlapping_windows_pass_through() {
        let a = claim(&square(0, 0, 5), 2.0, (0, 0, 30, 30));
        let b = claim(&square(20, 20, 5), 3.0, (5, 0, 30, 30));
        let g = combine_claims(BTreeMap::from([("t".to_string(), vec![a, b])]), (40, 40), 0.5);
        assert_eq!(g.components["t"].len(), 2);
    }

    #[test]
    fn claims_from_disjoint_windows_pass_through() {
        let a = claim(&square(0, 0, 5), 2.0, (0, 0, 10, 10));
        let b = claim(&square(0, 0, 5), 3.0, (20, 20, 10, 10));
        let g = combine_claims(BTreeMap::from([("t".to_string(), vec![a, b])]), (40, 40), 0.5);
        assert_eq!(g.components["t"].len(), 2);
        assert_eq!(g.components["t"][0].confidence, 3.0);
    }

    #[test]
    fn combine_is_idempotent() {
        let claims = vec![
            claim(&square(5, 5, 10), 2.0, (0, 0, 30, 30)),
            claim(&square(6, 5, 10), 3.0, (5, 0, 30, 30)),
            claim(&square(14, 5, 10), 2.5, (9, 0, 30, 30)),
            claim(&square(30, 30, 5), 1.0, (20, 20, 20, 20)),
        ];
        let once = combine_claims(BTreeMap::from([("t".to_string(), claims)]), (40, 40), 0.5);
        let twice = combine_claims(once.components.clone(), (40, 40), 0.5);
        assert_eq!(once, twice);
    }
}
