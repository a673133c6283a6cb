//! Seeded "interaction glyphs": two torso blobs, an arm band reaching from
//! torso-1 toward torso-2, a palm at the arm's end and a dark stroke along
//! torso-2's far side. Positives have the palm touching torso-2.
//!
//! Randomness comes from ChaCha20 seeded with the sample seed, so corpora are
//! reproducible across platforms.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::SynthError;
use crate::geometry::{Pixel, Point2};
use crate::image::Image;
use crate::model::{hug, Assignment};
use crate::primitives::{Contour, Primitive, Region};
use crate::scalar::Scalar;

pub const GLYPH_SIZE: usize = 30;
pub const MIN_GLYPH_SIZE: usize = 24;
pub const BACKGROUND: u8 = 224;
pub const TORSO_LEVEL: u8 = 96;
pub const STROKE_LEVEL: u8 = 32;
pub const PALM_LEVEL: u8 = 160;
pub const NOISE_SIGMA: f64 = 4.0;
/// Smallest palm-to-torso gap for negatives.
pub const NEGATIVE_GAP: f64 = 4.0;
const PLACEMENT_ATTEMPTS: usize = 1000;
/// Visible arm length between torso-1 and the palm, in 30-pixel glyph units.
const MIN_ARM_LENGTH: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    /// Alternating labels, positive first.
    pub fn alternating(i: usize) -> Self {
        if i % 2 == 0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    pub rx: f64,
    pub ry: f64,
}

impl Ellipse {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let u = (x - self.cx) / self.rx;
        let v = (y - self.cy) / self.ry;
        u * u + v * v <= 1.0
    }

    fn at(&self, angle: f64) -> (f64, f64) {
        (self.cx + self.rx * angle.cos(), self.cy + self.ry * angle.sin())
    }

    /// Unit outward normal at parameter `angle`.
    fn normal(&self, angle: f64) -> (f64, f64) {
        let (nx, ny) = (angle.cos() / self.rx, angle.sin() / self.ry);
        let n = nx.hypot(ny);
        (nx / n, ny / n)
    }
}

/// Every parameter drawn for one glyph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub torso_1: Ellipse,
    pub torso_2: Ellipse,
    pub palm_center: (f64, f64),
    pub palm_radius: f64,
    /// Where the arm leaves torso-1.
    pub arm_start: (f64, f64),
    pub arm_half_width: f64,
    /// Angle on torso-2 nearest the palm (radians, image axes).
    pub contact_angle: f64,
    pub gap: f64,
    pub levels: Levels,
    pub noise_sigma: f64,
    pub attempts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Levels {
    pub background: u8,
    pub torso: u8,
    pub stroke: u8,
    pub palm: u8,
}

impl Default for Levels {
    fn default() -> Self {
        Self {
            background: BACKGROUND,
            torso: TORSO_LEVEL,
            stroke: STROKE_LEVEL,
            palm: PALM_LEVEL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlyphSample<T> {
    pub image: Image,
    pub gold: Assignment<T>,
    pub label: Label,
    pub seed: u64,
    pub placement: Placement,
}

impl<T: Scalar> GlyphSample<T> {
    pub fn dims(&self) -> (usize, usize) {
        self.image.dims()
    }

    pub fn gold_region(&self, name: &str) -> Option<&Region<T>> {
        self.gold.get(name)?.as_ref()?.as_region()
    }
}

fn pixels_where(dims: (usize, usize), f: impl Fn(f64, f64) -> bool) -> Vec<Pixel> {
    let mut out = Vec::new();
    for y in 0..dims.1 {
        for x in 0..dims.0 {
            if f(x as f64, y as f64) {
                out.push(Pixel::new(x as u32, y as u32));
            }
        }
    }
    out
}

fn seg_dist(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    (p.0 - a.0 - t * dx).hypot(p.1 - a.1 - t * dy)
}

/// Smallest Euclidean distance between two pixel sets.
pub fn mask_distance(a: &[Pixel], b: &[Pixel]) -> f64 {
    let mut best = u64::MAX;
    for p in a {
        for q in b {
            best = best.min(p.dist2(*q));
        }
    }
    (best as f64).sqrt()
}

fn sample_points(a: (f64, f64), b: (f64, f64), step: f64) -> Vec<(f64, f64)> {
    let len = (b.0 - a.0).hypot(b.1 - a.1);
    let n = (len / step).ceil().max(1.0) as usize;
    (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1))
        })
        .collect()
}

struct Layers {
    torso_1: Vec<Pixel>,
    torso_2: Vec<Pixel>,
    back: Vec<Pixel>,
    /// Second stroke layer outside `back`; painted but not part of the gold.
    back_outer: Vec<Pixel>,
    arm: Vec<Pixel>,
    palm: Vec<Pixel>,
}

fn draw_layers(p: &Placement, dims: (usize, usize)) -> Layers {
    let in_palm = |x: f64, y: f64| (x - p.palm_center.0).hypot(y - p.palm_center.1) <= p.palm_radius;
    let t1 = p.torso_1;
    let t2 = p.torso_2;
    let in_arm = |x: f64, y: f64| seg_dist((x, y), p.arm_start, p.palm_center) <= p.arm_half_width;
    let palm = pixels_where(dims, in_palm);
    let torso_2 = pixels_where(dims, |x, y| t2.contains(x, y) && !in_palm(x, y));
    let torso_1 = pixels_where(dims, |x, y| t1.contains(x, y));
    let arm = pixels_where(dims, |x, y| {
        in_arm(x, y) && !in_palm(x, y) && !t1.contains(x, y) && !t2.contains(x, y)
    });
    // one-pixel ring outside torso-2, on the side facing away from torso-1
    let away = (t2.cx - t1.cx, t2.cy - t1.cy);
    let away_len = away.0.hypot(away.1).max(1e-9);
    let back = pixels_where(dims, |x, y| {
        if t2.contains(x, y) || in_palm(x, y) || in_arm(x, y) {
            return false;
        }
        let touches = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)]
            .iter()
            .any(|(dx, dy)| t2.contains(x + dx, y + dy));
        let (u, v) = ((x - t2.cx) / t2.rx, (y - t2.cy) / t2.ry);
        let facing = (u * away.0 + v * away.1) / (u.hypot(v).max(1e-9) * away_len);
        touches && facing >= 0.45
    });
    let inner: std::collections::HashSet<Pixel> = back.iter().copied().collect();
    let back_outer = pixels_where(dims, |x, y| {
        if t2.contains(x, y) || in_palm(x, y) || in_arm(x, y) || inner.contains(&Pixel::new(x as u32, y as u32)) {
            return false;
        }
        [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)].iter().any(|(dx, dy)| {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            nx >= 0 && ny >= 0 && inner.contains(&Pixel::new(nx as u32, ny as u32))
        })
    });
    Layers {
        torso_1,
        torso_2,
        back,
        back_outer,
        arm,
        palm,
    }
}

fn try_place(rng: &mut ChaCha20Rng, label: Label, dims: (usize, usize), s: f64) -> Option<Placement> {
    let (w, h) = (dims.0 as f64, dims.1 as f64);
    let torso_2 = Ellipse {
        cx: rng.random_range(7.0..10.0) * s,
        cy: h / 2.0 + rng.random_range(-2.0..2.0) * s,
        rx: rng.random_range(3.0..4.5) * s,
        ry: rng.random_range(8.0..10.5) * s,
    };
    let torso_1 = Ellipse {
        cx: w - rng.random_range(5.0..8.0) * s,
        cy: rng.random_range(5.5..10.0) * s,
        rx: rng.random_range(2.5..3.5) * s,
        ry: rng.random_range(3.0..4.5) * s,
    };
    let contact_angle: f64 = rng.random_range(-0.3..1.1);
    let palm_radius = rng.random_range(2.0..2.8) * s;
    let gap = match label {
        Label::Positive => 0.0,
        Label::Negative => rng.random_range(NEGATIVE_GAP..NEGATIVE_GAP + 2.0) * s,
    };
    let arm_half_width = 1.6;
    let (bx, by) = torso_2.at(contact_angle);
    let (nx, ny) = torso_2.normal(contact_angle);
    let margin = 2.0;
    let inside = |x: f64, y: f64, r: f64| x - r >= margin && y - r >= margin && x + r <= w - 1.0 - margin && y + r <= h - 1.0 - margin;
    for e in [&torso_1, &torso_2] {
        if !inside(e.cx, e.cy - e.ry, 0.0) || !inside(e.cx, e.cy + e.ry, 0.0) || !inside(e.cx - e.rx, e.cy, 0.0) || !inside(e.cx + e.rx, e.cy, 0.0) {
            return None;
        }
    }
    let mut p = Placement {
        torso_1,
        torso_2,
        palm_center: (0.0, 0.0),
        palm_radius,
        arm_start: (0.0, 0.0),
        arm_half_width,
        contact_angle,
        gap,
        levels: Levels::default(),
        noise_sigma: NOISE_SIGMA,
        attempts: 0,
    };
    // the arm leaves torso-1 on the ray toward the touching palm position
    let aim_arm = |p: &mut Placement| {
        let (dx, dy) = (p.palm_center.0 - torso_1.cx, p.palm_center.1 - torso_1.cy);
        let len = dx.hypot(dy);
        let mut t = 0.0;
        while torso_1.contains(torso_1.cx + dx / len * t, torso_1.cy + dy / len * t) {
            t += 0.25;
        }
        p.arm_start = (torso_1.cx + dx / len * (t - 0.5), torso_1.cy + dy / len * (t - 0.5));
    };
    // nudge the palm along the contact normal until the touch / gap rule
    // holds on the pixel masks
    let (mut push, step) = match label {
        Label::Positive => (palm_radius - 0.5, -0.25),
        Label::Negative => (palm_radius + 1.0 + gap, 0.5),
    };
    let mut settled = false;
    for _ in 0..20 {
        p.palm_center = (bx + nx * push, by + ny * push);
        aim_arm(&mut p);
        if !inside(p.palm_center.0, p.palm_center.1, p.palm_radius) {
            return None;
        }
        let l = draw_layers(&p, dims);
        if l.palm.is_empty() || l.torso_2.is_empty() {
            return None;
        }
        let d = mask_distance(&l.palm, &l.torso_2);
        settled = match label {
            Label::Positive => d <= 1.0,
            Label::Negative => d >= NEGATIVE_GAP,
        };
        if settled {
            break;
        }
        push += step;
    }
    if !settled {
        return None;
    }
    let l = draw_layers(&p, dims);
    let arm_len = (p.palm_center.0 - p.arm_start.0).hypot(p.palm_center.1 - p.arm_start.1);
    let clear = mask_distance(&l.torso_1, &l.torso_2) >= 4.0
        && mask_distance(&l.torso_1, &l.palm) >= 3.0
        && arm_len - p.palm_radius >= MIN_ARM_LENGTH * s
        && l.back.len() >= 6;
    clear.then_some(p)
}

fn to_region<T: Scalar>(px: Vec<Pixel>, dims: (usize, usize), img: &Image) -> Option<Primitive<T>> {
    (!px.is_empty()).then(|| Primitive::Region(Region::from_pixels(px, dims, Some(img))))
}

fn to_contour<T: Scalar>(pts: &[(f64, f64)]) -> Option<Primitive<T>> {
    (pts.len() >= 2).then(|| {
        Primitive::Contour(Contour {
            points: pts.iter().map(|&(x, y)| Point2::new(T::lit(x), T::lit(y))).collect(),
            mean_strength: T::zero(),
            closed: false,
        })
    })
}

fn gold_geometry<T: Scalar>(p: &Placement, l: &Layers, dims: (usize, usize), img: &Image) -> Assignment<T> {
    let t2 = p.torso_2;
    // back stroke ordered around torso-2
    let mut back: Vec<(f64, (f64, f64))> = l
        .back
        .iter()
        .map(|q| {
            let (x, y) = (q.x as f64, q.y as f64);
            (((y - t2.cy) / t2.ry).atan2((x - t2.cx) / t2.rx), (x, y))
        })
        .collect();
    back.sort_by(|a, b| a.0.total_cmp(&b.0));
    // a ring crossing ±π is split there; rotate so the largest angular gap is at the ends
    if back.len() > 2 {
        let mut cut = 0;
        let mut widest = std::f64::consts::TAU - (back[back.len() - 1].0 - back[0].0);
        for i in 1..back.len() {
            let g = back[i].0 - back[i - 1].0;
            if g > widest {
                widest = g;
                cut = i;
            }
        }
        back.rotate_left(cut);
    }
    let back: Vec<(f64, f64)> = back.into_iter().map(|(_, q)| q).collect();

    // arm sides: offset the axis by the half width plus half a pixel
    let (sx, sy) = p.arm_start;
    let (ex, ey) = p.palm_center;
    let len = (ex - sx).hypot(ey - sy);
    let (ux, uy) = ((ex - sx) / len, (ey - sy) / len);
    // the arm runs from torso-1 toward torso-2; arm-contour-1 is on its right-hand side
    let (nx, ny) = (-uy, ux);
    let off = p.arm_half_width + 0.5;
    let end = (ex - ux * p.palm_radius, ey - uy * p.palm_radius);
    // only the stretch of each side that borders background
    let occupied: std::collections::HashSet<Pixel> = [&l.torso_1, &l.torso_2, &l.back, &l.back_outer, &l.arm, &l.palm]
        .into_iter()
        .flatten()
        .copied()
        .collect();
    let side = |sign: f64| -> Vec<(f64, f64)> {
        let a = (sx + sign * nx * off, sy + sign * ny * off);
        let b = (end.0 + sign * nx * off, end.1 + sign * ny * off);
        sample_points(a, b, 1.0)
            .into_iter()
            .filter(|&(x, y)| {
                let (px, py) = (x.round(), y.round());
                px >= 0.0
                    && py >= 0.0
                    && (px as usize) < dims.0
                    && (py as usize) < dims.1
                    && !occupied.contains(&Pixel::new(px as u32, py as u32))
                    && !p.torso_1.contains(x, y)
            })
            .collect()
    };
    let mut gold = Assignment::new();
    gold.insert(hug::TORSO_2.into(), to_region(l.torso_2.clone(), dims, img));
    gold.insert(hug::TORSO_1.into(), to_region(l.torso_1.clone(), dims, img));
    gold.insert(hug::BACK.into(), to_contour(&back));
    gold.insert(hug::PALM.into(), to_region(l.palm.clone(), dims, img));
    gold.insert(hug::ARM_1.into(), to_contour(&side(1.0)));
    gold.insert(hug::ARM_2.into(), to_contour(&side(-1.0)));
    gold.insert(hug::FACE_1.into(), None);
    gold.insert(hug::FACE_2.into(), None);
    gold
}

fn render(p: &Placement, l: &Layers, dims: (usize, usize), rng: &mut ChaCha20Rng) -> Image {
    let mut base = vec![p.levels.background; dims.0 * dims.1];
    let mut paint = |px: &[Pixel], v: u8| {
        for q in px {
            base[q.y as usize * dims.0 + q.x as usize] = v;
        }
    };
    paint(&l.back, p.levels.stroke);
    paint(&l.back_outer, p.levels.stroke);
    paint(&l.torso_2, p.levels.torso);
    paint(&l.torso_1, p.levels.torso);
    paint(&l.arm, p.levels.stroke);
    paint(&l.palm, p.levels.palm);
    add_noise(&mut base, p.noise_sigma, rng);
    Image::new(dims.0, dims.1, base).expect("non-empty dims")
}

fn add_noise(data: &mut [u8], sigma: f64, rng: &mut ChaCha20Rng) {
    if sigma <= 0.0 {
        return;
    }
    let normal = Normal::new(0.0, sigma).expect("positive sigma");
    for v in data.iter_mut() {
        let n: f64 = normal.sample(rng);
        *v = (*v as f64 + n).round().clamp(0.0, 255.0) as u8;
    }
}

pub fn generate<T: Scalar>(seed: u64, label: Label, dims: (usize, usize)) -> Result<GlyphSample<T>, SynthError> {
    if dims.0 < MIN_GLYPH_SIZE || dims.1 < MIN_GLYPH_SIZE {
        return Err(SynthError::TooSmall {
            width: dims.0,
            height: dims.1,
        });
    }
    let s = dims.0.min(dims.1) as f64 / GLYPH_SIZE as f64;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for attempt in 1..=PLACEMENT_ATTEMPTS {
        if let Some(mut p) = try_place(&mut rng, label, dims, s) {
            p.attempts = attempt;
            let layers = draw_layers(&p, dims);
            let image = render(&p, &layers, dims, &mut rng);
            let gold = gold_geometry(&p, &layers, dims, &image);
            return Ok(GlyphSample {
                image,
                gold,
                label,
                seed,
                placement: p,
            });
        }
    }
    Err(SynthError::Placement {
        index: 0,
        attempts: PLACEMENT_ATTEMPTS,
    })
}

/// `n` glyphs with seeds `base_seed + i` and alternating labels.
pub fn corpus<T: Scalar>(base_seed: u64, n: usize, dims: (usize, usize)) -> Result<Vec<GlyphSample<T>>, SynthError> {
    (0..n)
        .map(|i| generate(base_seed.wrapping_add(i as u64), Label::alternating(i), dims))
        .collect()
}

/// Box `(x, y, w, h)` in scene pixels.
pub type WindowBox = (usize, usize, usize, usize);

pub fn box_iou(a: WindowBox, b: WindowBox) -> f64 {
    let ix = (a.0 + a.2).min(b.0 + b.2).saturating_sub(a.0.max(b.0));
    let iy = (a.1 + a.3).min(b.1 + b.3).saturating_sub(a.1.max(b.1));
    let inter = (ix * iy) as f64;
    let union = (a.2 * a.3 + b.2 * b.3) as f64 - inter;
    if union == 0.0 {
        0.0
    } else {
        inter / union
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct PlantedGlyph<T> {
    pub bbox: WindowBox,
    /// Gold geometry in scene coordinates.
    pub gold: Assignment<T>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene<T> {
    pub image: Image,
    pub planted: Vec<PlantedGlyph<T>>,
}

pub const SCENE_SIZE: usize = 120;

/// Scene seeds its glyphs with `seed · 1000 + i + 1`; all planted glyphs are
/// positives.
pub fn generate_scene<T: Scalar>(seed: u64, n_glyphs: usize, dims: (usize, usize)) -> Result<Scene<T>, SynthError> {
    let g = GLYPH_SIZE;
    if dims.0 < g || dims.1 < g {
        return Err(SynthError::TooSmall {
            width: dims.0,
            height: dims.1,
        });
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut data = vec![BACKGROUND; dims.0 * dims.1];
    add_noise(&mut data, NOISE_SIGMA, &mut rng);
    let mut image = Image::new(dims.0, dims.1, data).expect("non-empty dims");
    let mut planted = Vec::with_capacity(n_glyphs);
    for i in 0..n_glyphs {
        let mut placed = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let b = (rng.random_range(0..=dims.0 - g), rng.random_range(0..=dims.1 - g), g, g);
            if planted.iter().all(|p: &PlantedGlyph<T>| box_iou(p.bbox, b) == 0.0) {
                placed = Some(b);
                break;
            }
        }
        let bbox = placed.ok_or(SynthError::Placement {
            index: i,
            attempts: PLACEMENT_ATTEMPTS,
        })?;
        let glyph_seed = seed.wrapping_mul(1000).wrapping_add(i as u64 + 1);
        let glyph = generate::<T>(glyph_seed, Label::Positive, (g, g))?;
        for y in 0..g {
            for x in 0..g {
                image.set(bbox.0 + x, bbox.1 + y, glyph.image.get(x, y));
            }
        }
        let gold = glyph
            .gold
            .iter()
            .map(|(k, v)| (k.clone(), v.as_ref().map(|p| p.translated(bbox.0 as i64, bbox.1 as i64, dims))))
            .collect();
        planted.push(PlantedGlyph {
            bbox,
            gold,
            seed: glyph_seed,
        });
    }
    Ok(Scene { image, planted })
}

/// One manifest line per sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image: PathBuf,
    pub gold: PathBuf,
    pub label: Label,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub samples: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Gold annotation file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct GoldFile<T> {
    pub label: Label,
    pub seed: u64,
    pub dims: (usize, usize),
    pub gold: BTreeMap<String, Option<Primitive<T>>>,
    pub placement: Placement,
}

/// Writes `images/`, `gold/` and the manifest under `dir`. Paths in the
/// manifest are relative to `dir`.
pub fn write_corpus<T: Scalar>(dir: &Path, samples: &[GlyphSample<T>]) -> std::io::Result<Manifest> {
    std::fs::create_dir_all(dir.join("images"))?;
    std::fs::create_dir_all(dir.join("gold"))?;
    let mut manifest = Manifest::default();
    for (i, s) in samples.iter().enumerate() {
        let image = PathBuf::from(format!("images/{i:05}.pgm"));
        let gold = PathBuf::from(format!("gold/{i:05}.json"));
        std::fs::write(dir.join(&image), s.image.to_pgm_bytes(None))?;
        let file = GoldFile {
            label: s.label,
            seed: s.seed,
            dims: s.dims(),
            gold: s.gold.clone(),
            placement: s.placement.clone(),
        };
        std::fs::write(dir.join(&gold), serde_json::to_string_pretty(&file).map_err(std::io::Error::other)?)?;
        manifest.samples.push(ManifestEntry {
            image,
            gold,
            label: s.label,
            seed: s.seed,
        });
    }
    std::fs::write(
        dir.join(MANIFEST_FILE),
        serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?,
    )?;
    Ok(manifest)
}

/// Reads a corpus written by [`write_corpus`].
pub fn read_corpus<T: Scalar>(dir: &Path) -> Result<Vec<GlyphSample<T>>, crate::error::CorpusError> {
    use crate::error::CorpusError;
    let text = std::fs::read_to_string(dir.join(MANIFEST_FILE)).map_err(|e| CorpusError::Io(dir.join(MANIFEST_FILE), e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| CorpusError::Format(e.to_string()))?;
    manifest
        .samples
        .iter()
        .map(|e| {
            let image = crate::image::load_pgm(dir.join(&e.image)).map_err(|e| CorpusError::Format(e.to_string()))?;
            let path = dir.join(&e.gold);
            let text = std::fs::read_to_string(&path).map_err(|err| CorpusError::Io(path.clone(), err))?;
            let g: GoldFile<T> = serde_json::from_str(&text).map_err(|e| CorpusError::Format(e.to_string()))?;
            Ok(GlyphSample {
                image,
                gold: g.gold,
                label: e.label,
                seed: e.seed,
                placement: g.placement,
            })
        })
        .collect()
}
