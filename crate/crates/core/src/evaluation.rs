//! Jaccard correspondence between predicted and gold assignments, and
//! classification tallies.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::geometry::{digital_line, BitMask};
use crate::model::Assignment;
use crate::primitives::Primitive;
use crate::scalar::Scalar;

/// Pixel mask of a primitive: regions as-is, contours as their polyline
/// dilated by a 3×3 square, points as the 3×3 block around the rounded
/// position. Everything is clipped to `dims`.
pub fn rasterize<T: Scalar>(p: &Primitive<T>, dims: (usize, usize)) -> BitMask {
    let (w, h) = dims;
    let mut mask = BitMask::new(w, h);
    let round = |v: T| v.round().to_i64().unwrap_or(i64::MIN / 4);
    let dilate = |mask: &mut BitMask, x: i64, y: i64| {
        for dy in -1..=1 {
            for dx in -1..=1 {
                mask.insert(x + dx, y + dy);
            }
        }
    };
    match p {
        Primitive::Region(r) => {
            for px in &r.pixels {
                mask.insert(px.x as i64, px.y as i64);
            }
        }
        Primitive::Point(pt) => dilate(&mut mask, round(pt.position.x), round(pt.position.y)),
        Primitive::Contour(c) => {
            let pts: Vec<(i64, i64)> = c.points.iter().map(|p| (round(p.x), round(p.y))).collect();
            if pts.len() == 1 {
                dilate(&mut mask, pts[0].0, pts[0].1);
            }
            for seg in pts.windows(2) {
                for (x, y) in digital_line(seg[0], seg[1]) {
                    dilate(&mut mask, x, y);
                }
            }
        }
    }
    mask
}

/// Intersection and union pixel counts for one component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Overlap {
    pub intersection: u64,
    pub union: u64,
}

impl Overlap {
    /// Exact value; an empty union counts as identical masks.
    pub fn ratio(self) -> Ratio<u64> {
        if self.union == 0 {
            Ratio::from_integer(1)
        } else {
            Ratio::new(self.intersection, self.union)
        }
    }

    pub fn jaccard(self) -> f64 {
        if self.union == 0 {
            1.0
        } else {
            self.intersection as f64 / self.union as f64
        }
    }
}

pub fn mask_overlap(a: &BitMask, b: &BitMask) -> Overlap {
    let (i, u) = a.iou_counts(b);
    Overlap {
        intersection: i as u64,
        union: u as u64,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn record(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => (self.tp + self.tn) as f64 / n as f64,
        }
    }

    pub fn merge(&mut self, o: &Confusion) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.tn += o.tn;
        self.fn_ += o.fn_;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub per_component: BTreeMap<String, f64>,
    pub overlaps: BTreeMap<String, Overlap>,
    pub mean_jaccard: f64,
    /// Evaluated components with Jaccard at least 0.5.
    pub matched_components: usize,
    pub classification: Option<Confusion>,
}

/// Compare a predicted assignment with the gold one on a `dims` grid.
///
/// Components that are null in gold are skipped; a null prediction against
/// non-null gold scores 0.
pub fn jaccard_correspondence<T: Scalar>(
    pred: &Assignment<T>,
    gold: &Assignment<T>,
    dims: (usize, usize),
) -> Result<EvalResult, EvalError> {
    let mut overlaps = BTreeMap::new();
    for (name, g) in gold {
        let Some(g) = g else { continue };
        let gm = rasterize(g, dims);
        let ov = match pred.get(name).and_then(|p| p.as_ref()) {
            Some(p) => mask_overlap(&rasterize(p, dims), &gm),
            None => Overlap {
                intersection: 0,
                union: gm.count().max(1) as u64,
            },
        };
        overlaps.insert(name.clone(), ov);
    }
    if overlaps.is_empty() {
        return Err(EvalError::NothingToEvaluate);
    }
    let per_component: BTreeMap<String, f64> = overlaps.iter().map(|(k, o)| (k.clone(), o.jaccard())).collect();
    let mean_jaccard = per_component.values().sum::<f64>() / per_component.len() as f64;
    let matched_components = per_component.values().filter(|&&j| j >= 0.5).count();
    Ok(EvalResult {
        per_component,
        overlaps,
        mean_jaccard,
        matched_components,
        classification: None,
    })
}

/// Aggregate over many images.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub images: usize,
    pub mean_jaccard: f64,
    pub per_component_mean: BTreeMap<String, f64>,
    pub classification: Confusion,
}

pub fn summarize<'a>(results: impl IntoIterator<Item = &'a EvalResult>) -> EvalSummary {
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    let mut total = 0.0;
    let mut n = 0;
    let mut conf = Confusion::default();
    for r in results {
        n += 1;
        total += r.mean_jaccard;
        for (k, v) in &r.per_component {
            let e = sums.entry(k.clone()).or_default();
            e.0 += v;
            e.1 += 1;
        }
        if let Some(c) = &r.classification {
            conf.merge(c);
        }
    }
    EvalSummary {
        images: n,
        mean_jaccard: if n == 0 { 0.0 } else { total / n as f64 },
        per_component_mean: sums.into_iter().map(|(k, (s, c))| (k, s / c as f64)).collect(),
        classification: conf,
    }
}

/// One CSV row per image; component columns follow `components`.
pub fn results_csv(rows: &[(String, EvalResult)], components: &[&str]) -> String {
    let mut out = String::from("image,mean_jaccard,matched_components");
    for c in components {
        let _ = write!(out, ",{c}");
    }
    out.push('\n');
    for (name, r) in rows {
        let _ = write!(out, "{},{:.6},{}", name, r.mean_jaccard, r.matched_components);
        for c in components {
            match r.per_component.get(*c) {
                Some(v) => {
                    let _ = write!(out, ",{v:.6}");
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}
