//! Configuration search: choose one candidate (or null) per component to
//! maximize the model score.
//!
//! Relation values are tabulated once per candidate table, so both solvers
//! only do lookups. Complete assignments are always ranked by their
//! canonical score (the same left-to-right `w · φ − penalties` sum that
//! [`InterpretationModel::score`] computes) with ties broken by the
//! lexicographically smallest candidate-index vector.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::SearchError;
use crate::model::{Assignment, Interpretation, InterpretationModel};
use crate::primitives::{Primitive, PrimitiveSet};
use crate::relations::{evaluate, RelationValue};
use crate::scalar::{cmp_scores, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchParams {
    /// Candidates kept per component.
    pub k: usize,
    pub beam_width: usize,
    /// Largest assignment space enumerated exactly.
    pub exact_limit: u128,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            k: 8,
            beam_width: 50,
            exact_limit: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate<T> {
    /// `None` is the null candidate.
    pub primitive: Option<Primitive<T>>,
    /// Index into the primitive set's list of this kind. Two components of
    /// the same kind never receive candidates with the same source.
    pub source: Option<usize>,
    pub pre_score: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentCandidates<T> {
    pub component: String,
    pub candidates: Vec<Candidate<T>>,
}

/// Per-component candidate lists, in model component order.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateTable<T> {
    pub components: Vec<ComponentCandidates<T>>,
}

impl<T: Scalar> CandidateTable<T> {
    pub fn sizes(&self) -> Vec<usize> {
        self.components.iter().map(|c| c.candidates.len()).collect()
    }

    /// Size of the full assignment space (saturating).
    pub fn product(&self) -> u128 {
        self.sizes()
            .iter()
            .fold(1u128, |acc, &n| acc.saturating_mul(n as u128))
    }

    pub fn assignment(&self, indices: &[usize]) -> Assignment<T> {
        self.components
            .iter()
            .zip(indices)
            .map(|(c, &i)| (c.component.clone(), c.candidates[i].primitive.clone()))
            .collect()
    }
}

/// Weighted sum of the component's unary relations evaluated alone.
pub fn unary_pre_score<T: Scalar>(model: &InterpretationModel<T>, component: &str, p: Option<&Primitive<T>>) -> T {
    let offsets = model.block_offsets();
    let mut acc = T::zero();
    for (r, off) in model.relations.iter().zip(offsets) {
        if r.kind.arity() == 1 && r.operands[0] == component {
            let v = evaluate(r.kind, &r.params, &[p]);
            for (k, x) in v.values().iter().enumerate() {
                acc += model.weights[off + k] * *x;
            }
        }
    }
    acc
}

pub fn build_candidates<T: Scalar>(
    model: &InterpretationModel<T>,
    prims: &PrimitiveSet<T>,
    k: usize,
) -> Result<CandidateTable<T>, SearchError> {
    if k == 0 {
        return Err(SearchError::ZeroCandidates);
    }
    let mut components = Vec::with_capacity(model.components.len());
    for spec in &model.components {
        let pool = prims.of_kind(spec.kind);
        if pool.is_empty() && !spec.optional {
            return Err(SearchError::Uninterpretable {
                component: spec.name.clone(),
                kind: spec.kind.name(),
            });
        }
        let mut scored: Vec<Candidate<T>> = pool
            .into_iter()
            .enumerate()
            .map(|(i, p)| Candidate {
                pre_score: unary_pre_score(model, &spec.name, Some(&p)),
                primitive: Some(p),
                source: Some(i),
            })
            .collect();
        // stable sort keeps extraction order among ties
        scored.sort_by(|a, b| cmp_scores(b.pre_score, a.pre_score));
        scored.truncate(k);
        if spec.optional {
            scored.push(Candidate {
                primitive: None,
                source: None,
                pre_score: unary_pre_score(model, &spec.name, None) - model.null_penalty(&spec.name),
            });
        }
        components.push(ComponentCandidates {
            component: spec.name.clone(),
            candidates: scored,
        });
    }
    Ok(CandidateTable { components })
}

/// Best assignment with its candidate indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome<T> {
    pub indices: Vec<usize>,
    pub interpretation: Interpretation<T>,
}

struct RelTable<T> {
    operands: Vec<usize>,
    /// Position in the component order at which all operands are assigned.
    completes_at: usize,
    /// Row-major over operand candidate indices; each entry has `dims` values.
    values: Vec<RelationValue<T>>,
    contrib: Vec<T>,
    weight_offset: usize,
    stride: usize,
}

/// Tabulated relation values and penalties for one (model, table) pair.
struct Scorer<'a, T> {
    model: &'a InterpretationModel<T>,
    rels: Vec<RelTable<T>>,
    /// Null penalty of candidate `i` of component `c` (zero unless null).
    penalty: Vec<Vec<T>>,
    sizes: Vec<usize>,
    /// Source of each non-null candidate, per component.
    source: Vec<Vec<Option<usize>>>,
    /// Earlier components of the same primitive kind.
    same_kind_before: Vec<Vec<usize>>,
    /// Relations completed at each depth.
    completing: Vec<Vec<usize>>,
}

impl<'a, T: Scalar> Scorer<'a, T> {
    fn new(model: &'a InterpretationModel<T>, table: &CandidateTable<T>) -> Result<Self, SearchError> {
        if table.components.len() != model.components.len() {
            return Err(crate::error::ModelError::Format("candidate table does not match model".into()).into());
        }
        for (spec, cc) in model.components.iter().zip(&table.components) {
            if spec.name != cc.component {
                return Err(crate::error::ModelError::UnknownComponent(cc.component.clone()).into());
            }
            if cc.candidates.is_empty() {
                return Err(SearchError::Uninterpretable {
                    component: spec.name.clone(),
                    kind: spec.kind.name(),
                });
            }
            for cand in &cc.candidates {
                match &cand.primitive {
                    Some(p) if p.kind() != spec.kind => {
                        return Err(crate::error::ModelError::KindMismatch {
                            component: spec.name.clone(),
                            expected: spec.kind.name(),
                            actual: p.kind().name(),
                        }
                        .into())
                    }
                    None if !spec.optional => {
                        return Err(crate::error::ModelError::MissingRequired(spec.name.clone()).into())
                    }
                    _ => {}
                }
            }
        }
        let sizes = table.sizes();
        let offsets = model.block_offsets();
        let mut rels = Vec::with_capacity(model.relations.len());
        for (r, off) in model.relations.iter().zip(offsets) {
            let operands: Vec<usize> = r
                .operands
                .iter()
                .map(|n| {
                    model
                        .component_index(n)
                        .ok_or_else(|| crate::error::ModelError::UnknownComponent(n.clone()))
                })
                .collect::<Result<_, _>>()?;
            let dims = r.kind.dims();
            let w = &model.weights[off..off + dims];
            let cands = |c: usize| &table.components[c].candidates;
            let mut values = Vec::new();
            match operands.as_slice() {
                [a] => {
                    for ca in cands(*a) {
                        values.push(evaluate(r.kind, &r.params, &[ca.primitive.as_ref()]));
                    }
                }
                [a, b] => {
                    for ca in cands(*a) {
                        for cb in cands(*b) {
                            values.push(evaluate(r.kind, &r.params, &[ca.primitive.as_ref(), cb.primitive.as_ref()]));
                        }
                    }
                }
                _ => unreachable!("validated arity"),
            }
            let contrib = values
                .iter()
                .map(|v| v.values().iter().zip(w).fold(T::zero(), |acc, (x, w)| acc + *w * *x))
                .collect();
            let stride = if operands.len() == 2 { sizes[operands[1]] } else { 1 };
            rels.push(RelTable {
                completes_at: *operands.iter().max().unwrap(),
                operands,
                values,
                contrib,
                weight_offset: off,
                stride,
            });
        }
        let penalty = model
            .components
            .iter()
            .zip(&table.components)
            .map(|(spec, cc)| {
                cc.candidates
                    .iter()
                    .map(|c| {
                        if c.primitive.is_none() {
                            model.null_penalty(&spec.name)
                        } else {
                            T::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        let source = table
            .components
            .iter()
            .map(|cc| {
                cc.candidates
                    .iter()
                    .map(|c| c.primitive.as_ref().and(c.source))
                    .collect()
            })
            .collect();
        let same_kind_before = (0..model.components.len())
            .map(|c| (0..c).filter(|&d| model.components[d].kind == model.components[c].kind).collect())
            .collect();
        let mut completing = vec![Vec::new(); sizes.len()];
        for (k, r) in rels.iter().enumerate() {
            completing[r.completes_at].push(k);
        }
        Ok(Self {
            model,
            rels,
            penalty,
            sizes,
            source,
            same_kind_before,
            completing,
        })
    }

    /// Whether candidate `i` at `depth` reuses a primitive already in `prefix`.
    #[inline]
    fn clashes(&self, prefix: &[usize], depth: usize, i: usize) -> bool {
        match self.source[depth][i] {
            None => false,
            Some(s) => self.same_kind_before[depth]
                .iter()
                .any(|&d| self.source[d][prefix[d]] == Some(s)),
        }
    }

    fn consistent(&self, idx: &[usize]) -> bool {
        (0..idx.len()).all(|d| !self.clashes(idx, d, idx[d]))
    }

    #[inline]
    fn cell(&self, r: &RelTable<T>, idx: &[usize]) -> usize {
        match r.operands.as_slice() {
            [a] => idx[*a],
            [a, b] => idx[*a] * r.stride + idx[*b],
            _ => unreachable!(),
        }
    }

    /// Score accumulated exactly as `InterpretationModel::score` does.
    fn canonical(&self, idx: &[usize]) -> T {
        let mut acc = T::zero();
        for r in &self.rels {
            let v = &r.values[self.cell(r, idx)];
            for (k, x) in v.values().iter().enumerate() {
                acc += self.model.weights[r.weight_offset + k] * *x;
            }
        }
        let pen = self
            .penalty
            .iter()
            .zip(idx)
            .zip(&self.model.components)
            .filter(|(_, spec)| spec.optional)
            .fold(T::zero(), |a, ((p, &i), _)| a + p[i]);
        acc - pen
    }

    /// Score gained by the candidate `idx[depth]` given the earlier entries.
    fn step_gain(&self, idx: &[usize], depth: usize) -> T {
        let mut gain = -self.penalty[depth][idx[depth]];
        for &r in &self.completing[depth] {
            let r = &self.rels[r];
            gain += r.contrib[self.cell(r, idx)];
        }
        gain
    }
}

/// Higher score first, then lexicographically smaller indices.
fn rank<T: Scalar>(a: (T, &[usize]), b: (T, &[usize])) -> Ordering {
    cmp_scores(b.0, a.0).then_with(|| a.1.cmp(b.1))
}

fn outcome<T: Scalar>(
    model: &InterpretationModel<T>,
    table: &CandidateTable<T>,
    indices: Vec<usize>,
) -> Result<SearchOutcome<T>, SearchError> {
    let interpretation = model.score(&table.assignment(&indices))?;
    Ok(SearchOutcome { indices, interpretation })
}

/// True argmax over the full product space.
pub fn interpret_exact_indexed<T: Scalar>(
    model: &InterpretationModel<T>,
    table: &CandidateTable<T>,
    exact_limit: u128,
) -> Result<SearchOutcome<T>, SearchError> {
    let size = table.product();
    if size > exact_limit {
        return Err(SearchError::UseBeam { size, limit: exact_limit });
    }
    let scorer = Scorer::new(model, table)?;
    let n = scorer.sizes.len();
    let mut idx = vec![0usize; n];
    let mut best: Option<(T, Vec<usize>)> = None;
    // odometer in lexicographic order; strict improvement keeps the first maximum
    loop {
        if scorer.consistent(&idx) {
            let s = scorer.canonical(&idx);
            if best.as_ref().is_none_or(|(b, _)| cmp_scores(s, *b) == Ordering::Greater) {
                best = Some((s, idx.clone()));
            }
        }
        let mut d = n;
        let done = loop {
            if d == 0 {
                break true;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < scorer.sizes[d] {
                break false;
            }
            idx[d] = 0;
        };
        if done {
            break;
        }
    }
    let (_, best_idx) = best.ok_or(SearchError::NoDistinctAssignment)?;
    outcome(model, table, best_idx)
}

pub fn interpret_exact<T: Scalar>(
    model: &InterpretationModel<T>,
    table: &CandidateTable<T>,
    exact_limit: u128,
) -> Result<Interpretation<T>, SearchError> {
    interpret_exact_indexed(model, table, exact_limit).map(|o| o.interpretation)
}

/// One beam pass of fixed width. Returns the best complete assignment and
/// whether any partial assignment was pruned.
fn beam_pass<T: Scalar>(scorer: &Scorer<'_, T>, width: usize) -> (Option<(T, Vec<usize>)>, bool) {
    let n = scorer.sizes.len();
    if n == 0 {
        return (Some((scorer.canonical(&[]), Vec::new())), false);
    }
    // the beam is stored flat: entry b owns prefixes[b * depth..(b + 1) * depth]
    let mut scores: Vec<T> = vec![T::zero()];
    let mut prefixes: Vec<usize> = Vec::new();
    let mut next_scores: Vec<T> = Vec::new();
    let mut next_prefixes: Vec<usize> = Vec::new();
    let mut pruned = false;
    let mut buf = vec![0; n];
    // (score, lexicographic rank of the parent, candidate, parent)
    let mut children: Vec<(T, usize, usize, usize)> = Vec::new();
    let mut lex: Vec<usize> = Vec::new();
    let mut lex_rank: Vec<usize> = Vec::new();
    for depth in 0..n {
        let len = scores.len();
        let prefix = |b: usize| &prefixes[b * depth..(b + 1) * depth];
        // children compare by parent prefix first, so rank the parents once
        lex.clear();
        lex.extend(0..len);
        lex.sort_by(|&a, &b| prefix(a).cmp(prefix(b)));
        lex_rank.clear();
        lex_rank.resize(len, 0);
        for (r, &b) in lex.iter().enumerate() {
            lex_rank[b] = r;
        }
        children.clear();
        for pi in 0..len {
            let pre = prefix(pi);
            buf[..depth].copy_from_slice(pre);
            for i in 0..scorer.sizes[depth] {
                if scorer.clashes(pre, depth, i) {
                    continue;
                }
                buf[depth] = i;
                let s = scores[pi] + scorer.step_gain(&buf[..=depth], depth);
                children.push((s, lex_rank[pi], i, pi));
            }
        }
        let by_rank = |a: &(T, usize, usize, usize), b: &(T, usize, usize, usize)| {
            cmp_scores(b.0, a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
        };
        if children.len() > width {
            pruned = true;
            children.select_nth_unstable_by(width - 1, by_rank);
            children.truncate(width);
        }
        children.sort_unstable_by(by_rank);
        next_scores.clear();
        next_prefixes.clear();
        for &(s, _, i, pi) in &children {
            next_scores.push(s);
            next_prefixes.extend_from_slice(prefix(pi));
            next_prefixes.push(i);
        }
        std::mem::swap(&mut scores, &mut next_scores);
        std::mem::swap(&mut prefixes, &mut next_prefixes);
    }
    let best = prefixes
        .chunks(n)
        .take(scores.len())
        .map(|idx| (scorer.canonical(idx), idx))
        .min_by(|a, b| rank(*a, *b))
        .map(|(s, idx)| (s, idx.to_vec()));
    (best, pruned)
}

/// Beam search in model component order, scoring partial assignments by
/// the relations they complete.
///
/// The result is the best over passes of width `1..=width`, so widening the
/// beam never lowers the score. Passes stop early once one prunes nothing,
/// since every wider pass would be identical.
pub fn interpret_beam_indexed<T: Scalar>(
    model: &InterpretationModel<T>,
    table: &CandidateTable<T>,
    width: usize,
) -> Result<SearchOutcome<T>, SearchError> {
    if width == 0 {
        return Err(SearchError::ZeroBeam);
    }
    let scorer = Scorer::new(model, table)?;
    let mut best: Option<(T, Vec<usize>)> = None;
    for w in 1..=width {
        let (found, pruned) = beam_pass(&scorer, w);
        if let Some((s, idx)) = found {
            let better = match &best {
                None => true,
                Some((bs, bidx)) => rank((s, &idx), (*bs, bidx)) == Ordering::Less,
            };
            if better {
                best = Some((s, idx));
            }
        }
        if !pruned {
            break;
        }
    }
    // a pass can dead-end when narrow beams exhaust the distinct primitives
    let (_, idx) = best.ok_or(SearchError::NoDistinctAssignment)?;
    outcome(model, table, idx)
}

pub fn interpret_beam<T: Scalar>(
    model: &InterpretationModel<T>,
    table: &CandidateTable<T>,
    width: usize,
) -> Result<Interpretation<T>, SearchError> {
    interpret_beam_indexed(model, table, width).map(|o| o.interpretation)
}

/// Exact search when the space fits under the limit, beam otherwise.
pub fn interpret_table<T: Scalar>(
    model: &InterpretationModel<T>,
    table: &CandidateTable<T>,
    params: &SearchParams,
) -> Result<SearchOutcome<T>, SearchError> {
    if table.product() <= params.exact_limit {
        interpret_exact_indexed(model, table, params.exact_limit)
    } else {
        interpret_beam_indexed(model, table, params.beam_width)
    }
}

/// Extract primitives from `img` and interpret them.
pub fn interpret_image<T: Scalar>(
    model: &InterpretationModel<T>,
    img: &crate::image::Image,
    extract: &crate::primitives::ExtractParams,
    params: &SearchParams,
) -> Result<(PrimitiveSet<T>, CandidateTable<T>, SearchOutcome<T>), SearchError> {
    let prims = crate::primitives::extract_primitives::<T>(img, extract);
    let table = build_candidates(model, &prims, params.k)?;
    let outcome = interpret_table(model, &table, params)?;
    Ok((prims, table, outcome))
}
