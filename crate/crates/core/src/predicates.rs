//! Edge predicates `B(i, σ)`, the discard sets they induce, and pruning hooks for the searches
//! that look for edges.

use std::cell::Cell;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::bitseq::{index_of, BitString};
use crate::error::{Error, Result};
use crate::network::{Network, Pattern};
use crate::operators::{Bounded, FunctionRoster, OperatorProvider};
use crate::rational::{self, Q};

/// Counts search work and stops runaway searches.
#[derive(Debug)]
pub struct WorkMeter {
    used: Cell<u64>,
    pub limit: u64,
}

impl WorkMeter {
    pub fn new(limit: u64) -> WorkMeter {
        WorkMeter {
            used: Cell::new(0),
            limit,
        }
    }

    pub fn tick(&self, level: usize) -> Result<()> {
        let u = self.used.get() + 1;
        self.used.set(u);
        if u > self.limit {
            return Err(Error::BudgetExhausted {
                budget: self.limit,
                level,
            });
        }
        Ok(())
    }

    pub fn used(&self) -> u64 {
        self.used.get()
    }
}

/// Everything a predicate may look at while step `n` is planned.
pub struct StepContext<'a> {
    pub n: usize,
    pub task: u64,
    /// Session start `w(i, n)`.
    pub w: usize,
    /// Leading positions the step mirrors over (0 when edges are not mirrored).
    pub mirror: usize,
    pub op: Option<&'a Arc<dyn OperatorProvider>>,
    pub funcs: &'a FunctionRoster,
    pub func_index: u64,
    /// Network the edges are drawn in.
    pub base: &'a Network,
    /// Network whose vertices get discarded, when different from the base.
    pub target: Option<&'a Network>,
    pub reject_overlap: bool,
    pub work: &'a WorkMeter,
}

impl StepContext<'_> {
    fn op(&self) -> Result<&Arc<dyn OperatorProvider>> {
        self.op.ok_or_else(|| Error::Config("predicate needs an operator".into()))
    }

    fn apply(&self, y: &BitString) -> Result<BitString> {
        self.op()?.apply_modified(y)
    }

    /// Operator output so far on `p` (capped at `n`), state, and the most bits it can still emit.
    fn partial_output(&self, p: &BitString) -> Option<(BitString, usize, usize)> {
        let t = self.op.and_then(|o| o.transducer())?;
        let (e, state) = t.run(p, self.n);
        let (_, more) = t.emission_bounds(state, self.n - p.len());
        let max_len = (e.len() + more).min(self.n);
        Some((e, state, max_len))
    }
}

/// A set of level-`n` vertices of one network that get delay 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Discard {
    pub network: usize,
    pub patterns: Vec<Pattern>,
    /// Frame mass of the set in the pre-step frame.
    pub mass: Q,
    /// Bound the mass had to respect.
    pub bound_exponent: u128,
    /// Source of the edge (the leading one when mirrored).
    pub source: BitString,
}

pub trait EdgePredicate: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn holds(&self, ctx: &StepContext, x: &BitString, y: &BitString) -> Result<bool>;

    /// `false` only when no length-`n` extension of `prefix` can satisfy the predicate for the
    /// source `x` (or, when `x` is unknown, for any source of index at least `min_index`).
    fn may_hold(&self, _ctx: &StepContext, _x: Option<&BitString>, _min_index: u128, _prefix: &BitString) -> Result<bool> {
        Ok(true)
    }

    /// `false` only when no source of length `l` can have an edge at this step.
    fn level_admissible(&self, _ctx: &StepContext, _l: usize) -> bool {
        true
    }

    /// Vertices discarded by drawing `(x, y)` and its mirrors.
    fn discards(&self, _ctx: &StepContext, _x: &BitString, _y: &BitString) -> Result<Option<Discard>> {
        Ok(None)
    }

    /// Whether edges satisfy `l(F̃_i(σ₂)) > σ₁ + i`, which test builders rely on.
    fn is_length_gain(&self) -> bool {
        false
    }
}

/// All edges `(u·x[w+1..], u·y[w+1..])` over `u` of length `w`.
pub fn mirror_pairs(x: &BitString, y: &BitString, w: usize) -> Vec<(BitString, BitString)> {
    if w == 0 {
        return vec![(*x, *y)];
    }
    (0..(1u128 << w))
        .map(|u| {
            let u = BitString::from_value(w, u);
            (x.with_prefix(&u), y.with_prefix(&u))
        })
        .collect()
}

#[derive(Debug)]
pub struct Never;

impl EdgePredicate for Never {
    fn name(&self) -> &'static str {
        "never"
    }
    fn holds(&self, _: &StepContext, _: &BitString, _: &BitString) -> Result<bool> {
        Ok(false)
    }
    fn may_hold(&self, _: &StepContext, _: Option<&BitString>, _: u128, _: &BitString) -> Result<bool> {
        Ok(false)
    }
}

#[derive(Debug)]
pub struct Always;

impl EdgePredicate for Always {
    fn name(&self) -> &'static str {
        "always"
    }
    fn holds(&self, _: &StepContext, _: &BitString, _: &BitString) -> Result<bool> {
        Ok(true)
    }
}

/// `l(F̃_i(σ₂)) > index(σ₁) + i`.
#[derive(Debug)]
pub struct LengthGain;

impl LengthGain {
    fn needed(ctx: &StepContext, index: u128) -> u128 {
        index + ctx.task as u128
    }
}

impl EdgePredicate for LengthGain {
    fn name(&self) -> &'static str {
        "length-gain"
    }

    fn holds(&self, ctx: &StepContext, x: &BitString, y: &BitString) -> Result<bool> {
        Ok(ctx.apply(y)?.len() as u128 > Self::needed(ctx, index_of(x)))
    }

    fn may_hold(&self, ctx: &StepContext, x: Option<&BitString>, min_index: u128, prefix: &BitString) -> Result<bool> {
        let index = x.map(index_of).unwrap_or(min_index);
        if (ctx.n as u128) <= Self::needed(ctx, index) {
            return Ok(false);
        }
        Ok(match ctx.partial_output(prefix) {
            Some((_, _, max_len)) => max_len as u128 > Self::needed(ctx, index),
            None => true,
        })
    }

    fn level_admissible(&self, ctx: &StepContext, l: usize) -> bool {
        let min_index = (1u128 << l) - 1;
        (ctx.n as u128) > Self::needed(ctx, min_index)
    }

    fn is_length_gain(&self) -> bool {
        true
    }
}

/// Pieces of `ext_n(v)` outside the subtree of `x`.
pub fn extension_minus_subtree(v: &BitString, x: &BitString) -> Vec<Pattern> {
    if x.is_prefix_of(v) {
        Vec::new()
    } else if v.is_proper_prefix_of(x) {
        (v.len() + 1..=x.len())
            .map(|t| Pattern::subtree(&x.prefix(t - 1).push(1 - x.bit(t))))
            .collect()
    } else {
        vec![Pattern::subtree(v)]
    }
}

fn mass_of(net: &Network, n: usize, pieces: &[Pattern]) -> Q {
    pieces.iter().map(|p| net.pattern_mass(n, p)).fold(Q::zero(), |a, b| a + b)
}

fn two_pow(k: usize) -> Q {
    Q::from_integer(BigInt::one() << k)
}

/// `F̃_i(σ₂) ⊄ σ₂` and the frame mass of the discarded extensions of `F̃_i(σ₂)` is at most
/// `2^-(index(σ₁)+3)`; discarded vertices lie in the base network.
#[derive(Debug)]
pub struct SelfDiscard;

impl SelfDiscard {
    fn discard_set(ctx: &StepContext, x: &BitString, y: &BitString) -> Result<Option<(Vec<Pattern>, BitString)>> {
        let v = ctx.apply(y)?;
        if v.is_prefix_of(y) {
            return Ok(None);
        }
        if ctx.reject_overlap && v.comparable(x) {
            return Ok(None);
        }
        Ok(Some((extension_minus_subtree(&v, x), v)))
    }
}

impl EdgePredicate for SelfDiscard {
    fn name(&self) -> &'static str {
        "self-discard"
    }

    fn holds(&self, ctx: &StepContext, x: &BitString, y: &BitString) -> Result<bool> {
        let Some((pieces, _)) = Self::discard_set(ctx, x, y)? else {
            return Ok(false);
        };
        ctx.work.tick(ctx.n)?;
        let mass = mass_of(ctx.base, ctx.n, &pieces);
        Ok(rational::le_pow2_neg(&mass, index_of(x) + 3))
    }

    fn may_hold(&self, ctx: &StepContext, x: Option<&BitString>, _min_index: u128, prefix: &BitString) -> Result<bool> {
        let Some(x) = x else { return Ok(true) };
        let Some(t) = ctx.op.and_then(|o| o.transducer()) else {
            return Ok(true);
        };
        let Some((e, state, max_len)) = ctx.partial_output(prefix) else {
            return Ok(true);
        };
        let common = e.len().min(prefix.len());
        let mismatched = e.prefix(common) != prefix.prefix(common);
        let remaining = ctx.n - prefix.len();
        if !mismatched {
            let reachable = if e.len() > prefix.len() {
                remaining > 0
            } else {
                let lag = prefix.segment(e.len() + 1, prefix.len());
                t.mismatch_reachable(state, lag, e.len(), remaining, ctx.n)
            };
            if !reachable {
                return Ok(false);
            }
        }
        if ctx.reject_overlap && x.is_prefix_of(&e) {
            return Ok(false);
        }
        if e.comparable(x) {
            return Ok(true);
        }
        // v is incomparable with x, so D is all of ext_n(v) with at least 2^(n - max_len) members
        ctx.work.tick(ctx.n)?;
        let agg = ctx.base.aggregate(ctx.n, &[Pattern::subtree(&e)]);
        let lb = agg.min_or_zero() * two_pow(ctx.n - max_len);
        Ok(rational::le_pow2_neg(&lb, index_of(x) + 3))
    }

    fn discards(&self, ctx: &StepContext, x: &BitString, y: &BitString) -> Result<Option<Discard>> {
        let Some((pieces, _)) = Self::discard_set(ctx, x, y)? else {
            return Ok(None);
        };
        let mass = mass_of(ctx.base, ctx.n, &pieces);
        Ok(Some(Discard {
            network: ctx.base.id,
            patterns: pieces,
            mass,
            bound_exponent: index_of(x) + 3,
            source: *x,
        }))
    }
}

/// Target-side discards: level-`n` strings agreeing with `F̃(σ₂)` at positions `w..l(F̃(σ₂))`,
/// collected over all mirrors of the edge; their frame mass in the target must be at most
/// `2^-(index(σ₁)+3)`.
#[derive(Debug)]
pub struct TargetDiscard;

impl TargetDiscard {
    fn pattern(w: usize, v: &BitString) -> Pattern {
        if v.len() < w {
            Pattern::whole()
        } else {
            Pattern {
                free: w - 1,
                fixed: v.segment(w, v.len()),
            }
        }
    }

    fn target<'a>(ctx: &StepContext<'a>) -> Result<&'a Network> {
        ctx.target.ok_or_else(|| Error::Config("target-discard predicate needs a target network".into()))
    }

    /// Disjoint patterns covering the union of the discard sets of all mirrors.
    fn union(ctx: &StepContext, x: &BitString, y: &BitString) -> Result<Vec<Pattern>> {
        let mut pats = Vec::new();
        for (_, y2) in mirror_pairs(x, y, ctx.mirror) {
            let p = Self::pattern(ctx.w, &ctx.apply(&y2)?);
            if p.fixed.is_empty() {
                return Ok(vec![Pattern::whole()]);
            }
            pats.push(p);
        }
        // same free prefix: overlap means one fixed part extends the other
        pats.sort_by_key(|p| (p.fixed.len(), p.fixed));
        let mut kept: Vec<Pattern> = Vec::new();
        for p in pats {
            if !kept.iter().any(|k| k.contains(&p)) {
                kept.push(p);
            }
        }
        Ok(kept)
    }
}

impl EdgePredicate for TargetDiscard {
    fn name(&self) -> &'static str {
        "target-discard"
    }

    fn holds(&self, ctx: &StepContext, x: &BitString, y: &BitString) -> Result<bool> {
        let target = Self::target(ctx)?;
        let pats = Self::union(ctx, x, y)?;
        ctx.work.tick(ctx.n)?;
        let mut mass = Q::zero();
        for p in &pats {
            mass += target.pattern_mass(ctx.n, p);
            if !rational::le_pow2_neg(&mass, index_of(x) + 3) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn may_hold(&self, ctx: &StepContext, x: Option<&BitString>, min_index: u128, prefix: &BitString) -> Result<bool> {
        let target = Self::target(ctx)?;
        let index = x.map(index_of).unwrap_or(min_index);
        let Some((e, _, max_len)) = ctx.partial_output(prefix) else {
            return Ok(true);
        };
        ctx.work.tick(ctx.n)?;
        if max_len < ctx.w {
            // the whole level is discarded
            return Ok(rational::le_pow2_neg(&target.total(ctx.n), index + 3));
        }
        let pat = Self::pattern(ctx.w, &e);
        let agg = target.aggregate(ctx.n, &[pat]);
        let lb = agg.min_or_zero() * two_pow(ctx.n - (max_len - ctx.w + 1));
        Ok(rational::le_pow2_neg(&lb, index + 3))
    }

    fn level_admissible(&self, ctx: &StepContext, l: usize) -> bool {
        let Some(target) = ctx.target else { return true };
        let min_r = target.aggregate(ctx.n, &[]).min_or_zero();
        // every discard set has at least 2^(w-1) members
        let lb = min_r * two_pow(ctx.w.saturating_sub(1));
        rational::le_pow2_neg(&lb, (1u128 << l) + 2)
    }

    fn discards(&self, ctx: &StepContext, x: &BitString, y: &BitString) -> Result<Option<Discard>> {
        let target = Self::target(ctx)?;
        let pats = Self::union(ctx, x, y)?;
        let mass = mass_of(target, ctx.n, &pats);
        Ok(Some(Discard {
            network: target.id,
            patterns: pats,
            mass,
            bound_exponent: index_of(x) + 3,
            source: *x,
        }))
    }
}

/// `σ₂ = σ₁·1·0^k` and `l(σ₂) >= φ^{l(σ₂)}(l(σ₁)+2)`.
#[derive(Debug)]
pub struct SparseShape;

impl SparseShape {
    pub fn shape(x: &BitString, n: usize) -> BitString {
        x.push(1).concat(&BitString::zeros(n - x.len() - 1))
    }

    fn bound_met(ctx: &StepContext, l: usize) -> bool {
        match ctx.funcs.phi_bounded(ctx.func_index, l as u64 + 2, ctx.n as u64) {
            Bounded::Value(v) => v <= ctx.n as u64,
            Bounded::Diverges => false,
        }
    }
}

impl EdgePredicate for SparseShape {
    fn name(&self) -> &'static str {
        "sparse-shape"
    }

    fn holds(&self, ctx: &StepContext, x: &BitString, y: &BitString) -> Result<bool> {
        Ok(y.len() > x.len() && *y == Self::shape(x, y.len()) && Self::bound_met(ctx, x.len()))
    }

    fn may_hold(&self, ctx: &StepContext, x: Option<&BitString>, _: u128, prefix: &BitString) -> Result<bool> {
        let Some(x) = x else { return Ok(true) };
        if prefix.len() <= x.len() {
            return Ok(true);
        }
        let full = Self::shape(x, ctx.n);
        Ok(prefix.is_prefix_of(&full))
    }

    fn level_admissible(&self, ctx: &StepContext, l: usize) -> bool {
        l + 2 <= ctx.n && Self::bound_met(ctx, l)
    }
}

pub const PREDICATES: &[&str] = &["never", "always", "length-gain", "self-discard", "target-discard", "sparse-shape"];

pub fn predicate(name: &str) -> Result<Arc<dyn EdgePredicate>> {
    Ok(match name {
        "never" => Arc::new(Never),
        "always" => Arc::new(Always),
        "length-gain" => Arc::new(LengthGain),
        "self-discard" => Arc::new(SelfDiscard),
        "target-discard" => Arc::new(TargetDiscard),
        "sparse-shape" => Arc::new(SparseShape),
        _ => {
            return Err(Error::UnknownName {
                kind: "predicate",
                name: name.into(),
                known: PREDICATES.join(", "),
            })
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn extension_pieces() {
        assert!(extension_minus_subtree(&bs("01"), &bs("0")).is_empty());
        assert_eq!(extension_minus_subtree(&bs("1"), &bs("0")), vec![Pattern::subtree(&bs("1"))]);
        assert_eq!(
            extension_minus_subtree(&bs("0"), &bs("010")),
            vec![Pattern::subtree(&bs("00")), Pattern::subtree(&bs("011"))]
        );
    }

    #[test]
    fn mirrors() {
        let m = mirror_pairs(&bs("010"), &bs("01000"), 2);
        assert_eq!(m.len(), 4);
        assert!(m.contains(&(bs("110"), bs("11000"))));
        assert_eq!(mirror_pairs(&bs("1"), &bs("100"), 0), vec![(bs("1"), bs("100"))]);
    }

    #[test]
    fn sparse_shape() {
        assert_eq!(SparseShape::shape(&bs("01"), 6), bs("011000"));
        assert!(predicate("bogus").is_err());
    }
}
