//! Level profiles: the distribution of frame mass over classes of vertices that no delay key,
//! edge target or query can tell apart. Each depth keeps one aggregate per class, so level
//! sums never enumerate the `2^n` vertices of a level.

use std::collections::HashMap;

use num_traits::{One, Zero};

use crate::network::{Network, Pattern, Tier};
use crate::rational::Q;

/// Sum, count and minimum of `R` over a set of vertices of one level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Agg {
    pub mass: Q,
    pub count: u128,
    pub min: Option<Q>,
}

impl Agg {
    pub fn empty() -> Agg {
        Agg {
            mass: Q::zero(),
            count: 0,
            min: None,
        }
    }

    pub fn merge(&mut self, other: &Agg) {
        self.mass += &other.mass;
        self.count += other.count;
        self.min = match (self.min.take(), &other.min) {
            (Some(a), Some(b)) => Some(if &a < b { a } else { b.clone() }),
            (a, b) => a.or_else(|| b.clone()),
        };
    }

    /// Minimum over the set, zero when empty.
    pub fn min_or_zero(&self) -> Q {
        self.min.clone().unwrap_or_else(Q::zero)
    }
}

#[derive(Clone, Debug)]
struct Feature {
    pattern: Pattern,
    /// Deepest level at which the feature still matters.
    last_level: usize,
    /// Extra-edge mass arriving at the single vertex the pattern names.
    inflow: Option<Q>,
}

type State = Vec<u32>;

#[derive(Debug)]
pub struct Profile {
    features: Vec<Feature>,
    by_start: Vec<Vec<u32>>,
    /// Per level: exceptions as (feature id or whole level, tier, value), then the default.
    level_delays: Vec<(Vec<(Option<u32>, Tier, Q)>, Q)>,
    layers: Vec<Vec<(State, Agg)>>,
}

impl Profile {
    pub fn build(net: &Network) -> Profile {
        let mut index: HashMap<Pattern, u32> = HashMap::new();
        let mut features: Vec<Feature> = Vec::new();
        let mut intern = |p: Pattern, level: usize, features: &mut Vec<Feature>| -> u32 {
            let id = *index.entry(p).or_insert_with(|| {
                features.push(Feature {
                    pattern: p,
                    last_level: level,
                    inflow: None,
                });
                (features.len() - 1) as u32
            });
            let f = &mut features[id as usize];
            f.last_level = f.last_level.max(level);
            id
        };
        let mut level_delays = Vec::new();
        for (t, table) in net.levels.iter().enumerate() {
            let mut ex = Vec::new();
            for e in &table.exceptions {
                let p = e.key.pattern();
                let id = if p.fixed.is_empty() {
                    None
                } else {
                    Some(intern(p, t, &mut features))
                };
                ex.push((id, e.key.tier(), e.value.clone()));
            }
            level_delays.push((ex, table.default.clone()));
        }
        let mut targets: Vec<_> = net.edges.iter().map(|e| e.to).collect();
        targets.sort();
        targets.dedup();
        for y in targets {
            let amount = net.inflow(&y);
            let id = intern(Pattern::vertex(&y), y.len(), &mut features);
            features[id as usize].inflow = Some(amount);
        }
        let max_depth = net.levels.len();
        let mut by_start = vec![Vec::new(); max_depth + 2];
        for (id, f) in features.iter().enumerate() {
            if f.pattern.free < by_start.len() {
                by_start[f.pattern.free].push(id as u32);
            }
        }
        let mut profile = Profile {
            features,
            by_start,
            level_delays,
            layers: Vec::new(),
        };
        let root = Agg {
            mass: Q::one(),
            count: 1,
            min: Some(Q::one()),
        };
        profile.layers.push(vec![(Vec::new(), root)]);
        for t in 0..max_depth {
            let next = profile.advance(&profile.layers[t], t, None);
            profile.layers.push(next);
        }
        profile
    }

    pub fn max_depth(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn class_count(&self, n: usize) -> usize {
        self.layers[n].len()
    }

    fn delay_of(&self, state: &State, t: usize) -> Q {
        let (ex, default) = &self.level_delays[t];
        let mut best: Option<(Tier, &Q)> = None;
        for (id, tier, v) in ex {
            let hit = match id {
                None => true,
                Some(id) => state.binary_search(id).is_ok(),
            };
            if hit && best.is_none_or(|(bt, _)| *tier < bt) {
                best = Some((*tier, v));
            }
        }
        best.map(|(_, v)| v.clone()).unwrap_or_else(|| default.clone())
    }

    /// Classes at depth `t+1` from classes at depth `t`; `forced` restricts the next bit.
    fn advance(&self, layer: &[(State, Agg)], t: usize, forced: Option<u8>) -> Vec<(State, Agg)> {
        let mut next: HashMap<State, Agg> = HashMap::new();
        let pos = t + 1;
        let two = Q::from_integer(2.into());
        for (state, agg) in layer {
            let s = self.delay_of(state, t);
            let factor = (Q::one() - s) / &two;
            for b in 0..2u8 {
                if forced.is_some_and(|f| f != b) {
                    continue;
                }
                let mut child: State = state
                    .iter()
                    .copied()
                    .filter(|&id| {
                        let f = &self.features[id as usize];
                        f.last_level >= pos && f.pattern.required(pos).is_none_or(|r| r == b)
                    })
                    .collect();
                if let Some(starting) = self.by_start.get(t) {
                    for &id in starting {
                        let f = &self.features[id as usize];
                        if f.last_level >= pos && f.pattern.required(pos) == Some(b) {
                            child.push(id);
                        }
                    }
                }
                child.sort_unstable();
                let mut inflow = Q::zero();
                for &id in &child {
                    let f = &self.features[id as usize];
                    if f.pattern.end() == pos {
                        if let Some(a) = &f.inflow {
                            inflow += a;
                        }
                    }
                }
                let mass = &agg.mass * &factor;
                let c = Agg {
                    mass: if inflow.is_zero() { mass } else { mass + &inflow * Q::from_integer(agg.count.into()) },
                    count: agg.count,
                    min: agg.min.as_ref().map(|m| m * &factor + &inflow),
                };
                next.entry(child).or_insert_with(Agg::empty).merge(&c);
            }
        }
        let mut out: Vec<_> = next.into_iter().collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    /// `Σ s(u) R(u)` over level `n`.
    pub fn delayed(&self, _net: &Network, n: usize) -> Q {
        let mut total = Q::zero();
        for (state, agg) in &self.layers[n] {
            let s = self.delay_of(state, n);
            if !s.is_zero() {
                total += s * &agg.mass;
            }
        }
        total
    }

    /// Aggregate of `R` over level-`n` vertices matching all patterns.
    pub fn aggregate(&self, _net: &Network, n: usize, patterns: &[Pattern]) -> Agg {
        assert!(n <= self.max_depth(), "level {n} is beyond the profile");
        let active: Vec<&Pattern> = patterns.iter().filter(|p| !p.fixed.is_empty()).collect();
        if active.iter().any(|p| p.end() > n) {
            return Agg::empty();
        }
        let mut required: HashMap<usize, u8> = HashMap::new();
        for p in &active {
            for t in p.free + 1..=p.end() {
                let b = p.required(t).unwrap();
                if *required.entry(t).or_insert(b) != b {
                    return Agg::empty();
                }
            }
        }
        let mut out = Agg::empty();
        let Some(start) = active.iter().map(|p| p.free).min() else {
            for (_, a) in &self.layers[n] {
                out.merge(a);
            }
            return out;
        };
        let mut layer = self.layers[start].clone();
        for t in start..n {
            layer = self.advance(&layer, t, required.get(&(t + 1)).copied());
        }
        for (_, a) in &layer {
            out.merge(a);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitseq::BitString;
    use crate::network::LevelTable;
    use crate::rational::q;

    #[test]
    fn uniform_profile_is_one_class() {
        let mut net = Network::new(1);
        for n in 1..=6 {
            net.push_level(LevelTable::uniform(crate::rational::level_default(n)));
        }
        net.with_profile(|p| {
            for n in 0..=6 {
                assert_eq!(p.class_count(n), 1);
            }
        });
        let a = net.aggregate(3, &[]);
        assert_eq!(a.count, 8);
        let half = net.aggregate(3, &[Pattern { free: 1, fixed: "1".parse::<BitString>().unwrap() }]);
        assert_eq!(half.mass * q(2, 1), a.mass);
    }
}
