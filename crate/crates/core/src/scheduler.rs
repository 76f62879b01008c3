//! Task streams and session starts.

use serde::{Deserialize, Serialize};

use crate::bitseq::{unpair_1, unpair_2};
use crate::network::ExtraEdge;

/// Which task (and second component) runs at each step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStream {
    /// `task(n) = [n]_1`.
    Flat,
    /// `task(n) = [[n]_1]_1`, second component `[[n]_1]_2`.
    Nested,
}

impl TaskStream {
    pub fn task(&self, n: usize) -> u64 {
        match self {
            TaskStream::Flat => unpair_1(n as u64),
            TaskStream::Nested => unpair_1(unpair_1(n as u64)),
        }
    }

    /// Subtask (or designated-vertex code) at step `n`.
    pub fn second(&self, n: usize) -> Option<u64> {
        match self {
            TaskStream::Flat => None,
            TaskStream::Nested => Some(unpair_2(unpair_1(n as u64))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
struct Mark {
    step: usize,
    task: u64,
    subtask: Option<u64>,
    to_len: usize,
}

/// Edge history across all networks, as far as session starts need it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Schedule {
    pub stream: TaskStream,
    marks: Vec<Mark>,
}

impl Schedule {
    pub fn new(stream: TaskStream) -> Schedule {
        Schedule {
            stream,
            marks: Vec::new(),
        }
    }

    pub fn record(&mut self, e: &ExtraEdge) {
        let m = Mark {
            step: e.step,
            task: e.task,
            subtask: e.subtask,
            to_len: e.to.len(),
        };
        if let Err(pos) = self.marks.binary_search(&m) {
            self.marks.insert(pos, m);
        }
    }

    pub fn task(&self, n: usize) -> u64 {
        self.stream.task(n)
    }

    pub fn second(&self, n: usize) -> Option<u64> {
        self.stream.second(n)
    }

    /// Highest edge target level among edges drawn before step `n` by tasks below `i`.
    fn barrier(&self, i: u64, n: usize, sub: Option<u64>) -> usize {
        self.marks
            .iter()
            .filter(|m| m.step < n)
            .filter(|m| m.task < i || (sub.is_some() && m.task == i && m.subtask.is_some() && m.subtask < sub))
            .map(|m| m.to_len)
            .max()
            .unwrap_or(0)
    }

    /// Session start `w(i, n)`, or `None` when no step qualifies.
    pub fn w_session(&self, i: u64, n: usize) -> Option<usize> {
        let b = self.barrier(i, n, None);
        (b + 1..=n).find(|&m| self.task(m) == i)
    }

    /// Sub-session start `w(i, k, n)`.
    pub fn w_subsession(&self, i: u64, k: u64, n: usize) -> Option<usize> {
        let b = self.barrier(i, n, Some(k));
        (b + 1..=n).find(|&m| self.task(m) == i && self.second(m) == Some(k))
    }

    /// Tasks that occur at some step `<= depth`.
    pub fn tasks_up_to(&self, depth: usize) -> Vec<u64> {
        let mut t: Vec<u64> = (1..=depth).map(|n| self.task(n)).collect();
        t.sort_unstable();
        t.dedup();
        t
    }

    /// Whether `w(i, ·)` keeps one value over the final quarter of a depth-`depth` run, including
    /// the state after its last step.
    pub fn stabilized(&self, i: u64, depth: usize) -> Option<usize> {
        let from = depth - depth / 4;
        let w = self.w_session(i, from)?;
        (from..=depth + 1).all(|n| self.w_session(i, n) == Some(w)).then_some(w)
    }

    /// Last step at which `w(i, ·)` changed value, up to `depth`.
    pub fn last_change(&self, i: u64, depth: usize) -> Option<usize> {
        let mut last = None;
        let mut prev = None;
        for n in 1..=depth {
            let w = self.w_session(i, n);
            if n > 1 && w != prev {
                last = Some(n);
            }
            prev = w;
        }
        last
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitseq::BitString;
    use num_traits::Zero;

    fn edge(task: u64, subtask: Option<u64>, to_len: usize, step: usize) -> ExtraEdge {
        ExtraEdge {
            network: 1,
            from: BitString::EMPTY,
            to: BitString::zeros(to_len),
            q: crate::rational::Q::zero(),
            task,
            subtask,
            step,
            w: 1,
            mirror_free: 0,
        }
    }

    #[test]
    fn streams() {
        let flat: Vec<u64> = (1..=10).map(|n| TaskStream::Flat.task(n)).collect();
        assert_eq!(flat, vec![1, 1, 2, 1, 2, 3, 1, 2, 3, 4]);
        for (stream, top) in [(TaskStream::Flat, 20), (TaskStream::Nested, 10)] {
            let seen: std::collections::BTreeSet<u64> = (1..=10_000).map(|n| stream.task(n)).collect();
            assert!((1..=top).all(|i| seen.contains(&i)));
        }
        let pairs: std::collections::BTreeSet<(u64, u64)> = (1..=20_000)
            .map(|n| (TaskStream::Nested.task(n), TaskStream::Nested.second(n).unwrap()))
            .collect();
        assert!((1..=5).all(|i| (1..=5).all(|k| pairs.contains(&(i, k)))));
    }

    #[test]
    fn session_starts() {
        let mut s = Schedule::new(TaskStream::Flat);
        assert_eq!(s.w_session(2, 10), Some(3));
        assert_eq!(s.w_session(4, 9), None);
        s.record(&edge(1, None, 5, 5));
        assert_eq!(s.w_session(2, 5), Some(3));
        assert_eq!(s.w_session(2, 6), None);
        assert!(s.w_session(2, 10).unwrap() > 5);
        let mut prev = 0;
        for n in 1..40 {
            if let Some(w) = s.w_session(2, n) {
                assert!(w >= prev);
                prev = w;
            }
        }
    }

    #[test]
    fn subsession_starts() {
        let mut s = Schedule::new(TaskStream::Nested);
        let n = 200;
        for k in 1..=3 {
            if let (Some(a), Some(b)) = (s.w_subsession(1, k, n), s.w_session(1, n)) {
                assert!(a >= b);
            }
        }
        s.record(&edge(1, Some(1), 9, 9));
        assert!(s.w_subsession(1, 2, n).unwrap() > 9);
        assert_eq!(s.w_session(1, n), Some(1));
    }
}
