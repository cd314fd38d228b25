//! Binomials and k-subset enumeration.

use std::ops::ControlFlow;

use crate::groups::{Element, GroupSpec};

/// C(n, k), saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) is exact at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Lexicographic iterator over the k-subsets of `[0, n)`.
#[derive(Clone, Debug)]
pub struct Subsets {
    n: usize,
    cur: Vec<usize>,
    done: bool,
}

impl Subsets {
    pub fn new(n: usize, k: usize) -> Self {
        Subsets { n, cur: (0..k).collect(), done: k > n }
    }

    /// Current subset without advancing; `None` when exhausted.
    pub fn current(&self) -> Option<&[usize]> {
        (!self.done).then_some(&self.cur[..])
    }

    pub fn advance(&mut self) {
        let k = self.cur.len();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if self.cur[i] < self.n - k + i {
                self.cur[i] += 1;
                for j in i + 1..k {
                    self.cur[j] = self.cur[j - 1] + 1;
                }
                return;
            }
        }
        self.done = true;
    }
}

impl Iterator for Subsets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current()?.to_vec();
        self.advance();
        Some(out)
    }
}

/// Walks every k-subset of `elems` in lexicographic order, keeping running
/// partial sums so each step costs one group addition, and calls `f` on
/// each subset that sums to the identity. Returns the number of subsets
/// examined.
pub fn for_each_zero_sum<F>(spec: &GroupSpec, elems: &[Element], k: usize, mut f: F) -> u64
where
    F: FnMut(&[usize]) -> ControlFlow<()>,
{
    let r = elems.len();
    if k == 0 || k > r {
        return 0;
    }
    let mut idx = vec![0usize; k];
    let mut partial = vec![spec.identity(); k];
    let mut examined = 0u64;
    let _ = walk(spec, elems, k, 0, 0, &mut idx, &mut partial, &mut examined, &mut f);
    examined
}

#[allow(clippy::too_many_arguments)]
fn walk<F>(
    spec: &GroupSpec,
    elems: &[Element],
    k: usize,
    depth: usize,
    start: usize,
    idx: &mut [usize],
    partial: &mut [Element],
    examined: &mut u64,
    f: &mut F,
) -> ControlFlow<()>
where
    F: FnMut(&[usize]) -> ControlFlow<()>,
{
    let r = elems.len();
    if depth == k - 1 {
        let want = spec.neg(&partial[depth]);
        for j in start..r {
            *examined += 1;
            if elems[j] == want {
                idx[depth] = j;
                f(idx)?;
            }
        }
        return ControlFlow::Continue(());
    }
    for j in start..=r - (k - depth) {
        idx[depth] = j;
        partial[depth + 1] = spec.add(&partial[depth], &elems[j]);
        walk(spec, elems, k, depth + 1, j + 1, idx, partial, examined, f)?;
    }
    ControlFlow::Continue(())
}
