use std::rc::Rc;

/// Sparse copy of a feature vector. One-hot blocks make most entries zero.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SparseVec {
    idx: Vec<u32>,
    val: Vec<f64>,
}

impl SparseVec {
    pub fn from_dense(x: &[f64]) -> Self {
        let mut idx = Vec::new();
        let mut val = Vec::new();
        for (i, v) in x.iter().enumerate() {
            if *v != 0.0 {
                idx.push(i as u32);
                val.push(*v);
            }
        }
        Self { idx, val }
    }

    /// Squared Euclidean distance, summed term by term.
    pub fn sq_dist(&self, other: &SparseVec) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut sum = 0.0;
        while a < self.idx.len() && b < other.idx.len() {
            match self.idx[a].cmp(&other.idx[b]) {
                std::cmp::Ordering::Equal => {
                    let d = self.val[a] - other.val[b];
                    sum += d * d;
                    a += 1;
                    b += 1;
                }
                std::cmp::Ordering::Less => {
                    sum += self.val[a] * self.val[a];
                    a += 1;
                }
                std::cmp::Ordering::Greater => {
                    sum += other.val[b] * other.val[b];
                    b += 1;
                }
            }
        }
        sum += self.val[a..].iter().map(|v| v * v).sum::<f64>();
        sum += other.val[b..].iter().map(|v| v * v).sum::<f64>();
        sum
    }

    pub fn rbf(&self, other: &SparseVec, gamma: f64) -> f64 {
        (-gamma * self.sq_dist(other)).exp()
    }

    pub fn sq_norm(&self) -> f64 {
        self.val.iter().map(|v| v * v).sum()
    }

    fn dim(&self) -> usize {
        self.idx.last().map_or(0, |&i| i as usize + 1)
    }
}

/// Least-recently-used cache of kernel matrix rows.
///
/// Rows are filled by scattering the query vector into a dense buffer and
/// using `|a - b|^2 = |a|^2 + |b|^2 - 2 a.b`, which avoids a sorted merge per
/// entry.
pub(crate) struct KernelCache<'a> {
    x: &'a [SparseVec],
    gamma: f64,
    norms: Vec<f64>,
    dense: Vec<f64>,
    rows: Vec<Option<Rc<[f64]>>>,
    last_used: Vec<u64>,
    cached: Vec<usize>,
    clock: u64,
    capacity: usize,
}

impl<'a> KernelCache<'a> {
    pub fn new(x: &'a [SparseVec], gamma: f64, budget_bytes: usize) -> Self {
        let row_bytes = (x.len() * std::mem::size_of::<f64>()).max(1);
        Self {
            x,
            gamma,
            norms: x.iter().map(SparseVec::sq_norm).collect(),
            dense: vec![0.0; x.iter().map(SparseVec::dim).max().unwrap_or(0)],
            rows: vec![None; x.len()],
            last_used: vec![0; x.len()],
            cached: Vec::new(),
            clock: 0,
            capacity: (budget_bytes / row_bytes).max(2),
        }
    }

    pub fn row(&mut self, i: usize) -> Rc<[f64]> {
        self.clock += 1;
        self.last_used[i] = self.clock;
        if let Some(r) = &self.rows[i] {
            return Rc::clone(r);
        }
        if self.cached.len() >= self.capacity {
            let (slot, _) =
                self.cached.iter().enumerate().min_by_key(|(_, &r)| self.last_used[r]).expect("cache is full");
            let old = self.cached.swap_remove(slot);
            self.rows[old] = None;
        }
        let xi = &self.x[i];
        for (&j, &v) in xi.idx.iter().zip(&xi.val) {
            self.dense[j as usize] = v;
        }
        let ni = self.norms[i];
        let dense = &self.dense;
        let row: Rc<[f64]> = self
            .x
            .iter()
            .zip(&self.norms)
            .enumerate()
            .map(|(t, (xt, nt))| {
                if t == i {
                    return 1.0;
                }
                let dot: f64 = xt.idx.iter().zip(&xt.val).map(|(&j, &v)| dense[j as usize] * v).sum();
                (-self.gamma * (ni + nt - 2.0 * dot).max(0.0)).exp()
            })
            .collect();
        for &j in &xi.idx {
            self.dense[j as usize] = 0.0;
        }
        self.rows[i] = Some(Rc::clone(&row));
        self.cached.push(i);
        row
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_distance_matches_dense() {
        let a = [0.0, 1.0, 0.5, 0.0, 0.25];
        let b = [1.0, 1.0, 0.0, 0.0, 0.75];
        let dense: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
        let d = SparseVec::from_dense(&a).sq_dist(&SparseVec::from_dense(&b));
        assert_eq!(d, dense);
        assert_eq!(SparseVec::from_dense(&a).sq_dist(&SparseVec::from_dense(&a)), 0.0);
    }

    #[test]
    fn cache_evicts_but_recomputes_identically() {
        let xs: Vec<SparseVec> = (0..5).map(|i| SparseVec::from_dense(&[i as f64, 1.0])).collect();
        let mut cache = KernelCache::new(&xs, 0.5, 0);
        let first = cache.row(0);
        for i in 1..5 {
            cache.row(i);
        }
        assert_eq!(&*cache.row(0), &*first);
        assert_eq!(first[0], 1.0);
    }

    #[test]
    fn cached_rows_match_direct_evaluation() {
        let xs: Vec<SparseVec> = (0..6)
            .map(|i| SparseVec::from_dense(&[(i % 2) as f64, 0.0, i as f64 * 0.3, 1.0 - (i % 3) as f64]))
            .collect();
        let mut cache = KernelCache::new(&xs, 0.7, 1 << 20);
        for i in 0..6 {
            let row = cache.row(i);
            for t in 0..6 {
                assert!((row[t] - xs[i].rbf(&xs[t], 0.7)).abs() < 1e-14);
            }
        }
    }
}
