/// Numeric components of a tensor at a single point.
///
/// Indices are stored upper first, then lower, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PointTensor {
    n: usize,
    upper: usize,
    lower: usize,
    data: Vec<f64>,
}

impl PointTensor {
    pub fn zeros(n: usize, upper: usize, lower: usize) -> Self {
        Self { n, upper, lower, data: vec![0.0; n.pow((upper + lower) as u32)] }
    }

    pub fn from_vec(n: usize, upper: usize, lower: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n.pow((upper + lower) as u32), "component count does not match valence");
        Self { n, upper, lower, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn valence(&self) -> (usize, usize) {
        (self.upper, self.lower)
    }

    pub fn rank(&self) -> usize {
        self.upper + self.lower
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.flat_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let k = self.flat_index(idx);
        self.data[k] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &PointTensor) -> f64 {
        assert_eq!(self.data.len(), other.data.len());
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn indices(&self) -> IndexIter {
        IndexIter::new(self.n, self.rank())
    }
}

/// Iterates all multi-indices of a given length over `0..n`, last index fastest.
pub struct IndexIter {
    n: usize,
    cur: Vec<usize>,
    done: bool,
}

impl IndexIter {
    pub fn new(n: usize, len: usize) -> Self {
        Self { n, cur: vec![0; len], done: n == 0 }
    }
}

impl Iterator for IndexIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.cur.clone();
        let mut k = self.cur.len();
        loop {
            if k == 0 {
                self.done = true;
                break;
            }
            k -= 1;
            self.cur[k] += 1;
            if self.cur[k] < self.n {
                break;
            }
            self.cur[k] = 0;
        }
        Some(out)
    }
}
