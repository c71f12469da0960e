use crate::error::{Error, Result};
use crate::exprjet::{Jet, ScalarField};
use std::fmt;
use std::sync::Arc;

pub type JetFn = dyn Fn(&[f64], usize) -> Result<Vec<Jet>> + Send + Sync;

/// Where the component functions of a field come from: closed-form
/// expressions, or a derived computation that produces jets on demand.
#[derive(Clone)]
pub enum Components {
    Fields(Vec<ScalarField>),
    Computed(Arc<JetFn>),
}

impl fmt::Debug for Components {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Components::Fields(v) => f.debug_list().entries(v.iter().map(|s| s.source())).finish(),
            Components::Computed(_) => f.write_str("Computed(..)"),
        }
    }
}

impl Components {
    pub fn computed(f: impl Fn(&[f64], usize) -> Result<Vec<Jet>> + Send + Sync + 'static) -> Self {
        Components::Computed(Arc::new(f))
    }

    pub fn jets(&self, point: &[f64], order: usize) -> Result<Vec<Jet>> {
        match self {
            Components::Fields(fs) => fs.iter().map(|f| f.eval_jet(point, order).map_err(Error::from)).collect(),
            Components::Computed(f) => f(point, order),
        }
    }

    pub fn values(&self, point: &[f64]) -> Result<Vec<f64>> {
        Ok(self.jets(point, 0)?.iter().map(Jet::value).collect())
    }

    pub fn fields(&self) -> Option<&[ScalarField]> {
        match self {
            Components::Fields(fs) => Some(fs),
            Components::Computed(_) => None,
        }
    }
}

/// Inverse of an `n x n` matrix of jets (row-major), by Gauss-Jordan with
/// partial pivoting on the values. `None` if singular at the base point.
pub fn jet_inverse(m: &[Jet], n: usize) -> Option<Vec<Jet>> {
    let proto = &m[0];
    let mut a: Vec<Jet> = m.to_vec();
    let mut inv: Vec<Jet> = (0..n * n)
        .map(|k| Jet::constant(proto.nvars(), proto.order(), if k / n == k % n { 1.0 } else { 0.0 }))
        .collect();
    let scale = m.iter().map(|j| j.value().abs()).fold(0.0, f64::max);
    for col in 0..n {
        let piv = (col..n).max_by(|&r, &s| a[r * n + col].value().abs().total_cmp(&a[s * n + col].value().abs()))?;
        if a[piv * n + col].value().abs() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
                inv.swap(piv * n + k, col * n + k);
            }
        }
        let r = a[col * n + col].recip()?;
        for k in 0..n {
            a[col * n + k] = a[col * n + k].mul_jet(&r);
            inv[col * n + k] = inv[col * n + k].mul_jet(&r);
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row * n + col].clone();
            if f.coefficients().iter().all(|&c| c == 0.0) {
                continue;
            }
            for k in 0..n {
                let t = f.mul_jet(&a[col * n + k]);
                a[row * n + k] = &a[row * n + k] - &t;
                let t = f.mul_jet(&inv[col * n + k]);
                inv[row * n + k] = &inv[row * n + k] - &t;
            }
        }
    }
    Some(inv)
}

/// Determinant of an `n x n` matrix of jets by elimination.
pub fn jet_det(m: &[Jet], n: usize) -> Jet {
    let proto = &m[0];
    let mut a: Vec<Jet> = m.to_vec();
    let mut det = Jet::constant(proto.nvars(), proto.order(), 1.0);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r, &s| a[r * n + col].value().abs().total_cmp(&a[s * n + col].value().abs()))
            .unwrap();
        if a[piv * n + col].value() == 0.0 {
            // singular at the base point: fall back to cofactor expansion
            return cofactor_det(m, n);
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
            }
            det = -det;
        }
        let p = a[col * n + col].clone();
        det = det.mul_jet(&p);
        let r = p.recip().unwrap();
        for row in col + 1..n {
            let f = a[row * n + col].mul_jet(&r);
            for k in col..n {
                let t = f.mul_jet(&a[col * n + k]);
                a[row * n + k] = &a[row * n + k] - &t;
            }
        }
    }
    det
}

fn cofactor_det(m: &[Jet], n: usize) -> Jet {
    if n == 1 {
        return m[0].clone();
    }
    let mut acc = Jet::constant(m[0].nvars(), m[0].order(), 0.0);
    for c in 0..n {
        let minor: Vec<Jet> = (1..n)
            .flat_map(|r| (0..n).filter(move |&k| k != c).map(move |k| (r, k)))
            .map(|(r, k)| m[r * n + k].clone())
            .collect();
        let term = m[c].mul_jet(&cofactor_det(&minor, n - 1));
        acc = if c % 2 == 0 { &acc + &term } else { &acc - &term };
    }
    acc
}

/// Row-major product of two `n x n` jet matrices.
pub fn jet_matmul(a: &[Jet], b: &[Jet], n: usize) -> Vec<Jet> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = a[i * n].mul_jet(&b[j]);
            for k in 1..n {
                acc = &acc + &a[i * n + k].mul_jet(&b[k * n + j]);
            }
            out.push(acc);
        }
    }
    out
}
