use crate::error::{Error, Result};
use std::sync::Arc;

/// A coordinate chart with a rectangular domain.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    coords: Arc<[String]>,
    domain: Vec<(f64, f64)>,
}

impl Chart {
    pub fn new(coords: Vec<String>, domain: Vec<(f64, f64)>) -> Result<Self> {
        let n = coords.len();
        if !(2..=8).contains(&n) {
            return Err(Error::Dimension { expected: "2..=8".into(), found: n });
        }
        if domain.len() != n {
            return Err(Error::Invalid(format!("{} coordinates but {} domain intervals", n, domain.len())));
        }
        for (i, c) in coords.iter().enumerate() {
            if coords[..i].contains(c) {
                return Err(Error::Invalid(format!("duplicate coordinate `{c}`")));
            }
        }
        if let Some((i, _)) = domain.iter().enumerate().find(|(_, (a, b))| !(a <= b)) {
            return Err(Error::Invalid(format!("empty domain interval for `{}`", coords[i])));
        }
        Ok(Self { coords: coords.into(), domain })
    }

    /// Chart with coordinates named `x1..xn` on `[-r, r]^n`.
    pub fn cube(n: usize, r: f64) -> Result<Self> {
        let names = match n {
            2 => vec!["x".to_string(), "y".to_string()],
            3 => vec!["x".to_string(), "y".to_string(), "z".to_string()],
            _ => (1..=n).map(|i| format!("x{i}")).collect(),
        };
        Self::new(names, vec![(-r, r); n])
    }

    pub fn with_domain(&self, domain: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(self.coords.to_vec(), domain)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &Arc<[String]> {
        &self.coords
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().zip(&self.domain).all(|(x, (a, b))| *a <= *x && *x <= *b)
    }

    pub fn check(&self, p: &[f64]) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::OutsideDomain { point: p.to_vec() })
        }
    }

    pub fn center(&self) -> Vec<f64> {
        self.domain.iter().map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Same coordinates and dimension (domains may differ).
    pub fn compatible(&self, other: &Chart) -> bool {
        self.coords == other.coords
    }

    pub fn ensure_compatible(&self, other: &Chart) -> Result<()> {
        if self.compatible(other) {
            Ok(())
        } else {
            Err(Error::ChartMismatch(format!("{:?} vs {:?}", self.coords, other.coords)))
        }
    }

    /// Regular grid with `per_axis` points along every coordinate (inclusive ends).
    pub fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let n = self.dim();
        let axis: Vec<Vec<f64>> = self
            .domain
            .iter()
            .map(|(a, b)| {
                if per_axis <= 1 {
                    vec![0.5 * (a + b)]
                } else {
                    (0..per_axis).map(|k| a + (b - a) * k as f64 / (per_axis - 1) as f64).collect()
                }
            })
            .collect();
        let total = axis.iter().map(Vec::len).product();
        let mut out = Vec::with_capacity(total);
        for mut flat in 0..total {
            let mut p = vec![0.0; n];
            for d in (0..n).rev() {
                let len = axis[d].len();
                p[d] = axis[d][flat % len];
                flat /= len;
            }
            out.push(p);
        }
        out
    }
}
