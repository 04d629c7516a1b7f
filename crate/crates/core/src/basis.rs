//! Monomial basis of degrees `1..=n` (no constant term).
//!
//! Ordering is degree-major. Within a degree the pure powers come first in
//! axis order, followed by mixed terms in descending lexicographic order of
//! their exponents, so in 3D the quadratic block reads
//! `x², y², z², xy, xz, yz`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialBasis {
    order: usize,
    dim: usize,
    exponents: Vec<Vec<u32>>,
}

/// `(n + d)! / (n! d!) - 1`.
pub fn basis_size(order: usize, dim: usize) -> usize {
    let mut c: usize = 1;
    for k in 1..=dim {
        c = c * (order + k) / k;
    }
    c - 1
}

fn exponents_of_degree(dim: usize, degree: u32) -> Vec<Vec<u32>> {
    fn rec(dim: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == dim {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=left).rev() {
            prefix.push(e);
            rec(dim, left - e, prefix, out);
            prefix.pop();
        }
    }
    let mut all = Vec::new();
    rec(dim, degree, &mut Vec::new(), &mut all);
    let (mut pure, mixed): (Vec<_>, Vec<_>) = all
        .into_iter()
        .partition(|e| e.iter().filter(|&&v| v > 0).count() == 1);
    // descending lex puts x^k first already; keep axis order for pure powers
    pure.sort_by_key(|e| e.iter().position(|&v| v > 0));
    pure.extend(mixed);
    pure
}

impl MonomialBasis {
    pub fn new(order: usize, dim: usize) -> Result<Self> {
        if !(1..=3).contains(&order) {
            return Err(Error::InvalidArgument(format!("polynomial order must be 1, 2 or 3, got {order}")));
        }
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let exponents = (1..=order as u32)
            .flat_map(|deg| exponents_of_degree(dim, deg))
            .collect::<Vec<_>>();
        debug_assert_eq!(exponents.len(), basis_size(order, dim));
        Ok(Self { order, dim, exponents })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.exponents.len()
    }

    pub fn exponents(&self) -> &[Vec<u32>] {
        &self.exponents
    }

    /// `Q(xi)`.
    pub fn eval(&self, xi: &[f64]) -> Vec<f64> {
        debug_assert_eq!(xi.len(), self.dim);
        self.exponents
            .iter()
            .map(|e| e.iter().zip(xi).map(|(&p, &x)| x.powi(p as i32)).product())
            .collect()
    }

    /// Columns pick the degree-1 monomials: column `j` is the unit vector at
    /// the row of `xi_j`.
    pub fn gradient_selector(&self) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.size(), self.dim);
        for j in 0..self.dim {
            s[(j, j)] = 1.0;
        }
        s
    }
}

/// Convenience wrapper over [`MonomialBasis::eval`].
pub fn monomial_basis_eval(xi: &[f64], order: usize, dim: usize) -> Result<Vec<f64>> {
    if xi.len() != dim {
        return Err(Error::InvalidArgument(format!("expected {dim} components, got {}", xi.len())));
    }
    Ok(MonomialBasis::new(order, dim)?.eval(xi))
}

/// Convenience wrapper over [`MonomialBasis::gradient_selector`].
pub fn gradient_selector(order: usize, dim: usize) -> Result<DMatrix<f64>> {
    Ok(MonomialBasis::new(order, dim)?.gradient_selector())
}
