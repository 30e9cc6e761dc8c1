use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{CMatrix, ONE, ZERO};

/// Polynomial with complex coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&ZERO) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(ZERO);
        }
        Self { coeffs }
    }

    /// Monic polynomial `Π (z − r)` over the given roots (repeats allowed).
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut coeffs = vec![ONE];
        for &r in roots {
            let mut next = vec![ZERO; coeffs.len() + 1];
            for (i, &c) in coeffs.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= r * c;
            }
            coeffs = next;
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// `p(A)` for a square matrix by Horner's rule.
    pub fn eval_matrix(&self, a: &CMatrix) -> CMatrix {
        assert!(a.is_square(), "polynomial of a non-square matrix");
        let n = a.nrows();
        let mut acc = CMatrix::zeros(n, n);
        for &c in self.coeffs.iter().rev() {
            acc = a * acc;
            for i in 0..n {
                acc[(i, i)] += c;
            }
        }
        acc
    }
}

/// Distinct roots with multiplicities, in first-seen order.
pub fn group_roots(roots: &[Complex64]) -> Vec<(Complex64, usize)> {
    let mut grouped: Vec<(Complex64, usize)> = Vec::new();
    for &r in roots {
        match grouped.iter_mut().find(|(g, _)| *g == r) {
            Some((_, m)) => *m += 1,
            None => grouped.push((r, 1)),
        }
    }
    grouped
}
