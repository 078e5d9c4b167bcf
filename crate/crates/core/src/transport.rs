//! Optimal transport between distributions on the ordered classes `1..=k`.
//!
//! Ground cost is `d(i, j) = |i - j|^m` with `m >= 1`. Three routes are
//! provided:
//!
//! - [`ot_dirac`]: one side is a point mass at the true class, so every unit
//!   of predicted mass must travel to it: `sum_i q_i d(i, j)`.
//! - [`ot_cmf_l1`]: for `m = 1` on an ordered support the transport cost is
//!   the l1 distance between cumulative mass functions, for any target.
//! - [`ot_lp_oracle`]: the exact solution of the transport program for small
//!   `k`, using the monotone (north-west corner) coupling of the two CMFs,
//!   which is optimal for every convex cost of `|i - j|`. It exists to
//!   cross-check the other two.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::prob::{cmf, LabelSpace, ProbVector};
use crate::tol::{ORACLE_MAX_K, SUM_TOL};

/// The ground cost `|i - j|^m` between classes of a `k`-class space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundCost {
    m: f64,
    k: usize,
}

impl GroundCost {
    pub fn new(m: f64, k: usize) -> Result<Self> {
        if !(m >= 1.0 && m.is_finite()) {
            return Err(domain(format!("cost exponent must be finite and >= 1, got {m}")));
        }
        LabelSpace::new(k)?;
        Ok(Self { m, k })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Cost between 1-based classes.
    pub fn cost(&self, i: usize, j: usize) -> f64 {
        let d = i.abs_diff(j) as f64;
        if self.m == 1.0 {
            d
        } else {
            d.powf(self.m)
        }
    }

    /// Costs of moving one unit from each class to `j`; also the gradient
    /// of [`ot_dirac`] with respect to the predicted vector.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (1..=self.k).map(|i| self.cost(i, j)).collect()
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k != self.k {
            return Err(Error::LengthMismatch(k, self.k));
        }
        Ok(())
    }
}

/// A coupling of two marginals: `gamma[i][j]` is the mass moved from class
/// `i + 1` of the source to class `j + 1` of the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    gamma: Vec<Vec<f64>>,
}

impl TransportPlan {
    pub fn gamma(&self) -> &[Vec<f64>] {
        &self.gamma
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.gamma.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let k = self.gamma.len();
        (0..k).map(|j| self.gamma.iter().map(|r| r[j]).sum()).collect()
    }

    pub fn cost(&self, cost: &GroundCost) -> f64 {
        let mut total = 0.0;
        for (i, row) in self.gamma.iter().enumerate() {
            for (j, &g) in row.iter().enumerate() {
                total += g * cost.cost(i + 1, j + 1);
            }
        }
        total
    }

    /// Checks nonnegativity and both marginals to within `1e-9`.
    pub fn is_coupling_of(&self, p: &[f64], q: &[f64]) -> bool {
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= SUM_TOL);
        self.gamma.iter().flatten().all(|&g| g >= 0.0)
            && close(&self.row_sums(), p)
            && close(&self.col_sums(), q)
    }
}

/// Transport cost from `q` to a point mass at class `j`.
pub fn ot_dirac(q: &ProbVector, j: usize, cost: &GroundCost) -> Result<f64> {
    cost.check_k(q.k())?;
    LabelSpace::new(q.k())?.check(j)?;
    Ok(q.as_slice()
        .iter()
        .enumerate()
        .map(|(i, &qi)| qi * cost.cost(i + 1, j))
        .sum())
}

/// `||CMF(p) - CMF(q)||_1`, the `m = 1` transport cost for arbitrary targets.
pub fn ot_cmf_l1(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    if p.k() != q.k() {
        return Err(Error::LengthMismatch(p.k(), q.k()));
    }
    Ok(cmf_l1(p.as_slice(), q.as_slice()))
}

pub(crate) fn cmf_l1(p: &[f64], q: &[f64]) -> f64 {
    cmf(p).iter().zip(cmf(q)).map(|(a, b)| (a - b).abs()).sum()
}

/// Subgradient of [`ot_cmf_l1`] with respect to `p`.
///
/// The last CMF entry is 1 on both sides for any valid pair and is left out,
/// so round-off there does not leak into the gradient.
pub fn ot_cmf_l1_grad(p: &[f64], q: &[f64]) -> Vec<f64> {
    let k = p.len();
    let (cp, cq) = (cmf(p), cmf(q));
    let mut grad = vec![0.0; k];
    let mut acc = 0.0;
    for l in (0..k - 1).rev() {
        let d = cp[l] - cq[l];
        acc += if d > 0.0 {
            1.0
        } else if d < 0.0 {
            -1.0
        } else {
            0.0
        };
        grad[l] = acc;
    }
    grad
}

/// Exact transport value and an optimal plan for `k <= 16`.
///
/// Walks both distributions from class 1 upward, always shipping as much as
/// possible from the current source class to the current target class.
pub fn ot_lp_oracle(
    p: &ProbVector,
    q: &ProbVector,
    cost: &GroundCost,
) -> Result<(f64, TransportPlan)> {
    let k = p.k();
    if q.k() != k {
        return Err(Error::LengthMismatch(k, q.k()));
    }
    cost.check_k(k)?;
    if k > ORACLE_MAX_K {
        return Err(domain(format!(
            "transport oracle is limited to k <= {ORACLE_MAX_K}, got {k}"
        )));
    }
    let mut supply = p.as_slice().to_vec();
    let mut demand = q.as_slice().to_vec();
    let mut gamma = vec![vec![0.0; k]; k];
    let (mut i, mut j) = (0, 0);
    while i < k && j < k {
        let moved = supply[i].min(demand[j]);
        gamma[i][j] += moved;
        supply[i] -= moved;
        demand[j] -= moved;
        // advance whichever side is exhausted; on a tie, the source
        if supply[i] <= demand[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    // round-off residue of the source goes to the last target class
    for r in i..k {
        if supply[r] > 0.0 {
            gamma[r][k - 1] += supply[r];
        }
    }
    let plan = TransportPlan { gamma };
    Ok((plan.cost(cost), plan))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: &[f64]) -> ProbVector {
        ProbVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn dirac_examples() {
        let c1 = GroundCost::new(1.0, 3).unwrap();
        let c2 = GroundCost::new(2.0, 3).unwrap();
        let q = pv(&[0.7, 0.2, 0.1]);
        assert!((ot_dirac(&q, 1, &c1).unwrap() - 0.4).abs() < 1e-12);
        assert!((ot_dirac(&q, 1, &c2).unwrap() - 0.6).abs() < 1e-12);
        for j in 1..=3 {
            let onehot = ProbVector::one_hot(j, 3).unwrap();
            assert_eq!(ot_dirac(&onehot, j, &c2).unwrap(), 0.0);
        }
        assert!(matches!(ot_dirac(&q, 4, &c1), Err(Error::Domain(_))));
        assert!(matches!(ot_dirac(&q, 0, &c1), Err(Error::Domain(_))));
    }

    #[test]
    fn cmf_examples() {
        let p = ProbVector::one_hot(2, 3).unwrap();
        let q = pv(&[0.2, 0.5, 0.3]);
        assert!((ot_cmf_l1(&p, &q).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(ot_cmf_l1(&q, &q).unwrap(), 0.0);
        let a = ProbVector::one_hot(1, 3).unwrap();
        let b = ProbVector::one_hot(3, 3).unwrap();
        assert!((ot_cmf_l1(&a, &b).unwrap() - 2.0).abs() < 1e-12);
        assert!(ot_cmf_l1(&a, &ProbVector::uniform(4).unwrap()).is_err());
    }

    #[test]
    fn oracle_examples() {
        let c1 = GroundCost::new(1.0, 3).unwrap();
        let q = pv(&[0.7, 0.2, 0.1]);
        let (v, plan) = ot_lp_oracle(&q, &q, &c1).unwrap();
        assert!(v.abs() < 1e-12);
        for i in 0..3 {
            assert!((plan.gamma()[i][i] - q.as_slice()[i]).abs() < 1e-12);
        }
        let p = ProbVector::one_hot(1, 3).unwrap();
        let (v, plan) = ot_lp_oracle(&p, &q, &c1).unwrap();
        assert!((v - 0.4).abs() < 1e-12);
        assert!(plan.is_coupling_of(p.as_slice(), q.as_slice()));

        let c = GroundCost::new(1.0, 2).unwrap();
        let (v, _) = ot_lp_oracle(&pv(&[0.5, 0.5]), &pv(&[0.0, 1.0]), &c).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn oracle_refuses_large_k() {
        let k = ORACLE_MAX_K + 1;
        let u = ProbVector::uniform(k).unwrap();
        let c = GroundCost::new(1.0, k).unwrap();
        assert!(ot_lp_oracle(&u, &u, &c).is_err());
    }

    #[test]
    fn ground_cost_validation() {
        assert!(GroundCost::new(0.5, 3).is_err());
        assert!(GroundCost::new(f64::NAN, 3).is_err());
        assert!(GroundCost::new(1.0, 1).is_err());
        let c = GroundCost::new(2.0, 5).unwrap();
        assert_eq!(c.cost(1, 4), 9.0);
        assert_eq!(c.cost(4, 1), 9.0);
        assert_eq!(c.cost(3, 3), 0.0);
        assert_eq!(c.column(2), vec![1.0, 0.0, 1.0, 4.0, 9.0]);
    }

    #[test]
    fn cmf_grad_matches_differences() {
        let p = [0.1, 0.3, 0.2, 0.4];
        let q = [0.3, 0.1, 0.5, 0.1];
        let g = ot_cmf_l1_grad(&p, &q);
        let h = 1e-7;
        for i in 0..4 {
            let mut pp = p;
            pp[i] += h;
            let mut pm = p;
            pm[i] -= h;
            // exclude the constant last CMF term from the reference
            let f = |x: &[f64]| {
                let (a, b) = (cmf(x), cmf(&q));
                (0..3).map(|l| (a[l] - b[l]).abs()).sum::<f64>()
            };
            let fd = (f(&pp) - f(&pm)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6, "i={i} fd={fd} g={}", g[i]);
        }
    }
}
