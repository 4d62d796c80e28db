//! Standing assumptions on a model: the zero symbol must be distinguishable
//! at the warden, every output law must be absolutely continuous w.r.t. the
//! one produced by `x0`, and user 2 must be a degraded version of user 1.

use serde::Serialize;

use crate::channel_model::{BcWardenModel, Channel};
use crate::error::{CovertError, Result};
use crate::lp::l1_feasibility;

/// Constraint tolerance for the linear feasibility programs.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// `Q0` is outside the convex hull of the other warden rows.
    NonRedundant,
    /// Every warden row is absolutely continuous w.r.t. `Q0`.
    WardenContinuity,
    User1Continuity,
    User2Continuity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub condition: Condition,
    /// Offending input symbol. For the hull condition this is `x0` itself.
    pub input: usize,
    /// Offending output symbol, when the violation is about supports.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionsReport {
    pub cond_a: bool,
    pub cond_b: bool,
    pub cond_c_user1: bool,
    pub cond_c_user2: bool,
    pub violations: Vec<Violation>,
}

impl ConditionsReport {
    pub fn all_hold(&self) -> bool {
        self.cond_a && self.cond_b && self.cond_c_user1 && self.cond_c_user2
    }
}

pub fn check_conditions(model: &BcWardenModel) -> ConditionsReport {
    let x0 = model.x0();
    let mut violations = Vec::new();

    let in_hull = null_row_in_hull(model.q(), x0);
    if in_hull {
        violations.push(Violation {
            condition: Condition::NonRedundant,
            input: x0,
            output: None,
        });
    }
    let before = violations.len();
    support_violations(model.q(), x0, Condition::WardenContinuity, &mut violations);
    let cond_b = violations.len() == before;
    let before = violations.len();
    support_violations(model.p1(), x0, Condition::User1Continuity, &mut violations);
    let cond_c_user1 = violations.len() == before;
    let before = violations.len();
    support_violations(model.p2(), x0, Condition::User2Continuity, &mut violations);
    let cond_c_user2 = violations.len() == before;

    ConditionsReport {
        cond_a: !in_hull,
        cond_b,
        cond_c_user1,
        cond_c_user2,
        violations,
    }
}

/// Exact-zero support test: `row(x)(y) > 0` where `row(x0)(y) = 0`.
fn support_violations(ch: &Channel, x0: usize, condition: Condition, out: &mut Vec<Violation>) {
    let base = ch.row(x0);
    for x in (0..ch.inputs()).filter(|&x| x != x0) {
        for (y, (&p, &b)) in ch.row(x).iter().zip(base).enumerate() {
            if p > 0.0 && b == 0.0 {
                out.push(Violation {
                    condition,
                    input: x,
                    output: Some(y),
                });
            }
        }
    }
}

/// Is row `x0` a convex combination of the other rows (within tolerance)?
pub fn null_row_in_hull(q: &Channel, x0: usize) -> bool {
    let others: Vec<usize> = (0..q.inputs()).filter(|&x| x != x0).collect();
    if others.is_empty() {
        return false;
    }
    let mut a: Vec<Vec<f64>> = (0..q.outputs())
        .map(|z| others.iter().map(|&x| q.row(x)[z]).collect())
        .collect();
    let mut b: Vec<f64> = q.row(x0).to_vec();
    a.push(vec![1.0; others.len()]);
    b.push(1.0);
    l1_feasibility(&a, &b).is_feasible(FEASIBILITY_TOL)
}

/// Outcome of searching for `W` with `P1 · W = P2`.
#[derive(Debug, Clone, Serialize)]
pub struct DegradationCertificate {
    pub feasible: bool,
    /// Row-stochastic witness, present iff `feasible`.
    pub w: Option<Channel>,
    /// For a witness: max-abs entry of `P1 · W − P2`. Otherwise the minimal
    /// ℓ₁ violation of the linear system, which is what proves infeasibility.
    pub residual: f64,
}

pub fn find_degrading_channel(p1: &Channel, p2: &Channel) -> Result<DegradationCertificate> {
    if p1.inputs() != p2.inputs() {
        return Err(CovertError::DimensionMismatch {
            what: "degradation input alphabets",
            expected: p1.inputs(),
            found: p2.inputs(),
        });
    }
    let (ny1, ny2) = (p1.outputs(), p2.outputs());
    let var = |a: usize, b: usize| a * ny2 + b;
    let mut rows = Vec::with_capacity(p1.inputs() * ny2 + ny1);
    let mut rhs = Vec::with_capacity(rows.capacity());
    for x in 0..p1.inputs() {
        for b in 0..ny2 {
            let mut row = vec![0.0; ny1 * ny2];
            for a in 0..ny1 {
                row[var(a, b)] = p1.row(x)[a];
            }
            rows.push(row);
            rhs.push(p2.row(x)[b]);
        }
    }
    for a in 0..ny1 {
        let mut row = vec![0.0; ny1 * ny2];
        for b in 0..ny2 {
            row[var(a, b)] = 1.0;
        }
        rows.push(row);
        rhs.push(1.0);
    }

    let fit = l1_feasibility(&rows, &rhs);
    if !fit.is_feasible(FEASIBILITY_TOL) {
        return Ok(DegradationCertificate {
            feasible: false,
            w: None,
            residual: fit.residual,
        });
    }
    let w_rows: Vec<Vec<f64>> = fit
        .x
        .chunks(ny2)
        .map(|chunk| {
            let clamped: Vec<f64> = chunk.iter().map(|v| v.max(0.0)).collect();
            let s: f64 = clamped.iter().sum();
            clamped.into_iter().map(|v| v / s).collect()
        })
        .collect();
    let w = Channel::from_rows(w_rows)?;
    let composed = p1.compose(&w)?;
    let residual = composed
        .max_abs_diff(p2)
        .expect("composition keeps the shape of P2");
    Ok(DegradationCertificate {
        feasible: true,
        w: Some(w),
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{example1_model, example1_p1, example1_p2};

    fn model(p1: Vec<Vec<f64>>, p2: Vec<Vec<f64>>, q: Vec<Vec<f64>>) -> BcWardenModel {
        BcWardenModel::new(
            Channel::from_rows(p1).unwrap(),
            Channel::from_rows(p2).unwrap(),
            Channel::from_rows(q).unwrap(),
            0,
        )
        .unwrap()
    }

    #[test]
    fn example1_satisfies_everything() {
        let report = check_conditions(&example1_model());
        assert!(report.all_hold(), "{report:?}");
        assert!(report.violations.is_empty());
    }

    #[test]
    fn identical_warden_rows_are_redundant() {
        let row = vec![0.3, 0.7];
        let m = model(
            vec![vec![0.9, 0.1], vec![0.2, 0.8]],
            vec![vec![0.8, 0.2], vec![0.3, 0.7]],
            vec![row.clone(), row],
        );
        let report = check_conditions(&m);
        assert!(!report.cond_a);
        assert!(report.cond_b);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].condition, Condition::NonRedundant);
    }

    #[test]
    fn support_violation_on_user1() {
        let m = model(
            vec![vec![1.0, 0.0, 0.0], vec![0.5, 0.5, 0.0]],
            vec![vec![0.5, 0.5], vec![0.4, 0.6]],
            vec![vec![0.5, 0.5], vec![0.1, 0.9]],
        );
        let report = check_conditions(&m);
        assert!(!report.cond_c_user1);
        assert!(report.cond_c_user2 && report.cond_a && report.cond_b);
        assert_eq!(
            report.violations,
            vec![Violation {
                condition: Condition::User1Continuity,
                input: 1,
                output: Some(1)
            }]
        );
    }

    #[test]
    fn warden_support_violation() {
        let m = model(
            vec![vec![0.5, 0.5], vec![0.4, 0.6]],
            vec![vec![0.5, 0.5], vec![0.4, 0.6]],
            vec![vec![1.0, 0.0], vec![0.9, 0.1]],
        );
        let report = check_conditions(&m);
        assert!(!report.cond_b);
        assert!(report.cond_a);
    }

    #[test]
    fn hull_with_midpoint_null_row() {
        let q = Channel::from_rows(vec![vec![0.5, 0.5], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(null_row_in_hull(&q, 0));
        let q = Channel::from_rows(vec![vec![0.9, 0.1], vec![0.5, 0.5], vec![0.0, 1.0]]).unwrap();
        assert!(!null_row_in_hull(&q, 0));
    }

    #[test]
    fn example1_is_degraded() {
        let p1 = Channel::from_rows(example1_p1()).unwrap();
        let p2 = Channel::from_rows(example1_p2()).unwrap();
        let cert = find_degrading_channel(&p1, &p2).unwrap();
        assert!(cert.feasible);
        assert!(cert.residual <= 1e-9, "residual {}", cert.residual);
        let w = cert.w.unwrap();
        for row in w.rows() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            assert!(row.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn channel_degrades_itself() {
        let p1 = Channel::from_rows(example1_p1()).unwrap();
        let cert = find_degrading_channel(&p1, &p1).unwrap();
        assert!(cert.feasible);
        assert!(cert.residual <= 1e-12);
    }

    #[test]
    fn reversed_example1_is_not_degraded() {
        // Minimal ℓ₁ violation from an independent LP solve (HiGHS).
        let p1 = Channel::from_rows(example1_p1()).unwrap();
        let p2 = Channel::from_rows(example1_p2()).unwrap();
        let cert = find_degrading_channel(&p2, &p1).unwrap();
        assert!(!cert.feasible);
        assert!(cert.w.is_none());
        assert!(
            (cert.residual - 0.262_676_697_847_398_5).abs() < 1e-9,
            "{}",
            cert.residual
        );
    }

    #[test]
    fn degradation_dimension_mismatch() {
        let a = Channel::identity(2).unwrap();
        let b = Channel::identity(3).unwrap();
        assert!(matches!(
            find_degrading_channel(&a, &b),
            Err(CovertError::DimensionMismatch { .. })
        ));
    }
}
