//! Finite-difference checks of the small-μ calculus behind the computable
//! region.
//!
//! A [`StructuredJoint`] mixes an "off" layer `A`, whose inputs are mostly the
//! zero symbol, with an active layer `B`:
//!
//! ```text
//! P_U(u)     = (1−μ1) P_U^A(u)  for u ∈ A,   μ1 P_U^B(u)  for u ∈ B
//! P_X|U(·|u) = (1−μ2) δ_x0 + μ2 P̃(·|u)  for u ∈ A,   P_X|U^B(·|u)  for u ∈ B
//! ```
//!
//! At `μ = 0` everything collapses onto `x0`, so all informations and the
//! warden divergence vanish; the first derivatives of the informations and the
//! Hessian of the divergence are closed-form divergence and χ² expressions.
//! The harness compares those against Richardson-extrapolated differences and
//! checks the resulting first-order rate expressions against exact values
//! along `μ = η/√n`.

use rand::Rng;
use serde::Serialize;

use crate::channel_model::{BcWardenModel, Channel, Distribution};
use crate::error::{CovertError, Result};
use crate::info_measures::{
    chi2_distance_raw, cross_chi2_raw, kl_divergence_raw, mutual_information_raw,
    output_distribution_raw,
};
use crate::presets::random_row;

pub const DEFAULT_GRADIENT_STEP: f64 = 1e-4;
pub const DEFAULT_HESSIAN_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuredJoint {
    pub mu1: f64,
    pub mu2: f64,
    pub pu_a: Distribution,
    pub pu_b: Distribution,
    pub px_given_u_b: Channel,
    /// Rows put zero mass on `x0`.
    pub ptilde_x_given_u_a: Channel,
    pub x0: usize,
}

pub fn build_structured_joint(
    mu1: f64,
    mu2: f64,
    pu_a: Distribution,
    pu_b: Distribution,
    px_given_u_b: Channel,
    ptilde_x_given_u_a: Channel,
    x0: usize,
) -> Result<StructuredJoint> {
    for (name, mu) in [("mu1", mu1), ("mu2", mu2)] {
        if !(0.0..=1.0).contains(&mu) {
            return Err(CovertError::InvalidParameter(format!(
                "{name} = {mu} outside [0, 1]"
            )));
        }
    }
    let nx = px_given_u_b.outputs();
    let checks = [
        (
            "P_U^B vs rows of P_X|U^B",
            px_given_u_b.inputs(),
            pu_b.len(),
        ),
        (
            "P_U^A vs rows of the A-layer",
            ptilde_x_given_u_a.inputs(),
            pu_a.len(),
        ),
        (
            "A-layer vs B-layer input alphabets",
            nx,
            ptilde_x_given_u_a.outputs(),
        ),
    ];
    for (what, expected, found) in checks {
        if expected != found {
            return Err(CovertError::DimensionMismatch {
                what,
                expected,
                found,
            });
        }
    }
    if x0 >= nx {
        return Err(CovertError::ZeroSymbolOutOfRange { x0, inputs: nx });
    }
    if ptilde_x_given_u_a.rows().any(|r| r[x0] != 0.0) {
        return Err(CovertError::InvalidParameter(
            "A-layer rows must put zero mass on the zero symbol".into(),
        ));
    }
    Ok(StructuredJoint {
        mu1,
        mu2,
        pu_a,
        pu_b,
        px_given_u_b,
        ptilde_x_given_u_a,
        x0,
    })
}

/// Exact evaluations at arbitrary `(μ1, μ2)`. Rows of `A` come first.
struct Evaluated {
    pu: Vec<f64>,
    px_given_u: Vec<Vec<f64>>,
}

impl StructuredJoint {
    pub fn inputs(&self) -> usize {
        self.px_given_u_b.outputs()
    }

    pub fn with_mu(&self, mu1: f64, mu2: f64) -> Self {
        Self {
            mu1,
            mu2,
            ..self.clone()
        }
    }

    fn evaluate(&self, mu1: f64, mu2: f64) -> Evaluated {
        let nx = self.inputs();
        let mut pu = Vec::new();
        let mut px_given_u = Vec::new();
        for (a, &w) in self.pu_a.as_slice().iter().enumerate() {
            pu.push((1.0 - mu1) * w);
            let mut row: Vec<f64> = self
                .ptilde_x_given_u_a
                .row(a)
                .iter()
                .map(|p| mu2 * p)
                .collect();
            row[self.x0] += 1.0 - mu2;
            px_given_u.push(row);
        }
        for (b, &w) in self.pu_b.as_slice().iter().enumerate() {
            pu.push(mu1 * w);
            px_given_u.push(self.px_given_u_b.row(b).to_vec());
        }
        debug_assert!(px_given_u.iter().all(|r| r.len() == nx));
        Evaluated { pu, px_given_u }
    }

    /// `P_{U,X}` with the `A` symbols first.
    pub fn joint_ux(&self) -> Vec<Vec<f64>> {
        let e = self.evaluate(self.mu1, self.mu2);
        e.pu.iter()
            .zip(&e.px_given_u)
            .map(|(w, row)| row.iter().map(|p| w * p).collect())
            .collect()
    }

    pub fn marginal_u(&self) -> Vec<f64> {
        self.evaluate(self.mu1, self.mu2).pu
    }

    /// `(1−μ1)(1−μ2) δ_x0 + (1−μ1) μ2 P̃_X^A + μ1 P_X^B`.
    pub fn marginal_x(&self) -> Vec<f64> {
        let (a, b) = self.layer_marginals();
        let (m1, m2) = (self.mu1, self.mu2);
        let mut px: Vec<f64> = a
            .iter()
            .zip(&b)
            .map(|(pa, pb)| (1.0 - m1) * m2 * pa + m1 * pb)
            .collect();
        px[self.x0] += (1.0 - m1) * (1.0 - m2);
        px
    }

    /// `(P̃_X^A, P_X^B)`.
    pub fn layer_marginals(&self) -> (Vec<f64>, Vec<f64>) {
        let a = output_distribution_raw(self.pu_a.as_slice(), &self.ptilde_x_given_u_a)
            .expect("dimensions validated");
        let b = output_distribution_raw(self.pu_b.as_slice(), &self.px_given_u_b)
            .expect("dimensions validated");
        (a, b)
    }

    /// Warden output law; a polynomial in `μ`, so it is also defined for
    /// slightly negative arguments (used by central differences).
    pub fn warden_output(&self, warden: &Channel, mu1: f64, mu2: f64) -> Vec<f64> {
        let (a, b) = self.layer_marginals();
        let q0 = warden.row(self.x0);
        let za = output_distribution_raw(&a, warden).expect("dimensions validated");
        let zb = output_distribution_raw(&b, warden).expect("dimensions validated");
        (0..warden.outputs())
            .map(|z| (1.0 - mu1) * (1.0 - mu2) * q0[z] + (1.0 - mu1) * mu2 * za[z] + mu1 * zb[z])
            .collect()
    }

    fn info(&self, quantity: Quantity, channel: &Channel, mu1: f64, mu2: f64) -> Result<f64> {
        let e = self.evaluate(mu1, mu2);
        match quantity {
            Quantity::UY => {
                let composed: Vec<Vec<f64>> = e
                    .px_given_u
                    .iter()
                    .map(|row| output_distribution_raw(row, channel))
                    .collect::<Result<_>>()?;
                mutual_information_raw(&e.pu, &Channel::from_rows(composed)?)
            }
            Quantity::XY => {
                let mut px = vec![0.0; self.inputs()];
                for (w, row) in e.pu.iter().zip(&e.px_given_u) {
                    for (acc, p) in px.iter_mut().zip(row) {
                        *acc += w * p;
                    }
                }
                mutual_information_raw(&px, channel)
            }
            Quantity::XYGivenU => {
                let mut acc = 0.0;
                for (w, row) in e.pu.iter().zip(&e.px_given_u) {
                    if *w != 0.0 {
                        acc += w * mutual_information_raw(row, channel)?;
                    }
                }
                Ok(acc)
            }
        }
    }

    /// `I(U;Y)` through `channel` at the joint's own `(μ1, μ2)`.
    pub fn mi_uy(&self, channel: &Channel) -> Result<f64> {
        self.info(Quantity::UY, channel, self.mu1, self.mu2)
    }

    pub fn mi_xy(&self, channel: &Channel) -> Result<f64> {
        self.info(Quantity::XY, channel, self.mu1, self.mu2)
    }

    pub fn mi_xy_given_u(&self, channel: &Channel) -> Result<f64> {
        self.info(Quantity::XYGivenU, channel, self.mu1, self.mu2)
    }

    pub fn warden_divergence(&self, warden: &Channel) -> Result<f64> {
        let pz = self.warden_output(warden, self.mu1, self.mu2);
        kl_divergence_raw(&pz, warden.row(self.x0))
    }
}

/// Which mutual information is differentiated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    UY,
    XY,
    XYGivenU,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Wrt {
    Mu1,
    Mu2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdCheck {
    pub fd_value: f64,
    pub formula_value: f64,
    pub abs_err: f64,
}

impl FdCheck {
    fn new(fd_value: f64, formula_value: f64) -> Self {
        Self {
            fd_value,
            formula_value,
            abs_err: (fd_value - formula_value).abs(),
        }
    }

    /// `abs_err / |formula|`, or the absolute error when the formula is zero.
    pub fn rel_err(&self) -> f64 {
        if self.formula_value.abs() > 1e-12 {
            self.abs_err / self.formula_value.abs()
        } else {
            self.abs_err
        }
    }
}

fn divergence_sum(weights: &[f64], channel: &Channel, x0: usize) -> Result<f64> {
    let mut acc = 0.0;
    for (x, &w) in weights.iter().enumerate() {
        if w != 0.0 {
            acc += w * kl_divergence_raw(channel.row(x), channel.row(x0))?;
        }
    }
    Ok(acc)
}

/// `Σ_{u∈B} P_U^B(u) D(P_{Y|U=u} ‖ P_{Y|X=x0})`.
fn cloud_divergence(sj: &StructuredJoint, channel: &Channel) -> Result<f64> {
    let mut acc = 0.0;
    for (b, &w) in sj.pu_b.as_slice().iter().enumerate() {
        if w != 0.0 {
            let py = output_distribution_raw(sj.px_given_u_b.row(b), channel)?;
            acc += w * kl_divergence_raw(&py, channel.row(sj.x0))?;
        }
    }
    Ok(acc)
}

/// Closed-form first derivative at the origin.
pub fn derivative_formula(
    sj: &StructuredJoint,
    channel: &Channel,
    quantity: Quantity,
    wrt: Wrt,
) -> Result<f64> {
    let (a, b) = sj.layer_marginals();
    let x0 = sj.x0;
    Ok(match (quantity, wrt) {
        (Quantity::UY, Wrt::Mu1) => cloud_divergence(sj, channel)?,
        (Quantity::UY, Wrt::Mu2) => 0.0,
        (Quantity::XY, Wrt::Mu1) => divergence_sum(&b, channel, x0)?,
        (Quantity::XY, Wrt::Mu2) => divergence_sum(&a, channel, x0)?,
        (Quantity::XYGivenU, Wrt::Mu1) => {
            divergence_sum(&b, channel, x0)? - cloud_divergence(sj, channel)?
        }
        (Quantity::XYGivenU, Wrt::Mu2) => divergence_sum(&a, channel, x0)?,
    })
}

/// One-sided difference at the origin, the other `μ` held at zero, with one
/// Richardson step: `2·fd(h/2) − fd(h)`.
pub fn fd_mi_derivative_check(
    sj: &StructuredJoint,
    channel: &Channel,
    quantity: Quantity,
    wrt: Wrt,
    h: f64,
) -> Result<FdCheck> {
    if !(h > 0.0 && h <= 1e-2) {
        return Err(CovertError::InvalidParameter(format!(
            "step {h} outside (0, 1e-2]"
        )));
    }
    let at = |t: f64| match wrt {
        Wrt::Mu1 => sj.info(quantity, channel, t, 0.0),
        Wrt::Mu2 => sj.info(quantity, channel, 0.0, t),
    };
    let origin = at(0.0)?;
    let fd = |step: f64| -> Result<f64> { Ok((at(step)? - origin) / step) };
    let value = 2.0 * fd(h / 2.0)? - fd(h)?;
    Ok(FdCheck::new(
        value,
        derivative_formula(sj, channel, quantity, wrt)?,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HessianCheck {
    /// Central-difference gradient at the origin.
    pub gradient: [f64; 2],
    /// Richardson-extrapolated central second differences.
    pub fd: [[f64; 2]; 2],
    /// `[[χ₂(P_Z^B‖Q0), χ₂(P̃_Z^A, P_Z^B‖Q0)], [·, χ₂(P̃_Z^A‖Q0)]]`.
    pub formula: [[f64; 2]; 2],
    /// Largest `|fd − formula| / |formula|` over the entries.
    pub max_rel_err: f64,
    /// `|fd₁₂ − fd₂₁|` before symmetrisation.
    pub asymmetry: f64,
}

/// Second-order behaviour of `D(P_Z ‖ Q0)` around `μ = 0`.
pub fn fd_divergence_hessian_check(
    sj: &StructuredJoint,
    warden: &Channel,
    h: f64,
) -> Result<HessianCheck> {
    if !(h > 0.0 && h <= 1e-1) {
        return Err(CovertError::InvalidParameter(format!(
            "step {h} outside (0, 0.1]"
        )));
    }
    let q0 = warden.row(sj.x0);
    let d = |m1: f64, m2: f64| -> Result<f64> {
        let pz = sj.warden_output(warden, m1, m2);
        if let Some(z) = pz.iter().position(|&v| v < 0.0) {
            return Err(CovertError::InvalidParameter(format!(
                "warden output negative at symbol {z} for step {h}"
            )));
        }
        kl_divergence_raw(&pz, q0)
    };
    let d0 = d(0.0, 0.0)?;
    let second = |s: f64| -> Result<[[f64; 2]; 2]> {
        let h11 = (d(s, 0.0)? - 2.0 * d0 + d(-s, 0.0)?) / (s * s);
        let h22 = (d(0.0, s)? - 2.0 * d0 + d(0.0, -s)?) / (s * s);
        let h12 = (d(s, s)? - d(s, -s)? - d(-s, s)? + d(-s, -s)?) / (4.0 * s * s);
        let h21 = (d(s, s)? - d(-s, s)? - d(s, -s)? + d(-s, -s)?) / (4.0 * s * s);
        Ok([[h11, h12], [h21, h22]])
    };
    let (coarse, fine) = (second(h)?, second(h / 2.0)?);
    let mut fd = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            fd[i][j] = (4.0 * fine[i][j] - coarse[i][j]) / 3.0;
        }
    }
    let asymmetry = (fd[0][1] - fd[1][0]).abs();
    let sym = 0.5 * (fd[0][1] + fd[1][0]);
    fd[0][1] = sym;
    fd[1][0] = sym;

    let gradient = [
        (d(h, 0.0)? - d(-h, 0.0)?) / (2.0 * h),
        (d(0.0, h)? - d(0.0, -h)?) / (2.0 * h),
    ];
    let formula = hessian_formula(sj, warden)?;
    let mut max_rel_err = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let err = (fd[i][j] - formula[i][j]).abs();
            let scale = formula[i][j].abs();
            max_rel_err = max_rel_err.max(if scale > 1e-12 { err / scale } else { err });
        }
    }
    Ok(HessianCheck {
        gradient,
        fd,
        formula,
        max_rel_err,
        asymmetry,
    })
}

pub fn hessian_formula(sj: &StructuredJoint, warden: &Channel) -> Result<[[f64; 2]; 2]> {
    let (a, b) = sj.layer_marginals();
    let q0 = warden.row(sj.x0);
    let za = output_distribution_raw(&a, warden)?;
    let zb = output_distribution_raw(&b, warden)?;
    let chi_b = chi2_distance_raw(&zb, q0)?;
    let chi_a = chi2_distance_raw(&za, q0)?;
    let cross = cross_chi2_raw(&za, &zb, q0)?;
    Ok([[chi_b, cross], [cross, chi_a]])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirstOrderLimits {
    /// Limit of `√n · I(X;Y1|U)`.
    pub l1: f64,
    /// Limit of `√n · I(U;Y2)`.
    pub l2: f64,
    /// Limit of `n · D(P_Z ‖ Q0)`.
    pub divergence: f64,
}

/// First-order expressions at `μ = η/√n` with `δ = 1`. The divergence limit is
/// the quadratic form `½ ηᵀ H η` of [`hessian_formula`]; the off-diagonal
/// entry therefore enters with weight `2η1η2`.
pub fn first_order_limits(
    sj: &StructuredJoint,
    model: &BcWardenModel,
    eta1: f64,
    eta2: f64,
) -> Result<FirstOrderLimits> {
    let dx1 = derivative_formula(sj, model.p1(), Quantity::XYGivenU, Wrt::Mu1)?;
    let da1 = derivative_formula(sj, model.p1(), Quantity::XYGivenU, Wrt::Mu2)?;
    let du2 = derivative_formula(sj, model.p2(), Quantity::UY, Wrt::Mu1)?;
    let h = hessian_formula(sj, model.q())?;
    Ok(FirstOrderLimits {
        l1: eta1 * dx1 + eta2 * da1,
        l2: eta1 * du2,
        divergence: 0.5
            * (eta1 * eta1 * h[0][0] + 2.0 * eta1 * eta2 * h[0][1] + eta2 * eta2 * h[1][1]),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirstOrderRow {
    pub n: f64,
    pub scaled_l1: f64,
    pub scaled_l2: f64,
    pub scaled_divergence: f64,
    /// Largest relative deviation from the limits (absolute for zero limits).
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirstOrderReport {
    pub limits: FirstOrderLimits,
    pub rows: Vec<FirstOrderRow>,
    /// Deviation at the largest `n`.
    pub final_deviation: f64,
    /// Deviations never increase along the grid.
    pub monotone: bool,
}

/// Compares exact informations on the structured joint at `μ = η/√n` with
/// their first-order limits, for every `n` in `n_grid` (ascending).
pub fn first_order_region_check(
    sj: &StructuredJoint,
    model: &BcWardenModel,
    eta1: f64,
    eta2: f64,
    n_grid: &[f64],
) -> Result<FirstOrderReport> {
    let limits = first_order_limits(sj, model, eta1, eta2)?;
    let rel = |value: f64, limit: f64| {
        let err = (value - limit).abs();
        if limit.abs() > 1e-12 {
            err / limit.abs()
        } else {
            err
        }
    };
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let root = n.sqrt();
        let (m1, m2) = (eta1 / root, eta2 / root);
        if !(0.0..=1.0).contains(&m1) || !(0.0..=1.0).contains(&m2) {
            return Err(CovertError::InvalidParameter(format!(
                "n = {n} gives layer weights outside [0, 1]"
            )));
        }
        let at = sj.with_mu(m1, m2);
        let scaled_l1 = root * at.mi_xy_given_u(model.p1())?;
        let scaled_l2 = root * at.mi_uy(model.p2())?;
        let scaled_divergence = n * at.warden_divergence(model.q())?;
        let deviation = rel(scaled_l1, limits.l1)
            .max(rel(scaled_l2, limits.l2))
            .max(rel(scaled_divergence, limits.divergence));
        rows.push(FirstOrderRow {
            n,
            scaled_l1,
            scaled_l2,
            scaled_divergence,
            deviation,
        });
    }
    let monotone = rows.windows(2).all(|w| w[1].deviation <= w[0].deviation);
    let final_deviation = rows.last().map_or(0.0, |r| r.deviation);
    Ok(FirstOrderReport {
        limits,
        rows,
        final_deviation,
        monotone,
    })
}

/// A random joint with `|A| = 2`, `|B| ∈ 1..=|X|` and interior pmfs.
pub fn random_structured_joint(
    rng: &mut impl Rng,
    inputs: usize,
    x0: usize,
) -> Result<StructuredJoint> {
    let na = 2;
    let nb = rng.random_range(1..=inputs);
    let ptilde_rows = (0..na)
        .map(|_| {
            let mut off = random_row(rng, inputs - 1).into_iter();
            (0..inputs)
                .map(|x| {
                    if x == x0 {
                        0.0
                    } else {
                        off.next().unwrap_or(0.0)
                    }
                })
                .collect()
        })
        .collect();
    let pxu_rows = (0..nb).map(|_| random_row(rng, inputs)).collect();
    build_structured_joint(
        0.0,
        0.0,
        Distribution::new(random_row(rng, na))?,
        Distribution::new(random_row(rng, nb))?,
        Channel::from_rows(pxu_rows)?,
        Channel::from_rows(ptilde_rows)?,
        x0,
    )
}

/// Pass/fail summary of every check over a batch of random joints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaylorSuiteReport {
    pub joints: usize,
    pub max_derivative_rel_err: f64,
    pub max_mu2_uy_derivative: f64,
    pub max_hessian_rel_err: f64,
    pub max_gradient: f64,
    pub max_first_order_deviation: f64,
    pub all_monotone: bool,
    pub pass: bool,
}

pub const DERIVATIVE_REL_TOL: f64 = 1e-2;
pub const HESSIAN_REL_TOL: f64 = 5e-2;
pub const FIRST_ORDER_TOL: f64 = 1e-2;
pub const N_GRID: [f64; 4] = [1e3, 1e4, 1e5, 1e6];

pub fn verify_suite(
    model: &BcWardenModel,
    joints: usize,
    rng: &mut impl Rng,
) -> Result<TaylorSuiteReport> {
    let (hg, hh) = (DEFAULT_GRADIENT_STEP, DEFAULT_HESSIAN_STEP);
    let mut report = TaylorSuiteReport {
        joints,
        max_derivative_rel_err: 0.0,
        max_mu2_uy_derivative: 0.0,
        max_hessian_rel_err: 0.0,
        max_gradient: 0.0,
        max_first_order_deviation: 0.0,
        all_monotone: true,
        pass: false,
    };
    for _ in 0..joints {
        let sj = random_structured_joint(rng, model.inputs(), model.x0())?;
        for ch in [model.p1(), model.p2()] {
            for (q, w) in [
                (Quantity::UY, Wrt::Mu1),
                (Quantity::XY, Wrt::Mu1),
                (Quantity::XY, Wrt::Mu2),
            ] {
                let c = fd_mi_derivative_check(&sj, ch, q, w, hg)?;
                report.max_derivative_rel_err = report.max_derivative_rel_err.max(c.rel_err());
            }
            let c = fd_mi_derivative_check(&sj, ch, Quantity::UY, Wrt::Mu2, hg)?;
            report.max_mu2_uy_derivative = report.max_mu2_uy_derivative.max(c.fd_value.abs());
        }
        let hc = fd_divergence_hessian_check(&sj, model.q(), hh)?;
        report.max_hessian_rel_err = report.max_hessian_rel_err.max(hc.max_rel_err);
        report.max_gradient = report
            .max_gradient
            .max(hc.gradient[0].abs())
            .max(hc.gradient[1].abs());
        // Order-one loadings: the remainder is O(η/√n), so larger η needs larger n.
        let eta1 = rng.random_range(0.2..=1.0);
        let eta2 = rng.random_range(0.2..=1.0);
        let fo = first_order_region_check(&sj, model, eta1, eta2, &N_GRID)?;
        report.max_first_order_deviation = report.max_first_order_deviation.max(fo.final_deviation);
        report.all_monotone &= fo.monotone;
    }
    report.pass = report.max_derivative_rel_err <= DERIVATIVE_REL_TOL
        && report.max_mu2_uy_derivative <= 10.0 * hg
        && report.max_hessian_rel_err <= HESSIAN_REL_TOL
        && report.max_gradient <= 10.0 * hh * hh
        && report.max_first_order_deviation <= FIRST_ORDER_TOL
        && report.all_monotone;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::example1_model;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> StructuredJoint {
        build_structured_joint(
            0.3,
            0.4,
            Distribution::new(vec![0.6, 0.4]).unwrap(),
            Distribution::new(vec![0.5, 0.3, 0.2]).unwrap(),
            Channel::from_rows(vec![
                vec![0.2, 0.5, 0.3],
                vec![0.7, 0.1, 0.2],
                vec![0.1, 0.1, 0.8],
            ])
            .unwrap(),
            Channel::from_rows(vec![vec![0.0, 0.9, 0.1], vec![0.0, 0.3, 0.7]]).unwrap(),
            0,
        )
        .unwrap()
    }

    #[test]
    fn origin_is_the_zero_symbol() {
        let sj = sample().with_mu(0.0, 0.0);
        assert_eq!(sj.marginal_x(), vec![1.0, 0.0, 0.0]);
        let m = example1_model();
        assert_eq!(sj.warden_divergence(m.q()).unwrap(), 0.0);
        // Rows are all δ_x0, so only summation round-off remains.
        assert!(sj.mi_uy(m.p1()).unwrap().abs() < 1e-15);
        assert!(sj.mi_uy(m.p2()).unwrap().abs() < 1e-15);
    }

    #[test]
    fn full_b_layer() {
        let sj = sample().with_mu(1.0, 0.3);
        let pu = sj.marginal_u();
        assert_eq!(&pu[..2], &[0.0, 0.0]);
        assert_eq!(&pu[2..], sj.pu_b.as_slice());
        let (_, b) = sj.layer_marginals();
        for (x, y) in sj.marginal_x().iter().zip(&b) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn marginal_matches_joint() {
        let sj = sample();
        let joint = sj.joint_ux();
        let px = sj.marginal_x();
        for x in 0..3 {
            let col: f64 = joint.iter().map(|r| r[x]).sum();
            assert!((col - px[x]).abs() < 1e-14);
        }
    }

    #[test]
    fn chain_rule_on_structured_joint() {
        let m = example1_model();
        let sj = sample();
        for ch in [m.p1(), m.p2()] {
            let lhs = sj.mi_xy(ch).unwrap() - sj.mi_uy(ch).unwrap();
            assert!((lhs - sj.mi_xy_given_u(ch).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_mass_on_zero_symbol() {
        let s = sample();
        let bad = Channel::from_rows(vec![vec![0.1, 0.8, 0.1], vec![0.0, 0.3, 0.7]]).unwrap();
        assert!(build_structured_joint(0.1, 0.1, s.pu_a, s.pu_b, s.px_given_u_b, bad, 0).is_err());
    }

    #[test]
    fn silent_b_layer_has_zero_derivatives() {
        let m = example1_model();
        let s = sample();
        let silent = Channel::from_rows(vec![vec![1.0, 0.0, 0.0]; 3]).unwrap();
        let sj = build_structured_joint(0.0, 0.0, s.pu_a, s.pu_b, silent, s.ptilde_x_given_u_a, 0)
            .unwrap();
        for q in [Quantity::UY, Quantity::XY] {
            let c = fd_mi_derivative_check(&sj, m.p1(), q, Wrt::Mu1, 1e-4).unwrap();
            assert_eq!(c.formula_value, 0.0);
            assert!(c.fd_value.abs() < 1e-12);
        }
        let fo = first_order_region_check(&sj, &m, 1.0, 0.0, &N_GRID).unwrap();
        assert!(fo.rows.iter().all(|r| r.scaled_l1.abs() < 1e-9
            && r.scaled_l2.abs() < 1e-9
            && r.scaled_divergence.abs() < 1e-9));
    }

    #[test]
    fn derivatives_match() {
        let m = example1_model();
        let sj = sample();
        for ch in [m.p1(), m.p2()] {
            for (q, w) in [
                (Quantity::UY, Wrt::Mu1),
                (Quantity::XY, Wrt::Mu1),
                (Quantity::XY, Wrt::Mu2),
            ] {
                let c = fd_mi_derivative_check(&sj, ch, q, w, 1e-4).unwrap();
                assert!(c.rel_err() < 1e-3, "{q:?} {w:?}: {c:?}");
            }
            let c = fd_mi_derivative_check(&sj, ch, Quantity::UY, Wrt::Mu2, 1e-4).unwrap();
            assert!(c.fd_value.abs() <= 1e-3);
        }
    }

    #[test]
    fn coinciding_layers_share_one_chi2() {
        let m = example1_model();
        let sj = build_structured_joint(
            0.0,
            0.0,
            Distribution::new(vec![1.0]).unwrap(),
            Distribution::new(vec![1.0]).unwrap(),
            Channel::from_rows(vec![vec![0.0, 1.0, 0.0]]).unwrap(),
            Channel::from_rows(vec![vec![0.0, 1.0, 0.0]]).unwrap(),
            0,
        )
        .unwrap();
        let f = hessian_formula(&sj, m.q()).unwrap();
        for v in [f[0][0], f[0][1], f[1][1]] {
            assert!((v - 0.611_304_093_567_251).abs() < 1e-12);
        }
        let h = fd_divergence_hessian_check(&sj, m.q(), 1e-3).unwrap();
        assert!(h.max_rel_err < 5e-2);
    }

    #[test]
    fn hessian_and_gradient() {
        let m = example1_model();
        let h = fd_divergence_hessian_check(&sample(), m.q(), 1e-3).unwrap();
        assert!(h.max_rel_err < 1e-3, "{h:?}");
        assert!(h.asymmetry < 1e-8);
        assert!(h.gradient.iter().all(|g| g.abs() <= 10.0 * 1e-6), "{h:?}");
    }

    #[test]
    fn cross_term_enters_twice() {
        let m = example1_model();
        let sj = sample();
        let (e1, e2) = (1.0, 1.5);
        let fo = first_order_region_check(&sj, &m, e1, e2, &N_GRID).unwrap();
        assert!(fo.monotone && fo.final_deviation < 1e-2, "{fo:?}");
        let h = hessian_formula(&sj, m.q()).unwrap();
        let single = 0.5 * (e1 * e1 * h[0][0] + e1 * e2 * h[0][1] + e2 * e2 * h[1][1]);
        let last = fo.rows.last().unwrap().scaled_divergence;
        assert!((last - fo.limits.divergence).abs() < (last - single).abs());
    }

    #[test]
    fn suite_passes_on_example1() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let r = verify_suite(&example1_model(), 5, &mut rng).unwrap();
        assert!(r.pass, "{r:?}");
    }
}
