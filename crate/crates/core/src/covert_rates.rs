//! Closed-form rate evaluation for a fixed superposition code design, the
//! single-user covert capacities, and the time-sharing comparisons.
//!
//! The auxiliary alphabet is split into a singleton "off" layer `A` that
//! carries the strong user's extra information through `P̃_X^A`, and an
//! active layer `B` with `(P_U^B, P_{X|U}^B)`. For a split `ν` the achievable
//! pair is
//!
//! ```text
//! L1 = √(2/χ₂(ν)) · [(1−ν) Σ P̃(x) D1(x) + ν I^B(Y1;X|U)]
//! L2 = √(2/χ₂(ν)) · ν · [Σ P_X^B(x) D2(x) − I^B(Y2;X|U)]
//! ```
//!
//! with `Dk(x) = D(Pk(·|x) ‖ Pk(·|x0))` and `χ₂(ν)` the χ² distance of the
//! ν-mixture of the two layers' warden outputs from `Q0`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::channel_model::{BcWardenModel, Channel, Distribution};
use crate::error::{CovertError, Result};
use crate::info_measures::{
    chi2_distance_raw, cross_chi2_raw, kl_divergence_raw, mutual_information_raw,
    output_distribution_raw, Nats,
};
use crate::nelder_mead::{minimize, NmOptions};

/// χ² values at or below this are treated as "the warden sees nothing".
pub const DEGENERATE_CHI2: f64 = 1e-14;
/// Divergence sums at or below this count as zero capacity.
pub const ZERO_DIVERGENCE: f64 = 1e-12;
/// Largest `|X| − 1` for which capacities are found by support enumeration.
const MAX_ENUMERATED_SUPPORT: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RatePair {
    pub l1: f64,
    pub l2: f64,
}

impl RatePair {
    pub fn new(l1: f64, l2: f64) -> Self {
        Self { l1, l2 }
    }
}

/// Decision variables of the superposition region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperpositionParams {
    pub nu: f64,
    /// Full-length pmf over `X` with zero mass on `x0`.
    pub ptilde_x_a: Distribution,
    pub pu_b: Distribution,
    /// One row per symbol of `B`.
    pub px_given_u_b: Channel,
}

impl SuperpositionParams {
    pub fn new(
        nu: f64,
        ptilde_x_a: Distribution,
        pu_b: Distribution,
        px_given_u_b: Channel,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&nu) {
            return Err(CovertError::InvalidParameter(format!(
                "nu = {nu} outside [0, 1]"
            )));
        }
        if pu_b.len() != px_given_u_b.inputs() {
            return Err(CovertError::DimensionMismatch {
                what: "P_U^B vs rows of P_X|U^B",
                expected: px_given_u_b.inputs(),
                found: pu_b.len(),
            });
        }
        if ptilde_x_a.len() != px_given_u_b.outputs() {
            return Err(CovertError::DimensionMismatch {
                what: "A-layer pmf vs input alphabet",
                expected: px_given_u_b.outputs(),
                found: ptilde_x_a.len(),
            });
        }
        Ok(Self {
            nu,
            ptilde_x_a,
            pu_b,
            px_given_u_b,
        })
    }

    /// `P_X^B = Σ_u P_U^B(u) P_{X|U}^B(·|u)`.
    pub fn marginal_x_b(&self) -> Distribution {
        let px = output_distribution_raw(self.pu_b.as_slice(), &self.px_given_u_b)
            .expect("dimensions checked on construction");
        Distribution::from_vec_unchecked(px)
    }

    /// Relabels `B`: new symbol `i` is old symbol `perm[i]`.
    pub fn relabel_b(&self, perm: &[usize]) -> Result<Self> {
        let nb = self.pu_b.len();
        let mut seen = vec![false; nb];
        if perm.len() != nb
            || perm
                .iter()
                .any(|&p| p >= nb || std::mem::replace(&mut seen[p], true))
        {
            return Err(CovertError::InvalidParameter(
                "not a permutation of B".into(),
            ));
        }
        let pu = perm.iter().map(|&p| self.pu_b[p]).collect();
        let rows = perm
            .iter()
            .map(|&p| self.px_given_u_b.row(p).to_vec())
            .collect();
        Self::new(
            self.nu,
            self.ptilde_x_a.clone(),
            Distribution::from_vec_unchecked(pu),
            Channel::from_rows(rows)?,
        )
    }

    fn check_against(&self, model: &BcWardenModel) -> Result<()> {
        if self.ptilde_x_a.len() != model.inputs() {
            return Err(CovertError::DimensionMismatch {
                what: "superposition parameters vs model inputs",
                expected: model.inputs(),
                found: self.ptilde_x_a.len(),
            });
        }
        if self.ptilde_x_a[model.x0()] != 0.0 {
            return Err(CovertError::InvalidParameter(
                "A-layer pmf must put zero mass on the zero symbol".into(),
            ));
        }
        Ok(())
    }
}

/// Per-model quantities shared by every rate evaluation.
#[derive(Debug, Clone)]
pub struct RateContext<'a> {
    model: &'a BcWardenModel,
    d1: Vec<f64>,
    d2: Vec<f64>,
    q0: Vec<f64>,
}

impl<'a> RateContext<'a> {
    pub fn new(model: &'a BcWardenModel) -> Result<Self> {
        let x0 = model.x0();
        let divergences = |ch: &Channel, name: &str| -> Result<Vec<f64>> {
            (0..ch.inputs())
                .map(|x| kl_divergence_raw(ch.row(x), ch.row(x0)).map_err(|e| e.in_channel(name)))
                .collect()
        };
        Ok(Self {
            model,
            d1: divergences(model.p1(), "P1")?,
            d2: divergences(model.p2(), "P2")?,
            q0: model.q().row(x0).to_vec(),
        })
    }

    pub fn model(&self) -> &BcWardenModel {
        self.model
    }

    /// `D(Pk(·|x) ‖ Pk(·|x0))` for every input `x`.
    pub fn divergences(&self, user: u8) -> &[f64] {
        if user == 1 {
            &self.d1
        } else {
            &self.d2
        }
    }

    /// Rate pair from raw slices: `pxu` is the row-major `|B| × |X|` matrix.
    pub fn evaluate(&self, nu: f64, ptilde: &[f64], pu: &[f64], pxu: &[f64]) -> Result<RatePair> {
        let nx = self.model.inputs();
        let q = self.model.q();
        let mut px_b = vec![0.0; nx];
        for (u, &w) in pu.iter().enumerate() {
            for (acc, &p) in px_b.iter_mut().zip(&pxu[u * nx..(u + 1) * nx]) {
                *acc += w * p;
            }
        }
        let pz_a = output_distribution_raw(ptilde, q)?;
        let pz_b = output_distribution_raw(&px_b, q)?;
        let mix: Vec<f64> = pz_a
            .iter()
            .zip(&pz_b)
            .map(|(a, b)| (1.0 - nu) * a + nu * b)
            .collect();
        let chi2 = chi2_distance_raw(&mix, &self.q0)?;

        let a_part: f64 = ptilde.iter().zip(&self.d1).map(|(p, d)| p * d).sum();
        let mut bracket1 = (1.0 - nu) * a_part;
        let mut bracket2 = 0.0;
        if nu > 0.0 {
            // Σ P_X^B D2 − I^B(Y2;X|U) is evaluated through the equivalent
            // Σ_u P_U(u) D(P_{Y2|U=u} ‖ P2(·|x0)), which is nonnegative term by term.
            let (p1, p2) = (self.model.p1(), self.model.p2());
            let x0 = self.model.x0();
            let mut cmi1 = 0.0;
            let mut cloud2 = 0.0;
            for (u, &w) in pu.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let row = &pxu[u * nx..(u + 1) * nx];
                cmi1 += w * mutual_information_raw(row, p1)?;
                let py2 = output_distribution_raw(row, p2)?;
                cloud2 += w * kl_divergence_raw(&py2, p2.row(x0))?;
            }
            bracket1 += nu * cmi1;
            bracket2 = nu * cloud2;
        }

        if chi2 <= DEGENERATE_CHI2 {
            if bracket1 <= DEGENERATE_CHI2 && bracket2 <= DEGENERATE_CHI2 {
                return Ok(RatePair::default());
            }
            return Err(CovertError::DegenerateDivergence { value: chi2 });
        }
        let scale = (2.0 / chi2).sqrt();
        Ok(RatePair {
            l1: (scale * bracket1).max(0.0),
            l2: (scale * bracket2).max(0.0),
        })
    }

    pub fn rate_pair(&self, params: &SuperpositionParams) -> Result<RatePair> {
        params.check_against(self.model)?;
        self.evaluate(
            params.nu,
            params.ptilde_x_a.as_slice(),
            params.pu_b.as_slice(),
            params.px_given_u_b.as_flat(),
        )
    }
}

/// `χ₂((1−ν) P̃_Z^A + ν P_Z^B ‖ Q0)`.
pub fn chi2_nu(model: &BcWardenModel, params: &SuperpositionParams) -> Result<f64> {
    params.check_against(model)?;
    let q = model.q();
    let pz_a = output_distribution_raw(params.ptilde_x_a.as_slice(), q)?;
    let pz_b = output_distribution_raw(params.marginal_x_b().as_slice(), q)?;
    let nu = params.nu;
    let mix: Vec<f64> = pz_a
        .iter()
        .zip(&pz_b)
        .map(|(a, b)| (1.0 - nu) * a + nu * b)
        .collect();
    let value = chi2_distance_raw(&mix, q.row(model.x0()))?;
    if value <= DEGENERATE_CHI2 {
        return Err(CovertError::DegenerateDivergence { value });
    }
    Ok(value)
}

pub fn rate_pair(model: &BcWardenModel, params: &SuperpositionParams) -> Result<RatePair> {
    RateContext::new(model)?.rate_pair(params)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingleUserCapacity {
    pub value: Nats,
    /// Maximising input pmf (zero on `x0`); `None` when the capacity is zero.
    pub argmax: Option<Distribution>,
}

impl SingleUserCapacity {
    pub fn is_zero(&self) -> bool {
        self.argmax.is_none()
    }
}

/// Covert capacity of a single user:
/// `max_P √(2/χ₂(P∘warden ‖ Q0)) · Σ_x P(x) D(marginal(·|x) ‖ marginal(·|x0))`
/// over pmfs `P` on `X∖{x0}`.
///
/// The objective is `√2 · dᵀp / √(pᵀMp)` with `M` the Gram matrix of the
/// warden rows in the χ² inner product, so maximising it is the convex
/// problem `min pᵀMp s.t. dᵀp = 1, p ≥ 0`. Its minimiser solves
/// `M_S p_S ∝ d_S` on its support `S`; every support is tried and each
/// candidate is scored with the exact objective.
pub fn single_user_capacity(
    marginal: &Channel,
    warden: &Channel,
    x0: usize,
) -> Result<SingleUserCapacity> {
    let nx = marginal.inputs();
    if warden.inputs() != nx {
        return Err(CovertError::DimensionMismatch {
            what: "warden vs marginal inputs",
            expected: nx,
            found: warden.inputs(),
        });
    }
    if x0 >= nx {
        return Err(CovertError::ZeroSymbolOutOfRange { x0, inputs: nx });
    }
    let others: Vec<usize> = (0..nx).filter(|&x| x != x0).collect();
    let k = others.len();
    let d: Vec<f64> = others
        .iter()
        .map(|&x| kl_divergence_raw(marginal.row(x), marginal.row(x0)))
        .collect::<Result<_>>()?;
    if d.iter().all(|&v| v <= ZERO_DIVERGENCE) {
        return Ok(SingleUserCapacity {
            value: 0.0,
            argmax: None,
        });
    }
    let q0 = warden.row(x0);
    let mut gram = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let v = cross_chi2_raw(warden.row(others[i]), warden.row(others[j]), q0)?;
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let objective = |p: &[f64]| -> Result<f64> {
        let num: f64 = p.iter().zip(&d).map(|(a, b)| a * b).sum();
        let mut quad = 0.0;
        for i in 0..k {
            for j in 0..k {
                quad += p[i] * gram[(i, j)] * p[j];
            }
        }
        if quad <= DEGENERATE_CHI2 {
            if num <= ZERO_DIVERGENCE {
                return Ok(0.0);
            }
            return Err(CovertError::DegenerateDivergence { value: quad });
        }
        Ok(std::f64::consts::SQRT_2 * num / quad.sqrt())
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    let consider = |p: Vec<f64>, best: &mut Option<(f64, Vec<f64>)>| -> Result<()> {
        let v = objective(&p)?;
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            *best = Some((v, p));
        }
        Ok(())
    };

    if k <= MAX_ENUMERATED_SUPPORT {
        for mask in 1u32..(1u32 << k) {
            let support: Vec<usize> = (0..k).filter(|&i| mask & (1 << i) != 0).collect();
            let m = support.len();
            let sub = DMatrix::from_fn(m, m, |a, b| gram[(support[a], support[b])]);
            let rhs = DVector::from_iterator(m, support.iter().map(|&i| d[i]));
            let Some(w) = sub.lu().solve(&rhs) else {
                continue;
            };
            if !w.iter().all(|&v| v > 0.0 && v.is_finite()) {
                continue;
            }
            let total: f64 = w.iter().sum();
            let mut p = vec![0.0; k];
            for (&i, &wi) in support.iter().zip(w.iter()) {
                p[i] = wi / total;
            }
            consider(p, &mut best)?;
        }
        // Vertices never need a solve, but a singular 1×1 block would skip them.
        for i in 0..k {
            let mut p = vec![0.0; k];
            p[i] = 1.0;
            consider(p, &mut best)?;
        }
    } else {
        let opts = NmOptions {
            max_iters: 20_000,
            ..NmOptions::default()
        };
        // Uniform, then one start leaning towards each symbol.
        let mut starts = vec![vec![0.0; k - 1], vec![-4.0; k - 1]];
        for i in 0..k - 1 {
            let mut t = vec![0.0; k - 1];
            t[i] = 4.0;
            starts.push(t);
        }
        for start in starts {
            let r = minimize(
                |theta| {
                    let p = softmax_with_anchor(theta);
                    objective(&p).map_or(f64::NAN, |v| -v)
                },
                &start,
                &opts,
            );
            consider(softmax_with_anchor(&r.x), &mut best)?;
        }
        for i in 0..k {
            let mut p = vec![0.0; k];
            p[i] = 1.0;
            consider(p, &mut best)?;
        }
    }

    let (value, p) = best.expect("at least one vertex was scored");
    let mut full = vec![0.0; nx];
    for (&x, &pi) in others.iter().zip(&p) {
        full[x] = pi;
    }
    Ok(SingleUserCapacity {
        value,
        argmax: Some(Distribution::from_vec_unchecked(full)),
    })
}

/// Softmax over `θ.len() + 1` symbols with the first logit pinned at zero.
pub(crate) fn softmax_with_anchor(theta: &[f64]) -> Vec<f64> {
    let max = theta.iter().copied().fold(0.0, f64::max);
    let mut out = Vec::with_capacity(theta.len() + 1);
    out.push((-max).exp());
    out.extend(theta.iter().map(|t| (t - max).exp()));
    let s: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= s);
    out
}

/// Capacity of user `k` (1 or 2) of a model.
pub fn user_capacity(model: &BcWardenModel, user: u8) -> Result<SingleUserCapacity> {
    single_user_capacity(model.user(user), model.q(), model.x0())
}

/// `L1/L1* + L2/L2*`; at most one means the point is time-sharing achievable.
pub fn ts_region_bound(l1_star: f64, l2_star: f64, point: RatePair) -> f64 {
    point.l1 / l1_star + point.l2 / l2_star
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TsCondition {
    /// Estimate of `sup_{P_X} I(X;Y1) / I(X;Y2)`; `+∞` when undefined.
    pub sup_ratio: f64,
    pub holds: bool,
    /// Some input law gives `I(X;Y2) = 0 < I(X;Y1)`.
    pub undefined_ratio: bool,
}

/// Slack allowed when comparing `L1*/L2*` with the supremum ratio.
pub const TS_CONDITION_SLACK: f64 = 1e-6;
const RATIO_FLOOR: f64 = 1e-8;

/// Sufficient condition for time-sharing to be optimal:
/// `L1*/L2* ≥ sup_{P_X} I(X;Y1)/I(X;Y2)`.
///
/// The supremum is estimated on a lattice over the input simplex with spacing
/// `resolution`, refined locally from the best lattice points, and augmented
/// by the exact limits at every vertex `v` of the simplex,
/// `D(P1(·|x) ‖ P1(·|v)) / D(P2(·|x) ‖ P2(·|v))`, where both informations
/// vanish and the ratio cannot be sampled directly. If user 2 has zero
/// capacity the condition holds trivially.
pub fn ts_optimality_condition(
    model: &BcWardenModel,
    l1_star: f64,
    l2_star: f64,
    resolution: f64,
) -> Result<TsCondition> {
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(CovertError::InvalidParameter(format!(
            "grid resolution {resolution} outside (0, 1]"
        )));
    }
    let (p1, p2) = (model.p1(), model.p2());
    let nx = model.inputs();
    let mut sup = 0.0f64;
    let mut undefined = false;

    for v in 0..nx {
        for x in (0..nx).filter(|&x| x != v) {
            let d1 = kl_divergence_raw(p1.row(x), p1.row(v)).unwrap_or(f64::INFINITY);
            let d2 = kl_divergence_raw(p2.row(x), p2.row(v)).unwrap_or(f64::INFINITY);
            if d2.is_infinite() {
                if d1.is_infinite() {
                    continue;
                }
                continue; // ratio → 0
            }
            if d2 <= ZERO_DIVERGENCE {
                undefined |= d1 > ZERO_DIVERGENCE;
                continue;
            }
            sup = sup.max(d1 / d2);
        }
    }

    let steps = (1.0 / resolution).round().max(1.0) as usize;
    let mut scored: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut counts = vec![0usize; nx];
    for_each_composition(steps, &mut counts, 0, &mut |c| {
        let px: Vec<f64> = c.iter().map(|&k| k as f64 / steps as f64).collect();
        let (Ok(i1), Ok(i2)) = (
            mutual_information_raw(&px, p1),
            mutual_information_raw(&px, p2),
        ) else {
            return;
        };
        if i2 <= 1e-14 {
            undefined |= i1 > ZERO_DIVERGENCE;
            return;
        }
        if i2 < RATIO_FLOOR {
            return;
        }
        scored.push((i1 / i2, px));
    });
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    if let Some((top, _)) = scored.first() {
        sup = sup.max(*top);
    }

    let ratio = |px: &[f64]| -> f64 {
        match (
            mutual_information_raw(px, p1),
            mutual_information_raw(px, p2),
        ) {
            (Ok(i1), Ok(i2)) if i2 >= RATIO_FLOOR => i1 / i2,
            _ => f64::NAN,
        }
    };
    let opts = NmOptions {
        max_iters: 2000,
        xtol: 1e-9,
        ftol: 1e-15,
        initial_step: 0.1,
    };
    for (_, px) in scored.iter().take(4) {
        let theta: Vec<f64> = px[1..]
            .iter()
            .map(|&p| ((p + 1e-9) / (px[0] + 1e-9)).ln())
            .collect();
        let r = minimize(|t| -ratio(&softmax_with_anchor(t)), &theta, &opts);
        if r.fx.is_finite() {
            sup = sup.max(-r.fx);
        }
    }

    let sup_ratio = if undefined { f64::INFINITY } else { sup };
    let holds = if l2_star <= ZERO_DIVERGENCE {
        true
    } else if undefined {
        false
    } else {
        l1_star / l2_star >= sup_ratio - TS_CONDITION_SLACK
    };
    Ok(TsCondition {
        sup_ratio,
        holds,
        undefined_ratio: undefined,
    })
}

fn for_each_composition(
    remaining: usize,
    counts: &mut [usize],
    pos: usize,
    f: &mut impl FnMut(&[usize]),
) {
    if pos + 1 == counts.len() {
        counts[pos] = remaining;
        f(counts);
        return;
    }
    for k in 0..=remaining {
        counts[pos] = k;
        for_each_composition(remaining - k, counts, pos + 1, f);
    }
}

/// Weights with which the two single-user designs enter the ν-mixture:
/// `α1 = (1−ν)√χ₂(P1*‖Q0)/√χ₂(mix‖Q0)`, `α2 = ν√χ₂(P2*‖Q0)/√χ₂(mix‖Q0)`.
pub fn alpha_coefficients(
    nu: f64,
    pz1_star: &Distribution,
    pz2_star: &Distribution,
    q0: &Distribution,
) -> Result<(f64, f64)> {
    let mix: Vec<f64> = pz1_star
        .as_slice()
        .iter()
        .zip(pz2_star.as_slice())
        .map(|(a, b)| (1.0 - nu) * a + nu * b)
        .collect();
    let chi_mix = chi2_distance_raw(&mix, q0.as_slice())?;
    if chi_mix <= DEGENERATE_CHI2 {
        return Err(CovertError::DegenerateDivergence { value: chi_mix });
    }
    let chi1 = chi2_distance_raw(pz1_star.as_slice(), q0.as_slice())?;
    let chi2 = chi2_distance_raw(pz2_star.as_slice(), q0.as_slice())?;
    let root = chi_mix.sqrt();
    Ok(((1.0 - nu) * chi1.sqrt() / root, nu * chi2.sqrt() / root))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info_measures::conditional_mutual_information;
    use crate::presets::{example1_model, example2_model};

    fn pm(len: usize, i: usize) -> Distribution {
        Distribution::point_mass(len, i).unwrap()
    }

    fn params(nu: f64, ptilde: Vec<f64>, pu: Vec<f64>, rows: Vec<Vec<f64>>) -> SuperpositionParams {
        SuperpositionParams::new(
            nu,
            Distribution::new(ptilde).unwrap(),
            Distribution::new(pu).unwrap(),
            Channel::from_rows(rows).unwrap(),
        )
        .unwrap()
    }

    /// The rate formulas written out literally, with the conditional mutual
    /// information subtracted as printed.
    fn literal_rates(model: &BcWardenModel, p: &SuperpositionParams) -> (f64, f64) {
        let x0 = model.x0();
        let d = |ch: &Channel, x: usize| kl_divergence_raw(ch.row(x), ch.row(x0)).unwrap();
        let px_b = p.marginal_x_b();
        let q = model.q();
        let mut mix = vec![0.0; q.outputs()];
        for x in 0..model.inputs() {
            let w = (1.0 - p.nu) * p.ptilde_x_a[x] + p.nu * px_b[x];
            for (m, qz) in mix.iter_mut().zip(q.row(x)) {
                *m += w * qz;
            }
        }
        let q0 = q.row(x0);
        let chi: f64 = mix.iter().zip(q0).map(|(m, q)| (m - q).powi(2) / q).sum();
        let s = (2.0 / chi).sqrt();
        let sum = |w: &Distribution, ch: &Channel| -> f64 {
            (0..model.inputs()).map(|x| w[x] * d(ch, x)).sum()
        };
        let i1 = conditional_mutual_information(&p.pu_b, &p.px_given_u_b, model.p1()).unwrap();
        let i2 = conditional_mutual_information(&p.pu_b, &p.px_given_u_b, model.p2()).unwrap();
        let l1 = s * ((1.0 - p.nu) * sum(&p.ptilde_x_a, model.p1()) + p.nu * i1);
        let l2 = s * p.nu * (sum(&px_b, model.p2()) - i2);
        (l1, l2.max(0.0))
    }

    #[test]
    fn chi2_nu_endpoints_and_equal_layers() {
        let m = example1_model();
        let p = params(
            0.0,
            vec![0.0, 0.8, 0.2],
            vec![1.0],
            vec![vec![0.1, 0.3, 0.6]],
        );
        let pz = output_distribution_raw(&[0.0, 0.8, 0.2], m.q()).unwrap();
        let expect = chi2_distance_raw(&pz, m.q().row(0)).unwrap();
        assert!((chi2_nu(&m, &p).unwrap() - expect).abs() < 1e-15);

        let p = params(
            1.0,
            vec![0.0, 0.8, 0.2],
            vec![1.0],
            vec![vec![0.1, 0.3, 0.6]],
        );
        let pz = output_distribution_raw(&[0.1, 0.3, 0.6], m.q()).unwrap();
        let expect = chi2_distance_raw(&pz, m.q().row(0)).unwrap();
        assert!((chi2_nu(&m, &p).unwrap() - expect).abs() < 1e-15);

        let p = params(
            0.8,
            vec![0.0, 1.0, 0.0],
            vec![1.0],
            vec![vec![0.0, 1.0, 0.0]],
        );
        assert!((chi2_nu(&m, &p).unwrap() - 0.611_304_093_567_251).abs() < 1e-12);
    }

    #[test]
    fn chi2_nu_bilinear_expansion() {
        let m = example1_model();
        let p = params(
            0.35,
            vec![0.0, 0.6, 0.4],
            vec![0.3, 0.7],
            vec![vec![0.5, 0.2, 0.3], vec![0.1, 0.1, 0.8]],
        );
        let q0 = m.q().row(0);
        let a = output_distribution_raw(p.ptilde_x_a.as_slice(), m.q()).unwrap();
        let b = output_distribution_raw(p.marginal_x_b().as_slice(), m.q()).unwrap();
        let nu: f64 = 0.35;
        let expanded = nu.powi(2) * chi2_distance_raw(&b, q0).unwrap()
            + (1.0 - nu).powi(2) * chi2_distance_raw(&a, q0).unwrap()
            + 2.0 * nu * (1.0 - nu) * cross_chi2_raw(&a, &b, q0).unwrap();
        assert!((chi2_nu(&m, &p).unwrap() - expanded).abs() < 1e-14);
    }

    #[test]
    fn degenerate_chi2_is_an_error() {
        let m = example1_model();
        let p = params(
            1.0,
            vec![0.0, 1.0, 0.0],
            vec![1.0],
            vec![vec![1.0, 0.0, 0.0]],
        );
        assert!(matches!(
            chi2_nu(&m, &p),
            Err(CovertError::DegenerateDivergence { .. })
        ));
    }

    #[test]
    fn silent_b_layer_gives_zero_pair() {
        let m = example1_model();
        let p = params(
            1.0,
            vec![0.0, 0.5, 0.5],
            vec![0.5, 0.5],
            vec![vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]],
        );
        assert_eq!(rate_pair(&m, &p).unwrap(), RatePair::new(0.0, 0.0));
    }

    #[test]
    fn nu_zero_pair() {
        let m = example1_model();
        let p = params(
            0.0,
            vec![0.0, 0.8, 0.2],
            vec![1.0],
            vec![vec![0.2, 0.4, 0.4]],
        );
        let r = rate_pair(&m, &p).unwrap();
        assert_eq!(r.l2, 0.0);
        // Independent evaluation of the same closed form.
        let (l1, _) = literal_rates(&m, &p);
        assert!((r.l1 - l1).abs() < 1e-13);
        assert!((r.l1 - 0.468).abs() < 2e-3, "{}", r.l1);
    }

    #[test]
    fn rates_match_literal_formula() {
        let m = example1_model();
        for nu in [0.1, 0.5, 0.9, 1.0] {
            let p = params(
                nu,
                vec![0.0, 0.3, 0.7],
                vec![0.2, 0.5, 0.3],
                vec![
                    vec![0.6, 0.3, 0.1],
                    vec![0.2, 0.2, 0.6],
                    vec![0.9, 0.05, 0.05],
                ],
            );
            let r = rate_pair(&m, &p).unwrap();
            let (l1, l2) = literal_rates(&m, &p);
            assert!((r.l1 - l1).abs() < 1e-12, "{} vs {l1}", r.l1);
            assert!((r.l2 - l2).abs() < 1e-12, "{} vs {l2}", r.l2);
        }
    }

    #[test]
    fn deterministic_b_layer_reaches_l2_star() {
        let m = example1_model();
        let cap = user_capacity(&m, 2).unwrap();
        let argmax = cap.argmax.clone().unwrap();
        let p =
            SuperpositionParams::new(1.0, pm(3, 1), argmax, Channel::identity(3).unwrap()).unwrap();
        let r = rate_pair(&m, &p).unwrap();
        assert_eq!(r.l1, 0.0);
        assert!((r.l2 - cap.value).abs() < 1e-12);
        assert!((r.l2 - 0.28590).abs() < 1e-3);
    }

    #[test]
    fn relabelling_b_is_harmless() {
        let m = example1_model();
        let p = params(
            0.4,
            vec![0.0, 0.3, 0.7],
            vec![0.2, 0.5, 0.3],
            vec![
                vec![0.6, 0.3, 0.1],
                vec![0.2, 0.2, 0.6],
                vec![0.9, 0.05, 0.05],
            ],
        );
        let r = rate_pair(&m, &p).unwrap();
        let s = rate_pair(&m, &p.relabel_b(&[2, 0, 1]).unwrap()).unwrap();
        assert!((r.l1 - s.l1).abs() < 1e-14 && (r.l2 - s.l2).abs() < 1e-14);
        assert!(p.relabel_b(&[0, 0, 1]).is_err());
    }

    #[test]
    fn ptilde_on_zero_symbol_is_rejected() {
        let m = example1_model();
        let p = params(
            0.5,
            vec![0.1, 0.4, 0.5],
            vec![1.0],
            vec![vec![0.2, 0.4, 0.4]],
        );
        assert!(matches!(
            rate_pair(&m, &p),
            Err(CovertError::InvalidParameter(_))
        ));
    }

    #[test]
    fn example1_capacities() {
        let m = example1_model();
        let c1 = user_capacity(&m, 1).unwrap();
        let c2 = user_capacity(&m, 2).unwrap();
        // Exact optimum; see the 2-sparse argmax below.
        assert!((c1.value - 0.469_457_587).abs() < 1e-8, "{}", c1.value);
        assert!((c2.value - 0.28590).abs() < 1e-3, "{}", c2.value);
        let a = c1.argmax.unwrap();
        assert_eq!(a[0], 0.0);
        assert!((a[1] - 0.746_96).abs() < 1e-4, "{a:?}");
    }

    #[test]
    fn capacity_beats_dense_grid() {
        let m = example1_model();
        let c1 = user_capacity(&m, 1).unwrap();
        let ctx = RateContext::new(&m).unwrap();
        let mut best = 0.0f64;
        for i in 0..=2000 {
            let a = i as f64 / 2000.0;
            let r = ctx
                .evaluate(0.0, &[0.0, 1.0 - a, a], &[1.0], &[1.0, 0.0, 0.0])
                .unwrap();
            best = best.max(r.l1);
        }
        assert!(c1.value >= best - 1e-12);
        assert!(c1.value - best < 1e-6);
    }

    #[test]
    fn zero_capacity_sentinel() {
        let rows = vec![vec![0.4, 0.6]; 2];
        let marginal = Channel::from_rows(rows).unwrap();
        let warden = Channel::bsc(0.3).unwrap();
        let c = single_user_capacity(&marginal, &warden, 0).unwrap();
        assert_eq!(c.value, 0.0);
        assert!(c.is_zero());
    }

    #[test]
    fn ts_bound_vertices_and_midpoint() {
        assert_eq!(ts_region_bound(0.4, 0.2, RatePair::new(0.4, 0.0)), 1.0);
        assert_eq!(ts_region_bound(0.4, 0.2, RatePair::new(0.0, 0.2)), 1.0);
        assert_eq!(ts_region_bound(0.4, 0.2, RatePair::new(0.2, 0.1)), 1.0);
    }

    #[test]
    fn ts_condition_on_example2() {
        for (c, expected) in [(0.2, false), (0.9, true), (0.5, false), (1.0, true)] {
            let m = example2_model(c);
            let l1 = user_capacity(&m, 1).unwrap().value;
            let l2 = user_capacity(&m, 2).unwrap().value;
            let t = ts_optimality_condition(&m, l1, l2, 1e-3).unwrap();
            assert_eq!(t.holds, expected, "c = {c}: {t:?}");
        }
    }

    #[test]
    fn ts_condition_identical_users() {
        let m = example1_model();
        let same = BcWardenModel::new(m.p1().clone(), m.p1().clone(), m.q().clone(), 0).unwrap();
        let l = user_capacity(&same, 1).unwrap().value;
        let t = ts_optimality_condition(&same, l, l, 1e-2).unwrap();
        assert!((t.sup_ratio - 1.0).abs() < 1e-12, "{t:?}");
        assert!(t.holds);
    }

    #[test]
    fn alpha_endpoints_and_inclusion() {
        let m = example1_model();
        let q = m.q();
        let q0 = m.warden_null_distribution();
        let pz = |k: u8| {
            let a = user_capacity(&m, k).unwrap().argmax.unwrap();
            Distribution::new(output_distribution_raw(a.as_slice(), q).unwrap()).unwrap()
        };
        let (z1, z2) = (pz(1), pz(2));
        assert_eq!(alpha_coefficients(0.0, &z1, &z2, &q0).unwrap(), (1.0, 0.0));
        let (a1, a2) = alpha_coefficients(1.0, &z1, &z2, &q0).unwrap();
        assert_eq!(a1, 0.0);
        assert!((a2 - 1.0).abs() < 1e-15);
        for i in 0..=100 {
            let (a1, a2) = alpha_coefficients(i as f64 / 100.0, &z1, &z2, &q0).unwrap();
            assert!(a1 + a2 >= 1.0 - 1e-9);
        }
    }
}
