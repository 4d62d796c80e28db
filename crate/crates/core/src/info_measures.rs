//! Information functionals in natural units.
//!
//! Every logarithm here is natural. Each public function has a slice-level
//! twin (`*_raw`) that skips the pmf invariants, for callers that evaluate
//! the same expressions on perturbed vectors.

use crate::channel_model::{Channel, Distribution};
use crate::error::{CovertError, Result};

/// Information measured in nats.
pub type Nats = f64;

/// `Σ p ln(p/q)` with the convention `0 ln(0/q) = 0`.
pub fn kl_divergence_raw(p: &[f64], q: &[f64]) -> Result<Nats> {
    check_len(p.len(), q.len())?;
    let mut acc = 0.0;
    for (index, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(CovertError::AbsoluteContinuityViolation { index });
        }
        acc += pi * (pi / qi).ln();
    }
    Ok(acc)
}

pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<Nats> {
    kl_divergence_raw(p.as_slice(), q.as_slice())
}

/// `Σ (p − q)² / q`; indices with `p = q = 0` contribute nothing.
pub fn chi2_distance_raw(p: &[f64], q: &[f64]) -> Result<f64> {
    cross_chi2_raw(p, p, q)
}

pub fn chi2_distance(p: &Distribution, q: &Distribution) -> Result<f64> {
    chi2_distance_raw(p.as_slice(), q.as_slice())
}

/// `Σ (a − q)(b − q) / q`. Can be negative.
pub fn cross_chi2_raw(a: &[f64], b: &[f64], q: &[f64]) -> Result<f64> {
    check_len(a.len(), q.len())?;
    check_len(b.len(), q.len())?;
    let mut acc = 0.0;
    for (index, ((&ai, &bi), &qi)) in a.iter().zip(b).zip(q).enumerate() {
        let (da, db) = (ai - qi, bi - qi);
        if qi == 0.0 {
            if da != 0.0 && db != 0.0 {
                return Err(CovertError::DivisionSupportViolation { index });
            }
            continue;
        }
        acc += da * db / qi;
    }
    Ok(acc)
}

pub fn cross_chi2(pa: &Distribution, pb: &Distribution, q: &Distribution) -> Result<f64> {
    cross_chi2_raw(pa.as_slice(), pb.as_slice(), q.as_slice())
}

/// Vector-matrix product `px · ch` without pmf checks.
pub fn output_distribution_raw(px: &[f64], ch: &Channel) -> Result<Vec<f64>> {
    if px.len() != ch.inputs() {
        return Err(CovertError::DimensionMismatch {
            what: "input distribution vs channel inputs",
            expected: ch.inputs(),
            found: px.len(),
        });
    }
    let mut out = vec![0.0; ch.outputs()];
    for (&p, row) in px.iter().zip(ch.rows()) {
        if p == 0.0 {
            continue;
        }
        for (o, &w) in out.iter_mut().zip(row) {
            *o += p * w;
        }
    }
    Ok(out)
}

pub fn output_distribution(px: &Distribution, ch: &Channel) -> Result<Distribution> {
    output_distribution_raw(px.as_slice(), ch).map(Distribution::from_vec_unchecked)
}

/// `I(X;Y) = Σ_x px(x) D(ch(·|x) || px∘ch)`.
pub fn mutual_information_raw(px: &[f64], ch: &Channel) -> Result<Nats> {
    let py = output_distribution_raw(px, ch)?;
    let mut acc = 0.0;
    for (x, &p) in px.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        acc += p * kl_divergence_raw(ch.row(x), &py)?;
    }
    Ok(acc)
}

pub fn mutual_information(px: &Distribution, ch: &Channel) -> Result<Nats> {
    mutual_information_raw(px.as_slice(), ch)
}

/// `I(X;Y|U) = Σ_u pu(u) I(X;Y | U = u)`.
pub fn conditional_mutual_information(
    pu: &Distribution,
    px_given_u: &Channel,
    ch: &Channel,
) -> Result<Nats> {
    if pu.len() != px_given_u.inputs() {
        return Err(CovertError::DimensionMismatch {
            what: "auxiliary pmf vs conditional rows",
            expected: px_given_u.inputs(),
            found: pu.len(),
        });
    }
    let mut acc = 0.0;
    for (u, &w) in pu.as_slice().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        acc += w * mutual_information_raw(px_given_u.row(u), ch)?;
    }
    Ok(acc)
}

fn check_len(found: usize, expected: usize) -> Result<()> {
    if found != expected {
        return Err(CovertError::DimensionMismatch {
            what: "distribution lengths",
            expected,
            found,
        });
    }
    Ok(())
}
