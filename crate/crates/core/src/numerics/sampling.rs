use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Draw counts from `Multinomial(trials, probs)` by sequential conditional
/// binomials.
pub fn multinomial_sample<R: Rng + ?Sized>(rng: &mut R, trials: u64, probs: &[f64]) -> Result<Vec<u64>> {
    let mut out = vec![0; probs.len()];
    multinomial_into(rng, trials, probs, &mut out)?;
    Ok(out)
}

/// Allocation-free variant of [`multinomial_sample`].
pub fn multinomial_into<R: Rng + ?Sized>(
    rng: &mut R,
    trials: u64,
    probs: &[f64],
    out: &mut [u64],
) -> Result<()> {
    if probs.is_empty() || out.len() != probs.len() {
        return Err(Error::Argument("multinomial needs matching nonempty vectors".into()));
    }
    if let Some(p) = probs.iter().find(|&&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(Error::Argument(format!("negative or non-finite probability {p}")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Argument(format!("probabilities sum to {total}")));
    }
    let mut remaining_trials = trials;
    let mut remaining_mass = total;
    let last = probs.len() - 1;
    for (k, &p) in probs[..last].iter().enumerate() {
        if remaining_trials == 0 {
            out[k] = 0;
            continue;
        }
        let q = if remaining_mass > 0.0 {
            (p / remaining_mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let draw = if q <= 0.0 {
            0
        } else if q >= 1.0 {
            remaining_trials
        } else {
            Binomial::new(remaining_trials, q)
                .map_err(|e| Error::Numeric(format!("binomial: {e}")))?
                .sample(rng)
        };
        out[k] = draw;
        remaining_trials -= draw;
        remaining_mass -= p;
    }
    out[last] = remaining_trials;
    Ok(())
}

#[inline]
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

#[inline]
pub fn normal_sample<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    mean + sd * standard_normal(rng)
}

/// Uniform on `[0, 1)`.
#[inline]
pub fn uniform_sample<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

/// `sigma2 * chi^2_k` via a gamma draw.
pub fn scaled_chi_square<R: Rng + ?Sized>(rng: &mut R, sigma2: f64, dof: f64) -> f64 {
    if dof <= 0.0 {
        return 0.0;
    }
    let g = rand_distr::Gamma::new(dof / 2.0, 2.0).expect("positive shape");
    sigma2 * g.sample(rng)
}
