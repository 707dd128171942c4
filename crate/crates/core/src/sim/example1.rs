use crate::design::{PopulationModel, SampleLayout, Treatment, TrialDesign};
use crate::error::{Error, Result};
use crate::numerics::{equicoordinate_quantile, multinomial_into, true_fwer_given_shift, QmcSettings, RngStream};
use crate::procedures::{anova_correlation, anova_noncentrality};

pub const EXAMPLE1_PREVALENCES: [f64; 3] = [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0];
pub const EXAMPLE1_EFFECTS: [f64; 3] = [0.0, 4.0, -1.0];
const EXAMPLE1_SIGMA2: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example1Summary {
    pub n_total: u64,
    pub n_iter: usize,
    pub alpha: f64,
    /// Mean true FWER of the anova test calibrated at `nu = 0`.
    pub mean_fwer: f64,
    pub mc_se: f64,
}

fn balanced_layout(design: &TrialDesign, counts: &[u64]) -> Result<SampleLayout> {
    let mut sizes = design.empty_grid();
    for (i, &n) in counts.iter().enumerate() {
        sizes.set(i, Treatment(1), n as f64 / 2.0);
        sizes.set(i, Treatment::CONTROL, n as f64 / 2.0);
    }
    SampleLayout::new(sizes)
}

/// Mean over `n_iter` multinomial strata draws of the true FWER of the
/// nested-design anova test when its critical value assumes `nu = 0`.
/// `effects` are the subgroup effects; the cancelling configuration is
/// [`EXAMPLE1_EFFECTS`].
pub fn example1_analytic(
    n_total: u64,
    n_iter: usize,
    effects: &[f64; 3],
    alpha: f64,
    qmc: &QmcSettings,
    stream: &RngStream,
) -> Result<Example1Summary> {
    if n_iter == 0 {
        return Err(Error::Argument("at least one iteration is required".into()));
    }
    let design = TrialDesign::nested3();
    let model = PopulationModel::from_subgroup_effects(
        &design,
        EXAMPLE1_PREVALENCES.to_vec(),
        &[0.0; 3],
        effects,
        EXAMPLE1_SIGMA2,
    )?;
    let mut rng = stream.rng();
    let mut counts = [0u64; 3];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for it in 0..n_iter {
        multinomial_into(&mut rng, n_total, &EXAMPLE1_PREVALENCES, &mut counts)?;
        let layout = balanced_layout(&design, &counts)?;
        let corr = anova_correlation(&layout, &design)?;
        let sub = stream.child(it as u64);
        let c = equicoordinate_quantile(&corr, alpha, None, qmc, &sub.child(0))?;
        let nu = anova_noncentrality(&design, &layout, model.means(), EXAMPLE1_SIGMA2)?;
        let fwer = true_fwer_given_shift(&nu, &corr, c, qmc, &sub.child(1))?;
        sum += fwer;
        sum_sq += fwer * fwer;
    }
    let n = n_iter as f64;
    let mean = sum / n;
    let var = if n_iter > 1 { (sum_sq - n * mean * mean).max(0.0) / (n - 1.0) } else { 0.0 };
    Ok(Example1Summary {
        n_total,
        n_iter,
        alpha,
        mean_fwer: mean,
        mc_se: (var / n).sqrt(),
    })
}

/// Empirical variances of `nu_1 = (4 n_2 - n_3) / sqrt(N)` and
/// `nu_2 = (4 n_2 - n_3) / sqrt(n_2 + n_3)` over `n_draws` multinomial draws.
/// The limits are 10/3 and 4.
pub fn noncentrality_variances(n_total: u64, n_draws: usize, stream: &RngStream) -> Result<(f64, f64)> {
    if n_draws < 2 {
        return Err(Error::Argument("need at least two draws for a variance".into()));
    }
    let mut rng = stream.rng();
    let mut counts = [0u64; 3];
    let mut nu1 = Vec::with_capacity(n_draws);
    let mut nu2 = Vec::with_capacity(n_draws);
    for _ in 0..n_draws {
        multinomial_into(&mut rng, n_total, &EXAMPLE1_PREVALENCES, &mut counts)?;
        let num = 4.0 * counts[1] as f64 - counts[2] as f64;
        nu1.push(num / (n_total as f64).sqrt());
        nu2.push(num / ((counts[1] + counts[2]) as f64).sqrt());
    }
    Ok((sample_variance(&nu1), sample_variance(&nu2)))
}

fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
}
