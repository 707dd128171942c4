//! Equicoordinate critical values and rectangle probabilities for max-type
//! statistics.

use fwer_seh::numerics::{
    equicoordinate_quantile, mv_normal_prob, mv_t_prob, CorrelationMatrix, QmcSettings, RngStream,
};

fn main() -> fwer_seh::Result<()> {
    let qmc = QmcSettings::default();
    let stream = RngStream::new(7);
    let alpha = 0.025;

    println!("{:>6} {:>10} {:>10}", "rho", "normal", "t(40)");
    for rho in [0.0, 0.3, 0.6, 0.9] {
        let corr = CorrelationMatrix::equicorrelated(3, rho)?;
        let z = equicoordinate_quantile(&corr, alpha, None, &qmc, &stream)?;
        let t = equicoordinate_quantile(&corr, alpha, Some(40.0), &qmc, &stream)?;
        println!("{rho:>6.1} {z:>10.4} {t:>10.4}");
    }

    // plugging the quantile back in recovers 1 - alpha
    let corr = CorrelationMatrix::from_rows(&[vec![1.0, 0.5, 0.2], vec![0.5, 1.0, 0.4], vec![0.2, 0.4, 1.0]])?;
    let c = equicoordinate_quantile(&corr, alpha, None, &qmc, &stream)?;
    let p = mv_normal_prob(&[c; 3], &corr, &qmc, &stream)?;
    println!("c = {c:.4}, P(max <= c) = {:.5} +- {:.1e}", p.value, p.error_estimate);

    let pt = mv_t_prob(&[2.0, 2.0, 2.0], &corr, 10.0, &qmc, &stream)?;
    println!("t(10) rectangle at 2: {:.5} ({} points)", pt.value, pt.points_used);
    Ok(())
}
