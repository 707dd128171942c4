//! Closed forms and one-dimensional integrals used as independent references
//! for the rectangle probabilities.

use fwer_seh::numerics::dist::normal_cdf;
use fwer_seh::numerics::CorrelationMatrix;
use statrs::function::gamma::ln_gamma;

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

fn phi(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `P(X <= u)` for equicorrelated normals with `rho >= 0`, by conditioning
/// on the common factor.
pub fn equicorrelated_normal(u: &[f64], rho: f64) -> f64 {
    let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
    simpson(|z| phi(z) * u.iter().map(|&ui| normal_cdf((ui - a * z) / b)).product::<f64>(), -10.0, 10.0, 4000)
}

/// Same for the multivariate t: the normal case with every limit scaled by
/// `s = sqrt(chi2_nu / nu)`, integrated over the density of `s`.
pub fn equicorrelated_t(u: &[f64], rho: f64, nu: f64) -> f64 {
    let log_norm = std::f64::consts::LN_2 + 0.5 * nu * (0.5 * nu).ln() - ln_gamma(0.5 * nu);
    let density = |s: f64| {
        if s <= 0.0 {
            0.0
        } else {
            (log_norm + (nu - 1.0) * s.ln() - 0.5 * nu * s * s).exp()
        }
    };
    simpson(
        |s| {
            let scaled: Vec<f64> = u.iter().map(|x| x * s).collect();
            density(s) * equicorrelated_normal(&scaled, rho)
        },
        0.0,
        5.0,
        600,
    )
}

pub struct OracleCase {
    pub name: String,
    pub upper: Vec<f64>,
    pub corr: CorrelationMatrix,
    pub df: Option<f64>,
    pub expected: f64,
}

/// Twenty cases: independence factorization, perfect correlation and the
/// equicorrelated reduction, normal and t.
pub fn oracle_grid() -> Vec<OracleCase> {
    let mut out = Vec::new();
    let limits: [&[f64]; 5] = [
        &[0.5, 1.2, -0.3],
        &[2.0, 2.0, 2.0, 2.0],
        &[-0.5, 0.1, 1.7, 0.9, 2.2],
        &[1.0, -1.0, 0.0],
        &[2.3, 1.9, 2.1, 2.5, 1.8, 2.0],
    ];
    for u in limits {
        out.push(OracleCase {
            name: format!("independent d={}", u.len()),
            upper: u.to_vec(),
            corr: CorrelationMatrix::identity(u.len()),
            df: None,
            expected: u.iter().map(|&x| normal_cdf(x)).product(),
        });
    }
    for u in limits {
        let d = u.len();
        out.push(OracleCase {
            name: format!("comonotone d={d}"),
            upper: u.to_vec(),
            corr: CorrelationMatrix::equicorrelated(d, 1.0).unwrap(),
            df: None,
            expected: normal_cdf(u.iter().cloned().fold(f64::INFINITY, f64::min)),
        });
    }
    let equi: [(&[f64], f64); 7] = [
        (&[1.0, 1.5, 2.0], 0.3),
        (&[2.2, 2.2, 2.2], 0.5),
        (&[0.0, 0.0, 0.0, 0.0], 0.5),
        (&[1.9, 2.4, 2.1, 2.6], 0.8),
        (&[-0.4, 0.8, 1.3, 0.2, 1.1], 0.25),
        (&[2.0, 2.0], 0.6),
        (&[2.5, 2.4, 2.3, 2.2, 2.1, 2.0], 0.9),
    ];
    for (u, rho) in equi {
        out.push(OracleCase {
            name: format!("equicorrelated d={} rho={rho}", u.len()),
            upper: u.to_vec(),
            corr: CorrelationMatrix::equicorrelated(u.len(), rho).unwrap(),
            df: None,
            expected: equicorrelated_normal(u, rho),
        });
    }
    let equi_t: [(&[f64], f64, f64); 3] = [(&[2.0, 2.0, 2.0], 0.5, 8.0), (&[1.0, 2.0, 1.5, 0.5], 0.3, 5.0), (&[2.4, 2.4], 0.7, 20.0)];
    for (u, rho, nu) in equi_t {
        out.push(OracleCase {
            name: format!("t{nu} equicorrelated d={} rho={rho}", u.len()),
            upper: u.to_vec(),
            corr: CorrelationMatrix::equicorrelated(u.len(), rho).unwrap(),
            df: Some(nu),
            expected: equicorrelated_t(u, rho, nu),
        });
    }
    out
}
