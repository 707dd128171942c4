//! Bivariate normal CDF by Gauss-Legendre quadrature (Drezner-Wesolowsky
//! form with Genz's refinements for high correlation). Accurate to about
//! 1e-15, so the two-population normal case needs no Monte Carlo.

use std::f64::consts::PI;

use super::dist::normal_cdf;

const W6: [f64; 3] = [0.171_324_492_379_170_5, 0.360_761_573_048_138_4, 0.467_913_934_572_690_4];
const X6: [f64; 3] = [-0.932_469_514_203_152_2, -0.661_209_386_466_264_7, -0.238_619_186_083_197];
const W12: [f64; 6] = [
    0.047_175_336_386_511_77,
    0.106_939_325_995_318_3,
    0.160_078_328_543_346_4,
    0.203_167_426_723_065_9,
    0.233_492_536_538_354_7,
    0.249_147_045_813_402_9,
];
const X12: [f64; 6] = [
    -0.981_560_634_246_719_1,
    -0.904_117_256_370_475,
    -0.769_902_674_194_305,
    -0.587_317_954_286_617_1,
    -0.367_831_498_998_180_2,
    -0.125_233_408_511_469_2,
];
const W20: [f64; 10] = [
    0.017_614_007_139_152_12,
    0.040_601_429_800_386_94,
    0.062_672_048_334_109_06,
    0.083_276_741_576_704_75,
    0.101_930_119_817_240_4,
    0.118_194_531_961_518_4,
    0.131_688_638_449_176_6,
    0.142_096_109_318_382_1,
    0.149_172_986_472_603_7,
    0.152_753_387_130_725_9,
];
const X20: [f64; 10] = [
    -0.993_128_599_185_094_9,
    -0.963_971_927_277_913_8,
    -0.912_234_428_251_325_9,
    -0.839_116_971_822_218_8,
    -0.746_331_906_460_150_8,
    -0.636_053_680_726_515,
    -0.510_867_001_950_827_1,
    -0.373_706_088_715_419_6,
    -0.227_785_851_141_645_1,
    -0.076_526_521_133_497_33,
];

/// `P(X > h, Y > k)` for standard normals with correlation `r`.
fn upper(h: f64, k: f64, r: f64) -> f64 {
    if h == f64::INFINITY || k == f64::INFINITY {
        return 0.0;
    }
    if h == f64::NEG_INFINITY {
        return if k == f64::NEG_INFINITY { 1.0 } else { normal_cdf(-k) };
    }
    if k == f64::NEG_INFINITY {
        return normal_cdf(-h);
    }
    let (w, x): (&[f64], &[f64]) = if r.abs() < 0.3 {
        (&W6, &X6)
    } else if r.abs() < 0.75 {
        (&W12, &X12)
    } else {
        (&W20, &X20)
    };
    let mut hk = h * k;
    let mut bvn = 0.0;
    if r.abs() < 0.925 {
        let hs = (h * h + k * k) / 2.0;
        let asr = r.asin();
        for (&wi, &xi) in w.iter().zip(x) {
            for s in [1.0 - xi, 1.0 + xi] {
                let sn = (asr * s / 2.0).sin();
                bvn += wi * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        bvn = bvn * asr / (4.0 * PI) + normal_cdf(-h) * normal_cdf(-k);
    } else {
        let mut k = k;
        if r < 0.0 {
            k = -k;
            hk = -hk;
        }
        if r.abs() < 1.0 {
            let as_ = (1.0 - r) * (1.0 + r);
            let mut a = as_.sqrt();
            let bs = (h - k).powi(2);
            let c = (4.0 - hk) / 8.0;
            let d = (12.0 - hk) / 16.0;
            let asr = -(bs / as_ + hk) / 2.0;
            if asr > -100.0 {
                bvn = a * asr.exp() * (1.0 - c * (bs - as_) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as_ * as_ / 5.0);
            }
            if hk > -100.0 {
                let b = bs.sqrt();
                let sp = (2.0 * PI).sqrt() * normal_cdf(-b / a);
                bvn -= (-hk / 2.0).exp() * sp * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
            }
            a /= 2.0;
            for (&wi, &xi) in w.iter().zip(x) {
                for s in [-1.0, 1.0] {
                    let xs = (a + a * s * xi).powi(2);
                    let rs = (1.0 - xs).sqrt();
                    let asr = -(bs / xs + hk) / 2.0;
                    if asr > -100.0 {
                        let sp = 1.0 + c * xs * (1.0 + d * xs);
                        let ep = (-hk * (1.0 - rs) / (2.0 * (1.0 + rs))).exp() / rs;
                        bvn += a * wi * asr.exp() * (ep - sp);
                    }
                }
            }
            bvn = -bvn / (2.0 * PI);
        }
        if r > 0.0 {
            bvn += normal_cdf(-h.max(k));
        } else if h >= k {
            bvn = -bvn;
        } else {
            let l = if h < 0.0 {
                normal_cdf(k) - normal_cdf(h)
            } else {
                normal_cdf(-h) - normal_cdf(-k)
            };
            bvn = l - bvn;
        }
    }
    bvn.clamp(0.0, 1.0)
}

/// `P(X <= a, Y <= b)` for standard normals with correlation `r`.
pub(crate) fn bivariate_normal_cdf(a: f64, b: f64, r: f64) -> f64 {
    upper(-a, -b, r.clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn orthant_closed_form() {
        for r in [-0.99, -0.95, -0.8, -0.5, -0.1, 0.0, 0.2, 0.5, 0.74, 0.8, 0.93, 0.99, 0.999] {
            let expected = 0.25 + f64::asin(r) / (2.0 * PI);
            assert_abs_diff_eq!(bivariate_normal_cdf(0.0, 0.0, r), expected, epsilon = 1e-14);
        }
    }

    #[test]
    fn independence_and_degenerate_limits() {
        for (a, b) in [(0.3, -1.2), (2.0, 1.5), (-0.7, 0.4)] {
            assert_abs_diff_eq!(bivariate_normal_cdf(a, b, 0.0), normal_cdf(a) * normal_cdf(b), epsilon = 1e-15);
            assert_abs_diff_eq!(bivariate_normal_cdf(a, b, 1.0), normal_cdf(a.min(b)), epsilon = 1e-15);
            let anti = (normal_cdf(a) + normal_cdf(b) - 1.0).max(0.0);
            assert_abs_diff_eq!(bivariate_normal_cdf(a, b, -1.0), anti, epsilon = 1e-15);
        }
    }

    #[test]
    fn symmetric_in_arguments_and_sums_with_reflection() {
        // P(X<=a, Y<=b) + P(X<=a, Y>b) = Phi(a), and P(X<=a, -Y<=-b) has correlation -r
        for r in [-0.9, -0.4, 0.35, 0.95] {
            let (a, b) = (0.8, -0.3);
            assert_abs_diff_eq!(bivariate_normal_cdf(a, b, r), bivariate_normal_cdf(b, a, r), epsilon = 1e-15);
            let total = bivariate_normal_cdf(a, b, r) + bivariate_normal_cdf(a, -b, -r);
            assert_abs_diff_eq!(total, normal_cdf(a), epsilon = 1e-14);
        }
    }
}
