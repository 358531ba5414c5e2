//! Standard normal CDF and quantile, and the Kolmogorov–Smirnov distance.
//!
//! Everything downstream is judged against the standard normal law, so these
//! are held to near machine precision rather than Monte Carlo precision.

use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Probability(f64);

impl Probability {
    pub fn new(p: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&p) {
            Ok(Probability(p))
        } else {
            Err(Error::Domain(format!("probability {p} is outside [0, 1]")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// A point `z` with `P(Z <= z) = p` for the standard normal `Z`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct NormalQuantile(f64);

impl NormalQuantile {
    pub fn get(self) -> f64 {
        self.0
    }
}

/// `P(Z <= x)` without argument checking; NaN in gives NaN out.
///
/// Evaluated through `erfc` on the side of the origin where it does not
/// cancel, so both tails keep full relative accuracy.
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// `P(Z <= x)` for a standard normal `Z`.
pub fn normal_cdf(x: f64) -> Result<Probability> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("normal_cdf of non-finite {x}")));
    }
    Ok(Probability(std_normal_cdf(x)))
}

// Acklam's rational approximation, relative error ~1.15e-9 before refinement.
const A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];
const P_LOW: f64 = 0.02425;

fn acklam_lower(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p <= 0.5);
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

fn quantile_lower(p: f64) -> f64 {
    let x = acklam_lower(p);
    // One Halley step against the erfc-based CDF.
    let pdf = std_normal_pdf(x);
    if pdf <= 0.0 || !pdf.is_finite() {
        return x;
    }
    let u = (std_normal_cdf(x) - p) / pdf;
    x - u / (1.0 + 0.5 * x * u)
}

/// Inverse of the standard normal CDF on `(0, 1)`.
pub fn normal_quantile(p: f64) -> Result<NormalQuantile> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("normal_quantile requires 0 < p < 1, got {p}")));
    }
    let z = if p <= 0.5 {
        quantile_lower(p)
    } else {
        -quantile_lower(1.0 - p)
    };
    Ok(NormalQuantile(z))
}

/// Two-sided Kolmogorov–Smirnov distance between the empirical CDF of
/// `values` (sorted ascending, duplicates allowed) and `cdf`.
pub fn ks_distance(values: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("ks_distance of an empty sample".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("ks_distance input contains NaN".into()));
    }
    if values.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument(
            "ks_distance input is not sorted ascending".into(),
        ));
    }
    let n = values.len() as f64;
    let d = values.iter().enumerate().fold(0.0_f64, |d, (i, &x)| {
        let f = cdf(x);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        d.max(above).max(below)
    });
    Ok(d.clamp(0.0, 1.0))
}

/// KS distance to the standard normal law.
pub fn ks_to_normal(values: &[f64]) -> Result<f64> {
    ks_distance(values, std_normal_cdf)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from a 40-digit arbitrary precision evaluation.
    const CDF_REF: [(f64, f64); 10] = [
        (1.6448536, 0.949_999_997_220_342_5),
        (-1.0, 0.158_655_253_931_457_05),
        (1.0, 0.841_344_746_068_542_9),
        (-3.0, 0.001_349_898_031_630_094_5),
        (-5.0, 2.866_515_718_791_939e-7),
        (-8.0, 6.220_960_574_271_784e-16),
        (-10.0, 7.619_853_024_160_526e-24),
        (-37.0, 5.725_571_222_524_577e-300),
        (2.5, 0.993_790_334_674_224),
        (6.0, 0.999_999_999_013_412_4),
    ];

    #[test]
    fn cdf_at_zero() {
        assert_eq!(normal_cdf(0.0).unwrap().get(), 0.5);
    }

    #[test]
    fn cdf_matches_reference() {
        for (x, want) in CDF_REF {
            let got = std_normal_cdf(x);
            assert!((got - want).abs() <= 1e-12, "x={x}: {got} vs {want}");
            if want < 1e-3 {
                assert!(((got - want) / want).abs() < 1e-13, "tail relative error at {x}");
            }
        }
        assert!((std_normal_cdf(1.6448536) - 0.95).abs() < 1e-7);
    }

    #[test]
    fn cdf_rejects_non_finite() {
        assert!(matches!(normal_cdf(f64::NAN), Err(Error::InvalidArgument(_))));
        assert!(normal_cdf(f64::INFINITY).is_err());
    }

    #[test]
    fn cdf_symmetry_and_monotone_grid() {
        let mut prev = 0.0;
        for k in 0..=10_000 {
            let x = -8.0 + 16.0 * k as f64 / 10_000.0;
            let f = std_normal_cdf(x);
            assert!(f >= prev);
            prev = f;
            assert!((f + std_normal_cdf(-x) - 1.0).abs() <= 1e-14);
        }
    }

    #[test]
    fn quantile_reference_values() {
        let refs = [
            (0.975, 1.959_963_984_540_054),
            (0.95, 1.644_853_626_951_472_2),
            (0.3, -0.524_400_512_708_040_8),
            (1e-10, -6.361_340_902_404_056),
            (0.999_999, 4.753_424_308_822_899),
        ];
        assert_eq!(normal_quantile(0.5).unwrap().get(), 0.0);
        for (p, want) in refs {
            let got = normal_quantile(p).unwrap().get();
            assert!((got - want).abs() < 1e-9, "p={p}: {got} vs {want}");
        }
        assert!((normal_quantile(0.975).unwrap().get() - 1.959964).abs() < 1e-5);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for k in 1..2000 {
            let p = k as f64 / 2000.0;
            let z = normal_quantile(p).unwrap().get();
            assert!((std_normal_cdf(z) - p).abs() <= 1e-10);
        }
        for k in 0..=1000 {
            let x = -5.0 + 10.0 * k as f64 / 1000.0;
            let z = normal_quantile(std_normal_cdf(x)).unwrap().get();
            assert!((z - x).abs() <= 1e-8, "x={x} z={z}");
        }
        let tiny = normal_quantile(1e-300).unwrap().get();
        assert!(tiny.is_finite() && tiny < -37.0);
    }

    #[test]
    fn quantile_domain() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(normal_quantile(p), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn ks_hand_example() {
        let d = ks_to_normal(&[-1.0, 0.0, 1.0]).unwrap();
        // max(1/3 - Phi(-1), Phi(1) - 2/3)
        assert!((d - 0.174_678_079_401_876).abs() < 1e-12);
    }

    #[test]
    fn ks_single_point_and_equioscillation() {
        assert_eq!(ks_to_normal(&[0.0]).unwrap(), 0.5);
        let n = 40;
        let pts: Vec<f64> = (1..=n)
            .map(|i| normal_quantile((i as f64 - 0.5) / n as f64).unwrap().get())
            .collect();
        let d = ks_to_normal(&pts).unwrap();
        assert!((d - 0.5 / n as f64).abs() < 1e-10);
    }

    #[test]
    fn ks_errors() {
        assert!(ks_to_normal(&[]).is_err());
        assert!(ks_to_normal(&[1.0, 0.0]).is_err());
        assert!(ks_to_normal(&[f64::NAN]).is_err());
    }

    #[test]
    fn ks_with_duplicates_uses_order_statistics() {
        let uniform = |x: f64| x.clamp(0.0, 1.0);
        let d = ks_distance(&[0.5, 0.5], uniform).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
        let d = ks_distance(&[0.25, 0.5, 0.5, 0.75], uniform).unwrap();
        assert!((d - 0.25).abs() < 1e-15);
    }
}
