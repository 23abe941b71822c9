use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::gamma_ur;

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    Normal::standard().cdf(z)
}

/// Upper tail of the chi-square distribution.
pub fn chi2_sf(x: f64, dof: u32) -> f64 {
    assert!(dof > 0, "dof must be positive");
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    gamma_ur(dof as f64 / 2.0, x / 2.0).clamp(0.0, 1.0)
}

/// Upper tail of the studentized range of `k` standard normals with
/// infinite degrees of freedom:
/// `1 - ∫ k φ(z) [Φ(z) - Φ(z - q)]^(k-1) dz`.
pub fn studentized_range_sf(q: f64, k: u32) -> f64 {
    assert!(k >= 2, "k must be at least 2");
    if q <= 0.0 || q.is_nan() {
        return 1.0;
    }
    if q.is_infinite() {
        return 0.0;
    }
    let kf = k as f64;
    let integrand = |z: f64| {
        let phi = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        kf * phi * (normal_cdf(z) - normal_cdf(z - q)).powi(k as i32 - 1)
    };
    // φ(z) is below 1e-40 outside ±13.5; the bracket vanishes below z = 0 - 13.5.
    let breaks = [-13.5, -6.0, -2.0, 0.0, 2.0, 6.0, 13.5 + q];
    let mut cdf = 0.0;
    for w in breaks.windows(2) {
        cdf += quadrature::integrate(integrand, w[0], w[1], 1e-14).integral;
    }
    (1.0 - cdf).clamp(0.0, 1.0)
}
