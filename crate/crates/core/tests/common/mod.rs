//! Independent reference computations shared by the integration suites.
#![allow(dead_code)]

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite Gauss–Legendre quadrature of `f` over `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let rule = gauss_legendre(20);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * h;
        let mid = lo + 0.5 * h;
        let part: f64 = rule.iter().map(|&(x, w)| w * f(mid + 0.5 * h * x)).sum();
        total += 0.5 * h * part;
    }
    total
}

/// Γ((ν+1)/2) / Γ(ν/2) for integer ν, by the exact two-step recurrence.
pub fn gamma_ratio(df: u32) -> f64 {
    let pi = std::f64::consts::PI;
    let (mut r, start) = if df % 2 == 1 {
        (1.0 / pi.sqrt(), 1)
    } else {
        (pi.sqrt() / 2.0, 2)
    };
    let mut nu = start;
    while nu < df {
        r *= (nu as f64 + 1.0) / nu as f64;
        nu += 2;
    }
    r
}

/// Two-sided Student t p-value by direct integration of the density:
/// `1 - 2 ∫_0^|t| f(x) dx`.
pub fn t_pvalue_quadrature(t: f64, df: u32) -> f64 {
    let nu = df as f64;
    let c = gamma_ratio(df) / (nu * std::f64::consts::PI).sqrt();
    let density = |x: f64| c * (1.0 + x * x / nu).powf(-(nu + 1.0) / 2.0);
    let t = t.abs();
    if t == 0.0 {
        return 1.0;
    }
    let panels = (t * 16.0).ceil() as usize;
    1.0 - 2.0 * integrate(density, 0.0, t, panels.max(1))
}

/// Asymptotic 1% critical value of the one-sample Kolmogorov–Smirnov statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// One-sample KS statistic against Uniform(0, 1).
pub fn ks_uniform(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| ((i as f64 + 1.0) / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max)
}
