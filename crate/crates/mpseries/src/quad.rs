//! Shared numerical kernels: adaptive Gauss–Kronrod quadrature, the periodic
//! trapezoid rule, and deterministic pairwise summation.

use num_complex::Complex64;

/// Values a quadrature rule can accumulate (real or complex).
pub trait QuadValue: Copy {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn scale(self, k: f64) -> Self;
    fn norm(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
    fn norm(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
    fn norm(self) -> f64 {
        num_complex::Complex::norm(self)
    }
}

// 7-point Gauss / 15-point Kronrod pair (QUADPACK abscissae and weights).
// Gauss nodes sit at the odd indices of XGK; X = 0 is index 7.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_7,
    0.949_107_912_342_758_524_526_189_7,
    0.864_864_423_359_769_072_789_712_8,
    0.741_531_185_599_394_439_863_864_8,
    0.586_087_235_467_691_130_294_144_8,
    0.405_845_151_377_397_166_906_606_4,
    0.207_784_955_007_898_467_600_689_4,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_0,
    0.063_092_092_629_978_553_290_700_7,
    0.104_790_010_322_250_183_839_876_3,
    0.140_653_259_715_525_918_745_189_6,
    0.169_004_726_639_267_902_826_583_4,
    0.190_350_578_064_785_409_913_256_4,
    0.204_432_940_075_298_892_414_162_0,
    0.209_482_141_084_727_828_012_999_2,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_4,
    0.279_705_391_489_276_667_901_467_8,
    0.381_830_050_505_118_944_950_369_8,
    0.417_959_183_673_469_387_755_102_0,
];

/// Result of a quadrature call.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

fn kronrod_panel<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> (T, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut kronrod = f_center.scale(WGK[7]);
    let mut gauss = f_center.scale(WG[3]);
    let mut res_abs = f_center.norm() * WGK[7];

    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kronrod = kronrod.add(f1.add(f2).scale(WGK[j]));
        res_abs += WGK[j] * (f1.norm() + f2.norm());
        if j % 2 == 1 {
            gauss = gauss.add(f1.add(f2).scale(WG[j / 2]));
        }
    }

    let value = kronrod.scale(half);
    let raw_err = kronrod.add(gauss.scale(-1.0)).norm() * half.abs();
    // The usual (200·err)^{3/2} sharpening of the raw Gauss/Kronrod gap.
    let res_abs = res_abs * half.abs();
    let mut err = raw_err;
    if res_abs > 0.0 && raw_err > 0.0 {
        let scale = (200.0 * raw_err / res_abs).powf(1.5);
        if scale < 1.0 {
            err = res_abs * scale;
        }
    }
    err = err.max(50.0 * f64::EPSILON * res_abs);
    (value, err)
}

#[derive(Debug, Clone, Copy)]
struct Interval<T> {
    a: f64,
    b: f64,
    value: T,
    err: f64,
}

/// Adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// Stops when the summed error estimate drops below
/// `max(abs_tol, rel_tol · |integral|)` or when `max_intervals` panels have
/// been produced. The returned error estimate is the summed panel estimate.
pub fn adaptive_quad<T: QuadValue, F: Fn(f64) -> T>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> QuadResult<T> {
    adaptive_quad_seeded(f, a, b, &[], abs_tol, rel_tol, max_intervals)
}

/// Adaptive quadrature with an initial subdivision.
///
/// `seeds` lists interior break points (values outside `(a, b)` are ignored);
/// useful when the integrand has known near-singular points.
pub fn adaptive_quad_seeded<T: QuadValue, F: Fn(f64) -> T>(
    f: F,
    a: f64,
    b: f64,
    seeds: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> QuadResult<T> {
    let mut cuts: Vec<f64> = vec![a];
    let mut sorted: Vec<f64> = seeds.iter().copied().filter(|&s| s > a && s < b).collect();
    sorted.sort_by(|p, q| p.partial_cmp(q).unwrap());
    sorted.dedup();
    cuts.extend_from_slice(&sorted);
    cuts.push(b);

    let mut evaluations = 0usize;
    let mut intervals: Vec<Interval<T>> = Vec::with_capacity(cuts.len().max(16));
    for w in cuts.windows(2) {
        let (value, err) = kronrod_panel(&f, w[0], w[1]);
        evaluations += 15;
        intervals.push(Interval { a: w[0], b: w[1], value, err });
    }

    loop {
        let mut total = T::zero();
        let mut total_err = 0.0;
        for iv in &intervals {
            total = total.add(iv.value);
            total_err += iv.err;
        }
        let target = abs_tol.max(rel_tol * total.norm());
        if total_err <= target || intervals.len() >= max_intervals {
            return QuadResult {
                value: total,
                error_estimate: total_err,
                evaluations,
                converged: total_err <= target,
            };
        }

        // Split the panel with the largest error (leftmost on ties, so the
        // refinement order is deterministic).
        let mut worst = 0usize;
        for (i, iv) in intervals.iter().enumerate() {
            if iv.err > intervals[worst].err
                || (iv.err == intervals[worst].err && iv.a < intervals[worst].a)
            {
                worst = i;
            }
        }
        let Interval { a: ia, b: ib, .. } = intervals[worst];
        let mid = 0.5 * (ia + ib);
        if !(mid > ia && mid < ib) {
            // Interval no longer splittable in f64; accept what we have.
            let mut total = T::zero();
            let mut total_err = 0.0;
            for iv in &intervals {
                total = total.add(iv.value);
                total_err += iv.err;
            }
            return QuadResult { value: total, error_estimate: total_err, evaluations, converged: false };
        }
        let (v1, e1) = kronrod_panel(&f, ia, mid);
        let (v2, e2) = kronrod_panel(&f, mid, ib);
        evaluations += 30;
        intervals[worst] = Interval { a: ia, b: mid, value: v1, err: e1 };
        intervals.push(Interval { a: mid, b: ib, value: v2, err: e2 });
    }
}

/// Trapezoid rule for a `period`-periodic function: the mean of `n`
/// equispaced samples starting at `x0`, times the period. Spectrally accurate
/// for periodic analytic integrands.
pub fn trapezoid_periodic<T: QuadValue, F: Fn(f64) -> T>(f: F, x0: f64, period: f64, n: usize) -> T {
    assert!(n > 0 && period > 0.0);
    let step = period / n as f64;
    let samples: Vec<T> = (0..n).map(|j| f(x0 + step * j as f64)).collect();
    pairwise_sum(&samples).scale(step)
}

/// Pairwise (tree) summation with a fixed reduction order.
///
/// Used as the reduction for all term sums so that parallel evaluation into
/// an indexed buffer followed by this reduction gives bit-identical results
/// regardless of thread count.
pub fn pairwise_sum<T: QuadValue>(values: &[T]) -> T {
    match values.len() {
        0 => T::zero(),
        1 => values[0],
        2..=8 => {
            let mut acc = values[0];
            for v in &values[1..] {
                acc = acc.add(*v);
            }
            acc
        }
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]).add(pairwise_sum(&values[mid..]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_trig_integrals() {
        let r = adaptive_quad(|x: f64| x * x, 0.0, 1.0, 1e-14, 0.0, 100);
        assert!((r.value - 1.0 / 3.0).abs() < 1e-13, "got {}", r.value);
        assert!(r.converged);

        let r = adaptive_quad(|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-13, 0.0, 200);
        assert!((r.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn error_estimate_is_honest_on_a_kink() {
        let r = adaptive_quad(|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-12, 0.0, 400);
        let exact = 0.3f64.powi(2) / 2.0 + 0.7f64.powi(2) / 2.0;
        assert!((r.value - exact).abs() <= r.error_estimate.max(1e-12));
    }

    #[test]
    fn seeded_subdivision_handles_integrable_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2, singular at the left endpoint.
        let f = |x: f64| if x > 0.0 { x.powf(-0.5) } else { 0.0 };
        let seeds: Vec<f64> = (1..25).map(|k| 2f64.powi(-k)).collect();
        let r = adaptive_quad_seeded(f, 0.0, 1.0, &seeds, 1e-9, 0.0, 4000);
        assert!((r.value - 2.0).abs() < 1e-6, "got {} err {}", r.value, r.error_estimate);
    }

    #[test]
    fn complex_quadrature() {
        // ∫_0^1 e^{ix} dx = sin 1 + i(1 − cos 1)
        let r = adaptive_quad(|x: f64| Complex64::new(0.0, x).exp(), 0.0, 1.0, 1e-13, 0.0, 100);
        assert!((r.value.re - 1f64.sin()).abs() < 1e-13);
        assert!((r.value.im - (1.0 - 1f64.cos())).abs() < 1e-13);
    }

    #[test]
    fn periodic_trapezoid_is_spectral() {
        // Mean of e^{ix} over a full period is 0; of |sin x|-free smooth
        // periodic functions it converges geometrically.
        let v = trapezoid_periodic(|x| Complex64::new(0.0, x).exp(), 0.0, 2.0 * std::f64::consts::PI, 32);
        assert!(v.norm() < 1e-14);

        let g = |x: f64| (2.0 + x.cos()).recip();
        let exact = 2.0 * std::f64::consts::PI / 3f64.sqrt();
        let v = trapezoid_periodic(g, 0.0, 2.0 * std::f64::consts::PI, 48);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn pairwise_sum_matches_sequential_and_is_order_fixed() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 1e-3).collect();
        let seq: f64 = xs.iter().sum();
        let tree = pairwise_sum(&xs);
        assert!((seq - tree).abs() < 1e-9);
        assert_eq!(tree, pairwise_sum(&xs));
    }
}
