//! Series evaluation: the kernel F(z, s) = Σ_{n≥1} n^{s−1} e^{2πinz/h} on two
//! independent paths, Poincaré averaging over enumerated cosets with a
//! reported truncation estimate, Fourier-coefficient extraction by the
//! periodic trapezoid rule, Petersson pairings through the coefficient
//! formula, and the L-function in Dirichlet-series and unfolded-integral
//! form.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::groups::{CosetList, GroupContext, GroupError};
use crate::mp2::HalfIntegerWeight;
use crate::quad::{adaptive_quad_seeded, pairwise_sum, QuadValue};
use crate::special::{self, SpecialError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("outside the valid domain: {0}")]
    Domain(String),
    #[error("series truncation failed: {0}")]
    Truncation(String),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Special(#[from] SpecialError),
}

/// Evaluation route for the kernel series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelPath {
    /// Term-by-term summation of n^{s−1} e^{2πinz/h} with a geometric tail
    /// bound; valid for every s.
    DirectSum,
    /// The summation identity
    /// F(z,s) = Γ(s)(2π)^{−s} e^{iπs/2} h^s Σ_{k∈ℤ} (z + kh)^{−s},
    /// powers taken on the branch arg ∈ (0, π); requires Re(s) > 1.
    Lipschitz,
}

/// The kernel series F(·, s) with period h and a selected evaluation path.
#[derive(Debug, Clone, Copy)]
pub struct KernelSpec {
    pub s: Complex64,
    pub period: f64,
    pub path: KernelPath,
}

/// A computed series value together with its truncation estimate.
#[derive(Debug, Clone, Copy)]
pub struct SeriesValue {
    pub value: Complex64,
    pub tail_estimate: f64,
}

const DEFAULT_KERNEL_TOL: f64 = 1e-12;
const DEFAULT_TERM_CAP: usize = 4_000_000;

/// Power w^s on the branch with arg(w) ∈ (0, π); defined for w in the upper
/// half-plane.
fn upper_pow(w: Complex64, s: Complex64) -> Complex64 {
    debug_assert!(w.im > 0.0);
    let log = Complex64::new(w.norm().ln(), w.im.atan2(w.re));
    (s * log).exp()
}

fn kernel_direct(
    s: Complex64,
    h: f64,
    z: Complex64,
    abs_tol: f64,
    term_cap: usize,
) -> Result<SeriesValue, KernelError> {
    let sigma = s.re;
    let q = (-2.0 * std::f64::consts::PI * z.im / h).exp();
    let phase = Complex64::new(0.0, 2.0 * std::f64::consts::PI / h) * z;
    let sm1 = s - 1.0;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut n = 0usize;
    loop {
        n += 1;
        if n > term_cap {
            return Err(KernelError::Truncation(format!(
                "direct path exceeded {term_cap} terms at Im(z) = {}",
                z.im
            )));
        }
        let nf = n as f64;
        let term = (sm1 * nf.ln() + phase * nf).exp();
        sum += term;
        let ratio = ((nf + 1.0) / nf).powf((sigma - 1.0).max(0.0)) * q;
        if ratio < 1.0 {
            let tail = term.norm() * ratio / (1.0 - ratio);
            // Meet the absolute target but keep full relative accuracy too;
            // the extra terms are geometric and cheap.
            let target = abs_tol.min(sum.norm() * 1e-13).max(1e-290);
            if tail <= target {
                return Ok(SeriesValue { value: sum, tail_estimate: tail });
            }
        }
    }
}

/// Euler–Maclaurin tail Σ_{t ≥ t0} (z ± th)^{−s} given the end value
/// w0 = z ± t0·h and the step (±h); returns the tail value and the magnitude
/// of the next omitted correction as its error.
fn em_tail(w0: Complex64, step: f64, s: Complex64) -> (Complex64, f64) {
    let pow = |p: Complex64| upper_pow(w0, p);
    let integral = pow(Complex64::new(1.0, 0.0) - s) / ((s - 1.0) * step);
    let g0 = pow(-s);
    let g1 = -s * step * pow(-s - 1.0);
    let g3 = -s * (s + 1.0) * (s + 2.0) * step.powi(3) * pow(-s - 3.0);
    let value = integral + g0 * 0.5 - g1 / 12.0 + g3 / 720.0;
    let g5 = s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * step.powi(5) * pow(-s - 5.0);
    (value, g5.norm() / 30240.0)
}

fn kernel_lipschitz(
    s: Complex64,
    h: f64,
    z: Complex64,
    abs_tol: f64,
    k_cap: usize,
) -> Result<SeriesValue, KernelError> {
    if s.re <= 1.0 {
        return Err(KernelError::Domain(format!(
            "the lattice-sum path requires Re(s) > 1, got {}",
            s.re
        )));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    // Γ(s)(2π)^{−s} e^{iπs/2} h^s
    let front = special::gamma(s)?
        * (-s * two_pi.ln()).exp()
        * (Complex64::new(0.0, std::f64::consts::FRAC_PI_2) * s).exp()
        * (s * h.ln()).exp();
    let front_norm = front.norm();
    let tol_core = abs_tol / front_norm.max(1e-300);

    let mut k_half = 48usize.max((z.re.abs() / h).ceil() as usize + 16);
    let k_cap = k_cap.max(2 * k_half);
    loop {
        let mut terms: Vec<Complex64> = Vec::with_capacity(2 * k_half + 1);
        for k in -(k_half as i64)..=(k_half as i64) {
            terms.push(upper_pow(z + (k as f64) * h, -s));
        }
        let core = pairwise_sum(&terms);
        let (t_plus, e_plus) = em_tail(z + ((k_half + 1) as f64) * h, h, s);
        let (t_minus, e_minus) = em_tail(z - ((k_half + 1) as f64) * h, -h, s);
        let em_err = e_plus + e_minus;
        let full = core + t_plus + t_minus;
        let target = tol_core.min(full.norm() * 1e-13).max(1e-290);
        if em_err <= target || k_half >= k_cap {
            return Ok(SeriesValue { value: front * full, tail_estimate: front_norm * em_err });
        }
        k_half *= 2;
    }
}

/// Evaluates the kernel series on the requested path with the default
/// tolerance. Rejects points off the upper half-plane, and Re(s) ≤ 1 on the
/// lattice-sum path.
pub fn kernel_eval(spec: &KernelSpec, z: Complex64) -> Result<SeriesValue, KernelError> {
    kernel_eval_tol(spec, z, DEFAULT_KERNEL_TOL, DEFAULT_TERM_CAP)
}

/// Kernel evaluation with an explicit absolute tolerance and term cap.
pub fn kernel_eval_tol(
    spec: &KernelSpec,
    z: Complex64,
    abs_tol: f64,
    term_cap: usize,
) -> Result<SeriesValue, KernelError> {
    if !(z.im > 0.0) {
        return Err(KernelError::Domain(format!("Im(z) must be positive, got {}", z.im)));
    }
    if !(spec.period > 0.0) {
        return Err(KernelError::Domain(format!("period must be positive, got {}", spec.period)));
    }
    match spec.path {
        KernelPath::DirectSum => kernel_direct(spec.s, spec.period, z, abs_tol, term_cap),
        KernelPath::Lipschitz => kernel_lipschitz(spec.s, spec.period, z, abs_tol, term_cap),
    }
}

/// Automatic path choice: the direct sum decays fast for large Im(z)/h, the
/// lattice sum handles small heights (and needs Re(s) > 1).
fn kernel_eval_auto(
    s: Complex64,
    h: f64,
    z: Complex64,
    abs_tol: f64,
    term_cap: usize,
) -> Result<SeriesValue, KernelError> {
    let scaled_height = 2.0 * std::f64::consts::PI * z.im / h;
    if scaled_height >= 1.0 || s.re <= 1.0 {
        kernel_direct(s, h, z, abs_tol, term_cap)
    } else {
        kernel_lipschitz(s, h, z, abs_tol, term_cap)
    }
}

/// The seed function averaged by a Poincaré series.
#[derive(Debug, Clone, Copy)]
pub enum SeedFunction {
    /// e^{2πin z/h}
    Exponential { index: u32 },
    /// The kernel F(z, s).
    Kernel { s: Complex64 },
}

/// Truncation controls for coset sums.
#[derive(Debug, Clone, Copy)]
pub struct TruncationBudget {
    /// Largest |c| enumerated.
    pub c_bound: f64,
    /// Term-count floor for inner kernel evaluations.
    pub n_terms: usize,
    /// Absolute error target apportioned over the truncation sources.
    pub target_abs_error: f64,
}

impl TruncationBudget {
    pub fn new(c_bound: f64, n_terms: usize, target_abs_error: f64) -> Result<Self, KernelError> {
        if !(c_bound > 0.0) || n_terms == 0 || !(target_abs_error > 0.0) {
            return Err(KernelError::Domain("budget fields must be positive".into()));
        }
        Ok(Self { c_bound, n_terms, target_abs_error })
    }

    /// Default budget for a level: c up to 400·level, 200-term kernel floor,
    /// 1e−8 target.
    pub fn for_level(level: u32) -> Self {
        Self { c_bound: 400.0 * level as f64, n_terms: 200, target_abs_error: 1e-8 }
    }
}

/// A Poincaré series value with its truncation estimate and the
/// central-mismatch flag (set when the character disagrees with the weight
/// character on the center, which forces the exact value 0).
#[derive(Debug, Clone, Copy)]
pub struct PoincareValue {
    pub value: Complex64,
    pub tail_estimate: f64,
    pub central_mismatch: bool,
}

/// Per-term majorant of the coset sum as Σ coef·r^p over the bottom-row
/// radius r = |cz + d|. Exponents must be < −1 for summable d-tails and
/// < −2 for summable c-tails; otherwise the tail is reported as infinite.
fn seed_majorant_pairs(seed: &SeedFunction, m: f64, h: f64, y: f64) -> Vec<(f64, f64)> {
    match seed {
        SeedFunction::Exponential { .. } => vec![(1.0, -m)],
        SeedFunction::Kernel { s } => {
            let sigma = s.re;
            let a_unit = 2.0 * std::f64::consts::PI * y / h;
            if sigma <= 1.0 {
                // Σ n^{σ−1} e^{−an} ≤ e^{−a}/(1−e^{−a}) ≤ 1/a
                vec![(1.0 / a_unit, 2.0 - m)]
            } else {
                // Σ n^{σ−1} e^{−an} ≤ Γ(σ)/a^σ + ((σ−1)/(a e))^{σ−1}
                let g = special::gamma_real(sigma).unwrap_or(f64::INFINITY);
                let c1 = g * a_unit.powf(-sigma);
                let c2 = ((sigma - 1.0) / (a_unit * std::f64::consts::E)).powf(sigma - 1.0);
                vec![(c1, 2.0 * sigma - m), (c2, 2.0 * (sigma - 1.0) - m)]
            }
        }
    }
}

/// Omitted-mass estimate for a truncated coset sum at height y: the d-window
/// tails for enumerated c plus the whole c > c_bound block, from the r^p
/// model.
fn truncation_tail(
    pairs: &[(f64, f64)],
    level: f64,
    c_bound: f64,
    d_halfwidth: f64,
    y: f64,
) -> f64 {
    let num_c = (c_bound / level).floor().max(0.0);
    let mut tail = 0.0;
    for &(coef, p) in pairs {
        if !(p < -1.0) {
            return f64::INFINITY;
        }
        // d-tail per enumerated c: 2·coef·T^{p+1}/(−p−1).
        tail += num_c * 2.0 * coef * d_halfwidth.powf(p + 1.0) / (-p - 1.0);

        if num_c < 1.0 {
            continue;
        }
        if !(p < -2.0) {
            return f64::INFINITY;
        }
        // Rows beyond c_bound: Σ_{d∈ℤ}(u² + (cy)²)^{p/2} ≤
        // (cy)^{p+1}·B(−p) + (cy)^p with B(q) = ∫(t²+1)^{−q/2}dt, then the
        // c-sum over multiples of the level by integral comparison.
        let b = match special::cauchy_power_integral(-p / 2.0) {
            Ok(v) => v,
            Err(_) => return f64::INFINITY,
        };
        let sum_pow = |q: f64| level.powf(q) * num_c.powf(q + 1.0) / (-q - 1.0);
        tail += coef * (y.powf(p + 1.0) * b * sum_pow(p + 1.0) + y.powf(p) * sum_pow(p));
    }
    tail
}

/// Averages the seed over the enumerated cosets:
/// Σ_γ conj(χ(γ)) · (seed|ₘγ)(z), with a deterministic pairwise reduction
/// and a reported truncation estimate.
///
/// Values are h-periodic, so Re(z) is reduced modulo the cusp width first.
/// When the character disagrees with the weight character on the center the
/// exact value is 0 and the mismatch flag is set. Kernel seeds are accepted
/// on Re(s) < m/2 − 1 or 1 < Re(s) < m/2 only.
pub fn poincare_eval(
    ctx: &GroupContext,
    cosets: &CosetList,
    seed: &SeedFunction,
    z: Complex64,
    budget: &TruncationBudget,
) -> Result<PoincareValue, KernelError> {
    if !(z.im > 0.0) {
        return Err(KernelError::Domain(format!("Im(z) must be positive, got {}", z.im)));
    }
    if !ctx.invariants.central_compatible {
        return Ok(PoincareValue {
            value: Complex64::new(0.0, 0.0),
            tail_estimate: 0.0,
            central_mismatch: true,
        });
    }
    let m = ctx.spec.weight.value();
    let h = ctx.cusp_width();
    if let SeedFunction::Kernel { s } = seed {
        let sigma = s.re;
        let ok = sigma < m / 2.0 - 1.0 || (1.0 < sigma && sigma < m / 2.0);
        if !ok {
            return Err(KernelError::Domain(format!(
                "kernel seed needs Re(s) < m/2 − 1 or 1 < Re(s) < m/2; got Re(s) = {sigma}, m = {m}"
            )));
        }
    }

    let z = Complex64::new(z.re.rem_euclid(h), z.im);
    let weight = ctx.spec.weight;
    let n_reps = cosets.reps.len().max(1);
    let per_eval_tol = budget.target_abs_error / (10.0 * n_reps as f64);
    let t_window = cosets.d_halfwidth;
    let term_cap = budget.n_terms.max(DEFAULT_TERM_CAP / 8);

    let terms: Vec<Result<(Complex64, f64), KernelError>> = cosets
        .reps
        .par_iter()
        .map(|rep| {
            if rep.row_c != 0 {
                let u = rep.row_c as f64 * z.re + rep.row_d as f64;
                if u.abs() > t_window {
                    return Ok((Complex64::new(0.0, 0.0), 0.0));
                }
            }
            let g = &rep.element;
            let w = g.moebius(z);
            let aut = g.automorphy_power(z, weight);
            let sv = match seed {
                SeedFunction::Exponential { index } => SeriesValue {
                    value: (Complex64::new(0.0, 2.0 * std::f64::consts::PI * *index as f64 / h)
                        * w)
                        .exp(),
                    tail_estimate: 0.0,
                },
                SeedFunction::Kernel { s } => kernel_eval_auto(*s, h, w, per_eval_tol, term_cap)?,
            };
            Ok((rep.chi_conj * sv.value * aut, sv.tail_estimate * aut.norm()))
        })
        .collect();

    let mut values = Vec::with_capacity(terms.len());
    let mut inner_tail = 0.0;
    for t in terms {
        let (v, e) = t?;
        values.push(v);
        inner_tail += e;
    }
    let value = pairwise_sum(&values);

    let pairs = seed_majorant_pairs(seed, m, h, z.im);
    let geom_tail = truncation_tail(&pairs, ctx.level() as f64, cosets.c_bound, t_window, z.im);

    Ok(PoincareValue { value, tail_estimate: geom_tail + inner_tail, central_mismatch: false })
}

/// Extracts Fourier coefficients a_1..a_K of an h-periodic holomorphic
/// evaluator from one horizontal line:
/// a_n = e^{2πn y₀/h} · (1/h)∫₀^h f(x + iy₀) e^{−2πinx/h} dx,
/// trapezoid rule with at least 8K equispaced nodes (spectrally accurate
/// for periodic analytic integrands).
pub fn fourier_coefficients<F>(f: F, period: f64, y0: f64, count: usize) -> Vec<Complex64>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    assert!(period > 0.0 && y0 > 0.0 && count > 0);
    let nodes = (8 * count).max(64);
    let step = period / nodes as f64;
    let samples: Vec<Complex64> = (0..nodes)
        .into_par_iter()
        .map(|j| f(Complex64::new(step * j as f64, y0)))
        .collect();
    coefficients_from_samples(&samples, period, y0, count)
}

fn coefficients_from_samples(
    samples: &[Complex64],
    period: f64,
    y0: f64,
    count: usize,
) -> Vec<Complex64> {
    let nodes = samples.len();
    let step = period / nodes as f64;
    (1..=count)
        .map(|n| {
            let w = -2.0 * std::f64::consts::PI * n as f64 / period;
            let weighted: Vec<Complex64> = samples
                .iter()
                .enumerate()
                .map(|(j, v)| v * Complex64::from_polar(1.0, w * (step * j as f64)))
                .collect();
            pairwise_sum(&weighted).scale(1.0 / nodes as f64)
                * (2.0 * std::f64::consts::PI * n as f64 * y0 / period).exp()
        })
        .collect()
}

/// Fourier coefficients of a truncated Poincaré series, with per-coefficient
/// error estimates (the pointwise truncation tail amplified by the
/// extraction factor e^{2πn y₀/h}).
pub fn poincare_fourier_coefficients(
    ctx: &GroupContext,
    cosets: &CosetList,
    seed: &SeedFunction,
    y0: f64,
    count: usize,
) -> Result<(Vec<Complex64>, Vec<f64>), KernelError> {
    let h = ctx.cusp_width();
    let budget = TruncationBudget { c_bound: cosets.c_bound, n_terms: 8192, target_abs_error: 1e-10 };
    let nodes = (8 * count).max(64);
    let step = h / nodes as f64;
    let samples: Vec<Result<PoincareValue, KernelError>> = (0..nodes)
        .into_par_iter()
        .map(|j| poincare_eval(ctx, cosets, seed, Complex64::new(step * j as f64, y0), &budget))
        .collect();
    let mut values = Vec::with_capacity(nodes);
    let mut max_tail: f64 = 0.0;
    for s in samples {
        let pv = s?;
        values.push(pv.value);
        max_tail = max_tail.max(pv.tail_estimate);
    }
    let coeffs = coefficients_from_samples(&values, h, y0, count);
    let errors: Vec<f64> = (1..=count)
        .map(|n| max_tail * (2.0 * std::f64::consts::PI * n as f64 * y0 / h).exp())
        .collect();
    Ok((coeffs, errors))
}

/// A truncated Fourier expansion Σ_{n=1}^{K} a_n e^{2πinz/h} with a power
/// tail model |a_n| ≤ C·n^growth_exponent for the omitted modes.
#[derive(Debug, Clone)]
pub struct FourierSeries {
    pub weight: HalfIntegerWeight,
    pub period: f64,
    pub coeffs: Vec<Complex64>,
    pub growth_constant: f64,
    pub growth_exponent: f64,
}

impl FourierSeries {
    /// Builds a series with the standard cusp-form growth model
    /// |a_n| ≤ C n^{m/2}, C fitted from the given coefficients.
    pub fn new(
        weight: HalfIntegerWeight,
        period: f64,
        coeffs: Vec<Complex64>,
    ) -> Result<Self, KernelError> {
        if coeffs.is_empty() || !(period > 0.0) {
            return Err(KernelError::Domain(
                "need at least one coefficient and a positive period".into(),
            ));
        }
        let exponent = weight.value() / 2.0;
        let mut c: f64 = 0.0;
        for (i, a) in coeffs.iter().enumerate() {
            c = c.max(a.norm() / ((i + 1) as f64).powf(exponent));
        }
        Ok(Self { weight, period, coeffs, growth_constant: c, growth_exponent: exponent })
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Evaluates the truncated expansion; the tail bound covers the omitted
    /// modes under the growth model.
    pub fn evaluate(&self, z: Complex64) -> Result<SeriesValue, KernelError> {
        if !(z.im > 0.0) {
            return Err(KernelError::Domain(format!("Im(z) must be positive, got {}", z.im)));
        }
        let h = self.period;
        let terms: Vec<Complex64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| {
                a * (Complex64::new(0.0, 2.0 * std::f64::consts::PI * (i + 1) as f64 / h) * z).exp()
            })
            .collect();
        let value = pairwise_sum(&terms);
        let k1 = (self.len() + 1) as f64;
        let r = (-2.0 * std::f64::consts::PI * z.im / h).exp();
        let ratio = r * (1.0 + 1.0 / k1).powf(self.growth_exponent.max(0.0));
        let tail = if ratio < 1.0 {
            self.growth_constant * k1.powf(self.growth_exponent) * r.powi(k1 as i32)
                / (1.0 - ratio)
        } else {
            f64::INFINITY
        };
        Ok(SeriesValue { value, tail_estimate: tail })
    }
}

/// L-value by direct Dirichlet summation Σ a_n n^{−s}, valid on
/// Re(s) > m/2 + 1; the tail estimate integrates the growth model.
pub fn lvalue_dirichlet(series: &FourierSeries, s: Complex64) -> Result<SeriesValue, KernelError> {
    let m = series.weight.value();
    if !(s.re > m / 2.0 + 1.0) {
        return Err(KernelError::Domain(format!(
            "Dirichlet summation needs Re(s) > m/2 + 1 = {}, got {}",
            m / 2.0 + 1.0,
            s.re
        )));
    }
    let terms: Vec<Complex64> = series
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, a)| a * (-s * ((i + 1) as f64).ln()).exp())
        .collect();
    let value = pairwise_sum(&terms);
    // Σ_{n>K} C n^{m/2−σ} ≤ C K^{m/2−σ+1}/(σ − m/2 − 1)
    let k = series.len() as f64;
    let tail = series.growth_constant * k.powf(m / 2.0 - s.re + 1.0) / (s.re - m / 2.0 - 1.0);
    Ok(SeriesValue { value, tail_estimate: tail })
}

/// L-value through the unfolded strip integral
/// (4π)^{m−1}/(h^m Γ(m−1)) ∫_0^∞ g(y) y^{m−2} dy with
/// g(y) = h Σ_n a_n n^{m−1−s} e^{−4πny/h}, the exact x-integral over one
/// period of the expansion paired against the conjugated kernel. Valid on
/// m/2 < Re(s) < m−1 and on Re(s) > m/2+1; on the overlap it reproduces the
/// Dirichlet series, elsewhere it is its analytic continuation.
pub fn lvalue_unfolded(series: &FourierSeries, s: Complex64) -> Result<SeriesValue, KernelError> {
    let m = series.weight.value();
    let sigma = s.re;
    let in_strip = m / 2.0 < sigma && sigma < m - 1.0;
    let in_halfplane = sigma > m / 2.0 + 1.0;
    if !in_strip && !in_halfplane {
        return Err(KernelError::Domain(format!(
            "unfolded integral defined on m/2 < Re(s) < m−1 or Re(s) > m/2+1; got Re(s) = {sigma}, m = {m}"
        )));
    }
    let h = series.period;
    let b: Vec<Complex64> = series
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, a)| a * ((Complex64::new(m - 1.0, 0.0) - s) * ((i + 1) as f64).ln()).exp())
        .collect();
    let four_pi = 4.0 * std::f64::consts::PI;
    let integrand = |y: f64| -> Complex64 {
        let terms: Vec<Complex64> = b
            .iter()
            .enumerate()
            .map(|(i, bn)| bn * (-four_pi * (i + 1) as f64 * y / h).exp())
            .collect();
        pairwise_sum(&terms).scale(h * y.powf(m - 2.0))
    };

    let split = h / four_pi;
    let y_max = (m + 45.0) * h / four_pi;
    let low = adaptive_quad_seeded(
        integrand,
        0.0,
        split,
        &[split * 1e-4, split * 1e-2, split * 0.1, split * 0.5],
        1e-13,
        1e-12,
        2000,
    );
    let high = adaptive_quad_seeded(
        integrand,
        split,
        y_max,
        &[2.0 * split, 4.0 * split, 8.0 * split, 16.0 * split, 32.0 * split],
        1e-13,
        1e-12,
        2000,
    );

    // Analytic bound on the omitted y > y_max mass, term by term:
    // ∫_Y^∞ e^{−κy} y^{m−2} dy = κ^{1−m} Γ(m−1, κY).
    let mut cut_tail = 0.0;
    for (i, bn) in b.iter().enumerate() {
        let kappa = four_pi * (i + 1) as f64 / h;
        let q = special::regularized_upper_gamma(m - 1.0, kappa * y_max)?;
        cut_tail += bn.norm() * h * special::gamma_real(m - 1.0)? * kappa.powf(1.0 - m) * q;
    }

    let ln_pref =
        (m - 1.0) * four_pi.ln() - m * h.ln() - special::ln_gamma_real(m - 1.0)?;
    let pref = ln_pref.exp();
    let value = (low.value + high.value) * pref;
    let tail = (low.error_estimate + high.error_estimate + cut_tail) * pref;
    Ok(SeriesValue { value, tail_estimate: tail })
}

/// Petersson inner product against the n-th classical Poincaré series,
/// recovered from the coefficient formula:
/// ⟨f, ψ_n⟩ = h^m Γ(m−1) / (ε_Γ (4πn)^{m−1}) · a_n(f).
pub fn petersson_inner_product(
    series: &FourierSeries,
    n: usize,
    ctx: &GroupContext,
) -> Result<Complex64, KernelError> {
    if n == 0 || n > series.len() {
        return Err(KernelError::Domain(format!(
            "coefficient index {n} out of range 1..={}",
            series.len()
        )));
    }
    let m = series.weight.value();
    let h = series.period;
    let eps = ctx.center_order() as f64;
    let ln_front = m * h.ln() + special::ln_gamma_real(m - 1.0)?
        - (m - 1.0) * (4.0 * std::f64::consts::PI * n as f64).ln();
    Ok(series.coeffs[n - 1] * (ln_front.exp() / eps))
}

/// Serializes a coefficient table as CSV with header `n,re,im` and 17
/// significant digits (round-trip exact for doubles).
pub fn coefficients_to_csv(coeffs: &[Complex64]) -> String {
    let mut out = String::from("n,re,im\n");
    for (i, a) in coeffs.iter().enumerate() {
        out.push_str(&format!("{},{:.17e},{:.17e}\n", i + 1, a.re, a.im));
    }
    out
}

/// Parses a coefficient table in the `n,re,im` CSV format; rows must be the
/// contiguous indices 1..K in order.
pub fn coefficients_from_csv(text: &str) -> Result<Vec<Complex64>, KernelError> {
    let mut lines = text.lines();
    match lines.next().map(str::trim) {
        Some("n,re,im") => {}
        other => {
            return Err(KernelError::Domain(format!(
                "expected header \"n,re,im\", got {other:?}"
            )))
        }
    }
    let mut coeffs = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (n, re, im) = (fields.next(), fields.next(), fields.next());
        let (Some(n), Some(re), Some(im)) = (n, re, im) else {
            return Err(KernelError::Domain(format!("row {}: need n,re,im", k + 2)));
        };
        let n: usize = n
            .trim()
            .parse()
            .map_err(|e| KernelError::Domain(format!("row {}: bad index: {e}", k + 2)))?;
        if n != coeffs.len() + 1 {
            return Err(KernelError::Domain(format!(
                "row {}: expected index {}, got {n}",
                k + 2,
                coeffs.len() + 1
            )));
        }
        let re: f64 = re
            .trim()
            .parse()
            .map_err(|e| KernelError::Domain(format!("row {}: bad re: {e}", k + 2)))?;
        let im: f64 = im
            .trim()
            .parse()
            .map_err(|e| KernelError::Domain(format!("row {}: bad im: {e}", k + 2)))?;
        coeffs.push(Complex64::new(re, im));
    }
    if coeffs.is_empty() {
        return Err(KernelError::Domain("coefficient table is empty".into()));
    }
    Ok(coeffs)
}

/// Analytic majorant of the strip L¹ mass of Σ a_n e^{2πin·/h} against
/// y^{m/2} dv: Σ |a_n| n^{1−m/2} · h^{m/2} (2π)^{1−m/2} Γ(m/2 − 1). Any box
/// integral of the term-wise absolute values is bounded by it.
pub fn strip_l1_majorant(series: &FourierSeries) -> Result<f64, KernelError> {
    let m = series.weight.value();
    if m <= 2.0 {
        return Err(KernelError::Domain("strip majorant needs m > 2".into()));
    }
    let h = series.period;
    let gamma_factor = special::gamma_real(m / 2.0 - 1.0)?;
    let mut sum = 0.0;
    for (i, a) in series.coeffs.iter().enumerate() {
        sum += a.norm() * ((i + 1) as f64).powf(1.0 - m / 2.0);
    }
    Ok(sum * h.powf(m / 2.0) * (2.0 * std::f64::consts::PI).powf(1.0 - m / 2.0) * gamma_factor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{enumerate_cosets, BranchParity, DirichletCharacter, GroupSpec, IntMatrix};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ctx4() -> GroupContext {
        GroupContext::new(GroupSpec::new(4, DirichletCharacter::trivial(4), "13/2".parse().unwrap()))
            .unwrap()
    }

    fn cpow(base: Complex64, n: usize) -> Complex64 {
        (base * (n as f64).ln()).exp()
    }

    #[test]
    fn kernel_geometric_closed_form() {
        // s = 1: Σ e^{2πinz/h} = q/(1−q), q = e^{2πiz/h}.
        for (z, h) in [(c(0.3, 0.7), 1.0), (c(-0.2, 0.4), 2.0)] {
            let spec = KernelSpec { s: c(1.0, 0.0), period: h, path: KernelPath::DirectSum };
            let got = kernel_eval(&spec, z).unwrap();
            let q = (Complex64::new(0.0, 2.0 * std::f64::consts::PI / h) * z).exp();
            let want = q / (1.0 - q);
            assert!((got.value - want).norm() < 1e-12, "{z} {h}");
        }
    }

    #[test]
    fn kernel_weighted_geometric_closed_form() {
        // s = 2 at z = i, h = 1: Σ n qⁿ = q/(1−q)², q = e^{−2π}.
        let spec = KernelSpec { s: c(2.0, 0.0), period: 1.0, path: KernelPath::DirectSum };
        let got = kernel_eval(&spec, c(0.0, 1.0)).unwrap();
        let q = (-2.0 * std::f64::consts::PI).exp();
        let want = q / (1.0 - q).powi(2);
        assert!((got.value.re - want).abs() < 1e-14 && got.value.im.abs() < 1e-14);
        // 40-digit reference
        assert!((got.value.re - 0.001874437002416851960833572578409643017465).abs() < 1e-15);

        let lip = KernelSpec { s: c(2.0, 0.0), period: 1.0, path: KernelPath::Lipschitz };
        let got = kernel_eval(&lip, c(0.0, 1.0)).unwrap();
        assert!((got.value.re - want).abs() < 1e-12, "lattice path {}", got.value);
    }

    #[test]
    fn kernel_two_paths_agree_on_grid() {
        for s in [c(1.5, 0.0), c(2.7, 3.0), c(5.0, 0.0)] {
            for z in [c(0.0, 1.0), c(0.3, 0.2), c(-0.4, 1.7)] {
                for h in [1.0, 2.0] {
                    let direct =
                        kernel_eval(&KernelSpec { s, period: h, path: KernelPath::DirectSum }, z)
                            .unwrap();
                    let lip =
                        kernel_eval(&KernelSpec { s, period: h, path: KernelPath::Lipschitz }, z)
                            .unwrap();
                    let rel = (direct.value - lip.value).norm() / direct.value.norm();
                    assert!(rel <= 1e-9, "s={s} z={z} h={h}: rel {rel:e}");
                }
            }
        }
    }

    #[test]
    fn kernel_domain_errors() {
        let spec = KernelSpec { s: c(0.8, 0.0), period: 1.0, path: KernelPath::Lipschitz };
        assert!(matches!(kernel_eval(&spec, c(0.0, 1.0)), Err(KernelError::Domain(_))));
        let spec = KernelSpec { s: c(2.0, 0.0), period: 1.0, path: KernelPath::DirectSum };
        assert!(kernel_eval(&spec, c(0.0, -1.0)).is_err());
        assert!(kernel_eval(&spec, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn kernel_small_height_via_lattice_sum() {
        let s = c(2.5, 0.0);
        let spec = KernelSpec { s, period: 1.0, path: KernelPath::Lipschitz };
        let v = kernel_eval(&spec, c(0.37, 0.08)).unwrap();
        let d = kernel_eval(&KernelSpec { path: KernelPath::DirectSum, ..spec }, c(0.37, 0.08))
            .unwrap();
        assert!((v.value - d.value).norm() < 1e-9 * d.value.norm());

        // ~ r^{−σ} blow-up near the pole at z = 0 stays finite and cheap.
        let tiny = kernel_eval(&spec, c(1e-7, 1e-7)).unwrap();
        assert!(tiny.value.norm() > 1e10);
    }

    #[test]
    fn poincare_central_mismatch_vanishes() {
        let mut spec = GroupSpec::new(4, DirichletCharacter::trivial(4), "13/2".parse().unwrap());
        spec.branch_parity = BranchParity::Even;
        let ctx = GroupContext::new(spec).unwrap();
        let cosets = enumerate_cosets(&ctx, 8.0, 1e-6).unwrap();
        let budget = TruncationBudget::new(8.0, 200, 1e-6).unwrap();
        let v = poincare_eval(
            &ctx,
            &cosets,
            &SeedFunction::Exponential { index: 1 },
            c(0.2, 1.0),
            &budget,
        )
        .unwrap();
        assert!(v.central_mismatch);
        assert_eq!(v.value, c(0.0, 0.0));
        assert_eq!(v.tail_estimate, 0.0);
    }

    #[test]
    fn poincare_identity_coset_only_returns_seed() {
        let ctx = ctx4();
        let cosets = enumerate_cosets(&ctx, 3.9, 1e-8).unwrap();
        assert_eq!(cosets.reps.len(), 1);
        let budget = TruncationBudget::new(3.9, 200, 1e-8).unwrap();
        let z = c(0.3, 0.9);
        let v = poincare_eval(&ctx, &cosets, &SeedFunction::Exponential { index: 1 }, z, &budget)
            .unwrap();
        let seed = (Complex64::new(0.0, 2.0 * std::f64::consts::PI) * z).exp();
        assert!((v.value - seed).norm() < 1e-14);

        let s = c(2.8, 0.5);
        let v = poincare_eval(&ctx, &cosets, &SeedFunction::Kernel { s }, z, &budget).unwrap();
        let want = kernel_eval(&KernelSpec { s, period: 1.0, path: KernelPath::DirectSum }, z).unwrap();
        assert!((v.value - want.value).norm() < 1e-10 * want.value.norm().max(1.0));
    }

    #[test]
    fn poincare_kernel_seed_domain() {
        let ctx = ctx4();
        let cosets = enumerate_cosets(&ctx, 4.0, 1e-6).unwrap();
        let budget = TruncationBudget::new(4.0, 200, 1e-6).unwrap();
        // m = 13/2: allowed below 2.25 and on (1, 3.25).
        for bad in [c(3.25, 0.0), c(3.3, 1.0), c(8.0, 0.0)] {
            let r = poincare_eval(&ctx, &cosets, &SeedFunction::Kernel { s: bad }, c(0.1, 1.0), &budget);
            assert!(matches!(r, Err(KernelError::Domain(_))), "s = {bad}");
        }
        for good in [c(0.5, 0.0), c(2.0, 1.0), c(3.2, 0.0)] {
            assert!(
                poincare_eval(&ctx, &cosets, &SeedFunction::Kernel { s: good }, c(0.1, 1.0), &budget)
                    .is_ok(),
                "s = {good}"
            );
        }
    }

    #[test]
    fn poincare_self_convergence_in_c_bound() {
        let ctx = ctx4();
        let z = c(0.0, 1.0);
        let seed = SeedFunction::Exponential { index: 1 };
        let eval = |c_bound: f64| {
            let cosets = enumerate_cosets(&ctx, c_bound, 1e-10).unwrap();
            let budget = TruncationBudget::new(c_bound, 200, 1e-10).unwrap();
            poincare_eval(&ctx, &cosets, &seed, z, &budget).unwrap()
        };
        let p4 = eval(4.0);
        let p40 = eval(40.0);
        let p400 = eval(400.0);
        let d1 = (p40.value - p4.value).norm();
        let d2 = (p400.value - p40.value).norm();
        assert!(d2 < d1, "Cauchy differences should shrink: {d1:e} vs {d2:e}");
        assert!(d2 < 1e-6);
        assert!(d2 <= p40.tail_estimate + p400.tail_estimate, "estimate too optimistic");
    }

    #[test]
    fn poincare_slash_equivariance() {
        // P(f)|ₘγ = χ(γ)·P(f) up to the truncation estimates.
        let ctx = ctx4();
        let cosets = enumerate_cosets(&ctx, 600.0, 1e-10).unwrap();
        let budget = TruncationBudget::new(600.0, 200, 1e-10).unwrap();
        let seed = SeedFunction::Exponential { index: 1 };
        let gamma = crate::groups::theta_lift(&IntMatrix { a: 1, b: 0, c: 4, d: 1 }, 4).unwrap();
        let chi = ctx.character_value(&gamma).unwrap();
        let z = c(0.31, 1.2);
        let moved = gamma.act(z).unwrap();
        let lhs = poincare_eval(&ctx, &cosets, &seed, moved, &budget).unwrap();
        let rhs = poincare_eval(&ctx, &cosets, &seed, z, &budget).unwrap();
        let aut = gamma.automorphy_power(z, ctx.spec.weight);
        let left = lhs.value * aut;
        let right = chi * rhs.value;
        let slack = lhs.tail_estimate * aut.norm() + rhs.tail_estimate + 1e-9;
        assert!((left - right).norm() <= slack, "{left} vs {right}, slack {slack:e}");
    }

    #[test]
    fn fourier_extraction_of_pure_modes() {
        // The extraction factor e^{2πny₀/h} amplifies sample roundoff, so the
        // line must sit low enough for the requested mode count.
        let h = 1.0;
        let f = |z: Complex64| (Complex64::new(0.0, 2.0 * std::f64::consts::PI / h) * z).exp();
        let a = fourier_coefficients(f, h, 0.3, 6);
        assert!((a[0] - c(1.0, 0.0)).norm() < 1e-10);
        for k in 1..6 {
            assert!(a[k].norm() < 1e-10, "a_{} = {}", k + 1, a[k]);
        }
    }

    #[test]
    fn fourier_extraction_independent_of_height() {
        let h = 1.0;
        let f = |z: Complex64| {
            let e = |n: f64| (Complex64::new(0.0, 2.0 * std::f64::consts::PI * n / h) * z).exp();
            e(1.0) + 0.3 * e(2.0) - c(0.0, 0.7) * e(3.0)
        };
        // Low modes stay stable across a wide span of heights.
        let a1 = fourier_coefficients(&f, h, 0.5, 2);
        let a2 = fourier_coefficients(&f, h, 1.0, 2);
        let a3 = fourier_coefficients(&f, h, 2.0, 2);
        for n in 0..2 {
            assert!((a1[n] - a2[n]).norm() < 1e-8, "n={} {:?} {:?}", n + 1, a1[n], a2[n]);
            assert!((a1[n] - a3[n]).norm() < 1e-8);
        }
        // Higher modes require proportionally lower lines.
        let b1 = fourier_coefficients(&f, h, 0.3, 4);
        let b2 = fourier_coefficients(&f, h, 0.45, 4);
        for n in 0..4 {
            assert!((b1[n] - b2[n]).norm() < 1e-9, "n={}", n + 1);
        }
    }

    #[test]
    fn dirichlet_lvalue_delta_and_zeta_oracle() {
        let w: HalfIntegerWeight = "13/2".parse().unwrap();
        let mut coeffs = vec![c(0.0, 0.0); 8];
        coeffs[0] = c(1.0, 0.0);
        let f = FourierSeries::new(w, 1.0, coeffs).unwrap();
        let v = lvalue_dirichlet(&f, c(5.0, 0.0)).unwrap();
        assert!((v.value - c(1.0, 0.0)).norm() < 1e-15);

        // a_n = n^{m/2} exactly: partial zeta against plain summation.
        let m = w.value();
        let coeffs: Vec<Complex64> = (1..=40).map(|n| c((n as f64).powf(m / 2.0), 0.0)).collect();
        let f = FourierSeries::new(w, 1.0, coeffs).unwrap();
        let s = c(5.5, 1.0);
        let v = lvalue_dirichlet(&f, s).unwrap();
        let mut direct = c(0.0, 0.0);
        for n in 1..=40 {
            direct += cpow(c(m / 2.0, 0.0) - s, n);
        }
        assert!((v.value - direct).norm() < 1e-12 * direct.norm());
        assert!(lvalue_dirichlet(&f, c(4.0, 0.0)).is_err());
    }

    #[test]
    fn unfolded_lvalue_single_modes() {
        let w: HalfIntegerWeight = "13/2".parse().unwrap();
        // δ₁ gives exactly 1 for every s in the domain.
        let f = FourierSeries::new(w, 1.0, vec![c(1.0, 0.0)]).unwrap();
        for s in [c(4.0, 0.0), c(5.0, 1.0), c(3.5, -0.7), c(4.7, 0.0)] {
            let v = lvalue_unfolded(&f, s).unwrap();
            assert!((v.value - c(1.0, 0.0)).norm() < 1e-8, "s={s}: {}", v.value);
        }
        // (0, 1, 0, …) gives 2^{−s}; oracle is the exact gamma integral
        // ∫ y^{m−2} e^{−8πy/h} dy collapsing the prefactors to 2^{−s}·2^{1-m}·2^{m-1}.
        let f = FourierSeries::new(w, 1.0, vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        for s in [c(4.0, 0.0), c(5.2, 0.6)] {
            let v = lvalue_unfolded(&f, s).unwrap();
            let want = (-s * 2f64.ln()).exp();
            assert!((v.value - want).norm() < 1e-8 * want.norm().max(1.0), "s={s}");
        }
        // Left of the strip is rejected; for m > 4 the strip and half-plane
        // overlap, so large real parts stay in the domain.
        assert!(lvalue_unfolded(&f, c(3.0, 0.0)).is_err());
        assert!(lvalue_unfolded(&f, c(5.6, 0.0)).is_ok());
        // For m < 4 a genuine gap strip m−1 ≤ Re(s) ≤ m/2+1 opens up.
        let w_small: HalfIntegerWeight = "5/2".parse().unwrap();
        let g = FourierSeries::new(w_small, 1.0, vec![c(1.0, 0.0)]).unwrap();
        assert!(lvalue_unfolded(&g, c(2.0, 0.0)).is_err());
        assert!(lvalue_unfolded(&g, c(1.4, 0.0)).is_ok());
        assert!(lvalue_unfolded(&g, c(2.5, 0.0)).is_ok());
    }

    #[test]
    fn unfolded_matches_dirichlet_in_overlap() {
        let w: HalfIntegerWeight = "13/2".parse().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let coeffs: Vec<Complex64> =
            (0..24).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let f = FourierSeries::new(w, 1.0, coeffs).unwrap();
        for s in [c(4.5, 0.0), c(5.0, 1.3)] {
            let a = lvalue_dirichlet(&f, s).unwrap();
            let b = lvalue_unfolded(&f, s).unwrap();
            assert!(
                (a.value - b.value).norm() < 1e-8 * a.value.norm().max(1.0),
                "s={s}: {} vs {}",
                a.value,
                b.value
            );
        }
    }

    #[test]
    fn petersson_pairing_via_coefficients() {
        let ctx = ctx4();
        let w = ctx.spec.weight;
        let f = FourierSeries::new(w, 1.0, vec![c(0.0, 0.0), c(2.0, 1.0)]).unwrap();
        assert_eq!(petersson_inner_product(&f, 1, &ctx).unwrap(), c(0.0, 0.0));
        assert!(petersson_inner_product(&f, 3, &ctx).is_err());
        // Linear in the coefficients.
        let doubled = FourierSeries::new(w, 1.0, vec![c(0.0, 0.0), c(4.0, 2.0)]).unwrap();
        let p1 = petersson_inner_product(&f, 2, &ctx).unwrap();
        let p2 = petersson_inner_product(&doubled, 2, &ctx).unwrap();
        assert!((p2 - 2.0 * p1).norm() < 1e-12 * p1.norm());
    }

    #[test]
    fn poincare_norm_is_positive() {
        // ⟨ψ₁, ψ₁⟩ from the numerically extracted first coefficient.
        let ctx = ctx4();
        let cosets = enumerate_cosets(&ctx, 80.0, 1e-9).unwrap();
        let (coeffs, errs) = poincare_fourier_coefficients(
            &ctx,
            &cosets,
            &SeedFunction::Exponential { index: 1 },
            0.4,
            4,
        )
        .unwrap();
        let f = FourierSeries::new(ctx.spec.weight, 1.0, coeffs).unwrap();
        let norm = petersson_inner_product(&f, 1, &ctx).unwrap();
        assert!(norm.re > 0.0);
        assert!(norm.im.abs() < 1e-6 * norm.re, "imaginary residue too large: {norm}");
        assert!(errs[0] < 1e-6);
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let coeffs: Vec<Complex64> = (0..32)
            .map(|_| {
                c(
                    rng.gen_range(-1.0..1.0) * 10f64.powi(rng.gen_range(-12..12)),
                    rng.gen_range(-1.0..1.0) * 10f64.powi(rng.gen_range(-12..12)),
                )
            })
            .collect();
        let text = coefficients_to_csv(&coeffs);
        assert!(text.starts_with("n,re,im\n"));
        let back = coefficients_from_csv(&text).unwrap();
        assert_eq!(coeffs, back, "17 significant digits must round-trip doubles exactly");

        assert!(coefficients_from_csv("bogus\n1,2,3\n").is_err());
        assert!(coefficients_from_csv("n,re,im\n2,1.0,0.0\n").is_err());
        assert!(coefficients_from_csv("n,re,im\n").is_err());
    }

    #[test]
    fn strip_majorant_bounds_box_mass() {
        let w: HalfIntegerWeight = "13/2".parse().unwrap();
        let f = FourierSeries::new(w, 1.0, vec![c(1.0, 0.0), c(0.0, -0.5), c(0.25, 0.0)]).unwrap();
        let major = strip_l1_majorant(&f).unwrap();
        // Box [0, h]×[y1, y2] integral of Σ_n |a_n e^{2πinz/h}| y^{m/2} dv.
        let m = w.value();
        let inner = |y: f64| -> f64 {
            let absum: f64 = f
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, a)| a.norm() * (-2.0 * std::f64::consts::PI * (i + 1) as f64 * y).exp())
                .sum();
            absum * y.powf(m / 2.0 - 2.0)
        };
        let box_mass =
            adaptive_quad_seeded(inner, 0.05, 6.0, &[0.1, 0.5, 1.0], 1e-11, 1e-10, 2000).value;
        assert!(box_mass <= major, "box {box_mass} exceeds majorant {major}");
        assert!(box_mass > 0.25 * major, "box should capture much of the strip here");
    }
}
