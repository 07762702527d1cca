//! Batch front end for the `mpseries` library.
//!
//! Commands: `eval` (Poincaré series values), `coeffs` (CSV coefficient
//! tables), `lvalue` (Dirichlet and unfolded L-values), `certify`
//! (non-vanishing certificates), `m0` (minimal-weight scan), and `sanity`
//! (special-function identity suite). Options come from flags or a key-value
//! config file; flags override the file. Reports are deterministic: the
//! same configuration produces byte-identical output at any thread count.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use mpseries::certificates::{
    certify_kernel_nonvanishing, certify_lvalue_positivity, find_min_weight, Gauge, RectangleSpec,
    Verdict,
};
use mpseries::groups::{build_group, enumerate_cosets, DirichletCharacter, GroupContext, GroupSpec};
use mpseries::kernels::{
    coefficients_from_csv, coefficients_to_csv, lvalue_dirichlet, lvalue_unfolded, poincare_eval,
    poincare_fourier_coefficients, FourierSeries, SeedFunction, TruncationBudget,
};
use mpseries::mp2::HalfIntegerWeight;
use mpseries::special;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Eval,
    Coeffs,
    Lvalue,
    Certify,
    MinWeight,
    Sanity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Report,
    Csv,
}

/// Partially specified options, as read from a config file or flags.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub level: Option<u32>,
    pub weight: Option<String>,
    pub character: Option<String>,
    pub s: Option<String>,
    pub z: Option<String>,
    pub seed: Option<String>,
    pub c_bound: Option<f64>,
    pub n_terms: Option<usize>,
    pub tol: Option<f64>,
    pub gauge: Option<String>,
    pub count: Option<usize>,
    pub y0: Option<f64>,
    pub eps: Option<f64>,
    pub nu: Option<f64>,
    pub eta: Option<f64>,
    pub coeffs_in: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub threads: Option<usize>,
}

impl Options {
    /// Overlays `flags` on top of `self` (flag values win).
    pub fn merged_with(mut self, flags: Options) -> Options {
        macro_rules! take {
            ($($f:ident),*) => { $( if flags.$f.is_some() { self.$f = flags.$f; } )* };
        }
        take!(level, weight, character, s, z, seed, c_bound, n_terms, tol, gauge, count, y0, eps,
              nu, eta, coeffs_in, out, format, threads);
        self
    }
}

/// Parses the key-value config file: one `key = value` per line, `#`
/// comments, keys matching the long flag names.
pub fn options_from_file(path: &Path) -> Result<Options, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {path:?}: {e}"))?;
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("{path:?}:{}: expected key = value", idx + 1))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    let mut o = Options::default();
    for (k, v) in map {
        match k.as_str() {
            "level" => o.level = Some(v.parse().map_err(|e| format!("level: {e}"))?),
            "weight" | "m" => o.weight = Some(v),
            "character" => o.character = Some(v),
            "s" => o.s = Some(v),
            "z" => o.z = Some(v),
            "seed" => o.seed = Some(v),
            "c-bound" => o.c_bound = Some(v.parse().map_err(|e| format!("c-bound: {e}"))?),
            "n-terms" => o.n_terms = Some(v.parse().map_err(|e| format!("n-terms: {e}"))?),
            "tol" => o.tol = Some(v.parse().map_err(|e| format!("tol: {e}"))?),
            "gauge" => o.gauge = Some(v),
            "count" => o.count = Some(v.parse().map_err(|e| format!("count: {e}"))?),
            "y0" => o.y0 = Some(v.parse().map_err(|e| format!("y0: {e}"))?),
            "eps" => o.eps = Some(v.parse().map_err(|e| format!("eps: {e}"))?),
            "nu" => o.nu = Some(v.parse().map_err(|e| format!("nu: {e}"))?),
            "eta" => o.eta = Some(v.parse().map_err(|e| format!("eta: {e}"))?),
            "coeffs-in" => o.coeffs_in = Some(PathBuf::from(v)),
            "out" => o.out = Some(PathBuf::from(v)),
            "format" => o.format = Some(v),
            "threads" => o.threads = Some(v.parse().map_err(|e| format!("threads: {e}"))?),
            other => return Err(format!("unknown config key {other:?}")),
        }
    }
    Ok(o)
}

/// Parses complex values written as `a`, `bi`, or `a+bi` / `a-bi`.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err("empty complex literal".into());
    }
    let bad = |_| format!("cannot parse complex number {s:?}");
    if let Some(im_part) = t.strip_suffix('i') {
        // Split at the last +/- that is not an exponent sign or leading sign.
        let bytes = im_part.as_bytes();
        let mut split = None;
        for j in (1..bytes.len()).rev() {
            let c = bytes[j] as char;
            if (c == '+' || c == '-') && !matches!(bytes[j - 1] as char, 'e' | 'E') {
                split = Some(j);
                break;
            }
        }
        match split {
            Some(j) => {
                let re: f64 = im_part[..j].parse().map_err(bad)?;
                let im_str = &im_part[j..];
                let im: f64 = if im_str == "+" {
                    1.0
                } else if im_str == "-" {
                    -1.0
                } else {
                    im_str.parse().map_err(bad)?
                };
                Ok(Complex64::new(re, im))
            }
            None => {
                let im: f64 = if im_part.is_empty() {
                    1.0
                } else if im_part == "-" {
                    -1.0
                } else {
                    im_part.parse().map_err(bad)?
                };
                Ok(Complex64::new(0.0, im))
            }
        }
    } else {
        Ok(Complex64::new(t.parse().map_err(bad)?, 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedChoice {
    Exponential(u32),
    Kernel,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub level: u32,
    pub weight: HalfIntegerWeight,
    pub character: String,
    pub s: Complex64,
    pub z: Complex64,
    pub seed: SeedChoice,
    pub c_bound: f64,
    pub n_terms: usize,
    pub tol: f64,
    pub gauge: Gauge,
    pub count: usize,
    pub y0: Option<f64>,
    pub eps: f64,
    pub nu: f64,
    pub eta: f64,
    pub coeffs_in: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub threads: usize,
}

/// Resolves partial options against the documented defaults.
pub fn resolve(command: Command, o: &Options) -> Result<RunConfig, String> {
    let level = o.level.unwrap_or(4);
    let weight: HalfIntegerWeight = o
        .weight
        .as_deref()
        .unwrap_or("13/2")
        .parse()
        .map_err(|e| format!("weight: {e}"))?;
    let s = parse_complex(o.s.as_deref().unwrap_or("3.0"))?;
    let z = parse_complex(o.z.as_deref().unwrap_or("i"))?;
    let seed = match o.seed.as_deref().unwrap_or("exp:1") {
        "kernel" => SeedChoice::Kernel,
        other => {
            let idx = other
                .strip_prefix("exp:")
                .ok_or_else(|| format!("seed must be exp:<n> or kernel, got {other:?}"))?;
            SeedChoice::Exponential(idx.parse().map_err(|e| format!("seed index: {e}"))?)
        }
    };
    let gauge: Gauge = o
        .gauge
        .as_deref()
        .unwrap_or("abs")
        .parse()
        .map_err(|e| format!("gauge: {e}"))?;
    let format = match o.format.as_deref().unwrap_or(if command == Command::Coeffs {
        "csv"
    } else {
        "report"
    }) {
        "report" => OutputFormat::Report,
        "csv" => OutputFormat::Csv,
        other => return Err(format!("format must be report or csv, got {other:?}")),
    };
    let tol = o.tol.unwrap_or(1e-8);
    if !(tol > 0.0) {
        return Err(format!("tol must be positive, got {tol}"));
    }
    let c_bound = o.c_bound.unwrap_or(400.0 * level as f64);
    if !(c_bound > 0.0) {
        return Err(format!("c-bound must be positive, got {c_bound}"));
    }
    let n_terms = o.n_terms.unwrap_or(200);
    if n_terms == 0 {
        return Err("n-terms must be positive".into());
    }
    let count = o.count.unwrap_or(16);
    if count == 0 {
        return Err("count must be positive".into());
    }
    Ok(RunConfig {
        command,
        level,
        weight,
        character: o.character.clone().unwrap_or_else(|| "trivial".into()),
        s,
        z,
        seed,
        c_bound,
        n_terms,
        tol,
        gauge,
        count,
        y0: o.y0,
        eps: o.eps.unwrap_or(1.0),
        nu: o.nu.unwrap_or(2.0),
        eta: o.eta.unwrap_or(1.0),
        coeffs_in: o.coeffs_in.clone(),
        out: o.out.clone(),
        format,
        threads: o.threads.unwrap_or(0),
    })
}

fn fmt(x: f64) -> String {
    format!("{x:.17e}")
}

fn character_from_label(label: &str, level: u32) -> Result<DirichletCharacter, String> {
    if label == "trivial" {
        return Ok(DirichletCharacter::trivial(level));
    }
    if let Some(top) = label.strip_prefix("kronecker:") {
        let top: i64 = top.parse().map_err(|e| format!("character: {e}"))?;
        return DirichletCharacter::kronecker(top, level).map_err(|e| format!("character: {e}"));
    }
    Err(format!("unknown character label {label:?} (use trivial or kronecker:D)"))
}

fn group_context(cfg: &RunConfig) -> Result<GroupContext, String> {
    let character = character_from_label(&cfg.character, cfg.level)?;
    let spec = GroupSpec::new(cfg.level, character, cfg.weight);
    build_group(&spec).map_err(|e| e.to_string())?;
    GroupContext::new(spec).map_err(|e| e.to_string())
}

fn seed_function(cfg: &RunConfig) -> SeedFunction {
    match cfg.seed {
        SeedChoice::Exponential(n) => SeedFunction::Exponential { index: n },
        SeedChoice::Kernel => SeedFunction::Kernel { s: cfg.s },
    }
}

fn emit(cfg: &RunConfig, text: &str, out: &mut dyn Write) -> Result<(), String> {
    if let Some(path) = &cfg.out {
        std::fs::write(path, text).map_err(|e| format!("cannot write {path:?}: {e}"))?;
    }
    out.write_all(text.as_bytes()).map_err(|e| e.to_string())
}

fn group_header(cfg: &RunConfig) -> String {
    let mut s = String::new();
    s.push_str(&format!("  level = {}\n", cfg.level));
    s.push_str(&format!("  weight = {}\n", cfg.weight));
    s.push_str(&format!("  character = {}\n", cfg.character));
    s
}

fn run_eval(cfg: &RunConfig) -> Result<(String, i32), String> {
    let ctx = group_context(cfg)?;
    let cosets = enumerate_cosets(&ctx, cfg.c_bound, cfg.tol).map_err(|e| e.to_string())?;
    let budget =
        TruncationBudget::new(cfg.c_bound, cfg.n_terms, cfg.tol).map_err(|e| e.to_string())?;
    let seed = seed_function(cfg);
    let v = poincare_eval(&ctx, &cosets, &seed, cfg.z, &budget).map_err(|e| e.to_string())?;
    let mut text = String::from("poincare-evaluation\n");
    text.push_str(&group_header(cfg));
    match cfg.seed {
        SeedChoice::Exponential(n) => text.push_str(&format!("  seed = exp:{n}\n")),
        SeedChoice::Kernel => {
            text.push_str("  seed = kernel\n");
            text.push_str(&format!("  s-re = {}\n  s-im = {}\n", fmt(cfg.s.re), fmt(cfg.s.im)));
        }
    }
    text.push_str(&format!("  z-re = {}\n  z-im = {}\n", fmt(cfg.z.re), fmt(cfg.z.im)));
    text.push_str(&format!("  c-bound = {}\n", fmt(cfg.c_bound)));
    text.push_str(&format!("  cosets = {}\n", cosets.reps.len()));
    text.push_str(&format!("  value-re = {}\n  value-im = {}\n", fmt(v.value.re), fmt(v.value.im)));
    text.push_str(&format!("  tail-estimate = {}\n", fmt(v.tail_estimate)));
    text.push_str(&format!("  central-mismatch = {}\n", v.central_mismatch));
    Ok((text, EXIT_OK))
}

/// Default extraction height: low enough that the amplification factor for
/// the top requested mode stays a few orders below the truncation target.
fn default_y0(h: f64, count: usize) -> f64 {
    (h * 14.0 / (2.0 * std::f64::consts::PI * count as f64)).min(0.35 * h)
}

fn run_coeffs(cfg: &RunConfig) -> Result<(String, i32), String> {
    let ctx = group_context(cfg)?;
    let cosets = enumerate_cosets(&ctx, cfg.c_bound, cfg.tol).map_err(|e| e.to_string())?;
    let seed = seed_function(cfg);
    let y0 = cfg.y0.unwrap_or_else(|| default_y0(ctx.cusp_width(), cfg.count));
    let (coeffs, errs) = poincare_fourier_coefficients(&ctx, &cosets, &seed, y0, cfg.count)
        .map_err(|e| e.to_string())?;
    let text = match cfg.format {
        OutputFormat::Csv => coefficients_to_csv(&coeffs),
        OutputFormat::Report => {
            let mut t = String::from("fourier-coefficients\n");
            t.push_str(&group_header(cfg));
            t.push_str(&format!("  y0 = {}\n", fmt(y0)));
            for (i, (a, e)) in coeffs.iter().zip(&errs).enumerate() {
                t.push_str(&format!(
                    "  a{} = {} {} (error {})\n",
                    i + 1,
                    fmt(a.re),
                    fmt(a.im),
                    fmt(*e)
                ));
            }
            t
        }
    };
    Ok((text, EXIT_OK))
}

fn run_lvalue(cfg: &RunConfig) -> Result<(String, i32), String> {
    let ctx = group_context(cfg)?;
    let coeffs = match &cfg.coeffs_in {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| format!("cannot read {path:?}: {e}"))?;
            coefficients_from_csv(&text).map_err(|e| e.to_string())?
        }
        None => {
            let cosets = enumerate_cosets(&ctx, cfg.c_bound, cfg.tol).map_err(|e| e.to_string())?;
            let seed = seed_function(cfg);
            let y0 = cfg.y0.unwrap_or_else(|| default_y0(ctx.cusp_width(), cfg.count));
            poincare_fourier_coefficients(&ctx, &cosets, &seed, y0, cfg.count)
                .map_err(|e| e.to_string())?
                .0
        }
    };
    let series =
        FourierSeries::new(cfg.weight, ctx.cusp_width(), coeffs).map_err(|e| e.to_string())?;

    let mut text = String::from("lvalue\n");
    text.push_str(&group_header(cfg));
    text.push_str(&format!("  s-re = {}\n  s-im = {}\n", fmt(cfg.s.re), fmt(cfg.s.im)));
    text.push_str(&format!("  coefficients = {}\n", series.len()));
    match lvalue_dirichlet(&series, cfg.s) {
        Ok(v) => {
            text.push_str(&format!(
                "  dirichlet-re = {}\n  dirichlet-im = {}\n  dirichlet-tail = {}\n",
                fmt(v.value.re),
                fmt(v.value.im),
                fmt(v.tail_estimate)
            ));
        }
        Err(e) => text.push_str(&format!("  dirichlet = outside-domain ({e})\n")),
    }
    match lvalue_unfolded(&series, cfg.s) {
        Ok(v) => {
            text.push_str(&format!(
                "  unfolded-re = {}\n  unfolded-im = {}\n  unfolded-tail = {}\n",
                fmt(v.value.re),
                fmt(v.value.im),
                fmt(v.tail_estimate)
            ));
        }
        Err(e) => text.push_str(&format!("  unfolded = outside-domain ({e})\n")),
    }
    Ok((text, EXIT_OK))
}

fn run_certify(cfg: &RunConfig) -> Result<(String, i32), String> {
    let ctx = group_context(cfg)?;
    let h = ctx.cusp_width();
    let n = ctx.min_c();
    let m = cfg.weight.value();
    let sigma = cfg.s.re;
    let report = if 1.0 < sigma && sigma < m / 2.0 {
        certify_kernel_nonvanishing(cfg.weight, h, n, cfg.s).map_err(|e| e.to_string())?
    } else if m / 2.0 < sigma && sigma < m - 1.0 {
        certify_lvalue_positivity(cfg.weight, h, n, cfg.s).map_err(|e| e.to_string())?
    } else {
        return Err(format!(
            "Re(s) = {sigma} is outside both certificate regions (1, m/2) and (m/2, m−1) for m = {m}"
        ));
    };
    let code =
        if report.verdict == Verdict::CertifiedNonvanishing { EXIT_OK } else { EXIT_CHECK_FAILED };
    Ok((report.render(), code))
}

fn run_min_weight(cfg: &RunConfig) -> Result<(String, i32), String> {
    let rect = RectangleSpec::new(cfg.eps, cfg.nu, cfg.eta).map_err(|e| e.to_string())?;
    let scan = find_min_weight(&rect, 10_000_000).map_err(|e| e.to_string())?;
    let mut text = String::from("min-weight-scan\n");
    text.push_str(&format!("  eps = {}\n  nu = {}\n  eta = {}\n", fmt(cfg.eps), fmt(cfg.nu), fmt(cfg.eta)));
    text.push_str(&format!("  threshold = {}\n", fmt(scan.threshold)));
    text.push_str(&format!("  m0 = {}\n", scan.m0));
    text.push_str(&format!("  scanned = {}\n", scan.trace.len()));
    let (m_last, r_last) = *scan.trace.last().unwrap();
    text.push_str(&format!("  r-at-m0 = {}\n", fmt(r_last)));
    debug_assert_eq!(m_last, scan.m0.value());
    Ok((text, EXIT_OK))
}

fn run_sanity(_cfg: &RunConfig) -> Result<(String, i32), String> {
    let mut text = String::from("sanity\n");
    let mut ok = true;

    // Duplication identity residuals on a fixed pole-free grid.
    let mut worst_dup: f64 = 0.0;
    for k in 0..50 {
        let z = Complex64::new(0.3 + 0.15 * k as f64, ((k % 7) as f64 - 3.0) * 0.8);
        let r = special::legendre_duplication_residual(z).map_err(|e| e.to_string())?;
        worst_dup = worst_dup.max(r);
    }
    ok &= worst_dup <= 1e-12;
    text.push_str(&format!("  duplication-max-residual = {}\n", fmt(worst_dup)));
    text.push_str(&format!("  duplication-pass = {}\n", worst_dup <= 1e-12));

    // Even-power Cauchy integral identity against quadrature.
    let mut worst_cauchy: f64 = 0.0;
    for a in [0.75, 1.0, 1.5, 2.7, 5.0] {
        let closed = special::cauchy_power_integral(a).map_err(|e| e.to_string())?;
        let quad = special::cauchy_power_integral_quadrature(a).map_err(|e| e.to_string())?;
        worst_cauchy = worst_cauchy.max((closed - quad).abs() / closed.max(1.0));
    }
    ok &= worst_cauchy <= 1e-9;
    text.push_str(&format!("  cauchy-integral-max-residual = {}\n", fmt(worst_cauchy)));
    text.push_str(&format!("  cauchy-integral-pass = {}\n", worst_cauchy <= 1e-9));

    // Gamma-distribution medians stay strictly inside their brackets.
    let mut brackets = true;
    let mut worst_balance: f64 = 0.0;
    for a in [0.5, 1.0, 2.0, 3.25, 5.5, 10.0, 25.0, 50.0] {
        let med = special::gamma_median(a).map_err(|e| e.to_string())?;
        brackets &= med.lower < med.median && med.median < med.upper;
        let q = special::regularized_upper_gamma(a, med.median).map_err(|e| e.to_string())?;
        worst_balance = worst_balance.max((2.0 * q - 1.0).abs());
    }
    ok &= brackets && worst_balance <= 1e-12;
    text.push_str(&format!("  median-brackets-strict = {brackets}\n"));
    text.push_str(&format!("  median-max-balance-defect = {}\n", fmt(worst_balance)));
    text.push_str(&format!("  median-pass = {}\n", brackets && worst_balance <= 1e-12));

    text.push_str(&format!("  all-pass = {ok}\n"));
    Ok((text, if ok { EXIT_OK } else { EXIT_CHECK_FAILED }))
}

/// Executes the configured command inside a rayon pool of the requested
/// size (0 = automatic); returns the process exit code.
pub fn run(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if cfg.threads > 0 {
        builder = builder.num_threads(cfg.threads);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: cannot build thread pool: {e}");
            return EXIT_CONFIG;
        }
    };
    let result = pool.install(|| match cfg.command {
        Command::Eval => run_eval(cfg),
        Command::Coeffs => run_coeffs(cfg),
        Command::Lvalue => run_lvalue(cfg),
        Command::Certify => run_certify(cfg),
        Command::MinWeight => run_min_weight(cfg),
        Command::Sanity => run_sanity(cfg),
    });
    match result {
        Ok((text, code)) => {
            if let Err(msg) = emit(cfg, &text, out) {
                let _ = writeln!(err, "error: {msg}");
                return EXIT_CONFIG;
            }
            code
        }
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_CONFIG
        }
    }
}
