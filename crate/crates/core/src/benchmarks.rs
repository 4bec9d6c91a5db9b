//! Synthetic test functions, domain boxes, optimum-location settings and the
//! black-box interface.

use std::f64::consts::{E, PI};
use std::fmt;
use std::io::Write;
use std::process::{Command, Stdio};

use crate::error::{Error, Result};
use crate::kernels::UnitPoint;

/// Per-dimension bounds `m_i < M_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl DomainBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        Error::check_dim(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::InvalidParameter("domain needs d >= 1".into()));
        }
        for (l, u) in lower.iter().zip(&upper) {
            if !(l < u) || !l.is_finite() || !u.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "domain bounds must be finite with lower < upper, got [{l}, {u}]"
                )));
            }
        }
        Ok(DomainBox { lower, upper })
    }

    pub fn unit(d: usize) -> Self {
        DomainBox {
            lower: vec![0.0; d],
            upper: vec![1.0; d],
        }
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }
}

/// `x̃_i = (x_i − m_i) / (M_i − m_i)`.
pub fn to_unit(x_raw: &[f64], domain: &DomainBox) -> Result<UnitPoint> {
    Error::check_dim(domain.dim(), x_raw.len())?;
    if !domain.contains(x_raw) {
        return Err(Error::InvalidParameter(format!("point {x_raw:?} lies outside the domain")));
    }
    let u = x_raw
        .iter()
        .zip(domain.lower.iter().zip(&domain.upper))
        .map(|(x, (l, h))| ((x - l) / (h - l)).clamp(0.0, 1.0))
        .collect();
    UnitPoint::new(u)
}

/// Inverse of [`to_unit`].
pub fn from_unit(u: &UnitPoint, domain: &DomainBox) -> Result<Vec<f64>> {
    Error::check_dim(domain.dim(), u.dim())?;
    Ok(u.coords()
        .iter()
        .zip(domain.lower.iter().zip(&domain.upper))
        .map(|(u, (l, h))| (l + u * (h - l)).clamp(*l, *h))
        .collect())
}

/// `1 − 2‖u − ½‖∞`: 1 at the center, 0 on any face.
pub fn boundary_distance(u: &UnitPoint) -> f64 {
    let m = u.coords().iter().map(|v| (v - 0.5).abs()).fold(0.0, f64::max);
    (1.0 - 2.0 * m).clamp(0.0, 1.0)
}

/// Volumes of the center, face and vertex partitions of the unit cube for
/// margin `ε`: `((1−2ε)^d, rest, (2ε)^d)`.
pub fn partition_volumes(d: usize, eps: f64) -> Result<(f64, f64, f64)> {
    if d == 0 {
        return Err(Error::InvalidParameter("partition needs d >= 1".into()));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::domain("margin", "in (0, 0.5)", eps));
    }
    let center = (1.0 - 2.0 * eps).powi(d as i32);
    let vertex = (2.0 * eps).powi(d as i32);
    Ok((center, 1.0 - center - vertex, vertex))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchmarkFunction {
    Levy,
    Griewank,
    Ackley,
    BraninRepeated,
    Hartmann6Repeated,
}

impl BenchmarkFunction {
    pub const ALL: [BenchmarkFunction; 5] = [
        BenchmarkFunction::Levy,
        BenchmarkFunction::Griewank,
        BenchmarkFunction::Ackley,
        BenchmarkFunction::BraninRepeated,
        BenchmarkFunction::Hartmann6Repeated,
    ];

    pub fn label(self) -> &'static str {
        match self {
            BenchmarkFunction::Levy => "levy",
            BenchmarkFunction::Griewank => "griewank",
            BenchmarkFunction::Ackley => "ackley",
            BenchmarkFunction::BraninRepeated => "branin",
            BenchmarkFunction::Hartmann6Repeated => "hartmann6",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        BenchmarkFunction::ALL
            .into_iter()
            .find(|f| f.label() == lower)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown benchmark '{s}'")))
    }

    pub fn check_dim(self, d: usize) -> Result<()> {
        let ok = match self {
            BenchmarkFunction::BraninRepeated => d >= 2 && d % 2 == 0,
            BenchmarkFunction::Hartmann6Repeated => d >= 6,
            _ => d >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "{} does not support d = {d}",
                self.label()
            )))
        }
    }

    /// The standard search box.
    pub fn canonical_box(self, d: usize) -> Result<DomainBox> {
        self.check_dim(d)?;
        let (lower, upper) = match self {
            BenchmarkFunction::Levy => (vec![-10.0; d], vec![10.0; d]),
            BenchmarkFunction::Ackley => (vec![-32.768; d], vec![32.768; d]),
            BenchmarkFunction::Griewank => (vec![-600.0; d], vec![600.0; d]),
            BenchmarkFunction::BraninRepeated => (
                (0..d).map(|i| if i % 2 == 0 { -5.0 } else { 0.0 }).collect(),
                (0..d).map(|i| if i % 2 == 0 { 10.0 } else { 15.0 }).collect(),
            ),
            BenchmarkFunction::Hartmann6Repeated => (vec![0.0; d], vec![1.0; d]),
        };
        DomainBox::new(lower, upper)
    }

    /// The first global minimizer and the minimum value.
    pub fn first_optimum(self, d: usize) -> Result<(Vec<f64>, f64)> {
        self.check_dim(d)?;
        Ok(match self {
            BenchmarkFunction::Levy => (vec![1.0; d], 0.0),
            BenchmarkFunction::Ackley | BenchmarkFunction::Griewank => (vec![0.0; d], 0.0),
            BenchmarkFunction::BraninRepeated => {
                let x: Vec<f64> = (0..d).map(|i| if i % 2 == 0 { -PI } else { 12.275 }).collect();
                (x, (d / 2) as f64 * BRANIN_MIN)
            }
            BenchmarkFunction::Hartmann6Repeated => {
                let blocks = d / 6;
                let mut x = Vec::with_capacity(d);
                for _ in 0..blocks {
                    x.extend_from_slice(&HARTMANN6_ARGMIN);
                }
                x.resize(d, 0.5);
                (x, blocks as f64 * HARTMANN6_MIN)
            }
        })
    }

    pub fn evaluate(self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(match self {
            BenchmarkFunction::Levy => levy(x),
            BenchmarkFunction::Ackley => ackley(x),
            BenchmarkFunction::Griewank => griewank(x),
            BenchmarkFunction::BraninRepeated => x.chunks_exact(2).map(branin).sum(),
            BenchmarkFunction::Hartmann6Repeated => x.chunks_exact(6).map(hartmann6).sum(),
        })
    }
}

impl fmt::Display for BenchmarkFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Evaluates `name` at a raw point.
pub fn evaluate_function(name: BenchmarkFunction, x_raw: &[f64]) -> Result<f64> {
    name.evaluate(x_raw)
}

pub fn levy(x: &[f64]) -> f64 {
    let w: Vec<f64> = x.iter().map(|v| 1.0 + (v - 1.0) / 4.0).collect();
    let d = w.len();
    let mut s = (PI * w[0]).sin().powi(2);
    for &wi in &w[..d - 1] {
        s += (wi - 1.0).powi(2) * (1.0 + 10.0 * (PI * wi + 1.0).sin().powi(2));
    }
    let wd = w[d - 1];
    s + (wd - 1.0).powi(2) * (1.0 + (2.0 * PI * wd).sin().powi(2))
}

pub fn ackley(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let sq = x.iter().map(|v| v * v).sum::<f64>() / n;
    let cs = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / n;
    -20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp() + 20.0 + E
}

pub fn griewank(x: &[f64]) -> f64 {
    let s = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
    let p: f64 = x
        .iter()
        .enumerate()
        .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
        .product();
    s - p + 1.0
}

pub const BRANIN_MIN: f64 = 0.397_887_357_729_738_2;

pub fn branin(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let t = 1.0 / (8.0 * PI);
    (x2 - b * x1 * x1 + c * x1 - 6.0).powi(2) + 10.0 * (1.0 - t) * x1.cos() + 10.0
}

const HARTMANN6_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const HARTMANN6_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
const HARTMANN6_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];

/// Minimizer of the six-dimensional Hartmann function, refined beyond the
/// usually tabulated digits.
pub const HARTMANN6_ARGMIN: [f64; 6] = [
    0.201_689_512_840_881_66,
    0.150_010_691_215_734_68,
    0.476_873_975_520_047_34,
    0.275_332_430_951_074_6,
    0.311_651_617_462_712_86,
    0.657_300_532_965_973_2,
];
pub const HARTMANN6_MIN: f64 = -3.322_368_011_415_515;

pub fn hartmann6(x: &[f64]) -> f64 {
    -HARTMANN6_ALPHA
        .iter()
        .zip(HARTMANN6_A.iter().zip(&HARTMANN6_P))
        .map(|(alpha, (a, p))| {
            let inner: f64 = (0..6).map(|j| a[j] * (x[j] - p[j]).powi(2)).sum();
            alpha * (-inner).exp()
        })
        .sum::<f64>()
}

/// Where the first optimum sits relative to the search box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Setting {
    /// Canonical box.
    Center,
    /// First coordinate of the optimum at relative position ε.
    Face,
    /// Every coordinate of the optimum at relative position ε.
    Vertex,
}

impl Setting {
    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(Setting::Center),
            2 => Ok(Setting::Face),
            3 => Ok(Setting::Vertex),
            other => Err(Error::InvalidParameter(format!("setting must be 1, 2 or 3, got {other}"))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Setting::Center => 1,
            Setting::Face => 2,
            Setting::Vertex => 3,
        }
    }
}

/// A benchmark function in `d` dimensions under one optimum-location setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkSpec {
    pub function: BenchmarkFunction,
    pub d: usize,
    pub setting: Setting,
    pub margin: f64,
}

impl BenchmarkSpec {
    pub const DEFAULT_MARGIN: f64 = 0.05;

    pub fn new(function: BenchmarkFunction, d: usize, setting: Setting, margin: f64) -> Result<Self> {
        function.check_dim(d)?;
        if !(margin > 0.0 && margin < 0.5) {
            return Err(Error::domain("margin", "in (0, 0.5)", margin));
        }
        Ok(BenchmarkSpec {
            function,
            d,
            setting,
            margin,
        })
    }
}

/// The box for `spec`: lower bounds are moved so the first optimum sits at
/// relative position ε (dimension 1 only for the face setting, all
/// dimensions for the vertex setting); upper bounds stay canonical.
pub fn shift_domain(spec: &BenchmarkSpec) -> Result<DomainBox> {
    let canonical = spec.function.canonical_box(spec.d)?;
    let (x_star, _) = spec.function.first_optimum(spec.d)?;
    let dims: Vec<usize> = match spec.setting {
        Setting::Center => return Ok(canonical),
        Setting::Face => vec![0],
        Setting::Vertex => (0..spec.d).collect(),
    };
    let eps = spec.margin;
    let mut lower = canonical.lower.clone();
    for i in dims {
        let (m0, big_m, xs) = (canonical.lower[i], canonical.upper[i], x_star[i]);
        if xs >= big_m {
            return Err(Error::InfeasibleSetting(format!(
                "optimum coordinate {i} ({xs}) is not below the upper bound {big_m}"
            )));
        }
        // x* − m = ε (M − m)
        let m = (xs - eps * big_m) / (1.0 - eps);
        if m < m0 {
            return Err(Error::InfeasibleSetting(format!(
                "coordinate {i} would need lower bound {m} below the canonical {m0}"
            )));
        }
        lower[i] = m;
    }
    DomainBox::new(lower, canonical.upper)
}

/// A failed black-box evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalError(pub String);

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An objective to be minimized over a box.
pub trait BlackBox: Send + Sync {
    fn domain(&self) -> &DomainBox;

    fn evaluate(&self, x_raw: &[f64]) -> std::result::Result<f64, EvalError>;

    fn known_optimum(&self) -> Option<(Vec<f64>, f64)> {
        None
    }

    /// Whether this is a synthetic benchmark (affects default budgets).
    fn is_synthetic(&self) -> bool {
        false
    }

    fn name(&self) -> String {
        "black-box".into()
    }
}

/// A benchmark function restricted to its (possibly shifted) box.
#[derive(Debug, Clone)]
pub struct SyntheticBlackBox {
    spec: BenchmarkSpec,
    domain: DomainBox,
}

impl SyntheticBlackBox {
    pub fn new(spec: BenchmarkSpec) -> Result<Self> {
        let domain = shift_domain(&spec)?;
        Ok(SyntheticBlackBox { spec, domain })
    }

    pub fn spec(&self) -> &BenchmarkSpec {
        &self.spec
    }
}

impl BlackBox for SyntheticBlackBox {
    fn domain(&self) -> &DomainBox {
        &self.domain
    }

    fn evaluate(&self, x_raw: &[f64]) -> std::result::Result<f64, EvalError> {
        self.spec.function.evaluate(x_raw).map_err(|e| EvalError(e.to_string()))
    }

    fn known_optimum(&self) -> Option<(Vec<f64>, f64)> {
        self.spec.function.first_optimum(self.spec.d).ok()
    }

    fn is_synthetic(&self) -> bool {
        true
    }

    fn name(&self) -> String {
        self.spec.function.label().into()
    }
}

/// A closure objective over a box.
pub struct FnBlackBox<F> {
    f: F,
    domain: DomainBox,
    name: String,
}

impl<F> FnBlackBox<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(name: impl Into<String>, domain: DomainBox, f: F) -> Self {
        FnBlackBox {
            f,
            domain,
            name: name.into(),
        }
    }
}

impl<F> BlackBox for FnBlackBox<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn domain(&self) -> &DomainBox {
        &self.domain
    }

    fn evaluate(&self, x_raw: &[f64]) -> std::result::Result<f64, EvalError> {
        let v = (self.f)(x_raw);
        if v.is_nan() {
            Err(EvalError("objective returned NaN".into()))
        } else {
            Ok(v)
        }
    }

    fn name(&self) -> String {
        self.name.clone()
    }
}

/// An objective run as a subprocess: the raw point is written to stdin as
/// whitespace-separated decimals, one number is read from stdout, and a
/// nonzero exit status is a failed evaluation.
#[derive(Debug, Clone)]
pub struct ExternalBlackBox {
    program: String,
    args: Vec<String>,
    domain: DomainBox,
}

impl ExternalBlackBox {
    pub fn new(command: &[String], domain: DomainBox) -> Result<Self> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| Error::InvalidParameter("external command is empty".into()))?;
        Ok(ExternalBlackBox {
            program: program.clone(),
            args: args.to_vec(),
            domain,
        })
    }
}

/// Formats a point with 17 significant digits per coordinate.
pub fn format_point(x: &[f64]) -> String {
    x.iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(" ")
}

impl BlackBox for ExternalBlackBox {
    fn domain(&self) -> &DomainBox {
        &self.domain
    }

    fn evaluate(&self, x_raw: &[f64]) -> std::result::Result<f64, EvalError> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| EvalError(format!("cannot start '{}': {e}", self.program)))?;
        {
            let mut stdin = child.stdin.take().expect("stdin is piped");
            writeln!(stdin, "{}", format_point(x_raw))
                .map_err(|e| EvalError(format!("cannot write to objective: {e}")))?;
        }
        let out = child
            .wait_with_output()
            .map_err(|e| EvalError(format!("objective did not finish: {e}")))?;
        if !out.status.success() {
            let stderr = String::from_utf8_lossy(&out.stderr);
            return Err(EvalError(format!(
                "objective exited with {}: {}",
                out.status,
                stderr.trim()
            )));
        }
        let text = String::from_utf8_lossy(&out.stdout);
        let mut tokens = text.split_whitespace();
        let value = tokens
            .next()
            .ok_or_else(|| EvalError("objective printed nothing".into()))?
            .parse::<f64>()
            .map_err(|e| EvalError(format!("objective output is not a number: {e}")))?;
        if tokens.next().is_some() {
            return Err(EvalError("objective printed more than one value".into()));
        }
        if value.is_nan() {
            return Err(EvalError("objective returned NaN".into()));
        }
        Ok(value)
    }

    fn name(&self) -> String {
        "external".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn function_optima() {
        assert!(levy(&[1.0, 1.0]).abs() < 1e-30);
        assert!(ackley(&[0.0; 5]).abs() < 1e-14);
        assert_eq!(griewank(&[0.0; 4]), 0.0);
        let v = hartmann6(&HARTMANN6_ARGMIN);
        assert!((v - HARTMANN6_MIN).abs() < 1e-12);
        // tabulated minimizer, four decimals
        let tab = [0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573];
        assert!((hartmann6(&tab) + 3.32237).abs() < 1e-5);
        for x in [[-PI, 12.275], [PI, 2.275], [9.42478, 2.475]] {
            assert!((branin(&x) - BRANIN_MIN).abs() < 1e-5);
        }
    }

    #[test]
    fn every_known_optimum_is_attained() {
        for f in BenchmarkFunction::ALL {
            let d = match f {
                BenchmarkFunction::Hartmann6Repeated => 20,
                _ => 6,
            };
            let (x, v) = f.first_optimum(d).unwrap();
            assert!((f.evaluate(&x).unwrap() - v).abs() < 1e-9, "{f}");
            assert!(f.canonical_box(d).unwrap().contains(&x));
        }
    }

    #[test]
    fn repeated_variants_are_block_sums() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let want = branin(&x[..2]) + branin(&x[2..]);
        assert_eq!(BenchmarkFunction::BraninRepeated.evaluate(&x).unwrap(), want);
        assert!(BenchmarkFunction::BraninRepeated.evaluate(&[1.0; 3]).is_err());
        assert!(BenchmarkFunction::Hartmann6Repeated.evaluate(&[0.5; 5]).is_err());
        let (x, v) = BenchmarkFunction::Hartmann6Repeated.first_optimum(20).unwrap();
        assert_eq!(&x[18..], &[0.5, 0.5]);
        assert!((v - 3.0 * HARTMANN6_MIN).abs() < 1e-12);
    }

    #[test]
    fn shift_examples() {
        let spec = |setting| BenchmarkSpec::new(BenchmarkFunction::Levy, 2, setting, 0.05).unwrap();
        let b1 = shift_domain(&spec(Setting::Center)).unwrap();
        assert_eq!(b1, BenchmarkFunction::Levy.canonical_box(2).unwrap());
        let m = 0.5 / 0.95;
        let b3 = shift_domain(&spec(Setting::Vertex)).unwrap();
        for &l in b3.lower() {
            assert!((l - m).abs() < 1e-12);
        }
        let b2 = shift_domain(&spec(Setting::Face)).unwrap();
        assert!((b2.lower()[0] - m).abs() < 1e-12);
        assert_eq!(b2.lower()[1], -10.0);
        assert_eq!(b2.upper(), &[10.0, 10.0]);
    }

    #[test]
    fn shifted_optimum_sits_at_margin() {
        for f in BenchmarkFunction::ALL {
            let d = if f == BenchmarkFunction::Hartmann6Repeated { 6 } else { 4 };
            let (x, _) = f.first_optimum(d).unwrap();
            // optima close to a canonical lower bound leave room only for
            // small margins
            let margins: &[f64] = match f {
                BenchmarkFunction::BraninRepeated => &[0.05],
                BenchmarkFunction::Hartmann6Repeated => &[0.05, 0.1],
                _ => &[0.05, 0.1, 0.2],
            };
            for &eps in margins {
                let s3 = BenchmarkSpec::new(f, d, Setting::Vertex, eps).unwrap();
                let u = to_unit(&x, &shift_domain(&s3).unwrap()).unwrap();
                for &c in u.coords() {
                    assert!((c - eps).abs() < 1e-9, "{f} {eps}");
                }
                assert!((boundary_distance(&u) - 2.0 * eps).abs() < 1e-9);
                let s2 = BenchmarkSpec::new(f, d, Setting::Face, eps).unwrap();
                let u = to_unit(&x, &shift_domain(&s2).unwrap()).unwrap();
                assert!((u.coords()[0] - eps).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn infeasible_shift_is_rejected() {
        // x*_1 ≈ 0.2 with ε = 0.45 needs a lower bound below 0
        let s = BenchmarkSpec::new(BenchmarkFunction::Hartmann6Repeated, 6, Setting::Vertex, 0.45)
            .unwrap();
        assert!(matches!(shift_domain(&s), Err(Error::InfeasibleSetting(_))));
    }

    #[test]
    fn unit_mapping() {
        let b = DomainBox::new(vec![-2.0, 10.0], vec![2.0, 20.0]).unwrap();
        assert_eq!(to_unit(&[-2.0, 10.0], &b).unwrap().coords(), &[0.0, 0.0]);
        assert_eq!(to_unit(&[0.0, 15.0], &b).unwrap().coords(), &[0.5, 0.5]);
        assert!(to_unit(&[3.0, 15.0], &b).is_err());
        let u = UnitPoint::new(vec![0.3, 0.9]).unwrap();
        let back = to_unit(&from_unit(&u, &b).unwrap(), &b).unwrap();
        for (a, c) in back.coords().iter().zip(u.coords()) {
            assert!((a - c).abs() <= 1e-12);
        }
        assert!(DomainBox::new(vec![1.0], vec![1.0]).is_err());
    }

    #[test]
    fn boundary_distance_examples() {
        let u = |v: &[f64]| UnitPoint::new(v.to_vec()).unwrap();
        assert_eq!(boundary_distance(&u(&[0.5, 0.5, 0.5])), 1.0);
        assert_eq!(boundary_distance(&u(&[0.0, 0.5, 0.5])), 0.0);
        assert_eq!(boundary_distance(&u(&[0.75, 0.5])), 0.5);
    }

    #[test]
    fn partition_examples() {
        let (c, f, v) = partition_volumes(20, 0.05).unwrap();
        assert!((c - 0.121_576_654_590_569_3).abs() < 1e-15);
        assert!((v - 1e-20).abs() < 1e-34);
        assert!((f - (1.0 - c - v)).abs() < 1e-15);
        assert_eq!(partition_volumes(1, 0.25).unwrap(), (0.5, 0.0, 0.5));
        assert!(partition_volumes(3, 0.5).is_err());
        assert!(partition_volumes(0, 0.1).is_err());
    }

    #[test]
    fn external_black_box_protocol() {
        let domain = DomainBox::unit(2);
        let cmd = ["sh", "-c", "read a b; echo 2.5"].map(String::from);
        let bb = ExternalBlackBox::new(&cmd, domain.clone()).unwrap();
        assert_eq!(bb.evaluate(&[0.1, 0.2]).unwrap(), 2.5);
        let fail = ["sh", "-c", "exit 4"].map(String::from);
        assert!(ExternalBlackBox::new(&fail, domain.clone()).unwrap().evaluate(&[0.1, 0.2]).is_err());
        let junk = ["sh", "-c", "echo nope"].map(String::from);
        assert!(ExternalBlackBox::new(&junk, domain).unwrap().evaluate(&[0.1, 0.2]).is_err());
    }

    #[test]
    fn point_formatting_round_trips() {
        let x = [0.1, -1.0 / 3.0, 1e-300, 123456.789];
        let s = format_point(&x);
        let back: Vec<f64> = s.split_whitespace().map(|t| t.parse().unwrap()).collect();
        assert_eq!(back, x);
    }
}
