//! Seeded verification suites with margin statistics.
//!
//! Every case derives its random stream from `(seed, case index)`, so reports
//! and CSV tables do not depend on the number of worker threads.

mod suites;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::funcspace::{FunctionSpec, Richness, Space};
use crate::quadrature::QuadratureScheme;
use crate::symfun::KRONECKER_MAX_DIM;

pub use suites::{divergence_residual, DivergenceResidual};

/// Attempts at drawing an admissible case before it is aborted.
pub const MAX_REGENERATIONS: usize = 100;
/// Default relative tolerance of the divergence suite.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-6;
/// Default absolute tolerance of the cone suite.
pub const GARDING_TOLERANCE: f64 = 1e-10;
/// Equality cases pass when `|margin| ≤ EQUALITY_FACTOR · tolerance`.
pub const EQUALITY_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteKind {
    Hoelder,
    Convexity,
    CauchySchwarz,
    PoincareComplex,
    PoincareReal,
    Divergence,
    Symmetry,
    Garding,
}

impl SuiteKind {
    pub const ALL: [SuiteKind; 8] = [
        SuiteKind::Hoelder,
        SuiteKind::Convexity,
        SuiteKind::CauchySchwarz,
        SuiteKind::PoincareComplex,
        SuiteKind::PoincareReal,
        SuiteKind::Divergence,
        SuiteKind::Symmetry,
        SuiteKind::Garding,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SuiteKind::Hoelder => "hoelder",
            SuiteKind::Convexity => "convexity",
            SuiteKind::CauchySchwarz => "cauchy_schwarz",
            SuiteKind::PoincareComplex => "poincare_complex",
            SuiteKind::PoincareReal => "poincare_real",
            SuiteKind::Divergence => "divergence",
            SuiteKind::Symmetry => "symmetry",
            SuiteKind::Garding => "garding",
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub suite: SuiteKind,
    pub n: usize,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub richness: Richness,
    /// Ambient space for suites that run in both; fixed by the suite otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<Space>,
    #[serde(default)]
    pub quadrature: QuadratureScheme,
    /// Overrides the suite's default tolerance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// Appends the documented equality cases after the random ones.
    #[serde(default = "default_true")]
    pub equality_cases: bool,
}

impl SuiteConfig {
    pub fn new(suite: SuiteKind, n: usize, k: usize, samples: usize, seed: u64) -> Self {
        Self {
            suite,
            n,
            k,
            m: None,
            samples,
            seed,
            richness: Richness::Radial,
            space: None,
            quadrature: QuadratureScheme::default(),
            tolerance: None,
            equality_cases: true,
        }
    }

    pub fn with_m(mut self, m: usize) -> Self {
        self.m = Some(m);
        self
    }

    pub fn with_richness(mut self, richness: Richness) -> Self {
        self.richness = richness;
        self
    }

    pub fn with_space(mut self, space: Space) -> Self {
        self.space = Some(space);
        self
    }

    pub fn with_quadrature(mut self, q: QuadratureScheme) -> Self {
        self.quadrature = q;
        self
    }

    /// Ambient space the suite runs in.
    pub fn space(&self) -> Space {
        match self.suite {
            SuiteKind::PoincareComplex => Space::Complex,
            SuiteKind::PoincareReal | SuiteKind::Divergence => Space::Real,
            _ => self.space.unwrap_or(Space::Complex),
        }
    }

    /// Tolerance on normalized margins.
    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(match self.suite {
            SuiteKind::Divergence => DIVERGENCE_TOLERANCE,
            SuiteKind::Garding => GARDING_TOLERANCE,
            _ => self.quadrature.tau(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("n", "must be at least 1"));
        }
        if self.k == 0 || self.k > self.n {
            return Err(Error::config(
                "k",
                format!("need 1 <= k <= n, got k = {} with n = {}", self.k, self.n),
            ));
        }
        if self.samples == 0 {
            return Err(Error::config("samples", "must be at least 1"));
        }
        if let Some(t) = self.tolerance {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::config("tolerance", format!("must be positive, got {t}")));
            }
        }
        self.quadrature.validate()?;
        let needs_m = matches!(
            self.suite,
            SuiteKind::Convexity | SuiteKind::PoincareComplex | SuiteKind::PoincareReal
        );
        match self.m {
            None if needs_m => {
                return Err(Error::config("m", format!("required by the {} suite", self.suite.name())))
            }
            Some(m) if m >= self.k => {
                return Err(Error::config("m", format!("need m < k, got m = {m}, k = {}", self.k)))
            }
            Some(_) if matches!(
                self.suite,
                SuiteKind::Hoelder | SuiteKind::CauchySchwarz | SuiteKind::Divergence | SuiteKind::Symmetry
            ) =>
            {
                return Err(Error::config("m", format!("not used by the {} suite", self.suite.name())))
            }
            _ => {}
        }
        if let Some(space) = self.space {
            if space != self.space() {
                return Err(Error::config(
                    "space",
                    format!("the {} suite runs in {} space", self.suite.name(), self.space()),
                ));
            }
        }
        if self.suite == SuiteKind::Divergence {
            if self.k < 2 {
                return Err(Error::config("k", "the divergence suite needs k >= 2"));
            }
            if self.n > KRONECKER_MAX_DIM {
                return Err(Error::config(
                    "n",
                    format!("the divergence suite supports n <= {KRONECKER_MAX_DIM}"),
                ));
            }
        }
        Ok(())
    }
}

/// Parses a single config object or a list of them.
pub fn parse_configs(text: &str) -> Result<Vec<SuiteConfig>> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| Error::config("config", format!("invalid JSON: {e}")))?;
    let items = match value {
        serde_json::Value::Array(items) => items,
        other => vec![other],
    };
    if items.is_empty() {
        return Err(Error::config("config", "empty suite list"));
    }
    items
        .into_iter()
        .enumerate()
        .map(|(i, item)| {
            let cfg: SuiteConfig = serde_json::from_value(item)
                .map_err(|e| Error::config(&format!("config[{i}]"), e.to_string()))?;
            cfg.validate()?;
            Ok(cfg)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseKind {
    Random,
    Equality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseStatus {
    Pass,
    Violation,
    /// No admissible input after the regeneration budget, or an evaluation error.
    Aborted,
    /// A documented precondition excluded the case.
    Skipped,
}

impl CaseStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseStatus::Pass => "pass",
            CaseStatus::Violation => "violation",
            CaseStatus::Aborted => "aborted",
            CaseStatus::Skipped => "skipped",
        }
    }
}

/// Which cone statements a cone case evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeChecks {
    Both,
    Superadditivity,
    LemmaMk,
}

/// Replayable input of one case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CaseInput {
    Functions {
        specs: Vec<FunctionSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        permutation: Option<Vec<usize>>,
    },
    Divergence {
        specs: Vec<FunctionSpec>,
        point: Vec<f64>,
    },
    Cone {
        lambda: Vec<f64>,
        a: Vec<f64>,
        b: Vec<f64>,
        mu: Vec<f64>,
        m: usize,
        checks: ConeChecks,
    },
}

impl CaseInput {
    pub fn functions(specs: Vec<FunctionSpec>) -> Self {
        CaseInput::Functions {
            specs,
            permutation: None,
        }
    }

    /// First 16 hex digits of the SHA-256 of the JSON encoding.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("case inputs serialize");
        let hash = Sha256::digest(json.as_bytes());
        hex::encode(&hash[..8])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case_id: String,
    pub kind: CaseKind,
    /// Normalized margin; negative values below `−tolerance` are violations.
    pub margin: f64,
    pub tolerance: f64,
    pub status: CaseStatus,
    pub spec_digest: String,
    /// Suite-specific statistic (e.g. a ratio), if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extra: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<CaseInput>,
    /// Number of rejected draws before this input.
    pub regenerations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: SuiteKind,
    pub config: SuiteConfig,
    pub tolerance: f64,
    pub cases_run: usize,
    pub equality_cases: usize,
    pub violations: usize,
    pub equality_failures: usize,
    pub aborted: usize,
    pub skipped: usize,
    pub regenerations: usize,
    pub min_margin: Option<f64>,
    pub median_margin: Option<f64>,
    pub worst_case: Option<CaseResult>,
    pub extras: BTreeMap<String, f64>,
    /// Wall-clock time; excluded from determinism comparisons.
    pub elapsed_seconds: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.aborted == 0 && self.equality_failures == 0
    }
}

/// A finished suite: the aggregate report and every case row.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteRun {
    pub report: SuiteReport,
    pub cases: Vec<CaseResult>,
}

/// RNG stream of a random case.
pub fn case_rng(seed: u64, case_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(case_index);
    rng
}

fn finish_case(
    cfg: &SuiteConfig,
    case_id: String,
    kind: CaseKind,
    input: Result<(CaseInput, usize)>,
) -> CaseResult {
    let tolerance = cfg.tolerance();
    let (input, regenerations) = match input {
        Ok(v) => v,
        Err(e) => {
            return CaseResult {
                case_id,
                kind,
                margin: f64::NAN,
                tolerance,
                status: CaseStatus::Aborted,
                spec_digest: String::new(),
                extra: None,
                note: Some(e.to_string()),
                input: None,
                regenerations: MAX_REGENERATIONS,
            }
        }
    };
    let digest = input.digest();
    let (margin, extra, status, note) = match suites::evaluate(cfg, &input) {
        Ok(out) => {
            let ok = match kind {
                CaseKind::Random => out.margin >= -tolerance,
                CaseKind::Equality => out.margin.abs() <= EQUALITY_FACTOR * tolerance,
            };
            let status = if ok && out.failed_check.is_none() {
                CaseStatus::Pass
            } else {
                CaseStatus::Violation
            };
            (out.margin, out.extra, status, out.failed_check)
        }
        Err(Error::DegenerateMu { slack }) => (
            f64::NAN,
            None,
            CaseStatus::Skipped,
            Some(format!("degenerate mu (slack {slack:e})")),
        ),
        Err(e) => (f64::NAN, None, CaseStatus::Aborted, Some(e.to_string())),
    };
    CaseResult {
        case_id,
        kind,
        margin,
        tolerance,
        status,
        spec_digest: digest,
        extra,
        note,
        input: Some(input),
        regenerations,
    }
}

fn run_cases(cfg: &SuiteConfig) -> Vec<CaseResult> {
    let mut cases: Vec<CaseResult> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(cfg.seed, i as u64);
            let input = suites::generate_with_retries(cfg, &mut rng);
            finish_case(cfg, i.to_string(), CaseKind::Random, input)
        })
        .collect();
    if cfg.equality_cases {
        let mut rng = case_rng(cfg.seed, u64::MAX);
        match suites::equality_inputs(cfg, &mut rng) {
            Ok(list) => {
                let eq: Vec<CaseResult> = list
                    .into_par_iter()
                    .map(|(label, input)| {
                        finish_case(cfg, format!("eq-{label}"), CaseKind::Equality, Ok((input, 0)))
                    })
                    .collect();
                cases.extend(eq);
            }
            Err(e) => cases.push(finish_case(
                cfg,
                "eq-setup".into(),
                CaseKind::Equality,
                Err(e),
            )),
        }
    }
    cases
}

fn summarize(cfg: &SuiteConfig, cases: &[CaseResult], elapsed: f64) -> SuiteReport {
    let count = |kind: CaseKind, status: CaseStatus| {
        cases
            .iter()
            .filter(|c| c.kind == kind && c.status == status)
            .count()
    };
    let evaluated: Vec<&CaseResult> = cases
        .iter()
        .filter(|c| c.kind == CaseKind::Random && c.margin.is_finite())
        .collect();
    let mut margins: Vec<f64> = evaluated.iter().map(|c| c.margin).collect();
    margins.sort_by(f64::total_cmp);
    let median = match margins.len() {
        0 => None,
        len if len % 2 == 1 => Some(margins[len / 2]),
        len => Some(0.5 * (margins[len / 2 - 1] + margins[len / 2])),
    };
    let worst_case = evaluated
        .iter()
        .min_by(|a, b| a.margin.total_cmp(&b.margin))
        .map(|c| (*c).clone());
    let mut extras = BTreeMap::new();
    let stats: Vec<f64> = cases
        .iter()
        .filter(|c| c.kind == CaseKind::Random)
        .filter_map(|c| c.extra)
        .filter(|v| v.is_finite())
        .collect();
    if !stats.is_empty() {
        let (name_max, name_min) = match cfg.suite {
            SuiteKind::PoincareComplex | SuiteKind::PoincareReal => ("sup_ratio", "inf_ratio"),
            SuiteKind::Divergence => ("max_richardson_ratio", "min_richardson_ratio"),
            _ => ("max_extra", "min_extra"),
        };
        extras.insert(name_max.into(), stats.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        extras.insert(name_min.into(), stats.iter().copied().fold(f64::INFINITY, f64::min));
    }
    let equality_cases = cases.iter().filter(|c| c.kind == CaseKind::Equality).count();
    let equality_failures = equality_cases - count(CaseKind::Equality, CaseStatus::Pass);
    SuiteReport {
        suite: cfg.suite,
        config: cfg.clone(),
        tolerance: cfg.tolerance(),
        cases_run: cases.len() - equality_cases,
        equality_cases,
        violations: count(CaseKind::Random, CaseStatus::Violation),
        equality_failures,
        aborted: count(CaseKind::Random, CaseStatus::Aborted),
        skipped: count(CaseKind::Random, CaseStatus::Skipped),
        regenerations: cases.iter().map(|c| c.regenerations).sum(),
        min_margin: margins.first().copied(),
        median_margin: median,
        worst_case,
        extras,
        elapsed_seconds: elapsed,
    }
}

/// Runs one suite on a pool of `jobs` worker threads.
pub fn run_suite(cfg: &SuiteConfig, jobs: usize) -> Result<SuiteRun> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let cases = pool.install(|| run_cases(cfg));
    let report = summarize(cfg, &cases, start.elapsed().as_secs_f64());
    Ok(SuiteRun { report, cases })
}

/// Recomputes the margin of a recorded case from its embedded input.
pub fn replay(cfg: &SuiteConfig, case: &CaseResult) -> Result<f64> {
    let input = case
        .input
        .as_ref()
        .ok_or_else(|| Error::InvalidInput(format!("case {} has no input", case.case_id)))?;
    Ok(suites::evaluate(cfg, input)?.margin)
}

/// Rows `case_id, margin, tolerance, status, spec_digest`.
pub fn write_csv(path: &Path, cases: &[CaseResult]) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidInput(format!("writing {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(["case_id", "margin", "tolerance", "status", "spec_digest"])
        .map_err(io)?;
    for c in cases {
        w.write_record([
            c.case_id.clone(),
            format!("{:e}", c.margin),
            format!("{:e}", c.tolerance),
            c.status.as_str().to_string(),
            c.spec_digest.clone(),
        ])
        .map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidInput(format!("writing {}: {e}", path.display())))?;
    Ok(())
}
