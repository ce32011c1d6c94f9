//! Run configuration, certificates, branch files and the stages that produce them.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::contraction::{margin, prove_branch, select_nu, ContractionReport, ProofContext};
use crate::decimal::exact_decimal;
use crate::error::{Error, Result};
use crate::floquet::float::{build_floquet_pack, interpolate_floquet, solve_floquet_nodes};
use crate::floquet::nk::{prove_normal_form, FloquetContraction};
use crate::floquet::spectral::{exponent_bands, stability_verdict, ExponentBand, SpectralConfig, SpectralVerdict};
use crate::interval::Interval;
use crate::model::{eta_of_kappa, Field, LinearToy, ModelParams, PredatorPrey};
use crate::numerics::{approximate, build_operator_pack, interpolate_branch, phase_reference, sample_nodes, FloatConfig, NodeSolution};
use crate::posteriori::{branch_samples, to_original, verify_crossings, CrossingConfig, CrossingReport};
use crate::seqspace::FcArr;
use crate::textfmt;
use crate::zero_problem::FloatBranch;

pub const CERTIFICATE_FORMAT: &str = "stablefam-certificate";
pub const CERTIFICATE_VERSION: u32 = 1;
pub const BRANCH_FORMAT: &str = "stablefam-branch";
pub const BRANCH_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    PredatorPrey,
    /// linear field with a known exact zero, for checking the pipeline
    LinearToy,
}

/// Model parameters as decimal strings, each read as its outward enclosure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamStrings {
    pub a1: String,
    pub a2: String,
    pub d1: String,
    pub d2: String,
    pub m1: String,
    pub m2: String,
    pub y1: String,
    pub y2: String,
    pub gamma: String,
    pub kappa1: String,
    pub kappa2: String,
}

impl Default for ParamStrings {
    fn default() -> Self {
        let s = |x: &str| x.to_string();
        ParamStrings {
            a1: s("10"),
            a2: s("41"),
            d1: s("0.8"),
            d2: s("0.5"),
            m1: s("1"),
            m2: s("1"),
            y1: s("1"),
            y2: s("1"),
            gamma: s("1"),
            kappa1: s("92"),
            kappa2: s("129"),
        }
    }
}

impl ParamStrings {
    pub fn parse(&self) -> Result<ModelParams> {
        let p = |name: &str, s: &str| Interval::parse_decimal(s).map_err(|e| Error::Parse(format!("params.{name}: {e}")));
        let out = ModelParams {
            a1: p("a1", &self.a1)?,
            a2: p("a2", &self.a2)?,
            d1: p("d1", &self.d1)?,
            d2: p("d2", &self.d2)?,
            m1: p("m1", &self.m1)?,
            m2: p("m2", &self.m2)?,
            y1: p("y1", &self.y1)?,
            y2: p("y2", &self.y2)?,
            gamma: p("gamma", &self.gamma)?,
            kappa1: p("kappa1", &self.kappa1)?,
            kappa2: p("kappa2", &self.kappa2)?,
        };
        out.validate()?;
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FloatSettings {
    pub grid: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed_horizon: f64,
    pub seed_step: f64,
}

impl Default for FloatSettings {
    fn default() -> Self {
        let f = FloatConfig::default();
        FloatSettings { grid: f.grid, tol: f.tol, max_iter: f.max_iter, seed_horizon: f.seed_horizon, seed_step: f.seed_step }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FloquetSettings {
    pub grid: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub spectral: SpectralConfig,
}

impl Default for FloquetSettings {
    fn default() -> Self {
        FloquetSettings { grid: 256, tol: 1e-12, max_iter: 20, spectral: SpectralConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportSettings {
    /// rows of the `(kappa, period, zeta_1, zeta_2)` table
    pub samples: usize,
    pub tube_kappa: usize,
    pub tube_t: usize,
    /// rows of the exponent band table
    pub bands: usize,
}

impl Default for ExportSettings {
    fn default() -> Self {
        ExportSettings { samples: 101, tube_kappa: 21, tube_t: 64, bands: 101 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelKind,
    pub params: ParamStrings,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    /// weights tried in the existence proof
    pub nu: Vec<f64>,
    /// radius of the ball for the second-derivative bound
    #[serde(rename = "R")]
    pub big_r: f64,
    pub float: FloatSettings,
    pub crossing: CrossingConfig,
    pub floquet: FloquetSettings,
    pub export: ExportSettings,
    /// not part of the hash
    pub threads: Option<usize>,
    pub out: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelKind::PredatorPrey,
            params: ParamStrings::default(),
            k: 20,
            n: 30,
            nu: vec![1.001, 1.01, 1.05],
            big_r: 1e-6,
            float: FloatSettings::default(),
            crossing: CrossingConfig::default(),
            floquet: FloquetSettings::default(),
            export: ExportSettings::default(),
            threads: None,
            out: None,
        }
    }
}

impl RunConfig {
    /// The linear test problem at `(K, N) = (1, 1)`.
    pub fn toy() -> Self {
        RunConfig { model: ModelKind::LinearToy, k: 1, n: 1, nu: vec![1.5, 2.0], big_r: 1e-3, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 || self.n < 1 {
            return Err(Error::Precondition(format!("K = {} and N = {} must be at least 1", self.k, self.n)));
        }
        if self.nu.is_empty() || self.nu.iter().any(|&v| !(v > 1.0)) {
            return Err(Error::Precondition(format!("every nu must exceed 1, got {:?}", self.nu)));
        }
        if !(self.big_r > 0.0) {
            return Err(Error::Precondition(format!("R must be positive, got {}", self.big_r)));
        }
        self.params.parse()?;
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let cfg: RunConfig = textfmt::parse(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> Result<String> {
        textfmt::emit(self)
    }

    /// SHA-256 of the canonical text without the runtime-only fields.
    pub fn hash(&self) -> Result<String> {
        let canon = RunConfig { threads: None, out: None, ..self.clone() };
        Ok(hex::encode(Sha256::digest(canon.to_text()?.as_bytes())))
    }

    pub fn float_config(&self) -> FloatConfig {
        let f = &self.float;
        FloatConfig { k: self.k, n: self.n, grid: f.grid, tol: f.tol, max_iter: f.max_iter, seed_horizon: f.seed_horizon, seed_step: f.seed_step }
    }
}

/// The model field selected by the configuration.
pub fn build_field(cfg: &RunConfig) -> Result<Box<dyn Field>> {
    Ok(match cfg.model {
        ModelKind::PredatorPrey => Box::new(PredatorPrey::new(&cfg.params.parse()?)),
        ModelKind::LinearToy => Box::new(LinearToy::with_solution(&LinearToy::reference_solution(cfg.n, cfg.k))),
    })
}

// ---------------------------------------------------------------- branch files

fn push_coeff(out: &mut String, n: usize, k: i64, re: f64, im: f64) {
    let (a, b) = (exact_decimal(re), exact_decimal(im));
    out.push_str(&format!("{n} {k} {a} {a} {b} {b}\n"));
}

/// Line-based coefficient file.
///
/// Each component starts with `component NAME N n K k` and lists one
/// coefficient per line as `n k re_lo re_hi im_lo im_hi`.
pub fn branch_to_text(chi: &FloatBranch, nu: f64) -> String {
    let mut out = format!("{BRANCH_FORMAT} {BRANCH_VERSION}\nnu {}\nN {}\nK {}\n", exact_decimal(nu), chi.n_max(), chi.k_max());
    let real = |out: &mut String, name: &str, c: &[f64]| {
        out.push_str(&format!("component {name} N {} K 0\n", c.len() - 1));
        for (n, &x) in c.iter().enumerate() {
            push_coeff(out, n, 0, x, 0.0);
        }
    };
    real(&mut out, "tau", &chi.tau);
    real(&mut out, "zeta1", &chi.zeta[0]);
    real(&mut out, "zeta2", &chi.zeta[1]);
    for (j, a) in chi.u.iter().enumerate() {
        out.push_str(&format!("component u{} N {} K {}\n", j + 1, a.n_max, a.k_max));
        for n in 0..=a.n_max {
            for k in -(a.k_max as i64)..=a.k_max as i64 {
                let z = a.get(n, k);
                push_coeff(&mut out, n, k, z.re, z.im);
            }
        }
    }
    out
}

/// Read a branch file. Each coefficient is the midpoint of the outward
/// enclosure of its decimal interval, which is exact for files we wrote.
pub fn branch_from_text(text: &str) -> Result<FloatBranch> {
    let bad = |line: usize, what: &str| Error::Parse(format!("branch file line {}: {what}", line + 1));
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    let (i, head) = lines.next().ok_or_else(|| bad(0, "empty file"))?;
    if head.trim() != format!("{BRANCH_FORMAT} {BRANCH_VERSION}") {
        return Err(bad(i, &format!("expected header `{BRANCH_FORMAT} {BRANCH_VERSION}`")));
    }
    let mut header = |key: &str| -> Result<String> {
        let (i, l) = lines.next().ok_or_else(|| bad(0, "truncated header"))?;
        let mut it = l.split_whitespace();
        if it.next() != Some(key) {
            return Err(bad(i, &format!("expected `{key}`")));
        }
        it.next().map(str::to_string).ok_or_else(|| bad(i, "missing value"))
    };
    let _nu = header("nu")?;
    let n: usize = header("N")?.parse().map_err(|_| bad(0, "N"))?;
    let k: usize = header("K")?.parse().map_err(|_| bad(0, "K"))?;
    let mut comps: Vec<(String, usize, usize, FcArr)> = Vec::new();
    for (i, l) in lines {
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.first() == Some(&"component") {
            if f.len() != 6 || f[2] != "N" || f[4] != "K" {
                return Err(bad(i, "malformed component header"));
            }
            let cn: usize = f[3].parse().map_err(|_| bad(i, "N"))?;
            let ck: usize = f[5].parse().map_err(|_| bad(i, "K"))?;
            comps.push((f[1].to_string(), cn, ck, FcArr::zeros(cn, ck)));
            continue;
        }
        let (_, cn, ck, arr) = comps.last_mut().ok_or_else(|| bad(i, "coefficient before any component"))?;
        if f.len() != 6 {
            return Err(bad(i, "expected `n k re_lo re_hi im_lo im_hi`"));
        }
        let cn_i: usize = f[0].parse().map_err(|_| bad(i, "n"))?;
        let ck_i: i64 = f[1].parse().map_err(|_| bad(i, "k"))?;
        if cn_i > *cn || ck_i.unsigned_abs() as usize > *ck {
            return Err(bad(i, "index out of range"));
        }
        let re = Interval::parse_pair(f[2], f[3]).map_err(|e| bad(i, &e.to_string()))?;
        let im = Interval::parse_pair(f[4], f[5]).map_err(|e| bad(i, &e.to_string()))?;
        arr.set(cn_i, ck_i, num_complex::Complex64::new(re.mid(), im.mid()));
    }
    let mut take = |name: &str, want_k: usize| -> Result<FcArr> {
        let pos = comps.iter().position(|c| c.0 == name).ok_or_else(|| Error::Parse(format!("branch file: missing component {name}")))?;
        let (_, cn, ck, a) = comps.remove(pos);
        if cn != n || ck != want_k {
            return Err(Error::Parse(format!("branch file: component {name} has N {cn} K {ck}")));
        }
        Ok(a)
    };
    let real = |a: FcArr| -> Vec<f64> { (0..=a.n_max).map(|i| a.get(i, 0).re).collect() };
    let tau = real(take("tau", 0)?);
    let zeta = [real(take("zeta1", 0)?), real(take("zeta2", 0)?)];
    let u = [take("u1", k)?, take("u2", k)?, take("u3", k)?];
    Ok(FloatBranch { tau, zeta, u })
}

pub fn branch_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

// ---------------------------------------------------------------- certificate

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Verified,
    Partial,
    Unverified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NuAttempt {
    pub nu: f64,
    /// `(1 - Z1)^2 - 2 Y Z2`, or the reason the attempt was rejected
    pub outcome: std::result::Result<f64, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExistenceSection {
    pub attempts: Vec<NuAttempt>,
    pub report: Option<ContractionReport>,
    /// `[r_min, r_max)`
    pub r_interval: Option<Interval>,
    /// presentation value: smallest power of ten in the interval
    pub r_reported: Option<f64>,
    pub warning: Option<String>,
    pub failure: Option<String>,
}

impl ExistenceSection {
    pub fn verified(&self) -> bool {
        self.report.as_ref().is_some_and(|r| r.verified())
    }

    pub fn r_min(&self) -> Option<f64> {
        self.report.as_ref()?.outcome.as_ref().ok().map(|b| b.r_min)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingSection {
    pub report: Option<CrossingReport>,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloquetSection {
    pub node_residual_max: f64,
    pub pack_condition_max: f64,
    pub pack_node_defect: f64,
    pub contraction: FloquetContraction,
    pub verdict: Option<SpectralVerdict>,
    pub bands: Vec<ExponentBand>,
    pub failure: Option<String>,
}

impl FloquetSection {
    pub fn stable(&self) -> bool {
        self.contraction.outcome.is_ok() && self.verdict.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub format: String,
    pub version: u32,
    pub status: Status,
    pub model: ModelKind,
    pub config_hash: String,
    pub branch_sha256: String,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "R")]
    pub big_r: f64,
    /// completed stages in order
    pub stages: Vec<String>,
    pub existence: Option<ExistenceSection>,
    pub crossings: Option<CrossingSection>,
    pub floquet: Option<FloquetSection>,
}

impl Certificate {
    pub fn to_text(&self) -> Result<String> {
        textfmt::emit(self)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        textfmt::parse_tagged(text, CERTIFICATE_FORMAT, CERTIFICATE_VERSION)
    }

    /// Stages expected for the model, in order.
    fn required(&self) -> &'static [&'static str] {
        match self.model {
            ModelKind::PredatorPrey => &["existence", "crossings", "floquet"],
            ModelKind::LinearToy => &["existence"],
        }
    }

    fn stage_verified(&self, s: &str) -> bool {
        match s {
            "existence" => self.existence.as_ref().is_some_and(|e| e.verified()),
            "crossings" => self.crossings.as_ref().is_some_and(|c| c.report.is_some()),
            "floquet" => self.floquet.as_ref().is_some_and(|f| f.stable()),
            _ => false,
        }
    }

    /// VERIFIED iff every required stage ran and verified; UNVERIFIED if a
    /// stage that ran failed; PARTIAL otherwise.
    pub fn refresh_status(&mut self) {
        let req = self.required();
        let ran: Vec<&str> = req.iter().copied().filter(|s| self.stages.iter().any(|x| x == s)).collect();
        self.status = if ran.iter().any(|s| !self.stage_verified(s)) {
            Status::Unverified
        } else if ran.len() == req.len() {
            Status::Verified
        } else {
            Status::Partial
        };
    }
}

// ---------------------------------------------------------------- stages

/// Float stage output.
pub struct Approximation {
    pub nodes: Vec<NodeSolution>,
    pub chi: FloatBranch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeDiagnostic {
    pub index: usize,
    pub eta: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub residual_max: f64,
    pub nodes: Vec<NodeDiagnostic>,
}

impl Approximation {
    pub fn diagnostics(&self, cfg: &RunConfig) -> Result<Diagnostics> {
        Ok(Diagnostics {
            format: "stablefam-diagnostics".into(),
            version: 1,
            config_hash: cfg.hash()?,
            residual_max: self.nodes.iter().map(|s| s.residual).fold(0.0, f64::max),
            nodes: self.nodes.iter().map(|s| NodeDiagnostic { index: s.index, eta: s.eta, residual: s.residual, iterations: s.iterations }).collect(),
        })
    }
}

pub fn run_approximate(cfg: &RunConfig) -> Result<Approximation> {
    cfg.validate()?;
    let field = build_field(cfg)?;
    let fc = cfg.float_config();
    let (nodes, chi) = match cfg.model {
        ModelKind::PredatorPrey => approximate(field.as_ref(), &fc)?,
        ModelKind::LinearToy => {
            let sol = LinearToy::reference_solution(cfg.n, cfg.k);
            let exact = FloatBranch { tau: sol.tau, zeta: sol.zeta, u: sol.u };
            let nodes = sample_nodes(field.as_ref(), &exact, &fc);
            let chi = interpolate_branch(&nodes);
            (nodes, chi)
        }
    };
    Ok(Approximation { nodes, chi })
}

fn new_certificate(cfg: &RunConfig, branch_text: &str) -> Result<Certificate> {
    Ok(Certificate {
        format: CERTIFICATE_FORMAT.into(),
        version: CERTIFICATE_VERSION,
        status: Status::Partial,
        model: cfg.model,
        config_hash: cfg.hash()?,
        branch_sha256: branch_hash(branch_text),
        k: cfg.k,
        n: cfg.n,
        big_r: cfg.big_r,
        stages: Vec::new(),
        existence: None,
        crossings: None,
        floquet: None,
    })
}

/// Existence proof over the configured weights, then the crossing checks.
pub fn run_prove(cfg: &RunConfig, branch_text: &str) -> Result<Certificate> {
    cfg.validate()?;
    let chi = branch_from_text(branch_text)?;
    if chi.n_max() != cfg.n || chi.k_max() != cfg.k {
        return Err(Error::Precondition(format!("branch has (N, K) = ({}, {}), config has ({}, {})", chi.n_max(), chi.k_max(), cfg.n, cfg.k)));
    }
    let mut cert = new_certificate(cfg, branch_text)?;
    let field = build_field(cfg)?;
    let g = phase_reference(&chi);
    let op = build_operator_pack(field.as_ref(), &chi, &g, cfg.float.grid)?;
    let mut attempts = Vec::new();
    let chosen = select_nu(&cfg.nu, |nu| {
        let rep = prove_branch(field.as_ref(), &chi, &g, &op, nu, cfg.big_r);
        attempts.push(NuAttempt {
            nu,
            outcome: match &rep {
                Ok(r) if r.verified() => Ok(margin(r)),
                Ok(r) => Err(r.outcome.clone().err().unwrap_or_default()),
                Err(e) => Err(e.to_string()),
            },
        });
        rep
    });
    let existence = match chosen {
        Ok(rep) => {
            let b = rep.outcome.clone().expect("selected report is verified");
            let warning = if b.r > 1e-10 { Some(format!("reported radius {:e} exceeds 1e-10", b.r)) } else { None };
            ExistenceSection { attempts, r_interval: Some(Interval::new(b.r_min, b.r_max)), r_reported: Some(b.r), report: Some(rep), warning, failure: None }
        }
        Err(e) if e.is_verification_failure() => {
            ExistenceSection { attempts, report: None, r_interval: None, r_reported: None, warning: None, failure: Some(e.to_string()) }
        }
        Err(e) => return Err(e),
    };
    cert.stages.push("existence".into());
    if cfg.model == ModelKind::PredatorPrey {
        if let (Some(r), Some(rep)) = (existence.r_min(), existence.report.as_ref()) {
            let p = cfg.params.parse()?;
            cert.crossings = Some(match verify_crossings(&chi.to_point(), r, rep.nu, &p, &cfg.crossing) {
                Ok(report) => CrossingSection { report: Some(report), failure: None },
                Err(e) if e.is_verification_failure() => CrossingSection { report: None, failure: Some(e.to_string()) },
                Err(e) => return Err(e),
            });
            cert.stages.push("crossings".into());
        }
    }
    cert.existence = Some(existence);
    cert.refresh_status();
    Ok(cert)
}

/// Normal-form proof and spectral verdict, appended to an existence certificate.
pub fn run_floquet(cfg: &RunConfig, branch_text: &str, cert: &Certificate) -> Result<Certificate> {
    cfg.validate()?;
    if cfg.model != ModelKind::PredatorPrey {
        return Err(Error::Precondition("the stability stage needs the predator-prey model".into()));
    }
    if cert.branch_sha256 != branch_hash(branch_text) {
        return Err(Error::Precondition("certificate was produced from a different branch file".into()));
    }
    if cert.config_hash != cfg.hash()? {
        return Err(Error::Precondition("certificate was produced with a different configuration".into()));
    }
    let ex = cert.existence.as_ref().filter(|e| e.verified()).ok_or_else(|| Error::Precondition("existence proof missing or unverified".into()))?;
    let rep = ex.report.as_ref().unwrap();
    let r = ex.r_min().unwrap();
    let chi = branch_from_text(branch_text)?;
    let p = cfg.params.parse()?;
    let field = build_field(cfg)?;
    let fs = &cfg.floquet;
    let nodes = solve_floquet_nodes(field.as_ref(), &chi, fs.grid, fs.tol, fs.max_iter)?;
    let fb = interpolate_floquet(&nodes);
    let pack = build_floquet_pack(field.as_ref(), &chi, &fb, fs.grid)?;
    let g = phase_reference(&chi);
    let ctx = ProofContext::new(field.as_ref(), &chi, &g, rep.nu)?;
    let contraction = prove_normal_form(&ctx, &fb, &pack, rep.d2.total, r)?;
    let mut section = FloquetSection {
        node_residual_max: nodes.iter().map(|s| s.residual).fold(0.0, f64::max),
        pack_condition_max: pack.cond.iter().cloned().fold(0.0, f64::max),
        pack_node_defect: pack.node_defect,
        contraction,
        verdict: None,
        bands: Vec::new(),
        failure: None,
    };
    match (section.contraction.radius(), cert.crossings.as_ref().and_then(|c| c.report.as_ref())) {
        (Some(rg), Some(cr)) => {
            let ends = [(cr.h1_minus, cr.h1_plus), (cr.h2_minus, cr.h2_plus)];
            match stability_verdict(&fb, rg, &p, (cr.h1_plus, cr.h2_minus), &ends, &fs.spectral) {
                Ok(v) => section.verdict = Some(v),
                Err(e) if e.is_verification_failure() => section.failure = Some(e.to_string()),
                Err(e) => return Err(e),
            }
            section.bands = exponent_bands(&fb, rg, &p, cfg.export.bands)?;
        }
        (None, _) => section.failure = Some(format!("normal form: {}", section.contraction.outcome.clone().err().unwrap_or_default())),
        (_, None) => section.failure = Some("crossings unverified".into()),
    }
    let mut out = cert.clone();
    out.floquet = Some(section);
    out.stages.retain(|s| s != "floquet");
    out.stages.push("floquet".into());
    out.refresh_status();
    Ok(out)
}

// ---------------------------------------------------------------- exports

fn pair(iv: Interval) -> String {
    let (a, b) = iv.to_decimal_pair();
    format!("{a},{b}")
}

fn csv_header(name: &str, cols: &[&str]) -> String {
    let mut h = format!("# stablefam-{name} v1\n");
    h.push_str(&cols.join(","));
    h.push('\n');
    h
}

/// `(kappa, period, zeta_1, zeta_2)` enclosures, two columns per quantity.
pub fn export_branch(chi: &FloatBranch, r: f64, p: &ModelParams, count: usize) -> Result<String> {
    let mut out = csv_header("branch", &["kappa_lo", "kappa_hi", "period_lo", "period_hi", "zeta1_lo", "zeta1_hi", "zeta2_lo", "zeta2_hi"]);
    for s in branch_samples(&chi.to_point(), r, p, count)? {
        out.push_str(&format!("{},{},{},{}\n", pair(s.kappa), pair(s.period), pair(s.zeta1), pair(s.zeta2)));
    }
    Ok(out)
}

/// Orbit points `(X_1, X_2, S)` on a `(kappa, t)` grid over `kappas`; `t` runs over one period.
pub fn export_tube(chi: &FloatBranch, r: f64, p: &ModelParams, kappas: (f64, f64), n_kappa: usize, n_t: usize) -> Result<String> {
    let mut out = csv_header("tube", &["kappa", "phase", "x1_lo", "x1_hi", "x2_lo", "x2_hi", "s_lo", "s_hi"]);
    let point = chi.to_point();
    let (k1, k2) = kappas;
    for i in 0..n_kappa {
        let kappa = k1 + (k2 - k1) * if n_kappa <= 1 { 0.0 } else { i as f64 / (n_kappa - 1) as f64 };
        let kappa = kappa.clamp(k1.min(k2), k1.max(k2));
        let eta = eta_of_kappa(p, Interval::point(kappa))?.mid().clamp(-1.0, 1.0);
        let tau = crate::seqspace::fcarr::cheb_eval_r(&chi.tau, eta);
        let period = 2.0 * std::f64::consts::PI * tau / p.gamma.mid();
        for j in 0..n_t {
            let phase = j as f64 / n_t as f64;
            let o = to_original(&point, r, p, Interval::point(kappa), Interval::point(phase * period))?;
            out.push_str(&format!("{},{},{},{},{}\n", exact_decimal(kappa), exact_decimal(phase), pair(o.x1), pair(o.x2), pair(o.s)));
        }
    }
    Ok(out)
}

/// `(kappa, Re mu_1, Re mu_2)` enclosures from the certificate.
pub fn export_bands(bands: &[ExponentBand]) -> String {
    let mut out = csv_header("bands", &["eta", "kappa_lo", "kappa_hi", "re_mu1_lo", "re_mu1_hi", "re_mu2_lo", "re_mu2_hi"]);
    for b in bands {
        out.push_str(&format!("{},{},{},{}\n", exact_decimal(b.eta), pair(b.kappa), pair(b.re_mu1), pair(b.re_mu2)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip_and_hash() {
        let cfg = RunConfig::default();
        let text = cfg.to_text().unwrap();
        let back = RunConfig::from_text(&text).unwrap();
        assert_eq!(back, cfg);
        let other = RunConfig { threads: Some(3), out: Some("x".into()), ..cfg.clone() };
        assert_eq!(other.hash().unwrap(), cfg.hash().unwrap());
        let changed = RunConfig { k: 19, ..cfg.clone() };
        assert_ne!(changed.hash().unwrap(), cfg.hash().unwrap());
    }

    #[test]
    fn partial_config_uses_defaults() {
        let cfg = RunConfig::from_text("K = 10\nnu = [1.2]\n[params]\na1 = \"11\"\n").unwrap();
        assert_eq!(cfg.k, 10);
        assert_eq!(cfg.n, 30);
        assert_eq!(cfg.params.a1, "11");
        assert_eq!(cfg.params.a2, "41");
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(RunConfig::from_text("nu = [1.0]").is_err());
        assert!(RunConfig::from_text("K = 0").is_err());
        assert!(RunConfig::from_text("unknown = 1").is_err());
        assert!(RunConfig::from_text("[params]\na1 = \"ten\"").is_err());
    }

    fn toy_branch() -> FloatBranch {
        let sol = LinearToy::reference_solution(2, 3);
        FloatBranch { tau: sol.tau, zeta: sol.zeta, u: sol.u }
    }

    #[test]
    fn branch_file_round_trip() {
        let mut chi = toy_branch();
        chi.tau[1] = 0.1;
        chi.u[1].set(2, -3, num_complex::Complex64::new(1e-17, -3.0f64.sqrt()));
        let text = branch_to_text(&chi, 1.01);
        let back = branch_from_text(&text).unwrap();
        assert_eq!(back, chi);
        assert_eq!(branch_to_text(&back, 1.01), text);
    }

    #[test]
    fn branch_file_errors() {
        let text = branch_to_text(&toy_branch(), 1.01);
        assert!(branch_from_text(&text.replace("stablefam-branch 1", "stablefam-branch 2")).is_err());
        assert!(branch_from_text(&text.replace("component u3", "component u4")).is_err());
        let bad: String = text.lines().take(8).collect::<Vec<_>>().join("\n") + "\n0 0 x 1 0 0\n";
        assert!(branch_from_text(&bad).is_err());
    }

    #[test]
    fn hand_written_decimals_read_outward() {
        let text = branch_to_text(&toy_branch(), 1.01);
        let line = text.lines().find(|l| l.starts_with("0 0 ")).unwrap().to_string();
        let edited = text.replacen(&line, "0 0 0.1 0.1 0 0", 1);
        let chi = branch_from_text(&edited).unwrap();
        assert!((chi.tau[0] - 0.1).abs() <= f64::EPSILON * 0.1);
    }

    #[test]
    fn status_rules() {
        let cfg = RunConfig::toy();
        let mut c = new_certificate(&cfg, "").unwrap();
        c.refresh_status();
        assert_eq!(c.status, Status::Partial);
        c.stages.push("existence".into());
        c.existence = Some(ExistenceSection { attempts: vec![], report: None, r_interval: None, r_reported: None, warning: None, failure: Some("x".into()) });
        c.refresh_status();
        assert_eq!(c.status, Status::Unverified);
    }
}
