//! File formats and the batch command line.
//!
//! Every artifact is a JSON [`MatrixFile`]; complex entries are `[re, im]`
//! pairs and matrices are row-major. Commands return an exit code and the
//! report text instead of exiting, so they can be driven from tests.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::cert::{
    concave_test, derivative_monotone_test, hypograph_convexity_test, monotone_test, CertParams, CertReport, Verdict,
};
use crate::error::{Error, Result};
use crate::freefun::{karcher_mean_value, lookup, mean_params, nc_axiom_check, power_mean_value, NcReport};
use crate::matcore::{min_eig, serial, CVec, GenMat, HermMat, MatTuple, Tolerances, C64};
use crate::pencil::RawPencil;
use crate::represent::{
    certificate_tolerances, reconstruct, reconstruction_error, rep_eval, rep_eval_complex, rep_from_quadrature,
    support_pencil, PencilRepresentation, SupportCertificate, SupportOptions, SupportValidation, DEFAULT_NODES,
};
use crate::schur::{schur_generic, sector_bound_check, shorted_psd, Keep, PivotSubspace, SectorBoundReport};

pub const SCHEMA_VERSION: &str = "1";

/// Reconstruction residual and error accepted by `reconstruct` and `support`.
pub const RECONSTRUCTION_TOL: f64 = 1e-6;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_MATH: i32 = 1;
pub const EXIT_COUNTEREXAMPLE: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub schema_version: String,
    #[serde(flatten)]
    pub content: Content,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "lowercase")]
pub enum Content {
    #[serde(with = "serial::mat")]
    Matrix(GenMat),
    #[serde(with = "serial::mats")]
    Tuple(Vec<GenMat>),
    Pencil(PencilPayload),
    Certificate(CertificatePayload),
    Representation(RepresentationPayload),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PencilPayload {
    /// `B_0, B_1, ..., B_k`.
    #[serde(with = "serial::mats")]
    pub coeffs: Vec<GenMat>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificatePayload {
    pub function: String,
    #[serde(with = "serial::mats")]
    pub base_point: Vec<GenMat>,
    #[serde(with = "serial::vector")]
    pub v: CVec,
    #[serde(with = "serial::mats")]
    pub coeffs: Vec<GenMat>,
    pub c: f64,
    #[serde(with = "serial::mats")]
    pub gradient_mats: Vec<GenMat>,
    pub validation: SupportValidation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepresentationPayload {
    #[serde(with = "serial::mats")]
    pub coeffs: Vec<GenMat>,
    /// Orthonormal columns spanning the pivot subspace.
    #[serde(with = "serial::mat")]
    pub pivot: GenMat,
    #[serde(with = "serial::mat")]
    pub state: GenMat,
}

impl MatrixFile {
    pub fn new(content: Content) -> Self {
        MatrixFile { schema_version: SCHEMA_VERSION.into(), content }
    }

    pub fn kind(&self) -> &'static str {
        match self.content {
            Content::Matrix(_) => "matrix",
            Content::Tuple(_) => "tuple",
            Content::Pencil(_) => "pencil",
            Content::Certificate(_) => "certificate",
            Content::Representation(_) => "representation",
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: MatrixFile = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        if f.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!("unsupported schema version {}", f.schema_version)));
        }
        Ok(f)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&s)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }

    pub fn matrix(m: &GenMat) -> Self {
        Self::new(Content::Matrix(m.clone()))
    }

    pub fn tuple(x: &MatTuple) -> Self {
        Self::new(Content::Tuple(x.iter().map(|m| m.as_mat().clone()).collect()))
    }

    pub fn pencil(l: &RawPencil) -> Self {
        Self::new(Content::Pencil(PencilPayload { coeffs: l.coeffs().iter().map(|b| b.as_mat().clone()).collect() }))
    }

    pub fn certificate(c: &SupportCertificate) -> Self {
        Self::new(Content::Certificate(CertificatePayload {
            function: c.function.clone(),
            base_point: c.base_point.iter().map(|m| m.as_mat().clone()).collect(),
            v: c.v.clone(),
            coeffs: c.pencil.coeffs().iter().map(|b| b.as_mat().clone()).collect(),
            c: c.c,
            gradient_mats: c.gradient_mats.iter().map(|m| m.as_mat().clone()).collect(),
            validation: c.validation,
        }))
    }

    pub fn representation(r: &PencilRepresentation) -> Self {
        Self::new(Content::Representation(RepresentationPayload {
            coeffs: r.pencil.coeffs().iter().map(|b| b.as_mat().clone()).collect(),
            pivot: r.pivot.basis().clone(),
            state: r.state.as_mat().clone(),
        }))
    }

    fn wrong_kind(&self, want: &str) -> Error {
        Error::Parse(format!("expected a {want} file, found {}", self.kind()))
    }

    pub fn into_matrix(self) -> Result<GenMat> {
        match self.content {
            Content::Matrix(m) => Ok(m),
            _ => Err(self.wrong_kind("matrix")),
        }
    }

    /// Tuple of Hermitian matrices; a single matrix file is a 1-tuple.
    pub fn into_tuple(self, tol: &Tolerances) -> Result<MatTuple> {
        let mats = self.into_general_mats()?;
        MatTuple::new(mats.iter().map(|m| HermMat::certify(m, tol)).collect::<Result<Vec<_>>>()?)
    }

    pub fn into_general_tuple(self) -> Result<MatTuple<GenMat>> {
        MatTuple::new(self.into_general_mats()?)
    }

    fn into_general_mats(self) -> Result<Vec<GenMat>> {
        match self.content {
            Content::Tuple(v) => Ok(v),
            Content::Matrix(m) => Ok(vec![m]),
            _ => Err(self.wrong_kind("tuple")),
        }
    }

    pub fn into_pencil(self, tol: &Tolerances) -> Result<RawPencil> {
        match self.content {
            Content::Pencil(p) => RawPencil::new(herm_all(&p.coeffs, tol)?),
            _ => Err(self.wrong_kind("pencil")),
        }
    }

    pub fn into_certificate(self, tol: &Tolerances) -> Result<SupportCertificate> {
        let p = match self.content {
            Content::Certificate(p) => p,
            _ => return Err(self.wrong_kind("certificate")),
        };
        let pencil = RawPencil::new(herm_all(&p.coeffs, tol)?)?.validate(&certificate_tolerances(tol))?;
        Ok(SupportCertificate {
            function: p.function,
            base_point: MatTuple::new(herm_all(&p.base_point, tol)?)?,
            v: p.v,
            pencil,
            c: p.c,
            gradient_mats: herm_all(&p.gradient_mats, tol)?,
            validation: p.validation,
        })
    }

    pub fn into_representation(self, tol: &Tolerances) -> Result<PencilRepresentation> {
        let p = match self.content {
            Content::Representation(p) => p,
            _ => return Err(self.wrong_kind("representation")),
        };
        let pencil = RawPencil::new(herm_all(&p.coeffs, tol)?)?.validate(&certificate_tolerances(tol))?;
        let pivot = PivotSubspace::new(p.pivot, tol)?;
        PencilRepresentation::new(pencil, pivot, HermMat::certify(&p.state, tol)?, tol)
    }
}

fn herm_all(mats: &[GenMat], tol: &Tolerances) -> Result<Vec<HermMat>> {
    mats.iter().map(|m| HermMat::certify(m, tol)).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Text,
    Json,
}

/// Settings shared by all commands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub tol: Tolerances,
    pub trials: usize,
    pub n: usize,
    pub interval: (f64, f64),
    /// False when `interval` is the default and may be widened.
    pub interval_given: bool,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            tol: Tolerances::default(),
            trials: 1000,
            n: 2,
            interval: (0.5, 2.0),
            interval_given: false,
            format: Format::Text,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let (c1, c2) = self.interval;
        if !(c1 > 0.0 && c2 > c1 && c2.is_finite()) {
            return Err(Error::BadConfig(format!("interval must satisfy 0 < c1 < c2, got {c1},{c2}")));
        }
        if self.n == 0 || self.trials == 0 {
            return Err(Error::BadConfig("n and trials must be positive".into()));
        }
        Ok(())
    }

    fn cert_params(&self) -> CertParams {
        CertParams { n: self.n, trials: self.trials, seed: self.seed, interval: self.interval, tol: self.tol }
    }
}

/// Exit code and printed report of a command.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(code: i32, stdout: String) -> Self {
        Outcome { code, stdout, stderr: String::new() }
    }

    fn fail(code: i32, e: &Error) -> Self {
        Outcome { code, stdout: String::new(), stderr: format!("error: {}: {e}\n", e.name()) }
    }
}

/// Stage at which an error occurred; decides its exit code.
enum Stage {
    Load,
    Compute,
}

fn exit_code(e: &Error, stage: Stage) -> i32 {
    match e {
        Error::UnknownFunction(_) | Error::BadConfig(_) => EXIT_USAGE,
        Error::Parse(_) | Error::Io(_) => EXIT_DATA,
        _ => match stage {
            Stage::Load => EXIT_DATA,
            Stage::Compute => EXIT_MATH,
        },
    }
}

/// Which property `check` certifies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CheckProperty {
    Monotone,
    Concave,
    Derivative,
    Hypograph,
    NcAxioms,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
enum CheckReport {
    Cert(CertReport),
    Nc(NcReport),
}

fn render<T: Serialize>(format: Format, value: &T, text: impl FnOnce() -> String) -> Result<String> {
    match format {
        Format::Json => serde_json::to_string_pretty(value).map(|s| s + "\n").map_err(|e| Error::Parse(e.to_string())),
        Format::Text => Ok(text()),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(path, s + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// `check FUNCTION PROPERTY`: 0 pass, 2 counterexample, 3 inconclusive. The
/// JSON report (with any counterexample inputs) goes to `--out`.
pub fn cmd_check(function: &str, property: CheckProperty, cfg: &RunConfig) -> Outcome {
    let run = || -> Result<(i32, String)> {
        cfg.validate()?;
        let f = lookup(function)?;
        let p = cfg.cert_params();
        let report = match property {
            CheckProperty::Monotone => CheckReport::Cert(monotone_test(&f, &p)?),
            CheckProperty::Concave => CheckReport::Cert(concave_test(&f, &p)?),
            CheckProperty::Derivative => CheckReport::Cert(derivative_monotone_test(&f, &p)?),
            CheckProperty::Hypograph => CheckReport::Cert(hypograph_convexity_test(&f, cfg.n.div_ceil(2), &p)?),
            CheckProperty::NcAxioms => {
                CheckReport::Nc(nc_axiom_check(&f, cfg.n, cfg.trials, cfg.seed, cfg.interval, &cfg.tol)?)
            }
        };
        let code = match &report {
            CheckReport::Cert(r) => match r.verdict {
                Verdict::Pass => EXIT_PASS,
                Verdict::Counterexample => EXIT_COUNTEREXAMPLE,
                Verdict::Inconclusive => EXIT_INCONCLUSIVE,
            },
            CheckReport::Nc(r) if r.pass => EXIT_PASS,
            CheckReport::Nc(_) => EXIT_COUNTEREXAMPLE,
        };
        if let Some(out) = &cfg.out {
            write_json(out, &report)?;
        }
        let text = render(cfg.format, &report, || match &report {
            CheckReport::Cert(r) => {
                let mut s = format!(
                    "function: {}\nproperty: {:?}\nverdict: {:?}\nn: {}\nseed: {}\ntrials run: {}\nworst margin: {:.6e}\n",
                    r.function, r.property, r.verdict, r.n, r.seed, r.trials_run, r.worst_margin
                );
                if let Some(ce) = &r.counterexample {
                    let _ = writeln!(s, "counterexample at trial {} with margin {:.6e}", ce.trial, ce.margin);
                }
                if let Some(note) = &r.note {
                    let _ = writeln!(s, "note: {note}");
                }
                s
            }
            CheckReport::Nc(r) => format!(
                "function: {}\nproperty: nc-axioms\npass: {}\nseed: {}\nunitary defect: {:.6e}\ndirect-sum defect: {:.6e}\n",
                r.function, r.pass, r.seed, r.unitary_defect, r.direct_sum_defect
            ),
        })?;
        Ok((code, text))
    };
    match run() {
        Ok((code, text)) => Outcome::ok(code, text),
        Err(e) => Outcome::fail(exit_code(&e, Stage::Compute), &e),
    }
}

/// Pivot given as comma-separated coordinate indices or a matrix file whose
/// columns form an orthonormal basis.
pub fn parse_pivot(spec: &str, ambient: usize, tol: &Tolerances) -> Result<PivotSubspace> {
    let path = Path::new(spec);
    if path.exists() {
        return PivotSubspace::new(MatrixFile::read(path)?.into_matrix()?, tol)
            .and_then(|s| if s.ambient_dim() == ambient { Ok(s) } else { Err(Error::DimensionMismatch { expected: ambient, found: s.ambient_dim() }) });
    }
    let idx = spec
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<usize>().map_err(|_| Error::BadConfig(format!("bad pivot spec '{spec}'"))))
        .collect::<Result<Vec<_>>>()?;
    PivotSubspace::coordinates(ambient, &idx)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchurMode {
    /// Shorted operator of a PSD matrix.
    Psd,
    /// Block elimination of a general matrix.
    Generic,
    /// Sectorial singular-value bound report.
    SectorBound,
}

#[derive(Serialize)]
struct SchurReport {
    mode: &'static str,
    #[serde(with = "serial::mat")]
    result: GenMat,
    /// `lambda_min` of the input's Hermitian part and of the result's.
    input_min_eig: f64,
    result_min_eig: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound: Option<SectorBoundReport>,
}

/// `schur INPUT --pivot SPEC`: shorted operator, generic Schur complement or
/// sector bound, keeping the pivot (or its complement with `complement`).
pub fn cmd_schur(input: &Path, pivot: &str, mode: SchurMode, complement: bool, cfg: &RunConfig) -> Outcome {
    let tol = cfg.tol;
    let loaded = (|| -> Result<(GenMat, PivotSubspace)> {
        let a = MatrixFile::read(input)?.into_matrix()?;
        crate::matcore::ensure_square(&a)?;
        let s = parse_pivot(pivot, a.nrows(), &tol)?;
        Ok((a, s))
    })();
    let (a, s) = match loaded {
        Ok(x) => x,
        Err(e) => return Outcome::fail(exit_code(&e, Stage::Load), &e),
    };
    let keep = if complement { Keep::Complement } else { Keep::Subspace };
    let run = || -> Result<(i32, String)> {
        let (result, bound) = match mode {
            SchurMode::Psd => {
                let h = HermMat::certify(&a, &tol)?;
                let s = if complement { PivotSubspace::new(s.complement_basis(), &tol)? } else { s.clone() };
                (shorted_psd(&h, &s, &tol)?.shorted.into_mat(), None)
            }
            SchurMode::Generic => (schur_generic(&a, &s, keep, &tol)?, None),
            SchurMode::SectorBound => {
                let rep = sector_bound_check(&a, &s, keep, crate::matcore::DEFAULT_SECTOR_GRID, &tol)?;
                (schur_generic(&a, &s, keep, &tol)?, Some(rep))
            }
        };
        let report = SchurReport {
            mode: match mode {
                SchurMode::Psd => "psd",
                SchurMode::Generic => "generic",
                SchurMode::SectorBound => "sector-bound",
            },
            input_min_eig: min_eig(&a),
            result_min_eig: min_eig(&result),
            result,
            bound,
        };
        if let Some(out) = &cfg.out {
            MatrixFile::matrix(&report.result).write(out)?;
        }
        let code = match &report.bound {
            Some(b) if !b.pass => EXIT_MATH,
            _ => EXIT_PASS,
        };
        let text = render(cfg.format, &report, || {
            let mut s = format!(
                "mode: {}\ninput lambda_min: {:.6e}\nresult lambda_min: {:.6e}\nresult:\n{}",
                report.mode,
                report.input_min_eig,
                report.result_min_eig,
                format_matrix(&report.result)
            );
            if let Some(b) = &report.bound {
                let _ = writeln!(
                    s,
                    "alpha: {:.6}\nsec^2(alpha): {:.6}\nschur norm: {:.6e}\nnorm bound: {:.6e}\npass: {}",
                    b.alpha_upper, b.sec2, b.schur_norm, b.norm_bound, b.pass
                );
            }
            s
        })?;
        Ok((code, text))
    };
    match run() {
        Ok((code, text)) => Outcome::ok(code, text),
        Err(e) => Outcome::fail(exit_code(&e, Stage::Compute), &e),
    }
}

/// `pencil-eval PENCIL TUPLE [--shifted]`.
pub fn cmd_pencil_eval(pencil: &Path, tuple: &Path, shifted: bool, cfg: &RunConfig) -> Outcome {
    let tol = cfg.tol;
    let loaded = (|| -> Result<(RawPencil, MatTuple<GenMat>)> {
        Ok((MatrixFile::read(pencil)?.into_pencil(&tol)?, MatrixFile::read(tuple)?.into_general_tuple()?))
    })();
    let (l, x) = match loaded {
        Ok(v) => v,
        Err(e) => return Outcome::fail(exit_code(&e, Stage::Load), &e),
    };
    let run = || -> Result<String> {
        let value = if shifted { l.eval_shifted(&x)? } else { l.eval(&x)? };
        if let Some(out) = &cfg.out {
            MatrixFile::matrix(&value).write(out)?;
        }
        let doc = MatrixFile::matrix(&value);
        render(cfg.format, &doc, || format!("lambda_min (Hermitian part): {:.6e}\n{}", min_eig(&value), format_matrix(&value)))
    };
    match run() {
        Ok(text) => Outcome::ok(EXIT_PASS, text),
        Err(e) => Outcome::fail(exit_code(&e, Stage::Compute), &e),
    }
}

/// Comma-separated real entries, or a matrix file with one column.
pub fn parse_vector(spec: &str) -> Result<CVec> {
    let path = Path::new(spec);
    if path.exists() {
        let m = MatrixFile::read(path)?.into_matrix()?;
        if m.ncols() != 1 {
            return Err(Error::Parse("vector file must have one column".into()));
        }
        return Ok(m.column(0).into_owned());
    }
    let v = spec
        .split(',')
        .map(|s| s.trim().parse::<f64>().map(|x| C64::new(x, 0.0)).map_err(|_| Error::BadConfig(format!("bad vector '{spec}'"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(CVec::from_vec(v))
}

#[derive(Serialize)]
struct SupportReport<'a> {
    function: &'a str,
    n: usize,
    c: f64,
    validation: SupportValidation,
    dominance_margin: f64,
    reconstruction_residual: f64,
    reconstruction_error: f64,
    pass: bool,
}

/// `support FUNCTION TUPLE --v VECTOR`: writes the certificate to `--out`.
pub fn cmd_support(function: &str, tuple: &Path, v: &str, samples: usize, cfg: &RunConfig) -> Outcome {
    let tol = cfg.tol;
    let f = match cfg.validate().and_then(|_| lookup(function)) {
        Ok(f) => f,
        Err(e) => return Outcome::fail(exit_code(&e, Stage::Compute), &e),
    };
    let loaded = (|| -> Result<(MatTuple, CVec)> {
        let a = MatrixFile::read(tuple)?.into_tuple(&tol)?;
        let v = parse_vector(v)?;
        let nv = v.norm();
        if !(nv > 0.0) {
            return Err(Error::BadConfig("v must be nonzero".into()));
        }
        Ok((a, v / C64::new(nv, 0.0)))
    })();
    let (a, v) = match loaded {
        Ok(x) => x,
        Err(e) => return Outcome::fail(exit_code(&e, Stage::Load), &e),
    };
    let run = || -> Result<(i32, String)> {
        let interval = if cfg.interval_given {
            cfg.interval
        } else {
            (cfg.interval.0.min(a.min_eig()), cfg.interval.1.max(a.max_eig()))
        };
        let opts = SupportOptions { interval, samples, seed: cfg.seed };
        let cert = support_pencil(&f, &a, &v, &opts, &tol)?;
        let r = reconstruct(&cert, RECONSTRUCTION_TOL, &tol)?;
        let err = reconstruction_error(&f, &cert, &r.value)?;
        if let Some(out) = &cfg.out {
            MatrixFile::certificate(&cert).write(out)?;
        }
        let report = SupportReport {
            function: &cert.function,
            n: cert.dim(),
            c: cert.c,
            validation: cert.validation,
            dominance_margin: cert.pencil.dominance_margin,
            reconstruction_residual: r.residual,
            reconstruction_error: err,
            pass: r.tight && err <= RECONSTRUCTION_TOL,
        };
        let code = if report.pass { EXIT_PASS } else { EXIT_MATH };
        let text = render(cfg.format, &report, || {
            format!(
                "function: {}\nn: {}\nc = tr B0: {:.9}\nsupport margin ({} samples): {:.6e}\ntrace-bound slack: {:.6e}\n\
                 dominance margin: {:.6e}\nreconstruction residual: {:.6e}\nreconstruction error: {:.6e}\npass: {}\n",
                report.function,
                report.n,
                report.c,
                report.validation.samples,
                report.validation.support_margin,
                report.validation.trace_slack,
                report.dominance_margin,
                report.reconstruction_residual,
                report.reconstruction_error,
                report.pass
            )
        })?;
        Ok((code, text))
    };
    match run() {
        Ok((code, text)) => Outcome::ok(code, text),
        Err(e) => Outcome::fail(exit_code(&e, Stage::Compute), &e),
    }
}

#[derive(Serialize)]
struct ReconstructReport {
    function: String,
    #[serde(with = "serial::vector")]
    value: CVec,
    residual: f64,
    /// `||value - F(A) v|| / (1 + ||F(A) v||)` when the function resolves.
    error: Option<f64>,
    pass: bool,
}

/// `reconstruct CERTIFICATE`: writes the reconstructed `F(A) v` (one column).
pub fn cmd_reconstruct(certificate: &Path, cfg: &RunConfig) -> Outcome {
    let tol = cfg.tol;
    let cert = match MatrixFile::read(certificate).and_then(|f| f.into_certificate(&tol)) {
        Ok(c) => c,
        Err(e) => return Outcome::fail(exit_code(&e, Stage::Load), &e),
    };
    let run = || -> Result<(i32, String)> {
        let r = reconstruct(&cert, RECONSTRUCTION_TOL, &tol)?;
        let error = match lookup(&cert.function) {
            Ok(f) => Some(reconstruction_error(&f, &cert, &r.value)?),
            Err(_) => None,
        };
        let pass = r.tight && error.is_none_or(|e| e <= RECONSTRUCTION_TOL);
        if let Some(out) = &cfg.out {
            MatrixFile::matrix(&GenMat::from_column_slice(r.value.len(), 1, r.value.as_slice())).write(out)?;
        }
        let report = ReconstructReport { function: cert.function.clone(), value: r.value, residual: r.residual, error, pass };
        let text = render(cfg.format, &report, || {
            let mut s = format!("function: {}\nresidual: {:.6e}\n", report.function, report.residual);
            if let Some(e) = report.error {
                let _ = writeln!(s, "error against F(A)v: {e:.6e}");
            }
            let _ = writeln!(s, "pass: {}\nvalue:", report.pass);
            for z in report.value.iter() {
                let _ = writeln!(s, "  {}", format_complex(*z));
            }
            s
        })?;
        Ok((if pass { EXIT_PASS } else { EXIT_MATH }, text))
    };
    match run() {
        Ok((code, text)) => Outcome::ok(code, text),
        Err(e) => Outcome::fail(exit_code(&e, Stage::Compute), &e),
    }
}

/// `repeval REPRESENTATION TUPLE [--complex]`.
pub fn cmd_repeval(rep: &Path, tuple: &Path, complex: bool, grid: usize, cfg: &RunConfig) -> Outcome {
    let tol = cfg.tol;
    let loaded = (|| -> Result<(PencilRepresentation, MatrixFile)> {
        Ok((MatrixFile::read(rep)?.into_representation(&tol)?, MatrixFile::read(tuple)?))
    })();
    let (rep, x) = match loaded {
        Ok(v) => v,
        Err(e) => return Outcome::fail(exit_code(&e, Stage::Load), &e),
    };
    let run = || -> Result<String> {
        let value = if complex {
            rep_eval_complex(&rep, &x.into_general_tuple()?, grid, &tol)?
        } else {
            let x = x.into_tuple(&tol).map_err(|e| match e {
                Error::NotHermitian { .. } => Error::BadConfig("non-Hermitian argument; pass --complex".into()),
                other => other,
            })?;
            rep_eval(&rep, &x, &certificate_tolerances(&tol))?.into_mat()
        };
        if let Some(out) = &cfg.out {
            MatrixFile::matrix(&value).write(out)?;
        }
        let doc = MatrixFile::matrix(&value);
        render(cfg.format, &doc, || format_matrix(&value))
    };
    match run() {
        Ok(text) => Outcome::ok(EXIT_PASS, text),
        Err(e) => Outcome::fail(exit_code(&e, Stage::Compute), &e),
    }
}

#[derive(Serialize)]
struct MeanReport {
    mean: String,
    #[serde(with = "serial::mat")]
    value: GenMat,
    iterations: Option<usize>,
    residual: Option<f64>,
}

/// `mean MEAN TUPLE`: weights default to equal weights over the tuple.
pub fn cmd_mean(mean: &str, tuple: &Path, cfg: &RunConfig) -> Outcome {
    let tol = cfg.tol;
    let x = match MatrixFile::read(tuple).and_then(|f| f.into_tuple(&tol)) {
        Ok(x) => x,
        Err(e) => return Outcome::fail(exit_code(&e, Stage::Load), &e),
    };
    let id = if mean.contains(':') || mean == "geometric" { mean.to_string() } else { format!("{mean}:k={}", x.arity()) };
    let run = || -> Result<MeanReport> {
        let (family, w, t) = mean_params(&id)?;
        let lo = x.min_eig();
        if lo <= 0.0 {
            return Err(Error::NotPositiveDefinite { min_eig: lo });
        }
        let (value, iterations, residual) = match family.as_str() {
            "karcher" => {
                x.ensure_arity(w.len())?;
                let o = karcher_mean_value(&w, &x, &tol)?;
                (o.value, Some(o.iterations), Some(o.residual))
            }
            "power" => {
                x.ensure_arity(w.len())?;
                let o = power_mean_value(t.unwrap_or(1.0), &w, &x)?;
                (o.value, Some(o.iterations), Some(o.residual))
            }
            _ => (lookup(&id)?.eval(&x)?, None, None),
        };
        Ok(MeanReport { mean: id.clone(), value: value.into_mat(), iterations, residual })
    };
    match run() {
        Ok(report) => {
            let written = match &cfg.out {
                Some(out) => MatrixFile::matrix(&report.value).write(out),
                None => Ok(()),
            };
            let text = written.and_then(|_| {
                render(cfg.format, &report, || {
                    let mut s = format!("mean: {}\n", report.mean);
                    if let (Some(i), Some(r)) = (report.iterations, report.residual) {
                        let _ = writeln!(s, "iterations: {i}\nresidual: {r:.6e}");
                    }
                    s + &format_matrix(&report.value)
                })
            });
            match text {
                Ok(text) => Outcome::ok(EXIT_PASS, text),
                Err(e) => Outcome::fail(exit_code(&e, Stage::Compute), &e),
            }
        }
        Err(e @ Error::NotPositiveDefinite { .. }) => Outcome::fail(EXIT_DATA, &e),
        Err(e) => Outcome::fail(exit_code(&e, Stage::Compute), &e),
    }
}

#[derive(Serialize)]
struct QuadrepReport {
    function: String,
    nodes: usize,
    interval: (f64, f64),
    dim: usize,
    max_rel_error: f64,
}

/// `quadrep FUNCTION`: quadrature representation written to `--out`.
pub fn cmd_quadrep(function: &str, nodes: usize, rel_tol: f64, cfg: &RunConfig) -> Outcome {
    let tol = cfg.tol;
    let run = || -> Result<String> {
        cfg.validate()?;
        let f = lookup(function)?;
        let rep = rep_from_quadrature(&f, nodes, cfg.interval, rel_tol, &tol)?;
        let kind = crate::represent::LownerIntegral::from_fn(&f)?;
        let rule = crate::represent::quadrature_rule(kind, nodes, cfg.interval, rel_tol)?;
        let err = rule.max_rel_error(|x| kind.scalar(x), cfg.interval, crate::represent::QUADRATURE_GRID);
        if let Some(out) = &cfg.out {
            MatrixFile::representation(&rep).write(out)?;
        }
        let report = QuadrepReport {
            function: function.to_string(),
            nodes,
            interval: cfg.interval,
            dim: rep.pencil.dim(),
            max_rel_error: err,
        };
        render(cfg.format, &report, || {
            format!(
                "function: {}\nnodes: {}\ninterval: [{}, {}]\ncoefficient dimension: {}\nmax relative error: {:.6e}\n",
                report.function, report.nodes, report.interval.0, report.interval.1, report.dim, report.max_rel_error
            )
        })
    };
    match run() {
        Ok(text) => Outcome::ok(EXIT_PASS, text),
        Err(e) => Outcome::fail(exit_code(&e, Stage::Compute), &e),
    }
}

fn format_complex(z: C64) -> String {
    if z.im == 0.0 {
        format!("{:.9}", z.re)
    } else {
        format!("{:.9}{:+.9}i", z.re, z.im)
    }
}

fn format_matrix(m: &GenMat) -> String {
    let mut s = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format_complex(m[(i, j)])).collect();
        let _ = writeln!(s, "  [{}]", row.join(", "));
    }
    s
}

fn parse_interval(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected c1,c2")?;
    let a: f64 = a.trim().parse().map_err(|_| format!("bad c1 '{a}'"))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("bad c2 '{b}'"))?;
    Ok((a, b))
}

#[derive(Parser, Debug)]
#[command(name = "loewner", version, about = "Loewner-order certification, Schur complements and pencil representations")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub struct GlobalArgs {
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Order tolerance: sets tau_psd and tau_herm.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, global = true, default_value_t = 2)]
    pub n: usize,
    /// Spectral interval `c1,c2` [default: 0.5,2; `support` widens it to
    /// cover the base point].
    #[arg(long, global = true, value_parser = parse_interval)]
    pub interval: Option<(f64, f64)>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Randomized certification of a catalogue function.
    Check { function: String, #[arg(value_enum)] property: CheckProperty },
    /// Shorted operator, Schur complement or sector bound of a matrix file.
    Schur {
        input: PathBuf,
        /// Comma-separated indices or a basis matrix file.
        #[arg(long)]
        pivot: String,
        /// Shorted operator of a PSD matrix (default).
        #[arg(long, group = "mode")]
        psd: bool,
        /// Block elimination of a general matrix.
        #[arg(long, group = "mode")]
        generic: bool,
        /// Sector bound report for a sectorial matrix.
        #[arg(long, group = "mode")]
        sector_bound: bool,
        /// Keep the complement of the pivot instead.
        #[arg(long)]
        complement: bool,
    },
    /// Evaluates a pencil file at a tuple file.
    PencilEval {
        pencil: PathBuf,
        tuple: PathBuf,
        /// Use `B_0 (x) I + sum B_i (x) (X_i - I)`.
        #[arg(long)]
        shifted: bool,
    },
    /// Supporting pencil of a catalogue function at a base point.
    Support {
        function: String,
        tuple: PathBuf,
        /// Comma-separated real entries or a one-column matrix file.
        #[arg(long)]
        v: String,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Reconstructs F(A) v from a certificate file.
    Reconstruct { certificate: PathBuf },
    /// Evaluates a representation file.
    Repeval {
        representation: PathBuf,
        tuple: PathBuf,
        /// Arguments in the right or upper half plane.
        #[arg(long)]
        complex: bool,
        #[arg(long, default_value_t = crate::matcore::DEFAULT_SECTOR_GRID)]
        grid: usize,
    },
    /// Matrix mean of a tuple file.
    Mean { mean: String, tuple: PathBuf },
    /// Quadrature pencil representation of sqrt, log1p or pow:p=...
    Quadrep {
        function: String,
        #[arg(long, default_value_t = DEFAULT_NODES)]
        nodes: usize,
        #[arg(long, default_value_t = 1e-3)]
        rel_tol: f64,
    },
}

impl GlobalArgs {
    pub fn config(&self) -> RunConfig {
        let mut tol = Tolerances::default();
        if let Some(t) = self.tol {
            tol.psd = t;
            tol.herm = t;
        }
        RunConfig {
            seed: self.seed,
            tol,
            trials: self.trials,
            n: self.n,
            interval: self.interval.unwrap_or(RunConfig::default().interval),
            interval_given: self.interval.is_some(),
            format: self.format,
            out: self.out.clone(),
        }
    }
}

pub fn dispatch(cli: &Cli) -> Outcome {
    let cfg = cli.global.config();
    if let Some(t) = cli.global.tol {
        if !(t >= 0.0 && t.is_finite()) {
            return Outcome::fail(EXIT_USAGE, &Error::BadConfig("tolerance must be nonnegative".into()));
        }
    }
    match &cli.command {
        Command::Check { function, property } => cmd_check(function, *property, &cfg),
        Command::Schur { input, pivot, psd: _, generic, sector_bound, complement } => {
            let mode = if *generic {
                SchurMode::Generic
            } else if *sector_bound {
                SchurMode::SectorBound
            } else {
                SchurMode::Psd
            };
            cmd_schur(input, pivot, mode, *complement, &cfg)
        }
        Command::PencilEval { pencil, tuple, shifted } => cmd_pencil_eval(pencil, tuple, *shifted, &cfg),
        Command::Support { function, tuple, v, samples } => cmd_support(function, tuple, v, *samples, &cfg),
        Command::Reconstruct { certificate } => cmd_reconstruct(certificate, &cfg),
        Command::Repeval { representation, tuple, complex, grid } => cmd_repeval(representation, tuple, *complex, *grid, &cfg),
        Command::Mean { mean, tuple } => cmd_mean(mean, tuple, &cfg),
        Command::Quadrep { function, nodes, rel_tol } => cmd_quadrep(function, *nodes, *rel_tol, &cfg),
    }
}

/// Parses arguments and runs; usage errors exit with 64.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => dispatch(&cli),
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            if code == EXIT_PASS {
                Outcome::ok(code, text)
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            }
        }
    }
}
