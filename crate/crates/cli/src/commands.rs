use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use argwind::argument::{change_of_argument, ArgumentError, WindingReport};
use argwind::boundary::{BoundaryError, BoundaryFunction};
use argwind::expr::{Expr, ExprError};
use argwind::extend::{verify_certificate, Analyzer, ExtendError, ExtendParams, Verdict};
use argwind::geometry::{BoundarySampling, CircleDomain, GeometryError, Orientation};
use argwind::harmonic::HarmonicError;
use argwind::io::{self, IoError};
use thiserror::Error;

use crate::Common;

#[derive(Debug, Error)]
pub enum Failure {
    /// Bad flags, files or expressions.
    #[error("{0}")]
    Input(String),
    /// The computation ran but could not reach a decision or certificate.
    #[error("{0}")]
    Analysis(String),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            Failure::Input(_) => ExitCode::from(2),
            Failure::Analysis(_) => ExitCode::from(1),
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<ExprError> for Failure {
    fn from(e: ExprError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<GeometryError> for Failure {
    fn from(e: GeometryError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<BoundaryError> for Failure {
    fn from(e: BoundaryError) -> Self {
        match e {
            BoundaryError::PoleOnBoundary { .. }
            | BoundaryError::NonFinite { .. }
            | BoundaryError::Geometry(_) => Failure::Input(e.to_string()),
            _ => Failure::Analysis(e.to_string()),
        }
    }
}

impl From<HarmonicError> for Failure {
    fn from(e: HarmonicError) -> Self {
        match e {
            HarmonicError::DegreeTooSmall { .. } | HarmonicError::TooFewSamples { .. } => {
                Failure::Input(e.to_string())
            }
            HarmonicError::ResidualTooLarge { .. } => {
                Failure::Analysis(format!("{e}; try a larger --degree or smoother data"))
            }
            _ => Failure::Analysis(e.to_string()),
        }
    }
}

impl From<ArgumentError> for Failure {
    fn from(e: ArgumentError) -> Self {
        Failure::Analysis(e.to_string())
    }
}

impl From<ExtendError> for Failure {
    fn from(e: ExtendError) -> Self {
        match e {
            ExtendError::Harmonic(h) => h.into(),
            ExtendError::Boundary(b) => b.into(),
            ExtendError::Geometry(g) => g.into(),
            ExtendError::Argument(a) => a.into(),
            other => Failure::Analysis(other.to_string()),
        }
    }
}

type CmdResult = Result<ExitCode, Failure>;

fn load_domain(common: &Common) -> Result<CircleDomain, Failure> {
    let path = common
        .domain
        .as_deref()
        .ok_or_else(|| Failure::Input("--domain is required".into()))?;
    Ok(io::read_domain(path)?)
}

fn parse_expr(src: &str) -> Result<Expr, Failure> {
    Ok(Expr::parse(src)?)
}

/// `f` from `--f` (sampled with `--samples`) or `--f-samples`.
fn load_f(common: &Common, domain: &CircleDomain) -> Result<(BoundaryFunction, String), Failure> {
    match (&common.f, &common.f_samples) {
        (Some(src), _) => {
            let sampling = domain.sampling(common.samples)?;
            let expr = parse_expr(src)?;
            Ok((BoundaryFunction::from_expr(&expr, sampling)?, expr.to_string()))
        }
        (None, Some(path)) => {
            Ok((io::read_samples_file(path, domain)?, path.display().to_string()))
        }
        (None, None) => Err(Failure::Input("one of --f or --f-samples is required".into())),
    }
}

fn on_sampling(f: BoundaryFunction, sampling: &Arc<BoundarySampling>) -> Result<BoundaryFunction, Failure> {
    if f.sampling().is_compatible(sampling) {
        return Ok(f);
    }
    match f.resample(sampling.samples_per_circle()) {
        Some(r) => Ok(r?),
        None => Err(Failure::Input(format!(
            "sample file has {} samples per circle, expected {}",
            f.sampling().samples_per_circle(),
            sampling.samples_per_circle()
        ))),
    }
}

fn params(common: &Common) -> Result<ExtendParams, Failure> {
    if !(common.tol > 0.0) {
        return Err(Failure::Input(format!("--tol must be positive, got {}", common.tol)));
    }
    Ok(ExtendParams {
        degree: common.degree,
        grid: common.grid,
        tol: common.tol,
        cutoffs: common.cutoffs.clone(),
        ..ExtendParams::default()
    })
}

fn out_path(common: &Common, name: &str) -> Result<Option<PathBuf>, Failure> {
    let Some(dir) = &common.out else {
        return Ok(None);
    };
    fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
    Ok(Some(dir.join(name)))
}

fn write_with<F>(path: &Path, write: F) -> Result<(), Failure>
where
    F: FnOnce(&mut fs::File) -> Result<(), IoError>,
{
    let mut file = fs::File::create(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    write(&mut file)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn fmt_c(z: argwind::Complex64) -> String {
    format!("({}, {})", z.re, z.im)
}

pub fn validate(common: &Common) -> CmdResult {
    let domain = load_domain(common)?;
    let holes = domain.holes().len();
    println!("circles: {} ({} hole{})", domain.circle_count(), holes, if holes == 1 { "" } else { "s" });
    for (k, c) in domain.circles().enumerate() {
        let role = if k + 1 == domain.circle_count() { "outer" } else { "hole" };
        let orientation = match domain.orientation(k) {
            Orientation::Counterclockwise => "counterclockwise",
            Orientation::Clockwise => "clockwise",
        };
        println!("circle {k}: {role} center {} radius {} {orientation}", fmt_c(c.center), c.radius);
    }
    println!("separation: {}", domain.separation());
    Ok(ExitCode::SUCCESS)
}

pub fn detect(common: &Common) -> CmdResult {
    let domain = load_domain(common)?;
    let (f, _) = load_f(common, &domain)?;
    let analyzer = Analyzer::new(f.sampling().clone(), params(common)?)?;
    let report = analyzer.detect_extendibility(&f)?;
    println!("verdict: {}", report.verdict);
    println!(
        "defect: {:e} (antiholomorphic {:e}, logarithmic {:e}; tolerance {:e})",
        report.defect, report.antiholo_defect, report.log_defect, report.tol
    );
    println!("fit residual: {:e}", report.fit_residual);
    println!(
        "max |A|: {:e} at {} over {} grid points",
        report.max_abs_a,
        fmt_c(report.argmax_a),
        report.grid_points
    );
    if let Some(path) = out_path(common, "detect.json")? {
        io::write_json(&path, &report)?;
        println!("wrote {}", path.display());
        let h = analyzer.solver().solve(&f)?;
        let path = path.with_file_name("coefficients.csv");
        write_with(&path, |w| io::write_coefficients_csv(w, &h))?;
    }
    Ok(match report.verdict {
        Verdict::Inconclusive => ExitCode::from(1),
        _ => ExitCode::SUCCESS,
    })
}

fn print_winding(report: &WindingReport) {
    for c in &report.per_circle {
        println!("circle {}: {} rad, {} turns", c.circle, c.radians, c.turns);
    }
    println!(
        "total: {} rad, {} turns (integrality defect {:e})",
        report.total, report.total_turns, report.integrality_defect
    );
    println!(
        "min modulus: {:e}; samples per circle: {}; refinements: {}",
        report.min_modulus, report.samples_per_circle, report.refinement_depth
    );
}

pub fn witness(common: &Common) -> CmdResult {
    let domain = load_domain(common)?;
    let (f, label) = load_f(common, &domain)?;
    let analyzer = Analyzer::new(f.sampling().clone(), params(common)?)?;
    let mut cert = analyzer.construct_witness(&f)?;
    cert.function = Some(label);
    println!("base point: {}", fmt_c(cert.base_point));
    println!("rotation: {}", cert.rotation);
    let betas: Vec<String> = cert.betas.iter().map(|b| b.to_string()).collect();
    println!("beta: [{}]", betas.join(", "));
    println!("epsilon: {:e}; cutoff: {}", cert.epsilon, cert.cutoff);
    print_winding(&cert.winding);
    if let Some(path) = out_path(common, "certificate.json")? {
        io::write_certificate(&path, &cert)?;
        println!("wrote {}", path.display());
        let g = cert.g_boundary(f.sampling().clone()).map_err(Failure::from)?;
        let sum = f.add(&g)?;
        write_with(&path.with_file_name("winding.csv"), |w| io::write_phase_csv(w, &sum))?;
    }
    Ok(ExitCode::SUCCESS)
}

pub fn verify(common: &Common, g: Option<&str>, certificate: Option<&Path>) -> CmdResult {
    let (report, stored) = match (g, certificate) {
        (_, Some(path)) => {
            let cert = io::read_certificate(path)?;
            if let Some(domain_path) = &common.domain {
                if io::read_domain(domain_path)? != cert.domain {
                    return Err(Failure::Input(format!(
                        "{} does not describe the certificate's domain",
                        domain_path.display()
                    )));
                }
            }
            let sampling = cert.sampling()?;
            let (f, _) = load_f(common, &cert.domain)?;
            let f = on_sampling(f, &sampling)?;
            (cert.recheck(&f)?, Some(cert.winding))
        }
        (Some(src), None) => {
            let domain = load_domain(common)?;
            let (f, _) = load_f(common, &domain)?;
            let expr = parse_expr(src)?;
            if !expr.is_holomorphic() {
                log::warn!("g = {expr} is not holomorphic; the winding says nothing about f");
            }
            let g = BoundaryFunction::from_expr(&expr, f.sampling().clone())?;
            (verify_certificate(&f, &g)?, None)
        }
        (None, None) => return Err(Failure::Input("one of --g or --certificate is required".into())),
    };
    print_winding(&report);
    if report.total_turns < 0 {
        println!("f + g winds negatively: f does not extend holomorphically");
    }
    if let Some(path) = out_path(common, "verify.json")? {
        io::write_json(&path, &report)?;
        println!("wrote {}", path.display());
    }
    match stored {
        Some(s) if s == report => {
            println!("stored winding report: identical");
            Ok(ExitCode::SUCCESS)
        }
        Some(_) => Err(Failure::Analysis("recomputed winding differs from the stored report".into())),
        None => Ok(ExitCode::SUCCESS),
    }
}

pub fn winding(common: &Common) -> CmdResult {
    let domain = load_domain(common)?;
    let (f, _) = load_f(common, &domain)?;
    let report = change_of_argument(&f)?;
    print_winding(&report);
    if let Some(path) = out_path(common, "winding.json")? {
        io::write_json(&path, &report)?;
        println!("wrote {}", path.display());
        write_with(&path.with_file_name("winding.csv"), |w| io::write_phase_csv(w, &f))?;
    }
    Ok(ExitCode::SUCCESS)
}
