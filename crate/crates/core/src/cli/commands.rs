use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;

use super::{CliError, Command, RunConfig, SCHEMA};
use crate::grid::GridFunction;
use crate::hilbert::{self, DiagonalizabilityReport, SubspacePoint};
use crate::modes::{self, Basis, BasisAnomaly, Mode};
use crate::potential::{resolve_potential, PotentialExpr};
use crate::shooting::{ScanPoint, Shooter};
use crate::spectrum::{spectrum_from_scan, SpectrumReport};

/// Files written plus any failure that should set the exit code after the
/// partial output has been saved.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
    pub failure: Option<CliError>,
}

impl Outcome {
    fn fail(&mut self, e: CliError) {
        let worse = self
            .failure
            .as_ref()
            .is_none_or(|f| e.exit_code() > f.exit_code());
        if worse {
            self.failure = Some(e);
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a RunConfig,
    #[serde(flatten)]
    body: &'a T,
}

struct Writer<'a> {
    cfg: &'a RunConfig,
    command: &'a str,
    json: bool,
    csv: bool,
}

impl Writer<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.cfg.out.join(name)
    }

    fn write(&self, out: &mut Outcome, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.path(name);
        fs::write(&path, text).map_err(|source| CliError::Io {
            context: format!("writing {}", path.display()),
            source,
        })?;
        out.files.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&self, out: &mut Outcome, name: &str, body: &T) -> Result<(), CliError> {
        if !self.json {
            return Ok(());
        }
        let env = Envelope {
            schema: SCHEMA,
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            config: self.cfg,
            body,
        };
        let mut text = serde_json::to_string_pretty(&env).expect("report types serialize");
        text.push('\n');
        self.write(out, name, &text)
    }

    fn csv(&self, out: &mut Outcome, name: &str, text: &str) -> Result<(), CliError> {
        if !self.csv {
            return Ok(());
        }
        self.write(out, name, text)
    }
}

fn grid_csv(f: &GridFunction, column: &str) -> String {
    let mut s = format!("x,re_{column},im_{column}\n");
    for (j, v) in f.values.iter().enumerate() {
        let _ = writeln!(s, "{:?},{:?},{:?}", f.grid.x(j), v.re, v.im);
    }
    s
}

/// Exported file name, or `None` when CSV output is off.
fn csv_name(w: &Writer<'_>, name: String) -> Option<String> {
    w.csv.then_some(name)
}

struct Session<'p> {
    cfg: &'p RunConfig,
    shooter: Shooter<'p>,
}

impl<'p> Session<'p> {
    fn scan(&self) -> Result<Vec<ScanPoint>, CliError> {
        Ok(self.shooter.scan(self.cfg.kmin, self.cfg.kmax, self.cfg.n_scan)?)
    }

    fn spectrum(&self, scan: &[ScanPoint]) -> SpectrumReport {
        spectrum_from_scan(&self.shooter, scan, self.cfg.kmin, self.cfg.kmax, self.cfg.tol)
    }

    fn basis(&self, spectrum: &SpectrumReport) -> Result<Basis, CliError> {
        Ok(modes::build_xi_basis(&self.shooter, spectrum, usize::MAX)?)
    }

    fn potential_grid(&self) -> GridFunction {
        self.shooter.integrator().potential_on_grid()
    }
}

#[derive(Serialize)]
struct ScanBody {
    points: usize,
    failures: usize,
    max_abs_d: f64,
    sign_changes: usize,
    warnings: Vec<String>,
}

fn scan_output(w: &Writer<'_>, out: &mut Outcome, scan: &[ScanPoint]) -> Result<ScanBody, CliError> {
    let mut csv = String::from("k,re_D,im_D,re_Dprime,im_Dprime\n");
    let mut warnings = Vec::new();
    for p in scan {
        match &p.value {
            Ok(v) => {
                let _ = writeln!(
                    csv,
                    "{:?},{:?},{:?},{:?},{:?}",
                    p.k, v.d.re, v.d.im, v.dprime.re, v.dprime.im
                );
            }
            Err(e) => {
                let _ = writeln!(csv, "{:?},NaN,NaN,NaN,NaN", p.k);
                warnings.push(format!("k = {}: {e}", p.k));
            }
        }
    }
    let ds: Vec<f64> = scan.iter().filter_map(|p| p.d()).map(|d| d.re).collect();
    let body = ScanBody {
        points: scan.len(),
        failures: scan.iter().filter(|p| p.value.is_err()).count(),
        max_abs_d: scan
            .iter()
            .filter_map(|p| p.d())
            .map(|d| d.norm())
            .fold(0.0, f64::max),
        sign_changes: ds.windows(2).filter(|w| w[0] * w[1] < 0.0).count(),
        warnings,
    };
    w.csv(out, "scan.csv", &csv)?;
    w.json(out, "scan.json", &body)?;
    if let Some(e) = scan.iter().find_map(|p| p.value.as_ref().err()) {
        out.fail(CliError::Numeric(e.clone()));
    }
    Ok(body)
}

#[derive(Serialize)]
struct SpectrumBody<'a> {
    spectrum: &'a SpectrumReport,
    diagonalizability: &'a DiagonalizabilityReport,
}

fn spectrum_output(
    w: &Writer<'_>,
    out: &mut Outcome,
    spectrum: &SpectrumReport,
    diag: &DiagonalizabilityReport,
) -> Result<(), CliError> {
    let mut csv = String::from("k,energy,multiplicity,abs_D,abs_Dprime\n");
    for r in &spectrum.roots {
        let _ = writeln!(
            csv,
            "{:?},{:?},{},{:?},{:?}",
            r.k, r.energy, r.multiplicity, r.residuals.d_abs, r.residuals.dprime_abs
        );
    }
    w.csv(out, "spectrum.csv", &csv)?;
    w.json(
        out,
        "spectrum.json",
        &SpectrumBody {
            spectrum,
            diagonalizability: diag,
        },
    )
}

#[derive(Serialize)]
struct ModeEntry {
    root: usize,
    k: f64,
    energy: f64,
    multiplicity: usize,
    chain_index: usize,
    /// `int f (PT f) dx`.
    pt_norm: Complex64,
    /// `int f^2 dx`.
    bilinear_norm: Complex64,
    l2_norm_sqr: f64,
    zero_norm: bool,
    parity: Complex64,
    parity_residual: f64,
    endpoint_residual: f64,
    /// Eigen-equation residual, or the chain residual for associated functions.
    equation_residual: f64,
    file: Option<String>,
}

#[derive(Serialize)]
struct ModesBody {
    modes: Vec<ModeEntry>,
    /// Sign of `Re pt_norm` per eigenfunction in k order, 0 for a vanishing norm.
    pt_norm_signs: Vec<i8>,
    /// Whether `sign_j = (-1)^j sign_0` holds along the whole list.
    pt_norm_signs_alternate: bool,
    warnings: Vec<String>,
}

fn mode_entry(m: &Mode, root: usize, eq_residual: f64, file: Option<String>) -> Result<ModeEntry, CliError> {
    let norm = modes::pt_norm(&m.function)?;
    let parity = modes::pt_parity(&m.function)?;
    Ok(ModeEntry {
        root,
        k: m.k,
        energy: m.energy,
        multiplicity: m.multiplicity,
        chain_index: m.chain_index,
        pt_norm: norm.pt,
        bilinear_norm: norm.bilinear,
        l2_norm_sqr: norm.l2_sqr,
        zero_norm: norm.is_zero(),
        parity: parity.lambda,
        parity_residual: parity.residual,
        endpoint_residual: m.endpoint_residual(),
        equation_residual: eq_residual,
        file,
    })
}

fn modes_output(
    w: &Writer<'_>,
    out: &mut Outcome,
    session: &Session<'_>,
    spectrum: &SpectrumReport,
) -> Result<ModesBody, CliError> {
    let vg = session.potential_grid();
    let mut entries = Vec::new();
    let mut warnings = Vec::new();
    for (i, r) in spectrum.roots.iter().enumerate() {
        let root = i + 1;
        let eigen = match modes::eigenmode(&session.shooter, r.k) {
            Ok(m) => m,
            Err(e) => {
                warnings.push(format!("k = {}: {e}", r.k));
                out.fail(e.into());
                continue;
            }
        };
        let name = csv_name(w, format!("mode_{root:02}_eigen.csv"));
        if let Some(n) = &name {
            w.csv(out, n, &grid_csv(&eigen.function, "psi"))?;
        }
        entries.push(mode_entry(&eigen, root, eigen.eigen_residual(&vg)?, name)?);
        if r.multiplicity >= 2 {
            match modes::associated_mode(&session.shooter, r.k) {
                Ok(a) => {
                    let name = csv_name(w, format!("mode_{root:02}_assoc.csv"));
                    if let Some(n) = &name {
                        w.csv(out, n, &grid_csv(&a.function, "psi"))?;
                    }
                    let res = a.chain_residual(&eigen.function, &vg)?;
                    entries.push(mode_entry(&a, root, res, name)?);
                }
                Err(e) => {
                    warnings.push(format!("k = {}: {e}", r.k));
                    out.fail(e.into());
                }
            }
        }
    }
    let pt_norm_signs: Vec<i8> = entries
        .iter()
        .filter(|e| e.chain_index == 0)
        .map(|e| match (e.zero_norm, e.pt_norm.re >= 0.0) {
            (true, _) => 0,
            (false, true) => 1,
            (false, false) => -1,
        })
        .collect();
    let pt_norm_signs_alternate = pt_norm_signs
        .iter()
        .enumerate()
        .all(|(j, s)| *s != 0 && *s == pt_norm_signs[0] * if j % 2 == 0 { 1 } else { -1 });
    out.warnings.extend(warnings.iter().cloned());
    let body = ModesBody {
        modes: entries,
        pt_norm_signs,
        pt_norm_signs_alternate,
        warnings,
    };
    w.json(out, "norms.json", &body)?;
    Ok(body)
}

#[derive(Serialize)]
struct MemberEntry {
    label: usize,
    k: f64,
    energy: f64,
    multiplicity: usize,
    chain_index: usize,
    parity: Complex64,
    parity_residual: f64,
    eigen_residual: f64,
    squared_residual: f64,
    file: Option<String>,
}

#[derive(Serialize)]
struct BasisBody<'a> {
    members: Vec<MemberEntry>,
    gram: &'a [Vec<Complex64>],
    gram_max_offdiag: f64,
    gram_max_identity_deviation: f64,
    anomalies: &'a [BasisAnomaly],
    complete: bool,
}

fn basis_output<'a>(
    w: &Writer<'_>,
    out: &mut Outcome,
    session: &Session<'_>,
    basis: &'a Basis,
) -> Result<BasisBody<'a>, CliError> {
    let vg = session.potential_grid();
    let mut members = Vec::new();
    for ((m, label), p) in basis.members.iter().zip(&basis.labels).zip(&basis.parities) {
        let name = csv_name(w, format!("xi_{label:02}.csv"));
        if let Some(n) = &name {
            w.csv(out, n, &grid_csv(&m.function, "xi"))?;
        }
        members.push(MemberEntry {
            label: *label,
            k: m.k,
            energy: m.energy,
            multiplicity: m.multiplicity,
            chain_index: m.chain_index,
            parity: p.lambda,
            parity_residual: p.residual,
            eigen_residual: m.eigen_residual(&vg)?,
            squared_residual: m.squared_residual(&vg)?,
            file: name,
        });
    }
    let complete = basis.require_complete();
    let body = BasisBody {
        members,
        gram: &basis.gram,
        gram_max_offdiag: basis.gram_max_offdiag(),
        gram_max_identity_deviation: basis.gram_max_identity_deviation(),
        anomalies: &basis.anomalies,
        complete: complete.is_ok(),
    };
    w.json(out, "basis.json", &body)?;
    if let Err(e) = complete {
        out.fail(e.into());
    }
    Ok(body)
}

#[derive(Serialize)]
struct Curves {
    members: usize,
    /// Error after the first `N` members in label order.
    by_label: Vec<f64>,
    /// Error after each complete root subspace, in increasing k.
    by_subspace: Vec<SubspacePoint>,
}

#[derive(Serialize)]
struct CompletenessRow {
    function: String,
    full: Curves,
    without_associated: Curves,
}

#[derive(Serialize)]
struct CompletenessBody {
    rows: Vec<CompletenessRow>,
}

fn curves(f: &GridFunction, basis: &Basis) -> Result<Curves, CliError> {
    Ok(Curves {
        members: basis.len(),
        by_label: hilbert::reconstruction_curve(f, basis)?,
        by_subspace: hilbert::subspace_curve(f, basis)?,
    })
}

fn completeness_output(
    w: &Writer<'_>,
    out: &mut Outcome,
    basis: &Basis,
) -> Result<Option<CompletenessBody>, CliError> {
    if basis.is_empty() {
        out.fail(CliError::Structural("empty basis: no roots in the window".into()));
        return Ok(None);
    }
    let reduced = basis.without_associated();
    let grid = basis.members[0].function.grid;
    let mut rows = Vec::new();
    let mut csv = String::from("function,basis,n,error\n");
    for (name, f) in hilbert::test_functions(grid) {
        let row = CompletenessRow {
            full: curves(&f, basis)?,
            without_associated: curves(&f, &reduced)?,
            function: name,
        };
        for (tag, c) in [("full", &row.full), ("without_associated", &row.without_associated)] {
            for (n, e) in c.by_label.iter().enumerate() {
                let _ = writeln!(csv, "{},{tag},{},{e:?}", row.function, n + 1);
            }
        }
        rows.push(row);
    }
    w.csv(out, "completeness.csv", &csv)?;
    let body = CompletenessBody { rows };
    w.json(out, "completeness.json", &body)?;
    Ok(Some(body))
}

#[derive(Serialize)]
struct ReportBody<'a> {
    scan: ScanBody,
    spectrum: &'a SpectrumReport,
    diagonalizability: &'a DiagonalizabilityReport,
    modes: ModesBody,
    basis: Option<BasisBody<'a>>,
    completeness: Option<CompletenessBody>,
    files: Vec<String>,
}

fn diagnose(spectrum: &SpectrumReport, basis: &Result<Basis, CliError>) -> DiagonalizabilityReport {
    match basis {
        Ok(b) => hilbert::diagonalizability_report(spectrum, b),
        Err(e) => {
            let empty = Basis {
                members: Vec::new(),
                labels: Vec::new(),
                parities: Vec::new(),
                gram: Vec::new(),
                anomalies: vec![BasisAnomaly::Failed {
                    k: f64::NAN,
                    message: e.to_string(),
                }],
            };
            hilbert::diagonalizability_report(spectrum, &empty)
        }
    }
}

fn relative(files: &[PathBuf], dir: &Path) -> Vec<String> {
    files
        .iter()
        .map(|p| p.strip_prefix(dir).unwrap_or(p).display().to_string())
        .collect()
}

/// Runs one subcommand, writing into `cfg.out`.
pub fn run(command: &Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let potential: PotentialExpr = resolve_potential(&cfg.potential)?;
    let session = Session {
        cfg,
        shooter: Shooter::new(&potential, cfg.tol, cfg.n_nodes)?,
    };
    fs::create_dir_all(&cfg.out).map_err(|source| CliError::Io {
        context: format!("creating {}", cfg.out.display()),
        source,
    })?;
    let (json, csv) = cfg.formats();
    let w = Writer {
        cfg,
        command: command.name(),
        json,
        csv,
    };
    let mut out = Outcome::default();

    let scan = session.scan()?;
    if let Command::Scan(_) = command {
        scan_output(&w, &mut out, &scan)?;
        return Ok(out);
    }
    let spectrum = session.spectrum(&scan);
    out.warnings.extend(spectrum.warnings.iter().cloned());
    if spectrum.scan_failures > 0 {
        if let Some(e) = scan.iter().find_map(|p| p.value.as_ref().err()) {
            out.fail(CliError::Numeric(e.clone()));
        }
    }
    let basis = session.basis(&spectrum);
    match command {
        Command::Scan(_) => unreachable!("handled above"),
        Command::Spectrum(_) => {
            let diag = diagnose(&spectrum, &basis);
            spectrum_output(&w, &mut out, &spectrum, &diag)?;
        }
        Command::Modes(_) => {
            modes_output(&w, &mut out, &session, &spectrum)?;
        }
        Command::Basis(_) => {
            basis_output(&w, &mut out, &session, &basis?)?;
        }
        Command::Completeness(_) => {
            completeness_output(&w, &mut out, &basis?)?;
        }
        Command::Report(_) => {
            let diag = diagnose(&spectrum, &basis);
            let scan_body = scan_output(&w, &mut out, &scan)?;
            spectrum_output(&w, &mut out, &spectrum, &diag)?;
            let modes_body = modes_output(&w, &mut out, &session, &spectrum)?;
            let (basis_body, completeness_body) = match &basis {
                Ok(b) => (
                    Some(basis_output(&w, &mut out, &session, b)?),
                    completeness_output(&w, &mut out, b)?,
                ),
                Err(e) => {
                    out.fail(CliError::Structural(e.to_string()));
                    (None, None)
                }
            };
            let files = relative(&out.files, &cfg.out);
            w.json(
                &mut out,
                "report.json",
                &ReportBody {
                    scan: scan_body,
                    spectrum: &spectrum,
                    diagonalizability: &diag,
                    modes: modes_body,
                    basis: basis_body,
                    completeness: completeness_body,
                    files,
                },
            )?;
        }
    }
    Ok(out)
}
