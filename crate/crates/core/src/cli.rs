//! Command-line front end. `run` returns the process exit code:
//! 0 on success, 2 for rejected input, 3 for numerical failures.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::elliptic::Lattice;
use crate::error::Error;
use crate::finite_gap::{spectral_poly_m0, spectral_poly_m1r2, treibich_b1_roots};
use crate::fuchsian::FuchsianData;
use crate::hk::{hk_data, Branch, IntegralSolution};
use crate::painleve::{
    default_step, hitchin_b1, kappas, l01_b1, l01_degenerate, riccati_b1, t_lambda, verify_p6, verify_p6_elliptic,
    Degenerate,
};
use crate::xi::{build_xi, q_report, terms, Term, XiOptions, DEFAULT_SEED};

type C = Complex64;

/// A complex number written as `re,im`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CArg(pub C);

impl FromStr for CArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let num = |t: &str| t.parse::<f64>().map_err(|_| format!("'{s}' is not a complex number re,im"));
        let z = match parts.as_slice() {
            [re] => C::new(num(re)?, 0.0),
            [re, im] => C::new(num(re)?, num(im)?),
            _ => return Err(format!("'{s}' is not a complex number re,im")),
        };
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(format!("'{s}' is not finite"));
        }
        Ok(CArg(z))
    }
}

impl Serialize for CArg {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

/// Four non-negative integers `l0,l1,l2,l3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LArg(pub [u32; 4]);

impl FromStr for LArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let v: Vec<u32> = s
            .split(',')
            .map(|t| t.trim().parse::<u32>().map_err(|_| format!("'{s}' is not a list of four non-negative integers")))
            .collect::<Result<_, _>>()?;
        let arr: [u32; 4] = v.try_into().map_err(|_| format!("'{s}' must have exactly four entries"))?;
        Ok(LArg(arr))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser, Serialize)]
#[command(name = "heunhk", version, about = "Hermite-Krichever solutions, Painleve VI and finite-gap spectra")]
pub struct Cli {
    /// Collocation seed (HEUNHK_SEED takes precedence).
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<String>,
    /// Worker threads; computations are sequential, so only 1 is accepted.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Periods, e_i, η_i, g₂, g₃ and the Legendre residual.
    Lattice(LatticeArgs),
    /// Frobenius apparency test at each extra singular point.
    Apparency(EquationArgs),
    /// Even doubly-periodic solution Ξ of the product equation.
    Xi(EquationArgs),
    /// Period multipliers and Hermite-Krichever parameters.
    Monodromy(EquationArgs),
    /// Λ(x) on a segment, with ODE residuals (CSV).
    Solve(SolveArgs),
    /// Closed-form Painlevé VI solutions.
    #[command(subcommand)]
    P6(P6Command),
    /// Spectral polynomials of finite-gap potentials.
    #[command(subcommand)]
    Finitegap(FiniteGapCommand),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LatticeArgs {
    #[arg(long, default_value = "0.5,0", allow_hyphen_values = true)]
    pub omega1: CArg,
    #[arg(long, default_value = "0.1,0.6", allow_hyphen_values = true)]
    pub omega3: CArg,
    /// Use ω₁ = 1/2, ω₃ = τ/2 instead of --omega1/--omega3.
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<CArg>,
}

impl LatticeArgs {
    fn build(&self) -> crate::Result<Lattice> {
        match self.tau {
            Some(t) => Lattice::from_tau(t.0),
            None => Lattice::new(self.omega1.0, self.omega3.0),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EquationArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[arg(long, default_value = "0,0,0,0")]
    pub l: LArg,
    /// Exponent gaps r_k, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub r: Vec<u32>,
    /// Positions b_k = ℘(δ_k); repeat once per point.
    #[arg(long, allow_hyphen_values = true)]
    pub b: Vec<CArg>,
    /// Accessory parameters s_k; repeat once per point.
    #[arg(long, allow_hyphen_values = true)]
    pub s: Vec<CArg>,
    #[arg(long = "E", default_value = "0,0", allow_hyphen_values = true)]
    pub energy: CArg,
    /// With --mu1: one point with r = 1 and E fixed by apparency.
    #[arg(long, allow_hyphen_values = true, requires = "mu1")]
    pub b1: Option<CArg>,
    #[arg(long, allow_hyphen_values = true, requires = "b1")]
    pub mu1: Option<CArg>,
    /// Relative singular-value threshold of the collocation nullspace.
    #[arg(long, default_value_t = 1e-10)]
    pub threshold: f64,
}

impl EquationArgs {
    fn data(&self) -> crate::Result<FuchsianData> {
        let lat = self.lattice.build()?;
        if let (Some(b1), Some(mu1)) = (self.b1, self.mu1) {
            if !self.r.is_empty() || !self.b.is_empty() || !self.s.is_empty() {
                return Err(Error::InvalidParameter("--b1/--mu1 cannot be combined with --r/--b/--s".into()));
            }
            return FuchsianData::painleve_form(lat, self.l.0, b1.0, mu1.0);
        }
        if self.b.len() != self.r.len() {
            return Err(Error::InvalidParameter(format!("{} values of --b for {} values of --r", self.b.len(), self.r.len())));
        }
        let s = if self.s.is_empty() { vec![C::new(0.0, 0.0); self.r.len()] } else { self.s.iter().map(|v| v.0).collect() };
        FuchsianData::new(lat, self.l.0, self.r.clone(), self.b.iter().map(|v| v.0).collect(), s, self.energy.0)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveArgs {
    #[command(flatten)]
    pub equation: EquationArgs,
    #[arg(long, default_value = "0.1,0.05", allow_hyphen_values = true)]
    pub from: CArg,
    #[arg(long, default_value = "0.4,0.3", allow_hyphen_values = true)]
    pub to: CArg,
    #[arg(long, default_value_t = 11)]
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyArg {
    Zero,
    E1,
    E2,
    E3,
}

impl FamilyArg {
    fn degenerate(self) -> Degenerate {
        match self {
            FamilyArg::Zero => Degenerate::Zero,
            FamilyArg::E1 => Degenerate::E1,
            FamilyArg::E2 => Degenerate::E2,
            FamilyArg::E3 => Degenerate::E3,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SelectorArgs {
    #[arg(long = "C1", allow_hyphen_values = true)]
    pub c1: Option<CArg>,
    #[arg(long = "C3", allow_hyphen_values = true)]
    pub c3: Option<CArg>,
    #[arg(long = "D1", allow_hyphen_values = true)]
    pub d1: Option<CArg>,
    #[arg(long = "D3", allow_hyphen_values = true)]
    pub d3: Option<CArg>,
    /// Degenerate family; selects the (D1, D3) solutions.
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolutionKind {
    Hitchin,
    Riccati,
    L01,
}

type B1Fn = Box<dyn Fn(C) -> crate::Result<C>>;

fn need(v: Option<CArg>, name: &str) -> crate::Result<C> {
    v.map(|c| c.0).ok_or_else(|| Error::InvalidParameter(format!("--{name} is required")))
}

impl SelectorArgs {
    fn solution(&self, kind: SolutionKind) -> crate::Result<(B1Fn, [u32; 4])> {
        match kind {
            SolutionKind::Hitchin => {
                let (c1, c3) = (need(self.c1, "C1")?, need(self.c3, "C3")?);
                Ok((Box::new(move |t| hitchin_b1(c1, c3, t)), [0; 4]))
            }
            SolutionKind::Riccati => {
                let (d1, d3) = (need(self.d1, "D1")?, need(self.d3, "D3")?);
                let fam = self.family.ok_or_else(|| Error::InvalidParameter("--family is required".into()))?.degenerate();
                Ok((Box::new(move |t| riccati_b1(d1, d3, t, fam)), [0; 4]))
            }
            SolutionKind::L01 => match self.family {
                Some(f) => {
                    let (d1, d3) = (need(self.d1, "D1")?, need(self.d3, "D3")?);
                    let fam = f.degenerate();
                    Ok((Box::new(move |t| l01_degenerate(d1, d3, t, fam)), [1, 0, 0, 0]))
                }
                None => {
                    let (c1, c3) = (need(self.c1, "C1")?, need(self.c3, "C3")?);
                    Ok((Box::new(move |t| l01_b1(c1, c3, t)), [1, 0, 0, 0]))
                }
            },
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct P6PointArgs {
    #[command(flatten)]
    pub selector: SelectorArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub tau: CArg,
    /// Also evaluate the PVI residuals.
    #[arg(long)]
    pub check: bool,
    /// Finite-difference step (default 1e-4·|τ|).
    #[arg(long)]
    pub h: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct P6SweepArgs {
    #[arg(long, value_enum)]
    pub kind: SolutionKind,
    #[command(flatten)]
    pub selector: SelectorArgs,
    #[arg(long = "tau-start", allow_hyphen_values = true)]
    pub tau_start: CArg,
    #[arg(long = "tau-end", allow_hyphen_values = true)]
    pub tau_end: CArg,
    #[arg(long, default_value_t = 11)]
    pub n: usize,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum P6Command {
    Hitchin(P6PointArgs),
    Riccati(P6PointArgs),
    L01(P6PointArgs),
    /// PVI residual along a straight τ segment (CSV).
    Sweep(P6SweepArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FiniteGapArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[arg(long, default_value = "0,0,0,0")]
    pub l: LArg,
    /// Index into the roots of f₀ (m1r2 only).
    #[arg(long = "root-index", default_value_t = 0)]
    pub root_index: usize,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FiniteGapCommand {
    M0(FiniteGapArgs),
    M1r2(FiniteGapArgs),
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

struct Output {
    body: String,
    /// Set when the result was produced but failed a requested check.
    failed: Option<String>,
}

fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialise");
    s.push('\n');
    s
}

fn with_config(config: &Value, mut body: Value) -> Value {
    if let Value::Object(map) = &mut body {
        map.insert("config".into(), config.clone());
    }
    body
}

fn c(z: C) -> Value {
    json!([z.re, z.im])
}

fn term_label(t: &Term) -> String {
    match *t {
        Term::Const => "1".into(),
        Term::Shifted { i, power } => format!("wp(x+omega{i})^{power}"),
        Term::Pole { k, power } => format!("(wp(x)-b{})^-{power}", k + 1),
    }
}

fn csv_with_config(config: &Value, header: &str, rows: &[Vec<f64>]) -> String {
    let mut s = format!("# config: {}\n{header}\n", serde_json::to_string(config).expect("config serialises"));
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(s, "{}", line.join(","));
    }
    s
}

fn execute(cli: &Cli, config: &Value) -> Result<Output, Failure> {
    let format = cli.format;
    let csv_only = |fmt: Option<Format>, allowed_csv: bool| -> Result<Format, Failure> {
        match fmt {
            Some(Format::Csv) if !allowed_csv => Err(Failure::Usage("this subcommand only writes JSON".into())),
            Some(f) => Ok(f),
            None => Ok(if allowed_csv { Format::Csv } else { Format::Json }),
        }
    };
    let ok = |v: Value| Ok(Output { body: to_json(&with_config(config, v)), failed: None });
    match &cli.command {
        Command::Lattice(a) => {
            csv_only(format, false)?;
            let lat = a.build()?;
            ok(serde_json::to_value(lat.summary()).expect("summary serialises"))
        }
        Command::Apparency(a) => {
            csv_only(format, false)?;
            let d = a.data()?;
            let points = (0..d.m())
                .map(|k| {
                    let ap = d.apparency(k)?;
                    Ok(json!({"b": c(d.b[k]), "r": d.r[k], "apparent": ap.apparent, "witness": c(ap.witness), "scale": ap.scale}))
                })
                .collect::<crate::Result<Vec<_>>>()?;
            let all = points.iter().all(|p| p["apparent"] == json!(true));
            // worst point relative to its own scale
            let mut witness = C::new(0.0, 0.0);
            let mut worst = -1.0;
            for k in 0..d.m() {
                let ap = d.apparency(k)?;
                let rel = ap.witness.norm() / ap.scale.max(f64::MIN_POSITIVE);
                if rel > worst {
                    (worst, witness) = (rel, ap.witness);
                }
            }
            let p_required = d.p_required().ok().map(c);
            ok(json!({
                "apparent": all,
                "witness": c(witness),
                "p_required": p_required,
                "points": points,
                "E": c(d.e),
                "p": c(d.p),
            }))
        }
        Command::Xi(a) => {
            csv_only(format, false)?;
            let d = a.data()?;
            let xi = build_xi(&d, XiOptions { seed: cli.seed, threshold: a.threshold, ..XiOptions::default() })?;
            let rep = q_report(&xi, cli.seed)?;
            let labels: Vec<String> = terms(&d.l, &d.r).iter().map(term_label).collect();
            let coeffs: Vec<Value> = xi.coefficients().into_iter().map(c).collect();
            let basis: Vec<Vec<Value>> = xi.basis.iter().map(|v| v.iter().map(|&z| c(z)).collect()).collect();
            ok(json!({
                "nullspace_dim": xi.nullspace_dim,
                "terms": labels,
                "coefficients": coeffs,
                "basis": basis,
                "singular_values": xi.singular_values,
                "heldout_residual": xi.heldout_residual,
                "Q": c(rep.q),
                "Q_spread": rep.spread,
            }))
        }
        Command::Monodromy(a) => {
            csv_only(format, false)?;
            let d = a.data()?;
            let xi = build_xi(&d, XiOptions { seed: cli.seed, threshold: a.threshold, ..XiOptions::default() })?;
            let nd = xi.nullspace_dim;
            let sol = IntegralSolution::new(xi)?;
            let hk = hk_data(&sol)?;
            let kappa = match hk.branch {
                Branch::Generic => hk.kappa,
                Branch::Degenerate => hk.kappa_bar,
            };
            ok(json!({
                "m1": c(hk.m1),
                "m3": c(hk.m3),
                "alpha": c(hk.alpha),
                "kappa": kappa.map(c),
                "Q": c(hk.q),
                "branch": hk.branch,
                "nullspace_dim": nd,
            }))
        }
        Command::Solve(a) => {
            let fmt = csv_only(format, true)?;
            if a.n < 2 {
                return Err(Failure::Usage("--n must be at least 2".into()));
            }
            let d = a.equation.data()?;
            let xi = build_xi(&d, XiOptions { seed: cli.seed, threshold: a.equation.threshold, ..XiOptions::default() })?;
            let sol = IntegralSolution::new(xi)?;
            let mut rows = Vec::with_capacity(a.n);
            for k in 0..a.n {
                let x = a.from.0 + (a.to.0 - a.from.0) * (k as f64 / (a.n - 1) as f64);
                let (lam, _) = sol.lambda_eval(x)?;
                let res = sol.ode_residual(x)?;
                rows.push(vec![x.re, x.im, lam.re, lam.im, res]);
            }
            let body = match fmt {
                Format::Csv => csv_with_config(config, "x_re,x_im,lambda_re,lambda_im,residual", &rows),
                Format::Json => {
                    let pts: Vec<Value> = rows
                        .iter()
                        .map(|r| json!({"x": [r[0], r[1]], "lambda": [r[2], r[3]], "residual": r[4]}))
                        .collect();
                    to_json(&with_config(config, json!({"points": pts})))
                }
            };
            Ok(Output { body, failed: None })
        }
        Command::P6(cmd) => p6(cmd, format, config),
        Command::Finitegap(cmd) => {
            csv_only(format, false)?;
            let sd = match cmd {
                FiniteGapCommand::M0(a) => spectral_poly_m0(a.l.0, &a.lattice.build()?, cli.seed)?,
                FiniteGapCommand::M1r2(a) => {
                    let lat = a.lattice.build()?;
                    let roots = treibich_b1_roots(a.l.0, &lat, cli.seed)?;
                    let b1 = *roots.get(a.root_index).ok_or_else(|| {
                        Failure::Usage(format!("--root-index {} out of range (f0 has {} roots)", a.root_index, roots.len()))
                    })?;
                    spectral_poly_m1r2(a.l.0, b1, &lat, cli.seed)?
                }
            };
            let s = sd.summary();
            ok(json!({
                "g": s.g,
                "Q_coeffs": s.q_coeffs.iter().map(|&z| c(z)).collect::<Vec<_>>(),
                "band_edges": s.band_edges.iter().map(|&z| c(z)).collect::<Vec<_>>(),
                "fit_residual": s.fit_residual,
            }))
        }
    }
}

const P6_TOL: f64 = 1e-6;
const P6_ELLIPTIC_TOL: f64 = 1e-5;

fn p6(cmd: &P6Command, format: Option<Format>, config: &Value) -> Result<Output, Failure> {
    let (kind, a) = match cmd {
        P6Command::Hitchin(a) => (SolutionKind::Hitchin, a),
        P6Command::Riccati(a) => (SolutionKind::Riccati, a),
        P6Command::L01(a) => (SolutionKind::L01, a),
        P6Command::Sweep(s) => return p6_sweep(s, format, config),
    };
    if format == Some(Format::Csv) {
        return Err(Failure::Usage("this subcommand only writes JSON".into()));
    }
    let (f, l) = a.selector.solution(kind)?;
    let tau = a.tau.0;
    let lat = Lattice::from_tau(tau)?;
    let b1 = f(tau)?;
    let (t, lambda) = t_lambda(&lat, b1);
    let mut body = json!({"b1": c(b1), "lambda": c(lambda), "t": c(t), "residual_p6": null, "residual_elliptic": null});
    let mut failed = None;
    if a.check {
        let h = a.h.unwrap_or_else(|| default_step(tau));
        let r = verify_p6(&f, kappas(l), tau, h)?.residual;
        let re = verify_p6_elliptic(&f, l, tau, h)?;
        body["residual_p6"] = json!(r);
        body["residual_elliptic"] = json!(re);
        if r > P6_TOL || re > P6_ELLIPTIC_TOL {
            failed = Some(format!("PVI residuals {r:e} (rational), {re:e} (elliptic) exceed {P6_TOL:e}/{P6_ELLIPTIC_TOL:e}"));
        }
    }
    Ok(Output { body: to_json(&with_config(config, body)), failed })
}

fn p6_sweep(s: &P6SweepArgs, format: Option<Format>, config: &Value) -> Result<Output, Failure> {
    if s.n < 2 {
        return Err(Failure::Usage("--n must be at least 2".into()));
    }
    let (f, l) = s.selector.solution(s.kind)?;
    let mut rows = Vec::with_capacity(s.n);
    for k in 0..s.n {
        let tau = s.tau_start.0 + (s.tau_end.0 - s.tau_start.0) * (k as f64 / (s.n - 1) as f64);
        let chk = verify_p6(&f, kappas(l), tau, default_step(tau))?;
        rows.push(vec![tau.re, tau.im, chk.t.re, chk.t.im, chk.lambda.re, chk.lambda.im, chk.residual]);
    }
    let body = match format.unwrap_or(Format::Csv) {
        Format::Csv => csv_with_config(config, "tau_re,tau_im,t_re,t_im,lambda_re,lambda_im,residual", &rows),
        Format::Json => {
            let pts: Vec<Value> = rows
                .iter()
                .map(|r| json!({"tau": [r[0], r[1]], "t": [r[2], r[3]], "lambda": [r[4], r[5]], "residual": r[6]}))
                .collect();
            to_json(&with_config(config, json!({"points": pts})))
        }
    };
    Ok(Output { body, failed: None })
}

fn error_json(kind: &str, message: &str, config: Option<&Value>) -> String {
    let mut v = json!({"error": {"kind": kind, "message": message}});
    if let Some(cfg) = config {
        v["config"] = cfg.clone();
    }
    to_json(&v)
}

/// Runs the CLI on `argv` (including the program name), writing results to
/// `out` (or `--output`) and diagnostics to `err`.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = write!(out, "{e}");
                    if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                        2
                    } else {
                        0
                    }
                }
                _ => {
                    let msg = e.render().to_string();
                    let _ = write!(err, "{}", error_json("Usage", msg.trim(), None));
                    2
                }
            };
        }
    };
    if let Ok(v) = std::env::var("HEUNHK_SEED") {
        match v.trim().parse::<u64>() {
            Ok(s) => cli.seed = s,
            Err(_) => {
                let _ = write!(err, "{}", error_json("Usage", &format!("HEUNHK_SEED = '{v}' is not an integer"), None));
                return 2;
            }
        }
    }
    if cli.format.is_none() {
        let tabular = matches!(cli.command, Command::Solve(_) | Command::P6(P6Command::Sweep(_)));
        cli.format = Some(if tabular { Format::Csv } else { Format::Json });
    }
    let config = serde_json::to_value(&cli).expect("config serialises");
    if cli.threads != 1 {
        let _ = write!(err, "{}", error_json("Usage", "only --threads 1 is supported", Some(&config)));
        return 2;
    }
    let (body, code) = match execute(&cli, &config) {
        Ok(o) => {
            if let Some(msg) = &o.failed {
                let _ = write!(err, "{}", error_json("ToleranceExceeded", msg, Some(&config)));
            }
            (o.body, if o.failed.is_some() { 3 } else { 0 })
        }
        Err(Failure::Usage(m)) => {
            let _ = write!(err, "{}", error_json("Usage", &m, Some(&config)));
            return 2;
        }
        Err(Failure::Lib(e)) => {
            let _ = write!(err, "{}", error_json(e.kind(), &e.to_string(), Some(&config)));
            return if e.is_numeric() { 3 } else { 2 };
        }
    };
    match &cli.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, body) {
                let _ = write!(err, "{}", error_json("Io", &format!("{path}: {e}"), Some(&config)));
                return 2;
            }
        }
        None => {
            let _ = out.write_all(body.as_bytes());
        }
    }
    code
}

/// [`run_with`] on the process's stdout and stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}
