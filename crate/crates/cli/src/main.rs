use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use radial_ot::barycenter::graded_u_grid;
use radial_ot::gridlab::{counterexample_run, CounterexampleConfig, SinkhornConfig};
use radial_ot::transport::{w2_generalized, w2_parts};
use radial_ot::{
    mccann_interpolate, monge_map, oracle, radial_barycenter, DistributionSpec, Error, RadialDistribution,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

const EXIT_INPUT: u8 = 2;
const EXIT_PRECONDITION: u8 = 3;
const EXIT_NOT_CONVERGED: u8 = 4;

/// Tolerance of the geodesic rows emitted by `interpolate`, relative to W2(mu0, mu1).
const GEODESIC_TOL: f64 = 1e-6;

#[derive(Parser)]
#[command(name = "radial-ot", version, about = "Optimal transport between radial distributions")]
struct Cli {
    /// JSON file with any of the flags below; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Distribution spec: a JSON file or an inline JSON object.
    #[arg(long, global = true)]
    spec: Option<String>,
    /// Second distribution spec.
    #[arg(long, global = true)]
    spec2: Option<String>,
    /// Several distribution specs.
    #[arg(long, global = true, num_args = 1..)]
    specs: Vec<String>,
    /// Comma-separated barycenter weights.
    #[arg(long, global = true, value_delimiter = ',')]
    weights: Vec<f64>,
    /// Comma-separated interpolation times.
    #[arg(long, global = true, value_delimiter = ',')]
    t: Vec<f64>,
    /// Cells per side of the grid.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Final entropic regularization, in units of the squared domain side.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// W2 distance between --spec and --spec2.
    Distance,
    /// Evaluates the Monge map from --spec to --spec2.
    MapEval {
        /// Comma-separated radii for the radial map.
        #[arg(long, value_delimiter = ',')]
        radii: Vec<f64>,
        /// A point as comma-separated coordinates; repeatable.
        #[arg(long = "point", allow_hyphen_values = true)]
        points: Vec<String>,
    },
    /// Quantile curves of the McCann interpolation at the --t times.
    Interpolate,
    /// Radial barycenter of --specs with --weights.
    Barycenter,
    /// Grid barycenter of one of the two non-elliptical examples, with its gaussian control.
    Counterexample {
        #[arg(long = "case")]
        case: Option<u8>,
    },
    /// Draws points from --spec.
    Sample {
        #[arg(long)]
        n: Option<usize>,
    },
    /// Sampled W2 estimate between --spec and --spec2 next to the closed form.
    OracleW2 {
        #[arg(long)]
        n: Option<usize>,
    },
}

/// Contents of a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    out: Option<PathBuf>,
    spec: Option<DistributionSpec>,
    spec2: Option<DistributionSpec>,
    specs: Option<Vec<DistributionSpec>>,
    weights: Option<Vec<f64>>,
    t: Option<Vec<f64>>,
    grid: Option<usize>,
    epsilon: Option<f64>,
    seed: Option<u64>,
    n: Option<usize>,
    case: Option<u8>,
    radii: Option<Vec<f64>>,
    points: Option<Vec<Vec<f64>>>,
    /// Partial solver settings, applied over the command's defaults.
    sinkhorn: Option<serde_json::Map<String, serde_json::Value>>,
    leak_tol: Option<f64>,
    fractions: Option<Vec<f64>>,
}

enum Failure {
    Engine(Error),
    Input(String),
    NotConverged(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Engine(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Engine(Error::Io(e))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Engine(Error::Json(e))
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn read_spec(arg: &str) -> Outcome<DistributionSpec> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).map_err(|e| Failure::Input(format!("cannot read spec {arg}: {e}")))?
    };
    Ok(DistributionSpec::from_json(&text)?)
}

/// Flags merged over the config file.
struct Settings {
    file: RunConfig,
    out: PathBuf,
    spec: Option<DistributionSpec>,
    spec2: Option<DistributionSpec>,
    specs: Vec<DistributionSpec>,
    weights: Vec<f64>,
    t: Vec<f64>,
    grid: Option<usize>,
    epsilon: Option<f64>,
    seed: u64,
}

impl Settings {
    fn resolve(cli: &Cli) -> Outcome<Self> {
        let file: RunConfig = match &cli.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Failure::Input(format!("cannot read config {}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| Failure::Input(format!("bad config file: {e}")))?
            }
            None => RunConfig::default(),
        };
        let spec = match &cli.spec {
            Some(s) => Some(read_spec(s)?),
            None => file.spec.clone(),
        };
        let spec2 = match &cli.spec2 {
            Some(s) => Some(read_spec(s)?),
            None => file.spec2.clone(),
        };
        let specs = if cli.specs.is_empty() {
            file.specs.clone().unwrap_or_default()
        } else {
            cli.specs.iter().map(|s| read_spec(s)).collect::<Outcome<_>>()?
        };
        let pick = |flag: &Vec<f64>, cfg: &Option<Vec<f64>>| {
            if flag.is_empty() {
                cfg.clone().unwrap_or_default()
            } else {
                flag.clone()
            }
        };
        let settings = Self {
            out: cli.out.clone().or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from(".")),
            weights: pick(&cli.weights, &file.weights),
            t: pick(&cli.t, &file.t),
            grid: cli.grid.or(file.grid),
            epsilon: cli.epsilon.or(file.epsilon),
            seed: cli.seed.or(file.seed).unwrap_or(0),
            spec,
            spec2,
            specs,
            file,
        };
        if let Some(e) = settings.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Failure::Input(format!("--epsilon must be positive (got {e})")));
            }
        }
        fs::create_dir_all(&settings.out)?;
        Ok(settings)
    }

    fn pair(&self) -> Outcome<(RadialDistribution, RadialDistribution)> {
        let (Some(a), Some(b)) = (&self.spec, &self.spec2) else {
            return Err(Failure::Input("this command needs --spec and --spec2".into()));
        };
        Ok((a.build()?, b.build()?))
    }

    fn single(&self) -> Outcome<RadialDistribution> {
        match &self.spec {
            Some(s) => Ok(s.build()?),
            None => Err(Failure::Input("this command needs --spec".into())),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

/// Writes through a temporary file in the same directory, then renames it into place.
fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> Outcome<()>) -> Outcome<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Failure::Input(format!("not a file path: {}", path.display())))?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let file = fs::File::create(&tmp)?;
        let mut w = BufWriter::new(file);
        fill(&mut w)?;
        let file = w.into_inner().map_err(|e| e.into_error())?;
        file.sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Outcome<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

fn distance(s: &Settings) -> Outcome<()> {
    let (a, b) = s.pair()?;
    let parts = w2_parts(&a, &b)?;
    let w2 = parts.total();
    write_json(
        &s.path("distance.json"),
        &json!({"w2": w2, "translation_part": parts.translation_sq, "radial_part": parts.radial_sq}),
    )?;
    println!("w2 = {w2:.16e}");
    Ok(())
}

fn map_eval(s: &Settings, radii: &[f64], points: &[String]) -> Outcome<()> {
    let (a, b) = s.pair()?;
    let map = monge_map(&a, &b)?;
    let radii = if radii.is_empty() {
        s.file.radii.clone().unwrap_or_default()
    } else {
        radii.to_vec()
    };
    let points: Vec<Vec<f64>> = if points.is_empty() {
        s.file.points.clone().unwrap_or_default()
    } else {
        points
            .iter()
            .map(|p| {
                p.split(',')
                    .map(|c| c.trim().parse::<f64>().map_err(|_| Failure::Input(format!("bad point {p:?}"))))
                    .collect()
            })
            .collect::<Outcome<_>>()?
    };
    if radii.is_empty() && points.is_empty() {
        return Err(Failure::Input("map-eval needs --radii or --point".into()));
    }
    if let Some(r) = radii.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
        return Err(Failure::Input(format!("radii must be nonnegative (got {r})")));
    }
    if !radii.is_empty() {
        let mapped = map.radial_map().eval_many(&radii);
        write_atomic(&s.path("radial_map.csv"), |w| {
            writeln!(w, "r,c")?;
            for (r, c) in radii.iter().zip(&mapped) {
                writeln!(w, "{r:.16e},{c:.16e}")?;
            }
            Ok(())
        })?;
        println!("mapped {} radii", radii.len());
    }
    if !points.is_empty() {
        let images = points.iter().map(|p| map.apply(p)).collect::<Result<Vec<_>, _>>()?;
        write_atomic(&s.path("points.csv"), |w| {
            let d = a.dim();
            let head: Vec<String> = (0..d).map(|k| format!("x{k}")).chain((0..d).map(|k| format!("y{k}"))).collect();
            writeln!(w, "{}", head.join(","))?;
            for (p, q) in points.iter().zip(&images) {
                let row: Vec<String> = p.iter().chain(q).map(|v| format!("{v:.16e}")).collect();
                writeln!(w, "{}", row.join(","))?;
            }
            Ok(())
        })?;
        println!("mapped {} points", points.len());
    }
    Ok(())
}

fn interpolate(s: &Settings) -> Outcome<()> {
    let (a, b) = s.pair()?;
    let times = if s.t.is_empty() { vec![0.0, 0.25, 0.5, 0.75, 1.0] } else { s.t.clone() };
    let curves = times
        .iter()
        .map(|&t| mccann_interpolate(&a, &b, t))
        .collect::<Result<Vec<_>, _>>()?;
    let u_grid = graded_u_grid(257);
    write_atomic(&s.path("interpolation.csv"), |w| {
        writeln!(w, "t,u,quantile")?;
        for (t, c) in times.iter().zip(&curves) {
            for &u in &u_grid {
                writeln!(w, "{t:.16e},{u:.16e},{:.16e}", c.measure.quantile(u))?;
            }
        }
        Ok(())
    })?;

    let total = w2_parts(&a, &b)?.total();
    let mut all_pass = true;
    let mut rows = Vec::new();
    for i in 0..times.len() {
        for j in i + 1..times.len() {
            let measured = w2_generalized(&curves[i], &curves[j])?;
            let expected = (times[j] - times[i]).abs() * total;
            let pass = (measured - expected).abs() <= GEODESIC_TOL * total.max(f64::MIN_POSITIVE);
            all_pass &= pass;
            rows.push((times[i], times[j], measured, expected, pass));
        }
    }
    write_atomic(&s.path("geodesic.csv"), |w| {
        writeln!(w, "s,t,w2_st,expected,pass")?;
        for (s, t, m, e, p) in &rows {
            writeln!(w, "{s:.16e},{t:.16e},{m:.16e},{e:.16e},{p}")?;
        }
        Ok(())
    })?;
    println!(
        "{} curves; geodesic check {}",
        times.len(),
        if all_pass { "PASS" } else { "FAIL" }
    );
    Ok(())
}

fn barycenter(s: &Settings) -> Outcome<()> {
    if s.specs.is_empty() {
        return Err(Failure::Input("barycenter needs --specs".into()));
    }
    let dists = s.specs.iter().map(|d| d.build()).collect::<Result<Vec<_>, _>>()?;
    let weights = if s.weights.is_empty() {
        vec![1.0 / dists.len() as f64; dists.len()]
    } else {
        s.weights.clone()
    };
    let result = radial_barycenter(&dists, &weights)?;
    let text = result.to_json()?;
    write_atomic(&s.path("barycenter.json"), |w| {
        writeln!(w, "{text}")?;
        Ok(())
    })?;
    write_atomic(&s.path("barycenter_quantile.csv"), |w| Ok(result.write_quantile_csv(w)?))?;
    println!("residual = {:.3e}", result.residual);
    if !result.certified() {
        return Err(Failure::NotConverged(format!(
            "fixed-point residual {:.3e} exceeds the certificate tolerance",
            result.residual
        )));
    }
    Ok(())
}

fn overlay(base: &SinkhornConfig, overrides: &serde_json::Map<String, serde_json::Value>) -> Outcome<SinkhornConfig> {
    let mut merged = match serde_json::to_value(base).map_err(Error::from)? {
        serde_json::Value::Object(m) => m,
        _ => unreachable!("solver settings serialize to an object"),
    };
    merged.extend(overrides.clone());
    serde_json::from_value(serde_json::Value::Object(merged)).map_err(|e| Failure::Input(format!("config sinkhorn: {e}")))
}

fn counterexample(s: &Settings, case: Option<u8>) -> Outcome<()> {
    let case = case
        .or(s.file.case)
        .ok_or_else(|| Failure::Input("counterexample needs --case 1 or --case 2".into()))?;
    let mut cfg = CounterexampleConfig::default();
    if let Some(overrides) = &s.file.sinkhorn {
        cfg.sinkhorn = overlay(&cfg.sinkhorn, overrides)?;
    }
    if let Some(l) = s.file.leak_tol {
        cfg.leak_tol = l;
    }
    if let Some(f) = &s.file.fractions {
        cfg.fractions = f.clone();
    }
    if let Some(n) = s.grid {
        cfg.n = n;
    }
    if let Some(e) = s.epsilon {
        cfg.sinkhorn.epsilon = e;
    }
    let run = counterexample_run(case, &cfg)?;
    let report = &run.report;
    write_json(&s.path(&format!("case{case}_report.json")), report)?;
    write_atomic(&s.path(&format!("case{case}_contours.csv")), |w| Ok(report.contours.write_csv(w)?))?;
    write_json(&s.path(&format!("case{case}_contours.geojson")), &report.contours.to_geojson())?;
    write_atomic(&s.path(&format!("case{case}_barycenter.csv")), |w| Ok(run.barycenter.write_csv(w)?))?;
    write_atomic(&s.path(&format!("case{case}_control.csv")), |w| Ok(run.control.write_csv(w)?))?;
    println!(
        "case {case}: inner {:.3e}, outer {:.3e}, control outer {:.3e}; non-elliptical: {}",
        report.inner_deviation,
        report.outer_deviation,
        report.control_outer_deviation,
        report.non_elliptical()
    );
    if !report.converged() {
        return Err(Failure::NotConverged("entropic barycenter did not reach its tolerance".into()));
    }
    Ok(())
}

fn sample(s: &Settings, n: Option<usize>) -> Outcome<()> {
    let dist = s.single()?;
    let n = n.or(s.file.n).unwrap_or(1000);
    let cloud = oracle::sample(&dist, n, s.seed)?;
    write_atomic(&s.path("samples.csv"), |w| {
        let head: Vec<String> = (1..=cloud.dim).map(|k| format!("x{k}")).chain(["w".into()]).collect();
        writeln!(w, "{}", head.join(","))?;
        for i in 0..cloud.len() {
            let row: Vec<String> = cloud
                .point(i)
                .iter()
                .chain([&cloud.weights[i]])
                .map(|v| format!("{v:.16e}"))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    })?;
    println!("{n} samples");
    Ok(())
}

fn oracle_w2(s: &Settings, n: Option<usize>) -> Outcome<()> {
    let (a, b) = s.pair()?;
    let n = n.or(s.file.n).unwrap_or(500);
    let closed_form = w2_parts(&a, &b)?.total();
    let est = oracle::empirical_w2(&a, &b, n, s.seed)?;
    let (lo, hi) = est.interval();
    let brackets = est.brackets(closed_form);
    write_json(
        &s.path("oracle_w2.json"),
        &json!({
            "closed_form": closed_form,
            "estimate": est.estimate,
            "std_dev": est.std_dev,
            "interval": [lo, hi],
            "replicates": est.replicates,
            "n": est.n,
            "brackets": brackets,
        }),
    )?;
    println!(
        "closed form {closed_form:.6e}, estimate {:.6e} +/- {:.2e}: {}",
        est.estimate,
        2.0 * est.std_dev,
        if brackets { "bracketed" } else { "outside interval" }
    );
    Ok(())
}

fn run(cli: Cli) -> Outcome<()> {
    let s = Settings::resolve(&cli)?;
    match &cli.command {
        Command::Distance => distance(&s),
        Command::MapEval { radii, points } => map_eval(&s, radii, points),
        Command::Interpolate => interpolate(&s),
        Command::Barycenter => barycenter(&s),
        Command::Counterexample { case } => counterexample(&s, *case),
        Command::Sample { n } => sample(&s, *n),
        Command::OracleW2 { n } => oracle_w2(&s, *n),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Engine(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Solver(_) => EXIT_NOT_CONVERGED,
                e if e.is_precondition() => EXIT_PRECONDITION,
                _ => EXIT_INPUT,
            })
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::NotConverged(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_NOT_CONVERGED)
        }
    }
}
