//! Command-line surface for the disk X-ray toolkit: sinogram synthesis,
//! backprojection, SVD reconstruction, range projection, attenuated
//! transforms, boundary-asymptotic probes and the identity verification
//! suite. Outputs are plain-text data files with a `.meta` sidecar
//! echoing the resolved configuration.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C64;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;
use xrdisk::asymptotics::{self, InputClass, NormalWeight};
use xrdisk::attenuated::{attenuated_sinogram, AttenuationField};
use xrdisk::basis::{read_coeff_table, write_coeff_table, DataGrid, ZernikeExpansion};
use xrdisk::geometry::DiskModel;
use xrdisk::range::{PsiWindow, RangeOperators};
use xrdisk::spectral::{svd_reconstruct, SobolevSpec, SpectralFilter};
use xrdisk::transform::{
    backproject_plain, backproject_weighted, xray_sinogram, BoundaryData, DiskField, FiberRule,
    Sinogram,
};
use xrdisk::verify::{run_suites, Suite};

/// Exit code for failed verification checks.
const EXIT_CHECK_FAILURE: i32 = 1;
/// Exit code for configuration errors.
const EXIT_CONFIG_ERROR: i32 = 2;

#[derive(Parser)]
#[command(name = "xrdisk", about = "Geodesic X-ray transform toolkit for constant-curvature disks", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CommonOpts {
    /// Curvature parameter of the metric (Gaussian curvature is 4 kappa).
    #[arg(long)]
    kappa: Option<f64>,
    /// Disk radius.
    #[arg(long)]
    radius: Option<f64>,
    /// Weight exponent gamma.
    #[arg(long)]
    gamma: Option<f64>,
    /// Basis degree cutoff.
    #[arg(long)]
    degree: Option<usize>,
    /// Boundary-angle grid size.
    #[arg(long = "grid-beta")]
    grid_beta: Option<usize>,
    /// Incidence-angle grid size.
    #[arg(long = "grid-alpha")]
    grid_alpha: Option<usize>,
    /// Seed for all randomized steps.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: available cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Config file with `key = value` lines, overridden by flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Resolved run configuration.
#[derive(Debug, Clone)]
struct RunConfig {
    kappa: f64,
    radius: f64,
    gamma: f64,
    degree: usize,
    grid_beta: usize,
    grid_alpha: usize,
    seed: u64,
    workers: Option<usize>,
    out: Option<PathBuf>,
}

impl RunConfig {
    fn resolve(opts: &CommonOpts) -> Result<Self> {
        let mut kv = std::collections::HashMap::new();
        if let Some(path) = &opts.config {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            for line in text.lines() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line
                    .split_once('=')
                    .ok_or_else(|| anyhow!("bad config line: {line}"))?;
                kv.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        let lookup_f64 = |key: &str, flag: Option<f64>, default: f64| -> Result<f64> {
            if let Some(v) = flag {
                return Ok(v);
            }
            match kv.get(key) {
                Some(s) => s.parse().map_err(|_| anyhow!("bad config value for {key}: {s}")),
                None => Ok(default),
            }
        };
        let lookup_usize = |key: &str, flag: Option<usize>, default: usize| -> Result<usize> {
            if let Some(v) = flag {
                return Ok(v);
            }
            match kv.get(key) {
                Some(s) => s.parse().map_err(|_| anyhow!("bad config value for {key}: {s}")),
                None => Ok(default),
            }
        };
        let config = RunConfig {
            kappa: lookup_f64("kappa", opts.kappa, 0.0)?,
            radius: lookup_f64("radius", opts.radius, 1.0)?,
            gamma: lookup_f64("gamma", opts.gamma, 0.0)?,
            degree: lookup_usize("degree", opts.degree, 10)?,
            grid_beta: lookup_usize("grid-beta", opts.grid_beta, 64)?,
            grid_alpha: lookup_usize("grid-alpha", opts.grid_alpha, 24)?,
            seed: if let Some(s) = opts.seed {
                s
            } else {
                kv.get("seed").map(|s| s.parse()).transpose()?.unwrap_or(0)
            },
            workers: opts.workers.or_else(|| kv.get("workers").and_then(|s| s.parse().ok())),
            out: opts.out.clone(),
        };
        if config.grid_beta == 0 || config.grid_alpha == 0 {
            bail!("grid sizes must be positive");
        }
        Ok(config)
    }

    fn model(&self) -> Result<DiskModel> {
        DiskModel::new(self.kappa, self.radius).map_err(|e| anyhow!("{e}"))
    }

    fn grid(&self) -> Result<DataGrid> {
        DataGrid::new(self.gamma, self.grid_beta, self.grid_alpha).map_err(|e| anyhow!("{e}"))
    }

    fn out(&self) -> Result<&Path> {
        self.out.as_deref().ok_or_else(|| anyhow!("--out is required for this command"))
    }

    fn echo(&self) -> String {
        format!(
            "kappa = {}\nradius = {}\ngamma = {}\ndegree = {}\ngrid-beta = {}\ngrid-alpha = {}\nseed = {}\nworkers = {}\n",
            self.kappa,
            self.radius,
            self.gamma,
            self.degree,
            self.grid_beta,
            self.grid_alpha,
            self.seed,
            self.workers.map_or("auto".to_string(), |w| w.to_string()),
        )
    }
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a sinogram from a built-in phantom or coefficient file.
    Sinogram {
        #[command(flatten)]
        common: CommonOpts,
        /// Phantom: constant | gaussian[:cx,cy,width] | zernike:N,K |
        /// zernike-hat:N,K | dgamma:P
        #[arg(long, default_value = "constant")]
        phantom: String,
        /// Coefficient-table file used instead of a phantom.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Backproject a sinogram file onto a polar grid of disk points.
    Backproject {
        #[command(flatten)]
        common: CommonOpts,
        /// Sinogram file.
        #[arg(long)]
        input: PathBuf,
        /// Apply the singular weight matching the sinogram's gamma.
        #[arg(long)]
        weighted: bool,
        /// Radial point count of the output grid.
        #[arg(long, default_value_t = 24)]
        grid_rho: usize,
        /// Fiber direction count.
        #[arg(long, default_value_t = 256)]
        fiber: usize,
    },
    /// Reconstruct Zernike coefficients from a sinogram.
    Reconstruct {
        #[command(flatten)]
        common: CommonOpts,
        /// Sinogram file.
        #[arg(long)]
        input: PathBuf,
        /// Additive Gaussian noise level applied before inversion.
        #[arg(long)]
        noise: Option<f64>,
        /// Tikhonov parameter.
        #[arg(long)]
        tikhonov: Option<f64>,
        /// Sweep Tikhonov parameters and emit an error curve
        /// (requires --truth).
        #[arg(long)]
        lambda_sweep: bool,
        /// Ground-truth coefficient table for error reporting.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Project a sinogram onto the range of the transform.
    Range {
        #[command(flatten)]
        common: CommonOpts,
        /// Sinogram file.
        #[arg(long)]
        input: PathBuf,
    },
    /// Attenuated transform of a phantom.
    Attenuate {
        #[command(flatten)]
        common: CommonOpts,
        /// Attenuation: zero | constant:RE,IM | bump:AMP,RADIUS |
        /// su2:AMP,RADIUS
        #[arg(long, default_value = "bump:0.5,0.8")]
        attenuation: String,
        /// Phantom (same grammar as `sinogram`).
        #[arg(long, default_value = "constant")]
        phantom: String,
        /// Transport RK4 base step count.
        #[arg(long, default_value_t = 256)]
        steps: usize,
    },
    /// Boundary-asymptotics probes.
    Asymptotics {
        #[command(flatten)]
        common: CommonOpts,
        /// Probe: leading:GAMMA | index:GAMMA,K | classify:WEIGHT,INPUT
        /// (WEIGHT: none|invtau; INPUT: constant|invsqrt|log)
        #[arg(long)]
        probe: String,
    },
    /// Run identity suites; exit status 1 if any check fails.
    Verify {
        #[command(flatten)]
        common: CommonOpts,
        /// Suite: identity | svd | range | attenuated | asymptotics | all
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(EXIT_CONFIG_ERROR);
        }
    }
}

fn setup_workers(config: &RunConfig) {
    if let Some(w) = config.workers {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
}

fn write_sidecar(path: &Path, config: &RunConfig, extra: &str, elapsed_ms: u128) -> Result<()> {
    let mut meta = path.as_os_str().to_owned();
    meta.push(".meta");
    let mut w = BufWriter::new(File::create(Path::new(&meta))?);
    write!(w, "{}", config.echo())?;
    write!(w, "{extra}")?;
    writeln!(w, "elapsed-ms = {elapsed_ms}")?;
    Ok(())
}

/// Parses `name:a,b,...` phantom descriptors into a disk field.
fn parse_phantom(descriptor: &str, gamma_default: f64) -> Result<Box<dyn Fn(C64) -> C64 + Sync>> {
    let (name, args) = match descriptor.split_once(':') {
        Some((n, a)) => (n, a.split(',').map(str::trim).collect::<Vec<_>>()),
        None => (descriptor, Vec::new()),
    };
    let parse_f64 = |s: &str| -> Result<f64> { s.parse().map_err(|_| anyhow!("bad number {s}")) };
    match name {
        "constant" => Ok(Box::new(|_| C64::new(1.0, 0.0))),
        "gaussian" => {
            let cx = args.first().map(|s| parse_f64(s)).transpose()?.unwrap_or(0.3);
            let cy = args.get(1).map(|s| parse_f64(s)).transpose()?.unwrap_or(0.0);
            let width = args.get(2).map(|s| parse_f64(s)).transpose()?.unwrap_or(4.0);
            Ok(Box::new(move |z: C64| {
                C64::new((-width * (z - C64::new(cx, cy)).norm_sqr()).exp(), 0.0)
            }))
        }
        "zernike" | "zernike-hat" => {
            let n: usize = args
                .first()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| anyhow!("zernike phantom needs N,K"))?;
            let k: usize = args
                .get(1)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| anyhow!("zernike phantom needs N,K"))?;
            if k > n {
                bail!("zernike phantom index k = {k} outside [0, {n}]");
            }
            let hat = name == "zernike-hat";
            Ok(Box::new(move |z: C64| {
                if hat {
                    xrdisk::basis::zernike_hat(gamma_default, n, k, z).unwrap()
                } else {
                    xrdisk::basis::zernike(gamma_default, n, k, z).unwrap()
                }
            }))
        }
        "dgamma" => {
            let p = args.first().map(|s| parse_f64(s)).transpose()?.unwrap_or(0.5);
            Ok(Box::new(move |z: C64| {
                C64::new((1.0 - z.norm_sqr()).max(0.0).powf(p), 0.0)
            }))
        }
        other => bail!("unknown phantom {other}"),
    }
}

fn parse_attenuation(descriptor: &str) -> Result<AttenuationField> {
    let (name, args) = match descriptor.split_once(':') {
        Some((n, a)) => (n, a.split(',').map(str::trim).collect::<Vec<_>>()),
        None => (descriptor, Vec::new()),
    };
    let parse_f64 = |s: &str| -> Result<f64> { s.parse().map_err(|_| anyhow!("bad number {s}")) };
    match name {
        "zero" => Ok(AttenuationField::zero(1)),
        "constant" => {
            let re = args.first().map(|s| parse_f64(s)).transpose()?.unwrap_or(0.5);
            let im = args.get(1).map(|s| parse_f64(s)).transpose()?.unwrap_or(0.0);
            Ok(AttenuationField::constant_scalar(C64::new(re, im)))
        }
        "bump" => {
            let amp = args.first().map(|s| parse_f64(s)).transpose()?.unwrap_or(0.5);
            let radius = args.get(1).map(|s| parse_f64(s)).transpose()?.unwrap_or(0.8);
            Ok(AttenuationField::bump(amp, radius))
        }
        "su2" => {
            let amp = args.first().map(|s| parse_f64(s)).transpose()?.unwrap_or(0.8);
            let radius = args.get(1).map(|s| parse_f64(s)).transpose()?.unwrap_or(0.85);
            Ok(AttenuationField::su2_bump(amp, radius))
        }
        other => bail!("unknown attenuation {other}"),
    }
}

fn read_sinogram(path: &Path) -> Result<Sinogram> {
    let mut r = BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    );
    Sinogram::read(&mut r).map_err(|e| anyhow!("{e}"))
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Sinogram { common, phantom, input } => {
            let config = RunConfig::resolve(&common)?;
            setup_workers(&config);
            let start = Instant::now();
            let model = config.model()?;
            let grid = config.grid()?;
            let out = config.out()?;
            let expansion = input
                .map(|p| -> Result<ZernikeExpansion> {
                    let mut r = BufReader::new(File::open(&p)?);
                    read_coeff_table(&mut r).map_err(|e| anyhow!("{e}"))
                })
                .transpose()?;
            let field: DiskField = match &expansion {
                Some(exp) => DiskField::Expansion(exp),
                None => DiskField::Callable(Box::leak(parse_phantom(&phantom, config.gamma)?)),
            };
            let n_u = xrdisk::transform::u_rule_size(config.degree.max(30));
            let sino = xray_sinogram(model, config.gamma, &field, &grid, n_u)
                .map_err(|e| anyhow!("{e}"))?;
            let mut w = BufWriter::new(File::create(out)?);
            sino.write(&mut w).map_err(|e| anyhow!("{e}"))?;
            drop(w);
            write_sidecar(
                out,
                &config,
                &format!("command = sinogram\nphantom = {phantom}\nu-nodes = {n_u}\n"),
                start.elapsed().as_millis(),
            )?;
            Ok(0)
        }
        Command::Backproject { common, input, weighted, grid_rho, fiber } => {
            let config = RunConfig::resolve(&common)?;
            setup_workers(&config);
            let start = Instant::now();
            let model = config.model()?;
            let out = config.out()?;
            let sino = read_sinogram(&input)?;
            // Polar output grid, open at both ends.
            let mut points = Vec::new();
            for ir in 0..grid_rho {
                let rho = model.radius() * (ir as f64 + 0.5) / grid_rho as f64;
                for iw in 0..config.grid_beta {
                    let omega = 2.0 * std::f64::consts::PI * iw as f64 / config.grid_beta as f64;
                    points.push(C64::from_polar(rho, omega));
                }
            }
            let data = BoundaryData::Sinogram(&sino);
            let rule = FiberRule::Trapezoid(fiber);
            let values = if weighted {
                backproject_weighted(model, sino.gamma, &data, &points, rule)
            } else {
                backproject_plain(model, &data, &points, rule)
            }
            .map_err(|e| anyhow!("{e}"))?;
            let mut w = BufWriter::new(File::create(out)?);
            writeln!(w, "# x y re im")?;
            for (z, v) in points.iter().zip(&values) {
                writeln!(w, "{:.16e} {:.16e} {:.16e} {:.16e}", z.re, z.im, v.re, v.im)?;
            }
            drop(w);
            write_sidecar(
                out,
                &config,
                &format!("command = backproject\nweighted = {weighted}\nfiber = {fiber}\n"),
                start.elapsed().as_millis(),
            )?;
            Ok(0)
        }
        Command::Reconstruct { common, input, noise, tikhonov, lambda_sweep, truth } => {
            let config = RunConfig::resolve(&common)?;
            setup_workers(&config);
            let start = Instant::now();
            let out = config.out()?;
            let mut sino = read_sinogram(&input)?;
            if let Some(sigma) = noise {
                use rand::{Rng, SeedableRng};
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
                for v in sino.values.iter_mut() {
                    // Box-Muller from the seeded stream.
                    let u1: f64 = rng.random_range(1e-16..1.0);
                    let u2: f64 = rng.random_range(0.0..1.0);
                    let gauss =
                        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
                    *v += C64::new(sigma * gauss, 0.0);
                }
            }
            let truth_exp = truth
                .map(|p| -> Result<ZernikeExpansion> {
                    let mut r = BufReader::new(File::open(&p)?);
                    read_coeff_table(&mut r).map_err(|e| anyhow!("{e}"))
                })
                .transpose()?;
            let rel_errors = |rec: &ZernikeExpansion| -> Option<(f64, f64)> {
                truth_exp.as_ref().map(|t| {
                    let err_l2: f64 = t
                        .coeffs()
                        .iter()
                        .zip(rec.coeffs())
                        .map(|(a, b)| (a - b).norm_sqr())
                        .sum::<f64>()
                        .sqrt();
                    let mut diff = rec.clone();
                    for ((n, k), tv) in
                        xrdisk::basis::triangle_iter(t.degree_max).zip(t.coeffs())
                    {
                        diff.set(n, k, diff.get(n, k) - tv);
                    }
                    let h1 = SobolevSpec::disk(1.0, sino.gamma).norm_disk(&diff)
                        / SobolevSpec::disk(1.0, sino.gamma).norm_disk(t).max(1e-300);
                    (err_l2 / t.l2_norm().max(1e-300), h1)
                })
            };

            if lambda_sweep {
                let truth_exp = truth_exp
                    .as_ref()
                    .ok_or_else(|| anyhow!("--lambda-sweep requires --truth"))?;
                let mut w = BufWriter::new(File::create(out)?);
                writeln!(w, "# lambda rel_l2_error")?;
                for i in 0..17 {
                    let lambda = 10f64.powf(-10.0 + 0.5 * i as f64);
                    let rec = svd_reconstruct(
                        &sino,
                        config.degree,
                        SpectralFilter::Tikhonov { lambda },
                    )
                    .map_err(|e| anyhow!("{e}"))?;
                    let err: f64 = truth_exp
                        .coeffs()
                        .iter()
                        .zip(rec.coeffs())
                        .map(|(a, b)| (a - b).norm_sqr())
                        .sum::<f64>()
                        .sqrt()
                        / truth_exp.l2_norm().max(1e-300);
                    writeln!(w, "{lambda:.6e} {err:.12e}")?;
                }
                drop(w);
                write_sidecar(
                    out,
                    &config,
                    "command = reconstruct\nmode = lambda-sweep\n",
                    start.elapsed().as_millis(),
                )?;
                return Ok(0);
            }

            let filter = match tikhonov {
                Some(lambda) => SpectralFilter::Tikhonov { lambda },
                None => SpectralFilter::None,
            };
            let rec =
                svd_reconstruct(&sino, config.degree, filter).map_err(|e| anyhow!("{e}"))?;
            let mut w = BufWriter::new(File::create(out)?);
            write_coeff_table(&mut w, &rec).map_err(|e| anyhow!("{e}"))?;
            drop(w);
            let mut extra = String::from("command = reconstruct\n");
            if let Some((l2, h1)) = rel_errors(&rec) {
                extra.push_str(&format!("rel-l2-error = {l2:.12e}\nrel-h1-error = {h1:.12e}\n"));
                println!("rel_l2_error {l2:.12e}");
            }
            write_sidecar(out, &config, &extra, start.elapsed().as_millis())?;
            Ok(0)
        }
        Command::Range { common, input } => {
            let config = RunConfig::resolve(&common)?;
            setup_workers(&config);
            let start = Instant::now();
            let model = config.model()?;
            if !model.is_flat() || (model.radius() - 1.0).abs() > 1e-14 {
                bail!("range projection runs on the Euclidean unit disk");
            }
            let out = config.out()?;
            let sino = read_sinogram(&input)?;
            let ops = RangeOperators::new(model, 64).map_err(|e| anyhow!("{e}"))?;
            let window = PsiWindow::with_margin(config.degree, 4);
            let data = BoundaryData::Sinogram(&sino);
            let projected = ops.range_project(&data, &window);
            let distance = ops.range_distance(&data, &window);
            let out_grid = config.grid()?;
            let proj_sino =
                Sinogram::from_callable(model, out_grid, |c| projected.eval(c));
            let mut w = BufWriter::new(File::create(out)?);
            proj_sino.write(&mut w).map_err(|e| anyhow!("{e}"))?;
            drop(w);
            println!("range_distance {distance:.12e}");
            write_sidecar(
                out,
                &config,
                &format!("command = range\nrange-distance = {distance:.12e}\n"),
                start.elapsed().as_millis(),
            )?;
            Ok(0)
        }
        Command::Attenuate { common, attenuation, phantom, steps } => {
            let config = RunConfig::resolve(&common)?;
            setup_workers(&config);
            let start = Instant::now();
            let model = config.model()?;
            let out = config.out()?;
            let grid = config.grid()?;
            let phi = parse_attenuation(&attenuation)?;
            let scalar = parse_phantom(&phantom, config.gamma)?;
            let m = phi.m;
            let source = move |z: C64| {
                let mut v = vec![C64::new(0.0, 0.0); m];
                v[0] = scalar(z);
                v
            };
            let vsino = attenuated_sinogram(model, &phi, &source, &grid, steps)
                .map_err(|e| anyhow!("{e}"))?;
            for (j, comp) in vsino.components.iter().enumerate() {
                let path = if vsino.components.len() == 1 {
                    out.to_path_buf()
                } else {
                    let mut p = out.as_os_str().to_owned();
                    p.push(format!(".comp{j}"));
                    PathBuf::from(p)
                };
                let mut w = BufWriter::new(File::create(&path)?);
                comp.write(&mut w).map_err(|e| anyhow!("{e}"))?;
            }
            write_sidecar(
                out,
                &config,
                &format!(
                    "command = attenuate\nattenuation = {attenuation}\nphantom = {phantom}\nsteps = {steps}\ncomponents = {}\n",
                    vsino.components.len()
                ),
                start.elapsed().as_millis(),
            )?;
            Ok(0)
        }
        Command::Asymptotics { common, probe } => {
            let config = RunConfig::resolve(&common)?;
            setup_workers(&config);
            let start = Instant::now();
            let model = config.model()?;
            let out = config.out()?;
            let (name, args) = probe
                .split_once(':')
                .map(|(n, a)| (n, a.split(',').map(str::trim).collect::<Vec<_>>()))
                .unwrap_or((probe.as_str(), Vec::new()));
            let mut w = BufWriter::new(File::create(out)?);
            let pass = match name {
                "leading" => {
                    let g: f64 = args
                        .first()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| anyhow!("leading probe needs gamma"))?;
                    let rep =
                        asymptotics::verify_i0_leading(model, g).map_err(|e| anyhow!("{e}"))?;
                    writeln!(w, "# leading gamma={g}")?;
                    writeln!(
                        w,
                        "term exponent coefficient {:.12e} {:.12e}",
                        rep.fitted_exponent, rep.fitted_coefficient
                    )?;
                    writeln!(
                        w,
                        "expected {:.12e} {:.12e}",
                        rep.expected_exponent, rep.expected_coefficient
                    )?;
                    writeln!(w, "geodesic-convention-factor {:.12e}", rep.geodesic_convention_factor)?;
                    writeln!(w, "verdict {}", if rep.pass { "pass" } else { "fail" })?;
                    rep.pass
                }
                "index" => {
                    let g: f64 = args
                        .first()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| anyhow!("index probe needs gamma[,k]"))?;
                    let k: u32 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0);
                    let rep = asymptotics::verify_backproj_index(model, g, k)
                        .map_err(|e| anyhow!("{e}"))?;
                    writeln!(w, "# index gamma={g} k={k} case={:?}", rep.expected_case)?;
                    if let Some(t) = rep.expected_leading {
                        writeln!(w, "expected-leading {t}")?;
                    }
                    writeln!(w, "residual-correct {:.12e}", rep.residual_correct)?;
                    writeln!(w, "residual-best-wrong {:.12e}", rep.residual_best_wrong)?;
                    writeln!(
                        w,
                        "verdict {}",
                        if rep.inconclusive {
                            "inconclusive"
                        } else if rep.pass {
                            "pass"
                        } else {
                            "fail"
                        }
                    )?;
                    rep.pass || rep.inconclusive
                }
                "classify" => {
                    let weight = match args.first().copied() {
                        Some("none") | None => NormalWeight::None,
                        Some("invtau") => NormalWeight::InvTau,
                        Some(other) => bail!("unknown weight {other}"),
                    };
                    let input = match args.get(1).copied() {
                        Some("constant") | None => InputClass::Constant,
                        Some("invsqrt") => InputClass::InvSqrtBoundary,
                        Some("log") => InputClass::LogProfile,
                        Some(other) => bail!("unknown input class {other}"),
                    };
                    let rep = asymptotics::classify_normal_output(model, weight, input)
                        .map_err(|e| anyhow!("{e}"))?;
                    asymptotics::write_fit_report(&mut w, &rep.note, &rep.fit, rep.pass)
                        .map_err(|e| anyhow!("{e}"))?;
                    writeln!(
                        w,
                        "headline {} {:.12e}",
                        rep.headline_term, rep.headline_coefficient
                    )?;
                    rep.pass
                }
                other => bail!("unknown probe {other}"),
            };
            drop(w);
            write_sidecar(
                out,
                &config,
                &format!("command = asymptotics\nprobe = {probe}\n"),
                start.elapsed().as_millis(),
            )?;
            Ok(if pass { 0 } else { EXIT_CHECK_FAILURE })
        }
        Command::Verify { common, suite } => {
            let config = RunConfig::resolve(&common)?;
            setup_workers(&config);
            let suites = match suite.as_str() {
                "all" => Suite::all(),
                "identity" => vec![Suite::Identity],
                "svd" => vec![Suite::Svd],
                "range" => vec![Suite::Range],
                "attenuated" => vec![Suite::Attenuated],
                "asymptotics" => vec![Suite::Asymptotics],
                other => bail!("unknown suite {other}"),
            };
            let checks = run_suites(&suites).map_err(|e| anyhow!("{e}"))?;
            let mut failures = 0;
            let mut lines = String::new();
            for check in &checks {
                let line = check.format_line();
                println!("{line}");
                lines.push_str(&line);
                lines.push('\n');
                if !check.pass {
                    failures += 1;
                }
            }
            if let Some(out) = &config.out {
                std::fs::write(out, &lines)?;
            }
            println!("verify: {} checks, {failures} failed", checks.len());
            Ok(if failures == 0 { 0 } else { EXIT_CHECK_FAILURE })
        }
    }
}
