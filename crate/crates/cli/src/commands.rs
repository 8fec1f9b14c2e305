use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path as FsPath;

use anyhow::{bail, Context, Result};
use levy_bridge::default::{bond_price_default, option_value_default, DefaultQuote};
use levy_bridge::gaussian::{kernel_a, CovKernel, TimeChange};
use levy_bridge::grid::fmt17;
use levy_bridge::par::map_indexed;
use levy_bridge::pricing::{bond_price, option_value, PriceQuote};
use levy_bridge::stochastic::{
    bridge_from_brownian, brownian_with, build_bar_beta, build_eta, build_kappa, build_tilde_beta, build_zeta,
    levy_with,
};
use levy_bridge::transition::TransitionKernel;
use levy_bridge::{
    DefaultTimeLaw, LevyLaw, MarketModel, Path, PayoffDistribution, Seed, TimeGrid,
};

use crate::config::{
    Command, DensityArgs, KernelArgs, KernelKind, LevyKind, NoiseArgs, OptionArgs, PriceArgs, Process, RunConfig,
    SimulateArgs, TimeChangeKind,
};
use crate::verify;

/// Provenance comment written as the first line of every output.
pub struct Header {
    command: &'static str,
    fields: Vec<(String, String)>,
}

impl Header {
    pub fn new(command: &'static str) -> Self {
        Header { command, fields: Vec::new() }
    }

    pub fn field(mut self, key: &str, value: impl ToString) -> Self {
        self.fields.push((key.to_string(), value.to_string()));
        self
    }

    pub fn model(self, path: Option<&FsPath>, model: &MarketModel) -> Self {
        let h = match path {
            Some(p) => self.field("model", p.display()),
            None => self,
        };
        h.field("model_json", model.to_json_compact())
    }

    fn render(&self) -> String {
        let mut line = format!("# levy-bridge {}", self.command);
        for (k, v) in &self.fields {
            let _ = write!(line, " {k}={v}");
        }
        line.push('\n');
        line
    }
}

pub fn run(config: &RunConfig) -> Result<()> {
    let (header, body) = match &config.command {
        Command::Simulate(a) => simulate(a)?,
        Command::Price(a) => price(a)?,
        Command::Option(a) => option(a)?,
        Command::Density(a) => density(a)?,
        Command::Kernels(a) => kernels(a)?,
        Command::Verify(a) => {
            let (header, body, failed) = verify::run(a)?;
            emit(config, &header, &body)?;
            if failed > 0 {
                bail!("{failed} verification checks failed");
            }
            return Ok(());
        }
    };
    emit(config, &header, &body)
}

fn emit(config: &RunConfig, header: &Header, body: &str) -> Result<()> {
    let text = header.render() + body;
    match &config.output {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}

pub fn load_model(path: &FsPath) -> Result<MarketModel> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read model file {}", path.display()))?;
    MarketModel::from_json(&text).with_context(|| format!("invalid model file {}", path.display()))
}

fn noise_law(noise: &NoiseArgs) -> Result<LevyLaw> {
    Ok(match noise.levy {
        LevyKind::Gamma => LevyLaw::Gamma,
        LevyKind::Poisson => LevyLaw::poisson(noise.lambda)?,
        LevyKind::None => LevyLaw::None,
    })
}

fn noise_fields(h: Header, noise: &NoiseArgs) -> Header {
    let h = h.field("levy", format!("{:?}", noise.levy).to_lowercase());
    let h = if noise.levy == LevyKind::Poisson { h.field("lambda", noise.lambda) } else { h };
    h.field("T", noise.horizon)
}

/// Bernoulli(0.5) payoff on {0, 1}, σ = μ = 1, zero rates; `τ` exponential
/// with rate 0.1 on `(0, T]` when a default law is wanted.
fn default_model(noise: &NoiseArgs, with_default: bool) -> Result<MarketModel> {
    let payoff = PayoffDistribution::binary(0.0, 1.0, 0.5)?;
    let m = MarketModel::new(noise.horizon, 1.0, payoff, noise_law(noise)?)?;
    Ok(if with_default {
        m.with_default_law(DefaultTimeLaw::Exponential { rate: 0.1, horizon: noise.horizon })?
    } else {
        m
    })
}

/// One observation path of `η` (no default law) or `κ`.
fn observation_path(model: &MarketModel, grid: &TimeGrid, seed: Seed, stream: u64) -> Result<Path> {
    let mut rng = seed.stream(stream);
    let h = model.payoff.support()[model.payoff.sample_index(&mut rng)];
    match &model.default_law {
        None => {
            let w = brownian_with(grid, &mut rng);
            let x = levy_with(&model.levy, grid, &mut rng);
            Ok(build_eta(model, h, &build_zeta(&w, &x)?))
        }
        Some(law) => {
            let tau = law.sample(&mut rng);
            let w = brownian_with(grid, &mut rng);
            let x = levy_with(&model.levy, grid, &mut rng);
            Ok(build_kappa(model, tau, h, &w, &x)?)
        }
    }
}

fn table(grid: &TimeGrid, paths: &[Path]) -> String {
    let mut out = String::from("t");
    for k in 0..paths.len() {
        let _ = write!(out, ",path_{k}");
    }
    out.push('\n');
    for (i, t) in grid.points().iter().enumerate() {
        out.push_str(&fmt17(*t));
        for p in paths {
            out.push(',');
            out.push_str(&fmt17(p.values()[i]));
        }
        out.push('\n');
    }
    out
}

fn simulate(a: &SimulateArgs) -> Result<(Header, String)> {
    if a.steps == 0 || a.paths == 0 {
        bail!("--steps and --paths must be positive");
    }
    let seed = Seed(a.seed);
    let mut header = Header::new("simulate").field("process", format!("{:?}", a.process).to_lowercase());
    let paths: Vec<Result<Path>>;
    let grid;
    match a.process {
        Process::Eta | Process::Kappa => {
            let model = match &a.model {
                Some(p) => load_model(p)?,
                None => default_model(&a.noise, a.process == Process::Kappa)?,
            };
            if (a.process == Process::Kappa) != model.default_law.is_some() {
                bail!("process {:?} needs a model {} a default law", a.process, if a.process == Process::Kappa { "with" } else { "without" });
            }
            header = header.model(a.model.as_deref(), &model);
            grid = TimeGrid::uniform(model.horizon, a.steps)?;
            paths = map_indexed(a.paths, |k| observation_path(&model, &grid, seed, k as u64));
        }
        process => {
            let law = noise_law(&a.noise)?;
            header = noise_fields(header, &a.noise);
            grid = TimeGrid::uniform(a.noise.horizon, a.steps)?;
            paths = map_indexed(a.paths, |k| {
                let mut rng = seed.stream(k as u64);
                let w = brownian_with(&grid, &mut rng);
                Ok(match process {
                    Process::Brownian => w,
                    Process::Bridge => bridge_from_brownian(&w),
                    Process::Bar => build_bar_beta(&w, &brownian_with(&grid, &mut rng))?,
                    Process::Tilde => build_tilde_beta(&w, &brownian_with(&grid, &mut rng))?,
                    _ => build_zeta(&w, &levy_with(&law, &grid, &mut rng))?,
                })
            });
        }
    }
    let paths = paths.into_iter().collect::<Result<Vec<_>>>()?;
    let header = header.field("steps", a.steps).field("paths", a.paths).field("seed", a.seed);
    Ok((header, table(&grid, &paths)))
}

enum Quote {
    Plain(PriceQuote),
    Default(DefaultQuote),
}

fn quote(model: &MarketModel, t: f64, x: f64) -> Result<Quote> {
    Ok(match model.default_law {
        None => Quote::Plain(bond_price(model, t, x)?),
        Some(_) => Quote::Default(bond_price_default(model, t, x)?),
    })
}

fn quote_header(model: &MarketModel) -> String {
    match model.default_law {
        None => PriceQuote::csv_header(model.payoff.len()),
        Some(_) => DefaultQuote::CSV_HEADER.to_string(),
    }
}

fn quote_row(q: &Quote) -> String {
    match q {
        Quote::Plain(q) => q.csv_row(),
        Quote::Default(q) => q.csv_row(),
    }
}

fn price(a: &PriceArgs) -> Result<(Header, String)> {
    let model = load_model(&a.model)?;
    let header = Header::new("price").model(Some(&a.model), &model);
    if let Some(n) = a.paths {
        if n == 0 || a.steps == 0 {
            bail!("--paths and --steps must be positive");
        }
        if a.t.is_some() || a.x.is_some() {
            bail!("--paths prices along simulated paths; drop --t/--x");
        }
        let grid = TimeGrid::uniform(model.horizon, a.steps)?;
        let seed = Seed(a.seed);
        let paths = map_indexed(n, |k| observation_path(&model, &grid, seed, k as u64))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let points: Vec<(usize, f64, f64)> =
            paths.iter().enumerate().flat_map(|(k, p)| p.iter().map(move |(t, x)| (k, t, x))).collect();
        let quotes = map_indexed(points.len(), |i| quote(&model, points[i].1, points[i].2));
        let mut out = format!("path,{}\n", quote_header(&model));
        for ((k, _, _), q) in points.iter().zip(quotes) {
            let _ = writeln!(out, "{k},{}", quote_row(&q?));
        }
        let header = header.field("paths", n).field("steps", a.steps).field("seed", a.seed);
        return Ok((header, out));
    }
    let Some(t) = a.t else { bail!("price needs --t (or --paths)") };
    let xs: Vec<f64> = match (a.x, a.x_from, a.x_to) {
        (Some(x), None, None) => vec![x],
        (None, Some(lo), Some(hi)) => {
            if a.x_steps == 0 || !(hi > lo) {
                bail!("x sweep needs x-from < x-to and x-steps > 0");
            }
            (0..=a.x_steps).map(|k| lo + (hi - lo) * k as f64 / a.x_steps as f64).collect()
        }
        _ => bail!("give either --x or both --x-from and --x-to"),
    };
    let quotes = map_indexed(xs.len(), |i| quote(&model, t, xs[i]));
    let mut out = quote_header(&model) + "\n";
    for q in quotes {
        out.push_str(&quote_row(&q?));
        out.push('\n');
    }
    let header = header.field("t", t);
    let header = match (a.x, a.x_from, a.x_to) {
        (Some(x), _, _) => header.field("x", x),
        (_, Some(lo), Some(hi)) => header.field("x_from", lo).field("x_to", hi).field("x_steps", a.x_steps),
        _ => header,
    };
    Ok((header, out))
}

fn option(a: &OptionArgs) -> Result<(Header, String)> {
    let model = load_model(&a.model)?;
    let values = map_indexed(a.strikes.len(), |i| match model.default_law {
        None => option_value(&model, a.t, a.strikes[i]),
        Some(_) => option_value_default(&model, a.t, a.strikes[i]),
    });
    let mut out = String::from("t,K,value\n");
    for (k, v) in a.strikes.iter().zip(values) {
        let _ = writeln!(out, "{},{},{}", fmt17(a.t), fmt17(*k), fmt17(v?));
    }
    let strikes: Vec<String> = a.strikes.iter().map(f64::to_string).collect();
    let header = Header::new("option").model(Some(&a.model), &model).field("t", a.t).field("K", strikes.join(";"));
    Ok((header, out))
}

fn density(a: &DensityArgs) -> Result<(Header, String)> {
    let (law, horizon, header) = match &a.model {
        Some(p) => {
            let m = load_model(p)?;
            (m.levy, m.horizon, Header::new("density").model(Some(p), &m))
        }
        None => (noise_law(&a.noise)?, a.noise.horizon, noise_fields(Header::new("density"), &a.noise)),
    };
    if a.points < 2 {
        bail!("--points must be at least 2");
    }
    let kernel = TransitionKernel::new(law, horizon, a.t, a.u, a.x)?;
    let (lo, hi) = match (a.y_from, a.y_to) {
        (Some(lo), Some(hi)) => (lo, hi),
        (lo, hi) => {
            let (plo, phi) = kernel.plot_range()?;
            (lo.unwrap_or(plo), hi.unwrap_or(phi))
        }
    };
    if !(hi > lo) {
        bail!("empty y range [{lo}, {hi}]");
    }
    let ys: Vec<f64> = (0..a.points).map(|k| lo + (hi - lo) * k as f64 / (a.points - 1) as f64).collect();
    let values = map_indexed(ys.len(), |i| kernel.density(ys[i]));
    let mut out = String::from("y,psi\n");
    for (y, v) in ys.iter().zip(values) {
        let _ = writeln!(out, "{},{}", fmt17(*y), fmt17(v?));
    }
    let header = header
        .field("t", a.t)
        .field("u", a.u)
        .field("x", a.x)
        .field("y_from", lo)
        .field("y_to", hi)
        .field("points", a.points);
    Ok((header, out))
}

fn kernels(a: &KernelArgs) -> Result<(Header, String)> {
    if a.steps == 0 {
        bail!("--steps must be positive");
    }
    let horizon = a.noise.horizon;
    let grid = TimeGrid::uniform(horizon, a.steps)?;
    let kind = format!("{:?}", a.kernel).to_lowercase();
    let header = Header::new("kernels").field("kernel", &kind).field("T", horizon).field("steps", a.steps);
    let body = match a.kernel {
        KernelKind::A => {
            let mut out = String::from("s,u,value\n");
            for &s in grid.points().iter().filter(|s| **s < horizon) {
                for &u in grid.points().iter().filter(|u| **u <= s) {
                    let _ = writeln!(out, "{},{},{}", fmt17(s), fmt17(u), fmt17(kernel_a(s, u, horizon)?));
                }
            }
            return Ok((header, out));
        }
        KernelKind::Brownian => CovKernel::brownian(horizon),
        KernelKind::Bridge => CovKernel::bridge(horizon),
        KernelKind::Bar => CovKernel::bar(horizon),
        KernelKind::Tilde => CovKernel::tilde(horizon),
        KernelKind::Zeta => CovKernel::zeta(horizon, noise_law(&a.noise)?),
        KernelKind::Hat => {
            let psi = match a.psi {
                TimeChangeKind::Constant => TimeChange::new(horizon, |_| 1.0)?,
                TimeChangeKind::Decreasing => TimeChange::new(horizon, |t| (-t).exp())?,
                TimeChangeKind::Increasing => TimeChange::new(horizon, |t| 1.0 + t)?,
            };
            CovKernel::hat(horizon, a.sigma, psi)
        }
    };
    let header = match a.kernel {
        KernelKind::Zeta => noise_fields(header, &a.noise),
        KernelKind::Hat => header.field("sigma", a.sigma).field("psi", format!("{:?}", a.psi).to_lowercase()),
        _ => header,
    };
    Ok((header, body.to_csv(&grid)))
}
