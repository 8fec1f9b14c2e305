use anyhow::Result;
use levy_bridge::mc::{
    conditional_histogram, default_window, empirical_cov, option_check, posterior_binning, tower_check, McReport,
    ProcessBuilder,
};
use levy_bridge::{DefaultTimeLaw, LevyLaw, MarketModel, PayoffDistribution, Seed};

use crate::commands::Header;
use crate::config::{Suite, VerifyArgs};

fn binary(levy: LevyLaw) -> Result<MarketModel> {
    Ok(MarketModel::new(1.0, 1.0, PayoffDistribution::binary(0.0, 1.0, 0.5)?, levy)?)
}

fn kappa() -> Result<MarketModel> {
    Ok(binary(LevyLaw::Gamma)?.with_default_law(DefaultTimeLaw::atoms(vec![0.3, 0.6, 0.9], vec![0.3, 0.3, 0.4])?)?)
}

struct Run {
    seed: Seed,
    next: u64,
    out: String,
    failed: usize,
}

impl Run {
    fn seed(&mut self) -> Seed {
        self.next += 1;
        self.seed.derive(self.next)
    }

    fn record(&mut self, check: &str, rep: &McReport) {
        if !rep.pass() {
            self.failed += 1;
        }
        self.out.push_str(&rep.csv_row(check));
        self.out.push('\n');
    }
}

/// Runs the suite; returns the header, the report CSV and the number of failed checks.
pub fn run(a: &VerifyArgs) -> Result<(Header, String, usize)> {
    let full = a.suite == Suite::Full;
    let n = if full { 200_000 } else { 20_000 };
    let mut run = Run { seed: Seed(a.seed), next: 0, out: format!("{}\n", McReport::CSV_HEADER), failed: 0 };

    let poisson = LevyLaw::poisson(1.0)?;
    let builders = [
        ("brownian", ProcessBuilder::Brownian { horizon: 1.0 }),
        ("bridge", ProcessBuilder::Bridge { horizon: 1.0 }),
        ("bar", ProcessBuilder::BarBeta { horizon: 1.0 }),
        ("tilde", ProcessBuilder::TildeBeta { horizon: 1.0 }),
        ("zeta_gamma", ProcessBuilder::Zeta { horizon: 1.0, law: LevyLaw::Gamma }),
        ("zeta_poisson", ProcessBuilder::Zeta { horizon: 1.0, law: poisson }),
    ];
    for (name, b) in &builders {
        for (s, t) in [(0.25, 0.5), (0.5, 0.75)] {
            let seed = run.seed();
            let rep = empirical_cov(b, s, t, n, seed)?;
            run.record(&format!("cov_{name}_{s}_{t}"), &rep);
        }
    }

    // Posterior probes sit near the centre of the observation law and, for κ,
    // off both default rays.
    let models = [
        ("gamma", binary(LevyLaw::Gamma)?, 0.8),
        ("poisson", binary(poisson)?, 0.8),
        ("kappa", kappa()?, 0.35),
    ];
    for (name, m, x) in &models {
        let (t, x) = (0.5, *x);
        let seed = run.seed();
        for (i, rep) in posterior_binning(m, t, x, None, 5 * n, seed)?.iter().enumerate() {
            run.record(&format!("posterior_{name}_atom{i}"), rep);
        }
        for t in [0.25, 0.75] {
            let seed = run.seed();
            let rep = tower_check(m, t, n, seed)?;
            run.record(&format!("tower_{name}_{t}"), &rep);
        }
        let seed = run.seed();
        let rep = option_check(m, 0.5, 0.5, n, seed)?;
        run.record(&format!("option_{name}"), &rep);
    }

    if full {
        let (t, u, x) = (0.3, 0.6, 0.3);
        let edges = [-1.5, -0.3, -0.1, 0.05, 0.2, 0.35, 0.5, 0.7, 1.0, 3.0];
        let b = ProcessBuilder::Zeta { horizon: 1.0, law: LevyLaw::Gamma };
        let seed = run.seed();
        for (k, rep) in conditional_histogram(&b, t, u, x, default_window(t, 1.0), &edges, 500_000, seed)?
            .iter()
            .enumerate()
        {
            run.record(&format!("histogram_bin{k}"), rep);
        }
    }

    let suite = if full { "full" } else { "quick" };
    let header = Header::new("verify").field("suite", suite).field("seed", a.seed).field("failed", run.failed);
    Ok((header, run.out, run.failed))
}
