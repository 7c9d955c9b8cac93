use std::path::PathBuf;

use anyhow::{anyhow, bail, ensure, Context, Result};
use clap::{Args, ValueEnum};
use smallarea_core::averaging::SelectionMode;
use smallarea_core::numerics::Bandwidth;
use smallarea_core::{AveragingConfig, Dataset, GridChoice, GridSpec, ModelTag, PipelineConfig};

pub const MIN_DRAWS: usize = 100;

#[derive(Debug, Clone, Args)]
pub struct Options {
    /// CSV file with columns id,n,r, or MISSOURI for the built-in data.
    #[arg(long, default_value = "MISSOURI")]
    pub data: String,
    /// Posterior draws per model (at least 100).
    #[arg(long, default_value_t = 10_000)]
    pub draws: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Explicit grid, e.g. normal:-5.2,-4.4,0.001,0.6 (repeatable). Models
    /// without one get an automatic grid.
    #[arg(long = "grid", value_name = "MODEL:LO1,HI1,LO2,HI2")]
    pub grids: Vec<String>,
    /// Points per grid axis.
    #[arg(long, default_value_t = 100)]
    pub grid_size: usize,
    /// Gauss-Hermite nodes for the normal-logit likelihood.
    #[arg(long, default_value_t = 20)]
    pub nodes: usize,
    /// Models included in averaging.
    #[arg(long, value_delimiter = ',', default_value = "normal,beta,saturated")]
    pub models: Vec<String>,
    /// Prior model probabilities, in the order of --models (default: equal).
    #[arg(long, value_delimiter = ',')]
    pub priors: Option<Vec<f64>>,
    /// Area ids to report densities for.
    #[arg(long, value_delimiter = ',', default_value = "1,8,17,83,84")]
    pub cities: Vec<u32>,
    /// Kernel bandwidth on the logit scale, or auto.
    #[arg(long, default_value = "auto")]
    pub bandwidth: String,
    /// Abscissae per density curve.
    #[arg(long, default_value_t = 512)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = Selection::PerDraw)]
    pub selection: Selection,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Output formats.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "csv,json")]
    pub format: Vec<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Selection {
    PerDraw,
    PerArea,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

/// Validated run settings.
#[derive(Debug, Clone)]
pub struct Settings {
    pub data: Dataset,
    pub data_source: String,
    pub pipeline: PipelineConfig,
    pub cities: Vec<(u32, usize)>,
    pub bandwidth: Bandwidth<f64>,
    pub points: usize,
    pub out: PathBuf,
    pub formats: Vec<Format>,
}

impl Settings {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

fn parse_grid(text: &str, size: usize) -> Result<(ModelTag, GridSpec)> {
    let (model, bounds) = text
        .split_once(':')
        .ok_or_else(|| anyhow!("grid `{text}` must look like model:lo1,hi1,lo2,hi2"))?;
    let model: ModelTag = model.parse()?;
    ensure!(
        model.is_parametric(),
        "grids apply only to the normal and beta models, not {model}"
    );
    let v: Vec<f64> = bounds
        .split(',')
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad grid bound `{s}`")))
        .collect::<Result<_>>()?;
    ensure!(v.len() == 4, "grid `{text}` needs exactly four bounds");
    Ok((model, GridSpec::new(v[0], v[1], v[2], v[3], size, size)?))
}

pub fn settings(o: &Options) -> Result<Settings> {
    ensure!(
        o.draws >= MIN_DRAWS,
        "--draws must be at least {MIN_DRAWS} (got {})",
        o.draws
    );
    ensure!(o.grid_size >= 2, "--grid-size must be at least 2");
    ensure!(o.points >= 2, "--points must be at least 2");
    ensure!(!o.format.is_empty(), "--format needs at least one format");

    let data = if o.data.eq_ignore_ascii_case("missouri") {
        Dataset::missouri()
    } else {
        Dataset::load_csv(&o.data)?
    };

    let mut pipeline = PipelineConfig::new(o.draws, o.seed)?;
    pipeline.quadrature_nodes = o.nodes;
    pipeline.normal_grid = GridChoice::Auto { size: o.grid_size };
    pipeline.beta_grid = GridChoice::Auto { size: o.grid_size };
    for g in &o.grids {
        let (model, spec) = parse_grid(g, o.grid_size)?;
        match model {
            ModelTag::Normal => pipeline.normal_grid = GridChoice::Explicit(spec),
            _ => pipeline.beta_grid = GridChoice::Explicit(spec),
        }
    }

    let models: Vec<ModelTag> = o.models.iter().map(|m| m.parse()).collect::<Result<_, _>>()?;
    pipeline.averaging = match &o.priors {
        None => AveragingConfig::equal(models)?,
        Some(p) => AveragingConfig::new(models, p.clone())?,
    };
    pipeline.selection = match o.selection {
        Selection::PerDraw => SelectionMode::PerDraw,
        Selection::PerArea => SelectionMode::PerArea,
    };

    let bandwidth = if o.bandwidth.eq_ignore_ascii_case("auto") {
        Bandwidth::Auto
    } else {
        let h: f64 = o
            .bandwidth
            .parse()
            .with_context(|| format!("bad bandwidth `{}`", o.bandwidth))?;
        ensure!(h > 0.0 && h.is_finite(), "--bandwidth must be positive");
        Bandwidth::Fixed(h)
    };

    let mut cities = Vec::with_capacity(o.cities.len());
    for &id in &o.cities {
        let Some(index) = data.position(id) else {
            bail!("city {id} is not in the data");
        };
        if !cities.iter().any(|c: &(u32, usize)| c.0 == id) {
            cities.push((id, index));
        }
    }

    Ok(Settings {
        data,
        data_source: o.data.clone(),
        pipeline,
        cities,
        bandwidth,
        points: o.points,
        out: o.out.clone(),
        formats: o.format.clone(),
    })
}
