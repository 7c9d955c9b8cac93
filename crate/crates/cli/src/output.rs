use std::fmt::Write as _;
use std::fs;

use anyhow::{Context, Result};
use serde_json::{json, Map, Value};
use smallarea_core::pipeline::{fit_both, run, CurveFamily, ModelFit};
use smallarea_core::{Analysis, KdeCurve, ModelTag};

use crate::options::{settings, Format, Options, Settings};
use crate::svg::{self, Series};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy)]
pub struct Stages {
    pub compare: bool,
    pub areas: bool,
    pub average: bool,
}

impl Stages {
    pub const FIT: Stages = Stages {
        compare: false,
        areas: false,
        average: false,
    };
    pub const COMPARE: Stages = Stages {
        compare: true,
        areas: false,
        average: false,
    };
    pub const AREAS: Stages = Stages {
        compare: false,
        areas: true,
        average: false,
    };
    pub const AVERAGE: Stages = Stages {
        compare: false,
        areas: false,
        average: true,
    };
    pub const ALL: Stages = Stages {
        compare: true,
        areas: true,
        average: true,
    };

    fn needs_draws(self) -> bool {
        self.compare || self.areas || self.average
    }
}

struct Writer<'a> {
    settings: &'a Settings,
    written: Vec<String>,
}

impl Writer<'_> {
    fn file(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.settings.out.join(name);
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(name.to_owned());
        Ok(())
    }

    /// A two-column curve as CSV, with an SVG twin when requested.
    fn curve(&mut self, stem: &str, header: (&str, &str), xs: &[f64], ys: &[f64], title: &str) -> Result<()> {
        if self.settings.wants(Format::Csv) {
            self.file(&format!("{stem}.csv"), &two_columns(header, xs, ys))?;
        }
        if self.settings.wants(Format::Svg) {
            let series = [Series { name: header.1, xs, ys }];
            self.file(&format!("{stem}.svg"), &svg::render(title, header.0, header.1, &series))?;
        }
        Ok(())
    }

    fn overlay(&mut self, stem: &str, title: &str, axes: (&str, &str), series: &[Series<'_>]) -> Result<()> {
        if self.settings.wants(Format::Svg) {
            self.file(&format!("{stem}.svg"), &svg::render(title, axes.0, axes.1, series))?;
        }
        Ok(())
    }
}

fn two_columns(header: (&str, &str), xs: &[f64], ys: &[f64]) -> String {
    let mut s = format!("{},{}\n", header.0, header.1);
    for (x, y) in xs.iter().zip(ys) {
        let _ = writeln!(s, "{x},{y}");
    }
    s
}

fn grid_csv(fit: &ModelFit<f64>) -> String {
    let (a, b) = fit.model.axis_names();
    let mut s = format!("{a},{b},loglik,mass\n");
    for (x, y, l, m) in fit.grid.rows() {
        let _ = writeln!(s, "{x},{y},{l},{m}");
    }
    s
}

fn fit_json(fit: &ModelFit<f64>) -> Value {
    let (a, b) = fit.model.axis_names();
    let spec = fit.grid.spec();
    let s = &fit.summary;
    json!({
        "parameters": [a, b],
        "grid": {
            "lower": [spec.lo1, spec.lo2],
            "upper": [spec.hi1, spec.hi2],
            "points": [spec.g1, spec.g2],
        },
        "mle": [s.mle.0, s.mle.1],
        "max_loglik": s.max_loglik,
        "frequentist_deviance": s.frequentist_deviance,
        "mean_deviance": s.mean_deviance,
        "p_d": s.p_d,
        "dic": s.dic,
        "refined_mle": {
            "point": [fit.refined.first, fit.refined.second],
            "loglik": fit.refined.loglik,
        },
    })
}

fn pairs_json(pairs: Vec<(ModelTag, f64)>) -> Value {
    Value::Object(
        pairs
            .into_iter()
            .map(|(m, p)| (m.name().to_owned(), json!(p)))
            .collect(),
    )
}

pub fn execute(options: &Options, stages: Stages) -> Result<()> {
    let settings = settings(options)?;
    fs::create_dir_all(&settings.out).with_context(|| format!("cannot create {}", settings.out.display()))?;
    eprintln!("data: {} areas from {}", settings.data.len(), settings.data_source);

    let mut summary = Map::new();
    summary.insert("schema_version".into(), json!(SCHEMA_VERSION));
    summary.insert(
        "data".into(),
        json!({
            "source": settings.data_source,
            "areas": settings.data.len(),
            "events": settings.data.total_events(),
            "population": settings.data.total_population(),
        }),
    );
    let cfg = &settings.pipeline;
    summary.insert(
        "config".into(),
        json!({
            "draws": cfg.draws,
            "seed": cfg.seed,
            "quadrature_nodes": cfg.quadrature_nodes,
            "models": cfg.averaging.models(),
            "priors": cfg.averaging.priors(),
            "selection": cfg.selection,
            "cities": settings.cities.iter().map(|c| c.0).collect::<Vec<_>>(),
        }),
    );

    let mut w = Writer {
        settings: &settings,
        written: Vec::new(),
    };

    let analysis: Option<Analysis>;
    let (normal, beta) = if stages.needs_draws() {
        eprintln!("fitting grids and drawing {} posterior samples per model", cfg.draws);
        analysis = Some(run(&settings.data, cfg)?);
        let a = analysis.as_ref().unwrap();
        (a.normal.clone(), a.beta.clone())
    } else {
        eprintln!("fitting grids");
        analysis = None;
        fit_both(&settings.data, cfg)?
    };

    if settings.wants(Format::Csv) {
        w.file("grid_normal.csv", &grid_csv(&normal))?;
        w.file("grid_beta.csv", &grid_csv(&beta))?;
    }
    summary.insert(
        "fits".into(),
        json!({ "normal": fit_json(&normal), "beta": fit_json(&beta) }),
    );

    if let Some(a) = &analysis {
        if stages.compare {
            eprintln!("comparing deviance distributions");
            compare_outputs(&mut w, &mut summary, a)?;
        }
        if stages.areas || stages.average {
            eprintln!("estimating area densities");
            area_outputs(&mut w, &mut summary, a, stages)?;
        }
        if stages.average {
            summary.insert(
                "averaging".into(),
                json!({
                    "mean_probabilities": pairs_json(a.probabilities.mean_probs()),
                    "selection_frequencies": pairs_json(a.averaged.selection_frequencies()),
                    "typical_normal_frequency": a.typical_average.from_normal.iter().filter(|&&b| b).count() as f64
                        / a.typical_average.from_normal.len() as f64,
                }),
            );
        }
    }

    if settings.wants(Format::Json) {
        let mut outputs = w.written.clone();
        outputs.push("summary.json".into());
        outputs.sort();
        summary.insert("outputs".into(), json!(outputs));
        let text = serde_json::to_string_pretty(&Value::Object(summary))? + "\n";
        w.file("summary.json", &text)?;
    }
    eprintln!("wrote {} files to {}", w.written.len(), settings.out.display());
    Ok(())
}

fn compare_outputs(w: &mut Writer<'_>, summary: &mut Map<String, Value>, a: &Analysis) -> Result<()> {
    let mut dists = Map::new();
    let mut cdf_series = Vec::new();
    for (tag, d) in &a.distributions {
        w.curve(
            &format!("cdf_{tag}"),
            ("deviance", "cum_prob"),
            d.values(),
            d.cum_probs(),
            &format!("Posterior deviance distribution, {tag} model"),
        )?;
        cdf_series.push(Series {
            name: tag.name(),
            xs: d.values(),
            ys: d.cum_probs(),
        });
        dists.insert(
            tag.name().into(),
            json!({
                "source": d.source(),
                "support": d.support_size(),
                "min": d.min(),
                "median": d.median(),
                "mean": d.mean(),
                "interquartile_range": d.interquartile_range(),
            }),
        );
    }
    w.overlay(
        "cdf_all",
        "Posterior deviance distributions",
        ("deviance", "cum_prob"),
        &cdf_series,
    )?;
    summary.insert("deviance".into(), Value::Object(dists));

    for c in &a.comparisons {
        let mut sorted = c.differences.clone();
        sorted.sort_by(f64::total_cmp);
        let t = sorted.len() as f64;
        let probs: Vec<f64> = (1..=sorted.len()).map(|k| k as f64 / t).collect();
        w.curve(
            &format!("diff_{}_{}", c.first, c.second),
            ("difference", "cum_prob"),
            &sorted,
            &probs,
            &format!("Deviance difference, {} minus {}", c.first, c.second),
        )?;
    }
    summary.insert("comparisons".into(), serde_json::to_value(&a.comparisons)?);
    Ok(())
}

fn area_outputs(w: &mut Writer<'_>, summary: &mut Map<String, Value>, a: &Analysis, stages: Stages) -> Result<()> {
    let settings = w.settings;
    let wanted = |f: CurveFamily| match f {
        CurveFamily::Averaged => stages.average,
        _ => stages.areas,
    };
    let mut modes = Map::new();
    for &(id, index) in &settings.cities {
        let curves = a.area_curves(index, settings.bandwidth, settings.points)?;
        let curves: Vec<&(CurveFamily, KdeCurve)> = curves.iter().filter(|c| wanted(c.0)).collect::<Vec<_>>();
        let mut city = Map::new();
        for (family, curve) in &curves {
            w.curve(
                &format!("density_{id}_{}", family.name()),
                ("logit", "density"),
                &curve.abscissae,
                &curve.densities,
                &format!("Area {id}, {} posterior", family.name()),
            )?;
            city.insert(
                family.name().into(),
                json!({ "mode": curve.mode(), "bandwidth": curve.bandwidth }),
            );
        }
        let series: Vec<Series<'_>> = curves
            .iter()
            .map(|(f, c)| Series {
                name: f.name(),
                xs: &c.abscissae,
                ys: &c.densities,
            })
            .collect();
        w.overlay(
            &format!("density_{id}"),
            &format!("Area {id}"),
            ("logit", "density"),
            &series,
        )?;
        modes.insert(id.to_string(), Value::Object(city));
    }

    let typical = a.typical_curves(settings.bandwidth, settings.points)?;
    let typical: Vec<&(&str, KdeCurve)> = typical
        .iter()
        .filter(|(name, _)| {
            if *name == "averaged" {
                stages.average
            } else {
                stages.areas
            }
        })
        .collect();
    for (name, curve) in &typical {
        w.curve(
            &format!("typical_{name}"),
            ("logit", "density"),
            &curve.abscissae,
            &curve.densities,
            &format!("Typical area, {name}"),
        )?;
    }
    let series: Vec<Series<'_>> = typical
        .iter()
        .map(|(n, c)| Series {
            name: n,
            xs: &c.abscissae,
            ys: &c.densities,
        })
        .collect();
    w.overlay("typical", "Typical area", ("logit", "density"), &series)?;

    let adjusted: Vec<u32> = a.draws.aligned.get(ModelTag::Normal)?.areas.adjusted_areas().to_vec();
    summary.insert(
        "areas".into(),
        json!({ "curves": modes, "adjusted_all_events": adjusted }),
    );
    Ok(())
}
