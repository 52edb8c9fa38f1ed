//! Replicated experiments: simulate data at the truth, apply each method,
//! aggregate in replication order.

use std::collections::HashSet;
use std::time::Instant;

use loci_core::{
    bootstrap_ci, bootstrap_pvalue, build_try_design, default_m, grid_design, is_ci_upper, is_pvalue_design,
    is_pvalue_refined, lhd_design, m_out_of_n_ci, nb_ci, nb_pvalue, CiResult, Error as CoreError, Model, ParamPoint,
    RefineOptions, Region, Streams, TryDesign, UnitDesign,
};
use loci_models::calibration::{BinomialModel, DegenerateModel, NormalMeanModel};
use loci_models::hdreg::{default_lambda, design_matrix, BetaSpec, HdRegModel};
use loci_models::multinomial::{check_probabilities, pi_max, sample_counts, MultinomialModel};
use loci_models::npreg::{NpRegModel, RegressionFunction};
use loci_models::weibull::{simulate as simulate_weibull, WeibullModel, WeibullParams};
use rayon::prelude::*;

use crate::config::{DesignSpec, ExperimentConfig, ExperimentKind, Method, ModelConfig};
use crate::error::{HarnessError, Result};
use crate::report::{rate_se, ReportRow, SimReport, SkippedReplication, WARNING_SAMPLE_CAP};
use crate::seeds::SeedPlan;

type CoreResult<T> = loci_core::Result<T>;

/// One simulated dataset with the model that generated it and the true target.
pub struct Draw<M: Model<f64>> {
    pub model: M,
    pub data: M::Data,
    pub truth: f64,
}

/// Exact p-value hook for models that have one.
type ExactFn<'a, M> = &'a (dyn Fn(&M, &<M as Model<f64>>::Data) -> CoreResult<f64> + Sync);

#[derive(Clone, Debug, PartialEq)]
enum Outcome {
    Interval { lower: f64, upper: f64, length: f64, covers: bool },
    PValue { p: f64 },
}

struct MethodRun {
    outcome: std::result::Result<Outcome, String>,
    warnings: Vec<String>,
}

/// Runs `cfg` as a CI or test experiment according to `cfg.experiment`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<SimReport> {
    match cfg.experiment {
        ExperimentKind::Ci => run_ci_experiment(cfg),
        ExperimentKind::Test => run_test_experiment(cfg),
    }
}

pub fn run_ci_experiment(cfg: &ExperimentConfig) -> Result<SimReport> {
    if cfg.experiment != ExperimentKind::Ci {
        return Err(HarnessError::Config("configuration is not a CI experiment".into()));
    }
    run(cfg)
}

pub fn run_test_experiment(cfg: &ExperimentConfig) -> Result<SimReport> {
    if cfg.experiment != ExperimentKind::Test {
        return Err(HarnessError::Config("configuration is not a test experiment".into()));
    }
    run(cfg)
}

fn run(cfg: &ExperimentConfig) -> Result<SimReport> {
    cfg.validate()?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    let mut acc = Accumulator::default();
    pool.install(|| dispatch(cfg, &mut acc))?;
    Ok(SimReport {
        config: cfg.clone(),
        seed: cfg.seed,
        rows: acc.rows,
        skipped: acc.skipped,
        warning_samples: acc.warning_samples,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

fn dispatch(cfg: &ExperimentConfig, acc: &mut Accumulator) -> Result<()> {
    let plan = SeedPlan::new(cfg.seed);
    let test = cfg.experiment == ExperimentKind::Test;
    match &cfg.model {
        ModelConfig::Multinomial { pi, n } => {
            check_probabilities(pi)?;
            let model = MultinomialModel::new(pi.len())?;
            let truth = pi_max(pi);
            scenario(cfg, acc, &plan, "", None, |rep, plan| {
                let data = sample_counts(pi, *n as u64, &mut plan.data_rng(rep));
                Ok(Draw { model: model.clone(), data, truth })
            })
        }
        ModelConfig::Weibull { a, b, tau, n } => {
            let params = WeibullParams::new(*a, *b, *tau)?;
            scenario(cfg, acc, &plan, "", None, |rep, plan| {
                let data = simulate_weibull(&params, *n, &mut plan.data_rng(rep));
                Ok(Draw { model: WeibullModel, data, truth: params.tau })
            })
        }
        ModelConfig::Hdreg { n, p, beta, rho, sigma, lambda, vary_sigma, power_grid } => {
            if !test {
                return Err(HarnessError::Config("the high-dimensional regression model only supports tests".into()));
            }
            if !(*sigma > 0.0) {
                return Err(HarnessError::Config(format!("sigma must be positive, got {sigma}")));
            }
            let spec = BetaSpec::named(beta)
                .ok_or_else(|| HarnessError::Config(format!("unknown beta configuration '{beta}'")))?;
            let lambda = lambda.unwrap_or_else(|| default_lambda(*n, *p));
            let hd = |spec: BetaSpec, plan: &SeedPlan, acc: &mut Accumulator, label: &str| -> Result<()> {
                let mut phi = spec.vector(*p)?;
                phi.push(sigma * sigma);
                scenario(cfg, acc, plan, label, None, |rep, plan| {
                    let x = design_matrix(*n, *p, *rho, &mut plan.aux_rng(rep))?;
                    let model = HdRegModel::with_options(x, lambda, *vary_sigma)?;
                    let data = model.simulate(&phi, *n, &mut plan.data_rng(rep));
                    Ok(Draw { model, data, truth: f64::NAN })
                })
            };
            hd(spec, &plan, acc, "")?;
            for (k, &c) in power_grid.iter().enumerate() {
                hd(BetaSpec::Power { c }, &plan.variant(k + 1), acc, &format!("c={c}"))?;
            }
            Ok(())
        }
        ModelConfig::Npreg { function, n, sigma } => {
            if test {
                return Err(HarnessError::Config("the nonparametric regression model only supports intervals".into()));
            }
            let f = RegressionFunction::parse(function)
                .ok_or_else(|| HarnessError::Config(format!("unknown regression function '{function}'")))?;
            let model = NpRegModel::standard(*n)?;
            scenario(cfg, acc, &plan, "", None, |rep, plan| {
                let data = model.simulate_true(f, *sigma, &mut plan.data_rng(rep));
                Ok(Draw { model: model.clone(), data, truth: f.minimizer() })
            })
        }
        ModelConfig::NormalMean { mu, n, sigma, known_sigma, null_upper } => {
            let mut model =
                if *known_sigma { NormalMeanModel::known_sigma(*sigma)? } else { NormalMeanModel::unknown_sigma() };
            let phi = if *known_sigma { vec![*mu] } else { vec![*mu, *sigma] };
            if test {
                let bound = null_upper.ok_or_else(|| HarnessError::Config("tests need null_upper".into()))?;
                model = model.with_null_upper(bound);
            }
            scenario(cfg, acc, &plan, "", None, |rep, plan| {
                let data = model.simulate(&phi, *n, &mut plan.data_rng(rep));
                Ok(Draw { model, data, truth: *mu })
            })
        }
        ModelConfig::Binomial { pi, n, null_upper } => {
            let model = match (test, null_upper) {
                (true, Some(b)) => BinomialModel::with_null_upper(*b)?,
                (true, None) => return Err(HarnessError::Config("tests need null_upper".into())),
                (false, _) => BinomialModel::new(),
            };
            let levels = match cfg.design {
                DesignSpec::Grid { levels } => levels,
                DesignSpec::Lhd { runs } => runs,
                DesignSpec::CenterOnly => 1,
            };
            let delta = cfg.delta;
            let exact = move |m: &BinomialModel, d: &_| m.exact_lot_pvalue(d, delta, levels);
            scenario(cfg, acc, &plan, "", Some(&exact), |rep, plan| {
                let data = model.simulate(&[*pi], *n, &mut plan.data_rng(rep));
                Ok(Draw { model, data, truth: *pi })
            })
        }
        ModelConfig::Degenerate { value } => {
            scenario(cfg, acc, &plan, "", None, |_, _| Ok(Draw { model: DegenerateModel, data: *value, truth: *value }))
        }
    }
}

/// Point estimate, neighborhood and try design for one dataset.
pub fn try_design<M: Model<f64>>(
    model: &M,
    data: &M::Data,
    design: DesignSpec,
    delta: f64,
    lhd_seed: u64,
) -> CoreResult<(ParamPoint<f64>, Region<f64>, TryDesign<f64>)> {
    let center = model.estimate(data)?;
    let region = model.neighborhood(&center, model.sample_size(data), delta)?;
    let q = region.design_dims().len();
    let unit = match design {
        _ if q == 0 => UnitDesign::empty(region.dim()),
        DesignSpec::Grid { levels } => grid_design(levels, q)?,
        DesignSpec::Lhd { runs } => lhd_design(runs, q, lhd_seed)?,
        DesignSpec::CenterOnly => UnitDesign::empty(q),
    };
    let design = build_try_design(&center, &region, &unit)?;
    Ok((center, region, design))
}

fn interval(r: CiResult<f64>, truth: f64) -> (Outcome, Vec<String>) {
    let length = match (r.lower.is_finite(), r.upper.is_finite()) {
        (true, true) => r.upper - r.lower,
        // one-sided limits are measured from the estimate
        (false, true) => r.upper - r.estimate,
        (true, false) => r.estimate - r.lower,
        (false, false) => f64::INFINITY,
    };
    (Outcome::Interval { lower: r.lower, upper: r.upper, length, covers: r.covers(truth) }, r.warnings)
}

fn ci_method<M: Model<f64>>(
    method: Method,
    draw: &Draw<M>,
    cfg: &ExperimentConfig,
    streams: &Streams,
    lhd_seed: u64,
) -> CoreResult<(Outcome, Vec<String>)> {
    let (model, data, m) = (&draw.model, &draw.data, cfg.resamples);
    let side = cfg.side.into();
    let r = match method {
        Method::Bootstrap => bootstrap_ci(model, data, m, streams, cfg.alpha, side)?,
        Method::MOutOfN => {
            let n = model.sample_size(data);
            let sub = cfg.subsample.unwrap_or_else(|| default_m(n)).min(n);
            m_out_of_n_ci(model, data, sub, m, streams, cfg.alpha, side)?
        }
        Method::LociNb => {
            let (_, _, design) = try_design(model, data, cfg.design, cfg.delta, lhd_seed)?;
            nb_ci(model, data, &design, m, streams, cfg.alpha, side)?
        }
        Method::LociIs => {
            let (_, _, design) = try_design(model, data, cfg.design, cfg.delta, lhd_seed)?;
            is_ci_upper(model, data, &design, m, streams, 1.0 - cfg.alpha)?
        }
        other => return Err(CoreError::InvalidArgument(format!("{other} is not an interval method"))),
    };
    Ok(interval(r, draw.truth))
}

fn test_method<M: Model<f64>>(
    method: Method,
    draw: &Draw<M>,
    cfg: &ExperimentConfig,
    streams: &Streams,
    lhd_seed: u64,
    exact: Option<ExactFn<'_, M>>,
) -> CoreResult<(Outcome, Vec<String>)> {
    let (model, data, m) = (&draw.model, &draw.data, cfg.resamples);
    let designed = || match try_design(model, data, cfg.design, cfg.delta, lhd_seed) {
        Ok(t) => Ok(Some(t)),
        Err(CoreError::Infeasible(_)) => Ok(None),
        Err(e) => Err(e),
    };
    let empty_null = || (Outcome::PValue { p: 0.0 }, vec!["neighborhood misses the null set; p set to 0".to_string()]);
    let r = match method {
        Method::Bootstrap => bootstrap_pvalue(model, data, m, streams)?,
        Method::LotNb => match designed()? {
            Some((_, _, design)) => nb_pvalue(model, data, &design, m, streams)?,
            None => return Ok(empty_null()),
        },
        Method::LotIsDesign => match designed()? {
            Some((_, _, design)) => is_pvalue_design(model, data, &design, m, streams)?,
            None => return Ok(empty_null()),
        },
        Method::LotIsRefined => match designed()? {
            Some((_, region, design)) => {
                is_pvalue_refined(model, data, &region, &design, m, streams, RefineOptions::default())?
            }
            None => return Ok(empty_null()),
        },
        Method::LotExact => {
            let f = exact.ok_or(CoreError::Unsupported("exact p-values"))?;
            return Ok((Outcome::PValue { p: f(model, data)? }, Vec::new()));
        }
        other => return Err(CoreError::InvalidArgument(format!("{other} is not a test method"))),
    };
    Ok((Outcome::PValue { p: r.p }, r.warnings))
}

fn scenario<M, F>(
    cfg: &ExperimentConfig,
    acc: &mut Accumulator,
    plan: &SeedPlan,
    label: &str,
    exact: Option<ExactFn<'_, M>>,
    draw: F,
) -> Result<()>
where
    M: Model<f64> + Send,
    M::Data: Send,
    F: Fn(usize, &SeedPlan) -> CoreResult<Draw<M>> + Sync,
{
    let per_rep: Vec<Vec<MethodRun>> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| {
            let d = match draw(rep, plan) {
                Ok(d) => d,
                Err(e) => {
                    let reason = format!("data generation: {e}");
                    return cfg
                        .methods
                        .iter()
                        .map(|_| MethodRun { outcome: Err(reason.clone()), warnings: Vec::new() })
                        .collect();
                }
            };
            let streams = plan.resampling(rep);
            let seed = plan.design_seed(rep);
            cfg.methods
                .iter()
                .map(|&method| {
                    let res = match cfg.experiment {
                        ExperimentKind::Ci => ci_method(method, &d, cfg, &streams, seed),
                        ExperimentKind::Test => test_method(method, &d, cfg, &streams, seed, exact),
                    };
                    match res {
                        Ok((outcome, warnings)) => MethodRun { outcome: Ok(outcome), warnings },
                        Err(e) => MethodRun { outcome: Err(e.to_string()), warnings: Vec::new() },
                    }
                })
                .collect()
        })
        .collect();
    acc.add(cfg, label, per_rep);
    Ok(())
}

#[derive(Default)]
struct Accumulator {
    rows: Vec<ReportRow>,
    skipped: Vec<SkippedReplication>,
    warning_samples: Vec<String>,
    seen: HashSet<String>,
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let k = v.len() as f64;
    let mean = v.iter().sum::<f64>() / k;
    let sd = if v.len() > 1 { (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt() } else { 0.0 };
    (mean, sd)
}

impl Accumulator {
    fn add(&mut self, cfg: &ExperimentConfig, label: &str, per_rep: Vec<Vec<MethodRun>>) {
        let metric = |name: &str| if label.is_empty() { name.to_string() } else { format!("{name}[{label}]") };
        for (j, &method) in cfg.methods.iter().enumerate() {
            let mut outcomes = Vec::new();
            let mut warned = 0;
            let mut skipped = 0;
            for (rep, runs) in per_rep.iter().enumerate() {
                let run = &runs[j];
                for w in &run.warnings {
                    if self.warning_samples.len() < WARNING_SAMPLE_CAP && self.seen.insert(w.clone()) {
                        self.warning_samples.push(format!("{method} rep {rep}: {w}"));
                    }
                }
                match &run.outcome {
                    Ok(o) => {
                        warned += usize::from(!run.warnings.is_empty());
                        outcomes.push(o.clone());
                    }
                    Err(reason) => {
                        skipped += 1;
                        self.skipped.push(SkippedReplication {
                            scenario: label.to_string(),
                            rep,
                            method: method.to_string(),
                            reason: reason.clone(),
                        });
                    }
                }
            }
            let k = outcomes.len();
            let mut row = |name: &str, value: f64, mc_se: Option<f64>| {
                self.rows.push(ReportRow {
                    method: method.to_string(),
                    metric: metric(name),
                    value,
                    mc_se,
                    reps: k,
                    warnings: warned,
                })
            };
            match cfg.experiment {
                ExperimentKind::Ci => {
                    let mut cover = Vec::with_capacity(k);
                    let mut len = Vec::with_capacity(k);
                    let mut up = Vec::with_capacity(k);
                    let mut lo = Vec::with_capacity(k);
                    for o in &outcomes {
                        if let Outcome::Interval { lower, upper, length, covers } = *o {
                            cover.push(f64::from(u8::from(covers)));
                            len.push(length);
                            up.push(upper);
                            lo.push(lower);
                        }
                    }
                    if k > 0 {
                        let cr = cover.iter().sum::<f64>() / k as f64;
                        row("coverage", cr, Some(rate_se(cr, k)));
                        let (ml, sdl) = mean_sd(&len);
                        row("mean_length", ml, Some(sdl / (k as f64).sqrt()));
                        row("sd_length", sdl, None);
                        for (name, v) in [("mean_upper", &up), ("mean_lower", &lo)] {
                            if v.iter().all(|x| x.is_finite()) {
                                let (m, s) = mean_sd(v);
                                row(name, m, Some(s / (k as f64).sqrt()));
                            }
                        }
                    }
                }
                ExperimentKind::Test => {
                    let ps: Vec<f64> = outcomes
                        .iter()
                        .filter_map(|o| if let Outcome::PValue { p } = o { Some(*p) } else { None })
                        .collect();
                    if k > 0 {
                        let rate = ps.iter().filter(|&&p| p < cfg.alpha).count() as f64 / k as f64;
                        row("rejection_rate", rate, Some(rate_se(rate, k)));
                        let (mp, sp) = mean_sd(&ps);
                        row("mean_p", mp, Some(sp / (k as f64).sqrt()));
                    }
                }
            }
            self.rows.push(ReportRow {
                method: method.to_string(),
                metric: metric("skipped"),
                value: skipped as f64,
                mc_se: None,
                reps: cfg.reps,
                warnings: 0,
            });
        }
    }
}
