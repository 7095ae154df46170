use std::path::Path;
use std::sync::Arc;

use stochcell::blockage::{estimate_los_histogram, HistogramSpec};
use stochcell::channel::{dbm_to_watts, free_space_kappa, noise_power_watts};
use stochcell::city::{generate_city, CitySpec};
use stochcell::intensity::{
    curve_3gpp_closed, curve_multiball_closed, fit_multiball, fit_multilobe, intensity_empirical,
    log_grid, FitOptions, IntensityCurve,
};
use stochcell::paramfile::{
    format_multiball, format_multilobe, parse_multiball, parse_multilobe, FitMeta,
};
use stochcell::rng::substream;
use stochcell::sim::{coverage_probability, run_scenario_suite, threshold_grid, CoverageCurve};
use stochcell::{
    AntennaModel, BlockageModel, BuildingSet, ChannelParams, Error, Fading, LinkState,
    LosHistogram, MtPlacement, MultiBallParams, MultiLobeParams, Placement, Point2D, Region,
    ScenarioConfig, StateChannel,
};

use crate::config::Config;
use crate::error::CliError;
use crate::files::{format_footprints, read_bs_file, read_footprints, write_atomic};

type Res<T> = Result<T, CliError>;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn read_text(path: &Path) -> Res<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e).into())
}

fn region(cfg: &Config) -> Res<Region> {
    Ok(Region::new(
        cfg.f64("region.x_min")?,
        cfg.f64("region.x_max")?,
        cfg.f64("region.y_min")?,
        cfg.f64("region.y_max")?,
    )?)
}

fn fading(cfg: &Config, state: &str) -> Res<Fading> {
    let key = format!("channel.fading_{state}");
    match cfg.str(&key) {
        "nakagami" => Ok(Fading::Nakagami {
            m: cfg.f64(&format!("channel.nakagami_m_{state}"))?,
            omega: 1.0,
        }),
        "rayleigh" => Ok(Fading::Rayleigh { omega: 1.0 }),
        "none" => Ok(Fading::None),
        other => Err(config_err(format!(
            "`{key}` must be nakagami, rayleigh or none, got `{other}`"
        ))),
    }
}

fn channel(cfg: &Config) -> Res<ChannelParams> {
    let kappa = free_space_kappa(cfg.f64("channel.frequency_hz")?);
    let state = |s: &str| -> Res<StateChannel> {
        Ok(StateChannel {
            kappa,
            alpha: cfg.f64(&format!("channel.alpha_{s}"))?,
            mu_db: cfg.f64(&format!("channel.mu_{s}_db"))?,
            sigma_db: cfg.f64(&format!("channel.sigma_{s}_db"))?,
            fading: fading(cfg, s)?,
        })
    };
    let ch = ChannelParams {
        los: state("los")?,
        nlos: state("nlos")?,
        r0: cfg.f64("channel.r0")?,
    };
    ch.validate()?;
    Ok(ch)
}

fn multiball_params(cfg: &Config) -> Res<MultiBallParams> {
    Ok(match cfg.str("blockage.params") {
        "london" => MultiBallParams::london(),
        "manchester" => MultiBallParams::manchester(),
        "3gpp-fit" => MultiBallParams::three_gpp_fit(),
        _ => {
            let path = cfg.path("blockage.params").expect("non-empty");
            parse_multiball(&read_text(&path)?, &path)?.0
        }
    })
}

fn blockage(cfg: &Config, name: &str) -> Res<BlockageModel> {
    Ok(match name {
        "empirical" => BlockageModel::Empirical,
        "3gpp" => BlockageModel::ThreeGpp,
        "multiball" => BlockageModel::MultiBall(multiball_params(cfg)?),
        "los" => BlockageModel::OneState(LinkState::Los),
        "nlos" => BlockageModel::OneState(LinkState::Nlos),
        other => {
            return Err(config_err(format!(
                "unknown blockage model `{other}` (empirical, 3gpp, multiball, los, nlos)"
            )))
        }
    })
}

fn antenna(cfg: &Config, name: &str) -> Res<AntennaModel> {
    Ok(match name {
        "omni" => AntennaModel::Omni,
        "3gpp" => AntennaModel::three_gpp_deg(
            cfg.f64("antenna.theta_3db_deg")?,
            cfg.f64("antenna.g_min_db")?,
        )?,
        "multilobe" => AntennaModel::MultiLobe(match cfg.str("antenna.params") {
            "3gpp-fit" => MultiLobeParams::three_gpp_fit(),
            "" => return Err(config_err("`antenna.params` is empty")),
            _ => {
                let path = cfg.path("antenna.params").expect("non-empty");
                parse_multilobe(&read_text(&path)?, &path)?.0
            }
        }),
        other => {
            return Err(config_err(format!(
                "unknown antenna model `{other}` (omni, 3gpp, multilobe)"
            )))
        }
    })
}

fn buildings(cfg: &Config) -> Res<Option<Arc<BuildingSet>>> {
    match cfg.path("buildings.file") {
        None => Ok(None),
        Some(p) => Ok(Some(Arc::new(BuildingSet::new(read_footprints(&p)?)))),
    }
}

fn density(cfg: &Config) -> Res<f64> {
    let d = cfg.f64("bs.density_per_km2")?;
    if d < 0.0 {
        return Err(config_err("`bs.density_per_km2` must be >= 0"));
    }
    Ok(d / 1e6)
}

fn placement(cfg: &Config, region: &Region) -> Res<Placement> {
    match cfg.str("bs.placement") {
        "ppp" => Ok(Placement::Ppp(density(cfg)?)),
        "file" => {
            let path = cfg
                .path("bs.file")
                .ok_or_else(|| config_err("`bs.placement = file` needs `bs.file`"))?;
            let bss = read_bs_file(&path)?;
            if let Some(b) = bss.iter().find(|b| !region.contains(b.pos)) {
                return Err(CliError::Data(format!(
                    "{}: BS {} at ({}, {}) lies outside the region",
                    path.display(),
                    b.id,
                    b.pos.x,
                    b.pos.y
                )));
            }
            Ok(Placement::Fixed(bss))
        }
        other => Err(config_err(format!(
            "`bs.placement` must be ppp or file, got `{other}`"
        ))),
    }
}

fn mt(cfg: &Config) -> Res<MtPlacement> {
    match cfg.str("mt.placement") {
        "uniform" => Ok(MtPlacement::Uniform),
        "fixed" => Ok(MtPlacement::Fixed(Point2D::new(
            cfg.f64("mt.x")?,
            cfg.f64("mt.y")?,
        ))),
        other => Err(config_err(format!(
            "`mt.placement` must be uniform or fixed, got `{other}`"
        ))),
    }
}

/// Everything needed for a scenario except the blockage and antenna choice.
struct ScenarioBase {
    region: Region,
    placement: Placement,
    mt: MtPlacement,
    channel: ChannelParams,
    p_t: f64,
    noise_power: f64,
    buildings: Option<Arc<BuildingSet>>,
}

impl ScenarioBase {
    fn load(cfg: &Config) -> Res<Self> {
        let region = region(cfg)?;
        let noise_power = if cfg.bool("channel.noise")? {
            noise_power_watts(
                cfg.f64("channel.bandwidth_hz")?,
                cfg.f64("channel.noise_figure_db")?,
            )
        } else {
            0.0
        };
        Ok(ScenarioBase {
            placement: placement(cfg, &region)?,
            mt: mt(cfg)?,
            channel: channel(cfg)?,
            p_t: dbm_to_watts(cfg.f64("channel.tx_power_dbm")?),
            noise_power,
            buildings: buildings(cfg)?,
            region,
        })
    }

    fn scenario(&self, blockage: BlockageModel, antenna: AntennaModel) -> Res<ScenarioConfig> {
        if matches!(blockage, BlockageModel::Empirical) && self.buildings.is_none() {
            return Err(config_err("empirical blockage needs `buildings.file`"));
        }
        let s = ScenarioConfig {
            placement: self.placement.clone(),
            mt: self.mt,
            blockage,
            antenna,
            channel: self.channel,
            p_t: self.p_t,
            noise_power: self.noise_power,
            region: self.region,
            buildings: self.buildings.clone(),
        };
        s.validate()?;
        Ok(s)
    }
}

/// Run-wide settings shared by every command.
pub struct Run {
    pub cfg: Config,
    pub out: std::path::PathBuf,
}

impl Run {
    fn seed(&self) -> Res<u64> {
        self.cfg.u64("sim.seed")
    }

    fn workers(&self) -> Res<usize> {
        self.cfg.usize("sim.workers")
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Res<()> {
        let path = self.out.join(name);
        write_atomic(&path, bytes)?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn write_resolved(&self) -> Res<()> {
        let text = format!("# config_hash = {}\n{}", self.cfg.hash(), self.cfg.render());
        self.write("resolved.conf", text.as_bytes())
    }

    fn write_curve(&self, stem: &str, curve: &CoverageCurve) -> Res<()> {
        let mut csv = Vec::new();
        curve.write_csv(&mut csv).expect("in-memory write");
        self.write(&format!("{stem}.csv"), &csv)?;
        let mut meta = Vec::new();
        curve
            .write_metadata(&mut meta, &self.cfg.hash())
            .expect("in-memory write");
        self.write(&format!("{stem}.meta"), &meta)
    }

    fn write_intensity(&self, name: &str, curve: &IntensityCurve) -> Res<()> {
        let mut csv = Vec::new();
        curve.write_csv(&mut csv).expect("in-memory write");
        self.write(name, &csv)
    }
}

pub fn gen_city(run: &Run) -> Res<()> {
    let cfg = &run.cfg;
    let spec = CitySpec {
        region: region(cfg)?,
        built_fraction: cfg.f64("city.built_fraction")?,
        min_size: cfg.f64("city.min_size")?,
        max_size: cfg.f64("city.max_size")?,
    };
    let seed = run.seed()?;
    let city = generate_city(&spec, &mut substream(seed, 0))?;
    let built: f64 = city.iter().map(|p| p.area()).sum();
    run.write("city.txt", format_footprints(&city).as_bytes())?;
    run.write_resolved()?;
    println!(
        "{} buildings, built fraction {:.4} (target {})",
        city.len(),
        built / spec.region.area(),
        spec.built_fraction
    );
    Ok(())
}

pub fn estimate_los(run: &Run) -> Res<()> {
    let cfg = &run.cfg;
    let region = region(cfg)?;
    let buildings =
        buildings(cfg)?.ok_or_else(|| config_err("estimate-los needs `buildings.file`"))?;
    let spec = HistogramSpec {
        lambda_bs: density(cfg)?,
        trials: cfg.u64("los.trials")?,
        delta_r: cfg.f64("los.delta_r")?,
        m_t: cfg.usize("los.m_t")?,
    };
    let hist = estimate_los_histogram(&region, &buildings, &spec, run.seed()?, run.workers()?)?;
    let mut csv = Vec::new();
    hist.write_csv(&mut csv).expect("in-memory write");
    run.write("los_histogram.csv", &csv)?;
    run.write_resolved()?;
    let samples: u64 = hist.n_samples.iter().sum();
    println!("{} trials, {samples} links recorded", spec.trials);
    Ok(())
}

pub fn fit_multiball_cmd(run: &Run) -> Res<()> {
    let cfg = &run.cfg;
    let ch = channel(cfg)?;
    let lambda = density(cfg)?;
    let range = cfg.f64("fit.range_m")?;
    if !(range > ch.r0) {
        return Err(config_err("`fit.range_m` must exceed `channel.r0`"));
    }
    let lo = ch.los.kappa * ch.r0.max(1.0).powf(ch.los.alpha);
    let x_max = ch.nlos.kappa * range.powf(ch.nlos.alpha);
    let grid = log_grid(lo, x_max, cfg.usize("fit.points")?.max(2));
    let actual = match cfg.str("fit.source") {
        "3gpp" => curve_3gpp_closed(&ch, lambda, &grid)?,
        "multiball" => curve_multiball_closed(&multiball_params(cfg)?, &ch, lambda, &grid)?,
        "histogram" => {
            let path = cfg
                .path("fit.histogram")
                .ok_or_else(|| config_err("`fit.source = histogram` needs `fit.histogram`"))?;
            let hist = LosHistogram::read_csv(&read_text(&path)?, &path)?;
            intensity_empirical(&hist, &ch, lambda, &grid)?
        }
        other => {
            return Err(config_err(format!(
                "`fit.source` must be 3gpp, multiball or histogram, got `{other}`"
            )))
        }
    };
    let opts = FitOptions {
        restarts: cfg.usize("fit.restarts")?,
        seed: run.seed()?,
        workers: run.workers()?,
        ..Default::default()
    };
    let report = fit_multiball(&actual, &ch, cfg.usize("fit.n_balls")?, x_max, &opts)?;
    let fitted = curve_multiball_closed(&report.params, &ch, lambda, &grid)?;
    run.write(
        "multiball.params",
        format_multiball(&report.params, &FitMeta::from(&report)).as_bytes(),
    )?;
    run.write_intensity("intensity_actual.csv", &actual)?;
    run.write_intensity("intensity_fitted.csv", &fitted)?;
    run.write_resolved()?;
    println!(
        "objective {:e} over {} restarts (converged: {})",
        report.objective, report.restarts, report.converged
    );
    Ok(())
}

pub fn fit_multilobe_cmd(run: &Run) -> Res<()> {
    let cfg = &run.cfg;
    let pattern = antenna(cfg, cfg.str("antenna.model"))?;
    let step = cfg.f64("fit.theta_step_deg")?;
    if !(step > 0.0 && step <= 180.0) {
        return Err(config_err("`fit.theta_step_deg` must be in (0, 180]"));
    }
    let n = (180.0 / step + 1e-9).floor() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| (i as f64 * step).to_radians()).collect();
    let report = fit_multilobe(&pattern, cfg.usize("fit.k_lobes")?, &grid)?;
    run.write(
        "multilobe.params",
        format_multilobe(&report.params, &FitMeta::from(&report)).as_bytes(),
    )?;
    run.write_resolved()?;
    println!("objective {:e}", report.objective);
    Ok(())
}

fn thresholds(cfg: &Config) -> Res<Vec<f64>> {
    Ok(threshold_grid(
        cfg.f64("thresholds.start_db")?,
        cfg.f64("thresholds.stop_db")?,
        cfg.f64("thresholds.step_db")?,
    )?)
}

fn iterations(cfg: &Config) -> Res<u64> {
    match cfg.u64("sim.iterations")? {
        0 => Err(config_err("`sim.iterations` must be >= 1")),
        n => Ok(n),
    }
}

pub fn simulate(run: &Run) -> Res<()> {
    let cfg = &run.cfg;
    let base = ScenarioBase::load(cfg)?;
    let scenario = base.scenario(
        blockage(cfg, cfg.str("blockage.model"))?,
        antenna(cfg, cfg.str("antenna.model"))?,
    )?;
    let ts = thresholds(cfg)?;
    let curve = coverage_probability(
        &scenario,
        &ts,
        iterations(cfg)?,
        run.seed()?,
        run.workers()?,
    )?;
    run.write_curve("coverage", &curve)?;
    run.write_resolved()?;
    println!(
        "{}: {} thresholds, {} iterations",
        curve.label,
        ts.len(),
        curve.iterations
    );
    Ok(())
}

fn slug(label: &str) -> String {
    let mut s = String::new();
    for c in label.chars() {
        if c.is_ascii_alphanumeric() {
            s.push(c.to_ascii_lowercase());
        } else if !s.ends_with('-') {
            s.push('-');
        }
    }
    s.trim_matches('-').to_string()
}

pub fn suite(run: &Run) -> Res<()> {
    let cfg = &run.cfg;
    let base = ScenarioBase::load(cfg)?;
    let mut scenarios = Vec::new();
    for b in cfg.list("suite.blockage") {
        for a in cfg.list("suite.antenna") {
            scenarios.push(base.scenario(blockage(cfg, &b)?, antenna(cfg, &a)?)?);
        }
    }
    let ts = thresholds(cfg)?;
    let curves = run_scenario_suite(
        &scenarios,
        &ts,
        iterations(cfg)?,
        run.seed()?,
        run.workers()?,
    )?;
    let mut index = String::from("label,file,seed\n");
    for (i, c) in curves.iter().enumerate() {
        let stem = format!("coverage_{:02}_{}", i + 1, slug(&c.label));
        run.write_curve(&stem, c)?;
        index += &format!("\"{}\",{stem}.csv,{}\n", c.label, c.seed);
    }
    run.write("suite.csv", index.as_bytes())?;
    run.write_resolved()?;
    println!("{} scenarios", curves.len());
    Ok(())
}
