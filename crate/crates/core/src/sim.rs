//! Monte Carlo downlink coverage of a typical mobile terminal.

use std::io::Write;
use std::sync::Arc;

use rand::Rng;

use crate::blockage::{
    empirical_link_state, sample_link_state, sample_outdoor, BlockageModel, LinkState,
    OUTDOOR_TRIES,
};
use crate::channel::{
    db_to_linear, interferer_gain_sample, path_loss, sample_fading_power, sample_shadowing,
    AntennaModel, ChannelParams,
};
use crate::error::{Error, Result};
use crate::geom::{sample_ppp, BaseStation, BuildingSet, Point2D, Region};
use crate::rng::{derive_seed, par_map, substream};

/// Where the base stations come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Placement {
    /// Fresh PPP of this density (per m²) in every iteration.
    Ppp(f64),
    /// Fixed positions, e.g. loaded from a BS file.
    Fixed(Vec<BaseStation>),
}

/// Where the typical MT is placed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MtPlacement {
    /// Uniform over the region, excluding building interiors when the
    /// blockage model is empirical.
    Uniform,
    Fixed(Point2D),
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub placement: Placement,
    pub mt: MtPlacement,
    pub blockage: BlockageModel,
    /// Shared by BSs and the MT.
    pub antenna: AntennaModel,
    pub channel: ChannelParams,
    /// Transmit power (W).
    pub p_t: f64,
    /// Noise power (W); zero gives an interference-limited network.
    pub noise_power: f64,
    pub region: Region,
    pub buildings: Option<Arc<BuildingSet>>,
}

impl ScenarioConfig {
    /// Urban defaults: 30 dBm transmit power, 20 MHz noise with a 10 dB
    /// noise figure, omni antennas, uniform MT.
    pub fn urban(placement: Placement, blockage: BlockageModel, region: Region) -> Self {
        ScenarioConfig {
            placement,
            mt: MtPlacement::Uniform,
            blockage,
            antenna: AntennaModel::Omni,
            channel: ChannelParams::urban_default(),
            p_t: crate::channel::dbm_to_watts(30.0),
            noise_power: crate::channel::noise_power_watts(20e6, 10.0),
            region,
            buildings: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        if !(self.p_t > 0.0) || !self.p_t.is_finite() {
            return Err(Error::param("transmit power must be > 0"));
        }
        if !(self.noise_power >= 0.0) || !self.noise_power.is_finite() {
            return Err(Error::param("noise power must be >= 0"));
        }
        if let Placement::Ppp(l) = self.placement {
            if !(l >= 0.0) || !l.is_finite() {
                return Err(Error::param("BS density must be >= 0"));
            }
        }
        if matches!(self.blockage, BlockageModel::Empirical) && self.buildings.is_none() {
            return Err(Error::Usage(
                "empirical blockage needs building footprints".into(),
            ));
        }
        Ok(())
    }

    /// Descriptor such as `PPP, Multi-Ball, Omni`.
    pub fn label(&self) -> String {
        let placement = match self.placement {
            Placement::Ppp(_) => "PPP",
            Placement::Fixed(_) => "Fixed",
        };
        format!(
            "{placement}, {}, {}",
            self.blockage.label(),
            self.antenna.label()
        )
    }

    fn empirical(&self) -> Option<&BuildingSet> {
        match self.blockage {
            BlockageModel::Empirical => self.buildings.as_deref(),
            _ => None,
        }
    }
}

/// One BS as seen by the typical MT in one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSample {
    pub bs_id: u32,
    pub distance: f64,
    pub state: LinkState,
    /// Linear shadowing gain `X`.
    pub shadowing: f64,
    /// Fading power `h`.
    pub fading: f64,
    /// Combined BS and MT antenna gain (1 for the serving link).
    pub gain: f64,
    /// Inverse average received power `C = path_loss / X`.
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub mt: Point2D,
    pub links: Vec<LinkSample>,
    pub serving: usize,
}

/// Index of the link with the smallest `C`, ties to the lowest BS id.
pub fn associate(links: &[LinkSample]) -> Result<usize> {
    links
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.c.total_cmp(&b.c).then(a.bs_id.cmp(&b.bs_id)))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Domain("no base station available for association".into()))
}

/// Downlink SINR of the serving link.
///
/// # Panics
/// If a non-serving BS has `C` below the serving one, which means the
/// snapshot was not associated by [`associate`].
pub fn sinr(snapshot: &Snapshot, p_t: f64, noise_power: f64) -> f64 {
    let s = &snapshot.links[snapshot.serving];
    let mut interference = 0.0;
    for (i, l) in snapshot.links.iter().enumerate() {
        if i == snapshot.serving {
            continue;
        }
        assert!(
            l.c >= s.c,
            "interferer {} is stronger on average than the serving BS {}",
            l.bs_id,
            s.bs_id
        );
        interference += p_t * l.gain * l.fading / l.c;
    }
    p_t * s.fading / s.c / (noise_power + interference)
}

/// Draws one snapshot, or `None` when no BS is present.
pub fn draw_snapshot<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    rng: &mut R,
) -> Result<Option<Snapshot>> {
    let buildings = config.empirical();
    let ppp;
    let bss: &[BaseStation] = match &config.placement {
        Placement::Fixed(b) => b,
        Placement::Ppp(lambda) => {
            ppp = sample_ppp(&config.region, *lambda, rng)?
                .into_iter()
                .enumerate()
                .map(|(i, pos)| BaseStation {
                    id: i as u32,
                    pos,
                    rooftop: buildings.is_some_and(|b| b.contains(pos)),
                })
                .collect::<Vec<_>>();
            &ppp
        }
    };
    let mt = match (config.mt, buildings) {
        (MtPlacement::Fixed(p), _) => p,
        (MtPlacement::Uniform, Some(b)) => sample_outdoor(&config.region, b, OUTDOOR_TRIES, rng)?,
        (MtPlacement::Uniform, None) => config.region.sample_uniform(rng),
    };
    if bss.is_empty() {
        return Ok(None);
    }
    let ch = &config.channel;
    let mut links = Vec::with_capacity(bss.len());
    for bs in bss {
        let r = mt.dist(bs.pos);
        let state = match buildings {
            Some(b) => {
                let bs = BaseStation {
                    rooftop: bs.rooftop || b.contains(bs.pos),
                    ..*bs
                };
                empirical_link_state(mt, &bs, b)
            }
            None => sample_link_state(&config.blockage, r, rng)?,
        };
        let shadowing = sample_shadowing(state, ch, rng);
        let fading = sample_fading_power(state, ch, rng);
        let gain = interferer_gain_sample(&config.antenna, &config.antenna, rng);
        links.push(LinkSample {
            bs_id: bs.id,
            distance: r,
            state,
            shadowing,
            fading,
            gain,
            c: path_loss(r, state, ch) / shadowing,
        });
    }
    let serving = associate(&links)?;
    links[serving].gain = 1.0;
    Ok(Some(Snapshot { mt, links, serving }))
}

/// Estimated `P(SINR > T)` on a threshold grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageCurve {
    pub label: String,
    pub thresholds_db: Vec<f64>,
    pub coverage: Vec<f64>,
    /// Half-width of the 95% normal-approximation interval.
    pub ci_halfwidth: Vec<f64>,
    /// Iterations with SINR above each threshold.
    pub successes: Vec<u64>,
    pub iterations: u64,
    pub seed: u64,
}

impl CoverageCurve {
    fn from_counts(
        label: String,
        thresholds_db: &[f64],
        successes: Vec<u64>,
        iterations: u64,
        seed: u64,
    ) -> Self {
        let n = iterations as f64;
        let coverage: Vec<f64> = successes.iter().map(|&k| k as f64 / n).collect();
        let ci_halfwidth = coverage
            .iter()
            .map(|&p| 1.96 * (p * (1.0 - p) / n).sqrt())
            .collect();
        CoverageCurve {
            label,
            thresholds_db: thresholds_db.to_vec(),
            coverage,
            ci_halfwidth,
            successes,
            iterations,
            seed,
        }
    }

    /// CSV with header `threshold_db,coverage,ci_halfwidth`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "threshold_db,coverage,ci_halfwidth")?;
        for i in 0..self.thresholds_db.len() {
            writeln!(
                w,
                "{},{},{}",
                self.thresholds_db[i], self.coverage[i], self.ci_halfwidth[i]
            )?;
        }
        Ok(())
    }

    /// `key=value` sidecar describing how the curve was produced.
    pub fn write_metadata<W: Write>(&self, mut w: W, config_hash: &str) -> std::io::Result<()> {
        writeln!(w, "label={}", self.label)?;
        writeln!(w, "config_hash={config_hash}")?;
        writeln!(w, "seed={}", self.seed)?;
        writeln!(w, "iterations={}", self.iterations)
    }
}

/// Runs `iterations` independent snapshots and thresholds their SINRs.
///
/// Iteration `i` draws from substream `(seed, i)`. Iterations without any
/// BS count as outage.
pub fn coverage_probability(
    config: &ScenarioConfig,
    thresholds_db: &[f64],
    iterations: u64,
    seed: u64,
    workers: usize,
) -> Result<CoverageCurve> {
    if iterations == 0 {
        return Err(Error::param("coverage needs at least one iteration"));
    }
    if thresholds_db.iter().any(|t| t.is_nan()) {
        return Err(Error::param("thresholds must not be NaN"));
    }
    config.validate()?;
    let sinrs = par_map(iterations, workers, |i| -> Result<f64> {
        let mut rng = substream(seed, i);
        Ok(match draw_snapshot(config, &mut rng)? {
            Some(s) => sinr(&s, config.p_t, config.noise_power),
            None => 0.0,
        })
    });
    let thresholds: Vec<f64> = thresholds_db.iter().map(|&t| db_to_linear(t)).collect();
    let mut successes = vec![0u64; thresholds.len()];
    for s in sinrs {
        let s = s?;
        for (k, &t) in successes.iter_mut().zip(&thresholds) {
            *k += u64::from(s > t);
        }
    }
    Ok(CoverageCurve::from_counts(
        config.label(),
        thresholds_db,
        successes,
        iterations,
        seed,
    ))
}

/// Runs every config with its own seed derived from `seed` and its position.
pub fn run_scenario_suite(
    configs: &[ScenarioConfig],
    thresholds_db: &[f64],
    iterations: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<CoverageCurve>> {
    for c in configs {
        c.validate()?;
    }
    configs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            coverage_probability(
                c,
                thresholds_db,
                iterations,
                derive_seed(seed, i as u64),
                workers,
            )
        })
        .collect()
}

/// `start, start + step, ...` up to and including `stop` (within 1e-9 dB).
pub fn threshold_grid(start_db: f64, stop_db: f64, step_db: f64) -> Result<Vec<f64>> {
    if !(step_db > 0.0) || !(stop_db >= start_db) || !start_db.is_finite() || !stop_db.is_finite() {
        return Err(Error::param(
            "threshold grid needs step > 0 and stop >= start",
        ));
    }
    let n = ((stop_db - start_db) / step_db + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| start_db + step_db * i as f64).collect())
}
