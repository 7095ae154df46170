//! LOS/NLOS link-state models and the empirical LOS-probability histogram.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geom::{sample_ppp, BaseStation, BuildingSet, Point2D, Region};
use crate::rng::{par_map, substream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkState {
    Los,
    Nlos,
}

impl fmt::Display for LinkState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkState::Los => "LOS",
            LinkState::Nlos => "NLOS",
        })
    }
}

/// Piece-wise constant LOS probability over `N + 1` distance intervals
/// `[0, d_1), [d_1, d_2), ..., [d_N, inf)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiBallParams {
    radii: Vec<f64>,
    q_los: Vec<f64>,
}

impl MultiBallParams {
    /// `radii` must be strictly increasing and positive; `q_los` holds one
    /// probability per interval (so `radii.len() + 1` entries). `N = 0` is a
    /// single interval covering all distances.
    pub fn new(radii: Vec<f64>, q_los: Vec<f64>) -> Result<Self> {
        if q_los.len() != radii.len() + 1 {
            return Err(Error::param(format!(
                "multi-ball with {} radii needs {} LOS probabilities, got {}",
                radii.len(),
                radii.len() + 1,
                q_los.len()
            )));
        }
        if radii.iter().any(|d| !d.is_finite() || *d <= 0.0) {
            return Err(Error::param("multi-ball radii must be finite and positive"));
        }
        if radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("multi-ball radii must be strictly increasing"));
        }
        if q_los.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return Err(Error::param("multi-ball probabilities must lie in [0, 1]"));
        }
        Ok(MultiBallParams { radii, q_los })
    }

    /// Single interval in a fixed state.
    pub fn one_state(state: LinkState) -> Self {
        let q = match state {
            LinkState::Los => 1.0,
            LinkState::Nlos => 0.0,
        };
        MultiBallParams {
            radii: Vec::new(),
            q_los: vec![q],
        }
    }

    /// Fitted 3-ball approximation of the London empirical blockage.
    pub fn london() -> Self {
        MultiBallParams::new(
            vec![15.1335, 56.5978, 195.7149],
            vec![0.7948, 0.3818, 0.0939, 0.0],
        )
        .expect("static params")
    }

    /// Fitted 3-ball approximation of the Manchester empirical blockage.
    pub fn manchester() -> Self {
        MultiBallParams::new(
            vec![13.2076, 57.8840, 213.3940],
            vec![0.7866, 0.4981, 0.1015, 0.0001],
        )
        .expect("static params")
    }

    /// Fitted 3-ball approximation of the 3GPP urban-micro LOS probability.
    pub fn three_gpp_fit() -> Self {
        MultiBallParams::new(
            vec![47.7989, 215.9387, 1874.442],
            vec![0.9446, 0.2142, 0.0243, 0.0021],
        )
        .expect("static params")
    }

    pub fn n_balls(&self) -> usize {
        self.radii.len()
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn q_los(&self) -> &[f64] {
        &self.q_los
    }

    /// Per-interval probabilities of state `s`.
    pub fn q(&self, s: LinkState) -> Vec<f64> {
        match s {
            LinkState::Los => self.q_los.clone(),
            LinkState::Nlos => self.q_los.iter().map(|q| 1.0 - q).collect(),
        }
    }

    /// Index of the interval `[d_{n-1}, d_n)` containing `r`.
    pub fn interval(&self, r: f64) -> usize {
        self.radii.partition_point(|&d| d <= r)
    }
}

/// Link-state model.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockageModel {
    /// Geometric line-of-sight test against building footprints.
    Empirical,
    /// 3GPP urban-micro LOS probability.
    ThreeGpp,
    MultiBall(MultiBallParams),
    /// Every link in the same state.
    OneState(LinkState),
}

impl BlockageModel {
    /// LOS probability at distance `r`. `None` for the empirical model,
    /// which has no closed form.
    pub fn p_los(&self, r: f64) -> Option<f64> {
        match self {
            BlockageModel::Empirical => None,
            BlockageModel::ThreeGpp => Some(p_los_3gpp(r)),
            BlockageModel::MultiBall(mb) => Some(p_state_multiball(r, mb, LinkState::Los)),
            BlockageModel::OneState(LinkState::Los) => Some(1.0),
            BlockageModel::OneState(LinkState::Nlos) => Some(0.0),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            BlockageModel::Empirical => "Empirical",
            BlockageModel::ThreeGpp => "3GPP",
            BlockageModel::MultiBall(_) => "Multi-Ball",
            BlockageModel::OneState(LinkState::Los) => "1-State (L)",
            BlockageModel::OneState(LinkState::Nlos) => "1-State (N)",
        }
    }
}

/// 3GPP urban-micro outdoor LOS probability
/// `min(18/r, 1)(1 - exp(-r/36)) + exp(-r/36)`.
pub fn p_los_3gpp(r: f64) -> f64 {
    if r <= 18.0 {
        return 1.0;
    }
    let e = (-r / 36.0).exp();
    (18.0 / r) * (1.0 - e) + e
}

/// Probability of state `s` at distance `r` under a multi-ball model.
pub fn p_state_multiball(r: f64, params: &MultiBallParams, s: LinkState) -> f64 {
    let q = params.q_los[params.interval(r)];
    match s {
        LinkState::Los => q,
        LinkState::Nlos => 1.0 - q,
    }
}

/// State of the link between an outdoor MT and `bs`: rooftop BSs are always
/// NLOS; outdoor BSs are LOS iff no footprint cuts the straight line.
pub fn empirical_link_state(mt: Point2D, bs: &BaseStation, buildings: &BuildingSet) -> LinkState {
    if bs.rooftop || buildings.blocks(mt, bs.pos) {
        LinkState::Nlos
    } else {
        LinkState::Los
    }
}

/// Bernoulli draw of the link state. The empirical model needs geometry and
/// is rejected here; use [`empirical_link_state`].
pub fn sample_link_state<R: Rng + ?Sized>(
    model: &BlockageModel,
    r: f64,
    rng: &mut R,
) -> Result<LinkState> {
    let p = match model {
        BlockageModel::OneState(s) => return Ok(*s),
        BlockageModel::Empirical => {
            return Err(Error::Usage(
                "empirical blockage requires building geometry, not a distance".into(),
            ))
        }
        m => m.p_los(r).expect("probabilistic model"),
    };
    // u in [0, 1): p = 1 always LOS, p = 0 always NLOS
    Ok(if rng.random::<f64>() < p {
        LinkState::Los
    } else {
        LinkState::Nlos
    })
}

/// Draws a uniformly random point outside every building, giving up after
/// `max_tries` rejections.
pub fn sample_outdoor<R: Rng + ?Sized>(
    region: &Region,
    buildings: &BuildingSet,
    max_tries: usize,
    rng: &mut R,
) -> Result<Point2D> {
    for _ in 0..max_tries {
        let p = region.sample_uniform(rng);
        if !buildings.contains(p) {
            return Ok(p);
        }
    }
    Err(Error::Infeasible(format!(
        "no outdoor point found in {max_tries} draws; the region looks fully built"
    )))
}

pub(crate) const OUTDOOR_TRIES: usize = 100_000;

/// Empirical LOS probability at distances `r_t = t * delta_r`, `t = 1..=m_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LosHistogram {
    pub delta_r: f64,
    /// Links observed per bin.
    pub n_samples: Vec<u64>,
    /// LOS links observed per bin.
    pub n_los: Vec<u64>,
}

impl LosHistogram {
    pub fn empty(delta_r: f64, m_t: usize) -> Self {
        LosHistogram {
            delta_r,
            n_samples: vec![0; m_t],
            n_los: vec![0; m_t],
        }
    }

    pub fn m_t(&self) -> usize {
        self.n_samples.len()
    }

    /// Bin centre of index `i` (0-based), i.e. `r_{i+1}`.
    pub fn r(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.delta_r
    }

    /// Bin of distance `r`: nearest centre, or `None` outside `[r_1, r_M]`
    /// +/- half a bin.
    pub fn bin_of(&self, r: f64) -> Option<usize> {
        let t = (r / self.delta_r).round();
        if t >= 1.0 && t <= self.m_t() as f64 {
            Some(t as usize - 1)
        } else {
            None
        }
    }

    pub fn record(&mut self, r: f64, s: LinkState) {
        if let Some(i) = self.bin_of(r) {
            self.n_samples[i] += 1;
            if s == LinkState::Los {
                self.n_los[i] += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &LosHistogram) {
        for (a, b) in self.n_samples.iter_mut().zip(&other.n_samples) {
            *a += b;
        }
        for (a, b) in self.n_los.iter_mut().zip(&other.n_los) {
            *a += b;
        }
    }

    /// Per-bin LOS fraction; empty bins read 0 (see [`Self::is_empty_bin`]).
    pub fn p_los(&self) -> Vec<f64> {
        self.n_samples
            .iter()
            .zip(&self.n_los)
            .map(|(&n, &l)| if n == 0 { 0.0 } else { l as f64 / n as f64 })
            .collect()
    }

    pub fn is_empty_bin(&self, i: usize) -> bool {
        self.n_samples[i] == 0
    }

    /// Builds a histogram whose bins hold the exact probabilities `p(r_t)`,
    /// with a nominal count of one sample per bin.
    pub fn from_probabilities(delta_r: f64, p_los: &[f64]) -> Result<Self> {
        if p_los.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::param("histogram probabilities must lie in [0, 1]"));
        }
        // scale so that n_los / n_samples reproduces p to ~1e-15
        const SCALE: u64 = 1 << 50;
        Ok(LosHistogram {
            delta_r,
            n_samples: vec![SCALE; p_los.len()],
            n_los: p_los
                .iter()
                .map(|p| (p * SCALE as f64).round() as u64)
                .collect(),
        })
    }

    /// CSV with header `r_m,p_los,n_samples`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "r_m,p_los,n_samples")?;
        for (i, p) in self.p_los().iter().enumerate() {
            writeln!(w, "{},{},{}", self.r(i), p, self.n_samples[i])?;
        }
        Ok(())
    }

    /// Parses the CSV written by [`Self::write_csv`]. Bin spacing is taken
    /// from the first row.
    pub fn read_csv(text: &str, path: &std::path::Path) -> Result<Self> {
        let parse_err = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "r_m,p_los,n_samples" => {}
            _ => return Err(parse_err(1, "expected header `r_m,p_los,n_samples`".into())),
        }
        let mut delta_r = None;
        let mut n_samples = Vec::new();
        let mut n_los = Vec::new();
        let mut p_rows = Vec::new();
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                return Err(parse_err(
                    i + 1,
                    format!("expected 3 fields, got {}", f.len()),
                ));
            }
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| parse_err(i + 1, format!("`{s}`: {e}")))
            };
            let r = num(f[0])?;
            let p = num(f[1])?;
            let n: u64 = f[2]
                .trim()
                .parse()
                .map_err(|e| parse_err(i + 1, format!("`{}`: {e}", f[2])))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(parse_err(i + 1, format!("p_los {p} outside [0, 1]")));
            }
            let dr = *delta_r.get_or_insert(r);
            let expected = (n_samples.len() + 1) as f64 * dr;
            if (r - expected).abs() > 1e-9 * expected.max(1.0) {
                return Err(parse_err(
                    i + 1,
                    format!("distance {r} breaks the uniform grid"),
                ));
            }
            n_samples.push(n);
            n_los.push((p * n as f64).round() as u64);
            p_rows.push(p);
        }
        let Some(delta_r) = delta_r else {
            return Err(parse_err(2, "histogram has no rows".into()));
        };
        // counts that cannot reproduce the stored fraction fall back to exact probabilities
        let exact = n_samples
            .iter()
            .zip(&n_los)
            .zip(&p_rows)
            .all(|((&n, &l), &p)| n == 0 || (l as f64 / n as f64 - p).abs() < 1e-12);
        if exact {
            Ok(LosHistogram {
                delta_r,
                n_samples,
                n_los,
            })
        } else {
            LosHistogram::from_probabilities(delta_r, &p_rows)
        }
    }
}

/// Settings for [`estimate_los_histogram`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramSpec {
    pub lambda_bs: f64,
    pub trials: u64,
    pub delta_r: f64,
    pub m_t: usize,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        HistogramSpec {
            lambda_bs: 319.0 / 4e6,
            trials: 10_000,
            delta_r: 1.0,
            m_t: 2000,
        }
    }
}

/// Monte Carlo estimate of the LOS probability seen by a typical outdoor MT.
///
/// Each trial drops a PPP of BSs, classifies them rooftop/outdoor, draws
/// one MT uniformly over the outdoor area and records the distance and
/// empirical state of its link to every BS. Trial `i` uses substream
/// `(seed, i)`; per-trial counts are summed, so the result is independent of
/// `workers`.
pub fn estimate_los_histogram(
    region: &Region,
    buildings: &Arc<BuildingSet>,
    spec: &HistogramSpec,
    seed: u64,
    workers: usize,
) -> Result<LosHistogram> {
    if spec.trials == 0 {
        return Err(Error::param("histogram needs at least one trial"));
    }
    if !(spec.delta_r > 0.0) || spec.m_t == 0 {
        return Err(Error::param("histogram needs delta_r > 0 and m_t >= 1"));
    }
    if spec.lambda_bs < 0.0 {
        return Err(Error::param("BS density must be >= 0"));
    }
    let per_trial = par_map(spec.trials, workers, |i| -> Result<Vec<(u32, bool)>> {
        let mut rng = substream(seed, i);
        let bss = sample_ppp(region, spec.lambda_bs, &mut rng)?;
        let mt = sample_outdoor(region, buildings, OUTDOOR_TRIES, &mut rng)?;
        let probe = LosHistogram::empty(spec.delta_r, spec.m_t);
        let mut obs = Vec::with_capacity(bss.len());
        for (id, pos) in bss.into_iter().enumerate() {
            let bs = BaseStation {
                id: id as u32,
                pos,
                rooftop: buildings.contains(pos),
            };
            let r = mt.dist(pos);
            if let Some(bin) = probe.bin_of(r) {
                let s = empirical_link_state(mt, &bs, buildings);
                obs.push((bin as u32, s == LinkState::Los));
            }
        }
        Ok(obs)
    });
    let mut hist = LosHistogram::empty(spec.delta_r, spec.m_t);
    for trial in per_trial {
        for (bin, los) in trial? {
            hist.n_samples[bin as usize] += 1;
            hist.n_los[bin as usize] += u64::from(los);
        }
    }
    Ok(hist)
}
