//! Path-loss intensity measures of a PPP of base stations and the
//! intensity/pattern matching fits built on them.
//!
//! Under the displacement theorem, the path-losses `kappa * max(r0, r)^alpha`
//! seen by the typical MT form a PPP on the line with intensity measure
//!
//! ```text
//! Lambda([0, x)) = 2 pi lambda * sum_S  int_0^inf 1{kappa_S max(r0, r)^alpha_S <= x} p_S(r) r dr
//! ```
//!
//! [`IntensityCurve`] stores the per-state integrals without the `2 pi lambda`
//! factor; the scaled values are derived on demand. Keeping the density out of
//! the stored numbers makes the log-domain fits exactly invariant to it.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;

use crate::blockage::{BlockageModel, LinkState, LosHistogram, MultiBallParams};
use crate::channel::{antenna_gain, AntennaModel, ChannelParams, MultiLobeParams};
use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::quad::integrate;
use crate::rng::{par_map, substream};

/// `int_0^18 r dr` subtracted from `1296 e^(-1/2)`; rounds to 624.064.
pub fn los_3gpp_offset() -> f64 {
    1296.0 * (-0.5f64).exp() - 162.0
}

/// `1296 e^(-1/2)`; rounds to 786.064.
pub fn nlos_3gpp_offset() -> f64 {
    1296.0 * (-0.5f64).exp()
}

/// Heaviside step with `H(0) = 1`.
fn step(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Scaled per-state intensity values at one path-loss threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateIntensity {
    pub los: f64,
    pub nlos: f64,
}

impl StateIntensity {
    pub fn total(&self) -> f64 {
        self.los + self.nlos
    }
}

/// `Lambda([0, x))` on an ascending grid of path-loss values.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityCurve {
    pub x: Vec<f64>,
    /// `int 1{l_LOS(r) <= x} p_LOS(r) r dr` (no `2 pi lambda` factor).
    pub los: Vec<f64>,
    pub nlos: Vec<f64>,
    pub lambda_bs: f64,
}

impl IntensityCurve {
    /// Validates the grid (strictly ascending) and the values (non-negative,
    /// non-decreasing up to a 1e-9 relative tolerance for quadrature noise).
    pub fn new(x: Vec<f64>, los: Vec<f64>, nlos: Vec<f64>, lambda_bs: f64) -> Result<Self> {
        if los.len() != x.len() || nlos.len() != x.len() {
            return Err(Error::param("intensity curve arrays differ in length"));
        }
        if x.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::param("intensity grid must be strictly ascending"));
        }
        if !(lambda_bs >= 0.0) {
            return Err(Error::param("BS density must be >= 0"));
        }
        for (name, v) in [("LOS", &los), ("NLOS", &nlos)] {
            if v.iter().any(|y| !(*y >= 0.0) || !y.is_finite()) {
                return Err(Error::Numeric(format!(
                    "{name} intensity has negative or non-finite values"
                )));
            }
            if v.windows(2).any(|w| w[1] < w[0] - 1e-9 * w[0].abs()) {
                return Err(Error::Numeric(format!(
                    "{name} intensity is not non-decreasing"
                )));
            }
        }
        Ok(IntensityCurve {
            x,
            los,
            nlos,
            lambda_bs,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// `2 pi lambda`.
    pub fn scale(&self) -> f64 {
        2.0 * PI * self.lambda_bs
    }

    /// Scaled values at grid index `i`.
    pub fn at(&self, i: usize) -> StateIntensity {
        StateIntensity {
            los: self.scale() * self.los[i],
            nlos: self.scale() * self.nlos[i],
        }
    }

    /// Scaled total intensity on the whole grid.
    pub fn total(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.at(i).total()).collect()
    }

    /// Same curve at another density.
    pub fn with_density(&self, lambda_bs: f64) -> Self {
        IntensityCurve {
            lambda_bs,
            ..self.clone()
        }
    }

    /// CSV with header `x,lambda_los,lambda_nlos,lambda_total`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,lambda_los,lambda_nlos,lambda_total")?;
        for i in 0..self.len() {
            let v = self.at(i);
            writeln!(
                w,
                "{:e},{:e},{:e},{:e}",
                self.x[i],
                v.los,
                v.nlos,
                v.total()
            )?;
        }
        Ok(())
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let mut g: Vec<f64> = (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect();
            g[0] = lo;
            g[n - 1] = hi;
            g
        }
    }
}

/// Maximum distance captured by the default fitting grid (m).
pub const DEFAULT_FIT_RANGE_M: f64 = 2000.0;
/// Points in the default fitting grid.
pub const DEFAULT_FIT_POINTS: usize = 200;

/// Default upper path-loss for fitting: the NLOS path-loss at 2 km.
pub fn default_x_max(params: &ChannelParams) -> f64 {
    params.nlos.kappa * DEFAULT_FIT_RANGE_M.powf(params.nlos.alpha)
}

/// 200 log-spaced path-loss values from the LOS path-loss at
/// `max(r0, 1 m)` up to [`default_x_max`].
pub fn default_fit_grid(params: &ChannelParams) -> Vec<f64> {
    let lo = params.los.kappa * params.r0.max(1.0).powf(params.los.alpha);
    log_grid(lo, default_x_max(params), DEFAULT_FIT_POINTS)
}

/// Distance below which the path-loss of state `s` stays under `x`, or
/// `None` if even the bounded minimum `kappa r0^alpha` exceeds `x`.
fn distance_threshold(x: f64, s: LinkState, params: &ChannelParams) -> Option<f64> {
    let st = params.state(s);
    if x < st.kappa * params.r0.powf(st.alpha) {
        None
    } else {
        Some((x / st.kappa).powf(1.0 / st.alpha))
    }
}

/// Adaptive quadrature of the per-state intensity integrals for an
/// arbitrary LOS probability. `breakpoints` lists distances where `p_los` is
/// discontinuous or kinked; the integration is split there.
pub fn intensity_numeric(
    p_los: &dyn Fn(f64) -> f64,
    breakpoints: &[f64],
    params: &ChannelParams,
    lambda_bs: f64,
    x_grid: &[f64],
) -> Result<IntensityCurve> {
    let per_state = |x: f64, s: LinkState| -> Result<f64> {
        let Some(t) = distance_threshold(x, s, params) else {
            return Ok(0.0);
        };
        let mut cuts: Vec<f64> = breakpoints
            .iter()
            .copied()
            .filter(|&b| b > 0.0 && b < t)
            .collect();
        cuts.sort_by(f64::total_cmp);
        let mut acc = 0.0;
        let mut lo = 0.0;
        for hi in cuts.into_iter().chain(std::iter::once(t)) {
            acc += integrate(
                |r| {
                    let p = p_los(r);
                    let ps = match s {
                        LinkState::Los => p,
                        LinkState::Nlos => 1.0 - p,
                    };
                    ps * r
                },
                lo,
                hi,
                1e-11,
                1e-13,
            )?;
            lo = hi;
        }
        Ok(acc)
    };
    let mut los = Vec::with_capacity(x_grid.len());
    let mut nlos = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        los.push(per_state(x, LinkState::Los)?);
        nlos.push(per_state(x, LinkState::Nlos)?);
    }
    IntensityCurve::new(x_grid.to_vec(), los, nlos, lambda_bs)
}

/// [`intensity_numeric`] for a probabilistic blockage model, with its
/// discontinuities passed as breakpoints.
pub fn intensity_numeric_model(
    model: &BlockageModel,
    params: &ChannelParams,
    lambda_bs: f64,
    x_grid: &[f64],
) -> Result<IntensityCurve> {
    let breaks =
        match model {
            BlockageModel::Empirical => return Err(Error::Usage(
                "the empirical model has no closed-form LOS probability; use intensity_empirical"
                    .into(),
            )),
            BlockageModel::ThreeGpp => vec![18.0],
            BlockageModel::MultiBall(mb) => mb.radii().to_vec(),
            BlockageModel::OneState(_) => Vec::new(),
        };
    let p = |r: f64| model.p_los(r).expect("probabilistic model");
    intensity_numeric(&p, &breaks, params, lambda_bs, x_grid)
}

/// Riemann-sum intensity from a LOS histogram:
/// `delta_r * sum_t 1{l_S(r_t) <= x} p_S(r_t) r_t`.
pub fn intensity_empirical(
    hist: &LosHistogram,
    params: &ChannelParams,
    lambda_bs: f64,
    x_grid: &[f64],
) -> Result<IntensityCurve> {
    let p = hist.p_los();
    let per_state = |x: f64, s: LinkState| -> f64 {
        let st = params.state(s);
        let mut acc = 0.0;
        for (i, &pl) in p.iter().enumerate() {
            let r = hist.r(i);
            if st.kappa * params.r0.max(r).powf(st.alpha) > x {
                // path-loss is monotone in r
                break;
            }
            let ps = match s {
                LinkState::Los => pl,
                LinkState::Nlos => 1.0 - pl,
            };
            acc += ps * r;
        }
        hist.delta_r * acc
    };
    let los = x_grid
        .iter()
        .map(|&x| per_state(x, LinkState::Los))
        .collect();
    let nlos = x_grid
        .iter()
        .map(|&x| per_state(x, LinkState::Nlos))
        .collect();
    IntensityCurve::new(x_grid.to_vec(), los, nlos, lambda_bs)
}

fn three_gpp_unscaled(x: f64, params: &ChannelParams) -> (f64, f64) {
    let (kl, al) = (params.los.kappa, params.los.alpha);
    let (kn, an) = (params.nlos.kappa, params.nlos.alpha);
    let tl = (x / kl).powf(1.0 / al);
    let gate18 = step(x - kl * 18f64.powf(al));
    let los = step(x - kl * params.r0.powf(al))
        * (0.5 * tl * tl * (1.0 - gate18)
            + (los_3gpp_offset() - 36.0 * (-tl / 36.0).exp() * (18.0 + tl) + 18.0 * tl) * gate18);
    let tn = (x / kn).powf(1.0 / an);
    let nlos = step(x - kn * 18f64.powf(an))
        * (0.5 * (tn - 18.0).powi(2) - nlos_3gpp_offset()
            + 36.0 * (-tn / 36.0).exp() * (18.0 + tn));
    // the NLOS bracket vanishes at tn = 18; clamp rounding residue
    (los, nlos.max(0.0))
}

/// Closed-form per-state intensity of the 3GPP LOS probability, scaled by
/// `2 pi lambda`. Requires `r0 < 18 m`.
pub fn intensity_3gpp_closed(
    x: f64,
    params: &ChannelParams,
    lambda_bs: f64,
) -> Result<StateIntensity> {
    if params.r0 >= 18.0 {
        return Err(Error::Parameter(format!(
            "3GPP closed form needs r0 < 18 m, got {}",
            params.r0
        )));
    }
    let (los, nlos) = three_gpp_unscaled(x, params);
    let s = 2.0 * PI * lambda_bs;
    Ok(StateIntensity {
        los: s * los,
        nlos: s * nlos,
    })
}

/// Multi-ball intensity of one state with per-interval probabilities `q`.
fn multiball_state_unscaled(
    x: f64,
    kappa: f64,
    alpha: f64,
    r0: f64,
    radii: &[f64],
    q: &[f64],
) -> f64 {
    let t2 = (x / kappa).powf(2.0 / alpha);
    let h = |d: f64| step(x - kappa * d.powf(alpha));
    let n = radii.len();
    let d1 = radii.first().copied().unwrap_or(f64::INFINITY);
    let h_d1 = if n == 0 { 0.0 } else { h(d1) };
    let mut v = 0.5 * q[0] * t2 * h(r0) * (1.0 - h_d1);
    if n >= 1 {
        let dn = radii[n - 1];
        v += 0.5 * q[0] * d1 * d1 * h_d1;
        v += 0.5 * q[n] * (t2 - dn * dn) * h(dn);
    }
    for k in 1..n {
        let (lo, hi) = (radii[k - 1], radii[k]);
        v += 0.5 * q[k] * (t2 - lo * lo) * h(lo) * (1.0 - h(hi));
        v += 0.5 * q[k] * (hi * hi - lo * lo) * h(hi);
    }
    v
}

fn multiball_unscaled(x: f64, mb: &MultiBallParams, params: &ChannelParams) -> (f64, f64) {
    let q_los = mb.q_los();
    let q_nlos = mb.q(LinkState::Nlos);
    let l = &params.los;
    let n = &params.nlos;
    (
        multiball_state_unscaled(x, l.kappa, l.alpha, params.r0, mb.radii(), q_los),
        multiball_state_unscaled(x, n.kappa, n.alpha, params.r0, mb.radii(), &q_nlos),
    )
}

/// Closed-form per-state intensity of a multi-ball model, scaled by
/// `2 pi lambda`. Requires `r0 < d_1`.
pub fn intensity_multiball_closed(
    x: f64,
    mb: &MultiBallParams,
    params: &ChannelParams,
    lambda_bs: f64,
) -> Result<StateIntensity> {
    if let Some(&d1) = mb.radii().first() {
        if params.r0 >= d1 {
            return Err(Error::Parameter(format!(
                "multi-ball closed form needs r0 < d_1, got r0 = {} and d_1 = {d1}",
                params.r0
            )));
        }
    }
    let (los, nlos) = multiball_unscaled(x, mb, params);
    let s = 2.0 * PI * lambda_bs;
    Ok(StateIntensity {
        los: s * los,
        nlos: s * nlos,
    })
}

/// Intensity of a single-state network: `pi lambda (x/kappa)^(2/alpha) H(x - kappa r0^alpha)`.
pub fn intensity_one_state_closed(
    x: f64,
    s: LinkState,
    params: &ChannelParams,
    lambda_bs: f64,
) -> f64 {
    let st = params.state(s);
    PI * lambda_bs
        * (x / st.kappa).powf(2.0 / st.alpha)
        * step(x - st.kappa * params.r0.powf(st.alpha))
}

/// Closed-form curve of the 3GPP model on a grid.
pub fn curve_3gpp_closed(
    params: &ChannelParams,
    lambda_bs: f64,
    x_grid: &[f64],
) -> Result<IntensityCurve> {
    intensity_3gpp_closed(1.0, params, lambda_bs)?;
    let (los, nlos) = x_grid
        .iter()
        .map(|&x| three_gpp_unscaled(x, params))
        .unzip();
    IntensityCurve::new(x_grid.to_vec(), los, nlos, lambda_bs)
}

/// Closed-form curve of a multi-ball model on a grid.
pub fn curve_multiball_closed(
    mb: &MultiBallParams,
    params: &ChannelParams,
    lambda_bs: f64,
    x_grid: &[f64],
) -> Result<IntensityCurve> {
    intensity_multiball_closed(1.0, mb, params, lambda_bs)?;
    let (los, nlos) = x_grid
        .iter()
        .map(|&x| multiball_unscaled(x, mb, params))
        .unzip();
    IntensityCurve::new(x_grid.to_vec(), los, nlos, lambda_bs)
}

/// Outcome of a least-squares matching fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport<P> {
    pub params: P,
    /// Sum of squared log errors at `params`.
    pub objective: f64,
    pub restarts: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Worker threads for restarts (0 = default pool).
    pub workers: usize,
    pub nelder_mead: NelderMeadOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            restarts: 20,
            seed: 0,
            workers: 0,
            nelder_mead: NelderMeadOptions::default(),
        }
    }
}

/// Log-domain targets of the grid points with `x <= x_max`.
fn log_targets(actual: &IntensityCurve, x_max: f64) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for i in 0..actual.len() {
        if actual.x[i] > x_max {
            break;
        }
        let v = actual.los[i] + actual.nlos[i];
        if !(v > 0.0) {
            return Err(Error::Domain(format!(
                "actual intensity is zero at x = {:e}; start the fitting grid above the minimum path-loss",
                actual.x[i]
            )));
        }
        out.push((actual.x[i], v.ln()));
    }
    if out.is_empty() {
        return Err(Error::Domain(format!(
            "no grid points at or below x_max = {x_max:e}"
        )));
    }
    Ok(out)
}

fn multiball_sse(targets: &[(f64, f64)], mb: &MultiBallParams, params: &ChannelParams) -> f64 {
    targets
        .iter()
        .map(|&(x, ln_actual)| {
            let (l, n) = multiball_unscaled(x, mb, params);
            let v = l + n;
            if v > 0.0 {
                (ln_actual - v.ln()).powi(2)
            } else {
                f64::INFINITY
            }
        })
        .sum()
}

/// Sum over grid points `x <= x_max` of `(ln Lambda_actual - ln Lambda_mb)^2`.
pub fn multiball_objective(
    actual: &IntensityCurve,
    params: &ChannelParams,
    mb: &MultiBallParams,
    x_max: f64,
) -> Result<f64> {
    Ok(multiball_sse(&log_targets(actual, x_max)?, mb, params))
}

fn logistic(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

fn logit(q: f64) -> f64 {
    let q = q.clamp(1e-12, 1.0 - 1e-12);
    (q / (1.0 - q)).ln()
}

/// Unconstrained coordinates: `d_1 = r0 + e^u0`, `d_k = d_{k-1} + e^u_{k-1}`,
/// `q_j = logistic(u_{N+j})`.
struct BallCoords {
    n: usize,
    r0: f64,
}

impl BallCoords {
    fn decode(&self, u: &[f64]) -> Option<MultiBallParams> {
        let mut radii = Vec::with_capacity(self.n);
        let mut d = self.r0;
        for &ui in &u[..self.n] {
            d += ui.exp();
            radii.push(d);
        }
        let q = u[self.n..].iter().map(|&v| logistic(v)).collect();
        MultiBallParams::new(radii, q).ok()
    }

    fn encode(&self, mb: &MultiBallParams) -> Vec<f64> {
        let mut u = Vec::with_capacity(2 * self.n + 1);
        let mut prev = self.r0;
        for &d in mb.radii() {
            u.push((d - prev).max(1e-9).ln());
            prev = d;
        }
        u.extend(mb.q_los().iter().map(|&q| logit(q)));
        u
    }
}

/// Drops zero-width balls (gap below 1 m); the merged interval keeps the
/// probability of the outer one.
fn merge_degenerate(mb: &MultiBallParams) -> MultiBallParams {
    let mut radii = mb.radii().to_vec();
    let mut q = mb.q_los().to_vec();
    let mut i = 0;
    while i + 1 < radii.len() {
        if radii[i + 1] - radii[i] < 1.0 {
            radii.remove(i + 1);
            q.remove(i + 1);
        } else {
            i += 1;
        }
    }
    MultiBallParams::new(radii, q).expect("subset of valid params")
}

/// Multi-start Nelder-Mead fit of an `n_balls` multi-ball model to `actual`.
///
/// Restart `k` starts from a random point drawn from substream
/// `(opts.seed, k)`; each restart re-runs the simplex from its own optimum
/// until it stops improving. The best restart (lowest index on ties) wins.
pub fn fit_multiball(
    actual: &IntensityCurve,
    params: &ChannelParams,
    n_balls: usize,
    x_max: f64,
    opts: &FitOptions,
) -> Result<FitReport<MultiBallParams>> {
    if n_balls == 0 {
        return Err(Error::param("fit_multiball needs n_balls >= 1"));
    }
    if opts.restarts == 0 {
        return Err(Error::param("fit needs at least one restart"));
    }
    params.validate()?;
    let targets = log_targets(actual, x_max)?;
    let coords = BallCoords {
        n: n_balls,
        r0: params.r0,
    };
    // radii are drawn between 2 r0 and the NLOS distance at x_max
    let r_hi = (x_max / params.nlos.kappa)
        .powf(1.0 / params.nlos.alpha)
        .max(4.0 * params.r0);
    let r_lo = 2.0 * params.r0;

    let results = par_map(opts.restarts as u64, opts.workers, |k| {
        let mut rng = substream(opts.seed, k);
        let mut radii: Vec<f64> = (0..n_balls)
            .map(|_| (r_lo.ln() + rng.random::<f64>() * (r_hi / r_lo).ln()).exp())
            .collect();
        radii.sort_by(f64::total_cmp);
        for i in 1..radii.len() {
            if radii[i] <= radii[i - 1] {
                radii[i] = radii[i - 1] * (1.0 + 1e-6);
            }
        }
        let q: Vec<f64> = (0..=n_balls)
            .map(|_| rng.random_range(0.02..0.98))
            .collect();
        let start = MultiBallParams::new(radii, q).expect("sampled params are valid");
        let u0 = coords.encode(&start);
        let f = |u: &[f64]| match coords.decode(u) {
            Some(mb) => multiball_sse(&targets, &mb, params),
            None => f64::INFINITY,
        };
        let start_f = f(&u0);
        let mut best = nelder_mead(f, &u0, &opts.nelder_mead);
        for _ in 0..8 {
            let again = nelder_mead(f, &best.x, &opts.nelder_mead);
            let improved = again.f < best.f - 1e-13 * best.f.abs().max(1e-300);
            let done = again.converged && !improved;
            if again.f <= best.f {
                best = again;
            }
            if done || !improved {
                break;
            }
        }
        (start_f, best)
    });

    let mut winner: Option<(usize, f64)> = None;
    for (k, (_, m)) in results.iter().enumerate() {
        if winner.is_none_or(|(_, f)| m.f < f) {
            winner = Some((k, m.f));
        }
    }
    let (k, _) = winner.expect("at least one restart");
    let best = &results[k].1;
    let fitted = coords
        .decode(&best.x)
        .ok_or_else(|| Error::Numeric("fit ended on invalid parameters".into()))?;
    let fitted = merge_degenerate(&fitted);
    let objective = multiball_sse(&targets, &fitted, params);
    if !objective.is_finite() {
        return Err(Error::Numeric(
            "multi-ball fit did not reach a finite objective".into(),
        ));
    }
    Ok(FitReport {
        params: fitted,
        objective,
        restarts: opts.restarts,
        converged: best.converged,
    })
}

/// Objective values at each restart's random starting point, in restart
/// order. Exposed so callers can confirm the fit never ends above its starts.
pub fn multiball_start_objectives(
    actual: &IntensityCurve,
    params: &ChannelParams,
    n_balls: usize,
    x_max: f64,
    opts: &FitOptions,
) -> Result<Vec<f64>> {
    let targets = log_targets(actual, x_max)?;
    let r_hi = (x_max / params.nlos.kappa)
        .powf(1.0 / params.nlos.alpha)
        .max(4.0 * params.r0);
    let r_lo = 2.0 * params.r0;
    Ok((0..opts.restarts as u64)
        .map(|k| {
            let mut rng = substream(opts.seed, k);
            let mut radii: Vec<f64> = (0..n_balls)
                .map(|_| (r_lo.ln() + rng.random::<f64>() * (r_hi / r_lo).ln()).exp())
                .collect();
            radii.sort_by(f64::total_cmp);
            for i in 1..radii.len() {
                if radii[i] <= radii[i - 1] {
                    radii[i] = radii[i - 1] * (1.0 + 1e-6);
                }
            }
            let q: Vec<f64> = (0..=n_balls)
                .map(|_| rng.random_range(0.02..0.98))
                .collect();
            multiball_sse(
                &targets,
                &MultiBallParams::new(radii, q).expect("valid"),
                params,
            )
        })
        .collect())
}

/// `0..=180` degrees in 0.1 degree steps, in radians.
pub fn default_theta_grid() -> Vec<f64> {
    (0..=1800).map(|i| (i as f64 / 10.0).to_radians()).collect()
}

fn pattern_logs(pattern: &AntennaModel, theta_grid: &[f64]) -> Result<Vec<f64>> {
    if theta_grid.is_empty() {
        return Err(Error::param("angle grid is empty"));
    }
    if theta_grid.windows(2).any(|w| !(w[0] < w[1]))
        || theta_grid[0] < 0.0
        || theta_grid[theta_grid.len() - 1] > PI
    {
        return Err(Error::param(
            "angle grid must be strictly ascending within [0, pi]",
        ));
    }
    theta_grid
        .iter()
        .map(|&t| {
            let g = antenna_gain(pattern, t);
            if g > 0.0 {
                Ok(g.log10())
            } else {
                Err(Error::Domain(format!(
                    "pattern gain is zero at {:.3} deg",
                    t.to_degrees()
                )))
            }
        })
        .collect()
}

/// Sum over the grid of `(log10 g_actual - log10 g_lobes)^2`.
pub fn multilobe_objective(
    pattern: &AntennaModel,
    ml: &MultiLobeParams,
    theta_grid: &[f64],
) -> Result<f64> {
    let logs = pattern_logs(pattern, theta_grid)?;
    let approx = AntennaModel::MultiLobe(ml.clone());
    Ok(theta_grid
        .iter()
        .zip(&logs)
        .map(|(&t, &y)| (y - antenna_gain(&approx, t).log10()).powi(2))
        .sum())
}

/// Least-squares `k_lobes` approximation of `pattern` on `theta_grid`
/// (ascending, within `[0, pi]`).
///
/// For fixed breakpoints the best lobe gain is the geometric mean of the
/// pattern over the lobe, so only the split points are searched. Any split
/// is a partition of the sorted grid into contiguous runs, which dynamic
/// programming enumerates exactly; each breakpoint is placed midway between
/// the grid points it separates.
#[allow(clippy::needless_range_loop)]
pub fn fit_multilobe(
    pattern: &AntennaModel,
    k_lobes: usize,
    theta_grid: &[f64],
) -> Result<FitReport<MultiLobeParams>> {
    if k_lobes == 0 {
        return Err(Error::param("fit_multilobe needs k_lobes >= 1"));
    }
    let y = pattern_logs(pattern, theta_grid)?;
    let n = y.len();
    if k_lobes > n {
        return Err(Error::param(format!(
            "{k_lobes} lobes need at least as many grid points"
        )));
    }
    let mut s1 = vec![0.0; n + 1];
    let mut s2 = vec![0.0; n + 1];
    for i in 0..n {
        s1[i + 1] = s1[i] + y[i];
        s2[i + 1] = s2[i] + y[i] * y[i];
    }
    // squared error of y[i..j] around its mean
    let sse = |i: usize, j: usize| {
        let m = (j - i) as f64;
        let s = s1[j] - s1[i];
        (s2[j] - s2[i] - s * s / m).max(0.0)
    };
    // cost[k][j]: best error covering y[..j] with k + 1 lobes
    let mut cost = vec![vec![f64::INFINITY; n + 1]; k_lobes];
    let mut split = vec![vec![0usize; n + 1]; k_lobes];
    for j in 1..=n {
        cost[0][j] = sse(0, j);
    }
    for k in 1..k_lobes {
        for j in (k + 1)..=n {
            let mut best = (f64::INFINITY, 0);
            for i in k..j {
                let c = cost[k - 1][i] + sse(i, j);
                if c < best.0 {
                    best = (c, i);
                }
            }
            cost[k][j] = best.0;
            split[k][j] = best.1;
        }
    }
    let mut bounds = vec![n];
    let mut j = n;
    for k in (1..k_lobes).rev() {
        j = split[k][j];
        bounds.push(j);
    }
    bounds.push(0);
    bounds.reverse();
    let gains: Vec<f64> = bounds
        .windows(2)
        .map(|w| {
            10f64
                .powf((s1[w[1]] - s1[w[0]]) / (w[1] - w[0]) as f64)
                .min(1.0)
        })
        .collect();
    let breaks: Vec<f64> = bounds[1..k_lobes]
        .iter()
        .map(|&b| 0.5 * (theta_grid[b - 1] + theta_grid[b]))
        .collect();
    let ml = MultiLobeParams::new(gains, breaks)?;
    let objective = multilobe_objective(pattern, &ml, theta_grid)?;
    Ok(FitReport {
        params: ml,
        objective,
        restarts: 1,
        converged: true,
    })
}
