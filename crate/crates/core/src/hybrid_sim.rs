//! Event-driven simulation of the impacting system: closed-form free flight,
//! impact detection on the wall `u = sigma`, velocity reset, and the exact
//! stroboscopic map over one forcing period.

use crate::error::Error;
use crate::linear_flow::{flow, FlowEval, OscillatorConfig, State};
use crate::scalar::Real;

/// Hard cap on impacts within a single forcing period. Exceeding it means the
/// trajectory is entering a sticking/chatter accumulation, which this crate
/// detects and aborts rather than resolves.
pub const CHATTER_BUDGET: usize = 1000;

/// One wall impact: time, states either side of the reset, and the boundary
/// approach rate `H_x F = -v` just before contact.
#[derive(Clone, Copy, Debug)]
pub struct ImpactEvent<F> {
    pub t: F,
    pub pre_state: State<F>,
    pub post_state: State<F>,
    pub normal_velocity: F,
}

/// Simulation output: sampled states, impacts, and once-per-period strobe points.
#[derive(Clone, Debug)]
pub struct Trajectory<F> {
    pub samples: Vec<(F, State<F>)>,
    pub impacts: Vec<ImpactEvent<F>>,
    pub strobe_points: Vec<State<F>>,
}

/// Boundary clearance `H(x) = sigma - u`; the admissible region is `H >= 0`.
pub fn boundary_h<F: Real>(cfg: &OscillatorConfig<F>, x: State<F>) -> F {
    cfg.sigma - x.u
}

/// Rate of change of `H` along the flow: `H_x F = -v`.
pub fn normal_velocity<F: Real>(_cfg: &OscillatorConfig<F>, x: State<F>) -> F {
    -x.v
}

/// Second rate of change of `H` along the flow at `(x, t)`:
/// `d(-v)/dt = omega_n^2 u + 2 zeta omega_n v - g(t)`.
pub fn normal_acceleration<F: Real>(cfg: &OscillatorConfig<F>, x: State<F>, t: F) -> F {
    cfg.omega_n * cfg.omega_n * x.u + F::two() * cfg.zeta * cfg.omega_n * x.v - cfg.forcing(t)
}

/// Newtonian reset at the wall: position unchanged, `v -> -r v`.
///
/// A grazing contact (`v = 0`) is a fixed point of the reset.
pub fn apply_reset<F: Real>(cfg: &OscillatorConfig<F>, x: State<F>) -> State<F> {
    State::new(x.u, x.v - cfg.w2() * x.v)
}

/// Scan step for event bracketing: resolves both the damped natural motion and
/// the forcing, so the velocity changes sign at most once per step.
fn scan_step<F: Real>(cfg: &OscillatorConfig<F>) -> F {
    let fastest = cfg.omega0().max(cfg.omega_f);
    let quarter = F::PI() / (F::cast(64.0) * fastest);
    (cfg.period() / F::cast(1024.0)).min(quarter)
}

/// Bisect the ascending crossing of `u` through `sigma` inside `(lo, hi]`,
/// then polish with Newton. Returns the crossing time offset from `ev.t0`.
fn locate_crossing<F: Real>(ev: &FlowEval<F>, sigma: F, mut lo: F, mut hi: F) -> F {
    debug_assert!(ev.position(lo) < sigma);
    for _ in 0..80 {
        let mid = F::half() * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ev.position(mid) < sigma {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut t = hi;
    // Newton on u(t) - sigma; the bracket keeps the polish safe.
    for _ in 0..3 {
        let f = ev.position(t) - sigma;
        let d = ev.velocity(t);
        if d == F::zero() {
            break;
        }
        let step = f / d;
        let next = t - step;
        if next.is_finite() && next >= lo && next <= hi + (hi - lo) {
            t = next;
        } else {
            break;
        }
    }
    t
}

/// Refine a local maximum of `u` (zero of `v` with `v' < 0`) inside `[lo, hi]`
/// where `v(lo) > 0 >= v(hi)`. Newton with bisection fallback.
fn refine_maximum<F: Real>(ev: &FlowEval<F>, mut lo: F, mut hi: F) -> F {
    let mut t = F::half() * (lo + hi);
    for _ in 0..60 {
        let v = ev.velocity(t);
        if v > F::zero() {
            lo = t;
        } else {
            hi = t;
        }
        let dv = ev.acceleration(t);
        let newton = if dv != F::zero() { t - v / dv } else { t };
        t = if newton > lo && newton < hi {
            newton
        } else {
            F::half() * (lo + hi)
        };
        if hi - lo <= F::epsilon() * (F::one() + t.abs()) {
            break;
        }
    }
    t
}

/// Earliest wall impact strictly after `t0` within `(t0, t0 + horizon]`, if any.
///
/// Returns the impact time and the pre-impact state `(sigma, v)` with approach
/// velocity `v > 0`, located on the closed-form flow to time accuracy near
/// machine precision. Requires `boundary_h(x0) >= 0` up to rounding.
///
/// Detection combines grid bracketing of the direct crossing with refinement
/// of interior maxima of `u`, so tangential near-grazing penetrations far
/// smaller than the grid step are still caught.
pub fn next_impact<F: Real>(
    cfg: &OscillatorConfig<F>,
    x0: State<F>,
    t0: F,
    horizon: F,
) -> Option<(F, State<F>)> {
    if horizon <= F::zero() {
        return None;
    }
    let ev = FlowEval::new(cfg, x0, t0);
    let sigma = cfg.sigma;
    let step = scan_step(cfg);

    let mut ta = F::zero();
    let mut ua = ev.position(ta);
    let mut va = ev.velocity(ta);
    let touch_tol = F::epsilon() * F::cast(64.0) * (F::one() + sigma.abs());

    while ta < horizon {
        let tb = (ta + step).min(horizon);
        let ub = ev.position(tb);
        let vb = ev.velocity(tb);

        // Direct transversal crossing inside the step.
        if ua < sigma && ub >= sigma {
            let hit = locate_crossing(&ev, sigma, ta, tb);
            return finish_hit(&ev, sigma, hit, t0);
        }

        // Interior maximum of u that may poke above the wall.
        if ua < sigma && va > F::zero() && vb <= F::zero() {
            let tm = refine_maximum(&ev, ta, tb);
            let um = ev.position(tm);
            if um - sigma > touch_tol {
                let hit = locate_crossing(&ev, sigma, ta, tm);
                return finish_hit(&ev, sigma, hit, t0);
            }
        }

        ta = tb;
        ua = ub;
        va = vb;
    }
    None
}

fn finish_hit<F: Real>(ev: &FlowEval<F>, sigma: F, hit: F, t0: F) -> Option<(F, State<F>)> {
    let v = ev.velocity(hit);
    if v < F::zero() {
        return None;
    }
    // Snap the position onto the wall; the located time carries the accuracy.
    Some((t0 + hit, State::new(sigma, v)))
}

/// Advance the hybrid system from `(x, t_start)` over `duration`, applying
/// resets at each detected impact. Returns the final state and impact count.
pub(crate) fn advance<F: Real>(
    cfg: &OscillatorConfig<F>,
    mut x: State<F>,
    t_start: F,
    duration: F,
    mut on_impact: impl FnMut(&ImpactEvent<F>),
) -> Result<(State<F>, usize), Error<F>> {
    let t_end = t_start + duration;
    let mut tc = t_start;
    let mut impacts = 0usize;
    let period = cfg.period();
    let mut bucket_start = t_start;
    let mut bucket_count = 0usize;

    loop {
        match next_impact(cfg, x, tc, t_end - tc) {
            Some((th, pre)) => {
                let post = apply_reset(cfg, pre);
                impacts += 1;
                while th >= bucket_start + period {
                    bucket_start = bucket_start + period;
                    bucket_count = 0;
                }
                bucket_count += 1;
                if bucket_count > CHATTER_BUDGET {
                    return Err(Error::ChatterDetected {
                        count: bucket_count,
                        budget: CHATTER_BUDGET,
                    });
                }
                // Sticking onset: resting contact accelerating into the wall.
                let wallward = -normal_acceleration(cfg, post, th);
                if post.v.abs() <= F::epsilon() * F::cast(16.0) && wallward > F::zero() {
                    return Err(Error::ChatterDetected {
                        count: bucket_count,
                        budget: CHATTER_BUDGET,
                    });
                }
                on_impact(&ImpactEvent {
                    t: th,
                    pre_state: pre,
                    post_state: post,
                    normal_velocity: -pre.v,
                });
                x = post;
                tc = th;
            }
            None => {
                let x_final = flow(cfg, x, tc, t_end - tc);
                return Ok((x_final, impacts));
            }
        }
    }
}

/// Simulate with the default sampling density of 256 points per forcing period.
pub fn simulate<F: Real>(
    cfg: &OscillatorConfig<F>,
    x0: State<F>,
    t0: F,
    duration: F,
) -> Result<Trajectory<F>, Error<F>> {
    simulate_with_sampling(cfg, x0, t0, duration, 256)
}

/// Event-driven simulation: alternates closed-form flow segments and resets.
///
/// `samples` holds states on a uniform grid of `samples_per_period` points per
/// forcing period; `strobe_points` holds states at `t0 + k T` including `k = 0`.
/// Deterministic for fixed inputs.
pub fn simulate_with_sampling<F: Real>(
    cfg: &OscillatorConfig<F>,
    x0: State<F>,
    t0: F,
    duration: F,
    samples_per_period: usize,
) -> Result<Trajectory<F>, Error<F>> {
    cfg.validate()?;
    if duration < F::zero() || !duration.is_finite() {
        return Err(Error::InvalidConfig {
            field: "duration",
            reason: format!("{duration} must be finite and >= 0"),
        });
    }
    let period = cfg.period();
    let dt_sample = period / F::cast(samples_per_period.max(1) as f64);
    let t_end = t0 + duration;

    let mut samples = Vec::new();
    let mut impacts = Vec::new();
    let mut strobe_points = vec![x0];
    samples.push((t0, x0));

    let mut x = x0;
    let mut tc = t0;
    let mut next_sample_idx: u64 = 1;
    let mut next_strobe_idx: u64 = 1;
    let period_budget = cfg.period();
    let mut bucket_start = t0;
    let mut bucket_count = 0usize;

    loop {
        let hit = next_impact(cfg, x, tc, t_end - tc);
        let seg_end = hit.map(|(th, _)| th).unwrap_or(t_end);
        let ev = FlowEval::new(cfg, x, tc);

        // Uniform-grid samples inside (tc, seg_end].
        loop {
            let ts = t0 + dt_sample * F::cast(next_sample_idx as f64);
            if ts > seg_end || ts > t_end {
                break;
            }
            samples.push((ts, ev.state(ts - tc)));
            next_sample_idx += 1;
        }
        // Strobe points inside (tc, seg_end].
        loop {
            let ts = t0 + period * F::cast(next_strobe_idx as f64);
            if ts > seg_end + F::epsilon() * (F::one() + seg_end.abs()) || ts > t_end {
                break;
            }
            strobe_points.push(ev.state(ts - tc));
            next_strobe_idx += 1;
        }

        match hit {
            Some((th, pre)) => {
                let post = apply_reset(cfg, pre);
                while th >= bucket_start + period_budget {
                    bucket_start = bucket_start + period_budget;
                    bucket_count = 0;
                }
                bucket_count += 1;
                if bucket_count > CHATTER_BUDGET {
                    return Err(Error::ChatterDetected {
                        count: bucket_count,
                        budget: CHATTER_BUDGET,
                    });
                }
                let wallward = -normal_acceleration(cfg, post, th);
                if post.v.abs() <= F::epsilon() * F::cast(16.0) && wallward > F::zero() {
                    return Err(Error::ChatterDetected {
                        count: bucket_count,
                        budget: CHATTER_BUDGET,
                    });
                }
                impacts.push(ImpactEvent {
                    t: th,
                    pre_state: pre,
                    post_state: post,
                    normal_velocity: -pre.v,
                });
                x = post;
                tc = th;
            }
            None => break,
        }
    }

    Ok(Trajectory {
        samples,
        impacts,
        strobe_points,
    })
}

/// Stroboscopic map: evolve the hybrid system over exactly one forcing period
/// starting at `(x0, t0)`. Propagates `ChatterDetected`.
pub fn strobe_map<F: Real>(
    cfg: &OscillatorConfig<F>,
    x0: State<F>,
    t0: F,
) -> Result<State<F>, Error<F>> {
    strobe_map_counted(cfg, x0, t0).map(|(x, _)| x)
}

/// Stroboscopic map together with the number of impacts taken during the period.
pub fn strobe_map_counted<F: Real>(
    cfg: &OscillatorConfig<F>,
    x0: State<F>,
    t0: F,
) -> Result<(State<F>, usize), Error<F>> {
    advance(cfg, x0, t0, cfg.period(), |_| {})
}
