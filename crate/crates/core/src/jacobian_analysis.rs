//! Jacobians of the stroboscopic map, periodic-orbit location, the
//! trace/determinant sweep across grazing, the singularity-exponent fit, and
//! the trace-coefficient identity check.
//!
//! All stroboscopic maps here are taken at forcing phase 0.

use crate::error::Error;
use crate::grazing_zdm::{find_grazing_orbit, h_min_forward, zdm_jacobian, GrazingInfo};
use crate::hybrid_sim::strobe_map_counted;
use crate::linear_flow::{
    fundamental_matrix_unchecked, particular_solution, trig_factor, OscillatorConfig, State,
};
use crate::mat2::Mat2;
use crate::scalar::Real;

/// Which side of the grazing border a map evaluation sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    NonImpacting,
    Impacting,
}

impl Side {
    pub fn as_str(&self) -> &'static str {
        match self {
            Side::NonImpacting => "non_impacting",
            Side::Impacting => "impacting",
        }
    }
}

/// How a Jacobian was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JacobianMethod {
    AnalyticComposition,
    FiniteDifference,
}

/// A 2x2 stroboscopic-map Jacobian with its invariants recomputed from the
/// entries, never stored independently.
#[derive(Clone, Copy, Debug)]
pub struct JacobianReport<F> {
    pub j: Mat2<F>,
    pub side: Side,
    pub h_min_at_point: F,
    pub method: JacobianMethod,
}

impl<F: Real> JacobianReport<F> {
    pub fn trace(&self) -> F {
        self.j.trace()
    }

    pub fn det(&self) -> F {
        self.j.det()
    }
}

/// One record of a wall-position sweep across grazing.
#[derive(Clone, Copy, Debug)]
pub struct SweepRecord<F> {
    pub delta_sigma: F,
    pub sigma: F,
    pub h_min: F,
    pub trace: F,
    pub det: F,
    pub fixed_point: State<F>,
    pub side: Side,
}

/// Sweep output: converged records plus per-delta diagnostics for the skipped ones.
#[derive(Clone, Debug)]
pub struct SweepOutcome<F: Real> {
    pub records: Vec<SweepRecord<F>>,
    pub skipped: Vec<(F, Error<F>)>,
}

/// Finite-difference step policy for [`numeric_jacobian`].
///
/// On the impacting side the probe in direction `e_i` moves the virtual
/// penetration by the fraction `depth_fraction` of its current value, with the
/// sign chosen to deepen the penetration so the probe stays on the same side
/// of the border. The map's derivative varies on the penetration scale, so a
/// constant relative depth keeps the truncation error uniform along the
/// singular branch. A probe that still crosses the border (detected by an
/// impact-count mismatch) is retried at `step / 10` up to `max_retries` times.
#[derive(Clone, Copy, Debug)]
pub struct StepPolicy<F> {
    /// Relative penetration change per probe on the impacting side.
    pub depth_fraction: F,
    /// Absolute step on the non-impacting (affine) side.
    pub clear_step: F,
    /// Border-crossing retries, each shrinking the step tenfold.
    pub max_retries: u32,
}

impl<F: Real> Default for StepPolicy<F> {
    fn default() -> Self {
        Self {
            depth_fraction: F::cast(2.5e-3),
            clear_step: F::cast(1e-6),
            max_retries: 4,
        }
    }
}

impl<F: Real> StepPolicy<F> {
    fn validate(&self) -> Result<(), Error<F>> {
        if !(self.depth_fraction > F::zero()) || !self.depth_fraction.is_finite() {
            return Err(Error::InvalidConfig {
                field: "step_policy.depth_fraction",
                reason: format!("{} must be finite and > 0", self.depth_fraction),
            });
        }
        if !(self.clear_step > F::zero()) || !self.clear_step.is_finite() {
            return Err(Error::InvalidConfig {
                field: "step_policy.clear_step",
                reason: format!("{} must be finite and > 0", self.clear_step),
            });
        }
        Ok(())
    }
}

const NEWTON_MAX_ITER: usize = 50;
const NEWTON_TOL: f64 = 1e-9;
const BORDER_FLIP_LIMIT: usize = 6;

fn strobe<F: Real>(cfg: &OscillatorConfig<F>, x: State<F>) -> Result<(State<F>, usize), Error<F>> {
    strobe_map_counted(cfg, x, F::zero())
}

/// The non-impacting stroboscopic map is affine with matrix `N_T`; its unique
/// fixed point is the steady-state sample at phase 0.
fn affine_fixed_point<F: Real>(cfg: &OscillatorConfig<F>) -> Result<State<F>, Error<F>> {
    particular_solution(cfg, F::zero())
}

/// Locate a fixed point of the stroboscopic map.
///
/// If both the guess's orbit and the closed-form affine fixed point are
/// non-impacting, the affine fixed point `(I - N_T)^{-1}(offset)` — i.e. the
/// steady-state sample — is returned exactly. Otherwise Newton iteration runs
/// on the exact simulator with one-sided finite-difference Jacobians, keeping
/// probes on the iterate's side of the border.
pub fn find_fixed_point<F: Real>(
    cfg: &OscillatorConfig<F>,
    x_guess: State<F>,
) -> Result<State<F>, Error<F>> {
    cfg.validate()?;
    let (_, guess_impacts) = strobe(cfg, x_guess)?;
    if guess_impacts == 0 {
        let aff = affine_fixed_point(cfg)?;
        if let Ok((_, 0)) = strobe(cfg, aff) {
            return Ok(aff);
        }
    }

    let policy = StepPolicy::default();
    let mut x = x_guess;
    let mut side_flips = 0usize;
    let mut last_side: Option<bool> = None;
    let mut residual = F::infinity();

    for _ in 0..NEWTON_MAX_ITER {
        let (px, impacts) = strobe(cfg, x)?;
        let g = px.sub(x);
        residual = g.norm();
        if residual <= F::cast(NEWTON_TOL) {
            return Ok(x);
        }
        let impacting = impacts > 0;
        if let Some(prev) = last_side {
            if prev != impacting {
                side_flips += 1;
                if side_flips >= BORDER_FLIP_LIMIT {
                    return Err(Error::BorderStraddle {
                        last_u: x.u,
                        last_v: x.v,
                    });
                }
            }
        }
        last_side = Some(impacting);

        let j = if impacting {
            numeric_jacobian(cfg, x, &policy)?.j
        } else {
            fundamental_matrix_unchecked(cfg, cfg.period())
        };
        let lhs = j - Mat2::identity();
        let step = match lhs.solve((-g.u, -g.v)) {
            Some(s) => State::new(s.0, s.1),
            None => {
                return Err(Error::NoConvergence {
                    iterations: NEWTON_MAX_ITER,
                    residual,
                })
            }
        };
        // Keep iterates local; the basin near grazing is thin.
        let clamp = F::cast(0.25) * (F::one() + x.norm());
        let x_next = if step.norm() > clamp {
            x.add(step.scale(clamp / step.norm()))
        } else {
            x.add(step)
        };
        if !x_next.is_finite() {
            return Err(Error::NoConvergence {
                iterations: NEWTON_MAX_ITER,
                residual,
            });
        }
        x = x_next;
    }
    Err(Error::NoConvergence {
        iterations: NEWTON_MAX_ITER,
        residual,
    })
}

/// One-sided finite-difference Jacobian of the exact stroboscopic map at `x_fp`.
///
/// Probes stay on the same side of the impacting/non-impacting border as the
/// base point; crossings are detected by impact-count mismatch and retried
/// with a tenfold smaller step. The report carries the virtual penetration
/// (`h_min`) at the base point.
pub fn numeric_jacobian<F: Real>(
    cfg: &OscillatorConfig<F>,
    x_fp: State<F>,
    policy: &StepPolicy<F>,
) -> Result<JacobianReport<F>, Error<F>> {
    policy.validate()?;
    let (base, base_impacts) = strobe(cfg, x_fp)?;
    let hm = h_min_forward(cfg, x_fp, F::zero())?;

    if base_impacts == 0 {
        // Affine side: any step reproduces N_T; central differences for symmetry.
        let h = policy.clear_step * (F::one() + x_fp.norm());
        let mut cols = [State::new(F::zero(), F::zero()); 2];
        for (i, dir) in [State::new(F::one(), F::zero()), State::new(F::zero(), F::one())]
            .into_iter()
            .enumerate()
        {
            let (pp, cp) = strobe(cfg, x_fp.add(dir.scale(h)))?;
            let (pm, cm) = strobe(cfg, x_fp.sub(dir.scale(h)))?;
            if cp != 0 || cm != 0 {
                return Err(Error::StepTooLarge {
                    retries: policy.max_retries,
                });
            }
            cols[i] = pp.sub(pm).scale(F::half() / h);
        }
        return Ok(JacobianReport {
            j: Mat2::new(cols[0].u, cols[1].u, cols[0].v, cols[1].v),
            side: Side::NonImpacting,
            h_min_at_point: hm,
            method: JacobianMethod::FiniteDifference,
        });
    }

    let pen = -hm;
    if !(pen > F::zero()) {
        return Err(Error::NonPenetrating { h_min: hm });
    }

    // Gradient of h_min for per-direction step scaling and side selection.
    let delta = F::cast(1e-7) * (F::one() + x_fp.norm());
    let mut grad = [F::zero(); 2];
    for (i, dir) in [State::new(F::one(), F::zero()), State::new(F::zero(), F::one())]
        .into_iter()
        .enumerate()
    {
        let hp = h_min_forward(cfg, x_fp.add(dir.scale(delta)), F::zero())?;
        let hmn = h_min_forward(cfg, x_fp.sub(dir.scale(delta)), F::zero())?;
        grad[i] = (hp - hmn) / (F::two() * delta);
    }

    let mut cols = [State::new(F::zero(), F::zero()); 2];
    for (i, dir) in [State::new(F::one(), F::zero()), State::new(F::zero(), F::one())]
        .into_iter()
        .enumerate()
    {
        let g = grad[i];
        let g_mag = g.abs().max(F::cast(1e-12));
        let mut h = (policy.depth_fraction * pen / g_mag)
            .min(F::cast(1e-4) * (F::one() + x_fp.norm()));
        // Deepen the penetration: h_min must decrease along the probe.
        let mut sign = if g > F::zero() { -F::one() } else { F::one() };
        let mut column = None;
        'retry: for _ in 0..=policy.max_retries {
            for attempt in 0..2 {
                let s = if attempt == 0 { sign } else { -sign };
                let probe = x_fp.add(dir.scale(s * h));
                if let Ok((pp, cp)) = strobe(cfg, probe) {
                    if cp == base_impacts {
                        column = Some(pp.sub(base).scale(F::one() / (s * h)));
                        if attempt == 1 {
                            sign = -sign;
                        }
                        break 'retry;
                    }
                }
            }
            h = h / F::cast(10.0);
        }
        match column {
            Some(colv) => cols[i] = colv,
            None => {
                return Err(Error::StepTooLarge {
                    retries: policy.max_retries,
                })
            }
        }
    }

    Ok(JacobianReport {
        j: Mat2::new(cols[0].u, cols[1].u, cols[0].v, cols[1].v),
        side: Side::Impacting,
        h_min_at_point: hm,
        method: JacobianMethod::FiniteDifference,
    })
}

/// Analytic near-grazing Jacobian: the composition `N_2 J_zdm N_1` with
/// `N_1 = N_{s0}` and `N_2 = N_{T - s0}`.
///
/// Its determinant is the Liouville factor `exp(-2 zeta omega_n T)` for every
/// penetration, because the discontinuity-map factor has unit determinant.
pub fn analytic_jacobian<F: Real>(
    cfg: &OscillatorConfig<F>,
    graze: &GrazingInfo<F>,
    h_min_value: F,
) -> Result<JacobianReport<F>, Error<F>> {
    let jz = zdm_jacobian(cfg, graze, h_min_value)?;
    let n1 = fundamental_matrix_unchecked(cfg, graze.s0);
    let n2 = fundamental_matrix_unchecked(cfg, cfg.period() - graze.s0);
    Ok(JacobianReport {
        j: n2 * jz * n1,
        side: Side::Impacting,
        h_min_at_point: h_min_value,
        method: JacobianMethod::AnalyticComposition,
    })
}

/// Coefficient of the singular term in the trace of the analytic composition,
/// computed from the trigonometric factors both ways:
/// `lhs = n22 n11 + n24 n12` (entries at `s0` and `T - s0`, damping
/// exponentials excluded) and `rhs = sin(omega_0 T) / omega_0`.
///
/// The two agree for every `s0`; the coefficient vanishes only at
/// `omega_0 = m omega_f / 2`.
pub fn trace_coefficient_identity<F: Real>(cfg: &OscillatorConfig<F>, s0: F) -> (F, F) {
    let m1 = trig_factor(cfg, s0);
    let m2 = trig_factor(cfg, cfg.period() - s0);
    let lhs = m2.a12 * m1.a11 + m2.a22 * m1.a12;
    let om0 = cfg.omega0();
    let rhs = (om0 * cfg.period()).sin() / om0;
    (lhs, rhs)
}

/// True when `omega_0` sits within `tol` of a multiple of `omega_f / 2`, where
/// the singular trace coefficient vanishes and exponent fits are meaningless.
pub fn is_resonant<F: Real>(cfg: &OscillatorConfig<F>, tol: F) -> bool {
    let ratio = F::two() * cfg.omega0() / cfg.omega_f;
    (ratio - ratio.round()).abs() <= tol
}

/// Feedback coefficient of the square-root kick into the penetration of the
/// period-1 orbit: `beta = -H_x N_1 (I - N_T)^{-1} N_2 W*`.
///
/// Its sign decides on which side of the grazing wall position the impacting
/// period-1 orbit exists, and the penetration of that orbit scales
/// quadratically with the wall offset: `p ~ (delta / beta')^2` near grazing.
pub fn penetration_feedback<F: Real>(
    cfg: &OscillatorConfig<F>,
    graze: &GrazingInfo<F>,
) -> Result<F, Error<F>> {
    let n1 = fundamental_matrix_unchecked(cfg, graze.s0);
    let n2 = fundamental_matrix_unchecked(cfg, cfg.period() - graze.s0);
    let n_t = n2 * n1;
    let m = (Mat2::identity() - n_t).inverse().ok_or(Error::NoConvergence {
        iterations: 0,
        residual: F::infinity(),
    })?;
    let w_star = State::new(F::zero(), cfg.w2());
    let v = m.apply(n2.apply(w_star));
    // -H_x N1 v with H_x = (-1, 0) reduces to the first row of N1 applied to v.
    Ok(n1.a11 * v.u + n1.a12 * v.v)
}

/// Model-based seed for the impacting period-1 orbit at target penetration `p`:
/// wall offset `delta = -(p + beta sqrt(2 a* p))` from grazing and strobe-point
/// displacement `-sqrt(2 a* p) (I - N_T)^{-1} N_2 W*`.
fn impacting_orbit_model<F: Real>(
    cfg: &OscillatorConfig<F>,
    graze: &GrazingInfo<F>,
    p: F,
) -> Result<(F, State<F>), Error<F>> {
    let beta = penetration_feedback(cfg, graze)?;
    let q = (F::two() * graze.a_star * p).sqrt();
    let delta = -(p + beta * q);
    let n1 = fundamental_matrix_unchecked(cfg, graze.s0);
    let n2 = fundamental_matrix_unchecked(cfg, cfg.period() - graze.s0);
    let m = (Mat2::identity() - n2 * n1)
        .inverse()
        .ok_or(Error::NoConvergence {
            iterations: 0,
            residual: F::infinity(),
        })?;
    let w_star = State::new(F::zero(), cfg.w2());
    let dx = m.apply(n2.apply(w_star)).scale(-q);
    let x0 = affine_fixed_point(cfg)?;
    Ok((delta, x0.add(dx)))
}

/// Wall-position sweep across grazing: for each `sigma = sigma_star + delta`,
/// locate the period-1 fixed point and measure its Jacobian.
///
/// `delta > 0` (wall clear of the steady orbit) uses the closed-form affine
/// fixed point and the exact matrix `N_T`. `delta <= 0` runs Newton on the
/// exact simulator, seeded by continuation from the previous converged fixed
/// point. Deltas whose fixed point fails to converge are skipped with a
/// diagnostic; the sweep errors if more than half fail.
pub fn grazing_sweep<F: Real>(
    cfg: &OscillatorConfig<F>,
    deltas: &[F],
) -> Result<SweepOutcome<F>, Error<F>> {
    let graze = find_grazing_orbit(cfg)?;
    let mut records = Vec::new();
    let mut skipped = Vec::new();

    // Non-impacting side: the steady orbit is wall-independent, so every
    // record carries the same exact affine Jacobian.
    let n_t = fundamental_matrix_unchecked(cfg, cfg.period());
    for &delta in deltas.iter().filter(|d| **d > F::zero()) {
        let mut c = *cfg;
        c.sigma = graze.sigma_star + delta;
        match affine_fixed_point(&c) {
            Ok(fp) => records.push(SweepRecord {
                delta_sigma: delta,
                sigma: c.sigma,
                h_min: delta,
                trace: n_t.trace(),
                det: n_t.det(),
                fixed_point: fp,
                side: Side::NonImpacting,
            }),
            Err(e) => skipped.push((delta, e)),
        }
    }

    // Impacting side, walked from the border outward with continuation seeding.
    let mut negs: Vec<F> = deltas.iter().copied().filter(|d| *d <= F::zero()).collect();
    negs.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).expect("finite deltas"));
    let policy = StepPolicy::default();
    let mut seed: Option<State<F>> = None;
    for delta in negs {
        let mut c = *cfg;
        c.sigma = graze.sigma_star + delta;
        let guess = match seed {
            Some(s) => s,
            None => match impacting_orbit_model(&c, &graze, delta.abs().max(F::cast(1e-12))) {
                Ok((_, x)) => x,
                Err(_) => graze.x_star,
            },
        };
        match find_fixed_point(&c, guess).and_then(|fp| {
            numeric_jacobian(&c, fp, &policy).map(|jac| (fp, jac))
        }) {
            Ok((fp, jac)) => {
                seed = Some(fp);
                records.push(SweepRecord {
                    delta_sigma: delta,
                    sigma: c.sigma,
                    h_min: jac.h_min_at_point,
                    trace: jac.trace(),
                    det: jac.det(),
                    fixed_point: fp,
                    side: jac.side,
                });
            }
            Err(e) => skipped.push((delta, e)),
        }
    }

    if skipped.len() * 2 > deltas.len() {
        return Err(Error::SweepMostlyFailed {
            failed: skipped.len(),
            total: deltas.len(),
        });
    }
    records.sort_by(|a, b| {
        a.delta_sigma
            .partial_cmp(&b.delta_sigma)
            .expect("finite deltas")
    });
    Ok(SweepOutcome { records, skipped })
}

/// Follow the impacting period-1 branch to prescribed virtual penetration
/// depths, wherever in wall position that branch lives.
///
/// The near-grazing impacting orbit sits at a wall offset whose sign is fixed
/// by [`penetration_feedback`] and whose penetration scales quadratically with
/// the offset, so targeting penetrations directly is the robust
/// parametrization. Each target seeds Newton with the local square-root model
/// and records the measured (not target) penetration.
pub fn impacting_branch_sweep<F: Real>(
    cfg: &OscillatorConfig<F>,
    penetrations: &[F],
) -> Result<SweepOutcome<F>, Error<F>> {
    let graze = find_grazing_orbit(cfg)?;
    let policy = StepPolicy::default();
    let mut records = Vec::new();
    let mut skipped = Vec::new();

    for &p in penetrations {
        if !(p > F::zero()) || !p.is_finite() {
            skipped.push((
                p,
                Error::InvalidConfig {
                    field: "penetrations",
                    reason: format!("{p} must be finite and > 0"),
                },
            ));
            continue;
        }
        let attempt = impacting_orbit_model(cfg, &graze, p).and_then(|(delta, seed)| {
            let mut c = *cfg;
            c.sigma = graze.sigma_star + delta;
            let fp = find_fixed_point(&c, seed)?;
            let jac = numeric_jacobian(&c, fp, &policy)?;
            if jac.side != Side::Impacting {
                return Err(Error::NoConvergence {
                    iterations: NEWTON_MAX_ITER,
                    residual: F::infinity(),
                });
            }
            Ok(SweepRecord {
                delta_sigma: delta,
                sigma: c.sigma,
                h_min: jac.h_min_at_point,
                trace: jac.trace(),
                det: jac.det(),
                fixed_point: fp,
                side: jac.side,
            })
        });
        match attempt {
            Ok(rec) => records.push(rec),
            Err(e) => skipped.push((p, e)),
        }
    }

    if skipped.len() * 2 > penetrations.len().max(1) {
        return Err(Error::SweepMostlyFailed {
            failed: skipped.len(),
            total: penetrations.len(),
        });
    }
    records.sort_by(|a, b| {
        a.delta_sigma
            .partial_cmp(&b.delta_sigma)
            .expect("finite deltas")
    });
    Ok(SweepOutcome { records, skipped })
}

/// Least-squares slope of `log |trace - trace_linear|` against `log(-h_min)`
/// over the impacting records; the non-impacting records in the same list
/// supply the reference trace. Returns `(slope, r_squared)`; the square-root
/// singularity shows as slope -1/2.
///
/// Requires at least 5 impacting records spanning at least 2 decades of
/// penetration.
pub fn fit_singularity_exponent<F: Real>(records: &[SweepRecord<F>]) -> Result<(F, F), Error<F>> {
    const MIN_RECORDS: usize = 5;
    const MIN_DECADES: f64 = 2.0;

    let trace_linear = records
        .iter()
        .find(|r| r.side == Side::NonImpacting)
        .map(|r| r.trace)
        .ok_or(Error::MissingReference)?;

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in records
        .iter()
        .filter(|r| r.side == Side::Impacting && r.h_min < F::zero())
    {
        let pen = -r.h_min;
        let dev = (r.trace - trace_linear).abs();
        if dev > F::zero() {
            xs.push(pen.ln());
            ys.push(dev.ln());
        }
    }

    let decades = match (
        xs.iter().cloned().fold(F::infinity(), F::min),
        xs.iter().cloned().fold(F::neg_infinity(), F::max),
    ) {
        (lo, hi) if lo.is_finite() && hi.is_finite() => {
            ((hi - lo) / F::cast(std::f64::consts::LN_10))
                .to_f64()
                .unwrap_or(0.0)
        }
        _ => 0.0,
    };
    if xs.len() < MIN_RECORDS || decades < MIN_DECADES {
        return Err(Error::InsufficientDecades {
            records: xs.len(),
            decades,
            min_records: MIN_RECORDS,
            min_decades: MIN_DECADES,
        });
    }

    let n = F::cast(xs.len() as f64);
    let mean_x = xs.iter().fold(F::zero(), |a, &b| a + b) / n;
    let mean_y = ys.iter().fold(F::zero(), |a, &b| a + b) / n;
    let mut sxx = F::zero();
    let mut sxy = F::zero();
    let mut syy = F::zero();
    for (&x, &y) in xs.iter().zip(ys.iter()) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx = sxx + dx * dx;
        sxy = sxy + dx * dy;
        syy = syy + dy * dy;
    }
    let slope = sxy / sxx;
    let r2 = if syy > F::zero() {
        (sxy * sxy) / (sxx * syy)
    } else {
        F::one()
    };
    Ok((slope, r2))
}
