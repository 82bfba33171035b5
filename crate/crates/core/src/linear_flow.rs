//! Closed-form solution of the forced, damped linear oscillator between impacts.
//!
//! The free motion obeys `u'' + 2 zeta omega_n u' + omega_n^2 u = g(t)` with
//! `g(t) = F cos(omega_f t + phase0)`. Because the equation is linear, the flow
//! splits exactly into the steady-state (particular) response plus a decaying
//! transient propagated by the fundamental matrix, so no numerical integration
//! is ever needed.

use crate::error::Error;
use crate::mat2::Mat2;
use crate::scalar::Real;

/// Physical and forcing parameters of the oscillator with a rigid stop at `sigma`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OscillatorConfig<F> {
    /// Damping ratio, `0 <= zeta < 1` (underdamped).
    pub zeta: F,
    /// Natural angular frequency, `> 0`.
    pub omega_n: F,
    /// Forcing amplitude (acceleration units), `>= 0`.
    pub force_amp: F,
    /// Forcing angular frequency, `> 0`.
    pub omega_f: F,
    /// Forcing phase offset.
    pub phase0: F,
    /// Wall position.
    pub sigma: F,
    /// Newtonian restitution coefficient, in `(0, 1]`.
    pub restitution: F,
}

/// Phase point `(u, v)`: position and velocity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct State<F> {
    pub u: F,
    pub v: F,
}

impl<F: Real> State<F> {
    pub fn new(u: F, v: F) -> Self {
        Self { u, v }
    }

    pub fn norm(&self) -> F {
        (self.u * self.u + self.v * self.v).sqrt()
    }

    pub fn add(&self, o: State<F>) -> State<F> {
        State::new(self.u + o.u, self.v + o.v)
    }

    pub fn sub(&self, o: State<F>) -> State<F> {
        State::new(self.u - o.u, self.v - o.v)
    }

    pub fn scale(&self, s: F) -> State<F> {
        State::new(self.u * s, self.v * s)
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

impl<F: Real> Mat2<F> {
    /// Apply the matrix to a phase point.
    pub fn apply(&self, x: State<F>) -> State<F> {
        let (u, v) = self.mul_vec((x.u, x.v));
        State::new(u, v)
    }
}

impl<F: Real> OscillatorConfig<F> {
    pub fn new(
        zeta: F,
        omega_n: F,
        force_amp: F,
        omega_f: F,
        phase0: F,
        sigma: F,
        restitution: F,
    ) -> Result<Self, Error<F>> {
        let cfg = Self {
            zeta,
            omega_n,
            force_amp,
            omega_f,
            phase0,
            sigma,
            restitution,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Error<F>> {
        let bad = |field: &'static str, reason: String| Err(Error::InvalidConfig { field, reason });
        if !self.zeta.is_finite() || self.zeta < F::zero() || self.zeta >= F::one() {
            return bad("zeta", format!("{} is outside [0, 1)", self.zeta));
        }
        if !self.omega_n.is_finite() || self.omega_n <= F::zero() {
            return bad("omega_n", format!("{} must be > 0", self.omega_n));
        }
        if !self.force_amp.is_finite() || self.force_amp < F::zero() {
            return bad("force_amp", format!("{} must be >= 0", self.force_amp));
        }
        if !self.omega_f.is_finite() || self.omega_f <= F::zero() {
            return bad("omega_f", format!("{} must be > 0", self.omega_f));
        }
        if !self.phase0.is_finite() {
            return bad("phase0", format!("{} must be finite", self.phase0));
        }
        if !self.sigma.is_finite() {
            return bad("sigma", format!("{} must be finite", self.sigma));
        }
        if !self.restitution.is_finite()
            || self.restitution <= F::zero()
            || self.restitution > F::one()
        {
            return bad("restitution", format!("{} is outside (0, 1]", self.restitution));
        }
        if self.zeta == F::zero() && self.omega_f == self.omega_n && self.force_amp > F::zero() {
            return bad(
                "omega_f",
                "undamped resonance: omega_f = omega_n with zeta = 0".to_string(),
            );
        }
        Ok(())
    }

    /// Damped angular frequency `omega_0 = omega_n sqrt(1 - zeta^2)`.
    pub fn omega0(&self) -> F {
        self.omega_n * (F::one() - self.zeta * self.zeta).sqrt()
    }

    /// Forcing period `T = 2 pi / omega_f`.
    pub fn period(&self) -> F {
        F::two() * F::PI() / self.omega_f
    }

    /// Velocity-jump weight of the reset map: `w2 = 1 + r` gives `v+ = -r v-`.
    pub fn w2(&self) -> F {
        F::one() + self.restitution
    }

    /// External forcing `g(t) = F cos(omega_f t + phase0)`.
    pub fn forcing(&self, t: F) -> F {
        self.force_amp * (self.omega_f * t + self.phase0).cos()
    }

    /// Right-hand side of the first-order system at `(x, t)`.
    pub fn vector_field(&self, x: State<F>, t: F) -> State<F> {
        let du = x.v;
        let dv = self.forcing(t)
            - F::two() * self.zeta * self.omega_n * x.v
            - self.omega_n * self.omega_n * x.u;
        State::new(du, dv)
    }
}

/// Steady-state response parameters: amplitude and phase lag of
/// `u_p(t) = amp cos(omega_f t + phase0 - psi)`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct SteadyState<F> {
    pub amp: F,
    pub psi: F,
}

pub(crate) fn steady_state<F: Real>(cfg: &OscillatorConfig<F>) -> Result<SteadyState<F>, Error<F>> {
    let wn2 = cfg.omega_n * cfg.omega_n;
    let wf2 = cfg.omega_f * cfg.omega_f;
    let re = wn2 - wf2;
    let im = F::two() * cfg.zeta * cfg.omega_n * cfg.omega_f;
    let den = (re * re + im * im).sqrt();
    if den == F::zero() {
        if cfg.force_amp == F::zero() {
            // Unforced: zero response, phase irrelevant.
            return Ok(SteadyState {
                amp: F::zero(),
                psi: F::zero(),
            });
        }
        return Err(Error::ResonantForcing);
    }
    Ok(SteadyState {
        amp: cfg.force_amp / den,
        psi: im.atan2(re),
    })
}

impl<F: Real> SteadyState<F> {
    pub fn position(&self, cfg: &OscillatorConfig<F>, t: F) -> F {
        self.amp * (cfg.omega_f * t + cfg.phase0 - self.psi).cos()
    }

    pub fn velocity(&self, cfg: &OscillatorConfig<F>, t: F) -> F {
        -self.amp * cfg.omega_f * (cfg.omega_f * t + cfg.phase0 - self.psi).sin()
    }

    pub fn state(&self, cfg: &OscillatorConfig<F>, t: F) -> State<F> {
        State::new(self.position(cfg, t), self.velocity(cfg, t))
    }
}

/// Fundamental (variational) matrix `N_tau`: propagates state deviations over
/// time `tau` for the underdamped oscillator.
///
/// Rejects `zeta >= 1`; negative `tau` propagates backwards.
pub fn fundamental_matrix<F: Real>(cfg: &OscillatorConfig<F>, tau: F) -> Result<Mat2<F>, Error<F>> {
    if cfg.zeta >= F::one() || cfg.zeta < F::zero() || !cfg.zeta.is_finite() {
        return Err(Error::NotUnderdamped { zeta: cfg.zeta });
    }
    Ok(fundamental_matrix_unchecked(cfg, tau))
}

pub(crate) fn fundamental_matrix_unchecked<F: Real>(cfg: &OscillatorConfig<F>, tau: F) -> Mat2<F> {
    trig_factor(cfg, tau).scale((-cfg.zeta * cfg.omega_n * tau).exp())
}

/// Unit-determinant trigonometric factor of `N_tau` (damping exponential split off).
pub(crate) fn trig_factor<F: Real>(cfg: &OscillatorConfig<F>, tau: F) -> Mat2<F> {
    let om0 = cfg.omega0();
    let k = cfg.zeta / (F::one() - cfg.zeta * cfg.zeta).sqrt();
    let (s, c) = (om0 * tau).sin_cos();
    Mat2::new(
        c + k * s,
        s / om0,
        -(cfg.omega_n * cfg.omega_n / om0) * s,
        c - k * s,
    )
}

/// Steady-state (particular) response of the forced oscillator at time `t`.
///
/// Errors on undamped resonance (`zeta = 0`, `omega_f = omega_n`), where no
/// bounded steady state exists.
pub fn particular_solution<F: Real>(cfg: &OscillatorConfig<F>, t: F) -> Result<State<F>, Error<F>> {
    let ss = steady_state(cfg)?;
    Ok(ss.state(cfg, t))
}

/// Time-`tau` flow map `x(t0) -> x(t0 + tau)` as `N_tau` plus the affine
/// offset carrying the particular solution.
#[derive(Clone, Copy, Debug)]
pub struct AffineFlow<F> {
    pub n: Mat2<F>,
    pub offset: State<F>,
    pub tau: F,
}

impl<F: Real> AffineFlow<F> {
    /// Build the flow over `[t0, t0 + tau]`. The config must be valid.
    pub fn over(cfg: &OscillatorConfig<F>, t0: F, tau: F) -> Self {
        let ss = steady_state(cfg).expect("validated config has a steady state");
        let n = fundamental_matrix_unchecked(cfg, tau);
        let xp0 = ss.state(cfg, t0);
        let xp1 = ss.state(cfg, t0 + tau);
        let offset = xp1.sub(n.apply(xp0));
        Self { n, offset, tau }
    }

    pub fn apply(&self, x: State<F>) -> State<F> {
        self.n.apply(x).add(self.offset)
    }
}

/// Exact state at `t0 + tau` for the wall-free oscillator started at `(x0, t0)`.
///
/// The config must satisfy [`OscillatorConfig::validate`].
pub fn flow<F: Real>(cfg: &OscillatorConfig<F>, x0: State<F>, t0: F, tau: F) -> State<F> {
    AffineFlow::over(cfg, t0, tau).apply(x0)
}

/// Precomputed closed-form evaluator for one flow segment, used heavily by
/// event detection. Evaluates `u`, `v`, and `v'` at `t0 + dt` with one exp
/// and two sin/cos calls.
#[derive(Clone, Copy, Debug)]
pub(crate) struct FlowEval<F> {
    zw: F,
    om0: F,
    amp: F,
    arg0: F, // omega_f * t0 + phase0 - psi
    omf: F,
    c_cos: F,
    c_sin: F,
    pub t0: F,
}

impl<F: Real> FlowEval<F> {
    pub fn new(cfg: &OscillatorConfig<F>, x0: State<F>, t0: F) -> Self {
        let ss = steady_state(cfg).expect("validated config has a steady state");
        let zw = cfg.zeta * cfg.omega_n;
        let om0 = cfg.omega0();
        let up0 = ss.position(cfg, t0);
        let vp0 = ss.velocity(cfg, t0);
        let c_cos = x0.u - up0;
        let c_sin = (x0.v - vp0 + zw * c_cos) / om0;
        Self {
            zw,
            om0,
            amp: ss.amp,
            arg0: cfg.omega_f * t0 + cfg.phase0 - ss.psi,
            omf: cfg.omega_f,
            c_cos,
            c_sin,
            t0,
        }
    }

    pub fn position(&self, dt: F) -> F {
        let e = (-self.zw * dt).exp();
        let (s, c) = (self.om0 * dt).sin_cos();
        e * (self.c_cos * c + self.c_sin * s) + self.amp * (self.arg0 + self.omf * dt).cos()
    }

    pub fn velocity(&self, dt: F) -> F {
        let e = (-self.zw * dt).exp();
        let (s, c) = (self.om0 * dt).sin_cos();
        let trans = (-self.zw * self.c_cos + self.om0 * self.c_sin) * c
            + (-self.zw * self.c_sin - self.om0 * self.c_cos) * s;
        e * trans - self.amp * self.omf * (self.arg0 + self.omf * dt).sin()
    }

    pub fn acceleration(&self, dt: F) -> F {
        let e = (-self.zw * dt).exp();
        let (s, c) = (self.om0 * dt).sin_cos();
        let d_cos = -self.zw * self.c_cos + self.om0 * self.c_sin;
        let d_sin = -self.zw * self.c_sin - self.om0 * self.c_cos;
        let trans = (-self.zw * d_cos + self.om0 * d_sin) * c
            + (-self.zw * d_sin - self.om0 * d_cos) * s;
        e * trans - self.amp * self.omf * self.omf * (self.arg0 + self.omf * dt).cos()
    }

    pub fn state(&self, dt: F) -> State<F> {
        State::new(self.position(dt), self.velocity(dt))
    }
}
