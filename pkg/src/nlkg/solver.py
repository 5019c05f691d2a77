"""Time evolution by Strang splitting around the exact linear Klein-Gordon
propagator, a high-accuracy spatially-constant ODE oracle, and the
initial-data library."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import CorruptionError, DomainError
from .grid import Field, GridSpec, State, bessel_symbol, radial_distance, wavenumber_magnitude
from .norms import energy

__all__ = [
    "SolverConfig",
    "Trajectory",
    "linear_propagator",
    "nonlinear_kick",
    "strang_step",
    "evolve",
    "ode_oracle",
    "lifespan_upper",
    "initial_data",
]

TERMINATIONS = ("reached_t_max", "blowup_detected", "dt_underflow", "corruption")


@dataclass(frozen=True)
class SolverConfig:
    """Stepping, adaptivity, and termination settings for :func:`evolve`.

    The step starts from dt_init, is shrunk by the amplitude rule
    dt = dt_init * min(1, theta / ||u||_inf^{p/2}), and is capped by
    cfl_safety * h.  A sup-norm crossing of blowup_threshold terminates
    with 'blowup_detected'; a step below dt_min terminates with
    'dt_underflow'.  `nonlinearity` scales the source |u|^p u; 0 gives the
    pure linear flow.
    """

    dt_init: float
    t_max: float
    dt_min: float = 1e-12
    cfl_safety: float = 1.0
    adapt_theta: float | None = 1.0
    blowup_threshold: float = 1e8
    snapshot_stride: int = 1
    dealias_pad: str = "none"
    nonlinearity: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.dt_min < self.dt_init):
            raise DomainError("need 0 < dt_min < dt_init")
        if self.blowup_threshold <= 1.0:
            raise DomainError("blowup_threshold must exceed 1")
        if self.dealias_pad not in ("none", "pad2x"):
            raise DomainError(f"unknown dealias_pad {self.dealias_pad!r}")
        if self.snapshot_stride < 1:
            raise DomainError("snapshot_stride must be >= 1")


@dataclass
class Trajectory:
    """Stored snapshots plus named scalar time series from one evolution."""

    snapshots: list
    termination: str
    scalar_series: dict
    nl_coeff: float = 1.0
    config: SolverConfig | None = None

    def __post_init__(self):
        if self.termination not in TERMINATIONS:
            raise DomainError(f"unknown termination {self.termination!r}")
        times = self.times
        if np.any(np.diff(times) <= 0.0):
            raise DomainError("snapshot times must be strictly increasing")
        g = self.snapshots[0].grid
        m, p = self.snapshots[0].mass_param, self.snapshots[0].exponent
        for s in self.snapshots:
            if s.grid != g or s.mass_param != m or s.exponent != p:
                raise DomainError("all snapshots must share one grid and one (m, p)")

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.snapshots])

    def series(self, name: str):
        t, vals = self.scalar_series[name]
        return np.asarray(t), np.asarray(vals)


@lru_cache(maxsize=8)
def _propagator_tables(grid: GridSpec, m: float, dt: float):
    """cos(dt w), sin(dt w)/w with the w->0 limit dt, and w sin(dt w)."""
    w = bessel_symbol(wavenumber_magnitude(grid), m)
    c = np.cos(dt * w)
    s = np.sin(dt * w)
    with np.errstate(divide="ignore", invalid="ignore"):
        sinc = np.where(w == 0.0, dt, s / np.where(w == 0.0, 1.0, w))
    return c, sinc, w * s


def _linear_step_arrays(u, v, grid: GridSpec, m: float, dt: float):
    c, sinc, wsin = _propagator_tables(grid, m, dt)
    U = np.fft.fftn(u)
    V = np.fft.fftn(v)
    u_new = np.fft.ifftn(c * U + sinc * V).real
    v_new = np.fft.ifftn(-wsin * U + c * V).real
    return np.ascontiguousarray(u_new), np.ascontiguousarray(v_new)


def linear_propagator(state: State, dt: float) -> State:
    """Exact flow of u_tt - Lap u + m^2 u = 0 over time dt (dt may be negative).

    In spectral space with w = sqrt(m^2 + |xi|^2):
    u -> cos(dt w) u + sin(dt w)/w v,  v -> -w sin(dt w) u + cos(dt w) v,
    with the w = 0 mode using the limits (u + dt v, v).
    """
    if not np.isfinite(dt):
        raise DomainError("dt must be finite")
    u, v = _linear_step_arrays(
        state.u.values, state.v.values, state.grid, state.mass_param, dt
    )
    return State(Field(state.grid, u), Field(state.grid, v), state.time + dt,
                 state.mass_param, state.exponent)


def _nonlinear_source(u: np.ndarray, p: float, dealias_pad: str) -> np.ndarray:
    """|u|^p u, optionally through a 2x zero-padded product for even integer p."""
    even_int = p == int(p) and int(p) % 2 == 0 and p > 0
    if dealias_pad == "pad2x" and even_int:
        n = u.shape[0]
        d = u.ndim
        U = np.fft.fftn(u)
        big = np.zeros((2 * n,) * d, dtype=np.complex128)
        sl = tuple(np.r_[0 : n // 2, 2 * n - n // 2 : 2 * n] for _ in range(d))
        big[np.ix_(*sl)] = U[np.ix_(*(np.r_[0 : n // 2, n - n // 2 : n] for _ in range(d)))]
        u_big = np.fft.ifftn(big).real * (2**d)
        w_big = u_big ** (int(p) + 1)
        W = np.fft.fftn(w_big)
        small = W[np.ix_(*sl)] / (2**d)
        out = np.zeros(u.shape, dtype=np.complex128)
        out[np.ix_(*(np.r_[0 : n // 2, n - n // 2 : n] for _ in range(d)))] = small
        return np.ascontiguousarray(np.fft.ifftn(out).real)
    with np.errstate(over="raise"):
        try:
            return np.abs(u) ** p * u
        except FloatingPointError as exc:
            raise CorruptionError("overflow while evaluating |u|^p u") from exc


def nonlinear_kick(state: State, dt: float, nl_coeff: float = 1.0,
                   dealias_pad: str = "none") -> State:
    """Momentum kick v <- v + dt * nl * |u|^p u; u is unchanged."""
    if nl_coeff == 0.0:
        return State(state.u, state.v, state.time, state.mass_param, state.exponent)
    src = _nonlinear_source(state.u.values, state.exponent, dealias_pad)
    v = state.v.values + dt * nl_coeff * src
    return State(state.u, Field(state.grid, v), state.time, state.mass_param, state.exponent)


def strang_step(state: State, dt: float, nl_coeff: float = 1.0,
                dealias_pad: str = "none") -> State:
    """Second-order split step: half kick, exact linear flow, half kick."""
    s = nonlinear_kick(state, 0.5 * dt, nl_coeff, dealias_pad)
    s = linear_propagator(s, dt)
    s = nonlinear_kick(s, 0.5 * dt, nl_coeff, dealias_pad)
    return s


def _choose_dt(config: SolverConfig, amp: float, h: float, p: float, t_left: float) -> float:
    dt = config.dt_init
    if config.adapt_theta is not None and amp > 0.0:
        dt *= min(1.0, config.adapt_theta / amp ** (0.5 * p))
    dt = min(dt, config.cfl_safety * h, t_left)
    return dt


def evolve(state: State, config: SolverConfig, monitors: dict | None = None) -> Trajectory:
    """Step until t_max, a blowup-threshold crossing, or dt underflow.

    `monitors` maps a series name to a callable State -> float; each is
    recorded every snapshot stride together with the built-in 'sup_norm'
    series.  The run is deterministic for fixed inputs.
    """
    monitors = dict(monitors or {})
    grid = state.grid
    m, p = state.mass_param, state.exponent
    nl = config.nonlinearity
    h = grid.spacing

    u = state.u.values.copy()
    v = state.v.values.copy()
    t = state.time
    t_end = state.time + config.t_max

    snapshots: list[State] = []
    series: dict[str, tuple[list, list]] = {"sup_norm": ([], [])}
    for name in monitors:
        series[name] = ([], [])

    def record(st: State) -> None:
        if snapshots and snapshots[-1].time == st.time:
            return
        snapshots.append(st)
        ts, vals = series["sup_norm"]
        ts.append(st.time)
        vals.append(float(np.max(np.abs(st.u.values))))
        for name, fn in monitors.items():
            ts, vals = series[name]
            ts.append(st.time)
            vals.append(float(fn(st)))

    def current_state() -> State:
        return State(Field(grid, u.copy()), Field(grid, v.copy()), t, m, p)

    record(current_state())
    termination = "reached_t_max"
    steps = 0
    while True:
        amp = float(np.max(np.abs(u)))
        if amp > config.blowup_threshold:
            termination = "blowup_detected"
            break
        t_left = t_end - t
        if t_left <= 1e-14 * max(1.0, abs(t_end)):
            termination = "reached_t_max"
            break
        dt = _choose_dt(config, amp, h, p, t_left)
        if dt < config.dt_min:
            termination = "dt_underflow"
            break
        try:
            if nl != 0.0:
                v_half = v + (0.5 * dt * nl) * _nonlinear_source(u, p, config.dealias_pad)
            else:
                v_half = v
            u_new, v_new = _linear_step_arrays(u, v_half, grid, m, dt)
            if nl != 0.0:
                v_new = v_new + (0.5 * dt * nl) * _nonlinear_source(u_new, p, config.dealias_pad)
        except CorruptionError:
            # overflow in |u|^p u means the amplitude left the floating range
            # entirely: a blowup candidate, with the last good state kept
            termination = "blowup_detected"
            break
        if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(v_new))):
            termination = "corruption"
            break
        u, v = u_new, v_new
        t += dt
        steps += 1
        if steps % config.snapshot_stride == 0:
            record(current_state())
    if termination != "corruption":
        record(current_state())
    frozen = {name: (np.array(ts), np.array(vals)) for name, (ts, vals) in series.items()}
    return Trajectory(snapshots=snapshots, termination=termination,
                      scalar_series=frozen, nl_coeff=nl, config=config)


def ode_oracle(A: float, B: float, m: float, p: float, t_grid,
               stop_amplitude: float | None = None):
    """Integrate v'' + m^2 v = |v|^p v from (A, B) with an order-8 adaptive RK.

    Returns (times, v, v') at the points of t_grid that were reached; the
    integration stops early at |v| = stop_amplitude when given.
    """
    t_grid = np.asarray(t_grid, dtype=np.float64)

    def rhs(_t, y):
        vv, vd = y
        return [vd, np.abs(vv) ** p * vv - m**2 * vv]

    events = None
    if stop_amplitude is not None:
        def hit(_t, y):
            return abs(y[0]) - stop_amplitude
        hit.terminal = True
        events = hit

    sol = integrate.solve_ivp(
        rhs, (t_grid[0], t_grid[-1]), [A, B], method="DOP853",
        t_eval=t_grid, rtol=1e-12, atol=1e-12, events=events,
    )
    if sol.status < 0:
        raise RuntimeError(f"ODE oracle failed: {sol.message}")
    return sol.t, sol.y[0], sol.y[1]


def lifespan_upper(A: float, p: float) -> float:
    """Blowup time of v'' = |v|^p v from rest at amplitude A, by quadrature.

    Energy conservation reduces the lifespan to
    int_A^inf [2/(p+2) (u^{p+2} - A^{p+2})]^{-1/2} du, which the
    substitution u = A/s turns into a proper integral on (0, 1].
    """
    if A <= 0.0:
        raise DomainError("lifespan_upper needs a positive starting amplitude")

    # second substitution s = sigma^{2/p} flattens the s -> 0 endpoint,
    # leaving only the integrable inverse-square-root at sigma = 1
    expo = 2.0 * (p + 2.0) / p

    def integrand(sigma):
        return 1.0 / np.sqrt(1.0 - sigma**expo)

    value, err = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=1e-12, limit=200)
    if not np.isfinite(value) or err > 1e-8 * max(1.0, abs(value)):
        raise RuntimeError(f"lifespan quadrature did not converge (estimate {value}, error {err})")
    return A ** (-0.5 * p) * np.sqrt(0.5 * (p + 2.0)) * (2.0 / p) * value


def _box_center(grid: GridSpec) -> np.ndarray:
    return np.full(grid.d, 0.5 * grid.box_length)


def _zero(grid: GridSpec) -> Field:
    return Field(grid, np.zeros(grid.shape))


def initial_data(grid: GridSpec, kind: str, m: float, p: float, **params) -> State:
    """Initial-data library.  Kinds:

    - constant(A)
    - gaussian(A, w, center=box center): u0 = A exp(-|x-c|^2 / 2w^2), u1 = 0
    - bump(A, w, center): C-infinity bump supported in |x-c| < w
    - plane_wave(k, amplitude=1, traveling=True): k in integer modes per axis;
      traveling sets u1 so the mode translates at its dispersion speed
    - log_profile(R, center): d = 2 radial logarithmic cap
    - negative_energy(A, w, margin=0.5): gaussian rescaled by bisection in
      amplitude until the energy is strictly negative
    """
    center = np.asarray(params.get("center", _box_center(grid)), dtype=np.float64)

    if kind == "constant":
        A = float(params["A"])
        u0 = Field(grid, np.full(grid.shape, A))
        return State(u0, _zero(grid), 0.0, m, p)

    if kind == "gaussian":
        A, w = float(params["A"]), float(params["w"])
        if w <= 0 or 6.0 * w > grid.box_length:
            raise DomainError("gaussian width must be positive and fit the box")
        r = radial_distance(grid, center)
        u0 = Field(grid, A * np.exp(-(r**2) / (2.0 * w**2)))
        return State(u0, _zero(grid), 0.0, m, p)

    if kind == "bump":
        A, w = float(params["A"]), float(params["w"])
        if w <= 0 or 2.0 * w > grid.box_length:
            raise DomainError("bump radius must be positive and fit the box")
        r = radial_distance(grid, center)
        s = np.clip(r / w, 0.0, 1.0)
        vals = np.zeros(grid.shape)
        inside = s < 1.0
        vals[inside] = A * np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
        return State(Field(grid, vals), _zero(grid), 0.0, m, p)

    if kind == "plane_wave":
        k_int = np.atleast_1d(np.asarray(params["k"], dtype=np.int64))
        if k_int.shape != (grid.d,):
            raise DomainError(f"k must have {grid.d} integer components")
        amplitude = float(params.get("amplitude", 1.0))
        traveling = bool(params.get("traveling", True))
        k = 2.0 * np.pi / grid.box_length * k_int
        from .grid import axis_coordinates

        phase = np.zeros(grid.shape)
        for ax, x in enumerate(axis_coordinates(grid)):
            phase = phase + k[ax] * x
        u0 = Field(grid, amplitude * np.cos(phase))
        if traveling:
            omega = float(np.hypot(np.linalg.norm(k), m))
            u1 = Field(grid, amplitude * omega * np.sin(phase))
        else:
            u1 = _zero(grid)
        return State(u0, u1, 0.0, m, p)

    if kind == "log_profile":
        if grid.d != 2:
            raise DomainError("log_profile is a d = 2 construction")
        R = float(params["R"])
        if R <= 1.0 or 2.0 * R > grid.box_length:
            raise DomainError("log_profile needs 1 < R <= L/2")
        r = radial_distance(grid, center)
        amp = np.sqrt(np.log(R))
        vals = np.where(
            r < 1.0, amp, np.where(r <= R, -np.log(np.maximum(r, 1.0) / R) / amp, 0.0)
        )
        return State(Field(grid, vals), _zero(grid), 0.0, m, p)

    if kind == "negative_energy":
        A, w = float(params["A"]), float(params["w"])
        margin = float(params.get("margin", 0.5))
        cap = float(params.get("amplitude_cap", 1e6))
        base = initial_data(grid, "gaussian", m, p, A=1.0, w=w, center=center)

        def e_of(amp: float) -> float:
            return energy(State(amp * base.u, base.v, 0.0, m, p))

        lo, hi = 0.0, max(A, 1e-6)
        while e_of(hi) >= 0.0:
            hi *= 2.0
            if hi > cap:
                raise DomainError(f"could not reach negative energy below amplitude cap {cap}")
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if e_of(mid) < 0.0:
                hi = mid
            else:
                lo = mid
        amp = hi * (1.0 + margin)
        out = State(amp * base.u, base.v, 0.0, m, p)
        if energy(out) >= 0.0:
            raise DomainError("negative-energy construction failed its own check")
        return out

    raise DomainError(f"unknown initial-data kind {kind!r}")
