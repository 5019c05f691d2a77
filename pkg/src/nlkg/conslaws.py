"""The six conservation-law tensors (energy, dilation, modified dilation,
charge, conformal energy, combined dilation+charge) and their audits:
discrete divergence residuals and integrated slab identities.

Each tensor is a triple (density z0, flux vector z, source) satisfying
d/dt z0 + div z = source pointwise for solutions of the equation.  The
spatial variable in the time-weighted tensors is measured from an
explicit apex point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .grid import Field, State, displacement, spectral_divergence, spectral_gradient
from .solver import Trajectory

__all__ = [
    "TENSOR_TAGS",
    "TensorKind",
    "TensorSample",
    "tensor_kind",
    "eval_tensor",
    "tensor_density",
    "combined_weighted_source",
    "divergence_residual",
    "residual_norms",
    "refinement_orders",
    "charge_slab_identity",
    "SlabIdentityResult",
]

TENSOR_TAGS = ("energy", "dilation", "mod_dilation", "charge", "conf_energy", "combined")
_TIME_WEIGHTED = ("dilation", "mod_dilation", "conf_energy", "combined")


@dataclass(frozen=True)
class TensorKind:
    tag: str
    alpha: float | None = None

    def __post_init__(self):
        if self.tag not in TENSOR_TAGS:
            raise DomainError(f"unknown tensor tag {self.tag!r}")
        if self.tag == "combined":
            if self.alpha is None or self.alpha <= 0.0:
                raise DomainError("combined tensor requires alpha = 1/2 - s_c > 0 (sub-conformal)")


def tensor_kind(tag: str, state: State | None = None) -> TensorKind:
    """Build a TensorKind, deriving alpha from the state for 'combined'."""
    if tag == "combined":
        if state is None:
            raise DomainError("combined tensor needs a state to derive alpha")
        d, p = state.grid.d, state.exponent
        return TensorKind(tag, alpha=0.5 - (d / 2.0 - 2.0 / p))
    return TensorKind(tag)


@dataclass(frozen=True)
class TensorSample:
    """A tensor evaluated on one State: density z0, flux vector, and source."""

    kind: TensorKind
    density: Field
    flux: tuple
    source: Field
    eval_time: float
    apex_offset: tuple


class _Pieces:
    """Shared pointwise ingredients for the tensor formulas."""

    def __init__(self, state: State, apex, nl_coeff: float):
        self.grid = state.grid
        self.t = state.time
        self.u = state.u.values
        self.v = state.v.values
        self.m = state.mass_param
        self.p = state.exponent
        self.d = state.grid.d
        self.nl = nl_coeff
        self.grad = [g.values for g in spectral_gradient(state.u)]
        self.x = displacement(state.grid, apex)
        self.S = sum(xi * gi for xi, gi in zip(self.x, self.grad))  # x . grad u
        self.grad_sq = sum(g**2 for g in self.grad)
        self.r_sq = sum(np.broadcast_to(xi**2, state.grid.shape) for xi in self.x)
        self.pot = np.abs(self.u) ** (self.p + 2.0)

    @property
    def energy_density(self):
        return (0.5 * self.v**2 + 0.5 * self.grad_sq + 0.5 * self.m**2 * self.u**2
                - self.nl / (self.p + 2.0) * self.pot)

    @property
    def lagrangian_density(self):
        return (0.5 * self.grad_sq - 0.5 * self.v**2 + 0.5 * self.m**2 * self.u**2
                - self.nl / (self.p + 2.0) * self.pot)

    def dilation_multiplier(self, zeroth: float):
        """x . grad u + t u_t + zeroth * u."""
        return self.S + self.t * self.v + zeroth * self.u

    @property
    def dilation_source(self):
        c = (self.p * (self.d - 1) - 4.0) / (2.0 * (self.p + 2.0))
        return c * self.nl * self.pot + self.m**2 * self.u**2

    @property
    def charge_source(self):
        return self.v**2 - self.grad_sq - self.m**2 * self.u**2 + self.nl * self.pot


def _dilation(pc: _Pieces):
    W = pc.dilation_multiplier(0.5 * (pc.d - 1))
    dens = pc.t * pc.lagrangian_density + W * pc.v
    flux = [xi * pc.lagrangian_density - W * gi for xi, gi in zip(pc.x, pc.grad)]
    return dens, flux, pc.dilation_source


def _mod_dilation(pc: _Pieces):
    d_dens, d_flux, source = _dilation(pc)
    c = (pc.d - 1) / 4.0
    # density correction is the pointwise divergence of (x/t) u^2
    dens = d_dens + (c / pc.t) * (pc.d * pc.u**2 + 2.0 * pc.u * pc.S)
    dt_xu2_over_t = 2.0 * pc.u * pc.v / pc.t - pc.u**2 / pc.t**2
    flux = [fi - c * xi * dt_xu2_over_t for fi, xi in zip(d_flux, pc.x)]
    # closed "completed squares" form, kept as a self-check on the algebra
    W = pc.dilation_multiplier(0.5 * (pc.d - 1))
    closed = (W**2 / (2.0 * pc.t)
              + 0.5 * pc.t * pc.grad_sq - pc.S**2 / (2.0 * pc.t)
              - pc.nl * pc.t / (pc.p + 2.0) * pc.pot
              + (pc.d**2 - 1.0) / (8.0 * pc.t) * pc.u**2
              + 0.5 * pc.t * pc.m**2 * pc.u**2)
    scale = np.max(np.abs(closed)) + np.max(np.abs(dens)) + 1e-300
    if np.max(np.abs(closed - dens)) > 1e-10 * scale:
        raise RuntimeError("modified-dilation density forms disagree beyond tolerance")
    return closed, flux, source


def _charge(pc: _Pieces):
    dens = pc.u * pc.v
    flux = [-pc.u * gi for gi in pc.grad]
    return dens, flux, pc.charge_source


def _conf_energy(pc: _Pieces):
    t, q = pc.t, pc.r_sq
    e0 = pc.energy_density
    dens = (t**2 + q) * e0 + 2.0 * t * pc.v * pc.S + (pc.d - 1) * t * pc.u * pc.v \
        - 0.5 * (pc.d - 1) * pc.u**2
    bracket = (t**2 + q) * pc.v + 2.0 * t * pc.S + (pc.d - 1) * t * pc.u
    anti_lag = (0.5 * pc.v**2 - 0.5 * pc.grad_sq - 0.5 * pc.m**2 * pc.u**2
                + pc.nl / (pc.p + 2.0) * pc.pot)
    flux = [-bracket * gi - 2.0 * xi * t * anti_lag for gi, xi in zip(pc.grad, pc.x)]
    src = (t * pc.nl * (pc.p * (pc.d - 1) - 4.0) / (pc.p + 2.0) * pc.pot
           + 2.0 * t * pc.m**2 * pc.u**2)
    return dens, flux, src


def _combined(pc: _Pieces, alpha: float):
    t, p = pc.t, pc.p
    W2 = pc.dilation_multiplier(2.0 / p)
    dens = (W2**2 / (2.0 * t)
            + 0.5 * t * pc.grad_sq - pc.S**2 / (2.0 * t)
            - pc.nl * t / (p + 2.0) * pc.pot
            + (0.5 * pc.m**2 * t + (p + 2.0) / (p**2 * t)) * pc.u**2)
    # cross-check against the definition as dilation + alpha*charge + gauge terms
    d_dens, d_flux, d_src = _dilation(pc)
    alt = d_dens + alpha * pc.u * pc.v \
        + (1.0 / (p * t)) * (pc.d * pc.u**2 + 2.0 * pc.u * pc.S) \
        + (2.0 * alpha / p) * pc.u**2 / t
    scale = np.max(np.abs(dens)) + np.max(np.abs(alt)) + 1e-300
    if np.max(np.abs(dens - alt)) > 1e-10 * scale:
        raise RuntimeError("combined-tensor density forms disagree beyond tolerance")
    dt_xu2_over_t = 2.0 * pc.u * pc.v / t - pc.u**2 / t**2
    flux = [fi - alpha * pc.u * gi - (xi / p) * dt_xu2_over_t
            for fi, xi, gi in zip(d_flux, pc.x, pc.grad)]
    dt_g = 2.0 * pc.u * pc.v / t - pc.u**2 / t**2
    src = d_src + alpha * pc.charge_source + (2.0 * alpha / p) * dt_g
    return dens, flux, src


def eval_tensor(state: State, kind: TensorKind, apex, nl_coeff: float = 1.0) -> TensorSample:
    """Evaluate density, flux, and source of one tensor on a State.

    The modified-dilation and combined densities are computed through two
    independent algebraic forms and must agree pointwise to 1e-10
    relative.
    """
    if kind.tag in _TIME_WEIGHTED and state.time <= 0.0:
        raise DomainError(f"{kind.tag} tensor requires evaluation time > 0")
    pc = _Pieces(state, apex, nl_coeff)
    if kind.tag == "energy":
        dens, flux, src = pc.energy_density, [-pc.v * g for g in pc.grad], np.zeros(pc.grid.shape)
    elif kind.tag == "dilation":
        dens, flux, src = _dilation(pc)
    elif kind.tag == "mod_dilation":
        dens, flux, src = _mod_dilation(pc)
    elif kind.tag == "charge":
        dens, flux, src = _charge(pc)
    elif kind.tag == "conf_energy":
        dens, flux, src = _conf_energy(pc)
    else:
        dens, flux, src = _combined(pc, kind.alpha)
    grid = state.grid
    return TensorSample(
        kind=kind,
        density=Field(grid, np.ascontiguousarray(np.broadcast_to(dens, grid.shape))),
        flux=tuple(Field(grid, np.ascontiguousarray(np.broadcast_to(f, grid.shape))) for f in flux),
        source=Field(grid, np.ascontiguousarray(np.broadcast_to(src, grid.shape))),
        eval_time=state.time,
        apex_offset=tuple(np.atleast_1d(np.asarray(apex, dtype=np.float64))),
    )


def tensor_density(state: State, kind: TensorKind, apex, nl_coeff: float = 1.0) -> Field:
    """Density z0 only (skips the flux/source work of :func:`eval_tensor`)."""
    if kind.tag in _TIME_WEIGHTED and state.time <= 0.0:
        raise DomainError(f"{kind.tag} tensor requires evaluation time > 0")
    pc = _Pieces(state, apex, nl_coeff)
    if kind.tag == "energy":
        dens = pc.energy_density
    elif kind.tag == "charge":
        dens = pc.u * pc.v
    elif kind.tag == "dilation":
        dens = pc.t * pc.lagrangian_density + pc.dilation_multiplier(0.5 * (pc.d - 1)) * pc.v
    elif kind.tag == "mod_dilation":
        W = pc.dilation_multiplier(0.5 * (pc.d - 1))
        dens = (W**2 / (2.0 * pc.t)
                + 0.5 * pc.t * pc.grad_sq - pc.S**2 / (2.0 * pc.t)
                - pc.nl * pc.t / (pc.p + 2.0) * pc.pot
                + (pc.d**2 - 1.0) / (8.0 * pc.t) * pc.u**2
                + 0.5 * pc.t * pc.m**2 * pc.u**2)
    elif kind.tag == "conf_energy":
        dens = _conf_energy(pc)[0]
    else:
        t, p = pc.t, pc.p
        W2 = pc.dilation_multiplier(2.0 / p)
        dens = (W2**2 / (2.0 * t)
                + 0.5 * t * pc.grad_sq - pc.S**2 / (2.0 * t)
                - pc.nl * t / (p + 2.0) * pc.pot
                + (0.5 * pc.m**2 * t + (p + 2.0) / (p**2 * t)) * pc.u**2)
    return Field(state.grid, np.ascontiguousarray(np.broadcast_to(dens, state.grid.shape)))


def combined_weighted_source(state: State, apex, nl_coeff: float = 1.0) -> Field:
    """Cone-weighted production rate of the combined functional.

    Returns 2 alpha |x.grad u + t u_t + (2/p)u|^2 (t^2-|x|^2)^{alpha-1}
    + m^2 u^2 (t^2-|x|^2)^{alpha} inside |x - apex| < t and 0 outside;
    pointwise nonnegative in the sub-conformal regime.
    """
    d, p = state.grid.d, state.exponent
    alpha = 0.5 - (d / 2.0 - 2.0 / p)
    if alpha <= 0.0:
        raise DomainError("combined weighted source requires the sub-conformal regime")
    if state.time <= 0.0:
        raise DomainError("requires evaluation time > 0")
    pc = _Pieces(state, apex, nl_coeff)
    t = state.time
    gap = t**2 - pc.r_sq
    inside = gap > 0.0
    W2 = pc.dilation_multiplier(2.0 / p)
    vals = np.zeros(state.grid.shape)
    vals[inside] = (2.0 * alpha * W2[inside] ** 2 * gap[inside] ** (alpha - 1.0)
                    + pc.m**2 * pc.u[inside] ** 2 * gap[inside] ** alpha)
    return Field(state.grid, vals)


def divergence_residual(window, kind: TensorKind, apex, nl_coeff: float = 1.0) -> Field:
    """Residual of d/dt z0 + div z = source on three equally spaced snapshots.

    The time derivative of the density is a centered difference across the
    window (kept independent of the tensor algebra being audited); the
    flux divergence is spectral at the middle time.
    """
    s0, s1, s2 = window
    dt1, dt2 = s1.time - s0.time, s2.time - s1.time
    if dt1 <= 0 or abs(dt1 - dt2) > 1e-9 * max(dt1, dt2):
        raise DomainError("window snapshots must be equally spaced in time")
    lo = eval_tensor(s0, kind, apex, nl_coeff)
    mid = eval_tensor(s1, kind, apex, nl_coeff)
    hi = eval_tensor(s2, kind, apex, nl_coeff)
    ddt = (hi.density.values - lo.density.values) / (s2.time - s0.time)
    div = spectral_divergence(list(mid.flux)).values
    return Field(s1.grid, ddt + div - mid.source.values)


def residual_norms(residual: Field) -> tuple[float, float]:
    """(L2, Linf) norms of a residual field over the box."""
    l2 = float(np.sqrt(np.sum(residual.values**2) * residual.grid.cell_volume))
    linf = float(np.max(np.abs(residual.values)))
    return l2, linf


def refinement_orders(norm_by_level) -> list[float]:
    """Observed orders log2(e_k / e_{k+1}) for a sequence of halved-(h,dt) errors."""
    e = np.asarray(norm_by_level, dtype=np.float64)
    if np.any(e <= 0.0):
        raise DomainError("refinement orders need strictly positive error norms")
    return list(np.log2(e[:-1] / e[1:]))


@dataclass(frozen=True)
class SlabIdentityResult:
    lhs: float
    rhs: float
    gap: float
    avg_kinetic: float
    avg_potential: float


def charge_slab_identity(traj: Trajectory, t0: float, t1: float) -> SlabIdentityResult:
    """Integrated charge identity over the slab [t0, t1] x box.

    lhs: trapezoid-in-time of int (u_t^2 - |grad u|^2 - m^2 u^2 + |u|^{p+2}) dx;
    rhs: int u u_t dx evaluated at t1 minus at t0.  Also reports the two
    virial time-averages (kinetic, and gradient + mass - potential).
    """
    times = traj.times
    sel = [s for s in traj.snapshots if t0 - 1e-12 <= s.time <= t1 + 1e-12]
    if len(sel) < 3:
        raise DomainError(f"need at least 3 snapshots in [{t0}, {t1}], found {len(sel)}")
    if abs(sel[0].time - t0) > 1e-9 or abs(sel[-1].time - t1) > 1e-9:
        raise DomainError("t0 and t1 must be snapshot times")
    nl = traj.nl_coeff
    del times

    cell = sel[0].grid.cell_volume
    integrand = []
    kinetic = []
    for s in sel:
        pc = _Pieces(s, np.zeros(s.grid.d), nl)
        integrand.append(float(np.sum(pc.charge_source)) * cell)
        kinetic.append(float(np.sum(pc.v**2)) * cell)
    ts = np.array([s.time for s in sel])
    lhs = float(np.trapezoid(integrand, ts))
    kin_avg = float(np.trapezoid(kinetic, ts)) / (t1 - t0)

    def q0_total(s: State) -> float:
        return float(np.sum(s.u.values * s.v.values)) * cell

    rhs = q0_total(sel[-1]) - q0_total(sel[0])
    gap = abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)
    # virial reading: time-average of u_t^2 vs |grad u|^2 + m^2 u^2 - |u|^{p+2}
    pot_avg = kin_avg - lhs / (t1 - t0)
    return SlabIdentityResult(lhs=lhs, rhs=rhs, gap=gap,
                              avg_kinetic=kin_avg, avg_potential=pot_avg)
