"""Blowup detection and analysis: T* estimation and rate fitting, mass
functionals and their convexity structure, truncated-mass audits,
critical-norm tracking, the local lower-bound monitor, and blowup-surface
estimation."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .cones import DiagnosticSeries
from .errors import DomainError
from .grid import Field, State, radial_distance, spectral_gradient
from .norms import critical_exponent, energy, sobolev_norm
from .solver import Trajectory

__all__ = [
    "BlowupReport",
    "MassSeries",
    "detect_and_fit",
    "mass_diagnostics",
    "concavity_check",
    "truncated_mass",
    "critical_norm_series",
    "lower_bound_check",
    "blowup_surface_estimate",
]


@dataclass(frozen=True)
class BlowupReport:
    detected: bool
    t_star: float
    fit_window: np.ndarray
    fit_residual: float
    rate_exponents: dict
    diagnostics: str = ""


def _linear_fit(x: np.ndarray, y: np.ndarray):
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, _, _ = np.linalg.lstsq(A, y, rcond=None)
    rms = float(np.sqrt(res[0] / len(x))) if res.size else 0.0
    return coef[0], coef[1], rms


def detect_and_fit(traj: Trajectory, k_fit: int = 20, fit_series: tuple = ()) -> BlowupReport:
    """Estimate T* and blowup-rate exponents from a terminated trajectory.

    T* is the x-intercept of the least-squares line through the last k_fit
    samples of ||u(t)||_inf^{-p/2} against t (this transform is exactly
    linear for the spatially constant profile).  Rate exponents come from
    log-log regression of each requested scalar series against (T* - t).
    A non-monotone sup-norm tail means no blowup signature: detected is
    False and the diagnostics say why.
    """
    times, sup = traj.series("sup_norm")
    p = traj.snapshots[0].exponent

    def failed(msg: str) -> BlowupReport:
        return BlowupReport(False, np.nan, np.array([]), np.nan, {}, diagnostics=msg)

    if traj.termination != "blowup_detected":
        return failed(f"trajectory ended with {traj.termination!r}, not blowup_detected")
    if len(times) < max(k_fit, 4):
        return failed(f"only {len(times)} samples, need {max(k_fit, 4)}")
    t_tail = times[-k_fit:]
    s_tail = sup[-k_fit:]
    if np.any(np.diff(s_tail) <= 0.0):
        return failed("sup-norm tail is not strictly increasing; no blowup signature")

    y = s_tail ** (-0.5 * p)
    slope, intercept, rms = _linear_fit(t_tail, y)
    if slope >= 0.0:
        return failed("sup-norm transform is not decaying; no blowup signature")
    t_star = -intercept / slope
    if t_star <= t_tail[-1]:
        return failed("fitted T* does not exceed the last sample time")
    fit_residual = rms / max(float(np.max(y)), 1e-300)

    exponents = {}
    for name in ("sup_norm",) + tuple(fit_series):
        ts, vals = traj.series(name)
        ts, vals = ts[-k_fit:], np.abs(vals[-k_fit:])
        keep = (vals > 0.0) & (t_star - ts > 0.0)
        if np.count_nonzero(keep) >= 3:
            a, _, _ = _linear_fit(np.log(t_star - ts[keep]), np.log(vals[keep]))
            exponents[name] = float(a)
    return BlowupReport(True, float(t_star), t_tail.copy(), float(fit_residual), exponents)


@dataclass(frozen=True)
class MassSeries:
    """M, M', M'' sampled along a trajectory (closed formulas, not differencing)."""

    times: np.ndarray
    M: np.ndarray
    M_prime: np.ndarray
    M_dprime: np.ndarray
    extra: dict = dc_field(default_factory=dict)


def mass_diagnostics(traj: Trajectory) -> MassSeries:
    """M = int u^2, M' = int 2 u u_t, and
    M'' = -2(p+2) E + int (p+4) u_t^2 + p |grad u|^2 + p m^2 u^2,
    each from its closed formula on every snapshot."""
    nl = traj.nl_coeff
    times, M, Mp, Mpp, Es, grads = [], [], [], [], [], []
    for s in traj.snapshots:
        g = s.grid
        u, v = s.u.values, s.v.values
        p, m = s.exponent, s.mass_param
        cell = g.cell_volume
        grad_sq = float(np.sum(sum(gr.values**2 for gr in spectral_gradient(s.u)))) * cell
        E = energy(s, nl)
        times.append(s.time)
        M.append(float(np.sum(u**2)) * cell)
        Mp.append(2.0 * float(np.sum(u * v)) * cell)
        Mpp.append(-2.0 * (p + 2.0) * E
                   + (p + 4.0) * float(np.sum(v**2)) * cell
                   + p * grad_sq
                   + p * m**2 * float(np.sum(u**2)) * cell)
        Es.append(E)
        grads.append(grad_sq)
    return MassSeries(np.array(times), np.array(M), np.array(Mp), np.array(Mpp),
                      extra={"energy": np.array(Es), "grad_sq": np.array(grads),
                             "p": traj.snapshots[0].exponent})


@dataclass(frozen=True)
class ConcavityReport:
    t0_index: int | None
    cauchy_schwarz_violations: int
    concavity_violations: int
    checked: int


def concavity_check(series: MassSeries, tol_scale: float = 1e-6) -> ConcavityReport:
    """Past the first time with 2(p+2)E <= (p/2) ||grad u||_2^2, verify
    |M'|^2 <= 4/(p+4) M M'' pointwise and that M^{-p/4} has nonpositive
    discrete second differences (three-point, nonuniform-spacing form).

    Both inequalities approach equality as the solution becomes
    profile-dominated near blowup, so violations are counted relative to
    what a tol_scale-accurate mass series could produce: the
    Cauchy-Schwarz test allows a tol_scale relative excess, and a positive
    second difference counts only if it exceeds the noise amplification
    4 |f| tol_scale / (h1 h2) of the divided-difference stencil.
    """
    p = series.extra["p"]
    E = series.extra["energy"]
    grad_sq = series.extra["grad_sq"]
    mask = 2.0 * (p + 2.0) * E <= 0.5 * p * grad_sq
    if not np.any(mask):
        return ConcavityReport(None, 0, 0, 0)
    i0 = int(np.argmax(mask))

    t = series.times[i0:]
    M, Mp, Mpp = series.M[i0:], series.M_prime[i0:], series.M_dprime[i0:]
    bound = 4.0 / (p + 4.0) * M * Mpp
    cs_bad = int(np.count_nonzero(Mp**2 > bound * (1.0 + tol_scale) + 1e-300))

    with np.errstate(divide="ignore"):
        f = M ** (-0.25 * p)
    cc_bad = 0
    checked = 0
    for k in range(1, len(f) - 1):
        if not (np.isfinite(f[k - 1]) and np.isfinite(f[k]) and np.isfinite(f[k + 1])):
            continue
        h1, h2 = t[k] - t[k - 1], t[k + 1] - t[k]
        sec = 2.0 * (h1 * f[k + 1] - (h1 + h2) * f[k] + h2 * f[k - 1]) / (h1 * h2 * (h1 + h2))
        checked += 1
        if sec > 4.0 * abs(f[k]) * tol_scale / (h1 * h2):
            cc_bad += 1
    return ConcavityReport(i0, cs_bad, cc_bad, checked)


def _phi_cutoff(r: np.ndarray) -> np.ndarray:
    """Radial cutoff: 1, then 1-2(r-1)^2, then 2(2-r)^2, then 0 on [0,1,3/2,2,inf)."""
    out = np.ones_like(r)
    mid1 = (r >= 1.0) & (r < 1.5)
    mid2 = (r >= 1.5) & (r < 2.0)
    out[mid1] = 1.0 - 2.0 * (r[mid1] - 1.0) ** 2
    out[mid2] = 2.0 * (2.0 - r[mid2]) ** 2
    out[r >= 2.0] = 0.0
    return out


def _phi_cutoff_prime(r: np.ndarray) -> np.ndarray:
    out = np.zeros_like(r)
    mid1 = (r >= 1.0) & (r < 1.5)
    mid2 = (r >= 1.5) & (r < 2.0)
    out[mid1] = -4.0 * (r[mid1] - 1.0)
    out[mid2] = -4.0 * (2.0 - r[mid2])
    return out


def _phi_cutoff_second(r: np.ndarray) -> np.ndarray:
    out = np.zeros_like(r)
    out[(r >= 1.0) & (r < 1.5)] = -4.0
    out[(r >= 1.5) & (r < 2.0)] = 4.0
    return out


def truncated_mass(traj: Trajectory, R: float, center=None) -> MassSeries:
    """Truncated mass M(t) = int phi(x/(R+t)) u^2 dx with the moving cutoff,
    its closed-form M', and the expanded M'' identity evaluated term by term.

    The audit compares discrete second differences of M against the
    identity's right-hand side; the relative gap is reported in
    extra['m2_gap'].  The cutoff's support radius 2(R + t_max) must fit the
    box with a 3h margin.
    """
    g = traj.snapshots[0].grid
    center = np.full(g.d, 0.5 * g.box_length) if center is None else np.asarray(center)
    t_max = traj.snapshots[-1].time
    if 2.0 * (R + t_max) > 0.5 * g.box_length - 3.0 * g.spacing:
        raise DomainError("cutoff support 2(R + t_max) does not fit the box with margin")
    nl = traj.nl_coeff
    dist = radial_distance(g, center)
    from .grid import displacement

    disp = displacement(g, center)

    times, M, Mp, rhs_list = [], [], [], []
    for s in traj.snapshots:
        t = s.time
        rad = R + abs(t)
        y = dist / rad
        phi = _phi_cutoff(y)
        phi_c = 1.0 - phi
        dphi = _phi_cutoff_prime(y)
        ddphi = _phi_cutoff_second(y)
        u, v = s.u.values, s.v.values
        p, m = s.exponent, s.mass_param
        cell = g.cell_volume
        grad = [gr.values for gr in spectral_gradient(s.u)]
        grad_sq = sum(gr**2 for gr in grad)
        grad_tx_sq = v**2 + grad_sq
        pot = np.abs(u) ** (p + 2.0)
        u_r = sum(dx * gr for dx, gr in zip(disp, grad)) / np.where(dist == 0.0, 1.0, dist)
        u_r = np.where(dist == 0.0, 0.0, u_r)

        times.append(t)
        M.append(float(np.sum(phi * u**2)) * cell)
        # M' = int -x/(R+t)^2 . grad(phi)(y) u^2 + 2 phi u u_t
        Mp.append(float(np.sum(-(dist / rad**2) * dphi * u**2 + 2.0 * phi * u * v)) * cell)
        E = energy(s, nl)
        bulk = (-2.0 * (p + 2.0) * E
                + float(np.sum(4.0 * phi * v**2 + p * grad_tx_sq + p * m**2 * u**2)) * cell
                + float(np.sum(2.0 * phi_c * (grad_tx_sq + m**2 * u**2 - nl * pot))) * cell)
        cutoff_u2 = float(np.sum((2.0 * dist / rad**3 * dphi
                                  + dist**2 / rad**4 * ddphi) * u**2)) * cell
        mixed = -float(np.sum(2.0 / rad * dphi * (2.0 * dist / rad * v + u_r) * u)) * cell
        rhs_list.append(bulk + cutoff_u2 + mixed)

    times = np.array(times)
    M = np.array(M)
    rhs = np.array(rhs_list)

    gaps = []
    for k in range(1, len(times) - 1):
        h1, h2 = times[k] - times[k - 1], times[k + 1] - times[k]
        sec = 2.0 * (h1 * M[k + 1] - (h1 + h2) * M[k] + h2 * M[k - 1]) / (h1 * h2 * (h1 + h2))
        gaps.append(abs(sec - rhs[k]))
    scale = float(np.max(np.abs(rhs))) + 1e-300
    m2_gap = float(np.max(gaps)) / scale if gaps else np.nan
    return MassSeries(times, M, np.array(Mp), rhs,
                      extra={"m2_gap": m2_gap, "R": R, "p": traj.snapshots[0].exponent})


def critical_norm_series(traj: Trajectory) -> DiagnosticSeries:
    """||u||_{H^{s_c}, homogeneous} + ||u_t||_{H^{s_c-1}, inhomogeneous, m=1}
    along the trajectory."""
    s0 = traj.snapshots[0]
    params = critical_exponent(s0.grid.d, s0.exponent)
    times, vals = [], []
    for s in traj.snapshots:
        val = sobolev_norm(s.u, params.s_c, homogeneous=True) \
            + sobolev_norm(s.v, params.s_c - 1.0, homogeneous=False, m=1.0)
        times.append(s.time)
        vals.append(val)
    return DiagnosticSeries("critical_norm", np.array(times), np.array(vals),
                            regime=params.regime, metadata={"s_c": params.s_c})


def lower_bound_check(traj: Trajectory, t_star: float, x0) -> DiagnosticSeries:
    """(T*-t)^{-2 s_c} int_{|x-x0| <= T*-t} u^2 + (T*-t)^2 |grad_{t,x} u|^2 dx.

    Sampled at snapshots where the shrinking ball is resolved (radius of at
    least two cells) and fits the box; the monitored claim is a positive
    floor, never a specific constant.
    """
    s0 = traj.snapshots[0]
    g = s0.grid
    params = critical_exponent(g.d, s0.exponent)
    dist = radial_distance(g, x0)
    times, vals = [], []
    for s in traj.snapshots:
        rad = t_star - s.time
        if rad <= 2.0 * g.spacing or rad > 0.5 * g.box_length - 3.0 * g.spacing:
            continue
        mask = dist <= rad
        grad_sq = sum(gr.values**2 for gr in spectral_gradient(s.u))
        integ = float(np.sum(s.u.values[mask] ** 2
                             + rad**2 * (s.v.values[mask] ** 2 + grad_sq[mask])))
        integ *= g.cell_volume
        times.append(s.time)
        vals.append(rad ** (-2.0 * params.s_c) * integ)
    return DiagnosticSeries("local_lower_bound", np.array(times), np.array(vals),
                            regime=params.regime,
                            metadata={"t_star": t_star, "x0": list(np.atleast_1d(x0))})


def _lipschitz_envelope(sigma: np.ndarray, h: float) -> np.ndarray:
    """Periodic lower envelope min_y sigma(y) + dist_1(x, y) by axis sweeps.

    dist_1 is the grid Manhattan metric, so the result is 1-Lipschitz along
    every grid axis; the projection is idempotent.
    """
    out = sigma.copy()
    for _ in range(out.ndim * max(out.shape)):
        prev = out
        for ax in range(out.ndim):
            out = np.minimum(out, np.roll(out, 1, axis=ax) + h)
            out = np.minimum(out, np.roll(out, -1, axis=ax) + h)
        if np.array_equal(prev, out):
            break
    return out


def blowup_surface_estimate(traj: Trajectory, threshold: float = 1e3) -> Field:
    """Per-point first time |u(t,x)| crosses the threshold, projected onto
    its 1-Lipschitz lower envelope (finite speed of propagation).

    Points that never cross start at +inf and are filled in by the
    envelope; if no point crosses at all, that is an error.
    """
    g = traj.snapshots[0].grid
    sigma = np.full(g.shape, np.inf)
    for s in traj.snapshots:
        crossed = (np.abs(s.u.values) > threshold) & ~np.isfinite(sigma)
        sigma[crossed] = s.time
    if not np.any(np.isfinite(sigma)):
        raise DomainError(f"no grid point ever crossed the threshold {threshold}")
    return Field(g, _lipschitz_envelope(sigma, g.spacing))
