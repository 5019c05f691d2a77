"""Scenario configuration, subcommand dispatch, and CSV/JSON emission.

Config files are JSON.  Units: lengths in box units, times in the
equation's time units, frequencies in radians per length.  The physics
keys (grid.d, grid.n, grid.box_length, physics.m, physics.p) carry no
defaults; a missing key is a validation failure naming it.  All outputs
are deterministic for a fixed config and seed.

Subcommands: simulate, audit-tensors, cones, fit, decompose, sweep.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import blowup as blowup_mod
from . import cones as cones_mod
from . import conslaws, profiles, snapshots
from .errors import DomainError
from .grid import Field, GridSpec, radial_distance
from .norms import critical_exponent, energy, lebesgue_norm
from .solver import SolverConfig, evolve, initial_data

__all__ = ["ScenarioConfig", "load_config", "run", "main"]


class ScenarioConfig:
    """Validated view of a scenario dictionary.

    Validation happens before any compute; failures raise DomainError
    naming the violated precondition.
    """

    REQUIRED = (
        ("grid", "d"), ("grid", "n"), ("grid", "box_length"),
        ("physics", "m"), ("physics", "p"),
        ("data", "kind"),
        ("solver", "dt_init"), ("solver", "t_max"),
    )

    def __init__(self, raw: dict):
        self.raw = raw
        for section, key in self.REQUIRED:
            if section not in raw or key not in raw[section]:
                raise DomainError(f"config precondition violated: missing {section}.{key}")
        self.grid = GridSpec(int(raw["grid"]["d"]), int(raw["grid"]["n"]),
                             float(raw["grid"]["box_length"]))
        self.m = float(raw["physics"]["m"])
        self.p = float(raw["physics"]["p"])
        if not (0.0 <= self.m <= 1.0):
            raise DomainError("config precondition violated: physics.m must lie in [0, 1]")
        critical_exponent(self.grid.d, self.p)  # range check, names p on failure
        s = dict(raw["solver"])
        self.solver = SolverConfig(
            dt_init=float(s["dt_init"]),
            t_max=float(s["t_max"]),
            dt_min=float(s.get("dt_min", 1e-12)),
            cfl_safety=float(s.get("cfl_safety", 1.0)),
            adapt_theta=s.get("adapt_theta", 1.0),
            blowup_threshold=float(s.get("blowup_threshold", 1e8)),
            snapshot_stride=int(s.get("snapshot_stride", 1)),
            dealias_pad=s.get("dealias_pad", "none"),
            nonlinearity=float(s.get("nonlinearity", 1.0)),
        )
        self.data_kind = raw["data"]["kind"]
        self.data_params = dict(raw["data"].get("params", {}))
        self.audits = dict(raw.get("audits", {}))
        self.seed = int(raw.get("seed", 0))
        self.out_dir = Path(raw.get("output", {}).get("directory", "nlkg_out"))
        self._validate_cones()

    def _validate_cones(self) -> None:
        cone_cfg = self.audits.get("cones")
        if not cone_cfg:
            return
        top = float(cone_cfg["top_time"])
        # periodicity must not reach an audited cone: box >= 4x the cone diameter
        if self.grid.box_length < 4.0 * (2.0 * top):
            raise DomainError(
                "config precondition violated: audits.cones.top_time requires "
                f"box_length >= {8.0 * top} (4x the cone diameter)"
            )

    def initial_state(self):
        return initial_data(self.grid, self.data_kind, self.m, self.p, **self.data_params)


def load_config(path) -> ScenarioConfig:
    with open(path) as fh:
        return ScenarioConfig(json.load(fh))


def _manifest(out: Path, status: str, extra: dict | None = None) -> None:
    payload = {"status": status}
    payload.update(extra or {})
    snapshots.write_json(out / "MANIFEST.json", payload)


def _echo_config(cfg: ScenarioConfig, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    snapshots.write_json(out / "config.json", cfg.raw)


def _standard_monitors(cfg: ScenarioConfig) -> dict:
    nl = cfg.solver.nonlinearity
    return {
        "energy": lambda s: energy(s, nl),
        "l2_norm": lambda s: lebesgue_norm(s.u, 2.0),
    }


def cmd_simulate(cfg: ScenarioConfig) -> int:
    out = cfg.out_dir
    _echo_config(cfg, out)
    _manifest(out, "incomplete")
    traj = evolve(cfg.initial_state(), cfg.solver, _standard_monitors(cfg))
    for name in traj.scalar_series:
        t, v = traj.series(name)
        snapshots.write_series_csv(out / f"{name}.csv", {"time": t, "value": v},
                                   sidecar={"series": name, "config": cfg.raw,
                                            "termination": traj.termination})
    snapshots.write_trajectory(out / "trajectory", traj)
    _manifest(out, "complete", {"termination": traj.termination,
                                "snapshots": len(traj.snapshots)})
    return 0


def _tensor_window(cfg: ScenarioConfig, scale: int):
    """Evolve at (h, dt) refined by 2^scale and cut a 3-snapshot window."""
    grid = GridSpec(cfg.grid.d, cfg.grid.n * 2**scale, cfg.grid.box_length)
    state = initial_data(grid, cfg.data_kind, cfg.m, cfg.p, **cfg.data_params)
    sol = cfg.solver
    refined = SolverConfig(
        dt_init=sol.dt_init / 2**scale, t_max=sol.t_max, dt_min=sol.dt_min,
        cfl_safety=sol.cfl_safety, adapt_theta=None,
        blowup_threshold=sol.blowup_threshold,
        snapshot_stride=sol.snapshot_stride * 2**scale,
        dealias_pad=sol.dealias_pad, nonlinearity=sol.nonlinearity,
    )
    traj = evolve(state, refined, {})
    if len(traj.snapshots) < 3:
        raise DomainError(
            "config precondition violated: solver.t_max/snapshot_stride leaves "
            "fewer than 3 snapshots for the tensor window")
    k = len(traj.snapshots) // 2
    return traj, (traj.snapshots[k - 1], traj.snapshots[k], traj.snapshots[k + 1])


def cmd_audit_tensors(cfg: ScenarioConfig) -> int:
    out = cfg.out_dir
    _echo_config(cfg, out)
    _manifest(out, "incomplete")
    audit_cfg = cfg.audits.get("tensors", {})
    levels = int(audit_cfg.get("levels", 2))
    if levels < 1:
        raise DomainError("config precondition violated: audits.tensors.levels must be >= 1")
    apex = audit_cfg.get("apex", [0.5 * cfg.grid.box_length] * cfg.grid.d)
    params = critical_exponent(cfg.grid.d, cfg.p)
    tags = list(conslaws.TENSOR_TAGS)
    if params.alpha <= 0.0:
        tags.remove("combined")

    report = []
    per_level: dict = {tag: [] for tag in tags}
    traj0 = None
    for scale in range(levels):
        traj, window = _tensor_window(cfg, scale)
        if scale == 0:
            traj0 = traj
        for tag in tags:
            kind = conslaws.tensor_kind(tag, window[1])
            res = conslaws.divergence_residual(window, kind, apex, traj.nl_coeff)
            l2, linf = conslaws.residual_norms(res)
            per_level[tag].append((window[1].time, l2, linf))
    for tag in tags:
        times = [row[0] for row in per_level[tag]]
        l2s = [row[1] for row in per_level[tag]]
        linfs = [row[2] for row in per_level[tag]]
        orders = conslaws.refinement_orders(linfs) if len(linfs) > 1 else []
        report.append({"kind": tag, "times": times, "residual_l2": l2s,
                       "residual_linf": linfs, "refinement_orders": orders})

    slab = []
    ts = traj0.times
    if len(ts) >= 3:
        res = conslaws.charge_slab_identity(traj0, float(ts[0]), float(ts[-1]))
        slab.append({"t0": float(ts[0]), "t1": float(ts[-1]), "lhs": res.lhs,
                     "rhs": res.rhs, "gap": res.gap,
                     "avg_kinetic": res.avg_kinetic, "avg_potential": res.avg_potential})
    snapshots.write_json(out / "tensor_audit.json",
                         {"tensors": report, "slab_identities": slab, "config": cfg.raw})
    _manifest(out, "complete")
    return 0


def cmd_cones(cfg: ScenarioConfig) -> int:
    out = cfg.out_dir
    _echo_config(cfg, out)
    _manifest(out, "incomplete")
    cone_cfg = cfg.audits.get("cones")
    if cone_cfg is None:
        raise DomainError("config precondition violated: missing audits.cones")
    traj = evolve(cfg.initial_state(), cfg.solver, _standard_monitors(cfg))
    vertex = cone_cfg.get("vertex", [0.5 * cfg.grid.box_length] * cfg.grid.d)
    cone = cones_mod.ConeSpec(vertex=tuple(vertex), top_time=float(cone_cfg["top_time"]))
    params = critical_exponent(cfg.grid.d, cfg.p)
    t_floor = float(cone_cfg.get("t_floor", 10.0 * cfg.solver.dt_init))

    which = "Z" if params.regime == "sub_conformal" else "L"
    series = cones_mod.lyapunov_series(traj, cone, which=which, t_floor=t_floor)
    snapshots.write_series_csv(out / f"{which}_functional.csv",
                               {"time": series.times, "value": series.values},
                               sidecar={"series": series.name, "regime": series.regime,
                                        "metadata": series.metadata, "config": cfg.raw})
    monitors = cones_mod.cone_monitor(traj, cone)
    for name, s in monitors.items():
        snapshots.write_series_csv(out / f"{name}.csv",
                                   {"time": s.times, "value": s.values},
                                   sidecar={"series": name, "regime": s.regime,
                                            "metadata": s.metadata, "config": cfg.raw})
    usable = [s.time for s in traj.snapshots if t_floor < s.time <= cone.top_time]
    flux = {}
    if len(usable) >= 3:
        lhs, rhs, gap = cones_mod.energy_flux_check(traj, cone, usable[0], usable[-1])
        flux = {"t0": usable[0], "t1": usable[-1], "lhs": lhs, "rhs": rhs, "gap": gap}
    snapshots.write_json(out / "flux_identity.json", {"flux": flux, "config": cfg.raw})
    _manifest(out, "complete", {"termination": traj.termination})
    return 0


def cmd_fit(cfg: ScenarioConfig, trajectory_dir=None) -> int:
    out = cfg.out_dir
    _echo_config(cfg, out)
    _manifest(out, "incomplete")
    if trajectory_dir is not None:
        traj = snapshots.read_trajectory(trajectory_dir)
    else:
        traj = evolve(cfg.initial_state(), cfg.solver, _standard_monitors(cfg))
    fit_cfg = cfg.audits.get("blowup", {})
    report = blowup_mod.detect_and_fit(traj, k_fit=int(fit_cfg.get("k_fit", 20)))
    mass = blowup_mod.mass_diagnostics(traj)
    conc = blowup_mod.concavity_check(mass)
    payload = {
        "detected": report.detected,
        "t_star": report.t_star,
        "fit_residual": report.fit_residual,
        "rate_exponents": report.rate_exponents,
        "diagnostics": report.diagnostics,
        "concavity": {"t0_index": conc.t0_index,
                      "cauchy_schwarz_violations": conc.cauchy_schwarz_violations,
                      "concavity_violations": conc.concavity_violations,
                      "checked": conc.checked},
        "config": cfg.raw,
    }
    snapshots.write_json(out / "blowup_report.json", payload)
    snapshots.write_series_csv(out / "mass_series.csv",
                               {"time": mass.times, "M": mass.M,
                                "M_prime": mass.M_prime, "M_dprime": mass.M_dprime},
                               sidecar={"config": cfg.raw})
    _manifest(out, "complete", {"detected": report.detected})
    return 0


def _synthetic_family(cfg: ScenarioConfig, spec: dict) -> profiles.FunctionFamily:
    rng = np.random.default_rng(cfg.seed)
    g = cfg.grid
    n_members = int(spec.get("n_members", 4))
    bubbles = spec["bubbles"]  # list of {"width": cells, "amplitude": a}
    sep_base = float(spec.get("separation_base", 32))  # cells at member 0
    members = []
    for i in range(n_members):
        vals = np.zeros(g.shape)
        scale = 2.0**i
        anchor = rng.integers(0, g.n, size=g.d)
        for j, b in enumerate(bubbles):
            offset = anchor + np.round(j * sep_base * scale).astype(int)
            center = (offset % g.n) * g.spacing
            r = radial_distance(g, center)
            vals += float(b["amplitude"]) * np.exp(-(r**2) /
                                                   (2.0 * (float(b["width"]) * g.spacing) ** 2))
        members.append(Field(g, vals))
    return profiles.FunctionFamily(tuple(members))


def cmd_decompose(cfg: ScenarioConfig) -> int:
    out = cfg.out_dir
    _echo_config(cfg, out)
    _manifest(out, "incomplete")
    prof_cfg = cfg.audits.get("profiles")
    if prof_cfg is None:
        raise DomainError("config precondition violated: missing audits.profiles")
    params = critical_exponent(cfg.grid.d, cfg.p)
    if "synthetic" in prof_cfg:
        family = _synthetic_family(cfg, prof_cfg["synthetic"])
    else:
        paths = prof_cfg["snapshots"]
        fields = [snapshots.read_field_snapshot(p)[0] for p in paths]
        family = profiles.FunctionFamily(tuple(fields))
    dec = profiles.bubble_decompose(family, params,
                                    j_max=int(prof_cfg.get("j_max", 8)),
                                    tol=float(prof_cfg.get("tol", 1e-3)))
    gaps = profiles.decoupling_audit(dec, family, params)
    arch = out / "decomposition"
    arch.mkdir(parents=True, exist_ok=True)
    manifest = {"n_bubbles": dec.n_bubbles, "eps_history": dec.eps_history,
                "sobolev_history": dec.sobolev_history, "gaps": gaps, "centers": {}}
    for j, (profile, centers) in enumerate(dec.bubbles):
        snapshots.write_field_snapshot(arch / f"profile{j}.snap", profile,
                                       0.0, cfg.m, cfg.p)
        manifest["centers"][f"profile{j}"] = centers.tolist()
    snapshots.write_json(arch / "manifest.json", manifest)
    _manifest(out, "complete", {"n_bubbles": dec.n_bubbles})
    return 0


def _sweep_one(args) -> tuple:
    raw, index = args
    cfg = ScenarioConfig(raw)
    code = cmd_simulate(cfg)
    params = critical_exponent(cfg.grid.d, cfg.p)
    return index, code, params.regime


def cmd_sweep(cfg_path) -> int:
    with open(cfg_path) as fh:
        raw = json.load(fh)
    base = {k: v for k, v in raw.items() if k != "sweep"}
    overrides = raw.get("sweep", [])
    if not overrides:
        raise DomainError("config precondition violated: sweep requires a 'sweep' list")
    jobs = []
    for i, override in enumerate(overrides):
        merged = copy.deepcopy(base)
        for section, vals in override.items():
            merged.setdefault(section, {})
            if isinstance(vals, dict):
                merged[section].update(vals)
            else:
                merged[section] = vals
        merged.setdefault("output", {})
        base_dir = merged["output"].get("directory", "nlkg_out")
        merged["output"]["directory"] = str(Path(base_dir) / f"case{i:03d}")
        ScenarioConfig(merged)  # validate before any compute
        jobs.append((merged, i))
    workers = int(os.environ.get("NLKG_WORKERS", "2"))
    results = []
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = sorted(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]
    root = Path(raw.get("output", {}).get("directory", "nlkg_out"))
    root.mkdir(parents=True, exist_ok=True)
    snapshots.write_json(root / "sweep_report.json",
                         {"cases": [{"index": i, "exit": c, "regime": r}
                                    for i, c, r in results]})
    return max((c for _, c, _ in results), default=0)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="nlkg",
                                     description="NLKG simulator and diagnostics")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "audit-tensors", "cones", "fit", "decompose", "sweep"):
        sp = sub.add_parser(name)
        sp.add_argument("config", help="path to a JSON scenario config")
        if name == "fit":
            sp.add_argument("--trajectory", default=None,
                            help="stored trajectory directory (defaults to a fresh run)")
    args = parser.parse_args(argv)
    try:
        if args.command == "sweep":
            return cmd_sweep(args.config)
        cfg = load_config(args.config)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "audit-tensors":
            return cmd_audit_tensors(cfg)
        if args.command == "cones":
            return cmd_cones(cfg)
        if args.command == "fit":
            return cmd_fit(cfg, args.trajectory)
        if args.command == "decompose":
            return cmd_decompose(cfg)
    except DomainError as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
