"""Command-line interface: point analyses, sweeps, evolutions, presets.

Verbs: spectrum, evolve, steady, asymptotic-discord, oracle-check and
preset <fig2|fig4|fig6|fig7|fig8>.  Output is CSV (default) or JSON with
a provenance preamble; floats carry 17 significant digits so files
round-trip exactly.  Time axes are in units of 1/g unless
--absolute-time is given.  Diverged evolutions emit a literal
``diverged`` sentinel and stop.

Exit codes: 0 success, 1 config error, 2 numerical failure, 3 oracle
check failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .errors import ConfigError, CutoffExceeded, GainLossError, NonPhysical
from . import dynamics, fock_oracle, gaussian, model
from .model import ModelParams

DIVERGED = "diverged"

_PARAM_KEYS = {
    "g": "g",
    "gamma_l": "gamma_L",
    "gamma_g": "gamma_G",
    "big_gamma_g": "Gamma_G",
}


@dataclass(frozen=True)
class SweepSpec:
    name: str  # one of _PARAM_KEYS
    lo: float
    hi: float
    count: int
    log: bool = False

    def values(self) -> np.ndarray:
        if self.count == 1:
            return np.array([self.lo])
        if self.log:
            if self.lo <= 0 or self.hi <= 0:
                raise ConfigError("log sweep requires positive bounds")
            return np.geomspace(self.lo, self.hi, self.count)
        return np.linspace(self.lo, self.hi, self.count)


@dataclass
class RunConfig:
    params: ModelParams = field(
        default_factory=lambda: ModelParams(1.0, 0.0, 0.0, 0.0)
    )
    sweep: SweepSpec | None = None
    t_max: float = 40.0  # units of 1/g unless absolute_time
    samples: int = 401
    fmt: str = "csv"
    out: str | None = None
    absolute_time: bool = False
    grid: int = 100
    preset: str | None = None


def _parse_sweep(text: str) -> SweepSpec:
    parts = text.split(":")
    if len(parts) not in (4, 5):
        raise ConfigError(f"bad sweep spec {text!r}; want name:min:max:count[:log]")
    name = parts[0].lower()
    if name not in _PARAM_KEYS:
        raise ConfigError(f"unknown sweep parameter {parts[0]!r}")
    log = False
    if len(parts) == 5:
        if parts[4] != "log":
            raise ConfigError(f"bad sweep modifier {parts[4]!r}")
        log = True
    try:
        lo, hi, count = float(parts[1]), float(parts[2]), int(parts[3])
    except ValueError as exc:
        raise ConfigError(f"bad sweep spec {text!r}: {exc}") from None
    if not (np.isfinite(lo) and np.isfinite(hi)) or count < 1:
        raise ConfigError(f"sweep bounds must be finite with count >= 1: {text!r}")
    return SweepSpec(name=name, lo=lo, hi=hi, count=count, log=log)


def _read_config_file(path: str) -> dict[str, str]:
    out = {}
    try:
        with open(path) as fh:
            for raw in fh:
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"bad config line {raw.rstrip()!r} in {path}")
                key, value = line.split("=", 1)
                out[key.strip().lower()] = value.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    return out


def _with_param(params: ModelParams, key: str, value: float) -> ModelParams:
    try:
        return replace(params, **{_PARAM_KEYS[key]: value})
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _build_config(args) -> RunConfig:
    cfg = RunConfig()
    file_vals = _read_config_file(args.config) if getattr(args, "config", None) else {}

    def pick(flag_name, file_key, cast, current):
        flag = getattr(args, flag_name, None)
        if flag is not None:
            return cast(flag)
        if file_key in file_vals:
            try:
                return cast(file_vals[file_key])
            except (ValueError, ConfigError) as exc:
                raise ConfigError(f"bad config value for {file_key}: {exc}") from None
        return current

    params = cfg.params
    for key in _PARAM_KEYS:
        current = getattr(params, _PARAM_KEYS[key])
        value = pick(key, key, float, current)
        if value != current:
            params = _with_param(params, key, value)
    cfg.params = params
    cfg.t_max = pick("t_max", "t_max", float, cfg.t_max)
    cfg.samples = int(pick("samples", "samples", int, cfg.samples))
    cfg.fmt = pick("format", "format", str, cfg.fmt)
    cfg.grid = int(pick("grid", "grid", int, cfg.grid))
    if cfg.fmt not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {cfg.fmt!r}")
    if cfg.samples < 1:
        raise ConfigError(f"samples must be >= 1, got {cfg.samples}")
    if cfg.t_max < 0 or not np.isfinite(cfg.t_max):
        raise ConfigError(f"t_max must be finite and >= 0, got {cfg.t_max}")
    sweep_text = getattr(args, "sweep", None) or file_vals.get("sweep")
    if sweep_text:
        cfg.sweep = _parse_sweep(sweep_text)
    cfg.out = getattr(args, "out", None)
    cfg.absolute_time = bool(getattr(args, "absolute_time", False))
    return cfg


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _write(cfg: RunConfig, command: str, method: str, columns, rows) -> None:
    p = cfg.params
    meta = {
        "tool": f"gainloss {__version__}",
        "command": command,
        "method": method,
        "g": p.g,
        "gamma_L": p.gamma_L,
        "gamma_G": p.gamma_G,
        "Gamma_G": p.Gamma_G,
        "time_unit": "absolute" if cfg.absolute_time else "1/g",
        "preset": cfg.preset or "",
        "generated": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    if cfg.fmt == "json":
        payload = {"metadata": meta, "rows": [dict(zip(columns, r)) for r in rows]}
        text = json.dumps(payload, indent=1, default=_fmt) + "\n"
    else:
        lines = [f"# {k}: {v}" for k, v in meta.items()]
        lines.append(",".join(columns))
        for r in rows:
            lines.append(",".join(_fmt(v) for v in r))
        text = "\n".join(lines) + "\n"
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _sweep_or_point(cfg: RunConfig, default_name: str = "gamma_l") -> SweepSpec:
    if cfg.sweep is not None:
        return cfg.sweep
    value = getattr(cfg.params, _PARAM_KEYS[default_name])
    return SweepSpec(name=default_name, lo=value, hi=value, count=1)


def cmd_spectrum(cfg: RunConfig) -> int:
    sweep = _sweep_or_point(cfg)
    columns = [
        "sweep_param",
        "sweep_value",
        "re_e_plus",
        "im_e_plus",
        "re_e_minus",
        "im_e_minus",
        "regime",
        "stable",
    ]
    rows = []
    for value in sweep.values():
        p = _with_param(cfg.params, sweep.name, float(value))
        spec = model.eigenvalues(p)
        regime = model.classify_regime(p)
        rows.append(
            [
                sweep.name,
                float(value),
                spec.e_plus.real,
                spec.e_plus.imag,
                spec.e_minus.real,
                spec.e_minus.imag,
                regime.kind.value,
                regime.stable,
            ]
        )
    _write(cfg, "spectrum", "closed-form eigenvalues", columns, rows)
    return 0


# Covariance entry magnitude beyond which time-series samples switch to
# the arbitrary-precision propagation path.
_PRECISE_RANGE = 1e10


def _evolve_series(params: ModelParams, t_abs: np.ndarray):
    """Correlation reports of the vacuum-start evolution on a time grid.

    Yields (t_abs, report-or-None); None marks divergence, after which
    the series stops.
    """
    sigma = gaussian.vacuum_covariance()
    if t_abs.size == 0:
        return
    dt = t_abs[1] - t_abs[0] if t_abs.size > 1 else 0.0
    step = dynamics.make_stepper(params, dt) if dt > 0 else None
    for k, t in enumerate(t_abs):
        if k > 0:
            sigma = step(sigma)
        if np.abs(sigma).max() > dynamics.DIVERGENCE_CAP or not np.all(
            np.isfinite(sigma.view(float))
        ):
            yield t, None
            return
        if np.abs(sigma).max() > _PRECISE_RANGE:
            # Beyond this dynamic range float64 entries no longer resolve
            # the small symplectic eigenvalue; redo this sample in
            # arbitrary precision from the initial state.
            yield t, gaussian.correlation_report_precise(
                dynamics.propagate_precise(
                    gaussian.vacuum_covariance(), params, float(t)
                )
            )
        else:
            yield t, gaussian.correlation_report(gaussian.to_quadrature(sigma))


_TS_COLUMNS = [
    "series",
    "t",
    "mutual_information",
    "discord_LG",
    "discord_GL",
    "nu_minus",
    "nu_plus",
    "s_total",
]


def _series_rows(label: str, params: ModelParams, cfg: RunConfig) -> list:
    g = params.g
    t_max_abs = cfg.t_max if cfg.absolute_time or g == 0 else cfg.t_max / g
    t_abs = np.linspace(0.0, t_max_abs, cfg.samples)
    unit = 1.0 if cfg.absolute_time or g == 0 else g
    rows = []
    for t, rep in _evolve_series(params, t_abs):
        if rep is None:
            rows.append([label, float(t * unit)] + [DIVERGED] * 6)
            break
        rows.append(
            [
                label,
                float(t * unit),
                rep.mutual_information,
                rep.discord_LG,
                rep.discord_GL,
                rep.nu_minus,
                rep.nu_plus,
                rep.s_total,
            ]
        )
    return rows


def cmd_evolve(cfg: RunConfig, series=None) -> int:
    if series is None:
        series = [("point", cfg.params)]
    rows = []
    for label, params in series:
        rows.extend(_series_rows(label, params, cfg))
    _write(cfg, "evolve", "exact-exponential stepping", _TS_COLUMNS, rows)
    return 0


def cmd_steady(cfg: RunConfig) -> int:
    sweep = _sweep_or_point(cfg)
    columns = [
        "sweep_param",
        "sweep_value",
        "mutual_information",
        "discord_LG",
        "discord_GL",
        "entangled",
        "stable",
    ]
    rows = []
    for value in sweep.values():
        p = _with_param(cfg.params, sweep.name, float(value))
        if dynamics.is_stable(p).kind != dynamics.Stability.STABLE:
            rows.append([sweep.name, float(value), "", "", "", "", False])
            continue
        rep = gaussian.correlation_report(
            gaussian.to_quadrature(dynamics.stationary(p))
        )
        rows.append(
            [
                sweep.name,
                float(value),
                rep.mutual_information,
                rep.discord_LG,
                rep.discord_GL,
                rep.entangled_by_discord,
                True,
            ]
        )
    _write(cfg, "steady", "stationary Lyapunov solve", columns, rows)
    return 0


def _discord_plateau(params: ModelParams, t_max_abs: float):
    """March the vacuum-start evolution until the discord rate stalls."""
    g = params.g or 1.0
    dt = 0.5 / g
    step = dynamics.make_stepper(params, dt)
    sigma = gaussian.vacuum_covariance()
    d_prev = 0.0
    t = 0.0
    converged = False
    while t < t_max_abs:
        sigma = step(sigma)
        t += dt
        if np.abs(sigma).max() > dynamics.DIVERGENCE_CAP or not np.all(
            np.isfinite(sigma.view(float))
        ):
            break
        if np.abs(sigma).max() > _PRECISE_RANGE:
            d_now = gaussian.correlation_report_precise(
                dynamics.propagate_precise(
                    gaussian.vacuum_covariance(), params, t
                )
            ).discord_LG
        else:
            d_now = gaussian.gaussian_discord(gaussian.to_quadrature(sigma), "LG")
        if t > 5.0 / g and abs(d_now - d_prev) / dt < 1e-6 * g:
            converged = True
            d_prev = d_now
            break
        d_prev = d_now
    return d_prev, converged, t


def cmd_asymptotic_discord(cfg: RunConfig) -> int:
    """Long-time discord over the (Gamma_G, gamma_G) balanced-gain grid."""
    g = cfg.params.g
    if g <= 0:
        raise ConfigError("asymptotic-discord requires g > 0")
    t_max_abs = cfg.t_max if cfg.absolute_time else cfg.t_max / g
    columns = [
        "big_gamma_g",
        "gamma_g",
        "gamma_l",
        "discord_LG",
        "converged",
        "t_final",
    ]
    unit = 1.0 if cfg.absolute_time else g
    big_vals = np.linspace(0.0, 4.0 * g, cfg.grid + 1)[1:]  # (0, 4g]
    small_vals = np.linspace(0.0, 4.0 * g, cfg.grid, endpoint=False)
    rows = []
    for big in big_vals:
        for small in small_vals:
            if small >= big:
                continue  # balanced gain-loss requires net gain
            p = ModelParams(g, big - small, float(small), float(big))
            d, converged, t = _discord_plateau(p, t_max_abs)
            rows.append(
                [float(big), float(small), p.gamma_L, d, converged, float(t * unit)]
            )
    _write(cfg, "asymptotic-discord", "exact-exponential stepping", columns, rows)
    return 0


def _oracle_checks(cutoff: int, diffusion_scale: float):
    """Cross-validation suite; yields (name, deviation, tolerance)."""
    params = ModelParams(g=2.0, gamma_L=1.6, gamma_G=1.2, Gamma_G=2.32)
    # Horizon chosen so the truncated state keeps its top-layer population
    # below the cutoff gate; by then the occupations are still around one.
    t_grid = np.linspace(0.0, 0.3 / params.g, 4)
    yd = dynamics.build_drift_diffusion(params)
    yd = dynamics.DriftDiffusion(y=yd.y, d=yd.d * diffusion_scale, params=params)

    def gauss_cov(t):
        f11, noise = dynamics._propagator_pieces(yd, t)
        out = f11 @ gaussian.vacuum_covariance() @ f11.conj().T + noise
        return 0.5 * (out + out.conj().T)

    states = fock_oracle.integrate(
        fock_oracle.vacuum_state(cutoff), params, t_grid
    )
    dev = max(
        np.abs(fock_oracle.covariance_from_state(s) - gauss_cov(t)).max()
        for t, s in zip(t_grid, states)
    )
    yield "propagator-vs-oracle", float(dev), 1e-6

    states_c = fock_oracle.integrate(
        fock_oracle.coherent_state(1.0, 0.5, cutoff), params, t_grid
    )
    dev = max(
        np.abs(
            fock_oracle.covariance_from_state(sc)
            - fock_oracle.covariance_from_state(sv)
        ).max()
        for sc, sv in zip(states_c, states)
    )
    yield "amplitude-independence", float(dev), 1e-7

    gain = ModelParams(g=0.0, gamma_L=0.0, gamma_G=0.0, Gamma_G=0.5)
    t_short = np.linspace(0.0, 0.5, 6)
    states_g = fock_oracle.integrate(fock_oracle.vacuum_state(cutoff), gain, t_short)
    dev = max(
        abs(
            fock_oracle.covariance_from_state(s)[1, 1].real
            - (2.0 * (np.exp(2.0 * gain.Gamma_G * t) - 1.0) + 1.0)
        )
        for t, s in zip(t_short, states_g)
    )
    yield "gain-only-growth", float(dev), 1e-7


def cmd_oracle_check(cutoff: int = 30, diffusion_scale: float = 1.0) -> int:
    failed = False
    try:
        for name, dev, tol in _oracle_checks(cutoff, diffusion_scale):
            ok = dev < tol
            failed |= not ok
            print(f"{'PASS' if ok else 'FAIL'} {name}: max deviation {dev:.3e} (tol {tol:.0e})")
    except CutoffExceeded as exc:
        print(f"FAIL cutoff: {exc}")
        return 3
    return 3 if failed else 0


def _preset_fig2(cfg: RunConfig):
    cfg.params = replace(cfg.params, g=cfg.params.g or 1.0)
    g = cfg.params.g
    series = []
    for label, big, frac in (
        ("pure-unbroken", 0.5, 0.0),
        ("pure-ep", 1.0, 0.0),
        ("pure-broken", 1.5, 0.0),
        ("dissipative-unbroken", 1.0, 0.5),
        ("dissipative-ep", 2.0, 0.5),
        ("dissipative-broken", 3.0, 0.5),
    ):
        big_g = big * g
        gamma_g = frac * big_g
        series.append((label, ModelParams(g, big_g - gamma_g, gamma_g, big_g)))
    return cmd_evolve(cfg, series=series)


def _preset_fig8(cfg: RunConfig):
    g = cfg.params.g
    base = cfg.params
    series = [
        ("below-ep", replace(base, gamma_L=0.8 * g)),
        ("at-ep", replace(base, gamma_L=1.44 * g)),
        ("above-ep", replace(base, gamma_L=1.6 * g)),
    ]
    return cmd_evolve(cfg, series=series)


def _preset_fig7(cfg: RunConfig):
    th = model.thresholds(cfg.params)
    if cfg.sweep is None:
        cfg.sweep = SweepSpec(
            name="gamma_l",
            lo=th.gamma_L_PT * 1.01,
            hi=th.gamma_L_th_numeric * 0.999,
            count=300,
        )
    return cmd_steady(cfg)


# Figure-style parameter presets, one table; unit-tested against the
# regimes they are meant to reproduce.
PRESETS = {
    "fig2": {
        "defaults": dict(g=1.0, t_max=40.0, samples=401),
        "run": _preset_fig2,
    },
    "fig4": {
        "defaults": dict(g=1.0, t_max=200.0),
        "run": cmd_asymptotic_discord,
    },
    "fig6": {
        "defaults": dict(
            g=2.0,
            gamma_g=1.2,
            big_gamma_g=2.32,
            sweep="gamma_l:0.0:7.142857142857143:400",
        ),
        "run": cmd_spectrum,
    },
    "fig7": {
        "defaults": dict(g=2.0, gamma_g=1.2, big_gamma_g=2.32),
        "run": _preset_fig7,
    },
    "fig8": {
        "defaults": dict(
            g=2.0, gamma_g=1.2, big_gamma_g=2.32, t_max=10.0, samples=501
        ),
        "run": _preset_fig8,
    },
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--g", type=float, default=None, help="coupling rate")
    parser.add_argument("--gamma-l", dest="gamma_l", type=float, default=None)
    parser.add_argument("--gamma-g", dest="gamma_g", type=float, default=None)
    parser.add_argument("--big-gamma-g", dest="big_gamma_g", type=float, default=None)
    parser.add_argument(
        "--sweep", default=None, help="name:min:max:count[:log] over one parameter"
    )
    parser.add_argument("--t-max", dest="t_max", type=float, default=None)
    parser.add_argument("--samples", type=int, default=None)
    parser.add_argument("--grid", type=int, default=None, help="grid points per axis")
    parser.add_argument("--format", choices=("csv", "json"), default=None)
    parser.add_argument("--out", default=None, help="output path (default stdout)")
    parser.add_argument("--config", default=None, help="key=value config file")
    parser.add_argument(
        "--absolute-time",
        action="store_true",
        help="time axes in absolute units instead of 1/g",
    )


def _make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gainloss",
        description="Two-mode dissipative gain-loss system: spectra, "
        "covariance dynamics and Gaussian correlations.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("spectrum", "evolve", "steady", "asymptotic-discord"):
        _add_common(sub.add_parser(name))
    oc = sub.add_parser("oracle-check")
    oc.add_argument("--cutoff", type=int, default=30)
    oc.add_argument(
        "--corrupt-diffusion",
        type=float,
        default=1.0,
        help=argparse.SUPPRESS,  # fault-injection hook for tests
    )
    pre = sub.add_parser("preset")
    pre.add_argument("name", choices=sorted(PRESETS))
    _add_common(pre)
    return parser


def _run(args) -> int:
    if args.command == "oracle-check":
        return cmd_oracle_check(args.cutoff, args.corrupt_diffusion)
    if args.command == "preset":
        preset = PRESETS[args.name]
        for key, value in preset["defaults"].items():
            if getattr(args, key, None) is None:
                setattr(args, key, value)
        cfg = _build_config(args)
        cfg.preset = args.name
        return preset["run"](cfg)
    cfg = _build_config(args)
    if args.command == "spectrum":
        return cmd_spectrum(cfg)
    if args.command == "evolve":
        return cmd_evolve(cfg)
    if args.command == "steady":
        return cmd_steady(cfg)
    if args.command == "asymptotic-discord":
        return cmd_asymptotic_discord(cfg)
    raise ConfigError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    parser = _make_parser()
    try:
        args = parser.parse_args(argv)
        return _run(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NonPhysical, CutoffExceeded) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except GainLossError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
