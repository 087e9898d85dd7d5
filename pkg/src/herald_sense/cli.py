"""Command-line front end.

Subcommands
-----------
calibrate    tabulate theory and Monte Carlo calibration data over a phase sweep
estimate     estimate the phase from a record file or a seeded simulation
sensitivity  simulate-and-estimate sensitivity scan over seed amplitudes
optimize     report the optimal homodyne observable, QFI, NPT, heralding rate
sample       stream simulated quadrature records to a CSV file

Configuration comes from an optional JSON document (``--config``) with
individual flags taking precedence; the fully resolved configuration is
echoed next to every result (embedded in JSON outputs, as a
``.meta.json`` sidecar for CSV outputs).  Runs are deterministic given
the resolved configuration.  ``HERALD_SENSE_SEED`` supplies the seed when
neither flag nor config does.

Phases are radians; ``--phi`` also accepts ``pi``, ``pi+0.05``,
``pi-0.4``, and sweep specs ``start:stop:step`` whose endpoints use the
same notation.

Exit codes: 0 success, 2 configuration error, 3 ingest error, 4 numeric
error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ._io import meta_sidecar_path, write_csv, write_json
from ._version import VERSION
from .estimator import (
    build_calibration,
    estimate_phase,
    ingest_samples,
    sensitivity_vs_alpha,
)
from .exceptions import ConfigError, IngestError, NumericError
from .metrology import heralding_rate, npt, optimize_observable, qfi
from .moments import HeraldedStateSpec, assemble
from .noise import EfficiencyPair, eta_p_of_alpha, lossy_mean_x, lossy_sensitivity, lossy_var_x
from .sampler import SamplerConfig, draw, sample_stream_to_file

__all__ = ["RunConfig", "main", "parse_phi_scalar", "parse_phi_sweep"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INGEST = 3
EXIT_NUMERIC = 4

SEED_ENV_VAR = "HERALD_SENSE_SEED"
DEFAULT_ALPHAS = (1.13, 3.40, 5.40, 7.92)
DEFAULT_MU_SWEEP = (200, 1000, 10000)


def parse_phi_scalar(text) -> float:
    """Parse one phase: a float in radians or ``pi``/``pi+x``/``pi-x``."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return float(text)
    s = str(text).strip().lower().replace(" ", "")
    try:
        if s == "pi":
            return math.pi
        if s.startswith("pi+"):
            return math.pi + float(s[3:])
        if s.startswith("pi-"):
            return math.pi - float(s[3:])
        return float(s)
    except ValueError:
        raise ConfigError(
            f"cannot parse phase {text!r}; use radians or pi+<offset> notation"
        ) from None


def parse_phi_sweep(text) -> np.ndarray:
    """Parse ``start:stop:step`` into an inclusive, non-empty phase grid."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ConfigError(f"phase sweep must be 'start:stop:step', got {text!r}")
    start, stop, step = (parse_phi_scalar(p) for p in parts)
    if step <= 0.0 or stop < start:
        raise ConfigError(f"phase sweep needs stop >= start and step > 0, got {text!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count)


@dataclass(frozen=True)
class RunConfig:
    """Resolved run configuration; round-trips losslessly through JSON.

    ``phi`` stays in its textual form so sweeps and ``pi+x`` offsets
    survive serialization; commands parse it on use.  ``eta_p=None``
    selects the empirical preparation-efficiency law in ``alpha``.
    """

    alpha: float = 1.13
    phi: str = "pi"
    eta_p: Optional[float] = None
    eta_d: float = 0.59
    g_squared: float = 1e-6
    mu: int = 200
    seed: Optional[int] = None
    n_records: int = 50000
    mc_samples: int = 50000
    set_size: int = 5000
    n_bootstrap: int = 500
    n_points: int = 601
    alphas: tuple = DEFAULT_ALPHAS
    phi_true: Optional[str] = None
    mu_sweep: tuple = ()
    simulate: bool = False
    input_path: Optional[str] = None
    out_path: Optional[str] = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["alphas"] = list(self.alphas)
        d["mu_sweep"] = list(self.mu_sweep)
        return d

    @classmethod
    def from_dict(cls, payload: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(payload) - known)
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
        data = dict(payload)
        for key in ("alphas", "mu_sweep"):
            if key in data and data[key] is not None:
                data[key] = tuple(data[key])
        if "phi" in data and data["phi"] is not None:
            data["phi"] = str(data["phi"])
        if "phi_true" in data and data["phi_true"] is not None:
            data["phi_true"] = str(data["phi_true"])
        return cls(**data)

    @classmethod
    def from_json_file(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(payload, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        return cls.from_dict(payload)

    def resolved_seed(self) -> int:
        if self.seed is not None:
            return int(self.seed)
        env = os.environ.get(SEED_ENV_VAR)
        if env is not None:
            try:
                return int(env)
            except ValueError:
                raise ConfigError(
                    f"{SEED_ENV_VAR} must be an integer, got {env!r}"
                ) from None
        return 0

    def efficiency(self) -> EfficiencyPair:
        eta_p = self.eta_p if self.eta_p is not None else eta_p_of_alpha(self.alpha)
        return EfficiencyPair(eta_p=eta_p, eta_d=self.eta_d)

    def validate(self) -> "RunConfig":
        if not math.isfinite(self.alpha):
            raise ConfigError(f"alpha must be finite, got {self.alpha}")
        for name in ("mu", "n_records", "mc_samples", "set_size", "n_bootstrap", "n_points"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if not self.alphas:
            raise ConfigError("alphas sweep must be non-empty")
        return self


def _echo_config(config: RunConfig) -> dict:
    resolved = replace(config, seed=config.resolved_seed())
    return resolved.to_dict()


def _child_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(entropy=int(seed), spawn_key=key).generate_state(1)[0])


def _emit_json(config: RunConfig, result: dict, out_path: Optional[str]) -> None:
    payload = {"herald_sense_version": VERSION, "config": _echo_config(config), "result": result}
    if out_path:
        write_json(out_path, payload)
    else:
        json.dump(payload, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")


def _write_csv_with_meta(config: RunConfig, path, header, rows) -> None:
    write_csv(path, header, rows)
    write_json(
        meta_sidecar_path(path),
        {"herald_sense_version": VERSION, "config": _echo_config(config)},
    )


def _require_out(config: RunConfig, command: str) -> str:
    if not config.out_path:
        raise ConfigError(f"{command} writes a CSV file; pass --out PATH")
    return config.out_path


def cmd_calibrate(config: RunConfig) -> int:
    """Theory and Monte Carlo calibration columns over a phase sweep.

    Emits (phi, mean_x_theory, var_x_theory, mean_x_mc, se_mc); the Monte
    Carlo mean uses ``mc_samples`` records per point and its standard
    error comes from the scatter of ``set_size``-sized subset means.
    """
    out = _require_out(config, "calibrate")
    if ":" not in config.phi:
        raise ConfigError("calibrate requires a phase sweep, e.g. --phi pi-0.4:pi+0.4:0.05")
    grid = parse_phi_sweep(config.phi)
    if config.mc_samples % config.set_size != 0:
        raise ConfigError(
            f"mc_samples ({config.mc_samples}) must be a multiple of set_size ({config.set_size})"
        )
    n_sets = config.mc_samples // config.set_size
    if n_sets < 2:
        raise ConfigError("need at least 2 subsets for the Monte Carlo standard error")
    eff = config.efficiency()
    seed = config.resolved_seed()
    rows = []
    for i, phi in enumerate(grid):
        spec = HeraldedStateSpec(config.alpha, float(phi))
        records = draw(spec, eff, config.mc_samples, SamplerConfig(seed=_child_seed(seed, i)))
        x = records[:, 0] - records[:, 1]
        subset_means = x.reshape(n_sets, config.set_size).mean(axis=1)
        se = float(np.std(subset_means, ddof=1) / math.sqrt(n_sets))
        rows.append(
            (
                float(phi),
                lossy_mean_x(config.alpha, float(phi), eff),
                lossy_var_x(config.alpha, float(phi), eff),
                float(x.mean()),
                se,
            )
        )
    _write_csv_with_meta(
        config, out, ("phi", "mean_x_theory", "var_x_theory", "mean_x_mc", "se_mc"), rows
    )
    return EXIT_OK


def _simulated_records(config: RunConfig, n: int, seed: int) -> np.ndarray:
    spec = HeraldedStateSpec(config.alpha, parse_phi_scalar(config.phi))
    return draw(spec, config.efficiency(), n, SamplerConfig(seed=seed))


def cmd_estimate(config: RunConfig) -> int:
    """Phase estimate as JSON; with ``mu_sweep`` also a var-vs-mu CSV.

    Records come either from ``input_path`` (sampler CSV format) or, with
    ``simulate``, from a seeded draw of ``mu`` records at the configured
    phase.  The sweep reuses prefixes of one record pool so the curve
    shows the same data set growing.
    """
    if config.simulate == bool(config.input_path):
        raise ConfigError("estimate needs exactly one record source: an input file or --simulate")
    seed = config.resolved_seed()
    eff = config.efficiency()
    curve = build_calibration(config.alpha, eff, n_points=config.n_points)
    if config.simulate:
        records = _simulated_records(config, config.mu, seed)
    else:
        records = ingest_samples(config.input_path)
    result = estimate_phase(records, curve, config.n_bootstrap, seed=_child_seed(seed, 1))
    payload = {
        "phi_hat": result.phi_hat,
        "var_phi": result.var_phi,
        "mu": result.mu,
        "sensitivity": result.sensitivity,
        "bootstrap_se": result.bootstrap_se,
        "eta_p": eff.eta_p,
        "eta_d": eff.eta_d,
    }

    if config.mu_sweep:
        if not config.simulate:
            raise ConfigError("--mu-sweep requires --simulate")
        out = _require_out(config, "estimate --mu-sweep")
        mus = sorted(int(m) for m in config.mu_sweep)
        if mus[0] < 2:
            raise ConfigError("mu sweep values must be >= 2")
        s_theory = lossy_sensitivity(config.alpha, eff)
        pool = _simulated_records(config, mus[-1], _child_seed(seed, 2))
        rows = []
        for j, m in enumerate(mus):
            res = estimate_phase(pool[:m], curve, config.n_bootstrap, seed=_child_seed(seed, 3, j))
            rows.append((m, res.var_phi, 1.0 / (m * s_theory)))
        _write_csv_with_meta(config, out, ("mu", "var_phi", "var_phi_theory"), rows)
        payload["mu_sweep_csv"] = str(out)
        _emit_json(config, payload, None)
        return EXIT_OK

    _emit_json(config, payload, config.out_path)
    return EXIT_OK


def cmd_sensitivity(config: RunConfig) -> int:
    """Sensitivity scan CSV: (alpha, s_sim, s_sim_se, s_theory, eta_p_used)."""
    out = _require_out(config, "sensitivity")
    phi_true = parse_phi_scalar(config.phi_true) if config.phi_true is not None else None
    rows = sensitivity_vs_alpha(
        config.alphas,
        eta_d=config.eta_d,
        mu=config.mu,
        n_bootstrap=config.n_bootstrap,
        phi_true=phi_true,
        seed=config.resolved_seed(),
        eta_p_override=config.eta_p,
    )
    for row in rows:
        if row.error is not None:
            print(f"warning: alpha={row.alpha}: {row.error}", file=sys.stderr)
    _write_csv_with_meta(
        config,
        out,
        ("alpha", "s_sim", "s_sim_se", "s_theory", "eta_p_used"),
        [(r.alpha, r.s_sim, r.s_sim_se, r.s_theory, r.eta_p_used) for r in rows],
    )
    return EXIT_OK


def cmd_optimize(config: RunConfig) -> int:
    """Optimal observable report at one working point, as JSON."""
    spec = HeraldedStateSpec(config.alpha, parse_phi_scalar(config.phi))
    report = optimize_observable(assemble(spec))
    result = {
        "c_opt": [float(v) for v in report.c_opt.values],
        "s_opt": report.s_opt,
        "s_difference": report.s_of_c,
        "qfi": qfi(spec),
        "npt": npt(spec),
        "heralding_rate": heralding_rate(spec, config.g_squared),
    }
    _emit_json(config, result, config.out_path)
    return EXIT_OK


def cmd_sample(config: RunConfig) -> int:
    """Stream ``n_records`` simulated records to CSV plus meta sidecar."""
    out = _require_out(config, "sample")
    spec = HeraldedStateSpec(config.alpha, parse_phi_scalar(config.phi))
    meta = sample_stream_to_file(
        out,
        spec,
        config.efficiency(),
        config.n_records,
        SamplerConfig(seed=config.resolved_seed()),
    )
    meta["config"] = _echo_config(config)
    write_json(meta_sidecar_path(out), meta)
    return EXIT_OK


_COMMANDS = {
    "calibrate": cmd_calibrate,
    "estimate": cmd_estimate,
    "sensitivity": cmd_sensitivity,
    "optimize": cmd_optimize,
    "sample": cmd_sample,
}


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", dest="config_path", metavar="PATH", help="JSON config file")
    common.add_argument("--alpha", type=float, help="seed coherent amplitude (real)")
    common.add_argument("--phi", help="phase in radians, pi+x notation, or start:stop:step sweep")
    common.add_argument("--eta-p", dest="eta_p", type=float, help="preparation efficiency in [0,1]")
    common.add_argument("--eta-d", dest="eta_d", type=float, help="detection efficiency in [0,1]")
    common.add_argument("--g2", dest="g_squared", type=float, help="bare two-photon emission probability")
    common.add_argument("--mu", type=int, help="records per estimate")
    common.add_argument("--seed", type=int, help="PRNG seed (fallback: $HERALD_SENSE_SEED, then 0)")
    common.add_argument("--out", dest="out_path", metavar="PATH", help="output file")
    common.add_argument("--bootstrap", dest="n_bootstrap", type=int, metavar="B", help="bootstrap resamples")
    common.add_argument("--n-records", dest="n_records", type=int, help="records for the sample command")
    common.add_argument("--mc-samples", dest="mc_samples", type=int, help="Monte Carlo records per calibration point")
    common.add_argument("--set-size", dest="set_size", type=int, help="subset size for Monte Carlo error bars")
    common.add_argument("--n-points", dest="n_points", type=int, help="calibration grid points")
    common.add_argument("--alphas", help="comma-separated amplitudes for the sensitivity scan")
    common.add_argument("--phi-true", dest="phi_true", help="true phase for the sensitivity scan")

    parser = argparse.ArgumentParser(
        prog="herald-sense",
        description="Remote phase sensing via delocalized photon addition: "
        "simulation, calibration, and estimation toolkit.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("calibrate", parents=[common], help="phase-sweep calibration table")

    p_est = sub.add_parser("estimate", parents=[common], help="estimate the phase from records")
    p_est.add_argument("input", nargs="?", default=argparse.SUPPRESS, help="record CSV file")
    p_est.add_argument(
        "--simulate", action="store_true", default=argparse.SUPPRESS,
        help="draw mu records instead of reading a file",
    )
    p_est.add_argument(
        "--mu-sweep", dest="mu_sweep", nargs="?", metavar="M1,M2,...",
        const=",".join(str(m) for m in DEFAULT_MU_SWEEP), default=argparse.SUPPRESS,
        help="emit a var_phi-vs-mu CSV (default sweep: %(const)s)",
    )

    sub.add_parser("sensitivity", parents=[common], help="sensitivity scan over amplitudes")
    sub.add_parser("optimize", parents=[common], help="optimal observable, QFI, NPT, rate")
    sub.add_parser("sample", parents=[common], help="write simulated quadrature records")
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = vars(args).copy()
    overrides.pop("command", None)
    config_path = overrides.pop("config_path", None)
    config = RunConfig.from_json_file(config_path) if config_path else RunConfig()
    if "input" in overrides:
        overrides["input_path"] = overrides.pop("input")
    if "alphas" in overrides:
        try:
            overrides["alphas"] = tuple(float(a) for a in str(overrides["alphas"]).split(","))
        except ValueError:
            raise ConfigError(f"cannot parse --alphas {overrides['alphas']!r}") from None
    if "mu_sweep" in overrides:
        try:
            overrides["mu_sweep"] = tuple(int(m) for m in str(overrides["mu_sweep"]).split(","))
        except ValueError:
            raise ConfigError(f"cannot parse --mu-sweep {overrides['mu_sweep']!r}") from None
    return replace(config, **overrides).validate()


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _config_from_args(args)
        return _COMMANDS[args.command](config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IngestError as exc:
        print(f"ingest error: {exc}", file=sys.stderr)
        return EXIT_INGEST
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
