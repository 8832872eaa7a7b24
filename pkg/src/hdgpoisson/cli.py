"""Batch driver for convergence studies.

Settings come from an optional ``key = value`` file (``--config``) and from
command-line flags; flags win.  One CSV and one markdown table are written per
(mesh family, k).  With ``--check-rates`` the exit status is nonzero when an
observed rate on the finest pair leaves its band.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from .analysis import PROBLEMS, convergence_study, manufactured

log = logging.getLogger(__name__)

PROBLEM_DIM = {"sine2d": 2, "poly2d-quartic": 2, "poly3d": 3}
DEFAULT_PROBLEM = {2: "sine2d", 3: "poly3d"}

# (low, high) offsets from the predicted order on the finest refinement pair
RATE_BANDS = {
    "u_inf": (2, -0.25, 0.35),
    "q_inf": (1, -0.25, 0.35),
    "u_gamma": (2, -0.3, 0.3),
    "q_gamma": (1, -0.3, 0.3),
}


class ConfigError(ValueError):
    def __init__(self, key, msg):
        super().__init__(f"{key}: {msg}")
        self.key = key


@dataclass
class StudyConfig:
    dim: int = 2
    mesh: str = "simplex"
    k: tuple = (0, 1, 2)
    levels: tuple = (3, 4, 5, 6)
    problem: str | None = None
    solver: str = "auto"
    tol: float = 1e-11
    gamma: float | None = None
    out: str = "results"
    check_rates: bool = False
    density: int = 1

    def validate(self) -> "StudyConfig":
        if self.dim not in (2, 3):
            raise ConfigError("dim", "must be 2 or 3")
        if self.mesh not in ("simplex", "ladder"):
            raise ConfigError("mesh", "must be 'simplex' or 'ladder'")
        if self.mesh == "ladder" and self.dim != 2:
            raise ConfigError("mesh", "ladder meshes are 2D only")
        if not self.k or any(k < 0 for k in self.k):
            raise ConfigError("k", "degrees must be a non-empty list of integers >= 0")
        if len(self.levels) < 2:
            raise ConfigError("levels", "need at least two refinement exponents")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ConfigError("levels", "refinement exponents must be strictly increasing")
        if min(self.levels) < (1 if self.mesh == "ladder" else 0):
            raise ConfigError("levels", "refinement exponent too small for this mesh")
        if self.problem is None:
            self.problem = DEFAULT_PROBLEM[self.dim]
        if self.problem not in PROBLEMS:
            raise ConfigError("problem", f"unknown problem, choose from {sorted(PROBLEMS)}")
        if PROBLEM_DIM[self.problem] != self.dim:
            raise ConfigError("problem", f"{self.problem} is a {PROBLEM_DIM[self.problem]}D problem")
        if self.solver not in ("auto", "direct", "pcg"):
            raise ConfigError("solver", "must be auto, direct or pcg")
        if not self.tol > 0:
            raise ConfigError("tol", "must be positive")
        if self.density < 1:
            raise ConfigError("density", "must be >= 1")
        return self


def _int_list(text):
    try:
        return tuple(int(t) for t in str(text).split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _bool(text):
    val = str(text).strip().lower()
    if val in ("1", "true", "yes", "on"):
        return True
    if val in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    d = StudyConfig()
    p = argparse.ArgumentParser(
        prog="hdg-study",
        description="HDG convergence studies on the unit square/cube.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p.add_argument("--config", help="key = value file; command-line flags override it")
    p.add_argument("--dim", type=int, default=d.dim, help="spatial dimension (2 or 3)")
    p.add_argument("--mesh", default=d.mesh, help="mesh family: simplex or ladder")
    p.add_argument("--k", type=_int_list, default=d.k, help="comma list of degrees k")
    p.add_argument("--levels", type=_int_list, default=d.levels,
                   help="comma list of refinement exponents m, h = 2^-m")
    p.add_argument("--problem", default=d.problem,
                   help=f"one of {sorted(PROBLEMS)}; None picks sine2d in 2D and poly3d in 3D")
    p.add_argument("--solver", default=d.solver, help="auto, direct or pcg")
    p.add_argument("--tol", type=float, default=d.tol, help="PCG relative residual tolerance")
    p.add_argument("--gamma", type=float, default=d.gamma,
                   help="also report L2 errors on the interface x = GAMMA")
    p.add_argument("--out", default=d.out, help="output directory")
    p.add_argument("--check-rates", type=_bool, nargs="?", const=True, default=d.check_rates,
                   help="exit nonzero if a finest-pair rate leaves its band")
    p.add_argument("--density", type=int, default=d.density,
                   help="multiplier on the max-norm sample points per direction")
    return p


def _read_config_file(path, parser) -> list:
    known = {a.dest for a in parser._actions if a.dest not in ("help", "config")}
    argv = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw!r}")
        key, value = (t.strip() for t in line.split("=", 1))
        dest = key.replace("-", "_")
        if dest not in known:
            raise ConfigError(key, "unknown key")
        argv += ["--" + dest.replace("_", "-"), value]
    return argv


def parse_config(argv=None) -> StudyConfig:
    """Parse flags (and the ``--config`` file they name) into a validated config."""
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    first = parser.parse_args(argv)
    if first.config:
        argv = _read_config_file(first.config, parser) + argv
    ns = parser.parse_args(argv)
    fields = {k: v for k, v in vars(ns).items() if k != "config"}
    return StudyConfig(**fields).validate()


def check_report(report, k) -> list:
    """Failures as ``(column, rate, low, high)`` for every banded column."""
    bad = []
    for col in report.errors:
        order, lo, hi = RATE_BANDS[col]
        rate = report.final_rate(col)
        low, high = k + order + lo, k + order + hi
        if not low <= rate <= high:
            bad.append((col, rate, low, high))
    return bad


def run_study(config: StudyConfig) -> int:
    """Run every degree in ``config``; returns the process exit status."""
    config.validate()
    problem = manufactured(config.problem)
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    status = 0
    for k in config.k:
        report = convergence_study(
            problem, config.mesh, config.dim, k, config.levels, config.solver,
            config.tol, config.gamma, config.density,
        )
        stem = f"{config.problem}_{config.mesh}{config.dim}d_k{k}"
        (out / f"{stem}.csv").write_text(report.to_csv())
        (out / f"{stem}.md").write_text(f"### {config.mesh} mesh, {config.dim}D, k = {k}\n\n" + report.to_markdown())
        rates = ", ".join(f"{c} {report.final_rate(c):.2f}" for c in report.errors)
        print(f"{config.mesh} {config.dim}D k={k}: {rates}")
        if config.check_rates:
            for col, rate, low, high in check_report(report, k):
                print(f"  FAIL {col}: rate {rate:.3f} outside [{low:.2f}, {high:.2f}]")
                status = 1
    return status


def main(argv=None) -> int:
    parser = build_parser()
    try:
        config = parse_config(argv)
    except ConfigError as exc:
        parser.error(str(exc))
    try:
        return run_study(config)
    except Exception as exc:
        log.error("study failed: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
