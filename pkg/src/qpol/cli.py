"""Batch driver: ``qpol {malus,coincidence,chsh,verify}``.

Exit codes: 0 success, 1 configuration error, 2 failed fit or verification
check, 3 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import analysis
from .analyzer import ArccosUniform, Criterion, Gaussian
from .experiments import (
    AngleGrid,
    CoincidenceConfig,
    MalusConfig,
    chsh_run,
    run_coincidence,
    run_malus,
)
from .verify import run_checks

EXIT_OK, EXIT_CONFIG, EXIT_CHECK, EXIT_IO = 0, 1, 2, 3
SEED_ENV = "QPOL_SEED"
EXPERIMENTS = ("malus", "coincidence", "chsh", "verify")
CONFIG_KEYS = {
    "experiment", "seed", "angles_deg", "count_per_angle", "distribution",
    "criterion", "coupled", "chsh_angles_deg", "output_dir",
}
DEFAULT_COUNTS = {"malus": 40000, "coincidence": 10000, "chsh": 100000, "verify": 1}
DEFAULT_CHSH_ANGLES = (0.0, 45.0, 22.5, 67.5)
MODEL_CHECK_SIGMAS = 4.0

MALUS_COLUMNS = ["theta_deg", "n_pp", "n_pm", "n_mp", "n_mm", "malus_plus_ref", "malus_minus_ref"]
COINCIDENCE_COLUMNS = [
    "theta_deg", "n_pp", "n_pm", "n_mp", "n_mm",
    "gamma", "gamma_ref", "gamma_sigma", "norm_pp", "norm_pp_ref",
]
CHSH_COLUMNS = ["a_deg", "b_deg", "theta_deg", "n_pp", "n_pm", "n_mp", "n_mm", "gamma", "gamma_sigma"]


class ConfigError(Exception):
    pass


def _field_line(text: str, message: str) -> int | None:
    """Line of the first occurrence of the field named in ``message``, if any."""
    match = re.search(r"field '([a-z_]+)", message)
    if match is None:
        return None
    pos = text.find(f'"{match.group(1)}"')
    return text.count("\n", 0, pos) + 1 if pos >= 0 else None


@dataclass
class RunSettings:
    experiment: str
    seed: int = 0
    grid: AngleGrid = field(default_factory=AngleGrid.default)
    count: int | None = None
    distribution: ArccosUniform | Gaussian = field(default_factory=ArccosUniform)
    criterion: Criterion = Criterion.DETERMINISTIC
    coupled: bool = True
    chsh_angles: tuple[float, float, float, float] = DEFAULT_CHSH_ANGLES
    output_dir: Path = Path("qpol-results")

    @property
    def count_per_angle(self) -> int:
        return self.count if self.count is not None else DEFAULT_COUNTS[self.experiment]

    def describe(self) -> dict:
        dist = {"type": "arccos_uniform"}
        if isinstance(self.distribution, Gaussian):
            dist = {"type": "gaussian", "sigma_rad": self.distribution.sigma}
        out = {"experiment": self.experiment, "seed": self.seed}
        if self.experiment != "chsh":
            out["angles_deg"] = list(self.grid.angles)
        out |= {
            "count_per_angle": self.count_per_angle,
            "distribution": dist,
            "criterion": self.criterion.value,
        }
        if self.experiment in ("coincidence", "chsh"):
            out["coupled"] = self.coupled
        if self.experiment == "chsh":
            out["chsh_angles_deg"] = list(self.chsh_angles)
        return out


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _parse_seed(value, where: str) -> int:
    if not _is_int(value) or not 0 <= value < 2**64:
        raise ConfigError(f"{where}: seed must be an integer in [0, 2**64), got {value!r}")
    return value


def _parse_grid(value, where: str) -> AngleGrid:
    try:
        if isinstance(value, list):
            if not all(_is_number(v) for v in value):
                raise ConfigError(f"{where}: field 'angles_deg': entries must be finite numbers")
            return AngleGrid(tuple(value))
        if isinstance(value, dict):
            extra = set(value) - {"start", "stop", "step"}
            missing = {"start", "stop", "step"} - set(value)
            if extra or missing:
                raise ConfigError(
                    f"{where}: field 'angles_deg': range needs exactly start, stop, step"
                    + (f"; unknown {sorted(extra)}" if extra else "")
                    + (f"; missing {sorted(missing)}" if missing else "")
                )
            if not all(_is_number(value[k]) for k in ("start", "stop", "step")):
                raise ConfigError(f"{where}: field 'angles_deg': start, stop, step must be finite numbers")
            return AngleGrid.from_range(value["start"], value["stop"], value["step"])
    except ValueError as exc:
        raise ConfigError(f"{where}: field 'angles_deg': {exc}") from None
    raise ConfigError(f"{where}: field 'angles_deg': expected a list or a {{start, stop, step}} object")


def _parse_distribution(value, where: str):
    if not isinstance(value, dict) or "type" not in value:
        raise ConfigError(f"{where}: field 'distribution': expected an object with a 'type' key")
    kind = value["type"]
    if kind == "arccos_uniform":
        if set(value) != {"type"}:
            raise ConfigError(f"{where}: field 'distribution': arccos_uniform takes no parameters")
        return ArccosUniform()
    if kind == "gaussian":
        extra = set(value) - {"type", "sigma_rad"}
        if extra:
            raise ConfigError(f"{where}: field 'distribution': unknown keys {sorted(extra)}")
        if "sigma_rad" not in value:
            return Gaussian()
        sigma = value["sigma_rad"]
        if not _is_number(sigma) or sigma <= 0:
            raise ConfigError(f"{where}: field 'distribution.sigma_rad': must be a positive number, got {sigma!r}")
        return Gaussian(float(sigma))
    raise ConfigError(f"{where}: field 'distribution.type': unknown distribution {kind!r}")


def parse_config(doc: dict, experiment: str, where: str = "config") -> RunSettings:
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: top level must be a JSON object")
    unknown = set(doc) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    if "experiment" in doc and doc["experiment"] != experiment:
        raise ConfigError(
            f"{where}: field 'experiment': config is for {doc['experiment']!r} but subcommand is {experiment!r}"
        )
    settings = RunSettings(experiment)
    if "seed" in doc:
        settings.seed = _parse_seed(doc["seed"], f"{where}: field 'seed'")
    if "angles_deg" in doc:
        settings.grid = _parse_grid(doc["angles_deg"], where)
    if "count_per_angle" in doc:
        count = doc["count_per_angle"]
        if not _is_int(count) or count < 1:
            raise ConfigError(f"{where}: field 'count_per_angle': must be a positive integer, got {count!r}")
        settings.count = count
    if "distribution" in doc:
        settings.distribution = _parse_distribution(doc["distribution"], where)
    if "criterion" in doc:
        try:
            settings.criterion = Criterion(doc["criterion"])
        except ValueError:
            raise ConfigError(
                f"{where}: field 'criterion': expected 'deterministic' or 'malus_probabilistic', got {doc['criterion']!r}"
            ) from None
    if "coupled" in doc:
        if experiment not in ("coincidence", "chsh"):
            raise ConfigError(f"{where}: field 'coupled': only valid for coincidence and chsh")
        if not isinstance(doc["coupled"], bool):
            raise ConfigError(f"{where}: field 'coupled': must be true or false")
        settings.coupled = doc["coupled"]
    if "chsh_angles_deg" in doc:
        if experiment != "chsh":
            raise ConfigError(f"{where}: field 'chsh_angles_deg': only valid for chsh")
        angles = doc["chsh_angles_deg"]
        if not (isinstance(angles, list) and len(angles) == 4 and all(_is_number(a) for a in angles)):
            raise ConfigError(f"{where}: field 'chsh_angles_deg': expected four numbers [a1, a2, b1, b2]")
        settings.chsh_angles = tuple(float(a) for a in angles)
    if "output_dir" in doc:
        if not isinstance(doc["output_dir"], str) or not doc["output_dir"]:
            raise ConfigError(f"{where}: field 'output_dir': must be a non-empty path string")
        settings.output_dir = Path(doc["output_dir"])
    return settings


def load_config(path: Path, experiment: str) -> RunSettings:
    text = path.read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    try:
        return parse_config(doc, experiment, str(path))
    except ConfigError as exc:
        line = _field_line(text, str(exc))
        if line is None:
            raise
        raise ConfigError(str(exc).replace(f"{path}:", f"{path}:{line}:", 1)) from None


def _parse_angles_flag(text: str) -> AngleGrid:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--angles: expected START:STOP:STEP, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
        return AngleGrid.from_range(start, stop, step)
    except ValueError as exc:
        raise ConfigError(f"--angles: {exc}") from None


def resolve_settings(args: argparse.Namespace, environ=os.environ) -> RunSettings:
    """Config file, then the seed environment variable, then command-line flags."""
    if args.config is not None:
        settings = load_config(Path(args.config), args.experiment)
    else:
        settings = RunSettings(args.experiment)
    env_seed = environ.get(SEED_ENV)
    if env_seed is not None and env_seed.strip():
        try:
            settings.seed = _parse_seed(int(env_seed), f"environment {SEED_ENV}")
        except ValueError:
            raise ConfigError(f"environment {SEED_ENV}: not an integer: {env_seed!r}") from None
    if args.seed is not None:
        settings.seed = _parse_seed(args.seed, "--seed")
    if args.count is not None:
        if args.count < 1:
            raise ConfigError(f"--count: must be a positive integer, got {args.count}")
        settings.count = args.count
    if args.angles is not None:
        settings.grid = _parse_angles_flag(args.angles)
    if args.output is not None:
        settings.output_dir = Path(args.output)
    if args.threads < 1:
        raise ConfigError(f"--threads: must be >= 1, got {args.threads}")
    return settings


def fmt(value) -> str:
    """Fixed CSV formatting: integers verbatim, floats to 9 significant digits."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return value
    out = f"{value:.9g}"
    return "0" if out == "-0" else out


def write_csv(path: Path, columns: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def write_json(path: Path, doc: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _model_fit(rows, settings: RunSettings, coupled):
    """Chi-square of n_pp against the model's own closed-form expectation."""
    n = settings.count_per_angle
    expected = [
        n * analysis.expected_cell_probabilities(r.theta, settings.distribution, settings.criterion, coupled)[0]
        for r in rows
    ]
    observed = [r.counts.n_pp for r in rows]
    if len(rows) < 2:
        return None, expected
    return analysis.chi_square_fit(observed, expected, variance_floor=1.0, n_trials=n), expected


def run_malus_command(settings: RunSettings, threads: int):
    config = MalusConfig(
        grid=settings.grid, photons_per_angle=settings.count_per_angle, master_seed=settings.seed,
        distribution=settings.distribution, criterion=settings.criterion,
    )
    rows = run_malus(config, threads=threads)
    table = [[r.theta, r.counts.n_pp, r.counts.n_pm, r.counts.n_mp, r.counts.n_mm,
              r.malus_plus_ref, r.malus_minus_ref] for r in rows]
    fit_pp, exp_pp = _model_fit(rows, settings, None)
    summary = {"config": settings.describe()}
    passed = True
    if fit_pp is not None:
        n = settings.count_per_angle
        # the (-,+) cell has the same expectation as (+,-)
        exp_mp = [n * analysis.expected_cell_probabilities(r.theta, settings.distribution, settings.criterion)[2]
                  for r in rows]
        fit_mp = analysis.chi_square_fit([r.counts.n_mp for r in rows], exp_mp, 1.0, n)
        summary["fit_pp"] = fit_pp.as_dict()
        summary["fit_mp"] = fit_mp.as_dict()
        passed = fit_pp.passed and fit_mp.passed
    summary["pass"] = passed
    lines = [f"{'theta':>7} {'n_pp':>7} {'n_pm':>7} {'n_mp':>7} {'n_mm':>7} {'N/2 cos^2':>10}"]
    lines += [f"{r.theta:7.2f} {r.counts.n_pp:7d} {r.counts.n_pm:7d} {r.counts.n_mp:7d} {r.counts.n_mm:7d} "
              f"{r.malus_plus_ref:10.1f}" for r in rows]
    if fit_pp is not None:
        lines.append(f"fit (+,+): reduced chi2 {fit_pp.reduced_chi_square:.3f}, "
                     f"max {fit_pp.max_abs_residual_sigmas:.2f} sigma -> {'PASS' if fit_pp.passed else 'FAIL'}")
        lines.append(f"fit (-,+): reduced chi2 {fit_mp.reduced_chi_square:.3f}, "
                     f"max {fit_mp.max_abs_residual_sigmas:.2f} sigma -> {'PASS' if fit_mp.passed else 'FAIL'}")
    return MALUS_COLUMNS, table, summary, lines, passed, rows


def run_coincidence_command(settings: RunSettings, threads: int):
    config = CoincidenceConfig(
        grid=settings.grid, pairs_per_angle=settings.count_per_angle, master_seed=settings.seed,
        distribution=settings.distribution, criterion=settings.criterion, coupled=settings.coupled,
    )
    rows = run_coincidence(config, threads=threads)
    table = [[r.theta, r.counts.n_pp, r.counts.n_pm, r.counts.n_mp, r.counts.n_mm,
              r.gamma, r.gamma_ref, r.gamma_sigma, r.normalized_pp, r.norm_pp_ref] for r in rows]
    dev_qm = [r.gamma - r.gamma_ref for r in rows]
    model = [analysis.expected_gamma(r.theta, settings.distribution, settings.criterion, settings.coupled)
             for r in rows]
    dev_model = [r.gamma - m for r, m in zip(rows, model)]
    fit, _ = _model_fit(rows, settings, settings.coupled)
    summary = {
        "config": settings.describe(),
        "gamma_vs_quantum": {
            "max_abs_dev": max(abs(d) for d in dev_qm),
            "rms_dev": math.sqrt(sum(d * d for d in dev_qm) / len(dev_qm)),
        },
        "gamma_vs_model": {
            "max_abs_dev": max(abs(d) for d in dev_model),
            "rms_dev": math.sqrt(sum(d * d for d in dev_model) / len(dev_model)),
        },
    }
    passed = True
    if fit is not None:
        summary["fit_pp"] = fit.as_dict()
        passed = fit.passed
    summary["pass"] = passed
    lines = [f"{'theta':>7} {'n_pp':>6} {'n_pm':>6} {'n_mp':>6} {'n_mm':>6} {'gamma':>8} {'cos2t':>8} {'2Npp/N':>8}"]
    lines += [f"{r.theta:7.2f} {r.counts.n_pp:6d} {r.counts.n_pm:6d} {r.counts.n_mp:6d} {r.counts.n_mm:6d} "
              f"{r.gamma:8.4f} {r.gamma_ref:8.4f} {r.normalized_pp:8.4f}" for r in rows]
    lines.append(f"gamma vs cos 2theta: max |dev| {summary['gamma_vs_quantum']['max_abs_dev']:.4f}, "
                 f"rms {summary['gamma_vs_quantum']['rms_dev']:.4f}")
    if fit is not None:
        lines.append(f"model fit n_pp: reduced chi2 {fit.reduced_chi_square:.3f} -> {'PASS' if fit.passed else 'FAIL'}")
    return COINCIDENCE_COLUMNS, table, summary, lines, passed, rows


def expected_chsh(settings: RunSettings) -> float:
    a1, a2, b1, b2 = settings.chsh_angles

    def e(a, b):
        return analysis.expected_gamma(abs(a - b), settings.distribution, settings.criterion, settings.coupled)

    return abs(e(a1, b1) - e(a1, b2)) + abs(e(a2, b1) + e(a2, b2))


def run_chsh_command(settings: RunSettings, threads: int):
    config = CoincidenceConfig(
        grid=settings.grid, pairs_per_angle=settings.count_per_angle, master_seed=settings.seed,
        distribution=settings.distribution, criterion=settings.criterion, coupled=settings.coupled,
    )
    result = chsh_run(config, *settings.chsh_angles, threads=threads)
    table = [[s.a, s.b, s.theta, s.counts.n_pp, s.counts.n_pm, s.counts.n_mp, s.counts.n_mm,
              s.correlation, s.sigma] for s in result.settings]
    expected = expected_chsh(settings)
    # settings with |E| = 1 have zero binomial spread; keep a one-count floor
    tolerance = MODEL_CHECK_SIGMAS * max(result.sigma, 1.0 / settings.count_per_angle)
    passed = abs(result.s_value - expected) <= tolerance
    summary = {
        "config": settings.describe(),
        "s_value": result.s_value,
        "s_sigma": result.sigma,
        "exceeds_bell_limit": result.exceeds_bell_limit,
        "significance_sigma": result.significance if math.isfinite(result.significance) else None,
        "model_expected_s": expected,
        "pass": passed,
    }
    lines = [f"{'a':>7} {'b':>7} {'E(a,b)':>9} {'sigma':>8}"]
    lines += [f"{s.a:7.2f} {s.b:7.2f} {s.correlation:9.4f} {s.sigma:8.4f}" for s in result.settings]
    lines.append(f"S = {result.s_value:.4f} +- {result.sigma:.4f} (model {expected:.4f}); "
                 f"Bell limit 2 {'exceeded' if result.exceeds_bell_limit else 'not exceeded'}")
    lines.append(f"model check: {'PASS' if passed else 'FAIL'}")
    return CHSH_COLUMNS, table, summary, lines, passed, None


def run_verify_command(settings: RunSettings, threads: int):
    checks = run_checks(settings.seed)
    table = [[c.name, bool(c.passed), c.detail] for c in checks]
    passed = all(c.passed for c in checks)
    summary = {
        "seed": settings.seed,
        "checks": [{"name": c.name, "pass": bool(c.passed), "detail": c.detail} for c in checks],
        "pass": passed,
    }
    lines = [f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.detail}" for c in checks]
    return ["check", "passed", "detail"], table, summary, lines, passed, None


COMMANDS = {
    "malus": run_malus_command,
    "coincidence": run_coincidence_command,
    "chsh": run_chsh_command,
    "verify": run_verify_command,
}


def write_figures(experiment: str, rows, out_dir: Path) -> list[Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    plt.rcParams["svg.hashsalt"] = "qpol"
    theta = np.array([r.theta for r in rows])
    fine = np.linspace(theta.min(), theta.max(), 200)
    rad = np.radians(fine)
    figures = []
    if experiment == "malus":
        n_half = rows[0].counts.total / 2.0
        fig, ax = plt.subplots()
        ax.plot(theta, [r.counts.n_pp for r in rows], "ko", label="(+,+)")
        ax.plot(theta, [r.counts.n_mp for r in rows], "ks", label="(-,+)")
        ax.plot(fine, n_half * np.cos(rad) ** 2, "k-", label="N cos^2")
        ax.plot(fine, n_half * np.sin(rad) ** 2, "k--", label="N sin^2")
        ax.set_ylabel("counts")
        figures.append(("fig2.svg", fig, ax))
    elif experiment == "coincidence":
        fig, ax = plt.subplots()
        ax.plot(theta, [r.normalized_pp for r in rows], "ko", label="2 N++/N")
        ax.plot(fine, np.cos(rad) ** 2, "k-", label="cos^2")
        ax.set_ylabel("2 N++ / N")
        figures.append(("fig3.svg", fig, ax))
        fig, ax = plt.subplots()
        ax.plot(theta, [r.gamma for r in rows], "ko", label="gamma")
        ax.plot(fine, np.cos(2 * rad), "k-", label="cos 2 theta")
        ax.set_ylabel("gamma")
        figures.append(("fig4.svg", fig, ax))
    paths = []
    for name, fig, ax in figures:
        ax.set_xlabel("relative angle (deg)")
        ax.legend()
        path = out_dir / name
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        paths.append(path)
    return paths


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qpol", description=__doc__.splitlines()[0])
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", metavar="FILE", help="JSON run configuration")
    parser.add_argument("--seed", type=int, help="master seed (overrides config and QPOL_SEED)")
    parser.add_argument("--count", type=int, help="photons or pairs per angle")
    parser.add_argument("--angles", metavar="START:STOP:STEP", help="inclusive angle grid in degrees")
    parser.add_argument("--threads", type=int, default=1, help="worker threads (wall time only)")
    parser.add_argument("--svg", action="store_true", help="also write figN.svg plots")
    parser.add_argument("--output", metavar="DIR", help="output directory")
    return parser


def run(argv=None, environ=os.environ, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        settings = resolve_settings(args, environ)
    except ConfigError as exc:
        print(f"qpol: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"qpol: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    if args.svg:
        try:
            import matplotlib  # noqa: F401
        except ImportError:
            print("qpol: configuration error: --svg needs matplotlib (pip install artifact[plot])", file=sys.stderr)
            return EXIT_CONFIG

    started = time.perf_counter()
    columns, table, summary, lines, passed, rows = COMMANDS[settings.experiment](settings, args.threads)
    elapsed = time.perf_counter() - started
    try:
        settings.output_dir.mkdir(parents=True, exist_ok=True)
        write_csv(settings.output_dir / "results.csv", columns, table)
        write_json(settings.output_dir / "summary.json", summary)
        figures = write_figures(settings.experiment, rows, settings.output_dir) if args.svg and rows else []
    except OSError as exc:
        print(f"qpol: cannot write results: {exc}", file=sys.stderr)
        return EXIT_IO

    scale = "" if settings.experiment == "verify" else f", {settings.count_per_angle} per angle"
    print(f"qpol {settings.experiment}: seed {settings.seed}{scale}, {elapsed:.2f} s", file=stdout)
    for line in lines:
        print(line, file=stdout)
    print(f"wrote {settings.output_dir / 'results.csv'} and summary.json"
          + "".join(f", {p.name}" for p in figures), file=stdout)
    print("PASS" if passed else "FAIL", file=stdout)
    return EXIT_OK if passed else EXIT_CHECK


def main() -> None:
    sys.exit(run())
