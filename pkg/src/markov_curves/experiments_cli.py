"""Scenario runner and I/O surface: config parsing, studies, CSV, CLI.

A configuration file is flat key=value text grouped under bracketed
section headers; each section is one scenario:

    [cusp_scan]
    study = markov_scan
    germ = cusp_2_3
    degrees = 2, 3, 4, 6, 8, 12
    epsilons = 0.5, 0.25, 0.125, 0.0625
    density = 120

Germs are built-in ids or paths to germ files (resolved relative to
the config).  Every scenario writes `<name>_raw.csv` and
`<name>_fit.csv` into the output directory; all floating values are
printed with 17 significant digits and rows are sorted, so a rerun
with the same config byte-reproduces the files.

Exit codes: 0 ok, 1 violation, 2 config error, 3 numeric failure.
`MARKOV_CURVES_THREADS` caps how many scenario cells run concurrently
(0 picks the machine's core count); results are collected in grid
order either way.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import math
import os
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .curve_model import (BUILTIN_GERM_IDS, DomainError, GermFormatError,
                          NumericError, builtin_germs, geodesic_distance,
                          load_germ, multiplicity, sample_real_trace)
from .extremal_green import (DEFAULT_FACETS, ProbeRuleError, TooFewPointsError,
                             green_interval, green_segment, hcp_fit, siciak_lp,
                             star_points)
from .lp import SimplexError
from .markov_lp import ConditioningError, TooFewSamplesError, scaling_study

CSV_HEADER = ("scenario", "study", "degree", "epsilon", "value",
              "fitted_exponent", "slack", "status")
STUDIES = ("markov_scan", "green_eval", "geodesic_fit", "hcp_fit",
           "verify_all")
STATUSES = ("ok", "violation", "excluded")

#: Default probe distances for HCP fits: 1e-4 .. 1e-1, log-spaced.
DEFAULT_DELTAS = tuple(np.logspace(-4.0, -1.0, 10))

_SECTION = re.compile(r"^\[([A-Za-z_][A-Za-z0-9_]*)\]$")
_NUMERIC_FAILURES = (NumericError, ConditioningError, TooFewSamplesError,
                     TooFewPointsError, SimplexError, ProbeRuleError,
                     DomainError, FloatingPointError)


class ConfigError(ValueError):
    """Configuration problem with its source position."""

    def __init__(self, message, line=0, column=0, source="<config>"):
        self.line = line
        self.column = column
        self.source = source
        super().__init__(f"{source}:{line}:{column}: {message}")


@dataclass(frozen=True)
class ReportRow:
    """One CSV line; optional fields render as empty cells."""

    scenario: str
    study: str
    degree: Optional[int] = None
    epsilon: Optional[float] = None
    value: Optional[float] = None
    fitted_exponent: Optional[float] = None
    slack: Optional[float] = None
    status: str = "ok"

    def __post_init__(self):
        if self.status not in STATUSES:
            raise DomainError(f"unknown row status '{self.status}'")


@dataclass(frozen=True)
class Scenario:
    """One configured study run."""

    name: str
    study: str
    germ_id: str = ""
    germ: object = None
    degrees: tuple = ()
    epsilons: tuple = ()
    density: int = 120
    deltas: tuple = DEFAULT_DELTAS
    grid: int = 8
    facets: int = DEFAULT_FACETS
    count: int = 50
    seed: Optional[int] = None


def _format_cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def _sort_key(row):
    return (row.scenario,
            row.degree is None, row.degree if row.degree is not None else 0,
            row.epsilon is None,
            row.epsilon if row.epsilon is not None else 0.0)


def emit_csv(rows, path):
    """Write rows sorted by (scenario, degree, epsilon), RFC-4180 style."""
    ordered = sorted(rows, key=_sort_key)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\r\n")
        writer.writerow(CSV_HEADER)
        for row in ordered:
            writer.writerow([row.scenario, row.study,
                             _format_cell(row.degree),
                             _format_cell(row.epsilon),
                             _format_cell(row.value),
                             _format_cell(row.fitted_exponent),
                             _format_cell(row.slack),
                             row.status])
    return path


def thread_count():
    """Resolve MARKOV_CURVES_THREADS; 0 or unset means one per core."""
    raw = os.environ.get("MARKOV_CURVES_THREADS", "0").strip()
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(
            f"MARKOV_CURVES_THREADS must be a nonnegative integer, "
            f"got '{raw}'", source="<environment>") from None
    if value < 0:
        raise ConfigError("MARKOV_CURVES_THREADS must be nonnegative",
                          source="<environment>")
    return value if value > 0 else (os.cpu_count() or 1)


@contextlib.contextmanager
def cell_mapper():
    """Ordered map over scenario cells, threaded when allowed."""
    workers = thread_count()
    if workers <= 1:
        yield map
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            yield executor.map


# ----------------------------------------------------------------------
# Configuration parsing


def _split_comment(line):
    cut = line.find("#")
    return line if cut < 0 else line[:cut]


def _parse_list(text, kind, key, line, source):
    items = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            items.append(kind(chunk))
        except ValueError:
            raise ConfigError(
                f"key '{key}' expects a comma-separated list of "
                f"{kind.__name__}s, got '{chunk}'", line,
                1 + len(text) - len(text.lstrip()), source) from None
    return tuple(items)


_KEY_KINDS = {
    "study": "str", "germ": "str",
    "degrees": "int_list", "epsilons": "float_list",
    "deltas": "float_list",
    "density": "int", "grid": "int", "facets": "int", "count": "int",
    "seed": "int",
}


def parse_config_text(text, source="<config>", base_dir="."):
    """Parse scenario sections; errors carry line and column."""
    sections = []
    current = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = _split_comment(raw).rstrip()
        if not line.strip():
            continue
        stripped = line.strip()
        column = 1 + len(line) - len(line.lstrip())
        match = _SECTION.match(stripped)
        if match:
            name = match.group(1)
            if any(name == existing["name"] for existing in sections):
                raise ConfigError(f"duplicate scenario '{name}'",
                                  number, column, source)
            current = {"name": name, "line": number, "keys": {}}
            sections.append(current)
            continue
        if stripped.startswith("["):
            raise ConfigError("malformed section header", number, column,
                              source)
        if "=" not in stripped:
            raise ConfigError("expected 'key = value'", number, column,
                              source)
        if current is None:
            raise ConfigError("key outside of any [scenario] section",
                              number, column, source)
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KEY_KINDS:
            raise ConfigError(
                f"unknown key '{key}' (valid: {', '.join(sorted(_KEY_KINDS))})",
                number, column, source)
        if key in current["keys"]:
            raise ConfigError(f"duplicate key '{key}'", number, column,
                              source)
        current["keys"][key] = (value, number, column)
    return [_build_scenario(section, source, base_dir)
            for section in sections]


def _lookup(keys, key, default=None):
    return keys.get(key, (default, 0, 0))


def _build_scenario(section, source, base_dir):
    keys = section["keys"]
    name = section["name"]
    study, study_line, study_col = _lookup(keys, "study")
    if study is None:
        raise ConfigError(f"scenario '{name}' is missing 'study'",
                          section["line"], 1, source)
    if study not in STUDIES:
        raise ConfigError(
            f"unknown study '{study}' (valid: {', '.join(STUDIES)})",
            study_line, study_col, source)
    parsed = {}
    for key, (value, line, column) in keys.items():
        kind = _KEY_KINDS[key]
        if kind == "int":
            try:
                parsed[key] = int(value)
            except ValueError:
                raise ConfigError(f"key '{key}' expects an integer, got "
                                  f"'{value}'", line, column, source) from None
        elif kind == "int_list":
            parsed[key] = _parse_list(value, int, key, line, source)
        elif kind == "float_list":
            parsed[key] = _parse_list(value, float, key, line, source)
        else:
            parsed[key] = value
    germ = None
    germ_id = parsed.get("germ", "")
    if study != "verify_all":
        if not germ_id:
            raise ConfigError(f"scenario '{name}' is missing 'germ'",
                              section["line"], 1, source)
        germ_line, germ_col = keys["germ"][1], keys["germ"][2]
        germ = _resolve_germ(germ_id, base_dir, germ_line, germ_col, source)
    if study in ("markov_scan", "green_eval"):
        if not parsed.get("degrees"):
            line, column = (keys["degrees"][1:] if "degrees" in keys
                            else (section["line"], 1))
            raise ConfigError(f"scenario '{name}' needs a nonempty degree "
                              "list", line, column, source)
        if not parsed.get("epsilons"):
            line, column = (keys["epsilons"][1:] if "epsilons" in keys
                            else (section["line"], 1))
            raise ConfigError(f"scenario '{name}' needs a nonempty epsilon "
                              "list", line, column, source)
    fields = {key: parsed[key] for key in
              ("degrees", "epsilons", "density", "deltas", "grid",
               "facets", "count", "seed") if key in parsed}
    return Scenario(name=name, study=study, germ_id=germ_id, germ=germ,
                    **fields)


def _resolve_germ(identifier, base_dir, line, column, source):
    if identifier in BUILTIN_GERM_IDS:
        return builtin_germs()[identifier]
    candidate = Path(base_dir) / identifier
    if identifier.endswith(".germ") or candidate.exists():
        try:
            return load_germ(candidate)
        except (OSError, GermFormatError) as exc:
            raise ConfigError(f"germ file '{identifier}': {exc}", line,
                              column, source) from None
    raise ConfigError(
        f"unknown germ id '{identifier}'; valid ids: "
        f"{', '.join(BUILTIN_GERM_IDS)} (or a path to a .germ file)",
        line, column, source)


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", source=str(path))
    return parse_config_text(text, source=str(path),
                             base_dir=str(path.parent))


# ----------------------------------------------------------------------
# Studies


def _markov_scan(scenario, mapper):
    study = scaling_study(scenario.germ, scenario.degrees, scenario.epsilons,
                          scenario.density, mapper)
    largest = max(scenario.epsilons)
    raw = [ReportRow(scenario.name, "markov_scan", degree, eps, factor,
                     status="excluded" if eps == largest else "ok")
           for degree, eps, factor in study.rows]
    fit = [ReportRow(scenario.name, "markov_scan", None, None,
                     value=study.fit.alpha_eps,
                     fitted_exponent=study.fit.alpha_deg,
                     slack=study.fit.residual_norm)]
    return raw, fit


#: Probe points for green_eval, in units of the star scale.
GREEN_PROBES = (2.0, 1.0 + 1.0j, -3.0)

#: A star value from the LP may sit below the closed form by at most
#: the facet slack; beyond this margin the row is a violation.
GREEN_TOLERANCE = 0.02


def _segment_form(angles, epsilon):
    """Closed-form evaluator when the star is one segment, else None."""
    if len(angles) == 1:
        end = epsilon * complex(math.cos(angles[0]), math.sin(angles[0]))
        return lambda z: green_segment(z, 0.0, end)
    if len(angles) == 2 and math.isclose(angles[1] - angles[0], math.pi,
                                         rel_tol=0.0, abs_tol=1e-12):
        end = epsilon * complex(math.cos(angles[0]), math.sin(angles[0]))
        return lambda z: green_segment(z, -end, end)
    return None


def _green_eval(scenario, mapper):
    angles = sorted(a % (2.0 * math.pi) for a in scenario.germ.ray_angles())
    raw = []
    for epsilon in scenario.epsilons:
        points = star_points(angles, epsilon, scenario.density)
        closed = _segment_form(angles, epsilon)
        cells = [(degree, probe) for degree in scenario.degrees
                 for probe in GREEN_PROBES]

        def solve(cell):
            degree, probe = cell
            return siciak_lp(points, probe * epsilon, degree,
                             scenario.facets)

        for (degree, probe), result in zip(cells, mapper(solve, cells)):
            slack = None
            status = "ok"
            if closed is not None:
                reference = closed(probe * epsilon)
                slack = result.value - reference
                if abs(slack) > GREEN_TOLERANCE + result.facet_slack:
                    status = "violation"
            raw.append(ReportRow(scenario.name, "green_eval", degree,
                                 epsilon, result.value, slack=slack,
                                 status=status))
    return raw, []


#: Geodesic probe radii 2^-3 .. 2^-10.
GEODESIC_EXPONENTS = tuple(range(3, 11))
GEODESIC_TOLERANCE = 0.05


def _geodesic_fit(scenario, mapper):
    branch = scenario.germ.branch
    order = multiplicity(branch)
    radii = [2.0 ** -m for m in GEODESIC_EXPONENTS]
    distances = list(mapper(
        lambda r: geodesic_distance(branch, 0.0, r), radii))
    raw = [ReportRow(scenario.name, "geodesic_fit", None, radius, distance)
           for radius, distance in zip(radii, distances)]
    design = np.column_stack([np.log(radii), np.ones(len(radii))])
    (slope, intercept), *_ = np.linalg.lstsq(design, np.log(distances),
                                             rcond=None)
    deviation = abs(float(slope) - order)
    fit = [ReportRow(scenario.name, "geodesic_fit", None, None,
                     value=float(math.exp(intercept)),
                     fitted_exponent=float(slope), slack=deviation,
                     status="ok" if deviation <= GEODESIC_TOLERANCE
                     else "violation")]
    return raw, fit


HCP_ENDPOINT_TOLERANCE = 0.03
HCP_INTERIOR_WINDOW = (0.9, 1.1)


def _hcp_probe(scenario):
    """Green evaluator, probe rule, and pass window for the germ."""
    germ = scenario.germ
    if germ.point_class == "regular_boundary":
        window = (0.5 - HCP_ENDPOINT_TOLERANCE, 0.5 + HCP_ENDPOINT_TOLERANCE)
        return green_interval, lambda d: 1.0 + d, window
    if germ.point_class == "regular_interior":
        return green_interval, lambda d: 1j * d, HCP_INTERIOR_WINDOW
    order = multiplicity(germ.branch)
    degree = max(scenario.degrees) if scenario.degrees else 8
    samples = sample_real_trace(germ, 0.25, scenario.density)

    def evaluator(point):
        return siciak_lp(samples, point, degree, scenario.facets).value

    def probe(delta):
        return germ.evaluate(1j * delta ** (1.0 / order))

    return evaluator, probe, None


def _hcp_fit(scenario, mapper):
    evaluator, probe, window = _hcp_probe(scenario)
    fit = hcp_fit(evaluator, scenario.germ_id or scenario.name,
                  scenario.deltas, probe)
    raw = [ReportRow(scenario.name, "hcp_fit", None, delta, value)
           for delta, value in zip(fit.deltas, fit.values)]
    status = "ok"
    if window is not None and not (window[0] <= fit.alpha <= window[1]):
        status = "violation"
    fit_rows = [ReportRow(scenario.name, "hcp_fit", None, None,
                          value=fit.constant, fitted_exponent=fit.alpha,
                          slack=fit.r_squared, status=status)]
    return raw, fit_rows


_STUDY_RUNNERS = {
    "markov_scan": _markov_scan,
    "green_eval": _green_eval,
    "geodesic_fit": _geodesic_fit,
    "hcp_fit": _hcp_fit,
}


def _run_verify_scenario(scenario, out_dir, seed, mapper):
    from .acceptance import run_all
    results = run_all(seed=0 if seed is None else seed, mapper=mapper)
    raw = [row for result in results for row in result.rows]
    emit_csv(raw, Path(out_dir) / f"{scenario.name}_raw.csv")
    emit_csv([], Path(out_dir) / f"{scenario.name}_fit.csv")
    failed = [result for result in results if not result.passed]
    for result in results:
        verdict = "ok" if result.passed else "FAIL"
        print(f"criterion {result.index:02d} {verdict}  {result.name}: "
              f"{result.detail}")
    return 1 if failed else 0


def run_scenario(config_path, out_dir=".", seed=None, study_filter=None):
    """Run every scenario in the config; returns the process exit code."""
    try:
        scenarios = load_config(config_path)
        if study_filter is not None:
            scenarios = [s for s in scenarios if s.study == study_filter]
            if not scenarios:
                raise ConfigError(
                    f"no scenario with study '{study_filter}' in config",
                    source=str(config_path))
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        exit_code = 0
        with cell_mapper() as mapper:
            for scenario in scenarios:
                if scenario.study == "verify_all":
                    code = _run_verify_scenario(scenario, out, seed, mapper)
                    exit_code = max(exit_code, code)
                    continue
                runner = _STUDY_RUNNERS[scenario.study]
                try:
                    raw, fit = runner(scenario, mapper)
                except _NUMERIC_FAILURES as exc:
                    print(f"numeric failure in scenario '{scenario.name}' "
                          f"({scenario.study}): {exc}", file=sys.stderr)
                    return 3
                emit_csv(raw, out / f"{scenario.name}_raw.csv")
                emit_csv(fit, out / f"{scenario.name}_fit.csv")
                if any(row.status == "violation" for row in raw + fit):
                    exit_code = max(exit_code, 1)
        return exit_code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


def _verify_command(out_dir, seed):
    try:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        started = time.perf_counter()
        with cell_mapper() as mapper:
            code = _run_verify_scenario(
                Scenario(name="verify", study="verify_all"), out, seed,
                mapper)
        elapsed = time.perf_counter() - started
        print(f"verify finished in {elapsed:.1f}s", file=sys.stderr)
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except _NUMERIC_FAILURES as exc:
        print(f"numeric failure in verify: {exc}", file=sys.stderr)
        return 3


def build_parser():
    parser = argparse.ArgumentParser(
        prog="markov-curves",
        description="Tangential Markov factors and extremal Green "
                    "functions on curve germs")
    subparsers = parser.add_subparsers(dest="command", required=True)
    studies = {
        "markov-scan": "markov_scan",
        "green-eval": "green_eval",
        "geodesic-fit": "geodesic_fit",
        "hcp-fit": "hcp_fit",
    }
    for command in studies:
        sub = subparsers.add_parser(
            command, help=f"run {studies[command]} scenarios from a config")
        sub.add_argument("--config", required=True,
                         help="path to a scenario config file")
        sub.add_argument("--out-dir", default=".",
                         help="directory for the CSV reports")
        sub.add_argument("--seed", type=int, default=None,
                         help="seed override for randomized suites")
    verify = subparsers.add_parser(
        "verify", help="run the built-in acceptance suite")
    verify.add_argument("--config", default=None,
                        help="accepted for symmetry; the suite is built in")
    verify.add_argument("--out-dir", default=".",
                        help="directory for the CSV reports")
    verify.add_argument("--seed", type=int, default=None,
                        help="seed override for randomized suites")
    subparsers.add_parser("list-germs", help="print the built-in germ ids")
    return parser


def main(argv=None):
    parser = build_parser()
    options = parser.parse_args(argv)
    if options.command == "list-germs":
        for identifier in BUILTIN_GERM_IDS:
            print(identifier)
        return 0
    if options.command == "verify":
        return _verify_command(options.out_dir, options.seed)
    study = options.command.replace("-", "_")
    return run_scenario(options.config, out_dir=options.out_dir,
                        seed=options.seed, study_filter=study)


if __name__ == "__main__":
    sys.exit(main())
