"""Command-line front end: `qpm spectrum | joint | design | verify`.

Each subcommand resolves a RunConfig (defaults < --config file < flags) and
runs a small node pipeline. Exit codes: 0 ok, 1 config error, 2 I/O error,
3 verification failure, 4 a computation that rejected its inputs.
"""

import argparse
import json
import logging
import sys
from typing import Any

from pydantic import ValidationError

from qpm import __version__
from qpm.config import Command, ConfigError, OutputFormat, RunConfig, load_config, resolve_config
from qpm.engine.executor import PipelineExecutor
from qpm.engine.registry import get_registry
from qpm.oracle import VerificationError

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_VERIFY, EXIT_COMPUTE = 0, 1, 2, 3, 4

DEFAULT_OUT = {
    Command.spectrum: "spectrum.csv",
    Command.joint: "joint.csv",
    Command.design: "design.json",
    Command.verify: "verify.json",
}

CSV_SCHEMA = {
    "spectrum": [("dk", "1/um"), ("x", "dimensionless, l*dk/2"), ("y", "Y_{M,N}"),
                 ("re_g", "chi0*um"), ("im_g", "chi0*um"), ("abs_g", "chi0*um")],
    "joint": [("x1", "dimensionless"), ("x2", "dimensionless"), ("h", "(MN)^2 Y(x1) Y(x2)")],
    "verify": [("dk", "1/um"),
               ("dev_closed_sum", "|closed - segment sum| / max(|segment sum|, null_floor L chi0)"),
               ("dev_sum_quad", "|segment sum - quadrature| / max(|segment sum|, null_floor L chi0)"),
               ("scaled_closed_sum", "|closed - segment sum| / (L chi0)"),
               ("scaled_sum_quad", "|segment sum - quadrature| / (L chi0)")],
}


# -- pipelines ---------------------------------------------------------------

def _execute(pipeline: dict[str, Any]) -> dict[str, Any]:
    """Run a pipeline, re-raising the first node failure."""
    failures: list[Exception] = []

    def on_error(node_id: str, exc: Exception) -> None:
        logger.debug("node %s failed", node_id)
        failures.append(exc)

    results = PipelineExecutor(get_registry()).run(
        pipeline,
        on_node_start=lambda node_id: logger.debug("running node %s", node_id),
        on_node_done=lambda node_id, out: logger.debug("node %s done: %s", node_id, sorted(out)),
        on_node_error=on_error,
    )
    if failures:
        raise failures[0]
    return results


def _out(config: RunConfig) -> tuple[str, OutputFormat]:
    out = config.output.out or DEFAULT_OUT[config.command]
    fmt = config.output.format or OutputFormat(out.rsplit(".", 1)[-1].lower())
    return out, fmt


def _structure(config: RunConfig) -> dict[str, Any]:
    return config.structure.model_dump()


def spectrum_pipeline(config: RunConfig) -> dict[str, Any]:
    out, fmt = _out(config)
    if fmt is OutputFormat.json:
        raise ConfigError("output.format: spectrum writes csv or svg; use --peaks for a JSON peak list")
    svg = config.output.svg or (out if fmt is OutputFormat.svg else None)
    section = config.spectrum.model_dump(exclude={"inset"})

    nodes = [{"id": "spectrum", "type": "spectrum", "config": {**section, "structure": _structure(config)}}]
    edges = []
    if fmt is OutputFormat.csv:
        nodes.append({"id": "export", "type": "export", "config": {"format": "csv", "output_path": out}})
        edges.append({"source": "spectrum", "target": "export"})
    if svg or config.output.peaks:
        nodes.append({"id": "peaks", "type": "peaks", "config": {}})
        edges.append({"source": "spectrum", "target": "peaks"})
    if config.output.peaks:
        nodes.append({"id": "export_peaks", "type": "export",
                      "config": {"format": "json", "output_path": config.output.peaks}})
        edges.append({"source": "peaks", "target": "export_peaks"})
    if svg:
        s = config.structure
        kind = "Y_N (uniform)" if config.spectrum.uniform else "Y_{M,N}"
        nodes.append({"id": "chart", "type": "chart", "config": {
            "chart_type": "line", "output_path": svg, "inset": config.spectrum.inset,
            "title": f"{kind}: l={s.l:g} um, N={s.n}, M={s.m}",
        }})
        edges += [{"source": "spectrum", "target": "chart"}, {"source": "peaks", "target": "chart"}]
    return {"nodes": nodes, "edges": edges}


def joint_pipeline(config: RunConfig) -> dict[str, Any]:
    out, fmt = _out(config)
    if fmt is OutputFormat.json:
        raise ConfigError("output.format: joint writes csv or svg; use --extrema for a JSON report")
    svg = config.output.svg or (out if fmt is OutputFormat.svg else None)
    section = config.joint.model_dump()

    nodes = [{"id": "joint", "type": "joint", "config": {**section, "structure": _structure(config)}}]
    edges = []
    if fmt is OutputFormat.csv:
        nodes.append({"id": "export", "type": "export", "config": {"format": "csv", "output_path": out}})
        edges.append({"source": "joint", "target": "export"})
    if config.output.extrema:
        nodes.append({"id": "export_extrema", "type": "export",
                      "config": {"format": "json", "output_path": config.output.extrema}})
        edges.append({"source": "joint", "target": "export_extrema"})
    if svg:
        s = config.structure
        nodes.append({"id": "chart", "type": "chart", "config": {
            "chart_type": "heatmap", "output_path": svg,
            "title": f"h(x1, x2): l={s.l:g} um, N={s.n}, M={s.m}",
        }})
        edges.append({"source": "joint", "target": "chart"})
    return {"nodes": nodes, "edges": edges}


def design_pipeline(config: RunConfig) -> dict[str, Any]:
    out, fmt = _out(config)
    if fmt is not OutputFormat.json:
        raise ConfigError("output.format: design writes json")
    return {
        "nodes": [
            {"id": "design", "type": "design", "config": config.design.model_dump()},
            {"id": "export", "type": "export", "config": {"format": "json", "output_path": out}},
            {"id": "table", "type": "table", "config": {"output_path": config.output.table}},
        ],
        "edges": [
            {"source": "design", "target": "export"},
            {"source": "design", "target": "table"},
        ],
    }


def verify_pipeline(config: RunConfig) -> dict[str, Any]:
    out, fmt = _out(config)
    if fmt is not OutputFormat.json:
        raise ConfigError("output.format: verify writes json; use --csv for per-sample deviations")
    section = config.verify.model_dump()
    nodes = [
        {"id": "verify", "type": "verify", "config": {**section, "structure": _structure(config)}},
        {"id": "export", "type": "export", "config": {"format": "json", "output_path": out}},
    ]
    edges = [{"source": "verify", "target": "export"}]
    if config.output.csv:
        nodes.append({"id": "export_csv", "type": "export",
                      "config": {"format": "csv", "output_path": config.output.csv}})
        edges.append({"source": "verify", "target": "export_csv"})
    return {"nodes": nodes, "edges": edges}


def run_spectrum(config: RunConfig) -> dict[str, Any]:
    return _execute(spectrum_pipeline(config))


def run_joint(config: RunConfig) -> dict[str, Any]:
    return _execute(joint_pipeline(config))


def run_design(config: RunConfig) -> dict[str, Any]:
    return _execute(design_pipeline(config))


def run_verify(config: RunConfig) -> dict[str, Any]:
    """Run the checks and write the report; raises VerificationError when any check fails."""
    results = _execute(verify_pipeline(config))
    summary = results["verify"]["summary"]
    if not summary.passed:
        offenders = [c.model_dump() for c in summary.offenders()]
        names = ", ".join(f"{c['name']} ({c['max_dev']:.3g} > {c['tolerance']:.3g})" for c in offenders)
        oracle = summary.oracle
        raise VerificationError(
            f"verification failed: {names}; scaled by L*chi0: closed/sum {oracle.max_scaled_dev_closed_vs_sum:.3g}, "
            f"sum/quad {oracle.max_scaled_dev_sum_vs_quad:.3g}",
            offenders,
        )
    return results


RUNNERS = {
    Command.spectrum: run_spectrum,
    Command.joint: run_joint,
    Command.design: run_design,
    Command.verify: run_verify,
}


# -- argument parsing --------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit 1)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _pair(cast):
    def parse(text: str):
        parts = text.split(":")
        if len(parts) != 2:
            raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}")
        try:
            return [cast(p) for p in parts]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc
    return parse


def _samples(text: str):
    return None if text == "auto" else int(text)


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="RunConfig JSON file; flags override its values")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    p.add_argument("-q", "--quiet", action="store_true", help="errors only")
    p.add_argument("--dump-config", action="store_true", help="print the effective config and exit")
    p.add_argument("--out", default=None, help="main output file")
    return p


def _structure_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--l", type=float, default=None, help="domain length, um")
    p.add_argument("--n", type=int, default=None, help="domains per block N")
    p.add_argument("--m", type=int, default=None, help="number of blocks M")
    p.add_argument("--chi0", type=float, default=None, help="susceptibility magnitude")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qpm", description="Phase-reversed QPM superlattice toolkit")
    parser.add_argument("--version", action="version", version=f"qpm {__version__}")
    parser.add_argument("--schema", action="store_true", help="print CSV columns/units and the config schema")
    sub = parser.add_subparsers(dest="command")
    common, structure = _common(), _structure_flags()

    p = sub.add_parser("spectrum", parents=[common, structure], help="1-D spectrum Y(x)")
    p.add_argument("--x-min", type=float, default=None)
    p.add_argument("--x-max", type=float, default=None)
    p.add_argument("--samples", type=_samples, default=argparse.SUPPRESS, help="count or 'auto'")
    p.add_argument("--uniform", action="store_true", default=None, help="single-block grating Y_N")
    p.add_argument("--inset", type=_pair(float), default=None, help="x0:x1 magnified in the SVG")
    p.add_argument("--svg", default=None)
    p.add_argument("--peaks", default=None, help="refined peak list, JSON")

    p = sub.add_parser("joint", parents=[common, structure], help="joint function h(x1, x2)")
    p.add_argument("--x1", type=_pair(float), default=None)
    p.add_argument("--x2", type=_pair(float), default=None)
    p.add_argument("--samples", type=int, default=None, help="samples per axis")
    p.add_argument("--svg", default=None)
    p.add_argument("--extrema", default=None, help="dominant extrema and spot check, JSON")

    p = sub.add_parser("design", parents=[common], help="double-phase-matching design search")
    p.add_argument("--scenario", default=None, help="preset: triplet or four_photon")
    p.add_argument("--dk1", type=float, default=None)
    p.add_argument("--dk2", type=float, default=None)
    p.add_argument("--l-range", type=_pair(float), default=None)
    p.add_argument("--n-range", type=_pair(int), default=None)
    p.add_argument("--m-range", type=_pair(int), default=None)
    p.add_argument("--max-results", type=int, default=None)
    p.add_argument("--side-orders", type=int, default=None)
    p.add_argument("--allow-odd", action="store_true", default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--min-height", type=float, default=None, help="skip maxima of |Y| below this")
    p.add_argument("--table", default=None, help="also write the text table here")

    p = sub.add_parser("verify", parents=[common, structure], help="cross-check all evaluators")
    p.add_argument("--dk-range", type=_pair(float), default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--pts", type=int, default=None, help="Gauss-Legendre points per segment")
    p.add_argument("--random-samples", type=int, default=None)
    p.add_argument("--fourier-order", type=int, default=None, help="0 skips the series check")
    p.add_argument("--perturb", type=float, default=None, help="relative error injected into the closed form")
    p.add_argument("--csv", default=None, help="per-sample deviations, CSV")
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    """Nested config overrides from the flags that were actually given."""
    given = {k: v for k, v in vars(args).items() if v is not None}
    command = Command(args.command)
    o: dict[str, Any] = {"command": command.value, "structure": {}, "output": {}}

    for flag in ("l", "n", "m", "chi0"):
        if flag in given:
            o["structure"][flag] = given[flag]
    for flag in ("out", "svg", "peaks", "extrema", "table", "csv"):
        if flag in given:
            o["output"][flag] = given[flag]
    if "out" in given:
        o["output"]["format"] = None

    if command is Command.spectrum:
        o["spectrum"] = {k: given[k] for k in ("x_min", "x_max", "uniform", "inset") if k in given}
        if "samples" in vars(args):
            o["spectrum"]["samples"] = args.samples
    elif command is Command.joint:
        o["joint"] = {k: given[k] for k in ("x1", "x2") if k in given}
        if "samples" in given:
            o["joint"]["samples"] = [given["samples"], given["samples"]]
    elif command is Command.design:
        o["design"] = {k: given[k] for k in ("scenario", "dk1", "dk2", "l_range", "n_range", "m_range",
                                             "max_results", "side_orders", "allow_odd", "workers", "min_height")
                       if k in given}
        if "dk1" in given and "scenario" not in given:
            o["design"]["scenario"] = None
    else:
        o["verify"] = {k: given[k] for k in ("dk_range", "samples", "random_samples", "perturb") if k in given}
        if "pts" in given:
            o["verify"]["pts_per_segment"] = given["pts"]
        if "fourier_order" in given:
            o["verify"]["fourier_order"] = given["fourier_order"] or None
    return o


def _setup_logging(args: argparse.Namespace) -> None:
    level = logging.WARNING
    if getattr(args, "verbose", False):
        level = logging.DEBUG
    elif getattr(args, "quiet", False):
        level = logging.ERROR
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", force=True)


def schema() -> dict[str, Any]:
    return {
        "csv": {name: [{"column": c, "unit": u} for c, u in cols] for name, cols in CSV_SCHEMA.items()},
        "run_config": RunConfig.model_json_schema(),
    }


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args)

    if args.schema:
        print(json.dumps(schema(), indent=2))
        return EXIT_OK
    if args.command is None:
        parser.error("a command is required")

    try:
        base = load_config(args.config) if args.config else None
        config = resolve_config(base, _overrides(args))
        if args.dump_config:
            print(config.model_dump_json(indent=2))
            return EXIT_OK
        results = RUNNERS[config.command](config)
    except VerificationError as exc:
        print(f"qpm: {exc}", file=sys.stderr)
        for offender in exc.offenders:
            print(f"  {offender['name']}: max deviation {offender['max_dev']:.3g} at dk={offender['worst_dk']}",
                  file=sys.stderr)
        return EXIT_VERIFY
    except OSError as exc:
        print(f"qpm: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValidationError, ConfigError) as exc:
        print(f"qpm: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"qpm: error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE

    if config.command is Command.design:
        print(results["table"]["text"], end="")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
