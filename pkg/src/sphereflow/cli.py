"""Scenario runner: parse a JSON config, dispatch one command, emit artifacts.

Exit codes: 0 for pass/converged, 2 when hypotheses are Inapplicable or a
certificate fails, 1 for hard errors (vacuum, non-convergence, bad config,
I/O).  Outputs are deterministic: rerunning an identical scenario yields
byte-identical files (fixed key order, no timestamps).
"""

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .comparison import (
    Dichotomy,
    hopf_indicator,
    straight_edge_nodes,
    strong_comparison_check,
    verify_weak_comparison,
)
from .ellipticity import certify_uniform_ellipticity
from .errors import (
    ConfigError,
    ExpressionDomainError,
    ExpressionParseError,
    NonConvergenceError,
    SphereflowError,
)
from .expressions import evaluate_expression
from .fieldio import (
    read_field_csv,
    read_mask_csv,
    write_field_csv,
    write_json_report,
    write_l2_csv,
    write_pgm,
    write_type_map_csv,
)
from .gas import GasModel
from .grid import SphericalGrid
from .operators import classify_field
from .solver import BVProblem, SolveOptions, manufactured_problem, solve_dirichlet

COMMANDS = ("classify", "solve", "compare", "certify", "hopf", "manufacture")


def _require(block, key, where):
    if key not in block:
        raise ConfigError(f"missing key '{where}.{key}'", key=f"{where}.{key}")
    return block[key]


def _build_gas(cfg) -> GasModel:
    block = _require(cfg, "gas", "scenario")
    gamma = _require(block, "gamma", "gas")
    try:
        return GasModel(
            gamma=float(gamma),
            rho0=float(block.get("rho0", 1.0)),
            bernoulli=float(block.get("bernoulli", 0.0)),
        )
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad gas block: {err}", key="gas") from err


def _build_grid(cfg, base_dir: Path) -> SphericalGrid:
    block = _require(cfg, "grid", "scenario")
    kwargs = {}
    for key in ("theta_min", "theta_max", "phi_min", "phi_max"):
        kwargs[key] = float(_require(block, key, "grid"))
    for key in ("n_theta", "n_phi"):
        kwargs[key] = int(_require(block, key, "grid"))
    kwargs["phi_periodic"] = bool(block.get("phi_periodic", False))
    if "sin_floor" in block:
        kwargs["sin_floor"] = float(block["sin_floor"])
    mask = None
    if "mask" in block:
        mask = read_mask_csv(base_dir / block["mask"], kwargs["n_theta"],
                             kwargs["n_phi"])
    return SphericalGrid(mask=mask, **kwargs)


def _field_from_spec(spec, grid, base_dir: Path, where: str):
    if isinstance(spec, str):
        return evaluate_expression(spec, grid)
    if isinstance(spec, dict) and "file" in spec:
        return read_field_csv(base_dir / spec["file"], grid)
    raise ConfigError(
        f"'{where}' must be an expression string or {{\"file\": <path>}}",
        key=where)


def _solve_options(block) -> SolveOptions:
    try:
        return SolveOptions(
            newton_tol=float(block.get("newton_tol", 1e-10)),
            max_newton=int(block.get("max_newton", 50)),
            max_damping=int(block.get("max_damping", 30)),
            lin_tol=float(block.get("lin_tol", 1e-12)),
            lin_max_iter=int(block.get("lin_max_iter", 5000)),
            cert_eps=float(block.get("cert_eps", 1e-8)),
        )
    except ValueError as err:
        raise ConfigError(f"bad solver option: {err}", key="command") from err


def _say(quiet, message):
    if not quiet:
        print(message)


def _cmd_classify(gas, grid, block, base, out, quiet):
    f = _field_from_spec(_require(block, "field", "command"), grid, base,
                         "command.field")
    eps_type = float(block.get("eps_type", 1e-8))
    tm = classify_field(gas, f, eps_type)
    write_type_map_csv(out / "type_map.csv", grid, tm.letters())
    write_l2_csv(out / "l2.csv", grid, tm.l2)
    if block.get("pgm", False):
        write_pgm(out / "l2.pgm", tm.l2)
    counts = tm.counts()
    write_json_report(out / "report.json", {
        "command": "classify",
        "eps_type": eps_type,
        "counts": counts,
    })
    _say(quiet, f"classified {grid.n_theta * grid.n_phi} nodes: {counts}")
    return 0


def _cmd_solve(gas, grid, block, base, out, quiet):
    boundary = _field_from_spec(_require(block, "boundary", "command"), grid,
                                base, "command.boundary")
    source = _field_from_spec(block.get("source", "0"), grid, base,
                              "command.source")
    opts = _solve_options(block)
    problem = BVProblem(gas=gas, grid=grid, boundary=boundary, source=source)
    phi, report = solve_dirichlet(problem, opts)
    write_field_csv(out / "solution.csv", phi)
    write_json_report(out / "report.json", report.to_dict())
    _say(quiet, f"converged in {report.iterations} Newton iterations, "
                f"residual {report.residual_history[-1]:.3e}")
    return 0


def _cmd_certify(gas, grid, block, base, out, quiet):
    f = _field_from_spec(_require(block, "field", "command"), grid, base,
                         "command.field")
    eps = float(block.get("eps", 1e-8))
    cert = certify_uniform_ellipticity(gas, f, eps)
    write_json_report(out / "report.json", cert.to_dict())
    _say(quiet, f"certificate {'pass' if cert.passed else 'fail'}: "
                f"eps_rho={cert.eps_rho:.4g} eps_L={cert.eps_L:.4g}")
    return 0 if cert.passed else 2


def _cmd_compare(gas, grid, block, base, out, quiet):
    f_minus = _field_from_spec(_require(block, "field_minus", "command"),
                               grid, base, "command.field_minus")
    f_plus = _field_from_spec(_require(block, "field_plus", "command"),
                              grid, base, "command.field_plus")
    report = verify_weak_comparison(
        gas, f_minus, f_plus,
        tol_sub=float(block.get("tol_sub", 1e-9)),
        tol_order=float(block.get("tol_order", 1e-8)),
        beta=float(block.get("beta", 0.5)),
        n_quad=int(block.get("n_quad", 8)),
    )
    if report.applicable and report.ordering_pass:
        strong_comparison_check(report, float(block.get("gap_tol", 1e-10)))
    write_json_report(out / "report.json", report.to_dict())
    _say(quiet, f"comparison verdict: {report.verdict}"
                + (f", dichotomy {report.dichotomy.value}"
                   if report.dichotomy else ""))
    ok = report.verdict == "Pass" and report.dichotomy is not Dichotomy.ANOMALOUS
    return 0 if ok else 2


def _cmd_hopf(gas, grid, block, base, out, quiet):
    f_minus = _field_from_spec(_require(block, "field_minus", "command"),
                               grid, base, "command.field_minus")
    f_plus = _field_from_spec(_require(block, "field_plus", "command"),
                              grid, base, "command.field_plus")
    tol_touch = float(block.get("tol_touch", 1e-9))
    report = verify_weak_comparison(
        gas, f_minus, f_plus,
        tol_sub=float(block.get("tol_sub", 1e-9)),
        tol_order=float(block.get("tol_order", 1e-8)),
    )
    if "nodes" in block:
        nodes = [(int(i), int(j)) for i, j in block["nodes"]]
    else:
        diff = f_minus.values - f_plus.values
        nodes = [(i, j) for i, j in straight_edge_nodes(grid)
                 if abs(diff[i, j]) <= tol_touch]
    if not nodes:
        raise ConfigError("no touching straight-edge boundary nodes found",
                          key="command.nodes")
    report.hopf = hopf_indicator(gas, f_minus, f_plus, nodes,
                                 tol_touch=tol_touch)
    write_json_report(out / "report.json", report.to_dict())
    positive = all(h.derivative > 0.0 for h in report.hopf)
    _say(quiet, f"hopf indicators at {len(report.hopf)} nodes, "
                f"min {min(h.derivative for h in report.hopf):.4g}")
    return 0 if (report.applicable and positive) else 2


def _cmd_manufacture(gas, grid, block, base, out, quiet):
    exact = _field_from_spec(_require(block, "exact", "command"), grid, base,
                             "command.exact")
    problem = manufactured_problem(gas, grid, exact)
    write_field_csv(out / "exact.csv", exact)
    write_field_csv(out / "source.csv", problem.source)
    write_field_csv(out / "boundary.csv", problem.boundary)
    write_json_report(out / "report.json", {
        "command": "manufacture",
        "admissible": True,
    })
    _say(quiet, "manufactured problem written (exact/source/boundary)")
    return 0


_HANDLERS = {
    "classify": _cmd_classify,
    "solve": _cmd_solve,
    "compare": _cmd_compare,
    "certify": _cmd_certify,
    "hopf": _cmd_hopf,
    "manufacture": _cmd_manufacture,
}


def run(scenario_path, out_dir, quiet: bool = False) -> int:
    """Execute one scenario config; returns the process exit code."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = Path(scenario_path)
    try:
        cfg = json.loads(path.read_text())
    except OSError as err:
        print(f"cannot read scenario: {err}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as err:
        print(f"config parse error at line {err.lineno}: {err.msg}",
              file=sys.stderr)
        return 1
    try:
        gas = _build_gas(cfg)
        grid = _build_grid(cfg, path.parent)
        block = _require(cfg, "command", "scenario")
        name = _require(block, "name", "command")
        if name not in COMMANDS:
            raise ConfigError(
                f"unknown command '{name}' (expected one of {COMMANDS})",
                key="command.name")
        return _HANDLERS[name](gas, grid, block, path.parent, out, quiet)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    except (ExpressionParseError, ExpressionDomainError) as err:
        print(f"expression error: {err}", file=sys.stderr)
        return 1
    except NonConvergenceError as err:
        if err.report is not None:
            payload = err.report.to_dict()
            payload["error"] = str(err)
            write_json_report(out / "report.json", payload)
        if err.field is not None:
            write_field_csv(out / "solution.csv", err.field)
        print(f"solver failed: {err}", file=sys.stderr)
        return 1
    except SphereflowError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sphereflow",
        description="Conical potential flow on the unit sphere: solve, "
                    "classify, certify ellipticity and check comparison "
                    "principles.",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)
    runp = sub.add_parser("run", help="run a scenario config")
    runp.add_argument("scenario", help="path to the scenario JSON")
    runp.add_argument("--out", required=True, help="output directory")
    runp.add_argument("--quiet", action="store_true",
                      help="suppress progress chatter")
    sub.add_parser("version", help="print the package version")
    args = parser.parse_args(argv)
    if args.cmd == "version":
        print(__version__)
        return 0
    return run(args.scenario, args.out, quiet=args.quiet)


if __name__ == "__main__":
    sys.exit(main())
