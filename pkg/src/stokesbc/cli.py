"""Batch driver: convergence studies and the boundary-flux counterexample.

Subcommands::

    stokesbc convergence --domain nonconvex --alpha -0.499 --levels 6 ...
    stokesbc counterexample

Exit codes: 0 success, 1 configuration/validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .assembly import (assemble_bordered_system, boundary_flux,
                       compute_delta_h)
from .boundary_data import (BoundaryDatum, build_corrector, datum_flux,
                            enforce_compatibility, interpolate_carstensen,
                            interpolate_lagrange, project_l2,
                            trace_of_solution)
from .errors import (ConvergenceRecord, eoc, expected_order,
                     h1_seminorm_velocity_error, l2_pressure_error,
                     l2_velocity_error)
from .fe_spaces import build_dofmap, pairing_from_name
from .manufactured import SingularSolution
from .mesh import build_domain, refine_uniform, unit_square
from .solver import SolveError, solve

__all__ = [
    "StudyConfig",
    "ConfigError",
    "run_convergence",
    "run_counterexample",
    "emit_table",
    "main",
]

DOMAIN_ANGLES = {"convex": 2 * np.pi / 3, "nonconvex": 3 * np.pi / 2}
PROJECTORS = {
    "l2": project_l2,
    "carstensen": interpolate_carstensen,
    "lagrange": interpolate_lagrange,
}


class ConfigError(ValueError):
    """Invalid study configuration."""


@dataclass(frozen=True)
class StudyConfig:
    """Configuration of one convergence study."""

    domain: str = "convex"
    alpha_sing: float = 0.5
    pairing: str = "taylor_hood"
    projector: str = "l2"
    compat: str = "off"
    levels: int = 6
    quad_degree: int = 10
    alpha_reg: float = 1.0
    output: str = "markdown"

    def validate(self) -> None:
        if self.domain not in DOMAIN_ANGLES:
            raise ConfigError(f"unknown domain {self.domain!r}")
        if not self.alpha_sing > -1.0:
            raise ConfigError("alpha must exceed -1")
        if self.pairing not in ("taylor_hood", "mini"):
            raise ConfigError(f"unknown element pairing {self.pairing!r}")
        if self.projector not in PROJECTORS:
            raise ConfigError(f"unknown projector {self.projector!r}")
        if self.compat not in ("off", "affine_field", "projected_normal"):
            raise ConfigError(f"unknown compat mode {self.compat!r}")
        if self.levels < 2:
            raise ConfigError("levels must be at least 2 (eoc needs two "
                              "meshes)")
        if not 1 <= self.quad_degree <= 20:
            raise ConfigError("quad-degree must lie in [1, 20]")
        if self.alpha_reg < 0:
            raise ConfigError("alpha-reg must be nonnegative")
        if self.output not in ("csv", "markdown"):
            raise ConfigError(f"unknown output format {self.output!r}")
        if self.projector == "lagrange" and self.alpha_sing <= 0:
            raise ConfigError("lagrange projector needs alpha > 0 (datum "
                              "must be continuous at the boundary nodes)")


def approximate_datum(config: StudyConfig, datum: BoundaryDatum, mesh,
                      dofmap):
    """Apply the configured projector and optional flux correction."""
    u_h = PROJECTORS[config.projector](datum, mesh, dofmap)
    if config.compat != "off":
        corrector = build_corrector(config.compat, mesh, dofmap)
        u_h = enforce_compatibility(u_h, corrector, mesh, dofmap)
    return u_h


def run_convergence(config: StudyConfig) -> list[ConvergenceRecord]:
    """Refinement loop: project datum, solve, measure errors, compute eoc."""
    config.validate()
    sol = SingularSolution(alpha=config.alpha_sing,
                           omega=DOMAIN_ANGLES[config.domain])
    pairing = pairing_from_name(config.pairing)
    mesh = build_domain(config.domain)
    datum = trace_of_solution(mesh.polygon, sol)
    with_h1 = config.alpha_sing > 0
    records: list[ConvergenceRecord] = []
    for level in range(1, config.levels + 1):
        mesh = refine_uniform(mesh)
        dofmap = build_dofmap(mesh, pairing)
        u_h = approximate_datum(config, datum, mesh, dofmap)
        system = assemble_bordered_system(mesh, dofmap, u_h,
                                          alpha_reg=config.alpha_reg)
        y_h, _report = solve(system)
        rec = ConvergenceRecord(
            level=level, h=mesh.h,
            n_dofs=2 * dofmap.n_scalar_velocity + dofmap.n_pressure + 1,
            err_l2_velocity=l2_velocity_error(
                y_h, sol, mesh, dofmap, quad_degree=config.quad_degree),
            delta_h=compute_delta_h(u_h, mesh, dofmap))
        if with_h1:
            rec.err_h1_velocity = h1_seminorm_velocity_error(
                y_h, sol, mesh, dofmap, quad_degree=config.quad_degree)
            rec.err_l2_pressure = l2_pressure_error(
                y_h, sol, mesh, dofmap, quad_degree=config.quad_degree)
        if records:
            prev = records[-1]
            rec.eoc_l2_velocity = eoc(prev.err_l2_velocity,
                                      rec.err_l2_velocity)
            if with_h1:
                rec.eoc_h1_velocity = eoc(prev.err_h1_velocity,
                                          rec.err_h1_velocity)
                rec.eoc_l2_pressure = eoc(prev.err_l2_pressure,
                                          rec.err_l2_pressure)
        records.append(rec)
    return records


@dataclass(frozen=True)
class CounterexampleReport:
    """Fluxes of the two projector variants on the square counterexample."""

    flux_exact: float
    flux_l2: float
    flux_carstensen: float
    tol: float = 1e-12

    @property
    def passed(self) -> bool:
        return (abs(self.flux_exact) <= self.tol
                and abs(self.flux_l2 - 3.0 / 16.0) <= self.tol
                and abs(self.flux_carstensen - 1.0 / 8.0) <= self.tol)

    def lines(self) -> list[str]:
        def verdict(ok):
            return "PASS" if ok else "FAIL"

        items = [
            ("exact datum      <u, n>", self.flux_exact, 0.0),
            ("L2 projection    <u_h, n>", self.flux_l2, 3.0 / 16.0),
            ("weighted average <u_h, n>", self.flux_carstensen, 1.0 / 8.0),
        ]
        out = []
        for label, value, target in items:
            ok = abs(value - target) <= self.tol
            out.append(f"{label} = {value:+.15f}  expected "
                       f"{Fraction(target).limit_denominator(32)}  "
                       f"{verdict(ok)}")
        return out


def counterexample_datum() -> BoundaryDatum:
    """Square datum (1, 0) on the right half of the top edge, zero elsewhere.

    Its exact flux vanishes, yet both trace approximations acquire nonzero
    flux: 3/16 for the L2 projection and 1/8 for the weighted average.
    """

    def evaluate(edge, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.zeros((len(s), 2))
        if edge == 2:  # top edge runs from (1,1) to (0,1); x1 = 1 - s
            out[:, 0] = (1.0 - s >= 0.5).astype(float)
        return out

    return BoundaryDatum(evaluate=evaluate, smoothness=0.49,
                         jumps=((2, 0.5),), singular_at_corner=False)


def run_counterexample() -> CounterexampleReport:
    """Reproduce the exact nonzero-flux values of both trace approximations."""
    mesh = unit_square()
    dofmap = build_dofmap(mesh, pairing_from_name("mini"))
    datum = counterexample_datum()
    u_l2 = project_l2(datum, mesh, dofmap)
    u_ca = interpolate_carstensen(datum, mesh, dofmap)
    return CounterexampleReport(
        flux_exact=datum_flux(datum, mesh),
        flux_l2=boundary_flux(u_l2.coefficients, mesh, dofmap),
        flux_carstensen=boundary_flux(u_ca.coefficients, mesh, dofmap))


def _fmt(value, digits=12) -> str:
    if value is None:
        return ""
    return f"{value:.{digits}e}" if isinstance(value, float) else str(value)


def emit_table(records: list[ConvergenceRecord], fmt: str,
               expected: float | None = None) -> str:
    """Render study records as CSV or a markdown table."""
    if not records:
        raise ValueError("no records to emit")
    if fmt == "csv":
        cols = ["level", "h", "n_dofs", "err_l2_velocity", "eoc_l2_velocity",
                "err_h1_velocity", "eoc_h1_velocity", "err_l2_pressure",
                "eoc_l2_pressure", "delta_h"]
        lines = [",".join(cols)]
        for r in records:
            lines.append(",".join(_fmt(getattr(r, c)) for c in cols))
        if expected is not None:
            tail = [""] * len(cols)
            tail[0] = "expected"
            tail[4] = f"{expected:.12e}"
            lines.append(",".join(tail))
        return "\n".join(lines) + "\n"
    if fmt != "markdown":
        raise ValueError(f"unknown table format {fmt!r}")
    with_h1 = any(r.err_h1_velocity is not None for r in records)
    head = ["h", "e_h (L2)", "eoc"]
    if with_h1:
        head += ["|grad e_h|", "eoc", "e_h (pressure)", "eoc"]
    lines = ["| " + " | ".join(head) + " |",
             "|" + "---|" * len(head)]
    for r in records:
        row = [f"{r.h:.6f}", f"{r.err_l2_velocity:.4e}",
               f"{r.eoc_l2_velocity:.4f}" if r.eoc_l2_velocity is not None
               else "-"]
        if with_h1:
            row += [f"{r.err_h1_velocity:.4e}",
                    f"{r.eoc_h1_velocity:.4f}"
                    if r.eoc_h1_velocity is not None else "-",
                    f"{r.err_l2_pressure:.4e}",
                    f"{r.eoc_l2_pressure:.4f}"
                    if r.eoc_l2_pressure is not None else "-"]
        lines.append("| " + " | ".join(row) + " |")
    if expected is not None:
        row = ["expected", "", f"{expected:.4f}"]
        if with_h1:
            row += [""] * 4
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


def _read_config_file(path: str) -> dict:
    """Plain key=value configuration file; blank lines and # comments allowed."""
    values = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stokesbc",
        description="Stokes convergence studies with trace-space boundary "
                    "data")
    sub = parser.add_subparsers(dest="command", required=True)
    conv = sub.add_parser("convergence", help="run a refinement study")
    conv.add_argument("--config", help="key=value config file (flags win)")
    conv.add_argument("--domain", choices=("convex", "nonconvex"))
    conv.add_argument("--alpha", type=float, dest="alpha_sing")
    conv.add_argument("--element", choices=("taylor_hood", "mini"),
                      dest="pairing")
    conv.add_argument("--projector", choices=("l2", "carstensen", "lagrange"))
    conv.add_argument("--compat",
                      choices=("off", "affine_field", "projected_normal"))
    conv.add_argument("--levels", type=int)
    conv.add_argument("--quad-degree", type=int, dest="quad_degree")
    conv.add_argument("--alpha-reg", type=float, dest="alpha_reg")
    conv.add_argument("--output", choices=("csv", "markdown"))
    conv.add_argument("--out", help="write the table to a file")
    ce = sub.add_parser("counterexample",
                        help="run the boundary-flux counterexample")
    ce.add_argument("--out", help="write the report to a file")
    return parser


def _config_from_args(args) -> StudyConfig:
    config = StudyConfig()
    if args.config:
        file_values = _read_config_file(args.config)
        fields = {f: type(getattr(config, f)) for f in config.__dataclass_fields__}
        unknown = set(file_values) - set(fields)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cast = {k: fields[k](v) for k, v in file_values.items()}
        config = replace(config, **cast)
    overrides = {k: v for k, v in vars(args).items()
                 if k in config.__dataclass_fields__ and v is not None}
    return replace(config, **overrides)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "counterexample":
            report = run_counterexample()
            text = "\n".join(report.lines()) + "\n"
        else:
            config = _config_from_args(args)
            records = run_convergence(config)
            k = 2 if config.pairing == "taylor_hood" else 1
            target = expected_order(config.alpha_sing,
                                    DOMAIN_ANGLES[config.domain], k)
            text = emit_table(records, config.output, expected=target)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SolveError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    out_path = getattr(args, "out", None)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    if args.command == "counterexample" and not report.passed:
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
