#!/usr/bin/env python3
"""
acmcli - finite spectral triples and almost-commutative gauge theories from the command line
"""

import argparse
import logging
import math
import os
import sys
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table

from acmcli.core import (
    AcmError,
    ConfigError,
    FieldConfig,
    LagrangianOptions,
    LatticeSpec,
    Moments,
    Report,
    action_report,
    aj_basis,
    build_product,
    clifford,
    covariance_report,
    fluctuate,
    gauge_structure,
    one_form,
    phi_field,
    solve_moduli,
    spectral_action_trace,
    symmetrize_terms,
    verify_axioms,
    verify_cocycle,
    verify_connection_compat,
    verify_lift,
    verify_product_ko,
)
from acmcli.core.lattice import GAMMA_BASES
from acmcli.core.models import DEFAULT_TOL
from acmcli.core.serialization import (
    dumps,
    element_to_obj,
    encode_matrix,
    load_atlas,
    load_field_config,
    load_terms,
    load_triple,
)
from acmcli.core.triple import random_element, random_unitary_element

logger = logging.getLogger("acmcli")

ENV_PREFIX = "ACMCLI_"

# name -> (parser, built-in default)
SETTINGS: Dict[str, tuple] = {
    "tol": (float, DEFAULT_TOL),
    "format": (str, "text"),
    "seed": (int, 0),
    "f0": (float, 1.0),
    "f2": (float, 1.0),
    "f4": (float, 1.0),
    "lambda": (float, 1.0),
    "lattice": (str, "4x4x4x4"),
    "spacing": (float, 1.0),
    "gamma_basis": (str, "chiral"),
}

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


@dataclass
class RunConfig:
    """Resolved settings of one invocation (flag > environment > default)."""
    command: str
    tol: float
    format: str
    seed: int
    f0: float
    f2: float
    f4: float
    Lambda: float
    lattice: str
    spacing: float
    gamma_basis: str

    @property
    def moments(self) -> Moments:
        return Moments(f0=self.f0, f2=self.f2, f4=self.f4, Lambda=self.Lambda)


def load_environment() -> Dict[str, str]:
    """Load .env and return the ACMCLI_* overrides present in the environment.

    Returns:
        Dictionary keyed by setting name (e.g. 'tol', 'gamma_basis') with raw string values
    """
    load_dotenv()
    env = {}
    for name in SETTINGS:
        value = os.getenv(ENV_PREFIX + name.upper())
        if value is not None:
            env[name] = value
    return env


def resolve_settings(args: argparse.Namespace, env: Dict[str, str]) -> RunConfig:
    """Apply flag > environment > default precedence to every setting."""
    values: Dict[str, Any] = {}
    for name, (convert, default) in SETTINGS.items():
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
        elif name in env:
            try:
                values[name] = convert(env[name])
            except ValueError:
                raise ConfigError(f"{ENV_PREFIX}{name.upper()}={env[name]!r} is not a valid {convert.__name__}")
        else:
            values[name] = default
    if values["format"] not in ("text", "json"):
        raise ConfigError(f"format must be 'text' or 'json', got {values['format']!r}")
    if values["gamma_basis"] not in GAMMA_BASES:
        raise ConfigError(f"gamma basis must be one of {', '.join(GAMMA_BASES)}")
    if not values["tol"] > 0:
        raise ConfigError("tolerance must be positive")
    return RunConfig(
        command=args.command,
        tol=values["tol"],
        format=values["format"],
        seed=values["seed"],
        f0=values["f0"],
        f2=values["f2"],
        f4=values["f4"],
        Lambda=values["lambda"],
        lattice=values["lattice"],
        spacing=values["spacing"],
        gamma_basis=values["gamma_basis"],
    )


def setup_logging(verbose: bool) -> None:
    """Route library logging through rich on stderr."""
    handler = RichHandler(console=Console(stderr=True), show_path=False)
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[handler],
        force=True,
    )


def render_report(console: Console, report: Report) -> None:
    """Print a named-check report as a rich table."""
    table = Table(title=report.title)
    table.add_column("CHECK", style="cyan")
    table.add_column("RESIDUAL", justify="right")
    table.add_column("STATUS")
    for check in report.checks:
        status = "[green]pass[/green]" if check.passed else "[red]FAIL[/red]"
        table.add_row(check.name, f"{check.residual:.3e}", status)
    console.print(table)


def emit(
    run: RunConfig,
    console: Console,
    payload: Dict[str, Any],
    render_text: Callable[[], None],
) -> None:
    if run.format == "json":
        print(dumps(payload, run.command))
    else:
        render_text()


def cmd_check(args: argparse.Namespace, run: RunConfig, console: Console) -> bool:
    """Verify the axioms of a triple, optionally with seeded gauge-covariance samples."""
    t = load_triple(args.triple)
    report = verify_axioms(t, tol=run.tol)
    reports = [report]
    if args.samples:
        rng = np.random.default_rng(run.seed)
        covariance = Report(title="gauge covariance", details={"samples": args.samples, "seed": run.seed})
        worst: Dict[str, float] = {}
        for _ in range(args.samples):
            terms = symmetrize_terms([(random_element(t.dims, rng), random_element(t.dims, rng))])
            sample = covariance_report(t, one_form(t, terms), random_unitary_element(t.dims, rng), tol=run.tol)
            for check in sample.checks:
                worst[check.name] = max(worst.get(check.name, 0.0), check.residual)
        for name, residual in worst.items():
            covariance.add(name, residual, max(run.tol, 1e-9) if name == "spectrum" else run.tol)
        reports.append(covariance)
    ok = all(r.passed for r in reports)

    def text() -> None:
        for r in reports:
            render_report(console, r)
        style = "green" if ok else "red"
        console.print(f"{'✅' if ok else '❌'} KO-dimension {t.ko.n}, dim_H = {t.dim_h}", style=style)

    emit(run, console, {"passed": ok, "reports": [r.to_dict() for r in reports]}, text)
    return ok


def cmd_gauge_group(args: argparse.Namespace, run: RunConfig, console: Console) -> bool:
    t = load_triple(args.triple)
    structure = gauge_structure(t)
    basis = aj_basis(t, tol=run.tol)
    ok = structure.tau_rank == structure.gauge_lie_dim and structure.dim_aj == len(basis)
    payload = dict(structure.to_dict())
    payload["aj_basis"] = [element_to_obj(b) for b in basis]
    payload["passed"] = ok

    def text() -> None:
        table = Table(title="gauge group")
        table.add_column("QUANTITY", style="cyan")
        table.add_column("VALUE", justify="right")
        table.add_row("components", ", ".join("{" + ",".join(map(str, c)) + "}" for c in structure.components))
        table.add_row("dim u(A_F)", str(structure.dim_u_af))
        table.add_row("dim A_J", str(structure.dim_aj))
        table.add_row("dim gauge Lie algebra", str(structure.gauge_lie_dim))
        table.add_row("rank tau", str(structure.tau_rank))
        console.print(table)

    emit(run, console, payload, text)
    return ok


def cmd_dirac_moduli(args: argparse.Namespace, run: RunConfig, console: Console) -> bool:
    t = load_triple(args.triple)
    even = False if args.odd else None
    moduli = solve_moduli(t, even=even, tol=run.tol)
    ok = all(r <= run.tol for r in moduli.residuals)
    payload = {
        "real_dim": moduli.real_dim,
        "even": moduli.even,
        "basis": [encode_matrix(b) for b in moduli.basis],
        "residuals": list(moduli.residuals),
        "gap_ratio": None if math.isinf(moduli.gap_ratio) else moduli.gap_ratio,
        "passed": ok,
    }

    def text() -> None:
        gap = "inf" if math.isinf(moduli.gap_ratio) else f"{moduli.gap_ratio:.3e}"
        console.print(Panel(
            f"real_dim = {moduli.real_dim}\nsingular-value gap ratio = {gap}",
            title="Dirac moduli",
        ))
        for k, (b, r) in enumerate(zip(moduli.basis, moduli.residuals)):
            console.print(f"B_{k} (residual {r:.3e})", style="cyan")
            console.print(np.array2string(b, precision=4, suppress_small=True))

    emit(run, console, payload, text)
    return ok


def cmd_fluctuate(args: argparse.Namespace, run: RunConfig, console: Console) -> bool:
    t = load_triple(args.triple)
    terms = load_terms(args.terms, t.dims)
    a = one_form(t, terms)
    d_a = fluctuate(t, a, tol=run.tol)
    phi = phi_field(t, terms, tol=run.tol)
    payload = {
        "one_form": encode_matrix(a.matrix),
        "hermitian_residual": a.hermitian_residual,
        "D_A": encode_matrix(d_a),
        "Phi": encode_matrix(phi),
    }

    def text() -> None:
        console.print(Panel(f"Hermiticity residual of A = {a.hermitian_residual:.3e}", title="inner fluctuation"))
        console.print("D_A", style="cyan")
        console.print(np.array2string(d_a, precision=4, suppress_small=True))

    emit(run, console, payload, text)
    return True


def cmd_lagrangian(args: argparse.Namespace, run: RunConfig, console: Console) -> bool:
    t = load_triple(args.triple)
    cfg = load_field_config(args.fields)
    validity = cfg.validate(t, tol=run.tol)
    for check in validity.checks:
        if not check.passed:
            logger.warning("field config check %s fails (residual %.3e)", check.name, check.residual)
    options = LagrangianOptions(laplacian_sign=args.laplacian_sign)
    result = action_report(cfg, run.moments, fibre_rank=args.fibre_rank, options=options)
    if args.densities:
        columns = [result.densities[k].ravel() for k in ("gravity", "gauge", "higgs", "total")]
        table = np.column_stack([np.arange(cfg.lattice.n_sites)] + columns)
        np.savetxt(args.densities, table, delimiter=",", header="site,gravity,gauge,higgs,total",
                   comments="", fmt=["%d"] + ["%.17g"] * 4)
    payload = dict(result.to_dict())
    payload["field_checks"] = validity.to_dict()

    def text() -> None:
        table = Table(title=f"spectral action on {cfg.lattice}")
        table.add_column("TERM", style="cyan")
        table.add_column("VALUE", justify="right")
        for key, value in result.to_dict().items():
            table.add_row(key, f"{value:.12g}")
        console.print(table)

    emit(run, console, payload, text)
    return True


def cmd_spectrum(args: argparse.Namespace, run: RunConfig, console: Console) -> bool:
    t = load_triple(args.triple)
    if args.fields:
        cfg = load_field_config(args.fields)
        lattice = cfg.lattice
    else:
        lattice = LatticeSpec.parse(run.lattice, run.spacing)
        cfg = FieldConfig(lattice=lattice, dim_h=t.dim_h)
    product = build_product(lattice, clifford(lattice.d, run.gamma_basis), cfg, t)
    eigenvalues = product.spectrum()
    trace = spectral_action_trace(product, lambda x: np.exp(-x ** 2), run.Lambda)
    ok = True
    payload: Dict[str, Any] = {"dimension": product.dim, "trace_gaussian": trace}
    reports: List[Report] = []
    if args.check_ko:
        ko = verify_product_ko(product, t.ko, tol=run.tol)
        reports.append(ko)
        ok = ko.passed
        payload["ko"] = ko.to_dict()
    if args.eigenvalues:
        np.savetxt(args.eigenvalues, eigenvalues, fmt="%.17g")
    else:
        payload["eigenvalues"] = eigenvalues.tolist()

    def text() -> None:
        console.print(Panel(
            f"dimension = {product.dim}\nTr exp(-(D/Lambda)^2) = {trace:.12g}\n"
            f"spectral range = [{eigenvalues[0]:.6g}, {eigenvalues[-1]:.6g}]",
            title=f"product operator on {lattice}",
        ))
        for r in reports:
            render_report(console, r)

    emit(run, console, payload, text)
    return ok


def cmd_cech(args: argparse.Namespace, run: RunConfig, console: Console) -> bool:
    atlas, target = load_atlas(args.atlas)
    reports = [atlas.validate(run.tol), verify_cocycle(atlas, run.tol)]
    if atlas.connections:
        reports.append(verify_connection_compat(atlas, run.tol))
    if target is not None:
        if not args.triple:
            raise ConfigError("atlas has a target; pass --triple to verify the lift")
        reports.append(verify_lift(atlas, target, load_triple(args.triple), run.tol))
    ok = all(r.passed for r in reports)

    def text() -> None:
        for r in reports:
            render_report(console, r)

    emit(run, console, {"passed": ok, "reports": [r.to_dict() for r in reports]}, text)
    return ok


COMMANDS = {
    "check": cmd_check,
    "gauge-group": cmd_gauge_group,
    "dirac-moduli": cmd_dirac_moduli,
    "fluctuate": cmd_fluctuate,
    "lagrangian": cmd_lagrangian,
    "spectrum": cmd_spectrum,
    "cech": cmd_cech,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acmcli",
        description="Finite spectral triples and almost-commutative gauge theories",
    )
    parser.add_argument("--version", action="version", version=f"acmcli {__import__('acmcli').__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help="Absolute tolerance on matrix entries (default: 1e-10)")
    common.add_argument("--format", choices=["text", "json"], default=None, help="Output format (default: text)")
    common.add_argument("--seed", type=int, default=None, help="Seed for randomized checks (default: 0)")
    common.add_argument("--verbose", "-v", action="store_true", help="Debug logging on stderr")

    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("check", parents=[common], help="Verify the axioms of a finite triple")
    p.add_argument("triple", help="Triple file (JSON)")
    p.add_argument("--samples", type=int, default=0, help="Random gauge-covariance samples to run")

    p = sub.add_parser("gauge-group", parents=[common], help="Gauge group structure of a triple")
    p.add_argument("triple", help="Triple file (JSON)")

    p = sub.add_parser("dirac-moduli", parents=[common], help="Basis of admissible finite Dirac operators")
    p.add_argument("triple", help="Triple file (JSON)")
    p.add_argument("--odd", action="store_true", help="Drop the gamma-anticommutation constraint")

    p = sub.add_parser("fluctuate", parents=[common], help="Inner fluctuation D_A and Phi")
    p.add_argument("triple", help="Triple file (JSON)")
    p.add_argument("terms", help="One-form terms file")

    p = sub.add_parser("lagrangian", parents=[common], help="Spectral-action Lagrangian on lattice fields")
    p.add_argument("triple", help="Triple file (JSON)")
    p.add_argument("fields", help="Field-config file")
    p.add_argument("--f0", type=float, default=None, help="f(0) (default: 1)")
    p.add_argument("--f2", type=float, default=None, help="Second moment f_2 (default: 1)")
    p.add_argument("--f4", type=float, default=None, help="Fourth moment f_4 (default: 1)")
    p.add_argument("--lambda", dest="lambda", type=float, default=None, help="Cutoff scale (default: 1)")
    p.add_argument("--laplacian-sign", type=int, choices=[-1, 1], default=-1,
                   help="-1 for Delta = -sum d^2 (default), +1 for the analyst's sign")
    p.add_argument("--fibre-rank", type=int, default=None, help="Rank N of the gravity prefactor (default: dim_H)")
    p.add_argument("--densities", help="Write per-site densities as CSV to this file")

    p = sub.add_parser("spectrum", parents=[common], help="Spectrum of the lattice product Dirac operator")
    p.add_argument("triple", help="Triple file (JSON)")
    p.add_argument("fields", nargs="?", help="Field-config file (default: zero fields)")
    p.add_argument("--lattice", default=None, help="Site counts, e.g. 4x4x4x4 (default: 4x4x4x4)")
    p.add_argument("--spacing", type=float, default=None, help="Lattice spacing a (default: 1)")
    p.add_argument("--gamma-basis", dest="gamma_basis", default=None, help="Gamma-matrix basis (default: chiral)")
    p.add_argument("--lambda", dest="lambda", type=float, default=None, help="Cutoff scale (default: 1)")
    p.add_argument("--check-ko", action="store_true", help="Verify the KO signs of the product (d=4)")
    p.add_argument("--eigenvalues", help="Write sorted eigenvalues as CSV to this file")

    p = sub.add_parser("cech", parents=[common], help="Verify Čech data of a principal bundle")
    p.add_argument("atlas", help="Atlas file")
    p.add_argument("--triple", help="Triple file (needed for lift verification)")
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, dispatch the subcommand and return the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    setup_logging(args.verbose)
    console = Console()
    err = Console(stderr=True)
    try:
        settings = resolve_settings(args, load_environment())
        ok = COMMANDS[args.command](args, settings, console)
    except AcmError as exc:
        err.print(f"❌ {exc}", style="red", markup=False, highlight=False, soft_wrap=True)
        return EXIT_USAGE
    return EXIT_OK if ok else EXIT_FAIL


def main() -> None:
    """Main entry point for the acmcli command."""
    sys.exit(run())


if __name__ == "__main__":
    main()
