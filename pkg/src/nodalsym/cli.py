"""Command line interface: ``nodalsym <subcommand> [options]``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import experiments as ex
from . import geometry as geo
from .fem import write_matrix_market
from .oracles import bessel_deriv_zero
from .symmetry import principle_verdict

log = logging.getLogger("nodalsym")


def _common(p: argparse.ArgumentParser, *, h: float, k: int, refine: int = 0) -> None:
    p.add_argument("--h", type=float, default=h, help="target mesh size")
    p.add_argument("--k", type=int, default=k, help="number of eigenpairs")
    p.add_argument("--tol", type=float, default=1e-8, help="residual tolerance")
    p.add_argument("--seed", type=int, default=0, help="seed for the Lanczos start block")
    p.add_argument("--refine", type=int, default=refine, help="uniform refinements after meshing")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--no-figures", action="store_true", help="skip PNG output")


def _radii(p: argparse.ArgumentParser) -> None:
    p.add_argument("--r", type=float, nargs=3, default=(1.0, 2.0, 3.0),
                   metavar=("HUB", "INNER", "OUTER"), help="wheel radii")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nodalsym", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eig", help="eigenpairs, parities and nodal counts on one domain")
    p.add_argument("--domain", default="builtin:disk",
                   help="builtin:<name>, inline JSON, or a JSON file")
    p.add_argument("--mtx", action="store_true", help="also export K and M as MatrixMarket")
    _common(p, h=0.05, k=6)

    p = sub.add_parser("disk-table", help="disk modes against the Bessel oracle")
    p.add_argument("--radius", type=float, default=1.0)
    _common(p, h=0.02, k=6, refine=1)

    p = sub.add_parser("sweep", help="wheel second eigenvalue across passage widths")
    _radii(p)
    p.add_argument("--eps", type=float, nargs="+", default=list(ex.DEFAULT_EPS))
    p.add_argument("--workers", type=int, default=1)
    _common(p, h=0.04, k=6)

    p = sub.add_parser("census", help="principle verdicts on the builtin symmetric domains")
    p.add_argument("--domain", action="append", default=None,
                   help="restrict to these domains (repeatable; builtin names or JSON)")
    _common(p, h=0.04, k=6)

    p = sub.add_parser("step3", help="mixed eigenvalues of the half-wheel pieces")
    _radii(p)
    p.add_argument("--eps", type=float, nargs="+", default=[0.3, 0.2, 0.15, 0.1, 0.07, 0.05])
    _common(p, h=0.04, k=1)

    p = sub.add_parser("bessel-zeros", help="table of zeros of J_k'")
    p.add_argument("--kmax", type=int, default=5)
    p.add_argument("--mmax", type=int, default=3)
    p.add_argument("--out", type=Path, default=None, help="CSV file (default: stdout)")
    return parser


def _status(name: str, ok: bool) -> None:
    print(f"{'PASS' if ok else 'FAIL'}  {name}")


def cmd_eig(args) -> int:
    domain = geo.parse_domain(args.domain)
    solved = ex.solve_domain(domain, args.h, args.k, tol=args.tol, seed=args.seed,
                             refine=args.refine)
    rows, V = ex.mode_table(solved)
    ex.write_csv(args.out / "eigs.csv", rows)
    ex.write_mode_vtks(args.out, solved.mesh, V)
    verdicts = {"experiment": "eig", "domain": domain.to_dict(), "h": solved.mesh.h,
                "n_dof": solved.eigen.n_dof, "solver": solved.eigen.to_dict()}
    if solved.mesh.pairing is not None:
        try:
            rep = principle_verdict(solved.eigen, solved.M, solved.mesh.pairing, solved.rel_gap)
            verdicts["principle"] = {"verdict": str(rep.verdict), "even_dim": rep.even_dim,
                                     "odd_dim": rep.odd_dim, "indices": list(rep.indices)}
        except ValueError as exc:
            verdicts["principle"] = {"error": str(exc)}
    ex.write_json(args.out / "verdicts.json", verdicts)
    if args.mtx:
        write_matrix_market(args.out / "stiffness.mtx", solved.K, "P1 stiffness")
        write_matrix_market(args.out / "mass.mtx", solved.M, "P1 consistent mass")
    if not args.no_figures:
        from .plotting import plot_modes

        plot_modes(args.out / "modes.png", solved.mesh, V,
                   [f"#{r.eigen_index} {r.mu:.5g} {r.verdict}" for r in rows])
    for r in rows:
        print(f"{r.eigen_index:3d}  {r.mu:14.8f}  {r.verdict:5s}  nodal={r.nodal_count}"
              f"  res={r.residual:.1e}")
    if "principle" in verdicts:
        print("principle:", verdicts["principle"])
    return 0


def cmd_disk_table(args) -> int:
    table = ex.run_disk_table(args.radius, args.h, max(args.k, 6), refine=args.refine,
                              tol=args.tol, seed=args.seed, out=args.out)
    checks = {
        "mu2 within 1% of the Bessel value": table.rel_error(2) <= 0.01,
        "mu6 within 1.5% of the Bessel value": table.rel_error(6) <= 0.015,
        "parities odd, odd, even, even, even": table.parities() == ["Odd", "Odd", "Even",
                                                                    "Even", "Even"],
        "nodal counts 2, 2, 4, 4, 2": table.nodal_counts() == [2, 2, 4, 4, 2],
        "mu6 has an interior nodal domain": table.rows[5].interior_domains == 1,
    }
    ex.write_json(args.out / "verdicts.json", {"experiment": "disk-table", "checks": checks})
    if not args.no_figures:
        from .plotting import plot_modes

        plot_modes(args.out / "modes.png", table.solved.mesh, table.vectors,
                   [f"#{r.eigen_index} {r.mu:.4f} ({r.oracle_mu:.4f})" for r in table.rows])
    for r in table.rows:
        print(f"{r.eigen_index:3d}  fem={r.mu:10.6f}  exact={r.oracle_mu:10.6f}"
              f"  err={r.rel_error:.2e}  {r.verdict:5s}  nodal={r.nodal_count}")
    for name, ok in checks.items():
        _status(name, ok)
    return 0 if all(checks.values()) else 1


def cmd_sweep(args) -> int:
    r1, r2, r3 = args.r
    result = ex.run_epsilon_sweep(r1, r2, r3, args.eps, k=args.k, tol=args.tol, seed=args.seed,
                                  workers=args.workers, out=args.out)
    if not args.no_figures:
        from .plotting import plot_sweep

        plot_sweep(args.out / "sweep.png", result)
    for r in result.rows:
        print(f"eps={r.eps:<5g} mu2={r.mu2:.6f} bound={r.step1_bound:.6f} {r.verdict:5s}"
              f" right={r.nu_right:.6f} upper={r.nu_upper:.6f} {r.error}")
    print("transition eps:", result.eps_star)
    for name, ok in result.checks.items():
        _status(name, ok)
    return 0 if result.ok else 1


def cmd_census(args) -> int:
    domains = None
    if args.domain:
        domains = {}
        for spec in args.domain:
            name = spec if spec in geo.BUILTINS else None
            dom = geo.BUILTINS[spec] if name else geo.parse_domain(spec)
            domains[name or dom.variant] = dom
    rows = ex.run_principle_census(domains, args.h, k=args.k, tol=args.tol, seed=args.seed,
                                   out=args.out)
    if not args.no_figures:
        from .plotting import plot_census

        plot_census(args.out / "census.png", rows)
    for r in rows:
        print(f"{r.name:10s} mu2={r.mu2:.6f} split=({r.even_dim},{r.odd_dim}) {r.verdict}"
              f" nodal={r.nodal_count} {r.ring}")
        if r.expected:
            _status(f"{r.name} {r.expected}", r.ok)
    return 0 if all(r.ok for r in rows) else 1


def cmd_step3(args) -> int:
    r1, r2, r3 = args.r
    result = ex.step3_monotonicity(r1, r2, r3, args.eps, tol=args.tol, seed=args.seed,
                                   out=args.out)
    if not args.no_figures:
        from .plotting import plot_step3

        plot_step3(args.out / "step3.png", result)
    for r in sorted(result.rows, key=lambda r: -r.eps):
        print(f"eps={r.eps:<5g} passage={r.passage:.4f} right={r.nu_right:.5f}"
              f" (pieces {r.right_floor:.5f}) upper={r.nu_upper:.5f} (pieces {r.upper_floor:.5f})")
    for name, value in result.report.items():
        print(f"info  {name}: {value}")
    for name, ok in result.checks.items():
        _status(name, ok)
    return 0 if result.ok else 1


def cmd_bessel_zeros(args) -> int:
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["k", "m", "zero"])
        for k in range(args.kmax + 1):
            for m in range(1, args.mmax + 1):
                w.writerow([k, m, f"{bessel_deriv_zero(k, m):.12f}"])
    finally:
        if args.out:
            fh.close()
    return 0


COMMANDS = {"eig": cmd_eig, "disk-table": cmd_disk_table, "sweep": cmd_sweep,
            "census": cmd_census, "step3": cmd_step3, "bessel-zeros": cmd_bessel_zeros}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (geo.InvalidDomain, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
