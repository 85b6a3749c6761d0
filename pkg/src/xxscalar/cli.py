"""Command-line front end.

Subcommands: simulate, tune, verify, basis, decompose. Reports are JSON with
sorted keys and shortest round-trip floats, so identical inputs give
byte-identical files. Exit codes: 0 ok, 1 validation failure, 2 a numeric
invariant failed.
"""

from __future__ import annotations

import argparse
import json
import math
import platform
import sys
from math import comb
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .circuits import (
    FORTY_NODE_ALPHAS,
    FORTY_NODE_PHIS,
    Circuit,
    compose,
    e_block,
    e_block_z,
    fit_six_block,
    uer1_circuit,
    uer2_circuit,
    uer12_circuit,
    verify_decomposition,
)
from .config import PRESETS, SOLVERS, RunConfig, load_config, validate
from .dynamics import ChainSpec
from .errors import ConfigError, InfeasibleConstraintsError, OptimizationError, XXScalarError
from .protocol import chain_spectrum, er_basis, is_density_matrix, run_protocol
from .tuner import (
    AngleSet,
    TunerResult,
    angle_order_to_basis,
    angles_from_column,
    basis_to_angle_order,
    column_from_angles,
    complete_to_unitary,
    constraint_matrix,
    default_time_grid,
    min_extended_receiver_size,
    solve_by_angles,
    solve_exact,
    sweep_time,
    target_ordinal,
    w2_block,
)

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2


class NumericFailure(Exception):
    pass


def _provenance() -> dict:
    return {
        "xxscalar": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dump_report(report: dict) -> str:
    return json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"


def _emit(report: dict, cfg: RunConfig, summary: list[str]):
    text = dump_report(report)
    if cfg.output:
        Path(cfg.output).write_text(text)
        for line in summary:
            print(line)
        print(f"report written to {cfg.output}")
    else:
        sys.stdout.write(text)


def _parse_sweep(s: str) -> tuple[float, float, float]:
    try:
        a, b, step = (float(x) for x in s.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--sweep expects A:B:STEP, got {s!r}") from None
    return a, b, step


def _parse_vector(s: str) -> list[float]:
    try:
        return [float(x) for x in s.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}") from None


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.preset:
        cfg.chain = {"preset": args.preset}
    if args.K is not None:
        cfg.chain = dict(cfg.chain, K=args.K)
    if args.t is not None:
        cfg.t, cfg.sweep = args.t, None
    if args.sweep is not None:
        cfg.sweep, cfg.t = args.sweep, None
    if args.solver:
        cfg.solver = args.solver
    if args.seed is not None:
        cfg.seed = args.seed
    if args.tolerance is not None:
        cfg.tolerance = args.tolerance
    if args.out:
        cfg.output = args.out
    if getattr(args, "v1", None) is not None:
        cfg.v1 = args.v1
    if getattr(args, "v2", None) is not None:
        cfg.v2 = args.v2
    validate(cfg)
    return cfg


def _tune(cfg: RunConfig, spec: ChainSpec, spectrum=None) -> tuple[TunerResult, dict]:
    """Exact and/or angle solve at the configured time (or the swept optimum)."""
    info: dict = {}
    if spec.layout.senders_only:
        t = 0.0 if cfg.t is None else cfg.t
        exact = solve_exact(constraint_matrix(spec, t), t=t)
    else:
        spectrum = chain_spectrum(spec) if spectrum is None else spectrum
        if cfg.t is not None:
            t = cfg.t
            exact = solve_exact(constraint_matrix(spec, t, spectrum), t=t)
        else:
            grid = cfg.time_grid()
            grid = default_time_grid(spec) if grid is None else grid
            t, table, exact = sweep_time(spec, grid, spectrum)
            info["s_table"] = {"t": table[:, 0], "s": table[:, 1]}
    M = constraint_matrix(spec, t, spectrum)
    info["constraint_rank"] = int(np.linalg.matrix_rank(M))
    exact.angles = angles_from_column(basis_to_angle_order(exact.column))
    if cfg.solver == "exact":
        return exact, info
    initial = cfg.angles if cfg.angles is not None else None
    angles = solve_by_angles(
        M, initial=initial, tolerance=cfg.tolerance, restarts=cfg.restarts, seed=cfg.seed, t=t
    )
    info["exact"] = exact.to_dict()
    info["angles"] = angles.to_dict()
    info["s_gap_exact_minus_angles"] = exact.s - angles.s
    if cfg.solver == "both" and abs(exact.s - angles.s) > 1e-6:
        raise NumericFailure(
            f"solvers disagree: exact s={exact.s!r}, angles s={angles.s!r}"
        )
    return (angles if cfg.solver == "angles" else exact), info


def _residual_checks(result: TunerResult, tol: float) -> dict:
    return {
        "max_offdiagonal_residual": result.max_offdiagonal(),
        "diagonal_spread": result.diagonal_spread(),
        "passed": result.max_offdiagonal() <= tol and result.diagonal_spread() <= tol,
    }


def cmd_tune(cfg: RunConfig) -> int:
    spec = cfg.build_chain()
    result, info = _tune(cfg, spec)
    checks = _residual_checks(result, cfg.tolerance)
    checks["s_bound"] = result.s <= 1 / math.sqrt(spec.K) + 1e-9
    report = {
        "command": "tune",
        "config": cfg.to_dict(),
        "provenance": _provenance(),
        "result": result.to_dict(),
        "diagnostics": info,
        "checks": checks,
    }
    _emit(
        report,
        cfg,
        [f"s = {result.s:.10f} at t = {result.t_opt:.6f} ({result.solver})",
         f"max off-diagonal residual {checks['max_offdiagonal_residual']:.3e}"],
    )
    return EXIT_OK if checks["passed"] and checks["s_bound"] else EXIT_NUMERIC


def cmd_simulate(cfg: RunConfig) -> int:
    if cfg.v1 is None or cfg.v2 is None:
        raise ConfigError("[vectors] v1 and v2 are required for simulate")
    spec = cfg.build_chain()
    spectrum = None if spec.layout.senders_only else chain_spectrum(spec)
    info: dict = {}
    if cfg.angles is not None:
        # replay an imported column; s is whatever the constraints give there
        t = 0.0 if cfg.t is None else cfg.t
        u = angle_order_to_basis(column_from_angles(cfg.angles))
        M = constraint_matrix(spec, t, spectrum)
        res = (M @ u).reshape(spec.K, spec.K)
        result = TunerResult(
            column=u, s=float(np.mean(np.diag(res)).real), residuals=res, t_opt=t,
            angles=cfg.angles, solver="imported",
        )
    else:
        result, info = _tune(cfg, spec, spectrum)
    u_er = complete_to_unitary(result.column, target_ordinal(spec), er_basis(spec.layout))
    rep = run_protocol(spec, cfg.v1, cfg.v2, result.t_opt, u_er, result.s, spectrum=spectrum)
    dot = float(np.dot(cfg.v1, cfg.v2))
    checks = {
        "density_valid": is_density_matrix(rep.rho_receiver),
        "intensity_matches_corner": abs(rep.intensity_I2 - abs(rep.corner) ** 2) <= 1e-12,
        **{k: v for k, v in _residual_checks(result, cfg.tolerance).items() if k != "passed"},
        "recovered_minus_exact_dot": rep.recovered_dot - dot,
    }
    checks["residuals_ok"] = (
        checks["max_offdiagonal_residual"] <= cfg.tolerance
        and checks["diagonal_spread"] <= cfg.tolerance
    )
    checks["dot_recovered"] = abs(rep.recovered_dot - dot) <= 1e-8
    passed = checks["density_valid"] and checks["intensity_matches_corner"]
    if result.solver != "imported":
        passed = passed and checks["residuals_ok"] and checks["dot_recovered"]
    checks["passed"] = passed
    report = {
        "command": "simulate",
        "config": cfg.to_dict(),
        "provenance": _provenance(),
        "receiver": rep.to_dict(),
        "tuner": result.to_dict(),
        "diagnostics": info,
        "exact_dot": dot,
        "checks": checks,
    }
    _emit(
        report,
        cfg,
        [f"corner = {rep.corner.real:.12g} {rep.corner.imag:+.3g}i, I2 = {rep.intensity_I2:.12g}",
         f"S = {rep.scale_S:.12g}, recovered v1.v2 = {rep.recovered_dot:.12g} (exact {dot:.12g})"],
    )
    return EXIT_OK if passed else EXIT_NUMERIC


def verification_suite(seed: int = 0) -> list[dict]:
    """Gate identities, oracle equivalence and scale-factor checks."""
    from . import oracle
    from .dynamics import paper_chain_spec, senders_only_spec
    from .protocol import encode_sender

    checks = []

    def add(name, error, tol):
        checks.append({"name": name, "max_error": float(error), "tolerance": tol,
                       "passed": bool(error <= tol)})

    w2 = w2_block()
    add("w2_gate_identity", verify_decomposition(uer1_circuit(), w2, 2, 1e-12).max_error, 1e-12)

    col = angle_order_to_basis(column_from_angles(AngleSet(FORTY_NODE_ALPHAS, FORTY_NODE_PHIS)))
    tgt = 3  # ER state 0110 in the four-site two-excitation block
    add("uer2_column", verify_decomposition(uer2_circuit(), col, 2, 1e-5, column=tgt).max_error, 1e-5)
    add("uer12_column",
        verify_decomposition(uer12_circuit(), w2[:, tgt], 2, 1e-12, column=tgt).max_error, 1e-12)
    add("identity_smoke",
        verify_decomposition(Circuit(4), np.eye(6), 2, 0.0).max_error, 0.0)

    rng = np.random.default_rng(seed)
    n_op = np.diag([bin(k).count("1") for k in range(4)])
    worst = 0.0
    for _ in range(20):
        a, b = rng.uniform(-np.pi, np.pi, 2)
        for m in (compose(e_block(0, 1, b)), compose(e_block_z(0, 1, a, b))):
            worst = max(worst, np.abs(m @ n_op - n_op @ m).max())
    add("e_block_commutation", worst, 1e-14)

    worst = 0.0
    for K in range(1, 6):
        worst = max(worst, abs(solve_exact(constraint_matrix(senders_only_spec(K), 0.0)).s - 1 / math.sqrt(K)))
    add("senders_only_scale", worst, 1e-10)

    worst = 0.0
    for trial in range(20):
        if trial % 2 == 0:
            K = int(rng.integers(1, 4))
            spec = senders_only_spec(K)
        else:
            spec = paper_chain_spec(1, int(rng.integers(2, 4)), rng.uniform(0.2, 1.0),
                                    tuple(rng.uniform(0.3, 1.2, 2)), rng.uniform(0.5, 1.5))
        K = spec.K
        t = 0.0 if spec.layout.senders_only else float(rng.uniform(0.5, 8.0))
        res = solve_exact(constraint_matrix(spec, t), t=t)
        u_er = complete_to_unitary(res.column, target_ordinal(spec), er_basis(spec.layout))
        v1 = rng.uniform(-1, 1, K) * 0.9 / math.sqrt(K)
        v2 = rng.uniform(-1, 1, K) * 0.9 / math.sqrt(K)
        rep = run_protocol(spec, v1, v2, t, u_er, max(res.s, 1e-300))
        p1, p2 = encode_sender(K, v1), encode_sender(K, v2)
        full_u = oracle.lift_sector_operator(u_er.matrix, u_er.basis.states, spec.layout.n_er)
        rho = oracle.receiver_density(spec.couplings, spec.layout, p1.site_amplitudes, p1.a0,
                                      p2.site_amplitudes, p2.a0, t, full_u)
        worst = max(worst, np.abs(rho - rep.rho_receiver).max())
    add("oracle_equivalence", worst, 1e-12)
    return checks


def cmd_verify(cfg: RunConfig) -> int:
    checks = verification_suite(cfg.seed)
    report = {"command": "verify", "config": cfg.to_dict(), "provenance": _provenance(),
              "checks": checks}
    summary = [f"{'PASS' if c['passed'] else 'FAIL'} {c['name']}: max error {c['max_error']:.3e} "
               f"(tol {c['tolerance']:g})" for c in checks]
    _emit(report, cfg, summary)
    if not cfg.output:
        for line in summary:
            print(line, file=sys.stderr)
    return EXIT_OK if all(c["passed"] for c in checks) else EXIT_NUMERIC


def cmd_basis(cfg: RunConfig) -> int:
    spec = cfg.build_chain()
    lay = spec.layout
    n, ner = lay.n_sites, lay.n_er
    report = {
        "command": "basis",
        "config": cfg.to_dict(),
        "chain_sectors": {str(k): comb(n, k) for k in range(min(2, n) + 1)},
        "chain_dimension": sum(comb(n, k) for k in range(min(2, n) + 1)),
        "er_sectors": {str(k): comb(ner, k) for k in range(3)},
        "P": comb(ner, 2),
        "min_extended_receiver_size": min_extended_receiver_size(lay.K),
        "subsystems": {
            name: [r.start, r.stop]
            for name, r in (("S1", lay.sender1), ("TL1", lay.line1), ("ER", lay.extended_receiver),
                            ("R", lay.receiver), ("TL2", lay.line2), ("S2", lay.sender2))
        },
    }
    _emit(report, cfg, [f"N = {n}: sectors {report['chain_sectors']}, total {report['chain_dimension']}",
                        f"ER of {ner} sites, P = {report['P']}"])
    return EXIT_OK


def cmd_decompose(cfg: RunConfig, from_report: str | None) -> int:
    spec = cfg.build_chain()
    if from_report:
        try:
            data = json.loads(Path(from_report).read_text())
            col = data["result"]["column"] if "result" in data else data["tuner"]["column"]
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read tuner column from {from_report}: {exc}") from exc
        column = np.array(col["real"]) + 1j * np.array(col["imag"])
        spec = ChainSpec.from_dict(data["config"]["chain_resolved"])
    else:
        result, _ = _tune(cfg, spec)
        column = result.column
    if spec.layout.n_er != 4:
        raise ConfigError("decompose supports four-qubit extended receivers (K1 = K2 = 2)")
    tol = cfg.tolerance
    circuit, check = fit_six_block(column, target_ordinal(spec), seed=cfg.seed,
                                   restarts=cfg.restarts, tolerance=tol)
    report = {
        "command": "decompose",
        "config": cfg.to_dict(),
        "provenance": _provenance(),
        "convention": "matrix product of gates in listed order equals (U_ER)^dagger; qubit 0 = first ER site",
        "gates": circuit.to_list(),
        "column": {"real": column.real, "imag": column.imag},
        "verification": check.to_dict(),
    }
    _emit(report, cfg, [f"{len(circuit.gates)} gates, column error {check.max_error:.3e}"])
    return EXIT_OK if check.passed else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML run configuration")
    common.add_argument("--preset", choices=PRESETS)
    common.add_argument("--K", type=int, help="sender size K (overrides the preset)")
    common.add_argument("--t", type=float, help="readout time")
    common.add_argument("--sweep", type=_parse_sweep, metavar="A:B:STEP")
    common.add_argument("--solver", choices=SOLVERS)
    common.add_argument("--seed", type=int)
    common.add_argument("--out", metavar="PATH")
    common.add_argument("--tolerance", type=float)

    p = argparse.ArgumentParser(prog="xxscalar", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", parents=[common], help="run the protocol for two vectors")
    sim.add_argument("--v1", type=_parse_vector)
    sim.add_argument("--v2", type=_parse_vector)
    sub.add_parser("tune", parents=[common], help="design U_ER and report s, t_opt")
    sub.add_parser("verify", parents=[common], help="run the gate-identity and oracle suite")
    sub.add_parser("basis", parents=[common], help="dump sector sizes")
    dec = sub.add_parser("decompose", parents=[common], help="gate list for a tuned column")
    dec.add_argument("--from-report", metavar="PATH", help="tune/simulate report to decompose")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "tune":
            return cmd_tune(cfg)
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "basis":
            return cmd_basis(cfg)
        return cmd_decompose(cfg, args.from_report)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except InfeasibleConstraintsError as exc:
        print(f"infeasible constraints: {exc} (rank {exc.rank}, conditions {exc.shape})",
              file=sys.stderr)
        return EXIT_NUMERIC
    except (NumericFailure, OptimizationError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except XXScalarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
