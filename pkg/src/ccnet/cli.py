"""Command-line harness: seeded sweeps, invariant verification, data emission.

Subcommands
-----------
lyapunov    spectrum estimates over an (r, M, z, seed) grid + mean-law check
xi-scaling  localization length versus strip width
dos         density-of-states moments, histogram, and KS test
det-check   determinant-identity residuals at random off-circle z
bands       trivial-phase band structure tables
decay       eigenvector decay-rate fits
verify      the exact-identity suite; nonzero exit on first violation
dump        sparse operator / phase-field export

Configuration can come from a flat ``key = value`` text file (``--config``);
explicit flags win.  z values are given as ``modulus,angle_over_pi`` pairs so
on-circle points are exact.  Numerical outputs are deterministic per
(config, seed); records go to CSV (fixed header) or JSON lines.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .model import (
    ModelParams,
    build_cylinder_operator,
    reduce_phases,
    sample_node_phases,
    sample_phase_field,
    scattering_matrix,
    extreme_block_check,
)
from .lyapunov import (
    CocycleRunConfig,
    localization_length,
    lyapunov_spectrum,
    thouless_rhs,
)
from .records import ResultRecord, canonical_row, emit
from .spectral import (
    band_grid,
    build_parity_operators,
    determinant_identity_residual,
    dos_moments,
    eigendecompose,
    eigenvector_decay_fit,
    krylov_rank,
)
from .transfer import (
    LayerPhases,
    cocycle_step,
    propagate,
    reconstruct_and_verify,
)

DEFAULT_R_GRID = [0.6, 0.66, math.sqrt(0.5), math.sqrt(1 - 0.66**2), 0.8]


def _default_workers() -> int:
    env = os.environ.get("CCNET_WORKERS")
    if env:
        return max(1, int(env))
    return 1


def _parse_floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip() != ""]


def _parse_ints(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip() != ""]


def _parse_z(text: str) -> list[tuple[float, float]]:
    """Parse 'mod,arg_over_pi' pairs separated by ';'."""
    pairs = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        parts = chunk.split(",")
        if len(parts) != 2:
            raise argparse.ArgumentTypeError(
                f"z must be 'modulus,angle_over_pi', got {chunk!r}"
            )
        pairs.append((float(parts[0]), float(parts[1])))
    return pairs


def _z_value(mod: float, arg_over_pi: float) -> complex:
    if arg_over_pi == 0.0:
        return complex(mod)
    return mod * np.exp(1j * math.pi * arg_over_pi)


def _load_config_file(path: str) -> dict:
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, val = stripped.partition("=")
            values[key.strip().replace("-", "_")] = val.strip()
    return values


def _params_from_r(parser: argparse.ArgumentParser, r: float) -> ModelParams:
    if not (0.0 < r < 1.0):
        parser.error(f"--r: cocycle commands need r strictly inside (0, 1), got {r}")
    return ModelParams.from_r(r)


def _parallel(fn, cells, workers: int):
    if workers <= 1 or len(cells) <= 1:
        return [fn(cell) for cell in cells]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, cells))


# ---------------------------------------------------------------------------
# lyapunov / xi-scaling


def _lyapunov_cell(cell):
    r, M, z_pair, seed, n_steps = cell
    params = ModelParams.from_r(r)
    z = _z_value(*z_pair)
    config = CocycleRunConfig(params=params, M=M, n_steps=n_steps, seed=seed, z=z)
    result = lyapunov_spectrum(config)
    return cell, result


def _lyapunov_rows(cell, result, check_mean=True):
    r, M, z_pair, seed, n_steps = cell
    params = result.config.params
    xi = localization_length(result)
    on_circle = abs(z_pair[0] - 1.0) < 1e-12
    failures = []
    if check_mean:
        target = thouless_rhs(_z_value(*z_pair), params)
        tol = max(0.01, 3.0 * result.mean_top_stderr())
        if abs(result.mean_top() - target) > tol:
            failures.append("mean-law")
    # the Lorentz pairing of exponents holds on the unit circle only
    if on_circle and np.any(
        result.symmetry_defects() > 3.0 * result.symmetry_sigmas() + 1e-12
    ):
        failures.append("symmetry")
    base = dict(
        command="lyapunov",
        r=params.r,
        t=params.t,
        M=M,
        z_mod=z_pair[0],
        z_arg_over_pi=z_pair[1],
        seed=seed,
        n_steps=n_steps,
    )
    # k = 0 summary row: the mean of the top M exponents (the Thouless check)
    rows = [
        canonical_row(
            **base,
            k=0,
            lambda_k=result.mean_top(),
            stderr_k=result.mean_top_stderr(),
            status="mean-top-M" if not failures else "mean-top-M;" + ";".join(failures),
        )
    ]
    for k in range(2 * M):
        status = "ok" if not failures else ";".join(failures)
        if k + 1 == M and xi.status != "ok":
            status = status + ";xi " + xi.status if status != "ok" else "xi " + xi.status
        rows.append(
            canonical_row(
                **base,
                k=k + 1,
                lambda_k=float(result.exponents[k]),
                stderr_k=float(result.stderrs[k]),
                xi_M=xi.value if k + 1 == M else None,
                status=status,
            )
        )
    return rows, failures


def cmd_lyapunov(args, parser) -> int:
    rs = args.r if args.r else DEFAULT_R_GRID
    for r in rs:
        _params_from_r(parser, r)
    cells = [
        (r, M, z, seed, args.steps)
        for r in rs
        for M in args.M
        for z in args.z
        for seed in args.seeds
    ]
    cells.sort()
    started = time.time()
    results = _parallel(_lyapunov_cell, cells, args.workers)
    all_rows, any_fail = [], False
    for cell, result in results:
        rows, failures = _lyapunov_rows(cell, result)
        all_rows.extend(rows)
        any_fail |= bool(failures)
    record = ResultRecord(
        command="lyapunov",
        config=_config_echo(args, r=rs, M=args.M, z=args.z, seeds=args.seeds, steps=args.steps),
        rows=all_rows,
        wall_clock_s=time.time() - started,
        version=__version__,
    )
    _write(args, [record])
    return 1 if any_fail else 0


def cmd_xi_scaling(args, parser) -> int:
    rs = args.r if args.r else DEFAULT_R_GRID
    for r in rs:
        _params_from_r(parser, r)
    cells = [
        (r, M, (1.0, 0.0), seed, args.steps)
        for r in rs
        for M in args.M
        for seed in args.seeds
    ]
    cells.sort()
    started = time.time()
    results = _parallel(_lyapunov_cell, cells, args.workers)
    rows = []
    for cell, result in results:
        r, M, z_pair, seed, n_steps = cell
        xi = localization_length(result)
        rows.append(
            canonical_row(
                command="xi-scaling",
                r=result.config.params.r,
                t=result.config.params.t,
                M=M,
                z_mod=1.0,
                z_arg_over_pi=0.0,
                seed=seed,
                n_steps=n_steps,
                k=M,
                lambda_k=float(result.exponents[M - 1]),
                stderr_k=float(result.stderrs[M - 1]),
                xi_M=xi.value,
                status="ok" if xi.status == "ok" else "xi " + xi.status,
            )
        )
    record = ResultRecord(
        command="xi-scaling",
        config=_config_echo(args, r=rs, M=args.M, seeds=args.seeds, steps=args.steps),
        rows=rows,
        wall_clock_s=time.time() - started,
        version=__version__,
    )
    _write(args, [record])
    return 0


# ---------------------------------------------------------------------------
# dos / det-check / bands / decay


def cmd_dos(args, parser) -> int:
    params = _params_from_r(parser, args.r[0] if args.r else DEFAULT_R_GRID[2])
    started = time.time()
    hist = dos_moments(params, args.M[0], args.L, args.seeds, K=args.moments, bins=args.bins)
    rows = []
    ok = True
    for k in range(args.moments):
        value = abs(hist.moments[k])
        passed = value <= args.moment_tol
        ok &= passed
        rows.append(
            canonical_row(
                command="dos",
                r=params.r,
                t=params.t,
                M=args.M[0],
                L=args.L,
                n_steps=hist.samples,
                k=k + 1,
                lambda_k=value,
                stderr_k=float(hist.moment_spread[k]),
                status="moment ok" if passed else "moment FAIL",
            )
        )
    ks_pass = hist.ks <= hist.ks_critical_1pct
    ok &= ks_pass
    rows.append(
        canonical_row(
            command="dos",
            r=params.r,
            t=params.t,
            M=args.M[0],
            L=args.L,
            n_steps=hist.samples,
            k=0,
            lambda_k=hist.ks,
            stderr_k=hist.ks_critical_1pct,
            status="ks ok" if ks_pass else "ks FAIL",
        )
    )
    record = ResultRecord(
        command="dos",
        config=_config_echo(
            args, r=[params.r], M=args.M, L=args.L, seeds=args.seeds, moments=args.moments
        ),
        rows=rows,
        wall_clock_s=time.time() - started,
        version=__version__,
    )
    _write(args, [record])
    if args.hist_out:
        with open(args.hist_out, "w") as fh:
            fh.write("bin_lo,bin_hi,count\n")
            for lo, hi, count in zip(hist.edges[:-1], hist.edges[1:], hist.counts):
                fh.write(f"{float(lo)!r},{float(hi)!r},{int(count)}\n")
    return 0 if ok else 1


def cmd_det_check(args, parser) -> int:
    params = _params_from_r(parser, args.r[0] if args.r else 0.6)
    M, L = args.M[0], args.L
    started = time.time()
    rows = []
    worst = 0.0
    trial = 0
    for seed in args.seeds:
        phases = sample_phase_field(seed, L, M)
        op = build_cylinder_operator(params, phases, L, M)
        spectrum = eigendecompose(op, want_vectors=False)
        zrng = np.random.default_rng(seed + 7_654_321)
        for _ in range(args.z_count):
            mod = 0.5 + 1.5 * zrng.random()
            arg = 2.0 * zrng.random() - 1.0
            check = determinant_identity_residual(
                _z_value(mod, arg), params, M, L, phases, spectrum=spectrum
            )
            trial += 1
            if check.status == "ok":
                worst = max(worst, check.rel_error)
            rows.append(
                canonical_row(
                    command="det-check",
                    r=params.r,
                    t=params.t,
                    M=M,
                    L=L,
                    z_mod=mod,
                    z_arg_over_pi=arg,
                    seed=seed,
                    k=trial,
                    lambda_k=check.rel_error,
                    status=check.status
                    if check.status != "ok"
                    else ("ok" if check.rel_error <= args.tol else "FAIL"),
                )
            )
    record = ResultRecord(
        command="det-check",
        config=_config_echo(
            args, r=[params.r], M=[M], L=L, seeds=args.seeds, z_count=args.z_count
        ),
        rows=rows,
        wall_clock_s=time.time() - started,
        version=__version__,
    )
    _write(args, [record])
    return 0 if worst <= args.tol else 1


def cmd_bands(args, parser) -> int:
    r = args.r[0] if args.r else DEFAULT_R_GRID[2]
    params = _params_from_r(parser, r)
    started = time.time()
    structure = band_grid(params, args.nx, args.ny)
    edge = structure.band_edge()
    expected = math.asin(min(1.0, 2.0 * params.rt))
    rows = [
        canonical_row(
            command="bands",
            r=params.r,
            t=params.t,
            k=0,
            lambda_k=structure.det_defect,
            status="det defect",
        ),
        canonical_row(
            command="bands",
            r=params.r,
            t=params.t,
            k=1,
            lambda_k=edge,
            stderr_k=abs(edge - expected),
            status="band edge (stderr column = |edge - arcsin(2rt)|)",
        ),
    ]
    record = ResultRecord(
        command="bands",
        config=_config_echo(args, r=[params.r], nx=args.nx, ny=args.ny),
        rows=rows,
        wall_clock_s=time.time() - started,
        version=__version__,
    )
    _write(args, [record])
    if args.table_out:
        with open(args.table_out, "w") as fh:
            fh.write("x,y,theta_lower,theta_upper\n")
            for i, x in enumerate(structure.xs):
                for j, y in enumerate(structure.ys):
                    lo, hi = structure.eigenphases[i, j]
                    fh.write(f"{float(x)!r},{float(y)!r},{float(lo)!r},{float(hi)!r}\n")
    return 0 if structure.det_defect <= 1e-12 else 1


def cmd_decay(args, parser) -> int:
    params = _params_from_r(parser, args.r[0] if args.r else 0.95)
    M, L = args.M[0], args.L
    started = time.time()
    rows = []
    for seed in args.seeds:
        phases = sample_phase_field(seed, L, M)
        op = build_cylinder_operator(params, phases, L, M)
        spectrum = eigendecompose(op, want_vectors=True)
        for index in range(0, spectrum.dim, max(1, spectrum.dim // args.max_fits)):
            fit = eigenvector_decay_fit(spectrum, index)
            rows.append(
                canonical_row(
                    command="decay",
                    r=params.r,
                    t=params.t,
                    M=M,
                    L=L,
                    seed=seed,
                    k=index,
                    lambda_k=fit.rate,
                    stderr_k=fit.r_squared,
                    status=fit.status,
                )
            )
    record = ResultRecord(
        command="decay",
        config=_config_echo(args, r=[params.r], M=[M], L=L, seeds=args.seeds),
        rows=rows,
        wall_clock_s=time.time() - started,
        version=__version__,
    )
    _write(args, [record])
    return 0


def cmd_dump(args, parser) -> int:
    params = _params_from_r(parser, args.r[0] if args.r else DEFAULT_R_GRID[2])
    M, L, seed = args.M[0], args.L, args.seeds[0]
    phases = sample_phase_field(seed, L, M)
    out = args.out or f"ccnet-{args.what}.csv"
    if args.what == "operator":
        op = build_cylinder_operator(params, phases, L, M)
        with open(out, "w") as fh:
            fh.write("row,col,re,im\n")
            for row, col, re, im in op.to_triplets():
                fh.write(f"{int(row)},{int(col)},{float(re)!r},{float(im)!r}\n")
    else:
        with open(out, "w") as fh:
            fh.write("column,ring,arg\n")
            for j, k, arg in phases.to_triples():
                fh.write(f"{int(j)},{int(k)},{float(arg)!r}\n")
    print(f"wrote {out}")
    return 0


# ---------------------------------------------------------------------------
# verify


def _verify_checks(quick: bool):
    """The exact-identity suite; yields (name, callable) pairs."""
    draw_u11 = 200 if quick else 1000
    draw_wall = 25 if quick else 100
    det_z = 4 if quick else 20
    det_seeds = [1] if quick else [1, 2, 3, 4, 5]
    recon_trials = 10 if quick else 100

    def scattering_check():
        rng = np.random.default_rng(0)
        worst_u, worst_d = 0.0, 0.0
        for _ in range(draw_u11 // 2):
            params = ModelParams.from_r(0.05 + 0.9 * rng.random())
            q = np.exp(2j * np.pi * rng.random(3))
            s = scattering_matrix(q, params)
            worst_u = max(worst_u, np.max(np.abs(s.conj().T @ s - np.eye(2))))
            worst_d = max(worst_d, abs(np.linalg.det(s) - q[0] ** 2))
        return max(worst_u, worst_d) <= 1e-14, f"max defect {max(worst_u, worst_d):.2e}"

    def u11_check():
        rng = np.random.default_rng(1)
        worst = 0.0
        bound_ok = True
        for _ in range(draw_u11):
            params = ModelParams.from_r(0.05 + 0.9 * rng.random())
            M = int(rng.integers(1, 5))
            z = np.exp(2j * np.pi * rng.random())
            step = cocycle_step(z, LayerPhases.random(rng, M), params)
            worst = max(worst, step.u11_defect() / max(1.0, step.norm() ** 2))
            bound = (1.0 / params.rt) * (1.0 + params.r) * (1.0 + params.t)
            bound_ok &= step.norm() <= bound * (1.0 + 1e-12)
        return (worst <= 1e-12 and bound_ok), f"max normalized defect {worst:.2e}"

    def pairing_check():
        rng = np.random.default_rng(2)
        params = ModelParams.from_r(0.62)
        phases = sample_phase_field(11, 3, 2)
        prop = propagate(np.exp(0.4j), phases, 3, params)
        logs = np.sort(np.log(prop.singular_values()))[::-1]
        defect = np.max(np.abs(logs + logs[::-1]))
        return defect <= 1e-8, f"log-sv pairing defect {defect:.2e}"

    def covariance_check():
        rng = np.random.default_rng(3)
        worst = 0.0
        for _ in range(40):
            params = ModelParams.from_r(0.1 + 0.8 * rng.random())
            M = int(rng.integers(1, 4))
            z = (0.5 + 1.5 * rng.random()) * np.exp(2j * np.pi * rng.random())
            w = np.exp(2j * np.pi * rng.random())
            layer = LayerPhases.random(rng, M)
            lhs = cocycle_step(w * z, layer, params).matrix
            rhs = cocycle_step(z, layer.twisted(w), params).matrix
            worst = max(worst, np.max(np.abs(lhs - rhs)))
        return worst <= 1e-12, f"max entrywise covariance defect {worst:.2e}"

    def wall_algebra_check():
        rng = np.random.default_rng(4)
        worst = 0.0
        for _ in range(draw_wall):
            z = (0.25 + 1.75 * rng.random()) * np.exp(2j * np.pi * rng.random())
            ops = build_parity_operators(z, int(rng.integers(1, 5)))
            worst = max(worst, ops.w_square_defect(), ops.v_inverse_defect())
        return worst <= 1e-12, f"max algebra defect {worst:.2e}"

    def unitarity_check():
        worst = 0.0
        for r in (0.0, 0.6, math.sqrt(0.5), 1.0):
            params = ModelParams.from_r(r)
            op = build_cylinder_operator(params, sample_phase_field(5, 2, 2), 2, 2)
            worst = max(worst, op.unitarity_defect())
        return worst <= 1e-12, f"max unitarity defect {worst:.2e}"

    def extreme_check():
        defect = 0.0
        for r in (0.0, 1.0):
            params = ModelParams.from_r(r)
            op = build_cylinder_operator(params, sample_phase_field(6, 2, 2), 2, 2)
            defect = max(defect, extreme_block_check(op))
        return defect == 0.0, f"block leakage {defect!r}"

    def det_identity_check():
        params = ModelParams.from_r(0.6)
        worst = 0.0
        for seed in det_seeds:
            phases = sample_phase_field(seed, 2, 2)
            op = build_cylinder_operator(params, phases, 2, 2)
            spectrum = eigendecompose(op, want_vectors=False)
            zrng = np.random.default_rng(seed + 13)
            done = 0
            while done < det_z:
                z = (0.5 + 1.5 * zrng.random()) * np.exp(2j * np.pi * zrng.random())
                check = determinant_identity_residual(
                    z, params, 2, 2, phases, spectrum=spectrum
                )
                if check.status != "ok":
                    continue
                worst = max(worst, check.rel_error)
                done += 1
        return worst <= 1e-8, f"max relative error {worst:.2e}"

    def reconstruction_check():
        params = ModelParams.from_r(0.6)
        rng = np.random.default_rng(5)
        worst = 0.0
        phases = sample_phase_field(17, 5, 3)
        for _ in range(recon_trials):
            psi0 = rng.standard_normal(6) + 1j * rng.standard_normal(6)
            z = np.exp(2j * np.pi * rng.random())
            worst = max(worst, reconstruct_and_verify(z, phases, psi0, 5, params))
        return worst <= 1e-10, f"max residual {worst:.2e}"

    def band_check():
        params = ModelParams.from_r(0.6)
        structure = band_grid(params, 64, 64)
        edge_err = abs(structure.band_edge() - math.asin(min(1.0, 2 * params.rt)))
        ok = structure.det_defect <= 1e-12 and edge_err <= 1e-9
        return ok, f"det defect {structure.det_defect:.2e}, edge error {edge_err:.2e}"

    def krylov_check():
        params = ModelParams.from_r(0.6)
        phases = sample_phase_field(23, 4, 2)
        for n in range(0, 3 if quick else 4):
            if krylov_rank(params, phases, n, 4) != 4 * (2 * n + 1):
                return False, f"rank mismatch at n={n}"
        return True, "ranks 2M(2n+1) exact"

    def thouless_check():
        params = ModelParams.from_r(0.6)
        worst = 0.0
        for z in (2.0, 0.5, 1.3 * np.exp(0.7j)):
            theta = np.linspace(0.0, 2.0 * np.pi, 1 << 15, endpoint=False)
            quadrature = float(np.mean(np.log(np.abs(z - np.exp(1j * theta)))))
            closed = math.log(max(1.0, abs(z)))
            predicted = 2 * quadrature + 0.5 * math.log(1 / params.rt) - math.log(abs(z))
            worst = max(
                worst,
                abs(quadrature - closed),
                abs(predicted - thouless_rhs(z, params)),
            )
        return worst <= 1e-9, f"max closed-form deviation {worst:.2e}"

    def reduction_check():
        from .model import NodePhaseField

        nodes = sample_node_phases(31, 1, 2)
        reduced = reduce_phases(nodes, 1, 2)
        trivial = NodePhaseField(M=2, nodes={key: np.ones(6, complex) for key in nodes.nodes})
        ones = np.max(np.abs(reduce_phases(trivial, 1, 2).values - 1.0)) <= 1e-14
        unit = np.max(np.abs(np.abs(reduced.values) - 1.0)) <= 1e-14
        return bool(ones and unit), "all-ones fixed point and unit moduli"

    checks = [
        ("scattering unitarity & det", scattering_check),
        ("U(1,1) membership & norm bound", u11_check),
        ("singular-value pairing", pairing_check),
        ("spectral-parameter covariance", covariance_check),
        ("wall-operator algebra", wall_algebra_check),
        ("finite-operator unitarity", unitarity_check),
        ("rt=0 block invariance", extreme_check),
        ("determinant identity", det_identity_check),
        ("transfer reconstruction", reconstruction_check),
        ("band symbol det & edges", band_check),
        ("cyclicity ranks", krylov_check),
        ("log-potential closed form", thouless_check),
        ("phase reduction", reduction_check),
    ]
    return checks


def cmd_verify(args, parser) -> int:
    failures = 0
    started = time.time()
    for name, check in _verify_checks(args.quick):
        try:
            ok, detail = check()
        except Exception as exc:  # surface, then keep going
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        failures += 0 if ok else 1
    print(f"verify: {failures} failure(s) in {time.time() - started:.1f}s")
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# plumbing


def _config_echo(args, **extra) -> dict:
    echo = {"format": args.format, "out": str(args.out) if args.out else None}
    echo.update({k: v for k, v in extra.items()})
    # tuples are not JSON round-trippable; normalize
    for key, val in echo.items():
        if isinstance(val, tuple):
            echo[key] = list(val)
        if isinstance(val, list):
            echo[key] = [list(v) if isinstance(v, tuple) else v for v in val]
    return echo


def _write(args, records) -> None:
    if args.out:
        emit(records, args.format, args.out)
        print(f"wrote {len(records)} record(s) to {args.out}")
    else:
        for record in records:
            for row in record.rows:
                print({k: v for k, v in row.items() if v is not None})


def _add_common(sub, with_model=True):
    sub.add_argument("--config", help="flat key=value config file; flags win")
    sub.add_argument("--out", help="output path (stdout summary if omitted)")
    sub.add_argument("--format", choices=["csv", "json"], default="csv")
    sub.add_argument("--workers", type=int, default=None, help="parallel cells (env CCNET_WORKERS)")
    if with_model:
        sub.add_argument("--r", type=_parse_floats, default=None, help="comma list of r values")
        sub.add_argument("--M", type=_parse_ints, default=[2], help="comma list of strip half-widths")
        sub.add_argument("--L", type=int, default=2, help="window half-length parameter")
        sub.add_argument(
            "--seeds",
            "--seed",
            type=_parse_ints,
            default=[1],
            help="comma list of seeds (non-empty)",
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccnet",
        description="Cylinder network-model laboratory: cocycles, Lyapunov spectra, spectral checks.",
    )
    parser.add_argument("--version", action="version", version=f"ccnet {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    ly = subs.add_parser("lyapunov", help="Lyapunov spectrum sweep + mean-law check")
    _add_common(ly)
    ly.add_argument("--steps", type=int, default=200_000)
    ly.add_argument("--z", type=_parse_z, default=[(1.0, 0.0)], help="mod,arg/pi pairs; ';'-separated")

    xi = subs.add_parser("xi-scaling", help="localization length vs strip width")
    _add_common(xi)
    xi.add_argument("--steps", type=int, default=200_000)

    dos = subs.add_parser("dos", help="density-of-states moments and histogram")
    _add_common(dos)
    dos.add_argument("--moments", type=int, default=8)
    dos.add_argument("--bins", type=int, default=64)
    dos.add_argument("--moment-tol", type=float, default=0.01)
    dos.add_argument("--hist-out", help="histogram CSV path")

    det = subs.add_parser("det-check", help="determinant identity residuals")
    _add_common(det)
    det.add_argument("--z-count", type=int, default=20)
    det.add_argument("--tol", type=float, default=1e-8)

    bands = subs.add_parser("bands", help="trivial-phase symbol eigenphases")
    _add_common(bands)
    bands.add_argument("--nx", type=int, default=64)
    bands.add_argument("--ny", type=int, default=64)
    bands.add_argument("--table-out", help="full (x, y, theta) table CSV path")

    decay = subs.add_parser("decay", help="eigenvector decay fits")
    _add_common(decay)
    decay.add_argument("--max-fits", type=int, default=64, help="subsample this many eigenvectors")

    verify = subs.add_parser("verify", help="exact-identity suite; exit 1 on violation")
    verify.add_argument("--quick", action="store_true", help="reduced draw counts, < 10 s")

    dump = subs.add_parser("dump", help="export operator triplets or phase triples")
    _add_common(dump)
    dump.add_argument("--what", choices=["operator", "phases"], default="operator")

    return parser


def _apply_config_file(parser, argv):
    """Pre-parse --config and install file values as subparser defaults."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        parser.error("--config needs a path")
    values = _load_config_file(argv[idx + 1])
    extra = []
    given = {tok.split("=")[0] for tok in argv if tok.startswith("--")}
    for key, val in values.items():
        flag = "--" + key.replace("_", "-")
        if flag in given or flag == "--config":
            continue
        if val.lower() in ("true", "1") and key in ("quick",):
            extra.append(flag)
        else:
            extra.extend([flag, val])
    # file values first: explicit flags appear later and win
    return extra + argv


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if argv and not argv[0].startswith("-"):
        argv = [argv[0]] + _apply_config_file(parser, argv[1:])
    args = parser.parse_args(argv)
    if getattr(args, "workers", None) is None:
        args.workers = _default_workers() if hasattr(args, "workers") else 1
    if hasattr(args, "seeds") and not args.seeds:
        parser.error("--seeds must be non-empty")
    if hasattr(args, "M"):
        for M in args.M:
            if M < 1:
                parser.error("--M entries must be >= 1")
    handlers = {
        "lyapunov": cmd_lyapunov,
        "xi-scaling": cmd_xi_scaling,
        "dos": cmd_dos,
        "det-check": cmd_det_check,
        "bands": cmd_bands,
        "decay": cmd_decay,
        "verify": cmd_verify,
        "dump": cmd_dump,
    }
    return handlers[args.command](args, parser)


if __name__ == "__main__":
    raise SystemExit(main())
