"""Finite-volume spectral computations for the cylinder operator U^D.

Eigen-decomposition of the finite unitary, density-of-states moments and
histograms, the wall-operator algebra (W_z, V_z, K) and the determinant
identity tying the propagator to the characteristic polynomial of U^D, the
trivial-phase band structure, eigenvector decay fits, and the cyclic-vector
rank check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import (
    FiniteOperator,
    ModelParams,
    PhaseField,
    build_cylinder_operator,
    sample_phase_field,
)
from .transfer import propagate

__all__ = [
    "SpectrumResult",
    "DOSHistogram",
    "ParityOperators",
    "BandStructure",
    "DecayFit",
    "DetIdentityCheck",
    "eigendecompose",
    "dos_moments",
    "build_parity_operators",
    "determinant_identity_residual",
    "band_symbol",
    "band_structure",
    "band_grid",
    "eigenvector_decay_fit",
    "krylov_rank",
    "ks_statistic",
]

DESK_SCALE_CAP = 4000  # largest dense eigenproblem attempted by default


class EigensolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpectrumResult:
    """Full spectrum of one finite operator, phases sorted on [0, 2pi)."""

    eigenphases: np.ndarray  # (N,), sorted ascending
    eigenvalues: np.ndarray  # (N,), aligned with eigenphases
    eigenvectors: np.ndarray | None = field(default=None, repr=False)  # (N, N) columns
    L: int = 0
    M: int = 1

    @property
    def dim(self) -> int:
        return self.eigenphases.size

    def modulus_defect(self) -> float:
        return float(np.max(np.abs(np.abs(self.eigenvalues) - 1.0)))


def eigendecompose(
    op: FiniteOperator, want_vectors: bool = True, max_dim: int = DESK_SCALE_CAP
) -> SpectrumResult:
    """Dense complex eigen-decomposition of U^D.

    Enforces the desk-scale cap, per-pair residuals below 1e-8, and unit
    eigenvalue moduli within 1e-8.
    """
    n = op.dim
    if n > max_dim:
        raise ValueError(f"operator dimension {n} exceeds desk-scale cap {max_dim}")
    dense = op.to_dense()
    try:
        if want_vectors:
            evals, evecs = np.linalg.eig(dense)
        else:
            evals, evecs = np.linalg.eigvals(dense), None
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"eigensolver failed to converge: {exc}") from exc
    if want_vectors:
        residuals = np.linalg.norm(dense @ evecs - evecs * evals[None, :], axis=0)
        worst = int(np.argmax(residuals))
        if residuals[worst] > 1e-8:
            raise EigensolverError(
                f"eigenpair {worst} residual {residuals[worst]:.3e} exceeds 1e-8"
            )
    moduli = np.abs(evals)
    worst = int(np.argmax(np.abs(moduli - 1.0)))
    if abs(moduli[worst] - 1.0) > 1e-8:
        raise EigensolverError(
            f"eigenvalue {worst} modulus {moduli[worst]!r} off the unit circle beyond 1e-8"
        )
    phases = np.mod(np.angle(evals), 2.0 * np.pi)
    order = np.argsort(phases)
    return SpectrumResult(
        eigenphases=phases[order],
        eigenvalues=evals[order],
        eigenvectors=evecs[:, order] if want_vectors else None,
        L=op.L,
        M=op.M,
    )


def ks_statistic(phases: np.ndarray) -> float:
    """Kolmogorov-Smirnov distance of eigenphases from the uniform law on [0, 2pi)."""
    x = np.sort(np.asarray(phases)) / (2.0 * np.pi)
    n = x.size
    grid = np.arange(1, n + 1) / n
    return float(max(np.max(grid - x), np.max(x - (grid - 1.0 / n))))


@dataclass(frozen=True)
class DOSHistogram:
    """Pooled eigenphase statistics across disorder realizations."""

    edges: np.ndarray  # (bins+1,) on [0, 2pi)
    counts: np.ndarray  # (bins,)
    samples: int  # number of realizations pooled
    dim: int  # matrix dimension per realization
    moments: np.ndarray  # (K,), seed-averaged (1/N) tr (U^D)^k for k = 1..K
    moment_spread: np.ndarray  # (K,), std error of the seed average (abs)
    ks: float

    @property
    def ks_critical_1pct(self) -> float:
        # 1% asymptotic Kolmogorov critical value for n pooled draws
        return 1.63 / math.sqrt(self.dim * self.samples)


def dos_moments(
    params: ModelParams,
    M: int,
    L: int,
    seeds,
    K: int = 8,
    bins: int = 64,
) -> DOSHistogram:
    """Average trace moments (1/N) tr (U^D)^k and pool an eigenphase histogram.

    The disorder average of every positive moment vanishes identically (each
    path picks up at least one un-conjugated uniform phase), so the density
    of states flattens onto the circle; the tolerance of the check is purely
    Monte-Carlo.
    """
    if K < 1:
        raise ValueError("need K >= 1")
    seeds = list(seeds)
    if not seeds:
        raise ValueError("need at least one seed")
    edges = np.linspace(0.0, 2.0 * np.pi, bins + 1)
    counts = np.zeros(bins, dtype=np.int64)
    moment_rows = np.zeros((len(seeds), K), dtype=complex)
    pooled = []
    dim = 2 * M * (4 * L + 1)
    for row, seed in enumerate(seeds):
        op = build_cylinder_operator(params, sample_phase_field(seed, L, M), L, M)
        spec = eigendecompose(op, want_vectors=False)
        pooled.append(spec.eigenphases)
        counts += np.histogram(spec.eigenphases, bins=edges)[0]
        powers = spec.eigenvalues.copy()
        for k in range(K):
            moment_rows[row, k] = powers.mean()
            powers = powers * spec.eigenvalues
    pooled = np.concatenate(pooled)
    moments = moment_rows.mean(axis=0)
    if len(seeds) > 1:
        spread = moment_rows.std(axis=0, ddof=1).real / math.sqrt(len(seeds))
    else:
        spread = np.zeros(K)
    return DOSHistogram(
        edges=edges,
        counts=counts,
        samples=len(seeds),
        dim=dim,
        moments=moments,
        moment_spread=spread,
        ks=ks_statistic(pooled),
    )


# ---------------------------------------------------------------------------
# wall operators and the determinant identity


@dataclass(frozen=True)
class ParityOperators:
    """Ring-parity projections and the wall operators at parameter z.

    K swaps each pair (2k, 2k+1); W_z maps the even subspace onto the left
    wall space F_z = {psi_{2k+1} = z psi_{2k+2}} and V_z the even subspace
    onto the complement of the right wall space G_z.  The algebra W_z^2 = 1
    and V_z^{-1} = K V_z K holds for every z != 0 and pins 1/z (not conj z)
    as the inverse slot.
    """

    z: complex
    q_even: np.ndarray
    q_odd: np.ndarray
    k_swap: np.ndarray
    v: np.ndarray
    w: np.ndarray

    @property
    def v_inv(self) -> np.ndarray:
        return self.k_swap @ self.v @ self.k_swap

    def w_square_defect(self) -> float:
        eye = np.eye(self.w.shape[0])
        return float(np.linalg.norm(self.w @ self.w - eye, 2))

    def v_inverse_defect(self) -> float:
        eye = np.eye(self.v.shape[0])
        return float(np.linalg.norm(self.v @ self.v_inv - eye, 2))


def build_parity_operators(z: complex, M: int) -> ParityOperators:
    z = complex(z)
    if z == 0:
        raise ValueError("z must be nonzero")
    two_m = 2 * M
    s = 1.0 / math.sqrt(2.0)
    w = np.zeros((two_m, two_m), dtype=complex)
    v = np.zeros((two_m, two_m), dtype=complex)
    k_swap = np.zeros((two_m, two_m))
    q_even = np.zeros((two_m, two_m))
    q_odd = np.zeros((two_m, two_m))
    for k in range(M):
        a, b = 2 * k + 1, (2 * k + 2) % two_m
        w[a, b] = z * s
        w[b, b] = s
        w[a, a] = -s
        w[b, a] = s / z
        v[2 * k, 2 * k] = z * s
        v[2 * k + 1, 2 * k] = -s
        v[2 * k, 2 * k + 1] = s
        v[2 * k + 1, 2 * k + 1] = s / z
        k_swap[2 * k, 2 * k + 1] = 1.0
        k_swap[2 * k + 1, 2 * k] = 1.0
        q_even[2 * k, 2 * k] = 1.0
        q_odd[2 * k + 1, 2 * k + 1] = 1.0
    ops = ParityOperators(z=z, q_even=q_even, q_odd=q_odd, k_swap=k_swap, v=v, w=w)
    if ops.w_square_defect() > 1e-12 * max(1.0, abs(z) ** 2, abs(z) ** -2):
        raise AssertionError("wall operator algebra violated: W_z^2 != 1")
    if ops.v_inverse_defect() > 1e-12 * max(1.0, abs(z) ** 2, abs(z) ** -2):
        raise AssertionError("wall operator algebra violated: V_z^{-1} != K V_z K")
    return ops


@dataclass(frozen=True)
class DetIdentityCheck:
    """Outcome of one determinant-identity evaluation."""

    status: str  # "ok" | "degenerate"
    z: complex
    rel_error: float | None = None
    log_lhs: float | None = None
    log_rhs: float | None = None
    min_eig_distance: float = math.inf


def determinant_identity_residual(
    z: complex,
    params: ModelParams,
    M: int,
    L: int,
    phases: PhaseField,
    spectrum: SpectrumResult | None = None,
) -> DetIdentityCheck:
    """Relative error of the determinant identity at spectral parameter z.

    Left side: |z|^{(4L+1)M} |det Q_E V_z^{-1} P_2L(z) W_z Q_E| from the
    propagator and wall operators.  Right side: the same quantity from the
    eigenvalues of U^D,

        2^{-M} (rt)^{-2LM} prod_i |z - z_i|,

    both accumulated in log magnitude.  The 2^{-M} constant is forced by the
    1/sqrt(2) normalization of the wall operators (restrict to L = 0, M = 1,
    where both sides are explicit).  Points within 1e-12 of an eigenvalue are
    reported as degenerate and skipped: there the identity reads 0 = 0.
    """
    z = complex(z)
    if z == 0:
        raise ValueError("z must be nonzero")
    params.require_transport()
    if spectrum is None:
        spectrum = eigendecompose(
            build_cylinder_operator(params, phases, L, M), want_vectors=False
        )
    dist = np.abs(z - spectrum.eigenvalues)
    min_dist = float(dist.min())
    if min_dist < 1e-12:
        return DetIdentityCheck(status="degenerate", z=z, min_eig_distance=min_dist)
    prop = propagate(z, phases, L, params)
    ops = build_parity_operators(z, M)
    restricted = (ops.v_inv @ prop.matrix @ ops.w)[0::2][:, 0::2]
    sign, logdet = np.linalg.slogdet(restricted)
    if sign == 0.0:
        return DetIdentityCheck(status="degenerate", z=z, min_eig_distance=min_dist)
    log_lhs = (4 * L + 1) * M * math.log(abs(z)) + logdet
    log_rhs = (
        -M * math.log(2.0)
        - 2 * L * M * math.log(params.rt)
        + float(np.sum(np.log(dist)))
    )
    rel = abs(math.exp(log_lhs - log_rhs) - 1.0)
    return DetIdentityCheck(
        status="ok",
        z=z,
        rel_error=rel,
        log_lhs=log_lhs,
        log_rhs=log_rhs,
        min_eig_distance=min_dist,
    )


# ---------------------------------------------------------------------------
# trivial-phase band structure


def band_symbol(x: float, y: float, params: ModelParams) -> np.ndarray:
    """The 2x2 momentum-space symbol of the squared trivial-phase walk.

    Determinant -1 everywhere; trace 2i rt (sin x - sin y), so the
    eigenphases theta solve sin theta = rt (sin x - sin y).
    """
    r2, t2, rt = params.r**2, params.t**2, params.rt
    ex, ey = np.exp(1j * x), np.exp(1j * y)
    return np.array(
        [
            [rt * (1.0 / ey - 1.0 / ex), r2 / ex + t2 / ey],
            [t2 * ey + r2 * ex, rt * (ex - ey)],
        ]
    )


def _symbol_eigenphases(xs: np.ndarray, ys: np.ndarray, params: ModelParams):
    """Stacked eigenphases and determinant defect over an (x, y) grid."""
    xg, yg = np.meshgrid(xs, ys, indexing="ij")
    r2, t2, rt = params.r**2, params.t**2, params.rt
    ex, ey = np.exp(1j * xg), np.exp(1j * yg)
    sym = np.empty(xg.shape + (2, 2), dtype=complex)
    sym[..., 0, 0] = rt * (1.0 / ey - 1.0 / ex)
    sym[..., 0, 1] = r2 / ex + t2 / ey
    sym[..., 1, 0] = t2 * ey + r2 * ex
    sym[..., 1, 1] = rt * (ex - ey)
    dets = np.linalg.det(sym)
    evals = np.linalg.eigvals(sym)
    thetas = np.sort(np.mod(np.angle(evals), 2.0 * np.pi), axis=-1)
    det_defect = float(np.max(np.abs(dets + 1.0)))
    return thetas, det_defect


@dataclass(frozen=True)
class BandStructure:
    """Symbol eigenphases over a momentum grid (cylinder-quantized or full)."""

    xs: np.ndarray
    ys: np.ndarray
    eigenphases: np.ndarray  # (len(xs), len(ys), 2)
    det_defect: float
    params: ModelParams

    def band_edge(self) -> float:
        """Largest |sin theta| over the grid, as an angle: the band edge arcsin(2rt)."""
        return float(np.max(np.abs(np.arcsin(np.clip(np.sin(self.eigenphases), -1, 1)))))

    def band_width(self) -> float:
        return float(np.ptp(self.eigenphases))


def band_structure(params: ModelParams, M: int, nx: int = 128) -> BandStructure:
    """Eigenphases along the cylinder momenta y = 2 pi kappa / M, kappa in Z_M."""
    if M < 1:
        raise ValueError("need M >= 1")
    xs = np.linspace(-np.pi, np.pi, nx, endpoint=False)
    ys = 2.0 * np.pi * np.arange(M) / M
    thetas, defect = _symbol_eigenphases(xs, ys, params)
    return BandStructure(xs=xs, ys=ys, eigenphases=thetas, det_defect=defect, params=params)


def band_grid(params: ModelParams, nx: int = 64, ny: int = 64) -> BandStructure:
    """Eigenphases over the full momentum torus (both components continuous)."""
    xs = np.linspace(-np.pi, np.pi, nx, endpoint=False)
    ys = np.linspace(-np.pi, np.pi, ny, endpoint=False)
    thetas, defect = _symbol_eigenphases(xs, ys, params)
    return BandStructure(xs=xs, ys=ys, eigenphases=thetas, det_defect=defect, params=params)


# ---------------------------------------------------------------------------
# eigenvector decay


@dataclass(frozen=True)
class DecayFit:
    """Exponential tail fit of one eigenvector's column-norm profile."""

    status: str  # "ok" | "not localized" | "compact support" | "window too short"
    eigenphase: float
    column_norms: np.ndarray = field(repr=False)
    peak_column: int = 0
    rate: float | None = None
    r_squared: float | None = None


def eigenvector_decay_fit(
    result: SpectrumResult,
    index: int,
    min_r_squared: float = 0.9,
    floor: float = 1e-13,
) -> DecayFit:
    """Fit log column norms against distance from the peak column.

    Tail window: columns at distance >= L/4 from the peak whose norm sits
    above the numerical floor (relative to the peak).  A slope is reported
    only when the fit explains the tail (R^2 >= 0.9); profiles supported on
    fewer than three columns are reported as compact.
    """
    if result.eigenvectors is None:
        raise ValueError("SpectrumResult carries no eigenvectors")
    L, M = result.L, result.M
    vec = result.eigenvectors[:, index]
    norms = np.linalg.norm(vec.reshape(4 * L + 1, 2 * M), axis=1)
    phase = float(result.eigenphases[index])
    peak = int(np.argmax(norms))
    support = np.flatnonzero(norms > floor * norms[peak])
    if support.size <= 2:
        return DecayFit(
            status="compact support", eigenphase=phase, column_norms=norms, peak_column=peak
        )
    dist = np.abs(np.arange(4 * L + 1) - peak)
    mask = (dist >= max(2, L // 4)) & (norms > floor * norms[peak])
    if np.count_nonzero(mask) < 4:
        return DecayFit(
            status="window too short", eigenphase=phase, column_norms=norms, peak_column=peak
        )
    xs = dist[mask].astype(float)
    ys = np.log(norms[mask])
    slope, intercept = np.polyfit(xs, ys, 1)
    fitted = slope * xs + intercept
    ss_res = float(np.sum((ys - fitted) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    if r2 < min_r_squared:
        return DecayFit(
            status="not localized",
            eigenphase=phase,
            column_norms=norms,
            peak_column=peak,
            rate=None,
            r_squared=r2,
        )
    return DecayFit(
        status="ok",
        eigenphase=phase,
        column_norms=norms,
        peak_column=peak,
        rate=float(-slope),
        r_squared=r2,
    )


# ---------------------------------------------------------------------------
# cyclicity


def krylov_rank(params: ModelParams, phases: PhaseField, n: int, L: int) -> int:
    """Numerical rank of {U^m e_mu : |m| <= n, mu in {0} x Z_2M}.

    The window must satisfy L > n so wall reflections cannot reach the
    tested columns; cyclicity predicts rank 2M (2n+1).
    """
    params.require_transport()
    if L <= n:
        raise ValueError("need window L > n so reflections stay out of reach")
    M = phases.M
    op = build_cylinder_operator(params, phases, L, M)
    two_m = 2 * M
    base = np.zeros((op.dim, two_m), dtype=complex)
    for m in range(two_m):
        base[op.index(0, m), m] = 1.0
    blocks = [base]
    fwd = base
    bwd = base
    u = op.matrix
    u_star = op.matrix.conj().T
    for _ in range(n):
        fwd = u @ fwd
        bwd = u_star @ bwd
        blocks += [fwd, bwd]
    stack = np.concatenate(blocks, axis=1)
    svals = np.linalg.svd(stack, compute_uv=False)
    return int(np.count_nonzero(svals > 1e-10))
