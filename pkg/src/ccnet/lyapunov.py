"""Lyapunov spectrum of the transfer cocycle by QR-stabilized iteration.

A 2M-frame is pushed through the random layer maps A_z(p); orthonormalizing
with a positive-diagonal triangular normalizer every few steps and
accumulating the log diagonals estimates all 2M exponents at once.  One
cocycle step spans two lattice columns, so exponents are normalized per
column: the exact laws then read

    (1/M) sum_{i<=M} lambda_i = log(1/rt)/2        on |z| = 1,
    lambda_k + lambda_{2M+1-k} = 0,                 (Lorentz symmetry)
    2 lambda_1 <= log(1/rt) + log((1+r)(1+t)).

Error bars come from batch means; nothing here assumes the symmetry, so the
checks stay honest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import ModelParams
from .transfer import layer_matrices

__all__ = [
    "CocycleRunConfig",
    "LyapunovResult",
    "LocalizationLength",
    "ZIndependenceReport",
    "lyapunov_spectrum",
    "localization_length",
    "thouless_rhs",
    "z_independence_check",
    "exponent_lower_bounds",
    "xi_upper_bound",
]

_NORM_GUARD = 1e100  # early-orthonormalization threshold on column entries


@dataclass(frozen=True)
class CocycleRunConfig:
    """Everything needed to reproduce one spectrum estimate."""

    params: ModelParams
    M: int
    n_steps: int
    seed: int
    z: complex = 1.0 + 0.0j
    reorth_period: int = 1
    burn_in: int | None = None  # default: 1% of n_steps
    batch_count: int = 20

    def __post_init__(self):
        self.params.require_transport()
        if complex(self.z) == 0:
            raise ValueError("z must be nonzero")
        if self.M < 1:
            raise ValueError("need M >= 1")
        if self.batch_count < 2:
            raise ValueError("need batch_count >= 2")
        if self.n_steps < self.batch_count:
            raise ValueError("need n_steps >= batch_count")
        if self.reorth_period < 1:
            raise ValueError("need reorth_period >= 1")
        if self.n_steps < self.batch_count * self.reorth_period:
            raise ValueError("need n_steps >= batch_count * reorth_period")

    @property
    def effective_burn_in(self) -> int:
        if self.burn_in is not None:
            return self.burn_in
        return max(1, self.n_steps // 100)


@dataclass(frozen=True)
class LyapunovResult:
    """Sorted per-column exponent estimates with batch-means standard errors."""

    exponents: np.ndarray  # (2M,), descending
    stderrs: np.ndarray  # (2M,)
    batch_means: np.ndarray = field(repr=False)  # (batch_count, 2M)
    config: CocycleRunConfig = None

    @property
    def M(self) -> int:
        return self.exponents.size // 2

    @property
    def gammas(self) -> np.ndarray:
        return np.exp(self.exponents)

    def mean_top(self) -> float:
        """Average of the first M exponents, the Thouless-formula observable."""
        return float(np.mean(self.exponents[: self.M]))

    def mean_top_stderr(self) -> float:
        per_batch = self.batch_means[:, : self.M].mean(axis=1)
        return float(np.std(per_batch, ddof=1) / math.sqrt(per_batch.size))

    def symmetry_defects(self) -> np.ndarray:
        """|lambda_k + lambda_{2M+1-k}| for k = 1..2M."""
        return np.abs(self.exponents + self.exponents[::-1])

    def symmetry_sigmas(self) -> np.ndarray:
        return self.stderrs + self.stderrs[::-1]

    def gaps(self) -> np.ndarray:
        """Gaps lambda_k - lambda_{k+1} among the top M exponents, then lambda_M itself."""
        top = self.exponents[: self.M]
        return np.concatenate([top[:-1] - top[1:], [top[-1]]])

    def gap_stderrs(self) -> np.ndarray:
        top = self.batch_means[:, : self.M]
        diffs = np.concatenate([top[:, :-1] - top[:, 1:], top[:, -1:]], axis=1)
        return np.std(diffs, axis=0, ddof=1) / math.sqrt(diffs.shape[0])


def _qr_positive(frame: np.ndarray):
    """QR with positive real diagonal in the triangular factor."""
    q, r = np.linalg.qr(frame)
    d = np.diagonal(r).copy()
    absd = np.abs(d)
    absd[absd == 0.0] = 1.0  # cannot occur for invertible cocycles; keeps log finite
    q = q * (d / absd)[None, :]
    return q, np.log(absd)


def lyapunov_spectrum(config: CocycleRunConfig) -> LyapunovResult:
    """Estimate the full 2M Lyapunov spectrum of the cocycle at config.z.

    Phases are drawn i.i.d. uniform per layer from a seeded generator; the
    frame is re-orthonormalized every ``reorth_period`` steps (or early if a
    column entry exceeds the overflow guard).  After the burn-in, log
    diagonals are accumulated into ``batch_count`` contiguous batches; the
    estimate is total / (2 * n_steps) per exponent and the standard error is
    the batch-means spread.  Exponents are returned sorted descending
    together with the matching stderr permutation.
    """
    M = config.M
    two_m = 2 * M
    rng = np.random.default_rng(config.seed)
    m1, m2 = layer_matrices(config.z, M, config.params)
    frame = np.eye(two_m, dtype=complex)

    n = config.n_steps
    burn = config.effective_burn_in
    nb = config.batch_count
    period = config.reorth_period
    batch_sums = np.zeros((nb, two_m))
    batch_cols = np.zeros(nb)  # column count (2 per step) accumulated per batch
    total = np.zeros(two_m)

    chunk = 1024
    pending = 0  # steps since last orthonormalization
    pending_batch = 0
    done = 0
    while done < burn + n:
        block = min(chunk, burn + n - done)
        uni = rng.random((block, 4 * M))
        phase_block = np.exp(2j * np.pi * uni)
        for i in range(block):
            p = phase_block[i]
            pr = np.ones(two_m, dtype=complex)
            pr[1::2] = p[1:two_m:2]
            pl = np.ones(two_m, dtype=complex)
            pl[0::2] = p[0:two_m:2]
            pm = p[two_m:]
            v = pr[:, None] * frame
            v = m1 @ v
            v *= pm[:, None]
            v = m2 @ v
            v *= pl[:, None]
            frame = v
            step = done + i
            pending += 1
            if step >= burn:
                pending_batch = min(nb - 1, (step - burn) * nb // n)
            # flush at the burn-in boundary so discarded and kept logs never mix
            due = pending >= period or step == burn - 1
            if not due and period > 1:
                due = np.max(np.abs(frame)) > _NORM_GUARD
            if due:
                frame, logs = _qr_positive(frame)
                if step >= burn:
                    batch_sums[pending_batch] += logs
                    batch_cols[pending_batch] += 2 * pending
                    total += logs
                pending = 0
        done += block
    if pending:
        frame, logs = _qr_positive(frame)
        batch_sums[pending_batch] += logs
        batch_cols[pending_batch] += 2 * pending
        total += logs

    exponents = total / (2.0 * n)
    batch_means = batch_sums / batch_cols[:, None]
    order = np.argsort(exponents)[::-1]
    exponents = exponents[order]
    batch_means = batch_means[:, order]
    stderrs = np.std(batch_means, axis=0, ddof=1) / math.sqrt(nb)
    return LyapunovResult(
        exponents=exponents, stderrs=stderrs, batch_means=batch_means, config=config
    )


@dataclass(frozen=True)
class LocalizationLength:
    """1/lambda_M with a propagated error bar, or an explicit refusal."""

    status: str  # "ok" | "not resolved"
    value: float | None = None
    stderr: float | None = None


def localization_length(result: LyapunovResult) -> LocalizationLength:
    """xi_M = 1/lambda_M; reported only when lambda_M clears 3 sigma."""
    lam = float(result.exponents[result.M - 1])
    sig = float(result.stderrs[result.M - 1])
    if lam <= 3.0 * sig:
        return LocalizationLength(status="not resolved")
    return LocalizationLength(status="ok", value=1.0 / lam, stderr=sig / lam**2)


def thouless_rhs(z: complex, params: ModelParams) -> float:
    """Mean of the top M exponents predicted at spectral parameter z.

    Uses the closed form of the logarithmic potential of the flat density
    of states, int log|z - x| dl(x) = log max(1, |z|), which vanishes on the
    unit circle and leaves log(1/rt)/2 there.
    """
    params.require_transport()
    az = abs(complex(z))
    if az == 0.0:
        raise ValueError("z must be nonzero")
    return 2.0 * math.log(max(1.0, az)) + 0.5 * math.log(1.0 / params.rt) - math.log(az)


@dataclass(frozen=True)
class ZIndependenceReport:
    """Per-exponent comparison of two on-circle runs."""

    z1: complex
    z2: complex
    lambda1: np.ndarray
    lambda2: np.ndarray
    combined_sigma: np.ndarray
    passes: np.ndarray

    @property
    def all_pass(self) -> bool:
        return bool(np.all(self.passes))


def z_independence_check(
    params: ModelParams,
    M: int,
    z1: complex,
    z2: complex,
    n_steps: int,
    seeds: tuple[int, int],
) -> ZIndependenceReport:
    """Compare lambda_k(z1) and lambda_k(z2) for |z1| = |z2| = 1 at 3 sigma."""
    for z in (z1, z2):
        if abs(abs(complex(z)) - 1.0) > 1e-12:
            raise ValueError(f"z-independence holds on the unit circle only, got |z| = {abs(z)}")
    r1 = lyapunov_spectrum(
        CocycleRunConfig(params=params, M=M, n_steps=n_steps, seed=seeds[0], z=z1)
    )
    r2 = lyapunov_spectrum(
        CocycleRunConfig(params=params, M=M, n_steps=n_steps, seed=seeds[1], z=z2)
    )
    sigma = np.sqrt(r1.stderrs**2 + r2.stderrs**2)
    diff = np.abs(r1.exponents - r2.exponents)
    return ZIndependenceReport(
        z1=complex(z1),
        z2=complex(z2),
        lambda1=r1.exponents,
        lambda2=r2.exponents,
        combined_sigma=sigma,
        passes=diff <= 3.0 * sigma,
    )


def exponent_lower_bounds(kappa: float, delta: float, M: int) -> np.ndarray:
    """lambda_{j+1} >= kappa - j delta / (M - j) for j = 0 .. M-1.

    Follows from the mean law (mean >= kappa) plus the top bound
    (lambda_1 <= kappa + delta); vacuous (negative) entries are returned
    as-is.
    """
    if kappa <= 0 or delta < 0:
        raise ValueError("need kappa > 0 and delta >= 0")
    j = np.arange(M, dtype=float)
    return kappa - j * delta / (M - j)


def xi_upper_bound(params: ModelParams, M: int):
    """2 / (log(1/rt) - (M-1) log((1+r)(1+t))), or "vacuous" when the
    denominator is not positive (near criticality the crude bound fails)."""
    params.require_transport()
    denom = math.log(1.0 / params.rt) - (M - 1) * math.log((1.0 + params.r) * (1.0 + params.t))
    if denom <= 0.0:
        return "vacuous"
    return 2.0 / denom
