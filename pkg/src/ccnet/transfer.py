"""Transfer matrices and the 2M x 2M cocycle over the phase disorder.

For spectral parameter z != 0 the eigenvalue equation U psi = z psi is
equivalent to a two-site recursion across columns.  The 2x2 blocks T_eo
(even -> odd column) and T_oe (odd -> even) lie in U(1,1) when |z| = 1;
stacked over the ring they give the layer matrices M1(z) (pairs (2k, 2k+1))
and M2(z) (cyclic pairs (2k+1, 2k+2)), and one double column advances by

    A_z(p) = D(p_l) M2(z) D(p_m) M1(z) D(p_r),

an element of the group U_M(1,1) of the form J = diag(1,-1,1,-1,...).

Wherever a formula needs the "inverse slot" of z we use exactly 1/z (not
conj(z)); on the unit circle the two agree, and off the circle 1/z is the
choice forced by the wall-operator algebra (W_z^2 = 1) and by the
determinant identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ModelParams, PhaseField

__all__ = [
    "TransferBlock",
    "LayerPhases",
    "TransferMatrix",
    "Propagator",
    "t_eo",
    "t_oe",
    "layer_matrices",
    "cocycle_step",
    "phase_slotting",
    "propagate",
    "reconstruct_columns",
    "reconstruct_and_verify",
    "form_signature",
]


def form_signature(M: int) -> np.ndarray:
    """Diagonal of the hermitian form J preserved by the transfer matrices."""
    sig = np.ones(2 * M)
    sig[1::2] = -1.0
    return sig


def _check_z(z: complex) -> complex:
    z = complex(z)
    if z == 0:
        raise ValueError("spectral parameter z must be nonzero")
    return z


def _check_phases(q, n: int) -> np.ndarray:
    q = np.asarray(q, dtype=complex)
    if q.shape != (n,):
        raise ValueError(f"expected {n} phases, got shape {q.shape}")
    if np.max(np.abs(np.abs(q) - 1.0)) > 1e-9:
        raise ValueError("phases must be unit modulus")
    return q


@dataclass(frozen=True)
class TransferBlock:
    """One 2x2 transfer step; role 'eo' maps an even column, 'oe' an odd one."""

    matrix: np.ndarray
    z: complex
    role: str

    def u11_defect(self) -> float:
        j = np.diag([1.0, -1.0])
        b = self.matrix
        return float(np.linalg.norm(b.conj().T @ j @ b - j, 2))


def t_eo(z: complex, q, params: ModelParams) -> TransferBlock:
    """Even-to-odd block diag(q1 q2, q3) (1/t)[[1/z, -r], [-r, z]] diag(q3, conj(q1) q2)."""
    z = _check_z(z)
    params.require_transport()
    q1, q2, q3 = _check_phases(q, 3)
    core = np.array([[1.0 / z, -params.r], [-params.r, z]]) / params.t
    left = np.diag([q1 * q2, q3])
    right = np.diag([q3, np.conj(q1) * q2])
    return TransferBlock(matrix=left @ core @ right, z=z, role="eo")


def t_oe(z: complex, q, params: ModelParams) -> TransferBlock:
    """Odd-to-even block diag(conj(q3), q1 q2) (1/r)[[z, -t], [t, -1/z]] diag(conj(q1) q2, conj(q3))."""
    z = _check_z(z)
    params.require_transport()
    q1, q2, q3 = _check_phases(q, 3)
    core = np.array([[z, -params.t], [params.t, -1.0 / z]]) / params.r
    left = np.diag([np.conj(q3), q1 * q2])
    right = np.diag([np.conj(q1) * q2, np.conj(q3)])
    return TransferBlock(matrix=left @ core @ right, z=z, role="oe")


def layer_matrices(z: complex, M: int, params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """The bare 2M x 2M layer factors (M1(z), M2(z)).

    M1 is block diagonal on ring pairs (2k, 2k+1) with blocks
    (1/t)[[1/z, -r], [-r, z]]; M2 carries (1/r)[[z, -t], [t, -1/z]] on the
    cyclically shifted pairs (2k+1, 2k+2 mod 2M), which puts -1/z and the
    +-t entries in the corners of the matrix.
    """
    z = _check_z(z)
    params.require_transport()
    if M < 1:
        raise ValueError("need M >= 1")
    two_m = 2 * M
    m1 = np.zeros((two_m, two_m), dtype=complex)
    m2 = np.zeros((two_m, two_m), dtype=complex)
    for k in range(M):
        a, b = 2 * k, 2 * k + 1
        m1[a, a] = (1.0 / z) / params.t
        m1[a, b] = -params.r / params.t
        m1[b, a] = -params.r / params.t
        m1[b, b] = z / params.t
        a, b = 2 * k + 1, (2 * k + 2) % two_m
        m2[a, a] = z / params.r
        m2[a, b] = -params.t / params.r
        m2[b, a] = params.t / params.r
        m2[b, b] = (-1.0 / z) / params.r
    return m1, m2


@dataclass(frozen=True)
class LayerPhases:
    """The 4M random phases entering one double-column step.

    Slot layout: the first 2M entries feed the diagonals flanking M1 --
    odd slots p1, p3, ... make up p_r = (1, p1, 1, p3, ...) on the incoming
    side and even slots p0, p2, ... make up p_l = (p0, 1, p2, 1, ...) on the
    outgoing side; the second 2M entries are the middle diagonal p_m.
    """

    M: int
    phases: np.ndarray = field(repr=False)  # (4M,)

    def __post_init__(self):
        _check_phases(self.phases, 4 * self.M)

    @classmethod
    def random(cls, rng: np.random.Generator, M: int) -> "LayerPhases":
        return cls(M=M, phases=np.exp(2j * np.pi * rng.random(4 * M)))

    @classmethod
    def ones(cls, M: int) -> "LayerPhases":
        return cls(M=M, phases=np.ones(4 * M, dtype=complex))

    @property
    def p_r(self) -> np.ndarray:
        out = np.ones(2 * self.M, dtype=complex)
        out[1::2] = self.phases[1 : 2 * self.M : 2]
        return out

    @property
    def p_l(self) -> np.ndarray:
        out = np.ones(2 * self.M, dtype=complex)
        out[0::2] = self.phases[0 : 2 * self.M : 2]
        return out

    @property
    def p_m(self) -> np.ndarray:
        return self.phases[2 * self.M :].copy()

    def twisted(self, w: complex) -> "LayerPhases":
        """The phase twist w . p: even slots scaled by 1/w, odd slots by w.

        Realizes the covariance A_{wz}(p) = A_z(w . p) for |w| = 1.
        """
        out = self.phases.copy()
        out[0::2] /= w
        out[1::2] *= w
        return LayerPhases(M=self.M, phases=out)


@dataclass(frozen=True)
class TransferMatrix:
    """A 2M x 2M transfer (cocycle) matrix at spectral parameter z."""

    matrix: np.ndarray
    z: complex
    M: int

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))

    def u11_defect(self) -> float:
        """|| B* J B - J || for the alternating form; zero on |z| = 1."""
        sig = form_signature(self.M)
        b = self.matrix
        gram = b.conj().T @ (sig[:, None] * b)
        return float(np.linalg.norm(gram - np.diag(sig), 2))

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.matrix, compute_uv=False)


@dataclass(frozen=True)
class Propagator(TransferMatrix):
    """Ordered product of the 2L steps spanning columns -2L .. 2L."""

    L: int = 0


def cocycle_step(z: complex, layer: LayerPhases, params: ModelParams) -> TransferMatrix:
    """One generator A_z(p) = D(p_l) M2(z) D(p_m) M1(z) D(p_r)."""
    m1, m2 = layer_matrices(z, layer.M, params)
    a = (layer.p_l[:, None] * m2) @ (layer.p_m[:, None] * m1) @ np.diag(layer.p_r)
    return TransferMatrix(matrix=a, z=complex(z), M=layer.M)


def phase_slotting(phases: PhaseField, j: int) -> LayerPhases:
    """Slot the site phases of columns 2j .. 2j+2 into one cocycle layer.

    Derived from the two-site recursions: the incoming factor D(p_r) holds
    the conjugated odd-ring phases of column 2j, the outgoing factor D(p_l)
    the even-ring phases of column 2j+2, and the middle diagonal D(p_m) the
    column 2j+1 phases with odd rings conjugated.  Each site phase is
    consumed by exactly one layer, so the slotted process is i.i.d. uniform.
    """
    if not phases.covers_columns(2 * j, 2 * j + 2):
        raise ValueError(
            f"columns {2*j}..{2*j+2} outside phase window [-{2*phases.L}, {2*phases.L}]"
        )
    M = phases.M
    left = phases.column_phases(2 * j)
    mid = phases.column_phases(2 * j + 1)
    right = phases.column_phases(2 * j + 2)
    slots = np.empty(4 * M, dtype=complex)
    slots[0 : 2 * M : 2] = right[0::2]           # p_l slots: column 2j+2, even rings
    slots[1 : 2 * M : 2] = np.conj(left[1::2])   # p_r slots: column 2j, odd rings
    slots[2 * M :: 2] = mid[0::2]                # p_m, even rings
    slots[2 * M + 1 :: 2] = np.conj(mid[1::2])   # p_m, odd rings conjugated
    return LayerPhases(M=M, phases=slots)


def propagate(z: complex, phases: PhaseField, L: int, params: ModelParams) -> Propagator:
    """The propagator P_2L(z): ring vector at column -2L mapped to column 2L.

    Ordered product of the 2L cocycle steps j = -L .. L-1, evaluated left to
    right with no internal rescaling (stabilized iteration lives in the
    Lyapunov engine; at spectral scale L the bare product is safe).
    """
    z = _check_z(z)
    if L < 0:
        raise ValueError("need L >= 0")
    if not phases.covers_columns(-2 * L, 2 * L):
        raise ValueError("phase window does not cover the propagation range")
    M = phases.M
    m1, m2 = layer_matrices(z, M, params)
    mat = np.eye(2 * M, dtype=complex)
    for j in range(-L, L):
        layer = phase_slotting(phases, j)
        mat = layer.p_l[:, None] * (m2 @ (layer.p_m[:, None] * (m1 @ (layer.p_r[:, None] * mat))))
    return Propagator(matrix=mat, z=z, M=M, L=L)


def reconstruct_columns(
    z: complex, phases: PhaseField, psi0: np.ndarray, N: int, params: ModelParams
) -> np.ndarray:
    """Grow a generalized eigenvector column by column from its ring vector at column 0.

    Returns the (2N+1, 2M) array of ring vectors on columns 0 .. 2N, built by
    the alternating two-site recursions (reduced disorder: the even step
    carries phases of columns 2j+1 even / 2j odd, the odd step those of
    columns 2j+2 even / 2j+1 odd).
    """
    z = _check_z(z)
    params.require_transport()
    if N < 0:
        raise ValueError("need N >= 0")
    if not phases.covers_columns(0, 2 * N):
        raise ValueError("phase window shorter than 2N columns")
    M = phases.M
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (2 * M,):
        raise ValueError(f"psi0 must have shape ({2*M},)")
    psi = np.empty((2 * N + 1, 2 * M), dtype=complex)
    psi[0] = psi0
    r, t = params.r, params.t
    for c in range(0, 2 * N):
        x = psi[c]
        if c % 2 == 0:
            # even -> odd on ring pairs (2k, 2k+1)
            a = phases.column_phases(c + 1)[0::2]
            b = phases.column_phases(c)[1::2]
            xe, xo = x[0::2], np.conj(b) * x[1::2]
            psi[c + 1, 0::2] = a * (xe / z - r * xo) / t
            psi[c + 1, 1::2] = (-r * xe + z * xo) / t
        else:
            # odd -> even on the shifted pairs (2k+1, 2k+2)
            cp = np.roll(phases.column_phases(c + 1)[0::2], -1)  # rings 2k+2
            d = phases.column_phases(c)[1::2]
            x1 = np.conj(d) * x[1::2]
            x2 = np.roll(x[0::2], -1)  # rings 2k+2
            out1 = (z * x1 - t * x2) / r
            out2 = cp * (t * x1 - x2 / z) / r
            psi[c + 1, 1::2] = out1
            psi[c + 1, 0::2] = np.roll(out2, 1)
    return psi


def reconstruct_and_verify(
    z: complex, phases: PhaseField, psi0: np.ndarray, N: int, params: ModelParams
) -> float:
    """Residual of the eigenvalue equation on the reconstructed window.

    Grows psi from its column-0 ring vector via transfer blocks, then checks
    every interior node row of (U psi - z psi) on columns 0 .. 2N.  Returns
    the largest row residual divided by the window norm of psi; zero input
    gives zero.
    """
    psi = reconstruct_columns(z, phases, psi0, N, params)
    norm = float(np.linalg.norm(psi))
    if norm == 0.0:
        return 0.0
    r, t = params.r, params.t
    worst = 0.0
    for c in range(0, 2 * N):
        if c % 2 == 0:
            a = phases.column_phases(c + 1)[0::2]
            b = phases.column_phases(c)[1::2]
            in0, in1 = psi[c, 0::2], psi[c + 1, 1::2]
            res0 = a * (t * in0 - r * in1) - z * psi[c + 1, 0::2]
            res1 = b * (r * in0 + t * in1) - z * psi[c, 1::2]
        else:
            cp = np.roll(phases.column_phases(c + 1)[0::2], -1)
            d = phases.column_phases(c)[1::2]
            in0 = psi[c + 1, 1::2]               # sites (c+1, 2k+1)
            in1 = np.roll(psi[c, 0::2], -1)      # sites (c, 2k+2)
            res0 = cp * (t * in0 - r * in1) - z * np.roll(psi[c + 1, 0::2], -1)
            res1 = d * (r * in0 + t * in1) - z * psi[c, 1::2]
        worst = max(worst, float(np.max(np.abs(res0))), float(np.max(np.abs(res1))))
    return worst / norm
