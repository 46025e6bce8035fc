"""Random unitary network model on a cylinder of perimeter 2M.

The model lives on the sites of Z x Z_{2M}.  Every even node (even column,
even ring) and every odd node (odd column, odd ring) carries a 2x2 unitary
scattering block built from a rotation by (r, t) and random unit phases.
This module constructs the scattering blocks, samples the phase disorder
(both the full six-phase-per-node form and the reduced one-phase-per-site
form), assembles the finite unitary restriction U^D with reflecting walls
at columns -2L and 2L, and exposes the rt = 0 block decompositions.

Column windows run over j in [-2L, 2L] (4L+1 columns); ring indices are
always reduced mod 2M.  State vectors are stored column-major: the block
of 2M consecutive entries at column j is the ring vector psi_j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

__all__ = [
    "ModelParams",
    "SiteIndex",
    "PhaseField",
    "NodePhaseField",
    "FiniteOperator",
    "scattering_matrix",
    "sample_phase_field",
    "sample_node_phases",
    "reduce_phases",
    "build_cylinder_operator",
    "build_full_cylinder_operator",
    "apply_operator",
    "extreme_block_check",
]

_UNIT_TOL = 1e-9  # acceptable |q| - 1 for user-supplied phases


@dataclass(frozen=True)
class ModelParams:
    """Reflection/transmission pair (r, t) with r^2 + t^2 = 1.

    The single physical knob of the model.  ``from_r`` normalizes t from r;
    direct construction rejects pairs violating the circle constraint.
    """

    r: float
    t: float

    def __post_init__(self):
        if not (0.0 <= self.r <= 1.0) or not (0.0 <= self.t <= 1.0):
            raise ValueError(f"r and t must lie in [0, 1], got r={self.r}, t={self.t}")
        if abs(self.r**2 + self.t**2 - 1.0) > 1e-14:
            raise ValueError(
                f"r^2 + t^2 = {self.r**2 + self.t**2!r} violates unitarity beyond 1e-14"
            )

    @classmethod
    def from_r(cls, r: float) -> "ModelParams":
        return cls(float(r), math.sqrt(max(0.0, 1.0 - float(r) ** 2)))

    @classmethod
    def critical(cls) -> "ModelParams":
        """The self-dual point r = t = 1/sqrt(2)."""
        return cls(math.sqrt(0.5), math.sqrt(0.5))

    @property
    def rt(self) -> float:
        return self.r * self.t

    def require_transport(self) -> "ModelParams":
        """Raise unless rt != 0 (transfer matrices need both channels open)."""
        if self.rt == 0.0:
            raise ValueError("rt = 0: transfer-matrix and cocycle routines need rt != 0")
        return self


@dataclass(frozen=True)
class SiteIndex:
    """Lattice site (column j, ring k); ring is meant mod 2M.

    Sublattice parity is (column + ring) mod 2: parity 0 sites are inputs of
    even nodes / outputs of odd nodes and vice versa.
    """

    column: int
    ring: int

    @property
    def parity(self) -> int:
        return (self.column + self.ring) % 2

    def reduced(self, M: int) -> "SiteIndex":
        return SiteIndex(self.column, self.ring % (2 * M))


# ---------------------------------------------------------------------------
# counter-based phase RNG
#
# Phases are a pure hash of (seed, column, ring), so a field extended to a
# larger window agrees with the smaller one on shared sites, and sweeps are
# reproducible without storing state.

_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_GOLD = np.uint64(0x9E3779B97F4A7C15)
_OFFSET = np.uint64(1 << 31)


def _mix64(x: np.ndarray) -> np.ndarray:
    x = x.copy()
    x ^= x >> np.uint64(30)
    x *= _MIX1
    x ^= x >> np.uint64(27)
    x *= _MIX2
    x ^= x >> np.uint64(31)
    return x


def _site_uniform(seed, columns, rings) -> np.ndarray:
    """Uniform [0,1) variates addressed by (seed, column, ring); broadcasts."""
    with np.errstate(over="ignore"):
        cols = np.asarray(columns, dtype=np.int64).astype(np.uint64) + _OFFSET
        rngs = np.asarray(rings, dtype=np.int64).astype(np.uint64) + _OFFSET
        counter = (cols << np.uint64(32)) | (rngs & np.uint64(0xFFFFFFFF))
        key = _mix64(np.asarray(seed, dtype=np.int64).astype(np.uint64) ^ _GOLD)
        h = _mix64(_mix64(counter ^ key) + _GOLD)
    return (h >> np.uint64(11)).astype(np.float64) / float(1 << 53)


def _site_phases(seed: int, columns: np.ndarray, rings: np.ndarray) -> np.ndarray:
    return np.exp(2j * np.pi * _site_uniform(seed, columns, rings))


@dataclass(frozen=True)
class PhaseField:
    """One uniform unit phase per lattice site on the window [-2L, 2L] x Z_{2M}.

    This is the reduced disorder: the full six-phase node randomness is
    unitarily equivalent to a diagonal of i.i.d. site phases (see
    ``reduce_phases``), and all production disorder is sampled in this form.
    """

    L: int
    M: int
    seed: int
    values: np.ndarray = field(repr=False)  # (4L+1, 2M), columns -2L..2L

    def __post_init__(self):
        expected = (4 * self.L + 1, 2 * self.M)
        if self.values.shape != expected:
            raise ValueError(f"phase array shape {self.values.shape} != {expected}")
        if np.max(np.abs(np.abs(self.values) - 1.0)) > 1e-14:
            raise ValueError("phase field entries must be unit modulus")

    @property
    def window(self) -> tuple[int, int]:
        return (self.L, self.M)

    def covers_columns(self, lo: int, hi: int) -> bool:
        return -2 * self.L <= lo and hi <= 2 * self.L

    def phase(self, column: int, ring: int) -> complex:
        if not self.covers_columns(column, column):
            raise ValueError(f"column {column} outside window [-{2*self.L}, {2*self.L}]")
        return complex(self.values[column + 2 * self.L, ring % (2 * self.M)])

    def at(self, site: SiteIndex) -> complex:
        return self.phase(site.column, site.ring)

    def column_phases(self, column: int) -> np.ndarray:
        """Ring vector of phases at one column."""
        if not self.covers_columns(column, column):
            raise ValueError(f"column {column} outside window [-{2*self.L}, {2*self.L}]")
        return self.values[column + 2 * self.L]

    def to_triples(self) -> np.ndarray:
        """Export as rows (column, ring, arg) for external inspection."""
        jj, kk = np.meshgrid(
            np.arange(-2 * self.L, 2 * self.L + 1), np.arange(2 * self.M), indexing="ij"
        )
        return np.column_stack(
            [jj.ravel(), kk.ravel(), np.angle(self.values).ravel()]
        )


def sample_phase_field(seed: int, L: int, M: int) -> PhaseField:
    """Sample the reduced i.i.d. phase field on the window [-2L, 2L] x Z_{2M}.

    Deterministic per (seed, site): extending the window preserves the
    phases of shared sites.
    """
    if L < 0 or M < 1:
        raise ValueError("need L >= 0 and M >= 1")
    cols = np.arange(-2 * L, 2 * L + 1)
    rings = np.arange(2 * M)
    jj, kk = np.meshgrid(cols, rings, indexing="ij")
    values = _site_phases(seed, jj.ravel(), kk.ravel()).reshape(4 * L + 1, 2 * M)
    return PhaseField(L=L, M=M, seed=seed, values=values)


@dataclass(frozen=True)
class NodePhaseField:
    """Six phases per node pair, keyed by the even node position (2j, 2k).

    Entries 0..2 phase the even node at (2j, 2k), entries 3..5 the odd node
    at (2j+1, 2k+1).  Only used to exercise the phase reduction; production
    disorder is the reduced ``PhaseField``.
    """

    M: int
    nodes: dict = field(repr=False)  # (2j, 2k) -> ndarray(6,) of unit phases

    def six(self, col: int, ring: int) -> np.ndarray:
        key = (col, ring % (2 * self.M))
        try:
            return self.nodes[key]
        except KeyError:
            raise ValueError(f"node pair {key} missing from NodePhaseField") from None


def sample_node_phases(seed: int, L: int, M: int) -> NodePhaseField:
    """Six i.i.d. phases per node pair, covering reductions on the (L, M) window."""
    nodes = {}
    rng = np.random.default_rng(seed)
    for col in range(-2 * L - 2, 2 * L + 3, 2):
        for ring in range(0, 2 * M, 2):
            nodes[(col, ring)] = np.exp(2j * np.pi * rng.random(6))
    return NodePhaseField(M=M, nodes=nodes)


def scattering_matrix(q, params: ModelParams) -> np.ndarray:
    """The U(2) node block diag(q1 q2, q1 conj(q2)) . [[t,-r],[r,t]] . diag(q3, conj(q3)).

    Unitary for unit phases, with det = q1^2.
    """
    q1, q2, q3 = (complex(x) for x in q)
    for x in (q1, q2, q3):
        if abs(abs(x) - 1.0) > _UNIT_TOL:
            raise ValueError(f"scattering phases must be unit modulus, got |q| = {abs(x)!r}")
    rot = np.array([[params.t, -params.r], [params.r, params.t]], dtype=complex)
    left = np.array([[q1 * q2, 0.0], [0.0, q1 * np.conj(q2)]])
    right = np.array([[q3, 0.0], [0.0, np.conj(q3)]])
    return left @ rot @ right


def reduce_phases(full: NodePhaseField, L: int, M: int) -> PhaseField:
    """Collapse six phases per node to one uniform phase per site.

    The node operator factors as D1 . S . D2 with diagonal D1, D2; conjugating
    by D2 leaves D(q) S with q the per-site products below.  The map has
    maximal rank on the phase angles, so i.i.d. uniform inputs give i.i.d.
    uniform outputs.
    """
    if full.M != M:
        raise ValueError(f"node field has M={full.M}, requested M={M}")
    two_m = 2 * M
    values = np.empty((4 * L + 1, two_m), dtype=complex)
    for col in range(-2 * L, 2 * L + 1):
        for ring in range(two_m):
            cpar, rpar = col % 2, ring % 2
            if cpar == 1 and rpar == 0:
                # site (2j+1, 2k): conj(p6) of pair below, p1 p2 of own pair
                p_own = full.six(col - 1, ring)
                p_dn = full.six(col - 1, ring - 2)
                values[col + 2 * L, ring] = np.conj(p_dn[5]) * p_own[0] * p_own[1]
            elif cpar == 0 and rpar == 1:
                # site (2j, 2k+1): p6 of pair to the left, p1 conj(p2) of own pair
                p_own = full.six(col, ring - 1)
                p_lf = full.six(col - 2, ring - 1)
                values[col + 2 * L, ring] = p_lf[5] * p_own[0] * np.conj(p_own[1])
            elif cpar == 0 and rpar == 0:
                # site (2j+2, 2k+2): p3 of own pair, p4 p5 of pair down-left
                p_here = full.six(col, ring)
                p_dl = full.six(col - 2, ring - 2)
                values[col + 2 * L, ring] = p_here[2] * p_dl[3] * p_dl[4]
            else:
                # site (2j+1, 2k+1): conj(p3) of even partner, p4 conj(p5) own
                p_pair = full.six(col - 1, ring - 1)
                values[col + 2 * L, ring] = (
                    np.conj(p_pair[2]) * p_pair[3] * np.conj(p_pair[4])
                )
    return PhaseField(L=L, M=M, seed=-1, values=values)


# ---------------------------------------------------------------------------
# finite cylinder operator


@dataclass(frozen=True)
class FiniteOperator:
    """Unitary restriction U^D to columns [-2L, 2L] with reflecting walls.

    Sparse, band width one in the column index.  Interior rows/columns hold
    the 2x2 node blocks; the 2M wall rules e(-2L, 2k+1) -> e(-2L, 2k+2) and
    e(2L, 2k) -> e(2L, 2k+1) close the operator unitarily.
    """

    L: int
    M: int
    params: ModelParams
    matrix: sparse.csr_matrix = field(repr=False)

    @property
    def dim(self) -> int:
        return 2 * self.M * (4 * self.L + 1)

    def index(self, column: int, ring: int) -> int:
        """Flat index of site (column, ring); column-major layout."""
        if not (-2 * self.L <= column <= 2 * self.L):
            raise ValueError(f"column {column} outside window")
        return (column + 2 * self.L) * 2 * self.M + ring % (2 * self.M)

    def site(self, flat: int) -> SiteIndex:
        col, ring = divmod(int(flat), 2 * self.M)
        return SiteIndex(col - 2 * self.L, ring)

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def unitarity_defect(self) -> float:
        gram = (self.matrix.conj().T @ self.matrix).toarray()
        return float(np.max(np.abs(gram - np.eye(self.dim))))

    def to_triplets(self) -> np.ndarray:
        """Sparse export, rows (row, col, re, im)."""
        coo = self.matrix.tocoo()
        return np.column_stack([coo.row, coo.col, coo.data.real, coo.data.imag])


def _node_spans(L: int):
    """Interior node columns: (even node cols, odd node cols)."""
    even_cols = list(range(-2 * L, 2 * L - 1, 2))
    odd_cols = list(range(-2 * L + 1, 2 * L, 2))
    return even_cols, odd_cols


def build_cylinder_operator(
    params: ModelParams, phases: PhaseField, L: int, M: int
) -> FiniteOperator:
    """Assemble U^D = D(q) S restricted to the window, reduced disorder.

    Interior blocks: the even node at (c, 2k) couples inputs (c, 2k),
    (c+1, 2k+1) to outputs (c+1, 2k), (c, 2k+1); the odd node at (c, 2k+1)
    couples inputs (c+1, 2k+1), (c, 2k+2) to outputs (c+1, 2k+2), (c, 2k+1).
    Each output row is multiplied by its site phase.  The two reflecting wall
    rules are placed with amplitude one.
    """
    if M < 1 or L < 0:
        raise ValueError("need M >= 1 and L >= 0")
    if phases.M != M or phases.L < L:
        raise ValueError(
            f"phase window (L={phases.L}, M={phases.M}) does not cover operator window "
            f"(L={L}, M={M})"
        )
    two_m = 2 * M
    dim = two_m * (4 * L + 1)
    rows, cols, vals = [], [], []

    def idx(c, m):
        return (c + 2 * L) * two_m + (m % two_m)

    def q(c, m):
        return phases.phase(c, m)

    even_cols, odd_cols = _node_spans(L)
    for c in even_cols:
        for k in range(M):
            a = q(c + 1, 2 * k)      # phase of output (c+1, 2k)
            b = q(c, 2 * k + 1)      # phase of output (c, 2k+1)
            in0, in1 = idx(c, 2 * k), idx(c + 1, 2 * k + 1)
            out0, out1 = idx(c + 1, 2 * k), idx(c, 2 * k + 1)
            rows += [out0, out0, out1, out1]
            cols += [in0, in1, in0, in1]
            vals += [a * params.t, -a * params.r, b * params.r, b * params.t]
    for c in odd_cols:
        for k in range(M):
            cp = q(c + 1, 2 * k + 2)  # phase of output (c+1, 2k+2)
            d = q(c, 2 * k + 1)       # phase of output (c, 2k+1)
            in0, in1 = idx(c + 1, 2 * k + 1), idx(c, 2 * k + 2)
            out0, out1 = idx(c + 1, 2 * k + 2), idx(c, 2 * k + 1)
            rows += [out0, out0, out1, out1]
            cols += [in0, in1, in0, in1]
            vals += [cp * params.t, -cp * params.r, d * params.r, d * params.t]
    for k in range(M):
        # left wall: e(-2L, 2k+1) -> e(-2L, 2k+2); right wall: e(2L, 2k) -> e(2L, 2k+1)
        rows.append(idx(-2 * L, 2 * k + 2))
        cols.append(idx(-2 * L, 2 * k + 1))
        vals.append(1.0)
        rows.append(idx(2 * L, 2 * k + 1))
        cols.append(idx(2 * L, 2 * k))
        vals.append(1.0)

    mat = sparse.csr_matrix(
        (np.asarray(vals, dtype=complex), (rows, cols)), shape=(dim, dim)
    )
    return FiniteOperator(L=L, M=M, params=params, matrix=mat)


def build_full_cylinder_operator(
    params: ModelParams, nodes: NodePhaseField, L: int, M: int
) -> FiniteOperator:
    """Same window and walls, but with the unreduced six-phase node blocks."""
    two_m = 2 * M
    dim = two_m * (4 * L + 1)
    rows, cols, vals = [], [], []

    def idx(c, m):
        return (c + 2 * L) * two_m + (m % two_m)

    even_cols, odd_cols = _node_spans(L)
    for c in even_cols:
        for k in range(M):
            s = scattering_matrix(nodes.six(c, 2 * k)[:3], params)
            in0, in1 = idx(c, 2 * k), idx(c + 1, 2 * k + 1)
            out0, out1 = idx(c + 1, 2 * k), idx(c, 2 * k + 1)
            rows += [out0, out0, out1, out1]
            cols += [in0, in1, in0, in1]
            vals += [s[0, 0], s[0, 1], s[1, 0], s[1, 1]]
    for c in odd_cols:
        for k in range(M):
            s = scattering_matrix(nodes.six(c - 1, 2 * k)[3:], params)
            in0, in1 = idx(c + 1, 2 * k + 1), idx(c, 2 * k + 2)
            out0, out1 = idx(c + 1, 2 * k + 2), idx(c, 2 * k + 1)
            rows += [out0, out0, out1, out1]
            cols += [in0, in1, in0, in1]
            vals += [s[0, 0], s[0, 1], s[1, 0], s[1, 1]]
    for k in range(M):
        rows.append(idx(-2 * L, 2 * k + 2))
        cols.append(idx(-2 * L, 2 * k + 1))
        vals.append(1.0)
        rows.append(idx(2 * L, 2 * k + 1))
        cols.append(idx(2 * L, 2 * k))
        vals.append(1.0)

    mat = sparse.csr_matrix(
        (np.asarray(vals, dtype=complex), (rows, cols)), shape=(dim, dim)
    )
    return FiniteOperator(L=L, M=M, params=params, matrix=mat)


def apply_operator(op: FiniteOperator, v: np.ndarray) -> np.ndarray:
    """Sparse matrix-vector product U^D v."""
    v = np.asarray(v)
    if v.shape[0] != op.dim:
        raise ValueError(f"vector length {v.shape[0]} != operator dimension {op.dim}")
    return op.matrix @ v


def _invariant_quadruples(op: FiniteOperator):
    """The rt = 0 invariant four-site subspaces, as flat index quadruples.

    For r = 0 the cycle through (2j, 2k) is
    (2j,2k) -> (2j+1,2k) -> (2j+1,2k-1) -> (2j,2k-1) -> back;
    for t = 0 it is (2j,2k) -> (2j,2k+1) -> (2j-1,2k+1) -> (2j-1,2k) -> back.
    Wall rules close the j = -L (r=0) and j = L (t=0) quadruples.
    """
    L, M = op.L, op.M
    quads = []
    if op.params.r == 0.0:
        for c in range(-2 * L, 2 * L - 1, 2):  # even columns -2L .. 2L-2
            for k in range(M):
                quads.append(
                    [
                        op.index(c, 2 * k),
                        op.index(c + 1, 2 * k),
                        op.index(c + 1, 2 * k - 1),
                        op.index(c, 2 * k - 1),
                    ]
                )
    else:
        for c in range(-2 * L + 2, 2 * L + 1, 2):  # even columns -2L+2 .. 2L
            for k in range(M):
                quads.append(
                    [
                        op.index(c, 2 * k),
                        op.index(c, 2 * k + 1),
                        op.index(c - 1, 2 * k + 1),
                        op.index(c - 1, 2 * k),
                    ]
                )
    return quads


def extreme_block_check(op: FiniteOperator) -> float:
    """Leakage of an rt = 0 operator out of its invariant 4-site subspaces.

    Returns the largest matrix element connecting a quadruple to its
    complement; exact invariance means 0.0.
    """
    if op.params.rt != 0.0:
        raise ValueError("extreme_block_check requires rt = 0")
    mat = op.matrix.tocsc()
    defect = 0.0
    for quad in _invariant_quadruples(op):
        inside = np.zeros(op.dim, dtype=bool)
        inside[quad] = True
        sub = mat[:, quad].toarray()
        leak = np.abs(sub[~inside, :])
        if leak.size:
            defect = max(defect, float(leak.max()))
    return defect
