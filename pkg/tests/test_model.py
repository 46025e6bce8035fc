import numpy as np
import pytest

from ccnet import (
    ModelParams,
    NodePhaseField,
    SiteIndex,
    apply_operator,
    build_cylinder_operator,
    build_full_cylinder_operator,
    extreme_block_check,
    reduce_phases,
    sample_node_phases,
    sample_phase_field,
    scattering_matrix,
)


# ---------------------------------------------------------------------------
# parameters


def test_params_circle_constraint():
    ModelParams(0.6, 0.8)
    with pytest.raises(ValueError):
        ModelParams(0.6, 0.9)
    with pytest.raises(ValueError):
        ModelParams(-0.1, 0.8)


def test_params_from_r_normalizes():
    for r in [0.0, 0.3, np.sqrt(0.5), 0.95, 1.0]:
        p = ModelParams.from_r(r)
        assert abs(p.r**2 + p.t**2 - 1.0) <= 1e-14


def test_require_transport_rejects_extremes():
    with pytest.raises(ValueError):
        ModelParams.from_r(0.0).require_transport()
    with pytest.raises(ValueError):
        ModelParams.from_r(1.0).require_transport()
    ModelParams.from_r(0.5).require_transport()


def test_site_parity():
    assert SiteIndex(2, 4).parity == 0
    assert SiteIndex(2, 5).parity == 1
    assert SiteIndex(-3, 4).parity == 1


# ---------------------------------------------------------------------------
# scattering matrix


def test_scattering_trivial_phases(lopsided):
    s = scattering_matrix((1, 1, 1), lopsided)
    assert np.allclose(s, [[0.8, -0.6], [0.6, 0.8]], atol=1e-15)


def test_scattering_det_is_q1_squared(lopsided):
    s = scattering_matrix((1j, 1, 1), lopsided)
    assert abs(np.linalg.det(s) - (-1.0)) <= 1e-14


def test_scattering_zero_reflection_identity():
    p = ModelParams(0.0, 1.0)
    s = scattering_matrix((1, 1, 1), p)
    assert np.allclose(s, np.eye(2), atol=1e-15)


def test_scattering_unitary_and_det_property(rng, ):
    for _ in range(200):
        p = ModelParams.from_r(rng.uniform(0.0, 1.0))
        q = np.exp(2j * np.pi * rng.random(3))
        s = scattering_matrix(q, p)
        assert np.max(np.abs(s.conj().T @ s - np.eye(2))) <= 1e-14
        assert abs(np.linalg.det(s) - q[0] ** 2) <= 1e-14


def test_scattering_rejects_non_unit_phase(lopsided):
    with pytest.raises(ValueError):
        scattering_matrix((0.5, 1, 1), lopsided)


# ---------------------------------------------------------------------------
# phase field


def test_phase_field_deterministic():
    a = sample_phase_field(42, 3, 2)
    b = sample_phase_field(42, 3, 2)
    assert np.array_equal(a.values, b.values)


def test_phase_field_window_extension_stable():
    small = sample_phase_field(7, 2, 3)
    big = sample_phase_field(7, 4, 3)
    for col in range(-4, 5):
        assert np.array_equal(small.column_phases(col), big.column_phases(col))


def test_phase_field_seed_changes_field():
    a = sample_phase_field(1, 2, 2)
    b = sample_phase_field(2, 2, 2)
    assert not np.allclose(a.values, b.values)


def test_phase_field_single_site_circular_mean():
    # one site, many realizations: the empirical mean must shrink like 3/sqrt(N)
    from ccnet.model import _site_phases

    seeds = np.arange(100_000)
    samples = _site_phases(seeds, np.full_like(seeds, 3), np.full_like(seeds, 1))
    assert abs(samples.mean()) <= 0.02


def test_phase_field_ring_reduction_and_bounds():
    f = sample_phase_field(5, 1, 2)
    assert f.phase(0, 4) == f.phase(0, 0)
    with pytest.raises(ValueError):
        f.phase(3, 0)


def test_phase_field_export_triples():
    f = sample_phase_field(5, 1, 1)
    triples = f.to_triples()
    assert triples.shape == (5 * 2, 3)
    row = triples[0]
    assert f.phase(int(row[0]), int(row[1])) == pytest.approx(np.exp(1j * row[2]))


# ---------------------------------------------------------------------------
# phase reduction


def _trivial_nodes(L, M):
    keys = sample_node_phases(0, L, M).nodes.keys()
    return NodePhaseField(M=M, nodes={k: np.ones(6, dtype=complex) for k in keys})


def test_reduce_all_ones_is_all_ones():
    reduced = reduce_phases(_trivial_nodes(2, 2), 2, 2)
    assert np.max(np.abs(reduced.values - 1.0)) <= 1e-14


def test_reduce_single_node_phase_lands_on_site():
    # p1 = exp(i alpha) at the node pair (0, 0), everything else trivial:
    # the site phase at (1, 0) must be exactly exp(i alpha)
    alpha = 0.731
    field = _trivial_nodes(2, 2)
    field.nodes[(0, 0)] = np.array([np.exp(1j * alpha), 1, 1, 1, 1, 1], dtype=complex)
    reduced = reduce_phases(field, 2, 2)
    assert reduced.phase(1, 0) == pytest.approx(np.exp(1j * alpha), abs=1e-14)
    assert reduced.phase(0, 1) == pytest.approx(np.exp(1j * alpha), abs=1e-14)


def test_reduce_outputs_unit_modulus():
    reduced = reduce_phases(sample_node_phases(3, 2, 2), 2, 2)
    assert np.max(np.abs(np.abs(reduced.values) - 1.0)) <= 1e-14


def test_reduce_missing_node_raises():
    field = _trivial_nodes(1, 1)
    del field.nodes[(0, 0)]
    with pytest.raises(ValueError):
        reduce_phases(field, 1, 1)


def test_reduce_outputs_uncorrelated():
    # i.i.d. uniform inputs stay i.i.d. after reduction: circular correlation
    # between any two output sites is Monte-Carlo small
    n = 10_000
    sites = [(0, 0), (0, 1), (1, 0), (1, 1), (2, 2), (-1, 2)]
    acc = np.zeros((len(sites), len(sites)), dtype=complex)
    for seed in range(n):
        reduced = reduce_phases(sample_node_phases(seed, 1, 2), 1, 2)
        vals = np.array([reduced.phase(*s) for s in sites])
        acc += np.outer(vals, np.conj(vals))
    acc /= n
    off_diag = acc - np.diag(np.diag(acc))
    assert np.max(np.abs(off_diag)) <= 0.05


def test_reduction_equivalence_with_full_model(lopsided):
    # conjugating the six-phase operator by the diagonal D2 must reproduce the
    # reduced-model operator on every interior row
    L, M = 2, 2
    nodes = sample_node_phases(13, L, M)
    reduced = reduce_phases(nodes, L, M)
    full_op = build_full_cylinder_operator(lopsided, nodes, L, M).to_dense()
    red_op = build_cylinder_operator(lopsided, reduced, L, M).to_dense()

    dim = 2 * M * (4 * L + 1)
    d2 = np.ones(dim, dtype=complex)
    op = build_cylinder_operator(lopsided, reduced, L, M)
    for c in range(-2 * L, 2 * L + 1):
        for m in range(2 * M):
            i = op.index(c, m)
            if c % 2 == 0 and m % 2 == 0:
                d2[i] = nodes.six(c, m)[2]
            elif c % 2 == 1 and m % 2 == 1:
                d2[i] = np.conj(nodes.six(c - 1, m - 1)[2])
            elif c % 2 == 0 and m % 2 == 1:
                d2[i] = nodes.six(c - 2, m - 1)[5]
            else:
                d2[i] = np.conj(nodes.six(c - 1, m - 2)[5])
    conjugated = d2[:, None] * full_op * np.conj(d2)[None, :]

    boundary_rows = {op.index(-2 * L, 2 * k + 2) for k in range(M)} | {
        op.index(2 * L, 2 * k + 1) for k in range(M)
    }
    interior = np.array([i not in boundary_rows for i in range(dim)])
    assert np.max(np.abs(conjugated[interior] - red_op[interior])) <= 1e-13


# ---------------------------------------------------------------------------
# finite operator


def test_operator_smallest_window_is_ring_shift(lopsided):
    # L = 0 leaves no interior node: both wall rules act on the single column
    # and U^D degenerates to the cyclic ring shift
    op = build_cylinder_operator(lopsided, sample_phase_field(3, 0, 1), 0, 1)
    assert np.allclose(op.to_dense(), [[0, 1], [1, 0]], atol=0)
    op2 = build_cylinder_operator(lopsided, sample_phase_field(3, 0, 2), 0, 2)
    dense = op2.to_dense()
    for m in range(4):
        assert dense[(m + 1) % 4, m] == 1.0


def test_operator_hand_assembled_m1_l1():
    # trivial phases, M = 1, L = 1: all entries written out from the node rules
    p = ModelParams(0.6, 0.8)
    phases = sample_phase_field(0, 1, 1)
    trivial = type(phases)(L=1, M=1, seed=0, values=np.ones_like(phases.values))
    op = build_cylinder_operator(p, trivial, 1, 1)
    r, t = 0.6, 0.8
    expected = np.zeros((10, 10), dtype=complex)
    expected[2, 0], expected[2, 3], expected[1, 0], expected[1, 3] = t, -r, r, t
    expected[6, 4], expected[6, 7], expected[5, 4], expected[5, 7] = t, -r, r, t
    expected[4, 5], expected[4, 2], expected[3, 5], expected[3, 2] = t, -r, r, t
    expected[8, 9], expected[8, 6], expected[7, 9], expected[7, 6] = t, -r, r, t
    expected[0, 1] = 1.0
    expected[9, 8] = 1.0
    assert np.array_equal(op.to_dense(), expected)
    assert op.unitarity_defect() <= 1e-14


@pytest.mark.parametrize("r,M,L", [(0.6, 1, 1), (0.6, 2, 2), (np.sqrt(0.5), 3, 2), (0.0, 2, 2), (1.0, 2, 2)])
def test_operator_unitary(r, M, L):
    p = ModelParams.from_r(r)
    op = build_cylinder_operator(p, sample_phase_field(11, L, M), L, M)
    assert op.unitarity_defect() <= 1e-12


def test_operator_band_structure_and_fill(lopsided):
    L, M = 2, 2
    op = build_cylinder_operator(lopsided, sample_phase_field(5, L, M), L, M)
    coo = op.matrix.tocoo()
    # band width one in the column index
    for i, j in zip(coo.row, coo.col):
        assert abs(op.site(i).column - op.site(j).column) <= 1
    # interior rows and columns carry two entries, the 2M wall rows/cols one
    row_counts = np.bincount(coo.row, minlength=op.dim)
    col_counts = np.bincount(coo.col, minlength=op.dim)
    boundary_rows = {op.index(-2 * L, 2 * k + 2) for k in range(M)} | {
        op.index(2 * L, 2 * k + 1) for k in range(M)
    }
    boundary_cols = {op.index(-2 * L, 2 * k + 1) for k in range(M)} | {
        op.index(2 * L, 2 * k) for k in range(M)
    }
    for i in range(op.dim):
        assert row_counts[i] == (1 if i in boundary_rows else 2)
        assert col_counts[i] == (1 if i in boundary_cols else 2)


def test_operator_window_mismatch_raises(lopsided):
    phases = sample_phase_field(1, 1, 2)
    with pytest.raises(ValueError):
        build_cylinder_operator(lopsided, phases, 2, 2)
    with pytest.raises(ValueError):
        build_cylinder_operator(lopsided, phases, 1, 3)


def test_apply_operator_boundary_rule(lopsided):
    L, M = 2, 2
    op = build_cylinder_operator(lopsided, sample_phase_field(9, L, M), L, M)
    v = np.zeros(op.dim, dtype=complex)
    v[op.index(-2 * L, 1)] = 1.0
    w = apply_operator(op, v)
    expected = np.zeros(op.dim, dtype=complex)
    expected[op.index(-2 * L, 2)] = 1.0
    assert np.array_equal(w, expected)
    v2 = np.zeros(op.dim, dtype=complex)
    v2[op.index(2 * L, 0)] = 1.0
    assert apply_operator(op, v2)[op.index(2 * L, 1)] == 1.0


def test_apply_operator_zero_and_norm(rng, lopsided):
    op = build_cylinder_operator(lopsided, sample_phase_field(2, 2, 2), 2, 2)
    assert np.all(apply_operator(op, np.zeros(op.dim)) == 0)
    v = rng.standard_normal(op.dim) + 1j * rng.standard_normal(op.dim)
    w = apply_operator(op, v)
    assert abs(np.linalg.norm(w) - np.linalg.norm(v)) <= 1e-12 * np.linalg.norm(v)
    with pytest.raises(ValueError):
        apply_operator(op, v[:-1])


# ---------------------------------------------------------------------------
# extreme cases


def _permutation_cycles(op):
    """Cycle decomposition of a one-entry-per-column operator."""
    dense = op.to_dense()
    nxt, weight = {}, {}
    for col in range(op.dim):
        idx = np.flatnonzero(np.abs(dense[:, col]) > 0)
        assert idx.size == 1
        nxt[col] = int(idx[0])
        weight[col] = dense[idx[0], col]
    seen, cycles = set(), []
    for start in range(op.dim):
        if start in seen:
            continue
        cyc, node = [], start
        while node not in seen:
            seen.add(node)
            cyc.append(node)
            node = nxt[node]
        cycles.append(cyc)
    return [(cyc, np.prod([weight[c] for c in cyc])) for cyc in cycles]


@pytest.mark.parametrize("r", [0.0, 1.0])
def test_extreme_block_check_exact(r):
    p = ModelParams.from_r(r)
    op = build_cylinder_operator(p, sample_phase_field(21, 2, 2), 2, 2)
    assert extreme_block_check(op) == 0.0


def test_extreme_block_check_rejects_transport(lopsided):
    op = build_cylinder_operator(lopsided, sample_phase_field(21, 1, 1), 1, 1)
    with pytest.raises(ValueError):
        extreme_block_check(op)


@pytest.mark.parametrize("r", [0.0, 1.0])
def test_extreme_spectrum_is_union_of_block_spectra(r):
    # oracle: with rt = 0 the operator is a weighted permutation, so its
    # spectrum is the union of len-th roots of each cycle weight
    from ccnet import eigendecompose

    p = ModelParams.from_r(r)
    op = build_cylinder_operator(p, sample_phase_field(8, 2, 2), 2, 2)
    expected = []
    for cyc, w in _permutation_cycles(op):
        n = len(cyc)
        base = np.log(w)
        expected.extend(np.exp((base + 2j * np.pi * np.arange(n)) / n))
    expected = np.sort_complex(np.asarray(expected))
    actual = np.sort_complex(eigendecompose(op, want_vectors=False).eigenvalues)
    assert np.max(np.abs(expected - actual)) <= 1e-10


def test_extreme_r0_interior_cycle_length_four():
    p = ModelParams.from_r(0.0)
    op = build_cylinder_operator(p, sample_phase_field(8, 1, 3), 1, 3)
    lengths = sorted(len(c) for c, _ in _permutation_cycles(op))
    # 2LM interior quadruples plus one ring cycle of length 2M at the wall
    assert lengths == [4] * (2 * 1 * 3) + [2 * 3]


def test_operator_triplet_export(lopsided):
    op = build_cylinder_operator(lopsided, sample_phase_field(4, 1, 1), 1, 1)
    trip = op.to_triplets()
    rebuilt = np.zeros((op.dim, op.dim), dtype=complex)
    for row, col, re, im in trip:
        rebuilt[int(row), int(col)] = re + 1j * im
    assert np.array_equal(rebuilt, op.to_dense())
