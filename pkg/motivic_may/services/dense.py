"""Dense GF(2) recomputation of single cells, used to cross-check the F2[tau] machinery.

Each weight slice of a cell is an F2-vector space with basis
``tau^(a_i - w) m_i`` for the E1 monomials ``m_i`` of weight ``a_i >= w``, so
a homogeneous vector of weight at least ``w`` becomes a 0/1 row with the same
support.  Ranks and kernels are then plain Gaussian elimination with XOR row
operations on numpy uint8 arrays.
"""

from typing import Dict, List, Sequence

import numpy as np

from motivic_may.services.coeff import HVec


def gf2_rref(M, n_pivot_cols=None):
    """Reduced row-echelon form of a binary matrix and its pivot columns."""
    R = (np.asarray(M, dtype=np.uint8) % 2).copy()
    if R.ndim != 2:
        raise ValueError("expected a two-dimensional matrix")
    m, n = R.shape
    if n_pivot_cols is None:
        n_pivot_cols = n
    pivot_cols: List[int] = []
    pivot_row = 0
    for col in range(n_pivot_cols):
        if pivot_row >= m:
            break
        nonzero = np.nonzero(R[pivot_row:, col])[0]
        if nonzero.size == 0:
            continue
        found = pivot_row + int(nonzero[0])
        if found != pivot_row:
            R[[pivot_row, found]] = R[[found, pivot_row]]
        for row in np.nonzero(R[:, col])[0]:
            if row != pivot_row:
                R[row] ^= R[pivot_row]
        pivot_cols.append(col)
        pivot_row += 1
    return R, pivot_cols


def gf2_rank(M) -> int:
    M = np.asarray(M, dtype=np.uint8)
    if M.size == 0:
        return 0
    return len(gf2_rref(M)[1])


def gf2_nullspace(A) -> np.ndarray:
    """Basis (as rows) of the right kernel {x : A x = 0}."""
    A = np.asarray(A, dtype=np.uint8)
    n = A.shape[1]
    if A.shape[0] == 0:
        return np.eye(n, dtype=np.uint8)
    R, pivots = gf2_rref(A)
    free = [c for c in range(n) if c not in set(pivots)]
    basis = np.zeros((len(free), n), dtype=np.uint8)
    for k, c in enumerate(free):
        basis[k, c] = 1
        for row, p in enumerate(pivots):
            if R[row, c]:
                basis[k, p] = 1
    return basis


def _rows(vectors: Sequence[HVec], weight: int, width: int) -> np.ndarray:
    """Weight slice of a list of homogeneous vectors as a 0/1 matrix."""
    picked = [v for v in vectors if v.weight >= weight]
    out = np.zeros((len(picked), width), dtype=np.uint8)
    for k, vec in enumerate(picked):
        for i in vec.support:
            out[k, i] = 1
    return out


def _weights(seq, cell, page) -> List[int]:
    if not seq.profile.uses_tau:
        return [0]
    rows = seq.rows(cell).weights
    if not rows:
        return []
    low = list(rows)
    pc = page.get(cell)
    if pc is not None:
        low += pc.b.weights() + (pc.z.weights() if pc.z is not None else [])
    return list(range(min(low), max(rows) + 1))


def _first_page(seq, cell, weights) -> Dict[int, int]:
    rows = seq.rows(cell)
    out = {}
    for w in weights:
        out[w] = sum(1 for a in rows.weights if a >= w or not seq.profile.uses_tau)
    return out


def _second_page(seq, cell, weights) -> Dict[int, int]:
    """E2 from scratch: n_w - rank(d1 out of the cell) - rank(d1 into the cell)."""
    source = seq.source(cell)
    target = seq.target(cell)

    def d1_vectors(c, into):
        rows = seq.rows(c)
        vecs = []
        for mono, a in zip(rows.monomials, rows.weights):
            image = seq.e1.differential(mono)
            vecs.append(seq.vector(image, into, a) if into[0] >= 0 and into[1] >= 0 else HVec(a))
        return vecs

    out_vecs = d1_vectors(cell, target)
    in_vecs = d1_vectors(source, cell) if source[0] >= 0 and source[1] >= 0 else []
    n_t = len(seq.rows(target).monomials) if target[0] >= 0 and target[1] >= 0 else 0
    n_c = len(seq.rows(cell).monomials)
    total = _first_page(seq, cell, weights)
    return {w: total[w] - gf2_rank(_rows(out_vecs, w, n_t)) - gf2_rank(_rows(in_vecs, w, n_c))
            for w in weights}


def recompute_cell(seq, r: int, s: int, f: int) -> Dict[int, int]:
    """F2-dimension of E_r(s, f) in each weight of the cell."""
    from motivic_may.services.pages import PAGE_KEYS, page_key

    key = page_key(r)
    cell = (s, f)
    if cell not in seq.core:
        raise ValueError(f"cell {cell} is outside the computed range")
    weights = _weights(seq, cell, seq.page(key))
    if key == 1:
        return _first_page(seq, cell, weights)
    if key == 2:
        return _second_page(seq, cell, weights)

    prev = PAGE_KEYS[PAGE_KEYS.index(key) - 1]
    if seq.data.rule(prev).is_empty():
        return recompute_cell(seq, prev, s, f)
    page = seq.page(prev)
    target = seq.target(cell)
    source = seq.source(cell)
    reps, values = seq.ingest_dr(prev, cell)
    _, incoming = seq.ingest_dr(prev, source) if source in seq.core or source in seq.source_only else ([], [])
    n_c = len(seq.rows(cell).monomials)
    n_t = len(seq.rows(target).monomials) if target in page else 0
    b_cell = page[cell].b.basis()
    b_target = page[target].b.basis() if target in page else []

    out: Dict[int, int] = {}
    for w in weights:
        picked = [i for i, v in enumerate(reps) if v.weight >= w]
        R = _rows([reps[i] for i in picked], w, n_c)
        D = _rows([values[i] for i in picked], w + seq.dw, n_t) if n_t else np.zeros((len(picked), 0), np.uint8)
        BT = _rows(b_target, w + seq.dw, n_t) if n_t else np.zeros((0, 0), np.uint8)
        stacked = np.vstack([D, BT]) if n_t else np.zeros((len(picked), 0), np.uint8)
        kernel = gf2_nullspace(stacked.T) if stacked.shape[0] else np.zeros((0, 0), np.uint8)
        alphas = kernel[:, :len(picked)] if kernel.size else np.zeros((0, len(picked)), np.uint8)
        cycles = (alphas.astype(np.int64) @ R.astype(np.int64) % 2).astype(np.uint8) if len(picked) \
            else np.zeros((0, n_c), np.uint8)
        BC = _rows(b_cell, w, n_c)
        z_dim = gf2_rank(np.vstack([BC, cycles]))
        b_dim = gf2_rank(np.vstack([BC, _rows(incoming, w, n_c)]))
        out[w] = z_dim - b_dim
    return out
