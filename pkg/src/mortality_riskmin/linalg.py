"""Small dense linear algebra over exact rationals (and a float fallback)."""
from __future__ import annotations

from typing import Sequence

import numpy as np


class SingularSystemError(np.linalg.LinAlgError):
    pass


def rref(rows: Sequence[Sequence]) -> tuple[list[list], list[int]]:
    """Reduced row echelon form by exact Gauss-Jordan elimination."""
    m = [list(r) for r in rows]
    n_rows = len(m)
    n_cols = len(m[0]) if m else 0
    pivots: list[int] = []
    r = 0
    for c in range(n_cols):
        if r == n_rows:
            break
        piv = next((i for i in range(r, n_rows) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        lead = m[r][c]
        if lead != 1:
            m[r] = [v / lead for v in m[r]]
        for i in range(n_rows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                row_r = m[r]
                m[i] = [a - f * b for a, b in zip(m[i], row_r)]
        pivots.append(c)
        r += 1
    return m, pivots


def _solve_exact(A, b):
    """Particular solution (free variables zero) and a null-space basis."""
    n = len(A[0])
    aug = [list(row) + [bi] for row, bi in zip(A, b)]
    R, pivots = rref(aug)
    if n in pivots:
        raise SingularSystemError("inconsistent linear system")
    zero = b[0] - b[0] if len(b) else 0
    x = [zero] * n
    for i, c in enumerate(pivots):
        x[c] = R[i][n]
    free = [c for c in range(n) if c not in pivots]
    null = []
    for f in free:
        v = [zero] * n
        v[f] = zero + 1
        for i, c in enumerate(pivots):
            v[c] = -R[i][f]
        null.append(v)
    return x, null


def solve_min_norm(A: Sequence[Sequence], b: Sequence, exact: bool = True) -> list:
    """Minimum-norm solution of a consistent system A x = b.

    In exact mode the solution is computed by Gauss-Jordan elimination and
    then projected orthogonally off the null space of A.
    """
    if not exact:
        A_ = np.asarray(A, dtype=float)
        b_ = np.asarray(b, dtype=float)
        return list(np.linalg.lstsq(A_, b_, rcond=None)[0])
    x, null = _solve_exact(A, b)
    if not null:
        return x
    k = len(null)
    gram = [[sum(u * v for u, v in zip(null[i], null[j])) for j in range(k)] for i in range(k)]
    rhs = [sum(u * v for u, v in zip(null[i], x)) for i in range(k)]
    y, rest = _solve_exact(gram, rhs)
    if rest:  # pragma: no cover - null basis vectors are independent
        raise SingularSystemError("degenerate null-space basis")
    return [xi - sum(y[j] * null[j][i] for j in range(k)) for i, xi in enumerate(x)]
