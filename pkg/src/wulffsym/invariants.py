"""Elementary symmetric invariants of square matrices.

For an n-by-n real matrix A (symmetry is never assumed), S_k(A) is the sum
of all k-by-k principal minors, equivalently the degree-(n-k) coefficient
invariant of det(t*I - A). The entrywise derivative d S_k / d A_ij is the
(k-1)-th Newton transformation; polarizing S_k over k matrix slots gives
the mixed discriminant. Every production evaluator here is paired with a
combinatorial oracle that expands the generalized Kronecker symbol
directly, so the two routes share no linear algebra.
"""

import itertools
import math
from functools import lru_cache

import numpy as np

from .errors import CostGuardError, DomainError

DELTA_MAX_DIM = 8
DELTA_MAX_ORDER = 5


def as_square_matrix(a) -> np.ndarray:
    """Validate and return a float64 square matrix."""
    m = np.asarray(a, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DomainError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError("matrix entries must be finite")
    return m


def _check_order(k: int, n: int, lo: int = 0):
    if not lo <= k <= n:
        raise DomainError(f"order k={k} outside [{lo}, {n}] for dimension {n}")


def sigma_k(lam, k: int) -> float:
    """k-th elementary symmetric function of a real vector (sigma_0 = 1)."""
    lam = np.asarray(lam, dtype=float)
    if lam.ndim != 1:
        raise DomainError("sigma_k expects a vector")
    if not np.all(np.isfinite(lam)):
        raise DomainError("vector entries must be finite")
    n = lam.shape[0]
    _check_order(k, n)
    # coefficient recursion for prod_i (1 + lam_i t); updates run high-to-low
    e = [1.0] + [0.0] * k
    for x in lam:
        for j in range(k, 0, -1):
            e[j] += x * e[j - 1]
    return float(e[k])


@lru_cache(maxsize=None)
def _perm_table(k: int):
    """All permutations of range(k) with their signs, as arrays."""
    perms = list(itertools.permutations(range(k)))
    signs = np.array([_perm_sign(p) for p in perms], dtype=float)
    return np.array(perms, dtype=np.intp), signs


def _perm_sign(perm) -> int:
    """Sign of a permutation given as a tuple of images of 0..k-1."""
    seen = [False] * len(perm)
    sign = 1
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def generalized_kronecker(bottom, top) -> int:
    """Generalized Kronecker symbol delta^{top}_{bottom}.

    +1 / -1 when the bottom indices are distinct and top is an even / odd
    rearrangement of them, 0 otherwise.
    """
    if len(set(bottom)) != len(bottom) or set(top) != set(bottom):
        return 0
    pos = {v: i for i, v in enumerate(bottom)}
    return _perm_sign(tuple(pos[t] for t in top))


def _guard(n: int, k: int):
    if n > DELTA_MAX_DIM or k > DELTA_MAX_ORDER:
        raise CostGuardError(
            f"delta-sum oracle limited to n <= {DELTA_MAX_DIM}, "
            f"k <= {DELTA_MAX_ORDER}; got n={n}, k={k}")


def sk(a, k: int) -> float:
    """S_k(A), the sum of all k-by-k principal minors.

    Production path: batched LU determinants of the principal submatrices
    for k <= n/2, coefficient recursion of the characteristic polynomial
    (Faddeev-LeVerrier) for larger k.
    """
    m = as_square_matrix(a)
    n = m.shape[0]
    _check_order(k, n)
    if k == 0:
        return 1.0
    if k <= n // 2:
        idx = np.array(list(itertools.combinations(range(n), k)), dtype=np.intp)
        minors = m[idx[:, :, None], idx[:, None, :]]
        return float(np.sum(np.linalg.det(minors)))
    return float(_char_poly_invariants(m)[k])


def _char_poly_invariants(m: np.ndarray) -> np.ndarray:
    """All S_0..S_n via the trace recursion k S_k = sum_j (-1)^{j-1} S_{k-j} tr(A^j)."""
    n = m.shape[0]
    traces = np.empty(n)
    cur = np.eye(n)
    for j in range(n):
        cur = cur @ m
        traces[j] = np.trace(cur)
    out = np.empty(n + 1)
    out[0] = 1.0
    for k in range(1, n + 1):
        acc = 0.0
        for j in range(1, k + 1):
            acc += (-1.0) ** (j - 1) * out[k - j] * traces[j - 1]
        out[k] = acc / k
    return out


def sk_delta_oracle(a, k: int) -> float:
    """S_k(A) by direct expansion of the generalized Kronecker symbol.

    The sum over ordered bottom tuples factors exactly through unordered
    index sets (each set is hit by k! orderings contributing equally,
    cancelling the 1/k! prefactor), so the oracle enumerates index sets
    and, per set, every signed permutation product. No LU, no recursion.
    """
    m = as_square_matrix(a)
    n = m.shape[0]
    _check_order(k, n)
    if k == 0:
        return 1.0
    _guard(n, k)
    perms, signs = _perm_table(k)
    cols = np.arange(k)
    total = []
    for subset in itertools.combinations(range(n), k):
        sub = m[np.ix_(subset, subset)]
        prods = np.prod(sub[cols[None, :], perms], axis=1)
        total.append(float(signs @ prods))
    return math.fsum(total)


def newton_transform(a, k: int) -> np.ndarray:
    """Newton transformation T with T_ij = d S_k(A) / d A_ij.

    Built by the recursion T_k = S_{k-1}(A) I - T_{k-1} A^T seeded with
    T_1 = I; each S_{k-1} comes from the principal-minor evaluator. The
    result is in general not symmetric.
    """
    m = as_square_matrix(a)
    n = m.shape[0]
    _check_order(k, n, lo=1)
    t = np.eye(n)
    for j in range(2, k + 1):
        t = sk(m, j - 1) * np.eye(n) - t @ m.T
    return t


def newton_transform_delta_oracle(a, k: int) -> np.ndarray:
    """Newton transformation by expanding the Kronecker-symbol sum.

    Entry (i, j) collects, over every index set T of size k containing i
    and j, the signed products of the bijections of T that send i to j,
    with the factor at slot i removed. Guarded combinatorial cost.
    """
    m = as_square_matrix(a)
    n = m.shape[0]
    _check_order(k, n, lo=1)
    _guard(n, k)
    out = np.zeros((n, n))
    for i in range(n):
        others = [x for x in range(n) if x != i]
        for rest in itertools.combinations(others, k - 1):
            support = sorted(rest + (i,))
            sources = [x for x in support if x != i]
            for j in support:
                remaining = [x for x in support if x != j]
                acc = 0.0
                for assign in itertools.permutations(remaining):
                    bij = {i: j}
                    bij.update(zip(sources, assign))
                    sign = _bijection_sign(support, bij)
                    prod = 1.0
                    for s in sources:
                        prod *= m[s, bij[s]]
                    acc += sign * prod
                out[i, j] += acc
    return out


def _bijection_sign(support, bij) -> int:
    pos = {v: idx for idx, v in enumerate(support)}
    return _perm_sign(tuple(pos[bij[s]] for s in support))


def mixed_discriminant(mats) -> float:
    """Mixed discriminant of k matrices of common dimension n.

    Literal signed sum over ordered tuples of distinct row indices and
    permuted column indices, divided by k!. Multilinear and totally
    symmetric in its arguments; with k equal arguments it reduces to S_k.
    """
    mats = [as_square_matrix(m) for m in mats]
    if not mats:
        raise DomainError("mixed discriminant needs at least one matrix")
    n = mats[0].shape[0]
    for m in mats[1:]:
        if m.shape[0] != n:
            raise DomainError("all matrices must share one dimension")
    k = len(mats)
    _check_order(k, n, lo=1)
    _guard(n, k)
    perms, signs = _perm_table(k)
    ordered = np.array(list(itertools.permutations(range(n), k)), dtype=np.intp)
    prods = np.ones((ordered.shape[0], perms.shape[0]))
    for slot in range(k):
        rows = ordered[:, slot]
        cols = ordered[:, perms[:, slot]]
        prods *= mats[slot][rows[:, None], cols]
    return float((prods @ signs).sum() / math.factorial(k))
