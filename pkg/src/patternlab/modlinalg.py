"""Small exact linear algebra: ranks over Q and F_p, kernels mod p, congruences mod N."""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence


def rank_rational(rows: Sequence[Sequence[int]]) -> int:
    mat = [[Fraction(v) for v in r] for r in rows if any(r)]
    if not mat:
        return 0
    ncols = len(mat[0])
    rank = 0
    for col in range(ncols):
        pivot = next((i for i in range(rank, len(mat)) if mat[i][col] != 0), None)
        if pivot is None:
            continue
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        p = mat[rank][col]
        for i in range(len(mat)):
            if i != rank and mat[i][col] != 0:
                f = mat[i][col] / p
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[rank])]
        rank += 1
        if rank == len(mat):
            break
    return rank


def in_rational_span(vector: Sequence[int], rows: Sequence[Sequence[int]]) -> bool:
    if not rows:
        return not any(vector)
    return rank_rational(list(rows) + [vector]) == rank_rational(rows)


def row_reduce_mod(rows: Sequence[Sequence[int]], p: int) -> tuple[list[list[int]], list[int]]:
    """Reduced row echelon form mod prime p; returns (rref rows, pivot columns)."""
    mat = [[v % p for v in r] for r in rows]
    if not mat:
        return [], []
    ncols = len(mat[0])
    pivots: list[int] = []
    r = 0
    for col in range(ncols):
        pivot = next((i for i in range(r, len(mat)) if mat[i][col]), None)
        if pivot is None:
            continue
        mat[r], mat[pivot] = mat[pivot], mat[r]
        inv = pow(mat[r][col], -1, p)
        mat[r] = [(v * inv) % p for v in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][col]:
                f = mat[i][col]
                mat[i] = [(a - f * b) % p for a, b in zip(mat[i], mat[r])]
        pivots.append(col)
        r += 1
        if r == len(mat):
            break
    return mat[:r], pivots


def rank_mod(rows: Sequence[Sequence[int]], p: int) -> int:
    return len(row_reduce_mod(rows, p)[1])


def kernel_mod(matrix: Sequence[Sequence[int]], p: int) -> list[list[int]]:
    """Basis of {v : matrix @ v = 0 mod p}."""
    if not matrix:
        return []
    ncols = len(matrix[0])
    rref, pivots = row_reduce_mod(matrix, p)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [0] * ncols
        v[f] = 1
        for row, pc in zip(rref, pivots):
            v[pc] = (-row[f]) % p
        basis.append(v)
    return basis


def smith_normal_form(matrix: Sequence[Sequence[int]]):
    """Return (P, D, Q) with P @ M @ Q = D diagonal; P, Q unimodular integer matrices."""
    m = len(matrix)
    n = len(matrix[0]) if m else 0
    A = [list(map(int, r)) for r in matrix]
    P = [[int(i == j) for j in range(m)] for i in range(m)]
    Q = [[int(i == j) for j in range(n)] for i in range(n)]

    def swap_rows(M, i, j):
        M[i], M[j] = M[j], M[i]

    def swap_cols(M, i, j):
        for row in M:
            row[i], row[j] = row[j], row[i]

    def add_row(M, src, dst, k):
        M[dst] = [a + k * b for a, b in zip(M[dst], M[src])]

    def add_col(M, src, dst, k):
        for row in M:
            row[dst] += k * row[src]

    t = 0
    while t < min(m, n):
        nz = [(abs(A[i][j]), i, j) for i in range(t, m) for j in range(t, n) if A[i][j]]
        if not nz:
            break
        _, i, j = min(nz)
        swap_rows(A, t, i)
        swap_rows(P, t, i)
        swap_cols(A, t, j)
        swap_cols(Q, t, j)
        done = False
        while not done:
            done = True
            for i in range(t + 1, m):
                if A[i][t]:
                    k = A[i][t] // A[t][t]
                    add_row(A, t, i, -k)
                    add_row(P, t, i, -k)
                    if A[i][t]:
                        swap_rows(A, t, i)
                        swap_rows(P, t, i)
                        done = False
            for j in range(t + 1, n):
                if A[t][j]:
                    k = A[t][j] // A[t][t]
                    add_col(A, t, j, -k)
                    add_col(Q, t, j, -k)
                    if A[t][j]:
                        swap_cols(A, t, j)
                        swap_cols(Q, t, j)
                        done = False
            if done:
                # divisibility condition: pivot must divide the remaining block
                bad = next(
                    ((i, j) for i in range(t + 1, m) for j in range(t + 1, n) if A[i][j] % A[t][t]),
                    None,
                )
                if bad is not None:
                    add_row(A, bad[0], t, 1)
                    add_row(P, bad[0], t, 1)
                    done = False
        if A[t][t] < 0:
            A[t] = [-v for v in A[t]]
            P[t] = [-v for v in P[t]]
        t += 1
    return P, A, Q


def solve_congruence(matrix: Sequence[Sequence[int]], rhs: Sequence[int], modulus: int):
    """Some integer x with matrix @ x = rhs (mod modulus), or None if unsolvable."""
    from math import gcd

    P, D, Q = smith_normal_form(matrix)
    m = len(matrix)
    n = len(matrix[0])
    b = [sum(P[i][k] * rhs[k] for k in range(m)) % modulus for i in range(m)]
    y = [0] * n
    for i in range(m):
        d = D[i][i] if i < n else 0
        if d == 0:
            if b[i] % modulus:
                return None
            continue
        g = gcd(d, modulus)
        if b[i] % g:
            return None
        mod_g = modulus // g
        y[i] = ((b[i] // g) * pow(d // g, -1, mod_g)) % mod_g if mod_g > 1 else 0
    return [sum(Q[i][k] * y[k] for k in range(n)) % modulus for i in range(n)]
