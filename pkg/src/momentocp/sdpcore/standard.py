"""Standard-form block SDPs and equality elimination.

A :class:`StandardSDP` is the solver's input: minimize c.x subject to
A0_b + sum_i x_i A_{i,b} >= 0 per block.  Each block stores its linear
map entrywise over a local variable set plus an affine map from the
decision vector to those locals, so that equality elimination only has to
rewrite the local-to-global maps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .schur import SchurData


class InfeasibleEqualities(Exception):
    """Equality system E v = f is inconsistent; carries the residual norm."""

    def __init__(self, residual: float):
        super().__init__(f"inconsistent equality system, residual {residual:.3e}")
        self.residual = residual


class Block:
    """One PSD block: A0 + unvec(entries . (zmap @ x)) >= 0.

    Entries are upper-triangle (i <= j) triplets referencing local
    variables; `zmap` maps the global decision vector to the local vector
    (None means the locals are a prefix-identity of the globals).
    """

    def __init__(self, name: str, size: int, I, J, var, w, n_local: int,
                 A0=None, zmap=None, gvars=None):
        self.name = name
        self.size = int(size)
        self.I = np.asarray(I, dtype=np.int32)
        self.J = np.asarray(J, dtype=np.int32)
        self.var = np.asarray(var, dtype=np.int64)
        self.w = np.asarray(w, dtype=float)
        self.n_local = int(n_local)
        self.A0 = np.zeros((size, size)) if A0 is None else np.asarray(A0, dtype=float)
        # zmap: (n_local, n_global) sparse/dense; gvars: locals are globals[gvars]
        self.zmap = zmap
        self.gvars = None if gvars is None else np.asarray(gvars, dtype=np.int64)
        if not np.all(self.I <= self.J):
            raise ValueError("entries must be upper-triangle (i <= j)")
        self._scatter = None
        self._schur = None
        self._adj_w = None

    # -- local/global plumbing ----------------------------------------------

    def locals_of(self, x: np.ndarray) -> np.ndarray:
        if self.zmap is not None:
            return np.asarray(self.zmap @ x).ravel()
        if self.gvars is not None:
            return x[self.gvars]
        return x[: self.n_local]

    def to_global(self, g_local: np.ndarray, n: int) -> np.ndarray:
        if self.zmap is not None:
            return np.asarray(self.zmap.T @ g_local).ravel() if sp.issparse(self.zmap) \
                else self.zmap.T @ g_local
        out = np.zeros(n)
        if self.gvars is not None:
            np.add.at(out, self.gvars, g_local)
        else:
            out[: self.n_local] = g_local
        return out

    # -- realizations ---------------------------------------------------------

    def _ensure_scatter(self):
        if self._scatter is None:
            s = self.size
            rows = np.concatenate([self.I * s + self.J, self.J * s + self.I])
            cols = np.concatenate([self.var, self.var])
            vals = np.concatenate([self.w, self.w])
            # diagonal entries appear twice above; halve them
            dup = np.concatenate([self.I == self.J, self.I == self.J])
            vals = np.where(dup, 0.5 * vals, vals)
            self._scatter = sp.csr_matrix(
                (vals, (rows, cols)), shape=(s * s, self.n_local)
            )

    def realize(self, x: np.ndarray) -> np.ndarray:
        """S_b(x) as a dense symmetric matrix."""
        self._ensure_scatter()
        ell = self.locals_of(x)
        return self.A0 + (self._scatter @ ell).reshape(self.size, self.size)

    def adjoint(self, X: np.ndarray, n: int) -> np.ndarray:
        """Gradient of <X, S_b(x)> with respect to x."""
        if self._adj_w is None:
            self._adj_w = self.w * np.where(self.I == self.J, 1.0, 2.0)
        g_local = np.bincount(
            self.var, weights=self._adj_w * X[self.I, self.J], minlength=self.n_local
        )
        return self.to_global(g_local, n)

    def schur_contribution(self, W: np.ndarray, H: np.ndarray):
        """Accumulate Z^T tr(A W A W) Z into the global Schur matrix."""
        if self._schur is None:
            self._schur = SchurData(self.I, self.J, self.var, self.w, self.n_local)
        Hl = self._schur.schur(W)
        if self.zmap is not None:
            Z = self.zmap
            if sp.issparse(Z):
                H += np.asarray(Z.T @ (Hl @ Z))
            else:
                H += Z.T @ (Hl @ Z)
        elif self.gvars is not None:
            H[np.ix_(self.gvars, self.gvars)] += Hl
        else:
            H[: self.n_local, : self.n_local] += Hl
        return H

    def var_matrices(self, n: int):
        """Yield (global_var, dense coefficient matrix) pairs; for export."""
        s = self.size
        if self.zmap is not None:
            Z = self.zmap.tocsr() if sp.issparse(self.zmap) else self.zmap
            mats = {}
            for e in range(self.I.size):
                i, j, lv, w = self.I[e], self.J[e], self.var[e], self.w[e]
                if sp.issparse(Z):
                    row = Z.getrow(lv)
                    cols, vals = row.indices, row.data
                else:
                    cols = np.nonzero(Z[lv])[0]
                    vals = Z[lv, cols]
                for g, zv in zip(cols, vals):
                    M = mats.setdefault(int(g), np.zeros((s, s)))
                    M[i, j] += w * zv
                    if i != j:
                        M[j, i] += w * zv
            yield from sorted(mats.items())
        else:
            gv = self.gvars if self.gvars is not None else np.arange(self.n_local)
            mats = {}
            for e in range(self.I.size):
                g = int(gv[self.var[e]])
                M = mats.setdefault(g, np.zeros((s, s)))
                i, j, w = self.I[e], self.J[e], self.w[e]
                M[i, j] += w
                if i != j:
                    M[j, i] += w
            yield from sorted(mats.items())


@dataclass
class StandardSDP:
    """min c.x subject to per-block LMIs; `offset` is added to reported objectives."""

    n: int
    c: np.ndarray
    blocks: list
    offset: float = 0.0

    @classmethod
    def from_matrices(cls, c, block_data, offset: float = 0.0) -> "StandardSDP":
        """Build from explicit (A0, [A_1..A_n]) dense matrices per block."""
        c = np.asarray(c, dtype=float)
        n = c.size
        blocks = []
        for bi, (A0, As) in enumerate(block_data):
            A0 = np.asarray(A0, dtype=float)
            s = A0.shape[0]
            if len(As) != n:
                raise ValueError("need one coefficient matrix per variable")
            I, J, V, W = [], [], [], []
            for v, Ai in enumerate(As):
                Ai = np.asarray(Ai, dtype=float)
                if not np.allclose(Ai, Ai.T, atol=1e-12):
                    raise ValueError("coefficient matrices must be symmetric")
                for i in range(s):
                    for j in range(i, s):
                        if Ai[i, j] != 0.0:
                            I.append(i)
                            J.append(j)
                            V.append(v)
                            W.append(Ai[i, j])
            blocks.append(Block(f"block{bi}", s, I, J, V, W, n_local=n, A0=A0))
        return cls(n=n, c=c, blocks=blocks, offset=offset)


@dataclass
class SDPProblem:
    """Assembled moment relaxation: blocks over v = (y, y_T), equalities, objective.

    `meta` carries relaxation bookkeeping (variable spaces, scaling maps,
    census) used by callers; the solver layer ignores it.
    """

    n: int
    c: np.ndarray
    blocks: list
    E: sp.csr_matrix | None = None
    f: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n_equalities(self) -> int:
        return 0 if self.E is None else self.E.shape[0]


@dataclass
class RecoveryMap:
    """Affine reconstruction v = v0 + Z x of the eliminated vector."""

    v0: np.ndarray
    Z: object  # sparse or dense (n_v, n_x)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.v0 + np.asarray(self.Z @ x).ravel()


def _rewrite_blocks(blocks, v0, Z, sparse: bool):
    out = []
    for b in blocks:
        gv = b.gvars if b.gvars is not None else np.arange(b.n_local)
        if b.zmap is not None:
            raise ValueError("cannot eliminate twice")
        zb = Z[gv, :]
        off = v0[gv]
        # fold the affine offset into the constant matrix
        s = b.size
        A0 = b.A0.copy()
        vals = b.w * off[b.var]
        np.add.at(A0, (b.I, b.J), vals)
        mask = b.I != b.J
        np.add.at(A0, (b.J[mask], b.I[mask]), vals[mask])
        nb = Block(
            b.name, s, b.I, b.J, b.var, b.w, b.n_local, A0=A0,
            zmap=(zb.tocsr() if sparse else np.asarray(zb)),
        )
        # identity-slice detection: keep the fast accumulation path
        if sparse and zb.shape[0] <= zb.shape[1]:
            zcoo = zb.tocoo()
            if (
                zcoo.nnz == zb.shape[0]
                and np.array_equal(zcoo.row, np.arange(zb.shape[0]))
                and np.all(zcoo.data == 1.0)
            ):
                nb.zmap = None
                nb.gvars = zcoo.col.astype(np.int64)
        out.append(nb)
    return out


def eliminate_equalities(p: SDPProblem, method: str = "auto"):
    """Parameterize the equality set E v = f as v = v0 + Z x and substitute.

    method='qr' uses a rank-revealing orthogonal factorization (dense, for
    desk-size systems); 'pivot' performs sparse Gaussian elimination and
    keeps the blocks' variable maps sparse, which is what makes larger
    relaxations tractable; 'auto' picks by size.  Returns the reduced
    :class:`StandardSDP` and a :class:`RecoveryMap`.  Raises
    :class:`InfeasibleEqualities` when the system is inconsistent.
    """
    n = p.n
    if p.E is None or p.E.shape[0] == 0:
        sdp = StandardSDP(n=n, c=np.asarray(p.c, dtype=float), blocks=list(p.blocks))
        return sdp, RecoveryMap(np.zeros(n), sp.identity(n, format="csr"))

    if method == "auto":
        method = "qr" if n <= 600 else "pivot"
    if method == "qr":
        v0, Z = _qr_nullspace(p.E.toarray(), np.asarray(p.f, dtype=float))
        blocks = _rewrite_blocks(p.blocks, v0, Z, sparse=False)
        Zc = Z
    elif method == "pivot":
        v0, Zs = _pivot_eliminate(p.E, np.asarray(p.f, dtype=float))
        blocks = _rewrite_blocks(p.blocks, v0, Zs, sparse=True)
        Zc = Zs
    else:
        raise ValueError(f"unknown elimination method {method!r}")

    c = np.asarray(p.c, dtype=float)
    c_red = np.asarray(Zc.T @ c).ravel()
    offset = float(c @ v0)
    sdp = StandardSDP(n=c_red.size, c=c_red, blocks=blocks, offset=offset)
    return sdp, RecoveryMap(v0, Zc)


def _qr_nullspace(E: np.ndarray, f: np.ndarray):
    """Null-space basis of E by full QR of E^T, rank tolerance 1e-10 * ||E||."""
    import scipy.linalg as sla

    k, n = E.shape
    Q, R = sla.qr(E.T, mode="full")
    diag = np.abs(np.diag(R)) if min(R.shape) else np.array([])
    tol = 1e-10 * max(1.0, sla.norm(E))
    rank = int(np.sum(diag > tol))
    Z = Q[:, rank:]
    v0, *_ = sla.lstsq(E, f)
    resid = sla.norm(E @ v0 - f)
    if resid > 1e-8 * (1.0 + sla.norm(f)):
        raise InfeasibleEqualities(resid)
    return v0, Z


def _pivot_eliminate(E: sp.spmatrix, f: np.ndarray):
    """Sparse Gaussian elimination with fill-averse pivoting.

    Prefers pivot columns that appear in few rows (the Liouville system's
    terminal-moment columns are singletons, so the common case eliminates
    with no fill at all).
    """
    E = E.tocsr()
    k, n = E.shape
    col_counts = np.asarray((E != 0).sum(axis=0)).ravel()
    scale = max(1.0, float(np.max(np.abs(E.data))) if E.nnz else 1.0)

    pivots = []  # (col, rowdict, rhs) in creation order
    pivot_of_col = {}
    for r in range(k):
        lo, hi = E.indptr[r], E.indptr[r + 1]
        row = dict(zip(E.indices[lo:hi].tolist(), E.data[lo:hi].tolist()))
        rhs = float(f[r])
        # reduce against existing pivots
        changed = True
        while changed:
            changed = False
            for c in list(row):
                if c in pivot_of_col:
                    prow, prhs = pivots[pivot_of_col[c]][1], pivots[pivot_of_col[c]][2]
                    factor = row[c] / prow[c]
                    for cc, vv in prow.items():
                        row[cc] = row.get(cc, 0.0) - factor * vv
                        if abs(row[cc]) < 1e-14 * scale:
                            del row[cc]
                    rhs -= factor * prhs
                    changed = True
                    break
        if not row:
            if abs(rhs) > 1e-8 * (1.0 + float(np.max(np.abs(f)))):
                raise InfeasibleEqualities(abs(rhs))
            continue
        maxabs = max(abs(v) for v in row.values())
        candidates = [c for c, v in row.items() if abs(v) >= 0.1 * maxabs]
        piv = min(candidates, key=lambda c: (col_counts[c], -abs(row[c])))
        pivot_of_col[piv] = len(pivots)
        pivots.append((piv, row, rhs))

    free_cols = np.array(sorted(set(range(n)) - set(pivot_of_col)), dtype=np.int64)
    free_pos = {int(c): i for i, c in enumerate(free_cols)}
    nf = free_cols.size

    # back-substitute pivot expressions over the free variables
    expr = {}  # col -> (const, dict free_pos -> coef)
    for piv, row, rhs in reversed(pivots):
        const = rhs
        lin: dict = {}
        pc = row[piv]
        for c, v in row.items():
            if c == piv:
                continue
            if c in free_pos:
                lin[free_pos[c]] = lin.get(free_pos[c], 0.0) - v
            else:
                ec, el = expr[c]
                const -= v * ec
                for fidx, fv in el.items():
                    lin[fidx] = lin.get(fidx, 0.0) - v * fv
        expr[piv] = (const / pc, {i: v / pc for i, v in lin.items() if v != 0.0})

    v0 = np.zeros(n)
    rows, cols, vals = [], [], []
    for i, c in enumerate(free_cols):
        rows.append(c)
        cols.append(i)
        vals.append(1.0)
    for c, (const, lin) in expr.items():
        v0[c] = const
        for fidx, fv in lin.items():
            rows.append(c)
            cols.append(fidx)
            vals.append(fv)
    Z = sp.csr_matrix((vals, (rows, cols)), shape=(n, nf))
    return v0, Z
