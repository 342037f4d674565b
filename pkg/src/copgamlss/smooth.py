"""Design and penalty blocks for additive predictors.

A predictor is an intercept plus a sum of blocks ``Z_k beta_k``. Each block
keeps whatever it needs (levels, knots, constraint basis) to rebuild its
columns for new data, so a fitted model can predict on fresh covariates.

Block kinds
-----------
linear
    Numeric columns enter as they are; factors are dummy coded with the
    alphabetically first level dropped. Unpenalized.
spline
    Cubic B-spline basis with knots at quantiles of the covariate and the
    integrated squared second derivative as penalty. The sum-to-zero
    constraint over the observed rows is absorbed, leaving ``k - 1`` columns.
random
    One indicator column per level with an identity (ridge) penalty.
mrf
    One indicator column per region with the graph Laplacian of the
    neighbourhood structure as penalty, centred like a spline.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BSpline

from .exceptions import DegenerateInputError, DomainError

TERM_KINDS = ("linear", "spline", "random", "mrf")
DEFAULT_K = 10


def is_factor(col):
    return np.asarray(col).dtype.kind in "OUS"


def as_labels(col):
    """String labels for a factor or an integer-coded numeric column."""
    col = np.asarray(col)
    if is_factor(col):
        return col.astype(str)
    col = col.astype(float)
    if np.all(np.isfinite(col)) and np.all(col == np.round(col)):
        return np.array([str(int(c)) for c in col])
    return np.array([repr(float(c)) for c in col])


# ---------------------------------------------------------------------------
# adjacency


class Adjacency:
    """Undirected neighbourhood graph over named regions."""

    def __init__(self, neighbors):
        nb = {str(r): set(map(str, qs)) for r, qs in neighbors.items()}
        for r, qs in list(nb.items()):
            if r in qs:
                raise DomainError(f"region {r!r} lists itself as a neighbour")
            for q in qs:
                nb.setdefault(q, set())
        for r, qs in nb.items():
            for q in qs:
                if r not in nb[q]:
                    raise DomainError(f"adjacency is not symmetric: {r!r} ~ {q!r} but not {q!r} ~ {r!r}")
        self.neighbors = {r: frozenset(nb[r]) for r in sorted(nb)}

    @classmethod
    def from_edges(cls, edges, regions=()):
        nb = {str(r): set() for r in regions}
        for a, b in edges:
            a, b = str(a), str(b)
            if a == b:
                raise DomainError(f"region {a!r} lists itself as a neighbour")
            nb.setdefault(a, set()).add(b)
            nb.setdefault(b, set()).add(a)
        return cls(nb)

    @classmethod
    def read(cls, path):
        """Edge list file: ``regionA,regionB`` per line; a lone name declares an isolated region."""
        edges, regions = [], []
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = [p.strip() for p in line.split(",")]
                if len(parts) == 1:
                    regions.append(parts[0])
                elif len(parts) == 2 and all(parts):
                    edges.append(tuple(parts))
                else:
                    raise DomainError(f"{path}:{lineno}: expected 'regionA,regionB', got {line!r}")
        return cls.from_edges(edges, regions)

    @property
    def regions(self):
        return list(self.neighbors)

    @property
    def counts(self):
        return np.array([len(self.neighbors[r]) for r in self.regions])

    def laplacian(self):
        regions = self.regions
        index = {r: i for i, r in enumerate(regions)}
        D = np.zeros((len(regions), len(regions)))
        for r, qs in self.neighbors.items():
            i = index[r]
            D[i, i] = len(qs)
            for q in qs:
                D[i, index[q]] = -1.0
        return D

    def edges(self):
        return sorted((r, q) for r, qs in self.neighbors.items() for q in qs if r < q)


# ---------------------------------------------------------------------------
# blocks


def _sum_to_zero_basis(colsums):
    """Orthonormal basis ``M`` of ``{b : colsums @ b = 0}``."""
    q, _ = np.linalg.qr(colsums.reshape(-1, 1), mode="complete")
    return q[:, 1:]


@dataclass
class Block:
    """One additive term: basis ``Z`` (n x J) with penalty ``D`` (None if unpenalized)."""

    kind: str
    label: str
    column: str
    Z: np.ndarray
    D: np.ndarray = None
    centered: bool = False
    state: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    @property
    def width(self):
        return self.Z.shape[1]

    @property
    def penalized(self):
        return self.D is not None

    def matrix(self, col):
        """Rebuild this block's columns for new covariate values."""
        return _REBUILD[self.kind](self.state, col)


def _linear_rows(state, col):
    if state["levels"] is None:
        x = np.asarray(col, dtype=float)
        if not np.all(np.isfinite(x)):
            raise DomainError(f"non-finite values in column {state['column']!r}")
        return x.reshape(-1, 1)
    labels = as_labels(col)
    unknown = sorted(set(labels) - set(state["levels"]))
    if unknown:
        raise DomainError(f"column {state['column']!r}: unseen levels {unknown}")
    return np.column_stack([(labels == lev).astype(float) for lev in state["levels"][1:]])


def build_linear_block(col, name="x"):
    """Unpenalized parametric term; factors are dummy coded against their first level."""
    if is_factor(col):
        levels = sorted(set(as_labels(col)))
        if len(levels) < 2:
            raise DegenerateInputError(f"factor {name!r} has a single level")
        state = {"column": name, "levels": levels}
        label = name
    else:
        state = {"column": name, "levels": None}
        label = name
    Z = _linear_rows(state, col)
    block = Block("linear", label, name, Z, None, False, state)
    if np.linalg.matrix_rank(np.column_stack([np.ones(len(Z)), Z])) < Z.shape[1] + 1:
        block.warnings.append(f"linear term {name!r} is collinear with the intercept")
    return block


def _random_rows(state, col):
    labels = as_labels(col)
    return np.column_stack([(labels == lev).astype(float) for lev in state["levels"]])


def build_random_effect_block(col, name="g"):
    """Indicator columns for every level, shrunk towards zero by an identity penalty."""
    levels = sorted(set(as_labels(col)))
    if len(levels) < 2:
        raise DegenerateInputError(f"random effect {name!r} needs at least two levels, found {levels}")
    state = {"column": name, "levels": levels}
    Z = _random_rows(state, col)
    return Block("random", f"re({name})", name, Z, np.eye(len(levels)), False, state)


def _bspline_basis(knots, x, deriv=0):
    spl = BSpline(knots, np.eye(len(knots) - 4), 3, extrapolate=False)
    if deriv:
        spl = spl.derivative(deriv)
    return spl(x)


def _spline_raw(knots, x):
    """Basis rows, extended linearly beyond the boundary knots."""
    x = np.asarray(x, dtype=float)
    lo, hi = knots[3], knots[-4]
    inside = np.clip(x, lo, hi)
    B = _bspline_basis(knots, inside)
    B = np.nan_to_num(B)
    out_lo, out_hi = x < lo, x > hi
    if out_lo.any():
        B[out_lo] += (x[out_lo] - lo)[:, None] * _bspline_basis(knots, np.array([lo]), 1)
    if out_hi.any():
        # the derivative from the left at the last knot
        d = _bspline_basis(knots, np.array([hi - 1e-12 * max(1.0, abs(hi))]), 1)
        B[out_hi] += (x[out_hi] - hi)[:, None] * d
    return B


def _curvature_penalty(knots):
    """Exact integral of B_i'' B_j'' over the knot range (B'' is piecewise linear)."""
    breaks = np.unique(knots)
    nodes, weights = np.polynomial.legendre.leggauss(3)
    k = len(knots) - 4
    S = np.zeros((k, k))
    for a, b in zip(breaks[:-1], breaks[1:]):
        pts = 0.5 * (b - a) * nodes + 0.5 * (a + b)
        B2 = np.nan_to_num(_bspline_basis(knots, pts, 2))
        S += (B2 * (0.5 * (b - a) * weights)[:, None]).T @ B2
    return 0.5 * (S + S.T)


def _spline_rows(state, col):
    return _spline_raw(state["knots"], col) @ state["M"]


def build_spline_block(x, k=DEFAULT_K, name="x"):
    """Penalized cubic regression spline with ``k`` basis functions before centering."""
    x = np.asarray(x, dtype=float)
    if k < 4:
        raise DomainError(f"spline({name}) needs k >= 4, got {k}")
    if not np.all(np.isfinite(x)):
        raise DomainError(f"non-finite values in column {name!r}")
    ux = np.unique(x)
    if len(ux) < k:
        raise DegenerateInputError(f"spline({name}, {k}) needs at least {k} distinct values, found {len(ux)}")
    interior = np.quantile(ux, np.linspace(0.0, 1.0, k - 2)[1:-1])
    knots = np.concatenate([[ux[0]] * 4, interior, [ux[-1]] * 4])
    B = _spline_raw(knots, x)
    S = _curvature_penalty(knots)
    M = _sum_to_zero_basis(B.sum(axis=0))
    Z = B @ M
    D = M.T @ S @ M
    # put the penalty on the scale of Z'Z so that lambda = 1 is a moderate amount of smoothing
    scale = np.linalg.norm(Z.T @ Z) / np.linalg.norm(D)
    D = scale * D
    state = {"column": name, "knots": knots, "M": M, "k": int(k)}
    return Block("spline", f"s({name})", name, Z, 0.5 * (D + D.T), True, state)


def _mrf_rows(state, col):
    labels = as_labels(col)
    unknown = sorted(set(labels) - set(state["regions"]))
    if unknown:
        raise DomainError(f"column {state['column']!r}: regions {unknown} are not in the adjacency")
    Z = np.column_stack([(labels == r).astype(float) for r in state["regions"]])
    return Z @ state["M"]


def build_mrf_block(col, adjacency, name="region"):
    """Markov random field over the regions of ``adjacency``; unobserved regions are smoothed in."""
    if not isinstance(adjacency, Adjacency):
        adjacency = Adjacency(adjacency)
    labels = as_labels(col)
    regions = adjacency.regions
    unknown = sorted(set(labels) - set(regions))
    if unknown:
        raise DomainError(f"mrf({name}): regions {unknown} are not in the adjacency")
    if len(regions) < 2:
        raise DegenerateInputError(f"mrf({name}) needs at least two regions")
    raw = np.column_stack([(labels == r).astype(float) for r in regions])
    M = _sum_to_zero_basis(raw.sum(axis=0))
    state = {"column": name, "regions": regions, "M": M, "edges": adjacency.edges()}
    D = M.T @ adjacency.laplacian() @ M
    return Block("mrf", f"mrf({name})", name, raw @ M, 0.5 * (D + D.T), True, state)


_REBUILD = {
    "linear": _linear_rows,
    "spline": _spline_rows,
    "random": _random_rows,
    "mrf": _mrf_rows,
}


# ---------------------------------------------------------------------------
# terms and assembly


@dataclass(frozen=True)
class Term:
    """Declarative description of a block: ``kind(column[, k])``."""

    kind: str
    column: str
    k: int = DEFAULT_K

    def __post_init__(self):
        if self.kind not in TERM_KINDS:
            raise DomainError(f"unknown term kind {self.kind!r}; choose from {TERM_KINDS}")

    def __str__(self):
        if self.kind == "spline":
            return f"spline({self.column}, {self.k})"
        return f"{self.kind}({self.column})"


def build_block(term, data, adjacency=None):
    if term.column not in data:
        raise DomainError(f"term {term} refers to missing column {term.column!r}")
    col = data[term.column]
    if term.kind == "linear":
        return build_linear_block(col, term.column)
    if term.kind == "spline":
        if is_factor(col):
            raise DomainError(f"spline({term.column}) needs a numeric column")
        return build_spline_block(col, term.k, term.column)
    if term.kind == "random":
        return build_random_effect_block(col, term.column)
    if adjacency is None:
        raise DomainError(f"mrf({term.column}) needs an adjacency")
    return build_mrf_block(col, adjacency, term.column)


@dataclass
class Design:
    """Assembled predictor ``eta = Z beta`` with intercept in column 0."""

    Z: np.ndarray
    blocks: list
    slices: list

    @property
    def n_coef(self):
        return self.Z.shape[1]

    @property
    def penalties(self):
        """``(slice, D)`` for every penalized block, in order."""
        return [(s, b.D) for b, s in zip(self.blocks, self.slices) if b.penalized]

    @property
    def warnings(self):
        return [w for b in self.blocks for w in b.warnings]

    def penalty_matrix(self, lambdas):
        S = np.zeros((self.n_coef, self.n_coef))
        pens = self.penalties
        if len(lambdas) != len(pens):
            raise ValueError(f"expected {len(pens)} smoothing parameters, got {len(lambdas)}")
        for lam, (s, D) in zip(lambdas, pens):
            S[s, s] += lam * D
        return S

    def matrix(self, data, n=None):
        """Design rows for new data (same blocks, same constraints)."""
        if n is None:
            n = len(next(iter(data.values()))) if data else 0
        cols = [np.ones((n, 1))]
        for b in self.blocks:
            if b.column not in data:
                raise DomainError(f"new data lacks column {b.column!r}")
            cols.append(b.matrix(data[b.column]))
        return np.hstack(cols)


def assemble(terms, data, n=None, adjacency=None):
    """Build ``[1 | Z_1 | ... | Z_K]`` and the block layout for ``terms`` on ``data``."""
    if n is None:
        if not data:
            raise DomainError("cannot infer the number of rows from empty data")
        n = len(next(iter(data.values())))
    blocks = [build_block(t, data, adjacency) for t in terms]
    cols = [np.ones((n, 1))]
    slices = []
    start = 1
    for b in blocks:
        if b.Z.shape[0] != n:
            raise DomainError(f"block {b.label} has {b.Z.shape[0]} rows, expected {n}")
        cols.append(b.Z)
        slices.append(slice(start, start + b.width))
        start += b.width
    return Design(np.hstack(cols), blocks, slices)
