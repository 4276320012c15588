"""Graded meshes on (0, S] and discrete accumulated-mass fields.

The equation degenerates at ``s = 0``, so the leftmost node ``s_min`` is
always strictly positive; a point mass at the origin is only ever
extrapolated, never stored at a node.  Geometric grading keeps resolution
near the origin: the first cell has width ``s_min`` and each subsequent cell
grows by a constant ratio solved so the cells sum to ``S - s_min``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq


class GridError(ValueError):
    pass


DIRICHLET_ZERO = "dirichlet-zero"
FREE = "free"


@dataclass(frozen=True)
class Grid:
    nodes: np.ndarray  # strictly increasing, nodes[-1] == S
    mode: str  # "uniform" or "geometric"
    ratio: float  # cell ratio (1.0 for uniform)

    def __post_init__(self):
        s = self.nodes
        if s.ndim != 1 or s.size < 3:
            raise GridError("grid needs at least 3 nodes")
        if s[0] <= 0.0:
            raise GridError("leftmost node must be positive")
        if np.any(np.diff(s) <= 0.0):
            raise GridError("nodes must be strictly increasing")
        object.__setattr__(self, "nodes", np.ascontiguousarray(s, dtype=float))
        self.nodes.setflags(write=False)

    @property
    def M(self) -> int:
        return self.nodes.size

    @property
    def S(self) -> float:
        return float(self.nodes[-1])

    @property
    def s_min(self) -> float:
        return float(self.nodes[0])

    def cells(self) -> np.ndarray:
        return np.diff(self.nodes)


def build_grid(M: int, S: float, s_min: float, mode: str = "geometric",
               ratio: float | None = None) -> Grid:
    """Mesh with ``M`` nodes on ``[s_min, S]``.

    Geometric mode sets the first cell width to ``s_min`` and solves the cell
    ratio ``q`` from ``s_min * (q**(M-1) - 1)/(q - 1) = S - s_min`` by
    bracketed root finding (unless ``ratio`` is given explicitly).
    """
    if M < 8 and mode == "geometric" and ratio is None:
        # small explicit-ratio grids are allowed for tests
        raise GridError("geometric ratio solve needs M >= 8; pass ratio explicitly")
    if not (0.0 < s_min < S):
        raise GridError(f"need 0 < s_min < S, got s_min={s_min}, S={S}")

    if mode == "uniform":
        nodes = np.linspace(s_min, S, M)
        nodes[-1] = S
        return Grid(nodes, "uniform", 1.0)

    if mode != "geometric":
        raise GridError(f"unknown grid mode {mode!r}")

    ncell = M - 1
    total = S - s_min
    if ratio is None:
        # total(q) = s_min * (q**ncell - 1)/(q - 1), increasing in q
        def defect(q):
            return s_min * np.expm1(ncell * np.log(q)) / (q - 1.0) - total

        if s_min * ncell >= total:
            q = 1.0 + 1e-15  # effectively uniform
        else:
            lo, hi = 1.0 + 1e-14, 2.0
            while defect(hi) < 0.0:
                hi *= 2.0
                if hi > 1e6:
                    raise GridError("geometric ratio solve failed to bracket")
            q = brentq(defect, lo, hi, xtol=1e-15, rtol=8.9e-16)
    else:
        q = float(ratio)
        if q < 1.0:
            raise GridError("cell ratio must be >= 1")

    if abs(q - 1.0) < 1e-12:
        nodes = np.linspace(s_min, S, M)
    else:
        i = np.arange(M, dtype=float)
        h1 = total * (q - 1.0) / (q**ncell - 1.0)
        nodes = s_min + h1 * (q**i - 1.0) / (q - 1.0)
    nodes[0] = s_min
    nodes[-1] = S
    return Grid(nodes, "geometric", q)


@dataclass
class WField:
    """Accumulated-mass profile sampled on a grid at one time."""

    grid: Grid
    w: np.ndarray
    t: float = 0.0
    left_mode: str = DIRICHLET_ZERO

    def __post_init__(self):
        if self.left_mode not in (DIRICHLET_ZERO, FREE):
            raise GridError(f"unknown left boundary mode {self.left_mode!r}")
        self.w = np.asarray(self.w, dtype=float)
        if self.w.shape != self.grid.nodes.shape:
            raise GridError("field shape does not match grid")

    def copy(self) -> "WField":
        return WField(self.grid, self.w.copy(), self.t, self.left_mode)

    def check_bounds(self, mass_fraction: float, tol: float = 1e-9) -> float:
        """Largest excursion outside [0, mass_fraction] (0 when clean)."""
        lo = float(np.min(self.w))
        hi = float(np.max(self.w))
        return max(0.0, -lo, hi - mass_fraction)


def _fd_weights(x: np.ndarray, x0: float, der: int) -> np.ndarray:
    """Finite-difference weights for the ``der``-th derivative at ``x0``
    from arbitrary nodes ``x`` (Fornberg's recursion)."""
    n = len(x)
    w = np.zeros((der + 1, n))
    w[0, 0] = 1.0
    c1 = 1.0
    c4 = x[0] - x0
    for i in range(1, n):
        mn = min(i, der)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    w[k, i] = c1 * (k * w[k - 1, i - 1] - c5 * w[k, i - 1]) / c2
                w[0, i] = -c1 * c5 * w[0, i - 1] / c2
            for k in range(mn, 0, -1):
                w[k, j] = ((x[i] - x0) * w[k, j] - k * w[k - 1, j]) / c3
            w[0, j] = (x[i] - x0) * w[0, j] / c3
        c1 = c2
    return w[der]


def derivative_weights(nodes: np.ndarray):
    """Stencil weights for first and second derivatives on a nonuniform mesh.

    Interior nodes use the standard 3-point central formulas (second-order
    for w_s, exact on quadratics for w_ss); the two end nodes use one-sided
    stencils of matching order (3 points for w_s, 4 for w_ss).
    """
    s = np.asarray(nodes, dtype=float)
    hl = s[1:-1] - s[:-2]
    hr = s[2:] - s[1:-1]
    ws_l = -hr / (hl * (hl + hr))
    ws_c = (hr - hl) / (hl * hr)
    ws_r = hl / (hr * (hl + hr))
    wss_l = 2.0 / (hl * (hl + hr))
    wss_c = -2.0 / (hl * hr)
    wss_r = 2.0 / (hr * (hl + hr))
    ends = {
        "ws_first": _fd_weights(s[:3], s[0], 1),
        "ws_last": _fd_weights(s[-3:], s[-1], 1),
        "wss_first": _fd_weights(s[:4], s[0], 2),
        "wss_last": _fd_weights(s[-4:], s[-1], 2),
    }
    return (ws_l, ws_c, ws_r), (wss_l, wss_c, wss_r), ends


def differentiate(field: WField):
    """Discrete (w_s, w_ss) on the field's mesh."""
    s = field.grid.nodes
    w = field.w
    (al, ac, ar), (bl, bc, br), ends = derivative_weights(s)
    ws = np.empty_like(w)
    wss = np.empty_like(w)
    ws[1:-1] = al * w[:-2] + ac * w[1:-1] + ar * w[2:]
    wss[1:-1] = bl * w[:-2] + bc * w[1:-1] + br * w[2:]
    ws[0] = ends["ws_first"] @ w[:3]
    ws[-1] = ends["ws_last"] @ w[-3:]
    wss[0] = ends["wss_first"] @ w[:4]
    wss[-1] = ends["wss_last"] @ w[-4:]
    return ws, wss
