"""Builtin pseudo-Hermitian examples with closed-form adapted tubes.

heisenberg(n)
    coords (x_1..x_n, y_1..y_n, t), theta = dt + sum(x_j dy_j - y_j dx_j),
    embedded as the hypersurface Im w = |z|^2 / 2 via z_j = x_j + i y_j,
    w = t + i|z|^2/2.  Reeb extension: d/d(Re w).  Tube: (z, w + i sigma).
sphere(n)
    S^{2n+1} in C^{n+1} through inverse stereographic projection from
    (0, ..., 0, -i); theta is the restriction of sum(x_j dy_j - y_j dx_j).
    Reeb extension: q -> iq.  Tube: e^{-sigma} q.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import scalar
from .contact import ManifoldSpec

__all__ = ["Example", "EXAMPLES", "heisenberg", "sphere", "get_example", "list_examples"]


def heisenberg(n: int = 1) -> ManifoldSpec:
    xs = [f"x{j}" for j in range(1, n + 1)]
    ys = [f"y{j}" for j in range(1, n + 1)]
    coords = xs + ys + ["t"]
    theta = [f"-{y}" for y in ys] + list(xs) + ["1"]
    embedding = []
    for x, y in zip(xs, ys):
        embedding += [x, y]
    embedding += ["t", "(" + " + ".join(f"{x}^2 + {y}^2" for x, y in zip(xs, ys)) + ") / 2"]
    N = n + 1
    extension = ["0"] * (2 * N)
    extension[2 * N - 2] = "1"
    reeb = ["0"] * (2 * n) + ["1"]
    return ManifoldSpec.from_strings(
        f"heisenberg({n})",
        n,
        coords,
        theta,
        [[-1.0, 1.0]] * (2 * n + 1),
        embedding,
        extension,
        reeb=reeb,
    )


def sphere(n: int = 1) -> ManifoldSpec:
    m = 2 * n + 1
    s = [f"s{k}" for k in range(1, m + 1)]
    sq = " + ".join(f"{v}^2" for v in s)
    S = f"(1 + {sq})"
    embedding = [f"2*{v} / {S}" for v in s] + [f"(1 - ({sq})) / {S}"]
    # pullback of sum(x dy - y dx): pairs (s_{2j-1}, s_{2j}) for j <= n, then
    # the pair (2 s_m / S, (1 - |s|^2) / S)
    terms: list[list[str]] = [[] for _ in range(m)]
    for j in range(n):
        a, b = 2 * j, 2 * j + 1
        terms[a].append(f"-4*{s[b]}")
        terms[b].append(f"4*{s[a]}")
    for k in range(m):
        terms[k].append(f"-4*{s[m - 1]}*{s[k]}")
    terms[m - 1].append(f"-2*(1 - ({sq}))")
    theta = [f"({' + '.join(t)}) / {S}^2" for t in terms]
    extension = []
    for k in range(n + 1):
        extension += [f"-u{2 * k + 2}", f"u{2 * k + 1}"]
    return ManifoldSpec.from_strings(
        f"sphere({n})",
        n,
        s,
        theta,
        [[-1.2, 1.2]] * m,
        embedding,
        extension,
    )


def _heisenberg_tube(M: ManifoldSpec) -> Callable:
    emb = M.embedding

    def gamma(*xs):
        p, sigma = xs[:-1], xs[-1]
        out = [e(*p) for e in emb]
        out[-1] = out[-1] + sigma
        return out

    return gamma


def _sphere_tube(M: ManifoldSpec) -> Callable:
    emb = M.embedding

    def gamma(*xs):
        p, sigma = xs[:-1], xs[-1]
        scale = scalar.exp(-sigma)
        return [scale * e(*p) for e in emb]

    return gamma


@dataclass(frozen=True)
class Example:
    name: str
    build: Callable[[int], ManifoldSpec]
    tube_map: Callable[[ManifoldSpec], Callable]
    sigma_max: float
    # points whose Reeb orbits stay in the chart over |t| <= 0.5
    flow_box_fraction: float = 0.5

    def spec(self, n: int = 1) -> ManifoldSpec:
        return self.build(n)


EXAMPLES = {
    "heisenberg": Example("heisenberg", heisenberg, _heisenberg_tube, 0.5),
    "sphere": Example("sphere", sphere, _sphere_tube, 0.3),
}


def get_example(name: str) -> Example:
    try:
        return EXAMPLES[name]
    except KeyError:
        raise KeyError(f"unknown example {name!r}; known: {', '.join(EXAMPLES)}") from None


def list_examples(n: int = 1) -> list[tuple[str, int]]:
    return [(name, 2 * n + 1) for name in EXAMPLES]


def inner_box(box: np.ndarray, fraction: float) -> np.ndarray:
    """Box shrunk about its centre by ``fraction``."""
    box = np.asarray(box, dtype=float)
    mid = box.mean(axis=1)
    half = (box[:, 1] - box[:, 0]) / 2 * fraction
    return np.column_stack([mid - half, mid + half])
