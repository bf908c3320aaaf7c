"""Nilpotent groups in exponential coordinates and their dilation semidirect products.

Two groups are supported: Euclidean shifts of R^n (step 1) and the Heisenberg
group H^n (step 2) with coordinates ordered ``(s, x_1..x_n, y_1..y_n)``.
All operations broadcast over leading axes, so a stack of points of shape
``(..., dim)`` can be composed, inverted or dilated in one call.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

EUCLIDEAN = "euclidean"
HEISENBERG = "heisenberg"


@dataclass(frozen=True)
class Group:
    """Descriptor of a graded nilpotent group."""

    kind: str
    n: int

    def __post_init__(self):
        if self.kind not in (EUCLIDEAN, HEISENBERG):
            raise ValueError(f"unknown group kind {self.kind!r}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"group parameter n must be a positive integer, got {self.n!r}")

    @property
    def dim(self) -> int:
        return self.n if self.kind == EUCLIDEAN else 2 * self.n + 1

    @property
    def layers(self) -> list[int]:
        """Dimensions of the graded layers V_1, V_2, ..."""
        return [self.n] if self.kind == EUCLIDEAN else [2 * self.n, 1]

    @property
    def homogeneous_dim(self) -> int:
        return sum(j * d for j, d in enumerate(self.layers, start=1))

    @cached_property
    def degrees(self) -> np.ndarray:
        """Layer index of every coordinate (the exponent used by the dilations)."""
        if self.kind == EUCLIDEAN:
            return np.ones(self.n)
        return np.concatenate([[2.0], np.ones(2 * self.n)])

    @property
    def identity(self) -> np.ndarray:
        return np.zeros(self.dim)

    def __str__(self):
        return f"{'R' if self.kind == EUCLIDEAN else 'H'}^{self.n}"

    # -- arithmetic ---------------------------------------------------------

    def check(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        if a.ndim == 0:
            a = a.reshape(1)
        if a.shape[-1] != self.dim:
            raise ValueError(
                f"element of length {a.shape[-1]} does not belong to {self} (dim {self.dim})"
            )
        return a

    def compose(self, a, b) -> np.ndarray:
        a, b = self.check(a), self.check(b)
        if self.kind == EUCLIDEAN:
            return a + b
        n = self.n
        x, y = a[..., 1:n + 1], a[..., n + 1:]
        x2, y2 = b[..., 1:n + 1], b[..., n + 1:]
        s = a[..., 0] + b[..., 0] + 0.5 * (np.sum(x * y2, axis=-1) - np.sum(x2 * y, axis=-1))
        return np.concatenate([s[..., None], x + x2, y + y2], axis=-1)

    def inverse(self, a) -> np.ndarray:
        # both group laws are written in exponential coordinates, where g^{-1} = -g
        return -self.check(a)

    def dilate(self, t, a) -> np.ndarray:
        """tau_t(a); an array t broadcasts against the leading axes of a."""
        t = np.asarray(t, dtype=float)
        if not np.all(t > 0):
            raise ValueError(f"dilation parameter must be positive, got {t!r}")
        return self.check(a) * t[..., None] ** self.degrees if t.ndim else self.check(a) * float(t) ** self.degrees

    # -- serialisation ------------------------------------------------------

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n": self.n}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "Group":
        try:
            return cls(str(d["kind"]).lower(), int(d["n"]))
        except KeyError as exc:
            raise ValueError(f"group descriptor is missing key {exc.args[0]!r}") from None

    @classmethod
    def from_json(cls, s: str) -> "Group":
        return cls.from_dict(json.loads(s))


def euclidean(n: int = 1) -> Group:
    return Group(EUCLIDEAN, n)


def heisenberg(n: int = 1) -> Group:
    return Group(HEISENBERG, n)


@dataclass(frozen=True)
class ScaledElement:
    """An element (t, g) of the semidirect product of G with the positive reals."""

    t: float
    g: tuple

    def __post_init__(self):
        if not (np.isfinite(self.t) and self.t > 0):
            raise ValueError(f"scale must be positive and finite, got {self.t!r}")
        g = np.atleast_1d(np.asarray(self.g, dtype=float))
        if g.ndim != 1 or not np.all(np.isfinite(g)):
            raise ValueError(f"group part must be a finite vector, got {self.g!r}")
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "g", tuple(float(v) for v in g))

    @property
    def coords(self) -> np.ndarray:
        return np.array(self.g)

    @classmethod
    def unit(cls, G: Group) -> "ScaledElement":
        return cls(1.0, tuple(G.identity))


def compose(a, b, G: Group) -> np.ndarray:
    return G.compose(a, b)


def inverse(a, G: Group) -> np.ndarray:
    return G.inverse(a)


def dilate(t, a, G: Group) -> np.ndarray:
    return G.dilate(t, a)


def homogeneous_dimension(G: Group) -> int:
    return G.homogeneous_dim


def semidirect_compose(t1, g1, t2, g2, G: Group) -> tuple[np.ndarray, np.ndarray]:
    """Batched (t, g)(t', g') = (t t', g . tau_t(g')) on arrays of scales and coordinates."""
    t1 = np.asarray(t1, dtype=float)
    return t1 * np.asarray(t2, dtype=float), G.compose(g1, G.dilate(t1, g2))


def semidirect_inverse(t, g, G: Group) -> tuple[np.ndarray, np.ndarray]:
    """Batched (t, g)^{-1} = (1/t, tau_{1/t}(g^{-1}))."""
    inv_t = 1.0 / np.asarray(t, dtype=float)
    return inv_t, G.dilate(inv_t, G.inverse(g))


def scaled_compose(p: ScaledElement, q: ScaledElement, G: Group) -> ScaledElement:
    """(t, g)(t', g') = (t t', g . tau_t(g'))."""
    t, g = semidirect_compose(p.t, p.coords, q.t, q.coords, G)
    return ScaledElement(float(t), tuple(g))


def scaled_inverse(p: ScaledElement, G: Group) -> ScaledElement:
    """(t, g)^{-1} = (1/t, tau_{1/t}(g^{-1}))."""
    t, g = semidirect_inverse(p.t, p.coords, G)
    return ScaledElement(float(t), tuple(g))


def act_on_points(s: ScaledElement, points, G: Group) -> np.ndarray:
    """Left action of (t, g) on G: x -> g . tau_t(x)."""
    return G.compose(s.coords, G.dilate(s.t, points))


def pull_back_points(s: ScaledElement, points, G: Group) -> np.ndarray:
    """Inverse action x -> tau_{1/t}(g^{-1} . x)."""
    return G.dilate(1.0 / s.t, G.compose(G.inverse(s.coords), points))
