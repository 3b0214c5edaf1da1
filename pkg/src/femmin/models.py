"""Batched energy densities and their derivatives.

Densities operate on a nested list ``F[j][m]`` of equally sized value
arrays holding the (j, m) entry of the field gradient on every element or
patch row.  Determinants use the closed 2x2/3x3 expansions so batches of
any length are handled with plain array arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class InadmissibleStateError(ValueError):
    """det F <= 0 where the exact derivative formulas are meaningless."""


@dataclass(frozen=True)
class ElasticParams:
    """Young's modulus / Poisson ratio with derived Neo-Hookean constants."""

    E: float
    nu: float

    def __post_init__(self):
        if self.E <= 0:
            raise ValueError("Young's modulus must be positive")
        if not 0.0 < self.nu < 0.5:
            raise ValueError("Poisson ratio must lie in (0, 0.5)")

    @property
    def mu(self) -> float:
        return self.E / (2.0 * (1.0 + self.nu))

    @property
    def bulk(self) -> float:
        return self.E / (3.0 * (1.0 - 2.0 * self.nu))

    @property
    def C1(self) -> float:
        return self.mu / 2.0

    @property
    def D1(self) -> float:
        return self.bulk / 2.0


@dataclass(frozen=True)
class PLaplaceParams:
    p: float

    def __post_init__(self):
        if self.p <= 1.0:
            raise ValueError("p-Laplacian exponent must satisfy p > 1")


def batch_determinant(F):
    """Closed-form determinant of a batched 2x2 or 3x3 gradient."""
    dim = len(F)
    if dim == 2:
        return F[0][0] * F[1][1] - F[0][1] * F[1][0]
    return (
        F[0][0] * F[1][1] * F[2][2]
        + F[0][2] * F[1][0] * F[2][1]
        + F[0][1] * F[1][2] * F[2][0]
        - F[0][2] * F[1][1] * F[2][0]
        - F[0][1] * F[1][0] * F[2][2]
        - F[0][0] * F[1][2] * F[2][1]
    )


def batch_cofactor(F):
    """Cofactor entries cof[j][m] = d det(F) / d F[j][m]."""
    dim = len(F)
    if dim == 2:
        return [[F[1][1], -F[1][0]], [-F[0][1], F[0][0]]]
    cof = [[None] * 3 for _ in range(3)]
    for j in range(3):
        j1, j2 = [a for a in range(3) if a != j]
        for m in range(3):
            m1, m2 = [a for a in range(3) if a != m]
            minor = F[j1][m1] * F[j2][m2] - F[j1][m2] * F[j2][m1]
            cof[j][m] = minor if (j + m) % 2 == 0 else -minor
    return cof


def neo_hookean_density(F, params: ElasticParams) -> np.ndarray:
    """W = C1 (I1 - dim - 2 log det F) + D1 (det F - 1)^2, +inf if det F <= 0."""
    dim = len(F)
    det = batch_determinant(F)
    I1 = sum(F[j][m] ** 2 for j in range(dim) for m in range(dim))
    admissible = det > 0.0
    logdet = np.zeros_like(det)
    np.log(det, out=logdet, where=admissible)
    W = params.C1 * (I1 - dim - 2.0 * logdet) + params.D1 * (det - 1.0) ** 2
    if not admissible.all():
        W = np.where(admissible, W, np.inf)
    return W


def neo_hookean_ddensity(F, params: ElasticParams):
    """Entrywise dW/dF via the cofactor form of the determinant derivative."""
    dim = len(F)
    det = batch_determinant(F)
    if (det <= 0.0).any():
        raise InadmissibleStateError(
            "nonpositive det F in the exact derivative path"
        )
    cof = batch_cofactor(F)
    dfac = 2.0 * params.D1 * (det - 1.0)
    inv2 = 2.0 / det
    return [
        [
            params.C1 * (2.0 * F[j][m] - inv2 * cof[j][m]) + dfac * cof[j][m]
            for m in range(dim)
        ]
        for j in range(dim)
    ]


def p_laplacian_density(G, params: PLaplaceParams) -> np.ndarray:
    """W = |g|^p / p for a scalar gradient field G = [[g_1, ..., g_dim]]."""
    norm2 = sum(g ** 2 for g in G[0])
    return norm2 ** (params.p / 2.0) / params.p


def p_laplacian_ddensity(G, params: PLaplaceParams):
    """|g|^(p-2) g, with the subgradient choice 0 at g = 0 when p < 2."""
    norm2 = sum(g ** 2 for g in G[0])
    if params.p >= 2.0:
        factor = norm2 ** ((params.p - 2.0) / 2.0)
    else:
        factor = np.zeros_like(norm2)
        pos = norm2 > 0.0
        np.power(norm2, (params.p - 2.0) / 2.0, out=factor, where=pos)
    return [[factor * g for g in G[0]]]


class NeoHookean:
    """Vector density model: d = dim components."""

    def __init__(self, params: ElasticParams, dim: int):
        if dim not in (2, 3):
            raise ValueError("Neo-Hookean model needs dim in {2, 3}")
        self.params = params
        self.dim = dim
        self.d = dim

    def density(self, F):
        return neo_hookean_density(F, self.params)

    def ddensity(self, F):
        return neo_hookean_ddensity(F, self.params)


class PLaplacian:
    """Scalar density model (d = 1) for any spatial dimension."""

    def __init__(self, params: PLaplaceParams, dim: int):
        self.params = params
        self.dim = dim
        self.d = 1

    def density(self, G):
        return p_laplacian_density(G, self.params)

    def ddensity(self, G):
        return p_laplacian_ddensity(G, self.params)
