"""Partitionings, partition combination matrices, mergings and the layer-wise abstraction."""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .domains import WeightElement, alpha, is_convex_domain
from .errors import (
    BinaryEnumerationLimitExceeded,
    DimensionMismatch,
    NonConvexDomainRejected,
    PartitioningMismatch,
    ShapeMismatch,
    ValidationError,
)
from .model import Activation, Dnn, as_matrix

DEFAULT_CAP = 10**6
PCM_TOL = 1e-12


def resolve_cap(cap: Optional[int] = None) -> int:
    if cap is not None:
        return int(cap)
    env = os.environ.get("ANNKIT_CAP")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ValidationError(f"ANNKIT_CAP must be an integer, got {env!r}") from None
    return DEFAULT_CAP


@dataclass(frozen=True)
class Partitioning:
    """Ordered disjoint blocks (0-indexed) covering ``range(n)``."""

    blocks: Tuple[Tuple[int, ...], ...]
    n: int

    def __post_init__(self):
        blocks = tuple(tuple(int(i) for i in b) for b in self.blocks)
        seen = set()
        for b in blocks:
            if not b:
                raise ValidationError("partition blocks must be non-empty")
            for i in b:
                if not 0 <= i < self.n:
                    raise ValidationError(f"index {i} outside 0..{self.n - 1}")
                if i in seen:
                    raise ValidationError(f"index {i} appears in two blocks")
                seen.add(i)
        if len(seen) != self.n:
            missing = sorted(set(range(self.n)) - seen)
            raise ValidationError(f"partitioning does not cover indices {missing}")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def singleton(cls, n: int) -> "Partitioning":
        return cls(tuple((i,) for i in range(n)), n)

    @classmethod
    def whole(cls, n: int) -> "Partitioning":
        return cls((tuple(range(n)),), n)

    @classmethod
    def from_one_indexed(cls, blocks, n: Optional[int] = None) -> "Partitioning":
        blocks = tuple(tuple(int(i) - 1 for i in b) for b in blocks)
        if n is None:
            n = sum(len(b) for b in blocks)
        return cls(blocks, n)

    def to_one_indexed(self) -> List[List[int]]:
        return [[i + 1 for i in b] for b in self.blocks]

    @property
    def k(self) -> int:
        return len(self.blocks)

    @property
    def sizes(self) -> Tuple[int, ...]:
        return tuple(len(b) for b in self.blocks)

    @property
    def is_singleton(self) -> bool:
        return all(len(b) == 1 for b in self.blocks)

    def block_of(self) -> np.ndarray:
        """``out[i]`` is the index of the block containing ``i``."""
        out = np.empty(self.n, dtype=int)
        for j, b in enumerate(self.blocks):
            out[list(b)] = j
        return out


@dataclass(frozen=True)
class LayerwisePartitioning:
    layers: Tuple[Partitioning, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        if len(layers) < 2:
            raise ValidationError("a layer-wise partitioning covers at least layers 0 and 1")
        if not layers[0].is_singleton or not layers[-1].is_singleton:
            raise PartitioningMismatch("input and output partitionings must be singletons")
        object.__setattr__(self, "layers", layers)

    @classmethod
    def identity(cls, sizes: Sequence[int]) -> "LayerwisePartitioning":
        return cls(tuple(Partitioning.singleton(s) for s in sizes))

    def __getitem__(self, i) -> Partitioning:
        return self.layers[i]

    def __len__(self):
        return len(self.layers)

    def check_sizes(self, sizes: Sequence[int]):
        sizes = list(sizes)
        if len(sizes) != len(self.layers):
            raise PartitioningMismatch(
                f"partitioning has {len(self.layers)} layers, network has {len(sizes)}"
            )
        for i, (p, s) in enumerate(zip(self.layers, sizes)):
            if p.n != s:
                raise PartitioningMismatch(f"layer {i}: partitioning over {p.n} nodes, layer has {s}")


# ---------------------------------------------------------------------------
# PCMs
# ---------------------------------------------------------------------------


def is_pcm(m, p: Partitioning, tol: float = PCM_TOL) -> bool:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape != (p.n, p.k):
        raise ShapeMismatch(f"PCM for this partitioning has shape {(p.n, p.k)}, got {m.shape}")
    if np.any(m < 0.0):
        return False
    for j, block in enumerate(p.blocks):
        outside = np.ones(p.n, dtype=bool)
        outside[list(block)] = False
        if np.any(m[outside, j] != 0.0):
            return False
        if abs(m[:, j].sum() - 1.0) > tol:
            return False
    return True


def binary_pcm_count(p: Partitioning) -> int:
    return math.prod(p.sizes)


def _choices(p: Partitioning):
    # lexicographic over per-block choices, block order fixed
    return itertools.product(*p.blocks)


def _pcm_from_choice(p: Partitioning, choice) -> np.ndarray:
    c = np.zeros((p.n, p.k))
    c[list(choice), np.arange(p.k)] = 1.0
    return c


def enumerate_binary_pcms(p: Partitioning, cap: Optional[int] = None) -> List[np.ndarray]:
    cap = resolve_cap(cap)
    count = binary_pcm_count(p)
    if count > cap:
        raise BinaryEnumerationLimitExceeded(cap, count)
    return [_pcm_from_choice(p, choice) for choice in _choices(p)]


def binary_decomposition(c, p: Partitioning) -> np.ndarray:
    """Convex coefficients of ``c`` over ``enumerate_binary_pcms(p)`` (same order).

    Columns of a binary PCM are chosen independently, so the coefficient of the
    binary PCM picking row ``r_j`` in column ``j`` is ``prod_j c[r_j, j]``.
    """
    c = np.asarray(c, dtype=np.float64)
    return np.array([math.prod(c[r, j] for j, r in enumerate(choice)) for choice in _choices(p)])


def merge(m, c, d) -> np.ndarray:
    """The merging ``D^T M C``."""
    m = np.asarray(m, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    if c.ndim != 2 or d.ndim != 2 or c.shape[0] != m.shape[1] or d.shape[0] != m.shape[0]:
        raise ShapeMismatch(f"cannot merge {m.shape} with C {c.shape} and D {d.shape}")
    return d.T @ m @ c


def scale_cols(m, w) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    if m.ndim != 2 or w.shape[0] != m.shape[1]:
        raise ShapeMismatch(f"{w.shape[0]} column weights for a matrix with {m.shape[-1]} columns")
    return m * w[None, :]


def _check_layer_shapes(m, p_in: Partitioning, p_out: Partitioning):
    if m.shape != (p_out.n, p_in.n):
        raise PartitioningMismatch(
            f"matrix of shape {m.shape} vs partitionings over {p_out.n} outputs and {p_in.n} inputs"
        )


def binary_mergings(m, p_in: Partitioning, p_out: Partitioning, cap: Optional[int] = None) -> np.ndarray:
    """All column-scaled binary mergings, shape ``(count, |p_out|, |p_in|)``.

    Order: C (input PCM) outer, D (output PCM) inner, each lexicographic.
    With one-hot PCMs ``D^T M C`` is a sub-matrix selection, which is how
    this is computed.
    """
    m = as_matrix(m)
    _check_layer_shapes(m, p_in, p_out)
    cap = resolve_cap(cap)
    count = binary_pcm_count(p_in) * binary_pcm_count(p_out)
    if count > cap:
        raise BinaryEnumerationLimitExceeded(cap, count)
    cols = np.array(list(_choices(p_in)), dtype=int).reshape(-1, p_in.k)
    rows = np.array(list(_choices(p_out)), dtype=int).reshape(-1, p_out.k)
    sel = m[:, cols]  # (n_out, nC, k_in)
    sel = sel[rows]  # (nD, k_out, nC, k_in)
    sel = sel.transpose(2, 0, 1, 3).reshape(count, p_out.k, p_in.k)
    return sel * np.asarray(p_in.sizes, dtype=np.float64)[None, None, :]


def ahat_bin(m, p_in: Partitioning, p_out: Partitioning, domain: str, cap: Optional[int] = None) -> WeightElement:
    """Abstract all binary mergings of ``m`` in ``domain``."""
    return alpha(domain, binary_mergings(m, p_in, p_out, cap))


# ---------------------------------------------------------------------------
# Abstract networks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AnnLayer:
    weight: WeightElement
    activation: Activation

    @property
    def domain(self):
        return self.weight.domain

    @property
    def in_dim(self):
        return self.weight.shape[1]

    @property
    def out_dim(self):
        return self.weight.shape[0]


@dataclass(frozen=True)
class Ann:
    layers: Tuple[AnnLayer, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValidationError("an abstract network needs at least one layer")
        for i in range(1, len(layers)):
            if layers[i].in_dim != layers[i - 1].out_dim:
                raise DimensionMismatch(f"abstract layers {i} and {i + 1} do not chain")
        object.__setattr__(self, "layers", layers)

    @property
    def sizes(self) -> List[int]:
        return [self.layers[0].in_dim] + [l.out_dim for l in self.layers]

    def contains_instantiation(self, hs, eps: float = 1e-9) -> bool:
        return len(hs) == len(self.layers) and all(
            l.weight.contains(h, eps) for l, h in zip(self.layers, hs)
        )


def abstract_dnn(
    n: Dnn,
    lp: LayerwisePartitioning,
    domains: Union[str, Sequence[str]] = "interval",
    unsound_ok: bool = False,
    cap: Optional[int] = None,
) -> Ann:
    """Layer-wise abstraction: ``A^(i) = ahat_bin(W^(i), I^(i-1), I^(i), domain_i)``.

    Only binary mergings are enumerated, which covers every merging exactly
    when the domain is convex.  Non-convex domains therefore need
    ``unsound_ok=True``.
    """
    lp.check_sizes(n.sizes)
    if isinstance(domains, str):
        domains = [domains] * len(n.layers)
    domains = list(domains)
    if len(domains) != len(n.layers):
        raise ValidationError(f"{len(domains)} domains for {len(n.layers)} layers")
    for dom in domains:
        if not is_convex_domain(dom) and not unsound_ok:
            raise NonConvexDomainRejected(
                f"domain {dom!r} is not convex; binary mergings do not cover all mergings"
            )
    layers = []
    for i, (layer, dom) in enumerate(zip(n.layers, domains), start=1):
        element = ahat_bin(layer.weights, lp[i - 1], lp[i], dom, cap)
        layers.append(AnnLayer(element, layer.activation))
    return Ann(tuple(layers))


# ---------------------------------------------------------------------------
# Random generators (property tests, suites)
# ---------------------------------------------------------------------------


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_pcm(p: Partitioning, seed=None) -> np.ndarray:
    """A PCM with strictly positive weights inside every block."""
    rng = _rng(seed)
    c = np.zeros((p.n, p.k))
    for j, block in enumerate(p.blocks):
        if len(block) == 1:
            c[block[0], j] = 1.0
        else:
            w = rng.dirichlet(np.ones(len(block)))
            c[list(block), j] = w / w.sum()
    return c


def random_partitioning(n: int, seed=None, max_blocks: Optional[int] = None) -> Partitioning:
    """Uniform random labelling, blocks ordered by their smallest index."""
    rng = _rng(seed)
    k = int(rng.integers(1, (max_blocks or n) + 1))
    labels = rng.integers(0, k, size=n)
    blocks = {}
    for i, lab in enumerate(labels):
        blocks.setdefault(int(lab), []).append(i)
    ordered = sorted(blocks.values(), key=lambda b: b[0])
    return Partitioning(tuple(tuple(b) for b in ordered), n)


def random_layerwise_partitioning(sizes: Sequence[int], seed=None) -> LayerwisePartitioning:
    rng = _rng(seed)
    inner = [random_partitioning(s, rng) for s in sizes[1:-1]]
    return LayerwisePartitioning(
        (Partitioning.singleton(sizes[0]), *inner, Partitioning.singleton(sizes[-1]))
    )
