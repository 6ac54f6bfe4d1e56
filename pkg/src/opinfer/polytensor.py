"""Compressed Kronecker powers of state vectors and their monomial ordering.

The i-th power of a vector x of length N is the i-fold Kronecker product
x (x) ... (x) x with duplicate entries (equal up to commutativity) removed.
Every operation in this package that touches polynomial terms relies on the
single ordering convention fixed here: monomials are indexed by sorted index
tuples, enumerated lexicographically.  The ordering tag is recorded in model
manifests as ``ORDERING_CONVENTION``.
"""

import math
from dataclasses import dataclass
from functools import lru_cache, reduce
from itertools import combinations_with_replacement, permutations

import numpy as np
import scipy.sparse as sparse

ORDERING_CONVENTION = "sorted-multiset-lex-v1"

# Largest N**i the dense Kronecker-side helpers will materialize.  These
# selection/duplication matrices exist as small-scale oracles only; nothing
# in the production path builds an N**i object.
MAX_FULL_KRON_SIZE = 1 << 22


@dataclass(frozen=True)
class MultisetIndex:
    """A monomial index: a non-decreasing tuple of mode indices."""

    entries: tuple

    def __post_init__(self):
        if len(self.entries) == 0:
            raise ValueError("multiset index needs at least one entry")
        if any(e < 0 for e in self.entries):
            raise ValueError(f"negative mode index in {self.entries}")
        if any(a > b for a, b in zip(self.entries, self.entries[1:])):
            raise ValueError(f"entries must be non-decreasing, got {self.entries}")

    @property
    def degree(self):
        return len(self.entries)


@dataclass(frozen=True)
class CompressedPower:
    """Values of all degree-`degree` monomials of one state vector."""

    degree: int
    base_dim: int
    values: np.ndarray

    def __post_init__(self):
        expected = compressed_dim(self.base_dim, self.degree)
        if self.values.shape != (expected,):
            raise ValueError(
                f"compressed power of dimension {self.base_dim}, degree "
                f"{self.degree} must have length {expected}, got {self.values.shape}"
            )


def compressed_dim(base_dim, degree):
    """Number of degree-`degree` monomials in `base_dim` variables.

    Equals binomial(base_dim + degree - 1, degree); exact integer arithmetic,
    so large arguments raise on resource exhaustion rather than wrap around.
    """
    if base_dim < 1 or degree < 1:
        raise ValueError(f"need base_dim >= 1 and degree >= 1, got ({base_dim}, {degree})")
    return math.comb(base_dim + degree - 1, degree)


@lru_cache(maxsize=None)
def multiset_indices(base_dim, degree):
    """All sorted index tuples of length `degree` over [0, base_dim).

    Returns a read-only integer array of shape (compressed_dim, degree) whose
    rows are in lexicographic order.  Row k is the index tuple of monomial k
    in every compressed power and operator column in this package.
    """
    if base_dim < 1 or degree < 1:
        raise ValueError(f"need base_dim >= 1 and degree >= 1, got ({base_dim}, {degree})")
    idx = np.array(
        list(combinations_with_replacement(range(base_dim), degree)), dtype=np.intp
    )
    idx.setflags(write=False)
    return idx


def enumerate_multisets(base_dim, degree):
    """The canonical enumeration of `multiset_indices` as MultisetIndex objects."""
    return [MultisetIndex(tuple(int(v) for v in row)) for row in multiset_indices(base_dim, degree)]


def multiplicity(alpha):
    """Number of distinct orderings of the index tuple `alpha`.

    The multinomial coefficient degree! / prod(repetition counts!).
    """
    entries = alpha.entries if isinstance(alpha, MultisetIndex) else tuple(alpha)
    count = math.factorial(len(entries))
    run = 1
    for a, b in zip(entries, entries[1:]):
        run = run + 1 if a == b else 1
        if run > 1:
            count //= run
    return count


def multiplicities(base_dim, degree):
    """Vector of `multiplicity` over the canonical enumeration."""
    idx = multiset_indices(base_dim, degree)
    return np.array([multiplicity(row) for row in idx], dtype=float)


def compressed_power(x, degree):
    """Compressed `degree`-th Kronecker power of a state vector.

    The entry at index tuple (a_1, ..., a_i) is the monomial
    x[a_1] * ... * x[a_i]; for degree 1 the values are x itself.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"expected a vector, got shape {x.shape}")
    values = x.copy() if degree == 1 else np.prod(x[multiset_indices(x.size, degree)], axis=1)
    return CompressedPower(degree=degree, base_dim=x.size, values=values)


def compressed_power_matrix(X, degree):
    """Columnwise compressed powers of an (n, K) state matrix, shape (n_i, K)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {X.shape}")
    if degree == 1:
        return X.copy()
    # multiply factor by factor; avoids an (n_i, degree, K) intermediate
    idx = multiset_indices(X.shape[0], degree)
    out = X[idx[:, 0], :].copy()
    for j in range(1, degree):
        out *= X[idx[:, j], :]
    return out


def symmetrized_compressed_power(vectors):
    """Symmetrized compressed product of several vectors of equal length.

    The entry at index tuple alpha is the average over all argument
    permutations of prod_j vectors[j][alpha_{sigma(j)}].  With identical
    arguments this reduces to `compressed_power`.  Applying a compressed
    operator matrix to this vector realizes the symmetric multilinear form
    that the operator induces.
    """
    ws = [np.asarray(w, dtype=float) for w in vectors]
    n = ws[0].size
    if any(w.shape != (n,) for w in ws):
        raise ValueError("all vectors must share one length")
    idx = multiset_indices(n, len(ws))
    out = np.zeros(idx.shape[0])
    for sigma in permutations(range(len(ws))):
        out += np.prod([ws[j][idx[:, k]] for k, j in enumerate(sigma)], axis=0)
    return out / math.factorial(len(ws))


def kron_power(x, degree):
    """Dense i-fold Kronecker power x (x) ... (x) x of length N**i (oracle scale)."""
    x = np.asarray(x, dtype=float)
    _guard_full_size(x.size, degree)
    return reduce(np.kron, [x] * degree)


def selection_matrix(base_dim, degree):
    """Sparse 0/1 map from the full Kronecker power to the compressed power.

    Shape (N_i, N**i).  Row alpha has its single 1 at the position of the
    sorted representative of alpha inside the full Kronecker index space, so
    compressed_power(x, i).values == selection_matrix(N, i) @ kron_power(x, i).
    Oracle scale only; guarded by MAX_FULL_KRON_SIZE.
    """
    full = _guard_full_size(base_dim, degree)
    idx = multiset_indices(base_dim, degree)
    weights = base_dim ** np.arange(degree - 1, -1, -1, dtype=np.int64)
    rep = idx @ weights
    nc = idx.shape[0]
    return sparse.csr_matrix(
        (np.ones(nc), (np.arange(nc), rep)), shape=(nc, full)
    )


def duplication_matrix(base_dim, degree):
    """Sparse 0/1 map from the compressed power back to the full Kronecker power.

    Shape (N**i, N_i).  Row q has its 1 in the column of the multiset obtained
    by sorting q's index tuple, so kron_power(x, i) == duplication_matrix(N, i)
    @ compressed_power(x, i).values.  Column sums equal `multiplicity`.
    """
    full = _guard_full_size(base_dim, degree)
    idx = multiset_indices(base_dim, degree)
    weights = base_dim ** np.arange(degree - 1, -1, -1, dtype=np.int64)
    # Rank lookup over representative positions, then gather for every
    # full-space tuple after sorting its indices.
    lut = np.full(full, -1, dtype=np.intp)
    lut[idx @ weights] = np.arange(idx.shape[0])
    grids = np.indices((base_dim,) * degree).reshape(degree, -1).T
    cols = lut[np.sort(grids, axis=1) @ weights]
    return sparse.csr_matrix(
        (np.ones(full), (np.arange(full), cols)), shape=(full, idx.shape[0])
    )


def truncation_mask(base_dim, degree, new_dim):
    """Boolean mask of monomials that only use modes below `new_dim`.

    The surviving subsequence of the canonical enumeration over `base_dim`
    modes is exactly the canonical enumeration over `new_dim` modes.
    """
    if not 1 <= new_dim <= base_dim:
        raise ValueError(f"need 1 <= new_dim <= {base_dim}, got {new_dim}")
    idx = multiset_indices(base_dim, degree)
    return idx[:, -1] < new_dim


def _guard_full_size(base_dim, degree):
    full = base_dim**degree
    if full > MAX_FULL_KRON_SIZE:
        raise ValueError(
            f"full Kronecker space of size {base_dim}**{degree} exceeds the "
            f"oracle guard ({MAX_FULL_KRON_SIZE}); these helpers are test-scale only"
        )
    return full
