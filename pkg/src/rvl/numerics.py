"""Dense desk-scale linear algebra and a counter-based random source.

Every experiment in this package works with vectors and matrices of
dimension <= 16, so the kernels here are written for clarity and for
fully specified numerical behaviour (pivot tolerances, draw order)
rather than for throughput.  Elimination, the semidefinite test and the
random stream are hand-rolled so that two runs with the same seed give
identical output down to the last bit.
"""

import numpy as np

# Tolerances shared across the package.
PSD_PIVOT_TOL = 1e-10      # pivots >= -PSD_PIVOT_TOL count as nonnegative
SINGULAR_TOL = 1e-10       # relative pivot size below which a solve is singular
RIDGE_LAMBDA = 1e-8        # diagonal shift used by ridge-mode solves
SYMMETRY_RTOL = 1e-12


class SingularSystem(ValueError):
    """A strict linear solve met a matrix that is singular to tolerance."""


def check_finite(a, name="array"):
    """Return ``a`` as a float ndarray, rejecting NaN/Inf entries."""
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def inner(u, v):
    """Euclidean inner product of two equal-length vectors."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return float(u @ v)


def require_symmetric(M, name="matrix"):
    """Return ``M`` as a square float ndarray, erroring if it is asymmetric.

    Symmetry is checked entrywise with relative slack: |M_ij - M_ji| must
    not exceed SYMMETRY_RTOL * max(1, |M_ij|).
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got shape {M.shape}")
    gap = np.abs(M - M.T)
    tol = SYMMETRY_RTOL * np.maximum(1.0, np.abs(M))
    if np.any(gap > tol):
        raise ValueError(f"{name} is not symmetric")
    return M


def _psd_shifted_batch(Ms, beta):
    """Cholesky-style semidefinite test of M - beta*I over a batch.

    ``Ms`` has shape (k, n, n); returns a boolean array of length k that
    is True where every elimination pivot of M - beta*I stays above
    -PSD_PIVOT_TOL.  A (near-)zero pivot is accepted only if the rest of
    its column is negligible, since a zero diagonal with mass below it
    makes the matrix indefinite.
    """
    A = np.array(Ms, dtype=float)
    k, n = A.shape[0], A.shape[1]
    A -= beta * np.eye(n)
    ok = np.ones(k, dtype=bool)
    for j in range(n):
        pivot = A[:, j, j]
        ok &= pivot >= -PSD_PIVOT_TOL
        small = pivot <= PSD_PIVOT_TOL
        if j + 1 < n:
            below = A[:, j + 1:, j]
            diag = A[:, np.arange(j + 1, n), np.arange(j + 1, n)]
            col_tol = np.sqrt(PSD_PIVOT_TOL * np.maximum(1.0, np.abs(diag)))
            ok &= ~(small & np.any(np.abs(below) > col_tol, axis=1))
            live = pivot > PSD_PIVOT_TOL
            factor = np.where(live[:, None], below / np.where(live, pivot, 1.0)[:, None], 0.0)
            A[:, j + 1:, j + 1:] -= factor[:, :, None] * A[:, j, None, j + 1:]
    return ok


def min_eig_at_least(M, beta):
    """True iff the symmetric matrix M satisfies M - beta*I >= 0.

    Decided by attempting a Cholesky-style elimination of M - beta*I
    with zero-pivot tolerance PSD_PIVOT_TOL: the answer is True exactly
    when every pivot stays above -PSD_PIVOT_TOL.
    """
    M = require_symmetric(M)
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    return bool(_psd_shifted_batch(M[None, :, :], beta)[0])


def min_eig_at_least_batch(Ms, beta):
    """Vectorized :func:`min_eig_at_least` over a stack of symmetric matrices."""
    Ms = np.asarray(Ms, dtype=float)
    if Ms.ndim != 3 or Ms.shape[1] != Ms.shape[2]:
        raise ValueError("expected a (k, n, n) stack of square matrices")
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    return _psd_shifted_batch(Ms, beta)


def solve_linear(A, b, ridge=False):
    """Solve A x = b by partial-pivot Gaussian elimination.

    ``b`` may be a vector or a matrix of stacked right-hand-side columns.
    In strict mode a pivot below SINGULAR_TOL (relative to the largest
    entry of A) raises SingularSystem; with ``ridge=True`` the system
    (A + RIDGE_LAMBDA*I) x = b is solved instead, which keeps rank
    deficient but consistent systems (e.g. degenerate normal equations)
    solvable.
    """
    A = check_finite(A, "matrix")
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix must be square, got shape {A.shape}")
    b = check_finite(b, "right-hand side")
    single = b.ndim == 1
    B = b.reshape(-1, 1) if single else b.copy()
    n = A.shape[0]
    if B.shape[0] != n:
        raise ValueError("right-hand side dimension mismatch")
    work = A.copy()
    if ridge:
        work = work + RIDGE_LAMBDA * np.eye(n)
        # The shift makes consistent rank-deficient systems solvable, so
        # only exact zero pivots are fatal here.
        threshold = 0.0
    else:
        threshold = SINGULAR_TOL * max(1.0, float(np.max(np.abs(work))) if n else 1.0)
    B = B.astype(float)
    for k in range(n):
        p = k + int(np.argmax(np.abs(work[k:, k])))
        if abs(work[p, k]) <= threshold:
            raise SingularSystem(f"matrix is singular to tolerance (column {k})")
        if p != k:
            work[[k, p]] = work[[p, k]]
            B[[k, p]] = B[[p, k]]
        factor = work[k + 1:, k] / work[k, k]
        work[k + 1:, k:] -= np.outer(factor, work[k, k:])
        B[k + 1:] -= np.outer(factor, B[k])
    X = np.empty_like(B)
    for k in range(n - 1, -1, -1):
        X[k] = (B[k] - work[k, k + 1:] @ X[k + 1:]) / work[k, k]
    return X[:, 0] if single else X


def spectral_radius(M, squarings=32):
    """Largest eigenvalue magnitude of a square matrix.

    Computed by the power method applied to the operator itself:
    repeatedly square a normalized copy of M while accumulating the
    normalization on a log scale, giving ||M^(2^squarings)||^(1/2^squarings).
    The polynomial factors of non-normal matrices wash out at this power,
    so the estimate is accurate for complex spectra where plain vector
    iteration stalls.
    """
    M = check_finite(M, "matrix")
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    X = M.copy()
    log_scale = 0.0
    power = 1.0
    for _ in range(squarings):
        norm = float(np.linalg.norm(X))
        if norm == 0.0:
            return 0.0
        X = X / norm
        log_scale = 2.0 * (log_scale + np.log(norm))
        X = X @ X
        power *= 2.0
    tail = float(np.linalg.norm(X))
    if tail == 0.0:
        return 0.0
    return float(np.exp((np.log(tail) + log_scale) / power))


# SplitMix64 constants.
_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_STREAM_SALT = 0xD1B54A32D192ED03

_INV_2_53 = 1.0 / float(1 << 53)


def _mix64(z):
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def substream_seed(seed, stream):
    """Derive the seed of an independent substream from (seed, stream index)."""
    return _mix64((int(seed) + int(stream) * _STREAM_SALT) & _MASK64)


class SeededRng:
    """Counter-based SplitMix64 stream with Box-Muller Gaussian draws.

    State is exactly (seed, counter): the i-th raw word is a pure
    function of both, so any draw can be reproduced from the pair alone,
    in any language.  Gaussians use the Box-Muller transform, two
    uniforms per draw, cosine branch only; batch and scalar calls
    consume the counter identically because the scalar paths delegate
    to the batch ones.
    """

    def __init__(self, seed):
        self.seed = int(seed) & _MASK64
        self.counter = 0

    def next_uint64(self):
        self.counter += 1
        return _mix64((self.seed + self.counter * _GAMMA) & _MASK64)

    def _raw_block(self, count):
        idx = np.arange(self.counter + 1, self.counter + count + 1, dtype=np.uint64)
        self.counter += count
        z = (np.uint64(self.seed) + idx * np.uint64(_GAMMA))
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))

    def uniforms(self, count):
        """Array of ``count`` uniforms in [0, 1), 53-bit resolution."""
        raw = self._raw_block(count) >> np.uint64(11)
        return raw.astype(np.float64) * _INV_2_53

    def uniform(self):
        return float(self.uniforms(1)[0])

    def normals(self, count):
        """Array of ``count`` standard Gaussians via Box-Muller."""
        u = self.uniforms(2 * count)
        u1 = 1.0 - u[0::2]          # shift into (0, 1] so the log is finite
        u2 = u[1::2]
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)

    def normal(self):
        return float(self.normals(1)[0])
