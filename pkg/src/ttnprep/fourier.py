"""Truncated Fourier coefficients of discretized Gaussian amplitudes.

The target register state encodes sqrt(p(x)) on a centered box of width a
per dimension, x_i = -a/2 + a*b_i/2^n for n-bit integers b_i. Expanding
the amplitude in the Fourier basis of the box gives coefficients

    fhat_k  proportional to  (-1)^{|k_1 + ... + k_D|} exp(-(2pi/a)^2 k^T Sigma k)

for integer frequency vectors k. Keeping M = 2^m frequencies per dimension
(k in [-M/2, M/2 - 1], stored at index k mod M) and applying the inverse
DFT embedding M -> 2^n reproduces the state up to the discarded Fourier
tail. The alternating sign absorbs the -a/2 box offset, so the embedded
amplitudes come out positive.

Dense constructions are desk-scale verification tools and are guarded at
24 qubits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, ParameterError
from .gaussian import CovarianceMatrix

DENSE_QUBIT_GUARD = 24


@dataclass(frozen=True)
class GridSpec:
    """Discretization parameters: dim dimensions, n qubits each, box width
    a, and m kept Fourier qubits per dimension (M = 2^m frequencies)."""

    dim: int
    qubits: int
    box: float
    fourier_qubits: int

    def __post_init__(self):
        if self.dim < 1:
            raise ParameterError("dim must be >= 1")
        if self.qubits < 1 or self.qubits > 30:
            raise ParameterError("qubits per dimension must lie in [1, 30]")
        if not 1 <= self.fourier_qubits <= self.qubits:
            raise ParameterError("fourier qubits must lie in [1, qubits]")
        if not self.box > 0:
            raise ParameterError("box width must be positive")

    @property
    def m(self) -> int:
        return self.fourier_qubits

    @property
    def n(self) -> int:
        return self.qubits

    @property
    def M(self) -> int:
        return 1 << self.fourier_qubits

    @property
    def total_qubits(self) -> int:
        return self.dim * self.qubits


def index_to_frequency(s, M: int):
    """Stored index s in [0, M) -> signed frequency k in [-M/2, M/2)."""
    s = np.asarray(s)
    return np.where(s < M // 2, s, s - M)


class FourierEvaluator:
    """Pointwise access to normalized truncated Fourier coefficients.

    The exact normalization sums M^dim squared coefficients and is only
    computed when m*dim <= 24; above that the evaluator returns
    unnormalized values (normalized attribute False) and callers
    normalize whatever object they build from it.
    """

    def __init__(self, grid: GridSpec, cov: CovarianceMatrix):
        if cov.dim != grid.dim:
            raise ParameterError("covariance dim does not match grid dim")
        self.grid = grid
        self.cov = cov
        self._c = (2.0 * math.pi / grid.box) ** 2
        self.normalized = grid.fourier_qubits * grid.dim <= DENSE_QUBIT_GUARD
        self.norm = self._exact_norm() if self.normalized else 1.0

    def _exact_norm(self) -> float:
        M, D = self.grid.M, self.grid.dim
        # k^T S k = |W^T k|^2 with W from the eigendecomposition; the
        # factored form keeps the chunk loop in matmul land and stays
        # defined for singular covariances
        lam, q = np.linalg.eigh(self.cov.matrix)
        w = q * np.sqrt(np.clip(lam, 0.0, None))
        total = 0.0
        chunk = 1 << 18
        for start in range(0, M ** D, chunk):
            flat = np.arange(start, min(start + chunk, M ** D))
            k = np.empty((flat.size, D), dtype=float)
            for d in range(D - 1, -1, -1):
                k[:, d] = index_to_frequency(flat % M, M)
                flat = flat // M
            quad = np.square(k @ w).sum(axis=1)
            total += float(np.exp(-2.0 * self._c * quad).sum())
        return math.sqrt(total)

    def coeff(self, k) -> np.ndarray:
        """Signed normalized coefficient(s) at frequency vector(s) k,
        shape (dim,) or (batch, dim), each component in [-M/2, M/2)."""
        k = np.asarray(k, dtype=int)
        single = k.ndim == 1
        k = np.atleast_2d(k)
        if k.shape[1] != self.grid.dim:
            raise ParameterError("frequency vector has wrong length")
        half = self.grid.M // 2
        if np.any(k < -half) or np.any(k >= half):
            raise ParameterError("frequency outside [-M/2, M/2)")
        quad = np.einsum("bi,ij,bj->b", k.astype(float), self.cov.matrix,
                         k.astype(float))
        sign = 1.0 - 2.0 * (np.abs(k.sum(axis=1)) % 2)
        vals = sign * np.exp(-self._c * quad) / self.norm
        return vals[0] if single else vals

    def eval_indices(self, s) -> np.ndarray:
        """Coefficients at stored indices s in [0, M)^dim (batched)."""
        s = np.asarray(s, dtype=int)
        return self.coeff(index_to_frequency(s, self.grid.M))


def dense_coeff_tensor(ev: FourierEvaluator) -> np.ndarray:
    """All M^dim coefficients as a tensor indexed by stored index per axis,
    normalized to unit L2 mass. Guarded at m*dim <= 24."""
    grid = ev.grid
    M, D = grid.M, grid.dim
    if grid.fourier_qubits * D > DENSE_QUBIT_GUARD:
        raise CapacityError("dense coefficient tensor above the 24-qubit guard")
    kaxes = [index_to_frequency(np.arange(M), M).astype(float).reshape(
        (1,) * d + (M,) + (1,) * (D - 1 - d)) for d in range(D)]
    quad = np.zeros((M,) * D)
    for i in range(D):
        for j in range(D):
            quad = quad + ev.cov.matrix[i, j] * kaxes[i] * kaxes[j]
    ksum = sum(k.astype(int) for k in kaxes)
    sign = 1.0 - 2.0 * (ksum & 1)
    t = sign * np.exp(-ev._c * quad)
    return t / np.linalg.norm(t)


def exact_target(grid: GridSpec, cov: CovarianceMatrix) -> np.ndarray:
    """Normalized sqrt-Gaussian amplitudes on the full position grid, as a
    (2^n,)*dim tensor over the per-dimension integers b. Guarded at
    n*dim <= 24."""
    n, D, a = grid.qubits, grid.dim, grid.box
    if n * D > DENSE_QUBIT_GUARD:
        raise CapacityError("dense target above the 24-qubit guard")
    if cov.dim != D:
        raise ParameterError("covariance dim does not match grid dim")
    N = 1 << n
    prec = np.linalg.inv(cov.matrix)
    x = (-a / 2.0 + a * np.arange(N) / N)
    xaxes = [x.reshape((1,) * d + (N,) + (1,) * (D - 1 - d)) for d in range(D)]
    quad = np.zeros((N,) * D)
    for i in range(D):
        for j in range(D):
            quad = quad + prec[i, j] * xaxes[i] * xaxes[j]
    t = np.exp(-quad / 4.0)
    return t / np.linalg.norm(t)


def inverse_dft_embedding_matrix(n: int, m: int) -> np.ndarray:
    """The (2^n x 2^m) isometry from stored frequency indices to position
    amplitudes: W[b, s] = 2^{-n/2} exp(2 pi i b k(s) / 2^n) with k(s) the
    signed frequency. Columns are orthonormal for m <= n."""
    if not 1 <= m <= n:
        raise ParameterError("need 1 <= m <= n")
    N, M = 1 << n, 1 << m
    b = np.arange(N)[:, None]
    k = index_to_frequency(np.arange(M), M)[None, :]
    return np.exp(2j * math.pi * b * k / N) / math.sqrt(N)


def fsl_state(grid: GridSpec, cov: CovarianceMatrix) -> np.ndarray:
    """The ideal state prepared from the truncated coefficients: dense
    coefficient tensor pushed through the inverse DFT embedding on every
    axis. This is the fidelity ceiling any compressed circuit inherits."""
    if grid.qubits * grid.dim > DENSE_QUBIT_GUARD:
        raise CapacityError("dense embedded state above the 24-qubit guard")
    t = dense_coeff_tensor(FourierEvaluator(grid, cov)).astype(complex)
    W = inverse_dft_embedding_matrix(grid.qubits, grid.fourier_qubits)
    for d in range(grid.dim):
        t = np.moveaxis(np.tensordot(W, t, axes=(1, d)), 0, d)
    return t
