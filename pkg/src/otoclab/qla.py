"""Dense complex linear algebra kernel.

Everything downstream (spin chains, quasiprobabilities, measurement
protocols) runs on plain numpy arrays. This module pins down the few
conventions the rest of the package relies on: Hermitian/unitary
tolerance checks, eigendecompositions with a deterministic basis inside
degenerate eigenspaces, and matrix exponentials computed spectrally so
that propagators are unitary by construction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Dense matrices only; 2**12 caps the dimension (12 qubits) because the
# target systems stop at 10 sites and sparsity buys nothing at this scale.
MAX_DIM = 4096

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10

# Relative eigenvalue spacing below which two eigenvalues are treated as
# one degenerate group when fixing the eigenbasis.
_DEGENERACY_RTOL = 1e-11
# A projected computational-basis vector shorter than this is considered
# already spanned during re-orthonormalization.
_SPAN_TOL = 1e-8


def as_square_array(a) -> np.ndarray:
    """Coerce to a square complex ndarray and validate finiteness."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] < 1:
        raise ValueError("empty matrix")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains NaN or Inf entries")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.asarray(a).conj().T


def hermiticity_defect(a) -> float:
    m = as_square_array(a)
    return float(np.max(np.abs(m - m.conj().T)))


def assert_hermitian(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    m = as_square_array(a)
    defect = hermiticity_defect(m)
    if defect > tol:
        raise ValueError(f"matrix is not Hermitian (defect {defect:.3e} > {tol:.1e})")
    return m


def unitarity_defect(u) -> float:
    m = as_square_array(u)
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))


def assert_unitary(u, tol: float = UNITARY_TOL) -> np.ndarray:
    m = as_square_array(u)
    defect = unitarity_defect(m)
    if defect > tol:
        raise ValueError(f"matrix is not unitary (defect {defect:.3e} > {tol:.1e})")
    return m


def kron(*factors) -> np.ndarray:
    """Tensor product of one or more square matrices, left to right."""
    if not factors:
        raise ValueError("kron needs at least one factor")
    out = as_square_array(factors[0])
    for f in factors[1:]:
        nxt = as_square_array(f)
        if out.shape[0] * nxt.shape[0] > MAX_DIM:
            raise ValueError(
                f"tensor product dimension exceeds {MAX_DIM}; "
                "dense storage is capped at 12 qubits"
            )
        out = np.kron(out, nxt)
    return out


@dataclass(frozen=True)
class HermitianEigensystem:
    """Ascending eigenvalues and a deterministically fixed eigenbasis.

    eigenvectors holds the basis as columns, aligned with eigenvalues.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def propagator(self, z: complex) -> np.ndarray:
        """exp(z * H) for the decomposed H."""
        return (self.eigenvectors * np.exp(z * self.eigenvalues)) @ self.eigenvectors.conj().T

    def reconstruct(self) -> np.ndarray:
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.conj().T

    def degenerate_groups(self) -> list[tuple[int, int]]:
        """Half-open column ranges [start, stop) of equal-eigenvalue blocks."""
        return _group_degenerate(self.eigenvalues)


def _group_degenerate(eigenvalues: np.ndarray) -> list[tuple[int, int]]:
    n = eigenvalues.shape[0]
    scale = max(float(np.max(np.abs(eigenvalues))), 1.0)
    tol = _DEGENERACY_RTOL * scale
    groups = []
    start = 0
    for k in range(1, n + 1):
        if k == n or eigenvalues[k] - eigenvalues[start] > tol:
            groups.append((start, k))
            start = k
    return groups


def _fix_degenerate_basis(block: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis for the subspace spanned by block.

    Projects computational basis vectors onto the subspace in index order
    and Gram-Schmidts the survivors. The result depends only on the
    subspace, not on whatever basis the LAPACK backend happened to return,
    which keeps fine-grained outcome labels reproducible.
    """
    dim, m = block.shape
    proj = block @ block.conj().T
    cols: list[np.ndarray] = []
    for i in range(dim):
        v = proj[:, i].copy()
        for c in cols:
            v -= (c.conj() @ v) * c
        norm = np.linalg.norm(v)
        if norm > _SPAN_TOL:
            cols.append(v / norm)
            if len(cols) == m:
                break
    if len(cols) != m:
        raise RuntimeError("failed to span a degenerate eigenspace deterministically")
    return np.column_stack(cols)


def _fix_phase(col: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(col)))
    c = col[k]
    if abs(c) == 0.0:
        return col
    return col * (c.conjugate() / abs(c))


def eigh(h, tol: float = HERMITIAN_TOL) -> HermitianEigensystem:
    """Eigendecomposition of a Hermitian matrix with a reproducible basis.

    Eigenvalues come back ascending. Within each degenerate group the
    eigenvector basis is rebuilt from computational-basis projections in
    index order; nondegenerate columns get their largest-magnitude entry
    rotated to the positive real axis. Two calls on equal inputs return
    identical arrays, independent of LAPACK's internal choices.
    """
    m = assert_hermitian(h, tol)
    evals, evecs = np.linalg.eigh(m)
    out = np.empty_like(evecs)
    for start, stop in _group_degenerate(evals):
        if stop - start == 1:
            out[:, start] = _fix_phase(evecs[:, start])
        else:
            out[:, start:stop] = _fix_degenerate_basis(evecs[:, start:stop])
    return HermitianEigensystem(eigenvalues=evals, eigenvectors=out)


def expm_scaled(h, z: complex) -> np.ndarray:
    """exp(z * h) for Hermitian h, via the spectral decomposition.

    Never a power series: every exponentiated operator in this package is
    Hermitian, and the spectral route keeps exp(-i t h) unitary to
    rounding regardless of norm or time.
    """
    return eigh(h).propagator(z)


def haar_random_state(dim: int, seed) -> np.ndarray:
    """Haar-random pure state vector of the given dimension.

    seed may be a numpy Generator or anything default_rng accepts.
    """
    if dim < 1:
        raise ValueError("dimension must be positive")
    gen = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    v = gen.normal(size=dim) + 1j * gen.normal(size=dim)
    return v / np.linalg.norm(v)


def haar_unitary(dim: int, seed) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Gaussian matrix."""
    gen = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    g = gen.normal(size=(dim, dim)) + 1j * gen.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    # absorb the diagonal phases so the distribution is exactly Haar
    d = np.diag(r)
    return q * (d / np.abs(d))
