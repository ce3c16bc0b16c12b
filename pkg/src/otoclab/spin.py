"""Spin-chain building blocks: Pauli operators on sites, the mixed-field
Ising Hamiltonian, common initial states, and eigenprojectors with the
degeneracy labeling used by the fine-grained distributions.

Sites are 1-based. Basis ordering is the usual binary one: computational
index i has site s in state (i >> (n - s)) & 1, with bit 0 meaning spin up.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import qla

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"x": PAULI_X, "y": PAULI_Y, "z": PAULI_Z}

_EIGENVALUE_MATCH_TOL = 1e-9


@dataclass(frozen=True)
class SpinChainSpec:
    """Mixed-field Ising chain parameters (open boundaries)."""

    n: int
    j: float = 1.0
    h: float = 0.0
    g: float = 0.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need at least two sites")
        if self.j <= 0:
            raise ValueError("ferromagnetic coupling j must be positive")

    @property
    def dim(self) -> int:
        return 2**self.n


@dataclass(frozen=True)
class LocalObservable:
    """A single-site Pauli, identified by site index and axis."""

    site: int
    axis: str

    def __post_init__(self):
        if self.axis not in PAULI:
            raise ValueError(f"axis must be one of x, y, z, got {self.axis!r}")
        if self.site < 1:
            raise ValueError("sites are 1-based")

    def matrix(self, n: int) -> np.ndarray:
        return site_pauli(n, self.site, self.axis)


def site_pauli(n: int, site: int, axis: str) -> np.ndarray:
    """Pauli operator on one site of an n-site chain, identity elsewhere."""
    if not 1 <= site <= n:
        raise ValueError(f"site {site} outside chain of length {n}")
    if axis not in PAULI:
        raise ValueError(f"unknown axis {axis!r}")
    factors = [PAULI[axis] if s == site else np.eye(2) for s in range(1, n + 1)]
    return qla.kron(*factors)


def ising_hamiltonian(spec: SpinChainSpec) -> np.ndarray:
    """H = -J sum sz.sz - h sum sz - g sum sx with open boundaries."""
    n = spec.n
    ham = np.zeros((spec.dim, spec.dim), dtype=complex)
    for s in range(1, n):
        ham -= spec.j * site_pauli(n, s, "z") @ site_pauli(n, s + 1, "z")
    for s in range(1, n + 1):
        if spec.h != 0.0:
            ham -= spec.h * site_pauli(n, s, "z")
        if spec.g != 0.0:
            ham -= spec.g * site_pauli(n, s, "x")
    return ham


def thermal_state(h, temperature: float) -> np.ndarray:
    """Normalized e^{-H/T}; temperature = +inf returns the maximally mixed state."""
    hmat = qla.assert_hermitian(h)
    if temperature == np.inf:
        return np.eye(hmat.shape[0], dtype=complex) / hmat.shape[0]
    if not temperature > 0:
        raise ValueError("temperature must be positive (negative temperatures out of scope)")
    unnorm = qla.expm_scaled(hmat, -1.0 / temperature)
    return unnorm / np.trace(unnorm).real


def product_plus_x_state(n: int) -> np.ndarray:
    """Density operator of the pure product state with every spin along +x."""
    if n < 1:
        raise ValueError("need at least one site")
    plus = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)
    vec = np.array([1.0 + 0j])
    for _ in range(n):
        vec = np.kron(vec, plus)
    return np.outer(vec, vec.conj())


def eigenprojector(o, eigenvalue: float) -> np.ndarray:
    """Projector onto the full degenerate eigenspace of the given eigenvalue."""
    sys = qla.eigh(o)
    sel = np.abs(sys.eigenvalues - eigenvalue) < _EIGENVALUE_MATCH_TOL
    if not np.any(sel):
        raise ValueError(f"{eigenvalue} is not in the spectrum")
    cols = sys.eigenvectors[:, sel]
    return cols @ cols.conj().T


def distinct_eigenvalues(o) -> np.ndarray:
    """Ascending distinct eigenvalues of a Hermitian operator."""
    sys = qla.eigh(o)
    vals = []
    for start, _ in sys.degenerate_groups():
        vals.append(sys.eigenvalues[start])
    return np.array(vals)


def local_eigenbasis(n: int, site: int, axis: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Labeled eigenbasis of a single-site Pauli on an n-site chain.

    Returns (eigenvalues, columns, config_labels). Column k is the product
    state |axis eigenstate> on the given site tensored with a computational
    configuration of the remaining n-1 sites; config_labels[k] is that
    configuration read as an integer, bit order following site order. The
    eigenvalue blocks come out ascending (-1 block first), configurations
    ascending within each block, matching what qla.eigh produces for the
    same operator.
    """
    if not 1 <= site <= n:
        raise ValueError(f"site {site} outside chain of length {n}")
    single = qla.eigh(PAULI[axis])
    dim = 2**n
    half = dim // 2
    cols = np.zeros((dim, dim), dtype=complex)
    evals = np.zeros(dim)
    labels = np.zeros(dim, dtype=np.int64)
    k = 0
    for blk in range(2):  # ascending eigenvalue blocks
        ev = single.eigenvalues[blk]
        site_vec = single.eigenvectors[:, blk]
        for config in range(half):
            vec = np.array([1.0 + 0j])
            for s in range(1, n + 1):
                if s == site:
                    vec = np.kron(vec, site_vec)
                else:
                    bit = (config >> (n - 2 - _other_pos(n, site, s))) & 1
                    vec = np.kron(vec, np.array([1.0, 0.0]) if bit == 0 else np.array([0.0, 1.0]))
            cols[:, k] = vec
            evals[k] = ev
            labels[k] = config
            k += 1
    return evals, cols, labels


def _other_pos(n: int, site: int, s: int) -> int:
    """Position of site s among the n-1 sites that are not `site` (0-based)."""
    return s - 1 if s < site else s - 2


def config_label_text(n: int, site: int, label: int) -> str:
    """Readable bitstring for a degeneracy label, one bit per untouched site."""
    return format(label, f"0{n - 1}b")
