"""Entropies and mutual-information measures of qubit blocks of a PS state.

All logarithms are base 2, so von Neumann and Renyi entropies are in bits.
Tripartite mutual information is evaluated through its seven-entropy
expansion S_A + S_B + S_C - S_AB - S_BC - S_AC + S_ABC, which makes the
symmetry under block permutations exact by construction and reuses the
fact that for PS states a block entropy depends only on the block size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PSState, _block_coefficients, block_eigenvalues
from .errors import DomainError, IntegrityError

EIG_CLIP = 1e-12  # eigenvalues below this are treated as exact zeros
PSD_TOL = 1e-10   # most negative eigenvalue tolerated before integrity error


@dataclass(frozen=True)
class EntropyKind:
    """Entropy functional selector: von Neumann, linear, or Renyi(alpha)."""

    tag: str
    alpha: float | None = None


VON_NEUMANN = EntropyKind("von_neumann")
LINEAR = EntropyKind("linear")


def renyi(alpha: float) -> EntropyKind:
    """Renyi entropy of order alpha (alpha > 0, alpha != 1)."""
    alpha = float(alpha)
    if alpha <= 0 or alpha == 1.0:
        raise DomainError(f"Renyi order alpha={alpha} must be positive and != 1")
    return EntropyKind("renyi", alpha)


def entropy_from_eigenvalues(lam: np.ndarray, kind: EntropyKind):
    """Entropy of one or many spectra; the eigenvalue axis goes last.

    Eigenvalues are clipped to [0, 1] (values below 1e-12 to exact zero)
    before evaluation, absorbing PSD drift from finite-precision Gram
    products.
    """
    lam = np.asarray(lam, dtype=float)
    if lam.size and float(lam.min()) < -PSD_TOL:
        raise IntegrityError(f"eigenvalue {lam.min()} below -{PSD_TOL}: not a state")
    lam = np.clip(lam, 0.0, 1.0)
    lam = np.where(lam < EIG_CLIP, 0.0, lam)
    if kind.tag == "von_neumann":
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(lam > 0.0, lam * np.log2(lam), 0.0)
        return -terms.sum(axis=-1)
    if kind.tag == "linear":
        return 1.0 - (lam ** 2).sum(axis=-1)
    if kind.tag == "renyi":
        return np.log2((lam ** kind.alpha).sum(axis=-1)) / (1.0 - kind.alpha)
    raise DomainError(f"unknown entropy kind {kind.tag!r}")


def entropy(rho: np.ndarray, kind: EntropyKind = VON_NEUMANN, check: bool = True) -> float:
    """Entropy of a density matrix (bits for von Neumann / Renyi).

    With check=True the matrix is validated against the density-matrix
    invariants (Hermitian to 1e-12, unit trace to 1e-10) before solving.
    """
    rho = np.asarray(rho)
    if check:
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise DomainError("density matrix must be square")
        if np.abs(rho - rho.conj().T).max() > 1e-12 * max(1.0, np.abs(rho).max()):
            raise IntegrityError("matrix is not Hermitian within tolerance")
        if abs(np.trace(rho).real - 1.0) > 1e-10:
            raise IntegrityError(f"trace {np.trace(rho)!r} deviates from 1")
    lam = np.linalg.eigvalsh(rho)
    return float(entropy_from_eigenvalues(lam, kind))


def block_entropy(state: PSState, q: int, kind: EntropyKind = VON_NEUMANN) -> float:
    """Entropy of a q-qubit block (any q in [0, N]; q = 0, N give 0)."""
    return float(entropy_from_eigenvalues(block_eigenvalues(state, q), kind))


def block_spectra_batch(amplitudes: np.ndarray, n_qubits: int, q: int) -> np.ndarray:
    """Spectra of q-qubit blocks for a batch of amplitude vectors.

    amplitudes has shape (..., N+1); the result has the eigenvalues of
    each block reduced matrix along the last axis (smaller Gram side, so
    exact zeros of rank-deficient blocks are simply absent).
    """
    if q == 0 or q == n_qubits:
        return np.ones(amplitudes.shape[:-1] + (1,))
    a = _block_coefficients(amplitudes, n_qubits, q)
    if a.shape[-2] <= a.shape[-1]:
        gram = a @ np.conj(np.swapaxes(a, -1, -2))
    else:
        gram = np.conj(np.swapaxes(a, -1, -2)) @ a
    return np.linalg.eigvalsh(gram)


def block_entropies_batch(amplitudes: np.ndarray, n_qubits: int, sizes,
                          kind: EntropyKind) -> dict:
    """Entropies of several block sizes for a batch of states at once."""
    return {q: entropy_from_eigenvalues(block_spectra_batch(amplitudes, n_qubits, q), kind)
            for q in set(sizes)}


def _check_blocks(n_qubits: int, sizes) -> None:
    if any(q < 1 for q in sizes):
        raise DomainError(f"block sizes {sizes} must all be >= 1")
    if sum(sizes) > n_qubits:
        raise DomainError(f"blocks {sizes} exceed the {n_qubits}-qubit system")


def mutual_information(state: PSState, q_a: int, q_b: int,
                       kind: EntropyKind = VON_NEUMANN) -> float:
    """I2(A:B) = S(A) + S(B) - S(AB) between blocks of q_a and q_b qubits."""
    _check_blocks(state.n_qubits, (q_a, q_b))
    s = block_entropies_batch(state.amplitudes, state.n_qubits,
                              (q_a, q_b, q_a + q_b), kind)
    return float(s[q_a] + s[q_b] - s[q_a + q_b])


def tmi(state: PSState, q1: int, q2: int, q3: int,
        kind: EntropyKind = VON_NEUMANN) -> float:
    """Tripartite mutual information I3 between blocks of q1, q2, q3 qubits.

    Evaluated as the seven-term entropy expansion; positive values mean
    redundant bipartite sharing, negative values multipartite sharing.
    """
    _check_blocks(state.n_qubits, (q1, q2, q3))
    sizes = (q1, q2, q3, q1 + q2, q1 + q3, q2 + q3, q1 + q2 + q3)
    s = block_entropies_batch(state.amplitudes, state.n_qubits, sizes, kind)
    return float(s[q1] + s[q2] + s[q3] - s[q1 + q2] - s[q1 + q3] - s[q2 + q3]
                 + s[q1 + q2 + q3])


def tmi_batch(amplitudes: np.ndarray, n_qubits: int, sizes, kind: EntropyKind):
    """I3 for a batch of amplitude vectors (shape (..., N+1) -> (...))."""
    q1, q2, q3 = sizes
    _check_blocks(n_qubits, sizes)
    wanted = (q1, q2, q3, q1 + q2, q1 + q3, q2 + q3, q1 + q2 + q3)
    s = block_entropies_batch(amplitudes, n_qubits, wanted, kind)
    return (s[q1] + s[q2] + s[q3] - s[q1 + q2] - s[q1 + q3] - s[q2 + q3]
            + s[q1 + q2 + q3])
