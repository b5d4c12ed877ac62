"""Random PS and Wishart ensembles: samplers, spectra, analytic averages.

Random PS states draw their Dicke amplitudes uniformly (Haar) from the
unit sphere in C^(N+1): independent standard complex Gaussians divided by
their norm.  Reduced matrices A A^dagger of such states form the positive
random-matrix ensemble studied here; trace-normalized Wishart matrices
G G^dagger / tr(G G^dagger) are the comparison ensemble of unrestricted
random states.

Reproducibility: every Monte Carlo sample i of a run with seed s is drawn
from its own counter-based Philox stream keyed by (s, i).  Pooled results
are therefore bit-identical no matter how the index range is sharded
across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import PSState, _block_coefficients, log_binomial
from .errors import DomainError
from .measures import (VON_NEUMANN, EntropyKind, block_spectra_batch,
                       entropy_from_eigenvalues, tmi_batch)

LN2 = math.log(2.0)
_MASK64 = (1 << 64) - 1


# ---------------------------------------------------------------------------
# seeded streams and samplers
# ---------------------------------------------------------------------------

def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Counter-based generator for sample `index` of a run seeded by `seed`.

    Philox keyed by the 128-bit pair (seed, index): distinct indices give
    independent streams, so sharding a sample range over workers cannot
    change any drawn value.
    """
    key = (int(index) << 64) | (int(seed) & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))


def _complex_normals(rng: np.random.Generator, count: int) -> np.ndarray:
    z = rng.standard_normal(2 * count)
    return z[0::2] + 1j * z[1::2]


def sample_ps_state(n_qubits: int, rng: np.random.Generator) -> PSState:
    """One random PS state: Haar-uniform Dicke amplitudes in C^(N+1)."""
    if n_qubits < 1:
        raise DomainError(f"n_qubits={n_qubits} must be >= 1")
    z = _complex_normals(rng, n_qubits + 1)
    return PSState(z / np.linalg.norm(z))


def sample_wishart_rdm(n1: int, n2: int, rng: np.random.Generator) -> np.ndarray:
    """Trace-normalized Wishart density matrix G G^dagger / tr, size n1 x n1."""
    if n1 < 1 or n2 < 1:
        raise DomainError(f"Wishart dimensions ({n1}, {n2}) must be >= 1")
    g = _complex_normals(rng, n1 * n2).reshape(n1, n2)
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def ps_amplitude_batch(n_qubits: int, seed: int, count: int, start: int = 0) -> np.ndarray:
    """Rows i = start..start+count-1 of the PS sample sequence for `seed`."""
    out = np.empty((count, n_qubits + 1), dtype=complex)
    for i in range(count):
        z = _complex_normals(stream(seed, start + i), n_qubits + 1)
        out[i] = z / np.linalg.norm(z)
    return out


def haar_state_batch(dim: int, seed: int, count: int, start: int = 0) -> np.ndarray:
    """Haar-random unit vectors in C^dim, one per-sample stream each."""
    out = np.empty((count, dim), dtype=complex)
    for i in range(count):
        z = _complex_normals(stream(seed, start + i), dim)
        out[i] = z / np.linalg.norm(z)
    return out


def _map_index_chunks(total: int, chunk: int, threads: int, worker):
    """Run worker(start, count) over the index range and concatenate in order."""
    ranges = [(s, min(chunk, total - s)) for s in range(0, total, chunk)]
    if threads > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(lambda rc: worker(*rc), ranges))
    else:
        parts = [worker(s, c) for s, c in ranges]
    return np.concatenate(parts, axis=0)


# ---------------------------------------------------------------------------
# spectra and histograms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnsembleSpec:
    """PS(N, Q) or Wishart(N1, N2) sampling request."""

    kind: str            # "ps" | "wishart"
    dims: tuple          # (N, Q) for ps; (N1, N2) for wishart
    sample_count: int
    seed: int

    def __post_init__(self):
        a, b = self.dims
        if self.kind == "ps":
            if not (1 <= b <= a - 1):
                raise DomainError(f"PS ensemble needs 1 <= Q <= N-1, got N={a}, Q={b}")
        elif self.kind == "wishart":
            if a < 1 or b < 1:
                raise DomainError(f"Wishart needs N1, N2 >= 1, got {self.dims}")
        else:
            raise DomainError(f"unknown ensemble kind {self.kind!r}")
        if self.sample_count < 1:
            raise DomainError("sample_count must be positive")

    @property
    def scale(self) -> float:
        """Eigenvalue scale factor: subsystem dimension."""
        return float(self.dims[1] + 1 if self.kind == "ps" else self.dims[0])


@dataclass(frozen=True)
class SpectralHistogram:
    """Unit-area histogram of scaled eigenvalues x = lambda * (subsystem dim)."""

    bin_edges: np.ndarray
    densities: np.ndarray
    sample_count: int


def ensemble_eigenvalues(spec: EnsembleSpec, chunk: int = 512, threads: int = 1) -> np.ndarray:
    """Pooled unscaled eigenvalues of all sampled reduced density matrices."""
    if spec.kind == "ps":
        n, q = spec.dims

        def worker(start, count):
            amps = ps_amplitude_batch(n, spec.seed, count, start)
            return block_spectra_batch(amps, n, q)
    else:
        n1, n2 = spec.dims

        def worker(start, count):
            rhos = np.empty((count, n1, n1), dtype=complex)
            for i in range(count):
                rhos[i] = sample_wishart_rdm(n1, n2, stream(spec.seed, start + i))
            return np.linalg.eigvalsh(rhos)

    return _map_index_chunks(spec.sample_count, chunk, threads, worker).ravel()


def spectral_histogram(spec: EnsembleSpec, bins: int = 250,
                       chunk: int = 512, threads: int = 1) -> SpectralHistogram:
    """Histogram of eigenvalues scaled by the subsystem dimension, area 1."""
    if bins < 10:
        raise DomainError(f"bins={bins} must be >= 10")
    scaled = ensemble_eigenvalues(spec, chunk=chunk, threads=threads) * spec.scale
    densities, edges = np.histogram(scaled, bins=bins, density=True)
    return SpectralHistogram(edges, densities, spec.sample_count)


def marchenko_pastur_density(x):
    """Limiting density (1/2pi) sqrt((4-x)/x) of square trace-normalized
    Wishart eigenvalues after scaling by the subsystem dimension."""
    x = np.asarray(x, dtype=float)
    inside = (x > 0.0) & (x < 4.0)
    out = np.zeros_like(x)
    xv = x[inside]
    out[inside] = np.sqrt((4.0 - xv) / xv) / (2.0 * np.pi)
    return out if out.ndim else float(out)


def exponential_tail_slope(hist: SpectralHistogram, mass: float = 0.10) -> float:
    """Straight-line slope of log density over the occupied bins holding the
    top `mass` fraction of eigenvalues (default: the top decile).

    Negative values indicate an exponentially decaying tail.  The window
    is taken by probability mass rather than bin index so the fit is not
    dominated by shot noise in the last few nearly empty bins.
    """
    widths = np.diff(hist.bin_edges)
    cumulative = np.cumsum(hist.densities * widths)
    start = int(np.searchsorted(cumulative, 1.0 - mass))
    occupied = np.nonzero(hist.densities > 0)[0]
    top = occupied[occupied >= start]
    if top.size < 3:
        raise DomainError("tail window holds fewer than 3 occupied bins")
    centers = 0.5 * (hist.bin_edges[top] + hist.bin_edges[top + 1])
    slope = np.polyfit(centers, np.log(hist.densities[top]), 1)[0]
    return float(slope)


# ---------------------------------------------------------------------------
# closed-form ensemble averages
# ---------------------------------------------------------------------------

def _check_ps_block(n: int, q: int) -> None:
    if not (1 <= q <= n - 1):
        raise DomainError(f"need 1 <= Q <= N-1, got N={n}, Q={q}")


def avg_purity_ps(n: int, q: int) -> float:
    """Average tr(rho_Q^2) over random PS states: (N+1)/((Q+1)(N-Q+1))."""
    _check_ps_block(n, q)
    return (n + 1) / ((q + 1) * (n - q + 1))


def avg_linear_entropy_ps(n: int, q: int) -> float:
    """Average linear entropy Q(N-Q)/((Q+1)(N-Q+1)); symmetric in Q <-> N-Q."""
    _check_ps_block(n, q)
    return q * (n - q) / ((q + 1) * (n - q + 1))


def avg_linear_entropy_wishart(n: int, q: int, flavor: str = "qubits") -> float:
    """Average linear entropy of a Q-qubit block of unrestricted random states.

    flavor="qubits": subsystem dimension 2^Q inside 2^N.
    flavor="dims":   subsystem dimension Q+1 inside (Q+1)(N-Q+1) — the
    Wishart ensemble dimension-matched to PS blocks (always slightly
    below the PS average).
    """
    _check_ps_block(n, q)
    if flavor == "qubits":
        return (2 ** q - 1) * (2 ** (n - q) - 1) / (2 ** n + 1)
    if flavor == "dims":
        return q * (n - q) / (1 + (q + 1) * (n - q + 1))
    raise DomainError(f"flavor must be 'qubits' or 'dims', got {flavor!r}")


def avg_vn_entropy_ps(n: int, q: int, alpha: float = 2.0 / 3.0,
                      half_correction: bool = False) -> float:
    """Fitted-form average block von Neumann entropy of random PS states.

    log2(Q+1) - alpha (Q+1)/(N-Q+1) bits, valid for 1 <= Q <= N/2 at
    large N; alpha defaults to 2/3.  With half_correction=True an extra
    -1/(N+1) is subtracted, applicable only at Q = N/2 (the correction is
    not extrapolated to other block sizes).
    """
    if not (1 <= q <= n / 2):
        raise DomainError(f"need 1 <= Q <= N/2, got N={n}, Q={q}")
    value = math.log2(q + 1) - alpha * (q + 1) / (n - q + 1)
    if half_correction:
        if 2 * q != n:
            raise DomainError("the -1/(N+1) correction applies only at Q = N/2")
        value -= 1.0 / (n + 1)
    return value


def page_entropy(m: int, n: int) -> float:
    """Page average entanglement entropy log2(m) - m/(2n ln 2) bits, m <= n."""
    if not (1 <= m <= n):
        raise DomainError(f"need 1 <= m <= n, got ({m}, {n})")
    return math.log2(m) - m / (2.0 * n * LN2)


def avg_tmi_vn_ps(q: int) -> float:
    """Large-N estimate of the PS-ensemble vN TMI between three Q-qubit
    blocks: log2[(3Q+1)(Q+1)^3/(2Q+1)^3], positive for every Q >= 1."""
    if q < 1:
        raise DomainError("Q must be >= 1")
    return math.log2((3 * q + 1) * (q + 1) ** 3 / (2 * q + 1) ** 3)


def avg_tmi_vn_wishart(q: int, n: int) -> float:
    """Page-based estimate of the unrestricted-ensemble vN TMI between
    three Q-qubit blocks: -2^(2Q-N-1) (2^(4Q) - 3 2^(2Q) + 3)/ln 2 < 0."""
    if q < 1 or 3 * q > n:
        raise DomainError(f"need 1 <= Q and 3Q <= N, got Q={q}, N={n}")
    return -(2.0 ** (2 * q - n - 1)) * (2.0 ** (4 * q) - 3.0 * 2.0 ** (2 * q) + 3.0) / LN2


def avg_tmi_vn_wishart_blocks(n: int, sizes) -> float:
    """Page-deviation estimate of the unrestricted-ensemble vN TMI for
    arbitrary block sizes (reduces to avg_tmi_vn_wishart when equal)."""
    q1, q2, q3 = sizes
    if min(sizes) < 1 or q1 + q2 + q3 > n:
        raise DomainError(f"invalid blocks {sizes} for N={n}")

    def dev(q):
        return -(2.0 ** (2 * q - n - 1)) / LN2

    return (dev(q1) + dev(q2) + dev(q3) - dev(q1 + q2) - dev(q1 + q3)
            - dev(q2 + q3) + dev(q1 + q2 + q3))


def avg_tmi_linear_ps_111(n: int) -> float:
    """Exact PS-ensemble average of the linear-entropy TMI between three
    single qubits: (N-3)(N^2-N+4)/(4N(N-1)(N-2))."""
    if n < 3:
        raise DomainError("need at least 3 qubits")
    return (n - 3) * (n * n - n + 4) / (4.0 * n * (n - 1) * (n - 2))


def avg_tmi_linear_ps_mmm(m: int) -> float:
    """Large-N PS-ensemble average of the linear-entropy TMI between three
    m-qubit blocks: 6m^3/((m+1)(2m+1)(3m+1))."""
    if m < 1:
        raise DomainError("m must be >= 1")
    return 6.0 * m ** 3 / ((m + 1) * (2 * m + 1) * (3 * m + 1))


def comb_identity_residual(n: int, q: int) -> float:
    """Relative residual of the purity combinatorial identity.

    sum_{k,j,m} binom(Q,k) binom(Q,j) binom(N-Q,m)^2
                / (binom(N,k+m) binom(N,j+m))  ==  (N+1)^2 / (N-Q+1),
    evaluated in log-space floats after collapsing the (k, j) double sum
    into a square.
    """
    _check_ps_block(n, q)
    if n > 60:
        raise DomainError(f"identity check capped at N <= 60, got {n}")
    k = np.arange(q + 1)
    m = np.arange(n - q + 1)
    log_q = log_binomial(q, k)
    log_nq = log_binomial(n - q, m)
    log_n = log_binomial(n, np.add.outer(k, m))
    inner = np.exp(log_q[:, None] - log_n).sum(axis=0)
    total = float(np.exp(2.0 * log_nq) @ (inner ** 2))
    target = (n + 1) ** 2 / (n - q + 1)
    return abs(total - target) / target


# ---------------------------------------------------------------------------
# Monte Carlo estimators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MCResult:
    mean: float
    stderr: float
    count: int


def _summarize(values: np.ndarray) -> MCResult:
    values = np.asarray(values, dtype=float)
    n = values.size
    sd = values.std(ddof=1) if n > 1 else 0.0
    return MCResult(float(values.mean()), float(sd / math.sqrt(n)), n)


def mc_purity_samples(n: int, q: int, samples: int, seed: int,
                      chunk: int = 4096, threads: int = 1) -> np.ndarray:
    """Per-sample tr(rho_Q^2) over random PS states (Frobenius route, no eig)."""
    _check_ps_block(n, q)

    def worker(start, count):
        amps = ps_amplitude_batch(n, seed, count, start)
        a = _block_coefficients(amps, n, q)
        if a.shape[-2] > a.shape[-1]:
            a = np.swapaxes(a, -1, -2)
        gram = a @ np.conj(np.swapaxes(a, -1, -2))
        return np.sum(np.abs(gram) ** 2, axis=(-1, -2))

    return _map_index_chunks(samples, chunk, threads, worker)


def mc_block_entropy_samples(n: int, q: int, kind: EntropyKind, samples: int,
                             seed: int, chunk: int = 2048, threads: int = 1) -> np.ndarray:
    """Per-sample block entropy over random PS states."""
    _check_ps_block(n, q)

    def worker(start, count):
        amps = ps_amplitude_batch(n, seed, count, start)
        return entropy_from_eigenvalues(block_spectra_batch(amps, n, q), kind)

    return _map_index_chunks(samples, chunk, threads, worker)


def mc_tmi_samples(n: int, sizes, kind: EntropyKind, samples: int, seed: int,
                   chunk: int = 2048, threads: int = 1) -> np.ndarray:
    """Per-sample TMI over random PS states."""

    def worker(start, count):
        amps = ps_amplitude_batch(n, seed, count, start)
        return tmi_batch(amps, n, sizes, kind)

    return _map_index_chunks(samples, chunk, threads, worker)


def mc_purity(n, q, samples, seed, **kw) -> MCResult:
    return _summarize(mc_purity_samples(n, q, samples, seed, **kw))


def mc_purity_sweep(n: int, samples: int, seed: int, qs=None,
                    chunk: int = 4096, threads: int = 1) -> dict:
    """Per-Q purity statistics over one shared set of sampled states.

    Returns {q: MCResult}; all block sizes are evaluated on the same
    sample sequence, so a sweep costs one pass of sampling.
    """
    qs = list(qs) if qs is not None else list(range(1, n))
    for q in qs:
        _check_ps_block(n, q)

    def worker(start, count):
        amps = ps_amplitude_batch(n, seed, count, start)
        out = np.empty((count, len(qs)))
        for col, q in enumerate(qs):
            a = _block_coefficients(amps, n, q)
            if a.shape[-2] > a.shape[-1]:
                a = np.swapaxes(a, -1, -2)
            gram = a @ np.conj(np.swapaxes(a, -1, -2))
            out[:, col] = np.sum(np.abs(gram) ** 2, axis=(-1, -2))
        return out

    values = _map_index_chunks(samples, chunk, threads, worker)
    return {q: _summarize(values[:, col]) for col, q in enumerate(qs)}


def mc_block_entropy(n, q, kind, samples, seed, **kw) -> MCResult:
    return _summarize(mc_block_entropy_samples(n, q, kind, samples, seed, **kw))


def mc_tmi(n, sizes, kind, samples, seed, **kw) -> MCResult:
    return _summarize(mc_tmi_samples(n, sizes, kind, samples, seed, **kw))


def fit_vn_alpha(pairs, samples: int, seed: int) -> float:
    """Least-squares fit of the constant in the PS average-entropy form.

    pairs is an iterable of (N, Q); the deviation log2(Q+1) - <S_vN> is
    regressed through the origin against (Q+1)/(N-Q+1).
    """
    xs, ys = [], []
    for i, (n, q) in enumerate(pairs):
        res = mc_block_entropy(n, q, VON_NEUMANN, samples, seed + i)
        xs.append((q + 1) / (n - q + 1))
        ys.append(math.log2(q + 1) - res.mean)
    xs, ys = np.asarray(xs), np.asarray(ys)
    return float(xs @ ys / (xs @ xs))


# ---------------------------------------------------------------------------
# unrestricted (full Hilbert space) random states
# ---------------------------------------------------------------------------

def reduced_density_full(psi: np.ndarray, keep, n_qubits: int) -> np.ndarray:
    """Reduced density matrix of computational-basis qubits `keep` of a
    full 2^N pure state (qubit 0 = most significant index bit)."""
    keep = sorted(keep)
    if any(not 0 <= q < n_qubits for q in keep):
        raise DomainError(f"qubit indices {keep} outside [0, {n_qubits})")
    tensor = psi.reshape((2,) * n_qubits)
    rest = [ax for ax in range(n_qubits) if ax not in keep]
    mat = np.transpose(tensor, keep + rest).reshape(2 ** len(keep), -1)
    return mat @ mat.conj().T


def tmi_full_state(psi: np.ndarray, n_qubits: int, sizes,
                   kind: EntropyKind = VON_NEUMANN) -> float:
    """TMI between the first q1, next q2, next q3 qubits of a full 2^N state."""
    q1, q2, q3 = sizes
    if min(sizes) < 1 or q1 + q2 + q3 > n_qubits:
        raise DomainError(f"invalid blocks {sizes} for N={n_qubits}")
    a = list(range(q1))
    b = list(range(q1, q1 + q2))
    c = list(range(q1 + q2, q1 + q2 + q3))

    def s(qubits):
        lam = np.linalg.eigvalsh(reduced_density_full(psi, qubits, n_qubits))
        return entropy_from_eigenvalues(lam, kind)

    return float(s(a) + s(b) + s(c) - s(a + b) - s(b + c) - s(a + c) + s(a + b + c))


def mc_tmi_full_samples(n_qubits: int, sizes, kind: EntropyKind, samples: int,
                        seed: int) -> np.ndarray:
    """Per-sample TMI of Haar-random full 2^N states (Wishart reductions)."""
    out = np.empty(samples)
    for i in range(samples):
        psi = haar_state_batch(2 ** n_qubits, seed, 1, start=i)[0]
        out[i] = tmi_full_state(psi, n_qubits, sizes, kind)
    return out


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Gaussian matrix."""
    z = _complex_normals(rng, dim * dim).reshape(dim, dim)
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))
