"""Codebook-based channel estimation from the two pilot slots.

The receiver never trains: it sweeps a grid of candidate departure angles,
estimates the complex gain of each candidate from pilot slot N-1, scores
the resulting channel guess with the pilot-slot-N SINR estimate, and keeps
the best-scoring candidate.  The wideband variant shares the angle grid
across subcarriers and ranks candidates by the subcarrier-averaged score,
which is what makes it robust to noise and multipath.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ArrayGeometry, NoiseModel
from .dftcore import PermutedDftFamily
from .receiver import SINR_CAP
from .transceiver import ReceivedBlock

__all__ = [
    "Codebook",
    "EstimationResult",
    "make_codebook",
    "estimate_gain",
    "score_candidate",
    "narrowband_search",
    "wideband_search",
    "complexity_psi",
]


@dataclass(frozen=True)
class Codebook:
    """Q quantized departure angles spanning [range_start, range_start + range_span).

    Angle q (1-based) is range_start + (q - 1) * range_span / Q.  The default
    grid spans the full circle starting at -pi; restricted angular domains
    keep Q fixed over the smaller span (finer effective resolution).
    """

    q_levels: int
    range_start: float
    range_span: float
    angles: np.ndarray  # (Q,)

    def vectors(self, geometry: ArrayGeometry, m: int = 1) -> np.ndarray:
        """Candidate steering vectors on subcarrier m, shape (N, Q)."""
        ratio = geometry.subcarrier_freq_hz(m) / geometry.carrier_freq_hz
        p = np.arange(geometry.n_antennas)
        return np.exp(1j * np.pi * ratio * np.outer(p, np.sin(self.angles)))


@dataclass(frozen=True)
class EstimationResult:
    """Outcome of a codebook sweep for one device."""

    device: int
    q_star: int               # 1-based winning grid index
    alpha_hat: np.ndarray     # (M,) complex gain per subcarrier
    h_hat: np.ndarray         # (M, N) estimated channel per subcarrier
    score: float              # value of the maximized objective
    multiply_count: int


def make_codebook(
    q_levels: int,
    range_start: float = -math.pi,
    range_span: float = 2.0 * math.pi,
) -> Codebook:
    if q_levels < 1:
        raise ValueError("q_levels must be positive")
    if range_span <= 0:
        raise ValueError("range_span must be positive")
    q = np.arange(q_levels)
    angles = range_start + q * (range_span / q_levels)
    return Codebook(
        q_levels=q_levels, range_start=range_start, range_span=range_span, angles=angles
    )


def estimate_gain(
    candidate: np.ndarray,
    block: ReceivedBlock,
    family: PermutedDftFamily,
    pilot1: complex,
    noise: NoiseModel,
) -> complex:
    """Estimate the complex LoS gain assuming the candidate steering vector.

    Combines the block with family member N-1 (the first pilot slot) using
    the unit-modulus candidate as the channel, then divides by the known
    pilot.  Returns alpha_hat (conjugation already applied).
    """
    if pilot1 == 0:
        raise ValueError("pilot symbol must be nonzero")
    n = family.n
    # unit-modulus candidate: the entrywise inverse conjugate is the vector itself
    d = np.asarray(candidate) @ (family.member(n - 1).conj() @ block.y)
    alpha_conj = d / (math.sqrt(noise.tx_power * n) * pilot1)
    return complex(np.conj(alpha_conj))


def score_candidate(
    candidate: np.ndarray,
    alpha_hat: complex,
    block: ReceivedBlock,
    family: PermutedDftFamily,
    pilot2: complex,
    noise: NoiseModel,
    cap: float = SINR_CAP,
) -> float:
    """Spectral-efficiency score log2(1 + estimated SINR) of one candidate."""
    n = family.n
    p_hat = math.sqrt(noise.tx_power * n) * pilot2
    if alpha_hat == 0:
        return 0.0
    d = (np.asarray(candidate) @ (family.member(n).conj() @ block.y)) / np.conj(alpha_hat)
    resid = d - p_hat
    if resid == 0:
        return math.log2(1.0 + cap)
    gamma = abs(p_hat) ** 2 / abs(resid) ** 2
    return math.log2(1.0 + min(gamma, cap))


def _sweep_scores(
    block: ReceivedBlock,
    family: PermutedDftFamily,
    vectors: np.ndarray,
    pilots: tuple[complex, complex],
    noise: NoiseModel,
    cap: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized candidate sweep; returns (scores, alpha_conj), each (Q,)."""
    n = family.n
    pilot1, pilot2 = pilots
    if pilot1 == 0 or pilot2 == 0:
        raise ValueError("pilot symbols must be nonzero")
    scale = math.sqrt(noise.tx_power * n)

    c1 = family.member(n - 1).conj() @ block.y
    c2 = family.member(n).conj() @ block.y
    d1 = vectors.T @ c1
    d2 = vectors.T @ c2

    alpha_conj = d1 / (scale * pilot1)
    p_hat = scale * pilot2
    with np.errstate(divide="ignore", invalid="ignore"):
        resid = d2 / alpha_conj - p_hat
        gamma = np.abs(p_hat) ** 2 / np.abs(resid) ** 2
    # zero gain estimate -> unusable candidate; zero residual -> capped sentinel
    gamma = np.where(alpha_conj == 0, 0.0, gamma)
    gamma = np.nan_to_num(gamma, nan=0.0, posinf=cap)
    scores = np.log2(1.0 + np.minimum(gamma, cap))
    return scores, alpha_conj


def narrowband_search(
    block: ReceivedBlock,
    family: PermutedDftFamily,
    codebook: Codebook,
    geometry: ArrayGeometry,
    pilots: tuple[complex, complex],
    noise: NoiseModel,
    cap: float = SINR_CAP,
    vectors: np.ndarray | None = None,
) -> EstimationResult:
    """Single-subcarrier codebook sweep.

    Visits every grid index, keeps the best score, and breaks exact ties
    toward the lowest index.  ``vectors`` can carry precomputed candidate
    steering vectors for the block's subcarrier.
    """
    if vectors is None:
        vectors = codebook.vectors(geometry, block.subcarrier)
    scores, alpha_conj = _sweep_scores(block, family, vectors, pilots, noise, cap)
    q0 = int(np.argmax(scores))  # first maximum: lowest-index tie break
    alpha = np.conj(alpha_conj[q0])
    h_hat = alpha * vectors[:, q0]
    return EstimationResult(
        device=block.device,
        q_star=q0 + 1,
        alpha_hat=np.array([alpha]),
        h_hat=h_hat[None, :],
        score=float(scores[q0]),
        multiply_count=complexity_psi(family.n, 1, codebook.q_levels),
    )


def wideband_search(
    blocks: list[ReceivedBlock],
    family: PermutedDftFamily,
    codebook: Codebook,
    geometry: ArrayGeometry,
    pilots: list[tuple[complex, complex]] | tuple[complex, complex],
    noise: NoiseModel,
    cap: float = SINR_CAP,
    vectors: list[np.ndarray] | None = None,
) -> EstimationResult:
    """Joint sweep across subcarriers sharing one departure angle.

    Per-subcarrier scores for each grid index are averaged with the
    1/(M + L_cp) cyclic-prefix weight and the argmax of that mean picks a
    single angle; per-subcarrier gains are read off at the winner.  With a
    single subcarrier and no cyclic prefix this reduces exactly to
    :func:`narrowband_search`.
    """
    mm = len(blocks)
    if mm == 0:
        raise ValueError("need at least one received block")
    if isinstance(pilots, tuple):
        pilots = [pilots] * mm
    if len(pilots) != mm:
        raise ValueError("one pilot pair per subcarrier required")
    if vectors is None:
        vectors = [codebook.vectors(geometry, b.subcarrier) for b in blocks]

    total = np.zeros(codebook.q_levels)
    alpha_rows = []
    for m0 in range(mm):
        scores, alpha_conj = _sweep_scores(
            blocks[m0], family, vectors[m0], pilots[m0], noise, cap
        )
        total += scores
        alpha_rows.append(alpha_conj)
    mean_scores = total / (mm + geometry.cp_len)

    q0 = int(np.argmax(mean_scores))
    alpha = np.conj(np.array([row[q0] for row in alpha_rows]))
    h_hat = alpha[:, None] * np.stack([v[:, q0] for v in vectors])
    return EstimationResult(
        device=blocks[0].device,
        q_star=q0 + 1,
        alpha_hat=alpha,
        h_hat=h_hat,
        score=float(mean_scores[q0]),
        multiply_count=complexity_psi(family.n, mm, codebook.q_levels),
    )


def complexity_psi(n: int, m: int, q_levels: int) -> int:
    """Closed-form complex-multiplication count M*(2*N^2 + Q*N).

    Two combiner-matrix products per subcarrier plus one length-N inner
    product per candidate.  Exact integer arithmetic, no overflow.
    """
    if n < 1 or m < 1 or q_levels < 1:
        raise ValueError("all complexity arguments must be positive")
    return m * (2 * n * n + q_levels * n)
