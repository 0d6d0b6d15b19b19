"""Full-CSIT benchmark precoders: MRT, ZF and WMMSE.

The benchmarks transmit one unit-norm beam per device; the received-signal
model scales every beam by (N/K)*sqrt(p_t), an amplitude normalization that
credits the benchmarks with the pilot overhead the deterministic scheme
spends.  A power-based reading (sqrt(N/K)) is selectable for sensitivity
checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ArrayGeometry, NoiseModel

__all__ = [
    "SingularChannelError",
    "CsitPrecoder",
    "mrt",
    "zf",
    "wmmse",
    "csit_amplitude",
    "per_device_csit_se",
    "csit_sum_se",
]


class SingularChannelError(ValueError):
    """The stacked channel matrix cannot be inverted for zero forcing."""


@dataclass(frozen=True)
class CsitPrecoder:
    """Per-device unit-norm beams, rows of ``vectors`` (K, N)."""

    kind: str
    vectors: np.ndarray
    converged: bool = True
    iterations: int = 0
    wsr_history: np.ndarray = field(default_factory=lambda: np.zeros(0))


def mrt(channels: np.ndarray) -> CsitPrecoder:
    """Maximum ratio transmission: each beam points along its own channel."""
    h = np.asarray(channels, dtype=complex)
    norms = np.linalg.norm(h, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise SingularChannelError("zero channel vector")
    return CsitPrecoder(kind="mrt", vectors=h / norms)


def zf(channels: np.ndarray) -> CsitPrecoder:
    """Zero forcing: normalized columns of the stacked-channel pseudo-inverse.

    Rows of ``channels`` are the device channels h_k; the beams satisfy
    h_k^H f_k2 = 0 for k != k2.  Requires K <= N and a full-rank stack.
    """
    h = np.asarray(channels, dtype=complex)
    k, n = h.shape
    if k > n:
        raise SingularChannelError(f"cannot zero-force {k} devices with {n} antennas")
    stack = h.conj()  # rows h_k^H
    if np.linalg.matrix_rank(stack) < k:
        raise SingularChannelError("stacked channel matrix is rank deficient")
    pinv = np.linalg.pinv(stack)  # (N, K), stack @ pinv = I
    vectors = pinv.T
    vectors = vectors / np.linalg.norm(vectors, axis=1, keepdims=True)
    return CsitPrecoder(kind="zf", vectors=vectors)


def wmmse(
    channels: np.ndarray,
    noise: NoiseModel,
    max_iters: int = 100,
    tol: float = 1e-4,
    amplitude: float | None = None,
) -> CsitPrecoder:
    """Weighted-MMSE beams via alternating receiver/weight/precoder updates.

    The precoder block is solved under a unit-power constraint per beam,
    matching the evaluation model where every device's beam transmits at
    the same amplitude.  (Iterating under a relaxed sum-power budget and
    renormalizing afterwards lets the optimizer starve weak devices, whose
    renormalized beams then wreck the ordering against zero forcing.)
    Starts from regularized-inversion directions, which for a single device
    coincide with MRT; a matched-beam start converges to stationary points
    below plain zero forcing when the array is much larger than the device
    count.  The weighted sum rate of the iterates is nondecreasing and
    iteration stops once its change drops below ``tol``.  ``amplitude`` is
    the common beam amplitude of the received-signal model and defaults to
    (N/K)*sqrt(p_t).
    """
    if noise.variance <= 0:
        raise ValueError("WMMSE requires a positive noise variance")
    h = np.asarray(channels, dtype=complex)
    k, n = h.shape
    if amplitude is None:
        amplitude = (n / k) * math.sqrt(noise.tx_power)
    g = amplitude * h  # effective channels under the benchmark signal model
    sigma2 = noise.variance

    w = _regularized_inversion(h, k * sigma2 / (amplitude * amplitude))
    history = []
    converged = False
    iterations = 0
    for it in range(max_iters):
        iterations = it + 1
        # cross gains: c[k, j] = g_k^H w_j
        c = g.conj() @ w.T
        totals = np.sum(np.abs(c) ** 2, axis=1) + sigma2
        diag = np.diagonal(c)
        u = diag / totals
        mse = 1.0 - np.abs(diag) ** 2 / totals
        lam = 1.0 / mse

        # precoder block: minimize w^H A w - 2 Re(b_k^H w) per beam over the
        # unit ball, A = sum_j lam_j |u_j|^2 g_j g_j^H, b_k = lam_k u_k^* g_k;
        # one shared eigendecomposition serves every beam's water level.
        coeffs = lam * np.abs(u) ** 2
        a = (g.T * coeffs) @ g.conj()
        b = g.T * (lam * np.conj(u))
        w = _solve_unit_ball(a, b).T

        c = g.conj() @ w.T
        totals = np.sum(np.abs(c) ** 2, axis=1) + sigma2
        sig = np.abs(np.diagonal(c)) ** 2
        wsr = float(np.sum(np.log2(1.0 + sig / (totals - sig))))
        history.append(wsr)
        if it > 0 and abs(history[-1] - history[-2]) < tol:
            converged = True
            break

    norms = np.linalg.norm(w, axis=1, keepdims=True)
    # the evaluation model transmits unit power per device regardless, so a
    # beam left strictly inside the ball is scaled up to the boundary and a
    # beam driven to zero falls back to its MRT direction
    small = norms[:, 0] < 1e-12
    if np.any(small):
        w[small] = mrt(channels).vectors[small]
        norms = np.linalg.norm(w, axis=1, keepdims=True)
    vectors = w / norms
    return CsitPrecoder(
        kind="wmmse",
        vectors=vectors,
        converged=converged,
        iterations=iterations,
        wsr_history=np.asarray(history),
    )


def _regularized_inversion(h: np.ndarray, reg: float) -> np.ndarray:
    """Unit-norm MMSE-regularized inversion beams, rows per device."""
    stack = h.conj()  # rows h_k^H
    k = stack.shape[0]
    w = (stack.conj().T @ np.linalg.inv(stack @ stack.conj().T + reg * np.eye(k))).T
    return w / np.linalg.norm(w, axis=1, keepdims=True)


def _solve_unit_ball(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Columnwise solve of min w^H a w - 2 Re(b_k^H w) over the unit ball.

    KKT: w_k = (a + mu_k I)^{-1} b_k with the smallest mu_k >= 0 giving
    ||w_k|| <= 1; the water levels of all beams are bisected jointly.
    ``a`` is Hermitian PSD and may be singular; components of b below the
    numerical rank are discarded, which is safe because every b_k lies in
    the range of ``a`` up to roundoff.
    """
    vals, vecs = np.linalg.eigh(a)
    bt = vecs.conj().T @ b
    cutoff = max(vals[-1], 0.0) * 1e-12
    bt[vals <= cutoff] = 0.0
    vals = np.maximum(vals, 0.0)
    weights = np.abs(bt) ** 2  # (n_eig, K)

    def norms2(mu: np.ndarray) -> np.ndarray:
        denom = (vals[:, None] + mu[None, :]) ** 2
        out = np.divide(weights, denom, out=np.zeros_like(weights), where=denom > 0)
        return np.sum(out, axis=0)

    k = bt.shape[1]
    mu = np.zeros(k)
    need = norms2(mu) > 1.0
    if np.any(need):
        hi = np.ones(k)
        while True:
            over = need & (norms2(hi) > 1.0)
            if not np.any(over):
                break
            hi[over] *= 2.0
        lo = np.zeros(k)
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            over = norms2(mid) > 1.0
            lo = np.where(over, mid, lo)
            hi = np.where(over, hi, mid)
        mu = np.where(need, hi, 0.0)

    denom = vals[:, None] + mu[None, :]
    scale = np.divide(1.0, denom, out=np.zeros_like(denom), where=denom > 0)
    return vecs @ (bt * scale)


def csit_amplitude(
    n: int, k: int, noise: NoiseModel, normalization: str = "amplitude"
) -> float:
    """Common beam amplitude of the benchmark received-signal model."""
    if normalization == "amplitude":
        return (n / k) * math.sqrt(noise.tx_power)
    if normalization == "power":
        return math.sqrt((n / k) * noise.tx_power)
    raise ValueError(f"unknown csit normalization {normalization!r}")


def per_device_csit_se(
    precoders: list[CsitPrecoder],
    channels: np.ndarray,
    noise: NoiseModel,
    geometry: ArrayGeometry,
    normalization: str = "amplitude",
) -> np.ndarray:
    """Per-device benchmark SE, shape (K,), with the cyclic-prefix penalty.

    ``channels`` has shape (K, M, N) and ``precoders`` one entry per
    subcarrier.  SINR of device k on subcarrier m is
    |a h_k^H f_k|^2 / (sum_{k2 != k} |a h_k^H f_k2|^2 + sigma^2) with the
    common amplitude a from :func:`csit_amplitude`.
    """
    channels = np.asarray(channels)
    k_dev, mm, n = channels.shape
    if len(precoders) != mm:
        raise ValueError("one precoder per subcarrier required")
    amp = csit_amplitude(n, k_dev, noise, normalization)
    out = np.zeros(k_dev)
    for m0 in range(mm):
        f = precoders[m0].vectors  # (K, N)
        cross = np.abs(amp * (channels[:, m0, :].conj() @ f.T)) ** 2  # (K rx, K beams)
        sig = np.diagonal(cross).copy()
        interf = np.sum(cross, axis=1) - sig
        sinr = sig / (interf + noise.variance)
        out += np.log2(1.0 + sinr)
    return out / (mm + geometry.cp_len)


def csit_sum_se(
    precoders: list[CsitPrecoder],
    channels: np.ndarray,
    noise: NoiseModel,
    geometry: ArrayGeometry,
    normalization: str = "amplitude",
) -> float:
    """Benchmark sum spectral efficiency across devices and subcarriers."""
    return float(
        np.sum(per_device_csit_se(precoders, channels, noise, geometry, normalization))
    )
