"""Experiment configuration, seeded Monte Carlo orchestration, CSV emission.

Reproducibility notes: every random draw is keyed by a spawn chain on the
experiment seed, (trial,) for frame symbols, (trial, device) for channel
realizations and (trial, device, subcarrier) for receiver noise, so results
are byte-identical for a fixed seed regardless of how many worker threads
consume the trials.  Wall-clock timings are measured per method but written
to the CSV as 0 unless explicitly requested, keeping the default output
deterministic.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Iterator

import numpy as np

from . import baselines
from .channel import (
    ArrayGeometry,
    ChannelProfile,
    NoiseModel,
    db_to_linear,
    sample_channel,
)
from .dftcore import build_family, build_precoders, pairwise_diagonals
from .estimation import make_codebook, narrowband_search, wideband_search
from .receiver import SINR_CAP, per_device_achieved_se, per_device_max_se
from .transceiver import make_frame, receive, transmit

__all__ = [
    "KNOWN_METHODS",
    "PRESET_NAMES",
    "ExperimentConfig",
    "TrialResult",
    "preset",
    "run_experiment",
    "write_csv",
    "summarize",
    "load_config_file",
]

KNOWN_METHODS = ("circle", "r-circle", "bound", "mrt", "zf", "wmmse")

# Recognized but not implemented: the uplink-pilot CSIT-reconstruction
# benchmark (generalized power iteration on reconstructed channels) needs
# machinery this simulator does not model.
UNAVAILABLE_METHODS = ("wo-csit-feedback",)

PRESET_NAMES = ("fig2", "fig4a", "fig4b", "fig4c", "fig4d", "fig5", "fig6")


@dataclass
class ExperimentConfig:
    """Full parameterization of one Monte Carlo scenario.

    Exactly one of ``snr_db`` and ``p_t_db`` must be set; with ``snr_db``
    the transmit power is derived from the ensemble channel statistics.
    ``n_antennas`` left as None follows the swept device count as K + 2.
    """

    n_devices: int = 30
    n_antennas: int | None = None
    snr_db: float | None = 10.0
    p_t_db: float | None = None
    sigma2_db: float = -10.0
    delta2_db: float = -15.0
    n_nlos: int = 3
    rho: float = 2.0
    q_levels: int = 512
    n_subcarriers: int = 10
    cp_len: int = 4
    carrier_freq_hz: float = 100e9
    bandwidth_hz: float = 10e9
    n_trials: int = 200
    seed: int = 0
    methods: tuple[str, ...] = ("bound", "circle", "r-circle")
    symbol_source: str = "gaussian"
    csit_normalization: str = "amplitude"
    csir: str = "estimated"
    sinr_cap: float = SINR_CAP
    sweep_param: str | None = None
    sweep_values: tuple | None = None

    def validate(self) -> None:
        for name in ("sigma2_db", "delta2_db"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if (self.snr_db is None) == (self.p_t_db is None):
            raise ValueError("exactly one of snr_db and p_t_db must be set")
        if self.snr_db is not None and not math.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite")
        if self.p_t_db is not None and not math.isfinite(self.p_t_db):
            raise ValueError("p_t_db must be finite")
        if self.n_trials < 1:
            raise ValueError("n_trials must be at least 1")
        if self.n_devices < 1:
            raise ValueError("n_devices must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if self.n_nlos < 0:
            raise ValueError("n_nlos must be nonnegative")
        if self.rho <= 0 or self.rho > 2:
            raise ValueError("rho must lie in (0, 2]")
        if self.q_levels < 1:
            raise ValueError("q_levels must be at least 1")
        if self.symbol_source not in ("gaussian", "qpsk"):
            raise ValueError(f"unknown symbol_source {self.symbol_source!r}")
        if self.csit_normalization not in ("amplitude", "power"):
            raise ValueError(f"unknown csit_normalization {self.csit_normalization!r}")
        if self.csir not in ("genie", "estimated"):
            raise ValueError(f"unknown csir mode {self.csir!r}")
        if self.sinr_cap <= 0:
            raise ValueError("sinr_cap must be positive")
        for method in self.methods:
            if method in UNAVAILABLE_METHODS:
                raise NotImplementedError(
                    f"method {method!r} is a recognized benchmark but is not "
                    "implemented: it reconstructs transmitter-side channel "
                    "state from uplink pilots, which is outside the scope of "
                    "this simulator"
                )
            if method not in KNOWN_METHODS:
                raise ValueError(f"unknown method {method!r}")
        if self.sweep_param is not None:
            if self.sweep_param not in _SWEEPABLE:
                raise ValueError(f"cannot sweep field {self.sweep_param!r}")
            if not self.sweep_values:
                raise ValueError("sweep_values must be nonempty when sweeping")
        circle_like = {"circle", "r-circle"} & set(self.methods)
        for k in self._swept_device_counts():
            n = self.n_antennas if self.n_antennas is not None else k + 2
            if circle_like and k > n - 2:
                raise ValueError(
                    f"n_devices={k} exceeds n_antennas-2={n - 2} for the "
                    "deterministic-precoder methods"
                )
            if k > n:
                raise ValueError(f"n_devices={k} exceeds n_antennas={n}")

    def _swept_device_counts(self) -> list[int]:
        if self.sweep_param == "n_devices":
            return [int(v) for v in self.sweep_values]
        return [self.n_devices]


_SWEEPABLE = ("n_devices", "snr_db", "delta2_db", "p_t_db", "q_levels", "rho")


@dataclass(frozen=True)
class TrialResult:
    """Per-trial, per-method outcome."""

    trial_index: int
    method: str
    sweep_param: str | None
    sweep_value: float | int | None
    sum_se_bits_per_use: float
    per_device_se: np.ndarray
    q_star: tuple[int, ...]
    psi: int
    wall_time_s: float


def preset(name: str) -> ExperimentConfig:
    """Named scenario presets mirroring the reference experiments."""
    if name == "fig2":
        return ExperimentConfig(
            n_devices=30,
            n_antennas=32,
            snr_db=None,
            p_t_db=0.0,
            sigma2_db=-10.0,
            n_nlos=3,
            rho=2.0,
            n_subcarriers=1,
            cp_len=0,
            bandwidth_hz=0.0,
            csir="genie",
            methods=("bound", "circle"),
            sweep_param="delta2_db",
            sweep_values=(-40.0, -30.0, -20.0, -10.0, -5.0),
        )
    if name in ("fig4a", "fig4b", "fig4c", "fig4d"):
        rho = {"fig4a": 1 / 32, "fig4b": 1 / 8, "fig4c": 1 / 2, "fig4d": 2.0}[name]
        return ExperimentConfig(
            rho=rho,
            methods=("bound", "circle", "r-circle"),
            sweep_param="n_devices",
            sweep_values=(10, 20, 30),
        )
    if name == "fig5":
        return ExperimentConfig(
            rho=2.0,
            methods=("bound", "r-circle", "wmmse", "zf", "mrt"),
            sweep_param="n_devices",
            sweep_values=(10, 20, 30),
        )
    if name == "fig6":
        return ExperimentConfig(
            n_devices=30,
            rho=2.0,
            methods=("bound", "r-circle", "wmmse", "zf", "mrt"),
            sweep_param="snr_db",
            sweep_values=(0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0),
        )
    raise ValueError(f"unknown preset {name!r}; known presets: {', '.join(PRESET_NAMES)}")


class _SweepContext:
    """Everything shared by the trials of one sweep point."""

    def __init__(self, config: ExperimentConfig, sweep_value) -> None:
        cfg = config
        if config.sweep_param is not None:
            cfg = replace(config, **{config.sweep_param: sweep_value})
        self.config = cfg
        self.sweep_param = config.sweep_param
        self.sweep_value = sweep_value

        self.k_devices = cfg.n_devices
        self.n = cfg.n_antennas if cfg.n_antennas is not None else cfg.n_devices + 2
        self.geometry = ArrayGeometry(
            n_antennas=self.n,
            carrier_freq_hz=cfg.carrier_freq_hz,
            bandwidth_hz=cfg.bandwidth_hz,
            n_subcarriers=cfg.n_subcarriers,
            cp_len=cfg.cp_len,
        )
        self.profile = ChannelProfile(
            los_var=1.0,
            nlos_var=db_to_linear(cfg.delta2_db),
            n_nlos=cfg.n_nlos,
            angular_range=cfg.rho * math.pi,
        )
        sigma2 = db_to_linear(cfg.sigma2_db)
        if cfg.p_t_db is not None:
            p_t = db_to_linear(cfg.p_t_db)
        else:
            # ensemble statistics: E||h||^2/N is the mean per-antenna gain
            p_t = db_to_linear(cfg.snr_db) * sigma2 / self.profile.mean_channel_gain
        self.noise = NoiseModel(variance=sigma2, tx_power=p_t)

        self.family = build_family(self.n)
        self.precoders = build_precoders(self.family)
        self.diagonals = pairwise_diagonals(self.family)
        self.codebook = make_codebook(cfg.q_levels, 0.0, cfg.rho * math.pi)
        self.vectors = [
            self.codebook.vectors(self.geometry, m)
            for m in range(1, cfg.n_subcarriers + 1)
        ]
        self.psi = self.n * (2 * self.n + cfg.q_levels) * cfg.n_subcarriers

    def _rng(self, *key: int) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence(self.config.seed, spawn_key=tuple(key))
        )

    def run_trial(self, trial: int) -> list[TrialResult]:
        cfg = self.config
        mm = cfg.n_subcarriers
        k_dev = self.k_devices

        channels = [
            sample_channel(self.geometry, k, self._rng(trial, k), self.profile)
            for k in range(1, k_dev + 1)
        ]
        h_true = np.stack([ch.h for ch in channels])  # (K, M, N)

        rng_trial = self._rng(trial)
        frames = [make_frame(self.n, cfg.symbol_source, rng_trial) for _ in range(mm)]

        needs_blocks = cfg.csir == "estimated" and (
            "circle" in cfg.methods or "r-circle" in cfg.methods
        )
        blocks = None
        if needs_blocks:
            xs = [transmit(self.precoders, frames[m0]) for m0 in range(mm)]
            blocks = [
                [
                    receive(channels[k0], xs[m0], self.noise, self._rng(trial, k0 + 1, m0 + 1), m0 + 1)
                    for m0 in range(mm)
                ]
                for k0 in range(k_dev)
            ]

        results = []
        for method in cfg.methods:
            t0 = time.perf_counter()
            per_dev, q_star, psi = self._run_method(method, h_true, frames, blocks)
            wall = time.perf_counter() - t0
            results.append(
                TrialResult(
                    trial_index=trial,
                    method=method,
                    sweep_param=self.sweep_param,
                    sweep_value=self.sweep_value,
                    sum_se_bits_per_use=float(np.sum(per_dev)),
                    per_device_se=per_dev,
                    q_star=q_star,
                    psi=psi,
                    wall_time_s=wall,
                )
            )
        return results

    def _run_method(self, method, h_true, frames, blocks):
        cfg = self.config
        if method == "bound":
            per_dev = per_device_max_se(h_true, self.noise, self.geometry)
            return per_dev, (), 0

        if method in ("circle", "r-circle"):
            if cfg.csir == "genie":
                per_dev = per_device_achieved_se(
                    h_true, h_true, self.family, self.noise, self.geometry,
                    self.diagonals, cfg.sinr_cap,
                )
                return per_dev, (), 0
            h_hat, q_star = self._estimate(method, blocks, frames)
            per_dev = per_device_achieved_se(
                h_hat, h_true, self.family, self.noise, self.geometry,
                self.diagonals, cfg.sinr_cap,
            )
            return per_dev, q_star, self.psi

        # full-CSIT benchmarks, one precoder per subcarrier
        precoders = []
        for m0 in range(cfg.n_subcarriers):
            h_m = h_true[:, m0, :]
            if method == "mrt":
                precoders.append(baselines.mrt(h_m))
            elif method == "zf":
                precoders.append(baselines.zf(h_m))
            elif method == "wmmse":
                amp = baselines.csit_amplitude(
                    self.n, self.k_devices, self.noise, cfg.csit_normalization
                )
                precoders.append(baselines.wmmse(h_m, self.noise, amplitude=amp))
            else:
                raise ValueError(f"unknown method {method!r}")
        per_dev = baselines.per_device_csit_se(
            precoders, h_true, self.noise, self.geometry, cfg.csit_normalization
        )
        return per_dev, (), 0

    def _estimate(self, method, blocks, frames):
        cfg = self.config
        mm = cfg.n_subcarriers
        pilots = [(frames[m0].pilot1, frames[m0].pilot2) for m0 in range(mm)]
        h_hat = np.empty((self.k_devices, mm, self.n), dtype=complex)
        q_star: list[int] = []
        for k0 in range(self.k_devices):
            if method == "r-circle":
                res = wideband_search(
                    blocks[k0], self.family, self.codebook, self.geometry,
                    pilots, self.noise, cfg.sinr_cap, self.vectors,
                )
                h_hat[k0] = res.h_hat
                q_star.append(res.q_star)
            else:
                for m0 in range(mm):
                    res = narrowband_search(
                        blocks[k0][m0], self.family, self.codebook, self.geometry,
                        pilots[m0], self.noise, cfg.sinr_cap, self.vectors[m0],
                    )
                    h_hat[k0, m0] = res.h_hat[0]
                    q_star.append(res.q_star)
        return h_hat, tuple(q_star)


def run_experiment(config: ExperimentConfig, threads: int = 1) -> Iterator[TrialResult]:
    """Run all sweep points and trials, yielding results in trial order.

    Trials are independent work items; results come back ordered regardless
    of worker count, so aggregate statistics and CSV bytes do not depend on
    ``threads``.
    """
    config.validate()
    if threads < 1:
        raise ValueError("threads must be at least 1")
    sweep_values = config.sweep_values if config.sweep_param is not None else (None,)
    for sweep_value in sweep_values:
        ctx = _SweepContext(config, sweep_value)
        if threads == 1:
            for trial in range(ctx.config.n_trials):
                yield from ctx.run_trial(trial)
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                for batch in pool.map(ctx.run_trial, range(ctx.config.n_trials)):
                    yield from batch


def write_csv(results: Iterable[TrialResult], path, timing: bool = False) -> None:
    """Write one row per (trial, method) with LF endings.

    Floats carry 12 significant digits.  The wall_time_s column is written
    as 0 unless ``timing`` is set, so default output is byte-identical for
    a fixed seed.
    """
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write("trial,method,sweep_value,sum_se,psi,wall_time_s\n")
            for res in results:
                sweep = "" if res.sweep_value is None else _fmt(res.sweep_value)
                wall = _fmt(res.wall_time_s) if timing else "0"
                fh.write(
                    f"{res.trial_index},{res.method},{sweep},"
                    f"{_fmt(res.sum_se_bits_per_use)},{res.psi},{wall}\n"
                )
    except OSError as exc:
        raise OSError(f"cannot write results to {path!r}: {exc}") from exc


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.12g}"


def summarize(results: Iterable[TrialResult]) -> list[dict]:
    """Mean and standard error of the sum SE per (method, sweep value)."""
    buckets: dict[tuple, list[float]] = {}
    for res in results:
        buckets.setdefault((res.method, res.sweep_value), []).append(
            res.sum_se_bits_per_use
        )
    out = []
    for (method, sweep_value), values in buckets.items():
        arr = np.asarray(values)
        stderr = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
        out.append(
            {
                "method": method,
                "sweep_value": sweep_value,
                "n_trials": len(arr),
                "mean_sum_se": float(arr.mean()),
                "stderr_sum_se": stderr,
            }
        )
    return out


_LIST_FIELDS = {"methods", "sweep_values"}
_STR_FIELDS = {"symbol_source", "csit_normalization", "csir", "sweep_param"}
_INT_FIELDS = {
    "n_devices", "n_antennas", "n_nlos", "q_levels", "n_subcarriers",
    "cp_len", "n_trials", "seed",
}


def load_config_file(path) -> ExperimentConfig:
    """Parse a ``key = value`` config file mirroring ExperimentConfig fields.

    Lists (methods, sweep_values) are comma separated; ``#`` starts a
    comment; the literal ``none`` clears an optional field.
    """
    values: dict = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, text = line.partition("=")
            key = key.strip()
            text = text.strip()
            if key not in ExperimentConfig.__dataclass_fields__:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = _parse_value(key, text)
    return ExperimentConfig(**values)


def _parse_value(key: str, text: str):
    if text.lower() == "none":
        return None
    if key == "methods":
        return tuple(part.strip() for part in text.split(",") if part.strip())
    if key == "sweep_values":
        parts = [part.strip() for part in text.split(",") if part.strip()]
        return tuple(_parse_number(p) for p in parts)
    if key in _STR_FIELDS:
        return text
    if key in _INT_FIELDS:
        return int(text)
    return float(text)


def _parse_number(text: str):
    try:
        return int(text)
    except ValueError:
        return float(text)
