"""Simulation configuration: one flat record, validated before any trial runs.

Configs load from flat JSON files; every key maps 1:1 onto a field below.
Velocity of validation matters more than leniency here: an undersized prefix
or a mismatched code/relay count must fail loudly before burning CPU time.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from typing import Any

from .rxchain import MODE_SYMBOL_RATE, SAMPLER_MODES, required_prefix

_CODE_RELAYS = {"od2": 2, "qod4": 4}


class ConfigError(ValueError):
    """Raised when a configuration cannot describe a runnable simulation."""


@dataclass(frozen=True)
class NetworkConfig:
    # code / geometry
    code: str = "od2"
    n_subcarriers: int = 64
    n_cp1: int = 7
    n_cp2: int = 7
    # channel
    n_taps: int = 1
    tap_variances: tuple[float, ...] | None = None   # None -> equal split
    fd_ts: float = 1e-4
    n_oscillators: int = 16
    # matched filter
    beta: float = 0.9
    n_sidelobes: int = 1
    # powers (P swept via snr_db = P/N0; split defaults to P0=P/2, Pr=P/(2R))
    n0: float = 1.0
    snr_db: tuple[float, ...] = (15.0, 20.0, 25.0)
    p0_fraction: float = 0.5
    pr_fraction: float | None = None
    # sweep axes
    sampler_modes: tuple[str, ...] = (MODE_SYMBOL_RATE,)
    taus: tuple[float, ...] = (0.0,)
    # integer offsets: fixed per-relay list, or uniform draw per channel draw
    d_fixed: tuple[int, ...] | None = None
    d_random_range: tuple[int, int] = (1, 5)
    # framing / coding
    frames_per_draw: int = 2
    repetition: int = 1
    interleaver_depth: int = 10_000
    # Monte Carlo control
    master_seed: int = 1
    target_bit_errors: int = 100
    max_bits: int = 10_000_000
    batch_trials: int = 0        # 0 -> pick automatically

    @property
    def n_relays(self) -> int:
        return _CODE_RELAYS[self.code]

    @property
    def d_max(self) -> int:
        if self.d_fixed is not None:
            return max(self.d_fixed)
        return self.d_random_range[1]

    @property
    def channel_label(self) -> str:
        return "flat" if self.n_taps == 1 else f"multipath{self.n_taps}"

    def tap_profile(self) -> tuple[float, ...]:
        if self.tap_variances is not None:
            return self.tap_variances
        return tuple([1.0 / self.n_taps] * self.n_taps)

    def powers(self, snr_db: float) -> tuple[float, float]:
        """(P0, Pr) for a given total-power point P/N0 in dB."""
        p = self.n0 * 10.0 ** (snr_db / 10.0)
        pr_frac = self.pr_fraction if self.pr_fraction is not None else 1.0 / (2.0 * self.n_relays)
        return p * self.p0_fraction, p * pr_frac

    def validate(self) -> None:
        if self.code not in _CODE_RELAYS:
            raise ConfigError(f"unknown code {self.code!r}; expected one of {sorted(_CODE_RELAYS)}")
        n = self.n_subcarriers
        if n < 2 or n & (n - 1):
            raise ConfigError(f"subcarrier count {n} must be a power of two >= 2")
        if self.n_taps < 1:
            raise ConfigError("channel needs at least one tap")
        if self.n_taps > n:
            raise ConfigError("more channel taps than subcarriers")
        if self.tap_variances is not None:
            if len(self.tap_variances) != self.n_taps:
                raise ConfigError("tap_variances length must equal n_taps")
            if any(v < 0 for v in self.tap_variances):
                raise ConfigError("tap variances must be nonnegative")
            if abs(sum(self.tap_variances) - 1.0) > 1e-12:
                raise ConfigError("tap variances must sum to 1")
        if not 0 <= self.n_cp1 < n:
            raise ConfigError(f"n_cp1 {self.n_cp1} out of range [0, {n})")
        if self.n_cp1 < self.n_taps - 1:
            raise ConfigError(
                f"n_cp1 {self.n_cp1} cannot absorb channel memory {self.n_taps - 1}"
            )
        if not 0 <= self.n_cp2 < n:
            raise ConfigError(f"n_cp2 {self.n_cp2} out of range [0, {n})")
        need = required_prefix(self.n_taps, self.d_max, self.n_sidelobes)
        if self.n_cp2 < need:
            raise ConfigError(
                f"n_cp2 {self.n_cp2} too short: channel memory {self.n_taps - 1}, "
                f"max integer offset {self.d_max} and {self.n_sidelobes} side-lobe(s) "
                f"require at least {need}"
            )
        if not 0.0 < self.beta <= 1.0:
            raise ConfigError("roll-off beta must lie in (0, 1]")
        if self.n_sidelobes < 0:
            raise ConfigError("side-lobe count must be nonnegative")
        if self.fd_ts < 0:
            raise ConfigError("normalized Doppler must be nonnegative")
        if self.n_oscillators < 1:
            raise ConfigError("need at least one Doppler oscillator")
        if self.n0 <= 0:
            raise ConfigError("reference noise level must be positive")
        if self.p0_fraction <= 0:
            raise ConfigError("source power fraction must be positive")
        if self.pr_fraction is not None and self.pr_fraction <= 0:
            raise ConfigError("relay power fraction must be positive")
        for mode in self.sampler_modes:
            if mode not in SAMPLER_MODES:
                raise ConfigError(f"unknown sampler mode {mode!r}")
        if not self.sampler_modes:
            raise ConfigError("need at least one sampler mode")
        for tau in self.taus:
            if not 0.0 <= tau <= 1.0:
                raise ConfigError(f"fractional offset {tau} must lie in [0, 1]")
        if not self.taus:
            raise ConfigError("need at least one fractional-offset value")
        if self.d_fixed is not None:
            if len(self.d_fixed) != self.n_relays:
                raise ConfigError("d_fixed needs one entry per relay")
            if self.d_fixed[0] != 0:
                raise ConfigError("relay 1 is the timing reference; d_fixed[0] must be 0")
            if any(d < 0 for d in self.d_fixed):
                raise ConfigError("integer offsets must be nonnegative")
        else:
            lo, hi = self.d_random_range
            if not 0 <= lo <= hi:
                raise ConfigError(f"bad d_random_range {self.d_random_range}")
        if self.frames_per_draw < 1:
            raise ConfigError("need at least one data frame per channel draw")
        if self.repetition not in (1, 2, 4):
            raise ConfigError("repetition factor must be one of 1, 2, 4")
        if self.repetition > 1 and self.code != "od2":
            raise ConfigError("repetition coding uses the soft metrics of the od2 decoder")
        if self.interleaver_depth < 1:
            raise ConfigError("interleaver depth must be positive")
        if self.target_bit_errors < 1:
            raise ConfigError("stop rule needs a positive bit-error target")
        if self.max_bits < 1:
            raise ConfigError("stop rule needs a positive bit cap")
        if self.batch_trials < 0:
            raise ConfigError("batch size must be nonnegative (0 = auto)")

    # --- (de)serialization -------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "NetworkConfig":
        known = {f.name for f in cls.__dataclass_fields__.values()}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        fixed: dict[str, Any] = {}
        for key, value in raw.items():
            if isinstance(value, list):
                value = tuple(value)
            fixed[key] = value
        return cls(**fixed)

    @classmethod
    def from_json(cls, path: str) -> "NetworkConfig":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a single JSON object")
        return cls.from_dict(raw)

    def with_overrides(self, **kwargs: Any) -> "NetworkConfig":
        return replace(self, **kwargs)
