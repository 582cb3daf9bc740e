"""Monte Carlo experiment engine.

A *trial* is the unit of parallel work: one independent channel/delay draw,
one reference block plus ``frames_per_draw`` data blocks through the full
source -> relays -> destination pipeline, decoded and scored (for coded runs
a trial is one whole interleaver block instead).  Trials are deterministic
functions of (master_seed, point_index, trial_index), so results do not
depend on the worker count or scheduling, and the stop rule is evaluated on
fixed-size batches to keep the executed trial set schedule-independent.
"""

from __future__ import annotations

import math
import multiprocessing
import time
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, TapProfile
from .codebook import (
    UnitaryCode,
    bits_to_symbols,
    build_data_matrices,
    enumerate_codewords,
    make_code,
)
from .coding import InterleaverSpec, combine_and_decide, deinterleave, interleave, repeat_encode
from .config import NetworkConfig
from .rxchain import (
    MODE_SYMBOL_RATE,
    SAMPLER_MODES,
    MatchedFilter,
    build_effective_channel,
    destination_receive,
    differential_decode_fast,
    differential_decode_ml,
    expected_freq_output,
    strip_and_dft,
)
from .txchain import (
    DelayProfile,
    Frame,
    add_cyclic_prefix,
    amplification_factor,
    differential_encode,
    reference_frame,
    scale_source,
    to_time_domain,
    relay_configure,
    relay_receive,
)


@dataclass(frozen=True)
class TrialCounts:
    bits: int
    bit_errors: int
    blocks: int
    block_errors: int

    def __add__(self, other: "TrialCounts") -> "TrialCounts":
        return TrialCounts(
            self.bits + other.bits,
            self.bit_errors + other.bit_errors,
            self.blocks + other.blocks,
            self.block_errors + other.block_errors,
        )


ZERO_COUNTS = TrialCounts(0, 0, 0, 0)


@dataclass(frozen=True)
class SimResult:
    scheme: str
    code: str
    channel: str
    tau: float
    snr_db: float
    trials: int
    bits: int
    bit_errors: int
    ber: float
    blocks: int
    block_errors: int
    bler: float
    wall_time: float
    seed: int


@dataclass(frozen=True)
class LinkContext:
    """Everything static over one channel draw."""

    code: UnitaryCode
    chreal: ChannelRealization
    delays: DelayProfile
    mf: MatchedFilter
    mode: str
    p0: float
    amp: float
    n_cp1: int
    n_cp2: int
    n0: float


def transmit_frame(
    ctx: LinkContext,
    frame: Frame,
    rng: np.random.Generator,
    noiseless: bool = False,
) -> np.ndarray:
    """Run one frequency-domain block through the full two-hop pipeline.

    Returns the destination's (R, N) frequency-domain observation.
    """
    n0 = 0.0 if noiseless else ctx.n0
    pre = add_cyclic_prefix(to_time_domain(frame), ctx.n_cp1)
    scaled = scale_source(pre, ctx.p0, ctx.code.n_relays)
    n = frame.data.shape[1]
    relayed = []
    for i in range(ctx.code.n_relays):
        kept = relay_receive(scaled, ctx.chreal.sr[i], n0, rng)
        configured = relay_configure(kept, ctx.code, i, ctx.amp)
        prefixed = np.concatenate([configured[:, n - ctx.n_cp2:], configured], axis=1)
        relayed.append(prefixed)
    y_time = destination_receive(
        np.stack(relayed),
        ctx.chreal.rd,
        ctx.delays,
        ctx.mf,
        ctx.mode,
        n0,
        rng,
        ctx.n_cp2,
    )
    return strip_and_dft(y_time)


def _draw_delays(cfg: NetworkConfig, tau: float, rng: np.random.Generator) -> DelayProfile:
    r = cfg.n_relays
    if cfg.d_fixed is not None:
        d = tuple(cfg.d_fixed)
    else:
        lo, hi = cfg.d_random_range
        d = (0,) + tuple(int(v) for v in rng.integers(lo, hi + 1, size=r - 1))
    return DelayProfile(d, (0.0,) + (tau,) * (r - 1))


def _draw_context(
    cfg: NetworkConfig,
    mode: str,
    tau: float,
    p0: float,
    pr: float,
    rng: np.random.Generator,
) -> LinkContext:
    code = make_code(cfg.code)
    profile = TapProfile(cfg.tap_profile())
    chreal = ChannelRealization.draw(
        code.n_relays, cfg.n_subcarriers, profile, profile, rng, cfg.n_oscillators
    )
    delays = _draw_delays(cfg, tau, rng)
    return LinkContext(
        code=code,
        chreal=chreal,
        delays=delays,
        mf=MatchedFilter(cfg.beta, cfg.n_sidelobes),
        mode=mode,
        p0=p0,
        amp=amplification_factor(p0, pr, cfg.n0),
        n_cp1=cfg.n_cp1,
        n_cp2=cfg.n_cp2,
        n0=cfg.n0,
    )


def _block_elapsed(cfg: NetworkConfig) -> int:
    """Air time of one block index: phase I plus phase II, in symbol periods."""
    r = cfg.n_relays
    return r * (cfg.n_subcarriers + cfg.n_cp1) + r * (cfg.n_subcarriers + cfg.n_cp2)


def trial_rng(cfg: NetworkConfig, point_index: int, trial_index: int) -> np.random.Generator:
    seq = np.random.SeedSequence(cfg.master_seed, spawn_key=(point_index, trial_index))
    return np.random.default_rng(seq)


def _decode_bits(code: UnitaryCode, y: np.ndarray, y_prev: np.ndarray, mats_bits) -> np.ndarray:
    """Hard bit decisions for one block, laid out codeword-major like the input."""
    if code.kind == "od2":
        v1, v2 = differential_decode_fast(y, y_prev)
        return (np.stack([v1, v2], axis=1).real < 0).astype(np.int64).ravel()
    matrices, bits = mats_bits
    idx, _ = differential_decode_ml(y, y_prev, matrices)
    return bits[idx].ravel()


def run_trial(
    cfg: NetworkConfig,
    mode: str,
    tau: float,
    snr_db: float,
    point_index: int,
    trial_index: int,
) -> TrialCounts:
    """One deterministic Monte Carlo trial (uncoded or coded by config)."""
    rng = trial_rng(cfg, point_index, trial_index)
    if cfg.repetition > 1:
        return _run_coded_trial(cfg, mode, tau, snr_db, rng)
    return _run_uncoded_trial(cfg, mode, tau, snr_db, rng)


def _run_uncoded_trial(cfg, mode, tau, snr_db, rng) -> TrialCounts:
    p0, pr = cfg.powers(snr_db)
    ctx = _draw_context(cfg, mode, tau, p0, pr, rng)
    code = ctx.code
    n = cfg.n_subcarriers
    mats_bits = None if code.kind == "od2" else enumerate_codewords(code)
    elapsed = _block_elapsed(cfg)

    frame = reference_frame(code.n_relays, n)
    y_prev = transmit_frame(ctx, frame, rng)
    bits = bit_errors = blocks = block_errors = 0
    for _ in range(cfg.frames_per_draw):
        if cfg.fd_ts > 0:
            ctx = _evolved(ctx, elapsed, cfg.fd_ts)
        tx_bits = rng.integers(0, 2, size=code.bits_per_codeword * n)
        symbols = bits_to_symbols(tx_bits, code)
        matrices = build_data_matrices(code, symbols)
        frame = differential_encode(code, matrices, frame)
        y = transmit_frame(ctx, frame, rng)
        hat = _decode_bits(code, y, y_prev, mats_bits)
        wrong = hat != tx_bits
        bits += tx_bits.size
        bit_errors += int(wrong.sum())
        blocks += n
        block_errors += int(np.any(wrong.reshape(n, -1), axis=1).sum())
        y_prev = y
    return TrialCounts(bits, bit_errors, blocks, block_errors)


def _run_coded_trial(cfg, mode, tau, snr_db, rng) -> TrialCounts:
    p0, pr = cfg.powers(snr_db)
    code = make_code(cfg.code)
    n = cfg.n_subcarriers
    bits_per_frame = code.bits_per_codeword * n
    spec = InterleaverSpec(cfg.interleaver_depth, cfg.repetition)

    info = rng.integers(0, 2, size=spec.depth)
    tx_stream = interleave(repeat_encode(info, spec.repetition), spec)
    n_frames = math.ceil(tx_stream.size / bits_per_frame)
    padded = np.zeros(n_frames * bits_per_frame, dtype=np.int64)
    padded[: tx_stream.size] = tx_stream
    soft = np.empty(padded.size, dtype=np.complex128)

    elapsed = _block_elapsed(cfg)
    blocks = block_errors = 0
    frame_idx = 0
    while frame_idx < n_frames:
        ctx = _draw_context(cfg, mode, tau, p0, pr, rng)
        frame = reference_frame(code.n_relays, n)
        y_prev = transmit_frame(ctx, frame, rng)
        for _ in range(cfg.frames_per_draw):
            if frame_idx >= n_frames:
                break
            if cfg.fd_ts > 0:
                ctx = _evolved(ctx, elapsed, cfg.fd_ts)
            lo, hi = frame_idx * bits_per_frame, (frame_idx + 1) * bits_per_frame
            tx_bits = padded[lo:hi]
            symbols = bits_to_symbols(tx_bits, code)
            matrices = build_data_matrices(code, symbols)
            frame = differential_encode(code, matrices, frame)
            y = transmit_frame(ctx, frame, rng)
            v1, v2 = differential_decode_fast(y, y_prev)
            soft[lo:hi] = np.stack([v1, v2], axis=1).ravel()
            hard = (soft[lo:hi].real < 0).astype(np.int64)
            wrong = hard != tx_bits
            blocks += n
            block_errors += int(np.any(wrong.reshape(n, -1), axis=1).sum())
            y_prev = y
            frame_idx += 1

    per_bit = deinterleave(soft[: spec.size], spec)
    decided = combine_and_decide(per_bit)
    bit_errors = int((decided != info).sum())
    return TrialCounts(int(info.size), bit_errors, blocks, block_errors)


def _evolved(ctx: LinkContext, elapsed: float, fd_ts: float) -> LinkContext:
    return LinkContext(
        code=ctx.code,
        chreal=ctx.chreal.evolved(elapsed, fd_ts),
        delays=ctx.delays,
        mf=ctx.mf,
        mode=ctx.mode,
        p0=ctx.p0,
        amp=ctx.amp,
        n_cp1=ctx.n_cp1,
        n_cp2=ctx.n_cp2,
        n0=ctx.n0,
    )


# --- sweep driver ----------------------------------------------------------


def _trial_worker(args) -> TrialCounts:
    cfg, mode, tau, snr_db, point_index, trial_index = args
    try:
        return run_trial(cfg, mode, tau, snr_db, point_index, trial_index)
    except Exception as exc:  # noqa: BLE001 - reported with reproduction info
        raise RuntimeError(
            f"trial {trial_index} of point {point_index} "
            f"(mode={mode}, tau={tau}, snr_db={snr_db}, master_seed={cfg.master_seed}) "
            f"failed: {exc}"
        ) from exc


def _auto_batch(cfg: NetworkConfig) -> int:
    if cfg.batch_trials:
        return cfg.batch_trials
    return 8 if cfg.repetition > 1 else 256


def run_point(
    cfg: NetworkConfig,
    mode: str,
    tau: float,
    snr_db: float,
    point_index: int,
    pool=None,
) -> SimResult:
    """Run trials for one sweep point until the stop rule fires."""
    batch = _auto_batch(cfg)
    totals = ZERO_COUNTS
    trials = 0
    start = time.perf_counter()
    while True:
        args = [(cfg, mode, tau, snr_db, point_index, trials + i) for i in range(batch)]
        if pool is None:
            counts = [_trial_worker(a) for a in args]
        else:
            counts = pool.map(_trial_worker, args)
        for c in counts:
            totals = totals + c
        trials += batch
        if totals.bit_errors >= cfg.target_bit_errors or totals.bits >= cfg.max_bits:
            break
    wall = time.perf_counter() - start
    ber = totals.bit_errors / totals.bits if totals.bits else 0.0
    bler = totals.block_errors / totals.blocks if totals.blocks else 0.0
    return SimResult(
        scheme=mode,
        code=cfg.code,
        channel=cfg.channel_label,
        tau=tau,
        snr_db=snr_db,
        trials=trials,
        bits=totals.bits,
        bit_errors=totals.bit_errors,
        ber=ber,
        blocks=totals.blocks,
        block_errors=totals.block_errors,
        bler=bler,
        wall_time=wall,
        seed=cfg.master_seed,
    )


def sweep_grid(cfg: NetworkConfig) -> list[tuple[str, float, float]]:
    """The (mode, tau, snr) grid in point-index order (seeding depends on it)."""
    return [
        (mode, tau, snr)
        for mode in cfg.sampler_modes
        for tau in cfg.taus
        for snr in cfg.snr_db
    ]


def sweep(cfg: NetworkConfig, workers: int = 1) -> list[SimResult]:
    """Run the full sweep; embarrassingly parallel over trials within points."""
    cfg.validate()
    grid = sweep_grid(cfg)
    results: list[SimResult] = []
    if workers > 1:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(workers) as pool:
            for point_index, (mode, tau, snr) in enumerate(grid):
                results.append(run_point(cfg, mode, tau, snr, point_index, pool))
    else:
        for point_index, (mode, tau, snr) in enumerate(grid):
            results.append(run_point(cfg, mode, tau, snr, point_index))
    results.sort(key=lambda r: (r.scheme, r.tau, r.snr_db))
    return results


CSV_COLUMNS = (
    "scheme,code,channel,tau,snr_db,trials,bits,bit_errors,ber,block_errors,bler,seed"
)


def results_to_csv(results: list[SimResult]) -> str:
    """Stable text rendering: identical runs give byte-identical files."""
    lines = [CSV_COLUMNS]
    for r in results:
        lines.append(
            f"{r.scheme},{r.code},{r.channel},{r.tau:g},{r.snr_db:g},{r.trials},"
            f"{r.bits},{r.bit_errors},{r.ber:.10e},{r.block_errors},{r.bler:.10e},{r.seed}"
        )
    return "\n".join(lines) + "\n"


def write_csv(results: list[SimResult], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(results_to_csv(results))


# --- diagnostic surfaces ----------------------------------------------------


def gamma_table(
    taus,
    snr_db: float = 25.0,
    n_subcarriers: int = 64,
    *,
    n_relays: int = 2,
    beta: float = 0.9,
    n_sidelobes: int | None = None,
    mode: str = MODE_SYMBOL_RATE,
    n0: float = 1.0,
    p0_fraction: float = 0.5,
    pr_fraction: float | None = None,
    rd_magnitudes=None,
) -> np.ndarray:
    """Received SNR per subcarrier, in dB, for fixed flat RD gains.

    Row t holds gamma(n) for taus[t] applied to relays 2..R (relay 1 stays
    synchronized).  The default untruncated matched-filter response
    (``n_sidelobes=None``) makes the mirror symmetry gamma(n, tau) =
    gamma(n, 1 - tau) and the tau-monotonicity exact.
    """
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    n = n_subcarriers
    p = n0 * 10.0 ** (snr_db / 10.0)
    p0 = p * p0_fraction
    pr = p * (pr_fraction if pr_fraction is not None else 1.0 / (2.0 * n_relays))
    if rd_magnitudes is None:
        rd_magnitudes = np.ones(n_relays)
    ones = np.ones((n_relays, n), dtype=np.complex128)
    chreal = ChannelRealization((), (), ones, ones * np.asarray(rd_magnitudes)[:, None])
    mf = MatchedFilter(beta, n_sidelobes)
    code = make_code("od2" if n_relays == 2 else "qod4")
    out = np.empty((taus.size, n))
    for t, tau in enumerate(taus):
        delays = DelayProfile((0,) * n_relays, (0.0,) + (float(tau),) * (n_relays - 1))
        eff = build_effective_channel(chreal, delays, mf, mode, code, p0, pr, n0)
        out[t] = 10.0 * np.log10(eff.snr)
    return out


# --- appendix-equivalence oracle --------------------------------------------


@dataclass(frozen=True)
class OracleCase:
    code: str
    n_taps: int
    mode: str
    d: tuple[int, ...]
    tau: tuple[float, ...]
    snr_db: float
    rel_err: float


ORACLE_TAUS = (0.0, 0.25, 0.3, 0.5, 0.7)


def equivalence_check(
    n_cases: int = 200,
    seed: int = 0,
    modes: tuple[str, ...] = SAMPLER_MODES,
) -> tuple[float, list[OracleCase]]:
    """Noiseless pipeline vs the per-subcarrier model A sqrt(P0 R) S[n] H[n].

    Random configurations over both code families, flat and 6-tap channels,
    integer offsets 0..5 and the fractional-offset menu.  Returns the worst
    relative error and the per-case records.
    """
    rng = np.random.default_rng(seed)
    cases: list[OracleCase] = []
    worst = 0.0
    for _ in range(n_cases):
        kind = rng.choice(["od2", "qod4"])
        code = make_code(str(kind))
        r = code.n_relays
        n_taps = int(rng.choice([1, 6]))
        mode = str(rng.choice(list(modes)))
        n = 64
        n_cp1 = max(n_taps - 1, 0)
        n_cp2 = (n_taps - 1) + 5 + 2  # budget for d_max=5, one side-lobe
        d = (0,) + tuple(int(v) for v in rng.integers(0, 6, size=r - 1))
        tau = (0.0,) + tuple(float(rng.choice(ORACLE_TAUS)) for _ in range(r - 1))
        snr_db = float(rng.uniform(10.0, 30.0))
        p = 10.0 ** (snr_db / 10.0)
        p0, pr = p / 2.0, p / (2.0 * r)
        n0 = 1.0

        profile = TapProfile.uniform(n_taps)
        chreal = ChannelRealization.draw(r, n, profile, profile, rng)
        delays = DelayProfile(d, tau)
        mf = MatchedFilter(0.9, 1)
        ctx = LinkContext(
            code=code,
            chreal=chreal,
            delays=delays,
            mf=mf,
            mode=mode,
            p0=p0,
            amp=amplification_factor(p0, pr, n0),
            n_cp1=n_cp1,
            n_cp2=n_cp2,
            n0=n0,
        )
        eff = build_effective_channel(chreal, delays, mf, mode, code, p0, pr, n0)

        frame = reference_frame(r, n)
        rel_err = 0.0
        for _frame_no in range(2):
            y = transmit_frame(ctx, frame, rng, noiseless=True)
            model = expected_freq_output(eff, code, frame.data, p0)
            scale = np.max(np.abs(model))
            rel_err = max(rel_err, float(np.max(np.abs(y - model)) / scale))
            bits = rng.integers(0, 2, size=code.bits_per_codeword * n)
            matrices = build_data_matrices(code, bits_to_symbols(bits, code))
            frame = differential_encode(code, matrices, frame)
        cases.append(OracleCase(code.kind, n_taps, mode, d, tau, snr_db, rel_err))
        worst = max(worst, rel_err)
    return worst, cases
