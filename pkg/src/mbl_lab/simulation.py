"""Compiled self-play loop for a repeated game.

Randomness comes from one Philox stream per (run, player); uniforms are
drawn in chunks on the Python side and consumed by the compiled loop, so
results do not depend on the chunk size.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .games import Game, player_violations
from .learners import (
    ALGO_CODE,
    LearnerConfig,
    _dpu_core,
    _faq_core,
    _lc_core,
    _wolf_core,
    adaptive_mutation,
    init_state,
)

CHUNK = 1 << 15

# columns of the per-player float parameter table
_THETA, _M, _TAU, _BETA, _ALPHA0, _KAPPA, _DW, _DL = range(8)


def player_stream(seed: int, run: int, player: int) -> np.random.Generator:
    """Action stream of ``player`` (0-based) in ``run``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(run, 1 + player))))


def init_stream(seed: int, run: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(run, 0))))


@njit(cache=True, nogil=True)
def _chunk(
    pay, strides, counts, offsets, algo, fpar, c, x, Q, xbar, t, cnt,
    u, step0, rec_steps, rec_out, std_out, dist_out, ctr,
    ring, ref, s1, s2, target, has_target, dmin,
):
    P = counts.size
    W = ring.shape[0]
    D = ring.shape[1]
    acts = np.empty(P, np.int64)
    for s in range(u.shape[0]):
        step = step0 + s + 1
        idx = 0
        for p in range(P):
            n = counts[p]
            acc = 0.0
            h = n - 1
            for k in range(n):
                acc += x[p, k]
                if u[s, p] < acc:
                    h = k
                    break
            acts[p] = h
            idx += h * strides[p]
        for p in range(P):
            r = pay[p, idx]
            n = counts[p]
            h = acts[p]
            a = algo[p]
            if a == 0 or a == 2:  # MBL-DPU, Cross
                _dpu_core(x[p, :n], c[p, :n], fpar[p, _THETA], fpar[p, _M], h, r)
            elif a == 1:  # MBL-LC
                _lc_core(x[p, :n], Q[p, :n], c[p, :n], fpar[p, _THETA], fpar[p, _M],
                         fpar[p, _TAU], fpar[p, _BETA], h, r)
            elif a == 3:  # FAQ
                _faq_core(x[p, :n], Q[p, :n], fpar[p, _THETA], fpar[p, _TAU], fpar[p, _BETA], h, r)
            else:  # WoLF-PHC
                cnt[p] = _wolf_core(x[p, :n], Q[p, :n], xbar[p, :n], float(t[p]), cnt[p],
                                    fpar[p, _ALPHA0], fpar[p, _KAPPA], fpar[p, _DW], fpar[p, _DL], h, r)
            t[p] += 1

        # rolling window of concatenated profiles
        pos = ctr[1]
        fill = ctr[2]
        if fill == W:
            for p in range(P):
                for k in range(offsets[p], offsets[p + 1]):
                    v = ring[pos, k] - ref[k]
                    s1[k] -= v
                    s2[p] -= v * v
        else:
            fill += 1
        for p in range(P):
            for k in range(counts[p]):
                ring[pos, offsets[p] + k] = x[p, k]
                v = x[p, k] - ref[offsets[p] + k]
                s1[offsets[p] + k] += v
                s2[p] += v * v
        pos = (pos + 1) % W
        ctr[1] = pos
        ctr[2] = fill
        if pos == 0:
            # exact resync against accumulated rounding; sums are kept as
            # deviations from the newest entry so constant windows give exactly 0
            for k in range(D):
                ref[k] = ring[W - 1, k]
                s1[k] = 0.0
            for p in range(P):
                s2[p] = 0.0
                for j in range(fill):
                    for k in range(offsets[p], offsets[p + 1]):
                        v = ring[j, k] - ref[k]
                        s1[k] += v
                        s2[p] += v * v

        if has_target:
            d2 = 0.0
            for p in range(P):
                for k in range(counts[p]):
                    e = x[p, k] - target[offsets[p] + k]
                    d2 += e * e
            d = np.sqrt(d2)
            if d < dmin[0]:
                dmin[0] = d

        ri = ctr[0]
        if ri < rec_steps.size and rec_steps[ri] == step:
            for p in range(P):
                for k in range(counts[p]):
                    rec_out[ri, offsets[p] + k] = x[p, k]
                m2 = 0.0
                for k in range(offsets[p], offsets[p + 1]):
                    mk = s1[k] / fill
                    m2 += mk * mk
                var = s2[p] / fill - m2
                std_out[ri, p] = np.sqrt(var) if var > 0.0 else 0.0
            dist_out[ri] = dmin[0]
            dmin[0] = np.inf
            ctr[0] = ri + 1


@dataclass
class RunOutput:
    steps: np.ndarray  # recorded step indices
    profiles: np.ndarray  # (len(steps), dim)
    rolling_std: np.ndarray  # (len(steps), num_players)
    min_dist: np.ndarray | None  # per record: min distance to target since previous record
    M_history: np.ndarray | None = None  # (len(steps), num_players) when adaptive


def _param_table(configs: Sequence[LearnerConfig]) -> np.ndarray:
    rows = []
    for cfg in configs:
        rows.append([cfg.theta, cfg.mutation, cfg.tau, cfg.beta, cfg.alpha0, cfg.kappa, cfg.delta_w, cfg.delta_l])
    return np.array(rows, dtype=float)


def self_play(
    game: Game,
    configs: Sequence[LearnerConfig],
    x0: Sequence[np.ndarray],
    steps: int,
    streams: Sequence[np.random.Generator],
    record_steps: np.ndarray,
    window: int = 5000,
    target: np.ndarray | None = None,
    original_game: Game | None = None,
    adapt_every: int = 1000,
) -> RunOutput:
    """Run ``steps`` rounds of simultaneous play on an already-shifted ``game``.

    ``record_steps`` must be sorted and within ``[0, steps]``; step 0 is the
    initial profile. With ``target`` set, each record also carries the
    smallest distance to it since the previous record. ``original_game`` is
    needed only for the adaptive mutation controller.
    """
    P = game.num_players
    counts = np.array(game.action_counts, dtype=np.int64)
    nmax = int(counts.max())
    offsets = game.offsets().astype(np.int64)
    D = game.dim
    pay = np.stack([r.ravel() for r in game.payoffs])
    strides = np.array([int(np.prod(counts[p + 1:])) for p in range(P)], dtype=np.int64)
    algo = np.array([ALGO_CODE[cfg.algorithm] for cfg in configs], dtype=np.int64)
    fpar = _param_table(configs)

    x = np.zeros((P, nmax))
    Q = np.zeros((P, nmax))
    xbar = np.zeros((P, nmax))
    c = np.zeros((P, nmax))
    for p, cfg in enumerate(configs):
        n = counts[p]
        st = init_state(cfg, x0[p])
        x[p, :n], Q[p, :n], xbar[p, :n] = st.policy, st.Q, st.avg_policy
        c[p, :n] = cfg.bias(n)
    t = np.zeros(P, np.int64)
    cnt = np.zeros(P, np.int64)

    record_steps = np.asarray(record_steps, dtype=np.int64)
    R = record_steps.size
    rec_out = np.zeros((R, D))
    std_out = np.zeros((R, P))
    dist_out = np.full(R, np.nan)
    has_target = target is not None
    tgt = np.asarray(target, dtype=float) if has_target else np.zeros(D)
    ring = np.zeros((max(window, 1), D))
    s1 = np.zeros(D)
    s2 = np.zeros(P)
    ctr = np.zeros(3, np.int64)
    dmin = np.array([np.inf])

    flat0 = np.concatenate([x[p, :counts[p]] for p in range(P)])
    ring[0] = flat0
    ref = flat0.copy()  # s1/s2 hold deviations from ref; the first entry contributes 0
    ctr[1], ctr[2] = 1 % ring.shape[0], 1
    if has_target:
        dmin[0] = float(np.linalg.norm(flat0 - tgt))
    if R and record_steps[0] == 0:
        rec_out[0] = flat0
        dist_out[0] = dmin[0]
        dmin[0] = np.inf
        ctr[0] = 1

    adaptive = [p for p, cfg in enumerate(configs) if cfg.adaptive_factor is not None]
    M_hist = np.zeros((R, P)) if adaptive else None
    if adaptive and original_game is None:
        raise ValueError("adaptive mutation needs the unshifted game")
    chunk = adapt_every if adaptive else CHUNK
    M_ceiling = fpar[:, _M].copy()

    done = 0
    while done < steps:
        S = min(chunk, steps - done)
        u = np.empty((S, P))
        for p in range(P):
            u[:, p] = streams[p].random(S)
        r0 = int(ctr[0])
        _chunk(pay, strides, counts, offsets, algo, fpar, c, x, Q, xbar, t, cnt,
               u, done, record_steps, rec_out, std_out, dist_out, ctr,
               ring, ref, s1, s2, tgt, has_target, dmin)
        if M_hist is not None:
            M_hist[r0:int(ctr[0])] = fpar[:, _M]
        done += S
        if adaptive:
            prof = [x[p, :counts[p]].copy() for p in range(P)]
            viol = player_violations(original_game, [v / v.sum() for v in prof])
            for p in adaptive:
                cfg = configs[p]
                new_M = adaptive_mutation(float(viol[p]), cfg.adaptive_factor, cfg.M_floor)
                # never exceed the configured M, so the step-size bound keeps holding
                fpar[p, _M] = min(new_M, M_ceiling[p])
    if M_hist is not None and R and record_steps[0] == 0:
        M_hist[0] = M_ceiling
    return RunOutput(record_steps, rec_out, std_out, dist_out if has_target else None, M_hist)
