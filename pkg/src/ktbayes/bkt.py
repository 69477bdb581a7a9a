"""Two-state Bayesian knowledge tracing.

Each skill is modeled as a hidden Markov chain over {unknown, known} with an
absorbing known state. Four probabilities govern it: the chance the skill is
known before any practice (p_init), the chance of transitioning to known
after a practice opportunity (p_learn), the chance an unknowing student
answers correctly anyway (p_guess), and the chance a knowing student answers
incorrectly (p_slip). Beliefs are updated per observed outcome and the four
parameters are estimated per skill by expectation-maximization.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .validation import ModelFormatError, check_probability, check_version_header

# global probability clamp: keeps beliefs away from the absorbing 0/1
# boundaries and every per-step probability safe to take a log of
EPS = 1e-3

PARAMS_FILE_VERSION = 1


@dataclass(frozen=True)
class BktParams:
    """The four per-skill probabilities.

    Construction accepts the full [0, 1] range (the update equations are
    defined there); fitted parameters are clamped to [EPS, 1-EPS] and to the
    optional guess/slip caps via :meth:`clamped`.
    """

    p_init: float
    p_learn: float
    p_guess: float
    p_slip: float

    def __post_init__(self):
        for f in fields(self):
            check_probability(f.name, getattr(self, f.name))

    def clamped(
        self,
        guess_cap: float | None = None,
        slip_cap: float | None = None,
        eps: float = EPS,
    ) -> "BktParams":
        lo, hi = eps, 1.0 - eps
        g_hi = hi if guess_cap is None else min(hi, guess_cap)
        s_hi = hi if slip_cap is None else min(hi, slip_cap)
        return BktParams(
            p_init=min(max(self.p_init, lo), hi),
            p_learn=min(max(self.p_learn, lo), hi),
            p_guess=min(max(self.p_guess, lo), g_hi),
            p_slip=min(max(self.p_slip, lo), s_hi),
        )


#: fallback for skills with too little data to fit
DEFAULT_PARAMS = BktParams(p_init=0.5, p_learn=0.1, p_guess=0.2, p_slip=0.1)


@dataclass(frozen=True)
class MasteryTrace:
    """Per-attempt mastery priors for one student on one skill."""

    skill: str
    priors: tuple[float, ...]


@dataclass(frozen=True)
class FitConfig:
    restarts: int = 5
    max_iters: int = 200
    tol: float = 1e-4
    seed: int = 0
    guess_cap: float = 0.3
    slip_cap: float = 0.3

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")


def posterior_given_correct(params: BktParams, p_l: float) -> float:
    """Belief the skill is known after observing a correct answer.

    Bayes update with the correct-answer emission: a knowing student answers
    correctly unless slipping, an unknowing one only by guessing. A zero
    denominator (impossible evidence) leaves the belief unchanged.
    """
    num = p_l * (1.0 - params.p_slip)
    den = num + (1.0 - p_l) * params.p_guess
    if den == 0.0:
        return p_l
    return num / den


def posterior_given_incorrect(params: BktParams, p_l: float) -> float:
    """Belief the skill is known after observing an incorrect answer."""
    num = p_l * params.p_slip
    den = num + (1.0 - p_l) * (1.0 - params.p_guess)
    if den == 0.0:
        return p_l
    return num / den


def apply_learning(params: BktParams, p_posterior: float) -> float:
    """Advance the belief through one practice opportunity."""
    return p_posterior + (1.0 - p_posterior) * params.p_learn


def predict_correct(params: BktParams, p_l: float) -> float:
    """Probability of a correct answer at mastery belief ``p_l``."""
    return p_l * (1.0 - params.p_slip) + (1.0 - p_l) * params.p_guess


def trace_mastery(
    params: BktParams, outcomes: Sequence[int], skill: str = ""
) -> MasteryTrace:
    """Mastery priors over a chronological outcome sequence.

    ``priors[t]`` is the belief BEFORE outcome t is observed, so the first
    entry is p_init and each later entry incorporates outcomes 0..t-1 only.
    Feeding the trace to a predictor therefore never leaks the label being
    predicted.
    """
    priors = []
    p = params.p_init
    for outcome in outcomes:
        priors.append(p)
        if outcome == 1:
            post = posterior_given_correct(params, p)
        else:
            post = posterior_given_incorrect(params, p)
        p = apply_learning(params, post)
    return MasteryTrace(skill=skill, priors=tuple(priors))


def log_likelihood(params: BktParams, sequences: Iterable[Sequence[int]]) -> float:
    """Total log-likelihood of outcome sequences under the stepwise chain.

    Each step contributes log P(outcome | history); per-step probabilities
    are clamped to [EPS, 1-EPS] so the result is always finite.
    """
    total = 0.0
    for seq in sequences:
        p = params.p_init
        for outcome in seq:
            pc = predict_correct(params, p)
            step = pc if outcome == 1 else 1.0 - pc
            total += math.log(min(max(step, EPS), 1.0 - EPS))
            if outcome == 1:
                post = posterior_given_correct(params, p)
            else:
                post = posterior_given_incorrect(params, p)
            p = apply_learning(params, post)
    return total


def _pad_sequences(sequences: list[Sequence[int]]) -> tuple[np.ndarray, np.ndarray]:
    n = len(sequences)
    t_max = max(len(s) for s in sequences)
    obs = np.zeros((n, t_max), dtype=np.int8)
    mask = np.zeros((n, t_max), dtype=bool)
    for i, seq in enumerate(sequences):
        obs[i, : len(seq)] = seq
        mask[i, : len(seq)] = True
    return obs, mask


def _em_run(
    obs: np.ndarray, mask: np.ndarray, init: BktParams, cfg: FitConfig
) -> tuple[BktParams, list[float]]:
    """One EM run from one initialization; returns params and the history of
    log-likelihoods evaluated at the start of each iteration."""
    n, t_max = obs.shape
    l0, t, g, s = init.p_init, init.p_learn, init.p_guess, init.p_slip
    history: list[float] = []
    correct = obs == 1

    for _ in range(cfg.max_iters):
        # emissions, padded steps emit probability 1 so they do not disturb
        # the scaled recursions
        e_u = np.where(mask, np.where(correct, g, 1.0 - g), 1.0)
        e_k = np.where(mask, np.where(correct, 1.0 - s, s), 1.0)

        # scaled forward pass
        a_u = np.empty((n, t_max))
        a_k = np.empty((n, t_max))
        c = np.empty((n, t_max))
        au = (1.0 - l0) * e_u[:, 0]
        ak = l0 * e_k[:, 0]
        c[:, 0] = au + ak
        a_u[:, 0] = au / c[:, 0]
        a_k[:, 0] = ak / c[:, 0]
        for j in range(1, t_max):
            au = a_u[:, j - 1] * (1.0 - t) * e_u[:, j]
            ak = (a_u[:, j - 1] * t + a_k[:, j - 1]) * e_k[:, j]
            c[:, j] = au + ak
            a_u[:, j] = au / c[:, j]
            a_k[:, j] = ak / c[:, j]

        ll = float(np.log(c[mask]).sum())
        history.append(ll)

        # scaled backward pass
        b_u = np.ones((n, t_max))
        b_k = np.ones((n, t_max))
        for j in range(t_max - 2, -1, -1):
            b_u[:, j] = (
                (1.0 - t) * e_u[:, j + 1] * b_u[:, j + 1]
                + t * e_k[:, j + 1] * b_k[:, j + 1]
            ) / c[:, j + 1]
            b_k[:, j] = e_k[:, j + 1] * b_k[:, j + 1] / c[:, j + 1]

        g_u = a_u * b_u
        g_k = a_k * b_k

        # transition posteriors, valid wherever step j+1 exists
        pair = mask[:, 1:]
        xi_uk = a_u[:, :-1] * t * e_k[:, 1:] * b_k[:, 1:] / c[:, 1:]

        l0_new = float(g_k[:, 0].mean())
        denom_t = float(g_u[:, :-1][pair].sum())
        t_new = float(xi_uk[pair].sum()) / denom_t if denom_t > 0 else t
        denom_g = float(g_u[mask].sum())
        g_new = float((g_u * correct)[mask].sum()) / denom_g if denom_g > 0 else g
        denom_s = float(g_k[mask].sum())
        s_new = float((g_k * ~correct)[mask].sum()) / denom_s if denom_s > 0 else s

        # clipping to the feasible box is the constrained M-step maximizer
        # (each objective term is unimodal in its parameter), so the
        # monotone-likelihood guarantee of EM survives the caps
        new = BktParams(l0_new, t_new, g_new, s_new).clamped(
            cfg.guess_cap, cfg.slip_cap
        )
        converged = len(history) > 1 and abs(history[-1] - history[-2]) < cfg.tol
        l0, t, g, s = new.p_init, new.p_learn, new.p_guess, new.p_slip
        if converged:
            break

    return BktParams(l0, t, g, s), history


def _random_init(rng: np.random.Generator, cfg: FitConfig) -> BktParams:
    g_hi = min(cfg.guess_cap, 0.95)
    s_hi = min(cfg.slip_cap, 0.95)
    return BktParams(
        p_init=rng.uniform(0.05, 0.95),
        p_learn=rng.uniform(0.05, 0.95),
        p_guess=rng.uniform(0.05, g_hi),
        p_slip=rng.uniform(0.05, s_hi),
    )


def _fit_em(
    sequences: list[Sequence[int]],
    cfg: FitConfig,
    rng: np.random.Generator,
    collect_history: list[list[float]] | None = None,
) -> BktParams:
    obs, mask = _pad_sequences(sequences)
    best: BktParams | None = None
    best_ll = -np.inf
    for _ in range(cfg.restarts):
        params, history = _em_run(obs, mask, _random_init(rng, cfg), cfg)
        if collect_history is not None:
            collect_history.append(history)
        final_ll = log_likelihood(params, sequences)
        if final_ll > best_ll:
            best, best_ll = params, final_ll
    return best


def fit_bkt_em(
    sequences: Iterable[Sequence[int]],
    cfg: FitConfig | None = None,
    collect_history: list[list[float]] | None = None,
) -> BktParams:
    """Fit the four parameters by EM over per-student outcome sequences.

    Runs ``cfg.restarts`` EM runs from random initializations and returns the
    parameter set with the highest final log-likelihood. Deterministic for a
    fixed config. ``collect_history`` (optional) receives one log-likelihood
    trajectory per restart.
    """
    cfg = cfg or FitConfig()
    usable = [s for s in sequences if len(s) > 0]
    if not usable:
        raise ValueError("cannot fit BKT: all sequences are empty")
    rng = np.random.default_rng(cfg.seed)
    return _fit_em(usable, cfg, rng, collect_history)


def _skill_stream_key(skill: str) -> int:
    # stable across processes, unlike hash()
    return zlib.crc32(skill.encode("utf-8"))


def skill_sequences(records) -> dict[str, list[list[int]]]:
    """Group cleaned records into per-skill, per-student outcome sequences."""
    by_skill: dict[str, dict[str, list[tuple[int, int]]]] = {}
    for r in records:
        by_skill.setdefault(r.skill, {}).setdefault(r.student, []).append(
            (r.seq_index, r.outcome)
        )
    out: dict[str, list[list[int]]] = {}
    for skill in sorted(by_skill):
        seqs = []
        for student in sorted(by_skill[skill]):
            attempts = sorted(by_skill[skill][student])
            seqs.append([o for _, o in attempts])
        out[skill] = seqs
    return out


def fit_all_skills(
    records, cfg: FitConfig | None = None, min_attempts: int = 5
) -> dict[str, BktParams]:
    """Fit one parameter set per skill found in the records.

    Skills with fewer than ``min_attempts`` total attempts get
    DEFAULT_PARAMS. Each skill draws from its own seeded stream derived from
    (cfg.seed, skill id), so fitting order cannot change results.
    """
    cfg = cfg or FitConfig()
    fitted: dict[str, BktParams] = {}
    for skill, seqs in skill_sequences(records).items():
        total = sum(len(s) for s in seqs)
        if total < min_attempts:
            fitted[skill] = DEFAULT_PARAMS
            continue
        rng = np.random.default_rng([cfg.seed, _skill_stream_key(skill)])
        fitted[skill] = _fit_em(seqs, cfg, rng)
    return fitted


def save_skill_params(
    path: Union[str, Path],
    params_by_skill: dict[str, BktParams],
    seed: int | None = None,
) -> None:
    """Write per-skill parameters as tab-separated text, 6 decimal places."""
    lines = [f"#version={PARAMS_FILE_VERSION}"]
    if seed is not None:
        lines.append(f"#seed={seed}")
    for skill in sorted(params_by_skill):
        p = params_by_skill[skill]
        lines.append(
            f"{skill}\t{p.p_init:.6f}\t{p.p_learn:.6f}\t{p.p_guess:.6f}\t{p.p_slip:.6f}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_skill_params(
    path: Union[str, Path],
) -> tuple[dict[str, BktParams], dict[str, str]]:
    """Read a parameter file back; returns (params by skill, header metadata)."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise ModelFormatError(f"{path}: empty parameter file")
    check_version_header(lines[0], PARAMS_FILE_VERSION, str(path))
    meta: dict[str, str] = {}
    params: dict[str, BktParams] = {}
    for line in lines[1:]:
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            meta[key] = value
            continue
        # split from the right so skill ids may contain tabs
        parts = line.rsplit("\t", 4)
        if len(parts) != 5:
            raise ModelFormatError(f"{path}: malformed line {line!r}")
        skill, *values = parts
        params[skill] = BktParams(*(float(v) for v in values))
    return params, meta
