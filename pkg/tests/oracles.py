"""Independent reference implementations used only to check the library.

Each oracle deliberately takes a different computational route than the code
under test: latent-path enumeration instead of stepwise belief updates,
all-pairs comparison instead of ranking, and full joint-table enumeration
instead of factored inference.
"""

import itertools
import math


def path_probabilities(params, n):
    """Probability of each monotone latent path over n steps.

    The knowledge state never regresses, so a path is fully described by j,
    the index of the first step taken in the known state (j = n means the
    student never learns within the window).
    """
    l0, t = params.p_init, params.p_learn
    probs = []
    for j in range(n + 1):
        if j == 0:
            probs.append(l0)
        elif j < n:
            probs.append((1 - l0) * (1 - t) ** (j - 1) * t)
        else:
            probs.append((1 - l0) * (1 - t) ** (n - 1))
    if n == 0:
        probs = [l0, 1 - l0]
    return probs


def _emission(params, known, outcome):
    if known:
        return (1 - params.p_slip) if outcome == 1 else params.p_slip
    return params.p_guess if outcome == 1 else (1 - params.p_guess)


def enum_sequence_probability(params, outcomes):
    """P(outcomes) by summing over every monotone latent path."""
    n = len(outcomes)
    total = 0.0
    for j, p_path in enumerate(path_probabilities(params, n)):
        like = p_path
        for i, o in enumerate(outcomes):
            like *= _emission(params, known=i >= j, outcome=o)
        total += like
    return total


def enum_log_likelihood(params, sequences):
    return sum(math.log(enum_sequence_probability(params, seq)) for seq in sequences)


def enum_mastery_prior(params, observed_prefix):
    """P(known at the next step | observed_prefix), by path enumeration.

    Paths now span len(prefix) + 1 slots; the prior is the total probability
    of paths already known at the final slot, conditioned on the prefix.
    """
    n = len(observed_prefix)
    l0, t = params.p_init, params.p_learn
    num = 0.0
    den = 0.0
    # j = index of the first known slot among slots 0..n (j = n + 1: never)
    for j in range(n + 2):
        if j == 0:
            p_path = l0
        elif j <= n:
            p_path = (1 - l0) * (1 - t) ** (j - 1) * t
        else:
            p_path = (1 - l0) * (1 - t) ** n
        like = p_path
        for i, o in enumerate(observed_prefix):
            like *= _emission(params, known=i >= j, outcome=o)
        den += like
        if j <= n:  # known at slot n
            num += like
    return num / den


def pairwise_auc(scores, labels):
    """All positive-negative pairs compared directly, ties worth 1/2."""
    pos = [s for s, l in zip(scores, labels) if l == 1]
    neg = [s for s, l in zip(scores, labels) if l == 0]
    if not pos or not neg:
        raise ValueError("needs both classes")
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def enum_joint_table(model):
    """The full joint over (y, every feature assignment) from the CPTs."""
    from ktbayes.tan import FEATURES

    cards = [model.cardinalities[f] for f in FEATURES]
    table = {}
    for y in range(2):
        for assignment in itertools.product(*(range(c) for c in cards)):
            values = dict(zip(FEATURES, assignment))
            p = float(model.class_prior[y])
            for child, parent in model.structure.edges:
                tbl = model.cpts[child]
                if parent is None:
                    p *= float(tbl[y, values[child]])
                else:
                    p *= float(tbl[y, values[parent], values[child]])
            table[(y,) + assignment] = p
    return table


def enum_posterior(model, row):
    """P(y=1 | row) read straight out of the enumerated joint table."""
    from ktbayes.tan import FEATURES

    table = enum_joint_table(model)
    values = {
        "df_profile": row.df_bin,
        "difficulty": row.difficulty,
        "skill": model.skill_index[row.skill],
        "mastery": row.mastery_bin,
        "sr_profile": row.sr_bin,
    }
    key = tuple(values[f] for f in FEATURES)
    j0 = table[(0,) + key]
    j1 = table[(1,) + key]
    return j1 / (j0 + j1)
