"""Tree-augmented naive Bayes over the five evidence features.

The class node (correctness) is the root and parent of every feature; each
feature may additionally have one feature parent, forming a tree. The
default structure is the fixed chain

    df_profile -> difficulty -> skill -> mastery -> sr_profile

so the joint factors as P(y) * P(df_profile|y) * P(difficulty|y, df_profile)
* P(skill|y, difficulty) * P(mastery|y, skill) * P(sr_profile|y, mastery).
Conditional probability tables are estimated with Laplace smoothing and are
the model's interpretability artifact; an optional learner recovers the
feature tree from class-conditional mutual information instead.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .features import DIFFICULTY_LEVELS, EvidenceRow
from .validation import ModelFormatError, check_version_header

FEATURES = ("df_profile", "difficulty", "skill", "mastery", "sr_profile")

TAN_FILE_VERSION = 1


@dataclass(frozen=True)
class TanStructure:
    """Feature tree as (feature, parent) pairs, root parent None, root first."""

    edges: tuple[tuple[str, str | None], ...]

    def __post_init__(self):
        names = [child for child, _ in self.edges]
        if sorted(names) != sorted(FEATURES):
            raise ValueError(f"structure must cover {FEATURES} exactly once")
        roots = [child for child, parent in self.edges if parent is None]
        if len(roots) != 1:
            raise ValueError(f"structure must have exactly one root, got {roots}")
        placed = {roots[0]}
        for child, parent in self.edges:
            if parent is None:
                continue
            if parent not in placed:
                raise ValueError(
                    f"parent {parent!r} of {child!r} must appear earlier (tree order)"
                )
            placed.add(child)

    @property
    def root(self) -> str:
        return next(child for child, parent in self.edges if parent is None)

    def parent_of(self, feature: str) -> str | None:
        return dict(self.edges)[feature]


def fixed_structure() -> TanStructure:
    """The default evidence chain rooted at df_profile."""
    return TanStructure(
        edges=(
            ("df_profile", None),
            ("difficulty", "df_profile"),
            ("skill", "difficulty"),
            ("mastery", "skill"),
            ("sr_profile", "mastery"),
        )
    )


@dataclass
class TanModel:
    """Class prior plus one smoothed CPT per feature.

    CPT arrays are indexed [class, child] for the root feature and
    [class, parent, child] otherwise. ``skill_index`` maps skill ids to
    their coded values; ids unseen at training time are handled at
    prediction time by the uniform-factor rule.
    """

    structure: TanStructure
    class_prior: np.ndarray
    cpts: dict[str, np.ndarray]
    cardinalities: dict[str, int]
    skill_index: dict[str, int]
    bins: int
    alpha: float
    n_rows: int

    def encode(self, row: EvidenceRow) -> dict[str, int | None]:
        """Feature values as table indices; None marks an unseen value."""
        values: dict[str, int | None] = {
            "df_profile": row.df_bin,
            "difficulty": row.difficulty,
            "skill": self.skill_index.get(row.skill),
            "mastery": row.mastery_bin,
            "sr_profile": row.sr_bin,
        }
        for feature, value in values.items():
            if value is not None and not 0 <= value < self.cardinalities[feature]:
                values[feature] = None
        return values


def _cardinalities(bins: int, n_skills: int) -> dict[str, int]:
    return {
        "df_profile": bins + 1,  # bin index `bins` is the no-history sentinel
        "difficulty": DIFFICULTY_LEVELS,
        "skill": n_skills,
        "mastery": bins,
        "sr_profile": bins + 1,
    }


def fit_cpts(
    rows: Sequence[EvidenceRow],
    structure: TanStructure | None = None,
    alpha: float = 1.0,
    bins: int = 10,
) -> TanModel:
    """Estimate the class prior and every CPT by smoothed counting.

    Each table entry is (count + alpha) / (parent count + alpha * child
    cardinality), so unseen parent configurations yield exactly the uniform
    distribution and no entry is ever zero.
    """
    if not rows:
        raise ValueError("cannot fit TAN on an empty row list")
    if not alpha > 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    structure = structure or fixed_structure()
    skills = sorted({row.skill for row in rows})
    skill_index = {s: i for i, s in enumerate(skills)}
    cards = _cardinalities(bins, len(skills))

    class_counts = np.zeros(2)
    counts: dict[str, np.ndarray] = {}
    for child, parent in structure.edges:
        if parent is None:
            counts[child] = np.zeros((2, cards[child]))
        else:
            counts[child] = np.zeros((2, cards[parent], cards[child]))

    for row in rows:
        y = row.label
        values = {
            "df_profile": row.df_bin,
            "difficulty": row.difficulty,
            "skill": skill_index[row.skill],
            "mastery": row.mastery_bin,
            "sr_profile": row.sr_bin,
        }
        for feature, value in values.items():
            if not 0 <= value < cards[feature]:
                raise ValueError(
                    f"{feature} value {value} outside cardinality {cards[feature]}"
                )
        class_counts[y] += 1
        for child, parent in structure.edges:
            if parent is None:
                counts[child][y, values[child]] += 1
            else:
                counts[child][y, values[parent], values[child]] += 1

    prior = (class_counts + alpha) / (class_counts.sum() + 2 * alpha)
    cpts = {
        child: (tbl + alpha) / (tbl.sum(axis=-1, keepdims=True) + alpha * tbl.shape[-1])
        for child, tbl in counts.items()
    }
    return TanModel(
        structure=structure,
        class_prior=prior,
        cpts=cpts,
        cardinalities=cards,
        skill_index=skill_index,
        bins=bins,
        alpha=alpha,
        n_rows=len(rows),
    )


def factor_values(model: TanModel, row: EvidenceRow, y: int) -> dict[str, float]:
    """The per-feature factors of the class-conditional product.

    An unseen feature value, or a seen value under an unseen parent value,
    contributes the uniform 1/cardinality so it cancels in the posterior.
    """
    values = model.encode(row)
    factors: dict[str, float] = {}
    for child, parent in model.structure.edges:
        v = values[child]
        if v is None:
            factors[child] = 1.0 / model.cardinalities[child]
        elif parent is None:
            factors[child] = float(model.cpts[child][y, v])
        else:
            pv = values[parent]
            if pv is None:
                factors[child] = 1.0 / model.cardinalities[child]
            else:
                factors[child] = float(model.cpts[child][y, pv, v])
    return factors


def joint_probability(model: TanModel, row: EvidenceRow, y: int) -> float:
    """P(y) times the product of the five conditional factors."""
    p = float(model.class_prior[y])
    for factor in factor_values(model, row, y).values():
        p *= factor
    return p


def predict(model: TanModel, row: EvidenceRow) -> float:
    """Posterior probability of a correct answer given the evidence row."""
    j0 = joint_probability(model, row, 0)
    j1 = joint_probability(model, row, 1)
    return j1 / (j0 + j1)


def predict_many(model: TanModel, rows: Iterable[EvidenceRow]) -> np.ndarray:
    return np.array([predict(model, row) for row in rows])


def _pair_cmi(
    rows: Sequence[EvidenceRow],
    values: list[dict[str, int]],
    fi: str,
    fj: str,
    cards: dict[str, int],
    alpha: float,
) -> float:
    """Class-conditional mutual information from smoothed joint counts."""
    table = np.full((2, cards[fi], cards[fj]), alpha)
    for row, vals in zip(rows, values):
        table[row.label, vals[fi], vals[fj]] += 1
    joint = table / table.sum()
    p_y = joint.sum(axis=(1, 2), keepdims=True)
    cond = joint / p_y
    mi = 0.0
    for y in range(2):
        pxy = cond[y]
        px = pxy.sum(axis=1, keepdims=True)
        pz = pxy.sum(axis=0, keepdims=True)
        mi += float(p_y[y, 0, 0]) * float((pxy * np.log(pxy / (px * pz))).sum())
    return mi


def learn_structure_cmi(
    rows: Sequence[EvidenceRow], alpha: float = 1.0, bins: int = 10
) -> TanStructure:
    """Recover the feature tree by maximum-weight spanning over pairwise
    class-conditional mutual information, rooted at df_profile.

    Ties break deterministically on feature order. The fixed chain remains
    the default; this learner is opt-in.
    """
    if not rows:
        raise ValueError("cannot learn a structure from an empty row list")
    skills = sorted({row.skill for row in rows})
    skill_index = {s: i for i, s in enumerate(skills)}
    cards = _cardinalities(bins, len(skills))
    values = [
        {
            "df_profile": row.df_bin,
            "difficulty": row.difficulty,
            "skill": skill_index[row.skill],
            "mastery": row.mastery_bin,
            "sr_profile": row.sr_bin,
        }
        for row in rows
    ]

    weighted = []
    for i, fi in enumerate(FEATURES):
        for j in range(i + 1, len(FEATURES)):
            fj = FEATURES[j]
            weighted.append((_pair_cmi(rows, values, fi, fj, cards, alpha), i, j))
    weighted.sort(key=lambda w: (-w[0], w[1], w[2]))

    # Kruskal over five nodes
    parent_of = list(range(len(FEATURES)))

    def find(x):
        while parent_of[x] != x:
            parent_of[x] = parent_of[parent_of[x]]
            x = parent_of[x]
        return x

    adjacency: dict[str, list[str]] = {f: [] for f in FEATURES}
    accepted = 0
    for _, i, j in weighted:
        ri, rj = find(i), find(j)
        if ri == rj:
            continue
        parent_of[ri] = rj
        adjacency[FEATURES[i]].append(FEATURES[j])
        adjacency[FEATURES[j]].append(FEATURES[i])
        accepted += 1
        if accepted == len(FEATURES) - 1:
            break

    # orient edges outward from the root, visiting neighbors in feature order
    root = "df_profile"
    edges: list[tuple[str, str | None]] = [(root, None)]
    seen = {root}
    queue = [root]
    order = {f: i for i, f in enumerate(FEATURES)}
    while queue:
        node = queue.pop(0)
        for nbr in sorted(adjacency[node], key=order.get):
            if nbr not in seen:
                seen.add(nbr)
                edges.append((nbr, node))
                queue.append(nbr)
    return TanStructure(edges=tuple(edges))


def save_tan_model(
    path: Union[str, Path], model: TanModel, seed: int | None = None
) -> None:
    """Write the model as versioned sectioned text; floats keep full precision."""
    lines = [f"#version={TAN_FILE_VERSION}"]
    if seed is not None:
        lines.append(f"#seed={seed}")
    lines.append(f"#alpha={model.alpha!r}")
    lines.append(f"#bins={model.bins}")
    lines.append(f"#rows={model.n_rows}")
    lines.append("[structure]")
    for child, parent in model.structure.edges:
        lines.append(f"{child}\t{parent if parent is not None else '-'}")
    lines.append("[cardinalities]")
    for feature in FEATURES:
        lines.append(f"{feature}\t{model.cardinalities[feature]}")
    lines.append("[skills]")
    for skill, idx in sorted(model.skill_index.items(), key=lambda kv: kv[1]):
        lines.append(f"{idx}\t{json.dumps(skill)}")
    lines.append("[prior]")
    lines.append(" ".join(repr(float(p)) for p in model.class_prior))
    for child, parent in model.structure.edges:
        lines.append(f"[cpt {child}]")
        tbl = model.cpts[child]
        if parent is None:
            for y in range(2):
                row = " ".join(repr(float(v)) for v in tbl[y])
                lines.append(f"y={y}\t{row}")
        else:
            for y in range(2):
                for pv in range(tbl.shape[1]):
                    row = " ".join(repr(float(v)) for v in tbl[y, pv])
                    lines.append(f"y={y} p={pv}\t{row}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_tan_model(path: Union[str, Path]) -> tuple[TanModel, dict[str, str]]:
    """Parse a model file back; returns (model, header metadata)."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise ModelFormatError(f"{path}: empty model file")
    check_version_header(lines[0], TAN_FILE_VERSION, str(path))

    meta: dict[str, str] = {}
    sections: dict[str, list[str]] = {}
    current: list[str] | None = None
    for line in lines[1:]:
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            meta[key] = value
        elif line.startswith("[") and line.endswith("]"):
            current = sections.setdefault(line[1:-1], [])
        elif current is not None:
            current.append(line)
        else:
            raise ModelFormatError(f"{path}: content before first section: {line!r}")

    try:
        alpha = float(meta["alpha"])
        bins = int(meta["bins"])
        n_rows = int(meta["rows"])
        edges = []
        for line in sections["structure"]:
            child, parent = line.split("\t")
            edges.append((child, None if parent == "-" else parent))
        structure = TanStructure(edges=tuple(edges))
        cards = {}
        for line in sections["cardinalities"]:
            feature, value = line.split("\t")
            cards[feature] = int(value)
        skill_index = {}
        for line in sections.get("skills", []):
            idx, encoded = line.split("\t", 1)
            skill_index[json.loads(encoded)] = int(idx)
        prior = np.array([float(v) for v in sections["prior"][0].split()])
        cpts: dict[str, np.ndarray] = {}
        for child, parent in structure.edges:
            body = sections[f"cpt {child}"]
            if parent is None:
                tbl = np.zeros((2, cards[child]))
                for line in body:
                    label, values = line.split("\t")
                    y = int(label.split("=")[1])
                    tbl[y] = [float(v) for v in values.split()]
            else:
                tbl = np.zeros((2, cards[parent], cards[child]))
                for line in body:
                    label, values = line.split("\t")
                    y_part, p_part = label.split()
                    y = int(y_part.split("=")[1])
                    pv = int(p_part.split("=")[1])
                    tbl[y, pv] = [float(v) for v in values.split()]
            cpts[child] = tbl
    except (KeyError, ValueError, IndexError) as exc:
        raise ModelFormatError(f"{path}: malformed model file ({exc})") from None

    model = TanModel(
        structure=structure,
        class_prior=prior,
        cpts=cpts,
        cardinalities=cards,
        skill_index=skill_index,
        bins=bins,
        alpha=alpha,
        n_rows=n_rows,
    )
    return model, meta
