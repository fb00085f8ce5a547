"""Small built-in demo corpus: binary therapy-type case notes.

100 short oncology-flavoured notes labeled radiotherapy vs systemic therapy,
generated deterministically from word pools with shared filler vocabulary
(so the task is learnable but not trivial). Useful for demos and for
end-to-end tests when no real dataset is on hand.
"""

from __future__ import annotations

import random

RADIATION_TERMS = [
    "external beam radiation",
    "stereotactic radiosurgery",
    "fractionated radiotherapy",
    "brachytherapy seeds",
    "proton beam course",
    "palliative irradiation",
    "boost to the tumor bed",
    "image guided radiation",
]

SYSTEMIC_TERMS = [
    "adjuvant chemotherapy",
    "platinum doublet infusion",
    "immune checkpoint inhibitor",
    "targeted kinase inhibitor",
    "hormone suppression therapy",
    "systemic cytotoxic cycles",
    "monoclonal antibody infusion",
    "oral chemotherapy course",
]

FILLER = [
    "the patient tolerated treatment well",
    "follow up imaging is scheduled",
    "mild fatigue was reported",
    "the multidisciplinary board reviewed the case",
    "baseline labs were unremarkable",
    "supportive care was continued",
    "the lesion measured two centimeters",
    "no dose limiting toxicity occurred",
    "performance status remained stable",
    "symptoms improved at the next visit",
]

CLASSES = ["radiotherapy", "systemic_therapy"]


def therapy_notes(n: int = 100, seed: int = 0, ambiguous_fraction: float = 0.15):
    """(id, text, label) rows plus the class list.

    A fraction of notes mention a term from the other class too, which keeps
    some instances genuinely uncertain.
    """
    rng = random.Random(seed)
    rows = []
    for i in range(n):
        label = i % 2
        key_pool = RADIATION_TERMS if label == 0 else SYSTEMIC_TERMS
        other_pool = SYSTEMIC_TERMS if label == 0 else RADIATION_TERMS
        parts = [rng.choice(key_pool)]
        parts.extend(rng.sample(FILLER, k=rng.randint(2, 4)))
        if rng.random() < ambiguous_fraction:
            parts.insert(rng.randint(1, len(parts)), "prior " + rng.choice(other_pool))
        rng.shuffle(parts)
        rows.append((f"case{i:03d}", ", ".join(parts) + ".", label))
    return rows, list(CLASSES)


def write_jsonl(path: str, rows) -> None:
    import json

    with open(path, "w", encoding="utf-8") as fh:
        for iid, text, label in rows:
            fh.write(json.dumps({"id": iid, "text": text, "label": CLASSES[label]}) + "\n")
