"""Synthetic CHAT corpus generator with plantable class signal.

Produces picture-description-style transcripts in CHAT text form so the
whole pipeline, parser included, can be exercised without licensed data.
The AD class gets elevated filler/pause token rates ("um", "uh", "(...)"),
slower and gappier utterance timing, and an MMSE score tied linearly to
the realized filler rate (plus a little noise); controls sit near the top
of the scale.  Everything is driven by one seed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_SCENE_WORDS = [
    "boy", "girl", "mother", "cookie", "jar", "stool", "sink", "water",
    "plate", "window", "curtain", "kitchen", "cupboard", "dish", "floor",
    "garden", "cup", "counter", "apron", "towel",
]
_VERBS = ["takes", "reaches", "falls", "spills", "washes", "dries", "stands",
          "tips", "grabs", "watches"]
_CONNECTIVES = ["and", "then", "so", "while", "because"]
_INV_PROMPTS = ["mhm .", "can you tell me more ?", "what else do you see ?",
                "okay .", "anything else ?"]


@dataclass(frozen=True)
class SyntheticSpec:
    n_transcripts: int = 100
    seed: int = 0
    ad_fraction: float = 0.5
    utterances_low: int = 6
    utterances_high: int = 10
    # per-token marker probabilities
    filler_rate_ad: float = 0.22
    filler_rate_control: float = 0.04
    pause_rate_ad: float = 0.12
    pause_rate_control: float = 0.02
    missing_interval_rate: float = 0.03
    mmse_noise_sd: float = 0.5


def _utterance_tokens(rng, filler_rate: float, pause_rate: float) -> list[str]:
    length = int(rng.integers(6, 14))
    tokens = []
    for _ in range(length):
        roll = rng.random()
        if roll < filler_rate:
            tokens.append("um" if rng.random() < 0.7 else "uh")
        elif roll < filler_rate + pause_rate:
            tokens.append("(...)")
        elif rng.random() < 0.25:
            tokens.append(str(rng.choice(_VERBS)))
        elif rng.random() < 0.2:
            tokens.append(str(rng.choice(_CONNECTIVES)))
        else:
            tokens.append("the " + str(rng.choice(_SCENE_WORDS))
                          if rng.random() < 0.5 else str(rng.choice(_SCENE_WORDS)))
    return tokens


def generate_corpus(spec: SyntheticSpec = SyntheticSpec()) -> list[tuple[str, str]]:
    """Return [(filename, cha_text)] for a synthetic corpus."""
    rng = np.random.default_rng(spec.seed)
    n_ad = int(round(spec.n_transcripts * spec.ad_fraction))
    files = []
    for i in range(spec.n_transcripts):
        is_ad = i < n_ad
        tid = f"synth{i:04d}"
        files.append((tid + ".cha", _one_transcript(rng, spec, tid, is_ad, i)))
    return files


def _one_transcript(rng, spec: SyntheticSpec, tid: str, is_ad: bool, index: int) -> str:
    filler = spec.filler_rate_ad if is_ad else spec.filler_rate_control
    pause = spec.pause_rate_ad if is_ad else spec.pause_rate_control
    n_utts = int(rng.integers(spec.utterances_low, spec.utterances_high + 1))

    age = int(rng.integers(55, 86))
    sex = "female" if rng.random() < 0.5 else "male"
    group = "ProbableAD" if is_ad else "Control"

    all_tokens = 0
    filler_tokens = 0
    par_lines = []
    clock = 0.0
    for u in range(n_utts):
        tokens = _utterance_tokens(rng, filler, pause)
        all_tokens += len(tokens)
        # the MMSE link uses only word-shaped fillers: "(...)" has no
        # alphanumeric core, so a word vectorizer cannot see it
        filler_tokens += sum(1 for t in tokens if t in ("um", "uh"))
        text = " ".join(tokens) + " ."
        if is_ad:
            duration = max(600.0, rng.normal(5200, 1400))
            gap = max(0.0, rng.normal(2100, 650))
        else:
            duration = max(400.0, rng.normal(2600, 700))
            gap = max(0.0, rng.normal(520, 210))
        start = clock + gap
        end = start + duration
        clock = end
        if rng.random() < spec.missing_interval_rate:
            par_lines.append(f"*PAR:\t{text}")
        else:
            par_lines.append(f"*PAR:\t{text} •{int(start)}_{int(end)}•")

    rate = filler_tokens / max(all_tokens, 1)
    mmse = 30.0 - 52.0 * rate + rng.normal(0.0, spec.mmse_noise_sd)
    mmse = int(np.clip(round(mmse), 0, 30))

    lines = [
        "@Begin",
        "@Languages:\teng",
        "@Participants:\tPAR Participant, INV Investigator",
        f"@ID:\teng|synth|PAR|{age};|{sex}|{group}|||{mmse}||",
        "@ID:\teng|synth|INV|||||Investigator|||",
    ]
    inv_positions = {int(v) for v in
                     rng.choice(n_utts, size=max(1, n_utts // 3), replace=False)}
    for u, par_line in enumerate(par_lines):
        if u in inv_positions:
            lines.append(f"*INV:\t{rng.choice(_INV_PROMPTS)}")
        lines.append(par_line)
    lines.append("@End")
    return "\n".join(lines) + "\n"


def write_corpus(directory: str, spec: SyntheticSpec = SyntheticSpec()) -> list[str]:
    """Write the corpus .cha files; returns the written paths."""
    import os

    os.makedirs(directory, exist_ok=True)
    paths = []
    for name, text in generate_corpus(spec):
        path = os.path.join(directory, name)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        paths.append(path)
    return paths
