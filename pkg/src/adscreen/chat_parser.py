"""Parser for CHAT-format speech transcripts (.cha files).

A CHAT file interleaves ``@``-prefixed header lines, ``*SPK:`` main tiers
(one utterance each), and ``%``-prefixed dependent tiers (morphology,
grammar, ...).  Long tiers wrap onto continuation lines that begin with a
tab.  Main tiers may end in a time-alignment code, either the control
character form ``\\x15start_end\\x15`` used by real corpora or the visible
``•start_end•`` form used in plain-text fixtures; both are in milliseconds.

Cleaning keeps the tokens that matter for spontaneous-speech modelling:
fillers ("um", "ah"), pause and interruption codes ("(...)", "+..."),
paralinguistic events ("&=laughs") and shortened forms ("(be)cause") all
survive verbatim.  What goes: time codes, the characters ``[ ] < >``
(retraction/overlap scoping), and any run of whitespace beyond a single
space.  Dependent tiers and unknown speakers are ignored entirely.
"""
from __future__ import annotations

import os
import re
import warnings
from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import ChatParseWarning, MalformedHeader, NoParticipantSpeech

SPEAKER_PAR = "PAR"
SPEAKER_INV = "INV"

SEX_VALUES = ("male", "female", "unknown")
DIAGNOSIS_VALUES = ("AD", "Control", "Unknown")

# Time-alignment suffix: NAK-delimited in real corpora, bullet in fixtures.
_TIME_CODE = re.compile(r"[\x15•](\d+)_(\d+)[\x15•]")
_REMOVED_CHARS = re.compile(r"[\[\]<>\x15]")
_WHITESPACE = re.compile(r"\s+")
_MAIN_TIER = re.compile(r"^\*([A-Za-z]{2,4}):")
_DEPENDENT_TIER = re.compile(r"^%\S*:?")


@dataclass(frozen=True)
class IdFieldLayout:
    """Which pipe-separated ``@ID`` slots hold each metadata field.

    The canonical ten-slot layout is
    ``language|corpus|speaker|age|sex|group|SES|role|slot8|custom``;
    corpus releases differ in where (or whether) they stash the MMSE
    score, so the slot indices are configurable.
    """
    speaker_slot: int = 2
    age_slot: int = 3
    sex_slot: int = 4
    group_slot: int = 5
    mmse_slot: int = 8


DEFAULT_ID_LAYOUT = IdFieldLayout()


@dataclass(frozen=True)
class TranscriptMeta:
    transcript_id: str
    age: Optional[int] = None
    sex: str = "unknown"
    diagnosis: str = "Unknown"
    mmse: Optional[int] = None

    def __post_init__(self):
        if self.sex not in SEX_VALUES:
            raise ValueError(f"bad sex value: {self.sex!r}")
        if self.diagnosis not in DIAGNOSIS_VALUES:
            raise ValueError(f"bad diagnosis value: {self.diagnosis!r}")
        if self.mmse is not None and not 0 <= self.mmse <= 30:
            raise ValueError(f"mmse out of range: {self.mmse}")
        if self.age is not None and not 1 <= self.age <= 120:
            raise ValueError(f"age out of range: {self.age}")


@dataclass(frozen=True)
class Utterance:
    speaker: str
    text: str
    index: int
    interval: Optional[tuple[int, int]] = None

    def __post_init__(self):
        if self.interval is not None and self.interval[1] < self.interval[0]:
            raise ValueError(f"interval ends before it starts: {self.interval}")
        if not self.text:
            raise ValueError("empty utterance text")


@dataclass(frozen=True)
class Transcript:
    meta: TranscriptMeta
    utterances: tuple[Utterance, ...]

    def speaker_utterances(self, speaker: str) -> tuple[Utterance, ...]:
        return tuple(u for u in self.utterances if u.speaker == speaker)


def clean_utterance(raw_tier_text: str) -> tuple[str, Optional[tuple[int, int]]]:
    """Clean one main-tier body; return (text, optional (start_ms, end_ms)).

    All time codes are stripped and the last one becomes the interval.
    The characters ``[ ] < >`` (and stray \\x15) are deleted, whitespace
    runs collapse to single spaces, and everything else -- discourse
    markers included -- passes through verbatim.  The result may be empty;
    callers decide what to do with empty utterances.
    """
    interval = None
    for match in _TIME_CODE.finditer(raw_tier_text):
        interval = (int(match.group(1)), int(match.group(2)))
    text = _TIME_CODE.sub(" ", raw_tier_text)
    text = _REMOVED_CHARS.sub("", text)
    # Removing markup characters can expose new bullet-delimited digit runs
    # ("•12_34<•" becomes "•12_34•"); strip to a fixpoint so cleaning is
    # idempotent.  Only the codes in the raw text count as the alignment.
    while _TIME_CODE.search(text):
        text = _TIME_CODE.sub(" ", text)
    text = _WHITESPACE.sub(" ", text).strip()
    if interval is not None and interval[1] < interval[0]:
        warnings.warn(
            f"time code ends before it starts, dropped: {interval}", ChatParseWarning,
            stacklevel=2,
        )
        interval = None
    return text, interval


def _parse_age(raw: str) -> Optional[int]:
    # CHAT ages look like "62;", "62;06.", or occasionally a bare number.
    match = re.match(r"^(\d+)", raw.strip())
    if not match:
        return None
    years = int(match.group(1))
    if not 1 <= years <= 120:
        return None
    return years


def parse_id_header(line: str, layout: IdFieldLayout = DEFAULT_ID_LAYOUT) -> Optional[dict]:
    """Extract participant metadata from an ``@ID:`` header line.

    Returns a partial-meta dict (possibly empty) for the participant row,
    or None when the row describes some other speaker.  Unparseable age or
    MMSE values are left out with a warning rather than failing the parse.
    """
    body = line.split(":", 1)[1] if ":" in line else ""
    slots = [s.strip() for s in body.strip().rstrip(".").split("|")]
    if len(slots) <= layout.speaker_slot:
        return None
    if slots[layout.speaker_slot].upper() != SPEAKER_PAR:
        return None

    meta: dict = {}
    if layout.age_slot < len(slots) and slots[layout.age_slot]:
        age = _parse_age(slots[layout.age_slot])
        if age is None:
            warnings.warn(
                f"unparseable age field {slots[layout.age_slot]!r} in @ID header",
                ChatParseWarning, stacklevel=2,
            )
        else:
            meta["age"] = age
    if layout.sex_slot < len(slots):
        sex = slots[layout.sex_slot].lower()
        if sex in ("male", "female"):
            meta["sex"] = sex
    if layout.group_slot < len(slots):
        group = slots[layout.group_slot].lower()
        if group == "probablead":
            meta["diagnosis"] = "AD"
        elif group == "control":
            meta["diagnosis"] = "Control"
    if layout.mmse_slot < len(slots) and slots[layout.mmse_slot]:
        raw = slots[layout.mmse_slot]
        try:
            mmse = int(raw)
        except ValueError:
            mmse = -1
        if 0 <= mmse <= 30:
            meta["mmse"] = mmse
        else:
            warnings.warn(
                f"unparseable MMSE field {raw!r} in @ID header",
                ChatParseWarning, stacklevel=2,
            )
    return meta


def _logical_lines(raw: str) -> Iterable[str]:
    """Join tab-indented continuation lines onto their tier."""
    current: Optional[str] = None
    for line in raw.splitlines():
        if line.startswith("\t") and current is not None:
            current = current + " " + line.strip()
            continue
        if current is not None:
            yield current
        current = line
    if current is not None:
        yield current


def parse_transcript(
    raw: str,
    layout: IdFieldLayout = DEFAULT_ID_LAYOUT,
    transcript_id: str = "",
    lenient_headers: bool = False,
) -> Transcript:
    """Parse full CHAT file text into a Transcript.

    Keeps every ``*PAR:`` and ``*INV:`` tier in file order (cleaned via
    ``clean_utterance``); ignores dependent tiers, unknown speakers, and
    non-``@ID`` headers.  Raises MalformedHeader when the @Begin...@End
    envelope is missing (unless ``lenient_headers``, which downgrades it to
    a warning) and NoParticipantSpeech when no participant utterance
    survives cleaning.
    """
    lines = list(_logical_lines(raw))
    stripped = [ln.strip() for ln in lines]
    if "@Begin" not in stripped or "@End" not in stripped:
        if not lenient_headers:
            raise MalformedHeader(
                f"{transcript_id or '<text>'}: missing @Begin/@End envelope"
            )
        warnings.warn(
            f"{transcript_id or '<text>'}: missing @Begin/@End envelope, parsing anyway",
            ChatParseWarning, stacklevel=2,
        )

    meta_fields: dict = {}
    utterances: list[Utterance] = []
    saw_par_tier = False
    for line in lines:
        if line.startswith("@"):
            if line.startswith("@ID"):
                found = parse_id_header(line, layout)
                if found:
                    meta_fields.update(found)
            continue
        if _DEPENDENT_TIER.match(line):
            continue
        tier = _MAIN_TIER.match(line)
        if not tier:
            continue
        speaker = tier.group(1).upper()
        if speaker not in (SPEAKER_PAR, SPEAKER_INV):
            continue
        if speaker == SPEAKER_PAR:
            saw_par_tier = True
        body = line[tier.end():]
        text, interval = clean_utterance(body)
        if not text:
            warnings.warn(
                f"{transcript_id or '<text>'}: {speaker} utterance cleaned to empty text, dropped",
                ChatParseWarning, stacklevel=2,
            )
            continue
        utterances.append(
            Utterance(speaker=speaker, text=text, index=len(utterances), interval=interval)
        )

    if not any(u.speaker == SPEAKER_PAR for u in utterances):
        detail = "no participant tiers" if not saw_par_tier else "participant tiers all cleaned to empty"
        raise NoParticipantSpeech(f"{transcript_id or '<text>'}: {detail}")

    meta = TranscriptMeta(transcript_id=transcript_id, **meta_fields)
    return Transcript(meta=meta, utterances=tuple(utterances))


def parse_file(
    path: str,
    layout: IdFieldLayout = DEFAULT_ID_LAYOUT,
    lenient_headers: bool = False,
) -> Transcript:
    """Parse one ``.cha`` file; the transcript id is the file stem."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read()
    stem = os.path.splitext(os.path.basename(path))[0]
    return parse_transcript(raw, layout=layout, transcript_id=stem,
                            lenient_headers=lenient_headers)


def parse_directory(
    directory: str,
    layout: IdFieldLayout = DEFAULT_ID_LAYOUT,
    lenient_headers: bool = False,
) -> list[Transcript]:
    """Parse every ``.cha`` file under a directory, sorted by filename.

    Files that fail with MalformedHeader or NoParticipantSpeech are skipped
    with a warning so one bad file cannot sink a corpus run.
    """
    transcripts = []
    names = sorted(n for n in os.listdir(directory) if n.endswith(".cha"))
    for name in names:
        path = os.path.join(directory, name)
        try:
            transcripts.append(parse_file(path, layout=layout, lenient_headers=lenient_headers))
        except (MalformedHeader, NoParticipantSpeech) as exc:
            warnings.warn(f"skipping {name}: {exc}", ChatParseWarning, stacklevel=2)
    return transcripts


# --- JSON-lines round trip -------------------------------------------------
# Record keys (in order): id, age, sex, diagnosis, mmse,
# utterances[{speaker,text,start_ms,end_ms}].

def transcript_to_record(transcript: Transcript) -> dict:
    meta = transcript.meta
    return {
        "id": meta.transcript_id,
        "age": meta.age,
        "sex": meta.sex,
        "diagnosis": meta.diagnosis,
        "mmse": meta.mmse,
        "utterances": [
            {
                "speaker": u.speaker,
                "text": u.text,
                "start_ms": u.interval[0] if u.interval else None,
                "end_ms": u.interval[1] if u.interval else None,
            }
            for u in transcript.utterances
        ],
    }


def transcript_from_record(record: dict) -> Transcript:
    meta = TranscriptMeta(
        transcript_id=record["id"],
        age=record.get("age"),
        sex=record.get("sex") or "unknown",
        diagnosis=record.get("diagnosis") or "Unknown",
        mmse=record.get("mmse"),
    )
    utterances = []
    for i, u in enumerate(record["utterances"]):
        interval = None
        if u.get("start_ms") is not None and u.get("end_ms") is not None:
            interval = (u["start_ms"], u["end_ms"])
        utterances.append(Utterance(speaker=u["speaker"], text=u["text"], index=i, interval=interval))
    return Transcript(meta=meta, utterances=tuple(utterances))
