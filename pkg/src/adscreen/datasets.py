"""Dataset variants built from parsed transcripts.

Two granularities exist.  Transcript-level variants treat each transcript
as one document: participant speech only (PAR), participant+interviewer
interleaved in file order (PAR_INV), or participant speech plus per-
transcript timing aggregates (PAR_TIME).  Utterance-level variants
(PAR_SPLT family) make each participant utterance its own row, replicate
the transcript's label and MMSE to every row, and keep the source
transcript id as the grouping key that fold construction later uses to
rule out leakage.  Optional per-utterance timing features (_T) and
demographics (_T_D) extend the split variants.

Timing is stored as raw milliseconds; any scaling is a fold-local fit that
belongs to the evaluation harness, not here.  Utterances without a time
interval get zero-imputed features plus a missingness flag so sequences
stay aligned.
"""
from __future__ import annotations

import statistics
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

from .chat_parser import SPEAKER_PAR, Transcript
from .errors import DatasetWarning

VARIANTS = ("PAR", "PAR_INV", "PAR_TIME", "PAR_SPLT", "PAR_SPLT_T", "PAR_SPLT_T_D")
TRANSCRIPT_VARIANTS = ("PAR", "PAR_INV", "PAR_TIME")
UTTERANCE_VARIANTS = ("PAR_SPLT", "PAR_SPLT_T", "PAR_SPLT_T_D")


@dataclass(frozen=True)
class TimeAggregates:
    """Per-transcript sentence-time summary, replicated once per document."""
    mean_dur_ms: float
    min_dur_ms: float
    max_dur_ms: float
    median_dur_ms: float
    mean_gap_ms: float

    def as_vector(self) -> list[float]:
        return [self.mean_dur_ms, self.min_dur_ms, self.max_dur_ms,
                self.median_dur_ms, self.mean_gap_ms]


@dataclass(frozen=True)
class TemporalFeatures:
    """Per-utterance timing plus replicated per-transcript aggregates.

    ``missing`` marks rows whose utterance had no time code; their fields
    are zero-imputed so downstream feature matrices keep a fixed width.
    """
    duration_ms: float
    gap_before_ms: float
    mean_dur_ms: float
    max_dur_ms: float
    min_dur_ms: float
    missing: bool = False

    def as_vector(self) -> list[float]:
        return [self.duration_ms, self.gap_before_ms, self.mean_dur_ms,
                self.max_dur_ms, self.min_dur_ms, 1.0 if self.missing else 0.0]


@dataclass(frozen=True)
class DocumentRecord:
    transcript_id: str
    text: str
    label: str
    mmse: Optional[int] = None
    aggregates: Optional[TimeAggregates] = None


@dataclass(frozen=True)
class SegmentRecord:
    transcript_id: str
    utterance_index: int
    text: str
    label: str
    mmse: Optional[int] = None
    temporal: Optional[TemporalFeatures] = None
    demographics: Optional[tuple[float, float]] = None  # (age_years, sex_indicator)


def _labelled(transcripts: Sequence[Transcript]) -> list[Transcript]:
    kept = []
    for t in transcripts:
        if t.meta.diagnosis not in ("AD", "Control"):
            warnings.warn(
                f"{t.meta.transcript_id}: diagnosis {t.meta.diagnosis!r}, record skipped",
                DatasetWarning, stacklevel=3,
            )
            continue
        kept.append(t)
    return kept


def _par_intervals(transcript: Transcript) -> list[tuple[int, int]]:
    return [u.interval for u in transcript.speaker_utterances(SPEAKER_PAR)
            if u.interval is not None]


def compute_time_aggregates(transcript: Transcript) -> Optional[TimeAggregates]:
    """Summarize participant sentence times; None when no utterance is timed."""
    intervals = _par_intervals(transcript)
    if not intervals:
        return None
    durations = [float(end - start) for start, end in intervals]
    gaps = [float(intervals[i][0] - intervals[i - 1][1]) for i in range(1, len(intervals))]
    return TimeAggregates(
        mean_dur_ms=statistics.fmean(durations),
        min_dur_ms=min(durations),
        max_dur_ms=max(durations),
        median_dur_ms=float(statistics.median(durations)),
        mean_gap_ms=statistics.fmean(gaps) if gaps else 0.0,
    )


def build_transcript_dataset(
    transcripts: Sequence[Transcript],
    include_interviewer: bool = False,
    include_time_aggregates: bool = False,
) -> list[DocumentRecord]:
    """Concatenate each transcript into one DocumentRecord.

    Participant-only by default; ``include_interviewer`` interleaves both
    speakers in file order.  Unlabelled transcripts are skipped with a
    warning.
    """
    records = []
    for t in _labelled(transcripts):
        if include_interviewer:
            parts = [u.text for u in t.utterances]
        else:
            parts = [u.text for u in t.utterances if u.speaker == SPEAKER_PAR]
        aggregates = compute_time_aggregates(t) if include_time_aggregates else None
        records.append(DocumentRecord(
            transcript_id=t.meta.transcript_id,
            text=" ".join(parts),
            label=t.meta.diagnosis,
            mmse=t.meta.mmse,
            aggregates=aggregates,
        ))
    return records


def _temporal_features(transcript: Transcript) -> list[TemporalFeatures]:
    par = transcript.speaker_utterances(SPEAKER_PAR)
    timed = [u.interval for u in par if u.interval is not None]
    if timed:
        durations = [float(end - start) for start, end in timed]
        mean_dur = statistics.fmean(durations)
        max_dur = max(durations)
        min_dur = min(durations)
    else:
        mean_dur = max_dur = min_dur = 0.0

    features = []
    prev_end: Optional[int] = None
    for u in par:
        if u.interval is None:
            features.append(TemporalFeatures(0.0, 0.0, mean_dur, max_dur, min_dur, missing=True))
            continue
        start, end = u.interval
        gap = float(start - prev_end) if prev_end is not None else 0.0
        features.append(TemporalFeatures(
            duration_ms=float(end - start),
            gap_before_ms=gap,
            mean_dur_ms=mean_dur,
            max_dur_ms=max_dur,
            min_dur_ms=min_dur,
        ))
        prev_end = end
    return features


def build_utterance_dataset(
    transcripts: Sequence[Transcript],
    with_temporal: bool = False,
    with_demographics: bool = False,
) -> list[SegmentRecord]:
    """One SegmentRecord per participant utterance, ordered per transcript.

    Labels and MMSE replicate the source transcript's values exactly.
    Interviewer speech is deliberately excluded at this granularity.
    With demographics requested, transcripts of unknown sex are excluded
    (there is no honest indicator value for them).
    """
    records = []
    for t in _labelled(transcripts):
        demographics = None
        if with_demographics:
            if t.meta.sex == "unknown" or t.meta.age is None:
                warnings.warn(
                    f"{t.meta.transcript_id}: missing demographics, excluded from +D variant",
                    DatasetWarning, stacklevel=2,
                )
                continue
            demographics = (float(t.meta.age), 0.0 if t.meta.sex == "male" else 1.0)
        temporal = _temporal_features(t) if with_temporal else None
        for pos, u in enumerate(t.speaker_utterances(SPEAKER_PAR)):
            records.append(SegmentRecord(
                transcript_id=t.meta.transcript_id,
                utterance_index=u.index,
                text=u.text,
                label=t.meta.diagnosis,
                mmse=t.meta.mmse,
                temporal=temporal[pos] if temporal is not None else None,
                demographics=demographics,
            ))
    return records


def build_variant(transcripts: Sequence[Transcript], variant: str):
    """Dispatch a named dataset variant to the matching builder."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if variant == "PAR":
        return build_transcript_dataset(transcripts)
    if variant == "PAR_INV":
        return build_transcript_dataset(transcripts, include_interviewer=True)
    if variant == "PAR_TIME":
        return build_transcript_dataset(transcripts, include_time_aggregates=True)
    if variant == "PAR_SPLT":
        return build_utterance_dataset(transcripts)
    if variant == "PAR_SPLT_T":
        return build_utterance_dataset(transcripts, with_temporal=True)
    return build_utterance_dataset(transcripts, with_temporal=True, with_demographics=True)


# --- JSON-lines formats ------------------------------------------------------
# A dataset file starts with a header record {"variant": ..., "granularity":
# ..., "count": N} followed by one record per row.

def document_to_record(doc: DocumentRecord) -> dict:
    record = {
        "transcript_id": doc.transcript_id,
        "text": doc.text,
        "label": doc.label,
        "mmse": doc.mmse,
    }
    record["aggregates"] = (
        None if doc.aggregates is None else {
            "mean_dur_ms": doc.aggregates.mean_dur_ms,
            "min_dur_ms": doc.aggregates.min_dur_ms,
            "max_dur_ms": doc.aggregates.max_dur_ms,
            "median_dur_ms": doc.aggregates.median_dur_ms,
            "mean_gap_ms": doc.aggregates.mean_gap_ms,
        }
    )
    return record


def document_from_record(record: dict) -> DocumentRecord:
    aggregates = record.get("aggregates")
    return DocumentRecord(
        transcript_id=record["transcript_id"],
        text=record["text"],
        label=record["label"],
        mmse=record.get("mmse"),
        aggregates=None if aggregates is None else TimeAggregates(**aggregates),
    )


def segment_to_record(seg: SegmentRecord) -> dict:
    record = {
        "transcript_id": seg.transcript_id,
        "utterance_index": seg.utterance_index,
        "text": seg.text,
        "label": seg.label,
        "mmse": seg.mmse,
    }
    record["temporal"] = (
        None if seg.temporal is None else {
            "duration_ms": seg.temporal.duration_ms,
            "gap_before_ms": seg.temporal.gap_before_ms,
            "mean_dur_ms": seg.temporal.mean_dur_ms,
            "max_dur_ms": seg.temporal.max_dur_ms,
            "min_dur_ms": seg.temporal.min_dur_ms,
            "missing": seg.temporal.missing,
        }
    )
    record["demographics"] = (
        None if seg.demographics is None else
        {"age_years": seg.demographics[0], "sex_indicator": seg.demographics[1]}
    )
    return record


def segment_from_record(record: dict) -> SegmentRecord:
    temporal = record.get("temporal")
    demographics = record.get("demographics")
    return SegmentRecord(
        transcript_id=record["transcript_id"],
        utterance_index=record["utterance_index"],
        text=record["text"],
        label=record["label"],
        mmse=record.get("mmse"),
        temporal=None if temporal is None else TemporalFeatures(**temporal),
        demographics=None if demographics is None else
        (demographics["age_years"], demographics["sex_indicator"]),
    )


def dataset_to_records(variant: str, rows) -> list[dict]:
    header = {
        "variant": variant,
        "granularity": "utterance" if variant in UTTERANCE_VARIANTS else "transcript",
        "count": len(rows),
    }
    encode = segment_to_record if variant in UTTERANCE_VARIANTS else document_to_record
    return [header] + [encode(r) for r in rows]


def dataset_from_records(records: list[dict]) -> tuple[str, list]:
    if not records or "variant" not in records[0]:
        raise ValueError("dataset file must start with a variant header record")
    header = records[0]
    variant = header["variant"]
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r} in dataset header")
    decode = segment_from_record if variant in UTTERANCE_VARIANTS else document_from_record
    return variant, [decode(r) for r in records[1:]]
