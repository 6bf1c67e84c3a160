import os

import pytest

from adscreen.chat_parser import Transcript, TranscriptMeta, Utterance

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
FIXTURES_DIR = os.path.join(REPO_ROOT, "fixtures")


@pytest.fixture(scope="session")
def fixtures_dir() -> str:
    return FIXTURES_DIR


def make_transcript(tid="t1", diagnosis="AD", mmse=20, age=70, sex="female",
                    utterances=None) -> Transcript:
    """Build a transcript from (speaker, text[, interval]) tuples."""
    utterances = utterances or [("PAR", "the boy fell .")]
    built = []
    for i, entry in enumerate(utterances):
        speaker, text = entry[0], entry[1]
        interval = entry[2] if len(entry) > 2 else None
        built.append(Utterance(speaker=speaker, text=text, index=i, interval=interval))
    meta = TranscriptMeta(transcript_id=tid, age=age, sex=sex,
                          diagnosis=diagnosis, mmse=mmse)
    return Transcript(meta=meta, utterances=tuple(built))
