"""Walk through CHAT parsing: cleaning rules, metadata, and the JSONL format.

Run from the repository root:  python demos/01_parse_and_clean.py
"""
import os
import warnings

from adscreen import clean_utterance, parse_directory
from adscreen.chat_parser import transcript_to_record
from adscreen._io import dumps_record

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "fixtures")

print("== cleaning one tier at a time ==")
examples = [
    "well um the water (...) overflows . \x151200_5300\x15",
    "and then <the stool> [//] the chair •1500_4200•",
    "&=laughs that's all I can (be)cause think of .",
    "  spaced\tout \n text  ",
]
for raw in examples:
    text, interval = clean_utterance(raw)
    print(f"  raw:      {raw!r}")
    print(f"  cleaned:  {text!r}   interval={interval}")
    print()

print("== parsing the shipped fixtures ==")
with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    transcripts = parse_directory(FIXTURES)
for w in caught:
    print(f"  warning: {w.message}")
print(f"  parsed {len(transcripts)} of 6 fixture files "
      "(one has no participant speech, one is missing its header envelope)")

print()
print("== one transcript as a JSONL record ==")
record = transcript_to_record(transcripts[0])
print("  " + dumps_record(record)[:160] + " ...")
meta = transcripts[0].meta
print(f"  id={meta.transcript_id} age={meta.age} sex={meta.sex} "
      f"diagnosis={meta.diagnosis} mmse={meta.mmse}")
