import os
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adscreen._io import dumps_record, read_jsonl
from adscreen.chat_parser import (DEFAULT_ID_LAYOUT, IdFieldLayout, clean_utterance,
                                  parse_directory, parse_file, parse_id_header,
                                  parse_transcript, transcript_from_record,
                                  transcript_to_record)
from adscreen.errors import ChatParseWarning, MalformedHeader, NoParticipantSpeech

FORBIDDEN = set("[]<>\t\n\x15")


def wrap_cha(*tiers, id_line="@ID:\teng|c|PAR|62;|female|ProbableAD|||13||"):
    lines = ["@Begin", "@Languages:\teng", id_line, *tiers, "@End"]
    return "\n".join(lines) + "\n"


class TestCleanUtterance:
    def test_time_code_suffix_nak_form(self):
        text, interval = clean_utterance(
            "well um the water (...) overflows . \x151200_5300\x15")
        assert text == "well um the water (...) overflows ."
        assert interval == (1200, 5300)

    def test_plain_text_untouched(self):
        assert clean_utterance("ok .") == ("ok .", None)

    def test_whitespace_collapse(self):
        assert clean_utterance("  a\t b  ") == ("a b", None)

    def test_bracket_and_angle_removal_keeps_inner_symbols(self):
        text, interval = clean_utterance(
            "and then <the stool> [//] the chair •1500_4200•")
        assert text == "and then the stool // the chair"
        assert interval == (1500, 4200)

    def test_last_time_code_wins(self):
        text, interval = clean_utterance("a \x151_2\x15 b \x153_4\x15")
        assert text == "a b"
        assert interval == (3, 4)

    def test_markers_survive(self):
        raw = "um ah +... &=laughs (...) (be)cause"
        text, _ = clean_utterance(raw)
        for marker in ("um", "ah", "+...", "&=laughs", "(...)", "(be)cause"):
            assert marker in text

    def test_idempotent_on_examples(self):
        for raw in ["<a> [x] b \x151_2\x15", "•12_34<•", "a [//] b", "  x  "]:
            once, _ = clean_utterance(raw)
            twice, _ = clean_utterance(once)
            assert twice == once

    @given(st.text(alphabet="ab um<>[]\x15•_0123456789(+.)&=\t\n", max_size=60))
    @settings(max_examples=300, deadline=None)
    def test_idempotence_property(self, raw):
        once, _ = clean_utterance(raw)
        twice, _ = clean_utterance(once)
        assert twice == once
        assert not (set(once) & FORBIDDEN)


class TestParseIdHeader:
    def test_full_header(self):
        meta = parse_id_header("@ID: eng|corp|PAR|62;|female|ProbableAD|||13||")
        assert meta == {"age": 62, "sex": "female", "diagnosis": "AD", "mmse": 13}

    def test_investigator_row_contributes_nothing(self):
        assert parse_id_header("@ID: eng|corp|INV|||||Investigator|||") is None

    def test_control_without_mmse(self):
        meta = parse_id_header("@ID: eng|corp|PAR|62;|female|Control||||")
        assert meta == {"age": 62, "sex": "female", "diagnosis": "Control"}

    def test_unparseable_age_warns_and_skips(self):
        with pytest.warns(ChatParseWarning):
            meta = parse_id_header("@ID: eng|corp|PAR|old;|female|Control||||")
        assert "age" not in meta

    def test_unparseable_mmse_warns_and_skips(self):
        with pytest.warns(ChatParseWarning):
            meta = parse_id_header("@ID: eng|corp|PAR|62;|female|Control|||99||")
        assert "mmse" not in meta
        with pytest.warns(ChatParseWarning):
            meta = parse_id_header("@ID: eng|corp|PAR|62;|female|Control|||abc||")
        assert "mmse" not in meta

    def test_custom_layout(self):
        layout = IdFieldLayout(age_slot=4, sex_slot=3, group_slot=5, mmse_slot=6)
        meta = parse_id_header("@ID: eng|corp|PAR|male|71;|control|22|||", layout)
        assert meta == {"age": 71, "sex": "male", "diagnosis": "Control", "mmse": 22}

    def test_unknown_group_maps_to_unknown(self):
        meta = parse_id_header("@ID: eng|corp|PAR|62;|female|Mystery||||")
        assert "diagnosis" not in meta  # stays at the Unknown default


class TestParseTranscript:
    def test_two_tier_order(self):
        raw = wrap_cha("*PAR:\tthe boy fell .", "*INV:\tmhm .")
        t = parse_transcript(raw, transcript_id="x")
        assert [u.speaker for u in t.utterances] == ["PAR", "INV"]
        assert [u.index for u in t.utterances] == [0, 1]

    def test_dependent_tiers_only_is_no_participant_speech(self):
        raw = wrap_cha("%mor:\tn|boy v|fall")
        with pytest.raises(NoParticipantSpeech):
            parse_transcript(raw, transcript_id="x")

    def test_cleaning_applied_to_tiers(self):
        raw = wrap_cha("*PAR:\tand then <the stool> [//] the chair •1500_4200•")
        t = parse_transcript(raw, transcript_id="x")
        assert t.utterances[0].text == "and then the stool // the chair"
        assert t.utterances[0].interval == (1500, 4200)

    def test_missing_envelope_strict_and_lenient(self):
        raw = "@Languages:\teng\n*PAR:\thello .\n"
        with pytest.raises(MalformedHeader):
            parse_transcript(raw, transcript_id="x")
        with pytest.warns(ChatParseWarning):
            t = parse_transcript(raw, transcript_id="x", lenient_headers=True)
        assert len(t.utterances) == 1

    def test_unknown_speaker_ignored(self):
        raw = wrap_cha("*PAR:\tone .", "*BRO:\ttwo .", "*PAR:\tthree .")
        t = parse_transcript(raw, transcript_id="x")
        assert [u.text for u in t.utterances] == ["one .", "three ."]

    def test_empty_utterance_dropped_with_warning(self):
        raw = wrap_cha("*PAR:\tok .", "*PAR:\t<> []")
        with pytest.warns(ChatParseWarning):
            t = parse_transcript(raw, transcript_id="x")
        assert len(t.utterances) == 1

    def test_continuation_lines_joined(self):
        raw = wrap_cha("*PAR:\tthe boy is", "\treaching up .")
        t = parse_transcript(raw, transcript_id="x")
        assert t.utterances[0].text == "the boy is reaching up ."

    def test_par_tiers_that_all_clean_to_empty(self):
        raw = wrap_cha("*PAR:\t<>", "*INV:\thello .")
        with pytest.warns(ChatParseWarning):
            with pytest.raises(NoParticipantSpeech):
                parse_transcript(raw, transcript_id="x")


class TestFixtures:
    def test_directory_parse_matches_golden_bytes(self, fixtures_dir):
        with pytest.warns(ChatParseWarning):
            transcripts = parse_directory(fixtures_dir)
        produced = "".join(
            dumps_record(transcript_to_record(t)) + "\n" for t in transcripts)
        with open(os.path.join(fixtures_dir, "golden_transcripts.jsonl"),
                  encoding="utf-8") as fh:
            assert produced == fh.read()

    def test_fixture_count_and_skips(self, fixtures_dir):
        with pytest.warns(ChatParseWarning):
            transcripts = parse_directory(fixtures_dir)
        assert len(transcripts) == 4

    def test_lenient_mode_recovers_malformed_header(self, fixtures_dir):
        path = os.path.join(fixtures_dir, "malformed_header.cha")
        with pytest.warns(ChatParseWarning):
            t = parse_file(path, lenient_headers=True)
        assert t.meta.transcript_id == "malformed_header"
        assert len(t.utterances) == 2

    def test_round_trip_through_records(self, fixtures_dir):
        with pytest.warns(ChatParseWarning):
            transcripts = parse_directory(fixtures_dir)
        for t in transcripts:
            back = transcript_from_record(transcript_to_record(t))
            assert back == t


class TestProperties:
    def test_marker_preservation_fuzz(self):
        rng = random.Random(7)
        markers = ["um", "&=laughs", "+...", "(...)"]
        fillers = ["the", "boy", "a1", "x"]
        for _ in range(500):
            words = [rng.choice(markers + fillers) for _ in range(rng.randint(1, 8))]
            raw = " ".join(words)
            text, _ = clean_utterance(raw)
            for marker in set(words) & set(markers):
                assert marker in text

    def test_order_preservation(self):
        tiers = [f"*PAR:\tword{i} ." for i in range(20)]
        t = parse_transcript(wrap_cha(*tiers), transcript_id="x")
        assert [u.text for u in t.utterances] == [f"word{i} ." for i in range(20)]
        assert list(u.index for u in t.utterances) == list(range(20))
