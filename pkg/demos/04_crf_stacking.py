"""Utterance-level stacking: base-model probabilities into a linear-chain CRF.

The base classifier scores each utterance; the per-transcript probability
sequence (plus a bias term, and scaled timing features for the +T variant)
feeds the CRF, and the label of the final decoded state becomes the
transcript prediction.

Run from the repository root:  python demos/04_crf_stacking.py
"""
import numpy as np

from adscreen.chat_parser import parse_transcript
from adscreen.datasets import build_variant
from adscreen.pipelines import CrfStackPipeline
from adscreen.synthetic import SyntheticSpec, generate_corpus

files = generate_corpus(SyntheticSpec(n_transcripts=30, seed=14))
transcripts = [parse_transcript(text, transcript_id=name[:-4]) for name, text in files]
gold = {t.meta.transcript_id: t.meta.diagnosis for t in transcripts}

train_ids = {t.meta.transcript_id for t in transcripts[:22]}
segments = build_variant(transcripts, "PAR_SPLT_T")
train_segments = [s for s in segments if s.transcript_id in train_ids]
test_segments = [s for s in segments if s.transcript_id not in train_ids]
print(f"{len(train_segments)} training utterances from {len(train_ids)} transcripts; "
      f"{len(test_segments)} held-out utterances")

pipe = CrfStackPipeline("svm", {"max_features": 250, "kernel": "rbf", "C": 1.0,
                                "c1": 0.01, "c2": 0.01}, seed=2)
pipe.fit(train_segments)
print(f"CRF observation features: {pipe.crf_model.feature_names}")
print(f"transition weights:\n{np.round(pipe.crf_model.transition_weights, 3)}")

print()
print("== held-out transcript predictions (final Viterbi state) ==")
predictions = pipe.predict_labels(test_segments)
correct = 0
for tid in sorted(predictions):
    flag = "ok " if predictions[tid] == gold[tid] else "MISS"
    correct += predictions[tid] == gold[tid]
    print(f"  {flag} {tid}: predicted {predictions[tid]:<8} gold {gold[tid]}")
print(f"held-out accuracy: {correct}/{len(predictions)}")
