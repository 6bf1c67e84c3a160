"""TF-IDF + SVM baseline: vectorize, cross-validate, inspect the grid.

Run from the repository root:  python demos/03_tfidf_svm_baseline.py
"""
import numpy as np

from adscreen.chat_parser import parse_transcript
from adscreen.datasets import build_variant
from adscreen.evaluation import GridSpec
from adscreen.experiment import cross_validate, folds_for
from adscreen.reference import OPTIMAL_CONFIGS, SVM_GRID_AXES
from adscreen.synthetic import SyntheticSpec, generate_corpus
from adscreen.tfidf import TfidfParams, fit_transform_tfidf

files = generate_corpus(SyntheticSpec(n_transcripts=40, seed=8))
transcripts = [parse_transcript(text, transcript_id=name[:-4]) for name, text in files]
docs = build_variant(transcripts, "PAR")

print("== the vectorizer ==")
model, X = fit_transform_tfidf([d.text for d in docs],
                               TfidfParams(max_features=400, sublinear_tf=True))
print(f"  vocabulary {len(model.vocabulary)} terms, matrix {X.shape}, nnz {X.nnz}")
um_col = model.vocabulary.get("um")
print(f"  idf('um') = {model.idf[um_col]:.3f} (fillers survive tokenization)")

print()
print("== the searched hyperparameter space ==")
grid = GridSpec(dict(SVM_GRID_AXES))
print(f"  full SVM grid: {len(grid.configurations())} configurations")
print(f"  published optimum: {OPTIMAL_CONFIGS['svm']}")

print()
print("== 10-fold cross-validation at a fixed configuration ==")
config = {"max_features": 300, "sublinear_tf": True, "kernel": "rbf", "C": 1.0}
folds = folds_for(docs, "PAR", 10, seed=1)
report = cross_validate(docs, "svm", "classify", config, folds, seed=0)
print(f"  accuracy {report.accuracy:.3f}  precision {report.precision:.3f}  "
      f"recall {report.recall:.3f}  f1 {report.f1:.3f}")

print()
print("== MMSE regression with the epsilon-SVR head ==")
config_r = {"max_features": 300, "sublinear_tf": False, "kernel": "rbf",
            "C": 100.0, "gamma": 1.0, "epsilon": 0.25}
report_r = cross_validate(docs, "svm", "regress", config_r, folds, seed=0)
print(f"  rmse {report_r.rmse:.3f} on the 0-30 MMSE scale")
