"""Linear heads over a transcript embedding matrix (CSV + sidecar format).

Embeddings come from the separate exporter (see exporter/); here a synthetic
matrix with planted signal stands in so the demo runs offline.  The heads
are the same either way: logistic regression for the diagnosis, LASSO for
the MMSE score.

Run from the repository root:  python demos/05_embedding_heads.py
"""
import json
import os
import tempfile

import numpy as np

from adscreen.chat_parser import parse_transcript
from adscreen.datasets import build_variant
from adscreen.linear import load_embeddings, sidecar_path
from adscreen.pipelines import EmbeddingHeadPipeline
from adscreen.synthetic import SyntheticSpec, generate_corpus

files = generate_corpus(SyntheticSpec(n_transcripts=36, seed=23))
transcripts = [parse_transcript(text, transcript_id=name[:-4]) for name, text in files]
docs = build_variant(transcripts, "PAR")

# synthesize an embedding file in the documented format
rng = np.random.default_rng(0)
H = 24
values = rng.normal(size=(len(docs), H))
for i, d in enumerate(docs):
    values[i, 0] = (1.0 if d.label == "AD" else -1.0) + 0.2 * rng.normal()
    values[i, 3] = d.mmse / 30.0 + 0.02 * rng.normal()

workdir = tempfile.mkdtemp(prefix="embed-demo-")
csv_path = os.path.join(workdir, "emb.csv")
with open(csv_path, "w", encoding="utf-8") as fh:
    fh.write("id," + ",".join(f"e{i}" for i in range(H)) + "\n")
    for d, row in zip(docs, values):
        fh.write(d.transcript_id + "," + ",".join(repr(float(v)) for v in row) + "\n")
with open(sidecar_path(csv_path), "w", encoding="utf-8") as fh:
    json.dump({"model_name": "demo-synthetic", "pooling": "mean",
               "layer": "last", "H": H}, fh)

embeddings = load_embeddings(csv_path, expected_ids=[d.transcript_id for d in docs])
print(f"loaded embedding matrix N={len(embeddings.ids)} H={embeddings.hidden_size} "
      f"({embeddings.model_name}, {embeddings.pooling} pooling)")

train, test = docs[:27], docs[27:]

print()
print("== logistic head for the diagnosis ==")
clf = EmbeddingHeadPipeline("logistic", embeddings, {"regularization": 1e-3}).fit(train)
predicted = clf.predict_labels(test)
hits = sum(p == d.label for p, d in zip(predicted, test))
print(f"  held-out accuracy {hits}/{len(test)}")
print(f"  nonzero weights: {int(np.sum(clf.model.weights != 0))}/{H}")

print()
print("== LASSO head for the MMSE score ==")
reg = EmbeddingHeadPipeline("lasso", embeddings, {"regularization": 1e-3}).fit(train)
values_hat = reg.predict_values(test)
golds = np.asarray([float(d.mmse) for d in test])
print(f"  held-out rmse {np.sqrt(np.mean((values_hat - golds) ** 2)):.2f}")
print(f"  sparsity: {int(np.sum(reg.model.weights != 0))}/{H} active coordinates")
