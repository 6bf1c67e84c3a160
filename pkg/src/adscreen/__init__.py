"""Text-only dementia screening pipeline over CHAT speech transcripts."""

__version__ = "0.1.0"

from .chat_parser import (IdFieldLayout, Transcript, TranscriptMeta, Utterance,
                          clean_utterance, parse_directory, parse_file,
                          parse_id_header, parse_transcript)
from .datasets import (DocumentRecord, SegmentRecord, TemporalFeatures,
                       TimeAggregates, build_transcript_dataset,
                       build_utterance_dataset, build_variant)
from .tfidf import TfidfModel, TfidfParams, fit_tfidf, transform_tfidf
from .sparse import SparseMatrix
from .svm import (SvmModel, SvmParams, fit_platt, kernel_eval, predict_decision,
                  predict_proba, predict_svr, train_svc, train_svr)
from .gbdt import GbdtModel, GbdtParams, feature_importance, predict_gbdt, train_gbdt
from .crf import (CrfModel, CrfParams, FeatureSequence, crf_train,
                  forward_backward, transcript_prediction, viterbi_decode)
from .linear import EmbeddingMatrix, LinearModel, load_embeddings, train_lasso, train_logistic
from .evaluation import (ConfusionMatrix, ExponentialAxis, FoldSpec, GridSpec,
                         MetricsReport, classification_metrics, grid_search,
                         grouped_folds, make_folds, rmse, sample_exponential,
                         stratified_folds)
from .experiment import comparison_report, run_experiment
