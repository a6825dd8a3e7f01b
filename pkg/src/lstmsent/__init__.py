"""From-scratch LSTM sentiment analysis for product reviews.

Embedding -> LSTM(100) -> dense sigmoid classifier with exact BPTT, a
per-class language-model ensemble, probability bands for review types, and
the text/data plumbing around them. Pure numpy.
"""

from .classify import ReviewType, SentimentLabel, one_hot, review_type_of, sentiment_of
from .data import Dataset, ReviewRecord, label_from_rating, load_reviews, synth_corpus, to_arrays
from .lm_ensemble import (
    ClassLm,
    EnsembleModel,
    LmConfig,
    classify_batch,
    classify_by_min_error,
    sequence_avg_nll,
    train_class_lms,
)
from .model import (
    ModelConfig,
    backward,
    forward,
    grad_check,
    init_params,
    load_weights,
    lstm_step,
    param_count,
    save_weights,
)
from .numerics import Rng64, matmul, sigmoid, softmax, tanh_act
from .textproc import EncodedSequence, Vocab, build_vocab, clean_text, encode, encode_texts, tokenize
from .training import History, TrainConfig, adam_step, evaluate, export_curves, split_dataset, train

__version__ = "0.1.0"
