# %% [markdown]
# # Classifying by language-model surprise
#
# One small language model is trained per class. A review goes to the class
# whose model predicts its tokens best, i.e. the smallest mean negative
# log-likelihood.

# %%
import math

import numpy as np

from lstmsent import (
    LmConfig,
    TrainConfig,
    build_vocab,
    classify_batch,
    classify_by_min_error,
    clean_text,
    encode,
    encode_texts,
    split_dataset,
    synth_corpus,
    tokenize,
    train_class_lms,
)

ds = synth_corpus(seed=5, n=900)
train_recs, test_recs = split_dataset(ds.records, 0.7, seed=0)
vocab = build_vocab([tokenize(clean_text(r.text)) for r in train_recs], 20000)
config = LmConfig(vocab_size=len(vocab), embed_dim=16, hidden=32, seq_len=24)
print("uniform baseline NLL:", round(math.log(config.vocab_size), 4))

# %%
corpora = {}
for r in train_recs:
    corpora.setdefault(r.label, []).append(r.text)
corpora = {lab: encode_texts(texts, vocab, config.seq_len) for lab, texts in corpora.items()}
ensemble = train_class_lms(corpora, config, TrainConfig(epochs=5, seed=0), vocab)

# %%
pred, errors = classify_batch(ensemble, encode_texts([r.text for r in test_recs], vocab, config.seq_len))
print("held-out accuracy:", np.mean([p == r.label for p, r in zip(pred, test_recs)]))

# %% [markdown]
# Per-class errors for a single review.

# %%
review = "The screen is okay, fairly average for the price."
label, errs = classify_by_min_error(ensemble, encode(tokenize(clean_text(review)), vocab, config.seq_len))
print(label.value, {k.value: round(v, 3) for k, v in errs.items()})
