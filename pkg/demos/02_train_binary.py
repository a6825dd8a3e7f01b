# %% [markdown]
# # Training a binary sentiment model
#
# A synthetic corpus stands in for real reviews. Positive and negative
# reviews draw from separate keyword pools mixed with shared filler words.

# %%
import tempfile
from pathlib import Path

from lstmsent import (
    ModelConfig,
    TrainConfig,
    build_vocab,
    clean_text,
    export_curves,
    init_params,
    synth_corpus,
    to_arrays,
    tokenize,
    train,
)

ds = synth_corpus(seed=2024, n=600, class_share=(0.5, 0.0, 0.5))
print(ds.records[0])
vocab = build_vocab([tokenize(clean_text(t)) for t in ds.texts], 20000)
X, y = to_arrays(ds, vocab, seq_len=40)
print(X.shape, "vocabulary:", len(vocab))

# %% [markdown]
# 70% of the shuffled records train, the rest are held out. Adam with
# global-norm clipping at 5.

# %%
config = ModelConfig(vocab_size=len(vocab), embed_dim=32, hidden=64, seq_len=40)
cfg = TrainConfig(epochs=5, seed=0)
params, history = train(init_params(config, cfg.seed), config, X, y, cfg)
for epoch, row in enumerate(history.rows(), 1):
    print(epoch, " ".join(f"{v:.4f}" for v in row))

# %%
out = Path(tempfile.mkdtemp()) / "curves.csv"
export_curves(history, out)
print(out.read_text())
