# %% [markdown]
# # Model anatomy
#
# The classifier is an embedding table, one LSTM layer and a dense head.
# This notebook counts its parameters, runs a forward pass and checks the
# analytic gradients against finite differences.

# %%
import numpy as np

from lstmsent import ModelConfig, forward, grad_check, init_params, param_count

config = ModelConfig(vocab_size=20000, embed_dim=32, hidden=100, seq_len=100, head="sigmoid")
print(param_count(config))

# %% [markdown]
# The LSTM block holds 4 * (d*h + h*h + h) weights: 53,200 for d=32, h=100.
# A sequence of ids goes in, one probability comes out.

# %%
params = init_params(config, seed=0)
ids = np.zeros(config.seq_len, dtype=np.int64)
ids[-4:] = [17, 250, 3, 42]
p, _ = forward(ids, params, config)
print(f"P(positive) for an untrained model: {p:.4f}")

# %% [markdown]
# Gradient check on a tiny configuration. The numeric side runs in extended
# precision so the comparison is not swamped by round-off.

# %%
tiny = ModelConfig(vocab_size=50, embed_dim=8, hidden=12, seq_len=6)
rng = np.random.default_rng(1)
batch = (rng.integers(0, 50, size=(3, 6)), np.array([0, 1, 1]))
print("max relative error:", grad_check(init_params(tiny, 1), tiny, batch))
