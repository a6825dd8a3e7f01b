# %% [markdown]
# # Review types and sentiment labels
#
# A sigmoid probability maps onto five review types. The softmax head and
# the ensemble give three labels with one-hot codes.

# %%
from lstmsent import ReviewType, SentimentLabel, review_type_of, sentiment_of

for p in (0.05, 0.1368, 0.3, 0.55, 0.7, 0.8, 0.97):
    print(f"{p:>6}  {review_type_of(p).label:<10} {sentiment_of(p).value}")

# %%
print([t.label for t in ReviewType])
for label in SentimentLabel:
    print(label.value, label.one_hot)
print(sentiment_of([0.1, 0.7, 0.2], head="softmax").value)

# %% [markdown]
# Star ratings become labels: 1-2 negative, 3 neutral, 4-5 positive.

# %%
from lstmsent.data import label_from_rating

print({r: label_from_rating(r).value for r in range(1, 6)})
