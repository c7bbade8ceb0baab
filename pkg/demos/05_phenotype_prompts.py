# %% [markdown]
# # Phenotype labels, prompts and embeddings
#
# Scores are cut at their 10th and 90th percentiles. Videos extreme on at
# least two of death, migration and proliferation are kept. Each gets a
# caption and a 4096-dim embedding vector.

# %%
import numpy as np

from celldyn.conditioning import embed_phenotype, prepend_token, random_weights
from celldyn.phenotype import (
    PhenotypeScores,
    build_prompt,
    compute_thresholds,
    is_extreme,
    label_scores,
    min_max_ranges,
    normalize_phenotypes,
)

rng = np.random.default_rng(0)
scores = [PhenotypeScores(*row) for row in rng.random((200, 4))]
thresholds = compute_thresholds(scores)
labels = [label_scores(s, thresholds) for s in scores]
extreme = [k for k, lab in enumerate(labels) if is_extreme(lab)]
print(f"{len(extreme)} of {len(scores)} videos are extreme")

# %%
for k in extreme[:3]:
    print(labels[k].as_dict())
    print("  ", build_prompt(labels[k]))

# %% [markdown]
# Normalized scores go through a 4 -> 256 -> 512 -> 4096 GELU network. The
# output is prepended to the text tokens as one extra row.

# %%
ranges = min_max_ranges(scores)
weights = random_weights(seed=1)
p = normalize_phenotypes(scores[extreme[0]], ranges)
emb = embed_phenotype(p, weights)
tokens = rng.standard_normal((16, 4096))
stacked = prepend_token(tokens, emb)
print(p.round(3), emb.shape, stacked.shape)
