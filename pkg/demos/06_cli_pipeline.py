# %% [markdown]
# # The command-line pipeline end to end
#
# simulate -> analyze -> label -> compare, driven through ``celldyn.cli.main``
# in a scratch directory. The same steps work from a shell with ``celldyn``.

# %%
import csv
import tempfile
from pathlib import Path

from celldyn.cli import main

work = Path(tempfile.mkdtemp(prefix="celldyn-demo-"))
for k in range(8):
    div = 0.005 * k
    main(["simulate", "--initial", "15", "--div-prob", str(div), "--seed", str(k),
          "--out", str(work / "videos" / f"well{k}.mskv")])

# %%
main(["analyze", str(work / "videos"), "--out", str(work / "metrics")])
print(sorted(p.name for p in (work / "metrics").iterdir()))

# %% [markdown]
# Proliferation scores for the label step come from the simulation settings,
# so only the slowest and fastest wells land outside the percentile cuts.

# %%
with open(work / "scores.csv", "w", newline="") as fh:
    w = csv.writer(fh)
    w.writerow(["video_id", "cell_count", "proliferation", "migration", "death"])
    for k in range(8):
        w.writerow([f"well{k}", 15, 0.005 * k, 1.0, 0.0])
main(["label", str(work / "scores.csv"), "--out", str(work / "labels")])

# %%
main(["compare", "--real", str(work / "metrics"), "--generated", str(work / "metrics"),
      "--labels", str(work / "labels" / "labels.csv"), "--group-by", "proliferation",
      "--metrics", "final_count,growth_ratio,net_displacement", "--out", str(work / "report")])
print((work / "report" / "report.md").read_text())
