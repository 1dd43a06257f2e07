"""Raw 1-10 ratings to screened, normalized MOS.

Simulates a 17-rater study in which one rater scores everything inverted,
then shows the screening catching exactly that rater.

Run: python demos/02_mos_pipeline.py
"""

import random

from editqa.mos import RatingRecord, bt500_screen, compute_mos, rescale_mos

rng = random.Random(0)

# 30 videos with hidden true quality, 16 honest raters + 1 inverted rater.
truths = [rng.uniform(3.0, 8.0) for _ in range(30)]
records = []
for m, truth in enumerate(truths):
    tid = f"vid{m:03d}"
    for i in range(16):
        noise = rng.choice((-1.0, -0.5, 0.0, 0.5, 1.0))
        score = min(10.0, max(1.0, truth + noise))
        records.append(RatingRecord(f"rater{i:02d}", tid, score))
    records.append(RatingRecord("contrarian", tid, 11.0 - truth))

screening = bt500_screen(records)
print(f"screened {len(screening.accepted) + len(screening.rejected)} raters; "
      f"rejected: {list(screening.rejected)}")
p, q, n = screening.counts["contrarian"]
print(f"the contrarian landed outside the confidence band {p} times above "
      f"and {q} below over {n} ratings")

table = compute_mos(records)
print(f"\nMOS table covers {len(table)} videos "
      f"(z-scored, mean of accepted raters)")
best = max(table.entries, key=lambda t: table.entries[t].mos)
worst = min(table.entries, key=lambda t: table.entries[t].mos)
print(f"best  {best}: mos={table.mos_of(best):+.3f} (truth {truths[int(best[3:])]:.2f})")
print(f"worst {worst}: mos={table.mos_of(worst):+.3f} (truth {truths[int(worst[3:])]:.2f})")

# Optional display scaling onto the familiar 1-10 range.
display = rescale_mos(table, 1.0, 10.0)
print(f"\nrescaled to [1, 10]: best={display.mos_of(best):.2f} "
      f"worst={display.mos_of(worst):.2f}")
