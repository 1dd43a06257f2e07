"""The rating-collection service, driven end to end in one process.

Creates a study, enrolls three scripted raters (each sees their own
deterministic item order), collects ratings over HTTP, exports the CSV, and
pushes it straight through the MOS pipeline.

Run: python demos/06_study_service.py
"""

import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from editqa.mos import compute_mos, load_ratings_csv
from editqa.study import StudyStore, create_app

state_dir = Path(tempfile.mkdtemp(prefix="editqa-study-"))
client = TestClient(create_app(StudyStore(state_dir)))

items = [{"triplet_id": f"t{i}", "source_url": f"/media/src{i}",
          "edited_url": f"/media/edit{i}", "prompt": f"edit prompt {i}"}
         for i in range(5)]
study_id = client.post("/studies", json={"triplets": items, "seed": 42,
                                         "study_id": "demo-study"}).json()["study_id"]
print(f"created {study_id} with {len(items)} items")

# Each scripted rater has a per-item opinion; the service controls order.
opinions = {
    "ana":   {"t0": 8, "t1": 3, "t2": 6, "t3": 9, "t4": 2},
    "boris": {"t0": 7, "t1": 4, "t2": 6, "t3": 8, "t4": 3},
    "chen":  {"t0": 9, "t1": 2, "t2": 5, "t3": 9, "t4": 1},
}
for rater, scores in opinions.items():
    session = client.post(f"/studies/{study_id}/enroll",
                          json={"annotator_id": rater}).json()
    order = []
    while True:
        nxt = client.get(f"/sessions/{session['session_id']}/next").json()
        if nxt["done"]:
            break
        tid = nxt["item"]["triplet_id"]
        order.append(tid)
        client.post(f"/sessions/{session['session_id']}/ratings",
                    json={"triplet_id": tid, "score": scores[tid]})
    print(f"{rater} rated all items in order {order}")

progress = client.get(f"/studies/{study_id}/progress").json()
print(f"progress: {progress['completed']}/{progress['enrolled']} complete, "
      f"ITU minimum-participants warning: {progress['itu_warning']}")

export_path = state_dir / "export.csv"
export_path.write_text(client.get(f"/studies/{study_id}/export.csv").text)
records = load_ratings_csv(export_path)
table = compute_mos(records)
print(f"\nexport -> MOS pipeline: {len(records)} ratings, "
      f"{len(table)} videos, rejected raters: {list(table.rejected_annotators)}")
for tid in sorted(table.entries):
    print(f"  {tid}: mos={table.mos_of(tid):+.3f} "
          f"(n={table.entries[tid].rating_count})")
print(f"\nevent log persisted at {state_dir / 'events.jsonl'}")
