"""Persistent state for subjective studies.

Persistence is an append-only JSON-lines event log plus a periodic snapshot
index: crash-safe, auditable, and storage-engine-agnostic. All mutations are
serialized through one lock (the single appender); reads work off the
in-memory state rebuilt from the log.
"""

from __future__ import annotations

import datetime as _dt
import json
import random
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import UserInputError
from ..manifest import EditTriplet

SCHEMA_VERSION = "study-service-v1"
RATING_SCALE = tuple(range(1, 11))
DEFAULT_MIN_PARTICIPANTS = 15
DEFAULT_INSTRUCTIONS = (
    "Watch the source and edited clips together and judge the edit on three "
    "aspects: text-video consistency (does the edit follow the prompt?), "
    "source-target fidelity (does the edit stay connected to the original "
    "video?), and overall video quality (coherence, aesthetics, distortions). "
    "Rate your overall impression on a scale from 1 (bad) to 10 (excellent).")


class StudyError(UserInputError):
    """Domain error with an HTTP-ish status for the service layer."""

    def __init__(self, message: str, code: str, status: int):
        super().__init__(message)
        self.code = code
        self.status = status


def _not_found(what: str, key: str) -> StudyError:
    return StudyError(f"unknown {what}: {key}", f"{what}_not_found", 404)


@dataclass
class StudyItem:
    triplet_id: str
    source_url: str
    edited_url: str
    prompt: str

    @classmethod
    def from_triplet(cls, t: EditTriplet, media_prefix: str = "/media/") -> "StudyItem":
        return cls(triplet_id=t.triplet_id,
                   source_url=f"{media_prefix}{t.source_path}",
                   edited_url=f"{media_prefix}{t.edited_path}",
                   prompt=t.prompt)


@dataclass
class Study:
    study_id: str
    seed: int
    min_participants: int
    instructions: str
    items: list[StudyItem]


@dataclass
class Session:
    session_id: str
    study_id: str
    annotator_id: str
    order: list[str]                      # per-rater permutation of triplet ids
    ratings: dict[str, int] = field(default_factory=dict)  # committed, by triplet

    @property
    def cursor(self) -> int:
        return len(self.ratings)

    @property
    def complete(self) -> bool:
        return self.cursor >= len(self.order)


def _utcnow() -> str:
    return _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


class StudyStore:
    """Event-sourced study state with a single-appender write path."""

    def __init__(self, root: str | Path, snapshot_every: int = 200):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.events_path = self.root / "events.jsonl"
        self.snapshot_path = self.root / "snapshot.json"
        self.snapshot_every = snapshot_every
        self._lock = threading.Lock()
        self._studies: dict[str, Study] = {}
        self._sessions: dict[str, Session] = {}
        self._events_applied = 0
        self._replay()

    # -- persistence ----------------------------------------------------------

    def _append(self, event: dict) -> None:
        with open(self.events_path, "a") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")
        self._events_applied += 1
        if self._events_applied % self.snapshot_every == 0:
            self._write_snapshot()

    def _write_snapshot(self) -> None:
        state = {
            "schema_version": SCHEMA_VERSION,
            "events_applied": self._events_applied,
            "studies": {
                sid: {"study_id": s.study_id, "seed": s.seed,
                      "min_participants": s.min_participants,
                      "instructions": s.instructions,
                      "items": [vars(i) for i in s.items]}
                for sid, s in self._studies.items()},
            "sessions": {
                sid: {"session_id": s.session_id, "study_id": s.study_id,
                      "annotator_id": s.annotator_id, "order": s.order,
                      "ratings": s.ratings}
                for sid, s in self._sessions.items()},
        }
        tmp = self.snapshot_path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(state, sort_keys=True))
        tmp.replace(self.snapshot_path)

    def _load_snapshot(self) -> int:
        if not self.snapshot_path.exists():
            return 0
        state = json.loads(self.snapshot_path.read_text())
        for sid, s in state["studies"].items():
            self._studies[sid] = Study(
                study_id=s["study_id"], seed=s["seed"],
                min_participants=s["min_participants"],
                instructions=s["instructions"],
                items=[StudyItem(**i) for i in s["items"]])
        for sid, s in state["sessions"].items():
            self._sessions[sid] = Session(
                session_id=s["session_id"], study_id=s["study_id"],
                annotator_id=s["annotator_id"], order=list(s["order"]),
                ratings={k: int(v) for k, v in s["ratings"].items()})
        return int(state["events_applied"])

    def _replay(self) -> None:
        start = self._load_snapshot()
        self._events_applied = start
        if not self.events_path.exists():
            return
        with open(self.events_path) as fh:
            for i, line in enumerate(fh):
                if i < start or not line.strip():
                    continue
                self._apply(json.loads(line))
                self._events_applied += 1

    def _apply(self, event: dict) -> None:
        kind = event["type"]
        if kind == "study_created":
            s = event["study"]
            self._studies[s["study_id"]] = Study(
                study_id=s["study_id"], seed=s["seed"],
                min_participants=s["min_participants"],
                instructions=s["instructions"],
                items=[StudyItem(**i) for i in s["items"]])
        elif kind == "enrolled":
            self._sessions[event["session_id"]] = Session(
                session_id=event["session_id"], study_id=event["study_id"],
                annotator_id=event["annotator_id"], order=list(event["order"]))
        elif kind == "rating":
            session = self._sessions[event["session_id"]]
            session.ratings[event["triplet_id"]] = int(event["score"])

    # -- commands -------------------------------------------------------------

    def create_study(self, items: list[StudyItem], seed: int = 0,
                     study_id: str | None = None,
                     min_participants: int = DEFAULT_MIN_PARTICIPANTS,
                     instructions: str = DEFAULT_INSTRUCTIONS) -> Study:
        if not items:
            raise StudyError("a study needs at least one triplet", "empty_study", 400)
        ids = [i.triplet_id for i in items]
        if len(set(ids)) != len(ids):
            raise StudyError("duplicate triplet ids in study items",
                             "duplicate_triplets", 400)
        with self._lock:
            sid = study_id or f"study-{uuid.uuid4().hex[:8]}"
            if sid in self._studies:
                raise StudyError(f"study {sid} already exists", "study_exists", 409)
            study = Study(study_id=sid, seed=seed, min_participants=min_participants,
                          instructions=instructions, items=list(items))
            self._studies[sid] = study
            self._append({"type": "study_created", "at": _utcnow(), "study": {
                "study_id": sid, "seed": seed, "min_participants": min_participants,
                "instructions": instructions, "items": [vars(i) for i in items]}})
            return study

    def get_study(self, study_id: str) -> Study:
        study = self._studies.get(study_id)
        if study is None:
            raise _not_found("study", study_id)
        return study

    def enroll(self, study_id: str, annotator_id: str) -> Session:
        """Creates (or resumes) the annotator's session with its fixed permutation."""
        if not annotator_id:
            raise StudyError("annotator_id must be non-empty", "bad_annotator", 400)
        with self._lock:
            study = self.get_study(study_id)
            for session in self._sessions.values():
                if session.study_id == study_id and session.annotator_id == annotator_id:
                    return session  # resume: never re-randomize
            order = [i.triplet_id for i in study.items]
            # Deterministic, rater-specific order; seeding by string is stable
            # across processes (it hashes via sha512, not PYTHONHASHSEED).
            random.Random(f"{study.seed}:{annotator_id}").shuffle(order)
            session = Session(session_id=f"sess-{uuid.uuid4().hex[:12]}",
                              study_id=study_id, annotator_id=annotator_id,
                              order=order)
            self._sessions[session.session_id] = session
            self._append({"type": "enrolled", "at": _utcnow(),
                          "session_id": session.session_id, "study_id": study_id,
                          "annotator_id": annotator_id, "order": order})
            return session

    def get_session(self, session_id: str) -> Session:
        session = self._sessions.get(session_id)
        if session is None:
            raise _not_found("session", session_id)
        return session

    def next_item(self, session_id: str) -> tuple[StudyItem | None, Session]:
        session = self.get_session(session_id)
        if session.complete:
            return None, session
        study = self.get_study(session.study_id)
        items_by_id = {i.triplet_id: i for i in study.items}
        return items_by_id[session.order[session.cursor]], session

    def submit_rating(self, session_id: str, triplet_id: str,
                      score: int) -> dict:
        """Validates and commits one rating; retries of the last commit are idempotent."""
        if not isinstance(score, int) or isinstance(score, bool) \
                or score not in RATING_SCALE:
            raise StudyError(f"score must be an integer in [1, 10], got {score!r}",
                             "score_out_of_range", 400)
        with self._lock:
            session = self.get_session(session_id)
            # Idempotent retry: same triplet and score as the most recent commit.
            if session.cursor > 0 and session.order[session.cursor - 1] == triplet_id:
                if session.ratings[triplet_id] == score:
                    return {"duplicate": True, "cursor": session.cursor,
                            "complete": session.complete}
                raise StudyError(
                    f"triplet {triplet_id} was already rated {session.ratings[triplet_id]}",
                    "conflicting_retry", 409)
            if session.complete:
                raise StudyError("session is complete", "session_complete", 409)
            expected = session.order[session.cursor]
            if triplet_id != expected:
                raise StudyError(
                    f"out-of-order rating: expected triplet {expected}, got {triplet_id}",
                    "out_of_order", 409)
            session.ratings[triplet_id] = score
            self._append({"type": "rating", "at": _utcnow(),
                          "session_id": session_id, "triplet_id": triplet_id,
                          "score": score})
            return {"duplicate": False, "cursor": session.cursor,
                    "complete": session.complete}

    # -- queries --------------------------------------------------------------

    def progress(self, study_id: str) -> dict:
        study = self.get_study(study_id)
        sessions = [s for s in self._sessions.values() if s.study_id == study_id]
        per_annotator = [
            {"annotator_id": s.annotator_id, "rated": s.cursor,
             "total": len(s.order), "complete": s.complete}
            for s in sorted(sessions, key=lambda s: s.annotator_id)
        ]
        enrolled = len(sessions)
        return {
            "study_id": study_id,
            "enrolled": enrolled,
            "completed": sum(1 for s in sessions if s.complete),
            "min_participants": study.min_participants,
            "itu_warning": enrolled < study.min_participants,
            "per_annotator": per_annotator,
        }

    def export_rows(self, study_id: str) -> list[tuple[str, str, int, str]]:
        """Committed ratings in the MOS-pipeline CSV schema, log order."""
        self.get_study(study_id)
        sessions_in_study = {sid: s for sid, s in self._sessions.items()
                             if s.study_id == study_id}
        rows = []
        if self.events_path.exists():
            with open(self.events_path) as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    event = json.loads(line)
                    if event["type"] != "rating":
                        continue
                    session = sessions_in_study.get(event["session_id"])
                    if session is None:
                        continue
                    rows.append((session.annotator_id, event["triplet_id"],
                                 int(event["score"]), event["at"]))
        return rows
