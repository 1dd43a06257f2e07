"""Subjective-study collection service: sessions, ratings, exports."""

from .service import create_app
from .store import (DEFAULT_INSTRUCTIONS, DEFAULT_MIN_PARTICIPANTS, RATING_SCALE,
                    SCHEMA_VERSION, Session, Study, StudyError, StudyItem, StudyStore)

__all__ = [
    "create_app", "StudyStore", "StudyItem", "Study", "Session", "StudyError",
    "SCHEMA_VERSION", "RATING_SCALE", "DEFAULT_MIN_PARTICIPANTS",
    "DEFAULT_INSTRUCTIONS",
]
