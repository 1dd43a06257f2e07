"""Runs the study service: ``python -m editqa.study --root <dir> --port 8000``."""

import argparse

import uvicorn

from .service import create_app
from .store import StudyStore


def main() -> None:
    parser = argparse.ArgumentParser(description="editqa study service")
    parser.add_argument("--root", required=True, help="state directory for the event log")
    parser.add_argument("--media", default=None, help="directory served under /media/")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    args = parser.parse_args()
    app = create_app(StudyStore(args.root), media_root=args.media)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


if __name__ == "__main__":
    main()
