// Side-by-side looping players with a single play/pause control.
//
// Both elements restart together only after BOTH have finished the current
// pass, which keeps source and edit aligned for fidelity judgments and
// gives an unambiguous "completed one loop" signal per player.

import { PlayerName } from "./session.js";

export class SyncedPlayers {
  private ended = { source: false, edited: false };

  constructor(
    private source: HTMLVideoElement,
    private edited: HTMLVideoElement,
    private onLoopCompleted: (player: PlayerName) => void,
  ) {
    source.loop = false;
    edited.loop = false;
    source.muted = true;
    edited.muted = true;
    source.addEventListener("ended", () => this.handleEnded("source"));
    edited.addEventListener("ended", () => this.handleEnded("edited"));
  }

  load(sourceUrl: string, editedUrl: string): void {
    this.ended = { source: false, edited: false };
    this.source.src = sourceUrl;
    this.edited.src = editedUrl;
    this.source.currentTime = 0;
    this.edited.currentTime = 0;
  }

  play(): void {
    void this.source.play();
    void this.edited.play();
  }

  pause(): void {
    this.source.pause();
    this.edited.pause();
  }

  toggle(): void {
    if (this.source.paused) {
      this.play();
    } else {
      this.pause();
    }
  }

  private handleEnded(which: PlayerName): void {
    this.ended[which] = true;
    this.onLoopCompleted(which);
    if (this.ended.source && this.ended.edited) {
      this.ended = { source: false, edited: false };
      this.source.currentTime = 0;
      this.edited.currentTime = 0;
      this.play();
    }
  }
}
