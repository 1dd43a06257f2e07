// DOM view: instructions panel, synced players, discrete score row, submit.
// All session rules live in session.ts; this layer only renders and relays
// user input, so the browser can never produce a rating the service rejects.

import { StudyApiClient, StudyItem } from "./api.js";
import { SyncedPlayers } from "./player.js";
import { RatingSession, SessionDriver, progressFraction, scoreForKey } from "./session.js";

const ASPECTS = [
  "Text-video consistency: does the edited video follow the editing prompt?",
  "Source-target fidelity: does the edit stay connected to the original video?",
  "Video quality: temporal and spatial coherence, aesthetics, distortions.",
];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

export class RatingView implements SessionDriver {
  private root: HTMLElement;
  private players!: SyncedPlayers;
  private promptLabel!: HTMLElement;
  private progressLabel!: HTMLElement;
  private scoreButtons: HTMLButtonElement[] = [];
  private submitButton!: HTMLButtonElement;
  private session: RatingSession | null = null;
  private resolveItem: (() => void) | null = null;

  constructor(
    root: HTMLElement,
    private api: StudyApiClient,
    instructions: string,
  ) {
    this.root = root;
    this.renderInstructions(instructions);
  }

  // The aspects panel is always shown before the first item.
  private renderInstructions(instructions: string): void {
    this.root.replaceChildren();
    const panel = el("div", "panel instructions");
    panel.appendChild(el("h1", undefined, "Rating instructions"));
    panel.appendChild(el("p", undefined, instructions));
    const list = el("ul");
    for (const aspect of ASPECTS) {
      list.appendChild(el("li", undefined, aspect));
    }
    panel.appendChild(list);
    panel.appendChild(el("p", "note",
      "Scores are final: earlier ratings cannot be revisited or revised."));
    const start = el("button", "start", "Start rating");
    start.addEventListener("click", () => this.renderRatingScreen());
    panel.appendChild(start);
    this.root.appendChild(panel);
  }

  private renderRatingScreen(): void {
    this.root.replaceChildren();
    const screen = el("div", "panel rating");

    const videos = el("div", "videos");
    const sourceBox = el("div", "video-box");
    sourceBox.appendChild(el("h2", undefined, "Source"));
    const sourceVideo = el("video");
    sourceBox.appendChild(sourceVideo);
    const editedBox = el("div", "video-box");
    editedBox.appendChild(el("h2", undefined, "Edited"));
    const editedVideo = el("video");
    editedBox.appendChild(editedVideo);
    videos.append(sourceBox, editedBox);
    screen.appendChild(videos);

    const playPause = el("button", "playpause", "Play / pause");
    playPause.addEventListener("click", () => this.players.toggle());
    screen.appendChild(playPause);

    this.promptLabel = el("p", "prompt");
    screen.appendChild(this.promptLabel);

    const scoreRow = el("div", "score-row");
    for (let score = 1; score <= 10; score++) {
      const button = el("button", "score", String(score));
      button.addEventListener("click", () => this.pickScore(score));
      this.scoreButtons.push(button);
      scoreRow.appendChild(button);
    }
    screen.appendChild(scoreRow);

    this.submitButton = el("button", "submit", "Submit rating");
    this.submitButton.disabled = true;
    this.submitButton.addEventListener("click", () => {
      if (this.session?.canSubmit && this.resolveItem) {
        const resolve = this.resolveItem;
        this.resolveItem = null;
        resolve();
      }
    });
    screen.appendChild(this.submitButton);

    this.progressLabel = el("p", "progress");
    screen.appendChild(this.progressLabel);
    this.root.appendChild(screen);

    this.players = new SyncedPlayers(sourceVideo, editedVideo, (player) => {
      this.session?.noteLoopCompleted(player);
      this.refresh();
    });

    document.addEventListener("keydown", (event) => {
      const score = scoreForKey(event.key);
      if (score !== null) {
        this.pickScore(score);
      }
    });
  }

  private pickScore(score: number): void {
    if (this.session?.selectScore(score)) {
      this.refresh();
    }
  }

  private refresh(): void {
    if (!this.session) return;
    const state = this.session.state;
    for (const button of this.scoreButtons) {
      button.classList.toggle(
        "selected",
        state.selectedScore === Number(button.textContent),
      );
    }
    this.submitButton.disabled = !this.session.canSubmit;
    this.progressLabel.textContent =
      `${state.ratedCount} / ${state.totalCount} rated ` +
      `(${Math.round(progressFraction(state) * 100)}%)`;
  }

  rateItem(session: RatingSession, item: StudyItem): Promise<void> {
    this.session = session;
    this.promptLabel.textContent = `Prompt: ${item.prompt}`;
    this.players.load(this.api.mediaUrl(item.source_url), this.api.mediaUrl(item.edited_url));
    this.players.play();
    this.refresh();
    return new Promise((resolve) => {
      this.resolveItem = resolve;
    });
  }

  onDone(): void {
    this.root.replaceChildren();
    const panel = el("div", "panel done");
    panel.appendChild(el("h1", undefined, "All done"));
    panel.appendChild(el("p", undefined,
      "Every item in your session has been rated. Thank you!"));
    this.root.appendChild(panel);
  }
}
