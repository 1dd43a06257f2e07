// The rating session state machine, free of DOM dependencies.
//
// Invariants enforced here (and re-validated by the service):
// - a rating can only be submitted for the CURRENT item (order guarantee),
// - the score is always an integer 1..10 (range guarantee),
// - submit stays disabled until a score is selected AND both players have
//   completed at least one full loop,
// - the selected score resets between items.

import { NextItemResponse, RatingAck, StudyApiClient, StudyItem } from "./api.js";

export type PlayerName = "source" | "edited";

export interface RatingViewState {
  item: StudyItem | null;
  selectedScore: number | null;
  loopsCompleted: { source: number; edited: number };
  ratedCount: number;
  totalCount: number;
  done: boolean;
}

export function progressFraction(state: RatingViewState): number {
  return state.totalCount === 0 ? 0 : state.ratedCount / state.totalCount;
}

export class RatingSession {
  readonly state: RatingViewState = {
    item: null,
    selectedScore: null,
    loopsCompleted: { source: 0, edited: 0 },
    ratedCount: 0,
    totalCount: 0,
    done: false,
  };

  constructor(
    private api: StudyApiClient,
    public readonly sessionToken: string,
  ) {}

  async loadNext(): Promise<RatingViewState> {
    const next: NextItemResponse = await this.api.nextItem(this.sessionToken);
    this.state.ratedCount = next.cursor;
    this.state.totalCount = next.total;
    this.state.done = next.done;
    this.state.item = next.item;
    // score and loop progress never carry over between items
    this.state.selectedScore = null;
    this.state.loopsCompleted = { source: 0, edited: 0 };
    return this.state;
  }

  noteLoopCompleted(player: PlayerName): void {
    this.state.loopsCompleted[player] += 1;
  }

  // Discrete 1..10 selection; anything else is ignored, so an out-of-range
  // rating is impossible by construction.
  selectScore(score: number): boolean {
    if (!Number.isInteger(score) || score < 1 || score > 10) {
      return false;
    }
    this.state.selectedScore = score;
    return true;
  }

  clearScore(): void {
    this.state.selectedScore = null;
  }

  get canSubmit(): boolean {
    return (
      this.state.item !== null &&
      this.state.selectedScore !== null &&
      this.state.loopsCompleted.source >= 1 &&
      this.state.loopsCompleted.edited >= 1
    );
  }

  async submit(): Promise<RatingAck> {
    if (!this.canSubmit || this.state.item === null || this.state.selectedScore === null) {
      throw new Error("submit called before a score was selected and both clips looped");
    }
    const ack = await this.api.submitRating(
      this.sessionToken,
      this.state.item.triplet_id,
      this.state.selectedScore,
    );
    this.state.ratedCount = ack.cursor;
    return ack;
  }
}

// Keyboard mapping: keys 1..9 select scores 1..9, key 0 selects 10.
export function scoreForKey(key: string): number | null {
  if (key >= "1" && key <= "9") {
    return Number(key);
  }
  if (key === "0") {
    return 10;
  }
  return null;
}

// A driver supplies the human (or scripted) interaction for one item: it
// must select a score on the session and see both loops completed before
// resolving. The browser UI and the headless test driver both implement it.
export interface SessionDriver {
  rateItem(session: RatingSession, item: StudyItem): Promise<void>;
  onDone?(): void;
}

export async function runSession(
  api: StudyApiClient,
  sessionToken: string,
  driver: SessionDriver,
): Promise<RatingSession> {
  const session = new RatingSession(api, sessionToken);
  for (;;) {
    const state = await session.loadNext();
    if (state.done || state.item === null) {
      break;
    }
    await driver.rateItem(session, state.item);
    if (!session.canSubmit) {
      throw new Error(
        "driver finished without a selected score and one full loop of both clips",
      );
    }
    await session.submit();
  }
  driver.onDone?.();
  return session;
}
