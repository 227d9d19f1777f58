import type { TimingRecord } from './types';

/**
 * Per-turn compose telemetry: when the opponent's message arrived, the first
 * input into the compose box (typing and pasting both count), and the
 * submit. Attached to every posted offer.
 */
export class ComposeTimer {
  private receivedAt = 0;
  private firstInputAt: number | null = null;

  constructor(private readonly now: () => number = () => Date.now()) {}

  /** Call when the opponent's message (or the task itself) is shown. */
  markReceived(): void {
    this.receivedAt = this.now();
    this.firstInputAt = null;
  }

  /** Call on every keystroke or paste; only the first one is recorded. */
  noteInput(): void {
    if (this.firstInputAt === null) {
      this.firstInputAt = Math.max(this.now(), this.receivedAt);
    }
  }

  /** Close the turn. Quick-accepts without typing get first = submit. */
  submit(): TimingRecord {
    const submittedAt = Math.max(this.now(), this.receivedAt);
    const firstInput = this.firstInputAt ?? submittedAt;
    return {
      received_at_ms: this.receivedAt,
      first_keystroke_at_ms: Math.min(firstInput, submittedAt),
      submitted_at_ms: submittedAt,
    };
  }
}

/** Wire a compose element's input events into the timer. */
export function attachComposeEvents(element: HTMLElement, timer: ComposeTimer): void {
  element.addEventListener('keydown', () => timer.noteInput());
  element.addEventListener('paste', () => timer.noteInput());
}
