import type { Envelope } from './types';

/**
 * Orders an envelope stream by sequence number.
 *
 * The stream contract guarantees strictly increasing `seq` per session, but
 * transport reconnects can deliver envelopes out of order; anything ahead of
 * the next expected sequence is buffered until the gap fills. Duplicates
 * (already-delivered sequence numbers) are dropped.
 */
export class EnvelopeBuffer {
  private nextSeq = 1;
  private pending = new Map<number, Envelope>();

  /** Feed one envelope; returns every envelope now deliverable, in order. */
  push(envelope: Envelope): Envelope[] {
    if (envelope.seq < this.nextSeq || this.pending.has(envelope.seq)) {
      return [];
    }
    this.pending.set(envelope.seq, envelope);
    const ready: Envelope[] = [];
    while (this.pending.has(this.nextSeq)) {
      ready.push(this.pending.get(this.nextSeq)!);
      this.pending.delete(this.nextSeq);
      this.nextSeq += 1;
    }
    return ready;
  }

  get buffered(): number {
    return this.pending.size;
  }

  get expected(): number {
    return this.nextSeq;
  }
}
