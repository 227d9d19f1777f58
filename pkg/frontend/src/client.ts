import type { Envelope, SessionDescriptor, TimingRecord } from './types';

export interface CreateSessionOptions {
  dimensionality: number;
  condition: 'baseline' | 'decision_support';
  agent?: 'scripted' | 'llm';
  seed?: number;
}

/**
 * Thin HTTP/WebSocket client for the negotiation service. All math values
 * arrive from the server; this class only moves envelopes.
 */
export class WorkbenchClient {
  private token = '';
  private sessionId = '';

  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: typeof fetch = fetch.bind(globalThis),
  ) {}

  async createSession(options: CreateSessionOptions): Promise<SessionDescriptor> {
    const response = await this.fetchImpl(`${this.baseUrl}/api/v1/sessions`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ agent: 'scripted', seed: 0, ...options }),
    });
    if (!response.ok) {
      throw new Error(`create session failed: ${response.status}`);
    }
    const body = await response.json();
    this.token = body.session_token;
    this.sessionId = body.session_id;
    delete body.session_token;
    return body as SessionDescriptor;
  }

  async postOffer(
    selections: Record<string, number>,
    timing: TimingRecord,
    note = '',
  ): Promise<Envelope[]> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/api/v1/sessions/${this.sessionId}/offers`,
      {
        method: 'POST',
        headers: {
          'Content-Type': 'application/json',
          'X-Session-Token': this.token,
        },
        body: JSON.stringify({ selections, note, timing }),
      },
    );
    if (!response.ok) {
      const body = await response.json().catch(() => ({ detail: response.statusText }));
      throw new Error(`offer rejected: ${body.detail ?? response.status}`);
    }
    return (await response.json()).envelopes as Envelope[];
  }

  /** Live stream; the caller feeds envelopes into a WorkbenchView. */
  openStream(onEnvelope: (envelope: Envelope) => void): WebSocket {
    const wsBase = this.baseUrl.replace(/^http/, 'ws');
    const socket = new WebSocket(
      `${wsBase}/api/v1/sessions/${this.sessionId}/stream?token=${this.token}`,
    );
    socket.onmessage = (event) => onEnvelope(JSON.parse(event.data as string));
    return socket;
  }
}
