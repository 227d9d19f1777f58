import { WorkbenchClient } from './client';
import { ComposeTimer, attachComposeEvents } from './telemetry';
import type { Envelope } from './types';
import { WorkbenchView } from './view';

/**
 * Browser entry point: create a session, mount the workbench, wire the
 * compose box (with per-turn timing telemetry) to the offers endpoint, and
 * mirror the live stream into the view.
 */
export async function mountWorkbench(
  root: HTMLElement,
  baseUrl: string,
  options: { dimensionality: number; condition: 'baseline' | 'decision_support'; seed?: number },
): Promise<void> {
  const client = new WorkbenchClient(baseUrl);
  const session = await client.createSession(options);

  const compose = document.createElement('form');
  compose.className = 'compose';
  const input = document.createElement('input');
  input.type = 'text';
  input.placeholder = 'issue_id = option, one pair per issue (1..7)';
  const send = document.createElement('button');
  send.type = 'submit';
  send.textContent = 'send offer';
  compose.append(input, send);

  const view = new WorkbenchView(root, session, (text) => {
    input.value += text;
    input.dispatchEvent(new Event('paste'));
    input.focus();
  });
  root.appendChild(compose);

  const timer = new ComposeTimer();
  timer.markReceived();
  attachComposeEvents(input, timer);

  const seen = new Set<number>();
  const deliver = (envelope: Envelope) => {
    if (!seen.has(envelope.seq)) {
      seen.add(envelope.seq);
      view.receive(envelope);
    }
  };
  client.openStream(deliver);

  compose.addEventListener('submit', async (event) => {
    event.preventDefault();
    const selections: Record<string, number> = {};
    for (const pair of input.value.split(',')) {
      const [issueId, option] = pair.split('=').map((part) => part.trim());
      if (issueId && option) {
        selections[issueId] = Number(option);
      }
    }
    try {
      const envelopes = await client.postOffer(selections, timer.submit());
      envelopes.forEach(deliver);
      input.value = '';
      timer.markReceived();
    } catch (error) {
      view.showError(String(error));
    }
  });
}
