import { EnvelopeBuffer } from './stream';
import type {
  BeliefSnapshotPayload,
  ConvergencePayload,
  Envelope,
  SessionDescriptor,
  SessionEndedPayload,
  TurnResultPayload,
  WireOffer,
} from './types';
import {
  buildGridViewModel,
  buildPanelViewModel,
  cellColor,
  rampColor,
} from './viewmodel';

export const BAND_ANIMATION_MS = 500;

/**
 * The workbench screen: chat pane, always-visible payoff table, and (in the
 * decision-support condition) the horizon grid and convergence panel.
 *
 * The view is a pure function of (session descriptor, ordered envelope
 * stream): it does no belief math of its own, only renders the served
 * numbers, so replaying a stored stream reproduces the exact same DOM.
 * Out-of-order envelopes are buffered until the sequence gap fills.
 */
export class WorkbenchView {
  private buffer = new EnvelopeBuffer();
  private chatList: HTMLElement;
  private statusLine: HTMLElement;
  private widgets: HTMLElement;
  private gridBody: HTMLElement;
  private panelBar: HTMLElement;
  private panelMarker: HTMLElement;
  private readonly decisionSupport: boolean;

  constructor(
    private readonly root: HTMLElement,
    private readonly session: SessionDescriptor,
    private readonly onCopyToChat: (text: string) => void = () => {},
  ) {
    this.decisionSupport = session.condition === 'decision_support';
    root.classList.add('workbench');
    root.innerHTML = '';
    root.appendChild(this.buildHeader());
    const main = document.createElement('div');
    main.className = 'workbench-main';
    main.appendChild(this.buildChatPane());
    const side = document.createElement('div');
    side.className = 'workbench-side';
    side.appendChild(this.buildPayoffTable());
    this.widgets = this.buildWidgets();
    side.appendChild(this.widgets);
    main.appendChild(side);
    root.appendChild(main);
    this.chatList = root.querySelector('.chat-messages')!;
    this.statusLine = root.querySelector('.status-line')!;
    this.gridBody = root.querySelector('.horizon-grid tbody')!;
    this.panelBar = root.querySelector('.convergence-bar')!;
    this.panelMarker = root.querySelector('.convergence-marker')!;
  }

  /** Feed raw envelopes in any order; renders whatever becomes deliverable. */
  receive(envelope: Envelope): void {
    for (const ready of this.buffer.push(envelope)) {
      this.apply(ready);
    }
  }

  /** Client-side failures that never entered the stream. */
  showError(detail: string): void {
    this.statusLine.textContent = `error: ${detail}`;
  }

  replay(envelopes: Envelope[]): void {
    for (const envelope of envelopes) {
      this.receive(envelope);
    }
  }

  private apply(envelope: Envelope): void {
    switch (envelope.kind) {
      case 'session_created':
        this.statusLine.textContent = `session live - ${this.session.dimensionality} issue(s)`;
        break;
      case 'turn_result':
        this.renderTurn(envelope.payload as unknown as TurnResultPayload);
        break;
      case 'belief_snapshot':
        if (this.decisionSupport) {
          this.renderGrid(envelope.payload as unknown as BeliefSnapshotPayload);
        }
        break;
      case 'convergence_snapshot':
        if (this.decisionSupport) {
          this.renderPanel(envelope.payload as unknown as ConvergencePayload);
        }
        break;
      case 'session_ended': {
        const ended = envelope.payload as unknown as SessionEndedPayload;
        this.statusLine.textContent = `session over: ${ended.outcome.kind}`;
        this.root.classList.add('session-over');
        break;
      }
      case 'error': {
        const detail = (envelope.payload as { detail?: string }).detail ?? 'error';
        this.statusLine.textContent = `error: ${detail}`;
        break;
      }
    }
  }

  // -- construction -----------------------------------------------------------

  private buildHeader(): HTMLElement {
    const header = document.createElement('header');
    header.className = 'workbench-header';
    const title = document.createElement('span');
    title.textContent = `Rental negotiation (${this.session.condition.replace('_', ' ')})`;
    const status = document.createElement('span');
    status.className = 'status-line';
    status.textContent = 'waiting for session';
    header.append(title, status);
    return header;
  }

  private buildChatPane(): HTMLElement {
    const pane = document.createElement('section');
    pane.className = 'chat-pane';
    const list = document.createElement('ul');
    list.className = 'chat-messages';
    pane.appendChild(list);
    return pane;
  }

  private buildPayoffTable(): HTMLElement {
    const section = document.createElement('section');
    section.className = 'payoff-pane';
    const table = document.createElement('table');
    table.className = 'payoff-table';
    const head = document.createElement('tr');
    head.innerHTML =
      '<th>issue</th>' +
      Array.from({ length: 7 }, (_, i) => `<th>${i + 1}</th>`).join('') +
      '<th></th>';
    table.appendChild(head);
    for (const issue of this.session.issues) {
      const row = document.createElement('tr');
      row.dataset.issueId = issue.issue_id;
      const name = document.createElement('td');
      name.textContent = issue.name;
      name.title = issue.issue_id;
      row.appendChild(name);
      issue.human_payoffs.forEach((payoff, idx) => {
        const cell = document.createElement('td');
        cell.textContent = String(payoff);
        cell.title = issue.option_labels[idx];
        row.appendChild(cell);
      });
      const copy = document.createElement('td');
      const button = document.createElement('button');
      button.type = 'button';
      button.className = 'copy-to-chat';
      button.textContent = 'copy';
      button.addEventListener('click', () => this.onCopyToChat(`${issue.issue_id} = `));
      copy.appendChild(button);
      row.appendChild(copy);
      table.appendChild(row);
    }
    section.appendChild(table);
    return section;
  }

  private buildWidgets(): HTMLElement {
    const widgets = document.createElement('section');
    widgets.className = 'widgets';
    if (!this.decisionSupport) {
      widgets.hidden = true;
      return widgets;
    }
    const grid = document.createElement('table');
    grid.className = 'horizon-grid';
    const body = document.createElement('tbody');
    for (const issue of this.session.issues) {
      const row = document.createElement('tr');
      row.dataset.issueId = issue.issue_id;
      const label = document.createElement('td');
      label.className = 'grid-label';
      label.textContent = issue.name;
      row.appendChild(label);
      for (let col = 0; col < 7; col += 1) {
        const cell = document.createElement('td');
        cell.className = 'grid-cell';
        cell.dataset.col = String(col);
        cell.dataset.intensity = '0';
        cell.dataset.saturation = '0';
        cell.title = `${issue.option_labels[col]} (${issue.human_payoffs[col]})`;
        cell.style.transition = `background-color ${BAND_ANIMATION_MS}ms, box-shadow ${BAND_ANIMATION_MS}ms`;
        row.appendChild(cell);
      }
      body.appendChild(row);
    }
    grid.appendChild(body);

    const panel = document.createElement('div');
    panel.className = 'convergence-panel';
    const track = document.createElement('div');
    track.className = 'convergence-track';
    const bar = document.createElement('div');
    bar.className = 'convergence-bar';
    bar.style.transition = `width ${BAND_ANIMATION_MS}ms, left ${BAND_ANIMATION_MS}ms, background-color ${BAND_ANIMATION_MS}ms`;
    const marker = document.createElement('div');
    marker.className = 'convergence-marker';
    marker.style.transition = `left ${BAND_ANIMATION_MS}ms`;
    track.append(bar, marker);
    panel.appendChild(track);

    widgets.append(grid, panel);
    return widgets;
  }

  // -- rendering ---------------------------------------------------------------

  private offerText(offer: WireOffer): string {
    const parts = this.session.issues.map((issue) => {
      const pick = offer.selections[issue.issue_id];
      const label = issue.option_labels[pick - 1] ?? `option ${pick}`;
      return `${issue.issue_id} = ${pick} (${label})`;
    });
    return parts.join(', ');
  }

  private appendMessage(author: 'you' | 'landlord', text: string, note: string): void {
    const item = document.createElement('li');
    item.className = `chat-message from-${author}`;
    const body = document.createElement('span');
    body.textContent = `${author === 'you' ? 'You' : 'Landlord'}: ${text}`;
    item.appendChild(body);
    if (note) {
      const aside = document.createElement('span');
      aside.className = 'chat-note';
      aside.textContent = note;
      item.appendChild(aside);
    }
    this.chatList.appendChild(item);
  }

  private renderTurn(turn: TurnResultPayload): void {
    this.appendMessage('you', this.offerText(turn.human_offer), turn.human_offer.note);
    this.appendMessage('landlord', this.offerText(turn.agent_offer), turn.agent_offer.note);
    this.statusLine.textContent = turn.agreed
      ? `agreement on turn ${turn.turn_number}`
      : `turn ${turn.turn_number} of ${this.session.caps.max_rounds}`;
  }

  private renderGrid(snapshot: BeliefSnapshotPayload): void {
    const model = buildGridViewModel(this.session, snapshot);
    for (const row of model.rows) {
      const rowElement = this.gridBody.querySelector<HTMLElement>(
        `tr[data-issue-id="${row.issueId}"]`,
      );
      if (!rowElement) continue;
      rowElement.dataset.zopa = row.zopa ? `${row.zopa[0]}-${row.zopa[1]}` : '';
      for (const cell of row.cells) {
        const cellElement = rowElement.querySelector<HTMLElement>(
          `td[data-col="${cell.col}"]`,
        );
        if (!cellElement) continue;
        cellElement.dataset.intensity = cell.intensity.toFixed(6);
        cellElement.dataset.saturation = cell.saturation.toFixed(6);
        cellElement.dataset.tier = String(cell.tier);
        cellElement.style.backgroundColor = cellColor(cell.saturation);
        cellElement.classList.toggle('zopa-band', cell.inZopa);
      }
    }
  }

  private renderPanel(snapshot: ConvergencePayload): void {
    const model = buildPanelViewModel(snapshot);
    this.panelBar.style.width = `${model.widthPct.toFixed(3)}%`;
    this.panelBar.style.left = `${Math.max(0, Math.min(100 - model.widthPct, model.positionPct - model.widthPct / 2)).toFixed(3)}%`;
    this.panelBar.style.backgroundColor = model.color;
    this.panelBar.dataset.widthPct = model.widthPct.toFixed(6);
    this.panelBar.dataset.positionPct = model.positionPct.toFixed(6);
    this.panelMarker.style.left = `${model.positionPct.toFixed(3)}%`;
    this.panelMarker.style.backgroundColor = rampColor(model.colorStop);
  }
}
