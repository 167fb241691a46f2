/**
 * A/B dashboard: two branch timelines side by side with independent
 * run/pause controls, one live stream per pane, and a shared commodity
 * selector for the price lines.
 *
 * Playback is client-paced: while a side is running, the dashboard issues
 * one session-control RUN per interval (default 2 ticks/s). Requests are
 * serialized per side so a slow service never piles up conflicting
 * commands. The panes only display what the service sends back.
 */

import type { StreamHandlers, StreamSubscription } from './api.js';
import { buildTimelineViewModel, renderTimeline } from './timeline.js';
import type { SessionState, TickRecord } from './types.js';

export type Side = 'LEFT' | 'RIGHT';
export const SIDES: readonly Side[] = ['LEFT', 'RIGHT'];

export interface DashboardService {
  timeline(branchId: string, fromTick?: number, toTick?: number): Promise<TickRecord[]>;
  control(
    sessionId: string,
    side: Side,
    action: 'RUN' | 'PAUSE',
    nTicks?: number,
  ): Promise<SessionState>;
  subscribe(branchId: string, fromTick: number, handlers: StreamHandlers): StreamSubscription;
}

export interface DashboardOptions {
  ticksPerSecond?: number;
  commodity?: string;
}

interface Pane {
  side: Side;
  branchId: string;
  records: TickRecord[];
  root: HTMLElement;
  chart: HTMLElement;
  staleBadge: HTMLElement;
  errorBox: HTMLElement;
  subscription: StreamSubscription | null;
  timer: ReturnType<typeof setInterval> | null;
  inflight: boolean;
}

export class AbDashboard {
  private readonly panes: Record<Side, Pane>;
  private readonly selector: HTMLSelectElement;
  private commodity: string;
  private readonly intervalMs: number;

  constructor(
    private readonly container: HTMLElement,
    private readonly session: SessionState,
    private readonly service: DashboardService,
    opts: DashboardOptions = {},
  ) {
    this.commodity = opts.commodity ?? '';
    this.intervalMs = 1000 / (opts.ticksPerSecond ?? 2);

    const header = document.createElement('div');
    header.className = 'dashboard-header';
    this.selector = document.createElement('select');
    this.selector.className = 'commodity-select';
    this.selector.addEventListener('change', () => this.setCommodity(this.selector.value));
    header.appendChild(this.selector);
    container.appendChild(header);

    const row = document.createElement('div');
    row.className = 'dashboard-panes';
    this.panes = {
      LEFT: this.buildPane('LEFT', session.left, row),
      RIGHT: this.buildPane('RIGHT', session.right, row),
    };
    container.appendChild(row);
  }

  private buildPane(side: Side, branchId: string, row: HTMLElement): Pane {
    const root = document.createElement('div');
    root.className = 'pane';
    root.dataset.side = side;
    root.dataset.branchId = branchId;

    const bar = document.createElement('div');
    bar.className = 'pane-header';
    const title = document.createElement('span');
    title.className = 'pane-title';
    title.textContent = `${side}: ${branchId}`;
    bar.appendChild(title);

    const runBtn = document.createElement('button');
    runBtn.className = 'run-btn';
    runBtn.textContent = 'Run';
    runBtn.addEventListener('click', () => void this.run(side));
    bar.appendChild(runBtn);

    const pauseBtn = document.createElement('button');
    pauseBtn.className = 'pause-btn';
    pauseBtn.textContent = 'Pause';
    pauseBtn.addEventListener('click', () => void this.pause(side));
    bar.appendChild(pauseBtn);

    const staleBadge = document.createElement('span');
    staleBadge.className = 'stale-badge';
    staleBadge.textContent = 'stale';
    staleBadge.style.display = 'none';
    bar.appendChild(staleBadge);
    root.appendChild(bar);

    const errorBox = document.createElement('div');
    errorBox.className = 'pane-error';
    root.appendChild(errorBox);

    const chart = document.createElement('div');
    chart.className = 'pane-timeline';
    root.appendChild(chart);
    row.appendChild(root);

    return {
      side,
      branchId,
      records: [],
      root,
      chart,
      staleBadge,
      errorBox,
      subscription: null,
      timer: null,
      inflight: false,
    };
  }

  /** Fetch both histories, render, and open one stream per pane. */
  async start(): Promise<void> {
    for (const side of SIDES) {
      const pane = this.panes[side];
      pane.records = await this.service.timeline(pane.branchId);
      const lastTick = pane.records.length
        ? pane.records[pane.records.length - 1]!.tick
        : 0;
      const handlers: StreamHandlers = {
        onRecord: (record) => this.applyRecord(side, record),
        onStatus: (status) => {
          pane.staleBadge.style.display = status === 'stale' ? '' : 'none';
        },
      };
      pane.subscription = this.service.subscribe(pane.branchId, lastTick + 1, handlers);
    }
    this.populateCommodities();
    this.renderPanes();
  }

  private populateCommodities(): void {
    const seen = new Set<string>();
    for (const side of SIDES) {
      for (const record of this.panes[side].records) {
        for (const commodity of Object.keys(record.prices)) {
          seen.add(commodity);
        }
      }
    }
    const commodities = [...seen].sort();
    this.selector.replaceChildren(
      ...commodities.map((c) => {
        const option = document.createElement('option');
        option.value = c;
        option.textContent = c;
        return option;
      }),
    );
    if (!this.commodity && commodities.length > 0) {
      this.commodity = commodities[0]!;
    }
    this.selector.value = this.commodity;
  }

  private applyRecord(side: Side, record: TickRecord): void {
    const pane = this.panes[side];
    const last = pane.records[pane.records.length - 1];
    if (last && record.tick <= last.tick) {
      return;
    }
    pane.records.push(record);
    this.renderPane(pane);
  }

  private renderPane(pane: Pane): void {
    renderTimeline(pane.chart, buildTimelineViewModel(pane.records, this.commodity));
  }

  private renderPanes(): void {
    for (const side of SIDES) {
      this.renderPane(this.panes[side]);
    }
  }

  /** One paced RUN command; skipped while the previous one is in flight. */
  private async controlTick(side: Side): Promise<void> {
    const pane = this.panes[side];
    if (pane.inflight) {
      return;
    }
    pane.inflight = true;
    try {
      await this.service.control(this.session.session_id, side, 'RUN', 1);
      pane.errorBox.textContent = '';
    } catch (err) {
      pane.errorBox.textContent = String(err);
    } finally {
      pane.inflight = false;
    }
  }

  async run(side: Side): Promise<void> {
    const pane = this.panes[side];
    if (pane.timer !== null) {
      return;
    }
    pane.timer = setInterval(() => void this.controlTick(side), this.intervalMs);
    await this.controlTick(side);
  }

  async pause(side: Side): Promise<void> {
    const pane = this.panes[side];
    if (pane.timer !== null) {
      clearInterval(pane.timer);
      pane.timer = null;
    }
    try {
      await this.service.control(this.session.session_id, side, 'PAUSE');
      pane.errorBox.textContent = '';
    } catch (err) {
      pane.errorBox.textContent = String(err);
    }
  }

  setCommodity(commodity: string): void {
    this.commodity = commodity;
    this.selector.value = commodity;
    this.renderPanes();
  }

  records(side: Side): readonly TickRecord[] {
    return this.panes[side].records;
  }

  isRunning(side: Side): boolean {
    return this.panes[side].timer !== null;
  }

  dispose(): void {
    for (const side of SIDES) {
      const pane = this.panes[side];
      if (pane.timer !== null) {
        clearInterval(pane.timer);
        pane.timer = null;
      }
      pane.subscription?.close();
      pane.subscription = null;
    }
    this.container.replaceChildren();
  }
}
