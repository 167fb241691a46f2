/**
 * Timeline pane: one branch's TickRecords as a marker chart.
 *
 * Injected events render as green boxes spanning their active ticks, social
 * activity as blue circles sized by post count, transactions as red markers
 * sized by trade count, plus one price line for the selected commodity.
 * Everything here is a pure projection of fetched records: the view model
 * carries only data copied from TickRecords, and hover payloads quote the
 * records verbatim.
 */

import type { TickRecord } from './types.js';

export interface EventSpan {
  eventId: string;
  fromTick: number;
  toTick: number;
}

export interface PostMarker {
  tick: number;
  count: number;
  titles: string[];
}

export interface TradeHover {
  tradeId: string;
  commodity: string;
  quantity: number;
  buyerId: string;
  sellerId: string;
  buyerReasoning: string;
  sellerReasoning: string;
}

export interface TradeMarker {
  tick: number;
  count: number;
  trades: TradeHover[];
}

export interface PricePoint {
  tick: number;
  price: string;
}

export interface TimelineViewModel {
  commodity: string;
  fromTick: number;
  toTick: number;
  eventSpans: EventSpan[];
  postMarkers: PostMarker[];
  tradeMarkers: TradeMarker[];
  pricePoints: PricePoint[];
}

export function buildTimelineViewModel(
  records: TickRecord[],
  commodity: string,
): TimelineViewModel {
  const ordered = [...records].sort((a, b) => a.tick - b.tick);
  const spans: EventSpan[] = [];
  const openSpans = new Map<string, EventSpan>();
  const postMarkers: PostMarker[] = [];
  const tradeMarkers: TradeMarker[] = [];
  const pricePoints: PricePoint[] = [];

  for (const record of ordered) {
    // Extend contiguous event runs; a gap closes the box and a new sighting
    // opens the next one.
    const active = new Set(record.active_event_ids);
    for (const [eventId, span] of openSpans) {
      if (!active.has(eventId)) {
        openSpans.delete(eventId);
      } else {
        span.toTick = record.tick;
      }
    }
    for (const eventId of active) {
      if (!openSpans.has(eventId)) {
        const span = { eventId, fromTick: record.tick, toTick: record.tick };
        openSpans.set(eventId, span);
        spans.push(span);
      }
    }

    if (record.posts.length > 0) {
      postMarkers.push({
        tick: record.tick,
        count: record.posts.length,
        titles: record.posts.map((p) => p.title),
      });
    }
    if (record.trades.length > 0) {
      tradeMarkers.push({
        tick: record.tick,
        count: record.trades.length,
        trades: record.trades.map((t) => ({
          tradeId: t.trade_id,
          commodity: t.commodity,
          quantity: t.quantity,
          buyerId: t.buyer_id,
          sellerId: t.seller_id,
          buyerReasoning: t.buyer_reasoning,
          sellerReasoning: t.seller_reasoning,
        })),
      });
    }
    const price = record.prices[commodity];
    if (price !== undefined) {
      pricePoints.push({ tick: record.tick, price });
    }
  }

  const first = ordered[0];
  const last = ordered[ordered.length - 1];
  return {
    commodity,
    fromTick: first ? first.tick : 0,
    toTick: last ? last.tick : 0,
    eventSpans: spans,
    postMarkers,
    tradeMarkers,
    pricePoints,
  };
}

export function postHoverLines(marker: PostMarker): string[] {
  return marker.titles;
}

export function tradeHoverLines(marker: TradeMarker): string[] {
  const lines: string[] = [];
  for (const t of marker.trades) {
    lines.push(`${t.tradeId} ${t.commodity} x${t.quantity}`);
    lines.push(`buyer ${t.buyerId}: ${t.buyerReasoning}`);
    lines.push(`seller ${t.sellerId}: ${t.sellerReasoning}`);
  }
  return lines;
}

// ---------- rendering ----------

const SVG_NS = 'http://www.w3.org/2000/svg';
const TICK_W = 16;
const PAD = 24;
const PRICE_H = 90;
const EVENT_ROW_Y = PRICE_H + 14;
const EVENT_ROW_H = 12;
const POST_ROW_Y = PRICE_H + 44;
const TRADE_ROW_Y = PRICE_H + 72;
const HEIGHT = PRICE_H + 96;

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string>,
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) {
    el.setAttribute(key, value);
  }
  return el;
}

function attachTooltip(
  target: Element,
  tooltip: HTMLElement,
  lines: () => string[],
): void {
  target.addEventListener('mouseenter', () => {
    tooltip.replaceChildren();
    for (const line of lines()) {
      const row = document.createElement('div');
      row.className = 'tooltip-line';
      row.textContent = line;
      tooltip.appendChild(row);
    }
    tooltip.style.display = 'block';
  });
  target.addEventListener('mouseleave', () => {
    tooltip.style.display = 'none';
  });
}

export interface TimelineRenderOptions {
  onTickClick?: (tick: number) => void;
}

/**
 * Render a view model into ``container`` (replacing previous content).
 *
 * Marker elements carry ``data-tick`` and ``data-count`` so callers and
 * tests can align them with the records they came from.
 */
export function renderTimeline(
  container: HTMLElement,
  vm: TimelineViewModel,
  opts: TimelineRenderOptions = {},
): void {
  const ticks = Math.max(vm.toTick - vm.fromTick, 0) + 1;
  const width = PAD * 2 + ticks * TICK_W;
  const x = (tick: number) => PAD + (tick - vm.fromTick) * TICK_W;

  const svg = svgEl('svg', {
    class: 'timeline',
    width: String(width),
    height: String(HEIGHT),
    viewBox: `0 0 ${width} ${HEIGHT}`,
  });
  const tooltip = document.createElement('div');
  tooltip.className = 'timeline-tooltip';
  tooltip.style.display = 'none';

  if (opts.onTickClick) {
    const pick = opts.onTickClick;
    svg.addEventListener('click', (event) => {
      const box = svg.getBoundingClientRect();
      const tick = vm.fromTick + Math.round((event.clientX - box.left - PAD) / TICK_W);
      pick(Math.min(Math.max(tick, vm.fromTick), vm.toTick));
    });
  }

  // Price polyline, scaled into the top band; a flat series sits mid-band.
  const values = vm.pricePoints.map((p) => Number(p.price));
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const y = (value: number) =>
    hi === lo ? PRICE_H / 2 : PRICE_H - ((value - lo) / (hi - lo)) * (PRICE_H - 10) - 5;
  if (vm.pricePoints.length > 0) {
    const points = vm.pricePoints
      .map((p) => `${x(p.tick)},${y(Number(p.price)).toFixed(2)}`)
      .join(' ');
    svg.appendChild(
      svgEl('polyline', {
        class: 'price-line',
        'data-commodity': vm.commodity,
        points,
        fill: 'none',
        stroke: '#444',
        'stroke-width': '1.5',
      }),
    );
  }

  for (const span of vm.eventSpans) {
    svg.appendChild(
      svgEl('rect', {
        class: 'event-span',
        'data-event-id': span.eventId,
        'data-from': String(span.fromTick),
        'data-to': String(span.toTick),
        x: String(x(span.fromTick) - TICK_W / 2),
        y: String(EVENT_ROW_Y),
        width: String((span.toTick - span.fromTick + 1) * TICK_W),
        height: String(EVENT_ROW_H),
        fill: '#2e9e4f',
        opacity: '0.8',
      }),
    );
  }

  for (const marker of vm.postMarkers) {
    const circle = svgEl('circle', {
      class: 'post-marker',
      'data-tick': String(marker.tick),
      'data-count': String(marker.count),
      cx: String(x(marker.tick)),
      cy: String(POST_ROW_Y),
      r: String(4 + Math.min(marker.count, 6)),
      fill: '#2b6fd4',
    });
    attachTooltip(circle, tooltip, () => postHoverLines(marker));
    svg.appendChild(circle);
    const label = svgEl('text', {
      class: 'post-count',
      x: String(x(marker.tick)),
      y: String(POST_ROW_Y + 4),
      'text-anchor': 'middle',
      'font-size': '9',
      fill: '#fff',
    });
    label.textContent = String(marker.count);
    svg.appendChild(label);
  }

  for (const marker of vm.tradeMarkers) {
    const size = 8 + Math.min(marker.count, 6);
    const box = svgEl('rect', {
      class: 'trade-marker',
      'data-tick': String(marker.tick),
      'data-count': String(marker.count),
      x: String(x(marker.tick) - size / 2),
      y: String(TRADE_ROW_Y - size / 2),
      width: String(size),
      height: String(size),
      transform: `rotate(45 ${x(marker.tick)} ${TRADE_ROW_Y})`,
      fill: '#d43b2b',
    });
    attachTooltip(box, tooltip, () => tradeHoverLines(marker));
    svg.appendChild(box);
    const label = svgEl('text', {
      class: 'trade-count',
      x: String(x(marker.tick)),
      y: String(TRADE_ROW_Y + 3),
      'text-anchor': 'middle',
      'font-size': '9',
      fill: '#fff',
    });
    label.textContent = String(marker.count);
    svg.appendChild(label);
  }

  container.replaceChildren(svg, tooltip);
}
