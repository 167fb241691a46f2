/**
 * A deterministic 30-record timeline for component tests: two overlapping
 * event windows, a handful of post bursts, and trades with distinct buyer
 * and seller reasoning so hover assertions are meaningful.
 */

import type { Post, TickRecord, Trade } from '../src/types.js';

export const FIXTURE_TICKS = 30;

export const POST_TITLES: Record<number, string[]> = {
  3: ['Oil looks tight', 'Buying the dip'],
  7: ['Wheat glut incoming'],
  12: ['Pipeline panic', 'Shorting wheat', 'Gold safe haven'],
  21: ['Cooling off'],
};

// tick -> [commodity, buyer, seller][]
export const TRADE_TABLE: Record<number, Array<[string, string, string]>> = {
  2: [['OIL', 'momo-1', 'value-2']],
  5: [
    ['GOLD', 'herd-3', 'value-1'],
    ['WHEAT', 'momo-2', 'contra-1'],
  ],
  13: [
    ['OIL', 'momo-1', 'value-1'],
    ['OIL', 'herd-2', 'contra-2'],
    ['GOLD', 'value-3', 'momo-3'],
  ],
  26: [['WHEAT', 'contra-1', 'herd-1']],
};

export function activeEventIds(tick: number): string[] {
  const ids: string[] = [];
  if (tick >= 11 && tick <= 20) {
    ids.push('evt-pipeline');
  }
  if (tick >= 15 && tick <= 17) {
    ids.push('evt-opec');
  }
  return ids;
}

export function buyerReasoning(tick: number, seq: number): string {
  return `momentum favors buying into tick ${tick} (trade ${seq})`;
}

export function sellerReasoning(tick: number, seq: number): string {
  return `price above anchor, selling at tick ${tick} (trade ${seq})`;
}

function makePosts(tick: number): Post[] {
  return (POST_TITLES[tick] ?? []).map((title, i) => ({
    post_id: `post-${tick}-${i}`,
    tick,
    author_id: `agent-${i + 1}`,
    title,
    body: `${title}, in detail.`,
    sentiment: i % 2 === 0 ? '0.400000' : '-0.250000',
    referenced_event_ids: activeEventIds(tick),
  }));
}

function makeTrades(tick: number): Trade[] {
  return (TRADE_TABLE[tick] ?? []).map(([commodity, buyer, seller], i) => ({
    trade_id: `trade-${String(tick).padStart(6, '0')}-${String(i).padStart(4, '0')}`,
    tick,
    commodity,
    buyer_id: buyer,
    seller_id: seller,
    price: (50 + tick + i).toFixed(4),
    quantity: i + 1,
    buyer_reasoning: buyerReasoning(tick, i),
    seller_reasoning: sellerReasoning(tick, i),
  }));
}

export function fixtureRecords(): TickRecord[] {
  const records: TickRecord[] = [];
  for (let tick = 0; tick < FIXTURE_TICKS; tick += 1) {
    const posts = makePosts(tick);
    const trades = makeTrades(tick);
    records.push({
      format_version: 1,
      tick,
      prices: {
        GOLD: (1900 - tick * 0.5).toFixed(4),
        OIL: (80 + tick * 0.25).toFixed(4),
        WHEAT: (6.5 + Math.sin(tick) * 0.01).toFixed(4),
      },
      trades,
      posts,
      active_event_ids: activeEventIds(tick),
      rejected_orders: [],
      adapter_events: [],
      post_count: posts.length,
      trade_count: trades.length,
      state_hash: `hash-${tick}`,
    });
  }
  return records;
}
