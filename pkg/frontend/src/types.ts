/**
 * Wire shapes for the simulator service.
 *
 * Every payload is validated at the boundary with zod; the rest of the UI
 * works with the inferred types and never re-derives simulation data.
 * Decimal quantities (prices, sentiment, impacts) travel as strings and are
 * kept as strings; they are only converted to numbers for pixel math.
 */

import { z } from 'zod';

export const TradeSchema = z.object({
  trade_id: z.string(),
  tick: z.number().int(),
  commodity: z.string(),
  buyer_id: z.string(),
  seller_id: z.string(),
  price: z.string(),
  quantity: z.number().int(),
  buyer_reasoning: z.string(),
  seller_reasoning: z.string(),
});
export type Trade = z.infer<typeof TradeSchema>;

export const PostSchema = z.object({
  post_id: z.string(),
  tick: z.number().int(),
  author_id: z.string(),
  title: z.string(),
  body: z.string(),
  sentiment: z.string(),
  referenced_event_ids: z.array(z.string()),
});
export type Post = z.infer<typeof PostSchema>;

export const TickRecordSchema = z.object({
  format_version: z.number().int(),
  tick: z.number().int(),
  prices: z.record(z.string(), z.string()),
  trades: z.array(TradeSchema),
  posts: z.array(PostSchema),
  active_event_ids: z.array(z.string()),
  rejected_orders: z.array(z.unknown()),
  adapter_events: z.array(z.unknown()),
  post_count: z.number().int(),
  trade_count: z.number().int(),
  state_hash: z.string(),
});
export type TickRecord = z.infer<typeof TickRecordSchema>;

export const WorldEventSchema = z.object({
  event_id: z.string(),
  title: z.string(),
  body: z.string(),
  impacts: z.record(z.string(), z.string()),
  start_tick: z.number().int(),
  duration_ticks: z.number().int(),
  half_life_ticks: z.number().int(),
});
export type WorldEvent = z.infer<typeof WorldEventSchema>;

export const BranchNodeSchema = z.object({
  branch_id: z.string(),
  parent_id: z.string().nullable(),
  fork_tick: z.number().int().nullable(),
  head_tick: z.number().int(),
  seed: z.number().int(),
  label: z.string(),
  status: z.string(),
  event_count: z.number().int(),
});
export type BranchNode = z.infer<typeof BranchNodeSchema>;

export const SessionStateSchema = z.object({
  format_version: z.number().int(),
  session_id: z.string(),
  sim_id: z.string(),
  left: z.string(),
  right: z.string(),
  common_ancestor_tick: z.number().int(),
  control_state: z.record(z.string(), z.string()),
});
export type SessionState = z.infer<typeof SessionStateSchema>;

// ---------- response envelopes ----------

export const BranchTreeOutSchema = z.object({
  format_version: z.number().int(),
  simulation_id: z.string(),
  branches: z.array(BranchNodeSchema),
});
export type BranchTreeOut = z.infer<typeof BranchTreeOutSchema>;

export const BranchOutSchema = BranchNodeSchema.extend({
  format_version: z.number().int(),
  simulation_id: z.string(),
});
export type BranchOut = z.infer<typeof BranchOutSchema>;

export const TimelineOutSchema = z.object({
  format_version: z.number().int(),
  branch_id: z.string(),
  from_tick: z.number().int(),
  to_tick: z.number().int(),
  records: z.array(TickRecordSchema),
});
export type TimelineOut = z.infer<typeof TimelineOutSchema>;

export const AdvanceOutSchema = z.object({
  format_version: z.number().int(),
  branch_id: z.string(),
  head_tick: z.number().int(),
  status: z.string(),
  records: z.array(TickRecordSchema),
});
export type AdvanceOut = z.infer<typeof AdvanceOutSchema>;

export const InjectOutSchema = z.object({
  format_version: z.number().int(),
  outcome: z.enum(['SCHEDULED', 'FORKED_INTO']),
  branch_id: z.string(),
  event_id: z.string(),
});
export type InjectOut = z.infer<typeof InjectOutSchema>;

export const SessionOutSchema = z.object({
  format_version: z.number().int(),
  session: SessionStateSchema,
});

export const ReplayOutSchema = z.object({
  format_version: z.number().int(),
  branch_id: z.string(),
  head_tick: z.number().int(),
  final_state_hash: z.string(),
});
export type ReplayOut = z.infer<typeof ReplayOutSchema>;

export const ApiErrorPayloadSchema = z.object({
  code: z.string(),
  message: z.string(),
  problems: z.array(z.array(z.string())).nullish(),
});
export type ApiErrorPayload = z.infer<typeof ApiErrorPayloadSchema>;

/** Event fields collected by the injection popup, pre-validation. */
export interface EventDraft {
  title: string;
  body: string;
  impacts: Record<string, string>;
  start_tick: number;
  duration_ticks: number;
  half_life_ticks: number;
}
