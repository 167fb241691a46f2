/**
 * Event-injection popup for a selected (branch, tick).
 *
 * Collects title/body/impacts/window, validates inline, and submits to the
 * inject endpoint. Injecting at a past tick creates a sibling branch; when
 * the service answers FORKED_INTO the popup hands the new branch id to the
 * caller so the tree can focus it.
 */

import { ApiError } from './api.js';
import type { EventDraft, InjectOut } from './types.js';

export type ImpactParse =
  | { ok: true; impacts: Record<string, string> }
  | { ok: false; error: string };

/** Parse "OIL:0.5,GOLD:-0.1" with the service's bounds mirrored client-side. */
export function parseImpacts(raw: string): ImpactParse {
  const impacts: Record<string, string> = {};
  const trimmed = raw.trim();
  if (!trimmed) {
    return { ok: false, error: 'at least one impact, like OIL:0.5' };
  }
  for (const part of trimmed.split(',')) {
    const [commodity, value, ...extra] = part.split(':').map((s) => s.trim());
    if (!commodity || !value || extra.length > 0) {
      return { ok: false, error: `expected COMMODITY:value, got "${part.trim()}"` };
    }
    const parsed = Number(value);
    if (!Number.isFinite(parsed)) {
      return { ok: false, error: `${commodity}: "${value}" is not a number` };
    }
    if (Math.abs(parsed) > 1) {
      return { ok: false, error: `${commodity}: impact must be within [-1, 1]` };
    }
    impacts[commodity] = value;
  }
  return { ok: true, impacts };
}

export interface DraftProblems {
  title?: string;
  impacts?: string;
  start?: string;
  duration?: string;
  halfLife?: string;
}

export function validateDraft(fields: {
  title: string;
  impacts: string;
  start: string;
  duration: string;
  halfLife: string;
}): DraftProblems {
  const problems: DraftProblems = {};
  if (!fields.title.trim()) {
    problems.title = 'title is required';
  }
  const impacts = parseImpacts(fields.impacts);
  if (!impacts.ok) {
    problems.impacts = impacts.error;
  }
  const start = Number(fields.start);
  if (!Number.isInteger(start) || start < 0) {
    problems.start = 'start tick must be a non-negative integer';
  }
  const duration = Number(fields.duration);
  if (!Number.isInteger(duration) || duration < 1) {
    problems.duration = 'duration must be at least 1 tick';
  }
  const halfLife = Number(fields.halfLife);
  if (!Number.isInteger(halfLife) || halfLife < 1) {
    problems.halfLife = 'half-life must be at least 1 tick';
  }
  return problems;
}

export interface InjectionPopupOptions {
  branchId: string;
  tick: number;
  headTick: number;
  inject: (branchId: string, event: EventDraft, autoFork: boolean) => Promise<InjectOut>;
  onForked?: (childBranchId: string) => void;
  onScheduled?: (eventId: string) => void;
  onClose?: () => void;
}

export interface InjectionPopupHandle {
  element: HTMLElement;
  close: () => void;
}

function field(
  form: HTMLFormElement,
  labelText: string,
  name: string,
  value: string,
  kind: 'input' | 'textarea' = 'input',
): HTMLInputElement | HTMLTextAreaElement {
  const row = document.createElement('label');
  row.className = 'popup-field';
  const caption = document.createElement('span');
  caption.textContent = labelText;
  row.appendChild(caption);
  const control = document.createElement(kind);
  control.setAttribute('name', name);
  control.value = value;
  row.appendChild(control);
  const error = document.createElement('div');
  error.className = 'field-error';
  error.dataset.for = name;
  row.appendChild(error);
  form.appendChild(row);
  return control;
}

export function openInjectionPopup(
  container: HTMLElement,
  opts: InjectionPopupOptions,
): InjectionPopupHandle {
  const popup = document.createElement('div');
  popup.className = 'injection-popup';

  const heading = document.createElement('h3');
  heading.textContent = `Inject event at ${opts.branchId} @ tick ${opts.tick}`;
  popup.appendChild(heading);

  const form = document.createElement('form');
  const title = field(form, 'Title', 'title', '');
  const body = field(form, 'Body', 'body', '', 'textarea');
  const impacts = field(form, 'Impacts', 'impacts', '');
  const start = field(form, 'Start tick', 'start', String(opts.tick));
  const duration = field(form, 'Duration', 'duration', '10');
  const halfLife = field(form, 'Half-life', 'half-life', '5');

  const forkRow = document.createElement('label');
  forkRow.className = 'popup-field';
  const autoFork = document.createElement('input');
  autoFork.type = 'checkbox';
  autoFork.setAttribute('name', 'auto-fork');
  // A past tick cannot be rewritten in place, so forking is the useful default.
  autoFork.checked = opts.tick <= opts.headTick;
  forkRow.appendChild(autoFork);
  forkRow.appendChild(document.createTextNode(' fork a new branch at this tick'));
  form.appendChild(forkRow);

  const errorBox = document.createElement('div');
  errorBox.className = 'popup-error';
  form.appendChild(errorBox);

  const submit = document.createElement('button');
  submit.type = 'submit';
  submit.className = 'popup-submit';
  submit.textContent = 'Inject';
  form.appendChild(submit);
  popup.appendChild(form);

  const close = () => {
    popup.remove();
    opts.onClose?.();
  };

  const revalidate = () => {
    const problems = validateDraft({
      title: title.value,
      impacts: impacts.value,
      start: start.value,
      duration: duration.value,
      halfLife: halfLife.value,
    });
    for (const [name, message] of [
      ['title', problems.title],
      ['impacts', problems.impacts],
      ['start', problems.start],
      ['duration', problems.duration],
      ['half-life', problems.halfLife],
    ] as const) {
      const slot = form.querySelector<HTMLElement>(`.field-error[data-for="${name}"]`);
      if (slot) {
        slot.textContent = message ?? '';
      }
    }
    submit.disabled = Object.values(problems).some((p) => p !== undefined);
  };

  for (const control of [title, impacts, start, duration, halfLife]) {
    control.addEventListener('input', revalidate);
  }
  revalidate();

  form.addEventListener('submit', (event) => {
    event.preventDefault();
    const parsed = parseImpacts(impacts.value);
    if (!parsed.ok || submit.disabled) {
      return;
    }
    const draft: EventDraft = {
      title: title.value.trim(),
      body: body.value,
      impacts: parsed.impacts,
      start_tick: Number(start.value),
      duration_ticks: Number(duration.value),
      half_life_ticks: Number(halfLife.value),
    };
    submit.disabled = true;
    opts
      .inject(opts.branchId, draft, autoFork.checked)
      .then((outcome) => {
        if (outcome.outcome === 'FORKED_INTO') {
          opts.onForked?.(outcome.branch_id);
        } else {
          opts.onScheduled?.(outcome.event_id);
        }
        close();
      })
      .catch((err: unknown) => {
        errorBox.textContent =
          err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
        submit.disabled = false;
      });
  });

  container.appendChild(popup);
  return { element: popup, close };
}
