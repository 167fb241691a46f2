/**
 * Branch tree: every branch as a horizontal lane, tick-aligned left to
 * right, with its fork point connected to the parent lane. Mirrors the
 * service's branch list exactly; layout only adds lane rows.
 */

import type { BranchNode } from './types.js';

export interface TreeNodeVM {
  branchId: string;
  parentId: string | null;
  forkTick: number | null;
  headTick: number;
  label: string;
  status: string;
  eventCount: number;
  row: number;
  selected: boolean;
}

export interface BranchTreeViewModel {
  nodes: TreeNodeVM[];
  maxTick: number;
  selectedId: string | null;
}

export function buildBranchTreeViewModel(
  branches: BranchNode[],
  selectedId: string | null = null,
): BranchTreeViewModel {
  const byParent = new Map<string | null, BranchNode[]>();
  for (const branch of branches) {
    const siblings = byParent.get(branch.parent_id) ?? [];
    siblings.push(branch);
    byParent.set(branch.parent_id, siblings);
  }
  for (const siblings of byParent.values()) {
    siblings.sort(
      (a, b) => (a.fork_tick ?? 0) - (b.fork_tick ?? 0) || a.branch_id.localeCompare(b.branch_id),
    );
  }

  const nodes: TreeNodeVM[] = [];
  let nextRow = 0;
  const place = (branch: BranchNode) => {
    nodes.push({
      branchId: branch.branch_id,
      parentId: branch.parent_id,
      forkTick: branch.fork_tick,
      headTick: branch.head_tick,
      label: branch.label,
      status: branch.status,
      eventCount: branch.event_count,
      row: nextRow,
      selected: branch.branch_id === selectedId,
    });
    nextRow += 1;
    for (const child of byParent.get(branch.branch_id) ?? []) {
      place(child);
    }
  };
  for (const root of byParent.get(null) ?? []) {
    place(root);
  }

  return {
    nodes,
    maxTick: Math.max(0, ...branches.map((b) => b.head_tick)),
    selectedId,
  };
}

// ---------- rendering ----------

const SVG_NS = 'http://www.w3.org/2000/svg';
const TICK_W = 8;
const ROW_H = 34;
const LABEL_W = 150;
const PAD = 12;

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

export function renderBranchTree(
  container: HTMLElement,
  vm: BranchTreeViewModel,
  onSelect?: (branchId: string) => void,
): void {
  const width = LABEL_W + PAD * 2 + (vm.maxTick + 1) * TICK_W;
  const height = PAD * 2 + vm.nodes.length * ROW_H;
  const x = (tick: number) => LABEL_W + PAD + tick * TICK_W;
  const y = (row: number) => PAD + row * ROW_H + ROW_H / 2;

  const svg = svgEl('svg', {
    class: 'branch-tree',
    width: String(width),
    height: String(height),
    viewBox: `0 0 ${width} ${height}`,
  });

  const rowByBranch = new Map(vm.nodes.map((n) => [n.branchId, n.row]));
  for (const node of vm.nodes) {
    const group = svgEl('g', {
      class: node.selected ? 'branch-node selected' : 'branch-node',
      'data-branch-id': node.branchId,
    });

    // Fork connector drops from the parent lane to this lane at the fork tick.
    if (node.parentId !== null && node.forkTick !== null) {
      const parentRow = rowByBranch.get(node.parentId);
      if (parentRow !== undefined) {
        group.appendChild(
          svgEl('line', {
            class: 'fork-connector',
            x1: String(x(node.forkTick)),
            y1: String(y(parentRow)),
            x2: String(x(node.forkTick)),
            y2: String(y(node.row)),
            stroke: '#999',
            'stroke-dasharray': '3 2',
          }),
        );
      }
    }

    group.appendChild(
      svgEl('line', {
        class: 'branch-lane',
        'data-from': String(node.forkTick ?? 0),
        'data-to': String(node.headTick),
        x1: String(x(node.forkTick ?? 0)),
        y1: String(y(node.row)),
        x2: String(x(node.headTick)),
        y2: String(y(node.row)),
        stroke: node.selected ? '#1a56b0' : '#555',
        'stroke-width': node.selected ? '3' : '2',
      }),
    );
    group.appendChild(
      svgEl('circle', {
        class: 'branch-head',
        cx: String(x(node.headTick)),
        cy: String(y(node.row)),
        r: '4',
        fill: '#555',
      }),
    );

    const label = svgEl('text', {
      class: 'branch-label',
      x: '4',
      y: String(y(node.row) + 4),
      'font-size': '12',
    });
    label.textContent = node.label || node.branchId;
    group.appendChild(label);

    const badge = svgEl('text', {
      class: 'status-badge',
      'data-status': node.status,
      x: String(x(node.headTick) + 8),
      y: String(y(node.row) + 4),
      'font-size': '10',
      fill: '#888',
    });
    badge.textContent = `${node.status} @${node.headTick}`;
    group.appendChild(badge);

    if (onSelect) {
      group.addEventListener('click', () => onSelect(node.branchId));
    }
    svg.appendChild(group);
  }

  container.replaceChildren(svg);
}
