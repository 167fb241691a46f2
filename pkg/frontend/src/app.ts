/**
 * Page bootstrap: branch tree on the left, the selected branch's timeline
 * on the right, an inject button for the selected (branch, tick), and an
 * A/B view for any two branches.
 *
 * Reads ?api=<base url>&sim=<simulation id> from the query string.
 */

import { ApiClient, subscribeTicks } from './api.js';
import type { StreamHandlers } from './api.js';
import { buildBranchTreeViewModel, renderBranchTree } from './branchTree.js';
import { AbDashboard } from './dashboard.js';
import type { DashboardService, Side } from './dashboard.js';
import { openInjectionPopup } from './injectionPopup.js';
import { buildTimelineViewModel, renderTimeline } from './timeline.js';

interface AppState {
  selectedBranch: string | null;
  selectedTick: number | null;
  headTick: number;
  comparePick: boolean;
  commodity: string;
  dashboard: AbDashboard | null;
}

export function bootApp(root: HTMLElement, baseUrl: string, simId: string): void {
  const api = new ApiClient(baseUrl);
  const state: AppState = {
    selectedBranch: null,
    selectedTick: null,
    headTick: 0,
    comparePick: false,
    commodity: 'OIL',
    dashboard: null,
  };

  root.replaceChildren();
  const toolbar = document.createElement('div');
  toolbar.className = 'toolbar';
  const statusLine = document.createElement('span');
  statusLine.className = 'status-line';
  const injectBtn = document.createElement('button');
  injectBtn.textContent = 'Inject at selected tick';
  injectBtn.disabled = true;
  const compareBtn = document.createElement('button');
  compareBtn.textContent = 'Compare with...';
  compareBtn.disabled = true;
  toolbar.append(injectBtn, compareBtn, statusLine);

  const layout = document.createElement('div');
  layout.className = 'layout';
  const treePane = document.createElement('div');
  treePane.className = 'tree-pane';
  const chartPane = document.createElement('div');
  chartPane.className = 'chart-pane';
  const abPane = document.createElement('div');
  abPane.className = 'ab-pane';
  layout.append(treePane, chartPane);
  root.append(toolbar, layout, abPane);

  const setStatus = (text: string) => {
    statusLine.textContent = text;
  };

  const refreshTree = async () => {
    const tree = await api.branchTree(simId);
    renderBranchTree(
      treePane,
      buildBranchTreeViewModel(tree.branches, state.selectedBranch),
      (branchId) => void onBranchClick(branchId),
    );
  };

  const loadTimeline = async (branchId: string) => {
    const records = await api.timeline(branchId);
    state.headTick = records.length ? records[records.length - 1]!.tick : 0;
    renderTimeline(chartPane, buildTimelineViewModel(records, state.commodity), {
      onTickClick: (tick) => {
        state.selectedTick = tick;
        injectBtn.disabled = false;
        setStatus(`${branchId} @ tick ${tick}`);
      },
    });
  };

  const openAb = async (left: string, right: string) => {
    state.dashboard?.dispose();
    const session = await api.openSession(left, right);
    const service: DashboardService = {
      timeline: (branchId, fromTick, toTick) => api.timeline(branchId, fromTick ?? 0, toTick),
      control: (sessionId, side: Side, action, nTicks) =>
        api.control(sessionId, side, action, nTicks),
      subscribe: (branchId, fromTick, handlers: StreamHandlers) =>
        subscribeTicks(baseUrl, branchId, fromTick, handlers),
    };
    state.dashboard = new AbDashboard(abPane, session, service, { commodity: state.commodity });
    await state.dashboard.start();
    setStatus(`comparing ${left} vs ${right} (ancestor tick ${session.common_ancestor_tick})`);
  };

  const onBranchClick = async (branchId: string) => {
    if (state.comparePick && state.selectedBranch && branchId !== state.selectedBranch) {
      state.comparePick = false;
      await openAb(state.selectedBranch, branchId);
      await refreshTree();
      return;
    }
    state.selectedBranch = branchId;
    state.selectedTick = null;
    injectBtn.disabled = true;
    compareBtn.disabled = false;
    setStatus(branchId);
    await refreshTree();
    await loadTimeline(branchId);
  };

  injectBtn.addEventListener('click', () => {
    if (state.selectedBranch === null || state.selectedTick === null) {
      return;
    }
    openInjectionPopup(root, {
      branchId: state.selectedBranch,
      tick: state.selectedTick,
      headTick: state.headTick,
      inject: (branchId, event, autoFork) => api.inject(branchId, event, autoFork),
      onForked: (childId) => {
        state.selectedBranch = childId;
        void refreshTree().then(() => loadTimeline(childId));
      },
      onScheduled: () => void loadTimeline(state.selectedBranch!),
    });
  });

  compareBtn.addEventListener('click', () => {
    state.comparePick = true;
    setStatus('pick the branch to compare against');
  });

  void refreshTree();
}

declare global {
  interface Window {
    bootApp?: typeof bootApp;
  }
}

if (typeof window !== 'undefined' && typeof document !== 'undefined') {
  window.bootApp = bootApp;
  const params = new URLSearchParams(window.location.search);
  const mount = document.getElementById('app');
  if (mount) {
    bootApp(
      mount,
      params.get('api') ?? 'http://127.0.0.1:8000',
      params.get('sim') ?? 'oil-demo',
    );
  }
}
