/**
 * Session state for one browser tab.
 *
 * Pure data + transition functions; no DOM and no HTTP. The view model layer
 * reads requests off this state and writes responses back, guarded by the
 * request sequence number so a slow response can never overwrite a newer one.
 */

import type { EvidenceMap, QueryResponse, VariableInfo, WhatifResponse } from './api.js';

export interface SessionState {
  variables: VariableInfo[];
  /** Current evidence the analyst has set. Never contains the target. */
  evidence: EvidenceMap;
  /** Pinned comparison point for the delta badge. Never contains the target. */
  baseline: EvidenceMap;
  target: { variable: string; state: string };
  /** Last request sequence number issued / last one whose response was shown. */
  issued: number;
  applied: number;
  latestQuery: QueryResponse | null;
  latestWhatif: WhatifResponse | null;
  /** Inline banner text (e.g. contradictory evidence); null when healthy. */
  banner: string | null;
}

function variableInfo(session: SessionState, name: string): VariableInfo {
  const info = session.variables.find((v) => v.name === name);
  if (!info) {
    throw new Error(`unknown variable: ${name}`);
  }
  return info;
}

/** Start a session on the given variable list, targeting `target`'s last
 * state (for yes/no variables that is "yes"). */
export function newSession(variables: VariableInfo[], target: string): SessionState {
  if (variables.length === 0) {
    throw new Error('variable list is empty');
  }
  const session: SessionState = {
    variables,
    evidence: {},
    baseline: {},
    target: { variable: '', state: '' },
    issued: 0,
    applied: 0,
    latestQuery: null,
    latestWhatif: null,
    banner: null,
  };
  selectTarget(session, target);
  return session;
}

/** Change the queried variable; evidence may never mention the target, so any
 * existing entries for it are dropped from both maps. */
export function selectTarget(session: SessionState, variable: string, state?: string): void {
  const info = variableInfo(session, variable);
  const chosen = state ?? info.states[info.states.length - 1];
  if (!info.states.includes(chosen)) {
    throw new Error(`variable ${variable} has no state ${chosen}`);
  }
  session.target = { variable, state: chosen };
  delete session.evidence[variable];
  delete session.baseline[variable];
}

export function setEvidence(session: SessionState, variable: string, state: string): void {
  if (variable === session.target.variable) {
    throw new Error('the target variable cannot carry evidence');
  }
  const info = variableInfo(session, variable);
  if (!info.states.includes(state)) {
    throw new Error(`variable ${variable} has no state ${state}`);
  }
  session.evidence[variable] = state;
}

export function clearEvidence(session: SessionState, variable: string): void {
  delete session.evidence[variable];
}

export function clearAllEvidence(session: SessionState): void {
  session.evidence = {};
}

/** Freeze the current evidence as the comparison point for future deltas. */
export function pinBaseline(session: SessionState): void {
  session.baseline = { ...session.evidence };
}

/** Reserve the next request sequence number. */
export function nextSequence(session: SessionState): number {
  session.issued += 1;
  return session.issued;
}

/**
 * True when a response with this sequence number is still current and may be
 * displayed; stale (superseded) responses must be dropped by the caller.
 */
export function acceptResponse(session: SessionState, sequence: number): boolean {
  if (sequence < session.applied) {
    return false;
  }
  session.applied = sequence;
  return true;
}
