/**
 * Turns session state into displayable strings by round-tripping the service.
 *
 * Every refresh issues one /query (posterior bars) and one /whatif (delta
 * badge vs the pinned baseline). Responses carry the sequence number they
 * were issued under; anything superseded is discarded unseen.
 */

import { ApiError } from './api.js';
import type { ApiClient, QueryRequest, WhatifRequest } from './api.js';
import { formatDelta, formatPercent } from './format.js';
import { acceptResponse, nextSequence } from './state.js';
import type { SessionState } from './state.js';

export interface BarView {
  state: string;
  /** Raw probability as received; kept for bar geometry only. */
  share: number;
  /** The displayed figure, e.g. "84.6%". */
  label: string;
}

export interface DisplayView {
  target: string;
  targetState: string;
  bars: BarView[];
  evidenceLabel: string;
  deltaBadge: string;
  banner: string | null;
  fingerprint: string;
}

export function buildQueryRequest(session: SessionState): QueryRequest {
  return {
    target: { variable: session.target.variable },
    evidence: { ...session.evidence },
  };
}

export function buildWhatifRequest(session: SessionState): WhatifRequest {
  return {
    target: { ...session.target },
    baseline: { ...session.baseline },
    alternative: { ...session.evidence },
  };
}

/**
 * Issue both requests for the current state and fold the answers back in.
 * Returns true when this refresh's responses were displayed, false when a
 * newer refresh overtook it or the server rejected the evidence.
 */
export async function refresh(session: SessionState, client: ApiClient): Promise<boolean> {
  const sequence = nextSequence(session);
  const queryRequest = buildQueryRequest(session);
  const whatifRequest = buildWhatifRequest(session);
  try {
    const [query, whatif] = await Promise.all([
      client.query(queryRequest),
      client.whatif(whatifRequest),
    ]);
    if (!acceptResponse(session, sequence)) {
      return false;
    }
    session.latestQuery = query;
    session.latestWhatif = whatif;
    session.banner = null;
    return true;
  } catch (err) {
    if (err instanceof ApiError && err.status === 422) {
      // Contradictory evidence: show the banner, keep the previous numbers.
      if (acceptResponse(session, sequence)) {
        session.banner = 'Contradictory evidence — probabilities kept from the previous view.';
      }
      return false;
    }
    throw err;
  }
}

/** Project the latest accepted responses into ready-to-render strings. */
export function displayView(session: SessionState): DisplayView {
  const query = session.latestQuery;
  const whatif = session.latestWhatif;
  const bars: BarView[] = query
    ? query.states.map((state) => ({
        state,
        share: query.distribution[state],
        label: formatPercent(query.distribution[state]),
      }))
    : [];
  return {
    target: session.target.variable,
    targetState: session.target.state,
    bars,
    evidenceLabel: query ? `P(evidence) = ${formatPercent(query.evidence_probability)}` : '',
    deltaBadge: whatif ? formatDelta(whatif.delta) : '',
    banner: session.banner,
    fingerprint: query ? query.model_fingerprint : '',
  };
}
