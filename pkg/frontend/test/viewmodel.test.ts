import { describe, expect, it } from 'vitest';

import { ApiError } from '../src/api.js';
import type {
  ApiClient,
  GraphPayload,
  QueryRequest,
  QueryResponse,
  VariablesPayload,
  WhatifRequest,
  WhatifResponse,
} from '../src/api.js';
import { newSession, setEvidence } from '../src/state.js';
import { buildQueryRequest, buildWhatifRequest, displayView, refresh } from '../src/viewmodel.js';

const VARIABLES = [
  { name: 'a', states: ['no', 'yes'] },
  { name: 'b', states: ['no', 'yes'] },
];

function queryResponse(pYes: number, evidence: Record<string, string>): QueryResponse {
  return {
    target: 'a',
    states: ['no', 'yes'],
    distribution: { no: 1 - pYes, yes: pYes },
    evidence,
    evidence_probability: 1.0,
    model_fingerprint: 'f'.repeat(64),
  };
}

function whatifResponse(delta: number): WhatifResponse {
  return {
    target: { variable: 'a', state: 'yes' },
    baseline_evidence: {},
    alternative_evidence: {},
    baseline_probability: 0.5,
    alternative_probability: 0.5 + delta,
    delta,
    model_fingerprint: 'f'.repeat(64),
  };
}

interface Deferred<T> {
  promise: Promise<T>;
  resolve: (value: T) => void;
  reject: (err: unknown) => void;
}

function deferred<T>(): Deferred<T> {
  let resolve!: (value: T) => void;
  let reject!: (err: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

/** Client whose responses are resolved by hand, to script response order. */
class ManualClient implements ApiClient {
  queries: Array<{ request: QueryRequest; deferred: Deferred<QueryResponse> }> = [];
  whatifs: Array<{ request: WhatifRequest; deferred: Deferred<WhatifResponse> }> = [];

  variables(): Promise<VariablesPayload> {
    throw new Error('not used');
  }
  graph(): Promise<GraphPayload> {
    throw new Error('not used');
  }
  query(request: QueryRequest): Promise<QueryResponse> {
    const entry = { request, deferred: deferred<QueryResponse>() };
    this.queries.push(entry);
    return entry.deferred.promise;
  }
  whatif(request: WhatifRequest): Promise<WhatifResponse> {
    const entry = { request, deferred: deferred<WhatifResponse>() };
    this.whatifs.push(entry);
    return entry.deferred.promise;
  }
}

describe('request building', () => {
  it('snapshots evidence so later edits cannot mutate an in-flight request', () => {
    const session = newSession(VARIABLES, 'a');
    setEvidence(session, 'b', 'yes');
    const request = buildQueryRequest(session);
    setEvidence(session, 'b', 'no');
    expect(request.evidence).toEqual({ b: 'yes' });
    const whatif = buildWhatifRequest(session);
    expect(whatif.target).toEqual({ variable: 'a', state: 'yes' });
    expect(whatif.alternative).toEqual({ b: 'no' });
    expect(whatif.baseline).toEqual({});
  });
});

describe('refresh', () => {
  it('last-issued request wins even when responses arrive out of order', async () => {
    const session = newSession(VARIABLES, 'a');
    const client = new ManualClient();

    const first = refresh(session, client); // sequence 1
    setEvidence(session, 'b', 'yes');
    const second = refresh(session, client); // sequence 2

    // resolve the NEWER pair first...
    client.queries[1].deferred.resolve(queryResponse(0.9, { b: 'yes' }));
    client.whatifs[1].deferred.resolve(whatifResponse(0.4));
    expect(await second).toBe(true);

    // ...then the stale pair trickles in and must be ignored
    client.queries[0].deferred.resolve(queryResponse(0.5, {}));
    client.whatifs[0].deferred.resolve(whatifResponse(0.0));
    expect(await first).toBe(false);

    const view = displayView(session);
    expect(view.bars.find((b) => b.state === 'yes')?.label).toBe('90.0%');
    expect(view.deltaBadge).toBe('+40.0');
  });

  it('422 shows the contradictory-evidence banner and keeps previous values', async () => {
    const session = newSession(VARIABLES, 'a');
    const client = new ManualClient();

    const ok = refresh(session, client);
    client.queries[0].deferred.resolve(queryResponse(0.7, {}));
    client.whatifs[0].deferred.resolve(whatifResponse(0.1));
    expect(await ok).toBe(true);

    const rejected = refresh(session, client);
    const error = new ApiError(422, {
      code: 'impossible_evidence',
      message: 'evidence has zero probability',
      detail: { evidence: { b: 'yes' } },
    });
    client.queries[1].deferred.reject(error);
    client.whatifs[1].deferred.reject(error);
    expect(await rejected).toBe(false);

    const view = displayView(session);
    expect(view.banner).toMatch(/[Cc]ontradictory evidence/);
    expect(view.bars.find((b) => b.state === 'yes')?.label).toBe('70.0%');
    expect(view.deltaBadge).toBe('+10.0');

    // a later healthy refresh clears the banner
    const recovered = refresh(session, client);
    client.queries[2].deferred.resolve(queryResponse(0.6, {}));
    client.whatifs[2].deferred.resolve(whatifResponse(0.05));
    expect(await recovered).toBe(true);
    expect(displayView(session).banner).toBeNull();
  });

  it('non-422 failures propagate to the caller', async () => {
    const session = newSession(VARIABLES, 'a');
    const client = new ManualClient();
    const failing = refresh(session, client);
    const error = new ApiError(400, {
      code: 'unknown_variable',
      message: 'no such variable',
      detail: null,
    });
    client.queries[0].deferred.reject(error);
    client.whatifs[0].deferred.reject(error);
    await expect(failing).rejects.toThrow(/no such variable/);
  });
});
