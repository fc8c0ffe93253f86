/**
 * Typed client for the surveybn HTTP service.
 *
 * The UI performs no probability math of its own, so these payload shapes are
 * the single source of every number it can display.
 */

export type EvidenceMap = Record<string, string>;

export interface VariableInfo {
  name: string;
  states: string[];
}

export interface VariablesPayload {
  variables: VariableInfo[];
  model_fingerprint: string;
}

export interface GraphEdge {
  from: string;
  to: string;
  frequency: number | null;
}

export interface GraphPayload {
  nodes: string[];
  edges: GraphEdge[];
  model_fingerprint: string;
}

export interface QueryRequest {
  target: { variable: string };
  evidence: EvidenceMap;
}

export interface QueryResponse {
  target: string;
  states: string[];
  distribution: Record<string, number>;
  evidence: EvidenceMap;
  evidence_probability: number;
  model_fingerprint: string;
}

export interface WhatifRequest {
  target: { variable: string; state: string };
  baseline: EvidenceMap;
  alternative: EvidenceMap;
}

export interface WhatifResponse {
  target: { variable: string; state: string };
  baseline_evidence: EvidenceMap;
  alternative_evidence: EvidenceMap;
  baseline_probability: number;
  alternative_probability: number;
  delta: number;
  model_fingerprint: string;
}

/** Error body the service returns for every 4xx. */
export interface ErrorBody {
  code: string;
  message: string;
  detail: unknown;
}

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly detail: unknown;

  constructor(status: number, body: ErrorBody) {
    super(body.message);
    this.status = status;
    this.code = body.code;
    this.detail = body.detail;
  }
}

/** What the view model needs; tests substitute fixture-backed fakes. */
export interface ApiClient {
  variables(): Promise<VariablesPayload>;
  graph(): Promise<GraphPayload>;
  query(request: QueryRequest): Promise<QueryResponse>;
  whatif(request: WhatifRequest): Promise<WhatifResponse>;
}

export class HttpClient implements ApiClient {
  constructor(private readonly baseUrl: string) {}

  private async get<T>(path: string): Promise<T> {
    const resp = await fetch(this.baseUrl + path);
    return this.unwrap<T>(resp);
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const resp = await fetch(this.baseUrl + path, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    });
    return this.unwrap<T>(resp);
  }

  private async unwrap<T>(resp: Response): Promise<T> {
    const doc = await resp.json();
    if (!resp.ok) {
      throw new ApiError(resp.status, doc as ErrorBody);
    }
    return doc as T;
  }

  variables(): Promise<VariablesPayload> {
    return this.get('/variables');
  }

  graph(): Promise<GraphPayload> {
    return this.get('/graph');
  }

  query(request: QueryRequest): Promise<QueryResponse> {
    return this.post('/query', request);
  }

  whatif(request: WhatifRequest): Promise<WhatifResponse> {
    return this.post('/whatif', request);
  }
}
