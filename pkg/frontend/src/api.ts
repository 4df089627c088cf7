// Typed client for the warehouse HTTP API. fetch is injectable so tests can
// count or stub requests.

export interface AttributeInfo {
  name: string;
  type: string;
  key: boolean;
}

export interface LevelInfo {
  id: string;
  depth: number;
  attributes: AttributeInfo[];
}

export interface DimensionInfo {
  id: string;
  document: string;
  levels: LevelInfo[];
}

export interface MeasureInfo {
  name: string;
  type: string;
  aggregate: string;
}

export interface FactClassInfo {
  id: string;
  document: string;
  measures: MeasureInfo[];
  dimensions: string[];
}

export interface SchemaInfo {
  dimensions: DimensionInfo[];
  fact_classes: FactClassInfo[];
}

export interface MemberInfo {
  id: string;
  attributes: Record<string, string | number>;
  parent: { level: string; id: string } | null;
}

export interface AxisInfo {
  label: string;
  level: string | null;
  coords: string[];
}

export interface CellInfo {
  coord: string[];
  measures: Record<string, number>;
}

export interface CubeResult {
  axes: AxisInfo[];
  measures: string[];
  cells: CellInfo[];
}

export type Format = "json" | "csv" | "xml";
export type Dialect = "xq31" | "xq10";

export class ApiRequestError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly opIndex: number | null,
    readonly status: number,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async checked(response: Response): Promise<Response> {
    if (response.ok) {
      return response;
    }
    let code = "http_error";
    let message = `${response.status} ${response.statusText}`;
    let opIndex: number | null = null;
    try {
      const body = await response.json();
      code = body.code ?? code;
      message = body.message ?? message;
      opIndex = body.op_index ?? null;
    } catch {
      // non-JSON error body; keep the status line
    }
    throw new ApiRequestError(code, message, opIndex, response.status);
  }

  async getSchema(): Promise<SchemaInfo> {
    const response = await this.checked(await this.fetchFn(`${this.baseUrl}/api/schema`));
    return response.json();
  }

  async getMembers(dimension: string, level: string): Promise<MemberInfo[]> {
    const url = `${this.baseUrl}/api/dimensions/${encodeURIComponent(dimension)}/members?level=${encodeURIComponent(level)}`;
    const response = await this.checked(await this.fetchFn(url));
    return (await response.json()).members;
  }

  async query(pipeline: unknown[]): Promise<CubeResult> {
    const response = await this.checked(
      await this.fetchFn(`${this.baseUrl}/api/query`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(pipeline),
      }),
    );
    return response.json();
  }

  async queryText(pipeline: unknown[], format: Format): Promise<string> {
    const response = await this.checked(
      await this.fetchFn(`${this.baseUrl}/api/query?format=${format}`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(pipeline),
      }),
    );
    return response.text();
  }

  async compile(pipeline: unknown[], dialect: Dialect = "xq31"): Promise<string> {
    const response = await this.checked(
      await this.fetchFn(`${this.baseUrl}/api/compile`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ pipeline, dialect }),
      }),
    );
    return (await response.json()).xquery;
  }

  async healthy(): Promise<boolean> {
    try {
      const response = await this.fetchFn(`${this.baseUrl}/healthz`);
      return response.ok;
    } catch {
      return false;
    }
  }
}
