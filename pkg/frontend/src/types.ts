/** Payload shapes for every service endpoint the workbench consumes.
 *
 * These mirror the server responses verbatim. The UI never recomputes a
 * displayed number (coherence, capacity, jaccard); it only renders what the
 * service sends.
 */

export interface CorpusDoc {
  id: string;
  title: string;
  date: string; // ISO date
  text?: string;
}

export interface CorpusPayload {
  count: number;
  documents: CorpusDoc[];
}

export interface SparsificationInfo {
  edges_before: number;
  edges_after: number;
  mst_min_weight: number;
  threshold: number;
  tree_edges: [string, string][];
}

export interface GraphSummaryPayload {
  nodes: number;
  edges: number;
  tau: number;
  sparsification: SparsificationInfo;
}

export interface ProjectionPoint {
  doc_id: string;
  title: string;
  date: string;
  x: number;
  y: number;
}

/** Kernel density over the projection plane, evaluated on a regular grid. */
export interface DensityGrid {
  x: number[];
  y: number[];
  values: number[][]; // indexed [row][col] = [y][x]
  bandwidth: [number, number];
}

export interface ProjectionPayload {
  points: ProjectionPoint[];
  density: DensityGrid;
}

export interface AgendaInfo {
  id: string;
  text: string;
  category: string;
}

export interface AgendasPayload {
  agendas: AgendaInfo[];
}

export type ExtractMethod = "max_capacity" | "keyword" | "llm_direct" | "llm_cot";

export interface ExtractRequestBody {
  source: string;
  target: string;
  method: ExtractMethod;
  agenda_id?: string;
  agenda_text?: string;
  agenda_category?: string;
  k?: number;
}

export interface JobAccepted {
  job_id: string;
  state: string;
}

export type JobStateName = "queued" | "running" | "done" | "failed" | "no_path";

export interface JobPayload {
  job_id: string;
  request: Record<string, unknown>;
  state: JobStateName;
  progress: number;
  storyline_id: string | null;
  error: string | null;
  events?: TraceStep[]; // present only when polled with ?events=1
}

export interface JobListPayload {
  jobs: JobPayload[];
}

export interface TraceCandidate {
  index: number;
  doc_id: string;
  title: string;
  weight: number;
  capacity: number;
}

/** One oracle consultation during a search. */
export interface TraceStep {
  step: number;
  node: string;
  candidates: TraceCandidate[];
  ranking: number[];
  source: string;
}

export interface EndEvent {
  state: JobStateName;
  storyline_id: string | null;
  error: string | null;
}

export interface StorylineBody {
  doc_ids: string[];
  capacity: number;
  method: string;
  agenda_id: string | null;
  oracle_call_count: number;
}

export interface StorylineRow extends StorylineBody {
  id: string;
  job_id: string;
}

export interface StorylineListPayload {
  storylines: StorylineRow[];
}

export interface TrailPoint {
  doc_id: string;
  x: number;
  y: number;
}

export interface TrailPath {
  method: string;
  agenda_id: string | null;
  style: string;
  capacity: number;
  points: TrailPoint[];
}

export interface TrailEndpoint {
  doc_id: string;
  role: "source" | "target";
  x: number;
  y: number;
}

export interface TrailsPayload {
  schema: string;
  paths: TrailPath[];
  endpoints: TrailEndpoint[];
  shared_doc_ids: string[];
  density: DensityGrid;
}

export interface MapNode {
  id: string;
  title: string;
  date: string;
}

export interface MapEdge {
  src: string;
  dst: string;
  style: string;
}

/** Server-computed narrative map: node order and styling decided server-side. */
export interface MapData {
  schema: string;
  nodes: MapNode[]; // already in temporal display order
  edges: MapEdge[];
  sources: string[];
  targets: string[];
  styles: Record<string, string>; // style class -> color
}

export interface MapPayload {
  dot: string;
  data: MapData;
}

export interface StorylineDetailPayload {
  id: string;
  job_id: string;
  storyline: StorylineBody;
  trace: { steps: TraceStep[] };
  trails: TrailsPayload;
  map: MapPayload;
}

export interface JaccardPayload {
  a: string;
  b: string;
  jaccard: number;
}

export interface UnionMapPayload {
  ids: string[];
  map: MapPayload;
  trails: TrailsPayload;
}
