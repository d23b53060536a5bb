// API payload shapes, mirroring the service's canonical JSON.

export type Box = [number, number, number, number]; // x1, y1, x2, y2

export interface RecordPayload {
  uuid: string;
  label: string;
  name: string;
  box: Box;
  score: number;
}

export interface LandmarkPayload {
  name: string;
  box: Box;
}

export interface AnnotationsPayload {
  records: RecordPayload[];
  landmarks: LandmarkPayload[];
  confirmed: string[];
}

export type ActionPayload = string | { kind: string; level: number };

export interface CommandResult {
  command: { uuid: string; action: ActionPayload };
  status: "success" | "failed";
  error_kind: string | null;
  attempts: number;
}

export interface CommandOutcome {
  commands: { uuid: string; action: ActionPayload }[];
  results: CommandResult[];
}

export interface Candidate {
  uuid: string;
  name: string;
}

export interface ApiError {
  error: string;
  detail: string;
  candidates?: Candidate[];
  action?: ActionPayload;
}

export interface DeviceEntry {
  device_id: string;
  type: string;
  online: boolean;
  state: { on: boolean; online: boolean; brightness?: number; speed?: number };
}
