// API response shapes. The console renders these verbatim: every number on
// screen comes from one of these fields, never from client-side math.

export type Modality = "Text" | "Voice" | "Teleop";
export type ModuleName = "TP" | "IR" | "MS" | "CG";

export interface Candidate {
  index: number;
  text: string;
  jaccard: number;
  score: number;
  suggested_modality: Modality;
  suggestion_reason: string;
}

export interface KeywordsResponse {
  session_id: string;
  status: string;
  keywords: string[];
  intent: string;
  candidates: Candidate[];
}

export interface SuggestionOutcome {
  suggested: Modality;
  reason: string;
  user_selected: Modality;
  overridden: boolean;
}

export interface DispatchResponse {
  session_id: string;
  status: string;
  sequence: number;
  envelope: CommandEnvelope;
  suggestion: SuggestionOutcome;
  planned_command: string;
  base_score: number;
  satisfaction: string;
}

export interface CommandEnvelope {
  target: string;
  command: string;
  modality: Modality;
  sequence: number;
  issued_at: number;
}

export interface RobotStateWire {
  robot_id: string;
  pose: [number, number, number];
  battery: number;
  status: string;
}

export interface AnalyticsSnapshot {
  latest_scores: Record<ModuleName, number | null>;
  weights: Record<ModuleName, number>;
  score_series: Record<ModuleName, number[]>;
  modality_counts: Record<Modality, number>;
  satisfaction_tally: Record<string, number>;
  interactions: number;
}

export interface PublishedLog {
  published: CommandEnvelope[];
}

export interface ReceivedLog {
  received: Record<string, CommandEnvelope[]>;
}

export interface RobotsResponse {
  robots: RobotStateWire[];
}

export type ConsoleEvent =
  | { type: "session"; session_id: string; status: string }
  | { type: "published"; envelope: CommandEnvelope }
  | {
      type: "feedback";
      robot_id: string;
      command_sequence: number;
      status: "Received" | "Executing" | "Completed" | "Failed";
      detail: string;
      state: RobotStateWire;
    }
  | { type: "robot_state"; state: RobotStateWire }
  | { type: "analytics"; snapshot: AnalyticsSnapshot }
  | { type: "warning"; detail: string };

export interface DispatchRequest {
  robot_id: string;
  candidate_index?: number;
  custom_text?: string;
  transcript?: string;
  modality?: Modality;
  teleop_key?: string;
  comment?: string;
}

export interface ArenaBounds {
  x: [number, number];
  y: [number, number];
}
