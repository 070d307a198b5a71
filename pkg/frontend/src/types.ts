// Wire types for the session API. These mirror the server's
// api_schema.json; the client renders them verbatim and never derives
// its own numbers.

export interface TaskInfo {
  task_id: string;
  select_label: string;
  reject_label: string;
  instructions: string;
  quota: number;
}

export interface ProfileCard {
  profile_id: string;
  attributes: Record<string, string | number>;
  avatar: string;
}

export interface Progress {
  done: number;
  total: number;
}

export interface Snapshot {
  session_id: string;
  task_id: string;
  condition: "bias_feedback" | "fair_machine_guidance";
  phase: string;
  progress: Progress | null;
  passed?: boolean;
}

export interface AssessmentScreen {
  kind: "assessment";
  phase: string;
  task: TaskInfo;
  progress: Progress;
  profiles: ProfileCard[];
}

export interface UnfairnessReport {
  rate_privileged: number;
  rate_unprivileged: number;
  score: number;
  n_privileged: number;
  n_unprivileged: number;
  decision_semantics: string;
}

export interface TeachingSample {
  profile_id: string;
  student_decision: 0 | 1;
  teacher_decision: 0 | 1;
  objective_score: number;
}

export type WeightEntry = [string, number];

export interface GuidancePacket {
  unfairness: UnfairnessReport;
  samples: TeachingSample[];
  student_top5: WeightEntry[];
  teacher_top5: WeightEntry[];
}

export interface SelectionRates {
  privileged: number | null;
  unprivileged: number | null;
}

export interface BiasFeedbackView {
  kind: "bias_feedback";
  cycle: number;
  selection_rates: SelectionRates;
  privileged_value: string;
  select_label: string;
  message: string;
  hint: string;
}

export interface GuidanceView {
  kind: "guidance";
  cycle: number;
  selection_rates: SelectionRates;
  privileged_value: string;
  select_label: string;
  message: string;
  hint: string;
  packet: GuidancePacket;
  sample_profiles: Record<string, { attributes: ProfileCard["attributes"]; avatar: string }>;
}

export interface TreatmentScreen {
  kind: "treatment";
  view: BiasFeedbackView | GuidanceView;
  next_block: {
    phase: string;
    task: TaskInfo;
    progress: Progress;
    profiles: ProfileCard[];
  };
}

export interface CheckTestQuestion {
  id: string;
  prompt: string;
  options: string[];
}

export interface CheckTestScreen {
  kind: "checktest";
  questions: CheckTestQuestion[];
}

export interface QuestionnaireItem {
  id: string;
  kind: "likert5" | "likert5_dk" | "text" | "choice";
  prompt: string;
  visibility: "both" | "guidance";
  options: string[];
}

export interface QuestionnaireScreen {
  kind: "questionnaire";
  phase_tag: "pre" | "post";
  form: QuestionnaireItem[];
  attribute_picker: { options: string[]; max: 5; submitted: boolean };
  questionnaire_submitted: boolean;
}

export interface SessionReport {
  session_id: string;
  task_id: string;
  condition: string;
  excluded: boolean;
  excluded_reason: string | null;
  partial: boolean;
  phase: string;
  pre_unfairness: number | null;
  post_unfairness: number | null;
  accuracy_pre: number | null;
  accuracy_post: number | null;
  key_attribute_change_rate: number | null;
  n_responses: number;
}

export interface ReportScreen {
  kind: "report";
  report: SessionReport;
}

export interface ExcludedScreen {
  kind: "excluded";
  reason: string;
}

export interface ProcessingScreen {
  kind: "processing";
  phase: string;
}

export type Screen =
  | AssessmentScreen
  | TreatmentScreen
  | CheckTestScreen
  | QuestionnaireScreen
  | ReportScreen
  | ExcludedScreen
  | ProcessingScreen;
