/** Wire types for the labeling service (JSON bodies, version field 1). */

export type ClassLabel = "Green" | "Yellow" | "Trunk";

export const CLASS_LABELS: ClassLabel[] = ["Green", "Yellow", "Trunk"];

/** Overlay halo colors per class; true point colors are never replaced. */
export const CLASS_COLORS: Record<ClassLabel, [number, number, number]> = {
  Green: [0.1, 0.9, 0.2],
  Yellow: [1.0, 0.9, 0.1],
  Trunk: [0.8, 0.3, 0.9],
};

export interface CloudSummary {
  cloud_id: string;
  point_count: number;
  capture_week: number;
}

export interface CloudListPayload {
  version: number;
  clouds: CloudSummary[];
}

export interface CloudPayload {
  version: number;
  cloud_id: string;
  point_count: number;
  /** Display index i maps to full-cloud index i * display_stride. */
  display_stride: number;
  display_count: number;
  points: [number, number, number][];
  colors: [number, number, number][];
}

export interface SubmissionLabel {
  point_index: number; // full-cloud index
  label: ClassLabel;
}

export interface Submission {
  version: number;
  cloud_id: string;
  labels: SubmissionLabel[];
  annotator: string;
  timestamp: string;
  submission_id: string;
}

export interface SubmitResponse {
  version: number;
  appended: number;
  duplicate?: boolean;
}

export interface DatasetStats {
  version: number;
  rows: number;
  by_label: Record<string, number>;
}
