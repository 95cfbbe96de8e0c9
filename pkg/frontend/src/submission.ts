import { toFullIndex } from "./api";
import type { SelectionState } from "./selection";
import type { CloudPayload, Submission } from "./types";

/**
 * Build the wire submission from pending labels. Display indices are
 * mapped to full-cloud indices using only the server-provided stride.
 */
export function buildSubmission(
  state: SelectionState,
  payload: CloudPayload,
  annotator: string,
  submissionId: string,
  now: () => string = () => new Date().toISOString(),
): Submission {
  return {
    version: 1,
    cloud_id: payload.cloud_id,
    labels: state.labeledEntries().map(([displayIndex, label]) => ({
      point_index: toFullIndex(displayIndex, payload.display_stride),
      label,
    })),
    annotator,
    timestamp: now(),
    submission_id: submissionId,
  };
}

export function freshSubmissionId(random: () => number = Math.random): string {
  return `ui-${Date.now()}-${random().toString(36).slice(2, 10)}`;
}
