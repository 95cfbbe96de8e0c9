/**
 * End-to-end labeling loop against the real labeling service:
 * load a synthetic cloud, label 45 points (15 per class) through the same
 * selection/submission code the browser uses, submit, verify the dataset
 * grew by exactly that many valid rows, then train on the collected rows
 * and check the model classifies the cloud at >= 95% agreement with the
 * generator truth.
 */
import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

const HELPERS_DIR = fileURLToPath(new URL("helpers", import.meta.url));

import { ApiClient } from "../src/api";
import { SelectionState } from "../src/selection";
import { buildSubmission, freshSubmissionId } from "../src/submission";
import type { ClassLabel, CloudPayload } from "../src/types";

const PYTHON = process.env.PYTHON ?? "python3";
const TIMEOUT = 120_000;

let workDir: string;
let server: ChildProcess | null = null;
let baseUrl: string;
let truthByFullIndex: string[];

function runPython(args: string[]): string {
  const result = spawnSync(PYTHON, args, { encoding: "utf-8" });
  if (result.status !== 0) {
    throw new Error(`python ${args.join(" ")} failed:\n${result.stderr}`);
  }
  return result.stdout;
}

async function startServer(cloudsDir: string, datasetPath: string): Promise<string> {
  const child = spawn(
    PYTHON,
    ["-u", "-m", "fallcolor.cli", "serve", "--clouds", cloudsDir,
     "--dataset", datasetPath, "--port", "0", "--display-stride", "4"],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  server = child;
  return new Promise((resolve, reject) => {
    let buffer = "";
    const timer = setTimeout(() => reject(new Error(`server did not start: ${buffer}`)), 30_000);
    child.stdout!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = buffer.match(/http:\/\/[\d.]+:(\d+)/);
      if (match) {
        clearTimeout(timer);
        resolve(`http://127.0.0.1:${match[1]}`);
      }
    });
    child.stderr!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
    });
    child.on("exit", (code) => reject(new Error(`server exited ${code}: ${buffer}`)));
  });
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "labeler-itest-"));
  // a three-class synthetic tree with known per-point labels
  runPython(["-m", "fallcolor.cli", "synth", "--kind", "tree", "--out", workDir,
             "--points", "4000", "--fraction", "0.35", "--seed", "17"]);
  truthByFullIndex = [];
  for (const line of readFileSync(join(workDir, "point_labels.csv"), "utf-8")
      .trim().split("\n").slice(1)) {
    const [idx, name] = line.split(",");
    truthByFullIndex[Number(idx)] = name;
  }
  baseUrl = await startServer(workDir, join(workDir, "labels.csv"));
}, TIMEOUT);

afterAll(() => {
  server?.kill();
});

describe("labeling loop against the live service", () => {
  let payload: CloudPayload;
  const state = () => new SelectionState(payload.display_count);

  it(
    "labels 45 points across all classes and the dataset grows by exactly 45",
    async () => {
      const api = new ApiClient(baseUrl);
      const listing = await api.listClouds();
      expect(listing.clouds.map((c) => c.cloud_id)).toContain("tree");
      payload = await api.fetchCloud("tree");
      expect(payload.display_count).toBe(Math.ceil(payload.point_count / payload.display_stride));

      // pick 15 display points of each true class, the way a careful
      // annotator with a lasso would
      const selection = state();
      const perClass = 15;
      for (const label of ["Green", "Yellow", "Trunk"] as ClassLabel[]) {
        const picks: number[] = [];
        for (let display = 0; display < payload.display_count && picks.length < perClass; display++) {
          const full = display * payload.display_stride;
          if (truthByFullIndex[full] === label) picks.push(display);
        }
        expect(picks).toHaveLength(perClass);
        selection.select(picks);
        expect(selection.labelSelection(label)).toBe(perClass);
      }
      expect(selection.labeledCount).toBe(45);

      const submission = buildSubmission(selection, payload, "itest", freshSubmissionId());
      const response = await api.submitLabels(submission);
      expect(response.appended).toBe(45);

      const stats = await api.datasetStats();
      expect(stats.rows).toBe(45);
      expect(stats.by_label).toEqual({ Green: 15, Trunk: 15, Yellow: 15 });

      // retry with the same submission id must not double-append
      const retry = await api.submitLabels(submission);
      expect(retry.appended).toBe(0);
      expect((await api.datasetStats()).rows).toBe(45);
    },
    TIMEOUT,
  );

  it(
    "training on the collected rows classifies the cloud at >= 95% agreement",
    () => {
      const out = runPython([
        join(HELPERS_DIR, "train_check.py"),
        join(workDir, "labels.csv"),
        join(workDir, "tree.ply"),
        join(workDir, "point_labels.csv"),
      ]);
      const match = out.match(/agreement=([\d.]+) rows=(\d+)/);
      expect(match, out).not.toBeNull();
      expect(Number(match![2])).toBe(45);
      expect(Number(match![1])).toBeGreaterThanOrEqual(0.95);
    },
    TIMEOUT,
  );

  it("rejects a submission with an invalid index without appending", async () => {
    const api = new ApiClient(baseUrl);
    const selection = state();
    selection.select([0]);
    selection.labelSelection("Green");
    const submission = buildSubmission(selection, payload, "itest", freshSubmissionId());
    submission.labels[0].point_index = payload.point_count + 5;
    await expect(api.submitLabels(submission)).rejects.toThrow(/out of range/);
    expect((await api.datasetStats()).rows).toBe(45);
  });
});
