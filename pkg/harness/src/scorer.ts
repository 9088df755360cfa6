/**
 * Toy checkpoint scorer. Scores derive only from tensor contents — no
 * filenames, timestamps, or randomness — so identical checkpoints always
 * produce identical JSON. Each category applies a bounded logistic
 * transform to the overall parameter mean, shifted by a deterministic
 * per-category offset, yielding a score in [0, 100].
 */

import { loadCheckpoint } from "./safetensors.js";

export interface ProtocolRequest {
  checkpointPath: string;
  categories: string[];
}

export interface ProtocolResponse {
  scores: Record<string, number>;
}

function categoryOffset(category: string): number {
  let acc = 0;
  for (const ch of category) acc = (acc * 31 + ch.codePointAt(0)!) % 997;
  return acc / 997 - 0.5; // deterministic value in [-0.5, 0.5)
}

function logistic(x: number): number {
  return 1 / (1 + Math.exp(-x));
}

export function scoreCheckpoint(request: ProtocolRequest): ProtocolResponse {
  if (request.categories.length === 0) {
    throw new Error("at least one category is required");
  }
  const tensors = loadCheckpoint(request.checkpointPath);
  let sum = 0;
  let count = 0;
  for (const tensor of tensors.values()) {
    for (const v of tensor.values) {
      sum += v;
      count += 1;
    }
  }
  const mean = count > 0 ? sum / count : 0;
  const scores: Record<string, number> = {};
  for (const category of request.categories) {
    scores[category] = 100 * logistic(mean + categoryOffset(category));
  }
  return { scores };
}
