/**
 * Subprocess evaluator entry point.
 *
 * Usage: node cli.js --checkpoint <path> --categories <comma-list>
 * Prints exactly one JSON object {"scores": {...}} to stdout and exits 0.
 * Any failure writes a message to stderr and exits nonzero.
 */

import { parseArgs } from "node:util";
import { scoreCheckpoint } from "./scorer.js";

export function main(argv: string[]): number {
  let values: { checkpoint?: string; categories?: string };
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        checkpoint: { type: "string" },
        categories: { type: "string" },
      },
    }));
  } catch (err) {
    process.stderr.write(`usage error: ${err instanceof Error ? err.message : err}\n`);
    return 2;
  }
  if (!values.checkpoint || !values.categories) {
    process.stderr.write("usage: --checkpoint <path> --categories <comma-list>\n");
    return 2;
  }
  const categories = values.categories.split(",").map((c) => c.trim()).filter(Boolean);
  try {
    const response = scoreCheckpoint({ checkpointPath: values.checkpoint, categories });
    process.stdout.write(JSON.stringify(response) + "\n");
    return 0;
  } catch (err) {
    process.stderr.write(`${err instanceof Error ? err.message : err}\n`);
    return 1;
  }
}

process.exit(main(process.argv.slice(2)));
