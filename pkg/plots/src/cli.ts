/**
 * Batch plotting commands over the simulator's exported files.
 *
 *   plots <command> --in <file[,file]> --out <image.svg>
 *
 *   trajectories       --in trajectories.csv[,metrics.json]
 *   velocities         --in trajectories.csv[,metrics.json]
 *   min-distance       --in metrics.json
 *   follower-distance  --in metrics.json
 *   time-comparison    --in base_metrics.json,variant_metrics.json
 *
 * The optional metrics file for trajectory/velocity charts supplies the
 * arena frame, obstacle discs, destinations and the cruise-speed line.
 * Exit codes: 0 success, 2 usage or data errors.
 */

import { readFileSync, writeFileSync } from "node:fs";

import {
  ChartResult,
  followerDistanceChart,
  minDistanceChart,
  timeComparisonChart,
  trajectoriesChart,
  velocitiesChart,
} from "./charts.js";
import { DataError, groupTracks, parseMetrics, parseTrajectories } from "./data.js";

export const EXIT_OK = 0;
export const EXIT_ERROR = 2;

class UsageError extends Error {}

const USAGE = `usage: plots <command> --in <file[,file]> --out <image.svg>

commands:
  trajectories       formation paths in the plane (--in trajectories.csv[,metrics.json])
  velocities         per-robot speed traces        (--in trajectories.csv[,metrics.json])
  min-distance       closest-neighbour separation  (--in metrics.json)
  follower-distance  follower slot distances       (--in metrics.json)
  time-comparison    time-to-goal bars             (--in base_metrics.json,variant_metrics.json)`;

interface ParsedArgs {
  command: string;
  inputs: string[];
  out: string;
}

function parseArgs(argv: string[]): ParsedArgs {
  const [command, ...rest] = argv;
  if (!command) throw new UsageError("no command given");
  let inputs: string[] | null = null;
  let out: string | null = null;
  for (let i = 0; i < rest.length; i += 2) {
    const flag = rest[i];
    const value = rest[i + 1];
    if (value === undefined) throw new UsageError(`${flag} needs a value`);
    if (flag === "--in") inputs = value.split(",").filter((s) => s.length > 0);
    else if (flag === "--out") out = value;
    else throw new UsageError(`unknown option ${flag}`);
  }
  if (!inputs || inputs.length === 0) throw new UsageError("--in is required");
  if (!out) throw new UsageError("--out is required");
  return { command, inputs, out };
}

function read(path: string): string {
  try {
    return readFileSync(path, "utf-8");
  } catch (e) {
    throw new UsageError(`cannot read ${path}: ${(e as Error).message}`);
  }
}

function expectInputs(args: ParsedArgs, min: number, max: number, shape: string): void {
  if (args.inputs.length < min || args.inputs.length > max) {
    throw new UsageError(`${args.command} expects --in ${shape}, got ${args.inputs.length} file(s)`);
  }
}

function build(args: ParsedArgs): ChartResult {
  switch (args.command) {
    case "trajectories": {
      expectInputs(args, 1, 2, "trajectories.csv[,metrics.json]");
      const tracks = groupTracks(parseTrajectories(read(args.inputs[0]!)));
      const metrics = args.inputs[1] ? parseMetrics(read(args.inputs[1])) : undefined;
      return trajectoriesChart(tracks, metrics);
    }
    case "velocities": {
      expectInputs(args, 1, 2, "trajectories.csv[,metrics.json]");
      const tracks = groupTracks(parseTrajectories(read(args.inputs[0]!)));
      const metrics = args.inputs[1] ? parseMetrics(read(args.inputs[1])) : undefined;
      return velocitiesChart(tracks, metrics);
    }
    case "min-distance": {
      expectInputs(args, 1, 1, "metrics.json");
      return minDistanceChart(parseMetrics(read(args.inputs[0]!)));
    }
    case "follower-distance": {
      expectInputs(args, 1, 1, "metrics.json");
      return followerDistanceChart(parseMetrics(read(args.inputs[0]!)));
    }
    case "time-comparison": {
      expectInputs(args, 2, 2, "base_metrics.json,variant_metrics.json");
      return timeComparisonChart(
        parseMetrics(read(args.inputs[0]!)),
        parseMetrics(read(args.inputs[1]!)),
      );
    }
    default:
      throw new UsageError(`unknown command "${args.command}"`);
  }
}

export function main(argv: string[]): number {
  try {
    const args = parseArgs(argv);
    const result = build(args);
    writeFileSync(args.out, result.svg);
    for (const w of result.warnings) console.error(`warning: ${w}`);
    console.log(`SVG → ${args.out}`);
    return EXIT_OK;
  } catch (e) {
    if (e instanceof UsageError) {
      console.error(`error: ${e.message}\n\n${USAGE}`);
      return EXIT_ERROR;
    }
    if (e instanceof DataError) {
      console.error(`error: ${e.message}`);
      return EXIT_ERROR;
    }
    throw e;
  }
}
