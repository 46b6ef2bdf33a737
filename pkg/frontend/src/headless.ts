// Headless conformance client: runs a complete scripted session
// against a live server, submits the questionnaire and saves the log.
//
//   node dist/headless.js [baseUrl] [condition] [seed] [outPath]
//
// Exits nonzero if the session does not reach done with the expected
// trial count or the log round trip fails.

import { writeFileSync } from "node:fs";

import { SessionClient } from "./client.js";
import { buildAnswers, BOOL_ITEMS, CHOICE_ITEMS } from "./questionnaire.js";
import { runSession, scriptedPolicy } from "./trialLoop.js";

export interface HeadlessResult {
  sessionId: string;
  trials: number;
  breaks: number;
  framesFetched: number;
  framesDropped: number;
  eventsSent: number;
  outcomes: Record<string, number>;
  logLines: number;
  metadataLines: number;
}

export async function runHeadless(
  baseUrl: string,
  condition: "GCSS" | "Edges" | "Coloured",
  seed: number,
  outPath?: string,
): Promise<HeadlessResult> {
  const client = await SessionClient.create(baseUrl, { condition, seed });
  const stats = await runSession(client, scriptedPolicy(seed, client.view.frameSize));

  const draft: Record<string, "GCSS" | "Edges" | boolean> = {};
  for (const item of CHOICE_ITEMS) draft[item] = seed % 2 ? "GCSS" : "Edges";
  for (const item of BOOL_ITEMS) draft[item] = true;
  await client.submitQuestionnaire(buildAnswers(draft));

  const log = await client.downloadLog();
  if (outPath) writeFileSync(outPath, log);
  const lines = log.split("\n").filter((l) => l.length > 0);
  const metadataLines = lines.filter((l) =>
    l.startsWith('{"type":"questionnaire"'),
  ).length;

  return {
    sessionId: client.sessionId,
    ...stats,
    logLines: lines.length,
    metadataLines,
  };
}

const invokedDirectly =
  typeof process !== "undefined" &&
  process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");

if (invokedDirectly) {
  const [baseUrl = "http://127.0.0.1:8414", condition = "GCSS", seed = "7", out] =
    process.argv.slice(2);
  runHeadless(baseUrl, condition as "GCSS" | "Edges" | "Coloured",
              Number(seed), out)
    .then((result) => {
      console.log(JSON.stringify(result, null, 2));
      if (result.trials !== result.logLines - result.metadataLines) {
        console.error("log line count does not match trials run");
        process.exit(1);
      }
    })
    .catch((err) => {
      console.error(err);
      process.exit(1);
    });
}
