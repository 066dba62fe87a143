/**
 * The wire protocol: one handshake line, then newline-delimited JSON.
 *
 * Requests are {"id", "text"}; each gets exactly one response, in
 * request order, either {"id", "logprob", "token_count"} or
 * {"id", "error"}.  A malformed request produces an error response and
 * the loop keeps serving; only end of input ends the conversation.
 */
import { createInterface } from "node:readline";
import type { Readable, Writable } from "node:stream";

import type { NGramModel } from "./model.js";

export const PROTOCOL_VERSION = 1;

export function handshakeLine(modelId: string): string {
  return `scorer-protocol/${PROTOCOL_VERSION} ${modelId}`;
}

interface ScoreRequest {
  id: string;
  text: string;
}

function parseRequest(line: string): ScoreRequest | { badId: string; reason: string } {
  let obj: unknown;
  try {
    obj = JSON.parse(line);
  } catch (err) {
    return { badId: "", reason: `request is not valid JSON: ${(err as Error).message}` };
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    return { badId: "", reason: "request must be a JSON object" };
  }
  const record = obj as Record<string, unknown>;
  const id = typeof record.id === "string" ? record.id : "";
  if (typeof record.id !== "string") {
    return { badId: id, reason: "request id must be a string" };
  }
  if (typeof record.text !== "string") {
    return { badId: id, reason: "request text must be a string" };
  }
  return { id, text: record.text };
}

/**
 * Serve score requests until the input stream ends.
 *
 * Responses keep request order because everything is handled inline
 * on the line event; the model is synchronous, so no queueing is
 * needed.  The returned promise resolves on end of input.
 */
export function serve(model: NGramModel, modelId: string, input: Readable, output: Writable): Promise<void> {
  const respond = (obj: Record<string, unknown>) => {
    output.write(JSON.stringify(obj) + "\n");
  };
  output.write(handshakeLine(modelId) + "\n");
  return new Promise((resolve) => {
    const reader = createInterface({ input, crlfDelay: Infinity });
    reader.on("line", (line) => {
      if (line.trim() === "") {
        return;
      }
      const request = parseRequest(line);
      if ("badId" in request) {
        respond({ id: request.badId, error: request.reason });
        return;
      }
      const { logprob, tokenCount } = model.score(request.text);
      if (!Number.isFinite(logprob)) {
        respond({ id: request.id, error: "model produced a non-finite logprob for this text" });
        return;
      }
      respond({ id: request.id, logprob, token_count: tokenCount });
    });
    reader.on("close", resolve);
  });
}
