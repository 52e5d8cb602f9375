/**
 * HTTP facade for the bridge: /v1/info, /v1/health, /v1/encode,
 * /v1/embed-lexicon (NDJSON stream consumable by `imgany bank build`),
 * and /v1/decode (PNG). JSON errors are {code, message} with 4xx/5xx
 * status, mirroring the engine's conventions.
 */
import http from "node:http";
import { AddressInfo } from "node:net";

import { BridgeConfig } from "./config.js";
import { renderImage } from "./decode.js";
import {
  MODALITIES,
  SUPPORTED_KINDS,
  encodePayload,
  embedText,
  isModality,
  keepAdjective,
} from "./models.js";

const MAX_BODY_BYTES = 64 * 1024 * 1024;
const BASE64_RE = /^[A-Za-z0-9+/]*={0,2}$/;

class HttpError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

function readBody(req: http.IncomingMessage): Promise<Buffer> {
  return new Promise((resolve, reject) => {
    const chunks: Buffer[] = [];
    let total = 0;
    req.on("data", (chunk: Buffer) => {
      total += chunk.length;
      if (total > MAX_BODY_BYTES) {
        reject(new HttpError(413, "BodyTooLarge", `body exceeds ${MAX_BODY_BYTES} bytes`));
        req.destroy();
        return;
      }
      chunks.push(chunk);
    });
    req.on("end", () => resolve(Buffer.concat(chunks)));
    req.on("error", reject);
  });
}

function parseJson(body: Buffer): Record<string, unknown> {
  let obj: unknown;
  try {
    obj = JSON.parse(body.toString("utf-8"));
  } catch (err) {
    throw new HttpError(400, "BadJson", String(err));
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new HttpError(400, "BadRequest", "request body must be a JSON object");
  }
  return obj as Record<string, unknown>;
}

function decodeBase64Strict(value: unknown): Buffer {
  if (typeof value !== "string" || value.length === 0) {
    throw new HttpError(422, "BadPayload", "payload must be a nonempty base64 string");
  }
  if (value.length % 4 !== 0 || !BASE64_RE.test(value)) {
    throw new HttpError(422, "BadPayload", "payload is not valid base64");
  }
  const decoded = Buffer.from(value, "base64");
  if (decoded.length === 0) {
    throw new HttpError(422, "BadPayload", "payload decodes to zero bytes");
  }
  return decoded;
}

export class BridgeServer {
  readonly config: BridgeConfig;
  private server: http.Server;
  private ready = false;

  constructor(config: BridgeConfig) {
    this.config = config;
    this.server = http.createServer((req, res) => {
      this.route(req, res).catch((err) => {
        const status = err instanceof HttpError ? err.status : 500;
        const code = err instanceof HttpError ? err.code : "Internal";
        this.sendJson(res, status, { code, message: String(err.message ?? err) });
      });
    });
  }

  /** Models are procedural and load instantly; the gate stays observable. */
  markReady(): void {
    this.ready = true;
  }

  listen(): Promise<{ host: string; port: number }> {
    return new Promise((resolve, reject) => {
      this.server.once("error", reject);
      this.server.listen(this.config.port, this.config.host, () => {
        this.markReady();
        const addr = this.server.address() as AddressInfo;
        resolve({ host: addr.address, port: addr.port });
      });
    });
  }

  url(): string {
    const addr = this.server.address() as AddressInfo;
    return `http://${addr.address}:${addr.port}`;
  }

  close(): Promise<void> {
    return new Promise((resolve, reject) => {
      this.server.close((err) => (err ? reject(err) : resolve()));
    });
  }

  private sendJson(res: http.ServerResponse, status: number, obj: unknown): void {
    const payload = Buffer.from(JSON.stringify(obj) + "\n", "utf-8");
    res.writeHead(status, {
      "Content-Type": "application/json",
      "Content-Length": payload.length,
      Connection: "close",
    });
    res.end(payload);
  }

  private sendBytes(
    res: http.ServerResponse,
    status: number,
    contentType: string,
    payload: Buffer,
  ): void {
    res.writeHead(status, {
      "Content-Type": contentType,
      "Content-Length": payload.length,
      Connection: "close",
    });
    res.end(payload);
  }

  private async route(req: http.IncomingMessage, res: http.ServerResponse): Promise<void> {
    const path = (req.url ?? "").split("?")[0];
    if (req.method === "GET" && path === "/v1/health") {
      if (!this.ready) {
        this.sendJson(res, 503, { status: "loading" });
      } else {
        this.sendJson(res, 200, { status: "ok" });
      }
      return;
    }
    if (req.method === "GET" && path === "/v1/info") {
      if (!this.ready) {
        throw new HttpError(503, "NotReady", "models are not loaded yet");
      }
      this.sendJson(res, 200, {
        dim: this.config.dim,
        modalities_supported: MODALITIES,
        models: this.config.models,
        conditioning: this.config.conditioning,
        device: this.config.device,
      });
      return;
    }
    if (req.method === "POST") {
      if (!this.ready) {
        throw new HttpError(503, "NotReady", "models are not loaded yet");
      }
      const body = await readBody(req);
      if (path === "/v1/encode") {
        this.handleEncode(res, parseJson(body));
        return;
      }
      if (path === "/v1/embed-lexicon") {
        this.handleEmbedLexicon(res, parseJson(body));
        return;
      }
      if (path === "/v1/decode") {
        this.handleDecode(res, parseJson(body));
        return;
      }
    }
    throw new HttpError(404, "NotFound", `no such endpoint: ${req.method} ${path}`);
  }

  private handleEncode(res: http.ServerResponse, obj: Record<string, unknown>): void {
    const modality = obj.modality;
    if (typeof modality !== "string" || !isModality(modality)) {
      throw new HttpError(415, "UnsupportedModality", `unsupported modality: ${modality}`);
    }
    const payloadKind = typeof obj.payload_kind === "string" ? obj.payload_kind : "";
    if (!SUPPORTED_KINDS[modality].includes(payloadKind)) {
      throw new HttpError(
        415,
        "UnsupportedPayloadKind",
        `modality ${modality} does not accept payload_kind ${payloadKind || "(missing)"}`,
      );
    }
    const payload = decodeBase64Strict(obj.payload);
    // Text payloads go through the text encoder so they land in the same
    // space as lexicon embeddings (a templated phrase matches its bank word)
    const modelId = modality === "Text"
      ? this.config.models.textEncoder
      : this.config.models.encoderSuite;
    const embedding = encodePayload(modelId, modality, payloadKind, payload, this.config.dim);
    this.sendJson(res, 200, { modality, embedding: Array.from(embedding) });
  }

  private handleEmbedLexicon(res: http.ServerResponse, obj: Record<string, unknown>): void {
    const kind = obj.kind;
    if (kind !== "noun" && kind !== "adjective") {
      throw new HttpError(422, "BadKind", "kind must be \"noun\" or \"adjective\"");
    }
    const words = obj.words;
    if (!Array.isArray(words) || words.length === 0) {
      throw new HttpError(422, "EmptyWordList", "words must be a nonempty array");
    }
    const lines: string[] = [];
    for (const word of words) {
      if (typeof word !== "string" || word.trim().length === 0) {
        throw new HttpError(422, "EmptyWord", `empty word in list: ${JSON.stringify(word)}`);
      }
      const template = kind === "noun" ? this.config.nounTemplate : this.config.adjectiveTemplate;
      const text = template.replace("{word}", word);
      const embedding = embedText(this.config.models.textEncoder, text, this.config.dim);
      const keep = kind === "noun" ? true : keepAdjective(word);
      lines.push(JSON.stringify({ word, keep, embedding: Array.from(embedding) }));
    }
    this.sendBytes(
      res,
      200,
      "application/x-ndjson",
      Buffer.from(lines.join("\n") + "\n", "utf-8"),
    );
  }

  private handleDecode(res: http.ServerResponse, obj: Record<string, unknown>): void {
    const bundle = obj.bundle;
    if (typeof bundle !== "object" || bundle === null || Array.isArray(bundle)) {
      throw new HttpError(422, "BadBundle", "bundle must be an object");
    }
    const b = bundle as Record<string, unknown>;
    const c1 = b.c1;
    if (!Array.isArray(c1) || c1.length === 0 || !c1.every((x) => typeof x === "number" && Number.isFinite(x))) {
      throw new HttpError(422, "BadBundle", "bundle.c1 must be a nonempty finite number array");
    }
    const c2 = typeof b.c2 === "string" ? b.c2 : null;
    const c3 = typeof b.c3 === "string" ? b.c3 : null;
    if (c2 === null || c3 === null) {
      throw new HttpError(422, "BadBundle", "bundle.c2 and bundle.c3 must be strings");
    }
    const width = obj.width;
    const height = obj.height;
    if (
      typeof width !== "number" || typeof height !== "number" ||
      !Number.isInteger(width) || !Number.isInteger(height) ||
      width < 8 || height < 8 || width % 8 !== 0 || height % 8 !== 0 ||
      width > 4096 || height > 4096
    ) {
      throw new HttpError(422, "BadSize", "width and height must be multiples of 8 in [8, 4096]");
    }
    const steps = obj.steps;
    if (typeof steps !== "number" || !Number.isInteger(steps) || steps < 1) {
      throw new HttpError(422, "BadSteps", "steps must be an integer >= 1");
    }
    const seed = obj.seed;
    if (typeof seed !== "number" || seed < 0) {
      throw new HttpError(422, "BadSeed", "seed must be a non-negative number");
    }
    const png = renderImage({
      bundle: { c1: c1 as number[], c2, c3 },
      width,
      height,
      steps,
      seed,
      conditioning: this.config.conditioning,
    });
    this.sendBytes(res, 200, "image/png", png);
  }
}
