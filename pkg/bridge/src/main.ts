/** CLI entry point: `node dist/src/main.js [--config bridge.json] [--port N]`. */
import { readFileSync } from "node:fs";

import { BridgeConfig, mergeConfig } from "./config.js";
import { BridgeServer } from "./server.js";

function parseArgs(argv: string[]): Partial<BridgeConfig> {
  const overrides: Partial<BridgeConfig> = {};
  for (let i = 0; i < argv.length; i += 1) {
    const arg = argv[i];
    if (arg === "--config") {
      const doc = JSON.parse(readFileSync(argv[++i], "utf-8"));
      Object.assign(overrides, doc);
    } else if (arg === "--port") {
      overrides.port = Number(argv[++i]);
    } else if (arg === "--host") {
      overrides.host = argv[++i];
    } else if (arg === "--dim") {
      overrides.dim = Number(argv[++i]);
    } else {
      console.error(`unknown argument: ${arg}`);
      process.exit(2);
    }
  }
  return overrides;
}

async function main(): Promise<void> {
  const config = mergeConfig(parseArgs(process.argv.slice(2)));
  const server = new BridgeServer(config);
  const { host, port } = await server.listen();
  console.log(
    `bridge ready on http://${host}:${port} ` +
      `(dim=${config.dim}, encoder=${config.models.encoderSuite}, ` +
      `decoder=${config.models.diffusion})`,
  );
  const stop = () => {
    server.close().then(() => process.exit(0));
  };
  process.on("SIGTERM", stop);
  process.on("SIGINT", stop);
}

main().catch((err) => {
  console.error(String(err));
  process.exit(1);
});
