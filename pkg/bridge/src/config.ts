/**
 * Bridge configuration: which model suite serves each role, the shared
 * embedding dimension, and how the decoder composes its conditioning.
 *
 * The default suite is fully deterministic and procedural (digest-seeded
 * encoders, a wordlist abstractness classifier, a procedural PNG
 * renderer), so the bridge runs anywhere with no weights, no GPU and no
 * network. Each identifier is a named strategy; swapping in a real model
 * server means registering a new identifier behind the same interface.
 */

export interface BridgeModels {
  encoderSuite: string;
  textEncoder: string;
  abstractnessClassifier: string;
  diffusion: string;
}

export type ConditioningStrategy = "prompt+embedding" | "prompt-only";

export interface BridgeConfig {
  host: string;
  port: number;
  dim: number;
  device: string;
  models: BridgeModels;
  /** prompt template applied to nouns before text encoding */
  nounTemplate: string;
  /** adjectives embed as the bare token by default; "{word}" substitutes */
  adjectiveTemplate: string;
  /** how /v1/decode folds the condition bundle into the image */
  conditioning: ConditioningStrategy;
}

export const DEFAULT_CONFIG: BridgeConfig = {
  host: "127.0.0.1",
  port: 8790,
  dim: 1024,
  device: "cpu",
  models: {
    encoderSuite: "det-bind-v1",
    textEncoder: "det-bind-v1/text",
    abstractnessClassifier: "abstractness-wordlist-v1",
    diffusion: "procedural-diffusion-v1",
  },
  nounTemplate: "a photo of a {word}",
  adjectiveTemplate: "{word}",
  conditioning: "prompt+embedding",
};

export function mergeConfig(overrides: Partial<BridgeConfig>): BridgeConfig {
  return {
    ...DEFAULT_CONFIG,
    ...overrides,
    models: { ...DEFAULT_CONFIG.models, ...(overrides.models ?? {}) },
  };
}
