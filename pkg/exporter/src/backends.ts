/**
 * Embedding backends.
 *
 * `HashBackend` maps each token to a fixed pseudo-random vector derived
 * from 32-bit integer hashing only (Math.imul arithmetic), so its output
 * is bit-identical across runs and platforms with no model download; it
 * exists to validate the export format and pipeline offline.
 *
 * `TransformersBackend` wraps a transformers.js feature-extraction
 * pipeline over the real checkpoints.  The dependency is loaded lazily: it
 * is an optional install because its native onnxruntime payload cannot be
 * fetched in offline environments.
 */
import { CheckpointSpec } from './checkpoints';

export type Pooling = 'mean' | 'first-token';

export interface EmbeddingBackend {
  readonly hiddenSize: number;
  embedChunk(tokens: string[], pooling: Pooling): Promise<number[]>;
}

function fnv1a(text: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
}

/** One mulberry32 step: 32-bit seed to a float in [0, 1). */
function mix(seed: number): number {
  let t = (seed + 0x6d2b79f5) >>> 0;
  t = Math.imul(t ^ (t >>> 15), t | 1);
  t = (t ^ (t + Math.imul(t ^ (t >>> 7), t | 61))) >>> 0;
  return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
}

export class HashBackend implements EmbeddingBackend {
  readonly hiddenSize: number;

  constructor(hiddenSize: number) {
    this.hiddenSize = hiddenSize;
  }

  tokenVector(token: string): number[] {
    const base = fnv1a(token);
    const out = new Array<number>(this.hiddenSize);
    for (let dim = 0; dim < this.hiddenSize; dim++) {
      const seed = (base ^ Math.imul(dim + 1, 0x9e3779b9)) >>> 0;
      out[dim] = 2 * mix(seed) - 1;
    }
    return out;
  }

  async embedChunk(tokens: string[], pooling: Pooling): Promise<number[]> {
    if (tokens.length === 0) {
      throw new Error('cannot embed an empty chunk');
    }
    if (pooling === 'first-token') {
      return this.tokenVector(tokens[0]);
    }
    const out = new Array<number>(this.hiddenSize).fill(0);
    for (const token of tokens) {
      const vec = this.tokenVector(token);
      for (let i = 0; i < this.hiddenSize; i++) {
        out[i] += vec[i];
      }
    }
    for (let i = 0; i < this.hiddenSize; i++) {
      out[i] /= tokens.length;
    }
    return out;
  }
}

type FeatureExtractor = (text: string, options: object) => Promise<{ data: Float32Array | number[] }>;

export class TransformersBackend implements EmbeddingBackend {
  readonly hiddenSize: number;
  private readonly hubId: string;
  private extractor: FeatureExtractor | null = null;

  constructor(spec: CheckpointSpec) {
    if (!spec.hubId) {
      throw new Error(`checkpoint ${spec.name} has no hub id`);
    }
    this.hiddenSize = spec.hiddenSize;
    this.hubId = spec.hubId;
  }

  private async load(): Promise<FeatureExtractor> {
    if (this.extractor) {
      return this.extractor;
    }
    let pipelineFactory;
    try {
      // optional, heavy dependency; resolved only when a real checkpoint runs
      const transformers = await import('@huggingface/transformers' as string);
      pipelineFactory = transformers.pipeline;
    } catch (err) {
      throw new Error(
        'checkpoint fetch failure: install @huggingface/transformers to use ' +
        `pretrained checkpoints (offline validation uses test-hash-768): ${err}`);
    }
    try {
      this.extractor = (await pipelineFactory('feature-extraction', this.hubId)) as FeatureExtractor;
    } catch (err) {
      throw new Error(`checkpoint fetch failure for ${this.hubId}: ${err}`);
    }
    return this.extractor;
  }

  async embedChunk(tokens: string[], pooling: Pooling): Promise<number[]> {
    const extractor = await this.load();
    const output = await extractor(tokens.join(' '), {
      pooling: pooling === 'mean' ? 'mean' : 'cls',
      normalize: false,
    });
    const vector = Array.from(output.data);
    if (vector.length !== this.hiddenSize) {
      throw new Error(
        `checkpoint returned ${vector.length} dims, expected ${this.hiddenSize}`);
    }
    return vector;
  }
}

export function backendFor(spec: CheckpointSpec): EmbeddingBackend {
  return spec.kind === 'hash' ? new HashBackend(spec.hiddenSize)
    : new TransformersBackend(spec);
}
