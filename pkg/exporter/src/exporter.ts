/**
 * Orchestration: dataset rows -> chunked, pooled embeddings -> CSV + sidecar.
 *
 * Output format (consumed by the adscreen linear heads):
 *   - CSV, UTF-8, header `id,e0,...,e{H-1}`, one row per transcript in
 *     dataset order, '.' decimal, values serialized with JavaScript's
 *     shortest round-trip formatting;
 *   - sidecar JSON at `<out>.json` with {model_name, pooling, layer, H}.
 *
 * Documents longer than `maxTokens` whitespace tokens are chunked with 50%
 * overlap and the chunk embeddings are mean-pooled.  Both files are written
 * atomically (temp file + rename).
 */
import * as fs from 'node:fs';
import * as path from 'node:path';

import { backendFor, EmbeddingBackend, Pooling } from './backends';
import { resolveCheckpoint } from './checkpoints';
import { chunkTokens, meanOfVectors, whitespaceTokens } from './chunking';
import { DocumentRow, readDataset } from './dataset';

export interface ExportSpec {
  datasetPath: string;
  checkpoint: string;
  pooling: Pooling;
  outPath: string;
  maxTokens: number;
  layer: string;
}

export const DEFAULT_MAX_TOKENS = 512;

export async function embedDocument(
  backend: EmbeddingBackend, text: string, pooling: Pooling, maxTokens: number,
): Promise<number[]> {
  const tokens = whitespaceTokens(text);
  if (tokens.length === 0) {
    throw new Error('empty document');
  }
  const chunks = chunkTokens(tokens, maxTokens);
  const vectors: number[][] = [];
  for (const chunk of chunks) {
    vectors.push(await backend.embedChunk(chunk, pooling));
  }
  return meanOfVectors(vectors);
}

export function toCsv(rows: DocumentRow[], vectors: number[][], hiddenSize: number): string {
  const header = ['id'];
  for (let i = 0; i < hiddenSize; i++) {
    header.push(`e${i}`);
  }
  const lines = [header.join(',')];
  rows.forEach((row, i) => {
    const cells = vectors[i].map((v) => {
      if (!Number.isFinite(v)) {
        throw new Error(`non-finite embedding value for ${row.transcriptId}`);
      }
      return v.toString();
    });
    lines.push([row.transcriptId, ...cells].join(','));
  });
  return lines.join('\n') + '\n';
}

function writeAtomic(filePath: string, payload: string): void {
  const dir = path.dirname(path.resolve(filePath));
  fs.mkdirSync(dir, { recursive: true });
  const tmp = path.join(dir, `.tmp-${path.basename(filePath)}~`);
  fs.writeFileSync(tmp, payload, 'utf-8');
  fs.renameSync(tmp, filePath);
}

export async function runExport(spec: ExportSpec): Promise<{ count: number; hiddenSize: number }> {
  const checkpoint = resolveCheckpoint(spec.checkpoint);
  const backend = backendFor(checkpoint);
  const rows = readDataset(spec.datasetPath);

  const vectors: number[][] = [];
  for (const row of rows) {
    try {
      vectors.push(await embedDocument(backend, row.text, spec.pooling, spec.maxTokens));
    } catch (err) {
      throw new Error(`transcript '${row.transcriptId}': ${(err as Error).message}`);
    }
  }

  writeAtomic(spec.outPath, toCsv(rows, vectors, checkpoint.hiddenSize));
  const sidecar = {
    model_name: checkpoint.name,
    pooling: spec.pooling,
    layer: spec.layer,
    H: checkpoint.hiddenSize,
  };
  writeAtomic(`${spec.outPath}.json`, JSON.stringify(sidecar, null, 2) + '\n');
  return { count: rows.length, hiddenSize: checkpoint.hiddenSize };
}
