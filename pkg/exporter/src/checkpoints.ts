/**
 * Checkpoint registry.
 *
 * The pretrained entries resolve through transformers.js (ONNX weights from
 * the HuggingFace hub); their hidden sizes are fixed by the architectures:
 * 768 for base/distilled models, 1024 for the large variants.  The
 * `test-hash-*` entries are fully offline deterministic embedders used to
 * validate the file format, chunking, and pooling without downloading
 * anything; they are not language models.
 */

export interface CheckpointSpec {
  name: string;
  hiddenSize: number;
  kind: 'pretrained' | 'hash';
  /** HuggingFace model id (pretrained checkpoints only). */
  hubId?: string;
}

export const CHECKPOINTS: Record<string, CheckpointSpec> = {
  'bert-base': { name: 'bert-base', hiddenSize: 768, kind: 'pretrained', hubId: 'Xenova/bert-base-uncased' },
  'bert-large': { name: 'bert-large', hiddenSize: 1024, kind: 'pretrained', hubId: 'Xenova/bert-large-uncased' },
  'roberta-base': { name: 'roberta-base', hiddenSize: 768, kind: 'pretrained', hubId: 'Xenova/roberta-base' },
  'roberta-large': { name: 'roberta-large', hiddenSize: 1024, kind: 'pretrained', hubId: 'Xenova/roberta-large' },
  'distilbert': { name: 'distilbert', hiddenSize: 768, kind: 'pretrained', hubId: 'Xenova/distilbert-base-uncased' },
  'distilroberta': { name: 'distilroberta', hiddenSize: 768, kind: 'pretrained', hubId: 'Xenova/distilroberta-base' },
  // offline validation backends
  'test-hash-768': { name: 'test-hash-768', hiddenSize: 768, kind: 'hash' },
  'test-hash-16': { name: 'test-hash-16', hiddenSize: 16, kind: 'hash' },
};

export function resolveCheckpoint(name: string): CheckpointSpec {
  const spec = CHECKPOINTS[name];
  if (!spec) {
    const known = Object.keys(CHECKPOINTS).join(', ');
    throw new Error(`unknown checkpoint '${name}' (known: ${known})`);
  }
  return spec;
}
