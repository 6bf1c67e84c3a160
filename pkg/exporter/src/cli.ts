#!/usr/bin/env node
/**
 * export-embeddings: produce an embedding CSV (+ sidecar) from a
 * transcript-level dataset JSONL.
 *
 * Usage:
 *   export-embeddings --dataset d.jsonl --checkpoint distilbert \
 *       --pooling mean --out emb.csv [--max-tokens 512] [--layer last]
 *
 * Exit codes: 0 success, 2 usage error, 1 data/checkpoint failure.
 */
import { CHECKPOINTS } from './checkpoints';
import { DEFAULT_MAX_TOKENS, runExport } from './exporter';
import { Pooling } from './backends';

interface ParsedArgs {
  dataset?: string;
  checkpoint?: string;
  pooling: Pooling;
  out?: string;
  maxTokens: number;
  layer: string;
  help: boolean;
}

const USAGE = `usage: export-embeddings --dataset <jsonl> --checkpoint <name> --out <csv>
                         [--pooling mean|first-token] [--max-tokens N] [--layer last]

checkpoints: ${Object.keys(CHECKPOINTS).join(', ')}

Writes <out> (CSV: id,e0,...,e{H-1}) and <out>.json (provenance sidecar).
Pretrained checkpoints need the optional @huggingface/transformers package
and hub access; the test-hash-* checkpoints run fully offline.`;

export function parseArgs(argv: string[]): ParsedArgs {
  const parsed: ParsedArgs = {
    pooling: 'mean',
    maxTokens: DEFAULT_MAX_TOKENS,
    layer: 'last',
    help: false,
  };
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    const next = () => {
      i += 1;
      if (i >= argv.length) {
        throw new Error(`missing value for ${arg}`);
      }
      return argv[i];
    };
    switch (arg) {
      case '--dataset': parsed.dataset = next(); break;
      case '--checkpoint': parsed.checkpoint = next(); break;
      case '--out': parsed.out = next(); break;
      case '--layer': parsed.layer = next(); break;
      case '--pooling': {
        const value = next();
        if (value !== 'mean' && value !== 'first-token') {
          throw new Error(`--pooling must be mean or first-token, got ${value}`);
        }
        parsed.pooling = value;
        break;
      }
      case '--max-tokens': {
        const value = Number(next());
        if (!Number.isInteger(value) || value < 2) {
          throw new Error('--max-tokens must be an integer >= 2');
        }
        parsed.maxTokens = value;
        break;
      }
      case '--help':
      case '-h':
        parsed.help = true;
        break;
      default:
        throw new Error(`unknown argument ${arg}`);
    }
  }
  return parsed;
}

export async function main(argv: string[]): Promise<number> {
  let parsed: ParsedArgs;
  try {
    parsed = parseArgs(argv);
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n${USAGE}\n`);
    return 2;
  }
  if (parsed.help) {
    process.stdout.write(USAGE + '\n');
    return 0;
  }
  if (!parsed.dataset || !parsed.checkpoint || !parsed.out) {
    process.stderr.write(`error: --dataset, --checkpoint and --out are required\n${USAGE}\n`);
    return 2;
  }
  try {
    const result = await runExport({
      datasetPath: parsed.dataset,
      checkpoint: parsed.checkpoint,
      pooling: parsed.pooling,
      outPath: parsed.out,
      maxTokens: parsed.maxTokens,
      layer: parsed.layer,
    });
    process.stdout.write(
      `wrote ${result.count} embeddings (H=${result.hiddenSize}) to ${parsed.out}\n`);
    return 0;
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
}

if (require.main === module) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
