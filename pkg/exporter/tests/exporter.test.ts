import assert from 'node:assert/strict';
import * as fs from 'node:fs';
import * as os from 'node:os';
import * as path from 'node:path';
import { test } from 'node:test';

import { readDataset } from '../src/dataset';
import { runExport } from '../src/exporter';
import { main } from '../src/cli';

function tempDir(): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), 'exporter-test-'));
}

function writeDataset(dir: string, rows: Array<{ id: string; text: string }>): string {
  const file = path.join(dir, 'docs.jsonl');
  const lines = [
    JSON.stringify({ variant: 'PAR', granularity: 'transcript', count: rows.length }),
    ...rows.map((r) => JSON.stringify({
      transcript_id: r.id, text: r.text, label: 'AD', mmse: 20, aggregates: null,
    })),
  ];
  fs.writeFileSync(file, lines.join('\n') + '\n');
  return file;
}

const THREE_DOCS = [
  { id: 'alpha', text: 'the boy um reaches for the cookie jar .' },
  { id: 'beta', text: 'water spills um um over the sink .' },
  { id: 'gamma', text: 'she dries the dishes while the stool tips .' },
];

test('three-document export has the documented shape', async () => {
  const dir = tempDir();
  const dataset = writeDataset(dir, THREE_DOCS);
  const out = path.join(dir, 'emb.csv');
  const result = await runExport({
    datasetPath: dataset, checkpoint: 'test-hash-768', pooling: 'mean',
    outPath: out, maxTokens: 512, layer: 'last',
  });
  assert.equal(result.count, 3);
  assert.equal(result.hiddenSize, 768);

  const lines = fs.readFileSync(out, 'utf-8').trimEnd().split('\n');
  assert.equal(lines.length, 4);
  const header = lines[0].split(',');
  assert.equal(header[0], 'id');
  assert.equal(header.length, 769);
  assert.equal(header[1], 'e0');
  assert.equal(header[768], 'e767');
  assert.deepEqual(lines.slice(1).map((l) => l.split(',')[0]),
    ['alpha', 'beta', 'gamma']);

  const sidecar = JSON.parse(fs.readFileSync(out + '.json', 'utf-8'));
  assert.deepEqual(sidecar, {
    model_name: 'test-hash-768', pooling: 'mean', layer: 'last', H: 768,
  });
});

test('export is byte-identical across runs', async () => {
  const dir = tempDir();
  const dataset = writeDataset(dir, THREE_DOCS);
  const outA = path.join(dir, 'a.csv');
  const outB = path.join(dir, 'b.csv');
  const spec = { datasetPath: dataset, checkpoint: 'test-hash-16' as const,
                 pooling: 'mean' as const, maxTokens: 512, layer: 'last' };
  await runExport({ ...spec, outPath: outA });
  await runExport({ ...spec, outPath: outB });
  assert.deepEqual(fs.readFileSync(outA), fs.readFileSync(outB));
  assert.deepEqual(fs.readFileSync(outA + '.json'), fs.readFileSync(outB + '.json'));
});

test('permuting input rows permutes output rows identically', async () => {
  const dir = tempDir();
  const forward = writeDataset(dir, THREE_DOCS);
  const outF = path.join(dir, 'f.csv');
  await runExport({ datasetPath: forward, checkpoint: 'test-hash-16',
                    pooling: 'mean', outPath: outF, maxTokens: 512, layer: 'last' });
  const reversedDir = tempDir();
  const reversed = writeDataset(reversedDir, [...THREE_DOCS].reverse());
  const outR = path.join(reversedDir, 'r.csv');
  await runExport({ datasetPath: reversed, checkpoint: 'test-hash-16',
                    pooling: 'mean', outPath: outR, maxTokens: 512, layer: 'last' });
  const byId = (file: string) => {
    const lines = fs.readFileSync(file, 'utf-8').trimEnd().split('\n').slice(1);
    return new Map(lines.map((l) => [l.split(',')[0], l]));
  };
  const f = byId(outF);
  const r = byId(outR);
  assert.deepEqual([...f.keys()].sort(), [...r.keys()].sort());
  for (const [id, line] of f) {
    assert.equal(r.get(id), line);
  }
});

test('chunked long documents still export one row', async () => {
  const dir = tempDir();
  const longText = Array.from({ length: 1200 }, (_, i) => `tok${i % 40}`).join(' ');
  const dataset = writeDataset(dir, [{ id: 'long', text: longText }]);
  const out = path.join(dir, 'long.csv');
  const result = await runExport({ datasetPath: dataset, checkpoint: 'test-hash-16',
                                   pooling: 'mean', outPath: out, maxTokens: 64,
                                   layer: 'last' });
  assert.equal(result.count, 1);
  const lines = fs.readFileSync(out, 'utf-8').trimEnd().split('\n');
  assert.equal(lines.length, 2);
});

test('empty document is a hard error naming the transcript', async () => {
  const dir = tempDir();
  const file = path.join(dir, 'docs.jsonl');
  fs.writeFileSync(file, [
    JSON.stringify({ variant: 'PAR', granularity: 'transcript', count: 1 }),
    JSON.stringify({ transcript_id: 'void', text: '   ', label: 'AD' }),
  ].join('\n') + '\n');
  assert.throws(() => readDataset(file), /void/);
});

test('utterance-level datasets are rejected', () => {
  const dir = tempDir();
  const file = path.join(dir, 'segments.jsonl');
  fs.writeFileSync(file, [
    JSON.stringify({ variant: 'PAR_SPLT', granularity: 'utterance', count: 1 }),
    JSON.stringify({ transcript_id: 't', utterance_index: 0, text: 'hi', label: 'AD' }),
  ].join('\n') + '\n');
  assert.throws(() => readDataset(file), /utterance-level/);
});

test('cli happy path and usage errors', async () => {
  const dir = tempDir();
  const dataset = writeDataset(dir, THREE_DOCS);
  const out = path.join(dir, 'cli.csv');
  const code = await main(['--dataset', dataset, '--checkpoint', 'test-hash-16',
                           '--pooling', 'mean', '--out', out]);
  assert.equal(code, 0);
  assert.ok(fs.existsSync(out));
  assert.ok(fs.existsSync(out + '.json'));

  assert.equal(await main(['--dataset', dataset]), 2);
  assert.equal(await main(['--bogus']), 2);
  assert.equal(await main(['--dataset', dataset, '--checkpoint', 'nope',
                           '--out', out]), 1);
  assert.equal(await main(['--help']), 0);
});
