/**
 * Reader for adscreen dataset JSONL files (transcript granularity).
 *
 * The first record is a header `{variant, granularity, count}`; every
 * following record carries `transcript_id` and `text`.  Utterance-level
 * files are rejected: embeddings are per transcript.
 */
import * as fs from 'node:fs';

export interface DocumentRow {
  transcriptId: string;
  text: string;
}

export function readDataset(path: string): DocumentRow[] {
  const raw = fs.readFileSync(path, 'utf-8');
  const lines = raw.split('\n').filter((line) => line.trim().length > 0);
  if (lines.length === 0) {
    throw new Error(`${path}: empty dataset file`);
  }
  const header = JSON.parse(lines[0]);
  if (typeof header.variant !== 'string') {
    throw new Error(`${path}: first record must be a dataset header with a variant`);
  }
  if (header.granularity === 'utterance') {
    throw new Error(
      `${path}: utterance-level dataset (${header.variant}); embeddings need a transcript-level variant`);
  }
  const rows: DocumentRow[] = [];
  const seen = new Set<string>();
  for (let i = 1; i < lines.length; i++) {
    const record = JSON.parse(lines[i]);
    const id = record.transcript_id;
    if (typeof id !== 'string' || id.length === 0) {
      throw new Error(`${path}:${i + 1}: record without transcript_id`);
    }
    if (seen.has(id)) {
      throw new Error(`${path}:${i + 1}: duplicate transcript_id '${id}'`);
    }
    seen.add(id);
    if (typeof record.text !== 'string') {
      throw new Error(`${path}:${i + 1}: record without text`);
    }
    if (record.text.trim().length === 0) {
      throw new Error(`${path}:${i + 1}: empty document for transcript '${id}'`);
    }
    rows.push({ transcriptId: id, text: record.text });
  }
  if (rows.length === 0) {
    throw new Error(`${path}: no document records after the header`);
  }
  return rows;
}
