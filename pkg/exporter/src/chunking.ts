/**
 * Whitespace-token chunking for documents longer than a model's context.
 *
 * Chunks are `maxTokens` long with 50% overlap (stride = maxTokens / 2),
 * so every token appears in at most two chunks and chunk embeddings can be
 * mean-pooled back into one document vector.  The final chunk is whatever
 * remains, even if short.
 */

export function whitespaceTokens(text: string): string[] {
  return text.split(/\s+/).filter((t) => t.length > 0);
}

export function chunkTokens(tokens: string[], maxTokens: number): string[][] {
  if (maxTokens < 2) {
    throw new Error(`maxTokens must be >= 2, got ${maxTokens}`);
  }
  if (tokens.length === 0) {
    return [];
  }
  if (tokens.length <= maxTokens) {
    return [tokens];
  }
  const stride = Math.floor(maxTokens / 2);
  const chunks: string[][] = [];
  for (let start = 0; start < tokens.length; start += stride) {
    const chunk = tokens.slice(start, start + maxTokens);
    chunks.push(chunk);
    if (start + maxTokens >= tokens.length) {
      break;
    }
  }
  return chunks;
}

export function meanOfVectors(vectors: number[][]): number[] {
  if (vectors.length === 0) {
    throw new Error('cannot average zero vectors');
  }
  const width = vectors[0].length;
  const out = new Array<number>(width).fill(0);
  for (const vec of vectors) {
    if (vec.length !== width) {
      throw new Error(`vector width mismatch: ${vec.length} vs ${width}`);
    }
    for (let i = 0; i < width; i++) {
      out[i] += vec[i];
    }
  }
  for (let i = 0; i < width; i++) {
    out[i] /= vectors.length;
  }
  return out;
}
