// Compiles every contract listed in fixtures/manifest.json with solc 0.4.18
// and writes one JSON envelope per contract next to the sources.
'use strict';
const fs = require('fs');
const path = require('path');
const solc = require(process.env.SOLC_MODULE || 'solc');

const root = path.resolve(__dirname, '..', '..', 'fixtures');
const manifest = JSON.parse(fs.readFileSync(path.join(root, 'manifest.json'), 'utf8'));

function compile(entry, dir) {
  const file = path.join(dir, entry.source);
  const source = fs.readFileSync(file, 'utf8');
  const key = path.basename(entry.source);
  const out = solc.compile({ sources: { [key]: source } }, 0);
  const fatal = (out.errors || []).filter((e) => !/Warning:/.test(e));
  if (fatal.length) {
    throw new Error(`${entry.source}: ${fatal.join('\n')}`);
  }
  const c = out.contracts[`${key}:${entry.contract}`];
  if (!c) {
    throw new Error(`${entry.source}: contract ${entry.contract} not found`);
  }
  const abi = JSON.parse(c.interface);
  const functions = Object.keys(c.functionHashes)
    .sort((a, b) => c.functionHashes[a].localeCompare(c.functionHashes[b]))
    .map((signature) => {
      const name = signature.slice(0, signature.indexOf('('));
      const item = abi.find((i) => i.type === 'function' && i.name === name);
      return {
        selector: c.functionHashes[signature],
        signature,
        payable: Boolean(item && item.payable),
      };
    });
  const fallback = abi.find((i) => i.type === 'fallback');
  return {
    name: entry.contract,
    compiler: `solc ${solc.version()}`,
    runtime: c.runtimeBytecode,
    creation: c.bytecode,
    source,
    source_map: c.srcmapRuntime,
    functions,
    fallback: fallback ? { payable: Boolean(fallback.payable) } : null,
  };
}

for (const group of ['contracts', 'micro']) {
  const dir = path.join(root, group);
  for (const entry of manifest[group]) {
    const envelope = compile(entry, dir);
    fs.writeFileSync(path.join(dir, `${entry.id}.json`), JSON.stringify(envelope, null, 2) + '\n');
    console.log(`${group}/${entry.id}.json`);
  }
}
