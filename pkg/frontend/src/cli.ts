/** Render one figure: node dist/cli.js <kind> --input <csv> --out <svg> */

import { writeFileSync } from "node:fs";
import { FigureKind, render, renderStabilityFit } from "./figures.js";

function usage(): never {
  console.error(
    "usage: cli.js <snapshot|levelsets|metrics|stability_fit> " +
      "--input <csv> --out <svg>",
  );
  process.exit(2);
}

export function main(argv: string[]): number {
  const [kind, ...rest] = argv;
  if (!kind) usage();
  const opts: Record<string, string> = {};
  for (let i = 0; i < rest.length; i += 2) {
    if (!rest[i].startsWith("--") || rest[i + 1] === undefined) usage();
    opts[rest[i].slice(2)] = rest[i + 1];
  }
  if (!opts.input || !opts.out) usage();
  if (kind === "stability_fit") {
    const out = renderStabilityFit(opts.input);
    writeFileSync(opts.out, out.svg);
    console.log(`slope=${out.slope.toFixed(12)}`);
  } else {
    writeFileSync(opts.out, render(kind as FigureKind, opts.input));
  }
  console.log(`wrote ${opts.out}`);
  return 0;
}

main(process.argv.slice(2));
