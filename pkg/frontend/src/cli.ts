#!/usr/bin/env node
import * as fs from "fs";
import * as path from "path";

import { FIGURE_KINDS, FigureKind, buildFigure, renderSvg } from "./figures";
import { expandInputs, loadTrialLog } from "./schema";
import { isVisuallyMonotone, lambdaSweep } from "./series";

interface Args {
    kind: FigureKind;
    inputs: string[];
    out: string;
    k: number;
    logUnfairness: boolean;
}

function usage(): never {
    process.stderr.write(
        "usage: dynfair-plot plot --kind <convergence|prefix|lambda-sweep|ips-error> " +
            "--inputs <csv|dir|glob>... --out <file.svg> [--k <prefix>] [--log-unfairness]\n"
    );
    process.exit(2);
}

export function parseArgs(argv: string[]): Args {
    if (argv[0] !== "plot") usage();
    let kind: string | undefined;
    const inputs: string[] = [];
    let out: string | undefined;
    let k = 10;
    let logUnfairness = false;
    for (let i = 1; i < argv.length; i++) {
        const arg = argv[i];
        if (arg === "--kind") kind = argv[++i];
        else if (arg === "--inputs") {
            while (i + 1 < argv.length && !argv[i + 1].startsWith("--")) inputs.push(argv[++i]);
        } else if (arg === "--out") out = argv[++i];
        else if (arg === "--k") k = Number(argv[++i]);
        else if (arg === "--log-unfairness") logUnfairness = true;
        else usage();
    }
    if (!kind || !FIGURE_KINDS.includes(kind as FigureKind) || inputs.length === 0 || !out) usage();
    if (!Number.isInteger(k) || k < 1) usage();
    return { kind: kind as FigureKind, inputs, out, k, logUnfairness };
}

export function runPlot(args: Args): string {
    const files = expandInputs(args.inputs);
    const logs = files.map(loadTrialLog);
    const option = buildFigure(args.kind, logs, args.k, args.logUnfairness);
    const svg = renderSvg(option);
    fs.mkdirSync(path.dirname(path.resolve(args.out)), { recursive: true });
    fs.writeFileSync(args.out, svg);
    let note = "";
    if (args.kind === "lambda-sweep") {
        const unf = lambdaSweep(logs, "unfairness", args.k);
        note = isVisuallyMonotone(unf)
            ? " (unfairness curve is monotone within trial noise)"
            : " (warning: unfairness curve is not monotone)";
    }
    return `wrote ${args.out} [${args.kind}, ${files.length} input(s)]${note}`;
}

if (require.main === module) {
    try {
        process.stdout.write(runPlot(parseArgs(process.argv.slice(2))) + "\n");
    } catch (err) {
        process.stderr.write(`error: ${(err as Error).message}\n`);
        process.exit(1);
    }
}
