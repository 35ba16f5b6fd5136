import * as fs from "fs";
import * as os from "os";
import * as path from "path";
import { describe, expect, it } from "vitest";

import { FIGURE_KINDS, buildFigure, renderSvg } from "../src/figures";
import { parseArgs, runPlot } from "../src/cli";
import { loadTrialLog } from "../src/schema";

const FIXTURES = path.join(__dirname, "fixtures");

function tmpOut(name: string): string {
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), "dynfair-plot-"));
    return path.join(dir, name);
}

describe("buildFigure + renderSvg", () => {
    const policyLogs = ["news_naive.csv", "news_dultr-glob.csv", "news_fairco.csv", "news_mmf_lambda0.6.csv"].map(
        (f) => loadTrialLog(path.join(FIXTURES, f))
    );
    const lambdaLogs = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0].map((lam) =>
        loadTrialLog(path.join(FIXTURES, `news_mmf_lambda${lam.toFixed(1)}.csv`))
    );

    it("renders every figure kind to SVG", () => {
        for (const kind of FIGURE_KINDS) {
            const logs = kind === "lambda-sweep" ? lambdaLogs : policyLogs;
            const svg = renderSvg(buildFigure(kind, logs, 10));
            expect(svg.startsWith("<svg")).toBe(true);
            expect(svg).toContain("</svg>");
            expect(svg.length).toBeGreaterThan(2000);
        }
    });

    it("single-trial input renders without bands", () => {
        const one = loadTrialLog(path.join(FIXTURES, "news_naive.csv"));
        const singleTrial = { ...one, rows: one.rows.filter((r) => r.trial === 0) };
        const option = buildFigure("convergence", [singleTrial], 10) as { series: object[] };
        // two panels, one line each, no band series
        expect(option.series.length).toBe(2);
    });

    it("multi-trial input renders mean lines plus bands", () => {
        const option = buildFigure("convergence", policyLogs.slice(0, 1), 10) as { series: object[] };
        expect(option.series.length).toBe(4); // (line + band polygons) x 2 panels
        const svg = renderSvg(option);
        expect(svg).toContain("<polygon");
    });
});

describe("cli", () => {
    it("parses flags", () => {
        const args = parseArgs([
            "plot", "--kind", "prefix", "--inputs", "a.csv", "b.csv", "--out", "fig.svg", "--k", "5",
        ]);
        expect(args.kind).toBe("prefix");
        expect(args.inputs).toEqual(["a.csv", "b.csv"]);
        expect(args.k).toBe(5);
        expect(args.logUnfairness).toBe(false);
        expect(parseArgs(["plot", "--kind", "prefix", "--inputs", "a.csv", "--out", "o.svg", "--log-unfairness"]).logUnfairness).toBe(true);
    });

    it("re-rendering identical inputs is byte-identical", () => {
        // the renderer numbers its style scopes per process, so compare two
        // fresh invocations, which is how the tool is actually rerun
        const { execFileSync } = require("child_process");
        const cli = path.join(__dirname, "..", "dist", "cli.js");
        const outs = [tmpOut("a.svg"), tmpOut("b.svg")];
        for (const out of outs) {
            execFileSync("node", [cli, "plot", "--kind", "prefix",
                "--inputs", path.join(FIXTURES, "news_fairco.csv"), "--out", out]);
        }
        expect(fs.readFileSync(outs[0], "utf-8")).toBe(fs.readFileSync(outs[1], "utf-8"));
    });

    it("log-scale unfairness axis is opt-in", () => {
        const logs = [loadTrialLog(path.join(FIXTURES, "news_fairco.csv"))];
        const linear = buildFigure("prefix", logs, 10) as { yAxis: Array<{ type: string }> };
        const logged = buildFigure("prefix", logs, 10, true) as { yAxis: Array<{ type: string }> };
        expect(linear.yAxis[1].type).toBe("value");
        expect(logged.yAxis[1].type).toBe("log");
        expect(logged.yAxis[0].type).toBe("value");
        const svg = renderSvg(logged);
        expect(svg.startsWith("<svg")).toBe(true);
    });

    it("produces all four figure kinds end-to-end", () => {
        for (const kind of FIGURE_KINDS) {
            const out = tmpOut(`${kind}.svg`);
            const inputs =
                kind === "lambda-sweep"
                    ? [path.join(FIXTURES, "news_mmf_lambda*.csv")]
                    : [path.join(FIXTURES, "news_naive.csv"), path.join(FIXTURES, "news_fairco.csv")];
            const note = runPlot({ kind, inputs, out, k: 10 });
            expect(fs.existsSync(out)).toBe(true);
            expect(fs.readFileSync(out, "utf-8").startsWith("<svg")).toBe(true);
            expect(note).toContain(kind);
        }
    });

    it("reports monotonicity on the lambda sweep", () => {
        const out = tmpOut("sweep.svg");
        const note = runPlot({
            kind: "lambda-sweep",
            inputs: [path.join(FIXTURES, "news_mmf_lambda*.csv")],
            out,
            k: 10,
        });
        expect(note).toContain("monotone");
        expect(note).not.toContain("warning");
    });

    it("fails loudly on schema mismatch", () => {
        const dir = fs.mkdtempSync(path.join(os.tmpdir(), "dynfair-bad-"));
        const bad = path.join(dir, "bad.csv");
        fs.writeFileSync(bad, "trial,step,policy,lambda,ndcg@10,ips_error,step_micros\n0,1,x,,0.5,0.1,0\n");
        expect(() => runPlot({ kind: "convergence", inputs: [bad], out: tmpOut("x.svg"), k: 10 })).toThrow(
            /unfairness@/
        );
    });
});
