import * as fs from "fs";
import * as path from "path";

/** One metric row of a trial log. */
export interface LogRow {
    trial: number;
    step: number;
    policy: string;
    lambda: number | null;
    ndcg: Record<number, number>;
    unfairness: Record<number, number>;
    ipsError: number;
    stepMicros: number;
}

export interface TrialLog {
    source: string;
    policy: string;
    lambda: number | null;
    trackedKs: number[];
    rows: LogRow[];
}

const FIXED_HEAD = ["trial", "step", "policy", "lambda"];
const FIXED_TAIL = ["ips_error", "step_micros"];

/** Parse and validate one trial-log CSV written by the simulator. */
export function parseTrialLog(source: string, text: string): TrialLog {
    const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
    if (lines.length < 2) {
        throw new Error(`${source}: expected a header and at least one row`);
    }
    const header = lines[0].split(",");
    for (const col of [...FIXED_HEAD, ...FIXED_TAIL]) {
        if (!header.includes(col)) {
            throw new Error(`${source}: missing column '${col}'`);
        }
    }
    const ndcgKs: number[] = [];
    const unfairnessKs: number[] = [];
    for (const col of header) {
        if (col.startsWith("ndcg@")) ndcgKs.push(Number(col.slice(5)));
        if (col.startsWith("unfairness@")) unfairnessKs.push(Number(col.slice(11)));
    }
    if (ndcgKs.length === 0) throw new Error(`${source}: missing column 'ndcg@<k>'`);
    if (ndcgKs.join() !== unfairnessKs.join()) {
        throw new Error(`${source}: ndcg@ and unfairness@ prefixes disagree`);
    }
    const index = new Map(header.map((c, i) => [c, i]));
    const rows: LogRow[] = [];
    for (let lineNo = 1; lineNo < lines.length; lineNo++) {
        const cells = lines[lineNo].split(",");
        if (cells.length !== header.length) {
            throw new Error(`${source}:${lineNo + 1}: expected ${header.length} cells, got ${cells.length}`);
        }
        const num = (col: string): number => {
            const v = Number(cells[index.get(col)!]);
            if (!Number.isFinite(v)) {
                throw new Error(`${source}:${lineNo + 1}: non-numeric value in '${col}'`);
            }
            return v;
        };
        const lambdaCell = cells[index.get("lambda")!];
        const ndcg: Record<number, number> = {};
        const unfairness: Record<number, number> = {};
        for (const k of ndcgKs) {
            ndcg[k] = num(`ndcg@${k}`);
            unfairness[k] = num(`unfairness@${k}`);
        }
        rows.push({
            trial: num("trial"),
            step: num("step"),
            policy: cells[index.get("policy")!],
            lambda: lambdaCell === "" ? null : Number(lambdaCell),
            ndcg,
            unfairness,
            ipsError: num("ips_error"),
            stepMicros: num("step_micros"),
        });
    }
    const first = rows[0];
    return {
        source,
        policy: first.policy,
        lambda: first.lambda,
        trackedKs: ndcgKs,
        rows,
    };
}

export function loadTrialLog(file: string): TrialLog {
    return parseTrialLog(file, fs.readFileSync(file, "utf-8"));
}

function escapeRegex(text: string): string {
    return text.replace(/[.*+?^${}()|[\]\\]/g, "\\$&");
}

function segmentRegex(segment: string): RegExp {
    return new RegExp("^" + segment.split("*").map(escapeRegex).join(".*") + "$");
}

/** Expand one path that may contain `*` in any segment. */
function expandPattern(pattern: string): string[] {
    const segments = pattern.split(path.sep);
    let current = [path.isAbsolute(pattern) ? path.sep : "."];
    for (const segment of segments) {
        if (segment.length === 0) continue;
        const next: string[] = [];
        if (segment.includes("*")) {
            const regex = segmentRegex(segment);
            for (const base of current) {
                if (!fs.existsSync(base) || !fs.statSync(base).isDirectory()) continue;
                for (const name of fs.readdirSync(base).sort()) {
                    if (regex.test(name)) next.push(path.join(base, name));
                }
            }
        } else {
            for (const base of current) {
                const candidate = path.join(base, segment);
                if (fs.existsSync(candidate)) next.push(candidate);
            }
        }
        current = next;
    }
    return current;
}

/** Expand input specs: literal paths, directories (all .csv inside) and
 * wildcards in any path segment, like "runs/news-STAR/log.csv" with STAR
 * spelled as an asterisk. */
export function expandInputs(specs: string[]): string[] {
    const out: string[] = [];
    for (const spec of specs) {
        for (const part of spec.split(",")) {
            if (part.length === 0) continue;
            if (part.includes("*")) {
                out.push(...expandPattern(part));
            } else if (fs.existsSync(part) && fs.statSync(part).isDirectory()) {
                for (const name of fs.readdirSync(part).sort()) {
                    if (name.endsWith(".csv")) out.push(path.join(part, name));
                }
            } else {
                out.push(part);
            }
        }
    }
    if (out.length === 0) throw new Error(`no input files matched: ${specs.join(" ")}`);
    return out;
}

/** All logs must share tracked prefixes and logging cadence to be drawn on
 * common axes. */
export function assertCompatible(logs: TrialLog[]): void {
    const ks = logs[0].trackedKs.join();
    for (const log of logs) {
        if (log.trackedKs.join() !== ks) {
            throw new Error(`${log.source}: tracked prefixes differ from ${logs[0].source}`);
        }
    }
}
