import { TrialLog } from "./schema";

/** Mean and trial-spread of one metric as a function of the logged step. */
export interface BandSeries {
    label: string;
    steps: number[];
    mean: number[];
    std: number[];
}

export interface PointSeries {
    label: string;
    x: number[];
    y: number[];
    err: number[];
}

function meanStd(values: number[]): { mean: number; std: number } {
    const mean = values.reduce((a, b) => a + b, 0) / values.length;
    if (values.length < 2) return { mean, std: 0 };
    const ss = values.reduce((a, b) => a + (b - mean) ** 2, 0) / (values.length - 1);
    return { mean, std: Math.sqrt(ss) };
}

export function seriesLabel(log: TrialLog): string {
    return log.lambda === null ? log.policy : `${log.policy}(λ=${log.lambda})`;
}

function metricAt(row: { ndcg: Record<number, number>; unfairness: Record<number, number>; ipsError: number }, metric: string, k: number): number {
    if (metric === "ndcg") return row.ndcg[k];
    if (metric === "unfairness") return row.unfairness[k];
    return row.ipsError;
}

/** Aggregate a per-step metric across trials (mean ± sample std per step). */
export function convergenceBand(log: TrialLog, metric: "ndcg" | "unfairness" | "ips_error", k: number): BandSeries {
    if (metric !== "ips_error" && !log.trackedKs.includes(k)) {
        throw new Error(`${log.source}: prefix ${k} is not tracked (${log.trackedKs.join(",")})`);
    }
    const perStep = new Map<number, number[]>();
    for (const row of log.rows) {
        const bucket = perStep.get(row.step) ?? [];
        bucket.push(metricAt(row, metric, k));
        perStep.set(row.step, bucket);
    }
    const steps = [...perStep.keys()].sort((a, b) => a - b);
    const mean: number[] = [];
    const std: number[] = [];
    for (const step of steps) {
        const { mean: m, std: s } = meanStd(perStep.get(step)!);
        mean.push(m);
        std.push(s);
    }
    return { label: seriesLabel(log), steps, mean, std };
}

/** Per-trial values of a metric at the final logged step. */
export function finalValues(log: TrialLog, metric: "ndcg" | "unfairness" | "ips_error", k: number): number[] {
    const last = Math.max(...log.rows.map((r) => r.step));
    return log.rows.filter((r) => r.step === last).map((r) => metricAt(r, metric, k));
}

/** Final-step metric versus tracked prefix k, averaged across trials. */
export function prefixSeries(log: TrialLog, metric: "ndcg" | "unfairness"): PointSeries {
    const x: number[] = [];
    const y: number[] = [];
    const err: number[] = [];
    for (const k of log.trackedKs) {
        const { mean, std } = meanStd(finalValues(log, metric, k));
        x.push(k);
        y.push(mean);
        err.push(std);
    }
    return { label: seriesLabel(log), x, y, err };
}

/** Final-step metric versus the lambda of each input log (one log per lambda). */
export function lambdaSweep(logs: TrialLog[], metric: "ndcg" | "unfairness", k: number): PointSeries {
    const entries = logs.map((log) => {
        if (log.lambda === null) {
            throw new Error(`${log.source}: lambda-sweep inputs must come from the mmf policy`);
        }
        const { mean, std } = meanStd(finalValues(log, metric, k));
        return { lambda: log.lambda, mean, std };
    });
    entries.sort((a, b) => a.lambda - b.lambda);
    return {
        label: `${metric}@${k}`,
        x: entries.map((e) => e.lambda),
        y: entries.map((e) => e.mean),
        err: entries.map((e) => e.std),
    };
}

/** Non-increasing up to one adjacent inversion within one pooled std. */
export function isVisuallyMonotone(series: PointSeries): boolean {
    let inversions = 0;
    for (let i = 0; i + 1 < series.y.length; i++) {
        const gap = series.y[i + 1] - series.y[i];
        if (gap > 0) {
            inversions += 1;
            const pooled = Math.sqrt((series.err[i] ** 2 + series.err[i + 1] ** 2) / 2);
            if (inversions > 1 || gap > pooled) return false;
        }
    }
    return true;
}
