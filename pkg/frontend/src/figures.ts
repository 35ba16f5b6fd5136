import * as echarts from "echarts";

import { TrialLog, assertCompatible } from "./schema";
import {
    BandSeries,
    PointSeries,
    convergenceBand,
    lambdaSweep,
    prefixSeries,
    seriesLabel,
} from "./series";

export type FigureKind = "convergence" | "prefix" | "lambda-sweep" | "ips-error";
export const FIGURE_KINDS: FigureKind[] = ["convergence", "prefix", "lambda-sweep", "ips-error"];

const WIDTH = 760;
const HEIGHT = 640;
const PALETTE = ["#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#9c755f"];

interface PanelSpec {
    xName: string;
    yName: string;
}

function bandSeriesOptions(series: BandSeries, color: string, panel: number): object[] {
    const hasBand = series.std.some((s) => s > 0);
    const out: object[] = [
        {
            name: series.label,
            type: "line",
            xAxisIndex: panel,
            yAxisIndex: panel,
            showSymbol: false,
            lineStyle: { color, width: 2 },
            itemStyle: { color },
            data: series.mean.map((m, i) => [series.steps[i], m]),
        },
    ];
    if (hasBand) {
        // one quad per step interval; stacked-line bands would corrupt a
        // value x-axis (echarts stacks the x coordinates as well)
        const segments = [];
        for (let i = 0; i + 1 < series.steps.length; i++) {
            segments.push([
                series.steps[i],
                series.mean[i] - series.std[i],
                series.mean[i] + series.std[i],
                series.steps[i + 1],
                series.mean[i + 1] - series.std[i + 1],
                series.mean[i + 1] + series.std[i + 1],
            ]);
        }
        out.push({
            name: `${series.label} band`,
            type: "custom",
            xAxisIndex: panel,
            yAxisIndex: panel,
            silent: true,
            z: 1,
            encode: { x: [0, 3], y: [1, 2, 4, 5] },
            renderItem: (_params: unknown, api: { value: (d: number) => number; coord: (p: number[]) => number[] }) => ({
                type: "polygon",
                shape: {
                    points: [
                        api.coord([api.value(0), api.value(2)]),
                        api.coord([api.value(3), api.value(5)]),
                        api.coord([api.value(3), api.value(4)]),
                        api.coord([api.value(0), api.value(1)]),
                    ],
                },
                style: { fill: color, opacity: 0.18 },
            }),
            data: segments,
        });
    }
    return out;
}

function pointSeriesOptions(series: PointSeries, color: string, panel: number): object[] {
    return [
        {
            name: series.label,
            type: "line",
            xAxisIndex: panel,
            yAxisIndex: panel,
            symbol: "circle",
            symbolSize: 6,
            lineStyle: { color, width: 2 },
            itemStyle: { color },
            data: series.y.map((v, i) => [series.x[i], v]),
        },
    ];
}

function twinPanelOption(title: string, panels: [PanelSpec, PanelSpec], series: object[], legend: string[], logLower = false): object {
    return {
        animation: false,
        backgroundColor: "#ffffff",
        title: { text: title, left: "center", textStyle: { fontSize: 15 } },
        legend: { data: legend, bottom: 0, type: "scroll" },
        grid: [
            { left: 70, right: 30, top: 60, height: 220 },
            { left: 70, right: 30, top: 350, height: 220 },
        ],
        xAxis: panels.map((p, i) => ({
            gridIndex: i,
            type: "value",
            name: p.xName,
            nameLocation: "middle",
            nameGap: 28,
            min: "dataMin",
            max: "dataMax",
        })),
        yAxis: panels.map((p, i) => ({
            gridIndex: i,
            type: logLower && i === 1 ? "log" : "value",
            name: p.yName,
            nameLocation: "middle",
            nameGap: 48,
            scale: true,
        })),
        series,
    };
}

export function buildFigure(kind: FigureKind, logs: TrialLog[], k: number, logUnfairness = false): object {
    assertCompatible(logs);
    const legend = logs.map(seriesLabel);
    if (kind === "convergence") {
        const series: object[] = [];
        logs.forEach((log, i) => {
            const color = PALETTE[i % PALETTE.length];
            series.push(...bandSeriesOptions(convergenceBand(log, "ndcg", k), color, 0));
            series.push(...bandSeriesOptions(convergenceBand(log, "unfairness", k), color, 1));
        });
        return twinPanelOption(
            `NDCG@${k} and Unfairness@${k} vs. user interactions`,
            [
                { xName: "users", yName: `NDCG@${k}` },
                { xName: "users", yName: `Unfairness@${k}` },
            ],
            series,
            legend,
            logUnfairness
        );
    }
    if (kind === "prefix") {
        const series: object[] = [];
        logs.forEach((log, i) => {
            const color = PALETTE[i % PALETTE.length];
            series.push(...pointSeriesOptions({ ...prefixSeries(log, "ndcg"), label: seriesLabel(log) }, color, 0));
            series.push(...pointSeriesOptions({ ...prefixSeries(log, "unfairness"), label: seriesLabel(log) }, color, 1));
        });
        return twinPanelOption(
            "Final NDCG and Unfairness vs. prefix size",
            [
                { xName: "prefix k", yName: "NDCG@k" },
                { xName: "prefix k", yName: "Unfairness@k" },
            ],
            series,
            legend,
            logUnfairness
        );
    }
    if (kind === "lambda-sweep") {
        const ndcg = lambdaSweep(logs, "ndcg", k);
        const unf = lambdaSweep(logs, "unfairness", k);
        const series = [
            ...pointSeriesOptions({ ...ndcg, label: `NDCG@${k}` }, PALETTE[0], 0),
            ...pointSeriesOptions({ ...unf, label: `Unfairness@${k}` }, PALETTE[2], 1),
        ];
        return twinPanelOption(
            `Final NDCG@${k} and Unfairness@${k} vs. lambda`,
            [
                { xName: "lambda", yName: `NDCG@${k}` },
                { xName: "lambda", yName: `Unfairness@${k}` },
            ],
            series,
            [`NDCG@${k}`, `Unfairness@${k}`],
            logUnfairness
        );
    }
    // ips-error
    const series: object[] = [];
    logs.forEach((log, i) => {
        series.push(...bandSeriesOptions(convergenceBand(log, "ips_error", k), PALETTE[i % PALETTE.length], 0));
    });
    return {
        animation: false,
        backgroundColor: "#ffffff",
        title: { text: "Relevance-estimate error vs. user interactions", left: "center", textStyle: { fontSize: 15 } },
        legend: { data: legend, bottom: 0, type: "scroll" },
        grid: [{ left: 70, right: 30, top: 60, bottom: 80 }],
        xAxis: [{ type: "value", name: "users", nameLocation: "middle", nameGap: 28, min: "dataMin", max: "dataMax" }],
        yAxis: [{ type: "value", name: "mean |estimate - truth|", nameLocation: "middle", nameGap: 48 }],
        series,
    };
}

export function renderSvg(option: object): string {
    const chart = echarts.init(null as unknown as HTMLElement, null, {
        renderer: "svg",
        ssr: true,
        width: WIDTH,
        height: HEIGHT,
    });
    try {
        chart.setOption(option as echarts.EChartsOption);
        return chart.renderToSVGString();
    } finally {
        chart.dispose();
    }
}
