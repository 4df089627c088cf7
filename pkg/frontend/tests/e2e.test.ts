// End-to-end: drives the real warehouse API (spawned from the Python
// package) with the app running in a scripted DOM. Covers the drill-down
// path, the one-query-per-action invariant, undo, export parity with the
// CLI, error toasts, and pipeline replay purity.

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import fs from "node:fs";
import net from "node:net";
import os from "node:os";
import path from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { PivotApp } from "../src/app.js";

const PYTHON = process.env.PYTHON ?? "python3";

let server: ChildProcess;
let warehouseDir: string;
let base: string;
let queryPosts = 0;

const countingFetch: typeof fetch = (input, init) => {
  const url = String(input);
  if (url.includes("/api/query") && init?.method === "POST") {
    queryPosts += 1;
  }
  return fetch(input, init);
};

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = net.createServer();
    probe.listen(0, "127.0.0.1", () => {
      const port = (probe.address() as net.AddressInfo).port;
      probe.close(() => resolve(port));
    });
    probe.on("error", reject);
  });
}

beforeAll(async () => {
  warehouseDir = fs.mkdtempSync(path.join(os.tmpdir(), "samplewh-"));
  execFileSync(PYTHON, ["-m", "xolap.cli", "gen-sample", warehouseDir]);
  const port = await freePort();
  base = `http://127.0.0.1:${port}`;
  server = spawn(PYTHON, ["-m", "xolap.cli", "serve", warehouseDir, "--port", String(port)], {
    stdio: ["ignore", "pipe", "pipe"],
  });
  const client = new ApiClient(base);
  for (let attempt = 0; attempt < 100; attempt += 1) {
    if (await client.healthy()) return;
    await new Promise((resolve) => setTimeout(resolve, 100));
  }
  throw new Error("warehouse API did not come up");
});

afterAll(() => {
  server?.kill();
});

function makeApp(): PivotApp {
  const root = document.createElement("div");
  document.body.appendChild(root);
  return new PivotApp(root, new ApiClient(base, countingFetch));
}

function gridHtml(app: PivotApp): string {
  return app.root.querySelector(".grid-box")!.innerHTML;
}

describe("pivot explorer against SampleWH", () => {
  it("runs the drill-down scenario with one query per action", async () => {
    const app = makeApp();
    await app.start();

    // initial workspace: three dimensions listed, grand total 150 shown
    const panel = app.root.querySelector(".schema-panel")!;
    expect(panel.textContent).toContain("date");
    expect(panel.textContent).toContain("product");
    expect(panel.textContent).toContain("store");
    expect(gridHtml(app)).toContain("150");

    // add the date axis at year
    queryPosts = 0;
    await app.addAxis("date", "year");
    expect(queryPosts).toBe(1);
    expect(gridHtml(app)).toContain("2007");
    const beforeDrill = gridHtml(app);

    // drill down year -> month: two rows, 60 and 90
    queryPosts = 0;
    await app.applyOp({ op: "drilldown", dimension: "date", to_level: "month" });
    expect(queryPosts).toBe(1);
    const rows = [...app.root.querySelectorAll(".grid tbody tr")];
    expect(rows.length).toBe(2);
    expect(rows[0].textContent).toContain("Jan");
    expect(rows[0].textContent).toContain("60");
    expect(rows[1].textContent).toContain("Feb");
    expect(rows[1].textContent).toContain("90");

    // undo restores the pre-drill grid exactly
    queryPosts = 0;
    await app.undo();
    expect(queryPosts).toBe(1);
    expect(gridHtml(app)).toBe(beforeDrill);
  });

  it("export csv matches the CLI byte for byte", async () => {
    const app = makeApp();
    await app.start();
    await app.addAxis("date", "year");
    await app.applyOp({ op: "drilldown", dimension: "date", to_level: "month" });

    const fromUi = await app.exportText("csv");
    const pipelineFile = path.join(warehouseDir, "ui-pipeline.json");
    fs.writeFileSync(pipelineFile, JSON.stringify(app.pipeline));
    const fromCli = execFileSync(
      PYTHON,
      ["-m", "xolap.cli", "query", warehouseDir, pipelineFile, "--format", "csv"],
      { encoding: "utf-8" },
    );
    expect(fromUi).toBe(fromCli);
  });

  it("export xquery equals the compile endpoint output", async () => {
    const app = makeApp();
    await app.start();
    const text = await app.exportText("xquery");
    expect(text).toContain('xquery version "3.1";');
    expect(text).toContain("declare function local:walk");
  });

  it("a rejected op leaves the pipeline unchanged and shows a toast", async () => {
    const app = makeApp();
    await app.start();
    const before = [...app.pipeline];
    const beforeGrid = gridHtml(app);
    await app.applyOp({ op: "slice", dimension: "nope", level: "x", member: "y" });
    expect(app.pipeline).toEqual(before);
    expect(gridHtml(app)).toBe(beforeGrid);
    const toast = app.root.querySelector(".toast");
    expect(toast).not.toBeNull();
    expect(toast!.textContent).toContain("op 1");
    expect(toast!.textContent).toContain("unknown_dimension");
  });

  it("replaying a pipeline reproduces the identical grid", async () => {
    const first = makeApp();
    await first.start();
    await first.addAxis("date", "year");
    await first.applyOp({ op: "drilldown", dimension: "date", to_level: "month" });
    await first.applyOp({ op: "switch", dimension: "date", members: ["Feb", "Jan"] });

    const second = makeApp();
    await second.start();
    second.pipeline = JSON.parse(JSON.stringify(first.pipeline));
    second.result = await second.api.query(second.pipeline);
    second.render();
    expect(gridHtml(second)).toBe(gridHtml(first));
  });

  it("queued actions run one at a time in order", async () => {
    const app = makeApp();
    await app.start();
    queryPosts = 0;
    // fire two actions without awaiting the first
    const a = app.addAxis("date", "year");
    const b = app.applyOp({ op: "drilldown", dimension: "date", to_level: "month" });
    await Promise.all([a, b]);
    expect(queryPosts).toBe(2);
    expect(app.pipeline.length).toBe(2);
    const rows = [...app.root.querySelectorAll(".grid tbody tr")];
    expect(rows.map((r) => r.querySelector("th")!.textContent)).toEqual(["Jan", "Feb"]);
  });

  it("unreachable API shows the error banner with retry", async () => {
    const root = document.createElement("div");
    document.body.appendChild(root);
    const app = new PivotApp(root, new ApiClient("http://127.0.0.1:9"));
    await app.start();
    const banner = root.querySelector(".banner.error");
    expect(banner).not.toBeNull();
    expect(banner!.querySelector("button")!.textContent).toBe("retry");
  });
});
