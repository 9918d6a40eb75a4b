import init, { m_add_demo, threshold_curve, ratio_sweep_csv } from "./pkg/procure_web.js";

const $ = (id) => document.getElementById(id);
const SVG = "http://www.w3.org/2000/svg";

function call(out, f) {
  const v = JSON.parse(f());
  if (v.error) {
    out.innerHTML = `<p class="error">${v.error}</p>`;
    return null;
  }
  return v;
}

function table(head, rows) {
  const th = head.map((h) => `<th>${h}</th>`).join("");
  const tr = rows.map((r) => `<tr>${r.map((c) => `<td>${c}</td>`).join("")}</tr>`).join("");
  return `<table><tr>${th}</tr>${tr}</table>`;
}

function el(name, attrs, parent) {
  const e = document.createElementNS(SVG, name);
  for (const [k, v] of Object.entries(attrs)) e.setAttribute(k, v);
  parent.appendChild(e);
  return e;
}

function plot(out, series, xmax, ymax, marks = []) {
  const w = 640, h = 260, pad = 30;
  const x = (v) => pad + (v / xmax) * (w - 2 * pad);
  const y = (v) => h - pad - (v / ymax) * (h - 2 * pad);
  const svg = document.createElementNS(SVG, "svg");
  svg.setAttribute("width", w);
  svg.setAttribute("height", h);
  for (const m of marks) {
    el("line", { x1: x(m), x2: x(m), y1: pad, y2: h - pad, stroke: "#c66", "stroke-dasharray": "4 3" }, svg);
  }
  const colors = ["#246", "#6a3", "#a63", "#999"];
  series.forEach((pts, k) => {
    const d = pts.map(([a, b], i) => `${i ? "L" : "M"}${x(a)},${y(b)}`).join("");
    el("path", { d, fill: "none", stroke: colors[k % colors.length], "stroke-width": 2 }, svg);
  });
  el("text", { x: pad, y: h - 8, "font-size": 11 }, svg).textContent = "0";
  el("text", { x: w - pad - 20, y: h - 8, "font-size": 11 }, svg).textContent = xmax.toPrecision(3);
  el("text", { x: 2, y: pad, "font-size": 11 }, svg).textContent = ymax.toPrecision(3);
  out.appendChild(svg);
}

function run() {
  const out = $("run-out");
  const v = call(out, () => m_add_demo($("instance").value));
  if (!v) return;
  const rows = v.branches.map((b) => [
    b.branch,
    b.probability.toFixed(4),
    b.allocation.join(", "),
    b.payments.map((p) => p.exact).join(", "),
    b.total.exact,
    b.value.exact,
  ]);
  const th = v.thresholds.map((ts, i) => [i, ts.map((t) => t.exact).join(", ")]);
  out.innerHTML =
    table(["branch", "probability", "allocation", "payments", "total", "value"], rows) +
    `<p>Budget ${v.budget.exact}; fallback seller ${v.star_seller}.</p>` +
    table(["seller", "unit thresholds"], th);
}

function curve() {
  const out = $("curve-out");
  const v = call(out, () => threshold_curve($("instance").value, Number($("seller").value), 200));
  if (!v) return;
  out.innerHTML = "<p>Units won against the seller's own bid; dashed lines are unit thresholds.</p>";
  const pts = v.samples.map((s) => [s.bid, s.units]);
  const ymax = Math.max(1, ...pts.map((p) => p[1]));
  plot(out, [pts], v.budget, ymax, v.thresholds.map((t) => t.approx));
}

function sweep() {
  const out = $("sweep-out");
  const from = Number($("from").value), to = Number($("to").value);
  const v = call(out, () => ratio_sweep_csv(from, to));
  if (!v) return;
  const rows = v.csv.trim().split("\n").slice(1).map((l) => l.split(",").map(Number));
  out.innerHTML = "<p>Blue: measured ratio of the additive mechanism. Green: the subadditive mixture. " +
    "Brown: ln n. Grey: 4(1 + ln n).</p>";
  const xmax = Math.max(...rows.map((r) => r[0]));
  const ymax = Math.max(...rows.map((r) => Math.max(r[1], r[2], r[4])));
  plot(out, [1, 2, 3, 4].map((c) => rows.map((r) => [r[0], r[c]])), xmax, ymax);
}

await init();
$("run").onclick = run;
$("curve").onclick = curve;
$("sweep").onclick = sweep;
run();
