import init, { scoreTiers, knobTradeoff, waterfallDemo } from "./pkg/ntier_web.js";

const $ = (id) => document.getElementById(id);
const COLORS = ["#d62728", "#ff7f0e", "#bcbd22", "#2ca02c", "#17becf", "#1f77b4"];

function call(f, out) {
  try {
    return JSON.parse(f());
  } catch (e) {
    out.innerHTML = `<p class="err">${e.message ?? e}</p>`;
    return null;
  }
}

function renderScores() {
  const out = $("score-out");
  const rows = call(() => scoreTiers(+$("wc").value, +$("wl").value, +$("wt").value), out);
  if (!rows) return;
  const body = rows
    .map((r, i) => `<tr><td>${i + 1}</td><td>${r.tier}</td><td>${r.score.toFixed(3)}</td>` +
      `<td>${r.ratio.toFixed(2)}</td><td>${r.latency_ns}</td>` +
      r.scaled.map((s) => `<td>${s.toFixed(2)}</td>`).join("") + "</tr>")
    .join("");
  out.innerHTML = `<table><tr><th>#</th><th>tier</th><th>score</th><th>ratio</th><th>decomp ns</th>` +
    `<th>C</th><th>L</th><th>T</th></tr>${body}</table>`;
}

function renderKnob() {
  const knob = +$("knob-v").value, skew = +$("skew-v").value;
  $("knob-l").textContent = knob.toFixed(2);
  $("skew-l").textContent = skew.toFixed(1);
  const out = $("knob-out");
  const t = call(() => knobTradeoff(knob, skew), out);
  if (!t) return;
  const s = t.selected;
  const names = ["DRAM", ...t.tiers];
  out.innerHTML = `<p>savings ${s.savings_pct.toFixed(1)}%, modelled overhead ${s.perf_ovh_ms.toFixed(3)} ms<br>` +
    s.histogram.map((n, i) => `${names[i]}: ${n}`).join(", ") + "</p>";

  const c = $("knob-c"), g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  const pad = 40, w = c.width - 2 * pad, h = c.height - 2 * pad;
  const maxOvh = Math.max(...t.curve.map((p) => p.perf_ovh_ms), 1e-9);
  const maxSav = Math.max(...t.curve.map((p) => p.savings_pct), 1e-9);
  const x = (k) => pad + k * w;
  const line = (key, max, color) => {
    g.strokeStyle = color;
    g.beginPath();
    t.curve.forEach((p, i) => {
      const y = pad + h - (p[key] / max) * h;
      i ? g.lineTo(x(p.knob), y) : g.moveTo(x(p.knob), y);
    });
    g.stroke();
  };
  g.strokeStyle = "#999";
  g.strokeRect(pad, pad, w, h);
  line("savings_pct", maxSav, "#2ca02c");
  line("perf_ovh_ms", maxOvh, "#d62728");
  g.strokeStyle = "#000";
  g.setLineDash([4, 4]);
  g.beginPath();
  g.moveTo(x(knob), pad);
  g.lineTo(x(knob), pad + h);
  g.stroke();
  g.setLineDash([]);
  g.fillStyle = "#222";
  g.fillText("knob 0", pad, c.height - 10);
  g.fillText("1", pad + w - 4, c.height - 10);
  g.fillStyle = "#2ca02c";
  g.fillText(`savings (max ${maxSav.toFixed(1)}%)`, pad, 20);
  g.fillStyle = "#d62728";
  g.fillText(`overhead (max ${maxOvh.toFixed(2)} ms)`, pad + 220, 20);
}

function renderWaterfall() {
  const out = $("wf-out");
  const frames = call(() => waterfallDemo(+$("wf-t").value, +$("wf-w").value, +$("wf-e").value), out);
  if (!frames) return;
  out.innerHTML = "";
  const c = $("wf-c"), g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  const rows = frames.length, cols = frames[0]?.placement.length ?? 0;
  const cw = c.width / Math.max(cols, 1), ch = c.height / Math.max(rows, 1);
  frames.forEach((f, r) =>
    f.placement.forEach((p, col) => {
      g.fillStyle = COLORS[p % COLORS.length];
      g.fillRect(col * cw, r * ch, Math.ceil(cw), Math.ceil(ch));
    }));
  const tiers = frames[0]?.histogram.length ?? 0;
  $("wf-legend").innerHTML = Array.from({ length: tiers }, (_, i) =>
    `<span><i style="background:${COLORS[i % COLORS.length]}"></i>${i ? "T" + i : "DRAM"}</span>`).join("") +
    "<span>rows are windows, columns are regions</span>";
}

await init();
for (const id of ["wc", "wl", "wt"]) $(id).addEventListener("input", renderScores);
for (const id of ["knob-v", "skew-v"]) $(id).addEventListener("input", renderKnob);
$("wf-run").addEventListener("click", renderWaterfall);
renderScores();
renderKnob();
renderWaterfall();
