import init, { logConstants, scalarCurves, fiberingMap, solveProblem } from "./pkg/logdp_wasm_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

function fail(out, e) {
  out.className = "out err";
  out.textContent = String(e);
}

// Draws several series on one canvas; each series is [xs, ys, colour].
// With `logx` the horizontal axis is logarithmic.
function plot(canvas, series, { logx = false, marks = [] } = {}) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, pad = 40;
  ctx.clearRect(0, 0, W, H);
  const fx = logx ? Math.log : (x) => x;
  let x0 = Infinity, x1 = -Infinity, y0 = Infinity, y1 = -Infinity;
  for (const [xs, ys] of series) {
    xs.forEach((x, i) => {
      x0 = Math.min(x0, fx(x)); x1 = Math.max(x1, fx(x));
      if (isFinite(ys[i])) { y0 = Math.min(y0, ys[i]); y1 = Math.max(y1, ys[i]); }
    });
  }
  if (y1 === y0) y1 = y0 + 1;
  const X = (x) => pad + (fx(x) - x0) / (x1 - x0) * (W - 2 * pad);
  const Y = (y) => H - pad - (y - y0) / (y1 - y0) * (H - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(pad, H - pad); ctx.lineTo(W - pad, H - pad);
  ctx.moveTo(pad, pad); ctx.lineTo(pad, H - pad);
  if (y0 < 0 && y1 > 0) { ctx.moveTo(pad, Y(0)); ctx.lineTo(W - pad, Y(0)); }
  ctx.stroke();
  ctx.fillStyle = "#555";
  ctx.fillText(y1.toPrecision(4), 2, pad);
  ctx.fillText(y0.toPrecision(4), 2, H - pad);
  ctx.fillText((logx ? Math.exp(x0) : x0).toPrecision(3), pad, H - pad + 14);
  ctx.fillText((logx ? Math.exp(x1) : x1).toPrecision(3), W - pad - 30, H - pad + 14);
  for (const [xs, ys, colour] of series) {
    ctx.strokeStyle = colour;
    ctx.beginPath();
    xs.forEach((x, i) => (i ? ctx.lineTo(X(x), Y(ys[i])) : ctx.moveTo(X(x), Y(ys[i]))));
    ctx.stroke();
  }
  for (const [x, y, colour] of marks) {
    ctx.fillStyle = colour;
    ctx.beginPath();
    ctx.arc(X(x), Y(y), 4, 0, 2 * Math.PI);
    ctx.fill();
  }
}

function columns(flat, width) {
  const cols = Array.from({ length: width }, () => []);
  for (let i = 0; i < flat.length; i += width) for (let j = 0; j < width; j++) cols[j].push(flat[i + j]);
  return cols;
}

function runCurves() {
  const out = $("c-out");
  try {
    const [t, h, a, f] = columns(scalarCurves(num("c-p"), num("c-q"), num("c-mu"), num("c-eps"), num("c-tmax"), 400), 4);
    const scale = (v) => { const m = Math.max(...v); return v.map((x) => x / m); };
    plot($("c-canvas"), [[t, scale(h), "#1f77b4"], [t, scale(a), "#2ca02c"], [t, scale(f), "#d62728"]]);
    out.className = "out";
    out.textContent = "blue H_log(t), green a(t), red f_ε(t) = t^ε / log(e+t); each scaled to max 1";
  } catch (e) { fail(out, e); }
}

function runFibering() {
  const out = $("f-out");
  try {
    const r = fiberingMap(num("f-n"), num("f-p"), num("f-q"), num("f-mu"), "power", num("f-r"), num("f-amp"), 300);
    const [tu, peak] = [r[0], r[1]];
    const [t, theta] = columns(r.slice(2), 2);
    plot($("f-canvas"), [[t, theta, "#1f77b4"]], { logx: true, marks: [[tu, peak, "#d62728"]] });
    out.className = "out";
    out.textContent = `t_u = ${tu.toPrecision(10)}   θ(t_u) = ${peak.toPrecision(10)}   (log t axis)`;
  } catch (e) { fail(out, e); }
}

function runSolve() {
  const out = $("s-out");
  out.className = "out";
  out.textContent = "solving…";
  // let the message paint before the synchronous solve
  setTimeout(() => {
    try {
      const n = Math.round(num("s-n"));
      const r = solveProblem(n, num("s-p"), num("s-q"), num("s-mu"), "example_i", num("s-eps"), $("s-mode").value);
      const [energy, residual, npos, nneg, iters] = r.slice(0, 5);
      const nodes = columns(r.slice(5), 3);
      const ctx = $("s-canvas").getContext("2d");
      const W = $("s-canvas").width, cell = W / (n + 1);
      const vmax = Math.max(...nodes[2].map(Math.abs)) || 1;
      ctx.clearRect(0, 0, W, W);
      nodes[0].forEach((x, i) => {
        const v = nodes[2][i] / vmax;
        const c = Math.round(255 * (1 - Math.abs(v)));
        ctx.fillStyle = v >= 0 ? `rgb(255,${c},${c})` : `rgb(${c},${c},255)`;
        ctx.fillRect(x * n * cell, (1 - nodes[1][i]) * n * cell, cell + 0.5, cell + 0.5);
      });
      out.textContent =
        `energy ${energy.toExponential(8)}   residual ${residual.toExponential(2)}   ` +
        `nodal domains (+${npos}, −${nneg})   iterations ${iters}   sup|u| ${vmax.toExponential(4)}`;
    } catch (e) { fail(out, e); }
  }, 10);
}

await init();
const [t0, kappa] = logConstants();
$("constants").textContent = `t0 = ${t0.toPrecision(12)}   κ = e/(e+t0) = ${kappa.toPrecision(12)}`;
$("c-run").onclick = runCurves;
$("f-run").onclick = runFibering;
$("s-run").onclick = runSolve;
runCurves();
runFibering();
