import init, { densityCurve, kernelProfile, besselZeros } from "./pkg/hitfun_web.js";

const num = (id) => parseFloat(document.getElementById(id).value);

function say(id, text, isError = false) {
  const el = document.getElementById(id);
  el.textContent = text;
  el.className = isError ? "err" : "";
}

// series: [{ points: [[x, y], ..], color }], both axes logarithmic
function plotLogLog(canvas, series) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 50;
  ctx.clearRect(0, 0, w, h);
  const pts = series.flatMap((s) => s.points).filter(([x, y]) => x > 0 && y > 0);
  if (pts.length === 0) return;
  const lx = pts.map(([x]) => Math.log10(x));
  const ly = pts.map(([, y]) => Math.log10(y));
  const [x0, x1] = [Math.min(...lx), Math.max(...lx)];
  const [y0, y1] = [Math.min(...ly), Math.max(...ly)];
  const sx = (x) => pad + ((Math.log10(x) - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const sy = (y) => h - pad - ((Math.log10(y) - y0) / (y1 - y0 || 1)) * (h - 2 * pad);

  ctx.strokeStyle = "#888";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#333";
  ctx.font = "12px sans-serif";
  ctx.fillText(`1e${x0.toFixed(1)}`, pad, h - pad + 16);
  ctx.fillText(`1e${x1.toFixed(1)}`, w - pad - 30, h - pad + 16);
  ctx.fillText(`1e${y1.toFixed(1)}`, 4, pad + 4);
  ctx.fillText(`1e${y0.toFixed(1)}`, 4, h - pad);

  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.setLineDash(s.dashed ? [6, 4] : []);
    ctx.beginPath();
    let started = false;
    for (const [x, y] of s.points) {
      if (!(x > 0 && y > 0)) { started = false; continue; }
      if (started) ctx.lineTo(sx(x), sy(y)); else ctx.moveTo(sx(x), sy(y));
      started = true;
    }
    ctx.stroke();
  }
  ctx.setLineDash([]);
}

function chunk(flat, k) {
  const out = [];
  for (let i = 0; i < flat.length; i += k) out.push(Array.from(flat.slice(i, i + k)));
  return out;
}

function drawDensity() {
  try {
    const rows = chunk(densityCurve(num("d-mu"), num("d-x"), num("d-lo"), num("d-hi"), 120), 2);
    plotLogLog(document.getElementById("d-plot"), [{ points: rows, color: "#1f77b4" }]);
    const [t, q] = rows[rows.length - 1];
    say("d-msg", `q(${t.toPrecision(4)}) = ${q.toExponential(6)}`);
  } catch (e) {
    say("d-msg", e.message, true);
  }
}

function drawKernel() {
  try {
    const rows = chunk(kernelProfile(num("k-n"), num("k-mu"), num("k-x"), 0.01, num("k-hi"), 60), 3);
    const sub = rows.map(([r, p]) => [r, p]);
    const closed = rows.filter(([, , c]) => Number.isFinite(c)).map(([r, , c]) => [r, c]);
    plotLogLog(document.getElementById("k-plot"), [
      { points: sub, color: "#2ca02c" },
      { points: closed, color: "#d62728", dashed: true },
    ]);
    const worst = rows.reduce((m, [, p, c]) => (Number.isFinite(c) ? Math.max(m, Math.abs(c - p) / p) : m), 0);
    say("k-msg", closed.length
      ? `solid: subordination, dashed: closed form; max relative difference ${worst.toExponential(2)}`
      : "closed form not available for these parameters; subordination only");
  } catch (e) {
    say("k-msg", e.message, true);
  }
}

function listZeros() {
  const table = document.getElementById("z-table");
  table.innerHTML = "";
  try {
    const zs = chunk(besselZeros(num("z-mu")), 2);
    if (zs.length === 0) {
      say("z-msg", "no zeros off the negative real axis for this order");
      return;
    }
    table.innerHTML = "<tr><th>#</th><th>Re z</th><th>Im z</th></tr>" +
      zs.map(([re, im], i) => `<tr><td>${i + 1}</td><td>${re.toFixed(12)}</td><td>${im.toFixed(12)}</td></tr>`).join("");
    say("z-msg", `${zs.length} zeros`);
  } catch (e) {
    say("z-msg", e.message, true);
  }
}

await init();
document.getElementById("d-go").addEventListener("click", drawDensity);
document.getElementById("k-go").addEventListener("click", drawKernel);
document.getElementById("z-go").addEventListener("click", listZeros);
drawDensity();
listZeros();
