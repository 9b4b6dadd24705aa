import init, { plan_curves, ritz_nodes, estimate_decay } from "./pkg/slq_web.js";

const COLORS = { relative: "#d62728", optimized: "#1f77b4" };

function formValues(form) {
  return Object.fromEntries(new FormData(form).entries());
}

function showError(el, err) {
  el.textContent = String(err);
  el.classList.add("error");
}

function clearError(el) {
  el.classList.remove("error");
}

// Maps data ranges onto a canvas with fixed margins.
function frame(canvas, x0, x1, y0, y1) {
  const m = { left: 60, right: 20, top: 15, bottom: 35 };
  const w = canvas.width - m.left - m.right;
  const h = canvas.height - m.top - m.bottom;
  return {
    m, w, h,
    x: (v) => m.left + ((v - x0) / (x1 - x0 || 1)) * w,
    y: (v) => m.top + h - ((v - y0) / (y1 - y0 || 1)) * h,
  };
}

function axes(ctx, f, xTicks, yTicks) {
  ctx.strokeStyle = "#000";
  ctx.strokeRect(f.m.left, f.m.top, f.w, f.h);
  ctx.fillStyle = "#000";
  ctx.font = "11px sans-serif";
  ctx.textAlign = "center";
  for (const [v, label] of xTicks) {
    ctx.fillText(label, f.x(v), f.m.top + f.h + 15);
  }
  ctx.textAlign = "right";
  for (const [v, label] of yTicks) {
    ctx.fillText(label, f.m.left - 5, f.y(v) + 4);
    ctx.strokeStyle = "#eee";
    ctx.beginPath();
    ctx.moveTo(f.m.left, f.y(v));
    ctx.lineTo(f.m.left + f.w, f.y(v));
    ctx.stroke();
  }
}

function drawCurves() {
  const form = document.getElementById("curves-form");
  const info = document.getElementById("curves-info");
  const { n, r, eta } = formValues(form);
  let data;
  try {
    data = JSON.parse(plan_curves(Number(n), Number(r), Number(eta)));
  } catch (e) {
    return showError(info, e);
  }
  clearError(info);
  const canvas = document.getElementById("curves");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const all = [...data.relative, ...data.optimized].map((p) => Math.log10(p.mvm));
  const y0 = Math.floor(Math.min(...all));
  const y1 = Math.ceil(Math.max(...all));
  const f = frame(canvas, 0.01, 0.2, y0, y1);
  const yTicks = [];
  for (let e = y0; e <= y1; e++) yTicks.push([e, `1e${e}`]);
  axes(ctx, f, [0.01, 0.05, 0.1, 0.15, 0.2].map((v) => [v, String(v)]), yTicks);
  for (const key of ["relative", "optimized"]) {
    ctx.strokeStyle = COLORS[key];
    ctx.lineWidth = 2;
    ctx.beginPath();
    data[key].forEach((p, i) => {
      const px = f.x(p.eps_star);
      const py = f.y(Math.log10(p.mvm));
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.stroke();
    ctx.lineWidth = 1;
  }
  ctx.textAlign = "left";
  ctx.fillStyle = COLORS.relative;
  ctx.fillText("relative", f.m.left + f.w - 80, f.m.top + 15);
  ctx.fillStyle = COLORS.optimized;
  ctx.fillText("optimized", f.m.left + f.w - 80, f.m.top + 30);

  const i = 9;
  const rel = data.relative[i];
  const opt = data.optimized[i];
  info.textContent =
    `eps* = ${rel.eps_star}: relative m=${rel.m} N=${rel.N} MVM=${rel.mvm}; ` +
    `optimized m=${opt.m} N=${opt.N} MVM=${opt.mvm} (alpha*=${data.alpha_star[i].toFixed(3)}, ` +
    `${((100 * opt.mvm) / rel.mvm).toFixed(1)}% of relative)`;
}

function drawNodes() {
  const form = document.getElementById("nodes-form");
  const info = document.getElementById("nodes-info");
  const { case: c, m } = formValues(form);
  form.elements.mval.value = m;
  let d;
  try {
    d = JSON.parse(ritz_nodes(Number(c), Number(m)));
  } catch (e) {
    return showError(info, e);
  }
  clearError(info);
  const canvas = document.getElementById("nodes");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const lo = d.eigenvalues[0];
  const hi = d.eigenvalues[d.eigenvalues.length - 1];
  const top = Math.max(...d.weights, ...d.masses);
  const f = frame(canvas, lo, hi, 0, top * 1.05);
  const ticks = [lo, (lo + hi) / 2, hi].map((v) => [v, v.toFixed(3)]);
  axes(ctx, f, ticks, [[0, "0"], [top, top.toFixed(2)]]);
  ctx.fillStyle = "#bbb";
  d.eigenvalues.forEach((t, k) => {
    ctx.fillRect(f.x(t) - 1, f.y(d.masses[k]), 2, f.y(0) - f.y(d.masses[k]));
  });
  ctx.strokeStyle = "#2ca02c";
  ctx.setLineDash([4, 4]);
  ctx.beginPath();
  ctx.moveTo(f.x(d.lambda_bar), f.m.top);
  ctx.lineTo(f.x(d.lambda_bar), f.m.top + f.h);
  ctx.stroke();
  ctx.setLineDash([]);
  ctx.fillStyle = "#1f77b4";
  d.nodes.forEach((t, k) => {
    ctx.beginPath();
    ctx.arc(f.x(t), f.y(d.weights[k]), 4, 0, 2 * Math.PI);
    ctx.fill();
  });
  const yes = (b) => (b === null ? "n/a" : b ? "yes" : "no");
  info.textContent =
    `center ${d.lambda_bar.toFixed(4)} | spectrum symmetric: ${yes(d.spectrum_symmetric)} | ` +
    `symmetric start: ${yes(d.sav_holds)}\n` +
    `max |alpha_k - center| = ${d.diag_residual.toExponential(2)}, ` +
    `max node mirror residual = ${d.node_residual.toExponential(2)} -> ` +
    (d.symmetric ? "symmetric nodes" : "asymmetric nodes");
}

function runEstimate() {
  const form = document.getElementById("estimate-form");
  const info = document.getElementById("estimate-info");
  const v = formValues(form);
  let d;
  const t0 = performance.now();
  try {
    d = JSON.parse(
      estimate_decay(Number(v.n), Number(v.r), Number(v.scale), Number(v.m), Number(v.N), BigInt(v.seed)),
    );
  } catch (e) {
    return showError(info, e);
  }
  clearError(info);
  const ms = performance.now() - t0;
  info.textContent =
    `estimate ${d.estimate.toFixed(6)}  exact ${d.exact.toFixed(6)}  ` +
    `relative error ${d.rel_err.toExponential(2)}  MVMs ${d.mvm_total}  (${ms.toFixed(0)} ms)`;

  // histogram of per-query values n * I_m
  const canvas = document.getElementById("estimate");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const q = d.per_query;
  let lo = Math.min(...q, d.exact);
  let hi = Math.max(...q, d.exact);
  if (hi - lo < 1e-9 * Math.max(1, Math.abs(hi))) {
    lo -= 0.5;
    hi += 0.5;
  }
  const bins = 30;
  const counts = new Array(bins).fill(0);
  for (const x of q) counts[Math.min(bins - 1, Math.floor(((x - lo) / (hi - lo)) * bins))]++;
  const f = frame(canvas, lo, hi, 0, Math.max(...counts));
  axes(ctx, f, [[lo, lo.toFixed(2)], [hi, hi.toFixed(2)]], [[0, "0"], [Math.max(...counts), String(Math.max(...counts))]]);
  ctx.fillStyle = "#1f77b4";
  const bw = f.w / bins;
  counts.forEach((c, i) => ctx.fillRect(f.m.left + i * bw + 1, f.y(c), bw - 2, f.y(0) - f.y(c)));
  ctx.strokeStyle = "#d62728";
  ctx.beginPath();
  ctx.moveTo(f.x(d.exact), f.m.top);
  ctx.lineTo(f.x(d.exact), f.m.top + f.h);
  ctx.stroke();
}

async function main() {
  await init();
  document.getElementById("status").textContent = "";
  document.getElementById("curves-form").addEventListener("submit", (e) => {
    e.preventDefault();
    drawCurves();
  });
  document.getElementById("nodes-form").addEventListener("input", drawNodes);
  document.getElementById("estimate-form").addEventListener("submit", (e) => {
    e.preventDefault();
    runEstimate();
  });
  drawCurves();
  drawNodes();
  runEstimate();
}

main().catch((e) => showError(document.getElementById("status"), e));
