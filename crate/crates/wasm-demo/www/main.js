import init, { hopf_link, field_slice, pulsation_sweep } from "./pkg/helicity_wasm.js";

const $ = (id) => document.getElementById(id);

function updateLink() {
  const d = parseFloat($("sep").value);
  const n = parseInt($("segs").value, 10);
  $("sep-val").textContent = d.toFixed(2);
  try {
    $("link-val").textContent = hopf_link(d, n).toFixed(4);
  } catch (e) {
    // circles touching at d = 0 or |d| = 2 are rejected by the kernel
    $("link-val").textContent = String(e.message ?? e);
  }
}

function drawSlice() {
  const canvas = $("slice");
  const n = canvas.width;
  const data = field_slice($("kind").value, n, parseFloat($("twist").value));
  let max = 0;
  for (let k = 0; k < n * n; k++) {
    const m = Math.hypot(data[3 * k], data[3 * k + 1], data[3 * k + 2]);
    if (m > max) max = m;
  }
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(n, n);
  for (let k = 0; k < n * n; k++) {
    const [fx, fz, fy] = [data[3 * k], data[3 * k + 1], data[3 * k + 2]];
    const level = max > 0 ? Math.sqrt(Math.hypot(fx, fz, fy) / max) : 0;
    const warm = fy >= 0;
    img.data[4 * k] = 255 * (warm ? level : 0.25 * level);
    img.data[4 * k + 1] = 255 * 0.35 * level;
    img.data[4 * k + 2] = 255 * (warm ? 0.25 * level : level);
    img.data[4 * k + 3] = 255;
  }
  ctx.putImageData(img, 0, 0);
}

function runSweep() {
  const args = ["amp", "freq", "h"].map((id) => parseFloat($(id).value));
  const nt = parseInt($("nt").value, 10);
  $("sweep-msg").textContent = "running…";
  $("sweep").innerHTML = "";
  // yield once so the message paints before the blocking call
  setTimeout(() => {
    const t0 = performance.now();
    let rows;
    try {
      rows = pulsation_sweep(args[0], args[1], args[2], nt);
    } catch (e) {
      $("sweep-msg").innerHTML = `<span class="err">${e.message ?? e}</span>`;
      return;
    }
    const head = "<tr><th>t</th><th>H</th><th>E</th><th>E₀/s</th><th>dE/dt formula</th><th>dE/dt difference</th></tr>";
    const e0 = rows[2];
    const amp = args[0], nu = args[1];
    let body = "";
    for (let k = 0; k < rows.length; k += 5) {
      const t = rows[k];
      const s = 1 + amp * Math.sin(nu * t);
      const cells = [t, rows[k + 1], rows[k + 2], e0 / s, rows[k + 3], rows[k + 4]];
      body += "<tr>" + cells.map((v) => `<td>${v.toPrecision(6)}</td>`).join("") + "</tr>";
    }
    $("sweep").innerHTML = head + body;
    $("sweep-msg").textContent = `${rows.length / 5} times in ${(performance.now() - t0).toFixed(0)} ms`;
  }, 10);
}

async function main() {
  await init();
  $("status").textContent = "Ready.";
  $("sep").addEventListener("input", updateLink);
  $("segs").addEventListener("change", updateLink);
  $("kind").addEventListener("change", drawSlice);
  $("twist").addEventListener("input", drawSlice);
  $("run").addEventListener("click", runSweep);
  updateLink();
  drawSlice();
}

main().catch((e) => {
  $("status").innerHTML = `<span class="err">Failed to load: ${e}</span>`;
});
